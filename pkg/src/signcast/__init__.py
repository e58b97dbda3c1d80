"""signcast: real-time sign-language captioning at desk scale.

Subpackages:
    nn        from-scratch tensor/layer library with forward+backward passes
    video     frame loading, 12-frame temporal resampling, preprocessing
    classifier MobileNet-style frame classifier, training and evaluation
    pca_svm   PCA + linear SVM baseline classifier
    protocol  wire-level caption message vocabulary (JSON over WebSocket)
    server    room-based caption broadcast server
    capture   desktop capture client: sliding-window inference + publish
"""

__version__ = "0.1.0"
