"""PCA dimensionality reduction feeding a one-vs-rest linear SVM.

The baseline classifier route: clips are flattened into raw pixel feature
vectors (12 frames downscaled to 32x32, mapped into [-1, 1]), projected
onto the top principal components, and separated by hyperplanes trained
with sub-gradient descent on L2-regularized hinge loss.
"""

from dataclasses import dataclass

import numpy as np

from .video import CLIP_LENGTH, Clip, bilinear_resize
from .nn.weights_io import ModelWeights, ShapeMismatchError

PIPELINE_FRAME_SIZE = 32


@dataclass
class PCAModel:
    mean: np.ndarray           # (d,)
    components: np.ndarray     # (k, d), orthonormal rows
    explained_variance: np.ndarray  # (k,), non-increasing

    @property
    def k(self):
        return self.components.shape[0]


def pca_fit(data, k):
    """Top-k principal directions of the sample covariance.

    Components are orthonormal, ordered by decreasing variance, and
    sign-fixed so each row's largest-magnitude entry is positive.
    Constant (zero-variance) data is accepted: variances come out zero.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError("data must be a 2-D (samples x features) matrix")
    n, d = data.shape
    if n < 2:
        raise ValueError("need at least 2 samples")
    if not 1 <= k <= min(n - 1, d):
        raise ValueError(f"k must be in [1, min(n-1, d)] = [1, {min(n - 1, d)}], got {k}")
    mean = data.mean(axis=0)
    centered = data - mean
    # economy SVD of the centered data: right singular vectors are the
    # covariance eigenvectors, singular values give the variances
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:k]
    variance = (s[:k] ** 2) / (n - 1)
    # sign convention: largest-|entry| (first on ties) made positive
    for row in components:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    return PCAModel(mean=mean, components=np.ascontiguousarray(components),
                    explained_variance=variance)


def pca_transform(model, x):
    """Project vectors (or rows) onto the principal components."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.mean.shape[0]:
        raise ValueError(f"feature dim {x.shape[-1]} != PCA dim {model.mean.shape[0]}")
    return (x - model.mean) @ model.components.T


def pca_inverse_transform(model, z):
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != model.k:
        raise ValueError(f"projected dim {z.shape[-1]} != k {model.k}")
    return z @ model.components + model.mean


@dataclass
class SVMModel:
    weights: np.ndarray   # (num_classes, k)
    biases: np.ndarray    # (num_classes,)
    regularization: float
    vocabulary: list = None

    @property
    def num_classes(self):
        return self.weights.shape[0]


def _hinge_objective(w, b, x, signs, c):
    margins = 1.0 - signs * (x @ w + b)
    hinge = np.maximum(margins, 0.0)
    return 0.5 * float(w @ w) + c * float(hinge.mean())


def svm_train(features, labels, regularization=1.0, epochs=200,
              learning_rate=0.1, seed=0, batch_size=None):
    """One-vs-rest linear SVMs via seeded sub-gradient descent.

    Full-batch by default (deterministic descent on the exact objective);
    pass batch_size for seeded mini-batch updates. Objective per class is
    0.5*||w||^2 + C * mean(hinge).
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("features must be (n, k) with one label per row")
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("need at least two distinct classes")
    num_classes = int(y.max()) + 1
    n, k = x.shape
    if n < num_classes:
        raise ValueError(f"need at least {num_classes} samples, got {n}")
    rng = np.random.default_rng(seed)
    weights = np.zeros((num_classes, k))
    biases = np.zeros(num_classes)
    c = float(regularization)
    for cls in range(num_classes):
        signs = np.where(y == cls, 1.0, -1.0)
        w = np.zeros(k)
        b = 0.0
        for epoch in range(epochs):
            lr = learning_rate / (1.0 + epoch / 50.0)
            if batch_size is None:
                bx, bs = x, signs
            else:
                idx = rng.permutation(n)[:batch_size]
                bx, bs = x[idx], signs[idx]
            viol = bs * (bx @ w + b) < 1.0
            grad_w = w - (c / bx.shape[0]) * (bs[viol] @ bx[viol])
            grad_b = -(c / bx.shape[0]) * bs[viol].sum()
            w = w - lr * grad_w
            b = b - lr * grad_b
        weights[cls] = w
        biases[cls] = b
    return SVMModel(weights=weights, biases=biases, regularization=c)


def svm_decision_values(model, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.weights.shape[1]:
        raise ValueError(f"feature dim {x.shape[-1]} != SVM dim {model.weights.shape[1]}")
    return x @ model.weights.T + model.biases


def svm_predict(model, x):
    """(label, decision values); ties go to the lowest class index."""
    scores = svm_decision_values(model, x)
    if scores.ndim == 1:
        return int(np.argmax(scores)), scores
    return scores.argmax(axis=-1), scores


def clip_features(clip, frame_size=PIPELINE_FRAME_SIZE):
    """Concatenate the 12 preprocessed frames into one flat vector."""
    if isinstance(clip, Clip):
        frames = [f.pixels for f in clip.frames]
    else:
        frames = list(clip)
    if len(frames) != CLIP_LENGTH:
        raise ValueError(f"clip must hold {CLIP_LENGTH} frames")
    parts = []
    for px in frames:
        if px.shape[0] != frame_size or px.shape[1] != frame_size:
            px = bilinear_resize(px, frame_size, frame_size)
        parts.append(np.asarray(px, dtype=np.float64).ravel() / 127.5 - 1.0)
    return np.concatenate(parts)


@dataclass
class PcaSvmPipeline:
    pca: PCAModel
    svm: SVMModel
    vocabulary: list
    frame_size: int = PIPELINE_FRAME_SIZE


def pca_svm_pipeline_fit(dataset, k=64, regularization=1.0, epochs=200,
                         learning_rate=0.1, seed=0,
                         frame_size=PIPELINE_FRAME_SIZE):
    """Fit PCA on flattened clip features, then the OvR SVM on projections."""
    if not len(dataset.items):
        raise ValueError("dataset is empty")
    feats = np.stack([clip_features(clip, frame_size) for clip, _ in dataset.items])
    labels = np.array([label for _, label in dataset.items], dtype=np.int64)
    k = min(k, feats.shape[0] - 1, feats.shape[1])
    pca = pca_fit(feats, k)
    projected = pca_transform(pca, feats)
    svm = svm_train(projected, labels, regularization=regularization,
                    epochs=epochs, learning_rate=learning_rate, seed=seed)
    svm.vocabulary = list(dataset.vocabulary)
    return PcaSvmPipeline(pca=pca, svm=svm, vocabulary=list(dataset.vocabulary),
                          frame_size=frame_size)


def pca_svm_pipeline_predict(pipeline, clip):
    """(label, word, decision values) for one clip."""
    z = pca_transform(pipeline.pca, clip_features(clip, pipeline.frame_size))
    label, scores = svm_predict(pipeline.svm, z)
    word = pipeline.vocabulary[label] if pipeline.vocabulary else None
    return label, word, scores


def pipeline_accuracy(pipeline, dataset):
    correct = sum(
        pca_svm_pipeline_predict(pipeline, clip)[0] == label
        for clip, label in dataset.items
    )
    return correct / len(dataset.items)


def save_pipeline(pipeline):
    """Persist in the SLW1 container (pca.mean/pca.components/svm.weights/svm.bias).

    Explained variances are not stored: prediction never uses them.
    """
    return ModelWeights([
        ("pca.mean", pipeline.pca.mean.astype(np.float32)),
        ("pca.components", pipeline.pca.components.astype(np.float32)),
        ("svm.weights", pipeline.svm.weights.astype(np.float32)),
        ("svm.bias", pipeline.svm.biases.astype(np.float32)),
    ])


def load_pipeline(weights, vocabulary=None, frame_size=PIPELINE_FRAME_SIZE):
    records = dict(weights.records)
    try:
        pca = PCAModel(
            mean=records["pca.mean"].astype(np.float64),
            components=records["pca.components"].astype(np.float64),
            explained_variance=np.zeros(records["pca.components"].shape[0]),
        )
        svm = SVMModel(
            weights=records["svm.weights"].astype(np.float64),
            biases=records["svm.bias"].astype(np.float64),
            regularization=1.0,
            vocabulary=vocabulary,
        )
    except KeyError as exc:
        raise ShapeMismatchError(f"missing pipeline record {exc}") from exc
    if pca.components.shape[1] != pca.mean.shape[0]:
        raise ShapeMismatchError("pca.components width != pca.mean length")
    if svm.weights.shape[1] != pca.components.shape[0]:
        raise ShapeMismatchError("svm.weights width != number of components")
    return PcaSvmPipeline(pca=pca, svm=svm, vocabulary=vocabulary,
                          frame_size=frame_size)
