"""From-scratch neural-network library: ops, layers, model, SGD, weights."""

from . import kernels
from .gradcheck import finite_difference, relative_error
from .layers import (
    Conv2D,
    Dense,
    DepthwiseConv2D,
    Dropout,
    GlobalAvgPool,
    Layer,
    LayerSpec,
    NoRecordedForwardError,
    PointwiseConv2D,
    ReLU,
    Softmax,
)
from .model import Model
from .ops import (
    conv2d,
    cross_entropy,
    cross_entropy_batch,
    dense,
    depthwise_conv2d,
    dropout,
    global_average_pool,
    relu,
    sgd_step,
    softmax,
)
from .optim import SGD
from .weights_io import (
    BadMagicError,
    ModelWeights,
    RecordError,
    ShapeMismatchError,
    TrailingDataError,
    TruncatedFileError,
    UnknownDtypeError,
    VersionMismatchError,
    WeightFormatError,
    load_weights,
    read_weights_file,
    save_weights,
    write_weights_file,
)
