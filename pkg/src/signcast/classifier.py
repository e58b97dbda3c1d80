"""Frame-level sign classifier: a reduced depthwise-separable backbone with
an average-pool + wide-dense + heavy-dropout + softmax head.

The network classifies single frames; clip predictions average the twelve
per-frame probability vectors. Training is plain SGD on cross-entropy over
shuffled mini-batches of frames, fully deterministic for a given seed.
"""

import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .video import CLIP_LENGTH, Clip, bilinear_resize

BACKBONE_BASE_WIDTHS = (32, 64, 128)


@dataclass
class ModelConfig:
    height: int = 96
    width: int = 96
    channels: int = 3
    num_classes: int = 10
    width_multiplier: float = 0.25
    hidden_units: int = 1000
    dropout_rate: float = 0.75
    seed: int = 0
    freeze_backbone: bool = False

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.width_multiplier <= 0:
            raise ValueError("width_multiplier must be > 0")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout_rate must be in [0, 1)")
        if min(self.height, self.width, self.channels) < 1:
            raise ValueError("input dimensions must be >= 1")

    @property
    def input_shape(self):
        return (self.height, self.width, self.channels)

    def backbone_widths(self):
        return [max(1, round(w * self.width_multiplier)) for w in BACKBONE_BASE_WIDTHS]


@dataclass
class Prediction:
    """Class probabilities plus the ranked labels derived from them."""

    probabilities: np.ndarray
    top_k: list
    label: int
    word: str = None

    @classmethod
    def from_probabilities(cls, probs, vocabulary=None, k=5):
        probs = np.asarray(probs, dtype=np.float64)
        order = np.argsort(-probs, kind="stable")  # ties -> lower index first
        top = [(int(i), float(probs[i])) for i in order[: min(k, probs.size)]]
        label = top[0][0]
        word = vocabulary[label] if vocabulary else None
        return cls(probabilities=probs, top_k=top, label=label, word=word)


@dataclass
class LabeledDataset:
    """(Clip, class index) pairs plus the index -> word vocabulary."""

    items: list
    vocabulary: list

    def __post_init__(self):
        for clip, label in self.items:
            if len(clip) != CLIP_LENGTH:
                raise ValueError(f"clip {clip.source_id!r} has {len(clip)} frames")
            if not 0 <= label < len(self.vocabulary):
                raise ValueError(f"label {label} out of range for vocabulary "
                                 f"of {len(self.vocabulary)}")

    def __len__(self):
        return len(self.items)


class SignModel:
    """Config + network + vocabulary travelling together."""

    def __init__(self, config, net, vocabulary=None):
        self.config = config
        self.net = net
        self.vocabulary = list(vocabulary) if vocabulary else None


def build_model(config, vocabulary=None):
    """Assemble the layer stack for `config` with seeded initialization."""
    rng = np.random.default_rng(config.seed)
    widths = config.backbone_widths()
    layers = []
    in_ch = config.channels
    for i, out_ch in enumerate(widths, start=1):
        layers.append(nn.DepthwiseConv2D(f"block{i}.dw", in_ch, kernel_size=3,
                                         stride=2, padding="same", rng=rng))
        layers.append(nn.ReLU(f"block{i}.dw_relu"))
        layers.append(nn.PointwiseConv2D(f"block{i}.pw", in_ch, out_ch, rng=rng))
        layers.append(nn.ReLU(f"block{i}.pw_relu"))
        in_ch = out_ch
    layers.append(nn.GlobalAvgPool("head.pool"))
    layers.append(nn.Dense("head.fc1", in_ch, config.hidden_units, rng=rng))
    layers.append(nn.ReLU("head.fc1_relu"))
    layers.append(nn.Dropout("head.dropout", config.dropout_rate,
                             seed=config.seed + 0x5EED))
    layers.append(nn.Dense("head.fc2", config.hidden_units, config.num_classes, rng=rng))
    layers.append(nn.Softmax("head.softmax"))
    net = nn.Model(layers)
    if config.freeze_backbone:
        for layer in net.layers:
            if layer.name.startswith("block"):
                layer.frozen = True
    return SignModel(config, net, vocabulary)


def _check_frame_shape(model, frame):
    expected = model.config.input_shape
    if tuple(frame.shape) != expected:
        raise ValueError(f"frame shape {tuple(frame.shape)} != model input {expected}")


def predict_frame(model, frame):
    """Classify one preprocessed frame tensor (height, width, channels)."""
    frame = np.asarray(frame)
    _check_frame_shape(model, frame)
    probs = model.net.forward(frame[None].astype(np.float32), training=False)[0]
    return Prediction.from_probabilities(probs, model.vocabulary)


def clip_to_tensor(model, clip):
    """Clip of raw frames (or a premade array) -> (12, h, w, c) float32."""
    cfg = model.config
    if isinstance(clip, Clip):
        stack = np.stack([
            _preprocess_uint8(f.pixels, cfg.height, cfg.width) for f in clip.frames
        ])
    else:
        stack = np.asarray(clip, dtype=np.float32)
    if stack.shape != (CLIP_LENGTH, cfg.height, cfg.width, cfg.channels):
        raise ValueError(f"clip tensor has shape {stack.shape}, expected "
                         f"{(CLIP_LENGTH, cfg.height, cfg.width, cfg.channels)}")
    return stack


def predict_clip(model, clip):
    """Mean of the per-frame probability vectors over the 12-frame clip."""
    stack = clip_to_tensor(model, clip)
    frame_probs = model.net.forward(stack, training=False)
    return Prediction.from_probabilities(frame_probs.mean(axis=0), model.vocabulary)


def _preprocess_uint8(pixels, target_h, target_w):
    if pixels.shape[0] == target_h and pixels.shape[1] == target_w:
        scaled = pixels.astype(np.float32)
    else:
        scaled = bilinear_resize(pixels, target_h, target_w).astype(np.float32)
    return scaled / np.float32(127.5) - np.float32(1.0)


def dataset_to_arrays(model, dataset):
    """Stack a LabeledDataset into (clips uint8 (n,12,h,w,3), labels (n,)).

    Frames are resized up front if they do not match the model input, so
    training batches only pay for the uint8 -> [-1, 1] cast.
    """
    cfg = model.config
    clips = np.empty((len(dataset), CLIP_LENGTH, cfg.height, cfg.width, cfg.channels),
                     dtype=np.uint8)
    labels = np.empty(len(dataset), dtype=np.int64)
    for n, (clip, label) in enumerate(dataset.items):
        for t, frame in enumerate(clip.frames):
            px = frame.pixels
            if px.shape[:2] != (cfg.height, cfg.width):
                px = np.clip(np.rint(bilinear_resize(px, cfg.height, cfg.width)),
                             0, 255).astype(np.uint8)
            clips[n, t] = px
        labels[n] = label
    return clips, labels


def _scale_batch(u8):
    return u8.astype(np.float32) / np.float32(127.5) - np.float32(1.0)


def clip_probabilities(model, clips_u8, chunk_frames=256):
    """Per-clip mean softmax for a stacked uint8 clip array."""
    n = clips_u8.shape[0]
    k = model.config.num_classes
    frames = clips_u8.reshape((-1,) + clips_u8.shape[2:])
    probs = np.empty((frames.shape[0], k), dtype=np.float32)
    for start in range(0, frames.shape[0], chunk_frames):
        batch = _scale_batch(frames[start : start + chunk_frames])
        probs[start : start + batch.shape[0]] = model.net.forward(batch, training=False)
    return probs.reshape(n, CLIP_LENGTH, k).mean(axis=1)


@dataclass
class EpochMetrics:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_accuracy: float


@dataclass
class TrainingReport:
    epochs: list
    final_train_accuracy: float
    final_val_accuracy: float
    wall_time_s: float = field(compare=False, default=0.0)


def train(model, train_set, val_set, epochs, learning_rate=0.1, batch_size=32,
          seed=0, stop_train_accuracy=None, stop_val_accuracy=None, log=None):
    """SGD on frame-level cross-entropy; per-epoch metrics are clip-level.

    Optional stop_*_accuracy thresholds end training early once BOTH are
    reached (thresholds that are None count as reached).
    """
    if not len(train_set):
        raise ValueError("training set is empty")
    if val_set is not None and not len(val_set):
        raise ValueError("validation set is empty")
    k = model.config.num_classes
    if any(label >= k for _, label in train_set.items):
        raise ValueError("training label out of range for model")

    t0 = time.monotonic()
    train_clips, train_labels = dataset_to_arrays(model, train_set)
    val_clips, val_labels = (dataset_to_arrays(model, val_set)
                             if val_set is not None else (None, None))
    frames = train_clips.reshape((-1,) + train_clips.shape[2:])
    frame_labels = np.repeat(train_labels, CLIP_LENGTH)

    rng = np.random.default_rng(seed)
    opt = nn.SGD(learning_rate)
    history = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(frames.shape[0])
        losses = []
        for start in range(0, order.size, batch_size):
            idx = order[start : start + batch_size]
            x = _scale_batch(frames[idx])
            y = frame_labels[idx]
            probs = model.net.forward(x, training=True)
            loss, dlogits = nn.cross_entropy_batch(probs, y)
            model.net.backward(dlogits)
            opt.step(model.net)
            losses.append(loss * idx.size)
        train_loss = float(np.sum(losses) / order.size)
        train_acc = float((clip_probabilities(model, train_clips).argmax(axis=1)
                           == train_labels).mean())
        val_acc = (float((clip_probabilities(model, val_clips).argmax(axis=1)
                          == val_labels).mean()) if val_clips is not None else float("nan"))
        history.append(EpochMetrics(epoch, train_loss, train_acc, val_acc))
        if log:
            log(f"epoch {epoch:3d}  loss {train_loss:.4f}  "
                f"train {train_acc:.3f}  val {val_acc:.3f}")
        train_done = stop_train_accuracy is None or train_acc >= stop_train_accuracy
        val_done = stop_val_accuracy is None or (val_clips is not None
                                                 and val_acc >= stop_val_accuracy)
        if (stop_train_accuracy is not None or stop_val_accuracy is not None) \
                and train_done and val_done:
            break
    return TrainingReport(
        epochs=history,
        final_train_accuracy=history[-1].train_accuracy,
        final_val_accuracy=history[-1].val_accuracy,
        wall_time_s=time.monotonic() - t0,
    )


def _sidecar_path(path):
    return Path(str(path) + ".json")


def save_sign_model(model, path):
    """Write weights (SLW1) plus a JSON sidecar with config + vocabulary.

    The weight container stores tensors only, so architecture and label
    words travel in `<path>.json`.
    """
    nn.write_weights_file(path, model.net.state())
    meta = {
        "config": dataclasses.asdict(model.config),
        "vocabulary": model.vocabulary,
    }
    _sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n")


def load_sign_model(path):
    meta_path = _sidecar_path(path)
    if not meta_path.is_file():
        raise FileNotFoundError(
            f"model sidecar {meta_path} not found (expected next to {path})"
        )
    meta = json.loads(meta_path.read_text())
    config = ModelConfig(**meta["config"])
    model = build_model(config, vocabulary=meta.get("vocabulary"))
    model.net.load_state(nn.read_weights_file(path))
    return model


@dataclass
class EvalResult:
    accuracy: float
    per_class_accuracy: np.ndarray
    confusion: np.ndarray  # rows = true class, cols = predicted


def evaluate(model, dataset):
    """Clip-level argmax accuracy, per-class accuracy and confusion matrix."""
    if not len(dataset):
        raise ValueError("dataset is empty")
    clips, labels = dataset_to_arrays(model, dataset)
    preds = clip_probabilities(model, clips).argmax(axis=1)
    k = model.config.num_classes
    confusion = np.zeros((k, k), dtype=np.int64)
    for t, p in zip(labels, preds):
        confusion[t, p] += 1
    counts = confusion.sum(axis=1)
    with np.errstate(invalid="ignore"):
        per_class = np.where(counts > 0, np.diag(confusion) / np.maximum(counts, 1), np.nan)
    return EvalResult(
        accuracy=float((preds == labels).mean()),
        per_class_accuracy=per_class,
        confusion=confusion,
    )
