"""Synthetic moving-shape dataset: a desk-scale stand-in for real signing
videos. Every class is one deterministic motif (shape type x trajectory x
base color); clips vary only through seeded jitter in position, scale and
color, plus pixel noise, so train/val splits test genuine generalization.
"""

import re
from pathlib import Path

import numpy as np

from .classifier import LabeledDataset
from .video import CLIP_LENGTH, Clip, Frame, load_frames, write_ppm

WORDS = [
    "hello", "thanks", "yes", "no", "please", "help", "more", "stop",
    "good", "water", "eat", "drink", "name", "sorry", "family", "friend",
    "work", "play", "where", "finish",
]

_PALETTE = [
    (230, 60, 60), (60, 200, 80), (80, 110, 235), (235, 200, 50),
    (200, 80, 210), (70, 210, 210), (240, 140, 50), (150, 230, 90),
    (120, 90, 220), (230, 120, 170),
]


def vocabulary_for(num_classes):
    return [WORDS[i] if i < len(WORDS) else f"word{i}" for i in range(num_classes)]


def _shape_mask(kind, dx, dy, r):
    adx, ady = np.abs(dx), np.abs(dy)
    if kind == 0:  # disc
        return dx * dx + dy * dy < r * r
    if kind == 1:  # square
        return np.maximum(adx, ady) < r
    if kind == 2:  # diamond
        return adx + ady < r
    if kind == 3:  # ring
        d2 = dx * dx + dy * dy
        return (d2 < r * r) & (d2 > (0.55 * r) ** 2)
    if kind == 4:  # plus
        return ((adx < 0.35 * r) | (ady < 0.35 * r)) & (np.maximum(adx, ady) < r)
    if kind == 5:  # horizontal bar
        return (ady < 0.4 * r) & (adx < r)
    if kind == 6:  # vertical bar
        return (adx < 0.4 * r) & (ady < r)
    if kind == 7:  # triangle (apex down)
        return (ady < r) & (adx < (r - dy) * 0.5)
    if kind == 8:  # X
        return (np.abs(adx - ady) < 0.3 * r) & (np.maximum(adx, ady) < r)
    # 9: checkerboard patch
    cell = np.maximum(r * 0.5, 1.0)
    board = ((np.floor(dx / cell) + np.floor(dy / cell)) % 2 == 0)
    return board & (np.maximum(adx, ady) < r)


def _trajectory(kind, t):
    """Normalized center position for progress t in [0, 1]."""
    lo, hi = 0.3, 0.7
    span = hi - lo
    if kind == 0:  # left -> right
        return lo + span * t, 0.5
    if kind == 1:  # top -> bottom
        return 0.5, lo + span * t
    if kind == 2:  # diagonal
        return lo + span * t, lo + span * t
    if kind == 3:  # anti-diagonal
        return lo + span * t, hi - span * t
    if kind == 4:  # clockwise orbit
        ang = 2 * np.pi * t
        return 0.5 + 0.2 * np.cos(ang), 0.5 + 0.2 * np.sin(ang)
    if kind == 5:  # counter-clockwise orbit
        ang = -2 * np.pi * t
        return 0.5 + 0.2 * np.cos(ang), 0.5 + 0.2 * np.sin(ang)
    if kind == 6:  # right -> left
        return hi - span * t, 0.5
    if kind == 7:  # bottom -> top
        return 0.5, hi - span * t
    if kind == 8:  # horizontal zigzag
        return lo + span * t, 0.5 + 0.15 * np.sin(4 * np.pi * t)
    # 9: lazy figure eight
    ang = 2 * np.pi * t
    return 0.5 + 0.2 * np.sin(ang), 0.5 + 0.12 * np.sin(2 * ang)


def class_motif(class_index):
    """(shape kind, trajectory kind, base color) for a class; distinct per class."""
    shape = class_index % 10
    traj = (class_index + class_index // 10) % 10
    color = _PALETTE[class_index % len(_PALETTE)]
    return shape, traj, color


def render_clip(class_index, rng, image_size=96, frame_count=CLIP_LENGTH,
                source_id=""):
    shape, traj, color = class_motif(class_index)
    scale = rng.uniform(0.8, 1.2)
    off_x, off_y = rng.uniform(-0.08, 0.08, size=2)
    color_jitter = rng.integers(-25, 26, size=3)
    background = int(rng.integers(16, 49))
    base_r = image_size * 0.14 * scale
    rgb = np.clip(np.array(color) + color_jitter, 30, 250).astype(np.float64)

    ys, xs = np.mgrid[0:image_size, 0:image_size].astype(np.float64)
    frames = []
    for t in range(frame_count):
        progress = t / (frame_count - 1)
        cx, cy = _trajectory(traj, progress)
        cx = (cx + off_x) * image_size
        cy = (cy + off_y) * image_size
        canvas = np.full((image_size, image_size, 3), background, dtype=np.float64)
        mask = _shape_mask(shape, xs - cx, ys - cy, base_r)
        canvas[mask] = rgb
        canvas += rng.normal(0.0, 6.0, canvas.shape)
        pixels = np.clip(np.rint(canvas), 0, 255).astype(np.uint8)
        frames.append(Frame(pixels=pixels, source_index=t))
    return Clip(frames=frames, source_id=source_id, source_frame_count=frame_count)


def generate_synthetic_dataset(num_classes, clips_per_class, seed,
                               image_size=96):
    """Deterministic labeled dataset: same seed, same pixels."""
    if num_classes < 2:
        raise ValueError("num_classes must be >= 2")
    rng = np.random.default_rng(seed)
    vocab = vocabulary_for(num_classes)
    items = []
    for cls in range(num_classes):
        for n in range(clips_per_class):
            clip = render_clip(cls, rng, image_size=image_size,
                               source_id=f"class{cls}_clip{n}")
            items.append((clip, cls))
    return LabeledDataset(items=items, vocabulary=vocab)


def split_dataset(dataset, val_fraction=0.2, seed=0):
    """Stratified disjoint train/val split, derived only from the seed."""
    rng = np.random.default_rng(seed)
    by_class = {}
    for item in dataset.items:
        by_class.setdefault(item[1], []).append(item)
    train_items, val_items = [], []
    for cls in sorted(by_class):
        items = by_class[cls]
        order = rng.permutation(len(items))
        n_val = max(1, int(round(len(items) * val_fraction))) if len(items) > 1 else 0
        for pos, idx in enumerate(order):
            (val_items if pos < n_val else train_items).append(items[idx])
    return (LabeledDataset(items=train_items, vocabulary=dataset.vocabulary),
            LabeledDataset(items=val_items, vocabulary=dataset.vocabulary))


def save_dataset(dataset, directory):
    """Write the on-disk layout: labels.txt plus class_<idx>_<word>/clip_NNN/."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    (root / "labels.txt").write_text("\n".join(dataset.vocabulary) + "\n")
    per_class_counter = {}
    for clip, label in dataset.items:
        n = per_class_counter.get(label, 0)
        per_class_counter[label] = n + 1
        clip_dir = root / f"class_{label}_{dataset.vocabulary[label]}" / f"clip_{n:03d}"
        clip_dir.mkdir(parents=True, exist_ok=True)
        for t, frame in enumerate(clip.frames):
            write_ppm(clip_dir / f"frame_{t:02d}.ppm", frame.pixels)


_CLASS_DIR = re.compile(r"^class_(\d+)_(.+)$")


def load_dataset(directory):
    root = Path(directory)
    labels_file = root / "labels.txt"
    if not labels_file.is_file():
        raise FileNotFoundError(f"missing {labels_file}")
    vocab = labels_file.read_text().splitlines()
    items = []
    for class_dir in sorted(root.iterdir()):
        m = _CLASS_DIR.match(class_dir.name)
        if not m or not class_dir.is_dir():
            continue
        label = int(m.group(1))
        for clip_dir in sorted(class_dir.iterdir()):
            if not clip_dir.is_dir():
                continue
            frames = load_frames(clip_dir)
            if len(frames) != CLIP_LENGTH:
                raise ValueError(f"{clip_dir}: expected {CLIP_LENGTH} frames, "
                                 f"found {len(frames)}")
            items.append((Clip(frames=frames,
                               source_id=str(clip_dir.relative_to(root)),
                               source_frame_count=len(frames)), label))
    return LabeledDataset(items=items, vocabulary=vocab)
