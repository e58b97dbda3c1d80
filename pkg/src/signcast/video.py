"""Frame ingestion and temporal resampling.

Frames are 8-bit RGB images read from directories of binary PPM (P6)
files named frame_%02d.ppm. Every clip fed to a classifier is exactly
CLIP_LENGTH frames; shorter sources are stretched by duplicating frames
(the "extender") and longer ones are subsampled, both through one
nearest-index formula.
"""

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CLIP_LENGTH = 12

_FRAME_NAME = re.compile(r"^frame_(\d+)\.ppm$")


class VideoError(ValueError):
    pass


class PpmParseError(VideoError):
    pass


class MissingFramesError(VideoError):
    pass


@dataclass
class Frame:
    """One decoded RGB image; pixels are (height, width, 3) uint8."""

    pixels: np.ndarray
    source_index: int = 0

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise VideoError(f"frame pixels must be (h, w, 3) uint8, got {px.shape} {px.dtype}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise VideoError("frame dimensions must be >= 1")
        self.pixels = px

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]


@dataclass
class Clip:
    """Exactly CLIP_LENGTH frames with non-decreasing source indices."""

    frames: list = field(default_factory=list)
    source_id: str = ""
    source_frame_count: int = 0

    def __post_init__(self):
        if len(self.frames) != CLIP_LENGTH:
            raise VideoError(f"clip must hold {CLIP_LENGTH} frames, got {len(self.frames)}")
        indices = [f.source_index for f in self.frames]
        if any(b < a for a, b in zip(indices, indices[1:])):
            raise VideoError(f"source indices must be non-decreasing, got {indices}")

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)


def parse_ppm(data, origin="<bytes>"):
    """Decode a binary P6 PPM with maxval 255. Comments and arbitrary
    whitespace in the header are accepted."""
    pos = 0

    def next_token():
        nonlocal pos
        while pos < len(data):
            ch = data[pos : pos + 1]
            if ch == b"#":
                while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif ch.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise PpmParseError(f"{origin}: truncated PPM header")
        return data[start:pos]

    magic = next_token()
    if magic != b"P6":
        raise PpmParseError(f"{origin}: not a P6 PPM (magic {magic!r})")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise PpmParseError(f"{origin}: non-numeric PPM header field") from exc
    if width < 1 or height < 1:
        raise PpmParseError(f"{origin}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise PpmParseError(f"{origin}: only maxval 255 supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    expected = width * height * 3
    raw = data[pos : pos + expected]
    if len(raw) != expected:
        raise PpmParseError(f"{origin}: expected {expected} pixel bytes, found {len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width, 3).copy()


def write_ppm(path, pixels):
    pixels = np.asarray(pixels, dtype=np.uint8)
    h, w, _ = pixels.shape
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(pixels.tobytes())


def load_frames(path):
    """Read all frame_<n>.ppm files under `path`, sorted by index.

    Indices must run 0..N-1 with no holes.
    """
    directory = Path(path)
    if not directory.is_dir():
        raise MissingFramesError(f"frame directory not found: {directory}")
    found = {}
    for entry in directory.iterdir():
        m = _FRAME_NAME.match(entry.name)
        if m:
            found[int(m.group(1))] = entry
    if not found:
        raise MissingFramesError(f"no frame_*.ppm files in {directory}")
    expected = set(range(len(found)))
    if set(found) != expected:
        missing = sorted(expected - set(found))[:5]
        raise MissingFramesError(
            f"{directory}: frame numbering not contiguous from 0 (missing {missing})"
        )
    frames = []
    for idx in range(len(found)):
        pixels = parse_ppm(found[idx].read_bytes(), origin=str(found[idx]))
        frames.append(Frame(pixels=pixels, source_index=idx))
    return frames


def resample_indices(length, target=CLIP_LENGTH):
    """Source index for each output slot: round-half-up(i*(L-1)/(T-1))."""
    if length < 1:
        raise VideoError("cannot resample an empty frame list")
    if length == 1:
        return [0] * target
    # floor((2a + b) / 2b) == round-half-up(a / b) for a, b >= 0
    den = target - 1
    return [(2 * i * (length - 1) + den) // (2 * den) for i in range(target)]


def resample_to_length(frames, source_id="", target=CLIP_LENGTH):
    """Stretch or subsample `frames` to exactly `target` frames."""
    if not frames:
        raise VideoError("cannot resample an empty frame list")
    picked = [frames[i] for i in resample_indices(len(frames), target)]
    return Clip(frames=picked, source_id=source_id, source_frame_count=len(frames))


def bilinear_resize(pixels, out_h, out_w):
    """Half-pixel-centered bilinear resize of an (h, w, c) array -> float64."""
    if out_h < 1 or out_w < 1:
        raise VideoError("target dimensions must be >= 1")
    src = np.asarray(pixels, dtype=np.float64)
    in_h, in_w = src.shape[:2]

    def axis_coords(out_n, in_n):
        coords = (np.arange(out_n) + 0.5) * (in_n / out_n) - 0.5
        coords = np.clip(coords, 0, in_n - 1)
        lo = np.floor(coords).astype(np.intp)
        hi = np.minimum(lo + 1, in_n - 1)
        return lo, hi, (coords - lo)

    y0, y1, wy = axis_coords(out_h, in_h)
    x0, x1, wx = axis_coords(out_w, in_w)
    wy = wy[:, None, None]
    wx = wx[None, :, None]
    top = src[y0][:, x0] * (1 - wx) + src[y0][:, x1] * wx
    bot = src[y1][:, x0] * (1 - wx) + src[y1][:, x1] * wx
    return top * (1 - wy) + bot * wy


def preprocess(frame, target_h, target_w, dtype=np.float32):
    """Frame -> model input tensor: bilinear resize then map into [-1, 1]."""
    pixels = frame.pixels if isinstance(frame, Frame) else frame
    resized = bilinear_resize(pixels, target_h, target_w)
    return (resized / 127.5 - 1.0).astype(dtype)


def preprocess_clip(clip, target_h, target_w, dtype=np.float32):
    """Stack preprocessed clip frames into one (CLIP_LENGTH, h, w, 3) tensor."""
    return np.stack([preprocess(f, target_h, target_w, dtype) for f in clip.frames])
