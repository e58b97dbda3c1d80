"""Frame I/O, the 12-frame resampler, and preprocessing."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from signcast import video
from signcast.video import (
    CLIP_LENGTH,
    Clip,
    Frame,
    MissingFramesError,
    PpmParseError,
    VideoError,
    load_frames,
    parse_ppm,
    preprocess,
    resample_indices,
    resample_to_length,
    write_ppm,
)

from oracles import resample_indices as oracle_indices


def make_frame(idx, h=4, w=4, value=None):
    rng = np.random.default_rng(idx)
    px = (rng.integers(0, 256, size=(h, w, 3), dtype=np.int64)
          if value is None else np.full((h, w, 3), value))
    return Frame(pixels=px.astype(np.uint8), source_index=idx)


class TestPpm:
    def test_round_trip(self, tmp_path):
        px = np.random.default_rng(0).integers(0, 256, (5, 7, 3)).astype(np.uint8)
        path = tmp_path / "frame_00.ppm"
        write_ppm(path, px)
        np.testing.assert_array_equal(parse_ppm(path.read_bytes()), px)

    def test_header_with_comment(self):
        px = np.zeros((1, 2, 3), dtype=np.uint8)
        data = b"P6\n# a comment\n2 1\n255\n" + px.tobytes()
        np.testing.assert_array_equal(parse_ppm(data), px)

    def test_wrong_magic(self):
        with pytest.raises(PpmParseError):
            parse_ppm(b"P5\n2 2\n255\n" + b"\x00" * 12)

    def test_short_payload(self):
        with pytest.raises(PpmParseError):
            parse_ppm(b"P6\n2 2\n255\n" + b"\x00" * 5)

    def test_bad_maxval(self):
        with pytest.raises(PpmParseError):
            parse_ppm(b"P6\n2 2\n65535\n" + b"\x00" * 24)


class TestLoadFrames:
    def write_frames(self, directory, count):
        directory.mkdir(parents=True, exist_ok=True)
        for i in range(count):
            write_ppm(directory / f"frame_{i:02d}.ppm", make_frame(i).pixels)

    def test_sorted_load(self, tmp_path):
        self.write_frames(tmp_path / "clip", 5)
        frames = load_frames(tmp_path / "clip")
        assert [f.source_index for f in frames] == [0, 1, 2, 3, 4]
        np.testing.assert_array_equal(frames[3].pixels, make_frame(3).pixels)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(MissingFramesError):
            load_frames(tmp_path / "nope")

    def test_empty_directory(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(MissingFramesError):
            load_frames(tmp_path / "empty")

    def test_non_contiguous(self, tmp_path):
        d = tmp_path / "holes"
        self.write_frames(d, 3)
        (d / "frame_01.ppm").unlink()
        with pytest.raises(MissingFramesError):
            load_frames(d)

    def test_malformed_file_names_the_file(self, tmp_path):
        d = tmp_path / "bad"
        self.write_frames(d, 2)
        (d / "frame_01.ppm").write_bytes(b"garbage")
        with pytest.raises(PpmParseError, match="frame_01"):
            load_frames(d)

    def test_three_digit_indices(self, tmp_path):
        d = tmp_path / "long"
        d.mkdir()
        for i in range(101):
            write_ppm(d / f"frame_{i:02d}.ppm", make_frame(0).pixels)
        frames = load_frames(d)
        assert len(frames) == 101


class TestResample:
    def test_identity_at_twelve(self):
        assert resample_indices(12) == list(range(12))

    def test_single_frame_extends(self):
        assert resample_indices(1) == [0] * 12

    def test_l23_subsampling(self):
        assert resample_indices(23) == [0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22]

    def test_l3_extension_round_half_up(self):
        assert resample_indices(3) == [0, 0, 0, 1, 1, 1, 1, 1, 1, 2, 2, 2]

    def test_formula_for_all_lengths_to_fifty(self):
        for length in range(1, 51):
            assert resample_indices(length) == oracle_indices(length), length

    def test_empty_input_rejected(self):
        with pytest.raises(VideoError):
            resample_to_length([])

    @given(st.integers(1, 200))
    def test_clip_shape_properties(self, length):
        frames = [make_frame(i, h=1, w=1) for i in range(length)]
        clip = resample_to_length(frames, source_id="s")
        indices = [f.source_index for f in clip.frames]
        assert len(indices) == CLIP_LENGTH
        assert all(b >= a for a, b in zip(indices, indices[1:]))
        assert indices[0] == 0
        if length >= 2:
            assert indices[-1] == length - 1

    def test_idempotent_on_own_output(self):
        frames = [make_frame(i, h=1, w=1) for i in range(30)]
        clip = resample_to_length(frames)
        again = resample_to_length(list(clip.frames))
        assert [f.source_index for f in again.frames] == [f.source_index for f in clip.frames]

    def test_clip_invariants(self):
        frames = [make_frame(i, h=1, w=1) for i in range(12)]
        with pytest.raises(VideoError):
            Clip(frames=frames[:11])
        shuffled = [frames[i] for i in (0, 2, 1, 3, 4, 5, 6, 7, 8, 9, 10, 11)]
        with pytest.raises(VideoError):
            Clip(frames=shuffled)


class TestPreprocess:
    def test_endpoint_mapping(self):
        frame = make_frame(0, value=0)
        out = preprocess(frame, 4, 4)
        np.testing.assert_allclose(out, -1.0, atol=1e-6)
        frame = make_frame(0, value=255)
        np.testing.assert_allclose(preprocess(frame, 4, 4), 1.0, atol=1e-6)

    def test_midpoint_near_zero(self):
        lo, hi = preprocess(make_frame(0, value=127), 2, 2), preprocess(make_frame(0, value=128), 2, 2)
        assert np.all(lo < 0) and np.all(hi > 0)
        assert np.all(np.abs(lo) < 0.005) and np.all(np.abs(hi) < 0.005)

    def test_constant_frame_any_size(self):
        frame = make_frame(0, h=3, w=5, value=90)
        out = preprocess(frame, 7, 2)
        expected = 90 / 127.5 - 1.0
        np.testing.assert_allclose(out, expected, atol=1e-6)
        assert out.shape == (7, 2, 3)

    def test_two_by_two_to_one_pixel_averages(self):
        px = np.zeros((2, 2, 3), dtype=np.uint8)
        px[0, 0] = 10
        px[0, 1] = 20
        px[1, 0] = 30
        px[1, 1] = 60
        out = video.bilinear_resize(px, 1, 1)
        np.testing.assert_allclose(out[0, 0], 30.0)  # center sample = mean of 4

    def test_identity_resize(self):
        px = make_frame(5, h=6, w=6).pixels
        np.testing.assert_allclose(video.bilinear_resize(px, 6, 6), px.astype(np.float64))

    def test_output_bounded(self):
        rng = np.random.default_rng(9)
        px = rng.integers(0, 256, (9, 13, 3)).astype(np.uint8)
        out = preprocess(Frame(pixels=px), 5, 17)
        assert out.min() >= -1.0 - 1e-6
        assert out.max() <= 1.0 + 1e-6

    def test_zero_target_rejected(self):
        with pytest.raises(VideoError):
            preprocess(make_frame(0), 0, 4)


class TestFrameValidation:
    def test_rejects_wrong_dtype(self):
        with pytest.raises(VideoError):
            Frame(pixels=np.zeros((2, 2, 3), dtype=np.float32))

    def test_rejects_wrong_channels(self):
        with pytest.raises(VideoError):
            Frame(pixels=np.zeros((2, 2, 4), dtype=np.uint8))
