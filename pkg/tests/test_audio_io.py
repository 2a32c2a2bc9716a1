"""WAV I/O and frame iteration contracts."""

import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvcodec.audio_io import (
    AudioBuffer,
    FrameIterator,
    read_wav_bytes,
    write_wav_bytes,
)
from nvcodec.errors import AudioFormatError, UnsupportedSampleRateError


def pcm16_wav(ints, rate=16000, channels=1):
    payload = np.asarray(ints, dtype="<i2").tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    fmt = struct.pack("<4sIHHIIHH", b"fmt ", 16, 1, channels, rate, rate * 2 * channels, 2 * channels, 16)
    return header + fmt + b"data" + struct.pack("<I", len(payload)) + payload


def float32_wav(values, rate=16000, channels=1):
    payload = np.asarray(values, dtype="<f4").tobytes()
    header = b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE"
    fmt = struct.pack("<4sIHHIIHH", b"fmt ", 16, 3, channels, rate, rate * 4 * channels, 4 * channels, 32)
    return header + fmt + b"data" + struct.pack("<I", len(payload)) + payload


class TestReadWav:
    def test_pcm16_scaling(self):
        """[0, 16384, -32768] -> [0.0, 0.5, -1.0]."""
        buf = read_wav_bytes(pcm16_wav([0, 16384, -32768]))
        np.testing.assert_array_equal(buf.samples, np.array([0.0, 0.5, -1.0], dtype=np.float32))

    def test_stereo_averages_to_mono(self):
        """Channels [1.0] and [0.0] -> [0.5]."""
        buf = read_wav_bytes(float32_wav([1.0, 0.0], channels=2))
        np.testing.assert_array_equal(buf.samples, np.array([0.5], dtype=np.float32))

    def test_wrong_rate_rejected(self):
        with pytest.raises(UnsupportedSampleRateError):
            read_wav_bytes(pcm16_wav([0, 0], rate=8000))

    def test_malformed_header(self):
        with pytest.raises(AudioFormatError):
            read_wav_bytes(b"RIFX" + b"\x00" * 40)

    def test_truncated_file(self):
        blob = pcm16_wav([1, 2, 3, 4])
        with pytest.raises(AudioFormatError):
            read_wav_bytes(blob[:20])

    def test_unsupported_codec(self):
        blob = bytearray(pcm16_wav([0]))
        blob[20:22] = struct.pack("<H", 7)  # mu-law format tag
        with pytest.raises(AudioFormatError, match="codec"):
            read_wav_bytes(bytes(blob))

    def test_float32_passthrough(self):
        buf = read_wav_bytes(float32_wav([0.25, -0.75]))
        np.testing.assert_array_equal(buf.samples, np.array([0.25, -0.75], dtype=np.float32))


class TestWriteWav:
    def test_zero_roundtrip(self):
        buf = AudioBuffer(np.array([0.0], dtype=np.float32))
        assert read_wav_bytes(write_wav_bytes(buf)).samples[0] == 0.0

    def test_half_is_16384(self):
        blob = write_wav_bytes(AudioBuffer(np.array([0.5], dtype=np.float32)))
        ints = np.frombuffer(blob[-2:], dtype="<i2")
        assert ints[0] == 16384

    def test_overflow_saturates(self):
        """Values above 1.0 clamp to 32767, never wrap."""
        buf = AudioBuffer.__new__(AudioBuffer)
        buf.samples = np.array([1.5], dtype=np.float32)
        buf.sample_rate_hz = 16000
        blob = write_wav_bytes(buf)
        assert np.frombuffer(blob[-2:], dtype="<i2")[0] == 32767

    @given(st.lists(st.floats(min_value=-1.0, max_value=1.0, width=32), min_size=1, max_size=64))
    @settings(max_examples=50, deadline=None)
    def test_roundtrip_within_lsb(self, values):
        buf = AudioBuffer(np.array(values, dtype=np.float32))
        back = read_wav_bytes(write_wav_bytes(buf))
        assert np.all(np.abs(back.samples - buf.samples) <= 1.0 / 32768.0 + 1e-9)

    def test_write_read_write_idempotent(self):
        rng = np.random.default_rng(0)
        buf = AudioBuffer(rng.uniform(-1, 1, 333).astype(np.float32))
        blob1 = write_wav_bytes(buf)
        blob2 = write_wav_bytes(read_wav_bytes(blob1))
        assert blob1 == blob2


class TestFrameIteration:
    @pytest.mark.parametrize("n,hop,expected", [(16000, 640, 25), (100, 30, 4), (0, 10, 0), (1, 10, 1)])
    def test_frame_count_is_ceil(self, n, hop, expected):
        frames = FrameIterator(np.zeros(n, dtype=np.float32), window=2 * hop, hop=hop)
        assert len(frames) == expected

    def test_tail_zero_padded(self):
        it = FrameIterator(np.ones(5, dtype=np.float32), window=4, hop=3)
        frames = list(it)
        assert len(frames) == 2
        np.testing.assert_array_equal(frames[1], np.array([1.0, 1.0, 0.0, 0.0], dtype=np.float32))

    def test_matrix_matches_iteration(self):
        rng = np.random.default_rng(1)
        it = FrameIterator(rng.normal(size=1000).astype(np.float32), window=128, hop=48)
        np.testing.assert_array_equal(it.as_matrix(), np.stack(list(it)))


def test_engine_rate_guard():
    with pytest.raises(UnsupportedSampleRateError):
        AudioBuffer(np.zeros(10, dtype=np.float32), 8000).require_engine_rate()
