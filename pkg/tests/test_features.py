"""Log-mel front-end contracts: rates, framing, and the direct-DFT oracle."""

import numpy as np
import pytest

import oracles
from nvcodec.audio_io import AudioBuffer
from nvcodec.features import (
    LOG_FLOOR,
    MelConfig,
    extract_feature_matrix,
    extract_features,
    mel_filterbank,
    read_feature_dump,
    write_feature_dump,
)

CFG = MelConfig()


def sine(freq, seconds=1.0, amp=0.5):
    t = np.arange(int(16000 * seconds)) / 16000.0
    return AudioBuffer((amp * np.sin(2 * np.pi * freq * t)).astype(np.float32))


class TestFraming:
    def test_one_second_gives_25_frames(self):
        assert extract_feature_matrix(sine(440), CFG).shape == (25, 160)

    def test_empty_audio_gives_empty_sequence(self):
        assert extract_features(AudioBuffer(np.zeros(0, dtype=np.float32)), CFG) == []

    def test_silence_hits_log_floor(self):
        feats = extract_feature_matrix(AudioBuffer(np.zeros(16000, dtype=np.float32)), CFG)
        np.testing.assert_allclose(feats, np.log(LOG_FLOOR), rtol=0, atol=1e-6)

    def test_shift_by_one_hop_shifts_frames(self):
        """Interior frames are bit-identical after a 640-sample delay."""
        audio = sine(300, 0.6)
        delayed = AudioBuffer(np.concatenate([np.zeros(640, dtype=np.float32), audio.samples]))
        a = extract_feature_matrix(audio, CFG)
        b = extract_feature_matrix(delayed, CFG)
        np.testing.assert_array_equal(b[1 : a.shape[0]], a[: a.shape[0] - 1])


class TestSpectralContent:
    def test_argmax_mel_bin_tracks_1khz(self):
        feats = extract_feature_matrix(sine(1000.0), CFG)
        centers = oracles.hz_of_mel(
            np.linspace(oracles.mel_of_hz(CFG.fmin_hz), oracles.mel_of_hz(CFG.fmax_hz), CFG.n_mels + 2)
        )[1:-1]
        expected = int(np.argmin(np.abs(centers - 1000.0)))
        assert int(np.argmax(feats[5])) == expected

    def test_gain_adds_two_log_g(self):
        """Power spectra: scaling audio by g adds exactly 2 ln g to non-floored bins."""
        quiet = sine(250, 0.4, amp=0.25)
        loud = AudioBuffer(2.0 * quiet.samples)
        a = extract_feature_matrix(quiet, CFG).astype(np.float64)
        b = extract_feature_matrix(loud, CFG).astype(np.float64)
        mask = a > np.log(LOG_FLOOR) + 1e-6
        np.testing.assert_allclose((b - a)[mask], 2.0 * np.log(2.0), atol=2e-5)

    def test_matches_direct_dft_oracle(self):
        rng = np.random.default_rng(11)
        audio = AudioBuffer(rng.uniform(-0.5, 0.5, 2 * 640 + 1280).astype(np.float32))
        feats = extract_feature_matrix(audio, CFG).astype(np.float64)
        window = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(1280) / 1280)
        mel = oracles.mel_triangle_matrix(160, CFG.fft_size, 16000, CFG.fmin_hz, CFG.fmax_hz)
        for t in range(feats.shape[0]):
            chunk = np.zeros(1280)
            seg = audio.samples[t * 640 : t * 640 + 1280]
            chunk[: seg.size] = seg
            expected = oracles.logmel_frame(chunk, window, CFG.fft_size, mel, CFG.log_floor)
            np.testing.assert_allclose(feats[t], expected, atol=1e-4)


class TestConfig:
    def test_hop_must_divide_second(self):
        with pytest.raises(Exception):
            MelConfig(hop_ms=33)

    def test_fft_must_cover_window(self):
        with pytest.raises(Exception):
            MelConfig(fft_size=1024)

    def test_update_rate(self):
        assert CFG.update_rate_hz == 25
        assert CFG.window_samples == 1280
        assert CFG.hop_samples == 640

    def test_no_empty_filters(self):
        assert np.all(mel_filterbank(CFG).sum(axis=1) > 0)


def test_feature_dump_roundtrip(tmp_path):
    audio = sine(500, 0.4)
    frames = extract_features(audio, CFG)
    path = tmp_path / "feats.bin"
    write_feature_dump(path, frames, CFG)
    mat, hop_ms = read_feature_dump(path)
    assert hop_ms == 40
    np.testing.assert_array_equal(mat, extract_feature_matrix(audio, CFG))
