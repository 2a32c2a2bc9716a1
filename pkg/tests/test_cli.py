"""CLI: thin-client flows against the in-process service."""

import re

import numpy as np
import pytest
from click.testing import CliRunner

from nvcodec.audio_io import read_wav, write_wav
from nvcodec.cli import main
from nvcodec.presets import synthetic_noise, synthetic_speech
from nvcodec.weights import WeightSet, write_weights


@pytest.fixture(scope="module")
def workdir(tmp_path_factory, toy_weights):
    root = tmp_path_factory.mktemp("cli")
    write_weights(root / "model.nvw", toy_weights)
    write_wav(root / "speech.wav", synthetic_speech(0.4, seed=20))
    write_wav(root / "noise.wav", synthetic_noise(0.4, seed=21))
    stripped = WeightSet(
        {k: v for k, v in toy_weights.tensors.items() if not k.startswith("tasnet.")},
        dict(toy_weights.metadata),
    )
    write_weights(root / "novocoder-tasnet.nvw", stripped)
    return root


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args], catch_exceptions=False)


def porcelain_dict(output):
    pairs = {}
    for line in output.strip().splitlines():
        key, _, value = line.partition("=")
        pairs[key] = value
    return pairs


class TestEncodeDecode:
    def test_encode_porcelain(self, workdir):
        result = run(
            "encode", workdir / "speech.wav", workdir / "out.nvc",
            "--weights", workdir / "model.nvw", "--porcelain",
        )
        assert result.exit_code == 0
        pairs = porcelain_dict(result.output)
        assert pairs["frames"] == "10"
        assert pairs["frame_bits"] == "120"
        assert pairs["bitrate_bps"] == "3000.0"
        assert (workdir / "out.nvc").stat().st_size == 13 + 10 * 15

    def test_decode_bit_identical_across_runs(self, workdir):
        run("encode", workdir / "speech.wav", workdir / "s.nvc", "--weights", workdir / "model.nvw")
        r1 = run("decode", workdir / "s.nvc", workdir / "a.wav", "--weights", workdir / "model.nvw", "--seed", 7)
        r2 = run("decode", workdir / "s.nvc", workdir / "b.wav", "--weights", workdir / "model.nvw", "--seed", 7)
        assert r1.exit_code == 0 and r2.exit_code == 0
        assert (workdir / "a.wav").read_bytes() == (workdir / "b.wav").read_bytes()

    def test_truncated_stream_fails_cleanly(self, workdir):
        run("encode", workdir / "speech.wav", workdir / "t.nvc", "--weights", workdir / "model.nvw")
        blob = (workdir / "t.nvc").read_bytes()
        (workdir / "t.nvc").write_bytes(blob[:-4])
        result = CliRunner().invoke(
            main,
            ["decode", str(workdir / "t.nvc"), str(workdir / "x.wav"), "--weights", str(workdir / "model.nvw")],
        )
        assert result.exit_code != 0
        assert "BitstreamError" in result.output


class TestRoundtrip:
    def test_dn2n_roundtrip(self, workdir):
        result = run(
            "roundtrip", workdir / "speech.wav", workdir / "rt.wav",
            "--weights", workdir / "model.nvw", "--regime", "dn2n", "--seed", 2, "--porcelain",
        )
        assert result.exit_code == 0
        pairs = porcelain_dict(result.output)
        assert pairs["denoised"] == "true"
        assert pairs["bitrate_bps"] == "3000.0"
        assert len(read_wav(workdir / "rt.wav")) == 10 * 640

    def test_d_regime_without_tasnet_fails(self, workdir):
        result = CliRunner().invoke(
            main,
            [
                "roundtrip", str(workdir / "speech.wav"), str(workdir / "y.wav"),
                "--weights", str(workdir / "novocoder-tasnet.nvw"), "--regime", "dc2c",
            ],
        )
        assert result.exit_code != 0
        assert "tasnet" in result.output


class TestMixMetrics:
    def test_mix_then_metrics(self, workdir):
        result = run(
            "mix", workdir / "speech.wav", workdir / "noise.wav", workdir / "mixed.wav",
            "--snr-db", 10, "--seed", 3, "--porcelain",
        )
        assert result.exit_code == 0
        assert abs(float(porcelain_dict(result.output)["snr_db"]) - 10.0) < 1e-6
        metrics = run(
            "metrics", workdir / "mixed.wav", workdir / "speech.wav",
            "--noisy", workdir / "mixed.wav", "--porcelain",
        )
        pairs = porcelain_dict(metrics.output)
        assert float(pairs["si_snri_db"]) == 0.0

    def test_mix_deterministic(self, workdir):
        run("mix", workdir / "speech.wav", workdir / "noise.wav", workdir / "m1.wav", "--snr-db", 6, "--seed", 4)
        run("mix", workdir / "speech.wav", workdir / "noise.wav", workdir / "m2.wav", "--snr-db", 6, "--seed", 4)
        assert (workdir / "m1.wav").read_bytes() == (workdir / "m2.wav").read_bytes()


class TestInspect:
    def test_inspect_porcelain(self, workdir):
        result = run("inspect", workdir / "model.nvw", "--porcelain")
        assert result.exit_code == 0
        assert re.search(r"tensor=gru\.wr shape=\d+x\d+ layout=\w+ sparsity_pct=[\d.]+", result.output)
        assert "meta.mel.n_mels=160" in result.output

    def test_inspect_missing_file(self):
        result = CliRunner().invoke(main, ["inspect", "/nonexistent.nvw"])
        assert result.exit_code != 0


def test_help_lists_all_commands():
    result = run("--help")
    for cmd in ("encode", "decode", "denoise", "roundtrip", "mix", "metrics", "inspect", "serve"):
        assert cmd in result.output
