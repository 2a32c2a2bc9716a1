"""Thin-client CLI.

Every command is a client of the codec service: with --server it talks HTTP
to a running instance, otherwise it spins the FastAPI app up in-process and
sends the same requests over an ASGI transport. File reading/writing and
output formatting happen here; all signal processing happens behind the
service API.

Output is human-oriented by default; --porcelain switches to line-oriented
key=value pairs. Exit status is 0 exactly when the command's contract was
met.
"""

from __future__ import annotations

import asyncio
import base64
import json
import sys

import click
import httpx

from . import __version__


def _b64_file(path: str) -> str:
    with open(path, "rb") as fh:
        return base64.b64encode(fh.read()).decode("ascii")


def _write_b64(path: str, data: str) -> None:
    with open(path, "wb") as fh:
        fh.write(base64.b64decode(data))


class ServiceClient:
    """POSTs to a remote server or to an in-process app, same wire format."""

    def __init__(self, server: str | None):
        self.server = server

    def post(self, path: str, payload: dict) -> dict:
        if self.server:
            with httpx.Client(base_url=self.server, timeout=600.0) as client:
                response = client.post(path, json=payload)
        else:
            response = asyncio.run(self._post_inprocess(path, payload))
        if response.status_code != 200:
            try:
                detail = response.json().get("detail")
            except json.JSONDecodeError:
                detail = response.text
            if isinstance(detail, dict):
                raise click.ClickException(f"{detail.get('error', 'error')}: {detail.get('message', '')}")
            raise click.ClickException(str(detail))
        return response.json()

    async def _post_inprocess(self, path: str, payload: dict) -> httpx.Response:
        from .service import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport, base_url="http://engine.internal", timeout=600.0) as client:
            return await client.post(path, json=payload)


def _emit(porcelain: bool, pairs: list[tuple[str, object]], human: str) -> None:
    if porcelain:
        for key, value in pairs:
            click.echo(f"{key}={value}")
    else:
        click.echo(human)


_common = [
    click.option("--server", default=None, help="Base URL of a running service; default runs in-process."),
    click.option("--porcelain", is_flag=True, help="Line-oriented key=value output."),
]


def common_options(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(__version__)
def main():
    """Low-bitrate neural speech codec."""


@main.command()
@click.argument("in_wav", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_bitstream", type=click.Path(dir_okay=False))
@click.option("--weights", required=True, type=click.Path(exists=True, dir_okay=False))
@common_options
def encode(in_wav, out_bitstream, weights, server, porcelain):
    """Encode 16 kHz WAV to the 3 kbps bitstream."""
    reply = ServiceClient(server).post(
        "/v1/encode", {"audio_wav": _b64_file(in_wav), "weights": _b64_file(weights)}
    )
    _write_b64(out_bitstream, reply["bitstream"])
    _emit(
        porcelain,
        [
            ("frames", reply["n_frames"]),
            ("frame_bits", reply["frame_bits"]),
            ("bitrate_bps", reply["bitrate_bps"]),
            ("duration_s", reply["duration_s"]),
            ("out", out_bitstream),
        ],
        f"encoded {reply['n_frames']} frames ({reply['duration_s']:.2f} s) "
        f"at {reply['bitrate_bps']:.0f} bps -> {out_bitstream}",
    )


@main.command()
@click.argument("in_bitstream", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_wav", type=click.Path(dir_okay=False))
@click.option("--weights", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True, help="Sampling seed.")
@common_options
def decode(in_bitstream, out_wav, weights, seed, server, porcelain):
    """Decode a bitstream back to audio."""
    reply = ServiceClient(server).post(
        "/v1/decode",
        {"bitstream": _b64_file(in_bitstream), "weights": _b64_file(weights), "seed": seed},
    )
    _write_b64(out_wav, reply["audio_wav"])
    _emit(
        porcelain,
        [
            ("samples", reply["n_samples"]),
            ("sample_rate_hz", reply["sample_rate_hz"]),
            ("duration_s", reply["duration_s"]),
            ("seed", seed),
            ("out", out_wav),
        ],
        f"decoded {reply['n_samples']} samples ({reply['duration_s']:.2f} s) -> {out_wav}",
    )


@main.command()
@click.argument("in_wav", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_wav", type=click.Path(dir_okay=False))
@click.option("--weights", required=True, type=click.Path(exists=True, dir_okay=False))
@common_options
def denoise(in_wav, out_wav, weights, server, porcelain):
    """Run the causal ConvTASNet enhancer."""
    reply = ServiceClient(server).post(
        "/v1/denoise", {"audio_wav": _b64_file(in_wav), "weights": _b64_file(weights)}
    )
    _write_b64(out_wav, reply["audio_wav"])
    _emit(
        porcelain,
        [
            ("samples", reply["n_samples"]),
            ("lookahead_samples", reply["lookahead_samples"]),
            ("out", out_wav),
        ],
        f"denoised {reply['n_samples']} samples "
        f"(lookahead {reply['lookahead_samples']} samples) -> {out_wav}",
    )


@main.command()
@click.argument("in_wav", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_wav", type=click.Path(dir_okay=False))
@click.option("--weights", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--regime", default="n2n", show_default=True,
              type=click.Choice(["c2c", "n2n", "n2c", "dc2c", "dn2n"]))
@click.option("--seed", default=0, show_default=True)
@common_options
def roundtrip(in_wav, out_wav, weights, regime, seed, server, porcelain):
    """Full pipeline: optional denoise, then encode + decode."""
    reply = ServiceClient(server).post(
        "/v1/roundtrip",
        {
            "audio_wav": _b64_file(in_wav),
            "weights": _b64_file(weights),
            "regime": regime,
            "seed": seed,
        },
    )
    _write_b64(out_wav, reply["audio_wav"])
    _emit(
        porcelain,
        [
            ("regime", reply["regime"]),
            ("denoised", str(reply["denoised"]).lower()),
            ("frames", reply["n_frames"]),
            ("bitrate_bps", reply["bitrate_bps"]),
            ("samples", reply["n_samples"]),
            ("out", out_wav),
        ],
        f"roundtrip [{reply['regime']}] {reply['n_frames']} frames at "
        f"{reply['bitrate_bps']:.0f} bps -> {out_wav}",
    )


@main.command()
@click.argument("clean_wav", type=click.Path(exists=True, dir_okay=False))
@click.argument("noise_wav", type=click.Path(exists=True, dir_okay=False))
@click.argument("out_wav", type=click.Path(dir_okay=False))
@click.option("--snr-db", required=True, type=float, help="Target speech-to-noise ratio.")
@click.option("--seed", default=0, show_default=True)
@common_options
def mix(clean_wav, noise_wav, out_wav, snr_db, seed, server, porcelain):
    """Mix noise into speech at an exact SNR."""
    reply = ServiceClient(server).post(
        "/v1/mix",
        {
            "clean_wav": _b64_file(clean_wav),
            "noise_wav": _b64_file(noise_wav),
            "snr_db": snr_db,
            "seed": seed,
        },
    )
    _write_b64(out_wav, reply["audio_wav"])
    _emit(
        porcelain,
        [
            ("snr_db", reply["achieved_snr_db"]),
            ("noise_gain", reply["noise_gain"]),
            ("norm_gain", reply["norm_gain"]),
            ("out", out_wav),
        ],
        f"mixed at {reply['achieved_snr_db']:.3f} dB SNR "
        f"(noise gain {reply['noise_gain']:.4g}) -> {out_wav}",
    )


@main.command()
@click.argument("estimate_wav", type=click.Path(exists=True, dir_okay=False))
@click.argument("reference_wav", type=click.Path(exists=True, dir_okay=False))
@click.option("--noisy", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Original mixture: adds SI-SNRi to the report.")
@common_options
def metrics(estimate_wav, reference_wav, noisy, server, porcelain):
    """SI-SNR (and SI-SNRi given the mixture)."""
    payload = {
        "estimate_wav": _b64_file(estimate_wav),
        "reference_wav": _b64_file(reference_wav),
    }
    if noisy:
        payload["noisy_wav"] = _b64_file(noisy)
    reply = ServiceClient(server).post("/v1/metrics", payload)
    pairs = [("si_snr_db", reply["si_snr_db"])]
    human = f"SI-SNR {reply['si_snr_db']:.3f} dB"
    if reply.get("si_snri_db") is not None:
        pairs += [("noisy_si_snr_db", reply["noisy_si_snr_db"]), ("si_snri_db", reply["si_snri_db"])]
        human += f" | noisy {reply['noisy_si_snr_db']:.3f} dB | SI-SNRi {reply['si_snri_db']:.3f} dB"
    _emit(porcelain, pairs, human)


@main.command()
@click.argument("weights", type=click.Path(exists=True, dir_okay=False))
@common_options
def inspect(weights, server, porcelain):
    """List tensors, shapes, layouts and sparsity of a weight file."""
    reply = ServiceClient(server).post("/v1/inspect", {"weights": _b64_file(weights)})
    if porcelain:
        for t in reply["tensors"]:
            shape = "x".join(str(d) for d in t["shape"])
            click.echo(f"tensor={t['name']} shape={shape} layout={t['layout']} sparsity_pct={t['sparsity_pct']}")
        for k, v in reply["metadata"].items():
            click.echo(f"meta.{k}={v}")
    else:
        width = max((len(t["name"]) for t in reply["tensors"]), default=10)
        for t in reply["tensors"]:
            shape = "x".join(str(d) for d in t["shape"])
            click.echo(f"{t['name']:<{width}}  {shape:>14}  {t['layout']:<12} {t['sparsity_pct']:6.2f}% sparse")
        click.echo(f"{len(reply['tensors'])} tensors, {len(reply['metadata'])} metadata keys")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8790, show_default=True)
@click.option("--weights", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Preload a default weight set.")
def serve(host, port, weights):
    """Run the codec service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(default_weights_path=weights), host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
