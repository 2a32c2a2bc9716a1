"""FastAPI application wrapping the codec engine.

One long-running process holds parsed weight sets (the server default plus a
small content-addressed cache of uploaded ones) and serves batch encode /
decode / denoise / roundtrip / mix / metrics / inspect requests.
"""

from __future__ import annotations

import base64
import binascii

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..audio_io import AudioBuffer, read_wav_bytes, write_wav_bytes
from ..denoiser import TasNetConfig
from ..engine import (
    WeightCache,
    compute_metrics,
    decode_bitstream,
    denoise_audio,
    encode_audio,
    inspect_weights,
    mix_audio,
    roundtrip_audio,
)
from ..errors import CodecError
from ..weights import WeightSet, read_weights
from . import schemas


class _BadRequest(Exception):
    def __init__(self, message: str):
        self.message = message


def _b64decode(data: str, what: str) -> bytes:
    try:
        return base64.b64decode(data, validate=True)
    except (binascii.Error, ValueError):
        raise _BadRequest(f"{what} is not valid base64")


def _b64encode(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _audio_response(cls, audio: AudioBuffer, **extra):
    return cls(
        audio_wav=_b64encode(write_wav_bytes(audio)),
        n_samples=len(audio),
        sample_rate_hz=audio.sample_rate_hz,
        duration_s=audio.duration_s,
        **extra,
    )


def create_app(default_weights_path: str | None = None, default_weights: WeightSet | None = None) -> FastAPI:
    app = FastAPI(title="nvcodec", version=__version__)
    cache = WeightCache()
    default = default_weights
    if default_weights_path:
        default = read_weights(default_weights_path)

    def resolve_weights(b64: str | None) -> WeightSet:
        if b64 is not None:
            return cache.get(_b64decode(b64, "weights"))
        if default is None:
            raise _BadRequest("request has no weights and the server has no default weight set")
        return default

    def read_audio(b64: str, what: str) -> AudioBuffer:
        return read_wav_bytes(_b64decode(b64, what))

    @app.exception_handler(CodecError)
    async def codec_error(_: Request, exc: CodecError):
        return JSONResponse(
            status_code=400,
            content={"detail": {"error": type(exc).__name__, "message": str(exc)}},
        )

    @app.exception_handler(_BadRequest)
    async def bad_request(_: Request, exc: _BadRequest):
        return JSONResponse(
            status_code=400,
            content={"detail": {"error": "BadRequest", "message": exc.message}},
        )

    @app.get("/v1/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__, default_weights=default is not None)

    @app.post("/v1/encode", response_model=schemas.EncodeResponse)
    def encode(req: schemas.EncodeRequest):
        ws = resolve_weights(req.weights)
        result = encode_audio(read_audio(req.audio_wav, "audio_wav"), ws)
        return schemas.EncodeResponse(
            bitstream=_b64encode(result.payload),
            n_frames=result.n_frames,
            frame_bits=result.frame_bits,
            frame_rate_hz=result.frame_rate_hz,
            bitrate_bps=result.bitrate_bps,
            duration_s=result.duration_s,
        )

    @app.post("/v1/decode", response_model=schemas.AudioResponse)
    def decode(req: schemas.DecodeRequest):
        ws = resolve_weights(req.weights)
        audio = decode_bitstream(_b64decode(req.bitstream, "bitstream"), ws, req.seed)
        return _audio_response(schemas.AudioResponse, audio)

    @app.post("/v1/denoise", response_model=schemas.DenoiseResponse)
    def denoise(req: schemas.DenoiseRequest):
        ws = resolve_weights(req.weights)
        audio = denoise_audio(read_audio(req.audio_wav, "audio_wav"), ws)
        return _audio_response(
            schemas.DenoiseResponse,
            audio,
            lookahead_samples=TasNetConfig.from_metadata(ws).lookahead_samples,
        )

    @app.post("/v1/roundtrip", response_model=schemas.RoundtripResponse)
    def roundtrip(req: schemas.RoundtripRequest):
        ws = resolve_weights(req.weights)
        result = roundtrip_audio(read_audio(req.audio_wav, "audio_wav"), ws, req.regime, req.seed)
        return _audio_response(
            schemas.RoundtripResponse,
            result.audio,
            regime=result.regime,
            denoised=result.denoised,
            n_frames=result.encode.n_frames,
            bitrate_bps=result.encode.bitrate_bps,
        )

    @app.post("/v1/mix", response_model=schemas.MixResponse)
    def mix(req: schemas.MixRequest):
        result = mix_audio(
            read_audio(req.clean_wav, "clean_wav"),
            read_audio(req.noise_wav, "noise_wav"),
            req.snr_db,
            req.seed,
        )
        return _audio_response(
            schemas.MixResponse,
            result.audio,
            noise_gain=result.noise_gain,
            norm_gain=result.norm_gain,
            achieved_snr_db=result.snr_db,
        )

    @app.post("/v1/metrics", response_model=schemas.MetricsResponse)
    def metrics(req: schemas.MetricsRequest):
        values = compute_metrics(
            read_audio(req.estimate_wav, "estimate_wav"),
            read_audio(req.reference_wav, "reference_wav"),
            read_audio(req.noisy_wav, "noisy_wav") if req.noisy_wav else None,
        )
        return schemas.MetricsResponse(**values)

    @app.post("/v1/inspect", response_model=schemas.InspectResponse)
    def inspect(req: schemas.InspectRequest):
        return schemas.InspectResponse(**inspect_weights(resolve_weights(req.weights)))

    return app
