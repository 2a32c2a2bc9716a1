"""Pydantic request/response models for the codec service.

Binary payloads (WAV audio, NVC1 bitstreams, NVW1 weight files) travel as
base64 strings. Weight bytes may be omitted from any request when the server
was started with a default weight set.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str
    default_weights: bool


class EncodeRequest(BaseModel):
    audio_wav: str = Field(description="base64 RIFF/WAVE, 16 kHz mono")
    weights: str | None = Field(default=None, description="base64 NVW1 container")


class EncodeResponse(BaseModel):
    bitstream: str
    n_frames: int
    frame_bits: int
    frame_rate_hz: int
    bitrate_bps: float
    duration_s: float


class DecodeRequest(BaseModel):
    bitstream: str = Field(description="base64 NVC1 bitstream")
    weights: str | None = None
    seed: int = 0


class AudioResponse(BaseModel):
    audio_wav: str
    n_samples: int
    sample_rate_hz: int
    duration_s: float


class DenoiseRequest(BaseModel):
    audio_wav: str
    weights: str | None = None


class DenoiseResponse(AudioResponse):
    lookahead_samples: int


class RoundtripRequest(BaseModel):
    audio_wav: str
    weights: str | None = None
    regime: str = "n2n"
    seed: int = 0


class RoundtripResponse(AudioResponse):
    regime: str
    denoised: bool
    n_frames: int
    bitrate_bps: float


class MixRequest(BaseModel):
    clean_wav: str
    noise_wav: str
    snr_db: float
    seed: int = 0


class MixResponse(AudioResponse):
    noise_gain: float
    norm_gain: float
    achieved_snr_db: float


class MetricsRequest(BaseModel):
    estimate_wav: str
    reference_wav: str
    noisy_wav: str | None = None


class MetricsResponse(BaseModel):
    si_snr_db: float
    noisy_si_snr_db: float | None = None
    si_snri_db: float | None = None


class InspectRequest(BaseModel):
    weights: str | None = None


class TensorInfo(BaseModel):
    name: str
    shape: list[int]
    layout: str
    sparsity_pct: float


class InspectResponse(BaseModel):
    tensors: list[TensorInfo]
    metadata: dict[str, str]


class ErrorDetail(BaseModel):
    error: str
    message: str
