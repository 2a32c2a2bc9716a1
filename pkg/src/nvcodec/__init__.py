"""nvcodec: streaming low-bitrate neural speech codec engine.

Log-mel front end, KLT + split-VQ 3 kbps bitstream, multi-band WaveGRU
decoder with mixture-of-logistics sampling, QMF filterbank cascade, causal
ConvTASNet denoiser, and the noise-regime machinery for building
conditioning/target audio pairs. Served over FastAPI with a thin-client CLI.
"""

__version__ = "0.1.0"
