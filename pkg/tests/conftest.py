import pytest

from nvcodec import presets
from nvcodec.weights import write_weights_bytes


@pytest.fixture(scope="session")
def toy_weights():
    """Small full-pipeline weight set (fast decodes)."""
    return presets.build_toy_weights(seed=0)


@pytest.fixture(scope="session")
def toy_weights_blob(toy_weights):
    return write_weights_bytes(toy_weights)


@pytest.fixture(scope="session")
def full_weights():
    """Engine-default (1024-dim, pruned) weight set; expensive, share it."""
    return presets.build_weights(seed=0)


@pytest.fixture(scope="session")
def speech_1s():
    return presets.synthetic_speech(1.0, seed=3)


@pytest.fixture(scope="session")
def speech_short():
    return presets.synthetic_speech(0.32, seed=5)


@pytest.fixture(scope="session")
def noise_1s():
    return presets.synthetic_noise(1.0, seed=9)
