import numpy as np
import pytest

from spectrafuse import synth
from spectrafuse.core import SpectralAxis, Spectrum1D


@pytest.fixture(scope="session")
def tiny_tables():
    """Small deterministic three-modality dataset shared across tests."""
    spec = synth.small_spec(seed=9)
    return synth.generate_dataset(spec)


@pytest.fixture()
def line_spectrum():
    x = np.linspace(650.0, 4000.0, 300)
    return Spectrum1D(axis=SpectralAxis(x), intensity=0.5 + 0.001 * x)


def make_spectrum(x, y):
    return Spectrum1D(axis=SpectralAxis(np.asarray(x, dtype=float)),
                      intensity=np.asarray(y, dtype=float))
