import numpy as np
import pytest

from spatialmix.audio_io import load_hrir_bank, load_rir_bank
from spatialmix.dsp import AudioBuffer
from spatialmix.render import RenderConfig
from spatialmix.scene import (
    Algorithmic,
    LocalizationMode,
    OutputFormat,
    OutputSpec,
    ReverbSpec,
    RirConvolution,
    SourcePlacement,
    SpatialPlan,
)
from spatialmix.templates import load_bank

RATE = 48000


@pytest.fixture(scope="session")
def hrir_bank():
    return load_hrir_bank()


@pytest.fixture(scope="session")
def rir_bank():
    return load_rir_bank()


@pytest.fixture(scope="session")
def template_bank():
    return load_bank()


def noise(n=RATE // 2, seed=0, scale=0.1):
    return AudioBuffer.mono(np.random.default_rng(seed).standard_normal(n) * scale, RATE)


def impulse(n=4096, at=0):
    x = np.zeros(n)
    x[at] = 1.0
    return AudioBuffer.mono(x, RATE)


def source(sid, az, mode, el=0.0, dist=1.0, send=0.0, instrument="synth"):
    return SourcePlacement(sid, instrument, float(az), float(el), float(dist), LocalizationMode(mode), send)


def make_plan(sources, fmt=OutputFormat.BINAURAL, reverb=None, wet=0.0):
    reverb = reverb or ReverbSpec(Algorithmic(1.0, 0.0), wet)
    return SpatialPlan(tuple(sources), reverb, OutputSpec(RATE, fmt))


def rir_plan(sources, rir_id="concert_hall", wet=0.25, fmt=OutputFormat.BINAURAL):
    return SpatialPlan(tuple(sources), ReverbSpec(RirConvolution(rir_id), wet), OutputSpec(RATE, fmt))


DRY = RenderConfig(normalize_peak_dbfs=None)
