"""AWGN, block Rayleigh fading, the Rapp amplifier and PAPR statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .cpm import BasebandFrame
from .errors import ConfigurationError, InputError


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based generator for one (seed, key...) cell.

    Results depend only on the keys, never on the order cells are visited,
    so parallel and serial runs draw identical numbers.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def _samples(x) -> np.ndarray:
    return x.samples if isinstance(x, BasebandFrame) else np.asarray(x, dtype=np.complex128)


def _like(template, samples: np.ndarray):
    return template.with_samples(samples) if isinstance(template, BasebandFrame) else samples


def complex_gaussian(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    s = math.sqrt(variance / 2)
    return s * rng.standard_normal(shape) + 1j * s * rng.standard_normal(shape)


@dataclass(frozen=True)
class NoiseSpec:
    n0: float
    seed: int = 0

    def __post_init__(self):
        if not self.n0 > 0:
            raise ConfigurationError("N0 must be positive")


def add_awgn(frame, spec: NoiseSpec, rng: np.random.Generator | None = None):
    """Add circular complex Gaussian noise of variance N0 per sample."""
    x = _samples(frame)
    rng = rng or substream(spec.seed)
    return _like(frame, x + complex_gaussian(rng, x.shape, spec.n0))


@dataclass(frozen=True)
class FadingSpec:
    variance: float = 1.0
    block_length: int | None = None   # None: one coefficient for the whole frame
    seed: int = 0

    def __post_init__(self):
        if not self.variance > 0:
            raise ConfigurationError("fading variance must be positive")


def draw_fading(rng: np.random.Generator, count: int, variance: float = 1.0) -> np.ndarray:
    return complex_gaussian(rng, count, variance)


def apply_fading(frame, spec: FadingSpec, rng: np.random.Generator | None = None):
    """Scale each block by its own CN(0, variance) coefficient; returns (faded, h)."""
    x = _samples(frame)
    block = spec.block_length or x.size
    if x.size % block:
        raise InputError(f"block length {block} does not divide frame length {x.size}")
    rng = rng or substream(spec.seed)
    h = draw_fading(rng, x.size // block, spec.variance)
    y = (x.reshape(-1, block) * h[:, None]).ravel()
    return _like(frame, y), h


# -- nonlinear amplifier --------------------------------------------------

@dataclass(frozen=True)
class RappPa:
    g0: float = 1.0
    s_sat: float = 1.0
    p: float = 2.0
    ibo_db: float = 0.0

    def __post_init__(self):
        if self.p < 1 or self.g0 <= 0 or self.s_sat <= 0:
            raise ConfigurationError("Rapp PA needs p >= 1 and positive G0, Ssat")

    @property
    def input_scale(self) -> float:
        return 10 ** (-self.ibo_db / 20)

    def am_am(self, a: np.ndarray) -> np.ndarray:
        ga = self.g0 * np.asarray(a, dtype=float)
        return ga / (1 + (ga / self.s_sat) ** (2 * self.p)) ** (1 / (2 * self.p))


def rapp_amplify(frame, pa: RappPa):
    """Back the input off by IBO, then compress the envelope; phase is untouched."""
    x = _samples(frame) * pa.input_scale
    a = np.abs(x)
    gain = np.ones_like(a)
    nz = a > 0
    gain[nz] = pa.am_am(a[nz]) / a[nz]
    return _like(frame, x * gain)


# -- PAPR -----------------------------------------------------------------

@dataclass
class PaprCcdf:
    thresholds: np.ndarray
    ccdf: np.ndarray
    papr0_at_1e4: float
    n_frames: int
    insufficient: bool = False
    papr_db: np.ndarray | None = field(default=None, repr=False)

    def exceedance(self, threshold_db: float) -> float:
        return float(np.interp(threshold_db, self.thresholds, self.ccdf))


def frame_papr_db(frames: np.ndarray, mean_power: float | np.ndarray | None = None) -> np.ndarray:
    """Per-row peak over mean power in dB (row mean unless ``mean_power`` given)."""
    p = np.abs(np.atleast_2d(frames)) ** 2
    mean = p.mean(axis=1) if mean_power is None else mean_power
    return 10 * np.log10(p.max(axis=1) / mean)


def crossing(thresholds: np.ndarray, ccdf: np.ndarray, level: float) -> float:
    """First threshold where the CCDF falls to ``level``, interpolated linearly."""
    below = np.flatnonzero(ccdf <= level)
    if below.size == 0:
        return float("nan")
    k = below[0]
    if k == 0:
        return float(thresholds[0])
    c0, c1 = ccdf[k - 1], ccdf[k]
    t0, t1 = thresholds[k - 1], thresholds[k]
    return float(t0 + (c0 - level) / (c0 - c1) * (t1 - t0))


def measure_papr(frames: np.ndarray | Iterable[np.ndarray], thresholds: np.ndarray | None = None,
                 normalization: str = "ensemble", level: float = 1e-4,
                 keep_samples: bool = False) -> PaprCcdf:
    """CCDF of the per-frame PAPR.

    ``frames`` is a ``(F, L)`` array or an iterable of such chunks, so
    large campaigns never hold every frame at once. With
    ``normalization="ensemble"`` the peak of each frame is referred to the
    average power over all frames; ``"frame"`` uses each frame's own mean.
    """
    if normalization not in ("ensemble", "frame"):
        raise ConfigurationError("normalization must be 'ensemble' or 'frame'")
    if isinstance(frames, np.ndarray) or isinstance(frames, BasebandFrame):
        frames = [np.atleast_2d(_samples(frames))]
    peaks, means = [], []
    for chunk in frames:
        p = np.abs(np.atleast_2d(_samples(chunk))) ** 2
        peaks.append(p.max(axis=1))
        means.append(p.mean(axis=1))
    if not peaks:
        raise InputError("no frames supplied")
    peak = np.concatenate(peaks)
    mean = np.concatenate(means)
    ref = mean.mean() if normalization == "ensemble" else mean
    # quantise to 1e-9 dB so unit-envelope frames give exactly 0 dB
    papr = np.round(10 * np.log10(peak / ref), 9) + 0.0

    if thresholds is None:
        thresholds = np.round(np.arange(0.0, 14.0 + 1e-9, 0.01), 10)
    sorted_p = np.sort(papr)
    ccdf = 1 - np.searchsorted(sorted_p, thresholds, side="right") / papr.size
    insufficient = papr.size * level < 10
    return PaprCcdf(thresholds, ccdf, crossing(thresholds, ccdf, level), papr.size,
                    insufficient, papr if keep_samples else None)
