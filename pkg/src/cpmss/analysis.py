"""Closed-form and quadrature performance expressions.

SNR arguments are linear per-bit values unless a name ends in ``_db``.
The CIM total-BER pipeline comes in two flavours:

``verbatim``
    Codeword-error statistics with K-factor ``b_m * gamma_b``, PSK BER at
    ``gamma_b`` and the modulated-bit mix weighted by P_c, exactly as the
    published expressions read.
``validated``
    K-factor ``b_g * gamma_b`` (the symbol SNR seen by the correlator), PSK
    BER at the per-PSK-bit SNR ``(b_g / b_m) * gamma_b``, and the mix taken
    conditionally on the fade before averaging. This one matches Monte Carlo.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy import integrate, special

from .cpm import CpmConfig
from .errors import ConfigurationError, InputError, NumericalError

IM_FAMILY = ("IM-CPM-SS", "IM-CPM-SS-sep")
CIM_FAMILY = ("CIM-CPM-SS", "CIM")
DSSS_FAMILY = ("DSSS-CPM", "DSSS-CPM-sep")


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


# -- noncoherent orthogonal signalling ------------------------------------

def _alternating_terms(K: int) -> tuple[np.ndarray, np.ndarray]:
    """k = 1..K-1 and signed log-domain binomials C(K-1, k)."""
    k = np.arange(1, K, dtype=float)
    logc = special.gammaln(K) - special.gammaln(k + 1) - special.gammaln(K - k)
    sign = np.where(k % 2 == 1, 1.0, -1.0)
    return k, sign * np.exp(logc)


def _fsum_rows(terms: np.ndarray) -> np.ndarray:
    # exact float summation per grid point; keeps cancellation in check for large K
    terms = np.atleast_2d(terms)
    return np.array([math.fsum(row) for row in terms])


# Above this alphabet size the binomials of the alternating sums exceed
# 1e4 and rounding of individual terms starts to show at BER 1e-12; the
# integral representation is used instead.
SERIES_MAX_K = 16


def symbol_error_noncoherent(K: int, gamma_s) -> np.ndarray:
    """SER of K orthogonal signals, noncoherent detection, symbol SNR ``gamma_s``."""
    g = np.atleast_1d(np.asarray(gamma_s, dtype=float))
    if K < 2:
        return np.zeros_like(g)
    if K > SERIES_MAX_K:
        return np.array([pd_conditional(K, float(x)) for x in g])
    k, c = _alternating_terms(K)
    terms = c[None, :] / (k + 1) * np.exp(-np.outer(g, k / (k + 1)))
    return np.clip(_fsum_rows(terms), 0.0, 1.0)


def symbol_error_noncoherent_rayleigh(K: int, avg_gamma_s) -> np.ndarray:
    g = np.atleast_1d(np.asarray(avg_gamma_s, dtype=float))
    if K < 2:
        return np.zeros_like(g)
    if K > SERIES_MAX_K:
        return np.array([pd_rayleigh(K, float(x)) for x in g])
    k, c = _alternating_terms(K)
    terms = c[None, :] / (1 + k + np.outer(g, k))
    return np.clip(_fsum_rows(terms), 0.0, 1.0)


def _squeeze(x: np.ndarray, like):
    return float(x[0]) if np.ndim(like) == 0 else x


def ber_im_awgn(b_c: int, ebn0):
    """Bit error rate of 2^b_c-ary noncoherent orthogonal signalling in AWGN."""
    if b_c < 1:
        raise ConfigurationError("b_c must be >= 1")
    K = 1 << b_c
    ser = symbol_error_noncoherent(K, b_c * np.asarray(ebn0, dtype=float))
    return _squeeze(ser * (K / 2) / (K - 1), ebn0)


def ber_im_rayleigh(b_c: int, avg_snr):
    """Same as :func:`ber_im_awgn` on a flat Rayleigh channel, average SNR per bit."""
    if b_c < 1:
        raise ConfigurationError("b_c must be >= 1")
    K = 1 << b_c
    ser = symbol_error_noncoherent_rayleigh(K, b_c * np.asarray(avg_snr, dtype=float))
    return _squeeze(ser * (K / 2) / (K - 1), avg_snr)


# -- PSK ------------------------------------------------------------------

def psk_ber_awgn(b_m: int, gamma_bit):
    """Gray-coded M-PSK BER at SNR per PSK bit; exact for M <= 4, high-SNR form above."""
    g = np.asarray(gamma_bit, dtype=float)
    if b_m < 1:
        raise ConfigurationError("b_m must be >= 1")
    if b_m <= 2:
        return 0.5 * special.erfc(np.sqrt(g))
    M = 1 << b_m
    return special.erfc(np.sqrt(b_m * g * math.sin(math.pi / M) ** 2)) / b_m


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for the semi-infinite integrals.

    The outer average over the exponential fade is truncated at
    ``avg * ln(1 / abs_tol)``; the discarded tail weighs exactly
    ``abs_tol`` and every integrand is bounded by one. The inner integral
    runs over ``a +- inner_halfwidth`` standard deviations around the
    Rician mean, beyond which the density is below exp(-halfwidth^2 / 2).
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    inner_halfwidth: float = 12.0
    limit: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.inner_halfwidth > 0):
            raise ConfigurationError("quadrature tolerances must be positive")

    @property
    def outer_extent(self) -> float:
        return math.log(1.0 / self.abs_tol)


def _quad(f, a, b, quad: QuadratureSpec, points=None, what="integral") -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        kw = {"points": points} if points is not None else {}
        val, err, info, *msg = integrate.quad(f, a, b, epsabs=quad.abs_tol, epsrel=quad.rel_tol,
                                              limit=quad.limit, full_output=1, **kw)
    if msg and err > max(100 * quad.abs_tol, 1e-3 * abs(val)):
        raise NumericalError(f"{what} on [{a}, {b}] did not converge: value {val}, error {err}; {msg[0]}")
    return val


def _fade_average(f, avg: float, quad: QuadratureSpec, what: str) -> float:
    """E[f(gamma)] for gamma ~ Exp(mean avg), via gamma = avg * t."""
    T = quad.outer_extent
    pts = [p for p in (1.0 / avg, 10.0 / avg, 100.0 / avg, 1.0, 5.0) if 0 < p < T]
    return _quad(lambda t: f(avg * t) * math.exp(-t), 0.0, T, quad, sorted(set(pts)), what)


def psk_ber_rayleigh(b_m: int, avg_gamma_bit: float, quad: QuadratureSpec | None = None) -> float:
    quad = quad or QuadratureSpec()
    return _fade_average(lambda g: float(psk_ber_awgn(b_m, g)), avg_gamma_bit, quad, "PSK fade average")


def ber_psk(b_m: int, avg_snr, channel: str = "awgn", quad: QuadratureSpec | None = None):
    """PSK bit error rate in AWGN (direct) or Rayleigh (fade-averaged by quadrature)."""
    if channel == "awgn":
        return psk_ber_awgn(b_m, avg_snr)
    if channel == "rayleigh":
        vals = np.array([psk_ber_rayleigh(b_m, float(g), quad) for g in np.atleast_1d(avg_snr)])
        return _squeeze(vals, avg_snr)
    raise InputError(f"unknown channel {channel!r}")


# -- codeword detection error ---------------------------------------------

def _lose(K: int, y: float) -> float:
    """1 - (1 - e^{-y^2/2})^(K-1): some noise envelope exceeds y; accurate when tiny."""
    cdf = -math.expm1(-0.5 * y * y)
    if cdf <= 0.0:
        return 1.0
    return -math.expm1((K - 1) * math.log(cdf))


def pd_conditional(K: int, k_factor: float, quad: QuadratureSpec | None = None) -> float:
    """P(max of K-1 Rayleigh envelopes exceeds a Rician one) by quadrature.

    Both envelopes share the noise scale sigma; in units of sigma the
    Rician has non-centrality ``a = sqrt(2 * k_factor)``. The Bessel factor
    is evaluated in its exponentially scaled form.
    """
    quad = quad or QuadratureSpec()
    if K < 2:
        return 0.0
    if k_factor <= 0:
        return 1.0 - 1.0 / K
    a = math.sqrt(2.0 * k_factor)
    lo = max(0.0, a - quad.inner_halfwidth)
    hi = a + quad.inner_halfwidth

    def f(y):
        return _lose(K, y) * y * special.i0e(a * y) * math.exp(-0.5 * (y - a) ** 2)

    # the error mass is integrated directly so small P_d keeps its relative accuracy
    p_err = _quad(f, lo, hi, quad, [a] if lo < a < hi else None, "Rician order statistic")
    return min(max(p_err, 0.0), 1.0)


def pd_rayleigh(K: int, avg_k_factor: float, quad: QuadratureSpec | None = None) -> float:
    """Nested quadrature: conditional codeword error averaged over the fade."""
    quad = quad or QuadratureSpec()
    return _fade_average(lambda g: pd_conditional(K, g, quad), avg_k_factor, quad, "P_d fade average")


def pd_monte_carlo(K: int, avg_k_factor: float, draws: int = 1_000_000, seed: int = 0,
                   chunk: int = 200_000) -> tuple[float, float]:
    """Direct sampling of the same order statistic; returns (estimate, standard error)."""
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < draws:
        n = min(chunk, draws - done)
        kf = rng.exponential(avg_k_factor, n)
        a = np.sqrt(2 * kf)
        sig = a + rng.standard_normal(n) + 1j * rng.standard_normal(n)
        noise = rng.standard_normal((n, K - 1)) + 1j * rng.standard_normal((n, K - 1))
        hits += int(np.count_nonzero(np.abs(noise).max(axis=1) > np.abs(sig)))
        done += n
    p = hits / draws
    return p, math.sqrt(max(p * (1 - p), 1.0 / draws) / draws)


def gray_sector_weights(b_m: int) -> np.ndarray:
    """Mean fraction of wrong bits when the decision lands j sectors away."""
    M = 1 << b_m
    pos = np.arange(M)
    gray = pos ^ (pos >> 1)
    w = np.empty(M)
    for j in range(M):
        diff = gray ^ gray[(pos + j) % M]
        w[j] = np.mean([bin(int(d)).count("1") for d in diff]) / b_m
    return w


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(128)


def modulated_bit_error(K: int, b_m: int, k_factor: float,
                        quad: QuadratureSpec | None = None) -> tuple[float, float]:
    """(P_d, modulated-bit BER) for one fade, PSK read off the winning correlator.

    A correct codeword decision and the PSK decision share the same
    correlator output, so they are integrated jointly: the modulated-bit
    BER is sum_j w_j P(codeword right, phase in sector j) + P_d / 2. P_d
    and every sector mass are integrated as they are, never as one minus
    a probability near one.
    """
    quad = quad or QuadratureSpec()
    M = 1 << b_m
    if k_factor <= 0:
        p_d = 1.0 - 1.0 / K
        return p_d, 0.5
    a = math.sqrt(2.0 * k_factor)
    w = gray_sector_weights(b_m)
    lo = max(0.0, a - quad.inner_halfwidth)
    hi = a + quad.inner_halfwidth
    edges = [(2 * j - 1) * math.pi / M for j in range(1, M)]
    half = math.pi / M

    def f(y):
        z = a * y
        dens = y * math.exp(-0.5 * (y - a) ** 2)
        lose = _lose(K, y)
        gate = 1.0 - lose
        out = np.empty(M)
        out[0] = lose * special.i0e(z) * dens  # codeword lost: error mass integrated directly
        for j, e in enumerate(edges, start=1):
            th = e + half * (_GL_NODES + 1)
            out[j] = dens * gate * half * np.dot(_GL_WEIGHTS, np.exp(z * (np.cos(th) - 1))) / (2 * math.pi)
        return out

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad_vec(f, lo, hi, epsabs=quad.abs_tol, epsrel=quad.rel_tol,
                                      limit=quad.limit, points=[a] if lo < a < hi else None)
    if err > max(100 * quad.abs_tol, 1e-3 * float(np.max(np.abs(val)))):
        raise NumericalError(f"joint PSK/codeword integral did not converge (error {err})")
    p_d = min(max(float(val[0]), 0.0), 1.0)
    wrong = float(np.dot(w[1:], val[1:]))
    return p_d, min(wrong + 0.5 * p_d, 1.0)


@dataclass(frozen=True)
class BerQuery:
    scheme: str = "CIM-CPM-SS"
    channel: str = "rayleigh"
    b_c: int = 2
    b_m: int = 2
    ebn0_db: tuple[float, ...] = ()

    def __post_init__(self):
        g = np.asarray(self.ebn0_db, dtype=float)
        if g.size > 1 and np.any(np.diff(g) <= 0):
            raise ConfigurationError("Eb/N0 grid must be strictly increasing")


@dataclass(frozen=True)
class CimBer:
    p_d: float
    p_c: float
    p_m: float
    p_t: float
    p_psk: float


def ber_cim_point(b_c: int, b_m: int, avg_snr: float, variant: str = "validated",
                  channel: str = "rayleigh", quad: QuadratureSpec | None = None) -> CimBer:
    """CIM codeword/index/PSK/total BER at one average per-bit SNR (linear)."""
    quad = quad or QuadratureSpec()
    if b_m < 1 or b_c < 0:
        raise ConfigurationError("CIM needs b_c >= 0 and b_m >= 1")
    if variant not in ("verbatim", "validated"):
        raise ConfigurationError("variant must be 'verbatim' or 'validated'")
    K = 1 << b_c
    b_g = b_c + b_m
    w_idx = (K / 2) / (K - 1) if K > 1 else 0.0

    if variant == "verbatim":
        kf = b_m * avg_snr
        if channel == "rayleigh":
            p_d = pd_rayleigh(K, kf, quad)
            p_psk = psk_ber_rayleigh(b_m, avg_snr, quad)
        else:
            p_d = pd_conditional(K, kf, quad)
            p_psk = float(psk_ber_awgn(b_m, avg_snr))
        p_c = w_idx * p_d
        p_m = p_psk * (1 - p_c) + 0.5 * p_c
    else:
        r = b_g / b_m
        if channel == "rayleigh":
            p_d = pd_rayleigh(K, b_g * avg_snr, quad)
            p_psk = psk_ber_rayleigh(b_m, r * avg_snr, quad)
            p_m = _fade_average(lambda g: modulated_bit_error(K, b_m, b_g * g, quad)[1],
                                avg_snr, quad, "modulated-bit fade average")
        else:
            p_psk = float(psk_ber_awgn(b_m, r * avg_snr))
            p_d, p_m = modulated_bit_error(K, b_m, b_g * avg_snr, quad)
        p_c = w_idx * p_d
    p_t = (b_c * p_c + b_m * p_m) / b_g
    return CimBer(p_d, p_c, p_m, p_t, p_psk)


def ber_cim_total(q: BerQuery, quad: QuadratureSpec | None = None,
                  variant: str = "validated") -> list[CimBer]:
    return [ber_cim_point(q.b_c, q.b_m, float(g), variant, q.channel, quad) for g in db2lin(q.ebn0_db)]


# -- tables ---------------------------------------------------------------

def bits_per_symbol(scheme: str, b_c: int, b_m: int = 0) -> int:
    if scheme in DSSS_FAMILY:
        return 1
    if scheme in IM_FAMILY:
        return b_c
    if scheme in CIM_FAMILY:
        return b_c + b_m
    raise InputError(f"unknown scheme {scheme!r}")


def spectral_efficiency(scheme: str, b_c: int, b_m: int, sf: int) -> Fraction:
    """Bits per symbol over the occupied bandwidth 2^SF - 1 (bps/Hz)."""
    if sf < 2:
        raise ConfigurationError("SF must be at least 2")
    return Fraction(bits_per_symbol(scheme, b_c, b_m), 2**sf - 1)


def energy_savings(b_c: int, b_m: int) -> Fraction:
    """Percentage of bits carried by the index rather than by PSK energy."""
    if b_c + b_m <= 0:
        raise ConfigurationError("need at least one bit per symbol")
    return Fraction(100 * b_c, b_c + b_m)


def complexity_count(scheme: str, cfg: CpmConfig, b_c: int, b_m: int, sf: int, n_symbols: int,
                     simplified: bool = False) -> Fraction:
    """Leading-order complex multiplication counts at the receiver.

    With ``simplified`` the code length is taken as 2^SF instead of
    2^SF - 1, which gives the power-of-two forms.
    """
    N = 2**sf if simplified else 2**sf - 1
    K = 1 << b_c
    P = cfg.oversample
    Ns = n_symbols
    if scheme == "IM-CPM-SS-sep":
        return Fraction(2 * cfg.h_den * cfg.order**cfg.memory * P * N * Ns) + Fraction(K * N * Ns, 4)
    if scheme == "IM-CPM-SS":
        return Fraction(K * N * P * Ns)
    if scheme == "CIM-CPM-SS":
        return Fraction(K * N * P * Ns + (1 << b_m) * Ns)
    raise InputError(f"no complexity model for {scheme!r}")


# -- export ---------------------------------------------------------------

CURVE_COLUMNS = ("ebn0_db", "value", "scheme", "channel", "b_c", "b_m", "sf")


def write_curves(path: str | Path, rows: Iterable[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CURVE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{r[k]:.10g}" if isinstance(r[k], float) else r[k]) for k in CURVE_COLUMNS})
