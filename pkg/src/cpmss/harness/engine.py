"""Monte Carlo BER and PAPR campaigns.

Random numbers come from :func:`cpmss.channel.substream` keyed by
(seed, curve, point, batch), or (seed, curve, batch) in a beta sweep, and
every grid point is simulated start to finish by a single worker, so the
worker count never changes a result.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..channel import PaprCcdf, RappPa, complex_gaussian, measure_papr, rapp_amplify, substream
from ..codebook import CpmSsCodebook, build_codebook
from ..cpm import CpmConfig
from ..errors import ConfigurationError
from ..modems import make_modem
from ..noma import NomaScenario, codeword_offsets, sic_receive, transmit_all
from .config import ExperimentConfig


@lru_cache(maxsize=32)
def cached_codebook(sf: int, cfg: CpmConfig) -> CpmSsCodebook:
    return build_codebook(sf, cfg)


def calibrate_noise(bits_per_group: int, es: float, x_db: float, axis: str = "ebn0",
                    p_total: float = 1.0) -> float:
    """Noise variance per complex sample.

    ``ebn0``: N0 = P_t Es / (b_g 10^(x/10)), so the correlator sees the
    configured energy per bit. ``snr``: N0 = P_t / 10^(x/10), the ratio of
    mean sample power to noise power.
    """
    lin = 10.0 ** (x_db / 10.0)
    if axis == "ebn0":
        return p_total * es / (bits_per_group * lin)
    if axis == "snr":
        return p_total / lin
    raise ConfigurationError(f"unknown axis {axis!r}")


def build_scenario(cfg: ExperimentConfig, beta: float | None = None) -> NomaScenario:
    cb = cached_codebook(cfg.sf, cfg.cpm_config())
    words = 1 << cfg.b_c
    offsets = codeword_offsets(cfg.users, words, cb.size, cfg.sharing)
    modems = tuple(make_modem(cfg.scheme, cb, cfg.b_c, cfg.b_m, o, cfg.srrc_rolloff, cfg.srrc_span,
                              cfg.srrc_framing) for o in offsets)
    return NomaScenario(modems, cfg.beta if beta is None else beta,
                        channel_vars=cfg.channel_vars, sic=cfg.sic)


@dataclass
class BerPoint:
    x: float
    errors: int
    bits: int
    index_errors: int
    index_bits: int
    mod_errors: int
    mod_bits: int
    batches: int
    sq_errors: int = 0              # sum over symbol groups of (bit errors in the group)^2
    group_bits: int = 0

    @property
    def ber(self) -> float:
        return self.errors / self.bits if self.bits else float("nan")

    @property
    def censored(self) -> bool:
        return self.errors == 0

    @property
    def stderr(self) -> float:
        """Standard error of the BER estimate.

        Bits of one symbol group share a fading gain and a codeword decision,
        so their errors are correlated; with per-group counts recorded the
        variance is taken from those, otherwise bits are assumed independent.
        """
        if not self.bits:
            return float("nan")
        if self.group_bits and self.sq_errors:
            g = self.bits / self.group_bits
            var = max(self.sq_errors / g - (self.errors / g) ** 2, 0.0)
            return math.sqrt(var / g) / self.group_bits
        p = self.ber
        return math.sqrt(p * (1 - p) / self.bits)


@dataclass
class BerCurve:
    config: ExperimentConfig
    points: list[BerPoint] = field(default_factory=list)

    @property
    def digest(self) -> str:
        return self.config.digest()

    def x(self) -> np.ndarray:
        return np.array([p.x for p in self.points])

    def ber(self) -> np.ndarray:
        return np.array([np.nan if p.censored else p.ber for p in self.points])

    def crossing(self, level: float) -> float:
        """x where log10 BER crosses ``level``, interpolated; nan if never."""
        x, b = self.x(), self.ber()
        ok = ~np.isnan(b)
        x, lb = x[ok], np.log10(b[ok])
        target = math.log10(level)
        for i in range(1, len(x)):
            if lb[i - 1] >= target >= lb[i]:
                if lb[i] == lb[i - 1]:
                    return float(x[i])
                return float(x[i - 1] + (lb[i - 1] - target) / (lb[i - 1] - lb[i]) * (x[i] - x[i - 1]))
        return float("nan")


def _pa_stage(x: np.ndarray, cfg: ExperimentConfig) -> np.ndarray:
    """Rapp PA at the transmitter, followed by the configured make-up gain.

    ``mean`` restores the linear chain's mean power, so the configured Eb/N0
    holds after the PA and only the envelope distortion differs. ``fixed``
    applies 10^(IBO/20), which is the identity in the small-signal region.
    ``none`` leaves the backed-off output as it is.
    """
    if cfg.ibo_db is None:
        return x
    pa = RappPa(p=cfg.pa_p, ibo_db=cfg.ibo_db)
    y = rapp_amplify(x, pa)
    if cfg.pa_makeup == "fixed":
        return y / pa.input_scale
    if cfg.pa_makeup == "none":
        return y
    p_out = np.mean(np.abs(y) ** 2)
    return y * math.sqrt(np.mean(np.abs(x) ** 2) / p_out) if p_out > 0 else y


def simulate_point(cfg: ExperimentConfig, point: int, curve: int = 0) -> BerPoint:
    x_val = float(cfg.grid[point])
    beta = x_val if cfg.variable == "beta" else cfg.beta
    x_db = cfg.ebn0_db if cfg.variable == "beta" else x_val
    sc = build_scenario(cfg, beta)
    modem = sc.modems[0]
    bg, bi = modem.bits_per_group, modem.index_bits
    es = modem.codebook.energy  # Es = N P for every scheme
    n0 = calibrate_noise(bg, es, x_db, cfg.axis, sc.p_total)
    G = cfg.batch_groups

    err = ierr = merr = nbits = sq = 0
    batch = 0
    while err < cfg.min_errors and nbits < cfg.max_bits:
        # a beta sweep reuses the same draws at every point (common random
        # numbers), so differences between allocations are not masked by noise
        rng = substream(cfg.seed, curve, batch) if cfg.variable == "beta" else substream(cfg.seed, curve, point, batch)
        bits = [rng.integers(0, 2, (G, bg), dtype=np.int8) for _ in range(sc.users)]
        waves, tx = transmit_all(sc, bits)
        tx = _pa_stage(tx.ravel(), cfg).reshape(tx.shape)
        for u in range(sc.users):
            if cfg.channel == "rayleigh":
                h = complex_gaussian(rng, G, sc.variances[u])
            else:
                h = np.ones(G, dtype=complex)
            y = h[:, None] * tx + complex_gaussian(rng, tx.shape, n0)
            res, _ = sic_receive(y, u, sc, h, waves)
            wrong = res.bits != bits[u]
            ierr += int(wrong[:, :bi].sum())
            merr += int(wrong[:, bi:].sum())
            sq += int((wrong.sum(axis=1, dtype=np.int64) ** 2).sum())
        err = ierr + merr
        nbits += G * bg * sc.users
        batch += 1
    users = sc.users
    return BerPoint(x_val, err, nbits, ierr, batch * G * bi * users, merr, batch * G * (bg - bi) * users, batch,
                    sq, bg)


def _point_task(args) -> BerPoint:
    cfg, point, curve = args
    return simulate_point(cfg, point, curve)


def run_tasks(tasks: list[tuple], workers: int = 1) -> list[BerPoint]:
    if workers <= 1 or len(tasks) <= 1:
        return [_point_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_point_task, tasks))


def run_ber_sweep(cfg: ExperimentConfig, workers: int = 1, curve: int = 0) -> BerCurve:
    """Simulate every grid point of one curve (stopping rule applied per point)."""
    points = run_tasks([(cfg, i, curve) for i in range(len(cfg.grid))], workers)
    return BerCurve(cfg, points)


def run_ber_sweeps(cfgs: list[ExperimentConfig], workers: int = 1) -> list[BerCurve]:
    tasks = [(c, i, k) for k, c in enumerate(cfgs) for i in range(len(c.grid))]
    pts = run_tasks(tasks, workers)
    curves, pos = [], 0
    for c in cfgs:
        n = len(c.grid)
        curves.append(BerCurve(c, pts[pos: pos + n]))
        pos += n
    return curves


def run_nonlinear_ber(cfg: ExperimentConfig, workers: int = 1, curve: int = 0) -> BerCurve:
    """As :func:`run_ber_sweep`, with the Rapp amplifier enabled."""
    if cfg.ibo_db is None:
        raise ConfigurationError("nonlinear run needs ibo_db set")
    return run_ber_sweep(cfg, workers, curve)


# -- PAPR -----------------------------------------------------------------

@dataclass(frozen=True)
class PaprCell:
    scheme: str
    users: int
    beta: float
    rolloff: float = 0.5
    sf: int = 6
    b_c: int = 1
    b_m: int = 0
    sharing: str = "shared"
    normalization: str = "ensemble"
    framing: str = "burst"          # SRRC schemes only: "burst" or "continuous"
    frames: int = 1_000_000
    chunk: int = 20_000
    seed: int = 1


def papr_frames(cell: PaprCell, cell_index: int = 0):
    """Yield chunks of superposed NOMA symbol frames.

    CPM frames are one symbol interval (N*P samples). For the SRRC
    baseline, ``framing="burst"`` shapes every spread symbol on its own and
    keeps the pulse tails ((N + span) * P samples); ``"continuous"`` cuts
    N*P windows out of one filtered stream, with one guard symbol on each
    side of a chunk so no tail is truncated.
    """
    if cell.framing not in ("burst", "continuous"):
        raise ConfigurationError("framing must be 'burst' or 'continuous'")
    cfg = ExperimentConfig(scheme=cell.scheme, sf=cell.sf, b_c=cell.b_c, b_m=cell.b_m,
                           srrc_rolloff=cell.rolloff, srrc_framing=cell.framing, users=cell.users,
                           beta=cell.beta, sharing=cell.sharing)
    sc = build_scenario(cfg)
    bg = sc.modems[0].bits_per_group
    guard = 1 if cell.scheme == "CIM" and cell.framing == "continuous" else 0
    done = 0
    k = 0
    while done < cell.frames:
        n = min(cell.chunk, cell.frames - done)
        rng = substream(cell.seed, cell_index, k)
        bits = [rng.integers(0, 2, (n + 2 * guard, bg), dtype=np.int8) for _ in range(sc.users)]
        _, x = transmit_all(sc, bits)
        yield x[guard: guard + n]
        done += n
        k += 1


def run_papr_cell(cell: PaprCell, cell_index: int = 0) -> PaprCcdf:
    return measure_papr(papr_frames(cell, cell_index), normalization=cell.normalization)


def _papr_task(args) -> PaprCcdf:
    cell, idx = args
    return run_papr_cell(cell, idx)


def run_papr_campaign(cells: list[PaprCell], workers: int = 1) -> list[PaprCcdf]:
    tasks = [(c, i) for i, c in enumerate(cells)]
    if workers <= 1 or len(tasks) <= 1:
        return [_papr_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_papr_task, tasks))
