"""Quasi-orthogonal CPM-SS codebook and its cross-correlation checks.

Every cyclic shift of the bipolar m-sequence is CPM-modulated from zero
phase. Shifts that are neighbours in shift order correlate at about j/pi, so
only even shift indices are kept; the last even shift (N - 1) is dropped
because it wraps around next to shift 0. That yields 2^(SF-1) - 1 codewords.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cpm import BasebandFrame, CpmConfig, PulseShape, phase_trajectory
from .errors import ConfigurationError, InputError
from .msequence import LfsrSpec, BipolarSequence, generate_msequence, shift_matrix

FORMAT_VERSION = 1


def usable_codewords(sf: int) -> int:
    return 2 ** (sf - 1) - 1


def kept_shift_indices(sf: int) -> tuple[int, ...]:
    n = 2**sf - 1
    return tuple(range(0, n, 2))[: usable_codewords(sf)]


@dataclass(frozen=True, eq=False)
class CpmSsCodebook:
    sf: int
    cfg: CpmConfig
    lfsr: LfsrSpec
    base: BipolarSequence
    kept_shifts: tuple[int, ...]
    chips: np.ndarray = field(repr=False)       # (N_c, N) bipolar rows
    codewords: np.ndarray = field(repr=False)   # (N_c, N*P) complex
    verified: bool = True
    base_rotation: int = 0

    @property
    def n(self) -> int:
        return 2**self.sf - 1

    @property
    def size(self) -> int:
        return len(self.kept_shifts)

    @property
    def samples_per_symbol(self) -> int:
        return self.n * self.cfg.oversample

    @property
    def energy(self) -> float:
        """Es: squared norm of every codeword (N*P for unit envelope)."""
        return float(self.samples_per_symbol)

    def frame(self, index: int) -> BasebandFrame:
        return BasebandFrame(self.codewords[index], self.cfg.oversample, self.n)

    def subset(self, start: int, count: int) -> slice:
        if start < 0 or start + count > self.size:
            raise ConfigurationError(
                f"need codewords {start}..{start + count - 1} but the codebook holds {self.size}"
            )
        return slice(start, start + count)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.chips.astype(np.int8).tobytes()).hexdigest()[:16]


def _modulate_rows(rows: np.ndarray, cfg: CpmConfig) -> np.ndarray:
    return np.exp(1j * phase_trajectory(rows, cfg))


def build_codebook(sf: int, cfg: CpmConfig | None = None, lfsr: LfsrSpec | None = None,
                   base_rotation: int = 0) -> CpmSsCodebook:
    """Bipolar map, N x N shift matrix, CPM per row from phase 0, adjacency pruning.

    ``base_rotation`` cyclically rotates the m-sequence before the shift
    matrix is formed (any rotation is another valid starting point).
    """
    if sf < 2:
        raise ConfigurationError("SF must be at least 2")
    cfg = cfg or CpmConfig.msk()
    lfsr = lfsr or LfsrSpec(sf)
    if lfsr.sf != sf:
        raise ConfigurationError("LFSR degree does not match SF")
    base = generate_msequence(lfsr)
    if base_rotation:
        base = BipolarSequence(np.roll(base.chips, base_rotation))
    shifts = kept_shift_indices(sf)
    rows = shift_matrix(base)[list(shifts)]
    words = _modulate_rows(rows, cfg)
    words.setflags(write=False)
    rows.setflags(write=False)
    return CpmSsCodebook(sf, cfg, lfsr, base, shifts, rows, words, verified=cfg.is_msk,
                         base_rotation=base_rotation)


def all_shift_codewords(sf: int, cfg: CpmConfig | None = None,
                        lfsr: LfsrSpec | None = None) -> np.ndarray:
    """CPM-modulated versions of all N cyclic shifts (the unpruned set)."""
    cfg = cfg or CpmConfig.msk()
    base = generate_msequence(lfsr or LfsrSpec(sf))
    return _modulate_rows(shift_matrix(base), cfg)


def _as_samples(x) -> np.ndarray:
    return x.samples if isinstance(x, BasebandFrame) else np.asarray(x, dtype=np.complex128)


def cross_correlation(a, b) -> complex:
    """Normalised correlation a^H b / (|a| |b|)."""
    a, b = _as_samples(a), _as_samples(b)
    if a.shape != b.shape:
        raise InputError(f"length mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise InputError("zero-norm frame")
    return complex(np.vdot(a, b) / (na * nb))


def adjacent_imag_closed_form(n: int, p: int) -> float:
    """(N+1)/(2NP) * cot(pi/(2P)): |Im rho| of neighbouring MSK codewords."""
    return (n + 1) / (2 * n * p) / math.tan(math.pi / (2 * p))


@dataclass
class CrossCorrReport:
    sf: int
    n: int
    shift_distance: np.ndarray = field(repr=False)   # signed d in (-N/2, N/2]
    rho: np.ndarray = field(repr=False)              # complex, one per unordered pair
    max_abs_offdiag: float                           # over kept-codeword pairs
    max_abs_nonadjacent: float
    max_abs_real: float
    adjacent_imag: tuple[float, float]               # min/max |Im rho| over d = +-1
    predicted_adjacent_imag: float
    eps: float
    violations: list[tuple[int, int, str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def _pairwise(words: np.ndarray):
    energy = np.sum(np.abs(words) ** 2, axis=1)
    gram = words.conj() @ words.T
    gram /= np.sqrt(np.outer(energy, energy))
    return gram


def verify_theorem1(sf_range, cfg: CpmConfig | None = None, eps_factor: float = 3.0,
                    lfsr_taps: dict[int, tuple[int, ...]] | None = None,
                    adjacent_tol: float = 0.05) -> list[CrossCorrReport]:
    """Scan every pair of shifted codewords and compare against the asymptotic bounds.

    Pairs are checked against |Re rho| <= 1/N + eps and |Im rho| <= eps for
    |d| > 1, with eps = eps_factor/N. Adjacent pairs (d = +-1) must satisfy
    ||Im rho| - 1/pi| <= adjacent_tol. That slack cannot shrink like 1/N:
    with P samples per chip the adjacent value tends to cot(pi/2P)/(2P),
    which sits 0.017 below 1/pi at P = 4. Violations are collected, not raised.
    """
    cfg = cfg or CpmConfig.msk()
    reports = []
    for sf in sf_range:
        n = 2**sf - 1
        taps = (lfsr_taps or {}).get(sf)
        words = all_shift_codewords(sf, cfg, LfsrSpec(sf, taps))
        gram = _pairwise(words)
        iu, ju = np.triu_indices(n, k=1)
        rho = gram[iu, ju]
        d = (ju - iu) % n
        d = np.where(d > n // 2, d - n, d)
        adj = np.abs(d) == 1
        eps = eps_factor / n

        viol: list[tuple[int, int, str]] = []
        bad_re = np.abs(rho.real) > 1 / n + eps
        bad_far = (~adj) & (np.abs(rho.imag) > eps)
        bad_adj = adj & (np.abs(np.abs(rho.imag) - 1 / math.pi) > adjacent_tol)
        for mask, why in ((bad_re, "real part"), (bad_far, "imag part, |d|>1"), (bad_adj, "imag part, |d|=1")):
            for k in np.flatnonzero(mask)[:20]:
                viol.append((int(iu[k]), int(ju[k]), why))

        kept = list(kept_shift_indices(sf))
        sub = np.abs(gram[np.ix_(kept, kept)])
        np.fill_diagonal(sub, 0.0)
        imag_adj = np.abs(rho.imag[adj])
        reports.append(CrossCorrReport(
            sf=sf, n=n, shift_distance=d, rho=rho,
            max_abs_offdiag=float(sub.max()) if len(kept) > 1 else 0.0,
            max_abs_nonadjacent=float(np.abs(rho[~adj]).max()) if (~adj).any() else 0.0,
            max_abs_real=float(np.abs(rho.real).max()),
            adjacent_imag=(float(imag_adj.min()), float(imag_adj.max())),
            predicted_adjacent_imag=adjacent_imag_closed_form(n, cfg.oversample),
            eps=eps, violations=viol,
        ))
    return reports


# -- persistence ----------------------------------------------------------

def codebook_to_dict(cb: CpmSsCodebook) -> dict:
    c = cb.cfg
    return {
        "format": "cpmss-codebook",
        "version": FORMAT_VERSION,
        "sf": cb.sf,
        "taps": list(cb.lfsr.resolved_taps()),
        "seed": cb.lfsr.resolved_seed(),
        "cpm": {
            "h_num": c.h_num, "h_den": c.h_den, "memory": c.memory, "order": c.order,
            "oversample": c.oversample, "pulse": c.pulse.kind, "bt": c.pulse.bt,
            "rolloff": c.pulse.rolloff,
        },
        "base_rotation": cb.base_rotation,
        "kept_shifts": list(cb.kept_shifts),
        "chips_sha256": cb.fingerprint(),
    }


def save_codebook(cb: CpmSsCodebook, path: str | Path) -> None:
    Path(path).write_text(json.dumps(codebook_to_dict(cb), indent=2) + "\n")


def load_codebook(path: str | Path) -> CpmSsCodebook:
    """Rebuild a codebook from its exported description and check the fingerprint."""
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "cpmss-codebook":
        raise InputError(f"{path} is not a codebook export")
    if doc.get("version") != FORMAT_VERSION:
        raise InputError(f"unsupported codebook format version {doc.get('version')}")
    c = doc["cpm"]
    cfg = CpmConfig(c["h_num"], c["h_den"], c["memory"], c["order"], c["oversample"],
                    PulseShape(c["pulse"], bt=c["bt"], rolloff=c["rolloff"]))
    cb = build_codebook(doc["sf"], cfg, LfsrSpec(doc["sf"], tuple(doc["taps"]), doc["seed"]),
                        doc.get("base_rotation", 0))
    if list(cb.kept_shifts) != doc["kept_shifts"]:
        raise InputError("kept shift list does not match this build")
    if cb.fingerprint() != doc["chips_sha256"]:
        raise InputError("codebook fingerprint mismatch")
    return cb
