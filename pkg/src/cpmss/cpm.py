"""Continuous phase modulation: pulses, phase trajectories and trellis MLSD.

Time is measured in symbol (chip) intervals, T = 1. A frame carries ``P``
samples per interval taken at the sub-interval end points t = n + k/P,
k = 1..P. The last sample of interval n therefore sits exactly on the
boundary, where the phase equals the accumulated phase of the next state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from .errors import ConfigurationError, InputError

PULSE_KINDS = ("REC", "RC", "SRC", "GAU")


@dataclass(frozen=True)
class PulseShape:
    """Frequency pulse family.

    ``bt`` is used by GAU and ``rolloff`` by SRC. Pulses with infinite support
    (GAU, SRC) are truncated to the configured CPM memory and renormalised so
    that the pulse integrates to 1/2.
    """

    kind: str = "REC"
    bt: float = 0.3
    rolloff: float = 0.3

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in PULSE_KINDS:
            raise ConfigurationError(f"unknown pulse kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)


@dataclass(frozen=True)
class CpmConfig:
    h_num: int = 1
    h_den: int = 2
    memory: int = 1
    order: int = 2
    oversample: int = 4
    pulse: PulseShape = field(default_factory=PulseShape)

    def __post_init__(self):
        if self.h_num < 1 or self.h_den < 1 or math.gcd(self.h_num, self.h_den) != 1:
            raise ConfigurationError("modulation index must be h_m/h_d with coprime positive integers")
        if self.memory < 1:
            raise ConfigurationError("CPM memory L must be >= 1")
        if self.order < 2 or self.order & (self.order - 1):
            raise ConfigurationError("alphabet size M must be a power of two")
        if self.oversample < 1:
            raise ConfigurationError("oversampling factor P must be >= 1")

    @classmethod
    def msk(cls, oversample: int = 4) -> "CpmConfig":
        return cls(1, 2, 1, 2, oversample, PulseShape("REC"))

    @classmethod
    def gaussian(cls, bt: float = 0.3, memory: int = 3, oversample: int = 4) -> "CpmConfig":
        return cls(1, 2, memory, 2, oversample, PulseShape("GAU", bt=bt))

    @classmethod
    def spectral_rc(cls, rolloff: float = 0.3, memory: int = 4, oversample: int = 4) -> "CpmConfig":
        return cls(1, 2, memory, 2, oversample, PulseShape("SRC", rolloff=rolloff))

    @property
    def h(self) -> Fraction:
        return Fraction(self.h_num, self.h_den)

    @property
    def alphabet(self) -> np.ndarray:
        return np.arange(-(self.order - 1), self.order, 2)

    @property
    def n_phase_states(self) -> int:
        per = self.order ** (self.memory - 1)
        return (2 * self.h_den if self.h_num % 2 else self.h_den) * per

    @property
    def is_msk(self) -> bool:
        return (self.h_num, self.h_den, self.memory, self.order, self.pulse.kind) == (1, 2, 1, 2, "REC")


@dataclass(frozen=True)
class PhaseState:
    """Accumulated phase plus the L-1 most recent symbols (oldest first).

    Zeros in ``recent`` stand for "no symbol yet" at the start of a burst.
    """

    accumulated: float = 0.0
    recent: tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class BasebandFrame:
    samples: np.ndarray = field(repr=False)
    samples_per_chip: int = 1
    chips_per_symbol: int = 1

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.complex128))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def samples_per_symbol(self) -> int:
        return self.samples_per_chip * self.chips_per_symbol

    def groups(self) -> np.ndarray:
        """Samples reshaped to one row per spread symbol."""
        sps = self.samples_per_symbol
        if self.samples.size % sps:
            raise InputError(f"frame length {self.samples.size} is not a multiple of {sps}")
        return self.samples.reshape(-1, sps)

    def with_samples(self, samples: np.ndarray) -> "BasebandFrame":
        return BasebandFrame(samples, self.samples_per_chip, self.chips_per_symbol)


# -- pulses ---------------------------------------------------------------

def frequency_pulse(t: np.ndarray, cfg: CpmConfig) -> np.ndarray:
    """Unnormalised frequency pulse g(t) on [0, L]; zero outside."""
    t = np.asarray(t, dtype=float)
    L = cfg.memory
    p = cfg.pulse
    inside = (t >= 0) & (t <= L)
    if p.kind == "REC":
        g = np.full_like(t, 1.0 / (2 * L))
    elif p.kind == "RC":
        g = (1 - np.cos(2 * np.pi * t / L)) / (2 * L)
    elif p.kind == "SRC":
        tc = t - L / 2
        a = p.rolloff
        x = 2 * np.pi * tc
        sinc = np.where(np.abs(x) < 1e-12, 1.0, np.sin(x) / np.where(x == 0, 1, x))
        den = 1 - (4 * a * tc) ** 2
        sing = np.abs(den) < 1e-10
        cosf = np.where(sing, np.pi / 4, np.cos(np.pi * a * 2 * tc) / np.where(sing, 1, den))
        g = 0.5 * sinc * cosf
    else:  # GAU
        tc = t - L / 2
        k = 2 * np.pi * p.bt / math.sqrt(math.log(2))
        # Q(x) = erfc(x / sqrt 2) / 2
        g = 0.25 * (erfc(k * (tc - 0.5) / math.sqrt(2)) - erfc(k * (tc + 0.5) / math.sqrt(2)))
    return np.where(inside, g, 0.0)


@lru_cache(maxsize=64)
def _phase_table(cfg: CpmConfig) -> np.ndarray:
    """q(j/P) for j = 0..L*P, with q(L) = 1/2 exactly."""
    L, P = cfg.memory, cfg.oversample
    tj = np.arange(L * P + 1) / P
    kind = cfg.pulse.kind
    if kind == "REC":
        q = tj / (2 * L)
    elif kind == "RC":
        q = tj / (2 * L) - np.sin(2 * np.pi * tj / L) / (4 * np.pi)
    else:
        dense = 2048
        t = np.linspace(0, L, L * P * dense + 1)
        g = frequency_pulse(t, cfg)
        cum = np.concatenate([[0.0], np.cumsum((g[1:] + g[:-1]) * 0.5 * np.diff(t))])
        q = cum[::dense] * (0.5 / cum[-1])
    q[-1] = 0.5
    q.setflags(write=False)
    return q


def phase_smoothing(t: np.ndarray, cfg: CpmConfig) -> np.ndarray:
    """q(t), evaluated exactly for REC/RC and by dense integration otherwise."""
    t = np.asarray(t, dtype=float)
    L = cfg.memory
    kind = cfg.pulse.kind
    tt = np.clip(t, 0, L)
    if kind == "REC":
        q = tt / (2 * L)
    elif kind == "RC":
        q = tt / (2 * L) - np.sin(2 * np.pi * tt / L) / (4 * np.pi)
    else:
        dense = np.linspace(0, L, 20001)
        g = frequency_pulse(dense, cfg)
        cum = np.concatenate([[0.0], np.cumsum((g[1:] + g[:-1]) * 0.5 * np.diff(dense))])
        q = np.interp(tt, dense, cum * (0.5 / cum[-1]))
    return np.where(t >= L, 0.5, np.where(t <= 0, 0.0, q))


# -- modulation -----------------------------------------------------------

def _check_symbols(symbols: np.ndarray, cfg: CpmConfig) -> np.ndarray:
    a = np.asarray(symbols)
    if a.size and not np.isin(a, cfg.alphabet).all():
        raise InputError(f"symbols outside the {cfg.order}-ary alphabet {cfg.alphabet.tolist()}")
    return a.astype(np.int64)


def phase_trajectory(symbols, cfg: CpmConfig, initial: PhaseState | None = None) -> np.ndarray:
    """Sampled phase phi(t; a), P samples per symbol.

    ``symbols`` may be 2-D, in which case each row is an independent burst
    started from ``initial``.
    """
    initial = initial or PhaseState()
    a = _check_symbols(symbols, cfg)
    L, P = cfg.memory, cfg.oversample
    ph = math.pi * cfg.h_num / cfg.h_den
    recent = tuple(initial.recent)
    if len(recent) > L - 1:
        recent = recent[len(recent) - (L - 1):] if L > 1 else ()
    pad = np.zeros(L - 1 - len(recent), dtype=np.int64)
    prefix = np.concatenate([pad, np.asarray(recent, dtype=np.int64)])
    lead = np.broadcast_to(prefix, a.shape[:-1] + prefix.shape)
    ext = np.concatenate([lead, a], axis=-1)  # ext[i] = a_{i-(L-1)}
    n = a.shape[-1]
    if n == 0:
        return np.zeros(a.shape[:-1] + (0,))
    q = _phase_table(cfg)
    k = np.arange(1, P + 1)
    partial = np.zeros(a.shape[:-1] + (n, P))
    for lag in range(L):
        sym = ext[..., L - 1 - lag: L - 1 - lag + n]
        partial += sym[..., :, None] * q[lag * P + k]
    # symbols that have left the L-interval window
    left = np.concatenate([np.zeros(a.shape[:-1] + (1,)), np.cumsum(ext[..., :n], axis=-1)[..., :-1]], axis=-1)
    phase = initial.accumulated + ph * left[..., :, None] + 2 * ph * partial
    return phase.reshape(a.shape[:-1] + (n * P,))


def final_state(symbols, cfg: CpmConfig, initial: PhaseState | None = None) -> PhaseState:
    """Phase state after the last symbol, per the accumulated/recent decomposition."""
    initial = initial or PhaseState()
    a = _check_symbols(symbols, cfg).ravel()
    L = cfg.memory
    prior = list(initial.recent)[-(L - 1):] if L > 1 else []
    prior = [0] * (L - 1 - len(prior)) + prior
    ext = prior + a.tolist()
    leaving = ext[: len(ext) - (L - 1)] if L > 1 else ext
    acc = initial.accumulated + math.pi * cfg.h_num / cfg.h_den * sum(leaving)
    recent = tuple(ext[len(ext) - (L - 1):]) if L > 1 else ()
    return PhaseState(acc, recent)


def modulate(symbols, cfg: CpmConfig, initial: PhaseState | None = None,
             chips_per_symbol: int = 1) -> BasebandFrame:
    phase = phase_trajectory(symbols, cfg, initial)
    return BasebandFrame(np.exp(1j * phase).ravel(), cfg.oversample, chips_per_symbol)


# -- trellis --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CpmTrellis:
    """Phase trellis of a rational-index CPM scheme.

    States are (phase index j, recent symbols) with phase j*pi/h_d. The state
    list contains every state reachable from the all-zero start state,
    including start-up states whose history still holds zeros.
    """

    cfg: CpmConfig
    states: tuple[tuple[int, tuple[int, ...]], ...]
    next_state: np.ndarray      # (S, M) int
    branch_waves: np.ndarray    # (S, M, P) complex
    inc_branch: np.ndarray      # (S, Kmax) flat branch index s*M + m, -1 padded

    @property
    def steady_states(self) -> list[tuple[int, tuple[int, ...]]]:
        return [s for s in self.states if 0 not in s[1]]


@lru_cache(maxsize=32)
def build_trellis(cfg: CpmConfig) -> CpmTrellis:
    L, P = cfg.memory, cfg.oversample
    mod = 2 * cfg.h_den
    alphabet = cfg.alphabet.tolist()
    q = _phase_table(cfg)
    k = np.arange(1, P + 1)
    ph = math.pi * cfg.h_num / cfg.h_den

    start = (0, (0,) * (L - 1))
    index = {start: 0}
    order = [start]
    edges: list[list[int]] = []
    waves: list[list[np.ndarray]] = []
    i = 0
    while i < len(order):
        j, recent = order[i]
        row_next, row_wave = [], []
        for a in alphabet:
            window = recent + (a,)  # oldest first, newest last
            partial = np.zeros(P)
            for lag in range(L):
                partial += window[L - 1 - lag] * q[lag * P + k]
            row_wave.append(np.exp(1j * (j * math.pi / cfg.h_den + 2 * ph * partial)))
            nxt = ((j + cfg.h_num * window[0]) % mod, window[1:])
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            row_next.append(index[nxt])
        edges.append(row_next)
        waves.append(row_wave)
        i += 1

    S, M = len(order), len(alphabet)
    next_state = np.array(edges, dtype=np.int64)
    incoming: list[list[int]] = [[] for _ in range(S)]
    for s in range(S):
        for m in range(M):
            incoming[next_state[s, m]].append(s * M + m)
    kmax = max(len(v) for v in incoming)
    inc = np.full((S, kmax), -1, dtype=np.int64)
    for s, v in enumerate(incoming):
        inc[s, : len(v)] = v
    return CpmTrellis(cfg, tuple(order), next_state, np.array(waves), inc)


def viterbi_mlsd(rx: BasebandFrame | np.ndarray, cfg: CpmConfig,
                 segment_chips: int | None = None) -> np.ndarray:
    """Coherent maximum-likelihood sequence detection over the phase trellis.

    The branch metric is Re<r_n, w>, the real part of the correlation of
    the received interval with the candidate branch waveform. When
    ``segment_chips`` is given (default: the frame's ``chips_per_symbol`` if
    larger than one) every segment is treated as a separate burst started
    from zero phase, as the codebook stores it, and all segments are decoded
    together.
    """
    if isinstance(rx, BasebandFrame):
        samples = rx.samples
        if segment_chips is None and rx.chips_per_symbol > 1:
            segment_chips = rx.chips_per_symbol
    else:
        samples = np.asarray(rx, dtype=np.complex128)
    P = cfg.oversample
    if samples.size % P:
        raise InputError(f"frame length {samples.size} is not a multiple of P={P}")
    n_chips = samples.size // P
    if n_chips == 0:
        return np.zeros(0, dtype=np.int64)
    seg = segment_chips or n_chips
    if n_chips % seg:
        raise InputError("frame does not hold a whole number of segments")
    r = samples.reshape(n_chips // seg, seg, P)

    tr = build_trellis(cfg)
    S, M = tr.next_state.shape
    alphabet = cfg.alphabet
    wc = tr.branch_waves.reshape(S * M, P).conj().T  # (P, S*M)
    src = np.repeat(np.arange(S), M)
    inc = tr.inc_branch
    valid = inc >= 0
    inc_safe = np.where(valid, inc, 0)

    B = r.shape[0]
    metric = np.full((B, S), -np.inf)
    metric[:, 0] = 0.0
    surv = np.empty((seg, B, S), dtype=np.int32)
    for t in range(seg):
        bm = (r[:, t, :] @ wc).real                      # (B, S*M)
        cand = metric[:, src] + bm
        gathered = np.where(valid, cand[:, inc_safe], -np.inf)  # (B, S, Kmax)
        best = np.argmax(gathered, axis=2)
        metric = np.take_along_axis(gathered, best[..., None], axis=2)[..., 0]
        surv[t] = np.take_along_axis(np.broadcast_to(inc_safe, (B,) + inc.shape), best[..., None], axis=2)[..., 0]

    state = np.argmax(metric, axis=1)
    out = np.empty((B, seg), dtype=np.int64)
    rows = np.arange(B)
    for t in range(seg - 1, -1, -1):
        br = surv[t, rows, state]
        out[:, t] = alphabet[br % M]
        state = br // M
    return out.ravel()
