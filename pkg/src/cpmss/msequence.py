"""Maximal-length sequences from a Fibonacci LFSR.

Register stages are numbered 1..SF. Stage 1 receives the feedback bit, the
output is read from stage SF, and the feedback is the XOR of the stages listed
in ``taps``. Bit 0 maps to chip +1 and bit 1 to chip -1, so one period of a
bipolar m-sequence always sums to -1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

# Primitive feedback polynomials x^SF + ... + 1, written as stage numbers.
# e.g. SF=6 -> (6, 5) is x^6 + x^5 + 1, the reciprocal of x^6 + x + 1.
DEFAULT_TAPS: dict[int, tuple[int, ...]] = {
    2: (2, 1),
    3: (3, 2),
    4: (4, 3),
    5: (5, 3),
    6: (6, 5),
    7: (7, 6),
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
    11: (11, 9),
    12: (12, 11, 10, 4),
}


def reciprocal_taps(taps: tuple[int, ...]) -> tuple[int, ...]:
    """Taps of the reciprocal polynomial; it generates the time-reversed sequence."""
    sf = max(taps)
    inner = sorted({sf - t for t in taps if t != sf}, reverse=True)
    return (sf, *inner)


@dataclass(frozen=True)
class LfsrSpec:
    sf: int
    taps: tuple[int, ...] | None = None
    seed: int | None = None

    def resolved_taps(self) -> tuple[int, ...]:
        if self.taps is not None:
            return tuple(int(t) for t in self.taps)
        try:
            return DEFAULT_TAPS[self.sf]
        except KeyError:
            raise ConfigurationError(
                f"no built-in primitive polynomial for SF={self.sf}; pass taps explicitly"
            ) from None

    def resolved_seed(self) -> int:
        # all-ones register unless told otherwise
        return (1 << self.sf) - 1 if self.seed is None else int(self.seed)

    @property
    def length(self) -> int:
        return (1 << self.sf) - 1


@dataclass(frozen=True, eq=False)
class BipolarSequence:
    chips: np.ndarray = field(repr=False)
    shift: int = 0

    def __post_init__(self):
        chips = np.asarray(self.chips, dtype=np.int8)
        chips.setflags(write=False)
        object.__setattr__(self, "chips", chips)

    def __len__(self) -> int:
        return self.chips.size


def lfsr_bits(spec: LfsrSpec) -> np.ndarray:
    """One period of raw LFSR output bits (0/1)."""
    sf = spec.sf
    if sf < 2:
        raise ConfigurationError("SF must be at least 2")
    taps = spec.resolved_taps()
    if max(taps) != sf or min(taps) < 1:
        raise ConfigurationError(f"taps {taps} do not describe a degree-{sf} polynomial")
    seed = spec.resolved_seed()
    if seed <= 0 or seed >= (1 << sf):
        raise ConfigurationError("LFSR seed must be a nonzero SF-bit integer")

    n = spec.length
    state = [(seed >> i) & 1 for i in range(sf)]  # state[i] is stage i+1
    start = list(state)
    out = np.empty(n, dtype=np.int8)
    for i in range(n):
        out[i] = state[-1]
        fb = 0
        for t in taps:
            fb ^= state[t - 1]
        state = [fb] + state[:-1]
        if state == start and i < n - 1:
            raise ConfigurationError(
                f"taps {taps} are not primitive: period {i + 1} < {n}"
            )
    if state != start:
        raise ConfigurationError(f"taps {taps} are not primitive for SF={sf}")
    return out


def generate_msequence(spec: LfsrSpec) -> BipolarSequence:
    bits = lfsr_bits(spec)
    return BipolarSequence(1 - 2 * bits.astype(np.int8), shift=0)


def cyclic_shift(seq: BipolarSequence, d: int) -> BipolarSequence:
    """Right-shift by ``d`` chips (negative ``d`` shifts left): out[i] = in[i - d]."""
    n = len(seq)
    return BipolarSequence(np.roll(seq.chips, d), shift=(seq.shift + d) % n)


def shift_matrix(seq: BipolarSequence) -> np.ndarray:
    """N x N matrix whose row n is the base sequence shifted right by n."""
    n = len(seq)
    base = seq.chips
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return base[idx]


def circular_autocorrelation(seq: BipolarSequence) -> np.ndarray:
    """Unnormalised periodic autocorrelation at every lag."""
    c = seq.chips.astype(np.int64)
    return np.array([int(np.dot(c, np.roll(c, k))) for k in range(c.size)])
