"""Downlink power-domain NOMA: geometric power split, superposition and SIC.

User 1 has the weakest channel and the largest power. The receiver of
user u decodes users 1..u-1 in turn, subtracts each reconstruction and then
decodes its own signal from the residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, InputError

SIC_MODES = ("remodulate", "perfect")
SHARING_MODES = ("shared", "disjoint")


def allocate_powers(u: int, beta: float, p_total: float = 1.0) -> np.ndarray:
    """P_u = beta * P_(u-1), normalised so the powers sum to ``p_total``."""
    if not 0 < beta < 1:
        raise ConfigurationError(f"power allocation factor must lie in (0, 1), got {beta}")
    if u < 1:
        raise ConfigurationError("need at least one user")
    w = beta ** np.arange(u, dtype=float)
    return p_total * w / w.sum()


def _rows(frame) -> np.ndarray:
    s = getattr(frame, "samples", frame)
    return np.asarray(s, dtype=np.complex128)


def superpose(frames: Sequence, powers: Sequence[float]) -> np.ndarray:
    """Sample-wise sum of sqrt(P_q) * s_q."""
    if len(frames) != len(powers):
        raise InputError("one power per user frame is required")
    arrs = [_rows(f) for f in frames]
    if len({a.shape for a in arrs}) != 1:
        raise InputError("user frames differ in length")
    out = np.zeros_like(arrs[0])
    for a, p in zip(arrs, powers):
        out += np.sqrt(p) * a
    return out


def codeword_offsets(users: int, words_per_user: int, codebook_size: int,
                     sharing: str = "shared") -> list[int]:
    """Where each user's codeword window starts in the kept list.

    ``shared``: every user draws from the same first 2^b_c codewords.
    ``disjoint``: contiguous, non-overlapping slices.
    """
    if sharing not in SHARING_MODES:
        raise ConfigurationError(f"sharing must be one of {SHARING_MODES}")
    if sharing == "shared":
        return [0] * users
    if users * words_per_user > codebook_size:
        raise ConfigurationError(
            f"{users} users x {words_per_user} codewords exceed the {codebook_size} available; "
            "use shared codewords or a larger SF"
        )
    return [u * words_per_user for u in range(users)]


@dataclass(frozen=True)
class NomaScenario:
    """``modems[q]`` is user (q+1)'s transceiver, weakest channel first."""

    modems: tuple
    beta: float = 0.25
    p_total: float = 1.0
    channel_vars: tuple[float, ...] | None = None
    sic: str = "remodulate"

    def __post_init__(self):
        if self.sic not in SIC_MODES:
            raise ConfigurationError(f"sic must be one of {SIC_MODES}")
        if self.channel_vars is not None and len(self.channel_vars) != self.users:
            raise ConfigurationError("one channel variance per user is required")
        sps = {m.samples_per_symbol for m in self.modems}
        if len(sps) != 1:
            raise ConfigurationError("users must share the symbol length")
        if len({m.name for m in self.modems}) != 1:
            raise ConfigurationError("every user must run the same scheme")
        allocate_powers(self.users, self.beta, self.p_total)

    @property
    def users(self) -> int:
        return len(self.modems)

    @property
    def powers(self) -> np.ndarray:
        return allocate_powers(self.users, self.beta, self.p_total)

    @property
    def variances(self) -> tuple[float, ...]:
        return self.channel_vars or tuple(float(u + 1) for u in range(self.users))

    @property
    def samples_per_symbol(self) -> int:
        return self.modems[0].samples_per_symbol


@dataclass
class SicTrace:
    decoded_bits: list[np.ndarray] = field(default_factory=list)   # per stage, users 1..u
    residual_power: list[float] = field(default_factory=list)      # mean |y|^2 after each subtraction


def transmit_all(scenario: NomaScenario, user_bits: Sequence[np.ndarray]):
    """Per-user (I, N*P) waveforms and their superposition."""
    waves = [m.transmit(b).samples.reshape(-1, scenario.samples_per_symbol)
             for m, b in zip(scenario.modems, user_bits)]
    return waves, superpose(waves, scenario.powers)


def sic_receive(rx, user: int, scenario: NomaScenario, h, true_waves: Sequence[np.ndarray] | None = None):
    """Decode ``user`` (0-based) from its received signal.

    ``h`` is the receiver's own channel, scalar or one value per group.
    With ``sic="perfect"`` the true waveforms of users 0..user-1 must be
    given and are subtracted instead of the re-modulated decisions.
    Returns (result for ``user``, trace).
    """
    if not 0 <= user < scenario.users:
        raise InputError(f"user {user} outside a {scenario.users}-user scenario")
    sps = scenario.samples_per_symbol
    y = _rows(rx).reshape(-1, sps).copy()
    h = np.broadcast_to(np.asarray(h, dtype=complex), (y.shape[0],))
    amp = np.sqrt(scenario.powers)
    if scenario.sic == "perfect" and user and true_waves is None:
        raise InputError("perfect SIC needs the transmitted waveforms")
    trace = SicTrace()
    for q in range(user):
        modem = scenario.modems[q]
        res = modem.detect(y, h * amp[q])
        trace.decoded_bits.append(res.bits)
        wave = true_waves[q] if scenario.sic == "perfect" else modem.remodulate(res)
        y -= (h * amp[q])[:, None] * wave.reshape(y.shape)
        trace.residual_power.append(float(np.mean(np.abs(y) ** 2)))
    res = scenario.modems[user].detect(y, h * amp[user])
    trace.decoded_bits.append(res.bits)
    return res, trace
