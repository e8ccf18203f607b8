"""Transceivers built on the CPM-SS codebook.

All transmitters return a :class:`BasebandFrame` of ``I`` groups of
``samples_per_symbol`` samples, each carrying energy N*P (``N*P`` samples
of unit power; the SRRC burst adds the pulse tails). Detectors accept a
frame or an ``(I, samples_per_symbol)`` array plus an optional channel
coefficient per group and return one :class:`DetectionResult` covering
every group. Index bits are sent MSB first; PSK labels are Gray coded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import oaconvolve

from .codebook import CpmSsCodebook
from .cpm import BasebandFrame, viterbi_mlsd
from .errors import ConfigurationError, DegenerateChannelError, InputError

TIE_RTOL = 1e-9


# -- bit helpers ----------------------------------------------------------

def bits_to_int(bits: np.ndarray) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape[-1] == 0:
        return np.zeros(bits.shape[:-1], dtype=np.int64)
    weights = 1 << np.arange(bits.shape[-1] - 1, -1, -1)
    return bits @ weights


def int_to_bits(values: np.ndarray, width: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    if width == 0:
        return np.zeros(values.shape + (0,), dtype=np.int8)
    shifts = np.arange(width - 1, -1, -1)
    return ((values[..., None] >> shifts) & 1).astype(np.int8)


def gray_encode(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.int64)
    return v ^ (v >> 1)


def gray_decode(g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=np.int64).copy()
    shift = g >> 1
    while np.any(shift):
        g ^= shift
        shift >>= 1
    return g


def psk_points(order: int) -> np.ndarray:
    """Constellation position m -> exp(j 2 pi m / order)."""
    return np.exp(2j * np.pi * np.arange(order) / order)


def psk_map(bits: np.ndarray, b_m: int, gray: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Bits (I, b_m) -> (constellation positions, unit-modulus symbols)."""
    v = bits_to_int(bits)
    pos = gray_decode(v) if gray else v
    return pos, psk_points(1 << b_m)[pos] if b_m else np.ones(pos.shape, dtype=complex)


def psk_slice(z: np.ndarray, b_m: int, gray: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-angle decision; returns (positions, bits)."""
    order = 1 << b_m
    pos = np.mod(np.rint(np.angle(z) * order / (2 * np.pi)), order).astype(np.int64)
    label = gray_encode(pos) if gray else pos
    return pos, int_to_bits(label, b_m)


def argmax_lowest(mags: np.ndarray, rtol: float = TIE_RTOL) -> np.ndarray:
    """Row-wise argmax where near-equal maxima resolve to the lowest index."""
    top = mags.max(axis=-1, keepdims=True)
    return np.argmax(mags >= top * (1 - rtol), axis=-1)


def _split_bits(bits, per_group: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int8).ravel()
    if per_group == 0 or bits.size % per_group:
        raise InputError(f"{bits.size} bits do not split into groups of {per_group}")
    if bits.size and not np.isin(bits, (0, 1)).all():
        raise InputError("bits must be 0/1")
    return bits.reshape(-1, per_group)


def _groups(rx, sps: int) -> np.ndarray:
    samples = rx.samples if isinstance(rx, BasebandFrame) else np.asarray(rx, dtype=np.complex128)
    if samples.size % sps:
        raise InputError(f"received length {samples.size} is not a multiple of {sps}")
    return samples.reshape(-1, sps)


def _channel(h, n_groups: int) -> np.ndarray:
    if h is None:
        return np.ones(n_groups, dtype=complex)
    h = np.asarray(h, dtype=complex)
    return np.broadcast_to(h, (n_groups,)) if h.ndim == 0 else h.reshape(n_groups)


@dataclass
class DetectionResult:
    index_hat: np.ndarray
    bits: np.ndarray                       # (I, bits per group)
    decision_mags: np.ndarray = field(repr=False)
    psk_hat: np.ndarray | None = None
    decision: np.ndarray | None = field(default=None, repr=False)  # D_{i, n_hat}


# -- IM-CPM-SS ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ImConfig:
    """Index modulation: b_c bits choose one of the first 2^b_c codewords.

    ``offset`` moves the window along the kept-codeword list, used to give
    NOMA users disjoint slices.
    """

    codebook: CpmSsCodebook
    b_c: int
    offset: int = 0

    name = "IM-CPM-SS"

    def __post_init__(self):
        if self.b_c < 1:
            raise ConfigurationError("IM needs at least one index bit")
        self.codebook.subset(self.offset, 1 << self.b_c)

    @property
    def index_bits(self) -> int:
        return self.b_c

    @property
    def mod_bits(self) -> int:
        return 0

    @property
    def bits_per_group(self) -> int:
        return self.index_bits + self.mod_bits

    @property
    def words(self) -> np.ndarray:
        return self.codebook.codewords[self.codebook.subset(self.offset, 1 << self.b_c)]

    @property
    def code_chips(self) -> np.ndarray:
        return self.codebook.chips[self.codebook.subset(self.offset, 1 << self.b_c)]

    @property
    def samples_per_symbol(self) -> int:
        return self.codebook.samples_per_symbol

    def _frame(self, groups: np.ndarray) -> BasebandFrame:
        return BasebandFrame(groups.ravel(), self.codebook.cfg.oversample, self.codebook.n)

    def transmit(self, bits) -> BasebandFrame:
        g = _split_bits(bits, self.b_c)
        return self._frame(self.words[bits_to_int(g)])

    def detect(self, rx, h=None) -> DetectionResult:
        # noncoherent: the channel coefficient is not needed
        r = _groups(rx, self.samples_per_symbol)
        corr = r @ self.words.conj().T
        mags = np.abs(corr)
        n_hat = argmax_lowest(mags)
        return DetectionResult(n_hat, int_to_bits(n_hat, self.b_c), mags)

    def remodulate(self, res: DetectionResult) -> np.ndarray:
        return self.words[res.index_hat]


def im_transmit(bits, cfg: ImConfig) -> BasebandFrame:
    return cfg.transmit(bits)


def im_detect(rx, cfg: ImConfig) -> DetectionResult:
    return cfg.detect(rx)


# -- IM-CPM-SS-sep: Viterbi chips, then hard despreading ------------------

@dataclass(frozen=True, eq=False)
class ImSepConfig(ImConfig):
    name = "IM-CPM-SS-sep"

    def detect(self, rx, h=None) -> DetectionResult:
        r = _groups(rx, self.samples_per_symbol)
        r = _derotate(r, h)
        chips = viterbi_mlsd(r.ravel(), self.codebook.cfg, segment_chips=self.codebook.n)
        chips = chips.reshape(r.shape[0], -1)
        score = chips @ self.code_chips.T.astype(np.int64)
        n_hat = np.argmax(score, axis=1)
        return DetectionResult(n_hat, int_to_bits(n_hat, self.b_c), score.astype(float))


def _derotate(r: np.ndarray, h) -> np.ndarray:
    if h is None:
        return r
    h = _channel(h, r.shape[0])
    mag = np.abs(h)
    if np.any(mag == 0):
        raise DegenerateChannelError("channel coefficient is zero")
    return r * (h.conj() / mag)[:, None]


def sep_detect(rx, cfg: ImConfig, h=None) -> DetectionResult:
    return ImSepConfig(cfg.codebook, cfg.b_c, cfg.offset).detect(rx, h)


# -- CIM-CPM-SS -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CimConfig:
    codebook: CpmSsCodebook
    b_c: int
    b_m: int
    gray: bool = True
    offset: int = 0

    name = "CIM-CPM-SS"

    def __post_init__(self):
        if self.b_c < 0 or self.b_m < 1:
            raise ConfigurationError("CIM needs b_c >= 0 and b_m >= 1")
        self.codebook.subset(self.offset, 1 << self.b_c)

    @property
    def index_bits(self) -> int:
        return self.b_c

    @property
    def mod_bits(self) -> int:
        return self.b_m

    @property
    def bits_per_group(self) -> int:
        return self.b_c + self.b_m

    @property
    def psk_order(self) -> int:
        return 1 << self.b_m

    @property
    def samples_per_symbol(self) -> int:
        return self.codebook.samples_per_symbol

    @property
    def words(self) -> np.ndarray:
        return self.codebook.codewords[self.codebook.subset(self.offset, 1 << self.b_c)]

    def transmit(self, bits) -> BasebandFrame:
        g = _split_bits(bits, self.bits_per_group)
        idx = bits_to_int(g[:, : self.b_c])
        _, sym = psk_map(g[:, self.b_c:], self.b_m, self.gray)
        s = self.words[idx] * sym[:, None]
        return BasebandFrame(s.ravel(), self.codebook.cfg.oversample, self.codebook.n)

    def detect(self, rx, h=None) -> DetectionResult:
        r = _groups(rx, self.samples_per_symbol)
        h = _channel(1.0 if h is None else h, r.shape[0])
        gain = np.abs(h) ** 2
        if np.any(gain == 0):
            raise DegenerateChannelError("CIM detection needs a nonzero channel coefficient")
        comp = r * h.conj()[:, None]
        D = comp @ self.words.conj().T
        mags = np.abs(D)
        n_hat = argmax_lowest(mags)
        d_hat = D[np.arange(r.shape[0]), n_hat] / (gain * self.codebook.energy)
        pos, mbits = psk_slice(d_hat, self.b_m, self.gray)
        bits = np.concatenate([int_to_bits(n_hat, self.b_c), mbits], axis=1)
        return DetectionResult(n_hat, bits, mags, pos, d_hat)

    def remodulate(self, res: DetectionResult) -> np.ndarray:
        return self.words[res.index_hat] * psk_points(self.psk_order)[res.psk_hat][:, None]


def cim_transmit(bits, cfg: CimConfig) -> BasebandFrame:
    return cfg.transmit(bits)


def cim_detect(rx, h, cfg: CimConfig) -> DetectionResult:
    return cfg.detect(rx, h)


# -- DSSS-CPM: one bit per spread symbol ----------------------------------

@dataclass(frozen=True, eq=False)
class DsssConfig:
    """Bit b spreads as (1 - 2b) times the first kept chip sequence.

    ``joint`` selects noncoherent correlation against both modulated
    waveforms; otherwise the chips are Viterbi-detected and despread.
    """

    codebook: CpmSsCodebook
    joint: bool = True

    @property
    def name(self) -> str:
        return "DSSS-CPM" if self.joint else "DSSS-CPM-sep"

    index_bits = 1
    mod_bits = 0
    bits_per_group = 1

    @property
    def samples_per_symbol(self) -> int:
        return self.codebook.samples_per_symbol

    @property
    def words(self) -> np.ndarray:
        from .codebook import _modulate_rows
        c = self.codebook.chips[0]
        return _modulate_rows(np.stack([c, -c]), self.codebook.cfg)

    def transmit(self, bits) -> BasebandFrame:
        g = _split_bits(bits, 1)
        return BasebandFrame(self.words[g[:, 0]].ravel(), self.codebook.cfg.oversample, self.codebook.n)

    def detect(self, rx, h=None) -> DetectionResult:
        r = _groups(rx, self.samples_per_symbol)
        if self.joint:
            mags = np.abs(r @ self.words.conj().T)
            b = argmax_lowest(mags)
        else:
            r = _derotate(r, h)
            chips = viterbi_mlsd(r.ravel(), self.codebook.cfg, segment_chips=self.codebook.n)
            score = chips.reshape(r.shape[0], -1) @ self.codebook.chips[0].astype(np.int64)
            b = (score < 0).astype(np.int64)
            mags = np.stack([score, -score], axis=1).astype(float)
        return DetectionResult(b, b[:, None].astype(np.int8), mags)

    def remodulate(self, res: DetectionResult) -> np.ndarray:
        return self.words[res.index_hat]


# -- conventional CIM with SRRC chips -------------------------------------

def srrc_taps(rolloff: float, samples_per_chip: int, span: int) -> np.ndarray:
    """Square-root raised cosine, ``span`` chips long, scaled to sum(g^2) = P."""
    P = samples_per_chip
    t = np.arange(-span * P // 2, span * P // 2 + 1) / P
    a = rolloff
    g = np.empty_like(t)
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            g[i] = 1 - a + 4 * a / math.pi
        elif a > 0 and abs(abs(4 * a * ti) - 1) < 1e-9:
            g[i] = a / math.sqrt(2) * ((1 + 2 / math.pi) * math.sin(math.pi / (4 * a))
                                       + (1 - 2 / math.pi) * math.cos(math.pi / (4 * a)))
        else:
            g[i] = ((math.sin(math.pi * ti * (1 - a)) + 4 * a * ti * math.cos(math.pi * ti * (1 + a)))
                    / (math.pi * ti * (1 - (4 * a * ti) ** 2)))
    return g * math.sqrt(P / np.sum(g**2))


def _centered_conv(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    half = taps.size // 2
    return oaconvolve(x, taps)[half: half + x.size]


@dataclass(frozen=True, eq=False)
class CimBaselineConfig:
    """Bipolar code times PSK symbol, chips shaped by a truncated SRRC pulse.

    The same bipolar code multiplies the in-phase and quadrature parts of
    the PSK symbol. Codes are the kept m-sequence shifts, so the chip count
    per symbol matches the CPM schemes.

    ``framing="burst"`` shapes each spread symbol on its own and keeps the
    pulse tails, so a group is (N + span) * P samples and is decoded without
    reference to its neighbours (block fading changes h between groups).
    ``"continuous"`` filters the chip stream as one signal and cuts it into
    N * P sample groups; tails then leak into the neighbouring groups.
    """

    codebook: CpmSsCodebook
    b_c: int
    b_m: int
    rolloff: float = 0.5
    span: int = 6
    gray: bool = True
    offset: int = 0
    framing: str = "burst"

    name = "CIM"

    def __post_init__(self):
        self.codebook.subset(self.offset, 1 << self.b_c)
        if not 0 <= self.rolloff <= 1:
            raise ConfigurationError("SRRC roll-off must lie in [0, 1]")
        if self.span < 1:
            raise ConfigurationError("SRRC span must be at least one chip")
        if self.framing not in ("burst", "continuous"):
            raise ConfigurationError("framing must be 'burst' or 'continuous'")

    @property
    def index_bits(self) -> int:
        return self.b_c

    @property
    def mod_bits(self) -> int:
        return self.b_m

    @property
    def bits_per_group(self) -> int:
        return self.b_c + self.b_m

    @property
    def samples_per_symbol(self) -> int:
        tail = self.taps.size - 1 if self.framing == "burst" else 0
        return self.codebook.samples_per_symbol + tail

    @property
    def codes(self) -> np.ndarray:
        return self.codebook.chips[self.codebook.subset(self.offset, 1 << self.b_c)]

    @property
    def taps(self) -> np.ndarray:
        return srrc_taps(self.rolloff, self.codebook.cfg.oversample, self.span)

    def _shape(self, idx: np.ndarray, sym: np.ndarray) -> np.ndarray:
        """(I, samples_per_symbol) shaped groups."""
        P = self.codebook.cfg.oversample
        chips = self.codes[idx] * sym[:, None]
        if self.framing == "burst":
            up = np.zeros((chips.shape[0], self.codebook.samples_per_symbol), dtype=complex)
            up[:, ::P] = chips
            return oaconvolve(up, self.taps[None, :], axes=1)
        up = np.zeros(chips.size * P, dtype=complex)
        up[::P] = chips.ravel()
        return _centered_conv(up, self.taps).reshape(chips.shape[0], -1)

    def _symbols(self, bits):
        g = _split_bits(bits, self.bits_per_group)
        idx = bits_to_int(g[:, : self.b_c])
        _, sym = psk_map(g[:, self.b_c:], self.b_m, self.gray)
        return idx, sym

    def transmit(self, bits) -> BasebandFrame:
        s = self._shape(*self._symbols(bits))
        P = self.codebook.cfg.oversample
        return BasebandFrame(s.ravel(), P, self.samples_per_symbol // P)

    def detect(self, rx, h=None) -> DetectionResult:
        P, N = self.codebook.cfg.oversample, self.codebook.n
        r = _groups(rx, self.samples_per_symbol)
        I = r.shape[0]
        h = _channel(1.0 if h is None else h, I)
        gain = np.abs(h) ** 2
        if np.any(gain == 0):
            raise DegenerateChannelError("CIM detection needs a nonzero channel coefficient")
        comp = r * h.conj()[:, None]
        if self.framing == "burst":
            # full matched-filter output peaks for chip k at k*P + taps.size - 1
            mf = oaconvolve(comp, self.taps[::-1][None, :], axes=1) / P
            chips = mf[:, self.taps.size - 1:][:, : N * P: P]
        else:
            mf = _centered_conv(comp.ravel(), self.taps[::-1]) / P
            chips = mf[::P].reshape(I, N)
        D = P * (chips @ self.codes.T.astype(float))
        mags = np.abs(D)
        n_hat = argmax_lowest(mags)
        d_hat = D[np.arange(I), n_hat] / (gain * self.codebook.energy)
        pos, mbits = psk_slice(d_hat, self.b_m, self.gray)
        bits = np.concatenate([int_to_bits(n_hat, self.b_c), mbits], axis=1)
        return DetectionResult(n_hat, bits, mags, pos, d_hat)

    def remodulate(self, res: DetectionResult) -> np.ndarray:
        sym = psk_points(1 << self.b_m)[res.psk_hat]
        return self._shape(res.index_hat, sym)


def cim_baseline_transmit(bits, cfg: CimBaselineConfig, rolloff: float | None = None,
                          span: int | None = None) -> BasebandFrame:
    if rolloff is not None or span is not None:
        cfg = CimBaselineConfig(cfg.codebook, cfg.b_c, cfg.b_m,
                                cfg.rolloff if rolloff is None else rolloff,
                                cfg.span if span is None else span, cfg.gray, cfg.offset, cfg.framing)
    return cfg.transmit(bits)


def cim_baseline_detect(rx, h, cfg: CimBaselineConfig) -> DetectionResult:
    return cfg.detect(rx, h)


SCHEMES = ("IM-CPM-SS", "IM-CPM-SS-sep", "CIM-CPM-SS", "DSSS-CPM", "DSSS-CPM-sep", "CIM")


def make_modem(scheme: str, codebook: CpmSsCodebook, b_c: int = 1, b_m: int = 0,
               offset: int = 0, rolloff: float = 0.5, span: int = 6, framing: str = "burst"):
    """Construct the transceiver for a scheme name."""
    if scheme == "IM-CPM-SS":
        return ImConfig(codebook, b_c, offset)
    if scheme == "IM-CPM-SS-sep":
        return ImSepConfig(codebook, b_c, offset)
    if scheme == "CIM-CPM-SS":
        return CimConfig(codebook, b_c, b_m, offset=offset)
    if scheme == "DSSS-CPM":
        return DsssConfig(codebook, joint=True)
    if scheme == "DSSS-CPM-sep":
        return DsssConfig(codebook, joint=False)
    if scheme == "CIM":
        return CimBaselineConfig(codebook, b_c, b_m, rolloff, span, offset=offset, framing=framing)
    raise ConfigurationError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
