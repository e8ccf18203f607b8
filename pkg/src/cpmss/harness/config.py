"""Experiment descriptions and their INI-style file format.

A config file holds a base experiment spread over module sections and,
optionally, ``[curve NAME]`` sections whose keys override the base. Each
curve becomes one :class:`ExperimentConfig`::

    [experiment]
    scheme = IM-CPM-SS
    seed = 7

    [modem]
    sf = 6
    b_c = 2

    [sweep]
    variable = ebn0
    grid = 0:12:2

    [curve rayleigh]
    channel = rayleigh
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from ..cpm import CpmConfig, PulseShape
from ..errors import ConfigurationError
from ..modems import SCHEMES

SWEEP_VARIABLES = ("ebn0", "snr", "beta")
CHANNELS = ("awgn", "rayleigh")
PA_MAKEUP = ("mean", "fixed", "none")


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str = "IM-CPM-SS"
    label: str = ""
    seed: int = 1
    # modem
    sf: int = 6
    b_c: int = 1
    b_m: int = 0
    srrc_rolloff: float = 0.5
    srrc_span: int = 6
    srrc_framing: str = "burst"
    # cpm
    pulse: str = "REC"
    memory: int = 1
    bt: float = 0.3
    pulse_rolloff: float = 0.3
    oversample: int = 4
    # channel
    channel: str = "awgn"
    ibo_db: float | None = None
    pa_p: float = 2.0
    pa_makeup: str = "mean"         # "mean", "fixed" or "none"
    # noma
    users: int = 1
    beta: float = 0.25
    sic: str = "remodulate"
    sharing: str = "shared"
    channel_vars: tuple[float, ...] | None = None
    # sweep
    variable: str = "ebn0"
    grid: tuple[float, ...] = (0.0,)
    ebn0_db: float = 30.0           # fixed Eb/N0 when the sweep variable is beta
    # stopping rule
    min_errors: int = 100
    max_bits: int = 10_000_000
    batch_groups: int = 2000

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.channel not in CHANNELS:
            raise ConfigurationError(f"channel must be one of {CHANNELS}")
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigurationError(f"sweep variable must be one of {SWEEP_VARIABLES}")
        if self.min_errors < 1 or self.max_bits < 1 or self.batch_groups < 1:
            raise ConfigurationError("stopping rule values must be positive")
        if self.users < 1:
            raise ConfigurationError("need at least one user")
        if self.pa_makeup not in PA_MAKEUP:
            raise ConfigurationError(f"pa_makeup must be one of {PA_MAKEUP}")
        g = np.asarray(self.grid, dtype=float)
        if g.size == 0 or (g.size > 1 and np.any(np.diff(g) <= 0)):
            raise ConfigurationError("sweep grid must be non-empty and strictly increasing")

    @property
    def name(self) -> str:
        return self.label or self.scheme

    @property
    def axis(self) -> str:
        """Noise calibration convention: per-bit (ebn0) or per-sample (snr)."""
        return "snr" if self.variable == "snr" else "ebn0"

    def cpm_config(self) -> CpmConfig:
        return CpmConfig(memory=self.memory, oversample=self.oversample,
                         pulse=PulseShape(self.pulse, bt=self.bt, rolloff=self.pulse_rolloff))

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def config_digest(configs) -> str:
    h = hashlib.sha256()
    for c in configs:
        h.update(c.digest().encode())
    return h.hexdigest()[:16]


# -- parsing --------------------------------------------------------------

SECTION_KEYS = {
    "experiment": ("scheme", "label", "seed"),
    "modem": ("sf", "b_c", "b_m", "srrc_rolloff", "srrc_span", "srrc_framing"),
    "cpm": ("pulse", "memory", "bt", "pulse_rolloff", "oversample"),
    "channel": ("channel", "ibo_db", "pa_p", "pa_makeup"),
    "noma": ("users", "beta", "sic", "sharing", "channel_vars"),
    "sweep": ("variable", "grid", "ebn0_db"),
    "stopping": ("min_errors", "max_bits", "batch_groups"),
}
_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def parse_grid(text: str) -> tuple[float, ...]:
    """``a, b, c`` or an inclusive range ``start:stop:step``."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ConfigurationError(f"range grid needs start:stop:step, got {text!r}")
        start, stop, step = parts
        n = int(round((stop - start) / step)) + 1
        return tuple(float(round(start + i * step, 10)) for i in range(n))
    return tuple(float(p) for p in text.replace(",", " ").split())


def _convert(key: str, raw: str):
    t = _FIELD_TYPES[key]
    raw = raw.strip()
    if key in ("grid",):
        return parse_grid(raw)
    if key == "channel_vars":
        return None if raw.lower() in ("", "none", "default") else tuple(float(v) for v in raw.replace(",", " ").split())
    if key == "ibo_db":
        return None if raw.lower() in ("", "none", "off") else float(raw)
    try:
        if t in ("int", int):
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        if t in ("float", float):
            return float(raw)
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {key}: {raw!r}") from exc
    return raw


def _collect(section, allowed=None) -> dict:
    out = {}
    for key, raw in section.items():
        if key not in _FIELD_TYPES or (allowed is not None and key not in allowed):
            raise ConfigurationError(f"unknown key {key!r} in section [{section.name}]")
        out[key] = _convert(key, raw)
    return out


def parse_config_text(text: str, source: str = "<string>") -> list[ExperimentConfig]:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: {exc}") from exc
    base: dict = {}
    curves: list[tuple[str, dict]] = []
    for name in cp.sections():
        if name.startswith("curve"):
            label = name[len("curve"):].strip()
            over = _collect(cp[name])
            over.setdefault("label", label)
            curves.append((label, over))
        elif name in SECTION_KEYS:
            base.update(_collect(cp[name], SECTION_KEYS[name]))
        else:
            raise ConfigurationError(f"{source}: unknown section [{name}]")
    if not curves:
        return [ExperimentConfig(**base)]
    return [ExperimentConfig(**{**base, **over}) for _, over in curves]


def load_config(path: str | Path) -> list[ExperimentConfig]:
    p = Path(path)
    if not p.exists():
        raise ConfigurationError(f"config file {p} not found")
    return parse_config_text(p.read_text(), str(p))


def dump_config(cfg: ExperimentConfig) -> str:
    """Render one experiment in the file format (round-trips through the parser)."""
    d = cfg.to_dict()
    lines = []
    for section, keys in SECTION_KEYS.items():
        lines.append(f"[{section}]")
        for k in keys:
            v = d[k]
            if v is None:
                v = "none"
            elif isinstance(v, list):
                v = ", ".join(repr(float(x)) for x in v)
            lines.append(f"{k} = {v}")
        lines.append("")
    return "\n".join(lines)
