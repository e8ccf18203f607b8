"""Packaged replica configurations, one per published figure.

``scale`` shrinks every stopping rule and frame count (``scale=0.1`` gives
a quick smoke run); the experiment definitions are otherwise fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import analysis as an
from ..cpm import CpmConfig
from ..errors import ConfigurationError
from .config import ExperimentConfig
from .engine import PaprCell

BETA_GRID = (0.1, 0.2, 0.25, 0.3, 0.5, 0.7, 0.9)
ALPHA_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
# PAPR_0 values used as IBO, keyed by (scheme, users)
IBO_TABLE = {
    ("IM-CPM-SS", 2): 2.55, ("IM-CPM-SS-sep", 2): 2.55, ("CIM-CPM-SS", 2): 3.03, ("CIM", 2): 6.20,
    ("IM-CPM-SS", 3): 3.60, ("IM-CPM-SS-sep", 3): 3.60, ("CIM-CPM-SS", 3): 4.21, ("CIM", 3): 7.30,
}
# bits per symbol in the NOMA experiments: IM carries 4 index bits, the CIM pair 1 + 1
NOMA_MODEMS = (("IM-CPM-SS", 4, 0), ("IM-CPM-SS-sep", 4, 0), ("CIM-CPM-SS", 1, 1), ("CIM", 1, 1))
# the PAPR campaign runs the CIM pair with b_c = b_m = 2
PAPR_MODEMS = (("IM-CPM-SS", 4, 0), ("CIM-CPM-SS", 2, 2))
PAPR_CIM = (2, 2)


@dataclass
class Replica:
    fig_id: str
    title: str
    xlabel: str
    ylabel: str = "BER"
    logy: bool = True
    curves: list[ExperimentConfig] = field(default_factory=list)
    papr_cells: list[PaprCell] = field(default_factory=list)
    analytic: Callable[[], list[dict]] | None = None


def _grid(a, b, step):
    return tuple(float(x) for x in np.round(np.arange(a, b + 1e-9, step), 6))


def _stop(cfg: ExperimentConfig, scale: float, seed: int) -> ExperimentConfig:
    return cfg.replace(seed=seed, min_errors=max(10, int(cfg.min_errors * scale)),
                       max_bits=max(10_000, int(cfg.max_bits * scale)))


AWGN_EB = _grid(0, 14, 1)
RAY_EB = _grid(0, 40, 4)


def fig3a(seed, scale):
    curves = []
    for ch, grid in (("awgn", AWGN_EB), ("rayleigh", RAY_EB)):
        for bc in (1, 2, 4):
            curves.append(ExperimentConfig("IM-CPM-SS", f"IM b_c={bc} {ch}", b_c=bc, channel=ch, grid=grid))

    def analytic():
        rows = []
        for bc in (1, 2, 4):
            for x in AWGN_EB:
                rows.append(dict(curve=f"IM b_c={bc} awgn", x=x, value=an.ber_im_awgn(bc, float(an.db2lin(x)))))
            for x in RAY_EB:
                rows.append(dict(curve=f"IM b_c={bc} rayleigh", x=x,
                                 value=an.ber_im_rayleigh(bc, float(an.db2lin(x)))))
        return rows

    return Replica("fig3a", "IM-CPM-SS, SF=6", "Eb/N0 (dB)",
                   curves=[_stop(c, scale, seed) for c in curves], analytic=analytic)


CIM_PAIRS = ((2, 2), (2, 1), (1, 2))


def fig3b(seed, scale):
    curves = []
    for ch, grid in (("awgn", AWGN_EB), ("rayleigh", RAY_EB)):
        for bc, bm in CIM_PAIRS:
            curves.append(ExperimentConfig("CIM-CPM-SS", f"CIM b_c={bc} b_m={bm} {ch}", b_c=bc, b_m=bm,
                                           channel=ch, grid=grid))

    def analytic():
        rows = []
        for bc, bm in CIM_PAIRS:
            for ch, grid in (("awgn", AWGN_EB), ("rayleigh", RAY_EB)):
                for variant in ("validated", "verbatim"):
                    for x in grid:
                        r = an.ber_cim_point(bc, bm, float(an.db2lin(x)), variant, ch)
                        rows.append(dict(curve=f"CIM b_c={bc} b_m={bm} {ch} {variant}", x=x, value=r.p_t))
        return rows

    return Replica("fig3b", "CIM-CPM-SS, SF=6", "Eb/N0 (dB)",
                   curves=[_stop(c, scale, seed) for c in curves], analytic=analytic)


def fig3c(seed, scale):
    pulses = (("REC", 1), ("RC", 1), ("GAU", 3), ("SRC", 4))
    curves = []
    for ch, grid in (("awgn", AWGN_EB), ("rayleigh", RAY_EB)):
        for scheme in ("IM-CPM-SS", "IM-CPM-SS-sep"):
            for pulse, L in pulses:
                curves.append(ExperimentConfig(scheme, f"{scheme} {pulse} {ch}", b_c=1, channel=ch, grid=grid,
                                               pulse=pulse, memory=L))
    return Replica("fig3c", "Pulse shapes, b_c=1, SF=6", "Eb/N0 (dB)",
                   curves=[_stop(c, scale, seed) for c in curves])


SNR_GRID = _grid(-30, 0, 1)


def fig4a(seed, scale):
    curves = []
    for sf in (5, 6, 7):
        curves.append(ExperimentConfig("CIM-CPM-SS", f"CIM b_c=2 b_m=2 SF={sf}", sf=sf, b_c=2, b_m=2,
                                       variable="snr", grid=SNR_GRID))
        curves.append(ExperimentConfig("IM-CPM-SS", f"IM b_c=2 SF={sf}", sf=sf, b_c=2,
                                       variable="snr", grid=SNR_GRID))
    return Replica("fig4a", "Spreading factor, AWGN", "SNR (dB)", curves=[_stop(c, scale, seed) for c in curves])


def fig4b(seed, scale):
    curves = []
    for sf in (5, 6, 7):
        for scheme in ("IM-CPM-SS", "IM-CPM-SS-sep", "DSSS-CPM", "DSSS-CPM-sep"):
            curves.append(ExperimentConfig(scheme, f"{scheme} SF={sf}", sf=sf, b_c=1,
                                           variable="snr", grid=SNR_GRID))
    return Replica("fig4b", "Joint vs separate detection, AWGN", "SNR (dB)",
                   curves=[_stop(c, scale, seed) for c in curves])


def fig4c(seed, scale):
    curves = [ExperimentConfig("CIM-CPM-SS", f"CIM-CPM-SS b_c={bc} b_m={bm}", b_c=bc, b_m=bm,
                               variable="snr", grid=SNR_GRID) for bc, bm in ((2, 2), (3, 1), (1, 3))]
    curves.append(ExperimentConfig("CIM", "CIM b_c=2 b_m=2", b_c=2, b_m=2, variable="snr", grid=SNR_GRID))
    curves += [ExperimentConfig("IM-CPM-SS", f"IM b_c={bc}", b_c=bc, variable="snr", grid=SNR_GRID)
               for bc in (2, 3, 4)]
    return Replica("fig4c", "Schemes at SF=6, AWGN", "SNR (dB)", curves=[_stop(c, scale, seed) for c in curves])


def fig5_rows(sf: int = 6, b_m: int = 2, n_symbols: int = 500) -> list[dict]:
    cfg = CpmConfig.msk()
    rows = []
    for bc in range(1, 6):
        nc = 1 << bc
        for scheme in ("DSSS-CPM-sep", "DSSS-CPM", "IM-CPM-SS-sep", "IM-CPM-SS", "CIM", "CIM-CPM-SS"):
            rows.append(dict(curve=f"SE {scheme}", x=nc, value=float(an.spectral_efficiency(scheme, bc, b_m, sf))))
        for scheme in ("IM-CPM-SS-sep", "IM-CPM-SS", "CIM-CPM-SS"):
            rows.append(dict(curve=f"complexity {scheme}", x=nc,
                             value=float(an.complexity_count(scheme, cfg, bc, b_m, sf, n_symbols))))
    return rows


def fig5(seed, scale):
    return Replica("fig5", "Spectral efficiency and complexity, SF=6, M=4, Ns=500", "N_c",
                   ylabel="value", analytic=fig5_rows)


def fig6(seed, scale):
    frames = max(10_000, int(1_000_000 * scale))
    cells = []
    for users in (2, 3):
        for beta in (0.25, 0.9):
            for scheme, bc, bm in PAPR_MODEMS:
                # the roll-off only shapes the SRRC chips, so CPM cells are run once
                cells.append(PaprCell(scheme, users, beta, float("nan"), b_c=bc, b_m=bm, frames=frames, seed=seed))
            for a in ALPHA_GRID:
                cells.append(PaprCell("CIM", users, beta, a, b_c=PAPR_CIM[0], b_m=PAPR_CIM[1], frames=frames,
                                      seed=seed))
    return Replica("fig6", "PAPR_0 vs roll-off, NOMA", "roll-off alpha", ylabel="PAPR_0 (dB)", logy=False,
                   papr_cells=cells)


def fig7(seed, scale):
    curves = []
    for users in (2, 3):
        for scheme, bc, bm in NOMA_MODEMS:
            curves.append(ExperimentConfig(scheme, f"{scheme} U={users}", b_c=bc, b_m=bm, channel="rayleigh",
                                           users=users, variable="beta", grid=BETA_GRID, ebn0_db=30.0))
    return Replica("fig7", "BER vs power allocation, Eb/N0 = 30 dB", "beta",
                   curves=[_stop(c, scale, seed) for c in curves])


NOMA_EB = _grid(0, 40, 4)


def fig8(seed, scale):
    curves = []
    for users in (2, 3):
        for scheme, bc, bm in NOMA_MODEMS:
            base = ExperimentConfig(scheme, f"{scheme} U={users} linear", b_c=bc, b_m=bm, channel="rayleigh",
                                    users=users, beta=0.25, grid=NOMA_EB)
            curves.append(base)
            curves.append(base.replace(label=f"{scheme} U={users} PA", ibo_db=IBO_TABLE[(scheme, users)]))
    return Replica("fig8", "NOMA BER with and without the Rapp PA, beta = 0.25", "Eb/N0 (dB)",
                   curves=[_stop(c, scale, seed) for c in curves])


FIGURES: dict[str, Callable[[int, float], Replica]] = {
    "fig3a": fig3a, "fig3b": fig3b, "fig3c": fig3c,
    "fig4a": fig4a, "fig4b": fig4b, "fig4c": fig4c,
    "fig5": fig5, "fig6": fig6, "fig7": fig7, "fig8": fig8,
}


def get_replica(fig_id: str, seed: int = 1, scale: float = 1.0) -> Replica:
    key = fig_id.lower().replace(".", "").replace("fig_", "fig")
    if not key.startswith("fig"):
        key = "fig" + key
    if key not in FIGURES:
        raise ConfigurationError(f"unknown figure {fig_id!r}; choose from {sorted(FIGURES)}")
    if not scale > 0:
        raise ConfigurationError("scale must be positive")
    return FIGURES[key](seed, scale)
