"""CSV writers and matplotlib renderings.

Numbers are written with fixed formats and no timestamps, so identical
results always give identical bytes.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from ..channel import PaprCcdf
from .config import config_digest
from .engine import BerCurve, PaprCell

CSV_VERSION = 1
BER_COLUMNS = ("curve", "scheme", "channel", "variable", "x", "ber", "errors", "bits",
               "index_errors", "index_bits", "mod_errors", "mod_bits", "censored")
PAPR_COLUMNS = ("scheme", "users", "beta", "rolloff", "b_c", "b_m", "frames", "papr0_db", "insufficient")
ANALYTIC_COLUMNS = ("curve", "x", "value")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else f"{float(v):.10g}"
    return str(v)


def _write(path: Path | None, header: list[str], columns, rows) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def ber_rows(curves: Sequence[BerCurve]):
    for c in curves:
        cfg = c.config
        for p in c.points:
            yield dict(curve=cfg.name, scheme=cfg.scheme, channel=cfg.channel, variable=cfg.variable,
                       x=p.x, ber=float("nan") if p.censored else p.ber, errors=p.errors, bits=p.bits,
                       index_errors=p.index_errors, index_bits=p.index_bits, mod_errors=p.mod_errors,
                       mod_bits=p.mod_bits, censored=p.censored)


def write_ber_csv(path, curves: Sequence[BerCurve], title: str = "") -> str:
    header = [f"cpmss ber v{CSV_VERSION}", f"config_hash {config_digest([c.config for c in curves])}"]
    if title:
        header.append(title)
    return _write(path, header, BER_COLUMNS, ber_rows(curves))


def write_papr_csv(path, cells: Sequence[PaprCell], results: Sequence[PaprCcdf], title: str = "") -> str:
    rows = [dict(scheme=c.scheme, users=c.users, beta=c.beta, rolloff=c.rolloff, b_c=c.b_c, b_m=c.b_m,
                 frames=r.n_frames, papr0_db=r.papr0_at_1e4, insufficient=r.insufficient)
            for c, r in zip(cells, results)]
    header = [f"cpmss papr v{CSV_VERSION}"] + ([title] if title else [])
    return _write(path, header, PAPR_COLUMNS, rows)


def write_ccdf_csv(path, cells: Sequence[PaprCell], results: Sequence[PaprCcdf]) -> str:
    rows = []
    for c, r in zip(cells, results):
        last = np.flatnonzero(r.ccdf > 0)
        stop = int(last[-1]) + 2 if last.size else 1
        for t, v in zip(r.thresholds[:stop], r.ccdf[:stop]):
            rows.append(dict(curve=f"{c.scheme} U={c.users} beta={c.beta} alpha={c.rolloff}", x=t, value=v))
    return _write(path, [f"cpmss ccdf v{CSV_VERSION}"], ANALYTIC_COLUMNS, rows)


def write_analytic_csv(path, rows: Sequence[dict], title: str = "") -> str:
    header = [f"cpmss analytic v{CSV_VERSION}"] + ([title] if title else [])
    return _write(path, header, ANALYTIC_COLUMNS, rows)


# -- figures --------------------------------------------------------------

def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_curves(path, curves: Sequence[BerCurve], analytic: Sequence[dict] = (), *, title: str = "",
                xlabel: str = "", ylabel: str = "BER", logy: bool = True) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for c in curves:
        b = c.ber()
        ax.plot(c.x(), b, marker="o", ms=3, lw=1, label=c.config.name)
    groups: dict[str, list[tuple[float, float]]] = {}
    for r in analytic:
        groups.setdefault(r["curve"], []).append((r["x"], r["value"]))
    for name, pts in groups.items():
        x, y = zip(*pts)
        ax.plot(x, y, ls="--", lw=1, label=f"{name} (analysis)")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=6, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_papr(path, cells: Sequence[PaprCell], results: Sequence[PaprCcdf], title: str = "") -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    alphas = sorted({c.rolloff for c in cells if not math.isnan(c.rolloff)})
    series: dict[str, list[tuple[float, float]]] = {}
    for c, r in zip(cells, results):
        key = f"{c.scheme} U={c.users} beta={c.beta}"
        if math.isnan(c.rolloff):
            series[key] = [(a, r.papr0_at_1e4) for a in alphas]
        else:
            series.setdefault(key, []).append((c.rolloff, r.papr0_at_1e4))
    for key, pts in series.items():
        x, y = zip(*sorted(pts))
        ax.plot(x, y, marker="o", ms=3, lw=1, label=key)
    ax.set_xlabel("SRRC roll-off")
    ax.set_ylabel("PAPR_0 at CCDF 1e-4 (dB)")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=6, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
