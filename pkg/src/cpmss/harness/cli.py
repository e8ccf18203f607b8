"""Command line entry point: ``cpmss <verb> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .. import analysis as an
from ..codebook import build_codebook, save_codebook, verify_theorem1
from ..cpm import CpmConfig, PulseShape
from ..errors import ConfigurationError, InputError, NumericalError
from .config import load_config, parse_grid
from .engine import PaprCell, run_ber_sweeps, run_papr_campaign
from .figures import FIGURES, get_replica
from .report import (plot_curves, plot_papr, write_analytic_csv, write_ber_csv, write_ccdf_csv,
                     write_papr_csv)

log = logging.getLogger("cpmss")


def _common(p: argparse.ArgumentParser, output_default: str | None = None) -> None:
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("-o", "--output", default=output_default, help="output CSV path (figures go alongside)")
    p.add_argument("--workers", type=int, default=1, help="worker processes for grid points")
    p.add_argument("--min-errors", type=int, help="stop a point after this many bit errors")
    p.add_argument("--max-bits", type=int, help="stop a point after this many bits")


def _overrides(cfg, args):
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.min_errors is not None:
        kw["min_errors"] = args.min_errors
    if args.max_bits is not None:
        kw["max_bits"] = args.max_bits
    return cfg.replace(**kw) if kw else cfg


def _png_for(csv_path: Path) -> Path:
    return csv_path.with_suffix(".png")


def cmd_codebook(args) -> int:
    cfg = CpmConfig(memory=args.memory, oversample=args.oversample, pulse=PulseShape(args.pulse))
    cb = build_codebook(args.sf, cfg)
    print(f"SF={cb.sf} N={cb.n} kept codewords={cb.size} samples/codeword={cb.samples_per_symbol} "
          f"taps={cb.lfsr.resolved_taps()} fingerprint={cb.fingerprint()}")
    if not cb.verified:
        print("note: orthogonality bounds are only established for binary h=1/2 REC")
    if args.export:
        save_codebook(cb, args.export)
        print(f"wrote {args.export}")
    status = 0
    if args.verify:
        for r in verify_theorem1([args.sf], cfg):
            print(f"SF={r.sf}: max|rho| kept={r.max_abs_offdiag:.6f} (1/N={1 / r.n:.6f}) "
                  f"max|Re rho|={r.max_abs_real:.6f} adjacent |Im rho| in "
                  f"[{r.adjacent_imag[0]:.6f}, {r.adjacent_imag[1]:.6f}] closed form "
                  f"{r.predicted_adjacent_imag:.6f} -> {'pass' if r.passed else 'FAIL'}")
            for i, j, why in r.violations[:5]:
                print(f"  violation: shifts {i}, {j}: {why}")
            status |= 0 if r.passed else 1
    return status


def cmd_ber(args) -> int:
    cfgs = [_overrides(c, args) for c in load_config(args.config)]
    curves = run_ber_sweeps(cfgs, args.workers)
    out = Path(args.output)
    write_ber_csv(out, curves)
    if not args.no_plot:
        plot_curves(_png_for(out), curves, xlabel=cfgs[0].variable)
    for c in curves:
        for p in c.points:
            tag = " (censored)" if p.censored else ""
            print(f"{c.config.name}: x={p.x:g} ber={p.ber:.3e} errors={p.errors} bits={p.bits}{tag}")
    return 0


def cmd_papr(args) -> int:
    cell = PaprCell(args.scheme, args.users, args.beta, args.rolloff, sf=args.sf, b_c=args.b_c, b_m=args.b_m,
                    sharing=args.sharing, normalization=args.normalization, framing=args.framing,
                    frames=args.frames,
                    seed=args.seed if args.seed is not None else 1)
    (res,) = run_papr_campaign([cell])
    out = Path(args.output)
    write_papr_csv(out, [cell], [res])
    write_ccdf_csv(out.with_name(out.stem + "_ccdf.csv"), [cell], [res])
    if not args.no_plot:
        plot_curves(_png_for(out), [], [dict(curve=f"{args.scheme} CCDF", x=t, value=v)
                                        for t, v in zip(res.thresholds, res.ccdf) if v > 0],
                    xlabel="PAPR threshold (dB)", ylabel="CCDF")
    flag = " (too few frames for 1e-4)" if res.insufficient else ""
    print(f"PAPR_0 at CCDF 1e-4: {res.papr0_at_1e4:.3f} dB over {res.n_frames} frames{flag}")
    return 0


def cmd_analytic(args) -> int:
    grid = parse_grid(args.grid)
    rows = []
    for x in grid:
        g = float(an.db2lin(x))
        if args.scheme == "IM":
            f = an.ber_im_awgn if args.channel == "awgn" else an.ber_im_rayleigh
            rows.append(dict(curve=f"IM b_c={args.b_c} {args.channel}", x=x, value=f(args.b_c, g)))
        else:
            r = an.ber_cim_point(args.b_c, args.b_m, g, args.variant, args.channel)
            for name in ("p_d", "p_c", "p_m", "p_t"):
                rows.append(dict(curve=f"CIM {name} {args.variant}", x=x, value=getattr(r, name)))
    out = Path(args.output)
    write_analytic_csv(out, rows)
    if not args.no_plot:
        plot_curves(_png_for(out), [], rows, xlabel="Eb/N0 (dB)")
    for r in rows:
        print(f"{r['curve']}: {r['x']:g} dB -> {r['value']:.4e}")
    return 0


def cmd_replicate(args) -> int:
    rep = get_replica(args.figure, seed=args.seed if args.seed is not None else 1, scale=args.scale)
    outdir = Path(args.output or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    stem = outdir / rep.fig_id
    analytic = rep.analytic() if rep.analytic else []
    curves = []
    if rep.curves:
        cfgs = [_overrides(c, args) for c in rep.curves]
        log.info("%s: %d curves, %d points", rep.fig_id, len(cfgs), sum(len(c.grid) for c in cfgs))
        curves = run_ber_sweeps(cfgs, args.workers)
        write_ber_csv(stem.with_suffix(".csv"), curves, rep.title)
        print(f"wrote {stem.with_suffix('.csv')}")
    if analytic:
        path = stem.with_name(rep.fig_id + "_analytic.csv")
        write_analytic_csv(path, analytic, rep.title)
        print(f"wrote {path}")
    if rep.papr_cells:
        res = run_papr_campaign(rep.papr_cells, args.workers)
        write_papr_csv(stem.with_suffix(".csv"), rep.papr_cells, res, rep.title)
        write_ccdf_csv(stem.with_name(rep.fig_id + "_ccdf.csv"), rep.papr_cells, res)
        print(f"wrote {stem.with_suffix('.csv')}")
        if not args.no_plot:
            plot_papr(stem.with_suffix(".png"), rep.papr_cells, res, rep.title)
    elif not args.no_plot:
        plot_curves(stem.with_suffix(".png"), curves, analytic, title=rep.title, xlabel=rep.xlabel,
                    ylabel=rep.ylabel, logy=rep.logy)
    if not args.no_plot:
        print(f"wrote {stem.with_suffix('.png')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cpmss", description="Spread CPM index modulation simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    c = sub.add_parser("codebook", help="build, inspect and verify a codebook")
    c.add_argument("--sf", type=int, default=6)
    c.add_argument("--pulse", default="REC")
    c.add_argument("--memory", type=int, default=1)
    c.add_argument("--oversample", type=int, default=4)
    c.add_argument("--verify", action="store_true", help="check the cross-correlation bounds")
    c.add_argument("--export", help="write the codebook description as JSON")
    c.set_defaults(func=cmd_codebook)

    b = sub.add_parser("ber", help="Monte Carlo BER sweep from a config file")
    b.add_argument("--config", required=True)
    _common(b, "ber.csv")
    b.add_argument("--no-plot", action="store_true")
    b.set_defaults(func=cmd_ber)

    q = sub.add_parser("papr", help="PAPR CCDF of superposed NOMA frames")
    q.add_argument("--scheme", default="IM-CPM-SS")
    q.add_argument("--users", type=int, default=2)
    q.add_argument("--beta", type=float, default=0.25)
    q.add_argument("--rolloff", type=float, default=0.5)
    q.add_argument("--sf", type=int, default=6)
    q.add_argument("--b-c", dest="b_c", type=int, default=4)
    q.add_argument("--b-m", dest="b_m", type=int, default=0)
    q.add_argument("--sharing", default="shared", choices=("shared", "disjoint"))
    q.add_argument("--normalization", default="ensemble", choices=("ensemble", "frame"))
    q.add_argument("--framing", default="burst", choices=("burst", "continuous"),
                   help="SRRC baseline only: isolated bursts or windows of a continuous stream")
    q.add_argument("--frames", type=int, default=1_000_000)
    _common(q, "papr.csv")
    q.add_argument("--no-plot", action="store_true")
    q.set_defaults(func=cmd_papr)

    a = sub.add_parser("analytic", help="evaluate closed-form BER curves")
    a.add_argument("--scheme", choices=("IM", "CIM"), default="IM")
    a.add_argument("--channel", choices=("awgn", "rayleigh"), default="awgn")
    a.add_argument("--b-c", dest="b_c", type=int, default=2)
    a.add_argument("--b-m", dest="b_m", type=int, default=2)
    a.add_argument("--variant", choices=("validated", "verbatim"), default="validated")
    a.add_argument("--grid", default="0:20:2", help="Eb/N0 grid in dB, start:stop:step or a list")
    _common(a, "analytic.csv")
    a.add_argument("--no-plot", action="store_true")
    a.set_defaults(func=cmd_analytic)

    r = sub.add_parser("replicate", help="run a packaged figure replica")
    r.add_argument("figure", choices=sorted(FIGURES))
    r.add_argument("--scale", type=float, default=1.0, help="multiply stopping rules and frame counts")
    _common(r, "results")
    r.add_argument("--no-plot", action="store_true")
    r.set_defaults(func=cmd_replicate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, InputError, NumericalError) as exc:
        print(f"cpmss: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
