"""Command-line surface: replay, analyze, fit, condition, simulate.

Exit codes: 0 success, 1 validation or data failure, 2 usage error.
Report-producing commands write delimited text plus a PNG figure for
each table unless --no-figures is given.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .book import BUY, SELL
from .engine import DayResult, run_day
from .errors import LobLabError
from .flowio import demux, load_flow, write_flow
from .market import Phase
from .relprice import RelPriceSample, samples_from
from .stats import (PdfEstimate, conditional_pdfs, estimate_pdf,
                    fit_power_law, group_by_context, ks_critical,
                    two_sample_ks)
from .synth import config_to_text, generate_day, load_config

_SIDE_CODE = {BUY: "B", SELL: "S"}
_CODE_SIDE = {"B": BUY, "S": SELL}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (LobLabError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loblab",
        description="Limit-order-book laboratory: replay, measure, and "
                    "regenerate three-phase order flow.")
    sub = parser.add_subparsers(dest="command", required=True)

    replay = sub.add_parser("replay", help="replay a flow file through the engine")
    replay.add_argument("flow", help="order-flow file")
    _add_prev_close(replay)
    replay.add_argument("--outdir", default=".", help="output directory")
    replay.set_defaults(func=cmd_replay)

    analyze = sub.add_parser(
        "analyze", help="replay and export relative-price samples and densities")
    analyze.add_argument("flows", nargs="+", help="order-flow file(s)")
    _add_prev_close(analyze)
    analyze.add_argument("--stock", action="append", default=None,
                         help="restrict to this stock code (repeatable)")
    analyze.add_argument("--outdir", default=".", help="output directory")
    analyze.add_argument("--no-figures", action="store_true",
                         help="skip PNG rendering")
    analyze.set_defaults(func=cmd_analyze)

    fit = sub.add_parser("fit", help="fit power-law exponents to exported samples")
    fit.add_argument("samples", help="samples file from analyze")
    fit.add_argument("--xlo", type=float, default=0.003, help="fit range lower bound")
    fit.add_argument("--xhi", type=float, default=0.04, help="fit range upper bound")
    fit.add_argument("--phase", choices=[p.value for p in Phase], default="cda")
    fit.add_argument("--side", choices=["B", "S"], default=None,
                     help="fit one side only (default: both)")
    fit.add_argument("--sign", choices=["pos", "neg"], default=None,
                     help="fit one sign of x only (default: both)")
    fit.add_argument("--outdir", default=".", help="output directory")
    fit.add_argument("--no-figures", action="store_true")
    fit.set_defaults(func=cmd_fit)

    condition = sub.add_parser(
        "condition", help="quartile-conditioned densities and pairwise KS table")
    condition.add_argument("samples", help="samples file from analyze")
    condition.add_argument("--key", choices=["spread", "volatility"], required=True)
    condition.add_argument("--groups", type=int, default=4)
    condition.add_argument("--phase", choices=[p.value for p in Phase], default="cda")
    condition.add_argument("--side", choices=["B", "S"], default=None,
                           help="condition one side only (default: both)")
    condition.add_argument("--outdir", default=".", help="output directory")
    condition.add_argument("--no-figures", action="store_true")
    condition.set_defaults(func=cmd_condition)

    simulate = sub.add_parser("simulate", help="generate a synthetic flow file")
    simulate.add_argument("--config", required=True, help="generator config file")
    simulate.add_argument("--seed", type=int, default=None,
                          help="override the config seed")
    simulate.add_argument("--out", required=True, help="output flow file")
    simulate.set_defaults(func=cmd_simulate)
    return parser


def _add_prev_close(parser) -> None:
    parser.add_argument("--prev-close", type=int, default=None,
                        help="previous close in ticks, applied to every stock")
    parser.add_argument("--prev-close-file", default=None,
                        help="file of stock,prev_close_ticks lines")


def _prev_close_lookup(args) -> dict[str, int]:
    table: dict[str, int] = {}
    if args.prev_close_file:
        for raw in Path(args.prev_close_file).read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line or line.startswith("#") or line.startswith("stock"):
                continue
            stock, _, ticks = line.partition(",")
            table[stock.strip()] = int(ticks)
    return table


def _prev_close_for(stock: str, table: dict[str, int], args) -> int:
    if stock in table:
        return table[stock]
    if args.prev_close is not None:
        return args.prev_close
    raise ValueError(f"no previous close given for stock {stock}")


def _replay_all(flow_paths, args) -> dict[str, DayResult]:
    table = _prev_close_lookup(args)
    records = []
    for path in flow_paths:
        records.extend(load_flow(path))
    wanted = set(getattr(args, "stock", None) or [])
    results: dict[str, DayResult] = {}
    for stock, events in demux(records).items():
        if wanted and stock not in wanted:
            continue
        results[stock] = run_day(events, _prev_close_for(stock, table, args))
    if not results:
        raise ValueError("no matching stock records in input")
    return results


def _fmt_opt(value) -> str:
    return "" if value is None else repr(value)


def cmd_replay(args) -> int:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for stock, day in sorted(_replay_all([args.flow], args).items()):
        with open(outdir / f"trades_{stock}.csv", "w", encoding="utf-8") as fh:
            fh.write("ts_cs,price_ticks,size,buy_id,sell_id\n")
            for t in day.trades:
                fh.write(f"{t.ts},{t.price},{t.size},{t.buy_id},{t.sell_id}\n")
        with open(outdir / f"quotes_{stock}.csv", "w", encoding="utf-8") as fh:
            fh.write("ts_cs,best_bid,best_ask\n")
            for ts, bid, ask in day.quotes:
                fh.write(f"{ts},{'' if bid is None else bid},"
                         f"{'' if ask is None else ask}\n")
        with open(outdir / f"pv_{stock}.csv", "w", encoding="utf-8") as fh:
            fh.write("ts_cs,pv_ticks,exec_volume\n")
            for ts, pv, vol in day.pv_path:
                fh.write(f"{ts},{'' if pv is None else pv},{vol}\n")
        print(f"{stock}: {len(day.trades)} trades, "
              f"{len(day.placements)} placements, {len(day.rejects)} rejects")
    return 0


def write_samples(samples, path) -> None:
    """Delimited sample export: ts_cs,phase,side,x,spread_before,vol_before."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("ts_cs,phase,side,x,spread_before,vol_before\n")
        for s in samples:
            fh.write(f"{s.ts},{s.phase.value},{_SIDE_CODE[s.side]},{s.x!r},"
                     f"{_fmt_opt(s.spread_before)},{_fmt_opt(s.vol_before)}\n")


def read_samples(path) -> list[RelPriceSample]:
    """Parse a samples file written by write_samples."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("ts_cs,"):
            raise ValueError(f"{path} is not a samples file")
        for line in fh:
            ts, phase, side, x, spread_s, vol_s = line.rstrip("\n").split(",")
            out.append(RelPriceSample(
                float(x), _CODE_SIDE[side], Phase(phase), int(ts),
                float(spread_s) if spread_s else None,
                float(vol_s) if vol_s else None))
    return out


def write_pdf(pdf: PdfEstimate, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# samples={pdf.n} atom_mass={pdf.atom_mass!r}\n")
        fh.write("x_mid,density\n")
        for center, dens in zip(pdf.centers, pdf.density):
            fh.write(f"{center!r},{dens!r}\n")


def cmd_analyze(args) -> int:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    results = _replay_all(args.flows, args)
    samples: list[RelPriceSample] = []
    rejects = 0
    for stock in sorted(results):
        samples.extend(samples_from(results[stock].placements))
        rejects += len(results[stock].rejects)
    write_samples(samples, outdir / "samples.csv")
    print(f"{len(samples)} samples from {len(results)} stock(s), "
          f"{rejects} rejected events -> {outdir / 'samples.csv'}")
    for phase in Phase:
        per_side = {}
        for side in (BUY, SELL):
            xs = [s.x for s in samples if s.phase is phase and s.side == side]
            if not xs:
                continue
            pdf = estimate_pdf(xs)
            per_side[side] = pdf
            write_pdf(pdf, outdir / f"pdf_{phase.value}_{_SIDE_CODE[side]}.csv")
            print(f"pdf {phase.value}/{_SIDE_CODE[side]}: n={pdf.n} "
                  f"atom={pdf.atom_mass:.4f}")
        if per_side and not args.no_figures:
            from . import report
            report.save_pdf_figure(per_side, f"relative prices, {phase.value}",
                                   outdir / f"fig_pdf_{phase.value}.png")
    return 0


def cmd_fit(args) -> int:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    samples = read_samples(args.samples)
    phase = Phase(args.phase)
    sides = [_CODE_SIDE[args.side]] if args.side else [BUY, SELL]
    signs = [args.sign] if args.sign else ["pos", "neg"]
    rows = []
    for side in sides:
        for sign in signs:
            if sign == "pos":
                xs = [s.x for s in samples
                      if s.phase is phase and s.side == side and s.x > 0]
            else:
                xs = [-s.x for s in samples
                      if s.phase is phase and s.side == side and s.x < 0]
            label = f"{phase.value}_{_SIDE_CODE[side]}_{sign}"
            fit = fit_power_law(xs, args.xlo, args.xhi)
            rows.append((label, fit))
            print(f"{label}: alpha={fit.alpha:.4f} stderr={fit.stderr:.4f} "
                  f"range=[{fit.x_lo:g},{fit.x_hi:g}] r2={fit.r2:.4f} "
                  f"bins={fit.n_bins}")
            if not args.no_figures:
                from . import report
                report.save_fit_figure(fit, label, outdir / f"fig_fit_{label}.png")
    with open(outdir / "fits.csv", "w", encoding="utf-8") as fh:
        fh.write("label,alpha,stderr,x_lo,x_hi,r2,n_bins,n_samples\n")
        for label, fit in rows:
            fh.write(f"{label},{fit.alpha!r},{fit.stderr!r},{fit.x_lo!r},"
                     f"{fit.x_hi!r},{fit.r2!r},{fit.n_bins},{fit.n_samples}\n")
    return 0


def cmd_condition(args) -> int:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    samples = read_samples(args.samples)
    phase = Phase(args.phase)
    getter = (lambda s: s.spread_before) if args.key == "spread" \
        else (lambda s: s.vol_before)
    sides = [_CODE_SIDE[args.side]] if args.side else [BUY, SELL]
    for side in sides:
        side_code = _SIDE_CODE[side]
        subset = [s for s in samples
                  if s.phase is phase and s.side == side and getter(s) is not None]
        if not subset:
            print(f"{args.key}/{side_code}: no samples with context, skipped")
            continue
        groups = group_by_context(subset, args.key, args.groups)
        pdfs = conditional_pdfs(subset, args.key, args.groups)
        for i, pdf in enumerate(pdfs, start=1):
            write_pdf(pdf, outdir / f"cond_{args.key}_{side_code}_g{i}.csv")
        with open(outdir / f"ks_{args.key}_{side_code}.csv", "w",
                  encoding="utf-8") as fh:
            fh.write("group_a,group_b,ks_stat,critical_1pct,pass\n")
            worst = 0.0
            for i in range(len(groups)):
                for j in range(i + 1, len(groups)):
                    xs_i = [s.x for s in groups[i]]
                    xs_j = [s.x for s in groups[j]]
                    stat = two_sample_ks(xs_i, xs_j)
                    crit = ks_critical(len(xs_i), len(xs_j))
                    worst = max(worst, stat / crit)
                    fh.write(f"{i + 1},{j + 1},{stat!r},{crit!r},"
                             f"{int(stat < crit)}\n")
        print(f"{args.key}/{side_code}: {len(subset)} samples, "
              f"worst KS/critical ratio {worst:.3f}")
        if not args.no_figures:
            from . import report
            report.save_condition_figure(
                pdfs, f"f(x) by {args.key} quartile, side {side_code}",
                outdir / f"fig_cond_{args.key}_{side_code}.png")
    return 0


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    stream = generate_day(config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_flow(stream.records, out)
    sidecar = out.with_name(out.name + ".meta")
    sidecar.write_text(config_to_text(config), encoding="utf-8")
    places = sum(1 for r in stream.records if r.action == "P")
    cancels = len(stream.records) - places
    print(f"{places} placements, {cancels} cancels -> {out} (config: {sidecar})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
