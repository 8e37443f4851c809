"""Command line driver: ``lanedrop {simulate,equilibria,sweep,compare}``.

Exit codes: 0 success, 2 configuration or output error, 3 invariant violated during a run.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis, engine, svg
from . import config as cfgmod
from . import io as iomod
from .errors import ConfigError, DomainError, InvariantViolation
from .flow_core import derive_constants

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"--out: cannot create output directory {path!r} ({exc.strerror})") from None
    if not out.is_dir():
        raise ConfigError(f"--out: {path!r} is not a directory")
    return out


def _write(fn, *args):
    try:
        return fn(*args)
    except OSError as exc:
        raise ConfigError(f"--out: cannot write {args[-1]} ({exc.strerror})") from None


def _load(args, path=None):
    return cfgmod.load(path or args.config, seed=args.seed, window_frac=args.window_frac)


def cmd_simulate(args) -> int:
    config = _load(args)
    out = _out_dir(args.out)
    trace = engine.run(config)
    summary = engine.metrics(trace)
    stem = config.name
    paths = {"trace": out / f"{stem}_trace.csv", "summary": out / f"{stem}_summary.json"}
    _write(iomod.write_trace_csv, trace, paths["trace"])
    if args.plot:
        paths["timeseries"] = out / f"{stem}_timeseries.svg"
        _write(iomod.atomic_write, paths["timeseries"], svg.timeseries_svg(trace))
        if trace.rho is not None:
            paths["contour"] = out / f"{stem}_contour.svg"
            _write(iomod.atomic_write, paths["contour"], svg.contour_svg(trace))
    doc = iomod.summary_document(trace, summary, {"artifacts": {k: p.name for k, p in paths.items()}})
    _write(iomod.write_json, doc, paths["summary"])
    C = config.bottleneck.C
    print(f"{config.name}: late mean g = {summary.late_mean_g:.6g} veh/s ({summary.late_mean_g / C:.4f} C)")
    if summary.avg_travel_time is not None:
        print(f"average travel time = {summary.avg_travel_time:.4g} s, arrivals = {summary.total_arrivals:.6g} veh")
    for p in paths.values():
        print(f"wrote {p}")
    return EXIT_OK


def _stability_label(dc, eq, d, l_0, alpha, beta) -> str:
    if alpha is None:
        st = analysis.classify_stability(dc, eq, d, l_0)
        return st.kind
    if eq.regime == "uncongested" and d >= dc.C:
        sys_ = analysis.build_switched_system(dc, l_0, alpha, beta)
        return analysis.classify_limit_behavior(sys_, 0.1 * dc.k_1, 0.0).kind
    return analysis.classify_stability(dc, eq, d, l_0).kind


def cmd_equilibria(args) -> int:
    doc = cfgmod.read_document(args.config)
    config = cfgmod.from_dict(doc)
    dc = derive_constants(config.fd, config.bottleneck)
    names = cfgmod.constant_names(config.fd, config.bottleneck, config.l_0)
    d = cfgmod.evaluate(args.demand, names, "--demand")
    closed = args.alpha is not None or args.beta is not None
    if closed and args.u_star is not None:
        raise ConfigError("--u-star: give either --u-star or --alpha/--beta, not both")
    if closed:
        alpha = cfgmod.evaluate(args.alpha or 0.0, names, "--alpha")
        beta = cfgmod.evaluate(args.beta or 0.0, names, "--beta")
        eqs = analysis.closed_loop_equilibria(dc, d, alpha, beta)
        print(f"closed loop: d = {d:.6g} veh/s, alpha = {alpha:g}, beta = {beta:g}")
    else:
        alpha = beta = None
        u = cfgmod.evaluate(args.u_star if args.u_star is not None else "v_f", names, "--u-star")
        eqs = analysis.open_loop_equilibria(dc, d, u)
        print(f"open loop: d = {d:.6g} veh/s, u* = {u:.6g} m/s")
    header = f"{'regime':<12} {'k*':>12} {'u*':>10} {'g*':>10} {'g*/C':>7}  {'stability':<32} basin"
    print(header)
    print("-" * len(header))
    for eq in eqs:
        label = _stability_label(dc, eq, d, config.l_0, alpha, beta)
        print(f"{eq.regime:<12} {eq.k_star:>12.6g} {eq.u_star:>10.6g} {eq.g_star:>10.6g} "
              f"{eq.g_star / dc.C:>7.4f}  {label:<32} {eq.basin_note}")
    return EXIT_OK


def parse_range(text: str) -> list[float]:
    """``"a:b:step"`` (inclusive) or a comma list of numbers."""
    try:
        if ":" in text:
            a, b, s = (float(x) for x in text.split(":"))
            if s <= 0 or b < a:
                raise ValueError
            n = int(np.floor((b - a) / s + 1e-9))
            return [round(a + i * s, 12) for i in range(n + 1)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--range: expected 'start:stop:step' or a comma list, got {text!r}") from None


def cmd_sweep(args) -> int:
    default = {"xi": "paper_5_2_xi_plus10", "delta": "paper_5_3_stochastic"}[args.kind]
    config = _load(args, args.config or default)
    out = _out_dir(args.out)
    values = parse_range(args.range or {"xi": "-0.2:0.2:0.01", "delta": "0,0.1,0.2,0.3"}[args.kind])
    if args.kind == "xi":
        rows = engine.sweep_xi(config, values, workers=args.workers)
        ylabel, scale = "late mean g / C", config.bottleneck.C
    else:
        seed0 = config.seed or 0
        rows = engine.sweep_delta(config, values, seeds=range(seed0, seed0 + args.seeds), workers=args.workers)
        ylabel, scale = "travel-time reduction", 1.0
    xs = np.array([r[0] for r in rows])
    ys = np.array([r[1] for r in rows]) / scale
    table = "\n".join([f"{args.kind},value"] + [f"{x!r},{y!r}" for x, y in zip(xs.tolist(), ys.tolist())]) + "\n"
    csv_path, svg_path = out / f"sweep_{args.kind}.csv", out / f"sweep_{args.kind}.svg"
    _write(iomod.atomic_write, csv_path, table)
    _write(iomod.atomic_write, svg_path, svg.curve_svg(xs, ys, f"{args.kind} sweep", args.kind, ylabel))
    for x, y in zip(xs, ys):
        print(f"{args.kind} = {x:+.4f}   {ylabel} = {y:.4f}")
    print(f"wrote {csv_path}\nwrote {svg_path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    vsl = _load(args)
    base = _load(args, args.baseline) if args.baseline else engine.baseline_of(vsl)
    if vsl.seed != base.seed:
        raise ConfigError(f"demand.seed: controlled and baseline configs use different seeds "
                          f"({vsl.seed} vs {base.seed}); pass --seed to pin both")
    if (vsl.horizon, vsl.dt) != (base.horizon, base.dt):
        raise ConfigError("horizon/dt: controlled and baseline configs must share horizon and time step")
    out = _out_dir(args.out)
    seed0 = vsl.seed or 0
    seeds = list(range(seed0, seed0 + args.seeds)) if vsl.seed is not None else [None]
    if seeds == [None]:
        tv, tb = engine.run(vsl), engine.run(base)
        sv, sb = engine.metrics(tv), engine.metrics(tb)
        cmp = engine.Comparison((None,), (sv.avg_travel_time,), (sb.avg_travel_time,),
                                (engine.reduction_ratio(sv.avg_travel_time, sb.avg_travel_time),),
                                (sv.total_arrivals,))
    else:
        cmp = engine.compare_seeds(vsl, seeds, base, workers=args.workers)
    doc = {
        "schema_version": iomod.SCHEMA_VERSION,
        "config_hash": cfgmod.config_hash(vsl),
        "baseline_hash": cfgmod.config_hash(base),
        "seeds": list(cmp.seeds),
        "tt_vsl": list(cmp.tt_vsl),
        "tt_base": list(cmp.tt_base),
        "reductions": list(cmp.reductions),
        "total_arrivals": list(cmp.totals),
        "mean_reduction": None if None in cmp.reductions else cmp.mean_reduction,
        "metric_definitions": {"travel_time_formula": engine.TRAVEL_TIME_FORMULA,
                               "reduction_ratio": "1 - TT_vsl / TT_base", "window_frac": vsl.window_frac},
    }
    path = out / f"{vsl.name}_compare.json"
    _write(iomod.write_json, doc, path)
    if args.plot:
        first = seeds[0]
        tv = engine.run(vsl if first is None else vsl.with_seed(first))
        tb = engine.run(base if first is None else base.with_seed(first))
        _write(iomod.atomic_write, out / f"{vsl.name}_compare.svg", svg.timeseries_svg(tv, tb))
    for s, a, b, red in zip(cmp.seeds, cmp.tt_vsl, cmp.tt_base, cmp.reductions):
        print(f"seed {s}: TT vsl = {a:.4g} s, TT base = {b:.4g} s, reduction = {red:.4f}")
    if doc["mean_reduction"] is not None:
        lo, hi = cmp.reduction_range
        print(f"mean reduction = {cmp.mean_reduction:.4f} (range {lo:.4f} .. {hi:.4f})")
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lanedrop", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, default=None,
                        help="JSON config path or bundled config name")
        sp.add_argument("--seed", type=int, default=None, help="override the arrival-noise seed")
        sp.add_argument("--window-frac", type=float, default=None, help="late-window fraction of the horizon")

    s = sub.add_parser("simulate", help="run one scenario and write its trace and summary")
    common(s)
    s.add_argument("--out", required=True)
    s.add_argument("--plot", action="store_true")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("equilibria", help="tabulate open- or closed-loop equilibria")
    e.add_argument("--config", default="paper_5_1_I_beta4", help="source of the model parameters")
    e.add_argument("--demand", required=True, help="upstream demand, e.g. 2C")
    e.add_argument("--u-star", default=None, help="constant speed limit, e.g. v_1")
    e.add_argument("--alpha", default=None)
    e.add_argument("--beta", default=None)
    e.set_defaults(func=cmd_equilibria)

    w = sub.add_parser("sweep", help="sweep xi or delta and write a table and curve")
    w.add_argument("kind", choices=("xi", "delta"))
    common(w, config_required=False)
    w.add_argument("--range", default=None, help="'start:stop:step' or comma list; write --range=-0.2:0.2:0.01 for negative starts")
    w.add_argument("--seeds", type=int, default=10, help="seed count for delta sweeps")
    w.add_argument("--workers", type=int, default=None)
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compare", help="travel-time reduction of a controlled run against a baseline")
    common(c)
    c.add_argument("--baseline", default=None, help="baseline config; defaults to the same scenario without control")
    c.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds starting at the config seed")
    c.add_argument("--workers", type=int, default=None)
    c.add_argument("--out", required=True)
    c.add_argument("--plot", action="store_true")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"lanedrop: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"lanedrop: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
