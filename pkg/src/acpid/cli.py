"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 episode failure,
3 failed check (gradcheck, or ``compare --require-improvement``).
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import AXES, load_config
from .errors import ConfigurationError

EXIT_OK, EXIT_CONFIG, EXIT_EPISODE, EXIT_CHECK = 0, 1, 2, 3


def _run_one(path: str, seed: int | None, mode: str | None, out: str) -> tuple[str, dict]:
    from .experiments import run_scenario

    cfg = load_config(path)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    run = run_scenario(cfg, out, mode)
    return path, run.summary


def cmd_run(args) -> int:
    # parse everything up front so a bad file fails before any episode starts
    for p in args.config:
        load_config(p)
    jobs = max(1, min(args.jobs, len(args.config)))
    if jobs == 1:
        results = [_run_one(p, args.seed, args.mode, args.out) for p in args.config]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_one, p, args.seed, args.mode, args.out) for p in args.config]
            results = [f.result() for f in futures]
    status = EXIT_OK
    for path, summary in results:
        for mode, s in summary["modes"].items():
            rm = " ".join(f"{a}={s['rmse'][a]:.4f}" for a in AXES if a in s["rmse"])
            flag = f" FAILED ({s['reason']})" if s["failed"] else ""
            print(f"{summary['name']} [{mode}] steps={s['steps']} {rm}{flag}")
        if summary["failed"]:
            status = EXIT_EPISODE
    return status


def cmd_compare(args) -> int:
    from .experiments import average_by_label, compare_table, load_summary, mode_summaries

    entries = []
    for p in args.summaries:
        entries += mode_summaries(load_summary(p))
    table = compare_table(average_by_label(entries), axes=tuple(args.axes))
    print(table.text, end="")
    if args.csv:
        Path(args.csv).write_text(table.csv, newline="")
    if args.require_improvement:
        bad = [a for a in table.axes if table.ratios[a] < args.min_ratio or not table.improved[a]]
        if bad:
            print(f"not improved by a factor >= {args.min_ratio}: {', '.join(bad)}", file=sys.stderr)
            return EXIT_CHECK
    return EXIT_OK


def cmd_plot(args) -> int:
    from .experiments import emit_plots

    scripts = emit_plots(args.logs, args.out)
    for fig, path in scripts.items():
        print(f"{fig}: {path}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    from .gradcheck import run_all

    ok = True
    for r in run_all(range(args.seed, args.seed + args.seeds)):
        print(r.line())
        ok &= r.passed
    return EXIT_OK if ok else EXIT_CHECK


def cmd_zn_tune(args) -> int:
    from .config import ScenarioConfig
    from .tuning import DESIGN, plant_gain, pole_placement, ziegler_nichols

    cfg = load_config(args.config) if args.config else ScenarioConfig()
    axes = args.axis or list(AXES)
    for axis in axes:
        k = plant_gain(axis, cfg.params)
        zn = ziegler_nichols(k, cfg.dt, args.td_probe, args.rule)
        pp = pole_placement(k, *DESIGN[axis])
        verdict = "stable" if zn.stable else "UNSTABLE on the sampled loop"
        print(f"{axis}: plant gain {k:.4g}")
        print(f"  ultimate gain {zn.k_ultimate:.4g}, period {zn.t_ultimate:.4g} s")
        print(f"  ZN ({zn.rule}): kp={zn.gains.kp:.4g} ki={zn.gains.ki:.4g} kd={zn.gains.kd:.4g} -> {verdict}")
        print(f"  pole placement: kp={pp.kp:.4g} ki={pp.ki:.4g} kd={pp.kd:.4g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="acpid", description="Actor-critic adaptive PID quadrotor experiments")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)

    r = sub.add_parser("run", help="run scenario configs and write CSV logs plus a summary")
    r.add_argument("--config", action="append", required=True, help="scenario INI file (repeatable)")
    r.add_argument("--seed", type=int, help="override the master seed")
    r.add_argument("--mode", choices=("baseline", "adaptive", "both"), help="override the controller mode")
    r.add_argument("--out", default="results", help="output directory")
    r.add_argument("--jobs", type=int, default=1, help="parallel workers across configs")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="RMSE table from summary JSON files")
    c.add_argument("summaries", nargs="+")
    c.add_argument("--csv", help="also write the table as CSV")
    c.add_argument("--axes", nargs="+", default=["roll", "pitch", "yaw"], choices=list(AXES))
    c.add_argument("--require-improvement", action="store_true",
                   help="exit 3 unless the last column improves every row")
    c.add_argument("--min-ratio", type=float, default=1.0)
    c.set_defaults(func=cmd_compare)

    pl = sub.add_parser("plot", help="emit gnuplot scripts and data files")
    pl.add_argument("logs", nargs="+")
    pl.add_argument("--out", default="plots")
    pl.set_defaults(func=cmd_plot)

    g = sub.add_parser("gradcheck", help="finite-difference gradient suites")
    g.add_argument("--seeds", type=int, default=5)
    g.add_argument("--seed", type=int, default=0, help="first seed")
    g.set_defaults(func=cmd_gradcheck)

    z = sub.add_parser("zn-tune", help="Ziegler-Nichols experiment and pole-placement gains")
    z.add_argument("--config")
    z.add_argument("--axis", action="append", choices=list(AXES))
    z.add_argument("--rule", default="classic", choices=("classic", "some-overshoot", "no-overshoot"))
    z.add_argument("--td-probe", type=float, default=0.2, help="derivative time during the gain sweep [s]")
    z.set_defaults(func=cmd_zn_tune)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
