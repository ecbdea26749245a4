"""Scenario runner, RMSE comparison tables and gnuplot script generation."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .config import AXES, ScenarioConfig, dump_config
from .errors import ConfigurationError
from .loop import AXIS_COLUMN, EpisodeResult, rmse, run_episode
from .telemetry import StepLog, read_csv

SUMMARY_FORMAT = "acpid-summary"
SUMMARY_VERSION = 1
TABLE_AXES = ("roll", "pitch", "yaw")
TREND_FRACTION = 0.1


def _modes(cfg: ScenarioConfig, mode: str | None) -> tuple[str, ...]:
    m = mode or cfg.mode
    if m == "both":
        return ("baseline", "adaptive")
    if m not in ("baseline", "adaptive"):
        raise ConfigurationError(f"mode must be baseline, adaptive or both, got {m!r}")
    return (m,)


def tuner_active(log: StepLog, axis: str) -> np.ndarray:
    """Rows where the identifier ran (sigma is logged strictly positive then)."""
    return log[f"{axis}_sigma"] > 0


def tuner_updated(log: StepLog, axis: str) -> np.ndarray:
    """Rows carrying an update report: one step after an identifier row."""
    active = tuner_active(log, axis)
    out = np.zeros_like(active)
    out[1:] = active[:-1]
    return out


def trend(values: np.ndarray, fraction: float = TREND_FRACTION) -> dict[str, float] | None:
    """Means over the first and last ``fraction`` of ``values``."""
    n = values.size
    if n == 0:
        return None
    k = max(1, int(n * fraction))
    return {"first": float(np.mean(values[:k])), "last": float(np.mean(values[-k:])), "count": int(n)}


def mass_step_time(cfg: ScenarioConfig) -> float | None:
    for t, m in cfg.mass_schedule:
        if m != cfg.params.m:
            return float(t)
    return None


def summarize(cfg: ScenarioConfig, result: EpisodeResult, wall_time: float) -> dict:
    log = result.log
    out: dict = {
        "mode": result.mode,
        "failed": result.failed,
        "reason": result.reason,
        "steps": len(log),
        "wall_time_s": wall_time,
        "rmse_units": {"roll": "deg", "pitch": "deg", "yaw": "deg", "alt": "m"},
        "rmse": {a: rmse(log, a) for a in AXES} if len(log) else {},
        "windows": {},
        "final_losses": {},
        "reward_trend": {},
        "sigma_trend": {},
    }
    t_mass = mass_step_time(cfg)
    if t_mass is not None and len(log) and log["t"][-1] >= t_mass:
        window = (t_mass, cfg.duration)
        out["windows"]["post_mass_step"] = {"start": window[0], "end": window[1],
                                            "rmse": {a: rmse(log, a, window) for a in AXES}}
    if result.mode == "adaptive":
        for a in cfg.tuned_axes:
            upd = tuner_updated(log, a)
            if np.any(upd):
                idx = np.flatnonzero(upd)[-1]
                out["final_losses"][a] = {"la": float(log[f"{a}_la"][idx]), "lc": float(log[f"{a}_lc"][idx])}
            out["reward_trend"][a] = trend(log[f"{a}_reward"][upd])
            out["sigma_trend"][a] = trend(log[f"{a}_sigma"][tuner_active(log, a)])
    return out


@dataclass
class ScenarioRun:
    summary: dict
    summary_path: Path | None
    csv_paths: dict[str, Path] = field(default_factory=dict)
    results: dict[str, EpisodeResult] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.summary["failed"]


def run_scenario(cfg: ScenarioConfig, out_dir: str | Path | None = None, mode: str | None = None) -> ScenarioRun:
    """Run every requested mode of ``cfg``.

    With ``out_dir`` each mode's log goes to ``<name>_<mode>.csv`` and the
    summary to ``<name>_summary.json``.
    """
    modes = _modes(cfg, mode)
    outdir = Path(out_dir) if out_dir is not None else None
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
    summary = {"format": SUMMARY_FORMAT, "version": SUMMARY_VERSION, "name": cfg.name, "seed": cfg.seed,
               "duration": cfg.duration, "dt": cfg.dt, "modes": {}, "csv": {}, "failed": False,
               "config": dump_config(cfg)}
    run = ScenarioRun(summary, None)
    for m in modes:
        t0 = time.perf_counter()
        res = run_episode(cfg, m)
        wall = time.perf_counter() - t0
        run.results[m] = res
        summary["modes"][m] = summarize(cfg, res, wall)
        summary["failed"] = summary["failed"] or res.failed
        if outdir is not None:
            path = outdir / f"{cfg.name}_{m}.csv"
            res.log.to_csv(path)
            run.csv_paths[m] = path
            summary["csv"][m] = path.name
    if outdir is not None:
        run.summary_path = outdir / f"{cfg.name}_summary.json"
        run.summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return run


# ------------------------------------------------------------- comparison


def mode_summaries(summary: Mapping) -> list[dict]:
    """Flatten a scenario summary into per-mode entries labelled by mode.

    Baseline always comes first so it is the reference column of a table,
    whatever key order the JSON file was written in.
    """
    if "modes" in summary:
        order = {"baseline": 0, "adaptive": 1}
        items = sorted(summary["modes"].items(), key=lambda kv: order.get(kv[0], 2))
        return [dict(s, label=s.get("mode", m)) for m, s in items]
    return [dict(summary, label=summary.get("label", summary.get("mode", "run")))]


def average_by_label(entries: Sequence[Mapping]) -> list[dict]:
    """Mean RMSE per label, keeping first-appearance order."""
    groups: dict[str, list[Mapping]] = {}
    for e in entries:
        groups.setdefault(e["label"], []).append(e)
    out = []
    for label, items in groups.items():
        keys = set(items[0]["rmse"])
        for it in items[1:]:
            if set(it["rmse"]) != keys:
                raise ConfigurationError(f"RMSE axes differ within {label!r}")
        out.append({"label": label, "count": len(items),
                    "rmse": {k: float(np.mean([it["rmse"][k] for it in items])) for k in items[0]["rmse"]}})
    return out


@dataclass(frozen=True)
class ComparisonTable:
    labels: tuple[str, ...]
    axes: tuple[str, ...]
    values: dict
    ratios: dict
    improved: dict
    text: str
    csv: str

    @property
    def all_improved(self) -> bool:
        return all(self.improved.values())


def compare_table(summaries: Sequence[Mapping], axes: Sequence[str] = TABLE_AXES) -> ComparisonTable:
    """Side-by-side RMSE table.

    The first entry is the reference column and the last the candidate;
    ``ratio = reference / candidate`` so values above 1 mean the candidate
    tracks better, which also sets the row's improvement flag.
    """
    entries = []
    for s in summaries:
        entries.append(s if "label" in s else dict(s, label=s.get("mode", f"run{len(entries)}")))
    if len(entries) < 2:
        raise ConfigurationError("comparison needs at least two summaries")
    keys = [set(e["rmse"]) for e in entries]
    if any(k != keys[0] for k in keys[1:]):
        raise ConfigurationError(f"summaries cover different axes: {[sorted(k) for k in keys]}")
    missing = [a for a in axes if a not in keys[0]]
    if missing:
        raise ConfigurationError(f"summaries have no RMSE for {missing}")

    labels = tuple(str(e["label"]) for e in entries)
    values = {a: tuple(float(e["rmse"][a]) for e in entries) for a in axes}
    ratios, improved = {}, {}
    for a in axes:
        ref, cand = values[a][0], values[a][-1]
        ratios[a] = 1.0 if ref == cand else (math.inf if cand == 0 else ref / cand)
        improved[a] = cand < ref

    header = ("axis", *labels, "ratio", "improvement")
    rows = [(a, *(f"{v:.2f}" for v in values[a]), f"{ratios[a]:.2f}", "yes" if improved[a] else "no")
            for a in axes]
    widths = [max(len(str(r[i])) for r in [header, *rows]) for i in range(len(header))]
    text = "\n".join(" ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip() for r in [header, *rows])
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for a in axes:
        w.writerow([a, *(repr(v) for v in values[a]), repr(ratios[a]), int(improved[a])])
    return ComparisonTable(labels, tuple(axes), values, ratios, improved, text + "\n", buf.getvalue())


# ------------------------------------------------------------------ plots

PLOT_COLUMNS = (
    "t", "mass", "x", "y", "z", "phi", "theta", "psi", "x_ref", "y_ref",
    "roll_sp", "pitch_sp", "yaw_sp", "alt_sp", "d1", "d2", "d3",
    *(f"{a}_{f}" for a in AXES for f in ("reward", "la", "lc", "sigma")),
)
FIGURES = ("attitude", "rewards", "losses", "xy_path", "altitude_mass", "gust")


def _col(name: str) -> int:
    return PLOT_COLUMNS.index(name) + 1


def emit_plots(log_paths: Sequence[str | Path], out_dir: str | Path) -> dict[str, Path]:
    """Write one gnuplot script per figure class plus a data file per log.

    Scripts refer to data files by bare name, so the output directory can be
    moved as a unit; run ``gnuplot <script>`` from inside it.
    """
    if not log_paths:
        raise ConfigurationError("no logs to plot")
    outdir = Path(out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    data: list[tuple[str, str]] = []
    for p in log_paths:
        p = Path(p)
        log = read_csv(p, required=PLOT_COLUMNS)
        arr = np.column_stack([log[c] for c in PLOT_COLUMNS]) if len(log) else np.zeros((0, len(PLOT_COLUMNS)))
        name = f"{p.stem}.dat"
        lines = ["# " + " ".join(PLOT_COLUMNS)]
        lines += [" ".join(repr(float(v)) for v in row) for row in arr]
        (outdir / name).write_text("\n".join(lines) + "\n", newline="")
        data.append((name, p.stem))

    deg = 180.0 / math.pi
    scripts = {}

    def script(fig: str, body: list[str], size: str = "1000,800") -> None:
        text = [f"# {fig}: generated by acpid", f"set terminal pngcairo size {size}",
                f"set output '{fig}.png'", "set grid", "set key outside right", *body, ""]
        path = outdir / f"{fig}.gp"
        path.write_text("\n".join(text), newline="")
        scripts[fig] = path

    def panels(pairs, ylabel, scale=1.0, layout=None):
        body = [f"set multiplot layout {layout or len(pairs)},1", "set xlabel 't [s]'", f"set ylabel '{ylabel}'"]
        for title, cols in pairs:
            body.append(f"set title '{title}'")
            series = []
            for d, label in data:
                for c, suffix in cols:
                    factor = f"*{scale!r}" if scale != 1.0 else ""
                    series.append(f"'{d}' using 1:(${_col(c)}{factor}) with lines title '{label} {suffix}'")
            body.append("plot " + ", \\\n     ".join(series))
        body.append("unset multiplot")
        return body

    script("attitude", panels([(ax, [(f"{ax}_sp", "setpoint"), (AXIS_COLUMN[ax], "measured")])
                               for ax in TABLE_AXES], "angle [deg]", deg))
    script("rewards", panels([(ax, [(f"{ax}_reward", "reward")]) for ax in AXES], "reward"))
    script("losses", panels([(ax, [(f"{ax}_la", "actor"), (f"{ax}_lc", "critic")]) for ax in AXES], "loss"))
    xy = ["set xlabel 'x [m]'", "set ylabel 'y [m]'", "set size ratio -1", "plot " + ", \\\n     ".join(
        [f"'{d}' using {_col('x_ref')}:{_col('y_ref')} with lines dt 2 title '{lb} reference'" for d, lb in data]
        + [f"'{d}' using {_col('x')}:{_col('y')} with lines title '{lb} path'" for d, lb in data])]
    script("xy_path", xy, "800,800")
    alt = ["set xlabel 't [s]'", "set ylabel 'z [m]'", "set y2label 'mass [kg]'", "set y2tics", "plot " +
           ", \\\n     ".join(
               [f"'{d}' using 1:{_col('alt_sp')} with lines dt 2 title '{lb} setpoint'" for d, lb in data]
               + [f"'{d}' using 1:{_col('z')} with lines title '{lb} altitude'" for d, lb in data]
               + [f"'{d}' using 1:{_col('mass')} axes x1y2 with lines title '{lb} mass'" for d, lb in data])]
    script("altitude_mass", alt)
    script("gust", panels([(f"d{i}", [(f"d{i}", "gust")]) for i in (1, 2, 3)], "disturbance [rad/s^2]"))
    return scripts


def load_summary(path: str | Path) -> dict:
    p = Path(path)
    try:
        data = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read summary {p}: {exc}") from None
    if data.get("format") != SUMMARY_FORMAT:
        raise ConfigurationError(f"{p}: not an acpid summary")
    return data
