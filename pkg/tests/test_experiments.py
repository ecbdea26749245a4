from __future__ import annotations

import json
import re
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

import acpid
from acpid.config import GustSettings, ScenarioConfig, TrajectorySettings, load_config, parse_config
from acpid.errors import ConfigurationError
from acpid.experiments import (
    PLOT_COLUMNS, average_by_label, compare_table, emit_plots, load_summary, mode_summaries, run_scenario,
    trend,
)
from acpid.loop import rmse
from acpid.telemetry import StepLog, read_csv

CONFIGS = Path(acpid.__file__).parent / "configs"


def short(name: str, duration: float = 3.0, **kw) -> ScenarioConfig:
    return replace(load_config(CONFIGS / f"{name}.ini"), duration=duration, **kw)


@pytest.fixture(scope="module")
def square_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("square")
    cfg = short("square", 4.0, gust=GustSettings(True, q_std=20.0, seed=1))
    return cfg, run_scenario(cfg, out), out


def test_hover_baseline_tracks(tmp_path):
    run = run_scenario(load_config(CONFIGS / "hover.ini"), tmp_path, mode="baseline")
    assert not run.failed
    for a in ("roll", "pitch", "yaw"):
        assert run.summary["modes"]["baseline"]["rmse"][a] < 0.01


def test_square_outputs(square_run):
    cfg, run, out = square_run
    assert sorted(p.name for p in out.iterdir()) == ["square_adaptive.csv", "square_baseline.csv",
                                                     "square_summary.json"]
    summary = load_summary(run.summary_path)
    assert summary["name"] == "square" and set(summary["modes"]) == {"baseline", "adaptive"}
    assert summary["csv"] == {"baseline": "square_baseline.csv", "adaptive": "square_adaptive.csv"}
    assert parse_config(summary["config"]) == cfg
    ad = summary["modes"]["adaptive"]
    assert set(ad["final_losses"]) == set(cfg.tuned_axes)
    assert ad["reward_trend"]["roll"]["count"] > 0
    assert summary["modes"]["baseline"]["reward_trend"] == {}


def test_summary_rmse_matches_csv(square_run):
    _, run, out = square_run
    for mode, s in run.summary["modes"].items():
        log = read_csv(out / f"square_{mode}.csv")
        for a, v in s["rmse"].items():
            assert rmse(log, a) == pytest.approx(v, abs=1e-9)


def test_rerun_is_byte_identical(square_run, tmp_path):
    cfg, _, out = square_run
    run_scenario(cfg, tmp_path)
    for m in ("baseline", "adaptive"):
        assert (tmp_path / f"square_{m}.csv").read_bytes() == (out / f"square_{m}.csv").read_bytes()


def test_mass_window_reported(tmp_path):
    cfg = replace(short("mass", 2.0), mass_schedule=((1.0, 1.5),))
    s = run_scenario(cfg, mode="baseline").summary["modes"]["baseline"]
    w = s["windows"]["post_mass_step"]
    assert (w["start"], w["end"]) == (1.0, 2.0) and w["rmse"]["alt"] > 0


def test_bad_mode():
    with pytest.raises(ConfigurationError):
        run_scenario(short("hover", 0.1), mode="chaotic")


class TestTrend:
    def test_first_last(self):
        v = np.arange(100.0)
        assert trend(v) == {"first": 4.5, "last": 94.5, "count": 100}

    def test_empty(self):
        assert trend(np.array([])) is None


def entry(label, roll, pitch, yaw):
    return {"label": label, "rmse": {"roll": roll, "pitch": pitch, "yaw": yaw}}


class TestCompare:
    def test_row_format(self):
        t = compare_table([entry("baseline", 4.49, 3.0, 2.0), entry("adaptive", 1.20, 2.5, 2.1)])
        rows = [re.sub(r"\s+", " ", line) for line in t.text.splitlines()]
        assert rows[0] == "axis baseline adaptive ratio improvement"
        assert rows[1] == "roll 4.49 1.20 3.74 yes"
        assert rows[3] == "yaw 2.00 2.10 0.95 no"
        assert t.csv.splitlines()[1].startswith("roll,4.49,1.2,")

    def test_identical_inputs(self):
        t = compare_table([entry("a", 1.0, 2.0, 3.0), entry("b", 1.0, 2.0, 3.0)])
        assert all(r == 1.0 for r in t.ratios.values())
        assert not any(t.improved.values())

    def test_all_smaller_flags_everything(self):
        t = compare_table([entry("a", 2.0, 2.0, 2.0), entry("b", 1.0, 1.9, 0.5)])
        assert t.all_improved

    def test_axis_mismatch(self):
        bad = {"label": "b", "rmse": {"roll": 1.0, "pitch": 1.0}}
        with pytest.raises(ConfigurationError, match="different axes"):
            compare_table([entry("a", 1.0, 1.0, 1.0), bad])

    def test_needs_two(self):
        with pytest.raises(ConfigurationError):
            compare_table([entry("a", 1.0, 1.0, 1.0)])

    def test_average_by_label(self):
        avg = average_by_label([entry("b", 1.0, 2.0, 3.0), entry("a", 0.0, 0.0, 0.0), entry("b", 3.0, 4.0, 5.0)])
        assert [e["label"] for e in avg] == ["b", "a"]
        assert avg[0]["rmse"] == {"roll": 2.0, "pitch": 3.0, "yaw": 4.0} and avg[0]["count"] == 2

    def test_from_summary(self, square_run):
        # the JSON file has sorted keys; baseline must still be the reference column
        t = compare_table(mode_summaries(load_summary(square_run[1].summary_path)))
        assert t.labels == ("baseline", "adaptive")


class TestPlots:
    def test_scripts_reference_emitted_files(self, square_run, tmp_path):
        _, run, _ = square_run
        scripts = emit_plots(list(run.csv_paths.values()), tmp_path)
        assert set(scripts) == {"attitude", "rewards", "losses", "xy_path", "altitude_mass", "gust"}
        emitted = {p.name for p in tmp_path.iterdir()}
        for fig, path in scripts.items():
            text = path.read_text()
            refs = set(re.findall(r"'([^']+\.(?:dat|png))'", text))
            assert f"{fig}.png" in refs
            assert {r for r in refs if r.endswith(".dat")} <= emitted
            assert str(tmp_path) not in text and "'/" not in text

    def test_data_file_columns(self, square_run, tmp_path):
        _, run, _ = square_run
        emit_plots([run.csv_paths["baseline"]], tmp_path)
        lines = (tmp_path / "square_baseline.dat").read_text().splitlines()
        assert lines[0] == "# " + " ".join(PLOT_COLUMNS)
        arr = np.loadtxt(tmp_path / "square_baseline.dat")
        log = read_csv(run.csv_paths["baseline"])
        np.testing.assert_array_equal(arr[:, PLOT_COLUMNS.index("phi")], log["phi"])

    def test_no_gust_gives_zero_columns(self, tmp_path):
        run = run_scenario(short("hover", 0.5), tmp_path / "r", mode="baseline")
        emit_plots([run.csv_paths["baseline"]], tmp_path)
        arr = np.loadtxt(tmp_path / "hover_baseline.dat")
        for c in ("d1", "d2", "d3"):
            assert not arr[:, PLOT_COLUMNS.index(c)].any()

    def test_missing_column_named(self, tmp_path):
        log = StepLog(("t", "x"))
        log.append([0.0, 0.0])
        log.to_csv(tmp_path / "thin.csv")
        with pytest.raises(ConfigurationError, match="'mass'"):
            emit_plots([tmp_path / "thin.csv"], tmp_path / "plots")

    def test_no_logs(self, tmp_path):
        with pytest.raises(ConfigurationError):
            emit_plots([], tmp_path)


def test_load_summary_rejects_other_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text(json.dumps({"hello": 1}))
    with pytest.raises(ConfigurationError, match="not an acpid summary"):
        load_summary(p)
