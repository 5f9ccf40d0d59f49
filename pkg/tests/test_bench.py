import json

import numpy as np
import pytest

from excess_mass import bench
from excess_mass.bench import BenchmarkReport, ExperimentConfig, aggregate, error_metrics
from excess_mass.curves import ExcessMassCurve

LEVELS = np.linspace(0, 1, 100)


def _curve(values):
    return ExcessMassCurve(LEVELS, values)


def test_identical_curves_have_zero_error():
    c = _curve(np.linspace(1, 0, 100))
    assert error_metrics(c, c) == (0.0, 0.0)


@pytest.mark.parametrize("delta", [0.01, 0.3])
def test_constant_offset(delta):
    base = np.linspace(1, 0, 100)
    e2, einf = error_metrics(_curve(base + delta), _curve(base))
    assert e2 == pytest.approx(delta**2, rel=1e-12)
    assert einf == pytest.approx(delta, rel=1e-12)


def test_offset_on_half_grid():
    delta, step = 0.1, 1 / 99
    est = np.where(LEVELS < 0.5, delta, 0.0)
    e2, einf = error_metrics(_curve(est), _curve(np.zeros(100)))
    assert abs(e2 - delta**2 / 2) <= delta**2 * step
    assert einf == delta


def test_grid_mismatch():
    with pytest.raises(ValueError):
        error_metrics(_curve(np.zeros(100)), ExcessMassCurve(np.linspace(0, 1, 50), np.zeros(50)))


def test_config_problems_listed():
    with pytest.raises(ValueError) as info:
        ExperimentConfig("nope", 1, replications=0, methods=("magic",))
    msg = str(info.value)
    for field in ("density", "n:", "replications", "methods"):
        assert field in msg


def test_replication_is_deterministic():
    cfg = ExperimentConfig("a", 100, replications=1)
    assert bench.run_replication(cfg, 3) == bench.run_replication(cfg, 3)
    assert bench.run_replication(cfg, 3) != bench.run_replication(cfg, 4)


def test_plugin_sup_error_order_of_magnitude_for_a_at_100():
    # published sup-norm error for this cell: 0.0445
    cfg = ExperimentConfig("a", 100, replications=1, methods=("plugin",))
    e2, einf = bench.run_replication(cfg, 0)["plugin"]
    assert 0.00445 <= einf <= 0.445
    assert e2 <= einf**2


@pytest.mark.xfail(strict=True, reason=(
    "integrated squared error over [0, 1] is bounded by the squared sup error; the published "
    "sup error 0.0445 caps it near 0.002, so the published 0.005 uses another normalisation"))
def test_plugin_squared_error_order_of_magnitude_for_a_at_100():
    cfg = ExperimentConfig("a", 100, replications=1, methods=("plugin",))
    e2, _ = bench.run_replication(cfg, 0)["plugin"]
    assert 0.0005 <= e2 <= 0.05


def test_plugin_only_report_has_no_ratios():
    report = bench.run_experiment(ExperimentConfig("a", 100, replications=2, methods=("plugin",)))
    assert report.comparisons == {}
    assert len(report.records) == 2
    table = bench.format_report(report)
    assert table.splitlines()[0].split() == list(bench.TABLE_COLUMNS)
    assert len(table.splitlines()) == 1


def test_aggregate_win_frequencies_and_ties():
    cfg = ExperimentConfig("a", 100, replications=3, methods=("plugin", "functional"))
    wins = [{"plugin": (2.0, 2.0), "functional": (1.0, 1.0)}] * 3
    report = aggregate(cfg, wins)
    assert report.comparisons["functional"]["p2"] == 1.0
    assert report.comparisons["functional"]["p_inf"] == 1.0
    ties = [{"plugin": (1.0, 1.0), "functional": (1.0, 1.0)}] * 3
    report = aggregate(cfg, ties)
    assert report.comparisons["functional"]["p2"] == 0.0


def test_report_invariants_and_round_trip():
    cfg = ExperimentConfig("d", 100, replications=3, methods=("plugin", "functional", "wavelet"))
    report = bench.run_experiment(cfg)
    assert len(report.records) == 3 * 3
    for method, summary in report.summary.items():
        e2 = [r["e2"] for r in report.records if r["method"] == method]
        assert summary["e2"] == np.mean(e2)
    for method, comp in report.comparisons.items():
        assert comp["p2"] in (0, 1 / 3, 2 / 3, 1)
        assert comp["ratio2"] > 0
        assert comp["ratio2"] == pytest.approx(
            report.summary["plugin"]["e2"] / report.summary[method]["e2"], rel=1e-12)
    again = BenchmarkReport.from_json(report.to_json())
    assert again.to_dict() == report.to_dict()
    parsed = json.loads(bench.format_report(report, "json"))
    assert BenchmarkReport.from_dict(parsed[0]).to_dict() == report.to_dict()


def test_table_has_ten_columns():
    report = bench.run_experiment(ExperimentConfig("a", 100, replications=1))
    lines = bench.format_report(report).splitlines()
    assert len(lines[0].split()) == 10
    assert all(len(line.split()) == 10 for line in lines if line and not line.startswith("#"))


def test_csv_is_lossless():
    report = bench.run_experiment(ExperimentConfig("a", 100, replications=2))
    rows = bench.format_report(report, "csv").splitlines()
    values = dict((r.split(",")[3], float(r.split(",")[4])) for r in rows[1:])
    assert values["plugin"] == report.summary["plugin"]["e2"]


def test_parallel_matches_serial():
    serial = bench.run_experiment(ExperimentConfig("b", 100, replications=3))
    parallel = bench.run_experiment(ExperimentConfig("b", 100, replications=3, workers=2))
    assert serial.summary == parallel.summary
    assert serial.records == parallel.records


def test_all_methods_run_in_two_dimensions():
    cfg = ExperimentConfig("B", 200, replications=1, methods=bench.METHODS, grid=48)
    res = bench.run_replication(cfg, 0)
    assert set(res) == set(bench.METHODS)
    assert all(np.isfinite(v).all() for v in res.values())
