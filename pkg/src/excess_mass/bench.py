"""Monte Carlo comparison of excess-mass estimators against the quadrature oracle."""

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import densities, excess, kde, wavelet
from .quadrature import QuadratureGrid

log = logging.getLogger(__name__)

METHODS = ("plugin", "functional", "corrected", "wavelet")
BASELINE = "plugin"
TABLE_COLUMNS = ("f", "n", "E2_PI", "E2_*", "ratio2", "p2", "Einf_PI", "Einf_*", "ratio_inf", "p_inf")


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark cell: a density, a sample size and the estimator settings.

    ``order`` and ``bandwidth`` are ``"auto"`` or explicit numbers; an explicit
    bandwidth replaces the automatic rule for the plug-in and for the
    smoothness back-out. ``grid`` is the estimation grid (points per axis).
    """

    density: str
    n: int
    replications: int = 20
    levels: tuple = (100, 0.0, 1.0)
    seed: int = 0
    methods: tuple = ("plugin", "functional")
    order: object = "auto"
    bandwidth: object = "auto"
    bootstrap: int = kde.DEFAULT_BOOTSTRAP
    grid: object = None
    oracle_grid: object = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        object.__setattr__(self, "methods", tuple(self.methods))
        problems = self.problems()
        if problems:
            raise ValueError("invalid experiment config: " + "; ".join(problems))

    def problems(self):
        out = []
        try:
            densities.get_density(self.density)
        except (KeyError, ValueError) as exc:
            out.append(f"density: {exc}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 3:
            out.append("n: must be an integer >= 3")
        if not isinstance(self.replications, (int, np.integer)) or self.replications < 1:
            out.append("replications: must be an integer >= 1")
        if len(self.levels) != 3:
            out.append("levels: expected (count, lo, hi)")
        else:
            count, lo, hi = self.levels
            if int(count) != count or count < 2:
                out.append("levels: need at least 2 points")
            if not 0 <= lo <= hi:
                out.append("levels: need 0 <= lo <= hi")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            out.append(f"methods: unknown {unknown}; choose from {list(METHODS)}")
        if len(set(self.methods)) != len(self.methods):
            out.append("methods: duplicates")
        if self.order != "auto" and (int(self.order) != self.order or self.order < 1):
            out.append("order: 'auto' or an integer >= 1")
        if self.bandwidth != "auto" and not (isinstance(self.bandwidth, (int, float))
                                             and self.bandwidth > 0):
            out.append("bandwidth: 'auto' or a positive number")
        if int(self.bootstrap) != self.bootstrap or self.bootstrap < 2:
            out.append("bootstrap: integer >= 2")
        if self.grid is not None and (int(self.grid) != self.grid or self.grid < 8):
            out.append("grid: integer >= 8")
        if self.workers < 1:
            out.append("workers: must be >= 1")
        return out

    @property
    def spec(self):
        return densities.get_density(self.density)

    @property
    def level_grid(self):
        count, lo, hi = self.levels
        return np.linspace(lo, hi, int(count))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def integration_weights(levels):
    """Trapezoid weights on the level grid (sum to ``hi - lo``)."""
    levels = np.asarray(levels, dtype=float)
    if levels.size < 2:
        return np.ones_like(levels)
    w = np.empty_like(levels)
    gaps = np.diff(levels)
    w[0], w[-1] = gaps[0] / 2.0, gaps[-1] / 2.0
    w[1:-1] = (gaps[:-1] + gaps[1:]) / 2.0
    return w


def error_metrics(estimate, oracle):
    """Integrated squared error over the level grid and sup-norm error."""
    if not np.array_equal(estimate.levels, oracle.levels):
        raise ValueError("estimate and oracle use different level grids")
    diff = estimate.values - oracle.values
    e2 = float(np.dot(integration_weights(oracle.levels), diff * diff))
    einf = float(np.max(np.abs(diff))) if diff.size else 0.0
    return e2, einf


def replication_seed(master, index):
    """Per-replication seed sequence mixed from ``(master, index)``."""
    return np.random.SeedSequence([int(master), int(index)])


def estimate_curves(sample, box, levels, methods, order="auto", bandwidth="auto",
                    bootstrap=kde.DEFAULT_BOOTSTRAP, grid_points=None, seed=None):
    """Fit every requested estimator to ``sample`` and return ``{method: curve}``.

    The automatic path: normal-reference bandwidth ``h**`` for the plug-in;
    smoothness backed out of ``h**``; log-corrected bandwidth and order for the
    functional estimators; bootstrap moments of the kernel estimate.
    """
    n, d = sample.points.shape
    grid = kde.default_grid(box, grid_points)
    h_star = kde.bandwidth_auto(sample) if bandwidth == "auto" else np.full(d, float(bandwidth))
    curves = {}
    if "plugin" in methods:
        model = kde.KernelModel(sample.points, h_star)
        curves["plugin"] = excess.plugin_curve(model, levels, grid)
    functional = [m for m in methods if m != "plugin"]
    if not functional:
        return curves
    gm = float(np.exp(np.mean(np.log(h_star))))
    s_hat = kde.smoothness_from_bandwidth(min(gm, 1.0 - 1e-12), n, d)
    tuned = kde.tuned_parameters(s_hat, n, d)
    order_used = tuned.order if order == "auto" else int(order)
    info = {"smoothness": s_hat, "bandwidth_star": h_star.tolist()}
    if "functional" in functional or "corrected" in functional:
        moments = kde.bootstrap_moments(sample, tuned.bandwidth, grid, bootstrap, seed)
        if "functional" in functional:
            sums = excess.kernel_mean_sums(moments, order_used)
            sums.params.update(info)
            curves["functional"] = sums.curve(levels)
        if "corrected" in functional:
            sums = excess.kernel_corrected_sums(moments, order_used)
            sums.params.update(info)
            curves["corrected"] = sums.curve(levels)
    if "wavelet" in functional:
        theory = wavelet.theoretical_parameters(n, d, s_hat)
        sched = wavelet.level_schedule(n, d)
        level = min(max(theory.level, sched.j0), sched.j_inf)
        est = wavelet.fit(sample, level, box)
        w_order = theory.order if order == "auto" else int(order)
        sums = excess.wavelet_sums(est, w_order, grid)
        sums.params.update(info)
        curves["wavelet"] = sums.curve(levels)
    return curves


def oracle_for(config):
    return densities.oracle_curve(config.spec, config.level_grid, config.oracle_grid)


def run_replication(config, index, oracle=None):
    """One Monte Carlo draw: sample, fit, curves, metrics.

    Returns ``{method: (E2, Einf)}``; deterministic given ``(config.seed, index)``.
    """
    oracle = oracle_for(config) if oracle is None else oracle
    spec = config.spec
    sample_seed, boot_seed = replication_seed(config.seed, index).spawn(2)
    sample = densities.sample(spec, config.n, sample_seed)
    box = densities.support_box(spec)
    curves = estimate_curves(
        sample, box, oracle.levels, config.methods, config.order, config.bandwidth,
        config.bootstrap, config.grid, boot_seed,
    )
    return {m: error_metrics(curves[m], oracle) for m in config.methods}


def _replication_task(args):
    config, index, oracle = args
    return run_replication(config, index, oracle)


@dataclass
class BenchmarkReport:
    """Aggregated errors per method, comparisons against the plug-in and raw records."""

    config: dict
    summary: dict = field(default_factory=dict)
    comparisons: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    def to_dict(self):
        return {
            "config": self.config,
            "summary": self.summary,
            "comparisons": self.comparisons,
            "records": self.records,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data):
        cfg = dict(data["config"])
        for key in ("levels", "methods"):
            if key in cfg:
                cfg[key] = list(cfg[key])
        return cls(cfg, data["summary"], data["comparisons"], data["records"])

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def aggregate(config, results):
    """Fold per-replication ``{method: (E2, Einf)}`` results (in index order)."""
    records = []
    for index, res in enumerate(results):
        for method in config.methods:
            e2, einf = res[method]
            records.append({"replication": index, "method": method, "e2": e2, "einf": einf})
    summary = {}
    for method in config.methods:
        e2 = [r["e2"] for r in records if r["method"] == method]
        einf = [r["einf"] for r in records if r["method"] == method]
        summary[method] = {"e2": float(np.mean(e2)), "einf": float(np.mean(einf))}
    comparisons = {}
    if BASELINE in config.methods:
        base = summary[BASELINE]
        for method in config.methods:
            if method == BASELINE:
                continue
            wins2 = sum(res[method][0] < res[BASELINE][0] for res in results)
            wins_inf = sum(res[method][1] < res[BASELINE][1] for res in results)
            comparisons[method] = {
                "ratio2": _ratio(base["e2"], summary[method]["e2"]),
                "ratio_inf": _ratio(base["einf"], summary[method]["einf"]),
                "p2": wins2 / len(results),
                "p_inf": wins_inf / len(results),
            }
    cfg = config.to_dict()
    cfg["levels"] = list(cfg["levels"])
    cfg["methods"] = list(cfg["methods"])
    return BenchmarkReport(cfg, summary, comparisons, records)


def _ratio(num, den):
    if den == 0:
        return math.inf if num > 0 else 1.0
    return num / den


def run_experiment(config):
    """Run ``config.replications`` draws (optionally in worker processes) and aggregate."""
    start = time.perf_counter()
    oracle = oracle_for(config)
    tasks = [(config, i, oracle) for i in range(config.replications)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_replication_task, tasks))
    else:
        results = [_replication_task(t) for t in tasks]
    report = aggregate(config, results)
    log.info("density %s n=%d K=%d done in %.1fs", config.density, config.n,
             config.replications, time.perf_counter() - start)
    return report


def _table_rows(report):
    cfg = report.config
    rows = []
    for method, comp in report.comparisons.items():
        base = report.summary[BASELINE]
        mine = report.summary[method]
        rows.append((method, [
            str(cfg["density"]), str(cfg["n"]),
            f"{base['e2']:.5f}", f"{mine['e2']:.5f}", f"{comp['ratio2']:.2f}", f"{comp['p2']:.2f}",
            f"{base['einf']:.5f}", f"{mine['einf']:.5f}", f"{comp['ratio_inf']:.2f}",
            f"{comp['p_inf']:.2f}",
        ]))
    return rows


def format_report(reports, fmt="table"):
    """Render one report or a list of reports as ``table``, ``csv`` or ``json``.

    The table mirrors the comparison layout: ``f, n, E2_PI, E2_*, ratio, p2,
    Einf_PI, Einf_*, ratio, p_inf``, one block per compared method.
    """
    if isinstance(reports, BenchmarkReport):
        reports = [reports]
    if fmt == "json":
        return json.dumps([r.to_dict() for r in reports], indent=2)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["density", "n", "replications", "method", "e2", "einf",
                         "ratio2", "p2", "ratio_inf", "p_inf"])
        for r in reports:
            for method, s in r.summary.items():
                comp = r.comparisons.get(method, {})
                writer.writerow([r.config["density"], r.config["n"], r.config["replications"],
                                 method, repr(s["e2"]), repr(s["einf"]),
                                 *(repr(comp[k]) if k in comp else ""
                                   for k in ("ratio2", "p2", "ratio_inf", "p_inf"))])
        return buf.getvalue()
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}")
    blocks = {}
    for r in reports:
        for method, row in _table_rows(r):
            blocks.setdefault(method, []).append(row)
    widths = [max(len(c), 8) for c in TABLE_COLUMNS]
    header = "  ".join(c.rjust(w) for c, w in zip(TABLE_COLUMNS, widths))
    if not blocks:
        return header + "\n"
    lines = []
    for method, rows in blocks.items():
        if len(blocks) > 1:
            lines.append(f"# {method} vs plugin")
        lines.append(header)
        lines.extend("  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in rows)
    return "\n".join(lines) + "\n"
