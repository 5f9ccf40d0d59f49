"""Ground-truth mixture densities: pdf, sampling, support boxes and the
quadrature oracle for the excess mass ``E(nu) = int (f(t) - nu)_+ dt``.
"""

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtr, ndtri

from .curves import ExcessMassCurve
from .quadrature import QuadratureGrid, SupportBox

GAUSSIAN_HALF_WIDTH = 6.0  # in stdevs; two-sided tail mass ~2e-9
LAPLACE_HALF_WIDTH = 30.0  # in scales; two-sided tail mass ~1e-13
DEFAULT_ORACLE_POINTS = {1: 4096, 2: 512}

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class SampleFileError(ValueError):
    """Raised when a sample file cannot be parsed."""


def _open_uniform(rng, size):
    # strictly inside (0, 1) so inverse CDFs stay finite
    return (rng.integers(0, 2**53, size=size, dtype=np.int64) + 0.5) / 2.0**53


def _positive(name, value):
    value = float(value)
    if not (np.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be finite and > 0, got {value}")
    return value


def _pair(name, value):
    arr = tuple(float(v) for v in value)
    if len(arr) != 2:
        raise ValueError(f"{name} must have two entries")
    return arr


@dataclass(frozen=True)
class Gaussian1D:
    mean: float
    stdev: float
    kind = "gaussian"
    dimension = 1

    def __post_init__(self):
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "stdev", _positive("stdev", self.stdev))

    def pdf(self, x):
        z = (x[:, 0] - self.mean) / self.stdev
        return np.exp(-0.5 * z * z) / (_SQRT_2PI * self.stdev)

    def draw(self, rng, size):
        return (self.mean + self.stdev * ndtri(_open_uniform(rng, size)))[:, None]

    def bounds(self):
        w = GAUSSIAN_HALF_WIDTH * self.stdev
        return SupportBox((self.mean - w,), (self.mean + w,))

    def params(self):
        return {"mean": self.mean, "stdev": self.stdev}


@dataclass(frozen=True)
class Uniform1D:
    low: float
    high: float
    kind = "uniform"
    dimension = 1

    def __post_init__(self):
        low, high = float(self.low), float(self.high)
        if not low < high:
            raise ValueError(f"uniform interval is degenerate: [{low}, {high}]")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    def pdf(self, x):
        inside = (x[:, 0] >= self.low) & (x[:, 0] <= self.high)
        return np.where(inside, 1.0 / (self.high - self.low), 0.0)

    def draw(self, rng, size):
        return (self.low + (self.high - self.low) * _open_uniform(rng, size))[:, None]

    def bounds(self):
        return SupportBox((self.low,), (self.high,))

    def params(self):
        return {"low": self.low, "high": self.high}


@dataclass(frozen=True)
class Laplace1D:
    """Laplace law with density ``exp(-|x - location| / scale) / (2 scale)``."""

    location: float
    scale: float
    kind = "laplace"
    dimension = 1

    def __post_init__(self):
        object.__setattr__(self, "location", float(self.location))
        object.__setattr__(self, "scale", _positive("scale", self.scale))

    def pdf(self, x):
        return np.exp(-np.abs(x[:, 0] - self.location) / self.scale) / (2.0 * self.scale)

    def draw(self, rng, size):
        v = _open_uniform(rng, size) - 0.5
        return (self.location - self.scale * np.sign(v) * np.log1p(-2.0 * np.abs(v)))[:, None]

    def bounds(self):
        w = LAPLACE_HALF_WIDTH * self.scale
        return SupportBox((self.location - w,), (self.location + w,))

    def params(self):
        return {"location": self.location, "scale": self.scale}


@dataclass(frozen=True)
class Gaussian2D:
    mean: tuple
    stdev: tuple
    rho: float = 0.0
    kind = "gaussian2d"
    dimension = 2

    def __post_init__(self):
        object.__setattr__(self, "mean", _pair("mean", self.mean))
        stdev = _pair("stdev", self.stdev)
        for s in stdev:
            _positive("stdev", s)
        object.__setattr__(self, "stdev", stdev)
        rho = float(self.rho)
        if not -1.0 < rho < 1.0:
            raise ValueError(f"correlation must lie in (-1, 1), got {rho}")
        object.__setattr__(self, "rho", rho)

    def pdf(self, x):
        zx = (x[:, 0] - self.mean[0]) / self.stdev[0]
        zy = (x[:, 1] - self.mean[1]) / self.stdev[1]
        one_m = 1.0 - self.rho**2
        q = (zx * zx - 2.0 * self.rho * zx * zy + zy * zy) / one_m
        norm = 2.0 * math.pi * self.stdev[0] * self.stdev[1] * math.sqrt(one_m)
        return np.exp(-0.5 * q) / norm

    def draw(self, rng, size):
        z1 = ndtri(_open_uniform(rng, size))
        z2 = ndtri(_open_uniform(rng, size))
        x = self.mean[0] + self.stdev[0] * z1
        y = self.mean[1] + self.stdev[1] * (self.rho * z1 + math.sqrt(1.0 - self.rho**2) * z2)
        return np.column_stack([x, y])

    def bounds(self):
        w = [GAUSSIAN_HALF_WIDTH * s for s in self.stdev]
        return SupportBox(
            (self.mean[0] - w[0], self.mean[1] - w[1]),
            (self.mean[0] + w[0], self.mean[1] + w[1]),
        )

    def params(self):
        return {"mean": list(self.mean), "stdev": list(self.stdev), "rho": self.rho}


@dataclass(frozen=True)
class Uniform2D:
    low: tuple
    high: tuple
    kind = "uniform2d"
    dimension = 2

    def __post_init__(self):
        low, high = _pair("low", self.low), _pair("high", self.high)
        if not all(a < b for a, b in zip(low, high)):
            raise ValueError(f"uniform rectangle is degenerate: {low}, {high}")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    def pdf(self, x):
        lo, hi = np.asarray(self.low), np.asarray(self.high)
        inside = np.all((x >= lo) & (x <= hi), axis=1)
        area = (hi[0] - lo[0]) * (hi[1] - lo[1])
        return np.where(inside, 1.0 / area, 0.0)

    def draw(self, rng, size):
        u = _open_uniform(rng, size)
        v = _open_uniform(rng, size)
        return np.column_stack([
            self.low[0] + (self.high[0] - self.low[0]) * u,
            self.low[1] + (self.high[1] - self.low[1]) * v,
        ])

    def bounds(self):
        return SupportBox(self.low, self.high)

    def params(self):
        return {"low": list(self.low), "high": list(self.high)}


_KINDS = {cls.kind: cls for cls in (Gaussian1D, Uniform1D, Laplace1D, Gaussian2D, Uniform2D)}


@dataclass(frozen=True)
class DensitySpec:
    """Finite mixture ``sum_c weight_c * component_c``.

    ``components`` is a sequence of ``(weight, component)`` pairs.
    """

    components: tuple
    name: str = ""

    def __post_init__(self):
        comps = tuple((float(w), c) for w, c in self.components)
        if not comps:
            raise ValueError("a density needs at least one component")
        weights = np.array([w for w, _ in comps])
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise ValueError("mixture weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {weights.sum()!r}, not 1")
        dims = {c.dimension for _, c in comps}
        if len(dims) != 1:
            raise ValueError("all components must share one dimension")
        object.__setattr__(self, "components", comps)

    @property
    def dimension(self):
        return self.components[0][1].dimension

    @property
    def weights(self):
        return np.array([w for w, _ in self.components])

    def to_dict(self):
        out = {"dimension": self.dimension, "components": []}
        if self.name:
            out["name"] = self.name
        for w, c in self.components:
            out["components"].append({"weight": w, "kind": c.kind, **c.params()})
        return out

    @classmethod
    def from_dict(cls, data):
        comps = []
        for entry in data["components"]:
            entry = dict(entry)
            weight = entry.pop("weight")
            kind = entry.pop("kind")
            if kind not in _KINDS:
                raise ValueError(f"unknown component kind {kind!r}")
            if kind == "laplace" and "rate" in entry:
                entry["scale"] = 1.0 / _positive("rate", entry.pop("rate"))
            comps.append((weight, _KINDS[kind](**entry)))
        spec = cls(tuple(comps), name=data.get("name", ""))
        if "dimension" in data and int(data["dimension"]) != spec.dimension:
            raise ValueError("declared dimension does not match the components")
        return spec

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Sample:
    points: np.ndarray
    seed: object = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("a sample needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("sample points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dimension(self):
        return self.points.shape[1]

    def __len__(self):
        return self.n


def _as_points(spec, x):
    arr = np.asarray(x, dtype=float)
    if spec.dimension == 1 and arr.ndim <= 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim <= 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[-1] != spec.dimension:
        raise ValueError(
            f"points have {arr.shape[-1]} coordinates, density has dimension {spec.dimension}"
        )
    return arr


def pdf(spec, x):
    """Mixture density at ``x``.

    A single point gives a float; an array of points (shape ``(m,)`` in 1-D or
    ``(m, d)``) gives an array.
    """
    scalar = np.ndim(x) == 0 or (spec.dimension > 1 and np.ndim(x) == 1)
    pts = _as_points(spec, x)
    out = np.zeros(pts.shape[0])
    for w, comp in spec.components:
        out += w * comp.pdf(pts)
    return float(out[0]) if scalar else out


def sample(spec, n, seed=None):
    """Draw ``n`` i.i.d. points; deterministic given ``seed``.

    ``seed`` may be an int or a :class:`numpy.random.SeedSequence`.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    labels = np.searchsorted(np.cumsum(spec.weights), _open_uniform(rng, n))
    labels = np.minimum(labels, len(spec.components) - 1)
    points = np.empty((n, spec.dimension))
    for idx, (_, comp) in enumerate(spec.components):
        mask = labels == idx
        count = int(mask.sum())
        if count:
            points[mask] = comp.draw(rng, count)
    return Sample(points, seed)


def _component_mass_outside(comp, box):
    """Upper bound on the mass of ``comp`` outside ``box`` (union bound over axes)."""
    if isinstance(comp, (Uniform1D, Uniform2D)):
        return 0.0
    if isinstance(comp, Laplace1D):
        lo = (box.low[0] - comp.location) / comp.scale
        hi = (box.high[0] - comp.location) / comp.scale
        left = 0.5 * math.exp(lo) if lo < 0 else 1.0 - 0.5 * math.exp(-lo)
        right = 0.5 * math.exp(-hi) if hi > 0 else 1.0 - 0.5 * math.exp(hi)
        return left + right
    means = np.atleast_1d(comp.mean)
    sds = np.atleast_1d(comp.stdev)
    total = 0.0
    for p in range(len(means)):
        total += ndtr((box.low[p] - means[p]) / sds[p])
        total += ndtr(-(box.high[p] - means[p]) / sds[p])
    return float(total)


def support_box(spec, mass_tolerance=1e-6):
    """Bounding union of per-component boxes.

    Gaussians use mean +/- 6 stdev per axis, Laplace components location
    +/- 30 scale, uniforms their exact support.
    """
    if not 0 < mass_tolerance <= 0.01:
        raise ValueError("mass_tolerance must lie in (0, 0.01]")
    box = None
    for _, comp in spec.components:
        b = comp.bounds()
        box = b if box is None else box.union(b)
    missing = sum(w * _component_mass_outside(c, box) for w, c in spec.components)
    if missing > mass_tolerance:
        raise ValueError(f"support box misses mass {missing:.3g} > {mass_tolerance}")
    return box


def captured_mass_deficit(spec, box):
    """Upper bound on ``1 - P(X in box)``."""
    return float(sum(w * _component_mass_outside(c, box) for w, c in spec.components))


def oracle_grid(spec, grid_points_per_dim=None, box=None):
    g = grid_points_per_dim or DEFAULT_ORACLE_POINTS[spec.dimension]
    if g < 64:
        raise ValueError("the oracle needs at least 64 grid points per dimension")
    return QuadratureGrid(box or support_box(spec), g)


def _overlap_fraction(axis, spacing, lo, hi):
    a = axis - 0.5 * spacing
    return np.clip(np.minimum(a + spacing, hi) - np.maximum(a, lo), 0.0, None) / spacing


def _uniform_cell_fraction(comp, grid):
    lows, highs = np.atleast_1d(comp.low), np.atleast_1d(comp.high)
    frac = None
    for p, (axis, dx) in enumerate(zip(grid.axes, grid.spacing)):
        f = _overlap_fraction(axis, dx, lows[p], highs[p])
        frac = f if frac is None else np.multiply.outer(frac, f)
    return frac.ravel(), 1.0 / float(np.prod(highs - lows))


def _grid_pieces(spec, grid):
    """Split every grid cell into pieces of constant uniform-component height.

    Returns ``(values, shares)``: the density on each piece (smooth components
    at the cell midpoint) and the share of its cell the piece covers. Uniform
    edges then cost no quadrature error beyond that of the smooth part.
    """
    smooth = np.zeros(grid.size)
    for w, comp in spec.components:
        if not isinstance(comp, (Uniform1D, Uniform2D)):
            smooth += w * comp.pdf(grid.points)
    pieces = [(np.ones(grid.size), smooth)]
    for w, comp in spec.components:
        if isinstance(comp, (Uniform1D, Uniform2D)):
            frac, height = _uniform_cell_fraction(comp, grid)
            split = []
            for share, value in pieces:
                split.append((share * frac, value + w * height))
                split.append((share * (1.0 - frac), value))
            pieces = split
    shares = np.concatenate([p[0] for p in pieces])
    values = np.concatenate([p[1] for p in pieces])
    keep = shares > 0
    return values[keep], shares[keep]


def grid_pdf(spec, grid):
    """Density cell averages on a quadrature grid (exact for uniform parts)."""
    out = np.zeros(grid.size)
    for w, comp in spec.components:
        if isinstance(comp, (Uniform1D, Uniform2D)):
            frac, height = _uniform_cell_fraction(comp, grid)
            out += w * height * frac
        else:
            out += w * comp.pdf(grid.points)
    return out


def _excess_from_values(values, levels, cell_volume, shares=None):
    # sum of shares * (f - nu)_+ for every level, via sorted values and prefix sums
    if shares is None:
        shares = np.ones_like(values)
    order = np.argsort(values)[::-1]
    f = values[order]
    w = shares[order]
    mass = np.concatenate([[0.0], np.cumsum(w * f)])
    weight = np.concatenate([[0.0], np.cumsum(w)])
    out = np.empty(len(levels))
    for i, nu in enumerate(levels):
        m = int(np.searchsorted(-f, -nu, side="left"))  # count of f > nu
        out[i] = (mass[m] - nu * weight[m]) * cell_volume
    return np.maximum(out, 0.0)


def oracle_excess_mass(spec, nu, grid_points_per_dim=None):
    """Midpoint-rule value of ``int_K (f(t) - nu)_+ dt`` on the support box."""
    if nu < 0:
        raise ValueError("level must be >= 0")
    grid = oracle_grid(spec, grid_points_per_dim)
    values, shares = _grid_pieces(spec, grid)
    return float(_excess_from_values(values, [nu], grid.cell_volume, shares)[0])


def oracle_refinement_gap(spec, levels, grid_points_per_dim=None):
    """Largest change of the oracle curve when the grid is refined 2x."""
    coarse = oracle_curve(spec, levels, grid_points_per_dim)
    g = grid_points_per_dim or DEFAULT_ORACLE_POINTS[spec.dimension]
    fine = oracle_curve(spec, levels, 2 * g)
    return float(np.max(np.abs(fine.values - coarse.values)))


def oracle_curve(spec, levels, grid_points_per_dim=None):
    levels = np.asarray(levels, dtype=float).ravel()
    if np.any(levels < 0) or np.any(np.diff(levels) < 0):
        raise ValueError("levels must be >= 0 and sorted ascending")
    grid = oracle_grid(spec, grid_points_per_dim)
    values, shares = _grid_pieces(spec, grid)
    return ExcessMassCurve(
        levels,
        _excess_from_values(values, levels, grid.cell_volume, shares),
        method="oracle",
        params={"grid": list(grid.counts), "density": spec.name},
    )


def gaussian_excess_mass(nu):
    """Closed form for the standard normal: ``2 Phi(x) - 1 - 2 nu x`` with
    ``x = sqrt(-2 log(nu sqrt(2 pi)))``."""
    if nu <= 0:
        return 1.0
    if nu >= 1.0 / _SQRT_2PI:
        return 0.0
    x = math.sqrt(-2.0 * math.log(nu * _SQRT_2PI))
    return 2.0 * ndtr(x) - 1.0 - 2.0 * nu * x


def _g1(m, s):
    return Gaussian1D(m, s)


def _g2(mx, my, sx, sy, rho=0.0):
    return Gaussian2D((mx, my), (sx, sy), rho)


BUILTINS = {
    "a": DensitySpec(((1.0, _g1(0.0, 1.0)),), name="a"),
    "b": DensitySpec(((0.8, _g1(-1.0, 0.7)), (0.2, Uniform1D(1.0, 2.0))), name="b"),
    "c": DensitySpec(
        ((0.3, _g1(-1.0, 0.5)), (0.3, _g1(1.5, 1.0)), (0.4, Laplace1D(0.0, 1.0 / 6.0))),
        name="c",
    ),
    "d": DensitySpec(
        ((0.5, _g1(-1.5, 0.4)), (0.05, _g1(-0.8, 0.1)), (0.45, _g1(1.0, 0.8))),
        name="d",
    ),
    "A": DensitySpec(((1.0, _g2(0.0, 0.0, 1.0, 1.0)),), name="A"),
    "B": DensitySpec(
        ((0.6, _g2(-1.0, 0.0, 0.7, 0.7)), (0.4, Uniform2D((0.5, -0.5), (1.5, 0.5)))),
        name="B",
    ),
    "C": DensitySpec(
        ((0.8, _g2(-0.5, 0.5, 1.0, 1.0)), (0.2, _g2(0.4, -0.4, 1.0, 1.0))),
        name="C",
    ),
    "D": DensitySpec(
        (
            (0.45, _g2(0.0, 0.0, 1.5, 1.0, 0.95)),
            (0.45, _g2(0.0, 0.0, 1.5, 1.0, -0.95)),
            (0.10, _g2(0.0, -1.2, 0.2, 0.2)),
        ),
        name="D",
    ),
}


def get_density(ident):
    """Resolve a built-in id (``a``-``d``, ``A``-``D``) or a path to a JSON spec."""
    if isinstance(ident, DensitySpec):
        return ident
    if ident in BUILTINS:
        return BUILTINS[ident]
    path = Path(ident)
    if path.suffix.lower() == ".json" and path.is_file():
        spec = DensitySpec.from_json(path.read_text())
        if not spec.name:
            spec = DensitySpec(spec.components, name=path.stem)
        return spec
    raise KeyError(f"unknown density {ident!r}; built-ins are {', '.join(BUILTINS)}")


def read_sample_csv(path):
    """Read a headerless CSV of numeric columns, one point per row."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise SampleFileError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise SampleFileError(f"{path}: no data rows")
    d = len(rows[0])
    data = np.empty((len(rows), d))
    for i, row in enumerate(rows):
        if len(row) != d:
            raise SampleFileError(f"{path}:{i + 1}: expected {d} columns, got {len(row)}")
        try:
            data[i] = [float(c) for c in row]
        except ValueError as exc:
            raise SampleFileError(f"{path}:{i + 1}: {exc}") from exc
    if not np.all(np.isfinite(data)):
        raise SampleFileError(f"{path}: non-finite values")
    return Sample(data)
