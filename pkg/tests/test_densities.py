import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from excess_mass import densities
from excess_mass.densities import (
    DensitySpec,
    Gaussian1D,
    Gaussian2D,
    Laplace1D,
    Uniform1D,
    Uniform2D,
)
from excess_mass.quadrature import QuadratureGrid, SupportBox

STD = DensitySpec(((1.0, Gaussian1D(0.0, 1.0)),))


def _mixture_pdf_scipy(spec, x):
    """Independent evaluation through scipy.stats frozen distributions."""
    total = 0.0
    for w, c in spec.components:
        if isinstance(c, Gaussian1D):
            total += w * stats.norm(c.mean, c.stdev).pdf(x)
        elif isinstance(c, Uniform1D):
            total += w * stats.uniform(c.low, c.high - c.low).pdf(x)
        elif isinstance(c, Laplace1D):
            total += w * stats.laplace(c.location, c.scale).pdf(x)
    return total


def test_standard_gaussian_at_zero():
    assert densities.pdf(STD, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)


def test_mixture_b_at_half():
    spec = densities.get_density("b")
    assert densities.pdf(spec, 0.5) == pytest.approx(0.8 * stats.norm(-1, 0.7).pdf(0.5), rel=1e-13)


def test_uniform_outside_support_is_zero():
    spec = DensitySpec(((1.0, Uniform1D(1.0, 2.0)),))
    assert densities.pdf(spec, 0.5) == 0.0


@pytest.mark.parametrize("ident", ["a", "b", "c", "d"])
def test_builtin_pdfs_match_scipy(ident):
    spec = densities.get_density(ident)
    for x in np.linspace(-4, 4, 33):
        assert densities.pdf(spec, x) == pytest.approx(_mixture_pdf_scipy(spec, x), rel=1e-12,
                                                       abs=1e-300)


def test_bivariate_gaussian_matches_scipy():
    comp = Gaussian2D((0.3, -0.2), (1.5, 0.7), 0.6)
    spec = DensitySpec(((1.0, comp),))
    cov = [[1.5**2, 0.6 * 1.5 * 0.7], [0.6 * 1.5 * 0.7, 0.7**2]]
    ref = stats.multivariate_normal([0.3, -0.2], cov)
    for x in [(0, 0), (1, -1), (-2, 0.5)]:
        assert densities.pdf(spec, x) == pytest.approx(ref.pdf(x), rel=1e-12)


def test_pdf_rejects_wrong_dimension():
    with pytest.raises(ValueError):
        densities.pdf(densities.get_density("A"), 0.3)


@pytest.mark.parametrize("bad", [
    lambda: DensitySpec(((0.5, Gaussian1D(0, 1)), (0.4, Gaussian1D(1, 1)))),
    lambda: DensitySpec(((1.0, Gaussian1D(0, 0)),)),
    lambda: DensitySpec(((1.0, Uniform1D(1, 1)),)),
    lambda: DensitySpec(((1.0, Laplace1D(0, -1)),)),
    lambda: DensitySpec(((1.0, Gaussian2D((0, 0), (1, 1), 1.0)),)),
    lambda: DensitySpec(((0.5, Gaussian1D(0, 1)), (0.5, Gaussian2D((0, 0), (1, 1), 0)))),
    lambda: DensitySpec(((1.0, Uniform2D((0, 0), (1, 0))),)),
    lambda: DensitySpec(((-0.5, Gaussian1D(0, 1)), (1.5, Gaussian1D(0, 1)))),
])
def test_invalid_specs(bad):
    with pytest.raises(ValueError):
        bad()


def test_uniform_sample_mean():
    spec = DensitySpec(((1.0, Uniform1D(0, 1)),))
    x = densities.sample(spec, 100_000, 3).points
    assert abs(x.mean() - 0.5) < 0.01


def test_gaussian_sample_stdev():
    x = densities.sample(densities.get_density("a"), 100_000, 4).points
    assert abs(x.std(ddof=1) - 1) < 0.02


@pytest.mark.parametrize("ident", list(densities.BUILTINS))
def test_sampling_is_deterministic(ident):
    spec = densities.get_density(ident)
    a = densities.sample(spec, 500, 99)
    b = densities.sample(spec, 500, 99)
    np.testing.assert_array_equal(a.points, b.points)
    assert a.points.shape == (500, spec.dimension)
    assert np.all(np.isfinite(a.points))


def test_sample_moments_of_mixture_d():
    spec = densities.get_density("d")
    x = densities.sample(spec, 200_000, 5).points[:, 0]
    mean = sum(w * c.mean for w, c in spec.components)
    assert abs(x.mean() - mean) < 0.01


def test_laplace_sample_scale():
    spec = DensitySpec(((1.0, Laplace1D(0.0, 1 / 6)),))
    x = densities.sample(spec, 100_000, 8).points[:, 0]
    # E|X| = scale for the Laplace law
    assert abs(np.abs(x).mean() - 1 / 6) < 0.003


def test_support_box_uniform_is_exact():
    box = densities.support_box(DensitySpec(((1.0, Uniform1D(1, 2)),)))
    assert box.low == (1.0,) and box.high == (2.0,)


def test_support_box_gaussian_covers_five_sigma():
    box = densities.support_box(STD)
    assert box.low[0] <= -5 and box.high[0] >= 5


def test_support_box_union_for_B():
    box = densities.support_box(densities.get_density("B"))
    assert box.low[0] <= -1 - 6 * 0.7 and box.high[0] >= 1.5
    assert box.low[1] <= -6 * 0.7 and box.high[1] >= 6 * 0.7


def test_support_box_tolerance_checked():
    with pytest.raises(ValueError):
        densities.support_box(STD, mass_tolerance=0.5)


@pytest.mark.parametrize("ident", list(densities.BUILTINS))
def test_builtin_boxes_capture_mass(ident):
    spec = densities.get_density(ident)
    assert densities.captured_mass_deficit(spec, densities.support_box(spec)) < 1e-6


def test_oracle_endpoints_for_standard_gaussian():
    assert densities.oracle_excess_mass(STD, 0.0) == pytest.approx(1.0, abs=1e-6)
    assert densities.oracle_excess_mass(STD, 0.5) == 0.0


def test_oracle_at_two_tenths():
    # closed form is 0.2900053; the quoted four-digit value 0.2901 is within 1e-4
    assert densities.oracle_excess_mass(STD, 0.2) == pytest.approx(0.2901, abs=1e-4)


@pytest.mark.parametrize("nu", np.linspace(0.01, 0.39, 12))
def test_oracle_matches_closed_form(nu):
    assert densities.oracle_excess_mass(STD, nu) == pytest.approx(
        densities.gaussian_excess_mass(nu), abs=1e-6)


@pytest.mark.parametrize("ident, nu", [("b", 0.1), ("c", 0.3), ("c", 0.9), ("d", 0.25)])
def test_oracle_against_adaptive_quadrature(ident, nu):
    spec = densities.get_density(ident)
    box = densities.support_box(spec)
    breaks = [c.low for _, c in spec.components if isinstance(c, Uniform1D)]
    breaks += [c.high for _, c in spec.components if isinstance(c, Uniform1D)]
    breaks += [c.location for _, c in spec.components if isinstance(c, Laplace1D)]
    ref, _ = integrate.quad(lambda x: max(_mixture_pdf_scipy(spec, x) - nu, 0.0),
                            box.low[0], box.high[0], points=breaks or None, limit=500)
    assert densities.oracle_excess_mass(spec, nu) == pytest.approx(ref, abs=2e-5)


def test_oracle_2d_gaussian_closed_form():
    # level set of the standard bivariate normal is a disc of radius r:
    # E = P(|X| <= r) - nu * pi r^2 = 1 - exp(-r^2/2) - nu pi r^2
    spec = densities.get_density("A")
    nu = 0.05
    r2 = -2 * math.log(2 * math.pi * nu)
    expected = 1 - math.exp(-r2 / 2) - nu * math.pi * r2
    assert densities.oracle_excess_mass(spec, nu) == pytest.approx(expected, abs=2e-5)


def test_oracle_curve_endpoints_and_degenerate_grid():
    curve = densities.oracle_curve(STD, [0.0, 1.0])
    assert curve.values[0] == pytest.approx(1.0, abs=1e-6)
    assert curve.values[1] == 0.0
    same = densities.oracle_curve(STD, [0.3, 0.3])
    assert same.values[0] == same.values[1]


@pytest.mark.parametrize("ident", list(densities.BUILTINS))
def test_oracle_monotone_convex_and_refined(ident):
    spec = densities.get_density(ident)
    levels = np.linspace(0, 1, 100)
    curve = densities.oracle_curve(spec, levels)
    assert curve.values[0] == pytest.approx(1.0, abs=1e-5)
    assert np.all(np.diff(curve.values) <= 1e-12)
    assert np.all(np.diff(curve.values, 2) >= -1e-5)
    assert densities.oracle_refinement_gap(spec, levels[::10]) < 1e-4


def test_oracle_requires_enough_points():
    with pytest.raises(ValueError):
        densities.oracle_excess_mass(STD, 0.1, grid_points_per_dim=16)


def test_json_round_trip_and_rate_alias(tmp_path):
    for spec in densities.BUILTINS.values():
        again = DensitySpec.from_json(spec.to_json())
        assert again.to_dict() == spec.to_dict()
    doc = {"dimension": 1, "components": [{"weight": 1.0, "kind": "laplace",
                                           "location": 0.0, "rate": 6.0}]}
    path = tmp_path / "lap.json"
    path.write_text(json.dumps(doc))
    spec = densities.get_density(str(path))
    assert densities.pdf(spec, 0.0) == pytest.approx(3.0)


def test_unknown_density_id():
    with pytest.raises(KeyError):
        densities.get_density("Z")


def test_read_sample_csv(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("0.5,1\n-1.25,2e-3\n")
    smp = densities.read_sample_csv(path)
    np.testing.assert_array_equal(smp.points, [[0.5, 1.0], [-1.25, 0.002]])
    path.write_text("1,2\n3\n")
    with pytest.raises(densities.SampleFileError):
        densities.read_sample_csv(path)
    path.write_text("1\nabc\n")
    with pytest.raises(densities.SampleFileError):
        densities.read_sample_csv(path)
    with pytest.raises(densities.SampleFileError):
        densities.read_sample_csv(tmp_path / "missing.csv")


def test_grid_integrates_to_box_volume():
    box = SupportBox((-1.0, 0.0), (2.0, 0.5))
    grid = QuadratureGrid(box, (30, 20))
    assert grid.weights.sum() == pytest.approx(box.volume, rel=1e-14)
    assert grid.points.shape == (600, 2)


@settings(max_examples=30, deadline=None)
@given(mean=st.floats(-3, 3), sd=st.floats(0.2, 3), nu=st.floats(0, 0.5))
def test_oracle_is_translation_and_scale_covariant(mean, sd, nu):
    # E_f(nu) for N(m, s^2) equals E_std(nu * s): excess mass is scale-free after rescaling nu
    spec = DensitySpec(((1.0, Gaussian1D(mean, sd)),))
    got = densities.oracle_excess_mass(spec, nu)
    assert got == pytest.approx(densities.gaussian_excess_mass(nu * sd), abs=2e-6)
