import math

import numpy as np
import pytest

from scaled_shepard import DomainSpec, ScaledShepardRegressor
from scaled_shepard.pointset import gen_grid
from scaled_shepard.shepard import kernel_inverse_multiquadric
from scaled_shepard.shepard.analysis import (
    STUDY_COLUMNS,
    affine_function,
    catalog,
    constant_function,
    convergence_study,
    distance_function,
    distance_to_set_function,
    empirical_modulus,
    grid_family,
    hexagonal_family,
    kernel_sum_checks,
    poisson_family,
    probe_points,
    sine_sum_function,
    sup_error,
)

CUBE2 = DomainSpec.unit_cube(2)


def pair_search(f, t, domain, samples=40_000, seed=1):
    """Oscillation over random pairs at distance exactly t (lower bound oracle)."""
    rng = np.random.default_rng(seed)
    x = domain.sample(rng, samples)
    v = rng.standard_normal(x.shape)
    v *= (t / np.linalg.norm(v, axis=1))[:, None]
    ok = domain.contains(x + v, tol=0.0)
    return float(np.max(np.abs(f(x[ok] + v[ok]) - f(x[ok]))))


@pytest.mark.parametrize("dom", [CUBE2, DomainSpec.unit_cube(3), DomainSpec.box([0, 0], [2, 1])])
def test_catalog_modulus_is_attained(dom):
    for f in catalog(dom, include_constant=False):
        for t in (0.02, 0.05, 0.1):
            om = f.omega(t)
            emp = max(pair_search(f, t, dom), empirical_modulus(f, t, dom))
            assert emp <= om * (1 + 1e-12)
            assert emp >= 0.97 * om, (f.name, t)


def test_sine_extremal_pair():
    dom = DomainSpec.unit_cube(3)
    f = sine_sum_function(dom)
    t = 0.3
    s = t / (2 * math.sqrt(3))
    x = np.full((1, 3), 0.5 - s)
    y = np.full((1, 3), 0.5 + s)
    assert abs(f(y) - f(x))[0] == pytest.approx(f.omega(t), rel=1e-14)


def test_affine_modulus_saturates_on_box():
    dom = DomainSpec.box([0, 0], [1, 0.1])
    f = affine_function(dom, [1.0, 1.0])
    assert f.omega(0.05) == pytest.approx(0.05 * math.sqrt(2))
    # |v| = 1 no longer fits along the gradient: second coordinate capped at 0.1
    v2 = 0.1
    assert f.omega(1.0) == pytest.approx(math.sqrt(1 - v2**2) + v2)
    assert f.omega(10.0) == pytest.approx(1.1)


def test_modulus_subadditive():
    for f in catalog(CUBE2):
        ts = np.linspace(0, f.omega_exact_up_to if math.isfinite(f.omega_exact_up_to) else 1.0, 12)
        for s in ts:
            for t in ts:
                if s + t <= f.omega_exact_up_to:
                    assert f.omega(s + t) <= f.omega(s) + f.omega(t) + 1e-12


def test_modulus_range_guard():
    f = distance_to_set_function(CUBE2)
    with pytest.raises(ValueError, match="exact modulus"):
        f.omega(0.5)
    with pytest.raises(ValueError):
        f.omega(-1.0)
    assert distance_function(CUBE2).omega(5.0) == pytest.approx(math.sqrt(0.5))


def test_probe_points_odd_axis():
    P = probe_points(CUBE2, 100)
    assert len(P) == 121
    assert np.any(np.all(P == 0.5, axis=1))


def test_sup_error_constant_and_single_site():
    ps = gen_grid(2, 8)
    f = constant_function(4.0)
    m = ScaledShepardRegressor(domain=CUBE2).fit(ps.points, f(ps.points))
    assert sup_error(m, f, 500) <= 1e-13
    g = distance_function(CUBE2)
    site = np.array([[0.5, 0.5]])
    one = ScaledShepardRegressor(C=1.0, domain=CUBE2).fit(site, g(site))
    # the approximant is the constant g(centre) = 0; worst probe is a corner
    assert sup_error(one, g, 441) == pytest.approx(math.sqrt(0.5), abs=1e-12)


def test_kernel_sum_checks_hold():
    ps = gen_grid(2, 16)
    m = ScaledShepardRegressor(domain=CUBE2).fit(ps.points, np.zeros(ps.n))
    chk = kernel_sum_checks(m, 2000)
    assert chk.lower_ok and chk.upper_ok
    assert chk.min_sum < chk.max_sum < chk.upper


@pytest.mark.parametrize("family", [grid_family(2), hexagonal_family(), poisson_family(2, seed=1)])
def test_families_return_matching_index(family):
    ps, dom = family(256)
    assert ps.n_index == 256
    assert np.all(dom.contains(ps.points))


def test_grid_family_needs_power():
    with pytest.raises(ValueError):
        grid_family(2)(200)


def test_convergence_study_rows():
    rec = convergence_study(grid_family(2), distance_function, kernel_inverse_multiquadric(3.0), [16, 64, 256, 1024], 2000)
    assert [r["n"] for r in rec.rows] == [16, 64, 256, 1024]
    assert rec.slope_defined and rec.slope < 0
    assert rec.all_within_bound
    lines = rec.to_csv().splitlines()
    assert lines[0] == ",".join(STUDY_COLUMNS) and len(lines) == 5


def test_convergence_study_constant_has_no_slope():
    rec = convergence_study(grid_family(2), constant_function(1.0), kernel_inverse_multiquadric(3.0), [16, 64, 256, 1024], 500)
    assert not rec.slope_defined
    assert all(r["ratio"] == 0.0 for r in rec.rows)


def test_convergence_study_validation():
    k = kernel_inverse_multiquadric(3.0)
    with pytest.raises(ValueError):
        convergence_study(grid_family(2), constant_function(), k, [16, 64, 256])
    with pytest.raises(ValueError):
        convergence_study(grid_family(2), constant_function(), k, [64, 16, 256, 1024])
