import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scaled_shepard.pointset import (
    DomainSpec,
    PointSet,
    count_annuli,
    fill_distance,
    gen_grid,
    gen_hexagonal,
    gen_poisson_disk,
    hex_aligned_box,
    load_csv,
    save_csv,
    separation_radius,
    UniformityReport,
    uniformity_report,
    verify_counting_bounds,
)


def brute_separation(pts):
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    dist[np.diag_indices(len(pts))] = np.inf
    return 0.5 * dist.min()


# -- domains and point sets ----------------------------------------------------


def test_domain_validation():
    with pytest.raises(ValueError):
        DomainSpec.box([0, 0], [1])
    with pytest.raises(ValueError):
        DomainSpec.box([0, 1], [1, 1])
    with pytest.raises(ValueError):
        DomainSpec.ball([0, 0], 0.0)
    with pytest.raises(ValueError):
        DomainSpec("torus")


def test_domain_roundtrip_and_contains():
    for dom in (DomainSpec.box([0, -1], [2, 1]), DomainSpec.ball([0.5, 0.5, 0.5], 0.5)):
        assert DomainSpec.from_dict(dom.to_dict()) == dom
        x = dom.sample(np.random.default_rng(0), 500)
        assert np.all(dom.contains(x))
    ball = DomainSpec.ball([0, 0], 1)
    assert ball.contains(np.array([[0.6, 0.8], [0.8, 0.8]])).tolist() == [True, False]


def test_probe_grid_covers_ball_boundary():
    ball = DomainSpec.ball([0, 0], 1.0)
    probes = ball.probe_grid(0.05)
    assert np.all(np.linalg.norm(probes, axis=1) <= 1 + 1e-12)
    # boundary point nearest to nothing special is still close to a probe
    th = np.linspace(0, 2 * np.pi, 50)
    rim = np.stack([np.cos(th), np.sin(th)], axis=1)
    gap = np.min(np.linalg.norm(rim[:, None] - probes[None], axis=2), axis=1)
    assert gap.max() <= 0.05 * math.sqrt(2)


def test_probe_grid_size_guard():
    with pytest.raises(ValueError):
        DomainSpec.unit_cube(4).probe_grid(1e-3)


def test_pointset_rejects_duplicates_and_is_readonly():
    with pytest.raises(ValueError):
        PointSet(np.array([[0.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        PointSet(np.array([[np.nan, 0.0]]))
    ps = PointSet(np.array([[0.0, 0.0], [1.0, 0.0]]))
    with pytest.raises(ValueError):
        ps.points[0, 0] = 3.0
    assert ps.n_index == 2 and ps.scale == pytest.approx(2**-0.5)


# -- generators ------------------------------------------------------------------


def test_grid_1d_two_points():
    ps = gen_grid(1, 2)
    assert ps.points.ravel().tolist() == [0.25, 0.75]


@pytest.mark.parametrize("d, m", [(1, 8), (2, 8), (3, 6)])
def test_grid_q_and_h(d, m):
    ps = gen_grid(d, m)
    rep = uniformity_report(ps, DomainSpec.unit_cube(d), probe_resolution=1 / (2 * m))
    assert rep.q == pytest.approx(1 / (2 * m), rel=1e-14)
    # corners sit at half a cell diagonal from the nearest site
    assert rep.h == pytest.approx(math.sqrt(d) / (2 * m), rel=1e-12)
    assert rep.c_est == pytest.approx(1.0)
    assert rep.C_est == pytest.approx(math.sqrt(d) / 2, rel=1e-12)


@pytest.mark.parametrize("n", [256, 1024, 4096])
def test_hexagonal_constants(n):
    dom = hex_aligned_box(n)
    ps = gen_hexagonal(n, dom)
    rep = uniformity_report(ps, dom, probe_resolution=0.05 * n**-0.5)
    assert rep.q == pytest.approx(n**-0.5, rel=1e-12)
    assert rep.c_est == pytest.approx(2.0, rel=1e-12)
    assert rep.C_est == pytest.approx(2 / math.sqrt(3), abs=0.05 * math.sqrt(2))
    assert rep.C_est <= 2 / math.sqrt(3) + 1e-12
    # one site per fundamental cell of area 2 sqrt(3) / n
    area = np.prod(dom.bbox[1] - dom.bbox[0])
    assert ps.n == pytest.approx(n * area / (2 * math.sqrt(3)), rel=0.25)  # boundary rows add more at small n


def test_hexagonal_lattice_vectors():
    ps = gen_hexagonal(100, hex_aligned_box(100))
    pts = ps.points
    d = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    d[d == 0] = np.inf
    nn = d.min(axis=1)
    assert np.allclose(nn, 0.2)
    # interior points have six nearest neighbours
    counts = np.sum(np.isclose(d, 0.2), axis=1)
    assert counts.max() == 6


def test_hexagonal_rejects_other_domains():
    with pytest.raises(ValueError):
        gen_hexagonal(100, DomainSpec.unit_cube(3))
    with pytest.raises(ValueError):
        gen_hexagonal(0)


@pytest.mark.parametrize("d, r", [(1, 0.02), (2, 0.05), (3, 0.15)])
def test_poisson_disk_properties(d, r):
    dom = DomainSpec.unit_cube(d)
    ps = gen_poisson_disk(d, r, dom, seed=4)
    rep = uniformity_report(ps, dom, probe_resolution=r / 8)
    assert rep.q >= r / 2 * (1 - 1e-12)
    # maximality: every gap-fill probe is within r, probes are r/4 apart
    assert rep.h <= r + (r / 4) * math.sqrt(d) / 2 + 1e-12
    assert np.all(dom.contains(ps.points))


def test_poisson_disk_deterministic():
    a = gen_poisson_disk(2, 0.08, seed=9)
    b = gen_poisson_disk(2, 0.08, seed=9)
    c = gen_poisson_disk(2, 0.08, seed=10)
    assert np.array_equal(a.points, b.points)
    assert not (a.n == c.n and np.array_equal(a.points, c.points))


def test_poisson_disk_in_ball():
    dom = DomainSpec.ball([0, 0], 1.0)
    ps = gen_poisson_disk(2, 0.1, dom, seed=1)
    assert np.all(dom.contains(ps.points))
    assert separation_radius(ps) >= 0.05 * (1 - 1e-12)


# -- measurements ----------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 60), d=st.integers(1, 4), seed=st.integers(0, 10_000))
def test_separation_matches_brute_force(n, d, seed):
    pts = np.random.default_rng(seed).random((n, d))
    assert separation_radius(PointSet(pts)) == pytest.approx(brute_separation(pts), rel=1e-14)


def test_separation_needs_two_points():
    with pytest.raises(ValueError):
        separation_radius(PointSet(np.zeros((1, 2))))


def test_fill_distance_single_centre_point():
    ps = PointSet(np.array([[0.5, 0.5]]))
    assert fill_distance(ps, DomainSpec.unit_cube(2), 0.01) == pytest.approx(math.sqrt(2) / 2)


def test_fill_distance_lower_bound_of_truth():
    # two points on a line: true h is 0.25 (at the ends and the midpoint)
    ps = PointSet(np.array([[0.25], [0.75]]))
    h = fill_distance(ps, DomainSpec.unit_cube(1), 0.03)
    assert 0.25 - 0.03 <= h <= 0.25


def test_fill_distance_interior_margin():
    ps = gen_grid(2, 10)
    dom = DomainSpec.unit_cube(2)
    assert fill_distance(ps, dom, 0.01, interior_margin=0.2) <= fill_distance(ps, dom, 0.01)


def test_report_h_at_least_q():
    ps = PointSet(np.array([[0.0, 0.0], [1.0, 1.0]]))
    rep = uniformity_report(ps, DomainSpec.unit_cube(2), probe_resolution=0.5)
    assert rep.h >= rep.q
    assert rep.rho == pytest.approx(rep.h / rep.q)


# -- annuli ------------------------------------------------------------------------


def test_annuli_half_open():
    ps = PointSet(np.array([[0.0], [1.0], [1.999], [2.0], [3.5]]))
    rep = count_annuli(ps, [0.0], 1.0)
    assert rep.counts.tolist() == [1, 2, 1, 1]


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), t=st.floats(0.01, 0.5))
def test_annuli_partition(seed, t):
    rng = np.random.default_rng(seed)
    ps = PointSet(rng.random((50, 2)))
    rep = count_annuli(ps, rng.random(2), t)
    assert rep.counts.sum() == 50


def test_annuli_isometry_invariance():
    rng = np.random.default_rng(2)
    ps = gen_poisson_disk(2, 0.1, seed=3)
    theta = 0.7
    Q = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    shift = np.array([3.0, -1.0])
    moved = ps.transformed(Q, shift)
    for center in rng.random((5, 2)):
        a = count_annuli(ps, center, 0.13).counts
        b = count_annuli(moved, Q @ center + shift, 0.13).counts
        # shell boundaries are hit with probability zero, rounding aside
        assert np.abs(a - b).sum() <= 2


def test_count_annuli_validation():
    with pytest.raises(ValueError):
        count_annuli(PointSet(np.zeros((1, 1))), [0.0], 0.0)


@pytest.mark.parametrize(
    "make",
    [
        lambda: (gen_grid(2, 16), DomainSpec.unit_cube(2)),
        lambda: (gen_hexagonal(1024, hex_aligned_box(1024)), hex_aligned_box(1024)),
        lambda: (gen_poisson_disk(2, 0.04, seed=0), DomainSpec.unit_cube(2)),
    ],
)
def test_counting_bounds_hold(make):
    ps, dom = make()
    rep = uniformity_report(ps, dom)
    centers = dom.sample(np.random.default_rng(0), 10)
    out = verify_counting_bounds(ps, dom, rep, centers)
    assert out.ok, out.violations[:3]
    kinds = {r["kind"] for r in out.records}
    assert kinds == {"prop22", "cor23"}
    assert all(r["bounds"][0] is None for r in out.records if r["kind"] == "cor23")


def test_counting_violation_carries_context():
    # a report claiming far sparser sites than the set really has
    ps = gen_grid(2, 20)
    bad = UniformityReport(ps.n, ps.n, 2, 0.5, 0.5, 0.1)
    out = verify_counting_bounds(ps, DomainSpec.unit_cube(2), bad, [[0.5, 0.5]])
    assert out.violations
    assert set(out.violations[0]) == {"kind", "center", "j", "count", "bound"}


# -- files ---------------------------------------------------------------------------


def test_csv_roundtrip(tmp_path):
    ps = gen_poisson_disk(3, 0.2, seed=1)
    save_csv(ps, tmp_path / "p.csv")
    back = load_csv(tmp_path / "p.csv", n_index=ps.n_index)
    assert np.array_equal(back.points, ps.points)
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "x1,x2,x3"


def test_csv_validation(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="header"):
        load_csv(p)
    p.write_text("x1,x2\n1,2\n3\n")
    with pytest.raises(ValueError, match="columns"):
        load_csv(p)
    p.write_text("")
    with pytest.raises(ValueError):
        load_csv(p)
    p.write_text("x1,x2\n1,2\n1,2\n")
    with pytest.raises(ValueError, match="duplicate"):
        load_csv(p)
