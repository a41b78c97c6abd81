"""Point sets, convex domains, separation/fill measurements and shell counts.

Throughout, ``n`` in scalings like ``n^(-1/d)`` is the *sequence index* of a
point family (``PointSet.n_index``). For most families it equals the number
of points; for a clipped lattice it is the lattice's density parameter.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import qmc

from .constants import bound_cor23, bound_prop22, constant_K_d
from .geometry import AnnulusFamily, LensConfig, annulus_measure, prop21_lower_bound

__all__ = [
    "PointSet",
    "DomainSpec",
    "UniformityReport",
    "AnnulusCountReport",
    "CountingVerification",
    "gen_grid",
    "gen_hexagonal",
    "hex_aligned_box",
    "gen_poisson_disk",
    "separation_radius",
    "fill_distance",
    "uniformity_report",
    "count_annuli",
    "pigeonhole_bound",
    "verify_counting_bounds",
    "load_csv",
    "save_csv",
]

MAX_PROBES = 8_000_000


@dataclass(frozen=True)
class DomainSpec:
    """Closed convex domain: an axis-aligned box or a ball."""

    kind: str
    lower: tuple[float, ...] = ()
    upper: tuple[float, ...] = ()
    center: tuple[float, ...] = ()
    radius: float = 0.0

    def __post_init__(self):
        if self.kind == "box":
            if len(self.lower) != len(self.upper) or not self.lower:
                raise ValueError("box needs matching non-empty lower/upper bounds")
            if any(u <= l for l, u in zip(self.lower, self.upper)):
                raise ValueError("box must have non-empty interior")
        elif self.kind == "ball":
            if not self.center or not self.radius > 0:
                raise ValueError("ball needs a centre and positive radius")
        else:
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float]) -> "DomainSpec":
        return cls("box", lower=tuple(map(float, lower)), upper=tuple(map(float, upper)))

    @classmethod
    def unit_cube(cls, d: int) -> "DomainSpec":
        return cls.box([0.0] * d, [1.0] * d)

    @classmethod
    def ball(cls, center: Sequence[float], radius: float) -> "DomainSpec":
        return cls("ball", center=tuple(map(float, center)), radius=float(radius))

    @property
    def d(self) -> int:
        return len(self.lower) if self.kind == "box" else len(self.center)

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "box":
            return np.asarray(self.lower), np.asarray(self.upper)
        c = np.asarray(self.center)
        return c - self.radius, c + self.radius

    @property
    def diameter(self) -> float:
        lo, hi = self.bbox
        return float(np.linalg.norm(hi - lo)) if self.kind == "box" else 2 * self.radius

    def contains(self, x: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        x = np.atleast_2d(x)
        if self.kind == "box":
            lo, hi = self.bbox
            return np.all((x >= lo - tol) & (x <= hi + tol), axis=1)
        return np.linalg.norm(x - np.asarray(self.center), axis=1) <= self.radius + tol

    def shrink(self, margin: float) -> "DomainSpec":
        if margin <= 0:
            return self
        if self.kind == "box":
            return DomainSpec.box(np.add(self.lower, margin), np.subtract(self.upper, margin))
        return DomainSpec.ball(self.center, self.radius - margin)

    def probe_grid(self, resolution: float) -> np.ndarray:
        """Grid of spacing at most ``resolution`` covering the domain, boundary included.

        Every domain point lies within ``resolution * sqrt(d) / 2`` of a probe
        for boxes; for balls, grid points outside are projected onto the sphere.
        """
        if not resolution > 0:
            raise ValueError("probe resolution must be positive")
        lo, hi = self.bbox
        axes = [np.linspace(a, b, int(math.ceil((b - a) / resolution)) + 1) for a, b in zip(lo, hi)]
        total = math.prod(len(a) for a in axes)
        if total > MAX_PROBES:
            raise ValueError(f"probe grid too large ({total} points); use a coarser resolution")
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
        if self.kind == "box":
            return grid
        c = np.asarray(self.center)
        r = np.linalg.norm(grid - c, axis=1)
        inside = grid[r <= self.radius]
        near = (r > self.radius) & (r <= self.radius + resolution * math.sqrt(self.d))
        proj = c + (grid[near] - c) * (self.radius / r[near])[:, None]
        return np.vstack([inside, proj])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        lo, hi = self.bbox
        out = []
        need = size
        while need > 0:
            x = lo + (hi - lo) * rng.random((max(2 * need, 16), self.d))
            x = x[self.contains(x)]
            out.append(x[:need])
            need -= len(out[-1])
        return np.vstack(out)

    def to_dict(self) -> dict:
        if self.kind == "box":
            return {"kind": "box", "lower": list(self.lower), "upper": list(self.upper)}
        return {"kind": "ball", "center": list(self.center), "radius": self.radius}

    @classmethod
    def from_dict(cls, data: dict) -> "DomainSpec":
        if data["kind"] == "box":
            return cls.box(data["lower"], data["upper"])
        return cls.ball(data["center"], data["radius"])


@dataclass(frozen=True, eq=False)
class PointSet:
    """Immutable finite point set in ``R^d`` without duplicates."""

    points: np.ndarray
    label: str = ""
    n_index: int | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("points must be a non-empty (n, d) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if len(pts) > 1:
            dist, _ = cKDTree(pts).query(pts, k=2)
            if np.any(dist[:, 1] == 0.0):
                raise ValueError("point set contains duplicate points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.n_index is None:
            object.__setattr__(self, "n_index", len(pts))
        elif self.n_index < 1:
            raise ValueError("n_index must be positive")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def scale(self) -> float:
        """``n^(-1/d)`` with ``n`` the sequence index."""
        return self.n_index ** (-1.0 / self.d)

    def __len__(self) -> int:
        return self.n

    def transformed(self, matrix: np.ndarray | None = None, shift: np.ndarray | None = None) -> "PointSet":
        pts = self.points if matrix is None else self.points @ np.asarray(matrix).T
        if shift is not None:
            pts = pts + shift
        return PointSet(pts, self.label, self.n_index)


@dataclass(frozen=True)
class UniformityReport:
    n: int
    n_index: int
    d: int
    q: float
    h: float
    probe_resolution: float

    def __post_init__(self):
        if not self.h >= self.q:
            raise AssertionError(f"fill distance {self.h} below separation radius {self.q}")

    @property
    def rho(self) -> float:
        return self.h / self.q

    @property
    def c_est(self) -> float:
        return 2.0 * self.q * self.n_index ** (1.0 / self.d)

    @property
    def C_est(self) -> float:
        return self.h * self.n_index ** (1.0 / self.d)

    @property
    def probe_error(self) -> float:
        """Worst-case amount by which ``h`` may underestimate the true fill distance."""
        return self.probe_resolution * math.sqrt(self.d)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "n_index": self.n_index, "d": self.d, "q": self.q, "h": self.h,
            "rho": self.rho, "c_est": self.c_est, "C_est": self.C_est,
            "probe_resolution": self.probe_resolution, "probe_error": self.probe_error,
        }


@dataclass
class AnnulusCountReport:
    """Occupancy of shells ``[k t, (k+1) t)``, ``k = 0, 1, ...``.

    ``counts[k]`` is shell ``j = k + 1`` in the outer-radius indexing used by
    :func:`bound_prop22` and shell ``j = k`` in the inner-radius indexing used
    by :func:`bound_cor23` (``k = 0`` is the central ball, which that bound
    does not cover).
    """

    center: np.ndarray
    thickness: float
    counts: np.ndarray
    bound_prop22: np.ndarray | None = None
    bound_cor23: np.ndarray | None = None


@dataclass
class CountingVerification:
    records: list[dict] = field(default_factory=list)

    @property
    def violations(self) -> list[dict]:
        return [v for r in self.records for v in r["violations"]]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self, **kw) -> str:
        return json.dumps(self.records, **kw)


def _as_points(ps) -> np.ndarray:
    return ps.points if isinstance(ps, PointSet) else np.asarray(ps, dtype=float)


# -- generators ---------------------------------------------------------------


def gen_grid(d: int, per_axis: int, domain: DomainSpec | None = None) -> PointSet:
    """Cell-centred lattice of ``per_axis**d`` points in a box."""
    domain = domain or DomainSpec.unit_cube(d)
    if domain.kind != "box":
        raise ValueError("gen_grid needs a box domain")
    if domain.d != d:
        raise ValueError("domain dimension mismatch")
    if per_axis < 1:
        raise ValueError("per_axis must be >= 1")
    lo, hi = domain.bbox
    axes = [a + (b - a) * (np.arange(per_axis) + 0.5) / per_axis for a, b in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    return PointSet(pts, label=f"grid-d{d}-m{per_axis}")


def hex_aligned_box(n: int, width: float = 1.0, height: float = 1.0, origin=(0.0, 0.0)) -> DomainSpec:
    """Box whose sides are whole multiples of the hexagonal lattice's rectangular periods.

    On such a box, anchored at a lattice point, the fill distance of the
    clipped lattice equals the interior value ``(2/sqrt(3)) n^(-1/2)``.
    """
    s = n**-0.5
    px, py = math.sqrt(3) * s, 2 * s
    w = max(1, round(width / px)) * px
    h = max(1, round(height / py)) * py
    return DomainSpec.box(origin, (origin[0] + w, origin[1] + h))


def gen_hexagonal(n_target: int, domain: DomainSpec | None = None) -> PointSet:
    """Hexagonal lattice ``n^(-1/2) [[sqrt3, 0], [-1, 2]]`` (columns are generators), clipped.

    The lattice is anchored at the domain's lower-left corner. Nearest
    neighbours are ``2 n^(-1/2)`` apart.
    """
    if n_target < 1:
        raise ValueError("n_target must be positive")
    domain = domain or DomainSpec.unit_cube(2)
    if domain.d != 2:
        raise ValueError("hexagonal lattice is two-dimensional")
    if domain.kind != "box":
        raise ValueError("gen_hexagonal needs a box domain")
    s = n_target**-0.5
    (x0, y0), (x1, y1) = domain.bbox
    eps = 1e-9 * s
    gen = s * np.array([[math.sqrt(3), 0.0], [-1.0, 2.0]])
    i = np.arange(0, int(math.floor((x1 - x0 + eps) / (math.sqrt(3) * s))) + 1)
    k_lo = int(math.floor(-(y1 - y0) / (2 * s))) - 1
    k_hi = int(math.ceil((y1 - y0) / (2 * s) + len(i) / 2)) + 1
    k = np.arange(k_lo, k_hi + 1)
    ii, kk = np.meshgrid(i, k, indexing="ij")
    pts = np.stack([ii.ravel(), kk.ravel()], axis=1) @ gen.T + np.array([x0, y0])
    keep = np.all((pts >= [x0 - eps, y0 - eps]) & (pts <= [x1 + eps, y1 + eps]), axis=1)
    pts = np.clip(pts[keep], [x0, y0], [x1, y1])
    return PointSet(pts, label=f"hex-n{n_target}", n_index=n_target)


def gen_poisson_disk(
    d: int,
    min_dist: float,
    domain: DomainSpec | None = None,
    seed: int = 0,
    fill_resolution: float | None = None,
) -> PointSet:
    """Maximal Poisson-disk sample: pairwise distances are at least ``min_dist``.

    Bridson sampling (``scipy.stats.qmc.PoissonDisk``) on the bounding cube is followed by a
    gap-filling pass over a probe grid so that every probe ends up closer
    than ``min_dist`` to the set.
    """
    if not min_dist > 0:
        raise ValueError("min_dist must be positive")
    domain = domain or DomainSpec.unit_cube(d)
    if domain.d != d:
        raise ValueError("domain dimension mismatch")
    rng = np.random.default_rng(seed)
    lo, hi = domain.bbox
    # sample the unit cube and scale isotropically: the engine's own bounds
    # option does not preserve the radius in the scaled coordinates
    side = float(np.max(hi - lo))
    engine = qmc.PoissonDisk(d, radius=min_dist / side, rng=rng)
    pts = lo + side * engine.fill_space()
    pts = pts[domain.contains(pts, tol=0.0)]

    probes = domain.probe_grid(fill_resolution or min_dist / 4)
    if len(pts):
        gap, _ = cKDTree(pts).query(probes, workers=-1)
        cand = probes[gap >= min_dist]
    else:
        cand = probes
    cand = cand[rng.permutation(len(cand))]
    added: list[np.ndarray] = []
    for x in cand:
        if added and np.min(np.linalg.norm(np.asarray(added) - x, axis=1)) < min_dist:
            continue
        added.append(x)
    if added:
        pts = np.vstack([pts, added]) if len(pts) else np.asarray(added)
    return PointSet(pts, label=f"poisson-d{d}-r{min_dist:g}-s{seed}")


# -- measurements --------------------------------------------------------------


def separation_radius(ps: PointSet) -> float:
    """Half the minimum pairwise distance (exact, via nearest-neighbour queries)."""
    pts = _as_points(ps)
    if len(pts) < 2:
        raise ValueError("separation radius needs at least two points")
    dist, _ = cKDTree(pts).query(pts, k=2)
    return 0.5 * float(dist[:, 1].min())


def _closest_pair_midpoint(pts: np.ndarray) -> np.ndarray:
    dist, idx = cKDTree(pts).query(pts, k=2)
    i = int(np.argmin(dist[:, 1]))
    return 0.5 * (pts[i] + pts[idx[i, 1]])


def fill_distance(
    ps: PointSet,
    domain: DomainSpec,
    probe_resolution: float,
    interior_margin: float = 0.0,
) -> float:
    """Largest probe-to-nearest-site distance over a grid covering the domain.

    This is a lower bound of the true fill distance, short of it by at most
    ``probe_resolution * sqrt(d)``. With ``interior_margin > 0`` only probes
    at least that far inside the domain are used.
    """
    pts = _as_points(ps)
    if domain.d != pts.shape[1]:
        raise ValueError("domain dimension mismatch")
    region = domain.shrink(interior_margin)
    probes = region.probe_grid(probe_resolution)
    if len(pts) > 1 and interior_margin <= 0:
        probes = np.vstack([probes, _closest_pair_midpoint(pts)])
    dist, _ = cKDTree(pts).query(probes, workers=-1)
    return float(dist.max())


def uniformity_report(
    ps: PointSet,
    domain: DomainSpec,
    probe_resolution: float | None = None,
    interior_margin: float = 0.0,
) -> UniformityReport:
    """Measure ``q`` and ``h``; default probe resolution is ``q / 4``."""
    q = separation_radius(ps)
    res = probe_resolution or q / 4
    h = fill_distance(ps, domain, res, interior_margin)
    return UniformityReport(ps.n, ps.n_index, ps.d, q, h, res)


def count_annuli(ps, center, thickness: float) -> AnnulusCountReport:
    """Exact occupancy of half-open shells ``k t <= |y - x| < (k+1) t``."""
    if not thickness > 0:
        raise ValueError("thickness must be positive")
    pts = _as_points(ps)
    center = np.asarray(center, dtype=float)
    dist = np.linalg.norm(pts - center, axis=1)
    k = np.floor(dist / thickness).astype(np.int64)
    return AnnulusCountReport(center, thickness, np.bincount(k))


def pigeonhole_bound(d: int, c: float, C: float, j: int) -> float:
    """Shell volume over the minimal ball-shell intersection, before simplification.

    Shell ``j`` has thickness ``C`` and the balls radius ``c / 2`` (units of
    ``n^(-1/d)``). This sits between the true count and :func:`bound_prop22`.
    """
    if not 0 < c <= 2 * C:
        raise ValueError(f"need 0 < c <= 2C, got c={c}, C={C}")
    shell = annulus_measure(AnnulusFamily(d, C), j)
    return shell / prop21_lower_bound(LensConfig(d, c / 2, j * C))


def verify_counting_bounds(
    ps: PointSet,
    domain: DomainSpec,
    report: UniformityReport,
    centers: Iterable[Sequence[float]],
) -> CountingVerification:
    """Check shell counts against both occupancy bounds around each centre.

    * thickness ``C_est n^(-1/d)`` (= measured ``h``) against
      ``K_d(c_est, C_est) [j^d - (j-1)^d]``;
    * thickness ``q`` against ``2d j^(d-1) exp((5d-3)/(4j-1))`` for the
      shells with inner radius ``j q``, ``j >= 1``.
    """
    d = ps.d
    c, C = report.c_est, report.C_est
    out = CountingVerification()
    for center in centers:
        center = [float(v) for v in center]

        rep = count_annuli(ps, center, report.h)
        js = np.arange(1, len(rep.counts) + 1)
        bounds = np.array([bound_prop22(d, c, C, int(j)) for j in js])
        rep.bound_prop22 = bounds
        bad = np.nonzero(rep.counts > bounds)[0]
        out.records.append({
            "kind": "prop22",
            "center": center,
            "thickness": report.h,
            "index": "j = k + 1 (outer radius j * thickness)",
            "counts": rep.counts.tolist(),
            "bounds": bounds.tolist(),
            "violations": [
                {"kind": "prop22", "center": center, "j": int(js[k]), "count": int(rep.counts[k]),
                 "bound": float(bounds[k])}
                for k in bad
            ],
        })

        rep = count_annuli(ps, center, report.q)
        bounds = np.array([math.inf] + [bound_cor23(d, k) for k in range(1, len(rep.counts))])
        rep.bound_cor23 = bounds
        bad = np.nonzero(rep.counts > bounds)[0]
        out.records.append({
            "kind": "cor23",
            "center": center,
            "thickness": report.q,
            "index": "j = k (inner radius j * thickness; k = 0 is the unbounded central ball)",
            "counts": rep.counts.tolist(),
            "bounds": [None] + bounds[1:].tolist(),
            "violations": [
                {"kind": "cor23", "center": center, "j": int(k), "count": int(rep.counts[k]),
                 "bound": float(bounds[k])}
                for k in bad
            ],
        })
    return out


# -- files ---------------------------------------------------------------------


def save_csv(ps: PointSet, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(ps.d)])
        for row in ps.points:
            w.writerow([repr(float(v)) for v in row])


def load_csv(path, label: str | None = None, n_index: int | None = None) -> PointSet:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    d = len(header)
    if header != [f"x{i + 1}" for i in range(d)]:
        raise ValueError(f"{path}: header must be x1,...,x{d}, got {','.join(header)}")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != d:
            raise ValueError(f"{path}:{lineno}: expected {d} columns, got {len(row)}")
        data.append([float(v) for v in row])
    return PointSet(np.asarray(data), label=label or Path(path).stem, n_index=n_index)
