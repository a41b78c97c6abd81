"""Test functions with exact moduli of continuity, sup-error probing and
convergence studies."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from ..constants import constant_C_alpha_d, constant_K_d
from ..pointset import DomainSpec, PointSet, gen_grid, gen_hexagonal, gen_poisson_disk, hex_aligned_box
from .estimator import ScaledShepardRegressor
from .kernels import KernelSpec

__all__ = [
    "TestFunction",
    "constant_function",
    "affine_function",
    "distance_function",
    "sine_sum_function",
    "distance_to_set_function",
    "catalog",
    "modulus_of_continuity",
    "empirical_modulus",
    "probe_points",
    "sup_error",
    "operator_norm_bound",
    "kernel_sum_checks",
    "grid_family",
    "hexagonal_family",
    "poisson_family",
    "convergence_study",
    "StudyRecord",
]


@dataclass(frozen=True)
class TestFunction:
    """A function on a convex domain with its exact modulus of continuity.

    ``omega(t)`` is exact for ``0 <= t <= omega_exact_up_to``; beyond that
    range it raises rather than return a value that is only a bound.
    """

    __test__ = False  # not a pytest class

    name: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    lipschitz: float
    omega_fn: Callable[[float], float] = field(repr=False)
    omega_exact_up_to: float = math.inf

    def __call__(self, X) -> np.ndarray:
        return self.func(np.atleast_2d(np.asarray(X, dtype=float)))

    def omega(self, t: float) -> float:
        if t < 0:
            raise ValueError("t must be non-negative")
        if t > self.omega_exact_up_to:
            raise ValueError(f"{self.name}: exact modulus only known for t <= {self.omega_exact_up_to:g}")
        return self.omega_fn(t)


def _center(domain: DomainSpec) -> np.ndarray:
    lo, hi = domain.bbox
    return 0.5 * (lo + hi)


def constant_function(value: float = 7.0) -> TestFunction:
    return TestFunction(f"const({value:g})", lambda X: np.full(len(X), float(value)), 0.0, lambda t: 0.0)


def affine_function(domain: DomainSpec, gradient: Sequence[float], offset: float = 0.0) -> TestFunction:
    """``g . x + b``; ``omega(t) = max{g . v : v in (X - X), |v| <= t}``."""
    g = np.asarray(gradient, dtype=float)
    gn = float(np.linalg.norm(g))
    if domain.kind == "ball":
        omega = lambda t: gn * min(t, 2 * domain.radius)
    else:
        lo, hi = domain.bbox
        width = hi - lo
        ag = np.abs(g)

        def omega(t):
            # maximise ag . v over the box [0, width] cut by |v| <= t (water-filling)
            if gn == 0 or t == 0:
                return 0.0
            if np.linalg.norm(np.where(ag > 0, width, 0.0)) <= t:
                return float(ag @ width)
            lo_l, hi_l = 0.0, t / gn
            while np.linalg.norm(np.minimum(width, hi_l * ag)) < t:
                hi_l *= 2
            for _ in range(200):
                mid = 0.5 * (lo_l + hi_l)
                if np.linalg.norm(np.minimum(width, mid * ag)) < t:
                    lo_l = mid
                else:
                    hi_l = mid
            return float(ag @ np.minimum(width, hi_l * ag))

    return TestFunction("affine", lambda X: X @ g + offset, gn, omega)


def distance_function(domain: DomainSpec, x0: Sequence[float] | None = None) -> TestFunction:
    """``|x - x0|``; ``omega(t) = min(t, max_{x in X} |x - x0|)``."""
    x0 = _center(domain) if x0 is None else np.asarray(x0, dtype=float)
    if domain.kind == "box":
        lo, hi = domain.bbox
        reach = float(np.linalg.norm(np.maximum(np.abs(lo - x0), np.abs(hi - x0))))
    else:
        reach = float(np.linalg.norm(x0 - np.asarray(domain.center))) + domain.radius
    return TestFunction(
        "distance",
        lambda X: np.linalg.norm(X - x0, axis=1),
        1.0,
        lambda t: min(t, reach),
    )


def sine_sum_function(domain: DomainSpec, frequency: float = 2 * math.pi) -> TestFunction:
    """``sum_i sin(a (x_i - m_i))`` with ``m`` the domain centre.

    The steepest increments straddle ``m`` symmetrically along the diagonal:
    ``omega(t) = 2 d sin(a t / (2 sqrt(d)))`` while that cube fits in the
    domain and ``a t / sqrt(d) <= pi``.
    """
    m = _center(domain)
    d = domain.d
    a = float(frequency)
    if domain.kind == "box":
        lo, hi = domain.bbox
        half = float(np.min(hi - m))
        fit = 2 * half * math.sqrt(d)
    else:
        fit = 2 * domain.radius
    limit = min(fit, math.pi * math.sqrt(d) / a)
    return TestFunction(
        "sine_sum",
        lambda X: np.sum(np.sin(a * (X - m)), axis=1),
        a * math.sqrt(d),
        lambda t: 2 * d * math.sin(a * t / (2 * math.sqrt(d))),
        omega_exact_up_to=limit,
    )


def distance_to_set_function(domain: DomainSpec, scale: float = 2.0) -> TestFunction:
    """``scale * dist(x, S)`` for two sites ``S`` placed along the domain's first axis.

    Moving straight away from the other site keeps a site nearest, so
    ``omega(t) = scale * t`` up to the exit distance along that ray.
    """
    lo, hi = domain.bbox
    m = _center(domain)
    w = (hi[0] - lo[0]) if domain.kind == "box" else 2 * domain.radius
    e = np.zeros(domain.d)
    e[0] = 1.0
    sites = np.stack([m - 0.25 * w * e, m + 0.25 * w * e])
    exit_dist = 0.25 * w

    def f(X):
        return scale * np.min(np.linalg.norm(X[:, None, :] - sites[None], axis=2), axis=1)

    return TestFunction("dist_to_set", f, scale, lambda t: scale * t, omega_exact_up_to=exit_dist)


def catalog(domain: DomainSpec, include_constant: bool = True) -> list[TestFunction]:
    d = domain.d
    fns = [
        affine_function(domain, np.linspace(1.0, 0.5, d), 0.3),
        distance_function(domain),
        sine_sum_function(domain),
        distance_to_set_function(domain),
    ]
    return ([constant_function()] if include_constant else []) + fns


def modulus_of_continuity(f: TestFunction, t: float) -> float:
    """Exact ``omega(f, t)`` from the catalog."""
    return f.omega(t)


def empirical_modulus(
    f: Callable[[np.ndarray], np.ndarray],
    t: float,
    domain: DomainSpec,
    samples: int = 20_000,
    seed: int = 0,
) -> float:
    """Sampled lower bound on ``omega(f, t)`` (never an upper bound)."""
    rng = np.random.default_rng(seed)
    x = domain.sample(rng, samples)
    v = rng.standard_normal(x.shape)
    v *= (t * rng.random(samples) ** (1 / domain.d) / np.linalg.norm(v, axis=1))[:, None]
    y = x + v
    ok = domain.contains(y, tol=0.0)
    if not np.any(ok):
        return 0.0
    return float(np.max(np.abs(f(y[ok]) - f(x[ok]))))


def probe_points(domain: DomainSpec, probes: int) -> np.ndarray:
    """About ``probes`` grid points covering the domain (odd count per axis)."""
    d = domain.d
    m = max(3, int(math.ceil(probes ** (1 / d))))
    m += 1 - m % 2
    lo, hi = domain.bbox
    axes = [np.linspace(a, b, m) for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    return grid[domain.contains(grid)]


def sup_error(model: ScaledShepardRegressor, f: Callable, probes: int | np.ndarray = 10_000) -> float:
    """``max |F(x) - f(x)|`` over a probe grid (or the given probe array)."""
    X = probe_points(model.domain_, probes) if np.isscalar(probes) else np.asarray(probes)
    return float(np.max(np.abs(model.predict(X) - f(X))))


def operator_norm_bound(model: ScaledShepardRegressor) -> float:
    """``kappa K_d(c, C) max(C_alpha_d closed form, tight)`` for a fitted model."""
    rep = model.report_
    k = model.kernel_
    K_d = constant_K_d(rep.d, rep.c_est, model.C_used_)
    return k.kappa * K_d * constant_C_alpha_d(k.alpha, rep.d).upper


@dataclass
class KernelSumCheck:
    min_sum: float
    max_sum: float
    m1: float
    upper: float
    argmin: np.ndarray
    argmax: np.ndarray

    @property
    def lower_ok(self) -> bool:
        return self.min_sum >= self.m1

    @property
    def upper_ok(self) -> bool:
        return self.max_sum <= self.upper


def kernel_sum_checks(model: ScaledShepardRegressor, probes: int | np.ndarray = 10_000) -> KernelSumCheck:
    """Lower (``S >= m1``) and upper (operator norm) checks of ``S`` at probe points."""
    X = probe_points(model.domain_, probes) if np.isscalar(probes) else np.asarray(probes)
    S = model.scaled_sum(X)
    return KernelSumCheck(
        float(S.min()), float(S.max()), model.kernel_.m1, operator_norm_bound(model),
        X[int(np.argmin(S))], X[int(np.argmax(S))],
    )


# -- families --------------------------------------------------------------------

Family = Callable[[int], tuple[PointSet, DomainSpec]]


def grid_family(d: int) -> Family:
    def make(n: int):
        m = round(n ** (1 / d))
        if m**d != n:
            raise ValueError(f"grid family needs a perfect {d}-th power, got n={n}")
        dom = DomainSpec.unit_cube(d)
        return gen_grid(d, m, dom), dom

    return make


def hexagonal_family() -> Family:
    def make(n: int):
        dom = hex_aligned_box(n)
        return gen_hexagonal(n, dom), dom

    return make


def poisson_family(d: int, seed: int = 0) -> Family:
    """Maximal Poisson-disk sets with ``min_dist = n^(-1/d)`` on the unit cube.

    The point count is only proportional to ``n``; ``n`` itself is kept as
    the sequence index so that ``n^(-1/d)`` is the family's mesh scale.
    """

    def make(n: int):
        dom = DomainSpec.unit_cube(d)
        ps = gen_poisson_disk(d, n ** (-1 / d), dom, seed=seed)
        return PointSet(ps.points, ps.label, n_index=n), dom

    return make


ZERO_ERROR = 1e-13  # below this the error is rounding noise

STUDY_COLUMNS = ["n", "q", "h", "beta_n", "sup_error", "bound_paper", "bound_tight", "ratio"]


@dataclass
class StudyRecord:
    rows: list[dict]
    slope: float | None
    intercept: float | None

    @property
    def slope_defined(self) -> bool:
        return self.slope is not None

    @property
    def all_within_bound(self) -> bool:
        return all(r["sup_error"] <= max(r["bound_paper"], r["bound_tight"]) for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=STUDY_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: (repr(r[k]) if isinstance(r[k], float) else r[k]) for k in STUDY_COLUMNS})
        return buf.getvalue()


def convergence_study(
    family: Family,
    f: TestFunction | Callable[[DomainSpec], TestFunction],
    kernel: KernelSpec,
    n_list: Iterable[int],
    probes: int = 10_000,
) -> StudyRecord:
    """Fit one model per ``n`` and regress ``log sup_error`` on ``log n``.

    ``f`` may be a factory taking the family's domain. The slope is ``None``
    when any error vanishes (e.g. constant data), since the log-log fit is
    then undefined.
    """
    n_list = list(n_list)
    if len(n_list) < 4 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be increasing with at least 4 entries")
    rows = []
    for n in n_list:
        ps, dom = family(n)
        fn = f if isinstance(f, TestFunction) else f(dom)
        model = ScaledShepardRegressor(kernel=kernel, alpha=kernel.alpha, domain=dom, n_index=ps.n_index)
        model.fit(ps.points, fn(ps.points))
        budget = model.error_budget()
        om = fn.omega(budget.modulus_arg)
        err = sup_error(model, fn, probes)
        b_paper = budget.coefficient("paper") * om
        b_tight = budget.coefficient("tight") * om
        bound = max(b_paper, b_tight)
        rows.append({
            "n": n, "q": model.report_.q, "h": model.report_.h, "beta_n": model.beta_n_,
            "sup_error": err, "bound_paper": b_paper, "bound_tight": b_tight,
            "ratio": err / bound if bound > 0 else (0.0 if err <= ZERO_ERROR else math.inf),
        })
    errs = np.array([r["sup_error"] for r in rows])
    if np.all(errs > ZERO_ERROR):
        slope, intercept = np.polyfit(np.log(n_list), np.log(errs), 1)
        return StudyRecord(rows, float(slope), float(intercept))
    return StudyRecord(rows, None, None)
