"""Special functions used by the lens-volume and counting-bound computations.

The Gauss hypergeometric function is available through two independent
routes: the power series (default) and Euler's integral evaluated with
Gauss-Jacobi quadrature. The second route exists to check the first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import roots_jacobi

__all__ = [
    "HypergeometricParams",
    "pochhammer",
    "gauss_2f1",
    "gauss_2f1_series",
    "gauss_2f1_euler",
    "log_gamma",
    "beta_fn",
    "ball_volume",
    "lens_hyp_params",
]


@dataclass(frozen=True)
class HypergeometricParams:
    """Arguments ``(a, b; c; z)`` of 2F1 restricted to real ``|z| < 1``."""

    a: float
    b: float
    c: float
    z: float

    def __post_init__(self):
        if not abs(self.z) < 1.0:
            raise ValueError(f"2F1 requires |z| < 1, got z={self.z}")

    @property
    def euler_admissible(self) -> bool:
        return self.c > self.b > 0


def lens_hyp_params(d: int, z: float) -> HypergeometricParams:
    """The parameter family ``(-(d-1)/2, (d+1)/2; (d+3)/2; z)`` of the lens formula."""
    return HypergeometricParams(-(d - 1) / 2.0, (d + 1) / 2.0, (d + 3) / 2.0, z)


def pochhammer(a: float, n: int) -> float:
    """Rising factorial ``a (a+1) ... (a+n-1)``; equals 1 for ``n == 0``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    out = 1.0
    for k in range(n):
        out *= a + k
    return out


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def gauss_2f1_series(p: HypergeometricParams, tol: float = 1e-14, max_terms: int = 100_000) -> float:
    """Sum the hypergeometric power series.

    The sum is exact (finite) when ``a`` or ``b`` is a non-positive integer.
    Otherwise summation stops once a geometric bound on the remaining tail,
    built from the ratio of consecutive terms, drops below ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if _is_nonpositive_integer(p.c):
        raise ValueError(f"c must not be a non-positive integer, got c={p.c}")
    a, b, c, z = p.a, p.b, p.c, p.z

    term = 1.0
    total = 1.0
    for n in range(max_terms):
        ratio = (a + n) * (b + n) / ((n + 1) * (c + n)) * z
        term *= ratio
        if term == 0.0:
            # (a)_n or (b)_n hit zero: the series is a polynomial.
            return total
        total += term
        # Bound on |ratio| for all later terms; the term ratio tends to z.
        rho = max(abs((a + n + 1) * (b + n + 1) / ((n + 2) * (c + n + 1)) * z), abs(z))
        if rho < 1.0 and abs(term) * rho / (1.0 - rho) < tol:
            return total
    raise RuntimeError(f"2F1 series did not converge in {max_terms} terms for {p}")


def series_term_count(p: HypergeometricParams) -> int | None:
    """Number of nonzero terms of a terminating series, or ``None`` if infinite."""
    for x in (p.a, p.b):
        if _is_nonpositive_integer(x):
            return int(-x) + 1
    return None


def gauss_2f1_euler(p: HypergeometricParams, quad_points: int = 64, tol: float = 1e-11) -> float:
    """Evaluate 2F1 from Euler's integral representation.

    ``Gamma(c) / (Gamma(b) Gamma(c-b)) * int_0^1 x^(b-1) (1-x)^(c-b-1) (1-zx)^(-a) dx``

    The endpoint powers are absorbed into a Gauss-Jacobi rule, leaving the
    analytic factor ``(1 - z x)^(-a)`` for the nodes. If the rule with
    ``quad_points`` nodes disagrees with the doubled rule by more than
    ``tol`` the integral is recomputed adaptively (QUADPACK QAWS).
    """
    if not p.euler_admissible:
        raise ValueError(f"Euler integral needs c > b > 0, got b={p.b}, c={p.c}")
    if quad_points < 1:
        raise ValueError("quad_points must be positive")
    a, b, c, z = p.a, p.b, p.c, p.z

    def jacobi(m: int) -> float:
        # weight (1-t)^(c-b-1) (1+t)^(b-1) on [-1, 1]; x = (1+t)/2
        t, w = roots_jacobi(m, c - b - 1.0, b - 1.0)
        x = 0.5 * (1.0 + t)
        return float(np.sum(w * (1.0 - z * x) ** (-a))) * 0.5 ** (c - 1.0)

    integral = jacobi(quad_points)
    if abs(jacobi(2 * quad_points) - integral) > tol * max(1.0, abs(integral)):
        integral, _ = integrate.quad(
            lambda x: (1.0 - z * x) ** (-a),
            0.0,
            1.0,
            weight="alg",
            wvar=(b - 1.0, c - b - 1.0),
            epsabs=0.0,
            epsrel=1e-13,
            limit=200,
        )
    return integral / beta_fn(b, c - b)


def gauss_2f1(a: float, b: float, c: float, z: float) -> float:
    """2F1 by the default (series) route."""
    return gauss_2f1_series(HypergeometricParams(a, b, c, z))


def log_gamma(x: float) -> float:
    if x <= 0:
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def beta_fn(x: float, y: float) -> float:
    """Beta function ``Gamma(x) Gamma(y) / Gamma(x + y)`` for positive arguments."""
    if x <= 0 or y <= 0:
        raise ValueError(f"beta_fn requires positive arguments, got ({x}, {y})")
    return math.exp(math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y))


def ball_volume(d: int, t: float) -> float:
    """Lebesgue measure of a ``d``-ball of radius ``t``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if t < 0:
        raise ValueError("radius must be non-negative")
    if t == 0:
        return 0.0
    if d <= 100:
        return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * t**d
    return math.exp(d / 2 * math.log(math.pi) - math.lgamma(d / 2 + 1) + d * math.log(t))
