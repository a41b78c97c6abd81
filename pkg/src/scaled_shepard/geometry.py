"""Ball-ball intersection volumes and annulus measures.

Canonical configuration: the small ball of radius ``r`` sits at the origin
and the large ball of radius ``R`` is centred at ``(R, 0, ..., 0)``, so the
small ball's centre lies on the large ball's boundary. Slicing along the
first axis splits the intersection at ``x_tilde = r**2 / (2 R)`` into a cap
of the large ball (``I``) and a cap of the small ball (``II``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .specfun import ball_volume, gauss_2f1_series, lens_hyp_params

__all__ = [
    "LensConfig",
    "AnnulusFamily",
    "lens_II",
    "lens_I_upper",
    "lens_quadrature",
    "lens_monte_carlo",
    "prop21_lower_bound",
    "annulus_measure",
    "min_intersection_volume",
    "annulus_ball_intersection_mc",
    "sample_ball",
]


@dataclass(frozen=True)
class LensConfig:
    d: int
    r: float
    R: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not (self.r > 0 and self.R > 0):
            raise ValueError("radii must be positive")
        if self.r > 2 * self.R:
            raise ValueError(f"need r <= 2R, got r={self.r}, R={self.R}")

    @property
    def x_tilde(self) -> float:
        return self.r**2 / (2 * self.R)

    @property
    def half_angle_sin2(self) -> float:
        """``sin^2(A/2)`` with ``A = arccos(r / 2R)``."""
        return 0.5 * (1.0 - self.r / (2 * self.R))

    @property
    def angle(self) -> float:
        return math.acos(self.r / (2 * self.R))


@dataclass(frozen=True)
class AnnulusFamily:
    """Concentric shells of equal thickness; shell ``j`` spans ``[(j-1)t, jt)``."""

    d: int
    thickness: float
    center: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not self.thickness > 0:
            raise ValueError("thickness must be positive")
        if self.center is not None and len(self.center) != self.d:
            raise ValueError("center dimension mismatch")

    def radii(self, j: int) -> tuple[float, float]:
        return (j - 1) * self.thickness, j * self.thickness


def _section_coef(d: int) -> float:
    # V_{d-1}(rho) = coef * rho^(d-1)
    return math.pi ** ((d - 1) / 2) / math.gamma((d + 1) / 2)


def lens_II(cfg: LensConfig) -> float:
    """Closed form of the small-ball cap ``II_d(r, R)`` through 2F1."""
    d, r = cfg.d, cfg.r
    z = cfg.half_angle_sin2
    prefactor = 2.0 ** (d + 1) * r**d * _section_coef(d) / (d + 1)
    return z ** ((d + 1) / 2) * prefactor * gauss_2f1_series(lens_hyp_params(d, z))


def prop21_lower_bound(cfg: LensConfig) -> float:
    """Lower bound on the intersection volume: the ``II`` cap alone."""
    return lens_II(cfg)


def lens_I_upper(cfg: LensConfig) -> float:
    """Crude upper bound on the large-ball cap ``I_d(r, R)``."""
    d, r, R = cfg.d, cfg.r, cfg.R
    return _section_coef(d) * r ** (d + 1) / ((d + 1) * R)


def lens_quadrature(cfg: LensConfig) -> tuple[float, float]:
    """Both slice integrals ``(I, II)`` by adaptive quadrature.

    The square-root endpoint behaviour of the slice radii is handled by
    QUADPACK's algebraic weight, so the integrands passed in are smooth.
    """
    d, r, R = cfg.d, cfg.r, cfg.R
    xt = cfg.x_tilde
    e = (d - 1) / 2
    coef = _section_coef(d)
    tol = 1e-12 * r**d

    # (2Rx - x^2)^e = x^e (2R - x)^e on [0, x_tilde]
    if xt > 0:
        part_I, _ = integrate.quad(
            lambda x: (2 * R - x) ** e, 0.0, xt, weight="alg", wvar=(e, 0.0),
            epsabs=tol, epsrel=1e-13, limit=200,
        )
    else:
        part_I = 0.0
    # (r^2 - x^2)^e = (r + x)^e (r - x)^e on [x_tilde, r]
    if xt < r:
        part_II, _ = integrate.quad(
            lambda x: (r + x) ** e, xt, r, weight="alg", wvar=(0.0, e),
            epsabs=tol, epsrel=1e-13, limit=200,
        )
    else:
        part_II = 0.0
    return coef * part_I, coef * part_II


def sample_ball(rng: np.random.Generator, d: int, radius: float, size: int) -> np.ndarray:
    """Uniform samples in the centred ball: Gaussian direction times ``U^(1/d)``."""
    g = rng.standard_normal((size, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = radius * rng.random(size) ** (1.0 / d)
    return g * rad[:, None]


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def lens_monte_carlo(cfg: LensConfig, samples: int, seed: int = 0, chunk: int = 250_000) -> tuple[float, float]:
    """Monte Carlo estimate of the intersection volume and its standard error."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = _rng(seed)
    d, r, R = cfg.d, cfg.r, cfg.R
    centre = np.zeros(d)
    centre[0] = R
    hits = 0
    left = samples
    while left:
        m = min(chunk, left)
        pts = sample_ball(rng, d, r, m)
        hits += int(np.count_nonzero(np.sum((pts - centre) ** 2, axis=1) <= R * R))
        left -= m
    vol = ball_volume(d, r)
    frac = hits / samples
    return frac * vol, vol * math.sqrt(frac * (1 - frac) / samples)


def annulus_measure(fam: AnnulusFamily, j: int) -> float:
    if j < 1:
        raise ValueError("j must be >= 1")
    d, t = fam.d, fam.thickness
    return ball_volume(d, t) * (j**d - (j - 1) ** d)


def min_intersection_volume(fam: AnnulusFamily, j: int, rho: float) -> float:
    """Lower bound on ``|A_j  intersect  B(q, rho)|`` over centres ``q`` in shell ``j``.

    Uses the reduction to a ball centred on the outer boundary, where the
    intersection is at least the small-ball cap of the lens with ``R = j t``.
    """
    if j < 1:
        raise ValueError("j must be >= 1")
    R = j * fam.thickness
    if not 0 < rho <= 2 * R:
        raise ValueError(f"rho must lie in (0, 2*j*thickness], got {rho}")
    return prop21_lower_bound(LensConfig(fam.d, rho, R))


def annulus_ball_intersection_mc(
    fam: AnnulusFamily,
    j: int,
    center_radius: float,
    rho: float,
    samples: int,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte Carlo volume of shell ``j`` intersected with ``B(q, rho)``, ``|q| = center_radius``.

    By rotation invariance only the distance of ``q`` from the shell centre
    matters; ``q`` is placed on the first axis.
    """
    rng = _rng(seed)
    lo, hi = fam.radii(j)
    pts = sample_ball(rng, fam.d, rho, samples)
    pts[:, 0] += center_radius
    dist = np.linalg.norm(pts, axis=1)
    frac = np.count_nonzero((dist >= lo) & (dist < hi)) / samples
    vol = ball_volume(fam.d, rho)
    return frac * vol, vol * math.sqrt(frac * (1 - frac) / samples)

