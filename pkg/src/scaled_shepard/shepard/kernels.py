"""Radial base functions with certified decay constants.

A kernel is admissible with constants ``(kappa, alpha, m1)`` when it is
continuous and non-negative, at least ``m1 > 0`` on the closed unit ball, and
bounded by ``kappa * (1 + |x|^2)^(-alpha)`` everywhere. Certification
checks the last two conditions on a dense radial grid at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

__all__ = [
    "KernelSpec",
    "KernelCertificationError",
    "kernel_inverse_multiquadric",
    "kernel_gaussian",
    "make_kernel",
]

CERT_POINTS = 10_000
CERT_RADIUS = 100.0
CERT_RTOL = 1e-12


class KernelCertificationError(ValueError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    """Radial kernel ``K(x) = profile(|x|^2)`` with decay certificate."""

    name: str
    profile: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    kappa: float
    alpha: float
    m1: float
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (self.kappa > 0 and self.alpha > 0 and self.m1 > 0):
            raise KernelCertificationError("kappa, alpha and m1 must be positive")
        self.certify()

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.profile(np.sum(x * x, axis=-1))

    def radial(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.profile(r * r)

    def decay_bound(self, r: np.ndarray) -> np.ndarray:
        return self.kappa * (1.0 + np.asarray(r, dtype=float) ** 2) ** (-self.alpha)

    def certify(self, points: int = CERT_POINTS, radius: float = CERT_RADIUS) -> None:
        r = np.concatenate([np.linspace(0.0, 1.0, points // 10), np.linspace(0.0, radius, points)])
        k = self.radial(r)
        if not np.all(np.isfinite(k)) or np.any(k < 0):
            raise KernelCertificationError(f"{self.name}: kernel must be finite and non-negative")
        inner = k[r <= 1.0]
        if inner.min() < self.m1 * (1 - CERT_RTOL):
            raise KernelCertificationError(
                f"{self.name}: min over unit ball {inner.min()} below m1={self.m1}"
            )
        excess = k / self.decay_bound(r)
        if excess.max() > 1 + CERT_RTOL:
            i = int(np.argmax(excess))
            raise KernelCertificationError(
                f"{self.name}: decay bound fails at |x|={r[i]:g} (ratio {excess[i]:.6g})"
            )

    def to_dict(self) -> dict:
        return {"name": self.name, "alpha": self.alpha, **self.params}


def kernel_inverse_multiquadric(alpha: float) -> KernelSpec:
    """``(1 + |x|^2)^(-alpha)``: the decay bound holds with equality, ``kappa = 1``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return KernelSpec(
        "imq",
        lambda r2: (1.0 + r2) ** (-alpha),
        kappa=1.0,
        alpha=alpha,
        m1=2.0 ** (-alpha),
    )


def _gaussian_kappa(alpha: float) -> float:
    # sup_{t >= 0} (1 + t)^alpha e^(-t), t = |x|^2
    res = minimize_scalar(
        lambda t: -(alpha * math.log1p(t) - t),
        bounds=(0.0, max(10.0, 4 * alpha)),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return math.exp(max(-res.fun, 0.0))


def kernel_gaussian(alpha: float) -> KernelSpec:
    """``exp(-|x|^2)`` certified for decay exponent ``alpha``.

    ``kappa`` is found numerically and inflated by a relative ``1e-10`` so
    the certificate is not lost to optimiser tolerance.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    kappa = _gaussian_kappa(alpha) * (1 + 1e-10)
    return KernelSpec(
        "gaussian",
        lambda r2: np.exp(-r2),
        kappa=kappa,
        alpha=alpha,
        m1=math.exp(-1.0),
    )


_KERNELS = {
    "imq": kernel_inverse_multiquadric,
    "inverse_multiquadric": kernel_inverse_multiquadric,
    "gaussian": kernel_gaussian,
}


def make_kernel(kernel: str | KernelSpec, alpha: float) -> KernelSpec:
    if isinstance(kernel, KernelSpec):
        return kernel
    try:
        return _KERNELS[kernel](alpha)
    except KeyError:
        raise ValueError(f"unknown kernel {kernel!r}; choose from {sorted(_KERNELS)}") from None
