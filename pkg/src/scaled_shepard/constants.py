"""Explicit constants of the counting bound, the operator-norm bound and the
Jackson-type estimate.

Every series constant comes in two flavours: the closed form as published
(``paper_value``) and the exact value of the series it is meant to dominate
(``tight``). The tight series are summed exactly through the expansion
``(j+1)^d - j^d = sum_k binom(d, k) j^k``, which turns them into finite
combinations of Riemann zeta values.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from scipy.special import zeta

__all__ = [
    "ConstantPair",
    "constant_K_d",
    "constant_C_alpha_d",
    "constant_C_star",
    "bound_prop22",
    "bound_cor23",
]


class ConstantPair(NamedTuple):
    paper_value: float
    tight_value: float

    @property
    def upper(self) -> float:
        return max(self.paper_value, self.tight_value)


def constant_K_d(d: int, c: float, C: float) -> float:
    """Annulus counting constant ``2^((3d+3)/2) (C/c)^d``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if c <= 0 or C <= 0:
        raise ValueError("c and C must be positive")
    return 2.0 ** ((3 * d + 3) / 2) * (C / c) ** d


def constant_C_alpha_d(alpha: float, d: int) -> ConstantPair:
    """Operator-norm series constant, needs ``alpha > (d+1)/2``.

    tight: ``1 + sum_{j>=1} [(j+1)^d - j^d] j^(-2 alpha)``
    """
    if not alpha > (d + 1) / 2:
        raise ValueError(f"need alpha > (d+1)/2 = {(d + 1) / 2}, got alpha={alpha}")
    a2 = 2.0 * alpha
    closed = 1.0 + sum(math.comb(d, k) * (a2 - k + 2) / (a2 - k + 1) for k in range(1, d + 1))
    tight = 1.0 + sum(math.comb(d, k) * float(zeta(a2 - k)) for k in range(d))
    return ConstantPair(closed, tight)


def constant_C_star(alpha: float, d: int) -> ConstantPair:
    """Jackson-estimate series constant, needs ``alpha > (d+2)/2``.

    tight: ``1 + sum_{j>=1} [(j+1)^(d+1) - (j+1) j^d] j^(-2 alpha)``; the
    bracket equals ``(j+1) sum_{k<d} binom(d, k) j^k``.
    """
    if not alpha > (d + 2) / 2:
        raise ValueError(f"need alpha > (d+2)/2 = {(d + 2) / 2}, got alpha={alpha}")
    a2 = 2.0 * alpha
    closed = sum(math.comb(d + 1, k) * (a2 - k + 2) / (a2 - k + 1) for k in range(d + 1))
    closed -= 1.0 / (a2 - d + 1)
    tight = 1.0 + sum(
        math.comb(d, k) * (float(zeta(a2 - k - 1)) + float(zeta(a2 - k))) for k in range(d)
    )
    return ConstantPair(closed, tight)


def bound_prop22(d: int, c: float, C: float, j: int) -> float:
    """Upper bound ``K_d [j^d - (j-1)^d]`` on the points in shell ``j`` of thickness ``C n^(-1/d)``."""
    if not 0 < c <= 2 * C:
        raise ValueError(f"need 0 < c <= 2C, got c={c}, C={C}")
    if j < 1:
        raise ValueError("j must be >= 1")
    return constant_K_d(d, c, C) * (j**d - (j - 1) ** d)


def bound_cor23(d: int, j: int) -> float:
    """Upper bound ``2d j^(d-1) exp((5d-3)/(4j-1))`` for the shell ``[j delta, (j+1) delta)``."""
    if d < 1 or j < 1:
        raise ValueError("d and j must be >= 1")
    return 2.0 * d * j ** (d - 1) * math.exp((5 * d - 3) / (4 * j - 1))
