"""Scaled Shepard quasi-interpolation with explicit Jackson-type error constants.

Subpackages and modules:

* :mod:`.specfun` -- Gamma/Beta, Pochhammer, ball volume, Gauss 2F1.
* :mod:`.geometry` -- ball-ball lens volumes, annulus measures, oracles.
* :mod:`.pointset` -- point families, separation/fill distance, shell counts.
* :mod:`.constants` -- the explicit constants ``K_d``, ``C_alpha_d``, ``C*``.
* :mod:`.shepard` -- kernels, :class:`ScaledShepardRegressor`, error analysis.
"""

from .pointset import DomainSpec, PointSet, uniformity_report
from .shepard import ScaledShepardRegressor, kernel_gaussian, kernel_inverse_multiquadric

__version__ = "0.1.0"

__all__ = [
    "DomainSpec",
    "PointSet",
    "ScaledShepardRegressor",
    "kernel_gaussian",
    "kernel_inverse_multiquadric",
    "uniformity_report",
]
