"""Scaled Shepard quasi-interpolation as a scikit-learn regressor."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..constants import ConstantPair, constant_C_alpha_d, constant_C_star, constant_K_d
from ..pointset import DomainSpec, PointSet, UniformityReport, load_csv, save_csv, uniformity_report
from .kernels import KernelSpec, make_kernel

__all__ = ["ScaledShepardRegressor", "ErrorBudget", "error_budget"]


@dataclass(frozen=True)
class ErrorBudget:
    """Explicit constants of the Jackson-type estimate for one fitted model.

    ``coefficient(which)`` is ``kappa / m1 * (C + 1) * K_d * C_star``; the
    bound on the sup error is ``coefficient * omega(f, n^(-1/d))``.
    """

    d: int
    alpha: float
    c: float
    C: float
    kappa: float
    m1: float
    K_d: float
    C_alpha_d: ConstantPair | None
    C_star_alpha_d: ConstantPair
    modulus_arg: float

    def coefficient(self, which: str = "upper") -> float:
        cstar = {
            "paper": self.C_star_alpha_d.paper_value,
            "tight": self.C_star_alpha_d.tight_value,
            "upper": self.C_star_alpha_d.upper,
        }[which]
        return self.kappa / self.m1 * (self.C + 1.0) * self.K_d * cstar

    @property
    def bound_coefficient(self) -> float:
        return self.coefficient("upper")

    @property
    def operator_norm_bound(self) -> float:
        """``kappa * K_d * C_alpha_d`` with the larger of the two series constants."""
        if self.C_alpha_d is None:
            return math.inf
        return self.kappa * self.K_d * self.C_alpha_d.upper

    def to_dict(self) -> dict:
        return {
            "d": self.d, "alpha": self.alpha, "c": self.c, "C": self.C,
            "kappa": self.kappa, "m1": self.m1, "K_d": self.K_d,
            "C_alpha_d_paper": self.C_alpha_d.paper_value if self.C_alpha_d else None,
            "C_alpha_d_tight": self.C_alpha_d.tight_value if self.C_alpha_d else None,
            "C_star_paper": self.C_star_alpha_d.paper_value,
            "C_star_tight": self.C_star_alpha_d.tight_value,
            "coefficient_paper": self.coefficient("paper"),
            "coefficient_tight": self.coefficient("tight"),
            "modulus_arg": self.modulus_arg,
        }


class ScaledShepardRegressor(RegressorMixin, BaseEstimator):
    """Shepard quasi-interpolant with a dilation tied to the fill distance.

    ``F(x) = sum_y f(y) K(beta (x - y)) / sum_y K(beta (x - y))`` with
    ``beta = n^(1/d) / C``. By default ``C = h n^(1/d)``, i.e. ``beta = 1/h``
    with ``h`` the measured fill distance, which keeps a data site within
    scaled distance 1 of every domain point.

    The kernel is bounded at the origin, so unlike the classical singular
    Shepard weights ``|x|^(-lambda)`` the approximant does not interpolate.

    Parameters
    ----------
    kernel : {"imq", "gaussian"} or KernelSpec
    alpha : float
        Decay exponent certified for the kernel.
    C : float, optional
        Fill constant used in the dilation. Must satisfy ``C >= h n^(1/d)``.
    domain : DomainSpec, optional
        Convex approximation domain; defaults to the bounding box of ``X``.
    probe_resolution : float, optional
        Probe spacing for the fill-distance measurement (default ``q / 4``).
    n_index : int, optional
        Sequence index ``n`` used in ``n^(1/d)``; defaults to ``len(X)``.
    cutoff : float, optional
        If set, ignore sites with ``|beta (x - y)| > cutoff``. The neglected
        mass per site is at most ``kappa (1 + cutoff^2)^(-alpha)``.
    chunk_size : int
        Evaluation points processed per dense block.
    """

    def __init__(
        self,
        kernel="imq",
        alpha=3.0,
        C=None,
        domain=None,
        probe_resolution=None,
        n_index=None,
        cutoff=None,
        chunk_size=1024,
    ):
        self.kernel = kernel
        self.alpha = alpha
        self.C = C
        self.domain = domain
        self.probe_resolution = probe_resolution
        self.n_index = n_index
        self.cutoff = cutoff
        self.chunk_size = chunk_size

    def fit(self, X, y, report: UniformityReport | None = None):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        n, d = X.shape
        self.kernel_ = make_kernel(self.kernel, self.alpha)
        self.points_ = PointSet(X, n_index=self.n_index)
        self.values_ = y.copy()
        if self.domain is None:
            self.domain_ = DomainSpec.box(X.min(axis=0), X.max(axis=0)) if n > 1 and np.all(np.ptp(X, axis=0) > 0) else None
        else:
            self.domain_ = self.domain
        if self.domain_ is not None and not np.all(self.domain_.contains(X)):
            raise ValueError("all data sites must lie in the domain")

        if report is not None:
            self.report_ = report
        elif n > 1 and self.domain_ is not None:
            self.report_ = uniformity_report(self.points_, self.domain_, self.probe_resolution)
        else:
            self.report_ = None

        n_root = self.points_.n_index ** (1.0 / d)
        if self.C is not None:
            self.C_used_ = float(self.C)
        elif self.report_ is not None:
            self.C_used_ = self.report_.C_est
        else:
            raise ValueError("cannot infer C from a degenerate point set; pass C explicitly")
        if not self.C_used_ > 0:
            raise ValueError("C must be positive")
        self.beta_n_ = n_root / self.C_used_
        if self.report_ is not None and self.beta_n_ * self.report_.h > 1 + 1e-12:
            raise ValueError(
                f"beta_n * h = {self.beta_n_ * self.report_.h:.6g} > 1; C must be at least h n^(1/d)"
            )
        self._tree = cKDTree(X) if self.cutoff is not None else None
        self.n_features_in_ = d
        return self

    # -- evaluation ------------------------------------------------------------

    def _check_X(self, X, check_domain=True):
        check_is_fitted(self, "beta_n_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        if check_domain and self.domain_ is not None:
            outside = ~self.domain_.contains(X, tol=1e-9)
            if np.any(outside):
                raise ValueError(f"{int(outside.sum())} evaluation points lie outside the domain")
        return X

    def _kernel_block(self, Xc: np.ndarray) -> np.ndarray:
        diff = Xc[:, None, :] - self.points_.points[None, :, :]
        diff *= self.beta_n_
        K = self.kernel_(diff)
        if self.cutoff is not None:
            K[np.sum(diff * diff, axis=-1) > self.cutoff**2] = 0.0
        return K

    def _sums(self, X):
        """Per point: ``(sum_y K, sum_y f(y) K)``."""
        num = np.empty(len(X))
        den = np.empty(len(X))
        for s in range(0, len(X), self.chunk_size):
            Xc = X[s : s + self.chunk_size]
            if self._tree is not None:
                den[s : s + len(Xc)], num[s : s + len(Xc)] = self._sparse_sums(Xc)
                continue
            K = self._kernel_block(Xc)
            den[s : s + len(Xc)] = K.sum(axis=1)
            num[s : s + len(Xc)] = K @ self.values_
        return den, num

    def _sparse_sums(self, Xc):
        radius = self.cutoff / self.beta_n_
        D = cKDTree(Xc).sparse_distance_matrix(self._tree, radius, output_type="coo_matrix")
        w = self.kernel_.radial(self.beta_n_ * D.data)
        den = np.bincount(D.row, weights=w, minlength=len(Xc))
        num = np.bincount(D.row, weights=w * self.values_[D.col], minlength=len(Xc))
        # sites at exactly zero distance are dropped by sparse storage
        zero, idx = self._tree.query(Xc, distance_upper_bound=0.0)
        hit = np.isfinite(zero)
        k0 = float(self.kernel_.radial(0.0))
        den[hit] += k0
        num[hit] += k0 * self.values_[idx[hit]]
        return den, num

    def scaled_sum(self, X, check_domain=True) -> np.ndarray:
        """``S(x) = sum_y K(beta (x - y))``."""
        X = self._check_X(X, check_domain)
        return self._sums(X)[0]

    def predict(self, X, check_domain=True) -> np.ndarray:
        X = self._check_X(X, check_domain)
        den, num = self._sums(X)
        return num / den

    def weights(self, X, check_domain=True) -> np.ndarray:
        """Dense ``(len(X), n)`` matrix of normalised weights (rows sum to 1)."""
        X = self._check_X(X, check_domain)
        K = self._kernel_block(X)
        return K / K.sum(axis=1, keepdims=True)

    def truncation_error_bound(self) -> float:
        """Worst-case additive error of ``S`` caused by the cutoff option."""
        check_is_fitted(self, "beta_n_")
        if self.cutoff is None:
            return 0.0
        k = self.kernel_
        return self.points_.n * k.kappa * (1 + self.cutoff**2) ** (-k.alpha)

    # -- constants -------------------------------------------------------------

    def error_budget(self) -> ErrorBudget:
        check_is_fitted(self, "beta_n_")
        return error_budget(self, self.report_)

    # -- persistence -----------------------------------------------------------

    def to_json(self, path, points_csv=None) -> None:
        """Write the model as JSON, with sites and samples in a CSV next to it."""
        check_is_fitted(self, "beta_n_")
        path = Path(path)
        points_csv = Path(points_csv) if points_csv else path.with_suffix(".points.csv")
        save_csv(self.points_, points_csv)
        data = {
            "points_csv": str(points_csv.name if points_csv.parent == path.parent else points_csv),
            "values": self.values_.tolist(),
            "n_index": self.points_.n_index,
            "kernel": self.kernel_.to_dict(),
            "beta_n": self.beta_n_,
            "C_used": self.C_used_,
            "domain": self.domain_.to_dict() if self.domain_ is not None else None,
            "report": self.report_.to_dict() if self.report_ is not None else None,
        }
        path.write_text(json.dumps(data, indent=2))

    @classmethod
    def from_json(cls, path) -> "ScaledShepardRegressor":
        path = Path(path)
        data = json.loads(path.read_text())
        csv_path = Path(data["points_csv"])
        if not csv_path.is_absolute():
            csv_path = path.parent / csv_path
        ps = load_csv(csv_path, n_index=data["n_index"])
        domain = DomainSpec.from_dict(data["domain"]) if data["domain"] else None
        rep = data.get("report")
        report = None
        if rep:
            report = UniformityReport(rep["n"], rep["n_index"], rep["d"], rep["q"], rep["h"], rep["probe_resolution"])
        model = cls(
            kernel=data["kernel"]["name"],
            alpha=data["kernel"]["alpha"],
            C=data["C_used"],
            domain=domain,
            n_index=data["n_index"],
        )
        return model.fit(ps.points, np.asarray(data["values"]), report=report)


def error_budget(model: ScaledShepardRegressor, report: UniformityReport | None = None) -> ErrorBudget:
    """Assemble the Jackson-estimate constants from measured ``c`` and the model's ``C``."""
    report = report or model.report_
    if report is None:
        raise ValueError("error budget needs a uniformity report")
    d = report.d
    k = model.kernel_
    if not k.alpha > (d + 2) / 2:
        raise ValueError(f"Jackson estimate needs alpha > (d+2)/2 = {(d + 2) / 2}, got {k.alpha}")
    C = model.C_used_
    c = report.c_est
    return ErrorBudget(
        d=d,
        alpha=k.alpha,
        c=c,
        C=C,
        kappa=k.kappa,
        m1=k.m1,
        K_d=constant_K_d(d, c, C),
        C_alpha_d=constant_C_alpha_d(k.alpha, d),
        C_star_alpha_d=constant_C_star(k.alpha, d),
        modulus_arg=report.n_index ** (-1.0 / d),
    )
