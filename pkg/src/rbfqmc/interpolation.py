"""Dense RBF collocation: assemble, factor, evaluate."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg import lapack
from scipy.spatial.distance import cdist

from .geometry import NodeSet
from .kernels import KernelSpec, eval_phi

__all__ = [
    "DuplicateNodeError",
    "SingularSystemError",
    "InterpolationModel",
    "ErrorReport",
    "assemble_matrix",
    "estimate_condition",
    "fit",
    "evaluate_interpolant",
    "interpolation_error",
    "write_model_csv",
]

PIVOT_TOL = 1e-14
CONDITION_WARN = 1e14
RESIDUAL_TOL = 1e-8


class DuplicateNodeError(ValueError):
    pass


class SingularSystemError(ArithmeticError):
    pass


class IllConditionedWarning(RuntimeWarning):
    pass


def _points(nodes) -> np.ndarray:
    if isinstance(nodes, NodeSet):
        return nodes.points
    return np.atleast_2d(np.asarray(nodes, dtype=float))


def assemble_matrix(nodes, kernel: KernelSpec) -> np.ndarray:
    """``A[i, k] = phi(|x_i - x_k|)``."""
    pts = _points(nodes)
    r = cdist(pts, pts)
    off = r[~np.eye(len(pts), dtype=bool)]
    if off.size and np.min(off) == 0.0:
        i, k = np.argwhere((r == 0.0) & ~np.eye(len(pts), dtype=bool))[0]
        raise DuplicateNodeError(f"nodes {i} and {k} coincide at {pts[i]}")
    return eval_phi(kernel, r)


def _condition(A: np.ndarray, lu: np.ndarray) -> float:
    rcond, _ = lapack.dgecon(lu, np.linalg.norm(A, 1), norm="1")
    return np.inf if rcond == 0 else 1.0 / rcond


def estimate_condition(nodes, kernel: KernelSpec) -> float:
    """1-norm condition estimate of the collocation matrix.

    Unlike :func:`fit` this applies no pivot guard, so it also reports on
    matrices that ``fit`` would reject as numerically singular.
    """
    A = assemble_matrix(nodes, kernel)
    lu, _ = scipy.linalg.lu_factor(A)
    return float(_condition(A, lu))


@dataclass(frozen=True, eq=False)
class InterpolationModel:
    centers: np.ndarray
    kernel: KernelSpec
    alpha: np.ndarray
    condition_estimate: float
    residual_at_nodes: float
    f_max: float = 0.0
    warnings: tuple = field(default=())

    @property
    def accepted(self) -> bool:
        return self.residual_at_nodes <= RESIDUAL_TOL * (1.0 + self.f_max)

    def __call__(self, x):
        return evaluate_interpolant(self, x)


def fit(nodes, f_values, kernel: KernelSpec, ridge: float = 0.0) -> InterpolationModel:
    """Solve ``A alpha = f`` by LU with partial pivoting.

    Raises :class:`SingularSystemError` when a pivot falls below
    ``1e-14 * max|A|``. A condition estimate above 1e14 only attaches a
    warning to the model.
    """
    pts = _points(nodes)
    f = np.asarray(f_values, dtype=float).reshape(-1)
    if f.shape[0] != len(pts):
        raise ValueError(f"{f.shape[0]} values for {len(pts)} nodes")
    A = assemble_matrix(pts, kernel)
    if ridge:
        A = A + ridge * np.eye(len(pts))
    scale = np.max(np.abs(A))
    lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if scale == 0.0 or np.min(pivots) < PIVOT_TOL * scale:
        raise SingularSystemError(
            f"RBF matrix for kernel {kernel.grammar} with M={len(pts)} is "
            f"numerically singular (min pivot {np.min(pivots):.3g}, "
            f"max|A| {scale:.3g})")
    cond = _condition(A, lu)
    alpha = scipy.linalg.lu_solve((lu, piv), f)
    residual = float(np.max(np.abs(A @ alpha - f))) if len(f) else 0.0
    notes = []
    if cond > CONDITION_WARN:
        msg = f"condition estimate {cond:.3g} exceeds {CONDITION_WARN:.0e}"
        notes.append(msg)
        warnings.warn(msg, IllConditionedWarning, stacklevel=2)
    alpha.setflags(write=False)
    return InterpolationModel(pts.copy(), kernel, alpha, float(cond), residual,
                              float(np.max(np.abs(f))) if len(f) else 0.0,
                              tuple(notes))


def _eval_sum(centers, coef, x, radial, chunk: int = 4096):
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    x = np.atleast_2d(x)
    out = np.empty(len(x))
    for s in range(0, len(x), chunk):
        r = cdist(x[s:s + chunk], centers)
        out[s:s + chunk] = radial(r) @ coef
    return float(out[0]) if scalar else out


def evaluate_interpolant(model: InterpolationModel, x):
    """``sum_k alpha_k phi(|x - x_k|)`` at one point or an ``(n, d)`` array."""
    return _eval_sum(model.centers, model.alpha, x,
                     lambda r: eval_phi(model.kernel, r))


@dataclass(frozen=True)
class ErrorReport:
    rms: float
    max: float
    errors: np.ndarray


def interpolation_error(model, reference, points) -> ErrorReport:
    """Pointwise ``|model(x) - reference(x)|`` reduced to RMS and max."""
    pts = _points(points)
    err = np.abs(np.asarray(model(pts)) - np.asarray(reference(pts)))
    return ErrorReport(float(np.sqrt(np.mean(err ** 2))), float(np.max(err)), err)


def write_model_csv(model: InterpolationModel, path) -> None:
    """Write ``index,x,y[,z],alpha`` plus a ``<path>.json`` metadata sidecar."""
    d = model.centers.shape[1]
    cols = ["x", "y", "z"][:d]
    with open(path, "w") as fh:
        fh.write(",".join(["index", *cols, "alpha"]) + "\n")
        for i, (p, a) in enumerate(zip(model.centers, model.alpha)):
            fh.write(",".join([str(i), *(f"{v:.17g}" for v in p), f"{a:.17g}"]) + "\n")
    meta = {
        "kernel": model.kernel.grammar,
        "condition_estimate": float(f"{model.condition_estimate:.17g}"),
        "residual": float(f"{model.residual_at_nodes:.17g}"),
    }
    with open(f"{path}.json", "w") as fh:
        fh.write(json.dumps(meta, sort_keys=True) + "\n")
