"""Method of fundamental solutions for the harmonic part ``v`` and ``u = v + u_p``."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .geometry import Domain, NodeSet, sample_boundary
from .kernels import KernelSpec, fundamental_solution
from .particular import ParticularSolution, drm_particular, qmc_particular_solution

__all__ = [
    "BoundaryConditions",
    "MfsModel",
    "MfsRankError",
    "PoissonSolution",
    "corrected_boundary_data",
    "mfs_solve",
    "solve_poisson",
    "write_field_csv",
]

DEFAULT_OFFSET = 2.0
RANK_RCOND = 1e-14
RESIDUAL_WARN = 1e-3


class MfsRankError(ArithmeticError):
    pass


@dataclass(frozen=True)
class BoundaryConditions:
    """Dirichlet data everywhere except where ``neumann_mask`` selects points."""

    dirichlet: Callable
    neumann: Callable | None = None
    neumann_mask: Callable | None = None

    @classmethod
    def from_problem(cls, problem) -> BoundaryConditions:
        return cls(problem.dirichlet, problem.neumann, problem.neumann_mask)

    def kinds(self, boundary_points) -> np.ndarray:
        """Boolean mask, True for Neumann points."""
        pts = np.atleast_2d(boundary_points)
        if self.neumann_mask is None:
            return np.zeros(len(pts), dtype=bool)
        mask = np.asarray(self.neumann_mask(pts), dtype=bool)
        if mask.all():
            raise ValueError("at least one Dirichlet point is required")
        if mask.any() and self.neumann is None:
            raise ValueError("Neumann points selected but no Neumann data given")
        return mask


def corrected_boundary_data(bc: BoundaryConditions, u_p, boundary: NodeSet,
                            domain: Domain) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(data, neumann_mask)`` for the harmonic problem.

    Dirichlet rows hold ``D - u_p``; Neumann rows hold ``N - du_p/dn`` with
    the normal derivative taken by central differences of step
    ``1e-6 * diameter``. Normals are only read for Neumann points.
    """
    pts = boundary.boundary if isinstance(boundary, NodeSet) else np.atleast_2d(boundary)
    neu = bc.kinds(pts)
    data = np.empty(len(pts))
    dir_pts = pts[~neu]
    data[~neu] = np.asarray(bc.dirichlet(dir_pts), float) - (
        np.asarray(u_p(dir_pts), float) if u_p is not None else 0.0)
    if neu.any():
        normals = boundary.boundary_normals[neu]
        npts = pts[neu]
        dudn = 0.0
        if u_p is not None:
            h = 1e-6 * domain.diameter
            for attempt in range(2):
                fp = np.asarray(u_p(npts + h * normals), float)
                fm = np.asarray(u_p(npts - h * normals), float)
                if np.all(np.isfinite(fp)) and np.all(np.isfinite(fm)):
                    break
                if attempt == 1:
                    raise ArithmeticError(
                        "normal-derivative stencil left the evaluable region")
                h *= 0.1
            dudn = (fp - fm) / (2.0 * h)
        data[neu] = np.asarray(bc.neumann(npts), float) - dudn
    return data, neu


@dataclass(frozen=True, eq=False)
class MfsModel:
    source_points: np.ndarray
    weights: np.ndarray
    offset_factor: float
    residual: float
    dim: int
    warning: str | None = None

    def __call__(self, x):
        x = np.asarray(x)
        if not np.issubdtype(x.dtype, np.floating):
            x = x.astype(float)
        scalar = x.ndim == 1
        x = np.atleast_2d(x)
        out = np.empty(len(x), dtype=x.dtype)
        # explicit broadcasting keeps long double input in long double
        for s in range(0, len(x), 1024):
            diff = x[s:s + 1024, None, :] - self.source_points[None, :, :]
            r = np.sqrt(np.sum(diff * diff, axis=2))
            out[s:s + 1024] = fundamental_solution(self.dim, r) @ self.weights
        return out[0] if scalar else out


def _mfs_rows(points, normals, neumann, sources, dim):
    diff = points[:, None, :] - sources[None, :, :]
    r = np.linalg.norm(diff, axis=2)
    A = fundamental_solution(dim, r)
    if neumann.any():
        # d u*/d n_x = u*'(r) (x - y).n / r
        dr = np.einsum("ijk,ik->ij", diff[neumann], normals[neumann]) / r[neumann]
        if dim == 2:
            A[neumann] = -dr / (2.0 * np.pi * r[neumann])
        else:
            A[neumann] = -dr / (4.0 * np.pi * r[neumann] ** 2)
    return A


def default_source_count(n_collocation: int, offset_factor: float = DEFAULT_OFFSET,
                         dim: int = 2) -> int:
    """Half the collocation count, capped by the modes the sources can resolve.

    Boundary mode ``k`` is damped by about ``offset_factor^-k``; keeping the
    modes within 10 digits gives ``k_max = 10 / log10(offset_factor)`` and a
    cap of ``2 k_max`` sources in 2D and ``(k_max + 1)^2`` in 3D.
    """
    if not offset_factor > 1.0:
        raise ValueError("offset_factor must exceed 1 to keep sources outside")
    k_max = int(10.0 / np.log10(offset_factor))
    cap = 2 * k_max if dim == 2 else (k_max + 1) ** 2
    return max(8, min(n_collocation // 2, cap))


def mfs_sources(domain: Domain, n_sources: int, offset_factor: float) -> np.ndarray:
    """Boundary samples inflated about the centroid by ``offset_factor``."""
    if not offset_factor > 1.0:
        raise ValueError("offset_factor must exceed 1 to keep sources outside")
    pts = sample_boundary(domain, n_sources).points
    c = domain.centroid
    return c + offset_factor * (pts - c)


def mfs_solve(data, boundary: NodeSet, domain: Domain, neumann=None,
              offset_factor: float = DEFAULT_OFFSET,
              n_sources: int | None = None) -> MfsModel:
    """Least-squares fit of ``v = sum_j w_j u*(|x - y_j|)`` to boundary data.

    ``n_sources`` defaults to :func:`default_source_count`. Solved by SVD-based
    least squares (minimum norm when underdetermined).
    Rank deficiency at relative tolerance 1e-14 raises
    :class:`MfsRankError`; a residual above ``1e-3 (1 + max|data|)`` is kept
    with a warning.
    """
    pts = boundary.boundary if isinstance(boundary, NodeSet) else np.atleast_2d(boundary)
    normals = (boundary.boundary_normals if isinstance(boundary, NodeSet)
               else np.full(pts.shape, np.nan))
    data = np.asarray(data, dtype=float)
    neumann = np.zeros(len(pts), bool) if neumann is None else np.asarray(neumann, bool)
    if n_sources is None:
        n_sources = default_source_count(len(pts), offset_factor, domain.dim)
    sources = mfs_sources(domain, n_sources, offset_factor)
    A = _mfs_rows(pts, normals, neumann, sources, domain.dim)
    w, _, rank, sv = scipy.linalg.lstsq(A, data, cond=RANK_RCOND,
                                         lapack_driver="gelsd")
    if rank < min(A.shape):
        raise MfsRankError(
            f"MFS system is rank deficient ({rank} < {min(A.shape)}) "
            f"with offset_factor={offset_factor}")
    residual = float(np.max(np.abs(A @ w - data))) if len(data) else 0.0
    note = None
    if residual > RESIDUAL_WARN * (1.0 + float(np.max(np.abs(data), initial=0.0))):
        note = f"MFS collocation residual {residual:.3g} is large"
        warnings.warn(note, RuntimeWarning, stacklevel=2)
    return MfsModel(sources, w, offset_factor, residual, domain.dim, note)


@dataclass(frozen=True, eq=False)
class PoissonSolution:
    particular: ParticularSolution | None
    harmonic: MfsModel

    def u_p(self, x):
        if self.particular is None:
            x = np.asarray(x, dtype=float)
            return 0.0 if x.ndim == 1 else np.zeros(len(x))
        return self.particular(x)

    def __call__(self, x):
        return self.harmonic(x) + self.u_p(x)


def solve_poisson(f, bc: BoundaryConditions, domain: Domain, kernel: KernelSpec | None,
                  nodes: NodeSet, method: str = "drm",
                  offset_factor: float = DEFAULT_OFFSET,
                  n_sources: int | None = None, ridge: float = 0.0) -> PoissonSolution:
    """``u = v + u_p``: particular solution by ``method`` then MFS for ``v``.

    ``f`` is a callable or values aligned with ``nodes``. DRM fits on all
    nodes; QMC sums over the interior nodes only. Boundary nodes are the MFS
    collocation points.
    """
    pts = nodes.points
    fvals = np.asarray(f(pts), float) if callable(f) else np.asarray(f, float)
    if np.all(fvals == 0.0):
        particular = None
    elif method == "drm":
        particular = drm_particular(fvals, kernel, pts, ridge=ridge)
    elif method == "qmc":
        m = nodes.interior_mask
        particular = qmc_particular_solution(fvals[m], domain, pts[m])
    else:
        raise ValueError(f"unknown particular method {method!r}")
    data, neu = corrected_boundary_data(bc, particular, nodes.boundary_only(), domain)
    v = mfs_solve(data, nodes.boundary_only(), domain, neu, offset_factor, n_sources)
    return PoissonSolution(particular, v)


def write_field_csv(solution: PoissonSolution, points, path, exact=None) -> None:
    """``x,y[,z],u,v,u_p,exact,abs_error`` over evaluation points."""
    pts = np.atleast_2d(np.asarray(points, float))
    v = np.asarray(solution.harmonic(pts))
    up = np.asarray(solution.u_p(pts))
    u = v + up
    ex = None if exact is None else np.asarray(exact(pts), float)
    cols = ["x", "y", "z"][: pts.shape[1]]
    with open(path, "w") as fh:
        fh.write(",".join(cols + ["u", "v", "u_p", "exact", "abs_error"]) + "\n")
        for i, p in enumerate(pts):
            row = [f"{c:.17g}" for c in p] + [f"{u[i]:.17g}", f"{v[i]:.17g}",
                                               f"{up[i]:.17g}"]
            if ex is None:
                row += ["", ""]
            else:
                row += [f"{ex[i]:.17g}", f"{abs(u[i] - ex[i]):.17g}"]
            fh.write(",".join(row) + "\n")
