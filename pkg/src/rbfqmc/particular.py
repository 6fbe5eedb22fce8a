"""Particular solutions of ``lap u_p = f`` by DRM and by equal-weight QMC sums.

Sign convention: with ``-lap u* = delta`` the Newton potential
``P(x) = int u*(x, z) f(z) dz`` satisfies ``lap P = -f``. The QMC sum
estimates ``P``; the QMC *particular solution* is ``-P``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist

from .geometry import Domain, NodeSet, generate_halton
from .interpolation import _eval_sum, _points, fit
from .kernels import KernelSpec, eval_psi, fundamental_solution, verify_pair
from .registry import fd_laplacian

__all__ = [
    "SourceTerm",
    "ParticularSolution",
    "ConsistencyReport",
    "UnsupportedOracleError",
    "exclusion_radius",
    "drm_particular",
    "qmc_particular",
    "qmc_particular_solution",
    "newton_potential_reference",
    "add_point_sources",
    "consistency_diagnostic",
    "default_stencil_step",
    "mq_flatness",
    "integrate_qmc",
    "integrate_via_rbf",
]

EXCLUSION = 1e-6


class UnsupportedOracleError(LookupError):
    pass


@dataclass(frozen=True)
class SourceTerm:
    name: str
    f: Callable
    newton_potential: Callable | None = None
    point_sources: tuple = ()


@dataclass(frozen=True, eq=False)
class ParticularSolution:
    method: str
    evaluator: Callable
    provenance: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.evaluator(x)


def exclusion_radius(domain: Domain) -> float:
    return EXCLUSION * domain.diameter


def _f_at(f, pts):
    return np.asarray(f(pts), dtype=float) if callable(f) else np.asarray(f, float)


def drm_particular(f, kernel: KernelSpec, nodes, ridge: float = 0.0) -> ParticularSolution:
    """``u_p(x) = sum_k alpha_k psi(|x - x_k|)`` with ``A_phi alpha = f``.

    ``f`` is a callable or the values already sampled at the nodes.
    """
    verify_pair(kernel)
    pts = _points(nodes)
    model = fit(pts, _f_at(f, pts), kernel, ridge=ridge)

    def evaluator(x):
        return _eval_sum(model.centers, model.alpha, x,
                         lambda r: eval_psi(kernel, r))

    return ParticularSolution("drm", evaluator, {"model": model})


def qmc_particular(f, domain: Domain, qmc_nodes, x, return_skipped: bool = False):
    """Equal-weight estimate ``(V/M) sum_k u*(|x - x_k|) f(x_k)`` of the Newton potential.

    Nodes within the exclusion radius of ``x`` are skipped. With
    ``return_skipped`` the per-point skip counts are returned as well.
    """
    pts = _points(qmc_nodes)
    fk = _f_at(f, pts)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    x = np.atleast_2d(x)
    eps = exclusion_radius(domain)
    out = np.empty(len(x))
    skipped = np.zeros(len(x), dtype=int)
    for s in range(0, len(x), 2048):
        r = cdist(x[s:s + 2048], pts)
        near = r <= eps
        u = fundamental_solution(domain.dim, np.where(near, 1.0, r))
        u = np.where(near, 0.0, u)
        out[s:s + 2048] = u @ fk
        skipped[s:s + 2048] = near.sum(axis=1)
    out *= domain.measure / len(pts)
    if scalar:
        out, skipped = float(out[0]), int(skipped[0])
    return (out, skipped) if return_skipped else out


def qmc_particular_solution(f, domain: Domain, qmc_nodes) -> ParticularSolution:
    """QMC particular solution ``-P`` so that ``lap u_p = f``."""
    pts = _points(qmc_nodes)
    fk = _f_at(f, pts)

    def evaluator(x):
        return -np.asarray(qmc_particular(fk, domain, pts, x))

    return ParticularSolution("qmc", evaluator,
                              {"nodes": pts, "V": domain.measure, "domain": domain})


def newton_potential_reference(problem, domain: Domain, x):
    """Closed-form Newton potential of a registry problem or source term."""
    fn = getattr(problem, "newton_potential", None)
    if fn is None:
        raise UnsupportedOracleError(
            f"no closed-form Newton potential for {getattr(problem, 'name', problem)!r}")
    out = fn(np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def add_point_sources(evaluator, point_sources, dim: int = 2):
    """Add ``sum_l Q_l u*(|x - s_l|)`` for concentrated sources ``(s_l, Q_l)``."""
    sources = [(np.asarray(s, dtype=float), float(q)) for s, q in point_sources]
    if not sources:
        return evaluator

    def wrapped(x):
        x = np.asarray(x, dtype=float)
        total = np.asarray(evaluator(x), dtype=float)
        for s, q in sources:
            r = np.linalg.norm(x - s, axis=-1)
            if np.any(r == 0):
                raise ValueError(f"evaluation at point source {s} is singular")
            total = total + q * fundamental_solution(dim, r)
        return total if np.ndim(total) else float(total)

    return wrapped


@dataclass(frozen=True)
class ConsistencyReport:
    diff: np.ndarray
    fd_laplacian_diff: np.ndarray
    defect: float
    drm_defect: float
    qmc_defect: float
    u_drm: np.ndarray
    u_qmc: np.ndarray
    skipped: np.ndarray
    h: float = 0.0
    # stencil versions of the individual defects, for reference
    fd_drm_defect: float = float("nan")
    fd_qmc_defect: float = float("nan")

    @property
    def ratio(self) -> float:
        worst = max(self.drm_defect, self.qmc_defect)
        return 0.0 if worst == 0.0 else self.defect / worst


def default_stencil_step(domain: Domain, m: int) -> float:
    """Four mean node spacings, ``4 (V/M)^(1/d)``."""
    return 4.0 * (domain.measure / m) ** (1.0 / domain.dim)


def _analytic_laplacian(sol: ParticularSolution, x) -> np.ndarray | None:
    if sol.method == "drm" and "model" in sol.provenance:
        # lap sum alpha psi = sum alpha phi
        return np.asarray(sol.provenance["model"](x), dtype=float)
    if sol.method == "qmc":
        # every u* term is harmonic away from its node
        return np.zeros(len(x))
    return None


def consistency_diagnostic(drm: ParticularSolution, qmc: ParticularSolution,
                           f, probes, h: float | None = None) -> ConsistencyReport:
    """Harmonicity of ``u_drm - u_qmc`` at interior probes.

    Both particular solutions satisfy ``lap u_p ~ f``, so their difference
    should be close to harmonic. Defects are normalised by ``1 + max|f|``.
    The difference is measured with a 5-point stencil of step ``h`` (default
    four mean spacings of the QMC nodes, which averages out the node-scale
    singularities of the QMC sum). Individual defects use the exact
    Laplacian of each representation: ``sum alpha phi - f`` for DRM and
    ``-f`` for QMC, whose terms are harmonic off the nodes.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    fv = np.asarray(f(probes), dtype=float)
    norm = 1.0 + float(np.max(np.abs(fv)))
    if h is None:
        if "nodes" not in qmc.provenance:
            raise ValueError("h is required when the QMC nodes are unknown")
        h = default_stencil_step(qmc.provenance["domain"], len(qmc.provenance["nodes"]))

    def diff(x):
        return np.asarray(drm(x)) - np.asarray(qmc(x))

    lap_d = fd_laplacian(diff, probes, h)
    fd_drm = fd_laplacian(drm, probes, h)
    fd_qmc = fd_laplacian(qmc, probes, h)
    individual = []
    for sol, fd in ((drm, fd_drm), (qmc, fd_qmc)):
        lap = _analytic_laplacian(sol, probes)
        individual.append(fd if lap is None else lap)
    u_drm, u_qmc = np.asarray(drm(probes)), np.asarray(qmc(probes))
    skipped = np.zeros(len(probes), dtype=int)
    if "nodes" in qmc.provenance:
        eps = exclusion_radius(qmc.provenance["domain"])
        skipped = np.sum(cdist(probes, qmc.provenance["nodes"]) <= eps, axis=1)
    return ConsistencyReport(
        diff=u_drm - u_qmc,
        fd_laplacian_diff=lap_d,
        defect=float(np.max(np.abs(lap_d))) / norm,
        drm_defect=float(np.max(np.abs(individual[0] - fv))) / norm,
        qmc_defect=float(np.max(np.abs(individual[1] - fv))) / norm,
        u_drm=u_drm,
        u_qmc=u_qmc,
        skipped=skipped,
        h=float(h),
        fd_drm_defect=float(np.max(np.abs(fd_drm - fv))) / norm,
        fd_qmc_defect=float(np.max(np.abs(fd_qmc - fv))) / norm,
    )


def mq_flatness(f, domain: Domain, nodes, c: float, response_point=None) -> float:
    """Coefficient of variation of ``f(x_k) u*(r_k) / sqrt(r_k^2 + c^2)``.

    ``r_k`` is measured from ``response_point`` (default: domain centroid);
    nodes inside the exclusion ball are dropped.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    pts = _points(nodes)
    x0 = domain.centroid if response_point is None else np.asarray(response_point, float)
    r = np.linalg.norm(pts - x0, axis=1)
    keep = r > exclusion_radius(domain)
    pts, r = pts[keep], r[keep]
    g = _f_at(f, pts) * fundamental_solution(domain.dim, r) / np.sqrt(r * r + c * c)
    mean = float(np.mean(g))
    if mean == 0.0:
        raise ZeroDivisionError("mean of g is zero; coefficient of variation undefined")
    return float(np.std(g) / abs(mean))


def integrate_qmc(w, domain: Domain, m: int, seed: int = 0) -> float:
    """``(V/m) sum_k w(x_k)`` over ``m`` interior Halton nodes."""
    if m < 1:
        raise ValueError("m must be >= 1")
    pts = generate_halton(domain, m, seed, n_boundary=0).points
    return domain.measure * float(np.mean(np.asarray(w(pts), dtype=float)))


@dataclass(frozen=True)
class IntegrationReport:
    estimate: float
    qmc_baseline: float
    discrepancy: float
    excluded: int


def integrate_via_rbf(w, domain: Domain, s_i, kernel: KernelSpec, nodes: NodeSet,
                      offset_factor: float = 2.0, n_sources: int | None = None,
                      qmc_m: int = 4096) -> IntegrationReport:
    """Integrate ``w`` through a zero-Dirichlet Poisson solve.

    Sets ``f = w / u*(s_i, .)``, solves ``lap u = f`` with ``u = 0`` on the
    boundary (DRM + MFS) and reports ``-u(s_i)``, which equals the integral of
    ``w`` when ``u*`` stands in for the Dirichlet Green's function. The
    ``integrate_qmc`` value is reported alongside. Experimental: no accuracy
    is claimed for the estimate.
    """
    from .homogeneous import BoundaryConditions, solve_poisson

    s_i = np.asarray(s_i, dtype=float)
    if not domain.contains(s_i):
        raise ValueError("s_i must be strictly interior")
    pts = nodes.points
    r = np.linalg.norm(pts - s_i, axis=1)
    safe = np.where(r > 0, r, 1.0)
    ustar = fundamental_solution(domain.dim, safe)
    on_zero_set = (r > 0) & (np.abs(ustar) <= 1e-12)
    excluded = int(np.count_nonzero(on_zero_set & nodes.interior_mask))
    if excluded:
        warnings.warn(f"{excluded} interior nodes lie on the zero set of u*(s_i, .)",
                      RuntimeWarning, stacklevel=2)
    keep = ~(on_zero_set & nodes.interior_mask)
    kept = NodeSet(pts[keep], nodes.labels[keep], nodes.normals[keep],
                   nodes.strategy, nodes.seed)

    def f(x):
        x = np.atleast_2d(x)
        rr = np.linalg.norm(x - s_i, axis=1)
        wx = np.asarray(w(x), dtype=float)
        us = fundamental_solution(domain.dim, np.where(rr > 0, rr, 1.0))
        ok = (rr > 0) & (np.abs(us) > 1e-12)
        return np.where(ok, wx / np.where(ok, us, 1.0), 0.0)

    fvals = f(kept.points)
    bc = BoundaryConditions(dirichlet=lambda x: np.zeros(len(np.atleast_2d(x))))
    solution = solve_poisson(fvals, bc, domain, kernel, kept, method="drm",
                             offset_factor=offset_factor, n_sources=n_sources)
    estimate = -float(solution(s_i))
    baseline = integrate_qmc(w, domain, qmc_m)
    denom = max(abs(baseline), 1e-300)
    disc = abs(estimate - baseline) / denom if baseline != 0 else abs(estimate)
    return IntegrationReport(estimate, baseline, float(disc), excluded)
