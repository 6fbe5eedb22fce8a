"""Convergence sweeps, error-exponent fits, edge profiles and strategy tables.

Error exponents are fitted in the form ``err ~ M^-eta (log M)^(d-1)`` with
the log factor imposed, so ``eta`` is the only fitted slope.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .geometry import (Domain, generate, halton_sequence,
                       sigma_statistic)
from .homogeneous import BoundaryConditions, solve_poisson
from .interpolation import fit
from .kernels import parse_kernel
from .particular import qmc_particular
from .registry import ProblemEntry, lookup

__all__ = [
    "ConfigurationError",
    "StudyRecord",
    "ExponentFit",
    "EdgeProfile",
    "ConvergenceConfig",
    "StrategyConfig",
    "probe_points",
    "run_convergence",
    "fit_error_exponent",
    "curse_reference",
    "edge_profile",
    "compare_strategies",
    "write_study_csv",
    "write_fit_csv",
    "write_edge_csv",
]

METHODS = ("interp", "drm", "qmc", "solve")
PROBE_OFFSET = 10007
N_PROBES = 200


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class StudyRecord:
    method: str
    kernel: str
    strategy: str
    d: int
    M: int
    seed: int
    error_rms: float
    error_max: float
    sigma_spread: float
    runtime_ms: float = field(default=0.0, compare=False)

    @property
    def sort_key(self):
        return (self.method, self.strategy, self.M, self.seed)


@dataclass(frozen=True)
class ExponentFit:
    eta: float
    log_exponent: int
    r_squared: float
    M_min: int
    M_max: int


@dataclass(frozen=True)
class ConvergenceConfig:
    method: str
    problem: str
    m_list: tuple
    strategy: str = "halton"
    kernel: str = "tps"
    seeds: tuple = (0,)
    n_boundary: int | None = None
    offset_factor: float = 2.0
    n_sources: int | None = None


def probe_points(domain: Domain, n: int = N_PROBES, offset: int = PROBE_OFFSET) -> np.ndarray:
    """``n`` interior Halton points starting at index ``offset``."""
    lo, hi = domain.bounding_box
    out, start = [], offset
    have = 0
    while have < n:
        cand = lo + (hi - lo) * halton_sequence(2 * n, domain.dim, start=start)
        start += 2 * n
        cand = cand[domain.contains(cand)]
        out.append(cand)
        have += len(cand)
    return np.vstack(out)[:n]


def _study_nodes(domain, strategy, m, seed, n_boundary, interior_only):
    # Halton cells use offset 0 whatever the seed, so halton records are
    # seed-independent by design
    halton_seed = 0 if strategy == "halton" else seed
    nb = 0 if interior_only else n_boundary
    nodes = generate(domain, strategy, m, halton_seed, nb)
    return nodes.interior_only() if interior_only else nodes


def _check_oracle(config: ConvergenceConfig, problem: ProblemEntry):
    if config.method not in METHODS:
        raise ConfigurationError(f"unknown method {config.method!r}; expected {METHODS}")
    if config.method == "qmc" and problem.newton_potential is None:
        raise ConfigurationError(
            f"method qmc needs a closed-form Newton potential; {problem.name} has none")
    if config.method in ("interp", "solve") and problem.exact_u is None:
        raise ConfigurationError(
            f"method {config.method} needs an exact solution; {problem.name} has none")
    ms = list(config.m_list)
    if len(ms) < 4 or any(b <= a for a, b in zip(ms, ms[1:])):
        raise ConfigurationError("M list must be strictly increasing with >= 4 entries")


def _cell(config, problem, domain, probes, m, seed):
    kernel = parse_kernel(config.kernel, domain.dim)
    t0 = time.perf_counter()
    if config.method == "qmc":
        nodes = _study_nodes(domain, config.strategy, m, seed, 0, True)
        est = qmc_particular(problem.f, domain, nodes, probes)
        err = np.abs(est - problem.newton_potential(probes))
    else:
        nodes = _study_nodes(domain, config.strategy, m, seed, config.n_boundary, False)
        if config.method == "interp":
            model = fit(nodes, problem.exact_u(nodes.points), kernel)
            err = np.abs(model(probes) - problem.exact_u(probes))
        elif config.method == "drm":
            # accuracy of the forcing expansion sum_k alpha_k phi_k ~ f
            model = fit(nodes, problem.f(nodes.points), kernel)
            err = np.abs(model(probes) - problem.f(probes))
        else:
            sol = solve_poisson(problem.f, BoundaryConditions.from_problem(problem),
                                domain, kernel, nodes, "drm",
                                config.offset_factor, config.n_sources)
            err = np.abs(sol(probes) - problem.exact_u(probes))
    runtime = 1e3 * (time.perf_counter() - t0)
    spread = sigma_statistic(nodes, domain).spread
    return StudyRecord(
        method=config.method,
        kernel="-" if config.method == "qmc" else kernel.grammar,
        strategy=config.strategy,
        d=domain.dim,
        M=len(nodes),
        seed=int(seed),
        error_rms=float(np.sqrt(np.mean(err ** 2))),
        error_max=float(np.max(err)),
        sigma_spread=float(spread),
        runtime_ms=runtime,
    )


def run_convergence(config: ConvergenceConfig) -> list[StudyRecord]:
    """One record per ``(M, seed)`` cell, errors at 200 held-out probes.

    ``qmc`` compares the equal-weight Newton-potential sum with its closed
    form; ``interp`` interpolates the exact solution; ``drm`` measures the
    RBF expansion of the forcing; ``solve`` runs DRM + MFS against the exact
    solution. Records are returned in canonical order.
    """
    problem = lookup(config.problem)
    _check_oracle(config, problem)
    domain = problem.domain
    probes = probe_points(domain)
    records = [_cell(config, problem, domain, probes, m, seed)
               for m in config.m_list for seed in config.seeds]
    return sorted(records, key=lambda r: r.sort_key)


def fit_error_exponent(records, d: int) -> ExponentFit:
    """Least-squares slope of ``log err - (d-1) log log M`` against ``-log M``.

    ``records`` is a sequence of :class:`StudyRecord` or ``(M, err)`` pairs.
    """
    pairs = [(r.M, r.error_rms) if isinstance(r, StudyRecord) else tuple(r)
             for r in records]
    M = np.array([p[0] for p in pairs], dtype=float)
    err = np.array([p[1] for p in pairs], dtype=float)
    if len(np.unique(M)) < 4:
        raise ValueError("need at least 4 distinct M values")
    if np.any(err <= 0) or np.any(M <= math.e):
        raise ValueError("errors must be positive and M > e")
    x = -np.log(M)
    y = np.log(err) - (d - 1) * np.log(np.log(M))
    A = np.column_stack([x, np.ones_like(x)])
    coef = np.linalg.lstsq(A, y, rcond=None)[0]
    eta = coef[0]
    resid = y - A @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return ExponentFit(float(eta), d - 1, r2, int(M.min()), int(M.max()))


def curse_reference(kappa: float, d: int, M: float) -> float:
    """Classical error model ``M^(-kappa/d)`` for an order-``kappa`` method."""
    if M < 2:
        raise ValueError("M must be >= 2")
    return float(M) ** (-kappa / d)


@dataclass(frozen=True)
class EdgeProfile:
    boundary_band_error: float
    interior_error: float
    ratio: float
    band_width: float


def edge_profile(approx, oracle, domain: Domain, band_width: float,
                 probes=None) -> EdgeProfile:
    """RMS error of ``approx`` against ``oracle`` near the boundary vs inside.

    Probes closer than ``band_width`` to the boundary form the boundary band.
    An empty partition widens the band once (x2) before failing. Both errors
    zero gives ratio 1.
    """
    probes = probe_points(domain) if probes is None else np.atleast_2d(probes)
    err = np.abs(np.asarray(approx(probes)) - np.asarray(oracle(probes)))
    dist = domain.distance_to_boundary(probes)
    for attempt in range(2):
        band = dist < band_width
        if band.any() and (~band).any():
            break
        if attempt == 1:
            raise ValueError(f"band width {band_width} leaves an empty partition")
        band_width *= 2.0
    eb = float(np.sqrt(np.mean(err[band] ** 2)))
    ei = float(np.sqrt(np.mean(err[~band] ** 2)))
    if eb == 0.0 and ei == 0.0:
        ratio = 1.0
    elif ei == 0.0:
        ratio = math.inf
    else:
        ratio = eb / ei
    return EdgeProfile(eb, ei, ratio, band_width)


@dataclass(frozen=True)
class StrategyConfig:
    problem: str
    m: int
    strategies: tuple = ("uniform", "halton")
    kernel: str = "tps"
    seeds: tuple = (0,)
    band_width: float = 0.1
    n_boundary: int | None = None


def compare_strategies(config: StrategyConfig) -> dict:
    """Interpolate the problem's exact solution (its forcing when there is
    none) with every strategy at the same nominal ``M``.

    Returns ``{strategy: [(StudyRecord, EdgeProfile), ...]}``.
    """
    problem = lookup(config.problem)
    domain = problem.domain
    target = problem.exact_u if problem.exact_u is not None else problem.f
    kernel = parse_kernel(config.kernel, domain.dim)
    probes = probe_points(domain)
    table = {}
    for strategy in config.strategies:
        rows = []
        for seed in config.seeds:
            t0 = time.perf_counter()
            nodes = _study_nodes(domain, strategy, config.m, seed,
                                 config.n_boundary, False)
            model = fit(nodes, target(nodes.points), kernel)
            err = np.abs(model(probes) - target(probes))
            runtime = 1e3 * (time.perf_counter() - t0)
            rec = StudyRecord("interp", kernel.grammar, strategy, domain.dim,
                              len(nodes), int(seed), float(np.sqrt(np.mean(err ** 2))),
                              float(np.max(err)),
                              sigma_statistic(nodes, domain).spread, runtime)
            rows.append((rec, edge_profile(model, target, domain,
                                           config.band_width, probes)))
        table[strategy] = rows
    return table


# ---------------------------------------------------------------------------
# CSV

STUDY_HEADER = ["method", "kernel", "strategy", "d", "M", "seed", "error_rms",
                "error_max", "sigma_spread", "runtime_ms"]


def _g(v: float) -> str:
    return f"{v:.17g}"


def write_study_csv(records, path, timing: bool = False) -> None:
    """Runtime is only written with ``timing=True``; otherwise the column is
    left empty so reruns are byte-identical."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STUDY_HEADER)
        for r in sorted(records, key=lambda r: r.sort_key):
            w.writerow([r.method, r.kernel, r.strategy, r.d, r.M, r.seed,
                        _g(r.error_rms), _g(r.error_max), _g(r.sigma_spread),
                        _g(r.runtime_ms) if timing else ""])


def write_fit_csv(fits: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["study_id", "eta", "log_exponent", "r_squared", "M_min", "M_max"])
        for study_id, f in fits.items():
            w.writerow([study_id, _g(f.eta), f.log_exponent, _g(f.r_squared),
                        f.M_min, f.M_max])


def write_edge_csv(rows, path) -> None:
    """``rows`` are ``(strategy, seed, M, EdgeProfile)`` tuples."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "seed", "M", "band_width", "boundary_band_error",
                    "interior_error", "ratio"])
        for strategy, seed, m, p in rows:
            w.writerow([strategy, seed, m, _g(p.band_width),
                        _g(p.boundary_band_error), _g(p.interior_error), _g(p.ratio)])
