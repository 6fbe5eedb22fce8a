"""Command-line front end.

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
All randomness is controlled by ``--seed``; floats are written at 17
significant digits.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geometry as geo
from .homogeneous import BoundaryConditions, MfsRankError, solve_poisson, write_field_csv
from .interpolation import SingularSystemError, fit, write_model_csv
from .kernels import UnsupportedPairError, parse_kernel
from .particular import (UnsupportedOracleError, consistency_diagnostic,
                         drm_particular, integrate_qmc, integrate_via_rbf,
                         qmc_particular, qmc_particular_solution)
from .registry import available, lookup
from .studies import (ConfigurationError, ConvergenceConfig, StrategyConfig,
                      compare_strategies, edge_profile, fit_error_exponent,
                      probe_points, run_convergence, write_edge_csv,
                      write_fit_csv, write_study_csv)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# RunConfig


@dataclass(frozen=True)
class RunConfig:
    """Flat, argv-serialisable view of one invocation."""

    subcommand: str
    domain: str | None = None
    kernel: str | None = None
    strategy: str | None = None
    m: tuple | None = None
    seed: int = 0
    problem: str | None = None
    out: str | None = None
    boundary: int | None = None
    method: str | None = None

    def to_argv(self) -> list[str]:
        argv = self.subcommand.split()
        for f in dataclasses.fields(self):
            if f.name == "subcommand":
                continue
            value = getattr(self, f.name)
            if value is None:
                continue
            if f.name == "m":
                value = ",".join(str(v) for v in value)
            argv += [f"--{f.name}", str(value)]
        return argv

    @classmethod
    def from_argv(cls, argv) -> RunConfig:
        ns = build_parser().parse_args(list(argv))
        return cls.from_namespace(ns)

    @classmethod
    def from_namespace(cls, ns) -> RunConfig:
        sub = ns.command if ns.command != "study" else f"study {ns.study}"
        kw = {}
        for f in dataclasses.fields(cls):
            if f.name != "subcommand" and hasattr(ns, f.name):
                kw[f.name] = getattr(ns, f.name)
        return cls(subcommand=sub, **kw)


# ---------------------------------------------------------------------------
# parser


def _m_list(text: str) -> tuple:
    try:
        values = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("M values must be positive")
    return values


def _point(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a point: {text!r}")


def _add_common(p, *, domain=False, kernel=False, strategy=False, m=None,
                problem=False, method=None, boundary=False):
    if domain:
        p.add_argument("--domain", default="square",
                       choices=["square", "disk", "cube", "ball"],
                       help="domain (default: %(default)s)")
    if problem:
        p.add_argument("--problem", required=problem == "required",
                       default=None if problem == "required" else problem,
                       help="registry problem name (see list-problems)")
    if kernel:
        p.add_argument("--kernel", default="tps",
                       help="kernel grammar: linear | phs:<N> | tps | tps-mod | "
                            "mq:<c> | gauss:<c> | gsrbf:<m> [+pre:<c>] "
                            "(default: %(default)s)")
    if strategy:
        p.add_argument("--strategy", default="halton", choices=list(geo.STRATEGIES),
                       help="node placement (default: %(default)s)")
    if m is not None:
        p.add_argument("--m", type=_m_list, default=m,
                       help="interior node count; comma list for studies "
                            "(default: %(default)s)")
    if boundary:
        p.add_argument("--boundary", type=int, default=None,
                       help="boundary node count (default: matched to the "
                            "interior density)")
    if method is not None:
        p.add_argument("--method", default=method[0], choices=method,
                       help="(default: %(default)s)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed; Halton start-index offset (default: %(default)s)")
    p.add_argument("--out", required=True, help="output CSV path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rbfqmc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("nodes", help="generate a node set")
    _add_common(p, domain=True, strategy=True, m=(256,), boundary=True)

    p = sub.add_parser("sigma", help="node-distribution statistic per node")
    _add_common(p, domain=True, strategy=True, m=(256,), boundary=True)
    p.add_argument("--nodes", help="read nodes from CSV instead of generating")

    p = sub.add_parser("interp", help="interpolate a registry solution/forcing")
    _add_common(p, kernel=True, strategy=True, m=(256,), problem="sin-square",
                boundary=True)
    p.add_argument("--ridge", type=float, default=0.0, help="(default: %(default)s)")

    p = sub.add_parser("solve", help="Poisson solve u = v + u_p")
    _add_common(p, kernel=True, strategy=True, m=(300,), problem="required",
                method=["drm", "qmc"], boundary=True)
    p.add_argument("--offset", type=float, default=2.0,
                   help="MFS source inflation factor (default: %(default)s)")
    p.add_argument("--sources", type=int, default=None,
                   help="MFS source count (default: half the boundary nodes, capped by offset)")
    p.add_argument("--grid", type=int, default=21,
                   help="evaluation grid points per axis (default: %(default)s)")

    p = sub.add_parser("qmc", help="DRM vs QMC particular-solution probes")
    _add_common(p, kernel=True, strategy=True, m=(1024,),
                problem="gaussian-bump-square", boundary=True)
    p.add_argument("--probes", type=int, default=50, help="(default: %(default)s)")
    p.add_argument("--step", type=float, default=None,
                   help="FD stencil step (default: 4 mean node spacings)")

    p = sub.add_parser("integrate", help="QMC and RBF-mediated integration")
    _add_common(p, kernel=True, m=(1024,), problem="gaussian-bump-square")
    p.add_argument("--via-rbf", action="store_true",
                   help="also run the Poisson-mediated estimate")
    p.add_argument("--source", type=_point, default=None,
                   help="interior point s_i (default: domain centroid)")

    study = sub.add_parser("study", help="reproducible studies")
    ssub = study.add_subparsers(dest="study", required=True, parser_class=_Parser)
    p = ssub.add_parser("conv", help="convergence sweep and exponent fit")
    _add_common(p, kernel=True, strategy=True, m=(64, 256, 1024, 4096),
                problem="required", method=["qmc", "interp", "drm", "solve"],
                boundary=True)
    p.add_argument("--seeds", type=int, default=1,
                   help="number of seeds seed..seed+n-1 (default: %(default)s)")
    p.add_argument("--timing", action="store_true",
                   help="write runtime_ms (breaks byte-identical reruns)")
    p = ssub.add_parser("edge", help="boundary-band vs interior error")
    _add_common(p, kernel=True, strategy=True, m=(256,), problem="sin-square",
                boundary=True)
    p.add_argument("--band", type=float, default=0.1, help="(default: %(default)s)")
    p = ssub.add_parser("strategies", help="compare node strategies")
    _add_common(p, kernel=True, m=(256,), problem="sin-square", boundary=True)
    p.add_argument("--strategies", default="uniform,halton",
                   help="comma list (default: %(default)s)")
    p.add_argument("--band", type=float, default=0.1, help="(default: %(default)s)")
    p.add_argument("--timing", action="store_true",
                   help="write runtime_ms (breaks byte-identical reruns)")

    sub.add_parser("list-problems", help="list registry problems")
    return parser


# ---------------------------------------------------------------------------
# commands


def _single_m(args) -> int:
    if len(args.m) != 1:
        raise ConfigurationError("this subcommand takes a single --m value")
    return args.m[0]


def _nodes_for(args, domain):
    return geo.generate(domain, args.strategy, _single_m(args), args.seed,
                        args.boundary)


def _fmt(v) -> str:
    return f"{v:.17g}"


def cmd_nodes(args):
    domain = geo.make_domain(args.domain)
    nodes = _nodes_for(args, domain)
    geo.write_nodes_csv(nodes, args.out)
    print(f"{nodes.N} interior + {nodes.L} boundary nodes -> {args.out}")


def cmd_sigma(args):
    domain = geo.make_domain(args.domain)
    nodes = geo.read_nodes_csv(args.nodes) if args.nodes else _nodes_for(args, domain)
    prof = geo.sigma_statistic(nodes, domain)
    cols = ["x", "y", "z"][: nodes.dim]
    with open(args.out, "w") as fh:
        fh.write(",".join(cols + ["label", "sigma"]) + "\n")
        for p, lab, s in zip(nodes.points, nodes.labels, prof.values):
            fh.write(",".join([*(_fmt(v) for v in p), str(lab), _fmt(s)]) + "\n")
    print(f"sigma mean {prof.mean:.6g} spread {prof.spread:.6g}")


def cmd_interp(args):
    problem = lookup(args.problem)
    domain = problem.domain
    target = problem.exact_u if problem.exact_u is not None else problem.f
    nodes = _nodes_for(args, domain)
    model = fit(nodes, target(nodes.points), parse_kernel(args.kernel, domain.dim),
                ridge=args.ridge)
    write_model_csv(model, args.out)
    probes = probe_points(domain)
    err = np.abs(model(probes) - target(probes))
    print(f"M={len(nodes)} cond={model.condition_estimate:.3g} "
          f"residual={model.residual_at_nodes:.3g} max_err={err.max():.3g}")


def _eval_grid(domain, n):
    lo, hi = domain.bounding_box
    axes = [np.linspace(a, b, n) for a, b in zip(lo, hi)]
    grid = np.column_stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")])
    if domain.is_box:
        return grid
    return grid[np.linalg.norm(grid, axis=1) <= 1.0]


def cmd_solve(args):
    problem = lookup(args.problem)
    domain = problem.domain
    nodes = _nodes_for(args, domain)
    kernel = parse_kernel(args.kernel, domain.dim)
    sol = solve_poisson(problem.f, BoundaryConditions.from_problem(problem), domain,
                        kernel, nodes, args.method, args.offset, args.sources)
    grid = _eval_grid(domain, args.grid)
    write_field_csv(sol, grid, args.out, problem.exact_u)
    if problem.exact_u is not None:
        err = np.max(np.abs(sol(grid) - problem.exact_u(grid)))
        print(f"max abs error {err:.3g} on {len(grid)} grid points")


def cmd_qmc(args):
    problem = lookup(args.problem)
    domain = problem.domain
    nodes = _nodes_for(args, domain)
    m = _single_m(args)
    h = args.step if args.step is not None else 4.0 * (domain.measure / m) ** (1 / domain.dim)
    drm = drm_particular(problem.f, parse_kernel(args.kernel, domain.dim), nodes)
    qmc = qmc_particular_solution(problem.f, domain, nodes.interior)
    probes = consistency_probes(domain, nodes, h, args.probes)
    rep = consistency_diagnostic(drm, qmc, problem.f, probes, h)
    cols = ["x", "y", "z"][: domain.dim]
    with open(args.out, "w") as fh:
        fh.write(",".join(cols + ["u_drm", "u_qmc", "diff", "fd_laplacian_diff",
                                  "skipped_nodes"]) + "\n")
        for i, p in enumerate(probes):
            fh.write(",".join([*(_fmt(v) for v in p), _fmt(rep.u_drm[i]),
                               _fmt(rep.u_qmc[i]), _fmt(rep.diff[i]),
                               _fmt(rep.fd_laplacian_diff[i]),
                               str(int(rep.skipped[i]))]) + "\n")
    print(f"h={h:.4g} defect={rep.defect:.4g} drm={rep.drm_defect:.4g} "
          f"qmc={rep.qmc_defect:.4g} ratio={rep.ratio:.4g}")
    if problem.newton_potential is not None:
        x0 = domain.centroid
        est = qmc_particular(problem.f, domain, nodes.interior, x0)
        print(f"Newton potential at centroid: qmc {est:.10g} "
              f"exact {float(problem.newton_potential(x0)):.10g}")


def consistency_probes(domain, nodes, h, n):
    """Interior probes whose stencil stays inside and which avoid nodes by 1e-3."""
    from scipy.spatial.distance import cdist

    cand = probe_points(domain, 20 * n)
    keep = (domain.distance_to_boundary(cand) > h) & (
        cdist(cand, nodes.points).min(axis=1) > 1e-3)
    return cand[keep][:n]


def cmd_integrate(args):
    problem = lookup(args.problem)
    domain = problem.domain
    m = _single_m(args)
    rows = [("qmc", integrate_qmc(problem.f, domain, m, args.seed), None, None)]
    if args.via_rbf:
        s_i = domain.centroid if args.source is None else np.asarray(args.source)
        nodes = geo.generate_halton(domain, m, args.seed)
        rep = integrate_via_rbf(problem.f, domain, s_i,
                                parse_kernel(args.kernel, domain.dim), nodes)
        rows.append(("rbf", rep.estimate, rep.qmc_baseline, rep.discrepancy))
    with open(args.out, "w") as fh:
        fh.write("method,estimate,qmc_baseline,discrepancy\n")
        for name, est, base, disc in rows:
            fh.write(",".join([name, _fmt(est), "" if base is None else _fmt(base),
                               "" if disc is None else _fmt(disc)]) + "\n")
    for name, est, _, disc in rows:
        print(f"{name}: {est:.10g}" + ("" if disc is None else f" (discrepancy {disc:.3g})"))


def _seeds(args):
    return tuple(range(args.seed, args.seed + max(1, getattr(args, "seeds", 1))))


def cmd_study_conv(args):
    config = ConvergenceConfig(method=args.method, problem=args.problem,
                               m_list=tuple(args.m), strategy=args.strategy,
                               kernel=args.kernel, seeds=_seeds(args),
                               n_boundary=args.boundary)
    records = run_convergence(config)
    write_study_csv(records, args.out, timing=args.timing)
    d = records[0].d
    fits = {}
    for seed in config.seeds:
        cell = [r for r in records if r.seed == seed]
        study_id = f"{args.method}:{args.problem}:{args.strategy}:{cell[0].kernel}:seed{seed}"
        fits[study_id] = fit_error_exponent(cell, d)
    fit_path = _sibling(args.out, "_fit")
    write_fit_csv(fits, fit_path)
    for k, f in fits.items():
        print(f"{k}: eta={f.eta:.4f} r2={f.r_squared:.4f}")


def cmd_study_edge(args):
    problem = lookup(args.problem)
    domain = problem.domain
    target = problem.exact_u if problem.exact_u is not None else problem.f
    nodes = _nodes_for(args, domain)
    model = fit(nodes, target(nodes.points), parse_kernel(args.kernel, domain.dim))
    prof = edge_profile(model, target, domain, args.band)
    write_edge_csv([(args.strategy, args.seed, len(nodes), prof)], args.out)
    print(f"band {prof.boundary_band_error:.4g} interior {prof.interior_error:.4g} "
          f"ratio {prof.ratio:.4g}")


def cmd_study_strategies(args):
    config = StrategyConfig(problem=args.problem, m=_single_m(args),
                            strategies=tuple(args.strategies.split(",")),
                            kernel=args.kernel, seeds=(args.seed,),
                            band_width=args.band, n_boundary=args.boundary)
    table = compare_strategies(config)
    records = [rec for rows in table.values() for rec, _ in rows]
    write_study_csv(records, args.out, timing=args.timing)
    edges = [(s, rec.seed, rec.M, prof) for s, rows in table.items() for rec, prof in rows]
    write_edge_csv(edges, _sibling(args.out, "_edge"))
    for s, rows in table.items():
        for rec, prof in rows:
            print(f"{s}: M={rec.M} rms={rec.error_rms:.4g} "
                  f"sigma_spread={rec.sigma_spread:.4g} edge_ratio={prof.ratio:.4g}")


def cmd_list_problems(args):
    for name in available():
        print(f"{name}  {lookup(name).description}")


def _sibling(path, suffix):
    p = Path(path)
    return str(p.with_name(p.stem + suffix + p.suffix))


COMMANDS = {
    "nodes": cmd_nodes,
    "sigma": cmd_sigma,
    "interp": cmd_interp,
    "solve": cmd_solve,
    "qmc": cmd_qmc,
    "integrate": cmd_integrate,
    "study conv": cmd_study_conv,
    "study edge": cmd_study_edge,
    "study strategies": cmd_study_strategies,
    "list-problems": cmd_list_problems,
}


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    key = args.command if args.command != "study" else f"study {args.study}"
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            COMMANDS[key](args)
    except (SingularSystemError, MfsRankError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigurationError, UnsupportedPairError, UnsupportedOracleError,
            KeyError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
