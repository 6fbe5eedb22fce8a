"""RBF and quasi-Monte Carlo particular solutions for Poisson problems."""
from .geometry import Domain, NodeSet, generate, make_domain, sigma_statistic
from .homogeneous import BoundaryConditions, mfs_solve, solve_poisson
from .interpolation import fit
from .kernels import KernelSpec, parse_kernel
from .particular import (consistency_diagnostic, drm_particular, qmc_particular,
                         qmc_particular_solution)
from .registry import available, lookup
from .studies import ConvergenceConfig, fit_error_exponent, run_convergence

__all__ = [
    "Domain", "NodeSet", "generate", "make_domain", "sigma_statistic",
    "BoundaryConditions", "mfs_solve", "solve_poisson", "fit", "KernelSpec",
    "parse_kernel", "consistency_diagnostic", "drm_particular", "qmc_particular",
    "qmc_particular_solution", "available", "lookup", "ConvergenceConfig",
    "fit_error_exponent", "run_convergence",
]
