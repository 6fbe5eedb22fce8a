"""Named manufactured problems with their analytic oracles.

Each entry is checked at registration: when an exact solution is present,
a central-difference Laplacian at five interior points must match ``f`` to
relative 1e-5.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import Domain, halton_sequence, make_domain

__all__ = ["ProblemEntry", "lookup", "register", "available", "fd_laplacian"]

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ProblemEntry:
    name: str
    description: str
    domain_kind: str
    f: Field
    exact_u: Field | None = None
    newton_potential: Field | None = None
    dirichlet: Field | None = None
    neumann: Field | None = None
    # boundary points (n, d) -> bool mask of Neumann points
    neumann_mask: Callable[[np.ndarray], np.ndarray] | None = None

    @property
    def domain(self) -> Domain:
        return make_domain(self.domain_kind)


_REGISTRY: dict[str, ProblemEntry] = {}


def fd_laplacian(func: Field, x: np.ndarray, h: float) -> np.ndarray:
    """Standard (2d+1)-point Laplacian stencil at points ``x``.

    Long double input is kept in long double, which lets a caller push the
    roundoff floor below the truncation error of small steps.
    """
    x = np.atleast_2d(np.asarray(x))
    if not np.issubdtype(x.dtype, np.floating):
        x = x.astype(float)
    d = x.shape[1]
    centre = np.asarray(func(x))
    total = -2.0 * d * centre
    for i in range(d):
        e = np.zeros(d, dtype=x.dtype)
        e[i] = h
        total = total + func(x + e) + func(x - e)
    return total / h ** 2


def register(entry: ProblemEntry) -> ProblemEntry:
    if entry.exact_u is not None:
        dom = entry.domain
        lo, hi = dom.bounding_box
        probe = lo + (hi - lo) * halton_sequence(64, dom.dim, start=7)
        probe = probe[dom.contains(probe) & (dom.distance_to_boundary(probe) > 0.05)][:5]
        lap = fd_laplacian(entry.exact_u, probe, 1e-3)
        f = entry.f(probe)
        scale = max(1.0, float(np.max(np.abs(f))))
        if np.max(np.abs(lap - f)) > 1e-5 * scale:
            raise ValueError(f"problem {entry.name!r}: lap(u) != f at spot checks")
    _REGISTRY[entry.name] = entry
    return entry


def lookup(name: str) -> ProblemEntry:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"unknown problem {name!r}; available: {', '.join(available())}"
        ) from None


def available() -> list[str]:
    return sorted(_REGISTRY)


def _r2(x):
    return np.sum(np.asarray(x) ** 2, axis=-1)


def _zero(x):
    return np.zeros(np.shape(x)[:-1])


def _const1_newton(x):
    # (1 - r^2)/4 inside, -(1/2) ln r outside
    r2 = _r2(x)
    inside = (1.0 - r2) / 4.0
    outside = -0.25 * np.log(np.where(r2 > 0, r2, 1.0))
    return np.where(r2 <= 1.0, inside, outside)


def _sin2(x):
    x = np.asarray(x)
    return np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])


register(ProblemEntry(
    name="const1-disk",
    description="f = 1 on the unit disk; u = (r^2 - 1)/4, D = 0; "
                "Newton potential (1 - r^2)/4 inside",
    domain_kind="unit-disk",
    f=lambda x: np.ones(np.shape(x)[:-1]),
    exact_u=lambda x: (_r2(x) - 1.0) / 4.0,
    newton_potential=_const1_newton,
    dirichlet=_zero,
))

register(ProblemEntry(
    name="sin-square",
    description="u = sin(pi x) sin(pi y), f = -2 pi^2 u, D = 0 on the unit square",
    domain_kind="unit-square",
    f=lambda x: -2.0 * np.pi ** 2 * _sin2(x),
    exact_u=_sin2,
    dirichlet=_zero,
))

_BUMP_CENTRE = np.array([0.5, 0.5])

register(ProblemEntry(
    name="gaussian-bump-square",
    description="f = exp(-20 |x - (0.5, 0.5)|^2), D = 0; no exact u "
                "(DRM vs QMC diagnostic)",
    domain_kind="unit-square",
    f=lambda x: np.exp(-20.0 * _r2(np.asarray(x) - _BUMP_CENTRE)),
    dirichlet=_zero,
))

register(ProblemEntry(
    name="linear-xy-square",
    description="u = x + y, f = 0, D = x + y (pure MFS)",
    domain_kind="unit-square",
    f=_zero,
    exact_u=lambda x: np.asarray(x)[..., 0] + np.asarray(x)[..., 1],
    dirichlet=lambda x: np.asarray(x)[..., 0] + np.asarray(x)[..., 1],
))


def _mixed_u(x):
    return _sin2(x) + np.asarray(x)[..., 0]


def _mixed_neumann(x):
    # outward normal (1, 0) on x = 1
    y = np.asarray(x)[..., 1]
    return 1.0 - np.pi * np.sin(np.pi * y)


def _right_edge(x):
    x = np.asarray(x)
    return (np.abs(x[..., 0] - 1.0) <= 1e-12) & (x[..., 1] > 1e-12) & (x[..., 1] < 1 - 1e-12)


register(ProblemEntry(
    name="mixed-bc-square",
    description="u = sin(pi x) sin(pi y) + x; Neumann on x = 1, Dirichlet elsewhere",
    domain_kind="unit-square",
    f=lambda x: -2.0 * np.pi ** 2 * _sin2(x),
    exact_u=_mixed_u,
    dirichlet=_mixed_u,
    neumann=_mixed_neumann,
    neumann_mask=_right_edge,
))
