"""Radial kernels, their Laplacian particular-solution pairs, and u*.

Every kernel ``phi`` with a registered pair also has a closed-form ``psi``
whose d-dimensional radial Laplacian ``psi'' + (d-1)/r psi'`` equals
``phi``. The closed forms are dtype-preserving so the finite-difference
check can run in extended precision.

Fundamental solutions follow ``-lap u* = delta``:
``u*(r) = -ln(r)/(2 pi)`` in 2D and ``1/(4 pi r)`` in 3D.
"""
from __future__ import annotations

import functools
import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "KernelSpec",
    "UnsupportedPairError",
    "parse_kernel",
    "eval_phi",
    "eval_psi",
    "has_pair",
    "fundamental_solution",
    "fundamental_solution_derivative",
    "gs_rbf_phi",
    "timespace_radius",
    "fd_radial_laplacian",
    "pair_check",
    "verify_pair",
]

FAMILIES = ("linear", "polyharmonic-odd", "tps", "tps-modified", "mq",
            "gaussian", "gs-rbf")


class UnsupportedPairError(ValueError):
    """No analytic particular solution is registered for this kernel."""


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and parameters.

    ``order`` is N for ``polyharmonic-odd`` (exponent 2N+1) and m for
    ``gs-rbf`` (weight r^(2m)). ``prewavelet_c`` set to a positive number
    replaces r by sqrt(r^2 + c^2) before the family is evaluated.
    """

    family: str
    shape_c: float | None = None
    order: int = 0
    dim: int = 2
    prewavelet_c: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family in ("mq", "gaussian"):
            if self.shape_c is None or not self.shape_c > 0:
                raise ValueError(f"{self.family} needs shape_c > 0")
        if self.prewavelet_c is not None and not self.prewavelet_c > 0:
            raise ValueError("prewavelet shift needs c > 0")
        if self.order < 0:
            raise ValueError("order must be non-negative")
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")

    @property
    def prewavelet(self) -> bool:
        return self.prewavelet_c is not None

    @property
    def exponent(self) -> int:
        """Odd power of ``polyharmonic-odd``."""
        return 2 * self.order + 1

    @property
    def grammar(self) -> str:
        base = {
            "linear": "linear",
            "tps": "tps",
            "tps-modified": "tps-mod",
            "polyharmonic-odd": f"phs:{self.order}",
            "mq": f"mq:{self.shape_c!r}",
            "gaussian": f"gauss:{self.shape_c!r}",
            "gs-rbf": f"gsrbf:{self.order}",
        }[self.family]
        if self.prewavelet:
            base += f"+pre:{self.prewavelet_c!r}"
        return base

    def __str__(self):
        return self.grammar


_GRAMMAR = re.compile(
    r"^(?P<base>linear|tps-mod|tps|phs:(?P<N>\d+)|mq:(?P<mq>[^+]+)"
    r"|gauss:(?P<g>[^+]+)|gsrbf:(?P<m>\d+))(\+pre:(?P<pre>.+))?$")


def parse_kernel(text: str, dim: int = 2) -> KernelSpec:
    """Parse ``linear | phs:<N> | tps | tps-mod | mq:<c> | gauss:<c> | gsrbf:<m>``
    with an optional ``+pre:<c>`` suffix."""
    match = _GRAMMAR.match(text.strip())
    if match is None:
        raise ValueError(
            f"cannot parse kernel {text!r}; grammar is "
            "linear | phs:<N> | tps | tps-mod | mq:<c> | gauss:<c> | gsrbf:<m> "
            "with optional +pre:<c>")
    g = match.groupdict()
    pre = float(g["pre"]) if g["pre"] else None
    base = g["base"]
    if base == "linear":
        return KernelSpec("linear", dim=dim, prewavelet_c=pre)
    if base == "tps":
        return KernelSpec("tps", dim=dim, prewavelet_c=pre)
    if base == "tps-mod":
        return KernelSpec("tps-modified", dim=dim, prewavelet_c=pre)
    if g["N"] is not None:
        return KernelSpec("polyharmonic-odd", order=int(g["N"]), dim=dim,
                          prewavelet_c=pre)
    if g["mq"] is not None:
        return KernelSpec("mq", shape_c=float(g["mq"]), dim=dim, prewavelet_c=pre)
    if g["g"] is not None:
        return KernelSpec("gaussian", shape_c=float(g["g"]), dim=dim,
                          prewavelet_c=pre)
    return KernelSpec("gs-rbf", order=int(g["m"]), dim=dim, prewavelet_c=pre)


# ---------------------------------------------------------------------------
# elementary radial pieces (dtype preserving)

def _safe_log(r):
    return np.log(np.where(r > 0, r, np.ones_like(r)))


def _power_pair(p: float, d: int):
    """psi for phi = r^p:  r^(p+2) / ((p+2)(p+d))."""
    scale = 1.0 / ((p + 2.0) * (p + d))
    return lambda r: scale * r ** (p + 2)


def _powerlog_pair(q: float, d: int):
    """psi for phi = r^q ln r:  a r^(q+2) ln r + b r^(q+2)."""
    k = (q + 2.0) * (q + d)
    a = 1.0 / k
    b = -a * (2.0 * q + d + 2.0) / k
    return lambda r: r ** (q + 2) * (a * _safe_log(r) + b)


def _as_radius(r):
    arr = np.asarray(r)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(float)
    if np.any(arr < 0):
        raise ValueError("radius must be non-negative")
    return arr


def _u_star(r, dim):
    if dim == 2:
        return -np.log(r) / (2.0 * np.pi)
    return 1.0 / (4.0 * np.pi * r)


def fundamental_solution(dim: int, r):
    """Free-space Laplace fundamental solution under ``-lap u* = delta``."""
    arr = _as_radius(r)
    if np.any(arr == 0):
        raise ValueError("fundamental solution is singular at r = 0")
    out = _u_star(arr, dim)
    return out if np.ndim(out) else float(out)


def fundamental_solution_derivative(dim: int, r):
    """``d u*/dr``."""
    arr = _as_radius(r)
    if np.any(arr == 0):
        raise ValueError("fundamental solution is singular at r = 0")
    out = -1.0 / (2.0 * np.pi * arr) if dim == 2 else -1.0 / (4.0 * np.pi * arr ** 2)
    return out if np.ndim(out) else float(out)


def gs_rbf_phi(m: int, dim: int, r, f_at_source: float = 1.0,
               include_f: bool = True):
    """GS-RBF ``r^(2m) u*(r) f`` built from the weight ``h = r^(2m)``.

    With ``include_f=False`` the forcing factor is dropped, which is the
    boundary-source form ``p u*``. The removable value at r = 0 is 0 when
    ``m >= 1``.
    """
    arr = _as_radius(r)
    if m < 0:
        raise ValueError("m must be non-negative")
    zero = arr == 0
    if m == 0 and np.any(zero):
        raise ValueError("gs_rbf_phi with m = 0 is unbounded at r = 0")
    safe = np.where(zero, np.ones_like(arr), arr)
    val = safe ** (2 * m) * _u_star(safe, dim)
    val = np.where(zero, np.zeros_like(val), val)
    if include_f:
        val = val * f_at_source
    return val if np.ndim(val) else float(val)


# ---------------------------------------------------------------------------
# phi

def _phi_raw(kernel: KernelSpec, r):
    fam = kernel.family
    if fam == "linear":
        return r
    if fam == "polyharmonic-odd":
        return r ** kernel.exponent
    if fam in ("tps", "tps-modified"):
        val = r * r * _safe_log(r)
        return val + r * r + 1.0 if fam == "tps-modified" else val
    if fam == "mq":
        return np.sqrt(r * r + kernel.shape_c ** 2)
    if fam == "gaussian":
        return np.exp(-(r / kernel.shape_c) ** 2)
    # gs-rbf
    if kernel.order == 0 and np.any(r == 0):
        raise ValueError("gs-rbf with m = 0 is unbounded at r = 0")
    safe = np.where(r > 0, r, np.ones_like(r))
    val = safe ** (2 * kernel.order) * _u_star(safe, kernel.dim)
    return np.where(r > 0, val, np.zeros_like(val))


def eval_phi(kernel: KernelSpec, r):
    """Evaluate the kernel at radius/radii ``r``."""
    arr = _as_radius(r)
    if kernel.prewavelet:
        arr = np.sqrt(arr * arr + kernel.prewavelet_c ** 2)
    out = _phi_raw(kernel, arr)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# psi

def _mq_pair(c: float, d: int):
    c2, c3 = c * c, c ** 3
    if d == 2:
        def psi(r):
            s = np.sqrt(r * r + c2)
            return (4.0 * c2 + r * r) * s / 9.0 - c3 / 3.0 * np.log(c + s)
        return psi

    c4 = c ** 4

    def psi(r):
        s = np.sqrt(r * r + c2)
        safe = np.where(r > 0, r, np.ones_like(r))
        tail = np.where(r > 0, np.arcsinh(safe / c) / safe, np.full_like(r, 1.0 / c))
        return (2.0 * r * r + 5.0 * c2) * s / 24.0 + c4 / 8.0 * tail
    return psi


def _pair_factory(kernel: KernelSpec):
    d = kernel.dim
    fam = kernel.family
    if kernel.prewavelet:
        # sqrt(r^2 + c^2) is the multiquadric; other shifted families have no
        # closed-form pair here
        if fam == "linear":
            return _mq_pair(kernel.prewavelet_c, d)
        raise UnsupportedPairError(
            f"no analytic particular solution for {kernel.grammar} in {d}D "
            "(prewavelet shift is only paired for the linear kernel)")
    if fam == "linear":
        return _power_pair(1, d)
    if fam == "polyharmonic-odd":
        return _power_pair(kernel.exponent, d)
    if fam == "tps":
        return _powerlog_pair(2, d)
    if fam == "tps-modified":
        a, b, c = _powerlog_pair(2, d), _power_pair(2, d), _power_pair(0, d)
        return lambda r: a(r) + b(r) + c(r)
    if fam == "mq":
        return _mq_pair(kernel.shape_c, d)
    if fam == "gs-rbf":
        m = kernel.order
        if d == 2:
            inner = _powerlog_pair(2 * m, 2)
            return lambda r: -inner(r) / (2.0 * np.pi)
        inner = _power_pair(2 * m - 1, 3)
        return lambda r: inner(r) / (4.0 * np.pi)
    raise UnsupportedPairError(
        f"no analytic particular solution registered for {kernel.grammar} in {d}D")


def has_pair(kernel: KernelSpec) -> bool:
    try:
        _pair_factory(kernel)
    except UnsupportedPairError:
        return False
    return True


def eval_psi(kernel: KernelSpec, r):
    """Closed-form ``psi`` with ``lap psi = phi`` in ``kernel.dim`` dimensions."""
    psi = _pair_factory(kernel)
    out = psi(_as_radius(r))
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# finite-difference oracle

def fd_radial_laplacian(func, r, dim: int, h: float = 1e-5):
    """Central-difference ``f'' + (dim-1)/r f'`` evaluated in long double."""
    r = np.asarray(r, dtype=np.longdouble)
    h = np.longdouble(h)
    fp, f0, fm = func(r + h), func(r), func(r - h)
    d1 = (fp - fm) / (2 * h)
    d2 = (fp - 2 * f0 + fm) / (h * h)
    return d2 + (dim - 1) * d1 / r


def pair_check(kernel: KernelSpec, radii=None, h: float = 1e-5) -> float:
    """Max relative error between the FD Laplacian of psi and phi."""
    if radii is None:
        radii = np.geomspace(0.05, 3.0, 20)
    psi = _pair_factory(kernel)
    radii = np.asarray(radii, dtype=np.longdouble)
    lap = fd_radial_laplacian(psi, radii, kernel.dim, h)
    shifted = (np.sqrt(radii * radii + np.longdouble(kernel.prewavelet_c) ** 2)
               if kernel.prewavelet else radii)
    phi = _phi_raw(kernel, shifted)
    return float(np.max(np.abs(lap - phi) / np.abs(phi)))


@functools.lru_cache(maxsize=None)
def verify_pair(kernel: KernelSpec, rtol: float = 1e-6) -> None:
    """Raise unless the registered pair passes the FD oracle (cached)."""
    err = pair_check(kernel)
    if not err <= rtol:
        raise UnsupportedPairError(
            f"pair for {kernel.grammar} in {kernel.dim}D fails the Laplacian "
            f"check (relative error {err:.3g})")


# ---------------------------------------------------------------------------

def timespace_radius(x, t: float, x_j, t_j: float, c: float) -> float:
    """``sqrt(|x - x_j|^2 + c (t - t_j)^2)`` with ``c`` the wave velocity."""
    if not c > 0:
        raise ValueError("wave velocity c must be positive")
    dx = np.asarray(x, dtype=float) - np.asarray(x_j, dtype=float)
    return math.sqrt(float(np.dot(dx, dx)) + c * (t - t_j) ** 2)
