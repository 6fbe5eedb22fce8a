"""Domains, node placement strategies and the node-distribution statistic.

Four placement strategies are provided: a uniform tensor grid, seeded
pseudo-random filling, the Halton sequence, and a boundary-inclined tensor
grid built from Chebyshev-Gauss-Lobatto abscissas. Interior and boundary
nodes are always generated as separate populations.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

__all__ = [
    "Domain",
    "NodeSet",
    "SigmaProfile",
    "make_domain",
    "radical_inverse",
    "halton_sequence",
    "chebyshev_lobatto_01",
    "generate_uniform",
    "generate_halton",
    "generate_pseudo_random",
    "generate_boundary_inclined",
    "sample_boundary",
    "sigma_statistic",
    "write_nodes_csv",
    "read_nodes_csv",
]

STRATEGIES = ("uniform", "pseudo-random", "halton", "boundary-inclined")

# min pairwise distance below this fraction of the diameter is rejected
MIN_SEPARATION = 1e-10

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)

_ALIASES = {
    "square": "unit-square",
    "cube": "unit-cube",
    "disk": "unit-disk",
    "ball": "unit-ball",
}


@dataclass(frozen=True)
class Domain:
    """Unit square/cube ``[0, 1]^d`` or unit disk/ball centred at the origin."""

    kind: str

    def __post_init__(self):
        if self.kind not in _ALIASES.values():
            raise ValueError(
                f"unknown domain kind {self.kind!r}; "
                f"expected one of {sorted(_ALIASES.values())}")

    @property
    def dim(self) -> int:
        return 3 if self.kind in ("unit-cube", "unit-ball") else 2

    @property
    def is_box(self) -> bool:
        return self.kind in ("unit-square", "unit-cube")

    @property
    def measure(self) -> float:
        return {
            "unit-square": 1.0,
            "unit-cube": 1.0,
            "unit-disk": math.pi,
            "unit-ball": 4.0 * math.pi / 3.0,
        }[self.kind]

    @property
    def boundary_measure(self) -> float:
        return {
            "unit-square": 4.0,
            "unit-cube": 6.0,
            "unit-disk": 2.0 * math.pi,
            "unit-ball": 4.0 * math.pi,
        }[self.kind]

    @property
    def diameter(self) -> float:
        return math.sqrt(self.dim) if self.is_box else 2.0

    @property
    def centroid(self) -> np.ndarray:
        return np.full(self.dim, 0.5) if self.is_box else np.zeros(self.dim)

    @property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        if self.is_box:
            return np.zeros(self.dim), np.ones(self.dim)
        return -np.ones(self.dim), np.ones(self.dim)

    def contains(self, x) -> np.ndarray:
        """Strict interior membership for points of shape ``(..., d)``."""
        x = np.asarray(x, dtype=float)
        if self.is_box:
            return np.all((x > 0.0) & (x < 1.0), axis=-1)
        return np.einsum("...i,...i->...", x, x) < 1.0

    def distance_to_boundary(self, x) -> np.ndarray:
        """Unsigned distance to the boundary (exact for these shapes inside)."""
        x = np.asarray(x, dtype=float)
        if self.is_box:
            inside = np.min(np.minimum(x, 1.0 - x), axis=-1)
            outside = np.linalg.norm(
                np.maximum(np.maximum(-x, x - 1.0), 0.0), axis=-1)
            return np.where(inside >= 0.0, inside, outside)
        return np.abs(1.0 - np.linalg.norm(x, axis=-1))


def make_domain(kind: str) -> Domain:
    """Build a domain from its kind, accepting short aliases like ``disk``."""
    return Domain(_ALIASES.get(kind, kind))


@dataclass(frozen=True, eq=False)
class NodeSet:
    """Labelled point collection.

    ``labels`` holds ``'I'`` (interior) or ``'B'`` (boundary) per point and
    ``normals`` holds the outward unit normal of boundary points (NaN rows
    for interior points). Arrays are made read-only on construction.
    """

    points: np.ndarray
    labels: np.ndarray
    normals: np.ndarray
    strategy: str = "custom"
    seed: int = 0

    def __post_init__(self):
        points = np.array(self.points, dtype=float, ndmin=2)
        labels = np.array(self.labels, dtype="<U1").reshape(-1)
        normals = np.array(self.normals, dtype=float).reshape(points.shape)
        if labels.shape[0] != points.shape[0]:
            raise ValueError("labels and points differ in length")
        if not np.all(np.isin(labels, ("I", "B"))):
            raise ValueError("labels must be 'I' or 'B'")
        for arr in (points, labels, normals):
            arr.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "normals", normals)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def interior_mask(self) -> np.ndarray:
        return self.labels == "I"

    @property
    def boundary_mask(self) -> np.ndarray:
        return self.labels == "B"

    @property
    def N(self) -> int:
        return int(np.count_nonzero(self.interior_mask))

    @property
    def L(self) -> int:
        return int(np.count_nonzero(self.boundary_mask))

    @property
    def interior(self) -> np.ndarray:
        return self.points[self.interior_mask]

    @property
    def boundary(self) -> np.ndarray:
        return self.points[self.boundary_mask]

    @property
    def boundary_normals(self) -> np.ndarray:
        return self.normals[self.boundary_mask]

    def interior_only(self) -> NodeSet:
        m = self.interior_mask
        return NodeSet(self.points[m], self.labels[m], self.normals[m],
                       self.strategy, self.seed)

    def boundary_only(self) -> NodeSet:
        m = self.boundary_mask
        return NodeSet(self.points[m], self.labels[m], self.normals[m],
                       self.strategy, self.seed)

    def min_separation(self) -> float:
        return min_separation(self.points)

    @classmethod
    def combine(cls, interior: np.ndarray, boundary: NodeSet | None,
                strategy: str, seed: int = 0) -> NodeSet:
        interior = np.asarray(interior, dtype=float)
        d = interior.shape[1] if interior.size else boundary.dim
        interior = interior.reshape(-1, d)
        pts = [interior]
        labels = [np.full(len(interior), "I")]
        normals = [np.full(interior.shape, np.nan)]
        if boundary is not None and len(boundary):
            pts.append(boundary.points)
            labels.append(boundary.labels)
            normals.append(boundary.normals)
        return cls(np.vstack(pts), np.concatenate(labels), np.vstack(normals),
                   strategy, seed)


@dataclass(frozen=True)
class SigmaProfile:
    values: np.ndarray
    mean: float = field(init=False)
    spread: float = field(init=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mean", float(np.mean(values)))
        object.__setattr__(self, "spread", float(np.std(values)))


def min_separation(points) -> float:
    points = np.asarray(points, dtype=float)
    if len(points) < 2:
        return math.inf
    dist, _ = cKDTree(points).query(points, k=2)
    return float(np.min(dist[:, 1]))


# ---------------------------------------------------------------------------
# low-discrepancy and spectral abscissas

def radical_inverse(index, base: int):
    """Van der Corput radical inverse of non-negative integer(s) ``index``."""
    index = np.asarray(index, dtype=np.int64)
    out = np.zeros(index.shape, dtype=float)
    n = index.copy()
    scale = 1.0 / base
    while np.any(n > 0):
        n, digit = np.divmod(n, base)
        out += digit * scale
        scale /= base
    return out


def halton_sequence(n: int, dim: int, start: int = 1) -> np.ndarray:
    """Points ``start, ..., start + n - 1`` of the Halton sequence in ``[0,1)^dim``.

    Bases are the first ``dim`` primes. Index 1 maps to ``(1/2, 1/3, ...)``.
    """
    if dim > len(_PRIMES):
        raise ValueError(f"halton_sequence supports dim <= {len(_PRIMES)}")
    idx = np.arange(start, start + n, dtype=np.int64)
    return np.column_stack([radical_inverse(idx, b) for b in _PRIMES[:dim]])


def chebyshev_lobatto_01(n: int) -> np.ndarray:
    """Chebyshev-Gauss-Lobatto abscissas ``(1 - cos(k pi/(n-1)))/2`` on [0, 1]."""
    if n < 2:
        raise ValueError("need at least 2 Lobatto points")
    k = np.arange(n)
    x = 0.5 * (1.0 - np.cos(np.pi * k / (n - 1)))
    # exact endpoints and midpoint; cos() leaves ~1e-17 noise there
    x[0], x[-1] = 0.0, 1.0
    x = 0.5 * (x + (1.0 - x[::-1]))
    return x


# ---------------------------------------------------------------------------
# boundary sampling

def _box_face_normal(x: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Outward normal on the unit box; edges and corners get the normalised
    sum of the adjacent face normals."""
    n = np.where(np.abs(x) <= tol, -1.0, 0.0) + np.where(
        np.abs(x - 1.0) <= tol, 1.0, 0.0)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def _fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    theta = np.pi * (3.0 - math.sqrt(5.0)) * k
    return np.column_stack([rho * np.cos(theta), rho * np.sin(theta), z])


def sample_boundary(domain: Domain, L: int) -> NodeSet:
    """``L`` boundary points equally spaced in the boundary parameter.

    Disk: angles ``2 pi j / L`` starting at angle 0. Square: perimeter
    arc-length ``(j + 1/2) * 4 / L`` starting at the origin corner and running
    counter-clockwise, so ``L = 4`` gives the four edge midpoints. Ball: a
    Fibonacci spiral. Cube: a cell-centred ``k x k`` grid per face with
    ``k = round(sqrt(L / 6))``, so the count is rounded to ``6 k^2``.
    """
    if L < 3:
        raise ValueError(f"sample_boundary needs L >= 3, got {L}")
    if domain.kind == "unit-disk":
        t = 2.0 * np.pi * np.arange(L) / L
        pts = np.column_stack([np.cos(t), np.sin(t)])
        normals = pts.copy()
    elif domain.kind == "unit-ball":
        pts = _fibonacci_sphere(L)
        normals = pts.copy()
    elif domain.kind == "unit-square":
        s = (np.arange(L) + 0.5) * 4.0 / L
        edge = np.minimum(np.floor(s), 3).astype(int)
        u = s - edge
        pts = np.empty((L, 2))
        pts[edge == 0] = np.column_stack([u[edge == 0], np.zeros(np.sum(edge == 0))])
        pts[edge == 1] = np.column_stack([np.ones(np.sum(edge == 1)), u[edge == 1]])
        pts[edge == 2] = np.column_stack([1.0 - u[edge == 2], np.ones(np.sum(edge == 2))])
        pts[edge == 3] = np.column_stack([np.zeros(np.sum(edge == 3)), 1.0 - u[edge == 3]])
        normals = _box_face_normal(pts)
    else:
        k = max(1, int(round(math.sqrt(L / 6.0))))
        g = (np.arange(k) + 0.5) / k
        a, b = (c.ravel() for c in np.meshgrid(g, g, indexing="ij"))
        faces = []
        for axis in range(3):
            others = [i for i in range(3) if i != axis]
            for side in (0.0, 1.0):
                face = np.empty((k * k, 3))
                face[:, axis] = side
                face[:, others[0]] = a
                face[:, others[1]] = b
                faces.append(face)
        pts = np.vstack(faces)
        normals = _box_face_normal(pts)
    return NodeSet(pts, np.full(len(pts), "B"), normals, "boundary", 0)


def default_boundary_count(domain: Domain, m: int) -> int:
    """Boundary count matching the interior density of ``m`` points."""
    if domain.dim == 2:
        L = domain.boundary_measure * math.sqrt(m / domain.measure)
    else:
        L = domain.boundary_measure * (m / domain.measure) ** (2.0 / 3.0)
    return max(3, int(round(L)))


# ---------------------------------------------------------------------------
# interior strategies

def _tensor_grid(axis: np.ndarray, dim: int) -> np.ndarray:
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.column_stack([c.ravel() for c in mesh])


def _box_tensor_nodeset(domain: Domain, axis: np.ndarray, strategy: str) -> NodeSet:
    pts = _tensor_grid(axis, domain.dim)
    on_bnd = np.any((pts == 0.0) | (pts == 1.0), axis=1)
    normals = np.full(pts.shape, np.nan)
    normals[on_bnd] = _box_face_normal(pts[on_bnd])
    labels = np.where(on_bnd, "B", "I")
    # interior first, boundary after
    order = np.argsort(on_bnd, kind="stable")
    return NodeSet(pts[order], labels[order], normals[order], strategy, 0)


def generate_uniform(domain: Domain, n_per_axis: int) -> NodeSet:
    """Equispaced tensor grid.

    On the square/cube the grid's outer layer becomes the boundary population.
    On the disk/ball the grid spans the bounding box, keeps strictly interior
    points, and the boundary is sampled at the grid spacing.
    """
    if n_per_axis < 2:
        raise ValueError(f"n_per_axis must be >= 2, got {n_per_axis}")
    if domain.is_box:
        axis = np.linspace(0.0, 1.0, n_per_axis)
        return _box_tensor_nodeset(domain, axis, "uniform")
    axis = np.linspace(-1.0, 1.0, n_per_axis)
    grid = _tensor_grid(axis, domain.dim)
    interior = grid[domain.contains(grid)]
    h = 2.0 / (n_per_axis - 1)
    if domain.dim == 2:
        L = int(round(domain.boundary_measure / h))
    else:
        L = int(round(domain.boundary_measure / h ** 2))
    return NodeSet.combine(interior, sample_boundary(domain, max(L, 3)), "uniform")


def _fill_by_rejection(domain: Domain, m: int, draw) -> np.ndarray:
    """Pull candidate batches from ``draw(count)`` (unit-cube samples) until
    ``m`` interior points are collected, preserving sequence order."""
    lo, hi = domain.bounding_box
    out = []
    have = 0
    batch = m
    while have < m:
        cand = lo + (hi - lo) * draw(max(batch, 16))
        cand = cand[domain.contains(cand)]
        out.append(cand)
        have += len(cand)
        batch = int(1.5 * (m - have)) + 8
    return np.vstack(out)[:m]


def generate_halton(domain: Domain, m: int, seed: int = 0,
                    n_boundary: int | None = None) -> NodeSet:
    """First ``m`` interior Halton points, starting at index ``1 + seed``.

    Points are mapped to the bounding box and filtered by membership; the
    sequence is read further until ``m`` interior points exist. ``n_boundary``
    boundary points (default: matched density, 0 disables) are appended.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    offset = int(seed)
    diam = domain.diameter
    while True:
        cursor = [1 + offset]

        def draw(count):
            pts = halton_sequence(count, domain.dim, start=cursor[0])
            cursor[0] += count
            return pts

        interior = _fill_by_rejection(domain, m, draw)
        if min_separation(interior) >= MIN_SEPARATION * diam:
            break
        offset += 1
    boundary = _boundary_for(domain, m, n_boundary)
    return NodeSet.combine(interior, boundary, "halton", seed)


def generate_pseudo_random(domain: Domain, m: int, seed: int = 0,
                           n_boundary: int | None = None) -> NodeSet:
    """``m`` interior points from a seeded uniform generator (rejection)."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    offset = 0
    diam = domain.diameter
    while True:
        rng = np.random.default_rng([int(seed), offset])
        interior = _fill_by_rejection(
            domain, m, lambda count: rng.random((count, domain.dim)))
        if min_separation(interior) >= MIN_SEPARATION * diam:
            break
        offset += 1
    boundary = _boundary_for(domain, m, n_boundary)
    return NodeSet.combine(interior, boundary, "pseudo-random", seed)


def generate_boundary_inclined(domain: Domain, m: int) -> NodeSet:
    """Tensor Chebyshev-Gauss-Lobatto grid with ``round(m ** (1/d))`` points per axis.

    Only the square and cube are supported. The outer layer of the grid is the
    boundary population.
    """
    if not domain.is_box:
        raise ValueError(
            f"boundary-inclined nodes need a tensor-product domain "
            f"(unit-square or unit-cube); {domain.kind} has no tensor structure")
    if m < 4:
        raise ValueError(f"m must be >= 4, got {m}")
    n = max(2, int(round(m ** (1.0 / domain.dim))))
    return _box_tensor_nodeset(domain, chebyshev_lobatto_01(n), "boundary-inclined")


def _boundary_for(domain: Domain, m: int, n_boundary: int | None) -> NodeSet | None:
    if n_boundary is None:
        n_boundary = default_boundary_count(domain, m)
    if n_boundary == 0:
        return None
    return sample_boundary(domain, n_boundary)


def generate(domain: Domain, strategy: str, m: int, seed: int = 0,
             n_boundary: int | None = None) -> NodeSet:
    """Dispatch on strategy name with ``m`` as the nominal interior count.

    Grid strategies choose the per-axis count whose interior is closest to
    ``m``; for them ``n_boundary`` is ignored.
    """
    if strategy == "halton":
        return generate_halton(domain, m, seed, n_boundary)
    if strategy == "pseudo-random":
        return generate_pseudo_random(domain, m, seed, n_boundary)
    if strategy == "uniform":
        n = _grid_axis_count(domain, m)
        return generate_uniform(domain, n)
    if strategy == "boundary-inclined":
        n = _grid_axis_count(domain, m)
        return generate_boundary_inclined(domain, n ** domain.dim)
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


def _grid_axis_count(domain: Domain, m: int) -> int:
    d = domain.dim
    if domain.is_box:
        return max(2, int(round(m ** (1.0 / d))) + 2)
    # fraction of the bounding box inside the disk/ball
    frac = domain.measure / 2.0 ** d
    return max(2, int(round((m / frac) ** (1.0 / d))) + 1)


# ---------------------------------------------------------------------------

def sigma_statistic(nodes, domain: Domain) -> SigmaProfile:
    """Per-node ``sigma(x_i) = (V / M) * sum_k |x_i - x_k|``."""
    pts = nodes.points if isinstance(nodes, NodeSet) else np.asarray(nodes, float)
    pts = np.atleast_2d(pts)
    if len(pts) == 0:
        raise ValueError("sigma_statistic needs at least one node")
    sums = np.concatenate([cdist(pts[s:s + 1024], pts).sum(axis=1)
                           for s in range(0, len(pts), 1024)])
    return SigmaProfile(domain.measure / len(pts) * sums)


# ---------------------------------------------------------------------------
# CSV

def _fmt(v: float) -> str:
    return "" if np.isnan(v) else f"{v:.17g}"


def write_nodes_csv(nodes: NodeSet, path) -> None:
    coords = ["x", "y", "z"][: nodes.dim]
    ncols = ["nx", "ny", "nz"][: nodes.dim]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(coords + ["label"] + ncols)
        for p, lab, n in zip(nodes.points, nodes.labels, nodes.normals):
            row = [_fmt(v) for v in p] + [str(lab)]
            row += [_fmt(v) for v in n] if lab == "B" else [""] * nodes.dim
            w.writerow(row)


def read_nodes_csv(path, strategy: str = "file", seed: int = 0) -> NodeSet:
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        dim = header.index("label")
        pts, labels, normals = [], [], []
        for row in reader:
            pts.append([float(v) for v in row[:dim]])
            labels.append(row[dim])
            normals.append([float(v) if v else np.nan for v in row[dim + 1:]])
    return NodeSet(np.array(pts).reshape(-1, dim), np.array(labels),
                   np.array(normals).reshape(-1, dim), strategy, seed)
