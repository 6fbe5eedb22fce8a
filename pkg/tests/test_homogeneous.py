import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rbfqmc import geometry as g
from rbfqmc.homogeneous import (BoundaryConditions, MfsRankError,
                                corrected_boundary_data, mfs_solve, mfs_sources,
                                solve_poisson, write_field_csv)
from rbfqmc.kernels import parse_kernel
from rbfqmc.registry import fd_laplacian, lookup
from rbfqmc.studies import probe_points

SQUARE = g.make_domain("square")
DISK = g.make_domain("disk")
TPS = parse_kernel("tps")
SADDLE = lambda x: np.asarray(x)[..., 0] ** 2 - np.asarray(x)[..., 1] ** 2


class NormalSpy:
    """Boundary stand-in that fails if normals are read."""

    def __init__(self, nodes):
        self.boundary = nodes.boundary

    @property
    def boundary_normals(self):
        raise AssertionError("normals queried on a pure Dirichlet problem")


def test_corrected_data_no_particular():
    b = g.sample_boundary(DISK, 20)
    bc = BoundaryConditions(SADDLE)
    data, neu = corrected_boundary_data(bc, None, b, DISK)
    np.testing.assert_array_equal(data, SADDLE(b.points))
    assert not neu.any()


def test_corrected_data_subtracts_particular():
    b = g.sample_boundary(SQUARE, 24)
    up = lambda x: np.asarray(x)[..., 0] * np.asarray(x)[..., 1]
    bc = BoundaryConditions(lambda x: np.zeros(len(x)))
    data, _ = corrected_boundary_data(bc, up, b, SQUARE)
    np.testing.assert_allclose(data, -up(b.points), atol=1e-15)


def test_pure_dirichlet_does_not_query_normals():
    b = g.sample_boundary(SQUARE, 16)
    bc = BoundaryConditions(lambda x: np.zeros(len(x)))
    corrected_boundary_data(bc, lambda x: np.ones(len(x)), NormalSpy(b), SQUARE)


def test_all_neumann_rejected():
    bc = BoundaryConditions(SADDLE, lambda x: np.zeros(len(x)),
                            lambda x: np.ones(len(x), bool))
    with pytest.raises(ValueError):
        bc.kinds(g.sample_boundary(DISK, 8).points)


def test_zero_data_zero_weights():
    b = g.sample_boundary(DISK, 40)
    model = mfs_solve(np.zeros(40), b, DISK)
    assert np.all(model.weights == 0)
    assert model(np.array([0.2, 0.3])) == 0


def test_mfs_saddle_on_disk():
    b = g.sample_boundary(DISK, 64)
    model = mfs_solve(SADDLE(b.points), b, DISK, offset_factor=2.0, n_sources=64)
    assert model(np.array([0.3, 0.1])) == pytest.approx(0.08, abs=1e-6)


def test_sources_outside_domain():
    for dom in (SQUARE, DISK, g.make_domain("ball")):
        src = mfs_sources(dom, 40, 2.0)
        assert not np.any(dom.contains(src))
        assert np.all(dom.distance_to_boundary(src) > 0)
    with pytest.raises(ValueError):
        mfs_sources(DISK, 10, 1.0)


def test_rank_deficiency_raises():
    # more sources than collocation points on a badly inflated circle
    b = g.sample_boundary(DISK, 30)
    with pytest.raises(MfsRankError):
        mfs_solve(SADDLE(b.points), b, DISK, offset_factor=8.0, n_sources=60)


@pytest.mark.parametrize("name", ["sin-square", "const1-disk", "linear-xy-square",
                                  "mixed-bc-square"])
def test_harmonic_part_is_harmonic(name):
    p = lookup(name)
    dom = p.domain
    nodes = g.generate(dom, "halton", 300, 0, 80)
    sol = solve_poisson(p.f, BoundaryConditions.from_problem(p), dom, TPS, nodes)
    v = sol.harmonic
    x = probe_points(dom, 5).astype(np.longdouble)
    lap = np.asarray(fd_laplacian(v, x, 1e-4), float)
    vmax = float(np.max(np.abs(v(probe_points(dom)))))
    assert np.max(np.abs(lap)) <= 1e-6 * (1 + vmax)


@pytest.mark.parametrize("name", ["sin-square", "const1-disk", "linear-xy-square",
                                  "mixed-bc-square"])
def test_boundary_fidelity(name):
    p = lookup(name)
    dom = p.domain
    nodes = g.generate(dom, "halton", 300, 0, 80)
    sol = solve_poisson(p.f, BoundaryConditions.from_problem(p), dom, TPS, nodes)
    held = g.sample_boundary(dom, 173).points
    if p.neumann_mask is not None:
        held = held[~p.neumann_mask(held)]
    mismatch = np.max(np.abs(sol(held) - p.dirichlet(held)))
    assert mismatch <= 10 * sol.harmonic.residual


def test_pure_mfs_when_forcing_zero():
    p = lookup("linear-xy-square")
    nodes = g.generate(SQUARE, "halton", 50, 0, 80)
    sol = solve_poisson(p.f, BoundaryConditions.from_problem(p), SQUARE, TPS, nodes)
    assert sol.particular is None
    direct = mfs_solve(p.dirichlet(nodes.boundary), nodes.boundary_only(), SQUARE)
    x = probe_points(SQUARE, 20)
    np.testing.assert_array_equal(sol(x), direct(x))


def test_manufactured_solve():
    p = lookup("sin-square")
    nodes = g.generate(SQUARE, "halton", 300, 0, 80)
    sol = solve_poisson(p.f, BoundaryConditions.from_problem(p), SQUARE, TPS, nodes)
    x = probe_points(SQUARE, 100)
    exact = p.exact_u(x)
    assert np.max(np.abs(sol(x) - exact)) / np.max(np.abs(exact)) <= 1e-2


def test_mixed_bc_solve():
    p = lookup("mixed-bc-square")
    nodes = g.generate(SQUARE, "halton", 300, 0, 80)
    sol = solve_poisson(p.f, BoundaryConditions.from_problem(p), SQUARE, TPS, nodes)
    x = probe_points(SQUARE, 100)
    assert np.max(np.abs(sol(x) - p.exact_u(x))) <= 1e-2


def test_qmc_route_runs():
    p = lookup("const1-disk")
    nodes = g.generate(DISK, "halton", 1024, 0, 80)
    sol = solve_poisson(p.f, BoundaryConditions.from_problem(p), DISK, None, nodes,
                        method="qmc")
    assert abs(sol(np.zeros(2)) - p.exact_u(np.zeros(2))) <= 0.01


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 5))
def test_scaling_linearity(a):
    p = lookup("sin-square")
    nodes = g.generate(SQUARE, "halton", 150, 0, 60)
    zero = BoundaryConditions(lambda x: np.zeros(len(x)))
    x = probe_points(SQUARE, 10)
    base = solve_poisson(p.f, zero, SQUARE, TPS, nodes)(x)
    scaled = solve_poisson(lambda y: a * p.f(y), zero, SQUARE, TPS, nodes)(x)
    np.testing.assert_allclose(scaled, a * base, atol=1e-8 * (1 + a))


def test_superposition():
    p = lookup("sin-square")
    nodes = g.generate(SQUARE, "halton", 150, 0, 60)
    D = lambda x: np.asarray(x)[..., 0] + 2 * np.asarray(x)[..., 1]
    zero_f = lambda x: np.zeros(len(x))
    x = probe_points(SQUARE, 10)
    one_shot = solve_poisson(p.f, BoundaryConditions(D), SQUARE, TPS, nodes)(x)
    part = solve_poisson(p.f, BoundaryConditions(lambda y: np.zeros(len(y))), SQUARE,
                         TPS, nodes)(x)
    bc_only = solve_poisson(zero_f, BoundaryConditions(D), SQUARE, TPS, nodes)(x)
    np.testing.assert_allclose(one_shot, part + bc_only, atol=1e-10)


def test_field_csv(tmp_path):
    p = lookup("sin-square")
    nodes = g.generate(SQUARE, "halton", 100, 0, 40)
    sol = solve_poisson(p.f, BoundaryConditions.from_problem(p), SQUARE, TPS, nodes)
    x = probe_points(SQUARE, 7)
    path = tmp_path / "f.csv"
    write_field_csv(sol, x, path, p.exact_u)
    data = np.genfromtxt(path, delimiter=",", names=True)
    np.testing.assert_array_equal(data["u"], sol(x))
    np.testing.assert_array_equal(data["abs_error"], np.abs(sol(x) - p.exact_u(x)))


def test_default_source_count_cap():
    from rbfqmc.homogeneous import default_source_count

    assert default_source_count(80) == 40
    assert default_source_count(400) == 66
    assert default_source_count(400, 4.0) == 32
    assert default_source_count(10) == 8
    assert default_source_count(4000, 2.0, 3) == 34 ** 2
    with pytest.raises(ValueError):
        default_source_count(80, 1.0)


def test_large_boundary_default_sources_full_rank():
    b = g.sample_boundary(SQUARE, 400)
    model = mfs_solve(b.points.sum(axis=1), b, SQUARE)
    assert model.residual < 1e-8


def test_ball_harmonic_recovery():
    ball = g.make_domain("ball")
    h = lambda x: np.asarray(x)[..., 0] * np.asarray(x)[..., 1] + np.asarray(x)[..., 2]
    b = g.sample_boundary(ball, 300)
    model = mfs_solve(h(b.points), b, ball)
    x = np.array([[0.2, -0.1, 0.3], [0.0, 0.4, -0.2]])
    np.testing.assert_allclose(model(x), h(x), atol=1e-6)
