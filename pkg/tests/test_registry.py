import numpy as np
import pytest

from rbfqmc.registry import ProblemEntry, available, fd_laplacian, lookup, register
from rbfqmc.studies import probe_points

MINIMUM = {"const1-disk", "sin-square", "gaussian-bump-square", "linear-xy-square",
           "mixed-bc-square"}


def test_minimum_registry():
    assert MINIMUM <= set(available())


def test_const1_disk():
    p = lookup("const1-disk")
    x = np.array([[0.0, 0.0], [0.3, 0.4]])
    np.testing.assert_array_equal(p.f(x), 1.0)
    np.testing.assert_allclose(p.newton_potential(x), [0.25, (1 - 0.25) / 4])


def test_sin_square():
    p = lookup("sin-square")
    x = np.array([[0.25, 0.5]])
    u = np.sin(np.pi * 0.25)
    assert p.exact_u(x)[0] == pytest.approx(u)
    assert p.f(x)[0] == pytest.approx(-2 * np.pi ** 2 * u)
    assert np.all(p.dirichlet(np.array([[0.0, 0.3], [1.0, 0.7]])) == 0)


def test_unknown_lists_contents():
    with pytest.raises(KeyError, match="sin-square"):
        lookup("foo")


@pytest.mark.parametrize("name", sorted(MINIMUM))
def test_laplacian_matches_forcing(name):
    p = lookup(name)
    if p.exact_u is None:
        pytest.skip("no exact solution")
    x = probe_points(p.domain, 20).astype(np.longdouble)
    lap = np.asarray(fd_laplacian(p.exact_u, x, 1e-4), float)
    np.testing.assert_allclose(lap, p.f(np.asarray(x, float)), atol=1e-6)


def test_mixed_neumann_data_matches_normal_derivative():
    p = lookup("mixed-bc-square")
    y = np.linspace(0.05, 0.95, 9)
    pts = np.column_stack([np.ones_like(y), y])
    h = 1e-6
    dudn = (p.exact_u(pts + [h, 0]) - p.exact_u(pts - [h, 0])) / (2 * h)
    np.testing.assert_allclose(p.neumann(pts), dudn, atol=1e-7)
    assert p.neumann_mask(pts).all()
    assert not p.neumann_mask(np.array([[1.0, 0.0], [0.0, 0.5]])).any()


def test_bad_entry_rejected():
    bad = ProblemEntry("bad", "u = x^2 with the wrong f", "unit-square",
                       f=lambda x: np.zeros(len(x)),
                       exact_u=lambda x: np.asarray(x)[..., 0] ** 2)
    with pytest.raises(ValueError, match="bad"):
        register(bad)
    assert "bad" not in available()
