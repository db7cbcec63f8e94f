import numpy as np
import pytest
from numpy.testing import assert_allclose

from oddaxis import search


def test_nelder_mead_quadratic():
    x, f, _ = search.nelder_mead(lambda x: ((x - [1.0, -2.0]) ** 2).sum(), [0.0, 0.0], 0.5,
                                 xtol=1e-12, max_iter=2000)
    assert_allclose(x, [1.0, -2.0], atol=1e-6)
    assert f < 1e-12


def test_nelder_mead_stops_at_target():
    calls = []

    def f(x):
        calls.append(1)
        return float(np.abs(x).sum())
    _, fx, it = search.nelder_mead(f, [3.0], 1.0, ftarget=0.5, max_iter=1000)
    assert fx <= 0.5
    assert it < 50


def test_sphere_nelder_mead_stays_on_sphere():
    target = np.array([0.0, 0.6, 0.8])
    s, f, _ = search.sphere_nelder_mead(lambda s: np.linalg.norm(s - target),
                                        np.array([1.0, 0.0, 0.0]), 0.3, xtol=1e-12,
                                        max_iter=2000)
    assert_allclose(np.linalg.norm(s), 1.0, atol=1e-15)
    assert_allclose(s, target, atol=1e-6)


def test_tangent_basis_orthonormal(rng):
    p = rng.standard_normal(5)
    p /= np.linalg.norm(p)
    B = search.tangent_basis(p)
    assert B.shape == (5, 4)
    assert_allclose(B.T @ B, np.eye(4), atol=1e-14)
    assert_allclose(B.T @ p, 0, atol=1e-14)


def test_bisect_sign_change_finds_zero():
    a, b = np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    s = search.bisect_sign_change(lambda s: s[0] - s[1], a, b)
    assert abs(s[0] - s[1]) < 1e-15


def test_canonical_sign_picks_one_of_pair():
    s = np.array([0.3, -0.4, 0.5])
    assert np.array_equal(search.canonical_sign(s), search.canonical_sign(-s))


@pytest.mark.parametrize("sigma,flag", [(0.0, "singular"), (1e-5, "singular"),
                                        (1e-3, "small-positive"), (0.5, "nonsingular")])
def test_classify(sigma, flag):
    assert search.classify(sigma) == flag


def test_minimize_sigma_circle_family():
    # sigma_min(x I + y diag(1,-1)) = min(|x+y|, |x-y|): zero on the diagonals
    mats = np.array([np.eye(2), np.diag([1.0, -1.0])])
    res = search.minimize_sigma(lambda P: np.tensordot(P, mats, axes=(1, 0)), 2)
    assert res.sigma_min < 1e-12
    assert_allclose(np.abs(res.witness), [2 ** -0.5] * 2, atol=1e-10)
    assert res.flag == "singular"


def test_minimize_sigma_constant_family():
    res = search.minimize_sigma(lambda P: np.broadcast_to(np.eye(3), (len(P), 3, 3)), 3,
                                mesh_level=2)
    assert_allclose(res.sigma_min, 1.0)
    assert res.rank == 3
    assert res.flag == "nonsingular"


def test_minimize_sigma_is_deterministic(rng):
    mats = rng.standard_normal((3, 6, 6))

    def batch(P):
        return np.tensordot(P, mats, axes=(1, 0))
    a = search.minimize_sigma(batch, 3, mesh_level=3)
    b = search.minimize_sigma(batch, 3, mesh_level=3)
    assert a.sigma_min == b.sigma_min
    assert np.array_equal(a.witness, b.witness)
