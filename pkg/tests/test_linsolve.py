import numpy as np
import pytest
from scipy import optimize

import misstab as mt
from misstab.linsolve import LEAST_SQUARES, MIN_NORM, SQUARE


def test_square_system_exact():
    a = np.array([[2.0, 1.0], [1.0, 3.0]])
    b = np.array([5.0, 10.0])
    x, regime = mt.solve_odds_system(a, b)
    assert regime == SQUARE
    np.testing.assert_allclose(a @ x, b, atol=1e-12)


def test_overdetermined_matches_brute_force_least_squares():
    rng = np.random.default_rng(42)
    for _ in range(20):
        a = rng.uniform(0.5, 50.0, size=(6, 3))
        b = rng.uniform(0.0, 20.0, size=6)
        x, regime = mt.solve_odds_system(a, b)
        assert regime == LEAST_SQUARES
        oracle = np.linalg.solve(a.T @ a, a.T @ b)
        np.testing.assert_allclose(x, oracle, atol=1e-8)
        res = optimize.minimize(lambda v: np.sum((a @ v - b) ** 2), x + 0.3,
                                method="BFGS", tol=1e-14)
        np.testing.assert_allclose(x, res.x, atol=1e-5)


def test_underdetermined_matches_min_norm_oracle():
    rng = np.random.default_rng(7)
    for _ in range(20):
        a = rng.uniform(0.5, 50.0, size=(2, 5))
        b = rng.uniform(0.0, 20.0, size=2)
        x, regime = mt.solve_odds_system(a, b)
        assert regime == MIN_NORM
        oracle = a.T @ np.linalg.solve(a @ a.T, b)
        np.testing.assert_allclose(x, oracle, atol=1e-8)
        np.testing.assert_allclose(a @ x, b, atol=1e-8)


def test_one_missing_own_level_system(table5):
    y = table5.full_block
    a = np.moveaxis(y, 0, -1).reshape(-1, 2)
    b = table5.blocks[(1,)].ravel()
    x, regime = mt.solve_odds_system(a, b)
    assert regime == LEAST_SQUARES
    np.testing.assert_allclose(x, [0.0721, 0.0258], atol=5e-4)


def test_two_missing_own_level_system(table8):
    y = table8.full_block
    a = np.moveaxis(y, 1, -1).reshape(-1, 2)
    b = table8.blocks[(0, 1)].ravel()
    x, _ = mt.solve_odds_system(a, b)
    np.testing.assert_allclose(x, [0.073, 2.375], atol=1e-3)


def test_negative_solutions_returned_unclamped():
    a = np.array([[10.0, 1.0], [1.0, 10.0], [5.0, 5.0]])
    b = np.array([0.0, 20.0, 5.0])
    x, _ = mt.solve_odds_system(a, b)
    assert x[0] < 0 < x[1]


def test_rank_deficient_raises():
    a = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    with pytest.raises(mt.SingularSystemError):
        mt.solve_odds_system(a, np.array([1.0, 2.0, 3.0]))
