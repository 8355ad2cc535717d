import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roughscat.quadrature import (MONOMIALS, TRI7_BARY, TRI7_WEIGHTS, clipped_moments, disk_moments,
                                  gauss_legendre, tri7_points)

from oracles import cross2, clipped_moment_oracle


def test_tri7_weights_and_points():
    assert TRI7_WEIGHTS.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(TRI7_BARY.sum(axis=1), 1.0)


@pytest.mark.parametrize("a, b", [(i, j) for i in range(6) for j in range(6) if i + j <= 5])
def test_tri7_exact_to_degree_five(a, b):
    from math import factorial
    corners = np.array([[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]])
    q = tri7_points(corners)[0]
    approx = 0.5 * np.sum(TRI7_WEIGHTS * q[:, 0] ** a * q[:, 1] ** b)
    exact = factorial(a) * factorial(b) / factorial(a + b + 2)
    assert approx == pytest.approx(exact, rel=1e-13, abs=1e-16)


def test_gauss_legendre_interval():
    x, w = gauss_legendre(5, 1.0, 3.0)
    assert np.sum(w * x**9) == pytest.approx((3**10 - 1) / 10, rel=1e-13)


def test_disk_moments_full():
    pts = np.array([[[-2.0, -2.0], [2.0, -2.0], [2.0, 2.0]], [[-2.0, -2.0], [2.0, 2.0], [-2.0, 2.0]]])
    idx, mom = clipped_moments(pts, (0.0, 0.0), 0.7)
    assert np.allclose(mom.sum(axis=0), disk_moments(0.7), atol=1e-13)


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1))
def test_clipped_moments_against_polar_oracle(seed):
    rng = np.random.default_rng(seed)
    tri = rng.uniform(-1, 1, size=(3, 2))
    area = 0.5 * abs(cross2(tri[1] - tri[0], tri[2] - tri[0]))
    if area < 1e-2:
        return
    rho = rng.uniform(0.2, 1.2)
    idx, mom = clipped_moments(tri[None], (0.0, 0.0), rho)
    ref = np.array([clipped_moment_oracle(tri, rho, a, b) for a, b in MONOMIALS])
    got = mom[0] if len(idx) else np.zeros(len(MONOMIALS))
    assert np.allclose(got, ref, atol=1e-10)


def test_clipped_moments_offset_centre():
    tri = np.array([[1.0, 1.0], [2.0, 1.0], [1.0, 2.0]])
    c = np.array([1.3, 1.2])
    idx, mom = clipped_moments(tri[None], c, 0.25)
    ref = np.array([clipped_moment_oracle(tri - c, 0.25, a, b) for a, b in MONOMIALS])
    assert np.allclose(mom[0], ref, atol=1e-12)


def test_disjoint_triangle_skipped():
    tri = np.array([[[3.0, 3.0], [4.0, 3.0], [3.0, 4.0]]])
    idx, mom = clipped_moments(tri, (0.0, 0.0), 1.0)
    assert len(idx) == 0
