"""Unit tests for the spectral regularizer and its SVD-based pieces."""

import numpy as np
import pytest

from spectral_huber.exceptions import (
    ConvergenceFailure,
    DimensionMismatch,
    KOutOfRange,
    WeightsNotNondecreasing,
)
from spectral_huber.potentials import Cauchy, Hyperbola, Parabola
from spectral_huber.spectral import (
    SpectralRegularizer,
    curvature_matrix,
    is_convex,
    lipschitz_bound,
    majorizer_value,
    reg_grad,
    reg_value,
    singular_values,
    svd,
    tail_weights,
)

from conftest import random_complex, numeric_directional


def test_svd_reconstructs(rng):
    X = random_complex(rng, 5, 3)
    f = svd(X)
    assert f.U.shape == (5, 5) and f.V.shape == (3, 3)
    rebuilt = f.U[:, :3] @ np.diag(f.sigma) @ f.V.conj().T
    assert np.allclose(rebuilt, X, atol=1e-12)
    assert np.all(np.diff(f.sigma) <= 0)


def test_svd_nonfinite_raises():
    X = np.full((3, 3), np.nan, dtype=complex)
    with pytest.raises(ConvergenceFailure):
        svd(X)


def test_singular_values_stacked(rng):
    X = random_complex(rng, 4, 6, 3)
    s = singular_values(X)
    assert s.shape == (4, 3)
    for i in range(4):
        assert np.allclose(s[i], np.linalg.svd(X[i], compute_uv=False))


def test_reg_value_reference_cases():
    R = SpectralRegularizer(Hyperbola(delta=1.0))
    Z = np.zeros((3, 5), dtype=complex)
    assert reg_value(R, Z) == pytest.approx(3.0)

    Rp = SpectralRegularizer(Parabola())
    D = np.diag([2.0, 1.0]).astype(complex)
    assert reg_value(Rp, D) == pytest.approx(5.0)


def test_reg_value_diagonal_oracle(rng):
    sig = np.sort(rng.uniform(0.1, 4.0, size=4))[::-1]
    X = np.zeros((4, 6), dtype=complex)
    X[np.arange(4), np.arange(4)] = sig
    for phi in (Hyperbola(0.7), Cauchy(1.2), Parabola()):
        R = SpectralRegularizer(phi)
        assert reg_value(R, X) == pytest.approx(float(np.sum(phi(sig))))
    w = np.array([0.5, 1.0, 2.0, 3.0])
    R = SpectralRegularizer(Hyperbola(0.7), weights=w)
    assert reg_value(R, X) == pytest.approx(float(np.sum(w * Hyperbola(0.7)(sig))))


def test_reg_value_unitary_invariance(rng):
    X = random_complex(rng, 5, 4)
    Q1, _ = np.linalg.qr(random_complex(rng, 5, 5))
    Q2, _ = np.linalg.qr(random_complex(rng, 4, 4))
    R = SpectralRegularizer(Cauchy(0.9))
    assert reg_value(R, Q1 @ X @ Q2) == pytest.approx(reg_value(R, X), rel=1e-10)


def test_tail_weights_values():
    assert np.array_equal(tail_weights(4, 1), [0.0, 1.0, 1.0, 1.0])
    assert np.array_equal(tail_weights(3, 0), [1.0, 1.0, 1.0])
    assert np.array_equal(tail_weights(2, 1), [0.0, 1.0])


def test_tail_weights_range_errors():
    with pytest.raises(KOutOfRange):
        tail_weights(3, 3)
    with pytest.raises(KOutOfRange):
        tail_weights(3, -1)


def test_weights_validation():
    with pytest.raises(ValueError):
        SpectralRegularizer(Hyperbola(1.0), weights=[-1.0, 1.0])
    with pytest.raises(ValueError):
        SpectralRegularizer(Hyperbola(1.0), weights=[0.0, 0.0])
    R = SpectralRegularizer(Hyperbola(1.0), weights=[1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        reg_value(R, np.zeros((3, 3), dtype=complex))


def test_reg_grad_parabola_exact(rng):
    # for phi(t) = t^2 the regularizer is ||X||_F^2 with gradient 2X
    X = random_complex(rng, 5, 3)
    R = SpectralRegularizer(Parabola())
    assert np.allclose(reg_grad(R, X), 2.0 * X, atol=1e-10)


def test_reg_grad_finite_difference(rng):
    for phi in (Hyperbola(0.5), Cauchy(0.8)):
        for shape in ((4, 3), (3, 5), (4, 4)):
            X = random_complex(rng, *shape)
            R = SpectralRegularizer(phi)
            G = reg_grad(R, X)
            for _ in range(10):
                D = random_complex(rng, *shape)
                num = numeric_directional(lambda Z: reg_value(R, Z), X, D)
                ana = float(np.real(np.vdot(G, D)))
                assert num == pytest.approx(ana, rel=1e-5, abs=1e-8)


def test_reg_grad_weighted_finite_difference(rng):
    w = np.array([0.0, 1.0, 1.0])
    R = SpectralRegularizer(Hyperbola(0.5), weights=w)
    X = random_complex(rng, 3, 6)
    G = reg_grad(R, X)
    for _ in range(10):
        D = random_complex(rng, 3, 6)
        num = numeric_directional(lambda Z: reg_value(R, Z), X, D)
        assert num == pytest.approx(float(np.real(np.vdot(G, D))), rel=1e-5, abs=1e-8)


def test_is_convex_rules():
    assert is_convex(SpectralRegularizer(Hyperbola(1.0)))
    assert is_convex(SpectralRegularizer(Parabola()))
    assert not is_convex(SpectralRegularizer(Cauchy(1.0)))
    # nonincreasing weights keep convexity, nondecreasing break it
    assert is_convex(SpectralRegularizer(Hyperbola(1.0), weights=[2.0, 1.0]))
    assert not is_convex(SpectralRegularizer(Hyperbola(1.0), weights=tail_weights(3, 1)))


def test_lipschitz_bound_values():
    R = SpectralRegularizer(Cauchy(2.0), weights=[0.0, 1.0, 1.0])
    assert lipschitz_bound(R) == pytest.approx(1.0)
    assert lipschitz_bound(SpectralRegularizer(Hyperbola(3.0))) == pytest.approx(1.0)
    assert lipschitz_bound(SpectralRegularizer(Parabola())) == pytest.approx(2.0)
    R = SpectralRegularizer(Hyperbola(1.0), weights=[0.5, 3.0])
    assert lipschitz_bound(R) == pytest.approx(3.0)


def test_lipschitz_bound_sampled(rng):
    R = SpectralRegularizer(Hyperbola(0.3))
    L = lipschitz_bound(R)
    for _ in range(100):
        X = random_complex(rng, 4, 3)
        Y = X + 0.1 * random_complex(rng, 4, 3)
        num = np.linalg.norm(reg_grad(R, X) - reg_grad(R, Y))
        den = np.linalg.norm(X - Y)
        assert num <= L * den * (1 + 1e-8)


def test_curvature_matrix_orientation(rng):
    phi = Hyperbola(0.6)
    R = SpectralRegularizer(phi, weights=[0.1, 0.5, 2.0])
    wide = random_complex(rng, 3, 5)
    f = svd(wide)
    G = curvature_matrix(R, f, "GR")
    assert G.shape == (3, 5)
    # wide: constant along rows, value w_k * omega(sigma_k)
    expect = np.asarray(R.weights) * phi.weight(f.sigma)
    assert np.allclose(G, expect[:, None] * np.ones((1, 5)))

    tall = random_complex(rng, 5, 3)
    f = svd(tall)
    G = curvature_matrix(R, f, "GR")
    assert G.shape == (5, 3)
    # tall: constant along columns
    expect = np.asarray(R.weights) * phi.weight(f.sigma)
    assert np.allclose(G, expect[None, :] * np.ones((5, 1)))

    GL = curvature_matrix(R, f, "GL")
    expect = np.asarray(R.weights) * phi.weight_at_zero()
    assert np.allclose(GL, expect[None, :] * np.ones((5, 1)))


def test_curvature_matrix_square_uses_row_layout(rng):
    R = SpectralRegularizer(Cauchy(1.1))
    X = random_complex(rng, 3, 3)
    f = svd(X)
    G = curvature_matrix(R, f, "GR")
    expect = Cauchy(1.1).weight(f.sigma)
    assert np.allclose(G, expect[:, None] * np.ones((1, 3)))


def test_curvature_requires_nondecreasing_weights():
    R = SpectralRegularizer(Hyperbola(1.0), weights=[2.0, 1.0])
    f = svd(np.eye(2, dtype=complex))
    with pytest.raises(WeightsNotNondecreasing):
        curvature_matrix(R, f, "GR")


def test_curvature_rejects_unknown_mode(rng):
    R = SpectralRegularizer(Hyperbola(1.0))
    f = svd(random_complex(rng, 2, 2))
    with pytest.raises(ValueError):
        curvature_matrix(R, f, "XX")


def test_majorizer_touches_and_dominates(rng):
    for phi in (Hyperbola(0.7), Cauchy(0.9)):
        for weights in (None, tail_weights(3, 1)):
            R = SpectralRegularizer(phi, weights=weights)
            for _ in range(25):
                X = random_complex(rng, 3, 4)
                S = random_complex(rng, 3, 4)
                rX = reg_value(R, X)
                for mode in ("GR", "GL"):
                    q = majorizer_value(R, X, S, mode)
                    assert q >= rX - 1e-9 * max(1.0, abs(rX))
                    qs = majorizer_value(R, S, S, mode)
                    assert qs == pytest.approx(reg_value(R, S), rel=1e-10)
                qgr = majorizer_value(R, X, S, "GR")
                qgl = majorizer_value(R, X, S, "GL")
                assert qgr <= qgl + 1e-9
