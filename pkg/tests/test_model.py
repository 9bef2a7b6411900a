"""Unit tests for operators, the data term, and the synthetic generator."""

import numpy as np
import pytest

from spectral_huber.exceptions import DimensionMismatch, InfeasibleMask
from spectral_huber.llr import PatchGeometry
from spectral_huber.model import (
    IdentityOperator,
    MriOperator,
    ReconstructionProblem,
    datashare_init,
    f_grad,
    f_line_coeffs,
    f_value,
    generate_synthetic,
)
from spectral_huber.spectral import real_inner

from conftest import random_complex, numeric_directional


def make_mri(rng, m=4, n_frames=3, n_coils=2):
    coils = random_complex(rng, n_coils, m, m)
    rss = np.sqrt(np.sum(np.abs(coils) ** 2, axis=0))
    coils /= rss[None]
    masks = rng.random((n_frames, m, m)) < 0.5
    masks[:, 0, 0] = True
    masks[0] |= ~masks.any(axis=0)  # guarantee union coverage
    return MriOperator(coils, masks)


def test_identity_operator(rng):
    op = IdentityOperator(4, 3)
    X = random_complex(rng, 4, 3)
    assert np.array_equal(op.apply(X), X)
    assert np.array_equal(op.adjoint(X), X)
    with pytest.raises(DimensionMismatch):
        op.apply(random_complex(rng, 5, 3))


def test_mri_operator_shapes(rng):
    op = make_mri(rng, m=4, n_frames=3, n_coils=2)
    X = random_complex(rng, 16, 3)
    Y = op.apply(X)
    assert Y.shape == (2 * 16, 3)
    back = op.adjoint(Y)
    assert back.shape == (16, 3)


def test_mri_operator_dot_test(rng):
    op = make_mri(rng, m=4, n_frames=3, n_coils=2)
    for _ in range(10):
        X = random_complex(rng, 16, 3)
        Z = random_complex(rng, 32, 3)
        lhs = np.vdot(Z, op.apply(X))
        rhs = np.vdot(op.adjoint(Z), X)
        assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1.0)


def test_mri_operator_rejects_nonbinary_mask(rng):
    coils = random_complex(rng, 2, 4, 4)
    masks = np.full((2, 4, 4), 0.5)
    with pytest.raises(ValueError):
        MriOperator(coils, masks)


def test_mri_operator_rejects_uncovered_location(rng):
    coils = random_complex(rng, 2, 4, 4)
    masks = np.ones((2, 4, 4))
    masks[:, 1, 2] = 0.0
    with pytest.raises(InfeasibleMask):
        MriOperator(coils, masks)


def test_mri_operator_grid_mismatch(rng):
    coils = random_complex(rng, 2, 4, 4)
    masks = np.ones((2, 4, 6))
    with pytest.raises(DimensionMismatch):
        MriOperator(coils, masks)


def test_mri_masking_zeroes_unsampled(rng):
    op = make_mri(rng, m=4, n_frames=2, n_coils=1)
    X = random_complex(rng, 16, 2)
    Y = op.apply(X).reshape(1, 4, 4, 2)
    unsampled = ~op.masks.transpose(1, 2, 0)
    assert np.all(Y[0][unsampled] == 0)


def make_problem(rng, m=4, n_frames=3, n_coils=2):
    op = make_mri(rng, m, n_frames, n_coils)
    X = random_complex(rng, m * m, n_frames)
    Y = op.apply(X) + 0.01 * random_complex(rng, op.rows_out, n_frames)
    geom = PatchGeometry(m, m, 2, 2)
    return ReconstructionProblem(operator=op, Y=Y, geom=geom, truth=X)


def test_problem_shape_validation(rng):
    op = IdentityOperator(4, 3)
    geom = PatchGeometry(2, 2, 2, 2)
    with pytest.raises(DimensionMismatch):
        ReconstructionProblem(operator=op, Y=random_complex(rng, 5, 3), geom=geom)
    with pytest.raises(DimensionMismatch):
        ReconstructionProblem(
            operator=op,
            Y=random_complex(rng, 4, 3),
            geom=geom,
            truth=random_complex(rng, 3, 3),
        )


def test_f_value_at_truth_small(rng):
    P = make_problem(rng)
    # residual at the truth is just the added noise
    assert f_value(P, P.truth) <= 0.5 * 0.02**2 * P.Y.size * 10


def test_f_grad_finite_difference(rng):
    P = make_problem(rng)
    X = random_complex(rng, *P.operator.shape_in)
    G = f_grad(P, X)
    for _ in range(8):
        D = random_complex(rng, *P.operator.shape_in)
        num = numeric_directional(lambda Z: f_value(P, Z), X, D)
        assert num == pytest.approx(real_inner(G, D), rel=1e-6, abs=1e-9)


def test_f_line_coeffs_exact_quadratic(rng):
    # the data term is exactly quadratic along any line
    P = make_problem(rng)
    X = random_complex(rng, *P.operator.shape_in)
    D = random_complex(rng, *P.operator.shape_in)
    q = f_line_coeffs(P, X, D, abar=0.4)
    for alpha in (-1.0, 0.0, 0.4, 2.5):
        assert q(alpha) == pytest.approx(f_value(P, X + alpha * D), rel=1e-12)


def test_generate_synthetic_reproducible():
    P1 = generate_synthetic(seed=7, m_x=8, m_y=8, n_frames=4, n_coils=2, accel=2.0)
    P2 = generate_synthetic(seed=7, m_x=8, m_y=8, n_frames=4, n_coils=2, accel=2.0)
    assert np.array_equal(P1.Y, P2.Y)
    assert np.array_equal(P1.truth, P2.truth)
    assert np.array_equal(P1.operator.coils, P2.operator.coils)
    assert np.array_equal(P1.operator.masks, P2.operator.masks)
    P3 = generate_synthetic(seed=8, m_x=8, m_y=8, n_frames=4, n_coils=2, accel=2.0)
    assert not np.array_equal(P1.Y, P3.Y)


def test_generate_synthetic_truth_rank_and_scale():
    P = generate_synthetic(seed=3, m_x=8, m_y=8, n_frames=6, n_coils=2, rank=3,
                           accel=2.0)
    s = np.linalg.svd(P.truth, compute_uv=False)
    assert s[3] <= 1e-10 * s[0]
    assert s[2] > 1e-6 * s[0]
    assert np.max(np.abs(P.truth)) == pytest.approx(1.0)


def test_generate_synthetic_mask_properties():
    P = generate_synthetic(seed=5, m_x=16, m_y=16, n_frames=8, n_coils=2, accel=4.0)
    masks = P.operator.masks
    rate = masks.mean()
    assert 0.15 <= rate <= 0.45  # near 1/4 with the fixed center block
    assert np.all(masks.any(axis=0))
    # DC (index 0 after the shift to FFT order) is always sampled
    assert np.all(masks[:, 0, 0])


def test_generate_synthetic_coils_unit_rss():
    P = generate_synthetic(seed=2, m_x=8, m_y=8, n_frames=4, n_coils=3, accel=2.0)
    rss = np.sqrt(np.sum(np.abs(P.operator.coils) ** 2, axis=0))
    assert np.allclose(rss, 1.0, atol=1e-12)


def test_generate_synthetic_infeasible_acceleration():
    with pytest.raises(InfeasibleMask):
        generate_synthetic(seed=0, m_x=8, m_y=8, n_frames=2, n_coils=2, accel=4.0)


def test_generate_synthetic_full_sampling():
    P = generate_synthetic(seed=0, m_x=8, m_y=8, n_frames=4, n_coils=2, accel=1.0)
    assert np.all(P.operator.masks)


def test_datashare_init_exact_on_full_sampling():
    # with full sampling and no noise the initializer inverts the model
    P = generate_synthetic(
        seed=4, m_x=8, m_y=8, n_frames=4, n_coils=3, accel=1.0, noise_sigma=0.0
    )
    X0 = datashare_init(P)
    assert np.allclose(X0, P.truth, atol=1e-10)


def _datashare_oracle(P):
    # brute-force nearest sampled frame per (coil, kx, ky), ties to earlier
    op = P.operator
    C, m_x, m_y = op.n_coils, op.m_x, op.m_y
    N = P.Y.shape[1]
    Yc = P.Y.reshape(C, m_x, m_y, N)
    sampled = op.masks.transpose(1, 2, 0)
    filled = np.zeros_like(Yc)
    for kx in range(m_x):
        for ky in range(m_y):
            frames = np.nonzero(sampled[kx, ky])[0]
            for t in range(N):
                best = min(frames, key=lambda s: (abs(int(s) - t), s))
                filled[:, kx, ky, t] = Yc[:, kx, ky, best]
    img = np.fft.ifft2(filled, axes=(1, 2), norm="ortho")
    out = np.sum(np.conj(op.coils)[:, :, :, None] * img, axis=0)
    return out.reshape(op.shape_in)


def test_datashare_init_matches_bruteforce(rng):
    P = generate_synthetic(seed=11, m_x=8, m_y=8, n_frames=5, n_coils=2, accel=2.5)
    assert np.allclose(datashare_init(P), _datashare_oracle(P), atol=1e-12)


def test_datashare_init_needs_masked_operator(rng):
    op = IdentityOperator(4, 2)
    geom = PatchGeometry(2, 2, 2, 2)
    P = ReconstructionProblem(operator=op, Y=random_complex(rng, 4, 2), geom=geom)
    with pytest.raises(ValueError):
        datashare_init(P)
