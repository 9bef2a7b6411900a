"""Spectral regularizers on complex matrices.

A spectral regularizer applies a Huber-type potential to the singular
values of its argument,

    R(X) = sum_k w_k phi(sigma_k(X)),

with optional nonnegative weights ``w`` (absent means all ones).  The
regularizer is unitarily invariant, differentiable, and admits two
families of quadratic majorizers built from curvature matrices:

* ``GR``: curvature ``omega(sigma_k)`` tiled along the short dimension
  of the expansion point (tighter);
* ``GL``: constant curvature ``omega(0)`` (looser, Lipschitz-type).

Weighted curvature constructions require nondecreasing weights; the
convexity characterization requires nonincreasing ones.  Both checks
happen at the operation that needs the hypothesis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import (
    ConvergenceFailure,
    DimensionMismatch,
    KOutOfRange,
    WeightsNotNondecreasing,
)
from .potentials import Potential


def real_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Real part of the Frobenius inner product <a, b>."""
    return float(np.real(np.vdot(a, b)))


@dataclass(frozen=True)
class SVDFactors:
    """Full singular value decomposition ``X = U diag(sigma) V^H``.

    ``U`` is M x M, ``V`` is N x N, ``sigma`` has length min(M, N) in
    nonincreasing order.
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray


def svd(X: np.ndarray) -> SVDFactors:
    """Full SVD of a complex matrix.

    Raises
    ------
    ConvergenceFailure
        If the LAPACK backend does not converge.
    """
    try:
        U, s, Vh = np.linalg.svd(np.asarray(X), full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return SVDFactors(U=U, sigma=s, V=Vh.conj().T)


def singular_values(X: np.ndarray) -> np.ndarray:
    """Singular values only (no factors); accepts stacked matrices."""
    try:
        return np.linalg.svd(np.asarray(X), compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc


class SpectralRegularizer:
    """Potential + optional weights + regularization strength.

    Parameters
    ----------
    potential : Potential
        Scalar potential applied to each singular value.
    weights : array_like, optional
        Nonnegative, not all zero, one entry per singular value of the
        target matrices.  Absent means unweighted (all ones).
    lam : float
        Nonnegative strength used when the regularizer enters a
        composite cost; solvers may override it.
    """

    def __init__(self, potential: Potential, weights=None, lam: float = 1.0):
        if lam < 0:
            raise ValueError("lam must be nonnegative")
        if weights is not None:
            weights = np.asarray(weights, dtype=float).ravel()
            if weights.size == 0:
                raise ValueError("weights must be nonempty when given")
            if np.any(weights < 0):
                raise ValueError("weights must be nonnegative")
            if not np.any(weights > 0):
                raise ValueError("weights must not be all zero")
        self.potential = potential
        self.weights = weights
        self.lam = float(lam)

    def weights_for(self, r: int) -> np.ndarray:
        """Weight vector of length ``r``; all ones when unweighted."""
        if self.weights is None:
            return np.ones(r)
        if self.weights.size != r:
            raise DimensionMismatch(
                f"weights have length {self.weights.size}, matrix has {r} "
                "singular values"
            )
        return self.weights

    def value_from_sigma(self, sigma: np.ndarray) -> float:
        """Regularizer value given (possibly stacked) singular values."""
        sigma = np.asarray(sigma, dtype=float)
        w = self.weights_for(sigma.shape[-1])
        return float(np.sum(w * self.potential(sigma)))


def tail_weights(r: int, K: int) -> np.ndarray:
    """Weights zeroing the K largest singular values, one elsewhere.

    Raises
    ------
    KOutOfRange
        Unless ``0 <= K <= r - 1``.
    """
    if not 0 <= K <= r - 1:
        raise KOutOfRange(f"K={K} outside [0, {r - 1}]")
    w = np.ones(r)
    w[:K] = 0.0
    return w


def reg_value(R: SpectralRegularizer, X: np.ndarray) -> float:
    """Evaluate ``sum_k w_k phi(sigma_k(X))``."""
    return R.value_from_sigma(singular_values(X))


def reg_grad(R: SpectralRegularizer, X: np.ndarray) -> np.ndarray:
    """Gradient ``U diag(w * phi'(sigma)) V^H``.

    For weighted regularizers the formula assumes distinct singular
    values; it is computed from whatever factors the backend returns.
    """
    f = svd(X)
    r = f.sigma.size
    coef = R.weights_for(r) * R.potential.deriv(f.sigma)
    return (f.U[:, :r] * coef) @ f.V[:, :r].conj().T


def is_convex(R: SpectralRegularizer) -> bool:
    """True iff the potential is convex and weights are nonincreasing."""
    if not R.potential.convex:
        return False
    if R.weights is None:
        return True
    return bool(np.all(np.diff(R.weights) <= 0))


def lipschitz_bound(R: SpectralRegularizer) -> float:
    """Gradient Lipschitz constant: ``omega(0)``, times ``max(w)`` if weighted."""
    bound = R.potential.weight_at_zero()
    if R.weights is not None:
        bound *= float(np.max(R.weights))
    return bound


def _require_nondecreasing(R: SpectralRegularizer):
    if R.weights is not None and np.any(np.diff(R.weights) < 0):
        raise WeightsNotNondecreasing(
            "weighted curvature requires nondecreasing weights"
        )


def curvature_matrix(R: SpectralRegularizer, f: SVDFactors, mode: str) -> np.ndarray:
    """Curvature matrix G of the quadratic majorizer expanded at ``f``.

    Mode "GR" tiles ``w_k omega(sigma_k)`` along the long dimension
    (rows constant when wide, columns constant when tall; square counts
    as wide).  Mode "GL" uses the constant ``omega(0) w``.

    Raises
    ------
    WeightsNotNondecreasing
        If explicit weights violate the majorizer hypothesis.
    """
    _require_nondecreasing(R)
    M, N = f.U.shape[0], f.V.shape[0]
    r = min(M, N)
    w = R.weights_for(r)
    pot = R.potential
    if mode == "GR":
        diag = w * np.asarray(pot.weight(f.sigma))
    elif mode == "GL":
        diag = w * pot.weight_at_zero()
    else:
        raise ValueError(f"unknown curvature mode: {mode!r}")
    if M <= N:  # wide (square treated as wide): rows constant
        return np.tile(diag[:, None], (1, N))
    return np.tile(diag[None, :], (M, 1))  # tall: columns constant


def majorizer_value(
    R: SpectralRegularizer, X: np.ndarray, S: np.ndarray, mode: str
) -> float:
    """Quadratic majorizer of the regularizer, expanded at ``S``, at ``X``.

    Q(X; S) = R(S) + Re<grad R(S), X - S>
              + 0.5 * sum_{kl} G_kl |U^H (X - S) V|_kl^2

    with U, V the full factors of ``svd(S)`` and G from
    :func:`curvature_matrix`.
    """
    X = np.asarray(X)
    S = np.asarray(S)
    if X.shape != S.shape:
        raise DimensionMismatch(f"shapes {X.shape} and {S.shape} differ")
    f = svd(S)
    r = f.sigma.size
    w = R.weights_for(r)
    G = curvature_matrix(R, f, mode)
    B = f.U.conj().T @ (X - S) @ f.V
    value = R.value_from_sigma(f.sigma)
    slope = float(np.sum(w * R.potential.deriv(f.sigma) * np.real(np.diagonal(B))))
    curve = float(np.sum(G * np.abs(B) ** 2))
    return value + slope + 0.5 * curve
