"""Quadratic line-search majorizers and the MM step-size iteration.

Restricting a majorized cost to a line ``alpha -> K(X + alpha * D)``
yields scalar quadratics

    g(alpha; abar) = c0 + c1 (alpha - abar) + 0.5 c2 (alpha - abar)^2

that majorize the restriction and touch it at the expansion point
``abar``.  Repeatedly minimizing these quadratics gives a monotone
step-size rule with closed-form updates ``alpha <- alpha - c1/c2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import CenterMismatch, NonFinite
from .spectral import SpectralRegularizer, curvature_matrix, svd


@dataclass(frozen=True)
class LineQuadratic:
    """Quadratic in ``alpha`` expanded at ``center`` with curvature c2 >= 0."""

    c0: float
    c1: float
    c2: float
    center: float

    def __call__(self, alpha):
        d = np.asarray(alpha, dtype=float) - self.center
        return self.c0 + self.c1 * d + 0.5 * self.c2 * d * d


def reg_line_coeffs(
    R: SpectralRegularizer,
    X: np.ndarray,
    D: np.ndarray,
    abar: float,
    mode: str,
) -> LineQuadratic:
    """Majorizer coefficients of ``alpha -> R(X + alpha * D)`` at ``abar``.

    c0 is the exact value, c1 the exact slope, and c2 the curvature
    ``sum_{kl} G_kl |U^H D V|_kl^2`` with the full factors of
    ``svd(X + abar * D)``.
    """
    S = X + abar * D
    f = svd(S)
    r = f.sigma.size
    w = R.weights_for(r)
    B = f.U.conj().T @ D @ f.V
    c0 = R.value_from_sigma(f.sigma)
    c1 = float(np.sum(w * R.potential.deriv(f.sigma) * np.real(np.diagonal(B))))
    G = curvature_matrix(R, f, mode)
    c2 = float(np.sum(G * np.abs(B) ** 2))
    return LineQuadratic(c0=c0, c1=c1, c2=c2, center=float(abar))


def combine_line_coeffs(
    qf: LineQuadratic, qreg: LineQuadratic, lam: float
) -> LineQuadratic:
    """Coefficients of the composite cost: ``c_f + lam * c_reg``."""
    if qf.center != qreg.center:
        raise CenterMismatch(
            f"centers differ: {qf.center} vs {qreg.center}"
        )
    return LineQuadratic(
        c0=qf.c0 + lam * qreg.c0,
        c1=qf.c1 + lam * qreg.c1,
        c2=qf.c2 + lam * qreg.c2,
        center=qf.center,
    )


def mm_step(
    coeff_provider: Callable[[float], LineQuadratic],
    alpha0: float = 0.0,
    n_alpha: int = 1,
) -> float:
    """Majorize-minimize step-size iteration.

    Runs ``alpha <- alpha - c1(alpha) / c2(alpha)`` for ``n_alpha``
    steps from ``alpha0``, querying ``coeff_provider`` for fresh
    majorizer coefficients at each expansion point.  Zero curvature
    means the majorizer model is flat along the line; the current
    alpha is returned unchanged.

    Raises
    ------
    NonFinite
        If any iterate leaves the reals.
    """
    if n_alpha < 1:
        raise ValueError("n_alpha must be >= 1")
    alpha = float(alpha0)
    for _ in range(n_alpha):
        q = coeff_provider(alpha)
        if q.c2 == 0.0:
            return alpha
        alpha = alpha - q.c1 / q.c2
        if not np.isfinite(alpha):
            raise NonFinite(f"step size became {alpha}")
    return alpha
