"""Locally low-rank machinery: patches, circular shifts, summed regularizers.

Each column of ``X`` (M x N) is a vectorized ``m_x x m_y`` image frame.
A patch operator gathers an ``n_x x n_y`` spatial block across all
frames into a small Casorati matrix (P x N, P = n_x * n_y); the anchors
in ``Gamma`` tile the grid without overlap, and the circular shifts in
``Lambda`` re-anchor the tiling so that overlapping patches are covered
by shifted copies.  The locally low-rank regularizer sums a spectral
regularizer over every (shift, anchor) pair:

    R_llr(X) = sum_{s in Lambda} sum_{p in Gamma} R(P_p(S_s(X))).

Hot paths batch the per-anchor SVDs through numpy's stacked SVD; the
``deterministic`` flag instead accumulates term by term in declared
(shift-major, anchor-minor) order.  Both orders are reproducible run to
run; they differ only in floating-point summation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .exceptions import DimensionMismatch, LocationOutOfGrid
from .linesearch import LineQuadratic, reg_line_coeffs
from .spectral import SpectralRegularizer, _require_nondecreasing
from . import spectral


@dataclass(frozen=True)
class PatchGeometry:
    """Image dims, patch dims, and the derived anchor and shift sets.

    Patch dims must be even and divide the image dims, which keeps the
    anchor tiling exact and gives ``|Lambda| = n_x * n_y`` shifts with
    ranges ``s_x in [-n_x/2 + 1, n_x/2]`` (same for y).  The one
    exception is a patch covering the whole image: then a single anchor
    and the zero shift are used (shifting a full-cover patch only
    permutes rows, which no spectral regularizer can see).
    """

    m_x: int
    m_y: int
    n_x: int
    n_y: int
    anchors: Tuple[Tuple[int, int], ...] = field(init=False)
    shifts: Tuple[Tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        m_x, m_y, n_x, n_y = self.m_x, self.m_y, self.n_x, self.n_y
        if min(m_x, m_y, n_x, n_y) < 1:
            raise ValueError("dimensions must be positive")
        if (n_x, n_y) == (m_x, m_y):
            anchors = ((0, 0),)
            shifts = ((0, 0),)
        else:
            if n_x % 2 or n_y % 2:
                raise ValueError("patch dims must be even")
            if m_x % n_x or m_y % n_y:
                raise ValueError("patch dims must divide image dims")
            anchors = tuple(
                (bx * n_x, by * n_y)
                for bx in range(m_x // n_x)
                for by in range(m_y // n_y)
            )
            shifts = tuple(
                (sx, sy)
                for sx in range(-n_x // 2 + 1, n_x // 2 + 1)
                for sy in range(-n_y // 2 + 1, n_y // 2 + 1)
            )
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "shifts", shifts)

    @property
    def M(self) -> int:
        return self.m_x * self.m_y

    @property
    def P(self) -> int:
        return self.n_x * self.n_y


def _as_stack(X: np.ndarray, geom: PatchGeometry) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != geom.M:
        raise DimensionMismatch(
            f"expected ({geom.M}, N) matrix for geometry, got {X.shape}"
        )
    return X.reshape(geom.m_x, geom.m_y, X.shape[1])


def _blockify(stack: np.ndarray, geom: PatchGeometry) -> np.ndarray:
    """All anchored patches of an image stack as a (|Gamma|, P, N) array."""
    gx, gy = geom.m_x // geom.n_x, geom.m_y // geom.n_y
    N = stack.shape[2]
    b = stack.reshape(gx, geom.n_x, gy, geom.n_y, N)
    return b.transpose(0, 2, 1, 3, 4).reshape(gx * gy, geom.P, N)

def _unblockify(patches: np.ndarray, geom: PatchGeometry) -> np.ndarray:
    gx, gy = geom.m_x // geom.n_x, geom.m_y // geom.n_y
    N = patches.shape[2]
    b = patches.reshape(gx, gy, geom.n_x, geom.n_y, N)
    return b.transpose(0, 2, 1, 3, 4).reshape(geom.m_x, geom.m_y, N)


def extract_patch(X: np.ndarray, p, geom: PatchGeometry) -> np.ndarray:
    """Casorati matrix (P x N) of the patch anchored at ``p``."""
    px, py = p
    if (px, py) not in geom.anchors:
        raise LocationOutOfGrid(f"{p} is not an anchor of the tiling")
    stack = _as_stack(X, geom)
    patch = stack[px : px + geom.n_x, py : py + geom.n_y, :]
    return patch.reshape(geom.P, stack.shape[2]).copy()


def adjoint_patch(C: np.ndarray, p, geom: PatchGeometry) -> np.ndarray:
    """Scatter a P x N Casorati matrix back to an all-zero M x N matrix."""
    px, py = p
    if (px, py) not in geom.anchors:
        raise LocationOutOfGrid(f"{p} is not an anchor of the tiling")
    C = np.asarray(C)
    if C.shape[0] != geom.P:
        raise DimensionMismatch(f"expected ({geom.P}, N) patch, got {C.shape}")
    N = C.shape[1]
    stack = np.zeros((geom.m_x, geom.m_y, N), dtype=C.dtype)
    stack[px : px + geom.n_x, py : py + geom.n_y, :] = C.reshape(
        geom.n_x, geom.n_y, N
    )
    return stack.reshape(geom.M, N)


def shift(X: np.ndarray, s, geom: PatchGeometry) -> np.ndarray:
    """Circularly shift every frame by (s_x, s_y); adjoint is the shift by -s."""
    sx, sy = s
    stack = _as_stack(X, geom)
    return np.roll(stack, (sx, sy), axis=(0, 1)).reshape(X.shape)


def _shifted_patches(X: np.ndarray, s, geom: PatchGeometry) -> np.ndarray:
    stack = _as_stack(X, geom)
    return _blockify(np.roll(stack, s, axis=(0, 1)), geom)


def llr_value(
    R: SpectralRegularizer,
    X: np.ndarray,
    geom: PatchGeometry,
    deterministic: bool = False,
) -> float:
    """Sum of the spectral regularizer over all (shift, anchor) patches."""
    if deterministic:
        total = 0.0
        for s in geom.shifts:
            Xs = shift(X, s, geom)
            for p in geom.anchors:
                total += spectral.reg_value(R, extract_patch(Xs, p, geom))
        return total
    total = 0.0
    for s in geom.shifts:
        sig = spectral.singular_values(_shifted_patches(X, s, geom))
        total += R.value_from_sigma(sig)
    return float(total)


def llr_grad(
    R: SpectralRegularizer,
    X: np.ndarray,
    geom: PatchGeometry,
    deterministic: bool = False,
) -> np.ndarray:
    """Gradient of :func:`llr_value`: scattered patchwise spectral gradients."""
    if deterministic:
        out = np.zeros_like(np.asarray(X, dtype=complex))
        for s in geom.shifts:
            Xs = shift(X, s, geom)
            for p in geom.anchors:
                g = spectral.reg_grad(R, extract_patch(Xs, p, geom))
                out += shift(adjoint_patch(g, p, geom), (-s[0], -s[1]), geom)
        return out
    _, grad = llr_value_and_grad(R, X, geom)
    return grad


def llr_value_and_grad(
    R: SpectralRegularizer, X: np.ndarray, geom: PatchGeometry
):
    """Value and gradient in one pass; the patch SVDs are shared."""
    X = np.asarray(X, dtype=complex)
    stack = _as_stack(X, geom)
    out = np.zeros_like(stack)
    total = 0.0
    pot = R.potential
    for s in geom.shifts:
        patches = _blockify(np.roll(stack, s, axis=(0, 1)), geom)
        u, sig, vh = np.linalg.svd(patches, full_matrices=False)
        w = R.weights_for(sig.shape[-1])
        total += float(np.sum(w * pot(sig)))
        coef = w * pot.deriv(sig)
        gp = np.matmul(u * coef[:, None, :], vh)
        out += np.roll(_unblockify(gp, geom), (-s[0], -s[1]), axis=(0, 1))
    return total, out.reshape(X.shape)


def _line_terms(R: SpectralRegularizer, Sp: np.ndarray, Dp: np.ndarray, mode: str):
    """Line-quadratic contributions (c0, c1, c2) of a batch of patches.

    The curvature term uses the row/column form of the majorizer: with
    full unitary factors the off-diagonal energy collapses to row norms
    of U^H D (wide) or column norms of D V (tall), so thin factors
    suffice.
    """
    if mode not in ("GR", "GL"):
        raise ValueError(f"unknown curvature mode: {mode!r}")
    _require_nondecreasing(R)
    u, sig, vh = np.linalg.svd(Sp, full_matrices=False)
    pot = R.potential
    w = R.weights_for(sig.shape[-1])
    c0 = float(np.sum(w * pot(sig)))
    T = np.einsum("bpk,bpn->bkn", u.conj(), Dp)
    diag = np.einsum("bkn,bkn->bk", T, vh.conj())
    c1 = float(np.sum(w * pot.deriv(sig) * np.real(diag)))
    if mode == "GR":
        curv = w * np.asarray(pot.weight(sig))
    else:
        curv = w * pot.weight_at_zero() * np.ones_like(sig)
    P, N = Sp.shape[1], Sp.shape[2]
    if P <= N:  # wide (square counts as wide): thin U is complete
        energy = np.sum(np.abs(T) ** 2, axis=2)
    else:  # tall: thin V is complete
        DV = np.matmul(Dp, np.swapaxes(vh, 1, 2).conj())
        energy = np.sum(np.abs(DV) ** 2, axis=1)
    c2 = float(np.sum(curv * energy))
    return c0, c1, c2


def llr_line_coeffs(
    R: SpectralRegularizer,
    X: np.ndarray,
    D: np.ndarray,
    abar: float,
    geom: PatchGeometry,
    mode: str,
    deterministic: bool = False,
) -> LineQuadratic:
    """Majorizer of ``alpha -> llr_value(X + alpha * D)`` expanded at ``abar``.

    Sums the per-patch line quadratics over every (shift, anchor) pair;
    fresh SVDs of the patches of ``X + abar * D`` each call.
    """
    if deterministic:
        c0 = c1 = c2 = 0.0
        for s in geom.shifts:
            Xs = shift(X, s, geom)
            Ds = shift(D, s, geom)
            for p in geom.anchors:
                q = reg_line_coeffs(
                    R,
                    extract_patch(Xs, p, geom),
                    extract_patch(Ds, p, geom),
                    abar,
                    mode,
                )
                c0, c1, c2 = c0 + q.c0, c1 + q.c1, c2 + q.c2
        return LineQuadratic(c0=c0, c1=c1, c2=c2, center=float(abar))
    S = X + abar * D
    c0 = c1 = c2 = 0.0
    for s in geom.shifts:
        t0, t1, t2 = _line_terms(
            R, _shifted_patches(S, s, geom), _shifted_patches(D, s, geom), mode
        )
        c0, c1, c2 = c0 + t0, c1 + t1, c2 + t2
    return LineQuadratic(c0=c0, c1=c1, c2=c2, center=float(abar))


def llr_line_coeffs_fast(
    R: SpectralRegularizer,
    X: np.ndarray,
    D: np.ndarray,
    abar: float,
    geom: PatchGeometry,
    mode: str,
    sbar=(0, 0),
) -> LineQuadratic:
    """Single-shift heuristic: coefficients of shift ``sbar`` scaled by |Lambda|.

    One batch of SVDs instead of |Lambda|; the result is generally not
    a true majorizer, so descent is no longer guaranteed.
    """
    sbar = (int(sbar[0]), int(sbar[1]))
    if sbar not in geom.shifts:
        raise ValueError(f"sbar={sbar} is not in the shift set")
    S = X + abar * D
    t0, t1, t2 = _line_terms(
        R, _shifted_patches(S, sbar, geom), _shifted_patches(D, sbar, geom), mode
    )
    n = float(len(geom.shifts))
    return LineQuadratic(c0=n * t0, c1=n * t1, c2=n * t2, center=float(abar))
