"""Forward operators, the data-consistency term, and synthetic problems.

The data model is ``Y = A(X) + E`` with ``X`` an M x N space-by-frame
matrix, ``A`` a linear operator into S x N measurement space, and the
data-consistency cost ``f(X) = 0.5 ||A(X) - Y||_F^2``.  The concrete
operator multiplies each frame by coil sensitivity maps, applies a
unitary 2D Fourier transform, and zeroes unsampled k-space locations
with per-frame binary masks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DimensionMismatch, InfeasibleMask
from .linesearch import LineQuadratic
from .llr import PatchGeometry
from .spectral import real_inner


class ForwardOperator:
    """Linear map from M x N image matrices to S x N data matrices."""

    shape_in: tuple
    rows_out: int

    def apply(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def adjoint(self, Z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_input(self, X):
        X = np.asarray(X)
        if X.shape != self.shape_in:
            raise DimensionMismatch(
                f"expected {self.shape_in} input, got {X.shape}"
            )
        return X

    def _check_data(self, Z):
        Z = np.asarray(Z)
        if Z.shape != (self.rows_out, self.shape_in[1]):
            raise DimensionMismatch(
                f"expected {(self.rows_out, self.shape_in[1])} data, got {Z.shape}"
            )
        return Z


class IdentityOperator(ForwardOperator):
    """A(X) = X; used by small test problems."""

    def __init__(self, M: int, N: int):
        self.shape_in = (M, N)
        self.rows_out = M

    def apply(self, X):
        return np.array(self._check_input(X), dtype=complex)

    def adjoint(self, Z):
        return np.array(self._check_data(Z), dtype=complex)


class MriOperator(ForwardOperator):
    """Coil maps, unitary per-frame 2D FFT, and binary k-space masks.

    Parameters
    ----------
    coils : (C, m_x, m_y) complex
        Sensitivity maps; rows of the output stack coil-major.
    masks : (N, m_x, m_y)
        Binary per-frame sampling masks.  Every k-space location must
        be sampled in at least one frame.
    """

    def __init__(self, coils: np.ndarray, masks: np.ndarray):
        coils = np.asarray(coils, dtype=complex)
        masks = np.asarray(masks)
        if coils.ndim != 3 or masks.ndim != 3:
            raise DimensionMismatch("coils and masks must be 3-d stacks")
        if coils.shape[1:] != masks.shape[1:]:
            raise DimensionMismatch(
                f"coil grid {coils.shape[1:]} != mask grid {masks.shape[1:]}"
            )
        if not np.all((masks == 0) | (masks == 1)):
            raise ValueError("masks must be binary")
        if not np.all(masks.any(axis=0)):
            raise InfeasibleMask("some k-space location is never sampled")
        self.coils = coils
        self.masks = masks.astype(bool)
        C, m_x, m_y = coils.shape
        N = masks.shape[0]
        self.m_x, self.m_y, self.n_coils = m_x, m_y, C
        self.shape_in = (m_x * m_y, N)
        self.rows_out = C * m_x * m_y
        # (m_x, m_y, N) layout used for broadcasting against image stacks
        self._mask_stack = np.ascontiguousarray(
            self.masks.transpose(1, 2, 0)
        ).astype(float)

    def apply(self, X):
        X = self._check_input(X)
        N = X.shape[1]
        stack = X.reshape(self.m_x, self.m_y, N)
        arr = self.coils[:, :, :, None] * stack[None, :, :, :]
        k = np.fft.fft2(arr, axes=(1, 2), norm="ortho")
        k *= self._mask_stack[None, :, :, :]
        return k.reshape(self.rows_out, N)

    def adjoint(self, Z):
        Z = self._check_data(Z)
        N = Z.shape[1]
        arr = Z.reshape(self.n_coils, self.m_x, self.m_y, N)
        arr = arr * self._mask_stack[None, :, :, :]
        img = np.fft.ifft2(arr, axes=(1, 2), norm="ortho")
        out = np.sum(np.conj(self.coils)[:, :, :, None] * img, axis=0)
        return out.reshape(self.shape_in)


@dataclass
class ReconstructionProblem:
    """Operator, data, optional ground truth, patch geometry, and strength."""

    operator: ForwardOperator
    Y: np.ndarray
    geom: PatchGeometry
    truth: Optional[np.ndarray] = None
    lam: Optional[float] = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=complex)
        expect = (self.operator.rows_out, self.operator.shape_in[1])
        if self.Y.shape != expect:
            raise DimensionMismatch(f"data shape {self.Y.shape}, expected {expect}")
        if self.truth is not None:
            self.truth = np.asarray(self.truth, dtype=complex)
            if self.truth.shape != self.operator.shape_in:
                raise DimensionMismatch(
                    f"truth shape {self.truth.shape}, expected {self.operator.shape_in}"
                )
        if self.operator.shape_in[0] != self.geom.M:
            raise DimensionMismatch("geometry does not match operator grid")


def f_value(P: ReconstructionProblem, X: np.ndarray) -> float:
    """Data-consistency cost ``0.5 ||A(X) - Y||_F^2``."""
    res = P.operator.apply(X) - P.Y
    return 0.5 * float(np.vdot(res, res).real)


def f_grad(P: ReconstructionProblem, X: np.ndarray) -> np.ndarray:
    """Gradient ``A*(A(X) - Y)``."""
    return P.operator.adjoint(P.operator.apply(X) - P.Y)


def f_line_coeffs(
    P: ReconstructionProblem, X: np.ndarray, D: np.ndarray, abar: float
) -> LineQuadratic:
    """Exact quadratic of ``alpha -> f(X + alpha * D)`` expanded at ``abar``."""
    res = P.operator.apply(X + abar * D) - P.Y
    AD = P.operator.apply(D)
    return LineQuadratic(
        c0=0.5 * float(np.vdot(res, res).real),
        c1=real_inner(res, AD),
        c2=float(np.vdot(AD, AD).real),
        center=float(abar),
    )


def _smooth_field(rng, m_x: int, m_y: int, width: float) -> np.ndarray:
    """Zero-mean complex random field, low-pass filtered to be smooth."""
    z = rng.standard_normal((m_x, m_y)) + 1j * rng.standard_normal((m_x, m_y))
    fx = np.fft.fftfreq(m_x)[:, None]
    fy = np.fft.fftfreq(m_y)[None, :]
    env = np.exp(-(fx**2 + fy**2) / (2.0 * width**2))
    f = np.fft.ifft2(np.fft.fft2(z) * env)
    scale = np.max(np.abs(f))
    return f / scale if scale > 0 else f


def _smooth_profile(rng, N: int) -> np.ndarray:
    """Smooth periodic temporal profile from a few low harmonics."""
    q_max = min(2, N // 2)
    t = np.arange(N)
    prof = np.zeros(N, dtype=complex)
    for q in range(-q_max, q_max + 1):
        c = (rng.standard_normal() + 1j * rng.standard_normal()) / (1.0 + abs(q))
        prof += c * np.exp(2j * np.pi * q * t / N)
    return prof


def _coil_maps(rng, n_coils: int, m_x: int, m_y: int) -> np.ndarray:
    """Smooth complex maps with unit root-sum-of-squares at every voxel."""
    x = np.arange(m_x)[:, None]
    y = np.arange(m_y)[None, :]
    coils = np.empty((n_coils, m_x, m_y), dtype=complex)
    for c in range(n_coils):
        ang = 2.0 * np.pi * c / n_coils
        cx = 0.5 * (m_x - 1) + 0.4 * m_x * np.cos(ang)
        cy = 0.5 * (m_y - 1) + 0.4 * m_y * np.sin(ang)
        sigma2 = (0.6 * max(m_x, m_y)) ** 2
        bump = np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * sigma2))
        phase = 0.6 * np.real(_smooth_field(rng, m_x, m_y, 0.06))
        coils[c] = bump * np.exp(1j * phase)
    rss = np.sqrt(np.sum(np.abs(coils) ** 2, axis=0))
    return coils / rss[None, :, :]


def _sampling_masks(
    rng, n_frames: int, m_x: int, m_y: int, accel: float
) -> np.ndarray:
    """Variable-density random masks, fully sampled center, full union."""
    if accel < 1:
        raise ValueError("acceleration must be >= 1")
    if accel == 1:
        return np.ones((n_frames, m_x, m_y), dtype=bool)
    if n_frames < accel:
        raise InfeasibleMask(
            f"{n_frames} frames cannot cover k-space at acceleration {accel}"
        )
    dx = (np.arange(m_x)[:, None] - m_x // 2) / m_x
    dy = (np.arange(m_y)[None, :] - m_y // 2) / m_y
    density = 1.0 / (1.0 + (dx**2 + dy**2) / 0.08**2)
    center = (np.abs(np.arange(m_x)[:, None] - m_x // 2) < 2) & (
        np.abs(np.arange(m_y)[None, :] - m_y // 2) < 2
    )
    target = 1.0 / accel
    lo, hi = 0.0, 1e6  # bisection for the density scale hitting the target rate
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        prob = np.minimum(mid * density, 1.0)
        prob[center] = 1.0
        if prob.mean() > target:
            hi = mid
        else:
            lo = mid
    prob = np.minimum(0.5 * (lo + hi) * density, 1.0)
    prob[center] = 1.0
    masks = rng.random((n_frames, m_x, m_y)) < prob[None, :, :]
    uncovered = ~masks.any(axis=0)
    if np.any(uncovered):
        frames = rng.integers(0, n_frames, size=int(uncovered.sum()))
        ux, uy = np.nonzero(uncovered)
        masks[frames, ux, uy] = True
    # masks were built in centered coordinates; move DC back to index 0
    return np.fft.ifftshift(masks, axes=(1, 2))


def generate_synthetic(
    seed: int,
    m_x: int = 32,
    m_y: int = 32,
    n_frames: int = 8,
    n_coils: int = 4,
    rank: int = 3,
    accel: float = 4.0,
    noise_sigma: float = 0.01,
    patch=(4, 4),
    lam: Optional[float] = None,
) -> ReconstructionProblem:
    """Synthetic dynamic reconstruction problem, deterministic given seed.

    The ground truth is a globally rank-``rank`` Casorati matrix built
    from smooth random spatial modes and smooth temporal profiles,
    scaled to unit peak magnitude.  Coil maps are smooth with unit
    root-sum-of-squares; masks keep roughly ``1/accel`` of k-space per
    frame with a fully sampled center and union coverage; the data are
    corrupted by complex white Gaussian noise of std ``noise_sigma`` on
    the sampled locations.
    """
    rng = np.random.default_rng(seed)
    stack = np.zeros((m_x, m_y, n_frames), dtype=complex)
    for j in range(rank):
        spatial = _smooth_field(rng, m_x, m_y, 0.08)
        temporal = _smooth_profile(rng, n_frames)
        stack += (0.6**j) * spatial[:, :, None] * temporal[None, None, :]
    peak = np.max(np.abs(stack))
    if peak > 0:
        stack /= peak
    truth = stack.reshape(m_x * m_y, n_frames)

    coils = _coil_maps(rng, n_coils, m_x, m_y)
    masks = _sampling_masks(rng, n_frames, m_x, m_y, accel)
    op = MriOperator(coils, masks)

    Y = op.apply(truth)
    if noise_sigma > 0:
        noise = noise_sigma / np.sqrt(2.0) * (
            rng.standard_normal(Y.shape) + 1j * rng.standard_normal(Y.shape)
        )
        mask_rows = np.broadcast_to(
            op._mask_stack[None, :, :, :], (n_coils, m_x, m_y, n_frames)
        ).reshape(Y.shape)
        Y = Y + noise * mask_rows

    geom = PatchGeometry(m_x, m_y, patch[0], patch[1])
    info = {
        "seed": int(seed),
        "sigma": float(noise_sigma),
        "acceleration": float(accel),
        "rank": int(rank),
    }
    return ReconstructionProblem(
        operator=op, Y=Y, geom=geom, truth=truth, lam=lam, info=info
    )


def datashare_init(P: ReconstructionProblem) -> np.ndarray:
    """Data-sharing initializer.

    Fills each frame's unsampled k-space locations from the nearest
    sampled frame (ties to the earlier frame), then applies the adjoint
    with an all-ones mask, coil-combining with the conjugate maps.
    """
    op = P.operator
    if not isinstance(op, MriOperator):
        raise ValueError("data-sharing initialization needs a masked Fourier operator")
    C, m_x, m_y = op.n_coils, op.m_x, op.m_y
    N = P.Y.shape[1]
    sampled = op._mask_stack.astype(bool)  # (m_x, m_y, N)
    if not np.all(sampled.any(axis=2)):
        raise InfeasibleMask("some k-space location is never sampled")
    t = np.arange(N)
    prev = np.maximum.accumulate(np.where(sampled, t, -1), axis=2)
    flipped = np.flip(np.where(sampled, t, 2 * N), axis=2)
    nxt = np.flip(np.minimum.accumulate(flipped, axis=2), axis=2)
    d_prev = np.where(prev >= 0, t - prev, np.inf)
    d_next = np.where(nxt < 2 * N, nxt - t, np.inf)
    pick = np.where(d_prev <= d_next, prev, nxt).astype(np.intp)

    Yc = P.Y.reshape(C, m_x, m_y, N)
    filled = np.take_along_axis(Yc, np.broadcast_to(pick, Yc.shape), axis=3)
    img = np.fft.ifft2(filled, axes=(1, 2), norm="ortho")
    out = np.sum(np.conj(op.coils)[:, :, :, None] * img, axis=0)
    return out.reshape(op.shape_in)
