"""Solvers for the locally low-rank reconstruction cost.

The primary solver is nonlinear conjugate gradients with
Fletcher-Reeves momentum and a majorize-minimize step-size rule on the
smooth composite cost

    K(X) = 0.5 ||A(X) - Y||_F^2 + lam * R_llr(X).

Baselines are FISTA and POGM with the nonsmooth nuclear-norm version
of the regularizer, handled heuristically through the average of the
per-patch proximal mappings (singular value thresholding).
"""

from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass, field as dataclass_field
from typing import List, Optional, Tuple

import numpy as np

from .exceptions import ConvergenceFailure, NonFinite, ZeroReference
from .linesearch import combine_line_coeffs, mm_step
from .llr import (
    PatchGeometry,
    _shifted_patches,
    _unblockify,
    llr_grad,
    llr_line_coeffs,
    llr_line_coeffs_fast,
    llr_value,
    llr_value_and_grad,
)
from .model import ReconstructionProblem, f_grad, f_line_coeffs, f_value
from .spectral import SpectralRegularizer, real_inner, singular_values

LOG_HEADER = ("iter", "cost", "alpha", "gradnorm", "nrmse", "seconds")


def nrmse(X: np.ndarray, X_ref: np.ndarray) -> float:
    """Frobenius error of X relative to the reference norm."""
    ref = float(np.linalg.norm(X_ref))
    if ref == 0.0:
        raise ZeroReference("reference matrix is zero")
    return float(np.linalg.norm(np.asarray(X) - np.asarray(X_ref))) / ref


def dist_to_limit(X_k: np.ndarray, X_inf: np.ndarray) -> float:
    """Normalized squared distance to a limit point (squared norms)."""
    ref = float(np.linalg.norm(X_inf)) ** 2
    if ref == 0.0:
        raise ZeroReference("limit matrix is zero")
    return float(np.linalg.norm(np.asarray(X_k) - np.asarray(X_inf))) ** 2 / ref


@dataclass
class SolverConfig:
    """Solver options; defaults follow the single-MM-step configuration."""

    method: str = "ncg"
    max_iter: int = 100
    lam: Optional[float] = None
    n_alpha: int = 1
    alpha0: float = 0.0
    curvature: str = "GR"
    fast_step: bool = False
    sbar: Tuple[int, int] = (0, 0)
    eta: float = 0.0
    deterministic_reduce: bool = False
    store_every: int = 1  # iterate storage interval; 0 disables

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")


@dataclass
class LogRow:
    iteration: int
    cost: float
    alpha: float
    gradnorm: float
    nrmse: float
    seconds: float


@dataclass
class IterationLog:
    """Per-iteration records plus optionally stored iterates."""

    rows: List[LogRow] = dataclass_field(default_factory=list)
    iterates: List[Tuple[int, np.ndarray]] = dataclass_field(default_factory=list)
    fast_cost_increases: int = 0

    def append(self, **kw):
        self.rows.append(LogRow(**kw))

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(LOG_HEADER)
            for r in self.rows:
                writer.writerow(
                    [r.iteration, r.cost, r.alpha, r.gradnorm, r.nrmse, r.seconds]
                )


def _nuclear_subgrad(X: np.ndarray, geom: PatchGeometry) -> np.ndarray:
    """Subgradient of the summed patchwise nuclear norm (U V^H per patch)."""
    X = np.asarray(X, dtype=complex)
    out = np.zeros((geom.m_x, geom.m_y, X.shape[1]), dtype=complex)
    for s in geom.shifts:
        u, _, vh = np.linalg.svd(_shifted_patches(X, s, geom), full_matrices=False)
        out += np.roll(_unblockify(np.matmul(u, vh), geom), (-s[0], -s[1]), axis=(0, 1))
    return out.reshape(X.shape)


def default_lam(
    P: ReconstructionProblem,
    X0: np.ndarray,
    R: Optional[SpectralRegularizer] = None,
) -> float:
    """Strength making the initial regularizer pull ~10% of the data pull.

    Solves ``lam * ||grad R_llr(X0)|| = 0.1 * ||grad f(X0)||`` with the
    gradient of the regularizer the method actually uses: the smooth
    one when ``R`` is given, the nuclear-norm subgradient otherwise
    (baselines).
    """
    gf = float(np.linalg.norm(f_grad(P, X0)))
    if R is not None:
        gr = float(np.linalg.norm(llr_grad(R, X0, P.geom)))
    else:
        gr = float(np.linalg.norm(_nuclear_subgrad(X0, P.geom)))
    if gr == 0.0:
        return 0.0
    return 0.1 * gf / gr


def _resolve_lam(P, cfg, X0, R=None) -> float:
    if cfg.lam is not None:
        return float(cfg.lam)
    if P.lam is not None:
        return float(P.lam)
    return default_lam(P, X0, R)


def _check_finite(name, value):
    if not np.all(np.isfinite(value)):
        raise NonFinite(f"{name} became non-finite")


def ncg_solve(
    P: ReconstructionProblem,
    R: SpectralRegularizer,
    cfg: SolverConfig,
    X0: np.ndarray,
) -> Tuple[np.ndarray, IterationLog]:
    """Nonlinear conjugate gradients with MM step sizes.

    Each iteration minimizes the combined line quadratic (exact data
    term plus the patchwise regularizer majorizer, or its single-shift
    fast variant) for ``n_alpha`` MM steps, updates along the search
    direction, and applies Fletcher-Reeves momentum with a reset to
    steepest descent whenever the new direction stops being a descent
    direction.  Stops at ``max_iter`` or when the gradient norm falls
    below ``eta``.
    """
    geom = P.geom
    mode = cfg.curvature
    det = cfg.deterministic_reduce
    lam = _resolve_lam(P, cfg, X0, R)
    log = IterationLog()

    def cost_and_grad(X):
        fv = f_value(P, X)
        gf = f_grad(P, X)
        if det:
            rv = llr_value(R, X, geom, deterministic=True)
            rg = llr_grad(R, X, geom, deterministic=True)
        else:
            rv, rg = llr_value_and_grad(R, X, geom)
        return fv + lam * rv, gf + lam * rg

    def record(k, X, cost, alpha, gradnorm, seconds):
        err = nrmse(X, P.truth) if P.truth is not None else float("nan")
        log.append(
            iteration=k,
            cost=cost,
            alpha=alpha,
            gradnorm=gradnorm,
            nrmse=err,
            seconds=seconds,
        )
        if cfg.store_every > 0 and k % cfg.store_every == 0:
            log.iterates.append((k, X.copy()))

    X = np.array(X0, dtype=complex)
    tic = time.perf_counter()
    cost, G = cost_and_grad(X)
    _check_finite("cost", cost)
    _check_finite("gradient", G)
    gradnorm = float(np.linalg.norm(G))
    record(0, X, cost, 0.0, gradnorm, time.perf_counter() - tic)

    D = -G
    gnorm2 = gradnorm**2
    for k in range(1, cfg.max_iter + 1):
        if gradnorm < cfg.eta:
            break
        tic = time.perf_counter()

        def provider(abar):
            qf = f_line_coeffs(P, X, D, abar)
            if cfg.fast_step:
                qr = llr_line_coeffs_fast(R, X, D, abar, geom, mode, cfg.sbar)
            else:
                qr = llr_line_coeffs(R, X, D, abar, geom, mode, deterministic=det)
            return combine_line_coeffs(qf, qr, lam)

        alpha = mm_step(provider, cfg.alpha0, cfg.n_alpha)
        X = X + alpha * D
        new_cost, G = cost_and_grad(X)
        _check_finite("cost", new_cost)
        _check_finite("gradient", G)
        new_gnorm2 = float(np.vdot(G, G).real)
        beta = new_gnorm2 / gnorm2 if gnorm2 > 0 else 0.0
        D = -G + beta * D
        if real_inner(-G, D) <= 0.0:
            D = -G
        if cfg.fast_step and new_cost > cost:
            log.fast_cost_increases += 1
            warnings.warn(
                f"fast step increased the cost at iteration {k}", RuntimeWarning
            )
        cost = new_cost
        gnorm2 = new_gnorm2
        gradnorm = float(np.sqrt(new_gnorm2))
        record(k, X, cost, alpha, gradnorm, time.perf_counter() - tic)
    _store_final(log, cfg, X)
    return X, log


def _store_final(log: IterationLog, cfg: SolverConfig, X: np.ndarray):
    if cfg.store_every > 0 and log.rows:
        last = log.rows[-1].iteration
        if not log.iterates or log.iterates[-1][0] != last:
            log.iterates.append((last, X.copy()))


def svt(C: np.ndarray, tau: float) -> np.ndarray:
    """Singular value soft-thresholding; accepts stacked matrices."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    try:
        u, s, vh = np.linalg.svd(np.asarray(C), full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    s = np.maximum(s - tau, 0.0)
    return np.matmul(u * s[..., None, :], vh)


def prox_average_llr(X: np.ndarray, geom: PatchGeometry, tau: float) -> np.ndarray:
    """Average of the per-(shift, anchor) nuclear-norm proximal mappings.

    Implemented in difference form so the unpatched mass is preserved:
    X plus the shift-averaged scatter of ``svt(patch) - patch``, with
    ``tau`` the per-term threshold.  With a single anchor and single
    shift this is exactly ``svt(X, tau)``.
    """
    X = np.asarray(X, dtype=complex)
    if tau == 0.0:
        return X.copy()
    acc = np.zeros((geom.m_x, geom.m_y, X.shape[1]), dtype=complex)
    for s in geom.shifts:
        patches = _shifted_patches(X, s, geom)
        diff = svt(patches, tau) - patches
        acc += np.roll(_unblockify(diff, geom), (-s[0], -s[1]), axis=(0, 1))
    return X + acc.reshape(X.shape) / len(geom.shifts)


def nuclear_llr(X: np.ndarray, geom: PatchGeometry) -> float:
    """Sum of nuclear norms over all (shift, anchor) patches."""
    total = 0.0
    for s in geom.shifts:
        total += float(np.sum(singular_values(_shifted_patches(X, s, geom))))
    return total


# Power iteration approaches ||A||^2 from below, and momentum methods
# diverge (slowly but geometrically) when the step exceeds 1/L.  The
# baselines therefore pad the estimate by a small safety margin.
_LMAX_MARGIN = 1.05


def power_lmax(P: ReconstructionProblem, iters: int = 20, seed: int = 0) -> float:
    """Largest eigenvalue of A*A (= ||A||^2) by power iteration."""
    rng = np.random.default_rng(seed)
    M, N = P.operator.shape_in
    v = rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N))
    v /= np.linalg.norm(v)
    lmax = 1.0
    for _ in range(iters):
        w = P.operator.adjoint(P.operator.apply(v))
        n = float(np.linalg.norm(w))
        if n == 0.0:
            return 1.0
        lmax = n
        v = w / n
    return lmax


def _baseline_log(P, geom, lam, log, cfg, k, X, seconds):
    cost = f_value(P, X) + lam * nuclear_llr(X, geom)
    _check_finite("cost", cost)
    err = nrmse(X, P.truth) if P.truth is not None else float("nan")
    log.append(
        iteration=k, cost=cost, alpha=0.0, gradnorm=float("nan"),
        nrmse=err, seconds=seconds,
    )
    if cfg.store_every > 0 and k % cfg.store_every == 0:
        log.iterates.append((k, X.copy()))


def fista_pa_solve(
    P: ReconstructionProblem, cfg: SolverConfig, X0: np.ndarray
) -> Tuple[np.ndarray, IterationLog]:
    """FISTA with proximal-average handling of the patchwise nuclear norm."""
    geom = P.geom
    lam = _resolve_lam(P, cfg, X0)
    L = _LMAX_MARGIN * power_lmax(P)
    step = 1.0 / L
    log = IterationLog()
    X = np.array(X0, dtype=complex)
    Z = X.copy()
    t = 1.0
    tic = time.perf_counter()
    _baseline_log(P, geom, lam, log, cfg, 0, X, time.perf_counter() - tic)
    for k in range(1, cfg.max_iter + 1):
        tic = time.perf_counter()
        W = Z - step * f_grad(P, Z)
        Xn = prox_average_llr(W, geom, lam * step)
        _check_finite("iterate", Xn)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        Z = Xn + ((t - 1.0) / t_next) * (Xn - X)
        X, t = Xn, t_next
        _baseline_log(P, geom, lam, log, cfg, k, X, time.perf_counter() - tic)
    _store_final(log, cfg, X)
    return X, log


def pogm_pa_solve(
    P: ReconstructionProblem, cfg: SolverConfig, X0: np.ndarray
) -> Tuple[np.ndarray, IterationLog]:
    """POGM with proximal-average handling of the patchwise nuclear norm."""
    geom = P.geom
    lam = _resolve_lam(P, cfg, X0)
    L = _LMAX_MARGIN * power_lmax(P)
    step = 1.0 / L
    log = IterationLog()
    x = np.array(X0, dtype=complex)
    u_prev = x.copy()
    z_prev = x.copy()
    theta_prev = 1.0
    gamma_prev = step
    tic = time.perf_counter()
    _baseline_log(P, geom, lam, log, cfg, 0, x, time.perf_counter() - tic)
    for k in range(1, cfg.max_iter + 1):
        tic = time.perf_counter()
        u = x - step * f_grad(P, x)
        if k < cfg.max_iter:
            theta = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta_prev**2))
        else:
            theta = 0.5 * (1.0 + np.sqrt(1.0 + 8.0 * theta_prev**2))
        z = (
            u
            + ((theta_prev - 1.0) / theta) * (u - u_prev)
            + (theta_prev / theta) * (u - x)
            + ((theta_prev - 1.0) / (L * gamma_prev * theta)) * (z_prev - x)
        )
        gamma = step * (2.0 * theta_prev + theta - 1.0) / theta
        x_new = prox_average_llr(z, geom, lam * gamma)
        _check_finite("iterate", x_new)
        u_prev, z_prev, x = u, z, x_new
        theta_prev, gamma_prev = theta, gamma
        _baseline_log(P, geom, lam, log, cfg, k, x, time.perf_counter() - tic)
    _store_final(log, cfg, x)
    return x, log


def solve(
    P: ReconstructionProblem,
    cfg: SolverConfig,
    X0: np.ndarray,
    R: Optional[SpectralRegularizer] = None,
) -> Tuple[np.ndarray, IterationLog]:
    """Dispatch on ``cfg.method`` ("ncg", "fista_pa", "pogm_pa")."""
    method = cfg.method.lower()
    if method == "ncg":
        if R is None:
            raise ValueError("ncg needs a spectral regularizer")
        return ncg_solve(P, R, cfg, X0)
    if method == "fista_pa":
        return fista_pa_solve(P, cfg, X0)
    if method == "pogm_pa":
        return pogm_pa_solve(P, cfg, X0)
    raise ValueError(f"unknown method: {cfg.method!r}")
