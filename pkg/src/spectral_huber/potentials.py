"""Scalar Huber-type potentials.

A potential is an even, differentiable function ``phi`` whose weighting
function ``omega(t) = phi'(t) / t`` is bounded, nonnegative, and
nonincreasing for ``t > 0``.  Every such potential admits an optimal
quadratic majorizer around any expansion point ``s``:

    q(t; s) = phi(s) + phi'(s) (t - s) + 0.5 omega(s) (t - s)^2,

and ``omega(0)`` is the Lipschitz constant of ``phi'``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Below this fraction of delta, weight() returns its analytic limit at zero.
# omega is flat near the origin for every supported potential, so the
# switch is invisible at double precision but avoids a 0/0 evaluation.
_LIMIT_CUTOFF = 1e-3


@dataclass(frozen=True)
class QuadCoeffs1D:
    """Coefficients of a scalar quadratic expanded at ``center``.

    Represents ``q(t) = c0 + c1 (t - center) + 0.5 c2 (t - center)^2``
    with curvature ``c2 >= 0``.
    """

    c0: float
    c1: float
    c2: float
    center: float

    def __call__(self, t):
        d = np.asarray(t, dtype=float) - self.center
        return self.c0 + self.c1 * d + 0.5 * self.c2 * d * d


class Potential:
    """Base class; subclasses supply value/deriv/weight as a closed triple."""

    kind = "base"
    convex = False

    def __call__(self, t):
        raise NotImplementedError

    def deriv(self, t):
        raise NotImplementedError

    def weight(self, t):
        """Weighting function ``phi'(t) / t`` with its analytic limit at 0."""
        raise NotImplementedError

    def weight_at_zero(self) -> float:
        """Maximum curvature; the Lipschitz constant of the derivative."""
        return float(self.weight(0.0))

    def majorizer(self, s: float) -> QuadCoeffs1D:
        """Optimal quadratic majorizer of the potential around ``s``."""
        s = float(s)
        return QuadCoeffs1D(
            c0=float(self(s)),
            c1=float(self.deriv(s)),
            c2=float(self.weight(s)),
            center=s,
        )


@dataclass(frozen=True)
class Hyperbola(Potential):
    """phi(t) = delta^2 sqrt(1 + (t/delta)^2); convex, asymptotically |t|."""

    delta: float = 1.0
    kind = "hyperbola"
    convex = True

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.delta**2 * np.sqrt(1.0 + (t / self.delta) ** 2)

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        return t / np.sqrt(1.0 + (t / self.delta) ** 2)

    def weight(self, t):
        t = np.asarray(t, dtype=float)
        w = 1.0 / np.sqrt(1.0 + (t / self.delta) ** 2)
        return np.where(np.abs(t) < _LIMIT_CUTOFF * self.delta, 1.0, w)


@dataclass(frozen=True)
class Cauchy(Potential):
    """phi(t) = 0.5 delta^2 log(1 + (t/delta)^2); bounded derivative, non-convex."""

    delta: float = 1.0
    kind = "cauchy"
    convex = False

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return 0.5 * self.delta**2 * np.log1p((t / self.delta) ** 2)

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        return t / (1.0 + (t / self.delta) ** 2)

    def weight(self, t):
        t = np.asarray(t, dtype=float)
        w = 1.0 / (1.0 + (t / self.delta) ** 2)
        return np.where(np.abs(t) < _LIMIT_CUTOFF * self.delta, 1.0, w)


@dataclass(frozen=True)
class Parabola(Potential):
    """phi(t) = t^2; the quadratic reference case, omega identically 2."""

    delta: float = 1.0  # unused; kept so all potentials share a constructor
    kind = "parabola"
    convex = True

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return t * t

    def deriv(self, t):
        return 2.0 * np.asarray(t, dtype=float)

    def weight(self, t):
        t = np.asarray(t, dtype=float)
        return np.full_like(t, 2.0)


_KINDS = {"hyperbola": Hyperbola, "cauchy": Cauchy, "parabola": Parabola}


def make_potential(kind: str, delta: float = 1.0) -> Potential:
    """Construct a potential by config name ("hyperbola", "cauchy", "parabola")."""
    try:
        cls = _KINDS[kind.lower()]
    except KeyError:
        raise ValueError(f"unknown potential kind: {kind!r}") from None
    return cls(delta=float(delta))
