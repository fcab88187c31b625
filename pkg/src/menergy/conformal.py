"""Conformal-angle numerators via reflection across (x - y)^perp.

The angle between the two tangent m-spheres through a pair of points is
computed by reflecting one mock tangent plane across the hyperplane
orthogonal to the chord and measuring the angle metric to the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grassmann import Subspace, angle_metric, principal_angles

_DEGENERATE_REL_TOL = 1e-14


class DegeneratePairError(ValueError):
    """The two points coincide (up to the relative tolerance)."""


def _chord(x, y):
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    d = x - y
    scale = max(np.linalg.norm(x), np.linalg.norm(y), 1.0)
    if np.linalg.norm(d) < _DEGENERATE_REL_TOL * scale:
        raise DegeneratePairError("points coincide; conformal angle undefined")
    return d


@dataclass(frozen=True)
class PointPlanePair:
    """Two distinct points with their mock tangent planes."""

    x: np.ndarray
    y: np.ndarray
    hx: Subspace
    hy: Subspace

    def __post_init__(self) -> None:
        _chord(self.x, self.y)
        if (
            self.hx.ambient_dim != self.hy.ambient_dim
            or self.hx.dim != self.hy.dim
        ):
            raise ValueError("tangent planes have incompatible dimensions")

    def swapped(self) -> "PointPlanePair":
        return PointPlanePair(x=self.y, y=self.x, hx=self.hy, hy=self.hx)


def reflect(x, y, z):
    """Reflect the vector z across the hyperplane (x - y)^perp.

    An involutive linear isometry of R^n.
    """
    d = _chord(x, y)
    z = np.asarray(z, float)
    return z - (2.0 / np.dot(d, d)) * np.dot(z, d) * d


def reflect_subspace(x, y, h: Subspace) -> Subspace:
    """Image of a subspace under the reflection across (x - y)^perp."""
    d = _chord(x, y)
    coeff = 2.0 / np.dot(d, d)
    frame = h.frame - coeff * np.outer(h.frame @ d, d)
    return Subspace(frame)  # reflection is exact; constructor absorbs roundoff


def _power(base: float, exponent: float) -> float:
    # 0^positive = 0 by convention; log-space keeps tiny bases flag-free
    if base <= 0.0:
        return 0.0
    if base < 1e-300:
        return math.exp(exponent * math.log(base))
    return base ** exponent


def conformal_angle(pair: PointPlanePair) -> float:
    """sin of the largest principal angle between the reflected planes."""
    return angle_metric(reflect_subspace(pair.x, pair.y, pair.hx), pair.hy)


def numerator_ltau(pair: PointPlanePair, tau: float, m: int) -> float:
    """Conformal-angle numerator: angle metric to the power (1 + tau) * m."""
    if tau <= -1:
        raise ValueError("tau must exceed -1")
    return _power(conformal_angle(pair), (1.0 + tau) * m)


def pointwise_ftau(x, y, hy: Subspace, e, tau: float, m: int) -> float:
    """Directional version of the numerator for a unit vector e in H(x).

    The numerator equals the supremum of this quantity over unit e.
    """
    d = _chord(x, y)
    e = np.asarray(e, float)
    v = hy.project_complement(e) - (
        2.0 * np.dot(e, d) / np.dot(d, d)
    ) * hy.project_complement(d)
    return _power(float(np.linalg.norm(v)), (1.0 + tau) * m)


def numerator_ks(pair: PointPlanePair, m: int) -> float:
    """Kusner-Sullivan numerator (1 - cos(combined angle))^m of the
    reflected pair."""
    reflected = reflect_subspace(pair.x, pair.y, pair.hx)
    cosines = principal_angles(reflected, pair.hy).cosines
    return _power(1.0 - float(np.prod(cosines)), m)


def angle_power_lower_constant(tau: float, m: int) -> float:
    """c(tau, m) with c * sin(theta)^((1+tau)m) <= (1 - cos theta)^m, tau > 1."""
    if tau <= 1:
        raise ValueError("constant only defined for tau > 1")
    base = (1.0 - 1.0 / tau) * (1.0 - 1.0 / tau**2) ** (-(1.0 + tau) / 2.0)
    return min(1.0, base**m)


def comparison_constant(tau: float, m: int):
    """(lower, upper) with lower * E_tau <= E_KS <= upper * E_tau.

    upper is None when no upper comparison holds (tau > 1).
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if tau < 1:
        return 0.0, math.sqrt(m) ** ((1.0 + tau) * m)
    if tau == 1:
        return 2.0**-m, float(m) ** m
    return angle_power_lower_constant(tau, m), None
