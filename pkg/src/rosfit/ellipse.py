"""Elliptical spread geometry seen from a burning cell's center (a focus).

All rates are in m/min. Semi-axes grow linearly in time, so only their
rates are stored.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

# Upper clamp for the eccentricity; keeps 1 - e*cos(phi) > 0.
ECC_MAX = 1.0 - 1e-6
# fros may exceed the semi-major rate by rounding alone (LB = 1 after scaling);
# within this relative slack the ellipse is taken to be a circle.
CIRCLE_RTOL = 1e-12


class EllipseError(ValueError):
    pass


class RosTriple(NamedTuple):
    hros: float
    fros: float
    bros: float


class FactorTuple(NamedTuple):
    x1: float = 1.0  # HROS
    x2: float = 1.0  # FROS
    x3: float = 1.0  # BROS
    x4: float = 1.0  # eccentricity

    def validate(self) -> "FactorTuple":
        for v in self:
            if not (math.isfinite(v) and v >= 0):
                raise EllipseError(f"adjustment factors must be finite and >= 0, got {tuple(self)}")
        return self


IDENTITY = FactorTuple(1.0, 1.0, 1.0, 1.0)


class EllipseRates(NamedTuple):
    a_rate: float
    b_rate: float
    ecc: float


def derive_flank_ros(hros: float, bros: float, lb: float) -> float:
    if not lb >= 1:
        raise EllipseError(f"invalid length-to-breadth ratio {lb} (< 1)")
    if hros < 0 or bros < 0:
        raise EllipseError(f"negative rate of spread: hros={hros}, bros={bros}")
    return (hros + bros) / (2.0 * lb)


def _check_triple(ros) -> None:
    if min(ros) < 0 or not all(math.isfinite(v) for v in ros):
        raise EllipseError(f"rates of spread must be finite and >= 0, got {tuple(ros)}")


def ellipse_rates(ros: RosTriple) -> EllipseRates:
    """Semi-axis rates and eccentricity for an (H, F, B) triple."""
    hros, fros, bros = ros
    _check_triple(ros)
    a = (hros + bros) / 2.0
    if fros > a * (1.0 + CIRCLE_RTOL):
        raise EllipseError(
            f"imaginary eccentricity: fros={fros} exceeds semi-major rate {a}")
    if a == 0.0:
        return EllipseRates(0.0, 0.0, 0.0)
    if fros > a:
        return EllipseRates(a, a, 0.0)
    ratio = fros / a
    ecc = math.sqrt(1.0 - ratio * ratio)
    if ecc > ECC_MAX:
        ecc = ECC_MAX
        return EllipseRates(a, a * math.sqrt(1.0 - ecc * ecc), ecc)
    return EllipseRates(a, fros, ecc)


def apply_factors(ros: RosTriple, x: FactorTuple) -> EllipseRates:
    """Scale H/F/B by x1..x3, then scale the eccentricity by x4.

    The scaled eccentricity is clamped to [0, ECC_MAX]; when it moves, the
    minor rate is recomputed from it so the shape stays consistent.
    """
    x = FactorTuple(*x).validate()
    hros, fros, bros = ros
    base = ellipse_rates(RosTriple(x.x1 * hros, x.x2 * fros, x.x3 * bros))
    ecc = min(max(x.x4 * base.ecc, 0.0), ECC_MAX)
    if ecc == base.ecc:
        return base
    return EllipseRates(base.a_rate, base.a_rate * math.sqrt(1.0 - ecc * ecc), ecc)


def spread_rate(er: EllipseRates, phi: float) -> float:
    """Rate of spread at ``phi`` degrees off the head direction."""
    a, _, e = er
    if a == 0.0:
        return 0.0
    return a * (1.0 - e * e) / (1.0 - e * math.cos(math.radians(phi)))


def spread_rates(er: EllipseRates, phi) -> np.ndarray:
    """Vectorised :func:`spread_rate` over an array of angles."""
    phi = np.asarray(phi, dtype=np.float64)
    a, _, e = er
    if a == 0.0:
        return np.zeros_like(phi)
    return a * (1.0 - e * e) / (1.0 - e * np.cos(np.radians(phi)))
