"""Antenna array geometry: element positions, exact propagation distances,
distance gradients, aperture, and near/far field classification.

Supports centered uniform linear arrays (elements on the x axis) and uniform
circular arrays (elements on a circle around the origin). All angles are in
radians, all lengths in meters.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299792458.0


class DegenerateGeometry(ValueError):
    """Raised when the target coincides with an antenna element."""


class ArrayKind(enum.Enum):
    ULA = "ula"
    UCA = "uca"


@dataclass(frozen=True)
class TargetLocation:
    """Polar target coordinates: angle from the positive x axis and range.

    The distance must be positive. Any finite angle is accepted at the type
    level; ULA closed-form expressions additionally require theta in (0, pi)
    and enforce that at the call site.
    """

    theta: float
    r: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.r)):
            raise ValueError("target location must be finite")
        if not self.r > 0:
            raise ValueError("target distance must be > 0")

    @property
    def xy(self) -> np.ndarray:
        return np.array(
            [self.r * math.cos(self.theta), self.r * math.sin(self.theta)]
        )


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear or circular array centered on the coordinate origin.

    ULA: element n = 0..N-1 sits at (chi_n * d, 0) with chi_n = n - (N-1)/2,
    so the array midpoint is the origin. Aperture is (N-1) * d.

    UCA: element n = 1..N sits at radius R = N*d/(2*pi) and azimuth
    psi_n = 2*pi*n/N, where d is the arc spacing between neighbours.
    Aperture is the diameter 2R.
    """

    kind: ArrayKind
    n_antennas: int
    spacing: float

    def __post_init__(self):
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 1:
            raise ValueError("n_antennas must be a positive integer")
        if not (math.isfinite(self.spacing) and self.spacing > 0):
            raise ValueError("spacing must be > 0")

    @classmethod
    def ula(cls, n_antennas: int, spacing: float) -> "ArrayGeometry":
        return cls(ArrayKind.ULA, n_antennas, spacing)

    @classmethod
    def uca(cls, n_antennas: int, spacing: float) -> "ArrayGeometry":
        return cls(ArrayKind.UCA, n_antennas, spacing)

    @classmethod
    def ula_from_aperture(cls, n_antennas: int, aperture: float) -> "ArrayGeometry":
        """ULA with exact physical aperture (N-1)*d = aperture. Needs N >= 2."""
        if n_antennas < 2:
            raise ValueError("aperture-specified ULA needs at least 2 antennas")
        return cls(ArrayKind.ULA, n_antennas, aperture / (n_antennas - 1))

    @classmethod
    def uca_from_aperture(cls, n_antennas: int, aperture: float) -> "ArrayGeometry":
        """UCA with diameter 2R = aperture."""
        return cls(ArrayKind.UCA, n_antennas, math.pi * aperture / n_antennas)

    @property
    def radius(self) -> float:
        """Circle radius R = N*d/(2*pi). Only meaningful for UCAs."""
        if self.kind is not ArrayKind.UCA:
            raise ValueError("radius is defined for UCAs only")
        return self.n_antennas * self.spacing / (2.0 * math.pi)

    @property
    def aperture(self) -> float:
        """Exact aperture: (N-1)*d for a ULA, 2R for a UCA."""
        if self.kind is ArrayKind.ULA:
            return (self.n_antennas - 1) * self.spacing
        return 2.0 * self.radius

    @property
    def closed_form_aperture(self) -> float:
        """Aperture variant consumed by the large-N closed forms: N*d for a
        ULA (the integral limit treats element offsets as midpoints of N
        panels spanning N*d), 2R for a UCA."""
        if self.kind is ArrayKind.ULA:
            return self.n_antennas * self.spacing
        return 2.0 * self.radius

    def element_offsets(self) -> np.ndarray:
        """ULA: signed offsets chi_n (unitless multiples of the spacing).
        UCA: azimuths psi_n in radians, n = 1..N."""
        n = np.arange(self.n_antennas, dtype=float)
        if self.kind is ArrayKind.ULA:
            return n - (self.n_antennas - 1) / 2.0
        return 2.0 * math.pi * (n + 1.0) / self.n_antennas


def antenna_positions(geom: ArrayGeometry) -> np.ndarray:
    """Cartesian element coordinates, shape (N, 2), in element order."""
    off = geom.element_offsets()
    pos = np.zeros((geom.n_antennas, 2))
    if geom.kind is ArrayKind.ULA:
        pos[:, 0] = off * geom.spacing
    else:
        pos[:, 0] = geom.radius * np.cos(off)
        pos[:, 1] = geom.radius * np.sin(off)
    return pos


def propagation_distances(geom: ArrayGeometry, loc: TargetLocation) -> np.ndarray:
    """Exact element-to-target distances r_n for all elements, shape (N,).

    Uses the law-of-cosines form, which equals the Euclidean norm
    ||target - q_n|| of the element coordinates.
    """
    if geom.kind is ArrayKind.ULA:
        x = geom.element_offsets() * geom.spacing
        sq = loc.r**2 + x**2 - 2.0 * loc.r * x * math.cos(loc.theta)
    else:
        radius = geom.radius
        psi = geom.element_offsets()
        sq = loc.r**2 + radius**2 - 2.0 * loc.r * radius * np.cos(loc.theta - psi)
    # guard tiny negative round-off under the square root
    return np.sqrt(np.maximum(sq, 0.0))


def propagation_distance(geom: ArrayGeometry, n: int, loc: TargetLocation) -> float:
    """Exact distance from element n to the target."""
    if not 0 <= n < geom.n_antennas:
        raise IndexError(f"antenna index {n} out of range")
    return float(propagation_distances(geom, loc)[n])


def distance_gradients(
    geom: ArrayGeometry, loc: TargetLocation
) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives (d r_n / d theta, d r_n / d r) for all elements.

    Raises DegenerateGeometry when the target sits exactly on an element
    (r_n = 0), where the gradient is undefined.
    """
    rn = propagation_distances(geom, loc)
    if np.any(rn == 0.0):
        raise DegenerateGeometry("target coincides with an antenna element")
    if geom.kind is ArrayKind.ULA:
        x = geom.element_offsets() * geom.spacing
        d_theta = loc.r * x * math.sin(loc.theta) / rn
        d_r = (loc.r - x * math.cos(loc.theta)) / rn
    else:
        radius = geom.radius
        delta = loc.theta - geom.element_offsets()
        d_theta = loc.r * radius * np.sin(delta) / rn
        d_r = (loc.r - radius * np.cos(delta)) / rn
    return d_theta, d_r


def distance_gradient(
    geom: ArrayGeometry, n: int, loc: TargetLocation
) -> tuple[float, float]:
    """Gradient of r_n with respect to (theta, r) for a single element."""
    if not 0 <= n < geom.n_antennas:
        raise IndexError(f"antenna index {n} out of range")
    d_theta, d_r = distance_gradients(geom, loc)
    return float(d_theta[n]), float(d_r[n])


def rayleigh_distance(geom: ArrayGeometry, wavelength: float) -> float:
    """Near/far field boundary 2 D^2 / lambda for the exact aperture D."""
    if not wavelength > 0:
        raise ValueError("wavelength must be > 0")
    return 2.0 * geom.aperture**2 / wavelength
