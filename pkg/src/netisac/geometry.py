"""Array geometry, steering vectors, distances, and path-loss primitives.

All angles are in radians, measured from the positive x-axis; every base
station's uniform linear array has its broadside along the global x-axis,
so the same angle convention serves both sensing and communication links.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ArraySpec:
    """Antenna counts and element spacing (in wavelengths) of a ULA."""

    n_tx: int
    n_rx: int
    spacing_ratio: float = 0.5

    def __post_init__(self) -> None:
        if self.n_tx < 1 or self.n_rx < 1:
            raise ValueError("antenna counts must be at least 1")
        if self.spacing_ratio <= 0:
            raise ValueError("spacing_ratio must be positive")


@dataclass(frozen=True)
class Point2D:
    """Planar position in meters."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("coordinates must be finite")

    def distance_to(self, other: "Point2D") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)


@dataclass(frozen=True)
class SensingLinkParams:
    """One transmitter-to-target-to-receiver echo link.

    beta is the linear round-trip path loss, zeta the radar-cross-section
    amplitude, and theta_tx / theta_rx the target angles seen from the
    transmitting and receiving base stations.
    """

    beta: float
    zeta: float
    theta_tx: float
    theta_rx: float

    def __post_init__(self) -> None:
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")


def steering_vector(theta: float, n: int, spacing_ratio: float = 0.5) -> np.ndarray:
    """Unit-modulus ULA steering vector of length n.

    Entry k equals exp(j*2*pi*spacing_ratio*k*sin(theta)), so the Euclidean
    norm is sqrt(n).
    """
    if n < 1:
        raise ValueError("steering vector needs at least one element")
    if spacing_ratio <= 0:
        raise ValueError("spacing_ratio must be positive")
    phase = 2.0 * np.pi * spacing_ratio * np.sin(theta) * np.arange(n)
    return np.exp(1j * phase)


def angle_from(bs: Point2D, target: Point2D) -> float:
    """Angle of `target` as seen from `bs`, against the global x-axis."""
    dx = target.x - bs.x
    dy = target.y - bs.y
    if dx == 0.0 and dy == 0.0:
        raise ValueError("angle undefined for coincident points")
    return math.atan2(dy, dx)


def round_trip_pathloss(d_l: float, d_m: float, kappa: float, d_ref: float) -> float:
    """Two-way echo path loss kappa^2 * d_ref^4 / (d_m^2 * d_l^2)."""
    if d_l <= 0 or d_m <= 0 or d_ref <= 0:
        raise ValueError("distances must be positive")
    return kappa**2 * d_ref**4 / (d_m**2 * d_l**2)


def comm_pathloss(d: float, kappa_hat: float, d0: float, nu: float) -> float:
    """One-way link gain kappa_hat * (d0 / d)^nu."""
    if d <= 0 or d0 <= 0:
        raise ValueError("distances must be positive")
    return kappa_hat * (d0 / d) ** nu


def target_response_matrix(link: SensingLinkParams, arrays: ArraySpec) -> np.ndarray:
    """End-to-end echo response: sqrt(beta)*zeta * a_rx(theta_rx) a_tx(theta_tx)^T.

    Rank is at most one; the Frobenius norm squared equals
    beta * zeta^2 * n_rx * n_tx for any pair of angles.
    """
    a_rx = steering_vector(link.theta_rx, arrays.n_rx, arrays.spacing_ratio)
    a_tx = steering_vector(link.theta_tx, arrays.n_tx, arrays.spacing_ratio)
    return math.sqrt(link.beta) * link.zeta * np.outer(a_rx, a_tx)
