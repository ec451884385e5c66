"""Coordinate geometry and UAV kinematic primitives.

Positions are plain ``numpy`` arrays of shape ``(3,)`` in meters, with the
z-axis pointing up.  Relative geometry between a UAV and the target is
expressed as (distance, azimuth, elevation-from-z); azimuth lives in
``(-pi, pi]`` and elevation in ``[0, pi]``.  Controls are polar
(speed, heading, tilt) triples that translate into a per-step Cartesian
displacement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Vec3 = np.ndarray  # shape (3,), float64

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi

# Below this value of sin(elevation) the azimuth is numerically undefined
# (line of sight along the z-axis); bearing rows are dropped downstream.
POLE_SIN_EPS = 1e-9


class DegenerateGeometryError(ValueError):
    """Raised when two points coincide and direction angles are undefined."""


def vec3(x: float, y: float, z: float) -> Vec3:
    return np.array([x, y, z], dtype=float)


def wrap_angle(angle: float) -> float:
    """Wrap an angle to ``(-pi, pi]``."""
    a = math.fmod(angle + math.pi, TWO_PI)
    if a <= 0.0:
        a += TWO_PI
    return a - math.pi


@dataclass(frozen=True)
class SphericalRelative:
    """Target geometry seen from a UAV: distance, azimuth, elevation-from-z.

    ``at_pole`` marks a line of sight along the z-axis, where the azimuth is
    undefined and reported as 0 by convention.
    """

    d: float
    phi: float
    theta: float
    at_pole: bool = False


@dataclass(frozen=True)
class KinematicLimits:
    """Speed range and per-step turn limits for the heading and tilt angles."""

    v_min: float
    v_max: float
    psi_max: float
    theta_max: float
    dt: float

    def validate(self) -> None:
        if not 0.0 <= self.v_min <= self.v_max:
            raise ValueError(f"need 0 <= v_min <= v_max, got [{self.v_min}, {self.v_max}]")
        if self.psi_max <= 0.0 or self.theta_max <= 0.0:
            raise ValueError("turn-rate limits must be positive")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")


def relative_spherical(p_uav: Vec3, p_target: Vec3) -> SphericalRelative:
    """Spherical coordinates of ``p_target`` relative to ``p_uav``.

    Raises :class:`DegenerateGeometryError` for coincident points.  On the
    z-axis (elevation 0 or pi) the azimuth is reported as 0 and the result
    is flagged ``at_pole``.
    """
    dx = float(p_target[0] - p_uav[0])
    dy = float(p_target[1] - p_uav[1])
    dz = float(p_target[2] - p_uav[2])
    d = math.sqrt(dx * dx + dy * dy + dz * dz)
    if d < 1e-12:
        raise DegenerateGeometryError("UAV and target positions coincide")
    r_xy = math.hypot(dx, dy)
    at_pole = r_xy < POLE_SIN_EPS * d
    phi = 0.0 if at_pole else math.atan2(dy, dx)
    theta = math.acos(max(-1.0, min(1.0, dz / d)))
    return SphericalRelative(d=d, phi=phi, theta=theta, at_pole=at_pole)


def direction_vector(phi: float, theta: float) -> Vec3:
    """Unit vector for azimuth ``phi`` and elevation-from-z ``theta``."""
    st = math.sin(theta)
    return np.array([math.cos(phi) * st, math.sin(phi) * st, math.cos(theta)])


def control_from_polar(v: float, psi: float, theta: float, dt: float) -> Vec3:
    """Cartesian displacement for one step at speed ``v``, heading ``psi``, tilt ``theta``."""
    step = v * dt
    st = math.sin(theta)
    return np.array(
        [step * math.cos(psi) * st, step * math.sin(psi) * st, step * math.cos(theta)]
    )


def polar_from_control(
    u: Vec3,
    dt: float,
    prev_psi: float = 0.0,
    prev_theta: float = HALF_PI,
) -> tuple[float, float, float]:
    """Invert :func:`control_from_polar`.

    A zero displacement has no defined direction; the previous heading and
    tilt are carried over with speed 0 so the turn-rate clamp stays
    continuous.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    ux, uy, uz = float(u[0]), float(u[1]), float(u[2])
    norm = math.sqrt(ux * ux + uy * uy + uz * uz)
    if norm < 1e-15:
        return 0.0, prev_psi, prev_theta
    r_xy = math.hypot(ux, uy)
    theta = math.atan2(r_xy, uz)
    psi = prev_psi if r_xy < POLE_SIN_EPS * norm else math.atan2(uy, ux)
    return norm / dt, psi, theta


def clamp_kinematics(
    proposed: tuple[float, float, float],
    previous: tuple[float, float],
    limits: KinematicLimits,
) -> tuple[float, float, float]:
    """Clamp a polar control to the speed range and per-step turn limits.

    Heading differences are taken on the wrapped circle; tilt is kept in
    ``[0, pi]``.  Idempotent: re-clamping a clamped control is a no-op.
    """
    v, psi, theta = proposed
    psi_prev, theta_prev = previous
    v = min(max(v, limits.v_min), limits.v_max)
    dpsi = wrap_angle(psi - psi_prev)
    dpsi = min(max(dpsi, -limits.psi_max), limits.psi_max)
    psi = wrap_angle(psi_prev + dpsi)
    dtheta = theta - theta_prev
    dtheta = min(max(dtheta, -limits.theta_max), limits.theta_max)
    theta = min(max(theta_prev + dtheta, 0.0), math.pi)
    return v, psi, theta
