"""Per-UAV extended Kalman filter over heterogeneous shared radar records.

The filter state is the target position and velocity.  Every step the
belief is propagated through the target motion model, then corrected with
the stacked rows of all line-of-sight records in the agent's information
vector: ranging and bearing rows act on the position block, the Doppler row
couples position (through the apparent angular motion of the target) and
velocity.  Records relayed over several hops are aged but are still applied
as measurements of the current state; obstructed records are discarded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .radar import MeasurementRecord
from .world import MotionModel

# Bearing rows divide by sin(elevation); below this value the geometry is
# treated as on the z-axis pole and the rows are dropped.
BEARING_SIN_GUARD = 1e-6


class TrackingError(RuntimeError):
    """Raised when the innovation covariance cannot be inverted."""


@dataclass(frozen=True)
class Belief:
    """Gaussian belief over the 6-dim target state."""

    mean: np.ndarray  # (6,)
    cov: np.ndarray  # (6, 6)


def init_belief(position_std: float = 20.0, velocity_std: float = 0.5) -> Belief:
    """Diffuse starting belief centered at the origin."""
    cov = np.diag([position_std**2] * 3 + [velocity_std**2] * 3).astype(float)
    return Belief(mean=np.zeros(6), cov=cov)


def predict(belief: Belief, model: MotionModel) -> Belief:
    """Propagate the belief through the target motion model."""
    a = model.transition
    mean = a @ belief.mean
    cov = a @ belief.cov @ a.T + model.noise_cov
    cov = 0.5 * (cov + cov.T)
    return Belief(mean=mean, cov=cov)


def angular_velocity(
    target_position, target_velocity, uav_position, uav_velocity
) -> np.ndarray:
    """Apparent angular velocity of the target seen from the UAV.

    Cross product of relative position and relative velocity over the squared
    distance; undefined for coincident points.
    """
    dp = np.asarray(target_position, dtype=float) - np.asarray(uav_position, dtype=float)
    dv = np.asarray(target_velocity, dtype=float) - np.asarray(uav_velocity, dtype=float)
    d_sq = float(dp @ dp)
    if d_sq <= 0.0:
        raise ValueError("angular velocity undefined for coincident points")
    return np.cross(dp, dv) / d_sq


def _channel_rows(
    m_minus: np.ndarray,
    sender_position: np.ndarray,
    sender_velocity: np.ndarray,
    has_range: bool,
    has_bearing: bool,
    has_doppler: bool,
    gamma: float,
    wavelength: float,
):
    """Rows of the linearized observation model at the predicted state.

    Returns a list of (label, predicted value, 6-row) triples in the fixed
    order range, azimuth, elevation, doppler.  Bearing rows are omitted when
    the predicted geometry sits on the z-axis pole.
    """
    dx = m_minus[0] - sender_position[0]
    dy = m_minus[1] - sender_position[1]
    dz = m_minus[2] - sender_position[2]
    d_sq = dx * dx + dy * dy + dz * dz
    d = math.sqrt(d_sq)
    if d < 1e-12:
        raise ValueError("predicted target coincides with the sender position")
    rows = []
    if has_range:
        half_g = 0.5 * gamma
        scale = half_g / d
        rows.append(("range", half_g * d, (scale * dx, scale * dy, scale * dz, 0.0, 0.0, 0.0)))
    r_xy_sq = dx * dx + dy * dy
    r_xy = math.sqrt(r_xy_sq)
    if has_bearing:
        if r_xy > BEARING_SIN_GUARD * d:
            rows.append(
                ("azimuth", math.atan2(dy, dx), (-dy / r_xy_sq, dx / r_xy_sq, 0.0, 0.0, 0.0, 0.0))
            )
            el_scale = 1.0 / (d_sq * r_xy)
            rows.append(
                (
                    "elevation",
                    math.acos(max(-1.0, min(1.0, dz / d))),
                    (el_scale * dx * dz, el_scale * dy * dz, -el_scale * r_xy_sq, 0.0, 0.0, 0.0),
                )
            )
    if has_doppler:
        vx = m_minus[3] - sender_velocity[0]
        vy = m_minus[4] - sender_velocity[1]
        vz = m_minus[5] - sender_velocity[2]
        radial = (dx * vx + dy * vy + dz * vz) / d
        k = gamma / (2.0 * wavelength)
        # position sensitivity: k * (v_rel - a * radial) / d, the transverse
        # part of the relative velocity over the distance
        inv_d = 1.0 / d
        ax, ay, az = dx * inv_d, dy * inv_d, dz * inv_d
        rows.append(
            (
                "doppler",
                k * radial,
                (
                    k * (vx - ax * radial) * inv_d,
                    k * (vy - ay * radial) * inv_d,
                    k * (vz - az * radial) * inv_d,
                    k * ax,
                    k * ay,
                    k * az,
                ),
            )
        )
    return rows


def jacobian(
    m_minus: np.ndarray,
    sender_position,
    sender_velocity,
    caps,
    profile,
) -> tuple[np.ndarray, list[str]]:
    """Stacked observation Jacobian for one sender at the predicted state.

    Returns the rows (one per available channel, in range/azimuth/elevation/
    doppler order) and the matching channel labels; bearing rows are dropped
    at the z-axis pole.
    """
    rows = _channel_rows(
        np.asarray(m_minus, dtype=float),
        np.asarray(sender_position, dtype=float),
        np.asarray(sender_velocity, dtype=float),
        caps.ranging,
        caps.bearing,
        caps.doppler,
        profile.gamma,
        profile.wavelength,
    )
    labels = [label for label, _, _ in rows]
    jac = np.array([row for _, _, row in rows], dtype=float).reshape(len(rows), 6)
    return jac, labels


def update(belief_minus: Belief, info: list[MeasurementRecord]) -> Belief:
    """Correct the predicted belief with all line-of-sight records.

    With no usable rows the prediction is returned unchanged.  Azimuth
    innovations are wrapped to (-pi, pi] and the covariance update uses the
    Joseph form to stay positive semidefinite over long runs.
    """
    m = belief_minus.mean
    rows: list[tuple[float, float, float, float, float, float]] = []
    innovations: list[float] = []
    variances: list[float] = []
    for rec in info:
        if not rec.los:
            continue
        try:
            channel_rows = _channel_rows(
                m,
                rec.sender_position,
                rec.sender_velocity,
                rec.range_obs is not None,
                rec.azimuth_obs is not None,
                rec.doppler_obs is not None,
                rec.gamma,
                rec.wavelength,
            )
        except ValueError:
            # predicted target sits on the sender: no usable linearization
            continue
        for label, h_val, row in channel_rows:
            if label == "range":
                innov = rec.range_obs - h_val
                var = rec.range_var
            elif label == "azimuth":
                innov = rec.azimuth_obs - h_val
                innov = math.remainder(innov, 2.0 * math.pi)
                var = rec.bearing_var
            elif label == "elevation":
                innov = rec.elevation_obs - h_val
                var = rec.bearing_var
            else:
                innov = rec.doppler_obs - h_val
                var = rec.doppler_var
            rows.append(row)
            innovations.append(innov)
            variances.append(var)

    if not rows:
        return belief_minus

    h_mat = np.array(rows, dtype=float)
    nu = np.array(innovations, dtype=float)
    r_diag = np.array(variances, dtype=float)
    p_minus = belief_minus.cov
    ph_t = p_minus @ h_mat.T
    s = h_mat @ ph_t
    s[np.diag_indices_from(s)] += r_diag
    try:
        gain = np.linalg.solve(s, ph_t.T).T
    except np.linalg.LinAlgError as exc:
        raise TrackingError(
            f"singular innovation covariance (cond={np.linalg.cond(s):.3e})"
        ) from exc
    mean = m + gain @ nu
    i_kh = np.eye(6) - gain @ h_mat
    cov = i_kh @ p_minus @ i_kh.T + (gain * r_diag) @ gain.T
    cov = 0.5 * (cov + cov.T)
    return Belief(mean=mean, cov=cov)
