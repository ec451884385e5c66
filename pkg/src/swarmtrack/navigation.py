"""Information-driven navigation: cost, analytic gradient, projected control.

Each UAV steers to shrink the volume of the target-position uncertainty
ellipsoid: the cost is the negative log determinant of the fused position
information matrix.  Only the UAV's own sensing term depends on its own
position, so the cost gradient follows from differentiating that term's six
matrix entries through the sensing geometry (distance, azimuth, elevation,
and the apparent angular motion for Doppler), including the growth of the
ranging and Doppler noise with distance.  The determinant derivative is
assembled from the cofactors by the product rule.

The raw step is the negative normalized gradient projected onto the null
space of active constraint normals (inter-UAV spacing, target standoff,
obstacle clearance), plus a restoration term that pushes violated
constraints back to their boundary.  The step is then converted to a polar
control, clamped to the kinematic limits, and backtracked if it would cross
or enter an obstacle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .geometry import (
    KinematicLimits,
    Vec3,
    clamp_kinematics,
    control_from_polar,
    polar_from_control,
)
from .information import SenderGeometry
from .tracker import BEARING_SIN_GUARD
from .world import Obstacle, clearance_with_gradient, los_visible

logger = logging.getLogger(__name__)

ENTRY_INDEX = {"xx": 0, "yy": 1, "zz": 2, "xy": 3, "xz": 4, "yz": 5}
_ENTRY_PAIRS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


def cost(info_matrix: np.ndarray) -> float:
    """Negative log determinant of the information matrix.

    Returns ``inf`` when the determinant is not positive (no volume
    reduction possible); non-finite entries are an error.
    """
    info_matrix = np.asarray(info_matrix, dtype=float)
    if not np.all(np.isfinite(info_matrix)):
        raise ValueError("information matrix has non-finite entries")
    sign, logdet = np.linalg.slogdet(info_matrix)
    if sign <= 0:
        return math.inf
    return -logdet


def _sender_term(
    dx: float,
    dy: float,
    dz: float,
    dvx: float,
    dvy: float,
    dvz: float,
    sender: SenderGeometry,
    want_gradient: bool,
    distance_scaled_noise: bool,
):
    """Entries (and own-position entry gradients) of one sender's term.

    The deltas are target minus sender.  Gradients are with respect to the
    sender position, which flips the sign of every delta derivative.
    """
    d_sq = dx * dx + dy * dy + dz * dz
    d = math.sqrt(d_sq)
    if d <= 0.0:
        raise ValueError("target coincides with a sender position")
    inv_d = 1.0 / d
    ax, ay, az = dx * inv_d, dy * inv_d, dz * inv_d
    a_vec = (ax, ay, az)

    profile = sender.profile
    gamma = profile.gamma
    d_pow = d**gamma / sender.rcs

    channels = []  # (c, c_prime, g (3,), hessian rows (3 x 3))
    if sender.caps.ranging:
        c = gamma**2 / (4.0 * profile.sigma_r0_sq * d_pow)
        c_prime = -gamma * c * inv_d if distance_scaled_noise else 0.0
        g = a_vec
        # hessian of the distance, scaled into this channel's gradient norm
        h = [
            ((1.0 - ax * ax) * inv_d, -ax * ay * inv_d, -ax * az * inv_d),
            (-ax * ay * inv_d, (1.0 - ay * ay) * inv_d, -ay * az * inv_d),
            (-ax * az * inv_d, -ay * az * inv_d, (1.0 - az * az) * inv_d),
        ]
        channels.append((c, c_prime, g, h))

    r_xy_sq = dx * dx + dy * dy
    r_xy = math.sqrt(r_xy_sq)
    if sender.caps.bearing and r_xy > BEARING_SIN_GUARD * d:
        bearing_c = 1.0 / profile.sigma_b0**2
        inv_r2 = 1.0 / r_xy_sq
        g_az = (-dy * inv_r2, dx * inv_r2, 0.0)
        inv_r4 = inv_r2 * inv_r2
        h_az = [
            (2.0 * dx * dy * inv_r4, (dy * dy - dx * dx) * inv_r4, 0.0),
            ((dy * dy - dx * dx) * inv_r4, -2.0 * dx * dy * inv_r4, 0.0),
            (0.0, 0.0, 0.0),
        ]
        channels.append((bearing_c, 0.0, g_az, h_az))

        el_scale = 1.0 / (d_sq * r_xy)
        g_el = (dx * dz * el_scale, dy * dz * el_scale, -r_xy_sq * el_scale)
        d4 = d_sq * d_sq
        r3 = r_xy_sq * r_xy
        h_xx = dz * (d_sq * r_xy_sq - 2.0 * dx * dx * r_xy_sq - dx * dx * d_sq) / (d4 * r3)
        h_yy = dz * (d_sq * r_xy_sq - 2.0 * dy * dy * r_xy_sq - dy * dy * d_sq) / (d4 * r3)
        h_xy = -dx * dy * dz * (2.0 * r_xy_sq + d_sq) / (d4 * r3)
        h_xz = dx * (r_xy_sq - dz * dz) / (r_xy * d4)
        h_yz = dy * (r_xy_sq - dz * dz) / (r_xy * d4)
        h_zz = 2.0 * r_xy * dz / d4
        h_el = [(h_xx, h_xy, h_xz), (h_xy, h_yy, h_yz), (h_xz, h_yz, h_zz)]
        channels.append((bearing_c, 0.0, g_el, h_el))

    if sender.caps.doppler:
        radial = ax * dvx + ay * dvy + az * dvz
        k = gamma / (2.0 * profile.wavelength)
        g_dop = (
            k * (dvx - ax * radial) * inv_d,
            k * (dvy - ay * radial) * inv_d,
            k * (dvz - az * radial) * inv_d,
        )
        c = sender.rcs / (profile.sigma_d0_sq * d**gamma)
        c_prime = -gamma * c * inv_d if distance_scaled_noise else 0.0
        inv_d2 = inv_d * inv_d
        s_d2 = radial * inv_d2
        dv = (dvx, dvy, dvz)
        h_dop = [
            tuple(
                k
                * (
                    -(dv[r] * a_vec[col] + a_vec[r] * dv[col]) * inv_d2
                    - (s_d2 if r == col else 0.0)
                    + 3.0 * s_d2 * a_vec[r] * a_vec[col]
                )
                for col in range(3)
            )
            for r in range(3)
        ]
        channels.append((c, c_prime, g_dop, h_dop))

    entries = [0.0] * 6
    grads = [[0.0, 0.0, 0.0] for _ in range(6)] if want_gradient else None
    for c, c_prime, g, h in channels:
        for idx, (ea, eb) in enumerate(_ENTRY_PAIRS):
            prod = g[ea] * g[eb]
            entries[idx] += c * prod
            if want_gradient:
                ga, gb = g[ea], g[eb]
                ha, hb = h[ea], h[eb]
                row = grads[idx]
                for col in range(3):
                    # gradient w.r.t. sender position = -(gradient w.r.t. delta)
                    row[col] -= c_prime * prod * a_vec[col] + c * (
                        ha[col] * gb + ga * hb[col]
                    )
    return entries, grads


def fim_entries_and_own_gradient(
    target_position,
    target_velocity,
    senders: list[SenderGeometry],
    own_index: int | None,
    prior_entries=None,
    distance_scaled_noise: bool = True,
):
    """Total information entries plus their gradient in the own position.

    Neighbors are held at their reported positions, so only the sender at
    ``own_index`` contributes to the gradient; an obstructed own sender
    leaves the gradient at zero.  Entry order is xx, yy, zz, xy, xz, yz.
    """
    tp = np.asarray(target_position, dtype=float)
    tv = np.asarray(target_velocity, dtype=float)
    entries = np.zeros(6) if prior_entries is None else np.array(prior_entries, dtype=float)
    grad = np.zeros((6, 3))
    for idx, sender in enumerate(senders):
        if not sender.los:
            continue
        want_grad = own_index is not None and idx == own_index
        term, term_grad = _sender_term(
            tp[0] - sender.position[0],
            tp[1] - sender.position[1],
            tp[2] - sender.position[2],
            tv[0] - sender.velocity[0],
            tv[1] - sender.velocity[1],
            tv[2] - sender.velocity[2],
            sender,
            want_grad,
            distance_scaled_noise,
        )
        for e in range(6):
            entries[e] += term[e]
        if want_grad:
            grad = np.array(term_grad)
    return entries, grad


def gradient_from_entries(entries, entry_grads) -> np.ndarray:
    """Cost gradient from the entry values and entry gradients.

    Expands the determinant over the first row's cofactors and applies the
    product rule, then divides by the determinant with a flipped sign
    (gradient of the negative log determinant).
    """
    jxx, jyy, jzz, jxy, jxz, jyz = entries
    gxx, gyy, gzz, gxy, gxz, gyz = (np.asarray(g, dtype=float) for g in entry_grads)

    c_xx = jyy * jzz - jyz * jyz
    c_xy = jxz * jyz - jxy * jzz
    c_xz = jxy * jyz - jxz * jyy
    det = jxx * c_xx + jxy * c_xy + jxz * c_xz
    if not det > 0.0:
        raise ValueError(f"information matrix is singular (det={det:.3e})")

    d_c_xx = gyy * jzz + jyy * gzz - 2.0 * jyz * gyz
    d_c_xy = gxz * jyz + jxz * gyz - gxy * jzz - jxy * gzz
    d_c_xz = gxy * jyz + jxy * gyz - gxz * jyy - jxz * gyy
    d_det = (
        gxx * c_xx
        + jxx * d_c_xx
        + gxy * c_xy
        + jxy * d_c_xy
        + gxz * c_xz
        + jxz * d_c_xz
    )
    return -d_det / det


def cost_gradient(
    target_position,
    target_velocity,
    senders: list[SenderGeometry],
    own_index: int,
    prior_cov: np.ndarray,
    distance_scaled_noise: bool = True,
) -> np.ndarray:
    """Gradient of the navigation cost in the own UAV position.

    ``prior_cov`` is the 6x6 predictive covariance whose inverted position
    block enters the information matrix as a constant.  Returns zero when
    the own sender is obstructed (nothing in the cost depends on the own
    position then).
    """
    prior_info = np.linalg.inv(prior_cov)[:3, :3]
    prior_entries = np.array(
        [
            prior_info[0, 0],
            prior_info[1, 1],
            prior_info[2, 2],
            prior_info[0, 1],
            prior_info[0, 2],
            prior_info[1, 2],
        ]
    )
    entries, entry_grads = fim_entries_and_own_gradient(
        target_position,
        target_velocity,
        senders,
        own_index,
        prior_entries,
        distance_scaled_noise,
    )
    if not senders[own_index].los:
        return np.zeros(3)
    return gradient_from_entries(entries, entry_grads)


@dataclass(frozen=True)
class NavConfig:
    """Step size, constraint thresholds, and kinematic limits of one UAV."""

    limits: KinematicLimits
    step_size_m: float = 8.0
    activation_band_m: float = 1.0
    d_min_uav_m: float = 5.0
    d_min_target_m: float = 5.0
    d_min_obstacle_m: float = 5.0

    def validate(self) -> None:
        if self.step_size_m <= 0:
            raise ValueError("step size must be positive")
        if self.activation_band_m < 0:
            raise ValueError("activation band must be nonnegative")
        self.limits.validate()


@dataclass(frozen=True)
class ConstraintSet:
    """Active inequality residuals and their unit gradients (columns)."""

    residuals: np.ndarray  # (m,)
    normals: np.ndarray  # (3, m)

    @property
    def empty(self) -> bool:
        return self.residuals.size == 0


def active_constraints(
    own_position: Vec3,
    neighbor_positions: list[np.ndarray],
    target_position_est: Vec3,
    obstacles: list[Obstacle],
    config: NavConfig,
) -> ConstraintSet:
    """Constraints violated or within the activation band of their threshold.

    Residuals are distance minus threshold (negative when violated); each
    normal is the unit direction that increases the distance, taken with
    respect to the own position.
    """
    residuals = []
    normals = []
    band = config.activation_band_m
    own = np.asarray(own_position, dtype=float)

    for p_other in neighbor_positions:
        delta = own - np.asarray(p_other, dtype=float)
        dist = float(np.linalg.norm(delta))
        if dist < config.d_min_uav_m + band:
            residuals.append(dist - config.d_min_uav_m)
            normals.append(delta / dist if dist > 1e-9 else np.array([0.0, 0.0, 1.0]))

    delta = own - np.asarray(target_position_est, dtype=float)
    dist = float(np.linalg.norm(delta))
    if dist < config.d_min_target_m + band:
        residuals.append(dist - config.d_min_target_m)
        normals.append(delta / dist if dist > 1e-9 else np.array([0.0, 0.0, 1.0]))

    for dist, grad in clearance_with_gradient(own, obstacles):
        if dist < config.d_min_obstacle_m + band:
            residuals.append(dist - config.d_min_obstacle_m)
            normals.append(grad)

    if not residuals:
        return ConstraintSet(residuals=np.empty(0), normals=np.empty((3, 0)))
    return ConstraintSet(
        residuals=np.array(residuals, dtype=float), normals=np.column_stack(normals)
    )


def projection_and_restoration(constraints: ConstraintSet) -> tuple[np.ndarray, np.ndarray]:
    """Null-space projector of the constraint normals and the restoration step.

    Linearly dependent normals are discarded by rank-revealing QR before the
    normal-equations solve; the restoration step drives the retained
    residuals back toward zero.
    """
    eye = np.eye(3)
    if constraints.empty:
        return eye, np.zeros(3)
    n_mat = constraints.normals
    residuals = constraints.residuals
    if n_mat.shape[1] > 1:
        r_fac, piv = scipy.linalg.qr(n_mat, mode="r", pivoting=True)
        diag = np.abs(np.diag(r_fac))
        tol = max(n_mat.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
        rank = int(np.sum(diag > tol)) if diag.size else 0
        rank = max(rank, 1)
        if rank < n_mat.shape[1]:
            logger.warning(
                "dropping %d linearly dependent constraint normals",
                n_mat.shape[1] - rank,
            )
            keep = piv[:rank]
            n_mat = n_mat[:, keep]
            residuals = residuals[keep]
    ntn = n_mat.T @ n_mat
    solved = np.linalg.solve(ntn, np.column_stack([n_mat.T, residuals]))
    projector = eye - n_mat @ solved[:, :3]
    restoration = -n_mat @ solved[:, 3]
    return projector, restoration


def control_step(
    own_position: Vec3,
    previous_polar: tuple[float, float, float],
    descent_gradient: np.ndarray,
    pursuit_point: Vec3 | None,
    constraints: ConstraintSet,
    config: NavConfig,
    obstacles: list[Obstacle],
) -> tuple[np.ndarray, tuple[float, float, float]]:
    """One projected-gradient control, clamped and obstacle-checked.

    The descent direction is the normalized cost gradient scaled by the step
    size; with no usable gradient the UAV falls back to stepping toward
    ``pursuit_point`` (the predicted target) at the same scale.  The raw
    step plus constraint restoration is converted to polar, clamped to the
    kinematic limits, and halved up to 8 times if the resulting move would
    enter or cross an obstacle; a fully blocked move yields a zero control.
    """
    projector, restoration = projection_and_restoration(constraints)
    grad_norm = float(np.linalg.norm(descent_gradient))
    if grad_norm > 1e-12:
        move = -config.step_size_m * (projector @ (np.asarray(descent_gradient) / grad_norm))
    elif pursuit_point is not None:
        direction = np.asarray(pursuit_point, dtype=float) - np.asarray(own_position)
        dist = float(np.linalg.norm(direction))
        if dist > 1e-9:
            move = config.step_size_m * (projector @ (direction / dist))
        else:
            move = np.zeros(3)
    else:
        move = np.zeros(3)
    raw = move + restoration

    _, psi_prev, theta_prev = previous_polar
    limits = config.limits
    dt = limits.dt
    scale = 1.0
    for _ in range(9):
        candidate = raw * scale
        polar = polar_from_control(candidate, dt, psi_prev, theta_prev)
        polar = clamp_kinematics(polar, (psi_prev, theta_prev), limits)
        u = control_from_polar(polar[0], polar[1], polar[2], dt)
        p_next = own_position + u
        inside = any(box.contains(p_next) for box in obstacles)
        if not inside and (
            float(np.linalg.norm(u)) < 1e-12 or los_visible(own_position, p_next, obstacles)
        ):
            return u, polar
        scale *= 0.5
    return np.zeros(3), (0.0, psi_prev, theta_prev)
