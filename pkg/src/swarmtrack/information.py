"""Position-information machinery: geometric matrices and the fused FIM.

Every line-of-sight sender contributes rank-one position information per
channel: the outer product of the channel's measurement gradient weighted by
the inverse noise variance.  The per-channel outer products have closed
geometric forms in (distance, azimuth, elevation) and, for Doppler, the
apparent angular velocity of the target.  The fused information matrix adds
the position block of the inverted predictive covariance.

Two independent constructions are kept side by side: the matrix assembly
from outer products (authoritative) and a literal scalar expansion of the
six unique entries (cross-check).  ``scalar_vs_matrix_discrepancy`` reports
where they disagree instead of silently preferring one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import direction_vector
from .radar import CapabilitySet, RadarProfile
from .tracker import BEARING_SIN_GUARD

ENTRY_ORDER = ("xx", "yy", "zz", "xy", "xz", "yz")


@dataclass(frozen=True)
class GeometricMatrices:
    """Per-channel rank-one geometry factors of one sender's information.

    Bearing members are ``None`` when the geometry sits on the z-axis pole,
    where the azimuth gradient is undefined.
    """

    ranging: np.ndarray
    azimuth: np.ndarray | None
    elevation: np.ndarray | None
    doppler: np.ndarray
    at_pole: bool


def geometric_matrices(
    phi: float, theta: float, d: float, omega: np.ndarray, profile: RadarProfile
) -> GeometricMatrices:
    """Geometry factors at distance ``d``, azimuth ``phi``, elevation ``theta``.

    ``omega`` is the apparent angular velocity of the target relative to the
    sender, which fixes how the Doppler shift reacts to target position.
    """
    if d <= 0:
        raise ValueError("distance must be positive")
    gamma = profile.gamma
    a = direction_vector(phi, theta)
    g_range = (gamma**2 / 4.0) * np.outer(a, a)

    sin_theta = math.sin(theta)
    at_pole = abs(sin_theta) < BEARING_SIN_GUARD
    if at_pole:
        g_azimuth = None
        g_elevation = None
    else:
        u = direction_vector(phi + math.pi / 2.0, math.pi / 2.0)
        g_azimuth = np.outer(u, u) / (d * sin_theta) ** 2
        e = direction_vector(phi, theta + math.pi / 2.0)
        g_elevation = np.outer(e, e) / d**2

    w = np.cross(omega, a)
    g_doppler = (gamma / (2.0 * profile.wavelength)) ** 2 * np.outer(w, w)
    return GeometricMatrices(
        ranging=g_range,
        azimuth=g_azimuth,
        elevation=g_elevation,
        doppler=g_doppler,
        at_pole=at_pole,
    )


@dataclass(frozen=True)
class SenderGeometry:
    """What one sender contributes to an information evaluation.

    The position and velocity are the sender's as known to the evaluating
    agent (possibly aged); the LOS flag gates the whole contribution.
    Noise variances are recomputed from the profile at the evaluated
    distance.
    """

    position: np.ndarray
    velocity: np.ndarray
    los: bool
    caps: CapabilitySet
    profile: RadarProfile
    rcs: float


def _sender_geometry_terms(target_position, target_velocity, sender: SenderGeometry):
    """Distance, angles, and angular velocity of the target from a sender."""
    dp = np.asarray(target_position, dtype=float) - sender.position
    d = float(np.linalg.norm(dp))
    if d <= 0:
        raise ValueError("target coincides with a sender position")
    phi = math.atan2(dp[1], dp[0])
    theta = math.acos(max(-1.0, min(1.0, dp[2] / d)))
    dv = np.asarray(target_velocity, dtype=float) - sender.velocity
    omega = np.cross(dp, dv) / d**2
    return d, phi, theta, omega


def measurement_fim(
    target_position, target_velocity, senders: list[SenderGeometry]
) -> np.ndarray:
    """Position information carried by the senders' current measurements.

    Sums each line-of-sight sender's per-channel geometry factors weighted by
    the inverse noise variances at the evaluated distance; obstructed senders
    contribute nothing.  An empty list yields the zero matrix.
    """
    total = np.zeros((3, 3))
    for sender in senders:
        if not sender.los:
            continue
        d, phi, theta, omega = _sender_geometry_terms(
            target_position, target_velocity, sender
        )
        profile = sender.profile
        mats = geometric_matrices(phi, theta, d, omega, profile)
        d_pow = d**profile.gamma / sender.rcs
        if sender.caps.ranging:
            total += mats.ranging / (profile.sigma_r0_sq * d_pow)
        if sender.caps.doppler:
            total += mats.doppler / (profile.sigma_d0_sq * d_pow)
        if sender.caps.bearing and not mats.at_pole:
            bearing_w = 1.0 / profile.sigma_b0**2
            total += bearing_w * (mats.azimuth + mats.elevation)
    return total


def fuse_with_prior(cov_pred: np.ndarray, info_meas: np.ndarray) -> np.ndarray:
    """Total position information: prior block of the inverse predictive
    covariance plus the measurement information."""
    try:
        prior_info = np.linalg.inv(cov_pred)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular predictive covariance") from exc
    return prior_info[:3, :3] + info_meas


def matrix_to_entries(mat: np.ndarray) -> np.ndarray:
    """Unique entries of a symmetric 3x3 matrix in ``ENTRY_ORDER``."""
    return np.array([mat[0, 0], mat[1, 1], mat[2, 2], mat[0, 1], mat[0, 2], mat[1, 2]])


def entries_to_matrix(entries) -> np.ndarray:
    """Symmetric 3x3 matrix from its six unique entries in ``ENTRY_ORDER``."""
    xx, yy, zz, xy, xz, yz = entries
    return np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]])


def scalar_fim_entries(
    target_position,
    target_velocity,
    senders: list[SenderGeometry],
    prior_entries=None,
) -> np.ndarray:
    """Closed-form scalar expansion of the six information-matrix entries.

    Kept as a transcription of the published entry formulas for
    cross-checking the outer-product assembly; the xz Doppler term carries
    the coefficient as printed, which the discrepancy report shows to differ
    from the matrix construction by a factor of 2.
    """
    entries = np.zeros(6) if prior_entries is None else np.array(prior_entries, dtype=float)
    for sender in senders:
        if not sender.los:
            continue
        d, phi, theta, omega = _sender_geometry_terms(
            target_position, target_velocity, sender
        )
        profile = sender.profile
        gamma = profile.gamma
        lam = profile.wavelength
        cp, sp = math.cos(phi), math.sin(phi)
        ct, st = math.cos(theta), math.sin(theta)
        ox, oy, oz = omega

        d_pow = d**gamma / sender.rcs
        kappa_w = gamma**2 / (4.0 * profile.sigma_r0_sq * d_pow) if sender.caps.ranging else 0.0
        xi_w = (
            gamma**2 / (4.0 * lam**2 * profile.sigma_d0_sq * d_pow)
            if sender.caps.doppler
            else 0.0
        )
        at_pole = abs(st) < BEARING_SIN_GUARD
        beta_w = (
            1.0 / (profile.sigma_b0 * d) ** 2 if sender.caps.bearing and not at_pole else 0.0
        )

        g_xx = (-sp * st * oz + ct * oy) ** 2
        g_yy = (cp * st * oz - ct * ox) ** 2
        g_zz = (-cp * st * oy + sp * st * ox) ** 2
        g_xy = (-sp * st * oz + ct * oy) * (cp * st * oz - ct * ox)
        g_xz = (sp * st * oz - ct * oy) * (cp * st * oy - sp * st * ox)
        g_yz = (cp * st * oz - ct * ox) * (-cp * st * oy + sp * st * ox)

        entries[0] += (
            kappa_w * (cp * st) ** 2
            + (beta_w * ((sp / st) ** 2 + (cp * ct) ** 2) if beta_w else 0.0)
            + xi_w * g_xx
        )
        entries[1] += (
            kappa_w * (sp * st) ** 2
            + (beta_w * ((cp / st) ** 2 + (sp * ct) ** 2) if beta_w else 0.0)
            + xi_w * g_yy
        )
        entries[2] += kappa_w * ct**2 + xi_w * g_zz + beta_w * st**2
        entries[3] += (
            kappa_w * sp * cp * st**2
            + xi_w * g_xy
            - (beta_w * sp * cp / st**2 if beta_w else 0.0)
            + beta_w * sp * cp * ct**2
        )
        # doubled Doppler coefficient kept as printed in the source formulas
        entries[4] += kappa_w * cp * st * ct - beta_w * cp * st * ct + 2.0 * xi_w * g_xz
        entries[5] += kappa_w * st * ct * sp + xi_w * g_yz - beta_w * sp * st * ct
    return entries


def scalar_vs_matrix_discrepancy(
    target_position, target_velocity, senders: list[SenderGeometry]
) -> dict[str, float]:
    """Entrywise |scalar expansion - matrix assembly| of the measurement FIM."""
    scalar = scalar_fim_entries(target_position, target_velocity, senders)
    matrix = matrix_to_entries(measurement_fim(target_position, target_velocity, senders))
    return dict(zip(ENTRY_ORDER, np.abs(scalar - matrix)))
