"""Per-UAV radar sensing: noise variances, true observables, measurements.

Ranging and Doppler accuracy follow an estimation-bound model: the variance
at reference conditions (1 m distance, 1 m^2 target cross section) scales
with distance as d**gamma and inversely with the cross section.  Bearing
noise is a constant standard deviation tied to the antenna beamwidth, so it
does not depend on distance.  The reference variances can either be given
directly or derived from a chirped-waveform link budget (bandwidth,
observation time, reference SNR).

A measurement is produced only in its noisy form when the line of sight is
clear; an obstructed geometry yields an outlier draw with the LOS flag
cleared so consumers can discard it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Vec3, relative_spherical
from .world import Obstacle, los_visible

SPEED_OF_LIGHT = 299792458.0
DEFAULT_WAVELENGTH = SPEED_OF_LIGHT / 77e9  # 77 GHz carrier


@dataclass(frozen=True)
class FmcwLink:
    """Chirped-waveform link parameters used to derive reference variances."""

    bandwidth_hz: float
    chirp_duration_s: float
    n_chirp: int
    snr0_db: float

    def validate(self) -> None:
        if min(self.bandwidth_hz, self.chirp_duration_s, self.n_chirp) <= 0:
            raise ValueError("bandwidth, chirp duration, and chirp count must be positive")

    @property
    def snr0(self) -> float:
        return 10.0 ** (self.snr0_db / 10.0)

    @property
    def observation_time_s(self) -> float:
        return self.chirp_duration_s * self.n_chirp


def reference_variances_from_physical(link: FmcwLink, gamma: float = 4.0) -> tuple[float, float]:
    """Reference (ranging, Doppler) variances implied by the link budget.

    Evaluates the unbiased-estimator bounds at the reference SNR: the ranging
    variance falls with the squared bandwidth, the Doppler variance with the
    squared total observation time.
    """
    link.validate()
    snr0 = link.snr0
    var_range = 1.5 * (2.0 * SPEED_OF_LIGHT / gamma) ** 2 / (
        (2.0 * math.pi * link.bandwidth_hz) ** 2 * snr0
    )
    var_doppler = 6.0 / ((2.0 * math.pi) ** 2 * link.observation_time_s**2 * snr0)
    return var_range, var_doppler


@dataclass(frozen=True)
class RadarProfile:
    """Noise model of one radar: reference variances, beamwidth, wavelength."""

    sigma_r0_sq: float  # m^2 at d=1 m, rcs=1 m^2
    sigma_d0_sq: float  # Hz^2 at the same reference
    sigma_b0: float  # rad, constant bearing noise std
    wavelength: float = DEFAULT_WAVELENGTH
    gamma: float = 4.0
    physical: FmcwLink | None = None

    def validate(self) -> None:
        if self.sigma_r0_sq <= 0 or self.sigma_d0_sq <= 0 or self.sigma_b0 <= 0:
            raise ValueError("reference variances must be positive")
        if self.wavelength <= 0 or self.gamma <= 0:
            raise ValueError("wavelength and path-loss exponent must be positive")

    @classmethod
    def build(
        cls,
        sigma_r0_m: float | None = None,
        sigma_b0_deg: float = 10.0,
        sigma_d0_hz: float | None = None,
        wavelength: float = DEFAULT_WAVELENGTH,
        gamma: float = 4.0,
        physical: FmcwLink | None = None,
    ) -> "RadarProfile":
        """Assemble a profile; explicit sigmas take precedence over the link budget."""
        phys_r = phys_d = None
        if physical is not None:
            phys_r, phys_d = reference_variances_from_physical(physical, gamma)
        sigma_r0_sq = sigma_r0_m**2 if sigma_r0_m is not None else phys_r
        sigma_d0_sq = sigma_d0_hz**2 if sigma_d0_hz is not None else phys_d
        if sigma_r0_sq is None or sigma_d0_sq is None:
            raise ValueError("reference variances missing: give sigmas or a physical block")
        return cls(
            sigma_r0_sq=sigma_r0_sq,
            sigma_d0_sq=sigma_d0_sq,
            sigma_b0=math.radians(sigma_b0_deg),
            wavelength=wavelength,
            gamma=gamma,
            physical=physical,
        )


@dataclass(frozen=True)
class CapabilitySet:
    """Which observables a radar can extract: ranging, bearing, Doppler."""

    ranging: bool = False
    bearing: bool = False
    doppler: bool = False

    def validate(self) -> None:
        if not (self.ranging or self.bearing or self.doppler):
            raise ValueError("a radar needs at least one sensing capability")


def snr(d: float, rcs: float, profile: RadarProfile) -> float:
    """Echo SNR at distance ``d`` for a target of cross section ``rcs``."""
    if d <= 0 or rcs <= 0:
        raise ValueError("distance and cross section must be positive")
    if profile.physical is None:
        raise ValueError("profile has no link budget, reference SNR unknown")
    return profile.physical.snr0 * rcs / d**profile.gamma


def range_variance(d: float, rcs: float, profile: RadarProfile) -> float:
    """Ranging variance at distance ``d`` and cross section ``rcs`` (m^2)."""
    return profile.sigma_r0_sq * d**profile.gamma / rcs


def doppler_variance(d: float, rcs: float, profile: RadarProfile) -> float:
    """Doppler variance at distance ``d`` and cross section ``rcs`` (Hz^2)."""
    return profile.sigma_d0_sq * d**profile.gamma / rcs


def bearing_variance(profile: RadarProfile) -> float:
    """Bearing variance (rad^2); independent of distance and cross section."""
    return profile.sigma_b0**2


@dataclass(frozen=True)
class Observables:
    """Noise-free observables of one radar; absent channels are ``None``."""

    range_: float | None = None
    azimuth: float | None = None
    elevation: float | None = None
    doppler: float | None = None
    at_pole: bool = False


def true_observables(
    target_position: Vec3,
    target_velocity: Vec3,
    uav_position: Vec3,
    uav_velocity: Vec3,
    profile: RadarProfile,
    caps: CapabilitySet,
) -> Observables:
    """Evaluate the observation functions at the true geometry.

    The ranging channel reports (gamma/2) times the distance and the Doppler
    channel gamma/(2 lambda) times the radial relative speed, with the radial
    speed positive for a receding target.
    """
    sph = relative_spherical(uav_position, target_position)
    rng_obs = az_obs = el_obs = dop_obs = None
    if caps.ranging:
        rng_obs = 0.5 * profile.gamma * sph.d
    if caps.bearing:
        az_obs = sph.phi
        el_obs = sph.theta
    if caps.doppler:
        st = math.sin(sph.theta)
        ax = math.cos(sph.phi) * st
        ay = math.sin(sph.phi) * st
        az = math.cos(sph.theta)
        v_rad = (
            ax * (target_velocity[0] - uav_velocity[0])
            + ay * (target_velocity[1] - uav_velocity[1])
            + az * (target_velocity[2] - uav_velocity[2])
        )
        dop_obs = profile.gamma * v_rad / (2.0 * profile.wavelength)
    return Observables(
        range_=rng_obs, azimuth=az_obs, elevation=el_obs, doppler=dop_obs, at_pole=sph.at_pole
    )


@dataclass(frozen=True)
class OutlierModel:
    """Support of the uniform outlier draw used for obstructed measurements."""

    range_hi_m: float = 4000.0
    doppler_max_hz: float = 2.0e4


@dataclass(frozen=True)
class MeasurementRecord:
    """One radar's estimate bundle, plus the context a consumer needs.

    Carries the sender pose (position and velocity) and the per-channel noise
    variances evaluated at the true geometry, which the senders are assumed
    to know.  Channels the sender cannot extract are ``None``.
    """

    sender_id: int
    sender_position: np.ndarray
    sender_velocity: np.ndarray
    time_index: int
    los: bool
    range_obs: float | None = None
    azimuth_obs: float | None = None
    elevation_obs: float | None = None
    doppler_obs: float | None = None
    range_var: float | None = None
    bearing_var: float | None = None
    doppler_var: float | None = None
    gamma: float = 4.0
    wavelength: float = DEFAULT_WAVELENGTH
    at_pole: bool = False


def sense(
    target: np.ndarray,
    uav_position: Vec3,
    uav_velocity: Vec3,
    profile: RadarProfile,
    caps: CapabilitySet,
    rcs: float,
    obstacles: list[Obstacle],
    rng: np.random.Generator,
    time_index: int,
    sender_id: int,
    outliers: OutlierModel = OutlierModel(),
) -> MeasurementRecord:
    """Produce one measurement record for the current true target state.

    With a clear line of sight each enabled channel is the true observable
    plus Gaussian noise at the variance implied by the true distance.  When
    obstructed, channels are replaced by uniform outliers over their
    plausible support and the LOS flag is cleared.
    """
    target_position = target[:3]
    los = los_visible(uav_position, target_position, obstacles)
    sph = relative_spherical(uav_position, target_position)
    r_var = range_variance(sph.d, rcs, profile) if caps.ranging else None
    b_var = bearing_variance(profile) if caps.bearing else None
    d_var = doppler_variance(sph.d, rcs, profile) if caps.doppler else None

    rng_obs = az_obs = el_obs = dop_obs = None
    if los:
        h = true_observables(target_position, target[3:], uav_position, uav_velocity, profile, caps)
        n_channels = sum((caps.ranging, 2 * caps.bearing, caps.doppler))
        noise = rng.standard_normal(n_channels)
        i = 0
        if caps.ranging:
            rng_obs = h.range_ + math.sqrt(r_var) * noise[i]
            i += 1
        if caps.bearing:
            az_obs = h.azimuth + math.sqrt(b_var) * noise[i]
            el_obs = h.elevation + math.sqrt(b_var) * noise[i + 1]
            i += 2
        if caps.doppler:
            dop_obs = h.doppler + math.sqrt(d_var) * noise[i]
    else:
        if caps.ranging:
            rng_obs = rng.uniform(0.0, outliers.range_hi_m)
        if caps.bearing:
            az_obs = rng.uniform(-math.pi, math.pi)
            el_obs = rng.uniform(0.0, math.pi)
        if caps.doppler:
            dop_obs = rng.uniform(-outliers.doppler_max_hz, outliers.doppler_max_hz)

    return MeasurementRecord(
        sender_id=sender_id,
        sender_position=np.array(uav_position, dtype=float),
        sender_velocity=np.array(uav_velocity, dtype=float),
        time_index=time_index,
        los=los,
        range_obs=rng_obs,
        azimuth_obs=az_obs,
        elevation_obs=el_obs,
        doppler_obs=dop_obs,
        range_var=r_var,
        bearing_var=b_var,
        doppler_var=d_var,
        gamma=profile.gamma,
        wavelength=profile.wavelength,
        at_pole=sph.at_pole,
    )
