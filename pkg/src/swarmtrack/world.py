"""Scenario geometry, target mobility, and line-of-sight testing.

Obstacles are axis-aligned boxes, which keeps the segment-visibility test
exact and cheap.  The target follows a linear-Gaussian dynamic with a
random-walk transition and a process-noise covariance assembled from a
diagonal intensity vector; the intensity may be zero on some axes, so the
noise sampler factors the (possibly singular) covariance with a pivoted
Cholesky decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from .geometry import Vec3


@dataclass(frozen=True)
class Obstacle:
    """Axis-aligned box given by its min and max corners (meters)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ValueError("obstacle corners must be 3-vectors")
        if np.any(lo > hi):
            raise ValueError(f"obstacle min corner exceeds max corner: {lo} > {hi}")

    def contains(self, p: Vec3) -> bool:
        """True if ``p`` is strictly inside the box (faces excluded)."""
        return bool(np.all(p > self.lo) and np.all(p < self.hi))


def _segment_hits_box(ax, ay, az, bx, by, bz, lo, hi) -> bool:
    """Slab test: does the open segment cross the box with positive length?

    An endpoint sitting exactly on a face does not count as a hit unless the
    segment continues into the interior.
    """
    t0 = 0.0
    t1 = 1.0
    a = (ax, ay, az)
    b = (bx, by, bz)
    for axis in range(3):
        da = b[axis] - a[axis]
        if da == 0.0:
            if a[axis] < lo[axis] or a[axis] > hi[axis]:
                return False
        else:
            u = (lo[axis] - a[axis]) / da
            v = (hi[axis] - a[axis]) / da
            if u > v:
                u, v = v, u
            if u > t0:
                t0 = u
            if v < t1:
                t1 = v
            if t1 <= t0:
                return False
    return True


def los_visible(a: Vec3, b: Vec3, obstacles: list[Obstacle]) -> bool:
    """True when no obstacle blocks the open segment between ``a`` and ``b``."""
    ax, ay, az = float(a[0]), float(a[1]), float(a[2])
    bx, by, bz = float(b[0]), float(b[1]), float(b[2])
    if ax == bx and ay == by and az == bz:
        return True
    for box in obstacles:
        if _segment_hits_box(ax, ay, az, bx, by, bz, box.lo, box.hi):
            return False
    return True


def clearance(p: Vec3, obstacles: list[Obstacle]) -> float:
    """Euclidean distance from ``p`` to the nearest box surface (0 inside).

    Returns ``inf`` when there are no obstacles.
    """
    best = math.inf
    for box in obstacles:
        dx = max(box.lo[0] - p[0], 0.0, p[0] - box.hi[0])
        dy = max(box.lo[1] - p[1], 0.0, p[1] - box.hi[1])
        dz = max(box.lo[2] - p[2], 0.0, p[2] - box.hi[2])
        dist = math.sqrt(dx * dx + dy * dy + dz * dz)
        if dist < best:
            best = dist
    return best


def clearance_with_gradient(p: Vec3, obstacles: list[Obstacle]) -> list[tuple[float, np.ndarray]]:
    """Per-obstacle clearance and the unit gradient of that clearance.

    The gradient points away from the box.  For a point inside a box the
    clearance is 0 and the gradient falls back to the outward normal of the
    nearest face.
    """
    out = []
    for box in obstacles:
        closest = np.minimum(np.maximum(p, box.lo), box.hi)
        delta = np.asarray(p, dtype=float) - closest
        dist = float(np.linalg.norm(delta))
        if dist > 0.0:
            out.append((dist, delta / dist))
        else:
            face_gaps = np.concatenate([p - box.lo, box.hi - p])
            k = int(np.argmin(face_gaps))
            normal = np.zeros(3)
            normal[k % 3] = -1.0 if k < 3 else 1.0
            out.append((0.0, normal))
    return out


def _psd_factor(q: np.ndarray) -> np.ndarray:
    """Factor ``F`` with ``F @ F.T == q`` via rank-revealing pivoted Cholesky.

    Handles singular covariances (zero process-noise axes) by returning a
    factor with one column per positive pivot.
    """
    if not np.any(q):
        return np.zeros((q.shape[0], 0))
    c, piv, rank, info = lapack.dpstrf(q, lower=1)
    if info < 0:
        raise np.linalg.LinAlgError(f"pivoted Cholesky failed (info={info})")
    ell = np.tril(c)[:, :rank]
    factor = np.zeros_like(ell)
    factor[piv - 1, :] = ell
    return factor


@dataclass(frozen=True)
class MotionModel:
    """Linear-Gaussian target dynamic: transition matrix and noise covariance."""

    transition: np.ndarray  # (6, 6)
    noise_cov: np.ndarray  # (6, 6), PSD
    intensity: np.ndarray  # (3,) diagonal of the noise intensity
    noise_factor: np.ndarray = field(compare=False, default=None)

    def __post_init__(self):
        if self.noise_factor is None:
            object.__setattr__(self, "noise_factor", _psd_factor(self.noise_cov))


def build_random_walk_model(dt: float, intensity) -> MotionModel:
    """Random-walk target model for step length ``dt``.

    ``intensity`` is the 3-vector of per-axis process-noise intensities; the
    resulting covariance couples position and velocity blocks through the
    usual dt^3/3, dt^2/2, dt weights.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    w = np.asarray(intensity, dtype=float)
    if w.shape != (3,) or np.any(w < 0.0):
        raise ValueError("intensity must be a nonnegative 3-vector")
    eye = np.eye(3)
    a = np.block([[eye, dt * eye], [np.zeros((3, 3)), eye]])
    w_mat = np.diag(w)
    q = np.block(
        [
            [dt**3 / 3.0 * w_mat, dt**2 / 2.0 * w_mat],
            [dt**2 / 2.0 * w_mat, dt * w_mat],
        ]
    )
    return MotionModel(transition=a, noise_cov=q, intensity=w)


def target_state(position, velocity) -> np.ndarray:
    """Pack position and velocity into the 6-vector state [x y z vx vy vz]."""
    s = np.empty(6)
    s[:3] = position
    s[3:] = velocity
    return s


def step_target(state: np.ndarray, model: MotionModel, rng: np.random.Generator) -> np.ndarray:
    """Advance the target one step: linear drift plus Gaussian process noise."""
    new = model.transition @ state
    n_draws = model.noise_factor.shape[1]
    if n_draws:
        new += model.noise_factor @ rng.standard_normal(n_draws)
    return new
