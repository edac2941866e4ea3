"""Factored particle filter tracking the beacon position in the VCF.

The filter keeps one primary set of Cartesian particles. Covering the whole
316 m measurement sphere densely enough for the raw range and angle surfaces
would need far more than 500 particles, so the acoustic update factors the
problem: the primary set is duplicated into a range-domain set and an
angle-domain set, each duplicate set is weighted by its own measurement
surface (the matched-filter range distribution, and beamformer power
evaluated exactly at the particle directions), both sets are renormalized
and sorted ascending by weight, and the primary set is rebuilt by pairing
equal ranks and multiplying their weights. Rank pairing associates strong
range hypotheses with strong angle hypotheses, which samples the dynamic
range of a much larger conventional filter. Before the weighting, the
lowest-weighted entries of each duplicate set are redrawn uniformly over
their domains so a prematurely converged filter can recover.

All randomness flows through one generator owned by the filter instance, so
a fixed seed and input sequence reproduce the trajectory exactly.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .geometry import (EulerAttitude, cartesian_to_spherical_arrays,
                       rotation_vcf_to_bff, spherical_to_cartesian_arrays)

DEFAULT_MAX_RANGE = 1481.0 / 37500.0 * 8000.0   # 315.95 m


@dataclass
class FilterConfig:
    n_particles: int = 500
    sigma_sog: float = 0.1              # m/s, motion-model speed noise
    sigma_heading_deg: float = 3.0      # motion-model heading noise
    beacon_noise_m: float = 0.5         # process noise per second for beacon motion
    reinit_count: int = 50              # particles redrawn each update
    max_range: float = DEFAULT_MAX_RANGE
    beacon_depth: float = 1.0
    convergence_sigma_m: float = 15.0   # 1-sigma threshold on both principal axes

    def __post_init__(self):
        if not 0 <= self.reinit_count < self.n_particles:
            raise ValueError("reinit_count must be in [0, n_particles)")
        if min(self.sigma_sog, self.sigma_heading_deg, self.beacon_noise_m) < 0:
            raise ValueError("noise sigmas must be non-negative")


@dataclass
class StateEstimate:
    """Weighted-mean beacon position in the VCF with x-y confidence."""

    mean: np.ndarray                 # (3,)
    cov: np.ndarray                  # (2, 2) over x, y
    converged: bool

    @property
    def sigma_axes(self) -> tuple[float, float]:
        """(major, minor) 1-sigma lengths of the covariance ellipse."""
        eigvals = np.linalg.eigvalsh(self.cov)
        return float(np.sqrt(max(eigvals[1], 0.0))), float(np.sqrt(max(eigvals[0], 0.0)))


@dataclass
class AttitudeBuffer:
    """Rolling (timestamp, attitude) buffer covering at least the last second."""

    span: float = 1.5
    _entries: deque = field(default_factory=deque)

    def push(self, timestamp: float, attitude: EulerAttitude):
        if self._entries and timestamp < self._entries[-1][0]:
            raise ValueError("timestamps must be monotone")
        self._entries.append((timestamp, attitude))
        while len(self._entries) > 2 and self._entries[1][0] <= timestamp - self.span:
            self._entries.popleft()

    def __len__(self):
        return len(self._entries)


def attitude_at_peak(buffer: AttitudeBuffer, peak_time: float) -> EulerAttitude:
    """Entry nearest the matched-filter peak time; ties go to the earlier entry."""
    if len(buffer) == 0:
        raise ValueError("empty attitude buffer")
    best = min(buffer._entries, key=lambda e: (abs(e[0] - peak_time), e[0]))
    return best[1]


def initialize(config: FilterConfig, rng: np.random.Generator):
    """Equal-weight particles: radius uniform on [0, max_range], direction uniform on the sphere."""
    n = config.n_particles
    r = rng.uniform(0.0, config.max_range, n)
    theta = np.degrees(np.arccos(rng.uniform(-1.0, 1.0, n)))
    phi = rng.uniform(0.0, 360.0, n)
    x, y, z = spherical_to_cartesian_arrays(r, theta, phi)
    return np.column_stack([x, y, z]), np.full(n, 1.0 / n)


def predict(particles: np.ndarray, weights: np.ndarray, sog: float, heading_deg: float,
            depth_delta: float, dt: float, config: FilterConfig,
            rng: np.random.Generator):
    """Constant-velocity prediction with per-particle speed/heading noise.

    The beacon moves relative to the vehicle opposite to vehicle motion;
    heading is a compass heading, so x takes the sine and y the cosine.
    Independent x-y process noise accounts for beacon movement.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = len(particles)
    speed = sog + rng.normal(0.0, config.sigma_sog, n)
    head = np.radians(heading_deg + rng.normal(0.0, config.sigma_heading_deg, n))
    particles = particles.copy()
    particles[:, 0] -= speed * dt * np.sin(head)
    particles[:, 1] -= speed * dt * np.cos(head)
    particles[:, 2] -= depth_delta
    particles[:, :2] += rng.normal(0.0, config.beacon_noise_m * dt, (n, 2))
    return particles, weights


def reinit_lowest(range_values: np.ndarray, range_weights: np.ndarray,
                  angle_values: np.ndarray, angle_weights: np.ndarray,
                  k: int, config: FilterConfig, rng: np.random.Generator):
    """Redraw the k lowest-weighted entries of each duplicate set over its domain.

    Ties in weight resolve by original index (stable sort). Weights are left
    untouched; the redrawn positions are re-judged by the measurement that
    follows.
    """
    if k >= len(range_values):
        raise ValueError("k must be smaller than the set size")
    if k > 0:
        low_r = np.argsort(range_weights, kind="stable")[:k]
        range_values = range_values.copy()
        range_values[low_r] = rng.uniform(0.0, config.max_range, k)
        low_a = np.argsort(angle_weights, kind="stable")[:k]
        angle_values = angle_values.copy()
        angle_values[low_a, 0] = np.degrees(np.arccos(rng.uniform(-1.0, 1.0, k)))
        angle_values[low_a, 1] = rng.uniform(0.0, 360.0, k)
    return range_values, angle_values


def update_acoustic(particles: np.ndarray, weights: np.ndarray, range_dist,
                    angle_eval, attitude_rx: EulerAttitude, config: FilterConfig,
                    rng: np.random.Generator):
    """Factored range/angle update; returns (particles, weights, degenerate_flag).

    range_dist must provide value_at(ranges); angle_eval maps an (N, 2) array
    of (theta, phi) BFF directions to non-negative powers.
    """
    rot = rotation_vcf_to_bff(attitude_rx)
    bff = particles @ rot.T
    r, theta, phi = cartesian_to_spherical_arrays(bff[:, 0], bff[:, 1], bff[:, 2])
    angles = np.column_stack([theta, phi])

    r, angles = reinit_lowest(r, weights, angles, weights,
                              config.reinit_count, config, rng)

    degenerate = False
    w_r = weights * range_dist.value_at(r)
    if w_r.sum() <= 0.0:
        w_r = np.full(len(w_r), 1.0 / len(w_r))
        degenerate = True
    else:
        w_r = w_r / w_r.sum()

    w_a = weights * np.maximum(angle_eval(angles), 0.0)
    if w_a.sum() <= 0.0:
        w_a = np.full(len(w_a), 1.0 / len(w_a))
        degenerate = True
    else:
        w_a = w_a / w_a.sum()

    order_r = np.argsort(w_r, kind="stable")
    order_a = np.argsort(w_a, kind="stable")
    r_sorted = r[order_r]
    angles_sorted = angles[order_a]

    x, y, z = spherical_to_cartesian_arrays(r_sorted, angles_sorted[:, 0], angles_sorted[:, 1])
    new_particles = np.column_stack([x, y, z]) @ rot   # rows times R == R^T applied per column

    new_weights = w_r[order_r] * w_a[order_a]
    total = new_weights.sum()
    if total <= 0.0 or not np.isfinite(total):
        new_weights = np.full(len(new_weights), 1.0 / len(new_weights))
        degenerate = True
    else:
        new_weights = new_weights / total
    return new_particles, new_weights, degenerate


def resample_systematic(particles: np.ndarray, weights: np.ndarray,
                        rng: np.random.Generator):
    """Systematic resampling: copy counts stay within the floor/ceil bracket of N w."""
    n = len(weights)
    positions = (rng.random() + np.arange(n)) / n
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    idx = np.searchsorted(cumulative, positions, side="right")
    idx = np.clip(idx, 0, n - 1)
    return particles[idx], np.full(n, 1.0 / n)


def estimate(particles: np.ndarray, weights: np.ndarray, config: FilterConfig,
             vehicle_depth: float) -> StateEstimate:
    """Weighted x-y mean and covariance; z comes from the depth difference.

    The covariance uses the frequency-weight Bessel form N/(N-1) sum w d d^T
    so the 15 m convergence threshold acts on the real particle spread.
    """
    n = len(particles)
    mean_xy = weights @ particles[:, :2]
    d = particles[:, :2] - mean_xy
    cov = (n / (n - 1)) * (d.T @ (d * weights[:, None]))
    z = vehicle_depth - config.beacon_depth
    sig_major = np.sqrt(max(np.linalg.eigvalsh(cov)[1], 0.0))
    return StateEstimate(mean=np.array([mean_xy[0], mean_xy[1], z]),
                         cov=cov,
                         converged=bool(sig_major <= config.convergence_sigma_m))


class BeaconFilter:
    """One vehicle's filter: owns its particle arrays and RNG stream."""

    def __init__(self, config: FilterConfig, rng: np.random.Generator):
        self.config = config
        self.rng = rng
        self.degenerate = False
        self.reset()

    def reset(self):
        """Full re-initialization (on launch and whenever the vehicle surfaces)."""
        self.particles, self.weights = initialize(self.config, self.rng)
        self.degenerate = False

    def predict(self, sog: float, heading_deg: float, depth_delta: float, dt: float):
        self.particles, self.weights = predict(
            self.particles, self.weights, sog, heading_deg, depth_delta, dt,
            self.config, self.rng)

    def update(self, range_dist, angle_eval, attitude_rx: EulerAttitude):
        self.particles, self.weights, self.degenerate = update_acoustic(
            self.particles, self.weights, range_dist, angle_eval, attitude_rx,
            self.config, self.rng)

    def resample(self):
        self.particles, self.weights = resample_systematic(
            self.particles, self.weights, self.rng)

    def estimate(self, vehicle_depth: float) -> StateEstimate:
        return estimate(self.particles, self.weights, self.config, vehicle_depth)
