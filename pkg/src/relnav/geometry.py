"""Reference frames, rotations, and spherical/Cartesian transforms.

Three frames are used throughout: the local-level frame (LLF, world ENU),
the vehicle-carried frame (VCF, ENU axes centered on the vehicle), and the
body-fixed frame (BFF, rotating with the vehicle; x forward, zero yaw
pointing East). Acoustic measurements live in the BFF as range r,
inclination theta (from +z), and azimuth phi (from +x, increasing toward +y).

Vehicle motion and behavior setpoints use compass headings (degrees
clockwise from North); conversion to the ENU yaw used by the rotation
matrices happens only here, at the module boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LLF = "llf"
VCF = "vcf"
BFF = "bff"


def wrap_deg(angle: float) -> float:
    """Wrap an angle to [-180, 180)."""
    out = (angle + 180.0) % 360.0 - 180.0
    # A tiny negative input can round the modulo up to exactly 360.
    return -180.0 if out >= 180.0 else out


def wrap_azimuth_deg(angle):
    """Wrap an angle (scalar or array) to [0, 360)."""
    if isinstance(angle, np.ndarray):
        out = angle % 360.0
        return np.where(out >= 360.0, 0.0, out)
    out = angle % 360.0
    return 0.0 if out >= 360.0 else out


def compass_to_enu_yaw(heading_deg: float) -> float:
    """Compass heading (CW from North) to ENU yaw (CCW from East)."""
    return wrap_deg(90.0 - heading_deg)


def enu_yaw_to_compass(yaw_deg: float) -> float:
    """ENU yaw (CCW from East) to compass heading (CW from North)."""
    return wrap_azimuth_deg(90.0 - yaw_deg)


@dataclass(frozen=True, slots=True)
class EulerAttitude:
    """Roll/pitch/yaw in degrees; yaw is ENU (zero pointing East)."""

    roll_deg: float = 0.0
    pitch_deg: float = 0.0
    yaw_deg: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "roll_deg", wrap_deg(self.roll_deg))
        object.__setattr__(self, "yaw_deg", wrap_deg(self.yaw_deg))
        if not -90.0 <= self.pitch_deg <= 90.0:
            raise ValueError(f"pitch {self.pitch_deg} outside [-90, 90]")


@dataclass(frozen=True, slots=True)
class FramePosition:
    """A point tagged with the frame it is expressed in."""

    x: float
    y: float
    z: float
    frame: str

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def _check(self, other: "FramePosition"):
        if self.frame != other.frame:
            raise ValueError(f"frame mismatch: {self.frame} vs {other.frame}")

    def __add__(self, other: "FramePosition") -> "FramePosition":
        self._check(other)
        return FramePosition(self.x + other.x, self.y + other.y, self.z + other.z, self.frame)

    def __sub__(self, other: "FramePosition") -> "FramePosition":
        self._check(other)
        return FramePosition(self.x - other.x, self.y - other.y, self.z - other.z, self.frame)


@dataclass(frozen=True, slots=True)
class SphericalBFF:
    """Spherical coordinates in the BFF: range, inclination, azimuth."""

    r: float
    theta_deg: float
    phi_deg: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("negative range")
        if not 0.0 <= self.theta_deg <= 180.0:
            raise ValueError(f"inclination {self.theta_deg} outside [0, 180]")


def rotation_vcf_to_bff(attitude: EulerAttitude) -> np.ndarray:
    """Rotation taking VCF coordinates to BFF coordinates, Rz(yaw) Ry(pitch) Rx(roll)."""
    g = math.radians(attitude.roll_deg)
    b = math.radians(attitude.pitch_deg)
    a = math.radians(attitude.yaw_deg)
    rz = np.array([[math.cos(a), -math.sin(a), 0.0],
                   [math.sin(a), math.cos(a), 0.0],
                   [0.0, 0.0, 1.0]])
    ry = np.array([[math.cos(b), 0.0, math.sin(b)],
                   [0.0, 1.0, 0.0],
                   [-math.sin(b), 0.0, math.cos(b)]])
    rx = np.array([[1.0, 0.0, 0.0],
                   [0.0, math.cos(g), -math.sin(g)],
                   [0.0, math.sin(g), math.cos(g)]])
    return rz @ ry @ rx


def spherical_to_cartesian(s: SphericalBFF) -> FramePosition:
    x, y, z = spherical_to_cartesian_arrays(s.r, s.theta_deg, s.phi_deg)
    return FramePosition(float(x), float(y), float(z), BFF)


def cartesian_to_spherical(p: FramePosition) -> SphericalBFF:
    """Inverse transform; raises at the origin where angles are undefined."""
    if p.frame != BFF:
        raise ValueError(f"expected BFF position, got {p.frame}")
    r = math.sqrt(p.x * p.x + p.y * p.y + p.z * p.z)
    if r == 0.0:
        raise ValueError("angles undefined at r = 0")
    theta = math.degrees(math.acos(max(-1.0, min(1.0, p.z / r))))
    phi = wrap_azimuth_deg(math.degrees(math.atan2(p.y, p.x)))
    return SphericalBFF(r, theta, phi)


def spherical_to_cartesian_arrays(r, theta_deg, phi_deg):
    """Vectorized spherical-to-Cartesian over arrays (or scalars)."""
    th = np.radians(theta_deg)
    ph = np.radians(phi_deg)
    st = np.sin(th)
    return r * st * np.cos(ph), r * st * np.sin(ph), r * np.cos(th)


def cartesian_to_spherical_arrays(x, y, z):
    """Vectorized Cartesian-to-spherical; angles are 0 where r is 0."""
    r = np.sqrt(x * x + y * y + z * z)
    safe = np.where(r > 0.0, r, 1.0)
    theta = np.degrees(np.arccos(np.clip(z / safe, -1.0, 1.0)))
    phi = np.degrees(np.arctan2(y, x)) % 360.0
    return r, np.where(r > 0.0, theta, 0.0), np.where(r > 0.0, phi, 0.0)


def auv_position_llf(beacon_llf: FramePosition, beacon_vcf_estimate: FramePosition) -> FramePosition:
    """Vehicle LLF position from the beacon LLF position and the relative estimate."""
    if beacon_llf.frame != LLF:
        raise ValueError(f"expected LLF beacon position, got {beacon_llf.frame}")
    if beacon_vcf_estimate.frame != VCF:
        raise ValueError(f"expected VCF estimate, got {beacon_vcf_estimate.frame}")
    return FramePosition(beacon_llf.x - beacon_vcf_estimate.x,
                         beacon_llf.y - beacon_vcf_estimate.y,
                         beacon_llf.z - beacon_vcf_estimate.z, LLF)


def beacon_centric_llf(beacon_depth: float) -> FramePosition:
    """Beacon position in the beacon-centric LLF: pinned at the x-y origin at known depth."""
    if beacon_depth < 0:
        raise ValueError("negative beacon depth")
    return FramePosition(0.0, 0.0, -beacon_depth, LLF)
