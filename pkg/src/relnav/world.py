"""Ground-truth simulation: vehicle kinematics, acoustic channel, clocks, LBL.

The world owns true poses and clocks and turns beacon broadcasts into raw
5 x 8000 array captures. Receptions are synthesized in the frequency domain
so per-element sub-sample delays are exact: each propagation path (direct,
surface image, optional wall image) contributes the replica spectrum scaled
by spherical spreading and phase-shifted by its continuous arrival time plus
the plane-wave element delays for its apparent direction. Receiver-side
imperfections are injected here: a smooth periodic azimuth bias of the
body-relative azimuth (strongest fore and aft) and a per-element random
phase draw per capture, which together produce real-looking angle errors
while leaving ranging nearly untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (EulerAttitude, cartesian_to_spherical_arrays,
                       compass_to_enu_yaw, rotation_vcf_to_bff, wrap_deg)
from .doa import ArrayGeometry, plane_wave_delays, usbl_pyramid
from .ranging import CAPTURE_SAMPLES, ElementRecording, correlation_nfft
from .waveforms import SAMPLE_RATE, TemplateBank

RPM_PER_MPS = 1.0 / 1.25e-3    # thruster map: sog = RPM * 1.25e-3 * cos(pitch)


@dataclass
class EnvModel:
    soundspeed: float = 1481.0
    water_depth: float = 5.3
    surface_reflection: float = -0.9
    wall_reflection: float = 0.35
    wall_y: float | None = 3.0           # north wall plane y = wall_y, LLF meters
    ambient_noise: float = 0.02          # white noise sigma, amplitude units
    source_level: float = 30.0           # amplitude * meters at 1 m

    def __post_init__(self):
        if self.soundspeed <= 0:
            raise ValueError("soundspeed must be positive")
        for coef in (self.surface_reflection, self.wall_reflection):
            if abs(coef) > 1.0:
                raise ValueError("reflection coefficients must have magnitude <= 1")


@dataclass
class ReceiverModel:
    """Receiver-side imperfection model (shared by all vehicles by default)."""

    azimuth_bias_a1_deg: float = 4.0     # cos(phi) term: fore/aft dominant
    azimuth_bias_a3_deg: float = 1.0     # cos(3 phi) term
    element_phase_sigma_rad: float = 0.3

    def injected_bias(self, phi_deg):
        phi = np.radians(phi_deg)
        return self.azimuth_bias_a1_deg * np.cos(phi) + self.azimuth_bias_a3_deg * np.cos(3 * phi)

    def ideal_bias_table(self, step_deg: float = 5.0):
        """The lookup a perfect rotational calibration would converge to.

        Rows are keyed by apparent azimuth: for each true azimuth the
        injected bias maps it to apparent = true + bias, and the table must
        return that bias when queried at the apparent angle.
        """
        from .doa import AzimuthBiasTable
        true = np.arange(0.0, 360.0, step_deg)
        bias = self.injected_bias(true)
        return AzimuthBiasTable((true + bias) % 360.0, bias)


@dataclass
class ClockModel:
    """Receiver CSAC: linear holdover drift plus trigger jitter."""

    drift_rate: float = 100e-6 / 86400.0     # under 100 us per 24 h
    trigger_jitter_std: float = 80e-12
    initial_offset: float = 0.0

    def error_at(self, t: float) -> float:
        return self.initial_offset + self.drift_rate * t


@dataclass
class BeaconState:
    """Towed navigation beacon: position, depth, active mode, broadcast timing."""

    x: float = 0.0
    y: float = 0.0
    depth: float = 1.0
    mode: int = 0                        # 0 = off, 1..4 = command chirps
    period: float = 1.0
    jitter_std: float = 0.35e-3          # transmit jitter, under 1 ms
    max_speed: float = 1.5
    target: tuple[float, float] | None = None

    def step(self, dt: float):
        """Slew toward the commanded target at no more than max_speed."""
        if self.target is None:
            return
        dx = self.target[0] - self.x
        dy = self.target[1] - self.y
        dist = math.hypot(dx, dy)
        if dist < 1e-9:
            return
        move = min(dist, self.max_speed * dt)
        self.x += dx / dist * move
        self.y += dy / dist * move

    @property
    def position_llf(self) -> np.ndarray:
        return np.array([self.x, self.y, -self.depth])

    def draw_tx_jitter(self, rng: np.random.Generator) -> float:
        return float(np.clip(rng.normal(0.0, self.jitter_std), -1e-3, 1e-3))


@dataclass
class VehicleTruth:
    """True kinematic state plus per-vehicle sensor parameters.

    The compass model is a constant bias plus a heading-dependent deviation
    (residual soft-iron term) plus white noise. Only the constant part is
    assumed calibrated away downstream; the deviation is what keeps
    dead-reckoning error growing even on closed loops.
    """

    name: str
    x: float = 0.0
    y: float = 0.0
    depth: float = 0.0
    heading_deg: float = 0.0             # true compass heading
    pitch_deg: float = 0.0
    roll_deg: float = 0.0
    rpm: float = 0.0
    heading_bias_deg: float = 0.0
    deviation_amp_deg: float = 0.0
    deviation_phase_deg: float = 0.0
    heading_noise_deg: float = 3.0
    max_turn_rate_dps: float = 20.0
    depth_rate_mps: float = 0.3
    ascent_rate_mps: float = 0.03        # buoyant drift with thruster off
    surfaced: bool = False

    @property
    def position_llf(self) -> np.ndarray:
        return np.array([self.x, self.y, -self.depth])

    @property
    def sog(self) -> float:
        return self.rpm * 1.25e-3 * math.cos(math.radians(self.pitch_deg))

    def compass_error_deg(self) -> float:
        return self.heading_bias_deg + self.deviation_amp_deg * math.sin(
            math.radians(self.heading_deg + self.deviation_phase_deg))

    def sensed_heading(self, rng: np.random.Generator | None = None) -> float:
        noise = rng.normal(0.0, self.heading_noise_deg) if rng is not None else 0.0
        return (self.heading_deg + self.compass_error_deg() + noise) % 360.0

    def true_attitude(self) -> EulerAttitude:
        return EulerAttitude(self.roll_deg, self.pitch_deg,
                             compass_to_enu_yaw(self.heading_deg))


def step_vehicle(truth: VehicleTruth, setpoints, dt: float,
                 sensed_heading_deg: float | None = None) -> VehicleTruth:
    """Advance the kinematic vehicle model by dt against the given setpoints.

    Heading servoes the sensed (biased, noisy) compass toward the setpoint,
    so a heading bias steers the true track off the commanded one. Zero RPM
    leaves the position fixed apart from a slow buoyant ascent.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if sensed_heading_deg is None:
        sensed_heading_deg = truth.heading_deg + truth.compass_error_deg()

    thrust = bool(setpoints.thruster_active) and not truth.surfaced
    truth.rpm = setpoints.speed * RPM_PER_MPS if thrust else 0.0

    if thrust:
        err = wrap_deg(setpoints.heading_deg - sensed_heading_deg)
        turn = max(-truth.max_turn_rate_dps * dt, min(truth.max_turn_rate_dps * dt, err))
        truth.heading_deg = (truth.heading_deg + turn) % 360.0
        depth_err = setpoints.depth - truth.depth
        dz = max(-truth.depth_rate_mps * dt, min(truth.depth_rate_mps * dt, depth_err))
        truth.depth = max(0.0, truth.depth + dz)
        horiz = max(truth.sog, 0.1)
        truth.pitch_deg = max(-25.0, min(25.0, math.degrees(math.atan2(-dz / dt, horiz))))
    else:
        truth.depth = max(0.0, truth.depth - truth.ascent_rate_mps * dt)
        truth.pitch_deg *= max(0.0, 1.0 - dt)

    sog = truth.sog
    h = math.radians(truth.heading_deg)
    truth.x += sog * dt * math.sin(h)
    truth.y += sog * dt * math.cos(h)
    if truth.depth <= 0.05 and getattr(setpoints, "surfaced", False):
        truth.surfaced = True
        truth.rpm = 0.0
    return truth


class ChannelSimulator:
    """Synthesizes one PPS-triggered capture per vehicle per broadcast second."""

    def __init__(self, bank: TemplateBank, env: EnvModel,
                 clock: ClockModel | None = None,
                 receiver: ReceiverModel | None = None,
                 geometry: ArrayGeometry | None = None,
                 sample_rate: float = SAMPLE_RATE,
                 n_samples: int = CAPTURE_SAMPLES):
        self.bank = bank
        self.env = env
        self.clock = clock or ClockModel()
        self.receiver = receiver or ReceiverModel()
        self.geometry = geometry or usbl_pyramid()
        self.sample_rate = sample_rate
        self.n_samples = n_samples
        longest = max(w.n_samples for w in bank.entries.values())
        self.nfft = correlation_nfft(n_samples, longest)
        self._freqs = np.fft.rfftfreq(self.nfft, 1.0 / sample_rate)
        self._template_spec = {m: np.fft.rfft(bank[m].samples, self.nfft)
                               for m in bank.modes}
        self.max_range = env.soundspeed / sample_rate * n_samples

    def _paths(self, beacon_xyz: np.ndarray, vehicle_xyz: np.ndarray):
        """(amplitude, source position) per propagation path, image-source method."""
        paths = [(1.0, beacon_xyz)]
        if self.env.surface_reflection != 0.0:
            mirror = beacon_xyz.copy()
            mirror[2] = -mirror[2]
            paths.append((self.env.surface_reflection, mirror))
        if self.env.wall_reflection != 0.0 and self.env.wall_y is not None:
            mirror = beacon_xyz.copy()
            mirror[1] = 2.0 * self.env.wall_y - mirror[1]
            paths.append((self.env.wall_reflection, mirror))
        return paths

    def noise_only(self, trigger_epoch: float, rng: np.random.Generator) -> ElementRecording:
        channels = rng.normal(0.0, self.env.ambient_noise,
                              (self.geometry.n_elements, self.n_samples))
        return ElementRecording(channels, self.sample_rate, trigger_epoch)

    def synthesize(self, beacon: BeaconState, vehicle: VehicleTruth,
                   t_second: float, rng: np.random.Generator,
                   tx_jitter: float | None = None) -> ElementRecording:
        """One capture starting at the receiver's (drifted) second boundary."""
        if beacon.mode == 0 or beacon.mode not in self.bank.entries:
            return self.noise_only(t_second, rng)
        if tx_jitter is None:
            tx_jitter = beacon.draw_tx_jitter(rng)
        clock_err = self.clock.error_at(t_second)
        if self.clock.trigger_jitter_std > 0:
            clock_err += rng.normal(0.0, self.clock.trigger_jitter_std)

        rot = rotation_vcf_to_bff(vehicle.true_attitude())
        template = self._template_spec[beacon.mode]
        n_el = self.geometry.n_elements
        spectra = np.zeros((n_el, len(self._freqs)), dtype=complex)
        in_window = False
        for coef, src in self._paths(beacon.position_llf, vehicle.position_llf):
            vec = src - vehicle.position_llf
            dist = float(np.linalg.norm(vec))
            if dist < 1e-6:
                continue
            arrival = dist / self.env.soundspeed + tx_jitter - clock_err
            if arrival * self.sample_rate > self.n_samples:
                continue
            in_window = True
            bff = rot @ vec
            _, theta, phi = cartesian_to_spherical_arrays(bff[0], bff[1], bff[2])
            phi = (float(phi) + float(self.receiver.injected_bias(phi))) % 360.0
            tau = plane_wave_delays(self.geometry, float(theta), phi, self.env.soundspeed)
            amp = coef * self.env.source_level / dist
            delays = arrival + tau
            spectra += amp * template[None, :] * np.exp(
                -2j * np.pi * self._freqs[None, :] * delays[:, None])
        if not in_window:
            return self.noise_only(t_second, rng)

        if self.receiver.element_phase_sigma_rad > 0:
            jitter = rng.normal(0.0, self.receiver.element_phase_sigma_rad, n_el)
            spectra *= np.exp(1j * jitter)[:, None]
        channels = np.fft.irfft(spectra, self.nfft, axis=1)[:, :self.n_samples]
        channels = channels + rng.normal(0.0, self.env.ambient_noise, channels.shape)
        return ElementRecording(channels, self.sample_rate, t_second)


@dataclass
class LblSetup:
    """Two fixed reference transmitters used only for ground-truth fixes."""

    east: tuple[float, float] = (17.05, 1.78)
    west: tuple[float, float] = (-60.56, -34.97)
    range_noise_std: float = 3.9 / math.sqrt(2.0)

    def __post_init__(self):
        if self.baseline <= 0:
            raise ValueError("coincident LBL beacons")

    @property
    def baseline(self) -> float:
        return math.hypot(self.east[0] - self.west[0], self.east[1] - self.west[1])


@dataclass
class LblFix:
    point: tuple[float, float] | None
    status: str                           # "ok" | "tangent" | "no_fix"


def lbl_fix(r1: float, r2: float, setup: LblSetup) -> LblFix:
    """Circle-circle intersection, keeping the solution south of the baseline.

    r1 is the range to the east beacon, r2 to the west. Non-intersecting
    circles give no fix; a lens of zero area is returned flagged tangent.
    """
    if r1 <= 0 or r2 <= 0:
        raise ValueError("ranges must be positive")
    p1 = np.array(setup.east)
    p2 = np.array(setup.west)
    d = float(np.linalg.norm(p2 - p1))
    if d == 0.0:
        raise ValueError("coincident LBL beacons")
    if r1 + r2 < d or abs(r1 - r2) > d:
        return LblFix(None, "no_fix")
    a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d)
    h_sq = r1 * r1 - a * a
    h = math.sqrt(max(h_sq, 0.0))
    u = (p2 - p1) / d
    mid = p1 + a * u
    normal = np.array([-u[1], u[0]])
    if normal[1] < 0:                     # make the normal point north
        normal = -normal
    south = mid - h * normal
    status = "tangent" if h < 1e-9 else "ok"
    return LblFix((float(south[0]), float(south[1])), status)


class DeadReckoner:
    """Position by integrating reported speed and compass heading only."""

    def __init__(self, start_xy):
        self.x, self.y = float(start_xy[0]), float(start_xy[1])
        self.distance = 0.0

    def update(self, sog: float, heading_deg: float, dt: float):
        h = math.radians(heading_deg)
        self.x += sog * dt * math.sin(h)
        self.y += sog * dt * math.cos(h)
        self.distance += abs(sog) * dt

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


def dead_reckon(history, start_xy) -> np.ndarray:
    """Trajectory from a sequence of (sog, heading_deg, dt) tuples."""
    dr = DeadReckoner(start_xy)
    out = [dr.position]
    for sog, heading, dt in history:
        dr.update(sog, heading, dt)
        out.append(dr.position)
    return np.array(out)
