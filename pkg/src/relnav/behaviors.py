"""Beacon-relative autonomy behaviors.

Every behavior consumes only the vehicle's own relative beacon estimate;
fleet coordination happens purely through per-vehicle parameters chosen
before launch (different radii, offsets, or headings), never through
inter-vehicle data. Positions here live in the beacon-centric LLF: the
beacon sits at the x-y origin and the vehicle is at the negated filter
estimate. Steering is pure pursuit with a 10 m lookahead; headings are
compass degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LOOKAHEAD_M = 10.0
CAPTURE_M = 3.0
RECENTER_CT_M = 2.0
HOLD_TIMEOUT_S = 30.0


@dataclass(frozen=True)
class Loiter:
    offset_x_m: float
    offset_y_m: float
    radius_m: float
    direction: str = "CCW"

    def __post_init__(self):
        if self.radius_m <= 0:
            raise ValueError("radius must be positive")
        if self.direction not in ("CW", "CCW"):
            raise ValueError("direction must be CW or CCW")


@dataclass(frozen=True)
class Trackline:
    offset_x_m: float
    offset_y_m: float
    heading_deg: float
    length_m: float
    buffer_m: float

    def __post_init__(self):
        if self.length_m <= 0 or self.buffer_m <= 0:
            raise ValueError("length and buffer must be positive")


@dataclass(frozen=True)
class OffsetFollow:
    offset_x_m: float
    offset_y_m: float
    buffer_radius_m: float
    depth_ceiling_m: float

    def __post_init__(self):
        if self.buffer_radius_m <= 0:
            raise ValueError("buffer radius must be positive")


@dataclass(frozen=True)
class ReturnSurface:
    offset_x_m: float
    offset_y_m: float
    heading_deg: float
    length_m: float

    def __post_init__(self):
        if self.length_m <= 0:
            raise ValueError("length must be positive")


@dataclass(frozen=True)
class Abort:
    pass


BehaviorSpec = Loiter | Trackline | OffsetFollow | ReturnSurface | Abort
ModeMap = dict[int, BehaviorSpec]


class ModeMapError(KeyError):
    """Raised when a confirmed mode has no behavior assigned."""


@dataclass(frozen=True)
class Setpoints:
    heading_deg: float
    speed: float
    depth: float
    thruster_active: bool = True
    surfaced: bool = False

    def __post_init__(self):
        if self.speed < 0 or self.depth < 0:
            raise ValueError("speed and depth must be non-negative")


@dataclass(frozen=True)
class Cruise:
    speed: float = 1.0
    depth: float = 2.5


def _heading_to(dx: float, dy: float) -> float:
    """Compass heading of an ENU displacement."""
    return math.degrees(math.atan2(dx, dy)) % 360.0


def _unit(heading_deg: float) -> np.ndarray:
    h = math.radians(heading_deg)
    return np.array([math.sin(h), math.cos(h)])


def vehicle_position(rel_beacon_xy) -> np.ndarray:
    """Vehicle position in the beacon-centric LLF: negated relative estimate."""
    return -np.asarray(rel_beacon_xy, dtype=float)


def loiter_setpoint(rel_beacon_xy, current_heading_deg: float, spec: Loiter,
                    cruise: Cruise = Cruise()) -> Setpoints:
    """Track a circle around beacon + offset in the commanded sense.

    Far outside the circle the vehicle aims at the tangent point whose
    approach continues in the loiter direction. Within a lookahead of the
    circle it steers along the local tangent plus a proportional radial
    correction, which has its equilibrium exactly on the circle (a carrot
    chase converges to a visibly smaller radius).
    """
    pos = vehicle_position(rel_beacon_xy)
    center = np.array([spec.offset_x_m, spec.offset_y_m])
    rel = pos - center
    dist = float(np.linalg.norm(rel))
    ccw = spec.direction == "CCW"

    if dist < 1e-6:
        heading = current_heading_deg % 360.0
    elif dist > spec.radius_m + LOOKAHEAD_M:
        heading = _tangent_heading(rel, dist, spec.radius_m, ccw, center, pos)
    else:
        radial = rel / dist
        tangent = np.array([-radial[1], radial[0]]) if ccw else np.array([radial[1], -radial[0]])
        gain = 0.8 * max(-1.0, min(1.0, (spec.radius_m - dist) / LOOKAHEAD_M))
        vec = tangent + gain * radial
        heading = _heading_to(vec[0], vec[1])
    return Setpoints(heading, cruise.speed, cruise.depth)


def _tangent_heading(rel, dist, radius, ccw, center, pos) -> float:
    psi = math.atan2(rel[1], rel[0])
    gamma = math.acos(min(1.0, radius / dist))
    best = None
    for sign in (1.0, -1.0):
        ang = psi + sign * gamma
        t = center + radius * np.array([math.cos(ang), math.sin(ang)])
        radial = t - center
        tangent = np.array([-radial[1], radial[0]]) if ccw else np.array([radial[1], -radial[0]])
        approach = t - pos
        if float(approach @ tangent) > 0:
            best = t
            break
    if best is None:
        best = center + radius * np.array([math.cos(psi + gamma), math.sin(psi + gamma)])
    return _heading_to(best[0] - pos[0], best[1] - pos[1])


@dataclass
class TracklineState:
    target_sign: float = 0.0      # +1 toward the positive end, 0 = uninitialized
    centering: bool = False


def trackline_setpoint(rel_beacon_xy, spec: Trackline, state: TracklineState,
                       cruise: Cruise = Cruise()) -> Setpoints:
    """Back-and-forth transects of a finite line at beacon + offset.

    Inside the buffer the heading is exactly the line heading in the
    current transit sense; drifting outside the buffer switches to a
    pure-pursuit re-centering aim at a point on the line ahead, which is
    dropped again once the cross-track falls under the re-center band.
    """
    pos = vehicle_position(rel_beacon_xy)
    center = np.array([spec.offset_x_m, spec.offset_y_m])
    u = _unit(spec.heading_deg)
    normal = np.array([u[1], -u[0]])
    rel = pos - center
    along = float(rel @ u)
    cross = float(rel @ normal)
    half = spec.length_m / 2.0

    if state.target_sign == 0.0:
        d_pos = np.linalg.norm(center + half * u - pos)
        d_neg = np.linalg.norm(center - half * u - pos)
        state.target_sign = 1.0 if d_pos >= d_neg else -1.0

    if state.target_sign > 0 and along >= half - CAPTURE_M:
        state.target_sign = -1.0
    elif state.target_sign < 0 and along <= -half + CAPTURE_M:
        state.target_sign = 1.0

    if abs(cross) > spec.buffer_m:
        state.centering = True
    elif abs(cross) < RECENTER_CT_M:
        state.centering = False

    if state.centering:
        aim_along = max(-half, min(half, along + state.target_sign * LOOKAHEAD_M))
        aim = center + aim_along * u
        heading = _heading_to(aim[0] - pos[0], aim[1] - pos[1])
    else:
        heading = (spec.heading_deg if state.target_sign > 0
                   else spec.heading_deg + 180.0) % 360.0
    return Setpoints(heading, cruise.speed, cruise.depth)


@dataclass
class OffsetFollowState:
    phase: str = "sprint"        # sprint | drift | dive


def offset_follow_setpoint(rel_beacon_xy, vehicle_depth: float, spec: OffsetFollow,
                           state: OffsetFollowState,
                           cruise: Cruise = Cruise()) -> Setpoints:
    """Sprint-and-drift station keeping at beacon + offset.

    On station the propeller stops and the slightly buoyant vehicle floats
    up; above the depth ceiling it thrusts back down, and leaving the buffer
    radius (drift or beacon motion) triggers a sprint back to station.
    """
    pos = vehicle_position(rel_beacon_xy)
    target = np.array([spec.offset_x_m, spec.offset_y_m])
    dist = float(np.linalg.norm(target - pos))
    heading = _heading_to(target[0] - pos[0], target[1] - pos[1]) if dist > 1e-6 else 0.0

    if dist > spec.buffer_radius_m:
        state.phase = "sprint"
    elif state.phase == "sprint" and dist <= CAPTURE_M:
        state.phase = "drift"

    if state.phase == "drift" and vehicle_depth < spec.depth_ceiling_m:
        state.phase = "dive"
    elif state.phase == "dive" and vehicle_depth >= cruise.depth * 0.9:
        state.phase = "drift"

    if state.phase == "drift":
        return Setpoints(heading, 0.0, cruise.depth, thruster_active=False)
    return Setpoints(heading, cruise.speed, cruise.depth)


@dataclass
class ReturnSurfaceState:
    done: bool = False


def return_surface_setpoint(rel_beacon_xy, spec: ReturnSurface,
                            state: ReturnSurfaceState,
                            cruise: Cruise = Cruise()) -> Setpoints:
    """Transit a return line ending at beacon + offset, then float up.

    The vehicle joins the line at the perpendicular foot clamped to the
    segment, follows it to the end, and then stops all activity.
    """
    pos = vehicle_position(rel_beacon_xy)
    end = np.array([spec.offset_x_m, spec.offset_y_m])
    u = _unit(spec.heading_deg)
    start = end - spec.length_m * u

    if state.done or float(np.linalg.norm(end - pos)) <= CAPTURE_M:
        state.done = True
        return Setpoints(spec.heading_deg, 0.0, 0.0, thruster_active=False, surfaced=True)

    along = float(np.clip((pos - start) @ u, 0.0, spec.length_m))
    aim = start + min(along + LOOKAHEAD_M, spec.length_m) * u
    heading = _heading_to(aim[0] - pos[0], aim[1] - pos[1])
    return Setpoints(heading, cruise.speed, cruise.depth)


def entry_point(pos_xy, spec: ReturnSurface) -> np.ndarray:
    """Nearest point of approach on the return line (perpendicular foot, clamped)."""
    pos = np.asarray(pos_xy, dtype=float)
    end = np.array([spec.offset_x_m, spec.offset_y_m])
    u = _unit(spec.heading_deg)
    start = end - spec.length_m * u
    along = float(np.clip((pos - start) @ u, 0.0, spec.length_m))
    return start + along * u


def idle_setpoints(current_heading_deg: float, depth: float = 0.0) -> Setpoints:
    """Safe holding pattern: thruster off, drifting."""
    return Setpoints(current_heading_deg % 360.0, 0.0, depth, thruster_active=False)


def dispatch(confirmed_mode: int | None, mode_map: ModeMap, rel_beacon_xy,
             vehicle_depth: float, current_heading_deg: float,
             states: dict, cruise: Cruise = Cruise()) -> Setpoints:
    """Route to the behavior bound to the confirmed mode.

    No confirmed mode yields the safe holding pattern; a confirmed mode
    missing from the map is an error.
    """
    if confirmed_mode is None:
        return idle_setpoints(current_heading_deg, vehicle_depth)
    if confirmed_mode not in mode_map:
        raise ModeMapError(f"mode {confirmed_mode} not in mode map")
    spec = mode_map[confirmed_mode]
    if isinstance(spec, Abort):
        return Setpoints(current_heading_deg % 360.0, 0.0, 0.0,
                         thruster_active=False, surfaced=True)
    if isinstance(spec, Loiter):
        return loiter_setpoint(rel_beacon_xy, current_heading_deg, spec, cruise)
    if isinstance(spec, Trackline):
        state = states.setdefault("trackline", TracklineState())
        return trackline_setpoint(rel_beacon_xy, spec, state, cruise)
    if isinstance(spec, OffsetFollow):
        state = states.setdefault("offset_follow", OffsetFollowState())
        return offset_follow_setpoint(rel_beacon_xy, vehicle_depth, spec, state, cruise)
    if isinstance(spec, ReturnSurface):
        state = states.setdefault("return", ReturnSurfaceState())
        return return_surface_setpoint(rel_beacon_xy, spec, state, cruise)
    raise ModeMapError(f"unknown behavior spec {type(spec).__name__}")


@dataclass
class BehaviorEngine:
    """Per-vehicle behavior dispatch with hold policy and progress state.

    The active mode is sticky: it changes only when a new mode is confirmed,
    so momentary confirmation dropouts do not interrupt the behavior. With
    an unconverged estimate the last setpoints are held for a bounded time,
    after which the thruster is cut.
    """

    mode_map: ModeMap
    cruise: Cruise = Cruise()
    active_mode: int | None = None
    _states: dict = field(default_factory=dict)
    _last: Setpoints | None = None
    _unconverged_since: float | None = None

    def step(self, t: float, confirmed_mode: int | None, estimate,
             vehicle_depth: float, current_heading_deg: float) -> Setpoints:
        if confirmed_mode is not None and confirmed_mode != self.active_mode:
            self.active_mode = confirmed_mode
            self._states = {}

        if self.active_mode is None:
            return idle_setpoints(current_heading_deg, vehicle_depth)

        spec = self.mode_map.get(self.active_mode)
        if spec is None:
            raise ModeMapError(f"mode {self.active_mode} not in mode map")
        if isinstance(spec, Abort):
            return Setpoints(current_heading_deg % 360.0, 0.0, 0.0,
                             thruster_active=False, surfaced=True)

        if estimate is None or not estimate.converged:
            if self._unconverged_since is None:
                self._unconverged_since = t
            if self._last is not None and t - self._unconverged_since <= HOLD_TIMEOUT_S:
                return self._last
            return idle_setpoints(current_heading_deg, vehicle_depth)
        self._unconverged_since = None

        sp = dispatch(self.active_mode, self.mode_map, estimate.mean[:2],
                      vehicle_depth, current_heading_deg, self._states, self.cruise)
        self._last = sp
        return sp
