"""Stepper-motor twin: microstep quantization, homing, trapezoidal timing,
a play (hysteron) backlash element and shaft-angle noise.

Sign convention: positive angles are clockwise (CW). The backlash element
keeps the shaft angle y within ``[u, u + backlash]`` of the commanded motor
angle u; driving CW leaves ``y == u``, reversing to CCW leaves the shaft
``backlash`` degrees behind, i.e. ``y == u + backlash``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import NotHomed

# measured on the adapter, kept for reference only (no torque model)
HOLDING_TORQUE_MOTOR_NM = 0.035
HOLDING_TORQUE_MIN_REQUIRED_NM = 0.025


class Direction(str, enum.Enum):
    CW = "CW"
    CCW = "CCW"
    NONE = "none"


@dataclass(frozen=True)
class MotorConfig:
    full_step_deg: float = 1.8
    microstep_divisor: int = 16
    step_noise_rms_fraction: float = 0.0245
    backlash_deg: float = 0.0
    max_speed: float = 2000.0  # microsteps / s
    acceleration: float = 4000.0  # microsteps / s^2
    endstop_deg: float = 0.0

    def __post_init__(self):
        if not self.full_step_deg > 0:
            raise ValueError("full_step_deg must be > 0")
        d = self.microstep_divisor
        if not (isinstance(d, int) and 1 <= d <= 256 and d & (d - 1) == 0):
            raise ValueError("microstep_divisor must be a power of two in [1, 256]")
        if self.backlash_deg < 0:
            raise ValueError("backlash_deg must be >= 0")
        if self.step_noise_rms_fraction < 0:
            raise ValueError("step_noise_rms_fraction must be >= 0")
        if not (self.max_speed > 0 and self.acceleration > 0):
            raise ValueError("max_speed and acceleration must be > 0")

    @property
    def microstep_deg(self) -> float:
        return self.full_step_deg / self.microstep_divisor

    @property
    def noise_rms_deg(self) -> float:
        return self.step_noise_rms_fraction * self.microstep_deg

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MotorConfig":
        d = dict(d)
        if "microstep_divisor" in d:
            d["microstep_divisor"] = int(d["microstep_divisor"])
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class MotorState:
    position_usteps: int = 0
    last_direction: Direction = Direction.NONE
    backlash_slack_deg: float = 0.0  # shaft minus commanded angle, in [0, backlash]
    homed: bool = False
    endstop_triggered: bool = False


@dataclass(frozen=True)
class MotionResult:
    effective_shaft_deg: float
    travel_time_s: float


def deg_to_usteps(config: MotorConfig, angle: float) -> int:
    """Nearest microstep; ties round away from zero."""
    q = angle / config.microstep_deg
    n = math.floor(abs(q) + 0.5)
    return int(math.copysign(n, q)) if n else 0


def deg_to_usteps_array(config: MotorConfig, angles) -> np.ndarray:
    """Vectorized :func:`deg_to_usteps`."""
    q = np.asarray(angles, dtype=float) / config.microstep_deg
    return (np.sign(q) * np.floor(np.abs(q) + 0.5)).astype(np.int64)


def usteps_to_deg(config: MotorConfig, usteps: int) -> float:
    return usteps * config.microstep_deg


def endstop_usteps(config: MotorConfig) -> int:
    return deg_to_usteps(config, config.endstop_deg)


def endstop_triggered(config: MotorConfig, usteps: int) -> bool:
    es = endstop_usteps(config)
    return usteps <= es if es <= 0 else usteps >= es


def travel_time(config: MotorConfig, distance_usteps: float) -> float:
    """Rest-to-rest time of a trapezoidal (or triangular) velocity profile."""
    d = abs(distance_usteps)
    v, a = config.max_speed, config.acceleration
    if d == 0:
        return 0.0
    if d >= v * v / a:
        return d / v + v / a
    return 2.0 * math.sqrt(d / a)


def apply_backlash(state: MotorState, config: MotorConfig, commanded_deg: float) -> float:
    """Shaft angle after the motor moves (monotonically) to ``commanded_deg``."""
    b = config.backlash_deg
    if b == 0:
        return commanded_deg
    shaft = usteps_to_deg(config, state.position_usteps) + state.backlash_slack_deg
    return min(max(shaft, commanded_deg), commanded_deg + b)


def command_motor(state: MotorState, config: MotorConfig, target_usteps: int, rng=None):
    """Drive to ``target_usteps``; returns ``(new_state, MotionResult)``.

    ``rng`` (a seed or ``numpy.random.Generator``) enables the shaft noise;
    with ``rng=None`` the shaft angle is ideal.
    """
    if not state.homed:
        raise NotHomed("motor must be homed before it can be commanded")
    target_usteps = int(target_usteps)
    commanded = usteps_to_deg(config, target_usteps)
    shaft = apply_backlash(state, config, commanded)
    delta = target_usteps - state.position_usteps
    if delta > 0:
        direction = Direction.CW
    elif delta < 0:
        direction = Direction.CCW
    else:
        direction = state.last_direction
    new_state = replace(
        state,
        position_usteps=target_usteps,
        last_direction=direction,
        backlash_slack_deg=shaft - commanded,
        endstop_triggered=endstop_triggered(config, target_usteps),
    )
    effective = shaft
    if rng is not None and config.noise_rms_deg > 0:
        effective += float(np.random.default_rng(rng).normal(0.0, config.noise_rms_deg))
    return new_state, MotionResult(effective, travel_time(config, delta))


def home_motor(state: MotorState, config: MotorConfig) -> MotorState:
    """Run to the end stop, zero the counter, and return to the home position.

    The end stop sits ``endstop_deg`` from home, on the CCW side by default,
    so the final move is CW and leaves the lash fully taken up.
    """
    es = endstop_usteps(config)
    direction = Direction.CW if es <= 0 else Direction.CCW
    slack = 0.0 if direction is Direction.CW else config.backlash_deg
    return MotorState(
        position_usteps=0,
        last_direction=direction,
        backlash_slack_deg=slack,
        homed=True,
        endstop_triggered=endstop_triggered(config, 0),
    )


def homing_time(config: MotorConfig) -> float:
    return travel_time(config, endstop_usteps(config))


def shaft_angle(state: MotorState, config: MotorConfig) -> float:
    """Noise-free shaft angle of a motor at rest."""
    return usteps_to_deg(config, state.position_usteps) + state.backlash_slack_deg
