"""Firmware twin: initialization/command state machine behind the line protocol.

The machine is stepped by :func:`step_state_machine`, which answers every
command immediately and returns deferred actions (homing, sweep, motion).
:class:`Emulator` executes those actions on virtual time, so a session is
reproducible from (seed, script, config).
"""

from __future__ import annotations

import enum
import json
import logging
import socketserver
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import actuation as act
from .errors import OutOfRange
from .kinematics import AXES, DiscState, InstrumentCalibration, TipPose, decouple, forward_map
from .protocol import Command, ParseError, err, format_positions, ok, parse_command

log = logging.getLogger(__name__)


class Phase(str, enum.Enum):
    BOOT = "BOOT"
    HOMING = "HOMING"
    WAIT_INSTRUMENT = "WAIT_INSTRUMENT"
    SWEEP = "SWEEP"
    CENTERING = "CENTERING"
    READY = "READY"
    FAULT = "FAULT"


# phases in which POS? can answer (motors homed)
_HOMED_PHASES = {Phase.WAIT_INSTRUMENT, Phase.SWEEP, Phase.CENTERING, Phase.READY, Phase.FAULT}


@dataclass(frozen=True)
class EmulatorConfig:
    motors: dict = field(default_factory=lambda: {a: act.MotorConfig() for a in AXES})
    seed: int = 0
    calibration_path: str = None
    noise: bool = True

    @classmethod
    def for_instrument(cls, calib: InstrumentCalibration, seed: int = 0, **motor_overrides) -> "EmulatorConfig":
        """Motor configs with each end stop at the CCW disc maximum of ``calib``."""
        motors = {}
        for a in AXES:
            base = dict(endstop_deg=calib.axis_map(a).disc_range[0])
            base.update(motor_overrides.get(a, {}))
            motors[a] = act.MotorConfig(**base)
        return cls(motors=motors, seed=seed)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "calibration": self.calibration_path,
            "noise": self.noise,
            "motors": {a: self.motors[a].to_dict() for a in AXES},
        }

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "EmulatorConfig":
        calib = d.get("calibration")
        if calib and base_dir is not None and not Path(calib).is_absolute():
            calib = str(Path(base_dir) / calib)
        motors = {a: act.MotorConfig.from_dict(d.get("motors", {}).get(a, {})) for a in AXES}
        return cls(motors=motors, seed=int(d.get("seed", 0)), calibration_path=calib, noise=bool(d.get("noise", True)))

    @classmethod
    def load(cls, path) -> "EmulatorConfig":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), base_dir=path.parent)


@dataclass(frozen=True)
class ControllerState:
    phase: Phase = Phase.BOOT
    motors: tuple = tuple(act.MotorState() for _ in AXES)
    shaft_deg: tuple = (0.0, 0.0, 0.0, 0.0)
    clock_s: float = 0.0
    instrument: InstrumentCalibration = None

    @property
    def positions(self) -> tuple:
        return tuple(m.position_usteps for m in self.motors)


def commanded_disc_state(config: EmulatorConfig, usteps) -> DiscState:
    return DiscState(*(act.usteps_to_deg(config.motors[a], n) for a, n in zip(AXES, usteps)))


def quantize_disc_coords(calib: InstrumentCalibration, config: EmulatorConfig, coords: dict) -> tuple:
    """Microstep targets for decoupled disc coordinates.

    Yaw targets are rounded after adding the coupling term of the *quantized*
    pitch disc, so every decoupled coordinate lands within half a microstep
    of its request.
    """
    mc = config.motors
    nz = act.deg_to_usteps(mc["z"], coords["z"])
    nx = act.deg_to_usteps(mc["x"], coords["x"])
    x_deg = act.usteps_to_deg(mc["x"], nx)
    ny = [act.deg_to_usteps(mc[a], coords[a] + calib.kappa(a) * x_deg) for a in ("y1", "y2")]
    return (nz, nx, *ny)


def quantize_disc_coords_batch(calib: InstrumentCalibration, config: EmulatorConfig, coords) -> np.ndarray:
    """Vectorized :func:`quantize_disc_coords` over rows of decoupled (z, x, y1, y2)."""
    c = np.atleast_2d(np.asarray(coords, dtype=float))
    mc = config.motors
    out = np.empty(c.shape, dtype=np.int64)
    out[:, 0] = act.deg_to_usteps_array(mc["z"], c[:, 0])
    out[:, 1] = act.deg_to_usteps_array(mc["x"], c[:, 1])
    x_deg = out[:, 1] * mc["x"].microstep_deg
    for k, a in ((2, "y1"), (3, "y2")):
        out[:, k] = act.deg_to_usteps_array(mc[a], c[:, k] + calib.kappa(a) * x_deg)
    return out


def domain_tolerance(config: EmulatorConfig) -> float:
    """Half the coarsest microstep: how far a rounded target may sit past a map end."""
    return max(m.microstep_deg for m in config.motors.values()) / 2


def step_state_machine(state: ControllerState, command: Command, config: EmulatorConfig):
    """One protocol step: ``(new_state, immediate_response, deferred_actions)``.

    On any error the state is returned unchanged.
    """
    phase, verb = state.phase, command.verb
    if verb == "RESET":
        return ControllerState(instrument=state.instrument, clock_s=state.clock_s), ok("RESET"), []
    if verb == "STATE?":
        return state, f"STATE {phase.value}", []
    if verb == "POS?":
        if phase not in _HOMED_PHASES:
            return state, err(409, phase.value), []
        return state, format_positions("POS", state.positions), []
    if verb == "INIT":
        if phase not in (Phase.BOOT, Phase.READY):
            return state, err(409, phase.value), []
        return replace(state, phase=Phase.HOMING), ok("INIT"), [("home",)]
    if verb == "INSERTED":
        if phase is not Phase.WAIT_INSTRUMENT:
            return state, err(409, phase.value), []
        if state.instrument is None:
            return state, err(412, "NO_INSTRUMENT"), []
        return replace(state, phase=Phase.SWEEP), ok("INSERTED"), [("sweep",)]
    if verb == "MOVE":
        if phase is not Phase.READY:
            return state, err(409, phase.value), []
        try:
            forward_map(state.instrument, commanded_disc_state(config, command.args), tol=domain_tolerance(config))
        except OutOfRange as exc:
            return state, err(416, exc.axis), []
        return state, ok("MOVE"), [("move", tuple(command.args))]
    raise ValueError(f"unknown verb {verb!r}")  # parse_command never yields this


def _move_all(state: ControllerState, config: EmulatorConfig, targets, rng):
    motors, shafts, times = [], [], []
    for a, m, n in zip(AXES, state.motors, targets):
        new_m, res = act.command_motor(m, config.motors[a], n, rng=rng if config.noise else None)
        motors.append(new_m)
        shafts.append(res.effective_shaft_deg)
        times.append(res.travel_time_s)
    return replace(state, motors=tuple(motors), shaft_deg=tuple(shafts), clock_s=state.clock_s + max(times))


def home_all(state: ControllerState, config: EmulatorConfig) -> ControllerState:
    motors = tuple(act.home_motor(m, config.motors[a]) for a, m in zip(AXES, state.motors))
    shafts = tuple(act.shaft_angle(m, config.motors[a]) for a, m in zip(AXES, motors))
    dt = max(act.homing_time(config.motors[a]) for a in AXES)
    return replace(state, phase=Phase.WAIT_INSTRUMENT, motors=motors, shaft_deg=shafts, clock_s=state.clock_s + dt)


def sweep_targets(calib: InstrumentCalibration, config: EmulatorConfig) -> list:
    """Microstep targets visited by the insertion sweep, in order.

    Each axis (z, x, y1, y2) visits its CW maximum, CCW maximum, then center;
    yaw motors co-move with the pitch motor to keep the jaws in range.
    """
    mc = config.motors
    targets = []
    for a in AXES:
        lo, hi = calib.axis_map(a).disc_range
        for goal in (hi, lo, 0.0):
            coords = {b: 0.0 for b in AXES}
            # truncate toward center so quantization never leaves the domain
            n = int(np.trunc(goal / mc[a].microstep_deg))
            coords[a] = act.usteps_to_deg(mc[a], n)
            targets.append(quantize_disc_coords(calib, config, coords))
    # drop consecutive duplicates; a zero-range axis contributes nothing
    out = []
    for t in targets:
        if t != (out[-1] if out else (0, 0, 0, 0)):
            out.append(t)
    return out


def run_sweep(state: ControllerState, config: EmulatorConfig, rng=None) -> ControllerState:
    """Insertion sweep; ends in CENTERING, or FAULT if a target is infeasible."""
    calib = state.instrument
    for targets in sweep_targets(calib, config):
        try:
            forward_map(calib, commanded_disc_state(config, targets), tol=domain_tolerance(config))
        except OutOfRange as exc:
            log.warning("sweep target infeasible: %s", exc)
            return replace(state, phase=Phase.FAULT)
        state = _move_all(state, config, targets, rng)
    return replace(state, phase=Phase.CENTERING)


def run_centering(state: ControllerState, config: EmulatorConfig, rng=None) -> ControllerState:
    if state.positions != (0, 0, 0, 0):
        state = _move_all(state, config, (0, 0, 0, 0), rng)
    return replace(state, phase=Phase.READY)


def execute_action(state: ControllerState, action: tuple, config: EmulatorConfig, rng=None):
    """Run one deferred action; returns ``(new_state, responses)``."""
    kind = action[0]
    if kind == "home":
        state = home_all(state, config)
        return state, [f"STATE {state.phase.value}"]
    if kind == "sweep":
        state = run_sweep(state, config, rng)
        if state.phase is Phase.CENTERING:
            state = run_centering(state, config, rng)
        return state, [f"STATE {state.phase.value}"]
    if kind == "move":
        state = _move_all(state, config, action[1], rng)
        return state, [format_positions("DONE", state.positions)]
    raise ValueError(f"unknown action {kind!r}")


class Emulator:
    """Stateful device: controller state, RNG, and the simulated instrument."""

    def __init__(self, config: EmulatorConfig = None, calibration: InstrumentCalibration = None):
        self.config = config or EmulatorConfig()
        if calibration is None and self.config.calibration_path:
            calibration = InstrumentCalibration.load(self.config.calibration_path)
        self.calibration = calibration
        self.rng = np.random.default_rng(self.config.seed)
        self.state = ControllerState(instrument=calibration)

    def handle_line(self, line) -> list:
        try:
            command = parse_command(line)
        except ParseError as exc:
            return [err(400, f"PARSE {exc.position} {exc.reason}")]
        self.state, response, actions = step_state_machine(self.state, command, self.config)
        responses = [response]
        for action in actions:
            self.state, more = execute_action(self.state, action, self.config, self.rng)
            responses.extend(more)
        return responses

    def shaft_disc_state(self) -> DiscState:
        return DiscState(*self.state.shaft_deg)

    def tip_pose(self) -> TipPose:
        """Physical tip pose from the actual shaft angles (mechanical stops saturate)."""
        return forward_map(self.calibration, self.shaft_disc_state(), saturate=True)

    def decoupled_shaft(self) -> dict:
        return decouple(self.calibration, self.shaft_disc_state())


def serve(reader, writer, emulator: Emulator) -> None:
    """Serve one session over binary file-like streams until EOF."""
    while True:
        line = reader.readline()
        if not line:
            break
        out = emulator.handle_line(line)
        writer.write(("\n".join(out) + "\n").encode("ascii"))
        writer.flush()


def serve_tcp(host: str, port: int, emulator: Emulator) -> None:
    """Accept one client at a time on a local stream socket."""

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            log.info("session from %s", self.client_address)
            serve(self.rfile, self.wfile, emulator)

    socketserver.TCPServer.allow_reuse_address = True
    with socketserver.TCPServer((host, port), Handler) as server:
        log.info("listening on %s:%d", host, port)
        server.serve_forever()


TABLE_COMMANDS = ("INIT", "INSERTED", "MOVE 0 0 0 0", "MOVE 0 100000 0 0", "POS?", "STATE?", "RESET")
TABLE_COLUMNS = ("phase", "command", "response", "next_phase", "actions")


def representative_states(calib: InstrumentCalibration, config: EmulatorConfig) -> dict:
    """One controller state per phase (plus WAIT_INSTRUMENT without an instrument)."""
    boot = ControllerState(instrument=calib)
    waiting = home_all(boot, config)
    ready = run_centering(run_sweep(replace(waiting, phase=Phase.SWEEP), config), config)
    return {
        "BOOT": boot,
        "HOMING": replace(boot, phase=Phase.HOMING),
        "WAIT_INSTRUMENT": waiting,
        "WAIT_INSTRUMENT/no-instrument": replace(waiting, instrument=None),
        "SWEEP": replace(waiting, phase=Phase.SWEEP),
        "CENTERING": replace(waiting, phase=Phase.CENTERING),
        "READY": ready,
        "FAULT": replace(waiting, phase=Phase.FAULT),
    }


def transition_table(calib: InstrumentCalibration, config: EmulatorConfig) -> list:
    """Rows of (phase, command, immediate response, phase after the step, deferred actions)."""
    rows = []
    for label, state in representative_states(calib, config).items():
        for line in TABLE_COMMANDS:
            new, resp, actions = step_state_machine(state, parse_command(line + "\n"), config)
            rows.append((label, line, resp, new.phase.value, ";".join(a[0] for a in actions)))
    return rows
