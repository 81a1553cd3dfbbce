"""Disc-to-tip model of a four-disc, wire-driven wrist instrument.

Conventions: the shaft frame has its origin at the wrist (pitch) pivot, z
pointing distally, x the pitch axis. Roll turns the shaft about z, pitch turns
the distal link about x, and each jaw turns about the clevis y axis. Positive
angles follow the right-hand rule. All angles are degrees, lengths mm.

Yaw discs are coupled to the pitch disc: holding jaw i still while the pitch
disc turns by d requires the yaw disc to turn by kappa_i * d. The yaw maps are
therefore evaluated at the pitch-corrected disc angle ``theta_yi - kappa_i *
theta_x``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import Infeasible, OutOfRange
from .transforms import RigidTransform, rot_x, rot_y, rot_z

AXES = ("z", "x", "y1", "y2")
TIP_FIELDS = {"z": "roll", "x": "pitch", "y1": "yaw1", "y2": "yaw2"}
MARKER_LABELS = ("C1", "T1", "C2", "T2", "T3")


@dataclass(frozen=True)
class DiscState:
    theta_z: float = 0.0
    theta_x: float = 0.0
    theta_y1: float = 0.0
    theta_y2: float = 0.0

    def __post_init__(self):
        for v in self.as_tuple():
            if not np.isfinite(v):
                raise ValueError("disc angles must be finite")

    def as_tuple(self) -> tuple:
        return (self.theta_z, self.theta_x, self.theta_y1, self.theta_y2)

    def __getitem__(self, axis: str) -> float:
        return getattr(self, "theta_" + axis)


@dataclass(frozen=True)
class TipPose:
    roll: float = 0.0
    pitch: float = 0.0
    yaw1: float = 0.0
    yaw2: float = 0.0

    def as_tuple(self) -> tuple:
        return (self.roll, self.pitch, self.yaw1, self.yaw2)

    def __getitem__(self, axis: str) -> float:
        return getattr(self, TIP_FIELDS[axis])

    @property
    def jaw_opening(self) -> float:
        return self.yaw1 - self.yaw2


@dataclass(frozen=True)
class AxisMap:
    """Piecewise-linear, strictly increasing disc->tip map."""

    breakpoints: tuple

    def __post_init__(self):
        bp = tuple((float(d), float(t)) for d, t in self.breakpoints)
        if len(bp) < 3:
            raise ValueError("an axis map needs at least 3 breakpoints")
        d = np.array([p[0] for p in bp])
        t = np.array([p[1] for p in bp])
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(t))):
            raise ValueError("breakpoints must be finite")
        if np.any(np.diff(d) <= 0) or np.any(np.diff(t) <= 0):
            raise ValueError("breakpoints must be strictly increasing on both scales")
        object.__setattr__(self, "breakpoints", bp)

    @property
    def disc(self) -> np.ndarray:
        return np.array([p[0] for p in self.breakpoints])

    @property
    def tip(self) -> np.ndarray:
        return np.array([p[1] for p in self.breakpoints])

    @property
    def disc_range(self) -> tuple:
        return self.breakpoints[0][0], self.breakpoints[-1][0]

    @property
    def tip_range(self) -> tuple:
        return self.breakpoints[0][1], self.breakpoints[-1][1]

    @property
    def transmission(self) -> float:
        (d0, t0), (d1, t1) = self.breakpoints[0], self.breakpoints[-1]
        return (t1 - t0) / (d1 - d0)

    def forward(self, disc_deg: float, axis: str = "?", extrapolate: bool = False) -> float:
        return _interp(disc_deg, self.disc, self.tip, axis, extrapolate)

    def inverse(self, tip_deg: float, axis: str = "?", extrapolate: bool = False) -> float:
        return _interp(tip_deg, self.tip, self.disc, axis, extrapolate)

    def slope_at(self, disc_deg: float) -> float:
        d, t = self.disc, self.tip
        i = int(np.clip(np.searchsorted(d, disc_deg, side="right") - 1, 0, len(d) - 2))
        return (t[i + 1] - t[i]) / (d[i + 1] - d[i])


def _interp(x, xs, ys, axis, extrapolate):
    x = float(x)
    lo, hi = xs[0], xs[-1]
    if not extrapolate and not (lo <= x <= hi):
        raise OutOfRange(axis, x, lo, hi)
    hit = np.nonzero(xs == x)[0]
    if hit.size:
        return float(ys[hit[0]])
    i = int(np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2))
    return float(ys[i] + (x - xs[i]) * (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))


@dataclass(frozen=True)
class MarkerSet:
    """Rest positions of the tracking markers in the distal-link frame (mm).

    C1/T1 sit on the side face (offset along the pitch axis) and serve the
    side view; C2/T2/T3 sit on the top face (offset along the jaw axis) and
    serve the top view. T2 belongs to jaw 1, T3 to jaw 2.
    """

    C1: tuple
    T1: tuple
    C2: tuple
    T2: tuple
    T3: tuple

    @classmethod
    def default(cls, pivot_to_clevis: float, jaw_length: float, face_offset: float = 1.0) -> "MarkerSet":
        m, p, j = face_offset, pivot_to_clevis, jaw_length
        return cls(C1=(m, 0.0, 0.0), T1=(m, 0.0, p), C2=(0.0, m, p), T2=(0.0, m, p + j), T3=(0.0, m, p + j))

    def as_dict(self) -> dict:
        return {k: np.array(getattr(self, k), dtype=float) for k in MARKER_LABELS}


@dataclass(frozen=True)
class InstrumentGeometry:
    """Defaults are configuration values, not measured on a real instrument."""

    total_length: float = 430.0
    jaw_length: float = 10.0
    pivot_to_clevis: float = 9.0
    shaft_radius: float = 4.0
    jaw_radius: float = 0.5
    markers: MarkerSet = None

    def __post_init__(self):
        for name in ("total_length", "jaw_length", "pivot_to_clevis", "shaft_radius"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.markers is None:
            object.__setattr__(self, "markers", MarkerSet.default(self.pivot_to_clevis, self.jaw_length))
        elif isinstance(self.markers, dict):
            object.__setattr__(self, "markers", MarkerSet(**{k: tuple(v) for k, v in self.markers.items()}))
        m = self.markers.as_dict()
        for jaw in ("T2", "T3"):
            if abs(np.linalg.norm(m[jaw] - m["C2"]) - self.jaw_length) > 1e-9:
                raise ValueError(f"|C2-{jaw}| must equal jaw_length")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["markers"] = {k: list(getattr(self.markers, k)) for k in MARKER_LABELS}
        return d


@dataclass(frozen=True)
class InstrumentCalibration:
    map_z: AxisMap
    map_x: AxisMap
    map_y1: AxisMap
    map_y2: AxisMap
    kappa_y1: float = 0.66
    kappa_y2: float = 0.64
    jaw_open_max: float = 60.0
    instrument_id: str = "instrument"
    geometry: InstrumentGeometry = field(default_factory=InstrumentGeometry)
    # raw disc reading of each axis' center station; maps are center-normalized
    disc_center: dict = field(default_factory=lambda: {a: 0.0 for a in AXES})

    def __post_init__(self):
        for k in (self.kappa_y1, self.kappa_y2):
            if not (np.isfinite(k) and 0 <= k < 3):
                raise ValueError("coupling coefficients must lie in [0, 3)")
        for a in AXES:
            if not self.axis_map(a).transmission > 0:
                raise ValueError(f"transmission of {a} must be positive")

    def axis_map(self, axis: str) -> AxisMap:
        return getattr(self, "map_" + axis)

    def kappa(self, axis: str) -> float:
        return {"y1": self.kappa_y1, "y2": self.kappa_y2}.get(axis, 0.0)

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "instrument_id": self.instrument_id,
            "axes": {a: [list(p) for p in self.axis_map(a).breakpoints] for a in AXES},
            "disc_center": {a: float(self.disc_center.get(a, 0.0)) for a in AXES},
            "coupling": {"kappa_y1": self.kappa_y1, "kappa_y2": self.kappa_y2},
            "jaw_open_max": self.jaw_open_max,
            "geometry": self.geometry.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InstrumentCalibration":
        g = dict(d.get("geometry", {}))
        return cls(
            map_z=AxisMap(d["axes"]["z"]),
            map_x=AxisMap(d["axes"]["x"]),
            map_y1=AxisMap(d["axes"]["y1"]),
            map_y2=AxisMap(d["axes"]["y2"]),
            kappa_y1=float(d["coupling"]["kappa_y1"]),
            kappa_y2=float(d["coupling"]["kappa_y2"]),
            jaw_open_max=float(d.get("jaw_open_max", 60.0)),
            instrument_id=d.get("instrument_id", "instrument"),
            geometry=InstrumentGeometry(**g),
            disc_center={a: float(v) for a, v in d.get("disc_center", {}).items()} or {a: 0.0 for a in AXES},
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "InstrumentCalibration":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def with_geometry(self, geometry: InstrumentGeometry) -> "InstrumentCalibration":
        return replace(self, geometry=geometry)


def corrected_yaw_disc(calib: InstrumentCalibration, disc: DiscState, axis: str) -> float:
    return disc[axis] - calib.kappa(axis) * disc.theta_x


def decouple(calib: InstrumentCalibration, disc: DiscState) -> dict:
    """Disc state in map coordinates: {axis: angle fed to that axis' map}."""
    return {
        "z": disc.theta_z,
        "x": disc.theta_x,
        "y1": corrected_yaw_disc(calib, disc, "y1"),
        "y2": corrected_yaw_disc(calib, disc, "y2"),
    }


def recouple(calib: InstrumentCalibration, coords: dict) -> DiscState:
    """Inverse of :func:`decouple`."""
    x = coords["x"]
    return DiscState(
        theta_z=coords["z"],
        theta_x=x,
        theta_y1=coords["y1"] + calib.kappa_y1 * x,
        theta_y2=coords["y2"] + calib.kappa_y2 * x,
    )


def forward_map(calib: InstrumentCalibration, disc: DiscState, saturate: bool = False, tol: float = 0.0) -> TipPose:
    """Tip pose for a disc state.

    Out-of-domain inputs raise :class:`OutOfRange`, except that values within
    ``tol`` of a domain end are taken as that end (motor targets are only
    resolved to a microstep). ``saturate=True`` models the mechanical end
    stops instead (the tip stays at its limit); it is meant for simulating the
    physical instrument, not for validating commands.
    """
    coords = decouple(calib, disc)
    out = {}
    for a in AXES:
        m = calib.axis_map(a)
        c = coords[a]
        lo, hi = m.disc_range
        if saturate or lo - tol <= c <= hi + tol:
            c = min(max(c, lo), hi)
        out[TIP_FIELDS[a]] = m.forward(c, a)
    return TipPose(**out)


def feasibility_check(calib: InstrumentCalibration, tip: TipPose) -> list:
    """Violated constraints for a tip pose; an empty list means feasible."""
    violations = []
    for a in AXES:
        v = tip[a]
        lo, hi = calib.axis_map(a).tip_range
        if not np.isfinite(v):
            violations.append(f"{TIP_FIELDS[a]} not finite")
        elif not lo <= v <= hi:
            violations.append(f"{TIP_FIELDS[a]} out of range: {v:.6g} not in [{lo:.6g}, {hi:.6g}]")
    opening = tip.jaw_opening
    if opening < 0:
        violations.append(f"jaw opening < 0: {opening:.6g}")
    elif opening > calib.jaw_open_max:
        violations.append(f"jaw opening > {calib.jaw_open_max:.6g}: {opening:.6g}")
    return violations


def inverse_map(calib: InstrumentCalibration, tip: TipPose) -> DiscState:
    violations = feasibility_check(calib, tip)
    if violations:
        raise Infeasible(violations)
    coords = {a: calib.axis_map(a).inverse(tip[a], a) for a in AXES}
    return recouple(calib, coords)


def forward_map_batch(calib: InstrumentCalibration, discs, tol: float = 0.0) -> np.ndarray:
    """Vectorized :func:`forward_map`: rows of (z, x, y1, y2) disc angles -> rows of
    (roll, pitch, yaw1, yaw2). Raises OutOfRange on the first offending axis."""
    d = np.atleast_2d(np.asarray(discs, dtype=float))
    coords = d.copy()
    coords[:, 2] -= calib.kappa_y1 * d[:, 1]
    coords[:, 3] -= calib.kappa_y2 * d[:, 1]
    out = np.empty_like(coords)
    for k, a in enumerate(AXES):
        m = calib.axis_map(a)
        lo, hi = m.disc_range
        c = coords[:, k]
        bad = (c < lo - tol) | (c > hi + tol) | ~np.isfinite(c)
        if bad.any():
            raise OutOfRange(a, float(c[bad][0]), lo, hi)
        out[:, k] = np.interp(np.clip(c, lo, hi), m.disc, m.tip)
    return out


def inverse_map_batch(calib: InstrumentCalibration, tips) -> np.ndarray:
    """Vectorized :func:`inverse_map`; raises Infeasible if any row violates a constraint."""
    t = np.atleast_2d(np.asarray(tips, dtype=float))
    ok = np.all(np.isfinite(t), axis=1)
    for k, a in enumerate(AXES):
        lo, hi = calib.axis_map(a).tip_range
        ok &= (t[:, k] >= lo) & (t[:, k] <= hi)
    opening = t[:, 2] - t[:, 3]
    ok &= (opening >= 0) & (opening <= calib.jaw_open_max)
    if not ok.all():
        i = int(np.argmin(ok))
        raise Infeasible(feasibility_check(calib, TipPose(*t[i])) or [f"row {i} infeasible"])
    coords = np.column_stack([np.interp(t[:, k], calib.axis_map(a).tip, calib.axis_map(a).disc)
                              for k, a in enumerate(AXES)])
    coords[:, 2] += calib.kappa_y1 * coords[:, 1]
    coords[:, 3] += calib.kappa_y2 * coords[:, 1]
    return coords


def tip_frame(tip: TipPose) -> np.ndarray:
    """Distal-link orientation in the shaft frame (roll, then pitch)."""
    return rot_z(tip.roll) @ rot_x(tip.pitch)


def marker_world_positions(geometry: InstrumentGeometry, tip: TipPose, shaft_pose: RigidTransform = None) -> dict:
    """World positions (mm) of C1, T1, C2, T2, T3.

    ``shaft_pose`` maps shaft-frame coordinates to world coordinates.
    """
    shaft_pose = shaft_pose or RigidTransform.identity()
    rest = geometry.markers.as_dict()
    R = tip_frame(tip)
    c2 = rest["C2"]
    local = {
        "C1": rest["C1"],
        "T1": rest["T1"],
        "C2": c2,
        "T2": c2 + rot_y(tip.yaw1) @ (rest["T2"] - c2),
        "T3": c2 + rot_y(tip.yaw2) @ (rest["T3"] - c2),
    }
    return {k: shaft_pose.apply(R @ v) for k, v in local.items()}


def marker_world_normals(geometry: InstrumentGeometry, tip: TipPose, shaft_pose: RigidTransform = None) -> dict:
    """Outward normals of the faces carrying each marker, in world coordinates.

    C1/T1 sit on the side face (+x), the rest on the top face (+y); jaw yaw is
    a rotation about y, so it leaves the top-face normal unchanged.
    """
    shaft_pose = shaft_pose or RigidTransform.identity()
    R = shaft_pose.R @ tip_frame(tip)
    side, top = R @ np.array([1.0, 0.0, 0.0]), R @ np.array([0.0, 1.0, 0.0])
    return {"C1": side, "T1": side, "C2": top, "T2": top, "T3": top}


def link_segments(geometry: InstrumentGeometry, tip: TipPose, shaft_pose: RigidTransform = None) -> dict:
    """Axis segments of the bodies that can hide markers: shaft and both jaws."""
    shaft_pose = shaft_pose or RigidTransform.identity()
    R = tip_frame(tip)
    clevis = np.array([0.0, 0.0, geometry.pivot_to_clevis])
    jaw = np.array([0.0, 0.0, geometry.jaw_length])
    # the shaft capsule stops short of the pivot so its cap clears the wrist markers
    shaft_end = -(geometry.shaft_radius + 0.5)
    segs = {
        "shaft": (np.array([0.0, 0.0, -geometry.total_length]), np.array([0.0, 0.0, shaft_end]), geometry.shaft_radius),
        "jaw1": (clevis, clevis + rot_y(tip.yaw1) @ jaw, geometry.jaw_radius),
        "jaw2": (clevis, clevis + rot_y(tip.yaw2) @ jaw, geometry.jaw_radius),
    }
    out = {}
    for name, (p0, p1, r) in segs.items():
        if name == "shaft":
            q0, q1 = rot_z(tip.roll) @ p0, rot_z(tip.roll) @ p1
        else:
            q0, q1 = R @ p0, R @ p1
        out[name] = (shaft_pose.apply(q0), shaft_pose.apply(q1), r)
    return out
