"""Repeatability / hysteresis experiment against the controller twin.

Pitch is measured from the side view at five quarter-range poses; the jaws
are measured from the top view at 25 jaw poses for each pitch pose. Every
pose is reached twice: clockwise (from below) and counter-clockwise (from
above), each time via an overshoot point, so a play element in the drive
shows up as a direction-dependent offset.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .controller import EmulatorConfig, commanded_disc_state, domain_tolerance, quantize_disc_coords
from .errors import MarkersNotVisible, MissingDirection, ProtocolError
from .kinematics import AXES, InstrumentCalibration, TipPose, decouple, forward_map, inverse_map
from .stereo import (StereoRig, measure_tip_angles, observe, scene_markers, scene_normals, scene_occluders,
                     view_shaft_pose)

log = logging.getLogger(__name__)

QUARTERS = (0.0, 0.25, 0.5, 0.75, 1.0)
DEFAULT_OVERSHOOT_DEG = 25.0
RECORD_COLUMNS = ("pose_id", "axis", "target_deg", "direction", "repeat", "measured_deg", "excluded", "reason")


@dataclass(frozen=True)
class ScheduleEntry:
    pose_id: str
    target: TipPose
    direction: str  # "CW" | "CCW"
    view: str  # "side" | "top"

    @property
    def axes(self) -> tuple:
        return ("x",) if self.view == "side" else ("y1", "y2")


@dataclass(frozen=True)
class PoseSchedule:
    entries: tuple
    n_repeats: int = 1

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def measurements_per_repeat(self) -> int:
        return sum(len(e.axes) for e in self.entries)


def _quarter_points(lo: float, hi: float) -> list:
    return [lo + q * (hi - lo) for q in QUARTERS]


def build_schedule(calib: InstrumentCalibration, n_repeats: int = 3, include_yaw: bool = True) -> PoseSchedule:
    """Quarter-step pose grid, each pose visited CW then CCW.

    Jaw poses: jaw 2 stays at one of five quarter positions while jaw 1 opens
    from closed to fully open in quarter steps, so every pose respects the
    jaw-opening limit.
    """
    entries = []
    pitches = _quarter_points(*calib.map_x.tip_range)
    for i, p in enumerate(pitches):
        for d in ("CW", "CCW"):
            entries.append(ScheduleEntry(f"P{i}", TipPose(0.0, p, 0.0, 0.0), d, "side"))
    if include_yaw:
        lo1, hi1 = calib.map_y1.tip_range
        lo2, hi2 = calib.map_y2.tip_range
        fixed = _quarter_points(max(lo1, lo2), min(hi2, hi1 - calib.jaw_open_max))
        openings = [q * calib.jaw_open_max for q in QUARTERS]
        for i, p in enumerate(pitches):
            for k, y2 in enumerate(fixed):
                for j, o in enumerate(openings):
                    for d in ("CW", "CCW"):
                        entries.append(ScheduleEntry(f"Y{i}{k}{j}", TipPose(0.0, p, y2 + o, y2), d, "top"))
    return PoseSchedule(tuple(entries), n_repeats)


@dataclass
class EvalRecord:
    pose_id: str
    direction: str
    repeat: int
    view: str
    target: dict
    expected: dict
    measured: dict = field(default_factory=dict)
    excluded: bool = False
    reason: str = ""
    approach_limited: bool = False  # range limit cut the overshoot short


class ExperimentAborted(Exception):
    def __init__(self, message: str, records: list):
        self.records = records
        super().__init__(message)


class _Driver:
    """Client-side motion logic: approach targets from a given side."""

    def __init__(self, client, calib: InstrumentCalibration, config: EmulatorConfig, overshoot: float):
        self.client = client
        self.calib = calib
        self.config = config
        self.overshoot = overshoot
        self.current = None

    def approach(self, coords: dict, direction: str, axes) -> tuple:
        """Move to ``coords`` via an overshoot below (CW) or above (CCW) on
        ``axes``; returns (microstep target, whether the overshoot was cut)."""
        s = -1.0 if direction == "CW" else 1.0
        over = dict(coords)
        limited = False
        for a in axes:
            lo, hi = self.calib.axis_map(a).disc_range
            over[a] = min(max(coords[a] + s * self.overshoot, lo), hi)
            limited |= abs(over[a] - coords[a]) < self.overshoot - 1e-9
        target = quantize_disc_coords(self.calib, self.config, coords)
        self.client.move(quantize_disc_coords(self.calib, self.config, over))
        self.client.move(target)
        self.current = coords
        return target, limited


def run_experiment(client, world, rig: StereoRig, schedule: PoseSchedule, calib: InstrumentCalibration,
                   config: EmulatorConfig, seed: int = 0, occlusion: bool = True,
                   overshoot_deg: float = DEFAULT_OVERSHOOT_DEG) -> list:
    """Drive every schedule entry, synthesize the image pair, measure angles.

    ``client`` talks to the controller (which must be READY); ``world``
    exposes the physical tip pose (``world.tip_pose()``) that the cameras see.
    """
    rng = np.random.default_rng(seed)
    driver = _Driver(client, calib, config, overshoot_deg)
    geometry = calib.geometry
    poses = {v: view_shaft_pose(v, rig, geometry) for v in ("side", "top")}
    records = []
    for rep in range(schedule.n_repeats):
        for e in schedule.entries:
            coords = decouple(calib, inverse_map(calib, e.target))
            try:
                if e.view == "side":
                    q, limited = driver.approach(coords, e.direction, ("x",))
                else:
                    if driver.current is None or driver.current["x"] != coords["x"]:
                        driver.approach(coords, "CW", ("x",))
                    q, limited = driver.approach(coords, e.direction, ("y1", "y2"))
            except ProtocolError as exc:
                raise ExperimentAborted(f"{e.pose_id}/{e.direction}/rep {rep}: {exc}", records) from exc
            expected_pose = forward_map(calib, commanded_disc_state(config, q), tol=domain_tolerance(config))
            rec = EvalRecord(
                e.pose_id, e.direction, rep, e.view,
                target={a: e.target[a] for a in e.axes},
                expected={a: expected_pose[a] for a in e.axes},
                approach_limited=limited,
            )
            tip = world.tip_pose()
            markers = scene_markers(geometry, tip, poses[e.view])
            occluders = scene_occluders(geometry, tip, poses[e.view]) if occlusion else []
            normals = scene_normals(geometry, tip, poses[e.view]) if occlusion else None
            obs = observe(rig, markers, occluders, rng, normals=normals)
            try:
                m = measure_tip_angles(rig, obs, geometry, e.view, poses[e.view], pitch_hint_deg=e.target.pitch)
            except MarkersNotVisible as exc:
                rec.excluded = True
                rec.reason = str(exc)
            else:
                rec.measured = {"x": m} if e.view == "side" else {"y1": m[0], "y2": m[1]}
            records.append(rec)
    n_ex = sum(r.excluded for r in records)
    if n_ex:
        by_view = defaultdict(int)
        for r in records:
            by_view[r.view] += r.excluded
        log.info("excluded %d of %d records (%s)", n_ex, len(records), dict(by_view))
    return records


# -- statistics ------------------------------------------------------------

@dataclass
class PoseStats:
    axis: str
    pose_id: str
    direction: str
    target: float
    expected: float
    n: int
    mean: float
    std: float
    limited: bool  # target on a range limit, or the overshoot was cut short


@dataclass
class AxisSummary:
    direction_rmse: float
    model_rmse: float
    max_std: float
    n_pose_pairs: int


@dataclass
class EvalStats:
    groups: list
    axes: dict
    pitch: AxisSummary
    yaw: AxisSummary
    n_records: int
    n_excluded: int
    excluded_by_view: dict
    empty_poses: list

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "n_excluded": self.n_excluded,
            "excluded_by_view": self.excluded_by_view,
            "empty_poses": self.empty_poses,
            "pitch": asdict(self.pitch),
            "yaw": asdict(self.yaw),
            "axes": {a: asdict(s) for a, s in self.axes.items()},
            "groups": [asdict(g) for g in self.groups],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalStats":
        return cls(
            groups=[PoseStats(**g) for g in d["groups"]],
            axes={a: AxisSummary(**s) for a, s in d["axes"].items()},
            pitch=AxisSummary(**d["pitch"]),
            yaw=AxisSummary(**d["yaw"]),
            n_records=d["n_records"],
            n_excluded=d["n_excluded"],
            excluded_by_view=d["excluded_by_view"],
            empty_poses=d["empty_poses"],
        )

    def group(self, axis: str, pose_id: str, direction: str):
        for g in self.groups:
            if (g.axis, g.pose_id, g.direction) == (axis, pose_id, direction):
                return g
        return None


def _rmse(values) -> float:
    v = np.asarray(list(values), dtype=float)
    return float(np.sqrt(np.mean(v**2))) if v.size else math.nan


def _summary(groups) -> AxisSummary:
    by_pose = defaultdict(dict)
    for g in groups:
        by_pose[(g.axis, g.pose_id)][g.direction] = g
    diffs = [d["CCW"].mean - d["CW"].mean for d in by_pose.values() if "CW" in d and "CCW" in d]
    return AxisSummary(
        direction_rmse=_rmse(diffs),
        model_rmse=_rmse(g.mean - g.expected for g in groups),
        max_std=max((g.std for g in groups), default=math.nan),
        n_pose_pairs=len(diffs),
    )


def compute_statistics(records, calib: InstrumentCalibration = None) -> EvalStats:
    """Per pose-direction mean/std over repeats, CW-referenced direction RMSE,
    and RMSE of the means vs. the linear model."""
    records = list(records)
    values = defaultdict(list)
    meta = {}
    seen = set()
    limited = set()
    for r in records:
        for a in r.target:
            key = (a, r.pose_id, r.direction)
            seen.add(key)
            meta[key] = (r.target[a], r.expected[a])
            if r.approach_limited:
                limited.add(key)
            if not r.excluded:
                values[key].append(r.measured[a])
    groups, empty = [], []
    for key in sorted(seen, key=lambda k: (AXES.index(k[0]), k[1], k[2])):
        a, pid, d = key
        v = values.get(key, [])
        if not v:
            empty.append(f"{a}/{pid}/{d}")
            continue
        target, expected = meta[key]
        sat = key in limited
        if calib is not None and not sat:
            lo, hi = calib.axis_map(a).tip_range
            sat = abs(target - lo) < 1e-9 or abs(target - hi) < 1e-9
        groups.append(PoseStats(a, pid, d, target, expected, len(v), float(np.mean(v)),
                                float(np.std(v, ddof=1)) if len(v) > 1 else 0.0, sat))
    by_view = defaultdict(int)
    for r in records:
        by_view[r.view] += int(r.excluded)
    axes = {a: _summary([g for g in groups if g.axis == a]) for a in AXES if any(g.axis == a for g in groups)}
    return EvalStats(
        groups=groups,
        axes=axes,
        pitch=_summary([g for g in groups if g.axis == "x"]),
        yaw=_summary([g for g in groups if g.axis in ("y1", "y2")]),
        n_records=len(records),
        n_excluded=sum(r.excluded for r in records),
        excluded_by_view=dict(by_view),
        empty_poses=empty,
    )


@dataclass
class BacklashEstimate:
    axis: str
    disc_deg: float  # play width at the disc
    tip_offset_deg: float  # mean(mean_CW - mean_CCW)
    n_poses: int


def fit_backlash(stats: EvalStats, calib: InstrumentCalibration) -> dict:
    """Disc-level play per axis from the CW/CCW offsets of unsaturated poses.

    Poses whose target sits on or near a range limit are skipped: the
    overshoot cannot reach far enough past the target to take up the play.
    Tip offsets are mapped back through the axis map, which equals dividing
    by the transmission ratio on a single linear segment.
    """
    pairs = defaultdict(dict)
    for g in stats.groups:
        pairs[(g.axis, g.pose_id)][g.direction] = g
    out = {}
    for a in AXES:
        m = calib.axis_map(a)
        tip_off, disc_off = [], []
        for (axis, _), d in pairs.items():
            if axis != a or "CW" not in d or "CCW" not in d or d["CW"].limited or d["CCW"].limited:
                continue
            cw, ccw = d["CW"].mean, d["CCW"].mean
            tip_off.append(cw - ccw)
            disc_off.append(m.inverse(ccw, a, extrapolate=True) - m.inverse(cw, a, extrapolate=True))
        if disc_off:
            out[a] = BacklashEstimate(a, float(np.mean(disc_off)), float(np.mean(tip_off)), len(disc_off))
    if not out:
        raise MissingDirection("no unsaturated pose was measured in both directions")
    return out


# -- export ----------------------------------------------------------------

def record_rows(records) -> list:
    rows = []
    for r in records:
        for a, t in r.target.items():
            meas = "" if r.excluded else repr(float(r.measured[a]))
            rows.append([r.pose_id, a, repr(float(t)), r.direction, r.repeat, meas, int(r.excluded), r.reason])
    return rows


def plot_rows(stats: EvalStats, axis: str) -> list:
    """Fig-3 style series: per pose, target, linear expectation, CW/CCW mean and std."""
    by_pose = defaultdict(dict)
    for g in stats.groups:
        if g.axis == axis:
            by_pose[g.pose_id][g.direction] = g
    rows = []
    for pid, d in sorted(by_pose.items(), key=lambda kv: (next(iter(kv[1].values())).target, kv[0])):
        any_g = next(iter(d.values()))
        cw, ccw = d.get("CW"), d.get("CCW")
        rows.append([
            pid, any_g.target, any_g.expected,
            cw.mean if cw else math.nan, cw.std if cw else math.nan,
            ccw.mean if ccw else math.nan, ccw.std if ccw else math.nan,
        ])
    return rows


PLOT_COLUMNS = ("pose_id", "target_deg", "expected_deg", "cw_mean_deg", "cw_std_deg", "ccw_mean_deg", "ccw_std_deg")


def export_results(records, stats: EvalStats, out_dir, figures: bool = True) -> list:
    """Write records.csv, stats.json, plot_<axis>.csv and (optionally) PNG figures."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        p = out / "records.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(RECORD_COLUMNS)
            w.writerows(record_rows(records))
        written.append(p)
        p = out / "stats.json"
        p.write_text(json.dumps(stats.to_dict(), indent=2) + "\n")
        written.append(p)
        for a in ("x", "y1", "y2"):
            p = out / f"plot_{a}.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(PLOT_COLUMNS)
                w.writerows(plot_rows(stats, a))
            written.append(p)
        if figures:
            from .plotting import render_evaluation_figures

            written.extend(render_evaluation_figures(stats, out))
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    return written


def read_stats(path) -> EvalStats:
    return EvalStats.from_dict(json.loads(Path(path).read_text()))


def start_session(config: EmulatorConfig, calib: InstrumentCalibration):
    """In-process emulator brought to READY, plus a client bound to it."""
    from .client import LoopbackTransport, ProtocolClient
    from .controller import Emulator

    emulator = Emulator(config, calib)
    client = ProtocolClient(LoopbackTransport(emulator))
    client.start()
    return emulator, client


def simulate(calib: InstrumentCalibration, rig: StereoRig, config: EmulatorConfig, n_repeats: int = 3,
             seed: int = 0, occlusion: bool = True, include_yaw: bool = True,
             overshoot_deg: float = DEFAULT_OVERSHOOT_DEG):
    """Full experiment against a fresh in-process emulator; returns (records, stats)."""
    emulator, client = start_session(config, calib)
    schedule = build_schedule(calib, n_repeats, include_yaw=include_yaw)
    records = run_experiment(client, emulator, rig, schedule, calib, config, seed=seed,
                             occlusion=occlusion, overshoot_deg=overshoot_deg)
    return records, compute_statistics(records, calib)
