"""Piecewise-linear instrument calibration from disc/tip maxima measurements.

Each axis is measured at three stations (CCW maximum, center, CW maximum) on
the disc side and on the tip side. Stations are averaged over repeats, the
center is moved to the origin, and the three pairs become the breakpoints of
an :class:`~endowrist_bench.kinematics.AxisMap`.

Coupling is fitted from yaw-disc stations recorded at several pitch-disc
angles while the tip yaw is held: the pooled within-group slope of yaw-disc
vs. pitch-disc is kappa, and the reverse regression gives its reciprocal form.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InsufficientConfigurations, MissingAxis, NonMonotone
from .kinematics import AXES, AxisMap, InstrumentCalibration, InstrumentGeometry, forward_map

STATIONS = ("ccw_max", "center", "cw_max")
JAW_CONFIGS = ("open", "closed_left", "closed_mid", "closed_right", "n/a")
CSV_COLUMNS = ("axis", "jaw_config", "station", "disc_deg", "tip_deg", "repeat", "pitch_disc_deg")
# the jaw configuration whose stations define the yaw maps
REFERENCE_JAW_CONFIG = "closed_mid"
# published ratios of the large needle driver, printed next to the fitted ones
PUBLISHED_TRANSMISSION = {"z": 1.1, "x": 0.94, "y1": 1.3, "y2": 1.3}
PUBLISHED_COUPLING = {"y1": (0.66, 1.52), "y2": (0.64, 1.57)}


@dataclass(frozen=True)
class StationRecord:
    """One CSV row: a single reading of one station."""

    axis: str
    jaw_config: str
    station: str
    disc_deg: float
    tip_deg: float = math.nan
    repeat: int = 0
    pitch_disc_deg: float = 0.0


@dataclass(frozen=True)
class MaximaRecord:
    """Repeat-averaged stations of one axis in one jaw configuration."""

    axis: str
    jaw_config: str
    disc: tuple  # (ccw_max, center, cw_max)
    tip: tuple
    pitch_disc_deg: float = 0.0
    n_repeats: int = 1

    def __post_init__(self):
        for scale, values in (("disc", self.disc), ("tip", self.tip)):
            v = np.asarray(values, dtype=float)
            if np.all(np.isfinite(v)) and not (v[0] < v[1] < v[2]):
                raise NonMonotone(self.axis, f"({self.jaw_config}, {scale}: {tuple(v)})")


# -- CSV I/O ---------------------------------------------------------------

def read_records(path_or_text) -> list:
    if hasattr(path_or_text, "read_text"):
        text = path_or_text.read_text()
    elif "\n" in str(path_or_text):
        text = str(path_or_text)
    else:
        with open(path_or_text, newline="") as fh:
            text = fh.read()
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        tip = row.get("tip_deg", "")
        rows.append(
            StationRecord(
                axis=row["axis"].strip().lower(),
                jaw_config=row["jaw_config"].strip(),
                station=row["station"].strip(),
                disc_deg=float(row["disc_deg"]),
                tip_deg=float(tip) if tip not in ("", None) else math.nan,
                repeat=int(row.get("repeat") or 0),
                pitch_disc_deg=float(row.get("pitch_disc_deg") or 0.0),
            )
        )
    return rows


def format_records(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        tip = "" if math.isnan(r.tip_deg) else _num(r.tip_deg)
        w.writerow([r.axis, r.jaw_config, r.station, _num(r.disc_deg), tip, r.repeat, _num(r.pitch_disc_deg)])
    return buf.getvalue()


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def aggregate(records) -> list:
    """Average repeats into MaximaRecords, one per (axis, jaw_config, pitch station)."""
    groups = defaultdict(lambda: defaultdict(list))
    for r in records:
        groups[(r.axis, r.jaw_config, r.pitch_disc_deg)][r.station].append(r)
    out = []
    for (axis, cfg, pitch), st in groups.items():
        if set(st) != set(STATIONS):
            continue
        disc = tuple(float(np.mean([r.disc_deg for r in st[s]])) for s in STATIONS)
        tip = tuple(float(np.mean([r.tip_deg for r in st[s]])) for s in STATIONS)
        n = min(len(st[s]) for s in STATIONS)
        out.append(MaximaRecord(axis, cfg, disc, tip, pitch, n))
    return out


# -- fits ------------------------------------------------------------------

def build_axis_map(record: MaximaRecord, kappa: float = 0.0) -> AxisMap:
    """Center-normalized map; yaw stations are pitch-corrected by ``kappa``."""
    if not np.all(np.isfinite(record.tip)):
        raise ValueError(f"{record.axis}/{record.jaw_config}: tip stations missing")
    disc = np.asarray(record.disc) - kappa * record.pitch_disc_deg
    disc = disc - disc[1]
    tip = np.asarray(record.tip) - record.tip[1]
    if not (disc[0] < 0 < disc[2] and tip[0] < 0 < tip[2]):
        raise NonMonotone(record.axis)
    return AxisMap(tuple(zip(disc.tolist(), tip.tolist())))


def fit_transmission(axis_map: AxisMap) -> float:
    return axis_map.transmission


@dataclass
class CouplingFit:
    kappa: float
    kappa_reciprocal: float  # reverse-regression form, None when undefined
    residual_rmse: float
    n_groups: int
    n_points: int

    @property
    def reciprocity_error(self) -> float:
        if self.kappa_reciprocal is None:
            return math.nan
        return abs(self.kappa * self.kappa_reciprocal - 1.0)


def fit_coupling(records, axis: str) -> CouplingFit:
    """Coupling of yaw axis ``axis`` from station readings at several pitch-disc angles.

    Readings sharing (jaw_config, station) have the same tip yaw; within each
    such group the yaw-disc reading is regressed on the pitch-disc angle.
    """
    groups = defaultdict(list)
    for r in records:
        if r.axis == axis:
            groups[(r.jaw_config, r.station)].append((r.pitch_disc_deg, r.disc_deg))
    dp, dy = [], []
    used = 0
    for pts in groups.values():
        p = np.array([q[0] for q in pts])
        y = np.array([q[1] for q in pts])
        if np.ptp(p) == 0:
            continue
        used += 1
        dp.append(p - p.mean())
        dy.append(y - y.mean())
    if not used:
        raise InsufficientConfigurations(f"{axis}: no station recorded at two or more pitch-disc angles")
    dp, dy = np.concatenate(dp), np.concatenate(dy)
    sxy, sxx, syy = float(dp @ dy), float(dp @ dp), float(dy @ dy)
    kappa = sxy / sxx
    recip = sxy / syy if syy > 0 and sxy != 0 else None
    resid = dy - kappa * dp
    return CouplingFit(kappa, recip, float(np.sqrt(np.mean(resid**2))), used, int(dp.size))


@dataclass
class AxisReport:
    transmission: float
    published_transmission: float
    residual_rmse_deg: float
    anchor_count: int
    slopes: tuple


@dataclass
class CalibrationReport:
    instrument_id: str
    axes: dict
    coupling: dict  # axis -> dict(kappa, kappa_reciprocal, source, ...)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "instrument_id": self.instrument_id,
            "axes": {a: asdict(r) for a, r in self.axes.items()},
            "coupling": self.coupling,
            "notes": self.notes,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def text(self) -> str:
        lines = [f"Calibration report: {self.instrument_id}", ""]
        lines.append(f"{'axis':<5}{'ratio':>8}{'(exact)':>10}{'published':>11}{'resid RMSE':>12}{'anchors':>9}")
        for a, r in self.axes.items():
            lines.append(
                f"{a:<5}{r.transmission:>8.2f}{r.transmission:>10.4f}{r.published_transmission:>11.2f}"
                f"{r.residual_rmse_deg:>12.3f}{r.anchor_count:>9d}"
            )
        lines.append("")
        lines.append(f"{'axis':<5}{'kappa':>8}{'1/kappa':>9}{'product':>9}  source")
        for a, c in self.coupling.items():
            rec = c.get("kappa_reciprocal")
            rec_s = f"{rec:>9.2f}" if rec is not None else f"{'-':>9}"
            prod = f"{c['kappa'] * rec:>9.4f}" if rec is not None else f"{'-':>9}"
            lines.append(f"{a:<5}{c['kappa']:>8.2f}{rec_s}{prod}  {c['source']}")
        if self.notes:
            lines.append("")
            lines.extend("note: " + n for n in self.notes)
        return "\n".join(lines) + "\n"


def _linear_residual(m: AxisMap) -> float:
    # deviation of the stations from a single straight line through the center
    ratio = m.transmission
    return float(np.sqrt(np.mean((m.tip - ratio * m.disc) ** 2)))


def build_instrument_calibration(
    records,
    geometry: InstrumentGeometry = None,
    instrument_id: str = "instrument",
    jaw_open_max: float = 60.0,
    default_kappa: dict = None,
):
    """Assemble an InstrumentCalibration and its report from station readings.

    Coupling is fitted where readings at several pitch-disc angles exist;
    otherwise ``default_kappa`` (the published values unless overridden) is used
    and the report says so.
    """
    geometry = geometry or InstrumentGeometry()
    default_kappa = {**{a: v[0] for a, v in PUBLISHED_COUPLING.items()}, **(default_kappa or {})}
    records = list(records)
    maxima = aggregate(records)
    present = {m.axis for m in maxima}
    missing = [a for a in AXES if a not in present]
    if missing:
        raise MissingAxis(missing)

    coupling, notes = {}, []
    for a in ("y1", "y2"):
        try:
            fit = fit_coupling([r for r in records if not math.isnan(r.tip_deg)], a)
            coupling[a] = {
                "kappa": fit.kappa,
                "kappa_reciprocal": fit.kappa_reciprocal,
                "reciprocity_error": fit.reciprocity_error,
                "residual_rmse_deg": fit.residual_rmse,
                "source": f"fitted ({fit.n_groups} groups, {fit.n_points} readings)",
            }
        except InsufficientConfigurations:
            k = default_kappa[a]
            kr = PUBLISHED_COUPLING[a][1] if k == PUBLISHED_COUPLING[a][0] else None
            coupling[a] = {
                "kappa": k,
                "kappa_reciprocal": kr,
                "reciprocity_error": abs(k * kr - 1) if kr else None,
                "residual_rmse_deg": None,
                "source": "default (no readings at varied pitch)",
            }

    maps, reports, centers = {}, {}, {}
    for a in AXES:
        cands = [m for m in maxima if m.axis == a and np.all(np.isfinite(m.tip))]
        if a in ("y1", "y2"):
            pref = [m for m in cands if m.jaw_config == REFERENCE_JAW_CONFIG]
            cands = pref or cands
        if not cands:
            raise MissingAxis([a])
        # the record taken at the neutral pitch station anchors the map
        rec = min(cands, key=lambda m: abs(m.pitch_disc_deg))
        kappa = coupling[a]["kappa"] if a in coupling else 0.0
        m = build_axis_map(rec, kappa)
        maps[a] = m
        centers[a] = float(rec.disc[1])
        slopes = tuple(float(s) for s in np.diff(m.tip) / np.diff(m.disc))
        reports[a] = AxisReport(
            transmission=fit_transmission(m),
            published_transmission=PUBLISHED_TRANSMISSION.get(a, math.nan),
            residual_rmse_deg=_linear_residual(m),
            anchor_count=len(m.breakpoints),
            slopes=slopes,
        )
        if a in ("y1", "y2") and abs(reports[a].transmission - PUBLISHED_TRANSMISSION[a]) > 0.1:
            notes.append(
                f"{a} transmission {reports[a].transmission:.3f} derived from the maxima differs from the "
                f"published {PUBLISHED_TRANSMISSION[a]}; the maxima are used as ground truth"
            )
    calib = InstrumentCalibration(
        map_z=maps["z"],
        map_x=maps["x"],
        map_y1=maps["y1"],
        map_y2=maps["y2"],
        kappa_y1=float(coupling["y1"]["kappa"]),
        kappa_y2=float(coupling["y2"]["kappa"]),
        jaw_open_max=jaw_open_max,
        instrument_id=instrument_id,
        geometry=geometry,
        disc_center=centers,
    )
    return calib, CalibrationReport(instrument_id, reports, coupling, notes)


def calibration_residuals(calib: InstrumentCalibration, pairs) -> dict:
    """Per-axis RMSE (tip deg) of the model prediction vs. measured poses.

    ``pairs`` is an iterable of ``(DiscState, TipPose)``.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("at least one validation pair is required")
    errs = {a: [] for a in AXES}
    for disc, measured in pairs:
        pred = forward_map(calib, disc)
        for a in AXES:
            errs[a].append(measured[a] - pred[a])
    return {a: float(np.sqrt(np.mean(np.square(v)))) for a, v in errs.items()}
