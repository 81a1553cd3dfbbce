"""Large Needle Driver reference data and the files derived from it.

Disc stations (dock side) and tip maxima were measured per axis; yaw-disc
stations additionally per jaw configuration. Tip maxima exist for the
reference configuration only.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .calibration import StationRecord, build_instrument_calibration, format_records
from .kinematics import InstrumentGeometry

INSTRUMENT_ID = "large_needle_driver"

# (ccw_max, center, cw_max), degrees
DISC_STATIONS = {
    ("z", "n/a"): (-167, 0, 167),
    ("x", "n/a"): (-85, 0, 85),
    ("y1", "open"): (-143, -86, -30),
    ("y1", "closed_left"): (43, 100, 151),
    ("y1", "closed_mid"): (-53, 5, 60),
    ("y1", "closed_right"): (-143, -86, -30),
    ("y2", "open"): (21, 76, 128),
    ("y2", "closed_left"): (21, 76, 128),
    ("y2", "closed_mid"): (-69, -15, 39),
    ("y2", "closed_right"): (-156, -102, -48),
}
TIP_STATIONS = {
    ("z", "n/a"): (-180, 0, 180),
    ("x", "n/a"): (-80, 0, 80),
    ("y1", "closed_mid"): (-115, 0, 115),
    ("y2", "closed_mid"): (-115, 0, 115),
}

RECORDS_FILE = "large_needle_driver_records.csv"
CALIBRATION_FILE = "large_needle_driver.json"
RIG_FILE = "stereo_rig.json"
EMULATOR_FILE = "hysteresis_reproduction.json"


def station_records() -> list:
    out = []
    for (axis, cfg), disc in DISC_STATIONS.items():
        tip = TIP_STATIONS.get((axis, cfg), (float("nan"),) * 3)
        for station, d, t in zip(("ccw_max", "center", "cw_max"), disc, tip):
            out.append(StationRecord(axis, cfg, station, float(d), float(t), 0, 0.0))
    return out


def records_csv() -> str:
    return format_records(station_records())


def fixture_calibration():
    return build_instrument_calibration(station_records(), InstrumentGeometry(), instrument_id=INSTRUMENT_ID)


def data_path(name: str) -> Path:
    return Path(str(resources.files("endowrist_bench") / "data" / name))


def load_calibration():
    from .kinematics import InstrumentCalibration

    return InstrumentCalibration.load(data_path(CALIBRATION_FILE))


def write_fixtures(out_dir) -> list:
    """Write the fixture set; returns the written paths."""
    from .stereo import default_rig

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    calib, _ = fixture_calibration()
    files = {
        RECORDS_FILE: records_csv(),
        CALIBRATION_FILE: calib.dumps(),
        RIG_FILE: default_rig().dumps(),
        EMULATOR_FILE: data_path(EMULATOR_FILE).read_text(),
    }
    written = []
    for name, text in files.items():
        p = out / name
        p.write_text(text)
        written.append(p)
    return written
