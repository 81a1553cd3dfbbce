import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from endowrist_bench.controller import EmulatorConfig
from endowrist_bench.errors import MissingDirection
from endowrist_bench.evaluation import (RECORD_COLUMNS, EvalRecord, PoseSchedule, build_schedule, compute_statistics,
                                        export_results, fit_backlash, read_stats, run_experiment, simulate,
                                        start_session)
from endowrist_bench.kinematics import feasibility_check


def quiet(calib, **backlash):
    cfg = EmulatorConfig.for_instrument(calib, **{a: {"backlash_deg": b} for a, b in backlash.items()})
    return replace(cfg, noise=False)


def test_schedule_shape(calib):
    s = build_schedule(calib, 1, include_yaw=False)
    assert len(s) == 10
    assert sorted({e.target.pitch for e in s.entries}) == [-80, -40, 0, 40, 80]
    assert [e.direction for e in s.entries[:2]] == ["CW", "CCW"]
    full = build_schedule(calib, 3)
    assert len(full) == 10 + 5 * 25 * 2
    assert full.measurements_per_repeat == 10 + 2 * 250
    for e in full.entries:
        assert feasibility_check(calib, e.target) == []
        assert (e.view == "side") == (e.axes == ("x",))
    assert sorted({e.target.yaw2 for e in full.entries if e.view == "top"}) == [-115, -72.5, -30, 12.5, 55]
    assert sorted({e.target.jaw_opening for e in full.entries if e.view == "top"}) == [0, 15, 30, 45, 60]


def test_empty_schedule(calib, rig):
    emu, client = start_session(quiet(calib), calib)
    assert run_experiment(client, emu, rig, PoseSchedule((), 1), calib, quiet(calib)) == []


def test_noise_free_identity(calib, rig):
    cfg = quiet(calib)
    recs, stats = simulate(calib, rig.with_noise(0.0), cfg, n_repeats=1, occlusion=False)
    assert stats.n_excluded == 0
    # only microstep rounding (half a step, times the steepest map slope) separates target and pose
    bound = 0.1125 / 2 * 115 / 54 + 1e-9
    for r in recs:
        for a, t in r.target.items():
            assert abs(r.measured[a] - t) <= bound
            assert abs(r.measured[a] - r.expected[a]) <= 1e-6
    assert stats.pitch.direction_rmse < 1e-6 and stats.yaw.direction_rmse < 1e-6
    assert stats.pitch.model_rmse < 1e-6


def test_determinism(calib, rig, repro_config):
    a = simulate(calib, rig, repro_config, n_repeats=1, seed=3, include_yaw=False)[0]
    b = simulate(calib, rig, repro_config, n_repeats=1, seed=3, include_yaw=False)[0]
    assert a == b


def _rec(pid, d, rep, value, axis="x", excluded=False):
    return EvalRecord(pid, d, rep, "side", {axis: 0.0}, {axis: 0.0}, {} if excluded else {axis: value}, excluded,
                      "markers not visible: T1" if excluded else "")


def test_statistics_oracles():
    same = [_rec(p, d, k, float(i)) for i, p in enumerate("ABC") for d in ("CW", "CCW") for k in range(3)]
    assert compute_statistics(same).pitch.direction_rmse == 0
    shifted = [_rec(p, d, k, float(i) + (2.5 if d == "CCW" else 0)) for i, p in enumerate("ABC")
               for d in ("CW", "CCW") for k in range(3)]
    st = compute_statistics(shifted)
    assert st.pitch.direction_rmse == pytest.approx(2.5)
    assert st.pitch.max_std == 0
    assert st.n_records == 18


def test_std_uses_repeats():
    st = compute_statistics([_rec("A", "CW", k, v) for k, v in enumerate((1.0, 2.0, 3.0))])
    assert st.groups[0].std == pytest.approx(1.0)
    assert st.groups[0].mean == pytest.approx(2.0)


def test_empty_pose_dropped():
    recs = [_rec("A", "CW", 0, 1.0), _rec("B", "CW", 0, 0.0, excluded=True)]
    st = compute_statistics(recs)
    assert st.empty_poses == ["x/B/CW"]
    assert [g.pose_id for g in st.groups] == ["A"]
    assert st.n_excluded == 1


def test_fit_backlash_needs_both_directions(calib):
    with pytest.raises(MissingDirection):
        fit_backlash(compute_statistics([_rec("A", "CW", 0, 1.0)], calib), calib)


def test_zero_backlash_estimate(calib, rig):
    cfg = replace(EmulatorConfig.for_instrument(calib), noise=True)
    _, st = simulate(calib, rig, cfg, n_repeats=3, seed=1)
    est = fit_backlash(st, calib)
    for e in est.values():
        assert abs(e.disc_deg) < 0.1


def test_analytic_pitch_offset(calib, rig):
    # unsaturated poses: tip offset = transmission * disc play
    _, st = simulate(calib, rig.with_noise(0.0), quiet(calib, x=13.5), n_repeats=1, include_yaw=False)
    est = fit_backlash(st, calib)["x"]
    assert est.tip_offset_deg == pytest.approx(-13.5 * 80 / 85, abs=0.01)
    assert est.disc_deg == pytest.approx(13.5, rel=1e-3)


def test_fixed_point_consistency(calib, rig, repro_config):
    _, first = simulate(calib, rig, repro_config, n_repeats=3, seed=11)
    est = fit_backlash(first, calib)
    b_yaw = (est["y1"].disc_deg + est["y2"].disc_deg) / 2
    cfg = EmulatorConfig.for_instrument(calib, seed=repro_config.seed, x={"backlash_deg": est["x"].disc_deg},
                                        y1={"backlash_deg": b_yaw}, y2={"backlash_deg": b_yaw})
    _, second = simulate(calib, rig, cfg, n_repeats=3, seed=12)
    assert second.pitch.direction_rmse == pytest.approx(first.pitch.direction_rmse, rel=0.05)
    assert second.yaw.direction_rmse == pytest.approx(first.yaw.direction_rmse, rel=0.05)


def test_monotone_degradation(calib, rig):
    rmse = [simulate(calib, rig, EmulatorConfig.for_instrument(calib, x={"backlash_deg": b}), n_repeats=1,
                     seed=s, include_yaw=False)[1].pitch.direction_rmse
            for s, b in enumerate((0.0, 1.0, 4.0, 10.0, 20.0))]
    assert all(a <= b for a, b in zip(rmse, rmse[1:]))


def test_standard_error_scaling(calib, rig):
    def se(n):
        var = [g.std**2 for seed in range(8)
               for g in simulate(calib, rig, EmulatorConfig.for_instrument(calib), n_repeats=n, seed=100 * n + seed,
                                 include_yaw=False)[1].groups]
        return np.sqrt(np.mean(var) / n)

    assert se(3) / se(12) == pytest.approx(2.0, rel=0.2)


def test_export(tmp_path, calib, rig, repro_config):
    empty = tmp_path / "empty"
    export_results([], compute_statistics([], calib), empty, figures=False)
    assert (empty / "records.csv").read_text().strip() == ",".join(RECORD_COLUMNS)
    assert json.loads((empty / "stats.json").read_text())["n_records"] == 0

    recs, st = simulate(calib, rig, repro_config, n_repeats=1, seed=0)
    files = export_results(recs, st, tmp_path / "run")
    with open(tmp_path / "run" / "records.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == build_schedule(calib, 1).measurements_per_repeat
    assert all(r["reason"] for r in rows if r["excluded"] == "1")
    assert read_stats(tmp_path / "run" / "stats.json").to_dict() == json.loads(json.dumps(st.to_dict()))
    with open(tmp_path / "run" / "plot_x.csv") as fh:
        plot = list(csv.DictReader(fh))
    assert [float(r["target_deg"]) for r in plot] == [-80, -40, 0, 40, 80]
    assert {"expected_deg", "cw_mean_deg", "ccw_mean_deg", "cw_std_deg", "ccw_std_deg"} <= set(plot[0])
    assert any(p.name == "fig_x.png" for p in files)


def test_export_error_has_path(tmp_path, calib):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        export_results([], compute_statistics([], calib), blocker / "sub", figures=False)


def test_occlusion_excludes_records(calib, rig, repro_config):
    _, st = simulate(calib, rig, repro_config, n_repeats=1, seed=0)
    assert st.n_excluded > 0
    assert st.excluded_by_view["side"] == 0
