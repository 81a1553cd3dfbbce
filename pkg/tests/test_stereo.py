import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from endowrist_bench.errors import BehindCamera, DegenerateConfiguration, MarkersNotVisible, NearParallelRays
from endowrist_bench.kinematics import InstrumentGeometry, TipPose
from endowrist_bench.stereo import (CameraModel, StereoRig, calibrate_rig, measure_tip_angles, noisy_pixels, observe,
                                    project, read_observations, rig_convergence, scene_markers, scene_normals,
                                    scene_occluders, synthetic_board_views, triangulate, view_shaft_pose, visibility,
                                    write_observations)
from endowrist_bench.transforms import RigidTransform, rot_y, rot_z

GEOM = InstrumentGeometry()


def test_project_examples():
    cam = CameraModel(focal_length=51.5, pixel_pitch=0.005, resolution=(1280, 1024))
    assert np.allclose(project(cam, [0, 0, 30]), cam.principal_point)
    assert project(cam, [1, 0, 51.5])[0] == pytest.approx(cam.principal_point[0] + 200)
    with pytest.raises(BehindCamera):
        project(cam, [0, 0, -1])


def test_camera_validation():
    with pytest.raises(ValueError):
        CameraModel(focal_length=0)
    with pytest.raises(ValueError):
        CameraModel(principal_point=(-1, 0))


def test_rig_geometry(rig):
    assert np.linalg.norm(rig.t12) == pytest.approx(60.0)
    ang = math.degrees(math.acos((np.trace(rig.R12) - 1) / 2))
    assert ang == pytest.approx(30.0)
    assert rig_convergence(rig)[2] == pytest.approx(30 / math.tan(math.radians(15)))


@settings(max_examples=50)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_triangulation_exact(rig, dx, dy, dz):
    X = rig_convergence(rig) + [dx, dy, dz]
    P, res = triangulate(rig, project(rig.cam1, X), project(rig.cam2, X))
    assert np.linalg.norm(P - X) < 1e-9
    assert res < 1e-9


def test_parallel_rays():
    cam = CameraModel()
    with pytest.raises(NearParallelRays):
        triangulate(StereoRig(cam, cam.with_pose(RigidTransform(np.eye(3), [-1e-9, 0, 0]))), (10, 10), (10, 10))


def test_noise_residual_grows(rig):
    X = rig_convergence(rig)
    means = []
    for s in (0.1, 1.0, 3.0):
        r = rig.with_noise(s)
        rng = np.random.default_rng(0)
        means.append(np.mean([triangulate(r, *noisy_pixels(r, X, rng))[1] for _ in range(200)]))
    assert means[0] < means[1] < means[2]


def test_calibration_noiseless_exact(rig):
    corr = synthetic_board_views(rig.with_noise(0.0), 5, np.random.default_rng(0))
    cal = calibrate_rig(corr, rig)
    assert np.linalg.norm(cal.R12 - rig.R12) < 1e-6
    assert np.linalg.norm(cal.t12 - rig.t12) < 1e-6
    assert cal.reprojection_rmse_px < 1e-6


def test_calibration_noisy_then_triangulate(rig):
    rng = np.random.default_rng(4)
    cal = calibrate_rig(synthetic_board_views(rig, 50, rng), rig)
    est = cal.rig(rig)
    errs = []
    for _ in range(100):
        X = rig_convergence(rig) + rng.uniform(-3, 3, 3)
        errs.append(np.linalg.norm(triangulate(est, *noisy_pixels(rig, X, rng))[0] - X))
    assert np.sqrt(np.mean(np.square(errs))) <= 0.03
    assert cal.reprojection_rmse_px == pytest.approx(rig.pixel_noise_sigma, rel=0.1)


def test_calibration_degenerate(rig):
    corr = synthetic_board_views(rig.with_noise(0.0), 1, np.random.default_rng(0))
    with pytest.raises(DegenerateConfiguration):
        calibrate_rig(corr[:5], rig)
    with pytest.raises(DegenerateConfiguration):
        calibrate_rig(corr, rig)  # one planar board


def test_visibility_basics(rig):
    c = rig_convergence(rig)
    assert visibility(rig, {"C1": c}) == {"C1": (True, True)}
    assert visibility(rig, {"C1": c + [500, 0, 0]}) == {"C1": (False, False)}


def test_visibility_occluder_one_camera(rig):
    X = rig_convergence(rig)
    o1 = rig.cam1.center
    # a thin cylinder halfway along cam1's sight line only
    mid = (X + o1) / 2
    occ = [(mid - [0, 5, 0], mid + [0, 5, 0], 0.5)]
    assert visibility(rig, {"T2": X}, occ) == {"T2": (False, True)}


def test_face_turned_away(rig):
    X = rig_convergence(rig)
    toward = -X / np.linalg.norm(X)
    assert visibility(rig, {"C2": X}, normals={"C2": toward})["C2"] == (True, True)
    assert visibility(rig, {"C2": X}, normals={"C2": -toward})["C2"] == (False, False)
    # tilted beyond the viewing limit
    assert visibility(rig, {"C2": X}, normals={"C2": rot_y(95) @ toward})["C2"] == (False, False)


@pytest.mark.parametrize("pitch", [-80, -40, 0, 40, 80])
def test_pitch_measurement_exact(rig, pitch):
    r = rig.with_noise(0.0)
    pose = view_shaft_pose("side", r, GEOM)
    tip = TipPose(0, pitch, 0, 0)
    obs = observe(r, scene_markers(GEOM, tip, pose))
    assert measure_tip_angles(r, obs, GEOM, "side", pose) == pytest.approx(pitch, abs=1e-6)


@settings(max_examples=60)
@given(st.floats(-80, 80), st.floats(-115, 55), st.floats(0, 60))
def test_yaw_measurement_exact(rig, pitch, y2, opening):
    r = rig.with_noise(0.0)
    pose = view_shaft_pose("top", r, GEOM)
    tip = TipPose(0, pitch, y2 + opening, y2)
    obs = observe(r, scene_markers(GEOM, tip, pose))
    y1m, y2m = measure_tip_angles(r, obs, GEOM, "top", pose, pitch_hint_deg=pitch)
    assert y1m == pytest.approx(tip.yaw1, abs=1e-6)
    assert y2m == pytest.approx(tip.yaw2, abs=1e-6)


def test_rigid_motion_invariance(rig):
    r = rig.with_noise(0.0)
    pose = view_shaft_pose("side", r, GEOM)
    g = RigidTransform(rot_z(20) @ rot_y(-10), [3, -2, 7])
    moved = r.moved(g)
    tip = TipPose(0, 33, 0, 0)
    obs = observe(moved, scene_markers(GEOM, tip, g.compose(pose)))
    assert measure_tip_angles(moved, obs, GEOM, "side", g.compose(pose)) == pytest.approx(33, abs=1e-6)


def test_yaw_noise_level(rig):
    pose = view_shaft_pose("top", rig, GEOM)
    rng = np.random.default_rng(0)
    tip = TipPose(0, 0, 30, 0)
    vals = [measure_tip_angles(rig, observe(rig, scene_markers(GEOM, tip, pose), rng=rng), GEOM, "top", pose)[0]
            for _ in range(200)]
    sigma = math.degrees(math.atan(0.026 * math.sqrt(2) / GEOM.jaw_length))
    assert abs(np.mean(vals) - 30) < 3 * sigma
    assert np.std(vals) < 3 * sigma


def test_missing_markers(rig):
    pose = view_shaft_pose("top", rig, GEOM)
    obs = observe(rig.with_noise(0), scene_markers(GEOM, TipPose(0, 80, 0, 0), pose),
                  normals=scene_normals(GEOM, TipPose(0, 80, 0, 0), pose))
    with pytest.raises(MarkersNotVisible) as e:
        measure_tip_angles(rig, obs, GEOM, "top", pose, pitch_hint_deg=80)
    assert "C2" in e.value.missing


def test_schedule_poses_unoccluded_by_links(rig):
    for view in ("side", "top"):
        pose = view_shaft_pose(view, rig, GEOM)
        tip = TipPose(0, 0, 30, 0)
        vis = visibility(rig, scene_markers(GEOM, tip, pose), scene_occluders(GEOM, tip, pose))
        need = ("C1", "T1") if view == "side" else ("C2", "T2", "T3")
        assert all(all(vis[m]) for m in need)


def test_rig_and_observation_io(rig, tmp_path):
    p = tmp_path / "rig.json"
    p.write_text(rig.dumps())
    back = StereoRig.load(p)
    assert np.allclose(back.R12, rig.R12) and back.pixel_noise_sigma == rig.pixel_noise_sigma
    obs = observe(rig, scene_markers(GEOM, TipPose(0, 0, 0, 0), view_shaft_pose("side", rig, GEOM)))
    write_observations(tmp_path / "o.jsonl", [("a", obs)])
    (rid, back_obs), = read_observations(tmp_path / "o.jsonl")
    assert rid == "a" and [o.label for o in back_obs] == [o.label for o in obs]
