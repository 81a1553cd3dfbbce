"""Synthetic stereo metrology: pinhole projection, midpoint triangulation,
extrinsic rig calibration, marker visibility and tip-angle measurement.

Camera frames follow the usual convention (x right, y down, z along the
optical axis). No lens distortion is modelled.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BehindCamera, DegenerateConfiguration, MarkersNotVisible, NearParallelRays
from .kinematics import InstrumentGeometry, TipPose, link_segments, marker_world_normals, marker_world_positions
from .transforms import RigidTransform, exp_so3, is_rotation, nearest_rotation, rot_x, rot_z, skew

# rig layout from the adapter's measurement setup
BASELINE_MM = 60.0
CONVERGENCE_DEG = 30.0  # total; each camera is turned 15 deg toward the center line
FOCAL_LENGTH_MM = 51.5
WORKING_DISTANCE_MM = 11.0  # as reported; geometrically the optical axes meet much farther out
TARGET_POINT_RMSE_MM = 0.026
MAX_VIEW_ANGLE_DEG = 75.0  # flat markers turned further from a camera are not detected

SIDE_MARKERS = ("C1", "T1")
TOP_MARKERS = ("C2", "T2", "T3")


@dataclass(frozen=True)
class CameraModel:
    focal_length: float = FOCAL_LENGTH_MM
    pixel_pitch: float = 0.0048
    resolution: tuple = (4096, 3072)
    principal_point: tuple = None
    pose: RigidTransform = field(default_factory=RigidTransform.identity)  # world -> camera

    def __post_init__(self):
        if not self.focal_length > 0:
            raise ValueError("focal_length must be > 0")
        object.__setattr__(self, "resolution", tuple(int(r) for r in self.resolution))
        if self.principal_point is None:
            object.__setattr__(self, "principal_point", (self.resolution[0] / 2, self.resolution[1] / 2))
        object.__setattr__(self, "principal_point", tuple(float(p) for p in self.principal_point))
        cx, cy = self.principal_point
        if not (0 <= cx < self.resolution[0] and 0 <= cy < self.resolution[1]):
            raise ValueError("principal point must lie inside the image")

    @property
    def f_px(self) -> float:
        return self.focal_length / self.pixel_pitch

    @property
    def center(self) -> np.ndarray:
        return -self.pose.R.T @ self.pose.t

    def in_image(self, uv) -> bool:
        u, v = uv
        return 0 <= u < self.resolution[0] and 0 <= v < self.resolution[1]

    def ray(self, uv):
        """World-frame ray (origin, unit direction) through pixel ``uv``."""
        u, v = uv
        d = np.array([(u - self.principal_point[0]) / self.f_px, (v - self.principal_point[1]) / self.f_px, 1.0])
        d = self.pose.R.T @ d
        return self.center, d / np.linalg.norm(d)

    def to_dict(self) -> dict:
        return {
            "focal_length": self.focal_length,
            "pixel_pitch": self.pixel_pitch,
            "resolution": list(self.resolution),
            "principal_point": list(self.principal_point),
            "pose": self.pose.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraModel":
        return cls(
            focal_length=float(d["focal_length"]),
            pixel_pitch=float(d["pixel_pitch"]),
            resolution=tuple(d["resolution"]),
            principal_point=tuple(d["principal_point"]) if d.get("principal_point") else None,
            pose=RigidTransform.from_dict(d["pose"]),
        )

    def with_pose(self, pose: RigidTransform) -> "CameraModel":
        return CameraModel(self.focal_length, self.pixel_pitch, self.resolution, self.principal_point, pose)


@dataclass(frozen=True)
class StereoRig:
    cam1: CameraModel
    cam2: CameraModel
    pixel_noise_sigma: float = 0.0

    def __post_init__(self):
        if not np.linalg.norm(self.t12) > 0:
            raise ValueError("stereo baseline must be > 0")
        if not is_rotation(self.R12, 1e-9):
            raise ValueError("R12 must be a proper rotation")

    @property
    def R12(self) -> np.ndarray:
        """cam1 -> cam2 rotation: x2 = R12 x1 + t12."""
        return self.cam2.pose.R @ self.cam1.pose.R.T

    @property
    def t12(self) -> np.ndarray:
        return self.cam2.pose.t - self.R12 @ self.cam1.pose.t

    @property
    def cameras(self) -> tuple:
        return (self.cam1, self.cam2)

    def moved(self, g: RigidTransform) -> "StereoRig":
        """The same rig after a rigid world motion ``g``."""
        inv = g.inverse()
        return StereoRig(
            self.cam1.with_pose(self.cam1.pose.compose(inv)),
            self.cam2.with_pose(self.cam2.pose.compose(inv)),
            self.pixel_noise_sigma,
        )

    def with_noise(self, sigma: float) -> "StereoRig":
        return StereoRig(self.cam1, self.cam2, sigma)

    def to_dict(self) -> dict:
        return {
            "cam1": self.cam1.to_dict(),
            "cam2": self.cam2.to_dict(),
            "relative": {"R12": self.R12.tolist(), "t12": self.t12.tolist()},
            "pixel_noise_sigma": self.pixel_noise_sigma,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "StereoRig":
        rig = cls(CameraModel.from_dict(d["cam1"]), CameraModel.from_dict(d["cam2"]), float(d.get("pixel_noise_sigma", 0.0)))
        rel = d.get("relative")
        if rel is not None:
            if not (np.allclose(rel["R12"], rig.R12, atol=1e-9) and np.allclose(rel["t12"], rig.t12, atol=1e-9)):
                raise ValueError("relative transform is inconsistent with the camera poses")
        return rig

    @classmethod
    def load(cls, path) -> "StereoRig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def look_at(center, target, down=(0.0, 1.0, 0.0)) -> RigidTransform:
    """World->camera pose of a camera at ``center`` looking at ``target``."""
    center = np.asarray(center, dtype=float)
    z = np.asarray(target, dtype=float) - center
    z /= np.linalg.norm(z)
    x = np.cross(down, z)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    R = np.vstack([x, y, z])
    return RigidTransform(R, -R @ center)


def convergence_point(baseline: float = BASELINE_MM, convergence_deg: float = CONVERGENCE_DEG) -> np.ndarray:
    return np.array([0.0, 0.0, baseline / 2 / math.tan(math.radians(convergence_deg / 2))])


def default_rig(pixel_noise_sigma: float = None, **camera_kw) -> StereoRig:
    """Two toed-in cameras, world origin midway between them, z toward the scene."""
    target = convergence_point()
    b = BASELINE_MM / 2
    cam = CameraModel(**camera_kw)
    rig = StereoRig(cam.with_pose(look_at([-b, 0, 0], target)), cam.with_pose(look_at([b, 0, 0], target)))
    if pixel_noise_sigma is None:
        pixel_noise_sigma = derive_pixel_noise_sigma(rig)
    return rig.with_noise(pixel_noise_sigma)


# -- projection and triangulation -----------------------------------------

def project(cam: CameraModel, point) -> np.ndarray:
    pc = cam.pose.apply(np.asarray(point, dtype=float))
    if not pc[2] > 0:
        raise BehindCamera(f"point at camera depth {pc[2]:.6g} mm")
    u = cam.principal_point[0] + cam.f_px * pc[0] / pc[2]
    v = cam.principal_point[1] + cam.f_px * pc[1] / pc[2]
    return np.array([u, v])


def triangulate(rig: StereoRig, p1, p2):
    """Midpoint of the common perpendicular of the two pixel rays.

    Returns ``(point, residual)`` with residual = half the ray gap (mm).
    """
    o1, d1 = rig.cam1.ray(p1)
    o2, d2 = rig.cam2.ray(p2)
    n = np.cross(d1, d2)
    sin_angle = np.linalg.norm(n)
    if sin_angle < 1e-6:
        raise NearParallelRays(f"ray angle {math.asin(min(sin_angle, 1.0)):.3g} rad")
    w = o2 - o1
    # closest points o1 + s d1, o2 + u d2
    b = d1 @ d2
    denom = 1 - b * b
    s = (w @ d1 - b * (w @ d2)) / denom
    u = (b * (w @ d1) - w @ d2) / denom
    q1, q2 = o1 + s * d1, o2 + u * d2
    return (q1 + q2) / 2, float(np.linalg.norm(q1 - q2) / 2)


def triangulation_jacobian(rig: StereoRig, point, h: float = 1e-4) -> np.ndarray:
    """d(point)/d(u1, v1, u2, v2), by central differences."""
    p1, p2 = project(rig.cam1, point), project(rig.cam2, point)
    base = np.concatenate([p1, p2])
    J = np.zeros((3, 4))
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        a, b = base + e, base - e
        J[:, k] = (triangulate(rig, a[:2], a[2:])[0] - triangulate(rig, b[:2], b[2:])[0]) / (2 * h)
    return J


def derive_pixel_noise_sigma(rig: StereoRig, target_rmse: float = TARGET_POINT_RMSE_MM, point=None) -> float:
    """Isotropic pixel sigma that yields ``target_rmse`` 3D error at ``point``
    (first order; the default point is where the optical axes meet)."""
    if point is None:
        point = rig_convergence(rig)
    J = triangulation_jacobian(rig, point)
    return float(target_rmse / math.sqrt(np.trace(J @ J.T)))


def rig_convergence(rig: StereoRig) -> np.ndarray:
    """Midpoint of closest approach of the two optical axes."""
    c1, c2 = rig.cam1, rig.cam2
    return triangulate(rig, c1.principal_point, c2.principal_point)[0]


def noisy_pixels(rig: StereoRig, point, rng) -> tuple:
    p1, p2 = project(rig.cam1, point), project(rig.cam2, point)
    if rig.pixel_noise_sigma > 0:
        p1 = p1 + rng.normal(0, rig.pixel_noise_sigma, 2)
        p2 = p2 + rng.normal(0, rig.pixel_noise_sigma, 2)
    return p1, p2


# -- rig calibration -------------------------------------------------------

@dataclass
class RigCalibration:
    R12: np.ndarray
    t12: np.ndarray
    cam1_pose: RigidTransform
    cam2_pose: RigidTransform
    reprojection_rmse_px: float
    n_points: int

    def rig(self, template: StereoRig) -> StereoRig:
        return StereoRig(template.cam1.with_pose(self.cam1_pose), template.cam2.with_pose(self.cam2_pose), template.pixel_noise_sigma)


def _normalized(cam: CameraModel, pixels) -> np.ndarray:
    px = np.asarray(pixels, dtype=float)
    return (px - np.array(cam.principal_point)) / cam.f_px


def _linear_pose(cam: CameraModel, X: np.ndarray, pixels: np.ndarray) -> RigidTransform:
    """DLT for [R|t] with known intrinsics, projected onto SO(3)."""
    xn = _normalized(cam, pixels)
    mu = X.mean(axis=0)
    scale = np.sqrt(np.mean(np.sum((X - mu) ** 2, axis=1)))
    if scale == 0:
        raise DegenerateConfiguration("all points coincide")
    Xs = (X - mu) / scale
    Xh = np.hstack([Xs, np.ones((len(X), 1))])
    A = np.zeros((2 * len(X), 12))
    A[0::2, 0:4] = -Xh
    A[0::2, 8:12] = xn[:, [0]] * Xh
    A[1::2, 4:8] = -Xh
    A[1::2, 8:12] = xn[:, [1]] * Xh
    _, s, Vt = np.linalg.svd(A)
    if len(s) < 12 or s[-2] < 1e-9 * s[0]:
        raise DegenerateConfiguration(
            f"{len(X)} points leave the pose underdetermined (nullity > 1 in the linear system)"
        )
    P = Vt[-1].reshape(3, 4)
    if np.linalg.det(P[:, :3]) < 0:
        P = -P
    M, p4 = P[:, :3], P[:, 3]
    R = nearest_rotation(M)
    k = np.trace(R.T @ M) / 3
    t_s = p4 / k
    # undo the point normalization: x_cam ∝ R (X - mu)/scale + t_s
    t = (t_s * scale) - R @ mu
    pose = RigidTransform(R, t)
    if np.mean(pose.apply(X)[:, 2]) < 0:
        raise DegenerateConfiguration("linear pose places the points behind the camera")
    return pose


def _refine_pose(cam: CameraModel, X: np.ndarray, pixels: np.ndarray, pose: RigidTransform, iters: int = 20):
    """Gauss-Newton on reprojection error; rotation updated on the left."""
    R, t = pose.R.copy(), pose.t.copy()
    f = cam.f_px
    cx, cy = cam.principal_point
    for _ in range(iters):
        RX = X @ R.T
        pc = RX + t
        z = pc[:, 2]
        u = cx + f * pc[:, 0] / z
        v = cy + f * pc[:, 1] / z
        r = np.concatenate([u - pixels[:, 0], v - pixels[:, 1]])
        # d(u,v)/d(pc)
        du = np.stack([f / z, np.zeros_like(z), -f * pc[:, 0] / z**2], axis=1)
        dv = np.stack([np.zeros_like(z), f / z, -f * pc[:, 1] / z**2], axis=1)
        # d(pc)/d(omega) = -[RX]x, d(pc)/dt = I
        dpc_dw = np.stack([-skew(p) for p in RX])
        Ju = np.hstack([np.einsum("ni,nij->nj", du, dpc_dw), du])
        Jv = np.hstack([np.einsum("ni,nij->nj", dv, dpc_dw), dv])
        J = np.vstack([Ju, Jv])
        JtJ = J.T @ J
        if np.linalg.cond(JtJ) > 1e14:
            raise DegenerateConfiguration("normal equations are singular")
        delta = -np.linalg.solve(JtJ, J.T @ r)
        R = exp_so3(delta[:3]) @ R
        t = t + delta[3:]
        if np.linalg.norm(delta) < 1e-13:
            break
    pose = RigidTransform(nearest_rotation(R), t)
    res = _reprojection_residuals(cam.with_pose(pose), X, pixels)
    return pose, res


def _reprojection_residuals(cam: CameraModel, X, pixels) -> np.ndarray:
    proj = np.array([project(cam, p) for p in X])
    return (proj - pixels).ravel()


def calibrate_rig(correspondences, template: StereoRig) -> RigCalibration:
    """Recover both camera poses (and R12, t12) from known 3D points.

    ``correspondences`` is a sequence of ``(X_world, pixel_cam1, pixel_cam2)``;
    intrinsics come from ``template``. Each camera pose is initialized
    linearly, projected onto a rotation, then refined by Gauss-Newton on the
    reprojection error.
    """
    corr = list(correspondences)
    if len(corr) < 6:
        raise DegenerateConfiguration(f"{len(corr)} points; at least 6 non-coplanar points are required")
    X = np.array([c[0] for c in corr], dtype=float)
    px1 = np.array([c[1] for c in corr], dtype=float)
    px2 = np.array([c[2] for c in corr], dtype=float)
    poses, residuals = [], []
    for cam, px in ((template.cam1, px1), (template.cam2, px2)):
        pose, res = _refine_pose(cam, X, px, _linear_pose(cam, X, px))
        poses.append(pose)
        residuals.append(res)
    R12 = poses[1].R @ poses[0].R.T
    t12 = poses[1].t - R12 @ poses[0].t
    rmse = float(np.sqrt(np.mean(np.concatenate(residuals) ** 2)))
    return RigCalibration(R12, t12, poses[0], poses[1], rmse, len(corr))


def calibration_board(rows: int = 7, cols: int = 6, square_mm: float = 1.0) -> np.ndarray:
    """Grid corners in the board plane (z = 0), centered on the origin."""
    ii, jj = np.meshgrid(np.arange(cols), np.arange(rows))
    pts = np.stack([ii.ravel() * square_mm, jj.ravel() * square_mm, np.zeros(ii.size)], axis=1)
    return pts - pts.mean(axis=0)


def synthetic_board_views(rig: StereoRig, n_views: int, rng, rows: int = 7, cols: int = 6,
                          square_mm: float = 1.0, tilt_deg: float = 30.0, spread_mm: float = 2.0):
    """Correspondences for ``n_views`` random board poses around the convergence point."""
    board = calibration_board(rows, cols, square_mm)
    center = rig_convergence(rig)
    corr = []
    for _ in range(n_views):
        R = exp_so3(np.radians(tilt_deg) * rng.uniform(-1, 1, 3))
        t = center + rng.uniform(-spread_mm, spread_mm, 3)
        for X in board @ R.T + t:
            p1, p2 = noisy_pixels(rig, X, rng)
            corr.append((X, p1, p2))
    return corr


# -- visibility ------------------------------------------------------------

def _segment_distance(p0, p1, q0, q1) -> float:
    """Minimum distance between segments p0p1 and q0q1."""
    d1, d2, r = p1 - p0, q1 - q0, p0 - q0
    a, e, f = d1 @ d1, d2 @ d2, d2 @ r
    if a <= 1e-15 and e <= 1e-15:
        return float(np.linalg.norm(r))
    if a <= 1e-15:
        s, t = 0.0, np.clip(f / e, 0, 1)
    else:
        c = d1 @ r
        if e <= 1e-15:
            s, t = np.clip(-c / a, 0, 1), 0.0
        else:
            b = d1 @ d2
            denom = a * e - b * b
            s = np.clip((b * f - c * e) / denom, 0, 1) if denom > 1e-15 else 0.0
            t = (b * s + f) / e
            if t < 0:
                t, s = 0.0, np.clip(-c / a, 0, 1)
            elif t > 1:
                t, s = 1.0, np.clip((b - c) / a, 0, 1)
    return float(np.linalg.norm((p0 + d1 * s) - (q0 + d2 * t)))


def visibility(rig: StereoRig, markers: dict, occluders=(), tol: float = 1e-3, normals: dict = None,
               max_view_angle_deg: float = MAX_VIEW_ANGLE_DEG) -> dict:
    """``{label: (visible_cam1, visible_cam2)}``.

    A marker is visible in a camera when it projects inside the image, its
    face (``normals``, if given) is turned less than ``max_view_angle_deg``
    from the camera, and the sight line stops short of every occluder capsule
    ``(p0, p1, radius)``. The last ``tol`` mm before the marker are ignored so
    markers on a body's surface are not hidden by that body.
    """
    cos_max = math.cos(math.radians(max_view_angle_deg))
    out = {}
    for label, X in markers.items():
        X = np.asarray(X, dtype=float)
        flags = []
        for cam in rig.cameras:
            try:
                uv = project(cam, X)
            except BehindCamera:
                flags.append(False)
                continue
            ok = cam.in_image(uv)
            if ok and normals is not None:
                to_cam = cam.center - X
                ok = normals[label] @ to_cam > cos_max * np.linalg.norm(to_cam) * np.linalg.norm(normals[label])
            if ok:
                c = cam.center
                d = X - c
                end = X - d / np.linalg.norm(d) * tol
                ok = all(_segment_distance(c, end, np.asarray(p0), np.asarray(p1)) > r for p0, p1, r in occluders)
            flags.append(bool(ok))
        out[label] = tuple(flags)
    return out


# -- observations and angle measurement -----------------------------------

@dataclass
class MarkerObservation:
    label: str
    pixels: tuple  # ((u1, v1) or None, (u2, v2) or None)
    visible: tuple  # (cam1, cam2)

    @property
    def triangulable(self) -> bool:
        return all(self.visible)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "pixels": [None if p is None else [float(p[0]), float(p[1])] for p in self.pixels],
            "visible": list(self.visible),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MarkerObservation":
        return cls(d["label"], tuple(None if p is None else tuple(p) for p in d["pixels"]), tuple(d["visible"]))


def observe(rig: StereoRig, markers: dict, occluders=(), rng=None, normals: dict = None) -> list:
    """Synthetic 'image pair': noisy pixels of every visible marker."""
    vis = visibility(rig, markers, occluders, normals=normals)
    out = []
    for label, X in markers.items():
        pixels = []
        for k, cam in enumerate(rig.cameras):
            if not vis[label][k]:
                pixels.append(None)
                continue
            uv = project(cam, X)
            if rng is not None and rig.pixel_noise_sigma > 0:
                uv = uv + rng.normal(0, rig.pixel_noise_sigma, 2)
            pixels.append(tuple(uv))
        out.append(MarkerObservation(label, tuple(pixels), vis[label]))
    return out


def write_observations(path, records) -> None:
    """JSON lines; each record is ``{"id": ..., "markers": [observation, ...]}``."""
    with open(path, "w") as fh:
        for rec_id, obs in records:
            fh.write(json.dumps({"id": rec_id, "markers": [o.to_dict() for o in obs]}) + "\n")


def read_observations(path) -> list:
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                out.append((d["id"], [MarkerObservation.from_dict(o) for o in d["markers"]]))
    return out


def _signed_angle(v0, v, axis) -> float:
    return math.degrees(math.atan2(axis @ np.cross(v0, v), v0 @ v))


def measure_tip_angles(
    rig: StereoRig,
    observations,
    geometry: InstrumentGeometry,
    view: str,
    shaft_pose: RigidTransform = None,
    roll_deg: float = 0.0,
    pitch_hint_deg: float = 0.0,
):
    """Pitch (``view='side'``) or ``(yaw1, yaw2)`` (``view='top'``) in degrees.

    Angles are measured in the shaft frame given by ``shaft_pose`` and the
    known roll. Pitch is the signed angle of T1-C1 from its rest direction
    about the pitch axis. Each yaw is the signed angle of T-C2 about the jaw
    axis; ``pitch_hint_deg`` only resolves which half-plane the jaw points
    into, so errors in it below 90 deg do not bias the yaw.
    """
    shaft_pose = shaft_pose or RigidTransform.identity()
    need = SIDE_MARKERS if view == "side" else TOP_MARKERS
    if view not in ("side", "top"):
        raise ValueError("view must be 'side' or 'top'")
    obs = {o.label: o for o in observations}
    missing = [m for m in need if m not in obs or not obs[m].triangulable]
    if missing:
        raise MarkersNotVisible(missing)
    to_shaft = shaft_pose.inverse()
    R_roll = rot_z(roll_deg)
    pts = {m: R_roll.T @ to_shaft.apply(triangulate(rig, *obs[m].pixels)[0]) for m in need}
    rest = geometry.markers.as_dict()
    ex = np.array([1.0, 0.0, 0.0])
    if view == "side":
        v0 = rest["T1"] - rest["C1"]
        v = pts["T1"] - pts["C1"]
        v0 = v0 - (v0 @ ex) * ex
        v = v - (v @ ex) * ex
        return _signed_angle(v0, v, ex)
    # top view: jaw rotation axis is the clevis y axis; x (pitch axis) is pitch-invariant
    z_hint = rot_x(pitch_hint_deg) @ np.array([0.0, 0.0, 1.0])
    yaws = []
    for t in ("T2", "T3"):
        d = pts[t] - pts["C2"]
        along_x = d @ ex
        rest_d = rest[t] - rest["C2"]
        r = d - along_x * ex
        sign = 1.0 if r @ z_hint >= 0 else -1.0
        rest_angle = math.degrees(math.atan2(rest_d[0], rest_d[2]))
        yaws.append(math.degrees(math.atan2(along_x, sign * np.linalg.norm(r))) - rest_angle)
    return tuple(yaws)


def view_shaft_pose(view: str, rig: StereoRig, geometry: InstrumentGeometry) -> RigidTransform:
    """Shaft placement for a view, with the marker workspace centered on the
    point where the optical axes meet.

    Side view: the pitch axis points at the cameras, so pitching happens in
    the image plane. Top view: the jaw axis points at the cameras.
    """
    target = rig_convergence(rig)
    toward = -target / np.linalg.norm(target)  # from the scene toward the rig
    up = np.array([0.0, -1.0, 0.0])
    if view == "side":
        z = up
        x = toward
        y = np.cross(z, x)
        center_local = np.array([0.0, 0.0, geometry.pivot_to_clevis / 2])
    elif view == "top":
        z = up
        y = toward
        x = np.cross(y, z)
        center_local = np.array([0.0, 0.0, (geometry.pivot_to_clevis + geometry.jaw_length) / 2])
    else:
        raise ValueError("view must be 'side' or 'top'")
    R = np.column_stack([x, y, z])
    return RigidTransform(R, target - R @ center_local)


def scene_occluders(geometry: InstrumentGeometry, tip: TipPose, shaft_pose: RigidTransform) -> list:
    return list(link_segments(geometry, tip, shaft_pose).values())


def scene_normals(geometry: InstrumentGeometry, tip: TipPose, shaft_pose: RigidTransform) -> dict:
    return marker_world_normals(geometry, tip, shaft_pose)


def scene_markers(geometry: InstrumentGeometry, tip: TipPose, shaft_pose: RigidTransform) -> dict:
    return marker_world_positions(geometry, tip, shaft_pose)

