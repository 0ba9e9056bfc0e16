import math

import numpy as np
import pytest

semloc = pytest.importorskip("semloc")

CAM = semloc.DEFAULT_CAMERA
IDENTITY = (0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0)


def test_project_identity_and_out_of_view():
    u, v, d = semloc.project((1.0, 0.0, 10.0), IDENTITY, (100, 100, 50, 50, 100, 100))
    assert (u, v, d) == (60.0, 50.0, 10.0)
    assert semloc.project((0.0, 0.0, -1.0), IDENTITY, CAM) is None


def test_remove_moving_drops_single_round_blob():
    rng = np.random.default_rng(0)
    base = rng.uniform(0, 2, size=(200, 3))
    blob = rng.uniform(5, 6, size=(30, 3))
    xyz = np.vstack([base, base, base, blob])
    rounds = np.repeat([0, 1, 2, 2], [200, 200, 200, 30]).astype(np.uint16)
    cls = np.full(len(xyz), 9, dtype=np.uint16)
    keep = semloc.remove_moving(xyz, cls, rounds)
    assert keep[:600].all()
    assert not keep[600:].any()


def test_render_nearest_point_wins():
    xyz = np.array([[0.0, 0.0, 6.0], [0.0, 0.0, 3.0]])
    labels, depth = semloc.render(xyz, np.array([20, 1], dtype=np.uint16), IDENTITY, CAM)
    assert labels.shape == (256, 304)
    assert labels[128, 152] == 1
    assert depth[128, 152] == 3.0
    assert labels[0, 0] == 255


def test_road_field_rectifies_onto_road():
    mask = np.zeros((10, 10), dtype=np.uint8)
    mask[5, 5] = 1
    field = semloc.RoadField.from_mask(mask, (0.0, 0.0), 0.05)
    x, y, z = field.rectify((0.26, 0.41, 1.5))
    assert math.floor(x / 0.05) == 5 and math.floor(y / 0.05) == 5
    assert z == 1.5


def test_perturb_bounds_and_kalman_shape():
    poses = [(float(i), 0.0, 1.5, 1.0, 0.0, 0.0, 0.0) for i in range(50)]
    noisy = semloc.perturb(poses, 7.5, 15.0, 3)
    for p, q in zip(poses, noisy):
        assert np.linalg.norm(np.subtract(p[:3], q[:3])) <= 7.5 + 1e-9
        assert semloc.rotation_angle_deg(p, q) <= 15.0 + 1e-6
    smoothed = semloc.kalman_smooth(np.array([q[:3] for q in noisy]), 0.1)
    assert smoothed.shape == (50, 3)


def test_fuse_and_scores():
    rendered = np.full((2, 3), 255, dtype=np.uint16)
    rendered[0, 0] = 6
    background = np.full((2, 3), 9, dtype=np.uint16)
    mask = np.ones((2, 3), dtype=np.uint8)
    fused = semloc.fuse(rendered, background, [(4, mask, 0.95)])
    assert fused[0, 0] == 6
    assert (fused.ravel()[1:] == 4).all()
    gt = np.array([[1, 1, 2, 2]], dtype=np.uint16)
    pred = np.array([[1, 2, 1, 2]], dtype=np.uint16)
    scores = semloc.segmentation_scores(gt, pred)
    assert scores["mean_iou"] == pytest.approx(1.0 / 3.0)


def test_errors_are_raised_as_semloc_error():
    with pytest.raises(semloc.Error):
        semloc.segmentation_scores(np.array([[255]], dtype=np.uint16), np.array([[1]], dtype=np.uint16))


def test_scene_and_refine_round_trip():
    spec = "\n".join([
        "rounds = 2", "transients = 0", "road_length = 12", "road_spacing = 0.1",
        "object_spacing = 0.1", "buildings_per_side = 1", "poles = 1", "traffic_lights = 0",
        "traffic_signs = 0", "trees = 1", "parked_cars = 1", "waypoints = 1,0;10,0",
    ])
    scene = semloc.generate_scene(spec)
    first = scene["round"] == 0
    xyz, cls = scene["xyz"][first], scene["class_id"][first]
    gt = scene["poses"][3]
    labels, depth = semloc.render(xyz, cls, gt, CAM)
    coarse = list(gt)
    coarse[0] += 0.3
    rep = semloc.refine(coarse, gt, depth, labels, CAM)
    assert rep["final_loss"] <= rep["initial_loss"]
    assert np.linalg.norm(np.subtract(rep["pose"][:3], gt[:3])) < 1e-3
