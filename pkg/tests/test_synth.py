import numpy as np
import pytest

from ckreg.liegroup import log_iso
from ckreg.synth import box_surface_cloud, perturbed_pair, square_outline_cloud


def test_box_surface_points_lie_on_faces():
    c = box_surface_cloud(0, n=400, side=0.18)
    assert c.points.shape == (400, 3)
    half = 0.09
    on_face = np.isclose(np.abs(c.points), half).any(axis=1)
    assert on_face.all()
    assert (np.abs(c.points) <= half + 1e-12).all()


def test_box_surface_labels_are_octant_indicators():
    c = box_surface_cloud(1, n=200)
    np.testing.assert_array_equal(c.labels, np.where(c.points > 0, 1.0, 0.0))


def test_square_outline_points_lie_on_edges():
    c = square_outline_cloud(2, n=150, side=0.2)
    assert c.points.shape == (150, 2)
    on_edge = np.isclose(np.abs(c.points), 0.1).any(axis=1)
    assert on_edge.all()
    np.testing.assert_array_equal(c.labels, np.where(c.points > 0, 1.0, 0.0))


def test_generators_are_reproducible():
    a = box_surface_cloud(7, n=100)
    b = box_surface_cloud(7, n=100)
    np.testing.assert_array_equal(a.points, b.points)
    np.testing.assert_array_equal(a.labels, b.labels)


def test_edge_bias_validated():
    with pytest.raises(ValueError):
        box_surface_cloud(0, edge_bias=1.0)
    with pytest.raises(ValueError):
        square_outline_cloud(0, edge_bias=-0.1)


def test_perturbed_pair_relation():
    x, z, h_true = perturbed_pair(5, n=120, angle_deg=6.0, offset=0.04)
    np.testing.assert_array_equal(z.points, h_true.act(x.points))
    np.testing.assert_array_equal(z.labels, x.labels)
    angle = log_iso(h_true).norms()[0]
    assert angle == pytest.approx(np.deg2rad(6.0), rel=1e-12)
    assert np.linalg.norm(h_true.t) == pytest.approx(0.04, rel=1e-12)
