import numpy as np
import pytest

import dtaformer as dt


def test_softmax_rows_sum_to_one():
    x = np.random.default_rng(0).normal(size=(4, 5))
    s = dt.softmax(x, axis="row")
    assert np.allclose(s.sum(axis=1), 1.0)
    assert (s > 0).all()


def test_softmax_rejects_bad_axis():
    with pytest.raises(Exception):
        dt.softmax(np.zeros((2, 2)), axis="diag")


def test_fps_square_corners():
    xyz = np.array([[0.0, 0, 0], [0.1, 0, 0], [0, 0.1, 0], [1, 1, 0]])
    assert dt.fps(xyz, 2) == [0, 3]


def test_wca_map_is_row_stochastic():
    rng = np.random.default_rng(1)
    q, k = rng.normal(size=(3, 4)), rng.normal(size=(6, 4))
    pi = rng.uniform(size=(6, 1))
    bias = rng.normal(size=(3, 6))
    wm = dt.wca_map(q, k, pi, bias)
    assert wm.shape == (3, 6)
    assert np.allclose(wm.sum(axis=1), 1.0)


def test_vca_is_wca_with_ones():
    rng = np.random.default_rng(2)
    q, k = rng.normal(size=(2, 4)), rng.normal(size=(5, 4))
    bias = rng.normal(size=(2, 5))
    assert np.allclose(dt.vca_map(q, k, bias),
                       dt.wca_map(q, k, np.ones((5, 1)), bias))


def test_reconstruct_shapes_and_residual():
    rng = np.random.default_rng(3)
    s = rng.normal(size=(2, 4))
    t = rng.normal(size=(5, 4))
    wm = dt.softmax(rng.normal(size=(2, 5)), axis="row")
    out = dt.reconstruct(s, t, wm)
    assert out.shape == (5, 4)
    w = dt.softmax(wm.T, axis="row")
    assert np.allclose(out, w @ s + t)


def test_aggregate_matches_matmul():
    rng = np.random.default_rng(4)
    wm = dt.softmax(rng.normal(size=(2, 5)), axis="row")
    v = rng.normal(size=(5, 3))
    assert np.allclose(dt.aggregate(wm, v), wm @ v)


def test_normalize_bounds():
    rng = np.random.default_rng(5)
    pts = rng.uniform(0, 20, size=(50, 6))
    out, labels = dt.normalize(pts, [0] * 50)
    # XYZ is centroid-centered and scaled by half the max extent, so the
    # magnitude bound is 2; radiometric channels are min-maxed into [0,1].
    assert np.abs(out[:, :3]).max() <= 2.0 + 1e-12
    assert np.allclose(out[:, :3].mean(axis=0), 0.0)
    assert out[:, 3:].min() >= -1e-12 and out[:, 3:].max() <= 1.0 + 1e-12


def test_grid_subsample_keeps_representatives():
    pts = np.array([[0.0, 0, 0, 1], [0.01, 0, 0, 2], [5, 5, 5, 3]])
    out, kept = dt.grid_subsample(pts, 1.0)
    assert out.shape[0] == 2
    assert len(kept) == 2


def test_synth_is_deterministic():
    a = dt.synth(2, 64, 6, 9)
    b = dt.synth(2, 64, 6, 9)
    assert len(a) == 2
    for (pa, la), (pb, lb) in zip(a, b):
        assert np.array_equal(pa, pb) and la == lb
        assert pa.shape == (64, 6)
        assert all(0 <= v < 6 for v in la)


def test_metrics_perfect_prediction():
    m = dt.metrics([0, 1, 2, 1], [0, 1, 2, 1], 3)
    assert m["oa"] == 100.0 and m["miou"] == 100.0 and m["avg_f1"] == 100.0


def test_f1_from_pr():
    assert dt.f1_from_pr(93.1, 82.5) == pytest.approx(87.5, abs=0.05)


def test_interpolate_midpoint():
    s = np.array([[0.0, 0.0], [1.0, 1.0]])
    sc = np.array([[0.0, 0, 0], [1, 0, 0]])
    tc = np.array([[0.5, 0.0, 0.0]])
    assert np.allclose(dt.interpolate(s, sc, tc, "trilinear"), [[0.5, 0.5]])
