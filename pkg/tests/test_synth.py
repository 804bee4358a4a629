import numpy as np
import pytest

from skelscan.synth import SynthSpec, generate, object_labels


def line_distances(points, truth):
    a, b = truth[0], truth[-1]
    u = (b - a) / np.linalg.norm(b - a)
    rel = points - a
    return np.linalg.norm(rel - np.outer(rel @ u, u), axis=1)


def test_noiseless_line_is_exact():
    spec = SynthSpec(kind="line", dim=6, j_structured=500, seed=11)
    data, truth = generate(spec)
    assert line_distances(data.points, truth).max() <= 1e-12


def test_counts():
    data, _ = generate(SynthSpec(kind="line", dim=3, j_structured=100, j_background=0))
    assert len(data) == 100
    data, _ = generate(SynthSpec(kind="plane", dim=4, j_structured=70, j_background=30))
    assert len(data) == 100


@pytest.mark.parametrize("kind", ["line", "polyline-curve", "plane", "clusters"])
def test_deterministic(kind):
    spec = SynthSpec(kind=kind, dim=5, j_structured=300, j_background=100,
                     noise_sigma=0.1, seed=2**63 + 5, n_objects=2, separation=1.0)
    a, ta = generate(spec)
    b, tb = generate(spec)
    assert a.points.tobytes() == b.points.tobytes()
    assert ta.tobytes() == tb.tobytes()
    c, _ = generate(SynthSpec(**{**spec.to_dict(), "seed": 1, "box": (0.0, 10.0)}))
    assert c.points.tobytes() != a.points.tobytes()


def test_noise_rms_concentrates():
    sigma, N = 0.05, 10
    data, truth = generate(SynthSpec(kind="line", dim=N, j_structured=6000, noise_sigma=sigma, seed=4))
    rms = np.sqrt(np.mean(line_distances(data.points, truth) ** 2))
    assert 0.8 * sigma * np.sqrt(N - 1) <= rms <= 1.2 * sigma * np.sqrt(N - 1)


def test_background_inside_box():
    spec = SynthSpec(kind="line", dim=4, j_structured=10, j_background=5000, box=(-2.0, 3.0))
    data, _ = generate(spec)
    bg = data.points[10:]
    assert bg.min() >= -2.0 and bg.max() <= 3.0


def test_plane_and_polyline_noiseless():
    data, truth = generate(SynthSpec(kind="plane", dim=5, j_structured=400, seed=9))
    c = truth.mean(axis=0)
    basis = np.linalg.svd(truth - c)[2][:2]
    rel = data.points - c
    assert np.abs(rel - (rel @ basis.T) @ basis).max() <= 1e-9

    data, truth = generate(SynthSpec(kind="polyline-curve", dim=4, j_structured=400, seed=9))
    # every point lies on one of the three polyline segments, which pass through truth anchors
    d = np.min(np.linalg.norm(data.points[:, None, :] - truth[None, :, :], axis=2), axis=1)
    assert d.max() <= 0.8 * 10 / (len(truth) - 1)


def test_parallel_lines_separation():
    spec = SynthSpec(kind="line", dim=8, j_structured=200, n_objects=2, separation=5.0, seed=1)
    data, truth = generate(spec)
    t1, t2 = np.split(truth, 2)
    assert np.allclose(np.linalg.norm(t1 - t2, axis=1), 5.0)
    labels = object_labels(spec)
    assert line_distances(data.points[labels == 1], t2).max() <= 1e-12


def test_clusters_snap():
    _, truth = generate(SynthSpec(kind="clusters", dim=3, n_objects=4, snap=0.5, j_structured=40))
    assert np.allclose(truth / 0.5, np.round(truth / 0.5))


def test_unknown_kind():
    with pytest.raises(ValueError, match="unknown kind"):
        SynthSpec(kind="spiral")
