import numpy as np
import pytest

from attitrack.sensing import GyroModel, unit_direction

B = [0.05, -0.05, 0.033]


def test_noise_free_measurement_is_exact():
    g = GyroModel(B)
    assert np.array_equal(g.measure(np.zeros(3), 0.001), B)
    w = np.array([0.3, -0.1, 2.0])
    for _ in range(100):
        assert np.array_equal(g.measure(w, 0.001), w + np.array(B))
    assert np.array_equal(g.b, B)


def test_noise_is_bounded():
    g = GyroModel(B, m1_max=0.01, m2_max=0.03, seed=7)
    prev_b = g.b.copy()
    for _ in range(5000):
        wg = g.measure(np.zeros(3), 0.001)
        r_g = wg - prev_b
        assert np.linalg.norm(r_g) <= 0.01 + 1e-15
        assert np.linalg.norm(g.last_r_b) <= 0.03 + 1e-15
        assert np.allclose(g.b, prev_b + 0.001 * g.last_r_b, atol=0, rtol=0)
        prev_b = g.b.copy()


def test_same_seed_same_stream():
    a = GyroModel(B, 0.01, 0.03, seed=2020)
    b = GyroModel(B, 0.01, 0.03, seed=2020)
    c = GyroModel(B, 0.01, 0.03, seed=2021)
    w = np.array([0.1, 0.2, 0.3])
    sa = np.array([a.measure(w, 0.001) for _ in range(5000)])
    sb = np.array([b.measure(w, 0.001) for _ in range(5000)])
    sc = np.array([c.measure(w, 0.001) for _ in range(5000)])
    assert np.array_equal(sa, sb)
    assert not np.array_equal(sa, sc)


def test_noise_statistics():
    g = GyroModel(np.zeros(3), m1_max=1.0, m2_max=0.0, seed=3)
    r = np.array([g.measure(np.zeros(3), 0.001) for _ in range(20000)])
    # scale uniform on [0, 1]: mean norm 1/2; isotropic direction: zero mean
    assert abs(np.mean(np.linalg.norm(r, axis=1)) - 0.5) < 0.01
    assert np.max(np.abs(r.mean(axis=0))) < 0.01


def test_unit_direction_and_validation():
    assert np.allclose(np.linalg.norm(unit_direction(np.array([3.0, 4.0, 0.0]))), 1.0)
    assert np.array_equal(unit_direction(np.zeros(3)), np.zeros(3))
    with pytest.raises(ValueError):
        GyroModel(B, m1_max=-1.0)
    with pytest.raises(ValueError):
        GyroModel(B).measure(np.zeros(3), 0.0)
