import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy import testing as npt

from chaoscorr.kt_classical import (kt_jacobian, kt_step, kt_trajectory, lyapunov_qr_product,
                                    max_lyapunov, phase_avg_lyapunov, sample_sphere, sphere_state,
                                    tangent_frame)

BETA = math.pi / 3
angles = st.tuples(st.floats(0.05, math.pi - 0.05), st.floats(-math.pi, math.pi))


def _rot_z(b):
    c, s = math.cos(b), math.sin(b)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def test_gamma_zero_is_z_rotation():
    s = sphere_state(1.1, 0.4)
    out = kt_step(s, BETA, 0.0)
    assert out[2] == pytest.approx(s[2], abs=1e-15)
    npt.assert_allclose(kt_jacobian(s, BETA, 0.0), _rot_z(BETA), atol=1e-15)


def test_pole_fixed_when_beta_zero():
    npt.assert_allclose(kt_step(np.array([0.0, 0.0, 1.0]), 0.0, 5.0), [0, 0, 1], atol=1e-15)


def test_rejects_off_sphere():
    with pytest.raises(ValueError):
        kt_step(np.array([1.0, 1.0, 0.0]), BETA, 1.0)


def test_step_matches_rotation_composition():
    s = sphere_state(0.7, 2.0)
    xr = _rot_z(BETA) @ s
    th = 2.3 * xr[0]
    rx = np.array([[1, 0, 0], [0, math.cos(th), -math.sin(th)], [0, math.sin(th), math.cos(th)]])
    npt.assert_allclose(kt_step(s, BETA, 2.3), rx @ xr, atol=1e-15)


def test_norm_preserved_long_run():
    s = sphere_state(1.0, 0.3)
    cb, sb = math.cos(BETA), math.sin(BETA)
    worst = 0.0
    for _ in range(100_000):
        s = kt_step(s, BETA, 7.0)
        worst = max(worst, abs(np.linalg.norm(s) - 1))
    assert worst < 1e-12


@given(angles)
def test_jacobian_finite_difference(a):
    s = sphere_state(*a)
    h = 1e-6
    fd = np.empty((3, 3))
    from chaoscorr.kt_classical import _step_raw
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        fd[:, k] = (_step_raw(s + e, math.cos(BETA), math.sin(BETA), 2.3)
                    - _step_raw(s - e, math.cos(BETA), math.sin(BETA), 2.3)) / (2 * h)
    assert np.abs(kt_jacobian(s, BETA, 2.3) - fd).max() < 1e-6


@given(angles, st.floats(0, 10))
def test_tangent_map_preserves_area(a, gamma):
    s = sphere_state(*a)
    jac = kt_jacobian(s, BETA, gamma)
    e_in = tangent_frame(s)
    e_out = tangent_frame(kt_step(s, BETA, gamma))
    # orientation-consistent frames: e2 = s x e1 on both sides
    block = e_out @ jac @ e_in.T
    assert abs(np.linalg.det(block) - 1) < 1e-8


def test_trajectory_shapes_and_ranges():
    traj = kt_trajectory(sample_sphere(5, np.random.default_rng(0)), 300, BETA, 3.0)
    assert traj.phi.shape == (5, 300) and traj.points().shape == (5, 300, 2)
    assert traj.phi.min() >= -math.pi and traj.phi.max() < math.pi
    assert np.abs(traj.cos_theta).max() <= 1


def test_trajectory_gamma_zero_constant_z():
    traj = kt_trajectory(sphere_state(0.9, 0.1), 100, BETA, 0.0)
    assert np.ptp(traj.cos_theta) < 1e-12


def test_trajectory_matches_single_steps():
    s = sphere_state(0.9, 0.1)
    traj = kt_trajectory(s, 20, BETA, 4.0)
    for k in range(20):
        s = kt_step(s, BETA, 4.0)
        assert traj.cos_theta[k] == pytest.approx(s[2], abs=1e-14)
        assert traj.phi[k] == pytest.approx(math.atan2(s[1], s[0]), abs=1e-14)


def test_lyapunov_integrable_zero():
    assert abs(max_lyapunov(sphere_state(1.0, 0.5), 100_000, BETA, 0.0)) < 2e-3


def test_lyapunov_chaotic_positive():
    assert max_lyapunov(sphere_state(1.0, 0.5), 5000, BETA, 7.0) > 0.3


def test_lyapunov_matches_qr_oracle():
    s = sphere_state(1.2, -0.7)
    lam = max_lyapunov(s, 10_000, BETA, 7.0)
    assert abs(lam - lyapunov_qr_product(s, 10_000, BETA, 7.0)) < 1e-3


def test_lyapunov_vectorized_matches_scalar():
    s = sample_sphere(4, np.random.default_rng(1))
    batch = max_lyapunov(s, 500, BETA, 3.0)
    for k in range(4):
        assert batch[k] == pytest.approx(max_lyapunov(s[k], 500, BETA, 3.0), abs=1e-12)


def test_sample_sphere_uniform_cos_theta():
    s = sample_sphere(200_000, np.random.default_rng(2))
    npt.assert_allclose(np.linalg.norm(s, axis=1), 1, atol=1e-14)
    counts, _ = np.histogram(s[:, 2], bins=10, range=(-1, 1))
    assert np.abs(counts / 20_000 - 1).max() < 0.03


def test_phase_avg_deterministic_and_validated():
    a = phase_avg_lyapunov(BETA, 3.0, 200, 200, seed=7)
    b = phase_avg_lyapunov(BETA, 3.0, 200, 200, seed=7)
    assert a == b
    with pytest.raises(ValueError):
        phase_avg_lyapunov(BETA, 3.0, 50, 200, seed=7)


@pytest.mark.slow
def test_phase_avg_two_seed_consistency():
    a = phase_avg_lyapunov(BETA, 3.0, 20_000, 1000, seed=1)
    b = phase_avg_lyapunov(BETA, 3.0, 20_000, 1000, seed=2)
    assert abs(a.mean - b.mean) < 3 * math.hypot(a.stderr, b.stderr)
