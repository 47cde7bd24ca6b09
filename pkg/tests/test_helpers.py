import numpy as np
import pytest
from hypothesis import given, strategies as st

from chaoscorr.errors import NumericalError
from chaoscorr.io import fmt, read_csv, write_csv, write_json
from chaoscorr.ode import integrate_ensemble
from chaoscorr.rng import task_rng


def _oscillator(y):
    return np.column_stack([y[:, 1], -y[:, 0]])


def test_task_rng_streams():
    a = task_rng(7, "kt", 3).random(5)
    assert np.array_equal(a, task_rng(7, "kt", 3).random(5))
    assert not np.array_equal(a, task_rng(7, "kt", 4).random(5))
    assert not np.array_equal(a, task_rng(8, "kt", 3).random(5))
    assert not np.array_equal(a, task_rng(7, "dicke", 3).random(5))


@given(st.floats(-1e300, 1e300, allow_nan=False))
def test_fmt_round_trip(x):
    assert float(fmt(x)) == x


def test_fmt_integers():
    assert fmt(3) == "3" and fmt(np.int64(-2)) == "-2" and fmt(True) == "1"
    assert fmt(0.5) == "5.0000000000000000e-01"


def test_csv_and_json(tmp_path):
    p = write_csv(tmp_path / "d" / "x.csv", ["a", "b"], [(1, 0.25), (2, -1e-300)], comments=["note"])
    header, data = read_csv(p)
    assert header == ["a", "b"]
    assert data.tolist() == [[1.0, 0.25], [2.0, -1e-300]]
    j = write_json(tmp_path / "s.json", {"x": np.float64(1.5), "n": np.int32(2), "v": np.arange(2)})
    assert '"n": 2' in j.read_text()
    with pytest.raises(TypeError):
        write_json(tmp_path / "bad.json", {"x": object()})


def test_harmonic_oscillator_accuracy():
    theta = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    y0 = np.column_stack([np.cos(theta), np.sin(theta)])
    sol = integrate_ensemble(_oscillator, y0, 50.0, rtol=1e-12, atol=1e-12)
    t = 50.0
    exact = np.column_stack([np.cos(theta - t), np.sin(theta - t)])
    assert np.max(np.abs(sol.y_final - exact)) < 1e-9
    back = integrate_ensemble(_oscillator, sol.y_final, -50.0, rtol=1e-12, atol=1e-12)
    assert back.t_final == -50.0
    assert np.max(np.abs(back.y_final - y0)) < 1e-9


def test_save_every_and_stride_hook():
    y0 = np.array([[1.0, 0.0]])
    sol = integrate_ensemble(_oscillator, y0, 3.0, save_every=0.5)
    assert np.allclose(sol.ts, np.arange(0, 3.01, 0.5), atol=1e-12)
    assert np.allclose(sol.ys[:, 0, 0], np.cos(sol.ts), atol=1e-8)
    seen = []

    def hook(t, y):
        seen.append(t)
        return y / np.linalg.norm(y, axis=1, keepdims=True)

    integrate_ensemble(_oscillator, y0, 2.0, save_every=1.0, stride_hook=hook)
    assert seen == pytest.approx([1.0, 2.0])


def test_blowup_is_reported():
    with pytest.raises(NumericalError):
        integrate_ensemble(lambda y: y ** 2, np.array([[1.0]]), 2.0, max_steps=100000)
    with pytest.raises(ValueError):
        integrate_ensemble(_oscillator, np.zeros(2), 1.0)
