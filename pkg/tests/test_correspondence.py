import dataclasses
import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chaoscorr.correspondence import (POINTS_HEADER, CorrespondencePoint, SweepConfig, SweepError,
                                      correspondence_curve, emit_outputs, fit_correspondence, fit_sweep,
                                      run_sweep)
from chaoscorr.errors import ConfigError

Q_TRUE, K_TRUE = 3.8834, 2.9892


def _synthetic(n=20, noise=0.0, seed=0):
    x = np.linspace(0.05, 1.0, n)
    y = correspondence_curve(x, Q_TRUE, K_TRUE)
    if noise:
        y = y * (1 + noise * np.random.default_rng(seed).standard_normal(n))
    return np.column_stack([x, y])


def _tiny_kt(**kw):
    base = dict(controls=[0.2, 2.5, 7.0], sizes=[20], durations=[100, 200], ensemble=40, seed=3)
    base.update(kw)
    return SweepConfig(**base)


def test_fit_recovers_noiseless():
    fit = fit_correspondence(_synthetic())
    assert fit.converged
    assert abs(fit.q - Q_TRUE) < 1e-6 and abs(fit.kappa - K_TRUE) < 1e-6
    assert fit.rss < 1e-20


def test_fit_noisy_average():
    fits = [fit_correspondence(_synthetic(noise=0.01, seed=s)) for s in range(50)]
    assert abs(np.mean([f.q for f in fits]) - Q_TRUE) < 5e-3
    assert abs(np.mean([f.kappa for f in fits]) - K_TRUE) < 5e-3


def test_fit_monotone_and_shuffle_invariant():
    xy = _synthetic(noise=0.02, seed=4)
    fit = fit_correspondence(xy)
    assert fit.q > 0 and fit.kappa > 0
    x = np.linspace(1e-3, 1.2, 500)
    assert np.all(np.diff(fit.curve(x)) > 0)
    shuffled = fit_correspondence(xy[np.random.default_rng(1).permutation(len(xy))])
    assert shuffled.q == pytest.approx(fit.q, rel=1e-8)
    assert shuffled.kappa == pytest.approx(fit.kappa, rel=1e-8)


def test_fit_three_parameter_option():
    x = np.linspace(0.05, 1.0, 25)
    y = correspondence_curve(x, 3.0, 2.5, amplitude=1.05)
    fit = fit_correspondence(np.column_stack([x, y]), fit_amplitude=True)
    assert fit.amplitude == pytest.approx(1.05, abs=1e-5)


def test_fit_preconditions():
    with pytest.raises(ValueError):
        fit_correspondence(np.array([[0.5, 0.5]]))
    with pytest.raises(ValueError):
        fit_correspondence(np.array([[0.0, 0.1], [0.5, 0.5], [1.0, 1.0]]))


def test_point_invariants():
    with pytest.raises(ValueError):
        CorrespondencePoint(1.0, 0.0, 0.5, 0.0, 10, 100)
    with pytest.raises(ValueError):
        CorrespondencePoint(1.0, 0.5, -0.1, 0.0, 10, 100)


@pytest.mark.parametrize("bad", [dict(controls=[]), dict(ensemble=0), dict(model="ising"),
                                 dict(sizes=[3]), dict(durations=[10.5]), dict(controls=[-1.0])])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        _tiny_kt(**bad)


def test_config_unknown_key():
    with pytest.raises(ConfigError):
        SweepConfig.from_dict({"gamma_grid": [1.0]})


def _perturb(cfg, rng):
    d = cfg.semantic_dict()
    key = rng.choice(sorted(d))
    v = d[key]
    if isinstance(v, bool):
        d[key] = not v
    elif isinstance(v, int):
        d[key] = v + 2
    elif isinstance(v, float):
        d[key] = v * (1 + 1e-9) + 1e-12
    elif isinstance(v, list):
        d[key] = v + [v[-1] * 2 + 2]
    else:
        d[key] = "dicke" if v == "kicked_top" else "kicked_top"
    return d


def test_config_hash_sensitivity():
    cfg = _tiny_kt()
    h0 = cfg.config_hash()
    rng = np.random.default_rng(0)
    for _ in range(100):
        d = _perturb(cfg, rng)
        assert SweepConfig(**d).config_hash() != h0
    assert dataclasses.replace(cfg, out="elsewhere", workers=2).config_hash() == h0


def test_sweep_outputs_and_round_trip(tmp_path):
    cfg = _tiny_kt()
    result = run_sweep(cfg)
    assert len(result.points) == 3 * 2
    path = emit_outputs(result, fit_sweep(result), tmp_path)
    points = sorted(path.glob("points_*.csv"))
    assert len(points) == 2
    for p in points:
        assert p.read_text().splitlines()[0] == ",".join(POINTS_HEADER)
    summary = json.loads((path / "summary.json").read_text())
    assert SweepConfig.from_dict(summary["config"]) == cfg
    assert summary["fit_weighting"] == "unweighted"
    assert cfg.config_hash()[:12] in path.name
    assert (path / "spectra").is_dir() and (path / "distributions").is_dir()


def test_sweep_byte_identical(tmp_path):
    cfg = _tiny_kt()
    a = emit_outputs(run_sweep(cfg), None, tmp_path / "a")
    b = emit_outputs(run_sweep(cfg), None, tmp_path / "b")
    files = sorted(p.relative_to(a) for p in a.rglob("*.csv"))
    assert files
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_sweep_worker_independent():
    cfg = _tiny_kt()
    serial = run_sweep(cfg)
    parallel = run_sweep(dataclasses.replace(cfg, workers=2))
    assert [dataclasses.astuple(p) for p in serial.points] == [dataclasses.astuple(p) for p in parallel.points]


def test_sweep_error_carries_partial():
    cfg = SweepConfig(model="dicke", controls=[1.0, 0.5], sizes=[2], durations=[20.0], ensemble=3, n_tr=4)
    with pytest.raises(SweepError) as info:
        run_sweep(cfg)
    assert "control=1.0" in str(info.value)
    assert info.value.partial.points == []


def test_dicke_sweep_small():
    cfg = SweepConfig(model="dicke", controls=[0.3, 1.0], sizes=[10], durations=[60.0], ensemble=6,
                      n_tr=40, lo_offset=0.5, hi_offset=0.5)
    result = run_sweep(cfg)
    assert len(result.points) == 2
    assert all(c.traversal_time == pytest.approx(2 * math.pi, rel=0.1) for c in result.classical)
