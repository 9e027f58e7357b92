import math
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy import linalg

from fermimirror import dynamics, kernels
from fermimirror.dynamics import (
    SimConfig, Trajectory, branch_state, ensemble_periodogram, iter_linear_batches, periodogram,
    simulate_linear, simulate_meanfield,
)
from fermimirror.effmodel import EffectiveModel
from fermimirror.errors import ConfigError, NumericalError, UnstableStateError
from fermimirror.stability import drift
from fermimirror.steady import fold_values, steady_states

HAVE_C = "cython" in kernels.BACKENDS


def stable_case():
    m = EffectiveModel.synthetic(1.0, 0.05, 1.0, delta=1.25, eta=math.sqrt(50))
    return m, steady_states(m)[0]


@pytest.mark.skipif(not HAVE_C, reason="compiled kernels not built")
def test_rk4_backends_agree():
    y0 = np.array([0.1, -0.2, 1.5, 0.3])
    outs = []
    for name in ("python", "cython"):
        out = np.zeros((101, 4))
        fin, done = kernels.get(name).rk4_meanfield(y0, 1.3, 0.2, 2.0, 1.0, 2.5, 1e-3, 1000, 10, out)
        outs.append((np.asarray(fin), done, out))
    assert outs[0][1] == outs[1][1] == 1000
    np.testing.assert_allclose(outs[0][0], outs[1][0], rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(outs[0][2], outs[1][2], rtol=1e-12, atol=1e-14)


@pytest.mark.skipif(not HAVE_C, reason="compiled kernels not built")
def test_em_backends_agree():
    rng = np.random.default_rng(0)
    J = drift(1.2, 0.8, 1.0, 0.1, 1.0)
    B = np.zeros((4, 2))
    B[2:, :] = np.sqrt(2.0) * np.eye(2)
    normals = rng.standard_normal((3, 500, 2))
    res = []
    for name in ("python", "cython"):
        X = np.zeros((3, 4))
        out = np.zeros((3, 167, 4))
        ok = kernels.get(name).em_linear(J, B, X, 1e-3, normals, 3, out)
        res.append((ok, X, out))
    assert res[0][0] and res[1][0]
    np.testing.assert_allclose(res[0][1], res[1][1], rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(res[0][2], res[1][2], rtol=1e-12, atol=1e-15)


def test_rk4_divergence_reported():
    out = np.zeros((10, 4))
    fin, done = kernels.get("python").rk4_meanfield(
        np.array([0, 0, 1e11, 0]), 1.0, 0.0, 0.0, -50.0, 0.0, 0.1, 10, 1, out)
    assert done < 10


def test_backend_env_override():
    code = "from fermimirror import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, FERMIMIRROR_PURE="1")
    r = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert r.stdout.strip() == "python"


def test_steady_state_is_fixed_point():
    m = EffectiveModel.synthetic(1.0, 0.2, 1.0, delta=3.0)
    lo, hi = fold_values(m, "eta", 3.0)
    eta = 0.5 * (lo + hi)
    for b in steady_states(m, eta=eta):
        y0 = branch_state(m, b)
        tr = simulate_meanfield(m, eta, m.delta, y0, SimConfig(0.01, 200, record_every=50))
        np.testing.assert_allclose(tr.final, y0, rtol=1e-11, atol=1e-11)


def test_meanfield_converges_from_perturbation():
    m, b = stable_case()
    y0 = branch_state(m, b) * 1.01
    tr = simulate_meanfield(m, m.eta, m.delta, y0, SimConfig(0.01, 200_000, record_every=1000))
    n = tr.final[2] ** 2 + tr.final[3] ** 2
    assert n == pytest.approx(b.n, rel=1e-6)
    assert tr.states.shape == (200, 4)


def test_step_size_guard():
    m, b = stable_case()
    with pytest.raises(ConfigError, match="time step"):
        simulate_meanfield(m, m.eta, m.delta, None, SimConfig(1.0, 10))
    with pytest.raises(ConfigError, match="time step"):
        simulate_linear(m, b, SimConfig(1.0, 10))


def test_linear_rejects_unstable():
    m = EffectiveModel.synthetic(1.0, 0.2, 1.0, delta=3.0)
    lo, hi = fold_values(m, "eta", 3.0)
    mid = steady_states(m, eta=0.5 * (lo + hi))[1]
    with pytest.raises(UnstableStateError):
        simulate_linear(m, mid, SimConfig(0.01, 10))


@pytest.mark.parametrize("kw", [
    dict(dt=0.0), dict(steps=0), dict(ensemble=0), dict(seed=-1), dict(burn_in=1.0),
    dict(record_every=0), dict(initial=(0, 0)), dict(noise="thermal"),
])
def test_simconfig_validation(kw):
    base = dict(dt=0.01, steps=10)
    base.update(kw)
    with pytest.raises(ConfigError):
        SimConfig(**base)


def test_members_independent_of_batching_and_size():
    m, b = stable_case()
    cfg = SimConfig(0.01, 300, ensemble=5, seed=11, record_every=2)
    full = simulate_linear(m, b, cfg)
    batches = [st for _, st, _ in iter_linear_batches(m, b, cfg, batch=2)]
    np.testing.assert_array_equal(full.states, np.concatenate(batches))
    small = simulate_linear(m, b, SimConfig(0.01, 300, ensemble=2, seed=11, record_every=2))
    np.testing.assert_array_equal(full.states[:2], small.states)


def test_chunked_draws_equal_single_draw(monkeypatch):
    m, b = stable_case()
    cfg = SimConfig(0.01, 1000, ensemble=2, seed=3, record_every=3, burn_in=0.25)
    whole = simulate_linear(m, b, cfg)
    monkeypatch.setattr(dynamics, "_CHUNK", 64)
    chunked = simulate_linear(m, b, cfg)
    np.testing.assert_array_equal(whole.states, chunked.states)
    np.testing.assert_array_equal(whole.final, chunked.final)
    assert len(whole.t) == whole.states.shape[1]
    assert whole.t[0] >= 0.25 * 1000 * 0.01 - 1e-12


def test_seed_determinism():
    m, b = stable_case()
    cfg = SimConfig(0.01, 200, ensemble=2, seed=7)
    a, c = simulate_linear(m, b, cfg), simulate_linear(m, b, cfg)
    np.testing.assert_array_equal(a.states, c.states)
    d = simulate_linear(m, b, SimConfig(0.01, 200, ensemble=2, seed=8))
    assert not np.array_equal(a.states, d.states)


def test_linear_covariance_matches_lyapunov():
    m, b = stable_case()
    J = drift(b.c_s, b.delta_tilde, m.omega_m, m.g, m.kappa)
    D = np.zeros((4, 4))
    D[2:, 2:] = 2 * m.kappa * np.eye(2)
    C = linalg.solve_continuous_lyapunov(J, -D)
    cfg = SimConfig(0.005, 40_000, ensemble=40, seed=2, burn_in=0.2, record_every=10)
    tr = simulate_linear(m, b, cfg)
    emp = np.einsum("eti,etj->ij", tr.states, tr.states) / (tr.states.shape[0] * tr.states.shape[1])
    for i in range(4):
        assert emp[i, i] == pytest.approx(C[i, i], rel=0.1)


def test_periodogram_white_noise_level():
    rng = np.random.default_rng(0)
    dt, sigma2 = 0.01, 3.0
    x = rng.normal(scale=math.sqrt(sigma2 / dt), size=(20, 8192))
    tr = Trajectory("linear", np.arange(8192) * dt, x[..., None], ("x",), 0, x[:, -1:])
    es = periodogram(tr, "x", segments=8)
    assert es.members == 20
    assert np.mean(es.density) == pytest.approx(sigma2, rel=0.02)
    assert es.bin_width == pytest.approx(2 * math.pi / (dt * 1024))


def test_periodogram_validation():
    with pytest.raises(ConfigError):
        periodogram(np.zeros(100), 0, segments=2, dt=0.1)
    with pytest.raises(ConfigError):
        periodogram(np.zeros(20), 0, segments=8, dt=0.1)
    with pytest.raises(ConfigError):
        periodogram(np.zeros(100), 0)


def test_ensemble_periodogram_equals_batch_route():
    m, b = stable_case()
    cfg = SimConfig(0.01, 4096, ensemble=6, seed=4, record_every=2)
    a = ensemble_periodogram(m, b, cfg, "X_M", segments=4, batch=4)
    c = periodogram(simulate_linear(m, b, cfg), "X_M", segments=4)
    np.testing.assert_allclose(a.density, c.density, rtol=1e-12)


def test_nonfinite_linear_run():
    m, b = stable_case()
    cfg = SimConfig(0.01, 10, initial=(np.inf, 0, 0, 0))
    with pytest.raises(NumericalError):
        simulate_linear(m, b, cfg)
