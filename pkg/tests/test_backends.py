"""The numba kernels and the pure-numpy fallbacks must agree."""

import numpy as np
import pytest

import bregman_pr._kernels_numba as knb
import bregman_pr._kernels_numpy as knp
from bregman_pr import backend

KINDS = [(0, 0.0), (1, 0.0), (2, 0.0), (3, 0.5), (3, 1.7)]


@pytest.fixture
def restore_backend():
    name = backend.active_backend()
    yield
    backend.set_backend(name)


def test_selection_roundtrip(restore_backend):
    backend.set_backend("numpy")
    assert backend.active_backend() == "numpy"
    assert backend.kernels() is knp
    backend.set_backend("numba")
    assert backend.active_backend() == "numba"
    assert backend.kernels() is knb


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        backend.set_backend("cython")


def test_windowed_frames_agree():
    rng = np.random.default_rng(60)
    x = rng.standard_normal(500)
    win = rng.random(64)
    a = knb.windowed_frames(x, win, 32, 14)
    b = knp.windowed_frames(x, win, 32, 14)
    np.testing.assert_allclose(a, b, rtol=1e-15)


@pytest.mark.parametrize("dtype", [np.float64, np.complex128])
def test_overlap_add_agree(dtype):
    rng = np.random.default_rng(61)
    frames = rng.standard_normal((14, 64)).astype(dtype)
    if dtype is np.complex128:
        frames = frames + 1j * rng.standard_normal((14, 64))
    win = rng.random(64)
    a = knb.overlap_add(frames, win, 32, 14 * 32 + 64)
    b = knp.overlap_add(frames, win, 32, 14 * 32 + 64)
    assert a.dtype == b.dtype == dtype
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-300)


def test_unit_phase_agree():
    rng = np.random.default_rng(62)
    c = rng.standard_normal(200) + 1j * rng.standard_normal(200)
    c[::17] = 0.0
    a = knb.unit_phase(c, 1e-12)
    b = knp.unit_phase(c, 1e-12)
    np.testing.assert_allclose(a, b, rtol=1e-15)
    np.testing.assert_array_equal(a[::17], 1.0 + 0.0j)


@pytest.mark.parametrize("kind,beta", KINDS)
def test_elementwise_divergence_kernels_agree(kind, beta):
    rng = np.random.default_rng(63)
    v = rng.uniform(0.0, 8.0, 300)
    v[::13] = 0.0
    p = rng.uniform(0.0, 8.0, 300)
    eps = 1e-12
    assert knb.psi_sum(v, kind, beta, eps) == pytest.approx(
        knp.psi_sum(v, kind, beta, eps), rel=1e-12)
    np.testing.assert_allclose(knb.psi_grad(v, kind, beta, eps),
                               knp.psi_grad(v, kind, beta, eps), rtol=1e-13)
    np.testing.assert_allclose(knb.psi_hess(v, kind, beta, eps),
                               knp.psi_hess(v, kind, beta, eps), rtol=1e-13)
    assert knb.bregman_sum(p, v, kind, beta, eps) == pytest.approx(
        knp.bregman_sum(p, v, kind, beta, eps), rel=1e-10, abs=1e-10)
    for left in (True, False):
        np.testing.assert_allclose(
            knb.gradient_weights(v, p, kind, beta, eps, left),
            knp.gradient_weights(v, p, kind, beta, eps, left), rtol=1e-12)


def test_full_stack_matches_across_backends(restore_backend, cfg):
    from bregman_pr import (DivergenceSpec, Measurements, Objective,
                            SolverConfig, TimeSignal, run_gla,
                            run_bregman_gd, stft)
    rng = np.random.default_rng(64)
    samples = 0.3 * rng.standard_normal(5000)
    x = TimeSignal(samples, 22050)

    results = {}
    for name in ("numba", "numpy"):
        backend.set_backend(name)
        mags = stft(x, cfg).magnitudes()
        r = Measurements(mags, 1, 22050, cfg.hop, cfg.win_len)
        _, tg = run_gla(r, cfg, SolverConfig("gla", iterations=20, seed=1),
                        5000)
        r2 = Measurements(mags ** 2, 2, 22050, cfg.hop, cfg.win_len)
        obj = Objective(DivergenceSpec("kl"), 2, r2, cfg)
        _, tb = run_bregman_gd(
            SolverConfig("bregman_gd", objective=obj, step=0.5,
                         acceleration=0.99, iterations=20, seed=1), 5000)
        results[name] = (np.array(tg.spectral_convergence),
                         np.array(tb.objective))

    np.testing.assert_allclose(results["numba"][0], results["numpy"][0],
                               rtol=1e-10)
    # summation order differs between the backends (serial loop vs numpy
    # pairwise), and iterating amplifies the last-bit differences
    np.testing.assert_allclose(results["numba"][1], results["numpy"][1],
                               rtol=1e-6)


def test_env_variable_default(monkeypatch):
    monkeypatch.setenv("BREGMAN_PR_BACKEND", "numpy")
    assert backend._default_name() == "numpy"
    monkeypatch.setenv("BREGMAN_PR_BACKEND", "auto")
    assert backend._default_name() in ("numba", "numpy")
    monkeypatch.setenv("BREGMAN_PR_BACKEND", "fortran")
    with pytest.raises(ValueError):
        backend._default_name()
