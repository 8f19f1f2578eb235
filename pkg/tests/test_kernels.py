"""Compiled and pure-Python kernels must agree bit for bit."""
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lscdsim import _kernels_py, _layout, lscd, sprt
from lscdsim.lscd import NEVER, LocationConfig, Scenario, StartState, UavConfig, simulate_run
from lscdsim.models import GaussianPair, Regime
from lscdsim.seeding import generator

_kernels = pytest.importorskip("lscdsim._kernels")
BACKENDS = [_kernels_py, _kernels]


def test_layout_matches_compiled_indices():
    names = {k: v for k, v in vars(_layout).items() if k.isupper()}
    assert names == _kernels.LAYOUT


def test_default_backend_is_compiled():
    import lscdsim

    assert lscdsim.BACKEND == "cython"


def test_env_var_forces_pure_python():
    env = dict(os.environ, LSCDSIM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import lscdsim; print(lscdsim.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def _run_cycles(k, z, gamma, w0, count, max_steps=10**6):
    top = np.zeros(count, dtype=np.int8)
    dur = np.zeros(count, dtype=np.int64)
    term = np.zeros(count, dtype=np.float64)
    res = k.run_cycles(z, gamma, w0, count, max_steps, top, dur, term, 0)
    return tuple(res), top, dur, term


@pytest.mark.parametrize("gamma,w0", [(1.0, 0.0), (4.0, 2.5), (0.3, 0.1)])
def test_run_cycles_agree(gamma, w0):
    z = np.random.default_rng(0).normal(-0.5, 1.3, 20_000)
    a = _run_cycles(_kernels_py, z, gamma, w0, 5000)
    b = _run_cycles(_kernels, z, gamma, w0, 5000)
    assert a[0] == b[0]
    for x, y in zip(a[1:], b[1:]):
        assert np.array_equal(x, y)


def test_run_cycles_truncation_agrees():
    z = np.zeros(100)
    assert _run_cycles(_kernels_py, z, 1.0, 0.5, 3, max_steps=10)[0] == _run_cycles(_kernels, z, 1.0, 0.5, 3, max_steps=10)[0]


def test_first_ascents_agree():
    z = np.random.default_rng(1).normal(-1.0, 1.0, 10_000)
    outs = []
    for k in BACKENDS:
        out = np.zeros(10_000, dtype=np.int64)
        outs.append((k.first_ascents(z, out, 0), out))
    assert outs[0][0] == outs[1][0]
    assert np.array_equal(outs[0][1], outs[1][1])


def _with_backend(monkeypatch, k, fn):
    monkeypatch.setattr(lscd, "kernels", k)
    monkeypatch.setattr(sprt, "kernels", k)
    return fn()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 4), st.integers(1, 4), st.integers(0, 5),
       st.floats(0.5, 4.0), st.floats(0.5, 4.0), st.sampled_from(["never", "a0", "a7", "b3", "g20"]),
       st.sampled_from(["A", "B"]), st.booleans())
def test_simulate_run_agrees(seed, n_a, n_b, tau, ga, gb, scen, start, dismiss):
    m = GaussianPair(0.0, 1.5, 1.0)
    scenario = {"never": NEVER, "a0": Scenario(nu_a=0), "a7": Scenario(nu_a=7), "b3": Scenario(nu_b=3),
                "g20": Scenario(nu_b=20, clock="global")}[scen]
    a, b = LocationConfig(ga, n_a, m), LocationConfig(gb, n_b, m)
    extra = {"dismiss": ("A",)} if dismiss and scenario.changed == "B" else {}
    results = []
    for k in BACKENDS:
        with pytest.MonkeyPatch.context() as mp:
            results.append(_with_backend(mp, k, lambda: simulate_run(
                a, b, UavConfig(tau), scenario, start, generator(seed, 1), horizon=5000, **extra)))
    assert results[0] == results[1]


def test_traveling_start_and_pause_agree(monkeypatch):
    m = GaussianPair(0.0, 2.0, 1.0)
    loc = LocationConfig(3.0, 2, m)
    start = StartState("A", traveling=True, travel_left=4)
    out = [_with_backend(monkeypatch, k, lambda: simulate_run(loc, loc, UavConfig(4), Scenario(nu_a=2, clock="global"),
                                                             start, generator(3, 1))) for k in BACKENDS]
    assert out[0] == out[1]


def test_simulate_cycles_agree(monkeypatch, gauss):
    out = [_with_backend(monkeypatch, k, lambda: sprt.simulate_cycles(gauss, Regime.PRE, 3.0, 1.0, 3000, generator(5, 2)))
           for k in BACKENDS]
    assert np.array_equal(out[0].top, out[1].top)
    assert np.array_equal(out[0].duration, out[1].duration)
    assert np.array_equal(out[0].terminal, out[1].terminal)
