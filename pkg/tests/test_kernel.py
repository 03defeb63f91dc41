import os
import subprocess
import sys

import numpy as np
import pytest

from ecdsep import BACKEND, _accel
from ecdsep.benchmarks import AckleyRegularized, QuadraticBasin, Zakharov
from ecdsep.core import RngStream
from ecdsep.optimizer import EcdHyperParams, run

needs_kernel = pytest.mark.skipif(not _accel.available(), reason="compiled kernel not built")

CASES = [
    (QuadraticBasin(4, 1.0, 1.0), np.ones(4), EcdHyperParams(eta=1, dt=0.1, nu=0.1, delta_e=2.0)),
    (QuadraticBasin(3, 0.5, 0.2), np.ones(3), EcdHyperParams(eta=3, dt=0.05, nu=0.0, wd=0.01)),
    (Zakharov(10), np.ones(10), EcdHyperParams(eta=1.2, dt=50.0, nu=1e-4, delta_e=1.0)),
    (AckleyRegularized(), np.array([-4.0, 3.0]), EcdHyperParams(eta=2.0, dt=0.05, nu=1e-3)),
    (QuadraticBasin(2, 1.0, 1.0), np.ones(2), EcdHyperParams(eta=1, s=0, delta_e=1.0, nu=0.02, conserve_energy=False)),
]


@needs_kernel
@pytest.mark.parametrize("obj, theta0, hp", CASES, ids=["basin", "basin-eta3-wd", "zakharov", "ackley", "s0"])
def test_kernel_matches_python(obj, theta0, hp):
    a_state, a = run(obj, theta0, hp, 300, RngStream(1), record_every=3, keep_theta=True, use_kernel=True)
    b_state, b = run(obj, theta0, hp, 300, RngStream(1), record_every=3, keep_theta=True, use_kernel=False)
    assert a_state.step == b_state.step and a_state.status == b_state.status
    assert np.allclose(a.data, b.data, rtol=1e-9, atol=1e-12, equal_nan=True)
    assert np.allclose(a.thetas, b.thetas, rtol=1e-9, atol=1e-12)
    assert np.allclose(a_state.pi, b_state.pi, rtol=1e-9, atol=1e-12)


@needs_kernel
def test_kernel_handles_many_random_blocks():
    # more steps than one pre-drawn block of normals
    obj = QuadraticBasin(3, 1.0, 1.0)
    hp = EcdHyperParams(eta=1, dt=0.1, nu=0.05)
    steps = _accel.Z_BLOCK * 2 + 17
    a_state, a = run(obj, np.ones(3), hp, steps, RngStream(2), record_every=97, use_kernel=True)
    b_state, b = run(obj, np.ones(3), hp, steps, RngStream(2), record_every=97, use_kernel=False)
    assert np.allclose(a.data, b.data, rtol=1e-8, atol=1e-10)


@needs_kernel
def test_kernel_convergence_status():
    hp = EcdHyperParams(eta=1, dt=0.5, nu=0.0, eps2=1e-3)
    a_state, a = run(QuadraticBasin(2), np.ones(2), hp, 1000, RngStream(0), use_kernel=True)
    b_state, b = run(QuadraticBasin(2), np.ones(2), hp, 1000, RngStream(0), use_kernel=False)
    assert a_state.terminated and a_state.status == b_state.status and a_state.step == b_state.step


def test_backend_reported():
    assert BACKEND in ("cython", "python")


def test_pure_python_fallback_selected_by_environment():
    env = dict(os.environ, ECDSEP_PURE_PYTHON="1")
    code = (
        "import numpy as np, ecdsep; from ecdsep.benchmarks import QuadraticBasin;"
        "s, log = ecdsep.run(QuadraticBasin(1), [1.0], ecdsep.EcdHyperParams(eta=1, dt=0.4, nu=0),"
        " 1, ecdsep.RngStream(0)); print(ecdsep.BACKEND, repr(log[0].theta_norm))"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, theta = out.stdout.split()
    assert backend == "python"
    assert float(theta) == pytest.approx(0.6097560975609756, abs=1e-12)


def test_kernel_rejects_batch_tokens():
    with pytest.raises(ValueError):
        run(QuadraticBasin(1), [1.0], EcdHyperParams(eta=1), 5, RngStream(0), batch_tokens=range(5), use_kernel=True)
