import os
import subprocess
import sys

import numpy as np
import pytest

from wc4dvar import _pykernels, kernels
from wc4dvar.models import Lorenz96Model, ModelGrid

ck = kernels.compiled_backend
needs_compiled = pytest.mark.skipif(ck is None, reason="compiled kernels not built")


def l96_case(n=20, N=15, m=4, seed=0):
    rng = np.random.default_rng(seed)
    x0 = 8.0 + rng.standard_normal(n)
    eta = 0.1 * rng.standard_normal((N, n))
    P = rng.standard_normal((N + 1, n, m))
    return x0, eta, P


@needs_compiled
def test_l96_backends_agree():
    x0, eta, P = l96_case()
    sp, kp = _pykernels.l96_integrate(x0, eta, 0.025, 8.0)
    sc, kc = ck.l96_integrate(x0, eta, 0.025, 8.0)
    np.testing.assert_allclose(sc, sp, rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(np.asarray(kc), np.asarray(kp), rtol=1e-13, atol=1e-12)
    np.testing.assert_allclose(ck.l96_forward(kp, P, 0.025), _pykernels.l96_forward(kp, P, 0.025),
                               rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(ck.l96_backward(kp, P, 0.025),
                               _pykernels.l96_backward(kp, P, 0.025), rtol=1e-12, atol=1e-12)


@needs_compiled
def test_advection_backends_agree():
    rng = np.random.default_rng(1)
    x0, eta = rng.standard_normal(16), rng.standard_normal((9, 16))
    P = rng.standard_normal((10, 16, 3))
    np.testing.assert_allclose(ck.advection_integrate(x0, eta, 0.7),
                               _pykernels.advection_integrate(x0, eta, 0.7), atol=1e-14)
    np.testing.assert_allclose(ck.advection_forward(P, 0.7),
                               _pykernels.advection_forward(P, 0.7), atol=1e-13)
    np.testing.assert_allclose(ck.advection_backward(P, 0.7),
                               _pykernels.advection_backward(P, 0.7), atol=1e-13)


def test_active_backend_name():
    assert kernels.BACKEND == ("cython" if ck is not None else "python")


def test_pure_python_switch():
    env = dict(os.environ, WC4DVAR_PURE_PYTHON="1")
    code = ("import wc4dvar.kernels as k, wc4dvar._pykernels as p; "
            "assert k.BACKEND == 'python' and k.l96_forward is p.l96_forward; print('ok')")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert out.stdout.strip() == "ok"


def test_window_sweeps_adjoint_under_active_backend():
    x0, eta, P = l96_case(seed=2)
    m = Lorenz96Model(ModelGrid(20, 15, 0.025), 8.0)
    traj = m.integrate(x0, eta)
    V = np.random.default_rng(3).standard_normal(P.shape)
    lhs = np.sum(m.tangent_sweep(traj, P) * V)
    rhs = np.sum(P * m.adjoint_sweep(traj, V))
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)
