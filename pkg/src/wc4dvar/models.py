"""Discrete dynamical models, their tangent-linear and adjoint steps, and the
direct observation operator.

Two models are provided: the first-order upwind discretisation of linear
advection on a periodic domain, and the Lorenz 96 system integrated with
classical RK4.  Tangent-linear models are the exact Jacobians of the discrete
step maps, so adjoints are exact transposes.

Window sweeps (the forward tangent-linear substitution through the whole
window and its adjoint) dispatch to :mod:`wc4dvar.kernels`.
"""
from dataclasses import dataclass

import numpy as np

from . import _pykernels, kernels


@dataclass(frozen=True)
class ModelGrid:
    """``n`` grid points, ``N`` steps (window times t_0..t_N), step ``dt``."""

    n: int
    N: int
    dt: float

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"need n >= 4 grid points, got {self.n}")
        if self.N < 0:
            raise ValueError(f"need N >= 0 steps, got {self.N}")
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")

    @property
    def dx(self):
        return 1.0 / self.n

    @property
    def size(self):
        """Length of a window vector, n(N+1)."""
        return self.n * (self.N + 1)


@dataclass(frozen=True)
class Trajectory:
    """Nonlinear trajectory over the window plus whatever the tangent-linear
    model needs to be evaluated around it (RK4 stage inputs for Lorenz 96)."""

    states: np.ndarray
    stages: np.ndarray = None


def _check_state(x, n, name="state"):
    x = np.asarray(x, dtype=float)
    if x.shape[0] != n:
        raise ValueError(f"{name} has leading dimension {x.shape[0]}, expected {n}")
    return x


def _check_window(P, grid):
    P = np.asarray(P, dtype=float)
    if P.ndim != 3 or P.shape[:2] != (grid.N + 1, grid.n):
        raise ValueError(f"window block must have shape ({grid.N + 1}, {grid.n}, m), got {P.shape}")
    return np.ascontiguousarray(P)


def _zero_forcing(grid, eta):
    if eta is None:
        return np.zeros((grid.N, grid.n))
    eta = np.asarray(eta, dtype=float)
    if eta.shape != (grid.N, grid.n):
        raise ValueError(f"model error must have shape ({grid.N}, {grid.n}), got {eta.shape}")
    return np.ascontiguousarray(eta)


@dataclass(frozen=True)
class AdvectionModel:
    """First-order upwind scheme for u_t + u_z = 0 with periodic boundaries.

    The Courant number is ``grid.dt / grid.dx``.
    """

    grid: ModelGrid

    def __post_init__(self):
        if not 0.0 < self.courant <= 1.0:
            raise ValueError(f"upwind scheme unstable for Courant number {self.courant}")

    @property
    def courant(self):
        return self.grid.dt / self.grid.dx

    def step(self, u):
        return advection_step(u, self)

    def tlm_step(self, x, du):
        return advection_step(du, self)

    def adjoint_step(self, x, lam):
        lam = _check_state(lam, self.grid.n, "adjoint vector")
        return _pykernels.advection_apply_T(lam, self.courant)

    def integrate(self, x0, eta=None):
        x0 = _check_state(x0, self.grid.n)
        states = kernels.advection_integrate(x0, _zero_forcing(self.grid, eta), self.courant)
        if not np.all(np.isfinite(states)):
            raise FloatingPointError("advection integration produced non-finite values")
        return Trajectory(states)

    def tangent_sweep(self, traj, P):
        return kernels.advection_forward(_check_window(P, self.grid), self.courant)

    def adjoint_sweep(self, traj, V):
        return kernels.advection_backward(_check_window(V, self.grid), self.courant)


@dataclass(frozen=True)
class Lorenz96Model:
    grid: ModelGrid
    forcing: float = 8.0

    def step(self, x):
        return lorenz96_step(x, self)

    def tlm_step(self, x, dx):
        return lorenz96_tlm_step(x, dx, self)

    def adjoint_step(self, x, lam):
        x = _check_state(x, self.grid.n)
        lam = _check_state(lam, self.grid.n, "adjoint vector")
        _, stages = _pykernels.l96_rk4_stages(x, self.grid.dt, self.forcing)
        return _pykernels.l96_adj_step(stages, lam, self.grid.dt)

    def integrate(self, x0, eta=None):
        x0 = _check_state(x0, self.grid.n)
        states, stages = kernels.l96_integrate(
            x0, _zero_forcing(self.grid, eta), self.grid.dt, self.forcing)
        if not np.all(np.isfinite(states)):
            raise FloatingPointError("Lorenz 96 integration produced non-finite values")
        return Trajectory(states, stages)

    def tangent_sweep(self, traj, P):
        return kernels.l96_forward(traj.stages, _check_window(P, self.grid), self.grid.dt)

    def adjoint_sweep(self, traj, V):
        return kernels.l96_backward(traj.stages, _check_window(V, self.grid), self.grid.dt)


@dataclass(frozen=True)
class IdentityModel:
    """M = I.  Useful as a zero-coupling stub in tests and toy problems."""

    grid: ModelGrid

    def step(self, x):
        return np.array(_check_state(x, self.grid.n), copy=True)

    def tlm_step(self, x, dx):
        return np.array(_check_state(dx, self.grid.n), copy=True)

    def adjoint_step(self, x, lam):
        return np.array(_check_state(lam, self.grid.n), copy=True)

    def integrate(self, x0, eta=None):
        eta = _zero_forcing(self.grid, eta)
        x0 = _check_state(x0, self.grid.n)
        states = np.vstack([x0, x0 + np.cumsum(eta, axis=0)])
        return Trajectory(states)

    def tangent_sweep(self, traj, P):
        return np.cumsum(_check_window(P, self.grid), axis=0)

    def adjoint_sweep(self, traj, V):
        V = _check_window(V, self.grid)
        return np.cumsum(V[::-1], axis=0)[::-1].copy()


def advection_step(u, model):
    """One upwind step: u'_j = u_j - C (u_j - u_{j-1}), periodic indices."""
    u = _check_state(u, model.grid.n)
    return _pykernels.advection_apply(u, model.courant)


def lorenz96_rhs(x, forcing=8.0):
    """Lorenz 96 tendency -x_{j-2} x_{j-1} + x_{j-1} x_{j+1} - x_j + F."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] < 4:
        raise ValueError(f"Lorenz 96 needs at least 4 variables, got {x.shape[0]}")
    return _pykernels.l96_tendency(x, forcing)


def lorenz96_step(x, model):
    x = _check_state(x, model.grid.n)
    x_new, _ = _pykernels.l96_rk4_stages(x, model.grid.dt, model.forcing)
    return x_new


def lorenz96_tlm_step(x, dx, model):
    """Jacobian of the RK4 step at ``x`` applied to ``dx`` (may be (n, m))."""
    x = _check_state(x, model.grid.n)
    dx = _check_state(dx, model.grid.n, "perturbation")
    _, stages = _pykernels.l96_rk4_stages(x, model.grid.dt, model.forcing)
    return _pykernels.l96_tlm_step(stages, dx, model.grid.dt)


def model_adjoint_step(x, lam, model):
    """Transpose of the tangent-linear step of ``model`` at ``x``."""
    return model.adjoint_step(x, lam)


@dataclass(frozen=True)
class ObservationNetwork:
    """Direct observations of every ``space_stride``-th variable at every
    ``time_stride``-th step, counted back from the final step t_N.

    The initial time t_0 carries no observations.  ``enabled=False`` gives
    an empty network (q = 0).
    """

    n: int
    N: int
    space_stride: int
    time_stride: int
    enabled: bool = True

    @classmethod
    def empty(cls, n, N):
        return cls(n, N, 1, 1, enabled=False)

    def __post_init__(self):
        if not self.enabled:
            return
        if not 1 <= self.space_stride <= self.n:
            raise ValueError(f"space stride {self.space_stride} inconsistent with n={self.n}")
        if not 1 <= self.time_stride <= self.N:
            raise ValueError(f"time stride {self.time_stride} inconsistent with N={self.N}")

    @property
    def times(self):
        if not self.enabled:
            return np.zeros(0, dtype=int)
        return np.arange(self.N, 0, -self.time_stride)[::-1].copy()

    @property
    def indices(self):
        return np.arange(0, self.n, self.space_stride)

    @property
    def q_i(self):
        counts = np.zeros(self.N + 1, dtype=int)
        counts[self.times] = len(self.indices)
        return counts

    @property
    def q(self):
        return len(self.times) * len(self.indices)

    def observe(self, traj):
        return observe(traj, self)

    def observe_adjoint(self, y):
        return observe_adjoint(y, self)


def observe(x_traj, net):
    """Select observed components of an ``(N+1, n[, m])`` trajectory.

    Observations are stacked time-major, giving a length-q vector (or q x m).
    """
    x_traj = np.asarray(x_traj, dtype=float)
    if x_traj.shape[:2] != (net.N + 1, net.n):
        raise ValueError(f"trajectory shape {x_traj.shape} does not match network "
                         f"({net.N + 1}, {net.n})")
    sel = x_traj[net.times][:, net.indices]
    return sel.reshape((net.q,) + x_traj.shape[2:])


def observe_adjoint(y, net):
    """Scatter a length-q observation vector back onto the window grid."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] != net.q:
        raise ValueError(f"expected {net.q} observations, got {y.shape[0]}")
    out = np.zeros((net.N + 1, net.n) + y.shape[1:])
    out[np.ix_(net.times, net.indices)] = y.reshape(
        (len(net.times), len(net.indices)) + y.shape[1:])
    return out
