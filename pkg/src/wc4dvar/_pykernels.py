"""Pure numpy implementations of the window sweeps.

These mirror ``_ckernels.pyx`` exactly (same signatures, same array layout)
and are used when the compiled extension is unavailable or when
``WC4DVAR_PURE_PYTHON=1`` is set.

Layout conventions
------------------
Multi-vectors over the assimilation window are stored as ``(N+1, n, m)``
C-contiguous arrays: time block, grid point, column.  Lorenz 96 linearization
data is the ``(N, 4, n)`` array of RK4 stage inputs for every step.
"""
import numpy as np


def _col(x, v):
    # broadcast a single state against an (n, m) block
    return x[:, None] if v.ndim == 2 else x


def l96_tendency(x, forcing):
    return (np.roll(x, -1, axis=0) - np.roll(x, 2, axis=0)) * np.roll(x, 1, axis=0) - x + forcing


def l96_jvp(x, v):
    """Jacobian of the Lorenz 96 tendency at ``x`` applied to ``v``."""
    x = _col(x, v)
    return ((np.roll(x, -1, axis=0) - np.roll(x, 2, axis=0)) * np.roll(v, 1, axis=0)
            + (np.roll(v, -1, axis=0) - np.roll(v, 2, axis=0)) * np.roll(x, 1, axis=0)
            - v)


def l96_vjp(x, w):
    """Transposed Jacobian of the Lorenz 96 tendency at ``x`` applied to ``w``."""
    x = _col(x, w)
    return (np.roll(x, 2, axis=0) * np.roll(w, 1, axis=0)
            + (np.roll(x, -2, axis=0) - np.roll(x, 1, axis=0)) * np.roll(w, -1, axis=0)
            - np.roll(x, -1, axis=0) * np.roll(w, -2, axis=0)
            - w)


def l96_rk4_stages(x, dt, forcing):
    """Return (next state, (4, n) array of stage inputs) for one RK4 step."""
    k1 = l96_tendency(x, forcing)
    s2 = x + 0.5 * dt * k1
    k2 = l96_tendency(s2, forcing)
    s3 = x + 0.5 * dt * k2
    k3 = l96_tendency(s3, forcing)
    s4 = x + dt * k3
    k4 = l96_tendency(s4, forcing)
    x_new = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x_new, np.stack([x, s2, s3, s4])


def l96_tlm_step(stages, dx, dt):
    dk1 = l96_jvp(stages[0], dx)
    dk2 = l96_jvp(stages[1], dx + 0.5 * dt * dk1)
    dk3 = l96_jvp(stages[2], dx + 0.5 * dt * dk2)
    dk4 = l96_jvp(stages[3], dx + dt * dk3)
    return dx + dt / 6.0 * (dk1 + 2.0 * dk2 + 2.0 * dk3 + dk4)


def l96_adj_step(stages, lam, dt):
    a_dk1 = dt / 6.0 * lam
    a_dk2 = dt / 3.0 * lam
    a_dk3 = dt / 3.0 * lam
    a_dk4 = dt / 6.0 * lam
    out = lam.copy()
    a_z = l96_vjp(stages[3], a_dk4)
    out += a_z
    a_dk3 = a_dk3 + dt * a_z
    a_z = l96_vjp(stages[2], a_dk3)
    out += a_z
    a_dk2 = a_dk2 + 0.5 * dt * a_z
    a_z = l96_vjp(stages[1], a_dk2)
    out += a_z
    a_dk1 = a_dk1 + 0.5 * dt * a_z
    out += l96_vjp(stages[0], a_dk1)
    return out


def l96_integrate(x0, eta, dt, forcing):
    """Integrate x_{i+1} = M(x_i) + eta_i over ``len(eta)`` steps.

    Returns the ``(N+1, n)`` trajectory and the ``(N, 4, n)`` stage inputs.
    """
    nsteps, n = eta.shape
    traj = np.empty((nsteps + 1, n))
    stages = np.empty((nsteps, 4, n))
    traj[0] = x0
    for i in range(nsteps):
        x_new, stages[i] = l96_rk4_stages(traj[i], dt, forcing)
        traj[i + 1] = x_new + eta[i]
    return traj, stages


def l96_forward(stages, P, dt):
    X = np.empty_like(P)
    X[0] = P[0]
    for i in range(stages.shape[0]):
        X[i + 1] = l96_tlm_step(stages[i], X[i], dt) + P[i + 1]
    return X


def l96_backward(stages, V, dt):
    L = np.empty_like(V)
    nsteps = stages.shape[0]
    L[nsteps] = V[nsteps]
    for i in range(nsteps - 1, -1, -1):
        L[i] = V[i] + l96_adj_step(stages[i], L[i + 1], dt)
    return L


def advection_apply(u, courant):
    return (1.0 - courant) * u + courant * np.roll(u, 1, axis=0)


def advection_apply_T(u, courant):
    return (1.0 - courant) * u + courant * np.roll(u, -1, axis=0)


def advection_integrate(x0, eta, courant):
    nsteps, n = eta.shape
    traj = np.empty((nsteps + 1, n))
    traj[0] = x0
    for i in range(nsteps):
        traj[i + 1] = advection_apply(traj[i], courant) + eta[i]
    return traj


def advection_forward(P, courant):
    X = np.empty_like(P)
    X[0] = P[0]
    for i in range(P.shape[0] - 1):
        X[i + 1] = advection_apply(X[i], courant) + P[i + 1]
    return X


def advection_backward(V, courant):
    L = np.empty_like(V)
    last = V.shape[0] - 1
    L[last] = V[last]
    for i in range(last - 1, -1, -1):
        L[i] = V[i] + advection_apply_T(L[i + 1], courant)
    return L
