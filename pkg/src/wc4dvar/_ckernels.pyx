# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled window sweeps for the linear advection and Lorenz 96 models.

Same signatures and array layout as ``_pykernels``.  All loops release the
GIL so column chunks can be processed from a thread pool.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline void _l96_tend(const double[::1] x, double forcing, double[::1] out,
                           Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t j
    for j in range(n):
        out[j] = ((x[(j + 1) % n] - x[(j - 2 + n) % n]) * x[(j - 1 + n) % n]
                  - x[j] + forcing)


cdef inline void _jvp(const double[::1] x, const double[:, ::1] v, double[:, ::1] out,
                      Py_ssize_t n, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t j, c, jm2, jm1, jp1
    cdef double a, b
    for j in range(n):
        jm2 = (j - 2 + n) % n
        jm1 = (j - 1 + n) % n
        jp1 = (j + 1) % n
        a = x[jp1] - x[jm2]
        b = x[jm1]
        for c in range(m):
            out[j, c] = a * v[jm1, c] + (v[jp1, c] - v[jm2, c]) * b - v[j, c]


cdef inline void _vjp(const double[::1] x, const double[:, ::1] w, double[:, ::1] out,
                      Py_ssize_t n, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t j, c, jm2, jm1, jp1, jp2
    cdef double a, b, e
    for j in range(n):
        jm2 = (j - 2 + n) % n
        jm1 = (j - 1 + n) % n
        jp1 = (j + 1) % n
        jp2 = (j + 2) % n
        a = x[jm2]
        b = x[jp2] - x[jm1]
        e = x[jp1]
        for c in range(m):
            out[j, c] = a * w[jm1, c] + b * w[jp1, c] - e * w[jp2, c] - w[j, c]


cdef void _tlm_step(const double[:, ::1] s, const double[:, ::1] dx, double[:, ::1] out,
                    double[:, ::1] z, double[:, ::1] dk, double dt,
                    Py_ssize_t n, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t j, c
    cdef double h6 = dt / 6.0, h3 = dt / 3.0, h2 = 0.5 * dt
    _jvp(s[0], dx, dk, n, m)
    for j in range(n):
        for c in range(m):
            out[j, c] = dx[j, c] + h6 * dk[j, c]
            z[j, c] = dx[j, c] + h2 * dk[j, c]
    _jvp(s[1], z, dk, n, m)
    for j in range(n):
        for c in range(m):
            out[j, c] += h3 * dk[j, c]
            z[j, c] = dx[j, c] + h2 * dk[j, c]
    _jvp(s[2], z, dk, n, m)
    for j in range(n):
        for c in range(m):
            out[j, c] += h3 * dk[j, c]
            z[j, c] = dx[j, c] + dt * dk[j, c]
    _jvp(s[3], z, dk, n, m)
    for j in range(n):
        for c in range(m):
            out[j, c] += h6 * dk[j, c]


cdef void _adj_step(const double[:, ::1] s, const double[:, ::1] lam, double[:, ::1] out,
                    double[:, ::1] a, double[:, ::1] az, double dt,
                    Py_ssize_t n, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t j, c
    cdef double h6 = dt / 6.0, h3 = dt / 3.0, h2 = 0.5 * dt
    for j in range(n):
        for c in range(m):
            out[j, c] = lam[j, c]
            a[j, c] = h6 * lam[j, c]
    _vjp(s[3], a, az, n, m)
    for j in range(n):
        for c in range(m):
            out[j, c] += az[j, c]
            a[j, c] = h3 * lam[j, c] + dt * az[j, c]
    _vjp(s[2], a, az, n, m)
    for j in range(n):
        for c in range(m):
            out[j, c] += az[j, c]
            a[j, c] = h3 * lam[j, c] + h2 * az[j, c]
    _vjp(s[1], a, az, n, m)
    for j in range(n):
        for c in range(m):
            out[j, c] += az[j, c]
            a[j, c] = h6 * lam[j, c] + h2 * az[j, c]
    _vjp(s[0], a, az, n, m)
    for j in range(n):
        for c in range(m):
            out[j, c] += az[j, c]


def l96_integrate(x0, eta, double dt, double forcing):
    """Integrate x_{i+1} = M(x_i) + eta_i; return trajectory and RK4 stage inputs."""
    cdef double[:, ::1] e = np.ascontiguousarray(eta, dtype=np.float64)
    cdef Py_ssize_t nsteps = e.shape[0], n = e.shape[1], i, j
    traj_arr = np.empty((nsteps + 1, n))
    stages_arr = np.empty((nsteps, 4, n))
    cdef double[:, ::1] traj = traj_arr
    cdef double[:, :, ::1] st = stages_arr
    cdef double[::1] k = np.empty(n), acc = np.empty(n)
    traj_arr[0] = x0
    with nogil:
        for i in range(nsteps):
            for j in range(n):
                st[i, 0, j] = traj[i, j]
            _l96_tend(st[i, 0], forcing, k, n)
            for j in range(n):
                acc[j] = k[j]
                st[i, 1, j] = traj[i, j] + 0.5 * dt * k[j]
            _l96_tend(st[i, 1], forcing, k, n)
            for j in range(n):
                acc[j] += 2.0 * k[j]
                st[i, 2, j] = traj[i, j] + 0.5 * dt * k[j]
            _l96_tend(st[i, 2], forcing, k, n)
            for j in range(n):
                acc[j] += 2.0 * k[j]
                st[i, 3, j] = traj[i, j] + dt * k[j]
            _l96_tend(st[i, 3], forcing, k, n)
            for j in range(n):
                acc[j] += k[j]
                traj[i + 1, j] = traj[i, j] + dt / 6.0 * acc[j] + e[i, j]
    return traj_arr, stages_arr


def l96_forward(stages, P, double dt):
    cdef const double[:, :, ::1] st = np.ascontiguousarray(stages, dtype=np.float64)
    cdef const double[:, :, ::1] p = np.ascontiguousarray(P, dtype=np.float64)
    cdef Py_ssize_t nsteps = st.shape[0], n = p.shape[1], m = p.shape[2], i, j, c
    X_arr = np.empty((nsteps + 1, n, m))
    cdef double[:, :, ::1] X = X_arr
    cdef double[:, ::1] z = np.empty((n, m)), dk = np.empty((n, m))
    with nogil:
        X[0, :, :] = p[0]
        for i in range(nsteps):
            _tlm_step(st[i], X[i], X[i + 1], z, dk, dt, n, m)
            for j in range(n):
                for c in range(m):
                    X[i + 1, j, c] += p[i + 1, j, c]
    return X_arr


def l96_backward(stages, V, double dt):
    cdef const double[:, :, ::1] st = np.ascontiguousarray(stages, dtype=np.float64)
    cdef const double[:, :, ::1] v = np.ascontiguousarray(V, dtype=np.float64)
    cdef Py_ssize_t nsteps = st.shape[0], n = v.shape[1], m = v.shape[2], i, j, c
    L_arr = np.empty((nsteps + 1, n, m))
    cdef double[:, :, ::1] L = L_arr
    cdef double[:, ::1] a = np.empty((n, m)), az = np.empty((n, m))
    with nogil:
        L[nsteps, :, :] = v[nsteps]
        for i in range(nsteps - 1, -1, -1):
            _adj_step(st[i], L[i + 1], L[i], a, az, dt, n, m)
            for j in range(n):
                for c in range(m):
                    L[i, j, c] += v[i, j, c]
    return L_arr


def advection_integrate(x0, eta, double courant):
    cdef const double[:, ::1] e = np.ascontiguousarray(eta, dtype=np.float64)
    cdef Py_ssize_t nsteps = e.shape[0], n = e.shape[1], i, j
    traj_arr = np.empty((nsteps + 1, n))
    cdef double[:, ::1] traj = traj_arr
    traj_arr[0] = x0
    with nogil:
        for i in range(nsteps):
            for j in range(n):
                traj[i + 1, j] = ((1.0 - courant) * traj[i, j]
                                  + courant * traj[i, (j - 1 + n) % n] + e[i, j])
    return traj_arr


def advection_forward(P, double courant):
    cdef const double[:, :, ::1] p = np.ascontiguousarray(P, dtype=np.float64)
    cdef Py_ssize_t last = p.shape[0] - 1, n = p.shape[1], m = p.shape[2], i, j, c, jm1
    X_arr = np.empty((last + 1, n, m))
    cdef double[:, :, ::1] X = X_arr
    with nogil:
        X[0, :, :] = p[0]
        for i in range(last):
            for j in range(n):
                jm1 = (j - 1 + n) % n
                for c in range(m):
                    X[i + 1, j, c] = ((1.0 - courant) * X[i, j, c]
                                      + courant * X[i, jm1, c] + p[i + 1, j, c])
    return X_arr


def advection_backward(V, double courant):
    cdef const double[:, :, ::1] v = np.ascontiguousarray(V, dtype=np.float64)
    cdef Py_ssize_t last = v.shape[0] - 1, n = v.shape[1], m = v.shape[2], i, j, c, jp1
    L_arr = np.empty((last + 1, n, m))
    cdef double[:, :, ::1] L = L_arr
    with nogil:
        L[last, :, :] = v[last]
        for i in range(last - 1, -1, -1):
            for j in range(n):
                jp1 = (j + 1) % n
                for c in range(m):
                    L[i, j, c] = ((1.0 - courant) * L[i + 1, j, c]
                                  + courant * L[i + 1, jp1, c] + v[i, j, c])
    return L_arr
