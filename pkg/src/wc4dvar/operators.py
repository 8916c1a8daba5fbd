"""Matrix-free first-level-preconditioned Hessian of the forcing formulation.

    A = I + D^{1/2} L^{-T} H^T R^{-1} H L^{-1} D^{1/2}

Window vectors of length n(N+1) are stored time-major: block i holds the
n values at t_i.  Each application performs one tangent-linear sweep
forward through the window and one adjoint sweep back.
"""
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.sparse.linalg import LinearOperator

from .errors import DenseCapError, NumericalError
from .models import observe, observe_adjoint

DENSE_CAP = 4096


class BlockCovariance:
    """Block-diagonal D = diag(B, Q, ..., Q) in factored form.

    ``background`` and ``model_error`` are :class:`~wc4dvar.covariance.CovarianceFactor`
    instances; the model-error covariance is shared by all N steps.
    """

    def __init__(self, background, model_error, N):
        if background.n != model_error.n:
            raise ValueError("background and model-error covariances differ in size")
        self.background = background
        self.model_error = model_error
        self.N = N
        self.n = background.n

    def _apply(self, V, first, rest):
        V = np.asarray(V, dtype=float)
        if V.ndim == 2:
            return self._apply(V[:, :, None], first, rest)[:, :, 0]
        out = np.empty_like(V)
        out[0] = first @ V[0]
        out[1:] = np.matmul(rest, V[1:])
        return out

    def apply_half(self, V):
        """D^{1/2} on an ``(N+1, n[, m])`` window array."""
        return self._apply(V, self.background.half, self.model_error.half)

    def apply_inv_half(self, V):
        return self._apply(V, self.background.inv_half, self.model_error.inv_half)

    def dense_half(self):
        from scipy.linalg import block_diag
        return block_diag(self.background.half, *([self.model_error.half] * self.N))


class CountingOperator(LinearOperator):
    """LinearOperator that counts operator-vector products.

    ``n_products`` counts vectors, ``n_block_applies`` counts calls (a
    matrix-matrix product counts once).
    """

    def __init__(self, shape):
        super().__init__(dtype=np.float64, shape=shape)
        self.reset_counters()

    def reset_counters(self):
        self.n_products = 0
        self.n_block_applies = 0

    def _matvec(self, v):
        v = np.asarray(v, dtype=float).reshape(-1)
        return self._matmat(v[:, None])[:, 0]

    def _matmat(self, V):
        V = np.asarray(V, dtype=float)
        self.n_products += V.shape[1]
        self.n_block_applies += 1
        return self._apply_block(V)

    def _adjoint(self):
        return self  # symmetric

    def _apply_block(self, V):
        raise NotImplementedError


class DenseOperator(CountingOperator):
    """Counting wrapper around an explicit symmetric matrix."""

    def __init__(self, A):
        A = np.asarray(A, dtype=float)
        super().__init__(A.shape)
        self.A = A

    def _apply_block(self, V):
        return self.A @ V


def as_operator(A):
    if isinstance(A, CountingOperator):
        return A
    if isinstance(A, np.ndarray):
        return DenseOperator(A)
    raise TypeError(f"cannot use {type(A).__name__} as an operator")


def _default_workers():
    return max(1, int(os.environ.get("WC4DVAR_THREADS", "1")))


class HessianOperator(CountingOperator):
    """Matrix-free A around a fixed linearization trajectory.

    Parameters
    ----------
    model : model object exposing ``tangent_sweep`` / ``adjoint_sweep``
    trajectory : :class:`~wc4dvar.models.Trajectory` the model is linearized about
    network : :class:`~wc4dvar.models.ObservationNetwork`
    d_factor : :class:`BlockCovariance`
    r_inv : scalar or length-q array, diagonal of R^{-1}
    chunk_size : columns per sweep in block applies.  Chunking is fixed, so
        results do not depend on ``workers``.
    workers : threads used for block applies (defaults to ``WC4DVAR_THREADS`` or 1)
    """

    def __init__(self, model, trajectory, network, d_factor, r_inv, chunk_size=32, workers=None):
        grid = model.grid
        if trajectory.states.shape != (grid.N + 1, grid.n):
            raise ValueError("trajectory does not match the model window")
        if (network.n, network.N) != (grid.n, grid.N) or (d_factor.n, d_factor.N) != (grid.n, grid.N):
            raise ValueError("observation network / covariance do not match the model window")
        super().__init__((grid.size, grid.size))
        self.model = model
        self.trajectory = trajectory
        self.network = network
        self.d_factor = d_factor
        self.r_inv = np.broadcast_to(np.asarray(r_inv, dtype=float), (network.q,)).copy()
        self.chunk_size = chunk_size
        self.workers = _default_workers() if workers is None else workers
        self._window_shape = (grid.N + 1, grid.n)

    @property
    def grid(self):
        return self.model.grid

    def _as_window(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.shape[0]:
            raise ValueError(f"vector length {v.shape[0]} != {self.shape[0]}")
        squeeze = v.ndim == 1
        W = v.reshape(self._window_shape + (1 if squeeze else v.shape[1],))
        return np.ascontiguousarray(W), squeeze

    def _from_window(self, W, squeeze):
        flat = W.reshape(self.shape[0], W.shape[2])
        return flat[:, 0] if squeeze else flat

    def apply_Linv(self, p):
        """Forward substitution x_0 = p_0, x_{i+1} = M_i x_i + p_{i+1}."""
        W, squeeze = self._as_window(p)
        return self._from_window(self.model.tangent_sweep(self.trajectory, W), squeeze)

    def apply_LinvT(self, v):
        """Exact transpose of :meth:`apply_Linv` (reverse adjoint sweep)."""
        W, squeeze = self._as_window(v)
        return self._from_window(self.model.adjoint_sweep(self.trajectory, W), squeeze)

    def _check(self, arr, stage):
        if not np.all(np.isfinite(arr)):
            raise NumericalError(f"non-finite values after {stage}", module="operators")

    def _chunk(self, W):
        # W: (N+1, n, m) window block
        Z = self.d_factor.apply_half(W)
        X = self.model.tangent_sweep(self.trajectory, Z)
        self._check(X, "tangent-linear sweep")
        y = observe(X, self.network) * self.r_inv[:, None]
        Lam = self.model.adjoint_sweep(self.trajectory, observe_adjoint(y, self.network))
        self._check(Lam, "adjoint sweep")
        return W + self.d_factor.apply_half(Lam)

    def _apply_block(self, V):
        m = V.shape[1]
        W = V.reshape(self._window_shape + (m,))
        starts = range(0, m, self.chunk_size)
        chunks = [np.ascontiguousarray(W[:, :, s:s + self.chunk_size]) for s in starts]
        if self.workers > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(self._chunk, chunks))
        else:
            results = [self._chunk(c) for c in chunks]
        out = np.concatenate(results, axis=2) if len(results) > 1 else results[0]
        return out.reshape(self.shape[0], m)

    def apply_hessian(self, v):
        return self.matvec(v)

    def apply_hessian_block(self, V):
        return self.matmat(V)

    def observation_factor(self, chunk=256):
        """W = D^{1/2} L^{-T} H^T R^{-1/2} so that A = I + W W^T (n_A x q)."""
        q = self.network.q
        W = np.empty((self.shape[0], q))
        scale = np.sqrt(self.r_inv)
        for s in range(0, q, chunk):
            cols = np.arange(s, min(q, s + chunk))
            E = np.zeros((q, len(cols)))
            E[cols, np.arange(len(cols))] = scale[cols]
            Lam = self.model.adjoint_sweep(self.trajectory, observe_adjoint(E, self.network))
            W[:, cols] = self.d_factor.apply_half(Lam).reshape(self.shape[0], len(cols))
        return W

    def rhs(self, b, d):
        """D^{-1/2} b + D^{1/2} L^{-T} H^T R^{-1} d for window vector b and innovations d."""
        Wb, _ = self._as_window(b)
        first = self.d_factor.apply_inv_half(Wb)
        Lam = self.model.adjoint_sweep(
            self.trajectory, observe_adjoint((np.asarray(d) * self.r_inv)[:, None], self.network))
        second = self.d_factor.apply_half(Lam)
        return (first + second).reshape(-1)


def assemble_dense(op, cap=DENSE_CAP):
    """Columns A e_j for every j; refuses above ``cap``."""
    n = op.shape[0]
    if n > cap:
        raise DenseCapError(f"operator dimension {n} exceeds dense cap {cap}")
    return op.matmat(np.eye(n))
