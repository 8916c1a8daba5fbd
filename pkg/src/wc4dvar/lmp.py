"""Limited-memory preconditioners.

The factored spectral-LMP is the production path.  The dense general and
Ritz forms exist to check it.
"""
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError


@dataclass(frozen=True, eq=False)
class LmpFactor:
    """C = prod_i (I - (1 - theta_i^{-1/2}) u_i u_i^T), i = 1..k left to right.

    ``apply`` computes C v (rank-1 updates applied from i = k down to 1) and
    ``apply_T`` computes C^T v in the reverse order.  With k = 0 both are the
    identity.
    """

    vectors: np.ndarray
    values: np.ndarray

    @property
    def k(self):
        return self.values.shape[0]

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def coefficients(self):
        return 1.0 - 1.0 / np.sqrt(self.values)

    def _rank1(self, v, order):
        v = np.array(v, dtype=float, copy=True)
        if v.shape[0] != self.n:
            raise ValueError(f"vector length {v.shape[0]} != {self.n}")
        U, a = self.vectors, self.coefficients
        for i in order:
            u = U[:, i]
            v -= a[i] * np.multiply.outer(u, u @ v)
        return v

    def apply(self, v):
        return self._rank1(v, range(self.k - 1, -1, -1))

    def apply_T(self, v):
        return self._rank1(v, range(self.k))

    def dense(self):
        return self.apply(np.eye(self.n))


def identity_factor(n):
    return LmpFactor(np.zeros((n, 0)), np.zeros(0))


def build_spectral_lmp(pairs, orth_tol=1e-8):
    """Factored spectral-LMP from (approximate) eigenpairs.

    Ritz values below one are accepted; non-positive values are an error.
    """
    U = np.asarray(pairs.vectors, dtype=float)
    theta = np.asarray(pairs.values, dtype=float)
    if np.any(theta <= 0):
        raise NumericalError(f"non-positive Ritz value {theta.min():.3g} cannot build a "
                             "spectral-LMP", module="lmp")
    if theta.size:
        gram_err = np.abs(U.T @ U - np.eye(theta.size)).max()
        if gram_err > orth_tol:
            raise ValueError(f"Ritz vectors not orthonormal (max Gram deviation {gram_err:.2e})")
    return LmpFactor(U.copy(), theta.copy())


def apply_factor(C, v):
    return C.apply(v)


def apply_factor_T(C, v):
    return C.apply_T(v)


def dense_spectral_lmp(U, theta):
    """P = I - sum_i (1 - theta_i^{-1}) u_i u_i^T."""
    U = np.asarray(U, dtype=float)
    return np.eye(U.shape[0]) - (U * (1.0 - 1.0 / np.asarray(theta))) @ U.T


def build_general_lmp_dense(S, A):
    """P = (I - S K^{-1} S^T A)(I - A S K^{-1} S^T) + S K^{-1} S^T, K = S^T A S."""
    S = np.asarray(S, dtype=float)
    A = np.asarray(A, dtype=float)
    K = S.T @ A @ S
    if np.linalg.matrix_rank(K) < S.shape[1]:
        raise NumericalError("S^T A S is rank deficient", module="lmp")
    SKinv = np.linalg.solve(K, S.T).T  # S K^{-1}
    Proj = SKinv @ S.T
    eye = np.eye(A.shape[0])
    return (eye - Proj @ A) @ (eye - A @ Proj) + Proj


def build_ritz_lmp_dense(U, theta, A):
    """Ritz-LMP: the general form with S^T A S replaced by diag(theta)."""
    U = np.asarray(U, dtype=float)
    A = np.asarray(A, dtype=float)
    Proj = (U / np.asarray(theta)) @ U.T
    eye = np.eye(A.shape[0])
    return (eye - Proj @ A) @ (eye - A @ Proj) + Proj
