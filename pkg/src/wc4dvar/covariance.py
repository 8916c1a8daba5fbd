"""Background, model-error and observation covariances on the periodic grid.

Correlated covariances are stored dense (desk scale) and factored with the
symmetric eigendecomposition square root.
"""
from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveDefiniteError

KINDS = ("diagonal", "soar", "laplacian")
DISTANCES = ("chordal", "cyclic", "linear")


@dataclass(frozen=True)
class CovarianceSpec:
    """``length_scale`` is measured in grid spacings.

    ``distance`` selects how SOAR measures separation: ``chordal`` (chord
    length on the periodic grid, always positive definite), ``cyclic``
    (minimum index distance, indefinite once the length scale is a sizeable
    fraction of the domain) or ``linear`` (plain |i - j|, no wrap).
    """

    kind: str
    sigma: float
    n: int
    length_scale: float = 0.0
    distance: str = "chordal"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown covariance kind {self.kind!r}; expected one of {KINDS}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.kind != "diagonal" and not self.length_scale > 0:
            raise ValueError(f"{self.kind} covariance needs a positive length scale")
        if self.n < 0:
            raise ValueError("dimension must be non-negative")
        if self.distance not in DISTANCES:
            raise ValueError(f"unknown distance {self.distance!r}")


@dataclass(frozen=True, eq=False)
class CovarianceFactor:
    """Symmetric square root of an SPD covariance, plus its inverse."""

    half: np.ndarray
    inv_half: np.ndarray
    eigenvalues: np.ndarray

    @property
    def n(self):
        return self.half.shape[0]

    @property
    def matrix(self):
        return self.half @ self.half

    def apply_half(self, v):
        return self.half @ v

    def apply_inv_half(self, v):
        return self.inv_half @ v


def cyclic_distance(n):
    idx = np.arange(n)
    d = np.abs(idx[:, None] - idx[None, :])
    return np.minimum(d, n - d)


def linear_distance(n):
    idx = np.arange(n)
    return np.abs(idx[:, None] - idx[None, :])


def chordal_distance(n):
    """Chord length between grid points on a circle of circumference n."""
    return n / np.pi * np.sin(np.pi * cyclic_distance(n) / n)


def build_soar(spec):
    """sigma^2 (1 + r/L) exp(-r/L) with r the chordal (or cyclic) grid distance."""
    dist = {"chordal": chordal_distance, "cyclic": cyclic_distance,
            "linear": linear_distance}[spec.distance]
    r = dist(spec.n) / spec.length_scale
    C = spec.sigma ** 2 * (1.0 + r) * np.exp(-r)
    np.fill_diagonal(C, spec.sigma ** 2)
    if spec.n:
        lam_min = np.linalg.eigvalsh(C)[0]
        if lam_min <= 0:
            raise NotPositiveDefiniteError("SOAR matrix not positive definite after periodic wrap",
                                           lam_min)
    return C


def periodic_second_difference(n):
    """Periodic [-1, 2, -1] matrix (positive semidefinite discrete -d^2/dz^2)."""
    Lap = 2.0 * np.eye(n)
    idx = np.arange(n)
    Lap[idx, (idx + 1) % n] -= 1.0
    Lap[idx, (idx - 1) % n] -= 1.0
    return Lap


def build_laplacian_corr(spec):
    """Inverse-squared shifted Laplacian, rescaled so the diagonal is sigma^2.

    C = sigma^2 gamma (I + L^2 Lap)^{-2}, L in grid units.  The matrix is
    circulant so every diagonal entry is equal.
    """
    n = spec.n
    K = np.eye(n) + spec.length_scale ** 2 * periodic_second_difference(n)
    Kinv = np.linalg.inv(K)
    C = Kinv @ Kinv
    C = 0.5 * (C + C.T)
    dmax = C.diagonal().max() if n else 1.0
    assert dmax > 0
    return spec.sigma ** 2 * C / dmax


def build_covariance(spec):
    if spec.kind == "diagonal":
        return spec.sigma ** 2 * np.eye(spec.n)
    if spec.kind == "soar":
        return build_soar(spec)
    return build_laplacian_corr(spec)


def sym_sqrt(C):
    """Principal symmetric square root of an SPD matrix via eigendecomposition."""
    C = np.asarray(C, dtype=float)
    if C.shape[0] == 0:
        empty = np.zeros((0, 0))
        return CovarianceFactor(empty, empty, np.zeros(0))
    w, V = np.linalg.eigh(0.5 * (C + C.T))
    if w[0] <= 0:
        raise NotPositiveDefiniteError("covariance is not positive definite", w[0])
    root = np.sqrt(w)
    half = (V * root) @ V.T
    inv_half = (V / root) @ V.T
    return CovarianceFactor(0.5 * (half + half.T), 0.5 * (inv_half + inv_half.T), w)


def sample_noise(factor, seed):
    """Draw ``half @ g`` with g standard normal from ``numpy.random.default_rng(seed)``.

    ``seed`` may also be a ``numpy.random.Generator``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    g = rng.standard_normal(factor.n)
    return factor.half @ g
