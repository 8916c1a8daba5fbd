"""Twin experiments and the incremental outer/inner loop of the forcing formulation.

The control vector is p = (x_0, eta_1, ..., eta_N), stored as an
``(N+1, n)`` array.  An inner loop solves the first-level-preconditioned
system A dp~ = D^{-1/2} b + D^{1/2} L^{-T} H^T R^{-1} d by PCG, optionally
with a second-level spectral-LMP, and returns dp = D^{1/2} dp~.
"""
from dataclasses import dataclass, field

import numpy as np

from .covariance import CovarianceSpec, build_covariance, sample_noise, sym_sqrt
from .errors import ConfigError, NumericalError
from .krylov import pcg_split, ritz_from_tridiagonal, tridiagonal_from_cg
from .lmp import build_spectral_lmp, identity_factor
from .models import (AdvectionModel, IdentityModel, Lorenz96Model, ModelGrid,
                     ObservationNetwork, observe)
from .operators import BlockCovariance, HessianOperator
from .randevd import SketchConfig, randomized_eigenpairs
from .spectra import exact_top_eigenpairs

RANDOMIZED = ("revd", "nystrom", "ritzit")


@dataclass(frozen=True, eq=False)
class Problem:
    model: object
    network: ObservationNetwork
    background: object
    model_error: object
    sigma_o: float

    @property
    def grid(self):
        return self.model.grid

    @property
    def d_factor(self):
        return BlockCovariance(self.background, self.model_error, self.grid.N)

    @property
    def r_inv(self):
        return 1.0 / self.sigma_o ** 2


def build_problem(config):
    m, c, o = config.model, config.covariance, config.observations
    grid = ModelGrid(m.n, m.steps, m.dt)
    try:
        if m.kind == "advection":
            model = AdvectionModel(grid)
        elif m.kind == "lorenz96":
            model = Lorenz96Model(grid, m.forcing)
        else:
            model = IdentityModel(grid)
        network = ObservationNetwork(m.n, m.steps, o.space_stride, o.time_stride, o.enabled)
        B = build_covariance(CovarianceSpec(c.background_kind, c.sigma_b, m.n, c.length_b,
                                            c.soar_distance))
        Q = build_covariance(CovarianceSpec(c.model_error_kind, c.sigma_q, m.n, c.length_q))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return Problem(model, network, sym_sqrt(B), sym_sqrt(Q), c.sigma_o)


@dataclass(frozen=True, eq=False)
class TwinData:
    truth: np.ndarray          # (N+1, n)
    truth_eta: np.ndarray      # (N, n)
    background: np.ndarray     # (n,)
    observations: np.ndarray   # (q,), time-major
    seeds: dict = field(default_factory=dict)


def truth_initial_state(config):
    m = config.model
    if m.kind != "lorenz96":
        z = np.arange(m.n) / m.n
        return m.bump_amplitude * np.exp(-(z - m.bump_center) ** 2 / (2 * m.bump_width ** 2))
    x = np.full(m.n, float(m.forcing))
    x[0] += m.init_perturbation
    spin = Lorenz96Model(ModelGrid(m.n, m.spinup_steps, m.dt), m.forcing)
    return spin.integrate(x).states[-1].copy()


def generate_twin(config, problem=None, noise=True):
    """Truth trajectory, background and observations for a twin experiment.

    With ``noise=False`` the background equals the true initial state and the
    observations are exact.
    """
    problem = build_problem(config) if problem is None else problem
    s = config.seeds
    grid = problem.grid
    x0 = truth_initial_state(config)
    eta = np.zeros((grid.N, grid.n))
    if noise and config.covariance.truth_model_error:
        rng = np.random.default_rng(s.model_error)
        eta = np.stack([sample_noise(problem.model_error, rng) for _ in range(grid.N)])
    try:
        truth = problem.model.integrate(x0, eta).states
    except FloatingPointError as exc:
        raise NumericalError(f"truth integration failed: {exc}", module="assimilation") from exc
    y = observe(truth, problem.network)
    xb = x0.copy()
    if noise:
        y = y + problem.sigma_o * np.random.default_rng(s.observations).standard_normal(y.size)
        xb = xb + sample_noise(problem.background, s.background)
    seeds = {"background": s.background, "observations": s.observations,
             "model_error": s.model_error}
    return TwinData(truth, eta, xb, y, seeds)


@dataclass(frozen=True, eq=False)
class OuterState:
    p: np.ndarray              # (N+1, n): x_0 then eta_1..eta_N
    trajectory: object         # models.Trajectory
    index: int = 0

    @property
    def states(self):
        return self.trajectory.states


def make_state(problem, p, index=0):
    p = np.asarray(p, dtype=float)
    try:
        traj = problem.model.integrate(p[0], p[1:])
    except FloatingPointError as exc:
        raise NumericalError(f"outer-loop trajectory: {exc}", module="assimilation") from exc
    return OuterState(p, traj, index)


def initial_state(twin, problem):
    """First guess p = (x^b, 0, ..., 0)."""
    p = np.zeros((problem.grid.N + 1, problem.grid.n))
    p[0] = twin.background
    return make_state(problem, p)


def compute_innovations(state, twin, problem):
    """b = (x^b - x_0, -eta_1, ..., -eta_N) flattened, and d = y - H(x)."""
    b = -state.p.copy()
    b[0] += twin.background
    d = twin.observations - observe(state.states, problem.network)
    return b.reshape(-1), d


def build_hessian(state, problem, **kwargs):
    return HessianOperator(problem.model, state.trajectory, problem.network,
                           problem.d_factor, problem.r_inv, **kwargs)


def cost_offset(b, d, problem):
    """1/2 ||b||^2_{D^-1} + 1/2 ||d||^2_{R^-1}, the cost at dp = 0."""
    grid = problem.grid
    bt = problem.d_factor.apply_inv_half(np.asarray(b).reshape(grid.N + 1, grid.n))
    return 0.5 * float(np.sum(bt ** 2)) + 0.5 * problem.r_inv * float(np.sum(np.asarray(d) ** 2))


def quadratic_cost(dp_tilde, op, b, d):
    """1/2 ||dp - b||^2_{D^-1} + 1/2 ||H L^{-1} dp - d||^2_{R^-1} with dp = D^{1/2} dp~.

    Evaluated term by term from the factor actions; no D^{-1} is formed.
    """
    shape = (op.grid.N + 1, op.grid.n)
    dpt = np.asarray(dp_tilde, dtype=float)
    bt = op.d_factor.apply_inv_half(np.asarray(b, dtype=float).reshape(shape))
    background = 0.5 * float(np.sum((dpt.reshape(shape) - bt) ** 2))
    dp = op.d_factor.apply_half(dpt.reshape(shape))
    Hx = observe(op.apply_Linv(dp.reshape(-1)).reshape(shape), op.network)
    resid = Hx - np.asarray(d, dtype=float)
    return background + 0.5 * float(np.sum(op.r_inv * resid ** 2))


def nonlinear_cost(state, twin, problem):
    """Full forcing-formulation cost at the current outer iterate."""
    b, d = compute_innovations(state, twin, problem)
    return cost_offset(b, d, problem)


@dataclass(frozen=True)
class PrecondSpec:
    """Second-level preconditioner request.

    ``method`` is one of none, deterministic (exact top-k pairs of the previous
    inner loop's Hessian), lanczos (Ritz pairs harvested from the previous
    PCG run), or a randomized estimator (revd, nystrom, ritzit).
    """

    method: str = "none"
    k: int = 0
    l: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("none", "deterministic", "lanczos") + RANDOMIZED:
            raise ValueError(f"unknown preconditioner method {self.method!r}")

    @property
    def randomized(self):
        return self.method in RANDOMIZED

    @property
    def label(self):
        if self.method == "none" or self.k == 0:
            return "none"
        if self.randomized:
            return f"{self.method}-k{self.k}-l{self.l}"
        return f"{self.method}-k{self.k}"


@dataclass(frozen=True, eq=False)
class InnerLoopReport:
    spec: PrecondSpec
    increment: np.ndarray      # dp, (N+1, n)
    solution: np.ndarray       # dp~, flattened
    history: object            # krylov.CgHistory
    op: HessianOperator
    factor: object = None
    ritz_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sketch_products: int = 0

    @property
    def costs(self):
        return np.asarray(self.history.quadratic_cost)

    @property
    def iterations(self):
        return self.history.iterations


def preconditioner_pairs(spec, op, previous=None):
    """Ritz pairs for ``spec`` (None when no second-level preconditioner)."""
    if spec.method == "none" or spec.k == 0:
        return None
    if spec.randomized:
        return randomized_eigenpairs(op, SketchConfig(spec.k, spec.l, spec.seed, spec.method))
    if previous is None:
        raise ConfigError(f"{spec.method} preconditioner needs a previous inner loop; "
                          "there is none before the first inner loop")
    if spec.method == "deterministic":
        return exact_top_eigenpairs(previous.op, spec.k)
    hist = previous.history
    if hist.normalized_residuals is None:
        raise ConfigError("previous inner loop did not keep its CG residuals")
    return ritz_from_tridiagonal(tridiagonal_from_cg(hist), hist.normalized_residuals, spec.k)


def run_inner_loop(state, twin, problem, spec=PrecondSpec(), max_iter=100, rel_tol=1e-6,
                   reorthogonalize=False, harvest=False, previous=None, op=None):
    """One inner loop: (optional) preconditioner construction then PCG.

    ``op`` may be passed to reuse a Hessian already built at ``state``.
    """
    op = build_hessian(state, problem) if op is None else op
    start = op.n_products
    pairs = preconditioner_pairs(spec, op, previous)
    sketch_products = op.n_products - start
    factor = None if spec.method == "none" else (
        identity_factor(op.shape[0]) if pairs is None else build_spectral_lmp(pairs))
    b, d = compute_innovations(state, twin, problem)
    rhs = op.rhs(b, d)
    x, hist = pcg_split(op, rhs, precond=factor, max_iter=max_iter, rel_tol=rel_tol,
                        reorthogonalize=reorthogonalize, harvest=harvest,
                        cost_offset=cost_offset(b, d, problem))
    shape = (problem.grid.N + 1, problem.grid.n)
    dp = problem.d_factor.apply_half(x.reshape(shape))
    ritz = np.zeros(0) if pairs is None else pairs.values.copy()
    return InnerLoopReport(spec, dp, x, hist, op, factor, ritz, sketch_products)


def outer_update(state, report, problem):
    """p <- p + dp, re-integrate the nonlinear model, advance the loop index."""
    return make_state(problem, state.p + report.increment, state.index + 1)
