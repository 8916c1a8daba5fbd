"""Experiment orchestration behind the command-line tool.

A run performs the inner loop(s) that precede the preconditioned one, then
solves the preconditioned inner loop once per (spec, sketch seed) job.
Jobs are independent and may run on a thread pool; results are always
merged in (spec label, seed) order so outputs do not depend on scheduling.
"""
import copy
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .assimilation import (PrecondSpec, build_hessian, build_problem, generate_twin,
                           initial_state, outer_update, preconditioner_pairs, run_inner_loop)
from .config import parse_config
from .errors import ConfigError, DenseCapError
from .lmp import build_spectral_lmp
from .operators import assemble_dense
from .spectra import dense_preconditioned_spectrum, preconditioned_spectrum

SEEDLESS = -1  # seed column value for specs that use no random sketch


def default_workers():
    return max(1, int(os.environ.get("WC4DVAR_THREADS", "1")))


def build_specs(config):
    """(spec, seed) jobs requested by ``config.precond``."""
    p = config.precond
    jobs = []
    for method in p.methods:
        if method == "none":
            jobs.append((PrecondSpec(), SEEDLESS))
        elif method in ("deterministic", "lanczos"):
            jobs.extend((PrecondSpec(method, k), SEEDLESS) for k in p.k)
        else:
            jobs.extend((PrecondSpec(method, k, l, s), s) if k else (PrecondSpec(), SEEDLESS)
                        for k in p.k for l in p.l for s in p.sketch_seeds)
    # k = 0 collapses onto "none"; keep one copy of each (label, seed)
    unique = {}
    for spec, seed in jobs:
        unique.setdefault((spec.label, seed), spec)
    return [(spec, seed) for (_, seed), spec in sorted(unique.items())]


@dataclass
class Setup:
    """Everything shared by the jobs of one run."""

    config: object
    problem: object
    twin: object
    state: object
    previous: object = None
    first_loop: object = None

    @property
    def hessian_size(self):
        return self.problem.grid.size


def prepare(config):
    problem = build_problem(config)
    twin = generate_twin(config, problem)
    state = initial_state(twin, problem)
    s = config.solver
    if s.precond_inner_loop == 1:
        return Setup(config, problem, twin, state)
    keep = "lanczos" in config.precond.methods
    first = run_inner_loop(state, twin, problem, PrecondSpec(), max_iter=s.first_loop_max_iter,
                           rel_tol=s.rel_tol, reorthogonalize=s.reorthogonalize or keep,
                           harvest=keep)
    return Setup(config, problem, twin, outer_update(state, first, problem), first, first)


@dataclass
class JobResult:
    label: str
    seed: int
    costs: np.ndarray
    relative_residuals: np.ndarray
    ritz_values: np.ndarray
    iterations: int
    reason: str


@dataclass
class RunResult:
    hessian_size: int
    q: int
    jobs: list = field(default_factory=list)

    def by_label(self):
        groups = {}
        for job in self.jobs:
            groups.setdefault(job.label, []).append(job)
        return groups


def _run_job(setup, spec, seed):
    s = setup.config.solver
    report = run_inner_loop(setup.state, setup.twin, setup.problem, spec, max_iter=s.max_iter,
                            rel_tol=s.rel_tol, reorthogonalize=s.reorthogonalize,
                            previous=setup.previous)
    h = report.history
    return JobResult(spec.label, seed, np.asarray(h.quadratic_cost), h.relative_residuals,
                     report.ritz_values, h.iterations, h.reason)


def _map(func, items, workers):
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda item: func(*item), items))
    return [func(*item) for item in items]


def run_experiment(config, workers=None, setup=None):
    setup = prepare(config) if setup is None else setup
    workers = default_workers() if workers is None else workers
    jobs = build_specs(config)
    results = _map(lambda spec, seed: _run_job(setup, spec, seed), jobs, workers)
    results.sort(key=lambda r: (r.label, r.seed))
    return RunResult(setup.hessian_size, setup.problem.network.q, results)


def padded(series_list):
    """Stack histories of unequal length, repeating each final value."""
    length = max(len(s) for s in series_list)
    return np.array([np.pad(np.asarray(s, dtype=float), (0, length - len(s)), mode="edge")
                     for s in series_list])


def summarize(result):
    """Rows (label, iteration, mean, population std, n_seeds) per spec and iteration.

    A solve that stopped early keeps its final cost for later iterations.
    """
    rows = []
    for label, jobs in sorted(result.by_label().items()):
        costs = padded([j.costs for j in jobs])
        mean, std = costs.mean(axis=0), costs.std(axis=0)
        rows.extend((label, i, mean[i], std[i], len(jobs)) for i in range(costs.shape[1]))
    return rows


def spectrum_specs(config):
    """One spec per label, using the first sketch seed."""
    seen = {}
    first = config.precond.sketch_seeds[0]
    for spec, seed in build_specs(config):
        if seed in (SEEDLESS, first):
            seen.setdefault(spec.label, spec)
    return [seen[k] for k in sorted(seen)]


def compute_spectra(config, setup=None):
    """Full sorted eigenvalues of A and of C^T A C for each spec.

    ``output.spectrum_method = dense`` assembles A (subject to the dense cap);
    ``lowrank`` uses the exact projection onto span([U, W]).
    """
    cap = config.output.dense_cap
    if config.output.spectrum_method == "dense" and config.hessian_size > cap:
        raise DenseCapError(f"Hessian dimension {config.hessian_size} exceeds the dense cap "
                            f"{cap}; use a smaller configuration or output.spectrum_method=lowrank")
    setup = prepare(config) if setup is None else setup
    op = build_hessian(setup.state, setup.problem)
    dense = None
    if config.output.spectrum_method == "dense":
        dense = assemble_dense(op, cap)
        dense = 0.5 * (dense + dense.T)
    out = {}
    for spec in spectrum_specs(config):
        pairs = preconditioner_pairs(spec, op, setup.previous)
        factor = None if pairs is None else build_spectral_lmp(pairs)
        if dense is not None:
            out[spec.label] = np.sort(dense_preconditioned_spectrum(dense, factor))
        else:
            out[spec.label] = preconditioned_spectrum(op, factor)
    return out


SWEEP_AXES = ("k", "l", "obs-network")


def parse_sweep_values(axis, text):
    items = [v.strip() for v in text.split(",") if v.strip()]
    if not items:
        raise ConfigError("sweep needs at least one value")
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    try:
        if axis == "obs-network":
            return [tuple(int(x) for x in v.split("/")) for v in items]
        return [int(v) for v in items]
    except ValueError as exc:
        raise ConfigError(f"bad sweep values {text!r}") from exc


def sweep_config(config, axis, value):
    if axis == "obs-network":
        if len(value) != 2:
            raise ConfigError("obs-network values are space_stride/time_stride")
        overrides = [f"observations.space_stride={value[0]}",
                     f"observations.time_stride={value[1]}"]
    else:
        overrides = [f"precond.{axis}={value}"]
    return parse_config(config.to_ini(), overrides)


def run_sweep(config, axis, values, workers=None):
    """Rows (axis, value, q, label, iteration, mean, std, n_seeds)."""
    rows = []
    setup = None
    for value in values:
        cfg = sweep_config(config, axis, value)
        # k and l leave the data and first loop untouched
        if setup is None or axis == "obs-network":
            setup = prepare(cfg)
        else:
            setup = copy.copy(setup)
            setup.config = cfg
        result = run_experiment(cfg, workers, setup)
        shown = "/".join(map(str, value)) if axis == "obs-network" else str(value)
        rows.extend((axis, shown, result.q) + row for row in summarize(result))
    return rows
