import numpy as np
import pytest

from wc4dvar import assimilation as asm
from wc4dvar.config import bundled_config
from wc4dvar.errors import ConfigError
from wc4dvar.krylov import pcg_split
from wc4dvar.models import observe
from oracles import central_difference, dense_problem_matrices
from problems import small_config, small_setup


def tiny_setup():
    return small_setup(model__n=4, model__steps=2, observations__space_stride=2,
                       observations__time_stride=1, covariance__length_b=1,
                       covariance__length_q=0.5, precond__k=2)


def test_twin_is_deterministic():
    cfg = small_config()
    a, b = asm.generate_twin(cfg), asm.generate_twin(cfg)
    for f in ("truth", "truth_eta", "background", "observations"):
        np.testing.assert_array_equal(getattr(a, f), getattr(b, f))


def test_noise_free_twin():
    cfg = small_config()
    pb = asm.build_problem(cfg)
    tw = asm.generate_twin(cfg, pb, noise=False)
    np.testing.assert_array_equal(tw.observations, observe(tw.truth, pb.network))
    np.testing.assert_array_equal(tw.background, tw.truth[0])
    assert not np.any(tw.truth_eta)


def test_twin_truth_follows_forcing_recursion():
    cfg, pb, tw, _ = small_setup()
    x = tw.truth[0]
    for i in range(pb.grid.N):
        x = pb.model.step(x) + tw.truth_eta[i]
        np.testing.assert_allclose(tw.truth[i + 1], x, rtol=1e-13, atol=1e-13)


def test_advection_twin_has_100_observations():
    cfg = bundled_config("advection.cfg")
    tw = asm.generate_twin(cfg)
    assert tw.observations.shape == (100,) and np.all(np.isfinite(tw.observations))
    assert cfg.hessian_size == 2040


def test_innovations():
    cfg, pb, tw, st0 = small_setup()
    b, d = asm.compute_innovations(st0, tw, pb)
    assert not np.any(b)
    np.testing.assert_allclose(d, tw.observations - observe(st0.states, pb.network))
    clean = asm.generate_twin(cfg, pb, noise=False)
    p = np.vstack([clean.truth[0], clean.truth_eta])
    b, d = asm.compute_innovations(asm.make_state(pb, p), clean, pb)
    np.testing.assert_allclose(d, 0.0, atol=1e-12)


def test_innovation_blocks_by_hand():
    cfg, pb, tw, _ = tiny_setup()
    rng = np.random.default_rng(0)
    p = rng.standard_normal((3, 4))
    state = asm.make_state(pb, p)
    b, d = asm.compute_innovations(state, tw, pb)
    expected = np.concatenate([tw.background - p[0], -p[1], -p[2]])
    np.testing.assert_allclose(b, expected)
    x1 = pb.model.step(p[0]) + p[1]
    x2 = pb.model.step(x1) + p[2]
    Hx = np.concatenate([x1[[0, 2]], x2[[0, 2]]])
    np.testing.assert_allclose(d, tw.observations - Hx, rtol=1e-12)


def test_quadratic_cost_routes_agree():
    cfg, pb, tw, st0 = small_setup()
    st1 = asm.make_state(pb, st0.p + 0.01)
    op = asm.build_hessian(st1, pb)
    b, d = asm.compute_innovations(st1, tw, pb)
    c0 = asm.cost_offset(b, d, pb)
    assert asm.quadratic_cost(np.zeros(op.shape[0]), op, b, d) == pytest.approx(c0, rel=1e-13)
    rhs = op.rhs(b, d)
    for seed in range(3):
        x = np.random.default_rng(seed).standard_normal(op.shape[0])
        direct = asm.quadratic_cost(x, op, b, d)
        recurrence = 0.5 * x @ op.matvec(x) - x @ rhs + c0
        assert direct == pytest.approx(recurrence, rel=1e-10)


def test_gradient_matches_finite_differences():
    cfg, pb, tw, st0 = small_setup()
    st1 = asm.make_state(pb, st0.p + 0.01)
    op = asm.build_hessian(st1, pb)
    b, d = asm.compute_innovations(st1, tw, pb)
    rhs = op.rhs(b, d)
    rng = np.random.default_rng(1)
    x = rng.standard_normal(op.shape[0])
    grad = op.matvec(x) - rhs
    for _ in range(10):
        u = rng.standard_normal(op.shape[0])
        fd = central_difference(lambda z: asm.quadratic_cost(z, op, b, d), x, u, h=1e-3)
        assert abs(fd - grad @ u) <= 1e-6 * max(abs(grad @ u), 1.0)


def test_nonlinear_cost_at_first_guess_is_offset():
    cfg, pb, tw, st0 = small_setup()
    b, d = asm.compute_innovations(st0, tw, pb)
    assert asm.nonlinear_cost(st0, tw, pb) == asm.cost_offset(b, d, pb)


def test_tiny_system_against_dense_solves():
    cfg, pb, tw, st0 = tiny_setup()
    st1 = asm.make_state(pb, st0.p + 0.05)
    rep = asm.run_inner_loop(st1, tw, pb, max_iter=200, rel_tol=1e-14)
    b, d = asm.compute_innovations(st1, tw, pb)
    Linv, H, Rinv, D, Dh = dense_problem_matrices(pb, st1.trajectory)
    G = H @ Linv
    # first-level preconditioned system
    A = np.eye(D.shape[0]) + Dh @ G.T @ Rinv @ G @ Dh
    rhs = np.linalg.solve(Dh, b) + Dh @ G.T @ Rinv @ d
    xt = np.linalg.solve(A, rhs)
    assert np.linalg.norm(rep.solution - xt) <= 1e-8 * np.linalg.norm(xt)
    # unpreconditioned forcing-formulation system, mapped back through D^{1/2}
    Dinv = np.linalg.inv(D)
    dp = np.linalg.solve(Dinv + G.T @ Rinv @ G, Dinv @ b + G.T @ Rinv @ d)
    np.testing.assert_allclose(rep.increment.reshape(-1), dp, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(Dh @ xt, dp, rtol=1e-8, atol=1e-10)


def test_converged_gradient_small():
    cfg, pb, tw, st0 = small_setup()
    rep = asm.run_inner_loop(st0, tw, pb, max_iter=200, rel_tol=1e-8)
    b, d = asm.compute_innovations(st0, tw, pb)
    rhs = rep.op.rhs(b, d)
    assert rep.history.converged
    assert np.linalg.norm(rep.op.matvec(rep.solution) - rhs) <= 1e-6 * np.linalg.norm(rhs)


def test_none_and_k0_are_bitwise_identical():
    cfg, pb, tw, st0 = small_setup()
    a = asm.run_inner_loop(st0, tw, pb, asm.PrecondSpec("none"), max_iter=15)
    b = asm.run_inner_loop(st0, tw, pb, asm.PrecondSpec("revd", k=0), max_iter=15)
    np.testing.assert_array_equal(a.solution, b.solution)
    np.testing.assert_array_equal(a.costs, b.costs)
    assert a.spec.label == b.spec.label == "none"


@pytest.mark.parametrize("spec", [asm.PrecondSpec("none"), asm.PrecondSpec("revd", 4, 3, 1),
                                  asm.PrecondSpec("nystrom", 4, 3, 1),
                                  asm.PrecondSpec("ritzit", 4, 3, 1)])
def test_costs_non_increasing(spec):
    cfg, pb, tw, st0 = small_setup()
    rep = asm.run_inner_loop(st0, tw, pb, spec, max_iter=40)
    c = rep.costs
    assert np.all(np.diff(c) <= 1e-10 * np.abs(c).max())
    if spec.randomized:
        assert rep.sketch_products == {"revd": 2, "nystrom": 2, "ritzit": 1}[spec.method] * 7
        assert rep.ritz_values.shape == (4,)


def test_previous_loop_methods():
    cfg, pb, tw, st0 = small_setup()
    for method in ("deterministic", "lanczos"):
        with pytest.raises(ConfigError):
            asm.run_inner_loop(st0, tw, pb, asm.PrecondSpec(method, 3))
    r1 = asm.run_inner_loop(st0, tw, pb, max_iter=30, harvest=True)
    st1 = asm.outer_update(st0, r1, pb)
    det = asm.run_inner_loop(st1, tw, pb, asm.PrecondSpec("deterministic", 3), previous=r1)
    w = np.linalg.eigvalsh(r1.op.matmat(np.eye(r1.op.shape[0])))
    np.testing.assert_allclose(det.ritz_values, w[::-1][:3], rtol=1e-9)
    lan = asm.run_inner_loop(st1, tw, pb, asm.PrecondSpec("lanczos", 3), previous=r1)
    np.testing.assert_allclose(lan.ritz_values, w[::-1][:3], rtol=1e-6)
    no_harvest = asm.run_inner_loop(st0, tw, pb, max_iter=5)
    with pytest.raises(ConfigError):
        asm.run_inner_loop(st1, tw, pb, asm.PrecondSpec("lanczos", 2), previous=no_harvest)


def test_linear_model_minimum_in_first_loop():
    cfg, pb, tw, st0 = small_setup("advection")
    r1 = asm.run_inner_loop(st0, tw, pb, max_iter=200, rel_tol=1e-12)
    st1 = asm.outer_update(st0, r1, pb)
    assert st1.index == 1
    assert asm.nonlinear_cost(st1, tw, pb) == pytest.approx(r1.costs[-1], rel=1e-9)
    r2 = asm.run_inner_loop(st1, tw, pb, max_iter=200, rel_tol=1e-12)
    assert np.linalg.norm(r2.increment) <= 1e-8 * np.linalg.norm(r1.increment)


def test_outer_update_zero_increment_and_consistency():
    cfg, pb, tw, st0 = small_setup()
    rep = asm.run_inner_loop(st0, tw, pb, max_iter=5)
    zero = asm.InnerLoopReport(rep.spec, np.zeros_like(rep.increment), rep.solution,
                               rep.history, rep.op)
    st1 = asm.outer_update(st0, zero, pb)
    np.testing.assert_array_equal(st1.p, st0.p)
    np.testing.assert_array_equal(st1.states, st0.states)
    assert st1.index == st0.index + 1
    st2 = asm.outer_update(st0, rep, pb)
    again = pb.model.integrate(st2.p[0], st2.p[1:]).states
    np.testing.assert_allclose(st2.states, again, rtol=1e-12, atol=1e-12)


def test_precond_spec_labels_and_validation():
    assert asm.PrecondSpec("revd", 5, 5, 3).label == "revd-k5-l5"
    assert asm.PrecondSpec("deterministic", 15).label == "deterministic-k15"
    with pytest.raises(ValueError):
        asm.PrecondSpec("magic")


def test_build_problem_config_error():
    cfg = small_config(covariance__soar_distance="cyclic", covariance__length_b=50,
                       model__n=12)
    with pytest.raises(Exception) as info:
        asm.build_problem(cfg)
    assert "positive definite" in str(info.value)
