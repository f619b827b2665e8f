import numpy as np
import pytest

from conftest import affine_system, random_quadratic

from bregman_kaczmarz import selection as sel
from bregman_kaczmarz import solver as slv
from bregman_kaczmarz.generators import GeneratorSpec, generate_gaussian
from bregman_kaczmarz.priors import SparsePrior
from bregman_kaczmarz.systems import NonlinearSystem


def small_instance(seed=5, m=20, n=10, sp=0.2):
    return generate_gaussian(GeneratorSpec("gaussian", m, n, sp, seed=seed))


class TestSolutionError:
    def test_exact(self, rng):
        t = rng.standard_normal(4)
        assert slv.solution_error(t, t) == 0.0

    def test_zero_estimate(self, rng):
        t = rng.standard_normal(4)
        assert slv.solution_error(np.zeros(4), t) == pytest.approx(1.0)

    def test_double(self, rng):
        t = rng.standard_normal(4)
        assert slv.solution_error(2.0 * t, t) == pytest.approx(1.0)

    def test_zero_truth(self):
        with pytest.raises(slv.ZeroTruth):
            slv.solution_error(np.ones(3), np.zeros(3))


class TestConfigValidation:
    def test_max_iters(self):
        with pytest.raises(ValueError):
            slv.SolverConfig(max_iters=0)

    def test_tol(self):
        with pytest.raises(ValueError):
            slv.SolverConfig(tol=0.0)

    def test_block_norm(self):
        with pytest.raises(ValueError):
            slv.SolverConfig(block_norm="nuclear")

    def test_low_alpha_warns(self):
        with pytest.warns(UserWarning):
            slv.SolverConfig(stepsize=sel.Constant(0.5))

    def test_low_delta_warns(self):
        with pytest.warns(UserWarning):
            slv.SolverConfig(stepsize=sel.Adaptive(0.5))


class TestReductionOracles:
    """Independent re-implementations of the collapsed special cases."""

    def test_classic_nonlinear_kaczmarz(self):
        # zero shrinkage, singleton uniform rows: the engine must reproduce
        # x <- x - F_i(x) grad_i / ||grad_i||^2 with the same index draws
        inst = small_instance(seed=8)
        prior = SparsePrior(0.0)
        config = slv.SolverConfig(selection=sel.UniformRandom(),
                                  stepsize=sel.Constant(1.0), seed=77,
                                  max_iters=50, tol=1e-300,
                                  keep_iterates=True)
        x0 = np.random.default_rng(5).standard_normal(10)
        record = slv.run(inst.system, prior, config, x0)

        rng = np.random.default_rng(77)
        x = x0.copy()
        for dual in record.duals[1:]:
            i = int(rng.integers(inst.system.m))
            g = inst.system.grad_component(i, x)
            x = x - (inst.system.eval_component(i, x) / float(g @ g)) * g
            np.testing.assert_allclose(dual, x, atol=1e-12)

    def test_averaging_block_nonlinear_kaczmarz(self):
        # zero shrinkage, greedy block, gradient-norm weights, constant step:
        # matches the direct averaged update in primal coordinates
        inst = small_instance(seed=9)
        prior = SparsePrior(0.0)
        config = slv.SolverConfig(selection=sel.GreedyBlock(0.3),
                                  stepsize=sel.Constant(1.5), seed=0,
                                  max_iters=50, tol=1e-300,
                                  keep_iterates=True)
        x0 = np.random.default_rng(6).standard_normal(10)
        record = slv.run(inst.system, prior, config, x0)

        x = x0.copy()
        for dual in record.duals[1:]:
            F = inst.system.eval_all(x)
            sq = F * F
            block = np.flatnonzero(sq >= 0.3 * sq.max())
            G = inst.system.grad_block(block, x)
            x = x - 1.5 * (G.T @ F[block]) / np.sum(G ** 2)
            np.testing.assert_allclose(dual, x, atol=1e-12)

    def test_maximal_residual_linear_kaczmarz(self, rng):
        # affine system, zero shrinkage, theta=1, alpha=1: plain hyperplane
        # projection onto the worst-violated row
        B = rng.standard_normal((6, 3))
        y = rng.standard_normal(6)
        sys = affine_system(B, y)
        prior = SparsePrior(0.0)
        config = slv.SolverConfig(selection=sel.GreedyBlock(1.0),
                                  stepsize=sel.Constant(1.0),
                                  max_iters=50, tol=1e-300,
                                  keep_iterates=True)
        x0 = rng.standard_normal(3)
        record = slv.run(sys, prior, config, x0)

        x = x0.copy()
        for dual in record.duals[1:]:
            r = B @ x - y
            i = int(np.argmax(r * r))
            x = x - (r[i] / float(B[i] @ B[i])) * B[i]
            np.testing.assert_allclose(dual, x, atol=1e-12)

    def test_theta_one_equals_max_residual_trace(self):
        inst = small_instance(seed=10)
        prior = SparsePrior(2.0)
        common = dict(stepsize=sel.Constant(1.0), max_iters=50, tol=1e-300,
                      keep_iterates=True)
        rec_greedy = slv.run(inst.system, prior,
                             slv.SolverConfig(selection=sel.GreedyBlock(1.0),
                                              **common),
                             np.random.default_rng(2).standard_normal(10))
        rec_max = slv.run(inst.system, prior,
                          slv.SolverConfig(selection=sel.MaxResidual(),
                                           **common),
                          np.random.default_rng(2).standard_normal(10))
        assert len(rec_greedy.duals) == len(rec_max.duals)
        for a, b in zip(rec_greedy.duals, rec_max.duals):
            np.testing.assert_allclose(a, b, atol=1e-12)


class TestRun:
    def test_starts_converged(self, rng):
        # consistent affine system evaluated exactly at its solution
        B = rng.standard_normal((4, 3))
        x0 = rng.standard_normal(3)
        sys = affine_system(B, B @ x0)
        record = slv.run(sys, SparsePrior(0.0), slv.SolverConfig(), x0)
        assert record.status == slv.CONVERGED
        assert record.iterations == 0

    def test_initial_relative_residual_is_one(self, rng):
        inst = small_instance()
        record = slv.run(inst.system, SparsePrior(2.0), slv.SolverConfig(),
                         rng.standard_normal(10))
        assert record.rows[0][1] == 1.0

    def test_mirror_consistency(self, rng):
        inst = small_instance()
        prior = SparsePrior(2.0)
        config = slv.SolverConfig(selection=sel.GreedyBlock(0.1),
                                  stepsize=sel.Adaptive(1.3),
                                  max_iters=30, keep_iterates=True)
        record = slv.run(inst.system, prior, config, rng.standard_normal(10))
        np.testing.assert_array_equal(record.final_primal,
                                      prior.conj_grad(record.final_dual))

    def test_determinism(self, rng):
        inst = small_instance()
        x0 = rng.standard_normal(10)
        prior = SparsePrior(2.0)
        config = slv.SolverConfig(selection=sel.ResidualProbability(), seed=4,
                                  max_iters=100)
        rec1 = slv.run(inst.system, prior, config, x0, truth=inst.truth)
        rec2 = slv.run(inst.system, prior, config, x0, truth=inst.truth)
        assert rec1.status == rec2.status
        assert rec1.iterations == rec2.iterations
        for r1, r2 in zip(rec1.rows, rec2.rows):
            assert r1[:6] == r2[:6]     # everything except elapsed_ns

    def test_history_suppressed(self, rng):
        inst = small_instance()
        config = slv.SolverConfig(record_history=False, max_iters=20)
        record = slv.run(inst.system, SparsePrior(2.0), config,
                         rng.standard_normal(10))
        assert len(record.rows) == 1

    def test_degenerate_zero_gradient(self):
        # a constant nonzero row has zero gradient everywhere
        sys = affine_system(np.zeros((1, 2)), np.array([1.0]))
        record = slv.run(sys, SparsePrior(0.0),
                         slv.SolverConfig(selection=sel.MaxResidual()),
                         np.zeros(2))
        assert record.status == slv.DEGENERATE

    def test_nan_aborts(self):
        class Exploding(NonlinearSystem):
            m, n = 1, 1

            def eval_component(self, i, x):
                with np.errstate(over="ignore"):
                    return float(np.exp(x[0] ** 2) - 2.0)

            def grad_component(self, i, x):
                return np.array([2.0 * x[0] * np.exp(x[0] ** 2)])

        record = slv.run(Exploding(), SparsePrior(0.0),
                         slv.SolverConfig(selection=sel.MaxResidual()),
                         np.array([40.0]))
        assert record.status == slv.DEGENERATE
        assert record.iterations == 0

    def test_csv_round_numbers(self, tmp_path, rng):
        inst = small_instance()
        record = slv.run(inst.system, SparsePrior(2.0),
                         slv.SolverConfig(max_iters=10),
                         rng.standard_normal(10), truth=inst.truth)
        path = tmp_path / "hist.csv"
        record.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0].split(",")[:7] == slv.CSV_HEADER
        assert len(lines) == len(record.rows) + 1


class TestMonotoneBregman:
    def test_decrease_near_root(self):
        # from a local start with stepsize 1 the distance to the root
        # decreases every iteration
        inst = small_instance(seed=21, m=40, n=20, sp=0.2)
        prior = SparsePrior(2.0)
        x0 = (inst.truth + 2.0 * np.sign(inst.truth)
              + 1e-3 * np.random.default_rng(0).standard_normal(20))
        config = slv.SolverConfig(selection=sel.GreedyBlock(0.1),
                                  stepsize=sel.Constant(1.0), max_iters=500)
        record = slv.run(inst.system, prior, config, x0, truth=inst.truth)
        breg = record.column("bregman")
        assert record.status == slv.CONVERGED
        assert np.all(np.diff(breg) <= 1e-10)
