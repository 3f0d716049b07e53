"""WMC, semantic loss, entropy, and gradient queries vs. brute force."""

import math

import numpy as np
import pytest

import nesykit as nk
from nesykit import compiler as cp
from nesykit import queries as qr
from nesykit.circuit import Circuit, model_count

from oracles import (
    cond_entropy_brute,
    fd_gradient,
    random_formula,
    wmc_brute,
)

IMPLICATION = "(=> (and (var 0) (var 1)) (var 2))"
XONE3 = (
    "(and (or (var 0) (var 1) (var 2))"
    " (not (and (var 0) (var 1)))"
    " (not (and (var 0) (var 2)))"
    " (not (and (var 1) (var 2))))"
)


def compiled(text: str, **kw):
    c, _ = cp.compile(nk.parse_formula(text), **kw)
    return c


def random_probs(rng, n):
    return rng.uniform(0.05, 0.95, size=n)


class TestEvaluate:
    def test_worked_example_trace(self):
        c = compiled(IMPLICATION, order=[2, 0, 1])
        trace = qr.evaluate(c, [0.3, 0.5, 0.2])
        assert abs(trace.wmc - 0.88) < 1e-12
        probs = np.exp(trace.log_prob)
        for expected in (0.2, 0.68, 0.85, 0.15, 0.7):
            assert np.min(np.abs(probs - expected)) < 1e-9
        for i, w in trace.or_weights.items():
            assert abs(w.sum() - 1.0) < 1e-12
        assert (trace.entropy >= -1e-15).all()

    def test_tautology_root_probability_one(self):
        c = compiled("(or (var 0) (not (var 0)))")
        assert abs(qr.evaluate(c, [0.37]).wmc - 1.0) < 1e-12

    def test_const_false_root_probability_zero(self):
        c = compiled("(and (var 0) (not (var 0)))")
        trace = qr.evaluate(c, [0.4])
        assert trace.wmc == 0.0
        assert trace.log_prob[-1] == -np.inf

    def test_refuses_bad_structure(self):
        c = Circuit([("L", 0, True), ("L", 0, True), ("O", None, (0, 1))], 1)
        with pytest.raises(ValueError, match="refused"):
            qr.evaluate(c, [0.5])


class TestWmc:
    def test_exactly_one_of_two_at_half(self):
        c = compiled("(or (and (var 0) (not (var 1))) (and (not (var 0)) (var 1)))")
        assert abs(qr.wmc(c, [0.5, 0.5]) - 0.5) < 1e-12

    def test_matches_brute_force_on_random_circuits(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            n = int(rng.integers(1, 11))
            f = random_formula(rng, n)
            c, _ = cp.compile(f)
            for _ in range(3):
                p = random_probs(rng, n)
                assert abs(qr.wmc(c, p) - wmc_brute(f, p)) < 1e-10

    def test_bounded_by_unit_interval(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            f = random_formula(rng, 6)
            c, _ = cp.compile(f)
            w = qr.wmc(c, rng.uniform(0, 1, size=6))
            assert 0.0 <= w <= 1.0

    def test_count_is_scaled_uniform_wmc(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            n = int(rng.integers(1, 13))
            f = random_formula(rng, n)
            c, _ = cp.compile(f)
            w = qr.wmc(c, np.full(n, 0.5))
            assert abs(w * 2**n - model_count(c)) < 1e-9 * 2**n + 1e-12


class TestSemanticLoss:
    def test_worked_example(self):
        c = compiled(IMPLICATION)
        assert abs(qr.semantic_loss(c, [0.3, 0.5, 0.2]) - (-math.log(0.88))) < 1e-12

    def test_tautology_is_zero(self):
        c = compiled("(or (var 0) (not (var 0)))")
        assert qr.semantic_loss(c, [0.9]) == 0.0

    def test_unsat_is_infinity_sentinel(self):
        c = compiled("(and (var 0) (not (var 0)))")
        assert qr.semantic_loss(c, [0.5]) == math.inf

    def test_monotone_against_wmc(self):
        # pushing p toward a model raises wmc, hence lowers the loss
        rng = np.random.default_rng(40)
        for _ in range(20):
            n = int(rng.integers(2, 8))
            f = random_formula(rng, n)
            models = list(nk.enumerate_models(f))
            if not models:
                continue
            y = np.array(models[int(rng.integers(len(models)))], dtype=float)
            c, _ = cp.compile(f)
            p0 = random_probs(rng, n)
            p1 = p0 + 0.25 * (y - p0)
            w0, w1 = qr.wmc(c, p0), qr.wmc(c, p1)
            if w1 > w0:
                assert qr.semantic_loss(c, p1) < qr.semantic_loss(c, p0)


class TestNesyEntropy:
    def test_single_literal_has_no_uncertainty(self):
        c = compiled("(var 0)")
        assert qr.nesy_entropy(c, [0.42]) == 0.0

    def test_exactly_one_of_three_uniform(self):
        c = compiled(XONE3)
        assert abs(qr.nesy_entropy(c, [0.5, 0.5, 0.5]) - math.log(3)) < 1e-12

    def test_worked_example_root_value(self):
        f = nk.parse_formula(IMPLICATION)
        c, _ = cp.compile(f, order=[2, 0, 1])
        p = [0.3, 0.5, 0.2]
        got = qr.nesy_entropy(c, p)
        assert abs(got - cond_entropy_brute(f, p)) < 1e-10
        assert abs(got - 1.6335) < 5e-3

    def test_matches_brute_force_on_random_circuits(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            n = int(rng.integers(1, 11))
            f = random_formula(rng, n)
            if not nk.enumerate_models(f).count:
                continue
            c, _ = cp.compile(f)
            for _ in range(3):
                p = random_probs(rng, n)
                assert abs(qr.nesy_entropy(c, p) - cond_entropy_brute(f, p)) < 1e-8

    def test_bounded_by_log_model_count(self):
        rng = np.random.default_rng(59)
        for _ in range(25):
            n = int(rng.integers(1, 9))
            f = random_formula(rng, n)
            c, _ = cp.compile(f)
            mc = model_count(c)
            if mc == 0:
                continue
            h = qr.nesy_entropy(c, random_probs(rng, n))
            assert -1e-12 <= h <= math.log(mc) + 1e-9

    def test_uniform_identity(self):
        rng = np.random.default_rng(61)
        for _ in range(25):
            n = int(rng.integers(1, 11))
            f = random_formula(rng, n)
            c, _ = cp.compile(f)
            mc = model_count(c)
            if mc == 0:
                continue
            h = qr.nesy_entropy(c, np.full(n, 0.5))
            assert abs(h - math.log(mc)) < 1e-9

    def test_empty_support_is_an_error(self):
        c = compiled("(and (var 0) (not (var 0)))")
        with pytest.raises(ValueError, match="entropy undefined on empty support"):
            qr.nesy_entropy(c, [0.5])


class TestFullEntropy:
    def test_uniform_vector(self):
        assert abs(qr.full_entropy(np.full(5, 0.5)) - 5 * math.log(2)) < 1e-12

    def test_near_deterministic_vector(self):
        assert qr.full_entropy([1e-7, 1 - 1e-7]) < 1e-5

    def test_three_binary_entropies(self):
        p = [0.3, 0.5, 0.2]
        direct = sum(-q * math.log(q) - (1 - q) * math.log(1 - q) for q in p)
        got = qr.full_entropy(p)
        assert abs(got - direct) < 1e-12
        assert abs(got - 1.8045) < 1e-4


class TestWmcGradient:
    def test_single_positive_literal(self):
        c = compiled("(var 0)")
        np.testing.assert_allclose(qr.wmc_gradient(c, [0.3]), [1.0])

    def test_tautology_gradient_is_zero(self):
        c = compiled("(or (var 0) (not (var 0)))")
        np.testing.assert_allclose(qr.wmc_gradient(c, [0.3]), [0.0], atol=1e-15)

    def test_worked_example_closed_form(self):
        # wmc = 1 - p0 p1 (1 - p2), so d/dp0 = -p1 (1 - p2)
        c = compiled(IMPLICATION)
        g = qr.wmc_gradient(c, [0.3, 0.5, 0.2])
        np.testing.assert_allclose(g, [-0.4, -0.24, 0.15], atol=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(77)
        for _ in range(10):
            n = int(rng.integers(1, 9))
            f = random_formula(rng, n)
            c, _ = cp.compile(f)
            p = random_probs(rng, n)
            exact = qr.wmc_gradient(c, p)
            approx = fd_gradient(lambda q: qr.wmc(c, q), p)
            np.testing.assert_allclose(exact, approx, rtol=1e-4, atol=1e-7)


class TestEntropyGradient:
    def test_tautology_binary_entropy_derivative(self):
        c = compiled("(or (var 0) (not (var 0)))")
        for p in (0.2, 0.5, 0.8):
            expected = math.log((1 - p) / p)
            np.testing.assert_allclose(
                qr.entropy_gradient(c, [p]), [expected], atol=1e-12
            )

    def test_single_literal_gradient_is_zero(self):
        c = compiled("(var 0)")
        np.testing.assert_allclose(qr.entropy_gradient(c, [0.7]), [0.0], atol=1e-15)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(78)
        done = 0
        while done < 10:
            n = int(rng.integers(1, 9))
            f = random_formula(rng, n)
            if not nk.enumerate_models(f).count:
                continue
            c, _ = cp.compile(f)
            p = random_probs(rng, n)
            exact = qr.entropy_gradient(c, p)
            approx = fd_gradient(lambda q: qr.nesy_entropy(c, q), p)
            np.testing.assert_allclose(exact, approx, rtol=1e-4, atol=1e-6)
            done += 1

    def test_empty_support_is_an_error(self):
        c = compiled("(and (var 0) (not (var 0)))")
        with pytest.raises(ValueError, match="empty support"):
            qr.entropy_gradient(c, [0.5])


class TestBatchQuery:
    def test_rows_equal_single_queries_bitwise(self):
        rng = np.random.default_rng(83)
        c = compiled(IMPLICATION, order=[2, 0, 1])
        P = rng.uniform(0.05, 0.95, size=(16, 3))
        for what, single in [
            ("wmc", qr.wmc),
            ("sl", qr.semantic_loss),
            ("entropy", qr.nesy_entropy),
        ]:
            batch = qr.batch_query(c, P, what)
            looped = np.array([single(c, row) for row in P])
            assert np.array_equal(batch, looped)

    def test_gradients_match_single_instance(self):
        rng = np.random.default_rng(84)
        c = compiled(XONE3)
        P = rng.uniform(0.05, 0.95, size=(8, 3))
        _vals, grads = qr.batch_query(c, P, "entropy", with_grad=True)
        for b, row in enumerate(P):
            assert np.array_equal(grads[b], qr.entropy_gradient(c, row))

    def test_shape_mismatch_rejected(self):
        c = compiled(XONE3)
        with pytest.raises(ValueError, match="shape"):
            qr.batch_query(c, np.zeros((4, 5)), "wmc")

    def test_training_losses_consistent(self):
        rng = np.random.default_rng(85)
        c = compiled(XONE3)
        P = rng.uniform(0.05, 0.95, size=(6, 3))
        sl, ent, grad = qr.batch_training_losses(c, P, 0.7, 0.3)
        np.testing.assert_allclose(sl, qr.batch_query(c, P, "sl"))
        np.testing.assert_allclose(ent, qr.batch_query(c, P, "entropy"))
        _s, gs = qr.batch_query(c, P, "sl", with_grad=True)
        _e, ge = qr.batch_query(c, P, "entropy", with_grad=True)
        np.testing.assert_allclose(grad, 0.7 * gs + 0.3 * ge, atol=1e-12)


class TestFreeVariables:
    def test_loaded_circuit_with_unmentioned_variable(self):
        # literal over var 0, but two declared variables
        from nesykit.circuit import read_nnf

        c = read_nnf("nnf 1 0 2\nL 1\n")
        p = [0.3, 0.8]
        assert abs(qr.wmc(c, p) - 0.3) < 1e-12
        h = qr.nesy_entropy(c, p)
        expected = -(0.8 * math.log(0.8)) - 0.2 * math.log(0.2)
        assert abs(h - expected) < 1e-12
        g = qr.entropy_gradient(c, p)
        np.testing.assert_allclose(g, [0.0, math.log(0.2 / 0.8)], atol=1e-12)
