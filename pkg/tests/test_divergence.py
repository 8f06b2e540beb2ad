import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdiv import classical as cl
from qdiv import divergence as dv
from qdiv import matcore as mc
from qdiv import quantum as qu
from qdiv.errors import DomainError, SupportViolation

from conftest import decode
from oracles import petz_rre

P = np.diag([0.8, 0.2])
U2 = np.diag([0.5, 0.5])
seeds = st.integers(0, 2 ** 32 - 1)


def pair(seed, d=3):
    rng = np.random.default_rng(seed)
    return qu.random_density(d, d, rng), qu.random_density(d, d, rng), rng


def c_counterexample(c=0.5):
    return np.diag([1.0, 0.0]), np.array([[1.0, c], [c, 1.0]])


class TestOrders:
    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.51, 50))
    def test_hoelder_conjugate(self, alpha):
        if abs(alpha - 1) < 1e-6:
            return
        beta = dv.hoelder_conjugate(alpha)
        assert abs(1 / alpha + 1 / beta - 2) <= 1e-14


class TestUmegaki:
    def test_classical_values(self):
        assert np.isclose(dv.qre(P, U2), 0.278072, atol=1e-6)
        assert np.isclose(dv.qiv(P, U2), 0.64, atol=1e-12)

    def test_equal_and_support(self, rng):
        r = qu.random_density(3, 3, rng)
        assert abs(dv.qre(r, r)) <= 1e-12
        assert dv.qre(np.eye(2) / 2, np.diag([1.0, 0])) == np.inf

    def test_klein(self):
        for s in range(50):
            r, t, _ = pair(s)
            assert dv.qre(r, t) >= 0

    def test_nussbaum_szkola(self):
        for s in range(30):
            r, t, _ = pair(s)
            Pn, Qn = cl.nussbaum_szkola(r, t)
            assert abs(cl.kl(Pn, Qn) - dv.qre(r, t)) <= 1e-9
            assert abs(cl.info_variance(Pn, Qn) - dv.qiv(r, t)) <= 1e-9


class TestPetzRenyi:
    def test_classical_value(self):
        assert np.isclose(dv.rre(P, U2, 2.0), np.log2(1.36), atol=1e-12)

    def test_against_scipy(self):
        for s in range(20):
            r, t, _ = pair(s)
            for a in (0.3, 0.7, 1.5, 2.0):
                assert np.isclose(dv.rre(r, t, a), petz_rre(r, t, a), rtol=1e-9, atol=1e-11)

    def test_alpha_one_limit(self):
        r, t, _ = pair(3)
        assert abs(dv.rre(r, t, 1 + 1e-4) - dv.qre(r, t)) <= 1e-3

    def test_alpha_zero(self):
        r = qu.random_density(3, 2, 8)
        t = qu.random_density(3, 3, 9)
        assert np.isclose(dv.rre(r, t, 0), -np.log2(np.trace(mc.support_projector(r) @ t).real))

    def test_dpi(self):
        for s in range(150):
            r, t, rng = pair(s, 2 + s % 3)
            ch = qu.random_channel(r.shape[0], 2 + s % 2, 2, rng)
            for a in (0.5, 1.5, 2.0):
                assert dv.rre(r, t, a) >= dv.rre(ch.apply(r), ch.apply(t), a) - 1e-9


class TestSandwiched:
    def test_frozen_oracle(self, oracle_values):
        for case in oracle_values["srd"]:
            r, s = decode(case["rho"]), decode(case["sigma"])
            got = dv.srd(r, s, case["alpha"])
            assert abs(got - case["value"]) <= 1e-9 * (1 + abs(case["value"])), case["alpha"]

    def test_commuting_equals_rre(self, rng):
        p, q = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
        for a in (0.3, 0.7, 2.0, 5.0):
            assert abs(dv.srd(np.diag(p), np.diag(q), a) - dv.rre(np.diag(p), np.diag(q), a)) <= 1e-10
        assert np.isclose(dv.srd(P, U2, 2.0), 0.443607, atol=1e-6)

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8, 2.0, 10.0])
    def test_c_counterexample_closed_form(self, alpha):
        rho, sigma = c_counterexample()
        g = dv.gamma_of(alpha)
        lam1 = 0.5 * (1.5 ** (2 * g) + 0.5 ** (2 * g))
        assert np.isclose(dv.srd(rho, sigma, alpha), np.log2(lam1 ** alpha) / (alpha - 1), atol=1e-12)
        if alpha == 0.5:
            assert abs(dv.srd(rho, sigma, alpha)) <= 1e-12

    def test_below_petz(self):
        for s in range(500):
            r, t, _ = pair(s, 2 + s % 3)
            for a in (0.3, 0.7, 2.0, 5.0):
                assert dv.srd(r, t, a) <= dv.rre(r, t, a) + 1e-9

    def test_support_cases(self):
        r, t = np.eye(2) / 2, np.diag([1.0, 0.0])
        assert dv.srd(r, t, 2.0) == np.inf
        assert np.isfinite(dv.srd(r, t, 0.7))
        assert dv.srd(np.diag([1.0, 0]), np.diag([0, 1.0]), 0.7) == np.inf
        with pytest.raises(DomainError):
            dv.srd(r, r, 1.0)

    def test_tensor_additivity_and_invariances(self, rng):
        r1, s1 = qu.random_density(2, 2, rng), qu.random_density(2, 2, rng)
        r2, s2 = qu.random_density(2, 2, rng), qu.random_density(2, 2, rng)
        tau = qu.random_density(2, 2, rng)
        V = qu.random_isometry(4, 2, rng)
        for a in (0.6, 2.0):
            tot = dv.srd(np.kron(r1, r2), np.kron(s1, s2), a)
            assert np.isclose(tot, dv.srd(r1, s1, a) + dv.srd(r2, s2, a), atol=1e-10)
            assert np.isclose(dv.srd_q(np.kron(r1, tau), np.kron(s1, tau), a), dv.srd_q(r1, s1, a), atol=1e-10)
            assert np.isclose(dv.srd(V @ r1 @ V.conj().T, V @ s1 @ V.conj().T, a), dv.srd(r1, s1, a), atol=1e-10)

    @settings(max_examples=80, deadline=None)
    @given(seeds, st.sampled_from([0.5, 0.6, 0.9, 1.5, 3.0]))
    def test_dpi_property(self, seed, alpha):
        r, t, rng = pair(seed, 2 + seed % 3)
        ch = qu.random_channel(r.shape[0], 2 + seed % 3, 1 + seed % 3, rng)
        assert dv.srd(r, t, alpha) >= dv.srd(ch.apply(r), ch.apply(t), alpha) - 1e-9

    @settings(max_examples=60, deadline=None)
    @given(seeds, st.floats(0.2, 5.0), st.floats(0.2, 5.0))
    def test_monotone_in_alpha(self, seed, a1, a2):
        a1, a2 = sorted((a1, a2))
        if abs(a1 - 1) < 1e-3 or abs(a2 - 1) < 1e-3:
            return
        r, t, _ = pair(seed)
        assert dv.srd(r, t, a1) <= dv.srd(r, t, a2) + 1e-9

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.sampled_from([0.5, 0.8, 2.0, 4.0]))
    def test_second_slot_monotone(self, seed, alpha):
        r, t, rng = pair(seed)
        tau = t + 0.5 * qu.random_density(3, 3, rng)
        assert dv.srd(r, t, alpha) >= dv.srd(r, tau, alpha) - 1e-9

    def test_premetric(self):
        for s in range(50):
            r, t, _ = pair(s)
            assert dv.srd(r, t, 0.7) >= -1e-12
            assert abs(dv.srd(r, r, 0.7)) <= 1e-8

    def test_joint_convexity(self):
        for s in range(50):
            rng = np.random.default_rng(s)
            r1, r2, s1, s2 = (qu.random_density(2, 2, rng) for _ in range(4))
            for lam in (0.3, 0.5):
                rm, sm = lam * r1 + (1 - lam) * r2, lam * s1 + (1 - lam) * s2
                for a, sign in ((2.0, 1), (0.7, -1)):
                    mixed = lam * dv.srd_q(r1, s1, a) + (1 - lam) * dv.srd_q(r2, s2, a)
                    assert sign * (mixed - dv.srd_q(rm, sm, a)) >= -1e-10

    def test_alpha_one_limit(self):
        for s in range(50):
            r, t, _ = pair(s)
            q = dv.qre(r, t)
            for a in (1 - 1e-4, 1 + 1e-4):
                assert abs(dv.srd(r, t, a) - q) <= 1e-2 * (1 + abs(q))


class TestZeroLimit:
    def test_counterexample(self):
        rho, sigma = c_counterexample()
        assert abs(dv.srd_zero_limit(rho, sigma) + np.log2(1.5)) <= 1e-3
        assert dv.d0(rho, sigma) == 0.0

    def test_equal_support(self):
        rng = np.random.default_rng(17)
        for _ in range(40):
            d = int(rng.integers(2, 5))
            r = int(rng.integers(1, d + 1))
            B = qu.random_unitary(d, rng)[:, :r]
            rho = B @ np.diag(rng.dirichlet(np.ones(r))) @ B.conj().T
            sigma = B @ np.diag(rng.dirichlet(np.ones(r))) @ B.conj().T
            assert abs(dv.srd_zero_limit(rho, sigma)) <= 1e-3

    def test_graded_regression(self):
        # a rank-3 pair whose small-α sandwich spans hundreds of orders of magnitude
        rng = np.random.default_rng([7, 5])
        d, r = 4, 3
        B = qu.random_unitary(d, rng)[:, :r]
        rho = B @ np.diag(rng.dirichlet(np.ones(r))) @ B.conj().T
        sigma = B @ np.diag(rng.dirichlet(np.ones(r))) @ B.conj().T
        for a in (1e-5, 1e-4, 5e-4, 1e-3):
            assert abs(dv.srd(rho, sigma, a)) <= 1e-3


class TestAlphaZ:
    def test_reductions(self):
        for s in range(30):
            r, t, _ = pair(s)
            for a in (0.6, 2.0):
                assert abs(dv.alpha_z(r, t, a, 1.0) - dv.rre(r, t, a)) <= 1e-10
                assert abs(dv.alpha_z(r, t, a, a) - dv.srd(r, t, a)) <= 1e-10

    def test_commuting_independent_of_z(self):
        vals = [dv.alpha_z(P, U2, 2.0, z) for z in (0.5, 1.0, 3.0)]
        assert np.allclose(vals, np.log2(1.36), atol=1e-12)


class TestMinMax:
    def test_examples(self):
        assert np.isclose(dv.dmax(P, U2), 0.678072, atol=1e-6)
        assert np.isclose(dv.dmin(P, U2), 0.152003, atol=1e-6)
        r = qu.random_density(3, 3, 1)
        assert abs(dv.dmin(r, r)) <= 1e-10 and abs(dv.dmax(r, r)) <= 1e-10
        assert dv.dmax(np.eye(2) / 2, np.diag([1.0, 0])) == np.inf

    def test_relations(self):
        for s in range(30):
            r, t, _ = pair(s)
            assert abs(dv.dmin(r, t) - dv.srd(r, t, 0.5)) <= 1e-10
            assert abs(dv.srd(r, t, 1e3) - dv.dmax(r, t)) <= 1e-2
            assert dv.srd(r, t, np.inf) == dv.dmax(r, t)


class TestFidelityDistance:
    def test_examples(self, rng):
        r = qu.random_density(3, 3, rng)
        assert np.isclose(dv.fidelity(r, r), 1) and abs(dv.trace_distance(r, r)) <= 1e-12
        e0, e1 = np.diag([1.0, 0]), np.diag([0, 1.0])
        assert dv.fidelity(e0, e1) == 0 and np.isclose(dv.trace_distance(e0, e1), 1)
        assert np.isclose(dv.fidelity(P, U2), np.sqrt(0.4) + np.sqrt(0.1))
        assert np.isclose(dv.trace_distance(P, U2), 0.3)

    def test_partial_trace_monotone_and_metric(self):
        for s in range(50):
            rng = np.random.default_rng(s)
            a, b, c = (qu.random_density(4, 4, rng) for _ in range(3))
            fa = dv.fidelity(mc.partial_trace(a, [2, 2], [0]), mc.partial_trace(b, [2, 2], [0]))
            assert dv.fidelity(a, b) <= fa + 1e-12
            assert dv.trace_distance(a, c) <= dv.trace_distance(a, b) + dv.trace_distance(b, c) + 1e-12

    def test_uhlmann(self):
        from scipy.optimize import minimize
        rng = np.random.default_rng(3)
        for _ in range(5):
            r, t = qu.random_density(2, 2, rng), qu.random_density(2, 2, rng)
            pr, pt = qu.purify(r), qu.purify(t)

            def neg(x):
                H = np.array([[x[0], x[1] + 1j * x[2]], [x[1] - 1j * x[2], x[3]]])
                w, V = np.linalg.eigh(H)
                U = V @ np.diag(np.exp(1j * w)) @ V.conj().T
                return -abs(np.vdot(pr, np.kron(np.eye(2), U) @ pt))

            best = min(minimize(neg, rng.normal(size=4), method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 5000}).fun
                       for _ in range(4))
            assert abs(-best - dv.fidelity(r, t)) <= 1e-8


class TestHypothesisTesting:
    def test_classical_fixture(self):
        assert np.isclose(dv.hypothesis_testing_re(P, U2, 0.2), 1.0, atol=1e-10)
        assert dv.hypothesis_testing_re(P, U2, 0.0) == dv.d0(P, U2)

    def test_sdp_oracle(self, oracle_values):
        for case in oracle_values["dh"]:
            got = dv.hypothesis_testing_re(decode(case["rho"]), decode(case["sigma"]), case["eps"])
            assert abs(got - case["value"]) <= 1e-4

    @settings(max_examples=60, deadline=None)
    @given(seeds, st.floats(0.01, 0.95))
    def test_commuting_is_classical(self, seed, eps):
        rng = np.random.default_rng(seed)
        d = 2 + seed % 3
        p, q = rng.dirichlet(np.ones(d)), rng.dirichlet(np.ones(d))
        U = qu.random_unitary(d, rng)
        r, t = U @ np.diag(p) @ U.conj().T, U @ np.diag(q) @ U.conj().T
        assert abs(dv.hypothesis_testing_re(r, t, eps) - cl.neyman_pearson_classical(p, q, eps)) <= 1e-10

    def test_optimal_test_is_feasible(self):
        for s in range(30):
            r, t, _ = pair(s)
            T = dv.neyman_pearson_test(r, t, 0.3)
            w = np.linalg.eigvalsh(T)
            assert w.min() >= -1e-10 and w.max() <= 1 + 1e-10
            assert np.trace(T @ r).real >= 0.7 - 1e-9
            assert np.isclose(-np.log2(np.trace(T @ t).real), dv.hypothesis_testing_re(r, t, 0.3), atol=1e-8)


class TestInformationSpectrum:
    def test_identical_states(self):
        val = dv.info_spectrum_ds(np.eye(2) / 2, np.eye(2) / 2, 0.5)
        assert -1e-3 <= val < 0

    def test_classical_threshold(self):
        val = dv.info_spectrum_ds(P, U2, 0.5)
        assert np.log2(1.6) - 1e-3 <= val < np.log2(1.6)

    def test_underline_examples(self, rng):
        assert np.isclose(dv.underline_ds(P, U2, 0.2), np.log2(0.2), atol=1e-9)
        r = qu.random_density(3, 3, rng)
        assert np.isclose(dv.underline_ds(r, r, 0.5), -1, atol=1e-9)

    def test_relations(self):
        for s in range(40):
            r, t, rng = pair(s, 2 + s % 2)
            eps = 0.3
            u = dv.underline_ds(r, t, eps)
            assert abs(u - dv.overline_ds(r, t, 1 - eps)) <= 1e-8
            assert u <= dv.info_spectrum_ds(r, t, eps) + 1e-3
            assert u <= dv.hypothesis_testing_re(r, t, eps) + 1e-8
            assert dv.hypothesis_testing_re(r, t, eps / 2) + np.log2(eps / 2) <= u + 1e-8
            assert np.isclose(dv.underline_ds(r, 3 * t, eps), u - np.log2(3), atol=1e-8)
            ch = qu.random_channel(r.shape[0], 2, 2, rng)
            assert u >= dv.underline_ds(ch.apply(r), ch.apply(t), eps) - 1e-8


class TestFrankLieb:
    def test_attains_q(self):
        for s in range(30):
            r, t, _ = pair(s)
            for a in (0.6, 2.0):
                H = dv.frank_lieb_optimizer(r, t, a)
                assert abs(dv.frank_lieb_functional(H, r, t, a) - dv.srd_q(r, t, a)) <= 1e-8

    def test_identity_case(self, rng):
        r = qu.random_density(3, 3, rng)
        assert np.allclose(dv.frank_lieb_optimizer(r, r, 2.0), np.eye(3), atol=1e-10)

    def test_commuting_closed_form(self):
        H = dv.frank_lieb_optimizer(P, U2, 2.0)
        assert np.allclose(H, np.diag([1.6, 0.4]), atol=1e-12)

    def test_local_optimality(self, rng):
        r, t = qu.random_density(3, 3, rng), qu.random_density(3, 3, rng)
        H = dv.frank_lieb_optimizer(r, t, 2.0)
        f0 = dv.frank_lieb_functional(H, r, t, 2.0)
        for _ in range(100):
            X = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            X = (X + X.conj().T) / 2
            assert dv.frank_lieb_functional(H + 1e-3 * X, r, t, 2.0) <= f0 + 1e-9

    def test_support_violation(self):
        with pytest.raises(SupportViolation):
            dv.frank_lieb_optimizer(np.eye(2) / 2, np.diag([1.0, 0]), 2.0)


class TestDpiEquality:
    def test_unitary(self, rng):
        r, t = qu.random_density(3, 3, rng), qu.random_density(3, 3, rng)
        ch = qu.unitary_channel(qu.random_unitary(3, rng))
        gap, res = dv.dpi_gap_and_residual(r, t, ch, 1.5)
        assert abs(gap) <= 1e-9 and res <= 1e-10 * max(1, mc.opnorm(dv.frank_lieb_optimizer(r, t, 1.5)))

    def test_tensor_then_trace(self, rng):
        r, t = qu.random_density(2, 2, rng), qu.random_density(2, 2, rng)
        tau = qu.random_density(2, 2, rng)
        ch = qu.partial_trace_channel([2, 2], [0]).compose(qu.append_state_channel(2, tau))
        gap, res = dv.dpi_gap_and_residual(r, t, ch, 2.0)
        assert abs(gap) <= 1e-9 and res <= 1e-8

    def test_depolarizing_strict(self):
        rng = np.random.default_rng(1)
        r, t = qu.random_density(2, 2, rng), qu.random_density(2, 2, rng)
        gap, res = dv.dpi_gap_and_residual(r, t, qu.depolarizing_channel(2, 0.5), 2.0)
        assert gap > 1e-3 and res > 1e-3
