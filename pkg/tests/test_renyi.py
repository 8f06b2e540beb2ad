import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdiv import converse as cv
from qdiv import divergence as dv
from qdiv import matcore as mc
from qdiv import quantum as qu
from qdiv import renyi as rn
from qdiv.errors import DomainError, PreconditionViolation, SingularMarginal

from oracles import classical_conditional_sandwiched

seeds = st.integers(0, 2 ** 32 - 1)


def rand_state(d, seed):
    return qu.random_density(d, d, np.random.default_rng(seed))


class TestEntropy:
    def test_pure_is_zero(self):
        psi = qu.proj(qu.random_pure(3, 1))
        for a in (0.5, 2.0, 7.0, np.inf):
            assert abs(rn.renyi_entropy(psi, a)) < 1e-10

    def test_maximally_mixed(self):
        for d in (2, 3, 5):
            for a in (0, 0.3, 1, 2, np.inf):
                assert np.isclose(rn.renyi_entropy(qu.maximally_mixed(d), a), np.log2(d), atol=1e-12)

    def test_collision_value(self):
        assert np.isclose(rn.renyi_entropy(np.diag([0.8, 0.2]), 2), 0.556393, atol=1e-6)

    def test_negative_order_rejected(self):
        with pytest.raises(DomainError):
            rn.renyi_entropy(np.eye(2) / 2, -1)

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.sampled_from([0.5, 2.0, 5.0]))
    def test_bounds_and_additivity(self, seed, a):
        r, s = rand_state(2, seed), rand_state(3, seed + 1)
        h = rn.renyi_entropy(r, a)
        assert -1e-12 <= h <= 1 + 1e-12
        hs = rn.renyi_entropy(np.kron(r, s), a)
        assert np.isclose(hs, h + rn.renyi_entropy(s, a), atol=1e-10)

    def test_alpha_one_limit(self):
        r = rand_state(4, 3)
        vn = rn.von_neumann_entropy(r)
        for a in (1 - 1e-4, 1 + 1e-4):
            assert abs(rn.renyi_entropy(r, a) - vn) < 1e-3

    @settings(max_examples=60, deadline=None)
    @given(seeds, st.sampled_from([0.5, 2.0, 5.0]))
    def test_subadditivity(self, seed, a):
        r = rand_state(6, seed)
        ha = rn.renyi_entropy(mc.partial_trace(r, (2, 3), [0]), a)
        hab = rn.renyi_entropy(r, a)
        assert ha - np.log2(3) - 1e-10 <= hab <= ha + np.log2(3) + 1e-10

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.sampled_from([0.5, 0.9, 3.0]))
    def test_pure_state_duality(self, seed, a):
        psi = qu.random_pure(6, seed)
        sa = rn.renyi_entropy(qu.reduced_state(psi, (2, 3), [0]), a)
        sb = rn.renyi_entropy(qu.reduced_state(psi, (2, 3), [1]), a)
        assert abs(sa - sb) < 1e-10


class TestConditional:
    def test_max_entangled(self):
        phi = qu.proj(qu.max_entangled(2))
        for a in (0.6, 2.0):
            rep = rn.conditional_renyi(phi, (2, 2), a)
            assert abs(rep.value + 1) < 1e-6
            assert rep.value <= rep.bound + 1e-12

    def test_product_ancilla_invariance(self):
        r = rand_state(4, 11)
        tau = rand_state(2, 12)
        # ρ_AB ⊗ τ_C with C appended to B
        for a in (0.7, 2.0):
            base = rn.conditional_renyi(r, (2, 2), a).value
            ext = rn.conditional_renyi(np.kron(r, tau), (2, 4), a).value
            assert abs(base - ext) < 1e-6

    @pytest.mark.parametrize("seed", range(4))
    @pytest.mark.parametrize("a", [0.6, 0.8, 2.0, 3.0])
    def test_classical_closed_form(self, seed, a):
        rng = np.random.default_rng(seed)
        p = rng.dirichlet(np.ones(6)).reshape(3, 2)
        rep = rn.conditional_renyi(np.diag(p.ravel()), (3, 2), a)
        ref = classical_conditional_sandwiched(p, a)
        assert abs(rep.value - ref) < 1e-6
        assert rep.value <= ref + 1e-9 <= rep.bound + 2e-9

    def test_classical_simplex_grid(self):
        # brute force over diagonal σ_B on a 10⁴-point grid of the 2-simplex
        p = np.array([[0.4, 0.1], [0.05, 0.45]])
        a = 2.0
        rho = np.diag(p.ravel())
        best = np.inf
        for t in np.linspace(1e-6, 1 - 1e-6, 10_000):
            best = min(best, dv.srd(rho, np.kron(np.eye(2), np.diag([t, 1 - t])), a))
        assert abs(rn.conditional_renyi(rho, (2, 2), a).value + best) < 1e-4

    def test_report_records_probes(self):
        rep = rn.conditional_renyi(rand_state(4, 5), (2, 2), 1.5)
        assert rep.history
        assert all(rep.objective <= h + 1e-12 for h in rep.history)
        assert np.isclose(np.trace(rep.argmin_state).real, 1)
        assert np.min(np.linalg.eigvalsh(rep.argmin_state)) >= -1e-12

    @pytest.mark.parametrize("a", [0.6, 0.8, 2.0])
    def test_duality_pure_tripartite(self, a):
        beta = dv.hoelder_conjugate(a)
        psi = qu.proj(qu.random_pure(8, 21))
        dims = (2, 2, 2)
        r_ab = mc.partial_trace(psi, dims, [0, 1])
        r_ac = mc.partial_trace(psi, dims, [0, 2])
        s1 = rn.conditional_renyi(r_ab, (2, 2), a).value
        s2 = rn.conditional_renyi(r_ac, (2, 2), beta).value
        assert abs(s1 + s2) <= 5e-5

    @pytest.mark.parametrize("seed", range(3))
    def test_araki_lieb(self, seed):
        r = rand_state(4, 30 + seed)
        ra = mc.partial_trace(r, (2, 2), [0])
        for a in (0.7, 2.0):
            beta = dv.hoelder_conjugate(a)
            rep = rn.conditional_renyi(r, (2, 2), a)
            assert -rn.renyi_entropy(ra, beta) - 1e-8 <= rep.bound
            assert rep.value <= rn.renyi_entropy(ra, a) + 1e-8

    def test_dimension_bound_tripartite(self):
        r = rand_state(8, 41)
        a = 1.5
        s_bc = rn.conditional_renyi(r, (2, 4), a).bound
        s_b = rn.conditional_renyi(mc.partial_trace(r, (2, 2, 2), [0, 1]), (2, 2), a).value
        assert s_bc + 2 * np.log2(2) >= s_b - 1e-8

    def test_data_processing_on_b(self):
        r = rand_state(4, 51)
        ch = qu.random_channel(2, 2, 2, 52)
        big = qu.QuantumChannel([np.kron(np.eye(2), K) for K in ch.kraus])
        r2 = big.apply(r)
        for a in (0.7, 2.0):
            assert rn.conditional_renyi(r2, (2, 2), a).bound >= rn.conditional_renyi(r, (2, 2), a).value - 1e-6
            assert rn.renyi_mutual_info(r2, (2, 2), a).bound <= rn.renyi_mutual_info(r, (2, 2), a).value + 1e-6


class TestMutualInfo:
    def test_product_zero(self):
        r = np.kron(rand_state(2, 1), rand_state(3, 2))
        for a in (0.6, 2.0):
            assert abs(rn.renyi_mutual_info(r, (2, 3), a).value) < 1e-6

    @settings(max_examples=15, deadline=None)
    @given(seeds)
    def test_nonnegative(self, seed):
        rep = rn.renyi_mutual_info(rand_state(4, seed), (2, 2), 1.5)
        assert rep.value >= -1e-9
        assert rep.bound <= rep.value + 1e-12

    def test_ancilla_invariance(self):
        r = rand_state(4, 61)
        tau = rand_state(2, 62)
        base = rn.renyi_mutual_info(r, (2, 2), 2.0).value
        ext = rn.renyi_mutual_info(np.kron(r, tau), (2, 4), 2.0).value
        assert abs(base - ext) < 1e-6

    def test_mes_grid(self):
        # Ĩ_2 of Φ_2 over σ_B = U diag(t, 1−t) U†; the unitary grid covers the Bloch sphere
        phi = qu.proj(qu.max_entangled(2))
        ra = np.eye(2) / 2
        best = np.inf
        for t, th, ph in itertools.product(np.linspace(0.02, 0.98, 25), np.linspace(0, np.pi, 9),
                                            np.linspace(0, 2 * np.pi, 9)):
            U = np.array([[np.cos(th / 2), -np.exp(-1j * ph) * np.sin(th / 2)],
                          [np.exp(1j * ph) * np.sin(th / 2), np.cos(th / 2)]])
            sig = U @ np.diag([t, 1 - t]) @ U.conj().T
            best = min(best, dv.srd(phi, np.kron(ra, sig), 2.0))
        val = rn.renyi_mutual_info(phi, (2, 2), 2.0).value
        assert val <= best + 1e-9
        assert abs(val - best) < 1e-3

    def test_alpha_one(self):
        r = rand_state(4, 71)
        i1 = rn.mutual_information(r, (2, 2))
        assert abs(rn.renyi_mutual_info(r, (2, 2), 1.001).value - i1) < 1e-2

    def test_cq_dimension_bound(self):
        rng = np.random.default_rng(81)
        px = rng.dirichlet(np.ones(2))
        blocks = [rand_state(4, 82 + x) for x in range(2)]
        # ρ_{A B X} with X classical, ordered (A, B, X)
        r = sum(np.kron(px[x] * blocks[x], qu.proj(np.eye(2)[x])) for x in range(2))
        a = 2.0
        i_bx = rn.renyi_mutual_info(r, (2, 4), a).bound
        i_b = rn.renyi_mutual_info(mc.partial_trace(r, (2, 2, 2), [0, 1]), (2, 2), a).value
        assert i_bx <= 1 + i_b + 1e-6
        assert i_bx >= i_b - 1e-6


class TestCMI:
    def test_decoupled(self):
        r = np.kron(rand_state(2, 1), rand_state(4, 2))
        for a in (0.6, 2.0):
            assert abs(rn.renyi_cmi(r, (2, 2, 2), a)) < 1e-8

    def test_alpha_one(self):
        r = rand_state(8, 3)
        ref = rn.conditional_mutual_information(r, (2, 2, 2))
        for a in (1 - 1e-3, 1 + 1e-3):
            assert abs(rn.renyi_cmi(r, (2, 2, 2), a) - ref) < 1e-2

    def test_trivial_c_is_fixed_marginal_mi(self):
        r = rand_state(4, 4)
        val = rn.renyi_cmi(r, (2, 2, 1), 1.7)
        assert np.isclose(val, rn.sandwiched_mutual_info_fixed(r, (2, 2), 1.7), atol=1e-9)

    def test_singular_marginal(self):
        r = np.kron(rand_state(2, 5), np.diag([1.0, 0, 0, 0]))
        with pytest.raises(SingularMarginal):
            rn.renyi_cmi(r, (2, 2, 2), 2.0)
        assert np.isfinite(rn.renyi_cmi(r, (2, 2, 2), 2.0, regularize=True))

    def test_bad_order(self):
        with pytest.raises(DomainError):
            rn.renyi_cmi(rand_state(8, 6), (2, 2, 2), 1.0)


def local_unitary_pair(seed, dims=(2, 2)):
    r = rand_state(dims[0] * dims[1], seed)
    U = np.kron(np.eye(dims[0]), qu.random_unitary(dims[1], seed + 1))
    return r, U @ r @ U.conj().T


class TestFidelityBounds:
    def test_equal_states(self):
        r = rand_state(4, 7)
        m = rn.check_fidelity_bounds(r, r, 0.75, (2, 2), clauses=("i", "ii", "iii"))
        assert all(v >= -1e-7 for v in m.values())

    def test_clause_i_sweep(self):
        rng = np.random.default_rng(500)
        worst = min(rn.fidelity_bound_margin("i", qu.random_density(3, 3, rng), qu.random_density(3, 3, rng), 0.75)
                    for _ in range(500))
        assert worst >= -1e-7

    @pytest.mark.parametrize("seed", range(3))
    def test_clause_iii_local_unitary(self, seed):
        r, s = local_unitary_pair(100 + seed)
        assert rn.fidelity_bound_margin("iii", r, s, 0.75, (2, 2)) >= -1e-7

    def test_clause_iv(self):
        # equal AC, BC and C marginals: σ = ρ is the only generic choice
        r = rand_state(8, 9)
        assert rn.fidelity_bound_margin("iv", r, r, 0.8, (2, 2, 2)) >= -1e-7

    def test_precondition(self):
        r, s = rand_state(4, 1), rand_state(4, 2)
        with pytest.raises(PreconditionViolation):
            rn.fidelity_bound_margin("iii", r, s, 0.75, (2, 2))

    def test_order_domain(self):
        with pytest.raises(DomainError):
            rn.fidelity_bound_margin("i", np.eye(2) / 2, np.eye(2) / 2, 1.5)


class TestCoherentInfo:
    def test_identity(self):
        rep = rn.renyi_coherent_info(qu.identity_channel(2), 2.0)
        assert abs(rep.value - 1) < 1e-6

    def test_completely_depolarizing(self):
        rep = rn.renyi_coherent_info(qu.depolarizing_channel(2, 1.0), 2.0)
        assert rep.value <= 1e-6

    def test_alpha_one_dephasing(self):
        # the dephasing channel is degradable with maximal coherent information at the uniform input
        p = 0.2
        ch = qu.dephasing_channel(2, p)
        rep = rn.renyi_coherent_info(ch, 1.0001)
        rho = np.eye(2) / 2
        vec, (r, dB, dE) = rn._stinespring_output(ch, rho)
        full = qu.proj(vec)
        sb = rn.von_neumann_entropy(mc.partial_trace(full, [r, dB, dE], [1]))
        se = rn.von_neumann_entropy(mc.partial_trace(full, [r, dB, dE], [2]))
        assert abs(rep.value - (sb - se)) < 1e-3

    def test_order_domain(self):
        with pytest.raises(DomainError):
            rn.renyi_coherent_info(qu.identity_channel(2), 0.4)


class TestSaturation:
    @pytest.mark.parametrize("lam,nu", [(0.3, 0.6), (0.15, 0.5), (0.45, 0.8)])
    def test_araki_lieb_saturation(self, lam, nu):
        st_ = cv.araki_lieb_saturating_state(lam, nu)
        for a in (0.7, 2.0):
            beta = dv.hoelder_conjugate(a)
            ra = mc.partial_trace(st_.rho, st_.dims, [0])
            rep = rn.conditional_renyi(st_.rho, st_.dims, a)
            assert abs(rep.value + rn.renyi_entropy(ra, beta)) <= 1e-5

    @pytest.mark.parametrize("lam,nu", [(0.3, 0.6), (0.2, 0.4)])
    def test_reof_saturation(self, lam, nu):
        st_ = cv.araki_lieb_saturating_state(lam, nu)
        a = 2.0
        beta = dv.hoelder_conjugate(a)
        avg = rn.decomposition_average_entropy(st_.weights, st_.vectors, st_.dims, a)
        bound = rn.reof_lower_bound(st_.rho, st_.dims, a)
        assert bound <= avg + 1e-5
        assert abs(avg + rn.conditional_renyi(st_.rho, st_.dims, beta).value) <= 1e-5

    def test_reof_domain(self):
        with pytest.raises(DomainError):
            rn.reof_lower_bound(np.eye(4) / 4, (2, 2), 0.9)
