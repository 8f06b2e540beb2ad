"""Acceptance criteria, one marked group per criterion, at the stated tolerances.

Each group is tagged with ``criterion(number, title)``; conftest prints one
PASS/FAIL line per criterion at the end of the run.
"""
import time

import numpy as np
import pytest
from click.testing import CliRunner

from qdiv import classical as cl
from qdiv import coding as cd
from qdiv import converse as cv
from qdiv import divergence as dv
from qdiv import quantum as qu
from qdiv import renyi as ry
from qdiv import suites
from qdiv.cli import main

from oracles import dh_sdp

SEED = 20240611
SPEC = np.array([0.8, 0.2])
S0, SIG0 = cl.entropy_stats(SPEC)
crit = pytest.mark.criterion


def run_full(name, trials, record, seed=SEED):
    res = suites.run_suite(name, seed, trials)
    margins = np.array([m for _, m in res])
    record("detail", f"{name}: {len(res)} trials, worst margin {margins.min():.3g}")
    return margins


@crit(1, "srd DPI, 500 trials per dimension 2-4, four alphas, under 60 s")
def test_c01_dpi(record_property):
    t0 = time.perf_counter()
    margins = run_full("dpi", 1500, record_property)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{elapsed:.1f} s")
    assert margins.min() >= 0
    assert elapsed < 60


@crit(2, "srd at alpha = 1 +- 1e-4 against qre, 200 pairs")
def test_c02_alpha_one(record_property):
    assert run_full("alpha-one", 200, record_property).min() >= 0


@crit(3, "alpha -> 0 limit: counterexample and equal-support pairs")
def test_c03_counterexample():
    rho, sigma = np.diag([1.0, 0.0]), np.array([[1.0, 0.5], [0.5, 1.0]])
    assert abs(dv.srd_zero_limit(rho, sigma) - (-0.584963)) <= 1e-3
    assert dv.d0(rho, sigma) == 0.0


@crit(3, "alpha -> 0 limit: counterexample and equal-support pairs")
def test_c03_equal_support(record_property):
    assert run_full("zero-limit", 200, record_property).min() >= 0


@crit(4, "conditional entropy duality on 100 pure 2x2x2 states within 5e-5")
def test_c04_duality(record_property):
    assert run_full("duality", 100, record_property).min() >= 0


@crit(5, "fidelity bounds, clauses i-iv, 500 instances each, margin >= -1e-7")
def test_c05_fidelity(record_property):
    res = suites.run_suite("fidelity-bounds", SEED, 2000)
    by_clause = {}
    for i, m in res:
        by_clause.setdefault("i ii iii iv".split()[i % 4], []).append(m)
    worst = {k: min(v) for k, v in by_clause.items()}
    record_property("detail", "worst " + ", ".join(f"{k}: {v:.3g}" for k, v in worst.items()))
    assert all(len(v) == 500 for v in by_clause.values())
    assert min(worst.values()) >= 0


@crit(6, "DPI equality: unitary tightness and 200 noisy-channel implications")
def test_c06_dpi_equality(record_property):
    # even trials are unitary, odd trials noisy, so 400 trials give 200 of each
    assert run_full("dpi-equality", 400, record_property).min() >= 0


@crit(7, "hypothesis testing against the SDP oracle and classical Neyman-Pearson")
def test_c07_sdp_oracle(record_property):
    rng = np.random.default_rng([SEED, 7])
    worst = 0.0
    for _ in range(100):
        rho = qu.random_density(2, 2, rng)
        sigma = qu.random_density(2, 2, rng)
        eps = float(rng.uniform(0.05, 0.95))
        worst = max(worst, abs(dv.hypothesis_testing_re(rho, sigma, eps) - dh_sdp(rho, sigma, eps)))
    record_property("detail", f"SDP oracle worst deviation {worst:.2g}")
    assert worst <= 1e-4


@crit(7, "hypothesis testing against the SDP oracle and classical Neyman-Pearson")
def test_c07_commuting(record_property):
    assert abs(dv.hypothesis_testing_re(np.diag(SPEC), np.eye(2) / 2, 0.2) - 1.0) <= 1e-10
    assert run_full("neyman-pearson", 100, record_property).min() >= 0


@crit(8, "information-spectrum sandwich and the underline/overline duality")
def test_c08_sandwich(record_property):
    assert run_full("sandwich", 200, record_property).min() >= 0


@crit(9, "Berry-Esseen constant below 1/2 at n = 25..1600, under 30 s")
def test_c09_berry_esseen(record_property):
    t0 = time.perf_counter()
    ratio = cl.berry_esseen_check(SPEC, [0.5, 0.5], list(suites.BE_N))
    elapsed = time.perf_counter() - t0
    record_property("detail", f"max ratio {ratio:.4f}, {elapsed:.1f} s")
    assert ratio <= 0.5
    assert elapsed < 30


@crit(10, "tail limit at n = 2000: 1/2 at the rate, 0 and 1 off the rate")
def test_c10_corollary_limit():
    assert abs(cl.corollary_428_limit(SPEC, S0, 0.0, [2000])[0] - 0.5) <= 0.02
    assert cl.corollary_428_limit(SPEC, S0 + 0.1, 0.0, [2000])[0] <= 0.01
    assert cl.corollary_428_limit(SPEC, S0 - 0.1, 0.0, [2000])[0] >= 0.99


@crit(11, "second-order rates: closed forms, fig52 and fig53 data")
def test_c11_closed_forms(record_property):
    assert run_full("second-order", 100, record_property).min() >= 0


@crit(11, "second-order rates: closed forms, fig52 and fig53 data")
def test_c11_figures():
    _, rows = cd.figure_rows("fig52")
    for e, b, l1, l2 in rows:
        assert min(l1, l2) - 1e-12 <= b <= max(l1, l2) + 1e-12
    _, (row,) = cd.figure_rows("fig52", [0.5])
    assert abs(row[1]) <= 1e-8
    _, (row,) = cd.figure_rows("fig53", [100])
    assert abs(row[1] - 0.99256) <= 1e-5


@crit(12, "coding pincer at n = 2000 and the converse over concrete codes")
@pytest.mark.parametrize("eps", [0.1, 0.25, 0.5])
def test_c12_achievability(eps):
    b = -SIG0 * cl.gaussian_quantile(eps)
    assert cd.achievability_fidelity(SPEC, 2000, b) >= 1 - eps - 0.03


@crit(12, "coding pincer at n = 2000 and the converse over concrete codes")
def test_c12_converse_dominates(record_property):
    rng = np.random.default_rng([SEED, 12])
    worst, count = np.inf, 0
    for k in range(4):
        src = cd.QuantumSource(rng.dirichlet(np.ones(2)), [qu.random_pure(2, rng) for _ in range(2)])
        for n in range(1, 7):
            rho_n = cd.qu_power(src.state, n)
            # b >= 0 keeps the largest eigenvalue above the threshold, so the projector is nonempty
            codes = [cd.spectral_projector_code(src, n, b)[0] for b in (0.0, 0.5, 1.0)]
            if n <= 4:
                codes += [cd.random_code(src, n, M, seed=[SEED, k, n, M]) for M in (1, 2, 2 ** n - 1)]
            for code in codes:
                slack = cd.hayashi_converse_bound(rho_n, code.M) - cd.ensemble_avg_fidelity(src, code)
                worst, count = min(worst, slack), count + 1
    record_property("detail", f"{count} codes, worst slack {worst:.3g}")
    assert worst >= -1e-9


@crit(13, "strong-converse certification, reduction coherence and the worked number")
def test_c13_certification(record_property):
    assert run_full("certification", 200, record_property).min() >= 0


@crit(13, "strong-converse certification, reduction coherence and the worked number")
def test_c13_coherence(record_property):
    assert run_full("coherence", 60, record_property).min() >= 0


@crit(13, "strong-converse certification, reduction coherence and the worked number")
def test_c13_worked_number(record_property):
    val = cv.source_coding_bound(SPEC, 0.5, 100, 2.0)
    record_property("detail", f"worked number evaluates to {val:.5f}, stated 0.1414")
    assert abs(val - 0.1414) <= 1e-4


@crit(14, "Araki-Lieb saturating states and the REoF equality")
@pytest.mark.parametrize("lam,nu", [(0.8, 0.3), (0.6, 0.5), (0.9, 0.15), (0.3, 0.7)])
def test_c14_saturation(lam, nu):
    st = cv.araki_lieb_saturating_state(lam, nu)
    e0, e1 = (v.reshape(2, 4) for v in st.vectors)
    ra = np.diag([lam, 1 - lam])
    # two purifications of the same ρ_A with orthogonal B supports
    assert np.allclose(e0 @ e0.conj().T, ra, atol=1e-12) and np.allclose(e1 @ e1.conj().T, ra, atol=1e-12)
    assert np.max(np.abs(e0 @ e1.conj().T)) <= 1e-12
    for a in (0.6, 2.0):
        s = ry.conditional_renyi(st.rho, st.dims, a).value
        assert abs(s + ry.renyi_entropy(ra, dv.hoelder_conjugate(a))) <= 1e-5
    avg = ry.decomposition_average_entropy(st.weights, st.vectors, st.dims, 2.0)
    assert abs(avg + ry.conditional_renyi(st.rho, st.dims, dv.hoelder_conjugate(2.0)).value) <= 1e-5


@crit(14, "Araki-Lieb saturating states and the REoF equality")
def test_c14_random(record_property):
    assert run_full("saturation", 20, record_property).min() >= 0


@crit(15, "verify output byte-identical across runs and --jobs values")
@pytest.mark.parametrize("suite,trials", [
    ("dpi", 60), ("fidelity-bounds", 16), ("certification", 12), ("berry-esseen", 4), ("second-order", 30),
])
def test_c15_determinism(suite, trials, tmp_path):
    runner = CliRunner()
    outs = []
    for k, jobs in enumerate((1, 2, 1, 3)):
        path = tmp_path / f"{k}.csv"
        r = runner.invoke(main, ["verify", suite, "--seed", str(SEED), "--trials", str(trials),
                                 "--jobs", str(jobs), "--out", str(path)])
        assert r.exit_code == 0, r.output
        outs.append(path.read_bytes())
    assert len(set(outs)) == 1
    assert outs[0].count(b"\n") == trials + 2
