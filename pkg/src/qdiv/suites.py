"""Randomized verification suites behind ``qdiv verify``.

Each suite draws one independent instance per trial from
``SeedSequence([seed, trial])`` and returns that trial's worst margin; a trial
passes when its margin is nonnegative. Margins are tolerance minus violation,
so they are directly comparable across suites. Results depend only on
(suite, seed, trial), which makes the output independent of how trials are
spread over worker processes.
"""
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import classical as cl
from . import coding as cd
from . import converse as cv
from . import divergence as dv
from . import matcore as mc
from . import quantum as qu
from . import renyi as ry
from .classical import gaussian_cdf

TOL_SCALE_ENV = "QDIV_TOL_SCALE"

# Named tolerances; ``--tol-<name>`` overrides one, QDIV_TOL_SCALE scales all.
DEFAULT_TOLS = {
    "dpi": 1e-9,
    "alpha-one": 1e-2,
    "zero-limit": 1e-3,
    "duality": 5e-5,
    "fidelity": 1e-7,
    "unitary-gap": 1e-9,
    "unitary-residual": 1e-10,
    "np": 1e-10,
    "sandwich": 1e-8,
    "berry-esseen": 0.5,
    "second-order": 1e-8,
    "ns": 1e-9,
    "certification": 1e-9,
    "coherence": 1e-10,
    "dichotomy": 1e-9,
    "saturation": 1e-5,
}


def tolerances(overrides=None, scale=None):
    if scale is None:
        scale = float(os.environ.get(TOL_SCALE_ENV, "1"))
    tols = {k: v * scale for k, v in DEFAULT_TOLS.items()}
    for k, v in (overrides or {}).items():
        if k not in tols:
            raise KeyError(f"unknown tolerance {k!r}")
        tols[k] = float(v)
    return tols


def _rng(seed, trial):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial)]))


def _full_rank(d, rng):
    return qu.random_density(d, d, rng)


# ---------------------------------------------------------------- divergence suites

DPI_ALPHAS = (0.6, 0.9, 1.5, 3.0)


def trial_dpi(rng, idx, tols):
    """srd never increases under a random channel; dimension cycles through 2, 3, 4."""
    d = 2 + idx % 3
    rho = qu.random_density(d, int(rng.integers(1, d + 1)), rng)
    sigma = _full_rank(d, rng)
    out = int(rng.integers(2, 5))
    env = int(rng.integers(max(1, -(-d // out)), 4))
    ch = qu.random_channel(d, out, env, rng)
    lr, ls = ch.apply(rho), ch.apply(sigma)
    worst = -np.inf
    for a in DPI_ALPHAS:
        worst = max(worst, dv.srd(lr, ls, a) - dv.srd(rho, sigma, a))
    return tols["dpi"] - worst


def trial_alpha_one(rng, idx, tols):
    d = 2 + idx % 3
    rho = qu.random_density(d, int(rng.integers(1, d + 1)), rng)
    sigma = _full_rank(d, rng)
    D = dv.qre(rho, sigma)
    dev = max(abs(dv.srd(rho, sigma, 1 + s * 1e-4) - D) for s in (-1, 1))
    return tols["alpha-one"] * (1 + abs(D)) - dev


def trial_zero_limit(rng, idx, tols):
    """With equal supports and normalized σ the α → 0 limit is D₀ = 0."""
    d = 2 + idx % 3
    r = int(rng.integers(1, d + 1))
    U = qu.random_unitary(d, rng)
    def on_support():
        w = rng.dirichlet(np.ones(r))
        return U[:, :r] @ np.diag(w) @ U[:, :r].conj().T
    rho, sigma = on_support(), on_support()
    return tols["zero-limit"] - abs(dv.srd_zero_limit(rho, sigma))


def _relative_residual(rho, sigma, ch, a):
    """DPI gap and the equality residual divided by the larger optimizer norm."""
    gap, res = dv.dpi_gap_and_residual(rho, sigma, ch, a)
    h0 = mc.opnorm(dv.frank_lieb_optimizer(rho, sigma, a))
    h1 = mc.opnorm(ch.adjoint_apply(dv.frank_lieb_optimizer(ch.apply(rho), ch.apply(sigma), a)))
    return gap, res / max(h0, h1, 1.0)


def trial_dpi_equality(rng, idx, tols):
    """Even trials: unitary channels are DPI-tight. Odd trials: noisy implications."""
    d = 2 + idx % 3
    rho, sigma = _full_rank(d, rng), _full_rank(d, rng)
    if idx % 2 == 0:
        ch = qu.unitary_channel(qu.random_unitary(d, rng))
        a = float(rng.choice([0.6, 0.9, 1.5, 2.0, 3.0]))
        gap, res = _relative_residual(rho, sigma, ch, a)
        return min(tols["unitary-gap"] - abs(gap), tols["unitary-residual"] - res)
    ch = qu.random_channel(d, d, int(rng.integers(2, 4)), rng)
    margins = []
    for a in (0.6, 0.9, 1.5, 2.0, 3.0):
        gap, res = _relative_residual(rho, sigma, ch, a)
        # P ⇒ Q holds iff ¬P or Q; the margin is the better of the two slacks
        margins.append(max(1e-4 - gap, res - 1e-6))
        margins.append(max(res - 1e-8, 1e-6 - gap))
        if a == 2.0:
            rec = qu.petz_recovery(sigma, ch).apply(ch.apply(rho))
            dist = 2 * dv.trace_distance(rec, rho)
            margins.append(max(gap - 1e-8, 1e-6 - dist))
    return min(margins)


def trial_np(rng, idx, tols):
    """D_H^ε on commuting pairs equals the classical Neyman–Pearson value."""
    d = 2 + idx % 3
    p, q = rng.dirichlet(np.ones(d)), rng.dirichlet(np.ones(d))
    eps = float(rng.uniform(0.05, 0.95))
    U = qu.random_unitary(d, rng)
    rho, sigma = U @ np.diag(p) @ U.conj().T, U @ np.diag(q) @ U.conj().T
    return tols["np"] - abs(dv.hypothesis_testing_re(rho, sigma, eps) - cl.neyman_pearson_classical(p, q, eps))


def trial_sandwich(rng, idx, tols, eps=0.3, delta=0.1):
    d = 2 + idx % 3
    rho, sigma = _full_rank(d, rng), _full_rank(d, rng)
    dh_lo = dv.hypothesis_testing_re(rho, sigma, eps - delta) + np.log2(delta)
    uds = dv.underline_ds(rho, sigma, eps)
    dh = dv.hypothesis_testing_re(rho, sigma, eps)
    ods = dv.overline_ds(rho, sigma, 1 - eps)
    t = tols["sandwich"]
    return min(t + uds - dh_lo, t + dh - uds, t - abs(uds - ods))


def trial_ns(rng, idx, tols):
    d = 2 + idx % 3
    rho = qu.random_density(d, int(rng.integers(1, d + 1)), rng)
    sigma = _full_rank(d, rng)
    P, Q = cl.nussbaum_szkola(rho, sigma)
    e1 = abs(cl.kl(P, Q) - dv.qre(rho, sigma))
    e2 = abs(cl.info_variance(P, Q) - dv.qiv(rho, sigma))
    return tols["ns"] - max(e1, e2)


# ---------------------------------------------------------------- entropy suites

def trial_duality(rng, idx, tols):
    """|S̃_α(A|B) + S̃_β(A|C)| on a random pure 2×2×2 state, both sides optimized."""
    psi = qu.random_pure(8, rng)
    full = qu.proj(psi)
    r_ab = mc.partial_trace(full, [2, 2, 2], [0, 1])
    r_ac = mc.partial_trace(full, [2, 2, 2], [0, 2])
    worst = 0.0
    for a in (0.6, 0.8, 2.0):
        b = dv.hoelder_conjugate(a)
        s1 = ry.conditional_renyi(r_ab, (2, 2), a).value
        s2 = ry.conditional_renyi(r_ac, (2, 2), b).value
        worst = max(worst, abs(s1 + s2))
    return tols["duality"] - worst


def _shared_marginal_pair(rng, clause):
    if clause == "i":
        d = int(rng.integers(2, 5))
        return _full_rank(d, rng), _full_rank(d, rng), None
    if clause == "ii":
        return _full_rank(4, rng), qu.random_density(4, int(rng.integers(1, 5)), rng), (2, 2)
    if clause == "iii":
        rho = _full_rank(4, rng)
        ch = qu.random_channel(2, 2, 2, rng)
        return rho, ch.apply_on(rho, [2, 2], 1), (2, 2)
    # iv: add a product of traceless terms, which leaves AC, BC and C unchanged
    rho = _full_rank(8, rng)
    def traceless():
        H = qu.ginibre(2, 2, rng)
        H = H + H.conj().T
        return H - np.trace(H) / 2 * np.eye(2)
    X = mc.tensor(traceless(), traceless(), traceless())
    w = np.linalg.eigvalsh(rho)
    t = 0.9 * w[0] / mc.opnorm(X) * float(rng.uniform(0.2, 1.0))
    return rho, rho + t * X, (2, 2, 2)


def trial_fidelity(rng, idx, tols):
    clause = ("i", "ii", "iii", "iv")[idx % 4]
    rho, sigma, dims = _shared_marginal_pair(rng, clause)
    a = float(rng.uniform(0.55, 0.95))
    return tols["fidelity"] + ry.fidelity_bound_margin(clause, rho, sigma, a, dims)


def trial_saturation(rng, idx, tols):
    lam0, nu0 = float(rng.uniform(0.05, 0.95)), float(rng.uniform(0.05, 0.95))
    st = cv.araki_lieb_saturating_state(lam0, nu0)
    rho_a = mc.partial_trace(st.rho, st.dims, [0])
    worst = 0.0
    for a in (0.6, 2.0):
        b = dv.hoelder_conjugate(a)
        s = ry.conditional_renyi(st.rho, st.dims, a).value
        worst = max(worst, abs(s + ry.renyi_entropy(rho_a, b)))
    a = 2.0
    avg = ry.decomposition_average_entropy(st.weights, st.vectors, st.dims, a)
    s_beta = ry.conditional_renyi(st.rho, st.dims, dv.hoelder_conjugate(a)).value
    worst = max(worst, abs(avg + s_beta))
    return tols["saturation"] - worst


def trial_dichotomy(rng, idx, tols):
    """F_e = F exactly for pure inputs and strictly below for mixed ones (random channels)."""
    d = 2 + idx % 3
    pure = idx % 2 == 0
    if pure:
        rho = qu.proj(qu.random_pure(d, rng))
    else:
        w = rng.dirichlet(np.ones(d))
        w = 0.8 * w + 0.2 / d
        U = qu.random_unitary(d, rng)
        rho = U @ np.diag(w) @ U.conj().T
    ch = qu.random_channel(d, d, int(rng.integers(1, 4)), rng)
    gap, lam2 = cv.fidelity_dichotomy(rho, ch)
    t = tols["dichotomy"]
    return t - gap if lam2 <= t else gap - t


# ---------------------------------------------------------------- classical and coding suites

BE_N = (25, 100, 400, 1600)


def trial_berry_esseen(rng, idx, tols):
    """Normalized Berry–Esseen deviation for (0.8, 0.2) against uniform; trial i uses BE_N[i mod 4]."""
    n = BE_N[idx % len(BE_N)]
    return tols["berry-esseen"] - cl.berry_esseen_check([0.8, 0.2], [0.5, 0.5], [n])


def _eq_root(t, s1, s2, eps):
    f = lambda b: t * gaussian_cdf(b / s1) + (1 - t) * gaussian_cdf(b / s2) - (1 - eps)
    hi = 50.0 * max(s1, s2)
    return brentq(f, -hi, hi, xtol=1e-14, rtol=1e-15, maxiter=500)


def trial_second_order(rng, idx, tols):
    """Bisection solver against the two-source closed forms, cycling through the three cases."""
    case = idx % 3
    t = float(rng.uniform(0.1, 0.9))
    s1, s2 = float(rng.uniform(0.1, 1.0)), float(rng.uniform(0.1, 1.0))
    eps = float(rng.uniform(0.05, 0.95))
    S1 = float(rng.uniform(0.3, 1.0))
    if case == 0:
        S2, expect_a, expect_b = S1, S1, _eq_root(t, s1, s2, eps)
    else:
        S2 = S1 - float(rng.uniform(0.1, 0.3))
        if case == 1:
            eps = float(rng.uniform(0.02, 0.98)) * t
            expect_a, expect_b = S1, -s1 * cl.gaussian_quantile(eps / t)
        else:
            eps = t + float(rng.uniform(0.02, 0.98)) * (1 - t)
            expect_a, expect_b = S2, -s2 * cl.gaussian_quantile((eps - t) / (1 - t))
    stats = [(t, S1, s1), (1 - t, S2, s2)]
    a = cd.first_order_rate(stats, eps)
    b = cd.second_order_rate(stats, a, eps)
    return tols["second-order"] - max(abs(a - expect_a), abs(b - expect_b))


# ---------------------------------------------------------------- converse suites

CERT_ALPHAS = (0.55, 0.7, 0.85, 0.95)
CERT_PARAMS = ry.OptimizerParams(restarts=1, max_iter=600, polish=False)


def _rand_ch(din, dout, rng):
    env = int(rng.integers(max(1, -(-din // dout)), max(2, -(-din // dout)) + 2))
    return qu.random_channel(din, dout, env, rng)


def random_protocol(rng, idx):
    """A random protocol instance with all nontrivial registers of dimension 2."""
    kind = cv.KINDS[idx % len(cv.KINDS)]
    n = 1 + (idx // len(cv.KINDS)) % 3
    two = 2
    if kind == "redistribution":
        n = min(n, 2)
        dims, k, m, Q = (2, 2, 2, 2), two, two, two
    elif kind == "source_coding":
        dims, k, m, Q = (2, 1, 1, 2), 1, 1, int(rng.integers(1, 2 ** n + 1))
    elif kind == "coherent_merging":
        n = min(n, 2)
        dims, k, m, Q = (2, 2, 1, 2), 1, two, two
    elif kind == "state_splitting":
        n = min(n, 2)
        dims, k, m, Q = (2, 1, 2, 2), two, 1, two
    elif kind == "redistribution_feedback":
        n = 1
        dims, k, m, Q = (2, 2, 2, 2), two, two, two
    else:
        n = min(n, 2)
        dims, k, m, Q = (2, 2, 1, 2), 1, 1, 1
    psi = qu.random_pure(int(np.prod(dims)), rng)
    dA, dB, dC, _ = dims
    if kind == "redistribution_feedback":
        rounds, memory = [(2, 2), (2, 1)], [(2, 2)]
        E1 = _rand_ch(dA * dC * k, 2 * 2, rng)
        D1 = _rand_ch(2 * dB * k, 2 * 2, rng)
        E2 = _rand_ch(2 * 2, dC * m * 2, rng)
        D2 = _rand_ch(2 * 2, m * dA * dB, rng)
        return cv.ProtocolDescriptor(kind, psi, dims, n=n, T_A=k, T_A_out=m, rounds=rounds,
                                     memory=memory, encoder=[E1, E2], decoder=[D1, D2])
    if kind == "measurement_compression":
        U = qu.random_unitary(2, rng)
        povm = [U @ np.diag([1.0, 0.0]) @ U.conj().T, U @ np.diag([0.0, 1.0]) @ U.conj().T]
        L, MA = 2, 2
        E = _rand_ch(dA ** n * MA, 2 ** n * L, rng)
        D = _rand_ch(L * dB ** n * MA, 2 ** n * dB ** n, rng)
        return cv.ProtocolDescriptor(kind, psi, dims, n=n, povm=povm, L=L, M_A=MA, encoder=E, decoder=D)
    E = _rand_ch(dA ** n * dC ** n * k, dC ** n * m * Q, rng)
    D = _rand_ch(Q * dB ** n * k, m * dA ** n * dB ** n, rng)
    return cv.ProtocolDescriptor(kind, psi, dims, n=n, Q=Q, T_A=k, T_A_out=m, encoder=E, decoder=D)


def trial_certification(rng, idx, tols):
    desc = random_protocol(rng, idx)
    F, bound, _ = cv.certify(desc, CERT_ALPHAS, CERT_PARAMS)
    return tols["certification"] + bound - F


def trial_coherence(rng, idx, tols):
    """Redistribution with trivial systems equals each special case."""
    kind = ("source_coding", "coherent_merging", "state_splitting")[idx % 3]
    a = float(rng.uniform(0.55, 0.95))
    n = int(rng.integers(1, 50))
    if kind == "source_coding":
        dA = int(rng.integers(2, 4))
        dims = (dA, 1, 1, dA)
        psi = qu.random_pure(dA * dA, rng)
        rates = cv.RateBook.from_dims(n, Q=int(rng.integers(1, 5)))
        full = cv.redistribution_bounds(psi, dims, rates, n, a, CERT_PARAMS)[1]
        red = cv.reduction_bounds(kind, cv._reduced(psi, dims, [0]), rates, n, dv.hoelder_conjugate(a))[0]
        return tols["coherence"] - abs(full - red)
    if kind == "coherent_merging":
        dims, red_dims = (2, 2, 1, 2), (2, 2, 2)
        rates = cv.RateBook.from_dims(n, Q=2, T_A_out=int(rng.integers(1, 4)))
    else:
        dims, red_dims = (2, 1, 2, 2), (2, 2, 2)
        rates = cv.RateBook.from_dims(n, Q=2, T_A=int(rng.integers(1, 4)))
    psi = qu.random_pure(8, rng)
    full = cv.redistribution_bounds(psi, dims, rates, n, a, CERT_PARAMS)
    red = cv.reduction_bounds(kind, psi, rates, n, a, red_dims, params=CERT_PARAMS)
    return tols["coherence"] - max(abs(x - y) for x, y in zip(full, red))


# ---------------------------------------------------------------- registry and runner

@dataclass(frozen=True)
class Suite:
    name: str
    trial: object
    default_trials: int
    description: str
    randomized: bool = True


SUITES = {s.name: s for s in (
    Suite("dpi", trial_dpi, 1500, "srd data processing, dims 2-4, four alphas"),
    Suite("alpha-one", trial_alpha_one, 200, "srd near alpha = 1 against qre"),
    Suite("zero-limit", trial_zero_limit, 200, "alpha -> 0 limit on equal supports"),
    Suite("dpi-equality", trial_dpi_equality, 400, "DPI equality condition and recovery"),
    Suite("neyman-pearson", trial_np, 100, "hypothesis testing on commuting pairs"),
    Suite("sandwich", trial_sandwich, 200, "information spectrum sandwich"),
    Suite("ns", trial_ns, 300, "Nussbaum-Szkola identities"),
    Suite("duality", trial_duality, 100, "conditional entropy duality"),
    Suite("fidelity-bounds", trial_fidelity, 2000, "fidelity bounds, clauses i-iv"),
    Suite("saturation", trial_saturation, 20, "Araki-Lieb saturation and REoF equality"),
    Suite("dichotomy", trial_dichotomy, 100, "entanglement fidelity equality dichotomy"),
    Suite("berry-esseen", trial_berry_esseen, 4, "Berry-Esseen constant below 1/2", randomized=False),
    Suite("second-order", trial_second_order, 100, "two-source rate closed forms"),
    Suite("certification", trial_certification, 200, "simulated protocols against converse bounds"),
    Suite("coherence", trial_coherence, 60, "redistribution reductions"),
)}


def _run_one(args):
    name, seed, idx, tols = args
    margin = SUITES[name].trial(_rng(seed, idx), idx, tols)
    return idx, float(margin)


def run_suite(name, seed, trials=None, jobs=1, tols=None):
    """List of (trial, margin) in trial order."""
    suite = SUITES[name]
    trials = suite.default_trials if trials is None else int(trials)
    tols = tolerances() if tols is None else tols
    tasks = [(name, seed, i, tols) for i in range(trials)]
    if jobs <= 1 or trials <= 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_run_one, tasks, chunksize=max(1, trials // (4 * jobs))))
