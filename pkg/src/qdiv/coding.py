"""Visible quantum source coding for memoryless and mixed sources.

Sources, codes and the ensemble average fidelity; the type-set machinery
behind the universal code; achievability and converse fidelity bounds; and the
first- and second-order rate solvers with figure-data emitters.
"""
import csv
import io
import itertools
from dataclasses import dataclass, field
from math import lgamma, log2

import numpy as np

from . import classical as cl
from . import matcore as mc
from . import quantum as qu
from .classical import gaussian_cdf, gaussian_quantile
from .errors import BadRank, BudgetExceeded, DegenerateEpsilon, DimMismatch, DomainError, Intractable

TOL_S = 1e-9
ENUM_BUDGET = 2_000_000
FIG52 = {"sigma1": 0.235, "sigma2": 0.712, "t": 0.425}
FIG53 = {"S": 0.9744, "sigma": 0.2693, "eps": 0.25}


@dataclass
class QuantumSource:
    """Pure-state ensemble {p_i, |ψ_i⟩}."""
    probs: np.ndarray
    states: list

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        self.states = [np.asarray(s, dtype=complex).ravel() for s in self.states]
        if len(self.states) != self.probs.size:
            raise DimMismatch("one probability per signal state is required")
        if np.any(self.probs < 0) or abs(float(np.sum(self.probs)) - 1) > 1e-12:
            raise DomainError("signal probabilities must form a distribution")
        d = self.states[0].size
        if any(s.size != d for s in self.states):
            raise DimMismatch("signal states have different dimensions")
        self.states = [s / np.linalg.norm(s) for s in self.states]

    @property
    def dim(self):
        return self.states[0].size

    @property
    def state(self):
        return sum(p * np.outer(s, s.conj()) for p, s in zip(self.probs, self.states))

    @property
    def spectrum(self):
        w = np.linalg.eigvalsh(self.state)[::-1]
        return np.clip(w, 0.0, None)

    @property
    def stats(self):
        """(S(ρ), σ(ρ))."""
        return cl.entropy_stats(self.spectrum)

    @classmethod
    def from_spectrum(cls, spectrum):
        """Source emitting the eigenbasis vectors of diag(spectrum)."""
        w = np.asarray(spectrum, dtype=float)
        return cls(w, list(np.eye(w.size)))


@dataclass
class MixedSource:
    """Mixture of memoryless sources over a shared signal list."""
    weights: np.ndarray
    components: list

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if abs(float(np.sum(self.weights)) - 1) > 1e-10 or np.any(self.weights < 0):
            raise DomainError("mixture weights must form a distribution")
        if len(self.components) != self.weights.size:
            raise DimMismatch("one weight per component is required")
        ref = self.components[0].states
        for c in self.components[1:]:
            if len(c.states) != len(ref) or any(not np.allclose(a, b) for a, b in zip(c.states, ref)):
                raise DomainError("components must share their signal states")

    def marginal_stats(self):
        """Per-component (t_j, S_j, σ_j)."""
        return [(t, *c.stats) for t, c in zip(self.weights, self.components)]

    def state(self, n=1):
        return sum(t * qu_power(c.state, n) for t, c in zip(self.weights, self.components))


def mixture_from_stats(triples):
    """Lightweight mixture description [(t_j, S_j, σ_j)] for the rate solvers."""
    return [(float(t), float(S), float(s)) for t, S, s in triples]


def _stats_of(msrc):
    if isinstance(msrc, MixedSource):
        return msrc.marginal_stats()
    if isinstance(msrc, QuantumSource):
        return [(1.0, *msrc.stats)]
    return mixture_from_stats(msrc)


def qu_power(rho, n):
    out = np.array([[1.0 + 0j]])
    for _ in range(n):
        out = np.kron(out, rho)
    return out


@dataclass
class SourceCode:
    """Visible code: ``encoder`` maps an index sequence to a code-space state."""
    n: int
    M: int
    encoder: object
    decoder: qu.QuantumChannel

    def __post_init__(self):
        if self.decoder.in_dim != self.M:
            raise DimMismatch("decoder input must be the code space")


def _sequence_state(states, seq):
    v = np.array([1.0 + 0j])
    for i in seq:
        v = np.kron(v, states[i])
    return v


def _component_fidelity(src, code, budget):
    m = len(src.states)
    if m ** code.n > budget:
        raise Intractable(f"{m}^{code.n} sequences exceed the enumeration budget")
    if code.decoder.out_dim != src.dim ** code.n:
        raise DimMismatch("decoder output must be the n-fold source space")
    total = 0.0
    for seq in itertools.product(range(m), repeat=code.n):
        p = float(np.prod(src.probs[list(seq)]))
        if p == 0:
            continue
        psi = _sequence_state(src.states, seq)
        out = code.decoder.apply(code.encoder(seq))
        total += p * float(np.real(psi.conj() @ out @ psi))
    return total


def ensemble_avg_fidelity(src, code, budget=ENUM_BUDGET):
    """F̄ = Σ p_{iⁿ} tr(D(V(iⁿ)) ψ_{iⁿ}); mixtures average over components."""
    if isinstance(src, MixedSource):
        return float(sum(t * _component_fidelity(c, code, budget) for t, c in zip(src.weights, src.components)))
    return float(_component_fidelity(src, code, budget))


def _isometry_code(W, n, states):
    """Code with encoder iⁿ ↦ W†ψW / tr and the embedding X ↦ WXW† as decoder."""
    M = W.shape[1]
    fallback = np.zeros((M, M), dtype=complex)
    fallback[0, 0] = 1.0

    def encoder(seq):
        psi = _sequence_state(states, seq)
        c = W.conj().T @ psi
        nrm = float(np.real(c.conj() @ c))
        if nrm <= 1e-300:
            return fallback
        return np.outer(c, c.conj()) / nrm

    return SourceCode(n, M, encoder, qu.channel_from_isometry(W, W.shape[0]))


def projector_code(src, n, projector):
    """Visible code V(iⁿ) = Πψ_{iⁿ}Π / tr(Πψ_{iⁿ}) with the trivial embedding."""
    w, V = np.linalg.eigh(mc.check_hermitian(projector))
    W = V[:, w > 0.5]
    if W.shape[1] == 0:
        raise BadRank("projector has rank zero")
    return _isometry_code(W, n, src.states)


def spectral_projector_code(src, n, b, a=None):
    """Projector code on {ρⁿ > 2^{−na−√n b}} (a defaults to S(ρ))."""
    a = src.stats[0] if a is None else a
    rho_n = qu_power(src.state, n)
    thr = 2.0 ** (-n * a - np.sqrt(n) * b)
    P = mc.spectral_projector(rho_n - thr * np.eye(rho_n.shape[0]), ">")
    return projector_code(src, n, P), P


def random_code(src, n, M, seed=None, env_dim=2):
    """Code whose encoder compresses through a random isometry and decodes by a random channel."""
    rng = np.random.default_rng(seed)
    D = src.dim ** n
    W = qu.random_isometry(D, M, rng) if M < D else np.eye(D)
    enc = _isometry_code(W, n, src.states).encoder
    dec = qu.random_channel(M, D, env_dim, rng)
    return SourceCode(n, M, enc, dec)


@dataclass
class TypeSet:
    n: int
    d: int
    admitted: list = field(repr=False)
    log_cardinality: float = -np.inf

    def contains_type(self, t):
        return tuple(t) in set(map(tuple, self.admitted))


def compositions(n, d):
    if d == 1:
        yield (n,)
        return
    for k in range(n + 1):
        for rest in compositions(n - k, d - 1):
            yield (k,) + rest


def log2_multinomial(t):
    n = sum(t)
    return (lgamma(n + 1) - sum(lgamma(k + 1) for k in t)) / np.log(2)


def build_type_set(d, n, a, b):
    """T_n(a, b): union of type classes with |T_t^n| ≤ 2^{an + b√n}."""
    if cl.type_count(d, n) > cl.TYPE_BUDGET or n > 200:
        raise BudgetExceeded("type enumeration exceeds the budget")
    limit = a * n + b * np.sqrt(n) if np.isfinite(b) else (np.inf if b > 0 else -np.inf)
    admitted, logs = [], []
    for t in compositions(n, d):
        lc = log2_multinomial(t)
        if lc <= limit + 1e-12:
            admitted.append(t)
            logs.append(lc)
    if logs:
        m = max(logs)
        logcard = m + log2(sum(2.0 ** (x - m) for x in logs))
    else:
        logcard = -np.inf
    return TypeSet(n, d, admitted, float(logcard))


def cardinality_bound_log2(d, n, a, b):
    """log₂ of (n+1)^d 2^{an+b√n}."""
    return d * log2(n + 1) + a * n + b * np.sqrt(n)


def hayashi_inclusion_holds(ts, P, a, b):
    """S_n(a,b) ⊆ T_n(a,b): every type with Pⁿ(ω) > 2^{−na−b√n} is admitted."""
    lp = np.log2(np.asarray(P, dtype=float))
    limit = -a * ts.n - b * np.sqrt(ts.n)
    admitted = set(map(tuple, ts.admitted))
    for t in compositions(ts.n, ts.d):
        with np.errstate(invalid="ignore"):
            val = sum(k * lp[i] for i, k in enumerate(t) if k > 0)
        if val > limit and t not in admitted:
            return False
    return True


def universal_dim_bound(d, n, a, b):
    """log₂ of (n+1)^{d²+d} 2^{an+b√n}."""
    return (d * d + d) * log2(n + 1) + a * n + b * np.sqrt(n)


def achievability_fidelity(src, n, b, a=None):
    """tr(ρⁿ{ρⁿ > 2^{−na−√n b}}), a lower bound on the universal code's fidelity."""
    spec = src.spectrum if isinstance(src, QuantumSource) else np.asarray(src, dtype=float)
    S = cl.entropy_stats(spec)[0]
    a = S if a is None else a
    return 1.0 - cl.iid_tail(spec, n, -n * a - np.sqrt(n) * b)


def hayashi_converse_bound(rho, M):
    """Largest fidelity of any code of dimension M: the sum of the top M eigenvalues."""
    return mc.top_m_eigensum(rho, int(M))


def hayashi_converse_bound_iid(spectrum, n, log2_M):
    """Sum of the 2^{log2_M} largest eigenvalues of ρ^{⊗n}, computed over type classes."""
    p = np.asarray(spectrum, dtype=float)
    p = p[p > 0]
    if log2_M < 0:
        raise BadRank("M must be at least one")
    if log2_M >= n * log2(p.size) - 1e-12:
        return 1.0
    lp = np.log(p)
    entries = []
    for t in compositions(n, p.size):
        lcount = lgamma(n + 1) - sum(lgamma(k + 1) for k in t)
        lprob = float(np.dot(t, lp))
        entries.append((lprob, lcount))
    entries.sort(key=lambda e: -e[0])
    lM = log2_M * np.log(2)
    total = 0.0
    lcum = -np.inf
    for lprob, lcount in entries:
        nxt = np.logaddexp(lcum, lcount)
        if nxt >= lM:
            rem = lM + np.log1p(-np.exp(lcum - lM)) if np.isfinite(lcum) else lM
            total += np.exp(rem + lprob)
            return float(min(total, 1.0))
        total += np.exp(lcount + lprob)
        lcum = nxt
    return float(min(total, 1.0))


def mixed_converse_bound(msrc, n, M=None, gamma=0.0, log2_M=None):
    """1 − Σ_j t_j tr(ρ_jⁿ{ρ_jⁿ ≤ 2^{−γ}}) + 2^{−γ + log M}."""
    if log2_M is None:
        log2_M = log2(M)
    if isinstance(msrc, MixedSource):
        parts = [(t, c.spectrum) for t, c in zip(msrc.weights, msrc.components)]
    elif isinstance(msrc, QuantumSource):
        parts = [(1.0, msrc.spectrum)]
    else:
        parts = [(float(t), np.asarray(s, dtype=float)) for t, s in msrc]
    tail = sum(t * cl.iid_tail(spec, n, -gamma) for t, spec in parts)
    return float(1.0 - tail + 2.0 ** (-gamma + log2_M))


def _partition(stats, a, tol_S):
    lo = sum(t for t, S, _ in stats if S < a - tol_S)
    hi = sum(t for t, S, _ in stats if S > a + tol_S)
    eq = [(t, s) for t, S, s in stats if abs(S - a) <= tol_S]
    return lo, eq, hi


def _phi_ratio(b, s):
    if s > 0:
        return gaussian_cdf(b / s)
    return 1.0 if b >= 0 else 0.0


def second_order_rate(msrc, a, eps, tol_S=TOL_S):
    """Solve Σ_{S_i=a} t_iΦ(b/σ_i) + Σ_{S_i<a} t_i = 1 − ε; ±inf outside the feasible band."""
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    stats = _stats_of(msrc)
    lo, eq, hi = _partition(stats, a, tol_S)
    if lo >= 1 - eps:
        return -np.inf
    if hi >= eps:
        return np.inf
    target = 1 - eps

    def G(b):
        return lo + sum(t * _phi_ratio(b, s) for t, s in eq)

    if len(eq) == 1 and eq[0][1] > 0:
        t, s = eq[0]
        return float(s * gaussian_quantile((target - lo) / t))
    if abs(G(0.0) - target) <= 1e-15:
        return 0.0
    scale = max([s for _, s in eq] + [1e-3])
    left, right = -scale, scale
    while G(left) > target:
        left *= 2
    while G(right) < target:
        right *= 2
    for _ in range(400):
        mid = 0.5 * (left + right)
        if G(mid) < target:
            left = mid
        else:
            right = mid
        if right - left <= 1e-15 * max(1.0, abs(mid)):
            break
    return float(0.5 * (left + right))


def first_order_rate(msrc, eps, tol_S=TOL_S):
    """The a with Σ_{S_i>a} t_i < ε < Σ_{S_i≥a} t_i."""
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    stats = sorted(_stats_of(msrc), key=lambda x: -x[1])
    levels = []
    for t, S, _ in stats:
        if levels and abs(levels[-1][0] - S) <= tol_S:
            levels[-1][1] += t
        else:
            levels.append([S, t])
    above = 0.0
    for S, mass in levels:
        if abs(above - eps) <= 1e-12 or abs(above + mass - eps) <= 1e-12:
            raise DegenerateEpsilon("eps sits on a cumulative mass boundary")
        if above < eps < above + mass:
            return float(S)
        above += mass
    raise DegenerateEpsilon("no component entropy satisfies the rate conditions")


def two_source_closed_form(t, S1, S2, s1, s2, eps, tol_S=TOL_S):
    """Closed-form (a, b) for two components: equal entropies solve for b by bisection."""
    if abs(S1 - S2) <= tol_S:
        return S1, second_order_rate([(t, S1, s1), (1 - t, S2, s2)], S1, eps, tol_S)
    if S1 < S2:
        t, S1, S2, s1, s2 = 1 - t, S2, S1, s2, s1
    if t > eps:
        return S1, -s1 * gaussian_quantile(eps / t)
    return S2, -s2 * gaussian_quantile((eps - t) / (1 - t))


def _fmt(x):
    if np.isposinf(x):
        return "+inf"
    if np.isneginf(x):
        return "-inf"
    return repr(float(x))


def default_eps_grid(points=99):
    return list(np.linspace(0.01, 0.99, points))


def figure_rows(kind, grid=None, **params):
    """Rows of figure data; fig52 rows are (ε, b*, −σ₁Φ⁻¹(ε), −σ₂Φ⁻¹(ε)), fig53 rows (n, rate)."""
    if kind == "fig52":
        p = {**FIG52, **params}
        grid = default_eps_grid() if grid is None else grid
        stats = [(p["t"], 1.0, p["sigma1"]), (1 - p["t"], 1.0, p["sigma2"])]
        rows = []
        for e in grid:
            b = second_order_rate(stats, 1.0, e)
            q = gaussian_quantile(e)
            rows.append((e, b, -p["sigma1"] * q + 0.0, -p["sigma2"] * q + 0.0))
        return ["eps", "b", "b_sigma1", "b_sigma2"], rows
    if kind == "fig53":
        p = {**FIG53, **params}
        grid = list(range(10, 1001, 10)) if grid is None else grid
        q = gaussian_quantile(p["eps"])
        rows = [(int(n), p["S"] - p["sigma"] * q / np.sqrt(n)) for n in grid]
        return ["n", "rate"], rows
    raise DomainError(f"unknown figure kind {kind!r}")


def figure_data(kind, grid=None, **params):
    """CSV text for :func:`figure_rows`."""
    header, rows = figure_rows(kind, grid, **params)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([str(r[0]) if kind == "fig53" else _fmt(r[0])] + [_fmt(x) for x in r[1:]])
    return buf.getvalue()
