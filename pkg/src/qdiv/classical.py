"""Classical probability layer.

Nussbaum–Szkoła distributions, Kullback–Leibler divergence and its moments,
the standard normal CDF and quantile, exact i.i.d. tail probabilities by
dynamic programming over type classes, Berry–Esseen checks and the classical
second-order expansions.
"""
import csv
import io
from dataclasses import dataclass
from math import lgamma

import numpy as np
from scipy import special

from . import matcore as mc
from .divergence import info_spectrum_ds
from .errors import BudgetExceeded, BudgetViolation, DegenerateVariance, DomainError

TYPE_BUDGET = 20_000_000
ATOM_REL = 1e-12


@dataclass(frozen=True)
class ClassicalDistribution:
    weights: np.ndarray
    normalized: bool

    @classmethod
    def of(cls, weights, normalized=None):
        w = np.asarray(weights, dtype=float).ravel()
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite and nonnegative")
        is_norm = abs(float(np.sum(w)) - 1.0) <= 1e-12
        if normalized is None:
            normalized = is_norm
        elif normalized and not is_norm:
            raise DomainError("weights do not sum to one")
        return cls(w, bool(normalized))


@dataclass(frozen=True)
class SecondOrderStats:
    D: float
    V: float
    t3: float


def _weights(P):
    if isinstance(P, ClassicalDistribution):
        return P.weights
    return np.asarray(P, dtype=float).ravel()


def nussbaum_szkola(rho, sigma):
    """P(i,j) = r_i |⟨e_i|f_j⟩|², Q(i,j) = s_j |⟨e_i|f_j⟩|², flattened row-major."""
    rho = mc.check_hermitian(rho)
    sigma = mc.check_hermitian(sigma)
    r, E = np.linalg.eigh(rho)
    s, F = np.linalg.eigh(sigma)
    r = np.clip(r, 0.0, None)
    s = np.clip(s, 0.0, None)
    r = np.where(mc.support_mask(r), r, 0.0)
    s = np.where(mc.support_mask(s), s, 0.0)
    overlap = np.abs(E.conj().T @ F) ** 2
    P = r[:, None] * overlap
    Q = s[None, :] * overlap
    return ClassicalDistribution.of(P.ravel(), None), ClassicalDistribution.of(Q.ravel(), None)


def _log_ratio(P, Q):
    """Atoms of log2(P/Q) on supp P with their P-probabilities; None on a support violation."""
    p, q = _weights(P), _weights(Q)
    mask = p > 0
    if np.any(q[mask] <= 0):
        return None
    return p[mask], np.log2(p[mask]) - np.log2(q[mask])


def kl(P, Q):
    lr = _log_ratio(P, Q)
    if lr is None:
        return np.inf
    p, z = lr
    return float(np.sum(p * z)) + 0.0


def info_variance(P, Q):
    """V(P‖Q) = E(Z²) − D² with Z = log(P/Q) under P (P normalized)."""
    lr = _log_ratio(P, Q)
    if lr is None:
        return np.inf
    p, z = lr
    mu = float(np.sum(p * z))
    return max(float(np.sum(p * (z - mu) ** 2)), 0.0)


def third_moment(P, Q):
    """t³ = E|Z − μ|³."""
    lr = _log_ratio(P, Q)
    if lr is None:
        return np.inf
    p, z = lr
    mu = float(np.sum(p * z))
    return float(np.sum(p * np.abs(z - mu) ** 3))


def second_order_stats(P, Q):
    return SecondOrderStats(kl(P, Q), info_variance(P, Q), third_moment(P, Q))


def gaussian_cdf(z):
    return special.ndtr(z) if np.ndim(z) else float(special.ndtr(z))


def gaussian_quantile(eps):
    e = np.asarray(eps, dtype=float)
    if np.any((e <= 0) | (e >= 1)):
        raise DomainError("quantile argument must lie in (0, 1)")
    return special.ndtri(e) if np.ndim(eps) else float(special.ndtri(e))


def _merge_atoms(p, v):
    """Merge outcomes whose log-values coincide; only the value distribution matters."""
    order = np.argsort(v)
    p, v = p[order], v[order]
    keep_p, keep_v = [p[0]], [v[0]]
    for pi, vi in zip(p[1:], v[1:]):
        if abs(vi - keep_v[-1]) <= 1e-14 * max(1.0, abs(vi)):
            keep_p[-1] += pi
        else:
            keep_p.append(pi)
            keep_v.append(vi)
    return np.array(keep_p), np.array(keep_v)


def type_count(d, n):
    """Number of compositions of n into d nonnegative parts."""
    return int(round(np.exp(lgamma(n + d) - lgamma(d) - lgamma(n + 1))))


def _prefixes(d, n):
    """All (k_1, ..., k_d) prefixes of length d with sum ≤ n."""
    if d == 0:
        yield ()
        return
    for k in range(n + 1):
        for rest in _prefixes(d - 1, n - k):
            yield (k,) + rest


def iter_types(p, v, n):
    """Yield blocks (log-probabilities, sums) over all type classes of n draws.

    ``p`` and ``v`` are atom probabilities and values; each block fixes the
    counts of all but the last two atoms and varies the split of the rest.
    """
    d = p.size
    if type_count(d, n) > TYPE_BUDGET:
        raise BudgetExceeded(f"{type_count(d, n)} type classes exceed the budget of {TYPE_BUDGET}")
    lp = np.log(p)
    base = lgamma(n + 1)
    if d == 1:
        yield np.array([n * lp[0]]), np.array([n * v[0]])
        return
    lg = special.gammaln(np.arange(n + 1, dtype=float) + 1.0)
    for pre in _prefixes(d - 2, n):
        m = n - sum(pre)
        a = np.arange(m + 1)
        b = m - a
        logw = base - sum(lgamma(k + 1) for k in pre) + sum(k * lp[i] for i, k in enumerate(pre))
        shift = sum(k * v[i] for i, k in enumerate(pre))
        logw = logw - lg[a] - lg[b] + a * lp[d - 2] + b * lp[d - 1]
        vals = shift + a * v[d - 2] + b * v[d - 1]
        yield logw, vals


def iid_sum_cdf(probs, values, n, gamma):
    """Pr{Σ_{i≤n} V_i ≤ γ} for i.i.d. V_i taking ``values`` with ``probs``.

    Atoms within relative 1e-12 of γ count as included.
    """
    probs = np.asarray(probs, dtype=float)
    values = np.asarray(values, dtype=float)
    mask = probs > 0
    if n == 0:
        return 1.0 if gamma >= 0 else 0.0
    if np.isposinf(gamma):
        return float(np.sum(probs[mask]) ** n)
    if np.isneginf(gamma):
        return 0.0
    p, v = _merge_atoms(probs[mask], values[mask])
    thr = gamma + ATOM_REL * max(1.0, abs(gamma))
    total = 0.0
    for logw, sums in iter_types(p, v, int(n)):
        sel = sums <= thr
        if np.any(sel):
            total += float(np.sum(np.exp(logw[sel])))
    return min(total, 1.0)


def iid_tail(P, n, gamma):
    """Pr{Σ_{i≤n} log P(X_i) ≤ γ} for X_i i.i.d. with law P (γ in bits)."""
    p = _weights(P)
    mask = p > 0
    return iid_sum_cdf(p[mask], np.log2(p[mask]), n, gamma)


def iid_sum_atoms(probs, values, n):
    """Sorted atoms (values, probabilities) of the n-fold sum, merged within tolerance."""
    probs = np.asarray(probs, dtype=float)
    values = np.asarray(values, dtype=float)
    mask = probs > 0
    p, v = _merge_atoms(probs[mask], values[mask])
    lw, sv = [], []
    for logw, sums in iter_types(p, v, int(n)):
        lw.append(logw)
        sv.append(sums)
    lw = np.concatenate(lw)
    sv = np.concatenate(sv)
    order = np.argsort(sv, kind="stable")
    return sv[order], np.exp(lw[order])


def _cdf_steps(sums, probs):
    """Collapse atoms that coincide numerically; return values and cumulative masses."""
    keep = np.ones(sums.size, dtype=bool)
    keep[1:] = np.diff(sums) > ATOM_REL * np.maximum(1.0, np.abs(sums[1:]))
    idx = np.flatnonzero(keep)
    masses = np.add.reduceat(probs, idx)
    return sums[idx], np.cumsum(masses)


def classical_ds(P, Q, eps, n=1):
    """Exact D_s^ε(Pⁿ‖Qⁿ) = sup{γ : Pr_{Pⁿ}{log(Pⁿ/Qⁿ) ≤ γ} ≤ ε}."""
    if not 0 <= eps <= 1:
        raise DomainError("eps must lie in [0, 1]")
    lr = _log_ratio(P, Q)
    if lr is None:
        return -np.inf if eps < 1 else np.inf
    p, z = lr
    sums, cum = _cdf_steps(*iid_sum_atoms(p / np.sum(p), z, n))
    if eps >= 1:
        return np.inf
    above = np.flatnonzero(cum > eps)
    if above.size == 0:
        return np.inf
    return float(sums[above[0]])


def berry_esseen_deviations(P, Q, n_list):
    """sup_z |F_{Y_n}(z) − Φ(z)| for each n, with F exact from the type DP."""
    stats = second_order_stats(P, Q)
    if not stats.V > 1e-14:
        raise DegenerateVariance("the log-likelihood ratio is constant")
    p, z = _log_ratio(P, Q)
    sd = np.sqrt(stats.V)
    out = []
    for n in n_list:
        sums, cum = _cdf_steps(*iid_sum_atoms(p, z, n))
        y = (sums - n * stats.D) / (sd * np.sqrt(n))
        phi = special.ndtr(y)
        below = np.concatenate([[0.0], cum[:-1]])
        dev = max(float(np.max(np.abs(cum - phi))), float(np.max(np.abs(below - phi))))
        out.append(dev)
    return np.array(out)


def berry_esseen_check(P, Q, n_list):
    """max over n of sup_z |F_{Y_n}(z) − Φ(z)| · σ³√n / t³ (at most 1/2 by Berry–Esseen)."""
    stats = second_order_stats(P, Q)
    dev = berry_esseen_deviations(P, Q, n_list)
    norm = stats.V ** 1.5 * np.sqrt(np.asarray(n_list, dtype=float)) / stats.t3
    return float(np.max(dev * norm))


@dataclass(frozen=True)
class SecondOrderResult:
    n: int
    exact: float
    expansion: float
    bound: float


def second_order_classical(P, Q, n, eps):
    """Two-term expansion nD + √(nV) Φ⁻¹(ε) next to the exact D_s^ε(Pⁿ‖Qⁿ).

    ``bound`` is the Berry–Esseen upper bound nD + √(nV) Φ⁻¹(ε + t³/(2σ³√n)),
    infinite once the shifted argument reaches one.
    """
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    st = second_order_stats(P, Q)
    expansion = n * st.D + np.sqrt(n * st.V) * gaussian_quantile(eps)
    exact = classical_ds(P, Q, eps, n)
    if st.V > 0:
        shift = eps + 0.5 * st.t3 / (st.V ** 1.5 * np.sqrt(n))
        bound = n * st.D + np.sqrt(n * st.V) * gaussian_quantile(shift) if shift < 1 else np.inf
    else:
        bound = n * st.D
    return SecondOrderResult(int(n), float(exact), float(expansion), float(bound))


def second_order_csv(P, Q, eps, n_list):
    """CSV text with header ``n,exact,expansion,bound``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "exact", "expansion", "bound"])
    for n in n_list:
        r = second_order_classical(P, Q, n, eps)
        w.writerow([r.n, repr(r.exact), repr(r.expansion), repr(r.bound)])
    return buf.getvalue()


def quantum_ds_bounds_check(rho, sigma, eps, delta, eta):
    """(lhs, mid, rhs) of the Nussbaum–Szkoła bracket around D_s^ε(ρ‖σ).

    lhs = D_s^{ε−η−δ}(P‖Q) + log(δη/v) and
    rhs = D_s^{ε+δ}(P‖Q) + log(2^δ(ε+δ)v / (δ⁴(1−ε−δ))), with v the number of
    distinct eigenvalues of σ.
    """
    if not (0 < eps < 1 and 0 < eta < eps and 0 < delta < min(eps, 1 - eps) and delta + eta < eps):
        raise BudgetViolation("need 0 < δ < min{ε, 1−ε}, 0 < η and δ + η < ε")
    P, Q = nussbaum_szkola(rho, sigma)
    v = mc.distinct_count(sigma)
    lhs = classical_ds(P, Q, eps - eta - delta) + np.log2(delta * eta / v)
    rhs = classical_ds(P, Q, eps + delta) + np.log2(2 ** delta * (eps + delta) * v / (delta ** 4 * (1 - eps - delta)))
    mid = info_spectrum_ds(rho, sigma, eps)
    return float(lhs), float(mid), float(rhs)


def corollary_428_limit(P, a, C, n_list):
    """tr(ρⁿ{ρⁿ ≤ 2^{−na+√nC}}) for each n, computed from the spectrum P of ρ."""
    return np.array([iid_tail(P, n, -n * a + np.sqrt(n) * C) for n in n_list])


def entropy_stats(P):
    """S(ρ) and σ(ρ) = √V(ρ‖1) from the spectrum."""
    p = _weights(P)
    one = np.ones_like(p)
    return -kl(p, one), float(np.sqrt(info_variance(p, one)))


def neyman_pearson_classical(P, Q, eps):
    """D_H^ε(P‖Q) by the classical Neyman–Pearson lemma.

    Outcomes are admitted in decreasing order of the likelihood ratio p/q
    until the accepted P-mass reaches 1 − ε, the last one fractionally.
    """
    if not 0 <= eps < 1:
        raise DomainError("eps must lie in [0, 1)")
    p = np.asarray(P, dtype=float).ravel()
    q = np.asarray(Q, dtype=float).ravel()
    if p.shape != q.shape:
        raise DomainError("distributions must have the same length")
    keep = p > 0
    p, q = p[keep], q[keep]
    with np.errstate(divide="ignore"):
        ratio = np.where(q > 0, p / np.where(q > 0, q, 1.0), np.inf)
    order = np.argsort(-ratio, kind="stable")
    target = 1.0 - eps
    mass, beta = 0.0, 0.0
    for i in order:
        if mass >= target:
            break
        take = min(1.0, (target - mass) / p[i])
        mass += take * p[i]
        beta += take * q[i]
    if beta <= 0:
        return np.inf
    return float(-np.log2(beta))
