"""Rényi entropies, conditional entropies, mutual informations and their checks.

The conditional entropy and the mutual information both minimize the sandwiched
divergence D̃_α(ρ_AB ‖ X_A ⊗ σ_B) over states σ_B, with X_A = 1_A or ρ_A. The
minimizer runs exponentiated-gradient descent with the exact gradient of
Q̃_α. Because Q̃_α is concave in σ for α ∈ [1/2, 1) and convex for α > 1, the
Frank–Wolfe gap of the final iterate certifies how far from optimal the result
can be; that certified side is reported as ``bound``.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import matcore as mc
from . import quantum as qu
from .divergence import LN2, gamma_of, hoelder_conjugate, fidelity
from .errors import DomainError, PreconditionViolation, SingularMarginal


def _herm(A):
    A = np.asarray(A, dtype=complex)
    return 0.5 * (A + A.conj().T)


def renyi_entropy(rho, alpha):
    """S_α(ρ) = (1/(1−α)) log tr ρ^α; α ∈ {0, 1, inf} are the limits."""
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    w = np.linalg.eigvalsh(_herm(rho))
    w = w[mc.support_mask(w)]
    if alpha == 0:
        return float(np.log2(w.size))
    if alpha == 1:
        return float(-np.sum(w * np.log2(w)))
    if np.isinf(alpha):
        return float(-np.log2(np.max(w)))
    lw = np.log(w)
    m = np.max(alpha * lw)
    return float((m + np.log(np.sum(np.exp(alpha * lw - m)))) / LN2 / (1.0 - alpha)) + 0.0


def von_neumann_entropy(rho):
    return renyi_entropy(rho, 1)


def conditional_entropy(rho_ab, dims):
    """S(A|B) = S(AB) − S(B)."""
    return von_neumann_entropy(rho_ab) - von_neumann_entropy(mc.partial_trace(rho_ab, dims, [1]))


def mutual_information(rho_ab, dims):
    ra = mc.partial_trace(rho_ab, dims, [0])
    rb = mc.partial_trace(rho_ab, dims, [1])
    return von_neumann_entropy(ra) + von_neumann_entropy(rb) - von_neumann_entropy(rho_ab)


def conditional_mutual_information(rho_abc, dims):
    s = von_neumann_entropy
    return (s(mc.partial_trace(rho_abc, dims, [0, 2])) + s(mc.partial_trace(rho_abc, dims, [1, 2]))
            - s(mc.partial_trace(rho_abc, dims, [2])) - s(rho_abc))


@dataclass
class OptimizerParams:
    restarts: int = 5
    seed: int = 0
    max_iter: int = 4000
    gap_tol: float = 1e-11
    rel_tol: float = 1e-9
    window: int = 5
    polish: bool = True


@dataclass
class OptimizerReport:
    """Outcome of a σ_B optimization.

    ``value`` is the quantity evaluated at the best state found, and ``bound``
    is the certified value on the other side of the true optimum.
    """
    value: float
    argmin_state: np.ndarray
    iterations: int
    restarts: int
    converged: bool
    final_step_norm: float
    bound: float = np.nan
    objective: float = np.nan
    history: list = field(default_factory=list, repr=False)


def _divided_differences(s, p):
    """Matrix L_ij = (f(s_i) − f(s_j))/(s_i − s_j) for f(x) = x^p on x > 0, f(0) = 0."""
    pos = s > 0
    ls = np.where(pos, np.log(np.where(pos, s, 1.0)), 0.0)
    li, lj = ls[:, None], ls[None, :]
    both = pos[:, None] & pos[None, :]
    ell = li - lj
    with np.errstate(all="ignore"):
        ratio = np.where(np.abs(ell) < 1e-12, p, np.expm1(p * ell) / np.expm1(ell))
        L = np.where(both, ratio * np.exp((p - 1.0) * lj), 0.0)
        si = np.where(pos, s, 0.0)
        one = pos[:, None] & ~pos[None, :]
        L = np.where(one, np.broadcast_to((si ** (p - 1.0))[:, None], L.shape) * one, L)
        L = np.where(one.T, np.broadcast_to((si ** (p - 1.0))[None, :], L.shape) * one.T, L)
    return np.nan_to_num(L, nan=0.0, posinf=0.0, neginf=0.0)


class _SandwichObjective:
    """σ_B ↦ Q̃_α(ρ_AB ‖ X_A ⊗ σ_B) with its gradient in σ_B."""

    def __init__(self, rho, dims, alpha, X):
        rho = _herm(rho)
        self.dA, self.dB = dims
        self.alpha = alpha
        self.p = 2.0 * gamma_of(alpha)
        lam, V = mc.eigh_desc(rho)
        mask = mc.support_mask(lam)
        self.R = V[:, mask] * np.sqrt(lam[mask])[None, :]
        x, Ux = mc.eigh_desc(_herm(X))
        x = np.where(mc.support_mask(x), x, 0.0)
        self.x, self.Ux = x, Ux
        self.X = _herm(X)

    def _spectral(self, sigma):
        sB, UB = mc.eigh_desc(_herm(sigma))
        if self.alpha > 1 and sB[-1] <= 0:
            return None, None
        sB = np.clip(sB, 0.0, None)
        s = np.kron(self.x, sB)
        U = np.kron(self.Ux, UB)
        return s, U

    def value(self, sigma):
        s, U = self._spectral(sigma)
        if s is None:
            return np.inf
        pos = s > 0
        W = U[:, pos] * (s[pos] ** (0.5 * self.p))[None, :]
        B = W.conj().T @ self.R
        mu = np.linalg.svd(B, compute_uv=False) ** 2
        mu = mu[mu > 0]
        return float(np.sum(mu ** self.alpha))

    def value_and_grad(self, sigma):
        s, U = self._spectral(sigma)
        if s is None:
            return np.inf, np.zeros((self.dB, self.dB), dtype=complex)
        pos = s > 0
        sp = np.zeros_like(s)
        sp[pos] = s[pos] ** self.p
        S = (U * sp[None, :]) @ U.conj().T
        A = _herm(self.R.conj().T @ S @ self.R)
        mu, Wm = np.linalg.eigh(A)
        good = mu > 1e-300
        Q = float(np.sum(mu[good] ** self.alpha))
        Wg = Wm[:, good]
        Z = self.R @ (Wg * (mu[good] ** (self.alpha - 1.0))[None, :]) @ Wg.conj().T @ self.R.conj().T
        Zt = U.conj().T @ Z @ U
        L = _divided_differences(s, self.p)
        G = self.alpha * (U @ (L * Zt) @ U.conj().T)
        XG = np.kron(self.X, np.eye(self.dB)) @ G
        grad = mc.partial_trace(XG, [self.dA, self.dB], [1])
        return Q, _herm(grad)


def _expm_h(H):
    w, U = np.linalg.eigh(_herm(H))
    w = w - w.max()
    e = np.exp(w)
    M = (U * e[None, :]) @ U.conj().T
    return _herm(M / np.sum(e))


def _logm_h(S):
    w, U = np.linalg.eigh(_herm(S))
    w = np.clip(w, 1e-300, None)
    return _herm((U * np.log(w)[None, :]) @ U.conj().T)


def _to_bits(Q, alpha, tr):
    if Q <= 0:
        return np.inf
    return float((np.log2(Q) - np.log2(tr)) / (alpha - 1.0))


def _single_run(obj, sigma0, alpha, tr, params):
    """Exponentiated-gradient descent on D̃ from ``sigma0``; returns best state."""
    sigma = _herm(sigma0) / np.real(np.trace(sigma0))
    Q, G = obj.value_and_grad(sigma)
    f = _to_bits(Q, alpha, tr)
    scale = 1.0 / ((alpha - 1.0) * Q * LN2)
    g = G * scale
    eta = 0.5 / max(mc.opnorm(g), 1e-12)
    history = [f]
    step_norm = np.inf
    it = 0
    for it in range(1, params.max_iter + 1):
        L = _logm_h(sigma)
        accepted = False
        for _ in range(60):
            cand = _expm_h(L - eta * g)
            Qc, Gc = obj.value_and_grad(cand)
            fc = _to_bits(Qc, alpha, tr)
            if fc <= f:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            break
        step_norm = float(np.max(np.abs(cand - sigma)))
        sigma, Q, G, f = cand, Qc, Gc, fc
        g = G * (1.0 / ((alpha - 1.0) * Q * LN2))
        eta *= 1.5
        history.append(f)
        gap = _fw_gap_bits(Q, G, sigma, alpha)
        if gap <= params.gap_tol:
            break
        if len(history) > params.window:
            old = history[-1 - params.window]
            if abs(old - f) <= params.rel_tol * max(1.0, abs(f)) * 1e-3:
                break
    return sigma, Q, G, f, it, step_norm, history


def _fw_bound_q(Q, G, sigma, alpha):
    """Certified bound on the optimal Q̃ from concavity (α < 1) or convexity (α > 1)."""
    w = np.linalg.eigvalsh(G)
    inner = float(np.real(np.trace(G @ sigma)))
    if alpha < 1:
        return Q + float(w[-1]) - inner
    return Q + float(w[0]) - inner


def _fw_gap_bits(Q, G, sigma, alpha):
    Qb = _fw_bound_q(Q, G, sigma, alpha)
    if Qb <= 0:
        return np.inf
    return abs(np.log2(Qb) - np.log2(Q)) / abs(alpha - 1.0)


def _polish(obj, sigma, alpha, tr):
    """Quasi-Newton refinement in the parametrization σ = GG†/tr(GG†)."""
    d = sigma.shape[0]
    w, U = np.linalg.eigh(_herm(sigma))
    G0 = U * np.sqrt(np.clip(w, 1e-300, None))[None, :]
    x0 = np.concatenate([G0.real.ravel(), G0.imag.ravel()])

    def fun(x):
        Gm = (x[: d * d] + 1j * x[d * d:]).reshape(d, d)
        t = float(np.real(np.trace(Gm @ Gm.conj().T)))
        s = _herm(Gm @ Gm.conj().T / t)
        Q, grad = obj.value_and_grad(s)
        f = _to_bits(Q, alpha, tr)
        gf = grad / ((alpha - 1.0) * Q * LN2)
        inner = float(np.real(np.trace(gf @ s)))
        dG = 2.0 * (gf - inner * np.eye(d)) @ Gm / t
        return f, np.concatenate([dG.real.ravel(), dG.imag.ravel()])

    res = minimize(fun, x0, jac=True, method="L-BFGS-B", options={"maxiter": 500, "ftol": 1e-16, "gtol": 1e-13})
    Gm = (res.x[: d * d] + 1j * res.x[d * d:]).reshape(d, d)
    s = _herm(Gm @ Gm.conj().T)
    return s / np.real(np.trace(s))


def _restart_states(dB, warm, params):
    states = [warm]
    seeds = np.random.SeedSequence([params.seed, dB]).spawn(params.restarts)
    for ss in seeds:
        states.append(qu.random_density(dB, seed=np.random.default_rng(ss)))
    return states


def _minimize_divergence(rho, dims, alpha, X, warm, params):
    """Minimize D̃_α(ρ_AB ‖ X ⊗ σ_B) over σ_B; returns the best run and a certified bound."""
    if alpha < 0.5:
        raise DomainError("the optimizer needs alpha >= 1/2")
    params = params or OptimizerParams()
    rho = _herm(rho)
    tr = float(np.real(np.trace(rho)))
    obj = _SandwichObjective(rho, dims, alpha, X)
    dB = dims[1]
    warm = _herm(warm)
    warm = 0.999 * warm / np.real(np.trace(warm)) + 0.001 * np.eye(dB) / dB
    best = None
    total_iter = 0
    probes = []
    for idx, s0 in enumerate(_restart_states(dB, warm, params)):
        sigma, Q, G, f, it, step, hist = _single_run(obj, s0, alpha, tr, params)
        total_iter += it
        probes.extend(hist)
        if params.polish and _fw_gap_bits(Q, G, sigma, alpha) > params.gap_tol:
            cand = _polish(obj, sigma, alpha, tr)
            Qc, Gc = obj.value_and_grad(cand)
            fc = _to_bits(Qc, alpha, tr)
            if fc < f:
                sigma, Q, G, f = cand, Qc, Gc, fc
                probes.append(f)
        if best is None or f < best[3]:
            best = (sigma, Q, G, f, step, idx)
    sigma, Q, G, f, step, _ = best
    Qb = _fw_bound_q(Q, G, sigma, alpha)
    lower = _to_bits(Qb, alpha, tr) if Qb > 0 else -np.inf
    if alpha > 1 and Qb <= 0:
        lower = -np.inf
    gap = f - lower
    conv = gap <= max(1e-8, 10 * params.gap_tol)
    return f, lower, sigma, total_iter, params.restarts, conv, step, probes


def conditional_renyi(rho_ab, dims, alpha, params=None):
    """S̃_α(A|B) = −min_σ D̃_α(ρ_AB ‖ 1_A ⊗ σ_B).

    ``value`` is a lower bound on S̃_α(A|B) (any feasible σ_B gives one) and
    ``bound`` a certified upper bound.
    """
    dA, dB = dims
    rb = mc.partial_trace(rho_ab, dims, [1])
    if alpha == 1:
        h = conditional_entropy(rho_ab, dims)
        return OptimizerReport(h, rb, 0, 0, True, 0.0, bound=h, objective=-h)
    f, lower, sigma, it, rs, conv, step, probes = _minimize_divergence(
        rho_ab, dims, alpha, np.eye(dA), rb, params)
    return OptimizerReport(-f, sigma, it, rs, conv, step, bound=-lower, objective=f, history=probes)


def renyi_mutual_info(rho_ab, dims, alpha, params=None):
    """Ĩ_α(A;B) = min_σ D̃_α(ρ_AB ‖ ρ_A ⊗ σ_B).

    ``value`` is an upper bound on Ĩ_α and ``bound`` a certified lower bound.
    """
    ra = mc.partial_trace(rho_ab, dims, [0])
    rb = mc.partial_trace(rho_ab, dims, [1])
    if alpha == 1:
        i = mutual_information(rho_ab, dims)
        return OptimizerReport(i, rb, 0, 0, True, 0.0, bound=i, objective=i)
    f, lower, sigma, it, rs, conv, step, probes = _minimize_divergence(rho_ab, dims, alpha, ra, rb, params)
    return OptimizerReport(f, sigma, it, rs, conv, step, bound=lower, objective=f, history=probes)


def sandwiched_mutual_info_fixed(rho_ab, dims, alpha, sigma_b=None):
    """D̃_α(ρ_AB ‖ ρ_A ⊗ σ_B) at a fixed σ_B (ρ_B by default), no optimization."""
    from .divergence import srd
    ra = mc.partial_trace(rho_ab, dims, [0])
    sb = mc.partial_trace(rho_ab, dims, [1]) if sigma_b is None else sigma_b
    return srd(rho_ab, np.kron(ra, sb), alpha)


def _regularize(X, on):
    if not on:
        return X
    d = X.shape[0]
    return (1 - 1e-9) * X + 1e-9 * np.eye(d) / d


def renyi_cmi(rho_abc, dims, alpha, regularize=False):
    """Ĩ_α(A;B|C) = (2α/(α−1)) log ‖ρ_ABC^{1/2} ρ_AC^{γ} ρ_C^{−γ} ρ_BC^{γ}‖_{2α}, γ = (1−α)/2α."""
    if alpha <= 0 or alpha == 1:
        raise DomainError("renyi_cmi needs alpha > 0 and alpha != 1")
    rho = _herm(rho_abc)
    dA, dB, dC = dims
    r_ac = _regularize(mc.partial_trace(rho, dims, [0, 2]), regularize)
    r_bc = _regularize(mc.partial_trace(rho, dims, [1, 2]), regularize)
    r_c = _regularize(mc.partial_trace(rho, dims, [2]), regularize)
    if not regularize:
        w = np.linalg.eigvalsh(r_bc)
        if np.min(w) <= mc.TAU_SUPP * np.max(w):
            raise SingularMarginal("ρ_BC is rank deficient")
    g = gamma_of(alpha)
    f_ac = mc.embed(mc.mpow(r_ac, g), dims, [0, 2])
    f_c = mc.embed(mc.mpow(r_c, -g), dims, [2])
    f_bc = mc.embed(mc.mpow(r_bc, g), dims, [1, 2])
    M = mc.mpow(rho, 0.5) @ f_ac @ f_c @ f_bc
    norm = mc.schatten_norm(M, 2.0 * alpha)
    if norm <= 0:
        return np.inf
    return float(2.0 * alpha / (alpha - 1.0) * np.log2(norm))


def _check_equal(X, Y, what):
    if np.max(np.abs(X - Y)) > 1e-8:
        raise PreconditionViolation(f"{what} marginals differ")


def fidelity_bound_margin(clause, rho, sigma, alpha, dims=None, params=None):
    """LHS − (2α/(1−α)) log F for one clause of the fidelity bounds.

    Clauses: ``"i"`` Rényi entropies; ``"ii"`` conditional entropies;
    ``"iii"`` mutual informations (needs ρ_A = σ_A); ``"iv"`` conditional
    mutual informations (needs equal AC, BC and C marginals).
    """
    if not 0.5 < alpha < 1:
        raise DomainError("alpha must lie in (1/2, 1)")
    beta = hoelder_conjugate(alpha)
    F = fidelity(rho, sigma)
    rhs = 2.0 * alpha / (1.0 - alpha) * np.log2(F) if F > 0 else -np.inf
    if clause == "i":
        lhs = renyi_entropy(rho, alpha) - renyi_entropy(sigma, beta)
    elif clause == "ii":
        lhs = conditional_renyi(rho, dims, alpha, params).value - conditional_renyi(sigma, dims, beta, params).value
    elif clause == "iii":
        _check_equal(mc.partial_trace(rho, dims, [0]), mc.partial_trace(sigma, dims, [0]), "A")
        lhs = renyi_mutual_info(rho, dims, beta, params).value - renyi_mutual_info(sigma, dims, alpha, params).value
    elif clause == "iv":
        for keep, name in (([0, 2], "AC"), ([1, 2], "BC"), ([2], "C")):
            _check_equal(mc.partial_trace(rho, dims, keep), mc.partial_trace(sigma, dims, keep), name)
        lhs = renyi_cmi(rho, dims, beta) - renyi_cmi(sigma, dims, alpha)
    else:
        raise DomainError(f"unknown clause {clause!r}")
    return float(lhs - rhs)


def check_fidelity_bounds(rho, sigma, alpha, dims=None, clauses=("i", "ii", "iii", "iv"), params=None):
    """Margins of all requested clauses as a dict; each should be ≥ 0."""
    return {c: fidelity_bound_margin(c, rho, sigma, alpha, dims, params) for c in clauses}


def _stinespring_output(channel, rho_a):
    """Pure state on R ⊗ B ⊗ E from the canonical purification of ρ_A."""
    psi = qu.purify(rho_a)
    dA = rho_a.shape[0]
    r = psi.size // dA
    V = channel.stinespring()
    M = psi.reshape(dA, r)
    out = V @ M
    out = out.reshape(channel.out_dim, channel.env_dim, r)
    return np.transpose(out, (2, 0, 1)).ravel(), (r, channel.out_dim, channel.env_dim)


def coherent_info_at(channel, rho_a, alpha, params=None):
    """Certified lower bound on −S̃_α(R|B) for the input ρ_A, via S̃_β(R|E)."""
    beta = hoelder_conjugate(alpha)
    vec, (r, dB, dE) = _stinespring_output(channel, rho_a)
    full = qu.proj(vec)
    rho_re = mc.partial_trace(full, [r, dB, dE], [0, 2])
    if dE == 1:
        return renyi_entropy(mc.partial_trace(full, [r, dB, dE], [0]), beta)
    return conditional_renyi(rho_re, (r, dE), beta, params).value


@dataclass
class CoherentInfoParams:
    restarts: int = 2
    seed: int = 0
    max_evals: int = 200
    search: OptimizerParams = field(
        default_factory=lambda: OptimizerParams(restarts=0, max_iter=300, gap_tol=1e-9, polish=False))
    final: OptimizerParams = field(default_factory=OptimizerParams)


def _state_from_generator(x, d):
    """Full-rank state exp(H)/tr exp(H) for the Hermitian H encoded by ``x``."""
    H = np.zeros((d, d), dtype=complex)
    iu = np.triu_indices(d, 1)
    H[np.diag_indices(d)] = x[:d]
    k = len(iu[0])
    H[iu] = x[d:d + k] + 1j * x[d + k:d + 2 * k]
    H = H + np.triu(H, 1).conj().T
    return _expm_h(H)


def renyi_coherent_info(channel, alpha, params=None):
    """max over inputs of −S̃_α(R|B); ``value`` is a lower bound on the maximum.

    The outer search is Nelder–Mead over full-rank inputs, started at the
    maximally mixed state and at seeded random generators. Each candidate is
    scored by the dual conditional entropy S̃_β(R|E) of the Stinespring output,
    whose optimizer value is itself a lower bound.
    """
    if alpha <= 0.5 or alpha == 1:
        raise DomainError("coherent information is evaluated for alpha > 1/2, alpha != 1")
    params = params or CoherentInfoParams()
    d = channel.in_dim
    npar = d * d

    def neg(x):
        return -coherent_info_at(channel, _state_from_generator(x, d), alpha, params.search)

    starts = [np.zeros(npar)]
    for ss in np.random.SeedSequence([params.seed, d]).spawn(params.restarts):
        starts.append(np.random.default_rng(ss).normal(size=npar))
    best, best_x, evals = -np.inf, starts[0], 0
    for x0 in starts:
        res = minimize(neg, x0, method="Nelder-Mead",
                       options={"maxfev": params.max_evals, "xatol": 1e-7, "fatol": 1e-12})
        evals += res.nfev
        if -res.fun > best:
            best, best_x = -res.fun, res.x
    rho_a = _state_from_generator(best_x, d)
    val = coherent_info_at(channel, rho_a, alpha, params.final)
    return OptimizerReport(val, rho_a, evals, params.restarts, True, 0.0, bound=np.nan, objective=val)


def reof_lower_bound(rho_ab, dims, alpha, params=None):
    """max{−S̃_β(A|B), −S̃_β(B|A), 0} with β = α/(2α − 1), for α > 1."""
    if alpha <= 1:
        raise DomainError("the entanglement-of-formation bound needs alpha > 1")
    beta = hoelder_conjugate(alpha)
    ab = -conditional_renyi(rho_ab, dims, beta, params).bound
    swapped = mc.permute_systems(rho_ab, dims, [1, 0])
    ba = -conditional_renyi(swapped, (dims[1], dims[0]), beta, params).bound
    return max(ab, ba, 0.0)


def decomposition_average_entropy(weights, vectors, dims, alpha):
    """Σ_i p_i S_α(tr_B ψ_i) for an explicit pure-state decomposition."""
    total = 0.0
    for p, v in zip(weights, vectors):
        total += p * renyi_entropy(qu.reduced_state(v, dims, [0]), alpha)
    return float(total)
