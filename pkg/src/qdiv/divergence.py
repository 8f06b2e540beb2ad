"""Quantum relative entropies and their Rényi, min/max and one-shot variants.

Every divergence is returned as a float in bits; ``numpy.inf`` marks the
support cases in which a divergence is infinite.
"""
import numpy as np
from scipy.special import logsumexp

from . import matcore as mc
from .errors import DomainError, GridExhausted, SupportViolation

LN2 = np.log(2.0)
GROUP_GAP = 40.0
RANK_RTOL = 1e-12
HT_BISECT_ITERS = 200


def gamma_of(alpha):
    """γ = (1 − α)/(2α), the sandwich exponent."""
    return (1.0 - alpha) / (2.0 * alpha)


def hoelder_conjugate(alpha):
    """β = α/(2α − 1), so that 1/α + 1/β = 2."""
    if alpha == 0.5:
        return np.inf
    if np.isinf(alpha):
        return 0.5
    return alpha / (2.0 * alpha - 1.0)


def _herm(A):
    A = np.asarray(A, dtype=complex)
    return 0.5 * (A + A.conj().T)


def _trace(A):
    return float(np.real(np.trace(A)))


def _same_shape(rho, sigma):
    if rho.shape != sigma.shape:
        raise mc.DimMismatch("operands have different shapes")


def qre(rho, sigma):
    """Umegaki relative entropy tr ρ(log ρ − log σ), or inf if supp ρ ⊄ supp σ."""
    rho, sigma = _herm(rho), _herm(sigma)
    _same_shape(rho, sigma)
    if not mc.support_contained(rho, sigma):
        return np.inf
    return _trace(rho @ (mc.mlog2(rho) - mc.mlog2(sigma)))


def qiv(rho, sigma):
    """Information variance tr ρ(log ρ − log σ)² − D(ρ‖σ)²."""
    rho, sigma = _herm(rho), _herm(sigma)
    _same_shape(rho, sigma)
    if not mc.support_contained(rho, sigma):
        return np.inf
    r, E = mc.eigh_desc(rho)
    s, F = mc.eigh_desc(sigma)
    mr, ms = mc.support_mask(r), mc.support_mask(s)
    overlap = np.abs(E[:, mr].conj().T @ F[:, ms]) ** 2
    z = np.log2(r[mr])[:, None] - np.log2(s[ms])[None, :]
    P = r[mr][:, None] * overlap
    D = float(np.sum(P * z))
    return max(float(np.sum(P * z * z)) - D * D, 0.0)


def d0(rho, sigma):
    """D_0(ρ‖σ) = −log tr(Π_ρ σ)."""
    rho, sigma = _herm(rho), _herm(sigma)
    val = _trace(mc.support_projector(rho) @ sigma)
    if val <= 0:
        return np.inf
    return float(-np.log2(val)) + 0.0


def rre(rho, sigma, alpha):
    """α-relative Rényi entropy (1/(α−1)) log(tr ρ^α σ^{1−α} / tr ρ)."""
    if alpha < 0 or alpha == 1:
        raise DomainError("rre needs alpha >= 0 and alpha != 1")
    rho, sigma = _herm(rho), _herm(sigma)
    _same_shape(rho, sigma)
    if alpha == 0:
        return d0(rho, sigma)
    if alpha > 1 and not mc.support_contained(rho, sigma):
        return np.inf
    q = _trace(mc.mpow(rho, alpha) @ mc.mpow(sigma, 1.0 - alpha))
    if q <= 0:
        return np.inf
    return float((np.log2(q) - np.log2(_trace(rho))) / (alpha - 1.0))


def _jacobi_singular_values(Y, tol=1e-15, max_sweeps=80):
    """Singular values of Y by one-sided Jacobi on the columns of Y†.

    Y† has the form (unscaled matrix)·diag(row scales), for which Jacobi keeps
    every singular value accurate in relative terms however wide the scales.
    """
    G = np.array(Y.conj().T, dtype=complex)
    n = G.shape[1]
    for _ in range(max_sweeps):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                a = np.vdot(G[:, i], G[:, i]).real
                b = np.vdot(G[:, j], G[:, j]).real
                c = np.vdot(G[:, i], G[:, j])
                if abs(c) <= tol * np.sqrt(a * b):
                    continue
                rotated = True
                phase = c / abs(c)
                gj = G[:, j] * np.conj(phase)
                zeta = (b - a) / (2.0 * abs(c))
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.hypot(1.0, zeta))
                cs = 1.0 / np.hypot(1.0, t)
                sn = cs * t
                gi = G[:, i].copy()
                G[:, i] = cs * gi - sn * gj
                G[:, j] = (sn * gi + cs * gj) * phase
        if not rotated:
            break
    return np.sort(np.linalg.norm(G, axis=0))[::-1]


def _sandwich_log_spectrum(rho, sigma, gamma):
    """Natural logs of the nonzero eigenvalues of σ^γ ρ σ^γ.

    The problem is written as the singular values of diag(s^γ)·X·diag(√λ) with
    X the overlap of the two eigenbases. Rows are sorted by scale and cut into
    groups wherever consecutive scales drop by more than GROUP_GAP; a group is
    projected off the row space of the earlier ones, which is exact up to
    relative corrections of order exp(−GROUP_GAP). The rank of each group is
    read from its unscaled rows, so a legitimately tiny singular value is never
    confused with rounding noise. Groups wider than GROUP_GAP use Jacobi.
    """
    s, F = mc.eigh_desc(sigma)
    lam, V = mc.eigh_desc(rho)
    ms, mr = mc.support_mask(s), mc.support_mask(lam)
    s, F, lam, V = s[ms], F[:, ms], lam[mr], V[:, mr]
    if s.size == 0 or lam.size == 0:
        return np.empty(0)
    logw = 2.0 * gamma * np.log(s)
    order = np.argsort(-logw, kind="stable")
    logw = logw[order]
    Z0 = (F.conj().T @ V)[order] * np.sqrt(lam)[None, :]
    cuts = np.flatnonzero(logw[:-1] - logw[1:] > GROUP_GAP) + 1
    groups = np.split(np.arange(logw.size), cuts)
    logs, basis = [], np.zeros((lam.size, 0), dtype=complex)
    for g in groups:
        room = lam.size - basis.shape[1]
        if room <= 0:
            break
        Z = Z0[g]
        if basis.shape[1]:
            Z = Z - (Z @ basis) @ basis.conj().T
        _, svz, Vh = np.linalg.svd(Z)
        ref = np.max(np.linalg.norm(Z0[g], axis=1))
        k = min(int(np.sum(svz > RANK_RTOL * ref)), room)
        if k == 0:
            continue
        top = logw[g[0]]
        Y = np.exp(0.5 * (logw[g] - top))[:, None] * Z
        if logw[g[0]] - logw[g[-1]] > GROUP_GAP:
            sv = _jacobi_singular_values(Y)
        else:
            sv = np.linalg.svd(Y, compute_uv=False)
        logs.append(2.0 * np.log(sv[:k]) + top)
        basis = np.hstack([basis, Vh[:k].conj().T])
    if not logs:
        return np.empty(0)
    return np.concatenate(logs)


def srd_log_q(rho, sigma, alpha):
    """Natural log of Q̃_α(ρ‖σ); inf when α > 1 and supp ρ ⊄ supp σ."""
    if alpha <= 0 or alpha == 1:
        raise DomainError("srd needs alpha > 0 and alpha != 1")
    rho, sigma = _herm(rho), _herm(sigma)
    _same_shape(rho, sigma)
    if alpha > 1 and not mc.support_contained(rho, sigma):
        return np.inf
    lmu = _sandwich_log_spectrum(rho, sigma, gamma_of(alpha))
    if lmu.size == 0:
        return -np.inf
    return float(logsumexp(alpha * lmu))


def srd_q(rho, sigma, alpha):
    """Q̃_α(ρ‖σ) = tr(σ^γ ρ σ^γ)^α."""
    return float(np.exp(srd_log_q(rho, sigma, alpha)))


def srd(rho, sigma, alpha):
    """α-sandwiched Rényi divergence in bits."""
    if np.isinf(alpha):
        return dmax(rho, sigma)
    lq = srd_log_q(rho, sigma, alpha)
    if np.isinf(lq):
        return np.inf
    tr = _trace(_herm(rho))
    return float((lq / LN2 - np.log2(tr)) / (alpha - 1.0)) + 0.0


def srd_zero_limit(rho, sigma, alpha_min=1e-4):
    """Linear extrapolation to α → 0 from samples at α_min and 2·α_min."""
    d1 = srd(rho, sigma, alpha_min)
    d2 = srd(rho, sigma, 2.0 * alpha_min)
    if np.isinf(d1) or np.isinf(d2):
        return np.inf
    return 2.0 * d1 - d2


def alpha_z(rho, sigma, alpha, z):
    """α-z relative entropy (1/(α−1)) log tr(ρ^{α/2z} σ^{(1−α)/z} ρ^{α/2z})^z."""
    if z <= 0 or alpha <= 0 or alpha == 1:
        raise DomainError("alpha_z needs alpha > 0, alpha != 1 and z > 0")
    rho, sigma = _herm(rho), _herm(sigma)
    _same_shape(rho, sigma)
    if alpha > 1 and not mc.support_contained(rho, sigma):
        return np.inf
    a = mc.mpow(rho, alpha / (2.0 * z))
    M = _herm(a @ mc.mpow(sigma, (1.0 - alpha) / z) @ a)
    w = np.linalg.eigvalsh(M)
    w = w[mc.support_mask(w)]
    if w.size == 0:
        return np.inf
    lq = float(logsumexp(z * np.log(w)))
    return float((lq / LN2 - np.log2(_trace(rho))) / (alpha - 1.0))


def fidelity(rho, sigma):
    """Root fidelity F(ρ, σ) = ‖√ρ √σ‖₁."""
    rho, sigma = _herm(rho), _herm(sigma)
    _same_shape(rho, sigma)
    return mc.schatten_norm(mc.mpow(rho, 0.5) @ mc.mpow(sigma, 0.5), 1)


def trace_distance(rho, sigma):
    rho, sigma = _herm(rho), _herm(sigma)
    _same_shape(rho, sigma)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(rho - sigma))))


def dmin(rho, sigma):
    """Min-relative entropy −2 log F(ρ, σ) + 2 log tr ρ."""
    F = fidelity(rho, sigma)
    if F <= 0:
        return np.inf
    return float(-2.0 * np.log2(F) + 2.0 * np.log2(_trace(_herm(rho))))


def dmax(rho, sigma):
    """Max-relative entropy log λ_max(σ^{-1/2} ρ σ^{-1/2})."""
    rho, sigma = _herm(rho), _herm(sigma)
    _same_shape(rho, sigma)
    if not mc.support_contained(rho, sigma):
        return np.inf
    s = mc.mpow(sigma, -0.5)
    top = float(np.max(np.linalg.eigvalsh(_herm(s @ rho @ s))))
    return float(np.log2(top))


def _ht_dual(rho, sigma, nu, target):
    """Lagrange dual value ν·target − tr(νρ − σ)_+ and tr ρ{νρ − σ > 0}."""
    H = _herm(nu * rho - sigma) / (1.0 + nu)
    w, U = np.linalg.eigh(H)
    pos = w > 0
    val = nu * target - (1.0 + nu) * float(np.sum(w[pos]))
    Up = U[:, pos]
    g = _trace(Up.conj().T @ rho @ Up)
    return val, g


def hypothesis_testing_re(rho, sigma, eps):
    """D_H^ε(ρ‖σ) = −log min{tr Tσ : tr Tρ ≥ 1 − ε, 0 ≤ T ≤ 1}.

    The minimum equals max_ν [ν(1 − ε) − tr(νρ − σ)_+] (Neyman–Pearson). The
    maximizer sits where ν ↦ tr ρ{νρ > σ} crosses 1 − ε, which is found by
    bisection on log ν.
    """
    if not 0 <= eps <= 1:
        raise DomainError("eps must lie in [0, 1]")
    rho, sigma = _herm(rho), _herm(sigma)
    _same_shape(rho, sigma)
    if eps == 0:
        return d0(rho, sigma)
    if eps == 1:
        return np.inf
    beta = type2_error(rho, sigma, eps)
    if beta <= 1e-300:
        return np.inf
    return float(-np.log2(beta))


def type2_error(rho, sigma, eps):
    """Optimal type-II error β_ε(ρ‖σ) of a test with type-I error at most ε."""
    rho, sigma = _herm(rho), _herm(sigma)
    target = 1.0 - eps
    lo, hi = -200.0, 200.0
    vlo, glo = _ht_dual(rho, sigma, 2.0**lo, target)
    if glo >= target:
        return max(vlo, 0.0)
    best = vlo
    for _ in range(HT_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        v, g = _ht_dual(rho, sigma, 2.0**mid, target)
        best = max(best, v)
        if g < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * max(1.0, abs(mid)):
            break
    for t in (lo, hi):
        best = max(best, _ht_dual(rho, sigma, 2.0**t, target)[0])
    return max(best, 0.0)


def neyman_pearson_test(rho, sigma, eps, tol=1e-9):
    """An optimal test {νρ − σ > 0} + t·P_0 at the bisection fixed point."""
    rho, sigma = _herm(rho), _herm(sigma)
    target = 1.0 - eps
    lo, hi = -200.0, 200.0
    for _ in range(HT_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        _, g = _ht_dual(rho, sigma, 2.0**mid, target)
        if g < target:
            lo = mid
        else:
            hi = mid
    nu = 2.0 ** (0.5 * (lo + hi))
    H = _herm(nu * rho - sigma) / (1.0 + nu)
    dec = mc.eig_hermitian(H, tau_cluster=tol)
    w, U = dec.eigenvalues, dec.eigenvectors
    pos = w > tol
    zero = np.abs(w) <= tol
    Pp = U[:, pos] @ U[:, pos].conj().T
    P0 = U[:, zero] @ U[:, zero].conj().T
    rest = _trace(P0 @ rho)
    t = 0.0 if rest <= 0 else float(np.clip((target - _trace(Pp @ rho)) / rest, 0.0, 1.0))
    return Pp + t * P0


def _spectral_tail_batch(rho, sigma, gammas):
    """tr(ρ{ρ ≤ 2^γ σ}) for an array of γ values."""
    g = np.asarray(gammas, dtype=float)
    c = 2.0 ** g
    H = (rho[None] - c[:, None, None] * sigma[None]) / (1.0 + c)[:, None, None]
    w, U = np.linalg.eigh(H)
    tz = mc.TAU_ZERO * np.max(np.abs(w), axis=1, keepdims=True)
    mask = (w < tz) | (w <= 0)
    diag = np.real(np.einsum("kji,jl,kli->ki", U.conj(), rho, U))
    return np.sum(np.where(mask, diag, 0.0), axis=1)


def info_spectrum_ds(rho, sigma, eps, lo=-64.0, hi=64.0, h=1e-4):
    """Information spectrum relative entropy sup{γ : tr ρ{ρ ≤ 2^γ σ} ≤ ε}.

    Evaluated on the lattice γ = k·h inside [lo, hi]: a coarse scan at 625·h,
    then two refinement passes of 25 points each. The returned γ satisfies the
    condition and γ + h violates it.
    """
    if not 0 <= eps <= 1:
        raise DomainError("eps must lie in [0, 1]")
    rho, sigma = _herm(rho), _herm(sigma)
    _same_shape(rho, sigma)
    steps = (625, 25, 1)
    k_lo, k_hi = int(np.ceil(lo / h)), int(np.floor(hi / h))
    ks = np.arange(k_lo, k_hi + 1, steps[0])
    if ks[-1] != k_hi:
        ks = np.append(ks, k_hi)
    ok = _spectral_tail_batch(rho, sigma, ks * h) <= eps
    if ok[-1]:
        raise GridExhausted("condition still holds at the upper end of the grid")
    if not ok.any():
        return -np.inf
    best = int(ks[np.nonzero(ok)[0][-1]])
    nxt = int(ks[np.nonzero(ks > best)[0][0]])
    for step in steps[1:]:
        cand = np.arange(best, nxt + 1, step)
        okc = _spectral_tail_batch(rho, sigma, cand * h) <= eps
        idx = np.nonzero(okc)[0][-1]
        best = int(cand[idx])
        nxt = int(cand[idx + 1]) if idx + 1 < cand.size else nxt
    return best * h


def positive_part_curve(rho, sigma, gamma):
    """γ ↦ tr(ρ − 2^γ σ)_+, evaluated in a scaled form to avoid overflow."""
    c = 2.0**gamma
    w = np.linalg.eigvalsh(_herm(rho - c * sigma) / (1.0 + c))
    return float((1.0 + c) * np.sum(np.clip(w, 0.0, None)))


def _root_decreasing(f, target, lo=-64.0, hi=64.0, tol=1e-13):
    """Largest γ with f(γ) ≥ target for a continuous decreasing f."""
    while f(lo) < target:
        lo -= 64.0
        if lo < -2048:
            return -np.inf
    while f(hi) >= target:
        hi += 64.0
        if hi > 2048:
            return np.inf
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if f(mid) >= target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


def underline_ds(rho, sigma, eps):
    """sup{γ : tr(ρ − 2^γ σ)_+ ≥ 1 − ε}, found by bisection."""
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    rho, sigma = _herm(rho), _herm(sigma)
    _same_shape(rho, sigma)
    return _root_decreasing(lambda g: positive_part_curve(rho, sigma, g), 1.0 - eps)


def overline_ds(rho, sigma, eps):
    """inf{γ : tr(ρ − 2^γ σ)_+ ≤ ε}, found by bisection."""
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    rho, sigma = _herm(rho), _herm(sigma)
    _same_shape(rho, sigma)
    f = lambda g: positive_part_curve(rho, sigma, g)
    # the infimum of {f ≤ ε} is the boundary point of {f > ε}
    lo, hi = -64.0, 64.0
    while f(lo) <= eps:
        lo -= 64.0
        if lo < -2048:
            return -np.inf
    while f(hi) > eps:
        hi += 64.0
        if hi > 2048:
            return np.inf
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if f(mid) > eps:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13:
            break
    return 0.5 * (lo + hi)


def _check_fl_support(rho, sigma, alpha):
    if alpha > 1 and not mc.support_contained(rho, sigma):
        raise SupportViolation("supp ρ is not contained in supp σ")
    if alpha < 1 and _trace(rho @ sigma) <= 0 and _trace(mc.support_projector(rho) @ sigma) <= 0:
        raise SupportViolation("ρ and σ are orthogonal")


def frank_lieb_optimizer(rho, sigma, alpha):
    """Ĥ = σ^γ (σ^γ ρ σ^γ)^{α−1} σ^γ."""
    rho, sigma = _herm(rho), _herm(sigma)
    _same_shape(rho, sigma)
    _check_fl_support(rho, sigma, alpha)
    g = gamma_of(alpha)
    sg = mc.mpow(sigma, g)
    A = _herm(sg @ rho @ sg)
    return _herm(sg @ mc.mpow(A, alpha - 1.0) @ sg)


def frank_lieb_functional(H, rho, sigma, alpha):
    """f_α(H, ρ, σ) = α tr(ρH) − (α − 1) tr(σ^{−γ} H σ^{−γ})^{α/(α−1)}."""
    H, rho, sigma = _herm(H), _herm(rho), _herm(sigma)
    g = gamma_of(alpha)
    sg = mc.mpow(sigma, -g)
    M = _herm(sg @ H @ sg)
    return float(alpha * _trace(rho @ H) - (alpha - 1.0) * _trace(mc.mpow(M, alpha / (alpha - 1.0))))


def dpi_gap_and_residual(rho, sigma, channel, alpha):
    """DPI gap of the α-SRD under a channel and the operator-norm residual
    ‖Ĥ(ρ, σ) − Λ†(Ĥ(Λρ, Λσ))‖_∞ of the equality condition."""
    if not (alpha >= 0.5 and alpha != 1):
        raise DomainError("alpha must lie in [1/2, 1) or (1, inf)")
    rho, sigma = _herm(rho), _herm(sigma)
    _check_fl_support(rho, sigma, alpha)
    lr, ls = _herm(channel.apply(rho)), _herm(channel.apply(sigma))
    gap = srd(rho, sigma, alpha) - srd(lr, ls, alpha)
    H0 = frank_lieb_optimizer(rho, sigma, alpha)
    H1 = channel.adjoint_apply(frank_lieb_optimizer(lr, ls, alpha))
    residual = mc.opnorm(_herm(H0 - H1))
    return float(gap), float(residual)
