"""Strong-converse fidelity bounds for state redistribution and its relatives.

Every bound has the form F_n ≤ 2^{−nκ(α)·bracket} with κ(α) = (1−α)/(2α) and
β = α/(2α−1). The Rényi terms inside a bracket come from the σ_B optimizers of
module renyi, and each one is taken on the side that can only make the bracket
smaller: terms entering with a plus sign use a certified lower value and terms
entering with a minus sign a certified upper value. Conditional entropies of a
pure state are turned around with the duality S̃_α(R|X) = −S̃_β(R|X^c), so that
both sides come from an optimizer's primal value, which is far more accurate
than a Frank–Wolfe certificate.

Protocols of tiny dimension can be simulated exactly: the global state is kept
as a list of unnormalized pure branches (one per Kraus path), so the fidelity
with a pure target is Σ_b |⟨t|v_b⟩|².
"""
from dataclasses import dataclass, field

import numpy as np

from . import matcore as mc
from . import quantum as qu
from .divergence import fidelity, hoelder_conjugate
from .errors import BadParams, DimMismatch, DomainError, Intractable, PreconditionViolation
from .renyi import OptimizerParams, conditional_renyi, renyi_entropy, renyi_mutual_info

SIM_DIM_BUDGET = 2 ** 12
MIXED_TARGET_BUDGET = 2 ** 10
PURIFICATION_TOL = 1e-9
KINDS = ("redistribution", "redistribution_feedback", "source_coding", "coherent_merging",
         "state_splitting", "measurement_compression")
SYSTEMS = ("A", "B", "C", "R")
A, B, C, R = range(4)

# Registers that each special case forces to be trivial.
_TRIVIAL = {
    "source_coding": {"B", "C", "T_A", "T_A_out"},
    "coherent_merging": {"C", "T_A"},
    "state_splitting": {"B", "T_A_out"},
    "measurement_compression": {"C"},
}


def kappa(alpha):
    return (1.0 - alpha) / (2.0 * alpha)


def iota(beta):
    return (beta - 1.0) / beta


def _check_alpha(alpha):
    if not 0.5 < alpha < 1.0:
        raise DomainError("alpha must lie in (1/2, 1)")


def _exp_bound(n, k, bracket):
    with np.errstate(over="ignore"):
        return float(np.exp2(-n * k * bracket))


# ---------------------------------------------------------------- rates

@dataclass
class RateBook:
    """Per-copy costs in bits.

    ``q`` and ``e`` are the communication and entanglement costs; ``q_fwd`` and
    ``q_both`` the forward and total communication of a feedback protocol; ``c``
    and ``r`` the classical communication and randomness costs of measurement
    compression. Merging's entanglement gain is −e and splitting's cost is e.
    """
    q: float = 0.0
    e: float = 0.0
    q_fwd: float = np.nan
    q_both: float = np.nan
    c: float = np.nan
    r: float = np.nan

    def __post_init__(self):
        if self.q < 0:
            raise BadParams("communication cost must be nonnegative")
        if np.isnan(self.q_fwd):
            self.q_fwd = self.q
        if np.isnan(self.q_both):
            self.q_both = self.q_fwd
        if self.q_both < self.q_fwd - 1e-15:
            raise BadParams("total communication cannot be below the forward communication")

    @classmethod
    def from_dims(cls, n, Q=1, T_A=1, T_A_out=1):
        """q = log|Q|/n and e = (log|T_A| − log|T_A′|)/n."""
        _check_dims(n=n, Q=Q, T_A=T_A, T_A_out=T_A_out)
        return cls(q=np.log2(Q) / n, e=(np.log2(T_A) - np.log2(T_A_out)) / n)

    @classmethod
    def feedback(cls, n, rounds, T_A=1, T_A_out=1):
        """``rounds`` lists (|Q_i|, |Q_i′|); the last round has no backward register."""
        rounds = [tuple(int(x) for x in r) for r in rounds]
        if not rounds:
            raise BadParams("a feedback protocol needs at least one round")
        if rounds[-1][1] != 1:
            raise BadParams("the final round carries no backward register (|Q_M'| = 1)")
        _check_dims(*[d for r in rounds for d in r], n=n, T_A=T_A, T_A_out=T_A_out)
        fwd = sum(np.log2(q) for q, _ in rounds) / n
        back = sum(np.log2(b) for _, b in rounds[:-1]) / n
        e = (np.log2(T_A) - np.log2(T_A_out)) / n
        return cls(q=fwd, e=e, q_fwd=fwd, q_both=fwd + back)

    @classmethod
    def measurement(cls, n, L, M_A=1):
        _check_dims(n=n, L=L, M_A=M_A)
        return cls(q=0.0, e=0.0, c=np.log2(L) / n, r=np.log2(M_A) / n)


def _check_dims(*dims, **named):
    for name, d in list(enumerate(dims)) + list(named.items()):
        if int(d) != d or d < 1:
            raise BadParams(f"dimension {name} must be a positive integer, got {d}")


# ---------------------------------------------------------------- entropic terms

def _reduced(psi, dims, keep):
    """Marginal of a pure vector on the systems ``keep`` (in that order)."""
    t = np.asarray(psi, dtype=complex).reshape(dims)
    rest = [i for i in range(len(dims)) if i not in keep]
    M = np.transpose(t, list(keep) + rest).reshape(int(np.prod([dims[i] for i in keep])), -1)
    return M @ M.conj().T


def _cond_lower(psi, dims, r, xs, alpha, params):
    """Certified lower value of S̃_α(R|X) on a pure state."""
    dX = int(np.prod([dims[i] for i in xs]))
    if dX == 1:
        return renyi_entropy(_reduced(psi, dims, [r]), alpha)
    rho = _reduced(psi, dims, [r] + list(xs))
    return conditional_renyi(rho, (dims[r], dX), alpha, params).value


def _cond_upper(psi, dims, r, xs, alpha, params):
    """Certified upper value of S̃_α(R|X) via −S̃_β(R|X^c) on a pure state."""
    comp = [i for i in range(len(dims)) if i != r and i not in xs]
    return -_cond_lower(psi, dims, r, comp, hoelder_conjugate(alpha), params)


def _mi_lower(psi, dims, r, xs, alpha, params):
    dX = int(np.prod([dims[i] for i in xs]))
    if dX == 1:
        return 0.0
    rho = _reduced(psi, dims, [r] + list(xs))
    return max(renyi_mutual_info(rho, (dims[r], dX), alpha, params).bound, 0.0)


def _mi_upper(psi, dims, r, xs, alpha, params):
    dX = int(np.prod([dims[i] for i in xs]))
    if dX == 1:
        return 0.0
    rho = _reduced(psi, dims, [r] + list(xs))
    return renyi_mutual_info(rho, (dims[r], dX), alpha, params).value


def _as_abcr(psi, dims):
    dims = tuple(int(d) for d in dims)
    if len(dims) != 4:
        raise DimMismatch("state dims must be (A, B, C, R)")
    _check_dims(*dims)
    psi = np.asarray(psi, dtype=complex).ravel()
    if psi.size != int(np.prod(dims)):
        raise DimMismatch("state vector length does not match dims")
    nrm = float(np.linalg.norm(psi))
    if abs(nrm - 1.0) > 1e-9:
        raise PreconditionViolation("state vector must have unit norm")
    return psi, dims


def redistribution_brackets(psi, dims, q, e, alpha, params=None, q_fwd=None):
    """The three brackets of the redistribution bounds for ψ on (A, B, C, R).

    ``q`` is the cost paired with the entanglement cost in the first bracket
    and ``q_fwd`` (default ``q``) the forward cost doubled in the other two.
    """
    _check_alpha(alpha)
    psi, dims = _as_abcr(psi, dims)
    params = params or OptimizerParams()
    q_fwd = q if q_fwd is None else q_fwd
    beta = hoelder_conjugate(alpha)
    s_ab = renyi_entropy(_reduced(psi, dims, [A, B]), beta)
    s_b = renyi_entropy(_reduced(psi, dims, [B]), alpha)
    b1 = s_ab - s_b - (q + e)
    b2 = (_cond_lower(psi, dims, R, [B], beta, params)
          - _cond_upper(psi, dims, R, [A, B], alpha, params) - 2.0 * q_fwd)
    b3 = (_mi_lower(psi, dims, R, [A, B], alpha, params)
          - _mi_upper(psi, dims, R, [B], beta, params) - 2.0 * q_fwd)
    return b1, b2, b3


def redistribution_bounds(psi, dims, rates, n, alpha, params=None):
    """Fidelity bounds (three values) for redistribution without feedback."""
    ks = kappa(alpha)
    bs = redistribution_brackets(psi, dims, rates.q, rates.e, alpha, params)
    return tuple(_exp_bound(n, ks, b) for b in bs)


def feedback_bounds(psi, dims, rounds, n, alpha, T_A=1, T_A_out=1, params=None):
    """Bounds for redistribution with M rounds of two-way communication.

    ``rounds`` lists (|Q_i|, |Q_i′|) per round. The first bracket charges the
    total communication q↔ and the other two twice the forward part q→.
    """
    rates = RateBook.feedback(n, rounds, T_A, T_A_out)
    bs = redistribution_brackets(psi, dims, rates.q_both, rates.e, alpha, params, q_fwd=rates.q_fwd)
    ks = kappa(alpha)
    return tuple(_exp_bound(n, ks, b) for b in bs)


def source_coding_bound(spectrum_or_state, q, n, beta):
    """2^{−nι(β)[S_β(ρ) − q]} for β > 1; depends only on the spectrum of ρ."""
    if not beta > 1:
        raise DomainError("the source-coding bound needs beta > 1")
    x = np.asarray(spectrum_or_state, dtype=float if np.ndim(spectrum_or_state) == 1 else complex)
    rho = np.diag(x) if x.ndim == 1 else x
    bracket = renyi_entropy(rho, beta) - q
    return _exp_bound(n, iota(beta), bracket)


def _phi_purification(psi, dims, povm):
    """Pure state on (R, X, E, A, B) whose (R, X, B) marginal is (id ⊗ M_Λ)(ψ)."""
    dA, dB, _, dR = dims
    t = np.asarray(psi, dtype=complex).reshape(dA, dB, dR)
    nx = len(povm)
    out = np.zeros((dR, nx, nx, dA, dB), dtype=complex)
    for x, E in enumerate(povm):
        root = mc.mpow(mc.check_hermitian(E), 0.5)
        out[:, x, x, :, :] = np.einsum("ij,jbr->rib", root, t)
    return out.ravel(), (dR, nx, nx, dA, dB)


def ideal_measurement_state(psi, dims, povm):
    """φ_{RXX′B} = (id_{RB} ⊗ M_Λ)(ψ_{RAB}), ordered as (R, X, X′, B)."""
    psi, dims = _as_abcr(psi, dims)
    dA, dB, _, dR = dims
    t = psi.reshape(dA, dB, dR)
    nx = len(povm)
    rab = np.einsum("abr,csq->rbaqsc", t, t.conj())
    phi = np.zeros((dR, nx, nx, dB, dR, nx, nx, dB), dtype=complex)
    for x, E in enumerate(povm):
        # tr_A[(Λ_x ⊗ 1) ψ]: contract Λ_x between the ket and bra A indices
        blk = np.einsum("rbaqsc,ca->rbqs", rab, np.asarray(E, dtype=complex))
        phi[:, x, x, :, :, x, x, :] = blk
    D = dR * nx * nx * dB
    return phi.reshape(D, D)


def measurement_compression_bracket(psi, dims, povm, c, alpha, params=None):
    """S̃_β(R|B)_φ − S̃_α(R|XB)_φ − c with one-sided Rényi terms."""
    _check_alpha(alpha)
    psi, dims = _as_abcr(psi, dims)
    if dims[C] != 1:
        raise DimMismatch("measurement compression uses a state on (A, B, R) only")
    _check_povm(povm, dims[A])
    params = params or OptimizerParams()
    beta = hoelder_conjugate(alpha)
    first = _cond_lower(psi, dims, R, [B], beta, params)
    vec, pdims = _phi_purification(psi, dims, povm)
    # S̃_α(R|XB)_φ = −S̃_β(R|E A) on the purification (R, X, E, A, B)
    second = -_cond_lower(vec, pdims, 0, [2, 3], beta, params)
    return first - second - c


def _check_povm(povm, d):
    if not povm:
        raise BadParams("POVM needs at least one element")
    total = sum(np.asarray(E, dtype=complex) for E in povm)
    if total.shape != (d, d) or np.max(np.abs(total - np.eye(d))) > 1e-9:
        raise BadParams("POVM elements must sum to the identity on A")
    for E in povm:
        qu.check_psd(E)


def reduction_bounds(kind, state, rates, n, alpha_or_beta, dims=None, povm=None, params=None):
    """Bounds of the special cases of redistribution and of measurement compression.

    ``state`` is ρ_A (or its spectrum) for ``source_coding``, and a unit vector
    otherwise: ψ_ABR for ``coherent_merging``, ψ_ACR for ``state_splitting`` and
    ψ_ABR for ``measurement_compression`` (each with its ``dims`` triple).
    ``alpha_or_beta`` is β > 1 for source coding and α ∈ (1/2, 1) otherwise.
    Returns a tuple of bounds.
    """
    params = params or OptimizerParams()
    if kind == "source_coding":
        return (source_coding_bound(state, rates.q, n, alpha_or_beta),)
    alpha = alpha_or_beta
    _check_alpha(alpha)
    ks = kappa(alpha)
    beta = hoelder_conjugate(alpha)
    if dims is None or len(dims) != 3:
        raise DimMismatch(f"{kind} needs the dims of its three systems")
    psi = np.asarray(state, dtype=complex).ravel()
    if kind == "coherent_merging":
        # ψ on (A, B, R), gain e_csm = −e
        d3 = tuple(dims)
        s_ab = renyi_entropy(_reduced(psi, d3, [0, 1]), beta)
        s_b = renyi_entropy(_reduced(psi, d3, [1]), alpha)
        e_csm = -rates.e
        b1 = s_ab - s_b - rates.q + e_csm
        s_r = renyi_entropy(_reduced(psi, d3, [2]), beta)
        b2 = s_r - _cond_upper(psi, d3, 2, [0], alpha, params) - 2.0 * rates.q
        return _exp_bound(n, ks, b1), _exp_bound(n, ks, b2)
    if kind == "state_splitting":
        # ψ on (A, C, R), cost e_qss = e
        d3 = tuple(dims)
        b1 = renyi_entropy(_reduced(psi, d3, [0]), beta) - (rates.q + rates.e)
        s_r = renyi_entropy(_reduced(psi, d3, [2]), beta)
        b2 = s_r - _cond_upper(psi, d3, 2, [0], alpha, params) - 2.0 * rates.q
        b3 = _mi_lower(psi, d3, 2, [0], alpha, params) - 2.0 * rates.q
        return tuple(_exp_bound(n, ks, b) for b in (b1, b2, b3))
    if kind == "measurement_compression":
        dA, dB, dR = dims
        b = measurement_compression_bracket(psi, (dA, dB, 1, dR), povm, rates.c, alpha, params)
        return (_exp_bound(n, ks, b),)
    raise BadParams(f"unknown reduction kind {kind!r}")


def exponent_limit_bracket(psi, dims, rates):
    """S(A|B) − (q + e), the α → 1 limit of the first redistribution bracket."""
    psi, dims = _as_abcr(psi, dims)
    s_ab = renyi_entropy(_reduced(psi, dims, [A, B]), 1)
    s_b = renyi_entropy(_reduced(psi, dims, [B]), 1)
    return s_ab - s_b - (rates.q + rates.e)


def tightest_exponent(psi, dims, rates, alpha_grid, n=1, params=None):
    """Scan α for the smallest redistribution bound.

    Returns (α*, bound*, K) where K = κ(α*)·bracket is the per-copy exponent
    of the winning bound, so bound* = 2^{−nK}.
    """
    grid = list(alpha_grid)
    if not grid:
        raise BadParams("alpha grid must be nonempty")
    best = None
    for alpha in grid:
        bs = redistribution_brackets(psi, dims, rates.q, rates.e, alpha, params)
        K = kappa(alpha) * max(bs)
        if best is None or K > best[2]:
            best = (float(alpha), _exp_bound(n, 1.0, K), float(K))
    return best


# ---------------------------------------------------------------- protocols

@dataclass
class ProtocolDescriptor:
    """A protocol instance: input state, register sizes, blocklength and maps.

    ``psi`` is a unit vector on (A, B, C, R) with sizes ``dims``; reductions
    keep the systems they do not use at dimension 1. ``T_A``/``T_A_out`` are
    the entanglement registers k and m, ``Q`` the message size. Feedback
    protocols list (|Q_i|, |Q_i′|) in ``rounds`` and the memory sizes kept
    between rounds in ``memory`` as (Alice, Bob) pairs. Measurement
    compression uses ``povm``, ``L`` and ``M_A``.

    Channel conventions (system order of the Kraus operators' input and output):
      encoder  A^n C^n T_A → C′^n T_A′ Q        decoder  Q B^n T_B → T_B′ A′^n B′^n
      feedback round i: encoder (Q_{i−1}′ M^A_{i−1}) → Q_i M^A_i, decoder
      (Q_i M^B_{i−1}) → Q_i′ M^B_i, with the first encoder reading A^n C^n T_A,
      the first decoder reading B^n T_B, the last encoder writing C′^n T_A′ Q_M
      and the last decoder writing T_B′ A′^n B′^n.
      measurement compression: encoder A^n M_A → X̄^n L, decoder L B^n M_B → X̂^n B′^n.
    """
    kind: str
    psi: np.ndarray
    dims: tuple
    n: int = 1
    Q: int = 1
    T_A: int = 1
    T_A_out: int = 1
    rounds: list = field(default_factory=list)
    memory: list = field(default_factory=list)
    povm: list = None
    L: int = 1
    M_A: int = 1
    encoder: object = None
    decoder: object = None
    rho: np.ndarray = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise BadParams(f"unknown protocol kind {self.kind!r}")
        self.psi, self.dims = _as_abcr(self.psi, self.dims)
        _check_dims(n=self.n, Q=self.Q, T_A=self.T_A, T_A_out=self.T_A_out, L=self.L, M_A=self.M_A)
        named = dict(zip(SYSTEMS, self.dims), T_A=self.T_A, T_A_out=self.T_A_out)
        for name in _TRIVIAL.get(self.kind, ()):
            if named[name] != 1:
                raise DimMismatch(f"{self.kind} requires system {name} to be trivial")
        if self.rho is not None:
            red = _reduced(self.psi, self.dims, [A, B, C])
            if np.max(np.abs(red - np.asarray(self.rho))) > PURIFICATION_TOL:
                raise PreconditionViolation("tr_R ψ does not reproduce ρ")
        if self.kind == "redistribution_feedback":
            RateBook.feedback(self.n, self.rounds, self.T_A, self.T_A_out)
            if len(self.memory) != len(self.rounds) - 1:
                raise BadParams("memory needs one (Alice, Bob) pair between consecutive rounds")
        if self.kind == "measurement_compression":
            _check_povm(self.povm, self.dims[A])

    @classmethod
    def from_mixed(cls, kind, rho_abc, dims_abc, **kw):
        """Purify ρ_ABC canonically, with R the size of its support."""
        vec = qu.purify(rho_abc)
        r = vec.size // int(np.prod(dims_abc))
        return cls(kind, vec, tuple(dims_abc) + (r,), rho=np.asarray(rho_abc), **kw)

    @property
    def rates(self):
        if self.kind == "redistribution_feedback":
            return RateBook.feedback(self.n, self.rounds, self.T_A, self.T_A_out)
        if self.kind == "measurement_compression":
            return RateBook.measurement(self.n, self.L, self.M_A)
        return RateBook.from_dims(self.n, self.Q, self.T_A, self.T_A_out)


def applicable_bounds(desc, alpha, params=None):
    """All bounds that apply to ``desc`` at α ∈ (1/2, 1), keyed by name."""
    rates = desc.rates
    out = {}
    if desc.kind == "measurement_compression":
        b = measurement_compression_bracket(desc.psi, desc.dims, desc.povm, rates.c, alpha, params)
        out["measurement"] = _exp_bound(desc.n, kappa(alpha), b)
        return out
    if desc.kind == "redistribution_feedback":
        bs = feedback_bounds(desc.psi, desc.dims, desc.rounds, desc.n, alpha, desc.T_A, desc.T_A_out, params)
    else:
        bs = redistribution_bounds(desc.psi, desc.dims, rates, desc.n, alpha, params)
    out.update({"first": bs[0], "second": bs[1], "third": bs[2]})
    if desc.kind == "source_coding":
        out["source"] = source_coding_bound(_reduced(desc.psi, desc.dims, [A]), rates.q, desc.n,
                                            hoelder_conjugate(alpha))
    elif desc.kind == "coherent_merging":
        dA, dB, _, dR = desc.dims
        bm = reduction_bounds("coherent_merging", desc.psi, rates, desc.n, alpha, (dA, dB, dR), params=params)
        out["merging_first"], out["merging_second"] = bm
    elif desc.kind == "state_splitting":
        dA, _, dC, dR = desc.dims
        bs3 = reduction_bounds("state_splitting", desc.psi, rates, desc.n, alpha, (dA, dC, dR), params=params)
        out["splitting_first"], out["splitting_second"], out["splitting_third"] = bs3
    return out


class _Branches:
    """Global state as incoherent unnormalized pure branches over named systems."""

    def __init__(self, names, dims, vectors, budget=SIM_DIM_BUDGET):
        self.names = list(names)
        self.dims = [int(d) for d in dims]
        self.budget = budget
        self._check()
        self.branches = [np.asarray(v, dtype=complex).reshape(self.dims) for v in vectors]

    def _check(self):
        if len(set(self.names)) != len(self.names):
            raise BadParams("duplicate system names")
        total = int(np.prod(self.dims)) if self.dims else 1
        if total > self.budget:
            raise Intractable(f"global dimension {total} exceeds the simulation budget {self.budget}")

    def apply(self, channel, inputs, outputs):
        """Apply ``channel`` to ``inputs`` (in order), producing ``outputs`` [(name, dim)]."""
        idx = [self.names.index(s) for s in inputs]
        din = int(np.prod([self.dims[i] for i in idx]))
        out_names = [o[0] for o in outputs]
        out_dims = [int(o[1]) for o in outputs]
        dout = int(np.prod(out_dims))
        if channel.in_dim != din or channel.out_dim != dout:
            raise DimMismatch(f"channel is {channel.in_dim}->{channel.out_dim}, systems need {din}->{dout}")
        rest = [i for i in range(len(self.names)) if i not in idx]
        rest_names = [self.names[i] for i in rest]
        rest_dims = [self.dims[i] for i in rest]
        self.names = out_names + rest_names
        self.dims = out_dims + rest_dims
        self._check()
        new = []
        for b in self.branches:
            x = np.transpose(b, idx + rest).reshape(din, -1)
            for K in channel.kraus:
                y = K @ x
                if np.vdot(y, y).real > 1e-30:
                    new.append(y.reshape(self.dims))
        self.branches = new

    def _matrix(self, b, targets):
        idx = [self.names.index(s) for s in targets]
        rest = [i for i in range(len(self.names)) if i not in idx]
        dt = int(np.prod([self.dims[i] for i in idx]))
        return np.transpose(b, idx + rest).reshape(dt, -1)

    def overlap(self, target, targets):
        """⟨t|σ_targets|t⟩ for a pure target vector on ``targets``."""
        t = np.asarray(target, dtype=complex).ravel()
        total = 0.0
        for b in self.branches:
            v = t.conj() @ self._matrix(b, targets)
            total += float(np.vdot(v, v).real)
        return total

    def reduced(self, targets):
        M = [self._matrix(b, targets) for b in self.branches]
        return sum(m @ m.conj().T for m in M)


def _copies(prefix, n):
    return [f"{prefix}{i}" for i in range(1, n + 1)]


def _iid_vector(psi, dims, n, labels):
    """ψ^{⊗n} with systems named label+copy, grouped by label."""
    names, dd, v = [], [], np.array([1.0 + 0j])
    for i in range(1, n + 1):
        v = np.kron(v, psi)
        names += [f"{lab}{i}" for lab in labels]
        dd += list(dims)
    order = [names.index(f"{lab}{i}") for lab in labels for i in range(1, n + 1)]
    t = np.transpose(v.reshape(dd), order)
    return [names[j] for j in order], [dd[j] for j in order], t.ravel()


def _mes(k):
    return qu.max_entangled(k)


def _initial_branches(desc):
    n = desc.n
    names, dims, vec = _iid_vector(desc.psi, desc.dims, n, SYSTEMS)
    names += ["TA", "TB"]
    dims += [desc.T_A, desc.T_A]
    vec = np.kron(vec, _mes(desc.T_A))
    return _Branches(names, dims, [vec])


def _redistribution_target(desc):
    names, dims, vec = _iid_vector(desc.psi, desc.dims, desc.n, ("A'", "B'", "C'", "R"))
    return names + ["TA'", "TB'"], np.kron(vec, _mes(desc.T_A_out))


def _block(label, n, d):
    return [(f"{label}{i}", d) for i in range(1, n + 1)]


def simulate_protocol(desc):
    """Exact root fidelity between the protocol's final state and its target."""
    if desc.kind == "measurement_compression":
        return _simulate_measurement(desc)
    n = desc.n
    dA, dB, dC, _ = desc.dims
    st = _initial_branches(desc)
    A_in, B_in, C_in = _copies("A", n), _copies("B", n), _copies("C", n)
    final_dec = [("TB'", desc.T_A_out)] + _block("A'", n, dA) + _block("B'", n, dB)
    if desc.kind == "redistribution_feedback":
        encs, decs = list(desc.encoder), list(desc.decoder)
        M = len(desc.rounds)
        if len(encs) != M or len(decs) != M:
            raise BadParams("feedback protocols need one encoder and one decoder per round")
        a_prev, b_prev = A_in + C_in + ["TA"], B_in + ["TB"]
        for i, ((dq, dqb), E, D) in enumerate(zip(desc.rounds, encs, decs), start=1):
            last = i == M
            if last:
                e_out = _block("C'", n, dC) + [("TA'", desc.T_A_out), (f"Q{i}", dq)]
            else:
                e_out = [(f"Q{i}", dq), (f"MA{i}", desc.memory[i - 1][0])]
            st.apply(E, a_prev, e_out)
            if last:
                d_out = final_dec
            else:
                d_out = [(f"Qb{i}", dqb), (f"MB{i}", desc.memory[i - 1][1])]
            st.apply(D, [f"Q{i}"] + b_prev, d_out)
            a_prev, b_prev = [f"Qb{i}", f"MA{i}"], [f"MB{i}"]
    else:
        st.apply(desc.encoder, A_in + C_in + ["TA"], _block("C'", n, dC) + [("TA'", desc.T_A_out), ("Q", desc.Q)])
        st.apply(desc.decoder, ["Q"] + B_in + ["TB"], final_dec)
    targets, tvec = _redistribution_target(desc)
    return float(np.sqrt(min(max(st.overlap(tvec, targets), 0.0), 1.0)))


def _dephasing(d):
    return qu.QuantumChannel([np.outer(np.eye(d)[i], np.eye(d)[i]) for i in range(d)], check=False)


def _simulate_measurement(desc):
    """Measurement compression with χ modeled as a maximally correlated classical state."""
    n = desc.n
    dA, dB, _, dR = desc.dims
    nx = len(desc.povm)
    phi = ideal_measurement_state(desc.psi, desc.dims, desc.povm)
    per = dR * nx * nx * dB
    if per ** n > MIXED_TARGET_BUDGET:
        raise Intractable("the mixed target state exceeds the simulation budget")
    names, dims, vec = _iid_vector(desc.psi, desc.dims, n, SYSTEMS)
    M = desc.M_A
    vecs = []
    for m in range(M):
        e = np.zeros(M * M, dtype=complex)
        e[m * M + m] = 1.0 / np.sqrt(M)
        vecs.append(np.kron(vec, e))
    st = _Branches(names + ["MA", "MB"], dims + [M, M], vecs)
    xbar, xhat = _block("X", n, nx), _block("Xp", n, nx)
    st.apply(desc.encoder, _copies("A", n) + ["MA"], xbar + [("L", desc.L)])
    st.apply(_dephasing(desc.L), ["L"], [("L", desc.L)])
    for name, d in xbar:
        st.apply(_dephasing(d), [name], [(name, d)])
    st.apply(desc.decoder, ["L"] + _copies("B", n) + ["MB"], xhat + _block("B'", n, dB))
    for name, d in xhat:
        st.apply(_dephasing(d), [name], [(name, d)])
    # target φ^{⊗n} on copies (R_i, X_i, X'_i, B_i), reordered to grouped labels
    copy_names, copy_dims = [], []
    for i in range(1, n + 1):
        copy_names += [f"R{i}", f"X{i}", f"Xp{i}", f"B'{i}"]
        copy_dims += [dR, nx, nx, dB]
    target = phi
    for _ in range(n - 1):
        target = np.kron(target, phi)
    sigma = st.reduced(copy_names)
    return float(min(fidelity(target, sigma), 1.0))


def certify(desc, alpha_grid, params=None):
    """Achieved fidelity, smallest applicable bound over the grid, and their margin."""
    F = simulate_protocol(desc)
    best = np.inf
    for alpha in alpha_grid:
        best = min(best, min(applicable_bounds(desc, alpha, params).values()))
    return F, best, best - F


def report_rows(desc, alpha_grid, params=None):
    """Rows (α, three redistribution bounds, achieved F) for a descriptor.

    Measurement compression has a single bound, written in the middle column
    with the other two left as nan.
    """
    F = simulate_protocol(desc) if desc.encoder is not None else np.nan
    rows = []
    for alpha in alpha_grid:
        b = applicable_bounds(desc, alpha, params)
        if desc.kind == "measurement_compression":
            rows.append((alpha, np.nan, b["measurement"], np.nan, F))
        else:
            rows.append((alpha, b["first"], b["second"], b["third"], F))
    return rows


REPORT_HEADER = "alpha,bound_eq619,bound_eq620,bound_eq621,achieved_F"


# ---------------------------------------------------------------- saturation and dichotomy

@dataclass
class BipartiteState:
    rho: np.ndarray
    dims: tuple
    weights: np.ndarray
    vectors: list


def araki_lieb_saturating_state(lambda0, nu0):
    """ρ_AB = ν₀|η₀⟩⟨η₀| + ν₁|η₁⟩⟨η₁| on 2 ⊗ 4 from two orthogonal purifications of ρ_A.

    η₀ uses B-levels {0, 1} and η₁ levels {2, 3}, so tr_B|η₀⟩⟨η₁| = 0 exactly.
    """
    for name, x in (("lambda0", lambda0), ("nu0", nu0)):
        if not 0.0 < x < 1.0:
            raise BadParams(f"{name} must lie in (0, 1)")
    lam = np.array([lambda0, 1.0 - lambda0])
    eta0 = np.zeros((2, 4), dtype=complex)
    eta1 = np.zeros((2, 4), dtype=complex)
    for i in range(2):
        eta0[i, i] = np.sqrt(lam[i])
        eta1[i, i + 2] = np.sqrt(lam[i])
    vecs = [eta0.ravel(), eta1.ravel()]
    w = np.array([nu0, 1.0 - nu0])
    rho = w[0] * qu.proj(vecs[0]) + w[1] * qu.proj(vecs[1])
    return BipartiteState(rho, (2, 4), w, vecs)


def fidelity_dichotomy(rho, channel):
    """(|F_e(ρ, N) − F(ρ, N(ρ))|, λ₂(ρ)) for the equality test F_e = F."""
    rho = qu.check_density(rho)
    fe = qu.entanglement_fidelity(rho, channel)
    f = fidelity(rho, channel.apply(rho))
    w = np.sort(np.linalg.eigvalsh(rho))[::-1]
    lam2 = float(w[1]) if w.size > 1 else 0.0
    return abs(fe - f), max(lam2, 0.0)
