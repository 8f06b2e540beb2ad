"""Quantum states and channels: validation, sampling, purification, recovery."""
import numpy as np

from . import matcore as mc
from .errors import BadParams, DimMismatch, NotNormalized, NotPositive, NotTracePreserving, SingularSigma

PSD_TOL = 1e-10
TRACE_TOL = 1e-10
PURE_TOL = 1e-9


def check_psd(A, tol=PSD_TOL):
    """Validate a positive semidefinite operator and return its Hermitian part."""
    A = mc.check_hermitian(A)
    w = np.linalg.eigvalsh(A)
    top = float(np.max(w, initial=0.0))
    if w.size and w[0] < -tol * max(1.0, top):
        raise NotPositive(f"minimum eigenvalue {w[0]:.3e} is negative")
    return A


def check_density(rho, tol=TRACE_TOL):
    rho = check_psd(rho)
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > tol:
        raise NotNormalized(f"trace {tr!r} differs from 1")
    return rho


def is_pure(rho, tol=PURE_TOL):
    """Purity test: the second largest eigenvalue is numerically zero."""
    w = np.sort(np.linalg.eigvalsh(np.asarray(rho, dtype=complex)))[::-1]
    return w.size < 2 or w[1] <= tol


def ket(amplitudes):
    v = np.asarray(amplitudes, dtype=complex).ravel()
    return v / np.linalg.norm(v)


def proj(v):
    v = np.asarray(v, dtype=complex).ravel()
    return np.outer(v, v.conj())


def maximally_mixed(d):
    return np.eye(d, dtype=complex) / d


def max_entangled(k):
    """Vector of the maximally entangled state Φ^k on k × k."""
    return np.eye(k, dtype=complex).ravel() / np.sqrt(k)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def ginibre(rows, cols, seed=None):
    rng = _rng(seed)
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_unitary(d, seed=None):
    """Haar-random unitary via QR of a Ginibre matrix with phase correction."""
    Z = ginibre(d, d, seed)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def random_isometry(rows, cols, seed=None):
    if cols > rows:
        raise BadParams("isometry needs rows >= cols")
    Z = ginibre(rows, cols, seed)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def random_density(dim, rank=None, seed=None):
    """Random state ρ ∝ GG† with a dim × rank Ginibre matrix G."""
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise BadParams(f"rank {rank} outside 1..{dim}")
    G = ginibre(dim, rank, seed)
    rho = G @ G.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.real(np.trace(rho))


def random_pure(dim, seed=None):
    return ket(ginibre(dim, 1, seed)[:, 0])


class QuantumChannel:
    """CPTP map in Kraus form; each Kraus operator has shape (out_dim, in_dim)."""

    def __init__(self, kraus, check=True, tol=1e-10):
        ops = [np.asarray(K, dtype=complex) for K in kraus]
        if not ops:
            raise BadParams("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(K.shape != shape or K.ndim != 2 for K in ops):
            raise DimMismatch("Kraus operators must share one 2-D shape")
        self.kraus = ops
        self.out_dim, self.in_dim = shape
        if check:
            defect = np.max(np.abs(self.choi_trace() - np.eye(self.in_dim)))
            if defect > tol:
                raise NotTracePreserving(f"sum K†K deviates from identity by {defect:.3e}")

    def choi_trace(self):
        return sum(K.conj().T @ K for K in self.kraus)

    def __repr__(self):
        return f"QuantumChannel(in={self.in_dim}, out={self.out_dim}, kraus={len(self.kraus)})"

    def apply(self, X):
        X = np.asarray(X, dtype=complex)
        if X.shape != (self.in_dim, self.in_dim):
            raise DimMismatch(f"input {X.shape} does not match in_dim {self.in_dim}")
        return sum(K @ X @ K.conj().T for K in self.kraus)

    __call__ = apply

    def adjoint_apply(self, Y):
        Y = np.asarray(Y, dtype=complex)
        if Y.shape != (self.out_dim, self.out_dim):
            raise DimMismatch(f"input {Y.shape} does not match out_dim {self.out_dim}")
        return sum(K.conj().T @ Y @ K for K in self.kraus)

    def stinespring(self):
        """Isometry V: in -> out ⊗ env with V = Σ_i K_i ⊗ |i⟩."""
        r = len(self.kraus)
        V = np.zeros((self.out_dim * r, self.in_dim), dtype=complex)
        for i, K in enumerate(self.kraus):
            V[i::r, :] = K
        return V

    @property
    def env_dim(self):
        return len(self.kraus)

    def compose(self, first):
        """The channel ``self ∘ first``."""
        if first.out_dim != self.in_dim:
            raise DimMismatch("cannot compose channels with mismatched dimensions")
        return QuantumChannel([A @ B for A in self.kraus for B in first.kraus], check=False)

    def tensor(self, other):
        return QuantumChannel([np.kron(A, B) for A in self.kraus for B in other.kraus], check=False)

    def apply_on(self, X, dims, system):
        """Apply the channel to factor ``system`` of an operator on ``dims``."""
        dims = list(dims)
        if dims[system] != self.in_dim:
            raise DimMismatch("subsystem dimension does not match the channel input")
        left = int(np.prod(dims[:system]))
        right = int(np.prod(dims[system + 1:]))
        out = 0
        for K in self.kraus:
            Kb = np.kron(np.kron(np.eye(left), K), np.eye(right))
            out = out + Kb @ X @ Kb.conj().T
        return out

    def complementary(self):
        """Complementary channel in -> env obtained from the Stinespring isometry."""
        r = len(self.kraus)
        ops = []
        for j in range(self.out_dim):
            ops.append(np.array([K[j, :] for K in self.kraus]).reshape(r, self.in_dim))
        return QuantumChannel(ops, check=False)


def identity_channel(d):
    return QuantumChannel([np.eye(d)])


def unitary_channel(U):
    return QuantumChannel([U])


def depolarizing_channel(d, p):
    """ρ ↦ (1 − p)ρ + p·tr(ρ)·1/d, via the generalized Pauli Kraus set."""
    if not 0 <= p <= 1 + 1e-12:
        raise BadParams("depolarizing parameter must lie in [0, 1]")
    X = np.roll(np.eye(d), 1, axis=0)
    Z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    ops = []
    for a in range(d):
        for b in range(d):
            W = np.linalg.matrix_power(X, a) @ np.linalg.matrix_power(Z, b)
            w = 1 - p + p / d**2 if a == b == 0 else p / d**2
            ops.append(np.sqrt(w) * W)
    return QuantumChannel(ops)


def dephasing_channel(d, p):
    """Mixes the identity with full dephasing in the computational basis."""
    ops = [np.sqrt(1 - p) * np.eye(d)]
    for k in range(d):
        E = np.zeros((d, d))
        E[k, k] = np.sqrt(p)
        ops.append(E)
    return QuantumChannel(ops)


def partial_trace_channel(dims, keep):
    """Partial trace written as a channel (keeps the listed systems in order)."""
    dims = list(dims)
    keep = sorted(keep)
    traced = [i for i in range(len(dims)) if i not in keep]
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    dt = int(np.prod([dims[i] for i in traced])) if traced else 1
    D = int(np.prod(dims))
    ops = []
    for t in range(dt):
        tidx = np.unravel_index(t, [dims[i] for i in traced]) if traced else ()
        K = np.zeros((dk, D), dtype=complex)
        for k in range(dk):
            kidx = np.unravel_index(k, [dims[i] for i in keep]) if keep else ()
            full = [0] * len(dims)
            for pos, i in enumerate(keep):
                full[i] = kidx[pos]
            for pos, i in enumerate(traced):
                full[i] = tidx[pos]
            K[k, np.ravel_multi_index(full, dims)] = 1.0
        ops.append(K)
    return QuantumChannel(ops)


def append_state_channel(d, tau):
    """Channel X ↦ X ⊗ τ for a fixed state τ."""
    w, U = np.linalg.eigh(np.asarray(tau, dtype=complex))
    ops = [np.kron(np.eye(d), np.sqrt(lam) * u.reshape(-1, 1)) for lam, u in zip(w, U.T) if lam > 1e-15]
    return QuantumChannel(ops)


def random_channel(in_dim, out_dim, env_dim, seed=None):
    """Random channel from a Haar-random isometry in -> out ⊗ env."""
    if env_dim < 1 or in_dim < 1 or out_dim < 1:
        raise BadParams("dimensions must be positive")
    if out_dim * env_dim < in_dim:
        raise BadParams("out_dim * env_dim must be at least in_dim")
    V = random_isometry(out_dim * env_dim, in_dim, seed)
    ops = [V[i::env_dim, :] for i in range(env_dim)]
    return QuantumChannel(ops)


def channel_from_isometry(V, out_dim):
    """Channel tr_env(V·V†) for an isometry V: in -> out ⊗ env."""
    env = V.shape[0] // out_dim
    return QuantumChannel([V[i::env, :] for i in range(env)])


def measurement_channel(povm):
    """Quantum-to-classical channel ρ ↦ Σ_i tr(E_i ρ)|i⟩⟨i|."""
    povm = [check_psd(E) for E in povm]
    d = povm[0].shape[0]
    if np.max(np.abs(sum(povm) - np.eye(d))) > 1e-10:
        raise BadParams("POVM elements do not sum to the identity")
    n = len(povm)
    ops = []
    for i, E in enumerate(povm):
        w, U = np.linalg.eigh(E)
        for lam, u in zip(w, U.T):
            if lam > 1e-15:
                K = np.zeros((n, d), dtype=complex)
                K[i, :] = np.sqrt(lam) * u.conj()
                ops.append(K)
    return QuantumChannel(ops)


def pinching_channel(sigma, tau_cluster=None):
    dec = mc.eig_hermitian(sigma, tau_cluster)
    return QuantumChannel(dec.cluster_projectors())


def purify(rho):
    """Canonical purification Σ_i √λ_i |i⟩ ⊗ |i⟩ on dim ⊗ rank."""
    rho = check_psd(rho)
    w, U = mc.eigh_desc(rho)
    mask = mc.support_mask(w)
    r = int(np.sum(mask))
    psi = np.zeros((rho.shape[0], r), dtype=complex)
    for j, (lam, u) in enumerate(zip(w[mask], U[:, mask].T)):
        psi[:, j] = np.sqrt(lam) * u
    return psi.ravel()


def schmidt(psi, dim_a, dim_b):
    """Schmidt coefficients (decreasing) with local bases as columns."""
    psi = np.asarray(psi, dtype=complex).ravel()
    if psi.size != dim_a * dim_b:
        raise DimMismatch("vector length does not equal dim_a * dim_b")
    U, s, Vh = np.linalg.svd(psi.reshape(dim_a, dim_b), full_matrices=False)
    mask = s > 1e-14 * max(s[0], 1e-300)
    return s[mask], U[:, mask], Vh[mask, :].T


def reduced_state(psi, dims, keep):
    return mc.partial_trace(proj(psi), dims, keep)


def petz_recovery(sigma, channel):
    """Petz recovery map R(X) = σ^{1/2} Λ†(Λ(σ)^{-1/2} X Λ(σ)^{-1/2}) σ^{1/2}.

    Outside supp Λ(σ) the input is discarded and replaced by σ/tr σ, which makes
    the returned map trace preserving on the whole output space of Λ.
    """
    sigma = check_psd(sigma)
    ls = channel.apply(sigma)
    w, U = mc.eigh_desc(0.5 * (ls + ls.conj().T))
    mask = mc.support_mask(w)
    if not np.any(mask) or float(np.max(w)) <= 1e-14:
        raise SingularSigma("Λ(σ) has trivial support")
    inv_half = (U[:, mask] / np.sqrt(w[mask])) @ U[:, mask].conj().T
    s_half = mc.mpow(sigma, 0.5)
    ops = [s_half @ K.conj().T @ inv_half for K in channel.kraus]
    comp = U[:, ~mask]
    if comp.shape[1]:
        ws, Us = mc.support_basis(sigma)
        ws = ws / np.sum(ws)
        for lam, f in zip(ws, Us.T):
            for e in comp.T:
                ops.append(np.sqrt(lam) * np.outer(f, e.conj()))
    return QuantumChannel(ops, check=True, tol=1e-8)


def fidelity_pure_overlap(psi, rho):
    """Root fidelity between a pure vector and a state: sqrt(⟨ψ|ρ|ψ⟩)."""
    psi = np.asarray(psi, dtype=complex).ravel()
    return float(np.sqrt(max(np.real(psi.conj() @ rho @ psi), 0.0)))


def entanglement_fidelity(rho, channel):
    """F_e(ρ, N) = sqrt(⟨ψ^ρ|(N ⊗ id)(ψ^ρ)|ψ^ρ⟩) = sqrt(Σ_i |tr(ρ K_i)|²)."""
    rho = check_density(rho)
    if channel.in_dim != rho.shape[0] or channel.out_dim != rho.shape[0]:
        raise DimMismatch("channel must act on the state's space")
    val = sum(abs(np.trace(rho @ K)) ** 2 for K in channel.kraus)
    return float(np.sqrt(min(max(val, 0.0), 1.0)))
