"""Dense complex matrix calculus for small quantum-information computations.

Matrices are plain numpy arrays. Functions that need Hermitian input check it
with the tolerance ``TAU_HERM`` and raise :class:`NonHermitian` otherwise.
"""
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import BadRank, DimMismatch, DomainError, MalformedInput, NoConvergence, NonHermitian

TAU_HERM = 1e-12
TAU_SUPP = 1e-12
TAU_ZERO = 1e-12
CLUSTER_REL = 1e-9


def as_matrix(X):
    """Return ``X`` as a finite 2-D complex array."""
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2:
        raise MalformedInput(f"expected a matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise MalformedInput("matrix has non-finite entries")
    return X


def is_hermitian(H, tol=TAU_HERM):
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(H), initial=0.0)))
    return float(np.max(np.abs(H - H.conj().T), initial=0.0)) <= tol * scale


def check_hermitian(H, tol=TAU_HERM):
    """Validate ``H`` and return its exactly Hermitian part."""
    H = as_matrix(H)
    if not is_hermitian(H, tol):
        raise NonHermitian("operator is not Hermitian within tolerance")
    return 0.5 * (H + H.conj().T)


def opnorm(H):
    """Operator norm of a Hermitian matrix (largest absolute eigenvalue)."""
    w = np.linalg.eigvalsh(H)
    return float(np.max(np.abs(w), initial=0.0))


def default_tau_cluster(H):
    return CLUSTER_REL * max(1.0, opnorm(H))


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    clusters: tuple

    @property
    def distinct_count(self):
        return len(self.clusters)

    def reconstruct(self):
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.conj().T

    def cluster_projectors(self):
        U = self.eigenvectors
        return [U[:, idx] @ U[:, idx].conj().T for idx in self.clusters]


def _eigh(H):
    try:
        w, U = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return w, U


def eig_hermitian(H, tau_cluster=None):
    """Eigendecomposition with eigenvalues in decreasing order and clusters.

    Consecutive eigenvalues closer than ``tau_cluster`` are grouped together.
    """
    H = check_hermitian(H)
    w, U = _eigh(H)
    w, U = w[::-1].copy(), U[:, ::-1].copy()
    tau = default_tau_cluster(H) if tau_cluster is None else tau_cluster
    clusters, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i - 1] - w[i] > tau:
            clusters.append(np.arange(start, i))
            start = i
    return SpectralDecomposition(w, U, tuple(clusters))


def eigh_desc(H):
    """Eigenvalues (decreasing) and eigenvectors without validation."""
    w, U = _eigh(H)
    return w[::-1], U[:, ::-1]


def support_mask(w):
    """Boolean mask of eigenvalues that count as nonzero for a PSD spectrum."""
    w = np.asarray(w, dtype=float)
    top = float(np.max(w, initial=0.0))
    if top <= 0:
        return np.zeros(w.shape, dtype=bool)
    return w > TAU_SUPP * top


def matrix_function(H, f, support_only=False):
    """Apply ``f`` to the spectrum of ``H``.

    With ``support_only`` the function is applied only to eigenvalues in the
    support and the rest are mapped to zero, which gives pseudo-inverse powers.
    """
    H = check_hermitian(H)
    w, U = _eigh(H)
    if support_only:
        mask = support_mask(w)
        fw = np.zeros_like(w)
        with np.errstate(all="ignore"):
            vals = np.asarray(f(w[mask]), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise DomainError("function undefined at an in-support eigenvalue")
        fw[mask] = vals
    else:
        with np.errstate(all="ignore"):
            fw = np.asarray(f(w), dtype=float)
        if not np.all(np.isfinite(fw)):
            raise DomainError("function undefined at an eigenvalue")
    out = (U * fw) @ U.conj().T
    return 0.5 * (out + out.conj().T)


def mpow(A, p):
    """Support-restricted power of a PSD matrix; negative eigenvalues clip to 0."""
    A = np.asarray(A, dtype=complex)
    w, U = _eigh(0.5 * (A + A.conj().T))
    mask = support_mask(w)
    fw = np.zeros_like(w)
    fw[mask] = w[mask] ** p
    out = (U * fw) @ U.conj().T
    return 0.5 * (out + out.conj().T)


def mlog2(A):
    """Base-2 logarithm of a PSD matrix restricted to its support."""
    A = np.asarray(A, dtype=complex)
    w, U = _eigh(0.5 * (A + A.conj().T))
    mask = support_mask(w)
    fw = np.zeros_like(w)
    fw[mask] = np.log2(w[mask])
    out = (U * fw) @ U.conj().T
    return 0.5 * (out + out.conj().T)


def support_projector(A):
    A = np.asarray(A, dtype=complex)
    w, U = _eigh(0.5 * (A + A.conj().T))
    V = U[:, support_mask(w)]
    return V @ V.conj().T


def support_basis(A):
    """Orthonormal basis of supp A and the corresponding eigenvalues."""
    A = np.asarray(A, dtype=complex)
    w, U = _eigh(0.5 * (A + A.conj().T))
    mask = support_mask(w)
    return w[mask], U[:, mask]


def support_contained(rho, sigma, tol=1e-9):
    """True when supp rho is contained in supp sigma (numerically)."""
    P = support_projector(sigma)
    rho = np.asarray(rho, dtype=complex)
    leak = np.trace(rho) - np.trace(P @ rho @ P)
    scale = max(abs(np.trace(rho)), 1e-300)
    return abs(leak) <= tol * scale


def tensor(*ops):
    """Kronecker product of any number of matrices (or vectors)."""
    return reduce(np.kron, [np.asarray(op, dtype=complex) for op in ops])


def partial_trace(X, dims, keep):
    """Trace out every subsystem whose index is not in ``keep``.

    ``dims`` lists the subsystem dimensions; the kept systems stay in their
    original order.
    """
    X = np.asarray(X, dtype=complex)
    dims = [int(d) for d in dims]
    n = len(dims)
    D = int(np.prod(dims))
    if X.shape != (D, D):
        raise DimMismatch(f"matrix of shape {X.shape} does not match dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise DimMismatch("keep index out of range")
    T = X.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in traced:
        col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    res = np.einsum("".join(row) + "".join(col) + "->" + out, T)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return res.reshape(dk, dk)


def permute_systems(X, dims, perm):
    """Reorder the tensor factors of a square operator: new order is ``perm``."""
    X = np.asarray(X, dtype=complex)
    n = len(dims)
    T = X.reshape(list(dims) + list(dims))
    T = T.transpose(list(perm) + [n + p for p in perm])
    D = int(np.prod(dims))
    return T.reshape(D, D)


def embed(op, dims, systems):
    """Tensor ``op`` (acting on ``systems`` in order) with identities elsewhere."""
    systems = list(systems)
    rest = [i for i in range(len(dims)) if i not in systems]
    dr = int(np.prod([dims[i] for i in rest])) if rest else 1
    big = np.kron(np.asarray(op, dtype=complex), np.eye(dr))
    order = systems + rest
    cur_dims = [dims[i] for i in order]
    inv = np.argsort(order)
    return permute_systems(big, cur_dims, list(inv))


def spectral_projector(H, relation=">="):
    """Projector {H rel 0} with near-zero eigenvalues in the closed versions."""
    H = check_hermitian(H)
    w, U = _eigh(H)
    tz = TAU_ZERO * float(np.max(np.abs(w), initial=0.0))
    if relation == ">=":
        mask = w > -tz if tz > 0 else w >= 0
    elif relation == ">":
        mask = w >= tz if tz > 0 else w > 0
    elif relation == "<=":
        mask = w < tz if tz > 0 else w <= 0
    elif relation == "<":
        mask = w <= -tz if tz > 0 else w < 0
    else:
        raise ValueError(f"unknown relation {relation!r}")
    V = U[:, mask]
    return V @ V.conj().T


def positive_part_trace(A, B):
    """tr(A - B)_+, the sum of the positive eigenvalues of A - B."""
    A = as_matrix(A)
    B = as_matrix(B)
    if A.shape != B.shape:
        raise DimMismatch("operands have different shapes")
    D = A - B
    w = np.linalg.eigvalsh(0.5 * (D + D.conj().T))
    return float(np.sum(np.clip(w, 0.0, None)))


def pinch(sigma, rho, tau_cluster=None):
    """Pinching of ``rho`` by the eigenvalue clusters of ``sigma``."""
    sigma = as_matrix(sigma)
    rho = as_matrix(rho)
    if sigma.shape != rho.shape:
        raise DimMismatch("operands have different shapes")
    dec = eig_hermitian(sigma, tau_cluster)
    out = np.zeros_like(rho)
    for P in dec.cluster_projectors():
        out += P @ rho @ P
    return 0.5 * (out + out.conj().T)


def distinct_count(sigma, tau_cluster=None):
    """Number of distinct eigenvalues v(sigma) under the clustering rule."""
    return eig_hermitian(sigma, tau_cluster).distinct_count


def schatten_norm(X, p):
    if p <= 0:
        raise DomainError("Schatten index must be positive")
    s = np.linalg.svd(np.asarray(X, dtype=complex), compute_uv=False)
    if np.isinf(p):
        return float(np.max(s, initial=0.0))
    s = s[s > 0]
    if s.size == 0:
        return 0.0
    top = s.max()
    return float(top * np.sum((s / top) ** p) ** (1.0 / p))


def top_m_eigensum(rho, M):
    """Sum of the ``M`` largest eigenvalues (Ky Fan maximum principle)."""
    rho = check_hermitian(rho)
    d = rho.shape[0]
    if not 1 <= M <= d:
        raise BadRank(f"M={M} outside 1..{d}")
    w = np.linalg.eigvalsh(rho)[::-1]
    return float(np.sum(w[:M]))


def top_m_sum_values(w, M):
    """Same as :func:`top_m_eigensum` for an explicit spectrum vector."""
    w = np.sort(np.asarray(w, dtype=float))[::-1]
    if not 1 <= M <= w.size:
        raise BadRank(f"M={M} outside 1..{w.size}")
    return float(np.sum(w[:M]))


def majorizes(x, y, tol=1e-10):
    """True iff ``x`` is majorized by ``y`` (x ≺ y)."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    n = max(x.size, y.size)
    x = np.sort(np.pad(x, (0, n - x.size)))[::-1]
    y = np.sort(np.pad(y, (0, n - y.size)))[::-1]
    cx, cy = np.cumsum(x), np.cumsum(y)
    if abs(cx[-1] - cy[-1]) > tol:
        return False
    return bool(np.all(cx <= cy + tol))
