"""Complex Hermitian matrix kernel.

Everything here works on plain ``numpy`` arrays. Matrix functions follow the
convention that kernel eigenvalues are ignored, so ``M**-1`` is the
Moore-Penrose inverse and ``log M`` lives on the support of ``M``.

Random sampling uses ``numpy.random.default_rng(seed)`` (PCG64). Complex
Gaussian matrices are drawn as ``(X + iY)/sqrt(2)`` with ``X`` drawn before
``Y``, each in row-major order. Haar unitaries come from the QR decomposition
of such a matrix with the phases of ``diag(R)`` moved into ``Q``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BadDims, DimensionMismatch, FunctionDomainError, NonHermitian, NotPSD


@dataclass(frozen=True)
class Tolerances:
    htol: float = 1e-10  # absolute, on max |M - M^dagger|
    kernel_rel: float = 1e-12  # eigenvalues below kernel_rel * lambda_max count as zero
    ptol: float = 1e-9  # smallest eigenvalue allowed for "psd"
    rtol: float = 1e-10
    cluster_tol: float = 1e-9  # relative gap for grouping equal eigenvalues


TOL = Tolerances()


@dataclass(frozen=True)
class EigenSystem:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    support_mask: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(M) -> np.ndarray:
    a = np.asarray(M, dtype=complex)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise FunctionDomainError("matrix has non-finite entries")
    return a


def is_hermitian(M, htol: float = TOL.htol) -> bool:
    M = np.asarray(M)
    return M.shape[0] == M.shape[1] and float(np.max(np.abs(M - M.conj().T), initial=0.0)) <= htol


def check_hermitian(M, htol: float = TOL.htol) -> np.ndarray:
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"square matrix required, got {M.shape}")
    dev = float(np.max(np.abs(M - M.conj().T), initial=0.0))
    if dev > htol:
        raise NonHermitian(f"hermiticity violated by {dev:.3e} > {htol:.1e}")
    return (M + M.conj().T) / 2


def kernel_threshold(eigenvalues: np.ndarray, kernel_rel: float = TOL.kernel_rel) -> float:
    if eigenvalues.size == 0:
        return 0.0
    return kernel_rel * max(float(np.max(np.abs(eigenvalues))), np.finfo(float).tiny)


def _canonical_phases(V: np.ndarray) -> np.ndarray:
    # Rotate each column so its largest-modulus entry (first one on ties) is real positive.
    idx = np.argmax(np.abs(V) > np.max(np.abs(V), axis=0) * (1 - 1e-12), axis=0)
    piv = V[idx, np.arange(V.shape[1])]
    ph = np.where(np.abs(piv) > 0, piv / np.where(np.abs(piv) > 0, np.abs(piv), 1), 1)
    return V / ph


def eig_hermitian(M, htol: float = TOL.htol, kernel_rel: float = TOL.kernel_rel) -> EigenSystem:
    """Ascending eigendecomposition with deterministic eigenvector phases.

    ``support_mask`` flags eigenvalues whose modulus exceeds the relative kernel
    threshold.
    """
    H = check_hermitian(M, htol)
    w, V = np.linalg.eigh(H)
    V = _canonical_phases(V)
    mask = np.abs(w) > kernel_threshold(w, kernel_rel)
    return EigenSystem(w, V, mask)


def check_psd(M, ptol: float = TOL.ptol, htol: float = TOL.htol) -> EigenSystem:
    es = eig_hermitian(M, htol)
    scale = max(1.0, float(np.max(np.abs(es.eigenvalues), initial=0.0)))
    if es.eigenvalues.size and es.eigenvalues[0] < -ptol * scale:
        raise NotPSD(f"smallest eigenvalue {es.eigenvalues[0]:.3e} below -{ptol:.1e}")
    return es


def apply_matrix_function(
    M,
    f: Callable[[np.ndarray], np.ndarray],
    ptol: float = TOL.ptol,
    kernel_rel: float = TOL.kernel_rel,
    eig: EigenSystem | None = None,
) -> np.ndarray:
    """Return ``sum_{lambda > threshold} f(lambda) |e><e|`` for positive semidefinite ``M``."""
    es = eig if eig is not None else check_psd(M, ptol)
    lam = es.eigenvalues
    keep = lam > kernel_threshold(lam, kernel_rel)
    V = es.eigenvectors[:, keep]
    with np.errstate(all="ignore"):
        fl = np.asarray(f(lam[keep]))
    if not np.all(np.isfinite(fl)):
        raise FunctionDomainError("function undefined at a retained eigenvalue")
    return (V * fl) @ V.conj().T


def hermitian_function(M, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply ``f`` to every eigenvalue of a Hermitian matrix (kernel included)."""
    es = eig_hermitian(M)
    return (es.eigenvectors * f(es.eigenvalues)) @ es.eigenvectors.conj().T


def mpow(M, p: float, **kw) -> np.ndarray:
    """Power of a psd matrix on its support (negative powers are generalized inverses)."""
    if p == 0:
        return support_projector(M)
    return apply_matrix_function(M, lambda t: t**p, **kw)


def mlog(M, **kw) -> np.ndarray:
    """Natural logarithm of a psd matrix on its support."""
    return apply_matrix_function(M, np.log, **kw)


def sqrtm_psd(M) -> np.ndarray:
    return apply_matrix_function(M, np.sqrt)


def positive_part(H) -> np.ndarray:
    return hermitian_function(H, lambda t: np.maximum(t, 0.0))


def support_projector(M, kernel_rel: float = TOL.kernel_rel) -> np.ndarray:
    es = eig_hermitian(M, kernel_rel=kernel_rel)
    V = es.eigenvectors[:, es.support_mask]
    return V @ V.conj().T


def generalized_inverse(M) -> np.ndarray:
    es = eig_hermitian(M)
    V = es.eigenvectors[:, es.support_mask]
    return (V / es.eigenvalues[es.support_mask]) @ V.conj().T


def dominated(A, B, kernel_rel: float = TOL.kernel_rel, tol: float = 1e-8) -> bool:
    """True when the kernel of ``B`` lies inside the kernel of ``A`` (written A << B)."""
    PA = support_projector(A, kernel_rel)
    PB = support_projector(B, kernel_rel)
    leak = PA - PB @ PA
    return float(np.linalg.norm(leak, 2)) <= tol


def orthogonal(A, B, kernel_rel: float = TOL.kernel_rel, tol: float = 1e-8) -> bool:
    PA = support_projector(A, kernel_rel)
    PB = support_projector(B, kernel_rel)
    return float(np.linalg.norm(PA @ PB, 2)) <= tol


# ---------------------------------------------------------------- tensor algebra


def tensor(*ops) -> np.ndarray:
    if len(ops) == 1 and isinstance(ops[0], (list, tuple)):
        ops = tuple(ops[0])
    return reduce(np.kron, [np.asarray(o) for o in ops])


def _check_dims(M: np.ndarray, dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims) or int(np.prod(dims)) != M.shape[0] or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"dims {dims} do not match matrix of shape {M.shape}")
    return dims


def permute_systems(M, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors so that new factor ``k`` is old factor ``order[k]``."""
    M = np.asarray(M)
    dims = _check_dims(M, dims)
    n = len(dims)
    order = list(order)
    if sorted(order) != list(range(n)):
        raise DimensionMismatch(f"order {order} is not a permutation of {n} systems")
    T = M.reshape(dims + dims).transpose(order + [n + k for k in order])
    D = int(np.prod(dims))
    return T.reshape(D, D)


def permute_vector(v, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    v = np.asarray(v)
    dims = tuple(dims)
    return v.reshape(dims).transpose(list(order)).reshape(-1)


def partial_trace(M, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every factor not listed in ``keep``; kept factors stay in their original order."""
    M = np.asarray(M)
    dims = _check_dims(M, dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionMismatch(f"keep indices {keep} out of range for {len(dims)} systems")
    drop = [k for k in range(len(dims)) if k not in keep]
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    dd = int(np.prod([dims[k] for k in drop])) if drop else 1
    P = permute_systems(M, dims, keep + drop)
    return np.trace(P.reshape(dk, dd, dk, dd), axis1=1, axis2=3)


def partial_transpose(M, dims: Sequence[int], subsystem: int) -> np.ndarray:
    M = np.asarray(M)
    dims = _check_dims(M, dims)
    n = len(dims)
    if not 0 <= subsystem < n:
        raise DimensionMismatch(f"subsystem {subsystem} out of range")
    axes = list(range(2 * n))
    axes[subsystem], axes[n + subsystem] = axes[n + subsystem], axes[subsystem]
    D = M.shape[0]
    return M.reshape(dims + dims).transpose(axes).reshape(D, D)


def max_entangled_vector(d: int) -> np.ndarray:
    """Unnormalized ``sum_i |i>|i>``."""
    return np.eye(d, dtype=complex).reshape(-1)


def schmidt_decompose(v, dims: Sequence[int], kernel_rel: float = TOL.kernel_rel):
    """Schmidt decomposition ``v = sum_x sqrt(lam_x) u_x (x) w_x``.

    Returns ``(lam, U, W)`` with descending ``lam`` summing to ``<v|v>`` and the
    basis vectors as columns of ``U`` and ``W``.
    """
    v = np.asarray(v, dtype=complex).reshape(-1)
    if len(dims) != 2 or dims[0] * dims[1] != v.size:
        raise DimensionMismatch(f"bipartite dims {tuple(dims)} do not match vector of length {v.size}")
    U, s, Vh = np.linalg.svd(v.reshape(dims[0], dims[1]))
    lam = s**2
    r = int(np.sum(lam > kernel_threshold(lam, kernel_rel))) if lam.size else 0
    return lam[:r], U[:, :r], Vh[:r].T


# ---------------------------------------------------------------- pinching


def distinct_spectrum(H, cluster_tol: float = TOL.cluster_tol) -> list[tuple[float, np.ndarray]]:
    """Group eigenvalues by single linkage and return ``(mean eigenvalue, projector)`` pairs."""
    es = eig_hermitian(H)
    w, V = es.eigenvalues, es.eigenvectors
    scale = float(np.max(np.abs(w), initial=0.0))
    gap = cluster_tol * scale
    groups: list[list[int]] = [[0]] if w.size else []
    for i in range(1, w.size):
        if w[i] - w[i - 1] > gap:
            groups.append([i])
        else:
            groups[-1].append(i)
    out = []
    for g in groups:
        Vg = V[:, g]
        out.append((float(np.mean(w[g])), Vg @ Vg.conj().T))
    return out


def pinch(H, M, cluster_tol: float = TOL.cluster_tol) -> np.ndarray:
    M = as_matrix(M)
    return sum(P @ M @ P for _, P in distinct_spectrum(H, cluster_tol))


# ---------------------------------------------------------------- sampling


def rng_from(seed=None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def ginibre(rows: int, cols: int, rng) -> np.ndarray:
    rng = rng_from(rng)
    re = rng.standard_normal((rows, cols))
    im = rng.standard_normal((rows, cols))
    return (re + 1j * im) / np.sqrt(2)


def haar_isometry(d_in: int, d_out: int, rng=None) -> np.ndarray:
    """Haar-random isometry from C^{d_in} into C^{d_out} (columns orthonormal)."""
    if d_in < 1 or d_out < d_in:
        raise BadDims(f"no isometry from dimension {d_in} into {d_out}")
    Q, R = np.linalg.qr(ginibre(d_out, d_in, rng))
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def haar_unitary(d: int, rng=None) -> np.ndarray:
    return haar_isometry(d, d, rng)


def random_density(d: int, rank: int | None = None, rng=None) -> np.ndarray:
    rank = d if rank is None else rank
    if not 1 <= rank <= d:
        raise BadDims(f"rank {rank} impossible in dimension {d}")
    G = ginibre(d, rank, rng)
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_pure_vector(d: int, rng=None) -> np.ndarray:
    v = ginibre(d, 1, rng)[:, 0]
    return v / np.linalg.norm(v)


def random_pure(d: int, rng=None) -> np.ndarray:
    v = random_pure_vector(d, rng)
    return np.outer(v, v.conj())


def random_kraus(d_in: int, d_out: int, env: int = 2, rng=None) -> list[np.ndarray]:
    """Kraus operators of a channel obtained from a Haar isometry into ``d_out * env``."""
    L = haar_isometry(d_in, d_out * env, rng)
    T = L.reshape(d_out, env, d_in)
    return [T[:, k, :] for k in range(env)]


def sample(kind: str, dims, seed=None, rank: int | None = None, env: int = 2):
    """Seed-deterministic random objects.

    ``kind`` is one of ``haar_unitary``, ``haar_isometry``, ``density``, ``pure``,
    ``cptp``. ``dims`` is an int, or ``(d_in, d_out)`` for isometries and channels.
    """
    rng = rng_from(seed)
    if kind in ("haar_unitary", "density", "pure"):
        d = int(dims if np.isscalar(dims) else dims[0])
        if d < 1:
            raise BadDims(f"dimension {d} must be positive")
        if kind == "haar_unitary":
            return haar_unitary(d, rng)
        if kind == "density":
            return random_density(d, rank, rng)
        return random_pure(d, rng)
    if kind in ("haar_isometry", "cptp"):
        if np.isscalar(dims) or len(dims) != 2:
            raise BadDims(f"{kind} needs (d_in, d_out), got {dims!r}")
        d_in, d_out = int(dims[0]), int(dims[1])
        if kind == "haar_isometry":
            return haar_isometry(d_in, d_out, rng)
        if d_in < 1 or d_out < 1 or env < 1:
            raise BadDims(f"bad channel dims {dims} with env {env}")
        from .states import Channel

        return Channel(random_kraus(d_in, d_out, env, rng))
    raise BadDims(f"unknown sample kind {kind!r}")
