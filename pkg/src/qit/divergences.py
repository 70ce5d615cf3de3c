"""Rényi divergences of quantum states and their classical reductions.

Families:

``minimal``
    sandwiched divergence ``(1/(a-1)) log(||s^g rho s^g||_a^a / tr rho)`` with
    ``g = (1-a)/(2a)``.
``petz``
    ``(1/(a-1)) log(tr(rho^a sigma^(1-a)) / tr rho)``.
``maximal``
    the classical divergence of the pair ``(p, q)`` read off from the spectral
    decomposition of ``sigma^{-1/2} rho sigma^{-1/2}``.
``classical``
    vectors instead of matrices.
``max``
    ``log lambda_max(sigma^{-1/2} rho sigma^{-1/2})``.
``umegaki``
    ``tr(rho (log rho - log sigma)) / tr rho``.

Values are returned in bits unless ``base="e"``. Support conditions decide
finiteness before any inverse is taken: for ``alpha >= 1`` the value is
``+inf`` unless ``rho << sigma``; for ``alpha < 1`` it is ``+inf`` only when
``rho`` and ``sigma`` are orthogonal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .errors import QitError, TooLarge

FAMILIES = ("classical", "minimal", "petz", "maximal", "max", "umegaki")
GUARD = 1e-4  # |alpha - 1| below this uses the first-order expansion around alpha = 1


def log_scale(base) -> float:
    """Factor converting nats into the requested base."""
    if base in ("e", None) or base == np.e:
        return 1.0
    b = float(base)
    if b <= 0 or b == 1:
        raise QitError(f"invalid logarithm base {base!r}")
    return 1.0 / np.log(b)


@dataclass(frozen=True)
class RenyiOrder:
    alpha: float
    family: str = "minimal"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise QitError(f"unknown family {self.family!r}")
        if not (self.alpha >= 0):
            raise QitError(f"order must be nonnegative, got {self.alpha}")

    @property
    def dpi_valid(self) -> bool:
        a = self.alpha
        if self.family == "minimal":
            return a >= 0.5
        if self.family == "petz":
            return 0 < a <= 2
        if self.family == "maximal":
            return 0 < a <= 2
        return True


@dataclass(frozen=True)
class DivergenceResult:
    value: float
    q_functional: float
    support_condition: str  # "ok", "alpha_lt1_not_perp" or "infinite"
    alpha: float
    family: str
    base: object = 2

    def __float__(self) -> float:
        return float(self.value)


# ---------------------------------------------------------------- classical


def _clean_pmf(p) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if np.any(p < -1e-12):
        raise QitError("probability weights must be nonnegative")
    return np.clip(p, 0.0, None)


def _classical_nats(p: np.ndarray, q: np.ndarray, alpha: float) -> tuple[float, float, str]:
    """Divergence in nats, its Q functional, and the support condition."""
    sp, sq = p > 0, q > 0
    tp = p.sum()
    if tp <= 0:
        raise QitError("first argument must be nonzero")
    dominated = not np.any(sp & ~sq)
    overlap = np.any(sp & sq)
    if alpha < 1 and alpha != 0:
        cond = "ok" if dominated else "alpha_lt1_not_perp"
        if not overlap:
            return np.inf, 0.0, "infinite"
    elif alpha == 0:
        Q = float(q[sp].sum())
        if Q <= 0:
            return np.inf, 0.0, "infinite"
        return -np.log(Q / tp), Q, "ok" if dominated else "alpha_lt1_not_perp"
    else:
        if not dominated:
            return np.inf, np.inf, "infinite"
        cond = "ok"
    m = sp & sq
    lr = np.log(p[m]) - np.log(q[m])
    if np.isinf(alpha):
        return float(lr.max()), float(np.exp(lr.max())), cond
    D1 = float(np.sum(p[m] * lr) / tp)
    if alpha == 1:
        return D1, 1.0, cond
    if abs(alpha - 1) < GUARD and dominated:
        V = float(np.sum(p[m] * (lr - D1) ** 2) / tp)
        return D1 + (alpha - 1) * V / 2, np.nan, cond
    # log Q = log sum p^a q^(1-a), evaluated stably
    logs = alpha * np.log(p[m]) + (1 - alpha) * np.log(q[m])
    mx = logs.max()
    logQ = mx + np.log(np.sum(np.exp(logs - mx)))
    return float((logQ - np.log(tp)) / (alpha - 1)), float(np.exp(logQ)), cond


def classical_renyi(p, q, alpha: float, base=2) -> float:
    """Classical Rényi divergence ``D_alpha(p||q)`` (``alpha`` in ``[0, inf]``)."""
    p, q = _clean_pmf(p), _clean_pmf(q)
    if p.shape != q.shape:
        raise QitError("distributions must have the same length")
    return _classical_nats(p, q, float(alpha))[0] * log_scale(base)


def classical_variance(p, q, base=2) -> float:
    p, q = _clean_pmf(p), _clean_pmf(q)
    sp = p > 0
    if np.any(sp & (q <= 0)):
        return np.inf
    lr = np.log(p[sp]) - np.log(q[sp])
    D = np.sum(p[sp] * lr) / p.sum()
    return float(np.sum(p[sp] * (lr - D) ** 2) / p.sum()) * log_scale(base) ** 2


# ---------------------------------------------------------------- quantum helpers


def _mat(x) -> np.ndarray:
    from .states import DensityOperator

    return np.asarray(x.matrix) if isinstance(x, DensityOperator) else la.as_matrix(x)


def _spectrum(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    es = la.check_psd(M)
    lam = np.where(es.support_mask & (es.eigenvalues > 0), es.eigenvalues, 0.0)
    return lam, es.eigenvectors


def _supports(rho: np.ndarray, sigma: np.ndarray) -> tuple[bool, bool]:
    return la.dominated(rho, sigma), la.orthogonal(rho, sigma)


def umegaki_nats(rho: np.ndarray, sigma: np.ndarray) -> float:
    if not la.dominated(rho, sigma):
        return np.inf
    lr, _ = _spectrum(rho)
    tr = lr.sum()
    t1 = float(np.sum(lr[lr > 0] * np.log(lr[lr > 0])))
    t2 = float(np.trace(rho @ la.mlog(sigma)).real)
    return (t1 - t2) / tr


def variance_nats(rho: np.ndarray, sigma: np.ndarray) -> float:
    if not la.dominated(rho, sigma):
        return np.inf
    D = umegaki_nats(rho, sigma)
    L = la.mlog(rho) - la.mlog(sigma) - D * np.eye(rho.shape[0])
    return float(np.trace(rho @ L @ L).real / np.trace(rho).real)


def dmax_nats(rho: np.ndarray, sigma: np.ndarray) -> float:
    if not la.dominated(rho, sigma):
        return np.inf
    S = la.mpow(sigma, -0.5)
    w = np.linalg.eigvalsh(la.check_hermitian(S @ rho @ S, htol=1e-6))
    return float(np.log(w[-1]))


def _minimal_nats(rho, sigma, alpha) -> tuple[float, float, str]:
    dom, perp = _supports(rho, sigma)
    if alpha >= 1 and not dom:
        return np.inf, np.inf, "infinite"
    if alpha < 1 and perp:
        return np.inf, 0.0, "infinite"
    cond = "ok" if dom else "alpha_lt1_not_perp"
    tr = float(np.trace(rho).real)
    if np.isinf(alpha):
        D = dmax_nats(rho, sigma)
        return D, float(np.exp(D)), cond
    if alpha == 1:
        return umegaki_nats(rho, sigma), 1.0, cond
    if abs(alpha - 1) < GUARD:
        D = umegaki_nats(rho, sigma)
        return D + (alpha - 1) * variance_nats(rho, sigma) / 2, np.nan, cond
    if alpha == 0.5:
        from .metrics import _sqrt_fidelity

        Q = _sqrt_fidelity(rho, sigma)
    else:
        g = (1 - alpha) / (2 * alpha)
        S = la.mpow(sigma, g)
        w = np.linalg.eigvalsh(la.check_hermitian(S @ rho @ S, htol=1e-6))
        w = np.clip(w, 0, None)
        Q = float(np.sum(w[w > 0] ** alpha))
    if Q <= 0:
        return np.inf, 0.0, "infinite"
    return float(np.log(Q / tr) / (alpha - 1)), Q, cond


def _petz_nats(rho, sigma, alpha) -> tuple[float, float, str]:
    dom, perp = _supports(rho, sigma)
    if np.isinf(alpha):
        raise QitError("the Petz family has no order-infinity member")
    if alpha >= 1 and not dom:
        return np.inf, np.inf, "infinite"
    if alpha < 1 and perp:
        return np.inf, 0.0, "infinite"
    cond = "ok" if dom else "alpha_lt1_not_perp"
    tr = float(np.trace(rho).real)
    if alpha == 0:
        Q = float(np.trace(la.support_projector(rho) @ sigma).real)
        return float(-np.log(Q / tr)), Q, cond
    if alpha == 1:
        return umegaki_nats(rho, sigma), 1.0, cond
    if abs(alpha - 1) < GUARD:
        D = umegaki_nats(rho, sigma)
        return D + (alpha - 1) * variance_nats(rho, sigma) / 2, np.nan, cond
    Q = float(np.trace(la.mpow(rho, alpha) @ la.mpow(sigma, 1 - alpha)).real)
    if Q <= 0:
        return np.inf, 0.0, "infinite"
    return float(np.log(Q / tr) / (alpha - 1)), Q, cond


def maximal_pair(rho, sigma) -> tuple[np.ndarray, np.ndarray]:
    """Classical pair ``(p, q)`` with ``p_x = lambda_x q_x`` and ``q_x = tr(sigma Pi_x)``.

    Requires ``rho << sigma``.
    """
    rho, sigma = _mat(rho), _mat(sigma)
    S = la.mpow(sigma, -0.5)
    es = la.eig_hermitian(la.check_hermitian(S @ rho @ S, htol=1e-6))
    q = np.real(np.einsum("ix,ij,jx->x", es.eigenvectors.conj(), sigma, es.eigenvectors))
    q = np.clip(q, 0, None)
    lam = np.clip(es.eigenvalues, 0, None)
    return lam * q, q


def _maximal_nats(rho, sigma, alpha) -> tuple[float, float, str]:
    dom, perp = _supports(rho, sigma)
    if alpha < 1 and perp:
        return np.inf, 0.0, "infinite"
    if not dom:
        if alpha >= 1:
            return np.inf, np.inf, "infinite"
        if not la.dominated(sigma, rho) or alpha == 0:
            raise QitError("maximal divergence with alpha < 1 needs rho << sigma or sigma << rho")
        # tr(sigma #_a rho) = tr(rho #_(1-a) sigma)
        q, p = maximal_pair(sigma, rho)
        Q = float(np.sum(p[p > 0] ** alpha * q[p > 0] ** (1 - alpha)))
        tr = float(np.trace(rho).real)
        return float(np.log(Q / tr) / (alpha - 1)), Q, "alpha_lt1_not_perp"
    p, q = maximal_pair(rho, sigma)
    return _classical_nats(p, q, alpha)


def renyi_divergence(rho, sigma, alpha: float, family: str = "minimal", base=2) -> DivergenceResult:
    """Evaluate ``D_alpha(rho || sigma)`` for the chosen family.

    ``family="max"`` ignores ``alpha`` and returns the max-divergence.
    """
    order = RenyiOrder(float(alpha) if family != "max" else np.inf, family)
    a = order.alpha
    if family == "classical":
        p, q = _clean_pmf(rho), _clean_pmf(sigma)
        val, Q, cond = _classical_nats(p, q, a)
    else:
        R, S = _mat(rho), _mat(sigma)
        if R.shape != S.shape:
            raise QitError(f"shapes {R.shape} and {S.shape} differ")
        if np.trace(R).real <= 0:
            raise QitError("first argument must be nonzero")
        if family == "minimal":
            val, Q, cond = _minimal_nats(R, S, a)
        elif family == "petz":
            val, Q, cond = _petz_nats(R, S, a)
        elif family == "maximal":
            val, Q, cond = _maximal_nats(R, S, a)
        elif family == "max":
            val = dmax_nats(R, S)
            Q, cond = float(np.exp(val)), "ok" if np.isfinite(val) else "infinite"
        else:
            val = umegaki_nats(R, S)
            Q, cond = 1.0, "ok" if np.isfinite(val) else "infinite"
    return DivergenceResult(val * log_scale(base), Q, cond, a, family, base)


def sandwiched(rho, sigma, alpha: float, base=2) -> float:
    return renyi_divergence(rho, sigma, alpha, "minimal", base).value


def petz(rho, sigma, alpha: float, base=2) -> float:
    return renyi_divergence(rho, sigma, alpha, "petz", base).value


def maximal(rho, sigma, alpha: float, base=2) -> float:
    return renyi_divergence(rho, sigma, alpha, "maximal", base).value


def umegaki(rho, sigma, base=2) -> float:
    return umegaki_nats(_mat(rho), _mat(sigma)) * log_scale(base)


def dmax(rho, sigma, base=2) -> float:
    return dmax_nats(_mat(rho), _mat(sigma)) * log_scale(base)


def divergence_variance(rho, sigma, base=2) -> float:
    """``V = tr(rho (log rho - log sigma - D)^2)`` in the chosen base (squared units).

    The slope of ``alpha -> D_alpha`` at one is ``V * ln(b) / 2`` in base ``b``,
    which is ``V / (2 ln 2)`` when ``V`` is measured in nats and ``D`` in bits.
    """
    return variance_nats(_mat(rho), _mat(sigma)) * log_scale(base) ** 2


def nussbaum_szkola(rho, sigma) -> tuple[np.ndarray, np.ndarray]:
    """Joint pmfs ``P(x,y) = lambda_x |<e_x|f_y>|^2`` and ``Q(x,y) = mu_y |<e_x|f_y>|^2``."""
    lam, E = _spectrum(_mat(rho))
    mu, F = _spectrum(_mat(sigma))
    ov = np.abs(E.conj().T @ F) ** 2
    return lam[:, None] * ov, mu[None, :] * ov


# ---------------------------------------------------------------- pinched divergence


def _product_groups(mu: np.ndarray, n: int, cluster_tol: float):
    """Group multi-indices of ``sigma^{(x)n}`` by equal eigenvalue.

    Returns a list of ``(eigenvalue, index array of shape (m, n))``.
    """
    d = mu.size
    idx = np.array(list(itertools.product(range(d), repeat=n)), dtype=int).reshape(-1, n)
    with np.errstate(divide="ignore"):
        logmu = np.log(mu)
    vals = logmu[idx].sum(axis=1)
    zero = ~np.isfinite(vals)
    groups = []
    if np.any(zero):
        groups.append((0.0, idx[zero]))
    order = np.argsort(vals[~zero], kind="stable")
    v = vals[~zero][order]
    I = idx[~zero][order]
    start = 0
    for k in range(1, v.size + 1):
        if k == v.size or v[k] - v[k - 1] > cluster_tol:
            groups.append((float(np.exp(np.mean(v[start:k]))), I[start:k]))
            start = k
    return groups


def spec_count(sigma, n: int = 1, cluster_tol: float = 1e-9) -> int:
    """Number of distinct eigenvalues of ``sigma^{(x)n}``."""
    mu, _ = _spectrum(_mat(sigma))
    return len(_product_groups(mu, n, cluster_tol))


def pinched_divergence(rho, sigma, alpha: float, n: int = 1, base=2, max_dim: int = 4096) -> float:
    """``(1/n) D_alpha(P(rho^{(x)n}) || sigma^{(x)n})`` with the pinching in the spectrum of ``sigma^{(x)n}``.

    The pinched state commutes with ``sigma^{(x)n}``, so the value is a classical
    divergence between the block eigenvalues and the matching eigenvalues of
    ``sigma^{(x)n}``. Blocks are built entry by entry, never as a full tensor power.
    """
    R, S = _mat(rho), _mat(sigma)
    d = R.shape[0]
    if d**n > max_dim:
        raise TooLarge(f"d^n = {d**n} exceeds {max_dim}")
    mu, F = _spectrum(S)
    Rp = F.conj().T @ R @ F
    p_all, q_all = [], []
    for val, I in _product_groups(mu, n, 1e-9):
        B = np.ones((I.shape[0], I.shape[0]), dtype=complex)
        for k in range(n):
            B *= Rp[np.ix_(I[:, k], I[:, k])]
        w = np.clip(np.linalg.eigvalsh((B + B.conj().T) / 2), 0, None)
        p_all.append(w)
        q_all.append(np.full(w.size, val))
    p, q = np.concatenate(p_all), np.concatenate(q_all)
    tiny = 1e-13 * p.max()
    p = np.where(p > tiny, p, 0.0)
    return _classical_nats(p, q, float(alpha))[0] * log_scale(base) / n
