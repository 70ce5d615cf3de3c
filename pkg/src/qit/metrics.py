"""Norms and distances on operators and subnormalized states.

Distances accept ``DensityOperator`` objects or plain matrices. For
subnormalized inputs the generalized quantities are used: the hat extension
``rho -> rho (+) (1 - tr rho)`` turns each of them into its normalized
counterpart.
"""

from __future__ import annotations

import numpy as np

from . import linalg as la
from .errors import DimensionMismatch

_CLAMP = 1e-12


def _mat(x) -> np.ndarray:
    from .states import DensityOperator

    if isinstance(x, DensityOperator):
        return np.asarray(x.matrix)
    return la.as_matrix(x)


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    A, B = _mat(a), _mat(b)
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes {A.shape} and {B.shape} differ")
    return A, B


def singular_values(L) -> np.ndarray:
    return np.linalg.svd(np.asarray(L), compute_uv=False)


def schatten_norm(L, p: float) -> float:
    """``(sum_i s_i^p)^(1/p)``; ``p = inf`` gives the operator norm.

    For ``0 < p < 1`` the value is returned even though it is not a norm.
    """
    s = singular_values(L)
    if np.isinf(p):
        return float(s.max(initial=0.0))
    if p <= 0:
        raise ValueError("p must be positive")
    s = s[s > 0]
    if s.size == 0:
        return 0.0
    m = s.max()
    return float(m * np.sum((s / m) ** p) ** (1 / p))


def dual_norm_plus(xi) -> float:
    """Positive-cone dual norm ``(||xi||_1 + |tr xi|) / 2`` of a Hermitian operator."""
    H = la.check_hermitian(xi)
    w = np.linalg.eigvalsh(H)
    return float((np.sum(np.abs(w)) + abs(np.sum(w))) / 2)


def hat(rho) -> np.ndarray:
    """``rho (+) (1 - tr rho)``, a normalized state one dimension larger."""
    R = _mat(rho)
    d = R.shape[0]
    out = np.zeros((d + 1, d + 1), dtype=complex)
    out[:d, :d] = R
    out[d, d] = 1 - np.trace(R).real
    return out


def _canonical(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fixed argument order so symmetric quantities are bitwise symmetric."""
    return (A, B) if A.tobytes() <= B.tobytes() else (B, A)


def trace_distance(rho, tau) -> float:
    """Generalized trace distance ``||rho - tau||_1 / 2 + |tr(rho - tau)| / 2``."""
    A, B = _canonical(*_pair(rho, tau))
    return dual_norm_plus(A - B)


def _sqrt_fidelity(A: np.ndarray, B: np.ndarray) -> float:
    # singular values of sqrt(A) sqrt(B), never the product of squares
    A, B = _canonical(A, B)
    return float(np.sum(singular_values(la.sqrtm_psd(A) @ la.sqrtm_psd(B))))


def fidelity(rho, tau) -> float:
    """``F = (tr |sqrt(rho) sqrt(tau)|)^2``."""
    A, B = _pair(rho, tau)
    return _sqrt_fidelity(A, B) ** 2


def gen_fidelity(rho, tau, check: bool = False) -> float:
    """Generalized fidelity of subnormalized states.

    With ``check=True`` the value is recomputed through the hat extension and
    the two paths must agree to 1e-9.
    """
    A, B = _pair(rho, tau)
    ta, tb = np.trace(A).real, np.trace(B).real
    defect = np.sqrt(max(1 - ta, 0.0) * max(1 - tb, 0.0))
    val = (_sqrt_fidelity(A, B) + defect) ** 2
    if check:
        alt = fidelity(hat(A), hat(B))
        if abs(alt - val) > 1e-9:
            raise ArithmeticError(f"generalized fidelity paths disagree: {val} vs {alt}")
    return float(val)


def purified_distance(rho, tau) -> float:
    f = gen_fidelity(rho, tau)
    return float(np.sqrt(max(1 - f, 0.0) if 1 - f > -_CLAMP else 0.0))


def bures_angle(rho, tau) -> float:
    """Angular distance ``arccos sqrt(F*)``."""
    return float(np.arccos(min(1.0, np.sqrt(gen_fidelity(rho, tau)))))


def fvdg_bounds(delta: float) -> tuple[float, float]:
    """Interval ``[delta, sqrt(2 delta - delta^2)]`` that must contain the purified distance."""
    return delta, float(np.sqrt(max(2 * delta - delta**2, 0.0)))
