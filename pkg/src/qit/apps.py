"""Hypothesis testing, entropic uncertainty and randomness extraction."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.special
import scipy.stats

from . import linalg as la
from .divergences import _mat, dmax_nats, log_scale, nussbaum_szkola, sandwiched, umegaki_nats, variance_nats
from .entropies import conditional_renyi, min_entropy
from .errors import BasisNotON, DimensionMismatch, NonConvergence, QitError, RangeError, TooLarge
from .metrics import trace_distance
from .sdpsolve import SdpProblem, SolverOptions, solve
from .smooth import smooth_min_entropy

GOLDEN_TOL = 1e-10


def _tensor_power(M: np.ndarray, n: int, max_dim: int) -> np.ndarray:
    if M.shape[0] ** n > max_dim:
        raise TooLarge(f"dimension {M.shape[0]}^{n} exceeds {max_dim}")
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        out = np.kron(out, M)
    return out


def _golden_max(f, lo: float, hi: float, tol: float = GOLDEN_TOL, grid: int = 41) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[lo, hi]``; a coarse grid picks the bracket first."""
    xs = np.linspace(lo, hi, grid)
    fs = np.array([f(x) for x in xs])
    k = int(np.nanargmax(fs))
    a, b = xs[max(k - 1, 0)], xs[min(k + 1, grid - 1)]
    r = (np.sqrt(5) - 1) / 2
    c, d = b - r * (b - a), a + r * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - r * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + r * (b - a)
            fd = f(d)
    cands = [(fs[k], xs[k]), (fc, c), (fd, d), (f(lo), lo), (f(hi), hi)]
    best = max(cands, key=lambda t: t[0])
    return float(best[1]), float(best[0])


# ---------------------------------------------------------------- symmetric and asymmetric tests


@dataclass
class HypothesisTest:
    effect: np.ndarray
    n: int

    def __post_init__(self):
        w = np.linalg.eigvalsh(la.check_hermitian(self.effect, htol=1e-8))
        if w[0] < -la.TOL.ptol or w[-1] > 1 + la.TOL.ptol:
            raise QitError("test effect must lie between 0 and the identity")


def helstrom_error(rho, sigma, n: int = 1, max_dim: int = 1024) -> float:
    """Optimal average error ``(1 - Delta(rho^n, sigma^n)) / 2`` for equal priors."""
    R, S = _mat(rho), _mat(sigma)
    if R.shape != S.shape:
        raise DimensionMismatch("states must share a dimension")
    Rn, Sn = _tensor_power(R, n, max_dim), _tensor_power(S, n, max_dim)
    return 0.5 * (1 - trace_distance(Rn, Sn))


def _type_classes(p: np.ndarray, q: np.ndarray, n: int):
    """Probabilities of each type class under ``p^n`` and ``q^n``."""
    k = p.size
    P, Q = [], []
    for counts in itertools.product(range(n + 1), repeat=k):
        if sum(counts) != n:
            continue
        c = np.array(counts)
        lm = scipy.special.gammaln(n + 1) - np.sum(scipy.special.gammaln(c + 1))
        with np.errstate(divide="ignore"):
            lp = lm + np.sum(np.where(c > 0, c * np.log(np.where(p > 0, p, 1.0)), 0.0))
            lq = lm + np.sum(np.where(c > 0, c * np.log(np.where(q > 0, q, 1.0)), 0.0))
        P.append(0.0 if np.any((c > 0) & (p <= 0)) else np.exp(lp))
        Q.append(0.0 if np.any((c > 0) & (q <= 0)) else np.exp(lq))
    return np.array(P), np.array(Q)


def neyman_pearson(
    rho, sigma, n: int = 1, eps: float = 0.05, method: str = "auto", max_dim: int = 64, options: SolverOptions | None = None
):
    """``min tr(rho^n (id - T))`` subject to ``tr(sigma^n T) <= eps`` and ``0 <= T <= id``.

    Diagonal pairs use a linear program over type classes (``method="classical"``);
    otherwise the SDP runs on the full tensor power. Returns ``(alpha_star, test)``,
    where the test is a ``HypothesisTest`` (SDP) or the per-type acceptance
    probabilities (classical).
    """
    if not 0 <= eps <= 1:
        raise RangeError("eps must lie in [0, 1]")
    R, S = _mat(rho), _mat(sigma)
    diag = np.allclose(R, np.diag(np.diag(R)), atol=1e-12) and np.allclose(S, np.diag(np.diag(S)), atol=1e-12)
    if method == "auto":
        method = "classical" if diag else "sdp"
    if method == "classical":
        if not diag:
            raise QitError("the classical route needs diagonal states")
        P, Q = _type_classes(np.diag(R).real, np.diag(S).real, n)
        prob = SdpProblem("min")
        prob.variable("T", P.size, kind="nonneg")
        prob.set_objective(lambda v: float(P.sum() - P @ v["T"]))
        prob.add_ineq(lambda v: 1 - v["T"], name="upper")
        prob.add_ineq(lambda v: float(eps - Q @ v["T"]), name="level")
        sol = solve(prob, options)
        if sol.status != "optimal":
            raise NonConvergence(f"Neyman-Pearson LP ended with status {sol.status}", sol)
        return float(sol.primal_value), np.clip(sol.primal["T"], 0, 1)
    d = R.shape[0] ** n
    if d > max_dim:
        raise TooLarge(f"dimension {d} exceeds {max_dim} for the test SDP")
    Rn, Sn = _tensor_power(R, n, max_dim), _tensor_power(S, n, max_dim)
    prob = SdpProblem("min")
    prob.variable("T", d, kind="psd")
    prob.set_objective(lambda v: float(np.trace(Rn).real - np.trace(Rn @ v["T"]).real))
    prob.add_psd(lambda v: np.eye(d) - v["T"], name="upper")
    prob.add_ineq(lambda v: eps - np.trace(Sn @ v["T"]).real, name="level")
    sol = solve(prob, options)
    if sol.status != "optimal":
        raise NonConvergence(f"Neyman-Pearson SDP ended with status {sol.status}", sol)
    return float(sol.primal_value), HypothesisTest(sol.primal["T"], n)


def _log_q_petz(p: np.ndarray, q: np.ndarray, s: float) -> float:
    """``log sum p^s q^(1-s)`` on the Nussbaum-Szkola pair, with ``0^0 = 0``."""
    if s <= 0:
        m = (p > 0) & (q > 0) if s == 0 else q > 0
        return float(np.log(q[m].sum())) if np.any(m) else -np.inf
    if s >= 1:
        m = p > 0 if s > 1 else (p > 0) & (q > 0)
        if s > 1 and np.any(m & (q <= 0)):
            return np.inf
        return float(np.log(p[m].sum())) if np.any(m) else -np.inf
    m = (p > 0) & (q > 0)
    if not np.any(m):
        return -np.inf
    return float(scipy.special.logsumexp(s * np.log(p[m]) + (1 - s) * np.log(q[m])))


def chernoff_distance(rho, sigma, base=2) -> float:
    """``max_{s in [0,1]} -log tr(rho^s sigma^(1-s))``."""
    p, q = (x.ravel() for x in nussbaum_szkola(rho, sigma))
    _, v = _golden_max(lambda s: -_log_q_petz(p, q, s), 0.0, 1.0)
    return max(v, 0.0) * log_scale(base)


def hoeffding_exponent(rho, sigma, R: float, base=2) -> float:
    """``sup_{s in (0,1)} (1-s)/s (D_s(rho||sigma) - R)`` with the Petz divergence."""
    sc = log_scale(base)
    D = umegaki_nats(_mat(rho), _mat(sigma)) * sc
    if not 0 <= R < D:
        raise RangeError(f"rate R = {R} must lie in [0, D) = [0, {D:.6g})")
    p, q = (x.ravel() for x in nussbaum_szkola(rho, sigma))
    Rn = R / sc

    def f(s):
        # (1-s)/s * (log Q_s / (s-1) - R) = (-log Q_s - (1-s) R) / s
        return (-_log_q_petz(p, q, s) - (1 - s) * Rn) / s

    _, v = _golden_max(f, 1e-9, 1 - 1e-12)
    return max(v, 0.0) * sc


def strong_converse_exponent(rho, sigma, R: float, base=2) -> float:
    """``sup_{s > 1} (s-1)/s (R - D~_s(rho||sigma))`` over ``s = 1/(1-u)``, ``u in (0, 1)``."""
    R_, S_ = _mat(rho), _mat(sigma)
    if not la.dominated(R_, S_):
        raise RangeError("the strong converse exponent needs rho << sigma")
    sc = log_scale(base)
    D = umegaki_nats(R_, S_) * sc
    if R <= D:
        raise RangeError(f"rate R = {R} must exceed D = {D:.6g}")
    Dmax = dmax_nats(R_, S_) * sc

    def f(u):
        if u >= 1:
            return R - Dmax
        return u * (R - sandwiched(R_, S_, 1 / (1 - u), base))

    _, v = _golden_max(f, 1e-9, 1.0)
    return max(v, 0.0)


def stein_second_order(rho, sigma, n: int, eps: float, base=2) -> float:
    """Reference curve ``n D + sqrt(n V) Phi^-1(eps)`` for ``-log beta_n(eps)``."""
    R_, S_ = _mat(rho), _mat(sigma)
    D = umegaki_nats(R_, S_)
    V = variance_nats(R_, S_)
    z = 0.0 if eps == 0.5 else float(scipy.stats.norm.ppf(eps))
    return (n * D + np.sqrt(n * max(V, 0.0)) * z) * log_scale(base)


# ---------------------------------------------------------------- uncertainty relation


def _check_basis(U) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1] or np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) > 1e-10:
        raise BasisNotON("basis columns must be orthonormal")
    return U


def _measure_first(M: np.ndarray, U: np.ndarray, dA: int, dR: int) -> np.ndarray:
    """``sum_x |x><x| (x) <u_x| rho |u_x>`` on ``X (x) R``."""
    T = M.reshape(dA, dR, dA, dR)
    out = np.zeros((dA * dR, dA * dR), dtype=complex)
    for x in range(dA):
        u = U[:, x]
        blk = np.einsum("a,arbs,b->rs", u.conj(), T, u)
        out[x * dR : (x + 1) * dR, x * dR : (x + 1) * dR] = blk
    return out


def ur_check(rho_abc, dims, basis_x, basis_y, alpha: float = 1.0, base=2) -> tuple[float, float, float]:
    """Uncertainty relation ``H~_a(X|B) + H~_b(Y|C) >= -log c`` with ``1/a + 1/b = 2``.

    ``rho_abc`` is a vector or density matrix on ``A (x) B (x) C``; X and Y are
    the outcomes of measuring A in the two bases (columns). Returns
    ``(lhs, rhs, lhs - rhs)``.
    """
    dA, dB, dC = dims
    U, W = _check_basis(basis_x), _check_basis(basis_y)
    if U.shape[0] != dA or W.shape[0] != dA:
        raise DimensionMismatch("bases must act on A")
    if not alpha >= 0.5:
        raise RangeError("alpha must be at least 1/2")
    beta = np.inf if alpha == 0.5 else (0.5 if np.isinf(alpha) else alpha / (2 * alpha - 1))
    M = np.asarray(rho_abc, dtype=complex)
    if M.ndim == 1:
        M = np.outer(M, M.conj())
    rho_ab = la.partial_trace(M, dims, [0, 1])
    rho_ac = la.partial_trace(M, dims, [0, 2])
    xb = _measure_first(rho_ab, U, dA, dB)
    yc = _measure_first(rho_ac, W, dA, dC)
    h1 = conditional_renyi(xb, alpha, "sandwiched", "up", dims=(dA, dB), base=base).value
    h2 = conditional_renyi(yc, beta, "sandwiched", "up", dims=(dA, dC), base=base).value
    c = float(np.max(np.abs(U.conj().T @ W) ** 2))
    rhs = -np.log(c) * log_scale(base)
    return h1 + h2, rhs, h1 + h2 - rhs


# ---------------------------------------------------------------- randomness extraction


@dataclass(frozen=True)
class ToeplitzFamily:
    """Hashes ``z -> T z mod 2`` with ``T[i, j] = seed[i - j + n - 1]``."""

    n_bits: int
    m_bits: int

    @property
    def seed_bits(self) -> int:
        return self.n_bits + self.m_bits - 1 if self.m_bits > 0 else 0

    def matrix(self, seed: int) -> np.ndarray:
        bits = [(seed >> k) & 1 for k in range(self.seed_bits)]
        n, m = self.n_bits, self.m_bits
        return np.array([[bits[i - j + n - 1] for j in range(n)] for i in range(m)], dtype=int).reshape(m, n)

    def table(self) -> np.ndarray:
        """``table[f, z]`` is the hash of ``z`` under seed ``f`` (bit 0 of ``z`` is its first coordinate)."""
        zs = np.array([[(z >> k) & 1 for k in range(self.n_bits)] for z in range(2**self.n_bits)], dtype=int)
        weights = 1 << np.arange(self.m_bits)
        rows = []
        for f in range(2**self.seed_bits):
            out = (zs @ self.matrix(f).T) % 2
            rows.append(out @ weights if self.m_bits else np.zeros(len(zs), dtype=int))
        return np.array(rows, dtype=int)

    def collision_probabilities(self) -> dict:
        """Exact ``Pr_f[f(z) = f(z')]`` for every unordered pair ``z != z'``."""
        tab = self.table()
        N = 2**self.n_bits
        return {(a, b): float(np.mean(tab[:, a] == tab[:, b])) for a in range(N) for b in range(a + 1, N)}


def toeplitz_family(n_bits: int, m_bits: int, audit: bool = True) -> ToeplitzFamily:
    if n_bits < 1 or m_bits < 0 or m_bits > n_bits:
        raise RangeError("need n_bits >= 1 and 0 <= m_bits <= n_bits")
    if n_bits + m_bits - 1 > 20:
        raise TooLarge("seed enumeration is limited to 20 bits")
    fam = ToeplitzFamily(n_bits, m_bits)
    if audit and m_bits > 0:
        target = 2.0**-m_bits
        bad = [k for k, v in fam.collision_probabilities().items() if abs(v - target) > 1e-15]
        if bad:
            raise QitError(f"family fails two-universality on {len(bad)} pairs")
    return fam


@dataclass(frozen=True)
class ExtractorInstance:
    """Source ``rho_ZE`` with ``Z`` classical on ``2**n_bits`` values, hashed to ``m_bits``."""

    weights: np.ndarray  # p(z)
    conditionals: tuple  # rho_E^z
    n_bits: int
    m_bits: int

    @classmethod
    def from_state(cls, rho_ze, n_bits: int, m_bits: int) -> "ExtractorInstance":
        from .states import cq_split

        w, conds = cq_split(rho_ze, rho_ze.labels[0])
        if w.size != 2**n_bits:
            raise DimensionMismatch(f"Z must have {2 ** n_bits} values")
        return cls(np.asarray(w), tuple(conds), n_bits, m_bits)

    @property
    def d_e(self) -> int:
        return self.conditionals[0].shape[0]

    def joint(self) -> np.ndarray:
        """``rho_ZE`` as a block-diagonal matrix."""
        dE, N = self.d_e, 2**self.n_bits
        M = np.zeros((N * dE, N * dE), dtype=complex)
        for z in range(N):
            M[z * dE : (z + 1) * dE, z * dE : (z + 1) * dE] = self.weights[z] * self.conditionals[z]
        return M


def _hashed(inst: ExtractorInstance, row: np.ndarray) -> list[np.ndarray]:
    """Unnormalized ``rho_E^s`` blocks of ``rho_SE`` for one hash."""
    L = 2**inst.m_bits
    blocks = [np.zeros((inst.d_e, inst.d_e), dtype=complex) for _ in range(L)]
    for z, s in enumerate(row):
        blocks[s] = blocks[s] + inst.weights[z] * inst.conditionals[z]
    return blocks


def extractor_delta(inst: ExtractorInstance, check: bool = True) -> tuple[float, np.ndarray]:
    """Exact ``Delta(S|EF)`` averaged over all Toeplitz seeds, with the per-seed values.

    With ``check=True`` the joint state ``rho_SEF`` is also built explicitly and
    its distance to ``pi_S (x) rho_EF`` must agree to 1e-12.
    """
    if inst.d_e > 8:
        raise TooLarge("E dimension is limited to 8")
    fam = toeplitz_family(inst.n_bits, inst.m_bits, audit=False)
    tab = fam.table()
    L = 2**inst.m_bits
    rho_e = sum(w * c for w, c in zip(inst.weights, inst.conditionals))
    per_seed = []
    for row in tab:
        blocks = _hashed(inst, row)
        # blocks commute with the S register, so the trace norm splits
        per_seed.append(sum(0.5 * np.sum(np.abs(np.linalg.eigvalsh(b - rho_e / L))) for b in blocks))
    per_seed = np.array(per_seed)
    delta = float(per_seed.mean())
    if check:
        alt = extractor_delta_joint(inst)
        if abs(alt - delta) > 1e-12:
            raise ArithmeticError(f"extractor distance paths disagree: {delta} vs {alt}")
    return delta, per_seed


def extractor_delta_joint(inst: ExtractorInstance) -> float:
    """``Delta(rho_SEF, pi_S (x) rho_EF)`` from the explicit joint state."""
    fam = toeplitz_family(inst.n_bits, inst.m_bits, audit=False)
    tab = fam.table()
    L, dE, F = 2**inst.m_bits, inst.d_e, tab.shape[0]
    if L * dE * F > 4096:
        raise TooLarge("joint state too large to build explicitly")
    rho_e = sum(w * c for w, c in zip(inst.weights, inst.conditionals))
    D = L * dE * F
    real = np.zeros((D, D), dtype=complex)
    ideal = np.zeros((D, D), dtype=complex)
    for f, row in enumerate(tab):
        for s, blk in enumerate(_hashed(inst, row)):
            k = (s * F + f) * dE  # register order S, F, E
            real[k : k + dE, k : k + dE] = blk / F
            ideal[k : k + dE, k : k + dE] = rho_e / (L * F)
    return trace_distance(real, ideal)


def leftover_hash_bounds(inst: ExtractorInstance, base=2) -> dict:
    """Collision and min-entropy versions of the leftover hash bound on ``Delta(S|EF)``."""
    M = inst.joint()
    dims = (2**inst.n_bits, inst.d_e)
    h2 = conditional_renyi(M, 2.0, "petz", "up", dims=dims, base="e").value
    hmin = min_entropy(M, dims=dims, base="e").value
    logl = inst.m_bits * np.log(2)
    sc = log_scale(base)
    return {
        "h2_petz_up": h2 * sc,
        "h_min": hmin * sc,
        "bound_collision": float(np.exp(0.5 * (logl - h2))),
        "bound_min_entropy": float(np.exp(0.5 * (logl - hmin))),
    }


def extractable_length(rho_ze, eps: float, delta: float, cut=None, dims=None, base=2) -> tuple[float, float]:
    """Bracket ``[H_min^{(eps-delta)/2} - 2 log(1/delta), H_min^{sqrt(2 eps - eps^2)}]`` on extractable bits."""
    if not 0 < eps < 1 or not 0 < delta < eps:
        raise RangeError("need 0 < delta < eps < 1")
    sc = log_scale(base)
    lo_eps = (eps - delta) / 2
    hi_eps = math.sqrt(2 * eps - eps**2)
    lower = smooth_min_entropy(rho_ze, lo_eps, cut=cut, dims=dims, base="e")[0] - 2 * np.log(1 / delta)
    upper = smooth_min_entropy(rho_ze, hi_eps, cut=cut, dims=dims, base="e")[0]
    if lower > upper + 1e-9:
        raise ArithmeticError(f"extractable-length bracket is inverted: {lower} > {upper}")
    return lower * sc, upper * sc
