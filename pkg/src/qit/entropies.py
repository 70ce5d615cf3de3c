"""Conditional entropies: Rényi families, von Neumann, min- and max-entropy.

All conditional Rényi entropies are negated divergences
``-D_alpha(rho_AB || id_A (x) sigma_B)``. The ``down`` arrow fixes
``sigma_B = rho_B``; the ``up`` arrow optimizes over normalized ``sigma_B``.
``family="petz"`` uses the Petz divergence, ``family="sandwiched"`` the
minimal one. Values are in bits unless ``base="e"``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import linalg as la
from .divergences import GUARD, _minimal_nats, _petz_nats, dmax_nats, log_scale
from .errors import NonConvergence, QitError
from .sdpsolve import SdpProblem, SolverOptions, solve
from .states import DensityOperator, bipartite, cq_split

ENTROPY_FAMILIES = ("petz", "sandwiched")
ARROWS = ("up", "down")


@dataclass
class EntropyResult:
    value: float
    family: str
    arrow: str
    alpha: float
    method: str  # "closed_form", "sdp" or "iterative"
    base: object = 2
    witness: dict = field(default_factory=dict)
    residual: float = 0.0

    def __float__(self) -> float:
        return float(self.value)


def _entropy_of_spectrum(lam: np.ndarray, alpha: float) -> float:
    """Rényi entropy in nats of a (possibly subnormalized) spectrum, normalized by its sum."""
    lam = lam[lam > 0]
    t = lam.sum()
    p = lam / t
    if alpha == 0:
        return float(np.log(p.size))
    if np.isinf(alpha):
        return float(-np.log(p.max()))
    if alpha == 1 or abs(alpha - 1) < GUARD:
        h = -np.sum(p * np.log(p))
        if alpha == 1:
            return float(h)
        v = np.sum(p * (np.log(p) + h) ** 2)
        return float(h - (alpha - 1) * v / 2)
    logs = alpha * np.log(p)
    m = logs.max()
    return float((m + np.log(np.sum(np.exp(logs - m)))) / (1 - alpha))


def _spectrum(M: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(la.check_hermitian(M))
    return np.where(w > la.kernel_threshold(w), w, 0.0)


def von_neumann(rho, cut=None, dims=None, base=2) -> float:
    """Conditional von Neumann entropy ``H(AB) - H(B)`` of the normalized state."""
    M, dA, dB = bipartite(rho, cut, dims)
    M = M / np.trace(M).real
    hAB = _entropy_of_spectrum(_spectrum(M), 1)
    hB = _entropy_of_spectrum(_spectrum(la.partial_trace(M, (dA, dB), [1])), 1) if dB > 1 else 0.0
    return (hAB - hB) * log_scale(base)


# ---------------------------------------------------------------- sandwiched up, iterative


class _SandwichedObjective:
    """``log Q(sigma)`` with ``Q = tr (rho^1/2 (id (x) sigma^b) rho^1/2)^alpha`` and ``b = (1-a)/a``."""

    def __init__(self, M: np.ndarray, dA: int, dB: int, alpha: float, basis: np.ndarray):
        self.R = la.sqrtm_psd(M)
        self.dA, self.dB, self.alpha = dA, dB, alpha
        self.b = (1 - alpha) / alpha
        self.basis = basis  # columns span the support of rho_B
        self.k = basis.shape[1]

    def sigma(self, W: np.ndarray) -> np.ndarray:
        P = W @ W.conj().T
        return P / np.trace(P).real

    def value_grad(self, S: np.ndarray) -> tuple[float, np.ndarray]:
        """``log Q`` and its gradient with respect to ``sigma`` (compressed to the support)."""
        lam, U = np.linalg.eigh(S)
        lam = np.clip(lam, 1e-300, None)
        tau_c = (U * lam**self.b) @ U.conj().T
        tau = self.basis @ tau_c @ self.basis.conj().T
        Mt = self.R @ np.kron(np.eye(self.dA), tau) @ self.R
        w, V = np.linalg.eigh((Mt + Mt.conj().T) / 2)
        keep = w > la.kernel_threshold(w)
        w, V = w[keep], V[:, keep]
        Q = float(np.sum(w**self.alpha))
        inner = (V * w ** (self.alpha - 1)) @ V.conj().T
        G_tau = self.alpha * la.partial_trace(self.R @ inner @ self.R, (self.dA, self.dB), [1])
        G_tau = self.basis.conj().T @ G_tau @ self.basis
        # Daleckii-Krein divided differences of x -> x^b
        f = lam**self.b
        diff = lam[:, None] - lam[None, :]
        same = np.abs(diff) <= 1e-12 * np.maximum(lam[:, None], lam[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            L = np.where(same, self.b * lam[:, None] ** (self.b - 1), (f[:, None] - f[None, :]) / diff)
        G = U @ (L * (U.conj().T @ G_tau @ U)) @ U.conj().T
        return np.log(Q), G / Q


def _sandwiched_up_iterative(M, dA, dB, alpha, restarts, seed, tol):
    rhoB = la.partial_trace(M, (dA, dB), [1])
    es = la.eig_hermitian(rhoB)
    basis = es.eigenvectors[:, es.support_mask]
    obj = _SandwichedObjective(M, dA, dB, alpha, basis)
    k = obj.k
    sgn = 1.0 if alpha > 1 else -1.0  # minimize log Q above 1, maximize below

    def fun(x):
        W = (x[: k * k] + 1j * x[k * k :]).reshape(k, k)
        P = W @ W.conj().T
        t = np.trace(P).real
        S = P / t
        v, G = obj.value_grad(S)
        Gp = (G - np.trace(G @ S).real * np.eye(k)) / t
        GW = 2 * sgn * Gp @ W
        return sgn * v, np.concatenate([GW.real.ravel(), GW.imag.ravel()])

    rng = la.rng_from(seed)
    starts = [la.sqrtm_psd(basis.conj().T @ rhoB @ basis)]
    starts += [la.ginibre(k, k, rng) for _ in range(restarts - 1)]
    results = []
    for W0 in starts:
        x0 = np.concatenate([W0.real.ravel(), W0.imag.ravel()])
        res = scipy.optimize.minimize(
            fun, x0, jac=True, method="L-BFGS-B", options={"maxiter": 2000, "gtol": 1e-13, "ftol": 1e-16}
        )
        W = (res.x[: k * k] + 1j * res.x[k * k :]).reshape(k, k)
        S = obj.sigma(W)
        v, G = obj.value_grad(S)
        # stationarity on the simplex: sigma^1/2 (G - <G>) sigma^1/2 vanishes
        Sh = la.sqrtm_psd(S)
        resid = float(np.linalg.norm(Sh @ (G - np.trace(G @ S).real * np.eye(k)) @ Sh, 2))
        results.append((sgn * v, resid, S))
    results.sort(key=lambda r: r[0])
    best_v, resid, S = results[0]
    logQ = sgn * best_v
    spread = max(abs(r[0] - best_v) for r in results) / abs(alpha - 1)
    sigma = basis @ S @ basis.conj().T
    return -logQ / (alpha - 1), sigma, resid, spread


def _sandwiched_value_nats(M, dA, sigma, alpha) -> float:
    val, _, _ = _minimal_nats(M, np.kron(np.eye(dA), sigma), alpha)
    return val


# ---------------------------------------------------------------- public


def conditional_renyi(
    rho,
    alpha: float,
    family: str = "sandwiched",
    arrow: str = "up",
    cut=None,
    dims=None,
    base=2,
    restarts: int = 5,
    seed: int = 0,
    tol: float = 1e-9,
) -> EntropyResult:
    """Conditional Rényi entropy of A given B.

    ``rho`` is a ``DensityOperator`` with ``cut=(A_labels, B_labels)`` or a
    matrix with ``dims=(d_A, d_B)``. The input is normalized first.
    """
    if family not in ENTROPY_FAMILIES:
        raise QitError(f"unknown entropy family {family!r}")
    if arrow not in ARROWS:
        raise QitError(f"unknown arrow {arrow!r}")
    alpha = float(alpha)
    if alpha < 0:
        raise QitError("alpha must be nonnegative")
    if family == "petz" and np.isinf(alpha):
        raise QitError("the Petz family has no order-infinity member")
    if family == "sandwiched" and alpha == 0:
        raise QitError("the sandwiched family is not evaluated at alpha = 0")
    M, dA, dB = bipartite(rho, cut, dims)
    M = la.check_psd(M).reconstruct()
    M = M / np.trace(M).real
    scale = log_scale(base)

    def out(v, method, witness=None, residual=0.0):
        return EntropyResult(v * scale, family, arrow, alpha, method, base, witness or {}, residual)

    if dB == 1:
        return out(_entropy_of_spectrum(_spectrum(M), alpha), "closed_form", {"sigma_B": np.ones((1, 1))})
    rhoB = la.partial_trace(M, (dA, dB), [1])
    if alpha == 1:
        return out(von_neumann(M, dims=(dA, dB), base="e"), "closed_form", {"sigma_B": rhoB})

    down = arrow == "down" or abs(alpha - 1) < GUARD  # near 1 the optimizer moves sigma only to second order
    if down:
        ref = np.kron(np.eye(dA), rhoB)
        if family == "petz":
            v, _, _ = _petz_nats(M, ref, alpha)
        elif np.isinf(alpha):
            v = dmax_nats(M, ref)
        else:
            v, _, _ = _minimal_nats(M, ref, alpha)
        return out(-v, "closed_form", {"sigma_B": rhoB})

    if family == "petz":
        if alpha == 0:
            Y = la.partial_trace(la.support_projector(M), (dA, dB), [1])
            w, V = np.linalg.eigh(Y)
            sigma = np.outer(V[:, -1], V[:, -1].conj())
            return out(float(np.log(w[-1])), "closed_form", {"sigma_B": sigma})
        Y = la.partial_trace(la.mpow(M, alpha), (dA, dB), [1])
        Z = la.mpow(Y, 1 / alpha)
        t = np.trace(Z).real
        return out(alpha / (1 - alpha) * np.log(t), "closed_form", {"sigma_B": Z / t})

    if np.isinf(alpha):
        r = min_entropy(M, dims=(dA, dB), base="e")
        return out(r.value, "sdp", r.witness)
    if alpha == 0.5:
        r = max_entropy(M, dims=(dA, dB), base="e")
        return out(r.value, "sdp", r.witness)
    _, sigma, resid, spread = _sandwiched_up_iterative(M, dA, dB, alpha, restarts, seed, tol)
    # report the value re-evaluated at the witness, a certified lower bound
    v = -_sandwiched_value_nats(M, dA, sigma, alpha)
    result = out(v, "iterative", {"sigma_B": sigma, "restart_spread": spread}, resid)
    if resid > 1e-6:
        raise NonConvergence(f"stationarity residual {resid:.2e} after {restarts} restarts", result)
    return result


def _min_entropy_sdp(M: np.ndarray, dA: int, dB: int, options: SolverOptions | None):
    p = SdpProblem("min")
    p.variable("sigma", dB, kind="herm", real=not np.iscomplexobj(M) or not np.any(M.imag))
    p.set_objective(lambda v: np.trace(v["sigma"]).real)
    p.add_psd(lambda v: np.kron(np.eye(dA), v["sigma"]) - M, name="dominate")
    return solve(p, options)


def min_entropy(rho, cut=None, dims=None, base=2, options: SolverOptions | None = None) -> EntropyResult:
    """``-log min{tr sigma_B : id_A (x) sigma_B >= rho_AB}``; subnormalized input is allowed.

    The witness holds the primal ``sigma_B``, the dual ``X_AB`` (with
    ``tr_A X <= id`` and ``tr(rho X)`` equal to the optimum) and the solver record.
    """
    M, dA, dB = bipartite(rho, cut, dims)
    M = la.check_psd(M).reconstruct()
    sol = _min_entropy_sdp(M, dA, dB, options)
    if sol.status != "optimal":
        raise NonConvergence(f"min-entropy SDP ended with status {sol.status}: {sol.message}", sol)
    val = -np.log(sol.primal_value)
    wit = {"sigma_B": sol.primal["sigma"], "X": sol.dual["dominate"], "solution": sol}
    return EntropyResult(val * log_scale(base), "sandwiched", "up", np.inf, "sdp", base, wit, sol.duality_gap)


def max_entropy(rho, cut=None, dims=None, base=2, options: SolverOptions | None = None) -> EntropyResult:
    """``log max_sigma F(rho_AB, id_A (x) sigma_B)`` over normalized ``sigma_B``.

    The fidelity is written as the SDP ``max Re tr X`` subject to
    ``[[rho, X], [X^dag, id (x) sigma]] >= 0``, compressed to the support of ``rho``.
    """
    M, dA, dB = bipartite(rho, cut, dims)
    es = la.check_psd(M)
    lam = es.eigenvalues[es.support_mask]
    V = es.eigenvectors[:, es.support_mask]
    r = lam.size
    if dB == 1:
        val = 2 * np.log(np.sum(np.sqrt(lam)))
        return EntropyResult(val * log_scale(base), "sandwiched", "up", 0.5, "closed_form", base, {"sigma_B": np.ones((1, 1))})
    L = np.diag(lam).astype(complex)
    p = SdpProblem("max")
    p.variable("X", 2 * r * r, kind="free")
    p.variable("sigma", dB, kind="psd")

    def xmat(v):
        x = v["X"]
        return (x[: r * r] + 1j * x[r * r :]).reshape(r, r)

    p.set_objective(lambda v: np.trace(xmat(v)).real)
    p.add_psd(
        lambda v: np.block([[L, xmat(v)], [xmat(v).conj().T, V.conj().T @ np.kron(np.eye(dA), v["sigma"]) @ V]]),
        name="fidelity",
    )
    p.add_ineq(lambda v: 1 - np.trace(v["sigma"]).real, name="trace")
    sol = solve(p, options)
    if sol.status != "optimal":
        raise NonConvergence(f"max-entropy SDP ended with status {sol.status}: {sol.message}", sol)
    val = 2 * np.log(sol.primal_value)
    sigma = sol.primal["sigma"]
    wit = {"sigma_B": sigma / np.trace(sigma).real, "solution": sol}
    return EntropyResult(val * log_scale(base), "sandwiched", "up", 0.5, "sdp", base, wit, sol.duality_gap)


def guessing_probability(rho_XB: DensityOperator, classical: str | None = None, options: SolverOptions | None = None):
    """Optimal probability of guessing X from B, with the optimal POVM on B.

    ``rho_XB`` must be a cq ``DensityOperator``; ``classical`` names the
    classical register (the first label by default).
    """
    X = classical or rho_XB.labels[0]
    weights, conds = cq_split(rho_XB, X)
    blocks = [w * c for w, c in zip(weights, conds)]
    dX, dB = len(blocks), blocks[0].shape[0]
    M = np.zeros((dX * dB, dX * dB), dtype=complex)
    for x, blk in enumerate(blocks):
        M[x * dB : (x + 1) * dB, x * dB : (x + 1) * dB] = blk
    sol = _min_entropy_sdp(M, dX, dB, options)
    if sol.status != "optimal":
        raise NonConvergence(f"guessing SDP ended with status {sol.status}: {sol.message}", sol)
    Y = sol.dual["dominate"]
    effects = [la.check_hermitian(Y[x * dB : (x + 1) * dB, x * dB : (x + 1) * dB], htol=1e-6) for x in range(dX)]
    # dual feasibility gives sum_x E_x <= id; the slack goes to the first outcome
    effects[0] = effects[0] + (np.eye(dB) - sum(effects))
    return float(sol.primal_value), effects
