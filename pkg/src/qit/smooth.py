"""Smooth entropies, the smooth max-divergence and AEP bounds.

The epsilon-ball is measured in purified distance. Smooth min-entropy is an
SDP over a smoothed purification; smooth max-entropy follows from the
duality ``H_max^eps(A|B) = -H_min^eps(A|C)`` on a purification. Classical
inputs without side information are solved exactly by one-dimensional root
finding, which also works on type classes of many iid copies.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.special
import scipy.stats

from . import linalg as la
from .divergences import dmax_nats, log_scale, variance_nats
from .entropies import _entropy_of_spectrum, conditional_renyi, max_entropy, min_entropy, von_neumann
from .errors import EpsTooLarge, LambdaTooLarge, NonConvergence, QitError, TooLarge
from .metrics import purified_distance
from .sdpsolve import SdpProblem, SolverOptions, solve
from .states import bipartite, purification_vector


def g(eps: float, base=2, variant: str = "exact") -> float:
    """Smoothing penalty ``-log(1 - sqrt(1 - eps^2))``; ``variant="simple"`` gives ``log(2/eps^2)``."""
    if not 0 < eps < 1:
        raise EpsTooLarge("g needs 0 < eps < 1")
    if variant == "simple":
        v = np.log(2 / eps**2)
    else:
        v = -np.log(-np.expm1(0.5 * np.log1p(-(eps**2))))
    return float(v * log_scale(base))


@dataclass
class SmoothingWitness:
    state: np.ndarray
    distance: float
    construction: str  # "sdp", "diagonal", "classical" or "lemma_G"
    extras: dict = field(default_factory=dict)


def _check_eps(eps: float, trace: float) -> None:
    if eps < 0 or eps >= np.sqrt(trace):
        raise EpsTooLarge(f"eps = {eps} must lie in [0, sqrt(tr rho)) = [0, {np.sqrt(trace):.6g})")


def _is_diagonal(M: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(M - np.diag(np.diag(M))), initial=0.0) <= tol)


# ---------------------------------------------------------------- classical, trivial side information


def _lse(x: np.ndarray) -> float:
    return float(scipy.special.logsumexp(x))


def _bisect(f, lo: float, hi: float, iters: int = 200) -> float:
    """Root of an increasing function on ``[lo, hi]``."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def classical_smooth_min(logp, eps: float, log_mult=None) -> tuple[float, np.ndarray]:
    """Exact ``H_min^eps`` in nats of a normalized pmf given by log-probabilities.

    ``log_mult`` holds log multiplicities when each entry stands for a class
    of equally likely outcomes. The optimizer is ``min(t, kappa p)`` with the
    cap ``t`` found by bisection. Returns the value and the log of the
    smoothed weights per class.
    """
    lp = np.asarray(logp, dtype=float)
    lm = np.zeros_like(lp) if log_mult is None else np.asarray(log_mult, dtype=float)
    keep = np.isfinite(lp)
    lp, lm = lp[keep], lm[keep]
    if eps == 0:
        return float(-lp.max()), lp
    logc = 0.5 * np.log1p(-(eps**2))
    logN = _lse(lm)

    def smoothed(logt):
        if logt + logN <= 0:
            return np.full_like(lp, logt)
        # mass constraint sum m min(t, kappa p) = 1
        lk = _bisect(lambda k: _lse(lm + np.minimum(logt, k + lp)), 0.0, logt - lp.min() + 1.0)
        return np.minimum(logt, lk + lp)

    def fid_gap(logt):
        lq = smoothed(logt)
        return _lse(lm + 0.5 * (lq + lp)) - logc

    logt = _bisect(fid_gap, lp.max() - 50.0 - logN, lp.max())
    return float(-logt), smoothed(logt)


def classical_smooth_max(logp, eps: float, log_mult=None) -> float:
    """Exact ``H_max^eps`` in nats of a normalized pmf given by log-probabilities.

    With ``q = sqrt(p~)`` the program is ``min sum q`` subject to
    ``sum q sqrt(p) >= c`` and ``sum q^2 <= 1``; its optimizer is
    proportional to ``(sqrt(p) - kappa)_+``.
    """
    lp = np.asarray(logp, dtype=float)
    lm = np.zeros_like(lp) if log_mult is None else np.asarray(log_mult, dtype=float)
    keep = np.isfinite(lp)
    lp, lm = lp[keep], lm[keep]
    la_ = lp / 2  # log sqrt(p)
    if eps == 0:
        return float(2 * _lse(lm + la_))
    logc = 0.5 * np.log1p(-(eps**2))
    top = la_.max()
    m0 = _lse(lm[la_ == top])
    if logc <= 0.5 * m0 + top:
        # all weight on the most likely class already reaches the fidelity target
        return float(2 * (logc - top))

    def parts(lk):
        on = la_ > lk
        ld = la_[on] + np.log1p(-np.exp(lk - la_[on]))  # log(sqrt(p) - kappa)
        n2 = _lse(lm[on] + 2 * ld)
        fid = _lse(lm[on] + ld + la_[on]) - 0.5 * n2
        l1 = _lse(lm[on] + ld) - 0.5 * n2
        return fid, l1

    lk = _bisect(lambda k: logc - parts(k)[0], la_.min() - 50.0, top)
    return float(2 * parts(lk)[1])


# ---------------------------------------------------------------- SDPs


def _diagonal_program(p: np.ndarray, dA: int, dB: int, eps: float, options):
    """Smoothing restricted to diagonal states, solved with 2x2 fidelity blocks."""
    P = p.reshape(dA, dB)
    idx = [(x, y) for x in range(dA) for y in range(dB) if P[x, y] > 0]
    K = len(idx)
    c = np.sqrt(1 - eps**2)
    prob = SdpProblem("min")
    prob.variable("pt", K, kind="nonneg")
    prob.variable("w", K, kind="free")
    prob.variable("s", dB, kind="free")
    prob.set_objective(lambda v: float(np.sum(v["s"])))
    for k, (x, y) in enumerate(idx):
        prob.add_psd(lambda v, k=k, pk=P[x, y]: np.array([[v["pt"][k], v["w"][k]], [v["w"][k], pk]]), name=f"fid{k}")
    prob.add_ineq(lambda v: np.array([v["s"][y] - v["pt"][k] for k, (_, y) in enumerate(idx)]), name="cap")
    prob.add_ineq(lambda v: float(np.sum(v["w"]) - c), name="fidelity")
    prob.add_ineq(lambda v: float(1 - np.sum(v["pt"])), name="trace")
    sol = solve(prob, options)
    if sol.status != "optimal":
        raise NonConvergence(f"diagonal smoothing program ended with status {sol.status}", sol)
    pt = np.zeros((dA, dB))
    for k, (x, y) in enumerate(idx):
        pt[x, y] = max(sol.primal["pt"][k], 0.0)
    return sol.primal_value, np.diag(pt.reshape(-1)).astype(complex), sol


def _is_classical_first(M: np.ndarray, dA: int, dB: int, tol: float = 1e-12) -> bool:
    T = M.reshape(dA, dB, dA, dB)
    off = sum(np.max(np.abs(T[a, :, b, :])) for a in range(dA) for b in range(dA) if a != b)
    return bool(off <= tol)


def _cq_program(M: np.ndarray, dA: int, dB: int, eps: float, options):
    """Smoothing of a state classical on A, restricted to states classical on A.

    Pinching A in its classical basis fixes ``rho`` and cannot lower the
    min-entropy, so the restriction loses nothing. Each block carries its own
    fidelity constraint ``[[rho_a, X_a], [X_a^dag, rho~_a]] >= 0``.
    """
    T = M.reshape(dA, dB, dA, dB)
    blocks = [T[a, :, a, :] for a in range(dA)]
    live = [a for a in range(dA) if np.trace(blocks[a]).real > 0]
    c = np.sqrt(1 - eps**2)
    real = not np.any(np.abs(M.imag) > 0)
    prob = SdpProblem("min")
    prob.variable("sigma", dB, kind="herm", real=real)
    for a in live:
        prob.variable(f"r{a}", dB, kind="psd", real=real)
        prob.variable(f"x{a}", 2 * dB * dB, kind="free")

    def xmat(v, a):
        x = v[f"x{a}"]
        return (x[: dB * dB] + 1j * x[dB * dB :]).reshape(dB, dB)

    prob.set_objective(lambda v: np.trace(v["sigma"]).real)
    for a in live:
        prob.add_psd(lambda v, a=a: v["sigma"] - v[f"r{a}"], name=f"dominate{a}")
        prob.add_psd(
            lambda v, a=a: np.block([[blocks[a], xmat(v, a)], [xmat(v, a).conj().T, v[f"r{a}"]]]), name=f"fid{a}"
        )
    prob.add_ineq(lambda v: sum(np.trace(xmat(v, a)).real for a in live) - c, name="overlap")
    prob.add_ineq(lambda v: 1 - sum(np.trace(v[f"r{a}"]).real for a in live), name="trace")
    sol = solve(prob, options)
    if sol.status != "optimal":
        raise NonConvergence(f"cq smoothing program ended with status {sol.status}: {sol.message}", sol)
    rt = np.zeros_like(M, dtype=complex)
    for a in live:
        rt[a * dB : (a + 1) * dB, a * dB : (a + 1) * dB] = sol.primal[f"r{a}"]
    return sol, rt


def _fidelity_program(M: np.ndarray, dA: int, dB: int, eps: float, options):
    """Smoothing with the ball written as a fidelity block on ``AB`` itself.

    Uses ``F(rho, rho~) = F(Lambda, V^dag rho~ V)`` on the support ``V`` of
    ``rho``; needs about ``3 (d_A d_B)^2`` real parameters instead of the
    purification's ``(d_A d_B r)^2``.
    """
    es = la.check_psd(M)
    lam = es.eigenvalues[es.support_mask]
    V = es.eigenvectors[:, es.support_mask]
    r, d = lam.size, M.shape[0]
    L = np.diag(lam).astype(complex)
    c = np.sqrt(1 - eps**2)
    prob = SdpProblem("min")
    prob.variable("rt", d, kind="psd")
    prob.variable("X", 2 * r * r, kind="free")
    prob.variable("sigma", dB, kind="herm")

    def xmat(v):
        x = v["X"]
        return (x[: r * r] + 1j * x[r * r :]).reshape(r, r)

    prob.set_objective(lambda v: np.trace(v["sigma"]).real)
    prob.add_psd(lambda v: np.kron(np.eye(dA), v["sigma"]) - v["rt"], name="dominate")
    prob.add_psd(lambda v: np.block([[L, xmat(v)], [xmat(v).conj().T, V.conj().T @ v["rt"] @ V]]), name="fidelity")
    prob.add_ineq(lambda v: np.trace(xmat(v)).real - c, name="overlap")
    prob.add_ineq(lambda v: 1 - np.trace(v["rt"]).real, name="trace")
    sol = solve(prob, options)
    if sol.status != "optimal":
        raise NonConvergence(f"fidelity smoothing program ended with status {sol.status}: {sol.message}", sol)
    return sol


def _smooth_min_purified(psi: np.ndarray, dA: int, dB: int, dC: int, eps: float, options):
    """``min tr sigma`` over smoothed purifications on ``A B C`` (in that order)."""
    d = dA * dB * dC
    real = not np.any(np.abs(psi.imag) > 0)
    opts = options or SolverOptions()
    nparams = (d * (d + 1) // 2 if real else d * d) + dB * dB
    if nparams > opts.max_params:
        raise TooLarge(f"smoothing SDP needs {nparams} real parameters, cap is {opts.max_params}")
    Psi = np.outer(psi, psi.conj())
    prob = SdpProblem("min")
    prob.variable("rt", d, kind="psd", real=real)
    prob.variable("sigma", dB, kind="herm", real=real)
    prob.set_objective(lambda v: np.trace(v["sigma"]).real)
    prob.add_psd(
        lambda v: np.kron(np.eye(dA), v["sigma"]) - la.partial_trace(v["rt"], (dA, dB, dC), [0, 1]), name="dominate"
    )
    prob.add_ineq(lambda v: 1 - np.trace(v["rt"]).real, name="trace")
    prob.add_ineq(lambda v: np.trace(Psi @ v["rt"]).real - (1 - eps**2), name="overlap")
    sol = solve(prob, opts)
    if sol.status != "optimal":
        raise NonConvergence(f"smooth min-entropy SDP ended with status {sol.status}: {sol.message}", sol)
    return sol


def smooth_min_entropy(
    rho, eps: float, cut=None, dims=None, base=2, method: str = "auto", options: SolverOptions | None = None
) -> tuple[float, SmoothingWitness]:
    """``H_min^eps(A|B)`` of a normalized state.

    ``method`` is ``"auto"``, ``"sdp"``, ``"fidelity"``, ``"cq"``,
    ``"diagonal"`` or ``"classical"``. ``auto`` sends diagonal inputs to the diagonal program
    (or to the exact root find when B is trivial), inputs classical on A to
    the cq program, and everything else to the purification SDP.
    """
    M, dA, dB = bipartite(rho, cut, dims)
    M = la.check_psd(M).reconstruct()
    tr = np.trace(M).real
    if abs(tr - 1) > 1e-9:
        raise QitError("smooth entropies are evaluated on normalized states")
    _check_eps(eps, tr)
    scale = log_scale(base)
    if eps == 0 and method in ("auto", "sdp"):
        r = min_entropy(M, dims=(dA, dB), base="e", options=options)
        return r.value * scale, SmoothingWitness(M, 0.0, "sdp", {"sigma_B": r.witness["sigma_B"]})
    if method == "auto":
        if _is_diagonal(M):
            method = "classical" if dB == 1 else "diagonal"
        else:
            method = "cq" if _is_classical_first(M, dA, dB) else "sdp"
    if method == "classical":
        if not _is_diagonal(M) or dB != 1:
            raise QitError("the classical route needs a diagonal state without side information")
        p = np.clip(np.diag(M).real, 0, None)
        with np.errstate(divide="ignore"):
            val, lq = classical_smooth_min(np.log(p), eps)
        pt = np.zeros_like(p)
        pt[p > 0] = np.exp(lq)
        st = np.diag(pt).astype(complex)
        return val * scale, SmoothingWitness(st, purified_distance(st, M), "classical")
    if method == "diagonal":
        if not _is_diagonal(M):
            raise QitError("the diagonal route needs a diagonal state")
        val, st, sol = _diagonal_program(np.diag(M).real, dA, dB, eps, options)
        return -np.log(val) * scale, SmoothingWitness(st, purified_distance(st, M), "diagonal", {"solution": sol})
    if method == "fidelity":
        sol = _fidelity_program(M, dA, dB, eps, options)
        rt = sol.primal["rt"]
        wit = SmoothingWitness(rt, purified_distance(rt, M), "sdp", {"sigma_B": sol.primal["sigma"], "solution": sol})
        return -np.log(sol.primal_value) * scale, wit
    if method == "cq":
        if not _is_classical_first(M, dA, dB):
            raise QitError("the cq route needs a state classical on A")
        sol, rt = _cq_program(M, dA, dB, eps, options)
        wit = SmoothingWitness(rt, purified_distance(rt, M), "sdp", {"sigma_B": sol.primal["sigma"], "solution": sol})
        return -np.log(sol.primal_value) * scale, wit
    psi, r = purification_vector(M)
    sol = _smooth_min_purified(psi, dA, dB, r, eps, options)
    rt = la.partial_trace(sol.primal["rt"], (dA, dB, r), [0, 1])
    wit = SmoothingWitness(rt, purified_distance(rt, M), "sdp", {"sigma_B": sol.primal["sigma"], "solution": sol})
    wit.extras["support_ok"] = _support_check(rt, M, dA, dB, sol.primal_value)
    return -np.log(sol.primal_value) * scale, wit


def _support_check(rt: np.ndarray, M: np.ndarray, dA: int, dB: int, tr_sigma: float) -> bool:
    """Projecting the witness onto ``supp rho_A (x) supp rho_B`` keeps it optimal and in the ball."""
    PA = la.support_projector(la.partial_trace(M, (dA, dB), [0]))
    PB = la.support_projector(la.partial_trace(M, (dA, dB), [1]))
    Pi = np.kron(PA, PB)
    proj = Pi @ rt @ Pi
    if np.trace(proj).real <= 0:
        return False
    r = min_entropy(proj, dims=(dA, dB), base="e")
    return bool(r.value >= -np.log(tr_sigma) - 1e-6 and purified_distance(proj, M) <= purified_distance(rt, M) + 1e-6)


def smooth_max_entropy(
    rho, eps: float, cut=None, dims=None, base=2, options: SolverOptions | None = None
) -> tuple[float, SmoothingWitness]:
    """``H_max^eps(A|B)`` through ``-H_min^eps(A|C)`` on a purification ``ABC``."""
    M, dA, dB = bipartite(rho, cut, dims)
    M = la.check_psd(M).reconstruct()
    tr = np.trace(M).real
    if abs(tr - 1) > 1e-9:
        raise QitError("smooth entropies are evaluated on normalized states")
    _check_eps(eps, tr)
    scale = log_scale(base)
    if eps == 0:
        r = max_entropy(M, dims=(dA, dB), base="e", options=options)
        return r.value * scale, SmoothingWitness(M, 0.0, "sdp", {"sigma_B": r.witness["sigma_B"]})
    if dB == 1 and _is_diagonal(M):
        p = np.clip(np.diag(M).real, 0, None)
        with np.errstate(divide="ignore"):
            val = classical_smooth_max(np.log(p), eps)
        return val * scale, SmoothingWitness(M, 0.0, "classical", {"note": "value only"})
    psi, r = purification_vector(M)  # order A B C
    psi_acb = la.permute_vector(psi, (dA, dB, r), (0, 2, 1))
    sol = _smooth_min_purified(psi_acb, dA, r, dB, eps, options)
    rt_ab = la.partial_trace(sol.primal["rt"], (dA, r, dB), [0, 2])
    wit = SmoothingWitness(rt_ab, purified_distance(rt_ab, M), "sdp", {"solution": sol})
    return np.log(sol.primal_value) * scale, wit


# ---------------------------------------------------------------- smooth max-divergence


def smoothing_operator(rho, sigma, lam: float, base=2) -> SmoothingWitness:
    """Smoothed state ``G rho G^dag`` with ``G = L^1/2 (L + S)^-1/2`` and ``L = b^lam sigma``.

    ``S`` is the positive part of ``rho - L``. The result satisfies
    ``rho~ <= L`` and lies within ``sqrt(2 tr S - (tr S)^2)`` of ``rho``.
    """
    R, Sg = la.as_matrix(rho), la.as_matrix(sigma)
    lam_n = lam / log_scale(base)
    if lam_n > dmax_nats(R, Sg) + 1e-9:
        raise LambdaTooLarge("lambda exceeds D_max(rho||sigma)")
    L = np.exp(lam_n) * Sg
    S = la.positive_part(R - L)
    G = la.sqrtm_psd(L) @ la.mpow(L + S, -0.5)
    rt = G @ R @ G.conj().T
    rt = (rt + rt.conj().T) / 2
    ts = float(np.trace(S).real)
    bound = float(np.sqrt(max(2 * ts - ts**2, 0.0)))
    return SmoothingWitness(rt, purified_distance(rt, R), "lemma_G", {"trace_sigma": ts, "distance_bound": bound, "lambda": lam})


def lemma_g_value(rho, sigma, eps: float, base=2) -> tuple[float, SmoothingWitness]:
    """Smallest ``lambda`` whose smoothing operator certifies ``D_max^eps <= lambda``."""
    R, Sg = la.as_matrix(rho), la.as_matrix(sigma)
    top = dmax_nats(R, Sg)
    target = -np.expm1(0.5 * np.log1p(-(eps**2)))  # tr S <= 1 - sqrt(1 - eps^2)

    def trS(lmb):
        return float(np.trace(la.positive_part(R - np.exp(lmb) * Sg)).real)

    lo = top - 1.0
    while trS(lo) <= target:
        lo -= 1.0
        if lo < top - 200:
            break
    lmb = _bisect(lambda x: target - trS(x), lo, top)
    lmb = min(max(lmb, lo), top)
    if trS(lmb) > target:
        lmb = min(top, lmb + 1e-12)
    scale = log_scale(base)
    return lmb * scale, smoothing_operator(R, Sg, lmb * scale, base)


def smooth_max_divergence(
    rho, sigma, eps: float, base=2, options: SolverOptions | None = None
) -> tuple[float, SmoothingWitness]:
    """``D_max^eps(rho||sigma)`` by SDP, with the smoothing-operator value as a cross-check.

    The ball constraint is the fidelity condition
    ``[[Lambda, X], [X^dag, V^dag rho~ V]] >= 0``, ``Re tr X >= sqrt(1 - eps^2)``
    on the support ``V`` of ``rho``.
    """
    R, Sg = la.as_matrix(rho), la.as_matrix(sigma)
    tr = np.trace(R).real
    if abs(tr - 1) > 1e-9:
        raise QitError("the smooth max-divergence is evaluated on normalized states")
    _check_eps(eps, tr)
    scale = log_scale(base)
    if eps == 0:
        return dmax_nats(R, Sg) * scale, SmoothingWitness(R, 0.0, "sdp")
    es = la.check_psd(R)
    lam = es.eigenvalues[es.support_mask]
    V = es.eigenvectors[:, es.support_mask]
    r, d = lam.size, R.shape[0]
    L = np.diag(lam).astype(complex)
    c = np.sqrt(1 - eps**2)
    prob = SdpProblem("min")
    prob.variable("rt", d, kind="psd")
    prob.variable("X", 2 * r * r, kind="free")
    prob.variable("t", 1, kind="free")

    def xmat(v):
        x = v["X"]
        return (x[: r * r] + 1j * x[r * r :]).reshape(r, r)

    prob.set_objective(lambda v: float(v["t"][0]))
    prob.add_psd(lambda v: v["t"][0] * Sg - v["rt"], name="dominate")
    prob.add_psd(lambda v: np.block([[L, xmat(v)], [xmat(v).conj().T, V.conj().T @ v["rt"] @ V]]), name="fidelity")
    prob.add_ineq(lambda v: np.trace(xmat(v)).real - c, name="overlap")
    prob.add_ineq(lambda v: 1 - np.trace(v["rt"]).real, name="trace")
    sol = solve(prob, options)
    if sol.status != "optimal":
        raise NonConvergence(f"smooth max-divergence SDP ended with status {sol.status}: {sol.message}", sol)
    rt = sol.primal["rt"]
    gval, gwit = lemma_g_value(R, Sg, eps, base)
    wit = SmoothingWitness(rt, purified_distance(rt, R), "sdp", {"solution": sol, "lemma_G_value": gval, "lemma_G": gwit})
    return float(np.log(sol.primal_value)) * scale, wit


# ---------------------------------------------------------------- AEP


@dataclass
class AepRow:
    n: int
    lower_bound: float  # Rényi lower bound on H_min^eps / n
    exact_min: float  # H_min^eps / n, nan when not computable
    upper_bound: float  # converse upper bound on H_min^eps / n
    second_order_ref: float
    exact_max: float = np.nan  # H_max^eps / n, nan when not computable
    upper_max: float = np.nan  # Rényi upper bound on H_max^eps / n


def _iid_classes(p: np.ndarray, n: int):
    """Log-probabilities and log multiplicities of type classes of ``p^n``."""
    p = p[p > 0]
    if p.size == 1:
        return np.zeros(1), np.zeros(1)
    if p.size != 2:
        raise TooLarge("type-class enumeration is implemented for binary alphabets")
    k = np.arange(n + 1)
    lp = k * np.log(p[0]) + (n - k) * np.log(p[1])
    lm = scipy.special.gammaln(n + 1) - scipy.special.gammaln(k + 1) - scipy.special.gammaln(n - k + 1)
    return lp, lm


def _renyi_per_copy(M, dA, dB, alpha) -> float:
    if dB == 1:
        return _entropy_of_spectrum(np.clip(np.linalg.eigvalsh(M), 0, None), alpha)
    return conditional_renyi(M, alpha, "sandwiched", "up", dims=(dA, dB), base="e").value


def aep_rates(
    rho,
    eps: float,
    n_list,
    cut=None,
    dims=None,
    base=2,
    alphas=None,
    options: SolverOptions | None = None,
) -> list[AepRow]:
    """Per-copy bounds on the smooth entropies of ``rho^{(x) n}`` for each ``n``.

    Exact values come from type classes (diagonal input, trivial B, binary
    alphabet) or from the SDP when ``rho^{(x) n}`` fits the solver cap;
    otherwise they are ``nan``.
    """
    M, dA, dB = bipartite(rho, cut, dims)
    M = la.check_psd(M).reconstruct()
    if not 0 < eps < 0.5:
        raise EpsTooLarge("AEP bounds use eps in (0, 1/2) so that the converse with eps' = eps applies")
    scale = log_scale(base)
    hi_grid = np.array(alphas) if alphas is not None else np.linspace(1.01, 2.0, 100)
    lo_grid = hi_grid / (2 * hi_grid - 1)  # dual orders in (1/2, 1)
    Hhi = np.array([_renyi_per_copy(M, dA, dB, a) for a in hi_grid])
    Hlo = np.array([_renyi_per_copy(M, dA, dB, b) for b in lo_grid])
    H = von_neumann(M, dims=(dA, dB), base="e")
    V = variance_nats(M, np.kron(np.eye(dA), la.partial_trace(M, (dA, dB), [1])))
    gg = g(eps, base="e")
    classical = dB == 1 and _is_diagonal(M)
    rows = []
    for n in n_list:
        lower = float(np.max(Hhi - gg / (n * (hi_grid - 1))))
        upper_max = float(np.min(Hlo + gg / (n * (hi_grid - 1))))
        upper = upper_max + float(-np.log1p(-((2 * eps) ** 2))) / n
        second = H + np.sqrt(V / n) * scipy.stats.norm.ppf(eps**2)
        ex_min = ex_max = np.nan
        if classical:
            lp, lm = _iid_classes(np.clip(np.diag(M).real, 0, None), n)
            ex_min = classical_smooth_min(lp, eps, lm)[0] / n
            ex_max = classical_smooth_max(lp, eps, lm) / n
        else:
            try:
                Mn = M
                for _ in range(n - 1):
                    Mn = np.kron(Mn, M)
                # regroup A^n B^n
                order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
                Mn = la.permute_systems(Mn, [dA, dB] * n, order)
                ex_min = smooth_min_entropy(Mn, eps, dims=(dA**n, dB**n), base="e", options=options)[0] / n
                ex_max = smooth_max_entropy(Mn, eps, dims=(dA**n, dB**n), base="e", options=options)[0] / n
            except TooLarge:
                pass
        rows.append(
            AepRow(n, lower * scale, ex_min * scale, upper * scale, second * scale, ex_max * scale, upper_max * scale)
        )
    return rows


AEP_COLUMNS = ("n", "lower_bound", "exact_or_NA", "upper_bound", "second_order_ref", "exact_max_or_NA", "upper_max")


def write_aep_csv(rows: list[AepRow], path) -> None:
    def fmt(x):
        return "NA" if isinstance(x, float) and np.isnan(x) else f"{x:.12g}"

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(AEP_COLUMNS)
        for r in rows:
            w.writerow([r.n, fmt(r.lower_bound), fmt(r.exact_min), fmt(r.upper_bound), fmt(r.second_order_ref), fmt(r.exact_max), fmt(r.upper_max)])
