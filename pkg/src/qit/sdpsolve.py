"""Small dense semidefinite programs with primal and dual certificates.

A problem is described in terms of named matrix variables and affine maps
written as ordinary Python functions of those variables::

    p = SdpProblem("min")
    p.variable("sigma", 2)                      # Hermitian psd 2x2 block
    p.set_objective(lambda v: np.trace(v["sigma"]))
    p.add_psd(lambda v: v["sigma"] - rho, name="dominate")
    sol = solve(p)

Each map is evaluated once at zero and once per real coordinate of the
variables, which turns the problem into the standard conic form

    minimize c'x  subject to  G x + s = h,  s in K,  A x = b

that ``cvxopt.solvers.conelp`` solves with a primal-dual interior point method
using Nesterov-Todd scaling. Complex Hermitian constraints are embedded as
real symmetric ``[[Re, -Im], [Im, Re]]`` blocks, and their dual matrices are
mapped back so that ``Re tr(M Y)`` equals the pairing of the embedded blocks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import NonConvergence, QitError, TooLarge

KINDS = ("psd", "herm", "nonneg", "free")


@dataclass(frozen=True)
class SolverOptions:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iter: int = 200
    max_params: int = 4096
    raise_on_failure: bool = False


@dataclass
class _Var:
    name: str
    dim: int
    kind: str
    real: bool

    @property
    def nparams(self) -> int:
        if self.kind in ("nonneg", "free"):
            return self.dim
        return self.dim * (self.dim + 1) // 2 if self.real else self.dim**2


@dataclass
class _Con:
    name: str
    fn: Callable
    kind: str  # "psd", "eq", "ineq"


@dataclass
class SdpSolution:
    primal_value: float
    dual_value: float
    primal: dict
    dual: dict
    duality_gap: float
    status: str  # "optimal", "max_iter", "infeasible"
    iterations: int
    sense: str
    message: str = ""

    @property
    def value(self) -> float:
        return self.primal_value

    @property
    def bounds(self) -> tuple[float, float]:
        """Interval guaranteed to contain the optimum (when ``status == "optimal"``)."""
        lo, hi = sorted((self.primal_value, self.dual_value))
        return lo, hi


def _herm_basis(d: int, real: bool) -> np.ndarray:
    """Orthonormal basis of Hermitian (or real symmetric) d x d matrices under Re tr(A^dag B)."""
    mats = []
    for i in range(d):
        E = np.zeros((d, d), dtype=complex)
        E[i, i] = 1
        mats.append(E)
    s = 1 / np.sqrt(2)
    for i in range(d):
        for j in range(i + 1, d):
            E = np.zeros((d, d), dtype=complex)
            E[i, j] = E[j, i] = s
            mats.append(E)
            if not real:
                E = np.zeros((d, d), dtype=complex)
                E[i, j], E[j, i] = 1j * s, -1j * s
                mats.append(E)
    return np.array(mats)


def _herm_coords(H: np.ndarray) -> np.ndarray:
    """Real coordinates of a Hermitian matrix in the basis of :func:`_herm_basis` (complex case)."""
    d = H.shape[0]
    out = [H[i, i].real for i in range(d)]
    r2 = np.sqrt(2)
    for i in range(d):
        for j in range(i + 1, d):
            out.append(r2 * H[i, j].real)
            out.append(r2 * H[i, j].imag)
    return np.array(out)


class SdpProblem:
    """Container for variables, objective and constraints of an SDP."""

    def __init__(self, sense: str = "min"):
        if sense not in ("min", "max"):
            raise QitError("sense must be 'min' or 'max'")
        self.sense = sense
        self.vars: list[_Var] = []
        self.cons: list[_Con] = []
        self.objective: Callable | None = None

    def variable(self, name: str, dim: int, kind: str = "psd", real: bool = False) -> str:
        """Declare a block. ``psd``/``herm`` are matrices, ``nonneg``/``free`` are real vectors."""
        if kind not in KINDS:
            raise QitError(f"unknown variable kind {kind!r}")
        if any(v.name == name for v in self.vars):
            raise QitError(f"variable {name!r} declared twice")
        self.vars.append(_Var(name, int(dim), kind, real))
        return name

    def set_objective(self, fn: Callable) -> None:
        self.objective = fn

    def add_psd(self, fn: Callable, name: str | None = None) -> None:
        self.cons.append(_Con(name or f"psd{len(self.cons)}", fn, "psd"))

    def add_eq(self, fn: Callable, name: str | None = None) -> None:
        self.cons.append(_Con(name or f"eq{len(self.cons)}", fn, "eq"))

    def add_ineq(self, fn: Callable, name: str | None = None) -> None:
        """Constraint ``fn(vars) >= 0`` for a real scalar or vector."""
        self.cons.append(_Con(name or f"ineq{len(self.cons)}", fn, "ineq"))

    @property
    def nparams(self) -> int:
        return sum(v.nparams for v in self.vars)

    # -- lowering
    def _unpack(self, x: np.ndarray) -> dict:
        out, k = {}, 0
        for v in self.vars:
            n = v.nparams
            seg = x[k : k + n]
            if v.kind in ("nonneg", "free"):
                out[v.name] = np.array(seg, dtype=float)
            else:
                B = self._bases[v.name]
                out[v.name] = np.tensordot(seg, B, axes=1)
            k += n
        return out

    def _unit_values(self, j: int) -> dict:
        x = np.zeros(self.nparams)
        x[j] = 1.0
        return self._unpack(x)

    def lower(self) -> dict:
        """Standard-form data (numpy arrays) for the conic solver."""
        self._bases = {v.name: _herm_basis(v.dim, v.real) for v in self.vars if v.kind in ("psd", "herm")}
        N = self.nparams
        if self.objective is None:
            raise QitError("objective not set")
        zero = self._unpack(np.zeros(N))
        units = [self._unit_values(j) for j in range(N)]

        sign = 1.0 if self.sense == "min" else -1.0
        c0 = float(np.real(self.objective(zero)))
        c = np.array([float(np.real(self.objective(u))) - c0 for u in units]) * sign

        cons = list(self.cons)
        for v in self.vars:
            if v.kind == "psd":
                cons.append(_Con(f"{v.name}>=0", (lambda vv, n=v.name: vv[n]), "psd"))
            elif v.kind == "nonneg":
                cons.append(_Con(f"{v.name}>=0", (lambda vv, n=v.name: vv[n]), "ineq"))

        lin_rows, lin_h, lin_meta = [], [], []
        sdp_blocks, sdp_meta = [], []
        eq_rows, eq_b, eq_meta = [], [], []
        for con in cons:
            f0 = np.asarray(con.fn(zero))
            cols = [np.asarray(con.fn(u)) - f0 for u in units]
            if con.kind == "ineq":
                f0r = np.atleast_1d(np.real(f0)).astype(float)
                M = np.array([np.atleast_1d(np.real(col)) for col in cols]).reshape(N, -1).T
                lin_rows.append(-M)
                lin_h.append(f0r)
                lin_meta.append((con.name, f0r.size))
            elif con.kind == "eq":
                if f0.ndim == 2:
                    f0v = _herm_coords(f0) if np.iscomplexobj(f0) else _herm_coords(f0.astype(complex))
                    M = np.array([_herm_coords(np.asarray(col, dtype=complex)) for col in cols]).T
                else:
                    f0v = np.atleast_1d(np.real(f0)).astype(float)
                    M = np.array([np.atleast_1d(np.real(col)) for col in cols]).reshape(N, -1).T
                eq_rows.append(M)
                eq_b.append(-f0v)
                eq_meta.append((con.name, f0v.size))
            else:
                m = f0.shape[0]
                is_complex = np.iscomplexobj(f0) and (
                    np.any(np.abs(f0.imag) > 0) or any(np.any(np.abs(np.imag(col)) > 0) for col in cols)
                )
                if is_complex:
                    emb = lambda H: np.block([[H.real, -H.imag], [H.imag, H.real]])
                    F0 = emb(f0)
                    Ms = [emb(col) for col in cols]
                else:
                    F0 = np.real(f0)
                    Ms = [np.real(col) for col in cols]
                size = F0.shape[0]
                Gk = -np.array([Mk.reshape(-1, order="F") for Mk in Ms]).T
                sdp_blocks.append((Gk, F0.reshape(-1, order="F"), size))
                sdp_meta.append((con.name, m, is_complex))

        G_parts, h_parts = [], []
        if lin_rows:
            G_parts.append(np.vstack(lin_rows))
            h_parts.append(np.concatenate(lin_h))
        for Gk, hk, _ in sdp_blocks:
            G_parts.append(Gk)
            h_parts.append(hk)
        G = np.vstack(G_parts) if G_parts else np.zeros((0, N))
        h = np.concatenate(h_parts) if h_parts else np.zeros(0)
        A = np.vstack(eq_rows) if eq_rows else np.zeros((0, N))
        b = np.concatenate(eq_b) if eq_b else np.zeros(0)
        return dict(
            c=c, c0=c0, sign=sign, G=G, h=h, A=A, b=b,
            dims={"l": int(sum(n for _, n in lin_meta)), "q": [], "s": [s for _, _, s in sdp_blocks]},
            lin_meta=lin_meta, sdp_meta=sdp_meta, eq_meta=eq_meta,
        )

    def dump_json(self, path) -> None:
        """Write the lowered standard form for offline debugging."""
        d = self.lower()
        out = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in d.items()}
        with open(path, "w") as fh:
            json.dump(out, fh)


def _independent_rows(A: np.ndarray, b: np.ndarray, tol: float = 1e-10):
    if A.shape[0] == 0:
        return A, b, np.zeros(0, dtype=int)
    _, R, piv = scipy.linalg.qr(A.T, pivoting=True, mode="economic")
    diag = np.abs(np.diag(R))
    r = int(np.sum(diag > tol * max(diag.max(initial=0.0), 1.0)))
    keep = np.sort(piv[:r])
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.max(np.abs(A @ x - b), initial=0.0) > 1e-8 * max(1.0, np.max(np.abs(b), initial=0.0)):
        raise QitError("equality constraints are inconsistent")
    return A[keep], b[keep], keep


def _from_embedded(Z: np.ndarray, m: int, is_complex: bool) -> np.ndarray:
    Z = np.tril(Z) + np.tril(Z, -1).T
    if not is_complex:
        return Z.astype(complex)
    Z11, Z12, Z21, Z22 = Z[:m, :m], Z[:m, m:], Z[m:, :m], Z[m:, m:]
    S = Z11 + Z22
    K = Z21 - Z12
    return (S + S.T) / 2 + 1j * (K - K.T) / 2


def _audit(data, A, b, keep, res, problem):
    """Recompute objective values, residuals and dual blocks from a backend result."""
    x = np.array(res["x"]).reshape(-1)
    z = np.array(res["z"]).reshape(-1)
    y = np.array(res["y"]).reshape(-1) if A.shape[0] else np.zeros(0)
    c, h, G, sign, c0 = data["c"], data["h"], data["G"], data["sign"], data["c0"]
    pobj = float(c @ x)
    dobj = float(-h @ z - (b @ y if y.size else 0.0))
    s = h - G @ x
    lin_n = data["dims"]["l"]
    pfeas = [float(-min(s[:lin_n].min(initial=0.0), 0.0))]
    dfeas = [float(-min(z[:lin_n].min(initial=0.0), 0.0))]
    duals = {}
    k = 0
    for name, n in data["lin_meta"]:
        duals[name] = z[k : k + n] if n > 1 else float(z[k])
        k += n
    off = lin_n
    zsym = z.copy()
    for size, (name, m, is_c) in zip(data["dims"]["s"], data["sdp_meta"]):
        S = s[off : off + size * size].reshape(size, size, order="F")
        Zm = z[off : off + size * size].reshape(size, size, order="F")
        Zs = np.tril(Zm) + np.tril(Zm, -1).T
        zsym[off : off + size * size] = Zs.reshape(-1, order="F")
        pfeas.append(float(-min(np.linalg.eigvalsh((S + S.T) / 2)[0], 0.0)))
        dfeas.append(float(-min(np.linalg.eigvalsh(Zs)[0], 0.0)))
        duals[name] = _from_embedded(Zm, m, is_c)
        off += size * size
    # backend only reads lower triangles, so pair against the symmetrized dual
    dobj = float(-h @ zsym - (b @ y if y.size else 0.0))
    eq_res = float(np.max(np.abs(data["A"] @ x - data["b"]), initial=0.0))
    dres = G.T @ zsym + (A.T @ y if y.size else 0.0) + c
    dual_res = float(np.max(np.abs(dres), initial=0.0))
    yfull = np.zeros(data["A"].shape[0])
    yfull[keep] = y
    k = 0
    for name, n in data["eq_meta"]:
        duals[name] = yfull[k : k + n]
        k += n
    if sign > 0:
        primal_value, dual_value = pobj + c0, dobj + c0
    else:
        primal_value, dual_value = -pobj + c0, -dobj + c0
    return dict(
        x=x, primal_value=primal_value, dual_value=dual_value, duals=duals,
        gap=abs(primal_value - dual_value), pfeas=max(max(pfeas), eq_res), dfeas=max(max(dfeas), dual_res),
    )


# Interior point iterates on the complex embedding lose accuracy when pushed far
# below 1e-9, so tolerances are tried from moderate to tight and the first
# certified result wins.
_LADDER = (1e-9, 3e-9, 1e-10, 1e-11, 1e-7)
_ATTEMPT_ITERS = 50  # a healthy run needs far fewer; stalls are cut short


def solve(problem: SdpProblem, options: SolverOptions | None = None, **kw) -> SdpSolution:
    """Solve ``problem`` and return values, witnesses and dual certificates."""
    import cvxopt
    from cvxopt import solvers

    opts = options or SolverOptions(**kw)
    if problem.nparams > opts.max_params:
        raise TooLarge(f"{problem.nparams} real parameters exceed the cap of {opts.max_params}")
    data = problem.lower()
    A, b, keep = _independent_rows(data["A"], data["b"])
    mat = lambda a: cvxopt.matrix(np.ascontiguousarray(a, dtype=float))
    args = [mat(data["c"].reshape(-1, 1)), mat(data["G"]), mat(data["h"].reshape(-1, 1)), data["dims"]]
    if A.shape[0]:
        args += [mat(A), mat(b.reshape(-1, 1))]

    best, best_key, infeasible, iters = None, None, False, 0
    for tol in _LADDER:
        cv_opts = {"show_progress": False, "maxiters": min(opts.max_iter, _ATTEMPT_ITERS), "abstol": tol, "reltol": tol, "feastol": tol}
        try:
            res = solvers.conelp(*args, options=cv_opts)
        except (ArithmeticError, ValueError):
            continue
        iters += int(res.get("iterations", 0))
        if res["status"] in ("primal infeasible", "dual infeasible"):
            infeasible = True
            break
        if res["x"] is None or res["z"] is None:
            continue
        a = _audit(data, A, b, keep, res, problem)
        scale = max(1.0, abs(a["primal_value"]))
        ok = a["gap"] <= opts.gap_tol * scale and a["pfeas"] <= opts.feas_tol and a["dfeas"] <= opts.feas_tol * scale
        key = (not ok, a["gap"] + a["pfeas"] + a["dfeas"])
        if best_key is None or key < best_key:
            best, best_key = a, key
        if ok:
            break

    if best is None:
        status = "infeasible" if infeasible else "max_iter"
        sol = SdpSolution(np.nan, np.nan, {}, {}, np.inf, status, iters, problem.sense, "no usable iterate")
    else:
        status = "optimal" if not best_key[0] else "max_iter"
        sol = SdpSolution(
            primal_value=best["primal_value"],
            dual_value=best["dual_value"],
            primal=problem._unpack(best["x"]),
            dual=best["duals"],
            duality_gap=best["gap"],
            status=status,
            iterations=iters,
            sense=problem.sense,
            message=f"primal residual {best['pfeas']:.2e}, dual residual {best['dfeas']:.2e}",
        )
    if status != "optimal" and opts.raise_on_failure:
        raise NonConvergence(f"SDP not certified: {sol.message}, gap {sol.duality_gap:.2e}", sol)
    return sol
