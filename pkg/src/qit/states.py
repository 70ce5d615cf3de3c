"""Density operators, channels, POVMs and classical-quantum structure.

Subsystems are addressed by label. A ``DensityOperator`` with labels
``("A", "B")`` and dims ``(2, 3)`` stores its matrix in the ``A (x) B`` order,
and every partial operation takes labels rather than positions.

The Choi matrix of a map ``E: A -> B`` is ``sum_ij |i><j| (x) E(|i><j|)`` with
the reference copy ``A'`` as the first factor, so it has trace ``d_A`` for a
trace-preserving map.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import linalg as la
from .errors import BadDims, DimensionMismatch, NotClassical, NotCP, NotPSD, QitError

TTOL = 1e-9  # trace normalization
CTOL = 1e-10  # classicality (off-diagonal mass)


def _default_labels(n: int) -> tuple[str, ...]:
    base = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    return tuple(base[i] if i < 26 else f"S{i}" for i in range(n))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A positive semidefinite matrix with trace in ``(0, 1]``, tagged with subsystems."""

    matrix: np.ndarray
    dims: tuple[int, ...]
    labels: tuple[str, ...] = ()
    classical: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        M = la.as_matrix(self.matrix)
        dims = tuple(int(d) for d in self.dims)
        if int(np.prod(dims)) != M.shape[0] or M.shape[0] != M.shape[1]:
            raise DimensionMismatch(f"dims {dims} do not match matrix shape {M.shape}")
        labels = tuple(self.labels) if self.labels else _default_labels(len(dims))
        if len(labels) != len(dims) or len(set(labels)) != len(labels):
            raise DimensionMismatch(f"labels {labels} must be unique and match dims {dims}")
        es = la.check_psd(M)
        tr = float(np.sum(es.eigenvalues))
        if not 0 < tr <= 1 + TTOL:
            raise NotPSD(f"trace {tr:.6g} outside (0, 1]")
        classical = frozenset(self.classical)
        unknown = classical - set(labels)
        if unknown:
            raise DimensionMismatch(f"classical labels {sorted(unknown)} not among {labels}")
        H = (M + M.conj().T) / 2
        H.setflags(write=False)
        object.__setattr__(self, "matrix", H)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "classical", classical)
        for lab in classical:
            _check_classical(H, dims, labels.index(lab))

    # -- basic properties
    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    @property
    def normalized(self) -> bool:
        return abs(self.trace - 1) <= TTOL

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DimensionMismatch(f"no subsystem labelled {label!r} in {self.labels}") from None

    def dim_of(self, labels: Iterable[str]) -> int:
        return int(np.prod([self.dims[self.index(l)] for l in labels]))

    # -- structural operations
    def marginal(self, labels: Sequence[str]) -> "DensityOperator":
        """Reduced state on ``labels``, in the order given."""
        labels = list(labels)
        idx = [self.index(l) for l in labels]
        keep_sorted = sorted(idx)
        M = la.partial_trace(self.matrix, self.dims, keep_sorted)
        sub_dims = [self.dims[i] for i in keep_sorted]
        order = [keep_sorted.index(i) for i in idx]
        M = la.permute_systems(M, sub_dims, order)
        return DensityOperator(
            M,
            tuple(self.dims[i] for i in idx),
            tuple(labels),
            self.classical & set(labels),
        )

    def reorder(self, labels: Sequence[str]) -> "DensityOperator":
        if sorted(labels) != sorted(self.labels):
            raise DimensionMismatch(f"{labels} is not a permutation of {self.labels}")
        return self.marginal(labels)

    def tensor(self, other: "DensityOperator") -> "DensityOperator":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise DimensionMismatch(f"labels {sorted(clash)} appear in both factors")
        return DensityOperator(
            np.kron(self.matrix, other.matrix),
            self.dims + other.dims,
            self.labels + other.labels,
            self.classical | other.classical,
        )

    def scaled(self, t: float) -> "DensityOperator":
        return DensityOperator(t * self.matrix, self.dims, self.labels, self.classical)

    def relabel(self, labels: Sequence[str]) -> "DensityOperator":
        mapping = dict(zip(self.labels, labels))
        return DensityOperator(self.matrix, self.dims, tuple(labels), {mapping[c] for c in self.classical})

    # -- constructors
    @classmethod
    def from_matrix(cls, M, dims=None, labels=None, classical=()) -> "DensityOperator":
        M = la.as_matrix(M)
        dims = (M.shape[0],) if dims is None else tuple(dims)
        return cls(M, dims, tuple(labels) if labels else (), frozenset(classical))

    @classmethod
    def pure(cls, vec, dims=None, labels=None) -> "DensityOperator":
        v = np.asarray(vec, dtype=complex).reshape(-1)
        return cls.from_matrix(np.outer(v, v.conj()), dims or (v.size,), labels)

    @classmethod
    def maximally_mixed(cls, d: int, label: str = "A") -> "DensityOperator":
        return cls(np.eye(d) / d, (d,), (label,))

    @classmethod
    def max_entangled(cls, d: int, labels=("A", "B")) -> "DensityOperator":
        v = la.max_entangled_vector(d) / np.sqrt(d)
        return cls.pure(v, (d, d), labels)

    @classmethod
    def diagonal(cls, p, label: str = "X") -> "DensityOperator":
        p = np.asarray(p, dtype=float)
        return cls(np.diag(p).astype(complex), (p.size,), (label,), frozenset({label}))


def _check_classical(M: np.ndarray, dims, k: int) -> None:
    n = len(dims)
    T = M.reshape(tuple(dims) * 2)
    T = np.moveaxis(T, [k, n + k], [0, 1])
    d = dims[k]
    off = sum(float(np.sum(np.abs(T[i, j]))) for i in range(d) for j in range(d) if i != j)
    if off > CTOL:
        raise NotClassical(f"subsystem {k} carries off-diagonal mass {off:.3e}")


def as_density(rho, dims=None, labels=None) -> DensityOperator:
    if isinstance(rho, DensityOperator):
        return rho
    return DensityOperator.from_matrix(rho, dims, labels)


def bipartite(rho, cut=None, dims=None) -> tuple[np.ndarray, int, int]:
    """Resolve a state and a cut into ``(matrix on A (x) B, d_A, d_B)``.

    ``rho`` may be a ``DensityOperator`` together with ``cut=(A_labels, B_labels)``
    (labels outside the cut are traced out), or a plain matrix together with
    ``dims=(d_A, d_B)``. With neither, B is trivial.
    """
    if isinstance(rho, DensityOperator):
        if cut is None:
            if len(rho.labels) == 1:
                cut = ((rho.labels[0],), ())
            elif len(rho.labels) == 2:
                cut = ((rho.labels[0],), (rho.labels[1],))
            else:
                raise DimensionMismatch("a cut is required for states with more than two subsystems")
        a, b = (tuple([x] if isinstance(x, str) else x) for x in cut)
        sub = rho.marginal(list(a) + list(b))
        return np.array(sub.matrix), rho.dim_of(a), rho.dim_of(b) if b else 1
    M = la.as_matrix(rho)
    if dims is None:
        return M, M.shape[0], 1
    dA, dB = int(dims[0]), int(dims[1])
    if dA * dB != M.shape[0]:
        raise DimensionMismatch(f"dims {dims} do not match matrix of size {M.shape[0]}")
    return M, dA, dB


# ---------------------------------------------------------------- channels


@dataclass(frozen=True)
class ChoiMatrix:
    matrix: np.ndarray
    d_in: int
    d_out: int


class Channel:
    """Completely positive map given by Kraus operators ``E_k: C^{d_in} -> C^{d_out}``.

    The Kraus list is replaced by a minimal one obtained from the eigenvectors of
    the Choi matrix. Flags are computed, never taken from the caller.
    """

    def __init__(self, kraus, contractive: bool = True, minimize: bool = True):
        ks = [la.as_matrix(k) for k in kraus]
        if not ks:
            raise BadDims("a channel needs at least one Kraus operator")
        shapes = {k.shape for k in ks}
        if len(shapes) != 1:
            raise DimensionMismatch(f"Kraus operators have inconsistent shapes {shapes}")
        self.d_out, self.d_in = ks[0].shape
        if minimize:
            ks = _minimal_kraus(_choi_from_kraus(ks, self.d_in, self.d_out), self.d_in, self.d_out)
        self.kraus = tuple(ks)
        S = sum(k.conj().T @ k for k in ks)
        ev = np.linalg.eigvalsh((S + S.conj().T) / 2)
        self.trace_preserving = bool(np.max(np.abs(S - np.eye(self.d_in))) <= TTOL)
        self.trace_non_increasing = bool(ev[-1] <= 1 + TTOL)
        if contractive and not self.trace_non_increasing:
            raise QitError(f"map increases trace: largest eigenvalue of sum E^dag E is {ev[-1]:.6g}")
        U = sum(k @ k.conj().T for k in ks)
        eu = np.linalg.eigvalsh((U + U.conj().T) / 2)
        self.unital = bool(self.d_in == self.d_out and np.max(np.abs(U - np.eye(self.d_out))) <= TTOL)
        self.sub_unital = bool(eu[-1] <= 1 + TTOL)

    def __call__(self, M) -> np.ndarray:
        M = np.asarray(M)
        return sum(k @ M @ k.conj().T for k in self.kraus)

    def adjoint(self) -> "Channel":
        return Channel([k.conj().T for k in self.kraus], contractive=False, minimize=False)

    def compose(self, other: "Channel") -> "Channel":
        """``self`` after ``other``."""
        return Channel([a @ b for a in self.kraus for b in other.kraus], contractive=False)

    def on_subsystem(self, dims: Sequence[int], k: int) -> list[np.ndarray]:
        """Kraus operators of ``id (x) E (x) id`` acting on factor ``k``."""
        if dims[k] != self.d_in:
            raise DimensionMismatch(f"channel input {self.d_in} does not match subsystem dim {dims[k]}")
        left = np.eye(int(np.prod(dims[:k])))
        right = np.eye(int(np.prod(dims[k + 1 :])))
        return [np.kron(np.kron(left, e), right) for e in self.kraus]

    @classmethod
    def identity(cls, d: int) -> "Channel":
        return cls([np.eye(d)])

    @classmethod
    def unitary(cls, U) -> "Channel":
        return cls([U], minimize=False)

    @classmethod
    def trace_out(cls, d: int) -> "Channel":
        return cls([np.eye(d)[i : i + 1, :] for i in range(d)])

    @classmethod
    def depolarizing(cls, d: int, p: float = 1.0) -> "Channel":
        """``rho -> (1-p) rho + p tr(rho) id/d``."""
        ks = [np.sqrt(1 - p) * np.eye(d)] if p < 1 else []
        for i in range(d):
            for j in range(d):
                E = np.zeros((d, d))
                E[i, j] = 1
                ks.append(np.sqrt(p / d) * E)
        return cls(ks)


def _choi_from_kraus(kraus, d_in: int, d_out: int) -> np.ndarray:
    J = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for k in kraus:
        v = k.T.reshape(-1)  # v[i*d_out + b] = k[b, i]
        J += np.outer(v, v.conj())
    return J


def _minimal_kraus(J: np.ndarray, d_in: int, d_out: int) -> list[np.ndarray]:
    es = la.eig_hermitian((J + J.conj().T) / 2)
    scale = max(float(np.max(np.abs(es.eigenvalues))), 1e-300)
    if es.eigenvalues[0] < -1e-9 * max(scale, 1.0):
        raise NotCP(f"Choi matrix has eigenvalue {es.eigenvalues[0]:.3e}")
    keep = es.eigenvalues > 1e-12 * scale
    ks = []
    for lam, v in zip(es.eigenvalues[keep][::-1], es.eigenvectors[:, keep].T[::-1]):
        ks.append(np.sqrt(lam) * v.reshape(d_in, d_out).T)
    return ks or [np.zeros((d_out, d_in), dtype=complex)]


def choi_of_channel(ch: Channel) -> ChoiMatrix:
    return ChoiMatrix(_choi_from_kraus(ch.kraus, ch.d_in, ch.d_out), ch.d_in, ch.d_out)


def channel_of_choi(choi: ChoiMatrix, contractive: bool = False) -> Channel:
    """Invert the Choi isomorphism; raises ``NotCP`` for a non-positive Choi matrix."""
    J = la.check_hermitian(choi.matrix)
    return Channel(_minimal_kraus(J, choi.d_in, choi.d_out), contractive=contractive, minimize=False)


def apply_choi(choi: ChoiMatrix, rho) -> np.ndarray:
    """Evaluate the map via ``tr_A'(gamma (rho^T (x) id_B))``."""
    rho = np.asarray(rho)
    prod = choi.matrix @ np.kron(rho.T, np.eye(choi.d_out))
    return la.partial_trace(prod, (choi.d_in, choi.d_out), [1])


def stinespring(ch: Channel) -> tuple[np.ndarray, int]:
    """Operator ``L: A -> B (x) C`` with ``E(x) = tr_C(L x L^dag)``; C indexes Kraus operators."""
    if not ch.trace_non_increasing:
        raise NotCP("Stinespring contraction requires a trace non-increasing map")
    env = len(ch.kraus)
    L = np.zeros((ch.d_out * env, ch.d_in), dtype=complex)
    for k, E in enumerate(ch.kraus):
        L[k::env, :] = E
    return L, env


def apply_channel(ch: Channel, rho: DensityOperator, on: str | None = None, new_label: str | None = None) -> DensityOperator:
    """Apply ``ch`` to subsystem ``on`` (identity elsewhere)."""
    if on is None:
        if len(rho.labels) != 1:
            raise DimensionMismatch("name the subsystem the channel acts on")
        on = rho.labels[0]
    k = rho.index(on)
    ks = ch.on_subsystem(rho.dims, k)
    out = sum(E @ rho.matrix @ E.conj().T for E in ks)
    dims = list(rho.dims)
    dims[k] = ch.d_out
    labels = list(rho.labels)
    if new_label is not None:
        labels[k] = new_label
    classical = set(rho.classical) - {on}
    return DensityOperator(out, tuple(dims), tuple(labels), frozenset(classical))


# ---------------------------------------------------------------- measurements


@dataclass(frozen=True, eq=False)
class Povm:
    effects: tuple
    labels: tuple = ()

    def __post_init__(self):
        effs = tuple(la.check_hermitian(e) for e in self.effects)
        if not effs:
            raise BadDims("a POVM needs at least one effect")
        d = effs[0].shape[0]
        for e in effs:
            if e.shape != (d, d):
                raise DimensionMismatch("effects must share one dimension")
            ev = np.linalg.eigvalsh(e)
            if ev[0] < -1e-9 or ev[-1] > 1 + 1e-9:
                raise NotPSD("effect outside the operator interval [0, id]")
        if np.max(np.abs(sum(effs) - np.eye(d))) > TTOL:
            raise NotPSD("effects do not sum to the identity")
        object.__setattr__(self, "effects", effs)
        object.__setattr__(self, "labels", tuple(self.labels) or tuple(range(len(effs))))

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @classmethod
    def from_basis(cls, U) -> "Povm":
        """Projective measurement in the orthonormal basis given by the columns of ``U``."""
        U = np.asarray(U, dtype=complex)
        return cls(tuple(np.outer(U[:, x], U[:, x].conj()) for x in range(U.shape[1])))

    def probabilities(self, rho) -> np.ndarray:
        rho = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
        return np.array([np.trace(rho @ e).real for e in self.effects])


def measurement_channel(povm: Povm) -> Channel:
    """Map ``rho -> sum_x tr(rho M_x) |x><x|``."""
    n = len(povm.effects)
    ks = []
    for x, e in enumerate(povm.effects):
        es = la.eig_hermitian(e)
        for mu, v in zip(es.eigenvalues, es.eigenvectors.T):
            if mu > 1e-14:
                K = np.zeros((n, povm.dim), dtype=complex)
                K[x, :] = np.sqrt(mu) * v.conj()
                ks.append(K)
    return Channel(ks)


# ---------------------------------------------------------------- classical-quantum states


def cq_state(weights, conditionals, labels=("X", "B")) -> DensityOperator:
    """``sum_x w_x |x><x| (x) rho_x`` with the classical register first."""
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or w.sum() > 1 + TTOL:
        raise QitError("weights must be nonnegative with total at most one")
    conds = [np.asarray(c, dtype=complex) for c in conditionals]
    if len(conds) != w.size:
        raise DimensionMismatch("one conditional state per weight required")
    d = conds[0].shape[0]
    for c in conds:
        if c.shape != (d, d) or abs(np.trace(c).real - 1) > TTOL:
            raise QitError("conditional states must be normalized and share a dimension")
    M = sum(np.kron(np.diag(np.eye(w.size)[x]), w[x] * c) for x, c in enumerate(conds))
    return DensityOperator(M, (w.size, d), tuple(labels), frozenset({labels[0]}))


def cq_split(rho: DensityOperator, classical: str) -> tuple[np.ndarray, list[np.ndarray]]:
    """Inverse of :func:`cq_state`: weights and normalized conditional states of the rest."""
    rest = [l for l in rho.labels if l != classical]
    r = rho.reorder([classical] + rest)
    _check_classical(r.matrix, r.dims, 0)
    dX = r.dims[0]
    dR = r.dim // dX
    T = r.matrix.reshape(dX, dR, dX, dR)
    w = np.array([np.trace(T[x, :, x, :]).real for x in range(dX)])
    conds = []
    for x in range(dX):
        blk = T[x, :, x, :]
        conds.append(blk / w[x] if w[x] > 1e-15 else np.eye(dR) / dR)
    return w, conds


# ---------------------------------------------------------------- purification


def purification_vector(M, kernel_rel: float = la.TOL.kernel_rel) -> tuple[np.ndarray, int]:
    """Vector ``sum_i sqrt(lam_i) |e_i> (x) |i>`` on ``A (x) A'`` with ``A'`` of dimension rank(M)."""
    es = la.check_psd(M)
    keep = es.eigenvalues > la.kernel_threshold(es.eigenvalues, kernel_rel)
    lam = es.eigenvalues[keep][::-1]
    V = es.eigenvectors[:, keep][:, ::-1]
    r = lam.size
    psi = (V * np.sqrt(lam)).reshape(-1)  # index a*r + i
    return psi, r


def purify(rho: DensityOperator, label: str | None = None) -> DensityOperator:
    psi, r = purification_vector(rho.matrix)
    label = label or "R"
    while label in rho.labels:
        label += "'"
    return DensityOperator.pure(psi, rho.dims + (r,), rho.labels + (label,))


# ---------------------------------------------------------------- file format


def _decode_matrix(rows) -> np.ndarray:
    a = np.asarray(rows, dtype=float)
    if a.ndim != 3 or a.shape[-1] != 2:
        raise BadDims("matrix entries must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def _encode_matrix(M) -> list:
    M = np.asarray(M, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def state_from_json(obj) -> DensityOperator:
    if isinstance(obj, (str, Path)):
        obj = json.loads(Path(obj).read_text())
    try:
        M = _decode_matrix(obj["matrix"])
        dims = tuple(obj.get("dims", (M.shape[0],)))
    except (KeyError, TypeError, ValueError) as exc:
        raise BadDims(f"malformed state description: {exc}") from None
    return DensityOperator(M, dims, tuple(obj.get("labels", ())), frozenset(obj.get("classical", ())))


def state_to_json(rho: DensityOperator) -> dict:
    out = {"dims": list(rho.dims), "labels": list(rho.labels), "matrix": _encode_matrix(rho.matrix)}
    if rho.classical:
        out["classical"] = sorted(rho.classical)
    return out


def channel_from_json(obj) -> Channel:
    if isinstance(obj, (str, Path)):
        obj = json.loads(Path(obj).read_text())
    try:
        ks = [_decode_matrix(k) for k in obj["kraus"]]
        d_in, d_out = int(obj["dim_in"]), int(obj["dim_out"])
    except (KeyError, TypeError, ValueError) as exc:
        raise BadDims(f"malformed channel description: {exc}") from None
    for k in ks:
        if k.shape != (d_out, d_in):
            raise DimensionMismatch(f"Kraus operator shape {k.shape} does not match {d_in}->{d_out}")
    return Channel(ks)


def channel_to_json(ch: Channel) -> dict:
    return {"dim_in": ch.d_in, "dim_out": ch.d_out, "kraus": [_encode_matrix(k) for k in ch.kraus]}
