"""Command-line front end.

Every command prints one machine-readable report on standard output. Exit
codes: 0 success, 2 invalid input, 3 solver non-convergence (the report is
still printed, with its status).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import apps, divergences, entropies, linalg as la, metrics, smooth
from .errors import NonConvergence, QitError
from .sdpsolve import SdpSolution, SolverOptions
from .states import DensityOperator, state_from_json

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3

FIG_RHO = np.array([[5, 5, 2], [5, 5, 2], [2, 2, 2]]) / 12
FIG_SIGMA = np.diag([5, 2, 1]) / 8
TANGENT_RHO = np.full((2, 2), 0.5)
TANGENT_SIGMA = np.diag([0.01, 0.99])


@dataclass
class CommandConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    quantity: str | None = None
    alpha: float | None = None
    eps: float | None = None
    n: list | None = None
    base: object = 2
    tol: float | None = None
    seed: int = 0
    out: str = "json"
    max_dim: int | None = None
    extra: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise QitError(message)


def _witness_hash(obj) -> str:
    h = hashlib.sha256()

    def feed(x):
        if isinstance(x, dict):
            for k in sorted(x):
                h.update(str(k).encode())
                feed(x[k])
        elif isinstance(x, (list, tuple)):
            for v in x:
                feed(v)
        elif isinstance(x, (np.ndarray, float, int, complex, np.floating)):
            a = np.round(np.asarray(x, dtype=complex), 10)
            h.update(a.real.tobytes() + a.imag.tobytes())
        elif isinstance(x, SdpSolution):
            feed([x.primal_value, x.dual_value])
        else:
            h.update(str(x).encode())

    feed(obj)
    return h.hexdigest()[:16]


def _cert(sol: SdpSolution | None) -> dict | None:
    if sol is None:
        return None
    return {
        "status": sol.status,
        "primal_value": sol.primal_value,
        "dual_value": sol.dual_value,
        "duality_gap": sol.duality_gap,
        "iterations": sol.iterations,
    }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return str(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return "NA" if np.isnan(x) else f"{float(x):.12g}"
    return str(x)


def _emit_csv(header, rows, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])


def _load_state(path: str) -> DensityOperator:
    with open(path) as fh:
        return state_from_json(json.load(fh))


def _base(s: str):
    if s in ("e", "E"):
        return "e"
    if s == "2":
        return 2
    raise QitError(f"base must be 2 or e, got {s!r}")


def _cut(s: str | None):
    if not s:
        return None
    a, b = s.split(":")
    return tuple(x for x in a.split(",") if x), tuple(x for x in b.split(",") if x)


def _ints(s: str) -> list:
    return [int(v) for v in s.split(",") if v]


def _options(cfg: CommandConfig) -> SolverOptions:
    kw = {}
    if cfg.tol is not None:
        kw.update(gap_tol=cfg.tol, feas_tol=cfg.tol)
    if cfg.max_dim is not None:
        kw.update(max_params=cfg.max_dim)
    return SolverOptions(**kw)


# ---------------------------------------------------------------- commands

_DIVERGENCES = {
    "dmin": "minimal",
    "dpetz": "petz",
    "dmaximal": "maximal",
    "umegaki": "umegaki",
    "dmax": "max",
}


def cmd_eval(cfg: CommandConfig) -> dict:
    rho = _load_state(cfg.inputs["rho"])
    sigma = _load_state(cfg.inputs["sigma"])
    q = cfg.quantity
    if q in _DIVERGENCES:
        if _DIVERGENCES[q] in ("minimal", "petz", "maximal") and cfg.alpha is None:
            raise QitError(f"--alpha is required for {q}")
        r = divergences.renyi_divergence(rho, sigma, cfg.alpha if cfg.alpha is not None else 1.0, _DIVERGENCES[q], cfg.base)
        return {"quantity": q, "alpha": cfg.alpha, "value": r.value, "support": r.support_condition}
    fn = {
        "fidelity": metrics.gen_fidelity,
        "trace-distance": metrics.trace_distance,
        "purified-distance": metrics.purified_distance,
    }.get(q)
    if fn is None:
        raise QitError(f"unknown quantity {q!r}")
    return {"quantity": q, "value": fn(rho, sigma)}


def cmd_entropy(cfg: CommandConfig) -> dict:
    rho = _load_state(cfg.inputs["state"])
    cut = _cut(cfg.extra.get("cut"))
    q = cfg.quantity or "renyi"
    opts = _options(cfg)
    if q == "vn":
        return {"quantity": q, "value": entropies.von_neumann(rho, cut, base=cfg.base)}
    if q == "min":
        r = entropies.min_entropy(rho, cut, base=cfg.base, options=opts)
    elif q == "max":
        r = entropies.max_entropy(rho, cut, base=cfg.base, options=opts)
    elif q == "guess":
        pg, effects = entropies.guessing_probability(rho, options=opts)
        return {"quantity": q, "value": pg, "witness_hash": _witness_hash(effects)}
    elif q == "renyi":
        if cfg.alpha is None:
            raise QitError("--alpha is required for conditional Rényi entropies")
        r = entropies.conditional_renyi(
            rho, cfg.alpha, cfg.extra.get("family", "sandwiched"), cfg.extra.get("arrow", "up"), cut, base=cfg.base, seed=cfg.seed
        )
    else:
        raise QitError(f"unknown entropy quantity {q!r}")
    return {
        "quantity": q,
        "family": r.family,
        "arrow": r.arrow,
        "alpha": r.alpha,
        "method": r.method,
        "value": r.value,
        "residual": r.residual,
        "certificate": _cert(r.witness.get("solution")),
        "witness_hash": _witness_hash({k: v for k, v in r.witness.items() if k != "solution"}),
    }


def cmd_smooth(cfg: CommandConfig) -> dict:
    if cfg.eps is None:
        raise QitError("--eps is required")
    rho = _load_state(cfg.inputs["state"])
    opts = _options(cfg)
    q = cfg.quantity or "min"
    if q == "dmax":
        sigma = _load_state(cfg.inputs["sigma"])
        val, wit = smooth.smooth_max_divergence(rho.matrix, sigma.matrix, cfg.eps, cfg.base, opts)
        extra = {"lemma_G_value": wit.extras["lemma_G_value"]}
    else:
        cut = _cut(cfg.extra.get("cut"))
        fn = smooth.smooth_min_entropy if q == "min" else smooth.smooth_max_entropy
        if q not in ("min", "max"):
            raise QitError(f"unknown smooth quantity {q!r}")
        val, wit = fn(rho, cfg.eps, cut, base=cfg.base, options=opts)
        extra = {}
    return {
        "quantity": q,
        "eps": cfg.eps,
        "value": val,
        "construction": wit.construction,
        "distance": wit.distance,
        "certificate": _cert(wit.extras.get("solution")),
        "witness_hash": _witness_hash(wit.state),
        **extra,
    }


def cmd_hypotest(cfg: CommandConfig) -> dict:
    rho = _load_state(cfg.inputs["rho"]).matrix
    sigma = _load_state(cfg.inputs["sigma"]).matrix
    q = cfg.quantity or "helstrom"
    ns = cfg.n or [1]
    if q == "helstrom":
        rows = [(n, apps.helstrom_error(rho, sigma, n, max_dim=cfg.max_dim or 1024)) for n in ns]
        return {"quantity": q, "rows": rows, "columns": ["n", "value"]}
    if q == "np":
        if cfg.eps is None:
            raise QitError("--eps is required")
        rows = [(n, apps.neyman_pearson(rho, sigma, n, cfg.eps, options=_options(cfg))[0]) for n in ns]
        return {"quantity": q, "eps": cfg.eps, "rows": rows, "columns": ["n", "value"]}
    if q == "stein":
        if cfg.eps is None:
            raise QitError("--eps is required")
        rows = []
        for n in ns:
            ref = apps.stein_second_order(rho, sigma, n, cfg.eps, cfg.base)
            try:
                beta = apps.neyman_pearson(sigma, rho, n, cfg.eps, options=_options(cfg))[0]
                val = -np.log(beta) * divergences.log_scale(cfg.base)
            except QitError:
                val = float("nan")
            rows.append((n, val, ref))
        return {"quantity": q, "eps": cfg.eps, "rows": rows, "columns": ["n", "value", "reference"]}
    if q == "chernoff":
        return {"quantity": q, "value": apps.chernoff_distance(rho, sigma, cfg.base)}
    rate = cfg.extra.get("rate")
    if rate is None:
        raise QitError("--rate is required")
    if q == "hoeffding":
        return {"quantity": q, "rate": rate, "value": apps.hoeffding_exponent(rho, sigma, rate, cfg.base)}
    if q == "strong-converse":
        return {"quantity": q, "rate": rate, "value": apps.strong_converse_exponent(rho, sigma, rate, cfg.base)}
    raise QitError(f"unknown test quantity {q!r}")


def _named_basis(name: str, d: int) -> np.ndarray:
    if name == "computational":
        return np.eye(d, dtype=complex)
    if name == "fourier":
        w = np.exp(2j * np.pi / d)
        return np.array([[w ** (x * y) for y in range(d)] for x in range(d)]) / np.sqrt(d)
    raise QitError(f"unknown basis {name!r}")


def cmd_ur(cfg: CommandConfig) -> dict:
    dims = tuple(cfg.extra["dims"])
    if len(dims) != 3:
        raise QitError("--dims needs three dimensions A,B,C")
    alpha = cfg.alpha if cfg.alpha is not None else 1.0
    bx, by = _named_basis(cfg.extra["basis_x"], dims[0]), _named_basis(cfg.extra["basis_y"], dims[0])
    if "state" in cfg.inputs:
        rho = _load_state(cfg.inputs["state"]).matrix
        lhs, rhs, slack = apps.ur_check(rho, dims, bx, by, alpha, cfg.base)
        return {"alpha": alpha, "lhs": lhs, "rhs": rhs, "slack": slack}
    rng = la.rng_from(cfg.seed)
    rows = []
    for k in range(cfg.extra.get("samples", 10)):
        psi = la.random_pure_vector(int(np.prod(dims)), rng)
        rows.append((k, *apps.ur_check(psi, dims, bx, by, alpha, cfg.base)))
    return {"alpha": alpha, "rows": rows, "columns": ["sample", "lhs", "rhs", "slack"], "min_slack": min(r[3] for r in rows)}


def cmd_extract(cfg: CommandConfig) -> dict:
    rho = _load_state(cfg.inputs["state"])
    nb, mb = cfg.extra["n_bits"], cfg.extra["m_bits"]
    inst = apps.ExtractorInstance.from_state(rho, nb, mb)
    delta, per_seed = apps.extractor_delta(inst)
    report = {"delta": delta, "seeds": len(per_seed), **apps.leftover_hash_bounds(inst, cfg.base)}
    report["margin_collision"] = report["bound_collision"] - delta
    if cfg.eps is not None:
        d = cfg.extra.get("delta") or cfg.eps / 2
        lo, hi = apps.extractable_length(rho, cfg.eps, d, base=cfg.base)
        report.update(length_lower=lo, length_upper=hi)
    return report


def cmd_aep(cfg: CommandConfig) -> dict:
    eps = cfg.eps if cfg.eps is not None else 0.05
    ns = cfg.n or [50, 150, 1250]
    if "state" in cfg.inputs:
        rho = _load_state(cfg.inputs["state"])
        rows = smooth.aep_rates(rho, eps, ns, cut=_cut(cfg.extra.get("cut")), base=cfg.base, options=_options(cfg))
    else:
        p = cfg.extra.get("p", 0.2)
        rows = smooth.aep_rates(np.diag([p, 1 - p]), eps, ns, base=cfg.base)
    return {
        "eps": eps,
        "columns": list(smooth.AEP_COLUMNS),
        "rows": [(r.n, r.lower_bound, r.exact_min, r.upper_bound, r.second_order_ref, r.exact_max, r.upper_max) for r in rows],
    }


def _fig_renyi(cfg):
    grid = [round(0.1 * k, 10) for k in range(1, 31) if k != 10]
    rows = []
    for a in grid:
        rows.append(
            (
                a,
                divergences.sandwiched(FIG_RHO, FIG_SIGMA, a, cfg.base),
                divergences.petz(FIG_RHO, FIG_SIGMA, a, cfg.base),
                divergences.maximal(FIG_RHO, FIG_SIGMA, a, cfg.base),
            )
        )
    return ["alpha", "minimal", "petz", "maximal"], rows


def _fig_tangent(cfg):
    D = divergences.umegaki(TANGENT_RHO, TANGENT_SIGMA, cfg.base)
    V = divergences.variance_nats(TANGENT_RHO, TANGENT_SIGMA)
    slope = V / 2 * divergences.log_scale(cfg.base)
    rows = []
    for a in np.round(np.linspace(0.5, 1.5, 21), 10):
        rows.append(
            (
                float(a),
                divergences.sandwiched(TANGENT_RHO, TANGENT_SIGMA, a, cfg.base),
                divergences.petz(TANGENT_RHO, TANGENT_SIGMA, a, cfg.base),
                D + (a - 1) * slope,
            )
        )
    return ["alpha", "minimal", "petz", "first_order"], rows


def _fig_aep(cfg):
    p = 0.2
    ns = cfg.n or [50, 150, 1250]
    rows = smooth.aep_rates(np.diag([p, 1 - p]), cfg.eps if cfg.eps is not None else 0.05, ns, base=cfg.base)
    return list(smooth.AEP_COLUMNS), [
        (r.n, r.lower_bound, r.exact_min, r.upper_bound, r.second_order_ref, r.exact_max, r.upper_max) for r in rows
    ]


FIGURES = {"renyi-orgy": _fig_renyi, "tangent": _fig_tangent, "aep-bernoulli": _fig_aep}


def cmd_fig(cfg: CommandConfig) -> dict:
    name = cfg.quantity
    if name not in FIGURES:
        raise QitError(f"unknown figure {name!r}; choose from {sorted(FIGURES)}")
    cols, rows = FIGURES[name](cfg)
    return {"figure": name, "columns": cols, "rows": rows}


def _suite_duality(cfg, samples, tol):
    rng = la.rng_from(cfg.seed)
    worst = 0.0
    for k in range(samples):
        dims = (2, 2, 2) if k % 2 == 0 else (3, 2, 2)
        psi = la.random_pure_vector(int(np.prod(dims)), rng)
        P = np.outer(psi, psi.conj())
        ab, ac = la.partial_trace(P, dims, [0, 1]), la.partial_trace(P, dims, [0, 2])
        dab, dac = (dims[0], dims[1]), (dims[0], dims[2])
        H = entropies.conditional_renyi
        for a, b in ((0.6, 3.0), (0.75, 1.5), (1.5, 0.75), (2.0, 2 / 3)):
            r = H(ab, a, "sandwiched", "up", dims=dab).value + H(ac, b, "sandwiched", "up", dims=dac).value
            worst = max(worst, abs(r))
        for a, b in ((0.6, 1.4), (1.5, 0.5)):
            worst = max(worst, abs(H(ab, a, "petz", "down", dims=dab).value + H(ac, b, "petz", "down", dims=dac).value))
        for a in (0.6, 2.0):
            worst = max(worst, abs(H(ab, a, "petz", "up", dims=dab).value + H(ac, 1 / a, "sandwiched", "down", dims=dac).value))
    return worst


def _suite_nussbaum(cfg, samples, tol):
    rng = la.rng_from(cfg.seed)
    worst = 0.0
    for k in range(samples):
        d = 2 + k % 3
        r, s = la.random_density(d, rng=rng), la.random_density(d, rng=rng)
        p, q = divergences.nussbaum_szkola(r, s)
        for a in (0.3, 0.7, 1.0, 1.5, 2.0):
            worst = max(worst, abs(divergences.petz(r, s, a) - divergences.classical_renyi(p.ravel(), q.ravel(), a)))
    return worst


def _suite_dpi(cfg, samples, tol):
    rng = la.rng_from(cfg.seed)
    worst = 0.0
    for _ in range(samples):
        d = int(rng.integers(2, 4))
        r, s = la.random_density(d, rng=rng), la.random_density(d, rng=rng)
        ch = la.sample("cptp", (d, int(rng.integers(2, 4))), seed=int(rng.integers(2**31)))
        a = float(rng.uniform(0.5, 3.0))
        worst = max(worst, divergences.sandwiched(ch(r), ch(s), a) - divergences.sandwiched(r, s, a))
    return worst


SUITES = {"duality": _suite_duality, "nussbaum": _suite_nussbaum, "dpi": _suite_dpi}


def cmd_verify(cfg: CommandConfig) -> dict:
    name = cfg.quantity
    if name not in SUITES:
        raise QitError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    samples = cfg.extra.get("samples", 20)
    tol = cfg.tol if cfg.tol is not None else 1e-6
    worst = SUITES[name](cfg, samples, tol)
    return {"suite": name, "samples": samples, "seed": cfg.seed, "max_residual": worst, "tol": tol, "passed": bool(worst <= tol)}


COMMANDS = {
    "eval": cmd_eval,
    "entropy": cmd_entropy,
    "smooth": cmd_smooth,
    "hypotest": cmd_hypotest,
    "ur": cmd_ur,
    "extract": cmd_extract,
    "aep": cmd_aep,
    "fig": cmd_fig,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--base", default="2", help="logarithm base, 2 or e")
    common.add_argument("--tol", type=float, help="solver gap and feasibility tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", choices=("json", "csv"), default="json")
    common.add_argument("--max-dim", type=int, help="cap on real SDP parameters or dense dimension")

    p = _Parser(prog="qit", description="Quantum Rényi quantities, smooth entropies and applications.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("eval", parents=[common], help="divergences and distances between two states")
    s.add_argument("--quantity", required=True, choices=sorted(_DIVERGENCES) + ["fidelity", "trace-distance", "purified-distance"])
    s.add_argument("--alpha", type=float)
    s.add_argument("--rho", required=True)
    s.add_argument("--sigma", required=True)

    s = sub.add_parser("entropy", parents=[common], help="conditional entropies of one state")
    s.add_argument("--state", required=True)
    s.add_argument("--quantity", default="renyi", choices=("renyi", "vn", "min", "max", "guess"))
    s.add_argument("--alpha", type=float)
    s.add_argument("--family", default="sandwiched", choices=entropies.ENTROPY_FAMILIES)
    s.add_argument("--arrow", default="up", choices=entropies.ARROWS)
    s.add_argument("--cut", help="A labels and B labels, e.g. A:B or A:B,C")

    s = sub.add_parser("smooth", parents=[common], help="smooth entropies and the smooth max-divergence")
    s.add_argument("--state", required=True)
    s.add_argument("--sigma")
    s.add_argument("--quantity", default="min", choices=("min", "max", "dmax"))
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--cut")

    s = sub.add_parser("hypotest", parents=[common], help="hypothesis testing quantities")
    s.add_argument("--rho", required=True)
    s.add_argument("--sigma", required=True)
    s.add_argument("--quantity", default="helstrom", choices=("helstrom", "np", "stein", "chernoff", "hoeffding", "strong-converse"))
    s.add_argument("--n", type=_ints)
    s.add_argument("--eps", type=float)
    s.add_argument("--rate", type=float)

    s = sub.add_parser("ur", parents=[common], help="entropic uncertainty relation check")
    s.add_argument("--state")
    s.add_argument("--dims", type=_ints, required=True)
    s.add_argument("--alpha", type=float)
    s.add_argument("--basis-x", default="computational", choices=("computational", "fourier"))
    s.add_argument("--basis-y", default="fourier", choices=("computational", "fourier"))
    s.add_argument("--samples", type=int, default=10)

    s = sub.add_parser("extract", parents=[common], help="Toeplitz hashing of a cq source")
    s.add_argument("--state", required=True)
    s.add_argument("--n-bits", type=int, required=True)
    s.add_argument("--m-bits", type=int, required=True)
    s.add_argument("--eps", type=float)
    s.add_argument("--delta", type=float)

    s = sub.add_parser("aep", parents=[common], help="per-copy smooth entropy bounds of iid states")
    s.add_argument("--state")
    s.add_argument("--p", type=float, default=0.2, help="Bernoulli parameter when no state is given")
    s.add_argument("--eps", type=float)
    s.add_argument("--n", type=_ints)
    s.add_argument("--cut")

    s = sub.add_parser("fig", parents=[common], help="plot-ready data for built-in figures")
    s.add_argument("--name", required=True, choices=sorted(FIGURES))
    s.add_argument("--eps", type=float)
    s.add_argument("--n", type=_ints)

    s = sub.add_parser("verify", parents=[common], help="randomized property suites")
    s.add_argument("--suite", required=True, choices=sorted(SUITES))
    s.add_argument("--samples", type=int, default=20)
    return p


def config_from_args(ns: argparse.Namespace) -> CommandConfig:
    d = vars(ns)
    inputs = {k: d[k] for k in ("rho", "sigma", "state") if d.get(k)}
    quantity = d.get("quantity") or d.get("name") or d.get("suite")
    extra = {}
    for k in ("cut", "family", "arrow", "rate", "dims", "basis_x", "basis_y", "samples", "n_bits", "m_bits", "delta", "p"):
        if d.get(k) is not None:
            extra[k] = d[k]
    cfg = CommandConfig(
        command=ns.command,
        inputs=inputs,
        quantity=quantity,
        alpha=d.get("alpha"),
        eps=d.get("eps"),
        n=d.get("n"),
        base=_base(ns.base),
        tol=ns.tol,
        seed=ns.seed,
        out=ns.out,
        max_dim=ns.max_dim,
        extra=extra,
    )
    if cfg.eps is not None and not 0 <= cfg.eps < 1:
        raise QitError("--eps must lie in [0, 1)")
    if cfg.alpha is not None and cfg.alpha < 0:
        raise QitError("--alpha must be nonnegative")
    return cfg


def _write(report: dict, cfg: CommandConfig | None, stream) -> None:
    if cfg is not None and cfg.out == "csv":
        if "rows" in report:
            _emit_csv(report["columns"], report["rows"], stream)
        else:
            keys = [k for k, v in report.items() if not isinstance(v, (dict, list))]
            _emit_csv(keys, [[report[k] for k in keys]], stream)
        return
    stream.write(json.dumps(_jsonable(report), sort_keys=True) + "\n")


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    cfg = None
    try:
        ns = build_parser().parse_args(argv)
        cfg = config_from_args(ns)
        report = COMMANDS[cfg.command](cfg)
        report = {"command": cfg.command, "base": str(cfg.base), "status": "ok", **report}
        _write(report, cfg, stdout)
        return EXIT_OK
    except NonConvergence as exc:
        sol = exc.result
        report = {"command": getattr(cfg, "command", None), "status": "nonconvergence", "message": str(exc)}
        if isinstance(sol, SdpSolution):
            report["certificate"] = _cert(sol)
        _write(report, None, stdout)
        return EXIT_SOLVER
    except (QitError, OSError, json.JSONDecodeError, KeyError) as exc:
        report = {"command": getattr(cfg, "command", None), "status": "invalid", "message": str(exc)}
        _write(report, None, stdout)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
