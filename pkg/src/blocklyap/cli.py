"""Command-line interface.

Exit codes: 0 success (feasible / valid), 2 infeasible or certificate
rejected, 3 precondition or input violation, 1 internal error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .benchmarks import (
    cyclic_system,
    grid_diagonal_stability,
    heat_system,
    hplus_threshold,
    random_hplus_hurwitz,
)
from .certificate import Certificate, make_certificate, verify_certificate
from .classes import comparison_matrix, is_ddp, is_h_plus, is_metzler, sdd_scalings
from .cones import dual_gramian_lp, tracemin_ddp, tracemin_ddp_scaled
from .core import Partition, default_partition, spectral_abscissa
from .exceptions import (
    BlockLyapError,
    DimensionError,
    Infeasible,
    ParseError,
    PreconditionError,
    ShapeError,
)
from .lp import LpStatus
from .mmio import load_matrix, load_partition
from .pursuit import basis_pursuit_tracemin
from .scaling import diag_lyapunov
from .smallgain import alpha_h_stability_check, blockdiag_smallgain, construct_theorem8

EXIT_OK, EXIT_INTERNAL, EXIT_INFEASIBLE, EXIT_PRECONDITION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would read as "infeasible"
    def error(self, message):
        raise UsageError(message)


@dataclass
class CliConfig:
    subcommand: str
    matrix: Optional[str] = None
    partition: Optional[Partition] = None
    out: Optional[str] = None
    fmt: str = "json"
    options: dict = field(default_factory=dict)


def _add_common(p, matrix=True):
    if matrix:
        p.add_argument("--matrix", required=True, metavar="PATH", help="A in Matrix Market format")
    p.add_argument("--partition", metavar="JSON", help='inline JSON or file, e.g. {"blocks": [2, 1]}')
    p.add_argument("--out", metavar="PATH", help="write results here instead of stdout")
    p.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blocklyap", description="Block-diagonal Lyapunov certificates")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="matrix class memberships")
    _add_common(p)

    p = sub.add_parser("construct", help="explicit certificate")
    _add_common(p)
    p.add_argument("--method", choices=("auto", "theorem4", "theorem8", "smallgain"), default="auto")
    p.add_argument("--gamma", type=float)

    p = sub.add_parser("verify", help="check a certificate independently")
    _add_common(p)
    p.add_argument("--cert", required=True, metavar="PATH")

    p = sub.add_parser("tracemin", help="minimum-trace DD+ relaxation")
    _add_common(p)
    p.add_argument("--q", choices=("identity", "bbt", "zero"), default="identity")
    p.add_argument("--b", metavar="PATH", help="B for --q bbt")
    p.add_argument("--eta", type=float)
    p.add_argument("--scaled", action="store_true")

    p = sub.add_parser("pursuit", help="basis pursuit refinement (JSON lines)")
    _add_common(p)
    p.add_argument("--q", choices=("identity", "bbt", "zero"), default="identity")
    p.add_argument("--b", metavar="PATH")
    p.add_argument("--eta", type=float)
    p.add_argument("--tau", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=20)
    p.add_argument("--decomp", choices=("cholesky", "ldl"), default="cholesky")

    p = sub.add_parser("smallgain", help="two-block Riccati construction")
    _add_common(p)
    p.add_argument("--gamma", type=float)

    p = sub.add_parser("bench", help="reproduce benchmark tables")
    bsub = p.add_subparsers(dest="bench", required=True, parser_class=_Parser)
    h = bsub.add_parser("heat")
    h.add_argument("--n", type=int, nargs="+", required=True)
    h.add_argument("--scaled", action="store_true")
    h.add_argument("--workers", type=int, default=1)
    h.add_argument("--out", metavar="PATH")
    h.add_argument("--format", dest="fmt", choices=("json", "csv"), default="csv")
    c = bsub.add_parser("cyclic")
    c.add_argument("--alphas", type=float, nargs="+", required=True)
    c.add_argument("--betas", type=float, nargs="+", required=True)
    c.add_argument("--grid", action="store_true", help="also run the lattice search (n <= 4)")
    c.add_argument("--out", metavar="PATH")
    c.add_argument("--format", dest="fmt", choices=("json", "csv"), default="csv")
    r = bsub.add_parser("random", help="diagonal certificates on seeded random -H+ matrices")
    r.add_argument("--n", type=int, nargs="+", required=True)
    r.add_argument("--count", type=int, default=10)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", metavar="PATH")
    r.add_argument("--format", dest="fmt", choices=("json", "csv"), default="csv")
    return parser


def parse_config(argv) -> CliConfig:
    ns = build_parser().parse_args(argv)
    opts = {k: v for k, v in vars(ns).items()
            if k not in ("subcommand", "matrix", "partition", "out", "fmt")}
    part = load_partition(ns.partition) if getattr(ns, "partition", None) else None
    return CliConfig(ns.subcommand, getattr(ns, "matrix", None), part, ns.out, ns.fmt, opts)


# -- subcommands -------------------------------------------------------------

def _offset(cfg: CliConfig, a):
    kind = cfg.options["q"]
    n = a.shape[0]
    if kind == "identity":
        return np.eye(n)
    if kind == "zero":
        return np.zeros((n, n))
    if not cfg.options.get("b"):
        raise UsageError("--q bbt requires --b PATH")
    b = load_matrix(cfg.options["b"])
    if b.shape[0] != n:
        raise DimensionError(f"B has {b.shape[0]} rows, A is {n}x{n}")
    return b @ b.T


def _analyze(cfg, a):
    alpha = default_partition(cfg.partition, a.shape[0])
    m = comparison_matrix(a, alpha).entries
    try:
        d = sdd_scalings(m).d.tolist()
    except Infeasible:
        d = None
    rec = {
        "n": a.shape[0],
        "partition": list(alpha.blocks),
        "hurwitz": bool(spectral_abscissa(a) < 0),
        "spectral_abscissa": spectral_abscissa(a),
        "metzler": is_metzler(a),
        "minus_a_h_plus": is_h_plus(-a, alpha),
        "minus_a_h_plus_strict": is_h_plus(-a, alpha, strict=True),
        "minus_a_ddp": is_ddp(-a),
        "sdd_scalings": d,
        "comparison_matrix": m.tolist(),
    }
    if alpha.n > 1 and not alpha.is_trivial:
        rec["block_stability_check"] = alpha_h_stability_check(a, alpha).to_dict()
    return EXIT_OK, [rec]


def _construct(cfg, a):
    alpha = default_partition(cfg.partition, a.shape[0])
    method = cfg.options["method"]
    gamma = cfg.options.get("gamma")
    if method == "auto":
        if is_h_plus(-a, strict=True):
            method = "theorem4"
        elif alpha.n == 2:
            method = "theorem8" if alpha_h_stability_check(a, alpha).stable else "smallgain"
        else:
            raise PreconditionError("no construction applies: -A is not strictly H+ "
                                    "and the partition does not have two blocks")
    if method == "theorem4":
        base = diag_lyapunov(a)
        cert = make_certificate(a, base.X, alpha, base.method, **base.extra)
    elif method == "theorem8":
        cert = construct_theorem8(a, alpha)
    else:
        cert = blockdiag_smallgain(a, alpha, gamma=gamma)
    return EXIT_OK, [cert.to_dict()]


def _verify(cfg, a):
    with open(cfg.options["cert"], encoding="utf-8") as fh:
        cert = Certificate.from_dict(json.load(fh))
    rep = verify_certificate(a, cert, cfg.partition)
    rec = {"valid": rep.valid, "min_eig_X": rep.min_eig_X, "max_eig_slack": rep.max_eig_slack,
           "symmetric": rep.symmetric, "alpha_diagonal": rep.alpha_diagonal,
           "failures": rep.failures}
    return (EXIT_OK if rep.valid else EXIT_INFEASIBLE), [rec]


def _tracemin(cfg, a):
    q = _offset(cfg, a)
    fn = tracemin_ddp_scaled if cfg.options["scaled"] else tracemin_ddp
    res = fn(a, cfg.partition, q, cfg.options.get("eta"))
    rec = {"status": res.status.value, "objective": res.objective,
           "scaled": bool(cfg.options["scaled"])}
    if res.certificate is not None:
        rec["certificate"] = res.certificate.to_dict()
    code = EXIT_OK if res.status is LpStatus.OPTIMAL else EXIT_INFEASIBLE
    return code, [rec]


def _pursuit(cfg, a):
    q = _offset(cfg, a)
    o = cfg.options
    tr = basis_pursuit_tracemin(a, cfg.partition, q, o.get("eta"), o["max_iters"], o["tau"],
                                o["decomp"])
    return EXIT_OK, [it.to_dict() for it in tr.iterations]


def _smallgain(cfg, a):
    if cfg.partition is None:
        raise UsageError("smallgain requires --partition with two blocks")
    cert = blockdiag_smallgain(a, cfg.partition, gamma=cfg.options.get("gamma"))
    return EXIT_OK, [cert.to_dict()]


def _heat_row(args):
    n, scaled = args
    h = heat_system(n)
    t0 = time.perf_counter()
    res = dual_gramian_lp(h.A, h.B, scaled=scaled)
    ms = 1e3 * (time.perf_counter() - t0)
    return {"n": n, "method": "lp_scaled" if scaled else "lp", "objective": res.objective,
            "status": res.status.value, "wall_time_ms": round(ms, 3)}


def _bench_random(o):
    # one row per instance; objective is the largest slack eigenvalue (< 0 when certified)
    rows = []
    sizes = [n for n in o["n"] for _ in range(o["count"])]
    seeds = np.random.SeedSequence(o["seed"]).spawn(len(sizes))
    for n, ss in zip(sizes, seeds):
        a = random_hplus_hurwitz(n, ss)
        t0 = time.perf_counter()
        rep = verify_certificate(a, diag_lyapunov(a))
        rows.append({"n": n, "method": "theorem4", "objective": rep.max_eig_slack,
                     "valid": rep.valid, "wall_time_ms": round(1e3 * (time.perf_counter() - t0), 3)})
    code = EXIT_OK if all(r["valid"] for r in rows) else EXIT_INFEASIBLE
    return code, rows


def _bench(cfg):
    o = cfg.options
    if o["bench"] == "heat":
        jobs = [(n, o["scaled"]) for n in o["n"]]
        if o["workers"] > 1:
            with ProcessPoolExecutor(max_workers=o["workers"]) as ex:
                rows = list(ex.map(_heat_row, jobs))  # map keeps submission order
        else:
            rows = [_heat_row(j) for j in jobs]
        code = EXIT_OK if all(r["status"] == "optimal" for r in rows) else EXIT_INFEASIBLE
        return code, rows
    if o["bench"] == "random":
        return _bench_random(o)
    sysc = cyclic_system(o["alphas"], o["betas"])
    t0 = time.perf_counter()
    th = hplus_threshold(sysc)
    ms = 1e3 * (time.perf_counter() - t0)
    rows = [{"n": sysc.n, "method": "hplus_ratio", "objective": th.ratio, "wall_time_ms": round(ms, 3)},
            {"n": sysc.n, "method": "sec_bound", "objective": th.diag_stable_bound, "wall_time_ms": 0.0}]
    if o["grid"]:
        if sysc.n > 4:
            raise UsageError("--grid is limited to n <= 4")
        t0 = time.perf_counter()
        x = grid_diagonal_stability(sysc.A)
        rows.append({"n": sysc.n, "method": "grid_oracle", "objective": 0.0 if x is None else 1.0,
                     "wall_time_ms": round(1e3 * (time.perf_counter() - t0), 3)})
    if cfg.fmt == "json":
        return EXIT_OK, [{"ratio": th.ratio, "is_hplus": th.is_hplus,
                          "diag_stable_bound": th.diag_stable_bound, "rows": rows}]
    return EXIT_OK, rows


_HANDLERS = {"analyze": _analyze, "construct": _construct, "verify": _verify,
             "tracemin": _tracemin, "pursuit": _pursuit, "smallgain": _smallgain}

CSV_FIELDS = ("n", "method", "objective", "wall_time_ms")


def _render(cfg, records) -> str:
    if cfg.fmt == "csv":
        buf = io.StringIO()
        fields = CSV_FIELDS if all(set(CSV_FIELDS) <= set(r) for r in records) else sorted(
            {k for r in records for k in r if not isinstance(r[k], (list, dict))})
        w = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in records:
            w.writerow(r)
        return buf.getvalue()
    if cfg.subcommand == "pursuit":
        return "".join(json.dumps(r) + "\n" for r in records)
    body = records[0] if len(records) == 1 else records
    return json.dumps(body, indent=2) + "\n"


def run(cfg: CliConfig) -> int:
    if cfg.subcommand == "bench":
        code, records = _bench(cfg)
    else:
        a = load_matrix(cfg.matrix)
        if cfg.partition is not None:
            cfg.partition.check(a, "A")
        code, records = _HANDLERS[cfg.subcommand](cfg, a)
    text = _render(cfg, records)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return run(cfg)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (PreconditionError, ParseError, DimensionError, ShapeError,
            json.JSONDecodeError, OSError) as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except BlockLyapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to exit 1
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
