"""Command line interface: ``thinlab <subcommand> ...``.

Exit codes: 0 success, 1 a numerical check failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .charlier import CharlierBasis, khokhlov_product_coeffs
from .dist import DEFAULT_EPS, Distribution, FamilySpec, make_distribution, summary_stats
from .divergence import kl, tv
from .errors import ThinlabError
from .experiments import (SUITES, ExperimentConfig, VerifyOptions, records_csv, run_projection_rate,
                          run_rate_experiment, run_verify_suite, write_csv)
from .expfam import project_one, project_two
from .moments import charlier_moment, detect_kappa, factorial_moment
from .thinning import thin, thin_law

log = logging.getLogger("thinlab")

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _number(text):
    v = float(text)
    return int(v) if v.is_integer() and "." not in text and "e" not in text.lower() else v


def parse_family(text):
    """``kind:key=value,...`` such as ``bernoulli:p=0.3`` or ``poisson:lambda=2``."""
    kind, _, rest = text.partition(":")
    data = {"kind": kind.strip()}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"malformed family parameter {item!r}")
        data[key.strip()] = _number(value.strip())
    try:
        return FamilySpec.from_dict(data)
    except (ThinlabError, KeyError, TypeError) as exc:
        raise UsageError(f"bad family {text!r}: {exc}") from exc


def load_distribution(source, eps_trunc):
    """A JSON file written by ``Distribution.to_json``, or an inline family."""
    path = Path(source)
    if path.is_file():
        return Distribution.from_json(path.read_text(), eps_trunc)
    return make_distribution(parse_family(source), eps_trunc)


def parse_grid(text):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise UsageError(f"bad n-grid {text!r}") from exc


def parse_constraint(text):
    name, sep, value = text.partition("=")
    name = name.strip().upper()
    if not sep or not name.startswith("C") or not name[1:].isdigit():
        raise UsageError(f"constraint must look like C2=-0.1, got {text!r}")
    return int(name[1:]), float(value)


def _emit(args, payload, rows=None, columns=None):
    """JSON on ``--json``; CSV to ``--csv`` when rows are given; otherwise plain text."""
    if rows is not None and args.csv:
        write_csv(rows, columns, args.csv)
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True, default=_plain))
    elif rows is not None and not args.csv:
        print(write_csv(rows, columns), end="")
    else:
        for k, v in payload.items():
            if not isinstance(v, (list, dict)):
                print(f"{k}: {v}")


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    raise TypeError(type(v))


def _pmf_rows(P):
    return [{"x": int(x), "p": float(p)} for x, p in zip(P.support, P.pmf)]


# --- subcommands -----------------------------------------------------------------------

def cmd_thin(args):
    P = thin(load_distribution(args.dist, args.eps_trunc), args.alpha)
    return _write_dist(args, P)


def cmd_thinlaw(args):
    P = thin_law(load_distribution(args.dist, args.eps_trunc), args.n,
                 closed_form=not args.generic)
    return _write_dist(args, P)


def _write_dist(args, P):
    if args.out:
        Path(args.out).write_text(P.to_json(explicit=True))
    mean, var = summary_stats(P)
    payload = dict(mean=mean, variance=var, label=P.label, offset=P.offset, pmf=P.pmf.tolist(),
                   tail_mass=P.tail_mass)
    _emit(args, payload, _pmf_rows(P), ("x", "p"))
    return EXIT_OK


def cmd_kl(args):
    P = load_distribution(args.p, args.eps_trunc)
    Q = load_distribution(args.q, args.eps_trunc)
    _emit(args, {"kl": kl(P, Q), "tv": tv(P, Q)})
    return EXIT_OK


def cmd_moments(args):
    P = load_distribution(args.dist, args.eps_trunc)
    lam = args.lam if args.lam is not None else P.mean()
    basis = CharlierBasis(lam, max(args.kmax, 2))
    rows = [{"k": k, "factorial": factorial_moment(P, k), "charlier": charlier_moment(P, basis, k)}
            for k in range(1, args.kmax + 1)]
    rep = detect_kappa(P, basis, args.kmax)
    payload = {"lambda": lam, "mean": P.mean(), "variance": P.variance(), "kappa": rep.kappa,
               "c": rep.c, "moments": rows}
    _emit(args, payload, rows, ("k", "factorial", "charlier"))
    return EXIT_OK


def cmd_charlier(args):
    basis = CharlierBasis(args.lam, args.k)
    x = np.asarray(args.x if args.x else range(args.upper + 1), dtype=float)
    rows = [{"x": xi, "value": float(v)} for xi, v in zip(x, basis.eval(args.k, x))]
    _emit(args, {"lambda": args.lam, "k": args.k, "values": rows}, rows, ("x", "value"))
    return EXIT_OK


def cmd_linearize(args):
    basis = CharlierBasis(args.lam, args.k + args.l)
    lin = khokhlov_product_coeffs(basis, args.k, args.l)
    rows = [{"m": m, "coeff": float(c), "scaled": float(s)}
            for m, (c, s) in enumerate(zip(lin.coeffs, lin.scaled))]
    _emit(args, lin.to_dict(), rows, ("m", "coeff", "scaled"))
    return EXIT_OK


def cmd_project(args):
    cons = [parse_constraint(c) for c in args.constraint]
    if len(cons) == 1:
        res = project_one(args.lam, cons[0][0], cons[0][1], args.eps_trunc)
    elif len(cons) == 2:
        (k1, h1), (k2, h2) = cons
        res = project_two(args.lam, (k1, k2), (h1, h2), args.eps_trunc)
    else:
        raise UsageError("one or two --constraint options are supported")
    d = res.to_dict()
    if args.out:
        Path(args.out).write_text(json.dumps(d, indent=2, default=_plain))
    if args.json:
        print(json.dumps(d, indent=2, default=_plain))
    else:
        print(f"divergence: {res.divergence!r}")
        print(f"beta: {[float(b) for b in res.beta]}")
        print(f"achieved: {[float(a) for a in res.achieved]}")
    return EXIT_OK


def cmd_rate(args):
    family = "binomial" if args.family == "binomial" else parse_family(args.family)
    cfg = ExperimentConfig(family, args.lam, parse_grid(args.n), args.kappa, args.csv, None,
                           args.eps_trunc, args.seed)
    res = run_rate_experiment(cfg)
    if args.json:
        print(json.dumps(dict(res.summary(), rows=[r.as_row() for r in res.rows]), indent=2))
    else:
        if not args.csv:
            print(res.csv, end="")
        for k, v in res.summary().items():
            print(f"# {k}: {v}", file=sys.stderr)
    return EXIT_OK if res.holds else EXIT_CHECK


def cmd_projrate(args):
    cfg = ExperimentConfig("binomial", args.lam, parse_grid(args.n), None, args.csv, None,
                           args.eps_trunc, args.seed)
    res = run_projection_rate(cfg)
    if args.json:
        print(json.dumps({"rows": res.rows, "decreasing": res.decreasing,
                          "max_slack": res.max_slack, "passed": res.passed}, indent=2))
    elif not args.csv:
        print(res.csv, end="")
    return EXIT_OK if res.passed else EXIT_CHECK


def cmd_verify(args):
    out_dir = args.out_dir
    if out_dir is None and args.csv:
        out_dir = str(Path(args.csv).parent)
    prefix = Path(args.csv).stem if args.csv else "verify"
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    opts = VerifyOptions(args.grid_step, args.seed, args.trials, out_dir, prefix)
    records, code = run_verify_suite(args.suite, opts)
    if args.csv:
        records_csv(records, args.csv)
    if args.json:
        print(json.dumps([r.to_dict() for r in records], indent=2, default=_plain))
    else:
        for r in records:
            where = "(see --json)" if isinstance(r.worst_at, dict) else r.worst_at
            note = ""
            if "candidates" in r.extra:
                note = f" ({len(r.extra['candidates'])} counterexample candidates logged, audit only)"
            print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: margin={r.margin:.6g} at {where}{note}")
    return code


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print JSON")
    common.add_argument("--csv", metavar="PATH", help="write CSV output to PATH")
    common.add_argument("--eps-trunc", type=float, default=DEFAULT_EPS,
                        help="tail mass budget for truncated supports (default %(default)g)")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="thinlab", description="Thinning, Poisson-Charlier "
                                     "moments and information divergence lower bounds.")
    parser.add_argument("--version", action="version", version=f"thinlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("thin", parents=[common], help="alpha-thinning of a distribution")
    p.add_argument("--dist", required=True, help="JSON file or inline family like poisson:lambda=2")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_thin)

    p = sub.add_parser("thinlaw", parents=[common], help="(1/n) o P^{*n}")
    p.add_argument("--dist", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--generic", action="store_true", help="skip closed forms")
    p.add_argument("--out")
    p.set_defaults(func=cmd_thinlaw)

    p = sub.add_parser("kl", parents=[common], help="information divergence and total variation")
    p.add_argument("--p", required=True)
    p.add_argument("--q", required=True)
    p.set_defaults(func=cmd_kl)

    p = sub.add_parser("moments", parents=[common], help="factorial and Charlier moments")
    p.add_argument("--dist", required=True)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--kmax", type=int, default=6)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("charlier", parents=[common], help="evaluate C_k^lambda")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--x", type=float, nargs="*")
    p.add_argument("--upper", type=int, default=10, help="evaluate on 0..upper when --x is absent")
    p.set_defaults(func=cmd_charlier)

    p = sub.add_parser("linearize", parents=[common], help="expansion of C_k C_l")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.set_defaults(func=cmd_linearize)

    p = sub.add_parser("project", parents=[common], help="minimum-information projection")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--constraint", action="append", required=True, help="e.g. C2=-0.1")
    p.add_argument("--out")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("rate", parents=[common], help="scaled divergence along an n-grid")
    p.add_argument("--family", default="binomial",
                   help="'binomial' for Bi(n, lambda/n), or a family of X like bernoulli:p=0.3")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--n", default="250,500,1000,2000", help="comma-separated increasing grid")
    p.add_argument("--kappa", type=int)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("projrate", parents=[common], help="n^2 D(Bi || Po_beta) along an n-grid")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--n", default="250,500,1000,2000")
    p.set_defaults(func=cmd_projrate)

    p = sub.add_parser("verify", parents=[common], help="run verification suites")
    p.add_argument("--suite", nargs="+", default=["all"], choices=SUITES + ("all",))
    p.add_argument("--grid-step", type=float)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--out-dir", help="directory for curve CSVs (default: next to --csv)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ThinlabError, OSError, ValueError) as exc:
        log.debug("failed", exc_info=True)
        print(f"thinlab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
