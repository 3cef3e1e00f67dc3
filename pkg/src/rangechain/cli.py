"""Command-line interface.

Four subcommands: ``exact`` (finite-n laws from the chain), ``simulate``
(Monte Carlo experiments), ``limit`` (limit-law evaluation), and
``compare`` (simulate + goodness-of-fit verdicts).  Every run prints a
single record that embeds its full statistical configuration, so output
is reproducible from the record alone.  Exit codes: 0 success/pass,
1 verdict failure, 2 usage or config error, 3 resource ceiling.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from . import analysis, exact, limitlaw, montecarlo
from .chain import build_chain
from .errors import ResourceCeilingError

SCHEMA_VERSION = "1"

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_CONFIG = 2
EXIT_CEILING = 3


def _fmt(value):
    """JSON-ready scalar; rationals go to 'p/q' strings, never floats."""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return value


def _record(command: str, config: dict, payload: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "payload": payload,
    }


def _emit_json(record: dict, out) -> None:
    out.write(json.dumps(record, indent=2, sort_keys=True) + "\n")


def _csv_comments(record: dict, out) -> None:
    out.write(f"# schema_version={record['schema_version']}\n")
    out.write(f"# command={record['command']}\n")
    for key in sorted(record["config"]):
        out.write(f"# {key}={record['config'][key]}\n")


def _error(message: str, code: int) -> int:
    sys.stderr.write(
        json.dumps({"error": {"exit_code": code, "message": message}}) + "\n"
    )
    return code


def _parse_points(args, flag_single: str) -> list[float]:
    single = getattr(args, flag_single)
    if args.grid is not None:
        try:
            start, stop, count = args.grid.split(":")
            pts = np.linspace(float(start), float(stop), int(count))
        except Exception as e:
            raise ValueError(f"bad --grid {args.grid!r}: want start:stop:count") from e
        return [float(p) for p in pts]
    if single is None:
        raise ValueError(f"need --{flag_single} or --grid")
    return [single]


def cmd_exact(args) -> int:
    chain = build_chain(args.n)
    pmf = exact.time_to_constant_pmf(chain, tail_tol=args.tail_tol)
    config = {
        "n": args.n,
        "tail_tol": args.tail_tol if args.tail_tol is not None else "auto",
    }
    payload = {
        "mode": "exact" if pmf.exact else "float",
        "pmf": [[pmf.offset + i, _fmt(p)] for i, p in enumerate(pmf.masses)],
        "tail_mass": _fmt(pmf.tail_mass),
        "mean_t": _fmt(pmf.mean()),
    }
    if args.n >= 2:
        vis = exact.visit_probabilities(chain)
        payload["visit_probability"] = {str(m): _fmt(v) for m, v in sorted(vis.items())}
        payload["expected_visited_count"] = _fmt(sum(vis.values(), Fraction(0)))
    else:
        payload["visit_probability"] = {}
        payload["expected_visited_count"] = _fmt(Fraction(0))
    record = _record("exact", config, payload)
    if args.format == "json":
        _emit_json(record, sys.stdout)
    else:
        _csv_comments(record, sys.stdout)
        sys.stdout.write(f"# mode={payload['mode']}\n")
        sys.stdout.write(f"# mean_t={payload['mean_t']}\n")
        sys.stdout.write(f"# tail_mass={payload['tail_mass']}\n")
        sys.stdout.write(
            f"# expected_visited_count={payload['expected_visited_count']}\n"
        )
        sys.stdout.write("t,probability\n")
        for t, p in payload["pmf"]:
            sys.stdout.write(f"{t},{p}\n")
    return EXIT_OK


def _experiment_config(args) -> montecarlo.ExperimentConfig:
    split = exact.SplitSpec(xi=args.xi) if args.xi is not None else None
    return montecarlo.ExperimentConfig(
        n=args.n,
        samples=args.samples,
        seed=args.seed,
        sampler=args.sampler,
        split=split,
        workers=args.workers,
    )


def _sim_config_echo(cfg: montecarlo.ExperimentConfig) -> dict:
    # workers deliberately not echoed: it cannot affect the payload
    return {
        "n": cfg.n,
        "samples": cfg.samples,
        "seed": cfg.seed,
        "sampler": cfg.sampler,
        "xi": cfg.split.xi,
        "xi_source": cfg.split.source,
    }


def _emit_summary_csv(record: dict, summary: montecarlo.SimSummary) -> None:
    _csv_comments(record, sys.stdout)
    sys.stdout.write("# t_over_n vector omitted in csv; use json or --emit-samples\n")
    sys.stdout.write("key,value\n")
    scalars = [
        ("t_over_n_mean", summary.t_over_n_mean),
        ("t_over_n_var", summary.t_over_n_var),
        ("t2_over_n_mean", summary.t2_over_n_mean),
        ("a_frequency", summary.a_frequency),
        ("n_visited_mean", summary.n_visited_mean),
        ("n_visited_var", summary.n_visited_var),
    ]
    for key, val in scalars:
        sys.stdout.write(f"{key},{val}\n")
    for m, f in sorted(summary.visit_frequency.items()):
        sys.stdout.write(f"visit_frequency_{m},{f}\n")


def cmd_simulate(args) -> int:
    cfg = _experiment_config(args)
    summary = montecarlo.run_experiment(cfg)
    if args.emit_samples:
        if summary.t_over_n is None:
            raise ValueError(
                "--emit-samples needs the full sample vector, but this run "
                "was large enough to be sketched"
            )
        with open(args.emit_samples, "w") as fh:
            for v in summary.t_over_n:
                fh.write(f"{v!r}\n")
    record = _record("simulate", _sim_config_echo(cfg), summary.to_dict())
    if args.format == "json":
        _emit_json(record, sys.stdout)
    else:
        _emit_summary_csv(record, summary)
    return EXIT_OK


def cmd_limit(args) -> int:
    if args.tol is not None:
        law = limitlaw.LimitLawConfig(tol=args.tol)
    else:
        law = limitlaw.DEFAULT_CONFIG
    config = {"what": args.what, "tol": law.tol}
    if args.what == "charfn":
        points = _parse_points(args, "t")
        rows = []
        for t in points:
            z = limitlaw.charfn_closed(t, law)
            rows.append([t, z.real, z.imag])
        header = ["t", "real", "imag"]
    else:
        fn = limitlaw.density if args.what == "density" else limitlaw.cdf
        points = _parse_points(args, "x")
        rows = []
        for x in points:
            ev = fn(x, law)
            rows.append([x, ev.value, ev.error_bound])
        header = ["x", "value", "error_bound"]
    record = _record("limit", config, {"header": header, "rows": rows})
    if args.format == "json":
        _emit_json(record, sys.stdout)
    else:
        _csv_comments(record, sys.stdout)
        sys.stdout.write(",".join(header) + "\n")
        for row in rows:
            sys.stdout.write(",".join(repr(v) for v in row) + "\n")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _experiment_config(args)
    summary = montecarlo.run_experiment(cfg)
    report = analysis.fit_report(summary, alpha=args.alpha)
    checks = ("ks", "mean", "en") if args.check == "all" else (args.check,)
    config = _sim_config_echo(cfg)
    config["alpha"] = args.alpha
    config["check"] = args.check
    payload = report.to_dict()
    record = _record("compare", config, payload)
    if args.format == "json":
        _emit_json(record, sys.stdout)
    else:
        _csv_comments(record, sys.stdout)
        sys.stdout.write("key,value\n")
        for key in ("ks_statistic", "dkw_epsilon", "mean_error", "en_ratio"):
            sys.stdout.write(f"{key},{payload[key]}\n")
        for v in report.verdicts:
            sys.stdout.write(f"verdict_{v.name},{'pass' if v.passed else 'fail'}\n")
    return EXIT_OK if report.passed(checks) else EXIT_VERDICT


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True, help="ground-set size")
    p.add_argument("--samples", type=int, required=True, help="trajectory count")
    p.add_argument("--seed", type=int, default=0, help="64-bit stream seed")
    p.add_argument(
        "--sampler", choices=("chain", "direct"), default="chain",
        help="range-size chain sampler or explicit function tables",
    )
    p.add_argument("--xi", type=int, default=None, help="override the T1/T2 threshold")
    p.add_argument("--workers", type=int, default=1, help="thread count (no effect on output)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rangechain",
        description="Coalescence times of iterated uniform random functions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", help="exact finite-n law of T from the chain")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tail-tol", type=float, default=None, dest="tail_tol")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(fn=cmd_exact)

    p = sub.add_parser("simulate", help="Monte Carlo experiment")
    _add_sim_flags(p)
    p.add_argument(
        "--emit-samples", default=None, dest="emit_samples", metavar="PATH",
        help="also write sorted T/n values, one per line",
    )
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("limit", help="evaluate the limit law")
    p.add_argument("--what", choices=("density", "cdf", "charfn"), required=True)
    p.add_argument("--x", type=float, default=None)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--grid", default=None, help="start:stop:count")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(fn=cmd_limit)

    p = sub.add_parser("compare", help="simulate and test against the limit law")
    _add_sim_flags(p)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--check", choices=("all", "ks", "mean", "en"), default="all")
    p.set_defaults(fn=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ResourceCeilingError as e:
        return _error(str(e), EXIT_CEILING)
    except (ValueError, OSError) as e:
        return _error(str(e), EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main())
