"""Command-line entry point: ``circlab {simulate,summarize,verify,oracle}``.

Exit codes: 0 all checks pass, 1 usage or configuration error, 2 some check
fails, 3 no failure but some check is inconclusive.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .model import ModelError, load_model
from .reports import dumps, overall_exit_code

EXIT_OK = 0
EXIT_USAGE = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _horizon(value):
    if value == "until-first-cycle":
        return value
    try:
        h = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError("horizon must be a number or 'until-first-cycle'") from None
    if h < 0:
        raise argparse.ArgumentTypeError("horizon must be non-negative")
    return h


def _seed(value):
    s = int(value, 0)
    if not 0 <= s < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return s


def _common(p):
    p.add_argument("--seed", type=_seed, help="master seed (64-bit unsigned)")
    p.add_argument("--dt", type=float, help="Euler-Maruyama step size")
    p.add_argument("--paths", type=int, help="number of paths")
    p.add_argument("--horizon", type=_horizon, help="time horizon or 'until-first-cycle'")
    p.add_argument("--out", type=Path, help="output directory")


def build_parser():
    parser = _Parser(prog="circlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate paths and write cycle logs")
    p.add_argument("model", type=Path, help="model JSON file")
    _common(p)
    p.add_argument("--start", type=float, default=0.0, help="start point")
    p.add_argument("--stationary", action="store_true", help="draw start points from the stationary density")
    p.add_argument("--save-paths", choices=("none", "csv", "binary"), default="none")

    p = sub.add_parser("summarize", help="closed-form summary of a model")
    p.add_argument("model", type=Path)
    p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("verify", help="run the verification suites of a scenario")
    p.add_argument("scenario", type=Path)
    _common(p)

    p = sub.add_parser("oracle", help="exact checks on a ring chain")
    p.add_argument("chain", type=Path, help='chain JSON {"n_sites", "p", "q"}')
    p.add_argument("--horizon", type=float, default=5.0)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("."))
    return parser


def _fail(msg):
    print(f"circlab: error: {msg}", file=sys.stderr)
    return EXIT_USAGE


def _load_model(path):
    try:
        return load_model(path)
    except OSError as exc:
        raise ModelError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    except (ModelError, ValueError, TypeError) as exc:
        raise ModelError(f"{path}: {exc}") from None


def cmd_summarize(args):
    from .analytics import summarize
    from .scenario import write_summary

    model = _load_model(args.model)
    data = write_summary(summarize(model), args.out)
    print(json.dumps(data, sort_keys=True))
    return EXIT_OK


def cmd_simulate(args):
    from .cycles import write_logs_csv
    from .simulation import (
        SimulationConfig,
        dump_paths,
        first_cycle_arrays,
        simulate_batch,
        write_paths_csv,
    )

    model = _load_model(args.model)
    spec = {"start_point": args.start, "stationary_start": args.stationary}
    for key, val in (("master_seed", args.seed), ("step_size", args.dt), ("n_paths", args.paths),
                     ("horizon", args.horizon)):
        if val is not None:
            spec[key] = val
    try:
        config = SimulationConfig(**spec)
    except ValueError as exc:
        return _fail(str(exc))
    out = args.out or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    if config.first_cycle:
        results = simulate_batch(model, config, kind="first_cycle")
        with open(out / "first_cycles.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_id", "T", "sign", "censored"])
            for i, r in enumerate(results):
                if hasattr(r, "sign"):
                    w.writerow([i, repr(r.T), r.sign, 0])
                else:
                    w.writerow([i, repr(r.censoring_time), 0, 1])
        _, _, censored = first_cycle_arrays(results)
        print(f"{len(results)} paths, {censored} censored -> {out / 'first_cycles.csv'}")
    else:
        runs = simulate_batch(model, config, kind="cycles")
        write_logs_csv([r.log for r in runs], out / "logs.csv")
        print(f"{len(runs)} paths -> {out / 'logs.csv'}")
    if args.save_paths != "none":
        paths = simulate_batch(model, config, kind="path")
        if args.save_paths == "csv":
            write_paths_csv(paths, out / "paths.csv")
        else:
            dump_paths(paths, config, out / "paths.bin")
    return EXIT_OK


def cmd_verify(args):
    from .scenario import run_scenario

    overrides = {"master_seed": args.seed, "step_size": args.dt, "n_paths": args.paths, "horizon": args.horizon}
    code = run_scenario(args.scenario, overrides, args.out)
    print(f"exit {code}")
    return code


def cmd_oracle(args):
    from .oracle import RingChain, conditional_first_passage_law, winding_distribution_exact
    from .scenario import oracle_reports

    try:
        chain = RingChain.load(args.chain)
    except OSError as exc:
        return _fail(f"{args.chain}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        return _fail(f"{args.chain}:{exc.lineno}: invalid JSON: {exc.msg}")
    except (ValueError, TypeError, KeyError) as exc:
        return _fail(f"{args.chain}: {exc}")
    if not 0 <= args.start < chain.n_sites:
        return _fail("start must be a site index")
    args.out.mkdir(parents=True, exist_ok=True)
    reports = oracle_reports(chain, args.horizon, args.start)
    (args.out / "oracle_reports.json").write_text(dumps(reports))
    ks, probs = winding_distribution_exact(chain, args.start, args.horizon)
    with open(args.out / "winding.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "p"])
        w.writerows([int(k), repr(float(p))] for k, p in zip(ks, probs))
    law = conditional_first_passage_law(chain, args.start, [0.25 * i for i in range(1, 41)])
    with open(args.out / "conditional_law.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u", "forward", "backward"])
        w.writerows([repr(float(u)), repr(float(a)), repr(float(b))]
                    for u, a, b in zip(law["time_grid"], law["forward"], law["backward"]))
    for r in reports:
        print(r.line())
    return overall_exit_code(reports)


def main(argv=None):
    from .scenario import ScenarioError
    from .simulation import BatchError

    args = build_parser().parse_args(argv)
    handler = {"simulate": cmd_simulate, "summarize": cmd_summarize, "verify": cmd_verify, "oracle": cmd_oracle}
    try:
        return handler[args.command](args)
    except (ScenarioError, ModelError) as exc:
        return _fail(str(exc))
    except BatchError as exc:
        print(f"circlab: simulation failed: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
