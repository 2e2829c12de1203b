"""Command-line interface.

Subcommands: tree, solve, synth, simulate, trials. Exit codes: 0 success,
1 usage error, 2 data/config error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .agents import AuditLog, HttpChatBackend, ScriptedBackend
from .config import default_config, load_config
from .dayio import generate_synthetic_day, load_day_csv, write_day_csv
from .errors import (ConfigError, DomainError, IngestionError, SolverError,
                     WindcommitError)
from .lp_format import parse_lp_file, write_solution
from .milp import solve_milp
from .report import write_comparison, write_report
from .scenario_tree import (ArParams, ProbabilityVector, QuantileSet,
                            build_error_tree, default_probabilities, format_tree)
from .simulator import SimulationConfig, compare_trials, run_simulation
from .uc_model import Generator, UcInstance, build_milp, decode_solution

API_KEY_ENV = "WINDCOMMIT_API_KEY"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SOLVER = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    parser = _Parser(prog="windcommit", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tree", help="print a wind-error scenario tree")
    p.add_argument("--quantiles", default="0.01,0.1,0.5,0.9,0.99",
                   help="comma-separated probability levels")
    p.add_argument("--stages", type=int, default=8)
    p.add_argument("--phi", type=float, default=1.2)
    p.add_argument("--eps-c", type=float, default=0.14)
    p.add_argument("--rule", choices=("paper-default", "midpoint"),
                   default="paper-default")

    p = sub.add_parser("solve", help="solve an LP-format file or a UC instance")
    p.add_argument("--lp-file", help="problem in LP interchange format")
    p.add_argument("--instance", help="UC instance as JSON")
    p.add_argument("--out", help="write the solution file here (default: stdout)")
    p.add_argument("--gap-tol", type=float, default=1e-6)

    p = sub.add_parser("synth", help="generate a synthetic day CSV")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=48)
    p.add_argument("--config", help="optional config supplying AR params and wind cap")

    for name in ("simulate", "trials"):
        p = sub.add_parser(name, help=f"run a {'rolling simulation' if name == 'simulate' else 'trial comparison'}")
        p.add_argument("--config", help="TOML configuration file")
        p.add_argument("--data", help="day CSV (default: bundled synthetic day)")
        p.add_argument("--out-dir", default="out")
        p.add_argument("--mock-script", help="scripted backend replies, one per line")
        p.add_argument("--seed", type=int, help="override config seed")
        if name == "simulate":
            p.add_argument("--mode", choices=("baseline", "llm"))
        else:
            p.add_argument("--trials", type=int, help="override trial count")
    return parser


def _load_cfg(path):
    return load_config(path) if path else default_config()


def _load_data(args, cfg):
    if args.data:
        data = load_day_csv(args.data)
    else:
        from .dayio import load_bundled_day
        data = load_bundled_day()
    data.clamp_wind(cfg.wind_cap)
    return data


def _make_backend(args, cfg, llm):
    if args.mock_script:
        return ScriptedBackend.from_file(args.mock_script)
    key = os.environ.get(API_KEY_ENV)
    if not key:
        raise ConfigError(
            f"llm mode needs either --mock-script or an API key in the "
            f"{API_KEY_ENV} environment variable")
    if not llm.endpoint:
        raise ConfigError("llm mode with a live backend needs llm.endpoint in the config")
    return HttpChatBackend(llm.endpoint, llm.model, key,
                           temperature=llm.temperature, timeout=llm.timeout,
                           max_retries=llm.max_retries)


def _cmd_tree(args):
    levels = tuple(float(tok) for tok in args.quantiles.split(","))
    quantiles = QuantileSet(levels)
    params = ArParams(phi=args.phi, eps_c=args.eps_c)
    probs = default_probabilities(quantiles, args.rule)
    tree = build_error_tree(quantiles, params, args.stages, probabilities=probs)
    sys.stdout.write(format_tree(tree))
    return EXIT_OK


def _instance_from_json(path):
    doc = json.loads(Path(path).read_text())
    try:
        generators = [Generator(**g) for g in doc["generators"]]
        return UcInstance(
            generators=generators,
            dt=float(doc["dt"]),
            voll=float(doc["voll"]),
            demand=np.asarray(doc["demand"], dtype=float),
            wind=np.asarray(doc["wind"], dtype=float),
            probabilities=ProbabilityVector(tuple(doc["probabilities"])),
            initial_commitment=tuple(doc["initial_commitment"]),
            initial_output=tuple(doc["initial_output"]),
            nonanticipativity_stages=int(doc.get("nonanticipativity_stages", 1)),
            ramp_mode=doc.get("ramp_mode", "startup-aware"),
        )
    except KeyError as e:
        raise IngestionError(f"{path}: missing instance field {e}") from e


def _cmd_solve(args):
    if bool(args.lp_file) == bool(args.instance):
        raise _UsageError("solve needs exactly one of --lp-file or --instance")
    if args.lp_file:
        problem = parse_lp_file(args.lp_file)
        solution = solve_milp(problem, gap_tol=args.gap_tol)
        text = write_solution(solution, problem.names)
    else:
        inst = _instance_from_json(args.instance)
        problem, idx = build_milp(inst)
        solution = solve_milp(problem, gap_tol=args.gap_tol)
        text = write_solution(solution, problem.names)
    if args.out:
        Path(args.out).write_text(text, encoding="ascii")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_synth(args):
    cfg, _ = _load_cfg(args.config)
    data = generate_synthetic_day(args.seed, steps=args.steps,
                                  phi=cfg.ar.phi, eps_c=cfg.ar.eps_c,
                                  wind_cap=cfg.wind_cap)
    write_day_csv(data, args.out)
    print(f"wrote {args.steps}-step synthetic day to {args.out}")
    return EXIT_OK


def _cmd_simulate(args):
    cfg, llm = _load_cfg(args.config)
    if args.mode:
        cfg.mode = args.mode
    if args.seed is not None:
        cfg.seed = args.seed
    data = _load_data(args, cfg)
    backend = None
    audit = None
    audit_path = None
    if cfg.mode == "llm":
        backend = _make_backend(args, cfg, llm)
        audit_path = llm.audit_log or str(Path(args.out_dir) / "audit.jsonl")
        Path(audit_path).parent.mkdir(parents=True, exist_ok=True)
        audit = AuditLog(audit_path)
    report = run_simulation(cfg, data, backend=backend, audit=audit)
    artifacts = write_report(report, args.out_dir, config_echo=cfg.to_dict(),
                             audit_log_path=audit_path)
    print(f"wrote report to {artifacts.report_path}")
    return EXIT_OK


def _cmd_trials(args):
    cfg, llm = _load_cfg(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.trials is not None:
        cfg.trials = args.trials
    data = _load_data(args, cfg)

    baseline_cfg = SimulationConfig(**{**cfg.__dict__, "mode": "baseline"})
    baseline = run_simulation(baseline_cfg, data)

    audit_path = llm.audit_log or str(Path(args.out_dir) / "audit.jsonl")
    Path(audit_path).parent.mkdir(parents=True, exist_ok=True)
    trials = []
    for trial in range(cfg.trials):
        trial_cfg = SimulationConfig(**{**cfg.__dict__, "mode": "llm"})
        # each trial owns a fresh backend session
        backend = _make_backend(args, trial_cfg, llm)
        audit = AuditLog(audit_path)
        trials.append(run_simulation(trial_cfg, data, backend=backend,
                                     trial_id=trial, audit=audit))
    summary = compare_trials(baseline, trials)
    artifacts = write_comparison(summary, baseline, trials, args.out_dir,
                                 config_echo=cfg.to_dict(),
                                 audit_log_path=audit_path)
    print(f"wrote comparison to {artifacts.report_path}")
    return EXIT_OK


_COMMANDS = {
    "tree": _cmd_tree,
    "solve": _cmd_solve,
    "synth": _cmd_synth,
    "simulate": _cmd_simulate,
    "trials": _cmd_trials,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, IngestionError, DomainError, json.JSONDecodeError,
            FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except SolverError as e:
        print(f"solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except WindcommitError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
