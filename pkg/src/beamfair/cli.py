"""Command line entry point.

Exit codes: 0 success, 1 validation error, 2 solver non-convergence, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time

import numpy as np

from beamfair._backend import BACKEND
from beamfair.harness import (
    DEFAULT_BUDGETS_DBM,
    ExperimentSpec,
    output_path,
    run_power_sweep,
    run_sa_vs_bf,
    write_bf_surface,
    write_trace,
)
from beamfair.model import BeamConfig, ConfigError, NetworkScenario, generate_scenario, load_config
from beamfair.search import SaParams, brute_force, simulated_annealing
from beamfair.solver import DEFAULT_MAX_ITER, DEFAULT_TOL, ConvergenceError, solve_config

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("beamfair")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario/parameter JSON (default: shipped default_scenario.json)")
    common.add_argument("--scenario", help="replay an exported scenario JSON instead of generating one")
    common.add_argument("--seed", type=_u64, default=0)
    common.add_argument("--trials", type=int, default=None)
    common.add_argument("--budget-dbm", type=_float_list, default=None)
    common.add_argument("--out", default=None, help="output path prefix; a trailing '/' means a directory")
    common.add_argument("--beam-widths", type=_float_list, default=None)
    common.add_argument("--beam-dirs", type=_float_list, default=None)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL)
    common.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    common.add_argument("--tau-max", type=float, default=SaParams.tau_max)
    common.add_argument("--tau-min", type=float, default=SaParams.tau_min)
    common.add_argument("--i-max", type=int, default=SaParams.i_max)
    common.add_argument("--stall-limit", type=int, default=SaParams.stall_limit)
    common.add_argument("--sa-seeds", type=_int_list, default=None, help="SA seeds for compare (default 0..19)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="beamfair", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("generate", parents=[common], help="draw scenario realizations and export them as JSON")
    sub.add_parser("solve", parents=[common], help="optimal powers for one beam configuration")
    sub.add_parser("sweep", parents=[common], help="Monte Carlo power-budget sweep")
    sub.add_parser("sa", parents=[common], help="simulated annealing over beam configurations")
    sub.add_parser("bf", parents=[common], help="brute force over beam configurations")
    sub.add_parser("compare", parents=[common], help="SA efficiency against brute force")
    return parser


def _beam_config(args, config) -> BeamConfig | None:
    if args.beam_widths is None and args.beam_dirs is None:
        return None
    if args.beam_widths is None or args.beam_dirs is None:
        raise ConfigError("--beam-widths and --beam-dirs must be given together")
    n = config.params.n_aps
    if len(args.beam_widths) != n or len(args.beam_dirs) != n:
        raise ConfigError(
            f"beam vectors have {len(args.beam_widths)} widths and {len(args.beam_dirs)} directions; n_aps={n}"
        )
    bc = BeamConfig(args.beam_widths, args.beam_dirs)
    bc.validate(config.params)
    return bc


def _load_scenario(path) -> NetworkScenario:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid scenario JSON: {exc}") from exc
    return NetworkScenario.from_dict(doc)


def _spec(args, mode: str) -> ExperimentSpec:
    config = load_config(args.config)
    budgets = tuple(args.budget_dbm) if args.budget_dbm else None
    if budgets is None:
        budgets = DEFAULT_BUDGETS_DBM if mode == "sweep" else (config.params.power_budget_dbm,)
    if mode != "sweep" and len(budgets) != 1:
        raise ConfigError(f"{mode} takes a single --budget-dbm value")
    if mode != "sweep":
        config.params = config.params.replace(power_budget_dbm=budgets[0])
    scenario = _load_scenario(args.scenario) if args.scenario else None
    if scenario is not None and scenario.n_aps != config.params.n_aps:
        raise ConfigError("scenario AP count does not match the configuration")
    if scenario is not None and scenario.n_ues != config.params.n_ues:
        raise ConfigError("scenario UE count does not match the configuration")
    sa = SaParams(args.tau_max, args.tau_min, args.i_max, args.stall_limit, args.seed)
    kwargs = {}
    if args.sa_seeds is not None:
        kwargs["sa_seeds"] = tuple(args.sa_seeds)
    return ExperimentSpec(
        mode=mode,
        config=config,
        seed=args.seed,
        trials=args.trials if args.trials is not None else 500,
        budgets_dbm=budgets,
        beam_config=_beam_config(args, config),
        out=args.out if args.out is not None else "results/",
        scenario=scenario,
        sa_params=sa,
        tol=args.tol,
        max_iter=args.max_iter,
        **kwargs,
    )


def _emit(doc: dict) -> None:
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_generate(args) -> int:
    config = load_config(args.config)
    trials = args.trials if args.trials is not None else 1
    if trials < 1:
        raise ConfigError("trials must be at least 1")
    docs = []
    for t in range(trials):
        sc = generate_scenario(config.params, config.ap_positions, seed=args.seed, trial=t)
        docs.append(sc.to_dict())
    if args.out is None:
        _emit(docs[0] if trials == 1 else {"scenarios": docs})
        return EXIT_OK
    for t, doc in enumerate(docs):
        with open(output_path(args.out, f"scenario_{t}.json"), "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def cmd_solve(args) -> int:
    spec = _spec(args, "solve")
    sc = spec.get_scenario()
    bc = spec.fixed_config()
    try:
        sol = solve_config(sc, bc, spec.params, tol=spec.tol, max_iter=spec.max_iter)
    except ConvergenceError as exc:
        print(f"beamfair: {exc}", file=sys.stderr)
        if exc.solution is not None:
            _emit({"error": str(exc), **exc.solution.to_dict()})
        return EXIT_NONCONVERGED
    doc = {"seed": spec.seed, "beam_config": bc.to_dict(), **sol.to_dict()}
    _emit(doc)
    if args.out is not None:
        with open(output_path(args.out, "solution.json"), "w") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = _spec(args, "sweep")
    res = run_power_sweep(spec)
    _emit({
        "trials": spec.trials,
        "failed_trials": [t for t, _ in res.failed_trials],
        "files": [str(f) for f in res.files],
    })
    return EXIT_OK


def cmd_sa(args) -> int:
    spec = _spec(args, "sa")
    sc = spec.get_scenario()
    t0 = time.perf_counter()
    cfg, sol, trace = simulated_annealing(sc, spec.params, spec.sa_params, solve_kwargs=spec.solve_kwargs())
    elapsed = time.perf_counter() - t0
    path = write_trace(output_path(spec.out, f"sa_trace_{spec.sa_params.seed}.csv"), trace, spec.params.n_aps)
    log.info("SA finished in %.2f s", elapsed)
    _emit({
        "beam_config": cfg.to_dict(),
        "utility": sol.c_star,
        "evaluations": trace.evaluations,
        "unique_evaluations": trace.unique_evaluations,
        "trace": str(path),
        "solution": sol.to_dict(),
    })
    return EXIT_OK


def cmd_bf(args) -> int:
    spec = _spec(args, "bf")
    sc = spec.get_scenario()
    cfg, sol, utilities = brute_force(sc, spec.params, solve_kwargs=spec.solve_kwargs())
    path = write_bf_surface(output_path(spec.out, "bf_surface.csv"), spec.params, utilities)
    _emit({"beam_config": cfg.to_dict(), "utility": sol.c_star, "surface": str(path), "solution": sol.to_dict()})
    return EXIT_OK


def cmd_compare(args) -> int:
    spec = _spec(args, "compare")
    res = run_sa_vs_bf(spec)
    eff = res.efficiencies
    log.info("BF %.2f s, SA mean %.2f s", res.bf_seconds, sum(res.sa_seconds) / len(res.sa_seconds))
    _emit({
        "bf_beam_config": res.bf_config.to_dict(),
        "bf_utility": res.bf_utility,
        "median_efficiency": float(np.median(eff)),
        "files": [str(f) for f in res.files],
    })
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "sa": cmd_sa,
    "bf": cmd_bf,
    "compare": cmd_compare,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    log.debug("kernel backend: %s", BACKEND)
    try:
        return COMMANDS[args.command](args)
    except ConvergenceError as exc:
        print(f"beamfair: solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ConfigError, ValueError) as exc:
        print(f"beamfair: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"beamfair: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
