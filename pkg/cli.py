import argparse
import logging
import os
import sys

import numpy as np

from holonomic_optics.compiler import (
    compile_unitary,
    emit_schedule,
    program_fidelity,
    simulate_program,
)
from holonomic_optics.config import RunConfig
from holonomic_optics.dynamics import (
    adiabatic_run,
    adiabaticity_metric,
    nonadiabatic_run,
    schedule_holonomy,
)
from holonomic_optics.errors import Error, InputError, LevelCrossingError, VerificationError
from holonomic_optics.fock import fock_basis, lift_unitary, write_sector
from holonomic_optics.gadgets.verifier import failed_checks, run_suite, write_report
from holonomic_optics.kerr import KerrParameters, compare_readings, corner_holonomy
from holonomic_optics.schedules import LoopSchedule
from holonomic_optics.utils import (
    format_float,
    matrix_from_json,
    matrix_to_json,
    read_json,
    write_json,
    write_series_csv,
)

logger = logging.getLogger("holonomic_optics.cli")


def _load_config(args, task):
    overrides = {"out": args.out, "steps": args.steps, "seed": args.seed}
    if args.config:
        return RunConfig.load(args.config, task=task, **overrides)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return RunConfig.create(task, **overrides)


def _output(config, name):
    return os.path.join(config.out, name)


def cmd_simulate(config):
    schedule = LoopSchedule.from_json(read_json(config.input("schedule")))
    every = config.options.get("every", max(1, config.steps // 100))
    if not isinstance(every, int) or isinstance(every, bool) or every < 1:
        raise InputError("Option every must be a positive integer, got {!r}".format(every))
    if schedule.family == "pulse" or schedule.envelope is not None:
        result = nonadiabatic_run(schedule, steps=config.steps, every=every)
    else:
        result = adiabatic_run(
            schedule, T=config.options.get("T"), steps=config.steps, every=every
        )

    propagator = matrix_to_json(result.propagator.entries)
    propagator.update(
        {
            "leakage": result.leakage,
            "extracted_holonomy": matrix_to_json(result.extracted_holonomy.entries),
            "dynamical_phases": list(result.dynamical_phases),
        }
    )
    write_json(_output(config, "propagator.json"), propagator)
    times, leakage = result.series
    write_series_csv(_output(config, "leakage.csv"), times, leakage)

    metric_times, metric = [], []
    for t in times:
        try:
            metric.append(adiabaticity_metric(schedule, t))
        except LevelCrossingError:
            # couplings switched off (pulse edges): no gap to compare against
            continue
        metric_times.append(t)
    write_series_csv(_output(config, "metric.csv"), metric_times, metric)

    print("Leakage", file=sys.stderr)
    print("leakage={}".format(format_float(result.leakage)))
    return 0


def cmd_holonomy(config):
    if "kerr" in config.inputs:
        params = KerrParameters.load(config.input("kerr"))
        T = float(config.options.get("T", 2 * np.pi))
        U = corner_holonomy(params, T)
        comparison = compare_readings(params, np.array([1.0, 0.0]), np.linspace(0.0, T, 9))
        out = matrix_to_json(U.entries)
        out["readings"] = comparison.to_json()
        write_json(_output(config, "holonomy.json"), out)
        print("Corner holonomy defect", file=sys.stderr)
        print("defect={}".format(format_float(U.defect())))
        return 0

    schedule = LoopSchedule.from_json(read_json(config.input("schedule")))
    holonomy = schedule_holonomy(schedule)
    write_json(_output(config, "holonomy.json"), holonomy.to_json())
    print("Convergence estimate", file=sys.stderr)
    print("convergence={}".format(format_float(holonomy.convergence_estimate)))
    return 0


def cmd_compile(config):
    target = matrix_from_json(read_json(config.input("target")))
    options = config.options
    program = compile_unitary(target, options.get("mode", "nonadiabatic"), config.seed)
    M = options.get("M")
    T_per_loop = float(options.get("T_per_loop", 1.0))
    kappa = float(options.get("kappa", 1.0))

    write_json(_output(config, "program.json"), program.to_json())
    for i, schedule in enumerate(emit_schedule(program, M, T_per_loop, kappa)):
        name = os.path.join("schedules", "loop_{:03d}.json".format(i))
        write_json(_output(config, name), schedule.to_json())

    fidelity = program.fidelity_estimate
    if options.get("simulate", False):
        simulated = simulate_program(program, M, T_per_loop, config.steps, kappa)
        write_json(_output(config, "simulated.json"), matrix_to_json(simulated))
        fidelity = program_fidelity(program, target, simulated)
    print("Trace fidelity", file=sys.stderr)
    print("fidelity={}".format(format_float(fidelity)))
    return 0


def cmd_lift(config):
    U = matrix_from_json(read_json(config.input("unitary")))
    N = int(config.options.get("N", 2))
    lifted = lift_unitary(U, N)
    basis = fock_basis(U.shape[0], N)
    write_sector(_output(config, "sector.json"), lifted.entries, basis)
    print("Sector size", file=sys.stderr)
    print("size={}".format(len(basis)))
    return 0


def cmd_verify(config, mutate=None):
    report = run_suite(config.seed, mutate or config.options.get("mutate"))
    write_report(_output(config, "report.json"), report)
    passed = sum(1 for c in report["checks"] if c["passed"])
    print("Passed checks", file=sys.stderr)
    print("passed={}/{}".format(passed, len(report["checks"])))
    if not report["passed"]:
        raise VerificationError(failed_checks(report))
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "holonomy": cmd_holonomy,
    "compile": cmd_compile,
    "lift": cmd_lift,
    "verify": cmd_verify,
}


def _add_common(subparser):
    subparser.add_argument("-c", "--config", help="Run configuration (JSON)")
    subparser.add_argument("-o", "--out", help="Output directory, overrides the config")
    subparser.add_argument("--steps", type=int, help="Integrator steps, overrides the config")
    subparser.add_argument("--seed", type=int, help="Random seed, overrides the config")
    subparser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")


def main(argv=None):
    parser = argparse.ArgumentParser(description="holonomic linear-optics command-line interface")
    subparsers = parser.add_subparsers(dest="subparser_name")

    simulate_parser = subparsers.add_parser(
        "simulate",
        help="Propagate a loop schedule; writes propagator.json, leakage.csv and metric.csv",
    )
    _add_common(simulate_parser)

    holonomy_parser = subparsers.add_parser(
        "holonomy",
        help="Geometric holonomy of a loop schedule or of a Kerr (alpha, xi) loop",
    )
    _add_common(holonomy_parser)

    compile_parser = subparsers.add_parser(
        "compile",
        help="Compile a target unitary into loop schedules; prints fidelity=<value>",
    )
    _add_common(compile_parser)

    lift_parser = subparsers.add_parser(
        "lift", help="Lift a mode unitary to an N-photon Fock sector"
    )
    _add_common(lift_parser)

    verify_parser = subparsers.add_parser(
        "verify", help="Run the invariant checks; writes report.json"
    )
    _add_common(verify_parser)
    verify_parser.add_argument(
        "--mutate", help="Inject a known defect (connection-sign) into the checks"
    )

    args = parser.parse_args(argv)
    subparser_name = args.subparser_name
    if subparser_name not in COMMANDS:
        parser.print_usage(sys.stderr)
        raise NotImplementedError("Sub-command not implemented: {}".format(subparser_name))

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _load_config(args, subparser_name)
        if subparser_name == "verify":
            return cmd_verify(config, args.mutate)
        return COMMANDS[subparser_name](config)
    except Error as e:
        logger.error("%s", e)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
