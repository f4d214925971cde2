#!/usr/bin/env python3
"""
Command-line runner for cdqsim experiments.

Subcommands: evolve, sweep, gatecount, mitigate-demo, export-circuit.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from utils.config import get_config
from cdqsim import exports, plots
from cdqsim.cd_drivers import (
    NestedCommutatorCD,
    local_alpha_regression,
    make_cd_term,
    two_spin_alpha_regression,
    zz_coefficient_regression,
)
from cdqsim.circuits import compile_plan, compile_problem, gate_stats, steps_to_threshold
from cdqsim.errors import CDQSimError, ConvergenceError, NumericalError, UnsupportedTermError
from cdqsim.evolution import trotter_evolve
from cdqsim.noise import ReadoutModel, apply_readout_noise, mitigation_experiment
from cdqsim.problem_config import ExperimentConfig, load_config
from cdqsim.reference_data import (
    IDEAL_FIDELITY_REFERENCE,
    gate_count_reference,
    optimization_reference,
)
from cdqsim.run_store import RunStore, default_store_url

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
REGRESSION_LAMBDAS = tuple(np.linspace(0.0, 1.0, 11))


def _slug(method: str) -> str:
    return method.replace(":", "").replace("-", "_")


def run_evolve(config: ExperimentConfig, args: argparse.Namespace) -> Dict[str, Any]:
    """Per-step CSV for every configured method, plus sampled histograms when shots > 0."""
    out = Path(config.out)
    header = config.resolved()
    problem = config.problem.build()
    seeds = np.random.SeedSequence(config.seed).spawn(len(config.methods))
    results = []
    summary: Dict[str, Any] = {}
    for method, child_seed in zip(config.methods, seeds):
        cd = make_cd_term(method, problem)
        result = trotter_evolve(
            problem, cd, snapshots=False, order=config.order, sampling=config.sampling
        )
        results.append(result)
        slug = _slug(method)
        exports.write_evolution(out / f"evolution_{slug}.csv", result, header, config.seed)
        if isinstance(cd, NestedCommutatorCD):
            exports.write_solve_records(
                out / f"solve_records_{slug}.csv", cd.solve_records(), header, config.seed
            )
        if config.shots > 0:
            model = ReadoutModel.symmetric(problem.n_qubits, config.readout_error)
            histogram = apply_readout_noise(
                result.final_state.probabilities(), model, child_seed, config.shots
            )
            exports.write_histogram(
                out / f"histogram_{slug}.csv", histogram, header, config.seed
            )
        if getattr(args, "dump_state", False):
            exports.write_state_dump(out / f"final_state_{slug}.bin", result.final_state)
        summary[method] = {"p_gs": result.final_p_gs, "fidelity": result.final_fidelity}
        logger.info(
            f"{problem.name} [{method}]: P_gs={result.final_p_gs:.6f}, "
            f"F={result.final_fidelity:.6f}"
        )

    spec = problem.chain
    if spec is not None and spec.n == 2 and spec.is_uniform and spec.j0 != 0.0:
        rows = two_spin_alpha_regression(problem, REGRESSION_LAMBDAS)
        exports.write_alpha_regression(out / "alpha_regression.csv", rows, header, config.seed)
    if "local-var" in config.methods and spec is not None and spec.is_uniform:
        rows = local_alpha_regression(problem, REGRESSION_LAMBDAS)
        exports.write_local_regression(
            out / "local_alpha_regression.csv", rows, header, config.seed
        )
    if "zz-closed" in config.methods:
        rows = zz_coefficient_regression(problem, REGRESSION_LAMBDAS)
        exports.write_zz_regression(
            out / "zz_coefficient_regression.csv", rows, header, config.seed
        )

    reference = IDEAL_FIDELITY_REFERENCE.get(problem.name)
    if reference is not None:
        for method, values in summary.items():
            if method != "none":
                values["quoted_fidelity"] = reference
                logger.info(
                    f"{problem.name} [{method}]: F={values['fidelity']:.4f} vs quoted "
                    f"ideal {reference}"
                )

    if config.svg:
        plots.save_figure(plots.evolution_figure(results, problem.name), out / "evolution")
    return summary


def _sweep_point(config: ExperimentConfig, x: float, method: str) -> List[Any]:
    problem = config.sweep.problem_at(config.problem, x)
    cd = make_cd_term(method, problem)
    result = trotter_evolve(
        problem, cd, record=False, order=config.order, sampling=config.sampling
    )
    try:
        stats = gate_stats(compile_plan(result.plan))
        rotations, cnots = stats.rotations, stats.cnots
    except UnsupportedTermError as e:
        logger.debug(f"No gate count at x={x} [{method}]: {e}")
        rotations = cnots = None
    return [x, result.final_p_gs, result.final_fidelity, rotations, cnots]


def run_sweep(config: ExperimentConfig, args: argparse.Namespace) -> Dict[str, Any]:
    """One CSV per method with a row per grid point, in grid order."""
    if config.sweep is None:
        raise CDQSimError("The sweep command needs a [sweep] table")
    out = Path(config.out)
    header = config.resolved()
    sweep = config.sweep
    jobs = [(method, x) for method in sweep.methods for x in sweep.grid]
    logger.info(
        f"Sweeping {sweep.axis} over {len(sweep.grid)} points x {len(sweep.methods)} "
        f"methods with {config.threads} worker(s)"
    )
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        futures = [pool.submit(_sweep_point, config, x, method) for method, x in jobs]
        rows = [future.result() for future in futures]

    curves: Dict[str, List] = {}
    summary: Dict[str, Any] = {}
    for method in sweep.methods:
        method_rows = [row for (m, _), row in zip(jobs, rows) if m == method]
        exports.write_sweep(
            out / f"sweep_{sweep.axis}_{_slug(method)}.csv", method_rows, header, config.seed
        )
        curves[method] = [(row[0], row[1]) for row in method_rows]
        summary[method] = {"p_gs": [row[1] for row in method_rows]}
    if config.svg:
        plots.save_figure(plots.sweep_figure(curves, sweep.axis), out / f"sweep_{sweep.axis}")
    return summary


def run_gatecount(config: ExperimentConfig, args: argparse.Namespace) -> Dict[str, Any]:
    """Smallest step count reaching each problem's threshold, with and without CD."""
    if not config.gatecount:
        raise CDQSimError("The gatecount command needs a [gatecount] table")
    rows = []
    summary: Dict[str, Any] = {}
    for case in config.gatecount:
        problem = case.problem.build()
        runs = [(case.cd_method, case.dt_cd)]
        runs += [(method, case.dt_cd) for method in case.compare]
        runs.append(("none", case.dt_plain))
        for method, dt in runs:
            row = steps_to_threshold(
                problem, method, dt, case.threshold, config.max_steps,
                order=config.order, sampling=config.sampling,
            )
            rows.append(row.as_row())
            summary[f"{problem.name}:{method}"] = {
                "steps": row.steps,
                "fidelity": row.fidelity,
                "reached": row.reached,
            }
            try:
                ref = gate_count_reference(problem.name, method != "none")
                logger.info(
                    f"{problem.name} [{method}]: {row.steps} steps vs reference "
                    f"{ref.trotter_steps} (F={ref.fidelity})"
                )
            except KeyError:
                pass
    exports.write_gate_stats(Path(config.out) / "gate_stats.csv", rows, config.resolved(), config.seed)
    return summary


def run_mitigate_demo(config: ExperimentConfig, args: argparse.Namespace) -> Dict[str, Any]:
    """Evolve, sample with readout noise, mitigate, compare total-variation distances."""
    out = Path(config.out)
    header = config.resolved()
    problem = config.problem.build()
    method = config.methods[-1]
    result = trotter_evolve(
        problem, make_cd_term(method, problem), order=config.order, sampling=config.sampling
    )
    shots = config.shots or get_config().SHOTS
    model = ReadoutModel.symmetric(problem.n_qubits, config.readout_error)
    report = mitigation_experiment(result.final_state.probabilities(), model, shots, config.seed)
    exports.write_histogram(out / "histogram.csv", report.histogram, header, config.seed)
    exports.write_mitigation_report(out / "mitigation.csv", report, header, config.seed)
    if config.svg:
        plots.save_figure(plots.histogram_figure(report), out / "mitigation")
    logger.info(
        f"TV distance to ideal: noisy={report.tv_noisy:.4f}, "
        f"mitigated={report.tv_mitigated:.4f} ({shots} shots, seed {config.seed})"
    )
    return {
        "tv_noisy": report.tv_noisy,
        "tv_mitigated": report.tv_mitigated,
        "shots": shots,
        "seed": config.seed,
    }


def run_export_circuit(config: ExperimentConfig, args: argparse.Namespace) -> Dict[str, Any]:
    """QASM text plus a gate-stats row for the configured problem."""
    out = Path(config.out)
    header = config.resolved()
    problem = config.problem.build()
    method = args.method or config.methods[-1]
    circuit, value = compile_problem(
        problem, method, optimized=not args.no_optimize,
        order=config.order, sampling=config.sampling,
    )
    stats = gate_stats(circuit)
    slug = _slug(method)
    exports.write_qasm(out / f"circuit_{slug}.qasm", circuit, header, config.seed)
    row = [
        problem.name, method, problem.n_steps, stats.rotations,
        stats.cnots, stats.expected_error, value,
    ]
    exports.write_gate_stats(out / f"gate_stats_{slug}.csv", [row], header, config.seed)
    try:
        ref = optimization_reference(problem.name, not args.no_optimize)
        logger.info(
            f"{problem.name}: {stats.rotations} rotations, {stats.cnots} CNOTs vs device "
            f"transpile {ref.rotations}/{ref.cnots} (ideal F={ref.ideal_fidelity})"
        )
    except KeyError:
        pass
    return {"rotations": stats.rotations, "cnots": stats.cnots, "fidelity": value}


COMMANDS = {
    "evolve": run_evolve,
    "sweep": run_sweep,
    "gatecount": run_gatecount,
    "mitigate-demo": run_mitigate_demo,
    "export-circuit": run_export_circuit,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdqsim", description="Digitized counter-diabatic annealing experiments"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, func in COMMANDS.items():
        sub = subparsers.add_parser(name, help=(func.__doc__ or "").strip().splitlines()[0])
        sub.add_argument("--config", required=True, help="Experiment file (.toml or .json)")
        sub.add_argument("--out", help="Output directory (overrides the file)")
        sub.add_argument("--seed", type=int, help="Sampling seed (overrides the file)")
        sub.add_argument("--threads", type=int, help="Worker threads for sweeps")
        sub.add_argument("--svg", action="store_true", default=None, help="Also write plots")
        sub.add_argument("--no-store", action="store_true", help="Do not record the run")
        if name == "evolve":
            sub.add_argument("--dump-state", action="store_true", help="Write final state binaries")
        if name == "export-circuit":
            sub.add_argument("--method", help="CD method to compile (default: last configured)")
            sub.add_argument("--no-optimize", action="store_true", help="Skip peephole passes")
    return parser


def _record(config: ExperimentConfig, command: str, summary: Dict[str, Any]) -> None:
    try:
        store = RunStore(default_store_url(config.out))
        store.record_run(command, config.resolved(), config.seed, summary, config.out)
    except Exception as e:
        logger.error(f"❌ Could not record run: {e}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = get_config()
    logging.basicConfig(
        level=settings.LOG_LEVEL,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_CONFIG

    try:
        config = load_config(args.config).with_overrides(
            out=args.out, seed=args.seed, threads=args.threads, svg=args.svg
        )
        summary = COMMANDS[args.command](config, args)
    except ConvergenceError as e:
        logger.error(f"❌ {e}")
        return EXIT_NUMERICAL
    except NumericalError as e:
        logger.error(f"❌ Numerical failure: {e}", exc_info=True)
        return EXIT_NUMERICAL
    except FileNotFoundError as e:
        logger.error(f"❌ {e}")
        return EXIT_CONFIG
    except (CDQSimError, ValueError) as e:
        logger.error(f"❌ Configuration error: {e}")
        return EXIT_CONFIG

    if not args.no_store:
        _record(config, args.command, summary)
    logger.info(f"✅ {args.command} finished; outputs in {config.out}")
    return EXIT_OK


if __name__ == "__main__":
    exit(main())
