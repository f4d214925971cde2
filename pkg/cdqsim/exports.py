"""
CSV, QASM and binary writers.

Every text file opens with a reproducibility header of ``#`` lines carrying
the resolved experiment config and seed; the CSV body after the header is a
deterministic function of both.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from cdqsim.circuits import Circuit, to_qasm
from cdqsim.evolution import EvolutionResult
from cdqsim.noise import CountsHistogram, MitigationReport
from cdqsim.states import StateVector

logger = logging.getLogger(__name__)

EVOLUTION_COLUMNS = ("step", "t", "lambda", "p_gs", "fidelity")
SWEEP_COLUMNS = ("x", "p_gs", "fidelity", "rotations", "cnots")
GATE_STATS_COLUMNS = (
    "problem", "method", "steps", "rotations", "cnots", "expected_error", "fidelity",
)
HISTOGRAM_COLUMNS = ("bitstring", "count")
MITIGATION_COLUMNS = ("bitstring", "p_actual", "p_noisy", "p_inverted", "p_mitigated")
REGRESSION_COLUMNS = ("lambda", "alpha_numeric", "alpha_closed_form", "alpha_legacy")
LOCAL_REGRESSION_COLUMNS = ("lambda", "alpha_numeric", "alpha_printed")
ZZ_REGRESSION_COLUMNS = ("lambda", "beta_numeric", "beta_closed_form")


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def header_lines(config: Dict[str, Any], seed: Optional[int]) -> List[str]:
    return [
        f"# config: {json.dumps(config, sort_keys=True, default=str)}",
        f"# seed: {seed if seed is not None else ''}",
    ]


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    config: Dict[str, Any],
    seed: Optional[int],
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        for line in header_lines(config, seed):
            f.write(line + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"Row {row!r} does not match columns {columns}")
            writer.writerow([_cell(v) for v in row])
    logger.debug(f"Wrote {path}")
    return path


def read_csv_body(path: Path) -> List[List[str]]:
    """Header row plus data rows, skipping the ``#`` reproducibility lines."""
    with open(path, newline="", encoding="utf-8") as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.reader(lines))


def write_evolution(path, result: EvolutionResult, config, seed) -> Path:
    return write_csv(path, EVOLUTION_COLUMNS, (r.as_row() for r in result.records), config, seed)


def write_sweep(path, rows, config, seed) -> Path:
    return write_csv(path, SWEEP_COLUMNS, rows, config, seed)


def write_gate_stats(path, rows, config, seed) -> Path:
    return write_csv(path, GATE_STATS_COLUMNS, rows, config, seed)


def write_histogram(path, histogram: CountsHistogram, config, seed) -> Path:
    return write_csv(path, HISTOGRAM_COLUMNS, histogram.rows(), config, seed)


def write_mitigation_report(path, report: MitigationReport, config, seed) -> Path:
    n = report.histogram.n_qubits
    rows = (
        (
            format(i, f"0{n}b"),
            report.actual[i],
            report.noisy[i],
            report.inverted[i],
            report.mitigated[i],
        )
        for i in range(1 << n)
    )
    return write_csv(path, MITIGATION_COLUMNS, rows, config, seed)


def write_solve_records(path, records, config, seed) -> Path:
    """NC solve records: lambda, alpha_1..alpha_l, action residual."""
    records = list(records)
    order = records[0].order if records else 0
    columns = ("lambda", *(f"alpha_{k}" for k in range(1, order + 1)), "action_residual")
    return write_csv(path, columns, (r.as_row() for r in records), config, seed)


def write_alpha_regression(path, rows, config, seed) -> Path:
    return write_csv(path, REGRESSION_COLUMNS, rows, config, seed)


def write_local_regression(path, rows, config, seed) -> Path:
    return write_csv(path, LOCAL_REGRESSION_COLUMNS, rows, config, seed)


def write_zz_regression(path, rows, config, seed) -> Path:
    """Closed-form versus first-order numeric (YZ + ZY) coefficients."""
    return write_csv(path, ZZ_REGRESSION_COLUMNS, rows, config, seed)


def write_qasm(path, circuit: Circuit, config, seed) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = "".join(f"//{line[1:]}\n" for line in header_lines(config, seed))
    path.write_text(header + to_qasm(circuit), encoding="utf-8")
    return path


def write_state_dump(path, state: StateVector) -> Path:
    """Little-endian interleaved re/im doubles."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(state.to_bytes())
    return path


def read_state_dump(path) -> StateVector:
    return StateVector.from_bytes(Path(path).read_bytes())
