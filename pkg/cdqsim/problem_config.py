"""
Experiment files.

An experiment is a TOML (or JSON) document with a ``[problem]`` table, run
settings at the top level and optional ``[sweep]``, ``[gatecount]`` and
``[mitigate]`` tables. Values missing from the file fall back to the
environment configuration in ``utils.config``.
"""

import json
import logging
import tomllib
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from utils.config import get_config
from cdqsim.cd_drivers import method_from_tag, validate_method
from cdqsim.errors import ConfigError
from cdqsim.evolution import BLOCKS, DEFAULT_ORDER, SAMPLINGS
from cdqsim.models import (
    BOUNDARIES,
    SCHEDULES,
    AnnealingProblem,
    SpinChainSpec,
    build_ising_chain,
    build_single_spin,
    build_zz_chain,
)

logger = logging.getLogger(__name__)

MODELS = ("single_spin", "ising_chain", "zz_chain")
SWEEP_AXES = ("T", "j0", "n", "steps")


@dataclass(frozen=True)
class ProblemSpec:
    model: str = "single_spin"
    n: int = 1
    h_x: float = -1.0
    h_z: Union[float, Tuple[float, ...]] = 1.0
    j0: float = 0.0
    boundary: str = "open"
    T: float = 1.0
    dt: float = 0.2
    schedule: str = "sin2"
    name: Optional[str] = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"problem.model must be one of {MODELS}, got {self.model!r}")
        if self.boundary not in BOUNDARIES:
            raise ConfigError(f"problem.boundary must be one of {BOUNDARIES}")
        if self.schedule not in SCHEDULES:
            raise ConfigError(f"problem.schedule must be one of {sorted(SCHEDULES)}")
        if isinstance(self.h_z, list):
            object.__setattr__(self, "h_z", tuple(float(v) for v in self.h_z))
        if self.T <= 0 or self.dt <= 0:
            raise ConfigError("problem.T and problem.dt must be positive")

    def build(self) -> AnnealingProblem:
        if self.model == "single_spin":
            if self.n != 1:
                raise ConfigError("single_spin problems have n = 1")
            h_z = self.h_z[0] if isinstance(self.h_z, tuple) else self.h_z
            problem = build_single_spin(self.h_x, h_z, self.T, self.dt, self.schedule)
        elif self.model == "ising_chain":
            spec = SpinChainSpec.uniform(self.n, self.h_x, self.h_z, self.j0, self.boundary)
            problem = build_ising_chain(spec, self.T, self.dt, self.schedule)
        else:
            problem = build_zz_chain(
                self.n, self.h_x, self.j0, self.T, self.dt, self.boundary, self.schedule
            )
        return replace(problem, name=self.name) if self.name else problem


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    grid: Tuple[float, ...]
    methods: Tuple[str, ...] = ("none",)

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"sweep.axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        if not self.grid:
            raise ConfigError("sweep.grid must not be empty")
        object.__setattr__(self, "grid", tuple(self.grid))
        object.__setattr__(self, "methods", tuple(validate_method(m) for m in self.methods))
        if self.axis in ("n", "steps") and any(int(v) != v or v < 1 for v in self.grid):
            raise ConfigError(f"sweep.grid for axis {self.axis!r} needs positive integers")

    def problem_at(self, base: ProblemSpec, x: float) -> AnnealingProblem:
        """The base problem with the sweep axis set to ``x``."""
        if self.axis == "T":
            return replace(base, T=float(x)).build()
        if self.axis == "j0":
            return replace(base, j0=float(x)).build()
        if self.axis == "n":
            return replace(base, n=int(x)).build()
        return replace(base, T=int(x) * base.dt).build()


@dataclass(frozen=True)
class GateCountCase:
    problem: ProblemSpec
    threshold: float
    cd_method: str
    dt_cd: float
    dt_plain: float
    compare: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "cd_method", validate_method(self.cd_method))
        object.__setattr__(self, "compare", tuple(validate_method(m) for m in self.compare))
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigError(f"gatecount threshold must lie in (0, 1], got {self.threshold}")


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    methods: Tuple[str, ...] = ("none",)
    seed: int = 0
    shots: int = 0
    out: str = "results"
    threads: int = 1
    svg: bool = False
    order: Tuple[str, ...] = DEFAULT_ORDER
    sampling: str = "endpoint"
    readout_error: float = 0.04
    sweep: Optional[SweepSpec] = None
    gatecount: Tuple[GateCountCase, ...] = ()
    max_steps: int = 64
    source: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(validate_method(m) for m in self.methods))
        if not self.methods:
            raise ConfigError("At least one method is required")
        if sorted(self.order) != sorted(BLOCKS):
            raise ConfigError(f"order must be a permutation of {BLOCKS}")
        if self.sampling not in SAMPLINGS:
            raise ConfigError(f"sampling must be one of {SAMPLINGS}")
        if self.shots < 0:
            raise ConfigError("shots must be >= 0 (0 means exact probabilities)")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if not 0.0 <= self.readout_error < 0.5:
            raise ConfigError("readout_error must lie in [0, 0.5)")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be positive")

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Apply CLI flags; ``None`` leaves the file value in place."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def resolved(self) -> Dict[str, Any]:
        """Plain-dict form written into every output header."""
        data = asdict(self)
        data.pop("source", None)
        return data


def _problem_from(data: Dict[str, Any], where: str) -> ProblemSpec:
    try:
        return ProblemSpec(**data)
    except TypeError as e:
        raise ConfigError(f"Invalid [{where}] table: {e}") from e


_PROBLEM_KEYS = frozenset(f.name for f in fields(ProblemSpec))


def _methods_from(problem_data: Dict[str, Any], data: Dict[str, Any]) -> List[str]:
    methods = list(problem_data.pop("methods", None) or data.pop("methods", None) or [])
    cd_method = problem_data.pop("cd_method", data.pop("cd_method", None))
    cd_order = problem_data.pop("cd_order", data.pop("cd_order", None))
    if cd_method is None:
        if cd_order is not None:
            raise ConfigError("cd_order is set without cd_method")
        return methods or ["none"]
    method = method_from_tag(cd_method, cd_order)
    if method not in (validate_method(m) for m in methods):
        methods.append(method)
    return methods


def config_from_dict(data: Dict[str, Any], source: Optional[str] = None) -> ExperimentConfig:
    settings = get_config()
    data = dict(data)
    if "problem" in data:
        problem_data = dict(data.pop("problem"))
    else:
        # flat layout: problem keys at the top level
        problem_data = {k: data.pop(k) for k in list(data) if k in _PROBLEM_KEYS}
    methods = _methods_from(problem_data, data)
    problem = _problem_from(problem_data, "problem")

    sweep = None
    if "sweep" in data:
        sweep_data = dict(data.pop("sweep"))
        try:
            sweep = SweepSpec(
                axis=sweep_data["axis"],
                grid=tuple(sweep_data["grid"]),
                methods=tuple(sweep_data.get("methods", methods)),
            )
        except KeyError as e:
            raise ConfigError(f"[sweep] is missing {e}") from e

    cases: List[GateCountCase] = []
    max_steps = 64
    if "gatecount" in data:
        gc = dict(data.pop("gatecount"))
        max_steps = int(gc.get("max_steps", max_steps))
        for entry in gc.get("problems", []):
            entry = dict(entry)
            try:
                cases.append(
                    GateCountCase(
                        threshold=float(entry.pop("threshold")),
                        cd_method=entry.pop("cd_method"),
                        dt_cd=float(entry.pop("dt_cd")),
                        dt_plain=float(entry.pop("dt_plain")),
                        compare=tuple(entry.pop("compare", ())),
                        problem=_problem_from(entry, "gatecount.problems"),
                    )
                )
            except KeyError as e:
                raise ConfigError(f"gatecount problem is missing {e}") from e
        if not cases:
            raise ConfigError("[gatecount] needs at least one entry in problems")

    mitigate = dict(data.pop("mitigate", {}))
    known = {"seed", "shots", "out", "threads", "svg", "order", "sampling", "readout_error"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"Unknown experiment keys: {sorted(unknown)}")

    return ExperimentConfig(
        problem=problem,
        methods=tuple(methods),
        seed=int(data.get("seed", settings.SEED)),
        shots=int(data.get("shots", mitigate.get("shots", 0))),
        out=str(data.get("out", Path(settings.OUTPUT_DIR) / Path(source or "run").stem)),
        threads=int(data.get("threads", settings.THREADS)),
        svg=bool(data.get("svg", False)),
        order=tuple(data.get("order", DEFAULT_ORDER)),
        sampling=data.get("sampling", "endpoint"),
        readout_error=float(
            data.get("readout_error", mitigate.get("readout_error", settings.READOUT_ERROR))
        ),
        sweep=sweep,
        gatecount=tuple(cases),
        max_steps=max_steps,
        source=source,
    )


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read a TOML or JSON experiment file."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Experiment file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix == ".toml":
            data = tomllib.loads(text)
        elif path.suffix == ".json":
            data = json.loads(text)
        else:
            raise ConfigError(f"Experiment files must be .toml or .json, got {path.name}")
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"Could not parse {path}: {e}") from e
    logger.debug(f"Loaded experiment {path}")
    return config_from_dict(data, source=str(path))
