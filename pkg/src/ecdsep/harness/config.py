"""Run and sweep configuration.

Config files are INI-style ``key = value`` text (read with configparser).
See ``docs/config.md`` for the grammar. Problem and optimizer ids resolve
through the small registries below.
"""

from __future__ import annotations

import configparser
import math
import typing
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from ecdsep.baselines import AdamHyperParams, GdmHyperParams
from ecdsep.benchmarks import AckleyRegularized, QuadraticBasin, SyntheticClassification, Zakharov
from ecdsep.optimizer import EcdHyperParams


class ConfigError(ValueError):
    """A configuration value is missing, malformed or refers to an unknown id."""


OPTIMIZERS = ("ecdsep", "gdm", "adam", "adamw")
PROBLEMS = ("zakharov", "ackley", "quadratic", "logistic")


def _truthy(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_number(text: str, kind=float):
    try:
        return kind(text)
    except ValueError as exc:
        raise ConfigError(f"not a {kind.__name__}: {text!r}") from exc


def _field_kind(cls, name):
    hints = typing.get_type_hints(cls)
    if name not in hints:
        raise ConfigError(f"unknown hyperparameter {name!r} for {cls.__name__}")
    hint = hints[name]
    args = [a for a in typing.get_args(hint) if a is not type(None)]
    return args[0] if args else hint


def coerce(cls, name: str, value):
    kind = _field_kind(cls, name)
    if not isinstance(value, str):
        return kind(value)
    if kind is bool:
        return _truthy(value)
    return _parse_number(value, kind)


def build_problem(problem: str, params: dict):
    """Instantiate an objective from its id and string parameters."""
    p = {k: v for k, v in params.items()}
    try:
        if problem == "zakharov":
            return Zakharov(int(p.get("n", 10)))
        if problem == "ackley":
            return AckleyRegularized()
        if problem == "quadratic":
            return QuadraticBasin(int(p.get("n", 2)), float(p.get("f2", 1.0)), float(p.get("f_min", 0.0)))
        if problem == "logistic":
            return SyntheticClassification(
                n_features=int(p.get("n_features", 8)),
                n_samples=int(p.get("n_samples", 1024)),
                batch_size=int(p.get("batch_size", 64)),
                separation=float(p.get("separation", 1.0)),
                noise=float(p.get("noise", 1.0)),
                seed=int(p.get("data_seed", 0)),
            )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameters for problem {problem!r}: {exc}") from exc
    raise ConfigError(f"unknown problem {problem!r}; expected one of {', '.join(PROBLEMS)}")


def default_start(problem: str, obj) -> np.ndarray:
    if problem == "ackley":
        return np.array([-4.0, 3.0])
    if problem == "logistic":
        return np.zeros(obj.dimension)
    return np.ones(obj.dimension)


def parse_theta0(text: Optional[str], problem: str, obj) -> np.ndarray:
    if text is None or not str(text).strip():
        return default_start(problem, obj)
    parts = [t for t in str(text).replace(",", " ").split() if t]
    values = [_parse_number(t) for t in parts]
    if len(values) == 1:
        return np.full(obj.dimension, values[0])
    if len(values) != obj.dimension:
        raise ConfigError(f"theta0 has {len(values)} entries, problem dimension is {obj.dimension}")
    return np.array(values)


def build_hparams(optimizer: str, values: dict):
    """Hyperparameter record for ``optimizer`` from a mapping of overrides."""
    if optimizer == "ecdsep":
        cls, base = EcdHyperParams, {}
    elif optimizer == "gdm":
        cls, base = GdmHyperParams, {}
    elif optimizer in ("adam", "adamw"):
        cls, base = AdamHyperParams, {"decoupled_wd": optimizer == "adamw"}
    else:
        raise ConfigError(f"unknown optimizer {optimizer!r}; expected one of {', '.join(OPTIMIZERS)}")
    kwargs = dict(base)
    for k, v in values.items():
        kwargs[k] = coerce(cls, k, v)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"missing hyperparameter for {optimizer}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"invalid hyperparameters for {optimizer}: {exc}") from exc


@dataclass
class RunConfig:
    problem: str
    optimizer: str
    hparams: Any
    max_steps: int = 250
    seed: int = 0
    record_every: int = 1
    problem_params: dict = field(default_factory=dict)
    theta0: Optional[str] = None
    out: str = "out"

    def __post_init__(self):
        if self.max_steps < 1:
            raise ConfigError("max_steps must be at least 1")
        if self.record_every < 1:
            raise ConfigError("record_every must be at least 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")

    def build(self):
        """Return ``(objective, theta0)``."""
        obj = build_problem(self.problem, self.problem_params)
        return obj, parse_theta0(self.theta0, self.problem, obj)


# ---------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class Range:
    """A sampled hyperparameter: ``uniform``, ``log`` (log-uniform), ``int`` or ``choice``."""

    kind: str
    low: float = 0.0
    high: float = 0.0
    choices: tuple = ()

    def sample(self, gen: np.random.Generator):
        if self.kind == "uniform":
            return float(gen.uniform(self.low, self.high))
        if self.kind == "log":
            return float(math.exp(gen.uniform(math.log(self.low), math.log(self.high))))
        if self.kind == "int":
            return int(gen.integers(int(self.low), int(self.high) + 1))
        return self.choices[int(gen.integers(0, len(self.choices)))]

    @classmethod
    def parse(cls, text: str) -> "Range":
        head, _, rest = text.partition(":")
        head = head.strip().lower()
        if head == "choice":
            return cls("choice", choices=tuple(c.strip() for c in rest.split(",") if c.strip()))
        if head not in ("uniform", "log", "int"):
            raise ConfigError(f"unknown range kind {head!r} in {text!r}")
        lo, _, hi = rest.partition(":")
        low, high = _parse_number(lo), _parse_number(hi)
        if not low < high:
            raise ConfigError(f"empty range {text!r}")
        if head == "log" and low <= 0:
            raise ConfigError(f"log range needs positive bounds: {text!r}")
        return cls(head, low, high)


def parse_space_value(text: str):
    t = text.strip()
    if t.split(":", 1)[0].lower() in ("uniform", "log", "int", "choice") and ":" in t:
        return Range.parse(t)
    return t


# Search spaces used for the synthetic benchmarks. Scale-like quantities are
# log-uniform.
PRESETS: dict[str, dict[str, dict[str, Any]]] = {
    "zakharov": {
        "ecdsep": {
            "dt": Range("log", 1e-2, 1e4),
            "eta": Range("uniform", 1.0, 4.0),
            "nu": Range("log", 1e-8, 1.0),
            "delta_e": Range("uniform", 0.0, 5.0),
            "conserve_energy": Range("choice", choices=("true", "false")),
        },
        "adam": {
            "alpha": Range("log", 1e-2, 1e4),
            "beta1": Range("uniform", 0.7, 1.0),
            "beta2": Range("uniform", 0.7, 1.0),
            "epsilon": Range("log", 1e-12, 1e-6),
        },
        "gdm": {
            "alpha": Range("log", 1e-8, 1e-3),
            "beta": Range("uniform", 0.8, 1.0),
        },
    },
    "ackley": {
        "ecdsep": {
            "dt": Range("log", 1e-4, 1.0),
            "eta": Range("uniform", 1.0, 10.0),
            "nu": Range("log", 1e-5, 1.0),
            "delta_e": "0",
        },
        "adam": {
            "alpha": Range("log", 1e-4, 1.0),
            "beta1": Range("uniform", 0.7, 1.0),
            "beta2": Range("uniform", 0.7, 1.0),
            "epsilon": Range("log", 1e-12, 1e-6),
        },
        "gdm": {
            "alpha": Range("log", 1e-8, 1e-3),
            "beta": Range("uniform", 0.8, 1.0),
        },
    },
}
for _space in PRESETS.values():
    _space["adamw"] = dict(_space["adam"])


@dataclass
class SweepSpec:
    problem: str
    optimizers: tuple
    spaces: dict
    trials: int
    steps: int
    metric: str = "final"
    seed: int = 0
    problem_params: dict = field(default_factory=dict)
    theta0: Optional[str] = None
    workers: int = 1
    out: str = "out"

    def __post_init__(self):
        if self.trials < 1 or self.steps < 1:
            raise ConfigError("trials and steps must be at least 1")
        if self.metric not in ("final", "best"):
            raise ConfigError("metric must be 'final' or 'best'")
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}")
        for opt in self.optimizers:
            if opt not in OPTIMIZERS:
                raise ConfigError(f"unknown optimizer {opt!r}")
            if opt not in self.spaces:
                raise ConfigError(f"no search space for optimizer {opt!r}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    def budgets(self) -> dict:
        """Trials and steps per optimizer; identical by construction."""
        return {opt: (self.trials, self.steps) for opt in self.optimizers}


# ---------------------------------------------------------------- file loading


def read_config(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parser


def _section(parser, name) -> dict:
    return dict(parser[name]) if parser.has_section(name) else {}


def _int(d: dict, key: str, default: int) -> int:
    return int(_parse_number(d[key], int)) if key in d else default


def run_config_from_parser(parser, section: str = "run") -> RunConfig:
    if not parser.has_section(section):
        raise ConfigError(f"missing [{section}] section")
    run = _section(parser, section)
    for key in ("problem", "optimizer"):
        if key not in run:
            raise ConfigError(f"[{section}] needs '{key}'")
    optimizer = run["optimizer"].strip()
    return RunConfig(
        problem=run["problem"].strip(),
        optimizer=optimizer,
        hparams=build_hparams(optimizer, _section(parser, optimizer)),
        max_steps=_int(run, "max_steps", 250),
        seed=_int(run, "seed", 0),
        record_every=_int(run, "record_every", 10 if run["problem"].strip() == "logistic" else 1),
        problem_params=_section(parser, "problem"),
        theta0=run.get("theta0"),
        out=run.get("out", "out"),
    )


def sweep_spec_from_parser(parser) -> SweepSpec:
    if not parser.has_section("sweep"):
        raise ConfigError("missing [sweep] section")
    sw = _section(parser, "sweep")
    if "problem" not in sw:
        raise ConfigError("[sweep] needs 'problem'")
    problem = sw["problem"].strip()
    optimizers = tuple(o.strip() for o in sw.get("optimizers", "ecdsep,gdm,adam").split(",") if o.strip())
    preset = sw.get("preset", "").strip()
    if preset and preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}")
    spaces = {}
    for opt in optimizers:
        space = dict(PRESETS[preset].get(opt, {})) if preset else {}
        sec = _section(parser, f"sweep.{opt}")
        for key in ("trials", "steps"):
            if key in sec:
                raise ConfigError(f"[sweep.{opt}] may not set '{key}': every optimizer gets the same budget")
        for k, v in sec.items():
            space[k] = parse_space_value(v)
        spaces[opt] = space
    return SweepSpec(
        problem=problem,
        optimizers=optimizers,
        spaces=spaces,
        trials=_int(sw, "trials", 100),
        steps=_int(sw, "steps", 250),
        metric=sw.get("metric", "final").strip(),
        seed=_int(sw, "seed", 0),
        problem_params=_section(parser, "problem"),
        theta0=sw.get("theta0"),
        workers=_int(sw, "workers", 1),
        out=sw.get("out", "out"),
    )
