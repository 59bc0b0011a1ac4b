"""Run configuration: a TOML file with ``[damper]``, ``[plan]``, ``[optimizer]``,
``[oracle]`` and ``[output]`` tables.  Command-line flags override file values.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .multistep import BENCHMARK_BOUNDARIES, StepPlan
from .oham import Method, OptimizerConfig
from .system import BENCHMARK_PARAMS, DamperParams

OUTPUT_ENV = "OHAM_DAMPER_OUT"
DEFAULT_OUTPUT = "oham_out"


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry when known."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    damper: DamperParams = BENCHMARK_PARAMS
    boundaries: tuple[float, ...] = BENCHMARK_BOUNDARIES
    memory_carry: bool = True
    nodes_per_unit: float = 200.0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    oracle_h: float = 1e-4
    output_dir: str | None = None
    emit_plot_data: bool = False

    def __post_init__(self):
        if not self.oracle_h > 0:
            raise ConfigError("must be positive", "oracle.h")
        try:
            self.plan
        except ValueError as exc:
            raise ConfigError(str(exc), "plan.boundaries") from exc

    @property
    def plan(self) -> StepPlan:
        return StepPlan(
            boundaries=self.boundaries,
            optimizer=self.optimizer,
            memory_carry=self.memory_carry,
            nodes_per_unit=self.nodes_per_unit,
        )

    @property
    def t_start(self) -> float:
        return self.boundaries[0]

    @property
    def t_end(self) -> float:
        return self.boundaries[-1]

    def resolved_output_dir(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


def _coerce(value, kind: str, key: str):
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", key)
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", key)
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", key)
        return value
    if not isinstance(value, str):
        raise ConfigError(f"expected a string, got {value!r}", key)
    return value


_DAMPER_KEYS = {f.name: "float" for f in fields(DamperParams)}
_OPTIMIZER_KEYS = {
    "method": "str",
    "max_evals": "int",
    "restarts": "int",
    "tolerance": "float",
    "seed": "int",
    "perturbation": "float",
}
_PLAN_KEYS = {"boundaries": "list", "memory_carry": "bool", "nodes_per_unit": "float"}
_ORACLE_KEYS = {"h": "float"}
_OUTPUT_KEYS = {"dir": "str", "emit_plot_data": "bool"}
_SECTIONS = {
    "damper": _DAMPER_KEYS,
    "plan": _PLAN_KEYS,
    "optimizer": _OPTIMIZER_KEYS,
    "oracle": _ORACLE_KEYS,
    "output": _OUTPUT_KEYS,
}


def parse_config(data: dict) -> RunConfig:
    """Build a :class:`RunConfig` from parsed TOML tables; missing keys take defaults."""
    values: dict[str, dict] = {}
    for section, table in data.items():
        if section not in _SECTIONS:
            raise ConfigError("unknown section", section)
        if not isinstance(table, dict):
            raise ConfigError("expected a table", section)
        allowed = _SECTIONS[section]
        values[section] = {}
        for key, value in table.items():
            dotted = f"{section}.{key}"
            if key not in allowed:
                raise ConfigError("unknown key", dotted)
            if allowed[key] == "list":
                if not isinstance(value, list) or not value:
                    raise ConfigError("expected a non-empty list of numbers", dotted)
                values[section][key] = tuple(_coerce(v, "float", dotted) for v in value)
            else:
                values[section][key] = _coerce(value, allowed[key], dotted)

    base = RunConfig()
    try:
        damper = replace(base.damper, **values.get("damper", {}))
    except ValueError as exc:
        raise ConfigError(str(exc), "damper") from exc
    opt_values = values.get("optimizer", {})
    if "method" in opt_values:
        try:
            Method(opt_values["method"])
        except ValueError:
            choices = ", ".join(m.value for m in Method)
            raise ConfigError(f"unknown method {opt_values['method']!r} (choose from {choices})", "optimizer.method")
    try:
        optimizer = replace(base.optimizer, **opt_values)
    except ValueError as exc:
        raise ConfigError(str(exc), "optimizer") from exc
    plan = values.get("plan", {})
    out = values.get("output", {})
    return RunConfig(
        damper=damper,
        boundaries=plan.get("boundaries", base.boundaries),
        memory_carry=plan.get("memory_carry", base.memory_carry),
        nodes_per_unit=plan.get("nodes_per_unit", base.nodes_per_unit),
        optimizer=optimizer,
        oracle_h=values.get("oracle", {}).get("h", base.oracle_h),
        output_dir=out.get("dir", base.output_dir),
        emit_plot_data=out.get("emit_plot_data", base.emit_plot_data),
    )


def loads(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse TOML: {exc}") from exc
    return parse_config(data)


def load(path: str | os.PathLike) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}", str(path)) from exc
    return loads(text)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    escaped = str(value).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def dumps(cfg: RunConfig) -> str:
    """Serialize ``cfg`` as TOML that :func:`loads` maps back to an equal config."""
    opt = cfg.optimizer
    tables = {
        "damper": {f.name: float(getattr(cfg.damper, f.name)) for f in fields(DamperParams)},
        "plan": {
            "boundaries": [float(b) for b in cfg.boundaries],
            "memory_carry": cfg.memory_carry,
            "nodes_per_unit": float(cfg.nodes_per_unit),
        },
        "optimizer": {
            "method": opt.method.value,
            "max_evals": opt.max_evals,
            "restarts": opt.restarts,
            "tolerance": float(opt.tolerance),
            "seed": opt.seed,
            "perturbation": float(opt.perturbation),
        },
        "oracle": {"h": float(cfg.oracle_h)},
        "output": {"emit_plot_data": cfg.emit_plot_data},
    }
    if cfg.output_dir is not None:
        tables["output"]["dir"] = cfg.output_dir
    lines = []
    for name, table in tables.items():
        lines.append(f"[{name}]")
        lines.extend(f"{key} = {_fmt(value)}" for key, value in table.items())
        lines.append("")
    return "\n".join(lines)
