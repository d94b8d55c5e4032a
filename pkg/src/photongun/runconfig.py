"""Strict run-configuration files: sections [model], [pulse], [integration],
[task] with key = value lines.

External units are ordinary frequencies in MHz and times in ns; rates are
converted internally by 2*pi*1e-3 to rad/ns.  Parsing is strict: unknown
sections or keys, duplicates, missing required keys and out-of-range values
are all errors carrying the offending line, because a silently ignored typo
in a physics parameter is the worst failure mode a reproduction tool can
have.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError
from .model import RAD_NS_PER_MHZ, ModelConfig, Pulse
from .solve import IntegrationSpec

COMMANDS = ("simulate", "sweep", "optimize", "compare", "regime")


def _parse_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}") from None
    if math.isnan(value):
        raise ConfigError("NaN is not a valid value")
    return value


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"not an integer: {text!r}") from None


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_float_list(text: str) -> tuple[float, ...]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise ConfigError("empty list")
    return tuple(_parse_float(s) for s in items)


def _parse_str_list(text: str) -> tuple[str, ...]:
    items = tuple(s.strip() for s in text.split(",") if s.strip())
    if not items:
        raise ConfigError("empty list")
    return items


def _parse_bounds_list(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        pieces = part.split(":")
        if len(pieces) != 2:
            raise ConfigError(f"bounds must look like lo:hi, got {part!r}")
        out.append((_parse_float(pieces[0]), _parse_float(pieces[1])))
    if not out:
        raise ConfigError("empty bounds list")
    return tuple(out)


@dataclass(frozen=True)
class _Key:
    parse: callable
    required: bool = False
    default: object = None
    check: callable = None
    why: str = ""


def _positive(v):
    return (isinstance(v, (int, float)) and v > 0) or None


_SCHEMAS = {
    "model": {
        "kind": _Key(str, required=True),
        "g_mhz": _Key(_parse_float, required=True, check=lambda v: v > 0, why="must be > 0"),
        "kappa_mhz": _Key(_parse_float, required=True, check=lambda v: v > 0, why="must be > 0"),
        "gamma_mhz": _Key(_parse_float, required=True, check=lambda v: v > 0, why="must be > 0"),
        "delta_over_gamma": _Key(_parse_float, default=0.0),
        "delta_raman_over_gamma": _Key(_parse_float, default=0.0),
        "branching": _Key(_parse_float_list, default=None),
        "n_max": _Key(_parse_int, default=1, check=lambda v: v >= 1, why="must be >= 1"),
    },
    "pulse": {
        "shape": _Key(str, required=True),
        "omega0_mhz": _Key(_parse_float, required=True, check=lambda v: v >= 0, why="must be >= 0"),
        "t0_ns": _Key(_parse_float, default=math.inf, check=lambda v: v > 0, why="must be > 0"),
        "t_on_ns": _Key(_parse_float, default=0.0, check=math.isfinite, why="must be finite"),
    },
    "integration": {
        "dt_ns": _Key(_parse_float, default=None, check=lambda v: v > 0, why="must be > 0"),
        "t_final_ns": _Key(
            _parse_float, default=None, check=lambda v: math.isfinite(v) and v > 0,
            why="must be finite and > 0",
        ),
        "record_stride": _Key(_parse_int, default=None, check=lambda v: v >= 1, why="must be >= 1"),
        "allow_coarse_dt": _Key(_parse_bool, default=False),
    },
}

_TASK_SCHEMAS = {
    "simulate": {
        "solver": _Key(str, default="conditional",
                       check=lambda v: v in ("conditional", "master"),
                       why="must be conditional or master"),
    },
    "regime": {},
    "sweep": {
        "parameters": _Key(_parse_str_list, required=True),
        "grids": _Key(str, required=True),
        "objective": _Key(str, required=True,
                          check=lambda v: v in ("success_rate", "emission_rate"),
                          why="must be success_rate or emission_rate"),
        "compensate_stark": _Key(_parse_bool, default=True),
    },
    "optimize": {
        "free": _Key(_parse_str_list, required=True),
        "bounds": _Key(_parse_bounds_list, required=True),
        "objective": _Key(str, required=True,
                          check=lambda v: v in ("success_rate", "emission_rate"),
                          why="must be success_rate or emission_rate"),
        "compensate_stark": _Key(_parse_bool, default=True),
    },
    "compare": {
        "kappa_over_gamma_grid": _Key(_parse_float_list, required=True),
        "objectives": _Key(_parse_str_list, default=("success_rate", "emission_rate")),
    },
}


def _split_sections(text: str, source: str):
    """Raw sections with line numbers; strict syntax."""
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name in sections:
                raise ConfigError(f"{source}:{lineno}: duplicate section [{name}]")
            sections[name] = {}
            current = name
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {raw!r}")
        if current is None:
            raise ConfigError(f"{source}:{lineno}: key outside of any [section]")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in sections[current]:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} in [{current}]")
        sections[current][key] = (value, lineno)
    return sections


def _apply_schema(section: str, schema, raw: dict, source: str) -> dict:
    values = {}
    for key, (text, lineno) in raw.items():
        if key not in schema:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r} in [{section}]")
        spec = schema[key]
        try:
            value = spec.parse(text)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: [{section}] {key}: {exc}") from None
        if spec.check is not None and not spec.check(value):
            raise ConfigError(f"{source}:{lineno}: [{section}] {key} {spec.why}, got {text!r}")
        values[key] = value
    for key, spec in schema.items():
        if key not in values:
            if spec.required:
                raise ConfigError(f"{source}: missing required key {key!r} in [{section}]")
            values[key] = spec.default
    return values


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration: model + integration plan + task fields.

    external keeps the values exactly as written (units of the file), so a
    canonical re-emission parses back to identical internal numbers.
    """

    model: ModelConfig
    integration: IntegrationSpec
    task: dict
    command: str | None
    external: dict


def parse_config(text: str, command: str | None = None, source: str = "<config>") -> RunConfig:
    """Parse and validate a configuration document.

    command selects the [task] schema to validate against; [task] may be
    omitted entirely, in which case task defaults apply.
    """
    sections = _split_sections(text, source)
    known = {"model", "pulse", "integration", "task"}
    for name in sections:
        if name not in known:
            raise ConfigError(f"{source}: unknown section [{name}]")
    for required in ("model", "pulse"):
        if required not in sections:
            raise ConfigError(f"{source}: missing required section [{required}]")
    if command is not None and command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")

    model_raw = _apply_schema("model", _SCHEMAS["model"], sections["model"], source)
    pulse_raw = _apply_schema("pulse", _SCHEMAS["pulse"], sections["pulse"], source)
    integ_raw = _apply_schema(
        "integration", _SCHEMAS["integration"], sections.get("integration", {}), source
    )
    task_schema = _TASK_SCHEMAS.get(command, {}) if command else {}
    task_raw_section = sections.get("task", {})
    if command is None and task_raw_section:
        # without a command the task section cannot be validated; reject keys
        first = next(iter(task_raw_section.values()))
        raise ConfigError(
            f"{source}:{first[1]}: [task] keys present but no command selected"
        )
    task = _apply_schema("task", task_schema, task_raw_section, source) if command else {}

    if pulse_raw["shape"] not in ("constant", "sin2", "ramp-on"):
        raise ConfigError(f"{source}: [pulse] shape must be constant, sin2 or ramp-on")
    if math.isinf(pulse_raw["t0_ns"]) and pulse_raw["shape"] != "constant":
        raise ConfigError(f"{source}: [pulse] t0_ns is required for shape {pulse_raw['shape']}")

    pulse = Pulse(
        shape=pulse_raw["shape"],
        omega0=pulse_raw["omega0_mhz"] * RAD_NS_PER_MHZ,
        t0=pulse_raw["t0_ns"],
        t_on=pulse_raw["t_on_ns"],
    )
    gamma = model_raw["gamma_mhz"] * RAD_NS_PER_MHZ
    try:
        model = ModelConfig(
            kind=model_raw["kind"],
            g=model_raw["g_mhz"] * RAD_NS_PER_MHZ,
            kappa=model_raw["kappa_mhz"] * RAD_NS_PER_MHZ,
            gamma=gamma,
            pulse=pulse,
            beta=model_raw["branching"],
            delta=model_raw["delta_over_gamma"] * gamma,
            delta_raman=model_raw["delta_raman_over_gamma"] * gamma,
            n_max=model_raw["n_max"],
        )
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None

    t_final = integ_raw["t_final_ns"]
    if t_final is None:
        if math.isinf(pulse.t0):
            raise ConfigError(
                f"{source}: [integration] t_final_ns is required for an untruncated drive"
            )
        t_final = pulse.t_on + 3.0 * pulse.t0
    suggested = IntegrationSpec.suggested(model, t_final)
    integration = IntegrationSpec(
        dt=integ_raw["dt_ns"] if integ_raw["dt_ns"] is not None else suggested.dt,
        t_final=t_final,
        record_stride=(
            integ_raw["record_stride"]
            if integ_raw["record_stride"] is not None
            else suggested.record_stride
        ),
        allow_coarse_dt=integ_raw["allow_coarse_dt"],
    )

    external = {
        "model": model_raw,
        "pulse": pulse_raw,
        "integration": integ_raw,
        "task": dict(task),
    }
    return RunConfig(
        model=model, integration=integration, task=task, command=command, external=external
    )


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ";".join(f"{repr(a)}:{repr(b)}" for a, b in value)
        return ",".join(_format_value(v) for v in value)
    return str(value)


def canonical_text(run: RunConfig) -> str:
    """Deterministic re-emission; parse_config reads it back to identical
    internal values (floats are emitted with full round-trip precision)."""
    lines = []
    for section in ("model", "pulse", "integration", "task"):
        entries = run.external.get(section, {})
        entries = {k: v for k, v in entries.items() if v is not None}
        if not entries and section in ("integration", "task"):
            continue
        lines.append(f"[{section}]")
        for key in sorted(entries):
            lines.append(f"{key} = {_format_value(entries[key])}")
        lines.append("")
    return "\n".join(lines)
