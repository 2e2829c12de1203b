"""TOML configuration loading.

The config mirrors the test system's published units for auditability:
startup cost in M$, generation cost in k$/GWh, VOLL in $/GWh. Everything is
normalized to plain $ at load time. Every field is optional; omitted fields
take the engine defaults (three-unit system, canonical quantiles, phi=1.2,
eps_c=0.14, VOLL 300,000 $/GWh, 20 GW wind cap).
"""

from __future__ import annotations

from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, DomainError
from .scenario_tree import ArParams, QuantileSet
from .simulator import SimulationConfig
from .uc_model import Generator

_TOP_LEVEL_SCALARS = {
    "dt": float, "total_steps": int, "lookahead": int, "mode": str,
    "trials": int, "seed": int, "voll": float, "wind_cap": float,
    "ramp_mode": str, "probability_rule": str, "error_mode": str,
    "nonanticipativity_stages": int, "gap_tol": float, "node_limit": int,
}

_GENERATOR_FIELDS = ("name", "startup_cost_musd", "p_max_gw", "p_min_gw",
                     "gen_cost_kusd_gwh", "ramp_up_gw_h", "ramp_down_gw_h")


class LlmSettings:
    """Backend settings from the [llm] table; the API key is never read here."""

    def __init__(self, table):
        self.endpoint = table.get("endpoint")
        self.model = table.get("model", "gpt-4")
        self.temperature = table.get("temperature")
        self.timeout = float(table.get("timeout", 60.0))
        self.max_retries = int(table.get("max_retries", 2))
        self.history_window = int(table.get("history_window", 0))
        self.audit_log = table.get("audit_log")


def _parse_generator(i, table):
    if not isinstance(table, dict):
        raise ConfigError(f"generators[{i}] must be a table")
    unknown = set(table) - set(_GENERATOR_FIELDS)
    if unknown:
        raise ConfigError(f"generators[{i}]: unknown field(s) {sorted(unknown)}")
    name = table.get("name", f"unit{i + 1}")
    try:
        return Generator(
            name=name,
            startup_cost=float(table.get("startup_cost_musd", 0.0)) * 1e6,
            p_max=float(table.get("p_max_gw", 0.0)),
            p_min=float(table.get("p_min_gw", 0.0)),
            gen_cost=float(table.get("gen_cost_kusd_gwh", 0.0)) * 1e3,
            ramp_up=float(table.get("ramp_up_gw_h", 1.0)),
            ramp_down=float(table.get("ramp_down_gw_h", 1.0)),
        )
    except DomainError as e:
        raise ConfigError(f"generators[{i}] ({name}): {e}") from e


def parse_config(doc: dict):
    """Build (SimulationConfig, LlmSettings) from a parsed TOML document."""
    kwargs = {}
    for key, cast in _TOP_LEVEL_SCALARS.items():
        if key in doc:
            try:
                kwargs[key] = cast(doc[key])
            except (TypeError, ValueError) as e:
                raise ConfigError(f"field {key!r}: {e}") from e
    if "quantiles" in doc:
        try:
            kwargs["quantiles"] = QuantileSet(tuple(doc["quantiles"]))
        except (DomainError, TypeError) as e:
            raise ConfigError(f"field 'quantiles': {e}") from e
    if "default_probabilities" in doc:
        kwargs["default_probs"] = tuple(doc["default_probabilities"])
    ar_table = doc.get("ar", {})
    try:
        kwargs["ar"] = ArParams(phi=float(ar_table.get("phi", 1.2)),
                                eps_c=float(ar_table.get("eps_c", 0.14)))
    except DomainError as e:
        raise ConfigError(f"table 'ar': {e}") from e
    if "generators" in doc:
        kwargs["generators"] = [_parse_generator(i, g)
                                for i, g in enumerate(doc["generators"])]
    initial = doc.get("initial", {})
    if "commitment" in initial:
        kwargs["initial_commitment"] = tuple(bool(v) for v in initial["commitment"])
    if "output" in initial:
        kwargs["initial_output"] = tuple(float(v) for v in initial["output"])

    llm = LlmSettings(doc.get("llm", {}))
    kwargs.setdefault("max_retries", llm.max_retries)
    kwargs.setdefault("history_window", llm.history_window)
    try:
        cfg = SimulationConfig(**kwargs)
    except DomainError as e:
        raise ConfigError(str(e)) from e
    return cfg, llm


def load_config(path):
    """Load a TOML config file; missing file or malformed document raises
    ConfigError naming the problem."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: malformed TOML: {e}") from e
    return parse_config(doc)


def default_config():
    """The all-defaults configuration (equivalent to an empty config file)."""
    return parse_config({})
