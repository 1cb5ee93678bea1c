# pricing/scenario.py
"""Scenario files: one JSON document per figure/run, loaded into a validated ScenarioConfig."""
import logging
import os
from dataclasses import dataclass, field, replace

import numpy as np
import orjson

from config import config
from pricing.errors import ConfigError, PricingError
from pricing.fourier import InversionConfig
from pricing.ivol import QuadratureConfig
from pricing.lsv import log_forward
from pricing.models import model_from_config
from pricing.montecarlo import SimConfig
from utils.helpers import calculate_dict_hash

logger = logging.getLogger(__name__)

ENGINES = ("exact", "sigma_bar0", "sigma_bar1", "sigma_bar2", "mc")
DEFAULT_ENGINES = ("exact", "sigma_bar0", "sigma_bar1", "sigma_bar2")


def _grid(value, name: str) -> tuple:
    """A number, a list, or {"start", "stop", "num"}."""
    if isinstance(value, dict):
        try:
            values = np.linspace(float(value["start"]), float(value["stop"]), int(value["num"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"invalid range for {name!r}: {e}", field=name) from e
        return tuple(float(v) for v in values)
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    if value is None:
        return ()
    return (float(value),)


def _section(raw: dict, name: str, cls):
    values = raw.get(name) or {}
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigError(f"invalid {name!r} section: {e}", section=name) from e


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    model: str
    params: dict
    t: tuple
    T: tuple
    Tbar: tuple
    strikes: tuple  # k - x offsets
    y: tuple | None = None
    x: float | None = None
    ytilde: tuple = ()
    engines: tuple = DEFAULT_ENGINES
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    fourier: InversionConfig = field(default_factory=InversionConfig)
    mc: SimConfig = field(default_factory=SimConfig)
    output: str | None = None
    sweep: dict = field(default_factory=dict)
    digest: str = ""

    def __post_init__(self):
        if not self.strikes:
            raise ConfigError("strike grid must not be empty", field="strikes")
        if list(self.strikes) != sorted(self.strikes):
            raise ConfigError("strike grid must be sorted", field="strikes")
        if not self.t or not self.T or not self.Tbar:
            raise ConfigError("times t, T and Tbar are required", field="times")
        for T in self.T:
            if not all(t < T for t in self.t):
                raise ConfigError(f"every t must precede T={T}", field="times")
            if not all(T <= Tbar for Tbar in self.Tbar):
                raise ConfigError(f"every Tbar must be >= T={T}", field="times")
        unknown = [e for e in self.engines if e not in ENGINES]
        if unknown:
            raise ConfigError(f"unknown engine(s) {unknown}; expected a subset of {ENGINES}", field="engines")
        if self.y is None and self.x is None:
            raise ConfigError("state needs either y or x", field="state")
        for key, values in self.sweep.items():
            if key not in self.params:
                raise ConfigError(f"sweep over unknown parameter {key!r}", field="sweep")
            if not values:
                raise ConfigError(f"sweep over {key!r} is empty", field="sweep")

    def build_model(self, **overrides):
        return model_from_config(self.model, {**self.params, **overrides})

    def sweep_points(self) -> list:
        """Parameter overrides for each sweep point ([{}] without a sweep)."""
        if not self.sweep:
            return [{}]
        key, values = next(iter(self.sweep.items()))
        return [{key: v} for v in values]

    def point(self, model, t: float, T: float, Tbar: float):
        """Expansion point (x, ytilde) for this scenario at (t, T, Tbar)."""
        if self.x is not None:
            return float(self.x), tuple(self.ytilde)
        return log_forward(model, t, self.y, T, Tbar), tuple(self.y[1:])

    def with_overrides(self, seed: int | None = None, engine: str | None = None, out: str | None = None):
        updates = {}
        if seed is not None:
            updates["mc"] = replace(self.mc, seed=int(seed))
        if engine is not None:
            if engine not in ENGINES:
                raise ConfigError(f"unknown engine {engine!r}; expected one of {ENGINES}", field="engine")
            updates["engines"] = (engine,)
        if out is not None:
            updates["output"] = out
        return replace(self, **updates) if updates else self


def scenario_from_dict(raw: dict, name: str = "scenario") -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a JSON object")
    try:
        model = raw["model"]
        times = raw["times"]
        state = raw.get("state") or {}
        y = state.get("y")
        scenario = ScenarioConfig(
            name=raw.get("name", name),
            model=model["name"],
            params=dict(model.get("params") or {}),
            t=_grid(times.get("t", 0.0), "t"),
            T=_grid(times.get("T"), "T"),
            Tbar=_grid(times.get("Tbar"), "Tbar"),
            strikes=_grid(raw.get("strikes", {}).get("k_minus_x"), "k_minus_x"),
            y=tuple(float(v) for v in np.ravel(y)) if y is not None else None,
            x=float(state["x"]) if state.get("x") is not None else None,
            ytilde=tuple(float(v) for v in state.get("ytilde", ())),
            engines=tuple(raw.get("engines", DEFAULT_ENGINES)),
            quadrature=_section(raw, "quadrature", QuadratureConfig),
            fourier=_section(raw, "fourier", InversionConfig),
            mc=_section(raw, "mc", SimConfig),
            output=(raw.get("output") or {}).get("path"),
            sweep={k: _grid(v, k) for k, v in (model.get("sweep") or {}).items()},
            digest=calculate_dict_hash(raw),
        )
    except (KeyError, AttributeError) as e:
        raise ConfigError(f"scenario is missing a required field: {e}") from e
    except PricingError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"invalid scenario: {e.message}", **e.details) from e
    # parameters are validated by building the model once
    scenario.build_model(**scenario.sweep_points()[0])
    return scenario


def resolve_path(path: str) -> str:
    """A file path, or the name of a bundled scenario (e.g. "fig2")."""
    if os.path.exists(path):
        return path
    bundled = os.path.join(config.SCENARIO_DIR, path if path.endswith(".json") else f"{path}.json")
    if os.path.exists(bundled):
        return bundled
    raise ConfigError(f"scenario file not found: {path}", path=path)


def load_scenario(path: str) -> ScenarioConfig:
    resolved = resolve_path(path)
    try:
        with open(resolved, "rb") as f:
            raw = orjson.loads(f.read())
    except orjson.JSONDecodeError as e:
        raise ConfigError(f"scenario {resolved} is not valid JSON: {e}", path=resolved) from e
    except OSError as e:
        raise ConfigError(f"cannot read scenario {resolved}: {e}", path=resolved) from e
    name = os.path.splitext(os.path.basename(resolved))[0]
    scenario = scenario_from_dict(raw, name)
    logger.info(f"Loaded scenario {scenario.name} ({scenario.model}, digest {scenario.digest})")
    return scenario
