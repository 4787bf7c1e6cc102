"""Declarative run configuration: one JSON file drives a reproducible run.

The `columns` map names every analysis variable (key -> {column, transform,
role}); models pick their controls either from the named presets or as an
explicit key list. The config hash covers the resolved configuration, so two
runs with equal hashes and seeds must produce byte-identical numeric
artifacts. Worker count is a command-line concern and never part of the
hash.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

from .data_model import TransformSpec
from .errors import ValidationError

# Control presets. "limited" is the small specification (the demographic,
# income, truck, and highway-proximity controls); "full" adds the built-form
# controls on top.
LIMITED_CONTROLS: tuple[str, ...] = (
    "vkt",
    "prop_white",
    "med_income",
    "truck_volume",
    "dist_highway",
)
FULL_CONTROLS: tuple[str, ...] = LIMITED_CONTROLS + (
    "intersection_density",
    "grade_mean",
    "prop_single_family",
    "med_rooms",
    "mean_household_size",
    "pop_density",
    "med_home_value",
)

# Default transform for each canonical variable key.
DEFAULT_COLUMNS: dict[str, dict[str, str]] = {
    "pm25": {"column": "pm25", "transform": "log", "role": "response"},
    "vkt": {"column": "vkt", "transform": "log", "role": "predictor"},
    "prop_white": {"column": "prop_white", "transform": "identity", "role": "predictor"},
    "med_income": {"column": "med_income", "transform": "identity", "role": "predictor"},
    "truck_volume": {"column": "truck_volume", "transform": "log", "role": "predictor"},
    "dist_highway": {"column": "dist_highway", "transform": "identity", "role": "predictor"},
    "intersection_density": {
        "column": "intersection_density",
        "transform": "identity",
        "role": "predictor",
    },
    "grade_mean": {"column": "grade_mean", "transform": "log", "role": "predictor"},
    "prop_single_family": {
        "column": "prop_single_family",
        "transform": "identity",
        "role": "predictor",
    },
    "med_rooms": {"column": "med_rooms", "transform": "identity", "role": "predictor"},
    "mean_household_size": {
        "column": "mean_household_size",
        "transform": "identity",
        "role": "predictor",
    },
    "pop_density": {"column": "pop_density", "transform": "log", "role": "predictor"},
    "med_home_value": {"column": "med_home_value", "transform": "log", "role": "predictor"},
}


@dataclass(frozen=True)
class ModelSpec:
    name: str
    estimator: str  # ols | gwr
    controls: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.estimator not in ("ols", "gwr"):
            raise ValidationError(f"model {self.name!r}: unknown estimator {self.estimator!r}")


@dataclass(frozen=True)
class RunConfig:
    inputs: dict[str, str]
    columns: dict[str, TransformSpec]
    models: tuple[ModelSpec, ...]
    demographics: dict[str, str] = field(
        default_factory=lambda: {
            "population": "population",
            "commuters": "commuters",
            "group_share": "group_share",
        }
    )
    k_min: int | None = None
    k_max: int | None = None
    search_method: str = "golden"
    aicc_loo: bool = False
    sim_mode: str = "fractional"
    seed: int = 0
    exclude_home: bool = False
    attribution_mode: str = "midpoint"
    drive_share_column: str | None = None
    class_speeds: dict[str, float] = field(default_factory=dict)
    output_dir: str = "out"
    raw: dict = field(default_factory=dict, compare=False)

    @property
    def response_key(self) -> str:
        keys = [k for k, s in self.columns.items() if s.role == "response"]
        if len(keys) != 1:
            raise ValidationError(f"exactly one response column required, got {len(keys)}")
        return keys[0]

    def model_transforms(self, model: ModelSpec) -> list[TransformSpec]:
        specs = [self.columns[self.response_key]]
        for key in model.controls:
            if key not in self.columns:
                raise ValidationError(
                    f"model {model.name!r} references unknown column key {key!r}"
                )
            specs.append(self.columns[key])
        return specs


def resolve_controls(controls) -> tuple[str, ...]:
    if controls == "limited":
        return LIMITED_CONTROLS
    if controls == "full":
        return FULL_CONTROLS
    if isinstance(controls, (list, tuple)):
        return tuple(str(c) for c in controls)
    raise ValidationError(
        f"controls must be 'limited', 'full', or a column-key list, got {controls!r}"
    )


def config_hash(raw: dict) -> str:
    """Hash of the canonical JSON form, stamped on every artifact."""
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def parse_config(raw: dict, base_dir: str = ".") -> RunConfig:
    if not isinstance(raw, dict):
        raise ValidationError("config root must be a JSON object")

    inputs = {
        name: os.path.normpath(os.path.join(base_dir, path))
        for name, path in (raw.get("inputs") or {}).items()
    }

    columns: dict[str, TransformSpec] = {}
    raw_columns = raw.get("columns")
    if raw_columns is None:
        raw_columns = DEFAULT_COLUMNS
    for key, entry in raw_columns.items():
        merged = dict(DEFAULT_COLUMNS.get(key, {}))
        merged.update(entry or {})
        if "column" not in merged:
            raise ValidationError(f"columns[{key!r}]: 'column' is required")
        columns[key] = TransformSpec(
            column=merged["column"],
            transform=merged.get("transform", "identity"),
            role=merged.get("role", "predictor"),
        )

    models = []
    for entry in raw.get("models") or []:
        models.append(
            ModelSpec(
                name=str(entry.get("name", f"model{len(models) + 1}")),
                estimator=str(entry.get("estimator", "ols")),
                controls=resolve_controls(entry.get("controls", "limited")),
            )
        )

    gwr = raw.get("gwr") or {}
    sim = raw.get("simulation") or {}
    demographics = {
        "population": "population",
        "commuters": "commuters",
        "group_share": "group_share",
    }
    demographics.update(raw.get("demographics") or {})

    config = RunConfig(
        inputs=inputs,
        columns=columns,
        models=tuple(models),
        demographics=demographics,
        k_min=gwr.get("k_min"),
        k_max=gwr.get("k_max"),
        search_method=gwr.get("method", "golden"),
        aicc_loo=bool(gwr.get("aicc_loo", False)),
        sim_mode=sim.get("mode", "fractional"),
        seed=int(sim.get("seed", 0)),
        exclude_home=bool(sim.get("exclude_home", False)),
        attribution_mode=sim.get("attribution", "midpoint"),
        drive_share_column=sim.get("drive_share_column"),
        class_speeds={k: float(v) for k, v in (raw.get("class_speeds") or {}).items()},
        output_dir=os.path.normpath(os.path.join(base_dir, raw.get("output_dir", "out"))),
        raw=raw,
    )
    if config.sim_mode not in ("bernoulli", "fractional"):
        raise ValidationError(f"unknown simulation mode {config.sim_mode!r}")
    if config.search_method not in ("golden", "exhaustive"):
        raise ValidationError(f"unknown search method {config.search_method!r}")
    if config.attribution_mode not in ("midpoint", "split"):
        raise ValidationError(f"unknown attribution mode {config.attribution_mode!r}")
    # Fail fast on dangling column keys before any computation starts.
    for model in config.models:
        config.model_transforms(model)
    return config


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    return parse_config(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def replication_config(
    inputs: dict[str, str], output_dir: str = "out", seed: int = 0
) -> dict:
    """Raw config running the four-model replication harness on user data:
    two OLS fits (limited and full controls) and their GWR counterparts."""
    return {
        "inputs": dict(inputs),
        "columns": {k: dict(v) for k, v in DEFAULT_COLUMNS.items()},
        "demographics": {
            "population": "population",
            "commuters": "commuters",
            "group_share": "prop_white",
        },
        "models": [
            {"name": "model1", "estimator": "ols", "controls": "limited"},
            {"name": "model2", "estimator": "ols", "controls": "full"},
            {"name": "model3", "estimator": "gwr", "controls": "limited"},
            {"name": "model4", "estimator": "gwr", "controls": "full"},
        ],
        "gwr": {"method": "golden"},
        "simulation": {"mode": "bernoulli", "seed": seed},
        "output_dir": output_dir,
    }
