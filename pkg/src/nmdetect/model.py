"""Scenario types and validation.

Units are fixed repo-wide: lengths in micrometers, times in seconds, diffusion
in um^2/s, NM densities in NMs/um^3, rates in 1/s. There is no unit layer;
every number is already in these units.

Configs are plain frozen dataclasses. Construction does not validate; the
validate()/validate_sim() entry points do, and they report every violated
constraint at once rather than stopping at the first.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

__all__ = [
    "ConfigError",
    "MarkerSpec",
    "NmClass",
    "SimConfig",
    "SystemConfig",
    "TargetSpec",
    "config_to_dict",
    "load_config",
    "sim_config_to_dict",
    "validate",
    "validate_sim",
]


class ConfigError(ValueError):
    """Raised with the complete list of violated constraints."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class NmClass:
    radius: float     # um
    diffusion: float  # um^2/s
    density: float    # NMs/um^3


@dataclass(frozen=True)
class TargetSpec:
    diffusion: float = 0.0         # um^2/s; 0 means stationary
    degradation_rate: float = 0.0  # 1/s;   0 means non-degradable


@dataclass(frozen=True)
class MarkerSpec:
    emission_rate: float  # molecules/s
    diffusion: float      # um^2/s
    threshold: float      # molecules/um^3


@dataclass(frozen=True)
class SystemConfig:
    classes: tuple[NmClass, ...]
    exclusion_radius: float  # um; no NM centers inside this ball initially
    target: TargetSpec = TargetSpec()
    marker: Optional[MarkerSpec] = None
    # fixed single-NM scenario: one NM of classes[0] at this center distance,
    # replacing the point-process deployment
    single_nm_distance: Optional[float] = None


@dataclass(frozen=True)
class SimConfig:
    time_step: float      # s
    horizon: float        # s
    window_radius: float  # um; deployment truncated to [r, window_radius]
    trials: int           # 0 disables Monte Carlo
    master_seed: int
    t_grid: tuple[float, ...]  # s, sorted, within [0, horizon]


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _take(raw: dict, path: str, errors: list[str], known: Sequence[str]) -> dict:
    """Reject unknown keys, returning the dict for further field checks."""
    for key in raw:
        if key not in known:
            errors.append(f"{path}{key}: unknown key")
    return raw


def _number(raw: dict, key: str, path: str, errors: list[str], default=None):
    if key not in raw:
        if default is not None:
            return default
        errors.append(f"{path}{key}: missing")
        return None
    v = raw[key]
    if not _is_number(v):
        errors.append(f"{path}{key}: must be a finite number, got {v!r}")
        return None
    return float(v)


def _build_class(raw, idx: int, errors: list[str]) -> Optional[NmClass]:
    path = f"classes[{idx}]."
    if not isinstance(raw, dict):
        errors.append(f"classes[{idx}]: must be an object, got {raw!r}")
        return None
    _take(raw, path, errors, ("radius", "diffusion", "density"))
    radius = _number(raw, "radius", path, errors)
    diffusion = _number(raw, "diffusion", path, errors)
    density = _number(raw, "density", path, errors)
    if None in (radius, diffusion, density):
        return None
    return NmClass(radius, diffusion, density)


def _check_class(cls: NmClass, path: str, errors: list[str]) -> None:
    if not (_is_number(cls.radius) and cls.radius > 0):
        errors.append(f"{path}radius: must be > 0, got {cls.radius!r}")
    if not (_is_number(cls.diffusion) and cls.diffusion > 0):
        errors.append(f"{path}diffusion: must be > 0, got {cls.diffusion!r}")
    if not (_is_number(cls.density) and cls.density >= 0):
        errors.append(f"{path}density: must be >= 0, got {cls.density!r}")


def _check_system(config: SystemConfig, errors: list[str]) -> None:
    if not config.classes:
        errors.append("classes: must be non-empty")
    for i, cls in enumerate(config.classes):
        _check_class(cls, f"classes[{i}].", errors)
    radii = [c.radius for c in config.classes if _is_number(c.radius)]
    if not _is_number(config.exclusion_radius):
        errors.append(
            f"exclusion_radius: must be a finite number, got {config.exclusion_radius!r}"
        )
    elif radii and config.exclusion_radius < max(radii):
        errors.append(
            f"exclusion_radius: must be >= max class radius {max(radii)}, "
            f"got {config.exclusion_radius}"
        )
    t = config.target
    if not (_is_number(t.diffusion) and t.diffusion >= 0):
        errors.append(f"target.diffusion: must be >= 0, got {t.diffusion!r}")
    if not (_is_number(t.degradation_rate) and t.degradation_rate >= 0):
        errors.append(f"target.degradation_rate: must be >= 0, got {t.degradation_rate!r}")
    if config.marker is not None:
        m = config.marker
        for name, v in (
            ("emission_rate", m.emission_rate),
            ("diffusion", m.diffusion),
            ("threshold", m.threshold),
        ):
            if not (_is_number(v) and v > 0):
                errors.append(f"marker.{name}: must be > 0, got {v!r}")
    if config.single_nm_distance is not None:
        d = config.single_nm_distance
        if not _is_number(d):
            errors.append(f"single_nm_distance: must be a finite number, got {d!r}")
        elif config.classes and _is_number(config.classes[0].radius) and d < config.classes[0].radius:
            errors.append(
                f"single_nm_distance: must be >= classes[0].radius "
                f"{config.classes[0].radius}, got {d}"
            )


def validate(raw: Union[dict, SystemConfig]) -> SystemConfig:
    """Check every scenario constraint; raise ConfigError listing all failures.

    Accepts either a parsed JSON object or an already-built SystemConfig
    (idempotent: re-validating a valid config returns an equal config).
    """
    errors: list[str] = []
    if isinstance(raw, SystemConfig):
        config = raw
    elif isinstance(raw, dict):
        _take(
            raw, "", errors,
            ("classes", "exclusion_radius", "target", "marker", "single_nm_distance"),
        )
        classes: list[NmClass] = []
        raw_classes = raw.get("classes")
        if not isinstance(raw_classes, list) or not raw_classes:
            errors.append("classes: must be a non-empty array")
        else:
            for i, rc in enumerate(raw_classes):
                built = _build_class(rc, i, errors)
                if built is not None:
                    classes.append(built)
        exclusion = _number(raw, "exclusion_radius", "", errors)

        target = TargetSpec()
        if "target" in raw:
            rt = raw["target"]
            if not isinstance(rt, dict):
                errors.append(f"target: must be an object, got {rt!r}")
            else:
                _take(rt, "target.", errors, ("diffusion", "degradation_rate"))
                target = TargetSpec(
                    diffusion=_number(rt, "diffusion", "target.", errors, default=0.0) or 0.0,
                    degradation_rate=_number(rt, "degradation_rate", "target.", errors, default=0.0) or 0.0,
                )

        marker = None
        if "marker" in raw and raw["marker"] is not None:
            rm = raw["marker"]
            if not isinstance(rm, dict):
                errors.append(f"marker: must be an object, got {rm!r}")
            else:
                _take(rm, "marker.", errors, ("emission_rate", "diffusion", "threshold"))
                em = _number(rm, "emission_rate", "marker.", errors)
                dm = _number(rm, "diffusion", "marker.", errors)
                th = _number(rm, "threshold", "marker.", errors)
                if None not in (em, dm, th):
                    marker = MarkerSpec(em, dm, th)

        single = None
        if "single_nm_distance" in raw and raw["single_nm_distance"] is not None:
            single = _number(raw, "single_nm_distance", "", errors)

        if errors:
            raise ConfigError(errors)
        config = SystemConfig(
            classes=tuple(classes),
            exclusion_radius=exclusion,
            target=target,
            marker=marker,
            single_nm_distance=single,
        )
    else:
        raise ConfigError([f"config must be an object or SystemConfig, got {type(raw).__name__}"])

    _check_system(config, errors)
    if errors:
        raise ConfigError(errors)
    return config


def _check_sim(sim: SimConfig, system: SystemConfig, errors: list[str]) -> None:
    if not (_is_number(sim.time_step) and sim.time_step > 0):
        errors.append(f"sim.time_step: must be > 0, got {sim.time_step!r}")
    if not (_is_number(sim.horizon) and sim.horizon > 0):
        errors.append(f"sim.horizon: must be > 0, got {sim.horizon!r}")
    if not _is_number(sim.window_radius):
        errors.append(f"sim.window_radius: must be a finite number, got {sim.window_radius!r}")
    elif _is_number(system.exclusion_radius) and sim.window_radius <= system.exclusion_radius:
        errors.append(
            f"sim.window_radius: must be > exclusion_radius {system.exclusion_radius}, "
            f"got {sim.window_radius}"
        )
    if not isinstance(sim.trials, (int,)) or isinstance(sim.trials, bool) or sim.trials < 0:
        errors.append(f"sim.trials: must be an integer >= 0, got {sim.trials!r}")
    if not isinstance(sim.master_seed, int) or isinstance(sim.master_seed, bool) or sim.master_seed < 0:
        errors.append(f"sim.master_seed: must be a non-negative integer, got {sim.master_seed!r}")
    if not sim.t_grid:
        errors.append("sim.t_grid: must be non-empty")
    else:
        prev = None
        for i, tv in enumerate(sim.t_grid):
            if not _is_number(tv):
                errors.append(f"sim.t_grid[{i}]: must be a finite number, got {tv!r}")
                continue
            if tv < 0 or (_is_number(sim.horizon) and tv > sim.horizon):
                errors.append(
                    f"sim.t_grid[{i}]: must lie within [0, horizon {sim.horizon}], got {tv}"
                )
            if prev is not None and tv < prev:
                errors.append(f"sim.t_grid[{i}]: grid must be sorted, {tv} < {prev}")
            prev = tv


def validate_sim(raw: Union[dict, SimConfig], system: SystemConfig) -> SimConfig:
    """Check simulation controls against the (validated) scenario."""
    errors: list[str] = []
    if isinstance(raw, SimConfig):
        sim = raw
    elif isinstance(raw, dict):
        _take(
            raw, "sim.", errors,
            ("time_step", "horizon", "window_radius", "trials", "master_seed", "t_grid"),
        )
        time_step = _number(raw, "time_step", "sim.", errors)
        horizon = _number(raw, "horizon", "sim.", errors)
        window = _number(raw, "window_radius", "sim.", errors)
        trials = raw.get("trials")
        if not isinstance(trials, int) or isinstance(trials, bool):
            errors.append(f"sim.trials: must be an integer, got {trials!r}")
            trials = 0
        seed = raw.get("master_seed")
        if not isinstance(seed, int) or isinstance(seed, bool):
            errors.append(f"sim.master_seed: must be an integer, got {seed!r}")
            seed = 0
        grid_raw = raw.get("t_grid")
        grid: tuple[float, ...] = ()
        if not isinstance(grid_raw, list) or not grid_raw:
            errors.append(f"sim.t_grid: must be a non-empty array, got {grid_raw!r}")
        elif not all(_is_number(v) for v in grid_raw):
            errors.append("sim.t_grid: entries must be finite numbers")
        else:
            grid = tuple(float(v) for v in grid_raw)
        if errors:
            raise ConfigError(errors)
        sim = SimConfig(time_step, horizon, window, trials, seed, grid)
    else:
        raise ConfigError([f"sim config must be an object or SimConfig, got {type(raw).__name__}"])

    _check_sim(sim, system, errors)
    if errors:
        raise ConfigError(errors)
    return sim


def load_config(source: Union[str, Path, dict]) -> tuple[SystemConfig, SimConfig]:
    """Parse and validate a config document: {"system": {...}, "sim": {...}}.

    Unknown keys are rejected at every level. Violations from both sections
    are reported together.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ConfigError([f"config document must be an object, got {type(doc).__name__}"])

    errors: list[str] = []
    _take(doc, "", errors, ("system", "sim"))
    if "system" not in doc:
        errors.append("system: missing")
    if "sim" not in doc:
        errors.append("sim: missing")
    if errors:
        raise ConfigError(errors)

    collected: list[str] = []
    system = None
    try:
        system = validate(doc["system"])
    except ConfigError as exc:
        collected.extend(f"system.{e}" for e in exc.errors)
    sim = None
    if system is not None:
        try:
            sim = validate_sim(doc["sim"], system)
        except ConfigError as exc:
            collected.extend(exc.errors)
    if collected:
        raise ConfigError(collected)
    return system, sim


def config_to_dict(config: SystemConfig) -> dict:
    """Inverse of validate(dict): a JSON-ready object that round-trips."""
    out: dict = {
        "classes": [
            {"radius": c.radius, "diffusion": c.diffusion, "density": c.density}
            for c in config.classes
        ],
        "exclusion_radius": config.exclusion_radius,
        "target": {
            "diffusion": config.target.diffusion,
            "degradation_rate": config.target.degradation_rate,
        },
    }
    if config.marker is not None:
        out["marker"] = {
            "emission_rate": config.marker.emission_rate,
            "diffusion": config.marker.diffusion,
            "threshold": config.marker.threshold,
        }
    if config.single_nm_distance is not None:
        out["single_nm_distance"] = config.single_nm_distance
    return out


def sim_config_to_dict(sim: SimConfig) -> dict:
    """Inverse of validate_sim(dict): a JSON-ready object that round-trips."""
    return {
        "time_step": sim.time_step,
        "horizon": sim.horizon,
        "window_radius": sim.window_radius,
        "trials": sim.trials,
        "master_seed": sim.master_seed,
        "t_grid": list(sim.t_grid),
    }
