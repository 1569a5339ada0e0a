"""Experiment presets, analytic-vs-simulation tables, and CSV emission.

A table is built curve by curve: each curve names a quantity, carries its own
system config (and optionally its own simulation controls), and contributes
one column per variant. Variants are `analytic` (closed form), `exact` and
`approx` (the two degradable-detection routes), `mc` (simulation estimate),
and `ci` (95% half-width). Column names are `<label>.<variant>`; the first
column is the x axis, `t` in seconds unless the experiment sweeps a parameter.

CSV layout: `#`-prefixed `key=value` metadata lines, then a header row, then
one row per axis value. Metadata echoes the full experiment so a table can be
regenerated bit-identically; wall time is tracked in memory but kept out of
the file for that reason.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import __version__
from . import analytic as _an
from . import simulator as _sim
from .model import (
    MarkerSpec,
    NmClass,
    SimConfig,
    SystemConfig,
    config_to_dict,
    sim_config_to_dict,
    validate,
    validate_sim,
)

__all__ = [
    "CurveSpec",
    "CurveReport",
    "ExperimentSpec",
    "Report",
    "ResultTable",
    "compare",
    "figure_presets",
    "read_table",
    "run_experiment",
    "write_table",
]

_QUANTITIES = (
    "p_detect",
    "p_detect_deg",
    "p_single",
    "mean_detectors",
    "mean_detection_time",
    "p_sense_within",
    "p_sense_at",
)

# metadata keys that vary between identical reruns; never written to CSV
_VOLATILE_KEYS = frozenset({"wall_time_s"})


@dataclass(frozen=True)
class CurveSpec:
    """One plotted series: a quantity evaluated under its own config."""

    label: str
    quantity: str
    config: SystemConfig
    mc: bool = False
    analytic: bool = True
    sim: Optional[SimConfig] = None     # falls back to the experiment's sim
    d_m: Optional[float] = None         # sensing margin; derived from marker when None
    mode: str = "stationary"            # mean_detection_time only


@dataclass(frozen=True)
class ExperimentSpec:
    id: str
    config: SystemConfig
    sim: SimConfig
    curves: tuple[CurveSpec, ...]
    # (SystemConfig field name, values); rows become sweep points, not times
    sweep: Optional[tuple[str, tuple[float, ...]]] = None


@dataclass(frozen=True)
class ResultTable:
    """Axis column plus named series columns of equal length."""

    axis: str
    columns: tuple[tuple[str, np.ndarray], ...]
    metadata: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if not self.columns or self.columns[0][0] != self.axis:
            raise ValueError("first column must be the axis")
        n = len(self.columns[0][1])
        for name, values in self.columns:
            if len(values) != n:
                raise ValueError(f"column {name!r} has length {len(values)}, expected {n}")

    def column(self, name: str) -> np.ndarray:
        for col_name, values in self.columns:
            if col_name == name:
                return values
        raise KeyError(f"no column named {name!r}")

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.columns)

    @property
    def metadata_dict(self) -> dict[str, str]:
        return dict(self.metadata)


def _log_grid(lo: float, hi: float, n: int = 200) -> tuple[float, ...]:
    return tuple(float(t) for t in np.logspace(np.log10(lo), np.log10(hi), n))


def _sum_kappa(t: float, config: SystemConfig) -> float:
    mu = config.target.degradation_rate
    total = 0.0
    for cls in config.classes:
        d_eff = cls.diffusion + config.target.diffusion
        if mu > 0:
            total += _an.zeta(t, cls, config.exclusion_radius, mu, D_override=d_eff)
        else:
            total += _an.kappa(t, cls, config.exclusion_radius, D_override=d_eff)
    return total


def _analytic_columns(curve: CurveSpec, config: SystemConfig, sim: SimConfig) -> dict[str, np.ndarray]:
    t_grid = sim.t_grid
    q = curve.quantity
    if q == "p_detect":
        return {"analytic": np.array([_an.p_detect(t, config) for t in t_grid])}
    if q == "p_detect_deg":
        return {
            "approx": np.array([_an.p_detect_deg_approx(t, config) for t in t_grid]),
            "exact": np.array([_an.p_detect_deg_exact(t, config) for t in t_grid]),
        }
    if q == "p_single":
        cls = config.classes[0]
        d_eff = cls.diffusion + config.target.diffusion
        mu = config.target.degradation_rate
        return {
            "analytic": np.array([
                _an.p_single(t, cls.radius, d_eff, config.single_nm_distance, mu)
                for t in t_grid
            ])
        }
    if q == "mean_detectors":
        return {"analytic": np.array([_sum_kappa(t, config) for t in t_grid])}
    if q == "p_sense_within":
        d_m = _margin(curve, config)
        return {"analytic": np.array([_an.p_sense_within(t, config, d_m) for t in t_grid])}
    if q == "p_sense_at":
        d_m = _margin(curve, config)
        return {"analytic": np.array([_an.p_sense_at(t, config, d_m) for t in t_grid])}
    raise ValueError(f"curve {curve.label!r}: unknown quantity {q!r}")


def _mc_columns(curve: CurveSpec, config: SystemConfig, sim: SimConfig) -> dict[str, np.ndarray]:
    q = curve.quantity
    if q in ("p_detect", "p_detect_deg", "p_single"):
        est = _sim.estimate_curves(config, sim)
        return {"mc": est.p_hat, "ci": est.ci_half_width}
    if q == "mean_detectors":
        est = _sim.estimate_curves(config, sim)
        return {"mc": est.mean_detectors}
    if q == "p_sense_within":
        est = _sim.simulate_sensing(config, sim, _margin(curve, config), "within_t")
        return {"mc": est.p_hat, "ci": est.ci_half_width}
    if q == "p_sense_at":
        est = _sim.simulate_sensing(config, sim, _margin(curve, config), "at_t")
        return {"mc": est.p_hat, "ci": est.ci_half_width}
    raise ValueError(f"curve {curve.label!r}: quantity {q!r} has no simulation estimator")


def _margin(curve: CurveSpec, config: SystemConfig) -> float:
    if curve.d_m is not None:
        return curve.d_m
    if config.marker is None:
        raise ValueError(
            f"curve {curve.label!r}: sensing quantities need d_m or a marker config"
        )
    return _an.sensing_radius(config.marker)


def _mdt_cell(curve: CurveSpec, config: SystemConfig) -> float:
    return _an.mean_detection_time(config, mode=curve.mode)


def _mdt_mc_cell(config: SystemConfig, sim: SimConfig) -> tuple[float, float]:
    times = _sim.first_detection_times(config, sim)
    # undetected trials are truncated at the horizon; presets size horizons
    # so the undetected mass is negligible
    capped = np.where(np.isinf(times), sim.horizon, times)
    mean = float(capped.mean())
    half = float(1.96 * capped.std(ddof=1) / np.sqrt(len(capped)))
    return mean, half


def _validated(config: SystemConfig) -> SystemConfig:
    validate(config)
    return config


def run_experiment(spec: ExperimentSpec, out_path=None) -> ResultTable:
    """Evaluate every curve of the experiment, producing one table. Writes
    CSV when out_path is given. Deterministic under a fixed master seed."""
    t_start = time.perf_counter()
    for curve in spec.curves:
        if curve.quantity not in _QUANTITIES:
            raise ValueError(
                f"curve {curve.label!r}: unknown quantity {curve.quantity!r}; "
                f"expected one of {', '.join(_QUANTITIES)}"
            )
    if spec.sweep is not None:
        table = _run_sweep(spec)
    else:
        table = _run_grid(spec)
    wall = time.perf_counter() - t_start
    table = replace(
        table, metadata=table.metadata + (("wall_time_s", f"{wall:.3f}"),)
    )
    if out_path is not None:
        write_table(table, out_path)
    return table


def _base_metadata(spec: ExperimentSpec, axis: str) -> list[tuple[str, str]]:
    echo = {
        "id": spec.id,
        "config": config_to_dict(spec.config),
        "sim": sim_config_to_dict(spec.sim),
        "sweep": None if spec.sweep is None else [spec.sweep[0], list(spec.sweep[1])],
        "curves": [
            {
                "label": c.label,
                "quantity": c.quantity,
                "mc": c.mc,
                "analytic": c.analytic,
                "mode": c.mode,
                "d_m": c.d_m,
                "config": config_to_dict(c.config),
                "sim": None if c.sim is None else sim_config_to_dict(c.sim),
            }
            for c in spec.curves
        ],
    }
    blob = json.dumps(echo, sort_keys=True, separators=(",", ":"))
    artifact = hashlib.sha256((__version__ + blob).encode()).hexdigest()[:12]
    return [
        ("id", spec.id),
        ("tool", f"nmdetect {__version__}"),
        ("artifact", artifact),
        ("axis", axis),
        ("seed", str(spec.sim.master_seed)),
        ("experiment", blob),
    ]


def _run_grid(spec: ExperimentSpec) -> ResultTable:
    t_grid = np.array(spec.sim.t_grid)
    columns: list[tuple[str, np.ndarray]] = [("t", t_grid)]
    for curve in spec.curves:
        config = _validated(curve.config)
        sim = curve.sim or spec.sim
        validate_sim(sim, config)
        if sim.t_grid != spec.sim.t_grid:
            raise ValueError(
                f"curve {curve.label!r}: per-curve sim must keep the experiment t_grid"
            )
        if curve.quantity == "mean_detection_time":
            raise ValueError(
                f"curve {curve.label!r}: mean_detection_time is a sweep quantity"
            )
        if curve.analytic:
            for variant, values in _analytic_columns(curve, config, sim).items():
                columns.append((f"{curve.label}.{variant}", values))
        if curve.mc:
            for variant, values in _mc_columns(curve, config, sim).items():
                columns.append((f"{curve.label}.{variant}", values))
    return ResultTable(
        axis="t", columns=tuple(columns), metadata=tuple(_base_metadata(spec, "t"))
    )


_AXIS_NAMES = {"exclusion_radius": "r"}


def _run_sweep(spec: ExperimentSpec) -> ResultTable:
    field_name, values = spec.sweep
    if field_name not in {f.name for f in dataclasses.fields(SystemConfig)}:
        raise ValueError(f"sweep field {field_name!r} is not a system config field")
    axis = _AXIS_NAMES.get(field_name, field_name)
    columns: list[tuple[str, np.ndarray]] = [
        (axis, np.array([float(v) for v in values]))
    ]
    per_curve: dict[str, dict[str, list[float]]] = {}
    for curve in spec.curves:
        sim = curve.sim or spec.sim
        for value in values:
            config = _validated(replace(curve.config, **{field_name: value}))
            validate_sim(sim, config)
            cells = per_curve.setdefault(curve.label, {})
            if curve.quantity == "mean_detection_time":
                if curve.analytic:
                    cells.setdefault("analytic", []).append(_mdt_cell(curve, config))
                if curve.mc:
                    mean, half = _mdt_mc_cell(config, sim)
                    cells.setdefault("mc", []).append(mean)
                    cells.setdefault("ci", []).append(half)
            else:
                if not curve.analytic or curve.mc:
                    raise ValueError(
                        f"curve {curve.label!r}: sweeps support analytic scalar "
                        f"quantities and mean_detection_time MC only"
                    )
                single = replace(sim, t_grid=(sim.t_grid[-1],))
                col = _analytic_columns(curve, config, single)
                for variant, arr in col.items():
                    cells.setdefault(variant, []).append(float(arr[-1]))
    for curve in spec.curves:
        for variant, cells in per_curve[curve.label].items():
            columns.append((f"{curve.label}.{variant}", np.array(cells)))
    return ResultTable(
        axis=axis, columns=tuple(columns), metadata=tuple(_base_metadata(spec, axis))
    )


def write_table(table: ResultTable, path) -> None:
    lines = []
    for key, value in table.metadata:
        if key in _VOLATILE_KEYS:
            continue
        lines.append(f"# {key}={value}")
    lines.append(",".join(name for name, _ in table.columns))
    arrays = [values for _, values in table.columns]
    for row in zip(*arrays):
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_table(path) -> ResultTable:
    metadata: list[tuple[str, str]] = []
    header: Optional[list[str]] = None
    rows: list[list[float]] = []
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                key, _, value = body.partition("=")
                metadata.append((key.strip(), value))
                continue
            if header is None:
                header = [name.strip() for name in line.split(",")]
                continue
            rows.append([float(tok) for tok in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no header row found")
    data = np.array(rows) if rows else np.zeros((0, len(header)))
    columns = tuple(
        (name, np.ascontiguousarray(data[:, i])) for i, name in enumerate(header)
    )
    return ResultTable(axis=header[0], columns=columns, metadata=tuple(metadata))


@dataclass(frozen=True)
class CurveReport:
    label: str
    reference: str                    # variant the mc column was compared to
    max_abs_deviation: float
    worst_axis_value: float
    ci_coverage: Optional[float]      # fraction of points with |ref-mc| <= ci
    passed: bool


@dataclass(frozen=True)
class Report:
    tolerance: float
    curves: tuple[CurveReport, ...]
    skipped: tuple[str, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.curves)

    def __str__(self) -> str:
        lines = [f"tolerance {self.tolerance:g}"]
        for c in self.curves:
            cov = "" if c.ci_coverage is None else f"  ci_coverage={c.ci_coverage:.3f}"
            lines.append(
                f"  {'PASS' if c.passed else 'FAIL'} {c.label}: "
                f"max|{c.reference}-mc|={c.max_abs_deviation:.5f} "
                f"at axis={c.worst_axis_value:g}{cov}"
            )
        for label in self.skipped:
            lines.append(f"  SKIP {label}: no reference column")
        lines.append("overall " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def compare(table: ResultTable, tolerance: float) -> Report:
    """Per-curve max |reference - mc| verdicts against the tolerance. The
    reference is the exact variant when present, the analytic one otherwise;
    mc-only curves are reported as skipped."""
    if not tolerance > 0:
        raise ValueError(f"tolerance must be > 0, got {tolerance!r}")
    axis_values = table.columns[0][1]
    groups: dict[str, dict[str, np.ndarray]] = {}
    for name, values in table.columns[1:]:
        label, _, variant = name.rpartition(".")
        if not label:
            raise ValueError(f"column {name!r} is not of the form <label>.<variant>")
        groups.setdefault(label, {})[variant] = values
    curves = []
    skipped = []
    for label, variants in groups.items():
        if "mc" not in variants:
            continue
        if "exact" in variants:
            ref_name = "exact"
        elif "analytic" in variants:
            ref_name = "analytic"
        elif "approx" in variants:
            ref_name = "approx"
        else:
            skipped.append(label)
            continue
        dev = np.abs(variants[ref_name] - variants["mc"])
        worst = int(np.argmax(dev))
        coverage = None
        if "ci" in variants:
            coverage = float(np.mean(dev <= variants["ci"]))
        curves.append(
            CurveReport(
                label=label,
                reference=ref_name,
                max_abs_deviation=float(dev[worst]),
                worst_axis_value=float(axis_values[worst]),
                ci_coverage=coverage,
                passed=bool(dev[worst] <= tolerance),
            )
        )
    if not curves and not skipped:
        raise ValueError("table has no simulation columns to compare")
    return Report(tolerance=tolerance, curves=tuple(curves), skipped=tuple(skipped))


def _classes(radii, diffusions, density) -> tuple[NmClass, ...]:
    return tuple(
        NmClass(radius=a, diffusion=d, density=density)
        for a, d in zip(radii, diffusions)
    )


def figure_presets() -> list[ExperimentSpec]:
    """The eight stock experiments, fig2 through fig9. Parameter choices not
    fixed by the scenario definitions (trial counts, grid ranges, reference
    distances) are documented defaults chosen to show each effect clearly."""
    presets = [
        _fig2(),
        _fig3(),
        _fig4(),
        _fig5(),
        _fig6(),
        _fig7(),
        _fig8(),
        _fig9(),
    ]
    return presets


def _fig2() -> ExperimentSpec:
    base = SystemConfig(
        classes=_classes((3.0, 4.0), (100.0, 75.0), 1e-5), exclusion_radius=30.0
    )
    sim = SimConfig(
        time_step=1e-4,
        horizon=100.0,
        window_radius=300.0,
        trials=10_000,
        master_seed=42,
        t_grid=_log_grid(1.0, 100.0),
    )
    single = SystemConfig(
        classes=(NmClass(radius=4.0, diffusion=100.0, density=1e-6),),
        exclusion_radius=30.0,
        single_nm_distance=50.0,
    )
    curves = (
        CurveSpec(
            label="p_detect_lam1e-06",
            quantity="p_detect",
            config=replace(base, classes=_classes((3.0, 4.0), (100.0, 75.0), 1e-6)),
            mc=True,
        ),
        CurveSpec(label="p_detect_lam1e-05", quantity="p_detect", config=base, mc=True),
        CurveSpec(label="p_single_d50", quantity="p_single", config=single, mc=True),
    )
    return ExperimentSpec(id="fig2", config=base, sim=sim, curves=curves)


def _fig3() -> ExperimentSpec:
    from .model import TargetSpec

    def cfg(radii, mu):
        return SystemConfig(
            classes=_classes(radii, (100.0, 75.0), 1e-6),
            exclusion_radius=30.0,
            target=TargetSpec(degradation_rate=mu),
        )

    base = cfg((3.0, 4.0), 0.1)
    # the mu = 0.01 curve draws detectors from far out before they decay
    # away; the window is sized so that truncation stays below the MC noise
    sim = SimConfig(
        time_step=1e-4,
        horizon=50.0,
        window_radius=300.0,
        trials=10_000,
        master_seed=42,
        t_grid=_log_grid(0.5, 50.0),
    )
    curves = (
        CurveSpec("p_deg_a34_mu0.10", "p_detect_deg", cfg((3.0, 4.0), 0.1), mc=True),
        CurveSpec("p_deg_a34_mu0.01", "p_detect_deg", cfg((3.0, 4.0), 0.01), mc=True),
        CurveSpec("p_deg_a56_mu0.10", "p_detect_deg", cfg((5.0, 6.0), 0.1), mc=True),
    )
    return ExperimentSpec(id="fig3", config=base, sim=sim, curves=curves)


def _fig4() -> ExperimentSpec:
    from .model import TargetSpec

    def cfg(d_t, mu):
        return SystemConfig(
            classes=_classes((3.0, 4.0), (100.0, 75.0), 1e-5),
            exclusion_radius=30.0,
            target=TargetSpec(diffusion=d_t, degradation_rate=mu),
        )

    sim = SimConfig(
        time_step=1e-4,
        horizon=100.0,
        window_radius=300.0,
        trials=0,
        master_seed=42,
        t_grid=_log_grid(0.1, 100.0),
    )
    curves = (
        CurveSpec("nm_count_stationary", "mean_detectors", cfg(0.0, 0.0)),
        CurveSpec("nm_count_mobile", "mean_detectors", cfg(100.0, 0.0)),
        CurveSpec("nm_count_deg", "mean_detectors", cfg(0.0, 0.1)),
        CurveSpec("nm_count_mobile_deg", "mean_detectors", cfg(100.0, 0.1)),
    )
    return ExperimentSpec(id="fig4", config=cfg(0.0, 0.0), sim=sim, curves=curves)


def _fig5() -> ExperimentSpec:
    from .model import TargetSpec

    def cfg(mu):
        return SystemConfig(
            classes=_classes((3.0, 4.0), (100.0, 75.0), 1e-5),
            exclusion_radius=30.0,
            target=TargetSpec(diffusion=100.0, degradation_rate=mu),
        )

    sim = SimConfig(
        time_step=1e-4,
        horizon=100.0,
        window_radius=300.0,
        trials=10_000,
        master_seed=42,
        t_grid=_log_grid(1.0, 100.0),
    )
    curves = (
        CurveSpec("p_detect_mobile", "p_detect", cfg(0.0), mc=True),
        CurveSpec("p_detect_mobile_deg", "p_detect_deg", cfg(0.1), mc=True),
    )
    return ExperimentSpec(id="fig5", config=cfg(0.0), sim=sim, curves=curves)


def _fig6() -> ExperimentSpec:
    from .model import TargetSpec

    def single(d_t):
        return SystemConfig(
            classes=(NmClass(radius=3.0, diffusion=100.0, density=1e-6),),
            exclusion_radius=30.0,
            target=TargetSpec(diffusion=d_t, degradation_rate=0.1),
            single_nm_distance=30.0,
        )

    multi = SystemConfig(
        classes=_classes((3.0, 4.0), (100.0, 75.0), 1e-6),
        exclusion_radius=30.0,
        target=TargetSpec(diffusion=100.0, degradation_rate=0.1),
    )
    sim = SimConfig(
        time_step=1e-4,
        horizon=50.0,
        window_radius=300.0,
        trials=10_000,
        master_seed=42,
        t_grid=_log_grid(0.5, 50.0),
    )
    curves = (
        CurveSpec("p_single_deg", "p_single", single(0.0), mc=True),
        CurveSpec("p_single_deg_mobile", "p_single", single(100.0), mc=True),
        CurveSpec("p_multi_mobile_deg", "p_detect_deg", multi, mc=True),
    )
    return ExperimentSpec(id="fig6", config=multi, sim=sim, curves=curves)


def _fig7() -> ExperimentSpec:
    from .model import TargetSpec

    def cfg(density, d_t=0.0):
        return SystemConfig(
            classes=_classes((3.0, 4.0), (100.0, 75.0), density),
            exclusion_radius=10.0,
            target=TargetSpec(diffusion=d_t),
        )

    sim = SimConfig(
        time_step=1e-4,
        horizon=150.0,
        window_radius=300.0,
        trials=2_000,
        master_seed=42,
        t_grid=(150.0,),
    )
    # sparse swarms detect late: the horizon scales with the expected wait,
    # and the window widens until the chance that no deployed NM ever
    # reaches the target is negligible (the wait would otherwise read high)
    sim_sparse = replace(
        sim, horizon=1500.0, t_grid=(1500.0,), window_radius=700.0, trials=1_000
    )
    curves = (
        CurveSpec(
            "mdt_lam1e-05", "mean_detection_time", cfg(1e-5), mc=True, mode="stationary"
        ),
        CurveSpec(
            "mdt_lam1e-06",
            "mean_detection_time",
            cfg(1e-6),
            mc=True,
            mode="stationary",
            sim=sim_sparse,
        ),
        CurveSpec(
            "mdt_mobile_lam1e-05",
            "mean_detection_time",
            cfg(1e-5, d_t=100.0),
            mode="mobile",
        ),
    )
    return ExperimentSpec(
        id="fig7",
        config=cfg(1e-5),
        sim=sim,
        curves=curves,
        sweep=("exclusion_radius", (10.0, 20.0, 30.0, 40.0, 50.0)),
    )


def _sensing_config(eta: float, r: float = 30.0) -> SystemConfig:
    return SystemConfig(
        classes=(NmClass(radius=3.0, diffusion=100.0, density=1e-6),),
        exclusion_radius=r,
        marker=MarkerSpec(emission_rate=100.0, diffusion=100.0, threshold=eta),
    )


def _fig8() -> ExperimentSpec:
    # sensing reaches tens of microns past the NM surface, so detectors are
    # recruited from far beyond the exclusion hole; the window covers the
    # widest sensing radius plus the diffusive spread over the horizon
    sim = SimConfig(
        time_step=1e-4,
        horizon=50.0,
        window_radius=700.0,
        trials=10_000,
        master_seed=42,
        t_grid=_log_grid(0.05, 50.0),
    )
    # the lowest threshold has a sensing radius wider than the exclusion
    # radius, so only the at-instant quantity is defined analytically there
    curves = (
        CurveSpec("p_sense_eta0.002", "p_sense_at", _sensing_config(0.002), mc=True),
        CurveSpec("p_sense_eta0.005", "p_sense_within", _sensing_config(0.005), mc=True),
        CurveSpec("p_sense_eta0.01", "p_sense_within", _sensing_config(0.01), mc=True),
        CurveSpec("p_sense_eta0.02", "p_sense_within", _sensing_config(0.02), mc=True),
    )
    return ExperimentSpec(id="fig8", config=_sensing_config(0.005), sim=sim, curves=curves)


def _fig9() -> ExperimentSpec:
    # same window sizing as fig8: the sensing reach, not the NM radius,
    # sets how far contributing walkers start
    sim = SimConfig(
        time_step=1e-4,
        horizon=50.0,
        window_radius=700.0,
        trials=10_000,
        master_seed=42,
        t_grid=_log_grid(0.05, 50.0),
    )
    radii = (20.0, 30.0, 40.0, 50.0)
    curves = []
    for r in radii:
        cfg = _sensing_config(0.002, r=r)
        curves.append(
            CurveSpec(f"p_sense_at_r{r:g}", "p_sense_at", cfg, mc=True)
        )
        # the within-time formula needs the sensing ball inside the exclusion
        # hole, which only the widest radius satisfies here
        reach = 3.0 + _an.sensing_radius(cfg.marker)
        curves.append(
            CurveSpec(
                f"p_sense_within_r{r:g}",
                "p_sense_within",
                cfg,
                mc=True,
                analytic=bool(r >= reach),
            )
        )
    return ExperimentSpec(
        id="fig9", config=_sensing_config(0.002, r=50.0), sim=sim, curves=tuple(curves)
    )
