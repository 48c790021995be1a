"""
Run orchestration and result files.

A RunManifest describes one command invocation. ``run`` executes it and
writes, into the output directory:

- results.csv and results.json
- plotdata/*.csv, one file per plotted series
- run_report.txt with the constants, the mass note and solver diagnostics
- manifest.json

CSV files are written with a fixed column order and float format, so the
same manifest and seed give byte-identical tables.
"""

import json
import logging
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Literal

import numpy as np
import pandas as pd

from eco_deflect import __version__
from eco_deflect.config import SolverOptions
from eco_deflect.exceptions import SolverError
from eco_deflect.impulsive import (
    DEFAULT_HORIZON_TP,
    DEFAULT_LAMBDA_STEP,
    ImpulseSolution,
    attach_encounters,
    separation_history,
    solve_min_impulse,
    sweep_impulse_times,
)
from eco_deflect.lunar import DEFAULT_NOMINAL_MISS_RE, LunarSweepConfig, sweep_moon_anomaly
from eco_deflect.optimizer import (
    BoundedProfile,
    Regime,
    SolutionReport,
    sweep_start_times,
)
from eco_deflect.scenario import Scenario, load_shipped, validate_scenario

logger = logging.getLogger(__name__)

Command = Literal["solve", "sweep", "impulsive", "lunar"]

RESULT_COLUMNS = [
    "ti_tp",
    "regime",
    "t_op_day",
    "idle_day",
    "energy_kw_day",
    "dv_mps",
    "residual_b_lu",
    "status",
]
IMPULSE_COLUMNS = [
    "ti_tp",
    "dv_cms",
    "lambda_deg",
    "a_pre_au",
    "e_pre",
    "a_post_au",
    "e_post",
    "tp_post_yr",
    "effect",
    "next_encounter_tp",
]
IMPULSE_SWEEP_COLUMNS = ["ti_tp", "dv_cms", "lambda_deg", "status"]
LUNAR_COLUMNS = ["f_deg", "miss_re", "rel_error"]
FLOAT_FORMAT = "%.10g"
SEPARATION_SPAN_TP = 20.0


@dataclass(frozen=True)
class RunManifest:
    """
    One command invocation.

    Attributes:
        command: "solve", "sweep", "impulsive" or "lunar".
        out_dir: Output directory.
        scenario_path: Scenario file; None selects the shipped default.
        regime: Power regime for solve and sweep.
        profile: Bounded-regime profile text, e.g. "const:0.3".
        start_times: Start (or impulse) times in ECO periods.
        options: Solver settings; options.seed fixes the restart sequence.
        miss_re: Miss-distance override (Earth radii).
        mass_loss: Mass-loss override.
        nominal_miss_re: Two-body perigee of the lunar study (Earth radii).
        anomaly_step_deg: Moon anomaly grid step (deg).
        lambda_step_deg: Impulse-angle grid step (deg).
        horizon_tp: Next-encounter search horizon (ECO periods).
        version: Package version that produced the run.
        timestamp: UTC time of the run; kept out of the result tables.
    """

    command: Command
    out_dir: Path
    scenario_path: str | None = None
    regime: Regime = "constant"
    profile: str | None = None
    start_times: tuple[float, ...] = (0.9,)
    options: SolverOptions = field(default_factory=SolverOptions)
    miss_re: float | None = None
    mass_loss: bool | None = None
    nominal_miss_re: float = DEFAULT_NOMINAL_MISS_RE
    anomaly_step_deg: float = 1.0
    lambda_step_deg: float = DEFAULT_LAMBDA_STEP
    horizon_tp: float = DEFAULT_HORIZON_TP
    version: str = __version__
    timestamp: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["out_dir"] = str(self.out_dir)
        data["start_times"] = list(self.start_times)
        return data


def load_scenario(manifest: RunManifest) -> Scenario:
    """
    Scenario named by the manifest, with its overrides applied.

    Raises:
        ScenarioError: If the file is missing or invalid.
    """
    if manifest.scenario_path is None:
        scenario = load_shipped()
    else:
        scenario = validate_scenario(manifest.scenario_path)
    if manifest.miss_re is not None or manifest.mass_loss is not None:
        scenario = scenario.with_overrides(miss_re=manifest.miss_re, mass_loss=manifest.mass_loss)
    return scenario


def write_table(rows: Sequence[dict[str, Any]], columns: Sequence[str], path: Path) -> None:
    """Write rows as CSV with a fixed column order and float format."""
    frame = pd.DataFrame(list(rows), columns=list(columns))
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    return value


def write_json(data: Any, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2) + "\n", encoding="utf-8")


def constants_text(scenario: Scenario) -> list[str]:
    units = scenario.units
    return [
        f"scenario: {scenario.name}",
        f"1 LU = {units.length_unit:.10g} m, 1 TU = {units.time_unit:.10g} s "
        f"({units.days(1.0):.6f} day), 1 SU = {units.speed_unit:.10g} m/s",
        f"mu_earth = {units.grav_param_earth:.10g} LU^3/TU^2",
        f"ECO: a = {scenario.eco_elements.a:.6f} au, e = {scenario.eco_elements.e:.6f}, "
        f"Tp = {units.days(scenario.period):.4f} day",
        f"laser: P_max = {scenario.laser.power_max / 1e6:g} MW, "
        f"C_m = {scenario.laser.coupling_cm:g} N*s/J, Q* = {scenario.laser.q_star:.6g} J/kg",
        f"miss distance {scenario.miss_distance_re:g} R_earth, "
        f"SOI radius {scenario.soi_radius * units.length_unit:.6g} m",
        scenario.mass_note(),
    ]


def _solution_series(reports: Sequence[SolutionReport], scenario: Scenario):
    units = scenario.units
    angle_rows, accel_rows = [], []
    for report in reports:
        ctrl = report.control
        if ctrl.is_empty:
            continue
        t_day = [units.days(t - ctrl.times[0]) for t in ctrl.times]
        for k, t in enumerate(t_day):
            angle_rows.append(
                {"ti_tp": report.start_time, "t_day": t, "delta_deg": report.delta_deg[k]}
            )
            accel_rows.append(
                {
                    "ti_tp": report.start_time,
                    "t_day": t,
                    "accel_mps2": ctrl.accel[k] * units.accel_unit,
                }
            )
    return angle_rows, accel_rows


def _run_transcription(manifest: RunManifest, scenario: Scenario, out: Path) -> list[str]:
    profile = BoundedProfile.parse(manifest.profile) if manifest.profile else None
    if manifest.regime == "bounded" and profile is None:
        profile = BoundedProfile.constant(0.3)
    reports = sweep_start_times(
        scenario, manifest.start_times, manifest.regime, manifest.options, profile
    )
    write_table([r.as_row() for r in reports], RESULT_COLUMNS, out / "results.csv")
    write_json([r.to_dict() for r in reports], out / "results.json")
    plot = out / "plotdata"
    write_table(
        [{"ti_tp": r.start_time, "t_op_day": r.t_op_day} for r in reports],
        ["ti_tp", "t_op_day"],
        plot / "t_op_vs_ti.csv",
    )
    write_table(
        [{"ti_tp": r.start_time, "energy_kw_day": r.energy_kw_day} for r in reports],
        ["ti_tp", "energy_kw_day"],
        plot / "energy_vs_ti.csv",
    )
    angle_rows, accel_rows = _solution_series(reports, scenario)
    write_table(angle_rows, ["ti_tp", "t_day", "delta_deg"], plot / "operational_angle.csv")
    write_table(accel_rows, ["ti_tp", "t_day", "accel_mps2"], plot / "acceleration.csv")

    lines = [f"regime: {manifest.regime}" + (f" ({profile.label})" if profile else "")]
    for r in reports:
        lines.append(
            f"t_i = {r.start_time:.4f} Tp: {r.status}, t_op = {r.t_op_day:.4f} day, "
            f"idle = {r.idle_day:.4f} day, energy = {r.energy_kw_day:.1f} kW*day, "
            f"dv = {r.dv_mps:.4f} m/s, seeds = {r.seeds}, outer = {r.n_outer}, "
            f"evaluations = {r.nfev}, {r.message}"
        )
    if manifest.command == "solve" and not reports[0].feasible:
        _write_report(manifest, scenario, lines, out)
        raise SolverError(
            f"no feasible solution at t_i = {reports[0].start_time} Tp "
            f"({reports[0].status}: {reports[0].message})"
        )
    return lines


def _impulse_rows(solutions: Sequence[ImpulseSolution]) -> list[dict[str, Any]]:
    return [s.as_row() for s in solutions]


def _run_impulsive(manifest: RunManifest, scenario: Scenario, out: Path) -> list[str]:
    plot = out / "plotdata"
    lines = []
    if len(manifest.start_times) > 1:
        points = sweep_impulse_times(
            scenario, list(manifest.start_times), step_deg=manifest.lambda_step_deg
        )
        write_table(
            [
                {"ti_tp": p.impulse_time_tp, "dv_cms": p.delta_v_cms,
                 "lambda_deg": p.lambda_deg, "status": p.status}
                for p in points
            ],
            IMPULSE_SWEEP_COLUMNS,
            plot / "dv_vs_ti.csv",
        )
    solutions = attach_encounters(
        solve_min_impulse(scenario, manifest.start_times[0], step_deg=manifest.lambda_step_deg),
        scenario,
        horizon_tp=manifest.horizon_tp,
    )
    if not solutions:
        raise SolverError(f"no impulsive optimum found at {manifest.start_times[0]} Tp")
    rows = _impulse_rows(solutions)
    write_table(rows, IMPULSE_COLUMNS, out / "results.csv")
    write_json(rows, out / "results.json")
    sep_rows = []
    for sol in solutions:
        if sol.post_flyby_elements is None:
            continue
        t_tp, ell = separation_history(sol, scenario, SEPARATION_SPAN_TP)
        sep_rows += [
            {"lambda_deg": sol.lambda_deg, "t_tp": float(t), "ell_lu": float(d)}
            for t, d in zip(t_tp, ell, strict=True)
        ]
    write_table(sep_rows, ["lambda_deg", "t_tp", "ell_lu"], plot / "separation_post_flyby.csv")
    for row in rows:
        lines.append(
            f"lambda = {row['lambda_deg']:.3f} deg: dv = {row['dv_cms']:.4f} cm/s, "
            f"a {row['a_pre_au']:.6f} -> {row['a_post_au']:.6f} au ({row['effect']}), "
            f"next encounter after {row['next_encounter_tp']:.2f} Tp"
        )
    return lines


def _run_lunar(manifest: RunManifest, scenario: Scenario, out: Path) -> list[str]:
    cfg = LunarSweepConfig.from_scenario(
        scenario,
        manifest.nominal_miss_re,
        anomaly_grid_deg=np.arange(0.0, 360.0, manifest.anomaly_step_deg),
        workers=manifest.options.workers,
    )
    result = sweep_moon_anomaly(cfg)
    rows = result.rows()
    write_table(rows, LUNAR_COLUMNS, out / "results.csv")
    write_json(
        {
            "nominal_miss_re": result.nominal_miss_re,
            "points": [asdict(p) for p in result.points],
        },
        out / "results.json",
    )
    write_table(rows, LUNAR_COLUMNS, out / "plotdata" / "miss_vs_moon_anomaly.csv")
    low, high = result.max_reduction(), result.max_gain()
    return [
        f"nominal miss {result.nominal_miss_re:g} R_earth",
        f"largest relative error {100 * result.max_abs_error:.3f} %",
        f"max reduction at f = {low.f_deg:g} deg ({100 * low.rel_error:.3f} %)",
        f"max gain at f = {high.f_deg:g} deg ({100 * high.rel_error:.3f} %)",
        f"jumps above 5 %: {len(result.jumps)}",
    ]


def _write_report(manifest: RunManifest, scenario: Scenario, lines: list[str], out: Path):
    header = [f"eco-deflect {manifest.version} {manifest.command}"]
    options = ", ".join(f"{k}={v}" for k, v in asdict(manifest.options).items())
    text = header + constants_text(scenario) + [f"solver options: {options}", ""] + lines
    (out / "run_report.txt").write_text("\n".join(text) + "\n", encoding="utf-8")


def run(manifest: RunManifest) -> int:
    """
    Execute a manifest and write its artifacts.

    Returns:
        0 on success.

    Raises:
        ScenarioError: If the scenario does not validate.
        SolverError: If a single solve ends without a feasible solution.
    """
    scenario = load_scenario(manifest)
    out = Path(manifest.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(manifest.to_dict(), out / "manifest.json")
    logger.info("running %s on %s into %s", manifest.command, scenario.name, out)
    if manifest.command in ("solve", "sweep"):
        lines = _run_transcription(manifest, scenario, out)
    elif manifest.command == "impulsive":
        lines = _run_impulsive(manifest, scenario, out)
    elif manifest.command == "lunar":
        lines = _run_lunar(manifest, scenario, out)
    else:
        raise ValueError(f"unknown command {manifest.command!r}")
    _write_report(manifest, scenario, lines, out)
    return 0
