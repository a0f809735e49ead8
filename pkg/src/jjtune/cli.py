"""Command-line surface: simulate-wafer, fit, plan, tune, tls-scan.

Exit codes: 0 success, 2 input/schema error (including a missing --seed on a
stochastic run), 3 infeasible request, 4 fit non-convergence (a partial
report is still written). All files are written atomically; stochastic
commands are deterministic for a given --seed.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from . import io as jio
from .aging import fit_aging_samples
from .dose import DoseModel, JunctionState, StochasticParams, default_dose_model
from .errors import DomainError, FitError, InfeasibleError, SchemaError
from .fitkit import Dataset, FitResult, ModelSpec, fit_curve
from .physics import qubit_frequency
from .streams import child_rng
from .tls import extract_tls, fit_stark, simulate_map, time_average
from .tuner import TunePolicy, allocate_targets, iterative_tune, recipe_for_shift, required_shift
from .wafer import run_batch

__all__ = ["RunConfig", "main"]


@dataclass(frozen=True)
class RunConfig:
    """Validated global options shared by every subcommand."""

    seed: int | None
    output: str | None
    format: str


def _require_seed(config: RunConfig) -> int:
    if config.seed is None:
        raise SchemaError("--seed is required for stochastic commands")
    return config.seed


def _out_dir(config: RunConfig) -> str:
    directory = config.output or "."
    os.makedirs(directory, exist_ok=True)
    return directory


# ---------------------------------------------------------- simulate-wafer

def _cmd_simulate_wafer(args: argparse.Namespace, config: RunConfig) -> int:
    wafer = jio.wafer_from_doc(jio.load_json(args.wafer))
    recipe = jio.recipe_from_doc(jio.load_json(args.recipe))
    seed = _require_seed(config)
    report = run_batch(wafer, recipe, master_seed=seed)
    directory = _out_dir(config)
    jio.write_json(os.path.join(directory, "report.json"), jio.batch_report_to_doc(report))
    jio.atomic_write_text(os.path.join(directory, "report.csv"), jio.batch_report_csv(report))
    n_passed = sum(1 for row in report.entries if row.qc_status == "passed")
    print(
        f"{wafer.wafer_id}: {len(report.entries)} junctions, {n_passed} annealed, "
        f"estimated wall time {report.estimated_wall_time_s:.0f} s"
    )
    return 0


# ---------------------------------------------------------------------- fit

def _fit_dose(path: str) -> tuple[FitResult, tuple[str, ...]]:
    rows = jio.read_columns_csv(path, ["power_mw", "shift_frac"])
    powers = np.array([row[0] for row in rows])
    shifts = np.array([row[1] for row in rows])
    heating = default_dose_model().heating

    def model(p: np.ndarray, x: np.ndarray) -> np.ndarray:
        temperature = heating.slope * x + heating.ambient
        return p[0] - p[1] * np.exp(-temperature / p[2])

    names = ("plateau_m", "depth_b", "char_temperature_t0_c")
    spec = ModelSpec(
        evaluator=model,
        parameter_names=names,
        bounds=((1e-6, 1.0), (1e-6, 10.0), (1.0, 500.0)),
    )
    top = float(shifts.max())
    fit = fit_curve(spec, Dataset(powers, shifts), [top, 2.0 * top, 30.0])
    return fit, names


def _fit_displacement(path: str) -> tuple[FitResult, tuple[str, ...]]:
    rows = jio.read_columns_csv(path, ["displacement_um", "response_frac"])
    displacement = np.array([row[0] for row in rows])
    response = np.array([row[1] for row in rows])
    beam = default_dose_model().beam

    def absorption(d: np.ndarray) -> np.ndarray:
        on_metal = 0.5 * (
            1.0 + np.array([math.erf(v) for v in np.sqrt(2.0) * (beam.electrode_extent - d) / beam.waist])
        )
        return (1.0 - beam.al_reflectance) * on_metal + (1.0 - beam.si_reflectance) * (1.0 - on_metal)

    def model(p: np.ndarray, d: np.ndarray) -> np.ndarray:
        return p[0] * absorption(d) * (np.exp(-d / p[1]) + p[2])

    names = ("scale", "decay_d0_um", "transfer_offset_b")
    spec = ModelSpec(
        evaluator=model,
        parameter_names=names,
        bounds=((1e-9, 10.0), (0.1, 500.0), (1e-9, 1.0)),
    )
    fit = fit_curve(spec, Dataset(displacement, response), [float(response.max()) / 0.37, 10.0, 0.002])
    return fit, names


def _fit_barrier(path: str) -> tuple[FitResult, tuple[str, ...]]:
    rows = jio.read_columns_csv(path, ["thickness_nm", "area_um2", "resistance_ohm"])
    thickness = np.array([row[0] for row in rows])
    resistance_area = np.array([row[1] * row[2] for row in rows])

    def model(p: np.ndarray, t: np.ndarray) -> np.ndarray:
        return p[0] * np.exp(t / p[1])

    # Log-linear seed keeps the start independent of operator choices.
    slope, intercept = np.polyfit(thickness, np.log(resistance_area), 1)
    names = ("prefactor_ohm_um2", "tau_barrier_nm")
    spec = ModelSpec(
        evaluator=model, parameter_names=names, bounds=((1e-12, np.inf), (1e-3, 100.0))
    )
    fit = fit_curve(
        spec, Dataset(thickness, resistance_area), [float(np.exp(intercept)), 1.0 / float(slope)]
    )
    return fit, names


def _fit_stark_cmd(path: str) -> tuple[FitResult, tuple[str, ...]]:
    rows = jio.read_columns_csv(path, ["amplitude", "shift_mhz"])
    points = [(row[0], row[1] * 1e6) for row in rows]
    fit = fit_stark(points)
    scaled = replace(
        fit,
        params=fit.params / 1e6,
        std_errors=fit.std_errors / 1e6,
        residual_norm=fit.residual_norm / 1e6,
    )
    return scaled, ("conv_a_mhz",)


def _fit_aging_cmd(args: argparse.Namespace) -> tuple[FitResult, tuple[str, ...]]:
    series = jio.read_aging_csv(args.data)
    if args.wafer:
        series = [s for s in series if s.wafer_label == args.wafer]
    if args.cohort:
        series = [s for s in series if s.cohort == args.cohort]
    if not series:
        raise SchemaError("no series left after --wafer/--cohort filters")
    groups = {(s.wafer_label, s.cohort) for s in series}
    if len(groups) > 1:
        listing = ", ".join(f"{w or '?'}:{c}" for w, c in sorted(groups))
        raise SchemaError(
            f"data mixes cohorts ({listing}); select one with --wafer/--cohort"
        )
    days: list[float] = []
    shifts: list[float] = []
    for s in series:
        days.extend(day for day, _ in s.samples)
        shifts.extend(r / s.r0_ohm - 1.0 for _, r in s.samples)
    return fit_aging_samples(days, shifts), ("final_shift_a", "depth_b", "tau_days")


def _cmd_fit(args: argparse.Namespace, config: RunConfig) -> int:
    out_path = config.output or "fit_report.json"
    if args.kind == "tls":
        spectro = jio.read_map_csv(args.data)
        wait = args.wait_us * 1e-6
        extraction = extract_tls(
            spectro.freq_offsets, time_average(spectro), wait, max_defects=args.max_defects
        )
        doc = jio.extraction_to_doc(extraction, wait)
        doc["model"] = "tls"
        jio.write_json(out_path, doc)
        print(doc["outcome"])
        return 0

    if args.kind == "aging":
        fit, names = _fit_aging_cmd(args)
    elif args.kind == "dose":
        fit, names = _fit_dose(args.data)
    elif args.kind == "displacement":
        fit, names = _fit_displacement(args.data)
    elif args.kind == "stark":
        fit, names = _fit_stark_cmd(args.data)
    else:
        fit, names = _fit_barrier(args.data)

    doc = jio.fit_report_doc(
        args.kind, names, fit.params, fit.std_errors, fit.residual_norm, fit.converged,
        fit.iterations,
    )
    jio.write_json(out_path, doc)
    rendered = ", ".join(f"{k}={v:.6g}" for k, v in doc["params"].items())
    print(f"{args.kind}: {rendered} (converged={fit.converged})")
    return 0 if fit.converged else 4


# --------------------------------------------------------------------- plan

def _cmd_plan(args: argparse.Namespace, config: RunConfig) -> int:
    wafer = jio.wafer_from_doc(jio.load_json(args.wafer))
    targets_doc = jio.load_json(args.targets)
    junctions = sorted(wafer.junctions, key=lambda j: j.id)
    freqs = [qubit_frequency(j.resistance) for j in junctions]

    if "targets_ghz" in targets_doc:
        mapping = targets_doc["targets_ghz"]
        if not isinstance(mapping, dict):
            raise SchemaError("targets.targets_ghz: expected an object of id -> GHz")
        missing = [j.id for j in junctions if j.id not in mapping]
        if missing:
            raise SchemaError(f"targets.targets_ghz: missing junctions {missing[:5]}")
        targets = []
        for j in junctions:
            value = mapping[j.id]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise SchemaError(f"targets.targets_ghz.{j.id}: expected a number")
            targets.append(float(value) * 1e9)
    elif "min_spacing_mhz" in targets_doc:
        spacing = targets_doc["min_spacing_mhz"]
        if isinstance(spacing, bool) or not isinstance(spacing, (int, float)) or spacing < 0:
            raise SchemaError("targets.min_spacing_mhz: expected a non-negative number")
        targets = allocate_targets(freqs, float(spacing) * 1e6)
    else:
        raise SchemaError("targets: need either targets_ghz or min_spacing_mhz")

    entries = []
    for junction, f_now, f_target in zip(junctions, freqs, targets):
        shift = required_shift(f_now, f_target)
        shots = recipe_for_shift(shift, exposure=args.exposure_s, max_shots=args.max_shots)
        entries.append(
            {
                "id": junction.id,
                "f_now_ghz": f_now / 1e9,
                "f_target_ghz": f_target / 1e9,
                "required_shift_frac": shift,
                "shots": [jio.recipe_to_doc(recipe) for recipe in shots],
            }
        )
    out_path = config.output or "plan.json"
    jio.write_json(out_path, jio.plan_to_doc(wafer.wafer_id, entries))
    total = sum(len(e["shots"]) for e in entries)
    print(f"{wafer.wafer_id}: planned {len(entries)} junctions, {total} shots")
    return 0


# --------------------------------------------------------------------- tune

def _cmd_tune(args: argparse.Namespace, config: RunConfig) -> int:
    wafer = jio.wafer_from_doc(jio.load_json(args.wafer))
    plan = jio.load_json(args.plan)
    seed = _require_seed(config)
    policy = TunePolicy(
        step_fraction=args.step_fraction,
        tolerance=args.tolerance,
        max_iterations=args.max_iterations,
        measurement_noise_sigma=args.measurement_noise_sigma,
    )
    model = default_dose_model()
    if args.shot_noise_sigma is not None:
        model = replace(
            model,
            stochastic=StochasticParams(
                relative_sigma=args.shot_noise_sigma,
                shift_floor=model.stochastic.shift_floor,
            ),
        )
    by_id = {j.id: j for j in wafer.junctions}
    raw_entries = plan.get("junctions")
    if not isinstance(raw_entries, list):
        raise SchemaError("plan.junctions: missing or not a list")
    traces = []
    for index, entry in enumerate(raw_entries):
        path = f"plan.junctions[{index}]"
        jid = entry.get("id")
        if jid not in by_id:
            raise SchemaError(f"{path}.id: junction {jid!r} is not on the wafer")
        target = entry.get("f_target_ghz")
        if isinstance(target, bool) or not isinstance(target, (int, float)):
            raise SchemaError(f"{path}.f_target_ghz: expected a number")
        record = by_id[jid]
        traces.append(
            iterative_tune(
                JunctionState(resistance=record.resistance),
                float(target) * 1e9,
                policy=policy,
                model=model,
                rng=child_rng(seed, jid),
                junction_id=jid,
            )
        )
    directory = _out_dir(config)
    doc = jio.traces_to_doc(traces)
    jio.write_json(os.path.join(directory, "traces.json"), doc)
    if config.format == "csv":
        jio.atomic_write_text(os.path.join(directory, "traces.csv"), jio.traces_csv(traces))
    summary = doc["summary"]
    print(
        f"tuned {summary['n_junctions']}: {summary['n_converged']} converged, "
        f"{summary['n_overshoot']} overshoot, {summary['n_exhausted']} exhausted "
        f"(mean anneals {summary['mean_anneals']:.2f})"
    )
    return 0


# ----------------------------------------------------------------- tls-scan

def _cmd_tls_scan(args: argparse.Namespace, config: RunConfig) -> int:
    model = jio.noise_model_from_doc(jio.load_json(args.model))
    seed = _require_seed(config)
    if args.f_max_mhz <= args.f_min_mhz:
        raise SchemaError("--f-max-mhz must exceed --f-min-mhz")
    if args.f_step_mhz <= 0:
        raise SchemaError("--f-step-mhz must be positive")
    offsets = np.arange(args.f_min_mhz, args.f_max_mhz + args.f_step_mhz / 2, args.f_step_mhz) * 1e6
    wait = args.wait_us * 1e-6
    spectro = simulate_map(
        model,
        offsets,
        duration=args.duration_h,
        step=args.step_s,
        wait=wait,
        rng=child_rng(seed, "tls-scan"),
        dropout_probability=args.dropout_probability,
    )
    extraction = extract_tls(
        spectro.freq_offsets, time_average(spectro), wait, max_defects=args.max_defects
    )
    directory = _out_dir(config)
    jio.atomic_write_text(os.path.join(directory, "map.csv"), jio.map_csv(spectro))
    jio.write_json(os.path.join(directory, "defects.json"), jio.extraction_to_doc(extraction, wait))
    print(extraction_summary(extraction))
    return 0


def extraction_summary(extraction) -> str:
    if not extraction.persistent:
        return "no persistent defect"
    parts = [
        f"{fit.params[0] / 1e6:+.2f} MHz (g {fit.params[1] / 1e3:.1f} kHz)"
        for fit in extraction.defects
    ]
    return "persistent defect at " + ", ".join(parts)


# --------------------------------------------------------------------- main

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jjtune",
        description="Digital twin and planning tools for laser trimming of transmon junctions.",
    )
    parser.add_argument("--seed", type=int, default=None, help="master seed for stochastic runs")
    parser.add_argument("--output", default=None, help="output file or directory")
    parser.add_argument("--format", choices=["json", "csv"], default="json")
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate-wafer", help="run a batch anneal over a wafer")
    sim.add_argument("wafer", help="wafer layout JSON")
    sim.add_argument("recipe", help="lasing recipe JSON")
    sim.set_defaults(handler=_cmd_simulate_wafer)

    fit = commands.add_parser("fit", help="fit a calibration model to a CSV")
    fit.add_argument("kind", choices=["aging", "dose", "displacement", "stark", "tls", "barrier"])
    fit.add_argument("data", help="input CSV (map CSV for kind=tls)")
    fit.add_argument("--wafer", default=None, help="aging: filter by wafer label")
    fit.add_argument("--cohort", default=None, choices=["annealed", "unannealed"])
    fit.add_argument("--wait-us", type=float, default=40.0, help="tls: measurement wait")
    fit.add_argument("--max-defects", type=int, default=1, help="tls: defects to extract")
    fit.set_defaults(handler=_cmd_fit)

    plan = commands.add_parser("plan", help="compute shifts and shot plans for targets")
    plan.add_argument("wafer", help="wafer layout JSON")
    plan.add_argument("targets", help="targets JSON (targets_ghz or min_spacing_mhz)")
    plan.add_argument("--exposure-s", type=float, default=60.0)
    plan.add_argument("--max-shots", type=int, default=16)
    plan.set_defaults(handler=_cmd_plan)

    tune = commands.add_parser("tune", help="closed-loop tune junctions against a plan")
    tune.add_argument("wafer", help="wafer layout JSON")
    tune.add_argument("plan", help="plan JSON from the plan command")
    tune.add_argument("--step-fraction", type=float, default=0.7)
    tune.add_argument("--tolerance", type=float, default=0.0025)
    tune.add_argument("--max-iterations", type=int, default=8)
    tune.add_argument("--measurement-noise-sigma", type=float, default=0.002)
    tune.add_argument("--shot-noise-sigma", type=float, default=None,
                      help="override the dose model's relative shot noise")
    tune.set_defaults(handler=_cmd_tune)

    scan = commands.add_parser("tls-scan", help="simulate a defect map and extract defects")
    scan.add_argument("model", help="noise model JSON")
    scan.add_argument("--f-min-mhz", type=float, default=-10.0)
    scan.add_argument("--f-max-mhz", type=float, default=10.0)
    scan.add_argument("--f-step-mhz", type=float, default=0.25)
    scan.add_argument("--duration-h", type=float, default=2.0)
    scan.add_argument("--step-s", type=float, default=60.0)
    scan.add_argument("--wait-us", type=float, default=40.0)
    scan.add_argument("--max-defects", type=int, default=1)
    scan.add_argument("--dropout-probability", type=float, default=0.0)
    scan.set_defaults(handler=_cmd_tls_scan)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    config = RunConfig(seed=args.seed, output=args.output, format=args.format)
    try:
        return args.handler(args, config)
    except SchemaError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except FitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
