"""Command-line front end: budgets, optimization, emulation, calibration, simulation.

Units on every interface: angles in radians (printouts also show urad/mrad),
distances in meters, powers in watts/dBm, rates in bit/s, temperatures in
degrees C.  Divergence conventions (FWHM vs full 1/e^2) are explicit wherever
an angle crosses the boundary.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  Failures
print a machine-readable JSON record to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import calibration
from .actuator import TravelRangeError, run_script
from .beam_optics import Convention, DivergenceAngle, QuadratureError
from .calibration import CalibrationTable
from .config import ConfigError, RunConfig, load_config
from .link_budget import LinkClosedError, budget_report
from .pointing import GainConvention, gain_improvement_db, optimal_divergence, rule_of_thumb_divergence
from .sim import run_pass, steps_to_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _fail(code: int, message: str, **extra) -> int:
    record = {"error": message}
    record.update(extra)
    print(json.dumps(record), file=sys.stderr)
    return code


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _angle_human(rad: float) -> str:
    if rad < 1e-3:
        return f"{rad * 1e6:.2f} urad"
    return f"{rad * 1e3:.4f} mrad"


def _load(args) -> RunConfig:
    if args.config:
        return load_config(args.config)
    return load_config_defaults()


def load_config_defaults() -> RunConfig:
    """Design-point RunConfig without touching the filesystem."""
    from .actuator import ChromaticModel, DivergenceMap, ThermalModel
    from .config import DESIGN_ANCHOR
    from .link_budget import LinkConfig, calibrate_sensitivity
    from .sim import ControlPolicy, PassGeometry

    link = LinkConfig(
        tx_power_w=2.0,
        wavelength=1.55e-6,
        tx_divergence=DivergenceAngle(90e-6, Convention.FWHM),
        rx_aperture_diameter=0.35,
    )
    link = link.with_sensitivity(calibrate_sensitivity(link, *DESIGN_ANCHOR))
    return RunConfig(
        link=link,
        dmap=DivergenceMap(),
        thermal=ThermalModel(),
        chromatic=ChromaticModel(),
        geometry=PassGeometry(),
        policy=ControlPolicy(margin_floor_db=5.0),
    )


def cmd_budget(args) -> int:
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        return _fail(EXIT_CONFIG, str(exc), command="budget")
    try:
        report = budget_report(cfg.link, args.distance, args.rate, pointing_loss_db=args.pointing_loss_db)
    except (ValueError, LinkClosedError) as exc:
        return _fail(EXIT_NUMERICAL, str(exc), command="budget")
    if args.format == "json":
        _emit(report.to_json(), args.out)
    else:
        _emit(report.table(), args.out)
    return EXIT_OK


def cmd_optimize(args) -> int:
    sigma = args.sigma
    if sigma is None:
        return _fail(EXIT_CONFIG, "provide --sigma (radians)", command="optimize")
    convention = GainConvention(args.convention)
    theta_min, theta_max = args.min_divergence, args.max_divergence
    clamped_note = None
    if sigma <= 0.0:
        theta_rule = theta_min
        theta_opt = theta_min
        clamped_note = "sigma <= 0: no finite optimum, clamped to the hardware minimum"
    else:
        theta_rule = min(max(rule_of_thumb_divergence(sigma), theta_min), theta_max)
        theta_opt = min(max(optimal_divergence(sigma, convention), theta_min), theta_max)
    out = {
        "sigma_rad": sigma,
        "convention": convention.value,
        "rule_of_thumb_rad": theta_rule,
        "exact_optimum_rad": theta_opt,
        "hardware_min_rad": theta_min,
        "hardware_max_rad": theta_max,
    }
    if args.reference_divergence:
        out["gain_improvement_db_vs_reference"] = gain_improvement_db(
            args.reference_divergence, theta_opt, convention
        )
        out["reference_divergence_rad"] = args.reference_divergence
    if clamped_note:
        out["warning"] = clamped_note
    if args.format == "json":
        _emit(json.dumps(out, indent=2), args.out)
    else:
        lines = [
            f"pointing sigma     {_angle_human(sigma)}",
            f"rule of thumb (5s) {_angle_human(theta_rule)}",
            f"exact optimum      {_angle_human(theta_opt)}  [{convention.value} gain]",
        ]
        if "gain_improvement_db_vs_reference" in out:
            lines.append(
                f"gain vs reference  {out['gain_improvement_db_vs_reference']:+.2f} dB "
                f"(reference {_angle_human(args.reference_divergence)})"
            )
        if clamped_note:
            lines.append(f"warning: {clamped_note}")
        _emit("\n".join(lines), args.out)
    return EXIT_OK


def cmd_emulate(args) -> int:
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        return _fail(EXIT_CONFIG, str(exc), command="emulate")
    state = cfg.make_actuator_state()
    try:
        if args.script:
            with open(args.script) as fh:
                lines = fh.readlines()
        else:
            lines = []
        trace = run_script(lines, state)
    except OSError as exc:
        return _fail(EXIT_CONFIG, str(exc), command="emulate")
    except (ValueError, TravelRangeError) as exc:
        return _fail(EXIT_NUMERICAL, str(exc), command="emulate")
    if args.format == "json":
        _emit(json.dumps(trace, indent=2), args.out)
    else:
        cols = list(trace[0].keys())
        rows = [",".join(cols)]
        for snap in trace:
            rows.append(",".join(repr(snap[c]) if not isinstance(snap[c], str) else snap[c] for c in cols))
        _emit("\n".join(rows), args.out)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    if not (args.positions or args.profiler or args.thermal or args.chromatic):
        return _fail(EXIT_CONFIG, "provide at least one input CSV (--positions/--profiler/--thermal/--chromatic)",
                     command="calibrate")
    position_fit = thermal_fit = chromatic_fit = None
    provenance: dict = {}
    try:
        if args.positions:
            pairs = calibration.read_position_csv(args.positions)
            position_fit = calibration.build_position_map(pairs)
            provenance["positions"] = {"source": args.positions, "rows": len(pairs)}
        if args.profiler:
            samples = calibration.read_profiler_csv(args.profiler)
            fit = calibration.fit_divergence(samples)
            provenance["profiler"] = {
                "source": args.profiler,
                "rows": len(samples),
                "divergence_full_1e2_rad": fit.slope,
                "r_squared": fit.r_squared,
            }
        if args.thermal:
            rows = calibration.read_thermal_csv(args.thermal)
            thermal_fit = calibration.build_thermal_model(rows)
            provenance["thermal"] = {"source": args.thermal, "rows": len(rows)}
        if args.chromatic:
            rows = calibration.read_chromatic_csv(args.chromatic)
            chromatic_fit = calibration.build_chromatic_model(rows)
            provenance["chromatic"] = {"source": args.chromatic, "rows": len(rows)}
    except OSError as exc:
        return _fail(EXIT_CONFIG, str(exc), command="calibrate")
    except ValueError as exc:
        # Missing columns and malformed values are config-class errors.
        msg = str(exc)
        code = EXIT_CONFIG if "column" in msg or "No such file" in msg else EXIT_NUMERICAL
        return _fail(code, msg, command="calibrate")
    table = CalibrationTable(
        position=position_fit, thermal=thermal_fit, chromatic=chromatic_fit, provenance=provenance
    )
    _emit(table.to_json(), args.out)
    if position_fit is not None and not position_fit.passed:
        print(
            json.dumps({"warning": "position map linearity below gate",
                        "r_squared_gate": position_fit.r_squared_gate,
                        "diverging_r_squared": position_fit.diverging.r_squared,
                        "converging_r_squared": position_fit.converging.r_squared}),
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        return _fail(EXIT_CONFIG, str(exc), command="simulate")
    seed = args.seed if args.seed is not None else cfg.seed
    try:
        result = run_pass(
            cfg.geometry,
            cfg.policy,
            cfg.link,
            jitter=cfg.sigma_p_rad,
            seed=seed,
            state=cfg.make_actuator_state(),
        )
    except (ValueError, LinkClosedError, QuadratureError) as exc:
        return _fail(EXIT_NUMERICAL, str(exc), command="simulate")
    csv_text = steps_to_csv(result.steps)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(csv_text)
        print(json.dumps(result.summary, indent=2))
    else:
        print(csv_text, end="")
        print(json.dumps(result.summary, indent=2), file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamdiv",
        description=(
            "Adaptive beam-divergence transmitter toolbox. Angles are radians "
            "(FWHM unless a flag says full 1/e^2), distances meters, rates bit/s, "
            "power watts or dBm, losses dB."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("budget", help="link budget breakdown and margin at a distance and rate")
    p.add_argument("--config", help="config file (INI or .json); defaults to the design point")
    p.add_argument("--distance", type=float, required=True, help="slant range in meters")
    p.add_argument("--rate", type=float, required=True, help="data rate in bit/s")
    p.add_argument("--pointing-loss-db", type=float, default=0.0, help="pointing loss magnitude in dB (>= 0)")
    p.add_argument("--format", choices=["json", "table"], default="table")
    p.add_argument("--out", help="write output to this path instead of stdout")
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("optimize", help="optimum divergence for a pointing accuracy sigma")
    p.add_argument("--sigma", type=float, help="pointing accuracy sigma in radians")
    p.add_argument("--sigma-deg", dest="sigma_deg", type=float, help="sigma in degrees (converted)")
    p.add_argument("--convention", choices=[c.value for c in GainConvention], default="quadratic",
                   help="gain scaling used in the gain*loss objective")
    p.add_argument("--min-divergence", type=float, default=90e-6, help="hardware minimum, radians FWHM")
    p.add_argument("--max-divergence", type=float, default=6.14e-3, help="hardware maximum, radians FWHM")
    p.add_argument("--reference-divergence", type=float,
                   help="report gain improvement versus this divergence (radians)")
    p.add_argument("--format", choices=["json", "table"], default="table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("emulate", help="run a command script against the actuator emulator")
    p.add_argument("--script", help="newline-delimited command file (set-divergence/set-temperature/"
                                    "set-wavelength/steer/step/query); omit for the initial state only")
    p.add_argument("--config", help="config file overriding the device models")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", help="trace output path (default stdout)")
    p.set_defaults(func=cmd_emulate)

    p = sub.add_parser("calibrate", help="reduce measurement CSVs into a calibration table (JSON)")
    p.add_argument("--positions", help="CSV with position_m,divergence_rad")
    p.add_argument("--profiler", help="CSV with distance_m,spot_diameter_m[,replicate]")
    p.add_argument("--thermal", help="CSV with theta_set_rad,temp_c,theta_meas_rad")
    p.add_argument("--chromatic", help="CSV with theta_set_rad,wavelength_m,theta_meas_rad")
    p.add_argument("--out", help="calibration table JSON path (default stdout)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("simulate", help="closed-loop LEO pass simulation (per-tick CSV + summary JSON)")
    p.add_argument("--config", help="config file (INI or .json); defaults to the design point")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="per-tick CSV path; summary JSON goes to stdout")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "sigma_deg", None) is not None and args.sigma is None:
        import math

        args.sigma = math.radians(args.sigma_deg)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
