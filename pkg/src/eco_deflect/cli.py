"""
Command-line front end.

    eco-deflect solve --regime constant --ti 0.9 --out runs/solve
    eco-deflect sweep --regime variable --ti 0.9:0.1:1.9 --out runs/sweep
    eco-deflect impulsive --ti 1.0 --out runs/impulse
    eco-deflect lunar --nominal-miss-re 10 --out runs/lunar
    eco-deflect validate --scenario my_scenario.json

Scenario files are JSON with unit-suffixed keys; see ``eco_deflect.scenario``
for the schema. Errors are written to stdout as a JSON document
``{"error": ..., "message": ..., "details": [...]}``; the exit status is 2
for an invalid scenario and 1 for any other failure.
"""

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from eco_deflect import __version__
from eco_deflect.config import SolverOptions
from eco_deflect.exceptions import EcoDeflectError, ScenarioError
from eco_deflect.optimizer import REGIMES, BoundedProfile
from eco_deflect.reporting import RunManifest, run
from eco_deflect.scenario import load_shipped, to_dict, validate_scenario

logger = logging.getLogger(__name__)

EXIT_FAILURE = 1
EXIT_INVALID_SCENARIO = 2


def parse_start_times(text: str) -> tuple[float, ...]:
    """
    Parse ``--ti``: a single value, or an inclusive range ``a:step:b``.

    Raises:
        argparse.ArgumentTypeError: If the text is not a number or a valid range.
    """
    parts = text.split(":")
    try:
        values = [float(p) for p in parts]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"invalid start time {text!r}") from err
    if len(values) == 1:
        return (values[0],)
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected a or a:step:b, got {text!r}")
    start, step, stop = values
    if step <= 0.0 or stop < start:
        raise argparse.ArgumentTypeError(f"empty or reversed range {text!r}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    # Rounded so 0.9:0.02:1.9 gives 1.34, not 1.3400000000000003
    return tuple(round(start + k * step, 12) for k in range(count))


def _switch(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError(f"expected on or off, got {text!r}")
    return text == "on"


def _profile(text: str) -> str:
    try:
        BoundedProfile.parse(text)
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err)) from err
    return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eco-deflect",
        description="Laser-ablation and impulsive deflection of Earth-crossing objects.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", default=None, help="Scenario JSON (default: shipped).")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v INFO, -vv DEBUG.")
    common.add_argument("--quiet", action="store_true", help="Only warnings and errors.")

    running = argparse.ArgumentParser(add_help=False, parents=[common])
    running.add_argument("--out", type=Path, default=Path("eco_deflect_out"))
    running.add_argument("--ti", type=parse_start_times, default=(0.9,),
                         help="Start time in ECO periods, or a range a:step:b.")
    running.add_argument("--seed", type=int, default=0, help="Restart jitter seed.")
    running.add_argument("--workers", type=int, default=None,
                         help="Parallel workers (default: ECO_DEFLECT_WORKERS or 1).")
    running.add_argument("--miss-re", type=float, default=None,
                         help="Override the scenario miss distance (Earth radii).")
    running.add_argument("--mass-loss", type=_switch, default=None, help="on or off.")

    solving = argparse.ArgumentParser(add_help=False, parents=[running])
    solving.add_argument("--regime", choices=REGIMES, default="constant")
    solving.add_argument("--profile", type=_profile, default=None,
                         help="Bounded regime: const:C or ramp:START:END.")
    solving.add_argument("--nodes", type=int, default=None, help="Mesh intervals N.")
    solving.add_argument("--restarts", type=int, default=None, help="Initial guesses.")
    solving.add_argument("--gradient", choices=("sensitivity", "central"), default=None)

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[solving], help="Optimal control at one start time.")
    sub.add_parser("sweep", parents=[solving], help="Optimal control over a start-time grid.")
    impulsive = sub.add_parser("impulsive", parents=[running], help="Minimum impulse.")
    impulsive.add_argument("--lambda-step", type=float, default=1.0, help="Angle grid (deg).")
    impulsive.add_argument("--horizon", type=float, default=200.0,
                           help="Next-encounter search horizon (ECO periods).")
    lunar = sub.add_parser("lunar", parents=[running], help="Moon-anomaly sweep.")
    lunar.add_argument("--nominal-miss-re", type=float, default=10.0,
                       help="Two-body perigee of the entry state (Earth radii).")
    lunar.add_argument("--anomaly-step", type=float, default=1.0, help="Anomaly grid (deg).")
    sub.add_parser("validate", parents=[common], help="Check a scenario file.")
    return parser


def configure_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.WARNING
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def manifest_from_args(args: argparse.Namespace) -> RunManifest:
    options = SolverOptions.from_mapping(
        {
            "nodes": getattr(args, "nodes", None),
            "restarts": getattr(args, "restarts", None),
            "gradient": getattr(args, "gradient", None),
            "workers": args.workers,
            "seed": args.seed,
        }
    )
    return RunManifest(
        command=args.command,
        out_dir=args.out,
        scenario_path=args.scenario,
        regime=getattr(args, "regime", "constant"),
        profile=getattr(args, "profile", None),
        start_times=args.ti,
        options=options,
        miss_re=args.miss_re,
        mass_loss=args.mass_loss,
        nominal_miss_re=getattr(args, "nominal_miss_re", 10.0),
        anomaly_step_deg=getattr(args, "anomaly_step", 1.0),
        lambda_step_deg=getattr(args, "lambda_step", 1.0),
        horizon_tp=getattr(args, "horizon", 200.0),
    )


def error_document(err: Exception) -> dict:
    details = list(err.errors) if isinstance(err, ScenarioError) else []
    return {"error": type(err).__name__, "message": str(err), "details": details}


def _validate(args: argparse.Namespace) -> int:
    scenario = load_shipped() if args.scenario is None else validate_scenario(args.scenario)
    summary = {
        "valid": True,
        "name": scenario.name,
        "period_day": scenario.units.days(scenario.period),
        "mass_note": scenario.mass_note(),
        "scenario": to_dict(scenario),
    }
    print(json.dumps(summary, indent=2))
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        if args.command == "validate":
            return _validate(args)
        return run(manifest_from_args(args))
    except ScenarioError as err:
        print(json.dumps(error_document(err), indent=2))
        return EXIT_INVALID_SCENARIO
    except (EcoDeflectError, ValueError) as err:
        logger.error("%s failed: %s", args.command, err)
        print(json.dumps(error_document(err), indent=2))
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
