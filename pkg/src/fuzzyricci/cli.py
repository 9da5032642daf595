"""Command-line front end.

Four subcommands over the library: ``simulate`` integrates the metric flow
and writes trajectory artifacts, ``spectrum`` computes the curved-Laplacian
eigendecomposition at a chosen time, ``track`` runs the full
flow-track-verify pipeline for the first variation law, and ``verify``
executes the cross-module invariant suite.

Configuration comes from an optional JSON document (``--config``) with
command-line flags overriding individual keys one-to-one; the resolved
configuration is written next to the outputs as ``config.json`` so a run is
reproducible from its artifacts alone. All outputs are deterministic:
identical configuration produces byte-identical files.

Exit codes: 0 success; 2 invalid input or parameters; 3 numerical failure
(positivity loss or step underflow); 4 acceptance failure in track/verify.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .errors import (
    InsufficientData,
    InvalidInput,
    InvalidParams,
    MetricDegenerate,
    PositivityLost,
    SpectrumOutOfDomain,
    StepUnderflow,
)
from .flow import (
    FlowConfig,
    metric_from_spec,
    run_flow,
    trajectory_csv_rows,
    trajectory_to_json,
)
from .laplace_beltrami import lb_spectrum, spectrum_to_json
from .torus import FuzzyTorus
from .tracking import (
    TrackingConfig,
    curves_csv_rows,
    first_variation_report,
    report_to_json,
    track_spectrum,
)
from .verify import geometry_file_checks, run_suite

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4

RESIDUAL_BUDGET = 1e-4
FORMS_BUDGET = 1e-10

# Keys of the run configuration; flags mirror these one-to-one.
_CONFIG_KEYS = ("n", "m", "initial", "t0", "t1", "rel_tol", "abs_tol", "stride", "seed", "out", "format")

_DEFAULTS = {
    "n": 2,
    "m": 1,
    "initial": "random",
    "t0": 0.0,
    "rel_tol": 1e-10,
    "abs_tol": 1e-12,
    "seed": 0,
    "out": "out",
    "format": "csv,json",
}

# Per-command defaults for the time window and output cadence: simulate
# favors long horizons, track needs a dense grid for the derivative oracle,
# spectrum defaults to the initial time (no integration).
_COMMAND_DEFAULTS = {
    "simulate": {"t1": 50.0, "stride": 0.5},
    "track": {"t1": 0.2, "stride": 1e-3},
    "spectrum": {"t1": None, "stride": 0.5},
}


def _json_bytes(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _write_json(path: Path, doc) -> None:
    path.write_text(_json_bytes(doc))


def _write_csv(path: Path, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(rows)


def resolve_config(args: argparse.Namespace, command: str) -> dict:
    """Merge defaults, the JSON config document, and flag overrides."""
    config = dict(_DEFAULTS)
    config.update({k: v for k, v in _COMMAND_DEFAULTS.get(command, {}).items()})
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInput(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise InvalidInput("config document must be a JSON object")
        unknown = set(doc) - set(_CONFIG_KEYS)
        if unknown:
            raise InvalidInput(f"unknown config keys: {sorted(unknown)}")
        config.update(doc)
    for key in _CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    if command == "spectrum" and config.get("t1") is None:
        config["t1"] = config["t0"]

    config["n"] = int(config["n"])
    config["m"] = int(config["m"])
    config["seed"] = int(config["seed"])
    for key in ("t0", "t1", "rel_tol", "abs_tol", "stride"):
        if config.get(key) is not None:
            config[key] = float(config[key])
    config["format"] = ",".join(sorted(set(str(config["format"]).split(","))))
    return {k: config[k] for k in _CONFIG_KEYS}


def _flow_config(config: dict) -> FlowConfig:
    return FlowConfig(
        t0=config["t0"],
        t1=config["t1"],
        rel_tol=config["rel_tol"],
        abs_tol=config["abs_tol"],
        sample_stride=config["stride"],
    )


def _prepare_run(config: dict):
    """Validate geometry and initial metric before any file is written."""
    torus = FuzzyTorus(config["n"], config["m"])
    initial = config["initial"]
    if isinstance(initial, str) and initial.endswith(".json") and Path(initial).exists():
        initial = json.loads(Path(initial).read_text())
    c0 = metric_from_spec(initial, config["n"], seed_default=config["seed"])
    return torus, c0


def _out_dir(config: dict) -> Path:
    out = Path(config["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args: argparse.Namespace) -> int:
    config = resolve_config(args, "simulate")
    torus, c0 = _prepare_run(config)
    flow_config = _flow_config(config)
    result = run_flow(torus, c0, flow_config)

    formats = set(config["format"].split(","))
    out = _out_dir(config)
    _write_json(out / "config.json", config)
    _write_json(out / "geometry.json", torus.to_json())
    if "csv" in formats:
        _write_csv(out / "trajectory.csv", trajectory_csv_rows(result))
    if "json" in formats:
        _write_json(out / "trajectory.json", trajectory_to_json(result, flow_config))

    trace0 = result.samples[0].trace
    drift = max(abs(s.trace - trace0) for s in result.samples) / abs(trace0)
    dets = [s.det for s in result.samples]
    slack = 1e-12
    nondecreasing = all(
        b >= a - slack * abs(a) for a, b in zip(dets, dets[1:])
    )
    summary = {
        "samples": len(result.samples),
        "accepted_steps": result.accepted_steps,
        "rejected_steps": result.rejected_steps,
        "trace_drift_rel": drift,
        "det_nondecreasing": nondecreasing,
        "min_eig_final": result.final.min_eig,
        "final_dist_to_flat": result.final.dist_to_flat,
    }
    _write_json(out / "summary.json", summary)
    print(
        f"simulate: {len(result.samples)} samples on [{config['t0']}, {config['t1']}], "
        f"trace drift {drift:.3e}, det nondecreasing: {nondecreasing}, "
        f"final dist to flat {result.final.dist_to_flat:.3e}"
    )
    return EXIT_OK


def cmd_spectrum(args: argparse.Namespace) -> int:
    config = resolve_config(args, "spectrum")
    torus, c0 = _prepare_run(config)
    t = config["t1"]
    if t > config["t0"]:
        flow_config = FlowConfig(
            t0=config["t0"],
            t1=t,
            rel_tol=config["rel_tol"],
            abs_tol=config["abs_tol"],
            sample_stride=t - config["t0"],
        )
        c = run_flow(torus, c0, flow_config).final.c
    else:
        c = c0
    data = lb_spectrum(torus, c)

    out = _out_dir(config)
    _write_json(out / "config.json", config)
    _write_json(out / "spectrum.json", spectrum_to_json(data, t=t))
    lo = float(data.eigenvalues[0])
    hi = float(data.eigenvalues[-1])
    print(
        f"spectrum at t={t}: {data.dim} eigenvalues in [{lo:.6g}, {hi:.6g}], "
        f"kernel index {data.kernel_index}"
    )
    return EXIT_OK


def cmd_track(args: argparse.Namespace) -> int:
    config = resolve_config(args, "track")
    torus, c0 = _prepare_run(config)
    result = run_flow(torus, c0, _flow_config(config))
    tracking = TrackingConfig()
    curves = track_spectrum(torus, result, tracking)
    report = first_variation_report(torus, curves, result, tracking)

    formats = set(config["format"].split(","))
    out = _out_dir(config)
    _write_json(out / "config.json", config)
    if "csv" in formats:
        _write_csv(out / "curves.csv", curves_csv_rows(report))
    if "json" in formats:
        _write_json(out / "variation.json", report_to_json(report, RESIDUAL_BUDGET))

    passed = report.passed(RESIDUAL_BUDGET) and report.max_form_discrepancy <= FORMS_BUDGET
    print(
        f"track: {len(curves)} curves x {len(result.samples)} samples, "
        f"max relative residual {report.max_rel_residual:.3e} "
        f"(budget {RESIDUAL_BUDGET:g}), forms agree to {report.max_form_discrepancy:.3e}, "
        f"{report.flagged_samples} flagged -> {'pass' if passed else 'FAIL'}"
    )
    return EXIT_OK if passed else EXIT_ACCEPTANCE


def cmd_verify(args: argparse.Namespace) -> int:
    if args.geometry:
        try:
            doc = json.loads(Path(args.geometry).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidInput(f"cannot read geometry {args.geometry}: {exc}") from exc
        checks = geometry_file_checks(doc)
        failures = sum(1 for c in checks if not c["passed"])
        report = {
            "geometry": args.geometry,
            "total": len(checks),
            "failures": failures,
            "passed": failures == 0,
            "checks": checks,
        }
    else:
        report = run_suite(n_max=args.n_max)

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "verify.json", report)
    for check in report["checks"]:
        if not check["passed"]:
            print(
                f"FAIL {check['check']} [{check['params']}] "
                f"measured={check['measured']} tolerance={check['tolerance']}"
            )
    print(
        f"verify: {report['total'] - report['failures']}/{report['total']} checks passed"
    )
    return EXIT_OK if report["passed"] else EXIT_ACCEPTANCE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fuzzyricci",
        description="Metric flow, curved Laplacian spectra, and eigenvalue-curve "
        "tracking for the finite (fuzzy) torus algebra.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config document; flags override its keys")
        p.add_argument("--n", type=int, help="matrix size (default 2)")
        p.add_argument("--m", type=int, help="twist, coprime to n (default 1)")
        p.add_argument(
            "--initial",
            help="initial metric: matrix JSON file, 'flat', 'diag:v1,v2,...', "
            "or 'random:seed=S,scale=X'",
        )
        p.add_argument("--t0", type=float, help="start time (default 0)")
        p.add_argument("--t1", type=float, help="end time (simulate: 50, track: 0.2)")
        p.add_argument("--rel-tol", dest="rel_tol", type=float, help="integrator relative tolerance")
        p.add_argument("--abs-tol", dest="abs_tol", type=float, help="integrator absolute tolerance")
        p.add_argument(
            "--stride", type=float, help="sample cadence (simulate: 0.5, track: 1e-3)"
        )
        p.add_argument("--seed", type=int, help="seed for 'random' initial metrics")
        p.add_argument("--out", help="output directory (default ./out)")
        p.add_argument("--format", help="comma set of output formats: csv,json")

    p_sim = sub.add_parser("simulate", help="integrate the metric flow and dump the trajectory")
    add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_spec = sub.add_parser(
        "spectrum",
        help="curved-Laplacian spectrum at time t1 (t1 == t0 means the initial metric)",
    )
    add_common(p_spec)
    p_spec.set_defaults(func=cmd_spectrum)

    p_track = sub.add_parser(
        "track", help="track eigenvalue curves along the flow and check the variation law"
    )
    add_common(p_track)
    p_track.set_defaults(func=cmd_track)

    p_verify = sub.add_parser("verify", help="run the cross-module invariant suite")
    p_verify.add_argument("--n-max", dest="n_max", type=int, default=8, help="largest matrix size (2..8)")
    p_verify.add_argument("--geometry", help="check a geometry JSON dump instead of the full suite")
    p_verify.add_argument("--out", help="directory for verify.json (default: stdout only)")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def _error_doc(exc: Exception) -> dict:
    doc = {"error": type(exc).__name__, "message": str(exc)}
    for attr in ("time", "eigenvalue"):
        value = getattr(exc, attr, None)
        if value is not None:
            doc[attr] = value
    return doc


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PositivityLost, StepUnderflow) as exc:
        sys.stderr.write(_json_bytes(_error_doc(exc)))
        return EXIT_NUMERICAL
    except (
        InvalidInput,
        InvalidParams,
        MetricDegenerate,
        SpectrumOutOfDomain,
        InsufficientData,
        FileNotFoundError,
    ) as exc:
        sys.stderr.write(_json_bytes(_error_doc(exc)))
        return EXIT_INVALID


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
