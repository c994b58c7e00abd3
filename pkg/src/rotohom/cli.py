"""Command-line interface.

Subcommands ``landscape``, ``scan``, ``sequence``, ``analyze``, ``calibrate``
and ``validate`` share ``--config``, ``--seed``, ``--out`` and ``--format``.
``ROTOHOM_THREADS`` caps the worker threads used inside a command.

Exit codes: 0 ok, 1 validation failure, 2 configuration error, 3 I/O error,
4 no usable input.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import os
import sys
import warnings
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, fileio, svg
from .analysis import MIN_FIT_POINTS, aggregate_histogram, analyze_sequence, fit_power_law
from .config import ConfigError, RunConfig, load_config
from .models import SymmetricModelInput, nc_symmetric, prefactor
from .physics import RotationState, hz_to_rad_per_s, propagation_times
from .simulate import MAX_SET_HZ, apply_motor_calibration, simulate_campaign, simulate_scan
from .validate import format_report, run_validation

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_IO, EXIT_NO_INPUT = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def thread_count() -> int:
    raw = os.environ.get("ROTOHOM_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise CliError(EXIT_CONFIG, f"ROTOHOM_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise CliError(EXIT_CONFIG, f"ROTOHOM_THREADS must be a positive integer, got {raw!r}")
    return n


def _u64(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _wants(args, kind):
    return args.format in (kind, "both")


def _rel(path, root):
    return Path(path).relative_to(root).as_posix()


# --- landscape ------------------------------------------------------------

def compute_landscape(cfg: RunConfig, threads: int = 1):
    """``(nc, background)`` on the config grid; ``nc`` has shape (rotations, delays)."""
    taus = np.asarray(cfg.landscape.delay_s)

    def row(hz):
        out = nc_symmetric(SymmetricModelInput(taus, propagation_times(cfg.arm, hz_to_rad_per_s(hz)), cfg.optics))
        return out.n_c, float(out.background)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        rows = list(pool.map(row, cfg.landscape.rotation_hz))
    return np.array([r[0] for r in rows]), np.array([r[1] for r in rows])


def cmd_landscape(args, cfg, out: Path, threads):
    nc, bg = compute_landscape(cfg, threads)
    grid = cfg.landscape
    written = []
    if _wants(args, "csv"):
        written.append(fileio.write_atomic(out / "landscape.csv",
                                           fileio.landscape_to_csv(grid.rotation_hz, grid.delay_s, nc, bg)))
    if _wants(args, "svg"):
        text = svg.heatmap(np.asarray(grid.delay_s) * 1e12, grid.rotation_hz, nc / prefactor(cfg.optics),
                           title="Coincidence landscape", xlabel="HOM delay (ps)", ylabel="rotation (Hz)",
                           zlabel="N_c (a.u.)")
        written.append(fileio.write_atomic(out / "landscape.svg", text))
    return written


# --- scan and sequence ----------------------------------------------------

def _trace_svg(traces, title):
    series = [dict(x=np.asarray(t.delay) * 1e12, y=np.asarray(t.coincidences),
                   label=f"{t.set_hz:.3f} Hz {t.direction}") for t in traces]
    return svg.xy_plot(series, title=title, xlabel="HOM delay (ps)", ylabel="coincidences per step")


def cmd_scan(args, cfg, out: Path, threads):
    actual = apply_motor_calibration(args.set_hz, cfg.sequence.calibration)
    rotation = RotationState.from_hz(actual, args.direction, set_frequency=args.set_hz)
    trace = simulate_scan(cfg.optics, cfg.arm, rotation, cfg.scan, cfg.noise, sequence_id="scan",
                          direction=args.direction)
    written = []
    if _wants(args, "csv"):
        written.append(fileio.write_trace(out / "scan.csv", trace))
    if _wants(args, "svg"):
        written.append(fileio.write_atomic(out / "scan.svg", _trace_svg([trace], "Delay scan")))
    return written


def cmd_sequence(args, cfg, out: Path, threads):
    if args.repeats < 1:
        raise CliError(EXIT_CONFIG, "--repeats must be >= 1")
    campaign = simulate_campaign(args.repeats, cfg.sequence, cfg.optics, cfg.arm, cfg.scan, cfg.noise,
                                 alternate=not args.no_alternate)
    written, entries = [], []
    for traces in campaign:
        seq_id = traces[0].sequence_id
        files = []
        for t in traces:
            path = out / "traces" / f"{seq_id}_step{t.step_index:02d}.csv"
            if _wants(args, "csv"):
                written.append(fileio.write_trace(path, t))
                files.append(_rel(path, out))
        if _wants(args, "svg"):
            written.append(fileio.write_atomic(out / "plots" / f"{seq_id}.svg", _trace_svg(traces, seq_id)))
        entries.append({
            "sequence_id": seq_id,
            "direction": traces[0].direction,
            "seed": int(traces[0].seed),
            "set_hz": [t.set_hz for t in traces],
            "rotation_hz": [t.rotation_hz for t in traces],
            "files": files,
        })
    manifest = {
        "command": "sequence",
        "config": cfg.to_dict(),
        "sequences": entries,
        "metadata": {"created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
                     "version": __version__},
    }
    written.append(fileio.write_json(out / "manifest.json", manifest))
    return written


# --- analyze --------------------------------------------------------------

def _collect_inputs(paths):
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files += sorted(q for q in p.rglob("*.csv") if q.is_file())
        elif p.exists():
            files.append(p)
        else:
            raise CliError(EXIT_IO, f"no such file or directory: {p}")
    return files


def analyze_traces(traces, threads=1, bin_width=0.05):
    """Group traces into sequences, fit each and aggregate.

    Returns ``(results, skipped, stats)`` where ``results`` is a list of
    ``(sequence_id, points, fit)`` in sequence-id order and ``skipped`` maps
    sequence ids to reasons.
    """
    groups = defaultdict(list)
    for t in traces:
        groups[t.sequence_id].append(t)
    ids = sorted(groups)
    skipped = {}

    def fit_one(seq_id):
        seq = sorted(groups[seq_id], key=lambda t: t.step_index)
        if len(seq) < MIN_FIT_POINTS:
            return seq_id, None, f"{len(seq)} traces; need at least {MIN_FIT_POINTS}"
        try:
            points, fit = analyze_sequence(seq)
        except ValueError as exc:
            return seq_id, None, str(exc)
        return seq_id, (points, fit), ""

    with ThreadPoolExecutor(max_workers=threads) as pool:
        outcomes = list(pool.map(fit_one, ids))
    results = []
    for seq_id, res, reason in outcomes:
        if res is None:
            skipped[seq_id] = reason
        else:
            results.append((seq_id, *res))
    stats = None
    if results:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            stats = aggregate_histogram([fit for _, _, fit in results], bin_width=bin_width)
    return results, skipped, stats


def cmd_analyze(args, cfg, out: Path, threads):
    files = _collect_inputs(args.inputs)
    traces, bad = [], {}
    for f in files:
        try:
            traces.append(fileio.read_trace(f))
        except (fileio.TraceFormatError, UnicodeDecodeError) as exc:
            bad[f.as_posix()] = str(exc)
    for f, reason in bad.items():
        print(f"warning: skipped {reason}", file=sys.stderr)
    if not traces:
        raise CliError(EXIT_NO_INPUT, f"no usable trace files among {len(files)} input file(s)")

    results, skipped, stats = analyze_traces(traces, threads, args.bin_width)
    for seq_id, reason in skipped.items():
        print(f"warning: sequence {seq_id} not fitted: {reason}", file=sys.stderr)
    if not results:
        raise CliError(EXIT_NO_INPUT, "no sequence could be fitted")

    fits = [fit for _, _, fit in results]
    written = []
    if _wants(args, "csv"):
        written.append(fileio.write_atomic(out / "fits.csv", fileio.fits_to_csv(fits)))
        written.append(fileio.write_atomic(out / "amplitudes.csv",
                                           fileio.amplitudes_to_csv((s, p) for s, p, _ in results)))
        if stats is not None and stats.groups:
            written.append(fileio.write_atomic(out / "histogram_stats.csv", fileio.histogram_stats_to_csv(stats)))
            written.append(fileio.write_atomic(out / "histogram_bins.csv", fileio.histogram_bins_to_csv(stats)))
    if _wants(args, "svg") and stats is not None and "total" in stats.groups:
        markers = {}
        for name in stats.groups:
            markers[f"{name} mean"] = stats.groups[name].mean
            markers[f"{name} median"] = stats.groups[name].median
        text = svg.histogram(stats.bin_edges, stats.counts, markers=markers, title="Dip-to-peak half-period",
                             xlabel="half-period (Hz)")
        written.append(fileio.write_atomic(out / "histogram.svg", text))
    report = {
        "files_read": len(traces),
        "files_skipped": bad,
        "sequences_fitted": len(results),
        "sequences_skipped": skipped,
        "fits_not_converged": [f.sequence_id for f in fits if not f.converged],
        "warnings": len(bad) + len(skipped),
    }
    written.append(fileio.write_json(out / "analysis_report.json", report))
    if report["warnings"]:
        print(f"analyze: {report['warnings']} warning(s)", file=sys.stderr)
    return written


# --- calibrate ------------------------------------------------------------

def synthetic_calibration_points(cfg: RunConfig, n=8, rel_noise=0.01):
    """Noisy measurements of the configured motor law at ``n`` set speeds."""
    top = max(cfg.sequence.rotation_steps) or MAX_SET_HZ
    set_hz = np.linspace(top / n, top, n)
    rng = np.random.default_rng(np.random.SeedSequence(int(cfg.noise.rng_seed), spawn_key=(2**32 - 1,)))
    actual = apply_motor_calibration(set_hz, cfg.sequence.calibration) * (1.0 + rel_noise * rng.standard_normal(n))
    return set_hz, actual


def cmd_calibrate(args, cfg, out: Path, threads):
    written = []
    if args.input:
        set_hz, actual = fileio.read_calibration_points(args.input)
    else:
        set_hz, actual = synthetic_calibration_points(cfg)
        if _wants(args, "csv"):
            written.append(fileio.write_atomic(out / "calibration_points.csv",
                                               fileio.calibration_points_to_csv(set_hz, actual)))
    try:
        cal = fit_power_law(set_hz, actual)
    except ValueError as exc:
        raise CliError(EXIT_NO_INPUT, f"calibration fit failed: {exc}") from None
    print(f"actual_hz = {cal.a:.6g} * set_hz ** {cal.b:.6g}")
    if _wants(args, "csv"):
        written.append(fileio.write_atomic(out / "calibration.csv", fileio.calibration_to_csv(cal)))
    if _wants(args, "svg"):
        grid = np.linspace(min(set_hz), max(set_hz), 100)
        text = svg.xy_plot([dict(x=set_hz, y=actual, label="measured"),
                            dict(x=grid, y=apply_motor_calibration(grid, cal), style="line", label="power law")],
                           title="Motor calibration", xlabel="set frequency (Hz)", ylabel="measured frequency (Hz)")
        written.append(fileio.write_atomic(out / "calibration.svg", text))
    return written


# --- validate -------------------------------------------------------------

def cmd_validate(args, cfg, out: Path, threads):
    results, notes = run_validation(cfg.optics, cfg.arm, threads=threads)
    report = format_report(results, notes)
    print(report, end="")
    written = []
    if args.out:
        written.append(fileio.write_atomic(out / "validate_report.txt", report))
    if not all(r.passed for r in results):
        raise CliError(EXIT_VALIDATION, "validation failed")
    return written


# --- entry point ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (defaults are used if omitted)")
    common.add_argument("--seed", type=_u64, help="override noise.rng_seed (unsigned 64-bit)")
    common.add_argument("--out", help="output directory (default: current directory)")
    common.add_argument("--format", choices=("csv", "svg", "both"), default="both")

    parser = argparse.ArgumentParser(prog="rotohom", description="Rotating-frame two-photon interference toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("landscape", parents=[common], help="coincidences over rotation and delay")

    p = sub.add_parser("scan", parents=[common], help="one simulated delay scan")
    p.add_argument("--set-hz", type=float, default=0.0, help="motor set frequency (Hz)")
    p.add_argument("--direction", choices=("cw", "acw"), default="cw")

    p = sub.add_parser("sequence", parents=[common], help="simulated rotation sequences")
    p.add_argument("--repeats", type=int, default=1, help="number of sequences (seed increases by one each)")
    p.add_argument("--no-alternate", action="store_true", help="keep the configured direction for every repeat")

    p = sub.add_parser("analyze", parents=[common], help="fit trace files and summarise half-periods")
    p.add_argument("inputs", nargs="+", help="trace CSV files or directories")
    p.add_argument("--bin-width", type=float, default=0.05, help="histogram bin width (Hz)")

    p = sub.add_parser("calibrate", parents=[common], help="power-law motor calibration")
    p.add_argument("--input", help="CSV with columns set_hz, actual_hz (synthetic points if omitted)")

    sub.add_parser("validate", parents=[common], help="closed forms against numerical quadrature")
    return parser


COMMANDS = {
    "landscape": cmd_landscape,
    "scan": cmd_scan,
    "sequence": cmd_sequence,
    "analyze": cmd_analyze,
    "calibrate": cmd_calibrate,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        threads = thread_count()
        cfg = _config(args)
        if args.command == "analyze" and not args.bin_width > 0:
            raise CliError(EXIT_CONFIG, "--bin-width must be positive")
        out = Path(args.out) if args.out else Path.cwd()
        written = COMMANDS[args.command](args, cfg, out, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"invalid argument: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
