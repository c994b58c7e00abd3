"""CSV and JSON file formats, written atomically.

All tables are RFC 4180 CSV with a header row and CRLF line ends. Floats
are written as ``%.16e`` (17 significant digits), which round-trips every
double exactly, so reading a file and writing it back reproduces it byte for
byte. Per-trace metadata is repeated on every row so a trace file is a plain
table with no side channel.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

from .analysis import FeatureAmplitude, HistogramStats, SequenceFit
from .simulate import CoincidenceTrace, MotorCalibration


class TraceFormatError(ValueError):
    """A CSV file does not follow the expected schema."""


def fmt_float(x) -> str:
    return f"{float(x):.16e}"


def write_atomic(path, data, *, encoding="utf-8"):
    """Write ``data`` (str or bytes) to ``path`` through a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        mode = "wb" if isinstance(data, bytes) else "w"
        kwargs = {} if isinstance(data, bytes) else {"encoding": encoding, "newline": ""}
        with os.fdopen(fd, mode, **kwargs) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _read_table(path, header: Sequence[str]) -> List[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise TraceFormatError(f"{path}: empty file") from None
        if list(got) != list(header):
            raise TraceFormatError(f"{path}: unexpected header {got!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise TraceFormatError(f"{path}: line {lineno} has {len(row)} fields, expected {len(header)}")
            rows.append(dict(zip(header, row)))
    return rows


def _parse(kind, value, path, column):
    try:
        return kind(value)
    except ValueError:
        raise TraceFormatError(f"{path}: bad {column} value {value!r}") from None


# --- coincidence traces ---------------------------------------------------

TRACE_COLUMNS = (
    "sequence_id", "step_index", "direction", "set_hz", "rotation_hz", "seed", "acquisition_time_s",
    "final_drift_s", "stage_position_m", "delay_s", "coincidences", "singles_a", "singles_b", "time_s",
)


def trace_to_csv(trace: CoincidenceTrace) -> str:
    meta = [trace.sequence_id, str(int(trace.step_index)), trace.direction, fmt_float(trace.set_hz),
            fmt_float(trace.rotation_hz), str(int(trace.seed)), fmt_float(trace.acquisition_time),
            fmt_float(trace.final_drift)]
    rows = (
        meta + [fmt_float(x), fmt_float(d), str(int(c)), str(int(a)), str(int(b)), fmt_float(t)]
        for x, d, c, a, b, t in zip(trace.stage_position, trace.delay, trace.coincidences,
                                    trace.singles_a, trace.singles_b, trace.time_s)
    )
    return _table(TRACE_COLUMNS, rows)


def write_trace(path, trace: CoincidenceTrace):
    return write_atomic(path, trace_to_csv(trace))


def read_trace(path) -> CoincidenceTrace:
    rows = _read_table(path, TRACE_COLUMNS)
    if not rows:
        raise TraceFormatError(f"{path}: no data rows")
    meta_cols = TRACE_COLUMNS[:8]
    first = rows[0]
    for r in rows[1:]:
        for c in meta_cols:
            if r[c] != first[c]:
                raise TraceFormatError(f"{path}: column {c} is not constant")
    if first["direction"] not in ("cw", "acw"):
        raise TraceFormatError(f"{path}: bad direction {first['direction']!r}")

    def col(name, kind):
        return np.array([_parse(kind, r[name], path, name) for r in rows],
                        dtype=np.int64 if kind is int else float)

    try:
        return CoincidenceTrace(
            stage_position=col("stage_position_m", float),
            delay=col("delay_s", float),
            coincidences=col("coincidences", int),
            singles_a=col("singles_a", int),
            singles_b=col("singles_b", int),
            time_s=col("time_s", float),
            rotation_hz=_parse(float, first["rotation_hz"], path, "rotation_hz"),
            direction=first["direction"],
            set_hz=_parse(float, first["set_hz"], path, "set_hz"),
            seed=_parse(int, first["seed"], path, "seed"),
            sequence_id=first["sequence_id"],
            step_index=_parse(int, first["step_index"], path, "step_index"),
            acquisition_time=_parse(float, first["acquisition_time_s"], path, "acquisition_time_s"),
            final_drift=_parse(float, first["final_drift_s"], path, "final_drift_s"),
        )
    except ValueError as exc:
        if isinstance(exc, TraceFormatError):
            raise
        raise TraceFormatError(f"{path}: {exc}") from None


# --- landscape ------------------------------------------------------------

LANDSCAPE_COLUMNS = ("rotation_hz", "delay_s", "nc", "background")


def landscape_to_csv(rotation_hz, delay_s, nc, background) -> str:
    """Rows ordered rotation-major; ``nc`` has shape (rotations, delays) and
    ``background`` one value per rotation."""
    nc = np.asarray(nc)
    rows = ((fmt_float(w), fmt_float(d), fmt_float(nc[i, j]), fmt_float(background[i]))
            for i, w in enumerate(rotation_hz) for j, d in enumerate(delay_s))
    return _table(LANDSCAPE_COLUMNS, rows)


def read_landscape(path):
    rows = _read_table(path, LANDSCAPE_COLUMNS)
    return {c: np.array([_parse(float, r[c], path, c) for r in rows]) for c in LANDSCAPE_COLUMNS}


# --- analysis products ----------------------------------------------------

FIT_COLUMNS = (
    "sequence_id", "direction", "n_points", "converged", "amplitude", "period_hz", "phase_rad", "offset",
    "half_period_hz", "amplitude_err", "period_err", "phase_err", "offset_err", "cost", "initial_slope",
)


def fits_to_csv(fits: Sequence[SequenceFit]) -> str:
    rows = []
    for f in fits:
        err = f.uncertainties
        rows.append([f.sequence_id, f.direction, str(f.n_points), "true" if f.converged else "false",
                     *map(fmt_float, (f.amplitude, f.period, f.phase, f.offset, f.half_period, *err,
                                      f.cost, f.initial_slope))])
    return _table(FIT_COLUMNS, rows)


def read_fits(path) -> List[dict]:
    out = []
    for r in _read_table(path, FIT_COLUMNS):
        row = dict(r)
        for c in FIT_COLUMNS[4:]:
            row[c] = _parse(float, r[c], path, c)
        row["n_points"] = _parse(int, r["n_points"], path, "n_points")
        row["converged"] = r["converged"] == "true"
        out.append(row)
    return out


AMPLITUDE_COLUMNS = ("sequence_id", "direction", "set_hz", "rotation_hz", "amplitude", "uncertainty",
                     "background_counts", "centre_delay_s")


def amplitudes_to_csv(points_by_sequence) -> str:
    """``points_by_sequence`` is an iterable of ``(sequence_id, [FeatureAmplitude, ...])``."""
    rows = []
    for seq_id, points in points_by_sequence:
        for p in points:
            rows.append([seq_id, p.direction, *map(fmt_float, (p.set_hz, p.rotation, p.amplitude, p.uncertainty,
                                                                p.background, p.centre_delay))])
    return _table(AMPLITUDE_COLUMNS, rows)


def read_amplitudes(path) -> List[FeatureAmplitude]:
    out = []
    for r in _read_table(path, AMPLITUDE_COLUMNS):
        v = {c: _parse(float, r[c], path, c) for c in AMPLITUDE_COLUMNS[2:]}
        out.append(FeatureAmplitude(rotation=v["rotation_hz"], amplitude=v["amplitude"],
                                    uncertainty=v["uncertainty"], background=v["background_counts"],
                                    centre_delay=v["centre_delay_s"], direction=r["direction"],
                                    set_hz=v["set_hz"]))
    return out


HISTOGRAM_STATS_COLUMNS = ("group", "n", "mean_hz", "median_hz")
HISTOGRAM_BIN_COLUMNS = ("bin_low_hz", "bin_high_hz", "cw", "acw", "total")


def histogram_stats_to_csv(stats: HistogramStats) -> str:
    rows = [[name, str(g.n), fmt_float(g.mean), fmt_float(g.median)] for name, g in stats.groups.items()]
    return _table(HISTOGRAM_STATS_COLUMNS, rows)


def histogram_bins_to_csv(stats: HistogramStats) -> str:
    edges = stats.bin_edges
    zeros = np.zeros(len(edges) - 1, dtype=int)
    cols = [stats.counts.get(name, zeros) for name in ("cw", "acw", "total")]
    rows = [[fmt_float(edges[i]), fmt_float(edges[i + 1]), *(str(int(c[i])) for c in cols)]
            for i in range(len(edges) - 1)]
    return _table(HISTOGRAM_BIN_COLUMNS, rows)


CALIBRATION_INPUT_COLUMNS = ("set_hz", "actual_hz")
CALIBRATION_COLUMNS = ("a", "b")


def read_calibration_points(path):
    rows = _read_table(path, CALIBRATION_INPUT_COLUMNS)
    return tuple(np.array([_parse(float, r[c], path, c) for r in rows]) for c in CALIBRATION_INPUT_COLUMNS)


def calibration_points_to_csv(set_hz, actual_hz) -> str:
    return _table(CALIBRATION_INPUT_COLUMNS, ([fmt_float(s), fmt_float(a)] for s, a in zip(set_hz, actual_hz)))


def calibration_to_csv(cal: MotorCalibration) -> str:
    return _table(CALIBRATION_COLUMNS, [[fmt_float(cal.a), fmt_float(cal.b)]])


def write_json(path, obj):
    return write_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


__all__ = [
    "TraceFormatError", "fmt_float", "write_atomic", "TRACE_COLUMNS", "trace_to_csv", "write_trace", "read_trace",
    "LANDSCAPE_COLUMNS", "landscape_to_csv", "read_landscape", "FIT_COLUMNS", "fits_to_csv", "read_fits",
    "AMPLITUDE_COLUMNS", "amplitudes_to_csv", "read_amplitudes", "histogram_stats_to_csv",
    "histogram_bins_to_csv", "read_calibration_points", "calibration_points_to_csv", "calibration_to_csv",
    "write_json",
]
