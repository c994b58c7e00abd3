import json
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotohom import NoiseModel, OpticalConfig, RotationState, SagnacArm, ScanSpec, simulate_scan
from rotohom import cli, fileio, svg
from rotohom.config import ConfigError, RunConfig, config_from_dict, load_config
from rotohom.simulate import CoincidenceTrace

finite = dict(allow_nan=False, allow_infinity=False)


@pytest.fixture(autouse=True)
def one_thread(monkeypatch):
    monkeypatch.setenv("ROTOHOM_THREADS", "1")


def run(*argv):
    return cli.main([str(a) for a in argv])


def write_config(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return path


# -- config ----------------------------------------------------------------

def test_default_config():
    cfg = config_from_dict({})
    assert cfg.optics == OpticalConfig() and cfg.arm == SagnacArm()
    assert len(cfg.scan.stage_positions) == 27


@pytest.mark.parametrize("raw, path", [
    ({"noise": {"rate_scale": -1}}, "noise.rate_scale"),
    ({"noise": {"bogus": 1}}, "noise.bogus"),
    ({"extra": {}}, "extra"),
    ({"optics": {"lambda_p": "355nm"}}, "optics.lambda_p"),
    ({"arm": {"loop_radius": 0}}, "arm.loop_radius"),
    ({"noise": {"rng_seed": 2**64}}, "noise.rng_seed"),
    ({"scan": {"stage_positions": [0, 2e-5, 1e-5]}}, "scan.stage_positions"),
    ({"scan": {"stage_positions": [0, 1e-5], "step": 1e-5}}, "scan.step"),
    ({"sequence": {"rotation_steps": [0, 0.9]}}, "sequence.rotation_steps"),
    ({"sequence": {"direction": "up"}}, "sequence.direction"),
    ({"sequence": {"calibration": {"a": -1}}}, "sequence.calibration.a"),
    ({"landscape": {"delay_s": {"start": 0, "stop": 1}}}, "landscape.delay_s.num"),
    ({"noise": []}, "noise"),
])
def test_config_errors_name_the_field(raw, path):
    with pytest.raises(ConfigError) as err:
        config_from_dict(raw)
    assert err.value.path == path


def test_config_grids_and_sections():
    cfg = config_from_dict({
        "optics": {"sigma_p": 1e12},
        "scan": {"step": 5e-6, "half_width": 50e-6, "feature": 1},
        "sequence": {"rotation_steps": {"start": 0, "stop": 0.7, "num": 6}, "direction": "acw",
                     "calibration": {"a": 0.95, "b": 1.05}},
        "landscape": {"rotation_hz": [0, 0.455], "delay_s": {"start": -1e-12, "stop": 1e-12, "num": 3}},
    })
    assert cfg.optics.sigma_p == 1e12
    assert len(cfg.scan.stage_positions) == 21
    assert cfg.sequence.rotation_steps[-1] == pytest.approx(0.7) and cfg.sequence.direction == "acw"
    assert cfg.landscape.delay_s == (-1e-12, 0.0, 1e-12)


def test_config_round_trip_through_dict():
    cfg = config_from_dict({"noise": {"rng_seed": 5, "direction_asymmetry": 0.1}})
    again = config_from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


def test_load_config_bad_json(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, "{nope"))


# -- file formats ----------------------------------------------------------

def sample_trace(**kw):
    arm = SagnacArm()
    return simulate_scan(OpticalConfig(), arm, RotationState.from_hz(0.3, "acw", set_frequency=0.31),
                         ScanSpec.around_feature(arm), NoiseModel(rng_seed=3), sequence_id="seqX", **kw)


def test_trace_csv_round_trip(tmp_path):
    trace = sample_trace()
    first = fileio.write_trace(tmp_path / "a.csv", trace)
    back = fileio.read_trace(first)
    second = fileio.write_trace(tmp_path / "b.csv", back)
    assert first.read_bytes() == second.read_bytes()
    np.testing.assert_array_equal(back.delay, trace.delay)
    np.testing.assert_array_equal(back.coincidences, trace.coincidences)
    assert back.rotation_hz == trace.rotation_hz and back.direction == "acw" and back.set_hz == 0.31


def test_trace_csv_is_plain_table(tmp_path):
    path = fileio.write_trace(tmp_path / "a.csv", sample_trace())
    lines = path.read_bytes().split(b"\r\n")
    assert lines[0].decode() == ",".join(fileio.TRACE_COLUMNS)
    assert len(lines) == 27 + 2  # header, rows, trailing empty
    delay = lines[1].split(b",")[fileio.TRACE_COLUMNS.index("delay_s")].decode()
    assert "e" in delay and len(delay.split("e")[0].replace("-", "").replace(".", "")) >= 12


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, **finite), min_size=1, max_size=10),
       st.floats(-2, 2, **finite), st.integers(0, 2**64 - 1))
def test_trace_round_trip_property(tmp_path_factory, values, hz, seed):
    n = len(values)
    ints = np.arange(n, dtype=np.int64)
    trace = CoincidenceTrace(stage_position=np.cumsum(np.abs(values)) + np.arange(n), delay=np.asarray(values),
                             coincidences=ints, singles_a=ints, singles_b=ints, time_s=np.asarray(values),
                             rotation_hz=hz, direction="cw", seed=seed, sequence_id="s,\"q\"")
    d = tmp_path_factory.mktemp("rt")
    text = fileio.trace_to_csv(trace)
    (d / "t.csv").write_bytes(text.encode())
    assert fileio.trace_to_csv(fileio.read_trace(d / "t.csv")) == text


@pytest.mark.parametrize("mutate", [
    lambda t: t.replace("delay_s", "delay"),
    lambda t: t.replace("\r\n", ",x\r\n", 2),
    lambda t: t.replace(",acw,", ",sideways,"),
    lambda t: t.rsplit("\r\n", 3)[0].replace("e-", "q-") + "\r\n",
    lambda t: "",
])
def test_malformed_trace_rejected(tmp_path, mutate):
    text = fileio.trace_to_csv(sample_trace())
    path = tmp_path / "bad.csv"
    path.write_bytes(mutate(text).encode())
    with pytest.raises(fileio.TraceFormatError):
        fileio.read_trace(path)


def test_write_atomic_leaves_no_temp_files(tmp_path):
    fileio.write_atomic(tmp_path / "sub" / "x.txt", "hello")
    fileio.write_atomic(tmp_path / "sub" / "x.txt", "again")
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["x.txt"]
    assert (tmp_path / "sub" / "x.txt").read_text() == "again"


@pytest.mark.parametrize("text", [
    svg.heatmap([0, 1, 2], [0, 1], np.arange(6.0).reshape(2, 3), title="a & b"),
    svg.histogram([0.3, 0.35, 0.4], {"cw": [1, 2], "acw": [0, 3], "total": [1, 5]}, markers={"mean": 0.36}),
    svg.xy_plot([dict(x=[0, 1, 2], y=[1, 0, 1], yerr=[0.1, 0.1, 0.1]), dict(x=[0, 2], y=[1, 1], style="line")]),
])
def test_svg_is_well_formed(text):
    root = ET.fromstring(text)
    assert root.tag.endswith("svg")
    assert "href" not in text and "<style" not in text


def test_heatmap_shape_checked():
    with pytest.raises(ValueError):
        svg.heatmap([0, 1], [0, 1], np.zeros((3, 2)))


# -- command line ----------------------------------------------------------

def small_config(tmp_path):
    return write_config(tmp_path, {
        "landscape": {"rotation_hz": {"start": 0, "stop": 0.91, "num": 5},
                      "delay_s": {"start": -2.5e-12, "stop": 2.5e-12, "num": 21}},
    })


def test_landscape_command(tmp_path):
    out = tmp_path / "out"
    assert run("landscape", "--config", small_config(tmp_path), "--out", out) == 0
    data = fileio.read_landscape(out / "landscape.csv")
    assert data["nc"].size == 5 * 21
    ET.parse(out / "landscape.svg")


def test_landscape_flip_between_rows(tmp_path):
    from rotohom import flip_half_period, propagation_times

    half = flip_half_period(SagnacArm(), OpticalConfig())
    dt = propagation_times(SagnacArm(), 0.0).delta_t
    cfg = write_config(tmp_path, {"landscape": {"rotation_hz": [0.0, half], "delay_s": [dt / 2]}})
    out = tmp_path / "flip"
    assert run("landscape", "--config", cfg, "--out", out, "--format", "csv") == 0
    d = fileio.read_landscape(out / "landscape.csv")
    heights = d["nc"] - d["background"]
    assert heights[0] * heights[1] < 0
    assert not (out / "landscape.svg").exists()


def test_scan_command(tmp_path):
    assert run("scan", "--set-hz", 0.2, "--direction", "acw", "--seed", 4, "--out", tmp_path) == 0
    trace = fileio.read_trace(tmp_path / "scan.csv")
    assert trace.direction == "acw" and trace.seed == 4


def test_sequence_command_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("sequence", "--seed", 123, "--out", a, "--format", "csv") == 0
    assert run("sequence", "--seed", 123, "--out", b, "--format", "csv") == 0
    files = sorted(p.name for p in (a / "traces").iterdir())
    assert len(files) == 8
    for name in files:
        assert (a / "traces" / name).read_bytes() == (b / "traces" / name).read_bytes()
    ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    ma.pop("metadata"), mb.pop("metadata")
    assert ma == mb
    assert ma["sequences"][0]["seed"] == 123 and len(ma["sequences"][0]["files"]) == 8


def test_analyze_command(tmp_path):
    data = tmp_path / "data"
    assert run("sequence", "--repeats", 2, "--seed", 1, "--out", data, "--format", "csv") == 0
    (data / "traces" / "junk.csv").write_text("not,a,trace\n1,2,3\n")
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert run("analyze", data / "traces", "--out", out1) == 0
    assert run("analyze", data / "traces", "--out", out2) == 0
    for name in ("fits.csv", "amplitudes.csv", "histogram_stats.csv", "histogram_bins.csv", "histogram.svg",
                 "analysis_report.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    fits = fileio.read_fits(out1 / "fits.csv")
    assert [f["direction"] for f in fits] == ["cw", "acw"]
    report = json.loads((out1 / "analysis_report.json").read_text())
    assert len(report["files_skipped"]) == 1 and report["files_read"] == 16


def test_analyze_no_usable_input(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert run("analyze", empty, "--out", tmp_path / "o") == 4
    (empty / "bad.csv").write_text("garbage")
    assert run("analyze", empty, "--out", tmp_path / "o") == 4


def test_analyze_missing_path(tmp_path):
    assert run("analyze", tmp_path / "nope", "--out", tmp_path / "o") == 3


def test_calibrate_command(tmp_path):
    pts = tmp_path / "pts.csv"
    x = np.linspace(0.1, 0.7, 6)
    pts.write_text(fileio.calibration_points_to_csv(x, 0.9 * x**1.1))
    assert run("calibrate", "--input", pts, "--out", tmp_path / "c") == 0
    text = (tmp_path / "c" / "calibration.csv").read_text().splitlines()
    a, b = map(float, text[1].split(","))
    assert a == pytest.approx(0.9, rel=1e-10) and b == pytest.approx(1.1, rel=1e-10)
    assert run("calibrate", "--out", tmp_path / "c2", "--seed", 3) == 0
    assert (tmp_path / "c2" / "calibration_points.csv").exists()


def test_calibrate_bad_points(tmp_path):
    pts = tmp_path / "pts.csv"
    pts.write_text(fileio.calibration_points_to_csv([0.1, 0.2], [0.1, 0.2]))
    assert run("calibrate", "--input", pts, "--out", tmp_path) == 4


def test_config_error_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, {"noise": {"rate_scale": -1}})
    assert run("landscape", "--config", cfg, "--out", tmp_path) == 2
    assert "noise.rate_scale" in capsys.readouterr().err
    assert run("validate", "--config", write_config(tmp_path, "{broken", "b.json")) == 2


def test_missing_config_is_io_error(tmp_path):
    assert run("landscape", "--config", tmp_path / "missing.json", "--out", tmp_path) == 3


@pytest.mark.parametrize("value", ["0", "many"])
def test_bad_thread_setting(tmp_path, monkeypatch, value):
    monkeypatch.setenv("ROTOHOM_THREADS", value)
    assert run("landscape", "--out", tmp_path) == 2


def test_seed_must_be_u64(capsys):
    with pytest.raises(SystemExit) as err:
        run("scan", "--seed", -1)
    assert err.value.code == 2


@pytest.mark.slow
def test_validate_command(tmp_path, capsys):
    assert run("validate", "--out", tmp_path) == 0
    report = (tmp_path / "validate_report.txt").read_text()
    assert "RESULT: PASS" in report


@pytest.mark.slow
def test_validate_wide_spread_notes_visibility(tmp_path, capsys):
    cfg = write_config(tmp_path, {"optics": {"sigma_p": 0.5 * 1.19e13}})
    assert run("validate", "--config", cfg) == 0
    out = capsys.readouterr().out
    assert "RESULT: PASS" in out and "visibility" in out


def test_validate_failure_exit_code(monkeypatch, capsys):
    from rotohom import validate

    monkeypatch.setattr(cli, "run_validation",
                        lambda optics, arm, threads=None: ([validate.CheckResult("forced", 1.0, 0.0)], []))
    assert run("validate") == 1


@pytest.mark.slow
def test_analyze_default_campaign_median(tmp_path):
    data, out = tmp_path / "data", tmp_path / "out"
    assert run("sequence", "--repeats", 50, "--seed", 900, "--out", data, "--format", "csv") == 0
    assert run("analyze", data / "traces", "--out", out) == 0
    fits = fileio.read_fits(out / "fits.csv")
    assert len(fits) == 50
    assert 0.40 <= np.median([f["half_period_hz"] for f in fits if f["converged"]]) <= 0.51
