import json
import logging
import subprocess
import sys

import numpy as np
import pytest

from skelscan.cli import (
    ParseError,
    RunConfig,
    StageError,
    emit_report,
    format_points_csv,
    main,
    parse_points_csv,
    run_pipeline,
)
from skelscan.geometry import Dataset
from skelscan.synth import SynthSpec, generate
from skelscan.tuning import TuneBounds

TWO_CLUSTERS = Dataset(np.array([[0.0, 0.0]] * 5 + [[10.0, 0.0]] * 2))


# -- parsing ------------------------------------------------------------------

def test_parse_basic():
    data = parse_points_csv("0.5,1.0\n2.0,3.5")
    assert data.points.tolist() == [[0.5, 1.0], [2.0, 3.5]]


def test_parse_comment():
    data = parse_points_csv("# header\n1,2,3")
    assert data.dim == 3 and len(data) == 1


def test_parse_ragged():
    with pytest.raises(ParseError, match="line 2: expected 2 fields, found 1") as err:
        parse_points_csv("1,2\n3")
    assert err.value.line == 2


def test_parse_non_numeric():
    with pytest.raises(ParseError) as err:
        parse_points_csv("1,2\n3,x\n")
    assert (err.value.line, err.value.column) == (2, 2)


@pytest.mark.parametrize("text", ["", "# only a comment\n\n"])
def test_parse_empty(text):
    with pytest.raises(ParseError, match="no data rows"):
        parse_points_csv(text)


def test_parse_rejects_nan():
    with pytest.raises(ParseError):
        parse_points_csv("1,nan")


def test_csv_round_trip():
    data, _ = generate(SynthSpec(kind="plane", dim=4, j_structured=300, noise_sigma=0.3, seed=8))
    back = parse_points_csv(format_points_csv(data.points, "x"))
    assert np.array_equal(back.points, data.points)


# -- config -------------------------------------------------------------------

def test_config_round_trip():
    cfg = RunConfig(r=0.25, nu=7, radius_scale=1.5, gap_factor=None, s=2,
                    chain_mode="rank", tune=TuneBounds(3, 30, 5, 4.0), format="obj")
    again = RunConfig.from_json(cfg.to_json())
    assert again.to_dict() == cfg.to_dict()


@pytest.mark.parametrize("bad", [dict(r=0), dict(nu=-1), dict(s=0), dict(chain_mode="x"),
                                 dict(format="xml"), dict(gap_factor=-1.0)])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        RunConfig(**bad)


def test_config_unknown_key():
    with pytest.raises(ValueError, match="unknown config keys"):
        RunConfig.from_dict({"radius": 1})


# -- pipeline and emit ----------------------------------------------------------

def test_pipeline_two_clusters():
    # the clusters are 10 apart, beyond the greedy hop limit, so join them by rank
    report = run_pipeline(RunConfig(r=1.0, nu=1, chain_mode="rank"), TWO_CLUSTERS)
    assert report.K == 2
    assert report.skeleton.simplices == [(0, 1)]
    assert report.vertex_coverage == 1.0
    assert (report.covered, report.uncovered) == (7, 0)


def test_pipeline_rank_mode_and_triangles():
    data, _ = generate(SynthSpec(kind="line", dim=3, j_structured=600, noise_sigma=0.05, seed=2))
    rep = run_pipeline(RunConfig(r=0.5, nu=5, chain_mode="rank", s=2), data)
    assert rep.skeleton.components == [list(range(rep.K))]
    assert len(rep.skeleton.simplices) == rep.K - 2


def test_pipeline_empty_dataset():
    with pytest.raises(StageError, match="empty dataset") as err:
        run_pipeline(RunConfig(), Dataset.empty(2))
    assert err.value.stage == "scan"


def test_pipeline_greedy_nothing_above_threshold():
    with pytest.raises(StageError) as err:
        run_pipeline(RunConfig(r=1.0, nu=100), TWO_CLUSTERS)
    assert err.value.stage == "skeleton"


def test_pipeline_with_tuning():
    rep = run_pipeline(RunConfig(r=1.0, nu=1000, tune=TuneBounds(k_min=1, k_max=2)), TWO_CLUSTERS)
    assert rep.tuning.in_range and rep.K == 2 and rep.nu == 1
    assert rep.tuning.trace == [(1000, 0), (100, 0), (10, 0), (1, 2)]
    greedy = run_pipeline(RunConfig(r=1.0, nu=1), TWO_CLUSTERS)
    assert greedy.skeleton.components == [[0], [1]]


def test_emit_obj_single_vertex():
    data = Dataset(np.array([[0.0, 0.0, 0.0]] * 3))
    out = emit_report(run_pipeline(RunConfig(r=1.0, nu=1), data), "obj").decode()
    lines = out.splitlines()
    assert sum(line.startswith("v ") for line in lines) == 1
    assert not any(line.startswith("l ") for line in lines)


def test_emit_obj_segments_and_faces():
    data, _ = generate(SynthSpec(kind="line", dim=3, j_structured=600, noise_sigma=0.05, seed=2))
    rep = run_pipeline(RunConfig(r=0.5, nu=5), data)
    lines = emit_report(rep, "obj").decode().splitlines()
    assert sum(x.startswith("l ") for x in lines) == len(rep.skeleton.simplices)
    rep2 = run_pipeline(RunConfig(r=0.5, nu=5, s=2), data)
    faces = [x for x in emit_report(rep2, "obj").decode().splitlines() if x.startswith("f ")]
    assert len(faces) == len(rep2.skeleton.simplices)
    assert all(len(f.split()) == 4 for f in faces)


def test_emit_obj_falls_back_for_tetrahedra(caplog):
    data, _ = generate(SynthSpec(kind="line", dim=3, j_structured=600, noise_sigma=0.05, seed=2))
    rep = run_pipeline(RunConfig(r=0.5, nu=5, s=3), data)
    with caplog.at_level(logging.WARNING, logger="skelscan"):
        out = emit_report(rep, "obj")
    assert json.loads(out)["skeleton"]["dim_s"] == 3
    assert "JSON" in caplog.text


def test_emit_json_deterministic():
    rep = run_pipeline(RunConfig(r=1.0, nu=1), TWO_CLUSTERS)
    assert emit_report(rep, "json") == emit_report(rep, "json")
    assert "timing" not in json.loads(emit_report(rep, "json"))
    assert "timing" in json.loads(emit_report(rep, "json", timing=True))


def test_emit_csv_rows():
    rep = run_pipeline(RunConfig(r=1.0, nu=1), TWO_CLUSTERS)
    lines = emit_report(rep, "csv").decode().splitlines()
    assert len(lines) == rep.skeleton.n_vertices + 1
    assert lines[0] == "vertex,x0,x1,count,component"
    assert lines[1] == "0,0,0,5,0"


def test_report_table_truncation():
    data, _ = generate(SynthSpec(kind="line", dim=4, j_structured=100, j_background=3000, seed=5))
    rep = run_pipeline(RunConfig(r=0.2, nu=0, chain_mode="rank"), data)
    d = json.loads(emit_report(rep))
    assert len(rep.table) > 1000
    assert d["table"]["truncated"] and len(d["table"]["entries"]) == 1000
    assert len(rep.to_dict(full_table=True)["table"]["entries"]) == len(rep.table)


# -- main ---------------------------------------------------------------------

@pytest.fixture
def points_file(tmp_path):
    p = tmp_path / "pts.csv"
    assert main(["generate", "--kind", "line", "--dim", "3", "--j-structured", "400",
                 "--j-background", "40", "--noise-sigma", "0.05", "--seed", "3",
                 "-o", str(p)]) == 0
    return p


def test_generate_writes_truth(points_file):
    truth = points_file.with_name("pts.truth.csv")
    assert truth.exists()
    assert len(parse_points_csv(truth.read_text())) == 1001
    assert len(parse_points_csv(points_file.read_text())) == 440


def test_main_pipeline_json(points_file, tmp_path, capsysbinary):
    assert main(["pipeline", str(points_file), "--r", "0.5", "--nu", "3"]) == 0
    out = capsysbinary.readouterr().out
    assert json.loads(out)["chosen"]["nu"] == 3
    assert main(["pipeline", str(points_file), "--r", "0.5", "--nu", "3"]) == 0
    assert capsysbinary.readouterr().out == out


def test_main_formats(points_file, tmp_path):
    for fmt in ("obj", "csv"):
        out = tmp_path / f"s.{fmt}"
        assert main(["skeleton", str(points_file), "--r", "0.5", "--nu", "3",
                     "--format", fmt, "-o", str(out)]) == 0
        assert out.read_text()


def test_main_scan_and_tune(points_file, capsys):
    assert main(["scan", str(points_file), "--r", "0.5", "--nu", "2"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["K"] == sum(e["count"] > 2 for e in d["entries"])
    assert main(["tune", str(points_file), "--r", "0.5", "--nu0", "1000"]) == 0
    t = json.loads(capsys.readouterr().out)
    assert t["status"] == "in_range" and t["trace"][0] == [1000, 0]
    assert main(["tune", str(points_file), "--r0", "0.05", "--nu", "10",
                 "--k-min", "3", "--k-max", "50"]) == 0
    t = json.loads(capsys.readouterr().out)
    assert t["trace"][0][0] == 0.05


def test_main_baselines(tmp_path, capsys):
    p = tmp_path / "xy.csv"
    p.write_text("0,1\n1,3\n2,5\n")
    assert main(["baseline", "regression", str(p)]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d == {"a1": 2.0, "a2": 1.0}
    assert main(["baseline", "pca", str(p), "--k", "2"]) == 0
    assert len(json.loads(capsys.readouterr().out)["directions"]) == 2


def test_main_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    assert main(["pipeline", str(bad)]) == 2
    assert "[input]" in capsys.readouterr().err
    one = tmp_path / "one.csv"
    one.write_text("1,2\n")
    assert main(["pipeline", str(one), "--nu", "5"]) == 3
    assert "[skeleton]" in capsys.readouterr().err
    vert = tmp_path / "vert.csv"
    vert.write_text("1,2\n1,3\n")
    assert main(["baseline", "regression", str(vert)]) == 3
    assert main(["pipeline", str(tmp_path / "missing.csv")]) == 2


def test_main_config_file(points_file, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(RunConfig(r=0.5, nu=4, s=2).to_json())
    assert main(["pipeline", str(points_file), "--config", str(cfg), "--nu", "6"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["chosen"]["nu"] == 6 and d["skeleton"]["dim_s"] == 2


def test_gap_none_flag(points_file, capsys):
    assert main(["pipeline", str(points_file), "--r", "0.5", "--nu", "1", "--gap-factor", "none"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["config"]["gap_factor"] is None
    assert len(d["skeleton"]["components"]) == 1


def test_closed_pipe_is_quiet(tmp_path):
    src = tmp_path / "p.csv"
    pts = np.random.default_rng(0).uniform(0, 100, (5000, 2))
    src.write_text("\n".join(f"{x},{y}" for x, y in pts) + "\n")
    proc = subprocess.Popen([sys.executable, "-m", "skelscan.cli", "scan", str(src), "--r", "0.5",
                             "--full-table"], stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    proc.stdout.read(10)
    proc.stdout.close()
    err = proc.stderr.read()
    assert proc.wait() == 0
    assert b"Traceback" not in err
