"""End-to-end tests of the command line: every artifact of a config-driven
run, plus the error paths that should turn into exit codes instead of
tracebacks."""

import filecmp
import json
import os

import pytest

from tracteq import __version__
from tracteq.cli import main

HEADER_PREFIX = f"# tracteq v{__version__} config="


def read_lines(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


@pytest.fixture(scope="module")
def scenario_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("scenario")
    rc = main([
        "synth", "--out", str(out),
        "--rows", "6", "--cols", "6",
        "--od-pairs", "25", "--max-count", "8",
        "--seed", "3", "--highway-row", "3",
    ])
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def run_dir(scenario_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    rc = main(["run", "--config", str(scenario_dir / "config.json"), "--out", str(out)])
    assert rc == 0
    return out


def test_synth_writes_inputs_and_config(scenario_dir):
    for name in ("tracts.geojson", "attributes.csv", "nodes.csv",
                 "edges.csv", "od.csv", "highways.geojson", "config.json"):
        assert (scenario_dir / name).exists(), name
    with open(scenario_dir / "config.json", encoding="utf-8") as fh:
        raw = json.load(fh)
    assert [m["name"] for m in raw["models"]] == ["global", "local"]
    assert raw["columns"]["y"]["role"] == "response"


def test_run_produces_all_artifacts(run_dir):
    expected = [
        "ols_global.csv", "ols_global.json",
        "gwr_local_local.csv", "gwr_local.geojson",
        "gwr_local_summary.txt", "gwr_local.json",
        "traversal.csv",
        "equity.csv", "equity.geojson",
        "equity_summary_white.txt", "equity_summary_non_white.txt",
        "equity_white.svg", "equity_non_white.svg",
        "report.txt",
    ]
    for name in expected:
        assert (run_dir / name).exists(), name
    assert not (run_dir / "FAILED").exists()


def test_artifact_headers_carry_version_config_seed(run_dir):
    for name in ("ols_global.csv", "gwr_local_local.csv", "traversal.csv",
                 "equity.csv", "gwr_local_summary.txt",
                 "equity_summary_white.txt", "report.txt"):
        first = read_lines(run_dir / name)[0]
        assert first.startswith(HEADER_PREFIX), name
        assert "seed=3" in first, name


def test_run_twice_byte_identical(scenario_dir, run_dir, tmp_path_factory):
    again = tmp_path_factory.mktemp("run_again")
    rc = main(["run", "--config", str(scenario_dir / "config.json"), "--out", str(again)])
    assert rc == 0
    names = sorted(os.listdir(run_dir))
    assert names == sorted(os.listdir(again))
    for name in names:
        assert filecmp.cmp(run_dir / name, again / name, shallow=False), name


def test_ols_csv_shape(run_dir):
    lines = read_lines(run_dir / "ols_global.csv")
    assert lines[1] == "term,estimate,robust_se,t"
    rows = [ln.split(",") for ln in lines[2:]]
    assert [r[0] for r in rows] == ["intercept", "x1", "n", "r_squared"]
    assert rows[-2][1] == "36"
    # numeric cells round-trip exactly because they are written with repr
    est = float(rows[0][1])
    with open(run_dir / "ols_global.json", encoding="utf-8") as fh:
        blob = json.load(fh)
    assert est == blob["coefficients"][0]
    assert blob["n"] == 36 and blob["k"] == 1


def test_gwr_artifacts(run_dir):
    lines = read_lines(run_dir / "gwr_local_local.csv")
    assert lines[1] == ("tract_id,coef:intercept,coef:x1,t:intercept,t:x1,"
                        "local_r2,bandwidth_m")
    assert len(lines) == 2 + 36

    with open(run_dir / "gwr_local.json", encoding="utf-8") as fh:
        blob = json.load(fh)
    assert blob["k_range"] == [10, 36]
    assert blob["n_used"] + blob["n_failed"] == 36
    assert 10 <= blob["neighbors_k"] <= 36

    with open(run_dir / "gwr_local.geojson", encoding="utf-8") as fh:
        gj = json.load(fh)
    assert len(gj["features"]) == 36
    props = gj["features"][0]["properties"]
    assert {"coef:intercept", "coef:x1", "local_r2"} <= set(props)


def test_report_collects_every_section(run_dir):
    text = "\n".join(read_lines(run_dir / "report.txt"))
    assert "global" in text and "local" in text
    assert "white" in text and "non_white" in text
    assert "n " in text or "n=" in text or "  n" in text


def test_ols_subcommand_and_model_filter(scenario_dir, tmp_path, capsys):
    rc = main(["ols", "--config", str(scenario_dir / "config.json"),
               "--out", str(tmp_path)])
    assert rc == 0
    assert "wrote OLS results for: global" in capsys.readouterr().out
    assert (tmp_path / "ols_global.csv").exists()

    rc = main(["ols", "--config", str(scenario_dir / "config.json"),
               "--out", str(tmp_path), "--model", "nope"])
    assert rc == 2


def test_gwr_subcommand_model_filter(scenario_dir, tmp_path):
    rc = main(["gwr", "--config", str(scenario_dir / "config.json"),
               "--out", str(tmp_path), "--model", "global"])
    assert rc == 2  # "global" is an OLS model, nothing matches


def test_ingest_summary(scenario_dir, tmp_path, capsys):
    rc = main(["ingest", "--config", str(scenario_dir / "config.json"),
               "--out", str(tmp_path)])
    assert rc == 0
    assert "ingested 36 tracts" in capsys.readouterr().out
    with open(tmp_path / "ingest.json", encoding="utf-8") as fh:
        summary = json.load(fh)
    assert summary["n_tracts"] == 36
    assert summary["highway_labels"] == ["H1"]
    assert len(summary["meta"]["config"]) == 12


def test_simulate_writes_traversal_and_stats(scenario_dir, tmp_path):
    rc = main(["simulate", "--config", str(scenario_dir / "config.json"),
               "--out", str(tmp_path)])
    assert rc == 0
    assert read_lines(tmp_path / "traversal.csv")[0].startswith(HEADER_PREFIX)
    with open(tmp_path / "simulate.json", encoding="utf-8") as fh:
        stats = json.load(fh)
    assert stats["n_pairs"] > 0
    assert stats["n_unreachable"] == 0  # lattice is fully connected
    assert stats["total_km"] > 0.0


def test_equity_requires_traversal(scenario_dir, tmp_path):
    rc = main(["equity", "--config", str(scenario_dir / "config.json"),
               "--out", str(tmp_path)])
    assert rc == 2


def test_equity_single_group(scenario_dir, tmp_path, capsys):
    rc = main(["simulate", "--config", str(scenario_dir / "config.json"),
               "--out", str(tmp_path)])
    assert rc == 0
    capsys.readouterr()
    rc = main(["equity", "--config", str(scenario_dir / "config.json"),
               "--out", str(tmp_path), "--group", "white"])
    assert rc == 0
    assert "wrote equity outputs for group(s): white" in capsys.readouterr().out
    assert (tmp_path / "equity_summary_white.txt").exists()
    assert not (tmp_path / "equity_summary_non_white.txt").exists()
    assert (tmp_path / "equity_white.svg").exists()
    summary = "\n".join(read_lines(tmp_path / "equity_summary_white.txt"))
    assert "highway" in summary and "corridor H1" in summary


def test_report_requires_artifacts(scenario_dir, tmp_path):
    rc = main(["report", "--config", str(scenario_dir / "config.json"),
               "--out", str(tmp_path)])
    assert rc == 2


def test_route_by_node_ids(tmp_path, capsys):
    nodes = tmp_path / "nodes.csv"
    nodes.write_text("id,x,y\nA,0.0,0.0\nB,1000.0,0.0\nC,3000.0,0.0\n")
    edges = tmp_path / "edges.csv"
    edges.write_text("u,v,length_m,speed_ms,class,oneway\n"
                     "A,B,1000.0,10.0,street,0\n")
    rc = main(["route", "--nodes", str(nodes), "--edges", str(edges),
               "--origin", "A", "--dest", "B"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "A -> B" in out
    assert "time_s=100.0" in out and "length_m=1000.0" in out

    rc = main(["route", "--nodes", str(nodes), "--edges", str(edges),
               "--origin", "A", "--dest", "C"])
    assert rc == 1
    assert "no route from A to C" in capsys.readouterr().out


def test_route_by_home_work_with_tract_breakdown(scenario_dir, capsys):
    rc = main([
        "route",
        "--nodes", str(scenario_dir / "nodes.csv"),
        "--edges", str(scenario_dir / "edges.csv"),
        "--home", "T000000", "--work", "T000005",
        "--tracts", str(scenario_dir / "tracts.geojson"),
        "--attributes", str(scenario_dir / "attributes.csv"),
    ])
    assert rc == 0
    out = capsys.readouterr().out.splitlines()
    assert "->" in out[0]
    assert out[1].startswith("time_s=")
    tract_rows = [ln for ln in out[2:] if ln.startswith("T")]
    assert tract_rows, "expected per-tract meters"
    for ln in tract_rows:
        tid, meters = ln.split(",")
        assert float(meters) > 0.0


def test_route_home_without_layers_errors(scenario_dir):
    rc = main(["route", "--nodes", str(scenario_dir / "nodes.csv"),
               "--edges", str(scenario_dir / "edges.csv"),
               "--home", "T000000", "--work", "T000005"])
    assert rc == 2


def test_run_failure_leaves_marker(tmp_path):
    scen = tmp_path / "scen"
    rc = main(["synth", "--out", str(scen), "--rows", "4", "--cols", "4",
               "--od-pairs", "5", "--seed", "1"])
    assert rc == 0
    # every OD row names tracts that do not exist, so the simulate stage
    # has nothing left after filtering and must fail the run
    (scen / "od.csv").write_text("home,work,count\nZ9,Z8,4\n")
    out = tmp_path / "out"
    rc = main(["run", "--config", str(scen / "config.json"), "--out", str(out)])
    assert rc == 1
    marker = (out / "FAILED").read_text()
    assert marker.startswith("simulate:")


def test_run_without_network_inputs_skips_simulation(tmp_path):
    scen = tmp_path / "scen"
    rc = main(["synth", "--out", str(scen), "--rows", "4", "--cols", "4",
               "--od-pairs", "5", "--seed", "1"])
    assert rc == 0
    cfg_path = scen / "config.json"
    with open(cfg_path, encoding="utf-8") as fh:
        raw = json.load(fh)
    for key in ("nodes", "edges", "od"):
        del raw["inputs"][key]
    cfg_path.write_text(json.dumps(raw, sort_keys=True, indent=2) + "\n")

    out = tmp_path / "out"
    rc = main(["run", "--config", str(cfg_path), "--out", str(out)])
    assert rc == 0
    assert (out / "report.txt").exists()
    assert not (out / "traversal.csv").exists()
    assert not (out / "equity.csv").exists()


def test_bad_config_json_exits_2(tmp_path):
    bad = tmp_path / "config.json"
    bad.write_text("{not json")
    assert main(["ingest", "--config", str(bad)]) == 2
