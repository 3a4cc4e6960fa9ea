import csv
import json
from pathlib import Path

import pytest
import yaml

from aggsched.cli import EXIT_CONFIG, EXIT_SIMULATION, main
from aggsched.experiment import (
    SWEEP_COLUMNS,
    ConfigError,
    ExperimentConfig,
    SimulationError,
    emit_report,
    fmt_cost,
    load_config,
    parse_axis,
    run_experiment,
    run_sweep,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _small(**over):
    d = {
        "seed": 3,
        "tuple_width": 4,
        "planners": ["grasp", "grasp_exact", "repart", "preagg_repart", "loom", "oracle"],
        "workload": {"kind": "range_overlap", "node_count": 5, "tuples_per_node": 300, "jaccard": 0.5},
        "topology": {"link_bw": 10.0},
    }
    d.update(over)
    return d


def _write(tmp_path, d, name="c.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(d))
    return p


def test_fmt_cost():
    assert fmt_cost(6) == "6.0"
    assert fmt_cost(0.0433896123) == "0.0433896"
    assert fmt_cost(1234567.0) == "1234570.0"


def test_toy_config_costs():
    rep = run_experiment(load_config(CONFIGS / "toy.yaml"))
    got = {r.planner: r.realized_cost for r in rep.results}
    assert got == {"grasp": 6.0, "grasp_exact": 6.0, "repart": 9.0, "preagg_repart": 9.0, "oracle": 6.0}


def test_small_run_all_planners():
    rep = run_experiment(ExperimentConfig.from_dict(_small()))
    by = rep.by_planner()
    assert set(by) == {"grasp", "grasp_exact", "repart", "preagg_repart", "loom", "oracle"}
    assert by["oracle"].realized_cost <= min(r.realized_cost for r in rep.results) + 1e-12
    for r in rep.results:
        assert r.phases == len(r.phase_costs)
        assert sum(r.dest_tuples_per_node) == r.dest_tuples


def test_loom_fanin_suffix():
    rep = run_experiment(ExperimentConfig.from_dict(_small(planners=["loom:2", "loom:4"])))
    assert [r.planner for r in rep.results] == ["loom2", "loom4"]


def test_planned_differs_from_realized_under_noise():
    d = _small(planners=["preagg_repart"], noise={"kind": "underestimate", "percent": 50})
    r = run_experiment(ExperimentConfig.from_dict(d)).results[0]
    assert r.planned_cost == pytest.approx(2 * r.realized_cost)


@pytest.mark.parametrize(
    "patch,field",
    [
        ({"planners": ["warp"]}, "planners[0]"),
        ({"planners": []}, "planners"),
        ({"topology": {"link_bw": -1}}, "topology.link_bw"),
        ({"topology": {"link_bw": 1, "intra_factor": 0.5}}, "topology.intra_factor"),
        ({"noise": {"kind": "underestimate", "percent": 100}}, "noise"),
        ({"workload": {"kind": "nope"}}, "workload"),
        ({"tuple_width": 0}, "tuple_width"),
        ({"output": {"format": "xml"}}, "output.format"),
        ({"loom": {"fanin": 1}}, "loom.fanin"),
        ({"seed": "x"}, "seed"),
    ],
)
def test_config_errors_name_the_field(patch, field):
    with pytest.raises(ConfigError) as e:
        ExperimentConfig.from_dict(_small(**patch))
    assert e.value.path == field


def test_oracle_needs_small_all_to_one():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(_small(workload={"kind": "range_overlap", "node_count": 9, "tuples_per_node": 10}))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(
            _small(planners=["loom"], workload={"kind": "imbalance", "node_count": 8, "tuples_per_node": 10})
        )


def test_seed_precedence(monkeypatch):
    d = _small()
    d.pop("seed")
    monkeypatch.setenv("AGGSCHED_SEED", "41")
    assert ExperimentConfig.from_dict(d).seed == 41
    assert ExperimentConfig.from_dict(_small()).seed == 3
    assert ExperimentConfig.from_dict(_small(), seed=9).seed == 9
    monkeypatch.setenv("AGGSCHED_SEED", "abc")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(d)


def test_emit_report_files(tmp_path):
    rep = run_experiment(load_config(CONFIGS / "toy.yaml"))
    paths = emit_report(rep, tmp_path, "csv")
    names = sorted(p.name for p in paths)
    assert "summary.csv" in names and "report.json" in names and "timeline_grasp.csv" in names
    rows = list(csv.DictReader((tmp_path / "summary.csv").open()))
    assert list(rows[0]) == ["planner", "planned_cost", "realized_cost", "phases", "dest_tuples"]
    assert rows[0]["realized_cost"] == "6.0"
    tl = list(csv.DictReader((tmp_path / "timeline_grasp.csv").open()))
    assert {(r["link_id"], r["direction"], r["start"], r["end"]) for r in tl} >= {
        ("0", "down", "0.0", "3.0"),
        ("2", "down", "0.0", "3.0"),
        ("0", "down", "3.0", "6.0"),
    }
    js = json.loads((tmp_path / "report.json").read_text())
    assert js["planners"][0]["plan"] == [[[1, 0, 0], [3, 2, 0]], [[2, 0, 0]]]


def test_json_only(tmp_path):
    rep = run_experiment(load_config(CONFIGS / "toy.yaml"))
    assert [p.name for p in emit_report(rep, tmp_path, "json")] == ["report.json"]


def test_reports_are_deterministic(tmp_path):
    for sub in ("a", "b"):
        emit_report(run_experiment(ExperimentConfig.from_dict(_small())), tmp_path / sub)
    for f in (tmp_path / "a").glob("*.csv"):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_parse_axis():
    assert parse_axis("workload.jaccard=0,0.5,1") == ("workload.jaccard", [0, 0.5, 1])
    with pytest.raises(ConfigError):
        parse_axis("workload.jaccard")
    with pytest.raises(ConfigError):
        parse_axis("a=1,,2")


def test_sweep_rows_and_speedup():
    rows, reps = run_sweep(_small(planners=["grasp_exact", "preagg_repart"]), "workload.jaccard", [0, 1])
    assert len(rows) == 4 and len(reps) == 2
    assert all(len(r) == len(SWEEP_COLUMNS) for r in rows)
    base = [r for r in rows if r[2] == "preagg_repart"]
    assert all(r[-1] == "1.0" for r in base)


def test_cli_run(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["run", str(CONFIGS / "toy.yaml"), "--out", str(out), "--planners", "grasp,repart"]) == 0
    text = (out / "summary.csv").read_text()
    assert text.splitlines()[1:] == ["grasp,6.0,6.0,2,6", "repart,9.0,9.0,3,9"]


def test_cli_oracle_flag_and_json(tmp_path):
    out = tmp_path / "o"
    assert main(["run", str(CONFIGS / "toy.yaml"), "--out", str(out), "--planners", "repart", "--oracle", "--format", "json"]) == 0
    js = json.loads((out / "report.json").read_text())
    assert [p["planner"] for p in js["planners"]] == ["repart", "oracle"]


def test_cli_sweep(tmp_path):
    cfg = _write(tmp_path, _small(planners=["grasp", "preagg_repart"]))
    out = tmp_path / "s"
    assert main(["sweep", str(cfg), "--axis", "workload.jaccard=0,1", "--out", str(out)]) == 0
    rows = list(csv.DictReader((out / "sweep.csv").open()))
    assert [r["value"] for r in rows] == ["0", "0", "1", "1"]
    assert tuple(rows[0]) == SWEEP_COLUMNS


def test_cli_config_error_exit(tmp_path, capsys):
    cfg = _write(tmp_path, _small(planners=["warp"]))
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "planners[0]" in capsys.readouterr().err
    bad = tmp_path / "bad.yaml"
    bad.write_text("planners: [grasp\n")
    assert main(["run", str(bad)]) == EXIT_CONFIG
    assert main(["run", str(tmp_path / "missing.yaml")]) == EXIT_CONFIG


def test_cli_missing_key_file(tmp_path):
    d = _small(planners=["grasp"], workload={"kind": "file", "node_count": 2, "paths": ["nope.txt"]})
    assert main(["run", str(_write(tmp_path, d)), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_cli_simulation_error_exit(tmp_path, monkeypatch, capsys):
    import aggsched.experiment as ex
    from aggsched.model import AggregationPlan, Transfer

    monkeypatch.setattr(ex, "plan_repartition", lambda s: AggregationPlan([(Transfer(0, 0),)]))
    cfg = _write(tmp_path, _small(planners=["repart"]))
    assert main(["run", str(cfg), "--out", str(tmp_path)]) == EXIT_SIMULATION
    assert "invalid plan" in capsys.readouterr().err


def test_simulation_error_type():
    assert issubclass(SimulationError, RuntimeError)
