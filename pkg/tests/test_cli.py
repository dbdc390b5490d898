import json

import pytest

from brdlab import cli, montecarlo
from brdlab.errors import InvariantViolation


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_exact_eq2(capsys):
    code, out, _ = run(capsys, "exact", "--formula", "eq2", "--k", "1", "--m", "2", "2")
    assert code == 0
    assert json.loads(out)["value"] == 0.875


def test_exact_csv_and_domain_error(capsys):
    code, out, _ = run(capsys, "exact", "--formula", "bounds", "--m", "4", "4", "4", "--format", "csv")
    assert code == 0 and out.startswith("formula,value\nbounds,")
    code, _, err = run(capsys, "exact", "--formula", "eq2", "--k", "9", "--m", "2", "2")
    assert code == 1 and "error" in err


def test_missing_config_exits_one(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", "--config", str(tmp_path / "missing.json"))
    assert code == 1 and "not found" in err


def test_unknown_flag_exits_one(capsys):
    code, _, _ = run(capsys, "oracle", "--m", "2", "2", "--bogus")
    assert code == 1


def test_trace_output(capsys):
    code, out, _ = run(capsys, "trace", "--n", "3", "--m", "2", "2", "2", "--seed", "7", "--sequence", "clockwork")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# config ")
    assert json.loads(lines[0][len("# config "):])["seed"] == 7
    assert lines[1].split("\t") == ["t", "player", "profile_index", "profile"]
    assert lines[-1].startswith("# outcome kind=")
    body = [l.split("\t") for l in lines[2:-1]]
    assert [int(r[0]) for r in body] == list(range(len(body)))
    assert [r[1] for r in body[1:4]] == ["1", "2", "3"]


def test_trace_from_table_file(capsys, tmp_path, example_table):
    path = tmp_path / "table.txt"
    path.write_text(example_table.to_text())
    code, out, _ = run(capsys, "trace", "--m", "2", "2", "2", "--table", str(path), "--start", "1,1,1")
    assert code == 0
    assert out.splitlines()[-1] == "# outcome kind=cycle k=2 T=1 F=7 hit_time=-"
    code, out, _ = run(capsys, "trace", "--m", "2", "2", "2", "--table", str(path), "--start", "1,1,1",
                       "--sequence", "random", "--seed", "3")
    assert code == 0 and "kind=pne" in out.splitlines()[-1]


def test_trace_payoff_route(capsys):
    code, out, _ = run(capsys, "trace", "--m", "3", "3", "--route", "payoffs", "--seed", "0x10")
    assert code == 0 and '"seed": 16' in out


def test_oracle(capsys):
    code, out, _ = run(capsys, "oracle", "--m", "2", "2")
    d = json.loads(out)
    assert code == 0 and d["pne"] == "7/8" and d["cycles"] == {"1": "7/8", "2": "1/8"}
    code, _, err = run(capsys, "oracle", "--m", "4", "4", "4")
    assert code == 1 and "budget" in err


def test_simulate_files_round_trip_and_determinism(capsys, tmp_path):
    args = ["simulate", "--n", "2", "--m", "3", "--batches", "3", "--games", "50", "--seed", "5"]
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert run(capsys, *args, "--out", str(out1))[0] == 0
    assert run(capsys, *args, "--out", str(out2))[0] == 0
    assert out1.read_bytes() == out2.read_bytes()
    rows = montecarlo.read_csv(out1.read_text())
    assert len(rows) == 3 and rows[0]["m_list"] == (3, 3) and rows[0]["count"] == 50
    summary = montecarlo.read_csv((tmp_path / "a.summary.csv").read_text())
    assert summary[0]["batches"] == 3
    meta = json.loads((tmp_path / "a.meta.json").read_text())
    assert meta["configs"][0]["seed"] == 5 and meta["schema_version"] == montecarlo.SCHEMA_VERSION
    assert b"\r" not in out1.read_bytes()


def test_simulate_config_file(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"configs": [{"m": [2, 2], "batches": 2, "games_per_batch": 30},
                                           {"n": 3, "m": 2, "sequence": "random", "estimand": "pne_exists",
                                            "batches": 2, "games_per_batch": 30}]}))
    code, out, _ = run(capsys, "simulate", "--config", str(cfg), "--format", "json")
    assert code == 0
    d = json.loads(out)
    assert len(d["results"]) == 2 and d["results"][1]["config"]["estimand"] == "pne_exists"


def test_simulate_bad_estimand(capsys):
    code, _, err = run(capsys, "simulate", "--m", "3", "3", "3", "--estimand", "cycle_length=2")
    assert code == 1


def test_couple(capsys):
    code, out, err = run(capsys, "couple", "--m", "2", "2", "2", "--runs", "20", "--seed", "2")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "run,F_X,F_Y,outcome,k,T,sink_hit_time" and len(lines) == 21
    assert json.loads(err)["fx_equals_fy"] is True
    code, out, _ = run(capsys, "couple", "--m", "2", "2", "--sink", "1,2", "--runs", "5", "--format", "json")
    assert code == 0 and "sink_hit_frequency" in json.loads(out)["aggregate"]


def test_invariant_violation_exits_two(capsys, monkeypatch):
    def boom(*a, **k):
        raise InvariantViolation("T=5 is not smaller than F=5")

    monkeypatch.setattr(cli.coupling, "run_coupled", boom)
    code, _, err = run(capsys, "couple", "--m", "2", "2", "--runs", "1")
    assert code == 2 and "invariant" in err
