"""Unit tests for the command-line interface and run reports."""

import json

import pytest

from monarch_surrogate.cli import main
from monarch_surrogate.errors import ContractError
from monarch_surrogate.report import (
    new_report,
    read_report,
    report_to_rows,
    validate_report,
    write_report,
    write_report_csv,
)


def test_report_schema_roundtrip(tmp_path):
    rep = new_report({"seed": 1})
    rep["checks"] = [
        {"name": "x", "max_abs_diff": 0.0, "threshold": 1e-8,
         "passed": True, "seeds_run": 2}
    ]
    path = tmp_path / "rep.json"
    write_report(path, rep)
    assert read_report(path) == rep


def test_report_validation_errors():
    with pytest.raises(ContractError):
        validate_report([])
    rep = new_report({})
    del rep["scaling"]
    with pytest.raises(ContractError):
        validate_report(rep)
    rep = new_report({})
    rep["schema_version"] = 99
    with pytest.raises(ContractError):
        validate_report(rep)
    rep = new_report({})
    rep["checks"] = [{"name": "x"}]
    with pytest.raises(ContractError):
        validate_report(rep)


def test_report_flattening():
    rows = dict(report_to_rows({"a": {"b": 1}, "c": [2, 3]}))
    assert rows == {"a.b": 1, "c[0]": 2, "c[1]": 3}


def test_report_csv_output(tmp_path):
    rep = new_report({"seed": 0})
    path = tmp_path / "rep.csv"
    write_report_csv(path, rep)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "key,value"
    assert any(line.startswith("schema_version,1") for line in lines)


def test_cli_verify_select_writes_report(tmp_path, capsys):
    out = tmp_path / "verify.json"
    code = main(["verify", "--quick", "--select", "parameter_law",
                 "--out", str(out)])
    assert code == 0
    captured = capsys.readouterr().out
    assert "PASS  parameter_law" in captured
    rep = read_report(out)
    assert rep["checks"][0]["name"] == "parameter_law"


def test_cli_bench_params_and_flops(tmp_path):
    out = tmp_path / "bench.json"
    assert main(["bench", "params", "--out", str(out)]) == 0
    rep = read_report(out)
    assert 0.0 < rep["params"]["ratio"] < 1.0
    assert main(["bench", "flops", "--out", str(out)]) == 0
    rep = read_report(out)
    assert rep["flops"]["meter"]["match"] is True


def test_cli_train_and_report_show(tmp_path, capsys):
    out = tmp_path / "train.json"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(
        {"data": {"samples": 80, "period": 8.0, "l_in": 8, "l_out": 4},
         "train": {"d_model": 8, "heads": 2, "layers": 1, "d_ff": 16}}
    ))
    code = main(["train", "sine", "--epochs", "1",
                 "--config", str(cfg), "--out", str(out)])
    assert code == 0
    assert read_report(out)["training"]["epochs_run"] == 1
    capsys.readouterr()
    assert main(["report", "show", str(out)]) == 0
    assert '"schema_version": 1' in capsys.readouterr().out
    assert main(["report", "show", str(out), "--format", "csv"]) == 0


def test_cli_seed_precedence(monkeypatch, tmp_path):
    out = tmp_path / "r.json"
    monkeypatch.setenv("MSB_SEED", "5")
    main(["verify", "--quick", "--select", "parameter_law", "--out", str(out)])
    assert read_report(out)["config"]["seed"] == 5
    main(["verify", "--quick", "--select", "parameter_law",
          "--seed", "9", "--out", str(out)])
    assert read_report(out)["config"]["seed"] == 9


def test_cli_bad_inputs_exit_2(monkeypatch, tmp_path):
    assert main(["report", "show", str(tmp_path / "missing.json")]) == 2
    bad_cfg = tmp_path / "bad.json"
    bad_cfg.write_text(json.dumps({"model": {"width": 3}}))
    assert main(["bench", "params", "--config", str(bad_cfg)]) == 2
    monkeypatch.setenv("MSB_SEED", "not-a-number")
    assert main(["verify", "--quick", "--select", "parameter_law"]) == 2
