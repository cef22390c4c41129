import json
import os

import pytest

from conftest import CONFIG_DIR

from condensate import cli


def _run(tmp_path, *args):
    status = cli.run(list(args) + ["--out", str(tmp_path)])
    dirs = [d for d in os.listdir(tmp_path) if d.startswith(args[0])]
    return status, os.path.join(tmp_path, dirs[0]) if dirs else None


def test_tables_command(tmp_path, capsys):
    status, out = _run(tmp_path, "paper-tables")
    assert status == 0
    text = capsys.readouterr().out
    assert "5.9194" in text and "14.7985" in text and "HOLDS" in text
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert manifest["status"] == 0 and len(manifest["config_sha256"]) == 64
    assert os.path.exists(os.path.join(out, "constants.csv"))
    assert os.path.exists(os.path.join(out, "config.txt"))


def test_check_command(tmp_path, capsys):
    status, out = _run(tmp_path, "check", "--config", os.path.join(CONFIG_DIR, "square_2202.cfg"), "--grid", "128")
    assert status == 0
    assert "conditions HOLD" in capsys.readouterr().out
    rep = json.load(open(os.path.join(out, "report.json")))
    assert rep["D0"] < 0 and rep["D0_methods_rel_diff"] < 1e-3


def test_unbalanced_config_reports_error(tmp_path, capsys):
    status, out = _run(tmp_path, "check", "--config", os.path.join(CONFIG_DIR, "unbalanced.cfg"))
    assert status == 1
    manifest = json.load(open(os.path.join(out, "manifest.json")))
    assert manifest["error"]["type"] == "BalanceViolated"


def test_missing_config_is_usage_error(tmp_path):
    assert cli.run(["solve", "--out", str(tmp_path)]) == 2
    assert cli.run(["check", "--config", os.path.join(CONFIG_DIR, "square_2202.cfg"),
                    "--grid", "100", "--out", str(tmp_path)]) == 2


def test_unknown_command_exits():
    with pytest.raises(SystemExit):
        cli.run(["bogus"])
