import csv
import io
import json
import subprocess
import sys

import pytest

from seifert_wrt import __version__
from seifert_wrt.cli import COMMANDS, RunConfig, main, run


def invoke(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_radial_poincare(capsys):
    code, out, _ = invoke(capsys, "radial", "--loop", "2/1,3/1,5/-4", "--K", "5", "--N", "1")
    assert code == 0
    report = json.loads(out)
    row = report["rows"][0]
    assert row["pass"] is True
    assert {"tau", "limit"} <= set(report["result"])
    assert "residual" in row


def test_apoly_prints_factored_form(capsys):
    code, out, _ = invoke(capsys, "apoly", "--loop", "2/1,3/1,5/-4")
    assert code == 0
    assert "(l - 1) * (l - m^(-30)) * (l + m^(-30))" in out


def test_level_one_is_a_usage_error(capsys):
    code, out, err = invoke(capsys, "tau", "--loop", "2/1,3/1,5/-4", "--K", "1")
    assert code == 2
    assert "K must be ≥ 2" in err
    assert json.loads(out)["status"] == "usage-error"


def test_malformed_loop(capsys):
    code, _, err = invoke(capsys, "constants", "--loop", "2/1,3/1,5/1")
    assert code == 2 and "homology" in err


def test_unknown_command():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_report_embeds_config_and_version(capsys):
    code, out, _ = invoke(capsys, "tau", "--K", "5", "--N", "2", "--precision-bits", "192")
    report = json.loads(out)
    assert code == 0
    assert report["version"] == __version__
    assert report["config"]["precision_bits"] == 192
    assert report["config"]["K"] == 5 and report["config"]["N"] == 2


@pytest.mark.parametrize("argv", [("constants",), ("tau", "--K", "7"), ("phi", "--cutoff", "3"),
                                  ("pert", "--m-max", "5"), ("borel", "--m-max", "13")])
def test_deterministic_bytes(capsys, argv):
    _, first, _ = invoke(capsys, *argv)
    _, second, _ = invoke(capsys, *argv)
    assert first == second


def test_csv_output(capsys):
    code, out, _ = invoke(capsys, "tau", "--K", "5", "--format", "csv")
    lines = out.splitlines()
    assert code == 0 and lines[0].startswith("# seifert_wrt")
    rows = list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))
    assert rows[0]["K"] == "5"


def test_out_file(tmp_path, capsys):
    target = tmp_path / "report.json"
    code, out, _ = invoke(capsys, "constants", "--out", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["command"] == "constants"


def test_qdiff_and_appendix_pass(capsys):
    code, _, _ = invoke(capsys, "qdiff", "--loop", "2/1,3/1,5/-4", "--N", "1")
    assert code == 0
    code, out, _ = invoke(capsys, "appendix", "--loop", "2/1,3/1,5/-4")
    assert code == 0
    assert all(row["pass"] for row in json.loads(out)["rows"])


def test_failed_verification_exits_one():
    # the literal default grid start is outside the asymptotic range at K = 7
    code, report = run("radial", RunConfig(loop="2/1,3/1,5/-4", K=7, N=1, t0="1/8"))
    assert code == 1
    assert report["rows"][0]["pass"] is False


def test_every_command_is_wired():
    assert set(COMMANDS) == {"constants", "tau", "phi", "radial", "qdiff", "apoly", "pert", "borel", "median",
                             "stokes", "blr", "appendix"}


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "seifert_wrt", "tau", "--K", "1"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "K must be ≥ 2" in proc.stderr
