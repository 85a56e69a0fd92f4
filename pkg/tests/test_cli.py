import io
import json
import subprocess
import sys

import pytest

from sosg.cli import EXIT_DATA, EXIT_OK, EXIT_SOLVER, EXIT_USAGE, run

B = "bundled:"


def _run(*argv):
    out = io.StringIO()
    code = run(list(argv), out)
    return code, out.getvalue()


def test_sos_check_certificate():
    code, text = _run("sos-check", B + "quarter_minus_x_plus_x2.json")
    assert code == EXIT_OK
    status, cert = text.splitlines()
    assert status == "SOS"
    Q = json.loads(cert)["sigma0"]["Q"]
    assert abs(Q[0][1] + 0.5) < 1e-6


def test_sos_check_witness():
    code, text = _run("sos-check", B + "positive_not_sos.json")
    assert code == EXIT_OK and text.startswith("NOT-SOS")
    assert "moment_witness" in json.loads(text.splitlines()[1])


def test_xi_check_on_plane():
    code, text = _run("xi-check", B + "four_x4.json", "--omega", B + "plane.json")
    assert code == EXIT_OK and text.splitlines()[0] == "SOS"


def test_covariance_prevision():
    code, text = _run("prevision", B + "covariance_f.json", "--gambles", B + "covariance_gambles.json")
    assert code == EXIT_OK and text.splitlines() == ["status Value", "value -1.000000"]
    code, text = _run("prevision", B + "covariance_f.json", "--gambles", B + "covariance_gambles.json", "--upper", "--dual")
    assert text.splitlines()[1] == "value 1.000000"


def test_prevision_with_oracle():
    code, text = _run("prevision", B + "indicator_5.json", "--omega", B + "interval_0_10.json",
                      "--gambles", B + "markov_gambles.json", "--upper", "--oracle", "1001")
    lines = dict(l.split(" ", 1) for l in text.splitlines())
    assert code == EXIT_OK and lines["value"] == "0.400000" and lines["oracle"] == "0.400000"
    assert float(lines["gap"]) < 1e-6


def test_oracle_needs_interval(capsys):
    code, text = _run("prevision", B + "covariance_f.json", "--gambles", B + "covariance_gambles.json", "--oracle", "101")
    assert code == EXIT_DATA and text == ""
    assert json.loads(capsys.readouterr().err)["error"] == "data"


def test_condition_and_asl():
    code, text = _run("condition", B + "identity_x.json", "--omega", B + "interval_0_10.json",
                      "--gambles", B + "markov_gambles.json", "--given", B + "event_x_ge_5.json")
    assert code == EXIT_OK and "value 5.000000" in text
    code, text = _run("asl", "--gambles", B + "markov_gambles.json", "--omega", B + "interval_0_10.json")
    assert code == EXIT_OK and text.splitlines()[0] == "Avoids"


def test_sweep_output():
    code, text = _run("sweep", B + "indicator_5.json", "--omega", B + "interval_0_10.json",
                      "--gambles", B + "markov_gambles.json", "--degrees", "2,3")
    assert code == EXIT_OK and text.splitlines()[0] == "d,value" and len(text.splitlines()) == 3


def test_options_small_grid(capsys):
    code, text = _run("options", B + "table1.csv", "--cgrid", "2500:2520:10", "--given", "2540")
    rows = text.splitlines()
    assert code == EXIT_OK and rows[0] == "c,lower,upper,updated_lower,updated_upper" and len(rows) == 4
    assert rows[1] == "2500.000000,0.775000,0.900000,1.000000,1.000000"


def test_bad_chain_is_data_error(tmp_path, capsys):
    bad = tmp_path / "chain.csv"
    bad.write_text("strike,bid,ask\n2500,3,2\n")
    code, _ = _run("options", str(bad))
    assert code == EXIT_DATA
    err = json.loads(capsys.readouterr().err)
    assert err["type"] == "ChainValidationError"


@pytest.mark.parametrize("argv", [[], ["bogus"], ["prevision"], ["sweep", "x.json", "--degrees", "3..1"]])
def test_usage_errors(argv, capsys):
    code, _ = _run(*argv)
    assert code in (EXIT_USAGE, EXIT_DATA)
    if argv[:1] != ["sweep"]:
        assert code == EXIT_USAGE
    assert "error" in json.loads(capsys.readouterr().err)


def test_missing_file(capsys):
    code, _ = _run("sos-check", "/no/such/file.json")
    assert code == EXIT_DATA


def test_solver_failure_exit_code(monkeypatch):
    monkeypatch.setenv("SOSG_MAX_ITER", "1")
    code, text = _run("prevision", B + "covariance_f.json", "--gambles", B + "covariance_gambles.json")
    assert code == EXIT_SOLVER and "Inconclusive" in text


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sosg", "sos-check", B + "quarter_minus_x_plus_x2.json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("SOS")
