import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from hammerstein_reflect import __version__
from hammerstein_reflect.certifier import FLAG_SIGN_CHANGING_KERNEL
from hammerstein_reflect.cli import main
from hammerstein_reflect.config import loads
from hammerstein_reflect.errors import ConfigError

ROOT = Path(__file__).resolve().parents[1]
EXAMPLE = str(ROOT / "configs" / "example.ini")

BASE = """\
[problem]
T = 1
omega = {omega}
h = "{h}"

[cone]
variant = {variant}
a = {a}
"""


def write_config(tmp_path, name="p.ini", omega=0.5, h="1 + u - 0.5*v", variant="changing-sign", a=0.3, extra=""):
    path = tmp_path / name
    path.write_text(BASE.format(omega=omega, h=h, variant=variant, a=a) + extra)
    return str(path)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_kernel_positive_regime(tmp_path, capsys):
    cfg = write_config(tmp_path, omega=0.5)
    code, out, _ = run(["kernel", "--config", cfg, "--grid", "21"], capsys)
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 21 * 21
    assert set(rows[0]) == {"t", "s", "k"}
    assert all(float(r["k"]) > 0 for r in rows)


def test_kernel_sign_changing_regime(tmp_path, capsys):
    cfg = write_config(tmp_path, omega=1.5, a=0.48)
    code, out, _ = run(["kernel", "--config", cfg, "--grid", "41"], capsys)
    vals = [float(r["k"]) for r in read_csv(out)]
    assert code == 0 and min(vals) < 0 < max(vals)


def test_kernel_single_point(tmp_path, capsys):
    cfg = write_config(tmp_path)
    code, out, _ = run(["kernel", "--config", cfg, "--grid", "1"], capsys)
    rows = read_csv(out)
    assert code == 0 and len(rows) == 1
    assert float(rows[0]["t"]) == float(rows[0]["s"]) == -1.0


def test_kernel_to_file(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "k.csv"
    code, stdout, _ = run(["kernel", "--config", cfg, "--grid", "3", "--out", str(out)], capsys)
    assert code == 0 and stdout == ""
    assert len(read_csv(out.read_text())) == 9


def test_bounds_positive(tmp_path, capsys):
    cfg = write_config(tmp_path, omega=0.7, a=0.25)
    code, out, _ = run(["bounds", "--config", cfg, "--no-timestamp"], capsys)
    rep = json.loads(out)
    assert code == 0
    assert 0 < rep["c"] < 1
    assert rep["M"] == pytest.approx(5.357, abs=1e-3)
    assert "beta" not in rep
    assert rep["oracle_check"]["M"] == pytest.approx(rep["M"], rel=1e-6)
    assert len(rep["tables"]["y"]) == 21


def test_bounds_example(capsys):
    code, out, _ = run(["bounds", "--config", EXAMPLE, "--no-timestamp"], capsys)
    rep = json.loads(out)
    assert code == 0
    assert rep["c"] == pytest.approx(0.00035353756210158496, rel=1e-9)
    assert rep["beta"] == pytest.approx(0.9331474983291415, rel=1e-12)
    assert rep["m"] == pytest.approx(1.001684873139347, rel=1e-9)
    assert rep["m_source"] == "closed-form"
    recs = {r["quantity"]: r for r in rep["discrepancies"]}
    assert recs["c"]["agrees"] and not recs["m"]["agrees"]
    assert rep["flags"] == [FLAG_SIGN_CHANGING_KERNEL]


def test_bounds_invalid_strip(tmp_path, capsys):
    cfg = write_config(tmp_path, omega=1.5, a=0.3)
    code, _, err = run(["bounds", "--config", cfg], capsys)
    assert code == 2
    assert json.loads(err)["kind"] == "DomainError"


def test_certify_manual_published_verdict(capsys):
    code, out, _ = run(["certify", "--config", EXAMPLE, "--threshold-source", "manual", "--no-timestamp"], capsys)
    cert = json.loads(out)
    assert code == 0
    assert cert["ladder"] == "S2" and cert["solution_count"] == 1
    assert cert["self_contained"] is False
    assert cert["threshold_source"] == "manual-override"


def test_certify_manual_flags_override(capsys):
    code, out, _ = run(["certify", "--config", EXAMPLE, "--threshold-source", "manual",
                        "--manual-m", "1.0", "--manual-M", "6.58486", "--no-timestamp"], capsys)
    assert code == 4
    assert json.loads(out)["solution_count"] == 0


def test_certify_oracle_reports_discrepancies(capsys):
    code, out, _ = run(["certify", "--config", EXAMPLE, "--threshold-source", "oracle", "--no-timestamp"], capsys)
    cert = json.loads(out)
    assert code == 4
    assert cert["solution_count"] == 0
    assert cert["reference_verdict"]["ladder"] == "S2"
    assert {r["quantity"] for r in cert["discrepancies"]} >= {"m", "M", "c", "f.index1.1", "f.index0.2"}


def test_certify_deterministic(tmp_path, capsys):
    outs = []
    for i in range(2):
        path = tmp_path / f"c{i}.json"
        code, _, _ = run(["certify", "--config", EXAMPLE, "--no-timestamp", "--out", str(path)], capsys)
        assert code == 4
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    cert = json.loads(outs[0])
    assert len(cert["config_sha256"]) == 64 and "generated_at" not in cert


def test_timestamp_present_by_default(capsys):
    _, out, _ = run(["bounds", "--config", EXAMPLE], capsys)
    assert "generated_at" in json.loads(out)


def test_solve_constant_source(tmp_path, capsys):
    cfg = write_config(tmp_path, omega=1.5, h="1 - 1.5*v", a=0.48,
                       extra="\n[solver]\nnodes = 101\n")
    out = tmp_path / "u.csv"
    code, _, _ = run(["solve", "--config", cfg, "--out", str(out), "--no-timestamp"], capsys)
    assert code == 0
    rows = read_csv(out.read_text())
    assert len(rows) == 101
    assert all(abs(float(r["u"]) - 1 / 1.5) < 1e-8 for r in rows)
    diag = json.loads(out.with_suffix(".json").read_text())
    assert diag["solver"]["converged"] and diag["solver"]["verification"]["passed"]


def test_solve_example_reports_nonconvergence(capsys):
    code, out, _ = run(["solve", "--config", EXAMPLE, "--nodes", "101", "--no-timestamp"], capsys)
    diag = json.loads(out)
    assert code == 5
    assert diag["solver"]["status"] == "diverged"
    assert diag["certificate"]["solution_count"] == 0


def test_solve_nodes_validation(capsys):
    code, _, err = run(["solve", "--config", EXAMPLE, "--nodes", "100"], capsys)
    assert code == 2 and "odd" in json.loads(err)["error"]


@pytest.mark.parametrize(
    "body,line,key",
    [
        ('[problem]\nT = 1\nomega = 0.5\nh = "1 + "\n[cone]\nvariant = changing-sign\na = 0.3\n', 4, "problem.h"),
        ("[problem]\nT = 1\nomega = abc\nh = \"u\"\n[cone]\nvariant = changing-sign\na = 0.3\n", 3, "problem.omega"),
        ('[problem]\nT = 1\nomega = 0.5\nh = "u"\nwhat = 3\n[cone]\nvariant = changing-sign\na = 0.3\n', 5, "problem.what"),
        ('[problem]\nT = 1\nomega = 0.5\nh = "u"\n[cone]\nvariant = wedge\na = 0.3\n', 6, "cone.variant"),
    ],
)
def test_config_errors_carry_lines(tmp_path, capsys, body, line, key):
    path = tmp_path / "bad.ini"
    path.write_text(body)
    with pytest.raises(ConfigError) as info:
        loads(body)
    assert info.value.line == line and info.value.key == key
    code, _, err = run(["bounds", "--config", str(path)], capsys)
    payload = json.loads(err)
    assert code == 2 and payload["line"] == line and payload["key"] == key


def test_missing_config_file(tmp_path, capsys):
    code, _, err = run(["bounds", "--config", str(tmp_path / "nope.ini")], capsys)
    assert code == 2 and "error" in json.loads(err)


def test_resonant_omega(tmp_path, capsys):
    cfg = write_config(tmp_path, omega=3.141592653589793)
    code, _, _ = run(["kernel", "--config", cfg], capsys)
    assert code == 2


def test_negative_weight_exit_3(tmp_path, capsys):
    cfg = write_config(tmp_path, extra="\n[radii]\nindex1 = 1\n")
    text = Path(cfg).read_text().replace('h = "1 + u - 0.5*v"', 'h = "1 + u - 0.5*v"\ng = "s"')
    Path(cfg).write_text(text)
    code, _, err = run(["certify", "--config", cfg], capsys)
    assert code == 3 and json.loads(err)["kind"] == "HypothesisViolation"


def test_evaluation_error_exit_3(tmp_path, capsys):
    cfg = write_config(tmp_path, h="1/u - 0.5*v", extra="\n[radii]\nindex1 = 1\n")
    code, _, err = run(["certify", "--config", cfg], capsys)
    assert code == 3 and json.loads(err)["kind"] == "EvaluationError"


def test_unwritable_output(tmp_path, capsys):
    cfg = write_config(tmp_path)
    code, _, err = run(["kernel", "--config", cfg, "--out", str(tmp_path / "missing" / "k.csv")], capsys)
    assert code == 2 and json.loads(err)["kind"] == "OutputError"


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "hammerstein_reflect.cli", "kernel", "--config", EXAMPLE,
                          "--grid", "2"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.splitlines()[0] == "t,s,k"
