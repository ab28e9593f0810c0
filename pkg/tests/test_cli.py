import re
import subprocess
import sys

import pytest
import yaml

from benenti.cli import main

QUICK = ["--points", "3", "--checks", "basic,connection,killing"]


def strip_timing(text: str) -> str:
    return re.sub(r"timing:\n(  .*\n)+", "", text)


GOOD_FILE = """\
dim: 2
coords: [u, v]
g:
  - ["1"]
  - ["0", "1"]
gbar:
  - ["1"]
  - ["0", "1"]
domain:
  u: [0.1, 1.0]
  v: [0.1, 1.0]
name: flat-file
"""

BAD_FILE = """\
dim: 2
coords: [u, v]
g:
  - ["1"]
  - ["0", "1 + * u"]
gbar:
  - ["1"]
  - ["0", "1"]
domain:
  u: [0.1, 1.0]
  v: [0.1, 1.0]
"""


class TestVerifyCommand:
    def test_equivalent_entry_exits_zero(self, capsys):
        rc = main(["verify", "dini", *QUICK])
        out = capsys.readouterr().out
        assert rc == 0
        doc = yaml.safe_load(out)
        assert doc["summary"]["verdict"] == "pass"

    def test_control_entry_exits_one_with_flagged_basics(self, capsys):
        rc = main(["verify", "control_nonequiv", *QUICK])
        out = capsys.readouterr().out
        assert rc == 1
        doc = yaml.safe_load(out)
        assert doc["summary"]["verdict"] == "fail"
        basics = [r for r in doc["records"] if r["check"] == "basic"]
        assert basics and all(r["verdict"] == "fail" for r in basics)
        assert all(r["residual"] > 1e-2 for r in basics)

    def test_trivial_commutator_subset(self, capsys):
        rc = main(["verify", "trivial", "--checks", "commutator", "--points", "5"])
        out = capsys.readouterr().out
        assert rc == 0
        doc = yaml.safe_load(out)
        assert all(r["residual"] <= 1e-11 for r in doc["records"])

    def test_multiple_pairs_stream_and_worst_exit(self, capsys):
        rc = main(["verify", "dini", "control_nonequiv", *QUICK])
        out = capsys.readouterr().out
        assert rc == 1
        docs = list(yaml.safe_load_all(out))
        assert [d["pair"] for d in docs] == ["dini", "control_nonequiv"]
        assert [d["summary"]["verdict"] for d in docs] == ["pass", "fail"]

    def test_file_path_input(self, tmp_path, capsys):
        path = tmp_path / "flat.yaml"
        path.write_text(GOOD_FILE)
        rc = main(["verify", str(path), *QUICK])
        out = capsys.readouterr().out
        assert rc == 0
        doc = yaml.safe_load(out)
        assert doc["pair"] == "flat-file"
        assert doc["source"] == str(path)
        assert "expected_equivalent" not in doc

    def test_malformed_file_exits_two_with_position(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text(BAD_FILE)
        rc = main(["verify", str(path)])
        err = capsys.readouterr().err
        assert rc == 2
        assert "line 5" in err and "column" in err
        assert "g[1][1]" in err

    def test_missing_file_exits_two(self, capsys):
        rc = main(["verify", "no/such/file.yaml"])
        err = capsys.readouterr().err
        assert rc == 2
        assert "cannot read" in err

    def test_unknown_name_exits_two(self, capsys):
        rc = main(["verify", "zorp"])
        err = capsys.readouterr().err
        assert rc == 2
        assert "unknown catalog entry" in err and "dini" in err

    def test_no_pairs_exits_two(self, capsys):
        rc = main(["verify"])
        assert rc == 2
        assert "no pairs" in capsys.readouterr().err

    def test_report_file_and_summary_lines(self, tmp_path, capsys):
        report = tmp_path / "report.yaml"
        rc = main(["verify", "scaled", *QUICK, "--report", str(report)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "scaled: pass" in out
        doc = yaml.safe_load(report.read_text())
        assert doc["pair"] == "scaled"

    def test_determinism_modulo_timing(self, capsys):
        main(["verify", "beltrami", *QUICK])
        first = capsys.readouterr().out
        main(["verify", "beltrami", *QUICK])
        second = capsys.readouterr().out
        assert strip_timing(first) == strip_timing(second)

    def test_jobs_flag_matches_serial(self, capsys):
        main(["verify", "dini", *QUICK, "--jobs", "2"])
        parallel = capsys.readouterr().out
        main(["verify", "dini", *QUICK, "--jobs", "1"])
        serial = capsys.readouterr().out
        assert strip_timing(re.sub(r"jobs: \d", "jobs: n", parallel)) == \
            strip_timing(re.sub(r"jobs: \d", "jobs: n", serial))

    def test_t_grid_flag(self, capsys):
        rc = main(["verify", "dini", "--points", "2", "--checks", "killing",
                   "--t-grid", "0.0,7.5"])
        out = capsys.readouterr().out
        assert rc == 0
        doc = yaml.safe_load(out)
        assert doc["configuration"]["t_grid"] == [0.0, 7.5]
        assert all(r["params"]["t"] in (0.0, 7.5) for r in doc["records"])

    def test_tol_flag(self, capsys):
        rc = main(["verify", "control_nonequiv", *QUICK, "--tol", "1e6"])
        assert rc == 0
        doc = yaml.safe_load(capsys.readouterr().out)
        assert doc["configuration"]["tol"] == 1e6

    def test_bad_flag_value_exits_two(self, capsys):
        rc = main(["verify", "dini", "--points", "0", "--checks", "basic"])
        assert rc == 2
        assert "points" in capsys.readouterr().err


class TestOtherCommands:
    def test_list_shows_catalog(self, capsys):
        rc = main(["list"])
        out = capsys.readouterr().out
        assert rc == 0
        lines = out.strip().splitlines()
        assert len(lines) == 8
        assert any(line.startswith("dini") for line in lines)
        assert any("control" in line for line in lines)

    def test_describe_reports_structure_eigenvalues(self, capsys):
        rc = main(["describe", "dini", "--samples", "2", "--seed", "7"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "dimension: 2" in out
        assert "riemannian" in out
        assert "diagonalizable" in out
        # eigenvalues of the dini structure tensor are the coordinates
        pts = re.findall(r"point \(([-\d.]+), ([-\d.]+)\)", out)
        eigs = re.findall(r"L eigenvalues: ([-\d.]+), ([-\d.]+)", out)
        assert len(pts) == 2 and len(eigs) == 2
        for (x, y), (e1, e2) in zip(pts, eigs):
            assert sorted(map(float, (x, y))) == pytest.approx(
                sorted(map(float, (e1, e2))), abs=1e-4
            )

    def test_describe_unknown_pair(self, capsys):
        rc = main(["describe", "zorp"])
        assert rc == 2
        assert "unknown catalog entry" in capsys.readouterr().err

    def test_describe_file_path(self, tmp_path, capsys):
        path = tmp_path / "flat.yaml"
        path.write_text(GOOD_FILE)
        rc = main(["describe", str(path)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "flat-file" in out


class TestEntryPoint:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "benenti", "list"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "dini" in proc.stdout

    def test_argparse_rejects_unknown_check(self):
        proc = subprocess.run(
            [sys.executable, "-m", "benenti", "verify", "dini",
             "--checks", "frobnicate"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 2
        assert "frobnicate" in proc.stderr
