import json
import subprocess
import sys
from pathlib import Path

import pytest

from optassign.cli import main, parse_seeds, parse_tie_mode


@pytest.fixture
def tied_json(tmp_path, tied3):
    path = tmp_path / "tied3.json"
    tied3.dump(path)
    return path


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestParsers:
    def test_seeds(self):
        assert parse_seeds("0..9") == list(range(10))
        assert parse_seeds("3") == [3]
        assert parse_seeds("0,2,5..6") == [0, 2, 5, 6]

    def test_tie_mode(self):
        assert parse_tie_mode("strict") == ("strict", 2)
        assert parse_tie_mode("tied:4") == ("tied", 4)


class TestSolve:
    def test_student_optimal_all_first(self, tied_json, tmp_path, capsys):
        out = tmp_path / "m.csv"
        assert main(["solve", "--mechanism=student-optimal", "--seed=0", str(tied_json), "-o", str(out)]) == 0
        assert out.read_text() == "student_id,school_id,rank\na,A,1\nb,B,1\nc,C,1\n"
        assert "300 (base 4)" in capsys.readouterr().err

    def test_stdout(self, tied_json, capsys):
        assert main(["solve", "--mechanism", "boston-rounds", str(tied_json)]) == 0
        assert capsys.readouterr().out.startswith("student_id,school_id,rank\n")

    def test_missing_file(self, tmp_path, capsys):
        assert main(["solve", str(tmp_path / "nope.json")]) == 3
        assert "optassign:" in capsys.readouterr().err

    def test_incomplete_instance(self, tmp_path, capsys):
        doc = {"schools": [{"id": "A", "capacity": 1}, {"id": "B", "capacity": 1}],
               "students": [{"id": "a", "preferences": [["A"]]}]}
        path = write(tmp_path, "i.json", json.dumps(doc))
        assert main(["solve", str(path)]) == 3
        assert "INCOMPLETE_PREFERENCES" in capsys.readouterr().err
        assert main(["solve", "--policy", "complete-with-tail", str(path)]) == 0


class TestVerify:
    def test_stable(self, tied_json, tmp_path, capsys):
        m = write(tmp_path, "m.csv", "student_id,school_id,rank\na,A,1\nb,B,1\nc,C,1\n")
        assert main(["verify", str(tied_json), str(m)]) == 0
        assert capsys.readouterr().out.strip() == "Stable"

    def test_unstable(self, tmp_path, capsys):
        doc = {"schools": [{"id": "A", "capacity": 1}, {"id": "B", "capacity": 1}],
               "students": [{"id": "p", "preferences": [["A"], ["B"]]},
                            {"id": "q", "preferences": [["B"], ["A"]]}]}
        inst = write(tmp_path, "i.json", json.dumps(doc))
        m = write(tmp_path, "m.csv", "student_id,school_id,rank\np,B,2\nq,A,2\n")
        assert main(["verify", str(inst), str(m)]) == 1
        assert capsys.readouterr().out.startswith("Unstable (2 blocking pairs)")

    def test_invalid_matching(self, tied_json, tmp_path, capsys):
        m = write(tmp_path, "m.csv", "student_id,school_id,rank\na,A,1\nb,A,1\nc,C,1\n")
        assert main(["verify", str(tied_json), str(m)]) == 3
        assert "MATCHING_INVALID" in capsys.readouterr().err


class TestCompare:
    def test_with_instance(self, tied_json, tmp_path, capsys):
        good = write(tmp_path, "g.csv", "student_id,school_id,rank\na,A,1\nb,B,1\nc,C,1\n")
        worse = write(tmp_path, "w.csv", "student_id,school_id,rank\na,C,3\nb,A,1\nc,B,1\n")
        assert main(["compare", str(good), str(worse), "--instance", str(tied_json)]) == 0
        assert capsys.readouterr().out.splitlines()[-1] == "Greater"
        assert main(["compare", str(worse), str(good)]) == 0
        assert capsys.readouterr().out.splitlines()[-1] == "Less"

    def test_equal_from_rank_column(self, tmp_path, capsys):
        m1 = write(tmp_path, "1.csv", "student_id,school_id,rank\na,A,1\nb,C,2\nc,B,1\n")
        m2 = write(tmp_path, "2.csv", "student_id,school_id,rank\na,B,2\nb,A,1\nc,C,1\n")
        assert main(["compare", str(m1), str(m2)]) == 0
        out = capsys.readouterr().out
        # without the instance z is the deepest rank seen, so the trailing zero digit is absent
        assert "[2, 1]  Q = 21 (base 4)" in out and out.splitlines()[-1] == "Equal"

    def test_size_mismatch(self, tmp_path, capsys):
        m1 = write(tmp_path, "1.csv", "student_id,school_id,rank\na,A,1\n")
        m2 = write(tmp_path, "2.csv", "student_id,school_id,rank\na,A,1\nb,B,1\n")
        assert main(["compare", str(m1), str(m2)]) == 3
        assert "PROFILE_SHAPE_MISMATCH" in capsys.readouterr().err


class TestGenAndBench:
    def test_gen(self, tmp_path):
        out = tmp_path / "g.json"
        assert main(["gen", "--students", "10", "--schools", "2", "--seed", "3",
                     "--tie-mode", "tied:3", "-o", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert len(doc["students"]) == 10 and [s["capacity"] for s in doc["schools"]] == [5, 5]

    def test_gen_bad_config(self, capsys):
        assert main(["gen", "--students", "10", "--schools", "3"]) == 3
        assert "CONFIG_INVALID" in capsys.readouterr().err

    def test_bench_writes_reports(self, tmp_path, capsys):
        out = tmp_path / "r"
        assert main(["bench", "--students=100", "--schools=5", "--seeds=0..9", "--out-dir", str(out)]) == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["report.csv", "report.json", "report_timing.svg", "report_utility.svg"]
        assert "student-optimal: mean counts by rank" in capsys.readouterr().out

    def test_bench_config_file(self, tmp_path):
        cfg = write(tmp_path, "c.json", json.dumps(
            {"n_students": 12, "n_schools": 3, "seeds": [0, 1], "tie_mode": "tied",
             "mechanisms": ["student-optimal", "serial-dictatorship", "boston-rounds"]}))
        out = tmp_path / "r"
        assert main(["bench", "--config", str(cfg), "--no-timing", "--format", "csv", "--out-dir", str(out)]) == 0
        golden = (Path(__file__).parent / "golden" / "bench_12x3_tied.csv").read_text()
        assert (out / "report.csv").read_text() == golden

    def test_bench_unknown_config_key(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.json", json.dumps({"n_students": 4, "n_schools": 2, "x": 1}))
        assert main(["bench", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 3
        assert "CONFIG_INVALID" in capsys.readouterr().err


class TestUsage:
    @pytest.mark.parametrize("argv", [
        [],
        ["frobnicate"],
        ["solve"],
        ["solve", "x.json", "--mechanism", "lottery"],
        ["bench", "--seeds", "a..b"],
        ["bench", "--out-dir", "x"],
        ["gen", "--students", "3", "--schools", "1", "--tie-mode", "tied:0"],
        ["gen", "--students", "3", "--schools", "1", "--capacities", "x,y"],
        ["solve", "x.json", "--seed", "-1"],
    ])
    def test_exit_2(self, argv, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(argv) == 2

    def test_help_is_ok(self, capsys):
        assert main(["--help"]) == 0

    def test_module_entry_point(self, tied_json):
        proc = subprocess.run([sys.executable, "-m", "optassign", "solve", str(tied_json)],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.splitlines()[1] == "a,A,1"
