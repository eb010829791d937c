import csv
import io
import subprocess
import sys

import pytest

from treedist.cli import main
from treedist.tree import parse_bracket

T1 = "c(b(c(c(a)),a(a,c,c),b,b),a(a,c),a)"
T2 = "b(a(b(b,b)),c(b(a),c(b)),c(c(b),b,b))"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestDist:
    def test_examples(self, capsys):
        assert run(capsys, "dist", "--distance", "edit", "--method", "dp", "a(b,c)", "a(b,d)")[:2] == (0, "1\n")
        assert run(capsys, "dist", "--distance", "bot", "--method", "dp", "a", "a")[:2] == (0, "0\n")
        assert run(capsys, "dist", "--distance", "seg", "--method", "oracle", "a(b(c))", "a(c)")[:2] == (0, "2\n")

    def test_show_mapping(self, capsys):
        code, out, _ = run(capsys, "dist", "--show-mapping", "a(b,c)", "a(b,d)")
        assert code == 0
        assert out.splitlines() == ["1", "(0, 0)", "(1, 1)", "(2, 2)"]

    def test_tree_files(self, capsys, tmp_path):
        f = tmp_path / "t.txt"
        f.write_text("a(b,c)\n")
        assert run(capsys, "dist", f"@{f}", "a(b,d)")[:2] == (0, "1\n")

    @pytest.mark.parametrize("argv", [
        ["dist", "a(", "b"],
        ["dist", "@/nonexistent/file", "b"],
        ["dist", "--distance", "nope", "a", "b"],
        ["dist", "--method", "oracle", "a(b,c,d,e,f,g,h)", "a(b,c,d,e,f,g,h)"],
        ["dist", "--time-limit", "-1", "a", "b"],
    ])
    def test_input_errors(self, capsys, argv):
        code, out, err = run(capsys, *argv)
        assert code == 2 and out == "" and err

    def test_parse_error_mentions_offset(self, capsys):
        _, _, err = run(capsys, "dist", "a(b,,c)", "a")
        assert "offset 4" in err

    def test_rational_cost(self, capsys, tmp_path):
        f = tmp_path / "half.cost"
        f.write_text("scale 2\ndefault-sub 1\n")
        assert run(capsys, "dist", "--cost", str(f), "a(b)", "a(c)")[:2] == (0, "1/2\n")

    def test_nonmetric_cost(self, capsys, tmp_path):
        f = tmp_path / "bad.cost"
        f.write_text("scale 1\nsub a b 5\n")
        code, _, err = run(capsys, "dist", "--cost", str(f), "a", "b")
        assert code == 2 and "sub(a,b) > del(a)+ins(b)" in err
        code, out, err = run(capsys, "dist", "--cost", str(f), "--allow-nonmetric", "a", "b")
        assert code == 0 and out == "2\n" and "clamping" in err

    def test_timeout_exit_code(self, capsys, monkeypatch):
        monkeypatch.setenv("TREEDIST_TIME_LIMIT", "0")
        code, out, err = run(capsys, "dist", T1, T2)
        assert code == 3 and "upper bound" in err
        exact = main(["dist", "--time-limit", "60", T1, T2])
        exact_out, _ = capsys.readouterr()
        assert exact == 0 and int(exact_out) <= int(out)

    def test_bad_env_time_limit(self, capsys, monkeypatch):
        monkeypatch.setenv("TREEDIST_TIME_LIMIT", "soon")
        assert run(capsys, "dist", "a", "b")[0] == 2


@pytest.fixture
def dataset(tmp_path, capsys):
    assert main(["gen", "--count", "12", "--nodes", "2:6", "--seed", "3"]) == 0
    out, _ = capsys.readouterr()
    path = tmp_path / "trees.txt"
    path.write_text(out)
    return path


class TestBatch:
    def test_cross_method_rows(self, capsys, dataset, tmp_path):
        out = tmp_path / "o.csv"
        code, stdout, _ = run(capsys, "batch", "--input", str(dataset), "--pairs", "10", "--methods", "dp,naive",
                              "--distances", "edit", "--seed", "1", "--output", str(out))
        assert code == 0 and "avg_s" in stdout
        rows = list(csv.DictReader(io.StringIO(out.read_text())))
        assert len(rows) == 20
        assert list(rows[0]) == ["instance", "n1", "n2", "class", "method", "distance", "status", "ms", "nodes"]
        by_inst = {}
        for r in rows:
            by_inst.setdefault(r["instance"], set()).add(r["distance"])
            assert r["status"] == "ok"
        assert len(by_inst) == 10 and all(len(v) == 1 for v in by_inst.values())

    def test_deterministic(self, capsys, dataset, tmp_path):
        outs = []
        for k, jobs in enumerate(["1", "1", "2"]):
            out = tmp_path / f"o{k}.csv"
            assert main(["batch", "--input", str(dataset), "--pairs", "5", "--distances", "edit,bot",
                         "--seed", "7", "--deterministic", "--jobs", jobs, "--output", str(out)]) == 0
            outs.append(out.read_bytes())
        capsys.readouterr()
        assert outs[0] == outs[1] == outs[2]

    def test_empty_bucket(self, capsys, dataset):
        code, stdout, err = run(capsys, "batch", "--input", str(dataset), "--pairs", "2",
                                "--bucket-by-total-nodes", "4:44:20", "--seed", "1")
        assert code == 0
        assert "no tree pairs" in err
        summary = [ln.split() for ln in err.splitlines() if ln.strip().startswith("24-43")]
        assert summary and summary[0][3] == "0"

    def test_cslogs_input(self, capsys, tmp_path):
        f = tmp_path / "logs.txt"
        f.write_text("1 2 -1 3 -1\n0 5 1 2 -1\n1 -1 -1\n4 4 -1\n")
        code, stdout, err = run(capsys, "batch", "--input", str(f), "--pairs", "10", "--methods", "dp,oracle")
        assert code == 0 and "skipped 1 malformed" in err
        rows = list(csv.reader(io.StringIO(stdout)))
        assert len(rows) == 1 + 2 * 3

    def test_bad_arguments(self, capsys, dataset):
        assert run(capsys, "batch", "--input", str(dataset), "--methods", "dp,fast")[0] == 2
        assert run(capsys, "batch", "--input", str(dataset), "--bucket-by-total-nodes", "1:2")[0] == 2
        assert run(capsys, "batch", "--input", "/nonexistent")[0] == 2


class TestGen:
    def test_single_node(self, capsys):
        code, out, _ = run(capsys, "gen", "--count", "1", "--nodes", "1:1")
        assert code == 0 and len(parse_bracket(out.strip())) == 1

    def test_degree_and_labels(self, capsys):
        code, out, _ = run(capsys, "gen", "--count", "40", "--nodes", "1:30", "--max-degree", "3",
                           "--labels", "2", "--seed", "5")
        trees = [parse_bracket(s) for s in out.splitlines()]
        assert code == 0 and len(trees) == 40
        assert all(len(c) <= 3 for t in trees for c in t.children)
        assert {lab for t in trees for lab in t.labels} <= {"a", "b"}
        assert all(1 <= len(t) <= 30 for t in trees)

    def test_seeded(self, capsys):
        a = run(capsys, "gen", "--count", "5", "--seed", "9")[1]
        b = run(capsys, "gen", "--count", "5", "--seed", "9")[1]
        c = run(capsys, "gen", "--count", "5", "--seed", "10")[1]
        assert a == b != c

    def test_chains_allowed(self, capsys):
        code, out, _ = run(capsys, "gen", "--nodes", "5:5", "--max-degree", "1")
        assert code == 0 and max(parse_bracket(out.strip()).depth) == 4

    @pytest.mark.parametrize("argv", [
        ["--nodes", "0:3"], ["--nodes", "5:2"], ["--nodes", "3:5", "--max-degree", "0"], ["--labels", "0"],
        ["--nodes", "x"],
    ])
    def test_impossible(self, capsys, argv):
        assert run(capsys, "gen", *argv)[0] == 2

    def test_degree_zero_single_nodes(self, capsys):
        code, out, _ = run(capsys, "gen", "--nodes", "1:1", "--max-degree", "0")
        assert code == 0 and len(parse_bracket(out.strip())) == 1


class TestConvert:
    def test_example(self, capsys, tmp_path):
        f = tmp_path / "c.txt"
        f.write_text("1 2 -1 3 -1\n")
        assert run(capsys, "convert", "--from", "cslogs", "--input", str(f))[:2] == (0, "1(2,3)\n")

    def test_empty(self, capsys, tmp_path):
        f = tmp_path / "empty.txt"
        f.write_text("")
        assert run(capsys, "convert", "--from", "cslogs", "--input", str(f))[:2] == (0, "")

    def test_malformed(self, capsys, tmp_path):
        f = tmp_path / "c.txt"
        f.write_text("1 2 -1\n1 -1 -1\n7\n")
        code, out, err = run(capsys, "convert", "--from", "cslogs", "--input", str(f))
        assert code == 0 and out == "1(2)\n7\n"
        assert ":2:" in err and "skipped 1 malformed" in err
        code, out, err = run(capsys, "convert", "--from", "cslogs", "--input", str(f), "--strict")
        assert code == 2 and ":2:" in err

    def test_output_file(self, capsys, tmp_path):
        f = tmp_path / "c.txt"
        f.write_text("5 6 -1\n")
        dest = tmp_path / "out.txt"
        assert main(["convert", "--from", "cslogs", "--input", str(f), "--output", str(dest)]) == 0
        assert dest.read_text() == "5(6)\n"


class TestSelftest:
    def test_default(self, capsys):
        code, out, _ = run(capsys, "selftest")
        assert code == 0 and "0 failures" in out

    def test_fault_injection(self, capsys):
        code, out, _ = run(capsys, "selftest", "--trials", "2", "--inject-fault")
        assert code != 0

    def test_zero_trials(self, capsys):
        code, out, _ = run(capsys, "selftest", "--trials", "0")
        assert code == 0 and "0 checks" in out

    def test_hidden_flag(self, capsys):
        assert main(["selftest", "--help"]) == 0
        assert "inject" not in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "treedist", "dist", "a(b)", "a(c)"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "1\n"
