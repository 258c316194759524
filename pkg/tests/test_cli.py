"""Frontend coverage: subcommands, exit codes, CSV benchmark output."""

import csv
import io
import os

import pytest

from aspen import cli
from aspen.ccp import fig2_instance, gen_ccp_grid, parse_ccp, serialize_ccp
from aspen.ground import encode_pigeonhole, parse_program, serialize_program
from aspen.pup import fig1_instance, parse_pup, serialize_pup

CHILDREN = os.path.join(os.path.dirname(__file__), "plugin_children")


@pytest.fixture
def fig1_path(tmp_path):
    path = tmp_path / "fig1.pup"
    path.write_text(serialize_pup(fig1_instance()))
    return str(path)


@pytest.fixture
def fig2_path(tmp_path):
    path = tmp_path / "fig2.ccp"
    path.write_text(serialize_ccp(fig2_instance()))
    return str(path)


@pytest.fixture
def php_path(tmp_path):
    def make(n, m):
        path = tmp_path / ("php%d%d.gpf" % (n, m))
        path.write_text(serialize_program(encode_pigeonhole(n, m)))
        return str(path)
    return make


def read_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def drop_wall(rows):
    return [{k: v for k, v in row.items() if k != "wall_ms"}
            for row in rows]


class TestSolve:
    def test_fig1_pred_exit_and_witness(self, fig1_path, capsys):
        rc = cli.main(["solve", fig1_path, "--heuristic", "pred"])
        out = capsys.readouterr().out
        assert rc == 10
        lines = out.splitlines()
        assert any(line.startswith("unit2zone(") for line in lines)
        assert lines == sorted(lines)

    def test_fig1_quickpup_star(self, fig1_path):
        rc = cli.main(["solve", fig1_path, "--heuristic", "quickpup-star"])
        assert rc == 10

    def test_pigeonhole_incoherent(self, php_path):
        assert cli.main(["solve", php_path(3, 2)]) == 20

    def test_timeout_zero(self, fig1_path, capsys):
        rc = cli.main(["solve", fig1_path, "--timeout", "0"])
        assert rc == 30
        assert "timeout" in capsys.readouterr().err

    def test_heuristic_domain_mismatch(self, fig2_path, fig1_path, capsys):
        with pytest.raises(SystemExit) as info:
            cli.main(["solve", fig2_path, "--heuristic", "pred"])
        assert info.value.code == 2
        with pytest.raises(SystemExit):
            cli.main(["solve", fig1_path, "--heuristic", "a2f"])
        capsys.readouterr()

    def test_fig2_a2f_choices(self, fig2_path, capsys):
        rc = cli.main(["solve", fig2_path, "--heuristic", "a2f",
                       "--budget-mode", "choices", "--budget", "5000",
                       "--stats"])
        captured = capsys.readouterr()
        assert rc == 10
        assert "conflicts 0" in captured.err
        assert any(line.startswith("color(") for line
                   in captured.out.splitlines())

    def test_missing_file(self, capsys):
        rc = cli.main(["solve", "/nonexistent/x.pup"])
        assert rc == 1
        assert "cannot read" in capsys.readouterr().err

    def test_bad_program_text(self, tmp_path, capsys):
        path = tmp_path / "bad.gpf"
        path.write_text("this is not a program\n")
        assert cli.main(["solve", str(path)]) == 1
        capsys.readouterr()

    def test_domain_override_forces_parser(self, fig1_path, capsys):
        # the PUPF text is not a valid ground program file
        rc = cli.main(["solve", fig1_path, "--domain", "gpf"])
        assert rc == 1
        capsys.readouterr()

    def test_plugin_heuristic(self, php_path, capsys):
        cmd = "plugin:python3 %s" % os.path.join(CHILDREN,
                                                 "diagonal_child.py")
        assert cli.main(["solve", php_path(3, 2), "--heuristic", cmd]) == 20
        assert cli.main(["solve", php_path(2, 2), "--heuristic", cmd]) == 10
        capsys.readouterr()

    def test_stats_on_stderr(self, php_path, capsys):
        rc = cli.main(["solve", php_path(2, 2), "--stats"])
        captured = capsys.readouterr()
        assert rc == 10
        assert "decisions" in captured.err
        assert "decisions" not in captured.out


class TestEncode:
    def test_pup_round_trip(self, fig1_path, capsys):
        rc = cli.main(["encode", fig1_path])
        assert rc == 0
        program = parse_program(capsys.readouterr().out)
        assert "zone(z1)" in program.ids

    def test_ccp_to_file(self, fig2_path, tmp_path):
        out = tmp_path / "fig2.gpf"
        assert cli.main(["encode", fig2_path, "-o", str(out)]) == 0
        program = parse_program(out.read_text())
        assert "color(b1,1)" in program.ids

    def test_gpf_rejected(self, php_path, capsys):
        rc = cli.main(["encode", php_path(2, 2)])
        assert rc == 1
        assert "pup or ccp" in capsys.readouterr().err


class TestGenerate:
    def test_double_deterministic(self, capsys):
        outs = []
        for _ in range(2):
            assert cli.main(["generate", "--domain", "pup", "--topology",
                             "double", "--size", "3"]) == 0
            outs.append(capsys.readouterr().out)
        assert outs[0] == outs[1]
        inst = parse_pup(outs[0])
        assert len(inst.zones) == 6 and len(inst.sensors) == 5

    def test_ccp_grid_matches_library(self, capsys):
        assert cli.main(["generate", "--domain", "ccp", "--width", "2",
                         "--height", "2"]) == 0
        inst = parse_ccp(capsys.readouterr().out)
        assert inst == gen_ccp_grid(2, 2)

    def test_pup_grid_topology(self, capsys):
        assert cli.main(["generate", "--domain", "pup", "--topology",
                         "grid", "--size", "2", "--width", "2"]) == 0
        inst = parse_pup(capsys.readouterr().out)
        assert len(inst.zones) == 4

    def test_bad_parameters(self, capsys):
        rc = cli.main(["generate", "--domain", "ccp", "--width", "2",
                       "--height", "2", "--capacity", "1", "--sizes", "2"])
        assert rc == 1
        capsys.readouterr()


class TestVerify:
    def solve_to_file(self, args, tmp_path, capsys):
        rc = cli.main(["solve"] + args)
        out = capsys.readouterr().out
        assert rc == 10
        path = tmp_path / "solution.txt"
        path.write_text(out)
        return str(path)

    def test_pup_round_trip(self, fig1_path, tmp_path, capsys):
        sol = self.solve_to_file([fig1_path, "--heuristic", "quickpup"],
                                 tmp_path, capsys)
        assert cli.main(["verify", fig1_path, sol]) == 0
        assert "ok" in capsys.readouterr().out

    def test_pup_corrupted_assignment(self, fig1_path, tmp_path, capsys):
        sol = self.solve_to_file([fig1_path], tmp_path, capsys)
        text = open(sol).read()
        lines = [l for l in text.splitlines()
                 if l.startswith("unit2zone(")]
        victim = lines[0]
        inside = victim[len("unit2zone("):-1]
        unit = int(inside.split(",")[0])
        twisted = victim.replace("unit2zone(%d" % unit,
                                 "unit2zone(%d" % (unit % 3 + 1))
        open(sol, "w").write(text.replace(victim, twisted))
        rc = cli.main(["verify", fig1_path, sol])
        captured = capsys.readouterr()
        assert rc == 1
        assert captured.out.strip()

    def test_ccp_round_trip_and_corruption(self, fig2_path, tmp_path,
                                           capsys):
        sol = self.solve_to_file([fig2_path, "--heuristic", "a2f"],
                                 tmp_path, capsys)
        assert cli.main(["verify", fig2_path, sol]) == 0
        capsys.readouterr()
        text = open(sol).read()
        open(sol, "w").write(text.replace("color(p2,", "color(zzz_p2,"))
        rc = cli.main(["verify", fig2_path, sol])
        captured = capsys.readouterr()
        assert rc == 1
        assert "no color" in captured.out

    def test_gpf_answer_set_check(self, php_path, tmp_path, capsys):
        path = php_path(2, 2)
        sol = self.solve_to_file([path], tmp_path, capsys)
        assert cli.main(["verify", path, sol]) == 0
        capsys.readouterr()
        open(sol, "w").write("")  # empty set is no answer set here
        rc = cli.main(["verify", path, sol])
        captured = capsys.readouterr()
        assert rc == 1
        assert "not an answer set" in captured.out

    def test_gpf_round_trip_with_aux_atoms(self, fig1_path, tmp_path,
                                           capsys):
        # encode produces unnamed counter atoms, so the witness cannot be
        # rebuilt atom for atom; verify must still accept it
        gpf = tmp_path / "fig1.gpf"
        assert cli.main(["encode", fig1_path, "-o", str(gpf)]) == 0
        capsys.readouterr()
        sol = self.solve_to_file([str(gpf)], tmp_path, capsys)
        assert cli.main(["verify", str(gpf), sol]) == 0
        assert "ok" in capsys.readouterr().out
        names = open(sol).read().splitlines()
        kept = [n for n in names if not n.startswith("unit2zone(")]
        assert len(kept) < len(names)
        open(sol, "w").write("".join(n + "\n" for n in kept))
        rc = cli.main(["verify", str(gpf), sol])
        captured = capsys.readouterr()
        assert rc == 1
        assert "no answer set matches" in captured.out

    def test_gpf_unknown_atom(self, php_path, tmp_path, capsys):
        path = php_path(2, 2)
        sol = tmp_path / "bogus.txt"
        sol.write_text("martian(1)\n")
        rc = cli.main(["verify", path, str(sol)])
        assert rc == 1
        assert "unknown atoms" in capsys.readouterr().err


class TestBench:
    def write_matrix(self, tmp_path, lines):
        path = tmp_path / "matrix.txt"
        path.write_text("".join(line + "\n" for line in lines))
        return str(path)

    def test_rows_and_summary(self, fig1_path, php_path, tmp_path, capsys):
        php = php_path(3, 2)
        matrix = self.write_matrix(tmp_path, [
            "% two heuristics over two instances",
            "%s quickpup 0 10" % fig1_path,
            "%s default 0 10" % fig1_path,
            "%s default 0 -" % php,
            "%s default 1 -" % php,
        ])
        assert cli.main(["bench", matrix]) == 0
        captured = capsys.readouterr()
        rows = read_rows(captured.out)
        assert len(rows) == 4
        assert rows[0]["outcome"] == "coherent"
        assert rows[0]["heuristic"] == "quickpup"
        assert rows[2]["outcome"] == "incoherent"
        assert "default: 3/3 solved" in captured.err
        assert "quickpup: 1/1 solved" in captured.err

    def test_deterministic_counters(self, fig2_path, tmp_path, capsys):
        matrix = self.write_matrix(tmp_path, [
            "%s a2f 0 -" % fig2_path,
            "%s a2afo 3 -" % fig2_path,
        ])
        runs = []
        for _ in range(2):
            assert cli.main(["bench", matrix, "--budget-mode", "choices",
                             "--budget", "5000"]) == 0
            runs.append(drop_wall(read_rows(capsys.readouterr().out)))
        assert runs[0] == runs[1]

    def test_error_row_continues(self, fig1_path, tmp_path, capsys):
        matrix = self.write_matrix(tmp_path, [
            "/missing/file.pup default 0 10",
            "%s default 0 10" % fig1_path,
        ])
        assert cli.main(["bench", matrix]) == 0
        captured = capsys.readouterr()
        rows = read_rows(captured.out)
        assert [r["outcome"] for r in rows] == ["error", "coherent"]

    def test_timeout_row(self, fig1_path, tmp_path, capsys):
        matrix = self.write_matrix(tmp_path, ["%s default 0 0" % fig1_path])
        assert cli.main(["bench", matrix]) == 0
        rows = read_rows(capsys.readouterr().out)
        assert rows[0]["outcome"] == "timeout"

    def test_parallel_matches_sequential(self, fig1_path, php_path,
                                         tmp_path, capsys):
        matrix = self.write_matrix(tmp_path, [
            "%s quickpup 0 -" % fig1_path,
            "%s default 0 -" % php_path(3, 2),
            "%s pred 1 -" % fig1_path,
        ])
        assert cli.main(["bench", matrix]) == 0
        seq = drop_wall(read_rows(capsys.readouterr().out))
        assert cli.main(["bench", matrix, "--jobs", "2"]) == 0
        par = drop_wall(read_rows(capsys.readouterr().out))
        assert seq == par

    def test_bad_matrix_line(self, tmp_path, capsys):
        matrix = self.write_matrix(tmp_path, ["only two fields"])
        assert cli.main(["bench", matrix]) == 1
        assert "expected" in capsys.readouterr().err

    def test_csv_to_file(self, php_path, tmp_path, capsys):
        matrix = self.write_matrix(tmp_path,
                                   ["%s default 0 -" % php_path(2, 2)])
        out = tmp_path / "runs.csv"
        assert cli.main(["bench", matrix, "-o", str(out)]) == 0
        capsys.readouterr()
        rows = read_rows(out.read_text())
        assert list(rows[0]) == list(cli.CSV_COLUMNS)
        assert rows[0]["outcome"] == "coherent"
