"""End-to-end tests of the command-line entry point."""

import io
import json
import sys

import pytest

from run_xratio import EXIT_BUDGET, EXIT_DISAGREEMENT, EXIT_INPUT, EXIT_OK, main


@pytest.fixture(autouse=True)
def no_thread_override(monkeypatch):
    monkeypatch.delenv("XRATIO_THREADS", raising=False)


def run(capsys, *argv) -> tuple[int, str, str]:
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestDegree:

    def test_two_solutions(self, capsys, input_path):
        code, out, _ = run(capsys, "degree", "-i", str(input_path / "two_solutions.json"))
        assert code == EXIT_OK
        assert out.strip() == "2"

    def test_plain_format_and_json(self, capsys, input_path):
        code, out, _ = run(capsys, "degree", "-i", str(input_path / "two_solutions.txt"), "--json")
        assert code == EXIT_OK
        assert json.loads(out) == {"degree": 2}

    def test_stdin(self, capsys, monkeypatch):
        stdin = io.TextIOWrapper(io.BytesIO(b'{"n":4,"edges":[[1,2,3,4]]}'))
        monkeypatch.setattr(sys, "stdin", stdin)
        code, out, _ = run(capsys, "degree", "-i", "-")
        assert code == EXIT_OK
        assert out.strip() == "1"

    def test_output_file(self, capsys, input_path, tmp_path):
        target = tmp_path / "degree.txt"
        code, out, _ = run(capsys, "degree", "-i", str(input_path / "duplicate_edge.json"), "-o", str(target))
        assert code == EXIT_OK
        assert out == ""
        assert target.read_text() == "0\n"

    def test_timeout(self, capsys, input_path):
        from src.degree_algo import clear_degree_cache
        clear_degree_cache()
        code, _, err = run(capsys, "degree", "-i", str(input_path / "two_solutions.json"), "--timeout", "0")
        assert code == EXIT_BUDGET
        assert "Budget" in err


class TestInputErrors:

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "degree", "-i", str(tmp_path / "nope.json"))
        assert code == EXIT_INPUT
        assert "not found" in err

    def test_malformed(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"n":6,"edges":[[1,2,3]]}')
        code, _, err = run(capsys, "bound", "-i", str(path))
        assert code == EXIT_INPUT
        assert err.startswith("✗")

    def test_unknown_subcommand(self, capsys):
        assert run(capsys, "solve")[0] == EXIT_INPUT

    def test_too_many_vertices(self, capsys, tmp_path):
        path = tmp_path / "wide.json"
        path.write_text(json.dumps({"n": 65, "edges": [[i, i + 1, i + 2, i + 3] for i in range(1, 63)]}))
        code, _, err = run(capsys, "degree", "-i", str(path))
        assert code == EXIT_INPUT
        assert "64" in err

    def test_bad_triple(self, capsys, input_path):
        code, _, _ = run(capsys, "verify", "-i", str(input_path / "two_solutions.json"), "--triple", "1,2,9")
        assert code == EXIT_INPUT


class TestBoundAndSurplus:

    def test_bound_json(self, capsys, input_path):
        code, out, _ = run(capsys, "bound", "-i", str(input_path / "two_solutions.json"), "--json")
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["min_bound"] == 2
        assert len(data["argmin_triples"]) == 20

    def test_bound_text(self, capsys, input_path):
        _, out, _ = run(capsys, "bound", "-i", str(input_path / "duplicate_edge.json"))
        assert "min bound:        0" in out
        assert "{3,4,5}: 2" in out

    def test_surplus(self, capsys, input_path):
        code, out, _ = run(capsys, "surplus", "-i", str(input_path / "duplicate_edge.json"), "--json")
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["surplus"] == 2
        assert data["hall_criterion"] is False
        assert data["killing_triple"] == [1, 2, 3]


class TestVerify:

    def test_two_solutions_tight(self, capsys, input_path):
        code, out, _ = run(capsys, "verify", "-i", str(input_path / "two_solutions.json"))
        assert code == EXIT_OK
        assert out.strip().splitlines()[-1] == "TIGHT"
        assert "✗" not in out

    def test_duplicate_edge_gap(self, capsys, input_path):
        code, out, _ = run(capsys, "verify", "-i", str(input_path / "duplicate_edge.json"), "--triple", "3,4,5")
        assert code == EXIT_OK
        assert out.strip().splitlines()[-1] == "GAP 2"

    def test_duplicate_edge_minimized(self, capsys, input_path):
        code, out, _ = run(capsys, "verify", "-i", str(input_path / "duplicate_edge.json"), "--json")
        assert code == EXIT_OK
        data = json.loads(out)
        assert data["flag"] == "TIGHT"
        assert data["min_bound"] == 0
        assert data["disagreements"] == []
        by_triple = {tuple(r["triple"]): r for r in data["triples"]}
        assert by_triple[(3, 4, 5)]["cohomology"] == 2
        assert by_triple[(1, 2, 3)]["cohomology"] is None

    def test_unbalanced(self, capsys, tmp_path):
        path = tmp_path / "unbalanced.json"
        path.write_text('{"n":6,"edges":[[1,2,3,4]]}')
        assert run(capsys, "verify", "-i", str(path))[0] == EXIT_INPUT


class TestExperimentAndSearch:

    def test_experiment_writes_artifacts(self, capsys, tmp_path):
        target = tmp_path / "run.csv"
        code, out, _ = run(capsys, "experiment", "--n", "6", "--samples", "10", "--seed", "3",
                           "--no-timings", "--histogram", "text", "-o", str(target))
        assert code == EXIT_OK
        assert target.exists()
        assert (tmp_path / "run.summary.json").exists()
        assert (tmp_path / "run.histogram.txt").exists()
        assert "✓ Records saved to" in out
        assert len(target.read_text().splitlines()) == 11

    def test_experiment_is_byte_stable(self, capsys, tmp_path):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        for target in (first, second):
            run(capsys, "experiment", "--n", "6", "--samples", "10", "--seed", "3", "--no-timings", "-o", str(target))
        assert first.read_bytes() == second.read_bytes()

    def test_experiment_exhausted(self, capsys, tmp_path):
        target = tmp_path / "partial.csv"
        code, _, err = run(capsys, "experiment", "--n", "5", "--samples", "50", "--max-attempts", "50",
                           "--no-timings", "-o", str(target))
        assert code == EXIT_BUDGET
        assert "accepted" in err
        assert target.exists()

    def test_experiment_invalid_config(self, capsys, tmp_path):
        code, _, _ = run(capsys, "experiment", "--n", "4", "-o", str(tmp_path / "x.csv"))
        assert code == EXIT_INPUT

    def test_search(self, capsys):
        code, out, _ = run(capsys, "search", "--n", "7", "--samples", "20", "--seed", "7")
        assert code == EXIT_OK
        assert "no counterexamples found" in out

    def test_experiment_json_stdout(self, capsys, tmp_path):
        code, out, err = run(capsys, "experiment", "--n", "6", "--samples", "5", "--seed", "3", "--no-timings",
                             "--histogram", "text", "--json", "-o", str(tmp_path / "run.csv"))
        assert code == EXIT_OK
        assert json.loads(out)["accepted"] == 5
        assert "✓ Records saved to" in err

    def test_search_json_empty(self, capsys):
        code, out, _ = run(capsys, "search", "--n", "7", "--samples", "5", "--seed", "7", "--json")
        assert code == EXIT_OK
        assert json.loads(out) == []


class TestSearchHits:

    @pytest.fixture
    def zero_degree(self, monkeypatch, tmp_path):
        monkeypatch.setattr("run_xratio.OUTPUT_PATH", tmp_path)
        monkeypatch.setattr("src.experiment_module.cross_ratio_degree", lambda h, timeout=None: 0)
        monkeypatch.setattr("src.experiment_module.degree_with_choice", lambda h, e, pair: 0)
        return tmp_path

    def test_hits_saved_to_default_path(self, capsys, zero_degree):
        code, out, _ = run(capsys, "search", "--n", "7", "--samples", "3", "--seed", "7", "--json")
        assert code == EXIT_OK
        hits = json.loads(out)
        assert len(hits) == 3
        saved = json.loads((zero_degree / "counterexamples_n7_seed7.json").read_text())
        assert saved == hits
        assert all(len(hit["edges"]) == 4 for hit in hits)

    def test_hits_printed_as_text(self, capsys, zero_degree):
        code, out, _ = run(capsys, "search", "--n", "7", "--samples", "2", "--seed", "7")
        assert code == EXIT_OK
        assert out.count("COUNTEREXAMPLE") == 2
        assert "✓ Counterexamples saved to" in out

    def test_recheck_mismatch_exits_one(self, capsys, zero_degree, monkeypatch):
        monkeypatch.setattr("src.experiment_module.degree_with_choice", lambda h, e, pair: 1)
        code, _, err = run(capsys, "search", "--n", "7", "--samples", "2", "--seed", "7")
        assert code == EXIT_DISAGREEMENT
        assert "pivot" in err
