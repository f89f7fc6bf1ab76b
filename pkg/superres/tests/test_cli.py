"""
End-to-end tests for the superres command line
"""
import csv
import json

import numpy as np
import pytest

from superres.cli import EXIT_INVALID, EXIT_NOT_UNIQUE, EXIT_OK, main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip().startswith("{") else out)


def observation_coeffs(payload):
    return np.array([complex(re, im) for re, im in payload["y"]])


@pytest.mark.integration
class TestGenerate:
    """generate command."""

    @pytest.mark.parametrize("preset", ["alternating_comb", "footnote8"])
    def test_alternating_comb(self, capsys, preset):
        code, payload = run(capsys, "generate", "--preset", preset, "--kc", "2")
        assert code == EXIT_OK
        np.testing.assert_allclose(observation_coeffs(payload["observation"]), [0, 0, 4], atol=1e-12)
        assert len(payload["measure"]["atoms"]) == 4
        assert payload["manifest"]["command"] == "generate"

    def test_explicit_atoms(self, capsys):
        code, payload = run(capsys, "generate", "--atoms", "0:1", "--kc", "2")
        assert code == EXIT_OK
        np.testing.assert_allclose(observation_coeffs(payload["observation"]), [1, 1, 1])

    def test_random_is_reproducible(self, capsys):
        _, first = run(capsys, "generate", "--random-nonneg", "3", "--kc", "8", "--seed", "7")
        _, second = run(capsys, "generate", "--random-nonneg", "3", "--kc", "8", "--seed", "7")
        assert first["measure"] == second["measure"]
        assert first["observation"] == second["observation"]
        assert first["manifest"]["seed"] == 7

    def test_files(self, capsys, tmp_path):
        measure_path, y_path = tmp_path / "w.json", tmp_path / "y.json"
        code = main(["generate", "--atoms", "0:1,3.14159:-0.5", "--kc", "3",
                     "--measure-out", str(measure_path), "--y-out", str(y_path)])
        assert code == EXIT_OK
        assert json.loads(y_path.read_text())["kc"] == 3
        assert len(json.loads(measure_path.read_text())["atoms"]) == 2

    def test_malformed_atoms(self, capsys):
        code, _ = run(capsys, "generate", "--atoms", "0-1", "--kc", "2")
        assert code == EXIT_INVALID

    def test_negative_seed(self, capsys):
        code, _ = run(capsys, "generate", "--random-signed", "2", "--kc", "4", "--seed", "-1")
        assert code == EXIT_INVALID


@pytest.mark.integration
class TestClassify:
    """classify command and its exit codes."""

    def test_indefinite(self, capsys, write_observation):
        code, payload = run(capsys, "classify", str(write_observation([0, 0, 4])))
        assert code == EXIT_OK
        assert payload["regime"] == "Indefinite"

    def test_definite_exit_code(self, capsys, write_observation):
        code, payload = run(capsys, "classify", str(write_observation([1, 0, 0])))
        assert code == EXIT_NOT_UNIQUE
        assert payload["regime"] == "PositiveDefinite"

    def test_malformed_json(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code, _ = run(capsys, "classify", str(bad))
        assert code == EXIT_INVALID

    def test_complex_y0(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"kc": 1, "y": [[1.0, 0.5], [0.0, 0.0]]}))
        code, _ = run(capsys, "classify", str(bad))
        assert code == EXIT_INVALID

    def test_length_mismatch(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"kc": 2, "y": [[1.0, 0.0]]}))
        code, _ = run(capsys, "classify", str(bad))
        assert code == EXIT_INVALID

    def test_missing_file(self, capsys, tmp_path):
        code, _ = run(capsys, "classify", str(tmp_path / "absent.json"))
        assert code == EXIT_INVALID

    def test_accepts_generated_file(self, capsys, tmp_path):
        y_path = tmp_path / "y.json"
        main(["generate", "--atoms", "0:1", "--kc", "2", "--y-out", str(y_path)])
        capsys.readouterr()
        code, payload = run(capsys, "classify", str(y_path))
        assert code == EXIT_OK
        assert payload["regime"] == "PsdRankDeficient"
        assert payload["rank"] == 1


@pytest.mark.integration
class TestSolve:
    """solve command."""

    def test_alternating_comb(self, capsys, write_observation):
        code, payload = run(capsys, "solve", str(write_observation([0, 0, 4])))
        assert code == EXIT_OK
        assert payload["kind"] == "UniqueSigned"
        assert len(payload["solution"]["atoms"]) == 4
        assert payload["min_tv"] == pytest.approx(4.0, abs=1e-6)
        assert payload["certificate_check"]["nonconstant"] is True

    def test_single_atom(self, capsys, write_observation):
        code, payload = run(capsys, "solve", str(write_observation([1, 1, 1])))
        assert code == EXIT_OK
        assert payload["kind"] == "UniqueNonnegative"
        assert len(payload["solution"]["atoms"]) == 1

    def test_oracle_on_definite_data(self, capsys, write_observation):
        code, payload = run(capsys, "solve", str(write_observation([2, 1])), "--oracle")
        assert code == EXIT_NOT_UNIQUE
        assert payload["kind"] == "InfinitelyManyPositive"
        assert payload["min_tv"] == pytest.approx(2.0)
        assert abs(payload["oracle_gap"]) <= 1e-4
        assert len(payload["samples"]) == 2

    def test_output_file(self, capsys, write_observation, tmp_path):
        out = tmp_path / "report.json"
        code = main(["solve", str(write_observation([1, 1, 1])), "--certify", "--out", str(out)])
        assert code == EXIT_OK
        report = json.loads(out.read_text())
        assert report["certificate_check"]["sup_norm_ok"] is True
        assert report["manifest"]["inputs"]


@pytest.mark.integration
class TestGridSolve:
    """grid-solve command."""

    def test_piecewise_constant_output(self, capsys, write_observation, tmp_path):
        trace = tmp_path / "trace.csv"
        code, payload = run(
            capsys, "grid-solve", str(write_observation([0, 0, 4])),
            "--m", "1", "--p", "64", "--lambda", "1e-3", "--points", "256", "--trace", str(trace),
        )
        assert code == EXIT_OK
        assert payload["mean"] == pytest.approx(0.0, abs=1e-12)
        assert payload["lambda"] == 1e-3
        assert len(payload["c"]) == 64
        assert len(payload["reconstruction"]["f"]) == 256
        values = np.array(payload["reconstruction"]["f"])
        assert set(np.round(values, 9)) <= set(np.round(payload["c"], 9))
        with open(trace) as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["iter", "objective", "primal_res", "dual_res"]
        assert len(rows) - 1 == payload["iterations"]
        assert (tmp_path / "trace.csv.manifest.json").exists()

    def test_p_below_m(self, capsys, write_observation):
        code, _ = run(capsys, "grid-solve", str(write_observation([1, 0.5])), "--m", "3", "--p", "2", "--lambda", "1e-3")
        assert code == EXIT_INVALID

    def test_nonpositive_lambda(self, capsys, write_observation):
        code, _ = run(capsys, "grid-solve", str(write_observation([1, 0.5])), "--m", "2", "--p", "16", "--lambda", "0")
        assert code == EXIT_INVALID


@pytest.mark.integration
class TestBenchConvergence:
    """bench-convergence command."""

    def test_small_run(self, capsys, tmp_path):
        out = tmp_path / "bench.csv"
        code = main(["bench-convergence", "--p-list", "16,32", "--runs", "1", "--out", str(out)])
        assert code == EXIT_OK
        assert capsys.readouterr().out == ""
        with open(out) as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["P", "mean_linf_error", "std_linf_error", "runs", "slope"]
        assert [int(r[0]) for r in rows[1:]] == [16, 32]
        summary = json.loads((tmp_path / "bench.csv.summary.json").read_text())
        assert float(rows[1][4]) == pytest.approx(summary["slope"])

    def test_slope_on_stdout_without_out(self, capsys):
        code = main(["bench-convergence", "--p-list", "16,32", "--runs", "1"])
        assert code == EXIT_OK
        rows = list(csv.reader(capsys.readouterr().out.splitlines()))
        assert rows[0][-1] == "slope"
        assert len({r[4] for r in rows[1:]}) == 1
        assert np.isfinite(float(rows[1][4]))

    def test_bad_p_list(self, capsys):
        code, _ = run(capsys, "bench-convergence", "--p-list", "16,abc", "--runs", "1")
        assert code == EXIT_INVALID

    def test_m1_rejected(self, capsys):
        code, _ = run(capsys, "bench-convergence", "--m", "1", "--p-list", "16", "--runs", "1")
        assert code == EXIT_INVALID
