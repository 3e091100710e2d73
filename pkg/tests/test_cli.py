import csv
import json
import os
from pathlib import Path

import numpy as np
import pytest

from adaptgof import RandomSource, parse_formula
from adaptgof.cli import CliError, main, parse_csv
from adaptgof.sim import generate, make_setting

FIXTURES = Path(__file__).parent / "fixtures"


def write_dataset_csv(dataset, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        names = list(dataset.columns)
        writer.writerow(["y"] + names)
        for i in range(dataset.n):
            writer.writerow([dataset.y[i]] + [repr(float(dataset.columns[n][i]))
                                              for n in names])


def setting1_csv(tmp_path, n=1000, seed=21):
    spec = make_setting("1", n, beta3=0.651)
    ds = generate(spec, RandomSource(seed).child("data"))
    path = tmp_path / "s1.csv"
    write_dataset_csv(ds, path)
    return str(path)


class TestParseCsv:
    def test_three_row_file(self, tmp_path):
        path = tmp_path / "tiny.csv"
        path.write_text("y,x\n1,0.5\n0,1.5\n1,2.5\n")
        ds = parse_csv(str(path), "y")
        assert ds.n == 3
        assert ds.kinds == {"x": "continuous"}

    def test_non_binary_response_names_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("y,x\n1,0.5\n2,1.5\n")
        with pytest.raises(CliError, match="row 3"):
            parse_csv(str(path), "y")

    def test_missing_values_name_rows(self, tmp_path):
        path = tmp_path / "gaps.csv"
        path.write_text("y,x\n1,0.5\n0,\n,2.0\n")
        with pytest.raises(CliError, match="rows: 3, 4"):
            parse_csv(str(path), "y")

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(CliError, match="empty"):
            parse_csv(str(path), "y")

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("y,x\n1,0.5\n0\n")
        with pytest.raises(CliError, match="row 3"):
            parse_csv(str(path), "y")

    def test_mixed_types_golden_manifest(self):
        # hand-classified: age/bmi/visits numeric -> continuous,
        # smoker/city textual -> discrete
        ds = parse_csv(str(FIXTURES / "mixed_types.csv"), "outcome")
        assert ds.kinds == {
            "age": "continuous",
            "bmi": "continuous",
            "smoker": "discrete",
            "city": "discrete",
            "visits": "continuous",
        }
        assert ds.n == 8
        assert ds.y.tolist() == [1, 0, 0, 1, 1, 0, 1, 0]

    def test_override_to_discrete(self):
        ds = parse_csv(str(FIXTURES / "mixed_types.csv"), "outcome",
                       overrides={"visits": "discrete"})
        assert ds.kinds["visits"] == "discrete"

    def test_bad_continuous_override(self):
        with pytest.raises(CliError, match="city"):
            parse_csv(str(FIXTURES / "mixed_types.csv"), "outcome",
                      overrides={"city": "continuous"})

    def test_unknown_response(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("y,x\n1,0.5\n0,1.0\n")
        with pytest.raises(CliError, match="not found"):
            parse_csv(str(path), "label")


class TestFormulaRoundTrip:
    def test_canonical_is_fixed_point(self):
        for text in ("x1 + x2", "x1+x2+x1*x2", "x2 * x1 + x7^4", "a + a + b"):
            formula = parse_formula(text)
            canon = formula.canonical()
            assert parse_formula(canon).canonical() == canon

    def test_product_operands_sorted(self):
        assert parse_formula("b*a").canonical() == "a*b"


class TestTestCommand:
    def test_underfit_model_rejects(self, tmp_path, capsys):
        path = setting1_csv(tmp_path)
        out = tmp_path / "report.json"
        code = main(["test", "--input", path, "--response", "y",
                     "--formula", "x1 + x2", "--seed", "5",
                     "--output", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["decision"]["reject"] is True
        assert payload["covariate_ranking"][0]["covariate"] == "x3"
        assert "REJECT" in capsys.readouterr().out

    def test_correct_model_accepts(self, tmp_path, capsys):
        path = setting1_csv(tmp_path)
        out = tmp_path / "report.json"
        code = main(["test", "--input", path, "--response", "y",
                     "--formula", "x1 + x2 + x3", "--seed", "5",
                     "--output", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["decision"]["reject"] is False

    def test_reports_are_byte_identical(self, tmp_path):
        path = setting1_csv(tmp_path, n=200)
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        args = ["test", "--input", path, "--response", "y",
                "--formula", "x1 + x2", "--splits", "20", "--seed", "11"]
        assert main(args + ["--output", str(out1)]) == 0
        assert main(args + ["--output", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_operational_error_exit_code(self, tmp_path, capsys):
        code = main(["test", "--input", str(tmp_path / "nope.csv"),
                     "--response", "y", "--formula", "x1"])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_env_var_seed(self, tmp_path, monkeypatch):
        path = setting1_csv(tmp_path, n=200)
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        monkeypatch.setenv("ADAPTGOF_SEED", "33")
        main(["test", "--input", path, "--response", "y", "--formula", "x1 + x2",
              "--splits", "10", "--output", str(out1)])
        main(["test", "--input", path, "--response", "y", "--formula", "x1 + x2",
              "--splits", "10", "--seed", "33", "--output", str(out2)])
        assert json.loads(out1.read_text()) == json.loads(out2.read_text())

    def test_bad_partition_flag(self, tmp_path, capsys):
        path = setting1_csv(tmp_path, n=200)
        code = main(["test", "--input", path, "--response", "y",
                     "--formula", "x1", "--partition", "bogus"])
        assert code == 1

    def test_score_partition_mode(self, tmp_path):
        spec = make_setting("1", 500, beta3=0.651)
        ds = generate(spec, RandomSource(44).child("data"))
        # inject a usable score column: the true probabilities
        from adaptgof.sim import score_injection, true_probabilities

        injected = score_injection(ds, true_probabilities(spec, ds))
        path = tmp_path / "scored.csv"
        write_dataset_csv(injected, path)
        out = tmp_path / "report.json"
        code = main(["test", "--input", str(path), "--response", "y",
                     "--formula", "x1 + x2", "--partition", "score:score",
                     "--splits", "30", "--seed", "3", "--output", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["run_config"]["partition"] == "score:score"


class TestDiagnoseCommand:
    def test_prints_ranking(self, tmp_path, capsys):
        path = setting1_csv(tmp_path, n=500)
        code = main(["diagnose", "--input", path, "--response", "y",
                     "--formula", "x1 + x2", "--splits", "30", "--seed", "2",
                     "--top", "2"])
        assert code == 0
        out = capsys.readouterr().out
        assert "top covariates" in out
        assert "x3" in out


class TestHlCommand:
    def test_smoke(self, tmp_path, capsys):
        path = setting1_csv(tmp_path, n=500)
        out = tmp_path / "hl.json"
        code = main(["hl", "--input", path, "--response", "y",
                     "--formula", "x1 + x2 + x3", "--groups", "10",
                     "--output", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["df"] == 8
        assert 0.0 <= payload["p_value"] <= 1.0
        assert "statistic" in capsys.readouterr().out


class TestExperimentCommand:
    def test_structural_csv_both_variants(self, tmp_path, capsys):
        outdir = tmp_path / "res"
        code = main(["experiment", "--setting", "2", "--reps", "2",
                     "--splits", "5", "--n", "200", "--seed", "7",
                     "--outdir", str(outdir)])
        assert code == 0
        rows = list(csv.DictReader(open(outdir / "rates.csv")))
        variants = {r["variant"] for r in rows}
        methods = {r["method"] for r in rows}
        assert variants == {"beta3=0.5", "beta3=0.8"}
        assert methods == {"hl-a", "hl-b", "bag-a", "bag-b"}
        manifest = json.loads((outdir / "manifest.json").read_text())
        assert manifest["run_config"]["seed"] == 7
        assert "config_hash" in manifest

    def test_outputs_byte_identical(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        args = ["experiment", "--setting", "4", "--reps", "2", "--splits", "5",
                "--n", "200", "--seed", "9", "--methods", "bag-b"]
        assert main(args + ["--outdir", str(out1)]) == 0
        assert main(args + ["--outdir", str(out2)]) == 0
        assert (out1 / "rates.csv").read_bytes() == (out2 / "rates.csv").read_bytes()
        assert (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()

    def test_zero_reps_is_usage_error(self, tmp_path, capsys):
        code = main(["experiment", "--setting", "1", "--reps", "0",
                     "--outdir", str(tmp_path)])
        assert code == 1
        assert "reps" in capsys.readouterr().err

    def test_unknown_setting(self, tmp_path, capsys):
        code = main(["experiment", "--setting", "12", "--reps", "2",
                     "--outdir", str(tmp_path)])
        assert code == 1
        assert "unknown setting" in capsys.readouterr().err

    def test_power_at_paper_scale(self, tmp_path):
        # missing main effect, n=500: the adaptive test rejects nearly always
        outdir = tmp_path / "power"
        code = main(["experiment", "--setting", "1", "--reps", "200",
                     "--n", "500", "--beta3", "0.651", "--methods", "bag-b",
                     "--seed", "1", "--outdir", str(outdir)])
        assert code == 0
        rows = list(csv.DictReader(open(outdir / "rates.csv")))
        assert float(rows[0]["rate"]) >= 0.97
