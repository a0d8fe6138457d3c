import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from dhtlab import operators
from dhtlab.cli import main


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def usage_error(*argv):
    with pytest.raises(SystemExit) as exc:
        main(list(argv), out=io.StringIO())
    return exc.value.code


@pytest.fixture
def corrupted_kernel(monkeypatch):
    """H with a wrong weight at m = 2; every identity touching H should notice."""
    real = operators._kernel_exact

    def bent(tag, t, m):
        if tag == "H" and m == 2:
            return (Fraction(1, 2), 1)
        return real(tag, t, m)

    monkeypatch.setattr(operators, "_kernel_exact", bent)


class TestVerify:
    def test_product_rule_hundred_exact_lines(self):
        code, text = run("verify", "product-rule", "--cases", "100", "--seed", "7")
        lines = [ln for ln in text.splitlines() if ln.startswith("EXACT")]
        assert code == 0 and len(lines) == 100
        assert all(ln.endswith(")") and " PASS " in ln for ln in lines)

    def test_fixed_point_grid(self):
        code, text = run("verify", "fixed-point", "--k-max", "20", "--p-max", "64")
        assert code == 0
        assert text.rstrip().endswith("checks passed")

    def test_fixed_point_from_k_fails(self):
        code, text = run("verify", "fixed-point", "--k-max", "3", "--p-max", "8", "--p-from", "k")
        assert code == 1
        assert "k=2 p=3" in text and "FAIL" in text

    @pytest.mark.parametrize(
        "suite",
        ["decomposition", "fourier", "factorization", "interleaving", "sign-identity",
         "partial-fraction", "cot-identity", "building-bound"],
    )
    def test_suites_pass(self, suite):
        code, _ = run("verify", suite, "--cases", "5")
        assert code == 0

    def test_all_passes(self):
        code, text = run("verify", "all", "--cases", "3", "--k-max", "4", "--p-max", "16")
        assert code == 0
        for kind in ("EXACT", "CERTIFIED", "NUMERIC"):
            assert kind in text

    def test_all_fails_on_corrupted_kernel(self, corrupted_kernel):
        code, text = run("verify", "all", "--cases", "3", "--k-max", "4", "--p-max", "16")
        assert code == 1
        assert "FAIL" in text

    def test_json_and_csv(self):
        code, text = run("verify", "interleaving", "--cases", "4", "--format", "json", "--no-timestamp")
        doc = json.loads(text)
        assert code == 0 and doc["passed"] and len(doc["checks"]) == 4
        assert [c["case"] for c in doc["checks"]] == [0, 1, 2, 3]
        assert "timestamp" not in doc
        _, text = run("verify", "interleaving", "--cases", "4", "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(text)))
        assert list(rows[0]) == ["suite", "case", "kind", "passed", "residual", "detail"]

    def test_timestamp_present_by_default(self):
        _, text = run("verify", "partial-fraction", "--format", "json")
        assert "timestamp" in json.loads(text)

    def test_sequence_file(self, tmp_path):
        path = tmp_path / "a.json"
        path.write_text("[[0, 1, 1], [1, -2, 3]]")
        code, text = run("verify", "factorization", "--sequence", str(path), "--M", "20000")
        assert code == 0 and "26/26" in text

    def test_pool_matches_serial(self):
        args = ("verify", "product-rule", "--cases", "6", "--seed", "3", "--format", "json", "--no-timestamp")
        assert run(*args)[1] == run(*args, "--jobs", "2")[1]

    @pytest.mark.parametrize(
        "argv",
        [
            ("verify", "nope"),
            ("verify", "product-rule", "--cases", "0"),
            ("verify", "product-rule", "--window", "5", "-5"),
            ("verify", "fourier", "--quad-points", "8"),
            ("verify", "factorization", "--sequence", "/nonexistent.json"),
            ("verify", "partial-fraction", "--precision", "20"),
        ],
    )
    def test_usage_errors(self, argv):
        assert usage_error(*argv) == 2

    def test_bad_sequence_file(self, tmp_path):
        path = tmp_path / "dup.json"
        path.write_text("[[0, 1, 1], [0, 2, 1]]")
        assert usage_error("verify", "factorization", "--sequence", str(path)) == 2


class TestSkeletons:
    def test_listing(self):
        code, text = run("skeletons", "3")
        assert code == 0
        assert [ln.split()[0] for ln in text.splitlines()] == [
            "{{{1},2},3}", "{{1,{2}},3}", "{{1},2,{3}}", "{1,{2},{3}}",
        ]

    def test_count(self):
        assert run("skeletons", "5", "--count-only") == (0, "16\n")

    def test_norms_column(self):
        code, text = run("skeletons", "2", "--p", "4", "--format", "json", "--no-timestamp")
        rows = json.loads(text)["skeletons"]
        assert code == 0 and all(r["building_norm"] == pytest.approx(2.41421356237) for r in rows)

    @pytest.mark.parametrize("k", ["0", "17"])
    def test_range(self, k):
        assert usage_error("skeletons", k) == 2


class TestDecompose:
    def test_k2(self):
        assert run("decompose", "2") == (0, "2*K[a*H[a]] + I[a^2]\n")

    def test_k3(self):
        code, text = run("decompose", "3")
        assert text.strip() == "2*K[a*H[a*H[a]]] + 2*K[a*H[a]^2] + 2*I[a^2*H[a]] + K[a]*I[a^2]"

    def test_k4_json(self):
        code, text = run("decompose", "4", "--format", "json", "--no-timestamp")
        doc = json.loads(text)
        assert code == 0 and doc["equal"] and len(doc["terms"]) == 8

    def test_latex(self):
        _, text = run("decompose", "2", "--format", "latex")
        assert text.strip() == r"2 \cdot \mathcal{K}[a_n \cdot \mathcal{H}[a_n]] + \mathcal{I}[a_n^2]"

    def test_range(self):
        assert usage_error("decompose", "11") == 2


class TestNorms:
    def test_p4_row(self):
        code, text = run("norms", "--p", "4", "--format", "json", "--no-timestamp")
        recs = {r["method"]: r for r in json.loads(text)["records"]}
        assert code == 0
        assert recs["sharp"]["bound"] == pytest.approx(2.41421356, abs=1e-8)
        assert recs["theorem"]["bound"] == pytest.approx(2.41421356, abs=1e-8)
        assert recs["gohberg_krupnik"]["bound"] == pytest.approx(2.41421356, abs=1e-8)
        assert recs["titchmarsh"]["bound"] == pytest.approx(4.2056, abs=1e-4)
        assert recs["riesz"]["bound"] == pytest.approx(5.7708, abs=1e-4)

    def test_p2_all_one(self):
        _, text = run("norms", "--p", "2", "--format", "json")
        assert all(r["bound"] == pytest.approx(1) for r in json.loads(text)["records"])

    def test_p3_conjectured(self):
        _, text = run("norms", "--p", "3", "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(text)))
        assert rows == [
            {"method": "sharp", "p": "3.0", "k": "", "bound": rows[0]["bound"], "sharp": rows[0]["sharp"],
             "residual": "0.0", "status": "CONJECTURED"}
        ]
        assert float(rows[0]["bound"]) == pytest.approx(3**0.5)

    def test_bad_p(self):
        assert usage_error("norms", "--p", "0.5") == 2


class TestEstimate:
    def test_json_report_deterministic(self):
        args = ("estimate", "--op", "K", "--p", "2", "--N", "256", "--iters", "20", "--format", "json", "--no-timestamp")
        a, b = run(*args), run(*args)
        assert a == b
        doc = json.loads(a[1])
        assert list(doc)[:8] == ["op", "p", "N", "iters", "seed", "best_ratio", "sharp", "gap"]
        assert "seconds" not in doc

    def test_curve_file(self, tmp_path):
        path = tmp_path / "curve.csv"
        code, _ = run("estimate", "--op", "I", "--p", "3", "--N", "128", "--iters", "10", "--curve", str(path))
        rows = list(csv.reader(path.open()))
        assert code == 0 and rows[0] == ["N", "iteration", "ratio"] and len(rows) == 41

    def test_doubling(self):
        code, text = run("estimate", "--op", "K", "--p", "4", "--N", "64", "--iters", "10", "--doubling", "3", "--format", "json")
        runs = json.loads(text)["runs"]
        assert code == 0 and [r["N"] for r in runs] == [64, 128, 256]

    def test_uncovered_p_has_no_gap(self):
        _, text = run("estimate", "--op", "K", "--p", "3", "--N", "64", "--iters", "5", "--format", "json")
        doc = json.loads(text)
        assert doc["sharp"] is None and doc["gap"] is None

    @pytest.mark.parametrize(
        "argv",
        [("--op", "Q"), ("--p", "1"), ("--N", "0"), ("--starts", "bogus"), ("--op", "T")],
    )
    def test_usage_errors(self, argv):
        assert usage_error("estimate", *argv) == 2


def test_console_script_and_module():
    out = subprocess.run([sys.executable, "-m", "dhtlab", "skeletons", "4", "--count-only"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout == "8\n"
    out = subprocess.run(["dhtlab", "skeletons", "0"], capture_output=True, text=True)
    assert out.returncode == 2
