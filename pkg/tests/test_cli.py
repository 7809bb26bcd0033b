import json
import subprocess
import sys

import numpy as np
import pytest

from riskscope.cli import main
from riskscope.jsonio import dist_dumps, dist_loads
from riskscope import (
    DiscreteDistribution,
    TailSpec,
    es,
    var,
)


def uniform_tail_json(c=0.0, d=5.0, alpha=0.95):
    h = (1.0 - alpha) / (d - c)
    return dist_dumps(TailSpec(alpha=alpha, segments=((c, h), (d, h))))


def rising_tail_json(c, d, alpha=0.95):
    return dist_dumps(
        TailSpec(alpha=alpha, segments=((c, 0.0), (d, 2.0 * (1.0 - alpha) / (d - c))))
    )


@pytest.fixture
def fig2_x1(tmp_path):
    p = tmp_path / "fig2_x1.json"
    p.write_text(uniform_tail_json(0.0, 5.0))
    return p


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCompute:
    def test_values_on_the_first_quantile_family_member(self, capsys, fig2_x1):
        code, out, _ = run_cli(
            capsys, "compute", "--dist", str(fig2_x1), "--measures", "es95,ml"
        )
        assert code == 0
        (report,) = json.loads(out)
        values = {row["kind"]: row["value"] for row in report["entries"]}
        assert values["es"] == pytest.approx(2.5, abs=1e-12)
        assert values["ml"] == 5.0
        assert all(row["method"] == "closed_form" for row in report["entries"])

    def test_point_mass_maximum(self, capsys, tmp_path):
        p = tmp_path / "point.json"
        p.write_text(dist_dumps(DiscreteDistribution(atoms=((0.0, 1.0),))))
        code, out, _ = run_cli(capsys, "compute", "--dist", str(p), "--measures", "ml")
        assert code == 0
        (report,) = json.loads(out)
        assert report["entries"][0]["value"] == 0.0

    def test_monte_carlo_columns_match_the_closed_form(self, capsys, tmp_path):
        p = tmp_path / "rising.json"
        p.write_text(rising_tail_json(0.0, 10.0))
        code, out, _ = run_cli(
            capsys,
            "compute",
            "--dist",
            str(p),
            "--measures",
            "es95",
            "--mc",
            "1000000",
            "--seed",
            "7",
        )
        assert code == 0
        (report,) = json.loads(out)
        row = report["entries"][0]
        assert row["value"] == pytest.approx(20.0 / 3.0, abs=1e-12)
        assert abs(row["mc_value"] - 20.0 / 3.0) <= 3.0 * row["mc_se"]

    def test_malformed_file_reports_and_continues(self, capsys, tmp_path, fig2_x1):
        bad = tmp_path / "bad.json"
        bad.write_text("{broken")
        code, out, _ = run_cli(
            capsys,
            "compute",
            "--dist",
            str(bad),
            "--dist",
            str(fig2_x1),
            "--measures",
            "ml",
        )
        assert code == 2
        reports = json.loads(out)
        assert "error" in reports[0]
        assert reports[1]["entries"][0]["value"] == 5.0

    def test_unknown_flag_exits_two(self, fig2_x1):
        with pytest.raises(SystemExit) as err:
            main(["compute", "--dist", str(fig2_x1), "--measures", "ml", "--frob"])
        assert err.value.code == 2

    def test_bad_measure_grammar_exits_two(self, capsys, fig2_x1):
        code, _, err = run_cli(
            capsys, "compute", "--dist", str(fig2_x1), "--measures", "var"
        )
        assert code == 2
        assert "parse" in err or "level" in err


class TestSynthesize:
    CONSTRAINTS = {
        "alpha": 0.95,
        "targets": [
            {"kind": "var", "level": 0.95, "value": 0.0},
            {"kind": "es", "level": 0.95, "value": 5.0},
            {"kind": "ml", "value": 10.0},
        ],
    }

    def test_four_member_family(self, capsys, tmp_path):
        p = tmp_path / "constraints.json"
        p.write_text(json.dumps(self.CONSTRAINTS))
        code, out, _ = run_cli(
            capsys, "synthesize", "--constraints", str(p), "--count", "4", "--seed", "8"
        )
        assert code == 0
        doc = json.loads(out)
        assert len(doc["family"]["members"]) == 4
        assert doc["verification"]["passes"] is True
        # every emitted member re-parses and re-evaluates to the targets
        for member_doc in doc["family"]["members"]:
            member = dist_loads(json.dumps(member_doc))
            assert var(member, 0.95) == pytest.approx(0.0, abs=1e-9)
            assert es(member, 0.95) == pytest.approx(5.0, abs=1e-9)

    def test_contradictory_targets_exit_one(self, capsys, tmp_path):
        doc = dict(self.CONSTRAINTS)
        doc["targets"] = [
            {"kind": "var", "level": 0.95, "value": 0.0},
            {"kind": "es", "level": 0.95, "value": 12.0},
            {"kind": "ml", "value": 10.0},
        ]
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(doc))
        code, _, err = run_cli(
            capsys, "synthesize", "--constraints", str(p), "--count", "2"
        )
        assert code == 1
        assert "infeasible" in err
        assert "ES must be < ML" in err

    def test_unreachable_count_exits_one(self, capsys, tmp_path):
        p = tmp_path / "constraints.json"
        p.write_text(
            json.dumps(
                {
                    "alpha": 0.95,
                    "targets": [
                        {"kind": "var", "level": 0.95, "value": 0.0},
                        {"kind": "es", "level": 0.95, "value": 10.0},
                        {"kind": "ml", "value": 30.0},
                    ],
                }
            )
        )
        code, _, err = run_cli(
            capsys,
            "synthesize",
            "--constraints",
            str(p),
            "--count",
            "3",
            "--families",
            "falling_ramp",
        )
        assert code == 1
        assert "1" in err and "3" in err


class TestDistinguish:
    def write_fig2(self, tmp_path):
        files = []
        for name, text in [
            ("x1.json", uniform_tail_json(0.0, 5.0)),
            (
                "x2.json",
                dist_dumps(
                    TailSpec(alpha=0.95, segments=((0.0, 2.0 * 0.05 / 20.0), (20.0, 0.0)))
                ),
            ),
            ("x3.json", rising_tail_json(0.0, 10.0)),
        ]:
            p = tmp_path / name
            p.write_text(text)
            files.append(str(p))
        return files

    def test_worst_loss_separates(self, capsys, tmp_path):
        files = self.write_fig2(tmp_path)
        code, out, _ = run_cli(capsys, "distinguish", "--dists", *files, "--menu", "ml")
        assert code == 0
        doc = json.loads(out)
        assert doc["indistinguishable"] is False
        assert doc["separating"] == [{"kind": "ml"}]

    def test_average_alone_leaves_a_tied_pair(self, capsys, tmp_path):
        files = self.write_fig2(tmp_path)
        code, out, _ = run_cli(capsys, "distinguish", "--dists", *files, "--menu", "es95")
        assert code == 0
        doc = json.loads(out)
        assert doc["indistinguishable"] is True
        assert doc["unseparated_pairs"] == [[1, 2]]

    def test_single_file_exits_two(self, capsys, tmp_path):
        files = self.write_fig2(tmp_path)
        code, _, err = run_cli(capsys, "distinguish", "--dists", files[0])
        assert code == 2
        assert "at least 2" in err


class TestCoherenceVerb:
    def test_default_battery_flags_the_quantile(self, capsys):
        code, out, _ = run_cli(capsys, "coherence")
        assert code == 0
        doc = json.loads(out)
        by_key = {
            (r["measure"]["kind"], r["axiom"]): r["verdict"] for r in doc["results"]
        }
        assert by_key[("var", "subadditivity")] == "violated"
        assert by_key[("es", "subadditivity")] == "holds_on_cases"
        assert by_key[("var", "translation_invariance")] == "holds_on_cases"

    def test_corpus_summary(self, capsys):
        code, out, _ = run_cli(capsys, "coherence", "--corpus", "50", "--seed", "3")
        assert code == 0
        doc = json.loads(out)
        assert doc["corpus"]["checked"] == 50


class TestPaperVerb:
    def test_single_figure_table(self, capsys):
        code, out, _ = run_cli(capsys, "paper", "--figure", "6")
        assert code == 0
        doc = json.loads(out)
        assert doc["pass"] is True
        averages = {
            r["member"]: r["expected"] for r in doc["rows"] if r["measure"] == "es95"
        }
        assert averages == {
            "X1": pytest.approx(5 / 3),
            "X2": pytest.approx(2.5),
            "X3": pytest.approx(10 / 3),
        }
        assert {m["id"] for m in doc["members"]} == {"X1", "X2", "X3"}

    def test_all_fixtures(self, capsys):
        code, out, _ = run_cli(capsys, "paper", "--all")
        assert code == 0
        doc = json.loads(out)
        assert doc["all_pass"] is True

    def test_loans_by_id(self, capsys):
        code, out, _ = run_cli(capsys, "paper", "--id", "loans")
        assert code == 0
        assert json.loads(out)["pass"] is True

    def test_unknown_figure_exits_two(self, capsys):
        code, _, err = run_cli(capsys, "paper", "--figure", "42")
        assert code == 2
        assert "unknown fixture" in err


class TestPlot:
    def test_csv_preserves_tail_mass(self, capsys, tmp_path):
        src = tmp_path / "tail.json"
        src.write_text(uniform_tail_json(0.0, 10.0))
        out = tmp_path / "tail.csv"
        code, _, _ = run_cli(
            capsys, "plot", "--dist", str(src), "--out", str(out), "--format", "csv"
        )
        assert code == 0
        rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
        xs = np.array([float(a) for a, _ in rows])
        fs = np.array([float(b) for _, b in rows])
        assert abs(np.trapezoid(fs, xs) - 0.05) <= 1e-9

    def test_byte_identical_across_runs(self, capsys, tmp_path):
        src = tmp_path / "tail.json"
        src.write_text(rising_tail_json(-15.0, 15.0))
        outs = []
        for name in ("a.svg", "b.svg"):
            out = tmp_path / name
            code, _, _ = run_cli(
                capsys, "plot", "--dist", str(src), "--out", str(out), "--format", "svg"
            )
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_tick_labels_on_the_rising_member(self, capsys, tmp_path):
        src = tmp_path / "tail.json"
        src.write_text(rising_tail_json(-15.0, 15.0))
        out = tmp_path / "tail.svg"
        run_cli(capsys, "plot", "--dist", str(src), "--out", str(out), "--format", "svg")
        text = out.read_text()
        assert "var=-15" in text
        assert "es=5" in text
        assert "ml=15" in text

    def test_unwritable_path_exits_two(self, capsys, tmp_path):
        src = tmp_path / "tail.json"
        src.write_text(uniform_tail_json())
        code, _, err = run_cli(
            capsys,
            "plot",
            "--dist",
            str(src),
            "--out",
            str(tmp_path / "missing" / "x.svg"),
            "--format",
            "svg",
        )
        assert code == 2

    def test_discrete_input_rejected(self, capsys, tmp_path):
        src = tmp_path / "atoms.json"
        src.write_text(dist_dumps(DiscreteDistribution(atoms=((0.0, 1.0),))))
        code, _, err = run_cli(
            capsys, "plot", "--dist", str(src), "--out", str(tmp_path / "x.csv"),
            "--format", "csv",
        )
        assert code == 2
        assert "continuous" in err


class TestEndToEnd:
    def test_console_script_runs(self, tmp_path):
        src = tmp_path / "tail.json"
        src.write_text(uniform_tail_json(0.0, 5.0))
        proc = subprocess.run(
            [sys.executable, "-m", "riskscope", "compute", "--dist", str(src),
             "--measures", "var95,es95,ml"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        (report,) = json.loads(proc.stdout)
        values = {row["kind"]: row["value"] for row in report["entries"]}
        assert values == {"var": 0.0, "es": 2.5, "ml": 5.0}

    def test_seed_env_var_is_the_default(self, capsys, tmp_path, monkeypatch):
        src = tmp_path / "tail.json"
        src.write_text(uniform_tail_json(0.0, 10.0))
        outputs = []
        for _ in range(2):
            monkeypatch.setenv("RISKSCOPE_SEED", "31")
            code, out, _ = run_cli(
                capsys, "compute", "--dist", str(src), "--measures", "es95",
                "--mc", "5000",
            )
            assert code == 0
            outputs.append(out)
        assert outputs[0] == outputs[1]