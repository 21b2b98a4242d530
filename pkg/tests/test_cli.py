from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import pytest

from quadtwist.arith import Discriminant
from quadtwist.checks import CheckResult
from quadtwist.cli import main
from quadtwist.maps import save_map_file
from quadtwist.prop1 import family_member
from quadtwist.report import (
    ConfigError,
    SuiteConfig,
    VerificationReport,
    emit_report,
    report_to_json,
    run_suite,
)
from quadtwist.schwarz import build_tau

SCHEMA = json.loads((Path(__file__).parent.parent / "docs" / "report.schema.json").read_text())
K = Discriminant(2)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestExitCodes:
    def test_square_alpha(self, capsys):
        code, out, err = run(capsys, "--alpha", "9/4")
        assert code == 2 and "alpha is a square" in err and out == ""

    def test_malformed_alpha(self, capsys):
        assert run(capsys, "--alpha", "two")[0] == 2

    def test_degree_bound_out_of_range(self, capsys):
        assert run(capsys, "--suite", "arith", "--degree-bound", "13")[0] == 2

    def test_missing_map_file(self, capsys, tmp_path):
        assert run(capsys, "--suite", "arith", "--map", str(tmp_path / "nope.json"))[0] == 2

    def test_single_failing_check(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        save_map_file(family_member(K, K(1, 1)), path)
        code, out, _ = run(capsys, "--suite", "arith", "--map", str(path))
        assert code == 1
        assert "OVERALL FAIL" in out

    def test_good_map(self, capsys, tmp_path):
        path = tmp_path / "tau.json"
        save_map_file(build_tau(K), path)
        code, out, _ = run(capsys, "--suite", "arith", "--map", str(path))
        assert code == 0 and "CHECK map[tau].involution" in out

    def test_noncanonical_map(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        save_map_file(build_tau(K), path)
        path.write_text(path.read_text().replace('"-1"', '"-2/2"', 1))
        code, _, err = run(capsys, "--suite", "arith", "--map", str(path))
        assert code == 2 and "non-canonical rational" in err


class TestSuites:
    def test_selection(self, capsys):
        code, out, _ = run(capsys, "--alpha", "-1", "--suite", "schwarz", "--no-timing")
        assert code == 0
        assert "CHECK involution[tau]" in out
        assert "twist." not in out and "prop1." not in out
        assert "CHECK arith.discriminant" in out

    def test_dependency_order(self):
        rep = run_suite(SuiteConfig(alpha=3, suites=("prop1", "twist", "schwarz"), degree_bound=3))
        names = [c.name for c in rep.checks]
        assert names.index("involution[tau]") < names.index("twist.E0") < names.index("prop1.eliminate")

    def test_assumptions_never_flip_status(self):
        rep = VerificationReport(None, [CheckResult("a", "x", "assumption")])
        assert rep.overall == "pass" and rep.exit_code == 0

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            SuiteConfig(alpha=4).validate()


class TestReport:
    def test_empty_report(self):
        text = emit_report(VerificationReport(None))
        assert text.splitlines() == ["quadtwist verify", "STATUS no checks run"]

    def test_text_lines(self, capsys):
        _, out, _ = run(capsys, "--suite", "arith")
        lines = out.splitlines()
        assert lines[0].startswith("quadtwist verify alpha=2")
        assert all(line.startswith("CHECK ") and line.endswith("s)") for line in lines[1:-1])
        assert lines[-1] == "OVERALL PASS (6 pass, 0 fail, 0 assumption)"

    def test_json_schema_and_determinism(self, capsys):
        argv = ("--suite", "prop1", "--suite", "arith", "--degree-bound", "4", "--format", "json", "--no-timing", "--trace")
        _, first, _ = run(capsys, *argv)
        _, second, _ = run(capsys, *argv)
        assert first == second
        data = json.loads(first)
        jsonschema.validate(data, SCHEMA)
        assert data["trace"]["degree_bound"] == 4
        assert all("wall_time" not in c for c in data["checks"])

    def test_timing_included_by_default(self):
        rep = run_suite(SuiteConfig(alpha=2, suites=("arith",)))
        data = report_to_json(rep)
        jsonschema.validate(data, SCHEMA)
        assert all("wall_time" in c for c in data["checks"])

    def test_rationals_are_strings(self):
        rep = run_suite(SuiteConfig(alpha=-3, suites=("arith",)))
        data = report_to_json(rep, timing=False)
        assert data["config"]["alpha"] == "-3"
        assert data["checks"][0]["details"]["alpha"] == "-3"
