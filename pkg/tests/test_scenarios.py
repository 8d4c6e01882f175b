"""
End-to-end scenario tests through the CLI entry point (src/main.py).

Each folder under tests/test_cases/ holds a ``config.cfg`` and an
``expected.json`` listing the exit code, the check verdicts and the CSV
tables the run must produce.
"""

from __future__ import annotations

import shutil
from pathlib import Path

import numpy as np
import pytest

from conftest import SCENARIO_ROOT, TEST_CASES_ROOT, load_json, read_csv_rows
from src.constants import CSV_SCHEMAS, EXIT_USAGE
from src.main import run


def _case_dirs() -> list[Path]:
    return sorted(p for p in TEST_CASES_ROOT.iterdir() if (p / "expected.json").exists())


def run_case(case_dir: Path, out_dir: Path, *extra: str) -> int:
    expected = load_json(case_dir / "expected.json")
    return run([expected["scenario"], "--config", str(case_dir / "config.cfg"), "--out", str(out_dir), *extra])


def manifest_checks(out_dir: Path) -> dict[str, dict]:
    return {c["name"]: c for c in load_json(out_dir / "manifest.json")["checks"]}


# ── golden cases ─────────────────────────────────────────────────────────

class TestGoldenCases:
    @pytest.mark.parametrize("case_dir", _case_dirs(), ids=lambda p: p.name)
    def test_case_matches_expected(self, case_dir, tmp_path):
        expected = load_json(case_dir / "expected.json")
        out = tmp_path / "out"
        assert run_case(case_dir, out) == expected["exit_code"]

        if not expected.get("manifest", True):
            assert not (out / "manifest.json").exists()
            return
        manifest = load_json(out / "manifest.json")
        assert manifest["scenario"] == expected["scenario"]
        verdicts = {name: check["passed"] for name, check in manifest_checks(out).items()}
        assert verdicts == expected["checks"]
        for table in expected["tables"]:
            assert (out / table).exists(), f"{case_dir.name}: missing {table}"
        if "error" in expected:
            assert manifest["error"]["type"] == expected["error"]
            assert not manifest["passed"]


# ── scenario specifics ───────────────────────────────────────────────────

class TestScenarioOutputs:
    def test_flat_focusing_margin_vanishes(self, tmp_path):
        assert run_case(TEST_CASES_ROOT / "focusing_minkowski", tmp_path) == 0
        margin = manifest_checks(tmp_path)["focusing_margin"]["value"]
        assert abs(margin) <= 1e-12

        comments, header, data = read_csv_rows(tmp_path / "focusing_sweep.csv")
        assert comments[0] == f"# schema=focusing_sweep v{CSV_SCHEMAS['focusing_sweep']}"
        col = header.index("theta_at_p")
        assert data[:, col].tolist() == pytest.approx([-2.0, -1.0, -0.5], rel=1e-12)

    def test_energy_condition_failure_is_reported(self, tmp_path):
        assert run_case(TEST_CASES_ROOT / "focusing_nec_violated", tmp_path) == 1
        checks = manifest_checks(tmp_path)
        assert checks["null_energy"]["value"] == pytest.approx(-1.0, rel=1e-6)
        assert "not asserted" in checks["null_energy"]["detail"]
        assert "focusing_margin" not in checks

    def test_flagged_violation_fails_margin_check(self, tmp_path, monkeypatch):
        from src.congruence import SupportConeReport
        from src.scenarios import geodesics

        def violated(model, p, K, r, control=None):
            return SupportConeReport(p=p, K=K, r=r, b_at_p=np.diag([-1.0, -1.0]) / r, theta_at_p=-2.0 / r - 0.1)

        monkeypatch.setattr(geodesics, "support_cone_at", violated)
        assert run_case(TEST_CASES_ROOT / "focusing_minkowski", tmp_path) == 1
        margin = manifest_checks(tmp_path)["focusing_margin"]
        assert not margin["passed"]
        assert margin["detail"] == "r=1, r=2, r=4"

    def test_horizon_b_norm(self, tmp_path):
        assert run_case(TEST_CASES_ROOT / "splitting_horizon", tmp_path) == 0
        assert manifest_checks(tmp_path)["max_B_norm"]["value"] <= 1e-7
        assert load_json(tmp_path / "manifest.json")["summary"]["model"] == "schwarzschild_ef"

    def test_failure_report(self, tmp_path):
        assert run_case(TEST_CASES_ROOT / "solve_not_spacelike", tmp_path) == 3
        summary = (tmp_path / "summary.txt").read_text(encoding="utf-8")
        assert "NotSpacelike" in summary
        assert not (tmp_path / "graph.csv").exists()

    def test_plot_flag_writes_svg(self, tmp_path):
        assert run_case(TEST_CASES_ROOT / "focusing_minkowski", tmp_path, "--plot") == 0
        svg = (tmp_path / "focusing_sweep.svg").read_text(encoding="utf-8")
        assert svg.startswith("<svg") or svg.lstrip().startswith("<?xml")
        assert "<polyline" in svg
        assert "focusing_sweep.svg" in load_json(tmp_path / "manifest.json")["outputs"]

    def test_maxprin_theta_tol_scales_with_lattice(self, tmp_path):
        case = TEST_CASES_ROOT / "maxprin_cylinder_lattice"
        assert run_case(case, tmp_path / "default") == 0
        summary = load_json(tmp_path / "default" / "manifest.json")["summary"]
        # 21 points over ±0.4: h = 0.04
        assert summary["theta_tol"] == pytest.approx(10.0 * 0.04 ** 2)

        strict = tmp_path / "strict.cfg"
        strict.write_text((case / "config.cfg").read_text(encoding="utf-8") + "theta_tol = 1e-9\n",
                          encoding="utf-8")
        code = run(["maxprin", "--config", str(strict), "--out", str(tmp_path / "strict")])
        assert code == 1
        assert manifest_checks(tmp_path / "strict")["hypotheses"]["passed"] is False

    def test_reruns_are_byte_identical(self, tmp_path):
        case = TEST_CASES_ROOT / "maxprin_identity"
        assert run_case(case, tmp_path / "a") == 0
        assert run_case(case, tmp_path / "b") == 0
        first = load_json(tmp_path / "a" / "manifest.json")["outputs"]
        second = load_json(tmp_path / "b" / "manifest.json")["outputs"]
        assert first == second
        assert "summary.txt" in first


# ── CLI usage errors ─────────────────────────────────────────────────────

class TestUsageErrors:
    def test_missing_config(self, tmp_path):
        assert run(["curvature", "--config", str(tmp_path / "absent.cfg"), "--out", str(tmp_path)]) == EXIT_USAGE

    def test_unknown_scenario_rejected_by_parser(self, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            run(["warp-drive", "--config", str(tmp_path / "x.cfg")])
        assert excinfo.value.code == 2

    def test_section_for_another_scenario(self, tmp_path):
        cfg = tmp_path / "focusing.cfg"
        shutil.copy(TEST_CASES_ROOT / "focusing_minkowski" / "config.cfg", cfg)
        assert run(["cone", "--config", str(cfg), "--out", str(tmp_path / "out")]) == EXIT_USAGE


# ── shipped scenarios ────────────────────────────────────────────────────

class TestShippedScenarios:
    """Quick scenarios from input/scenarios/ must pass as shipped."""

    @pytest.mark.parametrize("name, scenario", [
        ("curvature_schwarzschild", "curvature"),
        ("geodesic_schwarzschild", "geodesic"),
        ("congruence_ppwave", "congruence"),
        ("cone_desitter", "cone"),
        ("maxprin_identity", "maxprin"),
    ])
    def test_shipped_config_passes(self, name, scenario, tmp_path):
        code = run([scenario, "--config", str(SCENARIO_ROOT / f"{name}.cfg"), "--out", str(tmp_path)])
        assert code == 0, manifest_checks(tmp_path)
