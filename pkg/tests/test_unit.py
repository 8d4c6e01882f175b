"""
Unit tests for the nullgeo plumbing modules.

Organized by module under test:
  1. Utility functions: parse_spec, format_spec, thread_count, delta norms
  2. Loader: parse_config, load_config_file, get_real_path, load_template
  3. Constants: sanity checks on shared config values
  4. Errors: exit-code mapping of the exception hierarchy
  5. Report: CSV rendering and value formatting
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

ROOT_DIR = Path(__file__).resolve().parent.parent
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

from src.constants import (
    COMMON_KEYS, CSV_SCHEMAS, EXIT_CHECK_FAILED, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE,
    POSITIVE_KEYS, SCENARIO_KEYS, SCENARIO_NAMES, THREADS_ENV_VAR,
)
from src.errors import (
    BlowUp, ConjugatePoint, DomainError, NoConvergence, NotSpacelike, NullGeoError,
    ParseError, UnknownModel, UsageError, ValidationError,
)
from src.loader import get_real_path, load_config_file, load_template, parse_config
from src.report import format_value, render_csv
from src.scenarios import SCENARIOS
from src.scenarios.result import Check, Table
from src.utils import delta_norm_sq, delta_normalize, fd_steps, format_spec, parse_spec, thread_count


# ═══════════════════════════════════════════════════════════════════════════
#  Utility functions
# ═══════════════════════════════════════════════════════════════════════════

class TestParseSpec:
    """parse_spec() splits name{key=value} catalog specs."""

    @pytest.mark.parametrize("text, expected", [
        ("minkowski", ("minkowski", {})),
        ("Schwarzschild{M=2}", ("schwarzschild", {"M": 2.0})),
        ("desitter{H=0.5, n=5}", ("desitter", {"H": 0.5, "n": 5.0})),
        ("ppwave{}", ("ppwave", {})),
    ])
    def test_valid_specs(self, text, expected):
        assert parse_spec(text) == expected

    @pytest.mark.parametrize("text", ["", "{M=1}", "schwarzschild{M}", "schwarzschild{M=heavy}", "a b"])
    def test_malformed_specs_raise(self, text):
        with pytest.raises(ValueError):
            parse_spec(text)

    @given(st.dictionaries(st.sampled_from(["M", "H", "n", "amplitude"]),
                           st.integers(min_value=-1000, max_value=1000), max_size=4))
    def test_format_then_parse_keeps_parameters(self, params):
        floats = {k: float(v) for k, v in params.items()}
        assert parse_spec(format_spec("model", floats)) == ("model", floats)


class TestThreadCount:
    def test_defaults_to_one(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
        assert thread_count() == 1

    def test_reads_environment(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV_VAR, "4")
        assert thread_count() == 4

    @pytest.mark.parametrize("raw", ["zero", "0", "-3"])
    def test_invalid_values_fall_back(self, monkeypatch, raw):
        monkeypatch.setenv(THREADS_ENV_VAR, raw)
        assert thread_count() == 1


class TestDeltaNorm:
    def test_normalize_has_unit_length(self):
        v = delta_normalize(np.array([3.0, 4.0, 0.0]))
        assert delta_norm_sq(v) == pytest.approx(1.0)
        np.testing.assert_allclose(v, [0.6, 0.8, 0.0])

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            delta_normalize(np.zeros(4))

    def test_fd_steps_scale_with_coordinates(self):
        np.testing.assert_allclose(fd_steps(np.array([0.5, -20.0]), 1e-5), [1e-5, 2e-4])


# ═══════════════════════════════════════════════════════════════════════════
#  Loader
# ═══════════════════════════════════════════════════════════════════════════

MINIMAL_CURVATURE = """\
# minimal scenario
[curvature]
metric = minkowski{n=4}
"""


class TestParseConfig:
    """parse_config() grammar, defaults and strict validation."""

    def test_minimal_curvature_fills_defaults(self):
        config = parse_config(MINIMAL_CURVATURE)
        assert config.scenario == "curvature"
        assert config["metric"] == "minkowski{n=4}"
        for key, (_, default) in {**COMMON_KEYS, **SCENARIO_KEYS["curvature"]}.items():
            if key != "metric":
                assert config[key] == default
        assert config.lines == {"metric": 3}

    def test_value_kinds_are_converted(self):
        config = parse_config(
            "[focusing-sweep]\nx0 = 0, 0, 0, 0\nk = 1, 1, 0, 0\nradii = 1, 2.5\nplot = on\nseed = 7\n"
        )
        assert config["x0"] == [0.0, 0.0, 0.0, 0.0]
        assert config["radii"] == [1.0, 2.5]
        assert config["plot"] is True
        assert config["seed"] == 7

    def test_negative_tolerance_names_the_key(self):
        with pytest.raises(ValidationError) as excinfo:
            parse_config(MINIMAL_CURVATURE + "tolerance = -1e-6\n")
        assert excinfo.value.key == "tolerance"
        assert excinfo.value.line == 4
        assert "tolerance" in str(excinfo.value)

    def test_unknown_scenario_lists_valid_ones(self):
        with pytest.raises(ValidationError) as excinfo:
            parse_config("[warp-drive]\nmetric = minkowski\n")
        for name in SCENARIO_NAMES:
            assert name in str(excinfo.value)

    def test_unknown_key_rejected(self):
        with pytest.raises(ValidationError) as excinfo:
            parse_config(MINIMAL_CURVATURE + "colour = blue\n")
        assert excinfo.value.key == "colour"

    def test_missing_required_key(self):
        with pytest.raises(ValidationError) as excinfo:
            parse_config("[geodesic]\nx0 = 0, 0, 0, 0\nv0 = 1, 0, 0\n")
        assert excinfo.value.key == "s_end"

    @pytest.mark.parametrize("text, line", [
        ("metric = minkowski\n", 1),
        ("[curvature]\nmetric minkowski\n", 2),
        ("[curvature]\nsamples = 3\nsamples = 4\n", 3),
        ("[curvature]\nmetric =\n", 2),
        ("[curvature]\n[curvature]\n", 2),
    ])
    def test_grammar_errors_carry_line_numbers(self, text, line):
        with pytest.raises(ParseError) as excinfo:
            parse_config(text)
        assert excinfo.value.line == line
        assert f"line {line}" in str(excinfo.value)

    def test_unknown_metric_rejected(self):
        with pytest.raises(ValidationError, match="kerr"):
            parse_config("[curvature]\nmetric = kerr{a=0.5}\n")

    def test_grid_needs_three_interior_nodes(self):
        with pytest.raises(ValidationError) as excinfo:
            parse_config("[graph-theta]\nslab = minkowski_hyperplane\nprofile = constant\npoints = 4\n")
        assert excinfo.value.key == "points"

    def test_named_section_selected_from_several(self):
        text = MINIMAL_CURVATURE + "\n[cone]\nvertex = 0,0,0,0\ndirection = 1,0,0\ntau_end = 2\n"
        assert parse_config(text, "cone").scenario == "cone"
        with pytest.raises(ValidationError):
            parse_config(text)

    def test_bad_orientation_rejected(self):
        with pytest.raises(ValidationError) as excinfo:
            parse_config("[cone]\nvertex = 0,0,0,0\ndirection = 1,0,0\ntau_end = 2\norientation = sideways\n")
        assert excinfo.value.key == "orientation"

    def test_unknown_hypersurface_rejected(self):
        with pytest.raises(ValidationError):
            parse_config("[splitting-verify]\nhypersurface = kerr_horizon\n")


class TestLoadConfigFile:
    def test_loads_and_records_source(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(MINIMAL_CURVATURE, encoding="utf-8")
        config = load_config_file(path)
        assert config.source == str(path)
        assert config.scenario == "curvature"

    def test_raises_on_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config_file(tmp_path / "nope.cfg")

    def test_raises_on_non_utf8(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_bytes(b"[curvature]\nmetric = \xff\xfe\n")
        with pytest.raises(ParseError):
            load_config_file(path)

    def test_shipped_scenarios_all_parse(self):
        for path in sorted((ROOT_DIR / "input" / "scenarios").glob("*.cfg")):
            assert load_config_file(path).scenario in SCENARIO_NAMES, path.name


class TestGetRealPath:
    """get_real_path(): frozen vs non-frozen resolution."""

    def test_returns_absolute_path(self):
        assert get_real_path(Path("input")).is_absolute()

    def test_uses_meipass_when_frozen(self, monkeypatch):
        monkeypatch.setattr(sys, "frozen", True, raising=False)
        monkeypatch.setattr(sys, "_MEIPASS", "/tmp/bundle", raising=False)
        assert get_real_path(Path("input/templates")) == Path("/tmp/bundle/input/templates")


class TestLoadTemplate:
    def test_summary_template_renders(self):
        tpl = load_template(ROOT_DIR / "input" / "templates", "summary.txt.j2")
        text = tpl.render(version="x", scenario="cone", passed=True, error=None,
                          checks=[], summary={}, files=[])
        assert "result: PASS" in text


# ═══════════════════════════════════════════════════════════════════════════
#  Constants
# ═══════════════════════════════════════════════════════════════════════════

class TestConstants:
    def test_every_scenario_has_a_schema_and_runner(self):
        assert set(SCENARIO_KEYS) == set(SCENARIO_NAMES) == set(SCENARIOS)

    def test_exit_codes_are_distinct(self):
        assert len({EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_NUMERIC}) == 4

    def test_positive_keys_exist_in_some_schema(self):
        known = set(COMMON_KEYS).union(*(set(keys) for keys in SCENARIO_KEYS.values()))
        assert POSITIVE_KEYS <= known


# ═══════════════════════════════════════════════════════════════════════════
#  Errors
# ═══════════════════════════════════════════════════════════════════════════

class TestErrors:
    @pytest.mark.parametrize("exc, code", [
        (ParseError("x", line=1), EXIT_USAGE),
        (ValidationError("x", key="k"), EXIT_USAGE),
        (UnknownModel("x"), EXIT_USAGE),
        (DomainError("x"), EXIT_NUMERIC),
        (NotSpacelike("x"), EXIT_NUMERIC),
        (BlowUp("x", last_s=1.0), EXIT_NUMERIC),
        (NoConvergence("x"), EXIT_NUMERIC),
        (ConjugatePoint("x", s=2.0), EXIT_NUMERIC),
    ])
    def test_exit_codes(self, exc, code):
        assert isinstance(exc, NullGeoError)
        assert exc.exit_code == code

    def test_usage_errors_are_value_errors(self):
        assert issubclass(UsageError, ValueError)
        assert issubclass(DomainError, ValueError)
        assert issubclass(NoConvergence, RuntimeError)

    def test_blowup_reports_last_regular_parameter(self):
        exc = BlowUp("b diverged", last_s=0.75)
        assert exc.last_s == 0.75
        assert "0.75" in str(exc)


# ═══════════════════════════════════════════════════════════════════════════
#  Report formatting
# ═══════════════════════════════════════════════════════════════════════════

class TestReportFormatting:
    @pytest.mark.parametrize("value, text", [
        (0.1, "0.1"), (np.float64(0.25), "0.25"), (np.int64(3), "3"), (False, "0"),
        (float("inf"), "inf"), (1e-300, "1e-300"),
    ])
    def test_format_value(self, value, text):
        assert format_value(value) == text

    def test_csv_has_schema_line_and_header(self):
        text = render_csv(Table("cone", ["s", "theta"], [[1.0, 2.0], [2.0, 1.0]]))
        lines = text.splitlines()
        assert lines[0] == f"# schema=cone v{CSV_SCHEMAS['cone']}"
        assert lines[1].startswith("# units:")
        assert lines[2] == "s,theta"
        assert lines[3:] == ["1.0,2.0", "2.0,1.0"]

    def test_unknown_schema_rejected(self):
        with pytest.raises(ValueError):
            Table("bogus", ["a"], [])

    def test_check_helpers_reject_nan(self):
        assert not Check.at_most("x", float("nan"), 1.0).passed
        assert Check.at_least("x", 0.0, -1e-9).passed
