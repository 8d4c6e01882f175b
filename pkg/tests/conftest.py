"""
Shared test fixtures and configuration for the nullgeo test suite.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import numpy as np
import pytest

# ── path setup ────────────────────────────────────────────────────────────
ROOT_DIR = Path(__file__).resolve().parent.parent
TEST_CASES_ROOT = ROOT_DIR / "tests" / "test_cases"
SCENARIO_ROOT = ROOT_DIR / "input" / "scenarios"

if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

# Suppress noisy logging during tests
logging.basicConfig(level=logging.WARNING, force=True)


# ── helpers ───────────────────────────────────────────────────────────────

def load_json(path: Path) -> dict:
    """Load a JSON file or raise a clear assertion error."""
    assert path.exists(), f"JSON file not found: {path}"
    return json.loads(path.read_text(encoding="utf-8"))


def read_csv_rows(path: Path) -> tuple[list[str], list[str], np.ndarray]:
    """Comment lines, header and numeric body of a report CSV."""
    lines = path.read_text(encoding="utf-8").splitlines()
    comments = [line for line in lines if line.startswith("#")]
    body = [line for line in lines if not line.startswith("#")]
    header = body[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in body[1:]])
    return comments, header, data


# ── model fixtures ────────────────────────────────────────────────────────

@pytest.fixture(scope="session")
def minkowski4():
    from src.metrics import build_model
    return build_model("minkowski{n=4}")


@pytest.fixture(scope="session")
def schwarzschild():
    from src.metrics import build_model
    return build_model("schwarzschild{M=1}")


@pytest.fixture(scope="session")
def schwarzschild_ef():
    from src.metrics import build_model
    return build_model("schwarzschild_ef{M=1}")


@pytest.fixture(scope="session")
def desitter():
    from src.metrics import build_model
    return build_model("desitter{H=1,n=4}")


@pytest.fixture(scope="session")
def flat_slab(minkowski4):
    from src.slabs import slab_from_model
    return slab_from_model(minkowski4, "minkowski_hyperplane")
