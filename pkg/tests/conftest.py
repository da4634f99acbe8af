"""Shared test helpers: fixture paths, CLI runner, acceptance summary hook."""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

PKG_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = PKG_ROOT / "fixtures"

# Populated by tests/test_acceptance.py; echoed after the run so every
# criterion's pass/fail line is visible in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


def load_fixture(name: str) -> dict:
    with open(FIXTURES / name, "r", encoding="utf-8") as fh:
        return json.load(fh)


def run_cli(*args: str, timeout: float = 600.0) -> subprocess.CompletedProcess:
    """Run the CLI in a subprocess and capture output."""
    cmd = [sys.executable, "-m", "torus_hypo.cli", *args]
    return subprocess.run(
        cmd, capture_output=True, text=True, timeout=timeout, cwd=PKG_ROOT
    )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
