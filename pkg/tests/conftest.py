"""Shared fixtures: built-in experiments are simulated once per session."""

from __future__ import annotations

import functools

import pytest

from headpond.scenarios import get_scenario, run_case, run_comparison

ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def builtin_run(name: str):
    """``(scenario, trajectory, metrics)`` for a single built-in, or a Comparison."""
    sc = get_scenario(name)
    if isinstance(sc, tuple):
        return run_comparison(*sc)
    traj, metrics = run_case(sc)
    return sc, traj, metrics


@pytest.fixture(scope="session")
def run_builtin():
    return builtin_run


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
