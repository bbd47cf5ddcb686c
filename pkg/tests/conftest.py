"""Shared fixtures: benchmark environments and cached expensive artifacts.

Training and the verification loop dominate suite runtime, so oracles and
shields are built once per session and shared by the unit and acceptance
tests.  Everything is seeded; rebuilding must reproduce identical artifacts.
"""

import sys
import time

import pytest

from polyshield.benchmarks import get_benchmark
from polyshield.cegis import cegis
from polyshield.oracle import train
from polyshield.synthesis import LinearSketch


@pytest.fixture(scope="session")
def toy_bench():
    return get_benchmark("toy1d")


@pytest.fixture(scope="session")
def duffing_bench():
    return get_benchmark("duffing")


@pytest.fixture(scope="session")
def pendulum_bench():
    return get_benchmark("pendulum")


class PipelineArtifacts:
    """Oracle, shield, and wall-clock costs for one benchmark."""

    def __init__(self, bench):
        t0 = time.time()
        self.train_result = train(bench.env, list(bench.hidden), bench.train,
                                  bench.action_scale)
        self.train_seconds = time.time() - t0
        t0 = time.time()
        self.shield_policy = cegis(self.train_result.policy,
                                   LinearSketch(bench.env.n, bench.env.m),
                                   bench.env, bench.cegis)
        self.cegis_seconds = time.time() - t0
        self.bench = bench

    @property
    def oracle(self):
        return self.train_result.policy


@pytest.fixture(scope="session")
def toy_artifacts(toy_bench):
    return PipelineArtifacts(toy_bench)


@pytest.fixture(scope="session")
def duffing_artifacts(duffing_bench):
    return PipelineArtifacts(duffing_bench)


@pytest.fixture(scope="session")
def pendulum_artifacts(pendulum_bench):
    return PipelineArtifacts(pendulum_bench)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # fd-level capture swallows the per-criterion lines printed during the
    # acceptance tests; replay them after capture is released
    mod = sys.modules.get("test_acceptance") \
        or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "REPORT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
