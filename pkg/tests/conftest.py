from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from flownet.network import RoutingMatrix, build_network
from flownet.scenarios import ScenarioConfig, load_inputs, run_scenario

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
FOUR = SCENARIOS / "fig5_fourjunctions"


def two_phase_node(c=(1.0, 1.0), xi=1.0):
    """One junction, two entry cells, one phase per cell."""
    return build_network([("1", "o1", "v", c[0]), ("2", "o2", "v", c[1])], {"v": [["1"], ["2"]]}, xi)


def shared_phase_node(xi=1.0):
    """One junction, two entry cells served together by a single phase."""
    return build_network([("1", "o1", "v", 1.0), ("2", "o2", "v", 1.0)], {"v": [["1", "2"]]}, xi)


def overlap_node(xi=1.0):
    """Three cells, phases {1, 2} and {2, 3}: cell 2 is served by both."""
    return build_network(
        [("1", "o", "v", 1.0), ("2", "o", "v", 1.0), ("3", "o", "v", 1.0)],
        {"v": [["1", "2"], ["2", "3"]]},
        xi,
    )


def zero_routing(spec):
    return RoutingMatrix.zeros(spec.n)


@pytest.fixture(scope="session")
def four_inputs():
    return load_inputs(FOUR / "network.json", FOUR / "demand.json")


@pytest.fixture(scope="session")
def four_run(tmp_path_factory):
    """The bundled four-junction GPA run (about ten seconds), shared by all tests."""
    out = tmp_path_factory.mktemp("four")
    cfg = ScenarioConfig.load(FOUR / "scenario.json").with_outputs(out)
    return cfg, run_scenario(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def acceptance(capsys):
    """record(n, ok, text): one PASS/FAIL line per acceptance criterion."""

    def record(n: int, ok: bool, text: str):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {text}"
        _ACCEPTANCE[n] = line
        with capsys.disabled():
            print(f"\n{line}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
