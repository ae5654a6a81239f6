"""Shared fixtures: random network generation and acceptance reporting."""

import math

import numpy as np
import pytest

from edfnet import (
    ClassSpec,
    NetworkSpec,
    PiecewiseLinearCDF,
    PointMass,
    Uniform,
    admissible_permutations,
    build_topology,
    reach_sets,
)


def _random_lead(rng):
    kind = int(rng.integers(0, 3))
    if kind == 0:
        return PointMass(float(rng.uniform(50.0, 400.0)))
    if kind == 1:
        lo = float(rng.uniform(0.0, 200.0))
        return Uniform(lo, lo + float(rng.uniform(10.0, 200.0)))
    ys = np.cumsum(rng.uniform(5.0, 150.0, size=3))
    g1 = float(rng.uniform(0.0, 0.5))
    g2 = float(rng.uniform(g1, 0.9))
    return PiecewiseLinearCDF([(float(ys[0]), g1), (float(ys[1]), g2),
                               (float(ys[2]), 1.0)])


def _random_spec(rng, max_stations, max_classes):
    J = int(rng.integers(1, max_stations + 1))
    K = int(rng.integers(1, max_classes + 1))
    classes = []
    for k in range(1, K + 1):
        if k == 1:
            # a spanning route keeps every station visited and connected
            route = tuple(int(j) for j in rng.permutation(J) + 1)
        else:
            length = int(rng.integers(1, J + 1))
            route = tuple(int(j) for j in (rng.permutation(J) + 1)[:length])
        if rng.random() < 0.3:
            rates = {j: float(rng.uniform(0.8, 2.5)) for j in route}
        else:
            rates = float(rng.uniform(0.8, 2.5))
        classes.append(ClassSpec(
            id=k,
            route=route,
            arrival_rate=float(rng.uniform(0.1, 0.8)),
            lead_time=_random_lead(rng),
            service_rates=rates,
        ))
    return NetworkSpec(station_count=J, classes=tuple(classes))


@pytest.fixture
def random_network():
    """Factory for valid random acyclic networks, driven by a caller rng."""

    def make(rng, max_stations=5, max_classes=6):
        for _ in range(100):
            spec = _random_spec(rng, max_stations, max_classes)
            try:
                build_topology(spec)
            except Exception:
                continue
            return spec
        raise RuntimeError("random network generation kept failing")

    return make


def _random_domain_vector(topo, rng):
    """A frontier vector strictly inside one admissible piece."""
    perms = admissible_permutations(topo)
    pi = perms[int(rng.integers(0, len(perms)))]
    vals = {}
    prev = math.inf
    for m, j in enumerate(pi):
        reach, _ = reach_sets(topo, pi[:m])
        bound = max(topo.lead_dist(k).upper_support for k in reach[j])
        vals[j] = min(bound, prev) * float(rng.uniform(0.3, 0.98))
        prev = vals[j]
    return tuple(vals[j] for j in topo.spec.stations)


@pytest.fixture
def domain_vector():
    """Factory for random vectors inside the solvable frontier domain."""
    return _random_domain_vector


_ACCEPTANCE = {}
_ACCEPTANCE_NOTES = []


@pytest.fixture
def acceptance_note():
    """Record a measured level for the acceptance summary block."""
    return _ACCEPTANCE_NOTES.append


def pytest_runtest_logreport(report):
    nodeid = report.nodeid
    if "test_acceptance.py::" not in nodeid:
        return
    name = nodeid.split("::", 1)[1]
    if report.when == "call":
        _ACCEPTANCE[name] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup" and report.outcome != "passed":
        _ACCEPTANCE[name] = "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"ACCEPTANCE {name}: {_ACCEPTANCE[name]}")
    for line in _ACCEPTANCE_NOTES:
        terminalreporter.write_line(f"  {line}")
