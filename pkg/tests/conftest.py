"""Shared fixtures: the two hand-built graphs and the seeded random suite."""

import sys

import pytest

from kepsolver.instances import Instance, generate_random, make_instance

# 5-pair graph used throughout: dense core around vertices 4 and 5.
FIVE_PAIR_ARCS = [(1, 5), (2, 5), (3, 4), (3, 5), (4, 1), (4, 2), (4, 3),
                  (4, 5), (5, 1), (5, 3), (5, 4)]

# 6-vertex graph with one non-directed donor; the classic formulation trap:
# its arc model without subtour rows admits a length-4 tour inside a chain
# copy when K = 3.
SIX_VERTEX_ARCS = [(1, 2), (5, 2), (5, 3), (3, 6), (6, 5), (5, 6),
                   (6, 2), (5, 4), (4, 5), (6, 4), (4, 6), (2, 6)]


@pytest.fixture
def five_pair() -> Instance:
    return make_instance(pdps=[1, 2, 3, 4, 5], ndds=[],
                         arcs=[(u, v, 1.0) for u, v in FIVE_PAIR_ARCS],
                         K=4, L=0)


@pytest.fixture
def six_vertex() -> Instance:
    return make_instance(pdps=[2, 3, 4, 5, 6], ndds=[1],
                         arcs=[(u, v, 1.0) for u, v in SIX_VERTEX_ARCS],
                         K=3, L=6)


@pytest.fixture
def donor_fan() -> Instance:
    """The five-pair graph with vertex 4 recast as a non-directed donor."""
    arcs = [(u, v) for (u, v) in FIVE_PAIR_ARCS if v != 4]
    return make_instance(pdps=[1, 2, 3, 5], ndds=[4],
                         arcs=[(u, v, 1.0) for u, v in arcs], K=3, L=3)


def suite_params(n: int = 200):
    """Deterministic parameter spread for the seeded random suite."""
    for seed in range(n):
        yield dict(n_pdps=4 + seed % 9,            # 4..12
                   n_ndds=seed % 4,                # 0..3
                   density=(0.2, 0.35, 0.5)[seed % 3],
                   weight_mode="uniform-int(1,10)",
                   seed=seed,
                   K=2 + (seed // 3) % 3,          # 2..4
                   L=seed % 5)                     # 0..4


@pytest.fixture(scope="session")
def suite():
    return [generate_random(**p) for p in suite_params(200)]


@pytest.fixture(scope="session")
def small_suite():
    return [generate_random(**p) for p in suite_params(60)]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one verdict line per acceptance criterion, if that module ran."""
    mod = (sys.modules.get("test_acceptance")
           or sys.modules.get("tests.test_acceptance"))
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.CRITERIA):
        verdict = mod.RESULTS.get(num, "NOT RUN")
        terminalreporter.write_line(
            f"ACCEPTANCE {num:02d} {mod.CRITERIA[num]}: {verdict}")
