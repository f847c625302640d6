"""Branch-and-price driver: node management, branching, statuses, bounds."""

import dataclasses

import pytest

from kepsolver.bnp import (BnbNode, Solution, SolverConfig, select_branch_arc,
                           solve, verify_matching)
from kepsolver.graphs import build_digraph, find_fvs
from kepsolver.instances import generate_random, make_instance
from kepsolver.master import ColumnPool, DualPrices, add_columns, canonical_key
from kepsolver.oracle import optimal_by_enumeration
from kepsolver.pricing import _make_cycle_column


def test_empty_instance():
    inst = make_instance(pdps=[], ndds=[], arcs=[], K=3, L=0)
    s = solve(inst)
    assert s.objective == 0.0
    assert s.status == "optimal"
    assert s.stats["nodes"] == 1
    assert not s.cycles and not s.chains


def test_single_two_cycle():
    inst = make_instance(pdps=[1, 2], ndds=[],
                         arcs=[(1, 2, 3.0), (2, 1, 4.0)], K=2, L=0)
    s = solve(inst)
    assert s.status == "optimal" and abs(s.objective - 7.0) < 1e-9
    assert s.cycles == [(1, 2)]
    assert verify_matching(inst, s)


def test_long_chain_fixture(six_vertex):
    s = solve(six_vertex)
    assert s.status == "optimal" and abs(s.objective - 5.0) < 1e-9
    assert abs(s.bound - 5.0) < 1e-9
    assert verify_matching(six_vertex, s)


def test_cycles_only_fixture(five_pair):
    s = solve(five_pair)
    assert s.status == "optimal" and abs(s.objective - 4.0) < 1e-9
    assert verify_matching(five_pair, s)


def test_node_invariant_rejects_overlap():
    with pytest.raises(AssertionError):
        BnbNode(banned=frozenset({(1, 2)}), forced=frozenset({(1, 2)}),
                bound=1.0, depth=0)


def test_branch_arc_prefers_most_fractional():
    inst = make_instance(pdps=[1, 2, 3], ndds=[],
                         arcs=[(1, 2, 1.0), (2, 1, 1.0),
                               (2, 3, 1.0), (3, 2, 1.0)], K=2, L=0)
    g = build_digraph(inst)
    _, copies = find_fvs(g, 2)
    pool = ColumnPool(g, 2, 0)
    c12 = _make_cycle_column(g, (1, 2), copies, DualPrices())
    c23 = _make_cycle_column(g, (2, 3), copies, DualPrices())
    add_columns(pool, [c12, c23])

    vals = {canonical_key(c12): 0.5, canonical_key(c23): 0.5}
    # every arc sits at usage 0.5; the lexicographically smallest wins
    assert select_branch_arc(vals, pool) == (1, 2)

    # an integral column contributes usage but no candidate arcs
    vals2 = {canonical_key(c12): 1.0, canonical_key(c23): 0.3}
    arc = select_branch_arc(vals2, pool)
    assert arc in {(2, 3), (3, 2)}

    assert select_branch_arc({canonical_key(c12): 1.0}, pool) is None

    # exclusion removes already-branched arcs from the pool of candidates
    excl = frozenset({(1, 2)})
    assert select_branch_arc(vals, pool, exclude=excl) == (2, 1)


def test_fractional_root_forces_branching():
    # three pairwise 2-cycles on an odd ring: root LP is 1.5 half-cycles,
    # the integer optimum picks one whole 2-cycle
    inst = make_instance(pdps=[1, 2, 3], ndds=[],
                         arcs=[(1, 2, 1.0), (2, 1, 1.0), (2, 3, 1.0),
                               (3, 2, 1.0), (3, 1, 1.0), (1, 3, 1.0)],
                         K=2, L=0)
    s = solve(inst)
    assert s.status == "optimal" and abs(s.objective - 2.0) < 1e-9
    assert s.stats["nodes"] > 1
    assert verify_matching(inst, s)


def test_matches_oracle_on_random_instances(small_suite):
    for inst in small_suite:
        opt, _ = optimal_by_enumeration(inst)
        s = solve(inst)
        assert s.status == "optimal", (inst.pdps, s.status)
        assert abs(s.objective - opt) < 1e-9
        assert verify_matching(inst, s)


def test_zero_time_limit_reports_valid_bound(six_vertex):
    s = solve(six_vertex, SolverConfig(time_limit_s=0.0))
    assert s.objective <= 5.0 + 1e-9
    assert s.bound >= 5.0 - 1e-9


def test_node_budget_of_one():
    inst = make_instance(pdps=[1, 2, 3], ndds=[],
                         arcs=[(1, 2, 1.0), (2, 1, 1.0), (2, 3, 1.0),
                               (3, 2, 1.0), (3, 1, 1.0), (1, 3, 1.0)],
                         K=2, L=0)
    s = solve(inst, SolverConfig(max_nodes=1))
    assert s.stats["nodes"] == 1
    assert s.bound >= 2.0 - 1e-9
    assert s.objective <= s.bound + 1e-9


def test_verify_matching_rejects_bad_solutions(five_pair):
    good = solve(five_pair)
    assert verify_matching(five_pair, good)

    # two cycles sharing vertex 4 must be rejected
    overlap = dataclasses.replace(good, cycles=[(4, 1, 5), (4, 3)],
                                  chains=[], objective=5.0)
    assert not verify_matching(five_pair, overlap)

    # a cycle longer than K must be rejected
    long = dataclasses.replace(good, cycles=[(1, 5, 3, 4)], chains=[],
                               objective=4.0)
    assert not verify_matching(
        dataclasses.replace(five_pair, K=3), long)

    # a chain exceeding the transplant cap must be rejected
    inst = make_instance(pdps=[2, 3], ndds=[1],
                         arcs=[(1, 2, 1.0), (2, 3, 1.0)], K=2, L=1)
    sol = Solution(cycles=[], chains=[(1, 2, 3)], objective=2.0,
                   status="optimal", bound=2.0, stats={})
    assert not verify_matching(inst, sol)

    # mis-stated objective must be rejected
    wrong = dataclasses.replace(good, objective=good.objective + 1.0)
    assert not verify_matching(five_pair, wrong)


def test_solver_is_deterministic():
    inst = generate_random(n_pdps=10, n_ndds=2, density=0.35,
                           weight_mode="uniform-int(1,10)", seed=7,
                           K=3, L=3)
    a, b = solve(inst), solve(inst)
    assert a.objective == b.objective
    assert a.cycles == b.cycles and a.chains == b.chains
    assert a.stats["nodes"] == b.stats["nodes"]
