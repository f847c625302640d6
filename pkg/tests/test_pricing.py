"""Three-phase pricing: recursions over the diagrams, cuts, exhaustive closure."""

import pytest

from kepsolver.graphs import build_chain_copies, build_digraph, find_fvs
from kepsolver.instances import make_instance
from kepsolver.master import (ColumnPool, DualPrices, add_columns,
                              build_and_solve_rmp, lagrangian_bound)
from kepsolver.mdd import MddBuildConfig, build_chain_mdd, build_cycle_mdd
from kepsolver.oracle import chain_weight, enumerate_chains
from kepsolver.pricing import (PricingContext, column_reduced_cost,
                               exact_subproblem_values, phase2_longest_path,
                               phase3_exhaustive, phase3_mip, price,
                               separate_infeasible_cycles)

ZERO = DualPrices()


@pytest.fixture
def six_vertex_parts(six_vertex):
    g = build_digraph(six_vertex)
    fvs, ccopies = find_fvs(g, 3)
    pcopies = build_chain_copies(g)
    return six_vertex, g, ccopies, pcopies


def exact_context(inst, g, ccopies, pcopies):
    cfg = MddBuildConfig(chain_successor_fraction=1.0)
    cyc = [build_cycle_mdd(g, c, inst.K, K_full=inst.K) for c in ccopies]
    chn = [build_chain_mdd(g, c, inst.chain_cap(), cfg,
                           cap_full=inst.chain_cap()) for c in pcopies]
    return PricingContext(g=g, K=inst.K, chain_cap=inst.chain_cap(),
                          cycle_copies=ccopies, chain_copies=pcopies,
                          cycle_mdds=cyc, chain_mdds=chn)


def test_phase2_zero_duals_finds_best_chain(six_vertex_parts):
    inst, g, ccopies, pcopies = six_vertex_parts
    r = phase2_longest_path(g, ZERO, set(), set(), 3, inst.chain_cap(),
                            ccopies, pcopies)
    chains = [c for c in r["columns"] if c.kind == "chain"]
    assert chains and chains[0].sequence[:2] == (1, 2)
    best_w = max(chain_weight(g, ch) for ch in enumerate_chains(g, 6))
    assert abs(max(c.reduced_cost for c in chains) - best_w) < 1e-9


def test_phase2_prohibitive_duals_certifies_chains(six_vertex_parts):
    inst, g, ccopies, pcopies = six_vertex_parts
    big = DualPrices(lam={v: 100.0 for v in range(1, 7)})
    r = phase2_longest_path(g, big, set(), set(), 3, inst.chain_cap(),
                            ccopies, pcopies)
    assert r["chain_certificate"] and not r["columns"]
    assert abs(r["objective"]) < 1e-9


def test_phase2_cuts_an_overlong_relaxation_cycle():
    # the flow relaxation wants the heavy 4-ring; with K=3 that circulation
    # is infeasible, so one subtour cut must fire
    arcs = [(10, 11, 5.0), (11, 12, 5.0), (12, 13, 5.0), (13, 10, 5.0),
            (1, 10, 0.5)]
    inst = make_instance(pdps=[10, 11, 12, 13], ndds=[1], arcs=arcs, K=3, L=2)
    g = build_digraph(inst)
    _, ccopies = find_fvs(g, 3)
    pcopies = build_chain_copies(g)
    r = phase2_longest_path(g, ZERO, set(), set(), 3, inst.chain_cap(),
                            ccopies, pcopies)
    assert r["cuts"] == 1


def test_separate_infeasible_cycles():
    assert len(separate_infeasible_cycles(
        [(1, 2), (2, 3), (3, 4), (4, 1)], 3)) == 1
    assert separate_infeasible_cycles([(1, 2), (2, 3), (3, 1)], 3) == []
    two_rings = [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1),
                 (11, 12), (12, 13), (13, 14), (14, 15), (15, 11)]
    assert len(separate_infeasible_cycles(two_rings, 3)) == 2


def test_phase3_exhaustive_statuses(six_vertex_parts):
    inst, g, ccopies, pcopies = six_vertex_parts
    st, col = phase3_exhaustive(ccopies, g, ZERO, set(), 3, 20.0)
    assert st == "column" and col.reduced_cost > 0
    assert abs(column_reduced_cost(col, ZERO) - col.reduced_cost) < 1e-9

    big = DualPrices(lam={v: 100.0 for v in range(1, 7)})
    st2, col2 = phase3_exhaustive(ccopies, g, big, set(), 3, 20.0)
    assert st2 == "exhausted" and col2 is None

    st3, _ = phase3_exhaustive(ccopies, g, ZERO, set(), 3, 0.0)
    assert st3 == "timeout"


def test_phase3_mip_prices_positive_columns(six_vertex_parts):
    inst, g, ccopies, pcopies = six_vertex_parts
    cols = phase3_mip(g, ZERO, set(), set(), 3, ccopies)
    assert cols and all(c.reduced_cost > 0 for c in cols)
    big = DualPrices(lam={v: 100.0 for v in range(1, 7)})
    assert phase3_mip(g, big, set(), set(), 3, ccopies) == []


def test_phase3_mip_total_on_dense_fixture(five_pair):
    g = build_digraph(five_pair)
    _, ccopies = find_fvs(g, 4)
    cols = phase3_mip(g, ZERO, set(), set(), 4, ccopies)
    assert abs(sum(c.reduced_cost for c in cols) - 4.0) < 1e-9


def test_price_controller_emits_and_certifies(six_vertex_parts):
    inst, g, ccopies, pcopies = six_vertex_parts
    ctx = exact_context(inst, g, ccopies, pcopies)

    res = price(ctx, ZERO, set(), set())
    assert res.columns and not res.proven_optimal
    for c in res.columns:
        assert abs(column_reduced_cost(c, ZERO) - c.reduced_cost) < 1e-9

    big = DualPrices(lam={v: 100.0 for v in range(1, 7)})
    res2 = price(ctx, big, set(), set())
    assert res2.proven_optimal and not res2.columns


def test_price_skips_later_phases_when_exact(five_pair):
    g = build_digraph(five_pair)
    _, ccopies = find_fvs(g, 4)
    cyc = [build_cycle_mdd(g, c, 4, K_full=4) for c in ccopies]
    ctx = PricingContext(g=g, K=4, chain_cap=0, cycle_copies=ccopies,
                         chain_copies=[], cycle_mdds=cyc, chain_mdds=[])
    big = DualPrices(lam={v: 100.0 for v in range(1, 6)})
    res = price(ctx, big, set(), set())
    assert res.proven_optimal
    assert res.stats["phase2"]["invocations"] == 0
    assert res.stats["phase3"]["invocations"] == 0


def test_exact_subproblem_values_match_enumeration(six_vertex_parts):
    inst, g, ccopies, pcopies = six_vertex_parts
    cv, pv = exact_subproblem_values(g, ccopies, pcopies, ZERO, set(), 3,
                                     inst.chain_cap())
    best_w = max(chain_weight(g, ch) for ch in enumerate_chains(g, 6))
    assert abs(pv[0] - best_w) < 1e-9
    assert all(v >= 0 for v in cv + pv)


def test_root_column_generation_converges(six_vertex_parts):
    inst, g, ccopies, pcopies = six_vertex_parts
    ctx = exact_context(inst, g, ccopies, pcopies)
    pool = ColumnPool(g, 3, inst.chain_cap())
    duals = DualPrices()
    for _ in range(60):
        res = price(ctx, duals, set(), set())
        if res.columns:
            add_columns(pool, res.columns)
            rmp = build_and_solve_rmp(pool, set(), set(), integral=False)
            assert rmp.status == "optimal"
            duals = rmp.duals
            continue
        if res.proven_optimal:
            break
    else:
        pytest.fail("column generation did not converge")

    rmp = build_and_solve_rmp(pool, set(), set(), integral=False)
    assert abs(rmp.objective - 5.0) < 1e-6

    cv, pv = exact_subproblem_values(g, ccopies, pcopies, rmp.duals, set(),
                                     3, inst.chain_cap())
    lb = lagrangian_bound(rmp.duals, cv, pv)
    assert abs(lb - rmp.objective) <= 1e-6 * (1 + abs(rmp.objective))

    mip = build_and_solve_rmp(pool, set(), set(), integral=True)
    assert abs(mip.objective - 5.0) < 1e-6
