from hypothesis import given, settings, strategies as st
import pytest

from kepsolver.graphs import (TAU, build_chain_copies, build_digraph,
                              find_fvs, verify_fvs)
from kepsolver.instances import generate_random, make_instance
from kepsolver.oracle import enumerate_cycles


def test_digraph_fields(five_pair):
    g = build_digraph(five_pair)
    assert g.pdps == (1, 2, 3, 4, 5)
    assert g.ndds == ()
    assert g.has_arc(4, 3) and not g.has_arc(3, 1)
    assert g.w[(1, 5)] == 1.0
    assert sorted(g.out[4]) == [1, 2, 3, 5]
    assert sorted(g.inn[5]) == [1, 2, 3, 4]


def test_fvs_counts_on_five_pair(five_pair):
    g = build_digraph(five_pair)
    fvs_mo, copies_mo = find_fvs(g, 4, ordering="max-out")
    assert tuple(fvs_mo) == (4, 5)
    assert [c.n_arcs for c in copies_mo] == [10, 4]
    assert sum(c.n_arcs for c in copies_mo) == 14
    assert verify_fvs(g, fvs_mo)

    fvs_ix, copies_ix = find_fvs(g, 4, ordering="index")
    assert tuple(fvs_ix) == (1, 2, 3, 4)
    assert [c.n_arcs for c in copies_ix] == [6, 5, 6, 2]
    assert sum(c.n_arcs for c in copies_ix) == 19
    assert verify_fvs(g, fvs_ix)


def test_fvs_rejects_unknown_ordering(five_pair):
    g = build_digraph(five_pair)
    with pytest.raises(ValueError):
        find_fvs(g, 4, ordering="nope")


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n_p=st.integers(0, 12),
       d_idx=st.integers(0, 2), ordering=st.sampled_from(
           ("max-in", "max-out", "total", "index")))
def test_fvs_is_always_valid(seed, n_p, d_idx, ordering):
    inst = generate_random(n_p, 0, (0.2, 0.35, 0.5)[d_idx], seed=seed, K=3)
    g = build_digraph(inst)
    fvs, copies = find_fvs(g, 3, ordering=ordering)
    assert verify_fvs(g, fvs)
    # anchors are exactly the feedback vertices whose copy kept a cycle
    assert all(c.anchor in fvs for c in copies)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n_p=st.integers(2, 11))
def test_every_cycle_lands_in_exactly_one_copy(seed, n_p):
    inst = generate_random(n_p, 0, 0.4, seed=seed, K=3)
    g = build_digraph(inst)
    _, copies = find_fvs(g, 3)
    for cyc in enumerate_cycles(g, 3):
        hosts = [c for c in copies
                 if c.anchor in cyc and set(cyc) <= set(c.vertices)]
        # the first copy whose anchor is on the cycle must host it
        first = next(c for c in copies if c.anchor in cyc)
        assert first in hosts


def test_chain_copies_structure(six_vertex):
    g = build_digraph(six_vertex)
    copies = build_chain_copies(g)
    assert len(copies) == 1
    c = copies[0]
    assert c.ndd == 1
    assert set(c.pdps) == {2, 3, 4, 5, 6}
    # every pair has a termination arc to the dummy sink
    assert all((p, TAU) in c.arcs for p in c.pdps)
    assert (1, 2) in c.arcs


def test_chain_copies_empty_without_ndds(five_pair):
    g = build_digraph(five_pair)
    assert build_chain_copies(g) == []
