import random

import pytest
from hypothesis import given, settings, strategies as st

from optagg.exact_solver import (
    CapacityError,
    alone_cost,
    encode_plan,
    paired_cost,
    paired_cost_table,
    solve,
)
from optagg.milp_model import ModelError, build_model, validate_solution
from optagg.plan import AggregationPlan, Pair
from optagg.provisioning import route_bypass
from optagg.topology import Topology
from optagg.traffic import Demand, DemandSet

from .oracles import brute_force_cost, milp_optimum, random_instance


def test_alone_cost(nsf):
    assert alone_cost(nsf, Demand(0, 11, 1)) == 2
    assert alone_cost(nsf, Demand(0, 14, 1)) == 3
    assert alone_cost(nsf, Demand(0, 11, 12)) == 1


def test_paired_cost_examples(nsf, toy_topo):
    assert paired_cost(nsf, Demand(0, 11, 1), Demand(1, 14, 1)) == (4, 11)
    assert paired_cost(toy_topo, Demand(0, 1, 5), Demand(1, 2, 5)) == (4, 3)


def test_paired_cost_same_source_collapses():
    # two distinct demand ids with the same endpoints (not allowed inside one DemandSet)
    t = Topology.from_edges(3, [(1, 2), (2, 3)])
    assert paired_cost(t, Demand(0, 1, 3), Demand(1, 1, 3)) == (2, 1)


def test_paired_cost_errors(nsf):
    with pytest.raises(ValueError):
        paired_cost(nsf, Demand(0, 11, 1), Demand(1, 14, 7))
    d = Demand(0, 11, 1)
    with pytest.raises(ValueError):
        paired_cost(nsf, d, d)


def test_cost_table_symmetric(nsf, table1):
    group = [d for d in table1 if d.dst == 1]
    table = paired_cost_table(nsf, group)
    assert table[2, 6] == table[6, 2]
    assert table[2, 6].saving == 1


def test_table1_solution(nsf, table1):
    plan = solve(nsf, table1)
    assert plan.cost == 12
    (pair,) = plan.pairs
    assert (table1[pair.first].src, table1[pair.second].src) == (11, 14)
    assert pair.agg_node == 11
    assert pair.shared_segment == (11, 8, 1)
    assert len(plan.routes[6]) - 1 == 4
    assert plan.problems(nsf) == []
    # per-destination costs 12:2, 10:3, 1:4, 7:3
    for dst, want in {12: 2, 10: 3, 1: 4, 7: 3}.items():
        ids = [d.id for d in table1 if d.dst == dst]
        got = sum(len(plan.routes[i]) - 1 for i in ids)
        if dst == 1:
            got -= 2
        assert got == want


def test_toy_solution(toy_topo, toy_demands):
    plan = solve(toy_topo, toy_demands)
    assert plan.cost == 4
    assert plan.pairs == (Pair(0, 1, 3, (3, 4, 5)),)
    assert route_bypass(toy_topo, toy_demands).cost == 6


def test_empty_and_cap(nsf):
    assert solve(nsf, DemandSet()).cost == 0
    many = DemandSet.from_pairs((s, 1) for s in range(2, 15))
    with pytest.raises(CapacityError, match="export"):
        solve(nsf, many)
    assert solve(nsf, many, group_cap=13).cost <= route_bypass(nsf, many).cost


def test_ties_prefer_no_aggregation(nsf):
    plan = solve(nsf, DemandSet.from_pairs([(11, 10), (14, 10)]))
    assert plan.pairs == () and plan.cost == 3


def test_encode_plan(nsf, table1):
    m = build_model(nsf, table1)
    s = encode_plan(m, solve(nsf, table1))
    assert validate_solution(m, s) == [] and s.objective_value == 12
    s = encode_plan(m, route_bypass(nsf, table1))
    assert validate_solution(m, s) == [] and s.objective_value == 13


def test_encode_rejects_other_instance(nsf, table1):
    m = build_model(nsf, DemandSet.from_pairs([(11, 1)]))
    with pytest.raises(ModelError):
        encode_plan(m, solve(nsf, table1))


def test_encode_agg_at_destination_is_caught(toy_topo, toy_demands):
    m = build_model(toy_topo, toy_demands)
    routes = {0: (1, 3, 4, 5), 1: (2, 3, 4, 5)}
    bad = AggregationPlan(toy_demands, routes, (Pair(0, 1, 5, (5,)),))
    families = {v.family for v in validate_solution(m, encode_plan(m, bad))}
    assert "agg_not_dest" in families


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matches_brute_force(seed):
    t, ds = random_instance(random.Random(seed))
    plan = solve(t, ds)
    assert plan.cost == brute_force_cost(t, ds)
    assert plan.problems(t) == []
    assert plan.cost <= route_bypass(t, ds).cost
    for p in plan.pairs:
        a, b = ds[p.first], ds[p.second]
        assert p.shared_segment[-1] == a.dst == b.dst
        assert paired_cost(t, a, b)[0] >= max(alone_cost(t, a), alone_cost(t, b))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.randoms(use_true_random=False))
def test_invariant_under_reordering(seed, shuffler):
    t, ds = random_instance(random.Random(seed))
    pairs = ds.pairs()
    shuffler.shuffle(pairs)
    other = DemandSet.from_pairs(pairs)
    a, b = solve(t, ds), solve(t, other)
    assert a.cost == b.cost

    def canon(plan):
        dem = plan.demands
        routes = {dem[i].src * 1000 + dem[i].dst: r for i, r in plan.routes.items()}
        pairs = {(frozenset((dem[p.first].src, dem[p.second].src)), p.agg_node, p.shared_segment)
                 for p in plan.pairs}
        return routes, pairs

    assert canon(a) == canon(b)


def test_ilp_optimum_equals_decomposition():
    """Direct check of both bounds: an independent MILP solve of the verbatim model."""
    rng = random.Random(2024)
    for _ in range(25):
        t, ds = random_instance(rng, max_nodes=6, max_demands=4)
        obj, _ = milp_optimum(build_model(t, ds))
        assert obj == pytest.approx(solve(t, ds).cost)
