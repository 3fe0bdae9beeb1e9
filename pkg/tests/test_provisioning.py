import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from optagg import exact_solver
from optagg.provisioning import (
    Lightpath,
    LightpathKind,
    assign_wavelengths_first_fit,
    extract_lightpaths,
    over_nominal_links,
    plan_cost,
    relative_gain,
    route_bypass,
)
from optagg.traffic import DemandSet

from .oracles import random_instance


def test_bypass_costs(nsf, table1, toy_topo, toy_demands):
    b = route_bypass(nsf, table1)
    assert plan_cost(b) == 13
    assert b.routes[6] == (14, 7, 3, 1)
    assert plan_cost(route_bypass(toy_topo, toy_demands)) == 6
    assert plan_cost(route_bypass(nsf, DemandSet.from_pairs([(14, 1)]))) == 3


def test_toy_lightpaths(toy_topo, toy_demands):
    lps = extract_lightpaths(exact_solver.solve(toy_topo, toy_demands))
    assert [(lp.path, lp.kind) for lp in lps] == [
        ((1, 3), LightpathKind.FEEDER),
        ((2, 3), LightpathKind.FEEDER),
        ((3, 4, 5), LightpathKind.AGGREGATED),
    ]
    assert assign_wavelengths_first_fit(toy_topo, lps).count == 1
    bypass = extract_lightpaths(route_bypass(toy_topo, toy_demands))
    assert assign_wavelengths_first_fit(toy_topo, bypass).count == 2


def test_table1_lightpaths(nsf, table1):
    lps = extract_lightpaths(exact_solver.solve(nsf, table1))
    assert len(lps) == 8
    pair_lps = [lp for lp in lps if 6 in lp.carried]
    assert [(lp.path, lp.kind) for lp in pair_lps] == [
        ((14, 12, 11), LightpathKind.FEEDER),
        ((11, 8, 1), LightpathKind.AGGREGATED),
    ]


def test_empty_and_single(nsf):
    assert extract_lightpaths(route_bypass(nsf, DemandSet())) == []
    lps = extract_lightpaths(route_bypass(nsf, DemandSet.from_pairs([(1, 14)])))
    assert assign_wavelengths_first_fit(nsf, lps).count == 1


def test_lightpath_invariants():
    with pytest.raises(ValueError):
        Lightpath(0, (1,), LightpathKind.WHOLE, (0,))
    with pytest.raises(ValueError):
        Lightpath(0, (1, 2), LightpathKind.AGGREGATED, (0,))


def test_gain():
    assert relative_gain(6, 4) == Fraction(1, 3)
    assert relative_gain(13, 12) == Fraction(1, 13)
    assert relative_gain(5, 5) == 0
    with pytest.raises(ValueError):
        relative_gain(0, 3)


def test_nominal_capacity_flag(nsf):
    lps = [Lightpath(i, (1, 3), LightpathKind.WHOLE, (i,)) for i in range(81)]
    assert over_nominal_links(lps) == [(1, 3)]
    assert assign_wavelengths_first_fit(nsf, lps).count == 81


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["longest-first", "id"]))
def test_first_fit_properties(seed, order):
    t, ds = random_instance(random.Random(seed))
    for plan in (route_bypass(t, ds), exact_solver.solve(t, ds)):
        lps = extract_lightpaths(plan)
        wa = assign_wavelengths_first_fit(t, lps, order=order)
        by_link = {}
        for lp in lps:
            for link in lp.links:
                by_link.setdefault(link, []).append(wa.wavelengths[lp.id])
        for ws in by_link.values():
            assert len(ws) == len(set(ws))
        degree = max((sum(1 for o in lps if o.id != lp.id and set(o.links) & set(lp.links))
                      for lp in lps), default=-1)
        assert wa.count <= degree + 1
        # each demand: one whole lightpath, or at most one feeder plus one aggregated
        for d in ds:
            kinds = sorted(lp.kind.value for lp in lps if d.id in lp.carried)
            assert kinds in (["whole-demand"], ["aggregated"], ["aggregated", "feeder"])
        assert sum(len(lp.links) for lp in lps) == plan.cost


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gain_below_half_for_pairwise(seed):
    t, ds = random_instance(random.Random(seed))
    b, a = route_bypass(t, ds).cost, exact_solver.solve(t, ds).cost
    assert 0 <= relative_gain(b, a) < Fraction(1, 2)
