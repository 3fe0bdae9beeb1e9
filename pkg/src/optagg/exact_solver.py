"""Optimal aggregation-aware provisioning without an ILP solver.

Pairs never interact across destinations, and a pair (s1 -> t, s2 -> t) merged
at v costs d(s1, v) + d(s2, v) + d(v, t) in the best case. The optimum is
therefore a minimum-cost matching inside each destination group, with every
pair priced at its best aggregation node.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .milp_model import MilpModel, MilpSolution, ModelError, solution_from_values
from .plan import AggregationPlan, Pair
from .topology import Topology
from .traffic import Demand, DemandSet

DEFAULT_GROUP_CAP = 12


class CapacityError(RuntimeError):
    pass


def alone_cost(t: Topology, d: Demand) -> int:
    return t.hop_distance(d.src, d.dst)


def paired_cost(t: Topology, d1: Demand, d2: Demand) -> tuple[int, int]:
    """Cheapest merge of two co-destined demands: ``(hops, aggregation node)``.

    Ties pick the smallest node id. The destination itself is not a candidate.
    """
    if d1.dst != d2.dst:
        raise ValueError(f"demands {d1} and {d2} do not share a destination")
    if d1 == d2:
        raise ValueError("a demand cannot be paired with itself")
    dst = d1.dst
    a, b, c = t.distances_from(d1.src), t.distances_from(d2.src), t.distances_from(dst)
    return min((a[v] + b[v] + c[v], v) for v in t.nodes if v != dst)


@dataclass(frozen=True)
class PairEntry:
    cost: int
    agg_node: int
    saving: int  # alone(d1) + alone(d2) - cost


def paired_cost_table(t: Topology, group: list[Demand]) -> dict[tuple[int, int], PairEntry]:
    """Symmetric table keyed by demand-id pairs (both orders present)."""
    table: dict[tuple[int, int], PairEntry] = {}
    for i, a in enumerate(group):
        for b in group[i + 1:]:
            cost, v = paired_cost(t, a, b)
            entry = PairEntry(cost, v, alone_cost(t, a) + alone_cost(t, b) - cost)
            table[a.id, b.id] = table[b.id, a.id] = entry
    return table


def best_matching(t: Topology, group: list[Demand]) -> tuple[int, list[tuple[Demand, Demand]]]:
    """Minimum-cost matching of one destination group.

    Exact over all (partial) matchings via a subset recursion. Among equal
    costs, fewer pairs win, then the smaller list of source pairs, so the
    result does not depend on demand ids or input order.
    """
    members = sorted(group, key=lambda d: d.src)
    alone = [alone_cost(t, d) for d in members]
    table = paired_cost_table(t, members)
    n = len(members)

    @lru_cache(maxsize=None)
    def best(mask: int) -> tuple[int, int, tuple]:
        if mask == 0:
            return (0, 0, ())
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        c, p, pairs = best(rest)
        options = [(c + alone[i], p, pairs)]
        for j in range(i + 1, n):
            if rest >> j & 1:
                c, p, pairs = best(rest & ~(1 << j))
                pc = table[members[i].id, members[j].id].cost
                options.append((c + pc, p + 1, ((members[i].src, members[j].src),) + pairs))
        return min(options)

    cost, _, src_pairs = best((1 << n) - 1)
    by_src = {d.src: d for d in members}
    return cost, [(by_src[a], by_src[b]) for a, b in src_pairs]


def solve(t: Topology, ds: DemandSet, group_cap: int = DEFAULT_GROUP_CAP) -> AggregationPlan:
    ds.validate_against(t)
    groups = ds.by_destination()
    for dst, group in groups.items():
        if len(group) > group_cap:
            raise CapacityError(
                f"{len(group)} demands share destination {dst} (cap {group_cap}); "
                "export the ILP with `export-lp` and use an external solver instead"
            )
    routes: dict[int, tuple[int, ...]] = {}
    pairs: list[Pair] = []
    for dst, group in groups.items():
        _, matching = best_matching(t, group)
        for a, b in matching:
            _, v = paired_cost(t, a, b)
            shared = t.shortest_path(v, dst)
            for d in (a, b):
                routes[d.id] = t.shortest_path(d.src, v) + shared[1:]
            first, second = sorted((a.id, b.id))
            pairs.append(Pair(first, second, v, shared))
        for d in group:
            if d.id not in routes:
                routes[d.id] = t.shortest_path(d.src, dst)
    pairs.sort(key=lambda p: p.first)
    return AggregationPlan(ds, dict(sorted(routes.items())), tuple(pairs))


def encode_plan(m: MilpModel, p: AggregationPlan) -> MilpSolution:
    """Write a plan as an ILP assignment (validate it with ``validate_solution``)."""
    t, cat = m.topology, m.catalog
    if p.demands.pairs() != m.demands.pairs():
        raise ModelError("plan and model were built for different demand sets")
    values = [0] * cat.size
    for d, route in p.routes.items():
        for link in zip(route, route[1:]):
            if link not in t.link_index:
                raise ModelError(f"route of demand {d} uses link {link} missing from the topology")
            values[cat.x(d, t.link_index[link])] = 1
    for pair in p.pairs:
        a, b = pair.members
        values[cat.f(a, b)] = values[cat.f(b, a)] = 1
        for d in (a, b):
            values[cat.theta(d, pair.agg_node)] = 1
            for link in zip(pair.shared_segment, pair.shared_segment[1:]):
                values[cat.z(d, pair.agg_node, t.link_index[link])] = 1
    return solution_from_values(m, values)
