"""Provisioning plans: per-demand routes plus optional demand pairings."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .topology import Topology
from .traffic import DemandSet

NodePath = tuple[int, ...]


def hops(path: Sequence[int]) -> int:
    return len(path) - 1


def dash(path: Sequence[int]) -> str:
    return "-".join(str(v) for v in path)


@dataclass(frozen=True)
class Pair:
    """Two co-destined demands merged at ``agg_node`` and carried together to the destination."""

    first: int
    second: int
    agg_node: int
    shared_segment: NodePath

    @property
    def members(self) -> tuple[int, int]:
        return (self.first, self.second)


@dataclass(frozen=True)
class AggregationPlan:
    demands: DemandSet
    routes: Mapping[int, NodePath]
    pairs: tuple[Pair, ...] = ()
    flags: tuple[str, ...] = field(default=(), compare=False)

    def pair_of(self, demand_id: int) -> Pair | None:
        for p in self.pairs:
            if demand_id in p.members:
                return p
        return None

    def partner(self, demand_id: int) -> int | None:
        p = self.pair_of(demand_id)
        if p is None:
            return None
        return p.second if p.first == demand_id else p.first

    @property
    def cost(self) -> int:
        """Wavelength-link total: shared segments are counted once per pair."""
        total = sum(hops(r) for r in self.routes.values())
        return total - sum(hops(p.shared_segment) for p in self.pairs)

    def problems(self, t: Topology) -> list[str]:
        """Return invariant violations (empty for a well-formed plan)."""
        out: list[str] = []
        ids = {d.id for d in self.demands}
        if set(self.routes) != ids:
            out.append("routes do not cover exactly the demand ids")
        for d in self.demands:
            r = self.routes.get(d.id)
            if r is None:
                continue
            if r[0] != d.src or r[-1] != d.dst or not t.is_path(r):
                out.append(f"route of demand {d} is not a {d.src}->{d.dst} path")
        seen: set[int] = set()
        for p in self.pairs:
            a, b = self.demands[p.first], self.demands[p.second]
            if p.first == p.second or seen & set(p.members):
                out.append(f"pairing ({p.first}, {p.second}) is not part of a matching")
            seen |= set(p.members)
            if a.dst != b.dst:
                out.append(f"paired demands {a} and {b} have different destinations")
            if p.agg_node == a.dst:
                out.append(f"pair ({a}, {b}) aggregates at its destination")
            seg = p.shared_segment
            if seg[0] != p.agg_node or seg[-1] != a.dst:
                out.append(f"shared segment of ({a}, {b}) does not run agg_node->destination")
            for m in p.members:
                r = self.routes.get(m, ())
                if tuple(r[len(r) - len(seg):]) != seg:
                    out.append(f"shared segment is not a suffix of the route of {self.demands[m]}")
        return out


def plan_rows(plan: AggregationPlan, wavelengths: Mapping[int, Sequence[int]] | None = None) -> list[dict]:
    rows = []
    for d in plan.demands:
        p = plan.pair_of(d.id)
        row = {
            "demand": f"{d.src}->{d.dst}",
            "route": dash(plan.routes[d.id]),
            "agg_node": str(p.agg_node) if p else "N/A",
            "agg_links": dash(p.shared_segment) if p else "N/A",
            "with_demand": str(plan.demands[plan.partner(d.id)]) if p else "N/A",
        }
        if wavelengths is not None:
            row["wavelength"] = "/".join(str(w) for w in wavelengths[d.id])
        rows.append(row)
    return rows


def plan_to_csv(plan: AggregationPlan, wavelengths: Mapping[int, Sequence[int]] | None = None) -> str:
    """CSV with columns demand, route, agg_node, agg_links, with_demand [, wavelength].

    For a paired demand the ``wavelength`` cell lists feeder then aggregated
    channel, slash-separated (just the aggregated one when the feeder is empty).
    """
    fields = ["demand", "route", "agg_node", "agg_links", "with_demand"]
    if wavelengths is not None:
        fields.append("wavelength")
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(plan_rows(plan, wavelengths))
    return buf.getvalue()
