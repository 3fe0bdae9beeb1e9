"""Bypass baseline, lightpath extraction, first-fit wavelengths and cost metrics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .plan import AggregationPlan, NodePath, hops
from .topology import Topology
from .traffic import DemandSet

# Channels per fiber in the C band at 50 GHz spacing; informational only.
NOMINAL_CHANNELS = 80


class LightpathKind(str, Enum):
    WHOLE = "whole-demand"
    FEEDER = "feeder"
    AGGREGATED = "aggregated"


@dataclass(frozen=True)
class Lightpath:
    id: int
    path: NodePath
    kind: LightpathKind
    carried: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.path) < 2:
            raise ValueError(f"lightpath {self.id} has no links")
        if (self.kind is LightpathKind.AGGREGATED) != (len(self.carried) == 2):
            raise ValueError(f"lightpath {self.id}: {self.kind.value} carries {len(self.carried)} demands")

    @property
    def links(self) -> list[tuple[int, int]]:
        return list(zip(self.path, self.path[1:]))


@dataclass(frozen=True)
class WavelengthAssignment:
    wavelengths: dict[int, int]  # lightpath id -> channel index, from 1

    @property
    def count(self) -> int:
        return max(self.wavelengths.values(), default=0)


def route_bypass(t: Topology, ds: DemandSet) -> AggregationPlan:
    ds.validate_against(t)
    return AggregationPlan(ds, {d.id: t.shortest_path(d.src, d.dst) for d in ds})


def extract_lightpaths(p: AggregationPlan) -> list[Lightpath]:
    """One lightpath per unpaired demand; per pair two feeders plus the aggregated one.

    A feeder is omitted when the aggregation node is the demand's own source.
    """
    out: list[Lightpath] = []
    for d in p.demands:
        pair = p.pair_of(d.id)
        if pair is None:
            out.append(Lightpath(len(out), tuple(p.routes[d.id]), LightpathKind.WHOLE, (d.id,)))
            continue
        if d.id != pair.first:
            continue
        seg = pair.shared_segment
        for m in pair.members:
            route = p.routes[m]
            feeder = tuple(route[: len(route) - len(seg) + 1])
            if len(feeder) > 1:
                out.append(Lightpath(len(out), feeder, LightpathKind.FEEDER, (m,)))
        out.append(Lightpath(len(out), tuple(seg), LightpathKind.AGGREGATED, pair.members))
    return out


def assign_wavelengths_first_fit(
    t: Topology, lps: list[Lightpath], order: str = "longest-first"
) -> WavelengthAssignment:
    """Greedy channel assignment with wavelength continuity.

    ``order="longest-first"`` visits lightpaths by decreasing hop count, then
    id; ``order="id"`` visits them by id.
    """
    for lp in lps:
        if not t.is_path(lp.path):
            raise ValueError(f"lightpath {lp.id} is not a path in the topology")
    if order == "longest-first":
        seq = sorted(lps, key=lambda lp: (-hops(lp.path), lp.id))
    elif order == "id":
        seq = sorted(lps, key=lambda lp: lp.id)
    else:
        raise ValueError(f"unknown order {order!r}")
    used: dict[tuple[int, int], set[int]] = {}
    result: dict[int, int] = {}
    for lp in seq:
        taken = set().union(*(used.get(link, set()) for link in lp.links))
        w = 1
        while w in taken:
            w += 1
        result[lp.id] = w
        for link in lp.links:
            used.setdefault(link, set()).add(w)
    return WavelengthAssignment(dict(sorted(result.items())))


def demand_wavelengths(lps: list[Lightpath], wa: WavelengthAssignment) -> dict[int, list[int]]:
    """Channels carrying each demand, in route order."""
    out: dict[int, list[int]] = {}
    for lp in lps:
        for d in lp.carried:
            out.setdefault(d, []).append(wa.wavelengths[lp.id])
    return out


def link_loads(lps: list[Lightpath]) -> Counter:
    return Counter(link for lp in lps for link in lp.links)


def over_nominal_links(lps: list[Lightpath], limit: int = NOMINAL_CHANNELS) -> list[tuple[int, int]]:
    return sorted(link for link, n in link_loads(lps).items() if n > limit)


def plan_cost(p: AggregationPlan) -> int:
    return p.cost


def relative_gain(bypass: int, agg: int) -> Fraction:
    """Fraction of bypass wavelength-links saved by aggregation."""
    if bypass <= 0:
        if agg == 0:
            return Fraction(0)
        raise ValueError("bypass cost must be positive for a nonempty demand set")
    return Fraction(bypass - agg, bypass)
