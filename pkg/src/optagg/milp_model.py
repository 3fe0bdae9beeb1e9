"""Aggregation-aware routing ILP: builder, LP export, solution import and validation.

Variables (all binary), with ``d`` a demand id, ``e`` a dense link index and
``v`` a node id:

* ``x_{d}_{e}``     demand d is routed over link e
* ``z_{d}_{v}_{e}`` demand d, aggregated at v, has its aggregated lightpath on e
* ``t_{d}_{v}``     demand d is aggregated at node v
* ``f_{d1}_{d2}``   demands d1 and d2 are aggregated together

Objective: sum(x) - sum(z)/2, i.e. wavelength-links with each shared link of a
pair counted once.
"""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .plan import AggregationPlan, Pair
from .topology import Topology
from .traffic import DemandSet

INTEGRALITY_TOL = 1e-6

# Constraint families, in emission order.
FAMILIES = (
    "flow",              # per-demand flow conservation
    "agg_once",          # a demand is aggregated at most at one node
    "agg_not_dest",      # ... and never at its own destination
    "pair_once",         # at most one partner
    "pair_same_dest",    # partners share the destination
    "pair_symmetric",    # f[d1][d2] == f[d2][d1]
    "agg_link_gate",     # aggregated links only for paired demands
    "pair_has_node",     # paired <=> has an aggregation node
    "same_node",         # partners aggregate at the same node
    "same_node_mirror",
    "agg_within_route",  # aggregated lightpath runs on the demand's own route
    "agg_flow",          # aggregated lightpath: agg node -> destination
    "no_self_pair",
    "strict_sharing",    # optional: partners use identical aggregated links
)

_NAME_RE = re.compile(r"^(x|z|t|f)((?:_\d+)+)$")
_ARITY = {"x": 2, "z": 3, "t": 2, "f": 2}


class ModelError(ValueError):
    pass


class SolutionError(ValueError):
    pass


class DecodeError(ValueError):
    pass


class VariableCatalog:
    """Dense variable indexing: x block, z block, theta block, f block."""

    def __init__(self, t: Topology, ds: DemandSet):
        self.num_demands = nd = len(ds)
        self.num_nodes = nv = len(t.nodes)
        self.num_links = ne = len(t.links)
        self.off_x = 0
        self.off_z = nd * ne
        self.off_t = self.off_z + nd * nv * ne
        self.off_f = self.off_t + nd * nv
        self.size = self.off_f + nd * nd

    def x(self, d: int, e: int) -> int:
        return self.off_x + d * self.num_links + e

    def z(self, d: int, v: int, e: int) -> int:
        return self.off_z + (d * self.num_nodes + (v - 1)) * self.num_links + e

    def theta(self, d: int, v: int) -> int:
        return self.off_t + d * self.num_nodes + (v - 1)

    def f(self, d1: int, d2: int) -> int:
        return self.off_f + d1 * self.num_demands + d2

    def role(self, i: int) -> str:
        if i < self.off_z:
            return "x"
        if i < self.off_t:
            return "z"
        return "t" if i < self.off_f else "f"

    def subscripts(self, i: int) -> tuple[int, ...]:
        role = self.role(i)
        ne, nv, nd = self.num_links, self.num_nodes, self.num_demands
        if role == "x":
            return divmod(i - self.off_x, ne)
        if role == "z":
            dv, e = divmod(i - self.off_z, ne)
            d, v = divmod(dv, nv)
            return (d, v + 1, e)
        if role == "t":
            d, v = divmod(i - self.off_t, nv)
            return (d, v + 1)
        return divmod(i - self.off_f, nd)

    def name(self, i: int) -> str:
        return self.role(i) + "".join(f"_{k}" for k in self.subscripts(i))

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(self.name(i) for i in range(self.size))

    @cached_property
    def by_name(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.names)}

    def parse_name(self, name: str) -> tuple[str, tuple[int, ...]]:
        m = _NAME_RE.match(name)
        if not m:
            raise KeyError(name)
        role, subs = m.group(1), tuple(int(s) for s in m.group(2)[1:].split("_"))
        if len(subs) != _ARITY[role]:
            raise KeyError(name)
        return role, subs

    def index(self, name: str) -> int:
        try:
            return self.by_name[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def __len__(self) -> int:
        return self.size


@dataclass(frozen=True)
class Constraint:
    family: str
    label: str
    terms: tuple[tuple[int, int], ...]
    sense: str  # "<=", "=", ">="
    rhs: int

    def lhs(self, values: Sequence[int]) -> int:
        return sum(c * values[i] for i, c in self.terms)

    def holds(self, values: Sequence[int]) -> bool:
        lhs = self.lhs(values)
        if self.sense == "<=":
            return lhs <= self.rhs
        if self.sense == ">=":
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass(frozen=True)
class Violation:
    constraint: Constraint
    lhs: int

    @property
    def family(self) -> str:
        return self.constraint.family

    def __str__(self) -> str:
        c = self.constraint
        return f"{c.label} [{c.family}]: lhs {self.lhs} {c.sense} {c.rhs} fails"


@dataclass(frozen=True)
class MilpSolution:
    assignment: tuple[int, ...]
    objective_value: Fraction


class MilpModel:
    def __init__(self, t: Topology, ds: DemandSet, strict_sharing: bool = False):
        self.topology = t
        self.demands = ds
        self.strict_sharing = strict_sharing
        self.catalog = VariableCatalog(t, ds)
        self.constraints: list[Constraint] = []

    @cached_property
    def objective(self) -> dict[int, Fraction]:
        cat = self.catalog
        obj = {i: Fraction(1) for i in range(cat.off_x, cat.off_z)}
        obj.update({i: Fraction(-1, 2) for i in range(cat.off_z, cat.off_t)})
        return obj

    def evaluate(self, values: Sequence[int]) -> Fraction:
        cat = self.catalog
        sx = sum(values[cat.off_x:cat.off_z])
        sz = sum(values[cat.off_z:cat.off_t])
        return Fraction(sx) - Fraction(sz, 2)

    def family_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(FAMILIES, 0)
        for c in self.constraints:
            counts[c.family] += 1
        return counts

    def expected_family_counts(self) -> dict[str, int]:
        return expected_constraint_counts(self.topology, self.demands, self.strict_sharing)

    def families_of(self, family: str) -> list[Constraint]:
        return [c for c in self.constraints if c.family == family]


CONSTRAINT_COUNT_FORMULA = (
    "D*V [flow] + D [agg_once] + D [agg_not_dest] + D [pair_once] + C [pair_same_dest] "
    "+ D(D-1)/2 [pair_symmetric] + D*E [agg_link_gate] + D [pair_has_node] "
    "+ D(D-1)*V [same_node] + D(D-1)*V [same_node_mirror] + D*V*E [agg_within_route] "
    "+ D*V*V [agg_flow] + D [no_self_pair] + 2*P*V*E [strict_sharing, if enabled]; "
    "C = demands having at least one demand with another destination, "
    "P = unordered demand pairs sharing a destination"
)


def expected_constraint_counts(t: Topology, ds: DemandSet, strict_sharing: bool = False) -> dict[str, int]:
    D, V, E = len(ds), len(t.nodes), len(t.links)
    dests = [d.dst for d in ds]
    cross = sum(1 for a in dests if any(b != a for b in dests))
    same = sum(1 for i in range(D) for j in range(i + 1, D) if dests[i] == dests[j])
    return {
        "flow": D * V,
        "agg_once": D,
        "agg_not_dest": D,
        "pair_once": D,
        "pair_same_dest": cross,
        "pair_symmetric": D * (D - 1) // 2,
        "agg_link_gate": D * E,
        "pair_has_node": D,
        "same_node": D * (D - 1) * V,
        "same_node_mirror": D * (D - 1) * V,
        "agg_within_route": D * V * E,
        "agg_flow": D * V * V,
        "no_self_pair": D,
        "strict_sharing": 2 * same * V * E if strict_sharing else 0,
    }


def build_model(t: Topology, ds: DemandSet, strict_sharing: bool = False) -> MilpModel:
    if len(ds) == 0:
        raise ModelError("demand set is empty")
    ds.validate_against(t)
    m = MilpModel(t, ds, strict_sharing)
    cat = m.catalog
    D = range(len(ds))
    V = t.nodes
    E = range(len(t.links))
    add = m.constraints.append

    def c(family, label, terms, sense, rhs):
        add(Constraint(family, label, tuple(terms), sense, rhs))

    for d in D:
        dem = ds[d]
        for v in V:
            rhs = 1 if v == dem.src else -1 if v == dem.dst else 0
            terms = [(cat.x(d, e), 1) for e in t.out_links[v]]
            terms += [(cat.x(d, e), -1) for e in t.in_links[v]]
            c("flow", f"flow_{d}_{v}", terms, "=", rhs)

    for d in D:
        c("agg_once", f"agg_once_{d}", [(cat.theta(d, v), 1) for v in V], "<=", 1)
        c("agg_not_dest", f"agg_not_dest_{d}", [(cat.theta(d, ds[d].dst), 1)], "=", 0)

    for d1 in D:
        c("pair_once", f"pair_once_{d1}", [(cat.f(d1, d2), 1) for d2 in D], "<=", 1)

    for d1 in D:
        terms = [(cat.f(d1, d2), 1) for d2 in D if ds[d2].dst != ds[d1].dst]
        if terms:
            c("pair_same_dest", f"pair_same_dest_{d1}", terms, "=", 0)

    for d1 in D:
        for d2 in D:
            if d1 < d2:
                c("pair_symmetric", f"pair_sym_{d1}_{d2}", [(cat.f(d1, d2), 1), (cat.f(d2, d1), -1)], "=", 0)

    for d1 in D:
        fsum = [(cat.f(d1, d2), -1) for d2 in D]
        for e in E:
            c("agg_link_gate", f"agg_gate_{d1}_{e}", [(cat.z(d1, v, e), 1) for v in V] + fsum, "<=", 0)

    for d1 in D:
        terms = [(cat.f(d1, d2), 1) for d2 in D] + [(cat.theta(d1, v), -1) for v in V]
        c("pair_has_node", f"pair_node_{d1}", terms, "=", 0)

    for d1 in D:
        for d2 in D:
            if d1 == d2:
                continue
            for v in V:
                f12 = (cat.f(d1, d2), 1)
                c("same_node", f"same_node_{d1}_{d2}_{v}",
                  [(cat.theta(d1, v), 1), (cat.theta(d2, v), -1), f12], "<=", 1)
                c("same_node_mirror", f"same_node_m_{d1}_{d2}_{v}",
                  [(cat.theta(d2, v), 1), (cat.theta(d1, v), -1), f12], "<=", 1)

    for d in D:
        for v in V:
            for e in E:
                c("agg_within_route", f"agg_in_route_{d}_{v}_{e}",
                  [(cat.z(d, v, e), 1), (cat.x(d, e), -1)], "<=", 0)

    for d in D:
        dst = ds[d].dst
        for v in V:
            th = cat.theta(d, v)
            for i in V:
                terms = [(cat.z(d, v, e), 1) for e in t.out_links[i]]
                terms += [(cat.z(d, v, e), -1) for e in t.in_links[i]]
                if i == v:
                    terms.append((th, -1))
                elif i == dst:
                    terms.append((th, 1))
                c("agg_flow", f"agg_flow_{d}_{v}_{i}", terms, "=", 0)

    for d in D:
        c("no_self_pair", f"no_self_pair_{d}", [(cat.f(d, d), 1)], "=", 0)

    if strict_sharing:
        for d1 in D:
            for d2 in D:
                if d1 >= d2 or ds[d1].dst != ds[d2].dst:
                    continue
                f12 = (cat.f(d1, d2), 1)
                for v in V:
                    for e in E:
                        za, zb = cat.z(d1, v, e), cat.z(d2, v, e)
                        c("strict_sharing", f"share_{d1}_{d2}_{v}_{e}", [(za, 1), (zb, -1), f12], "<=", 1)
                        c("strict_sharing", f"share_m_{d1}_{d2}_{v}_{e}", [(zb, 1), (za, -1), f12], "<=", 1)
    return m


# --- LP text export -------------------------------------------------------

_MAX_LINE = 255


def _fmt_coef(c: Fraction | int) -> str:
    c = Fraction(c)
    if c.denominator == 1:
        return str(c.numerator)
    return repr(float(c))


def _expr_lines(terms: Iterable[tuple[str, Fraction | int]], head: str) -> list[str]:
    lines, cur = [], head
    for name, coef in terms:
        sign = "-" if coef < 0 else "+"
        tok = f" {sign} {_fmt_coef(abs(coef))} {name}"
        if len(cur) + len(tok) > _MAX_LINE:
            lines.append(cur)
            cur = "  "
        cur += tok
    lines.append(cur)
    return lines


def write_lp(m: MilpModel) -> str:
    """Serialize in CPLEX LP syntax. Output is a pure function of the model."""
    names = m.catalog.names
    out = [
        f"\\ aggregation-aware routing: {len(m.demands)} demands, "
        f"{len(m.topology.nodes)} nodes, {len(m.topology.links)} links"
        + (", strict sharing" if m.strict_sharing else ""),
        "Minimize",
    ]
    obj = [(names[i], c) for i, c in sorted(m.objective.items())]
    out += _expr_lines(obj, " obj:")
    if m.constraints:
        out.append("Subject To")
        for con in m.constraints:
            lines = _expr_lines(((names[i], c) for i, c in con.terms), f" {con.label}:")
            lines[-1] += f" {con.sense} {con.rhs}"
            out += lines
    out.append("Bounds")
    out.append("Binary")
    row = " "
    for n in names:
        if len(row) + len(n) + 1 > _MAX_LINE:
            out.append(row)
            row = " "
        row += " " + n
    if row.strip():
        out.append(row)
    out.append("End")
    return "\n".join(out) + "\n"


def variable_map(m: MilpModel) -> dict:
    """Sidecar describing every variable name and the instance it was built for."""
    t, ds, cat = m.topology, m.demands, m.catalog
    return {
        "format": "optagg-variable-map/1",
        "strict_sharing": m.strict_sharing,
        "nodes": list(t.nodes),
        "links": [list(link) for link in t.links],
        "demands": [[d.id, d.src, d.dst] for d in ds],
        "num_variables": cat.size,
        "blocks": {
            "x": {"offset": cat.off_x, "name": "x_{demand}_{link}"},
            "z": {"offset": cat.off_z, "name": "z_{demand}_{node}_{link}"},
            "t": {"offset": cat.off_t, "name": "t_{demand}_{node}"},
            "f": {"offset": cat.off_f, "name": "f_{demand}_{demand}"},
        },
        "constraint_counts": m.family_counts(),
        "constraint_count_formula": CONSTRAINT_COUNT_FORMULA,
    }


def write_variable_map(m: MilpModel) -> str:
    return json.dumps(variable_map(m), indent=2) + "\n"


def check_variable_map(m: MilpModel, mapping: Mapping) -> None:
    """Raise ModelError if ``mapping`` was not produced for the same instance as ``m``."""
    want = variable_map(m)
    for key in ("nodes", "links", "demands", "num_variables", "strict_sharing"):
        if mapping.get(key) != want[key]:
            raise ModelError(f"variable map does not match this instance (field {key!r})")


# --- solution import ------------------------------------------------------

def read_solution(m: MilpModel, text: str) -> MilpSolution:
    """Parse ``name value`` (or ``name=value``) lines; ``#`` starts a comment."""
    cat = m.catalog
    values: list[int | None] = [None] * cat.size
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace("=", " ").split()
        if len(parts) != 2:
            raise SolutionError(f"line {lineno}: expected 'name value', got {line!r}")
        name, tok = parts
        try:
            i = cat.index(name)
        except KeyError as exc:
            raise SolutionError(f"line {lineno}: {exc.args[0]}") from None
        try:
            val = float(tok)
        except ValueError:
            raise SolutionError(f"line {lineno}: value {tok!r} is not a number") from None
        r = round(val)
        if abs(val - r) > INTEGRALITY_TOL or r not in (0, 1):
            raise SolutionError(f"line {lineno}: {name} = {tok} is not binary (integrality)")
        values[i] = int(r)
    missing = [cat.names[i] for i, v in enumerate(values) if v is None]
    if missing:
        more = f" (+{len(missing) - 5} more)" if len(missing) > 5 else ""
        raise SolutionError(f"missing variables: {', '.join(missing[:5])}{more}")
    return solution_from_values(m, values)


def solution_from_values(m: MilpModel, values: Sequence[int]) -> MilpSolution:
    vals = tuple(int(v) for v in values)
    if len(vals) != m.catalog.size:
        raise SolutionError(f"expected {m.catalog.size} values, got {len(vals)}")
    return MilpSolution(vals, m.evaluate(vals))


def format_solution(m: MilpModel, s: MilpSolution) -> str:
    names = m.catalog.names
    lines = [f"# objective {s.objective_value}"]
    lines += [f"{names[i]} {v}" for i, v in enumerate(s.assignment)]
    return "\n".join(lines) + "\n"


def validate_solution(m: MilpModel, s: MilpSolution) -> list[Violation]:
    vals = s.assignment
    return [Violation(c, c.lhs(vals)) for c in m.constraints if not c.holds(vals)]


# --- decoding -------------------------------------------------------------

def _support_path(t: Topology, link_ids: Iterable[int], src: int, dst: int) -> tuple[int, ...] | None:
    """Shortest src->dst path using only the given links; any cycles are dropped."""
    adj: dict[int, list[int]] = {}
    for e in link_ids:
        u, v = t.links[e]
        adj.setdefault(u, []).append(v)
    prev = {src: None}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            break
        for v in sorted(adj.get(u, ())):
            if v not in prev:
                prev[v] = u
                queue.append(v)
    if dst not in prev:
        return None
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return tuple(reversed(path))


def decode_plan(m: MilpModel, s: MilpSolution) -> AggregationPlan:
    """Turn a feasible assignment into routes and pairings.

    Paired demands whose aggregated links differ get a ``non-physical sharing``
    flag; their routes are kept as decoded and the first member's segment is
    reported as the shared one.
    """
    t, ds, cat = m.topology, m.demands, m.catalog
    vals = s.assignment
    E = range(len(t.links))
    x_links = {d.id: [e for e in E if vals[cat.x(d.id, e)]] for d in ds}
    flags: list[str] = []

    def agg_node(d: int) -> int | None:
        nodes = [v for v in t.nodes if vals[cat.theta(d, v)]]
        return nodes[0] if nodes else None

    pairs: list[Pair] = []
    routes: dict[int, tuple[int, ...]] = {}
    paired: set[int] = set()
    for d1 in range(len(ds)):
        for d2 in range(d1 + 1, len(ds)):
            if not vals[cat.f(d1, d2)]:
                continue
            v = agg_node(d1)
            if v is None or d1 in paired or d2 in paired:
                raise DecodeError(f"pairing ({d1}, {d2}) is inconsistent; validate the solution first")
            dst = ds[d1].dst
            segs = {}
            for d in (d1, d2):
                z = [e for e in E if vals[cat.z(d, v, e)]]
                seg = _support_path(t, z, v, dst)
                feeder = _support_path(t, x_links[d], ds[d].src, v)
                if seg is None or feeder is None:
                    raise DecodeError(f"demand {ds[d]} has no route through aggregation node {v}")
                segs[d] = seg
                routes[d] = feeder + seg[1:]
            if segs[d1] != segs[d2]:
                flags.append(f"non-physical sharing: demands {d1} and {d2} use different aggregated links")
            pairs.append(Pair(d1, d2, v, segs[d1]))
            paired |= {d1, d2}
    for d in ds:
        if d.id in routes:
            continue
        r = _support_path(t, x_links[d.id], d.src, d.dst)
        if r is None:
            raise DecodeError(f"routed links of demand {d} contain no {d.src}->{d.dst} path")
        routes[d.id] = r
    return AggregationPlan(ds, dict(sorted(routes.items())), tuple(pairs), tuple(flags))
