"""Fiber topology model, topology-file parser and hop-count shortest paths.

Topology files are line based::

    # comment
    nodes 5
    link 1 3
    link 2 3

Every ``link U V`` line declares one fiber pair and yields both directed
links ``(U, V)`` and ``(V, U)``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

Link = tuple[int, int]
Path_ = tuple[int, ...]


class TopologyError(ValueError):
    """Raised for malformed or invalid topology input."""


class TopologyParseError(TopologyError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Topology:
    """Directed fiber graph with nodes ``1..N`` and bidirectional link pairs.

    ``links`` keeps declaration order; the position of a link in that list is
    its dense index (used for ILP variable names).
    """

    nodes: tuple[int, ...]
    links: tuple[Link, ...]
    _dist: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = len(self.nodes)
        if tuple(sorted(self.nodes)) != tuple(range(1, n + 1)):
            raise TopologyError(f"node ids must be exactly 1..{n}")
        seen: set[Link] = set()
        for u, v in self.links:
            if u == v:
                raise TopologyError(f"self-loop on node {u}")
            if u not in self.node_set or v not in self.node_set:
                raise TopologyError(f"link ({u}, {v}) references unknown node")
            if (u, v) in seen:
                raise TopologyError(f"duplicate link ({u}, {v})")
            seen.add((u, v))
        for u, v in self.links:
            if (v, u) not in seen:
                raise TopologyError(f"link ({u}, {v}) has no reverse link")
        if n > 1 and len(self._reach(self.nodes[0])) != n:
            raise TopologyError("topology is not connected")

    @classmethod
    def from_edges(cls, num_nodes: int, edges: Iterable[tuple[int, int]]) -> "Topology":
        """Build from undirected edges, expanding each into two directed links."""
        links: list[Link] = []
        for u, v in edges:
            links.append((u, v))
            links.append((v, u))
        return cls(tuple(range(1, num_nodes + 1)), tuple(links))

    @cached_property
    def node_set(self) -> frozenset[int]:
        return frozenset(self.nodes)

    @cached_property
    def link_index(self) -> dict[Link, int]:
        return {link: i for i, link in enumerate(self.links)}

    @cached_property
    def neighbors(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {v: [] for v in self.nodes}
        for u, v in self.links:
            out[u].append(v)
        return {v: tuple(sorted(ns)) for v, ns in out.items()}

    @cached_property
    def out_links(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {v: [] for v in self.nodes}
        for i, (u, _) in enumerate(self.links):
            out[u].append(i)
        return {v: tuple(ls) for v, ls in out.items()}

    @cached_property
    def in_links(self) -> dict[int, tuple[int, ...]]:
        inc: dict[int, list[int]] = {v: [] for v in self.nodes}
        for i, (_, v) in enumerate(self.links):
            inc[v].append(i)
        return {v: tuple(ls) for v, ls in inc.items()}

    @property
    def undirected_edges(self) -> list[tuple[int, int]]:
        return sorted({(min(u, v), max(u, v)) for u, v in self.links})

    def has_link(self, u: int, v: int) -> bool:
        return (u, v) in self.link_index

    def _reach(self, src: int) -> set[int]:
        seen = {src}
        stack = [src]
        adj: dict[int, list[int]] = {}
        for u, v in self.links:
            adj.setdefault(u, []).append(v)
        while stack:
            u = stack.pop()
            for v in adj.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    def _check(self, *vs: int) -> None:
        for v in vs:
            if v not in self.node_set:
                raise TopologyError(f"unknown node id {v}")

    def distances_from(self, src: int) -> dict[int, int]:
        """BFS hop distances from ``src`` to every node (memoized)."""
        self._check(src)
        cached = self._dist.get(src)
        if cached is not None:
            return cached
        dist = {src: 0}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in self.neighbors[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        self._dist[src] = dist
        return dist

    def hop_distance(self, u: int, v: int) -> int:
        self._check(u, v)
        return self.distances_from(u)[v]

    def shortest_path(self, u: int, v: int) -> Path_:
        """Hop-count shortest path; ties go to the lexicographically smallest sequence.

        Walking forward from ``u`` and always taking the smallest neighbor that is
        one hop closer to ``v`` yields the lexicographic minimum.
        """
        self._check(u, v)
        to_v = self.distances_from(v)  # symmetric graph: dist(x, v) == dist(v, x)
        path = [u]
        cur = u
        while cur != v:
            cur = next(w for w in self.neighbors[cur] if to_v[w] == to_v[cur] - 1)
            path.append(cur)
        return tuple(path)

    def is_path(self, path: Sequence[int]) -> bool:
        return len(path) >= 1 and all(self.has_link(a, b) for a, b in zip(path, path[1:]))


def parse_topology(text: str) -> Topology:
    """Parse topology-file text. Raises :class:`TopologyParseError` on bad lines."""
    num_nodes: int | None = None
    edges: list[tuple[int, int]] = []
    seen: dict[frozenset, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if num_nodes is None:
            if len(parts) != 2 or parts[0] != "nodes":
                raise TopologyParseError(lineno, "expected 'nodes N' as first statement")
            num_nodes = _int(parts[1], lineno)
            if num_nodes < 1:
                raise TopologyParseError(lineno, "node count must be >= 1")
            continue
        if len(parts) != 3 or parts[0] != "link":
            raise TopologyParseError(lineno, f"expected 'link U V', got {line!r}")
        u, v = _int(parts[1], lineno), _int(parts[2], lineno)
        for w in (u, v):
            if not 1 <= w <= num_nodes:
                raise TopologyParseError(lineno, f"node {w} outside 1..{num_nodes}")
        if u == v:
            raise TopologyParseError(lineno, f"self-loop on node {u}")
        key = frozenset((u, v))
        if key in seen:
            raise TopologyParseError(lineno, f"duplicate edge {u}-{v} (first on line {seen[key]})")
        seen[key] = lineno
        edges.append((u, v))
    if num_nodes is None:
        raise TopologyParseError(0, "missing 'nodes N' statement")
    return Topology.from_edges(num_nodes, edges)


def format_topology(t: Topology) -> str:
    lines = [f"nodes {len(t.nodes)}"]
    lines += [f"link {u} {v}" for u, v in t.links[::2]]
    return "\n".join(lines) + "\n"


BUILTIN = {"nsfnet": "nsfnet.topo", "toy": "toy.topo"}


def load_topology(source: str | Path) -> Topology:
    """Load from a path, or from a builtin name (``nsfnet``, ``toy``)."""
    if str(source) in BUILTIN:
        text = resources.files("optagg.data").joinpath(BUILTIN[str(source)]).read_text("utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    return parse_topology(text)


def nsfnet() -> Topology:
    return load_topology("nsfnet")


def toy() -> Topology:
    """Five-node example: A=1, B=2, X=3, I=4, C=5."""
    return load_topology("toy")


def _int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise TopologyParseError(lineno, f"not an integer: {tok!r}") from None
