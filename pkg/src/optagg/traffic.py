"""Unit-rate demands, demand files and the two-to-many traffic generator."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .topology import Topology


class DemandError(ValueError):
    pass


@dataclass(frozen=True)
class Demand:
    id: int
    src: int
    dst: int

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise DemandError(f"demand {self.src}->{self.dst}: source equals destination")

    def __str__(self) -> str:
        return f"{self.src}->{self.dst}"


@dataclass(frozen=True)
class DemandSet:
    """Ordered demands with ids ``0..n-1`` and unique (src, dst) pairs."""

    demands: tuple[Demand, ...] = ()

    def __post_init__(self) -> None:
        pairs = set()
        for i, d in enumerate(self.demands):
            if d.id != i:
                raise DemandError(f"demand ids must be 0..n-1, got {d.id} at position {i}")
            if (d.src, d.dst) in pairs:
                raise DemandError(f"duplicate demand {d}")
            pairs.add((d.src, d.dst))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "DemandSet":
        return cls(tuple(Demand(i, s, t) for i, (s, t) in enumerate(pairs)))

    def __len__(self) -> int:
        return len(self.demands)

    def __iter__(self) -> Iterator[Demand]:
        return iter(self.demands)

    def __getitem__(self, i: int) -> Demand:
        return self.demands[i]

    def pairs(self) -> list[tuple[int, int]]:
        return [(d.src, d.dst) for d in self.demands]

    def by_destination(self) -> dict[int, list[Demand]]:
        groups: dict[int, list[Demand]] = {}
        for d in self.demands:
            groups.setdefault(d.dst, []).append(d)
        return dict(sorted(groups.items()))

    def validate_against(self, t: Topology) -> None:
        for d in self.demands:
            for v in (d.src, d.dst):
                if v not in t.node_set:
                    raise DemandError(f"demand {d} references unknown node {v}")


@dataclass(frozen=True)
class ScenarioConfig:
    num_destinations: int
    num_samples: int = 10
    seed: int = 0
    num_sources: int = 2
    fixed_sources: bool = False

    def validate(self, t: Topology) -> None:
        for name in ("num_sources", "num_destinations", "num_samples"):
            if getattr(self, name) < 1:
                raise DemandError(f"{name} must be >= 1")
        if self.num_sources + self.num_destinations > len(t.nodes):
            raise DemandError(
                f"{self.num_sources} sources + {self.num_destinations} destinations "
                f"exceed the {len(t.nodes)} nodes of the topology"
            )


def sample_rng(seed: int, sample_index: int) -> np.random.Generator:
    """PCG64 stream keyed by ``(seed, sample_index)`` through a SeedSequence."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, sample_index])))


def generate_two_to_many(t: Topology, cfg: ScenarioConfig, sample_index: int) -> DemandSet:
    """Draw sources, then destinations from the remaining nodes; emit sources x destinations.

    With ``cfg.fixed_sources`` the sources come from sample 0's stream, so they
    stay the same for every sample of the scenario.
    """
    cfg.validate(t)
    rng = sample_rng(cfg.seed, sample_index)
    nodes = np.array(t.nodes)
    if cfg.fixed_sources:
        sources = sample_rng(cfg.seed, 0).choice(nodes, cfg.num_sources, replace=False)
        rng.choice(nodes, cfg.num_sources, replace=False)  # keep stream aligned with the default mode
    else:
        sources = rng.choice(nodes, cfg.num_sources, replace=False)
    pool = np.array([v for v in t.nodes if v not in set(sources.tolist())])
    dests = rng.choice(pool, cfg.num_destinations, replace=False)
    return DemandSet.from_pairs((int(s), int(d)) for s in sources for d in dests)


def parse_demands(text: str) -> DemandSet:
    pairs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] != "demand":
            raise DemandError(f"line {lineno}: expected 'demand S D', got {line!r}")
        try:
            pairs.append((int(parts[1]), int(parts[2])))
        except ValueError:
            raise DemandError(f"line {lineno}: non-integer node id in {line!r}") from None
    return DemandSet.from_pairs(pairs)


def serialize_demands(ds: DemandSet, header: Sequence[str] = ()) -> str:
    lines = [f"# {h}" for h in header]
    lines += [f"demand {d.src} {d.dst}" for d in ds]
    return "\n".join(lines) + "\n"


def load_demands(source: str | Path) -> DemandSet:
    builtin = {"table1": "table1.demands", "toy": "toy.demands"}
    if str(source) in builtin:
        return parse_demands(
            resources.files("optagg.data").joinpath(builtin[str(source)]).read_text("utf-8")
        )
    return parse_demands(Path(source).read_text(encoding="utf-8"))
