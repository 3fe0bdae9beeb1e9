"""Bypass vs aggregation comparison runs and the two-to-many experiment sweep."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from . import exact_solver
from .provisioning import (
    assign_wavelengths_first_fit,
    extract_lightpaths,
    relative_gain,
    route_bypass,
)
from .topology import Topology
from .traffic import DemandSet, ScenarioConfig, generate_two_to_many

REPORT_FIELDS = ["scenario", "sample", "seed", "bypass_cost", "agg_cost", "gain",
                 "bypass_wl", "agg_wl", "pairs", "ms"]


@dataclass(frozen=True)
class SampleResult:
    scenario: int
    sample: int
    seed: int
    bypass_cost: int
    agg_cost: int
    gain: float
    bypass_wl: int
    agg_wl: int
    pairs: int
    ms: float | None = None  # None unless timing was requested

    def row(self) -> dict:
        out = asdict(self)
        out["gain"] = f"{self.gain:.12f}"
        out["ms"] = "" if self.ms is None else f"{self.ms:.3f}"
        return out


def compare(t: Topology, ds: DemandSet, *, scenario: int = 0, sample: int = 0,
            seed: int = 0, timing: bool = False) -> SampleResult:
    start = time.perf_counter()
    bypass = route_bypass(t, ds)
    agg = exact_solver.solve(t, ds)
    elapsed = (time.perf_counter() - start) * 1000.0
    bwl = assign_wavelengths_first_fit(t, extract_lightpaths(bypass)).count
    awl = assign_wavelengths_first_fit(t, extract_lightpaths(agg)).count
    return SampleResult(
        scenario=scenario,
        sample=sample,
        seed=seed,
        bypass_cost=bypass.cost,
        agg_cost=agg.cost,
        gain=float(relative_gain(bypass.cost, agg.cost)),
        bypass_wl=bwl,
        agg_wl=awl,
        pairs=len(agg.pairs),
        ms=elapsed if timing else None,
    )


@dataclass
class ExperimentReport:
    rows: list[SampleResult]

    def summary(self) -> list[dict]:
        out = []
        for sc in sorted({r.scenario for r in self.rows}):
            gains = [r.gain for r in self.rows if r.scenario == sc]
            out.append({
                "scenario": sc,
                "samples": len(gains),
                "mean_gain": sum(gains) / len(gains),
                "min_gain": min(gains),
                "max_gain": max(gains),
            })
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=REPORT_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(r.row() for r in self.rows)
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["scenario", "samples", "mean_gain", "min_gain", "max_gain"],
                           lineterminator="\n")
        w.writeheader()
        for s in self.summary():
            w.writerow({k: (f"{v:.12f}" if isinstance(v, float) else v) for k, v in s.items()})
        return buf.getvalue()

    def long_csv(self) -> str:
        """One line per (sample, design): plot-ready wavelength-link costs."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "sample", "design", "cost", "wavelengths"])
        for r in self.rows:
            w.writerow([r.scenario, r.sample, "bypass", r.bypass_cost, r.bypass_wl])
            w.writerow([r.scenario, r.sample, "aggregation", r.agg_cost, r.agg_wl])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [asdict(r) for r in self.rows]
        return json.dumps({"rows": rows, "summary": self.summary()}, indent=2) + "\n"


def run_experiment(t: Topology, scenarios: Sequence[int] = (4, 8, 12), samples: int = 10,
                   seed: int = 0, *, num_sources: int = 2, fixed_sources: bool = False,
                   timing: bool = False) -> ExperimentReport:
    configs = [ScenarioConfig(k, samples, seed, num_sources, fixed_sources) for k in scenarios]
    for cfg in configs:
        cfg.validate(t)
    rows = []
    for cfg in configs:
        for i in range(cfg.num_samples):
            ds = generate_two_to_many(t, cfg, i)
            rows.append(compare(t, ds, scenario=cfg.num_destinations, sample=i,
                                seed=cfg.seed, timing=timing))
    rows.sort(key=lambda r: (r.scenario, r.sample))
    return ExperimentReport(rows)


def parse_scenarios(text: str) -> list[int]:
    try:
        out = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValueError(f"scenarios must be comma-separated integers, got {text!r}") from None
    if not out:
        raise ValueError("no scenarios given")
    return out


def rows_from_csv(text: str) -> Iterable[dict]:
    return csv.DictReader(io.StringIO(text))
