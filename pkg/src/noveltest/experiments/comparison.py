"""Repeated fitness-only vs. fitness-plus-novelty runs on one game."""

from __future__ import annotations

import dataclasses
import statistics
from dataclasses import dataclass, field
from typing import Callable, Mapping

from noveltest.experiments.stats import mann_whitney_u, vargha_delaney_a12
from noveltest.search import FITNESS, MODES, NOVELTY, CoverageTimeline, SearchConfig, derive_seed, neatest_search
from noveltest.vm.interpreter import GameInstance

ALPHA = 0.05


@dataclass
class RunSummary:
    run_id: str
    mode: str
    repetition: int
    seed: int
    coverage: float
    generations: int
    timeline: CoverageTimeline
    # event name -> generation the event's statement was first robustly covered
    events: dict[str, int | None] = field(default_factory=dict)


@dataclass
class ComparisonReport:
    game: str
    master_seed: int
    repetitions: int
    config: dict
    runs: list[RunSummary]
    modes: tuple[str, ...] = MODES
    event_targets: dict[str, int] = field(default_factory=dict)

    def samples(self, mode: str) -> list[float]:
        return [r.coverage for r in self.runs if r.mode == mode]

    @property
    def a12(self) -> float:
        """Effect size of novelty over fitness-only; above 0.5 favours novelty."""
        return vargha_delaney_a12(self.samples(NOVELTY), self.samples(FITNESS))

    @property
    def u_and_p(self) -> tuple[float, float]:
        return mann_whitney_u(self.samples(NOVELTY), self.samples(FITNESS))

    def median(self, mode: str) -> float:
        return float(statistics.median(self.samples(mode)))

    def event_counts(self) -> dict[str, dict[str, int]]:
        return {
            m: {name: sum(1 for r in self.runs if r.mode == m and r.events.get(name) is not None)
                for name in sorted(self.event_targets)}
            for m in self.modes
        }

    def to_stats(self) -> dict:
        u, p = self.u_and_p
        return {
            "game": self.game,
            "modes": list(self.modes),
            "repetitions": self.repetitions,
            "coverage_samples": {m: self.samples(m) for m in self.modes},
            "medians": {m: self.median(m) for m in self.modes},
            "a12": self.a12,
            "a12_direction": f"A12({NOVELTY}, {FITNESS})",
            "u": u,
            "p": p,
            "significant": p < ALPHA,
            "events": self.event_counts(),
            "event_targets": dict(sorted(self.event_targets.items())),
            "event_generations": {
                r.run_id: dict(sorted(r.events.items())) for r in self.runs
            },
            "runs": [
                {"run_id": r.run_id, "mode": r.mode, "repetition": r.repetition, "seed": r.seed,
                 "coverage": r.coverage, "generations": r.generations}
                for r in self.runs
            ],
            "master_seed": self.master_seed,
            "config": self.config,
        }


def run_comparison(
    instance: GameInstance,
    base: SearchConfig,
    repetitions: int,
    master_seed: int,
    events: Mapping[str, int] | None = None,
    progress: Callable[[str], None] | None = None,
) -> ComparisonReport:
    """``repetitions`` searches per mode, seeded from (master seed, mode, repetition).

    ``events`` names statements whose robust coverage is counted per mode
    (for example the maze's level-2 advance).
    """
    if repetitions < 2:
        raise ValueError("need at least 2 repetitions per mode for a comparison")
    events = dict(events or {})
    runs: list[RunSummary] = []
    for mi, mode in enumerate(MODES):
        for rep in range(repetitions):
            seed = derive_seed(master_seed, mi, rep)
            cfg = dataclasses.replace(base, mode=mode, seed=seed)
            res = neatest_search(instance, cfg)
            run_id = f"{mode}-{rep}"
            hit = {name: (res.suite.entries[t].generation if t in res.suite.entries else None)
                   for name, t in events.items()}
            runs.append(RunSummary(run_id, mode, rep, seed, res.suite.coverage(), res.generations, res.timeline, hit))
            if progress is not None:
                progress(f"{run_id}: coverage {res.suite.covered}/{res.suite.total} after {res.generations} generations")
    config = base.echo()
    config.pop("mode")
    config.pop("seed")
    return ComparisonReport(instance.spec.name, master_seed, repetitions, config, runs, event_targets=events)


__all__ = ["ALPHA", "ComparisonReport", "RunSummary", "run_comparison"]
