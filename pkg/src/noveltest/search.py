"""The search loop: pick a statement, evolve agents towards it, keep robust ones.

One run is a pure function of the game spec and :class:`SearchConfig` (the
optional wall-clock budget aside). Evaluation fans out over worker processes;
ranking, archive updates, reproduction and suite bookkeeping stay serial, and
every random draw comes from a stream derived from the master seed, so the
number of workers never changes the output.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Iterator, Mapping, Sequence

import numpy as np

from noveltest.neat import (
    Genome,
    InnovationLedger,
    NeatParams,
    evolve_generation,
    genome_from_dict,
    genome_to_dict,
    init_population,
    make_policy,
)
from noveltest.novelty import BehaviorArchive, NoveltyParams, generation_novelty, update_archive
from noveltest.objectives import ControlDependenceGraph, ObjectiveResult, build_cdg, next_targets, statement_fitness
from noveltest.vm.features import extract_features
from noveltest.vm.interpreter import (
    DEFAULT_DECISION_INTERVAL,
    DEFAULT_MAX_TICKS,
    GameInstance,
    run_episode,
)
from noveltest.vm.spec import spec_from_dict, spec_to_dict

FITNESS = "fitness"
NOVELTY = "novelty"
MODES = (FITNESS, NOVELTY)
TIE_TOLERANCE = 1e-9
TICKS_PER_SECOND = 30
# independent random streams under one master seed
_REPRODUCTION, _ARCHIVE, _ROBUSTNESS, _EVALUATION = 1, 2, 3, 4


class ConfigError(ValueError):
    pass


class SuiteDigestError(ValueError):
    pass


def _from_mapping(cls, data: Mapping[str, Any], where: str):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc


@dataclass(frozen=True)
class SearchConfig:
    mode: str = NOVELTY
    seed: int = 0
    max_generations: int = 150
    # optional wall-clock cap; makes results depend on machine speed
    budget_ms: int | None = None
    max_ticks: int = DEFAULT_MAX_TICKS
    decision_interval: int = DEFAULT_DECISION_INTERVAL
    robustness_reps: int = 10
    target_generations: int = 25
    # covering genomes per generation given a robustness check, best first
    robustness_candidates: int = 3
    neat: NeatParams = field(default_factory=NeatParams)
    novelty: NoveltyParams = field(default_factory=NoveltyParams)
    # evaluation processes; never affects results, so left out of the echo
    workers: int = 1

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.max_generations < 1 or (self.budget_ms is not None and self.budget_ms < 1):
            raise ConfigError("budget must be positive")
        if self.robustness_reps < 1:
            raise ConfigError("robustness_reps must be >= 1")
        if min(self.max_ticks, self.decision_interval, self.target_generations, self.robustness_candidates) < 1:
            raise ConfigError("max_ticks, decision_interval, target_generations, robustness_candidates must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def echo(self) -> dict[str, Any]:
        d = asdict(self)
        d.pop("workers")
        return d

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SearchConfig":
        data = dict(data)
        if "neat" in data:
            data["neat"] = _from_mapping(NeatParams, data["neat"], "neat")
        if "novelty" in data:
            data["novelty"] = _from_mapping(NoveltyParams, data["novelty"], "novelty")
        return _from_mapping(cls, data, "config")


@dataclass
class EvaluationRecord:
    genome_id: int
    fitness: float  # 1 / (1 + f), higher is better
    objective: ObjectiveResult
    behavior: tuple
    covered: frozenset
    seed: int
    novelty: float = 0.0
    ticks: int = 0


def maximisation(f: float) -> float:
    return 1.0 / (1.0 + f)


def rank_candidates(records: Sequence[EvaluationRecord], mode: str) -> list[int]:
    """Genome ids best first.

    Records are sorted by fitness; a run of records within ``TIE_TOLERANCE``
    of the run's best forms a tie group, ordered by novelty (novelty mode)
    and then genome id.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}")
    by_fit = sorted(records, key=lambda r: (-r.fitness, r.genome_id))
    out: list[int] = []
    i = 0
    while i < len(by_fit):
        j = i + 1
        while j < len(by_fit) and by_fit[i].fitness - by_fit[j].fitness <= TIE_TOLERANCE:
            j += 1
        group = by_fit[i:j]
        if mode == NOVELTY:
            group = sorted(group, key=lambda r: (-r.novelty, r.genome_id))
        out.extend(r.genome_id for r in group)
        i = j
    return out


# seeds -------------------------------------------------------------------------


def derive_seed(*words: int) -> int:
    return int(np.random.SeedSequence([int(w) for w in words]).generate_state(1)[0])


def robustness_seeds(seed_base: int, r: int) -> list[int]:
    return [derive_seed(seed_base, i) for i in range(r)]


# evaluation ----------------------------------------------------------------------


def evaluate_genome(
    genome: Genome,
    instance: GameInstance,
    cdg: ControlDependenceGraph,
    target: int,
    seed: int,
    max_ticks: int = DEFAULT_MAX_TICKS,
    decision_interval: int = DEFAULT_DECISION_INTERVAL,
) -> EvaluationRecord:
    ep = run_episode(make_policy(genome, instance.alphabet), instance, seed, max_ticks, decision_interval)
    obj = statement_fitness(ep, target, cdg)
    return EvaluationRecord(
        genome_id=genome.id,
        fitness=maximisation(obj.fitness),
        objective=obj,
        behavior=extract_features(ep.final_state, instance.schema),
        covered=ep.covered,
        seed=seed,
        ticks=ep.ticks,
    )


def replay_episodes(
    genome: Genome, instance: GameInstance, seeds: Sequence[int], max_ticks: int, decision_interval: int
) -> Iterator:
    for s in seeds:
        yield run_episode(make_policy(genome, instance.alphabet), instance, s, max_ticks, decision_interval)


def robustness_check(
    genome: Genome,
    target: int,
    instance: GameInstance,
    r: int,
    seed_base: int,
    max_ticks: int = DEFAULT_MAX_TICKS,
    decision_interval: int = DEFAULT_DECISION_INTERVAL,
) -> bool:
    """Whether ``genome`` covers ``target`` in all ``r`` seeded replays."""
    return all(
        target in ep.covered
        for ep in replay_episodes(genome, instance, robustness_seeds(seed_base, r), max_ticks, decision_interval)
    )


_WORKER: dict[str, Any] = {}


def _worker_init(spec_doc: dict) -> None:
    inst = GameInstance(spec_from_dict(spec_doc))
    _WORKER["instance"] = inst
    _WORKER["cdg"] = build_cdg(inst.spec)


def _worker_eval(job: tuple) -> EvaluationRecord:
    gdoc, target, seed, max_ticks, interval = job
    return evaluate_genome(
        genome_from_dict(gdoc), _WORKER["instance"], _WORKER["cdg"], target, seed, max_ticks, interval
    )


class _Evaluator:
    def __init__(self, instance: GameInstance, cdg: ControlDependenceGraph, workers: int):
        self.instance = instance
        self.cdg = cdg
        self.pool = (
            ProcessPoolExecutor(workers, initializer=_worker_init, initargs=(spec_to_dict(instance.spec),))
            if workers > 1
            else None
        )
        self.workers = workers

    def __call__(self, genomes: Sequence[Genome], target: int, seeds: Sequence[int], cfg: SearchConfig):
        if self.pool is None:
            return [
                evaluate_genome(g, self.instance, self.cdg, target, s, cfg.max_ticks, cfg.decision_interval)
                for g, s in zip(genomes, seeds)
            ]
        jobs = [(genome_to_dict(g), target, s, cfg.max_ticks, cfg.decision_interval) for g, s in zip(genomes, seeds)]
        chunk = max(1, len(jobs) // (4 * self.workers))
        return list(self.pool.map(_worker_eval, jobs, chunksize=chunk))

    def close(self) -> None:
        if self.pool is not None:
            self.pool.shutdown()


# suite and timeline --------------------------------------------------------------


@dataclass(frozen=True)
class SuiteEntry:
    target: int
    genome: dict
    seed_base: int
    seeds: tuple[int, ...]
    generation: int
    # target the genome was evolved for; differs when the statement was
    # covered along the way in every robustness replay
    found_for: int


@dataclass
class DynamicTestSuite:
    game: str
    digest: str
    config: dict
    total: int
    entries: dict[int, SuiteEntry] = field(default_factory=dict)

    @property
    def covered(self) -> int:
        return len(self.entries)

    def coverage(self) -> float:
        return self.covered / self.total if self.total else 1.0

    def to_dict(self) -> dict:
        return {
            "game": self.game,
            "digest": self.digest,
            "config": self.config,
            "total": self.total,
            "covered": self.covered,
            "entries": [
                {
                    "target": e.target,
                    "found_for": e.found_for,
                    "generation": e.generation,
                    "seed_base": e.seed_base,
                    "seeds": list(e.seeds),
                    "genome": e.genome,
                }
                for _, e in sorted(self.entries.items())
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "DynamicTestSuite":
        try:
            suite = cls(str(d["game"]), str(d["digest"]), dict(d["config"]), int(d["total"]))
            for e in d["entries"]:
                suite.entries[int(e["target"])] = SuiteEntry(
                    int(e["target"]),
                    dict(e["genome"]),
                    int(e["seed_base"]),
                    tuple(int(s) for s in e["seeds"]),
                    int(e["generation"]),
                    int(e["found_for"]),
                )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed suite: {exc}") from exc
        return suite

    @classmethod
    def load(cls, path: str | Path) -> "DynamicTestSuite":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class TimelinePoint:
    generation: int
    elapsed_ms: int
    covered: int
    total: int


@dataclass
class CoverageTimeline:
    points: list[TimelinePoint] = field(default_factory=list)

    HEADER = ("run_id", "mode", "generation", "elapsed_ms", "covered", "total")

    def append(self, p: TimelinePoint) -> None:
        if self.points and p.covered < self.points[-1].covered:
            raise ValueError("robust coverage cannot decrease")
        self.points.append(p)

    def rows(self, run_id: str, mode: str) -> list[tuple]:
        return [(run_id, mode, p.generation, p.elapsed_ms, p.covered, p.total) for p in self.points]

    def to_csv(self, run_id: str, mode: str, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(self.HEADER)
        w.writerows(self.rows(run_id, mode))
        return buf.getvalue()


@dataclass
class GenerationLog:
    target: int
    generation: int  # run-wide
    local_generation: int  # within the current attempt at ``target``
    records: list[EvaluationRecord]
    rank: list[int]


@dataclass
class SearchResult:
    suite: DynamicTestSuite
    timeline: CoverageTimeline
    archive: BehaviorArchive
    generations: int
    events: dict[str, int | None] = field(default_factory=dict)

    def __iter__(self):
        return iter((self.suite, self.timeline, self.archive))


# the loop ------------------------------------------------------------------------


def _pick_target(primary: list[int], secondary: list[int], deferred: set[int]) -> int:
    """Round-robin over targets: lowest id not yet deferred, regular targets
    before those inside scripts whose trigger has not fired robustly."""
    for pool in (primary, secondary):
        fresh = [t for t in pool if t not in deferred]
        if fresh:
            return fresh[0]
    deferred.clear()
    return (primary or secondary)[0]


def neatest_search(
    instance: GameInstance,
    config: SearchConfig,
    on_generation: Callable[[GenerationLog], None] | None = None,
    progress: Callable[[str], None] | None = None,
) -> SearchResult:
    """Evolve a dynamic test suite for ``instance``.

    Targets come from :func:`next_targets` in ascending id order. Each attempt
    starts from mutants of every agent already in the suite (or minimal
    networks) and runs for at most ``target_generations`` generations before
    the target is deferred and the next one tried. A target counts once a
    covering agent re-covers it in ``robustness_reps`` seeded replays; every
    other statement covered in all of those replays is credited as well.
    """
    cfg = config
    spec = instance.spec
    cdg = build_cdg(spec)
    suite = DynamicTestSuite(spec.name, instance.digest, cfg.echo(), len(cdg.statements))
    timeline = CoverageTimeline()
    archive = BehaviorArchive.seeded([cfg.seed, _ARCHIVE])
    rng = np.random.default_rng([cfg.seed, _REPRODUCTION])
    ledger = InnovationLedger()
    covered: set[int] = set()
    fired: set[int] = set()
    seeds_pool: list[Genome] = []  # suite agents, in the order they were found
    deferred: set[int] = set()
    n_in, n_out = instance.schema.dimension, len(instance.alphabet)
    evaluate = _Evaluator(instance, cdg, cfg.workers)
    started = time.monotonic()
    ticks = 0
    generation = 0
    next_id = 0

    def out_of_budget() -> bool:
        if generation >= cfg.max_generations:
            return True
        return cfg.budget_ms is not None and (time.monotonic() - started) * 1000.0 >= cfg.budget_ms

    try:
        while not out_of_budget():
            primary = next_targets(cdg, covered | fired)
            # statements in scripts whose trigger never fired robustly
            secondary = [t for t in next_targets(cdg, covered | set(cdg.entries)) if t not in primary]
            if not primary and not secondary:
                break
            target = _pick_target(primary, secondary, deferred)
            seeds = seeds_pool[-cfg.neat.population_size :]
            pop, _ = init_population(cfg.neat, n_in, n_out, rng, seeds=seeds or None, ledger=ledger, first_id=next_id)
            found = False
            for local in range(cfg.target_generations):
                if out_of_budget():
                    break
                ep_seeds = [derive_seed(cfg.seed, _EVALUATION, generation, g.id) for g in pop.genomes]
                records = evaluate(pop.genomes, target, ep_seeds, cfg)
                ticks += sum(r.ticks for r in records)
                if cfg.mode == NOVELTY:
                    scores = generation_novelty([r.behavior for r in records], archive.entries, cfg.novelty)
                    for r, s in zip(records, scores):
                        r.novelty = s
                    for r in records:
                        update_archive(archive, r.behavior, cfg.novelty)
                by_id = {g.id: g for g in pop.genomes}
                for r in records:
                    by_id[r.genome_id].fitness = r.fitness
                    by_id[r.genome_id].novelty = r.novelty
                rank = rank_candidates(records, cfg.mode)
                rec_by_id = {r.genome_id: r for r in records}

                checked = 0
                for gid in rank:
                    if checked >= cfg.robustness_candidates:
                        break
                    if target not in rec_by_id[gid].covered:
                        continue
                    checked += 1
                    base = derive_seed(cfg.seed, _ROBUSTNESS, target, generation, gid)
                    vseeds = robustness_seeds(base, cfg.robustness_reps)
                    runs = []
                    for ep in replay_episodes(by_id[gid], instance, vseeds, cfg.max_ticks, cfg.decision_interval):
                        ticks += ep.ticks
                        runs.append(ep)
                        if target not in ep.covered:
                            break
                    if len(runs) < len(vseeds) or target not in runs[-1].covered:
                        continue
                    always = frozenset.intersection(*(ep.covered for ep in runs))
                    gdoc = genome_to_dict(by_id[gid])
                    for sid in sorted(always - covered):
                        suite.entries[sid] = SuiteEntry(sid, gdoc, base, tuple(vseeds), generation, target)
                    covered |= always
                    fired |= frozenset.intersection(*(ep.fired for ep in runs))
                    seeds_pool.append(by_id[gid])
                    found = True
                    break

                if on_generation is not None:
                    on_generation(GenerationLog(target, generation, local, records, rank))
                timeline.append(TimelinePoint(generation, ticks * 1000 // TICKS_PER_SECOND, len(covered), suite.total))
                if progress is not None:
                    progress(
                        f"gen {generation} target {target} best F {rec_by_id[rank[0]].fitness:.4f} "
                        f"coverage {len(covered)}/{suite.total}"
                    )
                generation += 1
                if found:
                    break
                pop = evolve_generation(pop, cfg.neat, ledger, rank, rng)
            next_id = max(next_id, pop.next_genome_id)
            if found:
                deferred.discard(target)
            else:
                # statements in the same branch share the objective until one
                # is covered, so they are set aside together
                deferred.update(
                    t
                    for t in cdg.statements
                    if t not in covered and cdg.parent[t] == cdg.parent[target] and cdg.label[t] == cdg.label[target]
                )
    finally:
        evaluate.close()
    return SearchResult(suite, timeline, archive, generation)


# replay --------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplayOutcome:
    target: int
    passes: int
    reps: int

    @property
    def passed(self) -> bool:
        return self.passes == self.reps


def replay_suite(
    suite: DynamicTestSuite, instance: GameInstance, r: int | None = None
) -> list[ReplayOutcome]:
    """Re-run the robustness check of every entry with its recorded seeds
    (``r`` overrides the repetition count, extending the same seed sequence)."""
    if suite.digest != instance.digest:
        raise SuiteDigestError(f"suite was generated for digest {suite.digest}, game has {instance.digest}")
    max_ticks = int(suite.config.get("max_ticks", DEFAULT_MAX_TICKS))
    interval = int(suite.config.get("decision_interval", DEFAULT_DECISION_INTERVAL))
    out = []
    cache: dict[tuple, list] = {}
    for target, e in sorted(suite.entries.items()):
        reps = len(e.seeds) if r is None else r
        seeds = robustness_seeds(e.seed_base, reps)
        key = (json.dumps(e.genome, sort_keys=True), tuple(seeds))
        if key not in cache:
            g = genome_from_dict(e.genome)
            cache[key] = [ep.covered for ep in replay_episodes(g, instance, seeds, max_ticks, interval)]
        out.append(ReplayOutcome(target, sum(target in c for c in cache[key]), reps))
    return out


__all__ = [
    "FITNESS",
    "MODES",
    "NOVELTY",
    "TIE_TOLERANCE",
    "ConfigError",
    "CoverageTimeline",
    "DynamicTestSuite",
    "EvaluationRecord",
    "GenerationLog",
    "ReplayOutcome",
    "SearchConfig",
    "SearchResult",
    "SuiteDigestError",
    "SuiteEntry",
    "TimelinePoint",
    "derive_seed",
    "evaluate_genome",
    "maximisation",
    "neatest_search",
    "rank_candidates",
    "replay_suite",
    "robustness_check",
    "robustness_seeds",
]
