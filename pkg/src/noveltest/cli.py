"""Command-line entry point: ``generate``, ``replay`` and ``compare``.

Exit codes: 0 success, 1 replay failures, 2 invalid configuration, 3 I/O
error or unreadable game spec, 4 suite/game digest mismatch. Progress goes to
standard error; results go to files and standard output.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from noveltest.experiments import ReportError, run_comparison, write_report
from noveltest.games import BUILTIN, event_targets
from noveltest.search import (
    ConfigError,
    DynamicTestSuite,
    SearchConfig,
    SuiteDigestError,
    neatest_search,
    replay_suite,
)
from noveltest.vm import GameSpecError, load_game, load_spec_file
from noveltest.vm.spec import GameSpec

EXIT_OK, EXIT_REPLAY_FAILED, EXIT_CONFIG, EXIT_IO, EXIT_DIGEST = 0, 1, 2, 3, 4
WORKERS_ENV = "NOVELTEST_WORKERS"
# keys a --config file may hold besides SearchConfig fields
PATH_KEYS = {"game", "out", "timeline", "suite", "out_dir", "reps"}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise CliError(f"{WORKERS_ENV} must be an integer, got {raw!r}", EXIT_CONFIG) from None
    if n < 1:
        raise CliError(f"{WORKERS_ENV} must be >= 1", EXIT_CONFIG)
    return n


def load_game_source(source: str) -> GameSpec:
    if source.startswith("builtin:"):
        name = source.split(":", 1)[1]
        if name not in BUILTIN:
            raise CliError(f"--game: unknown built-in {name!r} (choose from {', '.join(sorted(BUILTIN))})", EXIT_CONFIG)
        return BUILTIN[name]()
    try:
        return load_spec_file(source)
    except OSError as exc:
        raise CliError(f"cannot read game spec {source}: {exc.strerror or exc}", EXIT_IO) from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"game spec {source} is not valid JSON: {exc}", EXIT_IO) from exc
    except GameSpecError as exc:
        raise CliError(f"game spec {source} is invalid: {exc}", EXIT_IO) from exc


def _read_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror or exc}", EXIT_IO) from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"--config {path} is not valid JSON: {exc}", EXIT_CONFIG) from exc
    if not isinstance(data, dict):
        raise CliError(f"--config {path} must hold a JSON object", EXIT_CONFIG)
    return data


def _effective(args: argparse.Namespace, overrides: dict[str, Any]) -> tuple[SearchConfig, dict[str, Any]]:
    """Merge the config file with command-line flags (flags win)."""
    data = _read_config(args.config)
    unknown = sorted(set(data) - {f.name for f in dataclasses.fields(SearchConfig)} - PATH_KEYS)
    if unknown:
        raise CliError(f"--config: unknown key(s) {', '.join(unknown)}", EXIT_CONFIG)
    paths = {k: data.pop(k) for k in list(data) if k in PATH_KEYS}
    neat = dict(data.pop("neat", {}))
    if getattr(args, "population", None) is not None:
        neat["population_size"] = args.population
    if neat:
        data["neat"] = neat
    for k, v in overrides.items():
        if v is not None:
            data[k] = v
    try:
        cfg = SearchConfig.from_dict(data)
    except ConfigError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from exc
    for k in PATH_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            paths[k] = v
    return cfg, paths


def _progress(args: argparse.Namespace):
    if args.quiet:
        return None
    return lambda msg: print(msg, file=sys.stderr, flush=True)


def _write(path: str | Path, text: str) -> None:
    try:
        p = Path(path)
        if p.parent and not p.parent.exists():
            p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from exc


def _require(paths: dict[str, Any], key: str, flag: str) -> Any:
    if paths.get(key) is None:
        raise CliError(f"{flag} is required", EXIT_CONFIG)
    return paths[key]


def cmd_generate(args: argparse.Namespace) -> int:
    cfg, paths = _effective(
        args,
        {
            "mode": args.mode,
            "seed": args.seed,
            "max_generations": args.budget_gens,
            "budget_ms": args.budget_ms,
            "target_generations": args.quota,
            "robustness_reps": args.robustness_reps,
            "workers": args.workers,
        },
    )
    spec = load_game_source(_require(paths, "game", "--game"))
    out = _require(paths, "out", "--out")
    instance = load_game(spec)
    result = neatest_search(instance, cfg, progress=_progress(args))
    _write(out, result.suite.dumps())
    if paths.get("timeline"):
        _write(paths["timeline"], result.timeline.to_csv(f"{cfg.mode}-{cfg.seed}", cfg.mode))
    print(f"covered {result.suite.covered}/{result.suite.total} statements in {result.generations} generations")
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        suite = DynamicTestSuite.load(args.suite)
    except OSError as exc:
        raise CliError(f"cannot read suite {args.suite}: {exc.strerror or exc}", EXIT_IO) from exc
    except (json.JSONDecodeError, ValueError) as exc:
        raise CliError(f"suite {args.suite} is malformed: {exc}", EXIT_IO) from exc
    instance = load_game(load_game_source(args.game))
    if args.reps < 1:
        raise CliError("--reps must be >= 1", EXIT_CONFIG)
    try:
        outcomes = replay_suite(suite, instance, args.reps)
    except SuiteDigestError as exc:
        raise CliError(str(exc), EXIT_DIGEST) from exc
    print(f"{'target':>6}  {'passes':>7}  status")
    for o in outcomes:
        print(f"{o.target:>6}  {o.passes:>3}/{o.reps:<3}  {'pass' if o.passed else 'FAIL'}")
    failed = [o.target for o in outcomes if not o.passed]
    print(f"{len(outcomes) - len(failed)}/{len(outcomes)} targets passed")
    if failed:
        print("failing targets: " + ", ".join(map(str, failed)))
        return EXIT_REPLAY_FAILED
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    cfg, paths = _effective(
        args,
        {
            "max_generations": args.budget_gens,
            "target_generations": args.quota,
            "robustness_reps": args.robustness_reps,
            "workers": args.workers,
        },
    )
    reps = paths.get("reps")
    if reps is None:
        raise CliError("--reps is required", EXIT_CONFIG)
    if int(reps) < 2:
        raise CliError(f"--reps {reps}: at least 2 repetitions per mode are needed for statistics", EXIT_CONFIG)
    out_dir = _require(paths, "out_dir", "--out-dir")
    spec = load_game_source(_require(paths, "game", "--game"))
    instance = load_game(spec)
    seed = args.seed if args.seed is not None else cfg.seed
    report = run_comparison(instance, cfg, int(reps), seed, event_targets(spec), progress=_progress(args))
    try:
        write_report(report, out_dir)
    except ReportError as exc:
        raise CliError(str(exc), EXIT_IO) from exc
    u, p = report.u_and_p
    print(f"A12(novelty, fitness) = {report.a12:.4f}")
    print(f"U = {u:g}, p = {p:.4g}")
    for m in report.modes:
        print(f"median coverage [{m}] = {report.median(m):.4f}")
    for m, counts in report.event_counts().items():
        for name, n in counts.items():
            print(f"{name} [{m}] = {n}/{report.repetitions}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse's own usage errors are config errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="noveltest", description="Evolve neural-network test agents for small sprite games.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", help="JSON file with search settings and paths; flags override it")
        sp.add_argument("--workers", type=int, default=None, help=f"evaluation processes (default ${WORKERS_ENV} or 1)")
        sp.add_argument("--population", type=int, default=None, help="NEAT population size")
        sp.add_argument("--quota", type=int, default=None, help="generations per target before it is deferred")
        sp.add_argument("--robustness-reps", type=int, default=None, help="replays a covering agent must pass")
        sp.add_argument("--quiet", action="store_true", help="no progress on standard error")

    g = sub.add_parser("generate", help="evolve a test suite for one game")
    g.add_argument("--game", help="builtin:maze, builtin:clicker, or a game spec JSON path")
    g.add_argument("--mode", choices=("fitness", "novelty"), default=None)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--budget-gens", type=int, default=None, help="generation budget")
    g.add_argument("--budget-ms", type=int, default=None, help="wall-clock budget (results then depend on speed)")
    g.add_argument("--out", help="suite JSON to write")
    g.add_argument("--timeline", help="coverage timeline CSV to write")
    common(g)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("replay", help="re-run a suite's robustness checks")
    r.add_argument("--suite", required=True)
    r.add_argument("--game", required=True)
    r.add_argument("--reps", type=int, default=10)
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_replay)

    c = sub.add_parser("compare", help="fitness-only vs. novelty over repeated runs")
    c.add_argument("--game")
    c.add_argument("--reps", type=int, default=None, help="repetitions per mode (>= 2)")
    c.add_argument("--seed", type=int, default=None, help="master seed")
    c.add_argument("--out-dir", dest="out_dir")
    c.add_argument("--budget-gens", type=int, default=None)
    common(c)
    c.set_defaults(func=cmd_compare)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "workers", 1) is None:
            args.workers = _default_workers()
        return args.func(args)
    except CliError as exc:
        print(f"noveltest: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
