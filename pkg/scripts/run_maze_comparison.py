"""Fitness-only vs. novelty on the maze world: 10 repetitions per mode,
population 50, 150 generations, 25 generations per target.

    python3 scripts/run_maze_comparison.py --out-dir results/maze
"""

import argparse
import time

from noveltest.experiments import run_comparison, write_report
from noveltest.games import build_maze_world, event_targets
from noveltest.neat import NeatParams
from noveltest.search import FITNESS, NOVELTY, SearchConfig
from noveltest.vm import load_game


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--seed", type=int, default=2024, help="master seed")
    ap.add_argument("--generations", type=int, default=150)
    ap.add_argument("--out-dir", default="results/maze")
    args = ap.parse_args()

    spec = build_maze_world()
    cfg = SearchConfig(max_generations=args.generations, target_generations=25,
                       neat=NeatParams(population_size=50))
    t0 = time.perf_counter()
    report = run_comparison(load_game(spec), cfg, args.reps, args.seed, event_targets(spec),
                            progress=lambda m: print(m, flush=True))
    write_report(report, args.out_dir)
    counts = report.event_counts()
    for m in (NOVELTY, FITNESS):
        print(f"{m}: level-2 advance {counts[m]['level2_advance']}/{args.reps}, "
              f"median coverage {report.median(m):.4f}")
    u, p = report.u_and_p
    print(f"A12 = {report.a12:.3f}, U = {u:g}, p = {p:.4g}")
    print(f"runtime {(time.perf_counter() - t0) / 60:.1f} min, report in {args.out_dir}")


if __name__ == "__main__":
    main()
