"""Find fitness plateaus on the clicker's string-guarded statements.

Runs fitness-only search, lists generations whose target sits under a string
comparison and whose F values are all identical, then replays the first such
generation in novelty mode and shows how the tied population is ordered.

    python3 scripts/run_clicker_plateau.py --seed 0
"""

import argparse

from noveltest.games import build_clicker
from noveltest.neat import NeatParams
from noveltest.objectives import build_cdg
from noveltest.search import FITNESS, NOVELTY, SearchConfig, neatest_search
from noveltest.vm import load_game


def string_guarded(spec):
    cdg = build_cdg(spec)
    stmts = {s.id: s for _, s in spec.iter_statements()}
    return {t for t in cdg.statements
            if cdg.parent[t] in stmts and stmts[cdg.parent[t]].cond is not None
            and stmts[cdg.parent[t]].cond.kind == "string_equals"}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--generations", type=int, default=60)
    args = ap.parse_args()

    inst = load_game(build_clicker())
    guarded = string_guarded(inst.spec)
    neat = NeatParams(population_size=50)
    logs = []
    neatest_search(inst, SearchConfig(mode=FITNESS, seed=args.seed, max_generations=args.generations, neat=neat),
                   on_generation=logs.append)
    flat = [l for l in logs if l.target in guarded and len({r.fitness for r in l.records}) == 1]
    print(f"{len(flat)} of {len(logs)} generations are flat on a string-guarded target")
    for l in flat[:10]:
        print(f"  generation {l.generation}: target {l.target}, F = {l.records[0].fitness:.6f}")
    if not flat:
        return
    g = flat[0].generation
    nlogs = []
    neatest_search(inst, SearchConfig(mode=NOVELTY, seed=args.seed, max_generations=g + 1, neat=neat),
                   on_generation=nlogs.append)
    log = next(l for l in nlogs if l.generation == g)
    by_id = {r.genome_id: r for r in log.records}
    print(f"novelty mode, generation {g}, target {log.target}: rank, F, novelty")
    for i, gid in enumerate(log.rank[:10]):
        r = by_id[gid]
        print(f"  {i:>2}  genome {gid:>4}  F {r.fitness:.6f}  novelty {r.novelty:.6f}")


if __name__ == "__main__":
    main()
