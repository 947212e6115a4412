"""Cosine behaviour distance, k-nearest-neighbour novelty and the behaviour archive."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class NoveltyParams:
    k: int = 15
    archive_probability: float = 0.1

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        if not 0.0 <= self.archive_probability <= 1.0:
            raise ValueError("archive_probability must lie in [0, 1]")


def behavior_distance(s1: Sequence[float], s2: Sequence[float]) -> float:
    """``1 - (cos(s1, s2) + 1) / 2``: 0 for parallel, 0.5 for orthogonal, 1 for
    opposite vectors. A zero vector on either side counts as orthogonal."""
    if len(s1) != len(s2):
        raise ValueError(f"behaviour dimensions differ: {len(s1)} vs {len(s2)}")
    dot = n1 = n2 = 0.0
    for a, b in zip(s1, s2):
        dot += a * b
        n1 += a * a
        n2 += b * b
    if n1 == 0.0 or n2 == 0.0:
        return 0.5
    # sqrt of the product keeps identical vectors at exactly cos = 1
    cos = dot / math.sqrt(n1 * n2)
    cos = 1.0 if cos > 1.0 else -1.0 if cos < -1.0 else cos
    return 1.0 - (cos + 1.0) / 2.0


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``behavior_distance`` between every row of ``a`` and every row of ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na = np.einsum("ij,ij->i", a, a)
    nb = np.einsum("ij,ij->i", b, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = (a @ b.T) / np.sqrt(np.outer(na, nb))
    cos = np.clip(cos, -1.0, 1.0)
    cos[(na == 0.0)[:, None] | (nb == 0.0)[None, :]] = 0.0
    return 1.0 - (cos + 1.0) / 2.0


def novelty_score(b: Sequence[float], neighbours: Iterable[Sequence[float]], params: NoveltyParams) -> float:
    """Mean distance to the ``k`` nearest neighbours (all of them when fewer);
    1 for an empty neighbourhood. ``b`` itself must not be in ``neighbours``."""
    d = sorted(behavior_distance(b, n) for n in neighbours)
    if not d:
        return 1.0
    near = d[: params.k]
    return math.fsum(near) / len(near)


def generation_novelty(
    behaviours: Sequence[Sequence[float]], archive: Sequence[Sequence[float]], params: NoveltyParams
) -> list[float]:
    """Novelty of each behaviour against the rest of its generation plus the archive.

    Same values as calling :func:`novelty_score` per behaviour, vectorised.
    """
    n = len(behaviours)
    if n == 0:
        return []
    gen = np.asarray(behaviours, dtype=float)
    pool = np.vstack([gen, np.asarray(archive, dtype=float)]) if len(archive) else gen
    if pool.shape[0] - 1 == 0:
        return [1.0] * n
    d = pairwise_distances(gen, pool)
    d[np.arange(n), np.arange(n)] = np.inf  # exclude self
    k = min(params.k, pool.shape[0] - 1)
    near = np.sort(d, axis=1)[:, :k]
    return [math.fsum(row) / k for row in near.tolist()]


@dataclass
class BehaviorArchive:
    """Append-only store of behaviours with its own insertion random stream."""

    rng: np.random.Generator
    entries: list[tuple[float, ...]] = field(default_factory=list)

    @classmethod
    def seeded(cls, seed: int | Sequence[int]) -> "BehaviorArchive":
        return cls(np.random.default_rng(seed))

    def __len__(self) -> int:
        return len(self.entries)

    def dump_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for row in self.entries:
                w.writerow([repr(v) for v in row])


def update_archive(archive: BehaviorArchive, b: Sequence[float], params: NoveltyParams) -> BehaviorArchive:
    """Append ``b`` with probability ``params.archive_probability``, regardless of
    its novelty; exactly one draw from the archive's stream per call."""
    if archive.entries and len(b) != len(archive.entries[0]):
        raise ValueError(f"behaviour dimension {len(b)} does not match archive dimension {len(archive.entries[0])}")
    if archive.rng.random() < params.archive_probability:
        archive.entries.append(tuple(float(v) for v in b))
    return archive


__all__ = [
    "BehaviorArchive",
    "NoveltyParams",
    "behavior_distance",
    "generation_novelty",
    "novelty_score",
    "pairwise_distances",
    "update_archive",
]
