"""Registry of reference cuts for benchmark graphs.

Ships a versioned table of the strongest published cuts for the classic
partitioning testbed instances at k = 2 (archive-certified) and k = 3
(best results observed across solvers).  Lookups key on
(graph name, k, imbalance percent); callers may layer extra entries on top,
and a missing entry simply yields None so benchmarks can fall back to the
best cut observed in the current comparison.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources


@dataclass(frozen=True)
class BestKnownEntry:
    graph: str
    n: int
    d_avg: float
    k: int
    eps_pct: float
    cut: int
    source: str  # "archive" (certified) or "observed"


def _eps_key(epsilon: float) -> float:
    return round(float(epsilon) * 100.0, 4)


@lru_cache(maxsize=1)
def load_registry() -> dict[tuple[str, int, float], BestKnownEntry]:
    text = resources.files("qubopart.data").joinpath("best_known.csv").read_text()
    registry: dict[tuple[str, int, float], BestKnownEntry] = {}
    for row in csv.DictReader(text.splitlines()):
        entry = BestKnownEntry(graph=row["graph"], n=int(row["n"]),
                               d_avg=float(row["d_avg"]), k=int(row["k"]),
                               eps_pct=float(row["eps_pct"]), cut=int(row["cut"]),
                               source=row["source"])
        registry[(entry.graph, entry.k, entry.eps_pct)] = entry
    return registry


def load_extra_registry(path: str) -> dict[tuple[str, int, float], BestKnownEntry]:
    """Read a user-provided registry CSV with the same columns as the built-in one."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    extra: dict[tuple[str, int, float], BestKnownEntry] = {}
    for row in rows:
        entry = BestKnownEntry(graph=row["graph"], n=int(row["n"]),
                               d_avg=float(row.get("d_avg", 0) or 0), k=int(row["k"]),
                               eps_pct=float(row["eps_pct"]), cut=int(row["cut"]),
                               source=row.get("source", "user") or "user")
        extra[(entry.graph, entry.k, entry.eps_pct)] = entry
    return extra


def best_known(graph: str, k: int, epsilon: float,
               extra: dict[tuple[str, int, float], BestKnownEntry] | None = None
               ) -> int | None:
    """Reference cut for (graph, k, epsilon), or None if not on record."""
    key = (graph, k, _eps_key(epsilon))
    if extra and key in extra:
        return extra[key].cut
    entry = load_registry().get(key)
    return entry.cut if entry else None


def graph_meta(graph: str) -> tuple[int, float] | None:
    """(n, average degree) for a registry graph, if known."""
    for entry in load_registry().values():
        if entry.graph == graph:
            return entry.n, entry.d_avg
    return None
