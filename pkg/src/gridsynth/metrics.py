"""Topological, electrical and GIS comparison metrics for grid models."""
from __future__ import annotations

import csv
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .errors import BinningError, ModelIntegrityError
from .geodata import haversine


@dataclass
class TransformerStats:
    transformer: str
    node_count: int
    eccentricity_m: float


@dataclass
class LoadingHistogram:
    lower_edges: np.ndarray  # left edge of each bin; the last bin is open-ended
    counts: np.ndarray
    bin_width: float

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def frequencies(self) -> np.ndarray:
        return self.counts / self.total if self.total else self.counts.astype(float)


def nodes_per_transformer(model) -> dict[str, int]:
    """Count LV nodes (building + connection busbars) per supplying transformer,
    plus the transformer's own busbar."""
    owner = model.supplied_by()
    counts = {s.id: 1 for s in model.substations}
    orphans = []
    for node in model.lv_nodes():
        tid = owner.get(node)
        if tid is None:
            orphans.append(node)
        else:
            counts[tid] += 1
    if orphans:
        raise ModelIntegrityError(f"{len(orphans)} LV node(s) without a supplying transformer: {orphans[:5]}")
    return counts


def tree_distances(model, tid: str) -> dict[str, float]:
    """Cable distance from transformer ``tid`` to every node of its tree."""
    children: dict[str, list] = {}
    for seg in model.tree(tid):
        children.setdefault(seg.a, []).append(seg)
    root = model.station_node(tid)
    dist = {root: 0.0}
    stack = [root]
    while stack:
        a = stack.pop()
        for seg in children.get(a, []):
            dist[seg.b] = dist[a] + seg.length_m
            stack.append(seg.b)
    return dist


def eccentricity(model, tid: str) -> float:
    """Longest cable distance from the transformer to a node it supplies."""
    lv = set(model.lv_nodes())
    return max((d for n, d in tree_distances(model, tid).items() if n in lv), default=0.0)


def transformer_stats(model) -> list[TransformerStats]:
    counts = nodes_per_transformer(model)
    return [TransformerStats(s.id, counts[s.id], eccentricity(model, s.id)) for s in model.substations]


def loading_histogram(loadings, bin_width: float = 1.0, upper: float = 100.0) -> LoadingHistogram:
    """Histogram of branch loadings (percent) with fixed bins and one overflow bin.

    ``loadings`` may be a FlowResult, a list of FlowResults, a mapping of
    branch -> percent, or a plain iterable of percentages.
    """
    values = _loading_values(loadings)
    n_bins = int(round(upper / bin_width))
    counts = np.zeros(n_bins + 1, dtype=int)
    for v in values:
        if v < 0:
            raise ValueError(f"negative loading {v}")
        counts[min(int(v // bin_width), n_bins)] += 1
    return LoadingHistogram(np.arange(n_bins + 1) * bin_width, counts, bin_width)


def _loading_values(obj):
    if hasattr(obj, "loading_pct"):
        return list(obj.loading_pct.values())
    if isinstance(obj, dict):
        return list(obj.values())
    out = []
    for item in obj:
        out.extend(_loading_values(item) if hasattr(item, "loading_pct") else [float(item)])
    return out


def similarity_index(h1: LoadingHistogram, h2: LoadingHistogram, normalized: bool = False) -> float:
    """Euclidean distance between two histograms (0 means identical)."""
    if h1.bin_width != h2.bin_width or len(h1.counts) != len(h2.counts):
        raise BinningError("histograms use different binning")
    a = h1.frequencies() if normalized else h1.counts.astype(float)
    b = h2.frequencies() if normalized else h2.counts.astype(float)
    return float(np.sqrt(np.sum((a - b) ** 2)))


def transformer_distances(known, computed) -> list[tuple[str, str, float]]:
    """One-to-one mapping of computed to known stations.

    Every computed station is mapped to its closest known station; when
    several claim the same one, the closest keeps it and the others move on
    to their closest still unclaimed station.  Returns
    ``(known_id, computed_id, meters)`` sorted by known id.
    """
    if not known or not computed:
        return []
    d = {(k.id, c.id): haversine(k.location, c.location) for k in known for c in computed}
    unclaimed = sorted(k.id for k in known)
    pending = sorted(c.id for c in computed)
    pairs = []
    while pending and unclaimed:
        claims: dict[str, list[str]] = {}
        for c in pending:
            target = min(unclaimed, key=lambda k: (d[k, c], k))
            claims.setdefault(target, []).append(c)
        for k, cs in sorted(claims.items()):
            winner = min(cs, key=lambda c: (d[k, c], c))
            pairs.append((k, winner, d[k, winner]))
            unclaimed.remove(k)
            pending.remove(winner)
    return sorted(pairs)


# ---------------------------------------------------------------------------
# runtime instrumentation

STAGES = ("data ingestion", "20 kV generation", "400 V generation", "export")


class StageTimer:
    """Wall-clock timer per pipeline stage."""

    def __init__(self):
        self.seconds: dict[str, float] = {}
        self.milp_seconds = 0.0

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.seconds[name] = self.seconds.get(name, 0.0) + time.perf_counter() - t0

    @property
    def total(self) -> float:
        return math.fsum(self.seconds.values())


def runtime_report(timer: StageTimer) -> list[tuple[str, float]]:
    rows = [(name, timer.seconds.get(name, 0.0)) for name in STAGES]
    rows += [(name, s) for name, s in timer.seconds.items() if name not in STAGES]
    rows.append(("total", math.fsum(s for _, s in rows)))
    return rows


def speedup(baseline: StageTimer, candidate: StageTimer) -> float:
    """Ratio of baseline (e.g. NB-CCE) to candidate (e.g. IP-CCE) total runtime."""
    return baseline.total / candidate.total


def write_runtime_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stage", "seconds"])
        for name, s in rows:
            w.writerow([name, f"{s:.6f}"])
