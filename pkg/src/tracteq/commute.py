"""Commute microsimulation: OD trips, demographic labels, per-tract distance.

Trips route once per origin-destination pair (free-flow routing makes every
worker on a pair take the same path). Group labels come either from a
deterministic fractional split or from counter-based coin flips keyed by
(seed, home, work, worker index), so bernoulli draws never depend on
iteration or parallel order.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .data_model import TractSet
from .errors import ValidationError
from .network import EdgeTractMap, Graph, Route, route_tract_distances, shortest_path

log = logging.getLogger(__name__)

GROUPS = ("white", "non_white")


@dataclass(frozen=True)
class ODTable:
    """Origin-destination worker counts, one row per (home, work) pair.

    Rows are sorted by (home, work); duplicate pairs are merged by summing.
    """

    rows: tuple[tuple[str, str, int], ...]

    @staticmethod
    def from_rows(rows) -> "ODTable":
        merged: dict[tuple[str, str], int] = {}
        for home, work, count in rows:
            count = int(count)
            if count < 0:
                raise ValidationError(f"OD pair {home}->{work}: negative count {count}")
            merged[(home, work)] = merged.get((home, work), 0) + count
        return ODTable(
            tuple((h, w, c) for (h, w), c in sorted(merged.items()))
        )

    @property
    def pairs(self) -> list[tuple[str, str]]:
        return [(h, w) for h, w, _ in self.rows]

    @property
    def total_workers(self) -> int:
        return sum(c for _, _, c in self.rows)


def load_od(path: str, tracts: TractSet | None = None) -> ODTable:
    """Read a home,work,count table; counts must be nonnegative integers.

    When a TractSet is given, rows naming unknown tracts are dropped and
    counted in the log.
    """
    rows: list[tuple[str, str, int]] = []
    dropped = 0
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"home", "work", "count"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValidationError(f"{path}: header must include home,work,count")
        for lineno, row in enumerate(reader, start=2):
            home = (row["home"] or "").strip()
            work = (row["work"] or "").strip()
            cell = (row["count"] or "").strip()
            try:
                count = int(cell)
            except ValueError:
                raise ValidationError(
                    f"{path} line {lineno}: count must be an integer, got {cell!r}"
                ) from None
            if count < 0:
                raise ValidationError(f"{path} line {lineno}: negative count {count}")
            if tracts is not None and (home not in tracts or work not in tracts):
                dropped += 1
                continue
            rows.append((home, work, count))
    if dropped:
        log.warning("dropped %d OD row(s) naming unknown tracts", dropped)
    if not rows:
        raise ValidationError(f"{path}: no usable OD rows")
    return ODTable.from_rows(rows)


@dataclass(frozen=True)
class TripAssignment:
    """Per-(home, work) trip weight for each group; weights sum to the
    (possibly drive-share-scaled) pair count."""

    mode: str  # bernoulli | fractional
    seed: int
    weights: dict[tuple[str, str], dict[str, float]]


def _pair_counter(home: str, work: str) -> list[int]:
    digest = hashlib.sha256(f"{home}\x1f{work}".encode()).digest()
    return list(struct.unpack("<4Q", digest))


def assign_groups(
    od: ODTable, tracts: TractSet, mode: str = "fractional", seed: int = 0
) -> TripAssignment:
    """Split each pair's workers into group weights.

    fractional: weights are count*p and count*(1-p) with p the home tract's
    group share. bernoulli: each worker flips an independent coin; the stream
    for a pair is keyed by hashing (home, work) into the generator counter,
    with the worker's index selecting the draw, so any evaluation order gives
    identical output for a fixed seed.
    """
    if mode not in ("bernoulli", "fractional"):
        raise ValueError(f"unknown assignment mode {mode!r}")
    share_by_id: dict[str, float] = {}
    for home in {h for h, _, _ in od.rows}:
        if home not in tracts:
            raise ValidationError(f"OD home tract {home!r} not in tract set")
        t = tracts[tracts.index_of(home)]
        p = t.attributes.get(tracts.group_share_column)
        if p is None or not math.isfinite(p):
            raise ValidationError(f"tract {home!r} has no group share")
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"tract {home!r}: group share {p} outside [0,1]")
        share_by_id[home] = float(p)

    weights: dict[tuple[str, str], dict[str, float]] = {}
    for home, work, count in od.rows:
        p = share_by_id[home]
        if mode == "fractional":
            w_white = count * p
        else:
            gen = np.random.Generator(
                np.random.Philox(key=seed, counter=_pair_counter(home, work))
            )
            draws = gen.random(count)
            w_white = float(np.count_nonzero(draws < p))
        weights[(home, work)] = {
            GROUPS[0]: w_white,
            GROUPS[1]: count - w_white,
        }
    return TripAssignment(mode=mode, seed=seed, weights=weights)


def scale_by_drive_share(
    assignment: TripAssignment, drive_share: Mapping[str, float]
) -> TripAssignment:
    """Multiply every group weight by the home tract's driving share."""
    scaled: dict[tuple[str, str], dict[str, float]] = {}
    for (home, work), by_group in assignment.weights.items():
        try:
            share = float(drive_share[home])
        except KeyError:
            raise ValidationError(f"no drive share for home tract {home!r}") from None
        if not 0.0 <= share <= 1.0:
            raise ValidationError(f"tract {home!r}: drive share {share} outside [0,1]")
        scaled[(home, work)] = {g: w * share for g, w in by_group.items()}
    return TripAssignment(assignment.mode, assignment.seed, scaled)


@dataclass(frozen=True)
class TraversalTable:
    """Distance driven through each tract (km) and commuters living in each
    tract, both broken down by group."""

    groups: tuple[str, ...]
    D: dict[str, dict[str, float]]  # tract -> group -> km
    C: dict[str, dict[str, float]]  # tract -> group -> commuter weight
    n_pairs: int = 0
    n_unreachable: int = 0

    def tract_ids(self) -> list[str]:
        return sorted(self.D.keys() | self.C.keys())

    def D_total(self, tract_id: str) -> float:
        return math.fsum(self.D.get(tract_id, {}).values())

    def C_total(self, tract_id: str) -> float:
        return math.fsum(self.C.get(tract_id, {}).values())

    def total_km(self) -> float:
        return math.fsum(
            v for by_group in self.D.values() for v in by_group.values()
        )


def write_traversal(table: TraversalTable, path: str, header_lines: list[str] | None = None) -> None:
    """Serialize as tract_id,group,D_km,C_count rows; floats round-trip via repr."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        fh.write("tract_id,group,D_km,C_count\n")
        for tid in table.tract_ids():
            for g in table.groups:
                d = table.D.get(tid, {}).get(g, 0.0)
                c = table.C.get(tid, {}).get(g, 0.0)
                fh.write(f"{tid},{g},{d!r},{c!r}\n")


def read_traversal(path: str) -> TraversalTable:
    """Inverse of write_traversal; comment lines starting with # are skipped."""
    D: dict[str, dict[str, float]] = {}
    C: dict[str, dict[str, float]] = {}
    groups: list[str] = []
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    required = {"tract_id", "group", "D_km", "C_count"}
    if reader.fieldnames is None or not required <= set(reader.fieldnames):
        raise ValidationError(f"{path}: header must include tract_id,group,D_km,C_count")
    for row in reader:
        tid = row["tract_id"]
        g = row["group"]
        if g not in groups:
            groups.append(g)
        D.setdefault(tid, {})[g] = float(row["D_km"])
        C.setdefault(tid, {})[g] = float(row["C_count"])
    return TraversalTable(groups=tuple(groups), D=D, C=C)


def nearest_node(graph: Graph, point: tuple[float, float]) -> str:
    """Graph node closest to a point; equidistant nodes resolve to the
    smallest id."""
    best_id = None
    best_d = math.inf
    for nid in sorted(graph.nodes):
        x, y = graph.nodes[nid]
        d = (x - point[0]) ** 2 + (y - point[1]) ** 2
        if d < best_d:
            best_d = d
            best_id = nid
    if best_id is None:
        raise ValidationError("graph has no nodes")
    return best_id


def route_traversals(
    od: ODTable,
    tracts: TractSet,
    graph: Graph,
    edge_map: EdgeTractMap,
    workers: int = 1,
) -> tuple[dict[tuple[str, str], dict[str, float] | None], int]:
    """Shortest-path per-tract meters for every OD pair.

    Returns a map from pair to {tract_id: meters} (None when unreachable)
    plus the unreachable count. Pairs whose endpoints snap to the same node
    yield an empty route and contribute nothing.
    """
    node_for: dict[str, str] = {}
    for tid in sorted({t for h, w, _ in od.rows for t in (h, w)}):
        centroid = tuple(tracts.centroids[tracts.index_of(tid)])
        node_for[tid] = nearest_node(graph, centroid)

    def one(pair: tuple[str, str]) -> dict[str, float] | None:
        home, work = pair
        route = shortest_path(graph, node_for[home], node_for[work])
        if route is None:
            return None
        return route_tract_distances(route, edge_map)

    pairs = od.pairs
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, pairs))
    else:
        results = [one(p) for p in pairs]
    traversals = dict(zip(pairs, results))
    unreachable = sum(1 for r in results if r is None)
    if unreachable > 0.05 * len(pairs):
        log.warning("%d of %d OD pairs unreachable", unreachable, len(pairs))
    elif unreachable:
        log.info("%d of %d OD pairs unreachable", unreachable, len(pairs))
    return traversals, unreachable


def simulate(
    od: ODTable,
    tracts: TractSet,
    graph: Graph,
    edge_map: EdgeTractMap,
    assignment: TripAssignment,
    workers: int = 1,
    exclude_home: bool = False,
    traversals: dict[tuple[str, str], dict[str, float] | None] | None = None,
) -> TraversalTable:
    """Accumulate per-tract, per-group traversal km and commuter counts.

    Pairs are accumulated in sorted (home, work) order regardless of worker
    count, so outputs are bit-identical across parallel schedules. By default
    the home tract counts among the traversed tracts; exclude_home drops its
    distance contribution (commuter counts keep the home tract either way).
    Precomputed traversals may be passed to amortize routing across repeated
    assignments.
    """
    if traversals is None:
        traversals, n_unreachable = route_traversals(
            od, tracts, graph, edge_map, workers=workers
        )
    else:
        n_unreachable = sum(
            1 for h, w, _ in od.rows if traversals.get((h, w)) is None
        )

    D: dict[str, dict[str, float]] = {}
    C: dict[str, dict[str, float]] = {}

    def add(table: dict[str, dict[str, float]], tract: str, group: str, value: float) -> None:
        table.setdefault(tract, dict.fromkeys(GROUPS, 0.0))[group] += value

    for home, work, _count in od.rows:  # already sorted by (home, work)
        by_group = assignment.weights.get((home, work))
        if by_group is None:
            raise ValidationError(f"no assignment for OD pair {home}->{work}")
        per_tract = traversals.get((home, work))
        if per_tract is None:
            continue
        for g in GROUPS:
            add(C, home, g, by_group[g])
        for tid in sorted(per_tract):
            if exclude_home and tid == home:
                continue
            km = per_tract[tid] / 1000.0
            for g in GROUPS:
                w = by_group[g]
                if w:
                    add(D, tid, g, w * km)

    return TraversalTable(
        groups=GROUPS,
        D=D,
        C=C,
        n_pairs=len(od.rows),
        n_unreachable=n_unreachable,
    )
