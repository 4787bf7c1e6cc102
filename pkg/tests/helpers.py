"""Shared builders and brute-force oracles used across the test modules."""

from __future__ import annotations

import numpy as np

from tracteq.data_model import DesignData, Tract, TractSet
from tracteq.network import Edge, Graph


def square_tract(tid: str, col: int, row: int, size: float = 1000.0, **attrs) -> Tract:
    x0, y0 = col * size, row * size
    polygon = ((x0, y0), (x0 + size, y0), (x0 + size, y0 + size), (x0, y0 + size))
    return Tract(tid, polygon, {k: float(v) for k, v in attrs.items()})


def grid_tracts(rows: int, cols: int, size: float = 1000.0, attr_fn=None) -> TractSet:
    """Rows x cols lattice of unit-square tracts; attr_fn(r, c) -> dict."""
    tracts = []
    for r in range(rows):
        for c in range(cols):
            attrs = attr_fn(r, c) if attr_fn else {}
            tracts.append(square_tract(f"T{r:03d}{c:03d}", c, r, size, **attrs))
    return TractSet(tracts)


def design_from_arrays(y, X, ids=None, names=None) -> DesignData:
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    return DesignData(
        y=y,
        X=X,
        column_names=tuple(names) if names else ("intercept",) + tuple(f"x{i}" for i in range(1, p)),
        tract_ids=tuple(ids) if ids else tuple(f"T{i:04d}" for i in range(n)),
        response_name="y",
    )


def normal_equations_beta(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.linalg.solve(X.T @ X, X.T @ y)


def hc1_by_hand(X: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Element-by-element sandwich evaluation with explicit Python loops."""
    n, p = X.shape
    xtx = [[sum(X[i][a] * X[i][b] for i in range(n)) for b in range(p)] for a in range(p)]
    meat = [
        [sum(X[i][a] * e[i] * e[i] * X[i][b] for i in range(n)) for b in range(p)]
        for a in range(p)
    ]
    bread = np.linalg.inv(np.array(xtx))
    return (n / (n - p)) * bread @ np.array(meat) @ bread


def knn_brute(tracts: TractSet, j: int, k: int) -> list[tuple[str, float]]:
    point = tracts.centroids[j]
    pairs = []
    for i, t in enumerate(tracts):
        dx = tracts.centroids[i][0] - point[0]
        dy = tracts.centroids[i][1] - point[1]
        pairs.append((float(np.sqrt(dx * dx + dy * dy)), t.tract_id))
    pairs.sort()
    return [(tid, d) for d, tid in pairs[:k]]


def enumerate_best_path(graph: Graph, origin: str, destination: str):
    """Exhaustive simple-path minimum by (time, node sequence).

    Times accumulate left to right exactly like the router, so equal routes
    compare bit-identically.
    """
    best = None
    stack = [(0.0, (origin,), ())]
    while stack:
        time, path, edges = stack.pop()
        node = path[-1]
        if node == destination:
            key = (time, path)
            if best is None or key < (best[0], best[1]):
                best = (time, path, edges)
            continue
        for neighbor, edge in graph.adjacency[node]:
            if neighbor in path:
                continue
            stack.append((time + edge.travel_time, path + (neighbor,), edges + (edge,)))
    return best


def random_graph(rng: np.random.Generator, n_nodes: int, edge_prob: float = 0.45) -> Graph:
    nodes = {}
    for i in range(n_nodes):
        nodes[f"n{i:02d}"] = (float(rng.uniform(0, 1000)), float(rng.uniform(0, 1000)))
    ids = sorted(nodes)
    edges = []
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            if rng.random() < edge_prob:
                edges.append(
                    Edge(
                        ids[i],
                        ids[j],
                        length=float(rng.uniform(50, 2000)),
                        speed=float(rng.uniform(5, 30)),
                        oneway=bool(rng.random() < 0.2),
                    )
                )
    return Graph(nodes, edges)
