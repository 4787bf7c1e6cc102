"""Tract geometries, attribute tables, and analysis-ready design matrices.

Coordinates are pre-projected planar meters throughout; distances are stored
in meters and reported in kilometers at the interfaces that say so. No
reprojection or topology repair happens here.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import ParseError, ValidationError
from .geometry import (
    Point,
    normalize_ring,
    point_segment_distance,
    polygon_area,
    polygon_centroid,
)

log = logging.getLogger(__name__)

ROAD_CLASSES = ("interstate", "us_route", "state_route")


@dataclass(frozen=True)
class Tract:
    tract_id: str
    polygon: tuple[Point, ...]
    attributes: dict[str, float] = field(default_factory=dict)


class TractSet:
    """An ordered collection of tracts with cached centroids and a KD-tree.

    Attribute columns are free-form; the demographic columns used by the
    simulation (population, commuters, group share) are looked up by the
    configurable names given at construction. Instances are immutable after
    construction and safe to share across threads.
    """

    def __init__(
        self,
        tracts: Sequence[Tract],
        population_column: str = "population",
        commuters_column: str = "commuters",
        group_share_column: str = "group_share",
    ) -> None:
        if not tracts:
            raise ValidationError("tract set is empty")
        self.tracts: tuple[Tract, ...] = tuple(tracts)
        self.population_column = population_column
        self.commuters_column = commuters_column
        self.group_share_column = group_share_column

        seen: set[str] = set()
        for t in self.tracts:
            if t.tract_id in seen:
                raise ValidationError(f"duplicate tract_id {t.tract_id!r}")
            seen.add(t.tract_id)
            ring = normalize_ring(t.polygon)
            if polygon_area(ring) <= 0.0:
                raise ValidationError(f"tract {t.tract_id!r} has zero-area polygon")
            self._check_range(t, population_column, 0.0, math.inf)
            self._check_range(t, commuters_column, 0.0, math.inf)
            self._check_range(t, group_share_column, 0.0, 1.0)

        self._index = {t.tract_id: i for i, t in enumerate(self.tracts)}
        self._centroids = np.array(
            [polygon_centroid(t.polygon) for t in self.tracts], dtype=float
        )
        self._tree: cKDTree | None = None

    @staticmethod
    def _check_range(t: Tract, column: str, lo: float, hi: float) -> None:
        v = t.attributes.get(column)
        if v is None or (isinstance(v, float) and math.isnan(v)):
            return
        if not (lo <= v <= hi):
            raise ValidationError(
                f"tract {t.tract_id!r}: {column}={v!r} outside [{lo}, {hi}]"
            )

    def __len__(self) -> int:
        return len(self.tracts)

    def __iter__(self) -> Iterator[Tract]:
        return iter(self.tracts)

    def __getitem__(self, i: int) -> Tract:
        return self.tracts[i]

    @property
    def ids(self) -> list[str]:
        return [t.tract_id for t in self.tracts]

    def index_of(self, tract_id: str) -> int:
        try:
            return self._index[tract_id]
        except KeyError:
            raise KeyError(f"unknown tract_id {tract_id!r}") from None

    def __contains__(self, tract_id: str) -> bool:
        return tract_id in self._index

    @property
    def centroids(self) -> np.ndarray:
        """(n, 2) array of geometric polygon centroids, meters."""
        return self._centroids

    @property
    def kdtree(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(self._centroids)
        return self._tree

    def attribute(self, column: str) -> np.ndarray:
        """Column values aligned to tract order; NaN where a tract lacks the column."""
        return np.array(
            [t.attributes.get(column, math.nan) for t in self.tracts], dtype=float
        )

    def _required(self, column: str, what: str) -> np.ndarray:
        values = self.attribute(column)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            names = ", ".join(self.tracts[i].tract_id for i in bad[:5])
            raise ValidationError(
                f"{what} column {column!r} missing or non-finite for "
                f"{bad.size} tract(s) ({names}{', ...' if bad.size > 5 else ''})"
            )
        return values

    @property
    def population(self) -> np.ndarray:
        return self._required(self.population_column, "population")

    @property
    def commuters(self) -> np.ndarray:
        return self._required(self.commuters_column, "commuters")

    @property
    def group_share(self) -> np.ndarray:
        return self._required(self.group_share_column, "group share")


@dataclass(frozen=True)
class TransformSpec:
    column: str
    transform: str = "identity"  # identity | log
    role: str = "predictor"  # response | predictor

    def __post_init__(self) -> None:
        if self.transform not in ("identity", "log"):
            raise ValidationError(f"unknown transform {self.transform!r}")
        if self.role not in ("response", "predictor"):
            raise ValidationError(f"unknown role {self.role!r}")

    @property
    def display_name(self) -> str:
        return f"{self.column} (log)" if self.transform == "log" else self.column


@dataclass(frozen=True)
class DesignData:
    """Complete-case response vector and design matrix with leading intercept."""

    y: np.ndarray
    X: np.ndarray
    column_names: tuple[str, ...]
    tract_ids: tuple[str, ...]
    response_name: str
    n_dropped: int = 0

    def __post_init__(self) -> None:
        n = self.y.shape[0]
        if self.X.shape != (n, len(self.column_names)):
            raise ValidationError("design matrix shape disagrees with column names")
        if len(self.tract_ids) != n:
            raise ValidationError("tract_ids not aligned to design rows")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.X))):
            raise ValidationError("design contains non-finite entries")
        if n and not np.all(self.X[:, 0] == 1.0):
            raise ValidationError("first design column must be the intercept")

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def k(self) -> int:
        """Predictor count, excluding the intercept."""
        return self.X.shape[1] - 1


@dataclass(frozen=True)
class HighwayPolyline:
    label: str
    road_class: str
    points: tuple[Point, ...]

    def __post_init__(self) -> None:
        if self.road_class not in ROAD_CLASSES:
            raise ValidationError(
                f"highway {self.label!r}: class {self.road_class!r} not in {ROAD_CLASSES}"
            )
        if len(self.points) < 2:
            raise ValidationError(f"highway {self.label!r} has < 2 vertices")

    def segments(self) -> Iterator[tuple[Point, Point]]:
        return zip(self.points, self.points[1:])


@dataclass(frozen=True)
class HighwayNetworkGeom:
    polylines: tuple[HighwayPolyline, ...]

    @property
    def labels(self) -> list[str]:
        out: list[str] = []
        for line in self.polylines:
            if line.label not in out:
                out.append(line.label)
        return out

    def segments(self) -> Iterator[tuple[Point, Point]]:
        for line in self.polylines:
            yield from line.segments()


def _feature_ring(feature: dict, where: str) -> tuple[Point, ...]:
    geom = feature.get("geometry") or {}
    gtype = geom.get("type")
    coords = geom.get("coordinates")
    if gtype == "Polygon":
        rings = coords or []
        if not rings:
            raise ParseError(f"{where}: Polygon has no rings")
        return tuple((float(x), float(y)) for x, y in rings[0])
    if gtype == "MultiPolygon":
        # Keep the largest exterior ring; small islands do not matter at tract scale.
        best: tuple[Point, ...] | None = None
        best_area = -1.0
        for poly in coords or []:
            if not poly:
                continue
            ring = tuple((float(x), float(y)) for x, y in poly[0])
            try:
                a = polygon_area(ring)
            except ValueError:
                continue
            if a > best_area:
                best, best_area = ring, a
        if best is None:
            raise ParseError(f"{where}: MultiPolygon has no usable ring")
        return best
    raise ParseError(f"{where}: unsupported geometry type {gtype!r}")


def _read_feature_collection(path: str) -> list[dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if doc.get("type") != "FeatureCollection" or "features" not in doc:
        raise ParseError(f"{path}: not a GeoJSON FeatureCollection")
    return doc["features"]


def read_attribute_table(path: str, delimiter: str = ",") -> dict[str, dict[str, float]]:
    """Read a delimited attribute file keyed by tract_id.

    Empty cells become NaN (treated as missing downstream); any other
    non-numeric cell is an error naming the row and column.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None or "tract_id" not in reader.fieldnames:
            raise ParseError(f"{path}: header must include tract_id")
        rows: dict[str, dict[str, float]] = {}
        for lineno, row in enumerate(reader, start=2):
            tid = (row.get("tract_id") or "").strip()
            if not tid:
                raise ValidationError(f"{path} line {lineno}: empty tract_id")
            if tid in rows:
                raise ValidationError(f"{path} line {lineno}: duplicate tract_id {tid!r}")
            attrs: dict[str, float] = {}
            for col, cell in row.items():
                if col == "tract_id" or col is None:
                    continue
                cell = (cell or "").strip()
                if cell == "":
                    attrs[col] = math.nan
                    continue
                try:
                    attrs[col] = float(cell)
                except ValueError:
                    raise ValidationError(
                        f"{path} line {lineno}: non-numeric value {cell!r} "
                        f"in column {col!r}"
                    ) from None
            rows[tid] = attrs
    return rows


def load_tracts(
    geojson_path: str,
    attributes_path: str,
    delimiter: str = ",",
    population_column: str = "population",
    commuters_column: str = "commuters",
    group_share_column: str = "group_share",
) -> TractSet:
    """Join tract polygons with their attribute rows into a TractSet.

    Features or attribute rows that fail the join are dropped and counted in
    the log. Output order is sorted by tract_id so loads are canonical
    regardless of file ordering.
    """
    features = _read_feature_collection(geojson_path)
    polygons: dict[str, tuple[Point, ...]] = {}
    for i, feature in enumerate(features):
        props = feature.get("properties") or {}
        tid = props.get("tract_id")
        if tid is None:
            raise ParseError(f"{geojson_path} feature {i}: missing tract_id property")
        tid = str(tid)
        if tid in polygons:
            raise ValidationError(f"{geojson_path}: duplicate tract_id {tid!r}")
        polygons[tid] = _feature_ring(feature, f"{geojson_path} feature {tid!r}")

    attributes = read_attribute_table(attributes_path, delimiter=delimiter)

    matched = sorted(polygons.keys() & attributes.keys())
    geom_only = len(polygons) - len(matched)
    attr_only = len(attributes) - len(matched)
    if geom_only or attr_only:
        log.warning(
            "join dropped %d feature(s) without attributes and %d attribute "
            "row(s) without geometry",
            geom_only,
            attr_only,
        )
    if not matched:
        raise ValidationError("no tract_id matched between geometry and attributes")

    tracts = [Tract(tid, polygons[tid], attributes[tid]) for tid in matched]
    return TractSet(
        tracts,
        population_column=population_column,
        commuters_column=commuters_column,
        group_share_column=group_share_column,
    )


def load_highways(geojson_path: str) -> HighwayNetworkGeom:
    """Read labeled highway polylines from a GeoJSON FeatureCollection.

    Each feature needs `label` and `class` properties and LineString or
    MultiLineString geometry.
    """
    features = _read_feature_collection(geojson_path)
    lines: list[HighwayPolyline] = []
    for i, feature in enumerate(features):
        props = feature.get("properties") or {}
        label = props.get("label")
        road_class = props.get("class")
        if label is None or road_class is None:
            raise ParseError(
                f"{geojson_path} feature {i}: label and class properties required"
            )
        geom = feature.get("geometry") or {}
        gtype = geom.get("type")
        coords = geom.get("coordinates")
        if gtype == "LineString":
            parts = [coords]
        elif gtype == "MultiLineString":
            parts = coords or []
        else:
            raise ParseError(
                f"{geojson_path} feature {i}: unsupported geometry type {gtype!r}"
            )
        for part in parts:
            pts = tuple((float(x), float(y)) for x, y in part or [])
            lines.append(HighwayPolyline(str(label), str(road_class), pts))
    return HighwayNetworkGeom(tuple(lines))


def build_design(tracts: TractSet, spec: Sequence[TransformSpec]) -> DesignData:
    """Apply transforms and complete-case filtering; prepend the intercept.

    A row is dropped when any used column is missing/non-finite, or is
    non-positive under a log transform.
    """
    responses = [s for s in spec if s.role == "response"]
    predictors = [s for s in spec if s.role == "predictor"]
    if len(responses) != 1:
        raise ValidationError(
            f"exactly one response column required, got {len(responses)}"
        )
    response = responses[0]

    raw: dict[str, np.ndarray] = {}
    for s in spec:
        values = tracts.attribute(s.column)
        if np.all(~np.isfinite(values)):
            raise ValidationError(f"column {s.column!r} absent from attribute table")
        raw[s.column] = values

    keep = np.ones(len(tracts), dtype=bool)
    for s in spec:
        values = raw[s.column]
        ok = np.isfinite(values)
        if s.transform == "log":
            ok &= values > 0.0
        keep &= ok

    n_dropped = int(len(tracts) - keep.sum())
    if n_dropped:
        log.info("complete-case filter dropped %d of %d rows", n_dropped, len(tracts))
    if not keep.any():
        raise ValidationError("no rows survive complete-case filtering")

    def column(s: TransformSpec) -> np.ndarray:
        v = raw[s.column][keep]
        return np.log(v) if s.transform == "log" else v

    y = column(response)
    cols = [np.ones(y.shape[0])] + [column(s) for s in predictors]
    X = np.column_stack(cols)
    names = ("intercept",) + tuple(s.display_name for s in predictors)
    tract_ids = tuple(t.tract_id for t, k in zip(tracts, keep) if k)
    return DesignData(
        y=y,
        X=X,
        column_names=names,
        tract_ids=tract_ids,
        response_name=response.display_name,
        n_dropped=n_dropped,
    )


def with_column(tracts: TractSet, column: str, values: Sequence[float]) -> TractSet:
    """A new TractSet with one attribute column added or replaced."""
    if len(values) != len(tracts):
        raise ValidationError(
            f"column {column!r}: {len(values)} values for {len(tracts)} tracts"
        )
    updated = [
        Tract(t.tract_id, t.polygon, {**t.attributes, column: float(v)})
        for t, v in zip(tracts, values)
    ]
    return TractSet(
        updated,
        population_column=tracts.population_column,
        commuters_column=tracts.commuters_column,
        group_share_column=tracts.group_share_column,
    )


def distance_to_nearest_highway(
    tracts: TractSet, highways: HighwayNetworkGeom
) -> np.ndarray:
    """Per-tract centroid-to-nearest-highway-segment distance, kilometers."""
    segments = list(highways.segments())
    if not segments:
        raise ValidationError("highway set has no segments")
    out = np.empty(len(tracts))
    for i, (cx, cy) in enumerate(tracts.centroids):
        out[i] = min(point_segment_distance((cx, cy), a, b) for a, b in segments)
    return out / 1000.0


def knn(tracts: TractSet, query_index: int, k: int) -> list[tuple[str, float]]:
    """The k nearest tract centroids to the query tract, ascending.

    The query tract is its own first neighbor at distance zero. Ties are
    broken by tract_id so the result is a total order identical to a
    brute-force sort.
    """
    n = len(tracts)
    if not 0 <= query_index < n:
        raise ValueError(f"query_index {query_index} outside [0, {n})")
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    point = tracts.centroids[query_index]
    dists, _ = tracts.kdtree.query(point, k=k)
    dk = float(np.atleast_1d(dists)[-1])
    # Tie-robust: pull everything within the k-th radius (with slack for the
    # tree's own rounding), then order exactly like the brute-force oracle.
    radius = dk * (1.0 + 1e-9) + 1e-12
    candidates = tracts.kdtree.query_ball_point(point, r=radius)
    if len(candidates) < k:
        candidates = list(range(n))
    deltas = tracts.centroids[candidates] - point
    cand_d = np.sqrt(deltas[:, 0] ** 2 + deltas[:, 1] ** 2)
    order = sorted(
        zip(candidates, cand_d), key=lambda it: (it[1], tracts.tracts[it[0]].tract_id)
    )
    return [(tracts.tracts[i].tract_id, float(d)) for i, d in order[:k]]
