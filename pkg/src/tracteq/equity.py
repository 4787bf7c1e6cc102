"""Traversal inequity index and its weighted and corridor summaries.

For tract j and group g the index is the group's share of distance driven
through j minus its share of commuters living in j. Tracts with zero
traversal or zero commuters are undefined and stay out of every summary.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable

from .commute import TraversalTable
from .data_model import HighwayNetworkGeom, TractSet
from .errors import ValidationError
from .geometry import polyline_intersects_polygon, polyline_polygon_distance

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class InequityTable:
    groups: tuple[str, ...]
    values: dict[str, dict[str, float]]  # tract -> group -> index, defined tracts only
    undefined: tuple[str, ...]

    @property
    def defined(self) -> list[str]:
        return sorted(self.values)


def inequity_index(traversal: TraversalTable) -> InequityTable:
    """I_jg = D_jg / D_j - C_jg / C_j per defined tract."""
    values: dict[str, dict[str, float]] = {}
    undefined: list[str] = []
    for tid in traversal.tract_ids():
        d_j = traversal.D_total(tid)
        c_j = traversal.C_total(tid)
        if d_j <= 0.0 or c_j <= 0.0:
            undefined.append(tid)
            continue
        d_g = traversal.D.get(tid, {})
        c_g = traversal.C.get(tid, {})
        values[tid] = {
            g: d_g.get(g, 0.0) / d_j - c_g.get(g, 0.0) / c_j
            for g in traversal.groups
        }
    if undefined:
        log.info("%d tract(s) undefined (zero traversal or zero commuters)", len(undefined))
    return InequityTable(
        groups=traversal.groups, values=values, undefined=tuple(sorted(undefined))
    )


def population_weighted_mean(
    index: InequityTable,
    tracts: TractSet,
    subset: Iterable[str],
    group: str,
) -> float:
    """Population-weighted mean of I over the defined tracts in a subset."""
    if group not in index.groups:
        raise ValidationError(f"unknown group {group!r}; have {index.groups}")
    chosen = sorted(set(subset) & set(index.values))
    if not chosen:
        raise ValidationError("no defined tracts in the requested subset")
    num = []
    den = []
    for tid in chosen:
        pop = tracts[tracts.index_of(tid)].attributes.get(tracts.population_column)
        if pop is None or not math.isfinite(pop):
            raise ValidationError(f"tract {tid!r} has no population value")
        num.append(pop * index.values[tid][group])
        den.append(pop)
    total = math.fsum(den)
    if total <= 0.0:
        raise ValidationError("subset population sums to zero")
    return math.fsum(num) / total


def corridor_subset(
    tracts: TractSet,
    highways: HighwayNetworkGeom,
    route_label: str,
    buffer_m: float = 0.0,
) -> tuple[str, ...]:
    """Tracts whose polygon intersects any polyline with the given label.

    Touching counts as intersecting. A positive buffer_m widens the test to
    tracts within that distance of the polyline.
    """
    lines = [line for line in highways.polylines if line.label == route_label]
    if not lines:
        raise ValidationError(
            f"unknown route label {route_label!r}; available: "
            + ", ".join(highways.labels)
        )
    hits: list[str] = []
    for tract in tracts:
        for line in lines:
            if buffer_m > 0.0:
                if polyline_polygon_distance(line.points, tract.polygon) <= buffer_m:
                    hits.append(tract.tract_id)
                    break
            elif polyline_intersects_polygon(line.points, tract.polygon):
                hits.append(tract.tract_id)
                break
    return tuple(sorted(hits))
