"""Placement scoring: heightmap-minimization, deepest-bottom-left, and a
contact-area heuristic, plus deterministic ranking.

All scores rank lower-is-better. Positions (X, Y, Z) are the container-frame
coordinates of the placed object's bounding-box corner: X, Y from the anchor
cell, Z the height of the object's lowest point.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import RigidTransform
from .heightmap import EMPTY_CELL_EPS, HeightMap, _check_window

DEFAULT_HEURISTIC_C = 1.0
HEURISTICS = ("hm", "dblf", "mta")


@dataclass(frozen=True)
class PlacementCandidate:
    """One legal placement produced by the grid search."""

    transform: RigidTransform
    cell: tuple[int, int]
    position: tuple[float, float, float]
    orientation_index: int
    height: float  # z-extent of the rotated object

    @property
    def x(self) -> float:
        return self.position[0]

    @property
    def y(self) -> float:
        return self.position[1]

    @property
    def z(self) -> float:
        return self.position[2]


def score_dblf(position, c: float = DEFAULT_HEURISTIC_C) -> float:
    """Deepest-bottom-left score Z + c (X + Y); lower settles deeper-left."""
    x, y, z = position
    return float(z + c * (x + y))


def score_hm(
    container_map: HeightMap,
    top_map: HeightMap,
    candidate: PlacementCandidate,
    c: float = DEFAULT_HEURISTIC_C,
    occupied: np.ndarray | None = None,
    base_sum: float | None = None,
) -> float:
    """Heightmap-minimization score: c (X + Y) plus the post-placement map sum.

    Evaluated as the current map total plus the in-window increase, which
    equals summing the tentatively updated map without materializing it.
    """
    x, y = candidate.cell
    w, h = _check_window(container_map, top_map, x, y)
    if occupied is None:
        occupied = top_map.data > EMPTY_CELL_EPS
    window = container_map.data[x : x + w, y : y + h]
    raised = np.maximum(top_map.data[occupied] + candidate.z, window[occupied])
    delta = float(raised.sum() - window[occupied].sum())
    total = float(container_map.data.sum()) if base_sum is None else base_sum
    return c * (candidate.x + candidate.y) + total + delta


def score_mta(
    container_map: HeightMap,
    bottom_map: HeightMap,
    candidate: PlacementCandidate,
    z: float | None = None,
    contact_tol: float | None = None,
) -> float:
    """Negated contact area between the object bottom and the terrain.

    A cell is touching when the settled bottom profile comes within
    ``contact_tol`` (default one cell size) of the terrain. Lower scores mean
    more contact, which unifies the ranking direction with the other
    heuristics.
    """
    x, y = candidate.cell
    w, h = _check_window(container_map, bottom_map, x, y)
    if z is None:
        z = candidate.z
    if contact_tol is None:
        contact_tol = container_map.resolution
    window = container_map.data[x : x + w, y : y + h]
    finite = np.isfinite(bottom_map.data)
    touching = finite & (np.abs(window - (bottom_map.data + z)) <= contact_tol)
    return -float(touching.sum()) * container_map.cell_area()


def rank_candidates(
    candidates: list[PlacementCandidate], scores: list[float]
) -> list[PlacementCandidate]:
    """Stable ascending sort by score.

    Ties break by (orientation index, anchor x, anchor y) and finally input
    order, so identical inputs always rank identically.
    """
    if len(candidates) != len(scores):
        raise ValueError("candidates and scores must have equal length")
    order = sorted(
        range(len(candidates)),
        key=lambda i: (
            scores[i],
            candidates[i].orientation_index,
            candidates[i].cell[0],
            candidates[i].cell[1],
            i,
        ),
    )
    return [candidates[i] for i in order]
