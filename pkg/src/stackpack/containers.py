"""Open-top rectangular container model: four walls plus a floor."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MeshValidationError
from .geometry import TriangleMesh, merge_meshes


@dataclass(frozen=True)
class Container:
    """Inner dimensions in meters; the floor corner sits at the origin."""

    length: float
    width: float
    height: float
    mu_wall: float = 0.7

    def __post_init__(self):
        if min(self.length, self.width, self.height) <= 0:
            raise MeshValidationError("container dimensions must be positive")
        if self.mu_wall < 0:
            raise MeshValidationError("wall friction must be non-negative")

    @property
    def dims(self) -> tuple[float, float, float]:
        return (self.length, self.width, self.height)


def box_mesh(extent, origin=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Axis-aligned box with outward normals; min corner at ``origin``."""
    lx, ly, lz = extent
    o = np.asarray(origin, dtype=np.float64)
    v = (
        np.array(
            [
                [0, 0, 0],
                [lx, 0, 0],
                [lx, ly, 0],
                [0, ly, 0],
                [0, 0, lz],
                [lx, 0, lz],
                [lx, ly, lz],
                [0, ly, lz],
            ],
            dtype=np.float64,
        )
        + o
    )
    t = np.array(
        [
            [0, 2, 1],
            [0, 3, 2],
            [4, 5, 6],
            [4, 6, 7],
            [0, 1, 5],
            [0, 5, 4],
            [1, 2, 6],
            [1, 6, 5],
            [2, 3, 7],
            [2, 7, 6],
            [3, 0, 4],
            [3, 4, 7],
        ],
        dtype=np.int32,
    )
    return TriangleMesh(v, t)


def wall_thickness(container: Container, scale: float = 1.03) -> float:
    """Slab thickness that safely exceeds any scaled-geometry penetration."""
    biggest = max(container.dims)
    return max(0.02, 2.0 * (scale - 1.0) * biggest)


def container_slabs(container: Container, thickness: float | None = None) -> list[TriangleMesh]:
    """Floor and wall slabs as separate closed boxes (floor first)."""
    t = thickness if thickness is not None else wall_thickness(container)
    length, width, height = container.dims
    return [
        box_mesh((length + 2 * t, width + 2 * t, t), (-t, -t, -t)),
        box_mesh((t, width + 2 * t, height + t), (-t, -t, -t)),
        box_mesh((t, width + 2 * t, height + t), (length, -t, -t)),
        box_mesh((length, t, height + t), (0, -t, -t)),
        box_mesh((length, t, height + t), (0, width, -t)),
    ]


def container_shell(container: Container, thickness: float | None = None) -> TriangleMesh:
    """All slabs merged into one mesh, for scene export."""
    return merge_meshes(container_slabs(container, thickness))
