"""1D slab mesh with material regions and boundary-condition tags.

Face convention: every interior face normal points in +x, so at a shared
node the "-" trace belongs to the left cell (its right nodal value) and
the "+" trace to the right cell (its left nodal value). Jump terms in the
low-order correction use jump(T) = T(+) - T(-) under this convention.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = ["VACUUM", "REFLECTIVE", "SlabMesh", "build_uniform", "interior_nodes"]

VACUUM = "vacuum"
REFLECTIVE = "reflective"
_BCS = (VACUUM, REFLECTIVE)


@dataclass(frozen=True)
class SlabMesh:
    """Ordered cells on [x_0, x_C] with per-cell material ids."""

    cell_edges: np.ndarray
    cell_material: tuple
    left_bc: str = VACUUM
    right_bc: str = VACUUM
    widths: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        edges = np.ascontiguousarray(np.asarray(self.cell_edges, dtype=np.float64))
        if edges.ndim != 1 or edges.size < 2:
            raise ValueError("cell_edges must hold at least two coordinates")
        widths = np.diff(edges)
        if np.any(widths <= 0.0):
            raise ValueError("cell edges must be strictly increasing")
        mats = tuple(self.cell_material)
        if len(mats) != edges.size - 1:
            raise ValueError(
                f"need one material per cell: {len(mats)} ids for "
                f"{edges.size - 1} cells"
            )
        for bc in (self.left_bc, self.right_bc):
            if bc not in _BCS:
                raise ValueError(f"boundary condition must be one of {_BCS}, got {bc!r}")
        edges.setflags(write=False)
        widths.setflags(write=False)
        object.__setattr__(self, "cell_edges", edges)
        object.__setattr__(self, "cell_material", mats)
        object.__setattr__(self, "widths", widths)

    @property
    def num_cells(self) -> int:
        return self.cell_edges.size - 1

    @property
    def num_vertices(self) -> int:
        return self.cell_edges.size

    @property
    def length(self) -> float:
        return float(self.cell_edges[-1] - self.cell_edges[0])


def build_uniform(
    regions: Sequence[tuple],
    left_bc: str = VACUUM,
    right_bc: str = VACUUM,
) -> SlabMesh:
    """Concatenate uniformly subdivided regions into one mesh.

    Parameters
    ----------
    regions : sequence of (width, material_id, cell_count)
        Region widths in cm, each subdivided into ``cell_count`` equal cells.
    """
    if not regions:
        raise ValueError("region list is empty")
    edges = [0.0]
    mats = []
    x = 0.0
    for width, mat, count in regions:
        width = float(width)
        count = int(count)
        if width <= 0.0:
            raise ValueError(f"region width must be positive, got {width}")
        if count < 1:
            raise ValueError(f"region cell count must be >= 1, got {count}")
        # linspace keeps the region end exact under refinement
        sub = np.linspace(x, x + width, count + 1)[1:]
        edges.extend(sub.tolist())
        mats.extend([mat] * count)
        x += width
    return SlabMesh(
        cell_edges=np.array(edges),
        cell_material=tuple(mats),
        left_bc=left_bc,
        right_bc=right_bc,
    )


def interior_nodes(mesh: SlabMesh) -> list[tuple[float, int, int]]:
    """Interior face coordinates with their (left cell, right cell) pair."""
    return [
        (float(mesh.cell_edges[j]), j - 1, j)
        for j in range(1, mesh.num_cells)
    ]
