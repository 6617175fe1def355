"""Multigroup cross-section data model and validation.

The scattering matrix is stored source-group major: ``sigma_s[gp, g]`` is
scattering from group gp INTO group g, matching the transfer sum
``sum_gp sigma_s[gp, g] * phi[gp]`` used when building emission sources.
Non-fissile materials carry nu_sigma_f = 0 and chi = 0 rather than absent
fields so every material takes the same code path.
"""

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "CrossSectionSet",
    "MaterialError",
    "MaterialGrid",
    "removal_xs",
    "validate",
    "material_grid",
]

CHI_NORMALIZATION_TOL = 1e-12


class MaterialError(ValueError):
    """Raised for physically invalid cross-section data."""


@dataclass(frozen=True)
class CrossSectionSet:
    """Macroscopic multigroup cross sections for one material, all in 1/cm.

    Attributes
    ----------
    num_groups : int
        Number of energy groups G.
    sigma_t : (G,) array
        Total cross section per group; must be positive (voids unsupported).
    sigma_s : (G, G) array
        Scattering transfer matrix, ``sigma_s[gp, g]`` = gp -> g. A full
        matrix is kept; upscattering needs no special casing.
    nu_sigma_f : (G,) array
        Fission production cross section nu*sigma_f (zeros if non-fissile).
    chi : (G,) array
        Fission spectrum; sums to one when any nu_sigma_f is positive.
    """

    num_groups: int
    sigma_t: np.ndarray
    sigma_s: np.ndarray
    nu_sigma_f: np.ndarray
    chi: np.ndarray
    name: str = ""

    def __post_init__(self):
        g = int(self.num_groups)
        if g < 1:
            raise MaterialError(f"num_groups must be >= 1, got {g}")
        object.__setattr__(self, "num_groups", g)
        for field, shape in (
            ("sigma_t", (g,)),
            ("sigma_s", (g, g)),
            ("nu_sigma_f", (g,)),
            ("chi", (g,)),
        ):
            arr = np.asarray(getattr(self, field), dtype=np.float64)
            if arr.shape != shape:
                raise MaterialError(
                    f"{field} must have shape {shape}, got {arr.shape}"
                )
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            object.__setattr__(self, field, arr)

    @property
    def fissile(self) -> bool:
        return bool(np.any(self.nu_sigma_f > 0.0))


def removal_xs(xs: CrossSectionSet, g: int) -> float:
    """Group removal cross section: total minus within-group scattering.

    Raises
    ------
    MaterialError
        If the result is not strictly positive, naming the group.
    """
    if not 0 <= g < xs.num_groups:
        raise IndexError(f"group index {g} out of range [0, {xs.num_groups})")
    sig_r = float(xs.sigma_t[g] - xs.sigma_s[g, g])
    if sig_r <= 0.0:
        raise MaterialError(
            f"material {xs.name or '<unnamed>'}: non-positive removal cross "
            f"section {sig_r:.6g} in group {g}"
        )
    return sig_r


def validate(xs: CrossSectionSet) -> list[str]:
    """Check every data-model invariant; return all violations found.

    Violations are data, not exceptions: an empty list means the material
    is acceptable. Scattering ratios above one are legal (supercritical
    media), but the removal cross section must stay positive.
    """
    violations = []
    label = xs.name or "<unnamed>"
    for g in range(xs.num_groups):
        if xs.sigma_t[g] <= 0.0:
            violations.append(
                f"{label}: non-positive total cross section in group {g}"
            )
        elif xs.sigma_t[g] - xs.sigma_s[g, g] <= 0.0:
            violations.append(
                f"{label}: non-positive removal cross section in group {g}"
            )
    if np.any(xs.sigma_s < 0.0):
        violations.append(f"{label}: negative scattering matrix entry")
    if np.any(xs.nu_sigma_f < 0.0):
        violations.append(f"{label}: negative nu_sigma_f entry")
    if np.any(xs.chi < 0.0):
        violations.append(f"{label}: negative chi entry")
    if xs.fissile:
        total = float(np.sum(xs.chi))
        if abs(total - 1.0) > CHI_NORMALIZATION_TOL:
            violations.append(
                f"{label}: chi not normalized (sums to {total:.12g})"
            )
    return violations


@dataclass(frozen=True)
class MaterialGrid:
    """Cross sections expanded onto mesh cells for fast kernels.

    All arrays carry the cell index last: sigma_t[g, c], sigma_s[gp, g, c],
    nu_sigma_f[g, c], chi[g, c], sigma_r[g, c].
    """

    num_groups: int
    sigma_t: np.ndarray
    sigma_s: np.ndarray
    nu_sigma_f: np.ndarray
    chi: np.ndarray
    sigma_r: np.ndarray

    @property
    def fissile(self) -> bool:
        return bool(np.any(self.nu_sigma_f > 0.0))

    def group(self, g: int) -> "MaterialGrid":
        """Single-group view (used by per-group transport sweeps)."""
        return MaterialGrid(
            num_groups=1,
            sigma_t=self.sigma_t[g : g + 1],
            sigma_s=self.sigma_s[g : g + 1, g : g + 1],
            nu_sigma_f=self.nu_sigma_f[g : g + 1],
            chi=self.chi[g : g + 1],
            sigma_r=self.sigma_r[g : g + 1],
        )


def material_grid(
    cell_material: Sequence[str],
    materials: Mapping[str, CrossSectionSet],
) -> MaterialGrid:
    """Expand per-material cross sections to per-cell arrays.

    Every material referenced by the mesh is validated; a nonempty
    violation list raises, since solver kernels assume clean data.
    """
    used = []
    for mid in cell_material:
        if mid not in materials:
            raise MaterialError(f"unknown material id {mid!r}")
        if mid not in used:
            used.append(mid)
    groups = {materials[m].num_groups for m in used}
    if len(groups) != 1:
        raise MaterialError(f"inconsistent group counts across materials: {groups}")
    g = groups.pop()

    problems = []
    for mid in used:
        problems.extend(validate(materials[mid]))
    if problems:
        raise MaterialError("; ".join(problems))

    idx = {mid: i for i, mid in enumerate(used)}
    table_t = np.stack([materials[m].sigma_t for m in used], axis=-1)
    table_s = np.stack([materials[m].sigma_s for m in used], axis=-1)
    table_f = np.stack([materials[m].nu_sigma_f for m in used], axis=-1)
    table_chi = np.stack([materials[m].chi for m in used], axis=-1)
    cells = np.array([idx[m] for m in cell_material], dtype=np.intp)

    sigma_t = np.ascontiguousarray(table_t[:, cells])
    sigma_s = np.ascontiguousarray(table_s[:, :, cells])
    diag = sigma_s[np.arange(g), np.arange(g), :]
    return MaterialGrid(
        num_groups=g,
        sigma_t=sigma_t,
        sigma_s=sigma_s,
        nu_sigma_f=np.ascontiguousarray(table_f[:, cells]),
        chi=np.ascontiguousarray(table_chi[:, cells]),
        sigma_r=np.ascontiguousarray(sigma_t - diag),
    )
