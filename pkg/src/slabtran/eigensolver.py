"""Outer k-eigenvalue drivers: second-moment accelerated and plain PI.

Both drivers count sweeps the same way: one sweep means every direction
and every group traverses the mesh once. The accelerated scheme performs
exactly one sweep per outer (its structural invariant); power iteration
accumulates one sweep per inner Richardson pass.
"""

import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .loworder import (
    assemble_correction,
    assemble_lhs,
    inject_from_fem,
    project_to_fem,
    solve_loworder_eigen,
)
from .materials import CrossSectionSet, MaterialGrid, material_grid
from .mesh import SlabMesh
from .quadrature import boundary_factor, gauss_legendre
from .transport import (
    build_group_source,
    compute_closures,
    make_sweep_operator,
)

__all__ = [
    "EigenSolution",
    "SlabProblem",
    "SolverConfig",
    "convergence_test",
    "solve_pi",
    "solve_smm",
]


@dataclass(frozen=True)
class SlabProblem:
    """A mesh plus the materials its cells reference."""

    mesh: SlabMesh
    materials: Mapping[str, CrossSectionSet]
    name: str = ""

    def grid(self) -> MaterialGrid:
        return material_grid(self.mesh.cell_material, self.materials)


@dataclass
class SolverConfig:
    """Tolerances and knobs for the outer drivers.

    epsilon_phi enables the optional flux-shape criterion when set; by
    default only the relative eigenvalue change is tested, which is the
    criterion the reported iteration counts correspond to.
    """

    epsilon_k: float = 1e-8
    epsilon_phi: float | None = None
    max_outers: int = 500
    inner_tolerance: float = 1e-9   # PI Richardson source iteration
    max_inner: int = 20000
    loworder_epsilon: float | None = None  # defaults to epsilon_k
    loworder_max_outers: int = 50
    loworder_max_inner: int = 200
    cg_rtol: float = 1e-12
    sn_order: int = 64
    method: str = "smm"
    workers: int = 1
    lumped: bool = False

    def __post_init__(self):
        if self.epsilon_k <= 0.0:
            raise ValueError("epsilon_k must be positive")
        if self.epsilon_phi is not None and self.epsilon_phi <= 0.0:
            raise ValueError("epsilon_phi must be positive when set")
        if self.max_outers < 1:
            raise ValueError("max_outers must be >= 1")
        if self.method not in ("pi", "smm"):
            raise ValueError(f"method must be 'pi' or 'smm', got {self.method!r}")


@dataclass
class EigenSolution:
    """Converged (or flagged) eigenpair with iteration bookkeeping."""

    k: float
    flux: np.ndarray          # (G, C+1) continuous scalar flux
    outers: int
    sweeps: int
    wall_seconds: float
    history: list = field(default_factory=list)
    converged: bool = True
    method: str = ""
    num_cells: int = 0
    sn_order: int = 0


def convergence_test(k_new: float, k_old: float,
                     phi_new: np.ndarray | None,
                     phi_old: np.ndarray | None,
                     config: SolverConfig) -> bool:
    """Outer convergence: relative k change, plus flux shape if enabled.

    Flux iterates must be on a common normalization (the solvers keep them
    at unit total fission production).
    """
    if k_old == 0.0:
        raise ValueError("k_old must be nonzero")
    k_ok = abs(k_new - k_old) / abs(k_old) < config.epsilon_k
    if config.epsilon_phi is None:
        return k_ok
    if phi_new is None or phi_old is None:
        raise ValueError("flux iterates required when epsilon_phi is set")
    flux_ok = float(np.linalg.norm(phi_new - phi_old)) < config.epsilon_phi
    return k_ok and flux_ok


def _production_integral_dg(mesh: SlabMesh, grid: MaterialGrid,
                            phi: np.ndarray) -> float:
    dens = np.einsum("gc,gcn->cn", grid.nu_sigma_f, phi)
    return float(np.sum(mesh.widths * (dens[:, 0] + dens[:, 1]) / 2.0))


def solve_smm(problem: SlabProblem, config: SolverConfig) -> EigenSolution:
    """Second-moment accelerated outer iteration.

    Per outer: one source iteration (a single sweep) with scattering and
    fission built from the lagged iterate, closure evaluation, then a
    corrected-diffusion eigensolve whose eigenvalue and injected flux
    become the next iterate.
    """
    mesh = problem.mesh
    grid = problem.grid()
    if not grid.fissile:
        raise ValueError("no fission source: problem is not fissile")
    quad = gauss_legendre(config.sn_order)
    fb = boundary_factor(quad)
    op = make_sweep_operator(mesh, grid, quad, lumped=config.lumped,
                             workers=config.workers)
    system = assemble_lhs(mesh, grid, fb)
    bc = op.new_boundary_state()
    eps_lo = config.loworder_epsilon or config.epsilon_k

    phi_dg = np.ones((grid.num_groups, mesh.num_cells, 2))
    phi_dg /= _production_integral_dg(mesh, grid, phi_dg)
    shape_old = project_to_fem(phi_dg, mesh)
    k = 1.0
    history = []
    converged = False
    outers = 0

    t0 = time.perf_counter()
    for _ in range(config.max_outers):
        q = build_group_source(phi_dg, grid, k)
        state = op.sweep(q, bc)
        closures = compute_closures(state, quad, mesh)
        correction = assemble_correction(closures, mesh, grid)
        phi_init = project_to_fem(state.phi, mesh)
        result = solve_loworder_eigen(
            system, correction, phi_init, lam0=k,
            eps_lambda=eps_lo, max_outers=config.loworder_max_outers,
            max_inner=config.loworder_max_inner, cg_rtol=config.cg_rtol,
        )
        k_old, k = k, result.lam
        injected = inject_from_fem(result.phi, mesh)
        scale = _production_integral_dg(mesh, grid, injected)
        phi_dg = injected / scale
        shape_new = result.phi / scale
        outers += 1
        history.append(k)
        if convergence_test(k, k_old, shape_new, shape_old, config):
            converged = True
            shape_old = shape_new
            break
        shape_old = shape_new
    wall = time.perf_counter() - t0

    return EigenSolution(
        k=k, flux=shape_old, outers=outers, sweeps=outers,
        wall_seconds=wall, history=history, converged=converged,
        method="smm", num_cells=mesh.num_cells, sn_order=config.sn_order,
    )


def solve_pi(problem: SlabProblem, config: SolverConfig) -> EigenSolution:
    """Unaccelerated power iteration baseline.

    Every outer converges the within-outer fixed-source problem by
    Richardson source iteration (one sweep per pass, warm started from the
    previous flux) and then updates k by the fission-production ratio.
    """
    mesh = problem.mesh
    grid = problem.grid()
    if not grid.fissile:
        raise ValueError("no fission source: problem is not fissile")
    quad = gauss_legendre(config.sn_order)
    op = make_sweep_operator(mesh, grid, quad, lumped=config.lumped,
                             workers=config.workers)
    bc = op.new_boundary_state()

    phi = np.ones((grid.num_groups, mesh.num_cells, 2))
    phi /= _production_integral_dg(mesh, grid, phi)
    shape_old = project_to_fem(phi, mesh)
    k = 1.0
    history = []
    sweeps = 0
    outers = 0
    converged = False

    t0 = time.perf_counter()
    for _ in range(config.max_outers):
        fission = np.einsum("gc,gcn->cn", grid.nu_sigma_f, phi)
        q_fission = 0.5 * grid.chi[:, :, None] * fission[None, :, :] / k

        for _ in range(config.max_inner):
            q = q_fission + 0.5 * np.einsum("pgc,pcn->gcn", grid.sigma_s, phi)
            state = op.sweep(q, bc)
            sweeps += 1
            phi_new = state.phi
            change = np.linalg.norm(phi_new - phi) \
                / max(np.linalg.norm(phi_new), 1e-300)
            phi = phi_new
            if change < config.inner_tolerance:
                break

        production = _production_integral_dg(mesh, grid, phi)
        k_old, k = k, k * production  # previous iterate held unit production
        phi = phi / production
        shape_new = project_to_fem(phi, mesh)
        outers += 1
        history.append(k)
        if convergence_test(k, k_old, shape_new, shape_old, config):
            converged = True
            shape_old = shape_new
            break
        shape_old = shape_new
    wall = time.perf_counter() - t0

    return EigenSolution(
        k=k, flux=shape_old, outers=outers, sweeps=sweeps,
        wall_seconds=wall, history=history, converged=converged,
        method="pi", num_cells=mesh.num_cells, sn_order=config.sn_order,
    )
