"""Continuous linear-FEM multigroup diffusion eigenproblem with closures.

Assembles, per group, the symmetric tridiagonal operator

    int (1/3 sigma_t) u' v' + int sigma_r u v + f_b [u v]_vacuum-nodes

with consistent (unlumped) mass matrices, and the correction vector built
from the discontinuous closure field T and the boundary residuals beta.
Group solves use Jacobi-preconditioned conjugate gradients; within-group
scattering sits on the left-hand side through sigma_r, so the inner source
iteration lags only inter-group transfer (Jacobi-style across groups).
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import pcg_tridiag
from .materials import MaterialGrid
from .mesh import VACUUM, SlabMesh
from .transport import SmmClosures

__all__ = [
    "DiffusionSystem",
    "LowOrderError",
    "LowOrderResult",
    "assemble_correction",
    "assemble_lhs",
    "group_balance",
    "inject_from_fem",
    "project_to_fem",
    "solve_loworder_eigen",
]


class LowOrderError(RuntimeError):
    """CG non-convergence or a vanishing fission source."""


@dataclass
class DiffusionSystem:
    """Per-group symmetric tridiagonal diffusion operators on the vertices."""

    mesh: SlabMesh
    grid: MaterialGrid
    fb: float
    diag: np.ndarray  # (G, C+1)
    off: np.ndarray   # (G, C)

    def matvec(self, g: int, x: np.ndarray) -> np.ndarray:
        out = self.diag[g] * x
        out[:-1] += self.off[g] * x[1:]
        out[1:] += self.off[g] * x[:-1]
        return out

    def dense(self, g: int) -> np.ndarray:
        """Dense copy for small-system inspection in tests."""
        a = np.diag(self.diag[g])
        idx = np.arange(self.off.shape[1])
        a[idx, idx + 1] = self.off[g]
        a[idx + 1, idx] = self.off[g]
        return a


def assemble_lhs(mesh: SlabMesh, grid: MaterialGrid, fb: float) -> DiffusionSystem:
    """Stiffness + removal mass + f_b vacuum boundary terms, per group."""
    h = mesh.widths
    n_v = mesh.num_vertices
    g = grid.num_groups
    diff = 1.0 / (3.0 * grid.sigma_t)  # (G, C)
    k_cell = diff / h
    m_cell = grid.sigma_r * h / 6.0

    diag = np.zeros((g, n_v))
    off = np.empty((g, n_v - 1))
    diag[:, :-1] += k_cell + 2.0 * m_cell
    diag[:, 1:] += k_cell + 2.0 * m_cell
    off[:] = -k_cell + m_cell
    if mesh.left_bc == VACUUM:
        diag[:, 0] += fb
    if mesh.right_bc == VACUUM:
        diag[:, -1] += fb
    return DiffusionSystem(mesh=mesh, grid=grid, fb=fb, diag=diag, off=off)


def assemble_correction(closures: SmmClosures, mesh: SlabMesh,
                        grid: MaterialGrid) -> np.ndarray:
    """Right-hand-side correction vector r_g from the closures, (G, C+1).

    Three pieces: the volumetric term -int u' (1/sigma_t) dT/dx (dT/dx is
    constant per cell since T is linear), the interior-node term coupling
    the average of u'/sigma_t to the jump T(+) - T(-) under the +x normal
    convention, and -beta at each vacuum boundary node.
    """
    h = mesh.widths
    sig_t = grid.sigma_t  # (G, C)
    g = grid.num_groups
    n_v = mesh.num_vertices
    r = np.zeros((g, n_v))

    dt = (closures.t[:, :, 1] - closures.t[:, :, 0]) / (sig_t * h)  # (G, C)
    r[:, :-1] += dt
    r[:, 1:] -= dt

    if n_v > 2:
        jump = closures.t[:, 1:, 0] - closures.t[:, :-1, 1]  # (G, C-1)
        inv_l = 1.0 / (h[:-1] * sig_t[:, :-1])  # left cell of each node
        inv_r = 1.0 / (h[1:] * sig_t[:, 1:])
        r[:, :-2] += 0.5 * (-inv_l) * jump
        r[:, 1:-1] += 0.5 * (inv_l - inv_r) * jump
        r[:, 2:] += 0.5 * inv_r * jump

    if closures.beta_left is not None:
        r[:, 0] -= closures.beta_left
    if closures.beta_right is not None:
        r[:, -1] -= closures.beta_right
    return r


def project_to_fem(phi: np.ndarray, mesh: SlabMesh) -> np.ndarray:
    """Conservative map from DG nodal values (G, C, 2) to vertices (G, C+1).

    Shared vertices take the cell-width-weighted average of the adjacent
    traces, which preserves the trapezoid-rule domain integral; boundary
    vertices copy their single trace.
    """
    h = mesh.widths
    g = phi.shape[0]
    out = np.empty((g, mesh.num_vertices))
    out[:, 0] = phi[:, 0, 0]
    out[:, -1] = phi[:, -1, 1]
    if mesh.num_cells > 1:
        out[:, 1:-1] = (h[:-1] * phi[:, :-1, 1] + h[1:] * phi[:, 1:, 0]) \
            / (h[:-1] + h[1:])
    return out


def inject_from_fem(fem: np.ndarray, mesh: SlabMesh) -> np.ndarray:
    """Exact injection of a vertex field (G, C+1) into the DG space."""
    return np.stack([fem[:, :-1], fem[:, 1:]], axis=-1)


def _mass_apply(h: np.ndarray, coef: np.ndarray, fem_g: np.ndarray) -> np.ndarray:
    """Consistent-mass application of a cellwise coefficient to a field."""
    left = fem_g[:-1]
    right = fem_g[1:]
    w = coef * h / 6.0
    out = np.zeros(fem_g.size)
    out[:-1] += w * (2.0 * left + right)
    out[1:] += w * (left + 2.0 * right)
    return out


def scattering_source(system: DiffusionSystem, phi: np.ndarray) -> np.ndarray:
    """Inter-group scattering vectors (G, C+1); diagonal terms excluded."""
    grid = system.grid
    h = system.mesh.widths
    out = np.zeros_like(phi)
    for g in range(grid.num_groups):
        for p in range(grid.num_groups):
            if p == g:
                continue
            out[g] += _mass_apply(h, grid.sigma_s[p, g], phi[p])
    return out


def fission_source(system: DiffusionSystem, phi: np.ndarray) -> np.ndarray:
    """chi-weighted fission production vectors (G, C+1)."""
    grid = system.grid
    h = system.mesh.widths
    fd_l = np.einsum("gc,gc->c", grid.nu_sigma_f, phi[:, :-1])
    fd_r = np.einsum("gc,gc->c", grid.nu_sigma_f, phi[:, 1:])
    out = np.zeros_like(phi)
    for g in range(grid.num_groups):
        w = grid.chi[g] * h / 6.0
        out[g, :-1] += w * (2.0 * fd_l + fd_r)
        out[g, 1:] += w * (fd_l + 2.0 * fd_r)
    return out


def production_vector(system: DiffusionSystem, phi: np.ndarray) -> np.ndarray:
    """Mass-weighted nodal fission production sum_g nu_sigma_f,g phi_g."""
    grid = system.grid
    h = system.mesh.widths
    fd_l = np.einsum("gc,gc->c", grid.nu_sigma_f, phi[:, :-1])
    fd_r = np.einsum("gc,gc->c", grid.nu_sigma_f, phi[:, 1:])
    out = np.zeros(phi.shape[1])
    out[:-1] += h / 6.0 * (2.0 * fd_l + fd_r)
    out[1:] += h / 6.0 * (fd_l + 2.0 * fd_r)
    return out


def production_integral(system: DiffusionSystem, phi: np.ndarray) -> float:
    """Domain-integrated fission production of a vertex field."""
    grid = system.grid
    h = system.mesh.widths
    fd_l = np.einsum("gc,gc->c", grid.nu_sigma_f, phi[:, :-1])
    fd_r = np.einsum("gc,gc->c", grid.nu_sigma_f, phi[:, 1:])
    return float(np.sum(h * (fd_l + fd_r) / 2.0))


def solve_spd(system: DiffusionSystem, g: int, b: np.ndarray,
              x0: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Jacobi-preconditioned CG solve of A_g x = b from a warm start."""
    x = x0.copy()
    n = b.size
    its = pcg_tridiag(system.diag[g], system.off[g], b, x, rtol, 10 * n + 100)
    if its < 0:
        raise LowOrderError(
            f"CG failed to converge for group {g} (non-SPD assembly?)"
        )
    return x


@dataclass
class LowOrderResult:
    lam: float
    phi: np.ndarray  # (G, C+1)
    outers: int


def solve_loworder_eigen(system: DiffusionSystem, correction: np.ndarray,
                         phi0: np.ndarray, lam0: float,
                         eps_lambda: float = 1e-8, max_outers: int = 50,
                         inner_tol: float | None = None, max_inner: int = 200,
                         cg_rtol: float = 1e-12) -> LowOrderResult:
    """Power iteration on the corrected diffusion eigenproblem.

    Each outer freezes the fission source at the previous iterate, runs
    group-wise source iterations (lagging only inter-group scattering)
    until the flux block stabilizes, then updates lambda by the ratio of
    fission-production norms. The iterate and the correction are rescaled
    jointly to unit fission production each outer; the joint rescale leaves
    the lambda history untouched while preventing magnitude drift.
    """
    if inner_tol is None:
        inner_tol = max(1e-10, 0.01 * eps_lambda)
    phi = phi0.copy()
    correction = correction.copy()
    lam = float(lam0)

    p_norm_old = float(np.linalg.norm(production_vector(system, phi)))
    if p_norm_old == 0.0:
        raise LowOrderError("zero fission norm in low-order initial guess")

    outers = 0
    for _ in range(max_outers):
        b_base = fission_source(system, phi) / lam + correction
        new = phi.copy()
        for _ in range(max_inner):
            scat = scattering_source(system, new)
            prev = new
            new = np.empty_like(prev)
            for g in range(system.grid.num_groups):
                new[g] = solve_spd(system, g, b_base[g] + scat[g], prev[g],
                                   rtol=cg_rtol)
            change = np.linalg.norm(new - prev) / max(np.linalg.norm(new), 1e-300)
            if change < inner_tol:
                break

        p_norm = float(np.linalg.norm(production_vector(system, new)))
        if p_norm == 0.0:
            raise LowOrderError("zero fission norm in low-order iterate")
        lam_new = lam * p_norm / p_norm_old
        dlam = abs(lam_new - lam) / abs(lam)

        scale = production_integral(system, new)
        if scale <= 0.0:
            raise LowOrderError("non-positive fission production integral")
        phi = new / scale
        correction /= scale
        p_norm_old = p_norm / scale
        lam = lam_new
        outers += 1
        if dlam < eps_lambda:
            break
    return LowOrderResult(lam=lam, phi=phi, outers=outers)


def group_balance(system: DiffusionSystem, phi: np.ndarray, lam: float,
                  correction: np.ndarray) -> list[dict]:
    """Discrete per-group balance at a converged state.

    Summing the weak form against u = 1 annihilates the stiffness term, so
    leakage (f_b boundary terms) + removal must equal in-scatter +
    fission/lambda + correction. Returned residuals test the solver: the
    same assembled operators produce both sides.
    """
    mesh, grid = system.mesh, system.grid
    scat = scattering_source(system, phi)
    fiss = fission_source(system, phi)
    rows = []
    for g in range(grid.num_groups):
        leak = 0.0
        if mesh.left_bc == VACUUM:
            leak += system.fb * phi[g, 0]
        if mesh.right_bc == VACUUM:
            leak += system.fb * phi[g, -1]
        removal = float(np.sum(_mass_apply(mesh.widths, grid.sigma_r[g], phi[g])))
        inscatter = float(np.sum(scat[g]))
        fission = float(np.sum(fiss[g])) / lam
        corr = float(np.sum(correction[g]))
        lhs = leak + removal
        rhs = inscatter + fission + corr
        rows.append({
            "group": g,
            "leakage": leak,
            "removal": removal,
            "inscatter": inscatter,
            "fission": fission,
            "correction": corr,
            "residual": lhs - rhs,
            "relative": abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300),
        })
    return rows
