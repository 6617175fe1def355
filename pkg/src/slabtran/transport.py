"""Linear-discontinuous transport sweeps, angular moments, and closures.

Each cell solves a 2x2 system from the DG weak form with upwind flux and
linear basis functions (the 1D reduction of piecewise-linear DG). The
unlumped form is the default; row-lumping of the mass matrix is available
as a toggle but degrades the observed convergence order.

Sweep ordering is negative directions first (right-to-left), then positive.
A reflective left boundary therefore closes exactly within a single sweep:
the positive pass consumes the left-going outflow just computed. A
reflective right boundary uses the outflow stored from the previous sweep
(lagged reflection).
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._kernels import sweep_backward, sweep_forward
from .materials import MaterialGrid
from .mesh import REFLECTIVE, SlabMesh
from .quadrature import AngularQuadrature, boundary_factor

__all__ = [
    "BoundaryState",
    "SmmClosures",
    "SweepOperator",
    "TransportState",
    "accumulate_moments",
    "build_group_source",
    "compute_closures",
    "make_sweep_operator",
    "sweep_group",
]


@dataclass
class BoundaryState:
    """Stored outgoing angular fluxes per lane for reflective closure."""

    left_out: np.ndarray
    right_out: np.ndarray

    @classmethod
    def zeros(cls, n_lanes: int) -> "BoundaryState":
        return cls(np.zeros(n_lanes), np.zeros(n_lanes))


@dataclass
class TransportState:
    """Angular flux and its first three angular moments on the DG mesh.

    Internal storage keeps the four (cell, lane) sweep arrays; the canonical
    psi[g, n, cell, node] layout is materialized on demand for inspection.
    Lanes run group-major over the positive half-quadrature.
    """

    quad: AngularQuadrature
    num_groups: int
    pos0: np.ndarray
    pos1: np.ndarray
    neg0: np.ndarray
    neg1: np.ndarray
    phi: np.ndarray = field(init=False)
    current: np.ndarray = field(init=False)
    pressure: np.ndarray = field(init=False)

    def __post_init__(self):
        n_half = self.quad.n_dir // 2
        w = self.quad.w[n_half:]
        mu = self.quad.mu[n_half:]
        c = self.pos0.shape[0]
        g = self.num_groups

        def moment(weights):
            s = np.empty((g, c, 2))
            even = weights  # same sign for both halves
            s[:, :, 0] = (self._view(self.pos0) @ even
                          + self._view(self.neg0) @ even).T
            s[:, :, 1] = (self._view(self.pos1) @ even
                          + self._view(self.neg1) @ even).T
            return s

        self.phi = moment(w)
        self.pressure = moment(w * mu * mu)
        wm = w * mu
        j = np.empty((g, c, 2))
        j[:, :, 0] = (self._view(self.pos0) @ wm - self._view(self.neg0) @ wm).T
        j[:, :, 1] = (self._view(self.pos1) @ wm - self._view(self.neg1) @ wm).T
        self.current = j

    def _view(self, arr):
        c = arr.shape[0]
        n_half = self.quad.n_dir // 2
        return arr.reshape(c, self.num_groups, n_half)

    @property
    def psi(self) -> np.ndarray:
        """Canonical angular flux, shape (G, N, C, 2), mu ascending."""
        n = self.quad.n_dir
        n_half = n // 2
        c = self.pos0.shape[0]
        out = np.empty((self.num_groups, n, c, 2))
        pos0 = self._view(self.pos0)
        pos1 = self._view(self.pos1)
        neg0 = self._view(self.neg0)
        neg1 = self._view(self.neg1)
        for j in range(n_half):
            # positive lane j has mu = mu_pos[j] at sorted index n_half + j;
            # its negative mirror sits at sorted index n_half - 1 - j
            out[:, n_half + j, :, 0] = pos0[:, :, j].T
            out[:, n_half + j, :, 1] = pos1[:, :, j].T
            out[:, n_half - 1 - j, :, 0] = neg0[:, :, j].T
            out[:, n_half - 1 - j, :, 1] = neg1[:, :, j].T
        return out

    def boundary_trace(self, side: str) -> np.ndarray:
        """Angular flux trace at a boundary node, shape (G, n_half, 2).

        Last axis stacks (positive-mu, negative-mu) lanes of equal |mu|.
        """
        if side == "left":
            p, m = self._view(self.pos0)[0], self._view(self.neg0)[0]
        else:
            p, m = self._view(self.pos1)[-1], self._view(self.neg1)[-1]
        return np.stack([p, m], axis=-1)


@dataclass
class SmmClosures:
    """Additive closures: T = P - phi/3 nodewise and the vacuum-boundary
    residuals beta = sum(w |mu| psi) - f_b phi. Both vanish identically for
    an isotropic angular flux, which is what makes the corrected diffusion
    system a reformulation rather than an approximation.
    """

    t: np.ndarray  # (G, C, 2)
    beta_left: np.ndarray | None  # (G,) or None when not vacuum
    beta_right: np.ndarray | None


class SweepOperator:
    """Precomputed per-(cell, lane) LD solve coefficients plus scratch.

    The 2x2 cell matrices depend only on (h sigma_t, |mu|), so their
    closed-form inverses are computed once. Lane slices may be swept by
    multiple worker threads; results are bit-identical for any count.
    """

    def __init__(self, mesh: SlabMesh, grid: MaterialGrid,
                 quad: AngularQuadrature, lumped: bool = False,
                 workers: int = 1):
        if quad.n_dir % 2 != 0:
            raise ValueError("quadrature must pair +/- directions")
        self.mesh = mesh
        self.grid = grid
        self.quad = quad
        self.lumped = lumped
        self.workers = max(1, int(workers))
        self.num_groups = grid.num_groups
        self.n_half = quad.n_dir // 2
        self.n_lanes = self.num_groups * self.n_half

        c = mesh.num_cells
        h = mesh.widths
        mu = quad.mu[self.n_half:]  # ascending positive
        self.mu_lane = np.ascontiguousarray(
            np.tile(mu, self.num_groups))
        a = (grid.sigma_t * h).T.reshape(c, self.num_groups, 1)  # (C,G,1)
        m = mu.reshape(1, 1, -1)
        if lumped:
            m00 = m / 2 + a / 2
            m01 = m / 2 + np.zeros_like(a)
            m10 = -m / 2 + np.zeros_like(a)
            m11 = m / 2 + a / 2
        else:
            m00 = m / 2 + a / 3
            m01 = m / 2 + a / 6
            m10 = -m / 2 + a / 6
            m11 = m / 2 + a / 3
        det = m00 * m11 - m01 * m10
        if np.any(np.abs(det) < 1e-300):
            raise ArithmeticError("singular LD cell matrix (underflowing determinant)")
        shape = (c, self.n_lanes)
        self.inv00 = np.ascontiguousarray((m11 / det).reshape(shape))
        self.inv01 = np.ascontiguousarray((-m01 / det).reshape(shape))
        self.inv10 = np.ascontiguousarray((-m10 / det).reshape(shape))
        self.inv11 = np.ascontiguousarray((m00 / det).reshape(shape))

        self._hq0 = np.empty((c, self.num_groups))
        self._hq1 = np.empty((c, self.num_groups))
        self._inflow = np.empty(self.n_lanes)
        self._pool = None
        self._chunks = self._lane_chunks()

    def _lane_chunks(self):
        bounds = np.linspace(0, self.n_lanes, self.workers + 1).astype(int)
        return [(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo]

    def new_boundary_state(self) -> BoundaryState:
        return BoundaryState.zeros(self.n_lanes)

    def _run(self, kernel, hq0, hq1, inflow, out0, out1):
        args = (self.inv00, self.inv01, self.inv10, self.inv11, self.mu_lane,
                hq0, hq1, inflow, out0, out1)
        if self.workers == 1 or len(self._chunks) == 1:
            kernel(*args, 0, self.n_lanes, self.num_groups, self.n_half)
            return
        if self._pool is None:
            self._pool = ThreadPoolExecutor(max_workers=self.workers)
        futures = [
            self._pool.submit(kernel, *args, lo, hi, self.num_groups, self.n_half)
            for lo, hi in self._chunks
        ]
        for f in futures:
            f.result()

    def sweep(self, q: np.ndarray, bc: BoundaryState) -> TransportState:
        """One full sweep (all groups, all directions) for nodal source q.

        Parameters
        ----------
        q : (G, C, 2) array
            Isotropic emission density at the cell nodes.
        bc : BoundaryState
            Stored outgoing fluxes; updated in place with this sweep's
            outflows.
        """
        c = self.mesh.num_cells
        h = self.mesh.widths[:, None]
        ql = q[:, :, 0].T
        qr = q[:, :, 1].T
        if self.lumped:
            np.multiply(h / 2, ql, out=self._hq0)
            np.multiply(h / 2, qr, out=self._hq1)
        else:
            np.multiply(h / 6, 2 * ql + qr, out=self._hq0)
            np.multiply(h / 6, ql + 2 * qr, out=self._hq1)

        neg0 = np.empty((c, self.n_lanes))
        neg1 = np.empty((c, self.n_lanes))
        pos0 = np.empty((c, self.n_lanes))
        pos1 = np.empty((c, self.n_lanes))

        inflow = self._inflow
        if self.mesh.right_bc == REFLECTIVE:
            inflow[:] = bc.right_out
        else:
            inflow[:] = 0.0
        self._run(sweep_backward, self._hq0, self._hq1, inflow, neg0, neg1)
        bc.left_out[:] = inflow  # left-going outflow at the left boundary

        if self.mesh.left_bc == REFLECTIVE:
            inflow[:] = bc.left_out
        else:
            inflow[:] = 0.0
        self._run(sweep_forward, self._hq0, self._hq1, inflow, pos0, pos1)
        bc.right_out[:] = inflow

        return TransportState(
            quad=self.quad, num_groups=self.num_groups,
            pos0=pos0, pos1=pos1, neg0=neg0, neg1=neg1,
        )


def make_sweep_operator(mesh: SlabMesh, grid: MaterialGrid,
                        quad: AngularQuadrature, lumped: bool = False,
                        workers: int = 1) -> SweepOperator:
    return SweepOperator(mesh, grid, quad, lumped=lumped, workers=workers)


def sweep_group(mesh: SlabMesh, grid: MaterialGrid, quad: AngularQuadrature,
                q_g: np.ndarray, g: int,
                bc: BoundaryState | None = None) -> np.ndarray:
    """Sweep a single group; returns psi with shape (N, C, 2).

    Convenience wrapper over the fused-lane operator, mainly for tests and
    diagnostics; solvers sweep all groups at once.
    """
    op = make_sweep_operator(mesh, grid.group(g), quad)
    if bc is None:
        bc = op.new_boundary_state()
    state = op.sweep(q_g[None, :, :], bc)
    return state.psi[0]


def accumulate_moments(psi: np.ndarray, quad: AngularQuadrature):
    """Weighted direction sums of psi[(G,) N, C, 2]: (phi, J, P) nodewise."""
    w = quad.w
    mu = quad.mu
    axis = psi.ndim - 3
    phi = np.tensordot(w, psi, axes=(0, axis))
    current = np.tensordot(w * mu, psi, axes=(0, axis))
    pressure = np.tensordot(w * mu * mu, psi, axes=(0, axis))
    return phi, current, pressure


def compute_closures(state: TransportState, quad: AngularQuadrature,
                     mesh: SlabMesh) -> SmmClosures:
    """Evaluate T = P - phi/3 and the vacuum-boundary beta residuals.

    beta uses the transport trace at the boundary node of the adjacent
    cell, with no interpolation.
    """
    t = state.pressure - state.phi / 3.0
    fb = boundary_factor(quad)
    n_half = quad.n_dir // 2
    wmu = quad.w[n_half:] * quad.mu[n_half:]  # w |mu| on the positive half

    def beta(side, node):
        trace = state.boundary_trace(side)  # (G, n_half, 2)
        half_range = (trace[:, :, 0] + trace[:, :, 1]) @ wmu
        cell = 0 if side == "left" else -1
        return half_range - fb * state.phi[:, cell, node]

    beta_left = beta("left", 0) if mesh.left_bc != REFLECTIVE else None
    beta_right = beta("right", 1) if mesh.right_bc != REFLECTIVE else None
    return SmmClosures(t=t, beta_left=beta_left, beta_right=beta_right)


def build_group_source(phi: np.ndarray, grid: MaterialGrid,
                       k: float) -> np.ndarray:
    """Nodal isotropic emission density for every group.

    q_g = (1/2) [ sum_gp sigma_s[gp->g] phi_gp
                  + chi_g / k * sum_gp nu_sigma_f[gp] phi_gp ]

    The full scattering matrix is applied (within-group scattering is
    lagged, matching the single source iteration per outer).
    """
    if k <= 0.0:
        raise ValueError(f"k must be positive, got {k}")
    scat = np.einsum("pgc,pcn->gcn", grid.sigma_s, phi)
    fission = np.einsum("gc,gcn->cn", grid.nu_sigma_f, phi)
    return 0.5 * (scat + grid.chi[:, :, None] * fission[None, :, :] / k)
