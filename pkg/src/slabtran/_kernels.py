"""Numba kernels for the transport sweep and the low-order CG solve.

Lanes fuse (group, half-quadrature direction): for a fixed source the
per-lane cell recursions are independent, so worker threads may process
disjoint lane slices concurrently (kernels are nogil). Writes are disjoint
per lane and reductions happen outside the kernels in a fixed order, which
keeps results bit-identical for any worker count.
"""

import numpy as np
from numba import njit

__all__ = ["sweep_forward", "sweep_backward", "pcg_tridiag"]


@njit(cache=True, nogil=True)
def sweep_forward(inv00, inv01, inv10, inv11, mu, hq0, hq1, inflow,
                  psi0, psi1, lane_lo, lane_hi, n_groups, n_half):
    """Left-to-right pass for mu > 0 lanes in [lane_lo, lane_hi).

    hq0/hq1 are the mass-weighted nodal sources per (cell, group); inflow
    holds the boundary trace per lane on entry and the outflow on exit.
    """
    n_cells = psi0.shape[0]
    for i in range(n_cells):
        for lane in range(lane_lo, lane_hi):
            g = lane // n_half
            a = hq0[i, g] + mu[lane] * inflow[lane]
            b = hq1[i, g]
            pl = inv00[i, lane] * a + inv01[i, lane] * b
            pr = inv10[i, lane] * a + inv11[i, lane] * b
            psi0[i, lane] = pl
            psi1[i, lane] = pr
            inflow[lane] = pr


@njit(cache=True, nogil=True)
def sweep_backward(inv00, inv01, inv10, inv11, mu, hq0, hq1, inflow,
                   psi0, psi1, lane_lo, lane_hi, n_groups, n_half):
    """Right-to-left pass for mu < 0 lanes (mirror of the forward pass)."""
    n_cells = psi0.shape[0]
    for i in range(n_cells - 1, -1, -1):
        for lane in range(lane_lo, lane_hi):
            g = lane // n_half
            a = hq1[i, g] + mu[lane] * inflow[lane]
            b = hq0[i, g]
            pr = inv00[i, lane] * a + inv01[i, lane] * b
            pl = inv10[i, lane] * a + inv11[i, lane] * b
            psi0[i, lane] = pl
            psi1[i, lane] = pr
            inflow[lane] = pl


@njit(cache=True, nogil=True)
def _tridiag_matvec(diag, off, x, out):
    n = diag.shape[0]
    out[0] = diag[0] * x[0] + off[0] * x[1]
    for i in range(1, n - 1):
        out[i] = off[i - 1] * x[i - 1] + diag[i] * x[i] + off[i] * x[i + 1]
    out[n - 1] = off[n - 2] * x[n - 2] + diag[n - 1] * x[n - 1]


@njit(cache=True, nogil=True)
def pcg_tridiag(diag, off, b, x, rtol, maxiter):
    """Jacobi-preconditioned CG on a symmetric tridiagonal system.

    Solves in place starting from the warm guess in ``x``; returns the
    iteration count, or -1 if the relative residual never reached rtol.
    """
    n = diag.shape[0]
    r = np.empty(n)
    z = np.empty(n)
    p = np.empty(n)
    ap = np.empty(n)

    b_norm = 0.0
    for i in range(n):
        b_norm += b[i] * b[i]
    b_norm = np.sqrt(b_norm)
    if b_norm == 0.0:
        for i in range(n):
            x[i] = 0.0
        return 0

    _tridiag_matvec(diag, off, x, ap)
    rs = 0.0
    for i in range(n):
        r[i] = b[i] - ap[i]
        z[i] = r[i] / diag[i]
        p[i] = z[i]
        rs += r[i] * z[i]
    rr = 0.0
    for i in range(n):
        rr += r[i] * r[i]
    if np.sqrt(rr) <= rtol * b_norm:
        return 0

    for it in range(1, maxiter + 1):
        _tridiag_matvec(diag, off, p, ap)
        pap = 0.0
        for i in range(n):
            pap += p[i] * ap[i]
        alpha = rs / pap
        rr = 0.0
        for i in range(n):
            x[i] += alpha * p[i]
            r[i] -= alpha * ap[i]
            rr += r[i] * r[i]
        if np.sqrt(rr) <= rtol * b_norm:
            return it
        rs_new = 0.0
        for i in range(n):
            z[i] = r[i] / diag[i]
            rs_new += r[i] * z[i]
        beta = rs_new / rs
        rs = rs_new
        for i in range(n):
            p[i] = z[i] + beta * p[i]
    return -1
