"""S_N angular quadrature on mu in [-1, 1].

Gauss-Legendre is the only family shipped; it integrates polynomials up to
degree 2N-1 exactly, so the second moment of an isotropic flux (1/3 factor
in the diffusion closure) is represented without quadrature error for any
N >= 2.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["AngularQuadrature", "gauss_legendre", "boundary_factor"]


@dataclass(frozen=True)
class AngularQuadrature:
    """Direction cosines and positive weights, sorted by ascending mu.

    Directions come in exact +/- pairs: ``mu[n]`` mirrors to
    ``mu[N - 1 - n]``, which reflective boundaries rely on.
    """

    mu: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        mu = np.ascontiguousarray(np.asarray(self.mu, dtype=np.float64))
        w = np.ascontiguousarray(np.asarray(self.w, dtype=np.float64))
        if mu.ndim != 1 or mu.shape != w.shape:
            raise ValueError("mu and w must be 1D arrays of equal length")
        mu.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "w", w)

    @property
    def n_dir(self) -> int:
        return self.mu.size

    def mirror_index(self, n: int) -> int:
        """Index n' with mu[n'] == -mu[n] (exact by construction)."""
        return self.n_dir - 1 - n


def _legendre_and_derivative(n: int, x: np.ndarray):
    """Evaluate P_n(x) and P_n'(x) by the three-term recurrence."""
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def gauss_legendre(n: int) -> AngularQuadrature:
    """Build the N-point Gauss-Legendre quadrature on [-1, 1].

    Roots of P_N are found by Newton iteration seeded with the Chebyshev
    approximation; only the positive half is iterated and then mirrored so
    that the +/- pairing is exact, not merely within roundoff.

    Parameters
    ----------
    n : int
        Number of directions; must be even and >= 2.
    """
    if n < 2 or n % 2 != 0:
        raise ValueError(f"quadrature order must be even and >= 2, got {n}")

    # k = 1..n/2 seeds the positive roots in descending order.
    k = np.arange(1, n // 2 + 1, dtype=np.float64)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = _legendre_and_derivative(n, x)
        step = p / dp
        x -= step
        if np.max(np.abs(step)) < 1e-15:
            break
    p, dp = _legendre_and_derivative(n, x)
    x -= p / dp  # one polishing step after the step criterion triggers
    _, dp = _legendre_and_derivative(n, x)
    w_half = 2.0 / ((1.0 - x * x) * dp * dp)

    mu = np.concatenate([-x, x[::-1]])
    w = np.concatenate([w_half, w_half[::-1]])
    return AngularQuadrature(mu=mu, w=w)


def boundary_factor(quad: AngularQuadrature) -> float:
    """Quadrature-consistent half-range factor sum(w |mu|) / sum(w).

    Used in place of the exact 1/2 in the vacuum (Marshak-like) boundary
    condition because |mu| psi is not integrated exactly by the quadrature.
    """
    return float(np.sum(quad.w * np.abs(quad.mu)) / np.sum(quad.w))
