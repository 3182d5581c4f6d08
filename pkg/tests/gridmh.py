"""Exact reference kernel for MH on a piecewise-constant 1-D target.

With a target density that is constant on each of ``n_cells`` equal cells
over [0, n_cells * h] and a Gaussian random-walk proposal, the cell process
of a stationary chain has exact transition frequencies

    K(i, j) = min(1, w_j / w_i) * G_ij / h          (j != i)

where w_i are the cell weights and G_ij is the average Gaussian mass that
cell j receives from a uniformly drawn point of cell i.  G_ij has a closed
form via  int Phi(z) dz = z Phi(z) + phi(z),  so the kernel is computable
to machine precision and satisfies detailed balance with respect to the
cell weights analytically.  Out-of-box proposals and density rejections
land in the diagonal as the complement.
"""

import math

import numpy as np

SQRT2 = math.sqrt(2.0)
INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _phi(z):
    return math.exp(-0.5 * z * z) * INV_SQRT_2PI


def _cdf(z):
    return 0.5 * (1.0 + math.erf(z / SQRT2))


def _int_cdf(z):
    # antiderivative of the standard normal CDF
    return z * _cdf(z) + _phi(z)


class GridTarget:
    """Quadratic log-density discretised to constant values per cell."""

    def __init__(self, n_cells=21, h=1.0, center=None, scale=4.0, sigma=1.5):
        self.n_cells = n_cells
        self.h = h
        self.length = n_cells * h
        self.center = 0.5 * self.length if center is None else center
        self.scale = scale
        self.sigma = sigma
        self.cell_centers = (np.arange(n_cells) + 0.5) * h
        self.log_weights = -((self.cell_centers - self.center) ** 2) / (
            2.0 * scale * scale
        )
        weights = np.exp(self.log_weights)
        self.cell_stationary = weights / weights.sum()

    def cell_of(self, x):
        return min(self.n_cells - 1, int(x // self.h))

    def loglik(self, theta):
        return float(self.log_weights[self.cell_of(float(theta[0]))])

    @property
    def upper_cells(self):
        """Boolean mask of the cells strictly above the center cell."""
        return np.arange(self.n_cells) >= (self.n_cells + 1) // 2

    def indicator_upper_half(self, theta):
        # a cell function, so its stationary mean matches the cell kernel's
        return 1.0 if self.upper_cells[self.cell_of(float(theta[0]))] else 0.0

    def exact_cell_kernel(self):
        """The averaged cell-to-cell kernel, rows summing to one."""
        n, h, sigma = self.n_cells, self.h, self.sigma
        weights = np.exp(self.log_weights)
        kernel = np.zeros((n, n))
        for i in range(n):
            li, ri = i * h, (i + 1) * h
            off_diagonal = 0.0
            for j in range(n):
                if j == i:
                    continue
                lj, rj = j * h, (j + 1) * h
                mass = sigma * (
                    _int_cdf((rj - li) / sigma)
                    - _int_cdf((rj - ri) / sigma)
                    - _int_cdf((lj - li) / sigma)
                    + _int_cdf((lj - ri) / sigma)
                )
                accept = min(1.0, weights[j] / weights[i])
                entry = accept * mass / h
                if entry < 0.0:  # cancellation noise for distant cells
                    assert entry > -1e-12
                    entry = 0.0
                kernel[i, j] = entry
                off_diagonal += entry
            kernel[i, i] = 1.0 - off_diagonal
        return kernel

    def stationary_initial_point(self, rng):
        """Exact stationary draw: cell by weight, uniform within the cell."""
        cum = np.cumsum(self.cell_stationary)
        cum[-1] = 1.0
        cell = int(np.searchsorted(cum, rng.random(), side="right"))
        return np.array([(cell + rng.random()) * self.h])


def transition_counts(target, positions):
    cells = np.minimum(
        (np.asarray(positions) // target.h).astype(np.int64), target.n_cells - 1
    )
    counts = np.zeros((target.n_cells, target.n_cells), dtype=np.int64)
    np.add.at(counts, (cells[:-1], cells[1:]), 1)
    return counts
