import logging
import math
from typing import Callable, Sequence, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal

from vesselkin import Config

__all__ = ['RadialSpectralOracle', 'radial_oracle_solve']

log = logging.getLogger(__name__)

# Relative L² projection residual above which the mode count is reported as too small.
TRUNCATION_WARNING = 1e-3


class RadialSpectralOracle:
    """
    Neumann eigenpairs (λ_n, φ_n) of the radially symmetric problem d(u_rr + u_r/r) on
    [r₀, r₁], from a fine finite-volume discretization. Eigenfunctions are orthonormal in
    L²(Ω), i.e. with the weight 2πr dr; φ₁ is the constant mode with λ₁ = 0.
    """

    def __init__(
        self,
        r0: float,
        r1: float,
        d: float,
        cells: int = Config.ORACLE_CELLS,
        modes: int = Config.ORACLE_MODES,
    ) -> None:
        self.r0, self.r1, self.d = float(r0), float(r1), float(d)
        self.cells = int(cells)
        self.modes = min(int(modes), self.cells)
        self.dr = (self.r1 - self.r0) / self.cells
        self.r = self.r0 + (np.arange(self.cells) + 0.5) * self.dr
        self.mass = self.r * self.dr
        self.eigenvalues, self.eigenfunctions = self._solve()

    def _solve(self):
        faces = self.r0 + np.arange(1, self.cells) * self.dr
        coupling = self.d * faces / self.dr
        diagonal = np.zeros(self.cells)
        diagonal[:-1] += coupling
        diagonal[1:] += coupling
        scale = 1 / np.sqrt(self.mass)
        values, vectors = eigh_tridiagonal(
            diagonal * scale ** 2,
            -coupling * scale[:-1] * scale[1:],
            select='i',
            select_range=(0, self.modes - 1),
        )
        log.debug('radial oracle: computed lowest eigenvalue %.3e', values[0])
        # The kernel is known exactly.
        values[0] = 0.0
        vectors[:, 0] = np.sqrt(self.mass)
        vectors[:, 0] /= np.linalg.norm(vectors[:, 0])
        functions = vectors * scale[:, None] / math.sqrt(2 * math.pi)
        sign = np.sign(functions[0])
        sign[sign == 0] = 1
        return values, functions * sign

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        """L²(Ω) inner product of two radial profiles on the fine grid."""
        return float(2 * math.pi * np.sum(self.mass * u * v))

    def project(self, u0: np.ndarray) -> np.ndarray:
        coefficients = 2 * math.pi * (self.eigenfunctions.T @ (self.mass * u0))
        residual = u0 - self.eigenfunctions @ coefficients
        norm = math.sqrt(self.inner(u0, u0))
        if norm and math.sqrt(self.inner(residual, residual)) > TRUNCATION_WARNING * norm:
            log.warning('radial oracle: %d modes leave a projection residual above %.0e',
                        self.modes, TRUNCATION_WARNING)
        return coefficients

    def truncation_residual(self, u0: np.ndarray) -> float:
        residual = u0 - self.eigenfunctions @ self.project(u0)
        norm = math.sqrt(self.inner(u0, u0))
        return math.sqrt(self.inner(residual, residual)) / norm if norm else 0.0

    def evolve(self, coefficients: np.ndarray, t: float) -> np.ndarray:
        return self.eigenfunctions @ (coefficients * np.exp(-self.eigenvalues * t))

    def sample(self, profile: np.ndarray, r: np.ndarray) -> np.ndarray:
        """Fine profile interpolated at radii ``r``."""
        return np.interp(r, self.r, profile)


def radial_oracle_solve(
    u0_radial: Union[np.ndarray, Callable],
    times: Sequence[float],
    oracle: RadialSpectralOracle,
) -> np.ndarray:
    """
    Eigen-expansion solution at each of ``times`` on the oracle's fine grid.

    :param u0_radial: Profile on the fine grid, or a callable of r
    :return:          Array (len(times), cells)
    """
    u0 = u0_radial(oracle.r) if callable(u0_radial) else np.asarray(u0_radial, dtype=float)
    coefficients = oracle.project(u0)
    return np.stack([oracle.evolve(coefficients, t) for t in times])
