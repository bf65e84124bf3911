import math

import numpy as np

from vesselkin.utils import cached_property

__all__ = ['AnnulusGrid', 'build_annulus_grid']


class AnnulusGrid:
    """
    Polar finite-volume grid of the annulus r0 < r < r1. Cell (i, j) is centred at
    (r_i, θ_j) = (r0 + (i + ½)Δr, (j + ½)Δθ) and has area r_i Δr Δθ, so the areas sum
    to π(r1² − r0²) exactly.

    Radial faces are measured by their chord 2 r sin(Δθ/2) rather than the arc. With
    normals taken at the cell centre angle, the chords make the discrete divergence of
    every constant velocity vanish cell by cell, which is what keeps constant states
    fixed under transport.
    """

    def __init__(self, r0: float, r1: float, nr: int, nth: int) -> None:
        self.r0 = float(r0)
        self.r1 = float(r1)
        self.nr = int(nr)
        self.nth = int(nth)
        self.dr = (self.r1 - self.r0) / self.nr
        self.dth = 2 * math.pi / self.nth

    def __repr__(self) -> str:
        return f'<AnnulusGrid r=[{self.r0}, {self.r1}] {self.nr}x{self.nth}>'

    @property
    def shape(self):
        return (self.nr, self.nth)

    @cached_property
    def r(self) -> np.ndarray:
        return self.r0 + (np.arange(self.nr) + 0.5) * self.dr

    @cached_property
    def theta(self) -> np.ndarray:
        return (np.arange(self.nth) + 0.5) * self.dth

    @cached_property
    def r_faces(self) -> np.ndarray:
        return self.r0 + np.arange(self.nr + 1) * self.dr

    @cached_property
    def theta_faces(self) -> np.ndarray:
        return np.arange(self.nth + 1) * self.dth

    @cached_property
    def areas(self) -> np.ndarray:
        return np.outer(self.r * self.dr * self.dth, np.ones(self.nth))

    @property
    def total_area(self) -> float:
        return math.pi * (self.r1 ** 2 - self.r0 ** 2)

    @cached_property
    def radial_face_lengths(self) -> np.ndarray:
        return 2 * self.r_faces * math.sin(self.dth / 2)

    @cached_property
    def e_r(self) -> np.ndarray:
        """Radial unit vectors at the cell-centre angles, shape (nth, 2)."""
        return np.stack([np.cos(self.theta), np.sin(self.theta)], axis=-1)

    @cached_property
    def e_theta(self) -> np.ndarray:
        return np.stack([-np.sin(self.theta), np.cos(self.theta)], axis=-1)

    @cached_property
    def e_theta_faces(self) -> np.ndarray:
        """Angular unit vectors on the faces θ_{j+½}, shape (nth, 2)."""
        faces = self.theta_faces[1:]
        return np.stack([-np.sin(faces), np.cos(faces)], axis=-1)

    @cached_property
    def inner_normals(self) -> np.ndarray:
        return -self.e_r

    @cached_property
    def outer_normals(self) -> np.ndarray:
        return self.e_r.copy()

    @cached_property
    def centers(self):
        """Cartesian cell centres as two (nr, nth) arrays."""
        r, th = np.meshgrid(self.r, self.theta, indexing='ij')
        return r * np.cos(th), r * np.sin(th)


def build_annulus_grid(r0: float, r1: float, nr: int, nth: int) -> AnnulusGrid:
    """
    :raises ValueError: If the annulus is degenerate or the counts are too small
    """
    if not 0 < r0 < r1:
        raise ValueError(f'annulus needs 0 < r0 < r1, got r0={r0}, r1={r1}')
    if int(nr) != nr or nr < 2:
        raise ValueError(f'Nr must be an integer ≥ 2, got {nr}')
    if int(nth) != nth or nth < 4:
        raise ValueError(f'Nth must be an integer ≥ 4, got {nth}')
    return AnnulusGrid(r0, r1, nr, nth)
