"""Uniform periodic grids over flattened configuration space.

A grid covers an axis-aligned box with the same number of points and the
same extent along every axis.  The right endpoint is excluded, so spectral
derivatives computed with the FFT are exact for band-limited fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``[origin, origin + extent)`` per axis.

    Parameters
    ----------
    axis_count : int
        Number of configuration-space axes (1 or 2 at desk scale).
    points : int
        Points per axis.  Must be even and at least 8.
    extent : float
        Length of the box along each axis.
    origin : float
        Left edge of the box along each axis.
    """

    axis_count: int
    points: int
    extent: float
    origin: float = 0.0

    def __post_init__(self):
        if self.axis_count < 1:
            raise ValueError("axis_count must be at least 1")
        if self.points < 8 or self.points % 2 != 0:
            raise ValueError("points per axis must be even and >= 8")
        if not (self.extent > 0):
            raise ValueError("extent must be positive")

    @property
    def spacing(self) -> float:
        return self.extent / self.points

    @property
    def shape(self) -> tuple:
        return (self.points,) * self.axis_count

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.axis_count

    def axis(self) -> np.ndarray:
        """Coordinates along one axis (identical for all axes)."""
        return self.origin + self.spacing * np.arange(self.points)

    def coordinates(self) -> list:
        """Coordinate arrays broadcast to the full grid shape, one per axis."""
        x = self.axis()
        return list(np.meshgrid(*([x] * self.axis_count), indexing="ij"))

    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers along one axis, FFT ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)

    def derivative_wavenumbers(self) -> np.ndarray:
        """Wavenumbers for odd-order spectral derivatives.

        Identical to :meth:`wavenumbers` except that the Nyquist bin is
        zeroed: on an even grid that mode is sampled with an arbitrary
        sign, and carrying it through ``(ik)^odd`` would hand a real
        field a spurious imaginary derivative spread over the whole box.
        Even powers keep the full spectrum, where the mode is
        unambiguous.
        """
        k = self.wavenumbers()
        k[self.points // 2] = 0.0
        return k

    def wrap(self, positions: np.ndarray) -> np.ndarray:
        """Map positions back into the box, elementwise."""
        return self.origin + np.mod(positions - self.origin, self.extent)

    def to_index_units(self, positions: np.ndarray) -> np.ndarray:
        """Convert coordinates to fractional grid indices (for interpolation)."""
        return (positions - self.origin) / self.spacing
