"""Discretization of the periodic box T^3 x [0,1].

Space is the 2pi-periodic cube sampled at n_space points per axis; fields are
held as Fourier coefficients in standard FFT layout.  Time is a uniform grid
on [0,1] with optional pad slices on both sides so that time mollification
and one-sided stencils never touch the physical interval.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GridError(ValueError):
    pass


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform grid: n_space points per spatial axis, n_time slices on [0,1].

    n_pad extra slices are carried on each side of [0,1]; slice i lives at
    t = (i - n_pad) * dt with dt = 1/(n_time - 1).
    """

    n_space: int
    n_time: int
    n_pad: int = 0
    workers: int = 1

    def __post_init__(self):
        if not _is_power_of_two(self.n_space) or self.n_space < 8:
            raise GridError(f"n_space must be a power of two >= 8, got {self.n_space}")
        if self.n_time < 9:
            raise GridError(f"n_time must be >= 9 (4th-order stencils + mollifier), got {self.n_time}")
        if self.n_pad < 0:
            raise GridError("n_pad must be >= 0")

    # -- time axis -----------------------------------------------------------

    @property
    def dt(self) -> float:
        return 1.0 / (self.n_time - 1)

    @property
    def n_slices(self) -> int:
        """Total stored slices including pads."""
        return self.n_time + 2 * self.n_pad

    @property
    def interior(self) -> slice:
        """Slice selecting the physical time interval [0,1]."""
        return slice(self.n_pad, self.n_pad + self.n_time)

    def times(self, include_pad: bool = False) -> np.ndarray:
        idx = np.arange(self.n_slices) if include_pad else np.arange(self.n_pad, self.n_pad + self.n_time)
        return (idx - self.n_pad) * self.dt

    # -- space axis -----------------------------------------------------------

    @property
    def nyquist(self) -> int:
        return self.n_space // 2

    def axis_points(self) -> np.ndarray:
        return np.arange(self.n_space) * (2.0 * np.pi / self.n_space)

    def meshgrid(self):
        x = self.axis_points()
        return np.meshgrid(x, x, x, indexing="ij")

    def wavenumbers(self) -> np.ndarray:
        """Integer frequencies along one axis in FFT layout."""
        return np.fft.fftfreq(self.n_space, d=1.0 / self.n_space).astype(np.int64)

    def wavevector_norms(self) -> np.ndarray:
        """|m| on the full (n,n,n) coefficient cube.  Cached per grid."""
        key = self.n_space
        norms = _NORM_CACHE.get(key)
        if norms is None:
            m = self.wavenumbers().astype(np.float64)
            norms = np.sqrt(m[:, None, None] ** 2 + m[None, :, None] ** 2 + m[None, None, :] ** 2)
            _NORM_CACHE[key] = norms
        return norms

    @property
    def cell_volume(self) -> float:
        return (2.0 * np.pi / self.n_space) ** 3

    @property
    def volume(self) -> float:
        return (2.0 * np.pi) ** 3

    # -- bookkeeping -----------------------------------------------------------

    def dealias_report(self, max_frequency: float) -> dict:
        """Documented dealiasing margin for a run that constructs modes up to
        max_frequency: quadratic grid products are alias-free iff
        2*max_frequency <= nyquist - 1."""
        return {
            "max_constructed_frequency": float(max_frequency),
            "nyquist": self.nyquist,
            "products_alias_free": bool(2 * max_frequency <= self.nyquist - 1),
            "margin": float(self.nyquist / (4.0 * max_frequency)) if max_frequency > 0 else float("inf"),
        }


_NORM_CACHE: dict = {}
