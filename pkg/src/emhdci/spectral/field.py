"""Rank-tagged spectral fields on T^3 x [0,1].

A SpectralField stores complex Fourier coefficients per time slice, with the
convention  f(x) = sum_m  coeffs[m] e^{i m.x},  so a unit constant field has
a single coefficient 1 at m = 0.  Ranks: scalar (no component axis), vector
(3 components) and sym_tensor (6 independent components in the order
xx, xy, xz, yy, yz, zz).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .grid import Grid

SCALAR = "scalar"
VECTOR = "vector"
SYM_TENSOR = "sym_tensor"

_RANK_COMPONENTS = {SCALAR: (), VECTOR: (3,), SYM_TENSOR: (6,)}

# (row, col) index pairs of the stored upper-triangular tensor components.
TENSOR_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
# Position of component (i, j) in the 6-vector.
TENSOR_INDEX = {(0, 0): 0, (0, 1): 1, (1, 0): 1, (0, 2): 2, (2, 0): 2,
                (1, 1): 3, (1, 2): 4, (2, 1): 4, (2, 2): 5}
# Multiplicity of each stored component inside the full 3x3 matrix.
TENSOR_WEIGHTS = np.array([1.0, 2.0, 2.0, 1.0, 2.0, 1.0])
_DIAG_COMPONENTS = (0, 3, 5)


class RankError(ValueError):
    pass


class ShapeError(ValueError):
    pass


def component_shape(rank: str) -> tuple:
    try:
        return _RANK_COMPONENTS[rank]
    except KeyError:
        raise RankError(f"unknown rank {rank!r}") from None


@dataclass
class SpectralField:
    grid: Grid
    rank: str
    coeffs: np.ndarray  # (n_slices, *components, n, n, n) complex
    is_real: bool = True

    def __post_init__(self):
        expected = (self.grid.n_slices,) + component_shape(self.rank) + (self.grid.n_space,) * 3
        if self.coeffs.shape != expected:
            raise ShapeError(f"coefficient array has shape {self.coeffs.shape}, expected {expected}")
        if self.coeffs.dtype != np.complex128:
            self.coeffs = self.coeffs.astype(np.complex128)

    # -- constructors -----------------------------------------------------------

    @classmethod
    def zeros(cls, grid: Grid, rank: str, is_real: bool = True) -> "SpectralField":
        shape = (grid.n_slices,) + component_shape(rank) + (grid.n_space,) * 3
        return cls(grid, rank, np.zeros(shape, dtype=np.complex128), is_real)

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.rank, self.coeffs.copy(), self.is_real)

    def like(self, coeffs: np.ndarray, rank: str | None = None, is_real: bool | None = None) -> "SpectralField":
        return SpectralField(self.grid, rank or self.rank,
                             coeffs, self.is_real if is_real is None else is_real)

    # -- views ------------------------------------------------------------------

    @property
    def n_components(self) -> int:
        shape = component_shape(self.rank)
        return shape[0] if shape else 1

    def interior(self) -> np.ndarray:
        return self.coeffs[self.grid.interior]

    def mean(self) -> np.ndarray:
        """Spatial mean per slice (and component): the m = 0 coefficient."""
        return self.coeffs[..., 0, 0, 0]

    def __add__(self, other: "SpectralField") -> "SpectralField":
        if other.rank != self.rank or other.grid != self.grid:
            raise ShapeError("field mismatch in addition")
        return SpectralField(self.grid, self.rank, self.coeffs + other.coeffs,
                             self.is_real and other.is_real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        if other.rank != self.rank or other.grid != self.grid:
            raise ShapeError("field mismatch in subtraction")
        return SpectralField(self.grid, self.rank, self.coeffs - other.coeffs,
                             self.is_real and other.is_real)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.grid, self.rank, self.coeffs * scalar,
                             self.is_real and not isinstance(scalar, complex))

    __rmul__ = __mul__


# -- transforms -------------------------------------------------------------------

_SPATIAL_AXES = (-3, -2, -1)


def to_physical(f: SpectralField) -> np.ndarray:
    """Samples on the physical grid, shape (n_slices, *components, n, n, n).

    Real fields are returned as float arrays after checking that the imaginary
    residue is at machine level.
    """
    n3 = f.grid.n_space ** 3
    samples = scipy.fft.ifftn(f.coeffs, axes=_SPATIAL_AXES, workers=f.grid.workers) * n3
    if f.is_real:
        scale = np.max(np.abs(samples)) or 1.0
        imag = np.max(np.abs(samples.imag))
        if imag > 1e-10 * scale:
            raise ValueError(f"field flagged real has imaginary residue {imag:.3e}")
        return np.ascontiguousarray(samples.real)
    return samples


def strip_nyquist(coeffs: np.ndarray, n: int) -> np.ndarray:
    """Zero the three self-conjugate Nyquist planes |m_i| = n/2 in place.

    Fields live on |m_i| < n/2; the Nyquist index has no conjugate partner, so
    keeping it would break Hermitian symmetry under odd-derivative multipliers.
    """
    half = n // 2
    coeffs[..., half, :, :] = 0.0
    coeffs[..., :, half, :] = 0.0
    coeffs[..., :, :, half] = 0.0
    return coeffs


def to_spectral(samples: np.ndarray, grid: Grid, rank: str, is_real: bool | None = None) -> SpectralField:
    """Forward transform; the Nyquist planes are projected out to keep the
    |m_i| < n/2 field invariant (round-trip is exact for such fields)."""
    expected = (grid.n_slices,) + component_shape(rank) + (grid.n_space,) * 3
    if samples.shape != expected:
        raise ShapeError(f"sample array has shape {samples.shape}, expected {expected}")
    if is_real is None:
        is_real = not np.iscomplexobj(samples)
    coeffs = scipy.fft.fftn(samples, axes=_SPATIAL_AXES, workers=grid.workers) / grid.n_space ** 3
    strip_nyquist(coeffs, grid.n_space)
    return SpectralField(grid, rank, coeffs, is_real)


# -- tensor helpers ---------------------------------------------------------------

def tensor_full(values6: np.ndarray) -> np.ndarray:
    """Expand (..., 6) component arrays to full (..., 3, 3) symmetric matrices."""
    out = np.empty(values6.shape[:-1] + (3, 3), dtype=values6.dtype)
    for pos, (i, j) in enumerate(TENSOR_PAIRS):
        out[..., i, j] = values6[..., pos]
        out[..., j, i] = values6[..., pos]
    return out


def tensor_pack(matrix: np.ndarray) -> np.ndarray:
    """Pack (..., 3, 3) symmetric matrices into (..., 6) component arrays."""
    comps = [matrix[..., i, j] for (i, j) in TENSOR_PAIRS]
    return np.stack(comps, axis=-1)


def tensor_trace(f: SpectralField) -> np.ndarray:
    if f.rank != SYM_TENSOR:
        raise RankError("trace needs a sym_tensor field")
    return sum(f.coeffs[:, c] for c in _DIAG_COMPONENTS)


def remove_trace(f: SpectralField) -> SpectralField:
    """Project onto traceless symmetric tensors, mode by mode."""
    if f.rank != SYM_TENSOR:
        raise RankError("remove_trace needs a sym_tensor field")
    coeffs = f.coeffs.copy()
    third = tensor_trace(f) / 3.0
    for c in _DIAG_COMPONENTS:
        coeffs[:, c] -= third
    return f.like(coeffs)


def frobenius_magnitude(samples: np.ndarray, rank: str) -> np.ndarray:
    """Pointwise |f|: absolute value, euclidean norm or Frobenius norm."""
    if rank == SCALAR:
        return np.abs(samples)
    if rank == VECTOR:
        return np.sqrt(np.sum(np.abs(samples) ** 2, axis=1))
    weights = TENSOR_WEIGHTS.reshape(1, 6, 1, 1, 1)
    return np.sqrt(np.sum(weights * np.abs(samples) ** 2, axis=1))


# -- constructions ----------------------------------------------------------------

def place_mode(f: SpectralField, m: tuple, value, component: int | None = None) -> None:
    """Add value to the coefficient at integer wavevector m (in-place helper
    for building band-limited fields)."""
    n = f.grid.n_space
    if any(abs(mi) >= n // 2 for mi in m):
        raise ShapeError(f"mode {m} outside |m_i| < n/2 for n = {n}")
    idx = tuple(mi % n for mi in m)
    if component is None:
        f.coeffs[(slice(None),) + idx] += value
    else:
        f.coeffs[(slice(None), component) + idx] += value


def hermitian_symmetrize(f: SpectralField) -> SpectralField:
    """Return the nearest field with exact Hermitian symmetry c(-m) = conj(c(m))."""
    c = f.coeffs
    reflected = np.flip(np.roll(c, -1, axis=_SPATIAL_AXES), axis=_SPATIAL_AXES)
    return f.like(0.5 * (c + np.conj(reflected)), is_real=True)


def hermitian_defect(f: SpectralField) -> float:
    c = f.coeffs
    reflected = np.flip(np.roll(c, -1, axis=_SPATIAL_AXES), axis=_SPATIAL_AXES)
    return float(np.max(np.abs(c - np.conj(reflected))))
