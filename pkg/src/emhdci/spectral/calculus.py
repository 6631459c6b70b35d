"""Exact mode-wise calculus: derivatives, projections, Biot-Savart and the
inverse divergence.

Every operator here is a Fourier multiplier (or a finite-difference stencil in
time), so algebraic identities such as div(curl v) = 0 hold to rounding error.
"""

from __future__ import annotations

import math

import numpy as np

from .field import (SCALAR, SYM_TENSOR, VECTOR, RankError, SpectralField,
                    TENSOR_INDEX, TENSOR_PAIRS, tensor_pack)
from .grid import Grid


def _mode_components(grid: Grid):
    m = grid.wavenumbers().astype(np.float64)
    return (m[:, None, None], m[None, :, None], m[None, None, :])


def gradient(f: SpectralField) -> SpectralField:
    """Scalar -> vector, (grad f)_i = i m_i f(m)."""
    if f.rank != SCALAR:
        raise RankError("gradient needs a scalar field")
    mx, my, mz = _mode_components(f.grid)
    coeffs = np.stack([1j * mx * f.coeffs, 1j * my * f.coeffs, 1j * mz * f.coeffs], axis=1)
    return f.like(coeffs, rank=VECTOR)


def curl(v: SpectralField) -> SpectralField:
    """Vector -> vector, mode-wise i m x v(m)."""
    if v.rank != VECTOR:
        raise RankError("curl needs a vector field")
    mx, my, mz = _mode_components(v.grid)
    vx, vy, vz = v.coeffs[:, 0], v.coeffs[:, 1], v.coeffs[:, 2]
    coeffs = np.stack([
        1j * (my * vz - mz * vy),
        1j * (mz * vx - mx * vz),
        1j * (mx * vy - my * vx),
    ], axis=1)
    return v.like(coeffs)


def divergence(f: SpectralField) -> SpectralField:
    """Vector -> scalar or sym_tensor -> vector (row-wise contraction with i m)."""
    mx, my, mz = _mode_components(f.grid)
    if f.rank == VECTOR:
        coeffs = 1j * (mx * f.coeffs[:, 0] + my * f.coeffs[:, 1] + mz * f.coeffs[:, 2])
        return f.like(coeffs, rank=SCALAR)
    if f.rank == SYM_TENSOR:
        m = (mx, my, mz)
        rows = []
        for i in range(3):
            acc = 0.0
            for j in range(3):
                acc = acc + m[j] * f.coeffs[:, TENSOR_INDEX[(i, j)]]
            rows.append(1j * acc)
        return f.like(np.stack(rows, axis=1), rank=VECTOR)
    raise RankError("divergence needs a vector or sym_tensor field")


def time_derivative(f: SpectralField) -> SpectralField:
    """4th-order finite differences on the uniform time grid.

    Centered five-point stencil in the interior of the stored axis, one-sided
    4th-order stencils at the two ends.
    """
    n = f.grid.n_slices
    if n < 5:
        raise ValueError("time_derivative needs at least 5 stored slices")
    c = f.coeffs
    out = np.empty_like(c)
    h = f.grid.dt
    out[2:-2] = (c[:-4] - 8 * c[1:-3] + 8 * c[3:-1] - c[4:]) / (12 * h)
    for i in (0, 1):
        out[i] = (-25 * c[i] + 48 * c[i + 1] - 36 * c[i + 2] + 16 * c[i + 3] - 3 * c[i + 4]) / (12 * h)
    for i in (n - 2, n - 1):
        out[i] = (25 * c[i] - 48 * c[i - 1] + 36 * c[i - 2] - 16 * c[i - 3] + 3 * c[i - 4]) / (12 * h)
    return f.like(out)


def project_band(f: SpectralField, lo: float = 0.0, hi: float = math.inf,
                 mode: str = "leq") -> SpectralField:
    """Sharp frequency projection on |m|.

    mode='leq' keeps |m| <= hi, mode='geq' keeps |m| >= lo, mode='neq0'
    removes only the mean.  Cutoffs are inclusive, matching the projector
    conventions P_{<=N} and P_{>=N}.
    """
    if lo < 0 or hi < lo:
        raise ValueError("need 0 <= lo <= hi")
    norms = f.grid.wavevector_norms()
    tol = 1e-12
    if mode == "leq":
        keep = norms <= hi + tol
    elif mode == "geq":
        keep = norms >= lo - tol
    elif mode == "neq0":
        keep = norms > tol
    else:
        raise ValueError(f"unknown projection mode {mode!r}")
    return f.like(f.coeffs * keep)


def mode_support(f: SpectralField, rel_tol: float = 0.0) -> np.ndarray:
    """|m| values of all modes carrying any coefficient mass above rel_tol
    (relative to the largest coefficient)."""
    mags = np.abs(f.coeffs)
    while mags.ndim > 3:
        mags = mags.max(axis=0)
    top = mags.max()
    if top == 0.0:
        return np.empty(0)
    mask = mags > rel_tol * top
    return f.grid.wavevector_norms()[mask]


def biot_savart(b: SpectralField, tol: float = 1e-10) -> SpectralField:
    """Magnetic potential a = curl (-laplace)^{-1} b with div a = 0, mean a = 0.

    Requires b mean-free and divergence-free (checked against tol relative to
    the field size).
    """
    if b.rank != VECTOR:
        raise RankError("biot_savart needs a vector field")
    scale = max(float(np.max(np.abs(b.coeffs))), 1e-300)
    mean = float(np.max(np.abs(b.mean())))
    if mean > tol * scale:
        raise ValueError(f"biot_savart: field has nonzero mean ({mean:.3e})")
    div_mag = float(np.max(np.abs(divergence(b).coeffs)))
    if div_mag > tol * scale * b.grid.n_space:
        raise ValueError(f"biot_savart: field is not solenoidal (|div| = {div_mag:.3e})")
    norms = b.grid.wavevector_norms()
    inv_m2 = np.zeros_like(norms)
    nonzero = norms > 0
    inv_m2[nonzero] = 1.0 / norms[nonzero] ** 2
    a = curl(b)
    a.coeffs *= inv_m2
    return a


def leray_split(f: SpectralField) -> tuple[SpectralField, SpectralField]:
    """Decompose F = solenoidal + grad(potential) + mean(F).

    Returns (solenoidal, potential); the solenoidal part is mean-free and
    divergence-free, the potential is a mean-free scalar.
    """
    if f.rank != VECTOR:
        raise RankError("leray_split needs a vector field")
    mx, my, mz = _mode_components(f.grid)
    norms2 = f.grid.wavevector_norms() ** 2
    inv_m2 = np.zeros_like(norms2)
    nonzero = norms2 > 0
    inv_m2[nonzero] = 1.0 / norms2[nonzero]
    m_dot_f = mx * f.coeffs[:, 0] + my * f.coeffs[:, 1] + mz * f.coeffs[:, 2]
    pot = -1j * m_dot_f * inv_m2
    sol = f.coeffs - np.stack([1j * mx * pot, 1j * my * pot, 1j * mz * pot], axis=1)
    sol[..., 0, 0, 0] = 0.0
    return f.like(sol), f.like(pot, rank=SCALAR)


def inverse_divergence(v: SpectralField) -> SpectralField:
    """Symmetric traceless T with div T = v - mean(v), mode-exact.

    For each mode m != 0 with unit direction n = m/|m| and a = -i v(m)/|m|,
    T(m) = n (x) a + a (x) n - (a.n)/2 (n (x) n + Id)  is symmetric, traceless
    and satisfies T(m) m = -i v(m).
    """
    if v.rank != VECTOR:
        raise RankError("inverse_divergence needs a vector field")
    grid = v.grid
    mx, my, mz = _mode_components(grid)
    norms = grid.wavevector_norms()
    inv = np.zeros_like(norms)
    nonzero = norms > 0
    inv[nonzero] = 1.0 / norms[nonzero]
    nx, ny, nz = mx * inv, my * inv, mz * inv
    n_vec = (nx, ny, nz)
    a_vec = tuple(-1j * v.coeffs[:, i] * inv for i in range(3))
    a_dot_n = a_vec[0] * nx + a_vec[1] * ny + a_vec[2] * nz
    comps = []
    for (i, j) in TENSOR_PAIRS:
        t = n_vec[i] * a_vec[j] + a_vec[i] * n_vec[j] - 0.5 * a_dot_n * n_vec[i] * n_vec[j]
        if i == j:
            t = t - 0.5 * a_dot_n
        comps.append(t)
    coeffs = np.stack(comps, axis=1)
    coeffs[..., 0, 0, 0] = 0.0
    return v.like(coeffs, rank=SYM_TENSOR)
