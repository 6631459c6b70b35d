"""Friedrichs mollification in space and time.

The mollifier is a product of 1D bumps psi(z) = C exp(-1/(1-z^2)) on |z| < 1,
mass one, scaled to width ell.  Spatial convolution is a Fourier multiplier
psi_hat(ell*m_1) psi_hat(ell*m_2) psi_hat(ell*m_3); the transform psi_hat is
computed once by adaptive quadrature and interpolated.  Time convolution is a
discrete kernel on the stored slices (pads included), with weights normalized
to unit mass so constants are preserved exactly.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from .field import SpectralField

# mass normalization: integral of exp(-1/(1-z^2)) over (-1, 1)
_BUMP_RAW_MASS = quad(lambda z: np.exp(-1.0 / (1.0 - z * z)), -1.0, 1.0,
                      epsabs=1e-13, epsrel=1e-12)[0]


def bump(z):
    """Unit-mass bump on (-1, 1)."""
    z = np.asarray(z, dtype=np.float64)
    out = np.zeros_like(z)
    inside = np.abs(z) < 1.0
    zi = z[inside]
    out[inside] = np.exp(-1.0 / (1.0 - zi * zi)) / _BUMP_RAW_MASS
    return out


def bump_transform(xi: float) -> float:
    """psi_hat(xi) = int psi(z) cos(xi z) dz  (real, psi even, <= 1)."""
    val, _ = quad(lambda z: bump(z) * np.cos(xi * z), -1.0, 1.0,
                  epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


_TRANSFORM_CACHE: dict[float, float] = {}


def _psi_hat(xi: float) -> float:
    key = round(abs(xi), 12)
    val = _TRANSFORM_CACHE.get(key)
    if val is None:
        val = bump_transform(key)
        _TRANSFORM_CACHE[key] = val
    return val


def spatial_multiplier(grid, ell: float) -> np.ndarray:
    m = grid.wavenumbers().astype(np.float64)
    axis = np.array([_psi_hat(ell * mi) for mi in m])
    return axis[:, None, None] * axis[None, :, None] * axis[None, None, :]


def time_kernel(grid, ell: float) -> np.ndarray:
    """Discrete weights of the width-ell time mollifier on the slice grid.

    Taps at offsets j with |j| dt < ell; normalized to sum 1.  For ell < dt
    this degenerates to the identity.
    """
    dt = grid.dt
    half = int(np.ceil(ell / dt)) - 1 if ell > dt else 0
    offsets = np.arange(-half, half + 1)
    w = bump(offsets * dt / ell)
    if w.sum() == 0.0:
        return np.array([1.0])
    return w / w.sum()


def mollify(f: SpectralField, ell: float) -> SpectralField:
    """Space-time mollification at scale ell.

    Spatial part is exact (multiplier); time part is a normalized discrete
    convolution over the stored slices, truncated and renormalized where the
    kernel would run off the padded axis.  Commutes with curl, divergence and
    frequency projections by construction.
    """
    if ell <= 0.0:
        raise ValueError("mollification width must be positive")
    if ell > 0.5:
        raise ValueError(f"mollification width {ell} exceeds half the time domain")
    grid = f.grid
    mult = spatial_multiplier(grid, ell)
    coeffs = f.coeffs * mult

    w = time_kernel(grid, ell)
    half = (len(w) - 1) // 2
    if half > 0:
        n = grid.n_slices
        if 2 * half + 1 > n:
            raise ValueError("time mollifier wider than the stored time axis")
        out = np.zeros_like(coeffs)
        for i in range(n):
            j0, j1 = max(0, i - half), min(n - 1, i + half)
            taps = w[(j0 - i + half):(j1 - i + half + 1)]
            taps = taps / taps.sum()
            out[i] = np.tensordot(taps, coeffs[j0:j1 + 1], axes=(0, 0))
        coeffs = out
    return f.like(coeffs)
