"""Norms of spectral fields.

L^p norms use rectangle-rule quadrature on the physical grid (exact for p = 2
on band-limited fields up to rounding, O(n^-2) otherwise); H^alpha uses
Parseval with weights (1+|m|^2)^(alpha/2); C^m norms take grid maxima of
spectral space derivatives and 4th-order time differences.  A "norm" of a
space-time field is the sup over interior time slices unless the per-slice
series is requested.
"""

from __future__ import annotations

import numpy as np

from .calculus import gradient, time_derivative
from .field import SCALAR, VECTOR, SpectralField, frobenius_magnitude, to_physical
from .grid import Grid


def _magnitude_series(f: SpectralField) -> np.ndarray:
    """Pointwise |f| samples per stored slice, shape (n_slices, n, n, n)."""
    samples = to_physical(f)
    if f.rank == SCALAR:
        return np.abs(samples)
    return frobenius_magnitude(samples, f.rank)


def lp_norm_series(f: SpectralField, p: float) -> np.ndarray:
    """One L^p norm per stored time slice."""
    if p < 1:
        raise ValueError("need p >= 1")
    mag = _magnitude_series(f)
    if np.isinf(p):
        return mag.max(axis=(1, 2, 3))
    dv = f.grid.cell_volume
    return (np.sum(mag ** p, axis=(1, 2, 3)) * dv) ** (1.0 / p)


def l2_norm_parseval(f: SpectralField) -> np.ndarray:
    """Per-slice L^2 norm from the coefficient sums (Parseval)."""
    mags2 = np.abs(f.coeffs) ** 2
    if f.rank == "sym_tensor":
        from .field import TENSOR_WEIGHTS
        mags2 = mags2 * TENSOR_WEIGHTS.reshape(1, 6, 1, 1, 1)
    while mags2.ndim > 4:
        mags2 = mags2.sum(axis=1)
    return np.sqrt(mags2.sum(axis=(1, 2, 3)) * f.grid.volume)


def sobolev_norm_series(f: SpectralField, alpha: float) -> np.ndarray:
    """Per-slice H^alpha norm via Fourier weights (1 + |m|^2)^(alpha/2)."""
    weights = (1.0 + f.grid.wavevector_norms() ** 2) ** alpha
    mags2 = np.abs(f.coeffs) ** 2
    if f.rank == "sym_tensor":
        from .field import TENSOR_WEIGHTS
        mags2 = mags2 * TENSOR_WEIGHTS.reshape(1, 6, 1, 1, 1)
    while mags2.ndim > 4:
        mags2 = mags2.sum(axis=1)
    return np.sqrt((mags2 * weights).sum(axis=(1, 2, 3)) * f.grid.volume)


def _gradient_magnitude_series(f: SpectralField) -> np.ndarray:
    """Pointwise Frobenius norm of the full spatial derivative."""
    if f.rank == SCALAR:
        return _magnitude_series(gradient(f))
    comps = f.coeffs.shape[1]
    acc = None
    for c in range(comps):
        g = gradient(SpectralField(f.grid, SCALAR, f.coeffs[:, c], f.is_real))
        gm = np.sum(np.abs(to_physical(g)) ** 2, axis=1)
        if f.rank == "sym_tensor":
            from .field import TENSOR_WEIGHTS
            gm = gm * TENSOR_WEIGHTS[c]
        acc = gm if acc is None else acc + gm
    return np.sqrt(acc)


def _interior_max(grid: Grid, series: np.ndarray) -> float:
    return float(series[grid.interior].max())


def norm(f: SpectralField, kind: str, *, p: float | None = None,
         alpha: float | None = None, m: int | None = None) -> float:
    """Space-time norm: sup over interior slices of the per-slice norm.

    kind: 'Lp' (needs p), 'L1', 'C' (needs m in {0, 1}), 'H' (needs alpha),
    'W1p' (needs p).
    """
    kind = kind.lower()
    if kind in ("lp", "l1"):
        pp = 1.0 if kind == "l1" else p
        if pp is None:
            raise ValueError("Lp norm needs p")
        return _interior_max(f.grid, lp_norm_series(f, pp))
    if kind == "h":
        if alpha is None:
            raise ValueError("H norm needs alpha")
        return _interior_max(f.grid, sobolev_norm_series(f, alpha))
    if kind == "w1p":
        if p is None:
            raise ValueError("W1p norm needs p")
        base = lp_norm_series(f, p)
        grad = _grad_lp_series(f, p)
        return _interior_max(f.grid, base + grad)
    if kind == "c":
        if m not in (0, 1):
            raise ValueError("C^m norm implemented for m in {0, 1}")
        sup = _interior_max(f.grid, _magnitude_series(f).max(axis=(1, 2, 3)))
        if m == 0:
            return sup
        grad_sup = _interior_max(f.grid, _gradient_magnitude_series(f).max(axis=(1, 2, 3)))
        dt_sup = _interior_max(f.grid, _magnitude_series(time_derivative(f)).max(axis=(1, 2, 3)))
        return sup + grad_sup + dt_sup
    raise ValueError(f"unsupported norm kind {kind!r}")


def _grad_lp_series(f: SpectralField, p: float) -> np.ndarray:
    mag = _gradient_magnitude_series(f)
    if np.isinf(p):
        return mag.max(axis=(1, 2, 3))
    dv = f.grid.cell_volume
    return (np.sum(mag ** p, axis=(1, 2, 3)) * dv) ** (1.0 / p)
