"""Iteration states (A_q, B_q, R_q, p_q) and their mollification.

The initial triple is the closed-form shear Beltrami flow: A_0 is a single
frequency-lambda0 mode growing linearly in time, B_0 = lam0 A_0, and R_0 is
the explicit one-mode symmetric traceless tensor whose divergence equals
d/dt A_0.  All fields are evaluated on the padded time axis so later
mollification never sees a boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..spectral import (SCALAR, SYM_TENSOR, VECTOR, Grid, ShapeError, SpectralField,
                        curl, divergence, gradient, hermitian_defect, l2_norm_parseval,
                        mollify, tensor_trace, time_derivative, to_physical, to_spectral)
from .schedule import Schedule


class StateError(ValueError):
    pass


@dataclass
class IterationState:
    q: int
    A: SpectralField
    B: SpectralField
    R: SpectralField
    p: SpectralField
    schedule: Schedule

    @property
    def grid(self) -> Grid:
        return self.A.grid

    def validate(self, tol: float = 1e-12) -> dict:
        """Structural invariants; returns the measured defects keyed by name."""
        scale = max(float(np.max(np.abs(self.B.coeffs))), 1e-300)
        curl_defect = float(np.max(np.abs(curl(self.A).coeffs - self.B.coeffs)))
        div_a = float(np.max(np.abs(divergence(self.A).coeffs)))
        div_b = float(np.max(np.abs(divergence(self.B).coeffs)))
        trace = float(np.max(np.abs(tensor_trace(self.R))))
        r_scale = max(float(np.max(np.abs(self.R.coeffs))), 1e-300)
        herm = max(hermitian_defect(self.A), hermitian_defect(self.B),
                   hermitian_defect(self.R), hermitian_defect(self.p))
        lam_scale = self.grid.nyquist
        return {
            "curl_A_equals_B": curl_defect / scale,
            "div_A": div_a / (scale * lam_scale),
            "div_B": div_b / (scale * lam_scale),
            "R_traceless": trace / r_scale,
            "hermitian": herm / max(scale, r_scale),
        }

    def check(self, tol: float = 1e-12) -> None:
        defects = self.validate(tol)
        bad = {k: v for k, v in defects.items() if v > tol}
        if bad:
            raise StateError(f"state invariants violated: {bad}")


def initial_state(lam0: int, grid: Grid, schedule: Schedule) -> IterationState:
    """Closed-form level-0 triple.

    A_0 = t/(lam0 (2pi)^3) (0, cos(lam0 x1), -sin(lam0 x1));  B_0 = lam0 A_0;
    R_0 = 1/(lam0^2 (2pi)^3) [[0, sin, cos], [sin, 0, 0], [cos, 0, 0]](lam0 x1);
    p_0 = |B_0|^2 / 2, a spatial constant.
    """
    if int(lam0) != lam0 or lam0 < 1:
        raise StateError("lam0 must be a positive integer")
    if lam0 > grid.nyquist / 4:
        raise StateError(f"lam0 = {lam0} above Nyquist/4 = {grid.nyquist // 4} "
                         f"for n_space = {grid.n_space}")
    n = grid.n_space
    t = grid.times(include_pad=True)
    vol = (2.0 * np.pi) ** 3

    plus = (lam0 % n, 0, 0)
    minus = (-lam0 % n, 0, 0)

    A = SpectralField.zeros(grid, VECTOR)
    # cos mode in component 1, -sin mode in component 2
    A.coeffs[(slice(None), 1) + plus] = 0.5
    A.coeffs[(slice(None), 1) + minus] = 0.5
    A.coeffs[(slice(None), 2) + plus] = 0.5j
    A.coeffs[(slice(None), 2) + minus] = -0.5j
    A.coeffs *= (t / (lam0 * vol))[:, None, None, None, None]

    B = A.like(A.coeffs * lam0)

    R = SpectralField.zeros(grid, SYM_TENSOR)
    # components in the order xx, xy, xz, yy, yz, zz: xy = sin, xz = cos
    R.coeffs[(slice(None), 1) + plus] = -0.5j
    R.coeffs[(slice(None), 1) + minus] = 0.5j
    R.coeffs[(slice(None), 2) + plus] = 0.5
    R.coeffs[(slice(None), 2) + minus] = 0.5
    R.coeffs /= lam0 ** 2 * vol

    p = SpectralField.zeros(grid, SCALAR)
    p.coeffs[:, 0, 0, 0] = t ** 2 / (2.0 * vol ** 2)

    return IterationState(q=0, A=A, B=B, R=R, p=p, schedule=schedule)


@dataclass
class MollifiedTriple:
    ell: float
    A_l: SpectralField
    B_l: SpectralField
    R_l: SpectralField
    p_l: SpectralField
    R_comm: SpectralField


def sym_outer_traceless(x: SpectralField, y: SpectralField | None = None) -> SpectralField:
    """Trace-free symmetric product  x (o) y  formed on the physical grid,
    slice by slice; with y omitted, the self-product."""
    grid = x.grid
    xs = to_physical(x)
    ys = xs if y is None else to_physical(y)
    out = SpectralField.zeros(grid, SYM_TENSOR)
    from ..spectral.field import TENSOR_PAIRS, strip_nyquist
    import scipy.fft
    n3 = grid.n_space ** 3
    for s in range(grid.n_slices):
        sym = np.empty((6,) + xs.shape[-3:], dtype=np.float64)
        for pos, (i, j) in enumerate(TENSOR_PAIRS):
            sym[pos] = 0.5 * (xs[s, i] * ys[s, j] + xs[s, j] * ys[s, i])
        third = (sym[0] + sym[3] + sym[5]) / 3.0
        for pos in (0, 3, 5):
            sym[pos] -= third
        out.coeffs[s] = strip_nyquist(
            scipy.fft.fftn(sym, axes=(-3, -2, -1), workers=grid.workers) / n3, grid.n_space)
    return out


def mollify_state(state: IterationState, ell: float) -> MollifiedTriple:
    """Space-time mollification of the triple plus the commutator stress.

    R_comm = (B_l (o) B_l) - mollify(B_q (o) B_q)  (trace-free parts), and the
    pressure adjustment keeps the mollified system exact:
    p_l = mollify(p_q) + (|B_l|^2 - mollify(|B_q|^2)) / 3.

    Intermediate product tensors are freed eagerly; at 64^3 they dominate the
    transient footprint.
    """
    grid = state.grid
    taps_half = max(0, int(np.ceil(ell / grid.dt)) - 1)
    if grid.n_pad < taps_half + 2:
        raise StateError(f"time-extension budget exhausted: mollification at ell = {ell} "
                         f"needs n_pad >= {taps_half + 2}, grid has {grid.n_pad}")
    A_l = mollify(state.A, ell)
    B_l = mollify(state.B, ell)
    R_l = mollify(state.R, ell)

    bb = sym_outer_traceless(state.B)
    bb_l = mollify(bb, ell)
    del bb
    R_comm = sym_outer_traceless(B_l)
    R_comm.coeffs -= bb_l.coeffs
    del bb_l

    # |B|^2 per slice as scalar fields (spatial spectra of the grid product)
    b_phys = to_physical(state.B)
    b2 = to_spectral(np.sum(b_phys ** 2, axis=1), grid, SCALAR)
    del b_phys
    bl_phys = to_physical(B_l)
    bl2 = to_spectral(np.sum(bl_phys ** 2, axis=1), grid, SCALAR)
    del bl_phys
    p_l = mollify(state.p, ell) + (1.0 / 3.0) * (bl2 - mollify(b2, ell))

    return MollifiedTriple(ell=ell, A_l=A_l, B_l=B_l, R_l=R_l, p_l=p_l, R_comm=R_comm)


def system_residual_field(A: SpectralField, B: SpectralField, R: SpectralField,
                          p: SpectralField) -> SpectralField:
    """d/dt A + div(B (x) B) - grad p - div R, assembled with the same grid
    products and time stencil the construction uses."""
    bb = sym_outer_full(B)
    F = time_derivative(A) + divergence(bb) - gradient(p) - divergence(R)
    return F


def sym_outer_full(b: SpectralField) -> SpectralField:
    """Symmetric product B (x) B with trace, on the physical grid."""
    grid = b.grid
    bs = to_physical(b)
    out = SpectralField.zeros(grid, SYM_TENSOR)
    from ..spectral.field import TENSOR_PAIRS, strip_nyquist
    import scipy.fft
    n3 = grid.n_space ** 3
    for s in range(grid.n_slices):
        sym = np.empty((6,) + bs.shape[-3:], dtype=np.float64)
        for pos, (i, j) in enumerate(TENSOR_PAIRS):
            sym[pos] = bs[s, i] * bs[s, j]
        out.coeffs[s] = strip_nyquist(
            scipy.fft.fftn(sym, axes=(-3, -2, -1), workers=grid.workers) / n3, grid.n_space)
    return out


def mollified_residual(state: IterationState, moll: MollifiedTriple) -> float:
    """Relative L2 residual of the mollified system with stress R_l + R_comm."""
    grid = moll.A_l.grid
    F = system_residual_field(moll.A_l, moll.B_l,
                              moll.R_l + moll.R_comm, moll.p_l)
    num = l2_norm_parseval(F)[grid.interior].max()
    den = l2_norm_parseval(time_derivative(moll.A_l))[grid.interior].max()
    return float(num / max(den, 1e-300))
