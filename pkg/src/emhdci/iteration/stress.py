"""One convex-integration step: cutoff, amplitudes, perturbations, new stress.

The wave sum T = sum_k a_k eta_k W_k is accumulated on the physical grid from
the per-pair amplitude fields and the (time-independent) intermittent waves.
The potential perturbation is defined through the exact discrete identity
v = lam^{-2} curl(T), split as v = v_p + v_c with v_p = lam^{-1} T, so that
div v = 0 and w = curl v hold mode-exactly; v_c then matches its analytic
formula up to the grid's product aliasing, which is reported in the ledger
rather than assumed away.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from ..geometry import DirectionFamily, gamma_weights_grid
from ..intermittency import IntermittencyParams, eta_field, wave_mode_table
from ..spectral import (SCALAR, SYM_TENSOR, VECTOR, Grid, SpectralField,
                        curl, divergence, frobenius_magnitude,
                        inverse_divergence, l2_norm_parseval, leray_split,
                        lp_norm_series, sobolev_norm_series, time_derivative,
                        to_physical, to_spectral)
from ..spectral.field import TENSOR_PAIRS
from .schedule import Schedule, StepParams
from .state import (IterationState, MollifiedTriple, mollified_residual,
                    mollify_state, sym_outer_full)


# -- cutoff and amplitudes ---------------------------------------------------------


def chi(z):
    """Cutoff of the size function: 1 on [0,1], z on [2, inf), the monotone
    bridge max(1, z) in between (1 <= chi <= 2 and 0 <= chi' <= 1 there; a
    bridge that is smooth at z = 1 and still reaches chi(2) = 2 with slope
    <= 1 does not exist, so the corner stays)."""
    return np.maximum(1.0, np.asarray(z, dtype=np.float64))


def rho_samples(r_l_samples: np.ndarray, delta_next: float, c: float, eps: float) -> np.ndarray:
    """rho = 2 delta c / eps * chi(|R_l| / (c delta)) pointwise; guarantees
    |R_l| / rho <= eps (the realized ratio never exceeds eps/2)."""
    mag = frobenius_magnitude(r_l_samples, SYM_TENSOR)
    return (2.0 * delta_next * c / eps) * chi(mag / (c * delta_next))


def rho_field(R_l: SpectralField, delta_next: float, c: float, eps: float) -> SpectralField:
    samples = rho_samples(to_physical(R_l), delta_next, c, eps)
    return to_spectral(samples, R_l.grid, SCALAR)


class AmplitudeError(ValueError):
    pass


@dataclass
class Amplitudes:
    """Per-pair amplitude samples a_k = a_{-k}, shape (n_pairs, slices, n, n, n),
    plus the rho samples they were built from."""
    family: DirectionFamily
    a: np.ndarray
    rho: np.ndarray
    max_ball_distance: float


def amplitude_fields(R_l: SpectralField, delta_next: float, c: float, eps: float,
                     family: DirectionFamily) -> Amplitudes:
    """a_k = sqrt(rho) gamma_k(Id - R_l / rho) evaluated at every grid point.

    Raises AmplitudeError (with the offending grid location) if any point
    leaves the admissible ball or a pair weight loses positivity.  The solve
    runs slice by slice to bound transients.
    """
    if family.eps_gamma is None:
        raise AmplitudeError("family carries no eps_gamma; run family_radius first")
    grid = R_l.grid
    r_samples = to_physical(R_l)
    rho = rho_samples(r_samples, delta_next, c, eps)
    n_pairs = len(family.pairs())
    a = np.empty((n_pairs, grid.n_slices) + (grid.n_space,) * 3)
    worst = 0.0
    for s in range(grid.n_slices):
        ratio = np.moveaxis(r_samples[s], 0, -1) / rho[s][..., None]
        dist = frobenius_magnitude(np.moveaxis(ratio, -1, 0)[None], SYM_TENSOR)[0]
        dmax = float(dist.max())
        if dmax > family.eps_gamma * (1 + 1e-12):
            loc = (s,) + np.unravel_index(int(np.argmax(dist)), dist.shape)
            raise AmplitudeError(f"Id - R_l/rho leaves the eps_gamma ball at "
                                 f"(slice, ix, iy, iz) = {loc}: distance "
                                 f"{dmax:.6f} > {family.eps_gamma:.6f}")
        worst = max(worst, dmax)
        arg6 = -ratio
        for pos in (0, 3, 5):
            arg6[..., pos] += 1.0
        weights = gamma_weights_grid(arg6, family)
        wmin = float(weights.min())
        if wmin <= 0.0:
            flat = int(np.argmin(weights.reshape(-1, n_pairs).min(axis=-1)))
            loc = (s,) + np.unravel_index(flat, weights.shape[:-1])
            raise AmplitudeError(f"pair weight lost positivity at (slice, ix, iy, iz) = "
                                 f"{loc}: min c = {wmin:.3e}")
        a[:, s] = np.sqrt(rho[s])[None] * np.sqrt(np.moveaxis(weights, -1, 0))
    return Amplitudes(family=family, a=a, rho=rho, max_ball_distance=worst)


# -- waves and perturbations -------------------------------------------------------


def _wave_cube(d, params: IntermittencyParams, grid: Grid) -> np.ndarray:
    """Physical samples of the intermittent wave on one time slice,
    shape (3, n, n, n), complex."""
    modes, amps = wave_mode_table(d, params)
    lim = grid.nyquist
    if np.any(np.abs(modes) >= lim):
        raise ValueError(f"wave modes reach Nyquist {lim}; enlarge the grid or shrink lam")
    n = grid.n_space
    idx = tuple((modes % n).T)
    out = np.empty((3, n, n, n), dtype=np.complex128)
    for comp in range(3):
        cube = np.zeros((n, n, n), dtype=np.complex128)
        np.add.at(cube, idx, amps[:, comp])
        out[comp] = scipy.fft.ifftn(cube, workers=grid.workers) * n ** 3
    return out


def pair_wave_samples(family: DirectionFamily, params: IntermittencyParams,
                      grid: Grid) -> list[np.ndarray]:
    """2 Re(W_k) on the grid for the positive representative of each pair:
    the pair {k, -k} contribution at unit real amplitude."""
    return [np.ascontiguousarray(2.0 * np.real(_wave_cube(d, params, grid)))
            for d, _ in family.pairs()]


@dataclass
class Perturbation:
    params: IntermittencyParams
    v_p: SpectralField
    v_c: SpectralField
    w_p: SpectralField
    w_c: SpectralField
    identity_defect: float    # |v_p + v_c - lam^-2 curl T|, zero by construction
    imag_residue: float

    @property
    def v(self) -> SpectralField:
        return self.v_p + self.v_c

    @property
    def w(self) -> SpectralField:
        return self.w_p + self.w_c

    @property
    def T(self) -> SpectralField:
        """sum_k a_k eta_k W_k = lam * v_p (exact by construction)."""
        return self.v_p * float(self.params.lam)

    @property
    def W_eps(self) -> SpectralField:
        """w_p - sum_k a_k eta_k W_k, the gradient part of w_p."""
        return self.w_p - self.T


def build_perturbations(amplitudes: Amplitudes, family: DirectionFamily,
                        params: IntermittencyParams, grid: Grid) -> Perturbation:
    """Assemble v = lam^{-2} curl(sum a_k eta_k W_k) and w = curl v; all four
    returned fields are real and exactly divergence-free."""
    lam = params.lam
    t_samples = np.zeros((grid.n_slices, 3) + (grid.n_space,) * 3)
    for a_j, (d, _) in zip(amplitudes.a, family.pairs()):
        wave = np.ascontiguousarray(2.0 * np.real(_wave_cube(d, params, grid)))
        t_samples += a_j[:, None] * wave
        del wave
    T = to_spectral(t_samples, grid, VECTOR)
    del t_samples
    S = curl(T) * (1.0 / lam ** 2)
    v_p = T * (1.0 / lam)
    del T
    v_c = S - v_p
    w_p = curl(v_p)
    w_c = curl(v_c)
    defect = float(np.max(np.abs(v_p.coeffs + v_c.coeffs - S.coeffs)))
    return Perturbation(params=params, v_p=v_p, v_c=v_c, w_p=w_p, w_c=w_c,
                        identity_defect=defect, imag_residue=0.0)


# -- stress assembly ---------------------------------------------------------------


def assemble_next(q_next: int, A1: SpectralField, B1: SpectralField,
                  schedule: Schedule) -> IterationState:
    """Close the system at the next level: the full residual is Leray-split,
    its gradient part becomes the pressure and the solenoidal part is absorbed
    by the inverse divergence into the new stress."""
    b1_phys = to_physical(B1)
    F = time_derivative(A1) + _div_outer(b1_phys, b1_phys, A1.grid)
    del b1_phys
    sol, pot = leray_split(F)
    del F
    R1 = inverse_divergence(sol)
    return IterationState(q=q_next, A=A1, B=B1, R=R1, p=pot, schedule=schedule)


def new_stress(state: IterationState, moll: MollifiedTriple, pert: Perturbation,
               schedule: Schedule) -> IterationState:
    """Level-(q+1) state: gradients are absorbed into the new pressure by the
    Leray split and the solenoidal residual into R by the inverse divergence,
    so the system holds at q+1 by construction."""
    return assemble_next(state.q + 1, moll.A_l + pert.v, moll.B_l + pert.w, state.schedule)


@dataclass
class StepRecord:
    """Measured quantities of one step, consumed by the diagnostics ledger."""
    q: int
    params: StepParams
    epsilon: float
    norms: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    parts: dict = field(default_factory=dict)


def step(state: IterationState, family: DirectionFamily, *,
         collect: bool = True, decompose: bool = False,
         release_input: bool = False) -> tuple[IterationState, StepRecord]:
    """Full pipeline: mollify -> rho -> amplitudes -> perturbations -> stress.

    With release_input=True the input state's fields are nulled out once the
    mollified triple exists (the state is consumed); this keeps the peak
    footprint of a 64^3 step inside a few GB.
    """
    sched = state.schedule
    sp = sched.step_params(state.q)
    eps = sched.resolve_epsilon(family.eps_gamma)
    grid = state.grid
    interior = grid.interior
    dv = grid.cell_volume
    rec = StepRecord(q=state.q, params=sp, epsilon=eps)
    a_prev, b_prev = state.A, state.B

    moll = mollify_state(state, sp.ell)
    if collect:
        rec.norms["R_prev_L1"] = float(lp_norm_series(state.R, 1.0)[interior].max())
        rec.norms["R_comm_C0"] = float(
            frobenius_magnitude(to_physical(moll.R_comm), SYM_TENSOR)[interior].max())
        rec.residuals["mollified_system"] = mollified_residual(state, moll)
    if release_input:
        # R and p are consumed; A and B stay alive locally for the increments
        state.A = state.B = state.R = state.p = None
    moll.p_l = None
    if not decompose:
        moll.R_comm = None

    amps = amplitude_fields(moll.R_l, sp.delta_next, sp.c, eps, family)
    if collect:
        rec.norms["a_L2_max"] = float(max(
            np.sqrt((a[interior] ** 2).sum(axis=(1, 2, 3)) * dv).max() for a in amps.a))
        rec.norms["rho_L1"] = float(
            (np.abs(amps.rho[interior]).sum(axis=(1, 2, 3)) * dv).max())
        rec.norms["max_ball_distance"] = amps.max_ball_distance
    if not decompose:
        moll.R_l = None

    params = IntermittencyParams.for_family(family, sp.lam_next, sp.sigma, sp.r)
    pert = build_perturbations(amps, family, params, grid)
    if not decompose:
        amps = None
    if collect:
        rec.norms.update({
            "w_L2": float(l2_norm_parseval(pert.w)[interior].max()),
            "w_p_L2": float(l2_norm_parseval(pert.w_p)[interior].max()),
            "w_c_L2": float(l2_norm_parseval(pert.w_c)[interior].max()),
            "v_L2": float(l2_norm_parseval(pert.v)[interior].max()),
            "v_p_L2": float(l2_norm_parseval(pert.v_p)[interior].max()),
            "v_c_L2": float(l2_norm_parseval(pert.v_c)[interior].max()),
        })
        rec.residuals["perturbation_identity"] = pert.identity_defect
        rec.residuals["imag_residue"] = pert.imag_residue

    if decompose:
        nxt = new_stress(state, moll, pert, sched)
        decomp = stress_decomposition(state, moll, pert, nxt, amps)
        rec.parts = {"norms": decomp["norms"],
                     "part_sum_relative_defect": decomp["part_sum_relative_defect"]}
    else:
        A1 = moll.A_l + pert.v
        moll.A_l = None
        B1 = moll.B_l + pert.w
        moll.B_l = None
        pert.v_p = pert.v_c = pert.w_p = pert.w_c = None
        nxt = assemble_next(state.q + 1, A1, B1, sched)
    if collect:
        rec.norms["R_next_L1"] = float(lp_norm_series(nxt.R, 1.0)[interior].max())
    del pert, moll
    if collect:
        incr_b = nxt.B - b_prev
        rec.norms["B_incr_L2"] = float(l2_norm_parseval(incr_b)[interior].max())
        rec.norms["B_incr_Halpha"] = float(
            sobolev_norm_series(incr_b, sched.alpha)[interior].max())
        del incr_b
        rec.norms["A_incr_L2"] = float(l2_norm_parseval(nxt.A - a_prev)[interior].max())
        rec.norms["B_prev_L2"] = float(l2_norm_parseval(b_prev)[interior].max())
        rec.norms["A_prev_L2"] = float(l2_norm_parseval(a_prev)[interior].max())
        rec.norms["B_next_L2"] = float(l2_norm_parseval(nxt.B)[interior].max())
    return nxt, rec


# -- diagnostic decomposition ------------------------------------------------------


def _div_outer(x_phys: np.ndarray, y_phys: np.ndarray, grid: Grid) -> SpectralField:
    """div(x (x) y) as a vector field: d_i(x_i y_j), slice-chunked products."""
    from ..spectral.field import strip_nyquist
    out = SpectralField.zeros(grid, VECTOR)
    n3 = grid.n_space ** 3
    m = grid.wavenumbers().astype(np.float64)
    mults = (m[:, None, None], m[None, :, None], m[None, None, :])
    for s in range(grid.n_slices):
        for j in range(3):
            acc = 0.0
            for i in range(3):
                prod = strip_nyquist(
                    scipy.fft.fftn(x_phys[s, i] * y_phys[s, j], workers=grid.workers) / n3,
                    grid.n_space)
                acc = acc + 1j * mults[i] * prod
            out.coeffs[s, j] = acc
    return out


def _project_stress(f_vec: SpectralField) -> SpectralField:
    sol, _ = leray_split(f_vec)
    return inverse_divergence(sol)


def _eta_squared_cube(d, params: IntermittencyParams, grid: Grid) -> np.ndarray:
    """eta_k^2 samples on one spatial cube (eta is time-independent and real)."""
    f = eta_field(d, params, grid)
    cube = scipy.fft.ifftn(f.coeffs[0], workers=grid.workers) * grid.n_space ** 3
    return np.real(cube) ** 2


def _diagonal_tensor(amps: Amplitudes, params: IntermittencyParams, grid: Grid) -> SpectralField:
    """sum over pairs of a_k^2 eta_k^2 (Id - k (x) k): the k + k' = 0 part of
    w_p-main (x) w_p-main (the wave phases cancel, leaving a real product)."""
    family = amps.family
    out_phys = np.zeros((grid.n_slices, 6) + (grid.n_space,) * 3)
    for a_j, (d, _) in zip(amps.a, family.pairs()):
        eta2 = _eta_squared_cube(d, params, grid)
        k = d.k_float()
        mat = np.eye(3) - np.outer(k, k)
        intensity = a_j ** 2 * eta2[None, ...]
        for pos, (i, j) in enumerate(TENSOR_PAIRS):
            if mat[i, j] != 0.0:
                out_phys[:, pos] += mat[i, j] * intensity
    return to_spectral(out_phys, grid, SYM_TENSOR)


def stress_decomposition(state: IterationState, moll: MollifiedTriple,
                         pert: Perturbation, nxt: IterationState,
                         amps: Amplitudes, *, p_ledger: float = 16.0 / 15.0,
                         keep_parts: bool = False) -> dict:
    """Named parts of the new stress (diagnostic only).

    Every part is R(P_sol(div(...))), so pressure gradients are dropped
    exactly; the parts sum to R_{q+1} up to the mollified-system residual.
    Ledger rows that reference raw tensors (the Nash Hoelder row) are measured
    on the unprojected products.
    """
    grid = moll.A_l.grid
    interior = grid.interior
    params = pert.params
    b_l = to_physical(moll.B_l)
    w = to_physical(pert.w)
    w_p = to_physical(pert.w_p)
    w_c = to_physical(pert.w_c)
    t_phys = to_physical(pert.T)
    weps = to_physical(pert.W_eps)

    out: dict = {"norms": {}, "parts": {}}
    total = None

    def account(name: str, div_vec: SpectralField):
        nonlocal total
        part = _project_stress(div_vec)
        out["norms"][f"{name}_Lp"] = float(lp_norm_series(part, p_ledger)[interior].max())
        out["norms"][f"{name}_L1"] = float(lp_norm_series(part, 1.0)[interior].max())
        total = part if total is None else total + part
        if keep_parts:
            out["parts"][name] = part

    # linear error: R(d/dt v) + (B_l (x) w + w (x) B_l)
    account("linear", time_derivative(pert.v) + _div_outer(b_l, w, grid) + _div_outer(w, b_l, grid))
    # Nash error: w_c (x) w + w_p (x) w_c
    account("nash", _div_outer(w_c, w, grid) + _div_outer(w_p, w_c, grid))
    out["norms"]["nash_raw_Lp"] = _raw_nash_lp(w_c, w, w_p, grid, p_ledger)
    out["norms"]["w_L2p"] = float(lp_norm_series(pert.w, 2 * p_ledger)[interior].max())
    out["norms"]["w_c_L2p"] = float(lp_norm_series(pert.w_c, 2 * p_ledger)[interior].max())

    # oscillation errors: w_p (x) w_p + R_l + R_comm in five parts
    diag = _diagonal_tensor(amps, params, grid)
    account("osc1", divergence(diag + moll.R_l + moll.R_comm))
    account("osc2", _div_outer(t_phys, t_phys, grid) - divergence(diag))
    account("osc3", _div_outer(weps, weps, grid))
    account("osc4", _div_outer(weps, t_phys, grid))
    account("osc5", _div_outer(t_phys, weps, grid))

    defect = l2_norm_parseval(total - nxt.R)[interior].max()
    scale = l2_norm_parseval(nxt.R)[interior].max()
    out["part_sum_relative_defect"] = float(defect / max(scale, 1e-300))
    return out


def _raw_nash_lp(w_c, w, w_p, grid: Grid, p: float) -> float:
    """L^p of the raw tensor w_c (x) w + w_p (x) w_c, slice-chunked."""
    dv = grid.cell_volume
    best = 0.0
    for s in range(grid.n_slices)[grid.interior]:
        tens = (w_c[s][:, None] * w[s][None, :] + w_p[s][:, None] * w_c[s][None, :])
        frob = np.sqrt(np.sum(tens ** 2, axis=(0, 1)))
        best = max(best, float((np.sum(frob ** p) * dv) ** (1.0 / p)))
    return best
