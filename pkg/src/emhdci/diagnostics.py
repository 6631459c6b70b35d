"""Physical observables, the inequality ledger, and residual checks.

Energy and helicity are per-slice quadratures; the ledger mirrors the paper's
estimate chain, asserting only the constant-free rows at desk scale and
reporting the measured constant of every hidden-constant row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import (SCALAR, VECTOR, Grid, SpectralField, curl, divergence,
                       gradient, l2_norm_parseval, lp_norm_series, norm,
                       sobolev_norm_series, time_derivative, to_physical,
                       to_spectral)
from .spectral.mollifier import bump
from .iteration import IterationState, StepRecord, system_residual_field


def energy_series(b: SpectralField) -> np.ndarray:
    """E(t) = int |B(t)|^2 dx on the interior slices."""
    return l2_norm_parseval(b)[b.grid.interior] ** 2


def helicity_series(a: SpectralField, b: SpectralField, tol: float = 1e-10) -> np.ndarray:
    """H(t) = int A.B dx on the interior slices; A must satisfy curl A = B."""
    scale = max(float(np.max(np.abs(b.coeffs))), 1e-300)
    defect = float(np.max(np.abs(curl(a).coeffs - b.coeffs)))
    if defect > tol * scale:
        raise ValueError(f"helicity_series: curl A != B (defect {defect:.3e})")
    # Parseval pairing: int A.B = (2pi)^3 sum_m A(m).conj(B(m))
    prod = np.sum(a.coeffs * np.conj(b.coeffs), axis=1)
    series = np.real(prod.sum(axis=(1, 2, 3))) * a.grid.volume
    return series[a.grid.interior]


def residual_check(state: IterationState) -> float:
    """|d/dt A + div(B (x) B) - grad p - div R|_L2 over interior slices,
    relative to |d/dt A|_L2."""
    F = system_residual_field(state.A, state.B, state.R, state.p)
    grid = state.grid
    num = l2_norm_parseval(F)[grid.interior].max()
    den = l2_norm_parseval(time_derivative(state.A))[grid.interior].max()
    return float(num / max(den, 1e-300))


# -- weak form ---------------------------------------------------------------------


def _time_bump(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """A smooth bump supported strictly inside (0,1) and its exact derivative,
    sampled on the interior slices."""
    t = grid.times()
    z = 2.0 * t - 1.0
    phi = bump(z)
    dphi = np.zeros_like(phi)
    inside = np.abs(z) < 1.0
    zi = z[inside]
    dphi[inside] = phi[inside] * (-2.0 * zi / (1.0 - zi * zi) ** 2) * 2.0
    return phi, dphi


def _random_test_field(grid: Grid, rng: np.random.Generator, max_mode: int = 3) -> SpectralField:
    """Real band-limited vector field, one time slice broadcast over slices."""
    f = SpectralField.zeros(grid, VECTOR)
    n = grid.n_space
    for _ in range(8):
        m = rng.integers(-max_mode, max_mode + 1, size=3)
        if not m.any():
            continue
        amp = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        idx = tuple(m % n)
        idx_neg = tuple((-m) % n)
        for comp in range(3):
            f.coeffs[(slice(None), comp) + idx] += 0.5 * amp[comp]
            f.coeffs[(slice(None), comp) + idx_neg] += 0.5 * np.conj(amp[comp])
    return f


def grad_curl_pairing(b: SpectralField, phi: SpectralField, weights: np.ndarray) -> float:
    """int int (B (x) B) : grad(curl phi) dx dt with the given time weights."""
    grid = b.grid
    cphi = curl(phi)
    b_phys = to_physical(b)[grid.interior]
    total = 0.0
    for i in range(3):
        gi = gradient(SpectralField(grid, SCALAR, cphi.coeffs[:, i], phi.is_real))
        gi_phys = to_physical(gi)[grid.interior]
        for j in range(3):
            integrand = (b_phys[:, i] * b_phys[:, j] * gi_phys[:, j]).sum(axis=(1, 2, 3))
            total += float((integrand * grid.cell_volume * weights).sum() * grid.dt)
    return total


def tensor_pairing(r: SpectralField, phi: SpectralField, weights: np.ndarray) -> float:
    """int int R : grad(curl phi) dx dt (the stress side of the weak form)."""
    from .spectral.field import TENSOR_INDEX
    grid = r.grid
    cphi = curl(phi)
    r_phys = to_physical(r)[grid.interior]
    total = 0.0
    for i in range(3):
        gi = gradient(SpectralField(grid, SCALAR, cphi.coeffs[:, i], phi.is_real))
        gi_phys = to_physical(gi)[grid.interior]
        for j in range(3):
            comp = TENSOR_INDEX[(i, j)]
            integrand = (r_phys[:, comp] * gi_phys[:, j]).sum(axis=(1, 2, 3))
            total += float((integrand * grid.cell_volume * weights).sum() * grid.dt)
    return total


def weak_form_residual(b: SpectralField, test_count: int = 8, *,
                       seed: int = 20240802, stress: SpectralField | None = None) -> dict:
    """Ideal weak-form defect of B against random space-time test fields.

    For each test field phi(x) psi(t) (band-limited trig polynomial times a
    smooth interior time bump) the defect
        int int [ B . d/dt(phi psi) + (B (x) B) : grad curl(phi psi) ] dx dt
    is measured, normalized by |B|_L2^2.  With the stress supplied, the
    predicted value  int int R : grad curl(phi psi)  is reported alongside
    (they agree for states that satisfy the approximate system).
    """
    grid = b.grid
    rng = np.random.default_rng(seed)
    psi, dpsi = _time_bump(grid)
    b_norm = float(l2_norm_parseval(b)[grid.interior].max())
    scale = max(b_norm ** 2, 1e-300)
    rows = []
    for _ in range(test_count):
        phi = _random_test_field(grid, rng)
        b_dot_phi = np.real(np.sum(b.coeffs * np.conj(phi.coeffs), axis=(1, 2, 3, 4))) * grid.volume
        time_term = float((b_dot_phi[grid.interior] * dpsi).sum() * grid.dt)
        osc_term = grad_curl_pairing(b, phi, psi)
        defect = time_term + osc_term
        row = {"defect": defect, "normalized": defect / scale}
        if stress is not None:
            row["predicted"] = tensor_pairing(stress, phi, psi)
        rows.append(row)
    worst = max(abs(r["normalized"]) for r in rows)
    out = {"rows": rows, "max_normalized_defect": worst}
    if stress is not None:
        out["max_prediction_gap"] = max(abs(r["defect"] - r["predicted"]) for r in rows) / scale
    return out


# -- inequality ledger ---------------------------------------------------------------


@dataclass
class LedgerRow:
    q: int
    quantity: str
    measured: float
    claimed: float
    asserted: bool
    source: str = ""

    @property
    def ratio(self) -> float:
        return self.measured / self.claimed if self.claimed else float("inf")

    @property
    def holds(self) -> bool:
        return self.measured <= self.claimed


@dataclass
class LevelSummary:
    """Scalar observables of one level, small enough to keep for every level."""
    q: int
    times: np.ndarray
    energy: np.ndarray
    helicity: np.ndarray
    B_L2: float
    A_L2: float
    B_C1: float
    R_L1: float
    R_Lp: float
    residual: float

    def to_dict(self) -> dict:
        return {"q": self.q, "times": self.times.tolist(),
                "energy": self.energy.tolist(), "helicity": self.helicity.tolist(),
                "B_L2": self.B_L2, "A_L2": self.A_L2, "B_C1": self.B_C1,
                "R_L1": self.R_L1, "R_Lp": self.R_Lp, "residual": self.residual}

    @classmethod
    def from_dict(cls, d: dict) -> "LevelSummary":
        return cls(q=d["q"], times=np.asarray(d["times"]),
                   energy=np.asarray(d["energy"]), helicity=np.asarray(d["helicity"]),
                   B_L2=d["B_L2"], A_L2=d["A_L2"], B_C1=d["B_C1"],
                   R_L1=d["R_L1"], R_Lp=d["R_Lp"], residual=d["residual"])


def summarize_level(state: IterationState) -> LevelSummary:
    grid = state.grid
    interior = grid.interior
    return LevelSummary(
        q=state.q,
        times=grid.times(),
        energy=energy_series(state.B),
        helicity=helicity_series(state.A, state.B),
        B_L2=float(l2_norm_parseval(state.B)[interior].max()),
        A_L2=float(l2_norm_parseval(state.A)[interior].max()),
        B_C1=norm(state.B, "c", m=1),
        R_L1=float(lp_norm_series(state.R, 1.0)[interior].max()),
        R_Lp=float(lp_norm_series(state.R, 16.0 / 15.0)[interior].max()),
        residual=residual_check(state),
    )


@dataclass
class DiagnosticsReport:
    levels: list = field(default_factory=list)      # LevelSummary per level
    rows: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)

    @property
    def energy(self) -> dict:
        return {lv.q: lv.energy for lv in self.levels}

    @property
    def helicity(self) -> dict:
        return {lv.q: lv.helicity for lv in self.levels}

    def failed_assertions(self) -> list:
        return [r for r in self.rows if r.asserted and not r.holds]

    def row(self, quantity: str, q: int | None = None) -> LedgerRow:
        for r in self.rows:
            if r.quantity == quantity and (q is None or r.q == q):
                return r
        raise KeyError(f"no ledger row {quantity!r} (q = {q})")


def inequality_ledger(schedule, levels: list[LevelSummary],
                      records: list[StepRecord]) -> DiagnosticsReport:
    """Ledger rows mirroring the estimate chain.

    Asserted at desk scale: the level-0 size bound |B_0| <= 1 - delta_0^(1/2),
    the increment bound |B_{q+1} - B_q|_L2 <= delta_{q+1}^(1/2), the corrector
    smallness |w_c| <= 0.5 |w_p|, and the exact Hoelder row of the Nash error.
    Every hidden-constant row is reported with its measured constant and never
    asserted; the level-(q+1) size bound is reported only (its constants
    presume the asymptotic regime).
    """
    report = DiagnosticsReport(levels=list(levels))
    sched = schedule
    for lv in levels:
        q = lv.q
        claimed = 1.0 - float(np.sqrt(sched.delta(q)))
        report.rows.append(LedgerRow(q, "B_L2_vs_1-sqrt(delta)", lv.B_L2, claimed,
                                     asserted=(q == 0), source="size bound (L2)"))
        report.rows.append(LedgerRow(q, "B_C1_vs_lambda^2", lv.B_C1,
                                     float(sched.lam(q)) ** 2,
                                     asserted=False, source="size bound (C1)"))
        if q + 1 < len(sched.deltas):
            report.rows.append(LedgerRow(q, "R_L1_vs_c*delta_next", lv.R_L1,
                                         sched.c * sched.delta(q + 1),
                                         asserted=False, source="stress smallness"))
        report.residuals[f"system_q{q}"] = lv.residual

    for rec in records:
        q1 = rec.q + 1
        delta_next = sched.delta(q1)
        lam_next = sched.lam(q1)
        sp = rec.params
        n = rec.norms
        # the constant-free rows are asserted for the first constructed level;
        # later steps inherit a stress far outside the inductive hypothesis at
        # desk scale, so their rows are informational
        first = q1 == 1
        report.rows.append(LedgerRow(q1, "B_increment_L2_vs_sqrt(delta)", n["B_incr_L2"],
                                     float(np.sqrt(delta_next)), asserted=first,
                                     source="increment bound (L2)"))
        report.rows.append(LedgerRow(q1, "B_increment_Halpha_vs_delta^eps_b",
                                     n["B_incr_Halpha"], float(delta_next ** sched.eps_b),
                                     asserted=False, source="increment bound (H^alpha)"))
        report.rows.append(LedgerRow(q1, "corrector_ratio_vs_0.5",
                                     n["w_c_L2"] / max(n["w_p_L2"], 1e-300), 0.5,
                                     asserted=first, source="corrector smallness"))
        report.rows.append(LedgerRow(q1, "v_p_L2_vs_lam^-1*sqrt(delta)", n["v_p_L2"],
                                     float(np.sqrt(delta_next) / lam_next),
                                     asserted=False, source="potential principal part"))
        report.rows.append(LedgerRow(q1, "v_c_L2_vs_ell^-1*lam^-1*sqrt(delta)", n["v_c_L2"],
                                     float(np.sqrt(delta_next) / (lam_next * sp.ell)),
                                     asserted=False, source="potential corrector"))
        report.rows.append(LedgerRow(q1, "w_p_L2_vs_sqrt(delta)", n["w_p_L2"],
                                     float(np.sqrt(delta_next)), asserted=False,
                                     source="field principal part"))
        report.rows.append(LedgerRow(q1, "w_c_L2_vs_ell^-1*sqrt(delta)", n["w_c_L2"],
                                     float(np.sqrt(delta_next) / sp.ell), asserted=False,
                                     source="field corrector"))
        report.rows.append(LedgerRow(q1, "a_L2_vs_sqrt(delta)", n["a_L2_max"],
                                     float(np.sqrt(delta_next)), asserted=False,
                                     source="amplitude size"))
        report.rows.append(LedgerRow(q1, "R_L1_decrease", n["R_next_L1"], n["R_prev_L1"],
                                     asserted=False, source="stress decrease (trend)"))
        if rec.parts:
            pn = rec.parts["norms"]
            report.rows.append(LedgerRow(q1, "nash_raw_Lp_vs_2*w_L2p*w_c_L2p",
                                         pn["nash_raw_Lp"],
                                         2.0 * pn["w_L2p"] * pn["w_c_L2p"],
                                         asserted=True, source="Nash Hoelder row (exact)"))
        report.residuals[f"mollified_q{rec.q}"] = rec.residuals.get("mollified_system", float("nan"))

    by_q = {lv.q: lv for lv in levels}
    for rec in records:
        q1 = rec.q + 1
        lv_next = by_q.get(q1)
        if lv_next is not None and q1 + 1 < len(sched.deltas):
            claimed = float(sched.lam(q1) ** (-2.0 * sched.eps_r) * sched.delta(q1 + 1))
            report.rows.append(LedgerRow(q1, "R_Lp_vs_lam^-2eps_R*delta_next",
                                         lv_next.R_Lp, claimed, asserted=False,
                                         source="stress size (L^p)"))
    if 0 in by_q and 1 in by_q and records:
        report.rows.extend(nonconstancy_rows(by_q[0], by_q[1], records[0]))
    return report


def nonconstancy_rows(lv0: LevelSummary, lv1: LevelSummary,
                      rec0: StepRecord) -> list[LedgerRow]:
    """The triangle chain for E and H, evaluated with measured quantities:

        |E_1(1) - E_1(0)| >= E_0(1) - 2 |B_1 - B_0| (|B_1| + |B_0|)
        |H_1(1) - H_1(0)| >= H_0(1) - 2 (|A_1 - A_0| |B_1| + |A_0| |B_1 - B_0|)

    (all norms sup-in-t L^2).  The chain inequalities themselves always hold;
    positivity of the right sides is the paper's asymptotic gap argument and
    is asserted separately."""
    n = rec0.norms
    w_incr, v_incr = n["B_incr_L2"], n["A_incr_L2"]
    b0, b1, a0 = lv0.B_L2, lv1.B_L2, lv0.A_L2

    gap_e = abs(float(lv1.energy[-1] - lv1.energy[0]))
    bound_e = float(lv0.energy[-1]) - 2.0 * w_incr * (b0 + b1)
    gap_h = abs(float(lv1.helicity[-1] - lv1.helicity[0]))
    bound_h = float(lv0.helicity[-1]) - 2.0 * (v_incr * b1 + a0 * w_incr)
    return [
        LedgerRow(lv1.q, "energy_gap_vs_chain_bound", bound_e, gap_e,
                  asserted=True, source="non-constancy chain (E)"),
        LedgerRow(lv1.q, "energy_chain_bound_positive", 0.0, bound_e,
                  asserted=True, source="chain bound positivity (E)"),
        LedgerRow(lv1.q, "helicity_gap_vs_chain_bound", bound_h, gap_h,
                  asserted=True, source="non-constancy chain (H)"),
        LedgerRow(lv1.q, "helicity_chain_bound_positive", 0.0, bound_h,
                  asserted=True, source="chain bound positivity (H)"),
    ]
