"""Parameter schedules for the iteration.

Either generated from (a, b, beta) via lam_q = a^(b^q), delta_q = lam_q^(-2 beta)
with the asymptotic step parameters r = lam^(2/3), sigma = lam^(-5/6),
ell = lam_prev^(-20), or given explicitly per level.  lam*sigma is rounded to
the nearest positive integer multiple of 1/lam and sigma*r <= 0.1 is rechecked
afterwards; violations abort with a ParameterError rather than silently
adjusting.  The asymptotic formulas only satisfy these constraints for very
large lam, so desk-scale runs use explicit overrides.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..intermittency import ParameterError


@dataclass(frozen=True)
class StepParams:
    """Parameters of the step q -> q+1."""
    lam_next: int
    delta_next: float
    r: int
    sigma: float
    ell: float
    c: float
    epsilon: float | None  # None: resolve to eps_factor * eps_gamma of the family


@dataclass(frozen=True)
class Schedule:
    lambdas: tuple[int, ...]
    deltas: tuple[float, ...]
    rs: tuple[int, ...]
    sigmas: tuple[float, ...]
    ells: tuple[float, ...]
    c: float = 4e-5
    epsilon: float | None = None
    eps_factor: float = 1.0   # epsilon = eps_factor * eps_gamma when epsilon is None
    eps_b: float = 0.01
    eps_r: float = 0.01
    alpha: float = 0.05

    def __post_init__(self):
        if len(self.lambdas) < 1:
            raise ParameterError("schedule needs at least one level")
        if any(int(l) != l or l < 1 for l in self.lambdas):
            raise ParameterError("frequencies must be positive integers")
        if any(b <= a for a, b in zip(self.lambdas, self.lambdas[1:])):
            raise ParameterError("frequencies must be strictly increasing")
        if len(self.deltas) < len(self.lambdas):
            raise ParameterError("need a delta for every level")
        if any(not (0.0 < d < 1.0) for d in self.deltas):
            raise ParameterError("amplitudes delta must lie in (0, 1)")
        if any(b >= a for a, b in zip(self.deltas, self.deltas[1:])):
            raise ParameterError("amplitudes delta must be strictly decreasing")
        n_steps = len(self.lambdas) - 1
        if not (len(self.rs) >= n_steps and len(self.sigmas) >= n_steps and len(self.ells) >= n_steps):
            raise ParameterError("need r, sigma, ell for every step")
        for q in range(n_steps):
            lam = self.lambdas[q + 1]
            ls = lam * self.sigmas[q]
            if abs(ls - round(ls)) > 1e-9 or round(ls) < 1:
                raise ParameterError(f"lambda*sigma = {ls} at step {q} is not a positive integer")
            if self.sigmas[q] * self.rs[q] > 0.1 + 1e-12:
                raise ParameterError(f"sigma*r = {self.sigmas[q] * self.rs[q]:.4f} at step {q} exceeds 0.1")
        if self.c <= 0:
            raise ParameterError("stress-smallness constant c must be positive")

    @property
    def n_steps(self) -> int:
        return len(self.lambdas) - 1

    def lam(self, q: int) -> int:
        return self.lambdas[q]

    def delta(self, q: int) -> float:
        return self.deltas[q]

    def step_params(self, q: int) -> StepParams:
        if q >= self.n_steps:
            raise ParameterError(f"schedule has no step {q} -> {q + 1}")
        return StepParams(lam_next=self.lambdas[q + 1], delta_next=self.deltas[q + 1],
                          r=self.rs[q], sigma=self.sigmas[q], ell=self.ells[q],
                          c=self.c, epsilon=self.epsilon)

    def resolve_epsilon(self, eps_gamma: float) -> float:
        return self.epsilon if self.epsilon is not None else self.eps_factor * eps_gamma

    def to_dict(self) -> dict:
        return {
            "lambdas": list(self.lambdas), "deltas": list(self.deltas),
            "rs": list(self.rs), "sigmas": list(self.sigmas), "ells": list(self.ells),
            "c": self.c, "epsilon": self.epsilon, "eps_factor": self.eps_factor,
            "eps_b": self.eps_b, "eps_r": self.eps_r, "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Schedule":
        return cls(lambdas=tuple(d["lambdas"]), deltas=tuple(d["deltas"]),
                   rs=tuple(d["rs"]), sigmas=tuple(d["sigmas"]), ells=tuple(d["ells"]),
                   c=d.get("c", 4e-5), epsilon=d.get("epsilon"),
                   eps_factor=d.get("eps_factor", 1.0), eps_b=d.get("eps_b", 0.01),
                   eps_r=d.get("eps_r", 0.01), alpha=d.get("alpha", 0.05))


def generated_schedule(a: int, b: int, beta: float, levels: int, **kwargs) -> Schedule:
    """Asymptotic schedule lam_q = a^(b^q), delta_q = lam_q^(-2 beta) with the
    step parameters r = lam^(2/3), sigma ~ lam^(-5/6), ell = lam_prev^(-20)."""
    if a < 2 or b < 2:
        raise ParameterError("need integers a, b > 1")
    if not (0.0 < beta < 1.0):
        raise ParameterError("beta must lie in (0, 1)")
    lambdas, deltas, rs, sigmas, ells = [], [], [], [], []
    for q in range(levels):
        lam = a ** (b ** q)
        lambdas.append(lam)
        deltas.append(float(lam) ** (-2.0 * beta))
    for q in range(levels - 1):
        lam = lambdas[q + 1]
        r = int(round(float(lam) ** (2.0 / 3.0)))
        sigma_target = float(lam) ** (-5.0 / 6.0)
        s = max(1, int(round(lam * sigma_target)))
        sigmas.append(s / lam)
        rs.append(r)
        ells.append(float(lambdas[q]) ** -20.0)
    return Schedule(tuple(lambdas), tuple(deltas), tuple(rs), tuple(sigmas),
                    tuple(ells), **kwargs)


def default_desk_schedule(**overrides) -> Schedule:
    """Desk-scale schedule for a 64^3 x 17 grid.

    lam = (8, 25, 30) with explicit deltas; r = 1 and sigma = 1/lam keep the
    frequency-support identities exact (sqrt(3) * sigma * r * N0 <= 1/2 for the
    default family) and every constructed mode below the 64^3 Nyquist.
    """
    base = dict(
        lambdas=(8, 25, 30),
        deltas=(0.87, 0.85, 0.80),
        rs=(1, 1),
        sigmas=(1.0 / 25.0, 1.0 / 30.0),
        ells=(1.0 / 25.0, 1.0 / 30.0),
        c=4e-5,
        epsilon=None,
        eps_factor=1.0,
    )
    base.update(overrides)
    return Schedule(
        tuple(base["lambdas"]), tuple(base["deltas"]), tuple(base["rs"]),
        tuple(base["sigmas"]), tuple(base["ells"]), c=base["c"],
        epsilon=base["epsilon"], eps_factor=base["eps_factor"],
        eps_b=base.get("eps_b", 0.01), eps_r=base.get("eps_r", 0.01),
        alpha=base.get("alpha", 0.05),
    )
