"""Rational direction families on S^2 and the geometric-lemma machinery.

A Direction is an exactly-orthonormal rational frame (k, k1, k2) with
k2 = k x k1.  The default family is the twelve-vector Pythagorean set
{(+-3,+-4,0)/5, (0,+-3,+-4)/5, (+-4,0,+-3)/5}; its positive half carries the
deterministic companion rule below and each -k reuses the frame of k with k2
flipped, so that the waves satisfy W_{-k} = conj(W_k).

The coefficient solver writes a symmetric matrix R near Id as
R = 1/2 sum_k gamma_k(R)^2 (Id - k (x) k)  with gamma_k = gamma_{-k} > 0,
solving the 6-equation linear system in the pair weights c_k = gamma_k^2,
anchored at the equal-weight solution for Id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .spectral import SCALAR, VECTOR, Grid, ShapeError, SpectralField, place_mode

Vec3 = tuple[Fraction, Fraction, Fraction]


class GeometryError(ValueError):
    pass


class GammaBallError(GeometryError):
    """Input matrix outside the admissible ball around Id."""


class GammaPositivityError(GeometryError):
    """Linear solve left some pair weight non-positive."""


def _vec(nums, den=1) -> Vec3:
    return tuple(Fraction(n, den) for n in nums)


def _dot(a: Vec3, b: Vec3) -> Fraction:
    return sum(x * y for x, y in zip(a, b))


def _cross(a: Vec3, b: Vec3) -> Vec3:
    return (a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0])


def _neg(a: Vec3) -> Vec3:
    return tuple(-x for x in a)


def _as_float(a: Vec3) -> np.ndarray:
    return np.array([float(x) for x in a])


@dataclass(frozen=True)
class Direction:
    k: Vec3
    k1: Vec3
    k2: Vec3

    def __post_init__(self):
        for v in (self.k, self.k1, self.k2):
            if _dot(v, v) != 1:
                raise GeometryError(f"direction {v} is not a rational unit vector")
        if _dot(self.k, self.k1) != 0 or _dot(self.k, self.k2) != 0 or _dot(self.k1, self.k2) != 0:
            raise GeometryError("frame vectors are not orthogonal")
        if _cross(self.k, self.k1) != self.k2:
            raise GeometryError("k2 != k x k1")

    @property
    def common_denominator(self) -> int:
        dens = [x.denominator for v in (self.k, self.k1, self.k2) for x in v]
        return int(np.lcm.reduce(dens))

    def negated(self) -> "Direction":
        """Frame of -k reusing (k1, -k2), so W_{-k} = conj(W_k)."""
        return Direction(_neg(self.k), self.k1, _neg(self.k2))

    def k_float(self) -> np.ndarray:
        return _as_float(self.k)

    def frame_float(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return _as_float(self.k), _as_float(self.k1), _as_float(self.k2)


def _companion(k: Vec3) -> tuple[Vec3, Vec3]:
    """Deterministic companion rule for coordinate-plane vectors (a,b,0)/d and
    its cyclic shifts: k1 is the in-plane quarter turn, k2 the plane normal."""
    a, b, c = k
    if c == 0:
        k1 = (-b, a, Fraction(0))
    elif a == 0:
        k1 = (Fraction(0), -c, b)
    elif b == 0:
        k1 = (c, Fraction(0), -a)
    else:
        raise GeometryError(f"no companion rule for off-plane direction {k}")
    return k1, _cross(k, k1)


@dataclass(frozen=True)
class DirectionFamily:
    directions: tuple[Direction, ...]
    lambda_scale: int
    eps_gamma: float | None = None

    def __post_init__(self):
        ks = {d.k for d in self.directions}
        for d in self.directions:
            if _neg(d.k) not in ks:
                raise GeometryError(f"family not closed under negation near {d.k}")
        for d in self.directions:
            for x in d.k:
                if (x * self.lambda_scale).denominator != 1:
                    raise GeometryError("lambda_scale does not clear denominators")

    def __len__(self) -> int:
        return len(self.directions)

    def pairs(self) -> list[tuple[Direction, Direction]]:
        """(d, -d) pairs, one entry per unordered pair, positive rep first."""
        seen = {}
        for d in self.directions:
            seen[d.k] = d
        out = []
        for d in self.directions:
            if _is_positive_rep(d.k):
                out.append((d, seen[_neg(d.k)]))
        return out

    @property
    def n0(self) -> int:
        """Least integer clearing all frame denominators (direction-clearing
        factor for the sheared Dirichlet lattice)."""
        return int(np.lcm.reduce([d.common_denominator for d in self.directions]))

    def with_eps(self, eps: float) -> "DirectionFamily":
        return DirectionFamily(self.directions, self.lambda_scale, eps)


def _is_positive_rep(k: Vec3) -> bool:
    for x in k:
        if x > 0:
            return True
        if x < 0:
            return False
    return False


def build_default_family(eps_gamma: float | None = None) -> DirectionFamily:
    """Twelve-direction (3,4,5) family with lambda_scale 5.

    eps_gamma may be supplied (e.g. from a family file) to skip the bisection
    in family_radius; otherwise call family_radius once and attach it.
    """
    reps = [(3, 4, 0), (3, -4, 0), (0, 3, 4), (0, 3, -4), (4, 0, 3), (4, 0, -3)]
    dirs: list[Direction] = []
    for nums in reps:
        k = _vec(nums, 5)
        k1, k2 = _companion(k)
        d = Direction(k, k1, k2)
        dirs.append(d)
        dirs.append(d.negated())
    return DirectionFamily(tuple(dirs), 5, eps_gamma)


# -- Beltrami waves ------------------------------------------------------------


def beltrami_wave(d: Direction, lam: int, grid: Grid) -> SpectralField:
    """W_k = (k1 + i k2)/sqrt(2) e^{i lam k.x}: single-mode complex vector
    eigenfield of curl with eigenvalue lam."""
    m_frac = tuple(x * lam for x in d.k)
    if any(f.denominator != 1 for f in m_frac):
        raise GeometryError(f"lam*k = {m_frac} is not an integer vector; "
                            f"lam must be a multiple of the family scale")
    m = tuple(int(f) for f in m_frac)
    if any(abs(mi) >= grid.nyquist for mi in m):
        raise ShapeError(f"wave frequency {m} at or beyond Nyquist {grid.nyquist}")
    k1, k2 = _as_float(d.k1), _as_float(d.k2)
    amp = (k1 + 1j * k2) / np.sqrt(2.0)
    w = SpectralField.zeros(grid, VECTOR, is_real=False)
    for comp in range(3):
        place_mode(w, m, amp[comp], component=comp)
    return w


# -- geometric lemma -----------------------------------------------------------

_SYM_BASIS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


def _sym_to_vec(mat: np.ndarray) -> np.ndarray:
    return np.array([mat[..., i, j] for (i, j) in _SYM_BASIS])


def _pair_matrix(family: DirectionFamily) -> np.ndarray:
    """6 x n_pairs matrix of vec(Id - k (x) k) columns."""
    cols = []
    for d, _ in family.pairs():
        k = d.k_float()
        cols.append(_sym_to_vec(np.eye(3) - np.outer(k, k)))
    return np.stack(cols, axis=1)


def _anchor_weights(family: DirectionFamily) -> np.ndarray:
    """Equal weights solving sum c (Id - k k) = Id for orbit-symmetric
    families: c = 3 / (2 P) with P pairs (trace identity)."""
    n_pairs = len(family.pairs())
    return np.full(n_pairs, 3.0 / (2.0 * n_pairs))


class GammaSolution:
    """Pair weights c_k = gamma_k^2 >= 0 with gamma_k = gamma_{-k}."""

    def __init__(self, family: DirectionFamily, weights: np.ndarray):
        self.family = family
        self.weights = weights

    def gamma(self, pair_index: int) -> float:
        return float(np.sqrt(self.weights[pair_index]))

    def gammas(self) -> np.ndarray:
        return np.sqrt(self.weights)

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((3, 3))
        for c, (d, _) in zip(self.weights, self.family.pairs()):
            k = d.k_float()
            out += c * (np.eye(3) - np.outer(k, k))
        return out


_SOLVER_CACHE: dict = {}


def _solver_for(family: DirectionFamily):
    key = tuple(d.k for d in family.directions)
    entry = _SOLVER_CACHE.get(key)
    if entry is None:
        M = _pair_matrix(family)
        if np.linalg.matrix_rank(M, tol=1e-10) < 6:
            raise GeometryError("direction family is degenerate: the map "
                                "c -> sum c (Id - k k) is not surjective onto "
                                "symmetric matrices")
        pinv = np.linalg.pinv(M)
        anchor = _anchor_weights(family)
        residual = _sym_to_vec(np.eye(3)) - M @ anchor
        if np.max(np.abs(residual)) > 1e-12:
            # non-isotropic family: correct the anchor once
            anchor = anchor + pinv @ residual
        entry = (M, pinv, anchor)
        _SOLVER_CACHE[key] = entry
    return entry


def gamma_coefficients(R: np.ndarray, family: DirectionFamily,
                       *, positivity_floor: float = 0.0) -> GammaSolution:
    """Solve 1/2 sum_k gamma_k^2 (Id - k k) = R for R in the eps_gamma ball.

    Raises GammaBallError outside the ball and GammaPositivityError if the
    minimal-norm solution loses positivity (never clamps).
    """
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3) or np.max(np.abs(R - R.T)) > 1e-12:
        raise GeometryError("R must be a symmetric 3x3 matrix")
    if family.eps_gamma is not None:
        dist = np.linalg.norm(R - np.eye(3), ord="fro")
        if dist > family.eps_gamma * (1 + 1e-12):
            raise GammaBallError(f"matrix is outside the eps_gamma ball: "
                                 f"|R - Id|_F = {dist:.6f} > {family.eps_gamma:.6f}")
    M, pinv, anchor = _solver_for(family)
    c = anchor + pinv @ (_sym_to_vec(R) - M @ anchor)
    if np.min(c) <= positivity_floor:
        raise GammaPositivityError(f"pair weight lost positivity: min c = {np.min(c):.3e}")
    return GammaSolution(family, c)


def gamma_weights_grid(R6: np.ndarray, family: DirectionFamily) -> np.ndarray:
    """Vectorized pair weights for a whole array of symmetric matrices.

    R6 holds the six components (xx, xy, xz, yy, yz, zz) of Id - R_l/rho along
    its last axis; returns weights with shape R6.shape[:-1] + (n_pairs,).
    No ball or positivity checks here; callers enforce them.
    """
    M, pinv, anchor = _solver_for(family)
    return anchor + (R6 - (M @ anchor)) @ pinv.T


def family_radius(family: DirectionFamily, *, n_rays: int = 64, n_bisect: int = 40,
                  floor_ratio: float = 1e-4, seed: int = 20240801) -> float:
    """Admissible ball radius around Id, by bisection along random rays.

    For each random unit-Frobenius symmetric direction U the largest t is
    found such that the solve at Id + t U keeps min c >= floor_ratio * max c;
    the radius is the minimum over rays.
    """
    _solver_for(family)  # raises on degenerate families
    rng = np.random.default_rng(seed)
    probe = family if family.eps_gamma is None else DirectionFamily(
        family.directions, family.lambda_scale, None)

    def feasible(R: np.ndarray) -> bool:
        try:
            sol = gamma_coefficients(R, probe)
        except GammaPositivityError:
            return False
        c = sol.weights
        return bool(np.min(c) >= floor_ratio * np.max(c))

    radius = np.inf
    for _ in range(n_rays):
        sym = rng.standard_normal((3, 3))
        U = 0.5 * (sym + sym.T)
        U /= np.linalg.norm(U, ord="fro")
        lo, hi = 0.0, 4.0
        while feasible(np.eye(3) + hi * U) and hi < 64.0:
            hi *= 2.0
        for _ in range(n_bisect):
            mid = 0.5 * (lo + hi)
            if feasible(np.eye(3) + mid * U):
                lo = mid
            else:
                hi = mid
        radius = min(radius, lo)
    if not np.isfinite(radius) or radius <= 0.0:
        raise GeometryError("family admits no positive ball radius")
    return float(radius)


# -- family files ----------------------------------------------------------------


def write_family(path, family: DirectionFamily) -> None:
    payload = {
        "lambda_scale": family.lambda_scale,
        "eps_gamma": family.eps_gamma,
        "directions": [
            {
                "k": [[x.numerator, x.denominator] for x in d.k],
                "k1": [[x.numerator, x.denominator] for x in d.k1],
                "k2": [[x.numerator, x.denominator] for x in d.k2],
            }
            for d in family.directions
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def read_family(path) -> DirectionFamily:
    payload = json.loads(Path(path).read_text())

    def vec(entry) -> Vec3:
        return tuple(Fraction(n, d) for n, d in entry)

    dirs = tuple(Direction(vec(e["k"]), vec(e["k1"]), vec(e["k2"]))
                 for e in payload["directions"])
    return DirectionFamily(dirs, int(payload["lambda_scale"]), payload.get("eps_gamma"))
