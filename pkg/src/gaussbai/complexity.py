"""Characteristic time and optimal sampling weights of Gaussian bandits.

For a unit-variance Gaussian bandit with a unique best arm the optimal
proportions solve a max-min problem whose inner part has the closed form
``g_value``.  The outer problem reduces to the root ``r`` of the convex,
decreasing scalar function ``phi``; weights and characteristic time then follow
in closed form.  ``solve_allocation`` finds the root by Newton's method from a
starting point that is provably below it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kern

DEFAULT_TOL = 1e-10
SIMPLEX_TOL = 1e-9


class DomainError(ValueError):
    """An argument lies outside the domain of the requested quantity."""


class SolverError(RuntimeError):
    """The Newton iteration failed to converge (should not happen for valid input)."""


@dataclass(frozen=True)
class BanditInstance:
    """Vector of arm means. Only the gaps matter to the solver, so any finite reals are accepted."""

    means: tuple[float, ...]

    def __post_init__(self):
        means = tuple(float(m) for m in self.means)
        if len(means) < 2:
            raise DomainError(f"need at least 2 arms, got {len(means)}")
        if not all(math.isfinite(m) for m in means):
            raise DomainError(f"means must be finite: {means}")
        object.__setattr__(self, "means", means)

    @classmethod
    def from_gaps(cls, gaps, top: float = 1.0) -> "BanditInstance":
        return cls(tuple(top - float(d) for d in gaps))

    @property
    def K(self) -> int:
        return len(self.means)

    def as_array(self) -> np.ndarray:
        return np.array(self.means, dtype=float)


@dataclass(frozen=True)
class GapVector:
    gaps: tuple[float, ...]
    best_arms: frozenset[int]
    delta_min: float | None
    delta_max: float

    @property
    def K(self) -> int:
        return len(self.gaps)

    @property
    def degenerate(self) -> bool:
        return len(self.best_arms) > 1

    @property
    def best_arm(self) -> int:
        return min(self.best_arms)

    @property
    def mean_sq_gap(self) -> float:
        """Average squared gap over the K-1 arms other than the best one."""
        return math.fsum(d * d for d in self.gaps) / (self.K - 1)

    def as_array(self) -> np.ndarray:
        return np.array(self.gaps, dtype=float)


@dataclass(frozen=True)
class OptimalAllocation:
    r: float
    weights: tuple[float, ...]
    characteristic_time: float
    degenerate: bool
    iterations: int = field(default=0, compare=False)

    @property
    def w_min(self) -> float:
        return min(self.weights)

    @property
    def w_max(self) -> float:
        return max(self.weights)


@dataclass(frozen=True)
class CharacteristicBounds:
    r_lo: float
    r_hi: float
    wmax_lo: float
    wmax_hi: float
    T_lo: float
    T_hi: float
    mean_sq_gap: float


def compute_gaps(instance: BanditInstance) -> GapVector:
    """Gap vector; best arms are detected by exact equality with the maximum."""
    top = max(instance.means)
    gaps = tuple(top - m for m in instance.means)
    best = frozenset(a for a, m in enumerate(instance.means) if m == top)
    positive = [d for d in gaps if d > 0]
    return GapVector(
        gaps=gaps,
        best_arms=best,
        delta_min=min(positive) if positive else None,
        delta_max=max(gaps),
    )


def _gap_vector(x) -> GapVector:
    return x if isinstance(x, GapVector) else compute_gaps(x)


def phi(gaps: GapVector, r: float) -> float:
    """Sum over suboptimal arms of 1/(r*gap^2 - 1)^2, minus one.

    Defined for r > 1/delta_min^2 on instances with a unique best arm.
    """
    gaps = _gap_vector(gaps)
    if gaps.degenerate:
        raise DomainError("phi is undefined for instances with several best arms")
    if not r > 1.0 / gaps.delta_min**2:
        raise DomainError(f"r={r} must exceed 1/delta_min^2={1.0 / gaps.delta_min**2}")
    return float(kern.phi_gaps(gaps.as_array(), float(r)))


def solve_allocation(instance: BanditInstance, tol: float = DEFAULT_TOL) -> OptimalAllocation:
    """Optimal weights, root r and characteristic time T of ``instance``.

    Instances with several best arms get the convention output: weights
    uniform over the best arms and ``T = inf`` with ``degenerate=True``.

    Raises
    ------
    SolverError
        If Newton's method hits the iteration cap or produces non-finite values.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    g = kern.gaps_from_means(instance.as_array())
    r, w, T, n_iter, status = kern.solve_gaps(g, float(tol))
    if status == kern.NO_CONVERGENCE:
        raise SolverError(f"Newton iteration did not converge for means={instance.means} (r={r}, {n_iter} iterations)")
    return OptimalAllocation(
        r=float(r),
        weights=tuple(float(x) for x in w),
        characteristic_time=float(T),
        degenerate=status == kern.DEGENERATE,
        iterations=int(n_iter),
    )


def g_value(instance: BanditInstance, v) -> float:
    """Inner value of the sample-complexity problem at proportions ``v``.

    Half the minimum, over arms a other than a best arm, of the harmonic-type
    product v*v_a/(v* + v_a) times the squared gap.  Zero when ties exist.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (instance.K,):
        raise DomainError(f"weight vector has shape {v.shape}, expected ({instance.K},)")
    if np.any(v < -SIMPLEX_TOL) or abs(v.sum() - 1.0) > SIMPLEX_TOL:
        raise DomainError(f"weights are not in the simplex: {v}")
    gaps = compute_gaps(instance)
    a_star = gaps.best_arm
    best = math.inf
    for a, d in enumerate(gaps.gaps):
        if a == a_star:
            continue
        s = v[a_star] + v[a]
        term = 0.0 if s == 0 else v[a_star] * v[a] / s * d * d
        best = min(best, term)
    return 0.5 * best


def characteristic_bounds(gaps: GapVector) -> CharacteristicBounds:
    gaps = _gap_vector(gaps)
    if gaps.degenerate:
        raise DomainError("bounds are undefined for instances with several best arms")
    K = gaps.K
    c = 1.0 + math.sqrt(K - 1)
    dmin2 = gaps.delta_min**2
    msq = gaps.mean_sq_gap
    return CharacteristicBounds(
        r_lo=max(2.0 / dmin2, c / msq),
        r_hi=c / dmin2,
        wmax_lo=1.0 / c,
        wmax_hi=0.5,
        T_lo=max(8.0 / dmin2, 4.0 * c / msq),
        T_hi=2.0 * c * c / dmin2,
        mean_sq_gap=msq,
    )


def kl_bernoulli(p: float, q: float) -> float:
    if not (0.0 < p < 1.0 and 0.0 < q < 1.0):
        raise DomainError(f"kl_bernoulli needs p, q in (0, 1), got p={p}, q={q}")
    return p * math.log(p / q) + (1.0 - p) * math.log((1.0 - p) / (1.0 - q))


def lower_bound(instance: BanditInstance, delta: float) -> float:
    """T(mu) * kl(delta, 1 - delta): expected draws needed by any delta-correct strategy."""
    return solve_allocation(instance).characteristic_time * kl_bernoulli(delta, 1.0 - delta)


def _simplex_grid(K: int, n: int) -> np.ndarray:
    """All points of the simplex with coordinates in {0, 1/n, ..., 1}."""
    # stars and bars: choose K-1 bar positions among n+K-1 slots
    bars = np.array(list(itertools.combinations(range(n + K - 1), K - 1)), dtype=np.int64)
    edges = np.hstack([np.full((len(bars), 1), -1), bars, np.full((len(bars), 1), n + K - 1)])
    return (np.diff(edges, axis=1) - 1) / n


def brute_force_weights(instance: BanditInstance, grid_step: float) -> np.ndarray:
    """Maximise ``g_value`` over a regular simplex grid by enumeration (K <= 4)."""
    if instance.K > 4:
        raise DomainError(f"brute force is limited to K <= 4, got K={instance.K}")
    if not 0 < grid_step <= 0.1:
        raise DomainError(f"grid_step must lie in (0, 0.1], got {grid_step}")
    n = int(round(1.0 / grid_step))
    pts = _simplex_grid(instance.K, n)
    gaps = compute_gaps(instance)
    a_star = gaps.best_arm
    d2 = np.array(gaps.gaps) ** 2
    vs = pts[:, [a_star]]
    denom = vs + pts
    with np.errstate(invalid="ignore", divide="ignore"):
        terms = np.where(denom > 0, vs * pts / denom, 0.0) * d2
    terms[:, a_star] = np.inf
    values = 0.5 * terms.min(axis=1)
    return pts[int(np.argmax(values))]
