"""Product confidence regions and exploration-biased weights.

The exploration-biased bandit is the point of a box region whose optimal
weight vector has the largest minimal component.  ``exploration_biased_weights``
finds it exactly with at most K weight solves; ``brute_force_eb_bandit`` is a
grid search kept as an independent check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels as kern
from .complexity import (
    DEFAULT_TOL,
    BanditInstance,
    DomainError,
    SolverError,
    solve_allocation,
)


class RadiusKind(str, Enum):
    THEORETICAL = "theoretical"
    EMPIRICAL = "empirical"

    @property
    def code(self) -> int:
        return kern.RADIUS_THEORETICAL if self is RadiusKind.THEORETICAL else kern.RADIUS_EMPIRICAL


@dataclass(frozen=True)
class RadiusScheme:
    """Confidence half-width as a function of the sample count.

    theoretical: 2*sqrt(log(4s/gamma)/s), time-uniform at level gamma.
    empirical:   sqrt(log(s/gamma)/s), the tighter choice used in experiments.
    """

    variant: RadiusKind = RadiusKind.EMPIRICAL
    gamma: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "variant", RadiusKind(self.variant))
        if not 0.0 < self.gamma < 1.0:
            raise DomainError(f"gamma must lie in (0, 1), got {self.gamma}")

    def per_arm(self, K: int) -> "RadiusScheme":
        return RadiusScheme(self.variant, self.gamma / K)


@dataclass(frozen=True)
class ConfidenceRegion:
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        for a, (lo, hi) in enumerate(ivs):
            if not lo <= hi:
                raise DomainError(f"interval {a} has lo={lo} > hi={hi}")
        if len(ivs) < 2:
            raise DomainError("a region needs at least 2 arms")
        object.__setattr__(self, "intervals", ivs)

    @property
    def K(self) -> int:
        return len(self.intervals)

    @property
    def lo(self) -> np.ndarray:
        return np.array([iv[0] for iv in self.intervals])

    @property
    def hi(self) -> np.ndarray:
        return np.array([iv[1] for iv in self.intervals])

    @property
    def separated(self) -> bool:
        """True when no single point lies in every interval."""
        return self.hi.min() < self.lo.max()

    def contains(self, means, atol: float = 0.0) -> bool:
        m = np.asarray(means, dtype=float)
        return bool(np.all(m >= self.lo - atol) and np.all(m <= self.hi + atol))


@dataclass(frozen=True)
class BiasedAllocation:
    biased_bandit: BanditInstance
    weights: tuple[float, ...]
    uniform: bool

    @property
    def w_min(self) -> float:
        return min(self.weights)


def radius(scheme: RadiusScheme, count: int) -> float:
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    return float(kern.radius(int(count), scheme.gamma, scheme.variant.code))


def build_region(empirical_means, counts, scheme: RadiusScheme, K: int | None = None,
                 clamp: bool = False) -> ConfidenceRegion:
    """Intervals mean_a +- C_{gamma/K}(N_a); the gamma/K split is applied here.

    Intervals are left unclamped unless ``clamp`` is set, in which case both
    endpoints are projected onto [0, 1].
    """
    means = np.asarray(empirical_means, dtype=float)
    counts = np.asarray(counts, dtype=np.int64)
    K = len(means) if K is None else K
    if means.shape != (K,) or counts.shape != (K,):
        raise DomainError("means and counts must both have length K")
    if np.any(counts < 1):
        raise DomainError(f"every arm must be sampled at least once, counts={counts.tolist()}")
    lo, hi = kern.build_region(means, counts, scheme.gamma, scheme.variant.code, clamp)
    return ConfidenceRegion(tuple(zip(lo.tolist(), hi.tolist())))


def exploration_biased_weights(region: ConfidenceRegion, tol: float = DEFAULT_TOL) -> BiasedAllocation:
    """Point of ``region`` maximising the minimal optimal weight, and its weights.

    When all intervals share a point the answer is the constant bandit at the
    smallest upper bound with uniform weights.  Otherwise one candidate is
    built per arm whose upper end exceeds the largest lower end (that arm at
    its upper end, the others pushed down to max(lower end, smallest upper
    end)); the candidate with the largest minimal weight wins, ties going to
    the lowest arm index.
    """
    mu, w, uniform, status = kern.eb_weights(region.lo, region.hi, float(tol))
    if status == kern.NO_CONVERGENCE:
        raise SolverError(f"weight solve failed inside region {region.intervals}")
    return BiasedAllocation(
        biased_bandit=BanditInstance(tuple(mu.tolist())),
        weights=tuple(w.tolist()),
        uniform=bool(uniform),
    )


def _grid_axis(lo: float, hi: float, step: float) -> np.ndarray:
    # shared lattice k*step so that different arms can hit common points
    k0 = math.ceil(lo / step - 1e-9)
    k1 = math.floor(hi / step + 1e-9)
    pts = [k * step for k in range(k0, k1 + 1) if lo <= k * step <= hi]
    return np.unique(np.array([lo, *pts, hi]))


def brute_force_eb_bandit(region: ConfidenceRegion, grid_step: float) -> BanditInstance:
    """Grid search for the point of ``region`` with the largest minimal weight (K <= 3).

    Points with several best arms score their convention weights, i.e. 1/K on
    the constant bandit and 0 otherwise.
    """
    if region.K > 3:
        raise DomainError(f"grid oracle is limited to K <= 3, got K={region.K}")
    if not 0 < grid_step <= 0.05:
        raise DomainError(f"grid_step must lie in (0, 0.05], got {grid_step}")
    axes = [_grid_axis(lo, hi, grid_step) for lo, hi in region.intervals]
    best_point, best_score = None, -1.0
    for point in itertools.product(*axes):
        score = solve_allocation(BanditInstance(point)).w_min
        if score > best_score:
            best_point, best_score = point, score
    return BanditInstance(best_point)
