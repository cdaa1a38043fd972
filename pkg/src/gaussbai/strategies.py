"""Sampling strategies and the shared GLR stopping rule.

A strategy is driven step by step: ``select`` the next arm, ``observe`` its
reward, check ``should_stop``, and finally ``recommend`` the empirical best
arm.  All arm-selection logic lives in compiled kernels that the Monte-Carlo
loop in ``simulator`` calls directly, so stepping a ``Strategy`` by hand and
running the compiled loop on the same rewards give the same arm sequence.

Strategy identifiers: ``ebs-c``, ``ebs-d``, ``tas-c``, ``tas-d``, ``racing``,
``lucb++``, ``uniform``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels as kern
from .complexity import DEFAULT_TOL, DomainError, SolverError
from .confidence import RadiusKind, RadiusScheme


class TrackingMode(str, Enum):
    C = "C"
    D = "D"

    @property
    def code(self) -> int:
        return kern.TRACK_C if self is TrackingMode.C else kern.TRACK_D


class ThresholdKind(str, Enum):
    EMPIRICAL = "empirical"
    THEORETICAL = "theoretical"


@dataclass(frozen=True)
class ThresholdSpec:
    """Stopping threshold beta(t, delta).

    empirical:   log((log t + 1) / delta)
    theoretical: log(R * t**alpha / delta)
    """

    variant: ThresholdKind = ThresholdKind.EMPIRICAL
    delta: float = 0.1
    R: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "variant", ThresholdKind(self.variant))
        if not 0.0 < self.delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if self.variant is ThresholdKind.THEORETICAL:
            if not self.R > 0:
                raise DomainError(f"R must be positive, got {self.R}")
            if not 1.0 <= self.alpha <= 2.0:
                raise DomainError(f"alpha must lie in [1, 2], got {self.alpha}")

    @property
    def code(self) -> int:
        if self.variant is ThresholdKind.THEORETICAL:
            return kern.THRESHOLD_THEORETICAL
        return kern.THRESHOLD_EMPIRICAL

    def beta(self, t: int) -> float:
        return float(kern.threshold(int(t), self.delta, self.code, self.R, self.alpha))


_KIND_CODES = {
    "ebs": kern.EBS,
    "tas": kern.TAS,
    "racing": kern.RACING,
    "lucb++": kern.LUCB,
    "uniform": kern.UNIFORM,
}

STRATEGY_IDS = ("ebs-c", "ebs-d", "tas-c", "tas-d", "racing", "lucb++", "uniform")


@dataclass(frozen=True)
class StrategySpec:
    """Everything needed to instantiate a strategy for one run."""

    kind: str
    threshold: ThresholdSpec = field(default_factory=ThresholdSpec)
    tracking: TrackingMode = TrackingMode.C
    scheme: RadiusScheme = field(default_factory=RadiusScheme)
    clamp: bool = False
    racing_test_all: bool = False
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise DomainError(f"unknown strategy kind {self.kind!r}")
        object.__setattr__(self, "tracking", TrackingMode(self.tracking))

    @classmethod
    def from_id(cls, sid: str, **kwargs) -> "StrategySpec":
        sid = sid.lower()
        if sid not in STRATEGY_IDS:
            raise DomainError(f"unknown strategy id {sid!r}; expected one of {', '.join(STRATEGY_IDS)}")
        if sid[-2:] in ("-c", "-d"):
            kwargs.setdefault("tracking", TrackingMode(sid[-1].upper()))
            sid = sid[:-2]
        return cls(kind=sid, **kwargs)

    @property
    def id(self) -> str:
        if self.kind in ("ebs", "tas"):
            return f"{self.kind}-{self.tracking.value.lower()}"
        return self.kind

    @property
    def delta(self) -> float:
        return self.threshold.delta

    def float_params(self) -> np.ndarray:
        fp = np.zeros(kern.N_FP)
        fp[kern.FP_DELTA] = self.threshold.delta
        fp[kern.FP_GAMMA] = self.scheme.gamma
        fp[kern.FP_R] = self.threshold.R
        fp[kern.FP_ALPHA] = self.threshold.alpha
        fp[kern.FP_TOL] = self.tol
        return fp

    def int_params(self) -> np.ndarray:
        ip = np.zeros(kern.N_IP, dtype=np.int64)
        ip[kern.IP_STRATEGY] = _KIND_CODES[self.kind]
        ip[kern.IP_TRACKING] = self.tracking.code
        ip[kern.IP_RADIUS] = self.scheme.variant.code
        ip[kern.IP_THRESHOLD] = self.threshold.code
        ip[kern.IP_CLAMP] = int(self.clamp)
        ip[kern.IP_RACE_ALL] = int(self.racing_test_all)
        return ip


@dataclass
class StrategyState:
    """Mutable per-run state. Confined to a single run; never share it."""

    counts: np.ndarray
    sums: np.ndarray
    cum_target_weights: np.ndarray
    last_target_weights: np.ndarray
    active: np.ndarray
    istate: np.ndarray

    @classmethod
    def initial(cls, K: int) -> "StrategyState":
        if K < 2:
            raise DomainError(f"need at least 2 arms, got {K}")
        istate = np.zeros(kern.N_IS, dtype=np.int64)
        istate[kern.IS_PENDING] = -1
        istate[kern.IS_POS] = -1
        return cls(
            counts=np.zeros(K, dtype=np.int64),
            sums=np.zeros(K),
            cum_target_weights=np.zeros(K),
            last_target_weights=np.full(K, 1.0 / K),
            active=np.ones(K, dtype=np.int64),
            istate=istate,
        )

    @classmethod
    def from_samples(cls, counts, empirical_means) -> "StrategyState":
        """State with given counts and means (cumulative targets set to the counts)."""
        counts = np.asarray(counts, dtype=np.int64)
        st = cls.initial(len(counts))
        st.counts[:] = counts
        st.sums[:] = np.asarray(empirical_means, dtype=float) * counts
        st.cum_target_weights[:] = counts
        st.istate[kern.IS_T] = int(counts.sum())
        return st

    @property
    def K(self) -> int:
        return len(self.counts)

    @property
    def t(self) -> int:
        return int(self.istate[kern.IS_T])

    @property
    def round(self) -> int:
        return int(self.istate[kern.IS_ROUND])

    @property
    def active_set(self) -> frozenset[int]:
        return frozenset(int(a) for a in np.flatnonzero(self.active))

    @property
    def empirical_means(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), np.nan)

    def record(self, arm: int, reward: float) -> None:
        self.sums[arm] += reward
        self.counts[arm] += 1
        self.istate[kern.IS_T] += 1

    def _require_sampled(self, *arms):
        for a in arms if arms else range(self.K):
            if self.counts[a] < 1:
                raise DomainError(f"arm {a} has not been sampled yet")


def glr_pair(state: StrategyState, a: int, b: int) -> float:
    """Signed Gaussian GLR statistic of 'a beats b'; antisymmetric in (a, b)."""
    state._require_sampled(a, b)
    m = state.empirical_means
    return float(kern.glr_pair(float(state.counts[a]), float(state.counts[b]), m[a], m[b]))


def glr_stat(state: StrategyState) -> float:
    """max over a of min over b != a of the pairwise statistic."""
    state._require_sampled()
    return float(kern.glr_stat(state.counts, state.sums / state.counts))


def should_stop(state: StrategyState, threshold: ThresholdSpec) -> bool:
    return glr_stat(state) > threshold.beta(state.t)


def recommend(state: StrategyState) -> int:
    """Empirical best arm among those still active, lowest index on ties."""
    return int(kern.recommend_arm(state.empirical_means, state.active))


def track_select(state: StrategyState, targets, mode: TrackingMode) -> int:
    """Arm lagging furthest behind its target.

    C mode compares counts with ``state.cum_target_weights``, which must
    already include ``targets``; D mode compares them with t * targets.
    Ties go to the lowest index.
    """
    targets = np.asarray(targets, dtype=float)
    if TrackingMode(mode) is TrackingMode.D:
        return int(kern.track_argmin(state.counts, state.t * targets))
    return int(kern.track_argmin(state.counts, state.cum_target_weights))


def _step(state: StrategyState, spec: StrategySpec) -> int:
    arm = int(kern.select_arm(state.counts, state.sums, state.cum_target_weights,
                              state.last_target_weights, state.active, state.istate,
                              spec.float_params(), spec.int_params()))
    if arm < 0:
        raise SolverError(f"weight solve failed at t={state.t}, means={state.empirical_means.tolist()}")
    return arm


def ebs_step(state: StrategyState, scheme: RadiusScheme, mode: TrackingMode, clamp: bool = False) -> int:
    """Exploration-biased sampling: one initial sweep, then track biased weights."""
    return _step(state, StrategySpec("ebs", tracking=mode, scheme=scheme, clamp=clamp))


def tas_step(state: StrategyState, mode: TrackingMode) -> int:
    """Track-and-Stop with forced exploration of arms below sqrt(t) - K/2."""
    return _step(state, StrategySpec("tas", tracking=mode))


def racing_step(state: StrategyState, threshold: ThresholdSpec | None = None, test_all: bool = False) -> int:
    """Next arm of the current round; closes the round (with elimination) when it is over."""
    return _step(state, StrategySpec("racing", threshold=threshold or ThresholdSpec(),
                                     racing_test_all=test_all))


def racing_round_end(state: StrategyState, threshold: ThresholdSpec, test_all: bool = False) -> frozenset[int]:
    """Apply the elimination test to the empirically worst active arm(s); return removed arms."""
    state._require_sampled()
    before = state.active_set
    spec = StrategySpec("racing", threshold=threshold, racing_test_all=test_all)
    kern.racing_eliminate(state.t, state.counts, state.sums / state.counts, state.active,
                          spec.float_params(), spec.int_params())
    return before - state.active_set


def lucb_step(state: StrategyState, delta: float) -> tuple[int, int]:
    """Empirical best arm and the highest upper index among the others."""
    state._require_sampled()
    h, l = kern.lucb_pair(state.counts, state.sums / state.counts, float(delta))
    return int(h), int(l)


def lucb_bonus(count: int, delta: float, K: int) -> float:
    """sqrt(3/N * log((log N + 1) * 2K / delta)); the +1 keeps N = 1 well defined."""
    return math.sqrt(3.0 / count * math.log((math.log(count) + 1.0) * 2 * K / delta))


class Strategy:
    """Step-by-step driver around a ``StrategySpec``."""

    def __init__(self, spec: StrategySpec, K: int):
        self.spec = spec
        self.state = StrategyState.initial(K)

    @property
    def t(self) -> int:
        return self.state.t

    def select(self) -> int:
        return _step(self.state, self.spec)

    def observe(self, arm: int, reward: float) -> None:
        self.state.record(arm, reward)

    def should_stop(self) -> bool:
        st = self.state
        if st.t < st.K:
            return False
        if self.spec.kind == "racing":
            z = kern.glr_stat_active(st.counts, st.sums / st.counts, st.active)
            return bool(z > self.spec.threshold.beta(st.t))
        return should_stop(st, self.spec.threshold)

    def recommend(self) -> int:
        return recommend(self.state)
