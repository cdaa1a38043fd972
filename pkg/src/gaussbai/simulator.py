"""Seeded Monte-Carlo harness.

Each run draws unit-variance Gaussian rewards from K independent per-arm
streams derived from ``(master_seed, run_index)``: the s-th reward of arm a is
the same whatever strategy is being run, which makes comparisons between
strategies paired.  Runs are independent tasks; ``monte_carlo`` reduces them in
run-index order, so results do not depend on the number of workers.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kern
from .complexity import BanditInstance, DomainError, SolverError, compute_gaps
from .strategies import StrategySpec

log = logging.getLogger(__name__)

DEFAULT_MAX_STEPS = 10_000_000
_REWARD_BLOCK = 1024
_TRAJ_BLOCK = 4096


@dataclass(frozen=True)
class TrajectorySpec:
    """Record every step up to ``dense_until``, then every ``stride`` steps."""

    stride: int = 10
    dense_until: int = 1200

    def __post_init__(self):
        if self.stride < 1:
            raise DomainError(f"stride must be >= 1, got {self.stride}")
        if self.dense_until < 0:
            raise DomainError(f"dense_until must be >= 0, got {self.dense_until}")


@dataclass(frozen=True)
class SimulationConfig:
    instance: BanditInstance
    strategy: StrategySpec
    replications: int = 1
    master_seed: int = 0
    max_steps: int = DEFAULT_MAX_STEPS
    trajectory: TrajectorySpec | None = None
    track_region: bool = False

    def __post_init__(self):
        if self.replications < 1:
            raise DomainError(f"replications must be >= 1, got {self.replications}")
        if self.max_steps < self.instance.K:
            raise DomainError(f"max_steps={self.max_steps} is below K={self.instance.K}")

    @property
    def delta(self) -> float:
        return self.strategy.delta


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    frequencies: np.ndarray
    targets: np.ndarray


@dataclass(frozen=True)
class RunResult:
    tau: int
    recommended: int
    correct: bool
    truncated: bool
    trajectory: Trajectory | None = field(default=None, compare=False)
    # run diagnostics, minimised / maximised over every step of the run
    min_floor_slack: float = field(default=math.inf, compare=False)
    max_tracking_deviation: float = field(default=0.0, compare=False)
    left_region: bool = field(default=False, compare=False)
    counts: tuple[int, ...] = ()


@dataclass(frozen=True)
class AggregateStats:
    mean_tau: float
    std_tau: float
    error_rate: float
    truncation_count: int
    replications: int
    errors: int = 0
    left_region_count: int = 0


class RewardStreams:
    """Per-arm standard normal streams, extended in blocks on demand."""

    def __init__(self, master_seed: int, run_index: int, means):
        self.means = np.asarray(means, dtype=float)
        seq = np.random.SeedSequence([int(master_seed), int(run_index)])
        self._gens = [np.random.Generator(np.random.PCG64(s)) for s in seq.spawn(len(self.means))]
        self.rewards = np.empty((len(self.means), 0))

    def grow(self, length: int) -> np.ndarray:
        extra = length - self.rewards.shape[1]
        if extra > 0:
            block = np.stack([g.standard_normal(extra) for g in self._gens]) + self.means[:, None]
            self.rewards = np.ascontiguousarray(np.hstack([self.rewards, block]))
        return self.rewards


def run_once(config: SimulationConfig, run_index: int) -> RunResult:
    """Run one strategy instance to its stopping time (or ``max_steps``)."""
    inst = config.instance
    spec = config.strategy
    K = inst.K
    mu = inst.as_array()
    streams = RewardStreams(config.master_seed, run_index, mu)
    rewards = streams.grow(_REWARD_BLOCK)

    counts = np.zeros(K, dtype=np.int64)
    sums = np.zeros(K)
    cum_w = np.zeros(K)
    last_w = np.full(K, 1.0 / K)
    active = np.ones(K, dtype=np.int64)
    istate = np.zeros(kern.N_IS, dtype=np.int64)
    istate[kern.IS_PENDING] = -1
    istate[kern.IS_POS] = -1
    diag = np.zeros(kern.N_DG)
    diag[kern.DG_FLOOR_SLACK] = np.inf

    traj = config.trajectory
    cap = _TRAJ_BLOCK if traj else 1
    traj_t = np.zeros(cap, dtype=np.int64)
    traj_f = np.zeros((cap, K))
    traj_w = np.zeros((cap, K))

    fp, ip = spec.float_params(), spec.int_params()
    track_region = config.track_region and spec.kind == "ebs"
    while True:
        code = kern.advance(mu, rewards, counts, sums, cum_w, last_w, active, istate, diag,
                            fp, ip, config.max_steps, track_region, traj is not None,
                            traj.dense_until if traj else 0, traj.stride if traj else 1,
                            traj_t, traj_f, traj_w)
        if code == kern.RUN_NEED_REWARDS:
            rewards = streams.grow(2 * rewards.shape[1])
        elif code == kern.RUN_NEED_TRAJ:
            n = 2 * len(traj_t)
            traj_t = np.concatenate([traj_t, np.zeros(n - len(traj_t), dtype=np.int64)])
            traj_f = np.vstack([traj_f, np.zeros((n - len(traj_f), K))])
            traj_w = np.vstack([traj_w, np.zeros((n - len(traj_w), K))])
        elif code == kern.RUN_SOLVER_FAILURE:
            raise SolverError(f"weight solve failed during run {run_index} at t={istate[kern.IS_T]}")
        else:
            break

    truncated = code == kern.RUN_TRUNCATED
    rec = int(kern.recommend_arm(sums / np.maximum(counts, 1), active))
    n = int(istate[kern.IS_TRAJ_LEN])
    trajectory = Trajectory(traj_t[:n].copy(), traj_f[:n].copy(), traj_w[:n].copy()) if traj else None
    return RunResult(
        tau=int(istate[kern.IS_T]),
        recommended=rec,
        correct=(not truncated) and rec in compute_gaps(inst).best_arms,
        truncated=truncated,
        trajectory=trajectory,
        min_floor_slack=float(diag[kern.DG_FLOOR_SLACK]),
        max_tracking_deviation=float(diag[kern.DG_TRACK_DEV]),
        left_region=bool(diag[kern.DG_LEFT_REGION]),
        counts=tuple(int(c) for c in counts),
    )


def _run_chunk(config: SimulationConfig, indices) -> list[RunResult]:
    return [run_once(config, i) for i in indices]


def run_many(config: SimulationConfig, n_jobs: int = 1) -> list[RunResult]:
    """All runs of ``config`` in run-index order."""
    idx = list(range(config.replications))
    if n_jobs <= 1 or len(idx) < 2:
        return _run_chunk(config, idx)
    chunks = [idx[i::n_jobs] for i in range(n_jobs)]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        parts = list(pool.map(_run_chunk, [config] * len(chunks), chunks))
    out: list[RunResult | None] = [None] * len(idx)
    for chunk, res in zip(chunks, parts):
        for i, r in zip(chunk, res):
            out[i] = r
    return out


def aggregate(results) -> AggregateStats:
    """Mean and population std of tau over completed runs; truncations counted apart."""
    done = [r for r in results if not r.truncated]
    taus = sorted(r.tau for r in done)
    n = len(taus)
    mean = math.fsum(taus) / n if n else math.nan
    var = math.fsum((x - mean) ** 2 for x in taus) / n if n else math.nan
    errors = sum(1 for r in done if not r.correct)
    return AggregateStats(
        mean_tau=mean,
        std_tau=math.sqrt(var) if n else math.nan,
        error_rate=errors / n if n else 0.0,
        truncation_count=len(results) - n,
        replications=len(results),
        errors=errors,
        left_region_count=sum(1 for r in results if r.left_region),
    )


def monte_carlo(config: SimulationConfig, n_jobs: int = 1) -> AggregateStats:
    stats = aggregate(run_many(config, n_jobs))
    if stats.truncation_count:
        log.warning("%d of %d runs hit max_steps=%d", stats.truncation_count,
                    stats.replications, config.max_steps)
    return stats
