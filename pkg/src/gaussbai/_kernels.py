"""Compiled numeric kernels shared by the public API and the simulation loop.

Everything here works on plain float64/int64 arrays so that a whole run can be
executed inside numba.  Public wrappers live in ``complexity``, ``confidence``,
``strategies`` and ``simulator``; they validate inputs and translate status
codes into exceptions.
"""

import numpy as np
from numba import njit

# solver status
OK = 0
DEGENERATE = 1
NO_CONVERGENCE = 2

MAX_NEWTON_ITER = 200

# strategy codes
EBS = 0
TAS = 1
RACING = 2
LUCB = 3
UNIFORM = 4

TRACK_C = 0
TRACK_D = 1

RADIUS_EMPIRICAL = 0
RADIUS_THEORETICAL = 1

THRESHOLD_EMPIRICAL = 0
THRESHOLD_THEORETICAL = 1

# layout of the float parameter vector
FP_DELTA, FP_GAMMA, FP_R, FP_ALPHA, FP_TOL = 0, 1, 2, 3, 4
N_FP = 5
# layout of the int parameter vector
IP_STRATEGY, IP_TRACKING, IP_RADIUS, IP_THRESHOLD, IP_CLAMP, IP_RACE_ALL = 0, 1, 2, 3, 4, 5
N_IP = 6
# layout of the int state vector
IS_T, IS_ROUND, IS_POS, IS_PENDING, IS_TRAJ_LEN = 0, 1, 2, 3, 4
N_IS = 5
# layout of the diagnostics vector
DG_FLOOR_SLACK, DG_TRACK_DEV, DG_LEFT_REGION = 0, 1, 2
N_DG = 3

# run loop return codes
RUN_STOPPED = 0
RUN_NEED_REWARDS = 1
RUN_NEED_TRAJ = 2
RUN_TRUNCATED = 3
RUN_SOLVER_FAILURE = 4


@njit(cache=True)
def gaps_from_means(means):
    return means.max() - means


@njit(cache=True)
def phi_gaps(gaps, r):
    out = -1.0
    for d in gaps:
        if d > 0.0:
            x = r * d * d - 1.0
            out += 1.0 / (x * x)
    return out


@njit(cache=True)
def solve_gaps(gaps, tol):
    """Return ``(r, w, T, n_iter, status)`` for a gap vector.

    Best arms are the exact zeros of ``gaps``.  With two or more of them the
    convention output is returned (uniform over best arms, ``T = inf``).
    """
    K = gaps.shape[0]
    w = np.zeros(K)
    n_best = 0
    a_star = -1
    dmin = np.inf
    sq = 0.0
    for a in range(K):
        d = gaps[a]
        if d == 0.0:
            n_best += 1
            if a_star < 0:
                a_star = a
        else:
            if d < dmin:
                dmin = d
            sq += d * d
    if n_best != 1:
        for a in range(K):
            if gaps[a] == 0.0:
                w[a] = 1.0 / n_best
        return np.nan, w, np.inf, 0, DEGENERATE

    if K == 2:
        w[0] = 0.5
        w[1] = 0.5
        return 2.0 / (dmin * dmin), w, 8.0 / (dmin * dmin), 0, OK

    # phi is convex decreasing: starting below the root, iterates stay below it
    r = max(2.0 / (dmin * dmin), (1.0 + np.sqrt(K - 1.0)) / (sq / (K - 1.0)))
    it = 0
    while True:
        phi = -1.0
        dphi = 0.0
        for a in range(K):
            if a != a_star:
                d2 = gaps[a] * gaps[a]
                x = r * d2 - 1.0
                phi += 1.0 / (x * x)
                dphi -= 2.0 * d2 / (x * x * x)
        if not (np.isfinite(phi) and np.isfinite(dphi)) or it >= MAX_NEWTON_ITER:
            return r, w, np.inf, it, NO_CONVERGENCE
        if abs(phi) < tol:
            break
        r -= phi / dphi
        it += 1

    s = 1.0
    for a in range(K):
        if a != a_star:
            s += 1.0 / (r * gaps[a] * gaps[a] - 1.0)
    w1 = 1.0 / s
    for a in range(K):
        if a == a_star:
            w[a] = w1
        else:
            w[a] = w1 / (r * gaps[a] * gaps[a] - 1.0)
    return r, w, 2.0 * r / w1, it, OK


@njit(cache=True)
def radius(count, gamma, kind):
    s = float(count)
    if kind == RADIUS_THEORETICAL:
        return 2.0 * np.sqrt(np.log(4.0 * s / gamma) / s)
    return np.sqrt(np.log(s / gamma) / s)


@njit(cache=True)
def build_region(means, counts, gamma, kind, clamp):
    K = means.shape[0]
    lo = np.empty(K)
    hi = np.empty(K)
    g = gamma / K
    for a in range(K):
        c = radius(counts[a], g, kind)
        lo[a] = means[a] - c
        hi[a] = means[a] + c
        if clamp:
            lo[a] = min(max(lo[a], 0.0), 1.0)
            hi[a] = min(max(hi[a], 0.0), 1.0)
    return lo, hi


@njit(cache=True)
def eb_weights(lo, hi, tol):
    """Exploration-biased bandit and its optimal weights over a box region.

    Returns ``(mu_tilde, w, uniform, status)``; ``status`` is NO_CONVERGENCE
    only if a candidate solve failed.
    """
    K = lo.shape[0]
    max_lb = lo.max()
    min_ub = hi.min()
    if min_ub >= max_lb:
        return np.full(K, min_ub), np.full(K, 1.0 / K), True, OK

    best_mu = np.empty(K)
    best_w = np.zeros(K)
    best_min = 0.0
    found = False
    cand = np.empty(K)
    for a in range(K):
        if not hi[a] > max_lb:
            continue
        for b in range(K):
            cand[b] = max(lo[b], min_ub)
        cand[a] = hi[a]
        _, w, _, _, st = solve_gaps(cand.max() - cand, tol)
        if st == NO_CONVERGENCE:
            return best_mu, best_w, False, NO_CONVERGENCE
        score = w.min() if st == OK else 0.0
        if not found or score > best_min:
            found = True
            best_min = score
            best_mu[:] = cand
            best_w[:] = w
    return best_mu, best_w, False, OK


@njit(cache=True)
def glr_pair(na, nb, ma, mb):
    d = ma - mb
    return 0.5 * na * nb / (na + nb) * d * abs(d)


@njit(cache=True)
def glr_stat(counts, means):
    K = counts.shape[0]
    z = -np.inf
    for a in range(K):
        m = np.inf
        for b in range(K):
            if b != a:
                v = glr_pair(float(counts[a]), float(counts[b]), means[a], means[b])
                if v < m:
                    m = v
        if m > z:
            z = m
    return z


@njit(cache=True)
def glr_stat_active(counts, means, active):
    """GLR statistic restricted to arms still in the race."""
    K = counts.shape[0]
    z = -np.inf
    for a in range(K):
        if not active[a]:
            continue
        m = np.inf
        for b in range(K):
            if b != a and active[b]:
                v = glr_pair(float(counts[a]), float(counts[b]), means[a], means[b])
                if v < m:
                    m = v
        if m > z:
            z = m
    return z


@njit(cache=True)
def stop_statistic(counts, means, active, strategy):
    if strategy == RACING:
        return glr_stat_active(counts, means, active)
    return glr_stat(counts, means)


@njit(cache=True)
def threshold(t, delta, kind, R, alpha):
    if kind == THRESHOLD_THEORETICAL:
        return np.log(R * float(t) ** alpha / delta)
    return np.log((np.log(float(t)) + 1.0) / delta)


@njit(cache=True)
def argmax_first(x):
    best = 0
    for a in range(1, x.shape[0]):
        if x[a] > x[best]:
            best = a
    return best


@njit(cache=True)
def recommend_arm(means, active):
    """Empirical best among active arms, lowest index on ties."""
    best = -1
    for a in range(means.shape[0]):
        if active[a] and (best < 0 or means[a] > means[best]):
            best = a
    return best


@njit(cache=True)
def track_argmin(counts, ref):
    K = counts.shape[0]
    best = 0
    best_v = counts[0] - ref[0]
    for a in range(1, K):
        v = counts[a] - ref[a]
        if v < best_v:
            best = a
            best_v = v
    return best


@njit(cache=True)
def tracked_arm(t, counts, cum_w, w, tracking):
    if tracking == TRACK_D:
        return track_argmin(counts, float(t) * w)
    return track_argmin(counts, cum_w)


@njit(cache=True)
def forced_arm(t, counts):
    """Least-sampled arm among those below sqrt(t) - K/2, or -1."""
    K = counts.shape[0]
    floor = np.sqrt(float(t)) - K / 2.0
    arm = -1
    for a in range(K):
        if counts[a] < floor and (arm < 0 or counts[a] < counts[arm]):
            arm = a
    return arm


@njit(cache=True)
def lucb_index(mean, count, delta, K):
    n = float(count)
    return mean + np.sqrt(3.0 / n * np.log((np.log(n) + 1.0) * 2.0 * K / delta))


@njit(cache=True)
def lucb_pair(counts, means, delta):
    K = counts.shape[0]
    h = argmax_first(means)
    l = -1
    best_u = -np.inf
    for a in range(K):
        if a == h:
            continue
        u = lucb_index(means[a], counts[a], delta, K)
        if l < 0 or u > best_u:
            l = a
            best_u = u
    return h, l


@njit(cache=True)
def racing_eliminate(t, counts, means, active, fp, ip):
    """End-of-round elimination test; mutates ``active`` and returns #eliminated.

    The last two arms of the race are never eliminated: they keep being
    sampled alternately until the global stopping rule fires.
    """
    K = counts.shape[0]
    n_active = 0
    for a in range(K):
        n_active += active[a]
    if n_active <= 2:
        return 0
    best = -1
    worst_mean = np.inf
    for a in range(K):
        if active[a]:
            if best < 0 or means[a] > means[best]:
                best = a
            if means[a] < worst_mean:
                worst_mean = means[a]
    beta = threshold(t, fp[FP_DELTA], ip[IP_THRESHOLD], fp[FP_R], fp[FP_ALPHA])
    removed = 0
    for b in range(K):
        if not active[b] or b == best:
            continue
        if ip[IP_RACE_ALL] == 0 and means[b] != worst_mean:
            continue
        z = glr_pair(float(counts[best]), float(counts[b]), means[best], means[b])
        if z > beta and n_active - removed > 2:
            active[b] = 0
            removed += 1
    return removed


@njit(cache=True)
def racing_next(active, pos):
    """Next active arm after ``pos`` in index order, or -1 at the end of a round."""
    for a in range(pos + 1, active.shape[0]):
        if active[a]:
            return a
    return -1


@njit(cache=True)
def select_arm(counts, sums, cum_w, last_w, active, istate, fp, ip):
    """Choose the next arm and update target-weight bookkeeping.

    Returns the arm index, or -1 when an optimal-weight solve failed.
    """
    K = counts.shape[0]
    t = istate[IS_T]
    strategy = ip[IP_STRATEGY]

    if t < K:
        last_w[:] = 1.0 / K
        cum_w += last_w
        if strategy == RACING:
            istate[IS_ROUND] = 1
            istate[IS_POS] = t
        return t

    means = sums / counts
    tol = fp[FP_TOL]

    if strategy == EBS:
        lo, hi = build_region(means, counts, fp[FP_GAMMA], ip[IP_RADIUS], ip[IP_CLAMP] != 0)
        _, w, _, st = eb_weights(lo, hi, tol)
        if st == NO_CONVERGENCE:
            return -1
        last_w[:] = w
        cum_w += w
        return tracked_arm(t, counts, cum_w, w, ip[IP_TRACKING])

    if strategy == TAS:
        _, w, _, _, st = solve_gaps(gaps_from_means(means), tol)
        if st == NO_CONVERGENCE:
            return -1
        last_w[:] = w
        cum_w += w
        arm = forced_arm(t, counts)
        if arm >= 0:
            return arm
        return tracked_arm(t, counts, cum_w, w, ip[IP_TRACKING])

    if strategy == RACING:
        arm = racing_next(active, istate[IS_POS])
        if arm < 0:
            racing_eliminate(t, counts, means, active, fp, ip)
            istate[IS_ROUND] += 1
            arm = racing_next(active, -1)
        istate[IS_POS] = arm
        n_active = active.sum()
        for a in range(K):
            last_w[a] = 1.0 / n_active if active[a] else 0.0
        cum_w += last_w
        return arm

    if strategy == LUCB:
        arm = istate[IS_PENDING]
        if arm >= 0:
            istate[IS_PENDING] = -1
        else:
            h, l = lucb_pair(counts, means, fp[FP_DELTA])
            last_w[:] = 0.0
            last_w[h] = 0.5
            last_w[l] = 0.5
            istate[IS_PENDING] = l
            arm = h
        cum_w += last_w
        return arm

    # uniform sampling
    last_w[:] = 1.0 / K
    cum_w += last_w
    return track_argmin(counts, np.zeros(K))


@njit(cache=True)
def in_region(true_means, counts, sums, gamma, kind):
    means = sums / counts
    lo, hi = build_region(means, counts, gamma, kind, False)
    for a in range(true_means.shape[0]):
        if true_means[a] < lo[a] or true_means[a] > hi[a]:
            return False
    return True


@njit(cache=True)
def _record(t, counts, last_w, istate, traj_t, traj_freq, traj_w):
    i = istate[IS_TRAJ_LEN]
    traj_t[i] = t
    for a in range(counts.shape[0]):
        traj_freq[i, a] = counts[a] / t
        traj_w[i, a] = last_w[a]
    istate[IS_TRAJ_LEN] = i + 1


@njit(cache=True)
def advance(true_means, rewards, counts, sums, cum_w, last_w, active, istate, diag,
            fp, ip, max_steps, track_region, traj_on, dense_until, stride,
            traj_t, traj_freq, traj_w):
    """Run a strategy until it stops or needs the caller's attention.

    The run is resumable: every return happens at a step boundary, so the
    caller can grow ``rewards`` or the trajectory buffers and call again.
    """
    K = counts.shape[0]
    L = rewards.shape[1]
    cap = traj_t.shape[0]
    while True:
        t = istate[IS_T]
        if traj_on and istate[IS_TRAJ_LEN] + 2 > cap:
            return RUN_NEED_TRAJ
        if t >= K:
            if track_region and diag[DG_LEFT_REGION] == 0.0:
                if not in_region(true_means, counts, sums, fp[FP_GAMMA], ip[IP_RADIUS]):
                    diag[DG_LEFT_REGION] = 1.0
            z = stop_statistic(counts, sums / counts, active, ip[IP_STRATEGY])
            if z > threshold(t, fp[FP_DELTA], ip[IP_THRESHOLD], fp[FP_R], fp[FP_ALPHA]):
                if traj_on and (istate[IS_TRAJ_LEN] == 0 or traj_t[istate[IS_TRAJ_LEN] - 1] != t):
                    _record(t, counts, last_w, istate, traj_t, traj_freq, traj_w)
                return RUN_STOPPED
        if t >= max_steps:
            if traj_on and t > 0 and (istate[IS_TRAJ_LEN] == 0 or traj_t[istate[IS_TRAJ_LEN] - 1] != t):
                _record(t, counts, last_w, istate, traj_t, traj_freq, traj_w)
            return RUN_TRUNCATED
        for a in range(K):
            if counts[a] >= L:
                return RUN_NEED_REWARDS

        arm = select_arm(counts, sums, cum_w, last_w, active, istate, fp, ip)
        if arm < 0:
            return RUN_SOLVER_FAILURE
        sums[arm] += rewards[arm, counts[arm]]
        counts[arm] += 1
        t += 1
        istate[IS_T] = t

        floor = 2.0 / K * np.sqrt(float(t)) - K
        for a in range(K):
            slack = counts[a] - floor
            if slack < diag[DG_FLOOR_SLACK]:
                diag[DG_FLOOR_SLACK] = slack
            dev = abs(counts[a] - cum_w[a])
            if dev > diag[DG_TRACK_DEV]:
                diag[DG_TRACK_DEV] = dev

        if traj_on and (t <= dense_until or t % stride == 0):
            _record(t, counts, last_w, istate, traj_t, traj_freq, traj_w)
