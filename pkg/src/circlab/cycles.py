"""Cycle events of a lifted trajectory and the empirical objects built on them.

The n-th cycle forming time is the first time after ``T_{n-1}`` at which the
lifted path has moved a full unit away from its level at ``T_{n-1}``; the
winding sign records the direction. Counts, empirical circulations, the
renewal view ``(xi_n, tau_n)`` and the empirical flow all derive from the
event log.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

FORWARD = 1
BACKWARD = -1


@dataclass(frozen=True, eq=False)
class CycleEventLog:
    forming_times: np.ndarray
    signs: np.ndarray
    horizon: float
    start: float = 0.0

    def __post_init__(self):
        times = np.asarray(self.forming_times, dtype=float)
        signs = np.asarray(self.signs, dtype=np.int8)
        if times.shape != signs.shape:
            raise ValueError("forming_times and signs must have equal length")
        if times.size and (np.any(np.diff(times) < 0) or times[-1] > self.horizon):
            raise ValueError("forming times must be non-decreasing and within the horizon")
        if not np.all(np.abs(signs) == 1):
            raise ValueError("signs must be +1 or -1")
        object.__setattr__(self, "forming_times", times)
        object.__setattr__(self, "signs", signs)

    @property
    def n_forward(self):
        return int(np.count_nonzero(self.signs > 0))

    @property
    def n_backward(self):
        return int(np.count_nonzero(self.signs < 0))

    @property
    def n_total(self):
        return int(self.signs.size)

    @property
    def net(self):
        return int(self.signs.sum(dtype=np.int64))

    @property
    def gaps(self):
        return np.diff(self.forming_times, prepend=0.0)

    def counts_at(self, t):
        """(N+_t, N-_t) for a shorter horizon ``t <= horizon``."""
        if t > self.horizon:
            raise ValueError("cannot count beyond the recorded horizon")
        k = np.searchsorted(self.forming_times, t, side="right")
        s = self.signs[:k]
        return int(np.count_nonzero(s > 0)), int(np.count_nonzero(s < 0))

    def truncate(self, t):
        k = np.searchsorted(self.forming_times, t, side="right")
        return CycleEventLog(self.forming_times[:k], self.signs[:k], t, self.start)


@dataclass(frozen=True)
class EmpiricalCirculations:
    j_plus: float
    j_minus: float
    j_net: float
    horizon: float


def _crossings_in_segment(t0, x0, t1, x1, ref, times, signs):
    tc, xc = t0, x0
    while True:
        if x1 >= ref + 1.0:
            level, sign = ref + 1.0, FORWARD
        elif x1 <= ref - 1.0:
            level, sign = ref - 1.0, BACKWARD
        else:
            return ref
        tc = tc + (level - xc) / (x1 - xc) * (t1 - tc)
        xc = level
        times.append(tc)
        signs.append(sign)
        ref = level


def detect_cycle_events(path, horizon=None):
    """Scan a recorded path and return its ``CycleEventLog``.

    The path is treated as piecewise linear between samples. After each
    forming time the reference level moves to the crossed level, so several
    events can fall inside one long segment.
    """
    t = np.asarray(path.times, dtype=float)
    x = np.asarray(path.positions, dtype=float)
    if t.size == 0:
        raise ValueError("empty path")
    horizon = t[-1] if horizon is None else horizon
    times, signs = [], []
    ref = x[0]
    i = 0
    n = x.size
    while i < n - 1:
        # next sample that leaves the open band around ref
        out = np.nonzero(np.abs(x[i + 1 :] - ref) >= 1.0)[0]
        if out.size == 0:
            break
        j = i + 1 + out[0]
        ref = _crossings_in_segment(t[j - 1], x[j - 1], t[j], x[j], ref, times, signs)
        i = j
    return CycleEventLog(np.array(times), np.array(signs, dtype=np.int8), float(horizon), float(x[0]))


def empirical_circulations(log):
    """J+_t = N+_t / t, J-_t = N-_t / t and their difference."""
    if log.horizon <= 0:
        raise ValueError("horizon must be positive")
    jp = log.n_forward / log.horizon
    jm = log.n_backward / log.horizon
    return EmpiricalCirculations(jp, jm, jp - jm, log.horizon)


@dataclass(frozen=True)
class RenewalView:
    signs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int8))
    gaps: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def empty(self):
        return self.signs.size == 0


EMPTY_VIEW = RenewalView()


def renewal_view(log):
    """Paired ``(xi_n, tau_n)``; ``EMPTY_VIEW`` when fewer than two events."""
    if log.n_total < 2:
        return EMPTY_VIEW
    return RenewalView(log.signs.copy(), log.gaps)


def empirical_flow(log):
    """2x2 empirical flow over states (+1, -1), with the chain started at +1.

    Row/column 0 is the forward state. ``Q[i, j] = #{n < N_t: xi_n = i, xi_{n+1} = j} / t``.
    """
    q = np.zeros((2, 2))
    if log.n_total == 0:
        return q
    chain = np.concatenate([[FORWARD], log.signs])
    idx = np.where(chain > 0, 0, 1)
    np.add.at(q, (idx[:-1], idx[1:]), 1.0)
    return q / log.horizon


def flow_contraction(q):
    """Column sums of the flow: the pair (J+_t, J-_t) it implies."""
    return q[:, 0].sum(), q[:, 1].sum()


def independence_permutation_test(signs, gaps, n_resamples=1000, rng=None, statistic="correlation"):
    """Permutation test of independence between winding sign and gap length.

    ``statistic`` is ``"correlation"`` (absolute point-biserial correlation) or
    ``"ks"`` (two-sample KS distance between the gap laws of the two signs).
    Returns ``(observed, p_value)``.
    """
    signs = np.asarray(signs)
    gaps = np.asarray(gaps, dtype=float)
    if rng is None:
        rng = np.random.default_rng(0)
    ind = (signs > 0).astype(float)

    if statistic == "correlation":
        centred = gaps - gaps.mean()
        norm = np.sqrt(centred @ centred) * ind.std() * np.sqrt(ind.size)
        if norm == 0:
            return 0.0, 1.0

        def stat(v):
            return abs(centred @ (v - v.mean())) / norm

    elif statistic == "ks":
        order = np.argsort(gaps, kind="stable")

        def stat(v):
            s = v[order]
            n1 = s.sum()
            n0 = s.size - n1
            if n1 == 0 or n0 == 0:
                return 0.0
            return np.max(np.abs(np.cumsum(s) / n1 - np.cumsum(1 - s) / n0))

    else:
        raise ValueError(f"unknown statistic {statistic!r}")

    observed = stat(ind)
    hits = 0
    for _ in range(n_resamples):
        if stat(rng.permutation(ind)) >= observed - 1e-15:
            hits += 1
    return float(observed), (hits + 1) / (n_resamples + 1)


def write_logs_csv(logs, path):
    """CSV with columns path_id, n, T_n, xi_n."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path_id", "n", "T_n", "xi_n"])
        for pid, log in enumerate(logs):
            for n, (t, s) in enumerate(zip(log.forming_times, log.signs), start=1):
                writer.writerow([pid, n, repr(float(t)), int(s)])
