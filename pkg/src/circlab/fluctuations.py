"""Monte Carlo checks of the cycle symmetry and the fluctuation identities.

Every test takes plain sample arrays (first-cycle times and signs, net
counts, count pairs, entropy samples) and returns a ``VerificationReport``.
Confidence intervals come from the nonparametric bootstrap with a dedicated
resampling stream; grid-wise tests use Bonferroni-corrected normal intervals
built from the bootstrap standard error.

Throughout, ``W_t = N+_t - N-_t`` is the net cycle count.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from . import rng as streams
from .cycles import independence_permutation_test
from .reports import INCONCLUSIVE, PASS, VerificationReport, decide
from .stats import (
    DEFAULT_ALPHA,
    DEFAULT_RESAMPLES,
    Histogram,
    bonferroni_z,
    ks_two_sample,
    percentile_interval,
)

MIN_CELL = 50
MAX_REL_SE = 0.5
MAX_EDGE_SHARE = 0.1


def _rng(rng):
    return streams.resampling_stream(0) if rng is None else rng


def _censored_fraction(n_used, censored):
    total = n_used + censored
    return censored / total if total else 0.0


# -- first-cycle statistics ---------------------------------------------------


def cycle_ratio_test(signs, gamma, censored=0, n_resamples=DEFAULT_RESAMPLES, rng=None, n_se=3.0, provenance=None):
    """Empirical P(+)/P(-) against ``exp(gamma)`` within ``n_se`` bootstrap SEs."""
    signs = np.asarray(signs)
    n = signs.size
    n_plus = int(np.count_nonzero(signs > 0))
    target = float(np.exp(gamma))
    if n_plus in (0, n):
        return VerificationReport("cycle_ratio", INCONCLUSIVE, {"n_plus": n_plus, "n": n}, sample_size=n,
                                  censored_fraction=_censored_fraction(n, censored), provenance=provenance or {})
    ratio = n_plus / (n - n_plus)
    boot = _rng(rng).binomial(n, n_plus / n, size=n_resamples)
    se = float(np.std(boot / (n - boot), ddof=1))
    margin = n_se * se - abs(ratio - target)
    verdict = decide(margin >= 0, n, 2, _censored_fraction(n, censored))
    return VerificationReport(
        "cycle_ratio",
        verdict,
        statistics={"ratio": ratio, "expected": target, "bootstrap_se": se, "z": (ratio - target) / se},
        margin=margin,
        tolerance=n_se * se,
        sample_size=n,
        censored_fraction=_censored_fraction(n, censored),
        provenance=provenance or {},
    )


def cycle_symmetry_test(T, signs, censored=0, alpha=DEFAULT_ALPHA, min_per_sign=1000, provenance=None):
    """Two-sample KS between forming times of forward and backward first cycles."""
    T = np.asarray(T, dtype=float)
    signs = np.asarray(signs)
    plus, minus = T[signs > 0], T[signs < 0]
    cens = _censored_fraction(T.size, censored)
    if plus.size == 0 or minus.size == 0:
        return VerificationReport("cycle_symmetry", INCONCLUSIVE, {"n_plus": plus.size, "n_minus": minus.size},
                                  sample_size=T.size, censored_fraction=cens, provenance=provenance or {})
    d, p = ks_two_sample(plus, minus)
    verdict = decide(p >= alpha, min(plus.size, minus.size), min_per_sign, cens)
    return VerificationReport(
        "cycle_symmetry",
        verdict,
        statistics={"ks_stat": d, "n_plus": int(plus.size), "n_minus": int(minus.size),
                    "mean_T_plus": float(plus.mean()), "mean_T_minus": float(minus.mean())},
        p_value=p,
        tolerance=alpha,
        sample_size=int(T.size),
        censored_fraction=cens,
        provenance=provenance or {},
    )


def ratio_curve_test(T, signs, gamma, u_grid=None, censored=0, alpha=DEFAULT_ALPHA, n_resamples=DEFAULT_RESAMPLES,
                     rng=None, min_count=MIN_CELL, provenance=None):
    """``P(T<=u, +) / P(T<=u, -)`` against ``exp(gamma)`` along a grid of u.

    Each usable u (both cumulative counts at least ``min_count``) must have
    ``gamma`` inside its Bonferroni-corrected bootstrap interval for the log
    ratio.
    """
    T = np.asarray(T, dtype=float)
    signs = np.asarray(signs)
    if u_grid is None:
        u_grid = np.quantile(T, np.linspace(0.05, 1.0, 20))
    u_grid = np.asarray(u_grid, dtype=float)
    # cells: (first grid index with T <= u, sign)
    b = np.searchsorted(u_grid, T, side="left")
    code = 2 * b + (signs > 0)
    ncell = 2 * (u_grid.size + 1)
    counts = np.bincount(code, minlength=ncell)

    def cumulative(c):
        c = c.reshape(*c.shape[:-1], -1, 2)
        return np.cumsum(c[..., :-1, 1], axis=-1), np.cumsum(c[..., :-1, 0], axis=-1)

    cp, cm = cumulative(counts)
    usable = (cp >= min_count) & (cm >= min_count)
    cens = _censored_fraction(T.size, censored)
    rows = {"u": u_grid.tolist(), "n_plus": cp.tolist(), "n_minus": cm.tolist(), "usable": usable.tolist()}
    if not usable.any():
        return VerificationReport("cycle_ratio", INCONCLUSIVE, {}, sample_size=T.size, censored_fraction=cens,
                                  details={"curve": rows, "reason": "no usable u"}, provenance=provenance or {})
    est = np.log(cp[usable] / cm[usable])
    reps = _rng(rng).multinomial(T.size, counts / counts.sum(), size=n_resamples)
    rp, rm = cumulative(reps)
    with np.errstate(divide="ignore", invalid="ignore"):
        rlog = np.log(rp[:, usable] / rm[:, usable])
    rlog[~np.isfinite(rlog)] = np.nan
    se = np.nanstd(rlog, axis=0, ddof=1)
    z = bonferroni_z(alpha, int(usable.sum()))
    lo, hi = est - z * se, est + z * se
    inside = (lo <= gamma) & (gamma <= hi)
    rows.update({"log_ratio": est.tolist(), "ci_low": lo.tolist(), "ci_high": hi.tolist(), "inside": inside.tolist()})
    return VerificationReport(
        "cycle_ratio",
        decide(bool(inside.all()), T.size, 1, cens),
        statistics={"max_abs_z": float(np.max(np.abs(est - gamma) / se)), "n_usable": int(usable.sum())},
        margin=float(np.min(np.minimum(gamma - lo, hi - gamma))),
        tolerance=z,
        sample_size=int(T.size),
        censored_fraction=cens,
        provenance=provenance or {},
        details={"curve": rows, "excluded_u": u_grid[~usable].tolist()},
    )


def independence_test(T, signs, n_resamples=DEFAULT_RESAMPLES, rng=None, alpha=DEFAULT_ALPHA, statistic="correlation",
                      censored=0, provenance=None):
    """Permutation test that the first forming time is independent of its sign."""
    T = np.asarray(T, dtype=float)
    observed, p = independence_permutation_test(signs, T, n_resamples, _rng(rng), statistic)
    cens = _censored_fraction(T.size, censored)
    return VerificationReport(
        "independence",
        decide(p >= alpha, T.size, 2, cens),
        statistics={statistic: observed},
        p_value=p,
        tolerance=alpha,
        sample_size=int(T.size),
        censored_fraction=cens,
        provenance=provenance or {},
        details={"n_resamples": n_resamples},
    )


# -- net-count identities -----------------------------------------------------


def _exp_moments(hist, lambdas, counts=None):
    """``mean exp(lam * W)`` for each lam, from histogram (or replicate) counts."""
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    e = np.exp(np.outer(hist.cells, lambdas))
    counts = hist.counts if counts is None else counts
    return counts @ e / hist.n


def _edge_share(hist, lambdas):
    """Share of ``sum exp(lam * W)`` carried by the outermost observed cell in the tilt direction.

    A large share means the terms have not decayed by the edge of the sample,
    so unobserved cells beyond it would still contribute.
    """
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    expo = np.outer(hist.cells, lambdas)
    terms = hist.counts[:, None] * np.exp(expo - expo.max(0))
    edge = np.where(lambdas > 0, terms[np.argmax(hist.cells)], terms[np.argmin(hist.cells)])
    return edge / terms.sum(0)


def transient_ft_test(net_counts, gamma, alpha=DEFAULT_ALPHA, n_resamples=DEFAULT_RESAMPLES, rng=None,
                      min_count=MIN_CELL, min_samples=10_000, provenance=None):
    """``log(#{W=k} / #{W=-k})`` against ``gamma k`` for every usable k > 0."""
    w = np.asarray(net_counts, dtype=np.int64)
    hist = Histogram.from_values(w)
    ks, rows = [], []
    for k in hist.cells[hist.cells > 0]:
        i, j = hist.index(k), hist.index(-k)
        if j >= 0 and hist.counts[i] >= min_count and hist.counts[j] >= min_count:
            ks.append(int(k))
            rows.append((i, j))
    if not ks:
        return VerificationReport("transient_ft", INCONCLUSIVE, {}, sample_size=w.size,
                                  details={"reason": "no k with enough counts on both sides"},
                                  provenance=provenance or {})
    ks = np.array(ks)
    ii, jj = np.array(rows).T
    est = np.log(hist.counts[ii] / hist.counts[jj])
    reps = hist.replicates(_rng(rng), n_resamples)
    with np.errstate(divide="ignore", invalid="ignore"):
        rl = np.log(reps[:, ii] / reps[:, jj])
    rl[~np.isfinite(rl)] = np.nan
    se = np.nanstd(rl, axis=0, ddof=1)
    z = bonferroni_z(alpha, ks.size)
    lo, hi = est - z * se, est + z * se
    target = gamma * ks
    inside = (lo <= target) & (target <= hi)
    # weighted least-squares slope through the origin, in units of gamma
    wts = 1.0 / se**2
    slope = float(np.sum(wts * ks * est) / np.sum(wts * ks * ks))
    slope_se = float(1.0 / np.sqrt(np.sum(wts * ks * ks)))
    return VerificationReport(
        "transient_ft",
        decide(bool(inside.all()), w.size, min_samples),
        statistics={"slope": slope, "slope_se": slope_se, "gamma": gamma, "n_k": int(ks.size)},
        margin=float(np.min(np.minimum(target - lo, hi - target))),
        tolerance=z,
        sample_size=int(w.size),
        provenance=provenance or {},
        details={"k": ks.tolist(), "log_ratio": est.tolist(), "ci_low": lo.tolist(), "ci_high": hi.tolist(),
                 "expected": target.tolist(), "inside": inside.tolist()},
    )


def integral_ft_test(net_counts, gamma, alpha=DEFAULT_ALPHA, n_resamples=DEFAULT_RESAMPLES, rng=None,
                     min_samples=10_000, provenance=None):
    """Percentile bootstrap interval of ``mean exp(-gamma W)`` must contain 1."""
    hist = Histogram.from_values(np.asarray(net_counts, dtype=np.int64))
    mean = float(_exp_moments(hist, -gamma)[0])
    reps = _exp_moments(hist, -gamma, hist.replicates(_rng(rng), n_resamples))[:, 0]
    lo, hi = percentile_interval(reps, alpha)
    return VerificationReport(
        "integral_ft",
        decide(bool(lo <= 1.0 <= hi), hist.n, min_samples),
        statistics={"mean": mean, "ci_low": float(lo), "ci_high": float(hi)},
        margin=float(min(1.0 - lo, hi - 1.0)),
        tolerance=alpha,
        sample_size=hist.n,
        provenance=provenance or {},
    )


def kls_ft_test(net_counts, gamma, lambda_grid=(-0.5, 0.5), alpha=DEFAULT_ALPHA, n_resamples=DEFAULT_RESAMPLES,
                rng=None, provenance=None):
    """``mean exp(lam W)`` against ``mean exp(-(lam + gamma) W)`` for each lam.

    The difference of the paired means, computed on the same bootstrap
    replicates, must have 0 inside its Bonferroni interval. Grid points where
    either side has relative SE above 0.5, or where the outermost observed
    cell carries more than a tenth of either sum, are excluded and reported.
    The second rule catches a moment truncated by the sample range, which the
    bootstrap cannot see since it never draws unobserved cells. It assumes
    unbounded support, as for net counts at t > 0. The self-dual
    point ``lam = -gamma/2`` holds trivially, so a run with no other usable
    point is inconclusive.
    """
    hist = Histogram.from_values(np.asarray(net_counts, dtype=np.int64))
    lam = np.asarray(lambda_grid, dtype=float)
    left = _exp_moments(hist, lam)
    right = _exp_moments(hist, -(lam + gamma))
    reps = hist.replicates(_rng(rng), n_resamples)
    rl = _exp_moments(hist, lam, reps)
    rr = _exp_moments(hist, -(lam + gamma), reps)
    rel = np.maximum(rl.std(0, ddof=1) / left, rr.std(0, ddof=1) / right)
    edge = np.maximum(_edge_share(hist, lam), _edge_share(hist, -(lam + gamma)))
    ok = (rel <= MAX_REL_SE) & (edge <= MAX_EDGE_SHARE)
    informative = ok & (np.abs(lam + 0.5 * gamma) > 1e-12)
    diff = left - right
    se = (rl - rr).std(0, ddof=1)
    # family size is the planned grid, so exclusions do not narrow the intervals
    z = bonferroni_z(alpha, lam.size)
    # at lam = -gamma/2 both sides coincide and the SE is 0
    inside = np.abs(diff) <= np.maximum(z * se, 1e-12 * np.abs(left))
    details = {"lambda": lam.tolist(), "left": left.tolist(), "right": right.tolist(), "diff": diff.tolist(),
               "se": se.tolist(), "relative_se": rel.tolist(), "edge_share": edge.tolist(), "used": ok.tolist(),
               "excluded": lam[~ok].tolist()}
    if not informative.any():
        return VerificationReport("kls_ft", INCONCLUSIVE, {}, sample_size=hist.n, details=details,
                                  provenance=provenance or {})
    return VerificationReport(
        "kls_ft",
        decide(bool(inside[ok].all()), hist.n, 2),
        statistics={"max_abs_z": float(np.max(np.abs(diff[ok]) / np.maximum(se[ok], 1e-300)))},
        margin=float(np.min(z * se[ok] - np.abs(diff[ok]))),
        tolerance=z,
        sample_size=hist.n,
        provenance=provenance or {},
        details=details,
    )


def joint_count_symmetry_test(n_plus, n_minus, gamma, alpha=DEFAULT_ALPHA, n_resamples=DEFAULT_RESAMPLES, rng=None,
                              min_count=MIN_CELL, min_samples=10_000, provenance=None):
    """``log(P(n, m) / P(m, n))`` against ``gamma (n - m)`` on usable cells n > m."""
    pairs = np.column_stack([np.asarray(n_plus, dtype=np.int64), np.asarray(n_minus, dtype=np.int64)])
    hist = Histogram.from_values(pairs)
    lookup = {tuple(c): i for i, c in enumerate(hist.cells.tolist())}
    cells, ii, jj = [], [], []
    for (n, m), i in lookup.items():
        j = lookup.get((m, n))
        if n > m and j is not None and hist.counts[i] >= min_count and hist.counts[j] >= min_count:
            cells.append((n, m))
            ii.append(i)
            jj.append(j)
    if not cells:
        return VerificationReport("joint_count_symmetry", INCONCLUSIVE, {}, sample_size=hist.n,
                                  details={"reason": "no usable cells"}, provenance=provenance or {})
    ii, jj = np.array(ii), np.array(jj)
    diffs = np.array([n - m for n, m in cells])
    est = np.log(hist.counts[ii] / hist.counts[jj])
    reps = hist.replicates(_rng(rng), n_resamples)
    with np.errstate(divide="ignore", invalid="ignore"):
        rl = np.log(reps[:, ii] / reps[:, jj])
    rl[~np.isfinite(rl)] = np.nan
    se = np.nanstd(rl, axis=0, ddof=1)
    z = bonferroni_z(alpha, len(cells))
    target = gamma * diffs
    inside = np.abs(est - target) <= z * se
    return VerificationReport(
        "joint_count_symmetry",
        decide(bool(inside.all()), hist.n, min_samples),
        statistics={"max_abs_z": float(np.max(np.abs(est - target) / se)), "n_cells": len(cells)},
        margin=float(np.min(z * se - np.abs(est - target))),
        tolerance=z,
        sample_size=hist.n,
        provenance=provenance or {},
        details={"cells": cells, "log_ratio": est.tolist(), "expected": target.tolist(), "se": se.tolist()},
    )


DEFAULT_SCGF_POINTS = ((0.3, -0.2), (-0.4, 0.1), (0.2, 0.2), (-0.2, -0.5))


def scgf_symmetry_test(n_plus, n_minus, gamma, points=DEFAULT_SCGF_POINTS, alpha=DEFAULT_ALPHA,
                       n_resamples=DEFAULT_RESAMPLES, rng=None, provenance=None):
    """Finite-t identity ``g_t(l1, l2) = g_t(l2 - gamma, l1 + gamma)`` on a few points.

    Compared on the log scale; the bootstrap SE of the paired log difference
    gives a Bonferroni interval per point.
    """
    pairs = np.column_stack([np.asarray(n_plus, dtype=np.int64), np.asarray(n_minus, dtype=np.int64)])
    hist = Histogram.from_values(pairs)
    pts = np.asarray(points, dtype=float)
    mirror = np.column_stack([pts[:, 1] - gamma, pts[:, 0] + gamma])
    cells = hist.cells.astype(float)

    def logmeans(counts, lams):
        return np.log(counts @ np.exp(cells @ lams.T) / hist.n)

    est = logmeans(hist.counts, pts) - logmeans(hist.counts, mirror)
    reps = hist.replicates(_rng(rng), n_resamples)
    rd = logmeans(reps, pts) - logmeans(reps, mirror)
    se = rd.std(0, ddof=1)
    z = bonferroni_z(alpha, len(pts))
    inside = np.abs(est) <= z * se
    return VerificationReport(
        "scgf_symmetry",
        decide(bool(inside.all()), hist.n, 2),
        statistics={"max_abs_z": float(np.max(np.abs(est) / se))},
        margin=float(np.min(z * se - np.abs(est))),
        tolerance=z,
        sample_size=hist.n,
        provenance=provenance or {},
        details={"points": pts.tolist(), "mirror": mirror.tolist(), "log_difference": est.tolist(), "se": se.tolist()},
    )


# -- entropy production and circulation -------------------------------------


def entropy_bound(model, grid_size=4097):
    """``(||2b/a||_inf + 2 ||log(a rho)||_inf)``; divide by t for the per-path bound."""
    from .analytics import psi_function

    x = np.linspace(0, 1, grid_size)
    psi = psi_function(model)(x)
    return float(np.max(np.abs(2 * model.b(x) / model.a(x))) + 2 * np.max(np.abs(np.log(psi))))


def entropy_production_estimate(path, model, antiderivative=False):
    """Empirical entropy production rate ``E_t`` of a recorded path.

    Midpoint (Stratonovich) sum of ``F'(X) dX`` divided by the horizon. With
    ``antiderivative=True`` returns ``(E_t, (F(X_t) - F(X_0)) / t)``.
    """
    from .simulation import entropy_antiderivative, entropy_integrand

    x = np.asarray(path.positions, dtype=float)
    t = float(path.times[-1] - path.times[0])
    if t <= 0:
        raise ValueError("path has zero duration")
    fprime = entropy_integrand(model)
    e_t = float(np.sum(fprime(0.5 * (x[1:] + x[:-1])) * np.diff(x)) / t)
    if not antiderivative:
        return e_t
    F = entropy_antiderivative(model)
    return e_t, float((F(x[-1]) - F(x[0])) / t)


def entropy_production_test(entropy_rates, net_rates, gamma, horizon, bound_constant, e_rate, n_se=3.0,
                            provenance=None):
    """Per-path ``|E_t - J_t gamma| <= C / t`` and mean ``E_t`` within ``n_se`` SE of e."""
    E = np.asarray(entropy_rates, dtype=float)
    J = np.asarray(net_rates, dtype=float)
    gap = np.abs(E - J * gamma)
    # the bound is pathwise exact; a relative 1e-9 slack absorbs float rounding
    bound = bound_constant / horizon * (1 + 1e-9)
    worst = float(gap.max())
    mean = float(E.mean())
    se = float(E.std(ddof=1) / np.sqrt(E.size)) if E.size > 1 else float("inf")
    bound_ok = bool(np.all(gap <= bound))
    mean_ok = abs(mean - e_rate) <= n_se * se
    return VerificationReport(
        "entropy_production",
        decide(bound_ok and mean_ok, E.size, 2),
        statistics={"mean": mean, "se": se, "expected": e_rate, "max_gap": worst, "bound": bound,
                    "z": (mean - e_rate) / se if se > 0 else 0.0},
        margin=float(min(bound - worst, n_se * se - abs(mean - e_rate))),
        tolerance=bound,
        sample_size=int(E.size),
        provenance=provenance or {},
        details={"bound_holds": bound_ok, "mean_within": bool(mean_ok), "degenerate": abs(gamma) < 1e-10},
    )


def net_circulation_test(net_rates, displacement_rates, j_true, horizon, n_se=3.0, bias_allowance=0.0,
                         provenance=None):
    """Mean ``J_t`` within ``n_se`` SE of J, and ``|J_t - (X_t - X_0)/t| <= 1/t`` per path.

    ``J_t`` is biased by O(1/t) at a finite horizon. Passing
    ``bias_allowance=1/t`` widens the mean check by the largest bias the
    pathwise bound permits when ``(X_t - X_0)/t`` is unbiased (stationary
    start); the default 0 tests the long-horizon limit directly.
    """
    J = np.asarray(net_rates, dtype=float)
    D = np.asarray(displacement_rates, dtype=float)
    gap = float(np.max(np.abs(J - D)))
    mean = float(J.mean())
    se = float(J.std(ddof=1) / np.sqrt(J.size))
    bound_ok = gap <= (1.0 / horizon) * (1 + 1e-9)
    mean_ok = abs(mean - j_true) <= n_se * se + bias_allowance
    return VerificationReport(
        "net_circulation",
        decide(bound_ok and mean_ok, J.size, 2),
        statistics={"mean": mean, "se": se, "expected": j_true, "max_gap": gap, "bound": 1.0 / horizon,
                    "z": (mean - j_true) / se, "bias_allowance": bias_allowance},
        margin=float(min(1.0 / horizon - gap, n_se * se + bias_allowance - abs(mean - j_true))),
        sample_size=int(J.size),
        provenance=provenance or {},
        details={"bound_holds": bool(bound_ok), "mean_within": bool(mean_ok)},
    )


def _weighted_resamples(n, rng, n_resamples, batch=64):
    """Bootstrap multiplicities in blocks of shape ``(batch, n)``."""
    done = 0
    while done < n_resamples:
        b = min(batch, n_resamples - done)
        rows = np.repeat(np.arange(b), n)
        idx = rng.integers(0, n, b * n)
        yield np.bincount(rows * n + idx, minlength=b * n).reshape(b, n)
        done += b


def entropy_rate_symmetry_check(entropy_rates, horizon, gamma, lambdas=(-0.75, -0.5, -0.25), net_counts=None,
                                alpha=DEFAULT_ALPHA, n_resamples=DEFAULT_RESAMPLES, rng=None, provenance=None):
    """Finite-t check of ``Lambda_E(lam) = Lambda_E(-lam - 1)``.

    ``Lambda_E(lam) = log mean exp(lam t E_t) / t``. With net counts given, the
    report also lists ``Lambda_W(lam gamma)`` for comparison. For gamma = 0 the
    entropy rate function is degenerate and no numeric test is run.
    """
    E = np.asarray(entropy_rates, dtype=float)
    if abs(gamma) < 1e-10:
        return VerificationReport("entropy_rate_symmetry", PASS, {}, sample_size=E.size, provenance=provenance or {},
                                  details={"branch": "degenerate", "note": "gamma = 0: rate function infinite off 0"})
    lam = np.asarray(lambdas, dtype=float)
    A = np.outer(E * horizon, lam)
    B = np.outer(E * horizon, -lam - 1.0)

    def scgf(M):
        return (logsumexp(M, axis=0) - np.log(E.size)) / horizon

    est = scgf(A) - scgf(B)
    # exponentiate once; each replicate is then a weighted column sum
    both = np.hstack([A, B])
    shift = both.max(axis=0)
    expo = np.exp(both - shift)
    k = lam.size
    reps = []
    for w in _weighted_resamples(E.size, _rng(rng), n_resamples):
        logm = (np.log(w @ expo) + shift) / horizon
        reps.append(logm[:, :k] - logm[:, k:])
    reps = np.concatenate(reps)
    se = reps.std(0, ddof=1)
    nontrivial = se > 0
    z = bonferroni_z(alpha, max(int(nontrivial.sum()), 1))
    inside = np.where(nontrivial, np.abs(est) <= z * np.where(nontrivial, se, 1.0), np.abs(est) < 1e-12)
    details = {"lambda": lam.tolist(), "difference": est.tolist(), "se": se.tolist(), "scgf": scgf(A).tolist()}
    if net_counts is not None:
        W = np.asarray(net_counts, dtype=float)
        details["scgf_net_count"] = (logsumexp(np.outer(W, lam * gamma), axis=0) / horizon
                                     - np.log(W.size) / horizon).tolist()
    return VerificationReport(
        "entropy_rate_symmetry",
        decide(bool(inside.all()), E.size, 2),
        statistics={"max_abs_difference": float(np.max(np.abs(est)))},
        tolerance=z,
        sample_size=int(E.size),
        provenance=provenance or {},
        details=details,
    )


__all__ = [
    "cycle_ratio_test",
    "cycle_symmetry_test",
    "ratio_curve_test",
    "independence_test",
    "transient_ft_test",
    "integral_ft_test",
    "kls_ft_test",
    "joint_count_symmetry_test",
    "scgf_symmetry_test",
    "entropy_bound",
    "entropy_production_test",
    "net_circulation_test",
    "entropy_rate_symmetry_check",
    "entropy_production_estimate",
]
