"""Scaled cumulant generating functions of cycle counts and their Legendre duals.

The empirical SCGF at horizon t is ``log mean exp(l1 N+_t + l2 N-_t) / t``;
its t -> infinity limit is estimated by fitting ``c0 + c1 / t`` over several
horizons. For a scalar ``lam`` the tilt is on the net count,
``lam * W_t = lam * (N+_t - N-_t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from . import rng as streams
from .reports import VerificationReport, decide
from .simulation import simulate_batch

DEFAULT_HORIZONS = (5.0, 10.0, 20.0, 40.0)
MAX_REL_SE = 0.5


@dataclass(frozen=True, eq=False)
class ScgfEstimate:
    lambda_grid: np.ndarray  # (k,) net-count tilts or (k, 2) joint tilts
    horizons: np.ndarray
    values: np.ndarray  # (n_horizons, k)
    extrapolated: np.ndarray  # (k,)
    stderr: np.ndarray  # (k,) bootstrap SE of the extrapolated values
    value_stderr: np.ndarray = field(default=None)  # (n_horizons, k)
    flagged: np.ndarray = field(default=None)  # (k,) relative SE of the exponential mean above 0.5

    @property
    def joint(self):
        return self.lambda_grid.ndim == 2


def _tilt_matrix(counts_plus, counts_minus, lambda_grid):
    lam = np.asarray(lambda_grid, dtype=float)
    if lam.ndim == 1:
        return np.outer(counts_plus - counts_minus, lam)
    return np.outer(counts_plus, lam[:, 0]) + np.outer(counts_minus, lam[:, 1])


def _fit_inverse_t(horizons, values):
    """Least-squares fit ``v(t) = c0 + c1/t``; returns c0 for each column."""
    design = np.column_stack([np.ones_like(horizons), 1.0 / horizons])
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    return coef[0]


def scgf_from_counts(counts, horizons, lambda_grid, n_resamples=200, rng=None):
    """SCGF estimate from per-path counts.

    ``counts`` has shape ``(n_paths, n_horizons, 2)`` holding ``(N+, N-)`` at
    each horizon. Bootstrap resamples whole paths, so the horizons stay paired.
    """
    counts = np.asarray(counts, dtype=float)
    horizons = np.asarray(horizons, dtype=float)
    if horizons.size < 3 or np.any(np.diff(horizons) <= 0):
        raise ValueError("need at least three increasing horizons")
    lam = np.asarray(lambda_grid, dtype=float)
    n = counts.shape[0]
    expo = np.stack([_tilt_matrix(counts[:, h, 0], counts[:, h, 1], lam) for h in range(horizons.size)])  # (H, n, k)

    def estimate(weights):
        lw = np.log(weights)[None, :, None]
        v = (logsumexp(expo + lw, axis=1) - np.log(weights.sum())) / horizons[:, None]
        return v

    ones = np.ones(n)
    values = estimate(ones)
    zero = np.all(lam.reshape(len(lam), -1) == 0, axis=1)
    values[:, zero] = 0.0
    extrap = _fit_inverse_t(horizons, values)
    extrap[zero] = 0.0
    gen = streams.resampling_stream(0, 1) if rng is None else rng
    reps_v, reps_e = [], []
    for _ in range(n_resamples):
        w = np.bincount(gen.integers(0, n, n), minlength=n).astype(float)
        w[w == 0] = 1e-300
        v = estimate(w)
        reps_v.append(v)
        reps_e.append(_fit_inverse_t(horizons, v))
    value_se = np.std(reps_v, axis=0, ddof=1)
    se = np.std(reps_e, axis=0, ddof=1)
    se[zero] = 0.0
    # relative SE of mean exp at the longest horizon: exp(t * value_se) - 1 to first order
    rel = horizons[-1] * value_se[-1]
    return ScgfEstimate(lam, horizons, values, extrap, se, value_se, rel > MAX_REL_SE)


def scgf_from_logs(logs, horizons, lambda_grid, **kwargs):
    counts = np.array([[log.counts_at(t) for t in horizons] for log in logs])
    return scgf_from_counts(counts, horizons, lambda_grid, **kwargs)


def scgf_estimate(model, config, lambda_grid, horizons=DEFAULT_HORIZONS, workers=None, **kwargs):
    """Simulate ``config.n_paths`` paths to the longest horizon and estimate the SCGF."""
    horizons = np.asarray(horizons, dtype=float)
    cfg = replace(config, horizon=float(horizons[-1]))
    runs = simulate_batch(model, cfg, kind="cycles", workers=workers)
    return scgf_from_logs([r.log for r in runs], horizons, lambda_grid, **kwargs)


# -- Legendre-Fenchel transforms ----------------------------------------------


@dataclass(frozen=True, eq=False)
class RateFunction:
    x: np.ndarray
    values: np.ndarray
    reliable: np.ndarray  # bool mask: supremum attained inside the lambda range
    symmetry_residual: float
    convexified: bool
    repair: float  # largest upward move of a grid value to restore convexity


def _lower_hull(lam, vals):
    """Indices of the lower convex hull of the points (lam, vals), lam sorted."""
    hull = []
    for i in range(lam.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (lam[b] - lam[a]) * (vals[i] - vals[a]) - (vals[b] - vals[a]) * (lam[i] - lam[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull)


def convexify(lam, vals):
    """Greatest convex minorant on the grid; returns ``(values, max_change)``."""
    order = np.argsort(lam)
    lam, v = lam[order], vals[order]
    h = _lower_hull(lam, v)
    out = np.interp(lam, lam[h], v[h])
    res = np.empty_like(out)
    res[order] = out
    return res, float(np.max(np.abs(res - vals)))


def symmetry_residual(x, values, reliable, gamma):
    """max |I(x) - I(-x) + gamma x| over reliable x whose mirror is also reliable."""
    worst = 0.0
    lo, hi = x[reliable].min(initial=np.inf), x[reliable].max(initial=-np.inf)
    for xi, vi, ok in zip(x, values, reliable):
        if ok and lo <= -xi <= hi:
            mirror = np.interp(-xi, x[reliable], values[reliable])
            worst = max(worst, abs(vi - mirror + gamma * xi))
    return worst


def rate_function_estimate(scgf, gamma, x_grid=None, repair_tol=None):
    """Numerical Legendre transform of the extrapolated net-count SCGF.

    Non-convex noise is repaired by the greatest convex minorant; when the
    repair exceeds ``repair_tol`` (default: three bootstrap SEs) the result is
    marked as not convexifiable through ``convexified=False``.
    """
    if scgf.joint:
        raise ValueError("use joint_rate_function for two-dimensional tilts")
    lam = scgf.lambda_grid
    vals = scgf.extrapolated
    cvx, change = convexify(lam, vals)
    tol = 3 * float(np.max(scgf.stderr)) if repair_tol is None else repair_tol
    order = np.argsort(lam)
    slopes = np.diff(cvx[order]) / np.diff(lam[order])
    if x_grid is None:
        x_grid = np.linspace(slopes.min(), slopes.max(), 81)
    x_grid = np.asarray(x_grid, dtype=float)
    I = np.max(np.outer(x_grid, lam) - cvx[None, :], axis=1)
    reliable = (x_grid >= slopes.min()) & (x_grid <= slopes.max())
    resid = symmetry_residual(x_grid, I, reliable, gamma)
    return RateFunction(x_grid, I, reliable, resid, change <= tol, change)


def legendre_exact(scgf_fn, x, lam_bounds, xatol=1e-12):
    """``sup_lam (lam x - Lambda(lam))`` for a smooth convex ``Lambda`` on ``lam_bounds``.

    Returns ``(value, argmax, interior)``.
    """
    lo, hi = lam_bounds
    res = minimize_scalar(lambda l: scgf_fn(l) - l * x, bounds=(lo, hi), method="bounded",
                          options={"xatol": xatol, "maxiter": 500})
    lam = float(res.x)
    interior = (lam - lo) > 1e-6 * (hi - lo) and (hi - lam) > 1e-6 * (hi - lo)
    return float(-res.fun), lam, interior


def oracle_rate_function(chain, x_grid, half_width=6.0):
    """Exact rate function of the ring chain's net cycle count.

    The search interval for ``lam`` is centred at ``-gamma_d / 2`` so that
    mirrored points see mirrored search ranges.
    """
    from .oracle import tilted_scgf_exact

    g = chain.affinity
    bounds = (-g / 2 - half_width, -g / 2 + half_width)
    out = [legendre_exact(lambda l: tilted_scgf_exact(chain, l), x, bounds) for x in x_grid]
    values = np.array([o[0] for o in out])
    reliable = np.array([o[2] for o in out])
    return RateFunction(np.asarray(x_grid, float), values, reliable,
                        symmetry_residual(np.asarray(x_grid, float), values, reliable, g), True, 0.0)


def joint_rate_function(scgf, gamma, x_points):
    """Coarse ``I1(x1, x2)`` on given points from a joint-tilt SCGF grid.

    Returns the values and the symmetry residual
    ``max |I1(x1, x2) - I1(x2, x1) + gamma (x1 - x2)|`` over point pairs
    present in ``x_points``.
    """
    if not scgf.joint:
        raise ValueError("joint tilt grid required")
    pts = np.asarray(x_points, dtype=float)
    I = np.max(pts @ scgf.lambda_grid.T - scgf.extrapolated[None, :], axis=1)
    lookup = {tuple(np.round(p, 12)): v for p, v in zip(pts, I)}
    worst = 0.0
    for (a, b), v in lookup.items():
        w = lookup.get((b, a))
        if w is not None:
            worst = max(worst, abs(v - w + gamma * (a - b)))
    return I, worst


def rate_function_report(rate, gamma, tolerance, theorem_id="rate_function_symmetry", provenance=None):
    ok = rate.convexified and rate.symmetry_residual <= tolerance
    verdict = decide(ok, int(rate.reliable.sum()), 3)
    return VerificationReport(
        theorem_id,
        verdict,
        statistics={"residual": rate.symmetry_residual, "repair": rate.repair},
        margin=tolerance - rate.symmetry_residual,
        tolerance=tolerance,
        sample_size=int(rate.reliable.sum()),
        provenance=provenance or {},
        details={"x": rate.x, "I": rate.values, "reliable": rate.reliable, "gamma": gamma},
    )


__all__ = [
    "ScgfEstimate",
    "scgf_from_counts",
    "scgf_from_logs",
    "scgf_estimate",
    "RateFunction",
    "convexify",
    "rate_function_estimate",
    "legendre_exact",
    "oracle_rate_function",
    "joint_rate_function",
    "rate_function_report",
]
