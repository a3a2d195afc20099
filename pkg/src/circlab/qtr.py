"""Quasi-time reversal of Brownian paths started at 0.

With ``tau`` the first hitting time of +-1 and ``g`` the last zero before
``tau``, the transform keeps the path on ``[0, g)``, replaces the exit
excursion on ``[g, tau)`` by its time reversal shifted by ``-w(tau)``, and
shifts the remainder by ``-2 w(tau)``. The image is again a Brownian motion;
``invariance_test`` checks this through the laws of path functionals.

The markers are invariant under the transform (only the exit sign flips), so
functionals of the image are evaluated with the transported markers instead
of re-detecting them on the resampled grid.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import CircleDiffusionModel
from .reports import VerificationReport, decide
from .simulation import PathRecord, ordered_map, simulate_path
from .stats import DEFAULT_ALPHA, ks_two_sample, two_proportion_test

FIXED_TIME = 0.5


class NotHitError(ValueError):
    """The path never reaches +-1 within its horizon."""


@dataclass(frozen=True)
class QtrMarkers:
    tau: float
    g_tau: float
    terminal_sign: int

    def transported(self):
        """Markers of the transformed path."""
        return replace(self, terminal_sign=-self.terminal_sign)


def find_markers(path):
    """Locate ``tau`` and ``g_tau`` on a piecewise-linear path started at 0."""
    t = np.asarray(path.times, dtype=float)
    x = np.asarray(path.positions, dtype=float)
    if abs(x[0]) > 1e-12:
        raise ValueError("path must start at 0")
    hit = np.nonzero(np.abs(x) >= 1.0)[0]
    if hit.size == 0:
        raise NotHitError("path does not reach +-1; extend the horizon")
    j = int(hit[0])
    sign = 1 if x[j] > 0 else -1
    tau = t[j - 1] + (sign - x[j - 1]) / (x[j] - x[j - 1]) * (t[j] - t[j - 1])
    # values on [0, tau] with the exit point appended
    tt = np.append(t[:j], tau)
    xx = np.append(x[:j], float(sign))
    zero = (xx[:-1] == 0) | (xx[:-1] * xx[1:] < 0)
    i = int(np.nonzero(zero)[0][-1])  # x[0] == 0 guarantees a hit
    if xx[i] == 0:
        g = tt[i]
    else:
        g = tt[i] + (0 - xx[i]) / (xx[i + 1] - xx[i]) * (tt[i + 1] - tt[i])
    return QtrMarkers(float(tau), float(g), sign)


def _evaluate(t, x, query):
    return np.interp(query, t, x)


def apply_qtr(path, markers, resample=True):
    """Image of ``path`` under the quasi-time reversal.

    With ``resample=True`` the output lives on the input grid and the
    reversed segment is linearly interpolated. With ``resample=False`` the
    reflected sample times of the segment are kept exactly (non-uniform grid).
    """
    t = np.asarray(path.times, dtype=float)
    x = np.asarray(path.positions, dtype=float)
    g, tau, s = markers.g_tau, markers.tau, markers.terminal_sign
    if resample:
        y = x.copy()
        mid = (t >= g) & (t < tau)
        y[mid] = _evaluate(t, x, g + tau - t[mid]) - s
        y[t >= tau] -= 2 * s
        return PathRecord(t.copy(), y, path.seed, path.model_hash)
    inner = (t > g) & (t < tau)
    seg_t = np.concatenate([[g], g + tau - t[inner][::-1], [tau]])
    seg_x = np.concatenate([[0.0], x[inner][::-1] - s, [-float(s)]])
    before = t < g
    after = t > tau
    times = np.concatenate([t[before], seg_t, t[after]])
    pos = np.concatenate([x[before], seg_x, x[after] - 2 * s])
    return PathRecord(times, pos, path.seed, path.model_hash)


# -- functionals -----------------------------------------------------------
# Each functional takes (path, markers, u) with u the fixed observation time.


def _clip(path, upto):
    t = np.asarray(path.times)
    x = np.asarray(path.positions)
    k = np.searchsorted(t, upto, side="left")
    return np.append(t[:k], upto), np.append(x[:k], _evaluate(t, x, upto))


def _to_tau(path, m):
    t, x = _clip(path, m.tau)
    x[-1] = m.terminal_sign
    return t, x


def _occupation_positive(t, x):
    dt = np.diff(t)
    x0, x1 = x[:-1], x[1:]
    both = (x0 >= 0) & (x1 >= 0)
    cross = (x0 * x1) < 0
    xa, xb, d = x0[cross], x1[cross], dt[cross]
    frac = np.where(xb > 0, xb / (xb - xa), xa / (xa - xb))
    return float(dt[both].sum() + (frac * d).sum())


def tau_functional(path, m, u):
    return m.tau


def g_tau_functional(path, m, u):
    return m.g_tau


def sup_abs_to_tau(path, m, u):
    """max |w| on [0, tau]; equals 1 for every path."""
    return float(np.max(np.abs(_to_tau(path, m)[1])))


def sup_to_tau(path, m, u):
    return float(np.max(_to_tau(path, m)[1]))


def sup_abs_fixed(path, m, u):
    return float(np.max(np.abs(_clip(path, u)[1])))


def value_at_fixed(path, m, u):
    return float(_evaluate(path.times, path.positions, u))


def occupation_above_zero(path, m, u):
    return _occupation_positive(*_to_tau(path, m))


def terminal_sign(path, m, u):
    return float(m.terminal_sign)


FUNCTIONALS = {
    "tau": tau_functional,
    "g_tau": g_tau_functional,
    "sup_abs_to_tau": sup_abs_to_tau,
    "sup_to_tau": sup_to_tau,
    "sup_abs_fixed": sup_abs_fixed,
    "value_at_fixed": value_at_fixed,
    "occupation_above_zero": occupation_above_zero,
    "terminal_sign": terminal_sign,
}
DEFAULT_FUNCTIONALS = ("tau", "g_tau", "sup_abs_to_tau", "sup_to_tau", "sup_abs_fixed",
                       "value_at_fixed", "occupation_above_zero", "terminal_sign")


def compare_samples(name, a, b):
    """KS test, or a proportion test when the samples take at most two values."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n_eff = int(min(a.size, b.size))
    values = np.unique(np.concatenate([a, b]))
    if values.size == 1:
        return {"name": name, "test": "constant", "ks_stat": 0.0, "p_value": 1.0, "n_effective": n_eff}
    if values.size == 2:
        hi = values[1]
        _, p = two_proportion_test(int((a == hi).sum()), a.size, int((b == hi).sum()), b.size)
        d = abs((a == hi).mean() - (b == hi).mean())
        return {"name": name, "test": "proportion", "ks_stat": float(d), "p_value": p, "n_effective": n_eff}
    d, p = ks_two_sample(a, b)
    return {"name": name, "test": "ks", "ks_stat": d, "p_value": p, "n_effective": n_eff}


def invariance_test(config, functionals=DEFAULT_FUNCTIONALS, alpha=DEFAULT_ALPHA, fixed_time=FIXED_TIME,
                    workers=None):
    """Compare functional laws of W and of its quasi-time reversal.

    Even path indices supply W and odd ones supply phi(W), so the two samples
    are independent. Each path runs until both ``tau`` and ``fixed_time`` have
    passed. The report passes when every p-value is at least ``alpha / m``
    for ``m`` functionals.
    """
    funcs = {}
    for f in functionals:
        if callable(f):
            funcs[f.__name__] = f
        else:
            funcs[f] = FUNCTIONALS[f]
    model = CircleDiffusionModel.constant(0.0, 1.0)
    cfg = replace(config, horizon="until-first-cycle", start_point=0.0, stationary_start=False)

    def evaluate(i):
        p = simulate_path(model, cfg, i, min_time=fixed_time)
        try:
            m = find_markers(p)
        except NotHitError:
            return None
        if i % 2:
            p, m = apply_qtr(p, m), m.transported()
        return [f(p, m, fixed_time) for f in funcs.values()]

    rows_by_path = ordered_map(evaluate, range(cfg.n_paths), workers)
    w = np.array([r for i, r in enumerate(rows_by_path) if r is not None and i % 2 == 0]).reshape(-1, len(funcs))
    phi = np.array([r for i, r in enumerate(rows_by_path) if r is not None and i % 2 == 1]).reshape(-1, len(funcs))
    n = cfg.n_paths
    censored = sum(r is None for r in rows_by_path)
    cens_frac = censored / n

    rows = [compare_samples(k, w[:, j], phi[:, j]) for j, k in enumerate(funcs)]
    m_tests = len(rows)
    passed = all(r["p_value"] >= alpha / m_tests for r in rows)
    verdict = decide(passed, min(len(w), len(phi)), 1, censored_fraction=cens_frac)
    details = {"functionals": rows, "alpha": alpha, "fixed_time": fixed_time}
    if "terminal_sign" in funcs:
        j = list(funcs).index("terminal_sign")
        details["W_plus_fraction"] = float((w[:, j] > 0).mean())
        details["phi_minus_fraction"] = float((phi[:, j] < 0).mean())
    return VerificationReport(
        "qtr_invariance",
        verdict,
        statistics={r["name"]: r["ks_stat"] for r in rows},
        p_value=min(r["p_value"] for r in rows),
        tolerance=alpha / m_tests,
        sample_size=n - censored,
        censored_fraction=cens_frac,
        provenance={"model_hash": model.hash, "config": cfg.to_dict(), "master_seed": cfg.master_seed},
        details=details,
    )


def write_report_json(report, path):
    import json

    rows = report.details["functionals"]
    keep = [{k: r[k] for k in ("name", "ks_stat", "p_value", "n_effective")} for r in rows]
    with open(path, "w") as fh:
        json.dump(keep, fh, indent=2, sort_keys=True)
        fh.write("\n")
