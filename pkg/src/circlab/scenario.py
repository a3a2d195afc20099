"""Scenario files: a model, a simulation config and a list of suites to run.

A scenario is a JSON object::

    {
      "model": {"drift": {...}, "diffusion": {...}},   # or "model_file": "path"
      "simulation": {"step_size": 1e-4, "horizon": 5.0, "n_paths": 100000, "master_seed": 1},
      "suites": ["integral_ft", "transient_ft"],
      "output_dir": "out",
      "options": {"alpha": 0.01, "n_resamples": 1000}
    }

``run_scenario`` writes ``summary.json``, ``reports.json``, per-suite CSV
curves and a ``provenance.json`` sidecar (the only file with timestamps).
"""

from __future__ import annotations

import csv
import datetime
import json
import platform
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from . import rng as streams
from .analytics import summarize, write_density_csv
from .fluctuations import (
    cycle_ratio_test,
    cycle_symmetry_test,
    entropy_bound,
    entropy_production_test,
    entropy_rate_symmetry_check,
    independence_test,
    integral_ft_test,
    joint_count_symmetry_test,
    kls_ft_test,
    net_circulation_test,
    ratio_curve_test,
    scgf_symmetry_test,
    transient_ft_test,
)
from .model import CircleDiffusionModel, ModelError
from .oracle import (
    RingChain,
    conditional_first_passage_law,
    splitting_probability_exact,
    tilted_scgf_exact,
    winding_distribution_exact,
)
from .qtr import invariance_test
from .reports import VerificationReport, decide, dumps, jsonable, overall_exit_code
from .scgf import DEFAULT_HORIZONS, oracle_rate_function, rate_function_estimate, rate_function_report, scgf_estimate
from .simulation import UNTIL_FIRST_CYCLE, SimulationConfig, first_cycle_arrays, simulate_batch

FIRST_CYCLE_SUITES = ("cycle_ratio", "ratio_curve", "cycle_symmetry", "independence")
COUNT_SUITES = (
    "transient_ft",
    "integral_ft",
    "kls_ft",
    "joint_count_symmetry",
    "scgf_symmetry",
    "entropy_production",
    "entropy_rate_symmetry",
    "net_circulation",
)
OTHER_SUITES = ("qtr_invariance", "rate_function_symmetry", "oracle")
SUITES = FIRST_CYCLE_SUITES + COUNT_SUITES + OTHER_SUITES
DEFAULT_COUNT_HORIZON = 5.0


class ScenarioError(ValueError):
    """Malformed scenario; the message starts with ``file:line:``."""


@dataclass
class Scenario:
    model: CircleDiffusionModel
    simulation: SimulationConfig
    suites: list
    output_dir: Path
    options: dict = field(default_factory=dict)
    chain: RingChain | None = None


def _line_of(text, key):
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else 1


def load_scenario(path, overrides=None):
    """Parse and validate a scenario file; errors carry the offending line."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}:0: cannot read scenario: {exc.strerror}") from None
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(spec, dict):
        raise ScenarioError(f"{path}:1: scenario must be a JSON object")

    def fail(key, msg):
        raise ScenarioError(f"{path}:{_line_of(text, key)}: {key}: {msg}")

    known = {"model", "model_file", "simulation", "suites", "output_dir", "options", "chain"}
    for key in spec:
        if key not in known:
            fail(key, "unknown key")
    if "model" in spec:
        model_spec = spec["model"]
    elif "model_file" in spec:
        try:
            model_spec = json.loads((path.parent / spec["model_file"]).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            fail("model_file", f"cannot load model file ({exc})")
    else:
        raise ScenarioError(f"{path}:1: scenario needs a 'model' or 'model_file' entry")
    try:
        model = CircleDiffusionModel.from_dict(model_spec)
    except (ModelError, ValueError, TypeError) as exc:
        fail("model" if "model" in spec else "model_file", str(exc))

    sim = dict(spec.get("simulation", {}))
    sim.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        config = SimulationConfig.from_dict(sim)
    except (ValueError, TypeError) as exc:
        fail("simulation", str(exc))

    suites = spec.get("suites", [])
    if not isinstance(suites, list) or not suites:
        fail("suites", "must be a non-empty list")
    for s in suites:
        if s not in SUITES:
            fail("suites", f"unknown suite {s!r}; known: {', '.join(SUITES)}")
    options = spec.get("options", {})
    if not isinstance(options, dict):
        fail("options", "must be an object")
    chain = None
    if "chain" in spec:
        try:
            chain = RingChain.from_dict(spec["chain"])
        except (ValueError, TypeError) as exc:
            fail("chain", str(exc))
    out = Path(spec.get("output_dir", "out"))
    if not out.is_absolute():
        out = path.parent / out
    return Scenario(model, config, suites, out, options, chain)


# -- suite runners -----------------------------------------------------------


def _provenance(model, config):
    return {"model_hash": model.hash, "config": config.to_dict(), "master_seed": config.master_seed}


def _resampler(config, label):
    return streams.resampling_stream(config.master_seed, label)


def _first_cycle_reports(sc, suites, gamma, curves):
    opts = sc.options
    cfg = replace(sc.simulation, horizon=UNTIL_FIRST_CYCLE)
    T, signs, censored = first_cycle_arrays(simulate_batch(sc.model, cfg, kind="first_cycle"))
    prov = _provenance(sc.model, cfg)
    alpha = opts.get("alpha", 0.01)
    nres = opts.get("n_resamples", 1000)
    out = []
    for i, s in enumerate(suites):
        rng = _resampler(cfg, 10 + i)
        if s == "cycle_ratio":
            out.append(cycle_ratio_test(signs, gamma, censored, nres, rng, provenance=prov))
        elif s == "ratio_curve":
            r = ratio_curve_test(T, signs, gamma, censored=censored, alpha=alpha, n_resamples=nres, rng=rng,
                                 provenance=prov)
            curves["ratio_curve"] = r.details.get("curve")
            out.append(r)
        elif s == "cycle_symmetry":
            out.append(cycle_symmetry_test(T, signs, censored, alpha, opts.get("min_per_sign", 1000), provenance=prov))
        elif s == "independence":
            out.append(independence_test(T, signs, nres, rng, alpha, censored=censored, provenance=prov))
    return out


def _count_reports(sc, suites, summary, curves):
    opts = sc.options
    horizon = sc.simulation.horizon
    if horizon == UNTIL_FIRST_CYCLE:
        horizon = DEFAULT_COUNT_HORIZON
    cfg = replace(sc.simulation, horizon=float(horizon))
    entropy = any(s in suites for s in ("entropy_production", "entropy_rate_symmetry"))
    runs = simulate_batch(sc.model, cfg, kind="cycles", entropy=entropy)
    t = float(cfg.horizon)
    W = np.array([r.log.net for r in runs])
    Np = np.array([r.log.n_forward for r in runs])
    Nm = Np - W
    gamma = summary.affinity
    prov = _provenance(sc.model, cfg)
    alpha = opts.get("alpha", 0.01)
    nres = opts.get("n_resamples", 1000)
    out = []
    for i, s in enumerate(suites):
        rng = _resampler(cfg, 20 + i)
        if s == "transient_ft":
            r = transient_ft_test(W, gamma, alpha, nres, rng, provenance=prov)
            curves["transient_ft"] = r.details
        elif s == "integral_ft":
            r = integral_ft_test(W, gamma, alpha, nres, rng, provenance=prov)
        elif s == "kls_ft":
            r = kls_ft_test(W, gamma, opts.get("kls_lambdas", (-0.5, 0.5)), alpha, nres, rng, provenance=prov)
            curves["kls_ft"] = r.details
        elif s == "joint_count_symmetry":
            r = joint_count_symmetry_test(Np, Nm, gamma, alpha, nres, rng, provenance=prov)
        elif s == "scgf_symmetry":
            r = scgf_symmetry_test(Np, Nm, gamma, alpha=alpha, n_resamples=nres, rng=rng, provenance=prov)
        elif s == "entropy_production":
            E = np.array([r_.entropy_integral for r_ in runs]) / t
            r = entropy_production_test(E, W / t, gamma, t, entropy_bound(sc.model), summary.entropy_production_rate,
                                        provenance=prov)
        elif s == "entropy_rate_symmetry":
            E = np.array([r_.entropy_integral for r_ in runs]) / t
            r = entropy_rate_symmetry_check(E, t, gamma, net_counts=W, alpha=alpha, n_resamples=nres, rng=rng,
                                            provenance=prov)
        elif s == "net_circulation":
            D = np.array([r_.end - r_.start for r_ in runs]) / t
            r = net_circulation_test(W / t, D, summary.net_circulation, t, bias_allowance=1.0 / t,
                                     provenance=prov)
        out.append(r)
    return out


def _rate_function_report(sc, summary, curves):
    opts = sc.options
    lam = np.asarray(opts.get("scgf_lambdas", np.linspace(-1.5, 1.5, 13) - summary.affinity / 2))
    horizons = opts.get("scgf_horizons", DEFAULT_HORIZONS)
    est = scgf_estimate(sc.model, sc.simulation, lam, horizons,
                        rng=_resampler(sc.simulation, 40))
    curves["scgf"] = {"lambda": lam.tolist(), "scgf": est.extrapolated.tolist(), "se": est.stderr.tolist()}
    rate = rate_function_estimate(est, summary.affinity)
    tol = opts.get("rate_tolerance", 5 * float(np.max(est.stderr)) + 1e-12)
    return rate_function_report(rate, summary.affinity, tol, provenance=_provenance(sc.model, sc.simulation))


def oracle_reports(chain, horizon=5.0, start=0, time_grid=None):
    """Exact identity checks on a ring chain (tolerances 1e-8 to 1e-10)."""
    g = chain.affinity
    prov = {"chain": chain.to_dict(), "start": start, "horizon": horizon}
    out = []

    split = splitting_probability_exact(chain, start)
    err = abs(np.log(split / (1 - split)) - g)
    out.append(_exact("oracle_splitting", err, 1e-10, prov, {"splitting_probability": split, "affinity": g}))

    if time_grid is None:
        time_grid = np.linspace(0.05, 4 * horizon, 40)
    law = conditional_first_passage_law(chain, start, time_grid)
    err = float(np.max(np.abs(law["forward"] - law["backward"])))
    out.append(_exact("oracle_conditional_law", err, 1e-10, prov, {"max_cdf_gap": err}))

    ks, probs = winding_distribution_exact(chain, start, horizon)
    pos = (ks > 0) & (probs > 1e-12) & (probs[::-1] > 1e-12)
    err = float(np.max(np.abs(np.log(probs[pos] / probs[::-1][pos]) - g * ks[pos]), initial=0.0))
    out.append(_exact("oracle_transient_ft", err, 1e-8, prov, {"k": ks.tolist(), "p": probs.tolist()}))
    err = abs(float(probs @ np.exp(-g * ks)) - 1.0)
    out.append(_exact("oracle_integral_ft", err, 1e-10, prov, {"mean": float(probs @ np.exp(-g * ks))}))

    lam = np.linspace(-3, 3, 25)
    err = max(abs(tilted_scgf_exact(chain, l) - tilted_scgf_exact(chain, -l - g)) for l in lam)
    out.append(_exact("oracle_scgf_symmetry", err, 1e-10, prov, {"lambda": lam.tolist()}))

    x = np.linspace(-1, 1, 41) * max(abs(g), 0.5)
    rate = oracle_rate_function(chain, x)
    out.append(_exact("oracle_rate_function", rate.symmetry_residual, 1e-8, prov,
                      {"x": x.tolist(), "I": rate.values.tolist()}))
    return out


def _exact(theorem, err, tol, prov, details):
    return VerificationReport(theorem, decide(err <= tol, 1), {"error": float(err)}, margin=tol - float(err),
                              tolerance=tol, sample_size=1, provenance=prov, details=details)


# -- orchestration ------------------------------------------------------------


def execute(sc):
    """Run all suites of a parsed scenario; returns ``(summary, reports, curves)``."""
    summary = summarize(sc.model)
    curves = {}
    reports = []
    first = [s for s in sc.suites if s in FIRST_CYCLE_SUITES]
    counts = [s for s in sc.suites if s in COUNT_SUITES]
    if first:
        reports += _first_cycle_reports(sc, first, summary.affinity, curves)
    if counts:
        reports += _count_reports(sc, counts, summary, curves)
    if "qtr_invariance" in sc.suites:
        reports.append(invariance_test(sc.simulation, alpha=sc.options.get("alpha", 0.01)))
    if "rate_function_symmetry" in sc.suites:
        reports.append(_rate_function_report(sc, summary, curves))
    if "oracle" in sc.suites:
        chain = sc.chain or RingChain.from_diffusion(sc.model, int(sc.options.get("oracle_sites", 16)))
        h = sc.simulation.horizon
        reports += oracle_reports(chain, DEFAULT_COUNT_HORIZON if h == UNTIL_FIRST_CYCLE else float(h))
    return summary, reports, curves


def write_json(obj, path):
    Path(path).write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")


def write_summary(summary, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_density_csv(summary.solution, out_dir / "density.csv")
    data = summary.to_dict()
    data["density_csv_path"] = "density.csv"
    write_json(data, out_dir / "summary.json")
    return data


def _write_curves(curves, out_dir):
    for name, data in curves.items():
        if not data:
            continue
        if name == "transient_ft":
            cols = ["k", "log_ratio", "ci_low", "ci_high", "expected"]
        elif name == "kls_ft":
            cols = ["lambda", "left", "right", "diff", "se"]
        elif name == "ratio_curve":
            if "log_ratio" not in data:
                continue
            keep = [i for i, u in enumerate(data["usable"]) if u]
            data = {"u": [data["u"][i] for i in keep], "log_ratio": data["log_ratio"],
                    "ci_low": data["ci_low"], "ci_high": data["ci_high"]}
            cols = ["u", "log_ratio", "ci_low", "ci_high"]
        elif name == "scgf":
            cols = ["lambda", "scgf", "se"]
        else:
            continue
        if not all(c in data for c in cols):
            continue
        with open(out_dir / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for row in zip(*(data[c] for c in cols)):
                w.writerow([repr(float(v)) for v in row])


def run_scenario(scenario_file, overrides=None, out_dir=None):
    """Run a scenario file end to end; returns the exit code.

    0: every report passes; 2: some report fails; 3: none fails but some is
    inconclusive. Configuration errors raise ``ScenarioError`` (exit 1 at
    the command line).
    """
    sc = load_scenario(scenario_file, overrides)
    if out_dir is not None:
        sc.output_dir = Path(out_dir)
    summary, reports, curves = execute(sc)
    out = sc.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_summary(summary, out)
    (out / "reports.json").write_text(dumps(reports))
    _write_curves(curves, out)
    write_json(
        {
            "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "circlab_version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scenario": str(Path(scenario_file).resolve()),
        },
        out / "provenance.json",
    )
    return overall_exit_code(reports)
