"""Verification reports and their JSON form."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"

MAX_CENSORED_FRACTION = 0.1

THEOREMS = (
    "cycle_ratio",
    "cycle_symmetry",
    "independence",
    "qtr_invariance",
    "transient_ft",
    "integral_ft",
    "kls_ft",
    "joint_count_symmetry",
    "scgf_symmetry",
    "rate_function_symmetry",
    "entropy_production",
    "entropy_rate_symmetry",
    "net_circulation",
    "oracle_splitting",
    "oracle_conditional_law",
    "oracle_transient_ft",
    "oracle_integral_ft",
    "oracle_scgf_symmetry",
    "oracle_rate_function",
)


def decide(passed, sample_size, min_sample_size=0, censored_fraction=0.0):
    """Map a test outcome to a verdict, letting censoring and small samples win."""
    if censored_fraction > MAX_CENSORED_FRACTION or sample_size < min_sample_size:
        return INCONCLUSIVE
    if passed is None:
        return INCONCLUSIVE
    return PASS if passed else FAIL


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


@dataclass
class VerificationReport:
    """Outcome of one statistical or exact check.

    ``p_value`` is set for hypothesis tests, ``margin`` for tolerance checks
    (distance to the threshold, positive when passing).
    """

    theorem_id: str
    verdict: str
    statistics: dict = field(default_factory=dict)
    p_value: float | None = None
    margin: float | None = None
    tolerance: float | None = None
    sample_size: int = 0
    censored_fraction: float = 0.0
    provenance: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.theorem_id not in THEOREMS:
            raise ValueError(f"unknown theorem id {self.theorem_id!r}")
        if self.verdict not in (PASS, FAIL, INCONCLUSIVE):
            raise ValueError(f"bad verdict {self.verdict!r}")

    @property
    def passed(self):
        return self.verdict == PASS

    def with_provenance(self, **prov):
        self.provenance = {**self.provenance, **prov}
        return self

    def to_dict(self):
        return jsonable(
            {
                "theorem_id": self.theorem_id,
                "verdict": self.verdict,
                "statistics": self.statistics,
                "p_value": self.p_value,
                "margin": self.margin,
                "tolerance": self.tolerance,
                "sample_size": self.sample_size,
                "censored_fraction": self.censored_fraction,
                "provenance": self.provenance,
                "details": self.details,
            }
        )

    def line(self):
        """One-line human summary."""
        extra = f"p={self.p_value:.4g}" if self.p_value is not None else (
            f"margin={self.margin:.4g}" if self.margin is not None else ""
        )
        return f"{self.theorem_id}: {self.verdict.upper()} (n={self.sample_size} {extra})".rstrip()


def dumps(reports):
    """Deterministic JSON for a report list (sorted keys, fixed float repr)."""
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"


def overall_exit_code(reports):
    """0 if all pass, 2 if any fail, else 3 if any inconclusive."""
    verdicts = {r.verdict for r in reports}
    if FAIL in verdicts:
        return 2
    if INCONCLUSIVE in verdicts:
        return 3
    return 0
