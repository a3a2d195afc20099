"""Periodic coefficient families and the circle diffusion model.

A model is the pair (drift b, diffusion sigma) of period-1 functions defining

    dX_t = b(X_t) dt + sigma(X_t) dW_t,

with a = sigma**2. Two coefficient families are supported: a truncated Fourier
series (exactly periodic, smooth) and a tabulated periodic spline.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

TWO_PI = 2.0 * np.pi
VALIDATION_POINTS = 4096


class ModelError(ValueError):
    """Raised for an invalid model specification."""


@dataclass(frozen=True)
class FourierSeries:
    """``c0 + sum_k cos[k-1] cos(2 pi k x) + sin[k-1] sin(2 pi k x)``."""

    c0: float
    cos: tuple = ()
    sin: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "cos", tuple(float(v) for v in self.cos))
        object.__setattr__(self, "sin", tuple(float(v) for v in self.sin))
        if not np.all(np.isfinite([self.c0, *self.cos, *self.sin])):
            raise ModelError("Fourier coefficients must be finite")

    @property
    def order(self):
        return max(len(self.cos), len(self.sin))

    @property
    def is_constant(self):
        return not any(self.cos) and not any(self.sin)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.c0)
        for k, a in enumerate(self.cos, start=1):
            if a:
                out += a * np.cos(TWO_PI * k * x)
        for k, s in enumerate(self.sin, start=1):
            if s:
                out += s * np.sin(TWO_PI * k * x)
        return out

    def to_dict(self):
        return {"type": "fourier", "c0": self.c0, "cos": list(self.cos), "sin": list(self.sin)}


@dataclass(frozen=True)
class TabulatedSeries:
    """Samples on the uniform grid ``i/n``, i < n, joined by a periodic spline.

    ``order`` is 1 (periodic linear interpolation) or 3 (periodic cubic spline).
    """

    values: tuple
    order: int = 3
    _spline: object = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 4:
            raise ModelError("tabulated coefficients need at least 4 samples")
        if self.order not in (1, 3):
            raise ModelError(f"spline order must be 1 or 3, got {self.order}")
        if not np.all(np.isfinite(vals)):
            raise ModelError("tabulated coefficients must be finite")
        if self.order == 3:
            n = len(vals)
            knots = np.arange(n + 1) / n
            y = np.append(vals, vals[0])
            object.__setattr__(self, "_spline", CubicSpline(knots, y, bc_type="periodic"))

    @property
    def is_constant(self):
        return len(set(self.values)) == 1

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        frac = x - np.floor(x)
        if self.order == 3:
            return self._spline(frac)
        n = len(self.values)
        knots = np.arange(n + 1) / n
        return np.interp(frac, knots, np.append(self.values, self.values[0]))

    def to_dict(self):
        return {"type": "tabulated", "values": list(self.values), "order": self.order}


def coefficient_from_dict(spec):
    if not isinstance(spec, dict):
        raise ModelError(f"coefficient spec must be an object, got {type(spec).__name__}")
    kind = spec.get("type")
    if kind == "fourier":
        if "c0" not in spec:
            raise ModelError("fourier coefficient is missing 'c0'")
        return FourierSeries(spec["c0"], spec.get("cos", ()), spec.get("sin", ()))
    if kind == "tabulated":
        if "values" not in spec:
            raise ModelError("tabulated coefficient is missing 'values'")
        return TabulatedSeries(spec["values"], int(spec.get("order", 3)))
    raise ModelError(f"unknown coefficient type {kind!r}")


@dataclass(frozen=True)
class CircleDiffusionModel:
    """Drift and diffusion coefficients of a diffusion on the unit circle.

    Parameters
    ----------
    drift : FourierSeries or TabulatedSeries
        Periodic drift b.
    diffusion : FourierSeries or TabulatedSeries
        Periodic, strictly positive diffusion coefficient sigma.
    sigma_min : float
        Lower bound enforced on sigma over a dense validation grid.
    """

    drift: object
    diffusion: object
    sigma_min: float = 1e-8

    def __post_init__(self):
        grid = np.arange(VALIDATION_POINTS) / VALIDATION_POINTS
        sig = self.diffusion(grid)
        if not np.all(np.isfinite(sig)) or sig.min() < self.sigma_min:
            raise ModelError(
                f"diffusion must be >= {self.sigma_min} on the validation grid (min {sig.min():.3g})"
            )
        for name, coeff in (("drift", self.drift), ("diffusion", self.diffusion)):
            gap = np.max(np.abs(coeff(grid) - coeff(grid + 1.0)))
            if gap > 1e-12:
                raise ModelError(f"{name} is not 1-periodic (max gap {gap:.3g})")

    def b(self, x):
        return self.drift(x)

    def sigma(self, x):
        return self.diffusion(x)

    def a(self, x):
        return self.diffusion(x) ** 2

    @property
    def is_constant(self):
        return self.drift.is_constant and self.diffusion.is_constant

    def to_dict(self):
        return {"drift": self.drift.to_dict(), "diffusion": self.diffusion.to_dict()}

    @property
    def hash(self):
        return model_hash(self)

    @classmethod
    def from_dict(cls, spec):
        if not isinstance(spec, dict):
            raise ModelError("model spec must be a JSON object")
        for key in ("drift", "diffusion"):
            if key not in spec:
                raise ModelError(f"model spec is missing {key!r}")
        return cls(coefficient_from_dict(spec["drift"]), coefficient_from_dict(spec["diffusion"]))

    @classmethod
    def constant(cls, drift=0.0, sigma=1.0):
        return cls(FourierSeries(drift), FourierSeries(sigma))

    @classmethod
    def fourier(cls, drift_c0=0.0, drift_cos=(), drift_sin=(), sigma_c0=1.0, sigma_cos=(), sigma_sin=()):
        return cls(FourierSeries(drift_c0, drift_cos, drift_sin), FourierSeries(sigma_c0, sigma_cos, sigma_sin))


def model_hash(model):
    """SHA-256 digest of the canonical JSON form of ``model``."""
    blob = json.dumps(model.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def load_model(path):
    with open(path) as fh:
        return CircleDiffusionModel.from_dict(json.load(fh))


def save_model(model, path):
    Path(path).write_text(json.dumps(model.to_dict(), indent=2, sort_keys=True) + "\n")


def random_fourier_model(rng, order=2, drift_scale=1.0, sigma_wiggle=0.3, reversible=False):
    """Draw a random smooth model; ``reversible=True`` forces zero affinity.

    The reversible branch uses b = a * g with g a zero-mean series, so
    the integral of b/a over a period vanishes.
    """
    sig_cos = rng.uniform(-1, 1, order) * sigma_wiggle / order
    sig_sin = rng.uniform(-1, 1, order) * sigma_wiggle / order
    diffusion = FourierSeries(1.0, sig_cos, sig_sin)
    if not reversible:
        drift = FourierSeries(
            rng.uniform(-1, 1) * drift_scale,
            rng.uniform(-1, 1, order) * drift_scale,
            rng.uniform(-1, 1, order) * drift_scale,
        )
        return CircleDiffusionModel(drift, diffusion)
    g = FourierSeries(0.0, rng.uniform(-1, 1, order) * drift_scale, rng.uniform(-1, 1, order) * drift_scale)
    grid = np.arange(8 * order + 8) / (8 * order + 8)
    return CircleDiffusionModel(fourier_from_samples(diffusion(grid) ** 2 * g(grid)), diffusion)


def fourier_from_samples(values, tol=1e-13):
    """Exact Fourier coefficients of a trigonometric polynomial sampled on ``i/n``.

    ``n`` must exceed twice the degree; coefficients below ``tol`` are dropped.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    coef = np.fft.rfft(values) / n
    kmax = (n - 1) // 2
    cos = 2.0 * coef.real[1 : kmax + 1]
    sin = -2.0 * coef.imag[1 : kmax + 1]
    keep = np.nonzero((np.abs(cos) > tol) | (np.abs(sin) > tol))[0]
    top = keep[-1] + 1 if keep.size else 0
    return FourierSeries(coef.real[0], cos[:top], sin[:top])
