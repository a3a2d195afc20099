"""Closed-form quantities attached to a circle diffusion.

Conventions: the generator is ``(a/2) f'' + b f'`` with ``a = sigma**2``.
The potential is ``U(x) = -2 int_0^x b/a``, the scale function
``s(x) = int_0^x exp(U)``, the affinity ``gamma = -U(1)``. The stationary
density solves the once-integrated forward equation

    (a rho)'/2 - b rho = c,

whose constant is ``c = -J`` with ``J`` the net circulation.
"""

from __future__ import annotations

import csv
import functools
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ._quadrature import CompositeAntiderivative, QuadratureError, adaptive_integral, gauss_legendre
from .model import model_hash

REVERSIBILITY_TOL = 1e-10
PERIODICITY_TOL = 1e-8
DEFAULT_GRID = 1025

__all__ = [
    "QuadratureError",
    "StationarySolution",
    "ModelSummary",
    "potential",
    "scale_function",
    "affinity",
    "stationary_density",
    "net_circulation",
    "entropy_production_rate",
    "forward_splitting_probability",
    "time_reversed_drift",
    "classify_reversibility",
    "summarize",
    "write_density_csv",
]


class DensityError(ValueError):
    """Stationary density too close to zero for a ratio with it."""


def _drift_ratio(model):
    return lambda y: model.b(y) / model.a(y)


def potential(model, x):
    """U(x) = -2 int_0^x b/a, by adaptive quadrature."""
    return -2.0 * adaptive_integral(_drift_ratio(model), 0.0, float(x))


def scale_function(model, x):
    """s(x) = int_0^x exp(U(y)) dy."""
    x = float(x)
    prof = _profiles(model)
    return adaptive_integral(lambda y: np.exp(prof.potential(y)), 0.0, x) if 0 <= x <= 1 else _scale_outside(model, x)


def _scale_outside(model, x):
    # s(y + 1) - s(1) = exp(-gamma) s(y) extends s beyond [0, 1]
    gamma = affinity(model)
    k = np.floor(x)
    frac = x - k
    s1 = scale_function(model, 1.0)
    sf = scale_function(model, frac)
    r = np.exp(-gamma)
    if abs(gamma) < 1e-14:
        return k * s1 + sf
    return s1 * (1 - r**k) / (1 - r) + r**k * sf


def affinity(model):
    """gamma = 2 int_0^1 b/sigma^2."""
    return 2.0 * adaptive_integral(_drift_ratio(model), 0.0, 1.0)


class _Profiles:
    """Vectorised U, s on [0, 1] for grid work (composite Gauss-Legendre)."""

    def __init__(self, model):
        self.model = model
        ratio = _drift_ratio(model)
        self._u = CompositeAntiderivative(lambda y: -2.0 * ratio(y), periodic=True)
        self._s = CompositeAntiderivative(lambda y: np.exp(self._u(y)), periodic=False)
        self.gamma = -self._u.period_integral

    def potential(self, x):
        return self._u(x)

    def scale(self, x):
        return self._s(x)


@functools.lru_cache(maxsize=64)
def _profiles(model):
    return _Profiles(model)


@dataclass(frozen=True)
class StationarySolution:
    """Stationary density on a uniform grid of [0, 1] (endpoints included)."""

    grid: np.ndarray
    density: np.ndarray
    flux_constant: float
    normalization_residual: float
    model_hash: str
    psi0: float = float("nan")

    def __post_init__(self):
        if np.any(self.density < 0):
            raise DensityError("negative stationary density")

    def at(self, x):
        """Density at arbitrary points (periodic linear interpolation)."""
        x = np.asarray(x, dtype=float)
        return np.interp(x - np.floor(x), self.grid, self.density)


@functools.lru_cache(maxsize=64)
def _stationary_coefficients(model):
    prof = _profiles(model)
    gamma = prof.gamma
    s1 = float(prof.scale(1.0))

    def weight(y):
        return np.exp(-prof.potential(y)) / model.a(y)

    edges = np.arange(65) / 64
    a_int = gauss_legendre(weight, edges[:-1], edges[1:]).sum()
    b_int = gauss_legendre(lambda y: weight(y) * prof.scale(y), edges[:-1], edges[1:]).sum()
    # unknowns (psi0, c): psi(x) = exp(-U(x)) (psi0 + 2 c s(x))
    mat = np.array([[np.expm1(gamma), 2.0 * np.exp(gamma) * s1], [a_int, 2.0 * b_int]])
    det = np.linalg.det(mat)
    if not np.isfinite(det) or abs(det) < 1e-300:
        raise np.linalg.LinAlgError("singular periodicity/normalization system")
    psi0, c = np.linalg.solve(mat, [0.0, 1.0])
    return float(psi0), float(c)


def stationary_density(model, grid_size=DEFAULT_GRID):
    """Solve for the periodic stationary density on ``grid_size`` uniform points.

    Parameters
    ----------
    model : CircleDiffusionModel
    grid_size : int
        Number of grid points including both endpoints, at least 16.

    Returns
    -------
    StationarySolution
    """
    if grid_size < 16:
        raise ValueError("grid_size must be at least 16")
    prof = _profiles(model)
    psi0, c = _stationary_coefficients(model)
    x = np.linspace(0.0, 1.0, grid_size)
    psi = np.exp(-prof.potential(x)) * (psi0 + 2.0 * c * prof.scale(x))
    density = psi / model.a(x)
    if abs(density[0] - density[-1]) > PERIODICITY_TOL:
        raise RuntimeError(f"stationary density is not periodic: {density[0]} vs {density[-1]}")
    density = np.maximum(density, 0.0)
    residual = abs(np.trapezoid(density, x) - 1.0)
    return StationarySolution(x, density, c, float(residual), model_hash(model), psi0)


def psi_function(model):
    """Vectorised ``x -> a(x) rho(x)`` on the whole line (periodic)."""
    prof = _profiles(model)
    psi0, c = _stationary_coefficients(model)

    def psi(x):
        x = np.asarray(x, dtype=float)
        r = x - np.floor(x)
        return np.exp(-prof.potential(r)) * (psi0 + 2.0 * c * prof.scale(r))

    return psi


def _check_solution(model, solution):
    if solution.model_hash != model_hash(model):
        raise ValueError("stationary solution was computed for a different model")


def net_circulation(model, solution):
    """J = int_0^1 b rho, trapezoid rule on the solution grid."""
    _check_solution(model, solution)
    return float(np.trapezoid(model.b(solution.grid) * solution.density, solution.grid))


def entropy_production_rate(model, solution=None):
    """e = J * gamma."""
    if solution is None:
        solution = stationary_density(model)
    return net_circulation(model, solution) * affinity(model)


def forward_splitting_probability(model):
    """Probability that the first completed cycle is the forward one: e^g / (1 + e^g)."""
    return float(expit(affinity(model)))


def time_reversed_drift(model, solution):
    """Drift of the stationary time-reversed process on the solution grid.

    Uses ``(a rho)' = 2 (c + b rho)`` so no numerical derivative is taken:
    ``-b + (a rho)'/rho = b + 2 c / rho``.
    """
    _check_solution(model, solution)
    rho = solution.density
    if rho.min() < 1e-14:
        raise DensityError(f"stationary density {rho.min():.3g} too small for the reversed drift")
    b = model.b(solution.grid)
    return -b + 2.0 * (solution.flux_constant + b * rho) / rho


def classify_reversibility(model, tol=REVERSIBILITY_TOL, solution=None):
    """Return ``(reversible, report)``; reversible iff |gamma| < tol.

    The report cross-checks the equivalence with a vanishing net circulation,
    using a tolerance scaled by the size of ``b * rho``.
    """
    gamma = affinity(model)
    if solution is None:
        solution = stationary_density(model)
    j = net_circulation(model, solution)
    scale = 1.0 + float(np.max(np.abs(model.b(solution.grid) * solution.density)))
    j_tol = max(tol, 1e-9) * scale
    reversible = abs(gamma) < tol
    j_zero = abs(j) < j_tol
    report = {
        "gamma": gamma,
        "J": j,
        "gamma_tolerance": tol,
        "J_tolerance": j_tol,
        "J_vanishes": bool(j_zero),
        "consistent": bool(j_zero == reversible),
    }
    return reversible, report


@dataclass(frozen=True)
class ModelSummary:
    grid: np.ndarray
    potential_at: np.ndarray
    scale_at: np.ndarray
    affinity: float
    net_circulation: float
    entropy_production_rate: float
    forward_splitting_probability: float
    reversible: bool
    solution: StationarySolution

    def to_dict(self):
        return {
            "gamma": self.affinity,
            "J": self.net_circulation,
            "e": self.entropy_production_rate,
            "splitting_probability": self.forward_splitting_probability,
            "reversible": self.reversible,
            "flux_constant": self.solution.flux_constant,
            "normalization_residual": self.solution.normalization_residual,
        }


def summarize(model, grid_size=DEFAULT_GRID):
    solution = stationary_density(model, grid_size)
    prof = _profiles(model)
    gamma = affinity(model)
    j = net_circulation(model, solution)
    reversible, _ = classify_reversibility(model, solution=solution)
    return ModelSummary(
        grid=solution.grid,
        potential_at=prof.potential(solution.grid),
        scale_at=prof.scale(solution.grid),
        affinity=gamma,
        net_circulation=j,
        entropy_production_rate=j * gamma,
        forward_splitting_probability=float(expit(gamma)),
        reversible=reversible,
        solution=solution,
    )


def write_density_csv(solution, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "rho"])
        for x, r in zip(solution.grid, solution.density):
            writer.writerow([repr(float(x)), repr(float(r))])
