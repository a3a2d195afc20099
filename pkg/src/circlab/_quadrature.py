"""Quadrature back ends shared by the analytic routines."""

import warnings

import numpy as np
from scipy import integrate

ABS_TOL = 1e-12
SIMPSON_PANELS = 2**16

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class QuadratureError(RuntimeError):
    """Quadrature failed to reach the requested tolerance."""

    def __init__(self, message, achieved):
        super().__init__(f"{message} (achieved tolerance {achieved:.3g})")
        self.achieved = achieved


def simpson(f, lo, hi, panels=SIMPSON_PANELS):
    x = np.linspace(lo, hi, panels + 1)
    return integrate.simpson(f(x), x=x)


def adaptive_integral(f, lo, hi, epsabs=ABS_TOL):
    """Integrate a vectorised ``f`` over ``[lo, hi]``.

    Adaptive Gauss-Kronrod first; composite Simpson with 2**16 panels when
    QUADPACK reports trouble. Raises ``QuadratureError`` if neither converges.
    """
    if lo == hi:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, info = integrate.quad(
            lambda y: float(f(np.asarray(y))), lo, hi, epsabs=epsabs, epsrel=epsabs, limit=400, full_output=1
        )[:3]
    if err <= max(epsabs, 1e-13 * abs(val)):
        return val
    fine = simpson(f, lo, hi)
    coarse = simpson(f, lo, hi, SIMPSON_PANELS // 2)
    achieved = abs(fine - coarse)
    if achieved > 1e-9 * max(1.0, abs(fine)):
        raise QuadratureError("quadrature did not converge", achieved)
    return fine


def gauss_legendre(f, lo, hi):
    """16-point Gauss-Legendre rule on each interval ``[lo_i, hi_i]`` (vectorised)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    half = 0.5 * (hi - lo)
    nodes = (lo + half)[..., None] + half[..., None] * _GL_NODES
    return half * (f(nodes) @ _GL_WEIGHTS)


class CompositeAntiderivative:
    """``F(x) = int_0^x f`` from a composite Gauss-Legendre table on ``[0, 1]``.

    With ``periodic=True`` the integrand is assumed 1-periodic and ``F`` is
    extended by ``F(x + 1) = F(x) + F(1)``; otherwise ``x`` must lie in [0, 1].
    """

    def __init__(self, f, cells=64, periodic=False):
        self.f = f
        self.cells = cells
        self.periodic = periodic
        edges = np.arange(cells + 1) / cells
        self.edges = edges
        self.cumulative = np.concatenate([[0.0], np.cumsum(gauss_legendre(f, edges[:-1], edges[1:]))])
        self.period_integral = self.cumulative[-1]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.periodic:
            shift = np.floor(x)
            r = x - shift
        else:
            if x.size and (x.min() < -1e-15 or x.max() > 1 + 1e-15):
                raise ValueError("non-periodic antiderivative is only defined on [0, 1]")
            shift = np.zeros_like(x)
            r = np.clip(x, 0.0, 1.0)
        cell = np.minimum((r * self.cells).astype(int), self.cells - 1)
        lo = self.edges[cell]
        return shift * self.period_integral + self.cumulative[cell] + gauss_legendre(self.f, lo, r)
