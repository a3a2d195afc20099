import numpy as np
import pytest
from scipy import integrate, special

from circlab import (
    CircleDiffusionModel,
    affinity,
    classify_reversibility,
    entropy_production_rate,
    forward_splitting_probability,
    net_circulation,
    potential,
    scale_function,
    stationary_density,
    summarize,
    time_reversed_drift,
)
from circlab.model import ModelError, TabulatedSeries, random_fourier_model


def test_potential_values(zero_model, const_model, sine_model):
    assert potential(zero_model, 0.7) == pytest.approx(0.0, abs=1e-12)
    assert potential(const_model, 1.0) == pytest.approx(-1.0, abs=1e-12)
    assert potential(sine_model, 0.5) == pytest.approx(-2 / np.pi, abs=1e-12)


def test_scale_function_values(zero_model, const_model):
    assert scale_function(zero_model, 0.3) == pytest.approx(0.3, abs=1e-12)
    assert scale_function(const_model, 1.0) == pytest.approx(1 - np.exp(-1), abs=1e-12)


def test_scale_function_sine_matches_bessel(sine_model):
    # int_0^1 exp((cos 2 pi y - 1)/pi) dy = exp(-1/pi) I0(1/pi)
    exact = np.exp(-1 / np.pi) * special.i0(1 / np.pi)
    assert scale_function(sine_model, 1.0) == pytest.approx(exact, abs=1e-10)


def test_affinity_values(const_model, sine_model, tilted_sine_model):
    assert affinity(const_model) == pytest.approx(1.0, abs=1e-12)
    assert affinity(sine_model) == pytest.approx(0.0, abs=1e-12)
    assert affinity(tilted_sine_model) == pytest.approx(0.6, abs=1e-12)


def test_stationary_density_constant_models(zero_model, const_model):
    s0 = stationary_density(zero_model)
    np.testing.assert_allclose(s0.density, 1.0, atol=1e-10)
    assert s0.flux_constant == pytest.approx(0.0, abs=1e-12)
    s1 = stationary_density(const_model)
    np.testing.assert_allclose(s1.density, 1.0, atol=1e-10)
    assert s1.flux_constant == pytest.approx(-0.5, abs=1e-10)


def test_sine_density_is_gibbs_and_solves_equation(sine_model):
    sol = stationary_density(sine_model, 16385)
    x = sol.grid
    gibbs = np.exp((1 - np.cos(2 * np.pi * x)) / np.pi)
    gibbs /= integrate.quad(lambda y: np.exp((1 - np.cos(2 * np.pi * y)) / np.pi), 0, 1)[0]
    np.testing.assert_allclose(sol.density, gibbs, rtol=1e-9)
    assert sol.flux_constant == pytest.approx(0.0, abs=1e-12)
    # finite-difference residual of 1/2 (a rho)'' - (b rho)' on the grid
    h = x[1] - x[0]
    rho = sol.density
    d2 = (rho[2:] - 2 * rho[1:-1] + rho[:-2]) / h**2
    br = np.sin(2 * np.pi * x) * rho
    d1 = (br[2:] - br[:-2]) / (2 * h)
    assert np.max(np.abs(0.5 * d2 - d1)) < 1e-6


def test_density_against_independent_integral(tilted_sine_model):
    # rho(x) is proportional to exp(2B(x)) int_x^{x+1} exp(-2B(y)) dy, B' = b
    def B(x):
        return 0.3 * x + (1 - np.cos(2 * np.pi * x)) / (2 * np.pi)

    def unnorm(x):
        return np.exp(2 * B(x)) * integrate.quad(lambda y: np.exp(-2 * B(y)), x, x + 1, epsabs=1e-13)[0]

    z = integrate.quad(unnorm, 0, 1, epsabs=1e-13)[0]
    sol = stationary_density(tilted_sine_model)
    for x in (0.0, 0.25, 0.5, 0.75):
        i = int(round(x * (sol.grid.size - 1)))
        assert sol.density[i] == pytest.approx(unnorm(x) / z, rel=1e-9)
    j = integrate.quad(lambda x: (0.3 + np.sin(2 * np.pi * x)) * unnorm(x) / z, 0, 1, epsabs=1e-13)[0]
    assert net_circulation(tilted_sine_model, sol) == pytest.approx(j, abs=1e-9)


def test_net_circulation_and_entropy(zero_model, const_model, sine_model):
    assert net_circulation(const_model, stationary_density(const_model)) == pytest.approx(0.5, abs=1e-10)
    assert net_circulation(sine_model, stationary_density(sine_model)) == pytest.approx(0.0, abs=1e-10)
    assert entropy_production_rate(const_model) == pytest.approx(0.5, abs=1e-10)
    assert entropy_production_rate(sine_model) == pytest.approx(0.0, abs=1e-10)
    m = CircleDiffusionModel.constant(0.4, 0.8)
    assert entropy_production_rate(m) == pytest.approx(2 * 0.4**2 / 0.8**2, abs=1e-10)


def test_splitting_probability(zero_model, const_model):
    assert forward_splitting_probability(zero_model) == 0.5
    assert forward_splitting_probability(const_model) == pytest.approx(np.e / (1 + np.e), abs=1e-12)


def test_time_reversed_drift(zero_model, const_model, sine_model):
    for model, expected in ((zero_model, 0.0), (const_model, -0.5)):
        np.testing.assert_allclose(time_reversed_drift(model, stationary_density(model)), expected, atol=1e-10)
    # reversible: the reversed drift equals the drift itself
    sol = stationary_density(sine_model)
    np.testing.assert_allclose(time_reversed_drift(sine_model, sol), np.sin(2 * np.pi * sol.grid), atol=1e-9)


def test_reversed_drift_rejects_foreign_solution(zero_model, const_model):
    with pytest.raises(ValueError):
        time_reversed_drift(zero_model, stationary_density(const_model))


def test_classify_reversibility(zero_model, const_model, sine_model):
    assert classify_reversibility(zero_model)[0]
    assert classify_reversibility(sine_model)[0]
    rev, report = classify_reversibility(const_model)
    assert not rev and report["consistent"]


@pytest.mark.parametrize("seed", range(10))
def test_random_models_reversibility_matches_flux(seed):
    rng = np.random.default_rng(seed)
    model = random_fourier_model(rng, reversible=seed % 2 == 0)
    rev, report = classify_reversibility(model)
    assert rev == (seed % 2 == 0)
    assert report["consistent"]
    sol = stationary_density(model)
    assert sol.normalization_residual < 1e-8
    assert sol.density.min() > 0


def test_summary_dict(const_model):
    d = summarize(const_model).to_dict()
    assert d["gamma"] == pytest.approx(1.0)
    assert d["J"] == pytest.approx(0.5)
    assert d["e"] == pytest.approx(0.5)
    assert d["splitting_probability"] == pytest.approx(0.731059, abs=1e-6)
    assert d["reversible"] is False


def test_tabulated_model_matches_fourier():
    x = np.arange(256) / 256
    tab = CircleDiffusionModel(TabulatedSeries(0.3 + np.sin(2 * np.pi * x)), TabulatedSeries(np.ones(256)))
    assert affinity(tab) == pytest.approx(0.6, abs=1e-6)


def test_invalid_models():
    with pytest.raises(ModelError):
        CircleDiffusionModel.constant(0.0, 0.0)
    with pytest.raises(ModelError):
        CircleDiffusionModel.from_dict({"drift": {"type": "fourier", "c0": 0.0}})
    with pytest.raises(ModelError):
        CircleDiffusionModel.fourier(0.0, (), (), 1.0, (1.5,))
