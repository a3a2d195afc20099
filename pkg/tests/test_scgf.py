import numpy as np
import pytest

from circlab import RingChain, SimulationConfig
from circlab.oracle import gillespie_logs, tilted_scgf_exact
from circlab.scgf import (
    convexify,
    joint_rate_function,
    legendre_exact,
    rate_function_estimate,
    rate_function_report,
    scgf_estimate,
    scgf_from_counts,
    scgf_from_logs,
)

ASYM = RingChain(3, [2.0, 1.0, 3.0], [1.0, 1.5, 0.5])
HORIZONS = (5.0, 10.0, 20.0, 40.0)


@pytest.fixture(scope="module")
def chain_logs():
    return gillespie_logs(ASYM, 0, HORIZONS[-1], 20_000, master_seed=3)


def test_origin_is_pinned(chain_logs):
    est = scgf_from_logs(chain_logs, HORIZONS, [-0.4, 0.0, 0.4], n_resamples=50)
    assert np.all(est.values[:, 1] == 0.0)
    assert est.extrapolated[1] == 0.0 and est.stderr[1] == 0.0
    joint = scgf_from_logs(chain_logs, HORIZONS, [[0.0, 0.0], [0.2, -0.1]], n_resamples=50)
    assert joint.joint and joint.extrapolated[0] == 0.0


def test_extrapolation_matches_exact_eigenvalue(chain_logs):
    lam = np.array([-0.6, -0.3, 0.3])
    est = scgf_from_logs(chain_logs, HORIZONS, lam, n_resamples=100)
    exact = np.array([tilted_scgf_exact(ASYM, l) for l in lam])
    np.testing.assert_allclose(est.extrapolated, exact, rtol=0.02)


def test_inverse_t_fit_is_exact_on_model_data():
    # counts engineered so that log E exp(lam W) / t = c0 + c1 / t exactly
    horizons = np.array([1.0, 2.0, 4.0])
    counts = np.zeros((4, 3, 2))
    counts[:, :, 0] = np.array([0, 1, 2, 3])[:, None]
    est = scgf_from_counts(counts, horizons, [0.5], n_resamples=20)
    v = np.log(np.mean(np.exp(0.5 * np.arange(4))))
    np.testing.assert_allclose(est.values[:, 0], v / horizons)
    assert est.extrapolated[0] == pytest.approx(0.0, abs=1e-12)


def test_horizon_validation():
    with pytest.raises(ValueError):
        scgf_from_counts(np.zeros((3, 2, 2)), [1.0, 2.0], [0.1])


def test_convexify_repairs_kink():
    lam = np.linspace(-1, 1, 5)
    vals = lam**2
    vals[2] += 0.3
    fixed, change = convexify(lam, vals)
    # the hull through lam = -0.5 and 0.5 sits at 0.25, so the bump of 0.3 drops by 0.05
    assert change == pytest.approx(0.05, abs=1e-12)
    assert np.all(np.diff(fixed, 2) >= -1e-12)


def test_legendre_of_quadratic():
    # sup_l (l x - l^2 / 2) = x^2 / 2
    for x in (-1.0, 0.3, 2.0):
        val, arg, interior = legendre_exact(lambda l: 0.5 * l * l, x, (-10, 10))
        assert val == pytest.approx(0.5 * x * x, abs=1e-10)
        assert arg == pytest.approx(x, abs=1e-6) and interior


def test_rate_function_from_exact_values():
    class Exact:
        joint = False
        lambda_grid = np.linspace(-4, 3, 141) - ASYM.affinity / 2
        extrapolated = np.array([tilted_scgf_exact(ASYM, l) for l in lambda_grid])
        stderr = np.zeros_like(lambda_grid)

    rate = rate_function_estimate(Exact, ASYM.affinity, np.linspace(-0.6, 0.6, 13))
    assert rate.convexified
    assert rate.symmetry_residual < 1e-2
    # the law-of-large-numbers point carries zero rate
    j = (tilted_scgf_exact(ASYM, 1e-6) - tilted_scgf_exact(ASYM, -1e-6)) / 2e-6
    fine = rate_function_estimate(Exact, ASYM.affinity, np.linspace(-0.6, 0.6, 241))
    assert abs(fine.x[np.argmin(fine.values)] - j) <= 0.01
    assert rate_function_report(rate, ASYM.affinity, 1e-2).passed


def test_joint_rate_function_symmetry():
    class Joint:
        joint = True
        grid = np.array([[a, b] for a in np.linspace(-2, 2, 9) for b in np.linspace(-2, 2, 9)])
        lambda_grid = grid
        # exchangeable in (l1, l2): the gamma = 0 case
        extrapolated = 0.5 * (np.exp(grid[:, 0]) + np.exp(grid[:, 1])) - 1.0

    pts = [[0.2, 0.1], [0.1, 0.2], [0.3, 0.3]]
    values, resid = joint_rate_function(Joint, 0.0, pts)
    assert values.shape == (3,)
    assert resid < 1e-12


def test_scgf_estimate_zero_drift_is_even():
    from circlab import CircleDiffusionModel

    cfg = SimulationConfig(step_size=1e-2, n_paths=3000, master_seed=1, horizon=5.0)
    est = scgf_estimate(CircleDiffusionModel.constant(0.0, 1.0), cfg, [-0.5, 0.5], horizons=(1.0, 2.0, 4.0),
                        n_resamples=50)
    assert abs(est.extrapolated[0] - est.extrapolated[1]) < 5 * est.stderr.max() + 1e-3
