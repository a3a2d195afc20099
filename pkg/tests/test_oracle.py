import numpy as np
import pytest
from scipy import stats

from circlab import CircleDiffusionModel, RingChain, forward_splitting_probability
from circlab.oracle import (
    conditional_first_passage_law,
    gillespie_logs,
    joint_counts_exact,
    joint_scgf_exact,
    random_chain,
    splitting_probability_exact,
    tilted_scgf_exact,
    winding_distribution_exact,
)
from circlab.scgf import oracle_rate_function

ASYM = RingChain(3, [2.0, 1.0, 3.0], [1.0, 1.5, 0.5])
SYM = RingChain(4, [1.0, 2.0, 0.5, 1.5], [1.0, 2.0, 0.5, 1.5])


def test_symmetric_splitting():
    assert splitting_probability_exact(SYM) == pytest.approx(0.5, abs=1e-14)


@pytest.mark.parametrize("start", [0, 1, 2])
def test_splitting_ratio_is_rate_product(start):
    h = splitting_probability_exact(ASYM, start)
    assert h / (1 - h) == pytest.approx(np.exp(ASYM.affinity), rel=1e-12)


def test_splitting_converges_to_diffusion_value():
    model = CircleDiffusionModel.constant(0.5, 1.0)
    target = forward_splitting_probability(model)
    errs = [abs(splitting_probability_exact(RingChain.from_diffusion(model, n)) - target) for n in (20, 40, 80)]
    assert errs[2] < errs[1] < errs[0]
    # Richardson in h with a second-order error term
    rich = (4 * splitting_probability_exact(RingChain.from_diffusion(model, 80))
            - splitting_probability_exact(RingChain.from_diffusion(model, 40))) / 3
    assert abs(rich - target) < 1e-6


def test_discrete_affinity_approaches_gamma():
    model = CircleDiffusionModel.fourier(0.3, (), (1.0,))
    errs = [abs(RingChain.from_diffusion(model, n).affinity - 0.6) for n in (16, 32, 64)]
    assert errs[2] < errs[1] < errs[0]


def test_conditional_law_coincides():
    grid = np.linspace(0.05, 12, 60)
    law = conditional_first_passage_law(ASYM, 0, grid)
    assert abs(law["splitting_probability"] - 0.5) > 0.1
    np.testing.assert_allclose(law["forward"], law["backward"], atol=1e-10, rtol=0)
    law = conditional_first_passage_law(SYM, 1, grid)
    np.testing.assert_allclose(law["forward"], law["backward"], atol=1e-12)


def test_conditional_law_limits():
    law = conditional_first_passage_law(ASYM, 0, [0.0, 200.0])
    assert law["forward"][0] == 0.0 and law["backward"][0] == 0.0
    assert law["forward"][1] == pytest.approx(1.0, abs=1e-10)
    assert law["backward"][1] == pytest.approx(1.0, abs=1e-10)


def test_winding_law_symmetric_is_even():
    ks, p = winding_distribution_exact(SYM, 0, 3.0)
    np.testing.assert_allclose(p, p[::-1], atol=1e-14)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_winding_law_transient_ratio():
    ks, p = winding_distribution_exact(ASYM, 0, 5.0)
    pos = (ks > 0) & (p > 1e-250) & (p[::-1] > 1e-250)
    logr = np.log(p[pos] / p[::-1][pos])
    np.testing.assert_allclose(logr, ks[pos] * ASYM.affinity, atol=1e-8)
    assert p @ np.exp(-ASYM.affinity * ks) == pytest.approx(1.0, abs=1e-10)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_joint_counts_marginal_matches_winding():
    probs = joint_counts_exact(ASYM, 0, 2.0)
    ks, p = winding_distribution_exact(ASYM, 0, 2.0)
    size = probs.shape[0]
    net = np.subtract.outer(np.arange(size), np.arange(size))
    for k, pk in zip(ks, p):
        assert probs[net == k].sum() == pytest.approx(pk, abs=1e-12)


def test_tilted_scgf_basics():
    assert tilted_scgf_exact(ASYM, 0.0) == pytest.approx(0.0, abs=1e-12)
    for lam in (0.3, 1.1, -2.0):
        assert tilted_scgf_exact(SYM, lam) == pytest.approx(tilted_scgf_exact(SYM, -lam), abs=1e-12)


def test_random_chains_gallavotti_cohen():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        chain = random_chain(rng, n_sites=int(rng.integers(3, 8)))
        g = chain.affinity
        for lam in (-1.3, -0.4, 0.2, 0.9):
            assert abs(tilted_scgf_exact(chain, lam) - tilted_scgf_exact(chain, -lam - g)) < 1e-10
        # joint counts: g(l1, l2) = g(l2 - gamma, l1 + gamma)
        a = joint_scgf_exact(chain, 0.3, -0.2)
        b = joint_scgf_exact(chain, -0.2 - g, 0.3 + g)
        assert abs(a - b) < 1e-10


def test_joint_scgf_reduces_to_net_tilt_limit():
    # long-run growth of E exp(lam W) agrees between the two constructions
    for lam in (-0.5, 0.4):
        assert joint_scgf_exact(ASYM, lam, -lam) == pytest.approx(tilted_scgf_exact(ASYM, lam), abs=1e-10)


def test_oracle_rate_function_symmetry():
    x = np.linspace(-1.5, 1.5, 31)
    rate = oracle_rate_function(ASYM, x)
    assert rate.reliable.all()
    assert rate.symmetry_residual < 1e-8
    assert rate.values.min() >= -1e-10


def test_gillespie_matches_exact_winding():
    t = 2.0
    logs = gillespie_logs(ASYM, 0, t, 20_000, master_seed=7)
    net = np.array([log.net for log in logs])
    ks, p = winding_distribution_exact(ASYM, 0, t)
    cells = p * net.size >= 20
    counts = np.array([(net == k).sum() for k in ks[cells]])
    z = stats.norm.isf(0.005 / cells.sum())
    sd = np.sqrt(net.size * p[cells] * (1 - p[cells]))
    assert np.all(np.abs(counts - net.size * p[cells]) <= z * sd)


def test_chain_validation(tmp_path):
    with pytest.raises(ValueError):
        RingChain(2, [1, 1], [1, 1])
    with pytest.raises(ValueError):
        RingChain(3, [1, 1, 0], [1, 1, 1])
    path = tmp_path / "c.json"
    path.write_text('{"n_sites": 3, "p": [2, 1, 3], "q": [1, 1.5, 0.5]}')
    assert RingChain.load(path).affinity == pytest.approx(ASYM.affinity)


def test_winding_law_on_stiff_chain_terminates():
    # fast rates make the Poisson weights sum to 1 - 1e-13 through rounding alone
    chain = RingChain.from_diffusion(CircleDiffusionModel.constant(0.5, 1.0), 8)
    ks, p = winding_distribution_exact(chain, 0, 5.0)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert p @ np.exp(-chain.affinity * ks) == pytest.approx(1.0, abs=1e-10)
