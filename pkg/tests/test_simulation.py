import math

import numpy as np
import pytest
from scipy import stats as sps

from winnerscurse.pipeline import BayesSettings
from winnerscurse.sampler import ChainConfig
from winnerscurse.simulation import (ESTIMATORS, Scenario, SimulationConfig, SimulationError,
                                     draw_significant_statistic, draw_significant_statistics, fixed_n_sweep,
                                     run_config, run_scenario, sample_size_table, scenario_grid, summarize)
from winnerscurse.stats import conditional_bias, critical_value

MU = math.log(1.1)
FAST = BayesSettings(chain=ChainConfig(iterations=4000, burn_in=1000))

SAMPLE_SIZES = {
    (0.05, 0.1): 41, (0.05, 0.2): 202, (0.05, 0.5): 846, (0.05, 0.9): 2678, (0.05, 0.99): 4932,
    (1e-4, 0.1): 1857, (1e-4, 0.2): 2588, (1e-4, 0.5): 4323, (1e-4, 0.9): 7816, (1e-4, 0.99): 11423,
    (1e-6, 0.1): 3767, (1e-6, 0.2): 4783, (1e-6, 0.5): 7062, (1e-6, 0.9): 11383, (1e-6, 0.99): 15666,
}


def rejection_draws(m, c, size, rng):
    """Test-only cross-check: simulate N(m, 1) and keep significant values."""
    kept, tried = [], 0
    while len(kept) < size:
        x = rng.normal(m, 1.0, 10 * size)
        tried += x.size
        kept.extend(x[x > c])
    return np.array(kept[:size]), len(kept) / tried


@pytest.mark.parametrize("sigma", [1.685, 1.6855])
def test_scenario_sample_sizes(sigma):
    table = sample_size_table(MU, sigma)
    for key, n in SAMPLE_SIZES.items():
        assert table[key] == pytest.approx(n, rel=0.0015)


def test_scenario_fields():
    sc = Scenario(MU, 1.6855, 1e-6, 0.1)
    assert sc.se == pytest.approx(1.6855 / math.sqrt(sc.n))
    assert sc.c == pytest.approx(4.753, abs=1e-3)
    assert sc.actual_power == pytest.approx(0.1, abs=0.005)
    assert Scenario(MU, 1.0, 0.05, n=10).n == 10
    for bad in (dict(replicates=0, power=0.5), dict(sigma=0, power=0.5), dict(), dict(n=0)):
        with pytest.raises(ValueError):
            Scenario(MU, **{"sigma": 1.0, **bad})


def test_truncated_mean_matches_bias_formula():
    sc = Scenario(MU, 1.6855, 0.05, 0.1)
    rng = np.random.default_rng(1)
    draws = np.array([draw_significant_statistic(sc, rng) for _ in range(100000)])
    assert np.all(draws > sc.c)
    assert draws.mean() == pytest.approx(sc.m + conditional_bias(sc.m, sc.c), abs=0.01)


def test_inverse_cdf_agrees_with_rejection():
    sc = Scenario(MU, 1.6855, 1e-4, 0.2)
    rng = np.random.default_rng(2)
    ref, accept = rejection_draws(sc.m, sc.c, 20000, rng)
    ours = draw_significant_statistics(sc.m, sc.c, 20000, rng)
    assert accept == pytest.approx(sc.actual_power, abs=4 * math.sqrt(0.2 * 0.8 / 200000))
    assert sps.ks_2samp(ref, ours).pvalue > 0.001


def test_vanishing_truncation():
    c = critical_value(0.05)
    draws = draw_significant_statistics(c + 6, c, 200000, np.random.default_rng(3))
    d = sps.kstest(draws, sps.norm(c + 6, 1).cdf).statistic
    assert d < 0.01


def test_extreme_tail_never_returns_insignificant():
    sc = Scenario(0.0, 1.0, 1e-12, n=100)  # null effect, c ~ 7
    rng = np.random.default_rng(4)
    assert all(draw_significant_statistic(sc, rng) > sc.c for _ in range(2000))
    assert np.all(draw_significant_statistics(sc.m, sc.c, 10000, rng) > sc.c)


def test_summary_identity():
    rng = np.random.default_rng(5)
    est = rng.normal(0.1, 0.05, (200, 3))
    for s in summarize(est, 0.08, ["a", "b", "c"]).values():
        assert s.rmse**2 == pytest.approx(s.bias**2 + s.variance, abs=1e-10)


@pytest.fixture(scope="module")
def small_cell():
    sc = Scenario(MU, 1.6855, 1e-4, 0.5, replicates=40)
    return sc, run_scenario(sc, settings=FAST, base_seed=17)


def test_run_scenario_outputs(small_cell):
    sc, table = small_cell
    assert list(table.methods) == list(ESTIMATORS)
    assert table.estimates.shape == (40, len(ESTIMATORS))
    assert np.all(table.t_obs > sc.c)
    assert table.seeds == list(range(17, 57))
    for s in table.methods.values():
        assert s.rmse**2 == pytest.approx(s.bias**2 + s.variance, abs=1e-10)
    rows = list(table.rows())
    assert len(rows) == len(ESTIMATORS) and rows[0]["n"] == sc.n


def test_run_scenario_reproducible(small_cell):
    sc, table = small_cell
    again = run_scenario(sc, settings=FAST, base_seed=17, workers=1)
    assert np.array_equal(table.estimates, again.estimates)
    assert np.array_equal(table.t_obs, again.t_obs)
    # a subset of seeds reproduces the matching rows regardless of scheduling
    part = run_scenario(sc, seeds=[20, 30], settings=FAST)
    assert np.array_equal(part.estimates, table.estimates[[3, 13]])


def test_failures_abort_with_diagnostics():
    sc = Scenario(MU, 1.6855, 0.05, 0.5, replicates=2)
    with pytest.raises(ValueError):
        run_scenario(sc, settings=BayesSettings(extra_priors=False))
    bad = BayesSettings(chain=ChainConfig(iterations=4000, burn_in=1000), ci_level=0.2)
    with pytest.raises(SimulationError, match="seed"):
        run_scenario(sc, settings=bad)


def test_near_full_power_naive_bias_small():
    for alpha in (0.05, 1e-4, 1e-6):
        table = run_scenario(Scenario(MU, 1.6855, alpha, 0.99), settings=FAST, base_seed=1)
        assert table.methods["N"].mean - MU < 0.1 * MU


def test_null_effect_cell():
    sc = Scenario(0.0, 1.6855, 1e-4, n=1000, replicates=200)
    table = run_scenario(sc, settings=FAST, base_seed=5)
    expected_naive = conditional_bias(0.0, sc.c) * sc.se
    sd_naive = table.estimates[:, 0].std() / math.sqrt(200)
    assert table.methods["N"].mean == pytest.approx(expected_naive, abs=4 * sd_naive)
    assert table.methods["B.L"].mean < 0.1 * table.methods["N"].mean


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [0.05, 1e-4, 1e-6])
@pytest.mark.parametrize("power", [0.1, 0.2, 0.5])
def test_low_power_bias_and_variance(alpha, power):
    table = run_scenario(Scenario(MU, 1.6855, alpha, power), settings=FAST, base_seed=100)
    m = table.methods
    assert abs(m["N"].bias) > abs(m["MLE"].bias)
    assert m["B.L"].variance < m["MLE"].variance
    # sign test on squared deviations from each estimator's own mean
    est = table.estimates
    dev_bl = (est[:, 2] - est[:, 2].mean()) ** 2
    dev_mle = (est[:, 1] - est[:, 1].mean()) ** 2
    wins = int(np.sum(dev_bl < dev_mle))
    assert sps.binomtest(wins, est.shape[0], 0.5, alternative="greater").pvalue < 0.01


def exact_mean(estimator, sc):
    """E[estimator(T) | T > c] by quadrature over the truncated law of T."""
    from scipy import integrate

    def weight(t):
        return sps.norm.pdf(t - sc.m) / sps.norm.sf(sc.c - sc.m)

    return integrate.quad(lambda t: estimator(t) * weight(t), sc.c, sc.c + 40, limit=200)[0] * sc.se


@pytest.mark.parametrize("alpha", [0.05, 1e-4, 1e-6])
@pytest.mark.parametrize("power", [0.1, 0.2, 0.5])
def test_exact_bias_ordering(alpha, power):
    """Quadrature version of the bias ordering, free of Monte Carlo noise."""
    from winnerscurse.estimators import unconstrained_mle

    sc = Scenario(MU, 1.6855, alpha, power)
    bias_n = exact_mean(lambda t: t, sc) - MU
    bias_mle = exact_mean(lambda t: max(unconstrained_mle(t, sc.c), 0.0), sc) - MU
    assert abs(bias_n) > abs(bias_mle)


def test_fixed_n_sweep_shape_and_strong_cell():
    mus = [0.0, math.log(1.5)]
    tables = fixed_n_sweep(1000, mus, (0.05, 1e-4), replicates=30, settings=FAST, base_seed=3)
    assert len(tables) == 4
    strong = tables[2]
    assert strong.alpha == 0.05 and strong.mu_true == pytest.approx(math.log(1.5))
    assert strong.n == 1000
    for name, s in strong.methods.items():
        assert s.mean == pytest.approx(math.log(1.5), rel=0.05), name


def test_config_validation():
    SimulationConfig()
    for bad in (dict(mode="x"), dict(alphas=[0.7]), dict(powers=[]), dict(replicates=0), dict(sigma=-1),
                dict(iterations=10, burn_in=20), dict(scheme="nope"), dict(mode="fixed_n", mus=[-0.1]),
                dict(n=2.5)):
        with pytest.raises(ValueError):
            SimulationConfig(**bad)
    with pytest.raises(ValueError):
        SimulationConfig.from_dict({"alpha": 0.05})


def test_run_config_grid_seeding():
    cfg = SimulationConfig(alphas=(0.05,), powers=(0.5, 0.9), replicates=3, iterations=3000, burn_in=500)
    a = run_config(cfg, seed=9)
    b = run_config(cfg, seed=9)
    assert len(a) == 2
    assert all(np.array_equal(x.estimates, y.estimates) for x, y in zip(a, b))
    assert a[0].seeds != a[1].seeds


def test_grid_default_shape():
    grid = scenario_grid()
    assert len(grid) == 15
    assert {(s.alpha, s.power) for s in grid} == set(SAMPLE_SIZES)
