"""Factorial bias/RMSE study over significance level and power.

Only the sufficient statistic is simulated: a draw from N(m, 1) truncated to
the significant region, with ``m = mu * sqrt(n) / sigma``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .pipeline import BayesSettings, correct, derive_seed, with_seed
from .stats import (TestContext, critical_value, power_of_test, required_sample_size, standard_normal_isf,
                    standard_normal_sf)

ESTIMATORS = ("N", "MLE", "B.L", "B.H", "B.BMA", "B.M", "B.Unif")
ALPHAS = (0.05, 1e-4, 1e-6)
POWERS = (0.1, 0.2, 0.5, 0.9, 0.99)
MU_DEFAULT = math.log(1.1)
SIGMA_DEFAULT = 1.6855


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Scenario:
    mu_true: float = MU_DEFAULT
    sigma: float = SIGMA_DEFAULT
    alpha: float = 0.05
    power: Optional[float] = None
    n: Optional[int] = None
    replicates: int = 200

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        if self.n is None:
            if self.power is None:
                raise ValueError("give either a power level or a sample size")
            object.__setattr__(self, "n", required_sample_size(self.mu_true, self.sigma, self.alpha, self.power))
        elif self.n < 1:
            raise ValueError("sample size must be positive")

    @property
    def se(self) -> float:
        return self.sigma / math.sqrt(self.n)

    @property
    def m(self) -> float:
        return self.mu_true / self.se

    @property
    def c(self) -> float:
        return critical_value(self.alpha)

    @property
    def actual_power(self) -> float:
        return power_of_test(self.m, self.c)


def draw_significant_statistic(scenario: Scenario, rng: np.random.Generator) -> float:
    """One statistic from N(m, 1) conditioned on exceeding c, by inverting the tail."""
    m, c = scenario.m, scenario.c
    tail = standard_normal_sf(c - m)
    while True:
        q = (1.0 - rng.random()) * tail  # in (0, tail]
        if q < 1.0:
            t = m + standard_normal_isf(q)
            if t > c:
                return t


def draw_significant_statistics(m: float, c: float, size: int, rng: np.random.Generator) -> np.ndarray:
    from scipy import special

    tail = standard_normal_sf(c - m)
    u = 1.0 - rng.random(size)
    t = m - special.ndtri(u * tail)
    return np.maximum(t, np.nextafter(c, np.inf))


@dataclass(frozen=True)
class MethodSummary:
    mean: float
    bias: float
    variance: float
    rmse: float


@dataclass
class SummaryTable:
    alpha: float
    power: Optional[float]
    n: int
    mu_true: float
    sigma: float
    replicates: int
    methods: dict  # tag -> MethodSummary
    estimates: Optional[np.ndarray] = field(default=None, repr=False)  # replicates x methods
    t_obs: Optional[np.ndarray] = field(default=None, repr=False)
    seeds: Optional[list] = field(default=None, repr=False)

    def rows(self):
        for name, s in self.methods.items():
            yield {"alpha": self.alpha, "power": self.power, "n": self.n, "mu_true": self.mu_true,
                   "method": name, **asdict(s)}


def summarize(estimates: np.ndarray, mu_true: float, names: Sequence[str]) -> dict:
    out = {}
    for j, name in enumerate(names):
        x = estimates[:, j]
        mean = float(x.mean())
        bias = mean - mu_true
        var = float(np.mean((x - mean) ** 2))
        rmse = math.sqrt(float(np.mean((x - mu_true) ** 2)))
        out[name] = MethodSummary(mean, bias, var, rmse)
    return out


def _replicate(scenario: Scenario, seed: int, settings: BayesSettings):
    rng = np.random.default_rng(derive_seed(seed, 0))
    t = draw_significant_statistic(scenario, rng)
    ctx = TestContext(t, scenario.alpha, scenario.se)
    result = correct(ctx, with_seed(settings, derive_seed(seed, 1)))
    return t, [result.point(name) for name in ESTIMATORS]


def run_scenario(scenario: Scenario, seeds: Optional[Iterable[int]] = None, *,
                 settings: BayesSettings = BayesSettings(), base_seed: int = 0,
                 workers: Optional[int] = None) -> SummaryTable:
    """Simulate significant data sets and score all seven estimators.

    Replicate ``i`` uses seed ``base_seed + i`` unless ``seeds`` is given, so a
    cell is reproducible regardless of how replicates are scheduled.
    """
    if not settings.extra_priors:
        raise ValueError("the study needs the B.M and B.Unif chains")
    seeds = list(seeds) if seeds is not None else [base_seed + i for i in range(scenario.replicates)]

    def job(seed):
        try:
            return _replicate(scenario, seed, settings)
        except Exception as exc:
            raise SimulationError(
                f"replicate with seed {seed} failed in cell alpha={scenario.alpha}, n={scenario.n}: {exc}"
            ) from exc

    if workers == 1:
        results = [job(s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, seeds))
    t_obs = np.array([r[0] for r in results])
    estimates = np.array([r[1] for r in results])
    if not np.all(t_obs > scenario.c):
        raise SimulationError("a non-significant statistic slipped through")
    return SummaryTable(
        alpha=scenario.alpha,
        power=scenario.power,
        n=scenario.n,
        mu_true=scenario.mu_true,
        sigma=scenario.sigma,
        replicates=len(seeds),
        methods=summarize(estimates, scenario.mu_true, ESTIMATORS),
        estimates=estimates,
        t_obs=t_obs,
        seeds=seeds,
    )


def scenario_grid(alphas=ALPHAS, powers=POWERS, mu=MU_DEFAULT, sigma=SIGMA_DEFAULT, replicates=200):
    return [Scenario(mu, sigma, a, p, replicates=replicates) for a in alphas for p in powers]


def fixed_n_sweep(n: int = 1000, mus: Sequence[float] = tuple(math.log(x) for x in (1.0, 1.1, 1.2, 1.3, 1.4, 1.5)),
                  alphas: Sequence[float] = ALPHAS, *, sigma: float = SIGMA_DEFAULT, replicates: int = 200,
                  settings: BayesSettings = BayesSettings(), base_seed: int = 0,
                  workers: Optional[int] = None) -> list:
    """Same pipeline at a fixed sample size over a grid of true effects."""
    cells = [Scenario(mu, sigma, alpha, n=n, replicates=replicates) for mu in mus for alpha in alphas]
    return [run_scenario(sc, settings=settings, base_seed=derive_seed(base_seed, k), workers=workers)
            for k, sc in enumerate(cells)]


def sample_size_table(mu: float = MU_DEFAULT, sigma: float = 1.685, alphas=ALPHAS, powers=POWERS) -> dict:
    """Required sample sizes keyed by ``(alpha, power)``."""
    return {(a, p): required_sample_size(mu, sigma, a, p) for a in alphas for p in powers}


SIMULATION_MODES = ("grid", "fixed_n", "sample_size")


@dataclass(frozen=True)
class SimulationConfig:
    """Validated description of a simulation run, typically read from JSON.

    All checks happen in the constructor so a bad file fails before any
    chain is run.
    """

    mode: str = "grid"
    alphas: tuple = ALPHAS
    powers: tuple = POWERS
    mu: float = MU_DEFAULT
    mus: tuple = tuple(math.log(x) for x in (1.0, 1.1, 1.2, 1.3, 1.4, 1.5))
    n: int = 1000
    sigma: float = SIGMA_DEFAULT
    replicates: int = 200
    iterations: int = 20000
    burn_in: int = 5000
    proposal_sd: float = 0.1
    scheme: str = "pseudo_prior"
    u_max: float = 2.0
    rao_blackwell: bool = False
    per_replicate: bool = False

    def __post_init__(self):
        if self.mode not in SIMULATION_MODES:
            raise ValueError(f"mode must be one of {SIMULATION_MODES}, got {self.mode!r}")
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "powers", tuple(float(p) for p in self.powers))
        object.__setattr__(self, "mus", tuple(float(m) for m in self.mus))
        if not self.alphas or any(not 0 < a < 0.5 for a in self.alphas):
            raise ValueError("alphas must be a nonempty list of values in (0, 0.5)")
        if self.mode != "fixed_n" and (not self.powers or any(not 0 < p < 1 for p in self.powers)):
            raise ValueError("powers must be a nonempty list of values in (0, 1)")
        if self.mode == "fixed_n" and (not self.mus or any(m < 0 for m in self.mus)):
            raise ValueError("mus must be a nonempty list of nonnegative effects")
        if self.mode == "grid" and not self.mu > 0:
            raise ValueError("mu must be positive to derive sample sizes")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ValueError("replicates must be a positive integer")
        if not self.u_max > 0:
            raise ValueError("u_max must be positive")
        # raises on bad chain settings
        self.chain_config()

    @classmethod
    def from_dict(cls, data: dict) -> "SimulationConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {unknown}")
        return cls(**data)

    def chain_config(self, seed: int = 0):
        from .sampler import ChainConfig

        return ChainConfig(int(self.iterations), int(self.burn_in), float(self.proposal_sd), seed, self.scheme)

    def settings(self, seed: int = 0) -> BayesSettings:
        return BayesSettings(chain=self.chain_config(seed), u_max=self.u_max, rao_blackwell=self.rao_blackwell)

    def scenarios(self) -> list:
        if self.mode == "grid":
            return scenario_grid(self.alphas, self.powers, self.mu, self.sigma, int(self.replicates))
        if self.mode == "fixed_n":
            return [Scenario(mu, self.sigma, a, n=int(self.n), replicates=int(self.replicates))
                    for mu in self.mus for a in self.alphas]
        return []


def run_config(config: SimulationConfig, seed: int = 0, workers: Optional[int] = None) -> list:
    """Run every cell of a grid or fixed-n config; cell ``k`` uses base seed ``derive_seed(seed, k)``."""
    settings = config.settings(seed)
    return [run_scenario(sc, settings=settings, base_seed=derive_seed(seed, k), workers=workers)
            for k, sc in enumerate(config.scenarios())]
