"""Spike-and-slab hierarchical model and its data-augmentation sampler.

The effect is ``mu = Z * u_max * theta`` with ``Z ~ Bernoulli(1 - xi)``,
``theta ~ Uniform(0, 1)`` and ``xi ~ Beta(a, b)``. Each sweep draws the
indicator given ``(xi, theta)``, then ``xi`` given the indicator (exact Beta)
and ``theta`` given the indicator (random-walk Metropolis on the slab).

Two schemes are offered for ``theta`` while the indicator is on the spike:

``"pseudo_prior"`` (default)
    ``theta`` is refreshed from its Uniform(0, 1) prior. The chain then
    targets the exact joint posterior; this is what the quadrature oracle
    checks.
``"reset"``
    ``theta`` is set to zero. The next indicator step then compares two
    identical likelihoods, so the chain over-visits the slab. Kept because
    the reference values for the worked examples were produced this way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Optional

import numpy as np

from . import stats
from .stats import TestContext

try:
    from numba import njit
except ImportError:  # pragma: no cover - pure-Python fallback, ~100x slower
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

SCHEMES = ("pseudo_prior", "reset")
_XI_MAX = 1.0 - 2.0 ** -53
_XI_MIN = 1e-300

_log_sf = njit(cache=True, nogil=True)(stats.log_standard_normal_sf)


@njit(cache=True, nogil=True)
def _log_lik(t, m, c):
    # conditional log density without the constant
    return -0.5 * (t - m) * (t - m) - _log_sf(c - m)


@njit(cache=True, nogil=True)
def _slab_probability(xi, theta, t, c, se, u_max):
    lp0 = math.log(xi) + _log_lik(t, 0.0, c)
    lp1 = math.log1p(-xi) + _log_lik(t, u_max * theta / se, c)
    d = lp0 - lp1
    if d > 0.0:
        e = math.exp(-d)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(d))


@njit(cache=True, nogil=True)
def _reflect(x):
    while x < 0.0 or x > 1.0:
        if x < 0.0:
            x = -x
        else:
            x = 2.0 - x
    return x


@njit(cache=True, nogil=True)
def _mh_step(theta, t, c, se, u_max, sd, normal, u_accept):
    proposal = _reflect(theta + sd * normal)
    log_ratio = _log_lik(t, u_max * proposal / se, c) - _log_lik(t, u_max * theta / se, c)
    if math.log(u_accept) < log_ratio:
        return proposal, True
    return theta, False


@njit(cache=True, nogil=True)
def _chain_kernel(t, c, se, u_max, sd, theta0, xi0, reset,
                  u_ind, beta_spike, beta_slab, normals, u_accept, u_theta):
    n = u_ind.shape[0]
    z_out = np.empty(n, np.int8)
    theta_out = np.empty(n)
    xi_out = np.empty(n)
    p_out = np.empty(n)
    theta = theta0
    xi = xi0
    n_prop = 0
    n_acc = 0
    for i in range(n):
        p1 = _slab_probability(xi, theta, t, c, se, u_max)
        p_out[i] = p1
        if u_ind[i] < p1:
            xi = beta_slab[i]
            theta, ok = _mh_step(theta, t, c, se, u_max, sd, normals[i], u_accept[i])
            n_prop += 1
            if ok:
                n_acc += 1
            z_out[i] = 1
            theta_out[i] = theta
        else:
            xi = beta_spike[i]
            theta = 0.0 if reset else u_theta[i]
            z_out[i] = 0
            theta_out[i] = 0.0
        # Beta draws with a shape below 1 can round onto the boundary
        xi = min(max(xi, _XI_MIN), _XI_MAX)
        xi_out[i] = xi
    return z_out, theta_out, xi_out, p_out, n_prop, n_acc


@dataclass(frozen=True)
class SpikeSlabPrior:
    """Beta(a, b) prior on the spike weight and a Uniform(0, u_max) slab for the effect."""

    a: float
    b: float
    u_max: float = 2.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.u_max > 0):
            raise ValueError(f"prior parameters must be positive: {self}")

    @property
    def mean_xi(self) -> float:
        return self.a / (self.a + self.b)

    def log_density_xi(self, xi):
        from scipy import special

        xi = np.asarray(xi, dtype=float)
        return (self.a - 1) * np.log(xi) + (self.b - 1) * np.log1p(-xi) - special.betaln(self.a, self.b)

    def with_u_max(self, u_max: float) -> "SpikeSlabPrior":
        return SpikeSlabPrior(self.a, self.b, u_max)


PRESETS = {
    "B.L": (8.0, 0.5),
    "B.H": (0.5, 8.0),
    "B.M": (2.0 / 3.0, 2.0 / 3.0),
    "B.Unif": (1.0, 1.0),
}


def preset(name: str, u_max: float = 2.0) -> SpikeSlabPrior:
    a, b = PRESETS[name]
    return SpikeSlabPrior(a, b, u_max)


@dataclass(frozen=True)
class ChainConfig:
    iterations: int = 20000
    burn_in: int = 5000
    proposal_sd: float = 0.1
    seed: int = 0
    scheme: str = "pseudo_prior"

    def __post_init__(self):
        if self.iterations < 1 or self.burn_in < 0 or self.burn_in >= self.iterations:
            raise ValueError(f"need 0 <= burn_in < iterations, got {self.burn_in}, {self.iterations}")
        if not self.proposal_sd > 0:
            raise ValueError("proposal_sd must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")

    @property
    def retained(self) -> int:
        return self.iterations - self.burn_in

    def with_seed(self, seed: int) -> "ChainConfig":
        return ChainConfig(self.iterations, self.burn_in, self.proposal_sd, int(seed), self.scheme)


@dataclass(frozen=True)
class PosteriorDraw:
    z: int
    theta: float
    xi: float
    mu: float


def batch_means_se(x, n_batches: int = 50) -> float:
    """Monte Carlo standard error of the mean of an autocorrelated series."""
    x = np.asarray(x, dtype=float)
    size = x.size // n_batches
    if size < 1:
        raise ValueError(f"need at least {n_batches} draws for batch means")
    means = x[x.size - size * n_batches:].reshape(n_batches, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def hpd_interval(draws, mass: float = 0.95) -> tuple[float, float]:
    """Shortest window of the sorted draws holding ``ceil(mass * N)`` of them.

    Ties go to the leftmost window, so a spike at zero holding more than
    ``1 - mass`` of the draws anchors the interval at zero.
    """
    if not 0.5 < mass < 1.0:
        raise ValueError(f"mass must lie in (0.5, 1), got {mass!r}")
    x = np.sort(np.asarray(draws, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("no draws")
    k = min(n, math.ceil(mass * n))
    widths = x[k - 1:] - x[: n - k + 1]
    i = int(np.argmin(widths))
    return float(x[i]), float(x[i + k - 1])


@dataclass(frozen=True, eq=False)
class ChainResult:
    """Retained draws of one chain plus summaries.

    Draws are stored column-wise; :attr:`draws` materializes them as
    :class:`PosteriorDraw` records.
    """

    ctx: TestContext
    prior: SpikeSlabPrior
    config: ChainConfig
    z: np.ndarray
    theta: np.ndarray
    xi: np.ndarray
    p_slab: np.ndarray
    mh_acceptance_rate: float
    hpd_mass: float = 0.95
    mu: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mu = self.z * (self.prior.u_max * self.theta)
        object.__setattr__(self, "mu", mu)
        for arr in (self.z, self.theta, self.xi, self.p_slab, self.mu):
            arr.setflags(write=False)

    def __len__(self):
        return self.z.size

    @property
    def posterior_mean_mu(self) -> float:
        return float(self.mu.mean())

    @property
    def spike_probability(self) -> float:
        return float(np.mean(self.z == 0))

    @cached_property
    def hpd(self) -> tuple[float, float]:
        return hpd_interval(self.mu, self.hpd_mass)

    @property
    def posterior_mean_se(self) -> float:
        return batch_means_se(self.mu)

    @property
    def spike_probability_se(self) -> float:
        return batch_means_se(self.z == 0)

    @property
    def draws(self) -> list[PosteriorDraw]:
        return list(self.iter_draws())

    def iter_draws(self) -> Iterator[PosteriorDraw]:
        for z, th, xi, mu in zip(self.z, self.theta, self.xi, self.mu):
            yield PosteriorDraw(int(z), float(th), float(xi), float(mu))


def slab_probability(xi: float, theta: float, ctx: TestContext, u_max: float = 2.0) -> float:
    """Probability that the indicator is on the slab given ``(xi, theta)``."""
    if not 0.0 < xi < 1.0:
        raise ValueError(f"xi must lie in (0, 1), got {xi!r}")
    if not 0.0 <= theta < 1.0:
        raise ValueError(f"theta must lie in [0, 1), got {theta!r}")
    return _slab_probability(xi, theta, ctx.t_obs, ctx.c, ctx.se, u_max)


def sample_indicator(xi: float, theta: float, ctx: TestContext, rng: np.random.Generator,
                     u_max: float = 2.0) -> int:
    """Draw the spike/slab indicator: 0 for a false positive, 1 for a real effect."""
    return int(rng.random() < slab_probability(xi, theta, ctx, u_max))


def mh_update_theta(theta: float, ctx: TestContext, config: ChainConfig, rng: np.random.Generator,
                    u_max: float = 2.0) -> tuple[float, bool]:
    """One reflected random-walk Metropolis step for the slab coordinate."""
    normal = rng.standard_normal()
    u_accept = 1.0 - rng.random()
    return _mh_step(theta, ctx.t_obs, ctx.c, ctx.se, u_max, config.proposal_sd, normal, u_accept)


def sample_xi(z: int, prior: SpikeSlabPrior, rng: np.random.Generator) -> float:
    if z == 0:
        return float(rng.beta(prior.a + 1.0, prior.b))
    return float(rng.beta(prior.a, prior.b + 1.0))


def run_chain(ctx: TestContext, prior: SpikeSlabPrior, config: Optional[ChainConfig] = None,
              hpd_mass: float = 0.95) -> ChainResult:
    """Run the data-augmentation sampler and keep the post-burn-in draws.

    Fully determined by ``config.seed``. Random numbers for every sweep are
    drawn up front from one PCG64 stream in a fixed order.
    """
    config = config or ChainConfig()
    if not ctx.significant:
        raise ValueError(f"context is not significant: t_obs={ctx.t_obs:.6g} <= c={ctx.c:.6g}")
    n = config.iterations
    rng = np.random.Generator(np.random.PCG64(config.seed))
    u_ind = rng.random(n)
    beta_spike = rng.beta(prior.a + 1.0, prior.b, n)
    beta_slab = rng.beta(prior.a, prior.b + 1.0, n)
    normals = rng.standard_normal(n)
    u_accept = 1.0 - rng.random(n)
    u_theta = 1.0 - rng.random(n)

    theta0 = min(ctx.naive_effect / prior.u_max, 0.99)
    z, theta, xi, p_slab, n_prop, n_acc = _chain_kernel(
        ctx.t_obs, ctx.c, ctx.se, prior.u_max, config.proposal_sd, theta0, prior.mean_xi,
        config.scheme == "reset", u_ind, beta_spike, beta_slab, normals, u_accept, u_theta,
    )
    keep = slice(config.burn_in, None)
    return ChainResult(
        ctx=ctx,
        prior=prior,
        config=config,
        z=z[keep].copy(),
        theta=theta[keep].copy(),
        xi=xi[keep].copy(),
        p_slab=p_slab[keep].copy(),
        mh_acceptance_rate=n_acc / n_prop if n_prop else float("nan"),
        hpd_mass=hpd_mass,
    )
