"""Quadrature reference values for the spike-and-slab posterior.

The hyperparameter xi enters the marginal likelihood linearly, so given the
prior mean of xi everything reduces to one-dimensional integrals over the
slab. These are used to validate the sampler and the bridge estimator; only
the likelihood is shared with them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from .sampler import SpikeSlabPrior
from .stats import TestContext, log_conditional_density


def _slab_integrals(ctx: TestContext, u_max: float) -> tuple[float, float]:
    """``(int g, int mu g)`` over the slab, with g the conditional density in mu."""
    t, c, se = ctx.t_obs, ctx.c, ctx.se
    upper = u_max / se

    def g(m):
        return math.exp(log_conditional_density(t, m, c))

    def mg(m):
        return m * g(m)

    # the integrand is a bump of unit width around m = t
    knots = sorted({0.0, upper, *(k for k in (t - 12.0, t - 3.0, t, t + 3.0, t + 12.0) if 0.0 < k < upper)})
    zeroth = first = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        zeroth += integrate.quad(g, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)[0]
        first += integrate.quad(mg, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    # back to the effect scale: dmu = se dm, mu = se m
    return se * zeroth, se * se * first


@dataclass(frozen=True)
class PosteriorOracle:
    spike_evidence: float  # f0: conditional density under mu = 0
    slab_evidence: float  # f1: conditional density averaged over the slab
    evidence: float  # marginal likelihood p(T | model)
    spike_probability: float
    slab_mean_mu: float  # E[mu | Z = 1, T]
    posterior_mean_mu: float


def posterior_oracle(ctx: TestContext, prior: SpikeSlabPrior) -> PosteriorOracle:
    f0 = math.exp(log_conditional_density(ctx.t_obs, 0.0, ctx.c))
    mass, moment = _slab_integrals(ctx, prior.u_max)
    f1 = mass / prior.u_max
    w0 = prior.mean_xi
    evidence = w0 * f0 + (1.0 - w0) * f1
    p0 = w0 * f0 / evidence
    slab_mean = moment / mass
    return PosteriorOracle(
        spike_evidence=f0,
        slab_evidence=f1,
        evidence=evidence,
        spike_probability=p0,
        slab_mean_mu=slab_mean,
        posterior_mean_mu=(1.0 - p0) * slab_mean,
    )
