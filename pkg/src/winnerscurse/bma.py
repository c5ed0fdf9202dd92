"""Bayesian model averaging over a skeptical and a confident spike-and-slab model.

The two models differ only in the Beta prior on xi, so the ratio of their
unnormalized posteriors at a draw depends on xi alone. The marginal
likelihood ratio is estimated by bridge sampling from the two chains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .estimators import EstimateRecord
from .oracle import posterior_oracle
from .sampler import ChainResult, SpikeSlabPrior, preset
from .stats import TestContext

BRIDGE_METHODS = ("optimal", "geometric")


def prior_model_weights(c: float) -> tuple[float, float]:
    """Prior probabilities ``(exp(-c/2), 1 - exp(-c/2))`` of the skeptical and confident models."""
    if not c > 0:
        raise ValueError(f"critical value must be positive, got {c!r}")
    w1 = math.exp(-0.5 * c)
    return w1, -math.expm1(-0.5 * c)


def posterior_model_weights(r: float, c: float) -> tuple[float, float]:
    """Posterior model probabilities given the marginal-likelihood ratio ``r = p(T|M1) / p(T|M2)``."""
    if not r > 0:
        raise ValueError(f"likelihood ratio must be positive, got {r!r}")
    w1, w2 = prior_model_weights(c)
    if math.isinf(r):
        return 1.0, 0.0
    num = r * w1
    return num / (num + w2), w2 / (num + w2)


def log_prior_ratio(xi, a1: float = 8.0, b1: float = 0.5, a2: float = 0.5, b2: float = 8.0):
    """Log ratio of two Beta densities at ``xi``.

    For the default Beta(8, 0.5) / Beta(0.5, 8) pair the normalizers cancel and
    this is ``7.5 * (log xi - log(1 - xi))``.
    """
    xi = np.asarray(xi, dtype=float)
    if np.any((xi <= 0) | (xi >= 1)):
        raise ValueError("xi must lie strictly inside (0, 1)")
    out = (a1 - a2) * np.log(xi) + (b1 - b2) * np.log1p(-xi)
    out = out + (special.betaln(a2, b2) - special.betaln(a1, b1))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ModelPair:
    m1_prior: SpikeSlabPrior = field(default_factory=lambda: preset("B.L"))
    m2_prior: SpikeSlabPrior = field(default_factory=lambda: preset("B.H"))

    def __post_init__(self):
        if self.m1_prior.u_max != self.m2_prior.u_max:
            raise ValueError("both models must share the slab; only the xi prior may differ")

    @classmethod
    def default(cls, u_max: float = 2.0) -> "ModelPair":
        return cls(preset("B.L", u_max), preset("B.H", u_max))

    def prior_weights(self, c: float) -> tuple[float, float]:
        return prior_model_weights(c)


@dataclass(frozen=True)
class BridgeEstimate:
    r_hat: float
    iterations_used: int
    converged: bool
    method: str = "optimal"
    rao_blackwell: bool = False
    mc_se: float = float("nan")

    def __post_init__(self):
        if not self.r_hat > 0:
            raise ValueError(f"bridge estimate must be positive, got {self.r_hat!r}")


def _logmeanexp(x):
    return special.logsumexp(x) - math.log(x.size)


class _BetaMixtureExpectation:
    """Expectations under a two-component Beta mixture by quadrature on the logit scale.

    Used for the Rao-Blackwellized bridge: conditional on the indicator, xi is
    an exact Beta draw, so its contribution can be integrated out.
    """

    _grid = np.linspace(-60.0, 60.0, 24001)

    def __init__(self, prior: SpikeSlabPrior, p_slab: float, log_l_fn):
        x = self._grid
        log_xi = -np.logaddexp(0.0, -x)
        log_1m = -np.logaddexp(0.0, x)
        a, b = prior.a, prior.b
        # Beta density times the logit Jacobian xi (1 - xi)
        spike = (a + 1) * log_xi + b * log_1m - special.betaln(a + 1, b)
        slab = a * log_xi + (b + 1) * log_1m - special.betaln(a, b + 1)
        if p_slab <= 0.0:
            mix = spike
        elif p_slab >= 1.0:
            mix = slab
        else:
            mix = np.logaddexp(math.log1p(-p_slab) + spike, math.log(p_slab) + slab)
        dx = x[1] - x[0]
        self.log_w = mix + math.log(dx)
        self.log_l = log_l_fn(log_xi, log_1m)

    def log_mean(self, log_h):
        return special.logsumexp(self.log_w + log_h)


def _draw_log_l(chain: ChainResult, pair_logl):
    xi = chain.xi
    return pair_logl(np.log(xi), np.log1p(-xi))


def bridge_ratio(draws1: ChainResult, draws2: ChainResult, *, method: str = "optimal",
                 rao_blackwell: bool = False, tol: float = 1e-8, max_iter: int = 500,
                 mc_se: bool = False, n_batches: int = 20) -> BridgeEstimate:
    """Bridge-sampling estimate of ``p(T | M1) / p(T | M2)`` from one chain per model.

    ``method="optimal"`` iterates the asymptotically optimal bridge from
    ``r = 1`` until the relative change drops below ``tol``. ``"geometric"``
    uses the bridge ``(q1 q2)^(-1/2)`` and needs no iteration.

    With ``rao_blackwell=True`` each draw's xi is replaced by its exact
    conditional law given the previous state (a Beta mixture weighted by the
    stored slab probability); this removes most of the Monte Carlo noise that
    comes from the two posteriors barely overlapping in xi.

    ``mc_se=True`` adds a batch-means standard error (plain estimator only).
    """
    if method not in BRIDGE_METHODS:
        raise ValueError(f"method must be one of {BRIDGE_METHODS}")
    if draws1.ctx != draws2.ctx:
        raise ValueError("both chains must be run on the same context")
    p1, p2 = draws1.prior, draws2.prior
    if p1.u_max != p2.u_max:
        raise ValueError("both chains must share the slab upper bound")

    def pair_logl(log_xi, log_1m):
        return ((p1.a - p2.a) * log_xi + (p1.b - p2.b) * log_1m
                + special.betaln(p2.a, p2.b) - special.betaln(p1.a, p1.b))

    if rao_blackwell:
        e1 = _BetaMixtureExpectation(p1, float(draws1.p_slab.mean()), pair_logl)
        e2 = _BetaMixtureExpectation(p2, float(draws2.p_slab.mean()), pair_logl)
        est = _solve_bridge(e1.log_l, e2.log_l, len(draws1), len(draws2), method, tol, max_iter,
                            mean1=e1.log_mean, mean2=e2.log_mean)
        se = float("nan")
    else:
        l1 = _draw_log_l(draws1, pair_logl)
        l2 = _draw_log_l(draws2, pair_logl)
        est = _solve_bridge(l1, l2, l1.size, l2.size, method, tol, max_iter)
        se = _batch_se(l1, l2, est[0], method, tol, max_iter, n_batches) if mc_se else float("nan")
    r_hat, used, converged = est
    return BridgeEstimate(r_hat, used, converged, method, rao_blackwell, se)


def _solve_bridge(l1, l2, n1, n2, method, tol, max_iter, mean1=_logmeanexp, mean2=_logmeanexp):
    """Work in logs throughout: ``l1``/``l2`` hold log q1/q2 at draws from model 1/2."""
    if method == "geometric":
        log_r = mean2(0.5 * l2) - mean1(-0.5 * l1)
        return math.exp(log_r), 1, True
    log_s1 = math.log(n1 / (n1 + n2))
    log_s2 = math.log(n2 / (n1 + n2))
    log_r = 0.0
    for it in range(1, max_iter + 1):
        num = mean2(l2 - np.logaddexp(log_s1 + l2, log_s2 + log_r))
        den = mean1(-np.logaddexp(log_s1 + l1, log_s2 + log_r))
        new = num - den
        # relative change in r
        if abs(math.expm1(new - log_r)) < tol:
            return math.exp(new), it, True
        log_r = new
    return math.exp(log_r), max_iter, False


def _batch_se(l1, l2, r_full, method, tol, max_iter, n_batches):
    size1, size2 = l1.size // n_batches, l2.size // n_batches
    if min(size1, size2) < 10:
        return float("nan")
    logs = []
    for k in range(n_batches):
        b1 = l1[k * size1:(k + 1) * size1]
        b2 = l2[k * size2:(k + 1) * size2]
        r, _, _ = _solve_bridge(b1, b2, b1.size, b2.size, method, tol, max_iter)
        logs.append(math.log(r))
    # delta method on the log scale
    return float(r_full * np.std(logs, ddof=1) / math.sqrt(n_batches))


def marginal_ratio_oracle(ctx: TestContext, pair: ModelPair | None = None) -> float:
    """Exact ``p(T | M1) / p(T | M2)`` by one-dimensional quadrature."""
    pair = pair or ModelPair()
    if pair.m1_prior == pair.m2_prior:
        return 1.0
    return posterior_oracle(ctx, pair.m1_prior).evidence / posterior_oracle(ctx, pair.m2_prior).evidence


def bma_estimate(mu1: float, mu2: float, r: float, c: float) -> EstimateRecord:
    """Model-averaged point estimate; no interval is attached."""
    w1, w2 = posterior_model_weights(r, c)
    point = w1 * mu1 + w2 * mu2
    # keep the convex combination inside its endpoints despite roundoff
    point = min(max(point, min(mu1, mu2)), max(mu1, mu2))
    return EstimateRecord("B.BMA", point)
