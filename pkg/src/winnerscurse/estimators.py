"""Frequentist estimators for an effect reported only because it was significant."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from scipy import optimize, stats as sps

from .stats import TestContext, conditional_bias, log_conditional_density

METHODS = ("N", "MLE", "B.L", "B.H", "B.BMA", "B.M", "B.Unif")
INTERVAL_KINDS = ("confidence", "hpd", "none")

# Search range for the normalized mean; the score is negative for every m
# below the bracket only when the statistic sits within ~0.1 of c.
M_LOWER = -8.0
PROFILE_MARGIN = 6.0


class NotSignificantError(ValueError):
    """Raised when a context does not pass its own significance threshold."""


@dataclass(frozen=True)
class EstimateRecord:
    method: str
    point: float
    interval_low: Optional[float] = None
    interval_high: Optional[float] = None
    interval_kind: str = "none"
    clamped: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.interval_kind not in INTERVAL_KINDS:
            raise ValueError(f"unknown interval kind {self.interval_kind!r}")
        has_interval = self.interval_low is not None
        if has_interval != (self.interval_high is not None):
            raise ValueError("interval needs both endpoints")
        if has_interval == (self.interval_kind == "none"):
            raise ValueError("interval_kind must be 'none' exactly when no interval is given")
        if self.method == "B.BMA" and has_interval:
            raise ValueError("the model-averaged estimate carries no interval")
        if has_interval:
            if self.interval_low < 0:
                raise ValueError("effects are constrained to be nonnegative")
            # tolerate roundoff from solving on the z scale
            slack = 1e-12 * max(1.0, abs(self.point))
            if not self.interval_low - slack <= self.point <= self.interval_high + slack:
                raise ValueError(
                    f"point {self.point} outside interval ({self.interval_low}, {self.interval_high})"
                )

    @property
    def interval(self):
        if self.interval_low is None:
            return None
        return (self.interval_low, self.interval_high)


def _require_significant(ctx: TestContext):
    if not ctx.significant:
        raise NotSignificantError(f"t_obs={ctx.t_obs:.6g} does not exceed c={ctx.c:.6g}")


def naive_estimate(ctx: TestContext) -> EstimateRecord:
    return EstimateRecord("N", ctx.naive_effect)


def log_likelihood(m: float, t: float, c: float) -> float:
    """Conditional log-likelihood of the normalized mean, up to a constant."""
    return log_conditional_density(t, m, c)


def score(m: float, t: float, c: float) -> float:
    """Derivative of :func:`log_likelihood` in ``m``; strictly decreasing."""
    return (t - m) - conditional_bias(m, c)


def unconstrained_mle(t: float, c: float) -> float:
    """Root of the conditional score on ``[M_LOWER, t]``.

    Returns ``M_LOWER`` when the root lies below the bracket, which only
    happens for statistics barely above ``c``; the clamped estimate is 0 there
    either way.
    """
    lo, hi = M_LOWER, t
    if score(lo, t, c) <= 0.0:
        return lo
    # score(t) = -conditional_bias(t, c) < 0, so the bracket is valid
    return optimize.brentq(score, lo, hi, args=(t, c), xtol=1e-12, maxiter=200)


def conditional_mle(ctx: TestContext, level: Optional[float] = None) -> EstimateRecord:
    """Maximum conditional-likelihood estimate, clamped at zero.

    With ``level`` the record carries the likelihood-ratio confidence interval
    from :func:`profile_confidence_interval`.
    """
    _require_significant(ctx)
    m_hat = unconstrained_mle(ctx.t_obs, ctx.c)
    clamped = m_hat < 0.0
    point = ctx.to_effect(max(m_hat, 0.0))
    if level is None:
        return EstimateRecord("MLE", point, clamped=clamped)
    low, high = profile_confidence_interval(ctx, level)
    return EstimateRecord("MLE", point, low, high, "confidence", clamped=clamped)


def profile_confidence_interval(ctx: TestContext, level: float = 0.95) -> tuple[float, float]:
    """Likelihood-ratio interval ``{mu >= 0 : 2 [l(mu_hat) - l(mu)] <= chi2_1(level)}``.

    Endpoints are found on the z scale and returned on the effect scale; the
    lower endpoint is clamped at zero.
    """
    if not 0.5 < level < 1.0:
        raise ValueError(f"level must lie in (0.5, 1), got {level!r}")
    _require_significant(ctx)
    t, c = ctx.t_obs, ctx.c
    m_hat = max(unconstrained_mle(t, c), 0.0)
    cutoff = float(sps.chi2.ppf(level, df=1))
    l_max = log_likelihood(m_hat, t, c)

    def excess(m):
        return 2.0 * (l_max - log_likelihood(m, t, c)) - cutoff

    if m_hat == 0.0 or excess(0.0) <= 0.0:
        low = 0.0
    else:
        low = optimize.brentq(excess, 0.0, m_hat, xtol=1e-10)
    upper = t + PROFILE_MARGIN
    if excess(upper) <= 0.0:
        high = upper
    else:
        high = optimize.brentq(excess, m_hat, upper, xtol=1e-10)
    return ctx.to_effect(low), ctx.to_effect(high)
