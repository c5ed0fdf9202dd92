"""Standard normal machinery and the conditional (truncated) density of the test statistic.

Everything here works on the normalized z scale. A finding is described by a
:class:`TestContext`; the true effect enters only through the normalized mean
``m = mu / se``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy import special

SQRT2 = math.sqrt(2.0)
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# log(1 - Phi(x)) switches to the asymptotic series past this point; erfc
# underflows near x = 37.5.
_ASYMPTOTIC_CUTOFF = 30.0


def standard_normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x - LOG_SQRT_2PI)


def log_standard_normal_pdf(x: float) -> float:
    return -0.5 * x * x - LOG_SQRT_2PI


def standard_normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / SQRT2)


def standard_normal_sf(x: float) -> float:
    """Upper tail ``1 - Phi(x)``, computed directly so it keeps relative precision for large x."""
    return 0.5 * math.erfc(x / SQRT2)


def log_standard_normal_sf(x: float) -> float:
    """``log(1 - Phi(x))`` accurate over the whole real line."""
    if x < _ASYMPTOTIC_CUTOFF:
        return math.log(0.5 * math.erfc(x / SQRT2))
    # Mills-ratio expansion; truncation error ~ 945 / x**10.
    x2 = 1.0 / (x * x)
    series = 1.0 - x2 * (1.0 - 3.0 * x2 * (1.0 - 5.0 * x2 * (1.0 - 7.0 * x2)))
    return -0.5 * x * x - math.log(x) - LOG_SQRT_2PI + math.log(series)


def log_standard_normal_cdf(x: float) -> float:
    return log_standard_normal_sf(-x)


def mills_ratio(x: float) -> float:
    """``phi(x) / (1 - Phi(x))``, the mean excess of a standard normal truncated to (x, inf)."""
    return math.exp(log_standard_normal_pdf(x) - log_standard_normal_sf(x))


def standard_normal_quantile(p: float) -> float:
    """Inverse of :func:`standard_normal_cdf`.

    For upper-tail probabilities close to zero use :func:`standard_normal_isf`,
    since ``1 - p`` loses everything below ~1e-16.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p!r}")
    return float(special.ndtri(p))


def standard_normal_isf(q: float) -> float:
    """Upper-tail quantile: the x with ``1 - Phi(x) == q``."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"tail probability must lie in (0, 1), got {q!r}")
    return -float(special.ndtri(q))


def critical_value(alpha: float) -> float:
    """One-sided critical value ``c = Phi^-1(1 - alpha)``."""
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 0.5), got {alpha!r}")
    return standard_normal_isf(alpha)


def log_conditional_density(t: float, m: float, c: float) -> float:
    """Log density of the statistic at ``t`` given that it exceeded ``c``.

    No support check; callers on hot paths guarantee ``t > c``.
    """
    return -0.5 * (t - m) ** 2 - LOG_SQRT_2PI - log_standard_normal_sf(c - m)


def conditional_density(t: float, m: float, c: float) -> float:
    """``phi(t - m) / (1 - Phi(c - m))`` for a statistic observed only when ``t > c``."""
    if not t > c:
        raise ValueError(f"conditional density is supported on t > c (t={t!r}, c={c!r})")
    return math.exp(log_conditional_density(t, m, c))


def conditional_bias(m: float, c: float) -> float:
    """Expected excess ``E[T | T > c] - m`` of the naive statistic."""
    return mills_ratio(c - m)


def power_of_test(m: float, c: float) -> float:
    return standard_normal_sf(c - m)


def required_sample_size(mu: float, sigma: float, alpha: float, power: float) -> int:
    """Sample size for a one-sided z test of ``mu > 0`` with the requested power.

    Rounded to the nearest integer.
    """
    if mu <= 0 or sigma <= 0:
        raise ValueError("mu and sigma must be positive")
    if not alpha < power < 1.0:
        raise ValueError(f"power must lie in (alpha, 1), got power={power!r}, alpha={alpha!r}")
    c = critical_value(alpha)
    n = ((c + standard_normal_quantile(power)) * sigma / mu) ** 2
    return max(1, int(round(n)))


@dataclass(frozen=True)
class TestContext:
    """One significant finding on the z scale.

    ``se`` is the standard error of the naive effect estimate (sigma / sqrt(n)
    in the sampling model). The critical value is derived from ``alpha``.
    """

    __test__ = False  # keep pytest from collecting this class

    t_obs: float
    alpha: float
    se: float
    c: float = field(init=False)

    def __post_init__(self):
        if not self.se > 0:
            raise ValueError(f"se must be positive, got {self.se!r}")
        if not math.isfinite(self.t_obs):
            raise ValueError(f"t_obs must be finite, got {self.t_obs!r}")
        object.__setattr__(self, "c", critical_value(self.alpha))

    @property
    def direction(self) -> str:
        return "upper"

    @property
    def significant(self) -> bool:
        return self.t_obs > self.c

    @property
    def naive_effect(self) -> float:
        return self.t_obs * self.se

    def to_effect(self, m: float) -> float:
        return m * self.se

    def to_normalized(self, mu: float) -> float:
        return mu / self.se

    def normalized(self, mu: float) -> "NormalizedEffect":
        return NormalizedEffect(m=mu / self.se, mu=mu)


@dataclass(frozen=True)
class NormalizedEffect:
    m: float
    mu: float
