"""Upper bounds on discrete divergences and necessary-sample-size thresholds.

The central quantity is the largest f-divergence a weight vector of length
N can have against uniform weights: (f(N) + (N-1) f(0)) / N, attained at a
vertex of the simplex.  Allowing total mass up to 1 + excess inflates the
first term to f((1 + excess) N).  Inverting these caps in N turns a known
divergence between target and proposal into a sample-size threshold below
which importance sampling must fail one of its two accuracy conditions
with probability at least one half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .divergences import (
    ConvexGenerator,
    DivergenceKind,
    DivergenceValue,
    generator_eval,
)

__all__ = [
    "ToleranceBudget",
    "SampleSizeReport",
    "divergence_bound",
    "symbolic_divergence_bound",
    "mse_minimum_size",
    "necessary_condition_holds",
    "necessary_sample_size",
    "necessary_size_from_generator",
    "max_certifiable_size",
]

_MAX_SEARCH_N = 2**63


@dataclass(frozen=True)
class ToleranceBudget:
    """Accuracy budget: mass inflation ``epsilon`` and estimate error ``delta``."""

    epsilon: float
    delta: float

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive and finite, got {self.epsilon!r}")
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError(f"delta must be positive and finite, got {self.delta!r}")


def _check_size(n: int) -> int:
    if n != int(n) or n < 1:
        raise ValueError(f"sample size must be an integer >= 1, got {n!r}")
    return int(n)


def divergence_bound(n: int, f: ConvexGenerator, excess_mass: float = 0.0) -> float:
    """Maximum divergence against uniform weights for vectors of length n.

    With ``excess_mass`` = 0 this covers probability vectors; a positive
    value covers nonnegative vectors of total mass up to 1 + excess_mass.
    """
    n = _check_size(n)
    if excess_mass < 0:
        raise ValueError(f"excess_mass must be nonnegative, got {excess_mass!r}")
    return (generator_eval(f, (1.0 + excess_mass) * n) + (n - 1) * f.value_at_zero) / n


def symbolic_divergence_bound(kind: DivergenceKind, n: int, excess_mass: float = 0.0) -> float:
    """Reference closed forms of the bound for the four built-in divergences."""
    n = _check_size(n)
    e = float(excess_mass)
    if kind is DivergenceKind.KULLBACK_LEIBLER:
        return (1.0 + e) * math.log(n * (1.0 + e))
    if kind is DivergenceKind.CHI_SQUARED:
        return n * (1.0 + e) ** 2 - (1.0 + 2.0 * e)
    if kind is DivergenceKind.TOTAL_VARIATION:
        return 1.0 - 1.0 / n + e / 2.0
    if kind is DivergenceKind.SQUARED_HELLINGER:
        return 2.0 * (1.0 - math.sqrt((1.0 + e) / n) + e / 2.0)
    raise ValueError(f"no closed form for kind {kind!r}")


def _divergence_scalar(d, kind: DivergenceKind) -> float:
    value = float(d)
    if math.isnan(value) or value < 0:
        raise ValueError(f"divergence must be nonnegative, got {value!r}")
    if kind is DivergenceKind.TOTAL_VARIATION and value > 1.0:
        raise ValueError(f"total variation cannot exceed 1, got {value!r}")
    if kind is DivergenceKind.SQUARED_HELLINGER and value > 2.0:
        raise ValueError(f"squared Hellinger cannot exceed 2, got {value!r}")
    return value


def mse_minimum_size(mse_cap: float, d, kind: DivergenceKind) -> float:
    """Minimum N for the constant test function's MSE to stay below ``mse_cap``.

    The thresholds are chi2/C, (exp(KL) - 1)/C, 4 TV^2/C and Hell^2/C; the
    Hellinger input is the squared distance, total variation is unsquared.
    """
    if not (mse_cap > 0 and math.isfinite(mse_cap)):
        raise ValueError(f"MSE cap must be positive and finite, got {mse_cap!r}")
    value = _divergence_scalar(d, kind)
    if kind is DivergenceKind.CHI_SQUARED:
        return value / mse_cap
    if kind is DivergenceKind.KULLBACK_LEIBLER:
        return math.expm1(value) / mse_cap if math.isfinite(value) else math.inf
    if kind is DivergenceKind.TOTAL_VARIATION:
        return 4.0 * value * value / mse_cap
    if kind is DivergenceKind.SQUARED_HELLINGER:
        return value / mse_cap
    raise ValueError(f"no MSE threshold for kind {kind!r}")


def necessary_condition_holds(
    d_f, n: int, budget: ToleranceBudget, f: ConvexGenerator
) -> bool:
    """Whether D_f <= bound(N, epsilon) + delta, the condition a successful
    run of importance sampling forces; +inf divergences fail for every N."""
    value = float(d_f)
    if math.isnan(value):
        raise ValueError("divergence must not be NaN")
    if math.isinf(value):
        return False
    return value <= divergence_bound(n, f, budget.epsilon) + budget.delta


def _threshold(value: float, kind: DivergenceKind, budget: ToleranceBudget) -> float:
    eps, delta = budget.epsilon, budget.delta
    if math.isinf(value):
        return math.inf
    if kind is DivergenceKind.KULLBACK_LEIBLER:
        return math.exp((value - delta) / (1.0 + eps)) / (1.0 + eps)
    if kind is DivergenceKind.CHI_SQUARED:
        return (1.0 + 2.0 * eps + value - delta) / (1.0 + eps) ** 2
    if kind is DivergenceKind.TOTAL_VARIATION:
        return 1.0 / (1.0 + eps / 2.0 + delta - value)
    if kind is DivergenceKind.SQUARED_HELLINGER:
        return 4.0 * (1.0 + eps) / (2.0 + eps + delta - value) ** 2
    raise ValueError(f"no sample-size threshold for kind {kind!r}")


def _guarded_ceil(x: float):
    """Ceiling with protection against one-ulp float dust at integer values."""
    if math.isinf(x):
        return math.inf
    return max(int(math.ceil(x - 1e-12 * max(1.0, abs(x)))), 1)


@dataclass(frozen=True)
class SampleSizeReport:
    """A divergence together with its sample-size threshold.

    Sample sizes strictly below ``threshold`` guarantee, with probability at
    least ``failure_probability``, that one of the two accuracy conditions
    fails.  The real threshold is preserved; ``necessary_size`` is its
    ceiling.
    """

    metric: DivergenceKind
    divergence: DivergenceValue
    threshold: float
    budget: ToleranceBudget
    failure_probability: float = 0.5

    def __post_init__(self):
        if math.isinf(self.threshold) != math.isinf(self.divergence.value):
            raise ValueError("threshold is infinite exactly when the divergence is")
        if not math.isinf(self.threshold) and not self.threshold > 0:
            raise ValueError(f"finite thresholds must be positive, got {self.threshold!r}")

    @property
    def necessary_size(self):
        return _guarded_ceil(self.threshold)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.threshold)


def necessary_sample_size(
    d,
    kind: DivergenceKind,
    budget: ToleranceBudget,
    failure_probability: float = 0.5,
) -> SampleSizeReport:
    """Sample-size threshold below which importance sampling must break down.

    ``d`` may be a DivergenceValue or a bare float (recorded as closed form);
    Hellinger input is always the squared distance.  Only the one-half
    failure-probability level is supported.
    """
    if failure_probability != 0.5:
        raise NotImplementedError("only the failure-probability level 1/2 is supported")
    if not isinstance(d, DivergenceValue):
        d = DivergenceValue(_divergence_scalar(d, kind), "closed_form")
    else:
        _divergence_scalar(d, kind)
    threshold = _threshold(d.value, kind, budget)
    if math.isfinite(threshold) and threshold <= 0:
        raise ValueError(
            f"budget {budget} makes the {kind.value} threshold nonpositive"
        )
    return SampleSizeReport(kind, d, threshold, budget, failure_probability)


def necessary_size_from_generator(
    d_f, f: ConvexGenerator, budget: ToleranceBudget
) -> int:
    """Smallest integer N whose inflated bound plus delta reaches the divergence.

    Solved by exponential search followed by bisection; works for any convex
    generator and matches the closed-form thresholds for the built-ins up to
    rounding.  The bound is verified nondecreasing in N over [1, 2 answer].
    """
    value = float(d_f)
    if math.isnan(value) or value < 0:
        raise ValueError(f"divergence must be nonnegative, got {value!r}")
    if math.isinf(value):
        raise ValueError("no finite sample size reaches an infinite divergence")
    tol = 1e-12 * max(1.0, value)

    def satisfied(n: int) -> bool:
        return divergence_bound(n, f, budget.epsilon) + budget.delta >= value - tol

    hi = 1
    while not satisfied(hi):
        if hi > _MAX_SEARCH_N:
            raise ValueError(
                f"no sample size up to 2^63 satisfies the bound for divergence {value!r}"
            )
        hi *= 2
    # invariant: satisfied(hi), not satisfied(lo) for lo >= 1
    lo = hi // 2
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if satisfied(mid):
            hi = mid
        else:
            lo = mid
    answer = hi

    # numerical spot check of the monotonicity precondition
    grid = sorted({max(1, int(round(g))) for g in _geom_grid(1, 2 * answer)})
    values = [divergence_bound(n, f, budget.epsilon) for n in grid]
    for (n_prev, b_prev), (n_next, b_next) in zip(
        zip(grid, values), zip(grid[1:], values[1:])
    ):
        if b_next < b_prev - 1e-12 * max(1.0, abs(b_prev)):
            raise ValueError(
                f"bound is not nondecreasing between N={n_prev} and N={n_next}"
            )
    return answer


def _geom_grid(lo: int, hi: int, count: int = 48):
    if hi <= lo:
        return [float(lo)]
    ratio = (hi / lo) ** (1.0 / (count - 1))
    return [lo * ratio**k for k in range(count)]


def max_certifiable_size(kind: DivergenceKind, budget: ToleranceBudget) -> float:
    """Largest threshold the metric can ever produce under this budget.

    Total variation and Hellinger are bounded metrics, so their thresholds
    cap out (at distance 1, resp. squared distance 2); the unbounded KL and
    chi-squared divergences can demand arbitrarily large sample sizes.
    """
    eps, delta = budget.epsilon, budget.delta
    if kind is DivergenceKind.TOTAL_VARIATION:
        return 1.0 / (eps / 2.0 + delta)
    if kind is DivergenceKind.SQUARED_HELLINGER:
        return 4.0 * (1.0 + eps) / (eps + delta) ** 2
    if kind in (DivergenceKind.KULLBACK_LEIBLER, DivergenceKind.CHI_SQUARED):
        return math.inf
    raise ValueError(f"no certifiable-size cap for kind {kind!r}")
