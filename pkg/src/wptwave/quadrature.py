"""Period-averaged quadrature for smooth periodic integrands.

Every rectifier quantity in this package reduces to a mean of the form
(1/T) * integral over one period of a smooth periodic integrand, typically
``exp`` of a trigonometric polynomial.  For such integrands the periodic
trapezoid rule (uniform samples, equal weights) converges spectrally, so the
strategy here is: sample uniformly, double the sample count until two
successive estimates agree to a relative tolerance, and fail loudly with the
best estimate if the cap is reached.  A composite Simpson rule is kept as an
independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

Integrand = Callable[[np.ndarray], np.ndarray]

_RULES = ("trapezoid-periodic", "composite-simpson")


class QuadratureToleranceError(ArithmeticError):
    """Doubling reached ``max_samples`` without meeting the tolerance.

    Carries the best estimate computed so far and the sample count that
    produced it.
    """

    def __init__(self, message: str, best_estimate, samples: int):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.samples = samples


@dataclass(frozen=True)
class QuadratureConfig:
    """Sampling policy for period means.

    Parameters
    ----------
    initial_samples
        Sample count of the first estimate (at least 8).  Refinement always
        doubles, so the first accepted answer uses ``2 * initial_samples``
        points or more.
    max_samples
        Hard cap on the sample count.
    rel_tolerance
        Relative agreement required between successive estimates.
    rule
        ``"trapezoid-periodic"`` (default, spectrally accurate on smooth
        periodic integrands) or ``"composite-simpson"``.
    """

    initial_samples: int = 256
    max_samples: int = 1 << 22
    rel_tolerance: float = 1e-9
    rule: str = "trapezoid-periodic"

    def __post_init__(self) -> None:
        if self.initial_samples < 8:
            raise ValueError("initial_samples must be >= 8")
        if self.max_samples < self.initial_samples:
            raise ValueError("max_samples must be >= initial_samples")
        if not self.rel_tolerance > 0:
            raise ValueError("rel_tolerance must be positive")
        if self.rule not in _RULES:
            raise ValueError(f"rule must be one of {_RULES}, got {self.rule!r}")


def config_for_cycles(cycles: float, **overrides) -> QuadratureConfig:
    """Config sized to resolve an integrand whose fastest tone completes
    ``cycles`` oscillations per period.

    The initial count is 64*(1 + cycles) rounded up to a power of two, which
    oversamples the fastest harmonic by a factor of at least 32.
    """
    base = 64.0 * (1.0 + max(0.0, float(cycles)))
    n = 1 << max(3, math.ceil(math.log2(base)))
    return QuadratureConfig(initial_samples=n, **overrides)


class PeriodMean(NamedTuple):
    """A converged period mean and the sample count that produced it."""

    value: float
    samples: int


def _times(period: float, n: int) -> np.ndarray:
    return period * np.arange(n) / n


def _mean_of_samples(values: np.ndarray, rule: str) -> np.ndarray:
    """Mean over one period from uniform samples (periodic wrap assumed).

    Works on the last axis so array-valued integrands share the machinery.
    """
    if rule == "trapezoid-periodic":
        return values.mean(axis=-1)
    # Composite Simpson over [0, T] with f(T) = f(0): endpoint weight folds
    # onto sample 0, interior weights alternate 4, 2.  Sample count is even.
    n = values.shape[-1]
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    return values @ w / (3.0 * n)


def _even(n: int) -> int:
    return n + (n % 2)


def period_mean(
    f: Integrand,
    period: float,
    cfg: QuadratureConfig | None = None,
    *,
    floor: float = 1.0,
) -> PeriodMean:
    """Mean of a periodic function over one period, to a relative tolerance.

    Parameters
    ----------
    f
        Vectorized callable mapping an array of times in [0, period) to
        values.
    period
        The period T.
    cfg
        Sampling policy; defaults to :class:`QuadratureConfig()`.
    floor
        Scale below which the result is considered zero for convergence
        purposes: the stop rule is
        ``|M_2S - M_S| <= rel_tolerance * max(|M_2S|, floor)``.

    Returns
    -------
    PeriodMean
        Converged value and the number of samples used.

    Raises
    ------
    QuadratureToleranceError
        If the tolerance is not met at ``max_samples``; the error carries the
        best estimate.
    """
    cfg = cfg or QuadratureConfig()
    n = _even(cfg.initial_samples)
    prev = float(_mean_of_samples(np.asarray(f(_times(period, n)), dtype=float), cfg.rule))
    while True:
        n2 = 2 * n
        if n2 > cfg.max_samples:
            raise QuadratureToleranceError(
                f"period_mean did not converge within {cfg.max_samples} samples",
                best_estimate=prev,
                samples=n,
            )
        cur = float(_mean_of_samples(np.asarray(f(_times(period, n2)), dtype=float), cfg.rule))
        if abs(cur - prev) <= cfg.rel_tolerance * max(abs(cur), floor):
            return PeriodMean(cur, n2)
        prev, n = cur, n2


def period_mean_weighted(
    f: Integrand,
    weight: Integrand,
    period: float,
    cfg: QuadratureConfig | None = None,
    *,
    floor: float = 1.0,
) -> PeriodMean:
    """Mean of ``weight(t) * f(t)`` over one period (see :func:`period_mean`)."""
    return period_mean(lambda t: np.asarray(weight(t)) * np.asarray(f(t)), period, cfg, floor=floor)


def period_log_mean_exp(
    arg: Integrand,
    period: float,
    cfg: QuadratureConfig | None = None,
) -> PeriodMean:
    """log of the period mean of ``exp(arg(t))``, computed overflow-safe.

    The mean is evaluated in shifted form exp(A) * mean(exp(arg - A)) with
    A = max sampled arg, and only its log is ever materialized.  Convergence
    is absolute on the log, which is relative on the mean itself.
    """
    cfg = cfg or QuadratureConfig()

    def estimate(n: int) -> float:
        a = np.asarray(arg(_times(period, n)), dtype=float)
        amax = float(a.max())
        return amax + float(np.log(_mean_of_samples(np.exp(a - amax), cfg.rule)))

    n = _even(cfg.initial_samples)
    prev = estimate(n)
    while True:
        n2 = 2 * n
        if n2 > cfg.max_samples:
            raise QuadratureToleranceError(
                f"period_log_mean_exp did not converge within {cfg.max_samples} samples",
                best_estimate=prev,
                samples=n,
            )
        cur = estimate(n2)
        if abs(cur - prev) <= cfg.rel_tolerance:
            return PeriodMean(cur, n2)
        prev, n = cur, n2


def period_mean_array(
    f: Callable[[np.ndarray], np.ndarray],
    period: float,
    cfg: QuadratureConfig | None = None,
    *,
    floor: float = 1.0,
) -> tuple[np.ndarray, int]:
    """Period mean of an array-valued integrand (time on the last axis).

    Convergence requires every component to settle:
    ``max_i |dM_i| <= rel_tolerance * max(max_i |M_i|, floor)``.
    """
    cfg = cfg or QuadratureConfig()

    def estimate(n: int) -> np.ndarray:
        return np.asarray(_mean_of_samples(np.asarray(f(_times(period, n)), dtype=float), cfg.rule))

    n = _even(cfg.initial_samples)
    prev = estimate(n)
    while True:
        n2 = 2 * n
        if n2 > cfg.max_samples:
            raise QuadratureToleranceError(
                f"period_mean_array did not converge within {cfg.max_samples} samples",
                best_estimate=prev,
                samples=n,
            )
        cur = estimate(n2)
        if np.max(np.abs(cur - prev)) <= cfg.rel_tolerance * max(float(np.max(np.abs(cur))), floor):
            return cur, n2
        prev, n = cur, n2
