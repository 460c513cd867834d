"""Model-agnostic machinery for mixture confidence sequences.

The region at level 1 - epsilon is the likelihood level set

    { theta : l(theta) >= log(epsilon) + log q_n },

where q_n is the mixture density of the data under the weight function.  For a
strictly concave log-likelihood the set is an interval whose endpoints are
found by geometric bracket expansion from the MLE followed by bisection.

log q_n itself is produced three ways: exact closed forms supplied by the model
modules, a Laplace (Gaussian-integral) approximation at the MLE, or adaptive
quadrature of exp(l + log pi) in shifted log space.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import integrate

from .core import Interval, NormalWeight, PersistenceLevel

__all__ = [
    "ConcaveLogLikelihood",
    "MixtureLogDensity",
    "ThresholdAboveMaxError",
    "NoBracketError",
    "NonFiniteIntegrandError",
    "concave_level_set",
    "robbins_region",
    "closed_form_half_width",
    "laplace_log_mixture",
    "quadrature_log_mixture",
    "VilleCheckResult",
    "verify_ville_inequality",
]

QUAD_REL_TOL = 1e-8      # relative tolerance contract for quadrature mixtures
BISECT_XTOL = 1e-9       # absolute tolerance for level-set endpoints
_MAX_EXPANSIONS = 200


class ThresholdAboveMaxError(ArithmeticError):
    """Level-set threshold exceeds the log-likelihood maximum.

    Cannot happen with an exact mixture density (the maximised likelihood always
    dominates the mixture); signals a numerically broken log q_n.
    """


class NoBracketError(RuntimeError):
    """Bracket expansion exhausted without crossing the threshold."""


class NonFiniteIntegrandError(ArithmeticError):
    """Quadrature integrand evaluated to NaN/inf after max-shifting."""


@dataclass(frozen=True)
class ConcaveLogLikelihood:
    """A strictly concave log-likelihood with known maximiser.

    fn evaluates l(theta); mle and mle_loglik locate the maximum; support is the
    open parameter domain ((0, 1) for a proportion, the real line by default).
    """

    fn: Callable[[float], float]
    mle: float
    mle_loglik: float
    support: tuple = (-math.inf, math.inf)

    def __call__(self, theta):
        return self.fn(theta)


@dataclass(frozen=True)
class MixtureLogDensity:
    """log q_n together with how it was obtained (exact / laplace / quadrature)."""

    value: float
    method: str = "exact"


def _as_log_qn(log_qn) -> float:
    return log_qn.value if isinstance(log_qn, MixtureLogDensity) else float(log_qn)


def _bisect_endpoint(f, inner, outer, threshold, xtol):
    """Root of f(theta) = threshold between inner (f >= threshold) and outer
    (f < threshold), to absolute tolerance xtol."""
    a, b = inner, outer
    while abs(b - a) > xtol:
        m = 0.5 * (a + b)
        if f(m) >= threshold:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def _endpoint(loglik: ConcaveLogLikelihood, threshold: float, direction: int,
              xtol: float, scale: Optional[float]) -> float:
    """Locate one level-set endpoint on the given side of the MLE.

    Expands geometrically (step doubling) from the MLE until the threshold is
    crossed, then bisects.  At a finite support bound still above the threshold
    the region is truncated and the bound itself is returned.
    """
    bound = loglik.support[1] if direction > 0 else loglik.support[0]
    step = scale if scale is not None else 1e-2 * (1.0 + abs(loglik.mle))
    x_in = loglik.mle
    for _ in range(_MAX_EXPANSIONS):
        x_out = x_in + direction * step
        if (direction > 0 and x_out >= bound) or (direction < 0 and x_out <= bound):
            if not math.isfinite(bound):
                raise NoBracketError(
                    f"no level crossing within {_MAX_EXPANSIONS} expansions towards "
                    f"{'+' if direction > 0 else '-'}inf")
            # probe just inside the open boundary
            x_probe = bound - direction * max(xtol, 1e-13 * (1.0 + abs(bound)))
            if loglik(x_probe) >= threshold:
                return bound          # truncated at the domain boundary
            return _bisect_endpoint(loglik, x_in, x_probe, threshold, xtol)
        if loglik(x_out) < threshold:
            return _bisect_endpoint(loglik, x_in, x_out, threshold, xtol)
        x_in = x_out
        step *= 2.0
    raise NoBracketError(f"no level crossing within {_MAX_EXPANSIONS} expansions")


def concave_level_set(loglik: ConcaveLogLikelihood, threshold: float, *,
                      xtol: float = BISECT_XTOL, scale: Optional[float] = None) -> Interval:
    """Interval {theta : l(theta) >= threshold} for a concave log-likelihood.

    Raises ThresholdAboveMaxError when the threshold exceeds l(mle) beyond
    rounding slack; a threshold exactly at the maximum gives the degenerate
    point interval at the MLE.
    """
    slack = 1e-10 * (1.0 + abs(loglik.mle_loglik))
    if threshold > loglik.mle_loglik + slack:
        raise ThresholdAboveMaxError(
            f"threshold {threshold} exceeds the log-likelihood maximum {loglik.mle_loglik}")
    if threshold >= loglik.mle_loglik:
        return Interval(loglik.mle, loglik.mle)
    lower = _endpoint(loglik, threshold, -1, xtol, scale)
    upper = _endpoint(loglik, threshold, +1, xtol, scale)
    return Interval(lower, upper)


def robbins_region(loglik: ConcaveLogLikelihood,
                   log_qn: Union[MixtureLogDensity, float],
                   level: PersistenceLevel, *,
                   xtol: float = BISECT_XTOL,
                   scale: Optional[float] = None) -> Interval:
    """Mixture confidence region {theta : l(theta) >= log eps + log q_n}.

    The MLE always belongs to the region; endpoints are clipped at finite
    support boundaries (detectable as endpoint == boundary).
    """
    return concave_level_set(loglik, level.log_epsilon + _as_log_qn(log_qn),
                             xtol=xtol, scale=scale)


def closed_form_half_width(variance_proxy: float, n: int, estimate: float,
                           weight: NormalWeight, level: PersistenceLevel) -> float:
    """Half-width of the closed-form sequence for a normal-model estimate.

    variance_proxy plays the role of sigma0^2 (exact known-variance case) or of
    n * v_n for an asymptotically normal estimator with variance estimate v_n.
    """
    if not variance_proxy > 0:
        raise ValueError(f"variance_proxy must be positive, got {variance_proxy}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    v = variance_proxy / n
    tv = weight.tau0_sq + v
    arg = math.log(tv / v) + (estimate - weight.mu0) ** 2 / tv - 2.0 * level.log_epsilon
    return math.sqrt(v) * math.sqrt(arg)


def laplace_log_mixture(loglik: ConcaveLogLikelihood, weight_density_at_mle: float,
                        observed_info_at_mle: float, dim: int = 1) -> MixtureLogDensity:
    """Gaussian-integral approximation of log q_n at the MLE:

        l(mle) + log pi(mle) + (dim/2) log(2 pi) - (1/2) log |j_n(mle)|.

    observed_info_at_mle is the determinant of the observed information (the
    scalar itself when dim == 1).  Relative error is O(1/n) under repeated
    sampling.
    """
    if not observed_info_at_mle > 0:
        raise ValueError(f"observed information must be positive, got {observed_info_at_mle}")
    if not weight_density_at_mle > 0:
        raise ValueError(f"weight density at the MLE must be positive, got {weight_density_at_mle}")
    value = (loglik.mle_loglik + math.log(weight_density_at_mle)
             + 0.5 * dim * math.log(2.0 * math.pi) - 0.5 * math.log(observed_info_at_mle))
    return MixtureLogDensity(value, method="laplace")


def quadrature_log_mixture(loglik: ConcaveLogLikelihood,
                           weight_log_density: Callable[[float], float],
                           domain: Optional[tuple] = None,
                           rel_tol: float = QUAD_REL_TOL) -> MixtureLogDensity:
    """log of integral exp(l(theta) + log pi(theta)) d theta by adaptive quadrature.

    The integrand is shifted by its value at the MLE before exponentiating so
    only O(1) magnitudes are integrated.  domain is (a, b) with infinite ends
    allowed (scipy transforms unbounded pieces internally); default is the
    likelihood support.  If the requested relative tolerance is not certified
    by the error estimate, the achieved estimate is still returned with a
    warning.
    """
    if domain is None:
        domain = loglik.support
    a, b = (domain.lower, domain.upper) if isinstance(domain, Interval) else (domain[0], domain[1])

    shift = loglik.mle_loglik + weight_log_density(loglik.mle)
    if not math.isfinite(shift):
        raise NonFiniteIntegrandError(f"integrand is not finite at the MLE (log value {shift})")

    def integrand(theta):
        return math.exp(loglik(theta) + weight_log_density(theta) - shift)

    pieces = []
    if a < loglik.mle < b:
        pieces = [(a, loglik.mle), (loglik.mle, b)]
    else:
        pieces = [(a, b)]
    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in pieces:
            val, e = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=rel_tol * 1e-2,
                                    limit=200)
            total += val
            err += e
    if not math.isfinite(total) or total <= 0.0:
        raise NonFiniteIntegrandError(f"quadrature returned non-positive mass {total}")
    if err > rel_tol * total:
        warnings.warn(f"quadrature tolerance not met: estimated relative error "
                      f"{err / total:.2e} > {rel_tol:.0e}", RuntimeWarning, stacklevel=2)
    return MixtureLogDensity(shift + math.log(total), method="quadrature")


@dataclass(frozen=True)
class VilleCheckResult:
    """Monte Carlo estimate of P(sup_n q_n / p_n >= k) against the 1/k bound."""

    estimate: float
    bound: float
    std_error: float
    crossings: int
    reps: int
    k: float

    @property
    def passed(self) -> bool:
        return self.estimate <= self.bound + 3.0 * self.std_error


def verify_ville_inequality(log_ratio_path: Callable[[np.random.Generator, int], np.ndarray],
                            k: float, n_max: int, reps: int, seed: int) -> VilleCheckResult:
    """Estimate the probability that the mixture-to-truth likelihood ratio ever
    reaches k within n_max samples; the supermartingale bound caps it at 1/k.

    log_ratio_path(rng, n_max) must return the replication's path of
    log(q_n / p_n(theta_true)) for n = 1..n_max.  Replication r always draws
    from the (seed, r) counter stream, so the estimate is independent of any
    parallel scheduling by the caller.
    """
    if not k > 0:
        raise ValueError(f"k must be positive, got {k}")
    from .simulation import replication_rng
    log_k = math.log(k)
    crossings = 0
    for r in range(reps):
        path = log_ratio_path(replication_rng(seed, r), n_max)
        if float(np.max(path)) >= log_k:
            crossings += 1
    p = crossings / reps
    se = math.sqrt(p * (1.0 - p) / reps)
    return VilleCheckResult(estimate=p, bound=1.0 / k, std_error=se,
                            crossings=crossings, reps=reps, k=k)
