"""Anytime-valid confidence sequences from likelihood-ratio mixtures.

A sequence of confidence intervals, one per sample size, whose probability of
ever missing the true parameter (and hence of ever contradicting itself) is
bounded by a preset epsilon, uniformly over all sample sizes.  Implemented for
four concrete models (normal mean with known or unknown variance, a Bernoulli
proportion, the log-odds ratio of two proportions) together with classical
fixed-level comparators and a seeded Monte Carlo harness that reproduces the
bundled contradiction/non-coverage tables.
"""

from .core import (BetaWeight, Interval, LogOddsJeffreysInduced, NormalInverseGamma,
                   NormalWeight, PersistenceLevel, SequenceMonitor, WeightSpec)
from .engine import (ConcaveLogLikelihood, MixtureLogDensity, NoBracketError,
                     NonFiniteIntegrandError, ThresholdAboveMaxError, VilleCheckResult,
                     closed_form_half_width, concave_level_set, laplace_log_mixture,
                     quadrature_log_mixture, robbins_region, verify_ville_inequality)
from .normal import (NormalSuffStat, approx_interval_unknown_var, classical_interval,
                     nig_profile_interval, robbins_interval_known_var)
from .bernoulli import (BernoulliSuffStat, arcsine_approx_interval, beta_binomial_log_pmf,
                        lr_interval, omega_weight_from_beta, robbins_interval_bernoulli)
from .two_bernoulli import (SupportError, TwoSampleStat, UnboundedRegionError,
                            approx_interval_log_odds, continuity_corrected_estimates,
                            fnch_log_pmf, log_odds_weight_density,
                            robbins_conditional_interval, wald_interval)
from .simulation import (Model, ReportRow, Rule, SequencePlan, TableReport,
                         compare_to_reference, replication_rng, reproduce_table, run_plan)

__version__ = "0.1.0"

__all__ = [
    "Interval", "PersistenceLevel", "SequenceMonitor", "WeightSpec",
    "NormalWeight", "BetaWeight", "NormalInverseGamma", "LogOddsJeffreysInduced",
    "ConcaveLogLikelihood", "MixtureLogDensity",
    "ThresholdAboveMaxError", "NoBracketError", "NonFiniteIntegrandError",
    "concave_level_set", "robbins_region", "closed_form_half_width",
    "laplace_log_mixture", "quadrature_log_mixture",
    "VilleCheckResult", "verify_ville_inequality",
    "NormalSuffStat", "robbins_interval_known_var", "classical_interval",
    "nig_profile_interval", "approx_interval_unknown_var",
    "BernoulliSuffStat", "beta_binomial_log_pmf", "robbins_interval_bernoulli",
    "lr_interval", "arcsine_approx_interval", "omega_weight_from_beta",
    "TwoSampleStat", "SupportError", "UnboundedRegionError", "fnch_log_pmf",
    "log_odds_weight_density", "robbins_conditional_interval",
    "continuity_corrected_estimates", "approx_interval_log_odds", "wald_interval",
    "Model", "Rule", "SequencePlan", "ReportRow", "TableReport",
    "run_plan", "reproduce_table", "compare_to_reference", "replication_rng",
    "__version__",
]
