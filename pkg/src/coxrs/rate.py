"""Delta-method moments of the rate 1/Gamma and their Monte Carlo checks.

The exact moments of the reciprocal state are intractable, but a
second-order Taylor expansion around E Gamma gives

    E[1/Gamma_k]        ~  1/E Gamma_k + Var Gamma_k / (E Gamma_k)^3
    Var[1/Gamma_k]      ~  Var Gamma_k / (E Gamma_k)^4
    E[1/(Gamma_k Gamma_l)] ~ 1/(E_k E_l) + Cov_kl/(E_k^2 E_l^2)
                             + Var_k/(E_l E_k^3) + Var_l/(E_k E_l^3).

The mean approximation always dominates the plug-in value 1/E Gamma.

For validation, :func:`mc_rate_moments` simulates independent state
trajectories and :func:`mean_ci` / :func:`var_ci` build the usual
normal-theory confidence intervals; the variance interval uses the
kurtosis plug-in

    zeta_hat = (gamma4_hat - 1) / 2,
    gamma4_hat = n * sum((Y_i - median)^4) / ((n-1)^2 * S_n^4),

so a sample with explosive or degenerate fourth moment raises rather than
returning a nonsensical interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .state import MomentSpec, gamma_closed_form, state_cov, state_mean

__all__ = [
    "RateMoments",
    "CiPair",
    "rate_mean_approx",
    "rate_var_approx",
    "rate_cross_approx",
    "rate_moments",
    "McRateMoments",
    "mc_rate_moments",
    "mean_ci",
    "var_ci",
]


@dataclass(frozen=True)
class CiPair:
    """A confidence interval (lo, hi) at the given level."""

    lo: float
    hi: float
    level: float

    def __post_init__(self):
        if not 0 < self.level < 1:
            raise ValueError("level must be in (0, 1)")
        if self.lo > self.hi:
            raise ValueError("lower bound exceeds upper bound")

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class RateMoments:
    """Delta approximations over the whole ladder: mean/var vectors and
    the cross-moment matrix E[1/(Gamma_k Gamma_l)]."""

    mean_approx: np.ndarray
    var_approx: np.ndarray
    cross_approx: np.ndarray


def _mean_var(spec, k):
    ev = state_mean(spec, k)
    if ev <= 0:
        raise ValueError(f"E Gamma(t_{k}) = {ev} is not positive; "
                         "rate moments undefined")
    return ev, state_cov(spec, k, k)


def rate_mean_approx(spec: MomentSpec, k: int) -> float:
    """Second-order approximation of E[1/Gamma(t_k)]."""
    ev, var = _mean_var(spec, k)
    return 1.0 / ev + var / ev ** 3


def rate_var_approx(spec: MomentSpec, k: int) -> float:
    """Second-order approximation of Var[1/Gamma(t_k)]."""
    ev, var = _mean_var(spec, k)
    return var / ev ** 4


def rate_cross_approx(spec: MomentSpec, k: int, l: int) -> float:
    """Second-order approximation of E[1/(Gamma(t_k) Gamma(t_l))]."""
    ek, vk = _mean_var(spec, k)
    el, vl = _mean_var(spec, l)
    ckl = state_cov(spec, k, l)
    return (1.0 / (ek * el) + ckl / (ek ** 2 * el ** 2)
            + vk / (el * ek ** 3) + vl / (ek * el ** 3))


def rate_moments(spec: MomentSpec) -> RateMoments:
    """All delta approximations for k = 0..m at once."""
    n = spec.last_index + 1
    mean = np.array([rate_mean_approx(spec, k) for k in range(n)])
    var = np.array([rate_var_approx(spec, k) for k in range(n)])
    cross = np.empty((n, n))
    for k in range(n):
        for l in range(k, n):
            cross[k, l] = cross[l, k] = rate_cross_approx(spec, k, l)
    return RateMoments(mean, var, cross)


@dataclass(frozen=True)
class McRateMoments:
    """Sample statistics of 1/Gamma over independent trajectories.

    ``mean``/``var`` are per-epoch vectors with standard errors; ``cross``
    is the sample mean of (1/Gamma_k)(1/Gamma_l) with its standard error.
    ``samples`` holds the raw rate draws, shape (n_samples, m+1).
    """

    mean: np.ndarray
    mean_se: np.ndarray
    var: np.ndarray
    var_se: np.ndarray
    cross: np.ndarray
    cross_se: np.ndarray
    samples: np.ndarray


def mc_rate_moments(spec: MomentSpec, n_samples: int, seed: int) -> McRateMoments:
    """Monte Carlo moments of the rate over independent noise draws.

    Trajectories are simulated in one vectorised block from a single
    seeded generator, so the result is reproducible and independent of
    any outer parallelism.
    """
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, np.sqrt(spec.sigma2),
                       size=(n_samples, spec.mean_series.size))
    paths = spec.mean_series[None, :] + noise
    gamma = gamma_closed_form(paths, spec.alpha, spec.gamma0, spec.step)
    with np.errstate(divide="ignore"):
        rate = 1.0 / gamma
    if spec.gamma0 == 0:
        rate[:, 0] = np.nan  # rate undefined at t_0; epoch-0 stats are nan
    n = n_samples
    mean = rate.mean(axis=0)
    sd = rate.std(axis=0, ddof=1)
    var = sd ** 2
    centred = rate - mean
    mu4 = (centred ** 4).mean(axis=0)
    var_se = np.sqrt(np.maximum(mu4 - var ** 2, 0.0) / n)
    cross = (rate.T @ rate) / n
    prod_sq = (rate ** 2).T @ (rate ** 2) / n
    cross_se = np.sqrt(np.maximum(prod_sq - cross ** 2, 0.0) / n)
    return McRateMoments(mean=mean, mean_se=sd / np.sqrt(n),
                         var=var, var_se=var_se,
                         cross=cross, cross_se=cross_se, samples=rate)


def mean_ci(sample, level: float) -> CiPair:
    """Normal-theory confidence interval for a population mean."""
    y = np.asarray(sample, dtype=float)
    if y.size < 2:
        raise ValueError("need at least 2 observations")
    xi = stats.norm.ppf(0.5 + level / 2)
    half = xi * y.std(ddof=1) / np.sqrt(y.size)
    ybar = y.mean()
    return CiPair(ybar - half, ybar + half, level)


def var_ci(sample, level: float) -> CiPair:
    """Kurtosis-adjusted confidence interval for a population variance.

    The interval is S^2 / (1 +/- xi * sqrt(2*zeta/(n-1))) with the
    median-based kurtosis plug-in described in the module docstring.
    Raises ValueError when the plug-in degenerates (constant sample,
    zeta < 0, or a lower-bound factor <= 0).
    """
    y = np.asarray(sample, dtype=float)
    n = y.size
    if n < 2:
        raise ValueError("need at least 2 observations")
    s2 = y.var(ddof=1)
    if s2 == 0:
        raise ValueError("kurtosis plug-in degenerate: sample variance is zero")
    med = np.median(y)
    gamma4 = n * ((y - med) ** 4).sum() / ((n - 1) ** 2 * s2 ** 2)
    zeta = 0.5 * (gamma4 - 1.0)
    if zeta < 0:
        raise ValueError(
            f"kurtosis plug-in degenerate: zeta = {zeta:.3g} is negative")
    xi = stats.norm.ppf(0.5 + level / 2)
    q = xi * np.sqrt(2 * zeta / (n - 1))
    if 1 - q <= 0:
        raise ValueError(
            f"kurtosis factor overflow: 1 - xi*sqrt(2*zeta/(n-1)) = {1 - q:.3g} <= 0")
    return CiPair(s2 / (1 + q), s2 / (1 - q), level)
