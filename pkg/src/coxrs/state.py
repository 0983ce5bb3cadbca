"""The state process Gamma driven by pore pressure.

In discrete time the state obeys the multiplicative recursion

    Gamma(t_{k+1}) = (Gamma(t_k) + alpha*step) * exp[alpha*(x_{k+1} - x_k)]

whose explicit solution is

    Gamma(t_k) = exp(alpha*x_k) * { alpha*step * sum_{i<k} exp(-alpha*x_i)
                                    + gamma0 * exp(-alpha*x_0) },

with Gamma(t_0) = gamma0 (the empty-sum case).  When the pressure x is the
deterministic mean plus independent Gaussian noise of variance sigma2, the
first and second moments of Gamma are available in closed form through

    c      = exp(alpha^2 * sigma2)          (lognormal correction factor)
    f[i,j] = exp[alpha * (m_i - m_j)]       (pairwise mean ratios)

and this module evaluates them exactly.  Sums of exponentials are computed
on shifted exponents so that large alpha*pressure products do not overflow
before the analytically benign ratios are formed.

Note on the covariance sign classification: for decreasing mean pressure
the sufficient conditions compare the noise scale against pressure levels
and drops.  Two readings of that scale are in circulation, alpha*sigma2
and alpha^2*sigma2; they coincide at alpha = 1 and this module uses
alpha*sigma2, which is the scale that makes c*f[k,i] cross 1 exactly at
the stated thresholds.  See :func:`classify_cov_sign`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "gamma_euler_step",
    "gamma_closed_form",
    "MomentSpec",
    "state_mean",
    "state_cov",
    "state_moments",
    "classify_cov_sign",
]


def _require_finite(name, value):
    if not np.all(np.isfinite(value)):
        raise OverflowError(f"{name} overflowed to a non-finite value")
    return value


def gamma_euler_step(gamma_k, x_k, x_k1, alpha, step):
    """One step of the state recursion.

    Returns (gamma_k + alpha*step) * exp[alpha*(x_k1 - x_k)].  Inputs may
    be scalars or broadcastable arrays.
    """
    if np.any(np.asarray(gamma_k) < 0):
        raise ValueError("state must be non-negative")
    out = (gamma_k + alpha * step) * np.exp(alpha * (np.asarray(x_k1) - x_k))
    return _require_finite("state update", out)


def gamma_closed_form(x, alpha, gamma0, step) -> np.ndarray:
    """Explicit solution of the state recursion along a pressure path.

    Parameters
    ----------
    x : array, shape (..., m+1)
        Pressure at epochs t_0..t_m; leading axes are independent paths.
    alpha : float, > 0
    gamma0 : float, >= 0
        Initial state Gamma(t_0).
    step : float, > 0

    Returns
    -------
    array of the same shape with Gamma(t_0..t_m) per path; agrees with the
    iterated :func:`gamma_euler_step` to machine precision.
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if gamma0 < 0:
        raise ValueError("gamma0 must be >= 0")
    x = np.asarray(x, dtype=float)
    ax = alpha * x
    shift = (-ax).max(axis=-1, keepdims=True)
    decay = np.exp(-ax - shift)
    prefix = np.zeros_like(decay)
    np.cumsum(decay[..., :-1], axis=-1, out=prefix[..., 1:])
    out = np.exp(ax + shift) * (alpha * step * prefix + gamma0 * decay[..., :1])
    out[..., 0] = gamma0
    return _require_finite("state trajectory", out)


@dataclass(frozen=True)
class MomentSpec:
    """Everything the exact moment formulas need for one cell.

    Attributes
    ----------
    mean_series : array, shape (m+1,)
        Mean pressure m(s, t_k) in bara.
    alpha, gamma0, sigma2, step : float
        Model parameters; ``c_factor = exp(alpha^2 * sigma2)`` and the
        pairwise table ``f_table[i, j] = exp[alpha*(m_i - m_j)]`` are
        derived at construction.
    """

    mean_series: np.ndarray
    alpha: float
    gamma0: float
    sigma2: float
    step: float

    def __post_init__(self):
        m = np.asarray(self.mean_series, dtype=float)
        if m.ndim != 1 or m.size < 1 or not np.isfinite(m).all():
            raise ValueError("mean_series must be a finite 1-d array")
        if self.alpha <= 0 or self.gamma0 < 0 or self.sigma2 < 0 or self.step <= 0:
            raise ValueError("need alpha > 0, gamma0 >= 0, sigma2 >= 0, step > 0")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mean_series", m)
        c = math.exp(self.alpha ** 2 * self.sigma2)
        f = np.exp(self.alpha * (m[:, None] - m[None, :]))
        _require_finite("f table", f)
        f.setflags(write=False)
        object.__setattr__(self, "_c", c)
        object.__setattr__(self, "_f", f)

    @property
    def c_factor(self) -> float:
        return self._c

    @property
    def f_table(self) -> np.ndarray:
        return self._f

    @property
    def last_index(self) -> int:
        return self.mean_series.size - 1


def state_mean(spec: MomentSpec, k: int) -> float:
    """Exact expectation of Gamma(t_k) under Gaussian pressure noise.

    E Gamma(t_k) = c * (alpha*step * sum_{i<k} f[k,i] + gamma0 * f[k,0])
    for k >= 1; Gamma(t_0) = gamma0 is deterministic.
    """
    if not 0 <= k <= spec.last_index:
        raise ValueError(f"index {k} outside 0..{spec.last_index}")
    if k == 0:
        return spec.gamma0
    f = spec.f_table
    val = spec.c_factor * (spec.alpha * spec.step * f[k, :k].sum()
                           + spec.gamma0 * f[k, 0])
    return float(_require_finite("state mean", val))


def state_cov(spec: MomentSpec, k: int, l: int) -> float:
    """Exact covariance of Gamma(t_k) and Gamma(t_l).

    Symmetric in (k, l); zero whenever either index is 0 (the initial
    state is deterministic) or sigma2 = 0.
    """
    if not (0 <= k <= spec.last_index and 0 <= l <= spec.last_index):
        raise ValueError("index outside the time ladder")
    if k > l:
        k, l = l, k
    if k == 0:
        return 0.0
    f = spec.f_table
    c, g0 = spec.c_factor, spec.gamma0
    ad = spec.alpha * spec.step
    if k == l:
        fk = f[k, :k]
        s_sq = float((fk ** 2).sum())
        s_tot = float(fk.sum())
        val = (ad ** 2 * c ** 2 * (c ** 2 - 1) * s_sq
               + ad ** 2 * c ** 2 * (c - 1) * (s_tot ** 2 - s_sq)
               + 2 * ad * g0 * c ** 2 * (f[k, 0] ** 2 * (c ** 2 - 1)
                                         + (c - 1) * f[k, 0] * (s_tot - f[k, 0]))
               + g0 ** 2 * f[k, 0] ** 2 * c ** 2 * (c ** 2 - 1))
    else:
        pair = float((f[k, :k] * f[l, :k] * (c - 1)
                      - f[l, :k] * (1 - 1 / c)).sum())
        val = (ad ** 2 * c ** 2 * pair
               + (2 * ad * g0 + g0 ** 2) * c ** 2 * f[k, 0] * f[l, 0] * (c - 1)
               - ad * g0 * c ** 2 * f[l, 0] * (1 - 1 / c))
    return float(_require_finite("state covariance", val))


def state_moments(spec: MomentSpec):
    """Mean vector and covariance matrix of Gamma(t_0..t_m).

    Returns (mean, cov) with shapes (m+1,) and (m+1, m+1).
    """
    n = spec.last_index + 1
    mean = np.array([state_mean(spec, k) for k in range(n)])
    cov = np.zeros((n, n))
    for k in range(1, n):
        for l in range(k, n):
            cov[k, l] = cov[l, k] = state_cov(spec, k, l)
    return mean, cov


def classify_cov_sign(spec: MomentSpec) -> str:
    """Classify the sign structure of the state covariances.

    Returns one of

    - ``"nonneg-all"``: Cov(Gamma(t_k), Gamma(t_l)) >= 0 for all k, l.
      Holds when the mean pressure is non-decreasing, and also for
      decreasing pressure when the noise scale alpha*sigma2 exceeds the
      initial pressure level m(t_0).
    - ``"bounded-negative"``: for decreasing pressure with alpha*sigma2
      below the smallest per-step pressure drop, the covariance minus
      (alpha*step*gamma0 + gamma0^2) * c^2 * (c-1) * f[k,0] * f[l,0]
      is <= 0 for all k < l.
    - ``"indeterminate"``: non-monotone mean series, or a decreasing
      series whose noise scale falls between the two thresholds.

    The thresholds compare alpha*sigma2 with pressure values; an
    alternative convention uses alpha^2*sigma2, identical at alpha = 1
    (see the module docstring).
    """
    m = spec.mean_series
    diffs = np.diff(m)
    if (diffs >= 0).all():
        return "nonneg-all"
    if (diffs <= 0).all():
        scale = spec.alpha * spec.sigma2
        if scale > m[0]:
            return "nonneg-all"
        if scale < float((-diffs).min()):
            return "bounded-negative"
    return "indeterminate"
