"""Conjugate normal linear model with a scaled-information coefficient prior.

Coefficients and noise variance carry a normal times inverse-gamma prior.
When the prior coefficient covariance is g times the inverted design
cross-product, the posterior mean is a convex combination of the prior
guess and the least-squares fit with weights 1/(1+g) and g/(1+g), and all
evidence quantities reduce to functions of g and R-squared.

Two data-driven choices of g are provided: the square root of the sample
count, and the minimizer of an unbiased quadratic risk estimate for the
shrunken fit.  Models here have no intercept, so R-squared is uncentered:
1 - ||Y - fitted||^2 / ||Y||^2.  All evidence values downstream inherit
that convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg
from scipy.special import gammaln

from .errors import (
    NonPositiveG,
    NumericalError,
    SingularDesign,
    UnderdeterminedSystem,
    ValidationError,
)

__all__ = [
    "G_RULE_SQRT_N",
    "G_RULE_SURE",
    "G_RULE_FIXED",
    "CONDITION_LIMIT",
    "SURE_G_FLOOR",
    "GPriorSpec",
    "NIGPosterior",
    "OlsFit",
    "SureG",
    "ols_fit",
    "sure_g",
    "sure_value",
    "resolve_g",
    "gprior_posterior",
    "nig_posterior",
    "nig_logpdf",
]

G_RULE_SQRT_N = "sqrtn"
G_RULE_SURE = "sure"
G_RULE_FIXED = "fixed"
_G_RULES = (G_RULE_SQRT_N, G_RULE_SURE, G_RULE_FIXED)

CONDITION_LIMIT = 1e12
SURE_G_FLOOR = 1e-6


@dataclass(frozen=True)
class GPriorSpec:
    """Prior configuration for the scaled-information coefficient prior.

    ``g_rule`` is one of "sqrtn", "sure" or "fixed" (the latter requires
    ``g_value``).  ``beta0`` is the prior coefficient guess, zero when
    omitted.  ``a`` and ``b`` are the inverse-gamma shape and rate for the
    noise variance; the default (0, 0) is the standard improper choice.
    ``sqrtn_count`` overrides the count whose square root the "sqrtn" rule
    uses; by default the rule uses the number of design rows, but panel
    callers pass the number of subjects instead.
    """

    g_rule: str = G_RULE_SQRT_N
    g_value: Optional[float] = None
    beta0: Optional[np.ndarray] = None
    a: float = 0.0
    b: float = 0.0
    sqrtn_count: Optional[int] = None

    def __post_init__(self):
        if self.g_rule not in _G_RULES:
            raise ValidationError("unknown g rule %r; expected one of %s" % (self.g_rule, list(_G_RULES)))
        if self.g_rule == G_RULE_FIXED:
            if self.g_value is None:
                raise ValidationError("g_rule 'fixed' requires g_value")
            if not (float(self.g_value) > 0.0):
                raise NonPositiveG("fixed g must be > 0, got %r" % self.g_value)
        if self.beta0 is not None:
            b0 = np.asarray(self.beta0, dtype=np.float64)
            if b0.ndim != 1 or not np.isfinite(b0).all():
                raise ValidationError("beta0 must be a finite 1-D array")
            b0 = b0.copy()
            b0.setflags(write=False)
            object.__setattr__(self, "beta0", b0)
        if self.a < 0.0 or self.b < 0.0:
            raise ValidationError("variance prior shape and rate must be >= 0")
        if self.sqrtn_count is not None and int(self.sqrtn_count) < 1:
            raise ValidationError("sqrtn_count must be a positive integer")

    def prior_mean(self, k):
        if self.beta0 is None:
            return np.zeros(k)
        if self.beta0.size != k:
            raise ValidationError("beta0 has %d entries, design has %d columns" % (self.beta0.size, k))
        return self.beta0


@dataclass(frozen=True)
class NIGPosterior:
    """Normal times inverse-gamma posterior over coefficients and variance.

    Coefficients given the variance are normal with mean ``beta_star`` and
    covariance ``sigma2 * v_star``; the variance is inverse gamma with
    shape ``a_star`` and rate ``b_star``.  ``g_used``, ``sigma2_hat`` and
    ``r_squared`` are populated when the posterior came from the
    scaled-information prior and are None otherwise.
    """

    beta_star: np.ndarray
    v_star: np.ndarray
    a_star: float
    b_star: float
    g_used: Optional[float] = None
    sigma2_hat: Optional[float] = None
    r_squared: Optional[float] = None


class OlsFit(NamedTuple):
    beta_hat: np.ndarray
    sigma2_hat: float
    r_squared: float


class SureG(NamedTuple):
    g: float
    floored: bool


def _as_design(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.ndim != 2:
        raise ValidationError("design must be 2-D, got ndim=%d" % x.ndim)
    if x.shape[0] != y.size:
        raise ValidationError("design has %d rows but response has %d entries" % (x.shape[0], y.size))
    if not np.isfinite(x).all() or not np.isfinite(y).all():
        raise ValidationError("design or response contains non-finite values")
    return x, y


def ols_fit(x, y):
    """Least-squares fit with uncentered R-squared.

    Returns ``(beta_hat, sigma2_hat, r_squared)`` where ``sigma2_hat`` is
    the residual sum of squares over n - k degrees of freedom and
    R-squared is 1 - RSS / ||y||^2 (no intercept adjustment).  Raises
    UnderdeterminedSystem when rows <= columns and SingularDesign when the
    design's condition number exceeds ``CONDITION_LIMIT``.
    """
    x, y = _as_design(x, y)
    n, k = x.shape
    if n <= k:
        raise UnderdeterminedSystem("need more rows than columns, got %d rows and %d columns" % (n, k))
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    if s[-1] <= 0.0 or s[0] / s[-1] > CONDITION_LIMIT:
        raise SingularDesign(
            "design condition number %.3g exceeds %.1g" % (np.inf if s[-1] <= 0 else s[0] / s[-1], CONDITION_LIMIT)
        )
    beta = vt.T @ ((u.T @ y) / s)
    resid = y - x @ beta
    rss = float(resid @ resid)
    yty = float(y @ y)
    sigma2 = rss / (n - k)
    r2 = 0.0 if yty == 0.0 else 1.0 - rss / yty
    r2 = min(max(r2, 0.0), 1.0)
    return OlsFit(beta_hat=beta, sigma2_hat=sigma2, r_squared=r2)


def sure_g(x, y, beta0=None):
    """Risk-minimizing g for the shrunken fit, in closed form.

    The unbiased risk estimate of the fit that shrinks the least-squares
    prediction toward the prior prediction is minimized at
    ``||fit_ols - fit_prior||^2 / (k * sigma2_hat) - 1``.  Values at or
    below zero are floored to ``SURE_G_FLOOR`` and flagged, since g must
    stay positive.  Returns ``(g, floored)``.
    """
    x, y = _as_design(x, y)
    fit = ols_fit(x, y)
    k = x.shape[1]
    b0 = np.zeros(k) if beta0 is None else np.asarray(beta0, dtype=np.float64).ravel()
    if b0.size != k:
        raise ValidationError("beta0 has %d entries, design has %d columns" % (b0.size, k))
    gap = x @ fit.beta_hat - x @ b0
    num = float(gap @ gap)
    if fit.sigma2_hat <= 0.0:
        if num == 0.0:
            return SureG(g=SURE_G_FLOOR, floored=True)
        raise NumericalError("zero residual variance; the risk estimate is undefined")
    raw = num / (k * fit.sigma2_hat) - 1.0
    if raw <= 0.0:
        return SureG(g=SURE_G_FLOOR, floored=True)
    return SureG(g=raw, floored=False)


def sure_value(g, x, y, beta0=None):
    """Unbiased quadratic risk estimate of the shrunken fit at a given g.

    The shrunken prediction is ``fit_prior / (1+g) + g/(1+g) * fit_ols``;
    its estimated risk is the residual sum of squares plus
    ``(2 * trace - n) * sigma2_hat`` with trace ``g k / (1+g)``.
    """
    g = float(g)
    if not (g > 0.0):
        raise NonPositiveG("g must be > 0, got %r" % g)
    x, y = _as_design(x, y)
    fit = ols_fit(x, y)
    n, k = x.shape
    b0 = np.zeros(k) if beta0 is None else np.asarray(beta0, dtype=np.float64).ravel()
    if b0.size != k:
        raise ValidationError("beta0 has %d entries, design has %d columns" % (b0.size, k))
    shrink = g / (1.0 + g)
    fitted = (x @ b0) / (1.0 + g) + shrink * (x @ fit.beta_hat)
    resid = y - fitted
    trace = shrink * k
    return float(resid @ resid) + (2.0 * trace - n) * fit.sigma2_hat


def resolve_g(spec, x, y, default_n=None):
    """Turn a :class:`GPriorSpec` into a concrete positive g for a design.

    Returns ``(g, floored)``; ``floored`` is only ever True under the
    "sure" rule.  For "sqrtn" the count defaults to the number of design
    rows, overridden by ``spec.sqrtn_count`` or ``default_n`` in that
    order of precedence.
    """
    if spec.g_rule == G_RULE_FIXED:
        return float(spec.g_value), False
    if spec.g_rule == G_RULE_SQRT_N:
        if spec.sqrtn_count is not None:
            count = int(spec.sqrtn_count)
        elif default_n is not None:
            count = int(default_n)
        else:
            count = int(np.asarray(x).shape[0])
        if count < 1:
            raise NonPositiveG("sample count for the sqrtn rule must be >= 1")
        return math.sqrt(count), False
    k = np.asarray(x).shape[1]
    g, floored = sure_g(x, y, beta0=spec.prior_mean(k))
    return g, floored


def gprior_posterior(x, y, spec):
    """Posterior under the scaled-information prior with the chosen g.

    The shrinkage identity gives the coefficient mean directly:
    ``beta0 / (1+g) + g/(1+g) * beta_hat``, with conditional covariance
    ``g/(1+g)`` times the inverted cross-product.
    """
    x, y = _as_design(x, y)
    n, k = x.shape
    fit = ols_fit(x, y)
    g, _ = resolve_g(spec, x, y)
    if not (g > 0.0) or not math.isfinite(g):
        raise NonPositiveG("resolved g must be finite and > 0, got %r" % g)
    beta0 = spec.prior_mean(k)
    shrink = g / (1.0 + g)
    beta_star = beta0 / (1.0 + g) + shrink * fit.beta_hat
    xtx = x.T @ x
    try:
        cho = scipy.linalg.cho_factor((xtx + xtx.T) / 2.0, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularDesign("cross-product not positive definite: %s" % exc) from None
    xtx_inv = scipy.linalg.cho_solve(cho, np.eye(k))
    v_star = shrink * xtx_inv
    a_star = spec.a + n / 2.0
    # V0^{-1} = X'X / g, so the posterior precision is (1+g)/g X'X.
    quad_prior = float(beta0 @ (xtx @ beta0)) / g
    quad_post = float(beta_star @ (xtx @ beta_star)) * (1.0 + g) / g
    b_star = spec.b + 0.5 * (quad_prior + float(y @ y) - quad_post)
    _check_proper(b_star, y)
    return NIGPosterior(
        beta_star=beta_star,
        v_star=v_star,
        a_star=a_star,
        b_star=b_star,
        g_used=g,
        sigma2_hat=fit.sigma2_hat,
        r_squared=fit.r_squared,
    )


def nig_posterior(x, y, spec, v0):
    """Conjugate update for an arbitrary prior coefficient covariance ``v0``.

    Generalizes :func:`gprior_posterior`; the posterior precision is the
    prior precision plus the design cross-product, and the posterior mean
    solves that precision against ``v0^{-1} beta0 + X'y``.
    """
    x, y = _as_design(x, y)
    n, k = x.shape
    v0 = np.asarray(v0, dtype=np.float64)
    if v0.shape != (k, k):
        raise ValidationError("v0 must be %d x %d, got %s" % (k, k, v0.shape))
    try:
        cho0 = scipy.linalg.cho_factor((v0 + v0.T) / 2.0, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularDesign("prior covariance not positive definite: %s" % exc) from None
    v0_inv = scipy.linalg.cho_solve(cho0, np.eye(k))
    beta0 = spec.prior_mean(k)
    prec = v0_inv + x.T @ x
    prec = (prec + prec.T) / 2.0
    try:
        cho = scipy.linalg.cho_factor(prec, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularDesign("posterior precision not positive definite: %s" % exc) from None
    beta_star = scipy.linalg.cho_solve(cho, v0_inv @ beta0 + x.T @ y)
    v_star = scipy.linalg.cho_solve(cho, np.eye(k))
    a_star = spec.a + n / 2.0
    b_star = spec.b + 0.5 * (
        float(beta0 @ (v0_inv @ beta0)) + float(y @ y) - float(beta_star @ (prec @ beta_star))
    )
    _check_proper(b_star, y)
    sigma2_hat = None
    r_squared = None
    if n > k:
        try:
            fit = ols_fit(x, y)
            sigma2_hat, r_squared = fit.sigma2_hat, fit.r_squared
        except (SingularDesign, UnderdeterminedSystem):
            pass
    return NIGPosterior(
        beta_star=beta_star,
        v_star=v_star,
        a_star=a_star,
        b_star=b_star,
        g_used=None,
        sigma2_hat=sigma2_hat,
        r_squared=r_squared,
    )


def _check_proper(b_star, y):
    scale = max(1.0, float(y @ y))
    if b_star <= 1e-12 * scale:
        raise NumericalError(
            "posterior variance rate is not positive (%.3g); residuals are exactly zero "
            "and the variance posterior would be improper" % b_star
        )


def nig_logpdf(beta, sigma2, posterior):
    """Log density of a :class:`NIGPosterior` at a point ``(beta, sigma2)``."""
    beta = np.asarray(beta, dtype=np.float64).ravel()
    sigma2 = float(sigma2)
    if sigma2 <= 0.0:
        raise ValidationError("sigma2 must be > 0")
    k = posterior.beta_star.size
    if beta.size != k:
        raise ValidationError("beta has %d entries, posterior has %d" % (beta.size, k))
    if posterior.a_star <= 0.0 or posterior.b_star <= 0.0:
        raise ValidationError("log density needs a proper posterior (a_star, b_star > 0)")
    cho = scipy.linalg.cho_factor((posterior.v_star + posterior.v_star.T) / 2.0, lower=True)
    logdet_v = 2.0 * float(np.sum(np.log(np.diag(cho[0]))))
    diff = beta - posterior.beta_star
    quad = float(diff @ scipy.linalg.cho_solve(cho, diff))
    a, b = posterior.a_star, posterior.b_star
    return (
        a * math.log(b)
        - float(gammaln(a))
        - 0.5 * k * math.log(2.0 * math.pi)
        - 0.5 * logdet_v
        - (a + 1.0 + 0.5 * k) * math.log(sigma2)
        - (b + 0.5 * quad) / sigma2
    )
