"""Bayes-factor screening of features against the empty model.

Under the scaled-information prior the evidence for a feature's lagged
design against the intercept-free null depends on the data only through
its uncentered R-squared, so each feature is scored by one least-squares
fit.  Scores are kept in log space; the reported scale is twice the log
Bayes factor, graded into four conventional evidence classes, with a
separate flag for factors above 150.

A second, prior-free score based on singular values of the design is
provided for cross-checking rankings.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import betaln

from ._pool import worker_count
from .deltadesign import build_univariate_design, difference_response
from .errors import (
    DegenerateBeta,
    DegenerateDf,
    InvalidR2,
    NonPositiveG,
    NumericalError,
    SingularDesign,
    UnderdeterminedSystem,
    ValidationError,
    ZeroDesign,
)
from .gprior import _as_design, ols_fit, resolve_g

__all__ = [
    "DECISIVE_BF",
    "TWO_LOG_DECISIVE",
    "Evidence",
    "BayesFactorReport",
    "GbfReport",
    "ScreenResult",
    "null_based_bf",
    "classify_bf",
    "is_decisive",
    "bf_display_value",
    "maruyama_george_gbf",
    "univariate_screen",
    "gbf_screen",
    "screen_to_csv",
    "screen_to_json",
]

DECISIVE_BF = 150.0
TWO_LOG_DECISIVE = 2.0 * math.log(DECISIVE_BF)


class Evidence(str, enum.Enum):
    """Evidence grade for twice the log Bayes factor.

    Below 2 a factor is barely worth mentioning; 2 to 6 is positive,
    6 to 10 strong, 10 and above very strong.
    """

    BARE_MENTION = "bare_mention"
    POSITIVE = "positive"
    STRONG = "strong"
    VERY_STRONG = "very_strong"


def null_based_bf(r_squared, g, n, p_gamma):
    """Log Bayes factor of a p_gamma-column model against the empty model.

    Computed in log space as
    ``(n - p - 1)/2 log(1+g) - (n - 1)/2 log(1 + g (1 - R^2))``
    where ``n`` counts stacked observations.  R-squared must be the
    uncentered statistic of the same model.
    """
    r2 = float(r_squared)
    if not math.isfinite(r2) or r2 < 0.0 or r2 > 1.0:
        raise InvalidR2("r_squared must lie in [0, 1], got %r" % r_squared)
    g = float(g)
    if not math.isfinite(g) or g <= 0.0:
        raise NonPositiveG("g must be finite and > 0, got %r" % g)
    n = int(n)
    p = int(p_gamma)
    if p < 1:
        raise ValidationError("p_gamma must be >= 1, got %d" % p)
    if n - p - 1 <= 0:
        raise DegenerateDf("evidence formula needs n > p + 1, got n=%d and p=%d" % (n, p))
    return 0.5 * (n - p - 1) * math.log1p(g) - 0.5 * (n - 1) * math.log1p(g * (1.0 - r2))


def classify_bf(two_log_bf):
    """Evidence grade for a value on the twice-log scale."""
    v = float(two_log_bf)
    if not math.isfinite(v):
        raise ValidationError("two_log_bf must be finite, got %r" % two_log_bf)
    if v >= 10.0:
        return Evidence.VERY_STRONG
    if v >= 6.0:
        return Evidence.STRONG
    if v >= 2.0:
        return Evidence.POSITIVE
    return Evidence.BARE_MENTION


def is_decisive(two_log_bf):
    """True when the Bayes factor itself exceeds ``DECISIVE_BF``."""
    return float(two_log_bf) > TWO_LOG_DECISIVE


def bf_display_value(log_bf):
    """Bayes factor on the natural scale, capped at 1e308 to stay finite."""
    if log_bf >= math.log(1e308):
        return 1e308
    return math.exp(log_bf)


def _log_beta_ratio(n, q):
    # log of B(1/4, (n-q)/2 - 3/4) / B(q/2 + 1/4, (n-q)/2 - 3/4)
    a2 = 0.5 * (n - q) - 0.75
    if a2 <= 0.0:
        raise DegenerateBeta("Beta argument (n-q)/2 - 3/4 must be > 0, got %r" % a2)
    return float(betaln(0.25, a2) - betaln(0.5 * q + 0.25, a2))


def maruyama_george_gbf(x, y):
    """Prior-free log evidence score built from the design's singular values.

    For designs with fewer columns than n - 1 the score combines the
    geometric mean of the singular values, the smallest singular value,
    the least-squares coefficient norm and uncentered R-squared.  Wider
    designs fall back to ``(1 - n) log(dbar * ||beta_mp||)`` with the
    minimum-norm coefficients.  Larger is stronger evidence for the model.
    """
    x, y = _as_design(x, y)
    n, q = x.shape
    if not x.any():
        raise ZeroDesign("design matrix is identically zero")
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    tol = max(n, q) * np.finfo(np.float64).eps * s[0]
    r = int(np.sum(s > tol))
    if r == 0:
        raise ZeroDesign("design matrix is numerically zero")
    log_dbar = float(np.mean(np.log(s[:r])))

    if q >= n - 1:
        beta_mp = vt[:r].T @ ((u[:, :r].T @ y) / s[:r])
        norm = float(np.sqrt(beta_mp @ beta_mp))
        if norm == 0.0:
            raise NumericalError("response is orthogonal to the design; evidence is unbounded")
        return (1.0 - n) * (log_dbar + math.log(norm))

    if r < q:
        raise SingularDesign("design has rank %d but %d columns" % (r, q))
    beta_ls = vt.T @ ((u.T @ y) / s)
    resid = y - x @ beta_ls
    yty = float(y @ y)
    if yty == 0.0:
        raise NumericalError("response is identically zero")
    r2 = 1.0 - float(resid @ resid) / yty
    r2 = min(max(r2, 0.0), 1.0)
    one_minus = 1.0 - r2
    if one_minus <= 0.0:
        raise NumericalError("perfect fit leaves the evidence unbounded")
    d_q = float(s[-1])
    norm2 = float(beta_ls @ beta_ls)
    return (
        log_dbar
        - math.log(d_q)
        - (0.25 + 0.5 * q) * math.log(one_minus + d_q * d_q * norm2)
        - _log_beta_ratio(n, q)
        - (0.5 * (n - q) - 0.75) * math.log(one_minus)
    )


@dataclass(frozen=True)
class BayesFactorReport:
    """One feature's evidence against the empty model."""

    rank: int
    feature_name: str
    feature_index: int
    log_bf: float
    two_log_bf: float
    bf_display: float
    evidence: Evidence
    decisive: bool
    g_used: float
    g_floored: bool
    r_squared: float

    def to_row(self):
        return {
            "rank": self.rank,
            "feature": self.feature_name,
            "two_log_bf": self.two_log_bf,
            "bf_display": self.bf_display,
            "evidence": self.evidence.value,
            "decisive": self.decisive,
            "g_used": self.g_used,
            "r_squared": self.r_squared,
        }


@dataclass(frozen=True)
class GbfReport:
    """One feature's prior-free evidence score."""

    rank: int
    feature_name: str
    feature_index: int
    log_gbf: float


@dataclass(frozen=True)
class ScreenResult:
    """Ranked per-feature reports plus features that could not be scored."""

    reports: tuple
    skipped: tuple

    @property
    def decisive_features(self):
        return tuple(r.feature_name for r in self.reports if r.decisive)


def _screen_worker(args):
    dataset, j, spec, y, n_obs, p_star = args
    name = dataset.feature_names[j]
    design = build_univariate_design(dataset, j)
    try:
        fit = ols_fit(design.x, y)
        g, floored = resolve_g(spec, design.x, y, default_n=dataset.n_subjects)
        log_bf = null_based_bf(fit.r_squared, g, n_obs, p_star)
    except (SingularDesign, UnderdeterminedSystem) as exc:
        return ("skip", name, j, "singular design: %s" % exc)
    except NumericalError as exc:
        return ("skip", name, j, str(exc))
    return ("ok", name, j, log_bf, g, floored, fit.r_squared)


def univariate_screen(dataset, spec):
    """Score every feature one at a time and rank by evidence.

    Each feature gets its own lagged-change design; its Bayes factor
    against the empty model uses the stacked-observation count, while the
    "sqrtn" g rule uses the subject count.  Features whose design cannot
    be fit are reported as skipped rather than failing the screen.
    Ranking is by descending two_log_bf with ties broken by feature order.
    """
    y = difference_response(dataset)
    n_obs = y.size
    steps = dataset.n_times - 1
    p_star = steps * (steps + 1) // 2
    tasks = [(dataset, j, spec, y, n_obs, p_star) for j in range(dataset.n_features)]
    workers = worker_count(len(tasks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_screen_worker, tasks))
    else:
        outcomes = [_screen_worker(t) for t in tasks]

    scored = []
    skipped = []
    for out in outcomes:
        if out[0] == "skip":
            skipped.append((out[1], out[3]))
            continue
        _, name, j, log_bf, g, floored, r2 = out
        scored.append((name, j, log_bf, g, floored, r2))
    scored.sort(key=lambda rec: (-2.0 * rec[2], rec[1]))
    reports = []
    for rank, (name, j, log_bf, g, floored, r2) in enumerate(scored, start=1):
        two = 2.0 * log_bf
        reports.append(
            BayesFactorReport(
                rank=rank,
                feature_name=name,
                feature_index=j,
                log_bf=log_bf,
                two_log_bf=two,
                bf_display=bf_display_value(log_bf),
                evidence=classify_bf(two),
                decisive=is_decisive(two),
                g_used=g,
                g_floored=floored,
                r_squared=r2,
            )
        )
    return ScreenResult(reports=tuple(reports), skipped=tuple(skipped))


def _gbf_worker(args):
    dataset, j, y = args
    name = dataset.feature_names[j]
    design = build_univariate_design(dataset, j)
    try:
        value = maruyama_george_gbf(design.x, y)
    except (ZeroDesign, SingularDesign, NumericalError, DegenerateBeta) as exc:
        return ("skip", name, j, str(exc))
    return ("ok", name, j, value)


def gbf_screen(dataset):
    """Rank features by the prior-free evidence score."""
    y = difference_response(dataset)
    tasks = [(dataset, j, y) for j in range(dataset.n_features)]
    workers = worker_count(len(tasks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_gbf_worker, tasks))
    else:
        outcomes = [_gbf_worker(t) for t in tasks]
    scored = []
    skipped = []
    for out in outcomes:
        if out[0] == "skip":
            skipped.append((out[1], out[3]))
        else:
            scored.append(out[1:])
    scored.sort(key=lambda rec: (-rec[2], rec[1]))
    reports = tuple(
        GbfReport(rank=i, feature_name=name, feature_index=j, log_gbf=val)
        for i, (name, j, val) in enumerate(scored, start=1)
    )
    return ScreenResult(reports=reports, skipped=tuple(skipped))


_CSV_COLUMNS = ("rank", "feature", "two_log_bf", "bf_display", "evidence", "decisive", "g_used", "r_squared")


def _format_cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def screen_to_csv(result, path):
    """Write ranked screen reports as CSV with a fixed column set.

    Floats are written with ``repr`` so repeated runs produce identical
    bytes.  Skipped features are not part of the table.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for report in result.reports:
            row = report.to_row()
            writer.writerow([_format_cell(row[c]) for c in _CSV_COLUMNS])
    return path


def screen_to_json(result, path):
    """Write screen reports and skipped features as JSON."""
    payload = {
        "reports": [r.to_row() for r in result.reports],
        "skipped": [{"feature": name, "reason": reason} for name, reason in result.skipped],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return path
