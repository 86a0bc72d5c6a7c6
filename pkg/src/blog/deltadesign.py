"""First-difference response and block-triangular lagged designs.

Modelling response changes instead of levels removes subject intercepts.
Each change is regressed on the current and all earlier feature changes,
which yields a block lower-triangular design: the k-th block row stacks
the first k feature-change columns for every subject.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import RankDeficientDesign, SingularCovariance, TooFewTimePoints

__all__ = [
    "DifferencedDesign",
    "difference_response",
    "build_univariate_design",
    "build_multivariate_design",
    "gls_equivalence_check",
]


@dataclass(frozen=True)
class DifferencedDesign:
    """Stacked response changes with their lagged-change design matrix.

    ``y`` has length n_subjects * (n_times - 1), ordered so that all
    subjects' first changes come before all second changes, and so on.
    ``x`` has one column block per feature; ``block_sizes[f]`` gives the
    width of feature f's block and ``feature_index[c]`` maps column c back
    to its feature.
    """

    y: np.ndarray
    x: np.ndarray
    block_sizes: tuple
    feature_index: tuple

    def __post_init__(self):
        y = np.ascontiguousarray(np.asarray(self.y, dtype=np.float64))
        x = np.ascontiguousarray(np.asarray(self.x, dtype=np.float64))
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "block_sizes", tuple(int(b) for b in self.block_sizes))
        object.__setattr__(self, "feature_index", tuple(int(i) for i in self.feature_index))
        if y.ndim != 1 or x.ndim != 2 or x.shape[0] != y.size:
            raise ValueError("y must be 1-D and x must have one row per element of y")
        if sum(self.block_sizes) != x.shape[1] or len(self.feature_index) != x.shape[1]:
            raise ValueError("block layout inconsistent with design width")
        y.setflags(write=False)
        x.setflags(write=False)

    @property
    def n_blocks(self):
        return len(self.block_sizes)


def _require_times(n_times):
    if n_times < 2:
        raise TooFewTimePoints("differencing needs at least 2 time points, got %d" % n_times)


def difference_response(dataset):
    """Stack within-subject response changes into one vector.

    Entry k * n + i is subject i's change from time k to k + 1, so the
    vector iterates subjects fastest and change index slowest.
    """
    _require_times(dataset.n_times)
    deltas = dataset.responses[:, 1:] - dataset.responses[:, :-1]
    return deltas.flatten(order="F")


def _lagged_block(dx):
    # dx: (n_subjects, n_times - 1) feature changes; returns the
    # block lower-triangular design (n (T-1), T (T-1) / 2).
    n, steps = dx.shape
    width = steps * (steps + 1) // 2
    block = np.zeros((n * steps, width))
    col = 0
    for k in range(1, steps + 1):
        rows = slice((k - 1) * n, k * n)
        block[rows, col : col + k] = dx[:, :k]
        col += k
    return block


def build_univariate_design(dataset, feature):
    """Design for one feature: response changes on its current and lagged changes.

    ``feature`` may be an integer index or a feature name.  With T time
    points the design has n (T-1) rows and T (T-1) / 2 columns.
    """
    _require_times(dataset.n_times)
    if isinstance(feature, str):
        try:
            feature = dataset.feature_names.index(feature)
        except ValueError:
            raise KeyError("unknown feature %r" % feature) from None
    feature = int(feature)
    dx = dataset.features[:, 1:, feature] - dataset.features[:, :-1, feature]
    x = _lagged_block(dx)
    return DifferencedDesign(
        y=difference_response(dataset),
        x=x,
        block_sizes=(x.shape[1],),
        feature_index=(feature,) * x.shape[1],
    )


def build_multivariate_design(dataset):
    """Joint design over all features, one lagged-change block per feature.

    Feature blocks are concatenated in feature order, giving
    p * T (T-1) / 2 columns overall.
    """
    _require_times(dataset.n_times)
    deltas = dataset.features[:, 1:, :] - dataset.features[:, :-1, :]
    blocks = [_lagged_block(deltas[:, :, j]) for j in range(dataset.n_features)]
    width = blocks[0].shape[1]
    x = np.hstack(blocks)
    index = tuple(j for j in range(dataset.n_features) for _ in range(width))
    return DifferencedDesign(
        y=difference_response(dataset),
        x=x,
        block_sizes=(width,) * dataset.n_features,
        feature_index=index,
    )


def _difference_operator(t):
    d = np.zeros((t - 1, t))
    idx = np.arange(t - 1)
    d[idx, idx] = -1.0
    d[idx, idx + 1] = 1.0
    return d


def gls_equivalence_check(x_level, sigma, y):
    """Compare two generalized least squares slope estimates that must agree.

    The first projects out an unknown intercept from the level model with
    noise covariance ``sigma``; the second differences the data first and
    uses the induced covariance of the differences.  Returns
    ``(slope_level, slope_diff, gap)`` where ``gap`` is the largest
    absolute disagreement.  The two are algebraically identical, so a gap
    above roundoff indicates a broken covariance or design.
    """
    x = np.atleast_2d(np.asarray(x_level, dtype=np.float64))
    sigma = np.asarray(sigma, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    t, k = x.shape
    _require_times(t)
    if sigma.shape != (t, t):
        raise SingularCovariance("covariance must be %d x %d, got %s" % (t, t, sigma.shape))
    if not np.allclose(sigma, sigma.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(sigma).max())):
        raise SingularCovariance("covariance is not symmetric")
    try:
        cho = scipy.linalg.cho_factor(sigma, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance("covariance is not positive definite: %s" % exc) from None

    ones = np.ones((t, 1))
    if np.linalg.matrix_rank(np.hstack([ones, x])) < k + 1:
        raise RankDeficientDesign("level design (with intercept) is rank deficient")

    sigma_inv = scipy.linalg.cho_solve(cho, np.eye(t))
    si_one = sigma_inv @ ones
    omega = sigma_inv - si_one @ si_one.T / float(si_one.sum())
    slope_level = np.linalg.solve(x.T @ omega @ x, x.T @ omega @ y)

    d = _difference_operator(t)
    m = d @ sigma @ d.T
    try:
        cho_m = scipy.linalg.cho_factor(m, lower=True)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance("differenced covariance is not positive definite: %s" % exc) from None
    psi = d.T @ scipy.linalg.cho_solve(cho_m, d)
    slope_diff = np.linalg.solve(x.T @ psi @ x, x.T @ psi @ y)

    gap = float(np.max(np.abs(slope_level - slope_diff)))
    return slope_level, slope_diff, gap
