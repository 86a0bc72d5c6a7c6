"""Group spike-and-slab sampler with an automatic penalty scale.

Coefficient groups share one size m.  Each group is either exactly zero
or drawn from a multivariate slab whose scale has a Gamma prior chosen so
that integrating it out yields a group-lasso penalty; the spike weight
has a Beta prior and the noise variance an inverse-gamma prior, improper
by default.  The penalty scale lambda is tuned by Monte Carlo EM rounds
before the final chain.  Selection is by the componentwise posterior
median, which is exactly zero for groups that spend most of the chain in
the spike, so the median doubles as a model selector.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._kernels import USING_NUMBA, gibbs_chain, gibbs_chain_python
from .errors import (
    DimensionMismatch,
    EmptyChain,
    NonConvergentSigma,
    NumericalError,
    ValidationError,
)

__all__ = [
    "GibbsConfig",
    "GibbsDraws",
    "ChainSummary",
    "run_gibbs",
    "mcem_lambda_update",
    "posterior_median_select",
    "save_beta_draws",
    "load_beta_draws",
    "USING_NUMBA",
]

_DUMP_MAGIC = b"BGLS"
_DUMP_VERSION = 1


@dataclass(frozen=True)
class GibbsConfig:
    """Chain lengths, priors and seeding for :func:`run_gibbs`.

    ``n_iter`` sweeps are run for the final chain and the first
    ``burn_in`` are discarded.  Before that, ``mcem_rounds`` chains of
    ``mcem_inner_iters`` sweeps each re-estimate the penalty scale from
    their second halves, warm-starting from ``lambda_init``; with
    ``lambda_per_group`` the EM update is applied to each group's scale
    draws separately instead of pooling them.  ``sigma2_shape`` and
    ``sigma2_rate`` default to zero, the improper variance prior.  The
    spike weight starts at its prior mean a/(a+b); with ``pi0_update``
    it is redrawn each sweep from its Beta conditional, otherwise it
    stays fixed there.  With ``standardize`` the design columns are
    scaled to unit Euclidean norm internally; columns are deliberately
    not centered because the differenced model has no intercept, so the
    response mean is signal, not nuisance.  Summaries are always
    reported on the original scale.
    """

    n_iter: int = 10000
    burn_in: int = 5000
    seed: int = 0
    pi0_beta_a: float = 1.0
    pi0_beta_b: float = 1.0
    pi0_update: bool = False
    lambda_init: float = 1.0
    lambda_per_group: bool = False
    mcem_rounds: int = 5
    mcem_inner_iters: int = 1000
    sigma2_shape: float = 0.0
    sigma2_rate: float = 0.0
    standardize: bool = True

    def __post_init__(self):
        if int(self.n_iter) < 1:
            raise ValidationError("n_iter must be >= 1")
        if not (0 <= int(self.burn_in) < int(self.n_iter)):
            raise ValidationError("burn_in must satisfy 0 <= burn_in < n_iter")
        if int(self.seed) < 0:
            raise ValidationError("seed must be a non-negative integer")
        if not (self.pi0_beta_a > 0.0 and self.pi0_beta_b > 0.0):
            raise ValidationError("spike-weight Beta parameters must be > 0")
        if not (self.lambda_init > 0.0):
            raise ValidationError("lambda_init must be > 0")
        if int(self.mcem_rounds) < 0:
            raise ValidationError("mcem_rounds must be >= 0")
        if int(self.mcem_rounds) > 0 and int(self.mcem_inner_iters) < 2:
            raise ValidationError("mcem_inner_iters must be >= 2 when mcem_rounds > 0")
        if self.sigma2_shape < 0.0 or self.sigma2_rate < 0.0:
            raise ValidationError("variance prior shape and rate must be >= 0")


@dataclass(frozen=True)
class GibbsDraws:
    """Retained draws of the final chain, coefficients on the original scale."""

    beta: np.ndarray
    tau2: np.ndarray
    sigma2: np.ndarray
    pi0: np.ndarray


@dataclass(frozen=True)
class ChainSummary:
    """Posterior summaries of one sampler run.

    ``group_medians`` has one row per group on the original coefficient
    scale; a group is ``selected`` when any of its medians is nonzero.
    ``inclusion_prop`` is the fraction of kept sweeps the group spent
    outside the spike.  ``lambda_trace`` has one row per EM round (plus
    the initial value) and one column per group; with pooled EM updates
    every column is identical.
    """

    group_medians: np.ndarray
    inclusion_prop: np.ndarray
    selected: np.ndarray
    lambda_trace: np.ndarray
    sigma2_mean: float
    sigma2_interval: tuple
    pi0_mean: float
    n_kept: int
    draws: Optional[GibbsDraws] = None


def _check_status(status):
    if status == 1:
        raise NonConvergentSigma("noise-variance chain left the positive reals")
    if status == 2:
        raise NumericalError("group covariance lost positive definiteness")


def run_gibbs(design, config=None, keep_draws=False):
    """Sample the group spike-and-slab posterior for a differenced design.

    All groups must share one size.  Runs the EM warm-up rounds, then the
    final chain, and summarizes the kept draws.  With ``keep_draws`` the
    summary carries the raw kept draws.  Deterministic for a fixed config:
    the random stream depends only on ``config.seed``.
    """
    config = config or GibbsConfig()
    x = np.asarray(design.x, dtype=np.float64)
    y = np.asarray(design.y, dtype=np.float64)
    block_sizes = tuple(design.block_sizes)
    if not block_sizes:
        raise DimensionMismatch("design has no coefficient groups")
    m = block_sizes[0]
    if any(b != m for b in block_sizes):
        raise DimensionMismatch("groups must share one size, got %s" % (set(block_sizes),))
    n_groups = len(block_sizes)
    p = n_groups * m
    if x.ndim != 2 or x.shape[1] != p:
        raise DimensionMismatch("design width %s does not match %d groups of size %d" % (x.shape, n_groups, m))
    n = y.size
    if x.shape[0] != n:
        raise DimensionMismatch("design has %d rows but response has %d entries" % (x.shape[0], n))

    y_work = y.copy()
    if config.standardize:
        scale = np.sqrt(np.einsum("ij,ij->j", x, x))
        scale[scale == 0.0] = 1.0
        x_work = x / scale
    else:
        x_work = x.copy()
        scale = np.ones(p)
    x_work = np.ascontiguousarray(x_work)

    xtx = np.empty((n_groups, m, m))
    for g in range(n_groups):
        xg = x_work[:, g * m : (g + 1) * m]
        xtx[g] = xg.T @ xg

    rng = np.random.default_rng([int(config.seed)])
    beta = np.zeros(p)
    resid = y_work.copy()
    tau2 = np.ones(n_groups)
    is_nz = np.zeros(n_groups, dtype=np.uint8)
    sigma2 = float(np.var(y_work))
    if sigma2 <= 0.0:
        sigma2 = 1.0
    pi0 = config.pi0_beta_a / (config.pi0_beta_a + config.pi0_beta_b)
    update_pi0 = 1 if config.pi0_update else 0
    lam = np.full(n_groups, float(config.lambda_init))
    trace = [lam.copy()]

    for _ in range(int(config.mcem_rounds)):
        inner = int(config.mcem_inner_iters)
        out = gibbs_chain(
            x_work, xtx, beta, resid, tau2, is_nz, n_groups, m,
            sigma2, pi0, lam, update_pi0, config.pi0_beta_a, config.pi0_beta_b,
            config.sigma2_shape, config.sigma2_rate, inner, inner // 2, rng,
        )
        _check_status(out[6])
        sigma2, pi0 = out[4], out[5]
        if config.lambda_per_group:
            for g in range(n_groups):
                lam[g] = mcem_lambda_update(out[1][:, g : g + 1], m, 1)
        else:
            lam[:] = mcem_lambda_update(out[1], p, n_groups)
        trace.append(lam.copy())

    out = gibbs_chain(
        x_work, xtx, beta, resid, tau2, is_nz, n_groups, m,
        sigma2, pi0, lam, update_pi0, config.pi0_beta_a, config.pi0_beta_b,
        config.sigma2_shape, config.sigma2_rate,
        int(config.n_iter), int(config.burn_in), rng,
    )
    _check_status(out[6])
    beta_draws, tau2_draws, sigma2_draws, pi0_draws = out[0], out[1], out[2], out[3]

    medians_scaled = np.median(beta_draws, axis=0)
    group_medians = (medians_scaled / scale).reshape(n_groups, m)
    in_slab = np.any(beta_draws.reshape(-1, n_groups, m) != 0.0, axis=2)
    inclusion = in_slab.mean(axis=0)
    selected = np.any(group_medians != 0.0, axis=1)

    draws = None
    if keep_draws:
        draws = GibbsDraws(
            beta=beta_draws / scale,
            tau2=tau2_draws,
            sigma2=sigma2_draws,
            pi0=pi0_draws,
        )
    lo, hi = np.percentile(sigma2_draws, [2.5, 97.5])
    return ChainSummary(
        group_medians=group_medians,
        inclusion_prop=inclusion,
        selected=selected,
        lambda_trace=np.asarray(trace),
        sigma2_mean=float(sigma2_draws.mean()),
        sigma2_interval=(float(lo), float(hi)),
        pi0_mean=float(pi0_draws.mean()),
        n_kept=beta_draws.shape[0],
        draws=draws,
    )


def mcem_lambda_update(tau2_samples, n_coeffs, n_groups):
    """EM update of the penalty scale from group-scale draws.

    Maximizing the expected complete-data likelihood of the Gamma prior
    gives ``lambda = sqrt((n_coeffs + n_groups) / sum_g mean(tau2_g))``
    where ``n_coeffs`` counts scalar coefficients across all groups.
    """
    arr = np.asarray(tau2_samples, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError("tau2_samples must be 2-D (draws, groups)")
    if arr.shape[0] == 0:
        raise EmptyChain("no retained scale draws")
    if arr.shape[1] != int(n_groups):
        raise DimensionMismatch("tau2_samples has %d groups, expected %d" % (arr.shape[1], n_groups))
    if not (arr > 0.0).all():
        raise ValidationError("scale draws must all be positive")
    total = float(arr.mean(axis=0).sum())
    return math.sqrt((int(n_coeffs) + int(n_groups)) / total)


def posterior_median_select(beta_draws, block_sizes):
    """Componentwise posterior medians and the induced group selection.

    Returns ``(group_medians, selected)``.  A group's median row is
    exactly zero whenever more than half of the draws sit in the spike,
    so ``selected`` is ``any(median != 0)`` per group with no threshold.
    """
    arr = np.asarray(beta_draws, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError("beta_draws must be 2-D (draws, coefficients)")
    if arr.shape[0] == 0:
        raise EmptyChain("no retained coefficient draws")
    block_sizes = tuple(int(b) for b in block_sizes)
    if not block_sizes or any(b != block_sizes[0] for b in block_sizes):
        raise DimensionMismatch("groups must share one positive size")
    m = block_sizes[0]
    if m < 1 or len(block_sizes) * m != arr.shape[1]:
        raise DimensionMismatch(
            "draw width %d does not match %d groups of size %d" % (arr.shape[1], len(block_sizes), m)
        )
    medians = np.median(arr, axis=0).reshape(len(block_sizes), m)
    selected = np.any(medians != 0.0, axis=1)
    return medians, selected


def save_beta_draws(beta_draws, path):
    """Write a coefficient draw matrix as little-endian float64 with a header.

    Layout: 4 magic bytes "BGLS", uint16 version, uint16 reserved, uint32
    row count, uint32 column count, then rows * cols values row-major.
    """
    arr = np.ascontiguousarray(np.asarray(beta_draws, dtype=np.float64))
    if arr.ndim != 2:
        raise ValidationError("draw dump expects a 2-D array")
    header = struct.pack("<4sHHII", _DUMP_MAGIC, _DUMP_VERSION, 0, arr.shape[0], arr.shape[1])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.astype("<f8", copy=False).tobytes())
    return path


def load_beta_draws(path):
    """Read a draw matrix written by :func:`save_beta_draws`."""
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16:
            raise ValidationError("draw dump too short for its header")
        magic, version, _, rows, cols = struct.unpack("<4sHHII", header)
        if magic != _DUMP_MAGIC:
            raise ValidationError("not a draw dump (bad magic bytes)")
        if version != _DUMP_VERSION:
            raise ValidationError("unsupported draw dump version %d" % version)
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != rows * cols:
        raise ValidationError("draw dump payload size does not match its header")
    return data.reshape(rows, cols).astype(np.float64)
