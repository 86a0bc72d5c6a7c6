"""Shared oracles for the test suite.

Everything here recomputes expected values through routes independent of
the package: brute-force tensor quadrature for posterior densities,
high-precision mpmath arithmetic for evidence formulas, and direct prior
sampling for the sampler calibration check.  Oracles verify their own
accuracy where they can (quadrature runs twice at different resolutions
and must agree before its value is trusted).
"""

import math

import numpy as np
from mpmath import mp
from scipy.special import gammaln, logsumexp


# ---------------------------------------------------------------------------
# joint density and quadrature normalizer for the conjugate linear model


def log_joint_density(beta, sigma2, x, y, beta0, v0, a, b):
    """Log of likelihood times prior at one point, from first principles.

    Likelihood: y | beta, sigma2 ~ N(x beta, sigma2 I).
    Prior: beta | sigma2 ~ N(beta0, sigma2 v0), sigma2 ~ InvGamma(a, b).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    beta0 = np.asarray(beta0, dtype=np.float64)
    v0 = np.asarray(v0, dtype=np.float64)
    n, k = x.shape
    resid = y - x @ beta
    diff = beta - beta0
    v0_inv = np.linalg.inv(v0)
    sign, logdet_v0 = np.linalg.slogdet(v0)
    assert sign > 0
    quad = float(resid @ resid) + float(diff @ (v0_inv @ diff))
    return (
        -0.5 * (n + k) * math.log(2.0 * math.pi * sigma2)
        - 0.5 * logdet_v0
        + a * math.log(b)
        - float(gammaln(a))
        - (a + 1.0) * math.log(sigma2)
        - (quad / 2.0 + b) / sigma2
    )


def _leggauss_scaled(order, lo, hi):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (hi - lo)
    return lo + half * (nodes + 1.0), half * weights


def _log_evidence_once(x, y, beta0, v0, a, b, s_order, b_order, sd_mult):
    """One tensor-quadrature pass over (beta, log sigma2).

    The center and scale of the integration boxes come from a plain
    least-squares solve; they only steer node placement, never the value.
    """
    n, k = x.shape
    v0_inv = np.linalg.inv(v0)
    m_mat = x.T @ x + v0_inv
    center = np.linalg.solve(m_mat, x.T @ y + v0_inv @ beta0)
    cond_sd = np.sqrt(np.diag(np.linalg.inv(m_mat)))
    resid0 = y - x @ center
    diff0 = center - beta0
    rate_rough = b + 0.5 * (float(resid0 @ resid0) + float(diff0 @ (v0_inv @ diff0))) + 1e-8

    s_lo = math.log(rate_rough) - 10.0
    s_hi = math.log(rate_rough) + 6.0
    s_nodes, s_weights = _leggauss_scaled(s_order, s_lo, s_hi)

    c_e = 0.5 * (n + k) + a + 1.0
    sign, logdet_v0 = np.linalg.slogdet(v0)
    assert sign > 0
    const = (
        -0.5 * (n + k) * math.log(2.0 * math.pi)
        - 0.5 * logdet_v0
        + a * math.log(b)
        - float(gammaln(a))
    )

    pieces = np.empty(s_order)
    for i, s in enumerate(s_nodes):
        sigma = math.exp(0.5 * s)
        half = sd_mult * sigma * cond_sd + 1e-9
        b1, w1 = _leggauss_scaled(b_order, center[0] - half[0], center[0] + half[0])
        b2, w2 = _leggauss_scaled(b_order, center[1] - half[1], center[1] + half[1])
        bb1, bb2 = np.meshgrid(b1, b2, indexing="ij")
        betas = np.stack([bb1.ravel(), bb2.ravel()], axis=1)
        resid = y[None, :] - betas @ x.T
        diffs = betas - beta0[None, :]
        quad = np.einsum("ij,ij->i", resid, resid) + np.einsum(
            "ij,jk,ik->i", diffs, v0_inv, diffs
        )
        logw = np.log(np.outer(w1, w2)).ravel()
        log_vals = -(0.5 * quad + b) * math.exp(-s) + logw
        # the +s term is the Jacobian of sigma2 = exp(s)
        pieces[i] = logsumexp(log_vals) + (1.0 - c_e) * s + math.log(s_weights[i])
    return const + float(logsumexp(pieces))


def nig_log_evidence_quadrature(x, y, beta0, v0, a, b):
    """Log normalizer of likelihood times prior, by brute-force quadrature.

    Runs at two resolutions and box sizes; the results must agree to
    1e-8 before either is trusted.
    """
    za = _log_evidence_once(x, y, beta0, v0, a, b, s_order=100, b_order=70, sd_mult=10.0)
    zb = _log_evidence_once(x, y, beta0, v0, a, b, s_order=150, b_order=100, sd_mult=14.0)
    assert abs(za - zb) < 1e-8, "quadrature self-check failed: %r vs %r" % (za, zb)
    return zb


# ---------------------------------------------------------------------------
# high-precision references for evidence formulas


def evidence_log_bf_reference(r2, g, n, p, dps=50):
    """Evidence formula evaluated in mpmath at ``dps`` digits."""
    with mp.workdps(dps):
        r2m, gm = mp.mpf(repr(float(r2))), mp.mpf(repr(float(g)))
        val = mp.mpf(n - p - 1) / 2 * mp.log1p(gm) - mp.mpf(n - 1) / 2 * mp.log1p(
            gm * (1 - r2m)
        )
        return float(val)


def sv_score_reference(x, y, dps=60):
    """Singular-value evidence score recomputed entirely in mpmath."""
    with mp.workdps(dps):
        xm = mp.matrix([[mp.mpf(repr(float(v))) for v in row] for row in np.asarray(x)])
        ym = mp.matrix([mp.mpf(repr(float(v))) for v in np.asarray(y).ravel()])
        n, q = xm.rows, xm.cols
        u, s, vt = mp.svd(xm)
        svals = [s[i] for i in range(s.rows)]
        tol = max(n, q) * mp.mpf(np.finfo(np.float64).eps) * svals[0]
        r = sum(1 for v in svals if v > tol)
        log_dbar = mp.fsum(mp.log(v) for v in svals[:r]) / r

        if q >= n - 1:
            # minimum-norm coefficients via the reduced factors
            uty = (u.T * ym)
            coef = mp.zeros(q, 1)
            for i in range(r):
                scale = uty[i] / svals[i]
                for j in range(q):
                    coef[j] += vt[i, j] * scale
            norm = mp.sqrt(mp.fsum(coef[j] ** 2 for j in range(q)))
            return float((1 - n) * (log_dbar + mp.log(norm)))

        assert r == q
        coef = mp.zeros(q, 1)
        uty = (u.T * ym)
        for i in range(q):
            scale = uty[i] / svals[i]
            for j in range(q):
                coef[j] += vt[i, j] * scale
        fitted = xm * coef
        rss = mp.fsum((ym[i] - fitted[i]) ** 2 for i in range(n))
        yty = mp.fsum(ym[i] ** 2 for i in range(n))
        one_minus = rss / yty
        d_q = svals[-1]
        norm2 = mp.fsum(coef[j] ** 2 for j in range(q))
        a2 = mp.mpf(n - q) / 2 - mp.mpf(3) / 4
        log_beta_ratio = (
            mp.log(mp.beta(mp.mpf(1) / 4, a2)) - mp.log(mp.beta(mp.mpf(q) / 2 + mp.mpf(1) / 4, a2))
        )
        val = (
            log_dbar
            - mp.log(d_q)
            - (mp.mpf(1) / 4 + mp.mpf(q) / 2) * mp.log(one_minus + d_q ** 2 * norm2)
            - log_beta_ratio
            - a2 * mp.log(one_minus)
        )
        return float(val)


# ---------------------------------------------------------------------------
# prior sampling for the sampler calibration check


def draw_parameters_from_prior(rng, n_groups, m, lam, a_pi, b_pi, s2_shape, s2_rate):
    """One joint draw of (beta, tau2, sigma2, pi0) from the sampler's prior."""
    pi0 = rng.beta(a_pi, b_pi)
    sigma2 = 1.0 / rng.gamma(s2_shape, 1.0 / s2_rate)
    tau2 = rng.gamma(0.5 * (m + 1.0), 2.0 / (lam * lam), n_groups)
    beta = np.zeros(n_groups * m)
    for g in range(n_groups):
        if rng.random() >= pi0:
            beta[g * m : (g + 1) * m] = rng.normal(0.0, math.sqrt(sigma2 * tau2[g]), m)
    return beta, tau2, sigma2, pi0


def draw_response(rng, x, beta, sigma2):
    return x @ beta + math.sqrt(sigma2) * rng.standard_normal(x.shape[0])


# ---------------------------------------------------------------------------
# misc


def random_spd(rng, t, jitter=0.5):
    """Random symmetric positive definite matrix of size t."""
    a = rng.standard_normal((t, t))
    return a @ a.T + jitter * np.eye(t)


def confusion_rates(selected, target_indices, n_features):
    """Brute-force confusion-matrix FPR/TPR over explicit index sets."""
    chosen = set(int(j) for j in selected)
    targets = set(int(j) for j in target_indices)
    tp = fp = tn = fn = 0
    for j in range(n_features):
        if j in targets:
            if j in chosen:
                tp += 1
            else:
                fn += 1
        else:
            if j in chosen:
                fp += 1
            else:
                tn += 1
    fpr = fp / (fp + tn) if (fp + tn) > 0 else 0.0
    tpr = tp / (tp + fn) if (tp + fn) > 0 else 0.0
    return fpr, tpr
