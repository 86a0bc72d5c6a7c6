"""Gibbs kernel for the group spike-and-slab sampler.

One function holds the whole update sweep, written with explicit scalar
loops so the compiled and interpreted paths perform identical arithmetic
and consume the random stream identically.  When numba is available and
the BLOG_NO_NUMBA environment variable is unset, ``gibbs_chain`` is the
compiled version; ``gibbs_chain_python`` is always the interpreted one.
The compiled kernel releases the GIL, so independent chains can run on
worker threads.
"""

import os

import numpy as np

__all__ = ["gibbs_chain", "gibbs_chain_python", "USING_NUMBA"]


def gibbs_chain_python(x, xtx, beta, resid, tau2, is_nz, n_groups, m,
                       sigma2, pi0, lam, update_pi0, a_pi, b_pi,
                       a_sig, b_sig, n_iter, keep_from, rng):
    """Run ``n_iter`` sweeps, keeping draws from iteration ``keep_from`` on.

    ``beta``, ``resid``, ``tau2`` and ``is_nz`` carry the chain state and
    are updated in place; ``xtx`` holds per-group cross products with
    shape (n_groups, m, m); ``lam`` holds one penalty scale per group.
    When ``update_pi0`` is zero the spike weight stays at its initial
    value instead of being redrawn from its Beta conditional.  Returns
    kept draws of beta, tau2, sigma2 and pi0 plus the final sigma2 and
    pi0 and a status code: 0 for success, 1 when the variance chain left
    the positive reals, 2 when a group covariance lost positive
    definiteness.
    """
    n = resid.shape[0]
    p = beta.shape[0]
    n_keep = n_iter - keep_from
    beta_draws = np.empty((n_keep, p))
    tau2_draws = np.empty((n_keep, n_groups))
    sigma2_draws = np.empty(n_keep)
    pi0_draws = np.empty(n_keep)
    a_mat = np.empty((m, m))
    bvec = np.empty(m)
    w = np.empty(m)
    mu = np.empty(m)
    z = np.empty(m)
    v = np.empty(m)
    rfull = np.empty(n)
    status = 0
    kept = 0

    for it in range(n_iter):
        for g in range(n_groups):
            c0 = g * m
            # residual with this group's contribution restored
            if is_nz[g] == 1:
                for i in range(n):
                    acc = 0.0
                    for j in range(m):
                        acc += x[i, c0 + j] * beta[c0 + j]
                    rfull[i] = resid[i] + acc
            else:
                for i in range(n):
                    rfull[i] = resid[i]
            for j in range(m):
                acc = 0.0
                for i in range(n):
                    acc += x[i, c0 + j] * rfull[i]
                bvec[j] = acc
            inv_t = 1.0 / tau2[g]
            for j in range(m):
                for k in range(j + 1):
                    a_mat[j, k] = xtx[g, j, k]
                a_mat[j, j] += inv_t
            # lower Cholesky in place; only the lower triangle is used
            half_logdet = 0.0
            ok = True
            for j in range(m):
                acc = a_mat[j, j]
                for k in range(j):
                    acc -= a_mat[j, k] * a_mat[j, k]
                if acc <= 0.0:
                    ok = False
                    break
                d = np.sqrt(acc)
                a_mat[j, j] = d
                half_logdet += np.log(d)
                for r in range(j + 1, m):
                    acc = a_mat[r, j]
                    for k in range(j):
                        acc -= a_mat[r, k] * a_mat[j, k]
                    a_mat[r, j] = acc / d
            if not ok:
                status = 2
                break
            # w = L^-1 b, so w'w = b' A^-1 b
            quad = 0.0
            for j in range(m):
                acc = bvec[j]
                for k in range(j):
                    acc -= a_mat[j, k] * w[k]
                w[j] = acc / a_mat[j, j]
                quad += w[j] * w[j]
            log_odds = (np.log(1.0 - pi0) - np.log(pi0)
                        - 0.5 * m * np.log(tau2[g])
                        - half_logdet
                        + 0.5 * quad / sigma2)
            if log_odds >= 0.0:
                e = np.exp(-log_odds)
                p_zero = e / (1.0 + e)
            else:
                p_zero = 1.0 / (1.0 + np.exp(log_odds))
            u = rng.random()
            if u < p_zero:
                if is_nz[g] == 1:
                    for i in range(n):
                        resid[i] = rfull[i]
                for j in range(m):
                    beta[c0 + j] = 0.0
                is_nz[g] = 0
            else:
                for j in range(m):
                    z[j] = rng.standard_normal()
                # mean solves L' mu = w, noise solves L' v = z
                for j in range(m - 1, -1, -1):
                    acc = w[j]
                    for k in range(j + 1, m):
                        acc -= a_mat[k, j] * mu[k]
                    mu[j] = acc / a_mat[j, j]
                for j in range(m - 1, -1, -1):
                    acc = z[j]
                    for k in range(j + 1, m):
                        acc -= a_mat[k, j] * v[k]
                    v[j] = acc / a_mat[j, j]
                sig = np.sqrt(sigma2)
                for j in range(m):
                    beta[c0 + j] = mu[j] + sig * v[j]
                for i in range(n):
                    acc = 0.0
                    for j in range(m):
                        acc += x[i, c0 + j] * beta[c0 + j]
                    resid[i] = rfull[i] - acc
                is_nz[g] = 1
        if status != 0:
            break

        for g in range(n_groups):
            c0 = g * m
            lam_g = lam[g]
            if is_nz[g] == 1:
                norm2 = 0.0
                for j in range(m):
                    norm2 += beta[c0 + j] * beta[c0 + j]
                mean_ig = lam_g * np.sqrt(sigma2 / norm2)
                inv_draw = rng.wald(mean_ig, lam_g * lam_g)
                tau2[g] = 1.0 / inv_draw
            else:
                tau2[g] = rng.gamma(0.5 * (m + 1.0), 2.0 / (lam_g * lam_g))

        rss = 0.0
        for i in range(n):
            rss += resid[i] * resid[i]
        shape = a_sig + 0.5 * n
        rate = b_sig + 0.5 * rss
        for g in range(n_groups):
            if is_nz[g] == 1:
                c0 = g * m
                norm2 = 0.0
                for j in range(m):
                    norm2 += beta[c0 + j] * beta[c0 + j]
                shape += 0.5 * m
                rate += 0.5 * norm2 / tau2[g]
        sigma2 = 1.0 / rng.gamma(shape, 1.0 / rate)
        if not np.isfinite(sigma2) or sigma2 <= 0.0:
            status = 1
            break

        if update_pi0 != 0:
            n_zero = 0
            for g in range(n_groups):
                if is_nz[g] == 0:
                    n_zero += 1
            pi0 = rng.beta(a_pi + n_zero, b_pi + (n_groups - n_zero))
            if pi0 < 1e-12:
                pi0 = 1e-12
            elif pi0 > 1.0 - 1e-12:
                pi0 = 1.0 - 1e-12

        if it >= keep_from:
            for j in range(p):
                beta_draws[kept, j] = beta[j]
            for g in range(n_groups):
                tau2_draws[kept, g] = tau2[g]
            sigma2_draws[kept] = sigma2
            pi0_draws[kept] = pi0
            kept += 1

    return beta_draws, tau2_draws, sigma2_draws, pi0_draws, sigma2, pi0, status


USING_NUMBA = False
gibbs_chain = gibbs_chain_python

if not os.environ.get("BLOG_NO_NUMBA"):
    try:
        from numba import njit
    except ImportError:
        pass
    else:
        gibbs_chain = njit(cache=True, nogil=True)(gibbs_chain_python)
        USING_NUMBA = True
