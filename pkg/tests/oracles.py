"""Independent reference implementations used to freeze expected values.

Everything here is deliberately naive (dense inverses, scalar loops,
bisection) and shares no code path with the library under test.
"""

import math

import numpy as np


def dense_kernel(family, lengthscale, output_scale, A, B):
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    out = np.zeros((A.shape[0], B.shape[0]))
    for i in range(A.shape[0]):
        for j in range(B.shape[0]):
            r = np.linalg.norm(A[i] - B[j]) / lengthscale
            if family == "squared_exponential":
                rho = math.exp(-0.5 * r * r)
            else:
                s = math.sqrt(5.0) * r
                rho = (1.0 + s + s * s / 3.0) * math.exp(-s)
            out[i, j] = output_scale * rho
    return out


def dense_posterior(family, lengthscale, output_scale, X, y, noise, Q):
    """Posterior mean/variance/covariance by explicit matrix inversion."""
    K = dense_kernel(family, lengthscale, output_scale, X, X)
    A = np.linalg.inv(K + noise * np.eye(len(X)))
    Ks = dense_kernel(family, lengthscale, output_scale, X, Q)
    Kss = dense_kernel(family, lengthscale, output_scale, Q, Q)
    mean = Ks.T @ A @ y
    cov = Kss - Ks.T @ A @ Ks
    return mean, np.diag(cov).copy(), cov


def dense_log_evidence(family, lengthscale, output_scale, X, y, noise):
    K = dense_kernel(family, lengthscale, output_scale, X, X)
    C = K + noise * np.eye(len(X))
    sign, logdet = np.linalg.slogdet(C)
    assert sign > 0
    quad = y @ np.linalg.inv(C) @ y
    return -0.5 * (quad + logdet + len(X) * math.log(2.0 * math.pi))


def erf_normal_cdf(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def bisect_normal_quantile(p, lo=-12.0, hi=12.0, tol=1e-12):
    """Inverse standard normal CDF by bisection on an erf-based CDF."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if erf_normal_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def loop_violation(g_values, threshold):
    safe = 0
    total = 0.0
    for g in g_values:
        if g >= threshold:
            safe += 1
        if g < threshold:
            total += threshold - g
    return safe / len(g_values), total


def transition_table_update(
    length, c_s, c_f, success, tau_s, tau_f, l_0, l_min, l_max
):
    """Line-by-line transcription of the trust-region update rules."""
    if success:
        c_s = c_s + 1
        c_f = 0
    else:
        c_s = 0
        c_f = c_f + 1
    if c_s == tau_s:
        length = min(2.0 * length, l_max)
        c_s, c_f = 0, 0
    elif c_f == tau_f:
        length = max(0.5 * length, l_min)
        c_s, c_f = 0, 0
        if length == l_min:
            length = l_0
    return length, c_s, c_f
