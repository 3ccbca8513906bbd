"""Alternating-minimization oracles for R(D) and channel capacity.

Both are the classical Blahut-Arimoto iterations, run in nats internally and
converged to a stated tolerance; they provide the reference values the
experiment sweeps and acceptance checks compare against.
"""

from __future__ import annotations

import numpy as np

LN2 = float(np.log(2.0))


def channel_capacity(probs, tol=1e-9, max_iter=200000):
    """Capacity of a DMC in bits and the maximizing input law.

    ``probs`` is any row-stochastic matrix (rows = inputs).  Iterates until
    the standard upper/lower capacity bounds differ by less than ``tol``
    (in bits).
    """
    W = np.asarray(probs, dtype=np.float64)
    k, M = W.shape
    p = np.full(k, 1.0 / k)
    logW = np.where(W > 0, np.log(np.where(W > 0, W, 1.0)), 0.0)
    for _ in range(max_iter):
        qy = p @ W
        with np.errstate(divide="ignore"):
            logq = np.where(qy > 0, np.log(np.where(qy > 0, qy, 1.0)), 0.0)
        d = (W * (logW - logq)).sum(axis=1)  # per-input divergence, nats
        upper = d.max()
        lower = np.log(np.exp(d - upper) @ p) + upper
        if upper - lower < tol * LN2:
            return float(lower / LN2), p
        p = p * np.exp(d - upper)
        p /= p.sum()
    raise RuntimeError("capacity iteration did not converge")


def rate_distortion(p_x, dist, target_d, tol=1e-9, max_iter=200000):
    """R(D) point in bits for source law ``p_x`` and distortion matrix ``dist``.

    Bisects the Lagrange slope and runs the inner alternating minimization to
    ``tol``.  Returns (rate_bits, achieved_distortion, conditional p(u|x)).
    """
    p_x = np.asarray(p_x, dtype=np.float64)
    dist = np.asarray(dist, dtype=np.float64)
    if dist.shape[0] != p_x.shape[0]:
        raise ValueError("distortion matrix rows must match source alphabet")
    d_zero_rate = float(np.min(p_x @ dist))  # best single reconstruction
    if target_d >= d_zero_rate - 1e-15:
        u_star = int(np.argmin(p_x @ dist))
        cond = np.zeros_like(dist)
        cond[:, u_star] = 1.0
        return 0.0, d_zero_rate, cond

    def solve(beta):
        qu = np.full(dist.shape[1], 1.0 / dist.shape[1])
        ker = np.exp(-beta * dist)
        prev = None
        for _ in range(max_iter):
            cond = qu[None, :] * ker
            norm = cond.sum(axis=1, keepdims=True)
            cond /= norm
            qu = p_x @ cond
            cur = float(p_x @ np.log(norm[:, 0]))
            if prev is not None and abs(cur - prev) < tol * 1e-2:
                break
            prev = cur
        d_val = float((p_x[:, None] * cond * dist).sum())
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(cond > 0, cond / np.where(qu[None, :] > 0, qu, 1.0), 1.0)
            rate = float((p_x[:, None] * cond * np.log(np.where(cond > 0, ratio, 1.0))).sum())
        return rate / LN2, d_val, cond

    lo, hi = 0.0, 1.0
    while True:
        rate, d_val, cond = solve(hi)
        if d_val <= target_d or hi > 1e7:
            break
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        rate, d_val, cond = solve(mid)
        if d_val > target_d:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * max(1.0, hi):
            break
    rate, d_val, cond = solve(hi)
    return rate, d_val, cond


def hamming_distortion(x_size, u_size=None):
    u_size = x_size if u_size is None else u_size
    d = np.ones((x_size, u_size))
    np.fill_diagonal(d, 0.0)
    return d


def binary_entropy(p: float) -> float:
    if p <= 0 or p >= 1:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))
