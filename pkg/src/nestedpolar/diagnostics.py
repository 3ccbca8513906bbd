"""Exact small-N distribution diagnostics.

For N <= 8 the gap between the true model law P and the law Q induced by
the coding scheme (uniform shared frozen values, class-restricted sampling)
is computable by full enumeration.  Writing the scheme's per-index rule as

    Q(v_i | past) = (1/n_anchors) * P(v_i | past) / P(allowed class | past),

the ratio Q/P telescopes over prefixes, so one pass over prefix marginals
and class-weighted sums per observation pair yields the exact total
variation; it is exactly zero when every index is sampled over the full
group (n_anchors = 1), which is the fully-sampled sanity case.
"""

from __future__ import annotations

import numpy as np

from .errors import SynthesisSizeError
from .polar import likelihood_table, polar_transform

ENUMERATION_CELL_BOUND = 10 ** 8
PAIR_CHUNK = 2048


def _all_words(radix: int, length: int) -> np.ndarray:
    """(radix**length, length) enumeration, first position most significant."""
    idx = np.arange(radix ** length)
    return np.stack(np.unravel_index(idx, (radix,) * length), axis=1)


def _scheme_tv_batch(group, kernels, lik) -> np.ndarray:
    """Per-pair total variation between true and scheme-sampled v-laws.

    lik: (pairs, N, q) per-symbol likelihoods of one observation pair each.
    kernels: per index (n_anchors, relation matrix R) from the construction.
    """
    P_, N, q = lik.shape
    allv = _all_words(q, N)
    s = polar_transform(group, allv)
    p = np.ones((P_, q ** N))
    for j in range(N):
        p = p * lik[:, j, s[:, j]]
    tot = p.sum(axis=1)
    ok = tot > 0
    # prefix marginals: margins[i] has shape (pairs, q**(i+1))
    margins = [p]
    for _ in range(N - 1):
        margins.append(margins[-1].reshape(P_, -1, q).sum(axis=2))
    margins.reverse()
    acc = np.ones((P_, 1))
    prev = tot[:, None]
    for i in range(N):
        n_anchor, rel = kernels[i]
        m = margins[i].reshape(P_, -1, q)
        c = np.einsum("pab,cb->pac", m, rel.astype(np.float64))
        num = acc[:, :, None] * prev[:, :, None] / n_anchor
        acc = np.divide(num, c, out=np.zeros_like(c), where=c > 0)
        acc = acc.reshape(P_, -1)
        prev = margins[i]
    dev = np.abs(1.0 - acc) * p
    tv = np.zeros(P_)
    tv[ok] = 0.5 * dev[ok].sum(axis=1) / tot[ok]
    return tv


def _check_size(pairs: int, q: int, N: int):
    cells = pairs * (q ** N)
    if cells > ENUMERATION_CELL_BOUND:
        raise SynthesisSizeError(
            f"exact TV enumeration needs {cells} cells > bound "
            f"{ENUMERATION_CELL_BOUND}")


def exact_total_variation_source(code) -> float:
    """Exact ||P - Q|| over (v, x, z) for a SourceCode, N <= 8 scale.

    P: v uniform, (x, u) i.i.d. from the joint, z = vG + u.  Q: x from the
    source, z uniform, v by class-restricted sampling with uniform frozen
    values.  Both share the (x, z) marginal, so the TV is the weighted
    average of per-pair conditional TVs.
    """
    group = code.group
    q = group.order
    N = code.N
    x_size = code.joint.x_size
    _check_size(x_size ** N * q ** N, q, N)
    kernels = [code.construction.encoder_kernel(i) for i in range(N)]
    p_x = code.joint.x_marginal()
    all_z = _all_words(q, N)
    total = 0.0
    x_words = _all_words(x_size, N)
    x_weights = np.prod(p_x[x_words], axis=1)
    z_count = q ** N
    chunk_x = max(1, PAIR_CHUNK // z_count)
    for start in range(0, len(x_words), chunk_x):
        xs = x_words[start:start + chunk_x]
        ws = x_weights[start:start + chunk_x]
        if not np.any(ws > 0):
            continue
        # pair grid: every x in the chunk against every z
        obs = (xs[:, None, :] * q + all_z[None, :, :]).reshape(-1, N)
        lik = likelihood_table(code.w_s, obs)
        tv = _scheme_tv_batch(group, kernels, lik).reshape(len(xs), z_count)
        total += float((ws[:, None] * tv).sum()) / z_count
    return total


def exact_total_variation_channel(code) -> float:
    """Exact ||P - Q|| over (v, z) for a ChannelCode, N <= 8 scale.

    P: v uniform, z = vG + x with x i.i.d. p_X.  Q: z uniform, v by
    class-restricted sampling (uniform frozen values, uniform messages).
    The z marginal is uniform under both.
    """
    group = code.group
    q = group.order
    N = code.N
    _check_size(q ** N, q, N)
    kernels = [code.construction.encoder_kernel(i) for i in range(N)]
    all_z = _all_words(q, N)
    total = 0.0
    for start in range(0, len(all_z), PAIR_CHUNK):
        zs = all_z[start:start + PAIR_CHUNK]
        lik = likelihood_table(code.w_s, zs)
        total += float(_scheme_tv_batch(group, kernels, lik).sum())
    return total / (q ** N)
