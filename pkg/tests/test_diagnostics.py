"""Exact sampled-vs-true total variation, cross-checked by enumeration."""

import numpy as np
import pytest

from nestedpolar.channel import build_channel_code
from nestedpolar.diagnostics import (exact_total_variation_channel,
                                     exact_total_variation_source)
from nestedpolar.dmc import bsc, dsbs, joint_from_forward
from nestedpolar.groups import FiniteAbelianGroup
from nestedpolar.lossy import build_source_code
from nestedpolar.polar import likelihood_table, polar_transform

G2 = FiniteAbelianGroup((2,))


def scheme_tv_one_obs(construction, lik):
    """Reference TV for one observation by full word enumeration.

    P(v) comes from the posterior product; Q multiplies, per index, the
    restricted conditional (1/n_anchor) * P(v_i | past) / P(class | past).
    Deliberately loop-based and separate from the vectorized implementation.
    """
    g = construction.group
    q, N = g.order, construction.N
    words = np.stack(np.meshgrid(*([np.arange(q)] * N), indexing="ij"),
                     axis=-1).reshape(-1, N)
    x = polar_transform(g, words)
    p = np.prod(lik[np.arange(N), x], axis=1)
    tot = p.sum()
    if tot == 0:
        return 0.0
    ratio = np.ones(len(words))
    for i in range(N):
        n_anchor, rel = construction.encoder_kernel(i)
        for w_idx, w in enumerate(words):
            same_prefix = np.all(words[:, :i] == w[:i], axis=1)
            past = p[same_prefix].sum()
            in_class = same_prefix & rel[w[i]][words[:, i]]
            cls = p[in_class].sum()
            if cls > 0:
                ratio[w_idx] *= past / (n_anchor * cls)
            else:
                ratio[w_idx] = 0.0
    return 0.5 * float(np.abs(1.0 - ratio) @ p) / tot


def brute_force_tv_source(code):
    joint = code.joint
    g = code.group
    q, N = g.order, code.N
    xs = np.stack(np.meshgrid(*([np.arange(joint.x_size)] * N),
                              indexing="ij"), axis=-1).reshape(-1, N)
    zs = np.stack(np.meshgrid(*([np.arange(q)] * N), indexing="ij"),
                  axis=-1).reshape(-1, N)
    p_x = joint.x_marginal()
    total = 0.0
    for xw in xs:
        w_x = np.prod(p_x[xw])
        for zw in zs:
            lik = likelihood_table(code.w_s, (xw * q + zw)[None])[0]
            total += w_x * q ** -N * scheme_tv_one_obs(code.construction,
                                                       lik)
    return total


def test_source_tv_matches_enumeration_oracle():
    code = build_source_code(dsbs(0.11), 2, seed=1)
    got = exact_total_variation_source(code)
    ref = brute_force_tv_source(code)
    assert got == pytest.approx(ref, abs=1e-12)
    assert got == pytest.approx(0.39673764, abs=1e-8)


def test_channel_tv_matches_enumeration_oracle():
    code = build_channel_code(np.array([0.7, 0.3]), bsc(0.2), 2, seed=1)
    g = code.group
    q, N = g.order, code.N
    zs = np.stack(np.meshgrid(*([np.arange(q)] * N), indexing="ij"),
                  axis=-1).reshape(-1, N)
    ref = 0.0
    for zw in zs:
        lik = likelihood_table(code.w_s, zw[None])[0]
        ref += q ** -N * scheme_tv_one_obs(code.construction, lik)
    got = exact_total_variation_channel(code)
    assert got == pytest.approx(ref, abs=1e-12)
    assert got == pytest.approx(0.3392, abs=1e-8)


def test_tv_zero_without_frozen_cells():
    joint = joint_from_forward(G2, np.array([0.5, 0.5]), np.eye(2))
    code = build_source_code(joint, 2, seed=1)
    assert all(r > 1 for r in code.message_radixes())
    assert exact_total_variation_source(code) == 0.0


def test_tv_nonnegative_and_decreasing_in_blocklength():
    src = [exact_total_variation_source(build_source_code(dsbs(0.11), n,
                                                          seed=1))
           for n in (2, 3)]
    assert 0.0 <= src[1] < src[0]
    ch = [exact_total_variation_channel(
        build_channel_code(np.array([0.7, 0.3]), bsc(0.2), n, seed=1))
        for n in (2, 3)]
    assert 0.0 <= ch[1] < ch[0]


def test_tv_depends_only_on_construction():
    # the diagnostic marginalizes the shared randomness: two codes that
    # differ only in dither draws report the same number
    a = build_source_code(dsbs(0.11), 2, seed=1)
    b = build_source_code(dsbs(0.11), 2, seed=99)
    assert a.construction == b.construction
    assert not np.array_equal(a.dither, b.dither)
    assert exact_total_variation_source(a) == pytest.approx(
        exact_total_variation_source(b), abs=1e-15)
