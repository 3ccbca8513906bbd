"""Polar transform and successive cancellation over group alphabets."""

import numpy as np
import pytest

from nestedpolar.dmc import bec, bsc, qsc, z_d_all
from nestedpolar.errors import InconsistentEvidenceError, SynthesisSizeError
from nestedpolar.groups import FiniteAbelianGroup
from nestedpolar.polar import (bit_reversal, inverse_polar_transform,
                               likelihood_table, polar_transform, sc_pass,
                               sc_conditional, synthesize_exact)

G2 = FiniteAbelianGroup((2,))
G4 = FiniteAbelianGroup((4,))


def test_bit_reversal_involution():
    for n in range(6):
        perm = bit_reversal(n)
        assert np.array_equal(perm[perm], np.arange(1 << n))


def test_bit_reversal_n3():
    assert bit_reversal(3).tolist() == [0, 4, 2, 6, 1, 5, 3, 7]


def test_kernel_n2():
    # (v0, v1) -> (v0 + v1, v1)
    out = polar_transform(G4, np.array([[3, 2]]))
    assert out.tolist() == [[1, 2]]


def test_transform_round_trip():
    rng = np.random.default_rng(0)
    for g in [G2, G4, FiniteAbelianGroup((2, 3))]:
        for n in range(7):
            v = rng.integers(0, g.order, size=(3, 1 << n))
            x = polar_transform(g, v)
            assert np.array_equal(inverse_polar_transform(g, x), v)


def test_transform_is_linear():
    rng = np.random.default_rng(1)
    g = G4
    a = rng.integers(0, 4, size=(5, 8))
    b = rng.integers(0, 4, size=(5, 8))
    lhs = polar_transform(g, g.add(a, b))
    rhs = g.add(polar_transform(g, a), polar_transform(g, b))
    assert np.array_equal(lhs, rhs)


def test_transform_matches_matrix_form():
    # x = v B F^(x)n over Z2: compare against explicit GF(2) matrix product
    n = 3
    N = 1 << n
    f = np.array([[1, 0], [1, 1]])
    gen = np.array([[1]])
    for _ in range(n):
        gen = np.kron(gen, f)
    gen = gen[bit_reversal(n)] % 2
    rng = np.random.default_rng(2)
    v = rng.integers(0, 2, size=(4, N))
    assert np.array_equal(polar_transform(G2, v), (v @ gen) % 2)


def test_likelihood_table_shape():
    w = bsc(0.1)
    y = np.array([[0, 1, 1, 0]])
    lik = likelihood_table(w, y)
    assert lik.shape == (1, 4, 2)
    assert np.allclose(lik[0, 0], [0.9, 0.1])
    assert np.allclose(lik[0, 1], [0.1, 0.9])


def test_sc_conditional_matches_exact_synthesis():
    # SC recursion must reproduce the brute-force synthesized laws exactly
    for g, w in [(G2, bsc(0.2)), (G4, qsc(G4, 0.25))]:
        q = g.order
        for n in [1, 2]:
            N = 1 << n
            synth = synthesize_exact(w, n)
            rng = np.random.default_rng(3)
            for _ in range(8):
                y = rng.integers(0, w.output_size, size=N)
                lik = likelihood_table(w, y[None])[0]
                for i in range(N):
                    for prefix_idx in range(q ** i):
                        prefix = [(prefix_idx // q ** (i - 1 - j)) % q
                                  for j in range(i)]
                        cond = sc_conditional(g, lik, prefix, i)
                        digits = int(np.ravel_multi_index(y, (w.output_size,) * N))
                        col = digits * q ** i + prefix_idx
                        ref = synth[i].probs[:, col]
                        if ref.sum() == 0:
                            continue
                        assert np.allclose(cond, ref / ref.sum(), atol=1e-12)


def test_sc_pass_restores_noiseless_input():
    # identity observation pins every conditional to the true symbol
    g = G4
    rng = np.random.default_rng(4)
    v = rng.integers(0, 4, size=(3, 16))
    x = polar_transform(g, v)
    lik = np.zeros((3, 16, 4))
    lik[np.arange(3)[:, None], np.arange(16)[None, :], x] = 1.0

    def decide(i, cond):
        assert np.allclose(cond.max(axis=1), 1.0)
        return cond.argmax(axis=1)

    decoded = sc_pass(g, lik, decide)
    assert np.array_equal(decoded, v)


def test_sc_pass_inconsistent_evidence():
    g = G2
    lik = np.zeros((1, 2, 2))
    lik[0, 0] = [1.0, 0.0]
    lik[0, 1] = [1.0, 0.0]

    def force_bad(i, cond):
        return np.ones(1, dtype=np.int64)  # contradicts the evidence

    with pytest.raises(InconsistentEvidenceError):
        sc_pass(g, lik, force_bad)


def test_bec_level2_bhattacharyya_set():
    # frozen values for erasure 1/2 at N = 4: {15, 9, 7, 1}/16
    synth = synthesize_exact(bec(0.5), 2)
    zs = [z_d_all(s)[1] for s in synth]
    assert zs == pytest.approx([0.9375, 0.5625, 0.4375, 0.0625], abs=1e-12)


def test_synthesize_size_guard():
    with pytest.raises(SynthesisSizeError):
        synthesize_exact(qsc(G4, 0.1), 4)
