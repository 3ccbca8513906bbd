"""Synthesized-channel estimation, partitions, nesting, serialization."""

import numpy as np
import pytest

from nestedpolar.construction import (Cell, NestedConstruction, code_rate,
                                      delta_threshold, estimate_params,
                                      exact_params, nest_partitions,
                                      partition_by_subgroup)
from nestedpolar.dmc import (bec, bsc, identity_channel, qsc,
                             symmetric_capacity,
                             useless_channel, z_d_all)
from nestedpolar.errors import ConstructionIOError, NestingError
from nestedpolar.groups import FiniteAbelianGroup
from nestedpolar.polar import synthesize_exact

G2 = FiniteAbelianGroup((2,))
G4 = FiniteAbelianGroup((4,))


def test_delta_threshold():
    assert delta_threshold(16, 0.25) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        delta_threshold(16, 0.5)


def test_exact_params_bec_level2():
    p = exact_params(bec(0.5), 2)
    assert p.z_d[:, 1] == pytest.approx([0.9375, 0.5625, 0.4375, 0.0625],
                                        abs=1e-12)
    assert p.capacity == pytest.approx([0.0625, 0.4375, 0.5625, 0.9375],
                                       abs=1e-12)
    assert p.exact


def test_exact_params_matches_brute_force():
    w = qsc(G4, 0.3)
    p = exact_params(w, 2)
    from nestedpolar.dmc import symmetric_capacity as cap
    for i, synth in enumerate(synthesize_exact(w, 2)):
        assert np.allclose(z_d_all(synth), p.z_d[i], atol=1e-12)
        assert cap(synth) == pytest.approx(p.capacity[i], abs=1e-12)


def test_exact_params_capacity_conservation():
    w = qsc(G4, 0.3)
    for n in [1, 2, 3]:
        p = exact_params(w, n)
        assert p.capacity.sum() == pytest.approx(
            (1 << n) * symmetric_capacity(w), abs=1e-9)


def test_estimator_extremes_are_exact():
    p = estimate_params(identity_channel(G4), 2, trials=64, seed=1)
    assert np.allclose(p.z_d[:, 1:], 0.0)
    assert np.allclose(p.capacity, 2.0)
    p = estimate_params(useless_channel(G4, 3), 2, trials=64, seed=1)
    assert np.allclose(p.z_d[:, 1:], 1.0)
    assert np.allclose(p.capacity, 0.0, atol=1e-12)
    assert p.skipped_fraction == 0.0


def test_estimator_tracks_exact_values():
    w = bsc(0.2)
    exact = exact_params(w, 3)
    est = estimate_params(w, 3, trials=20000, seed=11)
    # 20k trials: hold every index to 4 sigma with sigma <= 0.5/sqrt(trials)
    tol = 4 * 0.5 / np.sqrt(20000)
    assert np.max(np.abs(est.z_d[:, 1] - exact.z_d[:, 1])) < tol * 2
    assert np.max(np.abs(est.capacity - exact.capacity)) < tol * 4


def test_estimator_deterministic_under_seed():
    w = qsc(G4, 0.2)
    a = estimate_params(w, 3, trials=512, seed=5)
    b = estimate_params(w, 3, trials=512, seed=5)
    assert np.array_equal(a.z_d, b.z_d)
    assert np.array_equal(a.capacity, b.capacity)
    c = estimate_params(w, 3, trials=512, seed=6)
    assert not np.array_equal(a.z_d, c.z_d)


def test_partition_assignment_minimal():
    w = qsc(G4, 0.06)
    p = exact_params(w, 4)
    part = partition_by_subgroup(p, 0.2, "channel")
    assert sum(len(v) for v in part.values()) == 16
    subs = G4.subgroups()
    # recompute directly: first subgroup in canonical order under threshold
    for H, idxs in part.items():
        for i in idxs:
            qualifiers = [s for s in subs if p.z_subgroup(s)[i] < 0.2]
            assert qualifiers[0] == H


def test_partition_source_mode_threshold():
    w = useless_channel(G4, 2)
    p = exact_params(w, 1)
    # all Z_d = 1: only the full group clears 1 - delta
    part = partition_by_subgroup(p, 0.1, "source")
    assert part[G4.full_subgroup()] == (0, 1)
    # but a perfect channel pins everything to the trivial subgroup
    part2 = partition_by_subgroup(exact_params(identity_channel(G4), 1),
                                  0.1, "source")
    assert part2[G4.trivial_subgroup()] == (0, 1)


def test_cell_requires_nesting():
    h = G4.subgroup([0, 2])
    with pytest.raises(NestingError):
        Cell(G4.trivial_subgroup(), h)
    Cell(G4.trivial_subgroup(), h, side=True)  # side cells may violate it


def test_nest_partitions_source_reassignment():
    g = FiniteAbelianGroup((2, 2))
    h = g.subgroup([0, 1])
    k = g.subgroup([0, 2])
    A = {h: (0, 1)}
    B = {k: (0,), g.trivial_subgroup(): (1,)}
    con = nest_partitions(A, B, "source", 0.25, 0.1)
    # K = Z2a not inside H = Z2b: reassigned to the intersection
    assert con.cells[0].K == g.trivial_subgroup()
    assert con.cells[0].H == h
    assert con.metadata["reassigned"] == 1
    assert not any(c.side for c in con.cells)


def test_nest_partitions_channel_side_info():
    g = FiniteAbelianGroup((2, 2))
    h = g.subgroup([0, 1])
    k = g.subgroup([0, 2])
    con = nest_partitions({h: (0, 1)}, {k: (0,), g.trivial_subgroup(): (1,)},
                          "channel", 0.25, 0.1)
    assert con.cells[0].side
    assert con.role(0) == "side-info"
    assert con.metadata["side_cells"] == 1
    # side index ships log2(q/|H|) bits out of band and carries no message
    assert con.side_bits == pytest.approx(1.0)
    assert con.message_radixes()[0] == 1


def test_rate_and_cross_check_agree_without_repairs():
    w = qsc(G4, 0.06)
    delta = delta_threshold(16, 0.3)
    p = exact_params(w, 4)
    A = {G4.full_subgroup(): tuple(range(16))}
    B = partition_by_subgroup(p, delta, "channel")
    con = nest_partitions(A, B, "channel", 0.3, delta)
    rate, cross = code_rate(con)
    assert rate == pytest.approx(cross, abs=1e-12)
    # H = G everywhere, so the rate is the frozen-side sum alone
    expect = sum(len(v) * np.log2(4 / K.order) for K, v in B.items()) / 16
    assert rate == pytest.approx(expect, abs=1e-12)


def test_roles_cover_lattice():
    con = nest_partitions(
        {G4.full_subgroup(): (0,), G4.subgroup([0, 2]): (1, 2),
         G4.trivial_subgroup(): (3,)},
        {G4.full_subgroup(): (0,), G4.subgroup([0, 2]): (1,),
         G4.trivial_subgroup(): (2, 3)},
        "source", 0.25, 0.1)
    assert con.role(0) == "frozen"      # H = K = G
    assert con.role(1) == "shaping"     # H = K = Z2: argmax part only
    assert con.role(2) == "message"     # K = trivial < H = Z2, radix 2
    assert con.role(3) == "shaping"     # H = K = trivial: fully decodable
    assert con.message_radixes() == (1, 1, 2, 1)
    assert con.rate_bits == pytest.approx(1.0)


def test_encoder_decoder_kernels_channel_mode():
    h = G4.subgroup([0, 2])
    con = nest_partitions({h: (0, 1)},
                          {G4.trivial_subgroup(): (0,), h: (1,)},
                          "channel", 0.25, 0.1)
    # index 0: K trivial, H = {0,2}: anchor a = f + m with f = 0, m in {0,2};
    # sampling runs over a + T_H = {a, a+1}
    n_anchor, r_enc = con.encoder_kernel(0)
    assert n_anchor == 2
    assert r_enc[0].tolist() == [True, True, False, False]
    assert r_enc[2].tolist() == [False, False, True, True]
    # decoder argmaxes the whole K-coset (all of G here) and reads off m
    assert con.decoder_kernel(0).all()
    # index 1: K = H: frozen f in {0,2} plus a sampled T_H part, no message
    n1, r1 = con.encoder_kernel(1)
    assert n1 == 2
    assert r1[0].tolist() == [True, True, False, False]
    assert r1[2].tolist() == [False, False, True, True]
    assert con.message_radixes() == (2, 1)


def test_encoder_decoder_kernels_source_mode():
    h = G4.subgroup([0, 2])
    con = nest_partitions({G4.full_subgroup(): (0, 1)},
                          {h: (0,), G4.trivial_subgroup(): (1,)},
                          "source", 0.25, 0.1)
    # index 0: encoder samples over {v: frozen component = f} = f + T_K
    n_anchor, r_enc = con.encoder_kernel(0)
    assert n_anchor == 2  # source mode anchors on f in K
    assert r_enc[0].tolist() == [True, True, False, False]
    assert r_enc[2].tolist() == [False, False, True, True]
    # the sampled element's coset of K is the message: radix |H|/|K| = 2
    assert con.message_radixes()[0] == 2
    # H = G: T_H is trivial, so the decoder's argmax set is the singleton f+m
    assert np.array_equal(con.decoder_kernel(0), np.eye(4, dtype=bool))
    # index 1: K trivial: pure message index, encoder free over all of G
    n1, r1 = con.encoder_kernel(1)
    assert n1 == 1 and r1.all()


def test_serialization_round_trip():
    w = qsc(G4, 0.1)
    delta = delta_threshold(8, 0.3)
    p = exact_params(w, 3)
    A = {G4.full_subgroup(): tuple(range(8))}
    B = partition_by_subgroup(p, delta, "channel")
    con = nest_partitions(A, B, "channel", 0.3, delta, metadata={"note": "t"})
    text = con.to_text()
    back = NestedConstruction.from_text(text)
    assert back == con
    assert back.content_hash() == con.content_hash()
    assert back.rate_bits == con.rate_bits
    assert back.metadata["note"] == "t"


def test_serialization_rejects_malformed():
    with pytest.raises(ConstructionIOError):
        NestedConstruction.from_text("not json at all {")
    with pytest.raises(ConstructionIOError):
        NestedConstruction.from_text('{"format": "something-else"}')
    w = bsc(0.1)
    p = exact_params(w, 1)
    B = partition_by_subgroup(p, 0.3, "channel")
    con = nest_partitions({G2.full_subgroup(): (0, 1)}, B, "channel", 0.3, 0.3)
    data = con.to_dict()
    data["version"] = 99
    with pytest.raises(ConstructionIOError):
        NestedConstruction.from_dict(data)
    data2 = con.to_dict()
    del data2["cells"]
    with pytest.raises(ConstructionIOError):
        NestedConstruction.from_dict(data2)


def test_estimated_construction_close_to_exact():
    # a Z4 additive-noise channel at n = 4: estimated partition must match
    # the exact one when estimates sit 3 sigma from every threshold
    w = qsc(G4, 0.06)
    delta = delta_threshold(16, 0.3)
    exact = exact_params(w, 4)
    est = estimate_params(w, 4, trials=8000, seed=2)
    pa_e = partition_by_subgroup(exact, delta, "channel")
    pa_m = partition_by_subgroup(est, delta, "channel")
    agree = sum(len(set(pa_e[H]) & set(pa_m[H])) for H in pa_e)
    assert agree >= 14  # at most 2 threshold-straddling indices may differ
