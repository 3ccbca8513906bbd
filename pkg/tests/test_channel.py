"""Channel codec: shaping encoder, SC decoder, side info, rate cap."""

import numpy as np
import pytest

from nestedpolar.channel import (ChannelCode, build_channel_code,
                                 channel_decode, channel_encode,
                                 error_diagnostics, random_messages,
                                 simulate_channel, transmit_blocks)
from nestedpolar.dmc import bsc, identity_channel, qsc
from nestedpolar.errors import ConstructionIOError
from nestedpolar.groups import FiniteAbelianGroup
from nestedpolar.oracles import channel_capacity

G2 = FiniteAbelianGroup((2,))
G4 = FiniteAbelianGroup((4,))

UNIFORM2 = np.array([0.5, 0.5])
UNIFORM4 = np.full(4, 0.25)


def test_noiseless_roundtrip_is_exact():
    code = build_channel_code(UNIFORM4, identity_channel(G4), 2, seed=1)
    assert code.gross_rate() == pytest.approx(2.0, abs=1e-12)
    assert code.side_rate() == 0.0
    run = transmit_blocks(code, 8, seed=0)
    assert run["bler"] == 0.0
    assert np.array_equal(run["decoded"], run["messages"])


def test_rate_identity_and_side_bits():
    code = build_channel_code(UNIFORM2, bsc(0.2), 4, seed=1)
    assert code.net_rate() == pytest.approx(
        code.gross_rate() - code.side_rate(), abs=1e-15)
    msgs = random_messages(code, 3, seed=0)
    x, side, _ = channel_encode(code, msgs)
    assert x.shape == (3, 16)
    assert side.bit_length() == pytest.approx(16 * code.side_rate(),
                                              abs=1e-9)


def test_transmit_deterministic_under_seed():
    code = build_channel_code(UNIFORM2, bsc(0.2), 3, seed=1)
    r1 = transmit_blocks(code, 5, seed=7)
    r2 = transmit_blocks(code, 5, seed=7)
    for key in ("messages", "x", "y", "decoded"):
        assert np.array_equal(r1[key], r2[key])


def test_blocks_use_fresh_shared_randomness():
    # per-block dither: the same message must map to different codewords
    code = build_channel_code(UNIFORM2, bsc(0.2), 4, seed=1)
    msgs = np.tile(random_messages(code, 1, seed=2), (4, 1))
    x, _, _ = channel_encode(code, msgs)
    assert not np.array_equal(x[0], x[1])
    # and the same block index must reproduce exactly
    x2, _, _ = channel_encode(code, msgs[:1], first_block=0)
    assert np.array_equal(x2[0], x[0])


def test_first_block_offsets_randomness():
    code = build_channel_code(UNIFORM2, bsc(0.2), 3, seed=1)
    msgs = random_messages(code, 2, seed=3)
    x, side, _ = channel_encode(code, msgs, first_block=10)
    y = simulate_channel(code.channel, x, seed=4)
    decoded = channel_decode(code, y, side, first_block=10)
    with_wrong_offset = channel_decode(code, y, side, first_block=0)
    assert decoded.shape == with_wrong_offset.shape
    # matching offsets decode cleanly on a mild channel
    assert (decoded != msgs).mean() <= 0.5


def test_decode_rejects_foreign_side_info():
    a = build_channel_code(UNIFORM2, bsc(0.2), 3, seed=1)
    b = build_channel_code(UNIFORM2, bsc(0.1), 3, seed=1)
    msgs = random_messages(a, 2, seed=0)
    x, side, _ = channel_encode(a, msgs)
    y = simulate_channel(a.channel, x, seed=0)
    with pytest.raises(ConstructionIOError):
        channel_decode(b, y, side)


def test_message_digit_range_checked():
    code = build_channel_code(UNIFORM2, bsc(0.1), 3, seed=1)
    msgs = random_messages(code, 2, seed=0)
    msgs[0, 0] = 99
    with pytest.raises(ValueError):
        channel_encode(code, msgs)


def test_channel_code_requires_channel_mode():
    from nestedpolar.dmc import dsbs
    from nestedpolar.lossy import build_source_code
    src = build_source_code(dsbs(0.11), 2, seed=1)
    chan = build_channel_code(UNIFORM2, bsc(0.2), 2, seed=1)
    with pytest.raises(ValueError):
        ChannelCode(src.construction, chan.p_x, chan.channel, chan.rng_seed)


def test_rate_cap_demotes_worst_cells():
    capped = build_channel_code(UNIFORM2, bsc(0.11), 6, seed=0,
                                rate_cap=0.25)
    free = build_channel_code(UNIFORM2, bsc(0.11), 6, seed=0)
    assert capped.net_rate() <= 0.25 + 1e-12
    assert capped.net_rate() <= free.net_rate()
    assert capped.construction.metadata["rate_cap"] == 0.25
    assert capped.construction.metadata["demoted"] > 0


def test_bsc_low_rate_bler_small():
    # BSC(0.11) at quarter rate decodes reliably well below capacity 0.5
    code = build_channel_code(UNIFORM2, bsc(0.11), 8, seed=0, rate_cap=0.25)
    diag = error_diagnostics(code, 200, seed=0)
    assert diag["bler"] <= 0.05
    assert diag["P1_proxy"] <= diag["bler"] + 1e-12
    assert diag["P2_proxy"] is None  # N = 256 too large to enumerate
    assert diag["flatness"] == pytest.approx(0.0, abs=1e-12)


def test_uniform_input_codeword_marginal_exact():
    # uniform p_x: dither symmetry keeps transmitted symbols uniform
    code = build_channel_code(UNIFORM2, bsc(0.11), 6, seed=1)
    msgs = random_messages(code, 64, seed=2)
    x, _, _ = channel_encode(code, msgs)
    freq = np.bincount(x.reshape(-1), minlength=2) / x.size
    assert abs(freq[0] - 0.5) < 3 * np.sqrt(0.25 / x.size)


def test_shaped_marginal_moves_toward_px():
    p_x = np.array([0.7, 0.3])
    code = build_channel_code(p_x, bsc(0.2), 6, seed=1)
    msgs = random_messages(code, 64, seed=2)
    x, _, _ = channel_encode(code, msgs)
    freq = np.bincount(x.reshape(-1), minlength=2) / x.size
    assert 0.62 < freq[0] < 0.78


def test_side_info_only_on_non_nested_cells():
    code = build_channel_code(UNIFORM2, bsc(0.2), 4, seed=1)
    for i in code.side_cells:
        h, k, is_side = code.construction.cells[i].H, \
            code.construction.cells[i].K, code.construction.cells[i].side
        assert is_side and not k.is_contained_in(h)


def test_qsc_roundtrip_over_z4():
    code = build_channel_code(UNIFORM4, qsc(G4, 0.02), 4, seed=0)
    run = transmit_blocks(code, 30, seed=1)
    assert run["bler"] <= 0.2
    assert run["x"].max() <= 3 and run["x"].min() >= 0


def test_capacity_px_runs_end_to_end():
    # asymmetric channel with the oracle-optimal input completes the loop
    W_probs = np.array([[1.0, 0.0], [0.5, 0.5]])
    from nestedpolar.dmc import Dmc
    W = Dmc(G2, W_probs)
    _, p_star = channel_capacity(W_probs)
    code = build_channel_code(p_star, W, 4, seed=2)
    run = transmit_blocks(code, 10, seed=3)
    assert run["decoded"].shape == run["messages"].shape
