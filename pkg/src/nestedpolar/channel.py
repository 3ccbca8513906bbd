"""Nested-polar channel code with distribution shaping.

Per block, encoder and decoder derive the same dither z and frozen values
from the shared seed.  The encoder embeds message digits on message cells,
samples shaping components from the SC posterior under W_s (which steers
the transmitted word toward p_X), and sends x = z - vG through the channel.
Side-information cells (decodable-for-shaping but not for data) ship their
sampled transversal component out of band; their rate is charged against
the net rate.  The decoder substitutes frozen and side components and
argmax-decodes the rest from (y, z) under W_c.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .construction import (NestedConstruction, code_rate, delta_threshold,
                           estimate_params, exact_params, nest_partitions,
                           partition_by_subgroup)
from .dmc import Dmc, channel_test_channels, symmetric_capacity
from .errors import ConstructionIOError, InconsistentEvidenceError
from .groups import FiniteAbelianGroup
from .lossy import EXACT_PARAM_LIMIT, _digit_tables
from .polar import likelihood_table, polar_transform, sc_pass


@dataclass(frozen=True)
class SideInfo:
    """Sampled transversal components of the side-information cells."""

    construction_hash: str
    radixes: tuple           # per side cell, q/|H|
    digits: np.ndarray       # (blocks, len(radixes))

    def bit_length(self) -> float:
        return float(np.sum(np.log2(self.radixes))) if self.radixes else 0.0

    @property
    def blocks(self):
        return self.digits.shape[0]


@dataclass(frozen=True)
class ChannelCode:
    """Immutable transmitter/receiver state; per-block randomness is derived
    from (rng_seed, block index) identically on both ends."""

    construction: NestedConstruction
    p_x: np.ndarray
    channel: Dmc
    rng_seed: int
    w_s: object = field(repr=False, default=None)
    w_c: object = field(repr=False, default=None)

    def __post_init__(self):
        if self.construction.mode != "channel":
            raise ValueError("ChannelCode needs a channel-mode construction")
        p = np.asarray(self.p_x, dtype=np.float64)
        p.setflags(write=False)
        object.__setattr__(self, "p_x", p)
        if self.w_s is None or self.w_c is None:
            w_s, w_c = channel_test_channels(p, self.channel)
            object.__setattr__(self, "w_s", w_s)
            object.__setattr__(self, "w_c", w_c)
        msg_digit, t_digit = _digit_tables(self.construction)
        object.__setattr__(self, "_msg_digit", msg_digit)
        object.__setattr__(self, "_t_digit", t_digit)
        con = self.construction
        object.__setattr__(self, "message_cells", tuple(
            i for i in range(self.N) if not con.cells[i].side
            and len(con.message_reps[i]) > 1))
        object.__setattr__(self, "side_cells", tuple(
            i for i in range(self.N) if con.cells[i].side))

    @property
    def group(self) -> FiniteAbelianGroup:
        return self.construction.group

    @property
    def N(self):
        return self.construction.N

    def message_radixes(self):
        return tuple(len(self.construction.message_reps[i])
                     for i in self.message_cells)

    def side_radixes(self):
        return tuple(len(self.construction.th_reps[i]) for i in self.side_cells)

    def gross_rate(self) -> float:
        return code_rate(self.construction)[0]

    def side_rate(self) -> float:
        return self.construction.side_bits / self.N

    def net_rate(self) -> float:
        return self.gross_rate() - self.side_rate()

    def block_randomness(self, first_block: int, blocks: int):
        """Shared per-block dither and frozen values (blocks, N)."""
        N = self.N
        q = self.group.order
        z = np.empty((blocks, N), dtype=np.int64)
        f = np.empty((blocks, N), dtype=np.int64)
        subs = self.construction.frozen_subgroups
        elems = [np.array(s.elements) for s in subs]
        orders = np.array([s.order for s in subs])
        for b in range(blocks):
            rng = np.random.default_rng(
                np.random.SeedSequence((self.rng_seed, 2, first_block + b)))
            z[b] = rng.integers(0, q, size=N)
            f[b] = [e[k] for e, k in
                    zip(elems, rng.integers(0, orders, size=N))]
        return z, f


def build_channel_code(p_x, W: Dmc, n: int, beta=0.25, trials=10000, seed=0,
                       rate_cap=None, use_exact=None) -> ChannelCode:
    """Construct the shaped channel code, optionally capping the net rate.

    ``rate_cap`` freezes message cells in worst-reliability-first order (by
    the W_c tail estimate over the cell's frozen subgroup) until the net
    rate is at most the cap, trading rate for block error probability.
    """
    group = W.input_group
    N = 1 << n
    delta = delta_threshold(N, beta)
    w_s, w_c = channel_test_channels(p_x, W)
    master = np.random.default_rng(np.random.SeedSequence(seed))
    child = [int(s) for s in master.integers(0, 2 ** 62, size=3)]
    if use_exact is None:
        use_exact = n <= EXACT_PARAM_LIMIT
    if use_exact:
        params_s = exact_params(w_s, n)
        params_c = exact_params(w_c, n)
    else:
        params_s = estimate_params(w_s, n, trials=trials, seed=child[0])
        params_c = estimate_params(w_c, n, trials=trials, seed=child[1])
    A = partition_by_subgroup(params_s, delta, "source")
    B = partition_by_subgroup(params_c, delta, "channel")
    meta = {
        "trials": 0 if use_exact else trials,
        "target_rate": symmetric_capacity(w_c) - symmetric_capacity(w_s),
        "capacity_ws": symmetric_capacity(w_s),
        "capacity_wc": symmetric_capacity(w_c),
        "skipped_s": params_s.skipped_fraction,
        "skipped_c": params_c.skipped_fraction,
    }
    construction = nest_partitions(A, B, "channel", beta, delta, meta)
    if rate_cap is not None:
        construction = _cap_rate(construction, params_c, rate_cap)
    return ChannelCode(construction, p_x, W, seed)


def _cap_rate(construction: NestedConstruction, params_c, rate_cap: float):
    """Freeze message cells (K := H) until net rate <= rate_cap."""
    from .construction import Cell
    cells = list(construction.cells)
    candidates = [i for i, c in enumerate(cells)
                  if not c.side and c.K != c.H]
    # worst first: largest estimated tail Z over the cell's frozen subgroup
    candidates.sort(key=lambda i: -params_c.z_subgroup(cells[i].K)[i])
    N = construction.N
    rate = construction.rate_bits / N
    net = rate - construction.side_bits / N
    demoted = 0
    for i in candidates:
        if net <= rate_cap:
            break
        drop = np.log2(cells[i].H.order / cells[i].K.order) / N
        cells[i] = Cell(cells[i].H, cells[i].H)
        net -= drop
        demoted += 1
    meta = dict(construction.metadata)
    meta["demoted"] = demoted
    meta["rate_cap"] = rate_cap
    return NestedConstruction(
        construction.group, construction.n, construction.beta,
        construction.delta, construction.mode, tuple(cells),
        construction.a_partition, construction.b_partition, meta)


def random_messages(code: ChannelCode, blocks: int, seed=0) -> np.ndarray:
    """Uniform message digits (blocks, #message cells) for experiments."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 17)))
    radixes = code.message_radixes()
    out = np.empty((blocks, len(radixes)), dtype=np.int64)
    for c, r in enumerate(radixes):
        out[:, c] = rng.integers(0, r, size=blocks)
    return out


def channel_encode(code: ChannelCode, messages, first_block=0, sample_seed=0):
    """Shaping encoder: returns (x, SideInfo, v) for a batch of blocks.

    messages: (blocks, #message cells) digit array.  x = z - vG is the
    transmitted word; v rows are the sampled transform inputs.
    """
    msgs = np.atleast_2d(np.asarray(messages, dtype=np.int64))
    B = msgs.shape[0]
    con = code.construction
    if msgs.shape[1] != len(code.message_cells):
        raise ValueError(f"expected {len(code.message_cells)} message digits "
                         f"per block, got {msgs.shape[1]}")
    radixes = code.message_radixes()
    if msgs.size and (np.any(msgs < 0) or np.any(msgs >= np.array(radixes))):
        raise ValueError("message digit out of range")
    g = code.group
    q = g.order
    z, f = code.block_randomness(first_block, B)
    lik = likelihood_table(code.w_s, z)
    rng = np.random.default_rng(np.random.SeedSequence((code.rng_seed, 3,
                                                        sample_seed)))
    col_of = {i: c for c, i in enumerate(code.message_cells)}

    def decide(i, cond):
        anchors = f[:, i]
        if i in col_of:
            reps = np.array(con.message_reps[i])
            anchors = g.add_table[anchors, reps[msgs[:, col_of[i]]]]
        _, r_enc = con.encoder_kernel(i)
        masked = cond * r_enc[anchors]
        tot = masked.sum(axis=1)
        if np.any(tot <= 0):
            raise InconsistentEvidenceError(
                f"restricted posterior has no mass at index {i}")
        cum = np.cumsum(masked / tot[:, None], axis=1)
        return np.minimum((rng.random(B)[:, None] > cum).sum(axis=1), q - 1)

    v = sc_pass(g, lik, decide)
    x = g.sub(z, polar_transform(g, v))
    side_digits = np.stack([code._t_digit[i][v[:, i]] for i in code.side_cells],
                           axis=1) if code.side_cells \
        else np.zeros((B, 0), dtype=np.int64)
    side = SideInfo(con.content_hash(), code.side_radixes(), side_digits)
    return x, side, v


def simulate_channel(W: Dmc, x, seed=0) -> np.ndarray:
    """Memoryless symbol-by-symbol transmission of x through W."""
    x = np.asarray(x, dtype=np.int64)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 29)))
    cum = np.cumsum(W.probs, axis=1)
    r = rng.random(x.shape)
    return (r[..., None] > cum[x]).sum(axis=-1)


def channel_decode(code: ChannelCode, y, side: SideInfo, first_block=0,
                   return_v=False):
    """SC decoding from (y, dither): returns decoded message digits.

    Frozen and side-information components are substituted; message and
    shaping components are argmax-decoded over the allowed class.
    """
    con = code.construction
    if side.construction_hash != con.content_hash():
        raise ConstructionIOError("side information from a different code")
    y = np.atleast_2d(np.asarray(y, dtype=np.int64))
    B, N = y.shape
    if N != code.N:
        raise ValueError(f"blocks must have length {code.N}, got {N}")
    g = code.group
    q = g.order
    z, f = code.block_randomness(first_block, B)
    obs = y * q + z
    lik = likelihood_table(code.w_c, obs)
    side_col = {i: c for c, i in enumerate(code.side_cells)}

    def decide(i, cond):
        if i in side_col:
            reps = np.array(con.th_reps[i])
            return g.add_table[f[:, i], reps[side.digits[:, side_col[i]]]]
        mask = con.decoder_kernel(i)[f[:, i]]
        return np.where(mask, cond, -1.0).argmax(axis=1)

    v_hat = sc_pass(g, lik, decide)
    digits = np.stack([code._msg_digit[i][v_hat[:, i]]
                       for i in code.message_cells], axis=1) \
        if code.message_cells else np.zeros((B, 0), dtype=np.int64)
    return (digits, v_hat) if return_v else digits


def transmit_blocks(code: ChannelCode, blocks: int, seed=0, first_block=0):
    """Full encode -> channel -> decode pipeline on random messages.

    Returns a dict with the error counts and the pieces needed by callers.
    """
    msgs = random_messages(code, blocks, seed=seed)
    x, side, v = channel_encode(code, msgs, first_block=first_block,
                                sample_seed=seed)
    y = simulate_channel(code.channel, x, seed=seed)
    decoded = channel_decode(code, y, side, first_block=first_block)
    errors = (decoded != msgs).any(axis=1) if msgs.size \
        else np.zeros(blocks, dtype=bool)
    return {
        "messages": msgs, "x": x, "y": y, "side": side, "v": v,
        "decoded": decoded, "bler": float(errors.mean()),
    }


def error_diagnostics(code: ChannelCode, blocks: int, seed=0):
    """BLER plus its decomposition proxies.

    P1_proxy isolates channel noise: per index, the decoder's argmax decision
    is scored against the encoder's true v with the true past substituted
    afterwards (genie-aided), so shaping-sampling randomness and error
    propagation are excluded.  P2_proxy is the exact sampled-vs-true total
    variation of (v, z) for N <= 8 (None otherwise) and flatness is the mean
    total variation between the shaping posterior and its frozen-class
    average, whose decay with n is the large-N counterpart.
    """
    run = transmit_blocks(code, blocks, seed=seed)
    msgs, v, y, side = run["messages"], run["v"], run["y"], run["side"]
    g = code.group
    q = g.order
    B = blocks
    z, f = code.block_randomness(0, B)
    obs = y * q + z
    lik = likelihood_table(code.w_c, obs)
    con = code.construction
    genie_err = np.zeros(B, dtype=bool)

    def genie(i, cond):
        if not con.cells[i].side and i in set(code.message_cells):
            mask = con.decoder_kernel(i)[f[:, i]]
            dec = np.where(mask, cond, -1.0).argmax(axis=1)
            np.logical_or(genie_err,
                          code._msg_digit[i][dec] != code._msg_digit[i][v[:, i]],
                          out=genie_err)
        return v[:, i]

    sc_pass(g, lik, genie)
    flat = _posterior_flatness(code, B, seed=seed)
    out = {
        "bler": run["bler"],
        "P1_proxy": float(genie_err.mean()),
        "P2_proxy": None,
        "flatness": flat,
    }
    if code.N <= 8:
        from .diagnostics import exact_total_variation_channel
        out["P2_proxy"] = exact_total_variation_channel(code)
    return out


def _posterior_flatness(code: ChannelCode, blocks: int, seed=0) -> float:
    """Mean TV between the W_s posterior and its frozen-class average.

    Small values mean the posterior is nearly flat across each frozen coset,
    which is what makes substituting shared uniform values harmless.
    """
    g = code.group
    con = code.construction
    z, f = code.block_randomness(0, blocks)
    lik = likelihood_table(code.w_s, z)
    rng = np.random.default_rng(np.random.SeedSequence((code.rng_seed, 3,
                                                        seed)))
    acc = []
    q = g.order

    def decide(i, cond):
        sub = con.frozen_subgroups[i]
        if sub.order > 1:
            members = g.add_table[np.ix_(list(sub.elements), range(q))]
            avg = cond[:, members].mean(axis=1)
            acc.append(0.5 * np.abs(cond - avg).sum(axis=1).mean())
        anchors = f[:, i]
        _, r_enc = con.encoder_kernel(i)
        masked = cond * r_enc[anchors]
        tot = masked.sum(axis=1)
        cum = np.cumsum(masked / tot[:, None], axis=1)
        return np.minimum((rng.random(blocks)[:, None] > cum).sum(axis=1),
                          q - 1)

    sc_pass(g, lik, decide)
    return float(np.mean(acc)) if acc else 0.0
