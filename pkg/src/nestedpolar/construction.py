"""Code construction: synthesized-channel parameters and nested partitions.

Parameters of the N = 2**n synthesized channels are estimated by genie-aided
Monte Carlo: sample (v, y) from the true joint (v uniform, y through W after
the polar transform), run one batched SC pass per trial block, and average
sqrt(P(v_i + d | y, v^{i-1}) / P(v_i | y, v^{i-1})) which is an unbiased
estimator of Z_d(W_N^(i)).  One pass yields every index's estimate from
shared samples.  For tiny n an exact oracle walks minus/plus transform
chains with sufficient-statistic output reduction between steps.

Indices are then partitioned by the minimal subgroup H whose tail sum
Z^H = sum_{d not in H} Z_d clears the threshold (delta for reliability
partitions, 1 - delta for flatness partitions, delta = 2^{-N^beta}), and the
two partitions are nested into per-index cells (H, K): K is the frozen
subgroup, the transversal of K in H carries the message, and the transversal
of H in G is the part that is argmax-decoded (source mode) or sampled for
shaping (channel mode).
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dmc import (Dmc, minus_transform, plus_transform, reduce_outputs,
                  symmetric_capacity, z_d_all)
from .errors import ConstructionIOError, NestingError
from .groups import (FiniteAbelianGroup, Subgroup, canonical_transversal,
                     group_from_spec, transversal_within)
from .polar import polar_transform, sc_pass

DEFAULT_TRIALS = 10000
ESTIMATE_BATCH = 512
SKIP_WARN_FRACTION = 0.01
FORMAT_NAME = "nested-polar-construction"
FORMAT_VERSION = 1


def delta_threshold(N: int, beta: float) -> float:
    """delta_N = 2^(-N^beta); beta must lie in (0, 1/2)."""
    if not 0.0 < beta < 0.5:
        raise ValueError(f"beta must be in (0, 1/2), got {beta}")
    return float(2.0 ** (-(N ** beta)))


@dataclass
class SynthChannelParams:
    """Per-index parameter estimates for the synthesized channels."""

    group: FiniteAbelianGroup
    n: int
    z_d: np.ndarray          # (N, q); column 0 is identically 1
    capacity: np.ndarray     # (N,) symmetric-capacity estimates in bits
    trials: int              # 0 marks exact values
    seed: int | None
    skipped_fraction: float = 0.0

    @property
    def N(self):
        return 1 << self.n

    @property
    def exact(self):
        return self.trials == 0

    def z_subgroup(self, H: Subgroup) -> np.ndarray:
        outside = [d for d in range(self.group.order) if d not in H]
        if not outside:
            return np.zeros(self.N)
        return self.z_d[:, outside].sum(axis=1)

    def average_z(self) -> np.ndarray:
        """Mean pairwise Bhattacharyya estimate per index."""
        q = self.group.order
        return self.z_d[:, 1:].sum(axis=1) / (q - 1)


def estimate_params(W: Dmc, n: int, trials=DEFAULT_TRIALS, seed=0,
                    batch_size=ESTIMATE_BATCH) -> SynthChannelParams:
    """Genie-aided Monte Carlo estimates of Z_d and Ī for all N indices.

    Deterministic given (seed, trials, batch_size).  Trials with a zero
    conditional at the true value are skipped and counted; a skipped
    fraction above 1% triggers an estimation-unreliable warning.
    """
    group = W.input_group
    q = group.order
    N = 1 << n
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    cum = np.cumsum(W.probs, axis=1)
    lik_lookup = W.probs.T.copy()  # (M, q)
    add = group.add_table
    ratio_sums = np.zeros((N, q))
    log_sums = np.zeros(N)
    counts = np.zeros(N, dtype=np.int64)
    skipped = 0
    done = 0
    while done < trials:
        b = min(batch_size, trials - done)
        v = rng.integers(0, q, size=(b, N))
        x = polar_transform(group, v)
        r = rng.random((b, N))
        y = (r[:, :, None] > cum[x]).sum(axis=2)
        lik = lik_lookup[y]
        rows = np.arange(b)

        def genie(i, cond):
            nonlocal skipped
            tv = v[:, i]
            p_true = cond[rows, tv]
            ok = p_true > 0
            n_ok = int(ok.sum())
            counts[i] += n_ok
            skipped += b - n_ok
            if n_ok:
                with np.errstate(divide="ignore", invalid="ignore"):
                    for d in range(1, q):
                        shifted = cond[rows, add[tv, d]]
                        ratio = np.sqrt(shifted[ok] / p_true[ok])
                        ratio_sums[i, d] += ratio.sum()
                log_sums[i] += np.log2(p_true[ok]).sum()
            return tv

        sc_pass(group, lik, genie)
        done += b
    z = np.zeros((N, q))
    z[:, 0] = 1.0
    good = counts > 0
    z[good, 1:] = ratio_sums[good, 1:] / counts[good, None]
    cap = np.full(N, np.nan)
    cap[good] = np.log2(q) + log_sums[good] / counts[good]
    frac = skipped / float(trials * N)
    if frac > SKIP_WARN_FRACTION:
        warnings.warn(f"{frac:.1%} of genie trials skipped on zero conditionals; "
                      "estimates may be unreliable", RuntimeWarning)
    return SynthChannelParams(group, n, z, cap, trials, seed, frac)


def exact_params(W: Dmc, n: int, size_bound=10 ** 6) -> SynthChannelParams:
    """Exact synthesized-channel parameters via reduced transform chains.

    Walks every length-n minus/plus sequence (index i's ops are the binary
    digits of i, most significant first, 0 = minus, 1 = plus), merging
    proportional output columns between steps; the merge is an exact
    sufficient-statistic reduction so every Z_d and Ī is exact.
    """
    group = W.input_group
    q = group.order
    chains = [reduce_outputs(W)]
    for _ in range(n):
        nxt = []
        for c in chains:
            nxt.append(reduce_outputs(minus_transform(c, size_bound)))
            nxt.append(reduce_outputs(plus_transform(c, size_bound)))
        chains = nxt
    N = 1 << n
    z = np.zeros((N, q))
    cap = np.zeros(N)
    for i, c in enumerate(chains):
        z[i] = z_d_all(c)
        cap[i] = symmetric_capacity(c)
    return SynthChannelParams(group, n, z, cap, 0, None, 0.0)


# ---- partitions ----

def partition_by_subgroup(params: SynthChannelParams, delta: float, mode: str):
    """Assign each index to its minimal subgroup clearing the threshold.

    mode "channel": H minimal with Z^H < delta (reliability partition);
    mode "source": H minimal with Z^H < 1 - delta (flatness partition).
    Subgroups are scanned in canonical order (ascending order, then element
    list); because qualification is upward closed the first qualifier is a
    minimal one, and ties between incomparable minima resolve canonically.
    Assignment is total since Z^G = 0.
    """
    if mode == "channel":
        thr = delta
    elif mode == "source":
        thr = 1.0 - delta
    else:
        raise ValueError(f"unknown partition mode {mode!r}")
    subs = params.group.subgroups()
    z_rows = np.stack([params.z_subgroup(H) for H in subs])  # (S, N)
    qualifies = z_rows < thr
    if not np.all(qualifies.any(axis=0)):
        raise AssertionError("assignment must be total: Z^G = 0 < threshold")
    pick = qualifies.argmax(axis=0)
    return {H: tuple(np.nonzero(pick == s)[0].tolist())
            for s, H in enumerate(subs)}


@dataclass(frozen=True)
class Cell:
    """Per-index role cell: frozen subgroup K, nesting subgroup H."""

    H: Subgroup
    K: Subgroup
    side: bool = False

    def __post_init__(self):
        if not self.side and not self.K.is_contained_in(self.H):
            raise NestingError(f"cell requires K <= H, got K={self.K}, H={self.H}")


@dataclass
class NestedConstruction:
    """Frozen result of nesting the two partitions; drives both codecs."""

    group: FiniteAbelianGroup
    n: int
    beta: float
    delta: float
    mode: str  # "source" or "channel"
    cells: tuple  # Cell per index
    a_partition: dict
    b_partition: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        N = self.N
        if len(self.cells) != N:
            raise ValueError(f"expected {N} cells, got {len(self.cells)}")
        if self.mode not in ("source", "channel"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "source" and any(c.side for c in self.cells):
            raise NestingError("source mode has no side-information cells")
        g = self.group
        q = g.order
        frozen_subs, msg_reps, th_reps = [], [], []
        rate_bits = 0.0
        side_bits = 0.0
        for c in self.cells:
            t_h = canonical_transversal(g, c.H).coset_reps
            th_reps.append(t_h)
            if c.side:
                frozen_subs.append(c.H)
                msg_reps.append((0,))
                side_bits += np.log2(q / c.H.order)
            else:
                frozen_subs.append(c.K)
                reps = transversal_within(c.H, c.K)
                msg_reps.append(reps)
                rate_bits += np.log2(len(reps))
        self.frozen_subgroups = tuple(frozen_subs)
        self.message_reps = tuple(msg_reps)
        self.th_reps = tuple(th_reps)
        self.rate_bits = float(rate_bits)
        self.side_bits = float(side_bits)
        self._kernels = {}

    @property
    def N(self):
        return 1 << self.n

    def message_radixes(self):
        return tuple(len(r) for r in self.message_reps)

    def side_radixes(self):
        return tuple(len(t) if c.side else 1
                     for c, t in zip(self.cells, self.th_reps))

    def role(self, i: int) -> str:
        c = self.cells[i]
        if c.side:
            return "side-info"
        if c.K != c.H:
            return "message"
        if not c.H.is_full():
            return "shaping"
        return "frozen"

    # ---- per-index kernels ----

    def _relations(self, i: int):
        """(n_anchors, fine, coarse) boolean q x q class matrices for index i.

        coarse[g, g'] holds when g and g' share the K-component (the set the
        source encoder samples over); fine additionally requires an equal
        message component (the set the source decoder argmaxes over / the
        channel encoder samples over).  Side cells use the H-component only.
        """
        key = i
        cached = self._kernels.get(key)
        if cached is not None:
            return cached
        g = self.group
        q = g.order
        c = self.cells[i]
        if c.side:
            k_of, _, _ = g.decompose_tables(c.H, c.H)
            same_h = k_of[:, None] == k_of[None, :]
            out = (c.H.order, same_h, same_h)
        else:
            k_of, m_of, _ = g.decompose_tables(c.K, c.H)
            coarse = k_of[:, None] == k_of[None, :]
            fine = coarse & (m_of[:, None] == m_of[None, :])
            n_anchor = c.K.order if self.mode == "source" else c.H.order
            out = (n_anchor, fine, coarse)
        self._kernels[key] = out
        return out

    def encoder_kernel(self, i: int):
        """(n_anchor_classes, R) with R[anchor] the allowed sampling mask."""
        n_anchor, fine, coarse = self._relations(i)
        if self.mode == "source":
            return n_anchor, coarse
        return n_anchor, fine

    def decoder_kernel(self, i: int):
        """Allowed argmax mask matrix, or None when the index is substituted."""
        c = self.cells[i]
        if c.side:
            return None
        _, fine, coarse = self._relations(i)
        return fine if self.mode == "source" else coarse

    # ---- serialization ----

    def to_dict(self) -> dict:
        subs = sorted({c.H for c in self.cells} | {c.K for c in self.cells}
                      | set(self.a_partition) | set(self.b_partition),
                      key=lambda s: s.sort_key())
        sub_index = {s: j for j, s in enumerate(subs)}
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "group": self.group.name,
            "n": self.n,
            "beta": self.beta,
            "delta": self.delta,
            "mode": self.mode,
            "subgroups": [list(s.elements) for s in subs],
            "cells": [[sub_index[c.H], sub_index[c.K], int(c.side)]
                      for c in self.cells],
            "a_partition": [[sub_index[s], list(v)]
                            for s, v in self.a_partition.items()],
            "b_partition": [[sub_index[s], list(v)]
                            for s, v in self.b_partition.items()],
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NestedConstruction":
        try:
            if data["format"] != FORMAT_NAME:
                raise ConstructionIOError(f"unknown format {data.get('format')!r}")
            if data["version"] != FORMAT_VERSION:
                raise ConstructionIOError(f"unsupported version {data['version']!r}")
            group = group_from_spec(data["group"])
            subs = [Subgroup(group, tuple(e)) for e in data["subgroups"]]
            cells = tuple(Cell(subs[h], subs[k], bool(s))
                          for h, k, s in data["cells"])
            a_part = {subs[j]: tuple(v) for j, v in data["a_partition"]}
            b_part = {subs[j]: tuple(v) for j, v in data["b_partition"]}
            return cls(group, int(data["n"]), float(data["beta"]),
                       float(data["delta"]), data["mode"], cells,
                       a_part, b_part, dict(data["metadata"]))
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ConstructionIOError(f"malformed construction data: {exc}") from exc

    def to_text(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_text(cls, text: str) -> "NestedConstruction":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConstructionIOError(f"not valid construction text: {exc}") from exc
        return cls.from_dict(data)

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    def __eq__(self, other):
        return (isinstance(other, NestedConstruction)
                and self.to_dict() == other.to_dict())


def nest_partitions(A: dict, B: dict, mode: str, beta: float,
                    delta: float, metadata=None) -> NestedConstruction:
    """Intersect the two subgroup partitions into per-index cells.

    ``A`` supplies H (the nesting subgroup), ``B`` supplies K (the frozen
    subgroup).  In source mode an index with K not<= H (impossible under
    exact parameters, possible under Monte Carlo noise) is reassigned to
    (H, K & H), shipping the doubtful components as message; in channel mode
    such an index becomes a side-information cell.
    """
    some = next(iter(A))
    group = some.group
    N = sum(len(v) for v in A.values())
    if N != sum(len(v) for v in B.values()):
        raise ValueError("partitions cover different index sets")
    h_of = {}
    for H, idxs in A.items():
        for i in idxs:
            h_of[i] = H
    k_of = {}
    for K, idxs in B.items():
        for i in idxs:
            k_of[i] = K
    cells = []
    reassigned = 0
    side_count = 0
    for i in range(N):
        H, K = h_of[i], k_of[i]
        if K.is_contained_in(H):
            cells.append(Cell(H, K))
        elif mode == "source":
            inter = group.subgroup(set(K.elements) & set(H.elements))
            cells.append(Cell(H, inter))
            reassigned += 1
        else:
            cells.append(Cell(H, K, side=True))
            side_count += 1
    meta = dict(metadata or {})
    meta.update({"reassigned": reassigned, "side_cells": side_count})
    return NestedConstruction(group, (N - 1).bit_length(), beta, delta, mode,
                              tuple(cells), dict(A), dict(B), meta)


def code_rate(construction: NestedConstruction):
    """(rate, cross_check) in bits per symbol.

    rate = sum over cells of log2(|H|/|K|)/N (side cells contribute zero);
    cross_check = sum_K |B_K| log2(q/|K|)/N - sum_H |A_H| log2(q/|H|)/N,
    which matches rate exactly when no reassignment or side cell exists.
    """
    N = construction.N
    q = construction.group.order
    b_term = sum(len(v) * np.log2(q / K.order)
                 for K, v in construction.b_partition.items())
    a_term = sum(len(v) * np.log2(q / H.order)
                 for H, v in construction.a_partition.items())
    return construction.rate_bits / N, float(b_term - a_term) / N
