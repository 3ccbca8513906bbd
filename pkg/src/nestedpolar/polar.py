"""Group-valued polar transform and successive-cancellation engine.

The transform is x = v G_N with G_N = B_N F^{xn}: bit-reversal permutation of
the inputs followed by the recursive butterfly (a, b) -> (a + b, b) over
contiguous halves, addition taken in the input group.  For N = 2 this is
(v1, v2) -> (v1 + v2, v2).

The SC engine computes, for each input index in order, the exact conditional
probability vector of v_i given the observations and the already-decided
prefix.  It is batched: likelihood tensors have shape (B, N, q) and decisions
are made for all B blocks at once through a callback, which is what makes
Monte Carlo construction and multi-block encoding affordable in numpy.
Probabilities stay linear with per-node renormalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dmc import Dmc
from .errors import InconsistentEvidenceError, SynthesisSizeError
from .groups import FiniteAbelianGroup

SYNTH_SIZE_BOUND = 10 ** 6


@dataclass(frozen=True)
class TransformSpec:
    """Block parameters: N = 2**n inputs over ``group``."""

    group: FiniteAbelianGroup
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be >= 0")

    @property
    def N(self):
        return 1 << self.n


def bit_reversal(n: int) -> np.ndarray:
    """Permutation array: position j holds the bit-reversed index of j."""
    N = 1 << n
    perm = np.zeros(N, dtype=np.int64)
    for j in range(N):
        perm[j] = int(format(j, f"0{n}b")[::-1], 2) if n else 0
    return perm


def polar_transform(group: FiniteAbelianGroup, v) -> np.ndarray:
    """x = v G_N along the last axis of ``v`` (element indices)."""
    v = np.asarray(v, dtype=np.int64)
    N = v.shape[-1]
    n = N.bit_length() - 1
    if 1 << n != N:
        raise ValueError(f"block length {N} is not a power of two")
    x = v[..., bit_reversal(n)].copy()
    add = group.add_table
    size = N
    while size > 1:
        half = size // 2
        blocks = x.reshape(-1, N // size, size)
        blocks[:, :, :half] = add[blocks[:, :, :half], blocks[:, :, half:]]
        size = half
    return x.reshape(v.shape)


def inverse_polar_transform(group: FiniteAbelianGroup, x) -> np.ndarray:
    """v with polar_transform(group, v) == x; exact inverse over the group."""
    x = np.asarray(x, dtype=np.int64)
    N = x.shape[-1]
    n = N.bit_length() - 1
    if 1 << n != N:
        raise ValueError(f"block length {N} is not a power of two")
    v = x.copy()
    sub = group.sub_table
    size = 2
    while size <= N:
        half = size // 2
        blocks = v.reshape(-1, N // size, size)
        blocks[:, :, :half] = sub[blocks[:, :, :half], blocks[:, :, half:]]
        size *= 2
    return v.reshape(x.shape)[..., bit_reversal(n)]


# ---- successive cancellation ----

def _normalize(a, where=""):
    s = a.sum(axis=1, keepdims=True)
    if np.any(s <= 0):
        raise InconsistentEvidenceError(
            f"zero conditional mass{' at ' + where if where else ''}")
    return a / s


def _sc_node(group, lik):
    """Recursive coroutine over one transform block.

    ``lik`` has shape (B, m, q).  Yields conditional matrices (B, q) for this
    block's inputs in SC order; the caller sends back the decided values (B,).
    Returns the decided inputs as a (B, m) array.
    """
    B, m, q = lik.shape
    if m == 1:
        v = yield _normalize(lik[:, 0, :])
        return np.asarray(v, dtype=np.int64).reshape(B, 1)
    half = m // 2
    left = _sc_node(group, lik[:, :half, :])
    right = _sc_node(group, lik[:, half:, :])
    p_left = next(left)
    p_right = next(right)
    add = group.add_table
    out = np.empty((B, m), dtype=np.int64)
    for k in range(half):
        # v_{2k}: marginalize the partner over the pair law
        joint = p_left[:, add] * p_right[:, None, :]  # (B, q_w, q_t)
        v1 = yield _normalize(joint.sum(axis=2))
        v1 = np.asarray(v1, dtype=np.int64)
        out[:, 2 * k] = v1
        # v_{2k+1}: pin the combined input at v1 + t
        pinned = np.take_along_axis(p_left, add[v1], axis=1)
        v2 = yield _normalize(pinned * p_right)
        v2 = np.asarray(v2, dtype=np.int64)
        out[:, 2 * k + 1] = v2
        p_left = _advance(left, add[v1, v2])
        p_right = _advance(right, v2)
    return out


def _advance(gen, values):
    try:
        return gen.send(values)
    except StopIteration:
        return None


def sc_pass(group: FiniteAbelianGroup, likelihoods, decide) -> np.ndarray:
    """Run one batched SC pass.

    likelihoods: (B, N, q) nonnegative, every (block, position) row must have
    positive mass.  ``decide(i, cond)`` receives the index i (0-based) and the
    (B, q) conditional matrix P(v_i | obs, v_0^{i-1}) and returns the decided
    values as a (B,) integer array.  Returns all decisions, shape (B, N).
    """
    lik = np.asarray(likelihoods, dtype=np.float64)
    if lik.ndim != 3:
        raise ValueError("likelihoods must have shape (B, N, q)")
    B, N, q = lik.shape
    if q != group.order:
        raise ValueError(f"likelihood width {q} != group order {group.order}")
    if N & (N - 1):
        raise ValueError(f"block length {N} is not a power of two")
    gen = _sc_node(group, lik)
    cond = next(gen)
    i = 0
    while True:
        v = decide(i, cond)
        i += 1
        try:
            cond = gen.send(np.asarray(v, dtype=np.int64))
        except StopIteration as stop:
            return stop.value


def sc_conditional(group: FiniteAbelianGroup, likelihoods, prefix, i) -> np.ndarray:
    """Exact P(v_i = g | observations, v_0^{i-1} = prefix) as a length-q vector.

    ``likelihoods`` is (N, q); ``prefix`` holds the first i decided values.
    Single-block convenience wrapper around the batched engine.
    """
    lik = np.asarray(likelihoods, dtype=np.float64)[None, :, :]
    prefix = np.asarray(prefix, dtype=np.int64)
    if len(prefix) != i:
        raise ValueError(f"prefix length {len(prefix)} != i = {i}")
    if not 0 <= i < lik.shape[1]:
        raise ValueError(f"index {i} out of range")
    result = {}

    def replay(j, cond):
        if j < i:
            return prefix[j:j + 1]
        if j == i:
            result["cond"] = cond[0].copy()
        return np.argmax(cond, axis=1)  # arbitrary but valid continuation

    sc_pass(group, lik, replay)
    return result["cond"]


def likelihood_table(W: Dmc, observations) -> np.ndarray:
    """Stack per-position likelihood vectors l_j(g) = W(y_j | g)."""
    y = np.asarray(observations, dtype=np.int64)
    return W.probs.T[y]


# ---- exact synthesized channels (test oracle) ----

def synthesize_exact(W: Dmc, n: int, size_bound=SYNTH_SIZE_BOUND):
    """All N = 2**n synthesized channels by brute-force enumeration.

    Channel i (0-based) has output alphabet (observation tuple, prefix tuple)
    index-encoded as obs_index * q**i + prefix_index, with the exact law

        W_N^(i)(y, v_0^{i-1} | v_i)
            = sum over v_{i+1}^{N-1} of (1/q^{N-1}) prod_j W(y_j | (vG)_j).

    Only feasible for tiny N; guarded by ``size_bound`` on total table cells.
    """
    group = W.input_group
    q, M = group.order, W.output_size
    N = 1 << n
    total = sum(q * (M ** N) * (q ** i) for i in range(N))
    if total > size_bound:
        raise SynthesisSizeError(
            f"exact synthesis needs {total} cells > bound {size_bound}")
    v_all = np.array(np.meshgrid(*[range(q)] * N, indexing="ij"),
                     dtype=np.int64).reshape(N, -1).T  # lexicographic, v_0 major
    x_all = polar_transform(group, v_all)
    tables = [np.zeros((q, M ** N, q ** i)) for i in range(N)]
    scale = 1.0 / q ** (N - 1)
    for v, x in zip(v_all, x_all):
        obs = W.probs[x[0]]
        for j in range(1, N):
            obs = (obs[:, None] * W.probs[x[j]][None, :]).ravel()
        prefix_idx = 0
        for i in range(N):
            tables[i][v[i], :, prefix_idx] += obs * scale
            prefix_idx = prefix_idx * q + v[i]
    return [Dmc(group, t.reshape(q, -1), normalize=False) for t in tables]
