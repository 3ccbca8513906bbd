"""Discrete memoryless channels with group-valued inputs.

A channel is a row-stochastic matrix W(y|x) whose rows are indexed by group
elements.  This module provides the information/distance parameters used by
the multilevel construction (symmetric capacity, per-shift Bhattacharyya
parameters Z_d and their subgroup sums Z^H), Arikan's one-step transforms
realized additively over the group, stochastic degradation, and the two
test-channel factories that turn a joint source or a (p_X, W) pair into the
artificial channel pair the nested code is built from.

Probabilities stay in the linear domain; transforms renormalize rows and
flush entries below 1e-300 to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CompositionError, SynthesisSizeError
from .groups import FiniteAbelianGroup, Subgroup, canonical_transversal

FLUSH = 1e-300
ROW_SUM_TOL = 1e-9
TRANSFORM_SIZE_BOUND = 10 ** 6


class Dmc:
    """Channel W(y|x) with x in a finite Abelian group; immutable."""

    def __init__(self, input_group: FiniteAbelianGroup, probs, normalize=False):
        probs = np.array(probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape[0] != input_group.order:
            raise ValueError(
                f"probs must be ({input_group.order}, M), got {probs.shape}")
        if np.any(probs < 0):
            raise ValueError("negative channel probabilities")
        probs[probs < FLUSH] = 0.0
        sums = probs.sum(axis=1)
        if normalize:
            if np.any(sums <= 0):
                raise ValueError("cannot normalize an all-zero row")
            probs /= sums[:, None]
        elif np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            raise ValueError(f"rows must sum to 1 (max dev {np.max(np.abs(sums - 1)):.3g})")
        probs.setflags(write=False)
        self.input_group = input_group
        self.probs = probs

    @property
    def q(self):
        return self.input_group.order

    @property
    def output_size(self):
        return self.probs.shape[1]

    def __repr__(self):
        return f"Dmc({self.input_group.name} -> {self.output_size} outputs)"


# ---- constructors ----

def bsc(p: float) -> Dmc:
    g = FiniteAbelianGroup([2])
    return Dmc(g, [[1 - p, p], [p, 1 - p]])


def bec(eps: float) -> Dmc:
    """Binary erasure channel; output 2 is the erasure symbol."""
    g = FiniteAbelianGroup([2])
    return Dmc(g, [[1 - eps, 0, eps], [0, 1 - eps, eps]])


def qsc(group, p: float) -> Dmc:
    """q-ary symmetric channel over ``group`` (or Z_q when given an int)."""
    if isinstance(group, int):
        group = FiniteAbelianGroup([group])
    q = group.order
    probs = np.full((q, q), p / (q - 1))
    np.fill_diagonal(probs, 1 - p)
    return Dmc(group, probs)


def identity_channel(group) -> Dmc:
    return Dmc(group, np.eye(group.order))


def useless_channel(group, output_size=1) -> Dmc:
    return Dmc(group, np.full((group.order, output_size), 1.0 / output_size))


def random_channel(group, output_size, rng) -> Dmc:
    """Rows drawn from a flat Dirichlet; used by tests and verify."""
    return Dmc(group, rng.dirichlet(np.ones(output_size), size=group.order))


# ---- scalar parameters ----

def _entropy_bits(p):
    p = np.asarray(p, dtype=np.float64)
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def symmetric_capacity(W: Dmc) -> float:
    """I(X;Y) in bits with X uniform on the input group."""
    y = W.probs.mean(axis=0)
    h_y_given_x = np.mean([_entropy_bits(row) for row in W.probs])
    return _entropy_bits(y) - h_y_given_x


def pairwise_bhattacharyya(W: Dmc, x: int, x_tilde: int) -> float:
    if int(x) == int(x_tilde):
        raise ValueError("pairwise Bhattacharyya needs two distinct inputs")
    return float(np.sqrt(W.probs[int(x)] * W.probs[int(x_tilde)]).sum())


def bhattacharyya(W: Dmc) -> float:
    """Average of Z(W_{x,x~}) over ordered pairs of distinct inputs."""
    q = W.q
    s = np.sqrt(W.probs)
    gram = s @ s.T
    return float((gram.sum() - np.trace(gram)) / (q * (q - 1)))


def z_d(W: Dmc, d: int) -> float:
    """Z_d(W) = (1/q) sum_x sum_y sqrt(W(y|x) W(y|x+d))."""
    shifted = W.probs[W.input_group.add_table[:, int(d)]]
    return float(np.sqrt(W.probs * shifted).sum() / W.q)


def z_d_all(W: Dmc) -> np.ndarray:
    return np.array([z_d(W, d) for d in range(W.q)])


def z_subgroup(W: Dmc, H: Subgroup) -> float:
    """Z^H(W) = sum over d outside H of Z_d(W)."""
    return float(sum(z_d(W, d) for d in range(W.q) if d not in H))


def distance_params(W: Dmc, d: int):
    """(D_d, D~_d): total-variation-style distances between d-shifted rows.

    D_d = (1/2q) sum_{u,x} |W(x|u) - W(x|u+d)| and D~_d uses the squared
    differences.  Parameters only; nothing downstream consumes them.
    """
    shifted = W.probs[W.input_group.add_table[:, int(d)]]
    diff = W.probs - shifted
    q = W.q
    return (float(np.abs(diff).sum() / (2 * q)),
            float((diff ** 2).sum() / (2 * q)))


def conditional_capacity(W: Dmc, H: Subgroup) -> float:
    """I([X]_H ; Y | [X]_{T_H}) in bits, X uniform.

    Splitting uniform X = [X]_H + [X]_{T_H} over the canonical transversal;
    equals 0 for the trivial subgroup and the symmetric capacity for H = G.
    """
    group = W.input_group
    reps = canonical_transversal(group, H).coset_reps
    h_y_given_x = np.mean([_entropy_bits(row) for row in W.probs])
    acc = 0.0
    for r in reps:
        rows = W.probs[group.add_table[r, list(H.elements)]]
        acc += _entropy_bits(rows.mean(axis=0))
    return acc / len(reps) - h_y_given_x


# ---- transforms and degradation ----

def minus_transform(W: Dmc, size_bound=TRANSFORM_SIZE_BOUND) -> Dmc:
    """W-(y1,y2 | u1) = sum_{u2} (1/q) W(y1|u1+u2) W(y2|u2).

    Output symbol (y1, y2) is index-encoded as y1*M + y2; no merging.
    """
    q, M = W.q, W.output_size
    if q * M * M > size_bound:
        raise SynthesisSizeError(f"minus transform table {q}x{M * M} exceeds bound")
    add = W.input_group.add_table
    out = np.zeros((q, M * M))
    for u2 in range(q):
        out += np.einsum("am,n->amn", W.probs[add[:, u2]], W.probs[u2]).reshape(q, M * M)
    return Dmc(W.input_group, out / q, normalize=True)


def plus_transform(W: Dmc, size_bound=TRANSFORM_SIZE_BOUND) -> Dmc:
    """W+(y1,y2,u1 | u2) = (1/q) W(y1|u1+u2) W(y2|u2).

    Output (y1, y2, u1) is index-encoded as (y1*M + y2)*q + u1.
    """
    q, M = W.q, W.output_size
    if q * M * M * q > size_bound:
        raise SynthesisSizeError(f"plus transform table {q}x{M * M * q} exceeds bound")
    add = W.input_group.add_table
    out = np.zeros((q, M, M, q))
    for u1 in range(q):
        out[:, :, :, u1] = np.einsum("am,an->amn", W.probs[add[u1, :]],
                                     W.probs) / q
    return Dmc(W.input_group, out.reshape(q, M * M * q), normalize=True)


def degrade(W2: Dmc, link) -> Dmc:
    """Compose W2 with a channel on its output alphabet: W1 = W2 o link."""
    mat = link.probs if isinstance(link, Dmc) else np.asarray(link, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != W2.output_size:
        raise CompositionError(
            f"link input alphabet {mat.shape} does not match output size {W2.output_size}")
    if np.any(mat < 0) or np.any(np.abs(mat.sum(axis=1) - 1) > ROW_SUM_TOL):
        raise CompositionError("link is not row-stochastic")
    return Dmc(W2.input_group, W2.probs @ mat, normalize=True)


def reduce_outputs(W: Dmc) -> Dmc:
    """Merge output symbols with proportional likelihood columns.

    Exact sufficient-statistic compaction: preserves every Z_d, Z^H, Ī and
    degradation relation.  Zero-probability outputs are dropped.
    """
    cols = W.probs.T
    sums = cols.sum(axis=1)
    keep = sums > 0
    keys = {}
    merged = []
    for col, s in zip(cols[keep], sums[keep]):
        key = tuple(np.round(col / s, 12))
        at = keys.get(key)
        if at is None:
            keys[key] = len(merged)
            merged.append(col.copy())
        else:
            merged[at] += col
    return Dmc(W.input_group, np.array(merged).T, normalize=True)


# ---- joint sources and test channels ----

@dataclass(frozen=True)
class JointSource:
    """Joint law p_XU(x, u): x in a finite source alphabet, u in ``group``."""

    group: FiniteAbelianGroup
    probs: np.ndarray  # shape (|X|, q)

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape[1] != self.group.order:
            raise ValueError(f"joint must be (|X|, {self.group.order})")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > ROW_SUM_TOL:
            raise ValueError("joint must be a probability mass function")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def x_size(self):
        return self.probs.shape[0]

    def x_marginal(self):
        return self.probs.sum(axis=1)

    def u_marginal(self):
        return self.probs.sum(axis=0)

    def mutual_information(self) -> float:
        return (_entropy_bits(self.x_marginal()) + _entropy_bits(self.u_marginal())
                - _entropy_bits(self.probs.ravel()))


def joint_from_forward(group, p_x, forward) -> JointSource:
    """p_XU(x,u) = p_X(x) * forward(u|x); forward rows indexed by x."""
    p_x = np.asarray(p_x, dtype=np.float64)
    forward = np.asarray(forward, dtype=np.float64)
    return JointSource(group, p_x[:, None] * forward)


def dsbs(crossover: float) -> JointSource:
    """Doubly symmetric binary source: X uniform, U = X + noise(crossover)."""
    g = FiniteAbelianGroup([2])
    a = float(crossover)
    return JointSource(g, np.array([[(1 - a) / 2, a / 2], [a / 2, (1 - a) / 2]]))


def source_test_channels(joint: JointSource):
    """Artificial channel pair for quantization.

    W_c(z|s) = p_U(z - s) on G -> G and W_s((x,z)|s) = p_XU(x, z - s) on
    G -> X x G with output (x, z) encoded as x*q + z.  Ī(W_c) = log q - H(U)
    and Ī(W_s) = log q - H(U|X); the difference is I(X;U).
    """
    group = joint.group
    q = group.order
    p_u = joint.u_marginal()
    shift = group.sub_table.T  # shift[s, z] = z - s
    w_c = Dmc(group, p_u[shift])
    w_s = np.empty((q, joint.x_size * q))
    for s in range(q):
        w_s[s] = joint.probs[:, group.sub_table[:, s]].ravel()
    return w_c, Dmc(group, w_s)


def source_degradation_link(joint: JointSource) -> np.ndarray:
    """Deterministic link (x,z) -> z showing W_c is degraded w.r.t. W_s."""
    q = joint.group.order
    link = np.zeros((joint.x_size * q, q))
    for x in range(joint.x_size):
        link[x * q:(x + 1) * q] = np.eye(q)
    return link


def channel_test_channels(p_x, W: Dmc):
    """Artificial channel pair for data transmission with input law p_x.

    W_s(z|u) = p_X(z - u) on G -> G and W_c((y,z)|u) = p_XY(z - u, y) on
    G -> Y x G with output (y, z) encoded as y*q + z.  Ī(W_s) = log q - H(X)
    and Ī(W_c) = log q - H(X|Y); the difference is I(X;Y).
    """
    group = W.input_group
    q = group.order
    p_x = np.asarray(p_x, dtype=np.float64)
    if p_x.shape != (q,) or np.any(p_x < 0) or abs(p_x.sum() - 1) > ROW_SUM_TOL:
        raise ValueError(f"p_x must be a pmf over {q} group elements")
    shift = group.sub_table.T  # shift[u, z] = z - u
    w_s = Dmc(group, p_x[shift])
    M = W.output_size
    p_xy = p_x[:, None] * W.probs  # (x, y)
    w_c = np.empty((q, M * q))
    for u in range(q):
        x_of_z = group.sub_table[:, u]  # z -> x = z - u
        w_c[u] = p_xy[x_of_z].T.ravel()  # (y, z) flattened as y*q + z
    return w_s, Dmc(group, w_c)


def channel_degradation_link(W: Dmc) -> np.ndarray:
    """Deterministic link (y,z) -> z showing W_s is degraded w.r.t. W_c."""
    q = W.input_group.order
    link = np.zeros((W.output_size * q, q))
    for y in range(W.output_size):
        link[y * q:(y + 1) * q] = np.eye(q)
    return link
