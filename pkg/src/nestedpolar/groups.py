"""Finite Abelian groups as direct products of cyclic factors.

Elements are integer indices 0..q-1 in big-endian mixed radix over the cyclic
orders, so index order coincides with lexicographic order of the residue
tuples and the canonical (smallest) coset representative is simply the one
with the smallest index.  All arithmetic is table-driven so it vectorizes
over numpy arrays of element indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationBoundError, InvalidSubgroupError, NestingError

# exhaustive subgroup enumeration is only attempted below this group order
SUBGROUP_ENUM_BOUND = 64


class FiniteAbelianGroup:
    """Direct product Z_{n1} x ... x Z_{nk} with table-driven arithmetic."""

    def __init__(self, cyclic_orders):
        orders = tuple(int(m) for m in cyclic_orders)
        if not orders or any(m < 2 for m in orders):
            raise ValueError(f"cyclic orders must all be >= 2, got {orders!r}")
        self.cyclic_orders = orders
        self.order = 1
        for m in orders:
            self.order *= m
        # residues[i] is the tuple for element index i (lexicographic order)
        reps = np.array(list(itertools.product(*[range(m) for m in orders])),
                        dtype=np.int64)
        self._residues = reps
        places = np.ones(len(orders), dtype=np.int64)
        for i in range(len(orders) - 2, -1, -1):
            places[i] = places[i + 1] * orders[i + 1]
        self._places = places
        mod = np.array(orders, dtype=np.int64)
        summed = (reps[:, None, :] + reps[None, :, :]) % mod
        self.add_table = (summed * places).sum(axis=2)
        self.neg_table = ((-reps) % mod * places).sum(axis=1)
        self.sub_table = self.add_table[:, self.neg_table]
        for t in (self.add_table, self.neg_table, self.sub_table):
            t.setflags(write=False)
        self._subgroup_cache = None
        self._decompose_cache = {}

    # ---- element arithmetic (scalar or ndarray of indices) ----

    def add(self, a, b):
        return self.add_table[a, b]

    def neg(self, a):
        return self.neg_table[a]

    def sub(self, a, b):
        return self.sub_table[a, b]

    def element_tuple(self, i):
        return tuple(self._residues[int(i)])

    def element_index(self, t):
        t = tuple(int(v) for v in t)
        if len(t) != len(self.cyclic_orders):
            raise ValueError(f"tuple {t!r} has wrong arity for {self}")
        idx = 0
        for v, m, p in zip(t, self.cyclic_orders, self._places):
            idx += (v % m) * p
        return int(idx)

    @property
    def name(self):
        return "x".join(f"Z{m}" for m in self.cyclic_orders)

    def __repr__(self):
        return f"FiniteAbelianGroup({self.name}, q={self.order})"

    def __eq__(self, other):
        return (isinstance(other, FiniteAbelianGroup)
                and self.cyclic_orders == other.cyclic_orders)

    def __hash__(self):
        return hash(("FiniteAbelianGroup", self.cyclic_orders))

    # ---- subgroup machinery ----

    def subgroups(self, bound=SUBGROUP_ENUM_BOUND):
        if self.order > bound:
            raise EnumerationBoundError(
                f"group order {self.order} exceeds enumeration bound {bound}")
        if self._subgroup_cache is None:
            self._subgroup_cache = enumerate_subgroups(self, bound=bound)
        return self._subgroup_cache

    def trivial_subgroup(self):
        return Subgroup(self, (0,))

    def full_subgroup(self):
        return Subgroup(self, tuple(range(self.order)))

    def subgroup(self, elements):
        """Build a Subgroup from element indices or residue tuples."""
        idx = tuple(sorted({self.element_index(e) if isinstance(e, (tuple, list))
                            else int(e) for e in elements}))
        return Subgroup(self, idx)

    def decompose_tables(self, K: "Subgroup", H: "Subgroup"):
        """Per-element lookup tables (k_of, m_of, t_of) for g = k + m + t.

        k in K, m in T_{K<=H} (canonical transversal of K inside H), and
        t in T_H (canonical transversal of H in G).  Raises NestingError
        unless K <= H.
        """
        key = (K.elements, H.elements)
        cached = self._decompose_cache.get(key)
        if cached is not None:
            return cached
        if not K.is_contained_in(H):
            raise NestingError(f"{K} is not contained in {H}")
        q = self.order
        t_h = canonical_transversal(self, H).coset_reps
        t_kh = transversal_within(H, K)
        rep_h = np.empty(q, dtype=np.int64)
        for r in t_h:
            for h in H.elements:
                rep_h[self.add_table[r, h]] = r
        rep_kh = np.empty(q, dtype=np.int64)  # only H's positions matter
        for m in t_kh:
            for k in K.elements:
                rep_kh[self.add_table[m, k]] = m
        t_of = rep_h[np.arange(q)]
        h_part = self.sub_table[np.arange(q), t_of]
        m_of = rep_kh[h_part]
        k_of = self.sub_table[h_part, m_of]
        tables = (k_of, m_of, t_of)
        for t in tables:
            t.setflags(write=False)
        self._decompose_cache[key] = tables
        return tables


def group_from_spec(spec: str) -> FiniteAbelianGroup:
    """Parse strings like "Z4", "Z2xZ2", "Z8" into a group."""
    parts = spec.replace(" ", "").lower().split("x")
    orders = []
    for p in parts:
        if not p.startswith("z") or not p[1:].isdigit():
            raise ValueError(f"cannot parse group spec {spec!r}")
        orders.append(int(p[1:]))
    return FiniteAbelianGroup(orders)


@dataclass(frozen=True)
class Subgroup:
    """A subgroup given by its sorted element indices (validated)."""

    group: FiniteAbelianGroup
    elements: tuple

    def __post_init__(self):
        elems = tuple(sorted(int(e) for e in self.elements))
        object.__setattr__(self, "elements", elems)
        if not elems or elems[0] != 0:
            raise InvalidSubgroupError(f"{elems!r} does not contain the identity")
        eset = set(elems)
        if any(not 0 <= e < self.group.order for e in elems):
            raise InvalidSubgroupError(f"{elems!r} out of range for {self.group}")
        for a in elems:
            for b in elems:
                if int(self.group.add_table[a, b]) not in eset:
                    raise InvalidSubgroupError(f"{elems!r} not closed under +")
        if self.group.order % len(elems) != 0:
            raise InvalidSubgroupError(f"|H|={len(elems)} does not divide q")

    @property
    def order(self):
        return len(self.elements)

    def __contains__(self, g):
        return int(g) in set(self.elements)

    def is_contained_in(self, other: "Subgroup") -> bool:
        return set(self.elements) <= set(other.elements)

    def is_trivial(self):
        return self.order == 1

    def is_full(self):
        return self.order == self.group.order

    def element_tuples(self):
        return [self.group.element_tuple(e) for e in self.elements]

    def __repr__(self):
        return f"Subgroup({{{','.join(str(e) for e in self.elements)}}})"

    def sort_key(self):
        return (self.order, self.elements)


@dataclass(frozen=True)
class Transversal:
    """Coset representatives of ``subgroup`` inside ``ambient_order`` elements."""

    subgroup: Subgroup
    coset_reps: tuple
    ambient_order: int

    def __post_init__(self):
        if len(self.coset_reps) * self.subgroup.order != self.ambient_order:
            raise InvalidSubgroupError("transversal has wrong size")
        if 0 not in self.coset_reps:
            raise InvalidSubgroupError("canonical transversal must contain 0")


def _closure(group, seed):
    """Smallest subgroup (as frozenset of indices) containing ``seed``."""
    elems = set(seed) | {0}
    frontier = list(elems)
    while frontier:
        nxt = []
        for a in frontier:
            for b in list(elems):
                c = int(group.add_table[a, b])
                if c not in elems:
                    elems.add(c)
                    nxt.append(c)
        frontier = nxt
    return frozenset(elems)


def enumerate_subgroups(group: FiniteAbelianGroup, bound=SUBGROUP_ENUM_BOUND):
    """All subgroups, sorted by (order, element list).

    Exhaustive closure-based search; raises EnumerationBoundError when the
    group order exceeds ``bound``.
    """
    if group.order > bound:
        raise EnumerationBoundError(
            f"group order {group.order} exceeds enumeration bound {bound}")
    trivial = frozenset({0})
    found = {trivial}
    queue = [trivial]
    while queue:
        base = queue.pop()
        for g in range(group.order):
            if g in base:
                continue
            ext = _closure(group, base | {g})
            if ext not in found:
                found.add(ext)
                queue.append(ext)
    subs = [Subgroup(group, tuple(sorted(s))) for s in found]
    subs.sort(key=lambda s: s.sort_key())
    return subs


def canonical_transversal(group: FiniteAbelianGroup, H: Subgroup) -> Transversal:
    """Lexicographically smallest representative per coset of H in G; contains 0."""
    if H.group != group:
        raise InvalidSubgroupError(f"{H} is not a subgroup of {group}")
    seen = np.zeros(group.order, dtype=bool)
    reps = []
    for g in range(group.order):
        if not seen[g]:
            reps.append(g)
            seen[group.add_table[g, list(H.elements)]] = True
    return Transversal(H, tuple(reps), group.order)


def transversal_within(H: Subgroup, K: Subgroup) -> tuple:
    """Canonical transversal of K inside H (reps drawn from H, smallest first)."""
    if not K.is_contained_in(H):
        raise NestingError(f"{K} is not contained in {H}")
    group = H.group
    covered = set()
    reps = []
    for h in H.elements:  # ascending, so reps are canonical
        if h not in covered:
            reps.append(h)
            covered.update(int(group.add_table[h, k]) for k in K.elements)
    return tuple(reps)


def decompose(group: FiniteAbelianGroup, g, K: Subgroup, H: Subgroup):
    """Unique split g = k + m + t with k in K, m in T_{K<=H}, t in T_H."""
    k_of, m_of, t_of = group.decompose_tables(K, H)
    g = np.asarray(g)
    return k_of[g], m_of[g], t_of[g]
