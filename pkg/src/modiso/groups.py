"""Finite subgroup machinery for GL2(Z/n).

Subgroups are stored as canonically sorted element-key lists (see
``zmatrix.mat_encode``), which makes identity, hashing and caching
order-independent and bit-stable across runs.  The subgroup lattice is
enumerated in two phases:

 * every subgroup U containing -I whose quotient U/{+-I} is perfect lies in
   the stable derived core of the ambient group, so those are found by a
   plain adjoin-one-element fixpoint restricted to that (small) core;
 * every other subgroup has a normal subgroup of prime index that still
   contains -I, so it arises from a smaller lattice member H by adjoining a
   normalizer element g with g^p in H.  Iterating that to a fixpoint from the
   core subgroups yields the full lattice.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

from . import ambient as amb
from .zmatrix import (
    ModulusMismatch,
    NotInvertible,
    ZMatrix,
    mat_decode,
    mat_det,
    mat_encode,
    mat_inv,
)

DEFAULT_FEASIBILITY_BOUND = 250_000


class TooLarge(ValueError):
    """Requested ambient group exceeds the configured feasibility bound."""


class NotSubgroup(ValueError):
    """Index/inclusion requested for a pair that is not nested."""


def _prime_factors(m: int) -> list[int]:
    out = []
    p = 2
    while p * p <= m:
        if m % p == 0:
            out.append(p)
            while m % p == 0:
                m //= p
        p += 1
    if m > 1:
        out.append(m)
    return out


class MatrixGroup:
    """A subgroup of GL2(Z/n) with a canonical sorted element list."""

    __slots__ = ("modulus", "_keys", "_generators", "_key_bytes", "_gen_keys")

    def __init__(self, modulus: int, keys: np.ndarray, generators=None):
        amb.check_vector_modulus(modulus)
        self.modulus = modulus
        keys = np.asarray(keys, dtype=np.int64)
        keys.setflags(write=False)
        self._keys = keys
        self._generators = tuple(generators) if generators is not None else None
        self._key_bytes = None
        self._gen_keys = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_elements(cls, mats, n: int | None = None, validate: bool = True):
        mats = list(mats)
        if n is None:
            if not mats:
                raise ValueError("empty element list needs an explicit modulus")
            n = mats[0].modulus
        keys = []
        for m in mats:
            if isinstance(m, ZMatrix):
                if m.modulus != n:
                    raise ModulusMismatch(f"moduli {m.modulus} != {n}")
                keys.append(mat_encode(m))
            else:
                keys.append(int(m))
        arr = np.unique(np.array(sorted(keys), dtype=np.int64))
        grp = cls(n, arr)
        if validate:
            grp._validate()
        return grp

    def _validate(self):
        n = self.modulus
        dets = amb.det_keys(self._keys, n)
        if np.any(np.gcd(dets, n) != 1):
            raise NotInvertible("element list contains a singular matrix")
        ident = amb.pack_keys(1, 0, 0, 1, n)
        if ident not in self:
            raise ValueError("element list does not contain the identity")
        closed = _closure_keys(self.generating_keys(), n)
        if len(closed) != len(self._keys) or np.any(closed != self._keys):
            raise ValueError("element list is not closed under products")

    # -- basic protocol ------------------------------------------------------

    @property
    def order(self) -> int:
        return len(self._keys)

    def __len__(self) -> int:
        return len(self._keys)

    @property
    def element_keys(self) -> np.ndarray:
        return self._keys

    @property
    def elements(self) -> tuple[ZMatrix, ...]:
        return tuple(mat_decode(int(k), self.modulus) for k in self._keys)

    @property
    def generators(self):
        return self._generators

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, m) -> bool:
        if isinstance(m, ZMatrix):
            if m.modulus != self.modulus:
                return False
            m = mat_encode(m)
        return self.contains_key(int(m))

    def contains_key(self, key: int) -> bool:
        i = int(np.searchsorted(self._keys, key))
        return i < len(self._keys) and int(self._keys[i]) == key

    @property
    def key_bytes(self) -> bytes:
        if self._key_bytes is None:
            self._key_bytes = self._keys.astype(">i8").tobytes()
        return self._key_bytes

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MatrixGroup)
            and self.modulus == other.modulus
            and self.key_bytes == other.key_bytes
        )

    def __hash__(self) -> int:
        return hash((self.modulus, self.key_bytes))

    def __repr__(self) -> str:
        return f"MatrixGroup(mod {self.modulus}, order {self.order})"

    # -- derived data --------------------------------------------------------

    def generating_keys(self) -> list[int]:
        """A small deterministic generating set (keys)."""
        if self._gen_keys is None:
            if self._generators is not None:
                self._gen_keys = [mat_encode(g) for g in self._generators]
            else:
                self._gen_keys = _small_generating_keys(self._keys, self.modulus)
        return self._gen_keys

    def generating_matrices(self) -> tuple[ZMatrix, ...]:
        return tuple(mat_decode(k, self.modulus) for k in self.generating_keys())

    def det_image(self) -> tuple[int, ...]:
        dets = np.unique(amb.det_keys(self._keys, self.modulus))
        return tuple(int(x) for x in dets)

    @property
    def contains_minus_identity(self) -> bool:
        return self.contains_key(amb.pack_keys(-1, 0, 0, -1, self.modulus))

    def is_subgroup_of(self, other: "MatrixGroup") -> bool:
        if self.modulus != other.modulus:
            return False
        pos = np.searchsorted(other._keys, self._keys)
        pos = np.minimum(pos, len(other._keys) - 1)
        return bool(np.all(other._keys[pos] == self._keys))

    def conjugated_by(self, h: ZMatrix) -> "MatrixGroup":
        if h.modulus != self.modulus:
            raise ModulusMismatch(f"moduli {h.modulus} != {self.modulus}")
        if not mat_det(h).is_unit():
            raise NotInvertible("conjugator must be invertible")
        n = self.modulus
        hk = np.int64(mat_encode(h))
        hik = np.int64(mat_encode(mat_inv(h)))
        conj = amb.mul_keys(amb.mul_keys(hk, self._keys, n), hik, n)
        gens = None
        if self._generators is not None:
            gens = tuple(h * g * mat_inv(h) for g in self._generators)
        return MatrixGroup(n, np.sort(conj), gens)

    def intersection(self, other: "MatrixGroup") -> "MatrixGroup":
        if self.modulus != other.modulus:
            raise ModulusMismatch(f"moduli {self.modulus} != {other.modulus}")
        keys = np.intersect1d(self._keys, other._keys)
        return MatrixGroup(self.modulus, keys)


def plus_minus_identity(n: int) -> MatrixGroup:
    """The subgroup {+-I} (trivial when n <= 2)."""
    keys = {amb.pack_keys(1, 0, 0, 1, n), amb.pack_keys(-1, 0, 0, -1, n)}
    return MatrixGroup(n, np.array(sorted(keys), dtype=np.int64))


def gl2(n: int, feasibility_bound: int = DEFAULT_FEASIBILITY_BOUND) -> MatrixGroup:
    _check_feasible(n, feasibility_bound)
    return MatrixGroup(n, amb.gl2_keys(n))


def sl2(n: int, feasibility_bound: int = DEFAULT_FEASIBILITY_BOUND) -> MatrixGroup:
    _check_feasible(n, feasibility_bound)
    return MatrixGroup(n, amb.sl2_keys(n))


def _check_feasible(n: int, bound: int):
    order = amb.gl2_order(n)
    if order > bound:
        raise TooLarge(
            f"|GL2(Z/{n})| = {order} exceeds the feasibility bound {bound}"
        )


# -- closure ---------------------------------------------------------------


def _closure_keys(gen_keys, n: int, max_elements: int | None = None) -> np.ndarray:
    """BFS closure on packed keys; works at any modulus without the ambient."""
    amb.check_vector_modulus(n)
    ident = amb.pack_keys(1, 0, 0, 1, n)
    gens = sorted({int(g) for g in gen_keys} - {ident})
    if not gens:
        return np.array([ident], dtype=np.int64)
    garr = np.array(gens, dtype=np.int64)
    garr = np.unique(np.concatenate([garr, amb.inv_keys(garr, n)]))
    seen = {ident}
    frontier = np.array([ident], dtype=np.int64)
    while frontier.size:
        prods = np.unique(amb.mul_keys(frontier[:, None], garr[None, :], n))
        new = [int(p) for p in prods.tolist() if p not in seen]
        seen.update(new)
        if max_elements is not None and len(seen) > max_elements:
            raise TooLarge(f"closure exceeded {max_elements} elements")
        frontier = np.array(new, dtype=np.int64)
    return np.array(sorted(seen), dtype=np.int64)


def _small_generating_keys(keys, n: int) -> list[int]:
    target = set(int(x) for x in keys)
    ident = amb.pack_keys(1, 0, 0, 1, n)
    gens: list[int] = []
    have = {ident}
    while len(have) < len(target):
        x = min(target - have)
        gens.append(x)
        have = set(int(v) for v in _closure_keys(gens, n))
    return gens


def closure(gens, n: int | None = None) -> MatrixGroup:
    """Smallest subgroup of GL2(Z/n) containing the given matrices."""
    gens = list(gens)
    if n is None:
        if not gens:
            raise ValueError("closure of an empty set needs an explicit modulus")
        n = gens[0].modulus
    keys = []
    for g in gens:
        if g.modulus != n:
            raise ModulusMismatch(f"moduli {g.modulus} != {n}")
        if not mat_det(g).is_unit():
            raise NotInvertible(f"generator {g!r} is not invertible")
        keys.append(mat_encode(g))
    return MatrixGroup(n, _closure_keys(keys, n), generators=tuple(gens))


# -- double cosets -----------------------------------------------------------


@dataclass(frozen=True)
class DoubleCoset:
    """One H g G orbit: canonical (minimal-key) representative and size."""

    left: MatrixGroup
    right: MatrixGroup
    representative: ZMatrix
    size: int


def double_cosets(
    H: MatrixGroup,
    G: MatrixGroup,
    feasibility_bound: int = DEFAULT_FEASIBILITY_BOUND,
) -> list[DoubleCoset]:
    """All double cosets HgG in GL2(Z/n), canonically ordered."""
    if H.modulus != G.modulus:
        raise ModulusMismatch(f"moduli {H.modulus} != {G.modulus}")
    n = H.modulus
    _check_feasible(n, feasibility_bound)
    A = amb.ambient(n)
    hg = [int(A.index_of_key(k)) for k in H.generating_keys()]
    gg = [int(A.index_of_key(k)) for k in G.generating_keys()]
    labels = A.partition_labels(hg, gg)
    reps, counts = np.unique(labels, return_counts=True)
    out = []
    for r, c in zip(reps, counts):
        rep = mat_decode(int(A.keys[int(r)]), n)
        out.append(DoubleCoset(H, G, rep, int(c)))
    return out


def double_coset_of(
    g: ZMatrix,
    H: MatrixGroup,
    G: MatrixGroup,
) -> DoubleCoset:
    """The double coset HgG containing g, by direct orbit growth."""
    if not (g.modulus == H.modulus == G.modulus):
        raise ModulusMismatch("moduli of g, H, G differ")
    n = g.modulus
    hk = H.element_keys
    orbit = np.unique(
        amb.mul_keys(
            amb.mul_keys(hk[:, None], np.int64(mat_encode(g)), n)[:, None],
            G.element_keys[None, :],
            n,
        )
    )
    rep = mat_decode(int(orbit[0]), n)
    return DoubleCoset(H, G, rep, int(len(orbit)))


# -- elementwise set algebra ---------------------------------------------


def subset_product(S, T) -> list[ZMatrix]:
    """{s t : s in S, t in T}, deduplicated and canonically sorted."""
    S = list(S)
    T = list(T)
    if not S or not T:
        return []
    n = S[0].modulus
    amb.check_vector_modulus(n)
    for m in S + T:
        if m.modulus != n:
            raise ModulusMismatch("subset product needs one common modulus")
    sk = np.array([mat_encode(m) for m in S], dtype=np.int64)
    tk = np.array([mat_encode(m) for m in T], dtype=np.int64)
    prod = np.unique(amb.mul_keys(sk[:, None], tk[None, :], n))
    return [mat_decode(int(k), n) for k in prod]


def index(G: MatrixGroup, H: MatrixGroup) -> int:
    """[G : H]; raises NotSubgroup unless H is contained in G."""
    if G.modulus != H.modulus or not H.is_subgroup_of(G):
        raise NotSubgroup("H is not a subgroup of G")
    return G.order // H.order


def intersect_sl2(H: MatrixGroup) -> MatrixGroup:
    dets = amb.det_keys(H.element_keys, H.modulus)
    keys = H.element_keys[dets == 1 % H.modulus]
    return MatrixGroup(H.modulus, keys)


def normalizer(
    H: MatrixGroup, feasibility_bound: int = DEFAULT_FEASIBILITY_BOUND
) -> MatrixGroup:
    """{g in GL2(Z/n) : g H g^-1 = H}."""
    n = H.modulus
    _check_feasible(n, feasibility_bound)
    A = amb.ambient(n)
    sub = A.index_of_key(H.element_keys)
    gens = [int(A.index_of_key(k)) for k in H.generating_keys()]
    norm = A.normalizer_indices(sub, gens)
    return MatrixGroup(n, A.keys[norm])


def kernel_product_check(
    n: int,
    m: int,
    L: int,
    feasibility_bound: int = DEFAULT_FEASIBILITY_BOUND,
) -> bool:
    """Inside GL2(Z/L): does (ker pi_n)(ker pi_m) equal ker pi_gcd(n,m)?"""
    if L % n != 0 or L % m != 0:
        raise ValueError(f"{n} and {m} must both divide {L}")
    _check_feasible(L, feasibility_bound)
    keys = amb.gl2_keys(L)

    def kernel_keys(d: int) -> np.ndarray:
        ident = amb.pack_keys(1, 0, 0, 1, d)
        red = amb.pack_keys(*amb.unpack_keys(keys, L), d)
        return keys[red == ident]

    kn = kernel_keys(n)
    km = kernel_keys(m)
    target = kernel_keys(gcd(n, m))
    prod = np.unique(amb.mul_keys(kn[:, None], km[None, :], L))
    return len(prod) == len(target) and bool(np.all(prod == target))


# -- the subgroup lattice ----------------------------------------------------


@dataclass(frozen=True)
class SubgroupLattice:
    """All subgroups of GL2(Z/n) containing -I, with classes and covers.

    ``conjugator_keys[i]`` is (the key of) an element c with
    c * rep * c^-1 = subgroups[i], where rep is the representative of the
    class of subgroup i.  ``maximal_inclusions`` lists the cover pairs
    (i, j): subgroups[i] maximal in subgroups[j] within the lattice.
    """

    modulus: int
    subgroups: tuple[MatrixGroup, ...]
    classes: tuple[tuple[int, ...], ...]
    class_reps: tuple[int, ...]
    class_of: tuple[int, ...]
    conjugator_keys: tuple[int, ...]
    maximal_inclusions: tuple[tuple[int, int], ...]

    @property
    def subgroup_count(self) -> int:
        return len(self.subgroups)

    @property
    def class_count(self) -> int:
        return len(self.classes)

    def index_of(self, H: MatrixGroup) -> int:
        lookup = getattr(self, "_lookup", None)
        if lookup is None:
            lookup = {S.key_bytes: i for i, S in enumerate(self.subgroups)}
            object.__setattr__(self, "_lookup", lookup)
        try:
            return lookup[H.key_bytes]
        except KeyError:
            raise NotSubgroup("group is not a member of the lattice") from None

    def class_of_group(self, H: MatrixGroup) -> int:
        return self.class_of[self.index_of(H)]

    def to_payload(self) -> dict:
        return {
            "modulus": self.modulus,
            "subgroups": [[int(k) for k in H.element_keys] for H in self.subgroups],
            "generators": [
                [int(k) for k in H.generating_keys()] for H in self.subgroups
            ],
            "classes": [list(c) for c in self.classes],
            "class_reps": list(self.class_reps),
            "class_of": list(self.class_of),
            "conjugator_keys": list(self.conjugator_keys),
            "maximal_inclusions": [list(p) for p in self.maximal_inclusions],
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "SubgroupLattice":
        n = int(payload["modulus"])
        subgroups = []
        for keys, gens in zip(payload["subgroups"], payload["generators"]):
            H = MatrixGroup(n, np.array(keys, dtype=np.int64))
            H._gen_keys = [int(g) for g in gens]
            subgroups.append(H)
        return cls(
            modulus=n,
            subgroups=tuple(subgroups),
            classes=tuple(tuple(c) for c in payload["classes"]),
            class_reps=tuple(payload["class_reps"]),
            class_of=tuple(payload["class_of"]),
            conjugator_keys=tuple(payload["conjugator_keys"]),
            maximal_inclusions=tuple(
                (int(i), int(j)) for i, j in payload["maximal_inclusions"]
            ),
        )


def _perfect_core(A: amb.Ambient) -> np.ndarray:
    """Stable value of P -> <-I, [P, P]> starting from the full ambient.

    Every subgroup U with -I in U and U/{+-I} perfect is contained in it.
    """
    P = np.arange(A.order, dtype=np.int64)
    while True:
        gens = A.small_generating_set(P)
        comms = {A.minus_ident}
        for x in gens:
            for y in gens:
                xy = int(A.mul(np.int64(x), np.int64(y)))
                yx = int(A.mul(np.int64(y), np.int64(x)))
                comms.add(int(A.mul(np.int64(xy), A.inv(np.int64(yx)))))
        D = A.closure(np.array(sorted(comms), dtype=np.int64))
        # normal closure within P
        while True:
            dset = set(int(x) for x in D)
            extra = set()
            for g in gens:
                for v in A.conjugate(g, D):
                    if int(v) not in dset:
                        extra.add(int(v))
            if not extra:
                break
            D = A.closure(np.array(sorted(dset | extra), dtype=np.int64))
        if len(D) == len(P):
            return P
        P = D


def _subgroups_within(A: amb.Ambient, P: np.ndarray) -> dict:
    """Adjoin-one-element fixpoint restricted to the subgroup P, from <-I>."""
    base = A.closure(np.array([A.minus_ident], dtype=np.int64))
    found = {base.astype(">i8").tobytes(): (base, [A.minus_ident])}
    queue = [(base, [A.minus_ident])]
    pset = [int(x) for x in P]
    while queue:
        H, gens = queue.pop()
        hset = set(int(x) for x in H)
        seen_dc = set()
        for x in pset:
            if x in hset or x in seen_dc:
                continue
            # one candidate per (H, H) double coset: <H, x> = <H, x'> for x' in HxH
            hx = A.outer_mul(H, np.array([x], dtype=np.int64)).ravel()
            dc = A.outer_mul(hx, H).ravel()
            seen_dc.update(int(v) for v in dc)
            U = A.closure(np.array(gens + [x], dtype=np.int64))
            kb = U.astype(">i8").tobytes()
            if kb not in found:
                item = (U, gens + [x])
                found[kb] = item
                queue.append(item)
    return found


def enumerate_subgroups_containing_minus_i(
    n: int, feasibility_bound: int = DEFAULT_FEASIBILITY_BOUND
) -> SubgroupLattice:
    """The full lattice of subgroups of GL2(Z/n) containing -I."""
    _check_feasible(n, feasibility_bound)
    A = amb.ambient(n)

    core = _perfect_core(A)
    found = _subgroups_within(A, core)
    queue = list(found.values())
    while queue:
        H, gens = queue.pop()
        norm = A.normalizer_indices(H, gens)
        quot = len(norm) // len(H)
        if quot == 1:
            continue
        member = np.zeros(A.order, dtype=bool)
        member[H] = True
        cand = norm[~member[norm]]
        for p in _prime_factors(quot):
            gp = A.pow_all(p)[cand]
            ok = cand[member[gp]]
            if ok.size == 0:
                continue
            # one candidate per coset Hg (same g-coset generates the same U)
            cosets = A.outer_mul(H, ok)
            _, first = np.unique(cosets.min(axis=0), return_index=True)
            for g in ok[first]:
                parts = [H]
                gi = int(g)
                for _ in range(p - 1):
                    parts.append(A.mul(H, np.int64(gi)))
                    gi = int(A.mul(np.int64(gi), np.int64(g)))
                U = np.unique(np.concatenate(parts))
                kb = U.astype(">i8").tobytes()
                if kb not in found:
                    item = (U, gens + [int(g)])
                    found[kb] = item
                    queue.append(item)

    ordered = sorted(
        found.values(), key=lambda t: (len(t[0]), t[0].astype(">i8").tobytes())
    )
    groups = []
    for idx_arr, gens in ordered:
        H = MatrixGroup(n, A.keys[idx_arr])
        H._gen_keys = [int(A.keys[g]) for g in gens]
        groups.append(H)
    lookup = {
        arr.astype(">i8").tobytes(): i for i, (arr, _) in enumerate(ordered)
    }

    class_of = [-1] * len(ordered)
    conj_anchor = [0] * len(ordered)
    classes = []
    for i, (H, gens) in enumerate(ordered):
        if class_of[i] != -1:
            continue
        cid = len(classes)
        norm = A.normalizer_indices(H, gens)
        visited = np.zeros(A.order, dtype=bool)
        members = []
        for g in range(A.order):
            if visited[g]:
                continue
            visited[A.mul(np.int64(g), norm)] = True
            conj = np.sort(A.mul(A.mul(np.int64(g), H), A.inv(np.int64(g))))
            j = lookup[conj.astype(">i8").tobytes()]
            if class_of[j] == -1:
                class_of[j] = cid
                conj_anchor[j] = int(g)
                members.append(j)
        classes.append(tuple(sorted(members)))

    # canonical representative: lexicographically least element list; re-anchor
    class_reps = []
    conjugator = [0] * len(ordered)
    for members in classes:
        rep = min(members, key=lambda j: ordered[j][0].astype(">i8").tobytes())
        class_reps.append(rep)
        g_rep = conj_anchor[rep]
        g_rep_inv = int(A.inv(np.int64(g_rep)))
        for j in members:
            c = int(A.mul(np.int64(conj_anchor[j]), np.int64(g_rep_inv)))
            conjugator[j] = int(A.keys[c])

    pairs = _cover_pairs([arr for arr, _ in ordered], [g for _, g in ordered], A.order)

    return SubgroupLattice(
        modulus=n,
        subgroups=tuple(groups),
        classes=tuple(classes),
        class_reps=tuple(class_reps),
        class_of=tuple(class_of),
        conjugator_keys=tuple(conjugator),
        maximal_inclusions=pairs,
    )


def _cover_pairs(subs, gens, ambient_order: int) -> tuple[tuple[int, int], ...]:
    """Maximal-inclusion pairs (i, j): subs[i] maximal in subs[j].

    A group j contains i iff j contains i's generators, so supersets are
    found by a per-generator membership scan rather than pairwise subset
    tests; minimality is then decided within each (small) superset list.
    """
    nsub = len(subs)
    sizes = np.array([len(s) for s in subs])
    bits = np.zeros((nsub, (ambient_order + 7) // 8), dtype=np.uint8)
    for i, s in enumerate(subs):
        mask = np.zeros(ambient_order, dtype=bool)
        mask[s] = True
        bits[i] = np.packbits(mask)

    def contains(j: int, k: int) -> bool:
        return not np.any(bits[k] & ~bits[j])

    pairs = []
    for i in range(nsub):
        sup = sizes > sizes[i]
        for g in gens[i]:
            sup &= (bits[:, g >> 3] & (128 >> (g & 7))) != 0
        cand = np.flatnonzero(sup)
        if cand.size == 0:
            continue
        # j is a cover iff no k in the superset list sits strictly inside j
        cand = cand[np.argsort(sizes[cand], kind="stable")]
        for pos, j in enumerate(cand):
            minimal = True
            for k in cand[:pos]:
                if sizes[k] < sizes[j] and sizes[j] % sizes[k] == 0 and contains(j, k):
                    minimal = False
                    break
            if minimal:
                pairs.append((i, int(j)))
    return tuple(pairs)
