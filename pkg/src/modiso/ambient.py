"""Vectorized engine for GL2(Z/n) as a finite set of encoded matrices.

Elements are the integers ``((a*n + b)*n + c)*n + d`` in sorted order; all
bulk work is numpy on index arrays into that list.  Small ambients get a full
multiplication table; larger ones fall back to packed-key arithmetic, so the
same index-level API serves both.  Nothing here is part of the public
surface; groups/curves/isograph build on it.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

# Largest group order for which the order x order multiplication table is
# materialized (uint16 indices, so the hard cap is 65535).
TABLE_LIMIT = 5000

# The packed-key engine needs n**4 < 2**63; scalar matrix arithmetic
# (zmatrix) supports the full 2**16 range.
VECTOR_MODULUS_LIMIT = 55108


def check_vector_modulus(n: int):
    if n > VECTOR_MODULUS_LIMIT:
        raise ValueError(
            f"group-level operations support moduli up to {VECTOR_MODULUS_LIMIT} "
            f"(packed 64-bit element keys); got {n}"
        )

_CHUNK = 1 << 18


def gl2_order(n: int) -> int:
    """|GL2(Z/n)| by the local formula, without enumeration."""
    if n == 1:
        return 1
    out = n**4
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            # local factor (1 - 1/p)(1 - 1/p^2)
            out = out // p**3 * (p - 1) * (p * p - 1)
            while m % p == 0:
                m //= p
        p += 1
    if m > 1:
        p = m
        out = out // p**3 * (p - 1) * (p * p - 1)
    return out


def sl2_order(n: int) -> int:
    if n == 1:
        return 1
    out = n**3
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            out = out // (p * p) * (p * p - 1)
            while m % p == 0:
                m //= p
        p += 1
    if m > 1:
        out = out // (m * m) * (m * m - 1)
    return out


def units_count(n: int) -> int:
    """Euler phi of n: the order of (Z/n)*."""
    phi = n
    m = n
    p = 2
    while p * p <= m:
        if m % p == 0:
            phi = phi // p * (p - 1)
            while m % p == 0:
                m //= p
        p += 1
    if m > 1:
        phi = phi // m * (m - 1)
    return phi


def pack_keys(a, b, c, d, n: int):
    return ((a % n * n + b % n) * n + c % n) * n + d % n


def unpack_keys(key, n: int):
    d = key % n
    c = (key // n) % n
    b = (key // (n * n)) % n
    a = key // (n**3)
    return a, b, c, d


def mul_keys(x, y, n: int):
    a, b, c, d = unpack_keys(x, n)
    e, f, g, h = unpack_keys(y, n)
    return pack_keys(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h, n)


def _vec_unit_inverse(v, n: int):
    # v**(phi(n)-1) mod n, valid since every entry is a unit
    e = units_count(n) - 1
    res = np.ones_like(v)
    base = v % n
    while e:
        if e & 1:
            res = res * base % n
        base = base * base % n
        e >>= 1
    return res


def inv_keys(x, n: int):
    a, b, c, d = unpack_keys(x, n)
    det = (a * d - b * c) % n
    e = _vec_unit_inverse(det, n)
    return pack_keys(d * e, -b % n * e, -c % n * e, a * e, n)


def det_keys(x, n: int):
    a, b, c, d = unpack_keys(x, n)
    return (a * d - b * c) % n


def _enumerate_keys(n: int, want_det):
    """Sorted keys of matrices whose det satisfies ``want_det`` (vector predicate)."""
    if n == 1:
        return np.zeros(1, dtype=np.int64)
    total = n**4
    parts = []
    for lo in range(0, total, _CHUNK):
        key = np.arange(lo, min(lo + _CHUNK, total), dtype=np.int64)
        det = det_keys(key, n)
        parts.append(key[want_det(det)])
    return np.concatenate(parts)


@lru_cache(maxsize=32)
def gl2_keys(n: int):
    keys = _enumerate_keys(n, lambda det: np.gcd(det, n) == 1)
    keys.setflags(write=False)
    return keys


@lru_cache(maxsize=64)
def sl2_keys(n: int):
    keys = _enumerate_keys(n, lambda det: det == 1 % n)
    keys.setflags(write=False)
    return keys


class Ambient:
    """GL2(Z/n) with index-level vector operations.

    All public methods take and return indices into ``self.keys``.
    """

    def __init__(self, n: int, use_table: bool | None = None):
        self.n = n
        self.keys = gl2_keys(n)
        self.order = len(self.keys)
        self.ident = int(np.searchsorted(self.keys, pack_keys(1, 0, 0, 1, n)))
        self.minus_ident = int(
            np.searchsorted(self.keys, pack_keys(-1, 0, 0, -1, n))
        )
        self.dets = det_keys(self.keys, n)
        if use_table is None:
            use_table = self.order <= TABLE_LIMIT
        self._mult = None
        self._inv = None
        self._pow = {}
        if use_table:
            self._build_tables()

    # -- construction -----------------------------------------------------

    def _build_tables(self):
        m = self.order
        dtype = np.uint16 if m < (1 << 16) else np.uint32
        mult = np.empty((m, m), dtype=dtype)
        step = max(1, _CHUNK // m)
        keys = self.keys
        for lo in range(0, m, step):
            hi = min(lo + step, m)
            prod = mul_keys(keys[lo:hi, None], keys[None, :], self.n)
            mult[lo:hi] = np.searchsorted(keys, prod)
        self._mult = mult
        inv = np.empty(m, dtype=np.int64)
        hit = np.argwhere(mult == self.ident)
        inv[hit[:, 0]] = hit[:, 1]
        self._inv = inv

    # -- scalar/vector ops -------------------------------------------------

    def index_of_key(self, key):
        idx = np.searchsorted(self.keys, key)
        if np.any(self.keys[np.minimum(idx, self.order - 1)] != key):
            raise ValueError("key is not an invertible matrix at this modulus")
        return idx

    def mul(self, x, y):
        """Componentwise product of two index arrays (broadcasting allowed)."""
        if self._mult is not None:
            return self._mult[x, y].astype(np.int64, copy=False)
        prod = mul_keys(self.keys[x], self.keys[y], self.n)
        return np.searchsorted(self.keys, prod)

    def outer_mul(self, x, y):
        """All pairwise products: result has shape (len(x), len(y))."""
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        if self._mult is not None:
            return self._mult[np.ix_(x, y)].astype(np.int64, copy=False)
        prod = mul_keys(self.keys[x][:, None], self.keys[y][None, :], self.n)
        return np.searchsorted(self.keys, prod)

    def inv(self, x):
        if self._inv is not None:
            return self._inv[x]
        return np.searchsorted(self.keys, inv_keys(self.keys[x], self.n))

    def pow_all(self, e: int):
        """Index array mapping every element x to x**e."""
        if e not in self._pow:
            res = np.full(self.order, self.ident, dtype=np.int64)
            base = np.arange(self.order, dtype=np.int64)
            k = e
            while k:
                if k & 1:
                    res = self.mul(res, base)
                base = self.mul(base, base)
                k >>= 1
            self._pow[e] = res
        return self._pow[e]

    def conjugate(self, g: int, sub):
        """g * sub * g^-1, sorted."""
        gi = int(self.inv(np.int64(g)))
        return np.sort(self.mul(self.mul(np.int64(g), sub), np.int64(gi)))

    # -- group machinery ---------------------------------------------------

    def closure(self, gens) -> np.ndarray:
        """Subgroup generated by the given element indices, sorted."""
        gens = sorted({int(g) for g in np.atleast_1d(np.asarray(gens, dtype=np.int64))})
        gens = [g for g in gens if g != self.ident]
        seen = np.zeros(self.order, dtype=bool)
        seen[self.ident] = True
        if not gens:
            return np.array([self.ident], dtype=np.int64)
        garr = np.array(
            sorted({*gens, *(int(self.inv(np.int64(g))) for g in gens)}),
            dtype=np.int64,
        )
        frontier = np.array([self.ident], dtype=np.int64)
        while frontier.size:
            prods = np.unique(self.outer_mul(frontier, garr).ravel())
            new = prods[~seen[prods]]
            seen[new] = True
            frontier = new
        return np.flatnonzero(seen).astype(np.int64)

    def small_generating_set(self, elems) -> list[int]:
        """Greedy deterministic generating set (smallest missing element first)."""
        elems = np.asarray(elems, dtype=np.int64)
        target = set(int(x) for x in elems)
        gens: list[int] = []
        have = {self.ident}
        while len(have) < len(target):
            x = min(target - have)
            gens.append(x)
            have = set(int(v) for v in self.closure(gens))
        return gens

    def partition_labels(self, left_gens, right_gens) -> np.ndarray:
        """Orbit labels under x -> h x (left gens) and x -> x g (right gens).

        Returns, for every ambient element, the index of the minimal element
        of its orbit; for subgroups H, G generated by the two sets this
        labels the double cosets H x G by canonical representative.
        """
        size = self.order
        maps = []
        for h in left_gens:
            for hh in (int(h), int(self.inv(np.int64(h)))):
                maps.append(self.mul(np.int64(hh), np.arange(size)))
        for g in right_gens:
            for gg in (int(g), int(self.inv(np.int64(g)))):
                maps.append(self.mul(np.arange(size), np.int64(gg)))
        return _min_label_fixpoint(size, maps)

    def normalizer_indices(self, sub, gens) -> np.ndarray:
        """All g with g * sub * g^-1 = sub, using a generator membership test."""
        member = np.zeros(self.order, dtype=bool)
        member[np.asarray(sub, dtype=np.int64)] = True
        ok = np.ones(self.order, dtype=bool)
        allg = np.arange(self.order, dtype=np.int64)
        inva = self.inv(allg)
        for h in gens:
            conj = self.mul(self.mul(allg, np.int64(int(h))), inva)
            ok &= member[conj]
        return np.flatnonzero(ok).astype(np.int64)


def _min_label_fixpoint(size: int, maps) -> np.ndarray:
    lab = np.arange(size, dtype=np.int64)
    changed = True
    while changed:
        changed = False
        for m in maps:
            nl = np.minimum(lab, lab[m])
            np.minimum.at(nl, m, lab)
            if not np.array_equal(nl, lab):
                lab = nl
                changed = True
    return lab


_AMBIENTS: dict[int, Ambient] = {}


def ambient(n: int) -> Ambient:
    if n not in _AMBIENTS:
        _AMBIENTS[n] = Ambient(n)
    return _AMBIENTS[n]
