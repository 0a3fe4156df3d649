"""Invariants of the modular curve X_H and its closed points over a fixed j.

For H <= GL2(Z/n), X_H has [(Z/n)* : det H] geometric components, all of the
same genus; that genus is read off the right action of SL2(Z/n) on the coset
space of +-(H n SL2), which models the action of SL2(Z) on the cosets of the
corresponding congruence subgroup.  Closed points of X_H above a fixed
j-invariant correspond to double cosets HgG for the extended image G of the
attached Galois representation, with

    deg(x) = [Q(j):Q] * [gGg^-1 : gGg^-1 n (gAg^-1)H],

where A is the automorphism group ({+-I} away from j = 0, 1728).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ambient as amb
from . import groups
from .groups import DoubleCoset, MatrixGroup, NotSubgroup, plus_minus_identity
from .zmatrix import ModulusMismatch, NotInvertible, ZMatrix, mat_det, mat_encode, mat_inv


class InvalidAutomorphismGroup(ValueError):
    """A is not {+-I} (or not normalized by G); j in {0, 1728} is unsupported."""


@dataclass(frozen=True)
class CurveInvariants:
    level: int
    subgroup: MatrixGroup
    components: int
    genus: int
    sl2_index: int        # mu: index of +-(H n SL2) in SL2(Z/n)
    cusp_count: int
    e2_count: int
    e3_count: int


@dataclass(frozen=True)
class ClosedPointClass:
    level: int
    subgroup: MatrixGroup
    coset: DoubleCoset
    degree: int
    j_field_degree: int


def geometric_components(H: MatrixGroup) -> int:
    return amb.units_count(H.modulus) // len(H.det_image())


def _plus_minus_sl_part(H: MatrixGroup) -> np.ndarray:
    """Element keys of +-(H n SL2(Z/n)), sorted."""
    n = H.modulus
    dets = amb.det_keys(H.element_keys, n)
    hs = H.element_keys[dets == 1 % n]
    minus = amb.pack_keys(-1, 0, 0, -1, n)
    neg = amb.mul_keys(np.int64(minus), hs, n)
    return np.unique(np.concatenate([hs, neg]))


_GENUS_CACHE: dict[tuple[int, bytes], tuple[int, int, int, int, int]] = {}


def genus(H: MatrixGroup) -> CurveInvariants:
    """Full invariant set of X_H (components, genus, cusp/elliptic counts)."""
    n = H.modulus
    hs = _plus_minus_sl_part(H)
    # the coset-action numbers depend only on +-(H n SL2)
    cache_key = (n, hs.astype(">i8").tobytes())
    cached = _GENUS_CACHE.get(cache_key)
    if cached is not None:
        g, mu, e2, e3, cusps = cached
        return CurveInvariants(
            level=n,
            subgroup=H,
            components=geometric_components(H),
            genus=g,
            sl2_index=mu,
            cusp_count=cusps,
            e2_count=e2,
            e3_count=e3,
        )

    space = amb.sl2_keys(n)
    gens = groups._small_generating_keys(hs, n)
    maps = []
    for g in gens:
        for gg in (g, int(amb.inv_keys(np.int64(g), n))):
            maps.append(np.searchsorted(space, amb.mul_keys(np.int64(gg), space, n)))
    labels = amb._min_label_fixpoint(len(space), maps)

    reps = np.unique(labels)
    mu = len(reps)
    rep_keys = space[reps]

    def labels_after(right_key: int) -> np.ndarray:
        moved = amb.mul_keys(rep_keys, np.int64(right_key), n)
        return labels[np.searchsorted(space, moved)]

    order4 = amb.pack_keys(0, -1, 1, 0, n)
    order6 = amb.pack_keys(0, -1, 1, -1, n)
    shift = amb.pack_keys(1, 1, 0, 1, n)
    e2 = int(np.sum(labels_after(order4) == reps))
    e3 = int(np.sum(labels_after(order6) == reps))

    perm = labels_after(shift)
    pos = {int(r): i for i, r in enumerate(reps)}
    seen = np.zeros(mu, dtype=bool)
    cusps = 0
    for i in range(mu):
        if seen[i]:
            continue
        cusps += 1
        j = i
        while not seen[j]:
            seen[j] = True
            j = pos[int(perm[j])]

    twelve_g = 12 + mu - 3 * e2 - 4 * e3 - 6 * cusps
    if twelve_g % 12 != 0 or twelve_g < 0:
        raise RuntimeError(
            f"genus identity violated for subgroup of order {H.order} mod {n}: "
            f"mu={mu} e2={e2} e3={e3} cusps={cusps}"
        )
    _GENUS_CACHE[cache_key] = (twelve_g // 12, mu, e2, e3, cusps)
    return CurveInvariants(
        level=n,
        subgroup=H,
        components=geometric_components(H),
        genus=twelve_g // 12,
        sl2_index=mu,
        cusp_count=cusps,
        e2_count=e2,
        e3_count=e3,
    )


def _require_standard_automorphisms(G: MatrixGroup, A: MatrixGroup | None) -> MatrixGroup:
    """Accept only A = {+-I}; larger automorphism groups are rejected outright."""
    n = G.modulus
    if A is None:
        A = plus_minus_identity(n)
    if A.modulus != n:
        raise ModulusMismatch(f"moduli {A.modulus} != {n}")
    if A != plus_minus_identity(n):
        raise InvalidAutomorphismGroup(
            "only the automorphism group {+-I} is supported "
            "(j-invariants 0 and 1728 are out of scope)"
        )
    return A


def closed_points_over_j(
    H: MatrixGroup,
    G: MatrixGroup,
    A: MatrixGroup | None = None,
    j_field_degree: int = 1,
) -> list[ClosedPointClass]:
    """Closed points of X_H above a fixed j, one per double coset HgG."""
    if H.modulus != G.modulus:
        raise ModulusMismatch(f"moduli {H.modulus} != {G.modulus}")
    if j_field_degree < 1:
        raise ValueError("j_field_degree must be a positive integer")
    A = _require_standard_automorphisms(G, A)
    n = H.modulus
    ah = _plus_minus_keys(H)
    out = []
    for dc in groups.double_cosets(H, G):
        deg = j_field_degree * _point_index(dc.representative, G, ah)
        out.append(
            ClosedPointClass(
                level=n,
                subgroup=H,
                coset=dc,
                degree=deg,
                j_field_degree=j_field_degree,
            )
        )
    return out


def _plus_minus_keys(H: MatrixGroup) -> np.ndarray:
    n = H.modulus
    minus = amb.pack_keys(-1, 0, 0, -1, n)
    neg = amb.mul_keys(np.int64(minus), H.element_keys, n)
    return np.unique(np.concatenate([H.element_keys, neg]))


def _point_index(g: ZMatrix, G: MatrixGroup, ah_keys: np.ndarray) -> int:
    """[gGg^-1 : gGg^-1 n (+-H)] for A = {+-I}."""
    n = g.modulus
    gk = np.int64(mat_encode(g))
    gik = np.int64(mat_encode(mat_inv(g)))
    conj = amb.mul_keys(amb.mul_keys(gk, G.element_keys, n), gik, n)
    conj = np.sort(conj)
    meet = np.intersect1d(conj, ah_keys, assume_unique=True)
    return G.order // len(meet)


def point_degree(
    g: ZMatrix,
    H: MatrixGroup,
    G: MatrixGroup,
    j_field_degree: int = 1,
) -> int:
    """Degree of the closed point of X_H attached to the double coset HgG."""
    return j_field_degree * _point_index(g, G, _plus_minus_keys(H))


def map_point_inclusion(p: ClosedPointClass, H2: MatrixGroup) -> ClosedPointClass:
    """Image of p under X_H -> X_{H'}: the point with double coset H' g G."""
    if not p.subgroup.is_subgroup_of(H2):
        raise NotSubgroup("target subgroup does not contain the source subgroup")
    dc = groups.double_coset_of(p.coset.representative, H2, p.coset.right)
    deg = p.j_field_degree * _point_index(
        dc.representative, p.coset.right, _plus_minus_keys(H2)
    )
    return ClosedPointClass(
        level=p.level,
        subgroup=H2,
        coset=dc,
        degree=deg,
        j_field_degree=p.j_field_degree,
    )


def map_point_conjugation(p: ClosedPointClass, h: ZMatrix) -> ClosedPointClass:
    """Image of p under X_H -> X_{hHh^-1}: double coset (hHh^-1) hg G."""
    if not mat_det(h).is_unit():
        raise NotInvertible("conjugator must be invertible")
    H2 = p.subgroup.conjugated_by(h)
    hg = h * p.coset.representative
    dc = groups.double_coset_of(hg, H2, p.coset.right)
    deg = p.j_field_degree * _point_index(
        dc.representative, p.coset.right, _plus_minus_keys(H2)
    )
    return ClosedPointClass(
        level=p.level,
        subgroup=H2,
        coset=dc,
        degree=deg,
        j_field_degree=p.j_field_degree,
    )


def inclusion_degree(H: MatrixGroup, H2: MatrixGroup) -> int:
    """Degree [+-H' : +-H] of the inclusion morphism X_H -> X_{H'}."""
    if H.modulus != H2.modulus or not H.is_subgroup_of(H2):
        raise NotSubgroup("H is not a subgroup of H'")
    return len(_plus_minus_keys(H2)) // len(_plus_minus_keys(H))


def serialize_invariants(inv: CurveInvariants, points: list[ClosedPointClass]) -> dict:
    """Stable JSON shape for curve invariants plus a point list."""
    from .zmatrix import format_matrix

    return {
        "level": inv.level,
        "subgroup_generators": [
            format_matrix(g) for g in inv.subgroup.generating_matrices()
        ],
        "components": inv.components,
        "genus": inv.genus,
        "points": [
            {"rep": format_matrix(p.coset.representative), "degree": p.degree}
            for p in points
        ],
    }
