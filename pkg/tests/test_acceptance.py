"""Acceptance suite: pinned published values and exact structural checks.

One test per criterion; each prints a `[criterion N] PASS/FAIL` line
(visible with `pytest -s` or in captured output on failure).  All checks are
exact; the timed criteria assert their stated wall-clock budgets.
"""

import random
import time
from fractions import Fraction

import pytest

from modiso import ambient as amb
from modiso import galois, groups
from modiso.cli import minimal_positive_genus_divisor
from modiso.curves import (
    closed_points_over_j,
    genus,
    map_point_conjugation,
)
from modiso.groups import (
    closure,
    double_cosets,
    enumerate_subgroups_containing_minus_i,
    gl2,
    index,
    kernel_product_check,
    normalizer,
    plus_minus_identity,
    subset_product,
)
from modiso.isograph import (
    build_full_graph,
    build_quotient_graph,
    export_dot,
    prune_riemann_roch,
    survivors_analysis,
    topological_layers,
)
from modiso.zmatrix import ZMatrix, mat_inv, mat_mul

LEVEL7_J = Fraction(3**3 * 5 * 7**5, 2**7)

# survivor classification: generators, genus, det index, degree, point count
TABLE1_ROWS = [
    ([((-1, 0), (0, -1))], 3, 6, 18, 56),
    ([((-1, 0), (0, -1)), ((1, 0), (2, 6))], 3, 3, 9, 6),
    ([((-1, 0), (0, -1)), ((2, 0), (0, 2))], 3, 2, 6, 56),
    ([((-1, 0), (0, -1)), ((3, 6), (6, 1))], 3, 2, 6, 2),
    ([((-1, 0), (0, -1)), ((1, 2), (2, 5))], 1, 6, 6, 2),
    ([((-1, 0), (0, -1)), ((1, 6), (6, 6))], 3, 1, 3, 6),
    ([((-1, 0), (0, -1)), ((2, 2), (2, 6)), ((1, 0), (2, 6))], 1, 3, 3, 2),
    ([((-1, 0), (0, -1)), ((2, 2), (2, 6)), ((2, 0), (0, 2))], 1, 2, 2, 2),
    ([((-1, 0), (0, -1)), ((2, 0), (0, 1)), ((0, 5), (6, 0))], 1, 1, 1, 2),
]

# j-invariant -> (listed minimal level, table sl_level is read from the data)
TABLE3_EXPECTED = {
    "-121/1": 11,
    "-24729001/1": 11,
    "-25/2": 15,
    "-121945/32": 15,
    "46969655/32768": 15,
    "-349938025/8": 15,
    "-297756989/2": 17,
    "-882216989/131072": 17,
    "3375/2": 21,
    "-140625/8": 21,
    "-1159088625/2097152": 21,
    "-189613868625/128": 21,
    "-9317/1": 37,
    "-162677523113838677/1": 37,
}


def check(criterion, ok, detail):
    print(f"[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def test_01_subgroup_lattice():
    t0 = time.time()
    lat = enumerate_subgroups_containing_minus_i(7)
    elapsed = time.time() - t0
    ok = lat.subgroup_count == 998 and lat.class_count == 53 and elapsed <= 120
    check(
        1,
        ok,
        f"{lat.subgroup_count} subgroups, {lat.class_count} classes "
        f"in {elapsed:.1f}s (expected 998/53 within 120s)",
    )


def test_02_closed_point_census(lattice7, g1):
    t0 = time.time()
    total = sum(len(double_cosets(H, g1)) for H in lattice7.subgroups)
    elapsed = time.time() - t0
    ok = total == 12690 and elapsed <= 60
    check(2, ok, f"{total} closed points in {elapsed:.1f}s (expected 12690 within 60s)")


def test_03_full_isolation_graph(lattice7, g1):
    t0 = time.time()
    graph = build_full_graph(lattice7, g1, j_invariant=LEVEL7_J)
    elapsed = time.time() - t0
    ok = graph.vertex_count == 12690 and graph.edge_count == 71235 and elapsed <= 600
    check(
        3,
        ok,
        f"{graph.vertex_count} vertices / {graph.edge_count} edges "
        f"in {elapsed:.1f}s (expected 12690/71235 within 600s)",
    )


def test_04_quotient_graph(lattice7, g1):
    t0 = time.time()
    graph = build_quotient_graph(lattice7, g1, j_invariant=LEVEL7_J)
    elapsed = time.time() - t0
    layers = topological_layers(graph)
    order_ok = layers is not None and all(
        layers[e.source] < layers[e.target] for e in graph.edges
    )
    ok = (
        graph.vertex_count == 252
        and graph.edge_count == 779
        and order_ok
        and elapsed <= 120
    )
    check(
        4,
        ok,
        f"{graph.vertex_count} vertices / {graph.edge_count} edges, "
        f"acyclic={order_ok}, in {elapsed:.1f}s (expected 252/779, acyclic, 120s)",
    )


def test_05_pruning_matches_survivor_table(lattice7, quotient7):
    pruned_ok = len(quotient7.pruned) == 243
    survivors = quotient7.survivors()

    expected = set()
    for gens, g, det_idx, deg, count in TABLE1_ROWS:
        H = closure([ZMatrix.from_rows(r, 7) for r in gens])
        expected.add((lattice7.class_of_group(H), g, det_idx, deg, count))
    got = {
        (
            lattice7.class_of[v.subgroup_index],
            v.genus,
            v.components,
            v.degree,
            v.point_count,
        )
        for v in survivors
    }
    ok = pruned_ok and len(survivors) == 9 and got == expected
    check(
        5,
        ok,
        f"pruned {len(quotient7.pruned)} (expected 243); "
        f"{len(survivors)} survivors match the classification table: "
        f"{got == expected}",
    )


def test_06_survivor_structure(quotient7):
    rep = survivors_analysis(quotient7)
    initial_ok = False
    if rep.unique_initial:
        v = quotient7.vertices[rep.initial_vertices[0]]
        initial_ok = v.degree == 18 and v.subgroup.order == 2
    ok = rep.connected and rep.unique_initial and initial_ok \
        and rep.all_reachable_from_initial
    check(
        6,
        ok,
        f"connected={rep.connected}, unique initial={rep.unique_initial} "
        f"(degree-18 point on the full-level-structure curve: {initial_ok}), "
        f"all reachable={rep.all_reachable_from_initial}",
    )


def classical_x0_genus(N):
    from math import gcd

    if N == 1:
        return 0
    fac = {}
    m, p = N, 2
    while p * p <= m:
        while m % p == 0:
            fac[p] = fac.get(p, 0) + 1
            m //= p
        p += 1
    if m > 1:
        fac[m] = fac.get(m, 0) + 1
    psi = N
    for p in fac:
        psi = psi // p * (p + 1)
    nu2 = 0 if N % 4 == 0 else 1
    if nu2:
        for p in fac:
            if p != 2:
                nu2 *= 1 + (1 if p % 4 == 1 else -1)
    nu3 = 0 if N % 9 == 0 else 1
    if nu3:
        for p in fac:
            if p != 3:
                nu3 *= 1 + (1 if p % 3 == 1 else -1)

    def phi(k):
        return sum(1 for d in range(1, k + 1) if gcd(d, k) == 1) if k > 1 else 1

    nuinf = sum(phi(gcd(d, N // d)) for d in range(1, N + 1) if N % d == 0)
    twelve_g = 12 + psi - 3 * nu2 - 4 * nu3 - 6 * nuinf
    assert twelve_g % 12 == 0
    return twelve_g // 12


def test_07_genus_suite():
    mismatches = [
        (n, genus(galois.borel(n)).genus, classical_x0_genus(n))
        for n in range(1, 51)
        if genus(galois.borel(n)).genus != classical_x0_genus(n)
    ]
    pinned = {11: 1, 15: 1, 17: 1, 21: 1, 26: 2, 37: 2, 1: 0, 2: 0, 13: 0}
    pin_bad = {
        n: genus(galois.borel(n)).genus
        for n, g in pinned.items()
        if genus(galois.borel(n)).genus != g
    }
    ok = not mismatches and not pin_bad
    check(
        7,
        ok,
        f"X_0(N) genus matches the classical oracle for N <= 50 "
        f"(mismatches: {mismatches or 'none'}; pinned-value errors: {pin_bad or 'none'})",
    )


def test_08_mod7_image_curves():
    genus_bad = {}
    det_bad = {}
    for i in range(1, 9):
        label = f"G{i}"
        img = galois.mod7_image(label)
        if len(img.det_image()) != 6:
            det_bad[label] = len(img.det_image())
        if i >= 2 and genus(img).genus != 0:
            genus_bad[label] = genus(img).genus
    ok = not genus_bad and not det_bad
    check(
        8,
        ok,
        f"genus 0 for G2..G8 (errors: {genus_bad or 'none'}); "
        f"full determinant for all (errors: {det_bad or 'none'})",
    )


def test_09_x0_26_example():
    rec = galois.level78_image()
    image = galois.image_at_level(rec, 26)
    b = galois.borel(26)
    inv = genus(b)
    pts = closed_points_over_j(b, image)
    degs = sorted({p.degree for p in pts})
    all_exceed = all(p.degree > inv.components * inv.genus for p in pts)
    ok = degs == [18, 24] and inv.genus == 2 and inv.components == 1 and all_exceed
    check(
        9,
        ok,
        f"X_0(26) degrees over j = -160855552000/1594323: {degs} "
        f"(expected [18, 24]), genus {inv.genus}, all exceed the bound: {all_exceed}",
    )


@pytest.mark.parametrize("j_text,listed_n", sorted(TABLE3_EXPECTED.items()))
def test_10_table3_minimal_levels(j_text, listed_n):
    j = galois.parse_rational(j_text)
    row = galois.exceptional_row_for_j(j)
    assert row is not None, f"{j_text} missing from the exceptional-j table"
    computed = minimal_positive_genus_divisor(row.sl_level)
    ok = computed == listed_n
    check(
        10,
        ok,
        f"j = {j_text}: smallest divisor of sl_level {row.sl_level} with "
        f"positive genus is {computed}, listed minimal level is {listed_n}",
    )


# -- criterion 11: property suites ------------------------------------------------


def test_11a_modular_law():
    # U(S n T) = S n UT whenever <U> S = S; exhaustive small levels + sampling
    rng = random.Random(101)
    failures = 0
    trials = 0
    for n, rounds in ((4, 30), (6, 20), (12, 10), (7, 20)):
        ambient_keys = amb.gl2_keys(n)
        elems = [  # a manageable deterministic slice of the ambient group
            ZMatrix(*(int(x) for x in amb.unpack_keys(k, n)), n)
            for k in ambient_keys[:: max(1, len(ambient_keys) // 64)]
        ]
        for _ in range(rounds):
            trials += 1
            u = [rng.choice(elems) for _ in range(2)]
            gen = closure(u, n)
            s = {
                mat_mul(g, x)
                for x in rng.sample(elems, min(3, len(elems)))
                for g in gen.elements
            }
            t = set(rng.sample(elems, rng.randrange(1, min(30, len(elems)))))
            lhs = {mat_mul(uu, y) for uu in u for y in (s & t)}
            rhs = s & {mat_mul(uu, y) for uu in u for y in t}
            if lhs != rhs:
                failures += 1
    check(
        "11a",
        failures == 0,
        f"modular law U(SnT) = SnUT on {trials} sampled configurations "
        f"at levels 4, 6, 12, 7 ({failures} failures)",
    )


def test_11b_product_meet_normalizer_and_index_preservation():
    rng = random.Random(102)
    lat4 = enumerate_subgroups_containing_minus_i(4)
    bad = 0
    # G n HK closed under products and inverses when G normalizes H
    for _ in range(25):
        h = rng.choice(lat4.subgroups)
        ng = normalizer(h)
        g = rng.choice([s for s in lat4.subgroups if s.is_subgroup_of(ng)])
        k = rng.choice(lat4.subgroups)
        hk = {mat_mul(x, y) for x in h.elements for y in k.elements}
        meet = {x for x in g.elements if x in hk}
        for x in meet:
            if mat_inv(x) not in meet:
                bad += 1
            for y in meet:
                if mat_mul(x, y) not in meet:
                    bad += 1

    # [G : H] = [GN : HN] for normal N with G n N = H n N
    checked = 0
    full4 = gl2(4)
    normal = [s for s in lat4.subgroups if normalizer(s) == full4]
    for _ in range(200):
        g = rng.choice(lat4.subgroups)
        h = rng.choice([s for s in lat4.subgroups if s.is_subgroup_of(g)])
        n = rng.choice(normal)
        if g.intersection(n) != h.intersection(n):
            continue
        checked += 1
        gn = subset_product(g.elements, n.elements)
        hn = subset_product(h.elements, n.elements)
        if index(g, h) != len(gn) // len(hn) or len(gn) % len(hn):
            bad += 1

    # [G : preimage(K)] = [H : K] for reductions 12 -> 4, 12 -> 6, 6 -> 2
    import numpy as np

    for L, m in ((12, 4), (12, 6), (6, 2)):
        keysL = amb.gl2_keys(L)
        red = amb.pack_keys(*amb.unpack_keys(keysL, L), m)
        for K in (galois.borel(m), plus_minus_identity(m), gl2(m)):
            kset = set(int(k) for k in K.element_keys)
            pre = int(np.sum(np.array([int(r) in kset for r in red])))
            if amb.gl2_order(L) // pre != amb.gl2_order(m) // K.order:
                bad += 1
    check(
        "11b",
        bad == 0 and checked >= 10,
        f"product-meets-normalizer, index preservation and reduction-index "
        f"laws hold ({checked} index configurations, {bad} failures)",
    )


def test_11b_level7_sampling(lattice7):
    # the same subset laws, sampled on the level-7 lattice
    rng = random.Random(105)
    bad = 0
    small = [H for H in lattice7.subgroups if H.order <= 42]
    for _ in range(8):
        h = rng.choice(small)
        ng = normalizer(h)
        g = rng.choice([s for s in small if s.is_subgroup_of(ng)])
        k = rng.choice(small)
        hk = set(subset_product(h.elements, k.elements))
        meet = {x for x in g.elements if x in hk}
        for x in meet:
            if mat_inv(x) not in meet:
                bad += 1
            for y in meet:
                if mat_mul(x, y) not in meet:
                    bad += 1
    checked = 0
    center = None
    for H in lattice7.subgroups:
        if H.order == 6 and normalizer(H).order == 2016:
            center = H  # the scalar subgroup is normal
            break
    for _ in range(40):
        g = rng.choice(lattice7.subgroups)
        h = rng.choice([s for s in small if s.is_subgroup_of(g)])
        if g.intersection(center) != h.intersection(center):
            continue
        checked += 1
        gn = subset_product(g.elements, center.elements)
        hn = subset_product(h.elements, center.elements)
        if index(g, h) != len(gn) // len(hn) or len(gn) % len(hn):
            bad += 1
    check(
        "11b(7)",
        bad == 0 and checked >= 5,
        f"subset laws sampled at level 7 ({checked} index configurations, "
        f"{bad} failures)",
    )


def test_11c_kernel_products_and_partitions(lattice7, g1):
    kp = (
        kernel_product_check(4, 6, 12)
        and kernel_product_check(2, 3, 6)
        and kernel_product_check(2, 2, 4)
        and kernel_product_check(3, 4, 12)
    )
    # double-coset partitions: exhaustive at levels <= 4, sampled at 7
    bad = 0
    for n in (2, 3, 4):
        lat = enumerate_subgroups_containing_minus_i(n)
        order = amb.gl2_order(n)
        for H in lat.subgroups:
            for G in lat.subgroups:
                if sum(dc.size for dc in double_cosets(H, G)) != order:
                    bad += 1
    rng = random.Random(103)
    for i in rng.sample(range(998), 20):
        if sum(dc.size for dc in double_cosets(lattice7.subgroups[i], g1)) != 2016:
            bad += 1
    check(
        "11c",
        kp and bad == 0,
        f"kernel products at (4,6,12), (2,3,6), (2,2,4), (3,4,12): {kp}; "
        f"double-coset partition sums exact at levels 2-4 and sampled at 7 "
        f"({bad} failures)",
    )


def test_11d_genus_integrality_and_conjugation_invariance(lattice7, g1):
    bad = 0
    count = 0
    # exhaustive lattices at small levels
    for n in range(1, 7):
        lat = enumerate_subgroups_containing_minus_i(n)
        for H in lat.subgroups:
            inv = genus(H)
            count += 1
            if 12 * (inv.genus - 1) != (
                inv.sl2_index - 3 * inv.e2_count - 4 * inv.e3_count - 6 * inv.cusp_count
            ):
                bad += 1
    # structured families up to level 12, class representatives at 7
    for n in range(7, 13):
        for H in (galois.borel(n), galois.borel1(n, adjoin_minus_identity=True),
                  gl2(n), groups.sl2(n), plus_minus_identity(n)):
            inv = genus(H)
            count += 1
            if 12 * (inv.genus - 1) != (
                inv.sl2_index - 3 * inv.e2_count - 4 * inv.e3_count - 6 * inv.cusp_count
            ):
                bad += 1
    for rep in lattice7.class_reps:
        inv = genus(lattice7.subgroups[rep])
        count += 1
        if 12 * (inv.genus - 1) != (
            inv.sl2_index - 3 * inv.e2_count - 4 * inv.e3_count - 6 * inv.cusp_count
        ):
            bad += 1

    # conjugation transport preserves degree: all X(7) points, sampled h
    rng = random.Random(104)
    pts = closed_points_over_j(plus_minus_identity(7), g1)
    hs = []
    while len(hs) < 6:
        m = ZMatrix(rng.randrange(7), rng.randrange(7), rng.randrange(7),
                    rng.randrange(7), 7)
        if m.is_invertible():
            hs.append(m)
    transport_bad = sum(
        1
        for h in hs
        for p in pts
        if map_point_conjugation(p, h).degree != p.degree
    )
    ok = bad == 0 and transport_bad == 0
    check(
        "11d",
        ok,
        f"genus identity 12(g-1) = mu - 3e2 - 4e3 - 6cusps exact on {count} "
        f"subgroups (levels <= 12 and level 7); conjugation transport "
        f"degree-invariant on {len(hs) * len(pts)} moves "
        f"({bad}+{transport_bad} failures)",
    )


def test_11e_deterministic_dot(lattice7, g1, quotient7):
    rebuilt = prune_riemann_roch(
        build_quotient_graph(lattice7, g1, j_invariant=LEVEL7_J, jobs=2)
    )
    ok = export_dot(rebuilt) == export_dot(quotient7)
    check("11e", ok, "DOT export byte-identical across rebuilds (jobs=1 vs jobs=2)")
