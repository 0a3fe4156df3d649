"""Isolation graphs over a family of modular curves and a fixed j-invariant.

Vertices are closed-point classes; an edge x -> y means "if x is isolated
then so is y" and arises from an inclusion morphism f between the underlying
curves in one of two ways:

 * pullback:     f(x) = y and deg(x) = deg(f) * deg(y);
 * pushforward:  f(y) = x and deg(x) = deg(y).

Only maximal inclusions within the subgroup lattice are considered, since
inclusion morphisms compose.  The quotient graph identifies vertices under
the conjugation automorphisms; its vertices are pairs (class representative
H, double coset N_H g G) with N_H the normalizer of H, and it is built
directly from the lattice, never by condensing the full graph.  Degrees
weakly decrease along every edge and strictly decrease along pullbacks, so
both graphs are acyclic.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import ambient as ambmod
from . import curves
from .groups import MatrixGroup, SubgroupLattice
from .zmatrix import ModulusMismatch, format_matrix, mat_decode

PULLBACK = "pullback"
PUSHFORWARD = "pushforward"


@dataclass(frozen=True)
class Vertex:
    index: int
    subgroup_index: int          # position in the lattice (or class rep position)
    subgroup: MatrixGroup
    coset_key: int               # canonical double-coset representative
    degree: int
    components: int
    genus: int
    point_count: int = 1         # closed points on X_H represented by the vertex

    @property
    def rr_bound(self) -> int:
        return self.components * self.genus


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    kind: str                    # PULLBACK or PUSHFORWARD
    via: tuple[int, int]         # (smaller, larger) lattice subgroup indices


@dataclass(frozen=True)
class IsolationGraph:
    kind: str                    # "full" | "quotient" | "condensation"
    level: int
    j_invariant: Fraction | None
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]
    pruned: frozenset[int] = frozenset()
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def survivors(self) -> tuple[Vertex, ...]:
        return tuple(v for v in self.vertices if v.index not in self.pruned)

    def out_edges(self, idx: int) -> list[Edge]:
        return [e for e in self.edges if e.source == idx]


def _sorted_edges(edge_set) -> tuple[Edge, ...]:
    return tuple(
        Edge(s, t, k, via)
        for (s, t, k, via) in sorted(edge_set, key=lambda e: (e[0], e[1], e[2]))
    )


class _LatticeContext:
    """Shared per-build state: ambient, labels, degrees, class invariants."""

    def __init__(self, lattice: SubgroupLattice, G: MatrixGroup, j_field_degree: int,
                 jobs: int = 1):
        if lattice.modulus != G.modulus:
            raise ModulusMismatch(
                f"lattice modulus {lattice.modulus} != image modulus {G.modulus}"
            )
        self.lattice = lattice
        self.G = G
        self.j_field_degree = j_field_degree
        self.A = ambmod.ambient(lattice.modulus)
        self.g_gens = [int(self.A.index_of_key(k)) for k in G.generating_keys()]
        self.sub_idx = [
            self.A.index_of_key(H.element_keys) for H in lattice.subgroups
        ]
        self.sub_gens = [
            [int(self.A.index_of_key(k)) for k in H.generating_keys()]
            for H in lattice.subgroups
        ]
        self.orders = np.array([H.order for H in lattice.subgroups])
        self.labels = self._all_labels(jobs)
        self.reps: list[np.ndarray] = []
        self.degrees: list[np.ndarray] = []
        self.rep_pos: list[dict[int, int]] = []
        for i, lab in enumerate(self.labels):
            reps, counts = np.unique(lab, return_counts=True)
            if np.any(counts % self.orders[i] != 0):
                raise RuntimeError("double-coset size not divisible by |H|")
            if int(counts.sum()) != self.A.order:
                raise RuntimeError("double cosets do not partition the ambient group")
            self.reps.append(reps)
            self.degrees.append(j_field_degree * (counts // self.orders[i]))
            self.rep_pos.append({int(r): k for k, r in enumerate(reps)})
        self._class_inv: dict[int, tuple[int, int]] = {}
        self.up_of: dict[int, list[int]] = {}
        self.down_of: dict[int, list[int]] = {}
        for (i, j) in lattice.maximal_inclusions:
            self.up_of.setdefault(i, []).append(j)
            self.down_of.setdefault(j, []).append(i)

    def _all_labels(self, jobs: int) -> list[np.ndarray]:
        def one(i: int) -> np.ndarray:
            return self.A.partition_labels(self.sub_gens[i], self.g_gens)

        indices = range(len(self.lattice.subgroups))
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                return list(pool.map(one, indices))
        return [one(i) for i in indices]

    def class_invariants(self, cid: int) -> tuple[int, int]:
        """(components, genus) of the curves in conjugacy class cid."""
        if cid not in self._class_inv:
            rep = self.lattice.class_reps[cid]
            inv = curves.genus(self.lattice.subgroups[rep])
            self._class_inv[cid] = (inv.components, inv.genus)
        return self._class_inv[cid]

    def invariants_for_subgroup(self, i: int) -> tuple[int, int]:
        return self.class_invariants(self.lattice.class_of[i])


def build_full_graph(
    lattice: SubgroupLattice,
    G: MatrixGroup,
    A: MatrixGroup | None = None,
    j_field_degree: int = 1,
    j_invariant: Fraction | None = None,
    jobs: int = 1,
) -> IsolationGraph:
    """The isolation graph over every subgroup in the lattice."""
    curves._require_standard_automorphisms(G, A)
    ctx = _LatticeContext(lattice, G, j_field_degree, jobs=jobs)
    lat = lattice

    vertices = []
    offsets = np.zeros(len(lat.subgroups) + 1, dtype=np.int64)
    for i in range(len(lat.subgroups)):
        offsets[i + 1] = offsets[i] + len(ctx.reps[i])
        comps, gen = ctx.invariants_for_subgroup(i)
        for k, r in enumerate(ctx.reps[i]):
            vertices.append(
                Vertex(
                    index=int(offsets[i] + k),
                    subgroup_index=i,
                    subgroup=lat.subgroups[i],
                    coset_key=int(ctx.A.keys[int(r)]),
                    degree=int(ctx.degrees[i][k]),
                    components=comps,
                    genus=gen,
                )
            )

    edge_set = set()
    for (i, j) in lat.maximal_inclusions:
        quot = int(ctx.orders[j] // ctx.orders[i])
        lj = ctx.labels[j]
        for k, r in enumerate(ctx.reps[i]):
            src = int(offsets[i] + k)
            kt = ctx.rep_pos[j][int(lj[int(r)])]
            dst = int(offsets[j] + kt)
            ds = int(ctx.degrees[i][k])
            dt = int(ctx.degrees[j][kt])
            if ds == quot * dt:
                edge_set.add((src, dst, PULLBACK, (i, j)))
            if ds == dt:
                edge_set.add((dst, src, PUSHFORWARD, (i, j)))

    return IsolationGraph(
        kind="full",
        level=lat.modulus,
        j_invariant=j_invariant,
        vertices=tuple(vertices),
        edges=_sorted_edges(edge_set),
        metadata={
            "subgroups": len(lat.subgroups),
            "classes": len(lat.classes),
            "edge_mode": "deduplicated",
        },
    )


def build_quotient_graph(
    lattice: SubgroupLattice,
    G: MatrixGroup,
    A: MatrixGroup | None = None,
    j_field_degree: int = 1,
    j_invariant: Fraction | None = None,
    jobs: int = 1,
    multiedges: bool = False,
) -> IsolationGraph:
    """The isolation graph modulo the conjugation automorphisms.

    Vertices are pairs (class representative H, N_H g G).  Edges are found by
    lifting each vertex to the closed point (H, H g G), expanding along
    maximal inclusions in both directions, and projecting targets back to
    class representatives with an explicit conjugator.
    """
    curves._require_standard_automorphisms(G, A)
    ctx = _LatticeContext(lattice, G, j_field_degree, jobs=jobs)
    lat = lattice
    A2 = ctx.A

    # N_H g G labels per class representative
    nlabels: dict[int, np.ndarray] = {}
    for rep in lat.class_reps:
        norm = A2.normalizer_indices(ctx.sub_idx[rep], ctx.sub_gens[rep])
        ngens = A2.small_generating_set(norm)
        nlabels[rep] = A2.partition_labels(ngens, ctx.g_gens)

    vertices = []
    vert_id: dict[tuple[int, int], int] = {}
    for cid, rep in enumerate(lat.class_reps):
        comps, gen = ctx.class_invariants(cid)
        li = ctx.labels[rep]
        nl = nlabels[rep]
        for r in np.unique(nl):
            # degree of the lifted closed point (H, H r G)
            k = ctx.rep_pos[rep][int(li[int(r)])]
            vid = len(vertices)
            vert_id[(cid, int(r))] = vid
            count = len(np.unique(li[np.flatnonzero(nl == r)]))
            vertices.append(
                Vertex(
                    index=vid,
                    subgroup_index=rep,
                    subgroup=lat.subgroups[rep],
                    coset_key=int(A2.keys[int(r)]),
                    degree=int(ctx.degrees[rep][k]),
                    components=comps,
                    genus=gen,
                    point_count=count,
                )
            )

    # conjugator (as ambient index) taking subgroup i to its class representative
    conj_to_rep = [
        int(A2.inv(A2.index_of_key(lat.conjugator_keys[i])))
        for i in range(len(lat.subgroups))
    ]

    def project(sub_i: int, coset_rep: int) -> int:
        cid = lat.class_of[sub_i]
        rep = lat.class_reps[cid]
        moved = int(A2.mul(np.int64(conj_to_rep[sub_i]), np.int64(coset_rep)))
        return vert_id[(cid, int(nlabels[rep][moved]))]

    edges_multi = []
    for (cid, r0), src in vert_id.items():
        rep = lat.class_reps[cid]
        li = ctx.labels[rep]
        lift_label = int(li[r0])
        deg_src = int(ctx.degrees[rep][ctx.rep_pos[rep][lift_label]])
        for j in ctx.up_of.get(rep, []):
            quot = int(ctx.orders[j] // ctx.orders[rep])
            tl = int(ctx.labels[j][r0])
            dt = int(ctx.degrees[j][ctx.rep_pos[j][tl]])
            if deg_src == quot * dt:
                edges_multi.append((src, project(j, tl), PULLBACK, (rep, j)))
        members = np.flatnonzero(li == lift_label)
        for i2 in ctx.down_of.get(rep, []):
            for u in np.unique(ctx.labels[i2][members]):
                du = int(ctx.degrees[i2][ctx.rep_pos[i2][int(u)]])
                if du == deg_src:
                    edges_multi.append((src, project(i2, int(u)), PUSHFORWARD, (i2, rep)))

    if multiedges:
        edges = tuple(
            Edge(s, t, k, via)
            for (s, t, k, via) in sorted(edges_multi)
        )
    else:
        # duplicates arise when distinct inclusions project to the same pair;
        # keep one edge per (source, target, kind) with the least witness
        best: dict[tuple[int, int, str], tuple[int, int]] = {}
        for (s, t, k, via) in edges_multi:
            cur = best.get((s, t, k))
            if cur is None or via < cur:
                best[(s, t, k)] = via
        edges = tuple(
            Edge(s, t, k, best[(s, t, k)]) for (s, t, k) in sorted(best)
        )

    return IsolationGraph(
        kind="quotient",
        level=lat.modulus,
        j_invariant=j_invariant,
        vertices=tuple(vertices),
        edges=edges,
        metadata={
            "classes": len(lat.classes),
            "edge_mode": "multi" if multiedges else "deduplicated",
            "edge_multiplicity_total": len(edges_multi),
        },
    )


def prune_riemann_roch(graph: IsolationGraph) -> IsolationGraph:
    """Mark every vertex with degree > components * genus as not isolated."""
    pruned = frozenset(
        v.index for v in graph.vertices if v.degree > v.rr_bound
    )
    meta = dict(graph.metadata)
    meta["pruned_count"] = len(pruned)
    return IsolationGraph(
        kind=graph.kind,
        level=graph.level,
        j_invariant=graph.j_invariant,
        vertices=graph.vertices,
        edges=graph.edges,
        pruned=pruned,
        metadata=meta,
    )


@dataclass(frozen=True)
class SurvivorReport:
    survivor_ids: tuple[int, ...]
    component_count: int
    initial_vertices: tuple[int, ...]
    unique_initial: bool
    all_reachable_from_initial: bool

    @property
    def connected(self) -> bool:
        return self.component_count <= 1


def survivors_analysis(graph: IsolationGraph) -> SurvivorReport:
    """Structure of the subgraph induced by the unpruned vertices."""
    ids = sorted(v.index for v in graph.vertices if v.index not in graph.pruned)
    idset = set(ids)
    sub_edges = [
        (e.source, e.target)
        for e in graph.edges
        if e.source in idset and e.target in idset
    ]
    # weak connectivity
    parent = {i: i for i in ids}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for s, t in sub_edges:
        rs, rt = find(s), find(t)
        if rs != rt:
            parent[rs] = rt
    comp_count = len({find(i) for i in ids}) if ids else 0

    has_incoming = {t for (_, t) in sub_edges}
    initial = tuple(i for i in ids if i not in has_incoming)

    reachable = set()
    if len(initial) == 1:
        stack = [initial[0]]
        adj: dict[int, list[int]] = {}
        for s, t in sub_edges:
            adj.setdefault(s, []).append(t)
        while stack:
            x = stack.pop()
            if x in reachable:
                continue
            reachable.add(x)
            stack.extend(adj.get(x, []))
    return SurvivorReport(
        survivor_ids=tuple(ids),
        component_count=comp_count,
        initial_vertices=initial,
        unique_initial=len(initial) == 1,
        all_reachable_from_initial=len(initial) == 1 and reachable == idset,
    )


def condense_scc(graph: IsolationGraph) -> IsolationGraph:
    """Contract every strongly connected component to a single vertex."""
    n = len(graph.vertices)
    adj: dict[int, list[int]] = {}
    for e in graph.edges:
        adj.setdefault(e.source, []).append(e.target)

    # iterative Tarjan
    index_of = {}
    low = {}
    on_stack = set()
    stack: list[int] = []
    comp_of = {}
    counter = 0
    comps: list[list[int]] = []
    for root in range(n):
        if root in index_of:
            continue
        work = [(root, iter(adj.get(root, [])))]
        index_of[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index_of:
                    index_of[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(adj.get(w, []))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index_of[w])
            if advanced:
                continue
            work.pop()
            if work:
                pv = work[-1][0]
                low[pv] = min(low[pv], low[v])
            if low[v] == index_of[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))

    # canonical numbering: order components by minimal member
    comps.sort(key=min)
    for ci, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = ci

    vertices = []
    for ci, comp in enumerate(comps):
        rep = graph.vertices[min(comp)]
        vertices.append(
            Vertex(
                index=ci,
                subgroup_index=rep.subgroup_index,
                subgroup=rep.subgroup,
                coset_key=rep.coset_key,
                degree=rep.degree,
                components=rep.components,
                genus=rep.genus,
            )
        )
    edge_set = set()
    for e in graph.edges:
        s, t = comp_of[e.source], comp_of[e.target]
        if s != t:
            edge_set.add((s, t, e.kind, e.via))
    pruned = frozenset(
        comp_of[v] for v in graph.pruned if v in comp_of
    )
    meta = dict(graph.metadata)
    meta["condensed_from"] = n
    return IsolationGraph(
        kind="condensation",
        level=graph.level,
        j_invariant=graph.j_invariant,
        vertices=tuple(vertices),
        edges=_sorted_edges(edge_set),
        pruned=pruned,
        metadata=meta,
    )


def topological_layers(graph: IsolationGraph) -> list[int] | None:
    """Longest-path layer per vertex, or None if the graph has a cycle.

    Layer values do not depend on traversal order, so a plain Kahn pass is
    deterministic.
    """
    from collections import deque

    n = len(graph.vertices)
    indeg = [0] * n
    adj: dict[int, list[int]] = {}
    for e in graph.edges:
        indeg[e.target] += 1
        adj.setdefault(e.source, []).append(e.target)
    layer = [0] * n
    queue = deque(i for i in range(n) if indeg[i] == 0)
    seen = 0
    while queue:
        v = queue.popleft()
        seen += 1
        for w in adj.get(v, []):
            layer[w] = max(layer[w], layer[v] + 1)
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
    if seen != n:
        return None
    return layer


_GENUS_PALETTE = (
    "#4878d0",  # genus 0
    "#ee854a",  # genus 1
    "#6acc64",  # genus 2
    "#d65f5f",  # genus 3
    "#956cb4",  # genus 4
    "#8c613c",  # genus 5+
)


def export_dot(graph: IsolationGraph) -> str:
    """Deterministic DOT text: one node statement per vertex, one per edge.

    Nodes are ranked by topological layer, sized by point degree, colored by
    genus; pruned vertices are gray and the survivor subgraph is highlighted.
    """
    layers = topological_layers(graph)
    lines = [
        "digraph isolation {",
        "  rankdir=TB;",
        '  node [shape=circle style=filled fontname="Helvetica"];',
    ]
    if layers is not None:
        by_layer: dict[int, list[int]] = {}
        for v, layer in enumerate(layers):
            by_layer.setdefault(layer, []).append(v)
        for layer in sorted(by_layer):
            members = " ".join(f"v{v};" for v in sorted(by_layer[layer]))
            lines.append(f"  {{ rank=same; {members} }}")
    survivors = {
        v.index for v in graph.vertices if graph.pruned and v.index not in graph.pruned
    }
    for v in graph.vertices:
        size = 0.25 + 0.12 * (v.degree ** 0.5)
        color = _GENUS_PALETTE[min(v.genus, len(_GENUS_PALETTE) - 1)]
        if v.index in graph.pruned:
            color = "#bbbbbb"
        pen = ' penwidth=3 color="#d62728"' if v.index in survivors else ""
        lines.append(
            f'  v{v.index} [label="{v.degree}" width={size:.2f} '
            f'fillcolor="{color}"{pen}];'
        )
    for e in graph.edges:
        both = e.source in survivors and e.target in survivors
        attr = ' [color="#d62728" penwidth=2]' if both else ""
        lines.append(f"  v{e.source} -> v{e.target}{attr};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_json(graph: IsolationGraph) -> dict:
    """Stable JSON shape for a graph, vertices and edges in canonical order."""
    return {
        "kind": graph.kind,
        "level": graph.level,
        "j_invariant": (
            None
            if graph.j_invariant is None
            else f"{graph.j_invariant.numerator}/{graph.j_invariant.denominator}"
        ),
        "edge_mode": graph.metadata.get("edge_mode", "deduplicated"),
        "vertices": [
            {
                "subgroup": [
                    format_matrix(g) for g in v.subgroup.generating_matrices()
                ],
                "rep": format_matrix(mat_decode(v.coset_key, graph.level)),
                "degree": v.degree,
                "components": v.components,
                "genus": v.genus,
                "pruned": v.index in graph.pruned,
            }
            for v in graph.vertices
        ],
        "edges": [
            {"src": e.source, "dst": e.target, "kind": e.kind} for e in graph.edges
        ],
    }
