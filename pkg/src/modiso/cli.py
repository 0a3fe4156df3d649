"""Command-line front end.

Subcommands reproduce the main computations end to end:

  level7      closed points above j = 3^3*5*7^5/2^7 on all level-7 curves,
              the quotient isolation graph, pruning, and the survivor table
  x0          genus/degree analysis of X_0(d) for divisors d of an image's
              SL-part level, for a catalogued or user-supplied j-invariant
  subgroups   the lattice of subgroups containing -I at a given level
  genus       invariants of X_H for a named or literal subgroup

The subgroup lattice is cached on disk as versioned JSON with a checksum;
reports are deterministic for fixed inputs, with or without the cache.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from hashlib import sha256
from pathlib import Path

from . import curves, galois, groups, isograph
from .zmatrix import ParseError, parse_matrix_list

CACHE_FORMAT_VERSION = 1
CACHE_ENV_VAR = "MODISO_CACHE_DIR"

LEVEL7_J = Fraction(3**3 * 5 * 7**5, 2**7)


@dataclass
class RunConfig:
    """Validated run options shared by every subcommand."""

    cache_dir: Path
    output_format: str = "table"
    parallelism: int = 1

    def __post_init__(self):
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.output_format not in ("table", "json", "csv"):
            raise ValueError(f"unknown output format {self.output_format!r}")


@dataclass
class LatticeCache:
    """On-disk form of a subgroup lattice: versioned payload plus checksum."""

    level: int
    format_version: int
    checksum: str
    payload: dict

    @classmethod
    def wrap(cls, lattice: groups.SubgroupLattice) -> "LatticeCache":
        payload = lattice.to_payload()
        return cls(
            level=lattice.modulus,
            format_version=CACHE_FORMAT_VERSION,
            checksum=_payload_checksum(payload),
            payload=payload,
        )

    @classmethod
    def read(cls, path: Path) -> "LatticeCache":
        doc = json.loads(path.read_text())
        return cls(
            level=int(doc["payload"]["modulus"]),
            format_version=doc["format_version"],
            checksum=doc["checksum"],
            payload=doc["payload"],
        )

    def write(self, path: Path):
        doc = {
            "format_version": self.format_version,
            "checksum": self.checksum,
            "payload": self.payload,
        }
        path.write_text(json.dumps(doc, separators=(",", ":")))

    def unwrap(self) -> groups.SubgroupLattice:
        if self.format_version != CACHE_FORMAT_VERSION:
            raise ValueError(
                f"cache format {self.format_version} != {CACHE_FORMAT_VERSION}"
            )
        if _payload_checksum(self.payload) != self.checksum:
            raise ValueError("checksum mismatch")
        return groups.SubgroupLattice.from_payload(self.payload)


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV_VAR)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "modiso"


def _cache_path(cache_dir: Path, level: int) -> Path:
    return cache_dir / f"subgroups-level{level}.v{CACHE_FORMAT_VERSION}.json"


def _payload_checksum(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return sha256(blob.encode()).hexdigest()


def save_lattice(lattice: groups.SubgroupLattice, cache_dir: Path) -> Path:
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = _cache_path(cache_dir, lattice.modulus)
    LatticeCache.wrap(lattice).write(path)
    return path


def load_or_build_lattice(level: int, cache_dir: Path) -> groups.SubgroupLattice:
    path = _cache_path(cache_dir, level)
    if path.exists():
        try:
            return LatticeCache.read(path).unwrap()
        except (ValueError, KeyError, TypeError) as exc:
            # an older format version rebuilds silently; anything else warns
            if not (isinstance(exc, ValueError) and "cache format" in str(exc)):
                print(
                    f"warning: lattice cache {path} is corrupt ({exc}); rebuilding",
                    file=sys.stderr,
                )
    lattice = groups.enumerate_subgroups_containing_minus_i(level)
    save_lattice(lattice, cache_dir)
    return lattice


# -- output helpers -------------------------------------------------------------


def _format_table(headers: list[str], rows: list[list[str]]) -> list[str]:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def fmt(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(r) for r in rows)
    return lines


def _emit(cfg: RunConfig, report: dict, table_lines: list[str], csv_rows: list[list[str]]):
    fmt = cfg.output_format
    if fmt == "json":
        print(json.dumps(report, indent=2))
    elif fmt == "csv":
        for row in csv_rows:
            print(";".join(row))
    else:
        for line in table_lines:
            print(line)


def _group_literal(H: groups.MatrixGroup) -> str:
    inner = ",".join(
        f"[[{g.a},{g.b}],[{g.c},{g.d}]]" for g in H.generating_matrices()
    )
    return f"<{inner} mod {H.modulus}>"


# -- level7 ---------------------------------------------------------------------


def _survivor_rows(graph: isograph.IsolationGraph):
    rows = [v for v in graph.survivors()]
    rows.sort(key=lambda v: (-v.degree, -v.point_count, -v.genus, v.subgroup_index, v.coset_key))
    return rows


def cmd_level7(args, cfg: RunConfig) -> int:
    lattice = load_or_build_lattice(7, cfg.cache_dir)
    g1 = galois.mod7_image("G1")

    report: dict = {
        "level": 7,
        "j_invariant": f"{LEVEL7_J.numerator}/{LEVEL7_J.denominator}",
        "subgroups": lattice.subgroup_count,
        "conjugacy_classes": lattice.class_count,
    }
    lines = [
        f"level 7, j = {LEVEL7_J.numerator}/{LEVEL7_J.denominator}",
        f"subgroups containing -I: {lattice.subgroup_count} "
        f"in {lattice.class_count} conjugacy classes",
    ]

    if args.full_graph:
        full = isograph.build_full_graph(
            lattice, g1, j_invariant=LEVEL7_J, jobs=cfg.parallelism
        )
        report["full_graph"] = {
            "vertices": full.vertex_count,
            "edges": full.edge_count,
        }
        lines.append(
            f"full isolation graph: {full.vertex_count} vertices, "
            f"{full.edge_count} edges"
        )

    quotient = isograph.build_quotient_graph(
        lattice, g1, j_invariant=LEVEL7_J, jobs=cfg.parallelism
    )
    quotient = isograph.prune_riemann_roch(quotient)
    analysis = isograph.survivors_analysis(quotient)

    report["quotient_graph"] = {
        "vertices": quotient.vertex_count,
        "edges": quotient.edge_count,
        "pruned": len(quotient.pruned),
        "survivors": len(analysis.survivor_ids),
        "survivors_connected": analysis.connected,
        "unique_initial_vertex": analysis.unique_initial,
        "all_survivors_reachable": analysis.all_reachable_from_initial,
    }
    lines.append(
        f"quotient graph: {quotient.vertex_count} vertices, "
        f"{quotient.edge_count} edges"
    )
    lines.append(
        f"pruned by the degree bound deg > components*genus: "
        f"{len(quotient.pruned)} of {quotient.vertex_count}"
    )
    lines.append(
        f"candidate isolated classes: {len(analysis.survivor_ids)} "
        f"(connected: {analysis.connected}, "
        f"unique initial vertex: {analysis.unique_initial})"
    )

    if isograph.topological_layers(quotient) is None:
        print("error: quotient graph is not acyclic", file=sys.stderr)
        return 1

    rows = _survivor_rows(quotient)
    table = []
    csv_rows = [["subgroup", "genus", "components", "degree", "count", "pruned"]]
    report_rows = []
    for v in rows:
        literal = _group_literal(v.subgroup)
        table.append(
            [literal, str(v.genus), str(v.components), str(v.degree), str(v.point_count)]
        )
        csv_rows.append(
            [literal, str(v.genus), str(v.components), str(v.degree),
             str(v.point_count), "no"]
        )
        report_rows.append(
            {
                "subgroup": literal,
                "genus": v.genus,
                "components": v.components,
                "degree": v.degree,
                "count": v.point_count,
            }
        )
    report["survivors"] = report_rows
    lines.append("")
    lines.extend(
        _format_table(["H", "genus", "det index", "deg(x)", "count"], table)
    )

    if args.dot:
        Path(args.dot).write_text(isograph.export_dot(quotient))
        lines.append(f"wrote DOT graph to {args.dot}")

    _emit(cfg, report, lines, csv_rows)
    return 0


# -- x0 --------------------------------------------------------------------------


def divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def minimal_positive_genus_divisor(sl_level: int) -> int | None:
    """Smallest divisor d of sl_level with genus(X_0(d)) > 0."""
    for d in divisors(sl_level):
        if curves.genus(galois.borel(d)).genus > 0:
            return d
    return None


def _resolve_x0_record(args):
    """Returns (j, sl_level, record-or-None)."""
    record = None
    if args.j in galois.BUNDLED_RECORDS:
        record = galois.BUNDLED_RECORDS[args.j]()
        j = record.j_invariant
    else:
        j = galois.parse_rational(args.j)
        for name in galois.BUNDLED_RECORDS:
            bundled = galois.BUNDLED_RECORDS[name]()
            if bundled.j_invariant == j:
                record = bundled
    if args.generators:
        level, gens = galois.load_generator_file(args.generators)
        provisional = galois.GaloisImageRecord(
            j_invariant=j, level=level, generators=tuple(gens), sl_level=level
        )
        record = galois.GaloisImageRecord(
            j_invariant=j,
            level=level,
            generators=tuple(gens),
            sl_level=galois.sl_part_level(provisional),
            notes=f"user-supplied generators from {args.generators}",
        )
    row = galois.exceptional_row_for_j(j)
    if row is not None:
        sl_level = row.sl_level
    elif record is not None:
        sl_level = record.sl_level
    else:
        return j, None, None
    return j, sl_level, record


def cmd_x0(args, cfg: RunConfig) -> int:
    j, sl_level, record = _resolve_x0_record(args)
    if sl_level is None:
        print(
            f"unknown j-invariant {j}; catalogued j-invariants:", file=sys.stderr
        )
        for row in galois.exceptional_rows():
            print(f"  {galois.format_rational(row.j_invariant)}", file=sys.stderr)
        print(
            "supply --generators <file> to analyze an uncatalogued j-invariant",
            file=sys.stderr,
        )
        return 2

    report: dict = {
        "j_invariant": galois.format_rational(j),
        "sl_level": sl_level,
        "divisors": [],
    }
    lines = [
        f"j = {galois.format_rational(j)}",
        f"level of the SL-part of the image: {sl_level}",
    ]
    csv_rows = [["divisor", "genus", "components", "degrees", "all_pruned"]]

    minimal = None
    for d in divisors(sl_level):
        b = galois.borel(d)
        inv = curves.genus(b)
        entry: dict = {
            "divisor": d,
            "genus": inv.genus,
            "components": inv.components,
        }
        degree_text = ""
        if record is not None and record.level % d == 0:
            image = galois.image_at_level(record, d)
            points = curves.closed_points_over_j(b, image)
            degs = sorted({p.degree for p in points})
            all_pruned = all(
                p.degree > inv.components * inv.genus for p in points
            )
            entry["degrees"] = degs
            entry["point_count"] = len(points)
            entry["all_pruned"] = all_pruned
            degree_text = (
                f"; point degrees {degs} "
                f"({'all' if all_pruned else 'not all'} exceed components*genus)"
            )
        if inv.genus > 0 and minimal is None:
            minimal = d
        report["divisors"].append(entry)
        lines.append(
            f"X_0({d}): genus {inv.genus}, components {inv.components}{degree_text}"
        )
        csv_rows.append(
            [str(d), str(inv.genus), str(inv.components),
             " ".join(str(x) for x in entry.get("degrees", [])),
             str(entry.get("all_pruned", ""))]
        )

    report["minimal_positive_genus_divisor"] = minimal
    if minimal is None:
        lines.append("no divisor of the SL-part level has positive genus")
    else:
        lines.append(f"minimal divisor with positive genus: X_0({minimal})")
    _emit(cfg, report, lines, csv_rows)
    return 0


# -- subgroups --------------------------------------------------------------------


def cmd_subgroups(args, cfg: RunConfig) -> int:
    try:
        lattice = load_or_build_lattice(args.level, cfg.cache_dir)
    except groups.TooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = {
        "level": args.level,
        "subgroups": lattice.subgroup_count,
        "conjugacy_classes": lattice.class_count,
        "classes": [],
    }
    lines = [
        f"level {args.level}: {lattice.subgroup_count} subgroups containing -I, "
        f"{lattice.class_count} conjugacy classes"
    ]
    rows = []
    csv_rows = [["class", "order", "size", "det_index", "genus"]]
    for cid, members in enumerate(lattice.classes):
        rep = lattice.subgroups[lattice.class_reps[cid]]
        inv = curves.genus(rep)
        report["classes"].append(
            {
                "class": cid,
                "order": rep.order,
                "size": len(members),
                "det_index": inv.components,
                "genus": inv.genus,
            }
        )
        row = [str(cid), str(rep.order), str(len(members)), str(inv.components),
               str(inv.genus)]
        rows.append(row)
        csv_rows.append(row)
    lines.extend(
        _format_table(["class", "order", "size", "det index", "genus"], rows)
    )
    _emit(cfg, report, lines, csv_rows)
    return 0


# -- genus -----------------------------------------------------------------------


def parse_group_spec(spec: str) -> groups.MatrixGroup:
    """A builtin name (GL2(n), SL2(n), B0(n), B1(n), G1..G8) or a group literal."""
    spec = spec.strip()
    if spec.startswith("<"):
        return groups.closure(parse_matrix_list(spec))
    if spec in galois.MOD7_LABELS:
        return galois.mod7_image(spec)
    for prefix, builder in (
        ("GL2", lambda n: groups.gl2(n)),
        ("SL2", lambda n: groups.sl2(n)),
        ("B0", galois.borel),
        ("B1", lambda n: galois.borel1(n, adjoin_minus_identity=True)),
    ):
        if spec.startswith(prefix + "(") and spec.endswith(")"):
            body = spec[len(prefix) + 1 : -1]
            try:
                n = int(body)
            except ValueError:
                raise ParseError("bad modulus in group name", spec, len(prefix) + 1)
            if n < 1:
                raise ParseError("modulus must be positive", spec, len(prefix) + 1)
            return builder(n)
    raise ParseError("unrecognized group spec", spec, 0)


def cmd_genus(args, cfg: RunConfig) -> int:
    try:
        H = parse_group_spec(args.group)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    inv = curves.genus(H)
    report = {
        "level": inv.level,
        "order": H.order,
        "sl2_index": inv.sl2_index,
        "e2": inv.e2_count,
        "e3": inv.e3_count,
        "cusps": inv.cusp_count,
        "genus": inv.genus,
        "components": inv.components,
    }
    lines = [
        f"group of order {H.order} mod {inv.level}",
        f"mu (PSL index) = {inv.sl2_index}, e2 = {inv.e2_count}, "
        f"e3 = {inv.e3_count}, cusps = {inv.cusp_count}",
        f"genus = {inv.genus}, geometric components = {inv.components}",
    ]
    csv_rows = [
        ["level", "order", "mu", "e2", "e3", "cusps", "genus", "components"],
        [str(inv.level), str(H.order), str(inv.sl2_index), str(inv.e2_count),
         str(inv.e3_count), str(inv.cusp_count), str(inv.genus),
         str(inv.components)],
    ]
    _emit(cfg, report, lines, csv_rows)
    return 0


# -- argument parsing ---------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser):
    p.add_argument(
        "--cache-dir",
        default=str(default_cache_dir()),
        help=f"lattice cache directory (default: ${CACHE_ENV_VAR} or ~/.cache/modiso)",
    )
    p.add_argument(
        "--format",
        choices=("table", "json", "csv"),
        default="table",
        help="output format",
    )
    p.add_argument(
        "--jobs",
        type=int,
        default=1,
        help="worker threads for per-subgroup computations (results are "
        "independent of this value)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modiso",
        description="closed points, invariants and isolation graphs of modular curves",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p7 = sub.add_parser(
        "level7", help="classify candidate isolated points at level 7"
    )
    p7.add_argument("--full-graph", action="store_true",
                    help="also build and report the full isolation graph")
    p7.add_argument("--dot", metavar="PATH",
                    help="write the pruned quotient graph as DOT")
    _add_common(p7)

    px = sub.add_parser(
        "x0", help="X_0(d) genus/degree analysis for divisors of an image's SL level"
    )
    px.add_argument("--j", required=True,
                    help="rational j-invariant (num/den) or bundled record name")
    px.add_argument("--generators", metavar="FILE",
                    help="generator file ('mod n' header, one matrix per line)")
    _add_common(px)

    ps = sub.add_parser("subgroups", help="enumerate subgroups containing -I")
    ps.add_argument("--level", type=int, required=True)
    _add_common(ps)

    pg = sub.add_parser("genus", help="invariants of X_H for one subgroup")
    pg.add_argument("group", help="builtin name (B0(11), GL2(7), G1..G8) or literal "
                    "'<[[a,b],[c,d]],... mod n>'")
    _add_common(pg)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            cache_dir=Path(args.cache_dir),
            output_format=args.format,
            parallelism=args.jobs,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    handlers = {
        "level7": cmd_level7,
        "x0": cmd_x0,
        "subgroups": cmd_subgroups,
        "genus": cmd_genus,
    }
    try:
        return handlers[args.command](args, cfg)
    except (RuntimeError, ValueError) as exc:
        # consistency-check failures and bad inputs land here
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
