"""Catalogue of the Galois-image data consumed by the pipeline.

Provides the eight possible extended mod-7 images of non-CM elliptic curves
over Q (one by generators, six by membership predicate, plus the full group),
the standard upper-triangular subgroups B0(n)/B1(n), one fully transcribed
image of level 78 (the curve with j = -160855552000/1594323), and the table
of exceptional rational j-invariants with their levels.  The table ships as a
text dataset so transcription fixes do not require code changes; its sha256
is pinned below.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from hashlib import sha256
from importlib import resources
from math import gcd

import numpy as np

from . import ambient as amb
from .groups import MatrixGroup, closure
from .zmatrix import ParseError, ZMatrix, mat_reduce, parse_matrix

EXCEPTIONAL_DATA_FILE = "exceptional_j.txt"
EXCEPTIONAL_DATA_SHA256 = (
    "e4d41a146d8a27831e60650291bf5b17651ded3267380fc5742738d92fe3df1a"
)

MOD7_LABELS = ("G1", "G2", "G3", "G4", "G5", "G6", "G7", "G8")


class DataError(ValueError):
    """Bundled or user-supplied data file is malformed."""


@dataclass(frozen=True)
class GaloisImageRecord:
    """A j-invariant with explicit generators of its extended image."""

    j_invariant: Fraction
    level: int
    generators: tuple[ZMatrix, ...]
    sl_level: int
    notes: str = ""

    def image(self) -> MatrixGroup:
        return closure(self.generators, self.level)


@dataclass(frozen=True)
class ExceptionalJRow:
    j_invariant: Fraction
    agreeable_level: int
    agreeable_index: int
    agreeable_genus: int
    sl_level: int


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise DataError(f"bad rational {text!r}: {exc}") from None


def format_rational(j: Fraction) -> str:
    return f"{j.numerator}/{j.denominator}"


# -- mod-7 image catalogue ---------------------------------------------------


def mod7_image(label: str) -> MatrixGroup:
    """One of the eight candidate extended mod-7 images, by label G1..G8."""
    if label not in MOD7_LABELS:
        raise ValueError(f"unknown label {label!r}; expected one of {MOD7_LABELS}")
    n = 7
    if label == "G1":
        return closure(
            [
                ZMatrix(2, 0, 0, 4, n),
                ZMatrix(0, 2, 1, 0, n),
                ZMatrix(-1, 0, 0, -1, n),
            ],
            n,
        )
    if label == "G8":
        return MatrixGroup(n, amb.gl2_keys(n))
    keys = amb.gl2_keys(n)
    a, b, c, d = amb.unpack_keys(keys, n)
    if label == "G2":
        mask = ((b == 0) & (c == 0)) | ((a == 0) & (d == 0))
    elif label == "G3":
        # +-(1 *; 0 *)
        mask = (c == 0) & ((a == 1) | (a == n - 1))
    elif label == "G4":
        # +-(* *; 0 1)
        mask = (c == 0) & ((d == 1) | (d == n - 1))
    elif label == "G5":
        # (a *; 0 +-a)
        mask = (c == 0) & ((d == a) | (d == (n - a) % n))
    elif label == "G6":
        # (a -b; b a) and (a b; b -a)
        mask = ((a == d) & (b == (n - c) % n)) | ((d == (n - a) % n) & (b == c))
    elif label == "G7":
        mask = c == 0
    return MatrixGroup(n, keys[mask])


def borel(n: int) -> MatrixGroup:
    """B0(n): invertible upper-triangular matrices mod n."""
    if n == 1:
        return MatrixGroup(1, np.zeros(1, dtype=np.int64))
    units = [u for u in range(n) if gcd(u, n) == 1]
    keys = [
        amb.pack_keys(a, b, 0, d, n) for a in units for b in range(n) for d in units
    ]
    return MatrixGroup(n, np.array(sorted(keys), dtype=np.int64))


def borel1(n: int, adjoin_minus_identity: bool = False) -> MatrixGroup:
    """B1(n) = {(1 b; 0 c)}; -I is adjoined only on request."""
    if n == 1:
        return MatrixGroup(1, np.zeros(1, dtype=np.int64))
    units = [u for u in range(n) if gcd(u, n) == 1]
    keys = {amb.pack_keys(1, b, 0, c, n) for b in range(n) for c in units}
    if adjoin_minus_identity:
        keys |= {
            amb.pack_keys(-1, -b, 0, -c, n) for b in range(n) for c in units
        }
    return MatrixGroup(n, np.array(sorted(keys), dtype=np.int64))


# -- the transcribed level-78 image ------------------------------------------

_LEVEL78_GENERATORS = (
    ((27, 14), (64, 39)),
    ((27, 26), (52, 27)),
    ((31, 52), (9, 47)),
    ((73, 38), (44, 71)),
    ((53, 0), (0, 53)),
    ((1, 0), (52, 1)),
    ((14, 39), (13, 53)),
    ((65, 72), (48, 65)),
)


def level78_image() -> GaloisImageRecord:
    """The level-78 extended image attached to j = -160855552000/1594323."""
    gens = tuple(ZMatrix.from_rows(rows, 78) for rows in _LEVEL78_GENERATORS)
    return GaloisImageRecord(
        j_invariant=Fraction(-160855552000, 1594323),
        level=78,
        generators=gens,
        sl_level=26,
        notes="extended image of the rational non-CM curve with this j",
    )


BUNDLED_RECORDS = {"level78": level78_image}

# The j-invariants admitting an isolated point on some X_0(n), with the
# smallest such n.  Keys are a subset of the exceptional-j table.
X0_ISOLATED_MINIMAL_LEVELS: dict[Fraction, int] = {
    Fraction(-121): 11,
    Fraction(-24729001): 11,
    Fraction(-25, 2): 15,
    Fraction(-121945, 32): 15,
    Fraction(46969655, 32768): 15,
    Fraction(-349938025, 8): 15,
    Fraction(-297756989, 2): 17,
    Fraction(-882216989, 131072): 17,
    Fraction(3375, 2): 21,
    Fraction(-140625, 8): 21,
    Fraction(-1159088625, 2097152): 21,
    Fraction(-189613868625, 128): 21,
    Fraction(-9317): 37,
    Fraction(-162677523113838677): 37,
}


def image_at_level(rec: GaloisImageRecord, m: int) -> MatrixGroup:
    """Reduction of the recorded image to a divisor level m."""
    if m < 1 or rec.level % m != 0:
        raise ValueError(f"{m} does not divide the record level {rec.level}")
    reduced = [mat_reduce(g, m) for g in rec.generators]
    return closure(reduced, m)


def sl_part_level(rec: GaloisImageRecord) -> int:
    """Level of (image n SL) computed from the generators.

    Smallest divisor m of the record level such that the determinant-1 part
    of the image at the record level is the full preimage of its mod-m
    reduction.
    """
    n = rec.level
    full = image_at_level(rec, n)
    sl_full = full.element_keys[amb.det_keys(full.element_keys, n) == 1 % n]
    for m in sorted(d for d in range(1, n + 1) if n % d == 0):
        red = np.unique(amb.pack_keys(*amb.unpack_keys(sl_full, n), m))
        kernel_size = amb.sl2_order(n) // amb.sl2_order(m)
        # the SL part is the full preimage of its mod-m shadow iff sizes agree
        if len(sl_full) == len(red) * kernel_size:
            return m
    return n


# -- the exceptional-j dataset ------------------------------------------------


def _data_text() -> str:
    return (
        resources.files("modiso.data").joinpath(EXCEPTIONAL_DATA_FILE).read_text()
    )


def exceptional_rows() -> list[ExceptionalJRow]:
    """All rows of the bundled exceptional-j table, transcription-checked."""
    text = _data_text()
    digest = sha256(text.encode()).hexdigest()
    if digest != EXCEPTIONAL_DATA_SHA256:
        raise DataError(
            f"exceptional-j dataset checksum mismatch: {digest} "
            f"(expected {EXCEPTIONAL_DATA_SHA256})"
        )
    rows = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(";")
        if len(parts) != 5:
            raise DataError(f"line {lineno}: expected 5 fields, got {len(parts)}")
        j = parse_rational(parts[0])
        try:
            level, idx, genus_, sl = (int(p) for p in parts[1:])
        except ValueError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
        if min(level, idx, sl) < 1 or genus_ < 0:
            raise DataError(f"line {lineno}: out-of-range field")
        if j in seen:
            raise DataError(f"line {lineno}: duplicate j-invariant {j}")
        seen.add(j)
        rows.append(ExceptionalJRow(j, level, idx, genus_, sl))
    return rows


def exceptional_row_for_j(j: Fraction) -> ExceptionalJRow | None:
    for row in exceptional_rows():
        if row.j_invariant == j:
            return row
    return None


# -- user-supplied generator files --------------------------------------------


def load_generator_file(path) -> tuple[int, list[ZMatrix]]:
    """Parse a generators file: a ``mod n`` header then one matrix per line."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    level = None
    gens: list[ZMatrix] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if level is None:
            if not line.startswith("mod"):
                raise DataError(f"line {lineno}: expected a 'mod n' header first")
            try:
                level = int(line[3:].strip())
            except ValueError:
                raise DataError(f"line {lineno}: bad modulus in header") from None
            if level < 1:
                raise DataError(f"line {lineno}: modulus must be positive")
            continue
        try:
            gens.append(parse_matrix(f"{line} mod {level}"))
        except ParseError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
    if level is None:
        raise DataError("generator file has no 'mod n' header")
    if not gens:
        raise DataError("generator file lists no matrices")
    return level, gens
