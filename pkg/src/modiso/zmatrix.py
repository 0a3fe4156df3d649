"""Exact arithmetic for residues and 2x2 matrices over Z/n.

Everything here is a value type: residues and matrices are immutable, stored
with least nonnegative representatives, and safe to share across threads.
The integer encoding of a matrix, ``((a*n + b)*n + c)*n + d``, fixes the
canonical ordering used by every other module (element lists, coset
representatives, conjugacy-class representatives).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

MAX_MODULUS = 1 << 16


class ModulusMismatch(ValueError):
    """Operands live over different moduli."""


class NotInvertible(ValueError):
    """Matrix determinant is not a unit mod n."""


class ParseError(ValueError):
    """Malformed matrix or group literal; carries the offending position."""

    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at position {pos}: {text!r}")
        self.text = text
        self.pos = pos


def _check_modulus(n: int) -> int:
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"modulus must be a positive integer, got {n!r}")
    if n > MAX_MODULUS:
        raise ValueError(f"modulus {n} exceeds supported bound {MAX_MODULUS}")
    return n


@dataclass(frozen=True, order=True)
class Residue:
    """An element of Z/n, stored as its least nonnegative representative."""

    value: int
    modulus: int

    def __post_init__(self):
        _check_modulus(self.modulus)
        object.__setattr__(self, "value", self.value % self.modulus)

    def is_unit(self) -> bool:
        return gcd(self.value, self.modulus) == 1

    def inverse(self) -> "Residue":
        if not self.is_unit():
            raise NotInvertible(f"{self.value} is not a unit mod {self.modulus}")
        return Residue(pow(self.value, -1, self.modulus), self.modulus)

    def __mul__(self, other: "Residue") -> "Residue":
        if self.modulus != other.modulus:
            raise ModulusMismatch(f"moduli {self.modulus} != {other.modulus}")
        return Residue(self.value * other.value, self.modulus)

    def __int__(self) -> int:
        return self.value


@dataclass(frozen=True)
class ZMatrix:
    """A 2x2 matrix over Z/n; entries are reduced on construction."""

    a: int
    b: int
    c: int
    d: int
    modulus: int

    def __post_init__(self):
        n = _check_modulus(self.modulus)
        for name in ("a", "b", "c", "d"):
            object.__setattr__(self, name, getattr(self, name) % n)

    @staticmethod
    def identity(n: int) -> "ZMatrix":
        return ZMatrix(1, 0, 0, 1, n)

    @staticmethod
    def minus_identity(n: int) -> "ZMatrix":
        return ZMatrix(-1, 0, 0, -1, n)

    @staticmethod
    def from_rows(rows, n: int) -> "ZMatrix":
        (a, b), (c, d) = rows
        return ZMatrix(a, b, c, d, n)

    @property
    def rows(self):
        return ((self.a, self.b), (self.c, self.d))

    @property
    def key(self) -> int:
        return mat_encode(self)

    def is_invertible(self) -> bool:
        return mat_det(self).is_unit()

    def __mul__(self, other: "ZMatrix") -> "ZMatrix":
        return mat_mul(self, other)

    def __neg__(self) -> "ZMatrix":
        return ZMatrix(-self.a, -self.b, -self.c, -self.d, self.modulus)

    def __lt__(self, other: "ZMatrix") -> bool:
        if self.modulus != other.modulus:
            raise ModulusMismatch(f"moduli {self.modulus} != {other.modulus}")
        return self.key < other.key

    def __repr__(self) -> str:
        return f"ZMatrix({format_matrix(self)!r})"


def mat_mul(x: ZMatrix, y: ZMatrix) -> ZMatrix:
    """Matrix product mod n; fg acts as the composition f o g on columns."""
    if x.modulus != y.modulus:
        raise ModulusMismatch(f"moduli {x.modulus} != {y.modulus}")
    n = x.modulus
    return ZMatrix(
        x.a * y.a + x.b * y.c,
        x.a * y.b + x.b * y.d,
        x.c * y.a + x.d * y.c,
        x.c * y.b + x.d * y.d,
        n,
    )


def mat_det(x: ZMatrix) -> Residue:
    return Residue(x.a * x.d - x.b * x.c, x.modulus)


def mat_inv(x: ZMatrix) -> ZMatrix:
    det = mat_det(x)
    if not det.is_unit():
        raise NotInvertible(
            f"determinant {det.value} is not a unit mod {x.modulus}"
        )
    e = det.inverse().value
    return ZMatrix(x.d * e, -x.b * e, -x.c * e, x.a * e, x.modulus)


def mat_reduce(x: ZMatrix, m: int) -> ZMatrix:
    """Entrywise reduction to a divisor modulus; a ring homomorphism."""
    _check_modulus(m)
    if x.modulus % m != 0:
        raise ValueError(f"{m} does not divide modulus {x.modulus}")
    return ZMatrix(x.a, x.b, x.c, x.d, m)


def mat_encode(x: ZMatrix) -> int:
    n = x.modulus
    return ((x.a * n + x.b) * n + x.c) * n + x.d


def mat_decode(key: int, n: int) -> ZMatrix:
    _check_modulus(n)
    if not 0 <= key < n**4:
        raise ValueError(f"key {key} out of range for modulus {n}")
    d = key % n
    c = (key // n) % n
    b = (key // n**2) % n
    a = key // n**3
    return ZMatrix(a, b, c, d, n)


def format_matrix(x: ZMatrix) -> str:
    return f"[[{x.a},{x.b}],[{x.c},{x.d}]] mod {x.modulus}"


def _parse_int(text: str, pos: int):
    start = pos
    if pos < len(text) and text[pos] in "+-":
        pos += 1
    while pos < len(text) and text[pos].isdigit():
        pos += 1
    if pos == start or not text[start:pos].lstrip("+-"):
        raise ParseError("expected an integer", text, start)
    return int(text[start:pos]), pos


def _skip_ws(text: str, pos: int) -> int:
    while pos < len(text) and text[pos].isspace():
        pos += 1
    return pos


def _expect(text: str, pos: int, token: str) -> int:
    pos = _skip_ws(text, pos)
    if not text.startswith(token, pos):
        raise ParseError(f"expected {token!r}", text, pos)
    return pos + len(token)


def _parse_matrix_body(text: str, pos: int):
    # [[a,b],[c,d]] with arbitrary integers, reduced later
    pos = _expect(text, pos, "[")
    entries = []
    for row in range(2):
        pos = _expect(text, pos, "[")
        for col in range(2):
            pos = _skip_ws(text, pos)
            value, pos = _parse_int(text, pos)
            entries.append(value)
            if col == 0:
                pos = _expect(text, pos, ",")
        pos = _expect(text, pos, "]")
        if row == 0:
            pos = _expect(text, pos, ",")
    pos = _expect(text, pos, "]")
    return entries, pos


def _parse_modulus_suffix(text: str, pos: int):
    pos = _expect(text, pos, "mod")
    pos = _skip_ws(text, pos)
    n, pos = _parse_int(text, pos)
    if n < 1:
        raise ParseError("modulus must be positive", text, pos)
    return n, pos


def parse_matrix(text: str) -> ZMatrix:
    """Parse ``[[a,b],[c,d]] mod n``; entries may be any integers."""
    entries, pos = _parse_matrix_body(text, 0)
    n, pos = _parse_modulus_suffix(text, pos)
    pos = _skip_ws(text, pos)
    if pos != len(text):
        raise ParseError("trailing characters", text, pos)
    a, b, c, d = entries
    return ZMatrix(a, b, c, d, n)


def parse_matrix_list(text: str):
    """Parse ``<[[..]],[[..]],... mod n>`` into a list of ZMatrix."""
    pos = _expect(text, 0, "<")
    bodies = []
    while True:
        entries, pos = _parse_matrix_body(text, pos)
        bodies.append(entries)
        pos = _skip_ws(text, pos)
        if pos < len(text) and text[pos] == ",":
            pos += 1
            continue
        break
    n, pos = _parse_modulus_suffix(text, pos)
    pos = _expect(text, pos, ">")
    pos = _skip_ws(text, pos)
    if pos != len(text):
        raise ParseError("trailing characters", text, pos)
    return [ZMatrix(a, b, c, d, n) for a, b, c, d in bodies]
