"""Square-class structures: synthesis from expressions, value sets, radical."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .gf2 import BitVec, LinMap, Subspace, DimensionError, kernel, rref, solve
from .exprdsl import (
    C2Atom,
    DemushkinAtom,
    Etg2Expr,
    FreeAtom,
    FreeProd,
    GroupRing,
    print_expr,
)


class ModelError(AssertionError):
    """An internal dichotomy of the model failed; red alert, not user error."""


class Classification(enum.Enum):
    FREE = "FREE"
    TRIVIAL_RADICAL = "TRIVIAL_RADICAL"
    PROPER_RADICAL = "PROPER_RADICAL"


@dataclass(frozen=True)
class SquareClassStructure:
    """Finite model (V, e, B, q) of square classes with the quaternion pairing.

    V = F_2^n carries the square classes written additively, e is the class
    of -1, and gram[i][j] in F_2^b_dim is the pairing of basis classes i, j.
    """

    n: int
    e: BitVec
    b_dim: int
    gram: tuple[tuple[BitVec, ...], ...]
    reduced: bool = True

    def __post_init__(self) -> None:
        if self.e.width != self.n:
            raise DimensionError("e width must equal n")
        if len(self.gram) != self.n:
            raise DimensionError("gram must have n rows")
        for row in self.gram:
            if len(row) != self.n:
                raise DimensionError("gram rows must have n entries")
            for entry in row:
                if entry.width != self.b_dim:
                    raise DimensionError("gram entries must have width b_dim")

    def pair(self, x: BitVec, y: BitVec) -> BitVec:
        if x.width != self.n or y.width != self.n:
            raise DimensionError("pairing arguments must have width n")
        acc = 0
        for i in x.support():
            row = self.gram[i]
            for j in y.support():
                acc ^= row[j].bits
        return BitVec(self.b_dim, acc)

    def pairing_map(self, x: BitVec) -> LinMap:
        """The linear map v -> q(v, x)."""
        if x.width != self.n:
            raise DimensionError("argument must have width n")
        cols = []
        for j in range(self.n):
            acc = 0
            for i in x.support():
                acc ^= self.gram[j][i].bits
            cols.append(BitVec(self.b_dim, acc))
        return LinMap(self.n, self.b_dim, tuple(cols))


EMPTY_STRUCTURE = SquareClassStructure(0, BitVec.zero(0), 0, ())


def structure_violations(s: SquareClassStructure) -> list[str]:
    """Symmetry and diagonal-law breaches, with coordinates."""
    out = []
    for i in range(s.n):
        for j in range(i):
            if s.gram[i][j] != s.gram[j][i]:
                out.append(f"symmetry fails at ({i},{j})")
    e_row = s.pairing_map(s.e)
    for i in range(s.n):
        if s.gram[i][i] != e_row.columns[i]:
            out.append(f"diagonal law fails at {i}")
    if s.reduced:
        entries = [entry for row in s.gram for entry in row]
        if rref(entries, s.b_dim).dim != s.b_dim:
            out.append("reduced flag set but gram entries do not span B")
    return out


def value_set(s: SquareClassStructure, x: BitVec) -> Subspace:
    """Classes represented by the binary form <1, x>; x = 0 encodes <1, 1>."""
    return kernel(s.pairing_map(x ^ s.e))


def radical(s: SquareClassStructure) -> Subspace:
    """Classes pairing to zero with everything."""
    out = Subspace.full(s.n)
    for i in range(s.n):
        out = out.intersect(kernel(s.pairing_map(BitVec.unit(s.n, i))))
        if out.dim == 0:
            break
    return out


def classify(s: SquareClassStructure) -> Classification:
    if not s.reduced:
        raise ValueError("classification requires a reduced structure")
    r = radical(s)
    if r.dim == s.n:
        if s.b_dim != 0:
            raise ModelError("full radical with nonzero reduced Brauer space")
        return Classification.FREE
    if r.dim == 0:
        return Classification.TRIVIAL_RADICAL
    return Classification.PROPER_RADICAL


def is_rigid(s: SquareClassStructure, a: BitVec) -> bool:
    """a outside {1, -1} whose binary form represents only {1, a}."""
    if a.width != s.n:
        raise DimensionError("argument must have width n")
    if a.is_zero() or a == s.e:
        return False
    return value_set(s, a) == rref([a], s.n)


def is_birigid(s: SquareClassStructure, a: BitVec) -> bool:
    return is_rigid(s, a) and is_rigid(s, a ^ s.e)


def rigid_elements(s: SquareClassStructure) -> list[BitVec]:
    if s.n > 16:
        raise DimensionError("rigid-element scan capped at dimension 16")
    return [
        BitVec(s.n, bits)
        for bits in range(1, 1 << s.n)
        if is_rigid(s, BitVec(s.n, bits))
    ]


def direct_sum(parts: list[SquareClassStructure]) -> SquareClassStructure:
    n = sum(p.n for p in parts)
    b_dim = sum(p.b_dim for p in parts)
    e = BitVec.zero(n)
    offs_v, offs_b = [], []
    ov = ob = 0
    for p in parts:
        offs_v.append(ov)
        offs_b.append(ob)
        e ^= p.e.embed(ov, n)
        ov += p.n
        ob += p.b_dim
    gram = [[BitVec.zero(b_dim)] * n for _ in range(n)]
    for p, dv, db in zip(parts, offs_v, offs_b):
        for i in range(p.n):
            for j in range(p.n):
                gram[dv + i][dv + j] = p.gram[i][j].embed(db, b_dim)
    reduced = all(p.reduced for p in parts)
    return SquareClassStructure(n, e, b_dim, tuple(tuple(row) for row in gram), reduced)


def group_ring_step(s0: SquareClassStructure) -> SquareClassStructure:
    """One uniformizer layer: V gains t, B gains a copy of the old V.

    The new pairings q(x, t) = x and q(t, t) = e, read in the fresh copy,
    encode the residue and value-class behaviour of a 2-henselian layer.
    """
    n = s0.n + 1
    b_dim = s0.b_dim + s0.n
    e = s0.e.concat(BitVec.zero(1))
    gram = [[BitVec.zero(b_dim)] * n for _ in range(n)]
    for i in range(s0.n):
        for j in range(s0.n):
            gram[i][j] = s0.gram[i][j].embed(0, b_dim)
    for i in range(s0.n):
        cross = BitVec.unit(s0.n, i).embed(s0.b_dim, b_dim)
        gram[i][s0.n] = cross
        gram[s0.n][i] = cross
    gram[s0.n][s0.n] = s0.e.embed(s0.b_dim, b_dim)
    return SquareClassStructure(n, e, b_dim, tuple(tuple(row) for row in gram), s0.reduced)


def synthesize(expr: Etg2Expr) -> SquareClassStructure:
    if isinstance(expr, FreeAtom):
        gram = tuple(tuple(BitVec.zero(0) for _ in range(expr.rank)) for _ in range(expr.rank))
        return SquareClassStructure(expr.rank, expr.e, 0, gram)
    if isinstance(expr, C2Atom):
        one = BitVec(1, 1)
        return SquareClassStructure(1, one, 1, ((one,),))
    if isinstance(expr, DemushkinAtom):
        n = expr.n
        gram = tuple(
            tuple(BitVec(1, expr.gram[i].get(j)) for j in range(n)) for i in range(n)
        )
        return SquareClassStructure(n, expr.e, 1, gram)
    if isinstance(expr, GroupRing):
        s = synthesize(expr.base)
        for _ in range(expr.m):
            s = group_ring_step(s)
        return s
    if isinstance(expr, FreeProd):
        return direct_sum([synthesize(f) for f in expr.factors])
    raise TypeError(f"not an expression: {expr!r}")


def reduce_structure(s: SquareClassStructure) -> SquareClassStructure:
    """Drop Brauer coordinates outside the span of the pairing values."""
    entries = [entry for row in s.gram for entry in row]
    span = rref(entries, s.b_dim)
    if span.dim == s.b_dim:
        return replace(s, reduced=True)
    basis_map = LinMap(span.dim, s.b_dim, span.basis)
    gram = []
    for row in s.gram:
        new_row = []
        for entry in row:
            coords = solve(basis_map, entry)
            if coords is None:
                raise ModelError("gram entry outside its own span")
            new_row.append(coords)
        gram.append(tuple(new_row))
    return SquareClassStructure(s.n, s.e, span.dim, tuple(gram), reduced=True)


def structure_to_json(s: SquareClassStructure, provenance: str | None = None) -> dict:
    doc = {
        "n": s.n,
        "e": str(s.e),
        "bDim": s.b_dim,
        "gram": [[str(entry) for entry in row] for row in s.gram],
    }
    if provenance is not None:
        doc["provenance"] = provenance
    return doc


def structure_from_json(doc: dict) -> SquareClassStructure:
    n = doc["n"]
    b_dim = doc["bDim"]
    e = BitVec.from_string(doc["e"])
    gram = tuple(
        tuple(BitVec.from_string(cell) for cell in row) for row in doc["gram"]
    )
    s = SquareClassStructure(n, e, b_dim, gram, reduced=False)
    problems = structure_violations(s)
    if problems:
        raise ValueError("; ".join(problems))
    return reduce_structure(s)


def synthesize_checked(expr: Etg2Expr) -> SquareClassStructure:
    """Synthesis plus the axioms sanity gate; used at trust boundaries."""
    s = synthesize(expr)
    problems = structure_violations(s)
    if problems:
        raise ModelError(f"synthesized structure violates axioms for {print_expr(expr)}: {problems}")
    return s
