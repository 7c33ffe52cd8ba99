"""Expression trees, grammar, canonical forms and bounded enumeration.

Concrete syntax:
    expr   := factor {"*" factor}
    factor := "C2" | "F" "(" INT ["," BITS] ")" | "D" "(" INT ";" ROWS ";" BITS ")"
            | "Q2" | "Qp" "(" INT ")" | "GR" "(" INT "," expr ")" | "(" expr ")"
BITS are little-endian 0/1 strings, ROWS comma-separated BITS.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

from .gf2 import BitVec, rref


class ValidityError(ValueError):
    """Structurally well-formed input that violates an expression axiom."""


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class FreeAtom:
    """Free pro-2 block of the given rank; e marks the class of -1."""

    rank: int
    e: BitVec

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValidityError("free block rank must be >= 1")
        if self.e.width != self.rank:
            raise ValidityError("e width must equal the free block rank")


@dataclass(frozen=True)
class C2Atom:
    """Real-closed block Z/2Z."""


@dataclass(frozen=True)
class DemushkinAtom:
    """Finite block with a nondegenerate pairing into a one-dimensional Brauer space."""

    gram: tuple[BitVec, ...]
    e: BitVec

    def __post_init__(self) -> None:
        n = len(self.gram)
        if n < 2:
            raise ValidityError("Demushkin block needs dimension >= 2 (dimension 1 is C2)")
        if any(row.width != n for row in self.gram) or self.e.width != n:
            raise ValidityError("gram rows and e must have width equal to the dimension")
        for i in range(n):
            for j in range(i):
                if self.gram[i].get(j) != self.gram[j].get(i):
                    raise ValidityError(f"gram is not symmetric at ({i},{j})")
        for i in range(n):
            if self.gram[i].get(i) != self.e.dot(self.gram[i]):
                raise ValidityError(
                    f"diagonal law fails at row {i}: gram[{i}][{i}] must equal <e, column {i}>"
                )
        if rref(list(self.gram), n).dim != n:
            raise ValidityError("gram is degenerate")

    @property
    def n(self) -> int:
        return len(self.gram)


@dataclass(frozen=True)
class GroupRing:
    """Adds m uniformizer classes over the base via the cyclotomic action."""

    m: int
    base: "Etg2Expr"

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValidityError("group-ring step count must be >= 1")


@dataclass(frozen=True)
class FreeProd:
    factors: tuple["Etg2Expr", ...]

    def __post_init__(self) -> None:
        if len(self.factors) < 2:
            raise ValidityError("free product needs at least 2 factors")


Etg2Expr = Union[FreeAtom, C2Atom, DemushkinAtom, GroupRing, FreeProd]


def d(expr: Etg2Expr) -> int:
    """Minimal generator count: the dimension of the square-class carrier."""
    if isinstance(expr, FreeAtom):
        return expr.rank
    if isinstance(expr, C2Atom):
        return 1
    if isinstance(expr, DemushkinAtom):
        return expr.n
    if isinstance(expr, GroupRing):
        return expr.m + d(expr.base)
    if isinstance(expr, FreeProd):
        return sum(d(f) for f in expr.factors)
    raise TypeError(f"not an expression: {expr!r}")


def print_expr(expr: Etg2Expr) -> str:
    if isinstance(expr, FreeAtom):
        if expr.e.is_zero():
            return f"F({expr.rank})"
        return f"F({expr.rank},{expr.e})"
    if isinstance(expr, C2Atom):
        return "C2"
    if isinstance(expr, DemushkinAtom):
        rows = ",".join(str(row) for row in expr.gram)
        return f"D({expr.n};{rows};{expr.e})"
    if isinstance(expr, GroupRing):
        return f"GR({expr.m},{print_expr(expr.base)})"
    if isinstance(expr, FreeProd):
        parts = []
        for f in expr.factors:
            text = print_expr(f)
            parts.append(f"({text})" if isinstance(f, FreeProd) else text)
        return "*".join(parts)
    raise TypeError(f"not an expression: {expr!r}")


def canonical_key(expr: Etg2Expr) -> str:
    """Total-order key: the printed canonical form."""
    return print_expr(canonicalize(expr))


def canonicalize(expr: Etg2Expr) -> Etg2Expr:
    if isinstance(expr, FreeAtom):
        if expr.e.is_zero():
            return expr
        return FreeAtom(expr.rank, BitVec.unit(expr.rank, 0))
    if isinstance(expr, (C2Atom, DemushkinAtom)):
        return expr
    if isinstance(expr, GroupRing):
        base = canonicalize(expr.base)
        if isinstance(base, GroupRing):
            return GroupRing(expr.m + base.m, base.base)
        return GroupRing(expr.m, base)
    if isinstance(expr, FreeProd):
        flat: list[Etg2Expr] = []
        for f in expr.factors:
            c = canonicalize(f)
            if isinstance(c, FreeProd):
                flat.extend(c.factors)
            else:
                flat.append(c)
        flat.sort(key=print_expr)
        return FreeProd(tuple(flat))
    raise TypeError(f"not an expression: {expr!r}")


def is_canonical(expr: Etg2Expr) -> bool:
    return canonicalize(expr) == expr


def flatten(expr: Etg2Expr) -> list[Etg2Expr]:
    """Leaf factors in left-to-right order; group-ring nodes count as leaves."""
    if isinstance(expr, FreeProd):
        out: list[Etg2Expr] = []
        for f in expr.factors:
            out.extend(flatten(f))
        return out
    return [expr]


def free_product(factors: list[Etg2Expr]) -> Etg2Expr:
    """Flattened product in the given order; a single factor stays bare."""
    flat: list[Etg2Expr] = []
    for f in factors:
        flat.extend(flatten(f))
    if not flat:
        raise ValidityError("empty free product")
    if len(flat) == 1:
        return flat[0]
    return FreeProd(tuple(flat))


def skeleton(expr: Etg2Expr) -> str:
    """Expression shape with e and gram data erased; the dedup grouping key."""
    if isinstance(expr, FreeAtom):
        return f"F({expr.rank})"
    if isinstance(expr, C2Atom):
        return "C2"
    if isinstance(expr, DemushkinAtom):
        return f"D({expr.n})"
    if isinstance(expr, GroupRing):
        return f"GR({expr.m},{skeleton(expr.base)})"
    if isinstance(expr, FreeProd):
        return "*".join(sorted(skeleton(f) for f in expr.factors))
    raise TypeError(f"not an expression: {expr!r}")


# --- builtins ---------------------------------------------------------------

def q2_atom() -> DemushkinAtom:
    """Dyadic local structure on the classes (-1, 2, 5)."""
    gram = (BitVec.from_string("100"), BitVec.from_string("001"), BitVec.from_string("010"))
    return DemushkinAtom(gram, BitVec.from_string("100"))


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    i = 2
    while i * i <= p:
        if p % i == 0:
            return False
        i += 1
    return True


def qp_atom(p: int) -> DemushkinAtom:
    """Local structure at an odd prime p on the classes (u, p), u a nonsquare unit."""
    if not _is_prime(p):
        raise ValidityError(f"{p} is not prime")
    if p == 2:
        return q2_atom()
    if p % 4 == 1:
        gram = (BitVec.from_string("01"), BitVec.from_string("10"))
        e = BitVec.from_string("00")
    else:
        gram = (BitVec.from_string("01"), BitVec.from_string("11"))
        e = BitVec.from_string("10")
    return DemushkinAtom(gram, e)


def demushkin_identity(n: int) -> DemushkinAtom:
    gram = tuple(BitVec.unit(n, i) for i in range(n))
    return DemushkinAtom(gram, BitVec(n, (1 << n) - 1))


def demushkin_hyperbolic(n: int) -> DemushkinAtom:
    if n % 2:
        raise ValidityError("hyperbolic block needs even dimension")
    gram = tuple(BitVec.unit(n, i ^ 1) for i in range(n))
    return DemushkinAtom(gram, BitVec.zero(n))


def demushkin_catalog(n: int) -> list[DemushkinAtom]:
    """One representative per isomorphism class of valid (gram, e) pairs.

    Nondegenerate symmetric pairings over F_2 fall into the alternating
    (even dimension) and identity types; e is forced by the diagonal law.
    The test suite certifies this catalog against brute-force enumeration.
    """
    if n < 2:
        return []
    atoms = [demushkin_identity(n)]
    if n % 2 == 0:
        atoms.append(demushkin_hyperbolic(n))
    atoms.sort(key=print_expr)
    return atoms


# --- parsing ----------------------------------------------------------------

@dataclass(frozen=True)
class _Token:
    kind: str  # NAME, NUMBER, SYM, EOF
    text: str
    line: int
    col: int


def _lex(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, i = 1, 1, 0
    while i < len(text):
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c.isspace():
            col += 1
            i += 1
            continue
        start_col = col
        if c.isalpha():
            j = i
            while j < len(text) and text[j].isalnum():
                j += 1
            tokens.append(_Token("NAME", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(_Token("NUMBER", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if c in "();,*":
            tokens.append(_Token("SYM", c, line, start_col))
            col += 1
            i += 1
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_sym(self, sym: str) -> _Token:
        tok = self.next()
        if tok.kind != "SYM" or tok.text != sym:
            raise ParseError(f"expected {sym!r}, found {tok.text or 'end of input'!r}", tok.line, tok.col)
        return tok

    def expect_int(self) -> int:
        tok = self.next()
        if tok.kind != "NUMBER":
            raise ParseError(f"expected an integer, found {tok.text or 'end of input'!r}", tok.line, tok.col)
        return int(tok.text)

    def expect_bits(self) -> BitVec:
        tok = self.next()
        if tok.kind != "NUMBER" or any(c not in "01" for c in tok.text):
            raise ParseError(f"expected a 0/1 string, found {tok.text or 'end of input'!r}", tok.line, tok.col)
        return BitVec.from_string(tok.text)

    def parse_expr(self) -> Etg2Expr:
        factors = [self.parse_factor()]
        while self.peek().kind == "SYM" and self.peek().text == "*":
            self.next()
            factors.append(self.parse_factor())
        if len(factors) == 1:
            return factors[0]
        return FreeProd(tuple(factors))

    def parse_factor(self) -> Etg2Expr:
        tok = self.next()
        if tok.kind == "SYM" and tok.text == "(":
            inner = self.parse_expr()
            self.expect_sym(")")
            return inner
        if tok.kind != "NAME":
            raise ParseError(f"expected a constructor, found {tok.text or 'end of input'!r}", tok.line, tok.col)
        name = tok.text
        if name == "C2":
            return C2Atom()
        if name == "Q2":
            return q2_atom()
        if name == "F":
            return self._parse_free(tok)
        if name == "D":
            return self._parse_demushkin(tok)
        if name == "Qp":
            self.expect_sym("(")
            p = self.expect_int()
            self.expect_sym(")")
            return self._validated(lambda: qp_atom(p), tok)
        if name == "GR":
            self.expect_sym("(")
            m = self.expect_int()
            self.expect_sym(",")
            base = self.parse_expr()
            self.expect_sym(")")
            return self._validated(lambda: GroupRing(m, base), tok)
        raise ParseError(f"unknown constructor {name!r}", tok.line, tok.col)

    def _parse_free(self, tok: _Token) -> Etg2Expr:
        self.expect_sym("(")
        rank = self.expect_int()
        if self.peek().kind == "SYM" and self.peek().text == ",":
            self.next()
            e = self.expect_bits()
        else:
            e = BitVec.zero(rank) if 0 <= rank <= 64 else BitVec.zero(0)
        self.expect_sym(")")
        return self._validated(lambda: FreeAtom(rank, e), tok)

    def _parse_demushkin(self, tok: _Token) -> Etg2Expr:
        self.expect_sym("(")
        n = self.expect_int()
        self.expect_sym(";")
        rows = [self.expect_bits()]
        while self.peek().kind == "SYM" and self.peek().text == ",":
            self.next()
            rows.append(self.expect_bits())
        self.expect_sym(";")
        e = self.expect_bits()
        self.expect_sym(")")
        if len(rows) != n:
            raise ParseError(f"expected {n} gram rows, found {len(rows)}", tok.line, tok.col)
        return self._validated(lambda: DemushkinAtom(tuple(rows), e), tok)

    @staticmethod
    def _validated(build: Callable[[], Etg2Expr], tok: _Token) -> Etg2Expr:
        try:
            return build()
        except ValidityError as exc:
            raise ValidityError(f"{tok.line}:{tok.col}: {exc}") from None


def parse(text: str) -> Etg2Expr:
    """Parse the concrete syntax; factors keep their written order."""
    parser = _Parser(_lex(text))
    expr = parser.parse_expr()
    tok = parser.peek()
    if tok.kind != "EOF":
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return expr


# --- bounded enumeration ----------------------------------------------------

def _atoms_of_dim(k: int) -> list[Etg2Expr]:
    atoms: list[Etg2Expr] = [FreeAtom(k, BitVec.zero(k)), FreeAtom(k, BitVec.unit(k, 0))]
    if k == 1:
        atoms.append(C2Atom())
    atoms.extend(demushkin_catalog(k))
    return atoms


def _multisets_summing(pool: list[tuple[int, Etg2Expr]], total: int, min_size: int) -> list[tuple[Etg2Expr, ...]]:
    """Nondecreasing index multisets from pool whose dimensions sum to total."""
    out: list[tuple[Etg2Expr, ...]] = []

    def rec(start: int, remaining: int, chosen: list[Etg2Expr]) -> None:
        if remaining == 0:
            if len(chosen) >= min_size:
                out.append(tuple(chosen))
            return
        for idx in range(start, len(pool)):
            dim, expr = pool[idx]
            if dim > remaining:
                continue
            chosen.append(expr)
            rec(idx, remaining - dim, chosen)
            chosen.pop()

    rec(0, total, [])
    return out


def enumerate_expressions(d_max: int, progress: Callable[[int, int], None] | None = None) -> list[Etg2Expr]:
    """Every canonical expression with d(E) <= d_max, one per isomorphism
    class within each expression shape, in strictly increasing canonical key.
    """
    if not 1 <= d_max <= 5:
        raise ValueError("d_max must be between 1 and 5")
    from .synth import synthesize
    from .verify import isomorphic

    by_dim: dict[int, list[Etg2Expr]] = {}
    nonprod: dict[int, list[Etg2Expr]] = {}
    for k in range(1, d_max + 1):
        candidates: list[Etg2Expr] = list(_atoms_of_dim(k))
        for m in range(1, k):
            for base in by_dim[k - m]:
                if isinstance(base, GroupRing):
                    continue
                candidates.append(GroupRing(m, base))
        pool = [(j, e) for j in range(1, k) for e in nonprod[j]]
        for factors in _multisets_summing(pool, k, 2):
            ordered = tuple(sorted(factors, key=print_expr))
            candidates.append(FreeProd(ordered))
        candidates.sort(key=print_expr)

        kept: list[Etg2Expr] = []
        buckets: dict[str, list] = {}
        for expr in candidates:
            shape = skeleton(expr)
            struct = synthesize(expr)
            bucket = buckets.setdefault(shape, [])
            if any(isomorphic(struct, other) is not None for other in bucket):
                continue
            bucket.append(struct)
            kept.append(expr)
        by_dim[k] = kept
        nonprod[k] = [e for e in kept if not isinstance(e, FreeProd)]
        if progress is not None:
            progress(k, len(kept))

    everything = [e for k in range(1, d_max + 1) for e in by_dim[k]]
    everything.sort(key=print_expr)
    return everything
