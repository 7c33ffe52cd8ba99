"""Exact linear algebra over GF(2): bit-packed vectors, subspaces, linear maps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

MAX_DIM = 64


class DimensionError(ValueError):
    """Width or dimension mismatch, or the packed-word cap exceeded."""


def _check_width(n: int) -> None:
    if not 0 <= n <= MAX_DIM:
        raise DimensionError(f"dimension {n} outside 0..{MAX_DIM}")


@dataclass(frozen=True, order=True)
class BitVec:
    """Vector in F_2^width packed into an int; bit i is coordinate i."""

    width: int
    bits: int = 0

    def __post_init__(self) -> None:
        _check_width(self.width)
        if self.bits < 0 or self.bits >> self.width:
            raise DimensionError(f"bits beyond width {self.width}: 0x{self.bits:x}")

    @classmethod
    def zero(cls, width: int) -> BitVec:
        return cls(width, 0)

    @classmethod
    def unit(cls, width: int, index: int) -> BitVec:
        if not 0 <= index < width:
            raise DimensionError(f"unit index {index} outside width {width}")
        return cls(width, 1 << index)

    @classmethod
    def from_string(cls, text: str) -> BitVec:
        """Little-endian 0/1 string: character i is coordinate i."""
        if any(c not in "01" for c in text):
            raise ValueError(f"not a 0/1 string: {text!r}")
        bits = 0
        for i, c in enumerate(text):
            if c == "1":
                bits |= 1 << i
        return cls(len(text), bits)

    def get(self, index: int) -> int:
        if not 0 <= index < self.width:
            raise DimensionError(f"index {index} outside width {self.width}")
        return (self.bits >> index) & 1

    def __xor__(self, other: BitVec) -> BitVec:
        if self.width != other.width:
            raise DimensionError(f"width mismatch {self.width} != {other.width}")
        return BitVec(self.width, self.bits ^ other.bits)

    def dot(self, other: BitVec) -> int:
        if self.width != other.width:
            raise DimensionError(f"width mismatch {self.width} != {other.width}")
        return (self.bits & other.bits).bit_count() & 1

    def is_zero(self) -> bool:
        return self.bits == 0

    def weight(self) -> int:
        return self.bits.bit_count()

    def support(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.width) if (self.bits >> i) & 1)

    def extract(self, offset: int, width: int) -> BitVec:
        """Coordinates offset..offset+width-1 as a width-wide vector."""
        if offset < 0 or offset + width > self.width:
            raise DimensionError("extract window outside vector")
        return BitVec(width, (self.bits >> offset) & ((1 << width) - 1))

    def embed(self, offset: int, total: int) -> BitVec:
        """This vector placed at the given offset inside F_2^total."""
        if offset < 0 or offset + self.width > total:
            raise DimensionError("embed window outside target")
        return BitVec(total, self.bits << offset)

    def concat(self, other: BitVec) -> BitVec:
        return BitVec(self.width + other.width, self.bits | (other.bits << self.width))

    def __str__(self) -> str:
        return "".join("1" if (self.bits >> i) & 1 else "0" for i in range(self.width))


@dataclass(frozen=True)
class Subspace:
    """Subspace of F_2^ambient_dim held as a reduced row-echelon basis.

    Rows are ordered by pivot (lowest set bit) and every pivot coordinate is
    cleared in the other rows, so equal spans compare equal.
    """

    ambient_dim: int
    basis: tuple[BitVec, ...]

    def __post_init__(self) -> None:
        _check_width(self.ambient_dim)
        last_pivot = -1
        for row in self.basis:
            if row.width != self.ambient_dim:
                raise DimensionError("basis row width mismatch")
            if row.is_zero():
                raise ValueError("zero row in echelon basis")
            pivot = (row.bits & -row.bits).bit_length() - 1
            if pivot <= last_pivot:
                raise ValueError("basis rows not in echelon order")
            last_pivot = pivot

    @classmethod
    def zero(cls, ambient_dim: int) -> Subspace:
        return cls(ambient_dim, ())

    @classmethod
    def full(cls, ambient_dim: int) -> Subspace:
        return cls(ambient_dim, tuple(BitVec.unit(ambient_dim, i) for i in range(ambient_dim)))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains(self, v: BitVec) -> bool:
        if v.width != self.ambient_dim:
            raise DimensionError(f"width mismatch {v.width} != {self.ambient_dim}")
        x = v.bits
        for row in self.basis:
            if x & (row.bits & -row.bits):
                x ^= row.bits
        return x == 0

    def __contains__(self, v: BitVec) -> bool:
        return self.contains(v)

    def __le__(self, other: Subspace) -> bool:
        return all(other.contains(row) for row in self.basis)

    def sum(self, other: Subspace) -> Subspace:
        if self.ambient_dim != other.ambient_dim:
            raise DimensionError("ambient dimension mismatch")
        return rref(list(self.basis) + list(other.basis), self.ambient_dim)

    def intersect(self, other: Subspace) -> Subspace:
        if self.ambient_dim != other.ambient_dim:
            raise DimensionError("ambient dimension mismatch")
        k = self.dim
        stacked = LinMap(
            k + other.dim,
            self.ambient_dim,
            tuple(self.basis) + tuple(other.basis),
        )
        vectors = []
        for combo in kernel(stacked).basis:
            x = BitVec.zero(self.ambient_dim)
            for i in range(k):
                if combo.get(i):
                    x ^= self.basis[i]
            vectors.append(x)
        return rref(vectors, self.ambient_dim)

    def elements(self) -> Iterator[BitVec]:
        if self.dim > 24:
            raise DimensionError(f"refusing to enumerate 2^{self.dim} elements")
        for mask in range(1 << self.dim):
            x = 0
            for i in range(self.dim):
                if (mask >> i) & 1:
                    x ^= self.basis[i].bits
            yield BitVec(self.ambient_dim, x)


@dataclass(frozen=True)
class LinMap:
    """Linear map F_2^src_dim -> F_2^dst_dim stored by columns."""

    src_dim: int
    dst_dim: int
    columns: tuple[BitVec, ...]

    def __post_init__(self) -> None:
        _check_width(self.src_dim)
        _check_width(self.dst_dim)
        if len(self.columns) != self.src_dim:
            raise DimensionError("column count must equal source dimension")
        for c in self.columns:
            if c.width != self.dst_dim:
                raise DimensionError("column width must equal target dimension")

    @classmethod
    def zero(cls, src_dim: int, dst_dim: int) -> LinMap:
        return cls(src_dim, dst_dim, tuple(BitVec.zero(dst_dim) for _ in range(src_dim)))

    @classmethod
    def identity(cls, dim: int) -> LinMap:
        return cls(dim, dim, tuple(BitVec.unit(dim, i) for i in range(dim)))

    def apply(self, v: BitVec) -> BitVec:
        if v.width != self.src_dim:
            raise DimensionError(f"width mismatch {v.width} != {self.src_dim}")
        x = 0
        bits = v.bits
        while bits:
            low = bits & -bits
            x ^= self.columns[low.bit_length() - 1].bits
            bits ^= low
        return BitVec(self.dst_dim, x)

    def compose(self, inner: LinMap) -> LinMap:
        """self after inner."""
        if inner.dst_dim != self.src_dim:
            raise DimensionError("composition dimension mismatch")
        return LinMap(inner.src_dim, self.dst_dim, tuple(self.apply(c) for c in inner.columns))

    def __add__(self, other: LinMap) -> LinMap:
        if (self.src_dim, self.dst_dim) != (other.src_dim, other.dst_dim):
            raise DimensionError("map shape mismatch")
        return LinMap(self.src_dim, self.dst_dim, tuple(a ^ b for a, b in zip(self.columns, other.columns)))

    def transpose(self) -> LinMap:
        cols = tuple(
            BitVec(self.src_dim, sum(self.columns[j].get(i) << j for j in range(self.src_dim)))
            for i in range(self.dst_dim)
        )
        return LinMap(self.dst_dim, self.src_dim, cols)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.columns)


def rref(vectors: list[BitVec] | tuple[BitVec, ...], ambient_dim: int | None = None) -> Subspace:
    """Canonical reduced echelon subspace spanned by the given vectors."""
    vectors = list(vectors)
    if ambient_dim is None:
        if not vectors:
            raise DimensionError("ambient dimension required for empty input")
        ambient_dim = vectors[0].width
    rows: list[int] = []
    for v in vectors:
        if v.width != ambient_dim:
            raise DimensionError(f"width mismatch {v.width} != {ambient_dim}")
        x = v.bits
        for r in rows:
            if x & (r & -r):
                x ^= r
        if not x:
            continue
        pivot = x & -x
        rows = [r ^ x if r & pivot else r for r in rows]
        rows.append(x)
    rows.sort(key=lambda r: r & -r)
    return Subspace(ambient_dim, tuple(BitVec(ambient_dim, r) for r in rows))


def solve_membership(space: Subspace, v: BitVec) -> bool:
    """True iff v lies in the span of the subspace."""
    return space.contains(v)


def _pivot_basis(columns: tuple[BitVec, ...], src_dim: int) -> list[tuple[int, int]]:
    """Greedy elimination basis [(reduced column bits, source combination)]."""
    pivots: list[tuple[int, int]] = []
    for j in range(src_dim):
        c = columns[j].bits
        m = 1 << j
        for pc, pm in pivots:
            if c & (pc & -pc):
                c ^= pc
                m ^= pm
        if c:
            pivots.append((c, m))
    return pivots


def kernel(f: LinMap) -> Subspace:
    pivots: list[tuple[int, int]] = []
    null: list[BitVec] = []
    for j in range(f.src_dim):
        c = f.columns[j].bits
        m = 1 << j
        for pc, pm in pivots:
            if c & (pc & -pc):
                c ^= pc
                m ^= pm
        if c:
            pivots.append((c, m))
        else:
            null.append(BitVec(f.src_dim, m))
    return rref(null, f.src_dim)


def image(f: LinMap) -> Subspace:
    return rref(list(f.columns), f.dst_dim)


def solve(f: LinMap, target: BitVec) -> BitVec | None:
    """A particular v with f(v) = target, or None when target is not hit."""
    if target.width != f.dst_dim:
        raise DimensionError(f"width mismatch {target.width} != {f.dst_dim}")
    y = target.bits
    m = 0
    for pc, pm in _pivot_basis(f.columns, f.src_dim):
        if y & (pc & -pc):
            y ^= pc
            m ^= pm
    if y:
        return None
    return BitVec(f.src_dim, m)


def annihilator(space: Subspace) -> Subspace:
    """All u with u . w = 0 for every w in the subspace."""
    n = space.ambient_dim
    k = space.dim
    cols = tuple(
        BitVec(k, sum(space.basis[r].get(j) << r for r in range(k)))
        for j in range(n)
    )
    return kernel(LinMap(n, k, cols))


def preimage(f: LinMap, space: Subspace) -> Subspace:
    """Full preimage f^{-1}(space) inside the source."""
    if space.ambient_dim != f.dst_dim:
        raise DimensionError("subspace must live in the target space")
    ann = annihilator(space)
    cols = tuple(
        BitVec(ann.dim, sum(ann.basis[t].dot(c) << t for t in range(ann.dim)))
        for c in f.columns
    )
    return kernel(LinMap(f.src_dim, ann.dim, cols))


def sum_subspaces(a: Subspace, b: Subspace) -> Subspace:
    return a.sum(b)


def intersect_subspaces(a: Subspace, b: Subspace) -> Subspace:
    return a.intersect(b)


def complete_basis(vectors: list[BitVec] | tuple[BitVec, ...], ambient_dim: int | None = None) -> list[BitVec]:
    """Extend an independent list to a full basis.

    Completion vectors are the unit vectors at the non-pivot coordinates of
    the input's echelon form, in index order, so the output is deterministic.
    """
    vectors = list(vectors)
    if ambient_dim is None:
        if not vectors:
            raise DimensionError("ambient dimension required for empty input")
        ambient_dim = vectors[0].width
    reduced = rref(vectors, ambient_dim)
    if reduced.dim != len(vectors):
        raise ValueError("input vectors are dependent")
    pivots = {(row.bits & -row.bits).bit_length() - 1 for row in reduced.basis}
    completion = [BitVec.unit(ambient_dim, i) for i in range(ambient_dim) if i not in pivots]
    return vectors + completion
