"""Free-times-trivial-radical decomposition of an expression."""

from __future__ import annotations

from dataclasses import dataclass

from .gf2 import BitVec
from .exprdsl import Etg2Expr, FreeAtom, FreeProd, d, free_product, print_expr
from .synth import Classification, ModelError, classify, synthesize


@dataclass(frozen=True)
class NormalForm:
    """Free part of rank free_rank (carrying e_free) times a trivial-radical part."""

    free_rank: int
    e_free: BitVec
    h: Etg2Expr | None

    def __post_init__(self) -> None:
        if self.e_free.width != self.free_rank:
            raise ValueError("e_free width must equal free_rank")


def decompose(expr: Etg2Expr) -> NormalForm:
    """Split syntactically on products, classify at the leaves.

    A proper radical can only enter through free factors, so any non-product
    node classifying as PROPER_RADICAL is a model bug, not an input error.
    """
    if isinstance(expr, FreeProd):
        parts = [decompose(f) for f in expr.factors]
        free_rank = sum(p.free_rank for p in parts)
        e_free = BitVec.zero(free_rank)
        off = 0
        for p in parts:
            e_free ^= p.e_free.embed(off, free_rank)
            off += p.free_rank
        hs = [p.h for p in parts if p.h is not None]
        h = free_product(hs) if hs else None
        return NormalForm(free_rank, e_free, h)
    cls = classify(synthesize(expr))
    if cls is Classification.FREE:
        return NormalForm(d(expr), synthesize(expr).e, None)
    if cls is Classification.TRIVIAL_RADICAL:
        return NormalForm(0, BitVec.zero(0), expr)
    raise ModelError(f"proper radical at non-product node {print_expr(expr)}")


def reassemble(nf: NormalForm) -> Etg2Expr:
    """The expression F(free_rank, e_free) * H realized by the normal form."""
    parts: list[Etg2Expr] = []
    if nf.free_rank > 0:
        parts.append(FreeAtom(nf.free_rank, nf.e_free))
    if nf.h is not None:
        parts.append(nf.h)
    if not parts:
        raise ValueError("empty normal form")
    return free_product(parts)


def normal_form_to_json(nf: NormalForm) -> dict:
    return {
        "freeRank": nf.free_rank,
        "eFree": str(nf.e_free),
        "H": print_expr(nf.h) if nf.h is not None else None,
    }
