"""Quadratic extensions of synthesized structures with restriction and norm maps."""

from __future__ import annotations

from dataclasses import dataclass

from .gf2 import BitVec, LinMap, Subspace, complete_basis, kernel, rref, solve
from .exprdsl import (
    C2Atom,
    DemushkinAtom,
    Etg2Expr,
    FreeAtom,
    FreeProd,
    GroupRing,
    ValidityError,
    d,
    flatten,
    print_expr,
)
from .synth import (
    EMPTY_STRUCTURE,
    ModelError,
    SquareClassStructure,
    radical,
    synthesize,
)


@dataclass(frozen=True)
class AtomCase:
    """Per-atom record of which Kurosh case fired and what it produced."""

    index: int
    atom: str
    a_part: str
    case: str  # "extended" | "doubled"
    result: tuple[str, ...]


@dataclass(frozen=True)
class QuadExt:
    expr_f: Etg2Expr
    a: BitVec
    expr_k: Etg2Expr | None
    s_f: SquareClassStructure
    s_k: SquareClassStructure
    iota: LinMap
    norm: LinMap
    sigma: LinMap
    atom_log: tuple[AtomCase, ...]
    complement_rank: int
    complement_basis: tuple[str, ...]


def _coords_in_basis(basis: list[BitVec], v: BitVec) -> BitVec:
    width = basis[0].width if basis else v.width
    coords = solve(LinMap(len(basis), width, tuple(basis)), v)
    if coords is None:
        raise ModelError("vector outside the chosen basis span")
    return coords


def _extend_free_atom(atom: FreeAtom, a: BitVec) -> tuple[list[Etg2Expr], LinMap, LinMap]:
    r = atom.rank
    xb = complete_basis([a], r)
    n_k = 2 * r - 1
    iota_cols = []
    for i in range(r):
        coords = _coords_in_basis(xb, BitVec.unit(r, i))
        iota_cols.append(BitVec(n_k, coords.bits >> 1))
    iota = LinMap(r, n_k, tuple(iota_cols))
    norm_cols = [BitVec.zero(r)] * (r - 1) + list(xb)
    norm = LinMap(n_k, r, tuple(norm_cols))
    e_prime = iota.apply(atom.e)
    return [FreeAtom(n_k, e_prime)], iota, norm


def _extend_c2(atom: C2Atom, a: BitVec) -> tuple[list[Etg2Expr], LinMap, LinMap]:
    # Adjoining sqrt(-1) to a real-closed block leaves a quadratically
    # closed structure: no carrier, zero maps.
    return [], LinMap(1, 0, (BitVec.zero(0),)), LinMap(0, 1, ())


def _extend_demushkin(atom: DemushkinAtom, a: BitVec) -> tuple[list[Etg2Expr], LinMap, LinMap]:
    n = atom.n

    def pair1(x: BitVec, y: BitVec) -> int:
        acc = 0
        for i in x.support():
            acc ^= atom.gram[i].bits
        return BitVec(n, acc).dot(y)

    ga = BitVec(n, 0)
    for i in a.support():
        ga ^= atom.gram[i]
    aperp = kernel(LinMap(n, 1, tuple(BitVec(1, ga.get(j)) for j in range(n))))
    wt = list(aperp.basis)
    xb = complete_basis([a], n)
    n_k = 2 * n - 2
    w_off = n - 1

    gram_rows = [[0] * n_k for _ in range(n_k)]
    for bi in range(n - 1):
        for j in range(n - 1):
            bit = pair1(xb[bi + 1], wt[j])
            gram_rows[bi][w_off + j] = bit
            gram_rows[w_off + j][bi] = bit
    for j in range(n - 1):
        gram_rows[w_off + j][w_off + j] = pair1(atom.e, wt[j])
    gram = tuple(
        BitVec(n_k, sum(bit << j for j, bit in enumerate(row))) for row in gram_rows
    )

    iota_cols = []
    for i in range(n):
        coords = _coords_in_basis(xb, BitVec.unit(n, i))
        iota_cols.append(BitVec(n_k, coords.bits >> 1))
    iota = LinMap(n, n_k, tuple(iota_cols))
    e_prime = iota.apply(atom.e)
    norm_cols = [BitVec.zero(n)] * (n - 1) + wt
    norm = LinMap(n_k, n, tuple(norm_cols))
    try:
        result = DemushkinAtom(gram, e_prime)
    except ValidityError as exc:
        raise ModelError(f"extension of {print_expr(atom)} broke the block axioms: {exc}") from None
    return [result], iota, norm


def _wrap_group_ring(m: int, base: Etg2Expr | None) -> Etg2Expr:
    # A group ring over a quadratically closed base collapses one layer
    # into a rank-1 free block.
    if base is None:
        free = FreeAtom(1, BitVec.zero(1))
        return free if m == 1 else GroupRing(m - 1, free)
    return GroupRing(m, base)


def _extend_group_ring(atom: GroupRing, a: BitVec) -> tuple[list[Etg2Expr], LinMap, LinMap]:
    n0 = d(atom.base)
    m = atom.m
    n = n0 + m
    u = a.extract(0, n0)
    tau = a.extract(n0, m)

    if tau.is_zero():
        sub = extend(atom.base, u)
        wrapped = _wrap_group_ring(m, sub.expr_k)
        n_sub = sub.s_k.n
        n_k = n_sub + m
        iota_cols = [sub.iota.columns[i].embed(0, n_k) for i in range(n0)]
        iota_cols += [BitVec.unit(n_k, n_sub + j) for j in range(m)]
        norm_cols = [sub.norm.columns[i].embed(0, n) for i in range(n_sub)]
        norm_cols += [BitVec.zero(n)] * m
        return [wrapped], LinMap(n, n_k, tuple(iota_cols)), LinMap(n_k, n, tuple(norm_cols))

    # Ramified layer: re-pivot the uniformizer block on the lowest t with a
    # nonzero a-coordinate; the carrier keeps its shape, only the maps move.
    p = tau.support()[0]
    e_f = synthesize(atom).e
    iota_cols = [BitVec.unit(n, i) for i in range(n0)]
    for j in range(m):
        if j == p:
            tau_rest = BitVec(m, tau.bits ^ (1 << p))
            iota_cols.append(u.embed(0, n) ^ tau_rest.embed(n0, n))
        else:
            iota_cols.append(BitVec.unit(n, n0 + j))
    norm_cols = [BitVec.zero(n)] * n
    norm_cols[n0 + p] = e_f ^ a
    return [atom], LinMap(n, n, tuple(iota_cols)), LinMap(n, n, tuple(norm_cols))


def extend_atom(atom: Etg2Expr, a: BitVec) -> tuple[list[Etg2Expr], LinMap, LinMap]:
    """Extension of a single atom at a nonzero class: factor list plus maps."""
    if a.is_zero():
        raise ValueError("extension class must be nonzero")
    if a.width != d(atom):
        raise ValueError("extension class width must match the atom carrier")
    if isinstance(atom, FreeAtom):
        return _extend_free_atom(atom, a)
    if isinstance(atom, C2Atom):
        return _extend_c2(atom, a)
    if isinstance(atom, DemushkinAtom):
        return _extend_demushkin(atom, a)
    if isinstance(atom, GroupRing):
        return _extend_group_ring(atom, a)
    raise TypeError(f"not an atom: {atom!r}")


def _doubled(atom: Etg2Expr) -> tuple[list[Etg2Expr], LinMap, LinMap]:
    n = d(atom)
    iota_cols = tuple(BitVec(2 * n, (1 << i) | (1 << (n + i))) for i in range(n))
    norm_cols = tuple(BitVec.unit(n, i % n) for i in range(2 * n))
    return [atom, atom], LinMap(n, 2 * n, iota_cols), LinMap(2 * n, n, norm_cols)


def extend(expr: Etg2Expr, a: BitVec) -> QuadExt:
    """Quadratic extension at a != 0, with restriction, norm and the involution.

    The input is flattened in written order; its atoms are extended or
    doubled according to where a projects, plus a free complement of rank
    (number of atoms hit) - 1.
    """
    s_f = synthesize(expr)
    if a.width != s_f.n:
        raise ValueError(f"a must have width {s_f.n}")
    if a.is_zero():
        raise ValueError("extension class must be nonzero")

    atoms = flatten(expr)
    dims = [d(atom) for atom in atoms]
    offs_f = [0]
    for dim in dims[:-1]:
        offs_f.append(offs_f[-1] + dim)
    a_parts = [a.extract(off, dim) for off, dim in zip(offs_f, dims)]
    hit = [i for i, part in enumerate(a_parts) if not part.is_zero()]
    rho = len(hit) - 1

    pieces: list[tuple[LinMap, LinMap]] = []
    factors: list[Etg2Expr] = []
    log: list[AtomCase] = []
    offs_k: list[int] = []
    n_k = 0
    for i, atom in enumerate(atoms):
        if not a_parts[i].is_zero():
            piece_factors, piece_iota, piece_norm = extend_atom(atom, a_parts[i])
            case = "extended"
        else:
            piece_factors, piece_iota, piece_norm = _doubled(atom)
            case = "doubled"
        offs_k.append(n_k)
        n_k += piece_iota.dst_dim
        pieces.append((piece_iota, piece_norm))
        factors.extend(piece_factors)
        result = "*".join(print_expr(f) for f in piece_factors) or "1"
        log.append(AtomCase(i, print_expr(atom), str(a_parts[i]), case, result))

    avecs = [a_parts[i].embed(offs_f[i], s_f.n) for i in hit]
    if rho >= 1:
        adapted = complete_basis(avecs, s_f.n)
        images = [BitVec.unit(rho, j) for j in range(rho)]
        images.append(BitVec(rho, (1 << rho) - 1))
        images += [BitVec.zero(rho)] * (len(adapted) - len(hit))
        basis_map = LinMap(len(adapted), s_f.n, tuple(adapted))
        ifree_cols = []
        for i in range(s_f.n):
            coords = solve(basis_map, BitVec.unit(s_f.n, i))
            if coords is None:
                raise ModelError("adapted basis does not span the carrier")
            acc = BitVec.zero(rho)
            for j in coords.support():
                acc ^= images[j]
            ifree_cols.append(acc)
        ifree = LinMap(s_f.n, rho, tuple(ifree_cols))
        off_free = n_k
        n_k += rho
        factors.append(FreeAtom(rho, ifree.apply(s_f.e)))
    else:
        ifree = None
        off_free = n_k

    if not factors:
        expr_k: Etg2Expr | None = None
    elif len(factors) == 1:
        expr_k = factors[0]
    else:
        expr_k = FreeProd(tuple(factors))

    iota_cols: list[BitVec] = []
    for j in range(s_f.n):
        i = max(idx for idx, off in enumerate(offs_f) if off <= j)
        local = j - offs_f[i]
        col = pieces[i][0].columns[local].embed(offs_k[i], n_k)
        if ifree is not None:
            col ^= ifree.columns[j].embed(off_free, n_k)
        iota_cols.append(col)
    iota = LinMap(s_f.n, n_k, tuple(iota_cols))

    norm_cols: list[BitVec] = [BitVec.zero(s_f.n)] * n_k
    for i, (piece_iota, piece_norm) in enumerate(pieces):
        for local in range(piece_norm.src_dim):
            norm_cols[offs_k[i] + local] = piece_norm.columns[local].embed(offs_f[i], s_f.n)
    norm = LinMap(n_k, s_f.n, tuple(norm_cols))

    sigma = LinMap.identity(n_k) + iota.compose(norm)

    s_k = synthesize(expr_k) if expr_k is not None else EMPTY_STRUCTURE
    if s_k.n != n_k:
        raise ModelError("extension carrier does not match its expression")
    if s_k.e != iota.apply(s_f.e):
        raise ModelError("class of -1 is not transported by the restriction map")

    return QuadExt(
        expr_f=expr,
        a=a,
        expr_k=expr_k,
        s_f=s_f,
        s_k=s_k,
        iota=iota,
        norm=norm,
        sigma=sigma,
        atom_log=tuple(log),
        complement_rank=rho,
        complement_basis=tuple(str(v) for v in avecs),
    )


def free_coordinate_span(expr_k: Etg2Expr | None, n_k: int) -> Subspace:
    """Coordinates carried by the free factors of the extension expression."""
    if expr_k is None:
        return Subspace.full(n_k)
    units = []
    off = 0
    for atom in flatten(expr_k):
        dim = d(atom)
        if isinstance(atom, FreeAtom):
            units.extend(BitVec.unit(n_k, off + i) for i in range(dim))
        off += dim
    return rref(units, n_k)


def radical_of_extension(q: QuadExt) -> Subspace:
    """Radical of the extended structure, cross-checked against the free block."""
    r = radical(q.s_k)
    expected = free_coordinate_span(q.expr_k, q.s_k.n)
    if r != expected:
        raise ModelError(
            "extension radical does not match the free coordinates: "
            f"dim {r.dim} vs {expected.dim}"
        )
    return r


def quadext_to_json(q: QuadExt) -> dict:
    return {
        "expr": print_expr(q.expr_f),
        "a": str(q.a),
        "e_K_expr": print_expr(q.expr_k) if q.expr_k is not None else "1",
        "iota": [str(c) for c in q.iota.columns],
        "norm": [str(c) for c in q.norm.columns],
        "sigma": [str(c) for c in q.sigma.columns],
        "atomLog": [
            {
                "index": case.index,
                "atom": case.atom,
                "a": case.a_part,
                "case": case.case,
                "result": case.result,
            }
            for case in q.atom_log
        ],
        "complementRank": q.complement_rank,
        "complementBasis": list(q.complement_basis),
    }
