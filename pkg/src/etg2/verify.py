"""Invariant suites, the radical Hilbert-90 checker, and structure isomorphism."""

from __future__ import annotations

import time
from dataclasses import dataclass

from .gf2 import (
    BitVec,
    DimensionError,
    LinMap,
    Subspace,
    complete_basis,
    image,
    kernel,
    preimage,
    rref,
    solve,
)
from .exprdsl import Etg2Expr, FreeAtom, flatten, print_expr
from .normalform import decompose, reassemble
from .quadext import QuadExt, extend, radical_of_extension
from .synth import (
    Classification,
    ModelError,
    SquareClassStructure,
    classify,
    radical,
    reduce_structure,
    structure_violations,
    synthesize,
    value_set,
)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    witness: dict | None = None

    def __post_init__(self) -> None:
        if not self.passed and self.witness is None:
            raise ValueError("failing checks must carry a witness")


@dataclass(frozen=True)
class Report:
    subject: str
    checks: tuple[Check, ...]
    timing_ms: float

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def first_failure(self) -> Check | None:
        for c in self.checks:
            if not c.passed:
                return c
        return None


def report_to_json(report: Report, deterministic: bool = True) -> dict:
    return {
        "subject": report.subject,
        "checks": [
            {
                "name": c.name,
                "status": "pass" if c.passed else "fail",
                "witness": c.witness,
            }
            for c in report.checks
        ],
        "timing_ms": 0.0 if deterministic else report.timing_ms,
    }


# --- structure isomorphism ----------------------------------------------------


def _profile(s: SquareClassStructure, x: BitVec, rad: Subspace) -> tuple:
    return (
        kernel(s.pairing_map(x)).dim,
        rad.contains(x),
        s.pair(x, x).is_zero(),
        (x == s.e),
    )


def _insert_relation(rows: list[int], p_bits: int, q_bits: int, b_dim: int) -> bool:
    """Add the pair (q1-value, q2-value) to the compatibility matrix.

    Returns False when the pair forces phi_B to be ill-defined or singular:
    a reduced row supported on exactly one half.
    """
    x = p_bits | (q_bits << b_dim)
    for r in rows:
        if x & (r & -r):
            x ^= r
    if x == 0:
        return True
    low = x & ((1 << b_dim) - 1) if b_dim else 0
    high = x >> b_dim
    if (low == 0) != (high == 0):
        return False
    rows.append(x)
    return True


def isomorphic(
    s1: SquareClassStructure, s2: SquareClassStructure
) -> tuple[LinMap, LinMap] | None:
    """A pair (phi_V, phi_B) with phi_V(e1) = e2 and q2(phi x, phi y) = phi_B q1(x, y),
    or None. Backtracking over basis images with pairing-compatibility pruning.
    """
    if not s1.reduced:
        s1 = reduce_structure(s1)
    if not s2.reduced:
        s2 = reduce_structure(s2)
    if (s1.n, s1.b_dim) != (s2.n, s2.b_dim):
        return None
    n, b_dim = s1.n, s1.b_dim
    if n > 6:
        raise DimensionError("isomorphism search capped at dimension 6")
    if n == 0:
        return LinMap.identity(0), LinMap.identity(0)

    rad1, rad2 = radical(s1), radical(s2)
    if rad1.dim != rad2.dim:
        return None
    if s1.e.is_zero() != s2.e.is_zero():
        return None
    prof1 = {bits: _profile(s1, BitVec(n, bits), rad1) for bits in range(1, 1 << n)}
    prof2 = {bits: _profile(s2, BitVec(n, bits), rad2) for bits in range(1, 1 << n)}
    if sorted(prof1.values()) != sorted(prof2.values()):
        return None
    candidates: dict[tuple, list[int]] = {}
    for bits, prof in prof2.items():
        candidates.setdefault(prof, []).append(bits)

    if s1.e.is_zero():
        source_basis = [BitVec.unit(n, i) for i in range(n)]
    else:
        source_basis = complete_basis([s1.e], n)

    q1 = [[s1.pair(x, y) for y in source_basis] for x in source_basis]
    images: list[BitVec] = []
    span: list[int] = []

    def in_span(bits: int) -> bool:
        for r in span:
            if bits & (r & -r):
                bits ^= r
        return bits == 0

    # Depth-first search; slot 0 is pinned to e2 when e is nonzero.
    def dfs(t: int, relations: list[int]) -> bool:
        if t == n:
            return True
        want = _profile(s1, source_basis[t], rad1)
        pool = candidates.get(want, [])
        for bits in pool:
            if in_span(bits):
                continue
            v = BitVec(n, bits)
            rel2 = list(relations)
            ok = True
            for j in range(t + 1):
                w = images[j] if j < t else v
                if not _insert_relation(rel2, q1[j][t].bits, s2.pair(w, v).bits, b_dim):
                    ok = False
                    break
            if not ok:
                continue
            images.append(v)
            x = bits
            for r in span:
                if x & (r & -r):
                    x ^= r
            span.append(x)
            if dfs(t + 1, rel2):
                return True
            images.pop()
            span.pop()
        return False

    if not dfs(0, []):
        return None

    basis_map = LinMap(n, n, tuple(source_basis))
    phi_cols = []
    for i in range(n):
        coords = solve(basis_map, BitVec.unit(n, i))
        acc = BitVec.zero(n)
        for j in coords.support():
            acc ^= images[j]
        phi_cols.append(acc)
    phi_v = LinMap(n, n, tuple(phi_cols))

    pairs = [
        (q1[i][j], s2.pair(images[i], images[j]))
        for i in range(n)
        for j in range(i, n)
    ]
    pair_map = LinMap(len(pairs), b_dim, tuple(p for p, _ in pairs)) if pairs else None
    phi_b_cols = []
    for i in range(b_dim):
        coords = solve(pair_map, BitVec.unit(b_dim, i))
        if coords is None:
            return None
        acc = BitVec.zero(b_dim)
        for j in coords.support():
            acc ^= pairs[j][1]
        phi_b_cols.append(acc)
    phi_b = LinMap(b_dim, b_dim, tuple(phi_b_cols))
    if rref(list(phi_b.columns), b_dim).dim != b_dim:
        return None

    if phi_v.apply(s1.e) != s2.e:
        return None
    for i in range(n):
        for j in range(n):
            x, y = BitVec.unit(n, i), BitVec.unit(n, j)
            if s2.pair(phi_v.apply(x), phi_v.apply(y)) != phi_b.apply(s1.pair(x, y)):
                raise ModelError("isomorphism search returned an incompatible map")
    return phi_v, phi_b


# --- extension and Hilbert-90 checks ------------------------------------------


def _subspace_witness(name: str, got: Subspace, want: Subspace) -> dict:
    extra = next((str(v) for v in got.basis if not want.contains(v)), None)
    missing = next((str(v) for v in want.basis if not got.contains(v)), None)
    return {
        "check": name,
        "got_dim": got.dim,
        "want_dim": want.dim,
        "unexpected_vector": extra,
        "missing_vector": missing,
    }


def check_h90(q: QuadExt) -> Report:
    """N^{-1}(radical of the base) against image(restriction) + radical above."""
    t0 = time.perf_counter()
    rad_f = radical(q.s_f)
    rad_k = radical(q.s_k)
    lhs = preimage(q.norm, rad_f)
    rhs = image(q.iota).sum(rad_k)

    checks = []
    stray = next((str(v) for v in rhs.basis if not lhs.contains(v)), None)
    checks.append(
        Check(
            "norm_principle_inclusion",
            stray is None,
            None if stray is None else {"vector_outside_lhs": stray},
        )
    )
    if lhs == rhs:
        checks.append(Check("h90_equality", True))
    else:
        checks.append(Check("h90_equality", False, _subspace_witness("h90_equality", rhs, lhs)))
    ms = (time.perf_counter() - t0) * 1000.0
    return Report(f"{print_expr(q.expr_f)} @ a={q.a}", tuple(checks), ms)


def check_extension(q: QuadExt) -> Report:
    """The eight construction laws of a quadratic extension."""
    t0 = time.perf_counter()
    checks: list[Check] = []
    a = q.a
    n_f = q.s_f.n
    a_perp = value_set(q.s_f, a ^ q.s_f.e)

    got = kernel(q.iota)
    want = rref([a], n_f)
    checks.append(
        Check("restriction_kernel", got == want, None if got == want else _subspace_witness("restriction_kernel", got, want))
    )

    got = kernel(q.norm)
    want = image(q.iota)
    checks.append(
        Check("norm_kernel_is_restriction_image", got == want, None if got == want else _subspace_witness("norm_kernel_is_restriction_image", got, want))
    )

    got = image(q.norm)
    checks.append(
        Check("norm_image_is_value_set", got == a_perp, None if got == a_perp else _subspace_witness("norm_image_is_value_set", got, a_perp))
    )

    ni = q.norm.compose(q.iota)
    sigma_sq = q.sigma.compose(q.sigma)
    sigma_iota = q.sigma.compose(q.iota)
    id_k = LinMap.identity(q.s_k.n)
    inv_ok = (
        ni.is_zero()
        and sigma_sq == id_k
        and sigma_iota == q.iota
        and q.iota.compose(q.norm) == id_k + q.sigma
    )
    checks.append(
        Check(
            "involution_laws",
            inv_ok,
            None
            if inv_ok
            else {
                "norm_after_iota_zero": ni.is_zero(),
                "sigma_squared_identity": sigma_sq == id_k,
                "sigma_fixes_image": sigma_iota == q.iota,
                "iota_after_norm_is_id_plus_sigma": q.iota.compose(q.norm) == id_k + q.sigma,
            },
        )
    )

    e_ok = q.s_k.e == q.iota.apply(q.s_f.e)
    checks.append(
        Check("minus_one_transport", e_ok, None if e_ok else {"e_K": str(q.s_k.e), "iota_e_F": str(q.iota.apply(q.s_f.e))})
    )

    violations = structure_violations(q.s_k)
    checks.append(
        Check("extension_axioms", not violations, None if not violations else {"violations": violations})
    )

    dim_ok = q.s_k.n == n_f - 1 + a_perp.dim
    checks.append(
        Check(
            "dimension_law",
            dim_ok,
            None if dim_ok else {"dim_V_K": q.s_k.n, "expected": n_f - 1 + a_perp.dim},
        )
    )

    shape_problems = []
    extended = [c for c in q.atom_log if c.case == "extended"]
    if q.complement_rank != len(extended) - 1:
        shape_problems.append(
            f"complement rank {q.complement_rank} != {len(extended) - 1}"
        )
    expected_factors = [text for case in q.atom_log for text in case.result]
    actual_factors = [print_expr(f) for f in flatten(q.expr_k)] if q.expr_k is not None else []
    if q.complement_rank >= 1:
        tail_ok = (
            len(actual_factors) == len(expected_factors) + 1
            and actual_factors[: len(expected_factors)] == expected_factors
            and isinstance(flatten(q.expr_k)[-1], FreeAtom)
            and flatten(q.expr_k)[-1].rank == q.complement_rank
        )
        if not tail_ok:
            shape_problems.append("free complement factor missing or misplaced")
    elif actual_factors != expected_factors:
        shape_problems.append("factor list does not match the atom log")
    try:
        radical_of_extension(q)
    except ModelError as exc:
        shape_problems.append(str(exc))
    checks.append(
        Check("shape_law", not shape_problems, None if not shape_problems else {"problems": shape_problems})
    )

    ms = (time.perf_counter() - t0) * 1000.0
    return Report(f"{print_expr(q.expr_f)} @ a={q.a}", tuple(checks), ms)


def _fold(name: str, report: Report) -> Check:
    failure = report.first_failure()
    if failure is None:
        return Check(name, True)
    return Check(name, False, {"check": failure.name, **(failure.witness or {})})


def run_suite(expr: Etg2Expr) -> Report:
    """Per-instance invariants, the decomposition checks, then every extension."""
    t0 = time.perf_counter()
    s = synthesize(expr)
    n = s.n
    if n > 12:
        raise DimensionError("suite is exhaustive over the carrier; dimension capped at 12")
    checks: list[Check] = []

    rad = radical(s)
    meet = Subspace.full(n)
    for bits in range(1 << n):
        meet = meet.intersect(value_set(s, BitVec(n, bits)))
    checks.append(
        Check(
            "radical_intersection_identity",
            meet == rad,
            None if meet == rad else _subspace_witness("radical_intersection_identity", rad, meet),
        )
    )

    d11 = value_set(s, BitVec.zero(n))
    ok = rad <= d11
    checks.append(
        Check(
            "radical_in_binary_values",
            ok,
            None if ok else _subspace_witness("radical_in_binary_values", rad, d11),
        )
    )

    try:
        nf = decompose(expr)
        problems = []
        if nf.free_rank != rad.dim:
            problems.append(f"free rank {nf.free_rank} != radical dimension {rad.dim}")
        if nf.h is not None and classify(synthesize(nf.h)) is not Classification.TRIVIAL_RADICAL:
            problems.append("H part does not have trivial radical")
        if isomorphic(s, synthesize(reassemble(nf))) is None:
            problems.append("reassembled normal form is not isomorphic to the input")
        checks.append(
            Check("normal_form", not problems, None if not problems else {"problems": problems})
        )
    except ModelError as exc:
        checks.append(Check("normal_form", False, {"problems": [str(exc)]}))

    for bits in range(1, 1 << n):
        a = BitVec(n, bits)
        q = extend(expr, a)
        checks.append(_fold(f"extension a={a}", check_extension(q)))
        checks.append(_fold(f"h90 a={a}", check_h90(q)))

    ms = (time.perf_counter() - t0) * 1000.0
    return Report(print_expr(expr), tuple(checks), ms)
