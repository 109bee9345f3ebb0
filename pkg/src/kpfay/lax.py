"""Lax operators from the dressing operator and the linear problems they solve.

All comparisons are operator (or wave) differences whose surviving trusted
coefficients are reported as discrepancies.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import IndexOutOfRange, IndicesNotDistinct, InternalMismatch
from .psdo import MatrixPsdo
from .report import Collector, IdentityReport, guarded
from .signs import ChargeVector, epsilon, shift_charge
from .tau import TauFunction
from .wave import (
    WaveMatrix,
    sato_operators,
    wave_difference,
    wave_discrepancies,
    wave_matrix,
)


@dataclass(frozen=True)
class LaxBundle:
    s: ChargeVector
    wave: WaveMatrix
    W: MatrixPsdo
    W_inv: MatrixPsdo
    L: MatrixPsdo
    R: tuple  # R[a - 1] for component a

    @property
    def ring(self):
        return self.W.ring

    @property
    def band(self) -> int:
        return self.W.band


def _memo(tau: TauFunction, key, build):
    hit = tau.memo.get(key)
    if hit is None:
        hit = tau.memo[key] = build()
    return hit


def build_lax(tau: TauFunction, s, band: int = 8) -> LaxBundle:
    s = ChargeVector(s)

    def build():
        wave = wave_matrix(tau, s)
        W, Wi = sato_operators(wave, band)
        ring = tau.ring
        d = MatrixPsdo.scalar(ring, 1, band=band)
        L = W.compose(d).compose(Wi)
        R = tuple(W.compose(MatrixPsdo.unit(ring, a, band=band)).compose(Wi) for a in range(1, ring.n + 1))
        return LaxBundle(s, wave, W, Wi, L, R)

    return _memo(tau, ("lax", s, band), build)


def _op_residual(col: Collector, op: MatrixPsdo, where: str) -> None:
    before = len(col.items)
    col.trust = op.trusted if col.trust is None else min(col.trust, op.trusted)
    for p, i, j, mono, c in op.discrepancies(col.limit):
        if len(col.items) - before >= col.limit:
            break
        col.items.append((f"{where} D^{p} [{i},{j}]", mono, c))
    col.count += sum(len(f) for m in op.terms.values() for f in m.values())


def _wave_residual(col: Collector, diff: dict, where: str) -> None:
    items, total = wave_discrepancies(diff, col.limit)
    for f in diff.values():
        col.trust = f.trusted_order if col.trust is None else min(col.trust, f.trusted_order)
    col.items.extend((f"{where} {loc}", m, c) for loc, m, c in items)
    col.count += total


def _step(col: Collector, name: str, fn) -> None:
    sub = Collector(name, {})
    fn(sub)
    rep = sub.report()
    col.steps.append(rep)
    col.items.extend(rep.discrepancies[: max(0, col.limit - len(col.items))])
    col.count += rep.count
    if rep.trusted:
        w = rep.trusted["weight"]
        col.trust = w if col.trust is None else min(col.trust, w)


def _index(n, *idx):
    for i in idx:
        if not 1 <= i <= n:
            raise IndexOutOfRange(f"index {i} outside 1..{n}")


# ------------------------------------------------------------------ algebra


def check_algebra(bundle: LaxBundle, params=None) -> IdentityReport:
    params = {"s": tuple(bundle.s)} if params is None else params

    def body():
        col = Collector("ALGEBRA", params)
        ring = bundle.ring
        n = ring.n
        L, R = bundle.L, bundle.R
        _step(col, "L commutes with every R", lambda c: [
            _op_residual(c, L.commutator(R[a]), f"[L,R{a + 1}]") for a in range(n)
        ])

        def idempotents(c):
            for a in range(n):
                for b in range(n):
                    prod = R[a].compose(R[b])
                    if a == b:
                        prod = prod - R[a]
                    _op_residual(c, prod, f"R{a + 1}R{b + 1}")

        _step(col, "R are orthogonal idempotents", idempotents)
        total = R[0]
        for r in R[1:]:
            total = total + r
        ident = MatrixPsdo.identity(ring, bundle.band)
        _step(col, "R sum to the identity", lambda c: _op_residual(c, total - ident, "sum R"))
        return col.report()

    return guarded("ALGEBRA", params, body)


def check_algebra_at(tau: TauFunction, s, band: int = 8) -> IdentityReport:
    params = {"s": tuple(s)}
    return guarded("ALGEBRA", params, lambda: check_algebra(build_lax(tau, s, band), params))


def check_operator_shape(tau: TauFunction, s, band: int = 8) -> IdentityReport:
    """``L = D + (negative powers)`` and ``R_a = E_a + (negative powers)``."""
    params = {"s": tuple(s)}

    def body():
        bundle = build_lax(tau, s, band)
        ring = bundle.ring
        col = Collector("LSHAPE", params)
        _op_residual(col, bundle.L.plus_part() - MatrixPsdo.scalar(ring, 1, band=band), "L")
        for a, r in enumerate(bundle.R, start=1):
            _op_residual(col, r.plus_part() - MatrixPsdo.unit(ring, a, band=band), f"R{a}")
        return col.report()

    return guarded("LSHAPE", params, body)


# ------------------------------------------------------------------ time flows


def build_B(bundle: LaxBundle, a: int, j: int) -> MatrixPsdo:
    """Differential part of ``L**j R_a``, cross-checked against the dressing form."""
    ring = bundle.ring
    _index(ring.n, a)
    if j < 1:
        raise ValueError("j must be positive")
    from_lax = bundle.L.power(j).compose(bundle.R[a - 1]).plus_part()
    dressed = (
        bundle.W.compose(MatrixPsdo.unit(ring, a, j, band=bundle.band)).compose(bundle.W_inv).plus_part()
    )
    diff = from_lax - dressed
    if not diff.is_zero():
        raise InternalMismatch(f"the two constructions of B[{a},{j}] differ: {diff.discrepancies(3)}")
    return from_lax


def _B(tau, s, a, j, band):
    return _memo(tau, ("B", ChargeVector(s), a, j, band), lambda: build_B(build_lax(tau, s, band), a, j))


def check_prop2(tau: TauFunction, s, a: int, j: int, band: int = 8) -> IdentityReport:
    """Time derivative of the wave equals the differential operator applied to it."""
    params = {"s": tuple(s), "a": a, "j": j}

    def body():
        _index(tau.n, a)
        bundle = build_lax(tau, s, band)
        B = _B(tau, s, a, j, band)
        zj = tau.ring.aux("z", j)
        lhs = {}
        for (r, c), f in bundle.wave.entries.items():
            g = f.derive(a, j)
            if c == a - 1:
                g = g + f * zj
            lhs[(r, c)] = g
        col = Collector("PROP2", params)
        _wave_residual(col, wave_difference(lhs, B.apply(bundle.wave.entries)), "wave")
        return col.report()

    return guarded("PROP2", params, body)


def check_sato(tau: TauFunction, s, a: int, j: int, band: int = 8) -> IdentityReport:
    params = {"s": tuple(s), "a": a, "j": j}

    def body():
        _index(tau.n, a)
        bundle = build_lax(tau, s, band)
        ring = tau.ring
        lhs = bundle.W.derive_t(a, j).compose(bundle.W_inv)
        conj = bundle.W.compose(MatrixPsdo.unit(ring, a, j, band=band)).compose(bundle.W_inv)
        col = Collector("SATO", params)
        _op_residual(col, lhs + conj.minus_part(), "sato")
        return col.report()

    return guarded("SATO", params, body)


# ------------------------------------------------------------------ spectral shift


def frak_operators(tau: TauFunction, s, a: int, band: int = 8):
    """The three operators of the spectral-shift linear problem for component ``a``.

    Returns ``(frak_b, frak_c, frak_d)`` with ``frak_d = frak_b E_a + E_a frak_c``;
    ``lam`` is the spectral variable.
    """
    s = ChargeVector(s)
    ring = tau.ring
    n = ring.n
    _index(n, a)
    linv = ring.aux("lam", -1)
    base = tau.at(s)
    base_inv = base.inverse()

    def gap(k, b):
        shifted = tau.miwa(s, ((k, "lam", -1),))
        return shifted.derive(b, 1) * shifted.inverse() - tau.dlog(s, b)

    b_terms: dict = {0: {}, 1: {}}
    c_terms: dict = {0: {}}
    for r in range(1, n + 1):
        for k in range(1, n + 1):
            if r == k:
                b_terms[0][(r - 1, k - 1)] = -(linv * gap(k, k))
                b_terms[1][(r - 1, k - 1)] = linv
            else:
                ratio = base * tau.at(shift_charge(s, k, r)).inverse()
                b_terms[0][(r - 1, k - 1)] = (ratio * gap(k, r)).scale(-epsilon(s, r, k))
                ratio = tau.at(shift_charge(s, r, k)) * base_inv
                c_terms[0][(r - 1, k - 1)] = (linv * ratio).scale(-epsilon(s, r, k))
    frak_b = MatrixPsdo(ring, b_terms, band=band)
    frak_c = MatrixPsdo(ring, c_terms, band=band)
    e_a = MatrixPsdo.unit(ring, a, band=band)
    frak_d = frak_b.compose(e_a) + e_a.compose(frak_c)
    return frak_b, frak_c, frak_d


def _prop1_category(a, r, c):
    if r == a and c == a:
        return "diagonal entry"
    if c == a:
        return "column a, other rows"
    if r == a:
        return "row a, other columns"
    return "entries away from a"


def check_prop1(tau: TauFunction, s, a: int, band: int = 8) -> IdentityReport:
    """``(1 - exp(-D_a(lam))) Psi = frak_d Psi`` with the shift done exactly."""
    params = {"s": tuple(s), "a": a}

    def body():
        ring = tau.ring
        bundle = build_lax(tau, s, band)
        _, _, frak_d = frak_operators(tau, s, a, band)
        factor = ring.one() - ring.aux("z", 1) * ring.aux("lam", -1)
        lhs = {}
        for (r, c), f in bundle.wave.entries.items():
            shifted = f.miwa_shift(a, "lam", -1)
            if c == a - 1:
                shifted = shifted * factor
            lhs[(r, c)] = f - shifted
        diff = wave_difference(lhs, frak_d.apply(bundle.wave.entries))
        col = Collector("PROP1", params)
        groups: dict = {}
        for (r, c), f in diff.items():
            groups.setdefault(_prop1_category(a, r + 1, c + 1), {})[(r, c)] = f
        for name in ("diagonal entry", "column a, other rows", "row a, other columns", "entries away from a"):
            if name in groups:
                _step(col, name, lambda cc, g=groups[name]: _wave_residual(cc, g, "wave"))
        return col.report()

    return guarded("PROP1", params, body)


# ------------------------------------------------------------------ charge shift


def h_matrix(tau: TauFunction, s) -> dict:
    s = ChargeVector(s)
    n = tau.n
    inv = tau.at(s).inverse()
    out = {}
    for r in range(1, n + 1):
        for k in range(1, n + 1):
            if r == k:
                out[(r - 1, k - 1)] = -tau.dlog(s, k)
            else:
                out[(r - 1, k - 1)] = (tau.at(shift_charge(s, r, k)) * inv).scale(epsilon(s, r, k))
    return out


def build_P(tau: TauFunction, s, a: int, b: int, band: int = 8) -> MatrixPsdo:
    """First-order operator carrying the wave from ``s`` to ``s + e_a - e_b``."""
    s = ChargeVector(s)
    ring = tau.ring
    n = ring.n
    _index(n, a, b)
    if a == b:
        raise IndicesNotDistinct("P needs a != b")

    def build():
        up = h_matrix(tau, shift_charge(s, a, b))
        here = h_matrix(tau, s)
        g: dict = {}

        def put(ij, f):
            g[ij] = g[ij] + f if ij in g else f

        for r in range(n):
            put((r, a - 1), up[(r, a - 1)])
            put((a - 1, r), -here[(a - 1, r)])
        for c in range(1, n + 1):
            if c not in (a, b):
                put((c - 1, c - 1), ring.one())
        return MatrixPsdo(ring, {1: {(a - 1, a - 1): ring.one()}, 0: g}, band=band)

    return _memo(tau, ("P", s, a, b, band), build)


def check_prop3(tau: TauFunction, s, a: int, b: int, band: int = 8) -> IdentityReport:
    params = {"s": tuple(s), "a": a, "b": b}

    def body():
        s_ = ChargeVector(s)
        P = build_P(tau, s_, a, b, band)
        here = build_lax(tau, s_, band).wave
        there = build_lax(tau, shift_charge(s_, a, b), band).wave
        ring = tau.ring
        lhs = {}
        for (r, c), f in there.entries.items():
            e = int(c == a - 1) - int(c == b - 1)
            lhs[(r, c)] = f * ring.aux("z", e) if e else f
        col = Collector("PROP3", params)
        _wave_residual(col, wave_difference(lhs, P.apply(here.entries)), "wave")
        return col.report()

    return guarded("PROP3", params, body)


# ------------------------------------------------------------------ Lax system


def check_lax(tau: TauFunction, s, g: int, j: int, a: int, b: int, band: int = 8) -> IdentityReport:
    """The five Lax families for flow ``(g, j)`` and charge step ``s -> s + e_a - e_b``."""
    params = {"s": tuple(s), "g": g, "j": j, "a": a, "b": b}

    def body():
        s_ = ChargeVector(s)
        n = tau.n
        _index(n, g, a, b)
        if a == b:
            raise IndicesNotDistinct("the charge step needs a != b")
        s2 = shift_charge(s_, a, b)
        here = build_lax(tau, s_, band)
        there = build_lax(tau, s2, band)
        B = _B(tau, s_, g, j, band)
        B2 = _B(tau, s2, g, j, band)
        P = build_P(tau, s_, a, b, band)
        col = Collector("LAX", params)
        _step(
            col,
            "(a) flow of L",
            lambda c: _op_residual(c, here.L.derive_t(g, j) - B.commutator(here.L), "L"),
        )
        _step(
            col,
            "(b) flow of R",
            lambda c: [
                _op_residual(c, r.derive_t(g, j) - B.commutator(r), f"R{k + 1}")
                for k, r in enumerate(here.R)
            ],
        )
        _step(
            col,
            "(c) charge shift of L",
            lambda c: _op_residual(c, there.L.compose(P) - P.compose(here.L), "L"),
        )
        _step(
            col,
            "(d) charge shift of R",
            lambda c: [
                _op_residual(c, there.R[k].compose(P) - P.compose(here.R[k]), f"R{k + 1}")
                for k in range(n)
            ],
        )
        _step(
            col,
            "(e) flow of P",
            lambda c: _op_residual(c, P.derive_t(g, j) - (B2.compose(P) - P.compose(B)), "P"),
        )
        return col.report()

    return guarded("LAX", params, body)


def check_cross_construction(tau: TauFunction, s, a: int, j: int, band: int = 8) -> IdentityReport:
    """Both constructions of the flow generator agree (``build_B`` raises otherwise)."""
    params = {"s": tuple(s), "a": a, "j": j}

    def body():
        build_B(build_lax(tau, s, band), a, j)
        return Collector("CROSS", params).report()

    return guarded("CROSS", params, body)


def coefficient_series(op: MatrixPsdo, p: int) -> dict:
    """``{(i, j): series}`` of the ``D**p`` coefficient (1-based indices)."""
    return {(i + 1, j + 1): f for (i, j), f in op.coeff(p).items()}


__all__ = [
    "LaxBundle",
    "build_lax",
    "check_algebra",
    "check_algebra_at",
    "check_operator_shape",
    "build_B",
    "frak_operators",
    "check_prop1",
    "check_prop2",
    "check_sato",
    "h_matrix",
    "build_P",
    "check_prop3",
    "check_lax",
    "check_cross_construction",
    "coefficient_series",
]
