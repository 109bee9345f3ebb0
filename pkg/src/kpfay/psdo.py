"""N x N matrix pseudodifferential operators in the total derivative.

``D = sum_k d/dt[k, 1]`` acts on every coefficient.  An operator is stored as
``{power: {(row, col): series}}`` (0-based matrix indices).  With ``D`` of
weight -1 composition is weight-additive, so an operator carries one trusted
weight ``T`` just like a series: the coefficient of ``D**m`` is exact up to
weight ``T + m``.  Powers below ``-depth`` are never stored, which caps ``T``
at ``depth``; powers above ``band`` raise :class:`BandOverflow`.
"""

from __future__ import annotations

from math import comb

from gmpy2 import mpq

from .errors import BandOverflow, NotUnitShape
from .series import EXACT, FormalSeries, Ring


def total_derivative(f: FormalSeries) -> FormalSeries:
    out = None
    for k in range(1, f.ring.n + 1):
        term = f.derive(k, 1)
        out = term if out is None else out + term
    return out


def binom(m: int, k: int) -> int:
    """Generalised binomial coefficient ``C(m, k)`` for any integer ``m``."""
    if m >= 0:
        return comb(m, k) if k <= m else 0
    return (-1) ** k * comb(-m + k - 1, k)


class MatrixPsdo:
    __slots__ = ("ring", "band", "depth", "terms", "trusted")

    def __init__(self, ring: Ring, terms: dict, trusted: int = EXACT, band: int = 8, depth=None):
        self.ring = ring
        self.band = band
        self.depth = ring.d + 1 if depth is None else depth
        T = min(trusted, self.depth)
        for p, mat in terms.items():
            for f in mat.values():
                T = min(T, f.trusted - p)
        clean = {}
        for p, mat in terms.items():
            if p < -self.depth:
                continue
            if p > band and any(not f.is_zero() for f in mat.values()):
                raise BandOverflow(f"power {p} exceeds the band {band}")
            m = {}
            for ij, f in mat.items():
                f = f.truncate(T + p)
                if not f.is_zero():
                    m[ij] = f
            if m:
                clean[p] = m
        self.terms = clean
        self.trusted = T

    # constructors

    @classmethod
    def zero(cls, ring, band=8, depth=None):
        return cls(ring, {}, EXACT, band, depth)

    @classmethod
    def scalar(cls, ring, power=0, c=1, band=8, depth=None):
        one = ring.const(c)
        return cls(ring, {power: {(i, i): one for i in range(ring.n)}}, EXACT, band, depth)

    @classmethod
    def identity(cls, ring, band=8, depth=None):
        return cls.scalar(ring, 0, 1, band, depth)

    @classmethod
    def unit(cls, ring, a: int, power=0, band=8, depth=None):
        """``E_a D**power`` with ``E_a`` the diagonal idempotent (1-based ``a``)."""
        return cls(ring, {power: {(a - 1, a - 1): ring.one()}}, EXACT, band, depth)

    @classmethod
    def multiplication(cls, matrix, band=8, depth=None):
        """Order-zero operator from a ``{(i, j): series}`` or nested-list matrix."""
        if not isinstance(matrix, dict):
            matrix = {(i, j): f for i, row in enumerate(matrix) for j, f in enumerate(row)}
        ring = next(iter(matrix.values())).ring
        return cls(ring, {0: matrix}, EXACT, band, depth)

    def _like(self, terms, trusted):
        return MatrixPsdo(self.ring, terms, trusted, self.band, self.depth)

    # inspection

    @property
    def n(self) -> int:
        return self.ring.n

    def powers(self) -> list[int]:
        return sorted(self.terms)

    def coeff(self, p: int) -> dict:
        return dict(self.terms.get(p, {}))

    def entry(self, p: int, i: int, j: int) -> FormalSeries:
        """Coefficient of ``D**p`` at (i, j), 1-based, as a series."""
        f = self.terms.get(p, {}).get((i - 1, j - 1))
        return f if f is not None else self.ring.zero(self.trusted + p)

    def degree(self) -> int | None:
        return max(self.terms) if self.terms else None

    def min_weight(self) -> int:
        lo = self.trusted + 1
        for p, mat in self.terms.items():
            for f in mat.values():
                lo = min(lo, f.min_weight() - p)
        return lo

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatrixPsdo):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def discrepancies(self, limit: int = 20) -> list:
        """Nonzero ``(power, row, col, monomial, coefficient)`` in deterministic order."""
        out = []
        for p in sorted(self.terms, reverse=True):
            for (i, j) in sorted(self.terms[p]):
                for mono, c in self.terms[p][(i, j)].items():
                    out.append((p, i + 1, j + 1, str(mono), str(c)))
                    if len(out) >= limit:
                        return out
        return out

    def __repr__(self) -> str:
        parts = []
        for p in sorted(self.terms, reverse=True):
            for (i, j), f in sorted(self.terms[p].items()):
                parts.append(f"[{i + 1},{j + 1}]({f})D^{p}")
        return "MatrixPsdo(" + (" + ".join(parts) or "0") + f", trusted={self.trusted})"

    # linear structure

    def __add__(self, other: "MatrixPsdo") -> "MatrixPsdo":
        out = {p: dict(m) for p, m in self.terms.items()}
        for p, mat in other.terms.items():
            tgt = out.setdefault(p, {})
            for ij, f in mat.items():
                tgt[ij] = tgt[ij] + f if ij in tgt else f
        return self._like(out, min(self.trusted, other.trusted))

    def __neg__(self) -> "MatrixPsdo":
        return self._like(
            {p: {ij: -f for ij, f in m.items()} for p, m in self.terms.items()}, self.trusted
        )

    def __sub__(self, other: "MatrixPsdo") -> "MatrixPsdo":
        return self + (-other)

    def scale(self, c) -> "MatrixPsdo":
        if isinstance(c, FormalSeries):
            return self._like(
                {p: {ij: f * c for ij, f in m.items()} for p, m in self.terms.items()},
                min(self.trusted + c.min_weight(), c.trusted + self.min_weight()),
            )
        return self._like(
            {p: {ij: f.scale(c) for ij, f in m.items()} for p, m in self.terms.items()}, self.trusted
        )

    def plus_part(self) -> "MatrixPsdo":
        return self._like({p: m for p, m in self.terms.items() if p >= 0}, self.trusted)

    def minus_part(self) -> "MatrixPsdo":
        return self._like({p: m for p, m in self.terms.items() if p < 0}, self.trusted)

    def derive_t(self, a: int, j: int) -> "MatrixPsdo":
        """Coefficient-wise ``d/dt[a, j]``."""
        return self._like(
            {p: {ij: f.derive(a, j) for ij, f in m.items()} for p, m in self.terms.items()},
            self.trusted - j,
        )

    def map_coeffs(self, fn) -> "MatrixPsdo":
        return self._like(
            {p: {ij: fn(f) for ij, f in m.items()} for p, m in self.terms.items()}, self.trusted
        )

    # composition

    def compose(self, other: "MatrixPsdo") -> "MatrixPsdo":
        T = min(
            self.trusted + other.min_weight(),
            other.trusted + self.min_weight(),
            self.depth,
        )
        floor = -self.depth
        by_row = {}
        for q, mat in other.terms.items():
            rows = {}
            for (l, j), f in mat.items():
                rows.setdefault(l, []).append((j, f))
            by_row[q] = rows
        deriv_cache: dict = {}

        def derived(q, l, j, f, k):
            key = (q, l, j, k)
            hit = deriv_cache.get(key)
            if hit is None:
                hit = f if k == 0 else total_derivative(derived(q, l, j, f, k - 1))
                deriv_cache[key] = hit
            return hit

        out: dict = {}
        for p, amat in self.terms.items():
            for q, rows in by_row.items():
                k = 0
                while True:
                    power = p + q - k
                    c = binom(p, k)
                    if power < floor or (p >= 0 and k > p):
                        break
                    # stop once every derivative of this band entry vanished
                    alive = False
                    for (i, l), a in amat.items():
                        for j, f in rows.get(l, ()):
                            fk = derived(q, l, j, f, k)
                            if fk.is_zero():
                                continue
                            alive = True
                            prod = (a * fk).scale(c)
                            tgt = out.setdefault(power, {})
                            tgt[(i, j)] = tgt[(i, j)] + prod if (i, j) in tgt else prod
                    if not alive:
                        break
                    k += 1
        return self._like(out, T)

    __matmul__ = compose

    def power(self, j: int) -> "MatrixPsdo":
        if j < 0:
            raise ValueError("use invert_unit for negative powers")
        result = MatrixPsdo.identity(self.ring, self.band, self.depth)
        for _ in range(j):
            result = result.compose(self)
        return result

    def commutator(self, other: "MatrixPsdo") -> "MatrixPsdo":
        return self.compose(other) - other.compose(self)

    def invert_unit(self) -> "MatrixPsdo":
        """Inverse of an operator of the shape ``I + (negative powers)``."""
        if any(p > 0 for p in self.terms):
            raise NotUnitShape("positive powers present")
        ident = MatrixPsdo.identity(self.ring, self.band, self.depth)
        x = self - ident
        if 0 in x.terms:
            raise NotUnitShape("order-zero part is not the identity")
        minus_x = -x
        result = ident
        power = ident
        for _ in range(max(self.depth, 0) + 1):
            power = power.compose(minus_x)
            if power.is_zero():
                break
            result = result + power
        return self._like(result.terms, min(result.trusted, self.trusted))

    # action on reduced wave matrices

    def apply(self, wave: dict) -> dict:
        """Act on a reduced wave ``{(i, j): series in z}``.

        The exponential factor carried by every column turns ``D`` into
        ``D + z``; negative powers expand as ``sum_k C(p, k) z**(p - k) D**k``
        and terminate because ``D`` lowers the time weight.
        """
        ring = self.ring
        n = ring.n
        zpow: dict = {}

        def z(e):
            hit = zpow.get(e)
            if hit is None:
                hit = zpow[e] = ring.aux("z", e)
            return hit

        shifted: dict = {}

        def shifted_entry(p, l, j):
            key = (p, l, j)
            hit = shifted.get(key)
            if hit is not None:
                return hit
            f = wave.get((l, j))
            if f is None:
                return None
            acc = None
            fk = f
            k = 0
            while not fk.is_zero():
                c = binom(p, k)
                if p >= 0 and k > p:
                    break
                term = (fk * z(p - k)).scale(c)
                acc = term if acc is None else acc + term
                k += 1
                fk = total_derivative(fk)
            if acc is None:
                acc = ring.zero(f.trusted)
            shifted[key] = acc
            return acc

        out = {}
        for p, mat in self.terms.items():
            for (i, l), a in mat.items():
                for j in range(n):
                    g = shifted_entry(p, l, j)
                    if g is None:
                        continue
                    prod = a * g
                    out[(i, j)] = out[(i, j)] + prod if (i, j) in out else prod
        # weight-additive action: entries that cancelled (or never arose) are
        # zeros known only up to the same bound as the others
        if wave:
            low = min(f.min_weight() for f in wave.values())
            trust = min(f.trusted for f in wave.values())
            bound = min(self.trusted + low, trust + self.min_weight())
            cols = sorted({j for _, j in wave})
            for i in range(n):
                for j in cols:
                    f = out.get((i, j))
                    out[(i, j)] = ring.zero(bound) if f is None else f.truncate(bound)
        return out


def identity_wave(ring: Ring) -> dict:
    return {(i, i): ring.one() for i in range(ring.n)}


def compose(a: MatrixPsdo, b: MatrixPsdo) -> MatrixPsdo:
    return a.compose(b)


def commutator(a: MatrixPsdo, b: MatrixPsdo) -> MatrixPsdo:
    return a.commutator(b)


def apply_to_wave(a: MatrixPsdo, wave: dict) -> dict:
    return a.apply(wave)


def psdo_equal(a: MatrixPsdo, b: MatrixPsdo) -> bool:
    return (a - b).is_zero()


def rational(x) -> mpq:
    return mpq(x)
