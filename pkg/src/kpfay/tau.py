"""Tau functions on a finite window of charges, stored as jets in the times."""

from __future__ import annotations

import re
from typing import Iterable

from gmpy2 import mpq

from .errors import NonUnit, OutsideWindow, ParseError
from .series import FormalSeries, Monomial, Ring, as_rational
from .signs import ChargeVector, charges_in_box

FORMAT_TAG = "kpfay-tau 1"


class TauFunction:
    """Map from in-window charge vectors to jets sharing one :class:`Ring`.

    ``radius`` is the box radius the window was built from; the window itself
    may be any finite set of charges (solvers sometimes restrict a larger box).
    """

    def __init__(self, ring: Ring, radius: int, values: dict, label: str = ""):
        self.ring = ring
        self.radius = radius
        self.label = label
        self._values: dict[ChargeVector, FormalSeries] = {}
        for s, series in values.items():
            s = ChargeVector(s)
            if len(s) != ring.n:
                raise ValueError(f"charge {s} does not have {ring.n} entries")
            if series.ring != ring:
                raise ValueError("tau values must share the ring")
            if not series.constant():
                raise NonUnit(f"tau at {tuple(s)} has zero constant term")
            self._values[s] = series.truncate(ring.d)
        self._miwa: dict = {}
        self._dlog: dict = {}
        # derived objects (wave matrices, operator bundles) keyed by their builders
        self.memo: dict = {}

    @property
    def n(self) -> int:
        return self.ring.n

    @property
    def d(self) -> int:
        return self.ring.d

    @property
    def J(self) -> int:
        return self.ring.J

    def charges(self) -> list[ChargeVector]:
        return sorted(self._values)

    def in_window(self, s) -> bool:
        return tuple(s) in self._values

    def __contains__(self, s) -> bool:
        return self.in_window(s)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TauFunction):
            return NotImplemented
        return (
            self.ring == other.ring
            and self.charges() == other.charges()
            and all(self._values[s] == other._values[s] for s in self._values)
        )

    __hash__ = None

    # evaluation

    def at(self, s) -> FormalSeries:
        try:
            return self._values[tuple(s)]
        except KeyError:
            raise OutsideWindow(ChargeVector(s)) from None

    def miwa(self, s, shifts: Iterable[tuple[int, str, int]] = ()) -> FormalSeries:
        """``tau(s, t + sum(sign * [var^-1]_g))`` for ``(g, var, sign)`` in ``shifts``."""
        shifts = tuple(shifts)
        key = (tuple(s), shifts)
        hit = self._miwa.get(key)
        if hit is None:
            if not shifts:
                return self.at(s)
            base = self.miwa(s, shifts[:-1])
            g, var, sign = shifts[-1]
            hit = base.miwa_shift(g, var, sign)
            self._miwa[key] = hit
        return hit

    def dlog(self, s, k: int) -> FormalSeries:
        """``d/dt[k,1] log tau(s, t)``."""
        key = (tuple(s), k)
        hit = self._dlog.get(key)
        if hit is None:
            tau = self.at(s)
            hit = tau.derive(k, 1) * tau.inverse()
            self._dlog[key] = hit
        return hit

    # derived models

    def map_values(self, fn, label: str | None = None) -> "TauFunction":
        return TauFunction(
            self.ring,
            self.radius,
            {s: fn(s, v) for s, v in self._values.items()},
            self.label if label is None else label,
        )

    def truncated(self, d: int) -> "TauFunction":
        """Same tau viewed at a lower cutoff (in a smaller ring)."""
        ring = Ring(self.n, self.J, d)
        values = {}
        for s, v in self._values.items():
            terms = {m: c for m, c in v.items() if m.wdeg <= d}
            values[s] = ring.from_terms(terms, d)
        return TauFunction(ring, self.radius, values, self.label)

    def restricted(self, radius: int) -> "TauFunction":
        return TauFunction(
            self.ring,
            radius,
            {s: v for s, v in self._values.items() if s.radius() <= radius},
            self.label,
        )

    def scaled(self, c) -> "TauFunction":
        return self.map_values(lambda s, v: v * as_rational(c))

    def with_fault(self, s, mono: Monomial, delta=1) -> "TauFunction":
        """Copy with one coefficient moved by ``delta`` (fault injection)."""
        s = ChargeVector(s)
        bump = self.ring.from_terms({mono: delta}, self.ring.d)
        return self.map_values(lambda c, v: v + bump if c == s else v, self.label + "+fault")


def tau_at(tau: TauFunction, s) -> FormalSeries:
    return tau.at(s)


def tau_miwa(tau: TauFunction, s, g: int, var: str, sign: int = -1) -> FormalSeries:
    return tau.miwa(s, ((g, var, sign),))


def dlog_t1(tau: TauFunction, s, k: int) -> FormalSeries:
    return tau.dlog(s, k)


def constant_tau(ring: Ring, radius: int, label: str = "") -> TauFunction:
    return TauFunction(ring, radius, {s: ring.one() for s in charges_in_box(ring.n, radius)}, label)


# ---------------------------------------------------------------- text format

_MONO_RE = re.compile(r"t(\d+)_(\d+)(?:\^(\d+))?$")


def format_monomial(mono: Monomial) -> str:
    if mono.aux:
        raise ValueError("tau jets carry no spectral variables")
    return str(mono)


def dumps(tau: TauFunction) -> str:
    lines = [
        FORMAT_TAG,
        f"N {tau.n}",
        f"J {tau.J}",
        f"d {tau.d}",
        f"S_box {tau.radius}",
    ]
    if tau.label:
        lines.append(f"label {tau.label}")
    for s in tau.charges():
        lines.append("charge " + " ".join(str(x) for x in s))
        for mono, c in tau.at(s).items():
            lines.append(f"  {format_monomial(mono)} : {c}")
        lines.append("end")
    return "\n".join(lines) + "\n"


def dump(tau: TauFunction, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(tau))


def _parse_int(text: str, line: int, col: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"expected an integer, got {text!r}", line, col) from None


def _parse_monomial(text: str, line: int, col: int) -> Monomial:
    if text == "1":
        return Monomial()
    exps: dict = {}
    offset = col
    for part in text.split("*"):
        m = _MONO_RE.match(part)
        if not m:
            raise ParseError(f"bad monomial factor {part!r}", line, offset)
        a, j = int(m.group(1)), int(m.group(2))
        e = int(m.group(3) or 1)
        if e <= 0:
            raise ParseError("exponents must be positive", line, offset)
        exps[(a, j)] = exps.get((a, j), 0) + e
        offset += len(part) + 1
    return Monomial(tuple(sorted(exps.items())), ())


def loads(text: str) -> TauFunction:
    lines = text.splitlines()
    pos = 0

    def next_line():
        nonlocal pos
        while pos < len(lines):
            raw = lines[pos]
            pos += 1
            if raw.strip() and not raw.lstrip().startswith("#"):
                return pos, raw
        raise ParseError("unexpected end of file", pos + 1, 1)

    lineno, raw = next_line()
    if raw.strip() != FORMAT_TAG:
        raise ParseError(f"expected header {FORMAT_TAG!r}", lineno, 1)
    header = {}
    for key in ("N", "J", "d", "S_box"):
        lineno, raw = next_line()
        parts = raw.split()
        if len(parts) != 2 or parts[0] != key:
            raise ParseError(f"expected '{key} <int>'", lineno, 1)
        header[key] = _parse_int(parts[1], lineno, raw.index(parts[1]) + 1)
    try:
        ring = Ring(header["N"], header["J"], header["d"])
    except ValueError as exc:
        raise ParseError(str(exc), lineno, 1) from None

    label = ""
    values = {}
    while True:
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            break
        lineno, raw = next_line()
        parts = raw.split()
        if parts[0] == "label":
            label = raw.split(None, 1)[1].strip() if len(parts) > 1 else ""
            continue
        if parts[0] != "charge":
            raise ParseError(f"expected 'charge', got {parts[0]!r}", lineno, raw.index(parts[0]) + 1)
        charge = [_parse_int(p, lineno, raw.index(p) + 1) for p in parts[1:]]
        if len(charge) != ring.n or sum(charge) != 0:
            raise ParseError(f"charge {charge} is not a zero-sum {ring.n}-vector", lineno, 1)
        terms = {}
        while True:
            lineno, raw = next_line()
            if raw.strip() == "end":
                break
            if ":" not in raw:
                raise ParseError("expected '<monomial> : <p/q>'", lineno, 1)
            left, right = raw.split(":", 1)
            col = len(left) - len(left.lstrip()) + 1
            mono = _parse_monomial(left.strip(), lineno, col)
            try:
                coeff = mpq(right.strip())
            except ValueError:
                raise ParseError(
                    f"bad rational {right.strip()!r}", lineno, len(left) + 2
                ) from None
            if mono in terms:
                raise ParseError("duplicate monomial", lineno, col)
            try:
                ring.encode(mono)
            except ValueError as exc:
                raise ParseError(str(exc), lineno, col) from None
            if mono.wdeg > ring.d:
                raise ParseError("monomial above the cutoff", lineno, col)
            terms[mono] = coeff
        values[tuple(charge)] = ring.from_terms(terms, ring.d)
    try:
        return TauFunction(ring, header["S_box"], values, label)
    except (NonUnit, ValueError) as exc:
        raise ParseError(str(exc), pos, 1) from None


def load(path) -> TauFunction:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
