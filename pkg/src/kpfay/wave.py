"""Wave matrices built from tau, their dressing operators, and the bilinear check.

Entries are stored *reduced*: the column factor ``z**s_b * exp(xi(t_b, z))``
(inverted for the adjoint) is stripped, so every entry is a finite Laurent
polynomial in ``z`` over the time jets.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bilinear import ShiftSpec, all_shift_specs, bilinear_residue
from .psdo import MatrixPsdo
from .report import DEFAULT_LIMIT, series_discrepancies
from .series import EXACT, FormalSeries, Ring
from .signs import ChargeVector, epsilon, shift_charge
from .tau import TauFunction


@dataclass(frozen=True)
class WaveMatrix:
    s: ChargeVector
    entries: dict  # (row, col) 0-based -> reduced series in z
    ring: Ring

    def entry(self, a: int, b: int) -> FormalSeries:
        return self.entries[(a - 1, b - 1)]

    @property
    def trusted(self) -> int:
        return min(f.trusted for f in self.entries.values())

    def at_infinity(self) -> dict:
        """``z -> infinity`` limit of every entry."""
        return {ij: f.drop_aux("z") for ij, f in self.entries.items()}


def _wave(tau: TauFunction, s, sign: int) -> WaveMatrix:
    s = ChargeVector(s)
    ring = tau.ring
    inv = tau.at(s).inverse()
    entries = {}
    for a in range(1, tau.n + 1):
        for b in range(1, tau.n + 1):
            if a == b:
                c = s
            else:
                c = shift_charge(s, a, b) if sign < 0 else shift_charge(s, b, a)
            num = tau.miwa(c, ((b, "z", sign),))
            f = num * inv * ring.aux("z", int(a == b) - 1)
            if a != b and epsilon(s, a, b) < 0:
                f = -f
            entries[(a - 1, b - 1)] = f
    return WaveMatrix(s, entries, ring)


def wave_matrix(tau: TauFunction, s) -> WaveMatrix:
    return _wave(tau, s, -1)


def adjoint_wave_matrix(tau: TauFunction, s) -> WaveMatrix:
    return _wave(tau, s, 1)


def w_coefficients(wave: WaveMatrix, depth: int | None = None) -> list[dict]:
    """``[w_1, w_2, ...]`` with ``w_j`` the ``z**-j`` coefficient matrix.

    By default stops where no coefficient is trusted any more, or for exact
    entries at the deepest power of ``z`` present.
    """
    if depth is None:
        depth = wave.trusted
        if depth >= EXACT:
            depth = max(
                (-e for f in wave.entries.values() for m, _ in f.items() for v, e in m.aux if v == "z"),
                default=0,
            )
    out = []
    for j in range(1, depth + 1):
        out.append({ij: f.coeff("z", -j) for ij, f in wave.entries.items()})
    return out


def dressing_operator(wave: WaveMatrix, band: int = 8) -> MatrixPsdo:
    ring = wave.ring
    terms = {0: {(i, i): ring.one() for i in range(ring.n)}}
    for j, w in enumerate(w_coefficients(wave), start=1):
        terms[-j] = w
    return MatrixPsdo(ring, terms, wave.trusted, band)


def sato_operators(wave: WaveMatrix, band: int = 8) -> tuple[MatrixPsdo, MatrixPsdo]:
    w = dressing_operator(wave, band)
    return w, w.invert_unit()


def wave_difference(a: dict, b: dict) -> dict:
    out = {}
    for ij in sorted(set(a) | set(b)):
        if ij in a and ij in b:
            out[ij] = a[ij] - b[ij]
        else:
            out[ij] = a[ij] if ij in a else -b[ij]
    return out


def wave_discrepancies(diff: dict, limit: int = DEFAULT_LIMIT):
    items, total = [], 0
    for (i, j), f in sorted(diff.items()):
        found, n = series_discrepancies(f, f"[{i + 1},{j + 1}]", limit - len(items))
        items.extend(found)
        total += n
    return items, total


def identity_wave(ring: Ring) -> dict:
    return {(i, i): ring.one() for i in range(ring.n)}


def verify_wave_factorization(tau: TauFunction, s, band: int = 8, dressing=None):
    """Compare the wave matrix with the dressing operator applied to the bare exponential."""
    wave = wave_matrix(tau, s)
    w = dressing_operator(wave, band) if dressing is None else dressing
    rebuilt = w.apply(identity_wave(tau.ring))
    return wave_discrepancies(wave_difference(wave.entries, rebuilt))


def bilinear_check(tau: TauFunction, s, s2, a: int, b: int, spec: ShiftSpec = ShiftSpec(), limit=DEFAULT_LIMIT):
    """Nonzero trusted coefficients of the bilinear residue (empty means it holds)."""
    res = bilinear_residue(tau, ChargeVector(s), ChargeVector(s2), a, b, spec)
    return series_discrepancies(res, spec.describe(), limit)


__all__ = [
    "WaveMatrix",
    "ShiftSpec",
    "all_shift_specs",
    "wave_matrix",
    "adjoint_wave_matrix",
    "w_coefficients",
    "dressing_operator",
    "sato_operators",
    "verify_wave_factorization",
    "bilinear_check",
    "identity_wave",
    "wave_difference",
    "wave_discrepancies",
]
