from fractions import Fraction

import pytest

from kpfay import MatrixPsdo, OutsideWindow, Ring, SolutionSpec, vacuum_tau
from kpfay.bilinear import ShiftSpec, all_shift_specs, bilinear_residue
from kpfay.signs import epsilon
from kpfay.wave import (
    adjoint_wave_matrix,
    bilinear_check,
    dressing_operator,
    identity_wave,
    sato_operators,
    verify_wave_factorization,
    w_coefficients,
    wave_matrix,
    WaveMatrix,
)


def test_vacuum_wave_entries(vacuum3):
    s = (1, 0, -1)
    wave = wave_matrix(vacuum3, s)
    z_inv = vacuum3.ring.aux("z", -1)
    for a in (1, 2, 3):
        for b in (1, 2, 3):
            want = vacuum3.ring.one() if a == b else z_inv.scale(epsilon(s, a, b))
            assert wave.entry(a, b) == want


def test_scalar_wave_is_a_ratio_of_shifted_tau(soliton):
    wave = wave_matrix(soliton, (0,))
    tau = soliton.at((0,))
    assert wave.entry(1, 1) == soliton.miwa((0,), ((1, "z", -1),)) * tau.inverse() 


def test_wave_tends_to_the_identity(jet2):
    limit = wave_matrix(jet2, (0, 0)).at_infinity()
    ring = jet2.ring
    for (i, j), f in limit.items():
        assert f == (ring.one() if i == j else ring.zero())


def test_vacuum_adjoint_entries(vacuum2):
    s = (0, 0)
    wave = adjoint_wave_matrix(vacuum2, s)
    z_inv = vacuum2.ring.aux("z", -1)
    assert wave.entry(1, 1) == 1
    assert wave.entry(1, 2) == z_inv.scale(epsilon(s, 1, 2))
    assert wave.entry(2, 1) == z_inv.scale(epsilon(s, 2, 1))


def test_scalar_constant_adjoint_is_trivial():
    tau = vacuum_tau(SolutionSpec("vacuum", n=1, d=3, J=3, radius=0))
    assert adjoint_wave_matrix(tau, (0,)).entry(1, 1) == 1


def test_vacuum_first_coefficient_is_the_sign_matrix(vacuum3):
    s = (0, 1, -1)
    ws = w_coefficients(wave_matrix(vacuum3, s))
    w1 = ws[0]
    for (i, j), f in w1.items():
        assert f == (0 if i == j else epsilon(s, i + 1, j + 1))
    assert all(f.is_zero() for w in ws[1:] for f in w.values())


def test_soliton_coefficients_at_the_origin(soliton):
    # (1 + a (z - p)/(z - q)) / (1 + a) expanded in 1/z
    p, q, a = 2, 3, 1
    ws = w_coefficients(wave_matrix(soliton, (0,)))
    for j, w in enumerate(ws[:5], start=1):
        expected = Fraction(a * (q - p) * q ** (j - 1), 1 + a)
        assert w[(0, 0)].constant() == expected
    assert [w[(0, 0)].constant() for w in ws[:3]] == [Fraction(1, 2), Fraction(3, 2), Fraction(9, 2)]


def test_identity_wave_has_no_coefficients():
    ring = Ring(2, 2, 2)
    wave = WaveMatrix((0, 0), identity_wave(ring) | {(0, 1): ring.zero(), (1, 0): ring.zero()}, ring)
    assert all(f.is_zero() for w in w_coefficients(wave) for f in w.values())


def test_vacuum_dressing_operator_at_origin(vacuum2):
    W = dressing_operator(wave_matrix(vacuum2, (0, 0)))
    ring = vacuum2.ring
    e12 = epsilon((0, 0), 1, 2)
    w1 = {(0, 1): ring.const(e12), (1, 0): ring.const(-e12)}
    expected = MatrixPsdo.identity(ring) + MatrixPsdo(ring, {-1: w1})
    assert W == expected


def test_scalar_constant_dressing_is_trivial():
    tau = vacuum_tau(SolutionSpec("vacuum", n=1, d=3, J=3, radius=0))
    W = dressing_operator(wave_matrix(tau, (0,)))
    assert W == MatrixPsdo.identity(tau.ring)


def test_dressing_times_its_inverse(jet2):
    W, Wi = sato_operators(wave_matrix(jet2, (0, 0)))
    ident = MatrixPsdo.identity(jet2.ring)
    assert W @ Wi == ident
    assert Wi @ W == ident


@pytest.mark.parametrize("which", ["vacuum3", "jet2", "soliton"])
def test_wave_factorises_through_the_dressing(which, request):
    tau = request.getfixturevalue(which)
    s = (0,) * tau.n
    items, total = verify_wave_factorization(tau, s)
    assert total == 0, items


def test_corrupted_dressing_breaks_the_factorisation(jet2):
    wave = wave_matrix(jet2, (0, 0))
    W = dressing_operator(wave)
    ring = jet2.ring
    bump = MatrixPsdo(ring, {-2: {(0, 1): ring.t(1, 1)}})
    items, total = verify_wave_factorization(jet2, (0, 0), dressing=W + bump)
    assert total > 0


def test_vacuum_unshifted_bilinear_cancels_in_pairs(vacuum3):
    for a, b in ((1, 2), (2, 3), (3, 1)):
        items, total = bilinear_check(vacuum3, (0, 0, 0), (0, 0, 0), a, b)
        assert total == 0


def test_soliton_bilinear_with_one_shift(soliton):
    for spec in all_shift_specs(1, with_derivatives=True):
        items, total = bilinear_check(soliton, (0,), (0,), 1, 1, spec)
        assert total == 0, (spec, items)


def test_jet_bilinear_all_specs(jet2):
    for spec in all_shift_specs(2, with_derivatives=True):
        for a in (1, 2):
            for b in (1, 2):
                items, total = bilinear_check(jet2, (0, 0), (1, -1), a, b, spec)
                assert total == 0, (spec, a, b, items)


def test_bilinear_out_of_window(vacuum2):
    with pytest.raises(OutsideWindow):
        bilinear_residue(vacuum2, (2, -2), (0, 0), 1, 2, ShiftSpec())


def test_bilinear_detects_a_fault(jet2):
    from kpfay.series import Monomial

    bad = jet2.with_fault((0, 0), Monomial((((2, 1), 1),), ()), 1)
    spec = ShiftSpec(((1, "mu"),))
    totals = [bilinear_check(bad, (0, 0), s2, 1, 2, spec)[1] for s2 in ((0, 0), (1, -1), (-1, 1))]
    assert any(totals)


def test_scalar_two_shift_residue_is_symmetric_and_vacuous(soliton):
    # poles at mu and nu contribute equal and opposite terms: no constraint without a derivative
    from kpfay.series import Monomial

    bad = soliton.with_fault((0,), Monomial((((1, 1), 4),), ()), 1)
    spec = ShiftSpec(((1, "mu"), (1, "nu")))
    assert bilinear_residue(bad, (0,), (0,), 1, 1, spec).is_zero()
    deriv = ShiftSpec(((1, "mu"), (1, "nu")), deriv=1)
    assert not bilinear_residue(bad, (0,), (0,), 1, 1, deriv).is_zero()
