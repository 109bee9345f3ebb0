"""Checkers for the differential and difference Fay identities and their limits.

Every identity is evaluated in cross-multiplied form: denominators that are
tau values are cleared by multiplying through, denominators such as
``mu - nu`` never appear.  A residual series that survives truncation is a
discrepancy.  ``mode="division"`` instead divides by the (unit) tau values,
which is the form the identities are usually written in; both must agree.
"""

from __future__ import annotations

from typing import Callable

from .errors import IndexOutOfRange, IndicesNotDistinct
from .report import (
    Collector,
    IdentityReport,
    guarded,
    skipped_for_n,
)
from .series import FormalSeries
from .signs import ChargeVector, add_units, epsilon, shift_charge
from .tau import TauFunction


def _distinct(n: int, *idx: int) -> None:
    for i in idx:
        if not 1 <= i <= n:
            raise IndexOutOfRange(f"index {i} outside 1..{n}")
    if len(set(idx)) != len(idx):
        raise IndicesNotDistinct(f"indices {idx} must be distinct")


class _Terms:
    """Shifted tau values and their first-time derivatives at one tau."""

    def __init__(self, tau: TauFunction):
        self.tau = tau
        self.ring = tau.ring

    def val(self, s, *shifts) -> FormalSeries:
        return self.tau.miwa(s, tuple((g, v, -1) for g, v in shifts))

    def der(self, k: int, s, *shifts) -> FormalSeries:
        return self.val(s, *shifts).derive(k, 1)

    def dlog(self, k: int, s, *shifts) -> FormalSeries:
        f = self.val(s, *shifts)
        return f.derive(k, 1) * f.inverse()

    def aux(self, var, e) -> FormalSeries:
        return self.ring.aux(var, e)


# --------------------------------------------------------------- DFI .. DFIV


def dfi_residual(tau: TauFunction, s, a: int, mode: str = "cross") -> FormalSeries:
    """First differential identity, both shifts on component ``a``."""
    x = _Terms(tau)
    mu, nu = x.aux("mu", 1), x.aux("nu", 1)
    A, B = x.val(s, (a, "mu")), x.val(s, (a, "nu"))
    C, AB = x.val(s), x.val(s, (a, "mu"), (a, "nu"))
    if mode == "division":
        lhs = x.dlog(a, s, (a, "mu")) - x.dlog(a, s, (a, "nu"))
        return lhs - (mu - nu) * (C * AB * (A * B).inverse() - 1)
    return A.derive(a, 1) * B - B.derive(a, 1) * A - (mu - nu) * (C * AB - A * B)


def dfii_residual(tau: TauFunction, s, a: int, b: int, mode: str = "cross") -> FormalSeries:
    x = _Terms(tau)
    gap = x.aux("mu", -1) - x.aux("nu", -1)
    A, B = x.val(s, (a, "mu")), x.val(s, (a, "nu"))
    up = x.val(shift_charge(s, a, b))
    down = x.val(shift_charge(s, b, a), (a, "mu"), (a, "nu"))
    if mode == "division":
        lhs = x.dlog(b, s, (a, "mu")) - x.dlog(b, s, (a, "nu"))
        return lhs + gap * up * down * (A * B).inverse()
    return A.derive(b, 1) * B - B.derive(b, 1) * A + gap * up * down


def dfiii_residual(tau: TauFunction, s, a: int, b: int, mode: str = "cross") -> FormalSeries:
    x = _Terms(tau)
    mu = x.aux("mu", 1)
    sp = shift_charge(s, a, b)
    A, X = x.val(s, (a, "mu")), x.val(sp, (b, "nu"))
    C, Y = x.val(s), x.val(sp, (a, "mu"), (b, "nu"))
    if mode == "division":
        lhs = x.dlog(a, sp, (b, "nu")) - x.dlog(a, s, (a, "mu"))
        return lhs - mu + mu * C * Y * (A * X).inverse()
    return X.derive(a, 1) * A - A.derive(a, 1) * X - mu * (A * X - C * Y)


def dfiv_sign(s, a, b, k) -> int:
    return epsilon(s, a, k) * epsilon(s, b, k) * epsilon(s, b, a)


def dfiv_residual(tau: TauFunction, s, a: int, b: int, k: int, mode: str = "cross") -> FormalSeries:
    x = _Terms(tau)
    sp = shift_charge(s, a, b)
    A, X = x.val(s, (a, "mu")), x.val(sp, (b, "nu"))
    Z = x.val(shift_charge(s, a, k))
    Q = x.val(shift_charge(s, k, b), (a, "mu"), (b, "nu"))
    sign = dfiv_sign(s, a, b, k)
    if mode == "division":
        lhs = x.dlog(k, s, (a, "mu")) - x.dlog(k, sp, (b, "nu"))
        return lhs + (Z * Q * (X * A).inverse()).scale(sign)
    return A.derive(k, 1) * X - X.derive(k, 1) * A + (Z * Q).scale(sign)


# --------------------------------------------------------------- CFI, CFII


def cfi_residual(tau: TauFunction, s, a: int, b: int, lam: int, k: int) -> FormalSeries:
    x = _Terms(tau)
    sp = shift_charge(s, lam, k)
    first = x.val(s) * x.val(add_units(sp, plus=(a,), minus=(b,)), (k, "mu"))
    second = x.val(shift_charge(s, a, b)) * x.val(sp, (k, "mu"))
    third = x.val(shift_charge(s, a, k), (k, "mu")) * x.val(shift_charge(s, lam, b))
    return (
        first.scale(epsilon(sp, b, a))
        + second.scale(epsilon(s, a, b))
        + third.scale(epsilon(s, a, k) * epsilon(sp, b, k))
    )


def cfii_residual(tau: TauFunction, s, a: int, b: int, lam: int) -> FormalSeries:
    x = _Terms(tau)
    first = x.val(s) * x.val(shift_charge(s, a, b), (lam, "mu"))
    second = x.val(shift_charge(s, a, b)) * x.val(s, (lam, "mu"))
    third = x.val(shift_charge(s, a, lam), (lam, "mu")) * x.val(shift_charge(s, lam, b))
    return (
        first.scale(epsilon(s, b, a))
        + second.scale(epsilon(s, a, b))
        + (third * x.aux("mu", -1)).scale(epsilon(s, a, lam) * epsilon(s, b, lam))
    )


# --------------------------------------------------------------- limits


def limit_residual(tau: TauFunction, s, which: int, a: int, b: int, k: int | None = None) -> FormalSeries:
    """Direct cross-multiplied form of the five one-sided limits.

    1: nu -> infinity in the second identity, 2: in the third, 3: in the
    fourth; 4: mu -> infinity in the fourth; 5: both limits of the fourth.
    """
    x = _Terms(tau)
    C = x.val(s)
    sp = shift_charge(s, a, b)
    U = x.val(sp)
    if which == 1:
        A = x.val(s, (a, "mu"))
        V = x.val(shift_charge(s, b, a), (a, "mu"))
        return (A.derive(b, 1) * C - C.derive(b, 1) * A) * x.aux("mu", 1) + U * V
    if which == 2:
        A = x.val(s, (a, "mu"))
        Y = x.val(sp, (a, "mu"))
        return U.derive(a, 1) * A - A.derive(a, 1) * U - x.aux("mu", 1) * (A * U - C * Y)
    sign = dfiv_sign(s, a, b, k)
    Z = x.val(shift_charge(s, a, k))
    if which == 3:
        A = x.val(s, (a, "mu"))
        Q = x.val(shift_charge(s, k, b), (a, "mu"))
        return A.derive(k, 1) * U - U.derive(k, 1) * A + (Z * Q).scale(sign)
    if which == 4:
        X = x.val(sp, (b, "nu"))
        Q = x.val(shift_charge(s, k, b), (b, "nu"))
        return C.derive(k, 1) * X - X.derive(k, 1) * C + (Z * Q).scale(sign)
    if which == 5:
        Q = x.val(shift_charge(s, k, b))
        return C.derive(k, 1) * U - U.derive(k, 1) * C + (Z * Q).scale(sign)
    raise ValueError(f"no limit identity {which}")


def _limit_of_parent(tau, s, which, a, b, k):
    """The same limit obtained by dropping the spectral variable from the parent identity."""
    if which == 1:
        # parent carries (mu^-1 - nu^-1); its nu^0 part is mu^-1 times the limit
        return dfii_residual(tau, s, a, b).drop_aux("nu").mul_aux("mu", 1)
    if which == 2:
        return dfiii_residual(tau, s, a, b).drop_aux("nu")
    if which == 3:
        return dfiv_residual(tau, s, a, b, k).drop_aux("nu")
    if which == 4:
        return dfiv_residual(tau, s, a, b, k).drop_aux("mu")
    # double limit reached along both orders
    return limit_residual(tau, s, 3, a, b, k).drop_aux("mu"), limit_residual(tau, s, 4, a, b, k).drop_aux("nu")


LIMIT_ARITY = {1: 2, 2: 2, 3: 3, 4: 3, 5: 3}


# --------------------------------------------------------------- reports


def _params(s, **idx) -> dict:
    out = {"s": tuple(ChargeVector(s))}
    out.update({k: v for k, v in idx.items() if v is not None})
    return out


def _checked(identity, params, tau, idx, need, fn) -> IdentityReport:
    if tau.n < need:
        return skipped_for_n(identity, params, need, tau.n)

    def body():
        _distinct(tau.n, *idx)
        col = Collector(identity, params)
        col.add(fn(), "residual")
        return col.report()

    return guarded(identity, params, body)


def check_dfi(tau, s, a, mode="cross") -> IdentityReport:
    return _checked("DFI", _params(s, a=a), tau, (a,), 1, lambda: dfi_residual(tau, s, a, mode))


def check_dfii(tau, s, a, b, mode="cross") -> IdentityReport:
    return _checked(
        "DFII", _params(s, a=a, b=b), tau, (a, b), 2, lambda: dfii_residual(tau, s, a, b, mode)
    )


def check_dfiii(tau, s, a, b, mode="cross") -> IdentityReport:
    return _checked(
        "DFIII", _params(s, a=a, b=b), tau, (a, b), 2, lambda: dfiii_residual(tau, s, a, b, mode)
    )


def check_dfiv(tau, s, a, b, k, mode="cross") -> IdentityReport:
    return _checked(
        "DFIV",
        _params(s, a=a, b=b, k=k),
        tau,
        (a, b, k),
        3,
        lambda: dfiv_residual(tau, s, a, b, k, mode),
    )


def check_cfi(tau, s, a, b, lam, k) -> IdentityReport:
    return _checked(
        "CFI",
        _params(s, a=a, b=b, lam=lam, k=k),
        tau,
        (a, b, lam, k),
        4,
        lambda: cfi_residual(tau, s, a, b, lam, k),
    )


def check_cfii(tau, s, a, b, lam) -> IdentityReport:
    return _checked(
        "CFII",
        _params(s, a=a, b=b, lam=lam),
        tau,
        (a, b, lam),
        3,
        lambda: cfii_residual(tau, s, a, b, lam),
    )


def check_limit(tau, s, which: int, a, b, k=None) -> IdentityReport:
    name = f"LIM{which}"
    params = _params(s, a=a, b=b, k=k)
    need = LIMIT_ARITY[which]
    if tau.n < need:
        return skipped_for_n(name, params, need, tau.n)

    def body():
        idx = (a, b) if need == 2 else (a, b, k)
        _distinct(tau.n, *idx)
        col = Collector(name, params)
        direct = limit_residual(tau, s, which, a, b, k)
        col.add(direct, "direct")
        parent = _limit_of_parent(tau, s, which, a, b, k)
        for i, p in enumerate(parent if isinstance(parent, tuple) else (parent,)):
            col.add(p - direct, f"limit of parent {i + 1}")
        return col.report()

    return guarded(name, params, body)


def check_limits(tau, s, indices) -> list[IdentityReport]:
    """All five limits for one index choice ``(a, b)`` or ``(a, b, k)``."""
    a, b, *rest = indices
    k = rest[0] if rest else None
    return [check_limit(tau, s, w, a, b, k) for w in range(1, 6)]


def check_division_agreement(tau, s, indices) -> IdentityReport:
    """Cross-multiplied and divided forms must vanish together."""
    params = _params(s, idx=tuple(indices))

    def body():
        col = Collector("DIVISION", params)
        n = tau.n
        a = indices[0]
        pairs = [("DFI", lambda m: dfi_residual(tau, s, a, m))]
        if n >= 2 and len(indices) >= 2:
            b = indices[1]
            _distinct(n, a, b)
            pairs += [
                ("DFII", lambda m: dfii_residual(tau, s, a, b, m)),
                ("DFIII", lambda m: dfiii_residual(tau, s, a, b, m)),
            ]
            if n >= 3 and len(indices) >= 3:
                k = indices[2]
                _distinct(n, a, b, k)
                pairs.append(("DFIV", lambda m: dfiv_residual(tau, s, a, b, k, m)))
        for name, fn in pairs:
            cross = fn("cross").is_zero()
            div = fn("division").is_zero()
            col.add_flag(cross == div, f"{name} cross={cross} division={div}")
        return col.report()

    return guarded("DIVISION", params, body)


# --------------------------------------------------------------- CF from DF


def _step(col: Collector, name: str, residual) -> None:
    sub = Collector(name, {})
    if isinstance(residual, bool):
        sub.add_flag(residual, name)
    else:
        sub.add(residual, name)
    rep = sub.report()
    col.steps.append(rep)
    col.items.extend(rep.discrepancies[: max(0, col.limit - len(col.items))])
    col.count += rep.count


def _cfii_chain(tau, s, a, b, lam, eps, col):
    x = _Terms(tau)
    C, U = x.val(s), x.val(shift_charge(s, a, b))
    Al = x.val(s, (lam, "mu"))
    V = x.val(shift_charge(s, a, b), (lam, "mu"))
    Zl = x.val(shift_charge(s, a, lam), (lam, "mu"))
    Wl = x.val(shift_charge(s, lam, b))
    ratio_lb = x.val(add_units(s, plus=(lam,), minus=(b,)))
    ratio_la = x.val(shift_charge(s, lam, a))
    minv = x.aux("mu", -1)
    inv = (U * Al).inverse()

    lhs = (C * V).scale(eps(s, b, a)) + (U * Al).scale(eps(s, a, b)) + (
        Zl * Wl * minv
    ).scale(eps(s, a, lam) * eps(s, b, lam))
    sig3 = eps(s, a, lam) * eps(s, b, lam) * eps(s, b, a)
    bracket = C * V * inv - 1 + (Zl * Wl * minv * inv).scale(sig3)
    _step(col, "factor out the second term", lhs - (U * Al * bracket).scale(eps(s, b, a)))

    # one-sided limits rewrite the first and third terms through log-derivatives
    d_shift = x.dlog(a, s, (lam, "mu"))
    d_lb = x.dlog(a, add_units(s, plus=(lam,), minus=(b,)))
    d_c = x.dlog(a, s)
    K = C * ratio_lb * (U * ratio_la).inverse()
    sig_a = eps(s, lam, a) * eps(s, b, a) * eps(s, b, lam)
    rewritten = (K * (d_shift - d_lb)).scale(-sig_a) - 1 - (K * (d_shift - d_c)).scale(sig3)
    _step(col, "substitute the one-sided limits", bracket - rewritten)

    delta = d_c - d_lb
    _step(col, "double limit links the prefactor", K * delta + sig_a)
    _step(col, "sign product equals -1", sig_a * sig3 == -1)
    _step(col, "bracket times the log-derivative gap", rewritten * delta)


def _cfi_chain(tau, s, a, b, lam, k, eps, col):
    x = _Terms(tau)
    sp = shift_charge(s, lam, k)
    C, U = x.val(s), x.val(shift_charge(s, a, b))
    M = x.val(sp, (k, "mu"))
    F = x.val(add_units(sp, plus=(a,), minus=(b,)), (k, "mu"))
    Zk = x.val(shift_charge(s, a, k), (k, "mu"))
    lb = x.val(add_units(s, plus=(lam,), minus=(b,)))
    la = x.val(shift_charge(s, lam, a))
    inv = (U * M).inverse()

    lhs = (
        (C * F).scale(eps(sp, b, a))
        + (U * M).scale(eps(s, a, b))
        + (Zk * lb).scale(eps(s, a, k) * eps(sp, b, k))
    )
    r1 = eps(sp, b, a) * eps(s, b, a)
    r3 = eps(s, a, k) * eps(sp, b, k) * eps(s, b, a)
    first = (C * F * inv).scale(r1)
    third = (Zk * lb * inv).scale(r3)
    bracket = first - 1 + third
    _step(col, "factor out the second term", lhs - (U * M * bracket).scale(eps(s, b, a)))

    K = C * lb * (U * la).inverse()
    d_shift = x.dlog(a, sp, (k, "mu"))
    d_lb = x.dlog(a, add_units(s, plus=(lam,), minus=(b,)))
    d_c = x.dlog(a, s)
    pre = eps(sp, k, a) * eps(sp, b, k) * eps(s, b, a)
    _step(col, "first term through a one-sided limit", first + (K * (d_shift - d_lb)).scale(pre))
    _step(col, "third term through a one-sided limit", third - (K * (d_shift - d_c)).scale(pre))
    _step(
        col,
        "prefactor sign equals 1",
        eps(sp, k, a) * eps(sp, b, k) * eps(s, b, lam) * eps(s, lam, a) == 1,
    )
    _step(col, "auxiliary sign equals -1", eps(s, a, k) * eps(sp, lam, a) * eps(sp, lam, k) == -1)
    sig_a = eps(s, lam, a) * eps(s, b, a) * eps(s, b, lam)
    delta = d_c - d_lb
    _step(col, "double limit links the prefactor", K * delta + sig_a)
    _step(col, "bracket times the log-derivative gap", bracket * delta)


def derive_cf_from_df(tau, s, indices, eps: Callable = epsilon) -> IdentityReport:
    """Replay the derivation of a difference identity step by step.

    Three indices ``(a, b, lam)`` replay the second difference identity, four
    ``(a, b, lam, k)`` the first.  Each intermediate equality is its own step.
    """
    indices = tuple(indices)
    name = "CFI-chain" if len(indices) == 4 else "CFII-chain"
    params = _params(s, idx=indices)
    need = len(indices)
    if tau.n < need:
        return skipped_for_n(name, params, need, tau.n)

    def body():
        _distinct(tau.n, *indices)
        col = Collector(name, params)
        if need == 4:
            _cfi_chain(tau, s, *indices, eps, col)
        else:
            _cfii_chain(tau, s, *indices, eps, col)
        return col.report()

    return guarded(name, params, body)
