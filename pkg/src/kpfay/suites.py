"""Check suites: which identity instances each suite runs on a tau function.

A task is a picklable tuple ``(suite, kind, args)``; :func:`run_task` maps it to
a checker.  Tasks are listed in a fixed order and results are reassembled in
that order, so a report does not depend on the worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from itertools import permutations

from . import fay, lax
from .bilinear import all_shift_specs
from .errors import KPError
from .psdo import MatrixPsdo
from .report import ERROR, FAIL, PASS, SKIPPED_N, Collector, IdentityReport, guarded
from .series import Monomial
from .signs import ChargeVector, add_units, epsilon, sweep
from .tau import TauFunction
from .wave import bilinear_check, verify_wave_factorization

SIGN_RADIUS = 3


def _bilinear_tasks(tau, cfg, focus):
    n = tau.n
    specs = all_shift_specs(n, cfg.bilinear_derivatives)
    window = tau.charges()
    out = []
    for s in window:
        for s2 in window:
            if focus is not None and focus not in (s, s2):
                continue
            for a in range(1, n + 1):
                for b in range(1, n + 1):
                    need = [add_units(s, (a,), (g,)) for g in range(1, n + 1)]
                    need += [add_units(s2, (g,), (b,)) for g in range(1, n + 1)]
                    if not all(tau.in_window(c) for c in need):
                        continue
                    for k, spec in enumerate(specs):
                        out.append(("bilinear", "BILINEAR", (tuple(s), tuple(s2), a, b, k)))
    return out


def _per_charge(tau, focus):
    return [tuple(s) for s in tau.charges() if focus is None or s == focus]


def tasks_for(suite: str, tau: TauFunction, cfg, focus=None) -> list:
    """Ordered task list; ``focus`` restricts to instances touching one charge."""
    n = tau.n
    comps = range(1, n + 1)
    charges = _per_charge(tau, focus)
    out = []
    if suite == "signs":
        return [("signs", "SIGNS", (n, SIGN_RADIUS))]
    if suite == "bilinear":
        return _bilinear_tasks(tau, cfg, focus)
    for s in charges:
        if suite == "fay":
            out += [(suite, "DFI", (s, a)) for a in comps]
            out += [(suite, "DFII", (s, a, b)) for a, b in permutations(comps, 2)]
            out += [(suite, "DFIII", (s, a, b)) for a, b in permutations(comps, 2)]
            out += [(suite, "DFIV", (s, *ix)) for ix in permutations(comps, 3)]
            out += [(suite, "CFI", (s, *ix)) for ix in permutations(comps, 4)]
            out += [(suite, "CFII", (s, *ix)) for ix in permutations(comps, 3)]
            out += [(suite, "CHAIN", (s, ix)) for ix in permutations(comps, 3)]
            out += [(suite, "CHAIN", (s, ix)) for ix in permutations(comps, 4)]
            out.append((suite, "DIVISION", (s, tuple(comps)[:3])))
            if n < 3:
                out += [(suite, "DFIV", (s, 1, 2, 3)), (suite, "CFII", (s, 1, 2, 3))]
                out.append((suite, "CHAIN", (s, (1, 2, 3))))
            if n < 4:
                out += [(suite, "CFI", (s, 1, 2, 3, 4)), (suite, "CHAIN", (s, (1, 2, 3, 4)))]
        elif suite == "limits":
            pairs = list(permutations(comps, 2))
            triples = list(permutations(comps, 3)) or [(1, 2, 3)]
            for w in (1, 2):
                out += [(suite, "LIMIT", (s, w, a, b, None)) for a, b in pairs or [(1, 2)]]
            for w in (3, 4, 5):
                out += [(suite, "LIMIT", (s, w, a, b, k)) for a, b, k in triples]
        elif suite == "prop1":
            out += [(suite, "PROP1", (s, a)) for a in comps]
        elif suite == "prop2":
            out += [(suite, "PROP2", (s, a, j)) for a in comps for j in range(1, cfg.max_flow + 1)]
        elif suite == "prop3":
            out += [(suite, "PROP3", (s, a, b)) for a, b in permutations(comps, 2)]
        elif suite == "sato":
            out.append((suite, "WAVE", (s,)))
            out += [(suite, "SATO", (s, a, j)) for a in comps for j in range(1, cfg.max_flow + 1)]
        elif suite == "algebra":
            out += [(suite, "ALGEBRA", (s,)), (suite, "LSHAPE", (s,))]
            out += [(suite, "CROSS", (s, a, j)) for a in comps for j in range(1, cfg.max_flow + 1)]
        elif suite == "lax":
            flows = [(g, j) for g in comps for j in range(1, cfg.lax_max_flow + 1)]
            out += [
                (suite, "LAX", (s, g, j, a, b))
                for g, j in flows
                for a, b in permutations(comps, 2)
            ]
        else:
            raise ValueError(f"no task list for suite {suite!r}")
    return out


def _signs_report(n, radius, eps=epsilon) -> list[IdentityReport]:
    out = []
    for rule, (ok, total) in sorted(sweep(n, radius, eps).items()):
        col = Collector(f"SIGN:{rule}", {"n": n, "radius": radius, "instances": total})
        col.count = total - ok
        if total - ok:
            col.items.append(("sweep", "", f"{total - ok} of {total} failed"))
        out.append(col.report())
    return out


def _wave_report(tau, s, band):
    params = {"s": tuple(s)}

    def body():
        col = Collector("WAVE", params)
        items, total = verify_wave_factorization(tau, s, band)
        col.items.extend(items)
        col.count = total
        return col.report()

    return guarded("WAVE", params, body)


def _bilinear_report(tau, cfg, s, s2, a, b, k):
    spec = all_shift_specs(tau.n, cfg.bilinear_derivatives)[k]
    params = {"s": s, "s2": s2, "a": a, "b": b, "shift": spec.describe()}

    def body():
        col = Collector("BILINEAR", params, cfg.discrepancy_limit)
        items, total = bilinear_check(tau, s, s2, a, b, spec, cfg.discrepancy_limit)
        col.items.extend(items)
        col.count = total
        return col.report()

    return guarded("BILINEAR", params, body)


def run_task(tau: TauFunction, cfg, task, eps=epsilon) -> list[IdentityReport]:
    suite, kind, args = task
    M = cfg.M
    start = time.perf_counter()
    if kind == "SIGNS":
        reps = _signs_report(*args, eps=eps)
    elif kind == "BILINEAR":
        reps = [_bilinear_report(tau, cfg, *args)]
    elif kind == "DFI":
        reps = [fay.check_dfi(tau, *args)]
    elif kind == "DFII":
        reps = [fay.check_dfii(tau, *args)]
    elif kind == "DFIII":
        reps = [fay.check_dfiii(tau, *args)]
    elif kind == "DFIV":
        reps = [fay.check_dfiv(tau, *args)]
    elif kind == "CFI":
        reps = [fay.check_cfi(tau, *args)]
    elif kind == "CFII":
        reps = [fay.check_cfii(tau, *args)]
    elif kind == "CHAIN":
        reps = [fay.derive_cf_from_df(tau, *args, eps=eps)]
    elif kind == "DIVISION":
        s, idx = args
        reps = [fay.check_division_agreement(tau, s, idx)]
    elif kind == "LIMIT":
        reps = [fay.check_limit(tau, *args)]
    elif kind == "PROP1":
        reps = [lax.check_prop1(tau, *args, band=M)]
    elif kind == "PROP2":
        reps = [lax.check_prop2(tau, *args, band=M)]
    elif kind == "PROP3":
        reps = [lax.check_prop3(tau, *args, band=M)]
    elif kind == "SATO":
        reps = [lax.check_sato(tau, *args, band=M)]
    elif kind == "WAVE":
        reps = [_wave_report(tau, *args, M)]
    elif kind == "ALGEBRA":
        reps = [lax.check_algebra_at(tau, *args, band=M)]
    elif kind == "LSHAPE":
        reps = [lax.check_operator_shape(tau, *args, band=M)]
    elif kind == "CROSS":
        reps = [lax.check_cross_construction(tau, *args, band=M)]
    elif kind == "LAX":
        reps = [lax.check_lax(tau, *args, band=M)]
    else:
        raise ValueError(f"unknown task kind {kind!r}")
    if len(reps) == 1 and not reps[0].elapsed_ms:
        reps[0].elapsed_ms = (time.perf_counter() - start) * 1000.0
    return reps


# worker-process state, set once per worker by the pool initializer
_WORKER: dict = {}


def _init_worker(tau, cfg):
    _WORKER["tau"] = tau
    _WORKER["cfg"] = cfg


def _run_in_worker(task):
    return run_task(_WORKER["tau"], _WORKER["cfg"], task)


def run_tasks(tau: TauFunction, cfg, tasks: list, workers: int = 1) -> list[IdentityReport]:
    if workers <= 1 or len(tasks) < 2:
        results = [run_task(tau, cfg, t) for t in tasks]
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(tau, cfg)) as pool:
            results = list(pool.map(_run_in_worker, tasks, chunksize=1))
    return [r for reps in results for r in reps]


# ------------------------------------------------------------------ negative controls


def fault_monomial(tau: TauFunction) -> Monomial:
    """Lowest-weight fault the identities can see.

    With several components a first-order change at one charge already breaks
    the charge-coupling identities.  A scalar tau is only constrained from
    weight 4 on (every polynomial of lower weight that the hierarchy allows is
    a tau function), so the scalar fault is ``t[1,1]**4``.
    """
    power = 1 if tau.n > 1 else min(4, tau.d)
    return Monomial((((1, 1), power),), ())


def fault_charge(tau: TauFunction) -> ChargeVector:
    zero = ChargeVector((0,) * tau.n)
    return zero if tau.in_window(zero) else tau.charges()[0]


def flipped_epsilon(target):
    """Sign function with a single value flipped at ``target = (s, a, g)``."""
    s0, a0, g0 = target

    def eps(s, a, g):
        v = epsilon(s, a, g)
        return -v if (tuple(s), a, g) == (tuple(s0), a0, g0) else v

    return eps


def faulty_algebra(tau: TauFunction, s, band: int) -> IdentityReport:
    params = {"s": tuple(s)}

    def body():
        bundle = lax.build_lax(tau, s, band)
        ring = tau.ring
        bump = MatrixPsdo(ring, {-1: {(0, 0): ring.t(1, 1)}}, band=band)
        broken = replace(bundle, R=(bundle.R[0] + bump,) + bundle.R[1:])
        return lax.check_algebra(broken, params)

    return guarded("ALGEBRA", params, body)


def negative_control(suite: str, tau: TauFunction, cfg) -> IdentityReport:
    """Inject one fault and require the suite to notice it."""
    s0 = fault_charge(tau)
    mono = fault_monomial(tau)
    params = {"suite": suite, "charge": tuple(s0)}
    try:
        if suite == "signs":
            n = max(tau.n, 2)
            target = (ChargeVector((0,) * n), 1, 2)
            params.update(fault=f"epsilon{target} flipped")
            reps = _signs_report(n, SIGN_RADIUS, flipped_epsilon(target))
        elif suite == "algebra":
            # these relations hold for every unit dressing operator, so the
            # fault goes into one operator coefficient instead of tau
            params.update(fault="t[1,1] added to R1 at D^-1 [1,1]")
            reps = [faulty_algebra(tau, s0, cfg.M)]
        else:
            params.update(fault=f"{mono} coefficient +1")
            faulty = tau.with_fault(s0, mono, 1)
            tasks = tasks_for(suite, faulty, cfg, focus=s0)
            reps = [r for t in tasks for r in run_task(faulty, cfg, t)]
    except KPError as exc:
        return IdentityReport(f"NEG:{suite}", params, ERROR, message=f"{type(exc).__name__}: {exc}")
    if all(r.skipped for r in reps):
        return IdentityReport(
            f"NEG:{suite}", params, SKIPPED_N, message="no applicable check at this size"
        )
    caught = sum(r.status == FAIL for r in reps)
    params["checks"] = len(reps)
    params["caught"] = caught
    status = PASS if caught else FAIL
    msg = "" if caught else "fault went unnoticed"
    return IdentityReport(f"NEG:{suite}", params, status, count=0 if caught else 1, message=msg)
