"""End-to-end acceptance runs; each test records a PASS/FAIL line for the summary."""

import random
import time
from pathlib import Path

import pytest

from kpfay import RunConfig, SolutionSpec, jet_solve, load_config
from kpfay.cli import comparable, render_json, run
from kpfay.lax import build_lax
from kpfay.report import FAIL, PASS, SKIPPED
from kpfay.signs import sweep
from kpfay.solutions import _monomial_keys
from kpfay.suites import run_task, tasks_for

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
OPERATOR_SUITES = ("bilinear", "fay", "limits", "prop1", "prop2", "prop3", "sato", "lax", "algebra")


def timed_run(name):
    cfg = load_config(CONFIGS / name)
    cfg.output = ""
    start = time.perf_counter()
    code, payload = run(cfg)
    return code, payload, time.perf_counter() - start


@pytest.fixture(scope="module")
def vacuum_run():
    return timed_run("vacuum_n3.conf")


@pytest.fixture(scope="module")
def soliton_run():
    return timed_run("soliton_n1.conf")


@pytest.fixture(scope="module")
def jet_run():
    return timed_run("jet_n2.conf")


def records(payload, suite, identity=None):
    recs = payload["suites"][suite]["records"]
    return [r for r in recs if identity is None or r["identity"] == identity]


def clean(recs):
    """No failure or error, and at least one real pass."""
    statuses = {r["status"] for r in recs}
    return PASS in statuses and statuses <= {PASS} | SKIPPED


def failures(payload):
    return {
        name: suite["counts"].get(FAIL, 0) + suite["counts"].get("error", 0)
        for name, suite in payload["suites"].items()
        if suite["counts"].get(FAIL, 0) + suite["counts"].get("error", 0)
    }


def test_sign_layer(criterion):
    start = time.perf_counter()
    results = {n: sweep(n, 3) for n in (2, 3, 4)}
    elapsed = time.perf_counter() - start
    bad = {n: {k: v for k, v in r.items() if v[0] != v[1]} for n, r in results.items()}
    total = sum(v[1] for r in results.values() for v in r.values())
    ok = not any(bad.values()) and elapsed < 1.0
    criterion(1, ok, f"{total} sign instances for n = 2, 3, 4 in {elapsed:.2f} s")
    assert not any(bad.values()), bad
    assert elapsed < 1.0
    assert {"range", "antisymmetry", "shift_i", "shift_ii"} <= set(results[4])


@pytest.mark.xfail(strict=True, reason="a constant multicomponent tau is not a tau function; see the notes")
def test_constant_tau_suite(vacuum_run, criterion):
    code, payload, elapsed = vacuum_run
    bad = failures(payload)
    ok = code == 0 and elapsed < 120
    detail = f"exit {code} in {elapsed:.0f} s; failing checks per suite {bad}" if bad else f"{elapsed:.0f} s"
    criterion(2, ok, detail)
    assert ok


def test_constant_tau_failure_is_the_analysed_one(vacuum_run):
    # the failures are genuine, not crashes, and the structural relations still hold
    code, payload, _ = vacuum_run
    assert code == 1
    assert all(r["status"] != "error" for s in payload["suites"].values() for r in s["records"])
    assert clean(records(payload, "algebra"))
    assert clean(records(payload, "signs"))
    assert any(r["status"] == FAIL for r in records(payload, "sato", "SATO"))
    assert clean(records(payload, "sato", "WAVE"))


def test_scalar_reduction(soliton_run, soliton, criterion):
    code, payload, elapsed = soliton_run
    checks = {
        "DFI": clean(records(payload, "fay", "DFI")),
        "bilinear": clean(records(payload, "bilinear")),
        "operator shape": clean(records(payload, "algebra", "LSHAPE")),
        "prop2 j<=3": clean(records(payload, "prop2"))
        and {r["params"]["j"] for r in records(payload, "prop2")} == {1, 2, 3},
    }
    L = build_lax(soliton, (0,)).L
    checks["no D^0 term, u1 != 0"] = not L.coeff(0) or all(f.is_zero() for f in L.coeff(0).values())
    checks["no D^0 term, u1 != 0"] &= not L.coeff(-1)[(0, 0)].is_zero()
    ok = all(checks.values()) and elapsed < 60
    criterion(3, ok, f"{elapsed:.1f} s; " + ", ".join(k for k, v in checks.items() if v))
    assert ok, checks


def test_solved_tau(jet_run, criterion):
    code, payload, elapsed = jet_run
    per_suite = {name: clean(records(payload, name)) for name in OPERATOR_SUITES}
    cf = clean(records(payload, "fay", "CFII")) or all(
        r["status"] in SKIPPED for r in records(payload, "fay", "CFII")
    )
    ok = code == 0 and all(per_suite.values()) and cf and elapsed < 300
    criterion(4, ok, f"exit {code} in {elapsed:.0f} s; suites clean: {sum(per_suite.values())}/{len(per_suite)}")
    assert ok, (code, per_suite, failures(payload))


def test_cross_construction(vacuum_run, jet_run, criterion):
    seen = {}
    for label, (_, payload, _) in (("constant N=3", vacuum_run), ("solved N=2", jet_run)):
        recs = records(payload, "algebra", "CROSS")
        n = payload["tau"]["n"]
        pairs = {(r["params"]["a"], r["params"]["j"]) for r in recs}
        seen[label] = clean(recs) and pairs == {(a, j) for a in range(1, n + 1) for j in (1, 2, 3)}
    ok = all(seen.values())
    criterion(5, ok, ", ".join(f"{k}: {'agree' if v else 'DIFFER'}" for k, v in seen.items()))
    assert ok


def _verdicts(tau, cfg):
    out = {}
    for suite in ("fay", "bilinear"):
        reps = [r for t in tasks_for(suite, tau, cfg) for r in run_task(tau, cfg, t)]
        if suite == "fay":
            reps = [r for r in reps if r.identity in ("DFI", "DFII", "DFIII", "DFIV")]
        assert all(r.status != "error" for r in reps)
        out[suite] = any(r.status == FAIL for r in reps)
    return out


def _instance(seed):
    """Solved tau with a seeded random fault on every other pair of seeds."""
    n = 2 if seed % 2 else 3
    d = 4 if n == 2 else 3
    tau = jet_solve(SolutionSpec("jet", n=n, d=d, J=d, radius=1, seed=seed))
    rng = random.Random(seed)
    faulted = seed % 4 in (1, 2)
    if faulted:
        s = rng.choice(tau.charges())
        mono = tau.ring.decode(rng.choice(_monomial_keys(tau.ring, rng.randint(1, d))))
        tau = tau.with_fault(s, mono, rng.choice([1, -1, 2]))
    return tau, RunConfig(n_components=n, weighted_degree=d, charge_radius=1), faulted


def test_oracle_equivalence(criterion):
    rows = []
    for seed in range(1, 21):
        tau, cfg, faulted = _instance(seed)
        v = _verdicts(tau, cfg)
        rows.append((seed, faulted, v["fay"], v["bilinear"]))
    agree = sum(f == b for _, _, f, b in rows)
    faults = sum(f for _, f, _, _ in rows)
    detected = sum(fay for _, f, fay, _ in rows if f)
    ok = agree == 20
    criterion(6, ok, f"{agree}/20 verdicts agree; {detected} of {faults} faulted instances rejected by both")
    assert ok, rows
    # the comparison is not vacuous: clean instances pass, faulted ones are seen
    assert all(not fay for _, f, fay, _ in rows if not f)
    assert detected == faults


def test_negative_controls(jet_run, soliton_run, criterion):
    _, payload, _ = jet_run
    verdicts = {r["params"]["suite"]: r["status"] for r in payload["negative_controls"]}
    caught = [k for k, v in verdicts.items() if v == PASS]
    _, scalar, _ = soliton_run
    scalar_verdicts = {r["params"]["suite"]: r["status"] for r in scalar["negative_controls"]}
    scalar_ok = all(v == PASS or v in SKIPPED for v in scalar_verdicts.values())
    ok = len(caught) == len(verdicts) == 10 and scalar_ok
    criterion(7, ok, f"solved N=2: {len(caught)}/{len(verdicts)} suites caught the fault; scalar: "
                     f"{sum(v == PASS for v in scalar_verdicts.values())} caught, rest not applicable")
    assert ok, (verdicts, scalar_verdicts)


def test_determinism(jet_run, criterion):
    _, first, _ = jet_run
    _, second, _ = timed_run("jet_n2.conf")
    same = render_json(comparable(first)) == render_json(comparable(second))
    criterion(8, same, "two runs of the solved N=2 config give byte-identical reports without timings")
    assert same
