"""Command line front end: ``verify``, ``solve`` and ``describe``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from collections import Counter
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigInvalid, KPError
from .report import ERROR, FAIL, PASS, SKIPPED
from .solutions import build
from .suites import negative_control, run_tasks, tasks_for
from .tau import TauFunction, dump, format_monomial, load

SCHEMA = "kpfay-report/1"
SHOWN_FAILURES = 5


def obtain_tau(cfg: RunConfig) -> TauFunction:
    if cfg.input:
        tau = load(cfg.input)
        if tau.n != cfg.n:
            raise ConfigInvalid(f"{cfg.input} has {tau.n} components, config says {cfg.n}")
        return tau
    return build(cfg.solution_spec())


def _tally(reports) -> dict:
    counts = Counter(r.status for r in reports)
    return {k: counts[k] for k in sorted(counts)}


def run(cfg: RunConfig, tau: TauFunction | None = None) -> tuple[int, dict]:
    """Run every configured suite; returns ``(exit code, report payload)``.

    The payload keeps run timings under ``"timings"``; everything else is a
    deterministic function of the config.
    """
    start = time.perf_counter()
    workers = cfg.effective_workers()
    timings: dict = {"suites_ms": {}}
    payload: dict = {"schema": SCHEMA, "version": __version__, "config": cfg.as_dict()}
    try:
        tau = obtain_tau(cfg) if tau is None else tau
    except KPError as exc:
        payload["tau"] = None
        payload["error"] = f"{type(exc).__name__}: {exc}"
        payload["suites"] = {}
        payload["negative_controls"] = []
        payload["exit_code"] = 2
        timings["total_ms"] = (time.perf_counter() - start) * 1000.0
        payload["timings"] = timings
        return 2, payload
    payload["tau"] = {
        "label": tau.label,
        "n": tau.n,
        "J": tau.J,
        "d": tau.d,
        "radius": tau.radius,
        "charges": len(tau.charges()),
    }
    suites = {}
    ok = True
    per_record: dict = {}
    for name in cfg.checks:
        if name == "negative_controls":
            continue
        t0 = time.perf_counter()
        reps = run_tasks(tau, cfg, tasks_for(name, tau, cfg), workers)
        timings["suites_ms"][name] = (time.perf_counter() - t0) * 1000.0
        per_record[name] = [round(r.elapsed_ms, 3) for r in reps]
        ok &= all(r.status == PASS or r.status in SKIPPED for r in reps)
        suites[name] = {"counts": _tally(reps), "records": [r.record() for r in reps]}
    negatives = []
    if "negative_controls" in cfg.checks:
        t0 = time.perf_counter()
        for name in cfg.checks:
            if name != "negative_controls":
                rep = negative_control(name, tau, cfg)
                negatives.append(rep)
                ok &= rep.passed or rep.skipped
        timings["suites_ms"]["negative_controls"] = (time.perf_counter() - t0) * 1000.0
    payload["suites"] = suites
    payload["negative_controls"] = [r.record() for r in negatives]
    code = 0 if ok else 1
    payload["exit_code"] = code
    timings["total_ms"] = (time.perf_counter() - start) * 1000.0
    timings["records_ms"] = per_record
    timings["workers"] = workers
    payload["timings"] = timings
    return code, payload


def comparable(payload: dict) -> dict:
    """The payload without its timing section."""
    return {k: v for k, v in payload.items() if k != "timings"}


def render_json(payload: dict) -> str:
    return json.dumps(payload, indent=1, sort_keys=False) + "\n"


def summary_text(payload: dict) -> str:
    lines = []
    tau = payload.get("tau")
    if tau is None:
        lines.append(f"could not obtain tau: {payload.get('error')}")
    else:
        lines.append(
            f"tau: {tau['label']}  n={tau['n']} J={tau['J']} d={tau['d']} "
            f"radius={tau['radius']} charges={tau['charges']}"
        )
    for name, suite in payload["suites"].items():
        counts = suite["counts"]
        parts = "  ".join(f"{k}={v}" for k, v in counts.items())
        lines.append(f"{name:<10} {parts or 'no instances'}")
        bad = [rec for rec in suite["records"] if rec["status"] in (FAIL, ERROR)]
        for rec in bad[:SHOWN_FAILURES]:
            where = json.dumps(rec["params"], sort_keys=True)
            extra = rec.get("message") or f"{rec['discrepancy_count']} discrepancies"
            lines.append(f"    {rec['status']:<5} {rec['identity']} {where}: {extra}")
        if len(bad) > SHOWN_FAILURES:
            lines.append(f"    ... {len(bad) - SHOWN_FAILURES} more, see the JSON report")
    for rec in payload["negative_controls"]:
        p = rec["params"]
        verdict = {PASS: "caught", FAIL: "MISSED"}.get(rec["status"], rec["status"])
        detail = rec.get("message") or f"{p.get('caught', 0)} of {p.get('checks', 0)} checks failed"
        lines.append(f"negative control {p['suite']:<10} {verdict} ({detail})")
    lines.append(f"exit {payload['exit_code']}")
    return "\n".join(lines) + "\n"


def write_outputs(payload: dict, prefix: str) -> list[Path]:
    base = Path(prefix)
    base.parent.mkdir(parents=True, exist_ok=True)
    js = base.with_name(base.name + ".json")
    txt = base.with_name(base.name + ".txt")
    js.write_text(render_json(payload))
    txt.write_text(summary_text(payload))
    return [js, txt]


# ------------------------------------------------------------------ describe


def describe(tau: TauFunction, terms: int = 4) -> str:
    charges = tau.charges()
    lines = [
        f"label: {tau.label or '-'}",
        f"components: {tau.n}  times per component: {tau.J}  weighted degree: {tau.d}",
        f"window: radius {tau.radius}, {len(charges)} charges",
    ]
    if all(_is_one(tau.at(s)) for s in charges):
        lines.append("all charges: 1")
        return "\n".join(lines) + "\n"
    for s in charges:
        f = tau.at(s)
        weights = f.weights()
        top = max(weights) if weights else 0
        shown = []
        for mono, c in f.items():
            if mono.wdeg == 0:
                continue
            shown.append(f"{c}*{format_monomial(mono)}")
            if len(shown) >= terms:
                break
        head = ", ".join(shown) if shown else "constant"
        lines.append(f"{tuple(s)}: degree {top}, {len(f)} terms; {head}")
    return "\n".join(lines) + "\n"


def _is_one(f) -> bool:
    return len(f) == 1 and f.constant() == 1


# ------------------------------------------------------------------ entry point


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kpfay", description="Check tau functions of the multicomponent KP hierarchy.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)
    v = sub.add_parser("verify", help="run the configured check suites")
    v.add_argument("--config", required=True)
    v.add_argument("--report", help="output prefix (overrides the config)")
    s = sub.add_parser("solve", help="build the configured tau and write it")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    d = sub.add_parser("describe", help="summarise a tau file")
    d.add_argument("path")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.verb == "describe":
            sys.stdout.write(describe(load(args.path)))
            return 0
        cfg = load_config(args.config)
        if args.verb == "solve":
            tau = build(cfg.solution_spec())
            dump(tau, args.out)
            sys.stdout.write(describe(tau))
            return 0
        code, payload = run(cfg)
        prefix = args.report or cfg.output
        if prefix:
            write_outputs(payload, prefix)
        sys.stdout.write(summary_text(payload))
        return code
    except KPError as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"{exc}\n")
        return 2


__all__ = ["run", "main", "describe", "summary_text", "render_json", "comparable", "write_outputs"]
