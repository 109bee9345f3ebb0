"""Check results shared by every verification layer."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .errors import KPError, OutsideWindow, RangeTooNarrow
from .series import FormalSeries

PASS = "pass"
FAIL = "fail"
ERROR = "error"
SKIPPED_N = "SkippedInsufficientN"
OUTSIDE = "OutsideWindow"
NARROW = "RangeTooNarrow"
SKIPPED = frozenset({SKIPPED_N, OUTSIDE, NARROW})

DEFAULT_LIMIT = 20


@dataclass
class IdentityReport:
    identity: str
    params: dict
    status: str
    discrepancies: list = field(default_factory=list)
    count: int = 0
    trusted: dict = field(default_factory=dict)
    message: str = ""
    elapsed_ms: float = 0.0
    steps: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    @property
    def skipped(self) -> bool:
        return self.status in SKIPPED

    def record(self) -> dict:
        """JSON-ready payload without timings."""
        out = {
            "identity": self.identity,
            "params": {k: _plain(v) for k, v in sorted(self.params.items())},
            "status": self.status,
            "discrepancy_count": self.count,
            "discrepancies": [list(d) for d in self.discrepancies],
            "trusted": dict(sorted(self.trusted.items())),
        }
        if self.message:
            out["message"] = self.message
        if self.steps:
            out["steps"] = [s.record() for s in self.steps]
        return out


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


def series_discrepancies(f: FormalSeries, where: str = "", limit: int = DEFAULT_LIMIT):
    """``(location, monomial, coefficient)`` for the surviving terms of ``f``."""
    out = []
    for mono, c in f.items():
        if len(out) >= limit:
            break
        out.append((where, str(mono), str(c)))
    return out, len(f)


class Collector:
    """Accumulates residual series and turns them into a report."""

    def __init__(self, identity: str, params: dict, limit: int = DEFAULT_LIMIT):
        self.identity = identity
        self.params = params
        self.limit = limit
        self.items: list = []
        self.count = 0
        self.trust: int | None = None
        self.steps: list = []

    def add(self, residual: FormalSeries, where: str = "") -> None:
        t = residual.trusted_order
        self.trust = t if self.trust is None else min(self.trust, t)
        found, n = series_discrepancies(residual, where, self.limit - len(self.items))
        self.items.extend(found)
        self.count += n

    def add_flag(self, ok: bool, where: str) -> None:
        if not ok:
            if len(self.items) < self.limit:
                self.items.append((where, "", "false"))
            self.count += 1

    def report(self, **extra) -> IdentityReport:
        trusted = {} if self.trust is None else {"weight": self.trust}
        return IdentityReport(
            self.identity,
            self.params,
            PASS if self.count == 0 else FAIL,
            self.items,
            self.count,
            trusted,
            steps=list(self.steps),
            **extra,
        )


def guarded(identity: str, params: dict, fn) -> IdentityReport:
    """Run ``fn() -> IdentityReport`` turning engine errors into report statuses."""
    start = time.perf_counter()
    try:
        rep = fn()
    except OutsideWindow as exc:
        rep = IdentityReport(identity, params, OUTSIDE, message=str(exc))
    except RangeTooNarrow as exc:
        rep = IdentityReport(identity, params, NARROW, message=str(exc))
    except KPError as exc:
        rep = IdentityReport(identity, params, ERROR, message=f"{type(exc).__name__}: {exc}")
    rep.elapsed_ms = (time.perf_counter() - start) * 1000.0
    return rep


def skipped_for_n(identity: str, params: dict, need: int, n: int) -> IdentityReport:
    return IdentityReport(identity, params, SKIPPED_N, message=f"needs n >= {need}, have {n}")
