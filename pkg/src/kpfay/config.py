"""Run configuration: a flat ``key = value`` file with dotted section keys.

Grammar, one statement per line::

    # comment (also after a value)
    key = value
    section.key = value

Values are integers, rationals ``p/q``, booleans ``true``/``false``, comma
separated lists, or bare strings (optionally in double quotes).  Every key must
be known; unknown keys and malformed lines raise :class:`ConfigInvalid` with
the line number.
"""

from __future__ import annotations

import os
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigInvalid
from .solutions import SolutionSpec

SUITES = (
    "signs",
    "bilinear",
    "fay",
    "limits",
    "prop1",
    "prop2",
    "prop3",
    "sato",
    "lax",
    "algebra",
    "negative_controls",
)
WORKERS_ENV = "KPFAY_WORKERS"

_ALIASES = {
    "N": "n_components",
    "J": "max_time_index",
    "d": "weighted_degree",
    "K": "aux_order",
    "M": "psdo_band",
    "S_box": "charge_radius",
}
_LINE = re.compile(r"^([A-Za-z_][\w.]*)\s*=\s*(.*)$")


@dataclass
class RunConfig:
    n_components: int = 1
    max_time_index: int = 0  # 0: same as weighted_degree
    weighted_degree: int = 4
    aux_order: int = 0  # 0: same as weighted_degree
    psdo_band: int = 0  # 0: largest flow index + 2
    charge_radius: int = 1
    solution: dict = field(default_factory=lambda: {"kind": "vacuum"})
    input: str = ""
    checks: tuple = SUITES
    seed: int = 1
    workers: int = 1
    output: str = ""
    max_flow: int = 3  # j range for prop2, sato and the cross construction
    lax_max_flow: int = 2
    bilinear_derivatives: bool = True  # without them the scalar case is vacuous
    discrepancy_limit: int = 20

    @property
    def J(self) -> int:
        return self.max_time_index or self.weighted_degree

    @property
    def d(self) -> int:
        return self.weighted_degree

    @property
    def K(self) -> int:
        return self.aux_order or self.weighted_degree

    @property
    def M(self) -> int:
        return self.psdo_band or max(self.max_flow, self.lax_max_flow) + 2

    @property
    def n(self) -> int:
        return self.n_components

    def solution_spec(self) -> SolutionSpec:
        sol = dict(self.solution)
        kind = sol.pop("kind", "vacuum")
        sol.setdefault("seed", self.seed)
        return SolutionSpec(
            kind, n=self.n, d=self.d, J=self.J, radius=self.charge_radius, **sol
        )

    def effective_workers(self) -> int:
        env = os.environ.get(WORKERS_ENV)
        if env:
            try:
                w = int(env)
            except ValueError:
                raise ConfigInvalid(f"{WORKERS_ENV}={env!r} is not an integer") from None
            if w < 1:
                raise ConfigInvalid(f"{WORKERS_ENV} must be >= 1")
            return w
        return self.workers

    def as_dict(self) -> dict:
        out = asdict(self)
        out["checks"] = list(self.checks)
        out.update(J=self.J, K=self.K, M=self.M)
        out.pop("workers")  # does not change the results
        return out

    def validate(self) -> "RunConfig":
        if self.n < 1:
            raise ConfigInvalid("n_components must be >= 1")
        if self.d < 0:
            raise ConfigInvalid("weighted_degree must be >= 0")
        if self.J < 1:
            raise ConfigInvalid("max_time_index must be >= 1")
        if self.K < self.d:
            raise ConfigInvalid(f"aux_order {self.K} is below weighted_degree {self.d}")
        if self.charge_radius < 0:
            raise ConfigInvalid("charge_radius must be >= 0")
        if self.workers < 1:
            raise ConfigInvalid("workers must be >= 1")
        if self.max_flow < 1 or self.lax_max_flow < 1:
            raise ConfigInvalid("flow indices start at 1")
        if self.M < 1:
            raise ConfigInvalid("psdo_band must be >= 1")
        bad = [c for c in self.checks if c not in SUITES]
        if bad:
            raise ConfigInvalid(f"unknown suites {bad}; known: {', '.join(SUITES)}")
        if not self.input:
            kind = self.solution.get("kind", "vacuum")
            if kind not in ("vacuum", "soliton_n1", "jet"):
                raise ConfigInvalid(f"unknown solution.kind {kind!r}")
        # psdo_band below the largest flow + 2 is accepted on purpose: the
        # operator suites then record BandOverflow instead of passing.
        return self


_SOLUTION_KEYS = {"kind", "p", "q", "a", "seed", "policy", "margin", "max_unknowns"}
_INT_KEYS = {
    "n_components",
    "max_time_index",
    "weighted_degree",
    "aux_order",
    "psdo_band",
    "charge_radius",
    "seed",
    "workers",
    "max_flow",
    "lax_max_flow",
    "discrepancy_limit",
}


def _scalar(text: str, lineno: int):
    if len(text) >= 2 and text[0] == text[-1] == '"':
        return text[1:-1]
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if re.fullmatch(r"[+-]?\d+", text):
        return int(text)
    if re.fullmatch(r"[+-]?\d+/\d+", text):
        num, den = text.split("/")
        if int(den) == 0:
            raise ConfigInvalid(f"line {lineno}: zero denominator")
        return text
    return text


def _strip_comment(line: str) -> str:
    quoted = False
    for i, ch in enumerate(line):
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return line[:i]
    return line


def parse_config(text: str, base: Path | None = None) -> RunConfig:
    cfg = RunConfig()
    seen = set()
    solution = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigInvalid(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = m.group(1), m.group(2).strip()
        if not value:
            raise ConfigInvalid(f"line {lineno}: empty value for {key}")
        if key in seen:
            raise ConfigInvalid(f"line {lineno}: duplicate key {key}")
        seen.add(key)
        head, _, rest = key.partition(".")
        if head == "solution" and rest:
            if rest not in _SOLUTION_KEYS:
                raise ConfigInvalid(f"line {lineno}: unknown key {key}")
            solution[rest] = _scalar(value, lineno)
            continue
        if key == "bilinear.derivatives":
            key = "bilinear_derivatives"
        key = _ALIASES.get(key, key)
        if key == "checks":
            names = [v.strip() for v in value.split(",") if v.strip()]
            cfg.checks = tuple(names)
            continue
        if key not in RunConfig.__dataclass_fields__ or key == "solution":
            raise ConfigInvalid(f"line {lineno}: unknown key {m.group(1)}")
        v = _scalar(value, lineno)
        if key in _INT_KEYS and not (isinstance(v, int) and not isinstance(v, bool)):
            raise ConfigInvalid(f"line {lineno}: {key} needs an integer, got {value!r}")
        if key == "bilinear_derivatives" and not isinstance(v, bool):
            raise ConfigInvalid(f"line {lineno}: {key} needs true or false")
        if key in ("input", "output"):
            v = str(v)
            if base is not None and v and not Path(v).is_absolute():
                v = str(base / v)
        setattr(cfg, key, v)
    if solution:
        cfg.solution = solution
    for k in ("seed", "margin", "max_unknowns"):
        if k in cfg.solution and not isinstance(cfg.solution[k], int):
            raise ConfigInvalid(f"solution.{k} needs an integer")
    return cfg.validate()


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read {path}: {exc}") from None
    return parse_config(text, base=path.parent)
