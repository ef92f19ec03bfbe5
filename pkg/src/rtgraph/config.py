"""Flat ``section.key = value`` run configuration.

Every violation is collected (with its line number) before anything is
raised, so one run reports all problems at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import ConfigError


def _int(s: str) -> int:
    v = float(s) if any(c in s for c in ".eE") else int(s)
    if int(v) != v:
        raise ValueError(f"{s!r} is not an integer")
    return int(v)


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"{s!r} is not a boolean")


def _list(conv):
    def parse(s: str):
        items = [p.strip() for p in s.replace(";", ",").split(",") if p.strip()]
        if not items:
            raise ValueError("empty list")
        return [conv(p) for p in items]
    return parse


def _choice(*options):
    def parse(s: str):
        s = s.strip()
        if s not in options:
            raise ValueError(f"{s!r} is not one of {', '.join(options)}")
        return s
    return parse


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any = None
    check: Callable[[Any], bool] | None = None
    rule: str = ""
    required: bool = False


def _pos(x):
    return x > 0


def _all(pred):
    return lambda xs: all(pred(x) for x in xs)


SCHEMA: dict[str, Key] = {
    "fitness.family": Key(_choice("exponential", "pareto"), required=True),
    "fitness.rate": Key(float, 1.0, _pos, "> 0"),
    "fitness.scale": Key(float, 1.0, _pos, "> 0"),
    "fitness.shape": Key(float, 2.0, _pos, "> 0"),
    "run.n": Key(_int, 30000, lambda v: v >= 2, ">= 2"),
    "run.n_grid": Key(_list(_int), None, _all(lambda v: v >= 2), "entries >= 2"),
    "run.R": Key(_int, 100, lambda v: v >= 1, ">= 1"),
    "run.d_set": Key(_list(_int), [0, 5, 10], _all(lambda v: v >= 0), "entries >= 0"),
    "run.seed": Key(_int, 0, lambda v: v >= 0, ">= 0"),
    "run.threads": Key(_int, 1, lambda v: v >= 1, ">= 1"),
    "run.out": Key(str, "."),
    "run.export_edges": Key(_bool, False),
    "run.export_census": Key(_bool, False),
    "mc.samples": Key(_int, 1_000_000, lambda v: v >= 2, ">= 2"),
    "tol.quad": Key(float, 1e-8, _pos, "> 0"),
    "tol.eps": Key(float, 1e-8, _pos, "> 0"),
    "limits.d_max": Key(_int, 20, lambda v: v >= 0, ">= 0"),
    "joint.r_max": Key(_int, 5, lambda v: 1 <= v <= 40, "in 1..40"),
    "joint.method": Key(_choice("quadrature", "monte-carlo"), "quadrature"),
    "charfn.t": Key(_list(float), [0.5, 1.0, 2.0], _all(lambda v: abs(v) <= 10), "|t| <= 10"),
    "histogram.bins": Key(_int, 50, lambda v: v >= 1, ">= 1"),
    "scaling.x_grid": Key(_list(float), [0.0, 1.0, 2.0], _all(lambda v: v >= 0), "entries >= 0"),
    "scaling.n_grid": Key(_list(_int), [10, 100, 1000, 10000, 100000, 1000000],
                          _all(lambda v: v >= 2), "entries >= 2"),
    "verify.level": Key(_choice("quick", "full"), "quick"),
}


@dataclass
class RunConfig:
    """Validated configuration: defaults merged with explicitly set keys."""

    values: dict
    explicit: set = field(default_factory=set)

    def __getitem__(self, key: str):
        return self.values[key]

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def resolved(self) -> dict:
        return dict(sorted(self.values.items()))


def parse_entries(entries) -> RunConfig:
    """Validate (location, key, raw value) triples; location is a line label."""
    violations: list[str] = []
    values: dict[str, Any] = {}
    seen: dict[str, str] = {}
    for where, key, raw in entries:
        entry = SCHEMA.get(key)
        if entry is None:
            violations.append(f"{where}: unknown key {key!r}")
            continue
        if key in seen and not where.startswith("cli"):
            violations.append(f"{where}: duplicate key {key!r} (first set at {seen[key]})")
            continue
        seen[key] = where
        try:
            val = entry.parse(raw.strip())
        except (ValueError, TypeError) as exc:
            violations.append(f"{where}: type error for {key!r}: {exc}")
            continue
        if entry.check is not None and not entry.check(val):
            violations.append(f"{where}: {key!r} out of range ({raw.strip()!r}; must be {entry.rule})")
            continue
        values[key] = val
    for key, entry in SCHEMA.items():
        # a present-but-invalid key was already reported above
        if entry.required and key not in seen:
            violations.append(f"line -: required key {key!r} is missing")
    if violations:
        raise ConfigError(violations)
    merged = {k: s.default for k, s in SCHEMA.items()}
    merged.update(values)
    return RunConfig(merged, set(values))


def split_lines(text: str, label: str = "line"):
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            yield f"{label} {lineno}", None, body
            continue
        key, raw = body.split("=", 1)
        yield f"{label} {lineno}", key.strip(), raw


def parse_config(text: str, overrides=()) -> RunConfig:
    """Parse config text plus (key, value) overrides; raise ConfigError listing every violation."""
    entries = []
    bad = []
    for where, key, raw in split_lines(text):
        if key is None:
            bad.append(f"{where}: expected 'section.key = value', got {raw!r}")
        else:
            entries.append((where, key, raw))
    entries.extend((f"cli {key}", key, str(val)) for key, val in overrides)
    try:
        cfg = parse_entries(entries)
    except ConfigError as exc:
        raise ConfigError(bad + exc.violations) from None
    if bad:
        raise ConfigError(bad)
    return cfg
