"""Run configuration: a TOML file with one section per stage.

Every key is checked against the schema below before any computation
starts; unknown keys and bad values raise ConfigError naming the dotted
field and, when it can be located, the line.
"""

from __future__ import annotations

import copy
import inspect
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, ParameterError
from .hp import MIN_PRECISION
from .series import CATALOG
from .sequences import build_schedule

# -- value coercions; each raises ValueError with a short reason --------------


def _int(lo=None):
    def conv(v):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError("expected an integer")
        if lo is not None and v < lo:
            raise ValueError(f"must be >= {lo}")
        return v

    return conv


def _real(lo=None, hi=None, open_lo=False):
    def conv(v):
        if isinstance(v, bool) or not isinstance(v, (int, float, str)):
            raise ValueError("expected a number")
        try:
            x = Fraction(v) if not isinstance(v, float) else Fraction(repr(v))
        except (ValueError, ZeroDivisionError):
            raise ValueError("expected a number or 'p/q' string") from None
        if lo is not None and (x <= lo if open_lo else x < lo):
            raise ValueError(f"must be {'>' if open_lo else '>='} {lo}")
        if hi is not None and x >= hi:
            raise ValueError(f"must be < {hi}")
        return x

    return conv


def _complex(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError("expected [re, im]")
        return (_real()(v[0]), _real()(v[1]))
    return (_real()(v), Fraction(0))


def _bool(v):
    if not isinstance(v, bool):
        raise ValueError("expected true or false")
    return v


def _str(choices=None):
    def conv(v):
        if not isinstance(v, str):
            raise ValueError("expected a string")
        if choices is not None and v not in choices:
            raise ValueError(f"expected one of {', '.join(choices)}")
        return v

    return conv


def _list(item):
    def conv(v):
        if not isinstance(v, list):
            raise ValueError("expected a list")
        return [item(x) for x in v]

    return conv


def _windows_choice(v):
    if isinstance(v, str):
        return _str(("coeff-gap", "decay", "stationary"))(v)
    pairs = _list(_list(_int(0)))(v)
    for p in pairs:
        if len(p) != 2 or not p[0] < p[1]:
            raise ValueError("explicit windows are [n_lo, n_hi] with n_lo < n_hi")
    return [tuple(p) for p in pairs]


def _tau(v):
    if v == "auto":
        return None
    return _real(0, open_lo=True)(v)


_REQUIRED = object()

SCHEMA = {
    "function": {"kind": (_str(tuple(CATALOG)), _REQUIRED), "params": (dict, {}),
                 "R": (_real(0, open_lo=True), None), "estimate_N": (_int(16), 64)},
    "schedule": {"rule": (_str(("constant", "sqrt", "n-log2", "explicit")), "constant"),
                 "m": (_int(0), 0), "c": (_real(0, open_lo=True), Fraction(1)),
                 "values": (_list(_int(0)), None), "growth": (_str(("constant", "o(n/log n)", "o(n)")), None),
                 "horizon": (_int(1), 40)},
    "table": {"n_max": (_int(1), 6), "m_max": (_int(1), 6)},
    "numerics": {"precision": (_int(MIN_PRECISION), 256), "threads": (_int(1), 1),
                 "contact_cap": (_int(1), None)},
    "ray": {"probes": (_list(_complex), [(Fraction(3, 10), Fraction(0)), (Fraction(1, 10), Fraction(1, 5)),
                                         (Fraction(-1, 4), Fraction(1, 10))]),
            "tail_n": (_int(1), None), "tail_terms": (_int(1), 15), "tail_z": (_complex, None),
            "tail_eps": (_real(0, open_lo=True), Fraction(1, 10))},
    "grids": {"name": (_str(), None), "shape": (_str(("disk", "annulus", "annular-sector", "rectangle")), "disk"),
              "center": (_complex, (Fraction(0), Fraction(0))), "radius": (_real(0, open_lo=True), None),
              "r_in": (_real(0), None), "r_out": (_real(0, open_lo=True), None),
              "theta0": (_real(), None), "theta1": (_real(), None),
              "x0": (_real(), None), "x1": (_real(), None), "y0": (_real(), None), "y1": (_real(), None),
              "n_r": (_int(1), 64), "n_theta": (_int(1), 64), "nx": (_int(2), 64), "ny": (_int(2), 64),
              "jitter": (_real(0, 1), Fraction(0))},
    "detectors": {"margin": (_real(0, 1, open_lo=True), Fraction(3, 10)),
                  "min_ratio_gap": (_real(0, 1), Fraction(1, 10)), "merge_gap": (_int(1), 3),
                  "zero_tol": (_real(0, 1), Fraction(1, 10))},
    "windows": {"C1": (_real(1), Fraction(1)), "C4": (_real(1), Fraction(1)), "tau": (_tau, None),
                "m": (_int(0), None), "anchors": (_list(_int(1)), None),
                "synthetic_values": (_list(_real(0)), None), "synthetic_baseline": (_real(0, open_lo=True), None)},
    "overconv": {"eps": (_real(0, open_lo=True), Fraction(1, 10)), "z0": (_complex, None),
                 "radii": (_list(_real(0, open_lo=True)), [Fraction(1, 20), Fraction(1, 10), Fraction(1, 5)]),
                 "threshold": (_real(0, open_lo=True), Fraction(1, 10**6)),
                 "windows": (_windows_choice, "decay"), "tolerance": (_real(0, open_lo=True), Fraction(1, 20)),
                 "n_r": (_int(1), 32), "n_theta": (_int(1), 32), "true_poles": (_list(_complex), None),
                 "pole_rate": (_real(0, 1, open_lo=True), None)},
    "output": {"dir": (_str(), "out"), "seed": (_int(0), 0), "figures": (_bool, True)},
}


@dataclass
class RunConfig:
    function: dict
    schedule: dict
    table: dict
    numerics: dict
    ray: dict
    grids: list
    detectors: dict
    windows: dict
    overconv: dict
    output: dict
    source: str = "<dict>"
    raw: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """Validated configuration as JSON-friendly data (rationals as strings)."""
        return _jsonable({k: getattr(self, k) for k in SCHEMA})

    def make_function(self):
        from .series import catalog_make

        return catalog_make(self.function["kind"], **self.function["params"])

    def make_schedule(self, horizon: int | None = None):
        s = self.schedule
        h = horizon if horizon is not None else s["horizon"]
        if s["rule"] == "explicit":
            return build_schedule("explicit", h, values=s["values"], growth=s["growth"] or "o(n)")
        return build_schedule(s["rule"], h, m=s["m"], c=s["c"])


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _line_of(text: str | None, section: str, key: str | None) -> int | None:
    if not text:
        return None
    lines = text.splitlines()
    start = 0
    head = re.compile(r"^\s*\[\[?\s*" + re.escape(section) + r"(\.[\w.]+)?\s*\]\]?\s*$")
    for i, ln in enumerate(lines):
        if head.match(ln):
            start = i
            if key is None:
                return i + 1
            break
    if key is None:
        return None
    pat = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
    for i in range(start, len(lines)):
        if pat.match(lines[i]):
            return i + 1
    return None


def _section(name: str, data, text, index: int | None = None) -> dict:
    label = name if index is None else f"{name}[{index}]"
    if not isinstance(data, dict):
        raise ConfigError("expected a table", field=label, line=_line_of(text, name, None))
    schema = SCHEMA[name]
    out = {}
    for key in data:
        if key not in schema:
            raise ConfigError("unknown key", field=f"{label}.{key}", line=_line_of(text, name, key))
    for key, (conv, default) in schema.items():
        if key in data:
            try:
                out[key] = conv(copy.deepcopy(data[key])) if conv is not dict else _params(data[key])
            except (ValueError, TypeError) as exc:
                raise ConfigError(str(exc), field=f"{label}.{key}", line=_line_of(text, name, key)) from None
        elif default is _REQUIRED:
            raise ConfigError("missing required key", field=f"{label}.{key}", line=_line_of(text, name, None))
        else:
            out[key] = copy.deepcopy(default)
    return out


def _params(v):
    if not isinstance(v, dict):
        raise ValueError("expected a table of catalog parameters")
    return dict(v)


def _check_function(fn: dict, text) -> None:
    ctor = CATALOG[fn["kind"]]
    allowed = set(inspect.signature(ctor).parameters)
    for key in fn["params"]:
        if key not in allowed:
            raise ConfigError(f"unknown parameter for {fn['kind']} (allowed: {', '.join(sorted(allowed))})",
                              field=f"function.params.{key}", line=_line_of(text, "function.params", key)
                              or _line_of(text, "function", key))
    try:
        ctor(**fn["params"])
    except ParameterError as exc:
        raise ConfigError(str(exc), field="function.params", line=_line_of(text, "function", "params")
                          or _line_of(text, "function.params", None)) from None


def _check_grid(g: dict, i: int, text) -> None:
    need = {"disk": ("radius",), "annulus": ("r_in", "r_out"), "annular-sector": ("r_in", "r_out", "theta0", "theta1"),
            "rectangle": ("x0", "x1", "y0", "y1")}[g["shape"]]
    for key in need:
        if g[key] is None:
            raise ConfigError(f"required for shape {g['shape']}", field=f"grids[{i}].{key}",
                              line=_line_of(text, "grids", None))


def validate(data: dict, text: str | None = None, source: str = "<dict>") -> RunConfig:
    for key in data:
        if key not in SCHEMA:
            raise ConfigError("unknown section", field=key, line=_line_of(text, key, None))
    if "function" not in data:
        raise ConfigError("missing required section", field="function")
    sections = {}
    for name in SCHEMA:
        if name == "grids":
            continue
        sections[name] = _section(name, data.get(name, {}), text)
    grids_raw = data.get("grids", [])
    if not isinstance(grids_raw, list):
        raise ConfigError("expected an array of tables ([[grids]])", field="grids")
    grids = []
    for i, g in enumerate(grids_raw):
        gg = _section("grids", g, text, i)
        _check_grid(gg, i, text)
        gg["name"] = gg["name"] or f"grid{i}"
        grids.append(gg)
    _check_function(sections["function"], text)
    s = sections["schedule"]
    if s["rule"] == "explicit" and s["values"] is None:
        raise ConfigError("explicit rule needs 'values'", field="schedule.values", line=_line_of(text, "schedule", "rule"))
    cfg = RunConfig(grids=grids, source=source, raw=data, **sections)
    try:
        cfg.make_schedule()
    except ParameterError as exc:
        key = "values" if s["rule"] == "explicit" else "rule"
        raise ConfigError(str(exc), field=f"schedule.{key}", line=_line_of(text, "schedule", key)) from None
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", field=str(path)) from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"TOML syntax error: {exc}", line=int(m.group(1)) if m else None) from None
    return validate(data, text, str(path))
