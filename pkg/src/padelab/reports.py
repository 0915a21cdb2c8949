"""Artifact serialization: delimited tables, JSON documents and run manifests.

Rationals are written as exact "p/q" strings.  Binary floats are written in
scientific notation, rounded to nearest at a digit count derived from the
working precision, so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path

import gmpy2
from gmpy2 import mpc, mpfr

from .hp import digits_for, fmt_complex, fmt_real

SCHEMA_VERSION = "1.0"


class Formatter:
    """Turns library values into strings or JSON-ready data at a fixed digit count."""

    def __init__(self, precision: int):
        self.precision = precision
        self.digits = digits_for(precision)

    def real(self, x) -> str:
        if x is None:
            return ""
        if isinstance(x, float) and math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return fmt_real(x if isinstance(x, type(mpfr(0))) else mpfr(x), self.digits)

    def value(self, v) -> str:
        """One CSV cell."""
        if v is None:
            return ""
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, int):
            return str(v)
        if isinstance(v, Fraction):
            return str(v)
        if isinstance(v, type(mpc(0))):
            return fmt_complex(v, self.digits)
        if isinstance(v, (float, type(mpfr(0)))):
            return self.real(v)
        return str(v)

    def data(self, v):
        """Recursively convert to JSON-ready data."""
        if v is None or isinstance(v, (bool, str)):
            return v
        if isinstance(v, int):
            return v
        if isinstance(v, Fraction):
            return str(v)
        if isinstance(v, (float, type(mpfr(0)))):
            return self.real(v)
        if isinstance(v, type(mpc(0))):
            return fmt_complex(v, self.digits)
        if isinstance(v, dict):
            return {str(k): self.data(x) for k, x in v.items()}
        if isinstance(v, (list, tuple, set)):
            return [self.data(x) for x in v]
        return str(v)


def write_csv(path, header, rows, meta: dict | None = None, fmt: Formatter | None = None) -> Path:
    """CSV with ``# key: value`` metadata lines, a header row, then the data."""
    path = Path(path)
    fmt = fmt or Formatter(256)
    with path.open("w", encoding="utf-8", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt.value(v) for v in row])
    return path


def write_json(path, doc: dict, fmt: Formatter | None = None) -> Path:
    path = Path(path)
    fmt = fmt or Formatter(256)
    body = {"schema_version": SCHEMA_VERSION, **fmt.data(doc)}
    path.write_text(json.dumps(body, indent=2) + "\n", encoding="utf-8")
    return path


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    """Inverse of :func:`write_csv` (metadata, header, string rows)."""
    meta, lines = {}, []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition(":")
                meta[k.strip()] = v.strip()
            else:
                lines.append(line)
    rows = list(csv.reader(lines))
    return meta, rows[0], rows[1:]


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    """``<command>_manifest.json``: config echo, version, phases and artifact digests.

    Written when the run starts and rewritten as phases complete, so an
    interrupted run still leaves a record of how far it got.
    """

    def __init__(self, out_dir, command: str, config_echo: dict, version: str, extra: dict | None = None):
        self.out_dir = Path(out_dir)
        self.path = self.out_dir / f"{command}_manifest.json"
        self.doc = {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "tool_version": version,
            "gmpy2_version": gmpy2.version(),
            "config": config_echo,
            **(extra or {}),
            "status": "running",
            "phases": [],
            "artifacts": {},
        }
        self._write()

    def _write(self) -> None:
        self.path.write_text(json.dumps(self.doc, indent=2) + "\n", encoding="utf-8")

    @contextmanager
    def phase(self, name: str):
        rec = {"name": name, "status": "running", "wall_time_s": None}
        self.doc["phases"].append(rec)
        self._write()
        t0 = time.perf_counter()
        try:
            yield rec
        except BaseException as exc:
            rec["status"] = f"failed: {type(exc).__name__}"
            rec["wall_time_s"] = round(time.perf_counter() - t0, 6)
            self._write()
            raise
        rec["status"] = "ok"
        rec["wall_time_s"] = round(time.perf_counter() - t0, 6)
        self._write()

    def add(self, path) -> Path:
        path = Path(path)
        self.doc["artifacts"][path.name] = {"sha256": sha256_of(path), "bytes": path.stat().st_size}
        self._write()
        return path

    def finalize(self, status: str = "ok", exit_code: int = 0, message: str | None = None) -> None:
        self.doc["status"] = status
        self.doc["exit_code"] = exit_code
        if message:
            self.doc["message"] = message
        self._write()
