"""Atomic, reproducible on-disk artifacts.

Every file carries enough metadata (config echo, seed, library version) to
reproduce itself, no timestamps, floats at 17 significant digits, and is
written through a temporary file plus rename so a crash never leaves a
partial artifact behind.
"""

from __future__ import annotations

import json
import os
import tempfile
from collections.abc import Iterable, Mapping
from pathlib import Path

SCHEMA_VERSION = 1

__all__ = ["SCHEMA_VERSION", "format_float", "atomic_write_text", "write_json", "write_csv", "read_paths_csv"]


def _version() -> str:
    from . import __version__

    return __version__


def format_float(x: float) -> str:
    """17 significant digits: enough to round-trip any double exactly."""
    return format(float(x), ".17g")


def atomic_write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _jsonable(value):
    import numpy as np

    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def write_json(path: str | Path, payload: Mapping, config: Mapping | None = None) -> Path:
    """Serialize a report with sorted keys plus version and config echo."""
    body = dict(_jsonable(payload))
    body.setdefault("schema_version", SCHEMA_VERSION)
    body.setdefault("library_version", _version())
    if config is not None:
        body.setdefault("config", _jsonable(config))
    return atomic_write_text(path, json.dumps(body, sort_keys=True, indent=2) + "\n")


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, int):
        return str(value)
    try:
        import numpy as np

        if isinstance(value, np.floating):
            return format_float(float(value))
        if isinstance(value, np.integer):
            return str(int(value))
    except ImportError:  # pragma: no cover
        pass
    return str(value)


def write_csv(
    path: str | Path,
    header: list[str],
    rows: Iterable[Iterable],
    config: Mapping | None = None,
) -> Path:
    """Delimited output: '#'-prefixed metadata lines, then header and rows.

    Decimal point is always '.', independent of locale, and floats are
    serialized with 17 significant digits.
    """
    lines = [f"# schema_version: {SCHEMA_VERSION}", f"# library_version: {_version()}"]
    if config is not None:
        lines.append("# config: " + json.dumps(_jsonable(config), sort_keys=True))
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_format_cell(v) for v in row))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def read_paths_csv(path: str | Path):
    """Read a `simulate` CSV back into (times, {sample: (2, n+1) values}).

    The expected schema is the one `simulate` writes:
    sample,component,k,t,value with '#' metadata lines up front.
    """
    import numpy as np

    samples: dict[int, dict[int, list[tuple[int, float, float]]]] = {}
    with open(path) as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                if header != ["sample", "component", "k", "t", "value"]:
                    raise ValueError(f"unexpected CSV header {header!r} in {path}")
                continue
            s, c, k, t, v = line.split(",")
            samples.setdefault(int(s), {}).setdefault(int(c), []).append(
                (int(k), float(t), float(v))
            )
    if not samples:
        raise ValueError(f"no path rows found in {path}")
    times = None
    out: dict[int, np.ndarray] = {}
    for s, comps in sorted(samples.items()):
        rows = []
        for c in sorted(comps):
            entries = sorted(comps[c])
            t_axis = np.array([e[1] for e in entries])
            if times is None:
                times = t_axis
            elif not np.array_equal(times, t_axis):
                raise ValueError("inconsistent time grids across samples/components")
            rows.append([e[2] for e in entries])
        out[s] = np.asarray(rows)
    return times, out
