"""Orienteering benchmark instance files.

The reader accepts the plain-text format used by the classic orienteering
test sets (Tsiligirides and friends).  Grammar, one record per line:

    header:  T_max  n_paths          (optional, exactly two numbers)
    point:   x  y  score             (score optional, defaults to 0)

Blank lines and lines starting with ``#`` are skipped; commas and
semicolons count as whitespace.  The first point is the start location and
the second is the end location, as in the standard distribution.  A
three-line sample::

    4.6  7.1   0
    5.7  11.4  0
    5.3  9.5   40

Malformed input raises :class:`InstanceFormatError` naming the 1-based
line number.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Instance",
    "InstanceFormatError",
    "parse_instance",
    "load_instance",
    "bundled_instance_path",
    "resolve_instance",
]

_DATA_DIR = Path(__file__).resolve().parent / "data"

# environment override so runs can point at an official benchmark file
INSTANCE_ENV_VAR = "IMPDR_KOP_INSTANCE"


class InstanceFormatError(ValueError):
    """Raised for unreadable instance files; message carries the line number."""


@dataclass(frozen=True)
class Instance:
    """A scored point set with designated start and end locations."""

    points: np.ndarray  # (n, 2) float
    scores: np.ndarray  # (n,) float, start/end conventionally 0
    budget: float | None = None  # T_max from the header, if present
    n_paths: int | None = None
    name: str = "instance"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        sc = np.asarray(self.scores, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InstanceFormatError("points must be an (n, 2) array")
        if sc.shape != (pts.shape[0],):
            raise InstanceFormatError("scores length must match points")
        if pts.shape[0] < 2:
            raise InstanceFormatError("need at least start and end points")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(sc))):
            raise InstanceFormatError("non-finite coordinate or score")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "scores", sc)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[1]

    @property
    def total_score(self) -> float:
        return float(self.scores.sum())


def _tokens(line: str) -> list[str]:
    return line.replace(",", " ").replace(";", " ").split()


def parse_instance(text: str, name: str = "instance") -> Instance:
    """Parse instance text per the module grammar."""
    budget = None
    n_paths = None
    pts: list[tuple[float, float]] = []
    scores: list[float] = []
    saw_header_slot = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = _tokens(line)
        try:
            vals = [float(t) for t in tok]
        except ValueError:
            raise InstanceFormatError(
                f"{name}: line {lineno}: non-numeric token in {tok!r}") from None
        if not saw_header_slot:
            saw_header_slot = True
            if len(vals) == 2:
                # two numbers in the first record = budget metadata, not a point
                budget = vals[0]
                n_paths = int(vals[1])
                continue
        if len(vals) == 2:
            vals.append(0.0)
        if len(vals) != 3:
            raise InstanceFormatError(
                f"{name}: line {lineno}: expected 'x y [score]', got "
                f"{len(vals)} numbers")
        pts.append((vals[0], vals[1]))
        scores.append(vals[2])
    if len(pts) < 2:
        raise InstanceFormatError(
            f"{name}: fewer than two points; need start and end")
    return Instance(points=np.array(pts), scores=np.array(scores),
                    budget=budget, n_paths=n_paths, name=name)


def load_instance(path: str | Path) -> Instance:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InstanceFormatError(f"cannot read instance file {path}: {exc}") \
            from exc
    return parse_instance(text, name=path.name)


def bundled_instance_path(name: str = "synthetic21") -> Path:
    """Path of an instance file shipped with the package."""
    p = _DATA_DIR / f"{name}.txt"
    if not p.exists():
        have = sorted(q.stem for q in _DATA_DIR.glob("*.txt"))
        raise InstanceFormatError(
            f"no bundled instance {name!r}; available: {have}")
    return p


def resolve_instance(path: str | Path | None = None) -> Instance:
    """Load an instance by explicit path, environment override, or bundle.

    Precedence: ``path`` argument, then the path in ``IMPDR_KOP_INSTANCE``,
    then the bundled synthetic benchmark.
    """
    if path is not None:
        return load_instance(path)
    env = os.environ.get(INSTANCE_ENV_VAR)
    if env:
        return load_instance(env)
    return load_instance(bundled_instance_path())
