"""State, target and report files.

JSON floats are written with ``repr`` (shortest string that round-trips
exactly); delimited tables use ``%.17g``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .mesh import BackgroundGeometry, WeightedSurface
from .metric import ConformalState


class FileFormatError(ValueError):
    pass


def _floats(values, name: str, n: int | None = None) -> np.ndarray:
    try:
        arr = np.array(values, dtype=np.float64)
    except (TypeError, ValueError):
        raise FileFormatError(f"{name} must be a list of numbers") from None
    if arr.ndim != 1 or (n is not None and arr.size != n):
        raise FileFormatError(f"{name} needs {n} entries, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise FileFormatError(f"{name} contains non-finite values")
    return arr


def state_to_dict(state: ConformalState) -> dict:
    return {
        "geometry": state.geometry.value,
        "alpha": state.alpha,
        "f": state.f.tolist(),
        "u": state.u.tolist(),
    }


def state_from_dict(surface: WeightedSurface, data: dict, geometry=None, alpha: float | None = None) -> ConformalState:
    """``u`` is authoritative when present; otherwise ``f`` is converted."""
    if not isinstance(data, dict):
        raise FileFormatError("state file must hold a JSON object")
    geo = BackgroundGeometry.parse(geometry if geometry is not None else data.get("geometry", "euclidean"))
    a = float(alpha if alpha is not None else data.get("alpha", 0.0))
    n = surface.n_vertices
    if "u" in data:
        return ConformalState.from_u(surface, _floats(data["u"], "u", n), geo, a)
    if "f" in data:
        return ConformalState.from_f(surface, _floats(data["f"], "f", n), geo, a)
    raise FileFormatError("state file needs a 'u' or 'f' array")


def write_json(path: str | Path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, allow_nan=True) + "\n")


def read_json(path: str | Path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{path}: invalid JSON ({exc})") from None


def save_state(state: ConformalState, path: str | Path) -> None:
    write_json(path, state_to_dict(state))


def load_state(surface: WeightedSurface, path: str | Path, geometry=None, alpha: float | None = None) -> ConformalState:
    return state_from_dict(surface, read_json(path), geometry, alpha)


def load_target(path: str | Path, n: int) -> np.ndarray:
    """A JSON list, or an object with a ``target`` list."""
    data = read_json(path)
    if isinstance(data, dict):
        if "target" not in data:
            raise FileFormatError(f"{path}: expected a 'target' array")
        data = data["target"]
    return _floats(data, "target", n)


def write_vertex_table(path: str | Path, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    n = len(next(iter(columns.values())))
    with open(path, "w") as fh:
        fh.write(",".join(["vertex"] + names) + "\n")
        for i in range(n):
            fh.write(",".join([str(i)] + [f"{float(columns[c][i]):.17g}" for c in names]) + "\n")
