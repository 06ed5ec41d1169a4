"""Job configuration: parsing and validation of JSON or TOML job files.

Complex numbers are written as ``{"re": x, "im": y}``; plain numbers are
accepted for real values.  A job names one curve, one data set, the numeric
knobs, the requested outputs and (for ``extend``) the evaluation points.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analytic import FourierSeries, PolySeries, RationalFunction
from .boundary import BoundaryData
from .curve import CurveModel
from .errors import ConfigError, HarmextError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

STAGES = ("compat", "hilbert", "analyze", "extend")

DEFAULT_KNOBS = {
    "K": 32,
    "M": 256,
    "lattice": 128,
    "grid_size": 256,
    "series_order": 24,
    "fit_order": 64,
    "collar_tol": 1e-9,
    "r2_method": "auto",
}


@dataclass
class JobConfig:
    raw: dict
    curve: CurveModel
    data: BoundaryData
    knobs: dict
    outputs: list
    points: np.ndarray | None = None
    out_dir: Path | None = None
    base_dir: Path = field(default_factory=Path)

    def with_outputs(self, outputs) -> "JobConfig":
        outputs = [s for s in STAGES if s in set(outputs)]
        if not outputs:
            raise ConfigError("no outputs requested")
        if "extend" in outputs and self.points is None:
            raise ConfigError("extend requires a point grid ('points' in the config or --points)")
        return JobConfig(self.raw, self.curve, self.data, self.knobs, outputs, self.points,
                         self.out_dir, self.base_dir)


# -- scalar parsing ---------------------------------------------------------------------


def parse_complex(v, where: str) -> complex:
    if isinstance(v, bool):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return complex(float(v))
    if isinstance(v, dict) and set(v) <= {"re", "im"} and v:
        try:
            return complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{where}: {e}") from None
    raise ConfigError(f"{where}: expected a number or {{re, im}}, got {v!r}")


def _real(v, where: str) -> float:
    z = parse_complex(v, where)
    if z.imag != 0:
        raise ConfigError(f"{where}: expected a real number")
    return z.real


def _real_list(v, where: str) -> list[float]:
    if not isinstance(v, list):
        raise ConfigError(f"{where}: expected a list")
    return [_real(x, f"{where}[{i}]") for i, x in enumerate(v)]


def _complex_list(v, where: str) -> list[complex]:
    if not isinstance(v, list):
        raise ConfigError(f"{where}: expected a list")
    return [parse_complex(x, f"{where}[{i}]") for i, x in enumerate(v)]


def _fourier(section, where: str) -> FourierSeries:
    """``{"coefficients": {"k": c}}`` or ``{"a0", "cos", "sin"}`` (real)."""
    if not isinstance(section, dict):
        raise ConfigError(f"{where}: expected an object")
    if "coefficients" in section:
        coeffs = section["coefficients"]
        if not isinstance(coeffs, dict):
            raise ConfigError(f"{where}.coefficients: expected an object keyed by frequency")
        out = {}
        for k, c in coeffs.items():
            try:
                ki = int(k)
            except ValueError:
                raise ConfigError(f"{where}.coefficients: bad frequency {k!r}") from None
            out[ki] = parse_complex(c, f"{where}.coefficients[{k}]")
        return FourierSeries.from_dict(out)
    unknown = set(section) - {"a0", "cos", "sin"}
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    return FourierSeries.from_cos_sin(
        _real(section.get("a0", 0.0), f"{where}.a0"),
        _real_list(section.get("cos", []), f"{where}.cos"),
        _real_list(section.get("sin", []), f"{where}.sin"),
    )


def _rational(section, where: str) -> RationalFunction:
    """A list of ascending coefficients, or ``{"num": [...], "den": [...]}``."""
    if isinstance(section, list):
        return RationalFunction(PolySeries(_complex_list(section, where)), PolySeries([1.0]))
    if isinstance(section, dict) and "num" in section:
        den = section.get("den", [1.0])
        return RationalFunction(PolySeries(_complex_list(section["num"], f"{where}.num")),
                                PolySeries(_complex_list(den, f"{where}.den")))
    raise ConfigError(f"{where}: expected a coefficient list or {{num, den}}")


# -- sections ---------------------------------------------------------------------------


def parse_curve(section) -> CurveModel:
    if not isinstance(section, dict) or "kind" not in section:
        raise ConfigError("curve: expected an object with a 'kind'")
    kind = section["kind"]
    try:
        if kind == "circle":
            radius = _real(section.get("radius", 1.0), "curve.radius")
            if radius <= 0:
                raise ConfigError("curve.radius must be positive")
            return CurveModel.circle(radius, parse_complex(section.get("center", 0.0), "curve.center"))
        if kind == "closed_fourier":
            g = _fourier(section, "curve")
            return CurveModel.closed_fourier(g, auto_orient=bool(section.get("auto_orient", False)))
        if kind == "open_polynomial":
            interval = _real_list(section.get("interval"), "curve.interval")
            if len(interval) != 2 or not interval[0] < interval[1]:
                raise ConfigError("curve.interval must be [lo, hi] with lo < hi")
            side = section.get("exterior", "left")
            if side not in ("left", "right"):
                raise ConfigError("curve.exterior must be 'left' or 'right'")
            return CurveModel.open_polynomial(
                _real_list(section.get("x"), "curve.x"), _real_list(section.get("y"), "curve.y"),
                tuple(interval), exterior=side,
            )
    except ConfigError:
        raise
    except (HarmextError, ValueError, TypeError) as e:
        raise ConfigError(f"curve: {e}") from e
    raise ConfigError(f"curve.kind: unknown kind {kind!r}")


def read_grid_csv(path: Path):
    """Equispaced samples ``t, f, h`` on ``[0, 2 pi)``."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["t", "f", "h"]:
                raise ConfigError(f"{path}: header must be t,f,h")
            rows = [[float(r[c]) for c in reader.fieldnames] for r in reader]
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e
    arr = np.array(rows, dtype=float).reshape(-1, 3)
    n = arr.shape[0]
    if n < 4 or n % 2:
        raise ConfigError(f"{path}: need an even number (at least 4) of samples")
    expected = 2 * math.pi * np.arange(n) / n
    if np.abs(arr[:, 0] - expected).max() > 1e-9:
        raise ConfigError(f"{path}: t must be the equispaced grid 2*pi*j/n, j = 0..n-1")
    return arr[:, 1], arr[:, 2]


def read_points_csv(path: Path) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["x", "y"]:
                raise ConfigError(f"{path}: header must be x,y")
            pts = [complex(float(r["x"]), float(r["y"])) for r in reader]
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    except (ValueError, TypeError) as e:
        raise ConfigError(f"{path}: {e}") from e
    if not pts:
        raise ConfigError(f"{path}: no points")
    return np.array(pts)


def parse_data(section, curve: CurveModel, base_dir: Path) -> BoundaryData:
    if not isinstance(section, dict) or "kind" not in section:
        raise ConfigError("data: expected an object with a 'kind'")
    kind = section["kind"]
    entire = section.get("entire")
    if entire not in (True, False, None):
        raise ConfigError("data.entire must be true, false or null")
    try:
        if kind == "fourier":
            if not curve.closed:
                raise ConfigError("fourier data needs a closed curve")
            f, h = _fourier(section.get("f", {}), "data.f"), _fourier(section.get("h", {}), "data.h")
            return BoundaryData.fourier(f, h, entire=True if entire is None else entire)
        if kind == "rational":
            if curve.closed:
                raise ConfigError("rational data needs an open curve")
            return BoundaryData.rational(_rational(section.get("f", [0.0]), "data.f"),
                                         _rational(section.get("h", [0.0]), "data.h"), entire)
        if kind == "grid":
            if not curve.closed:
                raise ConfigError("grid data needs a closed curve")
            if "path" not in section:
                raise ConfigError("data.path is required for grid data")
            f, h = read_grid_csv(base_dir / section["path"])
            return BoundaryData.from_grid(f, h, entire)
    except ConfigError:
        raise
    except (HarmextError, ValueError, TypeError) as e:
        raise ConfigError(f"data: {e}") from e
    raise ConfigError(f"data.kind: unknown kind {kind!r}")


def parse_points(section, base_dir: Path) -> np.ndarray:
    """``{"path": "points.csv"}`` or ``{"ring": {"radius", "count", "center"}}``."""
    if not isinstance(section, dict):
        raise ConfigError("points: expected an object")
    if "path" in section:
        return read_points_csv(base_dir / section["path"])
    if "ring" in section:
        ring = section["ring"]
        radius = _real(ring.get("radius"), "points.ring.radius")
        count = ring.get("count", 64)
        if not isinstance(count, int) or count < 1 or radius <= 0:
            raise ConfigError("points.ring needs a positive radius and count")
        centre = parse_complex(ring.get("center", 0.0), "points.ring.center")
        return centre + radius * np.exp(2j * np.pi * np.arange(count) / count)
    raise ConfigError("points: give 'path' or 'ring'")


def parse_knobs(section) -> dict:
    section = {} if section is None else section
    if not isinstance(section, dict):
        raise ConfigError("knobs: expected an object")
    unknown = set(section) - set(DEFAULT_KNOBS)
    if unknown:
        raise ConfigError(f"knobs: unknown keys {sorted(unknown)}")
    knobs = dict(DEFAULT_KNOBS, **section)
    for name in ("K", "M", "lattice", "grid_size", "series_order", "fit_order"):
        v = knobs[name]
        if isinstance(v, bool) or not isinstance(v, int) or v <= 0:
            raise ConfigError(f"knobs.{name} must be a positive integer")
    if knobs["M"] % 2 or knobs["grid_size"] < 2:
        raise ConfigError("knobs.M must be even and knobs.grid_size at least 2")
    tol = knobs["collar_tol"]
    if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not tol > 0:
        raise ConfigError("knobs.collar_tol must be positive")
    if knobs["r2_method"] not in ("auto", "fit"):
        raise ConfigError("knobs.r2_method must be 'auto' or 'fit'")
    return knobs


def parse_config(raw: dict, base_dir: Path | str = ".", points_override=None) -> JobConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be an object")
    unknown = set(raw) - {"curve", "data", "knobs", "outputs", "points", "out_dir"}
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    base_dir = Path(base_dir)
    if "curve" not in raw:
        raise ConfigError("exactly one curve is required")
    curve = parse_curve(raw["curve"])
    if "data" not in raw:
        raise ConfigError("data is required")
    data = parse_data(raw["data"], curve, base_dir)
    knobs = parse_knobs(raw.get("knobs"))
    outputs = raw.get("outputs", [])
    if not isinstance(outputs, list) or any(o not in STAGES for o in outputs):
        raise ConfigError(f"outputs must be a list drawn from {list(STAGES)}")
    if points_override is not None:
        points = read_points_csv(Path(points_override))
    elif "points" in raw:
        points = parse_points(raw["points"], base_dir)
    else:
        points = None
    out_dir = base_dir / raw["out_dir"] if "out_dir" in raw else None
    cfg = JobConfig(raw, curve, data, knobs, [], points, out_dir, base_dir)
    if "outputs" in raw:
        cfg = cfg.with_outputs(outputs)
    return cfg


def load_config(path, points_override=None) -> JobConfig:
    """Read a ``.json`` or ``.toml`` job file."""
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    try:
        if path.suffix.lower() == ".toml":
            raw = tomllib.loads(text.decode())
        else:
            raw = json.loads(text)
    except (ValueError, UnicodeDecodeError) as e:
        raise ConfigError(f"{path}: {e}") from e
    return parse_config(raw, path.parent, points_override)
