"""Pipeline orchestration and deterministic report and CSV emission."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import Verdict, compatibility, hilbert_transform
from .config import JobConfig
from .distance import dstar, worker_count
from .errors import ConfigError, HarmextError, StageError
from .extension import PatchedExtension

FIELD_COLUMNS = ("x", "y", "B1", "B2", "t0", "err_bound", "certified", "heuristic", "beyond_bound")
SPECTRUM_COLUMNS = ("k", "magnitude")
HILBERT_COLUMNS = ("t", "f", "h", "Hh", "residual")


def fmt(v) -> str:
    """17-significant-digit decimal that reads back to the same double."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def json_safe(v):
    """Plain JSON types; non-finite floats become the strings ``inf``, ``-inf``, ``nan``."""
    if isinstance(v, dict):
        return {str(k): json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [json_safe(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isfinite(f):
            return f
        return "nan" if math.isnan(f) else ("inf" if f > 0 else "-inf")
    if isinstance(v, complex):
        return {"re": json_safe(v.real), "im": json_safe(v.imag)}
    return v


def atomic_write(path: Path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


@dataclass
class RunReport:
    config: dict
    knobs: dict
    stages: list
    distance: dict | None = None
    compat: dict | None = None
    hilbert: dict | None = None
    extend: dict | None = None
    warnings: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    exit_code: int = 0
    tables: dict = field(default_factory=dict, repr=False)

    def warn(self, stage: str, message: str) -> None:
        self.warnings.append({"stage": stage, "message": message})

    def as_dict(self) -> dict:
        """Everything except timings, so the result is reproducible."""
        return json_safe({
            "version": __version__,
            "config": self.config,
            "knobs": self.knobs,
            "stages": self.stages,
            "compat": self.compat,
            "hilbert": self.hilbert,
            "analyze": self.distance,
            "extend": self.extend,
            "warnings": self.warnings,
            "exit_code": self.exit_code,
        })

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _stage(report: RunReport, name: str, func):
    start = time.perf_counter()
    try:
        return func()
    except (ConfigError, StageError):
        raise
    except (HarmextError, ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
        raise StageError(name, e) from e
    finally:
        report.timings[name] = time.perf_counter() - start


def _run_compat(cfg: JobConfig, report: RunReport):
    rep = compatibility(cfg.curve, cfg.data, cfg.knobs["M"])
    report.compat = rep.summary()
    report.tables["residual_spectrum.csv"] = csv_text(
        SPECTRUM_COLUMNS, ((k, m) for k, m in enumerate(rep.spectrum))
    )
    if rep.verdict is Verdict.INCONCLUSIVE:
        report.warn("compat", "compatibility verdict is Inconclusive")
    elif rep.verdict is Verdict.NOT_ANALYTIC:
        report.warn("compat", "f - H h does not look real analytic: no exterior harmonic extension")
    if not cfg.data.has_coefficients:
        report.warn("compat", "data known only on a grid; the verdict rests on the sampled spectrum")
    return rep


def _run_hilbert(cfg: JobConfig, report: RunReport):
    t, f, h = cfg.data.samples(cfg.knobs["M"])
    Hh = hilbert_transform(cfg.curve, h)
    res = f - Hh
    report.hilbert = {"M": cfg.knobs["M"], "max_abs_Hh": float(np.abs(Hh).max()),
                      "max_abs_residual": float(np.abs(res).max())}
    report.tables["hilbert.csv"] = csv_text(HILBERT_COLUMNS, zip(t, f, h, Hh, res))


def _run_analyze(cfg: JobConfig, report: RunReport):
    k = cfg.knobs
    prof = dstar(cfg.curve, cfg.data, grid_size=k["grid_size"], K=k["K"], fit_order=k["fit_order"],
                 r2_method=k["r2_method"], collar_tol=k["collar_tol"], workers=worker_count())
    report.distance = prof.summary()
    for w in prof.warnings:
        report.warn("analyze", w)
    rows = sorted(prof.rows(), key=lambda r: r[0])
    report.tables["profile.csv"] = csv_text(prof.CSV_COLUMNS, rows)
    return prof


def _run_extend(cfg: JobConfig, report: RunReport, d_star: float):
    k = cfg.knobs
    ext = PatchedExtension(cfg.curve, cfg.data, k["series_order"], k["lattice"], d_star,
                           k["r2_method"], k["fit_order"])
    samples = [ext.evaluate(p) for p in cfg.points]
    rows = []
    for s in samples:
        b1, b2 = s.B
        rows.append((s.point[0], s.point[1], b1, b2, s.t0, s.err_bound, s.certified, s.heuristic, s.beyond_bound))
    report.tables["field.csv"] = csv_text(FIELD_COLUMNS, rows)
    n_int = sum(s.interior for s in samples)
    n_beyond = sum(s.beyond_bound for s in samples)
    n_heur = sum(s.heuristic for s in samples)
    finite = [s.err_bound for s in samples if not s.interior]
    report.extend = {
        "points": len(samples),
        "certified": int(sum(s.certified for s in samples)),
        "interior": int(n_int),
        "beyond_bound": int(n_beyond),
        "heuristic": int(n_heur),
        "max_err_bound": float(max(finite)) if finite else float("nan"),
        "d_star": d_star,
    }
    if n_int:
        report.warn("extend", f"{n_int} points lie inside the curve and were not evaluated")
    if n_beyond:
        report.warn("extend", f"{n_beyond} points lie beyond the guaranteed distance d*")
    if n_heur:
        report.warn("extend", f"{n_heur} points lie outside the certified series region; error estimates are heuristic")
    return samples


def run(cfg: JobConfig, out_dir: Path | str | None = None) -> RunReport:
    """Run the requested stages in the order compat, hilbert, analyze, extend and write outputs."""
    if not cfg.outputs:
        raise ConfigError("no outputs requested")
    out = Path(out_dir) if out_dir is not None else (cfg.out_dir or Path("."))
    report = RunReport(config=cfg.raw, knobs=cfg.knobs, stages=list(cfg.outputs))
    wanted = set(cfg.outputs)
    verdict = None
    if "compat" in wanted or ("extend" in wanted and cfg.curve.closed):
        verdict = _stage(report, "compat", lambda: _run_compat(cfg, report)).verdict
    elif "extend" in wanted:
        report.warn("compat", "open curve: no compatibility check before extension")
    if "hilbert" in wanted:
        _stage(report, "hilbert", lambda: _run_hilbert(cfg, report))
    d_star = None
    if "analyze" in wanted or "extend" in wanted:
        if "analyze" in wanted or verdict is not Verdict.NOT_ANALYTIC:
            d_star = _stage(report, "analyze", lambda: _run_analyze(cfg, report)).d_star
    if "extend" in wanted:
        if verdict is Verdict.NOT_ANALYTIC:
            report.warn("extend", "skipped: compatibility verdict is NotAnalytic")
            report.exit_code = 2
        else:
            _stage(report, "extend", lambda: _run_extend(cfg, report, d_star))

    for name, text in sorted(report.tables.items()):
        atomic_write(out / name, text)
    atomic_write(out / "report.json", report.to_json())
    timings = {k: report.timings[k] for k in sorted(report.timings)}
    atomic_write(out / "timings.json", json.dumps(timings, indent=2) + "\n")
    return report
