"""Convergence-study runner: configuration, execution and table output.

A run walks the red-refinement chain for every ``p`` of the configuration,
solves the discrete problem on each level, records the error quantities and
derives experimental orders of convergence. Results serialize to JSON and
round-trip losslessly; tables and figure data are written as CSV.
"""
from __future__ import annotations

import configparser
import csv
import hashlib
import json
import logging
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .analysis import LevelErrors, a2_average, compute_errors, eoc, muckenhoupt_E, theory_rate
from .assembly import Assembler
from .constitutive import StressLaw
from .fespace import build_space, tabulate, _normalize_kind
from . import __version__
from .manufactured import E1, make_exact, reference_point_q0, truncation_level
from .mesh import initial_mesh, red_refine
from .quadrature import rule_for_dim
from .solver import NewtonConfig, SolveReport, newton_solve

__all__ = [
    "RunConfig",
    "LevelRecord",
    "PRun",
    "RunResult",
    "run",
    "emit_tables",
    "emit_figure_data",
    "load_config",
    "ERROR_FIELDS",
    "MISSING",
]

log = logging.getLogger(__name__)

ERROR_FIELDS = ("e_F", "e_q_norm", "e_q_modular")
MISSING = "-"
DEFAULT_MAX_LEVEL = {2: 6, 3: 3}
DESK_LIMIT_3D = 3
HARD_LIMIT = {2: 6, 3: 4}
# radius of the e1-centred ball of the normalized A2 quotient, relative to 2^-i
A2_BALL_FACTOR = 0.5


@dataclass
class RunConfig:
    """Declarative description of one convergence study."""

    dim: int = 2
    element: str = "mini"
    case: int = 1
    p_list: list[float] = field(default_factory=lambda: [2.25, 2.5, 2.75, 3.0, 3.25, 3.5])
    max_level: int | None = None
    enable_convection: bool = True
    rhs_mode: str = "weak"
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    output_dir: str = "results"
    seed: int = 0
    gamma_rule: str = "dimensional"
    threads: int = 1
    deep: bool = False

    def __post_init__(self):
        if isinstance(self.newton, dict):
            self.newton = NewtonConfig(**self.newton)
        self.p_list = [float(p) for p in self.p_list]
        if self.max_level is None:
            self.max_level = DEFAULT_MAX_LEVEL.get(self.dim, 3)
        self.validate()

    def validate(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        self.element = _normalize_kind(self.element)
        if self.case not in (1, 2):
            raise ValueError(f"case must be 1 or 2, got {self.case}")
        if self.rhs_mode not in ("weak", "strong"):
            raise ValueError(f"rhs_mode must be weak or strong, got {self.rhs_mode!r}")
        if self.gamma_rule not in ("dimensional", "planar"):
            raise ValueError(f"gamma_rule must be dimensional or planar, got {self.gamma_rule!r}")
        for p in self.p_list:
            if not (math.isfinite(p) and p >= 2.0):
                raise ValueError(f"p must be a finite value >= 2, got {p}")
        if self.max_level < 0:
            raise ValueError("max_level must be non-negative")
        if self.max_level > HARD_LIMIT[self.dim]:
            raise ValueError(f"max_level {self.max_level} exceeds the supported {HARD_LIMIT[self.dim]} in {self.dim}D")
        if self.dim == 3 and self.max_level > DESK_LIMIT_3D and not self.deep:
            raise ValueError("3D levels above 3 need the deep option")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["newton"] = asdict(self.newton)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(**d)

    def config_hash(self) -> str:
        """SHA-256 over the fields that influence computed numbers."""
        d = self.to_dict()
        for k in ("output_dir", "threads", "deep"):
            d.pop(k)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class LevelRecord:
    level: int
    h: float
    n_cells: int
    n_dofs: int
    errors: LevelErrors | None
    report: SolveReport
    seconds: float
    timestamp: str
    n_bubbles: int | None = None
    E: float | None = None
    E_points: int = 0
    A2_e1: float | None = None
    A2_e1_points: int = 0

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("level", "h", "n_cells", "n_dofs", "seconds", "timestamp", "n_bubbles", "E", "E_points", "A2_e1", "A2_e1_points")}
        d["errors"] = None if self.errors is None else self.errors.to_dict()
        d["report"] = self.report.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LevelRecord":
        d = dict(d)
        d["errors"] = None if d["errors"] is None else LevelErrors(**d["errors"])
        d["report"] = SolveReport(**d["report"])
        return cls(**d)


@dataclass
class PRun:
    """All levels computed for one value of ``p``."""

    p: float
    levels: list[LevelRecord] = field(default_factory=list)
    partial: bool = False

    def eoc(self, name: str) -> list:
        errs = [r.errors for r in self.levels if r.errors is not None]
        return eoc(errs, name) if errs else []

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "partial": self.partial,
            "levels": [r.to_dict() for r in self.levels],
            "eoc": {name: self.eoc(name) for name in ERROR_FIELDS},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PRun":
        return cls(d["p"], [LevelRecord.from_dict(r) for r in d["levels"]], d["partial"])


@dataclass
class RunResult:
    config: RunConfig
    runs: list[PRun] = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return any(r.partial for r in self.runs)

    def metadata(self) -> dict:
        """Problem data that is derived rather than configured."""
        cfg = self.config
        per_p = []
        for r in self.runs:
            exact = make_exact(cfg.dim, r.p, cfg.case, 0, cfg.gamma_rule)
            per_p.append({"p": r.p, "gamma": exact.gamma, "q_mean": exact.q_mean})
        meta = {"package_version": __version__, "quadrature": _rule_label(cfg.dim), "exact": per_p}
        if cfg.dim == 3:
            # nearest Keast point to e1 in the initial mesh; ties broken lexicographically
            meta["q0"] = list(reference_point_q0())
        return meta

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "config_hash": self.config.config_hash(),
            "partial": self.partial,
            "metadata": self.metadata(),
            "runs": [r.to_dict() for r in self.runs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        return cls(RunConfig.from_dict(d["config"]), [PRun.from_dict(r) for r in d["runs"]])

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=1), encoding="utf-8")
        return path

    @classmethod
    def load(cls, path) -> "RunResult":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _load_callable(config: RunConfig, space, exact, table):
    if config.rhs_mode == "weak":
        return None
    forcing = getattr(exact, "forcing", None)
    if forcing is None:
        raise ValueError("rhs_mode=strong needs an exact solution with a closed-form forcing")
    return lambda lw: Assembler(space, lw, table, config.enable_convection).load_strong(forcing)


def run_single_p(config: RunConfig, p: float) -> PRun:
    """Solve the whole level chain for one ``p``; stops at the first failure."""
    law = StressLaw.from_values(p)
    rule = rule_for_dim(config.dim)
    out = PRun(p)
    mesh = initial_mesh(config.dim)
    for level in range(config.max_level + 1):
        if level > 0:
            mesh = red_refine(mesh)
        t0 = time.perf_counter()
        exact = make_exact(config.dim, p, config.case, level, config.gamma_rule)
        space = build_space(mesh, config.element)
        table = tabulate(space, rule)
        state, report = newton_solve(
            space, law, exact, config.newton, table=table,
            convection=config.enable_convection, load=_load_callable(config, space, exact, table),
        )
        rec = LevelRecord(
            level, mesh.h, mesh.n_cells, space.n_total, None, report, 0.0,
            datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )
        if config.dim == 3:
            rec.n_bubbles = truncation_level(level)
            rec.E, rec.E_points = muckenhoupt_E(mesh, exact, law, rule)
            rec.A2_e1, rec.A2_e1_points = a2_average(mesh, exact, law, E1, A2_BALL_FACTOR * 2.0**-level, rule)
        if report.converged:
            rec.errors = compute_errors(level, state, exact, space, law, rule)
        rec.seconds = time.perf_counter() - t0
        out.levels.append(rec)
        log.info("p=%g level=%d dofs=%d newton=%d converged=%s (%.1fs)",
                 p, level, space.n_total, report.iterations, report.converged, rec.seconds)
        if not report.converged:
            out.partial = True
            log.warning("p=%g: no convergence at level %d, skipping finer levels", p, level)
            break
    return out


def run(config: RunConfig, write: bool = True) -> RunResult:
    """Execute the study and (optionally) write JSON, tables and figure data."""
    if config.dim == 3 and config.max_level > DESK_LIMIT_3D:
        warnings.warn("3D levels above 3 take hours and tens of GB on one core", RuntimeWarning, stacklevel=2)
    result = RunResult(config)
    if config.threads > 1 and len(config.p_list) > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            result.runs = list(pool.map(run_single_p, [config] * len(config.p_list), config.p_list))
    else:
        result.runs = [run_single_p(config, p) for p in config.p_list]
    if write:
        out = Path(config.output_dir)
        result.save(out / "result.json")
        emit_tables(result, out)
        if config.dim == 3:
            emit_figure_data(result, out)
    return result


def _fmt(x) -> str:
    return MISSING if x is None or not math.isfinite(x) else f"{x:.3f}"


def _rule_label(dim: int) -> str:
    rule = rule_for_dim(dim)
    return f"{len(rule.weights)}-point degree-{rule.degree} {'triangle' if dim == 2 else 'tetrahedron'} rule"


def _stamp(result: RunResult) -> str:
    # leading comment line; csv readers skip it with comment="#"
    return f"# config_hash={result.config.config_hash()}\n"


def emit_tables(result: RunResult, out_dir=None) -> list[Path]:
    """Write one EOC table and one raw-error table per error quantity.

    EOC tables have rows ``i`` and one column per ``p`` followed by a
    ``theory`` row; entries that were not computed are written as ``-``.
    Every file starts with a ``# config_hash=...`` comment line.
    """
    out = Path(out_dir or result.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ps = [r.p for r in result.runs]
    n_levels = result.config.max_level + 1
    h_tag = f"c{result.config.case}_{result.config.element}_{result.config.dim}d"
    stamp = _stamp(result)
    written = []
    for name in ERROR_FIELDS:
        path = out / f"eoc_{name}_{h_tag}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            fh.write(stamp)
            w = csv.writer(fh)
            w.writerow(["i"] + [f"{p:g}" for p in ps])
            cols = [r.eoc(name) for r in result.runs]
            for i in range(1, n_levels):
                w.writerow([i] + [_fmt(c[i] if i < len(c) else None) for c in cols])
            w.writerow(["theory"] + [_fmt(theory_rate(p, result.config.case)) for p in ps])
        written.append(path)
        path = out / f"errors_{name}_{h_tag}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            fh.write(stamp)
            w = csv.writer(fh)
            w.writerow(["i"] + [f"{p:g}" for p in ps])
            for i in range(n_levels):
                row = [i]
                for r in result.runs:
                    rec = r.levels[i] if i < len(r.levels) else None
                    val = None if rec is None or rec.errors is None else getattr(rec.errors, name)
                    row.append(MISSING if val is None else f"{val:.6e}")
                w.writerow(row)
        written.append(path)
    return written


def emit_figure_data(result: RunResult, out_dir=None, vtk: bool = False) -> list[Path]:
    """Write the A2 diagnostic series ``(p, i, E_i)`` and optionally VTK ball surfaces."""
    if result.config.dim != 3:
        raise ValueError("figure data exists only for 3D runs")
    out = Path(out_dir or result.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"muckenhoupt_c{result.config.case}_{result.config.element}.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(_stamp(result))
        w = csv.writer(fh)
        w.writerow(["p", "i", "N_i", "E_i", "n_points", "A2_e1", "A2_e1_points"])
        for r in result.runs:
            for rec in r.levels:
                w.writerow([f"{r.p:g}", rec.level, rec.n_bubbles,
                            MISSING if rec.E is None else repr(rec.E), rec.E_points,
                            MISSING if rec.A2_e1 is None else repr(rec.A2_e1), rec.A2_e1_points])
    written = [path]
    if vtk:
        from .vtk import write_ball_surfaces

        for r in result.runs:
            if not r.levels:
                continue
            level = r.levels[-1].level
            exact = make_exact(3, r.p, result.config.case, level, result.config.gamma_rule)
            written.append(write_ball_surfaces(out / f"balls_p{r.p:g}_c{result.config.case}.vtk", exact))
    return written


_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def _parse_bool(text: str) -> bool:
    try:
        return _BOOL[text.strip().lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {text!r}") from None


def _parse_list(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(",", " ").split()]


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Read a ``key = value`` config file with ``[run]`` and ``[newton]`` sections.

    Keys in ``overrides`` (already parsed values) replace file values.
    """
    cp = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    sec = cp["run"] if cp.has_section("run") else {}
    kw: dict = {}
    conv = {
        "dim": int, "element": str, "case": int, "max_level": int, "rhs_mode": str,
        "output_dir": str, "seed": int, "gamma_rule": str, "threads": int,
        "enable_convection": _parse_bool, "deep": _parse_bool, "p_list": _parse_list,
    }
    aliases = {"p": "p_list", "levels": "max_level", "convection": "enable_convection", "out": "output_dir"}
    for key, raw in sec.items():
        name = aliases.get(key, key)
        if name not in conv:
            raise ValueError(f"unknown key [run] {key}")
        kw[name] = conv[name](raw)
    nk: dict = {}
    if cp.has_section("newton"):
        nconv = {
            "tol_abs": float, "tol_rel": float, "max_iter": int, "damping": _parse_bool,
            "max_halvings": int, "continuation_steps": _parse_list, "auto_continuation": _parse_bool,
            "continuation_start": float, "continuation_step": float, "require_abs": _parse_bool,
        }
        for key, raw in cp["newton"].items():
            if key not in nconv:
                raise ValueError(f"unknown key [newton] {key}")
            nk[key] = nconv[key](raw)
    kw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    kw["newton"] = NewtonConfig(**nk)
    return RunConfig(**kw)
