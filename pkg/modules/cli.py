# modules/cli.py
# Command-line front end: parse inputs, dispatch computations, emit report tables

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, fields
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .asymptotics import c0, c1_at_point, c1_flip, fit_coeffs_numeric, fit_volume_curve
from .config import (
    COMMANDS, CSV_DIGITS, DEFAULT_FIT_GRID, DEFAULT_LAMBDA_GRID, DEFAULT_R_GRID, DEFAULT_SANTALO_GRID,
    FIT_REL_TOL, MAX_DIMENSION, MAX_VERTICES, OUTPUT_FORMATS, TEXT_DIGITS, load_run_config,
)
from .errors import FunkVolError, NotCentrallySymmetric, ParseError
from .families import (
    SimplexVolumeSolver, hanner_ball_volume, hanner_build, parse_hanner, polygon_c1, polygon_c1_gradient,
    polygon_dV_dlambda, polygon_dV_dlambda_alt, polygon_from_polytope, simplex_asymptotics, to_ht_volume,
)
from .funk import ball_volume, mahler_volume
from .geometry import Polytope, build_polytope
from .santalo import santalo_at_radius, santalo_infinity
from .utils import as_vector, parse_float_list, unit_ball_volume, validate_grid
from .verification import run_invariant_suite

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    """One command invocation; CLI flags override values from a YAML file"""
    command: str
    input: Optional[str] = None
    R: Optional[float] = None
    R_grid: Optional[List[float]] = None
    lambda_grid: Optional[List[float]] = None
    center: Optional[List[float]] = None
    tol: Optional[float] = None
    format: str = "text"
    seed: int = 0
    n: Optional[int] = None
    spec: Optional[str] = None
    debug: bool = False
    verbose: bool = False

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ParseError(f"unknown command '{self.command}' (choose from {', '.join(COMMANDS)})")
        if self.format not in OUTPUT_FORMATS:
            raise ParseError(f"unknown format '{self.format}' (choose from {', '.join(OUTPUT_FORMATS)})")
        if self.R is not None and not self.R > 0:
            raise ParseError(f"R must be positive, got {self.R}")
        if self.tol is not None and not self.tol > 0:
            raise ParseError(f"tolerance must be positive, got {self.tol}")
        if self.R_grid is not None:
            self.R_grid = validate_grid(self.R_grid, "R grid")
        if self.lambda_grid is not None:
            self.lambda_grid = validate_grid(self.lambda_grid, "lambda grid")
            if self.lambda_grid[-1] >= 1.0:
                raise ParseError("lambda values must lie in (0, 1)")
        if self.n is not None and not 1 <= self.n <= MAX_DIMENSION:
            raise ParseError(f"n must lie in 1..{MAX_DIMENSION}, got {self.n}")
        return self

    def radii(self, default: Sequence[float]) -> List[float]:
        if self.R_grid is not None:
            return list(self.R_grid)
        if self.R is not None:
            return [self.R]
        return list(default)


def _as_list(value: Any) -> Optional[List[float]]:
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        try:
            return [float(v) for v in value]
        except (TypeError, ValueError) as e:
            raise ParseError(f"cannot parse number list {value!r}: {e}") from e
    return parse_float_list(str(value))


def make_config(values: Dict[str, Any]) -> RunConfig:
    """RunConfig from merged YAML/CLI values, with types coerced"""
    known = {f.name for f in fields(RunConfig)}
    data = {k: v for k, v in values.items() if k in known and v is not None}
    if "command" not in data:
        raise ParseError("no command given")
    for key in ("R_grid", "lambda_grid", "center"):
        if key in data:
            data[key] = _as_list(data[key])
    try:
        for key in ("R", "tol"):
            if key in data:
                data[key] = float(data[key])
        for key in ("seed", "n"):
            if key in data:
                data[key] = int(data[key])
    except (TypeError, ValueError) as e:
        raise ParseError(f"bad numeric option: {e}") from e
    return RunConfig(**data).validate()


def parse_polytope(path: str) -> Polytope:
    """Read {"vertices": [[...], ...], "center"?: [...]} and build the polytope"""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON in {path}: {e}") from e

    if not isinstance(data, dict) or "vertices" not in data:
        raise ParseError(f"{path}: expected an object with a 'vertices' list")
    raw = data["vertices"]
    if not isinstance(raw, list) or not all(isinstance(v, list) for v in raw):
        raise ParseError(f"{path}: 'vertices' must be a list of coordinate lists")
    try:
        vertices = np.array(raw, dtype=float)
    except (TypeError, ValueError) as e:
        raise ParseError(f"{path}: vertices must be equal-length lists of numbers ({e})") from e
    if vertices.ndim != 2:
        raise ParseError(f"{path}: vertices must all have the same dimension")
    n = vertices.shape[1]
    if n > MAX_DIMENSION:
        raise ParseError(f"{path}: dimension {n} exceeds the maximum of {MAX_DIMENSION}")
    if len(vertices) > MAX_VERTICES:
        raise ParseError(f"{path}: {len(vertices)} vertices exceed the maximum of {MAX_VERTICES}")
    if "center" in data:
        vertices = vertices - as_vector(data["center"], n, "center")
    return build_polytope(vertices)


class ReportManager:
    """Collects report tables and run messages for one command"""

    def __init__(self, command: str):
        self.command = command
        self.tables: Dict[str, pd.DataFrame] = {}
        self.logs: List[str] = []

    def log(self, msg: str) -> None:
        """Add message to logs"""
        self.logs.append(msg)
        logger.info(msg)

    def add_table(self, name: str, rows: List[Dict[str, Any]]) -> None:
        self.tables[name] = pd.DataFrame(rows)

    def render(self, fmt: str) -> str:
        if fmt == "json":
            payload = {name: [{k: _plain(v) for k, v in row.items()} for row in df.to_dict("records")]
                       for name, df in self.tables.items()}
            return json.dumps({"command": self.command, "tables": payload}, sort_keys=True, indent=2)
        if fmt == "csv":
            float_format = f"%.{CSV_DIGITS}g"
            if len(self.tables) == 1:
                return next(iter(self.tables.values())).to_csv(index=False, float_format=float_format).rstrip("\n")
            parts = [f"# {name}\n" + df.to_csv(index=False, float_format=float_format).rstrip("\n")
                     for name, df in self.tables.items()]
            return "\n\n".join(parts)
        parts = [f"== {name} ==\n" + df.to_string(index=False, float_format=lambda v: f"{v:.{TEXT_DIGITS}g}")
                 for name, df in self.tables.items()]
        return "\n\n".join(parts)


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _point_columns(prefix: str, point: np.ndarray) -> Dict[str, float]:
    return {f"{prefix}{i}": float(c) for i, c in enumerate(point)}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _require_polytope(config: RunConfig) -> Polytope:
    if not config.input:
        raise ParseError(f"command '{config.command}' needs --input")
    return parse_polytope(config.input)


def _center(config: RunConfig, P: Polytope) -> Optional[np.ndarray]:
    return None if config.center is None else as_vector(config.center, P.dim, "center")


def cmd_volume(config: RunConfig, report: ReportManager) -> int:
    P = _require_polytope(config)
    x = _center(config, P)
    rows = []
    for R in config.radii(DEFAULT_R_GRID):
        est = ball_volume(P, x, R, config.tol)
        rows.append({"R": R, "volume": est.value, "abs_error_estimate": est.abs_error_estimate,
                     "evaluations": est.evaluations})
        report.log(f"R={R}: volht={est.value:.15g} +- {est.abs_error_estimate:.3g}")
    report.add_table("volume", rows)
    return 0


def cmd_coeffs(config: RunConfig, report: ReportManager) -> int:
    P = _require_polytope(config)
    x = _center(config, P)
    leading = c0(P)
    c1 = c1_flip(P).c1 if x is None else c1_at_point(P, x)
    grid = config.radii(DEFAULT_FIT_GRID)
    c0_fit, c1_fit = fit_coeffs_numeric(P, x, grid, config.tol)
    report.log(f"exact c0={leading:.12g} c1={c1:.12g}; fitted {c0_fit:.8g}, {c1_fit:.8g}")
    report.add_table("coefficients", [
        {"coefficient": "c0", "exact": leading, "fitted": c0_fit,
         "rel_diff": abs(c0_fit - leading) / abs(leading)},
        {"coefficient": "c1", "exact": c1, "fitted": c1_fit,
         "rel_diff": abs(c1_fit - c1) / abs(c1) if c1 != 0 else abs(c1_fit)},
    ])
    return 0


def cmd_santalo(config: RunConfig, report: ReportManager) -> int:
    P = _require_polytope(config)
    s_inf = santalo_infinity(P)
    report.add_table("s_infinity", [{
        **_point_columns("x", s_inf.point), "c1": s_inf.objective, "residual": s_inf.residual,
        "iterations": s_inf.iterations,
    }])
    rows = []
    start = s_inf.point
    for R in config.radii(DEFAULT_SANTALO_GRID):
        res = santalo_at_radius(P, R, start=start)
        start = res.point
        rows.append({"R": R, **_point_columns("x", res.point), "volume": res.objective,
                     "distance_to_s_inf": float(np.linalg.norm(res.point - s_inf.point)),
                     "iterations": res.iterations})
        report.log(f"s_R at R={R}: {np.round(res.point, 8).tolist()}")
    report.add_table("s_R", rows)
    return 0


def cmd_simplex(config: RunConfig, report: ReportManager) -> int:
    n = config.n or 2
    solver = SimplexVolumeSolver() if config.tol is None else SimplexVolumeSolver(config.tol)
    grid = config.radii(DEFAULT_R_GRID)
    values = solver.curve(n, grid)
    report.add_table("simplex", [
        {"R": R, "V": V, "volht": to_ht_volume(V, n)} for R, V in zip(grid, values)
    ])
    asym = simplex_asymptotics(n)
    report.add_table("asymptotics", [
        {"regime": "small_R", "leading": asym.small_leading, "next": asym.small_next},
        {"regime": "large_R", "leading": asym.large_leading, "next": asym.large_next},
    ])
    return 0


def cmd_hanner(config: RunConfig, report: ReportManager) -> int:
    spec = parse_hanner(config.spec) if config.spec else None
    n = spec.dim if spec is not None else (config.n or 2)
    P = hanner_build(spec) if spec is not None else None
    rows = []
    for R in config.radii(DEFAULT_R_GRID):
        row = {"R": R, "closed_form": hanner_ball_volume(n, R)}
        if P is not None:
            est = ball_volume(P, None, R, config.tol)
            row.update({"quadrature": est.value,
                        "rel_diff": abs(est.value - row["closed_form"]) / row["closed_form"]})
        rows.append(row)
    report.log(f"Hanner dimension {n}" + (f", flags={len(P.flags)}" if P is not None else ""))
    report.add_table("hanner", rows)
    return 0


def cmd_polygon(config: RunConfig, report: ReportManager) -> int:
    P = _require_polytope(config)
    Q = polygon_from_polytope(P)
    gradient = polygon_c1_gradient(Q)
    report.add_table("c1", [{
        "vertices": Q.m, "c1_polygon": polygon_c1(Q), "c1_flip": c1_flip(P).c1,
        "gradient_norm": float(np.linalg.norm(gradient)),
    }])
    lambdas = config.lambda_grid or list(DEFAULT_LAMBDA_GRID)
    report.add_table("dV_dlambda", [
        {"lambda": lam, "dV_dlambda": polygon_dV_dlambda(Q, lam), "alt_form": polygon_dV_dlambda_alt(Q, lam)}
        for lam in lambdas
    ])
    return 0


def cmd_verify(config: RunConfig, report: ReportManager) -> int:
    P = _require_polytope(config)
    results = run_invariant_suite(P, seed=config.seed, tol=config.tol)
    report.add_table("verify", [{"check": r.name, "passed": r.passed, "detail": r.detail} for r in results])
    failed = [r.name for r in results if not r.passed]
    report.log(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def cmd_sweep(config: RunConfig, report: ReportManager) -> int:
    P = _require_polytope(config)
    x = _center(config, P)
    grid = config.radii(DEFAULT_FIT_GRID)
    estimates = [ball_volume(P, x, R, config.tol, FIT_REL_TOL) for R in grid]
    scaled = [unit_ball_volume(P.dim) * e.value for e in estimates]
    if len(grid) >= 3:
        _, residuals = fit_volume_curve(P.dim, grid, scaled)
    else:
        residuals = np.full(len(grid), np.nan)
    report.add_table("sweep", [
        {"R": R, "volume": e.value, "abs_error_estimate": e.abs_error_estimate, "fit_residual": float(res)}
        for R, e, res in zip(grid, estimates, residuals)
    ])
    return 0


def cmd_ratios(config: RunConfig, report: ReportManager) -> int:
    P = _require_polytope(config)
    if not P.is_centrally_symmetric():
        raise NotCentrallySymmetric("ratios need a polytope symmetric about the origin")
    n = P.dim
    mahler = mahler_volume(P)
    flag_ratio = len(P.flags) / (math.factorial(n) ** 2 / 2 ** n * mahler)
    report.add_table("flag_mahler", [{"flags": len(P.flags), "mahler": mahler, "ratio": flag_ratio}])

    grid = config.radii(DEFAULT_R_GRID)
    volumes = [ball_volume(P, None, R, config.tol).value for R in grid]
    hanner = [hanner_ball_volume(n, R) for R in grid]
    report.add_table("hanner_ratio", [
        {"R": R, "volume": v, "hanner": h, "ratio": v / h} for R, v, h in zip(grid, volumes, hanner)
    ])
    report.add_table("growth", [
        {"r": grid[k], "R": grid[k + 1], "growth": volumes[k + 1] / volumes[k],
         "hanner_growth": hanner[k + 1] / hanner[k]}
        for k in range(len(grid) - 1)
    ])
    return 0


COMMAND_HANDLERS = {
    "volume": cmd_volume,
    "coeffs": cmd_coeffs,
    "santalo": cmd_santalo,
    "simplex": cmd_simplex,
    "hanner": cmd_hanner,
    "polygon": cmd_polygon,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "ratios": cmd_ratios,
}


def run(config: RunConfig, out=None, err=None) -> int:
    """Execute one command; the report is printed only if every step succeeds"""
    out = out or sys.stdout
    err = err or sys.stderr
    report = ReportManager(config.command)
    try:
        status = COMMAND_HANDLERS[config.command](config, report)
    except FunkVolError as e:
        print(f"error[{e.stage}]: {e.message}", file=err)
        return 2
    except ValueError as e:
        print(f"error[parse]: {e}", file=err)
        return 2
    print(report.render(config.format), file=out)
    if config.debug:
        print("-- log --", file=err)
        for line in report.logs:
            print(line, file=err)
    return status


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="funkvol",
                                     description="Holmes-Thompson volumes of Funk balls in polytopes")
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    parser.add_argument("--config", help="YAML run configuration; flags override its values")
    parser.add_argument("--input", help="polytope JSON file")
    parser.add_argument("--R", type=float, help="ball radius")
    parser.add_argument("--R-grid", dest="R_grid", help="radii as 'a,b,c' or 'start:stop:step'")
    parser.add_argument("--lambda-grid", dest="lambda_grid", help="homothety ratios for polygon")
    parser.add_argument("--center", nargs="+", metavar="X",
                        help="ball center as separate numbers (-0.1 0) or one comma separated list")
    parser.add_argument("--tol", type=float, help="absolute tolerance")
    parser.add_argument("--format", choices=OUTPUT_FORMATS)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--n", type=int, help="dimension for simplex and hanner")
    parser.add_argument("--spec", help="Hanner expression, e.g. 'polar(product(segment, segment, segment))'")
    parser.add_argument("--debug", action="store_true", default=None, help="print the run log after the report")
    parser.add_argument("--verbose", action="store_true", default=None, help="debug-level library logging")
    return parser


def config_from_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    if args.center is not None:
        args.center = ",".join(args.center)
    values = dict(load_run_config(args.config))
    values.update({k: v for k, v in vars(args).items() if k != "config" and v is not None})
    return make_config(values)


def setup_logging(verbose: bool) -> None:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("modules").setLevel(logging.DEBUG if verbose else logging.WARNING)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main application entry point"""
    try:
        config = config_from_args(argv)
    except FunkVolError as e:
        print(f"error[{e.stage}]: {e.message}", file=sys.stderr)
        return 2
    setup_logging(config.verbose)
    return run(config)
