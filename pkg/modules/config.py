# modules/config.py
# Configuration and constants for the funkvol toolkit

import os
from typing import Any, Dict, Optional

import yaml

from .errors import ParseError

# Face lattice and pairing tolerances
INCIDENCE_TOL = 1e-9  # relative to the vertex radius
PAIRING_TOL = 1e-12
POLYGON_PAIRING_TOL = 1e-10
PARALLEL_EDGE_ANGLE = 1e-8

# Input limits
MAX_DIMENSION = 6
MAX_VERTICES = 64
MAX_HANNER_DIMENSION = 5

# Quadrature (absolute tolerance per dimension)
DEFAULT_TOLS: Dict[int, float] = {
    1: 1e-8,
    2: 1e-7,
    3: 1e-5,
    4: 1e-4,
}
FALLBACK_TOL = 1e-3
MAX_DEPTH = 40
MAX_EVALUATIONS = 60_000_000
LOG_GRADING_MARGIN = 36.0  # e^-36 is below double precision relative to the bulk
INITIAL_CELL_WIDTH = {1: 2.0, 2: 3.0, 3: 6.0}
DEFAULT_CELL_WIDTH = 10.0
SPLIT_FRACTION = 0.5  # share of the error estimate refined per round
ERROR_SAFETY = 5.0  # multiplier on |coarse - fine| per leaf
MIN_ROUNDS = 1
CHUNK_SIZE = 20_000  # quadrature points per vectorized evaluation

# Newton solve for the Santalo point at infinity
NEWTON_MAX_ITER = 200
ARMIJO_C = 1e-4
BACKTRACK = 0.5
STEP_CLIP = 0.1
SANTALO_INF_TOL = 1e-8

# Finite-radius Santalo point
SANTALO_R_TOL = 1e-4
SANTALO_R_MAX_ITER = 60
FD_STEP_SCALE = 1e-4

# Simplex recursion
ODE_TOL = 1e-10

# Reports
CSV_DIGITS = 17
TEXT_DIGITS = 6
DEFAULT_FIT_GRID = (10.0, 12.0, 14.0, 16.0, 18.0, 20.0)
FIT_REL_TOL = 1e-6  # quadrature accuracy behind the large-radius fits
DEFAULT_R_GRID = (0.5, 1.0, 2.0, 4.0)
DEFAULT_SANTALO_GRID = (1.0, 2.0, 5.0)
DEFAULT_LAMBDA_GRID = (0.3, 0.5, 0.9)

THREADS_ENV = "FUNKVOL_THREADS"

COMMANDS = ("volume", "coeffs", "santalo", "simplex", "hanner", "polygon", "verify", "sweep", "ratios")
OUTPUT_FORMATS = ("text", "json", "csv")

# Keys accepted in a YAML run configuration (mirrors the CLI flags)
RUN_CONFIG_KEYS = {
    "command", "input", "R", "R_grid", "lambda_grid", "center", "tol", "format",
    "seed", "n", "spec", "debug", "verbose",
}


def default_tol(n: int) -> float:
    """Default absolute quadrature tolerance for dimension n"""
    return DEFAULT_TOLS.get(n, FALLBACK_TOL)


def get_thread_count() -> int:
    """Worker cap from FUNKVOL_THREADS (1 when unset or invalid)"""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def load_run_config(path: Optional[str]) -> Dict[str, Any]:
    """Load a YAML run configuration; returns {} when no path is given"""
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as e:
        raise ParseError(f"cannot read config {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ParseError(f"invalid YAML in {path}: {e}") from e

    if not isinstance(data, dict):
        raise ParseError(f"config {path} must be a mapping")
    unknown = sorted(set(data) - RUN_CONFIG_KEYS)
    if unknown:
        raise ParseError(f"unknown config keys: {', '.join(unknown)}")
    return data
