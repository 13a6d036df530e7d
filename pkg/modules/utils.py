# modules/utils.py
# Utilities module for common numeric and formatting helpers

import math
from typing import Iterable, List, Optional, Sequence

import numpy as np
from scipy.special import gamma

from .errors import ParseError


def unit_ball_volume(n: int) -> float:
    """Volume of the Euclidean unit ball, pi^(n/2) / Gamma(n/2 + 1)"""
    return float(math.pi ** (n / 2.0) / gamma(n / 2.0 + 1.0))


def lam_from_radius(R: float) -> float:
    """Homothety ratio 1 - e^(-R) of a Funk ball of radius R"""
    return float(-np.expm1(-R))


def radius_from_lam(lam: float) -> float:
    """Inverse of lam_from_radius"""
    return float(-np.log1p(-lam))


def log_ratio_over_difference(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Stable log(x/y) / (x - y) for positive x, y (limit 1/y when x == y)"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = (x - y) / y
    small = np.abs(r) < 1e-8
    safe_r = np.where(small, 1.0, r)
    body = np.log1p(safe_r) / safe_r
    series = 1.0 - r / 2.0 + r * r / 3.0
    return np.where(small, series, body) / y


def as_vector(x: Optional[Sequence[float]], n: int, name: str = "point") -> np.ndarray:
    """Coerce x to a length-n float vector (None means the origin)"""
    if x is None:
        return np.zeros(n)
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.shape != (n,):
        raise ParseError(f"{name} must have {n} coordinates, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ParseError(f"{name} has non-finite coordinates")
    return v


def parse_float_list(text: str) -> List[float]:
    """Parse '1,2,5' or 'start:stop:step' (stop inclusive) into floats"""
    text = str(text).strip()
    if not text:
        raise ParseError("empty list")
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ParseError(f"range '{text}' must be start:stop:step with step > 0")
            start, stop, step = parts
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [start + k * step for k in range(max(count, 0))]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError as e:
        raise ParseError(f"cannot parse number list '{text}': {e}") from e


def validate_grid(values: Iterable[float], name: str = "R grid") -> List[float]:
    """Positive and strictly increasing, or ParseError"""
    grid = [float(v) for v in values]
    if not grid:
        raise ParseError(f"{name} is empty")
    if any(not math.isfinite(v) or v <= 0 for v in grid):
        raise ParseError(f"{name} values must be positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ParseError(f"{name} must be strictly increasing")
    return grid
