"""Hurst exponent and coefficient-of-variation estimates for traffic windows."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HURST_MIN = 0.01
HURST_MAX = 0.99
MIN_WINDOW = 64

METHODS = ("rescaled_range", "aggregated_variance", "average_of_both")


class DegenerateWindowError(ValueError):
    """Window too short, constant, or zero-mean for the requested statistic."""


@dataclass(frozen=True)
class EstimatorConfig:
    method: str = "average_of_both"
    min_block: int = 8
    max_block_fraction: float = 0.25
    n_block_sizes: int = 10
    aggvar_correction: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.min_block < 4:
            raise ValueError("min_block must be >= 4")
        if not 0 < self.max_block_fraction <= 0.25:
            raise ValueError("max_block_fraction must lie in (0, 0.25]")
        if self.n_block_sizes < 4:
            raise ValueError("n_block_sizes must be >= 4")


@dataclass(frozen=True)
class FractalEstimate:
    hurst: float
    coeff_variation: float
    std: float
    mean: float
    window_slots: int
    degenerate: bool = False

    def as_dict(self) -> dict:
        return {
            "H": self.hurst,
            "S_v": self.coeff_variation,
            "S": self.std,
            "mean": self.mean,
            "window_slots": self.window_slots,
            "degenerate": self.degenerate,
        }


def _as_array(window) -> np.ndarray:
    return np.asarray(getattr(window, "values", window), dtype=float)


def block_sizes(n: int, cfg: EstimatorConfig) -> np.ndarray:
    """Geometrically spaced integer block sizes in [min_block, n * max_block_fraction]."""
    hi = int(n * cfg.max_block_fraction)
    if hi <= cfg.min_block:
        raise DegenerateWindowError(f"window of {n} slots too short for block analysis")
    sizes = np.unique(np.geomspace(cfg.min_block, hi, cfg.n_block_sizes).astype(int))
    if sizes.size < 3:
        raise DegenerateWindowError(f"window of {n} slots gives too few block sizes")
    return sizes


def _check_window(x: np.ndarray) -> None:
    if x.size < MIN_WINDOW:
        raise DegenerateWindowError(f"window has {x.size} slots, need >= {MIN_WINDOW}")
    if np.ptp(x) == 0:
        raise DegenerateWindowError("constant window")


def _clamp(h: float) -> float:
    return float(min(max(h, HURST_MIN), HURST_MAX))


def _slope(sizes, stats) -> float:
    return float(np.polyfit(np.log(sizes), np.log(stats), 1)[0])


def rescaled_range(x: np.ndarray, m: int) -> float:
    """Mean R/S over the non-overlapping blocks of length ``m``."""
    blocks = x[: (x.size // m) * m].reshape(-1, m)
    dev = blocks - blocks.mean(axis=1, keepdims=True)
    z = np.cumsum(dev, axis=1)
    r = np.maximum(z.max(axis=1), 0.0) - np.minimum(z.min(axis=1), 0.0)
    s = blocks.std(axis=1)
    # scale-relative floor so constant blocks are skipped regardless of units
    ok = s > 1e-12 * max(np.abs(blocks).max(), 1e-300)
    if not ok.any():
        raise DegenerateWindowError(f"all blocks of size {m} are constant")
    return float(np.mean(r[ok] / s[ok]))


def estimate_hurst_rs(window, cfg: EstimatorConfig = EstimatorConfig()) -> float:
    x = _as_array(window)
    _check_window(x)
    sizes = block_sizes(x.size, cfg)
    rs = [rescaled_range(x, int(m)) for m in sizes]
    return _clamp(_slope(sizes, rs))


def estimate_hurst_aggvar(window, cfg: EstimatorConfig = EstimatorConfig()) -> float:
    """Aggregated-variance Hurst estimate, ``H = 1 + slope / 2``.

    The variance of block means is taken around the window mean, which for
    long-range dependent input shrinks it by ``1 - (m / n) ** (2 - 2H)``.
    With ``cfg.aggvar_correction`` the variances are divided by that factor
    at the current H and the slope refitted until H settles.
    """
    x = _as_array(window)
    _check_window(x)
    sizes = block_sizes(x.size, cfg)
    used = (x.size // sizes) * sizes
    variances = np.array(
        [x[:u].reshape(-1, int(m)).mean(axis=1).var() for m, u in zip(sizes, used)])
    if np.any(variances <= 0):
        raise DegenerateWindowError("block means have zero variance")
    h = 1.0 + _slope(sizes, variances) / 2.0
    if cfg.aggvar_correction:
        for _ in range(50):
            shrink = 1.0 - (sizes / used) ** (2.0 - 2.0 * _clamp(h))
            h_next = 1.0 + _slope(sizes, variances / shrink) / 2.0
            if abs(h_next - h) < 1e-10:
                h = h_next
                break
            h = h_next
    return _clamp(h)


def coeff_variation(window) -> tuple[float, float, float]:
    """Return ``(S_v, S, mean)`` with the population standard deviation."""
    x = _as_array(window)
    if x.size < 2:
        raise DegenerateWindowError("coefficient of variation needs >= 2 slots")
    mean = float(x.mean())
    if mean == 0:
        raise DegenerateWindowError("zero-mean window, S_v undefined")
    std = float(np.sqrt(np.mean((x - mean) ** 2)))
    return std / mean, std, mean


def estimate(window, cfg: EstimatorConfig = EstimatorConfig()) -> FractalEstimate:
    """Combined Hurst and S_v estimate; degenerate windows fall back to (0.5, 0).

    The fallback leaves routing costs unchanged downstream.
    """
    x = _as_array(window)
    try:
        sv, s, mean = coeff_variation(x)
        if cfg.method == "rescaled_range":
            h = estimate_hurst_rs(x, cfg)
        elif cfg.method == "aggregated_variance":
            h = estimate_hurst_aggvar(x, cfg)
        else:
            h = 0.5 * (estimate_hurst_rs(x, cfg) + estimate_hurst_aggvar(x, cfg))
    except DegenerateWindowError:
        s = float(x.std()) if x.size else 0.0
        mean = float(x.mean()) if x.size else 0.0
        return FractalEstimate(0.5, 0.0, s, mean, int(x.size), degenerate=True)
    if not math.isfinite(h):
        return FractalEstimate(0.5, 0.0, s, mean, int(x.size), degenerate=True)
    return FractalEstimate(h, sv, s, mean, int(x.size))


DEGENERATE = FractalEstimate(0.5, 0.0, 0.0, 0.0, 0, degenerate=True)
