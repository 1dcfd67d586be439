"""Synthetic traffic traces with controlled fractal properties.

Three generators are provided: fractional Gaussian noise (exact circulant
embedding), a superposition of heavy-tailed on-off sources, and a
conservative binomial cascade.  All are pure functions of their parameters.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class TraceSeries:
    """Nonnegative intensities, one per slot of width ``slot_width`` seconds."""

    values: np.ndarray
    slot_width: float = 1.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("trace needs at least one value")
        if self.slot_width <= 0:
            raise ValueError("slot_width must be positive")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("trace values must be finite and nonnegative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class FgnParams:
    hurst: float
    mean: float
    std: float
    n: int
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst}")
        if self.std < 0:
            raise ValueError("std must be nonnegative")
        if self.n < 1 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two, got {self.n}")


@dataclass(frozen=True)
class OnOffParams:
    n_sources: int
    pareto_shape: float
    n: int
    min_sojourn: float = 1.0
    peak_rate: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 1.0 < self.pareto_shape < 2.0:
            raise ValueError("pareto_shape must lie in (1, 2)")
        if self.min_sojourn < 1:
            raise ValueError("min_sojourn must be at least one slot")
        if self.n_sources < 1 or self.n < 1:
            raise ValueError("n_sources and n must be positive")
        if self.peak_rate < 0:
            raise ValueError("peak_rate must be nonnegative")


@dataclass(frozen=True)
class CascadeParams:
    depth: int
    multiplier_low: float
    total_mass: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.multiplier_low <= 0.5:
            raise ValueError("multiplier_low must lie in (0, 0.5]")
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if self.total_mass < 0:
            raise ValueError("total_mass must be nonnegative")


def fgn_acf(hurst, k):
    """Exact autocorrelation of unit-variance fGn at lag ``k`` (vectorised)."""
    k = np.abs(np.asarray(k, dtype=float))
    h2 = 2.0 * hurst
    out = 0.5 * (np.abs(k + 1) ** h2 - 2 * k ** h2 + np.abs(k - 1) ** h2)
    return float(out) if out.ndim == 0 else out


def _circulant_eigenvalues(hurst: float, n: int) -> np.ndarray:
    gamma = fgn_acf(hurst, np.arange(n + 1))
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    eig = np.fft.fft(row).real
    # fGn embeddings are nonnegative for every H in (0, 1); only roundoff may dip below 0
    tol = 1e-10 * max(eig.max(), 1.0)
    if eig.min() < -tol:
        raise ArithmeticError(
            f"circulant embedding not nonnegative definite (min eigenvalue {eig.min():.3e})")
    return np.clip(eig, 0.0, None)


def standard_fgn(hurst: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean unit-variance fGn sample of length ``n`` via Davies-Harte."""
    if n == 1:
        return rng.standard_normal(1)
    eig = _circulant_eigenvalues(hurst, n)
    m = 2 * n
    z = rng.standard_normal(m)
    w = np.empty(m, dtype=complex)
    w[0] = np.sqrt(eig[0] / m) * z[0]
    w[n] = np.sqrt(eig[n] / m) * z[n]
    scale = np.sqrt(eig[1:n] / (2 * m))
    w[1:n] = scale * (z[1:n] + 1j * z[n + 1:])
    w[n + 1:] = np.conj(w[n - 1:0:-1])
    return np.fft.fft(w)[:n].real


def gen_fgn(params: FgnParams, slot_width: float = 1.0) -> TraceSeries:
    """fGn scaled to ``params.mean``/``params.std`` and clipped at zero.

    Clipping biases the moments when std/mean is large; keep std/mean small
    (about 0.3 or less) where exact second-order statistics matter.
    """
    rng = np.random.default_rng(params.seed)
    x = standard_fgn(params.hurst, params.n, rng)
    values = np.clip(params.mean + params.std * x, 0.0, None)
    return TraceSeries(values, slot_width)


def _pareto_sojourns(rng, alpha, xmin, size):
    u = 1.0 - rng.random(size)  # (0, 1]
    return np.ceil(xmin * u ** (-1.0 / alpha)).astype(np.int64)


def gen_onoff(params: OnOffParams, slot_width: float = 1.0) -> TraceSeries:
    """Superposed alternating renewal sources with Pareto on and off periods."""
    rng = np.random.default_rng(params.seed)
    n = params.n
    diff = np.zeros(n + 1, dtype=np.int64)
    for child in rng.spawn(params.n_sources):
        on = bool(child.integers(2))
        t = 0
        while t < n:
            # draw sojourns in batches; mean sojourn is finite for alpha > 1
            lengths = _pareto_sojourns(child, params.pareto_shape, params.min_sojourn, 64)
            starts = t + np.concatenate([[0], np.cumsum(lengths[:-1])])
            ends = starts + lengths
            states = on ^ (np.arange(lengths.size) % 2 == 1)
            for s, e, active in zip(starts, ends, states):
                if s >= n:
                    break
                if active:
                    diff[s] += 1
                    diff[min(e, n)] -= 1
            t = int(ends[-1])
            on = bool(states[-1]) ^ True
    active = np.cumsum(diff[:n])
    return TraceSeries(params.peak_rate * active.astype(float), slot_width)


def gen_cascade(params: CascadeParams, slot_width: float = 1.0) -> TraceSeries:
    """Conservative binomial cascade with randomly ordered (p, 1 - p) splits."""
    rng = np.random.default_rng(params.seed)
    p = params.multiplier_low
    mass = np.array([float(params.total_mass)])
    for _ in range(params.depth):
        flip = rng.integers(0, 2, mass.size).astype(bool)
        left = np.where(flip, p, 1.0 - p)
        nxt = np.empty(2 * mass.size)
        nxt[0::2] = mass * left
        nxt[1::2] = mass - nxt[0::2]
        mass = nxt
    return TraceSeries(mass, slot_width)


class TraceFormatError(ValueError):
    pass


def write_trace(trace: TraceSeries, path) -> None:
    lines = [f"slot_width={trace.slot_width:.6f}"]
    lines.extend(f"{v:.6f}" for v in trace.values)
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path) -> TraceSeries:
    text = Path(path).read_text().splitlines()
    if not text:
        raise TraceFormatError(f"{path}: empty trace file")
    head = text[0].strip()
    if not head.startswith("slot_width="):
        raise TraceFormatError(f"{path}:1: expected 'slot_width=<float>' header")
    try:
        slot_width = float(head.split("=", 1)[1])
    except ValueError:
        raise TraceFormatError(f"{path}:1: bad slot_width value") from None
    values = []
    for lineno, line in enumerate(text[1:], start=2):
        line = line.strip()
        if not line:
            continue
        try:
            v = float(line)
        except ValueError:
            raise TraceFormatError(f"{path}:{lineno}: not a number: {line!r}") from None
        if not np.isfinite(v) or v < 0:
            raise TraceFormatError(f"{path}:{lineno}: intensity must be finite and >= 0")
        values.append(v)
    if not values:
        raise TraceFormatError(f"{path}: no intensity values")
    if slot_width <= 0:
        raise TraceFormatError(f"{path}:1: slot_width must be positive")
    return TraceSeries(np.array(values), slot_width)


def sample_acf(x: Sequence[float], max_lag: int) -> np.ndarray:
    """Biased sample autocorrelation at lags 0..max_lag."""
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    denom = np.dot(x, x)
    return np.array([np.dot(x[: x.size - k], x[k:]) / denom for k in range(max_lag + 1)])
