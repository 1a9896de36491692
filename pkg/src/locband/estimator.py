"""Sample splitting and kernel density estimation.

The selector consumes a table of estimates over an extended mesh (the mesh
points of [0,1] plus the margin its spatial maximum reaches into); for
piecewise-constant kernels the table is filled by sorted rank queries, any
other kernel falls back to direct summation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .calibration import CalibrationPlan
from .errors import InsufficientDataError, InvalidBandwidthError
from .kernels import Kernel

_token_counter = itertools.count(1)


@dataclass(frozen=True)
class SplitSample:
    """The two halves, sorted for rank queries; estimates never depend on
    the order, so sorting is purely an internal representation."""

    chi1: np.ndarray
    chi2: np.ndarray
    n_tilde: int
    token: int

    def half(self, half_id: int) -> np.ndarray:
        if half_id not in (1, 2):
            raise ValueError(f"half_id must be 1 or 2, got {half_id!r}")
        return self.chi1 if half_id == 1 else self.chi2


def split_sample(data) -> SplitSample:
    """First n~ points to half 1, next n~ to half 2, odd point dropped."""
    arr = np.asarray(data, dtype=float).ravel()
    if arr.size < 4:
        raise InsufficientDataError(f"need at least 4 observations, got {arr.size}")
    nt = arr.size // 2
    return SplitSample(
        chi1=np.sort(arr[:nt]),
        chi2=np.sort(arr[nt:2 * nt]),
        n_tilde=nt,
        token=next(_token_counter),
    )


def kde_at(half: np.ndarray, t: float, h: float, kernel: Kernel) -> float:
    """(1/m) sum_i K((X_i - t)/h) / h by direct summation."""
    if h <= 0.0:
        raise InvalidBandwidthError(f"bandwidth must be positive, got {h!r}")
    half = np.asarray(half, dtype=float)
    if half.size == 0:
        raise InsufficientDataError("empty subsample")
    return float(kernel.evaluate((half - t) / h).sum() / (half.size * h))


def _rank_query_row(sorted_half: np.ndarray, points: np.ndarray, h: float, kernel: Kernel) -> np.ndarray:
    m = sorted_half.size
    out = np.zeros_like(points)
    for lo, hi, val in kernel.flat_pieces:
        # K((X - t)/h) = val for t + h*lo <= X <= t + h*hi (closed pieces)
        left = np.searchsorted(sorted_half, points + h * lo, side="left")
        right = np.searchsorted(sorted_half, points + h * hi, side="right")
        out += val * (right - left)
    return out / (m * h)


@dataclass(frozen=True)
class KdeTable:
    """Estimates p_hat(i * delta_n, j) for mesh indices idx_lo..idx_hi and
    all bandwidth exponents of the plan's grid."""

    plan: CalibrationPlan
    half_id: int
    split_token: int
    idx_lo: int
    idx_hi: int
    values: np.ndarray  # shape (j_max - j_min + 1, idx_hi - idx_lo + 1)

    def row(self, j: int) -> np.ndarray:
        return self.values[j - self.plan.j_min]

    def value(self, idx: int, j: int) -> float:
        return float(self.values[j - self.plan.j_min, idx - self.idx_lo])

    def mesh_point(self, idx: int) -> float:
        return idx * self.plan.delta_n


def selector_margin(plan: CalibrationPlan) -> int:
    """Largest mesh-index offset the selector's spatial maximum can reach:
    the open ball of radius (7/8) 2^-j_min in mesh units."""
    rho = (7.0 / 8.0) * 2.0 ** -plan.j_min * plan.mesh_count
    return max(0, math.ceil(rho - 1e-9) - 1)


def build_kde_table(
    split: SplitSample,
    plan: CalibrationPlan,
    kernel: Kernel,
    half_id: int,
    idx_lo: Optional[int] = None,
    idx_hi: Optional[int] = None,
) -> KdeTable:
    """Precompute the estimate table the selector consumes.

    The default index range covers the mesh of [0,1] plus the selector
    margin.  Piecewise-constant kernels use O(log n~) rank queries per
    entry; other kernels are summed directly.
    """
    if plan.j_max < plan.j_min:
        raise InvalidBandwidthError("empty bandwidth grid")
    margin = selector_margin(plan)
    if idx_lo is None:
        idx_lo = -margin
    if idx_hi is None:
        idx_hi = plan.mesh_count + margin
    half = split.half(half_id)
    points = np.arange(idx_lo, idx_hi + 1, dtype=float) * plan.delta_n
    rows = []
    for j in plan.bandwidth_exponents:
        h = 2.0 ** -j
        if kernel.flat_pieces is not None:
            rows.append(_rank_query_row(half, points, h, kernel))
        else:
            rows.append(kernel.evaluate((half[None, :] - points[:, None]) / h).sum(axis=1) / (half.size * h))
    return KdeTable(
        plan=plan,
        half_id=half_id,
        split_token=split.token,
        idx_lo=idx_lo,
        idx_hi=idx_hi,
        values=np.vstack(rows),
    )


def parse_data_file(path: str) -> np.ndarray:
    """Plain text, one finite real per line; blank lines are permitted."""
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                x = float(line)
            except ValueError as exc:
                raise ValueError(f"line {lineno}: not a real number: {raw!r}") from exc
            if not math.isfinite(x):
                raise ValueError(f"line {lineno}: non-finite entry {raw!r}")
            values.append(x)
    return np.asarray(values, dtype=float)
