"""Piecewise-constant confidence bands.

Cells are right-open except the last: I_k = [(k-1) d, k d) for
k = 1..1/d - 1 and I_{1/d} = [1 - d, 1].  Centers are first-half estimates
at the cell's right-endpoint mesh point with the profile's undersmoothed
bandwidth; half-widths are q_n(alpha) / sqrt(n~ h_loc).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calibration import CalibrationPlan, band_halfwidth_quantile, optimal_bandwidth
from .densities import AnalyticDensity
from .errors import CrossSampleContaminationError, OutOfDomainError
from .estimator import SplitSample, kde_at
from .kernels import Kernel
from .selector import BandwidthProfile


@dataclass(frozen=True)
class ConfidenceBand:
    plan: CalibrationPlan
    alpha: float
    q_n: float
    centers: np.ndarray      # cell k = 1..mesh_count
    halfwidths: np.ndarray
    h_loc: np.ndarray
    j_hat_left: np.ndarray
    j_hat_right: np.ndarray

    def cell_of(self, t: float) -> int:
        lo, hi = 0.0, 1.0
        if not (lo <= t <= hi):
            raise OutOfDomainError(f"point {t!r} outside [0,1]")
        k = int(math.floor(t / self.plan.delta_n)) + 1
        return min(k, self.plan.mesh_count)

    def width(self, t: float) -> float:
        return 2.0 * float(self.halfwidths[self.cell_of(t) - 1])

    def cell_edges(self) -> np.ndarray:
        return np.arange(self.plan.mesh_count + 1, dtype=float) * self.plan.delta_n


def _centers_for(split: SplitSample, plan: CalibrationPlan, kernel: Kernel, h_loc: np.ndarray) -> np.ndarray:
    points = np.arange(1, plan.mesh_count + 1, dtype=float) * plan.delta_n
    chi1 = split.chi1
    if kernel.flat_pieces is not None:
        out = np.zeros_like(points)
        for lo, hi, val in kernel.flat_pieces:
            left = np.searchsorted(chi1, points + h_loc * lo, side="left")
            right = np.searchsorted(chi1, points + h_loc * hi, side="right")
            out += val * (right - left)
        return out / (split.n_tilde * h_loc)
    return np.array([kde_at(chi1, t, h, kernel) for t, h in zip(points, h_loc)])


def build_band(
    split: SplitSample,
    profile: BandwidthProfile,
    plan: CalibrationPlan,
    kernel: Kernel,
    alpha: float,
) -> ConfidenceBand:
    """Assemble the band: centers from the first half at bandwidths selected
    on the second half, half-widths from the calibrated quantile."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0,1), got {alpha!r}")
    if profile.split_token != split.token or profile.half_id != 2:
        raise CrossSampleContaminationError(
            "bandwidth profile must be selected on the second half of this split"
        )
    q_n = band_halfwidth_quantile(plan, alpha)
    centers = _centers_for(split, plan, kernel, profile.h_loc)
    halfwidths = q_n / np.sqrt(plan.n_tilde * profile.h_loc)
    return ConfidenceBand(
        plan=plan,
        alpha=alpha,
        q_n=q_n,
        centers=centers,
        halfwidths=halfwidths,
        h_loc=profile.h_loc.copy(),
        j_hat_left=profile.j_hat[:-1].copy(),
        j_hat_right=profile.j_hat[1:].copy(),
    )


def reference_global_band(
    split: SplitSample,
    plan: CalibrationPlan,
    kernel: Kernel,
    alpha: float,
) -> ConfidenceBand:
    """Non-adaptive baseline: the worst-case bandwidth h_{beta_*} 2^-u_n in
    every cell, same centers and quantile construction."""
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0,1), got {alpha!r}")
    h_ref = optimal_bandwidth(plan, plan.beta_star_low) * 2.0 ** -plan.u_n
    h_loc = np.full(plan.mesh_count, h_ref)
    q_n = band_halfwidth_quantile(plan, alpha)
    centers = _centers_for(split, plan, kernel, h_loc)
    j_ref = np.full(plan.mesh_count, -1, dtype=np.int64)
    return ConfidenceBand(
        plan=plan,
        alpha=alpha,
        q_n=q_n,
        centers=centers,
        halfwidths=q_n / np.sqrt(plan.n_tilde * h_loc),
        h_loc=h_loc,
        j_hat_left=j_ref,
        j_hat_right=j_ref,
    )


def band_at(band: ConfidenceBand, t: float) -> tuple[float, float]:
    """(lower, upper) of the cell containing t; right-open cells, the last
    cell closed at 1."""
    k = band.cell_of(t)
    c = float(band.centers[k - 1])
    hw = float(band.halfwidths[k - 1])
    return c - hw, c + hw


def covers_truth(band: ConfidenceBand, density: AnalyticDensity) -> bool:
    """True iff every cell's interval contains the density's range on it."""
    lo, hi = density.cells_extrema(band.cell_edges())
    return bool(
        np.all(band.centers - band.halfwidths <= lo)
        and np.all(hi <= band.centers + band.halfwidths)
    )


def band_to_csv(band: ConfidenceBand) -> str:
    """Columns k, t_lo, t_hi, center, lo, hi, h_loc, j_hat_left, j_hat_right."""
    d = band.plan.delta_n
    lines = ["k,t_lo,t_hi,center,lo,hi,h_loc,j_hat_left,j_hat_right"]
    for k in range(1, band.plan.mesh_count + 1):
        c = band.centers[k - 1]
        hw = band.halfwidths[k - 1]
        lines.append(
            f"{k},{(k - 1) * d:.12g},{k * d:.12g},{c:.12g},{c - hw:.12g},{c + hw:.12g},"
            f"{band.h_loc[k - 1]:.12g},{band.j_hat_left[k - 1]},{band.j_hat_right[k - 1]}"
        )
    return "\n".join(lines) + "\n"
