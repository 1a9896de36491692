"""Localized bandwidth selection.

A bandwidth exponent j is admissible at a mesh point t when, for every pair
of finer exponents m > m' > j + 2, the estimates at the two scales stay
uniformly close over the mesh points of the open ball B(t, (7/8) 2^-j).
The selected exponent is the smallest admissible one; admissible sets are
upward closed, which both the binary search and the vectorized sweep
exploit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter1d

from .calibration import CalibrationPlan, optimal_bandwidth
from .densities import AnalyticDensity, local_exponent_oracle
from .errors import OffMeshError
from .estimator import KdeTable, selector_margin


@dataclass(frozen=True)
class BandwidthProfile:
    """Selected exponent per mesh point and undersmoothed width per cell.

    j_hat[k] is the exponent at mesh point k delta_n for k = 0..mesh_count;
    h_loc[k-1] = 2^-u_n * 2^-max(j_hat[k-1], j_hat[k]) is the bandwidth used
    on cell k = 1..mesh_count.
    """

    plan: CalibrationPlan
    j_hat: np.ndarray
    h_loc: np.ndarray
    half_id: int
    split_token: int


def deviation_threshold(plan: CalibrationPlan, m: int) -> float:
    """Noise level c2 sqrt(log n~ / (n~ 2^-m)) at scale exponent m."""
    return plan.c2 * math.sqrt(plan.log_n_tilde / (plan.n_tilde * 2.0 ** -m))


def _ball_offset(plan: CalibrationPlan, j: int) -> int:
    """Mesh-index offsets inside the open ball of radius (7/8) 2^-j."""
    rho = (7.0 / 8.0) * 2.0 ** -j * plan.mesh_count
    return max(0, math.ceil(rho - 1e-9) - 1)


def _pairs(plan: CalibrationPlan, j: int):
    """Scale pairs (m, m') with m > m' > j + 2, both on the grid."""
    return [
        (m, mp)
        for mp in range(j + 3, plan.j_max + 1)
        for m in range(mp + 1, plan.j_max + 1)
    ]


def _mesh_index(t: float, plan: CalibrationPlan) -> int:
    k = t / plan.delta_n
    if abs(k - round(k)) > 1e-8 * max(1.0, plan.mesh_count):
        raise OffMeshError(f"point {t!r} is not on the mesh of width {plan.delta_n!r}")
    return int(round(k))


def _admissible_at_index(k: int, j: int, table: KdeTable, plan: CalibrationPlan) -> bool:
    a = _ball_offset(plan, j)
    lo = k - a - table.idx_lo
    hi = k + a - table.idx_lo
    if lo < 0 or hi >= table.values.shape[1]:
        raise OffMeshError(
            f"table does not cover the ball around mesh index {k} at exponent {j}"
        )
    for m, mp in _pairs(plan, j):
        window = np.abs(table.row(m)[lo:hi + 1] - table.row(mp)[lo:hi + 1])
        if window.max() > deviation_threshold(plan, m):
            return False
    return True


def admissible_set(t: float, table: KdeTable, plan: CalibrationPlan) -> set[int]:
    """All admissible exponents at mesh point t (upward closed, always
    containing j_max since its condition set is empty)."""
    k = _mesh_index(t, plan)
    return {j for j in plan.bandwidth_exponents if _admissible_at_index(k, j, table, plan)}


def select_at(t: float, table: KdeTable, plan: CalibrationPlan) -> int:
    """Smallest admissible exponent at t, by binary search over the upward
    closed admissible set."""
    k = _mesh_index(t, plan)
    lo, hi = plan.j_min, plan.j_max
    while lo < hi:
        mid = (lo + hi) // 2
        if _admissible_at_index(k, mid, table, plan):
            hi = mid
        else:
            lo = mid + 1
    return lo


def _admissible_mask(table: KdeTable, plan: CalibrationPlan, j: int, out_slice: slice) -> np.ndarray:
    """Vectorized admissibility of exponent j at every mesh index of
    out_slice (expressed relative to the table's index range)."""
    a = _ball_offset(plan, j)
    n_out = out_slice.stop - out_slice.start
    ok = np.ones(n_out, dtype=bool)
    for m, mp in _pairs(plan, j):
        d = np.abs(table.row(m) - table.row(mp))
        sliding = maximum_filter1d(d, size=2 * a + 1, mode="nearest") if a > 0 else d
        ok &= sliding[out_slice] <= deviation_threshold(plan, m)
    return ok


def select_profile(table: KdeTable, plan: CalibrationPlan) -> BandwidthProfile:
    """Selected exponent at every mesh point of [0,1] plus the cell widths.

    Exploits upward closure: exponents are swept from coarse to fine and a
    mesh point keeps the first admissible one; points never decided by
    j_max - 3 are vacuously admissible at coarser-than-checkable scales and
    receive j_max.
    """
    N = plan.mesh_count
    need = selector_margin(plan)
    if table.idx_lo > -need or table.idx_hi < N + need:
        raise OffMeshError("table does not cover the mesh of [0,1] plus the selector margin")
    out = slice(-table.idx_lo, N + 1 - table.idx_lo)
    j_hat = np.full(N + 1, plan.j_max, dtype=np.int64)
    undecided = np.ones(N + 1, dtype=bool)
    for j in plan.bandwidth_exponents:
        if not undecided.any():
            break
        if not _pairs(plan, j):
            j_hat[undecided] = j
            undecided[:] = False
            break
        ok = _admissible_mask(table, plan, j, out)
        newly = undecided & ok
        j_hat[newly] = j
        undecided &= ~ok
    h_loc = 2.0 ** -plan.u_n * np.exp2(-np.maximum(j_hat[:-1], j_hat[1:]).astype(float))
    return BandwidthProfile(
        plan=plan,
        j_hat=j_hat,
        h_loc=h_loc,
        half_id=table.half_id,
        split_token=table.split_token,
    )


def selection_criticals(table: KdeTable, plan: CalibrationPlan, j: int) -> np.ndarray:
    """Smallest threshold constant that would make exponent j admissible at
    each mesh point of [0,1] (so j is admissible at c2 iff critical <= c2).

    Lets calibration sweep candidate thresholds without re-running the
    selector: the pair deviations and spatial maxima are computed once.
    """
    N = plan.mesh_count
    need = selector_margin(plan)
    if table.idx_lo > -need or table.idx_hi < N + need:
        raise OffMeshError("table does not cover the mesh of [0,1] plus the selector margin")
    out = slice(-table.idx_lo, N + 1 - table.idx_lo)
    a = _ball_offset(plan, j)
    crit = np.zeros(N + 1)
    for m, mp in _pairs(plan, j):
        d = np.abs(table.row(m) - table.row(mp))
        sliding = maximum_filter1d(d, size=2 * a + 1, mode="nearest") if a > 0 else d
        scale = deviation_threshold(plan, m) / plan.c2
        crit = np.maximum(crit, sliding[out] / scale)
    return crit


def theoretical_window(density: AnalyticDensity, plan: CalibrationPlan, t: float) -> tuple[float, int]:
    """Window [j_bar - m_n, j_bar + 1] the selected exponent should land in,
    from the local-exponent oracle; j_bar approximates the rate-optimal
    bandwidth by the next smaller dyadic one."""
    beta = local_exponent_oracle(density, t, plan)
    h_bar = optimal_bandwidth(plan, beta)
    j_bar = math.floor(math.log2(1.0 / h_bar) + 1e-12) + 1
    return j_bar - plan.m_n, j_bar + 1


def profile_to_csv(profile: BandwidthProfile) -> str:
    """Columns k, t = k delta_n, j_hat, h_loc (h_loc blank at k = 0: cells
    are indexed by their right endpoints)."""
    lines = ["k,t,j_hat,h_loc"]
    for k in range(profile.plan.mesh_count + 1):
        h = "" if k == 0 else f"{profile.h_loc[k - 1]:.12g}"
        lines.append(f"{k},{k * profile.plan.delta_n:.12g},{profile.j_hat[k]},{h}")
    return "\n".join(lines) + "\n"
