"""Sample-size-derived constants, grids and normalizing sequences.

Two operating modes: "theory" enforces the constant constraints under which
the asymptotic guarantees are proved (and degenerates at desk-scale n),
"practical" substitutes documented desk-scale defaults and records every
departure as a warning on the plan instead of failing.
"""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass, replace
from typing import Optional

from .errors import (
    EmptyBandwidthGridError,
    InvalidConstantsError,
    InvalidExponentError,
    InvalidMeshError,
    InvalidProbabilityError,
)

# Selection threshold produced by scripts/calibrate_c2.py: smallest value on
# a 0.05 grid for which the selector keeps j <= j_min + 2 at >= 95% of mesh
# points for the uniform density (50 replications, n = 2^14, seed 20240601).
DEFAULT_C2 = 0.65

THEORY_MIN_N_HINT = "theory-mode constants degenerate below n ~ 1e10"


@dataclass(frozen=True)
class PlanParams:
    """User-facing knobs; everything else on a plan is derived from these."""

    n: int
    epsilon: float = 0.25
    beta_star_low: float = 0.95
    beta_star_high: Optional[int] = None  # filled from the kernel order
    L_star: float = 1.0
    M: float = 1.0 / 12.0
    c1: float = 3.0
    kappa1: Optional[float] = None  # practical default max(1/(2 beta_*), 1/2)
    kappa2: float = 1.0
    c2: float = DEFAULT_C2
    mode: str = "practical"

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"sample size must be >= 4, got {self.n!r}")
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError(f"epsilon must lie in (0,1), got {self.epsilon!r}")
        if not (0.0 < self.beta_star_low < 1.0):
            raise InvalidExponentError(
                f"beta_star_low must lie in (0,1), got {self.beta_star_low!r}"
            )
        if self.mode not in ("theory", "practical"):
            raise ValueError(f"mode must be 'theory' or 'practical', got {self.mode!r}")


@dataclass(frozen=True)
class CalibrationPlan:
    """Frozen record of every derived constant the pipeline consumes."""

    n: int
    epsilon: float
    beta_star_low: float
    beta_star_high: int
    L_star: float
    M: float
    c1: float
    kappa1: float
    kappa2: float
    c2: float
    mode: str
    n_tilde: int
    j_min: int
    j_max: int
    delta_n: float
    mesh_count: int
    u_n: float
    m_n: float
    a_n: float
    b_n: float
    c3: float
    warnings: tuple[str, ...] = ()

    @property
    def bandwidth_exponents(self) -> range:
        return range(self.j_min, self.j_max + 1)

    @property
    def log_n_tilde(self) -> float:
        return math.log(self.n_tilde)


def gumbel_quantile(p: float) -> float:
    """Quantile -log(-log p) of the standard Gumbel law exp(-exp(-x))."""
    if not (0.0 < p < 1.0):
        raise InvalidProbabilityError(f"probability must lie in (0,1), got {p!r}")
    return -math.log(-math.log(p))


def normalizers(delta_n: float, tv: float) -> tuple[float, float]:
    """Location/scale pair (a_n, b_n) for the maximum over 1/delta_n cells.

    a_n = c3 sqrt(-2 log delta), b_n = (3/c3){sqrt(-2 log delta)
    - [log(-log delta) + log 4 pi] / (2 sqrt(-2 log delta))}, c3 = sqrt2/tv.
    """
    if not (0.0 < delta_n < 1.0):
        raise InvalidMeshError(f"mesh width must lie in (0,1), got {delta_n!r}")
    if tv <= 0.0:
        raise InvalidMeshError(f"total variation must be positive, got {tv!r}")
    c3 = math.sqrt(2.0) / tv
    root = math.sqrt(-2.0 * math.log(delta_n))
    a_n = c3 * root
    b_n = (3.0 / c3) * (root - (math.log(-math.log(delta_n)) + math.log(4.0 * math.pi)) / (2.0 * root))
    return a_n, b_n


def theory_constraint_violations(params: PlanParams) -> list[str]:
    """The three constant constraints the asymptotics require."""
    out = []
    c1_floor = 2.0 / (params.beta_star_low * math.log(2.0))
    if not params.c1 > c1_floor:
        out.append(f"c1={params.c1:g} must exceed 2/(beta_* log 2)={c1_floor:g}")
    kappa1 = params.kappa1 if params.kappa1 is not None else max(1.0 / (2.0 * params.beta_star_low), 0.5)
    k1_floor = 1.0 / (2.0 * params.beta_star_low)
    if kappa1 < k1_floor:
        out.append(f"kappa1={kappa1:g} must be >= 1/(2 beta_*)={k1_floor:g}")
    k2_floor = params.c1 * math.log(2.0) + 4.0
    if not params.kappa2 > k2_floor:
        out.append(f"kappa2={params.kappa2:g} must exceed c1 log2 + 4={k2_floor:g}")
    return out


def derive_plan(params: PlanParams, kernel) -> CalibrationPlan:
    """Evaluate every derived quantity by direct formula in double precision."""
    beta_star_high = params.beta_star_high
    if beta_star_high is None:
        beta_star_high = kernel.order + 1
    elif beta_star_high != kernel.order + 1:
        raise InvalidConstantsError(
            f"beta_star_high={beta_star_high} inconsistent with kernel order+1={kernel.order + 1}"
        )
    kappa1 = params.kappa1 if params.kappa1 is not None else max(1.0 / (2.0 * params.beta_star_low), 0.5)

    plan_warnings: list[str] = []
    violations = theory_constraint_violations(replace(params, kappa1=kappa1))
    if params.mode == "theory":
        if violations:
            raise InvalidConstantsError("; ".join(violations))
    else:
        for v in violations:
            plan_warnings.append(f"theory constraint relaxed: {v}")
        if params.c1 <= 0 or kappa1 <= 0 or params.kappa2 <= 0:
            raise InvalidConstantsError("practical mode still requires positive c1, kappa1, kappa2")

    n_tilde = params.n // 2
    ln = math.log(n_tilde)
    j_min = math.ceil(max(2.0, math.log2(2.0 / params.epsilon)) - 1e-12)
    j_max = math.floor(math.log2(n_tilde / ln ** params.kappa2) + 1e-12)
    if j_max < j_min:
        if params.mode == "theory":
            raise EmptyBandwidthGridError(
                f"j_max={j_max} < j_min={j_min} at n={params.n} ({THEORY_MIN_N_HINT})"
            )
        plan_warnings.append(f"j_max={j_max} clamped up to j_min={j_min}")
        j_max = j_min

    inv_delta = math.ceil(
        2.0 ** (j_min / params.beta_star_low) * (ln / n_tilde) ** (-kappa1) * ln ** (2.0 / params.beta_star_low)
    )
    delta_n = 1.0 / inv_delta
    u_n = params.c1 * math.log(ln)
    a_n, b_n = normalizers(delta_n, kernel.tv)

    for w in plan_warnings:
        _warnings.warn(w, stacklevel=2)
    return CalibrationPlan(
        n=params.n,
        epsilon=params.epsilon,
        beta_star_low=params.beta_star_low,
        beta_star_high=beta_star_high,
        L_star=params.L_star,
        M=params.M,
        c1=params.c1,
        kappa1=kappa1,
        kappa2=params.kappa2,
        c2=params.c2,
        mode=params.mode,
        n_tilde=n_tilde,
        j_min=j_min,
        j_max=j_max,
        delta_n=delta_n,
        mesh_count=inv_delta,
        u_n=u_n,
        m_n=u_n / 2.0,
        a_n=a_n,
        b_n=b_n,
        c3=math.sqrt(2.0) / kernel.tv,
        warnings=tuple(plan_warnings),
    )


def optimal_bandwidth(plan: CalibrationPlan, beta: float) -> float:
    """Rate-optimal bandwidth 2^-j_min (log n~ / n~)^{1/(2 beta + 1)};
    the beta -> inf limit is 2^-j_min."""
    if beta != math.inf and beta <= 0.0:
        raise InvalidExponentError(f"exponent must be positive, got {beta!r}")
    if beta == math.inf:
        return 2.0 ** -plan.j_min
    rate = plan.log_n_tilde / plan.n_tilde
    return 2.0 ** -plan.j_min * rate ** (1.0 / (2.0 * beta + 1.0))


def band_halfwidth_quantile(plan: CalibrationPlan, alpha: float) -> float:
    """q_n(alpha) = sqrt(L*) q_{1-alpha/2} / a_n + b_n."""
    q = gumbel_quantile(1.0 - alpha / 2.0)
    return math.sqrt(plan.L_star) * q / plan.a_n + plan.b_n


# ---------------------------------------------------------------------------
# flat key=value serialization
# ---------------------------------------------------------------------------

_PARAM_FIELDS = (
    "n", "epsilon", "beta_star_low", "beta_star_high", "L_star", "M",
    "c1", "kappa1", "kappa2", "c2", "mode",
)
_DERIVED_FIELDS = (
    "n_tilde", "j_min", "j_max", "delta_n", "mesh_count", "u_n", "m_n", "a_n", "b_n", "c3",
)


def plan_to_text(plan: CalibrationPlan) -> str:
    lines = []
    for name in _PARAM_FIELDS + _DERIVED_FIELDS:
        v = getattr(plan, name)
        lines.append(f"{name}={v:.17g}" if isinstance(v, float) else f"{name}={v}")
    return "\n".join(lines) + "\n"


def plan_from_text(text: str, kernel) -> CalibrationPlan:
    """Rebuild a plan from its key=value block and re-derive; stored derived
    integers must match the re-derivation bit for bit."""
    kv: dict[str, str] = {}
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {i}: expected key=value, got {raw!r}")
        key, val = line.split("=", 1)
        key = key.strip()
        if key not in _PARAM_FIELDS + _DERIVED_FIELDS:
            raise ValueError(f"line {i}: unknown plan field {key!r}")
        kv[key] = val.strip()
    params = PlanParams(
        n=int(kv["n"]),
        epsilon=float(kv.get("epsilon", 0.25)),
        beta_star_low=float(kv.get("beta_star_low", 0.95)),
        beta_star_high=int(kv["beta_star_high"]) if "beta_star_high" in kv else None,
        L_star=float(kv.get("L_star", 1.0)),
        M=float(kv.get("M", 1.0 / 12.0)),
        c1=float(kv.get("c1", 3.0)),
        kappa1=float(kv["kappa1"]) if "kappa1" in kv else None,
        kappa2=float(kv.get("kappa2", 1.0)),
        c2=float(kv.get("c2", DEFAULT_C2)),
        mode=kv.get("mode", "practical"),
    )
    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")
        plan = derive_plan(params, kernel)
    for name in ("n_tilde", "j_min", "j_max", "mesh_count"):
        if name in kv and int(kv[name]) != getattr(plan, name):
            raise ValueError(
                f"stored {name}={kv[name]} disagrees with re-derived {getattr(plan, name)}"
            )
    return plan
