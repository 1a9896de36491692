"""Closed-form test densities: rough cosine-series members, tent and peak
triangles, their locally flattened perturbations, plus the smoothness,
admissibility and divergence oracles the experiments check against.

Every density is piecewise: each piece is a polynomial plus optionally a
lacunary cosine series sum_{k>=0} 2^{-k beta} cos(2^k pi (x - c)).  Values,
interval masses and antiderivatives are available in closed form per piece,
which is what makes exact convolution against piecewise-constant kernels
possible (naive quadrature cannot resolve the series' fine scales).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ConstructionOverlapError,
    CorruptDensityError,
    DivergenceInfiniteError,
    InvalidExponentError,
    InvalidToleranceError,
    OracleUnavailableError,
    QuadratureError,
    UnboundedConstantError,
)

DEFAULT_SERIES_TOL = 1e-12


# ---------------------------------------------------------------------------
# lacunary cosine series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeierstrassSpec:
    """Truncation policy for W_beta(x) = sum_k 2^{-k beta} cos(2^k pi x).

    The tail past depth N is exactly geometric, so the depth satisfying
    2^{-N beta} / (1 - 2^{-beta}) <= tol is sharp and cheap.
    """

    beta: float
    tol: float = DEFAULT_SERIES_TOL

    def __post_init__(self):
        if not (0.0 < self.beta <= 1.0):
            raise InvalidExponentError(f"series exponent must lie in (0, 1], got {self.beta!r}")
        if self.tol <= 0.0:
            raise InvalidToleranceError(f"truncation tolerance must be positive, got {self.tol!r}")

    @property
    def depth(self) -> int:
        # smallest N with 2^{-N beta}/(1 - 2^{-beta}) <= tol
        n = math.log2(1.0 / (self.tol * (1.0 - 2.0 ** -self.beta))) / self.beta
        return max(0, math.ceil(n))


def _phase_iter(x: np.ndarray, depth: int):
    """Yield r_k = (2^k x) mod 2 in (-2, 2) for k = 0..depth, exactly.

    Doubling a double is exact and the conditional +-2 reduction is exact
    (Sterbenz), so no precision is lost even at k ~ 140 where the naive
    product 2^k pi x would round away the entire phase.  This also avoids
    libm fmod, whose huge-quotient reduction is slow.
    """
    r = np.fmod(x, 2.0)
    for _ in range(depth + 1):
        yield r
        r = 2.0 * r
        r = np.where(r >= 2.0, r - 2.0, r)
        r = np.where(r < -2.0, r + 2.0, r)


def _series_sum(trig, amp: np.ndarray, xs: np.ndarray) -> np.ndarray:
    flat = xs.reshape(-1)
    out = np.zeros_like(flat)
    for k, r in enumerate(_phase_iter(flat, len(amp) - 1)):
        out += amp[k] * trig(np.pi * r)
    return out.reshape(xs.shape)


def weierstrass_eval(spec: WeierstrassSpec, x) -> np.ndarray | float:
    """Truncated series value with absolute error <= spec.tol."""
    xs = np.asarray(x, dtype=float)
    n = np.arange(spec.depth + 1, dtype=float)
    out = _series_sum(np.cos, np.exp2(-n * spec.beta), xs)
    return float(out) if np.isscalar(x) or xs.shape == () else out


def weierstrass_antideriv(spec: WeierstrassSpec, x) -> np.ndarray | float:
    """Antiderivative sum_k 2^{-k beta} sin(2^k pi x) / (2^k pi) of the
    truncated series; its own tail is geometric with ratio 2^{-(beta+1)}."""
    xs = np.asarray(x, dtype=float)
    n = np.arange(spec.depth + 1, dtype=float)
    out = _series_sum(np.sin, np.exp2(-n * (spec.beta + 1.0)) / math.pi, xs)
    return float(out) if np.isscalar(x) or xs.shape == () else out


def holder_quotient_bound(beta: float) -> float:
    """Certified bound on sup |W(x)-W(y)| / |x-y|^beta; +inf for beta >= 1."""
    if beta <= 0.0:
        raise InvalidExponentError(f"exponent must be positive, got {beta!r}")
    if beta >= 1.0:
        return math.inf
    return math.pi / (1.0 - 2.0 ** (beta - 1.0)) + 2.0 / (1.0 - 2.0 ** -beta)


def lw_constant(beta: float) -> float:
    """Certified upper bound for the beta-Hoelder norm of the series on any
    interval: quotient bound plus the sup bound 1/(1-2^{-beta})."""
    if beta <= 0.0:
        raise InvalidExponentError(f"exponent must be positive, got {beta!r}")
    if beta >= 1.0:
        raise UnboundedConstantError(
            f"norm constant diverges as beta -> 1 (denominator 1-2^(beta-1)); got {beta!r}"
        )
    return math.pi / (1.0 - 2.0 ** (beta - 1.0)) + 3.0 / (1.0 - 2.0 ** -beta)


# ---------------------------------------------------------------------------
# pieces and densities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Piece:
    """One maximal smooth-or-uniformly-rough segment of a density.

    value(x) = sum_i coeffs[i] x^i + sum_j scale_j W_beta(x - center_j)
    on [lo, hi].  kind is 'constant', 'affine', 'polynomial' or
    'weierstrass' (the latter whenever wterms is nonempty).
    """

    lo: float
    hi: float
    coeffs: tuple[float, ...] = (0.0,)
    wterms: tuple[tuple[float, float], ...] = ()

    @property
    def kind(self) -> str:
        if self.wterms:
            return "weierstrass"
        deg = self.degree
        return "constant" if deg == 0 else ("affine" if deg == 1 else f"polynomial({deg})")

    @property
    def degree(self) -> int:
        d = 0
        for i, c in enumerate(self.coeffs):
            if c != 0.0:
                d = i
        return d

    def value(self, x: np.ndarray, spec: Optional[WeierstrassSpec]) -> np.ndarray:
        out = np.polynomial.polynomial.polyval(x, np.asarray(self.coeffs))
        for scale, center in self.wterms:
            out = out + scale * weierstrass_eval(spec, x - center)
        return out

    def antideriv(self, x: np.ndarray, spec: Optional[WeierstrassSpec]) -> np.ndarray:
        acoef = np.zeros(len(self.coeffs) + 1)
        for i, c in enumerate(self.coeffs):
            acoef[i + 1] = c / (i + 1)
        out = np.polynomial.polynomial.polyval(x, acoef)
        for scale, center in self.wterms:
            out = out + scale * weierstrass_antideriv(spec, x - center)
        return out

    def deriv_coeffs(self, k: int) -> Optional[tuple[float, ...]]:
        """Coefficients of the k-th derivative of the polynomial part, or
        None if the piece carries series terms (nowhere differentiable)."""
        if self.wterms and k >= 1:
            return None
        c = list(self.coeffs)
        for _ in range(k):
            c = [i * c[i] for i in range(1, len(c))]
            if not c:
                c = [0.0]
        return tuple(c)


@dataclass(frozen=True)
class BudgetEntry:
    """Certified bound on the order-capped Hoelder norm on a window."""

    beta: float
    bound: float
    window: tuple[float, float]


@dataclass(frozen=True)
class AnalyticDensity:
    name: str
    pieces: tuple[Piece, ...]
    support: tuple[float, float]
    sup_bound: float
    kinks: tuple[float, ...]
    lipschitz_budget: tuple[BudgetEntry, ...] = ()
    wspec: Optional[WeierstrassSpec] = None
    homogeneous_exponent: Optional[float] = None  # set for unperturbed series members

    def __post_init__(self):
        edges = [p.lo for p in self.pieces] + [self.pieces[-1].hi]
        if any(b <= a for a, b in zip(edges[:-1], edges[1:])):
            raise ValueError("pieces must be ordered and non-degenerate")
        object.__setattr__(self, "_edges", np.asarray(edges))
        masses = [
            float(p.antideriv(np.array([p.hi]), self.wspec)[0] - p.antideriv(np.array([p.lo]), self.wspec)[0])
            for p in self.pieces
        ]
        object.__setattr__(self, "_cum_mass", np.concatenate([[0.0], np.cumsum(masses)]))

    @property
    def is_rough(self) -> bool:
        return any(p.wterms for p in self.pieces)

    def _piece_index(self, x: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self._edges, x, side="right") - 1
        return np.clip(idx, 0, len(self.pieces) - 1)

    def pdf(self, x) -> np.ndarray | float:
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(xs)
        inside = (xs >= self.support[0]) & (xs <= self.support[1])
        if inside.any():
            xi = xs[inside]
            idx = self._piece_index(xi)
            vals = np.empty_like(xi)
            for i, piece in enumerate(self.pieces):
                m = idx == i
                if m.any():
                    vals[m] = piece.value(xi[m], self.wspec)
            out[inside] = vals
        return float(out[0]) if np.isscalar(x) or np.asarray(x).shape == () else out

    def mass_below(self, x) -> np.ndarray | float:
        """Exact integral of the density over (-inf, x]."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        clipped = np.clip(xs, self.support[0], self.support[1])
        idx = self._piece_index(clipped)
        out = np.empty_like(clipped)
        for i, piece in enumerate(self.pieces):
            m = idx == i
            if m.any():
                partial = piece.antideriv(clipped[m], self.wspec) - piece.antideriv(
                    np.array([piece.lo]), self.wspec
                )
                out[m] = self._cum_mass[i] + partial
        return float(out[0]) if np.isscalar(x) or np.asarray(x).shape == () else out

    def mass_between(self, a, b, tol: Optional[float] = None) -> np.ndarray | float:
        return self.mass_below(b) - self.mass_below(a)

    def total_mass(self) -> float:
        return float(self._cum_mass[-1])

    # -- per-cell extrema ---------------------------------------------------

    def _poly_candidates(self) -> np.ndarray:
        """Interior stationary points of polynomial pieces (degree <= 3)."""
        cands = []
        for p in self.pieces:
            d = p.deriv_coeffs(1)
            if d is None:
                continue
            if len(d) == 2 and d[1] != 0.0:  # quadratic piece
                r = -d[0] / d[1]
                if p.lo < r < p.hi:
                    cands.append(r)
            elif len(d) >= 3:
                roots = np.roots(list(reversed(d)))
                for r in roots:
                    if abs(r.imag) < 1e-12 and p.lo < r.real < p.hi:
                        cands.append(float(r.real))
        return np.asarray(cands)

    def cells_extrema(self, edges: np.ndarray, scan: int = 2048) -> tuple[np.ndarray, np.ndarray]:
        """(inf, sup) of the density over each cell [edges[k], edges[k+1]].

        Piecewise-polynomial members are handled in closed form (endpoint,
        kink and stationary-point values); rough members fall back to a
        dense per-cell scan of `scan` points.
        """
        edges = np.asarray(edges, dtype=float)
        if self.is_rough:
            ncell = len(edges) - 1
            lo = np.empty(ncell)
            hi = np.empty(ncell)
            frac = np.linspace(0.0, 1.0, scan)
            block = max(1, (1 << 19) // scan)
            for start in range(0, ncell, block):
                stop = min(start + block, ncell)
                left = edges[start:stop, None]
                width = (edges[start + 1:stop + 1] - edges[start:stop])[:, None]
                vals = self.pdf((left + width * frac[None, :]).ravel()).reshape(stop - start, scan)
                lo[start:stop] = vals.min(axis=1)
                hi[start:stop] = vals.max(axis=1)
            return lo, hi
        vals = self.pdf(edges)
        lo = np.minimum(vals[:-1], vals[1:])
        hi = np.maximum(vals[:-1], vals[1:])
        special = np.concatenate([np.asarray(self.kinks, dtype=float), self._poly_candidates()])
        special = special[(special > edges[0]) & (special < edges[-1])]
        if special.size:
            cell = np.clip(np.searchsorted(edges, special, side="right") - 1, 0, len(edges) - 2)
            v = self.pdf(special)
            for c, val in zip(cell, v):
                lo[c] = min(lo[c], val)
                hi[c] = max(hi[c], val)
        return lo, hi

    def interval_extrema(self, a: float, b: float, scan: int = 2048) -> tuple[float, float]:
        lo, hi = self.cells_extrema(np.array([a, b]), scan=scan)
        return float(lo[0]), float(hi[0])


# ---------------------------------------------------------------------------
# zoo constructors
# ---------------------------------------------------------------------------

def make_weierstrass_composite(t: float, beta: float, tol: float = DEFAULT_SERIES_TOL) -> AnalyticDensity:
    """Rough test density: 1/6 + ((1-2^-beta)/12) W_beta(x - t) on |x-t| <= 2,
    linear flanks down to zero on (2, 10/3], bounded below by 1/12 on B(t,2)."""
    if not (0.0 < beta < 1.0):
        raise InvalidExponentError(f"composite exponent must lie in (0,1), got {beta!r}")
    spec = WeierstrassSpec(beta, tol)
    cw = (1.0 - 2.0 ** -beta) / 12.0
    lo, hi = t - 10.0 / 3.0, t + 10.0 / 3.0
    pieces = (
        # 1/4 + (3/16)(x - t + 2)
        Piece(lo, t - 2.0, coeffs=(0.25 + (3.0 / 16.0) * (2.0 - t), 3.0 / 16.0)),
        Piece(t - 2.0, t + 2.0, coeffs=(1.0 / 6.0,), wterms=((cw, t),)),
        Piece(t + 2.0, hi, coeffs=(0.25 - (3.0 / 16.0) * (-t - 2.0), -3.0 / 16.0)),
    )
    budget = (
        BudgetEntry(beta, 0.25 + cw * holder_quotient_bound(beta), (t - 2.0, t + 2.0)),
    )
    return AnalyticDensity(
        name=f"weierstrass:{beta:g}:{t:g}",
        pieces=pieces,
        support=(lo, hi),
        sup_bound=0.25,
        kinks=(lo, t - 2.0, t + 2.0, hi),
        lipschitz_budget=budget,
        wspec=spec,
        homogeneous_exponent=beta,
    )


def make_triangular_hypothesis(t: float) -> AnalyticDensity:
    """Tent density 1/4 - |x-t|/16 on |x-t| <= 4."""
    pieces = (
        Piece(t - 4.0, t, coeffs=(0.25 - t / 16.0, 1.0 / 16.0)),
        Piece(t, t + 4.0, coeffs=(0.25 + t / 16.0, -1.0 / 16.0)),
    )
    return AnalyticDensity(
        name=f"tent:{t:g}",
        pieces=pieces,
        support=(t - 4.0, t + 4.0),
        sup_bound=0.25,
        kinks=(t - 4.0, t, t + 4.0),
        lipschitz_budget=(BudgetEntry(1.0, 5.0 / 16.0, (t - 4.0, t + 4.0)),),
    )


def make_peak_triangular() -> AnalyticDensity:
    """Sharp triangle on [0,1]: 4x up to 1/2, then 4(1-x)."""
    pieces = (
        Piece(0.0, 0.5, coeffs=(0.0, 4.0)),
        Piece(0.5, 1.0, coeffs=(4.0, -4.0)),
    )
    return AnalyticDensity(
        name="peak",
        pieces=pieces,
        support=(0.0, 1.0),
        sup_bound=2.0,
        kinks=(0.0, 0.5, 1.0),
        lipschitz_budget=(BudgetEntry(1.0, 6.0, (0.0, 1.0)),),
    )


def make_uniform(lo: float = 0.0, hi: float = 1.0) -> AnalyticDensity:
    v = 1.0 / (hi - lo)
    return AnalyticDensity(
        name=f"uniform:{lo:g}:{hi:g}",
        pieces=(Piece(lo, hi, coeffs=(v,)),),
        support=(lo, hi),
        sup_bound=v,
        kinks=(lo, hi),
        lipschitz_budget=(BudgetEntry(math.inf, v, (lo, hi)),),
    )


def _split_piece(pieces: list[Piece], x: float) -> list[Piece]:
    out = []
    for p in pieces:
        if p.lo < x < p.hi:
            out.append(replace(p, hi=x))
            out.append(replace(p, lo=x))
        else:
            out.append(p)
    return out


def _merge_pieces(pieces: list[Piece]) -> list[Piece]:
    """Merge adjacent pieces with identical content so that piece
    boundaries are exactly the non-smooth points."""
    out = [pieces[0]]
    for p in pieces[1:]:
        last = out[-1]
        if p.coeffs == last.coeffs and p.wterms == last.wterms and p.lo == last.hi:
            out[-1] = replace(last, hi=p.hi)
        else:
            out.append(p)
    return out


def perturbation_radius(n: int, beta: float) -> float:
    """Bump radius (1/4) n^{-1/(2 beta + 1)} used by the perturbed pair."""
    return 0.25 * float(n) ** (-1.0 / (2.0 * beta + 1.0))


def shrink_factor(beta: float) -> float:
    """Radius shrink (2 L_W(beta))^{-1/beta} for the second perturbation."""
    return (2.0 * lw_constant(beta)) ** (-1.0 / beta)


def make_perturbed(base: AnalyticDensity, n: int, beta: float, variant: str) -> AnalyticDensity:
    """Add the canceling bump pair (+q at t+9/4, -q at t) to a composite or
    tent base; the ball around the base center comes out exactly constant.

    Variant "one" uses the bump radius (1/4) n^{-1/(2 beta+1)}; variant
    "two" shrinks it, by (2 L_W(beta))^{-1/beta} for series bases and by
    1/2 for the tent.  Masses of the two bumps cancel by construction.
    """
    if variant not in ("one", "two"):
        raise ValueError(f"variant must be 'one' or 'two', got {variant!r}")
    if n < 4:
        raise ValueError(f"sample size must be >= 4, got {n!r}")
    g = perturbation_radius(n, beta)
    tag = "1" if variant == "one" else "2"

    if base.wspec is not None:
        if base.homogeneous_exponent is None or abs(beta - base.wspec.beta) > 1e-12:
            raise InvalidExponentError(
                f"exponent {beta!r} does not match the base construction {base.wspec.beta!r}"
            )
        r = g if variant == "one" else shrink_factor(beta) * g
        if r >= 2.0:
            raise ConstructionOverlapError(f"bump radius {r!r} >= 2 overlaps the construction")
        if r > 0.25:
            raise ConstructionOverlapError(f"bump radius {r!r} straddles the construction joints")
        t = 0.5 * (base.support[0] + base.support[1])
        a = t + 9.0 / 4.0
        spec = base.wspec
        cw = (1.0 - 2.0 ** -beta) / 12.0
        w_at_r = float(weierstrass_eval(spec, r))
        pieces = list(base.pieces)
        for x in (t - r, t + r, a - r, a + r):
            pieces = _split_piece(pieces, x)
        new_pieces = []
        for p in pieces:
            mid = 0.5 * (p.lo + p.hi)
            if t - r <= mid <= t + r:
                # base 1/6 + cw W(x-t) minus bump cw (W(x-t) - W(r)): constant
                new_pieces.append(Piece(p.lo, p.hi, coeffs=(1.0 / 6.0 + cw * w_at_r,)))
            elif a - r <= mid <= a + r:
                coeffs = list(p.coeffs)
                coeffs[0] = coeffs[0] - cw * w_at_r
                new_pieces.append(Piece(p.lo, p.hi, coeffs=tuple(coeffs), wterms=p.wterms + ((cw, a),)))
            else:
                new_pieces.append(p)
        new_pieces = _merge_pieces(new_pieces)
        ball_value = 1.0 / 6.0 + cw * w_at_r
        budget = base.lipschitz_budget + (BudgetEntry(math.inf, ball_value, (t - r, t + r)),)
        return AnalyticDensity(
            name=f"perturbed{tag}:{beta:g}:{n}",
            pieces=tuple(new_pieces),
            support=base.support,
            sup_bound=base.sup_bound + 2.0 * cw * (1.0 / (1.0 - 2.0 ** -beta)),
            kinks=tuple(sorted(set(base.kinks) | {t - r, t + r, a - r, a + r})),
            lipschitz_budget=budget,
            wspec=spec,
            homogeneous_exponent=None,
        )

    # tent base: bump (1/16)(r - |x-a|)_+, variant "two" halves the radius
    if abs(beta - 1.0) > 1e-12:
        raise InvalidExponentError(f"tent perturbations require beta = 1, got {beta!r}")
    r = g if variant == "one" else 0.5 * g
    if r >= 2.0:
        raise ConstructionOverlapError(f"bump radius {r!r} >= 2 overlaps the construction")
    t = 0.5 * (base.support[0] + base.support[1])
    a = t + 9.0 / 4.0
    pieces = list(base.pieces)
    for x in (t - r, t + r, a - r, a, a + r):
        pieces = _split_piece(pieces, x)
    new_pieces = []
    for p in pieces:
        mid = 0.5 * (p.lo + p.hi)
        c = list(p.coeffs) + [0.0] * (2 - len(p.coeffs))
        if t - r <= mid <= t + r:
            # subtract (1/16)(r - |x-t|): flattens the kink exactly
            new_pieces.append(Piece(p.lo, p.hi, coeffs=(0.25 - r / 16.0,)))
        elif a - r <= mid <= a:
            new_pieces.append(Piece(p.lo, p.hi, coeffs=(c[0] + (r - a) / 16.0, c[1] + 1.0 / 16.0)))
        elif a <= mid <= a + r:
            new_pieces.append(Piece(p.lo, p.hi, coeffs=(c[0] + (r + a) / 16.0, c[1] - 1.0 / 16.0)))
        else:
            new_pieces.append(p)
    new_pieces = _merge_pieces(new_pieces)
    budget = base.lipschitz_budget + (BudgetEntry(math.inf, 0.25 - r / 16.0, (t - r, t + r)),)
    return AnalyticDensity(
        name=f"tent-perturbed{tag}:{t:g}:{n}",
        pieces=tuple(new_pieces),
        support=base.support,
        sup_bound=base.sup_bound,
        kinks=tuple(sorted((set(base.kinks) - {t}) | {t - r, t + r, a - r, a, a + r})),
        lipschitz_budget=budget,
    )


def density_from_name(name: str) -> AnalyticDensity:
    """Resolve the CLI density names.

    weierstrass:<beta>:<t>, perturbed1:<beta>:<n>, perturbed2:<beta>:<n>
    (perturbations of the composite centered at t=1/2), tent:<t>, peak.
    """
    parts = name.split(":")
    kind = parts[0]
    try:
        if kind == "peak" and len(parts) == 1:
            return make_peak_triangular()
        if kind == "tent" and len(parts) == 2:
            return make_triangular_hypothesis(float(parts[1]))
        if kind == "weierstrass" and len(parts) == 3:
            return make_weierstrass_composite(float(parts[2]), float(parts[1]))
        if kind in ("perturbed1", "perturbed2") and len(parts) == 3:
            beta = float(parts[1])
            n = int(parts[2])
            base = make_weierstrass_composite(0.5, beta)
            return make_perturbed(base, n, beta, "one" if kind == "perturbed1" else "two")
    except (InvalidExponentError, ConstructionOverlapError, ValueError) as exc:
        raise KeyError(f"cannot build density {name!r}: {exc}") from exc
    raise KeyError(f"unknown density name {name!r}")


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def sample(density: AnalyticDensity, m: int, seed: int, batch: int = 8192) -> np.ndarray:
    """m i.i.d. draws by rejection with a uniform proposal over the support.

    Stream order (fixed, part of the determinism contract): batches of
    `batch` proposals; within a batch all positions are drawn first, then
    all acceptance thresholds; accepted points keep proposal order and the
    first m acceptances are returned.
    """
    if m < 1:
        raise ValueError(f"sample count must be >= 1, got {m!r}")
    rng = np.random.Generator(np.random.PCG64(seed))
    lo, hi = density.support
    out = []
    got = 0
    while got < m:
        xs = lo + (hi - lo) * rng.random(batch)
        us = rng.random(batch)
        fx = density.pdf(xs)
        if np.any(fx > density.sup_bound * (1.0 + 1e-12)):
            bad = float(fx.max())
            raise CorruptDensityError(
                f"density {density.name} exceeds its sup bound: {bad!r} > {density.sup_bound!r}"
            )
        acc = xs[us * density.sup_bound < fx]
        out.append(acc)
        got += acc.size
    return np.concatenate(out)[:m]


# ---------------------------------------------------------------------------
# order-capped Hoelder norm machinery
# ---------------------------------------------------------------------------

def _strict_floor(b: float) -> int:
    """Largest integer strictly below b (so _strict_floor(2.0) == 1)."""
    f = math.floor(b)
    return f - 1 if f == b else f


def _poly_sup_on(coeffs: Sequence[float], lo: float, hi: float) -> float:
    cands = [lo, hi]
    d = [i * coeffs[i] for i in range(1, len(coeffs))]
    if len(d) == 2 and d[1] != 0.0:
        r = -d[0] / d[1]
        if lo < r < hi:
            cands.append(r)
    elif len(d) > 2:
        for r in np.roots(list(reversed(d))):
            if abs(r.imag) < 1e-12 and lo < r.real < hi:
                cands.append(float(r.real))
    vals = [abs(np.polynomial.polynomial.polyval(x, np.asarray(coeffs))) for x in cands]
    return float(max(vals))


def _derivative_sup(density: AnalyticDensity, k: int, window: tuple[float, float]) -> float:
    """Sup of |p^(k)| over the window from closed forms; inf if some piece
    in the window has no k-th derivative (rough pieces, k >= 1)."""
    wlo, whi = window
    sup = 0.0
    for p in density.pieces:
        lo, hi = max(p.lo, wlo), min(p.hi, whi)
        if lo >= hi:
            continue
        dc = p.deriv_coeffs(k)
        if dc is None:
            return math.inf
        if k == 0 and p.wterms:
            grid = np.linspace(lo, hi, 513)
            sup = max(sup, float(np.abs(p.value(grid, density.wspec)).max()))
        else:
            sup = max(sup, _poly_sup_on(dc, lo, hi))
    return sup


def _derivative_grid(density: AnalyticDensity, k: int, xs: np.ndarray) -> Optional[np.ndarray]:
    out = np.empty_like(xs)
    idx = density._piece_index(xs)
    for i, p in enumerate(density.pieces):
        m = idx == i
        if not m.any():
            continue
        if k == 0:
            out[m] = p.value(xs[m], density.wspec)
        else:
            dc = p.deriv_coeffs(k)
            if dc is None:
                return None
            out[m] = np.polynomial.polynomial.polyval(xs[m], np.asarray(dc))
    return out


def holder_norm_estimate(
    density: AnalyticDensity,
    beta: float,
    beta_star: int,
    window: tuple[float, float],
    grid_points: int = 512,
) -> float:
    """Grid estimate of the order-capped Hoelder norm on the window.

    Derivative sup norms come from closed forms of the pieces; the quotient
    uses all pairs of a uniform grid, so the result is a certified lower
    bound of the true norm (and equals +inf whenever the norm provably is,
    e.g. differentiation order >= 1 requested on a rough piece).
    """
    wlo, whi = window
    if not wlo < whi:
        raise ValueError(f"degenerate window {window!r}")
    if beta != math.inf and beta <= 0.0:
        raise InvalidExponentError(f"exponent must be positive, got {beta!r}")
    kstar = beta_star - 1 if beta == math.inf else _strict_floor(min(beta, float(beta_star)))
    total = 0.0
    for k in range(kstar + 1):
        s = _derivative_sup(density, k, window)
        if math.isinf(s):
            return math.inf
        total += s
    xs = np.linspace(wlo, whi, grid_points)
    dvals = _derivative_grid(density, kstar, xs)
    if dvals is None:
        return math.inf
    if beta == math.inf:
        # quotient exponent is +inf: zero iff the top derivative is constant
        return total if float(np.ptp(dvals)) <= 1e-12 else math.inf
    diff = np.abs(dvals[:, None] - dvals[None, :])
    dist = np.abs(xs[:, None] - xs[None, :])
    iu = np.triu_indices(grid_points, k=1)
    quot = diff[iu] / dist[iu] ** (beta - kstar)
    return total + float(quot.max())


def certified_norm_bound(
    density: AnalyticDensity, beta: float, beta_star: int, window: tuple[float, float]
) -> Optional[float]:
    """Stored-budget bound for the order-capped norm on the window, if any.

    Norm monotonicity in the exponent (windows of length <= 1) lets an
    entry at a larger exponent certify all smaller ones.
    """
    wlo, whi = window
    best = None
    for entry in density.lipschitz_budget:
        if entry.window[0] <= wlo and whi <= entry.window[1]:
            applies = entry.beta == beta or (
                beta != math.inf and beta <= entry.beta and (whi - wlo) <= 1.0
            )
            if applies and (best is None or entry.bound < best):
                best = entry.bound
    return best


# ---------------------------------------------------------------------------
# local regularity oracle and admissibility
# ---------------------------------------------------------------------------

def local_exponent_oracle(density: AnalyticDensity, t: float, plan) -> float:
    """Sample-size-dependent local smoothness exponent at t.

    For piecewise-polynomial members this is geometric: with d the distance
    from t to the nearest kink, the exponent is +inf once d reaches the
    coarsest bandwidth 2^-j_min, 1 when the kink is closer than the
    Lipschitz-optimal bandwidth, and otherwise the unique beta whose
    optimal bandwidth equals d, capped at the kernel-order ceiling.
    Unperturbed series members are uniformly rough: their construction
    exponent is returned directly.
    """
    if density.homogeneous_exponent is not None:
        return density.homogeneous_exponent
    if density.is_rough:
        raise OracleUnavailableError(
            f"no closed-form local exponent for perturbed rough density {density.name}"
        )
    kinks = np.asarray(density.kinks, dtype=float)
    d = float(np.abs(kinks - t).min())
    h_inf = 2.0 ** -plan.j_min
    if d >= h_inf:
        return math.inf
    rate = math.log(plan.n_tilde) / plan.n_tilde
    h1 = h_inf * rate ** (1.0 / 3.0)
    if d <= h1:
        return 1.0
    # solve 2^-j_min rate^{1/(2 beta + 1)} = d
    beta = 0.5 * (math.log(rate) / math.log(d / h_inf) - 1.0)
    return min(beta, float(plan.beta_star_high))


def dyadic_ladder(u: float, j_max: int) -> list[float]:
    """Dyadic g with g <= u/8 and g >= 2^-j_max, largest first."""
    out = []
    j = max(0, math.ceil(math.log2(8.0 / u) - 1e-9))
    while 2.0 ** -j >= 2.0 ** -j_max - 1e-300:
        if 2.0 ** -j <= u / 8.0 + 1e-15:
            out.append(2.0 ** -j)
        j += 1
        if j > j_max:
            break
    return out


def admissibility_check(
    density: AnalyticDensity,
    plan,
    kernel,
    t: float,
    h: float,
    beta: float,
    grid_points: int = 512,
) -> bool:
    """Check the two-sided local self-similarity condition at (t, h, beta).

    True iff for u = h or u = 2h the order-capped norm on B(t, u) stays
    within the budget and the kernel bias on B(t, u-g) stays above
    g^beta / log n for every dyadic g <= u/8 down to the grid floor
    2^-j_max (a finite truncation of the full dyadic ladder).
    """
    from .kernels import sup_abs_bias  # local import to avoid a cycle

    j = -math.log2(h)
    if abs(j - round(j)) > 1e-9 or round(j) < plan.j_min:
        raise InvalidExponentError(f"bandwidth {h!r} is not dyadic with exponent >= j_min")
    valid = beta == math.inf or (plan.beta_star_low - 1e-12 <= beta <= plan.beta_star_high + 1e-12)
    if not valid:
        raise InvalidExponentError(
            f"exponent {beta!r} outside [{plan.beta_star_low}, {plan.beta_star_high}] u {{inf}}"
        )
    logn = math.log(plan.n)
    for u in (h, 2.0 * h):
        bound = certified_norm_bound(density, beta, plan.beta_star_high, (t - u, t + u))
        if bound is None:
            bound = holder_norm_estimate(
                density, beta, plan.beta_star_high, (t - u, t + u), grid_points
            )
        if bound > plan.L_star:
            continue
        ok = True
        if beta != math.inf:
            for g in dyadic_ladder(u, plan.j_max):
                bias = sup_abs_bias(kernel, density, g, (t - (u - g), t + (u - g)))
                if bias < g ** beta / logn:
                    ok = False
                    break
        if ok:
            return True
    return False


# ---------------------------------------------------------------------------
# Kullback-Leibler divergence
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _kl_integrand(p: AnalyticDensity, q: AnalyticDensity, nodes: np.ndarray) -> np.ndarray:
    pv = np.asarray(p.pdf(nodes))
    qv = np.asarray(q.pdf(nodes))
    if np.any((pv > 1e-13) & (qv <= 0.0)):
        raise DivergenceInfiniteError("mass of p where q vanishes: divergence is infinite")
    f = np.zeros_like(pv)
    pos = (pv > 0.0) & (qv > 0.0)
    f[pos] = pv[pos] * np.log(pv[pos] / qv[pos])
    return f


def _kl_segment_gl(p, q, lo: float, hi: float, tol: float) -> float:
    """Composite Gauss-Legendre with 3x panel refinement; handles smooth and
    uniformly rough integrands (panel errors cancel across the mesh)."""
    def quad(panels: int) -> float:
        edges = np.linspace(lo, hi, panels + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1:] - edges[:-1])
        nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
        f = _kl_integrand(p, q, nodes).reshape(-1, len(_GL_NODES))
        return float((half[:, None] * _GL_WEIGHTS[None, :] * f).sum())

    panels = 1
    prev = quad(panels)
    while True:
        panels *= 3
        cur = quad(panels)
        if abs(cur - prev) <= tol:
            return cur
        if panels > 300_000:
            raise QuadratureError(
                f"KL quadrature did not reach tol={tol:g} on [{lo:g},{hi:g}]"
            )
        prev = cur


def _kl_segment_tanh_sinh(p, q, lo: float, hi: float, tol: float) -> float:
    """Doubly-exponential rule for segments with an endpoint log singularity
    (a density vanishing at a support edge under the other's mass)."""
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    t_max = 4.0

    def quad(h: float) -> float:
        k = np.arange(-math.floor(t_max / h), math.floor(t_max / h) + 1)
        t = k * h
        s = 0.5 * math.pi * np.sinh(t)
        u = np.tanh(s)
        w = h * 0.5 * math.pi * np.cosh(t) / np.cosh(s) ** 2
        gap = half * (1.0 - np.abs(u))
        keep = gap > 1e-15 * max(1.0, abs(mid))  # nodes indistinguishable from the edge add ~0
        nodes = mid + half * u[keep]
        return float(half * (w[keep] * _kl_integrand(p, q, nodes)).sum())

    h = 0.5
    prev = quad(h)
    for _ in range(10):
        h /= 2.0
        cur = quad(h)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    raise QuadratureError(f"KL quadrature did not reach tol={tol:g} on [{lo:g},{hi:g}]")


def _kl_segment(p: AnalyticDensity, q: AnalyticDensity, lo: float, hi: float, tol: float) -> float:
    singular = False
    for e in (lo, hi):
        pe = float(np.asarray(p.pdf(np.array([e])))[0])
        qe = float(np.asarray(q.pdf(np.array([e])))[0])
        if qe < 1e-9 and pe > 1e-6:
            singular = True
    if singular:
        return _kl_segment_tanh_sinh(p, q, lo, hi, tol)
    return _kl_segment_gl(p, q, lo, hi, tol)


def kl_divergence(p: AnalyticDensity, q: AnalyticDensity, tol: float = 1e-8) -> float:
    """int p log(p/q) over {q > 0} by kink-split adaptive quadrature.

    Raises DivergenceInfiniteError when the quadrature grid detects p-mass
    where q vanishes.
    """
    if tol <= 0.0:
        raise InvalidToleranceError(f"tolerance must be positive, got {tol!r}")
    lo, hi = p.support
    probe = np.linspace(lo, hi, 4097)
    pv = np.asarray(p.pdf(probe))
    qv = np.asarray(q.pdf(probe))
    # a breach needs q to vanish on adjacent probe points: isolated zeros
    # (support endpoints, kink touchdowns) are null sets
    bad = (pv > 1e-12) & (qv <= 0.0)
    if np.any(bad[:-1] & bad[1:]):
        raise DivergenceInfiniteError("support of p leaves {q > 0}: divergence is infinite")
    cuts = sorted(
        {lo, hi}
        | {c for c in p.kinks if lo < c < hi}
        | {c for c in q.kinks if lo < c < hi}
    )
    total = 0.0
    seg_tol = tol / (2.0 * (len(cuts) - 1))
    for a, b in zip(cuts[:-1], cuts[1:]):
        total += _kl_segment(p, q, a, b, seg_tol)
    return total
