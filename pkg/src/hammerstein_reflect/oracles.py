"""Brute-force oracles backing the closed forms in :mod:`bounds`.

Nothing here uses the closed forms: envelopes come from dense grids in z
augmented with both one-sided limits at the diagonals z = +-y, and integral
constants come from Gauss-Legendre quadrature split at every kernel
breakpoint, followed by a bounded scalar polish of the grid extremum.

``g`` arguments are optional vectorized weights s -> g(s); ``None`` means 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from .bounds import StripInterval
from .kernel import ProblemParams, Region, branch_value, kernel_eval
from .quadrature import _NODES, _WEIGHTS, integrate

Weight = Optional[Callable[[np.ndarray], np.ndarray]]

DEFAULT_DENSITY = 4001
DEFAULT_T_POINTS = 2001
QUAD_TOL = 1e-10


@dataclass(frozen=True)
class OracleResult:
    value: float
    argument: float
    grid_points: int


def _weight(g: Weight, s: np.ndarray) -> np.ndarray:
    if g is None:
        return np.ones_like(s)
    return np.asarray(g(s), dtype=float) * np.ones_like(s)


def kernel_breakpoints(params: ProblemParams, t: float, extra=()) -> list[float]:
    """Points in s where k(t, .) or |k(t, .)| fails to be smooth."""
    T, w = params.T, params.omega
    pts = {t, -t, *extra}
    q = math.pi / (4 * abs(w))
    # zeros of the s-dependent factors of the product form
    pts.update({-q, q, T - q, q - T})
    return sorted(p for p in pts if -T < p < T)


def quad_strip_integral(params: ProblemParams, strip: StripInterval, t: float, g: Weight = None) -> float:
    """Integral of k(t, s) g(s) over s in [aT, bT] by adaptive quadrature."""
    lo, hi = strip.scaled(params.T)
    fn = lambda s: kernel_eval(params, t, s) * _weight(g, s)  # noqa: E731
    return integrate(fn, lo, hi, kernel_breakpoints(params, t), tol=QUAD_TOL).value


def quad_abs_integral(params: ProblemParams, t: float, g: Weight = None) -> float:
    """Integral of |k(t, s)| g(s) over s in [-T, T]."""
    fn = lambda s: np.abs(kernel_eval(params, t, s)) * _weight(g, s)  # noqa: E731
    return integrate(fn, -params.T, params.T, kernel_breakpoints(params, t), tol=QUAD_TOL).value


def quad_kernel_integral(params: ProblemParams, t: float, g: Weight = None) -> float:
    """Integral of k(t, s) g(s) over s in [-T, T]."""
    fn = lambda s: kernel_eval(params, t, s) * _weight(g, s)  # noqa: E731
    return integrate(fn, -params.T, params.T, kernel_breakpoints(params, t), tol=QUAD_TOL).value


def _scan(params, ts, lo, hi, integrand, extra=()):
    """Fixed piecewise 16-point rule for many t at once (coarse search only).

    Each row uses the same breakpoints as the adaptive routine, so every
    piece carries a smooth trigonometric integrand.
    """
    rows = []
    for t in ts:
        cuts = [lo, *(p for p in kernel_breakpoints(params, t, extra) if lo < p < hi), hi]
        rows.append(cuts)
    width = max(len(r) for r in rows)
    cuts = np.array([r + [r[-1]] * (width - len(r)) for r in rows])  # pad with empty pieces
    left, right = cuts[:, :-1], cuts[:, 1:]
    half = 0.5 * (right - left)
    x = left[..., None] + half[..., None] * (_NODES + 1.0)
    tt = np.broadcast_to(np.asarray(ts, dtype=float)[:, None, None], x.shape)
    vals = integrand(tt, x)
    return np.einsum("ijk,k,ij->i", vals, _WEIGHTS, half)


def _polish(fn, grid, values, i, sense):
    """Refine a grid extremum of a smooth function on the neighbouring cell."""
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    best_x, best = float(grid[i]), float(fn(grid[i]))
    if hi > lo:
        sign = -1.0 if sense == "max" else 1.0
        res = optimize.minimize_scalar(
            lambda x: sign * fn(x), bounds=(lo, hi), method="bounded", options={"xatol": 1e-11}
        )
        cand = sign * float(res.fun)
        if (sense == "max" and cand > best) or (sense == "min" and cand < best):
            best_x, best = float(res.x), cand
    return best_x, best


def sup_abs_integral_oracle(params: ProblemParams, g: Weight = None, n_t: int = DEFAULT_T_POINTS) -> OracleResult:
    """sup over t of the integral of |k(t, s)| g(s) ds."""
    T = params.T
    ts = np.linspace(-T, T, n_t)
    integrand = lambda t, s: np.abs(kernel_eval(params, t, s)) * _weight(g, s)  # noqa: E731
    vals = _scan(params, ts, -T, T, integrand)
    i = int(np.argmax(vals))
    x, v = _polish(lambda t: quad_abs_integral(params, t, g), ts, vals, i, "max")
    return OracleResult(v, x, n_t)


def inf_strip_integral_oracle(
    params: ProblemParams, strip: StripInterval, g: Weight = None, n_t: int = DEFAULT_T_POINTS
) -> OracleResult:
    """inf over t in [aT, bT] of the integral of k(t, s) g(s) over s in [aT, bT]."""
    lo, hi = strip.scaled(params.T)
    ts = np.linspace(lo, hi, n_t)
    integrand = lambda t, s: kernel_eval(params, t, s) * _weight(g, s)  # noqa: E731
    vals = _scan(params, ts, lo, hi, integrand)
    i = int(np.argmin(vals))
    x, v = _polish(lambda t: quad_strip_integral(params, strip, t, g), ts, vals, i, "min")
    return OracleResult(v, x, n_t)


def whole_interval_inf_oracle(params: ProblemParams, g: Weight = None, n_t: int = 101) -> OracleResult:
    """inf over t of the integral of k(t, s) g(s) over all of [-T, T]."""
    T = params.T
    ts = np.linspace(-T, T, n_t)
    vals = np.array([quad_kernel_integral(params, t, g) for t in ts])
    i = int(np.argmin(vals))
    x, v = _polish(lambda t: quad_kernel_integral(params, t, g), ts, vals, i, "min")
    return OracleResult(v, x, n_t)


def _diagonal_limits(params: ProblemParams, z: float, y: float) -> list[float]:
    """sin(zeta)*k one-sided limits at (z, y) when z = +-y (normalized)."""
    T = params.T
    t, s = z * T, y * T
    out = []
    for region in Region:
        val = branch_value(params, region, t, s)
        if _closure_contains(region, z, y):
            out.append(val * math.sin(params.zeta))
    return out


def _closure_contains(region: Region, z: float, y: float, eps: float = 1e-14) -> bool:
    if region is Region.ABOVE_DIAGONALS:
        return z >= abs(y) - eps
    if region is Region.RIGHT_WEDGE:
        return abs(z) <= y + eps
    if region is Region.LEFT_WEDGE:
        return abs(z) <= -y + eps
    return z <= -abs(y) + eps


def grid_envelope_oracle(
    params: ProblemParams,
    y,
    mode: str = "max",
    strip: Optional[StripInterval] = None,
    density: int = DEFAULT_DENSITY,
):
    """Extremum over z of sin(zeta)*k(z, y) on a dense grid (normalized coords).

    ``mode`` is "max", "min" or "absmax".  Without a strip z ranges over
    [-1, 1]; with one, over [a, b].  The grid is augmented with both
    one-sided limits at z = +-y so the supremum/infimum across the jump is
    captured rather than approximated by the nearest grid node.
    """
    if mode not in ("max", "min", "absmax"):
        raise ValueError(f"unknown mode {mode!r}")
    lo, hi = (strip.a, strip.b) if strip is not None else (-1.0, 1.0)
    zs = np.linspace(lo, hi, density)
    ys = np.atleast_1d(np.asarray(y, dtype=float))
    sz = math.sin(params.zeta)
    T = params.T
    out = np.empty_like(ys)
    chunk = max(1, 2_000_000 // density)
    reducer = {"max": np.max, "min": np.min, "absmax": lambda a, axis: np.max(np.abs(a), axis=axis)}[mode]
    for start in range(0, len(ys), chunk):
        yc = ys[start:start + chunk]
        vals = sz * np.asarray(kernel_eval(params, T * zs[None, :], T * yc[:, None]))
        out[start:start + chunk] = reducer(vals, axis=1)
    for j, yy in enumerate(ys):
        for zc in {yy, -yy}:
            if lo <= zc <= hi:
                lim = _diagonal_limits(params, zc, yy)
                if mode == "absmax":
                    lim = [abs(v) for v in lim]
                if lim:
                    out[j] = max(out[j], *lim) if mode != "min" else min(out[j], *lim)
    if np.ndim(y) == 0:
        return float(out[0])
    return out
