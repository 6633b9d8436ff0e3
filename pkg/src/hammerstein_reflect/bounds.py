"""Closed-form kernel envelopes, cone constants and integral constants.

All envelopes live in normalized coordinates (z = t/T, y = s/T) and are
scaled by sin(zeta), matching ``sin(zeta) * k``.  Strips are symmetric,
stored normalized with a + b = 1, and rescaled by T wherever an integral in
time units is produced.

Regimes: zeta in (0, pi/4] is the constant-sign regime (pi/4 included; the
formulas there are continuous limits) and zeta in (pi/4, pi/2) the
changing-sign regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from .errors import DomainError
from .kernel import QUARTER_PI, ProblemParams, Region, branch_value

HALF_PI = math.pi / 2


@dataclass(frozen=True)
class StripInterval:
    """Symmetric strip [a, b] in normalized coordinates, a + b = 1."""

    a: float
    b: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.b is None:
            object.__setattr__(self, "b", 1.0 - self.a)
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise DomainError("strip ends must be finite")
        if abs(self.a + self.b - 1.0) > 1e-12:
            raise DomainError(f"strip must satisfy a + b = 1, got a={self.a}, b={self.b}")
        if not 0.0 <= self.a <= self.b <= 1.0:
            raise DomainError(f"strip must satisfy 0 <= a <= b <= 1, got a={self.a}, b={self.b}")

    def scaled(self, T: float) -> tuple[float, float]:
        return self.a * T, self.b * T


def _changing_sign(zeta: float) -> bool:
    return zeta > QUARTER_PI


def check_strip(params: ProblemParams, strip: StripInterval) -> None:
    """Raise DomainError unless ``strip`` lies where k is positive."""
    params.require_bounds_regime()
    zeta = params.zeta
    if _changing_sign(zeta):
        lower = 1.0 - math.pi / (4 * zeta)
        if not strip.a > lower:
            raise DomainError(
                f"strip end a={strip.a} must exceed 1 - pi/(4*zeta) = {lower:.12g} "
                "so that [a, b] lies inside the positivity band of k"
            )


def beta_residual(zeta: float, y):
    """Residual whose unique root in [1/2, 1] is the breakpoint beta."""
    c = QUARTER_PI
    y = np.asarray(y, dtype=float)
    return np.cos(zeta * (y - 1) + c) * np.cos(zeta * y - c) - np.cos(zeta * (y - 1) - c)


def beta_root(zeta: float, xtol: float = 1e-14) -> float:
    """Unique root of ``beta_residual`` in [1/2, 1], by bisection.

    Defined for zeta in [pi/4, pi/2); at zeta = pi/4 the root is y = 1.
    """
    if not QUARTER_PI - 1e-15 <= zeta < HALF_PI:
        raise DomainError(f"beta is defined for zeta in [pi/4, pi/2), got {zeta!r}")
    hi_val = float(beta_residual(zeta, 1.0))
    if hi_val >= 0.0:
        # only reachable at the pi/4 endpoint, where v(1) = 0 up to round-off
        return 1.0
    return float(optimize.bisect(lambda y: float(beta_residual(zeta, y)), 0.5, 1.0, xtol=xtol))


def _phi_normalized(zeta: float, y: np.ndarray) -> np.ndarray:
    c = QUARTER_PI
    if not _changing_sign(zeta):
        return np.where(
            y >= 0,
            np.cos(zeta * (y - 1) + c) * np.cos(zeta * y - c),
            np.cos(zeta * y + c) * np.cos(zeta * (y + 1) - c),
        )
    beta = beta_root(zeta)
    q = math.pi / (4 * zeta)
    conds = [y >= beta, y >= 1 - q, y >= beta - 1, y >= -q]
    choices = [
        np.cos(zeta * (y - 1) - c),
        np.cos(zeta * (y - 1) + c) * np.cos(zeta * y - c),
        np.cos(zeta * y - c),
        np.cos(zeta * y + c) * np.cos(zeta * (y + 1) - c),
    ]
    return np.select(conds, choices, default=np.cos(zeta * (y + 1) - c))


def _check_unit(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) > 1 + 1e-12):
        raise DomainError("normalized coordinate must lie in [-1, 1]")
    return y


def phi_upper(params: ProblemParams, y):
    """Envelope Phi(y) = sin(zeta) * max_z k(z, y), which also bounds sin(zeta)*|k|."""
    params.require_bounds_regime()
    y = _check_unit(y)
    out = _phi_normalized(params.zeta, y)
    return float(out) if out.ndim == 0 else out


def psi_lower(params: ProblemParams, strip: StripInterval, y):
    """Minorant Psi(y) = sin(zeta) * min_{z in [a, b]} k(z, y)."""
    check_strip(params, strip)
    y = _check_unit(y)
    zeta, a, b, c = params.zeta, strip.a, strip.b, QUARTER_PI
    out = np.select(
        [y >= b, y >= a, y >= -b],
        [
            math.cos(zeta * b + c) * np.cos(zeta * (y - 1) - c),
            np.cos(zeta * y + c) * np.cos(zeta * (y - 1) - c),
            math.cos(zeta * (1 - b) - c) * np.cos(zeta * y - c),
        ],
        default=math.cos(zeta * b + c) * np.cos(zeta * (1 + y) - c),
    )
    return float(out) if out.ndim == 0 else out


def cone_constant(params: ProblemParams, strip: StripInterval) -> float:
    """Largest c with sin(zeta)*k(z, y) >= c*Phi(y) for z in the strip."""
    check_strip(params, strip)
    zeta = params.zeta
    ta, tb = math.tan(zeta * strip.a), math.tan(zeta * strip.b)
    c = (1 - ta) * (1 - tb) / ((1 + ta) * (1 + tb))
    if not 0.0 < c <= 1.0:
        raise DomainError(f"cone constant {c!r} is outside (0, 1] for this strip")
    return c


def cone_constant_upper_estimate(zeta: float) -> float:
    """c(a) <= ((1 - tan(zeta/2)) / (1 + tan(zeta/2)))^2, attained at a = b = 1/2."""
    r = math.tan(zeta / 2)
    return ((1 - r) / (1 + r)) ** 2


def negative_part_profile(zeta: float, z):
    """omega*sin(zeta) * integral of the negative part of k(T*z, .) for z in (pi/(4 zeta) - 1, 0)."""
    z = np.asarray(z, dtype=float)
    return math.sqrt(2) * np.cos(zeta * (z + 1) + QUARTER_PI) * np.sin(zeta * z) + np.cos(
        zeta * z + QUARTER_PI
    ) * (1 - np.sin(zeta * (z + 1) + QUARTER_PI))


def negative_part_peak_location(zeta: float) -> float:
    """Critical point (pi/(4 zeta) - 1)/3 of ``negative_part_profile``."""
    return (math.pi / (4 * zeta) - 1) / 3


def sup_abs_integral(params: ProblemParams) -> float:
    """sup_t of the integral of |k(t, s)| over s in [-T, T] (time units)."""
    params.require_bounds_regime()
    zeta, w = params.zeta, params.omega
    if not _changing_sign(zeta):
        return 1.0 / w
    peak = float(negative_part_profile(zeta, negative_part_peak_location(zeta)))
    # integral |k| = 1/omega + 2 * integral k^-, and omega*sin(zeta)*integral k^- = peak
    return (1.0 + 2.0 * peak / math.sin(zeta)) / w


def _check_inf_strip(params: ProblemParams, strip: StripInterval) -> None:
    check_strip(params, strip)
    if not strip.a < strip.b:
        raise DomainError("strip integral needs a < b (degenerate strip)")


def inf_strip_integral(params: ProblemParams, strip: StripInterval) -> float:
    """inf over t in [aT, bT] of the integral of k(t, s) over s in [aT, bT]."""
    _check_inf_strip(params, strip)
    zeta, w, a = params.zeta, params.omega, strip.a
    num = math.sin(zeta * (1 - 2 * a)) + math.cos(zeta) - math.cos(2 * zeta * a)
    return num / (2 * w * math.sin(zeta))


def strip_integral_profile(params: ProblemParams, strip: StripInterval, t):
    """Integral of k(t, s) over s in [aT, bT] for t in [aT, bT], closed form."""
    _check_inf_strip(params, strip)
    w, T = params.omega, params.T
    aT = strip.a * T
    t = np.asarray(t, dtype=float)
    num = (
        np.sin(w * (T - aT - t))
        - np.sin(w * (aT - t))
        + np.cos(w * (T + aT - t))
        - np.cos(w * (aT + t))
    )
    out = num / (2 * w * math.sin(params.zeta))
    return float(out) if out.ndim == 0 else out


def whole_interval_inf_integral(params: ProblemParams) -> float:
    """inf_t of the integral of k(t, s) over all of [-T, T]; needs zeta <= pi/4."""
    params.require_bounds_regime()
    if _changing_sign(params.zeta):
        raise DomainError(f"whole-interval infimum needs zeta <= pi/4, got {params.zeta!r}")
    return 1.0 / params.omega


def _min_over_square(params: ProblemParams, y: np.ndarray) -> np.ndarray:
    """sin(zeta) * min_{z in [-1, 1]} k(z, y), exact when k > 0 on the square.

    With k > 0, d^2k/dt^2 = -omega^2 k < 0, so each smooth piece in z is
    concave and the minimum sits at a piece end: z = -1, 1, +-y (both sides).
    """
    T, s = params.T, np.asarray(y, dtype=float) * params.T
    sz = math.sin(params.zeta)
    inf = np.inf
    # one-sided values from outside the square are excluded at the corners
    a_ok = s < T
    d_ok = s > -T
    cands = [
        np.where(d_ok, branch_value(params, Region.BELOW_DIAGONALS, -T, s), inf),
        np.where(a_ok, branch_value(params, Region.ABOVE_DIAGONALS, T, s), inf),
        np.where(a_ok, branch_value(params, Region.ABOVE_DIAGONALS, np.abs(s), s), inf),
        np.where(d_ok, branch_value(params, Region.BELOW_DIAGONALS, -np.abs(s), s), inf),
        np.where(
            s >= 0,
            branch_value(params, Region.RIGHT_WEDGE, np.abs(s), s),
            branch_value(params, Region.LEFT_WEDGE, np.abs(s), s),
        ),
        np.where(
            s >= 0,
            branch_value(params, Region.RIGHT_WEDGE, -np.abs(s), s),
            branch_value(params, Region.LEFT_WEDGE, -np.abs(s), s),
        ),
    ]
    return sz * np.min(np.vstack([np.atleast_1d(c) for c in cands]), axis=0)


def whole_square_cone_constant(params: ProblemParams, density: int = 4001) -> float:
    """Largest c with sin(zeta)*k >= c*Phi on the whole square (zeta in (0, pi/4)).

    No closed form is available; the inner minimum is exact and the outer
    infimum over y uses a dense grid polished by bounded scalar minimization.
    """
    params.require_bounds_regime()
    if params.zeta >= QUARTER_PI:
        raise DomainError("k must be strictly positive (zeta < pi/4) for the whole-square cone")

    def ratio(y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return _min_over_square(params, y) / _phi_normalized(params.zeta, y)

    ys = np.linspace(-1.0, 1.0, density)
    vals = ratio(ys)
    i = int(np.argmin(vals))
    best = float(vals[i])
    lo, hi = ys[max(i - 1, 0)], ys[min(i + 1, density - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(
            lambda y: float(ratio(y)[0]), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12}
        )
        best = min(best, float(res.fun))
    return best


@dataclass(frozen=True)
class BoundsProfile:
    """Everything the certifier needs about the kernel for one strip."""

    params: ProblemParams
    strip: StripInterval
    c: float
    sup_abs_int: float
    inf_strip_int: float
    beta: Optional[float] = None

    @property
    def m(self) -> float:
        return 1.0 / self.sup_abs_int

    @property
    def M(self) -> float:
        return 1.0 / self.inf_strip_int

    def phi(self, y):
        return phi_upper(self.params, y)

    def psi(self, y):
        return psi_lower(self.params, self.strip, y)


def bounds_profile(params: ProblemParams, strip: StripInterval) -> BoundsProfile:
    zeta = params.zeta
    return BoundsProfile(
        params=params,
        strip=strip,
        c=cone_constant(params, strip),
        sup_abs_int=sup_abs_integral(params),
        inf_strip_int=inf_strip_integral(params, strip),
        beta=beta_root(zeta) if _changing_sign(zeta) else None,
    )
