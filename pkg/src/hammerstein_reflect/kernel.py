"""Green's function of u'(t) + omega*u(-t) = sigma(t) with u(-T) = u(T).

The kernel is piecewise trigonometric on four triangular regions of the
square [-T, T]^2 bounded by the diagonals s = t and s = -t.  It jumps by
exactly 1 across s = t and is continuous across s = -t.

Two algebraically equivalent closed forms are provided: the sum-of-trig
form (``kernel_eval_raw``) and the product form in normalized coordinates
z = t/T, y = s/T (``kernel_eval`` / ``kernel_eval_normalized``).  The
product form is the default because it avoids the cancellation of the sum
form near zeta = pi/4.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResonanceError

QUARTER_PI = math.pi / 4
RESONANCE_TOL = 1e-12
# Coordinates may overshoot [-T, T] by this relative amount (round-off in T*z).
_EDGE_SLACK = 1e-12


@dataclass(frozen=True)
class ProblemParams:
    """Operator data: half-period ``T`` and shift coefficient ``omega``."""

    T: float
    omega: float
    resonance_tol: float = RESONANCE_TOL

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T > 0):
            raise DomainError(f"half-period T must be finite and > 0, got {self.T!r}")
        if not math.isfinite(self.omega):
            raise DomainError(f"omega must be finite, got {self.omega!r}")
        if abs(math.sin(self.omega * self.T)) < self.resonance_tol:
            raise ResonanceError(
                f"sin(omega*T) = {math.sin(self.omega * self.T):.3e} is resonant "
                f"(|sin| < {self.resonance_tol:g}); the Green's function does not exist"
            )

    @classmethod
    def from_zeta(cls, zeta: float, T: float = 1.0) -> "ProblemParams":
        return cls(T=T, omega=zeta / T)

    @property
    def zeta(self) -> float:
        return self.omega * self.T

    def reflected(self) -> "ProblemParams":
        """Parameters with omega -> -omega (zeta -> -zeta)."""
        return ProblemParams(self.T, -self.omega, self.resonance_tol)

    def require_bounds_regime(self) -> None:
        """Closed-form bounds are only available for zeta in (0, pi/2)."""
        if not 0.0 < self.zeta < math.pi / 2:
            raise DomainError(
                f"closed-form bounds need zeta = omega*T in (0, pi/2), got {self.zeta!r}; "
                "use the reflection k_zeta(t,s) = -k_{-zeta}(-t,-s) for negative zeta"
            )


class Region(enum.Enum):
    ABOVE_DIAGONALS = "above_diagonals"  # t > |s|
    RIGHT_WEDGE = "right_wedge"  # |t| < s
    LEFT_WEDGE = "left_wedge"  # |t| < -s
    BELOW_DIAGONALS = "below_diagonals"  # t < -|s|


_REGIONS = (
    Region.ABOVE_DIAGONALS,
    Region.RIGHT_WEDGE,
    Region.LEFT_WEDGE,
    Region.BELOW_DIAGONALS,
)
_CODE = {r: i for i, r in enumerate(_REGIONS)}


@dataclass(frozen=True)
class KernelRegion:
    """Region containing a point, plus whether the point sits on a diagonal."""

    region: Region
    boundary: bool = False
    on_diagonal: bool = False  # s = t (jump)
    on_antidiagonal: bool = False  # s = -t (continuous)


class SignClass(enum.Enum):
    STRICTLY_POSITIVE = "strictly_positive"
    STRICTLY_NEGATIVE = "strictly_negative"
    POSITIVE_VANISHING_ON_P = "positive_vanishing_on_P"
    NEGATIVE_VANISHING_ON_P = "negative_vanishing_on_P"
    CHANGES_SIGN = "changes_sign"


def vanishing_points(T: float) -> tuple[tuple[float, float], ...]:
    """The set P where the kernel vanishes when zeta = +-pi/4."""
    return ((-T, -T), (0.0, 0.0), (T, T), (T, -T))


def region_codes(t, s) -> np.ndarray:
    """Vectorized region classification (codes index ``_REGIONS``).

    Ties: on s = t the wedge branch is used (right wedge for s > 0, left
    wedge for s < 0, right wedge at the origin); on s = -t the
    above-diagonals branch for t > 0 and the right wedge for t < 0.  The
    kernel is continuous across s = -t, so only the first rule changes a
    value, and only on a set of measure zero.
    """
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    abs_s = np.abs(s)
    codes = np.where(s >= 0, 1, 2)
    codes = np.where(t > abs_s, 0, codes)
    codes = np.where(t < -abs_s, 3, codes)
    # s = -t with t > 0 lands in the wedge test above; move it to region A.
    codes = np.where((t > 0) & (s == -t), 0, codes)
    return codes


def _check_box(T: float, t, s) -> None:
    lim = T * (1 + _EDGE_SLACK)
    if np.any(np.abs(t) > lim) or np.any(np.abs(s) > lim):
        raise DomainError(f"kernel arguments must lie in [-{T}, {T}]^2")


def region_of(params: ProblemParams, t: float, s: float) -> KernelRegion:
    """Open region containing (t, s), with the diagonal tie-break flagged."""
    _check_box(params.T, t, s)
    code = int(region_codes(t, s))
    diag = t == s
    anti = t == -s
    return KernelRegion(_REGIONS[code], diag or anti, diag, anti)


def _product_branches(zeta, z, y, codes):
    """sin(zeta)*k in normalized coordinates, branch chosen by ``codes``."""
    c = QUARTER_PI
    out = np.empty(np.shape(codes), dtype=float)
    for code, (first, second) in enumerate(
        (
            (lambda z, y: np.cos(zeta * (1 - z) - c), lambda z, y: np.cos(zeta * y - c)),
            (lambda z, y: np.cos(zeta * z + c), lambda z, y: np.cos(zeta * (y - 1) - c)),
            (lambda z, y: np.cos(zeta * z + c), lambda z, y: np.cos(zeta * (1 + y) - c)),
            (lambda z, y: np.cos(zeta * (z + 1) + c), lambda z, y: np.cos(zeta * y - c)),
        )
    ):
        mask = codes == code
        if np.any(mask):
            zm, ym = z[mask], y[mask]
            out[mask] = first(zm, ym) * second(zm, ym)
    return out


def _as_result(value: np.ndarray, like):
    if np.ndim(like) == 0 and value.ndim == 0:
        return float(value)
    return value


def kernel_eval_normalized(params: ProblemParams, z, y):
    """k(T*z, T*y) computed directly from the product form; |z|, |y| <= 1."""
    z, y = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(y, dtype=float))
    _check_box(1.0, z, y)
    codes = region_codes(z, y)
    val = _product_branches(params.zeta, z, y, codes) / math.sin(params.zeta)
    return _as_result(val, z)


def kernel_eval(params: ProblemParams, t, s):
    """Green's function k(t, s) on [-T, T]^2 (scalars or broadcastable arrays)."""
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    _check_box(params.T, t, s)
    T = params.T
    codes = region_codes(t, s)
    val = _product_branches(params.zeta, t / T, s / T, codes) / math.sin(params.zeta)
    return _as_result(val, t)


def _raw_branches(T, w, t, s, codes):
    out = np.empty(np.shape(codes), dtype=float)
    formulas = (
        lambda t, s: np.cos(w * (T - s - t)) + np.sin(w * (T + s - t)),
        lambda t, s: np.cos(w * (T - s - t)) - np.sin(w * (T - s + t)),
        lambda t, s: np.cos(w * (T + s + t)) + np.sin(w * (T + s - t)),
        lambda t, s: np.cos(w * (T + s + t)) - np.sin(w * (T - s + t)),
    )
    for code, fn in enumerate(formulas):
        mask = codes == code
        if np.any(mask):
            out[mask] = fn(t[mask], s[mask])
    return out


def kernel_eval_raw(params: ProblemParams, t, s):
    """Sum-of-trig form of k; used as an independent cross-check."""
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    _check_box(params.T, t, s)
    codes = region_codes(t, s)
    val = _raw_branches(params.T, params.omega, t, s, codes) / (2 * math.sin(params.zeta))
    return _as_result(val, t)


def branch_value(params: ProblemParams, region: Region, t, s):
    """Evaluate the closed form of ``region`` at (t, s) regardless of where (t, s) lies.

    Used for one-sided limits across the diagonals.
    """
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    codes = np.full(t.shape, _CODE[region])
    T = params.T
    val = _product_branches(params.zeta, t / T, s / T, codes) / math.sin(params.zeta)
    return _as_result(val, t)


def one_sided_limits(params: ProblemParams, s: float) -> tuple[float, float]:
    """(lim_{t->s-} k(t,s), lim_{t->s+} k(t,s))."""
    if s > 0:
        below, above = Region.RIGHT_WEDGE, Region.ABOVE_DIAGONALS
    elif s < 0:
        below, above = Region.BELOW_DIAGONALS, Region.LEFT_WEDGE
    else:
        below, above = Region.BELOW_DIAGONALS, Region.ABOVE_DIAGONALS
    return branch_value(params, below, s, s), branch_value(params, above, s, s)


def kernel_jump(params: ProblemParams, s: float) -> float:
    """lim_{t->s+} k(t,s) - lim_{t->s-} k(t,s); equals 1 for every admissible s."""
    if not abs(s) < params.T:
        raise DomainError(f"jump is defined for |s| < T, got s={s!r}")
    lo, hi = one_sided_limits(params, s)
    return hi - lo


def sign_class(zeta: float, tol: float = 1e-12) -> SignClass:
    """Sign behaviour of k on [-T, T]^2 as a function of zeta alone."""
    if abs(math.sin(zeta)) < RESONANCE_TOL:
        raise ResonanceError(f"zeta = {zeta!r} is resonant (sin(zeta) = 0)")
    if abs(zeta - QUARTER_PI) <= tol:
        return SignClass.POSITIVE_VANISHING_ON_P
    if abs(zeta + QUARTER_PI) <= tol:
        return SignClass.NEGATIVE_VANISHING_ON_P
    if 0 < zeta < QUARTER_PI:
        return SignClass.STRICTLY_POSITIVE
    if -QUARTER_PI < zeta < 0:
        return SignClass.STRICTLY_NEGATIVE
    return SignClass.CHANGES_SIGN


def kernel_matrix(params: ProblemParams, t, s) -> np.ndarray:
    """Matrix K[i, j] = k(t_i, s_j)."""
    t = np.asarray(t, dtype=float)[:, None]
    s = np.asarray(s, dtype=float)[None, :]
    return np.asarray(kernel_eval(params, t, s))
