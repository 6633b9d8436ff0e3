"""Nystrom discretization and damped Picard iteration for

    u(t) = int_{-T}^{T} k(t, s) g(s) f(s, u(s), u(-s)) ds.

Two quadrature rules are available on the symmetric grid:

* ``"product"`` (default): f is interpolated piecewise linearly between
  nodes and the kernel (times g) is integrated against each hat function
  exactly per panel with 8-point Gauss-Legendre.  Every panel boundary is a
  node, and both diagonals s = +-t_i pass through nodes, so no panel ever
  straddles the jump.  Constants are reproduced to round-off.
* ``"trapezoid"``: classical trapezoid weights; on the diagonal node the
  two half-panels use their own one-sided kernel limits.

Both are second order for smooth f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bounds import StripInterval
from .errors import DomainError, EvaluationError
from .kernel import ProblemParams, Region, branch_value, kernel_eval, kernel_matrix
from .nonlinearity import NonlinearityExpr

RULES = ("product", "trapezoid")
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class SymmetricGrid:
    """Odd number of equispaced nodes on [-T, T], symmetric about 0."""

    T: float
    N: int

    def __post_init__(self):
        if self.N < 3 or self.N % 2 == 0:
            raise DomainError(f"node count must be odd and >= 3, got {self.N}")
        if not self.T > 0:
            raise DomainError(f"T must be > 0, got {self.T}")

    @property
    def spacing(self) -> float:
        return 2 * self.T / (self.N - 1)

    @property
    def nodes(self) -> np.ndarray:
        t = -self.T + self.spacing * np.arange(self.N)
        # exact symmetry: t_{N-1-i} = -t_i
        half = self.N // 2
        t[half] = 0.0
        t[half + 1:] = -t[:half][::-1]
        return t

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.N, self.spacing)
        w[0] = w[-1] = self.spacing / 2
        return w

    def reflect(self, u: np.ndarray) -> np.ndarray:
        """Nodal values of u(-t)."""
        return np.asarray(u)[::-1]


def _weight_values(g: Optional[NonlinearityExpr], s: np.ndarray) -> np.ndarray:
    if g is None:
        return np.ones_like(s)
    return np.broadcast_to(g.evaluate_array(s=s), s.shape)


def _product_matrix(params: ProblemParams, grid: SymmetricGrid, g) -> np.ndarray:
    t = grid.nodes
    N, h = grid.N, grid.spacing
    W = np.zeros((N, N))
    xi = 0.5 * (_GL_NODES + 1.0)
    left_hat, right_hat = 1.0 - xi, xi
    for j in range(N - 1):
        s = t[j] + h * xi
        kg = kernel_eval(params, t[:, None], s[None, :]) * _weight_values(g, s)[None, :]
        scaled = kg * (0.5 * h * _GL_WEIGHTS)[None, :]
        W[:, j] += scaled @ left_hat
        W[:, j + 1] += scaled @ right_hat
    return W


def _diagonal_halves(params: ProblemParams, t: np.ndarray):
    """Kernel limits on the diagonal from the s < t side and the s > t side."""
    left = np.where(t > 0, branch_value(params, Region.ABOVE_DIAGONALS, t, t),
                    branch_value(params, Region.LEFT_WEDGE, t, t))
    right = np.where(t >= 0, branch_value(params, Region.RIGHT_WEDGE, t, t),
                     branch_value(params, Region.BELOW_DIAGONALS, t, t))
    return left, right


def _trapezoid_matrix(params: ProblemParams, grid: SymmetricGrid, g) -> np.ndarray:
    t, h = grid.nodes, grid.spacing
    W = kernel_matrix(params, t, t) * grid.weights[None, :]
    left, right = _diagonal_halves(params, t)
    diag = 0.5 * h * (left + right)
    diag[0] = 0.5 * h * right[0]
    diag[-1] = 0.5 * h * left[-1]
    W[np.diag_indices(grid.N)] = diag
    return W * _weight_values(g, t)[None, :]


class NystromOperator:
    """Discrete Hammerstein operator (F_N u)_i = sum_j W_ij f(t_j, u_j, u_{N-1-j})."""

    def __init__(self, params: ProblemParams, grid: SymmetricGrid, g: Optional[NonlinearityExpr] = None,
                 rule: str = "product"):
        if rule not in RULES:
            raise ValueError(f"unknown rule {rule!r}; choose from {RULES}")
        if not math.isclose(grid.T, params.T, rel_tol=1e-14):
            raise DomainError(f"grid half-period {grid.T} does not match T={params.T}")
        self.params, self.grid, self.g, self.rule = params, grid, g, rule
        build = _product_matrix if rule == "product" else _trapezoid_matrix
        self.matrix = build(params, grid, g)

    def source(self, f: NonlinearityExpr, u: np.ndarray) -> np.ndarray:
        t = self.grid.nodes
        u = np.asarray(u, dtype=float)
        return f.evaluate_array(t=t, u=u, v=u[::-1]) * np.ones_like(t)

    def apply(self, f: NonlinearityExpr, u: np.ndarray) -> np.ndarray:
        return self.matrix @ self.source(f, u)


def apply_discrete_operator(params: ProblemParams, grid: SymmetricGrid, g, f: NonlinearityExpr, u,
                            rule: str = "product") -> np.ndarray:
    """One application of the discrete operator (builds the matrix each call)."""
    return NystromOperator(params, grid, g, rule).apply(f, u)


@dataclass
class DiscreteSolution:
    grid: SymmetricGrid
    values: np.ndarray
    residual: float
    ode_defect: float
    cone_margin: Optional[float]
    iterations: int
    converged: bool
    status: str
    history: list = field(default_factory=list, repr=False)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def periodicity_gap(self) -> float:
        return float(abs(self.values[0] - self.values[-1]))


def cone_margin(grid: SymmetricGrid, values, strip: StripInterval, c: float) -> float:
    """min over [aT, bT] of u minus c * max|u|; strip ends linearly interpolated."""
    t = grid.nodes
    u = np.asarray(values, dtype=float)
    lo, hi = strip.scaled(grid.T)
    inside = u[(t >= lo) & (t <= hi)]
    ends = np.interp([lo, hi], t, u)
    strip_min = float(np.min(np.concatenate([inside, ends])))
    return strip_min - c * float(np.max(np.abs(u)))


def cone_membership(sol: DiscreteSolution, strip: StripInterval, c: float) -> float:
    return cone_margin(sol.grid, sol.values, strip, c)


def ode_defects(params: ProblemParams, grid: SymmetricGrid, f: NonlinearityExpr, values) -> np.ndarray:
    """|u' - h(t, u, u(-t))| at interior nodes, with h = f - omega*v and central differences."""
    t, u = grid.nodes, np.asarray(values, dtype=float)
    v = u[::-1]
    du = (u[2:] - u[:-2]) / (2 * grid.spacing)
    h_vals = f.evaluate_array(t=t, u=u, v=v) * np.ones_like(t) - params.omega * v
    return np.abs(du - h_vals[1:-1])


def picard_solve(
    params: ProblemParams,
    grid: SymmetricGrid,
    g: Optional[NonlinearityExpr],
    f: NonlinearityExpr,
    u0=None,
    theta: float = 0.5,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    ceiling: float = 1e12,
    rule: str = "product",
    strip: Optional[StripInterval] = None,
    c: Optional[float] = None,
    operator: Optional[NystromOperator] = None,
) -> DiscreteSolution:
    """Damped Picard iteration u <- (1 - theta) u + theta F_N u.

    Stops when the sup-norm update drops below ``tol`` (converged), when
    ``max_iter`` is reached, when the iterate exceeds ``ceiling`` in sup norm
    (diverged) or when f cannot be evaluated.  The iterate with the smallest
    fixed-point residual seen is returned in every case.
    """
    if not 0 < theta <= 1:
        raise ValueError(f"damping theta must lie in (0, 1], got {theta}")
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    op = operator or NystromOperator(params, grid, g, rule)
    if u0 is None:
        u = np.full(grid.N, 1.0 / params.omega)
    else:
        u = np.broadcast_to(np.asarray(u0, dtype=float), (grid.N,)).copy()

    best_u, best_res = u.copy(), math.inf
    status, converged, it = "max-iter", False, 0
    history = []
    for it in range(1, max_iter + 1):
        try:
            Fu = op.apply(f, u)
        except EvaluationError:
            status = "evaluation-error"
            break
        res = float(np.max(np.abs(Fu - u)))
        if res < best_res:
            best_u, best_res = u.copy(), res
        new = (1 - theta) * u + theta * Fu
        step = float(np.max(np.abs(new - u)))
        history.append(step)
        u = new
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > ceiling:
            status = "diverged"
            break
        if step < tol:
            status, converged = "converged", True
            break

    if converged:
        try:
            final_res = float(np.max(np.abs(op.apply(f, u) - u)))
            if final_res <= best_res:
                best_u, best_res = u, final_res
        except EvaluationError:
            pass
    try:
        defect = float(np.max(ode_defects(params, grid, f, best_u)))
    except EvaluationError:
        defect = math.inf
    margin = cone_margin(grid, best_u, strip, c) if strip is not None and c is not None else None
    return DiscreteSolution(grid, best_u, best_res, defect, margin, it, converged, status, history)


@dataclass(frozen=True)
class VerificationReport:
    ode_defect: float
    periodicity_defect: float
    worst_node: int
    threshold: float
    passed: bool


def verify_solution(params: ProblemParams, h: NonlinearityExpr, sol: DiscreteSolution,
                    threshold: float = 1e-3) -> VerificationReport:
    """Check u'(t) = h(t, u(t), u(-t)) at interior nodes and u(-T) = u(T)."""
    grid, u = sol.grid, np.asarray(sol.values, dtype=float)
    v = u[::-1]
    du = (u[2:] - u[:-2]) / (2 * grid.spacing)
    rhs = h.evaluate_array(t=grid.nodes, u=u, v=v) * np.ones(grid.N)
    defects = np.abs(du - rhs[1:-1])
    worst = int(np.argmax(defects))
    ode = float(defects[worst])
    per = sol.periodicity_gap
    return VerificationReport(ode, per, worst + 1, threshold, ode <= threshold and per <= threshold)


def sample_cone_members(grid: SymmetricGrid, strip: StripInterval, c: float, count: int,
                        scale: float = 1.0, nonnegative: bool = False, seed: int = 0) -> np.ndarray:
    """Random nodal vectors with sup norm <= scale lying in the cone.

    Each sample is a random walk rescaled into [-scale, scale] (or
    [0, scale]); strip nodes are then lifted to at least c * max|u|, which
    leaves the norm unchanged.
    """
    rng = np.random.default_rng(seed)
    t = grid.nodes
    lo, hi = strip.scaled(grid.T)
    mask = (t >= lo) & (t <= hi)
    out = np.empty((count, grid.N))
    for k in range(count):
        walk = np.cumsum(rng.normal(size=grid.N))
        walk -= walk.min()
        span = walk.max()
        u = walk / span if span > 0 else np.ones(grid.N)
        if not nonnegative:
            u = 2 * u - 1
        u *= scale * rng.uniform(0.05, 1.0)
        norm = np.max(np.abs(u))
        u[mask] = np.maximum(u[mask], c * norm)
        out[k] = u
    return out
