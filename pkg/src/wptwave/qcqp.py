"""Concave quadratic maximization over a ball cut by half-spaces.

The inner subproblem of the multi-receiver optimizer is

    maximize   c'z - mu ||z||^2
    subject to ||z||^2 <= r^2  and  A z <= d.

The feasible set is a Euclidean ball intersected with half-spaces, both of
which have one-line projections, so the solver is projected gradient ascent
with a backtracking line search; the projection onto the intersection is
computed with Dykstra's alternating scheme (plain alternation finds a
feasible point but not the nearest one).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SubproblemInstance:
    """One inner problem: linear term, curvature, ball, half-spaces.

    halfspace_a is an (n_rows, dim) matrix and halfspace_d the matching
    bounds, encoding a_i'z <= d_i.  Either may be empty.
    """

    c: np.ndarray
    mu: float
    ball_radius_sq: float
    halfspace_a: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    halfspace_d: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self) -> None:
        c = np.array(self.c, dtype=float)
        a = np.array(self.halfspace_a, dtype=float)
        d = np.array(self.halfspace_d, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)):
            raise ValueError("c must be a finite vector")
        if not self.mu >= 0:
            raise ValueError("mu must be nonnegative")
        if not self.ball_radius_sq > 0:
            raise ValueError("ball_radius_sq must be positive")
        if a.size == 0:
            a = a.reshape(0, c.size)
        if a.ndim != 2 or a.shape[1] != c.size or d.shape != (a.shape[0],):
            raise ValueError("halfspace dimensions inconsistent with c")
        dead = ~np.any(a != 0.0, axis=1)
        if np.any(d[dead] < 0):
            raise ValueError("halfspace with zero normal and negative bound is infeasible")
        for arr in (c, a, d):
            arr.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "halfspace_a", a)
        object.__setattr__(self, "halfspace_d", d)

    @property
    def dim(self) -> int:
        return self.c.size

    def objective(self, z: np.ndarray) -> float:
        return float(self.c @ z - self.mu * (z @ z))

    def feasibility_residual(self, z: np.ndarray) -> float:
        """Worst scaled violation; <= 0 means feasible."""
        root_p = math.sqrt(self.ball_radius_sq)
        worst = (float(z @ z) - self.ball_radius_sq) / self.ball_radius_sq
        if self.halfspace_a.shape[0]:
            norms = np.linalg.norm(self.halfspace_a, axis=1)
            norms[norms == 0.0] = 1.0
            slack = (self.halfspace_a @ z - self.halfspace_d) / (norms * root_p)
            worst = max(worst, float(slack.max()))
        return worst


@dataclass(frozen=True)
class SolveReport:
    """Solution plus convergence evidence for one subproblem."""

    z: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    active_constraints: tuple
    converged: bool


class ProjectionError(ArithmeticError):
    """Projection failed to settle; the constraint system may be infeasible."""


def _dykstra(
    x0: np.ndarray,
    ball_radius_sq: float,
    a: np.ndarray,
    d: np.ndarray,
    tol: float,
    max_iter: int,
) -> np.ndarray:
    """Dykstra passes over the given half-space rows plus the ball."""
    x = x0.copy()
    n_rows = a.shape[0]
    norm_sq = np.einsum("ij,ij->i", a, a)
    corrections = np.zeros((n_rows + 1, x.size))
    scale = max(1.0, math.sqrt(ball_radius_sq), float(np.linalg.norm(x0)))
    row_norms = np.sqrt(norm_sq)
    for _ in range(max_iter):
        prev = x.copy()
        for i in range(n_rows):
            y = x + corrections[i]
            excess = float(a[i] @ y) - d[i]
            x = y if excess <= 0.0 else y - a[i] * (excess / norm_sq[i])
            corrections[i] = y - x
        y = x + corrections[n_rows]
        nsq = float(y @ y)
        x = y if nsq <= ball_radius_sq else y * math.sqrt(ball_radius_sq / nsq)
        corrections[n_rows] = y - x
        if float(np.linalg.norm(x - prev)) <= tol * scale:
            ball_ok = float(x @ x) <= ball_radius_sq * (1.0 + 1e-9)
            rows_ok = n_rows == 0 or bool(
                np.all(a @ x <= d + max(tol, 1e-12) * scale * row_norms)
            )
            if ball_ok and rows_ok:
                return x
    raise ProjectionError(
        "projection did not converge; the half-space system may be infeasible"
    )


def project(
    z: np.ndarray,
    ball_radius_sq: float,
    halfspace_a: np.ndarray | None = None,
    halfspace_d: np.ndarray | None = None,
    tol: float = 1e-10,
    max_iter: int = 5000,
) -> np.ndarray:
    """Euclidean projection onto {||z||^2 <= r^2} intersect {Az <= d}.

    Points already inside come back unchanged.  Otherwise Dykstra's scheme
    runs over the ball and the violated rows only; any row the move newly
    violates is added and the scheme rerun, so the result is feasible for
    the whole system.
    """
    x = np.array(z, dtype=float)
    if halfspace_a is None or np.asarray(halfspace_a).size == 0:
        a = np.zeros((0, x.size))
        d = np.zeros(0)
    else:
        a = np.asarray(halfspace_a, dtype=float)
        d = np.asarray(halfspace_d, dtype=float)
    live = np.any(a != 0.0, axis=1)
    a, d = a[live], d[live]
    row_norms = np.linalg.norm(a, axis=1) if a.shape[0] else np.zeros(0)
    scale = max(1.0, math.sqrt(ball_radius_sq), float(np.linalg.norm(x)))
    slack_tol = max(tol, 1e-12) * scale

    def violated(pt):
        return a @ pt > d + slack_tol * row_norms if a.shape[0] else np.zeros(0, bool)

    inside_ball = float(x @ x) <= ball_radius_sq
    bad = violated(x)
    if inside_ball and not bad.any():
        return x
    active = set(np.where(a @ x > d)[0]) if a.shape[0] else set()
    for _ in range(a.shape[0] + 1):
        rows = sorted(active)
        x_new = _dykstra(x, ball_radius_sq, a[rows], d[rows], tol, max_iter)
        newly = set(np.where(violated(x_new))[0]) - active
        if not newly:
            return x_new
        active |= newly
    raise ProjectionError("projection failed to settle on an active set")


def solve(
    inst: SubproblemInstance,
    tol: float = 1e-8,
    max_iter: int = 5000,
    z0: np.ndarray | None = None,
) -> SolveReport:
    """Projected gradient ascent on the concave objective.

    The step starts at the inverse curvature-plus-linear-scale estimate
    1/(2 mu + ||c||/r) and backtracks until the move does not lose
    objective value.  Convergence is declared on the gradient-mapping norm
    ||z - P(z + step * grad)|| / step scaled by (1 + ||c||).
    """
    c = inst.c
    mu = inst.mu
    r = math.sqrt(inst.ball_radius_sq)
    a, d = inst.halfspace_a, inst.halfspace_d
    no_rows = a.shape[0] == 0

    cnorm = float(np.linalg.norm(c))
    if mu == 0.0 and no_rows:
        z = np.zeros(inst.dim) if cnorm == 0.0 else r * c / cnorm
        return SolveReport(
            z=z,
            objective=inst.objective(z),
            kkt_residual=0.0,
            iterations=0,
            active_constraints=("ball",) if cnorm else (),
            converged=True,
        )

    def proj(v):
        return project(v, inst.ball_radius_sq, a, d, tol=max(1e-13, tol * 1e-2))

    step0 = 1.0 / (2.0 * mu + cnorm / r + 1e-300)
    if z0 is not None:
        z = proj(np.array(z0, dtype=float))
    else:
        z = proj(r * c / cnorm) if cnorm else np.zeros(inst.dim)
    f = inst.objective(z)
    grad_scale = 1.0 + cnorm
    residual = math.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = c - 2.0 * mu * z
        # gradient-mapping stop test at the fixed step, before backtracking:
        # a shrunken step would divide projection noise by almost zero
        z_probe = proj(z + step0 * grad)
        residual = float(np.linalg.norm(z_probe - z)) / (step0 * grad_scale)
        if residual <= tol:
            converged = True
            break
        step, z_try = step0, z_probe
        f_try = inst.objective(z_try)
        while f_try < f and step > 1e-18 * step0:
            step *= 0.5
            z_try = proj(z + step * grad)
            f_try = inst.objective(z_try)
        if f_try < f:
            break  # numerically stuck; keep the best point found
        z, f = z_try, f_try

    active = []
    if float(z @ z) >= inst.ball_radius_sq * (1.0 - 1e-8):
        active.append("ball")
    if not no_rows:
        norms = np.linalg.norm(a, axis=1)
        norms[norms == 0.0] = 1.0
        slack = inst.halfspace_d - a @ z
        active.extend(int(i) for i in np.where(slack <= 1e-8 * norms * r)[0])
    return SolveReport(
        z=z,
        objective=f,
        kkt_residual=residual,
        iterations=it,
        active_constraints=tuple(active),
        converged=converged,
    )
