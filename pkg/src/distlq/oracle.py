"""Model-based ground truth and numeric probes of the theory constants.

Under quadratic invariance the cost is an exactly quadratic function
g(q) = q'Gq + 2g'q + c of the Q-parameterization coordinates, so the
global optimum is one positive-definite linear solve away.  The quadratic
form is assembled from a handful of exact cost evaluations (polarization
on unit vectors), which is exact for quadratics up to roundoff.

The remaining operations estimate constants the convergence theory assumes
known: the strong-convexity constant mu of g, the sublevel supremum tau of
the squared Frobenius norm of the Jacobian of the coordinate map h, their
ratio mu_delta = 2 mu / tau (the local gradient-dominance constant), and
sampled local Lipschitz/smoothness constants.  All sampled quantities are
empirical bounds, not certified ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.optimize

from .cost import CostContext, f_of_z, fd_gradient, fd_hessian, g_of_q
from .policy_space import h_forward, h_inverse, qi_check_detailed, unvec_policy


class OracleError(RuntimeError):
    """A precondition of the model-based oracle failed."""


class SamplingError(RuntimeError):
    """Rejection sampling could not populate the sublevel set."""


@dataclass(frozen=True)
class QuadraticForm:
    """g(q) = q'Gq + 2 g'q + c with G symmetric PSD."""

    G: np.ndarray
    g: np.ndarray
    c: float

    def value(self, q: np.ndarray) -> float:
        q = np.asarray(q, dtype=float)
        return float(q @ self.G @ q + 2.0 * self.g @ q + self.c)

    def gradient(self, q: np.ndarray) -> np.ndarray:
        return 2.0 * (self.G @ np.asarray(q, dtype=float) + self.g)


@dataclass(frozen=True)
class OracleSolution:
    """Global optimum of the QI-convexified problem, in all coordinates."""

    q_star: np.ndarray
    z_star: np.ndarray
    K_star: np.ndarray
    J_star: float
    quadratic: QuadraticForm


@dataclass(frozen=True)
class GdEstimate:
    """Sampled local gradient-dominance constant mu_delta = 2 mu / tau.

    `ratio_min` is the direct empirical minimum of ||grad f||^2 / (f - J*)
    over the same sample; it upper-bounds nothing but must never fall
    below mu_delta, since the 2 mu / tau route is conservative pointwise.
    """

    mu: float
    tau: float
    mu_delta: float
    delta: float
    ratio_min: float
    n_accepted: int


@dataclass(frozen=True)
class SmoothnessConstants:
    """Sampled local Lipschitz (L_delta) and smoothness (M_delta) constants.

    Values include the safety inflation; `inflation` records the factor.
    """

    L_delta: float
    M_delta: float
    rho0: float
    inflation: float


def assemble_quadratic(ctx: CostContext) -> QuadraticForm:
    """Recover the exact quadratic form of g from cost evaluations.

    c = g(0); linear terms from antisymmetric differences; off-diagonal
    curvature from the polarization identity on e_i + e_j.  Exact because
    g is a quadratic polynomial.
    """
    d = ctx.d
    c = g_of_q(ctx, np.zeros(d))
    eye = np.eye(d)
    plus = np.array([g_of_q(ctx, eye[i]) for i in range(d)])
    minus = np.array([g_of_q(ctx, -eye[i]) for i in range(d)])
    lin = (plus - minus) / 4.0
    G = np.empty((d, d))
    for i in range(d):
        G[i, i] = plus[i] - c - 2.0 * lin[i]
        for j in range(i + 1, d):
            gij = g_of_q(ctx, eye[i] + eye[j])
            G[i, j] = (gij - plus[i] - plus[j] + c) / 2.0
            G[j, i] = G[i, j]
    asym = float(np.max(np.abs(G - G.T))) if d > 1 else 0.0
    if asym > 1e-8:
        raise OracleError(
            f"assembled quadratic is asymmetric (max deviation {asym:.3e})")
    return QuadraticForm(G=G, g=lin, c=c)


def solve_qi_oracle(ctx: CostContext, qi_tol: float = 1e-9) -> OracleSolution:
    """Global optimum via the convex reformulation; QI is a hard requirement."""
    verdict = qi_check_detailed(ctx.basis, ctx.ops.CP12, tol=qi_tol)
    if not verdict.qi:
        raise OracleError(
            "subspace is not quadratically invariant "
            f"(witness basis pair {verdict.witness}, relative residual "
            f"{verdict.max_residual:.3e}); the convex reformulation does not "
            "apply, use the direct Newton solver instead")
    quad = assemble_quadratic(ctx)
    try:
        q_star = scipy.linalg.solve(quad.G, -quad.g, assume_a="pos")
    except scipy.linalg.LinAlgError as exc:
        raise OracleError("assembled quadratic is singular; strong convexity "
                          "requires positive-definite input weights and "
                          "measurement covariance") from exc
    grad_norm = float(np.linalg.norm(quad.gradient(q_star)))
    if grad_norm > 1e-10 * max(1.0, float(np.linalg.norm(quad.g))):
        raise OracleError(f"oracle stationarity failed: ||grad|| = {grad_norm:.3e}")
    J_star = quad.value(q_star)
    z_star, residual = h_forward(q_star, ctx.basis, ctx.ops.CP12)
    if residual > 1e-8:
        raise OracleError(
            f"change of variables left the subspace (residual {residual:.3e})")
    f_check = f_of_z(ctx, z_star)
    if abs(f_check - J_star) > 1e-8 * max(1.0, abs(J_star)):
        raise OracleError(
            f"parameterizations disagree at the optimum: f(z*) = {f_check!r} "
            f"vs J* = {J_star!r}")
    K_star = unvec_policy(z_star, ctx.basis)
    return OracleSolution(q_star=q_star, z_star=z_star, K_star=K_star,
                          J_star=J_star, quadratic=quad)


def _sample_sublevel(ctx: CostContext, center: np.ndarray, level: float,
                     J_star: float, n_samples: int,
                     rng: np.random.Generator) -> np.ndarray:
    """Rejection-sample points z with f(z) - J* <= level around `center`.

    The Gaussian proposal scale is adapted until the acceptance rate is
    workable; a persistent acceptance rate below 10% raises SamplingError.
    """
    d = center.size
    scale = 1.0
    for _ in range(40):
        probe = center + scale * rng.standard_normal((64, d))
        hits = sum(f_of_z(ctx, row) - J_star <= level for row in probe)
        rate = hits / probe.shape[0]
        if rate < 0.1:
            scale *= 0.5
        elif rate > 0.9:
            scale *= 2.0
        else:
            break
    accepted = []
    attempts = 0
    max_attempts = 60 * n_samples
    while len(accepted) < n_samples and attempts < max_attempts:
        z = center + scale * rng.standard_normal(d)
        attempts += 1
        if f_of_z(ctx, z) - J_star <= level:
            accepted.append(z)
    if len(accepted) < max(1, n_samples // 10):
        raise SamplingError(
            f"sublevel sampling accepted {len(accepted)}/{attempts} points "
            f"(rate {len(accepted) / max(attempts, 1):.2%}) at scale {scale:.3e}")
    return np.array(accepted)


def _push_to_boundary(ctx: CostContext, center: np.ndarray, z: np.ndarray,
                      level: float, J_star: float) -> Optional[np.ndarray]:
    """Extend z radially from `center` to the sublevel-set boundary.

    Returns a point on the ray through z with f - J_star == level (within
    bisection accuracy, from the inside), or None when f never crosses the
    level along the ray, as happens for a constant objective.
    """
    direction = z - center
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        return None
    u = direction / norm

    def excess(t: float) -> float:
        return f_of_z(ctx, center + t * u) - J_star - level

    lo, hi = 0.0, max(norm, 1.0)
    for _ in range(60):
        if excess(hi) > 0.0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        return None
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return center + lo * u


def _polish_direction(ctx: CostContext, center: np.ndarray, u0: np.ndarray,
                      level: float, J_star: float, criterion,
                      maxfev: int = 60) -> float:
    """Locally maximize criterion(boundary point) over unit directions.

    Runs Nelder-Mead in tangent coordinates around u0 and returns the best
    criterion value found, which is at least the value at u0 itself.
    Directions whose ray never crosses the level are scored -inf.
    """
    d = center.size

    def value(u: np.ndarray) -> float:
        zb = _push_to_boundary(ctx, center, center + u, level, J_star)
        return -np.inf if zb is None else criterion(zb)

    base = value(u0)
    if d == 1 or not np.isfinite(base):
        return base
    tangent = np.linalg.qr(np.column_stack([u0, np.eye(d)]))[0][:, 1:d]

    def negated(xi: np.ndarray) -> float:
        u = u0 + tangent @ xi
        norm = np.linalg.norm(u)
        if norm == 0.0:
            return np.inf
        val = value(u / norm)
        return np.inf if not np.isfinite(val) else -val

    res = scipy.optimize.minimize(
        negated, np.zeros(d - 1), method="Nelder-Mead",
        options=dict(maxfev=maxfev, xatol=1e-3, fatol=1e-3))
    best = -res.fun if np.isfinite(res.fun) else -np.inf
    return max(base, best)


def h_jacobian(ctx: CostContext, q: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the coordinate map h at q."""
    d = q.size
    J = np.empty((d, d))
    for k in range(d):
        qp = q.copy()
        qp[k] += step
        qm = q.copy()
        qm[k] -= step
        zp, _ = h_forward(qp, ctx.basis, ctx.ops.CP12)
        zm, _ = h_forward(qm, ctx.basis, ctx.ops.CP12)
        J[:, k] = (zp - zm) / (2.0 * step)
    return J


def estimate_gd_constants(ctx: CostContext, delta: float, J_star: float,
                          n_samples: int, rng: np.random.Generator,
                          gap0: float = 1.0,
                          z_center: Optional[np.ndarray] = None) -> GdEstimate:
    """Sampled gradient-dominance constant on the sublevel set.

    The sublevel set is {z : f(z) - J* <= 10 gap0 / delta}, where gap0
    plays the role of the initial optimality gap.  mu is exact (smallest
    eigenvalue of the assembled quadratic's Hessian 2G); tau is the sampled
    maximum of ||J_h(h^{-1}(z))||_F^2 over the set.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if gap0 <= 0:
        raise ValueError("gap0 must be positive")
    quad = assemble_quadratic(ctx)
    mu = float(np.linalg.eigvalsh(2.0 * quad.G).min())
    if mu <= 0:
        raise OracleError(f"convexified problem is not strongly convex "
                          f"(min Hessian eigenvalue {mu:.3e})")
    if z_center is None:
        q_star = scipy.linalg.solve(quad.G, -quad.g, assume_a="pos")
        z_center, _ = h_forward(q_star, ctx.basis, ctx.ops.CP12)
    level = 10.0 * gap0 / delta
    points = _sample_sublevel(ctx, z_center, level, J_star, n_samples, rng)
    tau = 0.0
    ratio_min = np.inf
    for z in points:
        q, _ = h_inverse(z, ctx.basis, ctx.ops.CP12)
        tau = max(tau, float(np.linalg.norm(h_jacobian(ctx, q), "fro") ** 2))
        gap = f_of_z(ctx, z) - J_star
        if gap > 1e-12:
            grad = fd_gradient(ctx, z)
            ratio_min = min(ratio_min, float(grad @ grad) / gap)
    return GdEstimate(mu=mu, tau=tau, mu_delta=2.0 * mu / tau, delta=delta,
                      ratio_min=float(ratio_min), n_accepted=points.shape[0])


def estimate_smoothness(ctx: CostContext, delta: float, J_star: float,
                        n_samples: int, rho0: float,
                        rng: np.random.Generator, gap0: float = 1.0,
                        z_center: Optional[np.ndarray] = None,
                        inflation: float = 1.5) -> SmoothnessConstants:
    """Sampled local Lipschitz and smoothness constants on the sublevel set.

    Gradient norms bound L_delta; spectral norms of finite-difference
    Hessians bound M_delta.  Because the objective is polynomial, both
    quantities peak on the sublevel-set boundary, and when the set is
    elongated they concentrate near the tips of its longest axis, which
    raw rejection sampling almost never reaches.  Each sampled point is
    therefore pushed radially to the boundary, the Hessian eigenvectors at
    the center are added as deterministic probe directions, and the best
    direction per criterion is refined by a local search over directions.
    This keeps the sampled maxima stable across random seeds.  Both
    constants are inflated by `inflation` because a sample maximum
    underestimates a supremum.
    """
    if rho0 <= 0:
        raise ValueError("rho0 must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if z_center is None:
        sol = solve_qi_oracle(ctx)
        z_center = sol.z_star
    level = 10.0 * gap0 / delta
    points = _sample_sublevel(ctx, z_center, level, J_star, n_samples, rng)

    def grad_norm(z: np.ndarray) -> float:
        return float(np.linalg.norm(fd_gradient(ctx, z)))

    def hess_norm(z: np.ndarray) -> float:
        return float(np.linalg.norm(fd_hessian(ctx, z), 2))

    L = 0.0
    M = 0.0
    directions = []
    for z in points:
        L = max(L, grad_norm(z))
        M = max(M, hess_norm(z))
        offset = z - z_center
        norm = float(np.linalg.norm(offset))
        if norm > 0.0:
            directions.append(offset / norm)
    eigvecs = np.linalg.eigh(fd_hessian(ctx, z_center))[1]
    for k in range(z_center.size):
        directions.append(eigvecs[:, k])
        directions.append(-eigvecs[:, k])
    best_dir_L = None
    best_dir_M = None
    for u in directions:
        boundary = _push_to_boundary(ctx, z_center, z_center + u, level, J_star)
        if boundary is None:
            continue
        g_val = grad_norm(boundary)
        h_val = hess_norm(boundary)
        if g_val > L:
            L, best_dir_L = g_val, u
        if h_val > M:
            M, best_dir_M = h_val, u
    if best_dir_L is not None:
        L = max(L, _polish_direction(ctx, z_center, best_dir_L, level,
                                     J_star, grad_norm))
    if best_dir_M is not None:
        M = max(M, _polish_direction(ctx, z_center, best_dir_M, level,
                                     J_star, hess_norm))
    return SmoothnessConstants(L_delta=inflation * L, M_delta=inflation * M,
                               rho0=rho0, inflation=inflation)


@dataclass(frozen=True)
class NewtonResult:
    """Outcome of the damped Newton minimization of f."""

    z: np.ndarray
    f: float
    grad_norm: float
    iterations: int
    converged: bool


def newton_minimize_f(ctx: CostContext, z_init: np.ndarray,
                      grad_tol: float = 1e-8, max_iter: int = 200,
                      grad_step: float = 1e-5,
                      hess_step: float = 1e-4) -> NewtonResult:
    """Minimize f directly by damped Newton with finite differences.

    Works without QI as long as f has a minimizer reachable by descent;
    a non-positive-definite Hessian falls back to a backtracked gradient
    step for that iteration.
    """
    z = np.asarray(z_init, dtype=float).reshape(-1).copy()
    f_val = f_of_z(ctx, z)
    for it in range(1, max_iter + 1):
        grad = fd_gradient(ctx, z, step=grad_step)
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= grad_tol:
            return NewtonResult(z=z, f=f_val, grad_norm=grad_norm,
                                iterations=it - 1, converged=True)
        hess = fd_hessian(ctx, z, step=hess_step)
        try:
            direction = -scipy.linalg.solve(hess, grad, assume_a="sym")
            if grad @ direction >= 0:
                direction = -grad
        except scipy.linalg.LinAlgError:
            direction = -grad
        step = 1.0
        slope = float(grad @ direction)
        for _ in range(60):
            trial = z + step * direction
            f_trial = f_of_z(ctx, trial)
            if f_trial <= f_val + 1e-4 * step * slope:
                break
            step *= 0.5
        else:
            return NewtonResult(z=z, f=f_val, grad_norm=grad_norm,
                                iterations=it, converged=False)
        z = z + step * direction
        f_val = f_trial
    grad_norm = float(np.linalg.norm(fd_gradient(ctx, z, step=grad_step)))
    return NewtonResult(z=z, f=f_val, grad_norm=grad_norm,
                        iterations=max_iter, converged=grad_norm <= grad_tol)
