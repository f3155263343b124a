"""Exact expected cost of causal policies and its coordinate form f(z).

With stacked disturbance w = muW + w_real (cov SigmaW) and measurement
noise v (cov SigmaV), the closed loop under u = K y gives

    y = T_K (Cbig P11) w + T_K v,      T_K = (I - CP12 K)^{-1},
    u = K y,

so the expected cost splits into six terms: a covariance trace and a mean
quadratic for each of the four linear maps below.  T_K is a terminating
Neumann series because CP12 K is strictly block lower-triangular, hence
every cost here is an exact polynomial evaluation, never an iterative
solve.  The Q parameterization replaces the feedback loop with the affine
maps (I + CP12 Q) and Q, which is what makes the cost quadratic in Q.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .policy_space import SubspaceBasis, neumann_inverse, unvec_policy
from .system import BlockOperators, check_causal


@dataclass(frozen=True)
class CostContext:
    """A plant's lifted operators paired with a policy subspace basis."""

    ops: BlockOperators
    basis: SubspaceBasis

    def __post_init__(self) -> None:
        ops, basis = self.ops, self.basis
        if (ops.m, ops.p, ops.N) != (basis.m, basis.p, basis.N):
            raise ValueError(
                f"operators built for (m={ops.m}, p={ops.p}, N={ops.N}) but "
                f"basis for (m={basis.m}, p={basis.p}, N={basis.N})")

    @property
    def d(self) -> int:
        return self.basis.d


def _cov_term(Phi: np.ndarray, weight: np.ndarray, Sigma: np.ndarray) -> float:
    """tr(Phi' weight Phi Sigma), the covariance contribution of one map."""
    return float(np.trace(Phi.T @ weight @ Phi @ Sigma))


def _mean_term(Phi: np.ndarray, weight: np.ndarray, mu: np.ndarray) -> float:
    vec = Phi @ mu
    return float(vec @ weight @ vec)


def exact_cost_terms(ops: BlockOperators, K: np.ndarray,
                     validate: bool = True) -> np.ndarray:
    """The six summands of the expected cost at K, in a fixed order.

    Order: output/disturbance trace, output/measurement trace,
    input/disturbance trace, input/measurement trace, output mean term,
    input mean term.
    """
    if validate:
        check_causal(K, ops.m, ops.p, ops.N)
    CP11 = ops.Cbig @ ops.P11
    T_K = neumann_inverse(-ops.CP12 @ K, ops.N + 1)
    Phi_yw = T_K @ CP11
    Phi_uw = K @ Phi_yw
    Phi_uv = K @ T_K
    return np.array([
        _cov_term(Phi_yw, ops.Mbig, ops.SigmaW),
        _cov_term(T_K, ops.Mbig, ops.SigmaV),
        _cov_term(Phi_uw, ops.Rbig, ops.SigmaW),
        _cov_term(Phi_uv, ops.Rbig, ops.SigmaV),
        _mean_term(Phi_yw, ops.Mbig, ops.muW),
        _mean_term(Phi_uw, ops.Rbig, ops.muW),
    ])


def exact_cost(ops: BlockOperators, K: np.ndarray,
               validate: bool = True) -> float:
    """Expected cost E[y' Mbig y + u' Rbig u] under the causal policy K."""
    return float(exact_cost_terms(ops, K, validate=validate).sum())


def exact_cost_q_terms(ops: BlockOperators, Q: np.ndarray,
                       validate: bool = True) -> np.ndarray:
    """Six cost summands in the convexifying Q parameterization."""
    if validate:
        check_causal(Q, ops.m, ops.p, ops.N)
    CP11 = ops.Cbig @ ops.P11
    eye = np.eye(ops.p * (ops.N + 1))
    Phi_yv = eye + ops.CP12 @ Q
    Phi_yw = Phi_yv @ CP11
    Phi_uw = Q @ CP11
    return np.array([
        _cov_term(Phi_yw, ops.Mbig, ops.SigmaW),
        _cov_term(Phi_yv, ops.Mbig, ops.SigmaV),
        _cov_term(Phi_uw, ops.Rbig, ops.SigmaW),
        _cov_term(Q, ops.Rbig, ops.SigmaV),
        _mean_term(Phi_yw, ops.Mbig, ops.muW),
        _mean_term(Phi_uw, ops.Rbig, ops.muW),
    ])


def exact_cost_q(ops: BlockOperators, Q: np.ndarray,
                 validate: bool = True) -> float:
    """Expected cost as a function of Q; quadratic, and equal to
    exact_cost(H_op(Q)) entrywise in exact arithmetic."""
    return float(exact_cost_q_terms(ops, Q, validate=validate).sum())


def f_of_z(ctx: CostContext, z: np.ndarray) -> float:
    """Objective in subspace coordinates: f(z) = exact_cost(unvec(P z))."""
    K = unvec_policy(z, ctx.basis)
    return exact_cost(ctx.ops, K, validate=False)


def g_of_q(ctx: CostContext, q: np.ndarray) -> float:
    """Convexified objective in subspace coordinates of Q."""
    Q = unvec_policy(q, ctx.basis)
    return exact_cost_q(ctx.ops, Q, validate=False)


def fd_gradient(ctx: CostContext, z: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of f; O(step^2) accurate on polynomials."""
    if step <= 0:
        raise ValueError("step must be positive")
    z = np.asarray(z, dtype=float).reshape(-1)
    grad = np.empty(z.size)
    for k in range(z.size):
        zp = z.copy()
        zp[k] += step
        zm = z.copy()
        zm[k] -= step
        grad[k] = (f_of_z(ctx, zp) - f_of_z(ctx, zm)) / (2.0 * step)
    return grad


def fd_hessian(ctx: CostContext, z: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian of f, symmetrized."""
    if step <= 0:
        raise ValueError("step must be positive")
    z = np.asarray(z, dtype=float).reshape(-1)
    d = z.size
    H = np.empty((d, d))
    f0 = f_of_z(ctx, z)
    for i in range(d):
        zi = z.copy()
        zi[i] += step
        f_pi = f_of_z(ctx, zi)
        zi[i] = z[i] - step
        f_mi = f_of_z(ctx, zi)
        H[i, i] = (f_pi - 2.0 * f0 + f_mi) / step ** 2
        for j in range(i + 1, d):
            zpp = z.copy()
            zpp[[i, j]] += step
            zmm = z.copy()
            zmm[[i, j]] -= step
            zpm = z.copy()
            zpm[i] += step
            zpm[j] -= step
            zmp = z.copy()
            zmp[i] -= step
            zmp[j] += step
            H[i, j] = (f_of_z(ctx, zpp) - f_of_z(ctx, zpm)
                       - f_of_z(ctx, zmp) + f_of_z(ctx, zmm)) / (4.0 * step ** 2)
            H[j, i] = H[i, j]
    return H
