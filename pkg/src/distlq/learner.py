"""One-point zeroth-order learning of distributed policies.

Each iteration perturbs the coordinates z by a uniform sample u on the
radius-r sphere, observes a single noisy rollout cost f_hat at z + u, and
descends along the unbiased-for-smoothed-f estimate f_hat (d / r^2) u.
Exactly one noise realization and one rollout per iteration; the learner
never touches the model beyond the simulator call (true costs can be
logged for diagnostics, but never steer the iteration).

The module also evaluates the theoretical schedule: the disturbance
constant D = max(W^2 / lambda_w, V^2 / lambda_v), the observed-cost bounds
G_inf and G_2 = G_inf^2, and the (eta, r, T) prescription with its side
condition for a requested accuracy epsilon and failure probability delta.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import system
from .cost import CostContext, f_of_z
from .fixtures import Fixture
from .policy_space import unvec_policy
from .system import NoiseModel


class ScheduleError(ValueError):
    """The requested (epsilon, delta) violates the schedule's validity range."""


class DivergenceError(RuntimeError):
    """The iterate left the representable range; carries the partial log."""

    def __init__(self, message: str, log: "RunLog"):
        super().__init__(message)
        self.log = log


@dataclass(frozen=True)
class LearnerConfig:
    """Algorithm hyperparameters for a single run."""

    eta: float
    r: float
    T: int
    z0: np.ndarray
    seed: int
    log_true_cost_every: int = 0

    def __post_init__(self) -> None:
        if self.eta < 0 or self.r <= 0:
            raise ValueError("eta must be >= 0 and r > 0")
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if self.log_true_cost_every < 0:
            raise ValueError("log_true_cost_every must be nonnegative")
        object.__setattr__(self, "z0",
                           np.asarray(self.z0, dtype=float).reshape(-1))


@dataclass
class RunLog:
    """Per-iteration trace of one learning run.

    f_true is NaN at iterations where the diagnostic was not evaluated.
    `stopped_at` is None for full-length runs; early-stopped runs record
    the first iteration whose diagnostic gap reached the stop target, and
    the arrays end there.
    """

    iters: np.ndarray
    f_hat: np.ndarray
    z_norm: np.ndarray
    f_true: np.ndarray
    z_final: np.ndarray
    wall_time: float
    seed: int
    diverged: bool = False
    stopped_at: Optional[int] = None


def sample_sphere(d: int, r: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample on the sphere of radius r (normalized Gaussian)."""
    if d < 1 or r <= 0:
        raise ValueError("need d >= 1 and r > 0")
    while True:
        u = rng.standard_normal(d)
        norm = np.linalg.norm(u)
        if norm > 0.0:
            return (r / norm) * u


def zeroth_order_step(z: np.ndarray, fixture: Fixture, eta: float, r: float,
                      rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """One Algorithm step: perturb, roll out once, descend the estimate."""
    d = z.size
    u = sample_sphere(d, r, rng)
    noise = system.sample_noise(fixture.spec, rng)
    K = unvec_policy(z + u, fixture.basis)
    traj = system.rollout(fixture.spec, K, noise, validate=False)
    f_hat = system.empirical_cost(traj, fixture.ops)
    z_next = z - eta * f_hat * (d / r ** 2) * u
    return z_next, f_hat


def learn(fixture: Fixture, config: LearnerConfig,
          stop_gap: Optional[float] = None,
          j_star: Optional[float] = None,
          check_every: int = 1,
          ctx: Optional[CostContext] = None) -> tuple[np.ndarray, RunLog]:
    """Run the one-point method for config.T iterations; returns (K_T, log).

    Records (iterate norm, observed cost) before each update.  When
    `stop_gap` and `j_star` are given, the true gap is checked every
    `check_every` iterations and the run ends at the first checked iterate
    whose gap is at or below `stop_gap` (first-passage convention: the
    recorded iteration index is the number of completed updates before the
    passing iterate, so a satisfying start records 0).
    """
    spec, basis, ops = fixture.spec, fixture.basis, fixture.ops
    if ctx is None and (stop_gap is not None or config.log_true_cost_every):
        ctx = CostContext(ops=ops, basis=basis)
    if stop_gap is not None and j_star is None:
        raise ValueError("stop_gap requires j_star")

    rng = np.random.default_rng(config.seed)
    d = basis.d
    T = config.T
    z = config.z0.copy()
    if z.shape != (d,):
        raise ValueError(f"z0 has shape {z.shape}, expected ({d},)")
    P = basis.P
    scale = config.eta * d / config.r ** 2
    log_every = config.log_true_cost_every

    iters = np.arange(T, dtype=np.int64)
    f_hat_log = np.empty(T)
    z_norm_log = np.empty(T)
    f_true_log = np.full(T, np.nan)

    sample_noise = system.sample_noise
    rollout = system.rollout
    empirical_cost = system.empirical_cost
    m, p, N = spec.m, spec.p, spec.N

    start = time.perf_counter()
    diverged = False
    stopped_at: Optional[int] = None
    end = T
    for i in range(T):
        if (log_every and i % log_every == 0) or \
                (stop_gap is not None and i % check_every == 0):
            f_true = f_of_z(ctx, z)
            f_true_log[i] = f_true
            if stop_gap is not None and f_true - j_star <= stop_gap:
                # i completed updates were enough; no record for this iterate.
                stopped_at = i
                end = i
                break
        u = sample_sphere(d, config.r, rng)
        noise = sample_noise(spec, rng)
        K = (P @ (z + u)).reshape((m * N, p * (N + 1)), order="F")
        traj = rollout(spec, K, noise, validate=False)
        f_hat = empirical_cost(traj, fixture.ops)
        z_norm_log[i] = np.linalg.norm(z)
        f_hat_log[i] = f_hat
        if not np.isfinite(f_hat):
            diverged = True
            end = i + 1
            break
        z_new = z - (scale * f_hat) * u
        if not np.all(np.isfinite(z_new)):
            diverged = True
            end = i + 1
            break
        z = z_new
    wall = time.perf_counter() - start

    log = RunLog(iters=iters[:end], f_hat=f_hat_log[:end],
                 z_norm=z_norm_log[:end], f_true=f_true_log[:end],
                 z_final=z.copy(), wall_time=wall, seed=config.seed,
                 diverged=diverged, stopped_at=stopped_at)
    if diverged:
        raise DivergenceError(
            f"iterate became non-finite at iteration {end - 1} "
            f"(seed {config.seed}); last finite state is in the log", log)
    return unvec_policy(z, basis), log


def one_point_estimates(fixture: Fixture, z: np.ndarray, r: float,
                        count: int, rng: np.random.Generator,
                        chunk: int = 1 << 16) -> np.ndarray:
    """Vectorized batch of independent one-point gradient estimates at z.

    Returns a (count, d) array whose rows are f_hat (d / r^2) u for fresh
    sphere and noise draws; semantically `count` independent repetitions
    of the estimator inside zeroth_order_step at a fixed z.  Draw order
    per chunk: sphere directions, delta0, process noise, measurement noise.
    """
    spec, basis = fixture.spec, fixture.basis
    n, m, p, N = spec.n, spec.m, spec.p, spec.N
    d = basis.d
    z = np.asarray(z, dtype=float).reshape(-1)
    K0 = unvec_policy(z, basis)
    E = basis.basis_matrices()
    nm = spec.noise
    Mbig, Rbig = fixture.ops.Mbig, fixture.ops.Rbig

    out = np.empty((count, d))
    done = 0
    while done < count:
        B = min(chunk, count - done)
        U = rng.standard_normal((B, d))
        U *= r / np.linalg.norm(U, axis=1, keepdims=True)
        d0 = rng.uniform(-nm.delta0_halfwidth, nm.delta0_halfwidth, (B, n))
        w = rng.uniform(-nm.w_halfwidth, nm.w_halfwidth, (B, N, n))
        v = rng.uniform(-nm.v_halfwidth, nm.v_halfwidth, (B, N + 1, p))

        xt = spec.mu0 + d0
        yflat = np.empty((B, p * (N + 1)))
        uflat = np.empty((B, m * N))
        for t in range(N + 1):
            yflat[:, t * p:(t + 1) * p] = xt @ spec.C_seq[t].T + v[:, t]
            if t < N:
                Y = yflat[:, :p * (t + 1)]
                Kt = K0[t * m:(t + 1) * m, :p * (t + 1)]
                Et = E[:, t * m:(t + 1) * m, :p * (t + 1)]
                ut = Y @ Kt.T + np.einsum("bk,kmq,bq->bm", U, Et, Y,
                                          optimize=True)
                uflat[:, t * m:(t + 1) * m] = ut
                xt = xt @ spec.A_seq[t].T + ut @ spec.B_seq[t].T + w[:, t]
        f_hat = (np.einsum("bi,ij,bj->b", yflat, Mbig, yflat, optimize=True)
                 + np.einsum("bi,ij,bj->b", uflat, Rbig, uflat, optimize=True))
        out[done:done + B] = (d / r ** 2) * f_hat[:, None] * U
        done += B
    return out


@dataclass(frozen=True)
class ScheduleConstants:
    """Everything the theoretical schedule needs, bundled.

    mu_delta, L_delta, M_delta and rho0 usually come from the oracle
    estimators; D, W, V and the noise floor eigenvalues from compute_D's
    helper; f_z0 and Delta0 from one exact cost evaluation at z0.
    """

    mu_delta: float
    L_delta: float
    M_delta: float
    rho0: float
    D: float
    W: float
    V: float
    lambda_w: float
    lambda_v: float
    f_z0: float
    Delta0: float
    d: int

    def __post_init__(self) -> None:
        positives = ("mu_delta", "L_delta", "M_delta", "rho0", "D", "W", "V",
                     "lambda_w", "lambda_v", "f_z0")
        for name in positives:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.Delta0 < 0:
            raise ValueError("Delta0 must be nonnegative")
        if self.d < 1:
            raise ValueError("d must be at least 1")


@dataclass(frozen=True)
class Schedule:
    """Output of compute_schedule with the individual min-terms retained."""

    eta: float
    r: float
    T: int
    epsilon: float
    delta: float
    success_probability: float
    theta_delta: float
    r_terms: tuple[float, float, float, float]
    eta_terms: tuple[float, float, float]


def noise_floor(noise: NoiseModel, n: int, p: int, N: int
                ) -> tuple[float, float, float, float]:
    """(W, V, lambda_w, lambda_v): hard norm bounds and covariance floors."""
    W, V = noise.stacked_bounds(n, p, N)
    lambda_w = min(noise.var_delta0, noise.var_w) if N >= 1 else noise.var_delta0
    lambda_v = noise.var_v
    return W, V, lambda_w, lambda_v


def compute_D(noise: NoiseModel, n: int, p: int, N: int) -> float:
    """Observed-to-expected cost ratio bound D = max(W^2/lambda_w, V^2/lambda_v)."""
    if min(noise.delta0_halfwidth, noise.w_halfwidth, noise.v_halfwidth) <= 0:
        raise ValueError("D requires all three noise halfwidths positive "
                         "(a zero halfwidth gives a singular covariance)")
    W, V, lambda_w, lambda_v = noise_floor(noise, n, p, N)
    return max(W ** 2 / lambda_w, V ** 2 / lambda_v)


def bound_G(constants: ScheduleConstants, r: float,
            delta: float) -> tuple[float, float]:
    """Bounds on the gradient estimate: sup norm G_inf and variance proxy G_2.

    Valid for radii small enough that perturbed iterates stay in the
    20/delta sublevel set, which is the radius precondition below.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    r_max = 10.0 * constants.f_z0 / (delta * constants.L_delta)
    if r > r_max:
        raise ValueError(
            f"radius {r:.3e} exceeds the sublevel-safety bound {r_max:.3e} "
            "(perturbed costs are no longer bounded by 20/delta times f(z0))")
    G_inf = 20.0 * constants.d * constants.D * constants.f_z0 / (delta * r)
    return G_inf, G_inf ** 2


def compute_schedule(constants: ScheduleConstants, epsilon: float,
                     delta: float) -> Schedule:
    """Theoretical (eta, r, T) for accuracy epsilon at confidence 1 - delta.

    r is the minimum of four radius terms, eta the minimum of three step
    terms at that r, and T = ceil((4 / (eta mu_delta)) log(4 Delta0 /
    (delta epsilon))).  Requested pairs with epsilon >= 4 Delta0 / delta
    are rejected (the iteration count would be nonpositive), as is any
    violation of the side condition epsilon log(4 Delta0 / (delta
    epsilon)) <= 16 Delta0 / delta.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    c = constants
    log_arg = 4.0 * c.Delta0 / (delta * epsilon)
    if log_arg <= 1.0:
        raise ScheduleError(
            f"epsilon = {epsilon:g} is too large for delta = {delta:g}: "
            f"the accuracy target must be below 4 Delta0 / delta = "
            f"{4.0 * c.Delta0 / delta:g} for the iteration count to be positive")
    log_term = float(np.log(log_arg))
    if epsilon * log_term > 16.0 * c.Delta0 / delta:
        raise ScheduleError(
            f"epsilon = {epsilon:g} is too large for delta = {delta:g}: "
            "the side condition epsilon log(4 Delta0 / (delta epsilon)) "
            "<= 16 Delta0 / delta fails")

    theta = min(1.0 / (2.0 * c.M_delta), c.rho0 / c.L_delta)
    r_terms = (
        theta * c.mu_delta / (2.0 * c.M_delta) * np.sqrt(delta * epsilon / 40.0),
        1.0 / (2.0 * c.M_delta) * np.sqrt(epsilon * c.mu_delta * delta / 5.0),
        c.rho0,
        10.0 * c.f_z0 / (delta * c.L_delta),
    )
    r = float(min(r_terms))
    eta_terms = (
        epsilon * c.mu_delta * delta ** 3 * r ** 2
        / (16000.0 * c.M_delta * c.d ** 2 * c.D ** 2 * c.f_z0 ** 2),
        1.0 / (2.0 * c.M_delta),
        c.rho0 * r * delta / (20.0 * c.d * c.D * c.f_z0),
    )
    eta = float(min(eta_terms))
    T = int(np.ceil(4.0 / (eta * c.mu_delta) * log_term))
    return Schedule(eta=eta, r=r, T=T, epsilon=epsilon, delta=delta,
                    success_probability=1.0 - delta, theta_delta=theta,
                    r_terms=tuple(float(x) for x in r_terms),
                    eta_terms=tuple(float(x) for x in eta_terms))
