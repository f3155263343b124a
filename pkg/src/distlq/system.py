"""Finite-horizon time-varying linear systems and their lifted block operators.

The plant is

    x_{t+1} = A_t x_t + B_t u_t + w_t,   x_0 = mu0 + delta0,
    y_t     = C_t x_t + v_t,             t = 0, ..., N,

with inputs active for t < N.  Stacking states, inputs and outputs over the
horizon gives the affine relation x = P11 (w_real + muW) + P12 u, where
P11 = (I - Z Abig)^{-1} for the block down-shift Z.  Since Z Abig is
nilpotent, P11 is a finite product sum and is assembled by forward block
substitution, never by dense inversion.

Noise entries are i.i.d. uniform on symmetric intervals, so each covariance
is (halfwidth^2 / 3) I and every stacked realization obeys a hard norm
bound (W for the disturbance channel, V for the measurement channel).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class DimensionError(ValueError):
    """A matrix in a system description has inconsistent dimensions."""


@dataclass(frozen=True)
class NoiseModel:
    """Per-entry uniform noise bounds for initial state, process and sensing.

    Each scalar is the halfwidth a of a uniform interval [-a, a]; the
    associated per-entry variance is a^2 / 3.  A halfwidth of zero turns
    the channel off deterministically.
    """

    delta0_halfwidth: float
    w_halfwidth: float
    v_halfwidth: float

    def __post_init__(self) -> None:
        for name in ("delta0_halfwidth", "w_halfwidth", "v_halfwidth"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def var_delta0(self) -> float:
        return self.delta0_halfwidth ** 2 / 3.0

    @property
    def var_w(self) -> float:
        return self.w_halfwidth ** 2 / 3.0

    @property
    def var_v(self) -> float:
        return self.v_halfwidth ** 2 / 3.0

    def stacked_bounds(self, n: int, p: int, N: int) -> tuple[float, float]:
        """Hard norm bounds (W, V) for the stacked disturbance and noise.

        W bounds ||[delta0; w_0; ...; w_{N-1}]||_2 over the uniform box and
        V bounds ||[v_0; ...; v_N]||_2; both are the worst-case corner of
        the box, hence tight.
        """
        W = float(np.sqrt(n * self.delta0_halfwidth ** 2
                          + n * N * self.w_halfwidth ** 2))
        V = float(np.sqrt(p * (N + 1) * self.v_halfwidth ** 2))
        return W, V


def _as_matrix_seq(seq, count: int, shape: tuple[int, int], label: str):
    """Validate and convert a sequence of matrices, naming offenders."""
    mats = [np.asarray(mat, dtype=float) for mat in seq]
    if len(mats) != count:
        raise DimensionError(
            f"{label} must contain {count} matrices, got {len(mats)}")
    for t, mat in enumerate(mats):
        if mat.shape != shape:
            raise DimensionError(
                f"{label}[{t}] has shape {mat.shape}, expected {shape}")
    return tuple(mats)


def _check_sym_psd(mat: np.ndarray, label: str, strict: bool,
                   tol: float = 1e-10) -> None:
    if not np.allclose(mat, mat.T, atol=tol):
        raise ValueError(f"{label} is not symmetric")
    eigs = np.linalg.eigvalsh(mat)
    if strict:
        if eigs.min() <= tol:
            raise ValueError(f"{label} is not positive definite "
                             f"(min eigenvalue {eigs.min():.3e})")
    elif eigs.min() < -tol:
        raise ValueError(f"{label} is not positive semidefinite "
                         f"(min eigenvalue {eigs.min():.3e})")


@dataclass(frozen=True)
class SystemSpec:
    """Time-varying plant, horizon, cost weights and noise description.

    A_seq, C_seq and M_seq carry N+1 entries (one per time step including
    the terminal step); B_seq and R_seq carry N entries since the last
    input is never applied.
    """

    N: int
    n: int
    m: int
    p: int
    A_seq: tuple
    B_seq: tuple
    C_seq: tuple
    M_seq: tuple
    R_seq: tuple
    mu0: np.ndarray
    noise: NoiseModel

    def __post_init__(self) -> None:
        if min(self.N, self.n, self.m, self.p) < 1:
            raise DimensionError("N, n, m, p must all be positive")
        object.__setattr__(self, "A_seq", _as_matrix_seq(
            self.A_seq, self.N + 1, (self.n, self.n), "A_seq"))
        object.__setattr__(self, "B_seq", _as_matrix_seq(
            self.B_seq, self.N, (self.n, self.m), "B_seq"))
        object.__setattr__(self, "C_seq", _as_matrix_seq(
            self.C_seq, self.N + 1, (self.p, self.n), "C_seq"))
        object.__setattr__(self, "M_seq", _as_matrix_seq(
            self.M_seq, self.N + 1, (self.p, self.p), "M_seq"))
        object.__setattr__(self, "R_seq", _as_matrix_seq(
            self.R_seq, self.N, (self.m, self.m), "R_seq"))
        mu0 = np.asarray(self.mu0, dtype=float).reshape(-1)
        if mu0.shape != (self.n,):
            raise DimensionError(
                f"mu0 has shape {mu0.shape}, expected ({self.n},)")
        object.__setattr__(self, "mu0", mu0)
        for t, mat in enumerate(self.M_seq):
            _check_sym_psd(mat, f"M_seq[{t}]", strict=False)
        for t, mat in enumerate(self.R_seq):
            _check_sym_psd(mat, f"R_seq[{t}]", strict=True)

    @property
    def x_dim(self) -> int:
        return self.n * (self.N + 1)

    @property
    def u_dim(self) -> int:
        return self.m * self.N

    @property
    def y_dim(self) -> int:
        return self.p * (self.N + 1)


@dataclass(frozen=True)
class BlockOperators:
    """Lifted matrices of the stacked finite-horizon system.

    P11 = (I - Z Abig)^{-1} maps stacked disturbances to stacked states,
    P12 = P11 Z Bbig maps stacked inputs to stacked states, and
    CP12 = Cbig P12 is the (strictly block lower-triangular) map from
    inputs to outputs that drives both the cost and the QI test.
    """

    n: int
    m: int
    p: int
    N: int
    Z: np.ndarray
    Abig: np.ndarray
    Bbig: np.ndarray
    Cbig: np.ndarray
    P11: np.ndarray
    P12: np.ndarray
    CP12: np.ndarray
    Mbig: np.ndarray
    Rbig: np.ndarray
    SigmaW: np.ndarray
    SigmaV: np.ndarray
    muW: np.ndarray


@dataclass(frozen=True)
class NoiseRealization:
    """One stacked draw: w_real = [delta0; w_0; ...; w_{N-1}], v_real = [v_0; ...; v_N]."""

    w_real: np.ndarray
    v_real: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """One simulated closed-loop trajectory with the noise that produced it."""

    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    w_real: np.ndarray
    v_real: np.ndarray


def assemble_block_operators(spec: SystemSpec) -> BlockOperators:
    """Build all lifted matrices for `spec`.

    P11 is filled block by block via the recursion
    block(i, j) = A_{i-1} block(i-1, j), which is exact because Z Abig is
    nilpotent; no matrix is ever inverted.
    """
    n, m, p, N = spec.n, spec.m, spec.p, spec.N
    shift = np.zeros((N + 1, N + 1))
    shift[1:, :-1] = np.eye(N)
    Z = np.kron(shift, np.eye(n))

    Abig = scipy.linalg.block_diag(*spec.A_seq)
    Cbig = scipy.linalg.block_diag(*spec.C_seq)
    Bbig = np.zeros((n * (N + 1), m * N))
    Bbig[:n * N, :] = scipy.linalg.block_diag(*spec.B_seq)
    Mbig = scipy.linalg.block_diag(*spec.M_seq)
    Rbig = scipy.linalg.block_diag(*spec.R_seq)

    P11 = np.zeros((n * (N + 1), n * (N + 1)))
    for i in range(N + 1):
        rows = slice(i * n, (i + 1) * n)
        P11[rows, rows] = np.eye(n)
        for j in range(i - 1, -1, -1):
            cols = slice(j * n, (j + 1) * n)
            prev = P11[(i - 1) * n:i * n, cols]
            P11[rows, cols] = spec.A_seq[i - 1] @ prev
    P12 = P11 @ Z @ Bbig
    CP12 = Cbig @ P12

    SigmaW = np.diag(np.concatenate([
        np.full(n, spec.noise.var_delta0),
        np.full(n * N, spec.noise.var_w),
    ]))
    SigmaV = spec.noise.var_v * np.eye(p * (N + 1))
    muW = np.zeros(n * (N + 1))
    muW[:n] = spec.mu0

    return BlockOperators(n=n, m=m, p=p, N=N, Z=Z, Abig=Abig, Bbig=Bbig,
                          Cbig=Cbig, P11=P11, P12=P12, CP12=CP12, Mbig=Mbig,
                          Rbig=Rbig, SigmaW=SigmaW, SigmaV=SigmaV, muW=muW)


def sample_noise(spec: SystemSpec, rng: np.random.Generator) -> NoiseRealization:
    """Draw one stacked noise realization, each entry uniform on its interval.

    Draw order is fixed (delta0, then all w_t, then all v_t) so that a
    seeded generator reproduces runs bitwise.
    """
    nm = spec.noise
    w_real = np.empty(spec.n * (spec.N + 1))
    w_real[:spec.n] = rng.uniform(-nm.delta0_halfwidth, nm.delta0_halfwidth,
                                  spec.n)
    w_real[spec.n:] = rng.uniform(-nm.w_halfwidth, nm.w_halfwidth,
                                  spec.n * spec.N)
    v_real = rng.uniform(-nm.v_halfwidth, nm.v_halfwidth,
                         spec.p * (spec.N + 1))
    return NoiseRealization(w_real=w_real, v_real=v_real)


class CausalityError(ValueError):
    """A feedback matrix uses outputs from the future."""


def check_causal(K: np.ndarray, m: int, p: int, N: int) -> None:
    """Raise CausalityError if any entry of K sits above the block diagonal."""
    if K.shape != (m * N, p * (N + 1)):
        raise DimensionError(
            f"policy has shape {K.shape}, expected {(m * N, p * (N + 1))}")
    for t in range(N):
        future = K[t * m:(t + 1) * m, (t + 1) * p:]
        if np.any(future != 0.0):
            raise CausalityError(
                f"policy row block {t} depends on outputs after time {t}")


def rollout(spec: SystemSpec, K: np.ndarray, noise: NoiseRealization,
            validate: bool = True) -> Trajectory:
    """Simulate the closed loop u_t = sum_{s<=t} K_{t,s} y_s under `noise`.

    Deterministic given the noise realization.  `validate=False` skips the
    causality check for callers that construct K from a causal basis.
    """
    n, m, p, N = spec.n, spec.m, spec.p, spec.N
    if validate:
        check_causal(K, m, p, N)
        if noise.w_real.shape != (n * (N + 1),) or \
                noise.v_real.shape != (p * (N + 1),):
            raise DimensionError("noise realization does not match spec dims")

    x = np.empty(n * (N + 1))
    y = np.empty(p * (N + 1))
    u = np.empty(m * N)
    w_real, v_real = noise.w_real, noise.v_real
    A_seq, B_seq, C_seq = spec.A_seq, spec.B_seq, spec.C_seq

    xt = spec.mu0 + w_real[:n]
    for t in range(N + 1):
        x[t * n:(t + 1) * n] = xt
        y[t * p:(t + 1) * p] = C_seq[t] @ xt + v_real[t * p:(t + 1) * p]
        if t < N:
            ut = K[t * m:(t + 1) * m, :p * (t + 1)] @ y[:p * (t + 1)]
            u[t * m:(t + 1) * m] = ut
            xt = A_seq[t] @ xt + B_seq[t] @ ut + w_real[(t + 1) * n:(t + 2) * n]
    return Trajectory(x=x, y=y, u=u, w_real=w_real, v_real=v_real)


def empirical_cost(traj: Trajectory, ops: BlockOperators) -> float:
    """Observed quadratic cost y' Mbig y + u' Rbig u of one trajectory."""
    y, u = traj.y, traj.u
    return float(y @ (ops.Mbig @ y) + u @ (ops.Rbig @ u))
