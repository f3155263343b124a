"""Named benchmark problems used by the CLI, tests and demos.

Each fixture bundles a plant, a policy subspace and the assembled lifted
operators.  The four entries:

* ``appendix-d`` - 3-state unstable chain over horizon 2 with a two-row
  sparsity structure (each input sees only the first output coordinate),
  quarter-identity weights and small uniform noise.  QI; the benchmark for
  the oracle and the learner.
* ``b2`` - scalar chain over horizon 2, no subspace constraint beyond
  causality, input-only cost weights and unit covariances.  Its objective
  has a short closed form in the three policy entries, which makes it the
  reference for the change-of-variables algebra.
* ``b3`` - two-state plant over horizon 2 with a tied two-parameter
  diagonal structure.  Not QI, yet the objective is strongly convex;
  exercises the direct (Newton) solve path.
* ``quad`` - horizon-1 plant with the full causal structure.  With a single
  input block the feedback product K CP12 vanishes, so the objective is
  exactly quadratic in z; used for unbiasedness checks of the one-point
  gradient estimator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .policy_space import (SparsityPattern, SubspaceBasis, basis_from_pattern,
                           causal_mask)
from .system import (BlockOperators, NoiseModel, SystemSpec,
                     assemble_block_operators)

# Halfwidth giving per-entry variance 1 for uniform noise: a^2 / 3 = 1.
UNIT_VARIANCE_HALFWIDTH = float(np.sqrt(3.0))


@dataclass(frozen=True)
class Fixture:
    """A plant plus policy subspace, ready for cost evaluation and learning."""

    name: str
    spec: SystemSpec
    basis: SubspaceBasis
    ops: BlockOperators


def _repeat(mat, count: int) -> tuple:
    arr = np.asarray(mat, dtype=float)
    return tuple(arr.copy() for _ in range(count))


def make_appendix_d() -> Fixture:
    A = np.array([[1.0, 0.0, -10.0],
                  [-1.0, 1.0, 0.0],
                  [0.0, 0.0, 1.0]])
    B = np.array([[1.0], [-1.0], [0.0]])
    N = 2
    spec = SystemSpec(
        N=N, n=3, m=1, p=3,
        A_seq=_repeat(A, N + 1),
        B_seq=_repeat(B, N),
        C_seq=_repeat(np.eye(3), N + 1),
        M_seq=_repeat(0.25 * np.eye(3), N + 1),
        R_seq=_repeat(0.25 * np.eye(1), N),
        mu0=0.1 * np.array([1.0, -1.0, 1.0]),
        noise=NoiseModel(delta0_halfwidth=1e-2, w_halfwidth=1e-3,
                         v_halfwidth=1e-3),
    )
    S = np.kron(np.array([[1, 0, 0], [1, 1, 0]]), np.array([[1, 0, 0]]))
    pattern = SparsityPattern(S=S, m=1, p=3, N=N)
    basis = basis_from_pattern(pattern)
    return Fixture(name="appendix-d", spec=spec, basis=basis,
                   ops=assemble_block_operators(spec))


def make_b2() -> Fixture:
    N = 2
    one = np.eye(1)
    a = UNIT_VARIANCE_HALFWIDTH
    spec = SystemSpec(
        N=N, n=1, m=1, p=1,
        A_seq=_repeat(one, N + 1),
        B_seq=_repeat(one, N),
        C_seq=_repeat(one, N + 1),
        M_seq=_repeat(np.zeros((1, 1)), N + 1),
        R_seq=_repeat(one, N),
        mu0=np.zeros(1),
        noise=NoiseModel(delta0_halfwidth=a, w_halfwidth=a, v_halfwidth=a),
    )
    basis = basis_from_pattern(causal_mask(N, 1, 1))
    return Fixture(name="b2", spec=spec, basis=basis,
                   ops=assemble_block_operators(spec))


def make_b3() -> Fixture:
    N = 2
    A = np.array([[1.0, 2.0], [-1.0, -3.0]])
    eye2 = np.eye(2)
    a = UNIT_VARIANCE_HALFWIDTH
    spec = SystemSpec(
        N=N, n=2, m=2, p=2,
        A_seq=_repeat(A, N + 1),
        B_seq=_repeat(eye2, N),
        C_seq=_repeat(eye2, N + 1),
        M_seq=_repeat(eye2, N + 1),
        R_seq=_repeat(eye2, N),
        mu0=np.array([0.0, 1.0]),
        noise=NoiseModel(delta0_halfwidth=a, w_halfwidth=a, v_halfwidth=a),
    )
    # Tied two-parameter structure: z1 on output channel 1 at both input
    # times, z2 on output channel 2; only block-diagonal (t, t) entries.
    E1 = np.zeros((4, 6))
    E1[0, 0] = 1.0
    E1[2, 2] = 1.0
    E2 = np.zeros((4, 6))
    E2[1, 1] = 1.0
    E2[3, 3] = 1.0
    P = np.stack([E1.reshape(-1, order="F"), E2.reshape(-1, order="F")],
                 axis=1)
    P /= np.linalg.norm(P, axis=0)
    basis = SubspaceBasis(P=P, m=2, p=2, N=N, pattern=None)
    return Fixture(name="b3", spec=spec, basis=basis,
                   ops=assemble_block_operators(spec))


def make_quad() -> Fixture:
    N = 1
    spec = SystemSpec(
        N=N, n=2, m=2, p=2,
        A_seq=_repeat(np.array([[0.8, 0.3], [-0.2, 0.9]]), N + 1),
        B_seq=_repeat(np.array([[1.0, 0.2], [0.0, 1.0]]), N),
        C_seq=_repeat(np.array([[1.0, 0.5], [0.0, 1.0]]), N + 1),
        M_seq=_repeat(np.diag([1.0, 0.5]), N + 1),
        R_seq=_repeat(np.diag([0.5, 1.0]), N),
        mu0=np.array([0.3, -0.4]),
        noise=NoiseModel(delta0_halfwidth=0.05, w_halfwidth=0.02,
                         v_halfwidth=0.01),
    )
    basis = basis_from_pattern(causal_mask(N, 2, 2))
    return Fixture(name="quad", spec=spec, basis=basis,
                   ops=assemble_block_operators(spec))


FIXTURES: dict[str, Callable[[], Fixture]] = {
    "appendix-d": make_appendix_d,
    "b2": make_b2,
    "b3": make_b3,
    "quad": make_quad,
}


def get_fixture(name: str) -> Fixture:
    try:
        factory = FIXTURES[name]
    except KeyError:
        known = ", ".join(sorted(FIXTURES))
        raise KeyError(f"unknown fixture {name!r}; known fixtures: {known}")
    return factory()
