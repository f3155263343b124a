"""Shared fixtures and helpers for the test suite."""

import numpy as np
import pytest

from distlq.cost import CostContext
from distlq.fixtures import get_fixture
from distlq.oracle import solve_qi_oracle
from distlq.policy_space import basis_from_pattern, causal_mask
from distlq.system import NoiseModel, SystemSpec, assemble_block_operators


def make_random_spec(rng, n=None, m=None, p=None, N=None,
                     max_dim=3, max_N=4, noise=None):
    """A random well-posed system for property tests.

    Cost weights are random PSD (M) and PD (R); dynamics entries are
    standard normal scaled to keep horizon products moderate.
    """
    n = n or int(rng.integers(1, max_dim + 1))
    m = m or int(rng.integers(1, max_dim + 1))
    p = p or int(rng.integers(1, max_dim + 1))
    N = N or int(rng.integers(1, max_N + 1))

    def psd(k):
        F = rng.normal(size=(k, k)) / np.sqrt(k)
        return F @ F.T

    A_seq = [rng.normal(size=(n, n)) * 0.6 for _ in range(N + 1)]
    B_seq = [rng.normal(size=(n, m)) for _ in range(N)]
    C_seq = [rng.normal(size=(p, n)) for _ in range(N + 1)]
    M_seq = [psd(p) for _ in range(N + 1)]
    R_seq = [psd(m) + 0.2 * np.eye(m) for _ in range(N)]
    if noise is None:
        noise = NoiseModel(delta0_halfwidth=float(rng.uniform(0.05, 0.5)),
                           w_halfwidth=float(rng.uniform(0.05, 0.5)),
                           v_halfwidth=float(rng.uniform(0.05, 0.5)))
    return SystemSpec(N=N, n=n, m=m, p=p, A_seq=A_seq, B_seq=B_seq,
                      C_seq=C_seq, M_seq=M_seq, R_seq=R_seq,
                      mu0=rng.normal(size=n) * 0.3, noise=noise)


def make_random_fixture_parts(rng, **kw):
    """(spec, ops, full-causal basis) triple for a random system."""
    spec = make_random_spec(rng, **kw)
    ops = assemble_block_operators(spec)
    basis = basis_from_pattern(causal_mask(spec.N, spec.m, spec.p))
    return spec, ops, basis


def random_causal_matrix(rng, m, p, N, scale=1.0):
    """Dense random matrix supported on the causal mask."""
    mask = causal_mask(N, m, p).S
    return rng.normal(size=mask.shape) * mask * scale


@pytest.fixture(scope="session")
def appendix_d():
    return get_fixture("appendix-d")


@pytest.fixture(scope="session")
def b2():
    return get_fixture("b2")


@pytest.fixture(scope="session")
def b3():
    return get_fixture("b3")


@pytest.fixture(scope="session")
def quad():
    return get_fixture("quad")


@pytest.fixture(scope="session")
def ctx_d(appendix_d):
    return CostContext(ops=appendix_d.ops, basis=appendix_d.basis)


@pytest.fixture(scope="session")
def ctx_b2(b2):
    return CostContext(ops=b2.ops, basis=b2.basis)


@pytest.fixture(scope="session")
def ctx_b3(b3):
    return CostContext(ops=b3.ops, basis=b3.basis)


@pytest.fixture(scope="session")
def ctx_quad(quad):
    return CostContext(ops=quad.ops, basis=quad.basis)


@pytest.fixture(scope="session")
def sol_d(ctx_d):
    return solve_qi_oracle(ctx_d)


# Frozen oracle outputs for regression pins (full precision of the
# deterministic solver on this platform; asserted with loose-enough
# tolerances to survive BLAS reordering).
J_STAR_D = 0.591784578582182
Z_STAR_D = np.array([2.787947244277663, -0.228504300502002,
                     -0.9832143668642357])
Q_STAR_D = np.array([2.787947244277663, -2.969654085135355,
                     -0.9832143668642357])
F_Z0_D = 0.8950510387553701
D_CONST_D = 918.0
