"""Subspaces of causal structured feedback policies.

A policy is a matrix K in R^{mN x p(N+1)} acting on the stacked outputs,
u = K y.  Causality restricts K to a block lower-triangular support; an
information structure restricts it further to a linear subspace, described
here by an orthonormal basis P of vectorized policies so that K = unvec(P z)
for coordinates z in R^d.

The module also provides:

* the quadratic-invariance (QI) test  K CP12 K in subspace for all subspace
  members, decided exactly on basis pairs via polarization: the map
  T(K) = K CP12 K is quadratic, so T(K_i + K_j) - T(K_i) - T(K_j) =
  K_i CP12 K_j + K_j CP12 K_i spans all values of T on the subspace.
  Checking the symmetrized products for all i <= j therefore decides
  membership for every subspace element, not just the basis.
* the change of variables K = H(Q) = (I + Q CP12)^{-1} Q and its inverse
  Q = K (I - CP12 K)^{-1}, evaluated through finite Neumann series of the
  nilpotent products (Q CP12 and CP12 K are strictly block lower-triangular
  in time, so the series terminate exactly).
* the coordinate maps h(q) = P' vec(H(unvec(P q))) and its inverse, which
  are mutually inverse bijections of R^d exactly when QI holds.

Vectorization is column-major throughout, and sparsity bases enumerate
entries column-major over (row, col), so coordinates read off a policy
matrix column by column.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .system import CausalityError, check_causal


@dataclass(frozen=True)
class SparsityPattern:
    """Binary support S of a sparsity-induced policy subspace."""

    S: np.ndarray
    m: int
    p: int
    N: int

    def __post_init__(self) -> None:
        S = np.asarray(self.S)
        expected = (self.m * self.N, self.p * (self.N + 1))
        if S.shape != expected:
            raise ValueError(f"pattern shape {S.shape}, expected {expected}")
        if not np.isin(S, (0, 1)).all():
            raise ValueError("pattern entries must be 0 or 1")
        object.__setattr__(self, "S", S.astype(np.int8))
        check_causal(S.astype(float), self.m, self.p, self.N)

    @property
    def nnz(self) -> int:
        return int(self.S.sum())


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis P of a policy subspace, one column per coordinate.

    Columns are vectorized causal policies; P'P = I.  `pattern` is kept
    when the subspace comes from a sparsity support (enables the exact
    binary QI fast path); general subspaces leave it None.
    """

    P: np.ndarray
    m: int
    p: int
    N: int
    pattern: Optional[SparsityPattern] = None

    def __post_init__(self) -> None:
        P = np.asarray(self.P, dtype=float)
        rows = self.m * self.N * self.p * (self.N + 1)
        if P.ndim != 2 or P.shape[0] != rows:
            raise ValueError(f"basis must have {rows} rows, got {P.shape}")
        if P.shape[1] < 1:
            raise ValueError("policy subspace must have dimension >= 1")
        gram = P.T @ P
        if not np.allclose(gram, np.eye(P.shape[1]), atol=1e-12):
            raise ValueError("basis columns are not orthonormal")
        object.__setattr__(self, "P", P)
        for k in range(P.shape[1]):
            col = unvec_matrix(P[:, k], self.m, self.p, self.N)
            try:
                check_causal(col, self.m, self.p, self.N)
            except CausalityError as exc:
                raise ValueError(f"basis column {k} is not causal") from exc

    @property
    def d(self) -> int:
        return int(self.P.shape[1])

    def basis_matrices(self) -> np.ndarray:
        """All basis columns reshaped to policies, stacked (d, mN, p(N+1))."""
        return np.stack([unvec_matrix(self.P[:, k], self.m, self.p, self.N)
                         for k in range(self.d)])


def vec_matrix(K: np.ndarray) -> np.ndarray:
    """Column-major vectorization."""
    return np.asarray(K, dtype=float).reshape(-1, order="F")


def unvec_matrix(v: np.ndarray, m: int, p: int, N: int) -> np.ndarray:
    """Inverse of vec_matrix for an mN x p(N+1) policy."""
    return np.asarray(v, dtype=float).reshape((m * N, p * (N + 1)), order="F")


def causal_mask(N: int, m: int, p: int) -> SparsityPattern:
    """Full causal support: block (t, s) is all ones iff s <= t."""
    if min(N, m, p) < 1:
        raise ValueError("N, m, p must be positive")
    S = np.zeros((m * N, p * (N + 1)), dtype=np.int8)
    for t in range(N):
        S[t * m:(t + 1) * m, :p * (t + 1)] = 1
    return SparsityPattern(S=S, m=m, p=p, N=N)


def basis_from_pattern(pattern: SparsityPattern) -> SubspaceBasis:
    """Standard unit-vector basis of Sparse(S), column-major over (row, col)."""
    if pattern.nnz == 0:
        raise ValueError("empty sparsity pattern gives a degenerate subspace")
    m, p, N = pattern.m, pattern.p, pattern.N
    rows = m * N
    cols_total = p * (N + 1)
    P = np.zeros((rows * cols_total, pattern.nnz))
    k = 0
    for c in range(cols_total):
        for r in range(rows):
            if pattern.S[r, c]:
                P[c * rows + r, k] = 1.0
                k += 1
    return SubspaceBasis(P=P, m=m, p=p, N=N, pattern=pattern)


def subspace_residual(basis: SubspaceBasis, K: np.ndarray) -> float:
    """Distance of K from the subspace, relative to ||K|| (0 for K = 0)."""
    v = vec_matrix(K)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return 0.0
    res = v - basis.P @ (basis.P.T @ v)
    return float(np.linalg.norm(res) / norm)


def vec_policy(K: np.ndarray, basis: SubspaceBasis,
               tol: float = 1e-10) -> np.ndarray:
    """Coordinates z with K = unvec(P z); rejects policies off the subspace."""
    res = subspace_residual(basis, K)
    if res > tol:
        raise ValueError(
            f"policy lies outside the subspace (relative residual {res:.3e})")
    return basis.P.T @ vec_matrix(K)


def unvec_policy(z: np.ndarray, basis: SubspaceBasis) -> np.ndarray:
    """Policy matrix K = unvec(P z)."""
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape != (basis.d,):
        raise ValueError(f"expected {basis.d} coordinates, got {z.shape}")
    return unvec_matrix(basis.P @ z, basis.m, basis.p, basis.N)


@dataclass(frozen=True)
class QiVerdict:
    """Outcome of the QI test with the worst witness pair for diagnostics."""

    qi: bool
    max_residual: float
    witness: Optional[tuple[int, int]]
    witness_residual: float

    def __bool__(self) -> bool:
        return self.qi


def qi_check_detailed(basis: SubspaceBasis, CP12: np.ndarray,
                      tol: float = 1e-9) -> QiVerdict:
    """Polarized QI test over all basis pairs.

    For each i <= j the symmetrized product K_i CP12 K_j + K_j CP12 K_i is
    projected onto the subspace; QI holds iff every relative residual is at
    most `tol`.  The worst offending pair is reported as a witness.
    """
    mats = basis.basis_matrices()
    d = basis.d
    worst = 0.0
    witness = None
    for i in range(d):
        KiC = mats[i] @ CP12
        for j in range(i, d):
            term = KiC @ mats[j]
            if i == j:
                term = 2.0 * term
            else:
                term = term + mats[j] @ CP12 @ mats[i]
            norm = np.linalg.norm(term)
            if norm == 0.0:
                continue
            res = subspace_residual(basis, term)
            if res > worst:
                worst = res
                witness = (i, j)
    qi = worst <= tol
    return QiVerdict(qi=qi, max_residual=worst,
                     witness=None if qi else witness,
                     witness_residual=0.0 if qi else worst)


def qi_check_binary(pattern: SparsityPattern, CP12: np.ndarray) -> bool:
    """Exact support test for sparsity subspaces.

    QI for Sparse(S) is equivalent to the support of S bin(CP12) S being
    contained in S, where bin(CP12) is the boolean nonzero pattern.  This
    avoids floating arithmetic entirely (no cancellation can occur for
    generic plants; the numeric polarization test remains the referee).
    """
    Sb = pattern.S.astype(bool)
    Cb = CP12 != 0.0
    prod = Sb.astype(np.int64) @ Cb.astype(np.int64) @ Sb.astype(np.int64)
    return bool(np.all(Sb | (prod == 0)))


def qi_check(basis: SubspaceBasis, CP12: np.ndarray, tol: float = 1e-9) -> bool:
    """True iff K CP12 K stays in the subspace for every subspace member K."""
    return qi_check_detailed(basis, CP12, tol=tol).qi


def neumann_inverse(X: np.ndarray, nblocks: int) -> np.ndarray:
    """(I + X)^{-1} for nilpotent X via the terminating series sum (-X)^k."""
    d = X.shape[0]
    total = np.eye(d)
    power = np.eye(d)
    for _ in range(nblocks):
        power = power @ (-X)
        if not power.any():
            break
        total += power
    return total


def H_op(Q: np.ndarray, CP12: np.ndarray, m: int, p: int, N: int,
         validate: bool = True) -> np.ndarray:
    """Closed-loop change of variables K = (I + Q CP12)^{-1} Q."""
    if validate:
        check_causal(Q, m, p, N)
    inv = neumann_inverse(Q @ CP12, N)
    return inv @ Q


def H_inv(K: np.ndarray, CP12: np.ndarray, m: int, p: int, N: int,
          validate: bool = True) -> np.ndarray:
    """Inverse change of variables Q = K (I - CP12 K)^{-1}."""
    if validate:
        check_causal(K, m, p, N)
    inv = neumann_inverse(-CP12 @ K, N + 1)
    return K @ inv


def h_forward(q: np.ndarray, basis: SubspaceBasis,
              CP12: np.ndarray) -> tuple[np.ndarray, float]:
    """Coordinate map z = P' vec(H(unvec(P q))) with an off-subspace residual.

    The residual is zero (up to roundoff) on QI subspaces; on non-QI
    subspaces the returned z is only the projection of H's output, and the
    residual quantifies what was lost.
    """
    K = H_op(unvec_policy(q, basis), CP12, basis.m, basis.p, basis.N,
             validate=False)
    return basis.P.T @ vec_matrix(K), subspace_residual(basis, K)


def h_inverse(z: np.ndarray, basis: SubspaceBasis,
              CP12: np.ndarray) -> tuple[np.ndarray, float]:
    """Inverse coordinate map q = P' vec(H^{-1}(unvec(P z))), with residual."""
    Q = H_inv(unvec_policy(z, basis), CP12, basis.m, basis.p, basis.N,
              validate=False)
    return basis.P.T @ vec_matrix(Q), subspace_residual(basis, Q)
