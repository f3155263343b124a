"""Subspace bases, QI verdicts and the policy change of variables."""

import numpy as np
import pytest

from conftest import make_random_fixture_parts, random_causal_matrix
from distlq.policy_space import (H_inv, H_op, SparsityPattern, SubspaceBasis,
                                 basis_from_pattern, causal_mask, h_forward,
                                 h_inverse, neumann_inverse, qi_check,
                                 qi_check_binary, qi_check_detailed,
                                 subspace_residual, unvec_policy, vec_matrix,
                                 vec_policy)
from distlq.system import CausalityError


class TestCausalMask:
    def test_scalar_single_step(self):
        assert np.array_equal(causal_mask(1, 1, 1).S, [[1, 0]])

    def test_scalar_two_steps(self):
        assert np.array_equal(causal_mask(2, 1, 1).S, [[1, 0, 0],
                                                       [1, 1, 0]])

    def test_wide_output_blocks(self):
        S = causal_mask(2, 1, 3).S
        expected = np.zeros((2, 9), dtype=int)
        expected[0, :3] = 1
        expected[1, :6] = 1
        assert np.array_equal(S, expected)


class TestSparsityPattern:
    def test_noncausal_pattern_rejected(self):
        S = np.zeros((2, 9), dtype=int)
        S[0, 4] = 1  # u_0 reading y_1
        with pytest.raises(CausalityError):
            SparsityPattern(S=S, m=1, p=3, N=2)

    def test_non_binary_entries_rejected(self):
        S = np.zeros((2, 3))
        S[0, 0] = 0.5
        with pytest.raises(ValueError, match="0 or 1"):
            SparsityPattern(S=S, m=1, p=1, N=2)


class TestBasisFromPattern:
    def test_appendix_d_dimension(self, appendix_d):
        assert appendix_d.basis.d == 3

    def test_appendix_d_unit_columns_column_major(self, appendix_d):
        # Nonzeros at (0,0), (1,0), (1,3); vec index is col*rows + row.
        P = appendix_d.basis.P
        assert P.shape == (18, 3)
        expect = np.zeros((18, 3))
        expect[0, 0] = expect[1, 1] = expect[7, 2] = 1.0
        assert np.array_equal(P, expect)

    def test_full_causal_scalar_dimension(self):
        basis = basis_from_pattern(causal_mask(2, 1, 1))
        assert basis.d == 3

    def test_single_entry_pattern(self):
        S = np.zeros((2, 3), dtype=int)
        S[1, 0] = 1
        basis = basis_from_pattern(SparsityPattern(S=S, m=1, p=1, N=2))
        assert basis.d == 1
        assert basis.P[:, 0].sum() == 1.0

    def test_empty_pattern_rejected(self):
        S = np.zeros((2, 3), dtype=int)
        with pytest.raises(ValueError, match="empty"):
            basis_from_pattern(SparsityPattern(S=S, m=1, p=1, N=2))

    def test_orthonormality(self, b3):
        for basis in (basis_from_pattern(causal_mask(3, 2, 2)), b3.basis):
            gram = basis.P.T @ basis.P
            assert np.allclose(gram, np.eye(basis.d), atol=1e-12)


class TestSubspaceBasisValidation:
    def test_non_orthonormal_rejected(self):
        P = np.zeros((6, 2))
        P[0, 0] = 1.0
        P[0, 1] = 1.0  # duplicate direction
        P[1, 1] = 1.0
        with pytest.raises(ValueError, match="orthonormal"):
            SubspaceBasis(P=P, m=1, p=1, N=2)

    def test_noncausal_column_rejected(self):
        P = np.zeros((6, 1))
        P[2, 0] = 1.0  # vec index 2 is entry (0, 1): u_0 reading y_1
        with pytest.raises(ValueError, match="column 0"):
            SubspaceBasis(P=P, m=1, p=1, N=2)


class TestVecUnvec:
    def test_zero_coordinates_give_zero_policy(self, appendix_d):
        K = unvec_policy(np.zeros(3), appendix_d.basis)
        assert np.array_equal(K, np.zeros((2, 9)))

    def test_pinned_coordinate_placement(self, appendix_d):
        z = np.array([2.7881, -0.2284, 0.9833])
        K = unvec_policy(z, appendix_d.basis)
        expect = np.zeros((2, 9))
        expect[0, 0], expect[1, 0], expect[1, 3] = z
        assert np.array_equal(K, expect)

    def test_round_trip_identity(self, appendix_d, b3):
        rng = np.random.default_rng(0)
        for fx in (appendix_d, b3):
            for _ in range(20):
                z = rng.normal(size=fx.basis.d)
                back = vec_policy(unvec_policy(z, fx.basis), fx.basis)
                assert np.allclose(back, z, atol=1e-12)

    def test_off_subspace_policy_rejected_with_residual(self, appendix_d):
        K = np.zeros((2, 9))
        K[0, 0], K[1, 1] = 1.0, 1.0  # (1,1) is causal but off the pattern
        with pytest.raises(ValueError, match="residual"):
            vec_policy(K, appendix_d.basis)
        assert subspace_residual(appendix_d.basis, K) > 0.5


class TestQiCheck:
    def test_appendix_d_is_qi(self, appendix_d):
        assert qi_check(appendix_d.basis, appendix_d.ops.CP12)

    def test_full_causal_always_qi(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            spec, ops, basis = make_random_fixture_parts(rng)
            assert qi_check(basis, ops.CP12)

    def test_b3_not_qi_with_witness(self, b3):
        verdict = qi_check_detailed(b3.basis, b3.ops.CP12)
        assert not verdict.qi
        assert not bool(verdict)
        assert verdict.witness is not None
        assert verdict.witness_residual > 1e-3
        assert not qi_check(b3.basis, b3.ops.CP12)

    def test_basis_independent(self, appendix_d, b3):
        rng = np.random.default_rng(2)
        for fx, expected in ((appendix_d, True), (b3, False)):
            gauss = rng.normal(size=(fx.basis.d, fx.basis.d))
            rot, _ = np.linalg.qr(gauss)
            rotated = SubspaceBasis(P=fx.basis.P @ rot, m=fx.basis.m,
                                    p=fx.basis.p, N=fx.basis.N)
            assert qi_check(rotated, fx.ops.CP12) is expected

    def test_binary_fast_path_agrees_on_fixtures(self, appendix_d):
        assert qi_check_binary(appendix_d.basis.pattern,
                               appendix_d.ops.CP12) is True
        assert qi_check(appendix_d.basis, appendix_d.ops.CP12) is True

    def test_binary_fast_path_agrees_on_random_patterns(self):
        rng = np.random.default_rng(3)
        agree = 0
        for _ in range(50):
            spec, ops, _ = make_random_fixture_parts(rng)
            mask = causal_mask(spec.N, spec.m, spec.p).S
            keep = (rng.random(mask.shape) < 0.6).astype(np.int8) * mask
            if keep.sum() == 0:
                continue
            pattern = SparsityPattern(S=keep, m=spec.m, p=spec.p, N=spec.N)
            basis = basis_from_pattern(pattern)
            binary = qi_check_binary(pattern, ops.CP12)
            numeric = qi_check(basis, ops.CP12)
            assert binary == numeric
            agree += 1
        assert agree > 30


class TestNeumannInverse:
    def test_matches_dense_inverse_on_nilpotent_input(self, appendix_d):
        rng = np.random.default_rng(4)
        CP12 = appendix_d.ops.CP12
        for _ in range(20):
            Q = random_causal_matrix(rng, 1, 3, 2)
            K = np.zeros((2, 9))
            K[:1] = Q[:1]
            X = CP12 @ K
            ref = np.linalg.inv(np.eye(9) + X)
            assert np.allclose(neumann_inverse(X, 3), ref, atol=1e-10)


class TestHMaps:
    def test_zero_maps_to_zero(self, appendix_d):
        CP12 = appendix_d.ops.CP12
        K = H_op(np.zeros((2, 9)), CP12, 1, 3, 2)
        assert np.array_equal(K, np.zeros((2, 9)))

    def test_b2_closed_form(self, b2):
        # Displayed map: K = [[a,0,0],[b,c,0]]  ->  Q = [[a,0,0],[b+ac,c,0]].
        rng = np.random.default_rng(5)
        CP12 = b2.ops.CP12
        for _ in range(20):
            a, b, c = rng.normal(size=3)
            K = np.array([[a, 0, 0], [b, c, 0]])
            Q = H_inv(K, CP12, 1, 1, 2)
            assert np.allclose(Q, [[a, 0, 0], [b + a * c, c, 0]], atol=1e-12)
            assert np.allclose(H_op(Q, CP12, 1, 1, 2), K, atol=1e-12)

    def test_round_trip_on_random_causal_policies(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            spec, ops, basis = make_random_fixture_parts(rng)
            K = random_causal_matrix(rng, spec.m, spec.p, spec.N)
            Q = H_inv(K, ops.CP12, spec.m, spec.p, spec.N)
            back = H_op(Q, ops.CP12, spec.m, spec.p, spec.N)
            assert np.allclose(back, K, atol=1e-10 * max(1, np.abs(K).max()))

    def test_unit_determinant(self):
        rng = np.random.default_rng(7)
        dets = []
        for _ in range(100):
            spec, ops, basis = make_random_fixture_parts(rng)
            Q = random_causal_matrix(rng, spec.m, spec.p, spec.N)
            dim = spec.m * spec.N
            dets.append(np.linalg.det(np.eye(dim) + Q @ ops.CP12))
        assert np.allclose(dets, 1.0, atol=1e-9)

    def test_noncausal_input_rejected(self, appendix_d):
        Q = np.zeros((2, 9))
        Q[0, 8] = 1.0
        with pytest.raises(CausalityError):
            H_op(Q, appendix_d.ops.CP12, 1, 3, 2)
        with pytest.raises(CausalityError):
            H_inv(Q, appendix_d.ops.CP12, 1, 3, 2)

    def test_causal_products_are_nilpotent(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            spec, ops, _ = make_random_fixture_parts(rng)
            Q = random_causal_matrix(rng, spec.m, spec.p, spec.N)
            QC = Q @ ops.CP12
            power = np.linalg.matrix_power(QC, spec.N + 1)
            assert np.array_equal(power, np.zeros_like(power))


class TestCoordinateMaps:
    def test_zero_fixed_point(self, appendix_d):
        z, res = h_forward(np.zeros(3), appendix_d.basis, appendix_d.ops.CP12)
        assert np.array_equal(z, np.zeros(3))
        assert res == 0.0

    def test_b2_displayed_map(self, b2):
        # h(q) = (a_q, b_q - a_q c_q, c_q) in column-major coordinates.
        rng = np.random.default_rng(9)
        for _ in range(20):
            q = rng.normal(size=3)
            z, res = h_forward(q, b2.basis, b2.ops.CP12)
            assert res <= 1e-12
            assert np.allclose(z, [q[0], q[1] - q[0] * q[2], q[2]],
                               atol=1e-12)

    def test_round_trip_on_qi_fixture(self, appendix_d):
        rng = np.random.default_rng(10)
        CP12 = appendix_d.ops.CP12
        for _ in range(100):
            z = rng.normal(size=3) * 2.0
            q, res_inv = h_inverse(z, appendix_d.basis, CP12)
            back, res_fwd = h_forward(q, appendix_d.basis, CP12)
            assert res_inv <= 1e-10
            assert res_fwd <= 1e-10
            assert np.allclose(back, z, atol=1e-10 * max(1, np.abs(z).max()))

    def test_non_qi_subspace_reports_leakage(self, b3):
        # On the non-QI fixture the H image leaves the subspace for some
        # inputs; the residual diagnostic must say so rather than silently
        # projecting.
        rng = np.random.default_rng(11)
        residuals = []
        for _ in range(50):
            q = rng.normal(size=2)
            _, res = h_forward(q, b3.basis, b3.ops.CP12)
            residuals.append(res)
        assert max(residuals) > 1e-3
