"""Tests for compact group numerics: charts, metric, adjoint, kernels."""

import math

import numpy as np
import pytest

from groupoidlab import liegroup as lg

GROUPS = [lg.torus(1), lg.torus(2), lg.special_unitary(2), lg.special_orthogonal(3)]


def _rotation_matrix(axis, angle):
    """Independent Rodrigues formula (the oracle for SO(3) exponentials)."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    k = np.array([
        [0.0, -axis[2], axis[1]],
        [axis[2], 0.0, -axis[0]],
        [-axis[1], axis[0], 0.0],
    ])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


class TestExpLog:
    @pytest.mark.parametrize("desc", GROUPS, ids=lambda d: f"{d.kind}{d.n}")
    def test_round_trip(self, desc):
        rng = np.random.default_rng(7)
        for _ in range(50):
            v = lg.random_algebra(desc, rng, scaled_norm=rng.uniform(0.05, 0.9))
            g = lg.group_exp(desc, v)
            lg.validate_element(desc, g, tol=1e-10)
            np.testing.assert_allclose(lg.group_log(desc, g), v, atol=1e-10)

    def test_exp_zero_is_identity(self):
        t2 = lg.torus(2)
        np.testing.assert_array_equal(lg.group_exp(t2, np.zeros(2)), np.zeros(2))

    def test_log_identity_is_zero(self):
        su2 = lg.special_unitary(2)
        np.testing.assert_allclose(lg.group_log(su2, np.eye(2)), np.zeros((2, 2)), atol=1e-14)

    def test_geodesic_distance_matches_norm(self):
        su2 = lg.special_unitary(2)
        rng = np.random.default_rng(3)
        v = lg.random_algebra(su2, rng, scaled_norm=0.5)
        g = lg.group_exp(su2, v)
        assert abs(lg.dist(su2, lg.identity(su2), g) - 0.5) < 1e-12

    def test_so3_exp_against_rodrigues(self):
        so3 = lg.special_orthogonal(3)
        # generator of the e1-e2 rotation plane, scaled norm 0.3
        x = np.zeros((3, 3))
        x[0, 1], x[1, 0] = -1.0, 1.0
        x *= 0.3 / lg.algebra_norm(so3, x)
        g = lg.group_exp(so3, x)
        angle = 0.3 / (so3.metric_scale * math.sqrt(2.0))
        np.testing.assert_allclose(g, _rotation_matrix([0, 0, 1], angle), atol=1e-12)
        assert abs(lg.dist(so3, lg.identity(so3), g) - 0.3) < 1e-12

    def test_cut_locus_error(self):
        su2 = lg.special_unitary(2)
        with pytest.raises(lg.CutLocusError):
            lg.group_log(su2, -np.eye(2))  # both eigenvalues exactly -1
        t1 = lg.torus(1)
        with pytest.raises(lg.CutLocusError):
            lg.group_log(t1, np.array([math.pi]))

    def test_injectivity_on_unit_ball(self):
        # metric scale puts the injectivity radius at >= 1
        rng = np.random.default_rng(11)
        for desc in GROUPS:
            v = lg.random_algebra(desc, rng, scaled_norm=0.999)
            np.testing.assert_allclose(lg.group_log(desc, lg.group_exp(desc, v)), v,
                                       atol=1e-9)


class TestDistance:
    @pytest.mark.parametrize("desc", GROUPS, ids=lambda d: f"{d.kind}{d.n}")
    def test_self_distance(self, desc):
        g = lg.random_element(desc, np.random.default_rng(0))
        assert lg.dist(desc, g, g) < 1e-12

    @pytest.mark.parametrize("desc", GROUPS, ids=lambda d: f"{d.kind}{d.n}")
    def test_bi_invariance(self, desc):
        rng = np.random.default_rng(5)
        for _ in range(20):
            g, h, k = (lg.random_element(desc, rng) for _ in range(3))
            d = lg.dist(desc, g, h)
            if d >= lg.SATURATION_DISTANCE:
                continue
            left = lg.dist(desc, lg.multiply(desc, k, g), lg.multiply(desc, k, h))
            right = lg.dist(desc, lg.multiply(desc, g, k), lg.multiply(desc, h, k))
            assert abs(left - d) <= 1e-12
            assert abs(right - d) <= 1e-12

    def test_conjugation_invariance(self):
        su2 = lg.special_unitary(2)
        rng = np.random.default_rng(9)
        g, h = lg.random_element(su2, rng), lg.random_element(su2, rng)
        conj = lg.multiply(su2, lg.multiply(su2, h, g), lg.inverse(su2, h))
        assert abs(lg.dist(su2, conj, lg.identity(su2))
                   - lg.dist(su2, g, lg.identity(su2))) <= 1e-12

    def test_triangle_inequality(self):
        rng = np.random.default_rng(13)
        for desc in (lg.special_unitary(2), lg.torus(2)):
            for _ in range(1000):
                g, h, k = (lg.random_element(desc, rng) for _ in range(3))
                dgh, dhk, dgk = (lg.dist(desc, a, b)
                                 for a, b in ((g, h), (h, k), (g, k)))
                if max(dgh, dhk, dgk) >= lg.SATURATION_DISTANCE:
                    continue
                assert dgk <= dgh + dhk + 1e-10

    def test_saturation_at_cut_locus(self):
        su2 = lg.special_unitary(2)
        assert lg.dist(su2, lg.identity(su2), -np.eye(2)) == lg.SATURATION_DISTANCE


class TestAdjoint:
    def test_identity_conjugation(self):
        su2 = lg.special_unitary(2)
        v = lg.random_algebra(su2, np.random.default_rng(1), scaled_norm=0.4)
        np.testing.assert_allclose(lg.ad_conjugate(su2, lg.identity(su2), v), v, atol=1e-14)

    def test_torus_adjoint_trivial(self):
        t2 = lg.torus(2)
        rng = np.random.default_rng(2)
        v = lg.random_algebra(t2, rng)
        g = lg.random_element(t2, rng)
        np.testing.assert_array_equal(lg.ad_conjugate(t2, g, v), v)

    def test_norm_preservation_and_matrix_oracle(self):
        su2 = lg.special_unitary(2)
        rng = np.random.default_rng(3)
        for _ in range(25):
            g = lg.random_element(su2, rng)
            v = lg.random_algebra(su2, rng, scaled_norm=0.3)
            adv = lg.ad_conjugate(su2, g, v)
            np.testing.assert_allclose(adv, g @ v @ g.conj().T, atol=1e-13)
            assert abs(lg.algebra_norm(su2, adv) - 0.3) < 1e-12

    def test_exp_commutes_with_adjoint(self):
        so3 = lg.special_orthogonal(3)
        rng = np.random.default_rng(4)
        g = lg.random_element(so3, rng)
        v = lg.random_algebra(so3, rng, scaled_norm=0.5)
        lhs = lg.group_exp(so3, lg.ad_conjugate(so3, g, v))
        rhs = g @ lg.group_exp(so3, v) @ g.T
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)


class TestValidation:
    def test_malformed_element(self):
        su2 = lg.special_unitary(2)
        with pytest.raises(lg.MalformedGroupElement):
            lg.validate_element(su2, np.eye(2) * 1.5)
        with pytest.raises(lg.MalformedGroupElement):
            lg.validate_element(su2, np.diag([1.0, -1.0]))  # det = -1

    def test_malformed_algebra(self):
        su2 = lg.special_unitary(2)
        with pytest.raises(lg.MalformedAlgebraVector):
            lg.validate_algebra(su2, np.eye(2))  # not skew
        with pytest.raises(lg.MalformedAlgebraVector):
            lg.validate_algebra(su2, 1j * np.eye(2))  # skew-Hermitian, trace != 0


class TestProducts:
    def test_round_trip_and_metric(self):
        prod = lg.product(lg.torus(1), lg.special_unitary(2))
        rng = np.random.default_rng(6)
        v = lg.random_algebra(prod, rng, scaled_norm=0.6)
        assert abs(lg.algebra_norm(prod, v) - 0.6) < 1e-12
        g = lg.group_exp(prod, v)
        back = lg.group_log(prod, g)
        for a, b in zip(v, back):
            np.testing.assert_allclose(a, b, atol=1e-10)

    def test_weights_rescale_distance(self):
        light = lg.product(lg.torus(1), lg.torus(1), weights=(1.0, 1.0))
        heavy = lg.product(lg.torus(1), lg.torus(1), weights=(1.0, 2.0))
        v = (np.array([0.0]), np.array([0.3]))
        assert lg.algebra_norm(heavy, v) == pytest.approx(2 * lg.algebra_norm(light, v))


class TestQuaternions:
    def test_homomorphism(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            q1 = rng.standard_normal(4)
            q1 /= np.linalg.norm(q1)
            q2 = rng.standard_normal(4)
            q2 /= np.linalg.norm(q2)
            lhs = lg.su2_from_quaternion(lg.quaternion_multiply(q1, q2))
            rhs = lg.su2_from_quaternion(q1) @ lg.su2_from_quaternion(q2)
            np.testing.assert_allclose(lhs, rhs, atol=1e-13)
            r_lhs = lg.so3_from_quaternion(lg.quaternion_multiply(q1, q2))
            r_rhs = lg.so3_from_quaternion(q1) @ lg.so3_from_quaternion(q2)
            np.testing.assert_allclose(r_lhs, r_rhs, atol=1e-13)

    def test_inverse_maps(self):
        rng = np.random.default_rng(9)
        q = rng.standard_normal(4)
        q /= np.linalg.norm(q)
        np.testing.assert_allclose(
            lg.quaternion_from_su2(lg.su2_from_quaternion(q)), q, atol=1e-14)


class TestKernels:
    @pytest.mark.parametrize("desc", GROUPS, ids=lambda d: f"{d.kind}{d.n}")
    def test_kernel_matches_scalar_ops(self, desc):
        if desc.kind == "torus" and desc.n == 2:
            pass
        try:
            kernel = lg.kernel_for(desc)
        except lg.UnsupportedGroup:
            pytest.skip("no kernel")
        rng = np.random.default_rng(10)
        gs = np.stack([lg.random_element(desc, rng) for _ in range(8)])
        hs = np.stack([lg.random_element(desc, rng) for _ in range(8)])
        for i in range(8):
            np.testing.assert_allclose(
                kernel.mul(gs, hs)[i], lg.multiply(desc, gs[i], hs[i]), atol=1e-12)
            np.testing.assert_allclose(
                kernel.inv(gs)[i], lg.inverse(desc, gs[i]), atol=1e-12)
            d = kernel.log_norm(gs)[i]
            if d < lg.SATURATION_DISTANCE:
                assert abs(d - lg.dist(desc, lg.identity(desc), gs[i])) < 1e-10

    def test_kernel_log_exp_round_trip(self):
        su2 = lg.special_unitary(2)
        kernel = lg.kernel_for(su2)
        rng = np.random.default_rng(11)
        vs = np.stack([lg.random_algebra(su2, rng, scaled_norm=0.5) for _ in range(16)])
        np.testing.assert_allclose(kernel.log(kernel.exp(vs)), vs, atol=1e-12)

    def test_log_norm_conditioning_near_identity(self):
        # arccos-free angle extraction keeps tiny distances tiny
        so3 = lg.special_orthogonal(3)
        kernel = lg.kernel_for(so3)
        v = lg.random_algebra(so3, np.random.default_rng(1), scaled_norm=1e-12)
        g = lg.group_exp(so3, v)
        assert kernel.log_norm(g[None])[0] < 1e-11
