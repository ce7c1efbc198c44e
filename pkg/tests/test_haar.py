"""Tests for Haar quadrature rules: grids, low-discrepancy sets, subgroups."""

import numpy as np
import pytest

from groupoidlab import haar
from groupoidlab import liegroup as lg

T1 = lg.torus(1)
SU2 = lg.special_unitary(2)
SO3 = lg.special_orthogonal(3)


class TestTorusGrid:
    def test_probability_normalization(self):
        rule = haar.haar_nodes(T1, 8)
        assert abs(rule.weights.sum() - 1.0) < 1e-14
        assert abs(rule.integrate(np.ones(len(rule))) - 1.0) < 1e-15

    def test_first_moment_vanishes(self):
        rule = haar.haar_nodes(T1, 8)
        vals = np.exp(1j * rule.nodes[:, 0])
        assert abs(rule.integrate(vals)) < 1e-15

    def test_exact_on_low_trigonometric_degrees(self):
        rule = haar.haar_nodes(T1, 8)
        for freq in range(1, 8):
            vals = np.exp(1j * freq * rule.nodes[:, 0])
            assert abs(rule.integrate(vals)) < 1e-14

    def test_translation_invariance_is_exact(self):
        rule = haar.haar_nodes(T1, 8)
        f = lambda theta: np.cos(3 * theta) + 0.5 * np.sin(theta)
        base = rule.integrate(f(rule.nodes[:, 0]))
        for shift in rule.nodes[:4, 0]:
            translated = rule.integrate(f(np.mod(rule.nodes[:, 0] + shift, 2 * np.pi)))
            assert abs(translated - base) < 1e-14

    def test_torus2_grid_size(self):
        rule = haar.haar_nodes(lg.torus(2), 6)
        assert len(rule) == 36
        assert rule.nodes.shape == (36, 2)


class TestLowDiscrepancy:
    def test_character_integral_within_stored_bound(self):
        rule = haar.haar_nodes(SU2, 12, seed=0)
        assert len(rule) == 12**3
        # Schur orthogonality: every nontrivial character integrates to zero.
        val = abs(float(rule.integrate(haar.su2_character(2, rule.nodes))))
        assert val <= rule.stored_bound

    def test_seed_reproducibility(self):
        a = haar.haar_nodes(SU2, 6, seed=3)
        b = haar.haar_nodes(SU2, 6, seed=3)
        np.testing.assert_array_equal(a.nodes, b.nodes)
        c = haar.haar_nodes(SU2, 6, seed=4)
        assert np.max(np.abs(a.nodes - c.nodes)) > 1e-3

    def test_nodes_are_group_elements(self):
        rule = haar.haar_nodes(SU2, 5, seed=1)
        for g in rule.nodes[:20]:
            lg.validate_element(SU2, g, tol=1e-12)
        so3_rule = haar.haar_nodes(SO3, 5, seed=1)
        for g in so3_rule.nodes[:20]:
            lg.validate_element(SO3, g, tol=1e-12)

    def test_translation_error_below_stored_bound(self):
        rule = haar.haar_nodes(SU2, 8, seed=2)
        base = float(rule.integrate(haar.su2_character(2, rule.nodes)))
        for g in rule.nodes[:4]:
            translated = float(rule.integrate(haar.su2_character(2, g @ rule.nodes)))
            assert abs(translated - base) <= 2 * rule.stored_bound


class TestSubgroupRules:
    @pytest.mark.parametrize("order", [24, 48, 120])
    def test_su2_subgroup_closure(self, order):
        rule = haar.subgroup_rule(SU2, order)
        assert len(rule) == order
        nodes = rule.nodes
        flat = nodes.reshape(order, -1)
        rng = np.random.default_rng(0)
        for _ in range(40):
            i, j = rng.integers(order, size=2)
            prod = (nodes[i] @ nodes[j]).reshape(-1)
            dists = np.linalg.norm(flat - prod, axis=1)
            assert dists.min() < 1e-12

    @pytest.mark.parametrize("order", [24, 48, 120])
    def test_design_integrates_characters_exactly(self, order):
        # Binary polyhedral groups are spherical designs; the first
        # character with nonzero average sits above the design strength.
        rule = haar.subgroup_rule(SU2, order)
        strength = {24: 5, 48: 7, 120: 11}[order]
        for dim in range(2, strength + 2):
            val = abs(float(rule.integrate(haar.su2_character(dim, rule.nodes))))
            assert val < 1e-13, f"character {dim} not annihilated"

    def test_icosahedral_first_invariant_at_dim_13(self):
        rule = haar.subgroup_rule(SU2, 120)
        val = float(rule.integrate(haar.su2_character(13, rule.nodes)))
        assert abs(val - 1.0) < 1e-12  # multiplicity of the trivial rep

    @pytest.mark.parametrize("order", [12, 24, 60])
    def test_so3_subgroups(self, order):
        rule = haar.subgroup_rule(SO3, order)
        assert len(rule) == order
        for g in rule.nodes:
            lg.validate_element(SO3, g, tol=1e-12)

    def test_translation_invariance_exact(self):
        rule = haar.subgroup_rule(SU2, 24)
        f = lambda g: haar.su2_character(3, g)
        base = float(rule.integrate(f(rule.nodes)))
        for g in rule.nodes[:6]:
            assert abs(float(rule.integrate(f(g @ rule.nodes))) - base) < 1e-13

    def test_torus_subgroup_rule_is_grid(self):
        rule = haar.subgroup_rule(T1, 16)
        assert len(rule) == 16

    def test_unsupported(self):
        with pytest.raises(lg.UnsupportedGroup):
            haar.subgroup_rule(SU2, 17)
        with pytest.raises(lg.UnsupportedGroup):
            haar.haar_nodes(lg.special_unitary(3), 4)


class TestProductsAndSerialization:
    def test_product_rule(self):
        prod = lg.product(lg.torus(1), lg.torus(1))
        rule = haar.haar_nodes(prod, 4)
        assert len(rule) == 16
        assert abs(rule.weights.sum() - 1.0) < 1e-14
        theta0 = rule.nodes[0][:, 0]
        vals = np.exp(1j * theta0)
        assert abs(rule.integrate(vals)) < 1e-14

    def test_json_round_trip(self):
        rule = haar.subgroup_rule(SU2, 24)
        back = haar.HaarQuadrature.from_json(rule.to_json())
        np.testing.assert_allclose(np.asarray(back.nodes), rule.nodes, atol=0)
        np.testing.assert_array_equal(back.weights, rule.weights)
        assert back.exactness_class == rule.exactness_class
        assert back.stored_bound == rule.stored_bound
