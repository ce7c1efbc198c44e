"""Tests for the action groupoid presentation: arrows, fibers, maps."""

import math

import numpy as np
import pytest

from groupoidlab import liegroup as lg
from groupoidlab.groupoid import (
    ActionGroupoid,
    ActionSpec,
    Arrow,
    ComposablePairSampler,
    GroupoidMap,
    NotComposable,
    PerturbationField,
    compose,
    identity_arrow,
    identity_restriction_check,
    inverse,
    t_fiber_rule,
)
from groupoidlab.haar import subgroup_rule, torus_grid

SU2 = lg.special_unitary(2)
SO3 = lg.special_orthogonal(3)
T1 = lg.torus(1)


def su2_groupoid(twist=0.0):
    return ActionGroupoid(SU2, ActionSpec("su2_adjoint", twist), base_radius=1.0, base_seed=2)


def torus_groupoid():
    return ActionGroupoid(T1, ActionSpec("rotation2d"), base_radius=1.0, base_seed=3)


class TestActionAxioms:
    @pytest.mark.parametrize("groupoid", [
        torus_groupoid(),
        su2_groupoid(),
        su2_groupoid(twist=0.5),
        ActionGroupoid(SO3, ActionSpec("so3_standard", twist=0.4)),
        ActionGroupoid(lg.torus(2), ActionSpec("bitorus4d")),
    ], ids=["t1", "su2", "su2-twist", "so3-twist", "t2"])
    def test_axioms_on_samples(self, groupoid):
        rng = np.random.default_rng(4)
        for x in groupoid.base_points(10):
            e = lg.identity(groupoid.group)
            np.testing.assert_allclose(groupoid.act(e, x), x, atol=1e-12)
            g, h = (lg.random_element(groupoid.group, rng) for _ in range(2))
            lhs = groupoid.act(lg.multiply(groupoid.group, g, h), x)
            rhs = groupoid.act(g, groupoid.act(h, x))
            np.testing.assert_allclose(lhs, rhs, atol=1e-10)
            # fixed point and properness margin
            np.testing.assert_allclose(groupoid.act(g, groupoid.fixed_point),
                                       groupoid.fixed_point, atol=1e-12)
            assert np.linalg.norm(groupoid.act(g, x)) <= 1.1 * groupoid.base_radius

    def test_twist_changes_the_action_but_not_orbits(self):
        plain = su2_groupoid()
        twisted = su2_groupoid(twist=0.6)
        rng = np.random.default_rng(5)
        g = lg.random_element(SU2, rng)
        x = np.array([0.4, -0.1, 0.3])
        assert np.linalg.norm(plain.act(g, x) - twisted.act(g, x)) > 1e-4
        assert abs(np.linalg.norm(twisted.act(g, x)) - np.linalg.norm(x)) < 1e-12


class TestArrows:
    def test_identity_arrow_composition(self):
        groupoid = torus_groupoid()
        x = np.array([0.3, 0.4])
        e = identity_arrow(groupoid, x)
        out = compose(groupoid, e, e)
        np.testing.assert_allclose(out.x, x)
        assert lg.dist(T1, out.g, lg.identity(T1)) < 1e-14

    def test_action_groupoid_product_law(self):
        groupoid = su2_groupoid()
        rng = np.random.default_rng(6)
        g, h = (lg.random_element(SU2, rng) for _ in range(2))
        x = np.array([0.2, 0.1, -0.3])
        q = Arrow(h, x)
        p = Arrow(g, q.target(groupoid))
        pq = compose(groupoid, p, q)
        np.testing.assert_allclose(pq.g, g @ h, atol=1e-13)
        np.testing.assert_allclose(pq.x, x)
        np.testing.assert_allclose(pq.source(), q.source())
        np.testing.assert_allclose(pq.target(groupoid), p.target(groupoid), atol=1e-10)

    def test_associativity_on_random_triples(self):
        groupoid = su2_groupoid(twist=0.3)
        rng = np.random.default_rng(7)
        for _ in range(30):
            x = groupoid.base_points(1, seed=int(rng.integers(1 << 30)))[0]
            g1, g2, g3 = (lg.random_element(SU2, rng) for _ in range(3))
            r = Arrow(g3, x)
            q = Arrow(g2, r.target(groupoid))
            p = Arrow(g1, q.target(groupoid))
            left = compose(groupoid, compose(groupoid, p, q), r)
            right = compose(groupoid, p, compose(groupoid, q, r))
            assert lg.dist(SU2, left.g, right.g) < 1e-10
            np.testing.assert_allclose(left.x, right.x, atol=1e-10)

    def test_not_composable(self):
        groupoid = torus_groupoid()
        p = Arrow(np.array([0.3]), np.array([0.5, 0.0]))
        q = Arrow(np.array([0.7]), np.array([0.0, 0.4]))
        with pytest.raises(NotComposable):
            compose(groupoid, p, q)

    def test_inverse_law_and_double_inverse(self):
        groupoid = su2_groupoid()
        rng = np.random.default_rng(8)
        for _ in range(100):
            g = lg.random_element(SU2, rng)
            x = groupoid.base_points(1, seed=int(rng.integers(1 << 30)))[0]
            p = Arrow(g, x)
            pinv = inverse(groupoid, p)
            np.testing.assert_allclose(pinv.x, p.target(groupoid), atol=1e-12)
            unit = compose(groupoid, p, pinv)
            assert lg.dist(SU2, unit.g, lg.identity(SU2)) < 1e-10
            np.testing.assert_allclose(unit.x, p.target(groupoid), atol=1e-10)
            back = inverse(groupoid, pinv)
            assert lg.dist(SU2, back.g, p.g) < 1e-12
            np.testing.assert_allclose(back.x, p.x, atol=1e-10)


class TestFiberRule:
    def test_fixed_point_fiber_is_the_group(self):
        groupoid = su2_groupoid()
        rule = subgroup_rule(SU2, 24)
        arrows, weights = t_fiber_rule(groupoid, groupoid.fixed_point, rule)
        assert abs(weights.sum() - 1.0) < 1e-14
        for q in arrows:
            np.testing.assert_allclose(q.x, groupoid.fixed_point, atol=1e-14)

    def test_targets_hit_the_base_point(self):
        groupoid = su2_groupoid(twist=0.2)
        rule = subgroup_rule(SU2, 24)
        x = np.array([0.3, -0.2, 0.25])
        arrows, _ = t_fiber_rule(groupoid, x, rule)
        for q in arrows:
            np.testing.assert_allclose(q.target(groupoid), x, atol=1e-12)


class TestPerturbationFieldAndMaps:
    def test_vanishes_at_fixed_point(self):
        field = PerturbationField.build(SU2, dim=3, amplitude=0.05, seed=1)
        rng = np.random.default_rng(2)
        for _ in range(10):
            g = lg.random_element(SU2, rng)
            val = field.value(g, np.zeros(3))
            assert np.max(np.abs(val)) == 0.0

    def test_amplitude_normalization(self):
        field = PerturbationField.build(SU2, dim=3, amplitude=0.05, seed=1)
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(200):
            g = lg.random_element(SU2, rng)
            x = rng.standard_normal(3)
            x *= 0.9 / np.linalg.norm(x)
            worst = max(worst, lg.algebra_norm(SU2, field.value(g, x)))
        assert 0.01 < worst < 0.15

    def test_json_round_trip(self):
        field = PerturbationField.build(T1, dim=2, amplitude=0.04, band=3, seed=9)
        back = PerturbationField.from_json(field.to_json())
        rng = np.random.default_rng(4)
        for _ in range(10):
            g = lg.random_element(T1, rng)
            x = rng.standard_normal(2) * 0.5
            np.testing.assert_allclose(back.value(g, x), field.value(g, x), atol=0)

    def test_identity_restriction_zero_for_contract_maps(self):
        groupoid = torus_groupoid()
        rule = torus_grid(T1, 16)
        exact = GroupoidMap(groupoid, None)
        assert identity_restriction_check(exact, rule) == 0.0
        perturbed = GroupoidMap(
            groupoid, PerturbationField.build(T1, dim=2, amplitude=0.05, seed=5))
        assert identity_restriction_check(perturbed, rule) == 0.0

    def test_corrupted_map_reports_offset(self):
        groupoid = torus_groupoid()
        rule = torus_grid(T1, 16)
        phi = GroupoidMap(groupoid, PerturbationField.build(T1, 2, 0.05, seed=5))
        delta = 0.07

        class Corrupted:
            groupoid = phi.groupoid

            def __call__(self, g, x):
                offset = delta / T1.metric_scale  # scaled norm delta
                return lg.multiply(T1, phi(g, x), np.array([offset]))

        deviation = identity_restriction_check(Corrupted(), rule)
        assert abs(deviation - delta) < 1e-12

    def test_scenario_json_round_trip(self):
        groupoid = su2_groupoid(twist=0.4)
        back = ActionGroupoid.from_json(groupoid.to_json())
        assert back.action.family == "su2_adjoint"
        assert back.action.twist == 0.4
        assert back.group == SU2


class TestComposablePairSampler:
    def test_pairs_compose_exactly(self):
        groupoid = su2_groupoid(twist=0.3)
        rule = subgroup_rule(SU2, 24)
        sampler = ComposablePairSampler(groupoid, rule, seed=1, count=64)
        n = 0
        for p, q in sampler.pairs():
            np.testing.assert_array_equal(p.source(), q.target(groupoid))
            n += 1
        assert n == 64

    def test_determinism_and_nesting(self):
        groupoid = torus_groupoid()
        rule = torus_grid(T1, 8)
        small = list(ComposablePairSampler(groupoid, rule, seed=2, count=16).pairs())
        large = list(ComposablePairSampler(groupoid, rule, seed=2, count=32).pairs())
        for (p1, q1), (p2, q2) in zip(small, large):
            np.testing.assert_array_equal(p1.g, p2.g)
            np.testing.assert_array_equal(q1.x, q2.x)

    def test_low_discrepancy_strategy(self):
        groupoid = torus_groupoid()
        rule = torus_grid(T1, 8)
        sampler = ComposablePairSampler(groupoid, rule, seed=3, count=20,
                                        strategy="low-discrepancy")
        pairs = list(sampler.pairs())
        assert len(pairs) == 20
        for p, q in pairs:
            np.testing.assert_array_equal(p.source(), q.target(groupoid))
