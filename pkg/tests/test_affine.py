"""Tests for affine complexes: validation, local convexity, developing maps,
star propagation, and global convexity with witnesses."""

import math

import numpy as np
import pytest

from groupoidlab import affine as af


class TestValidation:
    def test_positive_corpus_validates(self):
        for complex_ in (af.unit_square_complex(), af.l_complex(),
                         af.weyl_sector_complex(), af.strip_complex(3),
                         af.overlap_fan_complex(5), af.cylinder_complex()):
            complex_.validate()

    def test_non_integral_transition_rejected(self):
        bad = af.unit_square_complex()
        g = bad.gluings[0]
        bad.gluings[0] = af.Gluing(
            g.cell_a, g.face_a, g.cell_b, g.face_b,
            af.Transition(np.array([[1.0, 0.5], [0.0, 1.0]]), np.zeros(2)))
        with pytest.raises(af.MalformedComplex, match="integral"):
            bad.validate()

    def test_non_unimodular_transition_rejected(self):
        bad = af.unit_square_complex()
        g = bad.gluings[0]
        bad.gluings[0] = af.Gluing(
            g.cell_a, g.face_a, g.cell_b, g.face_b,
            af.Transition(np.diag([2.0, 1.0]), np.zeros(2)))
        with pytest.raises(af.MalformedComplex, match="det"):
            bad.validate()

    def test_face_mismatch_rejected(self):
        bad = af.unit_square_complex()
        g = bad.gluings[0]
        bad.gluings[0] = af.Gluing(
            g.cell_a, g.face_a, g.cell_b, g.face_b,
            af.Transition(np.eye(2), np.array([0.25, 0.0])))
        with pytest.raises(af.MalformedComplex, match="face"):
            bad.validate()

    def test_degenerate_cell_rejected(self):
        flat = af.AffineComplex(
            [np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])], [], 2)
        with pytest.raises(af.MalformedComplex, match="full-dimensional"):
            flat.validate()

    def test_accepted_transitions_are_unimodular(self):
        for complex_ in (af.l_complex(), af.overlap_fan_complex(5)):
            complex_.validate()
            for g in complex_.gluings:
                a = np.round(g.transition.linear)
                assert abs(round(float(np.linalg.det(a)))) == 1
                assert np.max(np.abs(g.transition.linear - a)) < 1e-12


class TestLocalConvexity:
    def test_square_is_locally_convex(self):
        res = af.check_local_convexity(af.unit_square_complex())
        assert res.locally_convex
        assert res.boundary_vertices == 4

    def test_weyl_sector_is_locally_convex(self):
        assert af.check_local_convexity(af.weyl_sector_complex()).locally_convex

    def test_l_complex_fails_at_reflex_corner(self):
        # oracle: the three squares contribute angle 3*pi/2 > pi at (1, 1)
        res = af.check_local_convexity(af.l_complex())
        assert not res.locally_convex
        assert len(res.witnesses) >= 1
        witness = res.witnesses[0]
        corner = np.asarray(af.l_complex().cells[witness.cell])[witness.vertex]
        np.testing.assert_allclose(corner, [1.0, 1.0], atol=1e-12)
        assert af.verify_cone_witness(af.l_complex(), witness)

    def test_witness_midpoint_really_escapes(self):
        res = af.check_local_convexity(af.l_complex())
        w = res.witnesses[0]
        # independent check: the midpoint points into the open quadrant
        # (+x, +y), which the L does not occupy near (1, 1)
        mid = w.midpoint / np.linalg.norm(w.midpoint)
        assert mid[0] > 1e-6 and mid[1] > 1e-6


class TestDevelop:
    def test_single_cell_gets_identity_chart(self):
        dev = af.develop(af.weyl_sector_complex())
        assert dev.charts[0].is_identity()

    def test_strip_develops_with_identity_patches(self):
        strip = af.strip_complex(4)
        dev = af.develop(strip)
        for chart in dev.charts:
            assert chart.is_identity()

    def test_cylinder_monodromy_reports_translation(self):
        with pytest.raises(af.Monodromy) as err:
            af.develop(af.cylinder_complex())
        holonomies = err.value.holonomies
        assert len(holonomies) == 1
        _, hol = holonomies[0]
        # oracle: composing the single gluing around the loop gives the
        # pure translation by (-1, 0)
        np.testing.assert_allclose(hol.linear, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(np.abs(hol.offset), [1.0, 0.0], atol=1e-12)

    def test_disconnected_complex_rejected(self):
        cells = [np.array([[0.0, 0], [1, 0], [0, 1]]),
                 np.array([[5.0, 5], [6, 5], [5, 6]])]
        with pytest.raises(af.MalformedComplex, match="connected"):
            af.develop(af.AffineComplex(cells, [], 2))

    def test_compatibility_on_tree_edges(self):
        complex_ = af.strip_complex(3)
        dev = af.develop(complex_)
        for g in complex_.gluings:
            va = np.asarray(complex_.cells[g.cell_a])[list(g.face_a)]
            left = dev.apply(g.cell_a, va)
            right = dev.apply(g.cell_b, g.transition.apply(va))
            np.testing.assert_allclose(left, right, atol=1e-9)


class TestStarPropagate:
    def test_convex_polytope_full_coverage(self):
        square = af.unit_square_complex()
        dev = af.develop(square)
        prop = af.star_propagate(square, dev, 0, np.array([0.6, 0.3]))
        assert prop.coverage == 1.0
        assert all(s.hit_boundary for s in prop.segments)

    def test_segments_cross_gluings(self):
        rect = af.strip_complex(2)  # a 1 x 2 rectangle
        dev = af.develop(rect)
        prop = af.star_propagate(rect, dev, 0, np.array([0.5, 0.5]),
                                 samples_per_cell=48)
        assert prop.coverage == 1.0
        # direction (1, 0): the maximal segment crosses into the second
        # square and ends on the far wall at x = 2
        east = [s for s in prop.segments
                if abs(s.direction[0] - 1.0) < 1e-12]
        assert east and abs(east[0].length - 1.5) < 1e-9

    def test_l_complex_coverage_fails_behind_reflex_corner(self):
        complex_ = af.l_complex()
        dev = af.develop(complex_)
        prop = af.star_propagate(complex_, dev, 1, np.array([1.75, 0.25]),
                                 samples_per_cell=64)
        assert prop.coverage < 1.0
        # oracle: the uncovered samples are hidden behind (1, 1), i.e. they
        # live in the top square
        assert all(ci == 2 for ci, _ in prop.uncovered)

    def test_not_locally_injective(self):
        square = af.unit_square_complex()
        dev = af.develop(square)
        dev.charts[0] = af.Transition(np.zeros((2, 2)), np.zeros(2))
        with pytest.raises(af.NotLocallyInjective):
            af.star_propagate(square, dev, 0, np.array([0.6, 0.3]))


class TestGlobalConvexity:
    def test_simplex_with_identity_development(self):
        verdict = af.global_convexity(af.unit_square_complex())
        assert verdict.locally_convex and verdict.injective and verdict.image_convex
        assert verdict.star_coverage == 1.0
        assert verdict.image_hull is not None

    def test_overlapping_immersion_detected(self):
        fan = af.overlap_fan_complex(5)
        verdict = af.global_convexity(fan)
        assert verdict.locally_convex  # every vertex cone is convex here
        assert not verdict.injective
        witness = verdict.collision
        assert {witness.cell_a, witness.cell_b} == {0, 4}
        assert af.verify_collision_witness(fan, af.develop(fan), witness)

    def test_half_strip_proper_exhaustion(self):
        strip = af.half_strip_complex(8)
        verdict = af.global_convexity(strip, mode="proper-exhaustion",
                                      radii=[1.0, 2.0, 3.0, 4.0])
        assert verdict.injective and verdict.image_convex

    def test_refinement_consistency(self):
        # passing the hull-coverage style check at one resolution implies
        # passing at the coarser doubled resolution
        square = af.unit_square_complex()
        fine = af.global_convexity(square, grid_resolution=0.05)
        coarse = af.global_convexity(square, grid_resolution=0.1)
        assert fine.image_convex and coarse.image_convex

    def test_dirichlet_samples_are_deterministic(self):
        a = af.global_convexity(af.strip_complex(3), seed=5)
        b = af.global_convexity(af.strip_complex(3), seed=5)
        assert a.injective == b.injective
        np.testing.assert_array_equal(a.image_hull, b.image_hull)


class TestSerialization:
    def test_json_round_trip(self):
        complex_ = af.l_complex()
        back = af.AffineComplex.from_json(complex_.to_json())
        back.validate()
        assert len(back.cells) == 3
        assert not af.check_local_convexity(back).locally_convex

    def test_rational_mode(self):
        from fractions import Fraction

        cells = [np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]),
                 np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]])]
        rational = [
            [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)), (Fraction(1), Fraction(1))],
            [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(1)), (Fraction(0), Fraction(1))],
        ]
        complex_ = af.AffineComplex(
            cells,
            [af.Gluing(0, (0, 2), 1, (0, 1), af.Transition(np.eye(2), np.zeros(2)))],
            2, precision="rational", rational_cells=rational)
        complex_.validate()

        complex_.rational_cells = None
        with pytest.raises(af.MalformedComplex, match="rational"):
            complex_.validate()
