"""Integral affine cell complexes: glued convex polytopes with GL(k,Z)
transitions, developing maps, star-shaped propagation, and convexity
certification with self-verifying witnesses.

A complex is a list of vertex-represented convex polytopes plus gluings
between facets; each gluing carries an integral affine transition mapping
the chart of one cell onto the chart of the other.  Certification follows
the star-propagation argument: develop the complex, cast maximal segments
from interior base points by cell-walking, and check that samples are
reached, that developed images do not collide, and that the developed image
fills its convex hull.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import nnls
from scipy.spatial import ConvexHull, cKDTree

GEOMETRY_TOLERANCE = 1e-9
COVERAGE_TOLERANCE = 1e-6


class MalformedComplex(ValueError):
    """Cells or gluings violate the complex invariants."""


class Monodromy(RuntimeError):
    """The complex cannot be developed: a gluing loop has non-trivial
    holonomy (reported but not resolved by covering constructions)."""

    def __init__(self, message, holonomies=None):
        super().__init__(message)
        self.holonomies = holonomies or []


class NotLocallyInjective(ValueError):
    """A chart map of the developing map is singular."""


class OpenEscape(RuntimeError):
    """A traced segment failed to exit a cell cleanly (malformed complex)."""


# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Transition:
    """Integral affine map x -> A x + b with A in GL(k, Z)."""

    linear: np.ndarray
    offset: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.linear.T + self.offset

    def inverse(self) -> "Transition":
        inv = np.linalg.inv(self.linear)
        return Transition(np.round(inv).astype(float), -inv @ self.offset)

    def compose(self, other: "Transition") -> "Transition":
        """self after other: x -> self(other(x))."""
        return Transition(self.linear @ other.linear,
                          self.linear @ other.offset + self.offset)

    def is_identity(self, tol: float = GEOMETRY_TOLERANCE) -> bool:
        k = self.linear.shape[0]
        return (np.max(np.abs(self.linear - np.eye(k))) <= tol
                and np.max(np.abs(self.offset)) <= tol)


@dataclass(frozen=True)
class Gluing:
    """Identify face_a of cell_a with face_b of cell_b; the transition maps
    cell_a chart coordinates to cell_b chart coordinates."""

    cell_a: int
    face_a: tuple
    cell_b: int
    face_b: tuple
    transition: Transition


@dataclass
class AffineComplex:
    cells: list  # vertex arrays (m_i, k)
    gluings: list
    dimension: int
    precision: str = "float"  # "float" | "rational"
    rational_cells: list | None = None

    def validate(self) -> None:
        k = self.dimension
        for ci, cell in enumerate(self.cells):
            cell = np.asarray(cell, dtype=float)
            if cell.ndim != 2 or cell.shape[1] != k:
                raise MalformedComplex(f"cell {ci} vertices must be (m, {k})")
            if cell.shape[0] < k + 1:
                raise MalformedComplex(f"cell {ci} has too few vertices")
            if np.linalg.matrix_rank(cell[1:] - cell[0], tol=1e-10) < k:
                raise MalformedComplex(f"cell {ci} is not full-dimensional")
        for gi, g in enumerate(self.gluings):
            a = self._as_int_matrix(g.transition.linear, gi)
            if abs(round(np.linalg.det(a))) != 1:
                raise MalformedComplex(f"gluing {gi}: linear part must have det +-1")
            va = np.asarray(self.cells[g.cell_a], dtype=float)[list(g.face_a)]
            vb = np.asarray(self.cells[g.cell_b], dtype=float)[list(g.face_b)]
            mapped = g.transition.apply(va)
            if not _vertex_sets_match(mapped, vb):
                raise MalformedComplex(
                    f"gluing {gi}: transition does not carry face_a onto face_b"
                )
        if self.precision == "rational":
            self._validate_rational()

    @staticmethod
    def _as_int_matrix(a: np.ndarray, gi: int) -> np.ndarray:
        rounded = np.round(a)
        if np.max(np.abs(a - rounded)) > GEOMETRY_TOLERANCE:
            raise MalformedComplex(f"gluing {gi}: linear part is not integral")
        return rounded

    def _validate_rational(self) -> None:
        """Exact face-match check when vertices were declared rational."""
        if self.rational_cells is None:
            raise MalformedComplex("rational precision declared without rational vertices")
        for gi, g in enumerate(self.gluings):
            a = [[Fraction(x).limit_denominator(10**9) for x in row]
                 for row in np.round(g.transition.linear).astype(int).tolist()]
            b = [Fraction(x).limit_denominator(10**9) for x in g.transition.offset.tolist()]
            va = [self.rational_cells[g.cell_a][i] for i in g.face_a]
            vb = {tuple(self.rational_cells[g.cell_b][i]) for i in g.face_b}
            for v in va:
                img = tuple(
                    sum(a[r][c] * v[c] for c in range(self.dimension)) + b[r]
                    for r in range(self.dimension)
                )
                if img not in vb:
                    raise MalformedComplex(f"gluing {gi}: exact face match fails")

    # -- geometry caches ----------------------------------------------------

    def cell_inequalities(self, ci: int):
        """(normals, offsets) with normal . x + offset <= 0 inside."""
        cell = np.asarray(self.cells[ci], dtype=float)
        if self.dimension == 1:
            lo, hi = cell.min(), cell.max()
            return np.array([[-1.0], [1.0]]), np.array([lo, -hi])
        hull = ConvexHull(cell)
        eq = hull.equations
        return eq[:, :-1], eq[:, -1]

    def cell_facets(self, ci: int):
        """Facets as (vertex index frozenset, normal, offset)."""
        cell = np.asarray(self.cells[ci], dtype=float)
        normals, offsets = self.cell_inequalities(ci)
        facets = []
        for n, o in zip(normals, offsets):
            on = frozenset(
                int(i) for i in range(len(cell))
                if abs(cell[i] @ n + o) <= GEOMETRY_TOLERANCE
            )
            facets.append((on, n, o))
        return facets

    def glued_faces(self):
        """Map (cell, facet frozenset) -> (other cell, transition into it)."""
        table = {}
        for g in self.gluings:
            table[(g.cell_a, frozenset(g.face_a))] = (g.cell_b, g.transition)
            table[(g.cell_b, frozenset(g.face_b))] = (g.cell_a, g.transition.inverse())
        return table

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "precision": self.precision,
            "cells": [np.asarray(c, dtype=float).tolist() for c in self.cells],
            "gluings": [
                {
                    "cell_a": g.cell_a,
                    "face_a": list(g.face_a),
                    "cell_b": g.cell_b,
                    "face_b": list(g.face_b),
                    "linear": np.asarray(g.transition.linear).tolist(),
                    "offset": np.asarray(g.transition.offset).tolist(),
                }
                for g in self.gluings
            ],
        }

    @staticmethod
    def from_json(obj: dict) -> "AffineComplex":
        gluings = [
            Gluing(
                int(g["cell_a"]), tuple(g["face_a"]), int(g["cell_b"]), tuple(g["face_b"]),
                Transition(np.asarray(g["linear"], dtype=float),
                           np.asarray(g["offset"], dtype=float)),
            )
            for g in obj.get("gluings", [])
        ]
        return AffineComplex(
            cells=[np.asarray(c, dtype=float) for c in obj["cells"]],
            gluings=gluings,
            dimension=int(obj["dimension"]),
            precision=str(obj.get("precision", "float")),
        )


def _vertex_sets_match(a: np.ndarray, b: np.ndarray, tol: float = GEOMETRY_TOLERANCE) -> bool:
    if len(a) != len(b):
        return False
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    return bool(np.all(d.min(axis=1) <= tol) and np.all(d.min(axis=0) <= tol))


# ---------------------------------------------------------------------------
# Local convexity at boundary vertices
# ---------------------------------------------------------------------------

@dataclass
class ConeWitness:
    """Two developed directions whose midpoint escapes the vertex cone."""

    cell: int
    vertex: int
    direction_a: np.ndarray
    direction_b: np.ndarray
    midpoint: np.ndarray


@dataclass
class LocalConvexityResult:
    locally_convex: bool
    witnesses: list
    boundary_vertices: int


def _vertex_classes(x: AffineComplex):
    """Union-find identification of (cell, vertex) instances across gluings."""
    parents = {}

    def find(i):
        while parents[i] != i:
            parents[i] = parents[parents[i]]
            i = parents[i]
        return i

    def union(i, j):
        parents.setdefault(i, i)
        parents.setdefault(j, j)
        ri, rj = find(i), find(j)
        if ri != rj:
            parents[ri] = rj

    for ci, cell in enumerate(x.cells):
        for vi in range(len(np.asarray(cell))):
            parents.setdefault((ci, vi), (ci, vi))
    for g in x.gluings:
        cb = np.asarray(x.cells[g.cell_b], dtype=float)
        for vi in g.face_a:
            img = g.transition.apply(np.asarray(x.cells[g.cell_a], dtype=float)[vi])
            d = np.linalg.norm(cb - img, axis=1)
            wi = int(np.argmin(d))
            if d[wi] <= GEOMETRY_TOLERANCE:
                union((g.cell_a, vi), (g.cell_b, wi))
    classes = {}
    for inst in parents:
        classes.setdefault(find(inst), []).append(inst)
    return list(classes.values())


def _in_cone(generators: np.ndarray, point: np.ndarray, tol: float = 1e-8) -> bool:
    if np.linalg.norm(point) <= tol:
        return True
    _, residual = nnls(generators.T, point)
    return residual <= tol * (1.0 + np.linalg.norm(point))


def check_local_convexity(x: AffineComplex) -> LocalConvexityResult:
    """Certify that every boundary vertex has a convex developed cone.

    The star of each boundary vertex is developed by walking gluings; each
    incident cell contributes the cone spanned by edge directions out of the
    vertex.  A failure witness is a pair of in-cone directions whose
    midpoint leaves the union of cones.
    """
    x.validate()
    glued = x.glued_faces()
    facet_cache = {ci: x.cell_facets(ci) for ci in range(len(x.cells))}
    boundary_instances = set()
    for ci, facets in facet_cache.items():
        for on, _, _ in facets:
            if (ci, on) not in glued:
                for vi in on:
                    boundary_instances.add((ci, vi))

    witnesses = []
    checked = 0
    for cls in _vertex_classes(x):
        if not any(inst in boundary_instances for inst in cls):
            continue
        checked += 1
        cones = _developed_vertex_cones(x, glued, cls)
        if cones is None:
            continue
        witness = _cone_union_witness(cones)
        if witness is not None:
            c0, v0 = cls[0]
            u, w, mid = witness
            witnesses.append(ConeWitness(c0, v0, u, w, mid))
    return LocalConvexityResult(not witnesses, witnesses, checked)


def _developed_vertex_cones(x: AffineComplex, glued, cls):
    """Develop the cells around one vertex class into a common frame; return
    a list of per-cell generator matrices (rows are cone directions)."""
    members = dict(cls if isinstance(cls, dict) else [(inst, None) for inst in cls])
    start = sorted(members)[0]
    frame = {start: Transition(np.eye(x.dimension), np.zeros(x.dimension))}
    queue = [start]
    cones = []
    while queue:
        ci, vi = queue.pop()
        dev = frame[(ci, vi)]
        cell = np.asarray(x.cells[ci], dtype=float)
        apex = dev.apply(cell[vi])
        dirs = dev.apply(cell) - apex
        dirs = np.array([d / np.linalg.norm(d) for d in dirs if np.linalg.norm(d) > 1e-12])
        cones.append((apex, dirs))
        for on, _, _ in x.cell_facets(ci):
            if vi not in on or (ci, on) not in glued:
                continue
            nb, transition = glued[(ci, on)]
            img = transition.apply(cell[vi])
            cb = np.asarray(x.cells[nb], dtype=float)
            wi = int(np.argmin(np.linalg.norm(cb - img, axis=1)))
            if (nb, wi) in frame or (nb, wi) not in members:
                continue
            frame[(nb, wi)] = dev.compose(transition.inverse())
            queue.append((nb, wi))
    if len(cones) == 0:
        return None
    return [dirs for _, dirs in cones]


def _cone_union_witness(cones):
    """Search direction pairs whose midpoint escapes the union of cones."""
    all_dirs = [d for cone in cones for d in cone]
    for i, cone_i in enumerate(cones):
        for j in range(i + 1, len(cones)):
            for u in cone_i:
                for w in cones[j]:
                    for t in (0.5, 0.25, 0.75):
                        mid = t * u + (1 - t) * w
                        if np.linalg.norm(mid) < 1e-9:
                            continue
                        if not any(_in_cone(c, mid) for c in cones):
                            return u, w, mid
    return None


def verify_cone_witness(x: AffineComplex, witness: ConeWitness) -> bool:
    """Re-derive the vertex star and confirm the witness midpoint escapes."""
    glued = x.glued_faces()
    for cls in _vertex_classes(x):
        if (witness.cell, witness.vertex) in cls:
            cones = _developed_vertex_cones(x, glued, cls)
            return not any(_in_cone(c, witness.midpoint) for c in cones)
    return False


# ---------------------------------------------------------------------------
# Developing maps
# ---------------------------------------------------------------------------

@dataclass
class DevelopingMap:
    """Per-cell affine charts (M_i, c_i) into R^k, compatible across glued
    faces (holonomy-free on the gluing graph)."""

    complex: AffineComplex
    charts: list  # Transition per cell
    base_cell: int

    def apply(self, ci: int, points: np.ndarray) -> np.ndarray:
        return self.charts[ci].apply(points)

    def check_local_injectivity(self) -> None:
        for ci, chart in enumerate(self.charts):
            if abs(np.linalg.det(chart.linear)) < 1e-12:
                raise NotLocallyInjective(f"chart of cell {ci} is singular")


def develop(x: AffineComplex, base_cell: int = 0) -> DevelopingMap:
    """Spread charts over a spanning tree of the gluing graph; raise
    Monodromy (with the offending holonomies) if any non-tree gluing
    disagrees."""
    x.validate()
    n = len(x.cells)
    charts = [None] * n
    charts[base_cell] = Transition(np.eye(x.dimension), np.zeros(x.dimension))
    edges = []
    for gi, g in enumerate(x.gluings):
        edges.append((g.cell_a, g.cell_b, g.transition, gi))
    queue = [base_cell]
    used = set()
    while queue:
        ci = queue.pop()
        for a, b, t, gi in edges:
            if gi in used:
                continue
            if a == ci and charts[b] is None:
                charts[b] = charts[a].compose(t.inverse())
                used.add(gi)
                queue.append(b)
            elif b == ci and charts[a] is None:
                charts[a] = charts[b].compose(t)
                used.add(gi)
                queue.append(a)
    if any(c is None for c in charts):
        raise MalformedComplex("complex is not connected")
    holonomies = []
    for a, b, t, gi in edges:
        if gi in used:
            continue
        # Compatibility dev_a = dev_b o t; the mismatch is the holonomy.
        expected = charts[b].compose(t)
        hol = expected.compose(_affine_inverse(charts[a]))
        if not hol.is_identity():
            holonomies.append((gi, hol))
    if holonomies:
        raise Monodromy(
            f"{len(holonomies)} gluing(s) carry non-trivial holonomy", holonomies
        )
    dev = DevelopingMap(x, charts, base_cell)
    dev.check_local_injectivity()
    return dev


def _affine_inverse(t: Transition) -> Transition:
    inv = np.linalg.inv(t.linear)
    return Transition(inv, -inv @ t.offset)


# ---------------------------------------------------------------------------
# Star propagation
# ---------------------------------------------------------------------------

@dataclass
class Segment:
    direction: np.ndarray
    length: float
    hit_boundary: bool


@dataclass
class StarPropagation:
    base_cell: int
    base_point: np.ndarray
    segments: list
    coverage: float
    uncovered: list  # (cell, intrinsic point) witnesses


def _direction_set(k: int, count: int, seed: int = 0) -> np.ndarray:
    if k == 1:
        return np.array([[1.0], [-1.0]])
    if k == 2:
        angles = 2.0 * math.pi * np.arange(count) / count
        return np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    if k == 3:
        # Fibonacci sphere
        i = np.arange(count) + 0.5
        phi = math.pi * (3.0 - math.sqrt(5.0)) * i
        z = 1.0 - 2.0 * i / count
        r = np.sqrt(1.0 - z * z)
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((count, k))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _max_segment(x: AffineComplex, dev: DevelopingMap, glued, ineqs,
                 start_cell: int, start_dev: np.ndarray, direction: np.ndarray):
    """Walk the developed ray start + t*direction through cells; return
    (t_max, hit_boundary)."""
    ci = start_cell
    t_now = 0.0
    max_steps = 16 * len(x.cells) + 16
    for _ in range(max_steps):
        chart_inv = _affine_inverse(dev.charts[ci])
        y0 = chart_inv.apply(start_dev)
        u = chart_inv.linear @ direction
        normals, offsets = ineqs[ci]
        slopes = normals @ u
        values = normals @ y0 + offsets
        exit_t = math.inf
        exit_row = -1
        for r in range(len(slopes)):
            if slopes[r] > 1e-13:
                t = (-values[r]) / slopes[r]
                if t < exit_t - 1e-13 and t > t_now - 1e-9:
                    exit_t, exit_row = t, r
        if exit_row < 0 or not math.isfinite(exit_t):
            raise OpenEscape(f"ray failed to exit cell {ci}")
        facets = x.cell_facets(ci)
        on = facets[exit_row][0] if x.dimension > 1 else facets[exit_row][0]
        # match exit hyperplane to a facet vertex set
        key = (ci, on)
        if key not in glued:
            return exit_t, True
        nb, _ = glued[key]
        ci = nb
        t_now = exit_t + 1e-12
    raise OpenEscape("cell walk exceeded the step budget")


def _facet_row_sets(x: AffineComplex, ci: int):
    return [on for on, _, _ in x.cell_facets(ci)]


def star_propagate(x: AffineComplex, dev: DevelopingMap, base_cell: int,
                   base_point: np.ndarray, n_directions: int = 64,
                   samples_per_cell: int = 24, seed: int = 0) -> StarPropagation:
    """Maximal segments from an interior point, plus a coverage verdict.

    Segments over a deterministic direction family are returned for
    inspection; coverage casts one exact ray per sample point and checks
    the maximal segment reaches it.
    """
    dev.check_local_injectivity()
    glued = x.glued_faces()
    ineqs = {ci: x.cell_inequalities(ci) for ci in range(len(x.cells))}
    base_dev = dev.apply(base_cell, np.asarray(base_point, dtype=float))

    segments = []
    for v in _direction_set(x.dimension, n_directions, seed):
        t_max, hit = _max_segment(x, dev, glued, ineqs, base_cell, base_dev, v)
        segments.append(Segment(v, t_max, hit))

    uncovered = []
    total = 0
    rng = np.random.default_rng(seed + 1)
    for ci, cell in enumerate(x.cells):
        cell = np.asarray(cell, dtype=float)
        weights = rng.dirichlet(np.ones(len(cell)), size=samples_per_cell)
        pts = weights @ cell
        for z in pts:
            total += 1
            z_dev = dev.apply(ci, z)
            delta = z_dev - base_dev
            t_z = float(np.linalg.norm(delta))
            if t_z <= COVERAGE_TOLERANCE:
                continue
            t_max, _ = _max_segment(x, dev, glued, ineqs, base_cell, base_dev,
                                    delta / t_z)
            if t_max < t_z - COVERAGE_TOLERANCE:
                uncovered.append((ci, z))
    coverage = 1.0 - len(uncovered) / max(total, 1)
    return StarPropagation(base_cell, np.asarray(base_point, dtype=float),
                           segments, coverage, uncovered)


# ---------------------------------------------------------------------------
# Global convexity
# ---------------------------------------------------------------------------

@dataclass
class CollisionWitness:
    cell_a: int
    point_a: np.ndarray
    cell_b: int
    point_b: np.ndarray
    image: np.ndarray


@dataclass
class ConvexityVerdict:
    locally_convex: bool
    local_witnesses: list
    injective: bool
    collision: CollisionWitness | None
    image_hull: np.ndarray | None
    image_convex: bool
    hole_witness: np.ndarray | None
    star_coverage: float
    mode: str


def _interior_samples(x: AffineComplex, per_cell: int, seed: int):
    rng = np.random.default_rng(seed)
    cells_idx, points = [], []
    for ci, cell in enumerate(x.cells):
        cell = np.asarray(cell, dtype=float)
        # Dirichlet(2) concentrates samples strictly inside the cell.
        weights = rng.dirichlet(2.0 * np.ones(len(cell)), size=per_cell)
        pts = weights @ cell
        points.append(pts)
        cells_idx.extend([ci] * per_cell)
    return np.asarray(cells_idx), np.vstack(points)


def global_convexity(x: AffineComplex, dev: DevelopingMap | None = None,
                     mode: str = "compact", per_cell: int = 200,
                     grid_resolution: float = 0.05, n_base: int = 3,
                     radii=None, seed: int = 0) -> ConvexityVerdict:
    """Certify injectivity and convex image of the developing map.

    Compact mode: star-propagate from several interior base points, check
    developed samples for collisions, and check the developed image fills
    its convex hull on a grid.  Proper-exhaustion mode repeats the image
    checks on nested metric balls.
    """
    local = check_local_convexity(x)
    if dev is None:
        dev = develop(x)
    glued = x.glued_faces()

    cells_idx, samples = _interior_samples(x, per_cell, seed)
    dev_sorted = np.vstack([
        dev.apply(ci, samples[cells_idx == ci]) for ci in range(len(x.cells))
    ])

    # Injectivity: developed cell interiors must be pairwise disjoint.
    collision = _find_overlap(x, dev)

    # Star propagation from several base cells.
    coverage = 1.0
    for ci in range(min(n_base, len(x.cells))):
        cell = np.asarray(x.cells[ci], dtype=float)
        prop = star_propagate(x, dev, ci, cell.mean(axis=0), seed=seed)
        coverage = min(coverage, prop.coverage)

    # Image convexity: hull-interior grid points must land in some cell.
    ineqs = {ci: x.cell_inequalities(ci) for ci in range(len(x.cells))}

    def covered(point):
        for ci in range(len(x.cells)):
            y = _affine_inverse(dev.charts[ci]).apply(point)
            normals, offsets = ineqs[ci]
            if np.all(normals @ y + offsets <= 1e-7):
                return True
        return False

    def hull_check(points):
        if len(points) < x.dimension + 1:
            return None, True, None
        hull = ConvexHull(points)
        eq = hull.equations
        axes = [np.arange(points[:, i].min(), points[:, i].max() + grid_resolution / 2,
                          grid_resolution) for i in range(x.dimension)]
        mesh = np.meshgrid(*axes, indexing="ij")
        grid = np.stack([m.ravel() for m in mesh], axis=-1)
        inside = grid[np.all(eq[:, :-1] @ grid.T + eq[:, -1:] <= -0.25 * grid_resolution,
                             axis=0)]
        for point in inside:
            if not covered(point):
                return points[hull.vertices], False, point
        return points[hull.vertices], True, None

    if mode == "compact":
        hull_verts, image_convex, hole = hull_check(dev_sorted)
    elif mode == "proper-exhaustion":
        center = dev_sorted.mean(axis=0)
        radii = radii if radii is not None else [1.0, 2.0, 4.0]
        hull_verts, image_convex, hole = None, True, None
        prev_count = 0
        for r in radii:
            mask = np.linalg.norm(dev_sorted - center, axis=1) <= r
            if mask.sum() < prev_count:
                raise MalformedComplex("exhaustion balls are not nested")
            prev_count = int(mask.sum())
            if mask.sum() < x.dimension + 1:
                continue
            hull_verts, ok, hole_r = hull_check(dev_sorted[mask])
            if not ok:
                image_convex, hole = False, hole_r
                break
    else:
        raise ValueError(f"unknown mode {mode!r}")

    return ConvexityVerdict(
        locally_convex=local.locally_convex,
        local_witnesses=local.witnesses,
        injective=collision is None,
        collision=collision,
        image_hull=hull_verts,
        image_convex=image_convex,
        hole_witness=hole,
        star_coverage=coverage,
        mode=mode,
    )


def _developed_inequalities(x: AffineComplex, dev: DevelopingMap, ci: int):
    """Inequalities of the developed cell polytope dev_ci(cell)."""
    normals, offsets = x.cell_inequalities(ci)
    inv = _affine_inverse(dev.charts[ci])
    # n . inv(y) + o <= 0  <=>  (n @ inv.linear) . y + (n . inv.offset + o) <= 0
    new_normals = normals @ inv.linear
    new_offsets = normals @ inv.offset + offsets
    scale = np.linalg.norm(new_normals, axis=1)
    return new_normals / scale[:, None], new_offsets / scale


def _find_overlap(x: AffineComplex, dev: DevelopingMap,
                  margin: float = 1e-7) -> CollisionWitness | None:
    """Chebyshev-center LP test for interior overlap of developed cells."""
    from scipy.optimize import linprog

    devs = [_developed_inequalities(x, dev, ci) for ci in range(len(x.cells))]
    k = x.dimension
    for a, b in itertools.combinations(range(len(x.cells)), 2):
        normals = np.vstack([devs[a][0], devs[b][0]])
        offsets = np.concatenate([devs[a][1], devs[b][1]])
        # maximize r subject to n.x + o + r <= 0 (normals are unit rows)
        res = linprog(
            c=np.concatenate([np.zeros(k), [-1.0]]),
            A_ub=np.hstack([normals, np.ones((len(normals), 1))]),
            b_ub=-offsets,
            bounds=[(None, None)] * k + [(0.0, None)],
            method="highs",
        )
        if res.status == 0 and res.x[-1] > margin:
            point = res.x[:k]
            return CollisionWitness(
                a, _affine_inverse(dev.charts[a]).apply(point),
                b, _affine_inverse(dev.charts[b]).apply(point),
                point,
            )
    return None


def verify_collision_witness(x: AffineComplex, dev: DevelopingMap,
                             witness: CollisionWitness) -> bool:
    """Recheck: the witness images coincide and each preimage lies inside
    its cell."""
    a = dev.apply(witness.cell_a, witness.point_a)
    b = dev.apply(witness.cell_b, witness.point_b)
    if witness.cell_a == witness.cell_b or np.linalg.norm(a - b) > 1e-6:
        return False
    for ci, pt in ((witness.cell_a, witness.point_a), (witness.cell_b, witness.point_b)):
        normals, offsets = x.cell_inequalities(ci)
        if np.max(normals @ pt + offsets) > 1e-9:
            return False
    return True


# ---------------------------------------------------------------------------
# Corpus builders
# ---------------------------------------------------------------------------

def _identity_gluing(cell_a, face_a, cell_b, face_b, k=2):
    return Gluing(cell_a, tuple(face_a), cell_b, tuple(face_b),
                  Transition(np.eye(k), np.zeros(k)))


def unit_square_complex() -> AffineComplex:
    """Unit square split along the diagonal into two triangles."""
    t1 = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
    t2 = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    return AffineComplex([t1, t2], [_identity_gluing(0, (0, 2), 1, (0, 1))], 2)


def l_complex() -> AffineComplex:
    """Three unit squares forming an L; reflex corner at (1, 1)."""
    s = lambda ox, oy: np.array(
        [[ox, oy], [ox + 1, oy], [ox + 1, oy + 1], [ox, oy + 1]], dtype=float
    )
    cells = [s(0, 0), s(1, 0), s(0, 1)]
    gluings = [
        _identity_gluing(0, (1, 2), 1, (0, 3)),  # x = 1 edge
        _identity_gluing(0, (3, 2), 2, (0, 1)),  # y = 1 edge
    ]
    return AffineComplex(cells, gluings, 2)


def weyl_sector_complex(angle: float = math.pi / 3) -> AffineComplex:
    """A plane sector truncated to a triangle (rank-2 chamber model)."""
    cell = np.array([[0.0, 0.0], [1.0, 0.0], [math.cos(angle), math.sin(angle)]])
    return AffineComplex([cell], [], 2)


def cylinder_complex() -> AffineComplex:
    """Unit square with left and right edges glued by a unit translation."""
    cell = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    glue = Gluing(0, (1, 2), 0, (0, 3), Transition(np.eye(2), np.array([-1.0, 0.0])))
    return AffineComplex([cell], [glue], 2)


def strip_complex(n: int = 4) -> AffineComplex:
    """n unit squares in a row with identity gluings (simply connected)."""
    cells = [
        np.array([[i, 0.0], [i + 1.0, 0.0], [i + 1.0, 1.0], [i, 1.0]])
        for i in range(n)
    ]
    gluings = [_identity_gluing(i, (1, 2), i + 1, (0, 3)) for i in range(n - 1)]
    return AffineComplex(cells, gluings, 2)


def overlap_fan_complex(n: int = 5) -> AffineComplex:
    """Chain of n quarter-turn squares around the origin; for n = 5 the
    developed image of the last cell lands on the first (an immersion with
    a collision, while every vertex cone stays convex)."""
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    base = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    cells = []
    for i in range(n):
        r = np.linalg.matrix_power(rot, i % 4)
        cells.append(base @ r.T)
    gluings = []
    for i in range(n - 1):
        ca, cb = np.asarray(cells[i]), np.asarray(cells[i + 1])
        shared_a = [vi for vi in range(4) if
                    np.min(np.linalg.norm(cb - ca[vi], axis=1)) <= 1e-12]
        shared_b = [vi for vi in range(4) if
                    np.min(np.linalg.norm(ca - cb[vi], axis=1)) <= 1e-12]
        gluings.append(_identity_gluing(i, tuple(shared_a), i + 1, tuple(shared_b)))
    return AffineComplex(cells, gluings, 2)


def half_strip_complex(n: int = 8) -> AffineComplex:
    """Truncated half-infinite strip for proper-exhaustion experiments."""
    return strip_complex(n)
