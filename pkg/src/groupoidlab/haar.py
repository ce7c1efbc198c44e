"""Haar probability quadrature on compact groups.

Three families of rules:

* equispaced product grids on tori (exact on trigonometric polynomials of
  degree below the resolution, and exactly invariant under node translations
  since the nodes form a finite subgroup);
* deterministic low-discrepancy quaternion sets on SU(2)/SO(3) (Kronecker
  sequence pushed through the volume-preserving Shoemake map), seeded and
  reproducible, with an empirically stored translation-error bound;
* finite-subgroup rules on SU(2)/SO(3) (binary tetrahedral/octahedral/
  icosahedral groups and their rotation images).  These double as stored
  spherical designs and are exactly translation-invariant, which is what the
  averaging iteration needs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .liegroup import (
    TWO_PI,
    CompactGroup,
    ProductGroup,
    UnsupportedGroup,
    so3_from_quaternion,
    su2_from_quaternion,
    quaternion_multiply,
)


@dataclass(frozen=True)
class HaarQuadrature:
    """Nodes + weights of a probability rule on a compact group.

    ``stored_bound`` bounds the quadrature error on the rule's exactness
    class, including node-translated test functions.
    """

    group: CompactGroup | ProductGroup
    nodes: object  # stacked array, or tuple of stacked arrays for products
    weights: np.ndarray
    exactness_class: str
    seed: int | None = None
    stored_bound: float = 1e-13

    def __len__(self) -> int:
        return len(self.weights)

    def node(self, i: int):
        if isinstance(self.group, ProductGroup):
            return tuple(part[i] for part in self.nodes)
        return self.nodes[i]

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Weighted sum of per-node values (leading axis indexes nodes).

        numpy's pairwise reduction keeps the result bit-identical for a
        fixed node count, independent of any outer parallel split.
        """
        values = np.asanyarray(values)
        w = self.weights.reshape((len(self.weights),) + (1,) * (values.ndim - 1))
        return np.sum(w * values, axis=0)

    def to_json(self) -> dict:
        def encode(stack):
            arr = np.asarray(stack)
            if np.iscomplexobj(arr):
                return {"re": arr.real.tolist(), "im": arr.imag.tolist()}
            return {"re": arr.tolist()}

        nodes = (
            [encode(part) for part in self.nodes]
            if isinstance(self.group, ProductGroup)
            else encode(self.nodes)
        )
        return {
            "group": self.group.to_json(),
            "nodes": nodes,
            "weights": self.weights.tolist(),
            "exactness_class": self.exactness_class,
            "seed": self.seed,
            "stored_bound": self.stored_bound,
        }

    @staticmethod
    def from_json(obj: dict) -> "HaarQuadrature":
        from .liegroup import descriptor_from_json

        group = descriptor_from_json(obj["group"])

        def decode(part):
            arr = np.asarray(part["re"], dtype=float)
            if "im" in part:
                arr = arr + 1j * np.asarray(part["im"], dtype=float)
            return arr

        nodes = (
            tuple(decode(p) for p in obj["nodes"])
            if isinstance(group, ProductGroup)
            else decode(obj["nodes"])
        )
        return HaarQuadrature(
            group=group,
            nodes=nodes,
            weights=np.asarray(obj["weights"], dtype=float),
            exactness_class=str(obj["exactness_class"]),
            seed=obj.get("seed"),
            stored_bound=float(obj["stored_bound"]),
        )


# ---------------------------------------------------------------------------
# Torus grids
# ---------------------------------------------------------------------------

def torus_grid(desc: CompactGroup, resolution: int) -> HaarQuadrature:
    """Equispaced product grid Z_m^n with uniform weights."""
    if desc.kind != "torus":
        raise UnsupportedGroup("torus_grid needs a torus descriptor")
    axis = TWO_PI * np.arange(resolution) / resolution
    grids = np.meshgrid(*([axis] * desc.n), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    count = resolution**desc.n
    return HaarQuadrature(
        group=desc,
        nodes=nodes,
        weights=np.full(count, 1.0 / count),
        exactness_class=f"torus grid Z_{resolution}^{desc.n} (trig degree < {resolution})",
        seed=None,
        stored_bound=1e-14,
    )


# ---------------------------------------------------------------------------
# Low-discrepancy quaternion sets
# ---------------------------------------------------------------------------

def _kronecker_sequence(count: int, seed: int) -> np.ndarray:
    """R3 additive recurrence on [0,1)^3 with a seed-derived offset."""
    # Plastic-number generalization of the golden ratio sequence.
    g = 1.2207440846057595  # real root of x^3 = x + 1
    alphas = np.array([1.0 / g, 1.0 / g**2, 1.0 / g**3])
    offset = (np.arange(1, 4) * 0.381966011250105 * (seed + 1)) % 1.0
    n = np.arange(count)[:, None]
    return np.mod(offset + n * alphas, 1.0)


def _shoemake_quaternions(count: int, seed: int) -> np.ndarray:
    """Volume-preserving map [0,1)^3 -> S^3 (uniform quaternions)."""
    u = _kronecker_sequence(count, seed)
    r1 = np.sqrt(1.0 - u[:, 0])
    r2 = np.sqrt(u[:, 0])
    t1 = TWO_PI * u[:, 1]
    t2 = TWO_PI * u[:, 2]
    return np.stack([r2 * np.cos(t2), r1 * np.sin(t1), r1 * np.cos(t1), r2 * np.sin(t2)], axis=-1)


def su2_character(dim: int, elements: np.ndarray) -> np.ndarray:
    """Character of the dim-dimensional SU(2) irrep, chi_d = sin(d a)/sin(a)."""
    w = np.clip((elements[..., 0, 0] + elements[..., 1, 1]).real / 2.0, -1.0, 1.0)
    a = np.arccos(w)
    small = np.abs(np.sin(a)) < 1e-9
    generic = np.where(small, 1.0, np.sin(dim * a) / np.where(small, 1.0, np.sin(a)))
    # At a = 0 or pi the ratio degenerates to d * cos((d-1) a).
    degenerate = dim * np.cos((dim - 1) * a)
    return np.where(small, degenerate, generic)


def _character_translation_bound(nodes: np.ndarray, weights: np.ndarray) -> float:
    """Empirical bound: worst character-quadrature error over a fixed set of
    node translations (first 8 nodes), dims 2..4, safety factor 2."""
    worst = 0.0
    probes = nodes[: min(8, len(nodes))]
    for g in probes:
        translated = g @ nodes
        for dim in (2, 3, 4):
            worst = max(worst, abs(float(np.sum(weights * su2_character(dim, translated)))))
    return 2.0 * worst


def lowdisc_rule(desc: CompactGroup, resolution: int, seed: int = 0) -> HaarQuadrature:
    """Deterministic low-discrepancy rule of size resolution^3 on SU(2)/SO(3)."""
    count = resolution**3
    quats = _shoemake_quaternions(count, seed)
    if desc.kind == "su" and desc.n == 2:
        nodes = np.stack([su2_from_quaternion(q) for q in quats])
        weights = np.full(count, 1.0 / count)
        bound = _character_translation_bound(nodes, weights)
        return HaarQuadrature(desc, nodes, weights,
                              f"lowdisc quaternion set N={count}, seed {seed}", seed, bound)
    if desc.kind == "so" and desc.n == 3:
        su2 = lowdisc_rule(CompactGroup("su", 2, 1.0), resolution, seed)
        nodes = np.stack([so3_from_quaternion(q) for q in quats])
        return HaarQuadrature(desc, nodes, np.full(count, 1.0 / count),
                              f"lowdisc rotation set N={count}, seed {seed}", seed,
                              su2.stored_bound)
    raise UnsupportedGroup(f"no low-discrepancy rule for {desc.kind}({desc.n})")


# ---------------------------------------------------------------------------
# Finite subgroup rules (stored spherical designs)
# ---------------------------------------------------------------------------

_GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def _dedupe_quaternions(quats: list) -> np.ndarray:
    seen = {}
    for q in quats:
        key = tuple(np.round(np.asarray(q), 9))
        seen.setdefault(key, np.asarray(q, dtype=float))
    return np.stack(list(seen.values()))


def _close_under_multiplication(generators: list, limit: int = 200) -> np.ndarray:
    elements = {}

    def key(q):
        return tuple(np.round(q, 9))

    frontier = [np.asarray(q, dtype=float) for q in generators]
    frontier.append(np.array([1.0, 0.0, 0.0, 0.0]))
    for q in frontier:
        elements[key(q)] = q
    while frontier:
        nxt = []
        for q in frontier:
            for g in generators:
                prod = quaternion_multiply(q, np.asarray(g, dtype=float))
                prod = prod / np.linalg.norm(prod)
                k = key(prod)
                if k not in elements:
                    elements[k] = prod
                    nxt.append(prod)
        if len(elements) > limit:
            raise RuntimeError("subgroup closure exceeded expected order")
        frontier = nxt
    quats = np.stack(sorted(elements.values(), key=lambda q: tuple(np.round(q, 9))))
    return quats


def binary_tetrahedral() -> np.ndarray:
    """The 24 Hurwitz unit quaternions."""
    quats = []
    for i in range(4):
        for s in (1.0, -1.0):
            e = np.zeros(4)
            e[i] = s
            quats.append(e)
    for signs in itertools.product((0.5, -0.5), repeat=4):
        quats.append(np.array(signs))
    return _dedupe_quaternions(quats)


def binary_octahedral() -> np.ndarray:
    """2T plus the 24 quaternions (+-e_a +- e_b)/sqrt(2)."""
    quats = list(binary_tetrahedral())
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for a in range(4):
        for b in range(a + 1, 4):
            for sa, sb in itertools.product((1.0, -1.0), repeat=2):
                e = np.zeros(4)
                e[a], e[b] = sa * inv_sqrt2, sb * inv_sqrt2
                quats.append(e)
    return _dedupe_quaternions(quats)


def binary_icosahedral() -> np.ndarray:
    """The 120 unit icosians, generated by closure from two generators."""
    a = np.array([0.5, 0.5, 0.5, 0.5])
    b = np.array([_GOLDEN / 2.0, 1.0 / (2.0 * _GOLDEN), 0.5, 0.0])
    quats = _close_under_multiplication([a, b])
    if len(quats) != 120:
        raise RuntimeError(f"binary icosahedral closure produced {len(quats)} elements")
    return quats


_SU2_SUBGROUPS = {24: binary_tetrahedral, 48: binary_octahedral, 120: binary_icosahedral}

_DESIGN_STRENGTH = {24: 5, 48: 7, 120: 11}


def subgroup_rule(desc: CompactGroup, order: int) -> HaarQuadrature:
    """Exactly translation-invariant rule from a finite subgroup.

    Tori: the order is the per-axis grid resolution.  SU(2): order in
    {24, 48, 120} (binary polyhedral groups).  SO(3): order in {12, 24, 60}
    (their rotation images).
    """
    if desc.kind == "torus":
        return torus_grid(desc, order)
    if desc.kind == "su" and desc.n == 2:
        if order not in _SU2_SUBGROUPS:
            raise UnsupportedGroup(f"no SU(2) subgroup rule of order {order}")
        quats = _SU2_SUBGROUPS[order]()
        nodes = np.stack([su2_from_quaternion(q) for q in quats])
        return HaarQuadrature(
            desc, nodes, np.full(order, 1.0 / order),
            f"binary polyhedral subgroup, {order} nodes ({_DESIGN_STRENGTH[order]}-design)",
            None, 5e-14,
        )
    if desc.kind == "so" and desc.n == 3:
        if 2 * order not in _SU2_SUBGROUPS:
            raise UnsupportedGroup(f"no SO(3) subgroup rule of order {order}")
        quats = _SU2_SUBGROUPS[2 * order]()
        rotations = _dedupe_rotations(np.stack([so3_from_quaternion(q) for q in quats]))
        if len(rotations) != order:
            raise RuntimeError(f"rotation image has {len(rotations)} elements, wanted {order}")
        return HaarQuadrature(
            desc, rotations, np.full(order, 1.0 / order),
            f"polyhedral rotation subgroup, {order} nodes", None, 5e-14,
        )
    raise UnsupportedGroup(f"no subgroup rule for {desc.kind}({desc.n})")


def _dedupe_rotations(mats: np.ndarray) -> np.ndarray:
    seen = {}
    for m in mats:
        seen.setdefault(tuple(np.round(m.ravel(), 9)), m)
    return np.stack(sorted(seen.values(), key=lambda m: tuple(np.round(m.ravel(), 9))))


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_PRODUCT_NODE_CAP = 200_000


def haar_nodes(desc, resolution: int, seed: int = 0) -> HaarQuadrature:
    """Default probability rule: torus grid, low-discrepancy set of size
    resolution^3 on SU(2)/SO(3), cartesian products of those for products."""
    if isinstance(desc, ProductGroup):
        rules = [haar_nodes(f, resolution, seed + i) for i, f in enumerate(desc.factors)]
        total = 1
        for r in rules:
            total *= len(r)
        if total > _PRODUCT_NODE_CAP:
            raise UnsupportedGroup(f"product rule would need {total} nodes")
        index_grids = np.meshgrid(*[np.arange(len(r)) for r in rules], indexing="ij")
        flat = [g.ravel() for g in index_grids]
        nodes = tuple(np.asarray(r.nodes)[idx] for r, idx in zip(rules, flat))
        weights = np.ones(total)
        for r, idx in zip(rules, flat):
            weights = weights * r.weights[idx]
        return HaarQuadrature(
            desc, nodes, weights,
            " x ".join(r.exactness_class for r in rules), seed,
            max(r.stored_bound for r in rules),
        )
    if desc.kind == "torus":
        return torus_grid(desc, resolution)
    if (desc.kind == "su" and desc.n == 2) or (desc.kind == "so" and desc.n == 3):
        return lowdisc_rule(desc, resolution, seed)
    raise UnsupportedGroup(f"no quadrature rule for {desc.kind}({desc.n})")
