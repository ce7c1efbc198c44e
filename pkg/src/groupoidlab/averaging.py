"""The averaging iteration: defect functional, one-step averaging operator,
quadratically convergent iteration, and action extraction from the limit.

The iteration is run on a composition-closed finite presentation of the
groupoid: the quadrature nodes form a finite subgroup of the structure group
(torus grids, binary polyhedral groups) and each sampled base point is
replaced by its full orbit under the nodes.  Products, inverses, and fiber
arrows then never leave the table, so every averaging step is evaluated
exactly -- no off-grid interpolation and no artificial defect floor.  Fresh
(held-out) arrows are handled by replaying the iteration on their own orbit
bundles, which is exact because the averaging operator acts bundle by bundle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import liegroup as lg
from .groupoid import ActionGroupoid, Arrow, ComposablePairSampler, GroupoidMap
from .haar import HaarQuadrature

NODE_MATCH_TOLERANCE = 1e-8


class DefectTooLarge(ValueError):
    """A cocycle value left the logarithm chart (or the start defect exceeds
    the configured C0/4 gate); the base ball must shrink."""


class NotInvertible(ValueError):
    """(phi, s) fails to invert on the tabulation grid."""


# ---------------------------------------------------------------------------
# Subgroup tables and orbit bundles
# ---------------------------------------------------------------------------

@dataclass
class SubgroupTable:
    """Cayley data for a rule whose nodes form a finite subgroup."""

    rule: HaarQuadrature
    nodes: np.ndarray
    mult: np.ndarray  # mult[i, j] = index of node_i . node_j
    inv: np.ndarray  # inv[i] = index of node_i^-1
    identity_index: int

    @staticmethod
    def build(rule: HaarQuadrature) -> "SubgroupTable":
        kernel = lg.kernel_for(rule.group)
        nodes = np.asarray(rule.nodes)
        n = len(rule)
        flat = nodes.reshape(n, -1)
        is_torus = rule.group.kind == "torus"

        def match(stack):
            target = stack.reshape(len(stack), -1)
            diff = target[:, None, :] - flat[None, :, :]
            if is_torus:
                # Angles live on the circle: compare wrapped differences.
                diff = diff - lg.TWO_PI * np.round(diff / lg.TWO_PI)
            dists = np.linalg.norm(diff, axis=-1)
            idx = np.argmin(dists, axis=1)
            if np.max(dists[np.arange(len(stack)), idx]) > NODE_MATCH_TOLERANCE:
                raise ValueError("rule nodes are not closed under multiplication; "
                                 "the averager needs a subgroup rule")
            return idx

        mult = np.empty((n, n), dtype=int)
        for i in range(n):
            prods = kernel.mul(np.broadcast_to(nodes[i], nodes.shape), nodes)
            mult[i] = match(np.asarray(prods))
        inv = match(np.asarray(kernel.inv(nodes)))
        ident = lg.identity(rule.group)
        id_idx = int(match(np.asarray(ident)[None, ...])[0])
        return SubgroupTable(rule, nodes, mult, inv, id_idx)


@dataclass
class Bundle:
    """One orbit of base points together with the node-action index table."""

    points: np.ndarray  # (P, d)
    act: np.ndarray  # act[i, j] = index of a(node_i, x_j)
    is_fixed_point: bool = False

    @property
    def size(self) -> int:
        return len(self.points)


def build_bundle(groupoid: ActionGroupoid, table: SubgroupTable, y: np.ndarray) -> Bundle:
    y = np.asarray(y, dtype=float)
    reps: list[np.ndarray] = []
    for i in range(len(table.nodes)):
        z = groupoid.act(table.rule.node(i), y)
        if not any(np.linalg.norm(z - r) <= NODE_MATCH_TOLERANCE for r in reps):
            reps.append(z)
    points = np.stack(reps)
    act = np.empty((len(table.nodes), len(points)), dtype=int)
    for i in range(len(table.nodes)):
        for j in range(len(points)):
            z = groupoid.act(table.rule.node(i), points[j])
            d = np.linalg.norm(points - z, axis=1)
            k = int(np.argmin(d))
            if d[k] > NODE_MATCH_TOLERANCE:
                raise ValueError("orbit is not closed under the node action")
            act[i, j] = k
    fixed = bool(np.linalg.norm(y) <= NODE_MATCH_TOLERANCE)
    return Bundle(points, act, fixed)


def default_bundles(groupoid: ActionGroupoid, table: SubgroupTable, n_orbits: int,
                    seed: int | None = None) -> list[Bundle]:
    """Fixed-point bundle plus n_orbits seeded orbit bundles."""
    bundles = [build_bundle(groupoid, table, groupoid.fixed_point)]
    for y in groupoid.base_points(n_orbits, seed=seed):
        bundles.append(build_bundle(groupoid, table, y))
    return bundles


# ---------------------------------------------------------------------------
# Tabulated maps
# ---------------------------------------------------------------------------

@dataclass
class TabulatedMap:
    """phi evaluated on every arrow (node_i, x_j) of a bundle family."""

    groupoid: ActionGroupoid
    table: SubgroupTable
    bundles: list
    values: list  # per bundle: array (n_nodes, P, *elem)

    @staticmethod
    def from_map(phi: GroupoidMap, table: SubgroupTable, bundles: list) -> "TabulatedMap":
        values = []
        for b in bundles:
            vals = [
                np.stack([np.asarray(phi(table.rule.node(i), b.points[j]))
                          for j in range(b.size)])
                for i in range(len(table.nodes))
            ]
            values.append(np.stack(vals))
        return TabulatedMap(phi.groupoid, table, bundles, values)

    @property
    def kernel(self):
        return lg.kernel_for(self.groupoid.group)

    def _cocycle(self, v: np.ndarray, bundle: Bundle, i_block: np.ndarray):
        """psi[i, h, j] = phi(p.q) phi(q)^-1 phi(p)^-1 for p = (g_i, x_j) and
        q the fiber arrow (h, a(h^-1, x_j))."""
        k = self.kernel
        jh = bundle.act[self.table.inv, :]  # (H, P) source index of fiber arrows
        pq = self.values_at(v, self.table.mult[i_block][:, :, None],
                            jh[None, :, :])  # (I, H, P)
        q = self.values_at(v, np.arange(len(self.table.nodes))[None, :, None], jh[None, :, :])
        p = self.values_at(v, i_block[:, None, None], np.arange(bundle.size)[None, None, :])
        return k.mul(k.mul(pq, k.inv(q)), k.inv(np.broadcast_to(p, pq.shape)))

    @staticmethod
    def values_at(v: np.ndarray, i, j) -> np.ndarray:
        return v[i, j]

    def defect(self) -> "DefectReport":
        """Exhaustive sup of the cocycle distance over every composable pair
        in the presentation."""
        k = self.kernel
        worst, where = 0.0, None
        count = 0
        for bi, (b, v) in enumerate(zip(self.bundles, self.values)):
            n = len(self.table.nodes)
            for start in range(0, n, 24):
                blk = np.arange(start, min(start + 24, n))
                psi = self._cocycle(v, b, blk)
                d = k.log_norm(psi)
                count += d.size
                local = float(np.max(d))
                if local > worst:
                    idx = np.unravel_index(int(np.argmax(d)), d.shape)
                    where = (bi, int(blk[idx[0]]), int(idx[1]), int(idx[2]))
                    worst = local
        argmax = None
        if where is not None:
            bi, i, h, j = where
            b = self.bundles[bi]
            src = b.points[b.act[self.table.inv[h], j]]
            q = Arrow(self.table.rule.node(h), src)
            p = Arrow(self.table.rule.node(i), b.points[j])
            argmax = (p, q)
        return DefectReport(worst, argmax, count, self.table.rule.exactness_class)

    def average_step(self):
        """One application of the averaging operator.

        Returns (new map, per-bundle step factors Psi, max |log psi| seen).
        Raises DefectTooLarge when a cocycle value leaves the chart.
        """
        k = self.kernel
        w = self.table.rule.weights
        new_values, psis = [], []
        max_lognorm = 0.0
        for b, v in zip(self.bundles, self.values):
            if b.is_fixed_point:
                # Over the fixed point the fiber rule produces the identity
                # cocycle by construction; keep the restriction exact.
                psis.append(_identity_stack(self.groupoid.group, v.shape[:-_elem_ndim(v)]))
                new_values.append(v.copy())
                continue
            n = len(self.table.nodes)
            psi_b = np.empty_like(v)
            for start in range(0, n, 24):
                blk = np.arange(start, min(start + 24, n))
                psi = self._cocycle(v, b, blk)
                norms = k.log_norm(psi)
                peak = float(np.max(norms))
                max_lognorm = max(max_lognorm, peak)
                if peak > 1.0:
                    raise DefectTooLarge(
                        f"cocycle distance {peak:.3f} exceeds the chart radius; shrink the base"
                    )
                logs = k.log(psi)  # (I, H, P, *elem)
                integral = np.tensordot(w, logs, axes=(0, 1))
                psi_b[blk] = k.exp(integral)
            new_values.append(k.mul(psi_b, v))
            psis.append(psi_b)
        return (
            TabulatedMap(self.groupoid, self.table, self.bundles, new_values),
            psis,
            max_lognorm,
        )

    def distance_to(self, other: "TabulatedMap") -> float:
        k = self.kernel
        worst = 0.0
        for v1, v2 in zip(self.values, other.values):
            worst = max(worst, float(np.max(k.log_norm(k.mul(k.inv(v1), v2)))))
        return worst

    def identity_restriction(self) -> float:
        """Sup over nodes of dist(phi(h, x0), h) on the fixed-point bundle."""
        k = self.kernel
        for b, v in zip(self.bundles, self.values):
            if b.is_fixed_point:
                return float(np.max(k.log_norm(k.mul(k.inv(self.table.nodes), v[:, 0]))))
        return math.nan


def _elem_ndim(values: np.ndarray) -> int:
    return values.ndim - 2


def _identity_stack(desc, prefix_shape):
    ident = np.asarray(lg.identity(desc))
    return np.broadcast_to(ident, tuple(prefix_shape) + ident.shape).copy()


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class DefectReport:
    sampled_sup: float
    argmax_pair: tuple | None
    sample_count: int
    rule_tag: str


@dataclass
class ConvergenceReport:
    defect_sequence: list
    contraction_ratios: list
    c0_estimate: float | None
    iterations_used: int
    status: str  # converged | stalled | defect-too-large
    telescoping_max: float
    distance_to_start: float
    stability_bound: float  # K * Delta_1
    held_out_defect: float | None
    form_agreement_max: float | None
    identity_restriction: float
    rule_tag: str

    def to_json(self) -> dict:
        return {
            "defect_sequence": list(self.defect_sequence),
            "contraction_ratios": list(self.contraction_ratios),
            "c0_estimate": self.c0_estimate,
            "iterations_used": self.iterations_used,
            "status": self.status,
            "telescoping_max": self.telescoping_max,
            "distance_to_start": self.distance_to_start,
            "stability_bound": self.stability_bound,
            "held_out_defect": self.held_out_defect,
            "form_agreement_max": self.form_agreement_max,
            "identity_restriction": self.identity_restriction,
            "rule_tag": self.rule_tag,
        }


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def defect(phi: GroupoidMap, sampler: ComposablePairSampler) -> DefectReport:
    """Sampled sup of d(phi(pq) phi(q)^-1 phi(p)^-1, 1) over composable pairs."""
    groupoid = phi.groupoid
    desc = groupoid.group
    worst, argmax, count = 0.0, None, 0
    for p, q in sampler.pairs():
        pq_val = phi(lg.multiply(desc, p.g, q.g), q.x)
        coc = lg.multiply(desc, pq_val,
                          lg.multiply(desc, lg.inverse(desc, phi.at(q)),
                                      lg.inverse(desc, phi.at(p))))
        d = lg.dist(desc, lg.identity(desc), coc)
        count += 1
        if d > worst:
            worst, argmax = d, (p, q)
    return DefectReport(worst, argmax, count, sampler.rule.exactness_class)


def tabulate(phi: GroupoidMap, rule: HaarQuadrature, n_orbits: int = 4,
             orbit_seed: int | None = None) -> TabulatedMap:
    table = SubgroupTable.build(rule)
    bundles = default_bundles(phi.groupoid, table, n_orbits, seed=orbit_seed)
    return TabulatedMap.from_map(phi, table, bundles)


def average_step(phi: GroupoidMap, groupoid: ActionGroupoid, rule: HaarQuadrature,
                 n_orbits: int = 4) -> TabulatedMap:
    """One averaging step of an analytic map, in tabulated form."""
    tab = tabulate(phi, rule, n_orbits)
    stepped, _, _ = tab.average_step()
    return stepped


def _form_agreement(tab: TabulatedMap) -> float:
    """Max distance between the three written forms of the averaged map
    (left, change-of-variable, Ad-commuted) over the first orbit bundle."""
    k = tab.kernel
    w = tab.table.rule.weights
    mult, inv = tab.table.mult, tab.table.inv
    n = len(tab.table.nodes)
    worst = 0.0
    for b, v in zip(tab.bundles, tab.values):
        if b.is_fixed_point:
            continue
        i_all = np.arange(n)
        jh = b.act[inv, :]  # (H, P) sources of the fiber arrows over x_j
        p_val = v[i_all[:, None, None], np.arange(b.size)[None, None, :]]  # (I, 1, P)

        psi = tab._cocycle(v, b, i_all)
        left = k.mul(k.exp(np.tensordot(w, k.log(psi), axes=(0, 1))),
                     v[i_all[:, None], np.arange(b.size)[None, :]])

        # Change of variable r = p.q: integrate over the fiber of t(p),
        # cocycle phi(r) phi(p^-1 r)^-1 phi(p)^-1.
        tp = b.act[i_all, :]  # (I, P) target point of p
        jr = np.moveaxis(b.act[inv][:, tp], 0, 1)  # (I, H, P) source of r
        r_val = v[i_all[None, :, None], jr]
        pinv_r = v[mult[inv[i_all]][:, :, None], jr]
        coc2 = k.mul(k.mul(r_val, k.inv(pinv_r)),
                     k.inv(np.broadcast_to(p_val, r_val.shape)))
        mid = k.mul(k.exp(np.tensordot(w, k.log(coc2), axes=(0, 1))),
                    v[i_all[:, None], np.arange(b.size)[None, :]])

        # Ad-commuted form phi(p) exp(int log(phi(p)^-1 phi(pq) phi(q)^-1)).
        pq = v[mult[i_all][:, :, None], jh[None, :, :]]
        q = v[i_all[None, :, None], jh[None, :, :]]
        coc3 = k.mul(k.inv(np.broadcast_to(p_val, pq.shape)), k.mul(pq, k.inv(q)))
        right = k.mul(v[i_all[:, None], np.arange(b.size)[None, :]],
                      k.exp(np.tensordot(w, k.log(coc3), axes=(0, 1))))

        worst = max(worst, float(np.max(k.log_norm(k.mul(k.inv(left), mid)))))
        worst = max(worst, float(np.max(k.log_norm(k.mul(k.inv(left), right)))))
        break
    return worst


DEFAULT_C0_GATE = 0.25
STABILITY_K = 5.0


def iterate(phi: GroupoidMap, rule: HaarQuadrature, tol: float = 1e-9,
            max_iter: int = 12, n_orbits: int = 4, c0_gate: float = DEFAULT_C0_GATE,
            held_out_orbits: int = 2, orbit_seed: int | None = None,
            check_forms: bool = True):
    """Run phi_{n+1} = phi_n-hat until the defect drops below tol.

    Returns (limit TabulatedMap, ConvergenceReport).  Raises DefectTooLarge
    when the start defect exceeds c0_gate / 4 or a step leaves the chart.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    table = SubgroupTable.build(rule)
    groupoid = phi.groupoid
    bundles = default_bundles(groupoid, table, n_orbits, seed=orbit_seed)
    tab = TabulatedMap.from_map(phi, table, bundles)
    start = tab

    defects = [tab.defect().sampled_sup]
    if defects[0] > c0_gate / 4.0:
        raise DefectTooLarge(
            f"start defect {defects[0]:.4f} exceeds C0_cfg/4 = {c0_gate / 4.0:.4f}"
        )

    forms = _form_agreement(tab) if check_forms and n_orbits > 0 else None
    kernel = tab.kernel
    prods = [_identity_stack(groupoid.group, v.shape[:-_elem_ndim(v)]) for v in tab.values]
    telescoping_max = 0.0
    increases = 0
    status = "converged" if defects[0] <= tol else "stalled"
    steps = 0

    while defects[-1] > tol and steps < max_iter:
        new_tab, psis, _ = tab.average_step()
        steps += 1
        prods = [kernel.mul(psi, prod) for psi, prod in zip(psis, prods)]
        # Telescoping identity Psi_n ... Psi_1 = phi_{n+1} phi_1^-1.
        for prod, v1, v2 in zip(prods, start.values, new_tab.values):
            dev = kernel.log_norm(kernel.mul(kernel.inv(v2), kernel.mul(prod, v1)))
            telescoping_max = max(telescoping_max, float(np.max(dev)))
        defects.append(new_tab.defect().sampled_sup)
        tab = new_tab
        if defects[-1] <= tol:
            status = "converged"
            break
        if defects[-1] > defects[-2]:
            increases += 1
            if increases >= 2:
                status = "stalled"
                break
        else:
            increases = 0
    else:
        status = "converged" if defects[-1] <= tol else "stalled"

    ratios = [
        defects[i + 1] / defects[i] ** 2 if defects[i] > 0 else math.nan
        for i in range(len(defects) - 1)
    ]
    c0_values = [
        defects[i] ** 2 / defects[i + 1]
        for i in range(len(defects) - 1)
        if defects[i + 1] > 1e-14 and defects[i] > 0
    ]
    c0_estimate = min(c0_values) if c0_values else None

    held_out = None
    if held_out_orbits > 0:
        held_seed = (groupoid.base_seed if orbit_seed is None else orbit_seed) + 7919
        ho_bundles = [
            build_bundle(groupoid, table, y)
            for y in groupoid.base_points(held_out_orbits, seed=held_seed)
        ]
        ho_tab = TabulatedMap.from_map(phi, table, ho_bundles)
        for _ in range(steps):
            ho_tab, _, _ = ho_tab.average_step()
        held_out = ho_tab.defect().sampled_sup

    report = ConvergenceReport(
        defect_sequence=defects,
        contraction_ratios=ratios,
        c0_estimate=c0_estimate,
        iterations_used=steps,
        status=status,
        telescoping_max=telescoping_max,
        distance_to_start=start.distance_to(tab),
        stability_bound=STABILITY_K * defects[0],
        held_out_defect=held_out,
        form_agreement_max=forms,
        identity_restriction=tab.identity_restriction(),
        rule_tag=rule.exactness_class,
    )
    return tab, report


# ---------------------------------------------------------------------------
# Action extraction
# ---------------------------------------------------------------------------

@dataclass
class ExtractedAction:
    """Linearized action g.x = t(theta(g, x)) recovered from the limit map."""

    groupoid: ActionGroupoid
    table: SubgroupTable
    bundles: list
    point_index: list  # per bundle: (n_nodes, P) index of g.x_j in the orbit
    axiom_deviation: float
    orbit_sphere_deviation: float
    orbit_hausdorff: float

    def apply_index(self, bundle: int, node: int, point: int) -> int:
        return int(self.point_index[bundle][node, point])

    def apply(self, bundle: int, node: int, point: int) -> np.ndarray:
        return self.bundles[bundle].points[self.apply_index(bundle, node, point)]


def extract_action(tab: TabulatedMap, tol: float) -> ExtractedAction:
    """Invert (phi_inf, s) on the tabulation grid and read off the action.

    For each base point the map h -> phi_inf(h, x) must be a bijection onto
    the node set within the node separation; otherwise NotInvertible.
    """
    k = tab.kernel
    nodes = tab.table.nodes
    n = len(nodes)
    point_index = []
    axiom_dev = 0.0
    sphere_dev = 0.0
    hausdorff = 0.0
    for b, v in zip(tab.bundles, tab.values):
        assign = np.empty((n, b.size), dtype=int)
        for j in range(b.size):
            # dists[k_idx, g_idx] = d(phi(h_k, x_j), g_i); theta(g_i, x_j) is
            # the arrow (h_k*, x_j) with the closest phi value.
            col = v[:, j]
            d = k.log_norm(k.mul(k.inv(col[:, None]), nodes[None, :]))
            best_k = np.argmin(d, axis=0)
            if len(np.unique(best_k)) != n:
                raise NotInvertible(
                    "phi does not separate the nodes over a base point; "
                    "the base ball is too large for extraction"
                )
            assign[:, j] = b.act[best_k, j]
        point_index.append(assign)

        # Action axioms on the extracted table: identity and composition.
        id_row = assign[tab.table.identity_index]
        axiom_dev = max(axiom_dev, float(np.max(
            np.linalg.norm(b.points[id_row] - b.points, axis=-1))))
        rng = np.random.default_rng(12345)
        for _ in range(min(200, n * n)):
            g1, g2 = int(rng.integers(n)), int(rng.integers(n))
            j = int(rng.integers(b.size))
            lhs = assign[g1, assign[g2, j]]
            rhs = assign[tab.table.mult[g1, g2], j]
            axiom_dev = max(axiom_dev, float(
                np.linalg.norm(b.points[lhs] - b.points[rhs])))

        # Orbit geometry versus the linear model.
        if not b.is_fixed_point:
            radii = np.linalg.norm(b.points, axis=-1)
            r0 = radii[0]
            for j in range(b.size):
                extracted = b.points[assign[:, j]]
                sphere_dev = max(sphere_dev, float(
                    np.max(np.abs(np.linalg.norm(extracted, axis=-1) - r0))))
            linear = b.points
            d = np.linalg.norm(linear[:, None, :] - b.points[None, :, :], axis=-1)
            hausdorff = max(hausdorff, float(max(d.min(axis=0).max(), d.min(axis=1).max())))

    if axiom_dev > 3 * max(tol, 1e-12) + NODE_MATCH_TOLERANCE:
        raise NotInvertible(f"extracted table violates the action axioms by {axiom_dev:.3e}")
    return ExtractedAction(tab.groupoid, tab.table, tab.bundles, point_index,
                           axiom_dev, sphere_dev, hausdorff)


# ---------------------------------------------------------------------------
# Group-to-group averaging (base reduced to a point)
# ---------------------------------------------------------------------------

def gkr_average(rho_values: np.ndarray, rule: HaarQuadrature, tol: float = 1e-9,
                max_iter: int = 12, c0_gate: float = DEFAULT_C0_GATE):
    """Average a near-homomorphism given as a node table H -> G.

    The groupoid is H over a point; the same iteration applies with a single
    one-point orbit bundle.  Returns (limit node table, ConvergenceReport).
    """
    table = SubgroupTable.build(rule)
    groupoid = ActionGroupoid(rule.group, _PointAction(), base_radius=0.0)
    bundle = Bundle(np.zeros((1, 1)), np.zeros((len(table.nodes), 1), dtype=int), False)
    values = [np.asarray(rho_values)[:, None]]
    tab = TabulatedMap(groupoid, table, [bundle], values)
    start = tab

    defects = [tab.defect().sampled_sup]
    if defects[0] > c0_gate / 4.0:
        raise DefectTooLarge(
            f"start defect {defects[0]:.4f} exceeds C0_cfg/4 = {c0_gate / 4.0:.4f}"
        )
    kernel = tab.kernel
    prods = [_identity_stack(rule.group, v.shape[:-_elem_ndim(v)]) for v in tab.values]
    telescoping_max = 0.0
    steps = 0
    increases = 0
    status = "converged" if defects[0] <= tol else "stalled"
    while defects[-1] > tol and steps < max_iter:
        new_tab, psis, _ = tab.average_step()
        steps += 1
        prods = [kernel.mul(psi, prod) for psi, prod in zip(psis, prods)]
        for prod, v1, v2 in zip(prods, start.values, new_tab.values):
            dev = kernel.log_norm(kernel.mul(kernel.inv(v2), kernel.mul(prod, v1)))
            telescoping_max = max(telescoping_max, float(np.max(dev)))
        defects.append(new_tab.defect().sampled_sup)
        tab = new_tab
        if defects[-1] <= tol:
            status = "converged"
            break
        if defects[-1] > defects[-2]:
            increases += 1
            if increases >= 2:
                status = "stalled"
                break
        else:
            increases = 0
    else:
        status = "converged" if defects[-1] <= tol else "stalled"

    ratios = [defects[i + 1] / defects[i] ** 2 if defects[i] > 0 else math.nan
              for i in range(len(defects) - 1)]
    c0_values = [defects[i] ** 2 / defects[i + 1]
                 for i in range(len(defects) - 1)
                 if defects[i + 1] > 1e-14 and defects[i] > 0]
    report = ConvergenceReport(
        defect_sequence=defects,
        contraction_ratios=ratios,
        c0_estimate=min(c0_values) if c0_values else None,
        iterations_used=steps,
        status=status,
        telescoping_max=telescoping_max,
        distance_to_start=start.distance_to(tab),
        stability_bound=STABILITY_K * defects[0],
        held_out_defect=None,
        form_agreement_max=None,
        identity_restriction=math.nan,
        rule_tag=rule.exactness_class,
    )
    return tab.values[0][:, 0], report


class _PointAction:
    """Trivial action used by the base-is-a-point reduction."""

    family = "point"
    twist = 0.0
    dim = 1

    def apply(self, g, x):
        return np.asarray(x, dtype=float)

    def to_json(self):
        return {"family": "point", "twist": 0.0}


def winding_number(rule: HaarQuadrature, values: np.ndarray) -> int:
    """Winding count of a torus(1) node table around the circle."""
    if rule.group.kind != "torus" or rule.group.n != 1:
        raise ValueError("winding numbers are defined for torus(1) tables")
    angles = np.asarray(values).reshape(len(rule))
    order = np.argsort(np.asarray(rule.nodes).reshape(-1))
    sorted_vals = angles[order]
    diffs = np.diff(np.concatenate([sorted_vals, sorted_vals[:1]]))
    wrapped = diffs - lg.TWO_PI * np.round(diffs / lg.TWO_PI)
    return int(round(float(np.sum(wrapped)) / lg.TWO_PI))


# ---------------------------------------------------------------------------
# Contraction experiments
# ---------------------------------------------------------------------------

def contraction_sweep(make_map, rule: HaarQuadrature, amplitudes, n_orbits: int = 3):
    """Measure (Delta(phi), Delta(phi-hat)) across perturbation amplitudes.

    ``make_map(amplitude)`` builds the start map.  Returns (deltas, stepped,
    slope, c0_estimate) with the slope fit on log-log axes.
    """
    deltas, stepped = [], []
    table = SubgroupTable.build(rule)
    for amp in amplitudes:
        phi = make_map(amp)
        bundles = default_bundles(phi.groupoid, table, n_orbits)
        tab = TabulatedMap.from_map(phi, table, bundles)
        deltas.append(tab.defect().sampled_sup)
        new_tab, _, _ = tab.average_step()
        stepped.append(new_tab.defect().sampled_sup)
    logs = np.log(np.asarray(deltas))
    logt = np.log(np.asarray(stepped))
    slope, _ = np.polyfit(logs, logt, 1)
    c0 = min(d * d / s for d, s in zip(deltas, stepped) if s > 1e-14)
    return deltas, stepped, float(slope), float(c0)
