"""Finite numerical presentations of proper action groupoids G x B over a
sampled ball, with the degenerate base-is-a-point case used for averaging
near-homomorphisms between compact groups.

An arrow is a pair (g, x) with source x and target a(g, x); the base carries
a distinguished fixed point (the center of the ball).  Maps from the groupoid
to the group are a baseline (the projection, or a winding map on tori) times
the exponential of a band-limited algebra-valued perturbation field that
vanishes on the fiber over the fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import liegroup as lg
from .haar import HaarQuadrature
from .liegroup import CompactGroup, TWO_PI

COMPOSE_TOLERANCE = 1e-10


class NotComposable(ValueError):
    """Source/target mismatch beyond tolerance."""


class ActionNotInvertible(ValueError):
    """A fiber arrow would leave the sampled base domain."""


# ---------------------------------------------------------------------------
# Actions
# ---------------------------------------------------------------------------

def _rotation2(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class ActionSpec:
    """Named family of smooth actions on a ball in R^d.

    Families:
      rotation2d       torus(1) rotating R^2
      bitorus4d        torus(2) rotating R^4 = C^2 blockwise
      su2_adjoint      SU(2) rotating R^3 through the double cover
      so3_standard     SO(3) on R^3
    ``twist`` > 0 conjugates a 3-d rotation family pointwise by a rotation
    about the z-axis by twist * |x|^2: a nonlinear action with the same
    (spherical) orbits as the linear model.
    """

    family: str
    twist: float = 0.0

    @property
    def dim(self) -> int:
        return {"rotation2d": 2, "bitorus4d": 4, "su2_adjoint": 3, "so3_standard": 3}[self.family]

    def matrix(self, g) -> np.ndarray:
        if self.family == "rotation2d":
            return _rotation2(float(np.asarray(g)[0]))
        if self.family == "bitorus4d":
            t = np.asarray(g)
            out = np.zeros((4, 4))
            out[:2, :2] = _rotation2(float(t[0]))
            out[2:, 2:] = _rotation2(float(t[1]))
            return out
        if self.family == "su2_adjoint":
            return lg.so3_from_quaternion(lg.quaternion_from_su2(np.asarray(g)))
        if self.family == "so3_standard":
            return np.asarray(g)
        raise ValueError(f"unknown action family {self.family!r}")

    def apply(self, g, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        rep = self.matrix(g)
        if self.twist == 0.0:
            return rep @ x
        if self.dim != 3:
            raise ValueError("twist is only defined for 3-d rotation families")
        c = _rotation_z(self.twist * float(x @ x))
        # |x| is rotation-invariant, so conjugating pointwise by c(|x|)
        # preserves the action law exactly.
        return c @ rep @ c.T @ x

    def to_json(self) -> dict:
        return {"family": self.family, "twist": self.twist}

    @staticmethod
    def from_json(obj: dict) -> "ActionSpec":
        return ActionSpec(str(obj["family"]), float(obj.get("twist", 0.0)))


@dataclass(frozen=True)
class ActionGroupoid:
    """G x B presented by a group descriptor, an action family, and a seeded
    base sampler on the radius-r ball around the fixed point 0."""

    group: CompactGroup
    action: ActionSpec
    base_radius: float = 1.0
    base_seed: int = 0

    @property
    def base_dim(self) -> int:
        return self.action.dim

    @property
    def fixed_point(self) -> np.ndarray:
        return np.zeros(self.base_dim)

    def act(self, g, x: np.ndarray) -> np.ndarray:
        return self.action.apply(g, x)

    def base_points(self, count: int, seed: int | None = None) -> np.ndarray:
        """Deterministic points in the 0.9*r ball (kept interior so orbits
        stay inside the 1.1*r properness margin)."""
        rng = np.random.default_rng(self.base_seed if seed is None else seed)
        d = self.base_dim
        raw = rng.standard_normal((count, d))
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        radii = 0.9 * self.base_radius * rng.uniform(0.2, 1.0, size=count) ** (1.0 / d)
        return raw * radii[:, None]

    def to_json(self) -> dict:
        return {
            "group": self.group.to_json(),
            "action": self.action.to_json(),
            "base_radius": self.base_radius,
            "base_seed": self.base_seed,
        }

    @staticmethod
    def from_json(obj: dict) -> "ActionGroupoid":
        return ActionGroupoid(
            group=lg.descriptor_from_json(obj["group"]),
            action=ActionSpec.from_json(obj["action"]),
            base_radius=float(obj.get("base_radius", 1.0)),
            base_seed=int(obj.get("base_seed", 0)),
        )


@dataclass(frozen=True)
class Arrow:
    """Arrow (g, x) of an action groupoid: source x, target a(g, x)."""

    g: object
    x: np.ndarray

    def source(self) -> np.ndarray:
        return self.x

    def target(self, groupoid: ActionGroupoid) -> np.ndarray:
        return groupoid.act(self.g, self.x)


def identity_arrow(groupoid: ActionGroupoid, x: np.ndarray) -> Arrow:
    return Arrow(lg.identity(groupoid.group), np.asarray(x, dtype=float))


def compose(groupoid: ActionGroupoid, p: Arrow, q: Arrow) -> Arrow:
    """Product p.q = (g_p g_q, x_q); requires s(p) = t(q)."""
    mismatch = float(np.linalg.norm(p.source() - q.target(groupoid)))
    if mismatch > COMPOSE_TOLERANCE:
        raise NotComposable(f"s(p) differs from t(q) by {mismatch:.3e}")
    return Arrow(lg.multiply(groupoid.group, p.g, q.g), q.x)


def inverse(groupoid: ActionGroupoid, p: Arrow) -> Arrow:
    return Arrow(lg.inverse(groupoid.group, p.g), p.target(groupoid))


def t_fiber_rule(groupoid: ActionGroupoid, x: np.ndarray, rule: HaarQuadrature):
    """Weighted arrows filling the target fiber over x: q = (h, a(h^-1, x)).

    Targets equal x exactly by construction.  Raises ActionNotInvertible if
    a source leaves the 1.1*r properness margin (cannot happen for the
    built-in orthogonal families, but the guard keeps the contract total).
    """
    x = np.asarray(x, dtype=float)
    limit = 1.1 * groupoid.base_radius
    arrows = []
    for i in range(len(rule)):
        h = rule.node(i)
        src = groupoid.act(lg.inverse(groupoid.group, h), x)
        if np.linalg.norm(src) > limit:
            raise ActionNotInvertible("fiber source escapes the sampled ball")
        arrows.append(Arrow(h, src))
    return arrows, rule.weights


# ---------------------------------------------------------------------------
# Maps from the groupoid to the group
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerturbationField:
    """Band-limited algebra-valued field A(g, x) with A(g, 0) = 0.

    Each term couples one algebra direction E_t to a group harmonic and a
    linear form in x:

        A(g, x) = sum_t  c_t * h_{m_t}(g) * <b_t, x> * E_t

    Harmonics are cos/sin of integer frequency vectors on tori and real or
    imaginary parts of degree-<=band entry monomials on matrix groups, so the
    field is trigonometric/polynomial with the stored coefficients and the
    stated band limit.
    """

    group: CompactGroup
    dim: int
    amplitude: float
    band: int
    seed: int
    coefficients: tuple = field(default=(), compare=False)

    @staticmethod
    def build(group: CompactGroup, dim: int, amplitude: float, band: int = 2,
              seed: int = 0, n_terms: int = 6) -> "PerturbationField":
        rng = np.random.default_rng(seed)
        basis = _algebra_basis(group)
        terms = []
        for _ in range(n_terms):
            t = {
                "basis_index": int(rng.integers(len(basis))),
                "coeff": float(rng.uniform(0.5, 1.0) * rng.choice([-1.0, 1.0])),
                "x_form": rng.standard_normal(dim) / math.sqrt(dim),
            }
            if group.kind == "torus":
                freq = rng.integers(-band, band + 1, size=group.n)
                t["freq"] = freq
                t["phase"] = float(rng.uniform(0.0, TWO_PI))
            else:
                t["entry"] = (int(rng.integers(group.n)), int(rng.integers(group.n)))
                t["power"] = int(rng.integers(1, band + 1))
                t["part"] = "re" if rng.random() < 0.5 else "im"
            terms.append(t)
        raw = PerturbationField(group, dim, amplitude, band, seed, tuple(terms))
        # Normalize so the field's sup over a probe set sits at `amplitude`
        # in the scaled algebra norm.
        probe = raw._probe_sup()
        if probe <= 0:
            raise ValueError("degenerate perturbation field")
        scaled = []
        for t in terms:
            t = dict(t)
            t["coeff"] *= amplitude / probe
            scaled.append(t)
        return PerturbationField(group, dim, amplitude, band, seed, tuple(scaled))

    def _probe_sup(self) -> float:
        rng = np.random.default_rng(self.seed + 101)
        worst = 0.0
        for _ in range(64):
            g = lg.random_element(self.group, rng)
            x = rng.standard_normal(self.dim)
            x *= 0.9 / np.linalg.norm(x)
            worst = max(worst, lg.algebra_norm(self.group, self.value(g, x)))
        return worst

    def _harmonic(self, term: dict, g) -> float:
        if self.group.kind == "torus":
            return math.cos(float(np.dot(term["freq"], np.asarray(g))) + term["phase"])
        gm = np.linalg.matrix_power(np.asarray(g), term["power"])
        entry = gm[term["entry"]]
        return float(entry.real if term["part"] == "re" else entry.imag)

    def value(self, g, x: np.ndarray) -> np.ndarray:
        basis = _algebra_basis(self.group)
        out = np.zeros_like(basis[0])
        x = np.asarray(x, dtype=float)
        for term in self.coefficients:
            out = out + (
                term["coeff"] * self._harmonic(term, g) * float(np.dot(term["x_form"], x))
            ) * basis[term["basis_index"]]
        return out

    def to_json(self) -> dict:
        def enc(t):
            out = {k: v for k, v in t.items()}
            out["x_form"] = np.asarray(t["x_form"]).tolist()
            if "freq" in out:
                out["freq"] = np.asarray(t["freq"]).tolist()
            return out

        return {
            "group": self.group.to_json(),
            "dim": self.dim,
            "amplitude": self.amplitude,
            "band": self.band,
            "seed": self.seed,
            "coefficients": [enc(t) for t in self.coefficients],
        }

    @staticmethod
    def from_json(obj: dict) -> "PerturbationField":
        terms = []
        for t in obj["coefficients"]:
            t = dict(t)
            t["x_form"] = np.asarray(t["x_form"], dtype=float)
            if "freq" in t:
                t["freq"] = np.asarray(t["freq"], dtype=int)
            if "entry" in t:
                t["entry"] = tuple(t["entry"])
            terms.append(t)
        return PerturbationField(
            lg.descriptor_from_json(obj["group"]), int(obj["dim"]),
            float(obj["amplitude"]), int(obj["band"]), int(obj["seed"]), tuple(terms),
        )


def _algebra_basis(group: CompactGroup):
    if group.kind == "torus":
        return [e for e in np.eye(group.n)]
    n = group.n
    basis = []
    if group.kind == "su":
        for a in range(n):
            for b in range(a + 1, n):
                m = np.zeros((n, n), dtype=complex)
                m[a, b], m[b, a] = 1.0, -1.0
                basis.append(m / math.sqrt(2.0))
                m = np.zeros((n, n), dtype=complex)
                m[a, b] = m[b, a] = 1j
                basis.append(m / math.sqrt(2.0))
        for a in range(n - 1):
            m = np.zeros((n, n), dtype=complex)
            m[a, a], m[a + 1, a + 1] = 1j, -1j
            basis.append(m / math.sqrt(2.0))
        return basis
    for a in range(n):
        for b in range(a + 1, n):
            m = np.zeros((n, n))
            m[a, b], m[b, a] = 1.0, -1.0
            basis.append(m / math.sqrt(2.0))
    return basis


@dataclass(frozen=True)
class GroupoidMap:
    """phi(g, x) = baseline(g) . exp(A(g, x)).

    kind "exact-homomorphism" carries no field; "perturbed" carries a
    PerturbationField whose vanishing at x = 0 makes the restriction to the
    fiber over the fixed point exactly the identity.  ``winding`` != 1 turns
    the baseline into the power map on tori (used by the group-to-group
    averaging experiments, where no fixed-point restriction applies).
    """

    groupoid: ActionGroupoid
    field: PerturbationField | None = None
    winding: int = 1

    @property
    def kind(self) -> str:
        return "exact-homomorphism" if self.field is None else "perturbed"

    def baseline(self, g):
        if self.winding == 1:
            return g
        if self.groupoid.group.kind != "torus":
            raise ValueError("winding baselines are only defined on tori")
        return np.mod(self.winding * np.asarray(g), TWO_PI)

    def __call__(self, g, x: np.ndarray):
        base = self.baseline(g)
        if self.field is None:
            return base
        return lg.multiply(
            self.groupoid.group, base, lg.group_exp(self.groupoid.group, self.field.value(g, x))
        )

    def at(self, arrow: Arrow):
        return self(arrow.g, arrow.x)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "winding": self.winding,
            "perturbation": None if self.field is None else self.field.to_json(),
        }


def identity_restriction_check(phi: GroupoidMap, rule: HaarQuadrature) -> float:
    """Sup over rule nodes h of dist(phi(h, x0), h): zero for any map built
    per the type contract, positive once coefficients are corrupted."""
    groupoid = phi.groupoid
    x0 = groupoid.fixed_point
    worst = 0.0
    for i in range(len(rule)):
        h = rule.node(i)
        worst = max(worst, lg.dist(groupoid.group, phi(h, x0), h))
    return worst


# ---------------------------------------------------------------------------
# Composable pair sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComposablePairSampler:
    """Deterministic stream of composable pairs (p, q), built q-first so that
    s(p) = t(q) holds exactly.  ``count`` selects a prefix of the stream, so
    samplers with the same seed and growing counts are nested.
    """

    groupoid: ActionGroupoid
    rule: HaarQuadrature
    seed: int = 0
    count: int = 256
    strategy: str = "grid"  # "grid" | "low-discrepancy"
    n_base: int = 4

    def pairs(self):
        base = self.groupoid.base_points(self.n_base, seed=self.seed)
        n = len(self.rule)
        if self.strategy == "grid":
            combos = (
                (i, j, l) for l in range(self.n_base) for i in range(n) for j in range(n)
            )
            emitted = 0
            for i, j, l in combos:
                if emitted >= self.count:
                    return
                yield self._pair(i, j, base[l])
                emitted += 1
        elif self.strategy == "low-discrepancy":
            rng = np.random.default_rng(self.seed)
            for _ in range(self.count):
                i, j = int(rng.integers(n)), int(rng.integers(n))
                l = int(rng.integers(self.n_base))
                yield self._pair(i, j, base[l])
        else:
            raise ValueError(f"unknown strategy {self.strategy!r}")

    def _pair(self, i: int, j: int, y: np.ndarray):
        q = Arrow(self.rule.node(j), y)
        p = Arrow(self.rule.node(i), q.target(self.groupoid))
        return p, q
