"""Momentum-map experiments: action integrals by level-curve tracing,
cylinder periods of 2-forms, sampled momentum images of toric systems with
convexity certification, and Weyl-chamber projection of coadjoint elements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import ConvexHull, cKDTree

from .liegroup import CompactGroup


class LevelNotClosed(RuntimeError):
    """Level-curve tracing failed to close within the arc-length budget."""


class SurfaceMeshFailure(RuntimeError):
    """Cylinder surface quadrature hit a degenerate or non-finite patch."""


class WrongShape(ValueError):
    """Coadjoint element does not live in the modeled dual."""


# ---------------------------------------------------------------------------
# Action integrals (A = contour integral of p dq over a closed level curve)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ActionIntegralProblem:
    """Hamiltonian on R^2 whose level sets in energy_range are closed curves
    around `center`.  Points are (q, p); the primitive 1-form is p dq."""

    hamiltonian: object  # callable (q, p) -> float
    center: tuple = (0.0, 0.0)
    energy_range: tuple = (0.0, math.inf)
    gradient_floor: float = 1e-8

    def h(self, z: np.ndarray) -> float:
        return float(self.hamiltonian(z[0], z[1]))

    def grad(self, z: np.ndarray, h_step: float = 1e-7) -> np.ndarray:
        q, p = z
        return np.array(
            [
                (self.hamiltonian(q + h_step, p) - self.hamiltonian(q - h_step, p)) / (2 * h_step),
                (self.hamiltonian(q, p + h_step) - self.hamiltonian(q, p - h_step)) / (2 * h_step),
            ]
        )


@dataclass
class ActionIntegralResult:
    value: float
    error_estimate: float
    arc_length: float
    n_points: int


def _find_level_start(prob: ActionIntegralProblem, energy: float) -> np.ndarray:
    center = np.asarray(prob.center, dtype=float)
    f = lambda t: prob.h(center + np.array([t, 0.0])) - energy
    hi = 1e-6
    for _ in range(80):
        if f(hi) > 0:
            break
        hi *= 2.0
    else:
        raise LevelNotClosed("level set not found along the search ray")
    t = brentq(f, 0.0 if f(0.0) < 0 else hi / 2**40, hi, xtol=1e-15, rtol=1e-15)
    return center + np.array([t, 0.0])


def _trace_level(prob: ActionIntegralProblem, energy: float, max_turn: float):
    """Predictor-corrector walk along h = E in the Hamiltonian direction.

    Step length adapts to curvature (bounded turning angle per step).
    Returns the closed polygon of trace points.
    """
    z0 = _find_level_start(prob, energy)
    pts = [z0]
    z = z0.copy()
    g = prob.grad(z)
    gnorm = np.linalg.norm(g)
    if gnorm < prob.gradient_floor:
        raise LevelNotClosed("level curve is not regular at the start point")
    tau = np.array([g[1], -g[0]]) / gnorm
    scale = max(np.linalg.norm(z0 - np.asarray(prob.center)), 1e-12)
    ds = scale * max_turn
    budget = 1000.0 * scale
    arc = 0.0
    while arc < budget:
        z_pred = z + ds * tau
        for _ in range(4):
            g = prob.grad(z_pred)
            gnorm2 = float(g @ g)
            if gnorm2 < prob.gradient_floor**2:
                raise LevelNotClosed("gradient vanished during tracing")
            z_pred = z_pred - g * ((prob.h(z_pred) - energy) / gnorm2)
        g = prob.grad(z_pred)
        tau_new = np.array([g[1], -g[0]]) / np.linalg.norm(g)
        turn = float(np.arccos(np.clip(tau @ tau_new, -1.0, 1.0)))
        if turn > 2.0 * max_turn and ds > 1e-9 * scale:
            ds *= 0.5
            continue
        pts.append(z_pred)
        arc += float(np.linalg.norm(z_pred - z))
        z, tau = z_pred, tau_new
        if turn < 0.5 * max_turn:
            ds = min(ds * 1.3, scale * max_turn)
        if arc > 3 * ds and np.linalg.norm(z - z0) < ds:
            return np.array(pts)
    raise LevelNotClosed("arc-length budget exhausted before the curve closed")


def _polygon_action(pts: np.ndarray, start: np.ndarray) -> float:
    closed = np.vstack([pts, start])
    q, p = closed[:, 0], closed[:, 1]
    return float(np.sum((p[1:] + p[:-1]) * np.diff(q)) / 2.0)


def action_integral_report(prob: ActionIntegralProblem, energy: float,
                           max_turn: float = 0.01) -> ActionIntegralResult:
    lo, hi = prob.energy_range
    if not (lo <= energy <= hi):
        raise ValueError(f"energy {energy} outside the declared range")
    e0 = prob.h(np.asarray(prob.center, dtype=float))
    if energy <= e0 + 1e-15:
        return ActionIntegralResult(0.0, 0.0, 0.0, 0)
    coarse = _trace_level(prob, energy, 2.0 * max_turn)
    fine = _trace_level(prob, energy, max_turn)
    a_coarse = _polygon_action(coarse, coarse[0])
    a_fine = _polygon_action(fine, fine[0])
    # Trapezoid tracing converges at second order; Richardson halves give /3.
    value = a_fine + (a_fine - a_coarse) / 3.0
    arc = float(np.sum(np.linalg.norm(np.diff(fine, axis=0), axis=1)))
    return ActionIntegralResult(value, abs(a_fine - a_coarse) / 3.0, arc, len(fine))


def action_integral(prob: ActionIntegralProblem, energy: float) -> float:
    """Mineur-Arnold action: the loop integral of p dq along h = E, traced
    in the Hamiltonian direction (equals the enclosed area for wells)."""
    return action_integral_report(prob, energy).value


# ---------------------------------------------------------------------------
# Cylinder periods
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CycleFamily:
    """One-parameter family of loops: surface(r, s) for r in [0,1] and the
    loop parameter s in [0, 2pi]."""

    surface: object  # callable (r, s) -> point ndarray

    def point(self, r: float, s: float) -> np.ndarray:
        return np.asarray(self.surface(r, s), dtype=float)


def cylinder_period(family: CycleFamily, omega, n_r: int = 32, n_s: int = 256,
                    fd_step: float = 1e-6) -> float:
    """Integral of the 2-form over the swept cylinder.

    `omega(point, u, v)` evaluates the form on tangent vectors; tangents are
    taken by central differences of the family parametrization.
    """
    r_nodes, r_weights = np.polynomial.legendre.leggauss(n_r)
    r_nodes = 0.5 * (r_nodes + 1.0)
    r_weights = 0.5 * r_weights
    s_nodes = 2.0 * math.pi * np.arange(n_s) / n_s
    total = 0.0
    for r, wr in zip(r_nodes, r_weights):
        row = 0.0
        for s in s_nodes:
            z = family.point(r, s)
            du = (family.point(r + fd_step, s) - family.point(r - fd_step, s)) / (2 * fd_step)
            dv = (family.point(r, s + fd_step) - family.point(r, s - fd_step)) / (2 * fd_step)
            val = float(omega(z, du, dv))
            if not math.isfinite(val):
                raise SurfaceMeshFailure(f"2-form not finite at r={r}, s={s}")
            row += val
        total += wr * row * (2.0 * math.pi / n_s)
    return total


def cotangent_circle_model(a_start: float, a_end: float):
    """T*T^1 model: points (theta, I), omega = dI ^ dtheta, cycles I = const.

    Returns (family, omega, action_function) with action(a) = 2*pi*a, so
    the cylinder integral from a_start to a_end equals 2*pi*(a_end-a_start).
    """

    def surface(r, s):
        return np.array([s, a_start + r * (a_end - a_start)])

    def omega(z, u, v):
        # dI ^ dtheta on tangent vectors (dtheta, dI)
        return u[1] * v[0] - u[0] * v[1]

    def action(a):
        return 2.0 * math.pi * a

    return CycleFamily(surface), omega, action


# ---------------------------------------------------------------------------
# Toric momentum images
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ToricHamiltonianSystem:
    name: str
    momentum_dim: int
    sampler: object  # callable (rng, n) -> states
    momentum: object  # callable (states) -> (n, k) array
    known_polytope: object = None  # vertex array or None
    torus_action: object = None  # callable (angles, states) -> states


def cp2_system() -> ToricHamiltonianSystem:
    """CP^2 with the standard T^2 action; momentum (|z1|^2, |z2|^2) on unit
    representatives, image the standard simplex."""

    def sampler(rng, n):
        z = rng.standard_normal((n, 3)) + 1j * rng.standard_normal((n, 3))
        return z / np.linalg.norm(z, axis=1, keepdims=True)

    def momentum(states):
        return np.abs(states[:, 1:]) ** 2

    def torus_action(angles, states):
        phases = np.array([1.0, np.exp(1j * angles[0]), np.exp(1j * angles[1])])
        return states * phases[None, :]

    return ToricHamiltonianSystem(
        "cp2", 2, sampler, momentum,
        known_polytope=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        torus_action=torus_action,
    )


def sphere_system() -> ToricHamiltonianSystem:
    """Unit sphere with rotation about the z-axis; height momentum."""

    def sampler(rng, n):
        v = rng.standard_normal((n, 3))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def momentum(states):
        return states[:, 2:3]

    def torus_action(angles, states):
        c, s = math.cos(angles[0]), math.sin(angles[0])
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return states @ rot.T

    return ToricHamiltonianSystem(
        "sphere", 1, sampler, momentum,
        known_polytope=np.array([[-1.0], [1.0]]),
        torus_action=torus_action,
    )


def product_system(a: ToricHamiltonianSystem, b: ToricHamiltonianSystem) -> ToricHamiltonianSystem:
    def sampler(rng, n):
        return (a.sampler(rng, n), b.sampler(rng, n))

    def momentum(states):
        return np.hstack([a.momentum(states[0]), b.momentum(states[1])])

    known = None
    if a.known_polytope is not None and b.known_polytope is not None:
        ka, kb = np.asarray(a.known_polytope), np.asarray(b.known_polytope)
        known = np.array([np.concatenate([u, v]) for u in ka for v in kb])
    return ToricHamiltonianSystem(
        f"{a.name}x{b.name}", a.momentum_dim + b.momentum_dim, sampler, momentum, known
    )


def hull_vertices(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    if points.shape[1] == 1:
        return np.array([[points.min()], [points.max()]])
    hull = ConvexHull(points)
    return points[hull.vertices]


@dataclass
class CoverageCertificate:
    resolution: float
    n_grid: int
    max_gap: float
    passed: bool


def hull_coverage(points: np.ndarray, resolution: float) -> CoverageCertificate:
    """No-holes certificate: every grid point inside the sample hull lies
    within `resolution` of a sample."""
    points = np.asarray(points, dtype=float)
    k = points.shape[1]
    if k == 1:
        lo, hi = points.min(), points.max()
        grid = np.arange(lo, hi + resolution / 2, resolution)[:, None]
        inside = grid
    else:
        hull = ConvexHull(points)
        axes = [np.arange(points[:, i].min(), points[:, i].max() + resolution / 2, resolution)
                for i in range(k)]
        mesh = np.meshgrid(*axes, indexing="ij")
        grid = np.stack([m.ravel() for m in mesh], axis=-1)
        # keep grid points inside the hull (all facet inequalities hold)
        eq = hull.equations
        margin = eq[:, :-1] @ grid.T + eq[:, -1:]
        inside = grid[np.all(margin <= 1e-9, axis=0)]
    if len(inside) == 0:
        return CoverageCertificate(resolution, 0, 0.0, True)
    tree = cKDTree(points)
    dists, _ = tree.query(inside)
    max_gap = float(np.max(dists))
    return CoverageCertificate(resolution, len(inside), max_gap, max_gap <= resolution)


def polytope_hausdorff(a_vertices: np.ndarray, b_vertices: np.ndarray,
                       densify: int = 256) -> float:
    """Two-sided Hausdorff distance between convex polytope boundaries
    (interval endpoints in 1-d, densified polygon edges in 2-d)."""
    a, b = np.asarray(a_vertices, dtype=float), np.asarray(b_vertices, dtype=float)
    if a.shape[1] == 1:
        a0, a1 = a.min(), a.max()
        b0, b1 = b.min(), b.max()
        return float(max(abs(a0 - b0), abs(a1 - b1)))

    def boundary_points(v):
        hull = ConvexHull(v)
        ring = v[hull.vertices]
        t = np.linspace(0.0, 1.0, densify, endpoint=False)
        segs = []
        for i in range(len(ring)):
            p0, p1 = ring[i], ring[(i + 1) % len(ring)]
            segs.append(p0[None, :] * (1 - t[:, None]) + p1[None, :] * t[:, None])
        return np.vstack(segs)

    pa, pb = boundary_points(a), boundary_points(b)
    d_ab = cKDTree(pb).query(pa)[0].max()
    d_ba = cKDTree(pa).query(pb)[0].max()
    return float(max(d_ab, d_ba))


@dataclass
class MomentumImage:
    points: np.ndarray
    hull: np.ndarray
    certificate: CoverageCertificate
    hausdorff_to_known: float | None


def momentum_image(sys: ToricHamiltonianSystem, n: int, seed: int,
                   resolution: float = 0.02) -> MomentumImage:
    rng = np.random.default_rng(seed)
    states = sys.sampler(rng, n)
    mu = np.asarray(sys.momentum(states), dtype=float)
    hull = hull_vertices(mu)
    cert = hull_coverage(mu, resolution)
    hd = None
    if sys.known_polytope is not None:
        hd = polytope_hausdorff(hull, np.asarray(sys.known_polytope))
    return MomentumImage(mu, hull, cert, hd)


# ---------------------------------------------------------------------------
# Weyl chamber projection
# ---------------------------------------------------------------------------

def weyl_project(desc: CompactGroup, xi: np.ndarray) -> np.ndarray:
    """Chamber representative of a coadjoint element.

    Tori: the element itself.  SU(n): the non-increasing spectrum of the
    Hermitian traceless model element.  SO(n): the non-increasing positive
    rotation rates of the antisymmetric element (length floor(n/2)).
    """
    xi = np.asarray(xi)
    if desc.kind == "torus":
        if xi.shape != (desc.n,):
            raise WrongShape(f"expected a {desc.n}-vector")
        return xi.astype(float)
    if xi.shape != (desc.n, desc.n):
        raise WrongShape(f"expected a {desc.n}x{desc.n} matrix")
    if desc.kind == "su":
        if np.linalg.norm(xi - xi.conj().T) > 1e-10 or abs(np.trace(xi)) > 1e-10:
            raise WrongShape("SU(n) dual elements are Hermitian traceless")
        return np.sort(np.linalg.eigvalsh(xi).real)[::-1]
    if desc.kind == "so":
        if np.iscomplexobj(xi) and np.max(np.abs(xi.imag)) > 1e-12:
            raise WrongShape("SO(n) dual elements are real antisymmetric")
        xi = xi.real
        if np.linalg.norm(xi + xi.T) > 1e-10:
            raise WrongShape("SO(n) dual elements are antisymmetric")
        ev = np.linalg.eigvals(xi)
        rates = np.sort(np.abs(ev.imag))[::-1]
        return rates[: desc.n // 2].copy()
    raise WrongShape(f"unsupported descriptor kind {desc.kind!r}")
