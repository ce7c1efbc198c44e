"""Compact matrix group numerics: elements, algebra vectors, exp/log charts,
and the bi-invariant metric.

Groups are described by lightweight descriptors (:class:`CompactGroup`,
:class:`ProductGroup`).  Elements and algebra vectors are plain numpy arrays:
angle vectors for tori, complex matrices for SU(n), real matrices for SO(n),
and tuples of those for products.

Metric convention: the Lie algebra carries the Frobenius norm scaled by a
per-group factor ``metric_scale`` chosen so that exp is injective on the
closed unit ball of the scaled norm (injectivity radius >= 1).  Distances on
the group are lengths of principal logarithms; outside the log chart the
distance saturates at 2.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# Eigenvalues closer than this to the branch point -1 make the principal log
# ill-conditioned; group_log refuses such inputs.
CUT_TOLERANCE = 1e-6

# Distance reported for pairs outside the log chart.
SATURATION_DISTANCE = 2.0


class MalformedGroupElement(ValueError):
    """Input violates the unitarity/orthogonality/determinant invariants."""


class MalformedAlgebraVector(ValueError):
    """Input is not a valid element of the modeled Lie algebra."""


class CutLocusError(ValueError):
    """Principal logarithm undefined: an eigenvalue sits on the branch cut."""


class UnsupportedGroup(ValueError):
    """No rule or kernel is implemented for this group descriptor."""


@dataclass(frozen=True)
class CompactGroup:
    """Descriptor of a torus, SU(n), or SO(n) with its metric scale."""

    kind: str  # "torus" | "su" | "so"
    n: int
    metric_scale: float

    @property
    def rank(self) -> int:
        if self.kind == "torus":
            return self.n
        if self.kind == "su":
            return self.n - 1
        if self.kind == "so":
            return self.n // 2
        raise UnsupportedGroup(self.kind)

    @property
    def matrix_size(self) -> int:
        return self.n

    def to_json(self) -> dict:
        return {"kind": self.kind, "n": self.n, "metric_scale": self.metric_scale}

    @staticmethod
    def from_json(obj: dict) -> "CompactGroup":
        return CompactGroup(str(obj["kind"]), int(obj["n"]), float(obj["metric_scale"]))


@dataclass(frozen=True)
class ProductGroup:
    """Direct product of simple factors with configurable metric weights."""

    factors: tuple
    weights: tuple

    @property
    def rank(self) -> int:
        return sum(f.rank for f in self.factors)

    def to_json(self) -> dict:
        return {
            "kind": "product",
            "factors": [f.to_json() for f in self.factors],
            "weights": list(self.weights),
        }


def torus(n: int, metric_scale: float | None = None) -> CompactGroup:
    """T^n with angle-vector elements; default scale makes the injectivity
    radius exactly 1 (cut locus at |theta_i| = pi)."""
    return CompactGroup("torus", n, metric_scale if metric_scale is not None else 1.0 / math.pi)


def special_unitary(n: int, metric_scale: float | None = None) -> CompactGroup:
    """SU(n).  Scale sqrt((n-1)/n)/pi: the scaled unit ball maps exactly onto
    the principal-log chart (traceless spectra reach |eig| = pi only on the
    ball boundary)."""
    if n < 2:
        raise UnsupportedGroup("SU(n) needs n >= 2")
    scale = metric_scale if metric_scale is not None else math.sqrt((n - 1) / n) / math.pi
    return CompactGroup("su", n, scale)


def special_orthogonal(n: int, metric_scale: float | None = None) -> CompactGroup:
    """SO(n).  Scale 1/(sqrt(2) pi): a single rotation block reaches angle pi
    exactly on the scaled unit sphere."""
    if n < 2:
        raise UnsupportedGroup("SO(n) needs n >= 2")
    scale = metric_scale if metric_scale is not None else 1.0 / (math.sqrt(2.0) * math.pi)
    return CompactGroup("so", n, scale)


def product(*factors, weights=None) -> ProductGroup:
    if weights is None:
        weights = tuple(1.0 for _ in factors)
    return ProductGroup(tuple(factors), tuple(float(w) for w in weights))


def descriptor_from_json(obj: dict):
    if obj.get("kind") == "product":
        return product(
            *[CompactGroup.from_json(f) for f in obj["factors"]],
            weights=tuple(obj["weights"]),
        )
    return CompactGroup.from_json(obj)


def _wrap(angles: np.ndarray) -> np.ndarray:
    """Wrap to the principal interval [-pi, pi]."""
    return angles - TWO_PI * np.round(angles / TWO_PI)


# ---------------------------------------------------------------------------
# Elements and validation
# ---------------------------------------------------------------------------

def identity(desc):
    if isinstance(desc, ProductGroup):
        return tuple(identity(f) for f in desc.factors)
    if desc.kind == "torus":
        return np.zeros(desc.n)
    if desc.kind == "su":
        return np.eye(desc.n, dtype=complex)
    if desc.kind == "so":
        return np.eye(desc.n)
    raise UnsupportedGroup(desc.kind)


def multiply(desc, g, h):
    if isinstance(desc, ProductGroup):
        return tuple(multiply(f, a, b) for f, a, b in zip(desc.factors, g, h))
    if desc.kind == "torus":
        return np.mod(np.asarray(g) + np.asarray(h), TWO_PI)
    return np.asarray(g) @ np.asarray(h)


def inverse(desc, g):
    if isinstance(desc, ProductGroup):
        return tuple(inverse(f, a) for f, a in zip(desc.factors, g))
    if desc.kind == "torus":
        return np.mod(-np.asarray(g), TWO_PI)
    return np.asarray(g).conj().T


def validate_element(desc, g, tol: float = 1e-12) -> None:
    """Raise MalformedGroupElement unless g satisfies the group invariants."""
    if isinstance(desc, ProductGroup):
        for f, a in zip(desc.factors, g):
            validate_element(f, a, tol)
        return
    g = np.asarray(g)
    if desc.kind == "torus":
        if g.shape != (desc.n,) or not np.all(np.isfinite(g)):
            raise MalformedGroupElement(f"torus element must be a finite {desc.n}-vector")
        return
    if g.shape != (desc.n, desc.n):
        raise MalformedGroupElement(f"expected {desc.n}x{desc.n} matrix, got {g.shape}")
    defect = np.linalg.norm(g.conj().T @ g - np.eye(desc.n))
    if defect > tol:
        raise MalformedGroupElement(f"unitarity defect {defect:.3e} exceeds {tol:.1e}")
    det = np.linalg.det(g)
    if abs(det - 1.0) > tol:
        raise MalformedGroupElement(f"determinant {det} differs from 1")
    if desc.kind == "so" and np.iscomplexobj(g) and np.max(np.abs(g.imag)) > tol:
        raise MalformedGroupElement("SO(n) element must be real")


def validate_algebra(desc, v, tol: float = 1e-12) -> None:
    """Raise MalformedAlgebraVector unless v lies in the modeled algebra."""
    if isinstance(desc, ProductGroup):
        for f, a in zip(desc.factors, v):
            validate_algebra(f, a, tol)
        return
    v = np.asarray(v)
    if desc.kind == "torus":
        if v.shape != (desc.n,) or not np.all(np.isfinite(v)):
            raise MalformedAlgebraVector(f"torus algebra vector must be a finite {desc.n}-vector")
        return
    if v.shape != (desc.n, desc.n):
        raise MalformedAlgebraVector(f"expected {desc.n}x{desc.n} matrix, got {v.shape}")
    skew = np.linalg.norm(v.conj().T + v)
    if skew > tol:
        raise MalformedAlgebraVector(f"skew defect {skew:.3e} exceeds {tol:.1e}")
    if desc.kind == "su" and abs(np.trace(v)) > tol:
        raise MalformedAlgebraVector(f"trace {np.trace(v)} must vanish for su(n)")
    if desc.kind == "so" and np.iscomplexobj(v) and np.max(np.abs(v.imag)) > tol:
        raise MalformedAlgebraVector("so(n) algebra vector must be real")


# ---------------------------------------------------------------------------
# Norm, exp, log, dist
# ---------------------------------------------------------------------------

def algebra_norm(desc, v) -> float:
    """Scaled Ad-invariant norm: metric_scale times the Frobenius norm."""
    if isinstance(desc, ProductGroup):
        parts = [w * algebra_norm(f, a) for f, w, a in zip(desc.factors, desc.weights, v)]
        return float(math.sqrt(sum(p * p for p in parts)))
    return float(desc.metric_scale * np.linalg.norm(np.asarray(v)))


def group_exp(desc, v):
    """Exponential chart of the group at the identity.

    Total on the algebra; inputs with scaled norm > 1 are allowed (the chart
    precondition is soft) but are no longer guaranteed invertible by
    group_log.
    """
    validate_algebra(desc, v, tol=1e-10)
    if isinstance(desc, ProductGroup):
        return tuple(group_exp(f, a) for f, a in zip(desc.factors, v))
    v = np.asarray(v)
    if desc.kind == "torus":
        return np.mod(v, TWO_PI)
    # v is normal (skew-Hermitian): i*v is Hermitian, diagonalize exactly.
    w, u = np.linalg.eigh(1j * v)
    g = (u * np.exp(-1j * w)) @ u.conj().T
    if desc.kind == "so":
        return g.real
    return g


def group_log(desc, g):
    """Principal logarithm; raises CutLocusError near the branch cut."""
    if isinstance(desc, ProductGroup):
        return tuple(group_log(f, a) for f, a in zip(desc.factors, g))
    g = np.asarray(g)
    if desc.kind == "torus":
        wrapped = _wrap(g)
        if np.any(np.abs(np.abs(wrapped) - math.pi) <= CUT_TOLERANCE):
            raise CutLocusError("angle within tolerance of the cut at pi")
        return wrapped
    lam, u = _unitary_eig(g)
    # Unit-circle eigenvalues; branch point is -1.
    if np.any(np.abs(lam + 1.0) <= CUT_TOLERANCE):
        raise CutLocusError("eigenvalue within tolerance of -1")
    alpha = np.angle(lam)
    if desc.kind == "su" and abs(np.sum(alpha)) > 1e-8:
        # Principal branches fail to sum to zero: no traceless log in chart.
        raise CutLocusError("no traceless principal logarithm for this element")
    x = (u * (1j * alpha)) @ u.conj().T
    if desc.kind == "so":
        return x.real
    return x


def _unitary_eig(g: np.ndarray):
    """Eigen-decomposition of a unitary/orthogonal matrix via complex Schur
    (numerically unitary diagonalization for normal matrices)."""
    import scipy.linalg

    t, z = scipy.linalg.schur(g.astype(complex), output="complex")
    lam = np.diag(t)
    # Off-diagonal residue measures non-normality of the input.
    residue = np.linalg.norm(t - np.diag(lam))
    if residue > 1e-8:
        raise MalformedGroupElement(f"matrix is not normal (Schur residue {residue:.2e})")
    lam = lam / np.abs(lam)
    return lam, z


def dist(desc, g, h) -> float:
    """Bi-invariant distance ||log(g^-1 h)||; saturates at 2 off the chart."""
    try:
        return algebra_norm(desc, group_log(desc, multiply(desc, inverse(desc, g), h)))
    except CutLocusError:
        return SATURATION_DISTANCE


def ad_conjugate(desc, g, v):
    """Adjoint action Ad_g(v) = g v g^-1 (trivial on tori)."""
    if isinstance(desc, ProductGroup):
        return tuple(ad_conjugate(f, a, b) for f, a, b in zip(desc.factors, g, v))
    if desc.kind == "torus":
        return np.asarray(v).copy()
    g = np.asarray(g)
    out = g @ np.asarray(v) @ g.conj().T
    if desc.kind == "so":
        return out.real
    return out


# ---------------------------------------------------------------------------
# Random elements (test and sampler support)
# ---------------------------------------------------------------------------

def random_algebra(desc, rng: np.random.Generator, scaled_norm: float | None = None):
    """Seeded random algebra vector, optionally rescaled to a target norm."""
    if isinstance(desc, ProductGroup):
        parts = tuple(random_algebra(f, rng) for f in desc.factors)
        if scaled_norm is None:
            return parts
        total = algebra_norm(desc, parts)
        return tuple(p * (scaled_norm / total) for p in parts)
    if desc.kind == "torus":
        v = rng.standard_normal(desc.n)
    elif desc.kind == "su":
        a = rng.standard_normal((desc.n, desc.n)) + 1j * rng.standard_normal((desc.n, desc.n))
        v = (a - a.conj().T) / 2.0
        v -= np.trace(v) / desc.n * np.eye(desc.n)
    else:
        a = rng.standard_normal((desc.n, desc.n))
        v = (a - a.T) / 2.0
    if scaled_norm is not None:
        current = algebra_norm(desc, v)
        if current > 0:
            v = v * (scaled_norm / current)
    return v


def random_element(desc, rng: np.random.Generator):
    """Haar-distributed random element (exact for tori and SU(2)/SO(3),
    QR-based for larger matrix groups)."""
    if isinstance(desc, ProductGroup):
        return tuple(random_element(f, rng) for f in desc.factors)
    if desc.kind == "torus":
        return rng.uniform(0.0, TWO_PI, size=desc.n)
    if desc.kind == "su" and desc.n == 2:
        return su2_from_quaternion(_random_unit_quaternion(rng))
    if desc.kind == "so" and desc.n == 3:
        return so3_from_quaternion(_random_unit_quaternion(rng))
    if desc.kind == "su":
        a = rng.standard_normal((desc.n, desc.n)) + 1j * rng.standard_normal((desc.n, desc.n))
        q, r = np.linalg.qr(a)
        q = q * (np.diagonal(r) / np.abs(np.diagonal(r))).conj()
        return q * np.linalg.det(q) ** (-1.0 / desc.n)
    a = rng.standard_normal((desc.n, desc.n))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diagonal(r))
    if np.linalg.det(q) < 0:
        q[:, [0, 1]] = q[:, [1, 0]]
    return q


def _random_unit_quaternion(rng: np.random.Generator) -> np.ndarray:
    q = rng.standard_normal(4)
    return q / np.linalg.norm(q)


# ---------------------------------------------------------------------------
# Quaternion helpers (SU(2)/SO(3) interop)
# ---------------------------------------------------------------------------

def su2_from_quaternion(q) -> np.ndarray:
    """Unit quaternion (w, x, y, z) -> SU(2) via the homomorphic basis
    1 -> I, i -> -i s1, j -> -i s2, k -> -i s3 (Hamilton products map to
    matrix products in the same order)."""
    w, x, y, z = q
    return np.array(
        [[w - 1j * z, -y - 1j * x], [y - 1j * x, w + 1j * z]], dtype=complex
    )


def quaternion_from_su2(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u)
    w = (u[0, 0] + u[1, 1]).real / 2.0
    z = (u[1, 1] - u[0, 0]).imag / 2.0
    y = (u[1, 0] - u[0, 1]).real / 2.0
    x = -(u[0, 1] + u[1, 0]).imag / 2.0
    return np.array([w, x, y, z])


def so3_from_quaternion(q) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quaternion_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


# ---------------------------------------------------------------------------
# Batch kernels
# ---------------------------------------------------------------------------
#
# The averaging iteration works on large stacks of group elements.  Kernels
# provide vectorized mul/inv/exp/log/norm over stacked arrays; closed forms
# exist for tori, SU(2), and SO(3), which is all the averager needs fast.


class TorusKernel:
    def __init__(self, desc: CompactGroup):
        self.desc = desc
        self.scale = desc.metric_scale

    def mul(self, a, b):
        return np.mod(a + b, TWO_PI)

    def inv(self, a):
        return np.mod(-a, TWO_PI)

    def log(self, a):
        return _wrap(a)

    def exp(self, x):
        return np.mod(x, TWO_PI)

    def norm(self, x):
        return self.scale * np.linalg.norm(x, axis=-1)

    def log_norm(self, a):
        """Norm of the principal log with cut-locus saturation."""
        wrapped = _wrap(a)
        out = self.scale * np.linalg.norm(wrapped, axis=-1)
        cut = np.any(np.abs(np.abs(wrapped) - math.pi) <= CUT_TOLERANCE, axis=-1)
        return np.where(cut, SATURATION_DISTANCE, out)


class SU2Kernel:
    def __init__(self, desc: CompactGroup):
        self.desc = desc
        self.scale = desc.metric_scale

    def mul(self, a, b):
        return a @ b

    def inv(self, a):
        return np.conj(np.swapaxes(a, -1, -2))

    def _vector_parts(self, a):
        w = (a[..., 0, 0] + a[..., 1, 1]).real / 2.0
        z = (a[..., 0, 0] - a[..., 1, 1]).imag / 2.0
        y = (a[..., 0, 1] - a[..., 1, 0]).real / 2.0
        x = (a[..., 0, 1] + a[..., 1, 0]).imag / 2.0
        return w, x, y, z

    def log(self, a):
        w, x, y, z = self._vector_parts(a)
        s = np.sqrt(x * x + y * y + z * z)
        alpha = np.arctan2(s, w)
        if np.any(math.pi - alpha <= CUT_TOLERANCE):
            raise CutLocusError("SU(2) element at the cut locus")
        # alpha/s -> 1 as s -> 0 (w -> 1); series keeps it smooth.
        factor = np.where(s > 1e-9, alpha / np.where(s > 1e-9, s, 1.0), 1.0 / np.maximum(w, 1e-300))
        return self._assemble(factor * x, factor * y, factor * z)

    def _assemble(self, x, y, z):
        out = np.empty(x.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = 1j * z
        out[..., 0, 1] = y + 1j * x
        out[..., 1, 0] = -y + 1j * x
        out[..., 1, 1] = -1j * z
        return out

    def exp(self, v):
        x = (v[..., 0, 1] + v[..., 1, 0]).imag / 2.0
        y = (v[..., 0, 1] - v[..., 1, 0]).real / 2.0
        z = (v[..., 0, 0] - v[..., 1, 1]).imag / 2.0
        alpha = np.sqrt(x * x + y * y + z * z)
        sinc = np.where(alpha > 1e-9, np.sin(alpha) / np.where(alpha > 1e-9, alpha, 1.0),
                        1.0 - alpha * alpha / 6.0)
        out = self._assemble(sinc * x, sinc * y, sinc * z)
        cos = np.cos(alpha)
        out[..., 0, 0] += cos
        out[..., 1, 1] += cos
        return out

    def norm(self, v):
        return self.scale * np.sqrt(np.sum(np.abs(v) ** 2, axis=(-2, -1)))

    def log_norm(self, a):
        w, x, y, z = self._vector_parts(a)
        s = np.sqrt(x * x + y * y + z * z)
        alpha = np.arctan2(s, w)
        out = self.scale * math.sqrt(2.0) * alpha
        return np.where(math.pi - alpha <= CUT_TOLERANCE, SATURATION_DISTANCE, out)


class SO3Kernel:
    def __init__(self, desc: CompactGroup):
        self.desc = desc
        self.scale = desc.metric_scale

    def mul(self, a, b):
        return a @ b

    def inv(self, a):
        return np.swapaxes(a, -1, -2)

    @staticmethod
    def _angle(a):
        """Rotation angle via atan2(|skew|, cos): well-conditioned at both
        ends of [0, pi], unlike arccos of the trace."""
        tr = np.trace(a, axis1=-2, axis2=-1)
        skew = (a - np.swapaxes(a, -1, -2)) / 2.0
        sin = np.sqrt(np.sum(skew * skew, axis=(-2, -1)) / 2.0)
        return np.arctan2(sin, (tr - 1.0) / 2.0), skew, sin

    def log(self, a):
        theta, skew, sin = self._angle(a)
        if np.any(math.pi - theta <= CUT_TOLERANCE):
            raise CutLocusError("SO(3) element at the cut locus")
        factor = np.where(theta > 1e-6, theta / np.where(sin > 1e-300, sin, 1.0),
                          1.0 + theta * theta / 6.0)
        return skew * factor[..., None, None]

    def exp(self, v):
        theta = np.sqrt(np.sum(v * v, axis=(-2, -1)) / 2.0)
        a = np.where(theta > 1e-9, np.sin(theta) / np.where(theta > 1e-9, theta, 1.0),
                     1.0 - theta * theta / 6.0)
        b = np.where(theta > 1e-6, (1.0 - np.cos(theta)) / np.where(theta > 1e-6, theta * theta, 1.0),
                     0.5 - theta * theta / 24.0)
        eye = np.zeros(v.shape)
        eye[..., 0, 0] = eye[..., 1, 1] = eye[..., 2, 2] = 1.0
        return eye + a[..., None, None] * v + b[..., None, None] * (v @ v)

    def norm(self, v):
        return self.scale * np.sqrt(np.sum(v * v, axis=(-2, -1)))

    def log_norm(self, a):
        theta, _, _ = self._angle(a)
        out = self.scale * math.sqrt(2.0) * theta
        return np.where(math.pi - theta <= CUT_TOLERANCE, SATURATION_DISTANCE, out)


def kernel_for(desc):
    """Batch kernel for the descriptor; the averager requires one."""
    if isinstance(desc, ProductGroup):
        raise UnsupportedGroup("batch kernels cover simple groups only")
    if desc.kind == "torus":
        return TorusKernel(desc)
    if desc.kind == "su" and desc.n == 2:
        return SU2Kernel(desc)
    if desc.kind == "so" and desc.n == 3:
        return SO3Kernel(desc)
    raise UnsupportedGroup(f"no batch kernel for {desc.kind}({desc.n})")
