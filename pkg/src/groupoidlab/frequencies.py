"""Symplectic frequencies of positive-definite quadratic Hamiltonians and
the sampled frequency sum-set experiment.

Coordinates are interleaved (x1, y1, ..., xk, yk); J is block-diagonal with
2x2 rotation generators, so diag(l1, l1, ..., lk, lk) has frequencies
(l1, ..., lk).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .momentum import CoverageCertificate, hull_coverage, hull_vertices


class NotPositiveDefinite(ValueError):
    """The quadratic form is not symmetric positive-definite."""


def standard_symplectic_matrix(k: int) -> np.ndarray:
    j = np.zeros((2 * k, 2 * k))
    for i in range(0, 2 * k, 2):
        j[i, i + 1] = 1.0
        j[i + 1, i] = -1.0
    return j


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """H(z) = z^T S z / 2 with S symmetric positive-definite."""

    matrix: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.matrix, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
            raise NotPositiveDefinite(f"need a 2k x 2k matrix, got {s.shape}")
        if np.linalg.norm(s - s.T) > 1e-12 * max(1.0, np.linalg.norm(s)):
            raise NotPositiveDefinite("matrix is not symmetric")
        if np.linalg.eigvalsh(s).min() <= 0:
            raise NotPositiveDefinite("matrix is not positive-definite")
        object.__setattr__(self, "matrix", s)

    @property
    def k(self) -> int:
        return self.matrix.shape[0] // 2


@dataclass(frozen=True)
class FrequencyTuple:
    """Sorted (non-decreasing) strictly positive frequencies."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if any(v <= 0 for v in vals):
            raise ValueError("frequencies must be strictly positive")
        if any(vals[i] > vals[i + 1] for i in range(len(vals) - 1)):
            raise ValueError("frequencies must be sorted non-decreasingly")
        object.__setattr__(self, "values", vals)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values)

    def __len__(self) -> int:
        return len(self.values)


def symplectic_spectrum(ham: QuadraticHamiltonian) -> FrequencyTuple:
    """Frequencies = positive imaginary parts of eig(J S), sorted."""
    return FrequencyTuple(tuple(_spectra_batch(ham.matrix[None, :, :])[0]))


def _spectra_batch(mats: np.ndarray) -> np.ndarray:
    """Frequencies of a stack of PD quadratic forms, shape (n, 2k, 2k) ->
    (n, k), rows sorted ascending."""
    mats = np.asarray(mats, dtype=float)
    k = mats.shape[-1] // 2
    j = standard_symplectic_matrix(k)
    ev = np.linalg.eigvals(j[None, :, :] @ mats)
    imag = np.sort(ev.imag, axis=-1)
    return imag[:, k:]


def diagonal_hamiltonian(freqs) -> np.ndarray:
    freqs = np.asarray(freqs, dtype=float)
    return np.diag(np.repeat(freqs, 2))


def random_symplectic_batch(k: int, count: int, rng: np.random.Generator,
                            coupling: float = 1.0) -> np.ndarray:
    """M = exp(J R) with R symmetric, entries uniform in [-coupling, coupling].

    Seeded and deterministic; covers a neighborhood of the identity in
    Sp(2k, R), which is what the sum-set sampling needs.
    """
    n = 2 * k
    raw = rng.uniform(-coupling, coupling, size=(count, n, n))
    r = (raw + np.swapaxes(raw, -1, -2)) / 2.0
    x = standard_symplectic_matrix(k)[None, :, :] @ r
    # Batched eigendecomposition exponential; Hamiltonian matrices are
    # diagonalizable for generic R.
    w, v = np.linalg.eig(x)
    m = (v * np.exp(w)[:, None, :]) @ np.linalg.inv(v)
    m = m.real
    # Validate symplecticity; fall back to scipy on degenerate draws.
    j = standard_symplectic_matrix(k)
    residue = np.abs(np.swapaxes(m, -1, -2) @ j[None] @ m - j[None]).max(axis=(-2, -1))
    bad = np.nonzero(residue > 1e-8)[0]
    if len(bad):
        import scipy.linalg

        for idx in bad:
            m[idx] = scipy.linalg.expm(x[idx])
    return m


@dataclass
class GapReport:
    window: tuple
    resolution: float
    n_in_window: int
    max_gap: float
    gap_free: bool


def interval_gap_report(values: np.ndarray, window: tuple, resolution: float) -> GapReport:
    lo, hi = window
    vals = np.sort(values[(values >= lo) & (values <= hi)])
    if len(vals) == 0:
        return GapReport(window, resolution, 0, hi - lo, False)
    gaps = np.diff(np.concatenate([[lo], vals, [hi]]))
    max_gap = float(gaps.max())
    return GapReport(window, resolution, len(vals), max_gap, max_gap <= resolution)


@dataclass
class PhiSetSample:
    """Sampled frequency sum-set {phi(H1 + H2)} with structure diagnostics."""

    samples: np.ndarray  # (n, k), rows sorted ascending
    min_sample: np.ndarray  # lexicographic minimum
    componentwise_min: np.ndarray
    commuting_sample: np.ndarray  # frequencies of D_lam + D_gam (sample 0)
    window: tuple | None
    gap_report: GapReport | None  # k = 1 only
    window_hull: np.ndarray | None  # k >= 2 only
    certificate: CoverageCertificate | None  # k >= 2 only


def phi_set(lam: FrequencyTuple, gam: FrequencyTuple, n: int, seed: int,
            coupling: float = 1.0, window: tuple | None = None,
            resolution: float = 0.05, batch: int = 20000) -> PhiSetSample:
    """Sample {phi(H1 + H2) : phi(H1) = lam, phi(H2) = gam}.

    H_i = M_i^T D M_i over random symplectic M_i.  The commuting
    (simultaneously diagonal) pair is always included as sample 0, so the
    componentwise sum lam + gam is always in the cloud.
    """
    if len(lam) != len(gam):
        raise ValueError("frequency tuples must have equal length")
    k = len(lam)
    d_lam, d_gam = diagonal_hamiltonian(lam.array), diagonal_hamiltonian(gam.array)
    rng = np.random.default_rng(seed)
    chunks = [_spectra_batch((d_lam + d_gam)[None, :, :])]
    remaining = n - 1
    while remaining > 0:
        m = min(batch, remaining)
        m1 = random_symplectic_batch(k, m, rng, coupling)
        m2 = random_symplectic_batch(k, m, rng, coupling)
        h = (np.swapaxes(m1, -1, -2) @ d_lam[None] @ m1
             + np.swapaxes(m2, -1, -2) @ d_gam[None] @ m2)
        chunks.append(_spectra_batch(h))
        remaining -= m
    samples = np.vstack(chunks)

    order = np.lexsort(samples.T[::-1])
    min_sample = samples[order[0]]
    gap = None
    hull = None
    cert = None
    if window is not None:
        if k == 1:
            gap = interval_gap_report(samples[:, 0], window, resolution)
        else:
            lo = np.asarray(window[0], dtype=float)
            hi = np.asarray(window[1], dtype=float)
            mask = np.all((samples >= lo) & (samples <= hi), axis=1)
            windowed = samples[mask]
            if len(windowed) > 2 * k:
                hull = hull_vertices(windowed)
                cert = hull_coverage(windowed, resolution)
    return PhiSetSample(
        samples=samples,
        min_sample=min_sample,
        componentwise_min=samples.min(axis=0),
        commuting_sample=samples[0],
        window=window,
        gap_report=gap,
        window_hull=hull,
        certificate=cert,
    )
