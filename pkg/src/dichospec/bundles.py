"""Invariant projectors and spectral bundle fibers.

A certified exponential splitting at rate ``gamma`` induces a projector
``P(0)`` onto the stable subspace along the unstable one.  Conjugating with
the transition matrices moves the projector along the orbit,

    P(n) = X(n, 0) P(0) X(0, n),

which commutes with the dynamics by construction.  Intersecting the ranges
and kernels of projectors taken on both sides of a spectral gap produces
the fiber of the spectral bundle attached to the interval in between.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dichotomy import DichotomyVerdict, SpectrumEstimate
from .errors import ParameterError, ProjectorDriftError, SubspaceError, ValidationError
from .linalg import (min_principal_angle, qr_positive, spectral_norm,
                     subspace_intersection)
from .sequences import MatrixSequence
from .transition import transition

# Idempotency drift below this is repaired without comment.
SILENT_DRIFT = 1e-9
# Drift up to this is repaired with a warning; beyond it the conjugation
# window has outrun the certified decay and the projector is meaningless.
REPAIR_DRIFT = 1e-6


def _oblique_projector(range_basis: np.ndarray, kernel_basis: np.ndarray) -> np.ndarray:
    """Projector onto span(range_basis) along span(kernel_basis)."""
    d = range_basis.shape[0]
    r = range_basis.shape[1]
    t = np.hstack([range_basis, kernel_basis])
    if t.shape != (d, d):
        raise SubspaceError(
            f"range ({r}) and kernel ({kernel_basis.shape[1]}) dimensions "
            f"do not fill dimension {d}")
    mask = np.zeros(d)
    mask[:r] = 1.0
    try:
        return (t * mask) @ np.linalg.inv(t)
    except np.linalg.LinAlgError as exc:
        raise SubspaceError("stable and unstable subspaces are not transverse") from exc


def _reidempotize(p: np.ndarray, rank: int) -> np.ndarray:
    """Rebuild a drifted projector from its singular directions.

    The leading ``rank`` left singular vectors span the range, the trailing
    right singular vectors span the kernel; the projector onto the former
    along the latter is idempotent to machine precision.
    """
    u, _, vt = np.linalg.svd(p)
    return _oblique_projector(u[:, :rank], vt[rank:].T)


@dataclass
class ProjectorFamily:
    """Dichotomy projector ``P(n)``, propagated lazily from ``P(0)``.

    Instances are created from a certificate via :func:`projector_family`.
    ``at`` conjugates the base projector with the transition matrices and
    repairs small idempotency drift; drift beyond ``REPAIR_DRIFT`` raises
    :class:`ProjectorDriftError` since it means the conjugation window is
    too long for the certified decay rates.
    """

    seq: MatrixSequence
    gamma: float
    rank: int
    base: np.ndarray
    _cache: dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        d = self.seq.dimension
        if self.base.shape != (d, d):
            raise ValidationError(
                f"base projector shape {self.base.shape} does not match dimension {d}")
        drift = spectral_norm(self.base @ self.base - self.base)
        if drift > SILENT_DRIFT:
            raise ValidationError(f"base projector is not idempotent (drift {drift:.3e})")
        self._cache[0] = self.base

    @property
    def dimension(self) -> int:
        return self.seq.dimension

    def at(self, n: int) -> np.ndarray:
        """P(n) = X(n,0) P(0) X(0,n), with idempotency repair."""
        cached = self._cache.get(n)
        if cached is not None:
            return cached
        fwd = transition(self.seq, n, 0)
        bwd = transition(self.seq, 0, n)
        log_scale = fwd.log_scale + bwd.log_scale
        if abs(log_scale) > 500.0:
            raise ProjectorDriftError(
                f"transition scales at n={n} overflow the projector conjugation; "
                "the window is too long for the certified rates")
        p = (fwd.core @ self.base @ bwd.core) * np.exp(log_scale)
        drift = spectral_norm(p @ p - p)
        if drift > REPAIR_DRIFT:
            raise ProjectorDriftError(
                f"projector at n={n} drifted by {drift:.3e} "
                f"(repair threshold {REPAIR_DRIFT:.0e}); shorten the window or "
                "recompute the certificate with a larger margin")
        if drift > 1e-14:
            if drift > SILENT_DRIFT:
                warnings.warn(
                    f"projector at n={n} drifted by {drift:.3e}; re-idempotized",
                    stacklevel=2)
            p = _reidempotize(p, self.rank)
        self._cache[n] = p
        return p

    def commutation_residual(self, n: int) -> float:
        """|| A(n) P(n) - P(n+1) A(n) ||, which should vanish."""
        a = self.seq.evaluate(n)
        return spectral_norm(a @ self.at(n) - self.at(n + 1) @ a)


def projector_family(seq: MatrixSequence, verdict: DichotomyVerdict) -> ProjectorFamily:
    """Build the dichotomy projector family from a certificate.

    ``P(0)`` projects onto the certified stable subspace along the unstable
    one.  Raises :class:`ValidationError` when the verdict is not a
    certificate (there is no invariant splitting to project onto).
    """
    if not verdict.is_certificate:
        raise ValidationError(
            f"verdict at gamma={verdict.gamma} is '{verdict.outcome}', not a certificate")
    base = _oblique_projector(verdict.stable_basis, verdict.unstable_basis)
    return ProjectorFamily(seq=seq, gamma=verdict.gamma, rank=verdict.rank, base=base)


def projector_at(family: ProjectorFamily, n: int) -> np.ndarray:
    """Functional alias for :meth:`ProjectorFamily.at`."""
    return family.at(n)


@dataclass(frozen=True)
class SpectralBundleFiber:
    """Time-zero fiber attached to the ``index``-th spectral interval."""

    index: int
    basis: np.ndarray
    dimension: int

    def __post_init__(self) -> None:
        if self.basis.ndim != 2 or self.basis.shape[1] != self.dimension:
            raise ValidationError(
                f"fiber basis shape {self.basis.shape} does not carry "
                f"dimension {self.dimension}")
        if self.dimension < 1:
            raise ValidationError("spectral bundle fibers are nontrivial by construction")
        gram = self.basis.T @ self.basis
        if spectral_norm(gram - np.eye(self.dimension)) > 1e-8:
            raise ValidationError("fiber basis is not orthonormal")

    @property
    def ambient_dimension(self) -> int:
        return self.basis.shape[0]

    def contains(self, vector: np.ndarray, rtol: float = 1e-8) -> bool:
        """Whether ``vector`` lies in the fiber up to relative tolerance."""
        v = np.asarray(vector, dtype=float)
        scale = float(np.linalg.norm(v))
        if scale == 0.0:
            return True
        residual = v - self.basis @ (self.basis.T @ v)
        return float(np.linalg.norm(residual)) <= rtol * scale


def bundle_fibers(spectrum: SpectrumEstimate,
                  certificates: tuple[DichotomyVerdict, ...] | None = None,
                  *, rtol: float = 1e-8) -> tuple[SpectralBundleFiber, ...]:
    """Fibers of the spectral bundle at time zero, one per interval.

    The fiber over interval ``i`` is the intersection of the unstable
    subspace certified below it with the stable subspace certified above
    it.  Certificates default to the per-gap representatives picked during
    spectrum estimation; a degenerate estimate carries none and is
    rejected, as there is no splitting to intersect.
    """
    certs = spectrum.gap_certificates if certificates is None else tuple(certificates)
    expected_count = len(spectrum.intervals) + 1
    if len(certs) != expected_count:
        raise SubspaceError(
            f"need {expected_count} gap certificates (one per spectral gap), "
            f"got {len(certs)}")
    for cert, rank in zip(certs, spectrum.gap_ranks):
        if not cert.is_certificate:
            raise SubspaceError(
                f"gap verdict at gamma={cert.gamma} is not a certificate")
        if cert.rank != rank:
            raise SubspaceError(
                f"certificate at gamma={cert.gamma} has rank {cert.rank}, "
                f"spectrum expects {rank}")
    d = spectrum.dimension
    fibers = []
    for i in range(1, expected_count):
        below, above = certs[i - 1], certs[i]
        expected = above.rank - below.rank
        basis = subspace_intersection(below.unstable_basis, above.stable_basis,
                                      d, rtol=rtol)
        if basis.shape[1] != expected:
            raise SubspaceError(
                f"fiber {i} has dimension {basis.shape[1]}, expected {expected} "
                f"from the certificate ranks {below.rank} and {above.rank}; "
                "the certificates are inconsistent")
        fibers.append(SpectralBundleFiber(index=i, basis=basis, dimension=expected))
    total = sum(f.dimension for f in fibers)
    if total != d:
        raise SubspaceError(
            f"fiber dimensions sum to {total}, not the ambient dimension {d}")
    return tuple(fibers)


def restricted_fiber_system(seq: MatrixSequence, spectrum: SpectrumEstimate,
                            index: int, *, window: int, burn_in: int = 128,
                            rtol: float = 1e-8) -> tuple[np.ndarray, MatrixSequence]:
    """Coefficient dynamics of the solutions living on one bundle fiber.

    Sampling a non-extremal fiber through plain forward products is
    hopeless in floating point: rounding leaks a component onto a faster
    fiber and the leak compounds at the rate gap per step.  Diagonal
    systems dodge this because coordinate axes are exactly invariant;
    for everything else this function sweeps the two invariant families
    framing the fiber across the requested window (a forward QR walk for
    the family growing past the gap below, a backward walk for the family
    decaying past the gap above), intersects them at every time, and reads
    off the one-step factors of the fiber coordinates.  Re-expressing the
    orbit in the tracked frame at every step removes the leak before it
    can compound.

    Returns the fiber frame at time zero together with a tabulated k-by-k
    system covering ``[-window, window - 1]``.  The frames are orthonormal,
    so solutions of the returned system carry exactly the norms of the
    ambient solutions starting on the fiber.  A fiber spanning the whole
    space has nothing to track; the original sequence is returned as is.
    """
    if not 1 <= index <= len(spectrum.intervals):
        raise ParameterError(f"fiber index {index} out of range")
    r_below = spectrum.gap_ranks[index - 1]
    r_above = spectrum.gap_ranks[index]
    k = r_above - r_below
    d = spectrum.dimension
    if k == d:
        return np.eye(d), seq
    w = int(window)
    burn = max(int(burn_in), 8)
    if w < 1:
        raise ParameterError("window must be at least 1")
    lo, hi = -w - burn, w + burn
    factors = seq.window(lo, hi - 1)
    inverses = np.linalg.inv(factors)

    def factor(n: int) -> np.ndarray:
        return factors[n - lo]

    m_hat = seq.validate((lo, hi)).m_hat
    binit = max(4, min(int(16.0 / max(math.log(max(m_hat, 1.0)), 0.05)), burn))

    def short_product(start: int) -> np.ndarray:
        out = np.eye(d)
        for n in range(start, start + binit):
            out = factor(n) @ out
        return out

    # family growing past the gap below the interval, walked forward
    ku = d - r_below
    q = np.linalg.svd(short_product(lo))[0][:, :ku]
    u_frames = np.empty((2 * w + 1, d, ku))
    for n in range(lo + binit, w + 1):
        if n >= -w:
            u_frames[n + w] = q
        if n < w:
            q, _ = qr_positive(factor(n) @ q)

    # family decaying past the gap above, walked backward
    ks = r_above
    t2 = hi - binit
    q = np.linalg.svd(short_product(t2))[2].conj().T[:, d - ks:]
    s_frames = np.empty((2 * w + 1, d, ks))
    if t2 <= w:
        s_frames[t2 + w] = q
    for n in range(t2 - 1, -w - 1, -1):
        q, _ = qr_positive(inverses[n - lo] @ q)
        if n <= w:
            s_frames[n + w] = q

    fiber_frames = np.empty((2 * w + 1, d, k))
    for i in range(2 * w + 1):
        basis = subspace_intersection(u_frames[i], s_frames[i], d, rtol=rtol)
        if basis.shape[1] != k:
            raise SubspaceError(
                f"fiber {index} lost track at n = {i - w}: the framing "
                f"families intersect in dimension {basis.shape[1]}, not {k}")
        fiber_frames[i] = basis

    table = np.empty((2 * w, k, k))
    worst = 0.0
    for i in range(2 * w):
        af = factor(i - w) @ fiber_frames[i]
        table[i] = fiber_frames[i + 1].T @ af
        resid = spectral_norm(af - fiber_frames[i + 1] @ table[i])
        worst = max(worst, resid / max(spectral_norm(af), 1e-300))
    if worst > 1e-6:
        raise SubspaceError(
            f"fiber {index} coordinates are not invariant over the window "
            f"(worst relative residual {worst:.3e}); the spectral gaps "
            "framing it are probably too thin for the sweep to converge")
    return fiber_frames[w].copy(), MatrixSequence.tabulated(table, start=-w)


@dataclass(frozen=True)
class WhitneyReport:
    """Transversality diagnostics for a collection of fibers."""

    dimension: int
    dimension_sum: int
    smallest_singular_value: float
    threshold: float
    pairwise_angles: tuple[tuple[int, int, float], ...]
    passed: bool

    def rows(self) -> list[str]:
        lines = [
            f"ambient dimension      {self.dimension}",
            f"fiber dimension sum    {self.dimension_sum}",
            f"stacked sigma_min      {self.smallest_singular_value:.6e}",
            f"threshold              {self.threshold:.1e}",
        ]
        for i, j, angle in self.pairwise_angles:
            lines.append(f"angle({i},{j})             {angle:.6f} rad")
        lines.append(f"whitney sum            {'pass' if self.passed else 'FAIL'}")
        return lines


def whitney_sum_check(fibers: tuple[SpectralBundleFiber, ...] | list[SpectralBundleFiber],
                      *, threshold: float = 1e-3,
                      dimension: int | None = None) -> WhitneyReport:
    """Check that the fibers decompose the ambient space transversally.

    Passes iff the fiber dimensions sum to the ambient dimension and the
    matrix of all stacked bases keeps its smallest singular value at or
    above ``threshold``.  Duplicated or nearly parallel fibers fail through
    the singular value even when the dimension count happens to match.
    """
    fibers = tuple(fibers)
    if not fibers:
        raise ParameterError("whitney_sum_check needs at least one fiber")
    d = dimension if dimension is not None else fibers[0].ambient_dimension
    for f in fibers:
        if f.ambient_dimension != d:
            raise ValidationError(
                f"fiber {f.index} lives in dimension {f.ambient_dimension}, expected {d}")
    stacked = np.hstack([f.basis for f in fibers])
    dim_sum = stacked.shape[1]
    sigma_min = float(np.linalg.svd(stacked, compute_uv=False)[-1]) if dim_sum else 0.0
    angles = []
    for i in range(len(fibers)):
        for j in range(i + 1, len(fibers)):
            angles.append((fibers[i].index, fibers[j].index,
                           min_principal_angle(fibers[i].basis, fibers[j].basis)))
    passed = dim_sum == d and sigma_min >= threshold
    return WhitneyReport(dimension=d, dimension_sum=dim_sum,
                         smallest_singular_value=sigma_min, threshold=threshold,
                         pairwise_angles=tuple(angles), passed=passed)
