"""Exponential-dichotomy certificates and the dichotomy spectrum.

A scaling gamma > 0 is in the resolvent of x(n+1) = A(n) x(n) when the
scaled system x(n+1) = gamma^-1 A(n) x(n) admits an exponential dichotomy:
an invariant splitting into a stable family (forward decay with constants
K, rho < 1) and an unstable family (backward decay).  The spectrum is the
complement, a union of at most d closed intervals; crossing an interval
from left to right strictly increases the dichotomy rank (the dimension of
the stable family).

Certification works on a finite window [-N, N] with a burn-in margin on
each side:

1. One forward and one backward QR sweep estimate d per-direction growth
   rates each; counting rates below log(gamma) seeds candidate ranks.
2. For each candidate rank s, orthonormal frames for the rank-s stable
   family are propagated backward from the right burn-in zone (backward
   propagation attracts onto the stable family), and frames for the
   rank-(d-s) unstable family forward from the left zone.  The one-step
   factors restricted to these frames are small s x s matrices.
3. Per-gap maxima of restricted product norms (forward on the stable
   family, backward on the unstable family) are assembled once per rank
   by a doubling scheme; scaling by gamma only shifts these log-envelopes
   linearly, so every verdict after the first is arithmetic on a few
   dozen floats.
4. A candidate certifies when both fitted decay rates stay below
   1 - delta_fit, the envelope is straight over the fitting tail
   (residual gate), and the stable/unstable frames at time 0 are
   transversal.  At most one rank can satisfy all gates.

Backward norms on the unstable family are computed from inverses of the
well-conditioned restricted one-step factors, never from small singular
values of long products, which float arithmetic cannot resolve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .bohl import BohlParams, scalar_bohl_estimate
from .errors import (DecayFitError, ParameterError, SpectrumConsistencyError,
                     ValidationError)
from .linalg import min_principal_angle, qr_positive
from .sequences import MatrixSequence, ScalarSequence
from .transition import WindowProducts, transition

# Fractions of the full factor span used for slope fitting.  The resulting
# gaps are snapped to a common multiple of small periods so that periodic
# systems telescope exactly and contribute zero fit residual.
_SLOPE_FRACTIONS = (0.47, 0.56, 0.66, 0.75, 0.84, 0.94)


@dataclass(frozen=True)
class DichotomyParams:
    """Window layout and gates for dichotomy certification.

    window
        Half-length N of the usable range [-N, N].
    burn_in
        Extra factors on each side consumed by frame convergence before
        the usable range starts.
    theta_min
        Minimal principal angle (radians) between the stable and unstable
        spaces at time 0; below it the splitting is not transversal.
    rho_split
        Diagnostic band: a verdict at gamma within a factor
        1/rho_split of a sampled per-direction rate is flagged low
        confidence (the splitting boundary is barely resolved).
    delta_fit
        Certification requires both fitted decay rates <= 1 - delta_fit.
    resid_max
        Max deviation (log units) of the tail envelope from its fitted
        line; curvature beyond this means the rate has not converged.
    """

    window: int = 256
    burn_in: int = 128
    theta_min: float = 1e-3
    rho_split: float = 0.95
    delta_fit: float = 1e-4
    resid_max: float = 0.75

    def __post_init__(self):
        if self.window < 32:
            raise ParameterError("dichotomy window must be at least 32")
        if self.burn_in < 8:
            raise ParameterError("burn_in must be at least 8")
        if not (0.0 < self.theta_min < math.pi / 2):
            raise ParameterError("theta_min must lie in (0, pi/2)")
        if not (0.0 < self.rho_split < 1.0):
            raise ParameterError("rho_split must lie in (0, 1)")
        if not (0.0 < self.delta_fit < 0.5):
            raise ParameterError("delta_fit must lie in (0, 0.5)")
        if self.resid_max <= 0.0:
            raise ParameterError("resid_max must be positive")

    @property
    def extent(self) -> int:
        return self.window + self.burn_in

    def scaled(self, factor: int) -> "DichotomyParams":
        return replace(self, window=self.window * factor, burn_in=self.burn_in * factor)

    def fit_gaps(self) -> tuple[np.ndarray, np.ndarray]:
        """Sampled gaps and the mask of those used for slope fitting.

        Gaps never exceed the half-width N: every sampled gap then has at
        least N + 1 window offsets inside [-N, N], so systems with
        different behavior on the two half-lines keep their extremal
        windows (a gap longer than N can only straddle time 0, which bends
        the envelope and would poison the fit).  Slope gaps sit in the
        upper part of [1, N] and are multiples of 48 (24 or 12 for small
        windows), so window products of any period dividing the alignment
        telescope exactly.  The dyadic ladder below them only pins the
        constant K.
        """
        span = self.window
        align = 48 if span >= 480 else (24 if span >= 240 else 12)
        slope = set()
        for f in _SLOPE_FRACTIONS:
            g = int(round(span * f / align)) * align
            if align <= g <= span:
                slope.add(g)
        if len(slope) < 2:
            raise ParameterError("window too small to place slope-fitting gaps")
        ladder = [1]
        while ladder[-1] * 2 <= self.window:
            ladder.append(ladder[-1] * 2)
        gaps = np.array(sorted(set(ladder) | slope))
        mask = np.isin(gaps, sorted(slope))
        return gaps, mask


@dataclass(frozen=True)
class DecayFit:
    """Fitted constants for a decay law  lognorm <= log K + gap * log rho."""

    K: float
    rho: float
    residual: float
    samples: int

    @property
    def failed(self) -> bool:
        """True when the fitted slope is not a decay (rho >= 1)."""
        return not (self.rho < 1.0)

    def __iter__(self):
        yield self.K
        yield self.rho
        yield self.residual


def _line_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares intercept and slope of y over x."""
    design = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(coef[0]), float(coef[1])


def fit_decay_constants(samples, min_samples: int = 8) -> DecayFit:
    """Fit (K, rho, residual) to log-norm decay samples.

    ``samples`` maps time pairs (k, l) with k >= l to log-norms, or is an
    iterable of ((k, l), value) or (gap, value) pairs.  The slope comes
    from least squares; the intercept is then raised until every sample
    lies on or below the line, so the returned pair is the tightest bound
    of the given data.  A non-decaying slope is reported through
    :attr:`DecayFit.failed` rather than an exception.
    """
    pairs = samples.items() if isinstance(samples, Mapping) else samples
    gaps, values = [], []
    for key, value in pairs:
        if isinstance(key, tuple):
            k, l = key
            gap = k - l
        else:
            gap = key
        if gap < 0:
            raise ParameterError(f"decay sample has negative gap {gap}")
        gaps.append(float(gap))
        values.append(float(value))
    if len(gaps) < min_samples:
        raise DecayFitError(
            f"need at least {min_samples} decay samples, got {len(gaps)}")
    g = np.array(gaps)
    v = np.array(values)
    if np.ptp(g) == 0.0:
        raise DecayFitError("decay samples must span at least two distinct gaps")
    intercept, slope = _line_fit(g, v)
    residual = float(np.max(np.abs(v - (intercept + slope * g))))
    log_k = float(np.max(v - slope * g))
    return DecayFit(K=math.exp(min(log_k, 700.0)), rho=math.exp(slope),
                    residual=residual, samples=len(gaps))


@dataclass(frozen=True)
class DichotomyVerdict:
    """Outcome of testing one scaling gamma.

    A certificate carries the splitting at time 0 (orthonormal stable and
    unstable bases), its rank, and the fitted decay constants.  An
    in-spectrum verdict carries the failure reason and how close the best
    candidate came to certifying.
    """

    gamma: float
    outcome: str  # "certificate" | "in_spectrum"
    window: int
    rank: int | None = None
    stable_basis: np.ndarray | None = None
    unstable_basis: np.ndarray | None = None
    K: float | None = None
    rho: float | None = None
    residual: float | None = None
    reason: str | None = None  # splitting-degenerate | decay-fit-failed | transversality-lost
    margin: float = 0.0
    low_confidence: bool = False

    @property
    def is_certificate(self) -> bool:
        return self.outcome == "certificate"

    def summary_row(self) -> tuple:
        return (self.gamma, self.outcome, self.rank, self.rho, self.K)


@dataclass(frozen=True)
class _Candidate:
    """Rank-s splitting data, independent of gamma."""

    rank: int
    stable_basis: np.ndarray
    unstable_basis: np.ndarray
    stable_env: np.ndarray | None    # per-gap max log ||X(m+g,m)| stable||
    unstable_env: np.ndarray | None  # per-gap max log ||X(m,m+g)| unstable||
    angle: float


@dataclass(frozen=True)
class _SideFit:
    rho: float
    K: float
    residual: float


class DichotomyAnalyzer:
    """Shared window data answering dichotomy queries for every gamma.

    Construction runs the QR rate sweeps and validates the sequence; the
    per-rank frame propagation and envelopes are built lazily on first use
    and cached, so a full spectrum sweep costs little more than a single
    verdict per distinct rank.
    """

    def __init__(self, seq: MatrixSequence, params: DichotomyParams | None = None):
        self.seq = seq
        self.params = params or DichotomyParams()
        d = seq.dimension
        ext = self.params.extent
        self._ext = ext
        self._factors = seq.window(-ext, ext - 1)
        self._inverses = np.linalg.inv(self._factors)
        self.bound_report = seq.validate((-ext, ext))
        self.m_hat = self.bound_report.m_hat
        self._gaps, self._slope_mask = self.params.fit_gaps()
        self._gapsf = self._gaps.astype(float)
        self._candidates: dict[int, _Candidate] = {}
        self._forward_rates, self._backward_rates = self._direction_rates()
        # short init window: long enough to separate directions, short
        # enough that the product's singular values stay resolvable
        log_m = max(math.log(max(self.m_hat, 1.0)), 0.05)
        self._binit = max(4, min(int(16.0 / log_m), self.params.burn_in // 2))

    # -- construction helpers -------------------------------------------------

    def _index(self, n: int) -> int:
        return n + self._ext

    def _direction_rates(self) -> tuple[np.ndarray, np.ndarray]:
        """Mean per-direction log growth rates, forward and backward."""
        d = self.seq.dimension
        ext = self._ext
        half = ext // 2
        q = np.eye(d)
        acc = np.zeros(d)
        for i in range(ext):
            q, r = qr_positive(self._factors[self._index(i)] @ q)
            if i >= half:
                acc += np.log(np.diag(r))
        forward = acc / (ext - half)
        q = np.eye(d)
        acc = np.zeros(d)
        for i in range(ext):
            q, r = qr_positive(self._inverses[self._index(-i - 1)] @ q)
            if i >= half:
                acc += np.log(np.diag(r))
        backward = acc / (ext - half)
        return forward, backward

    def _usable_factors(self) -> np.ndarray:
        burn = self.params.burn_in
        n = 2 * self.params.window
        return self._factors[burn: burn + n]

    def _short_product(self, start: int, steps: int) -> np.ndarray:
        out = np.eye(self.seq.dimension)
        for n in range(start, start + steps):
            out = self._factors[self._index(n)] @ out
        return out

    def _env_values(self, factors: np.ndarray) -> np.ndarray:
        wp = WindowProducts(factors)
        return np.array([wp.max_log_norm(int(g))[0] for g in self._gaps])

    def _candidate(self, s: int) -> _Candidate:
        if s in self._candidates:
            return self._candidates[s]
        d = self.seq.dimension
        n_win = self.params.window
        if s == 0:
            cand = _Candidate(rank=0, stable_basis=np.zeros((d, 0)),
                              unstable_basis=np.eye(d), stable_env=None,
                              unstable_env=self._env_values(
                                  np.linalg.inv(self._usable_factors())[::-1]),
                              angle=math.pi / 2)
        elif s == d:
            cand = _Candidate(rank=d, stable_basis=np.eye(d),
                              unstable_basis=np.zeros((d, 0)),
                              stable_env=self._env_values(self._usable_factors()),
                              unstable_env=None, angle=math.pi / 2)
        else:
            cand = self._build_split_candidate(s)
        self._candidates[s] = cand
        return cand

    def _build_split_candidate(self, s: int) -> _Candidate:
        d = self.seq.dimension
        ext = self._ext
        n_win = self.params.window
        binit = self._binit

        # stable family: seed with the most contracted right singular
        # directions of a short product ending at the right burn-in zone,
        # then walk backward; backward propagation attracts onto the
        # stable family, so positions at or below +window are converged
        t0 = ext - binit
        seed = np.linalg.svd(self._short_product(t0, binit))[2].conj().T[:, d - s:]
        vs = seed
        stable_basis = None
        r_stable = np.empty((2 * n_win, s, s))
        for n in range(t0 - 1, -n_win - 1, -1):
            q, g = qr_positive(self._inverses[self._index(n)] @ vs)
            vs = q
            if n == 0:
                stable_basis = vs.copy()
            if n < n_win:
                # A(n) Vs(n) = Vs(n+1) G(n)^-1: the restricted forward factor
                r_stable[n + n_win] = np.linalg.inv(g)

        # unstable family: seed with the most amplified image directions of
        # a short product leaving the left burn-in zone, then walk forward
        t1 = -ext + binit
        seed = np.linalg.svd(self._short_product(-ext, binit))[0][:, : d - s]
        vu = seed
        unstable_basis = None
        r_unstable = np.empty((2 * n_win, d - s, d - s))
        for n in range(t1, n_win):
            if n == 0:
                unstable_basis = vu.copy()
            q, r = qr_positive(self._factors[self._index(n)] @ vu)
            if -n_win <= n:
                r_unstable[n + n_win] = r
            vu = q

        # backward norms on the unstable family come from products of the
        # inverted one-step factors in reversed order
        stable_env = self._env_values(r_stable)
        unstable_env = self._env_values(np.linalg.inv(r_unstable)[::-1])
        return _Candidate(rank=s, stable_basis=stable_basis,
                          unstable_basis=unstable_basis,
                          stable_env=stable_env, unstable_env=unstable_env,
                          angle=min_principal_angle(stable_basis, unstable_basis))

    # -- per-gamma verdicts ----------------------------------------------------

    def _side_fit(self, env: np.ndarray, shift: float) -> _SideFit:
        """Decay fit of a gamma-shifted envelope.

        The slope comes from the aligned tail gaps only; the constant is
        the envelope shift over all sampled gaps, so every sample lies on
        or below  log K + g log rho.
        """
        v = env + self._gapsf * shift
        xs = self._gapsf[self._slope_mask]
        ys = v[self._slope_mask]
        intercept, slope = _line_fit(xs, ys)
        residual = float(np.max(np.abs(ys - (intercept + slope * xs))))
        log_k = float(np.max(v - slope * self._gapsf))
        return _SideFit(rho=math.exp(slope),
                        K=max(1.0, math.exp(min(log_k, 700.0))),
                        residual=residual)

    def verdict(self, gamma: float) -> DichotomyVerdict:
        """Certificate or in-spectrum verdict for one scaling."""
        if not (gamma > 0.0) or not math.isfinite(gamma):
            raise ParameterError("gamma must be a positive finite real")
        p = self.params
        d = self.seq.dimension
        lg = math.log(gamma)
        s0 = int(np.sum(self._forward_rates < lg))
        u0 = int(np.sum(self._backward_rates < -lg))
        near = min(float(np.min(np.abs(self._forward_rates - lg))),
                   float(np.min(np.abs(self._backward_rates + lg))))
        boundary_band = near <= -math.log(p.rho_split)

        ranks = sorted({min(d, max(0, r)) for r in (s0 - 1, s0, s0 + 1, d - u0)},
                       key=lambda r: (abs(r - s0), r))
        certified = []
        best_violation = math.inf
        decay_ok_but_tangent = False
        for s in ranks:
            cand = self._candidate(s)
            fits = []
            violation = 0.0
            if s > 0:
                fits.append(self._side_fit(cand.stable_env, -lg))
            if s < d:
                fits.append(self._side_fit(cand.unstable_env, lg))
            rho = max(f.rho for f in fits)
            residual = max(f.residual for f in fits)
            k_const = max(f.K for f in fits)
            violation += max(0.0, rho - (1.0 - p.delta_fit))
            violation += max(0.0, residual - p.resid_max)
            decay_ok = violation == 0.0
            angle_ok = (not 0 < s < d) or cand.angle >= p.theta_min
            if decay_ok and not angle_ok:
                decay_ok_but_tangent = True
                violation += p.theta_min - cand.angle
            elif not angle_ok:
                violation += p.theta_min - cand.angle
            if decay_ok and angle_ok:
                certified.append((s, cand, rho, residual, k_const))
            best_violation = min(best_violation, violation)

        if certified:
            s, cand, rho, residual, k_const = certified[0]
            return DichotomyVerdict(
                gamma=gamma, outcome="certificate", window=p.window, rank=s,
                stable_basis=cand.stable_basis, unstable_basis=cand.unstable_basis,
                K=k_const, rho=rho, residual=residual,
                margin=(1.0 - p.delta_fit) - rho,
                low_confidence=boundary_band or len(certified) > 1)

        if s0 + u0 != d:
            reason = "splitting-degenerate"
        elif decay_ok_but_tangent:
            reason = "transversality-lost"
        else:
            reason = "decay-fit-failed"
        return DichotomyVerdict(gamma=gamma, outcome="in_spectrum", window=p.window,
                                reason=reason, margin=best_violation,
                                low_confidence=boundary_band)


def test_dichotomy(seq: MatrixSequence, gamma: float,
                   params: DichotomyParams | None = None) -> DichotomyVerdict:
    """One-shot dichotomy test at a single scaling.

    Builds a fresh analyzer; for sweeps over many gamma construct a
    :class:`DichotomyAnalyzer` once or use :func:`estimate_spectrum`.
    """
    return DichotomyAnalyzer(seq, params).verdict(gamma)


@dataclass(frozen=True)
class SpectralInterval:
    """One closed spectral interval [a, b]."""

    a: float
    b: float
    low_confidence: bool = False

    def __post_init__(self):
        if not (0.0 < self.a <= self.b):
            raise ValidationError(f"invalid spectral interval [{self.a}, {self.b}]")

    @property
    def width(self) -> float:
        return self.b - self.a

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.a - tol <= x <= self.b + tol


@dataclass(frozen=True)
class SpectrumEstimate:
    """Ordered spectral intervals with per-gap dichotomy data.

    ``gap_ranks`` has one entry per resolvent gap, from below the first
    interval (rank 0) to above the last (rank d).  ``gap_certificates``
    holds one representative certificate per gap (empty only in the
    degenerate all-in-spectrum case).  ``grid`` records every verdict
    probed during estimation, sorted by gamma.
    """

    intervals: tuple[SpectralInterval, ...]
    gap_ranks: tuple[int, ...]
    gap_certificates: tuple[DichotomyVerdict, ...]
    grid: tuple[DichotomyVerdict, ...]
    refine_tol: float
    m_hat: float
    window: int
    dimension: int
    degenerate: bool = False

    def __post_init__(self):
        if not self.intervals:
            raise ValidationError("spectrum estimate needs at least one interval")
        if len(self.gap_ranks) != len(self.intervals) + 1:
            raise ValidationError("gap rank count must exceed interval count by one")
        for left, right in zip(self.intervals, self.intervals[1:]):
            if not (left.b < right.a):
                raise ValidationError("spectral intervals must be disjoint and ordered")
        for lo, hi in zip(self.gap_ranks, self.gap_ranks[1:]):
            if not (lo < hi):
                raise ValidationError("gap ranks must strictly increase")

    @property
    def hull(self) -> tuple[float, float]:
        return self.intervals[0].a, self.intervals[-1].b

    def covering_interval(self, x: float, tol: float = 0.0) -> SpectralInterval | None:
        for iv in self.intervals:
            if iv.contains(x, tol):
                return iv
        return None

    def verdicts_to_csv(self, path_or_file) -> None:
        rows = ["gamma,outcome,rank,rho,K"]
        for v in self.grid:
            rank = "" if v.rank is None else str(v.rank)
            rho = "" if v.rho is None else format(v.rho, ".17g")
            k = "" if v.K is None else format(v.K, ".17g")
            rows.append(f"{v.gamma:.17g},{v.outcome},{rank},{rho},{k}")
        text = "\n".join(rows) + "\n"
        if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
            with open(path_or_file, "w") as fh:
                fh.write(text)
        else:
            path_or_file.write(text)


def estimate_spectrum(seq: MatrixSequence, *, grid_points: int = 48,
                      refine_tol: float = 1e-3,
                      params: DichotomyParams | None = None,
                      analyzer: DichotomyAnalyzer | None = None) -> SpectrumEstimate:
    """Estimate the dichotomy spectrum as ordered intervals with gap ranks.

    A logarithmic grid spanning the certified norm bound with 10% margin
    is probed first.  Then, until a fixed point, any adjacent probe pair
    that brackets a structure change (certificate/in-spectrum flip, or a
    rank jump between certificates hiding a spectral interval narrower
    than the grid) is split at its geometric midpoint, down to relative
    width refine_tol / 4.  Reported interval endpoints are the bracketing
    resolvent probes, so estimated intervals contain what the window data
    supports; endpoint error is at most about gamma * refine_tol / 4 plus
    the verdict blur delta_fit.

    Adjacent intervals are merged when the data between them does not
    support a gap: overlapping brackets, or equal certificate ranks on
    both sides.  A non-monotone rank pattern that merging cannot repair
    raises :class:`SpectrumConsistencyError`.  If no gamma certifies at
    all, the whole probed range is returned as one low-confidence interval
    rather than fabricating gaps.
    """
    if grid_points < 8:
        raise ParameterError("grid_points must be at least 8")
    if not (0.0 < refine_tol < 0.5):
        raise ParameterError("refine_tol must lie in (0, 0.5)")
    if analyzer is None:
        analyzer = DichotomyAnalyzer(seq, params)
    d = seq.dimension
    m_hat = analyzer.m_hat
    lo = 1.0 / (m_hat * 1.1)
    hi = m_hat * 1.1
    if hi / lo < 1.0 + 8.0 * refine_tol:
        lo /= 1.05
        hi *= 1.05

    probes: dict[float, DichotomyVerdict] = {}

    def at(g: float) -> DichotomyVerdict:
        if g not in probes:
            probes[g] = analyzer.verdict(g)
        return probes[g]

    for g in np.geomspace(lo, hi, grid_points):
        at(float(g))

    tol4 = refine_tol / 4.0
    for _ in range(200):
        keys = sorted(probes)
        fresh = []
        for x, y in zip(keys, keys[1:]):
            if y / x - 1.0 <= tol4:
                continue
            vx, vy = probes[x], probes[y]
            flip = vx.outcome != vy.outcome
            jump = vx.is_certificate and vy.is_certificate and vx.rank != vy.rank
            if flip or jump:
                fresh.append(math.sqrt(x * y))
        if not fresh:
            break
        for g in fresh:
            at(g)
    else:
        raise SpectrumConsistencyError("endpoint refinement did not reach a fixed point")

    keys = sorted(probes)
    verdicts = [probes[k] for k in keys]

    if not any(v.is_certificate for v in verdicts):
        interval = SpectralInterval(keys[0], keys[-1], low_confidence=True)
        return SpectrumEstimate(intervals=(interval,), gap_ranks=(0, d),
                                gap_certificates=(), grid=tuple(verdicts),
                                refine_tol=refine_tol, m_hat=m_hat,
                                window=analyzer.params.window, dimension=d,
                                degenerate=True)

    # raw intervals: outer certificate brackets of in-spectrum runs, plus
    # sub-resolution rank jumps between adjacent certificates
    raw: list[list] = []
    i = 0
    while i < len(keys):
        if verdicts[i].outcome == "in_spectrum":
            j = i
            while j + 1 < len(keys) and verdicts[j + 1].outcome == "in_spectrum":
                j += 1
            lowc = False
            if i > 0:
                a = keys[i - 1]
            else:
                a, lowc = keys[i], True
            if j < len(keys) - 1:
                b = keys[j + 1]
            else:
                b, lowc = keys[j], True
            raw.append([a, b, lowc])
            i = j + 1
        else:
            i += 1
    for (x, vx), (y, vy) in zip(zip(keys, verdicts), zip(keys[1:], verdicts[1:])):
        if vx.is_certificate and vy.is_certificate and vx.rank != vy.rank:
            raw.append([x, y, False])
    raw.sort(key=lambda r: r[0])

    merged: list[list] = []
    for r in raw:
        if merged and r[0] <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], r[1])
            merged[-1][2] = True  # a certificate got absorbed: below resolution
        else:
            merged.append(list(r))

    def gap_certs(lo_edge: float | None, hi_edge: float | None) -> list[DichotomyVerdict]:
        out = []
        for k, v in zip(keys, verdicts):
            if not v.is_certificate:
                continue
            if lo_edge is not None and k < lo_edge:
                continue
            if hi_edge is not None and k > hi_edge:
                continue
            if any(iv[0] < k < iv[1] for iv in merged):
                continue  # swallowed during a merge; not gap evidence
            out.append(v)
        return out

    while True:
        edges: list[tuple[float | None, float | None]] = []
        prev = None
        for iv in merged:
            edges.append((prev, iv[0]))
            prev = iv[1]
        edges.append((prev, None))
        ranks: list[int | None] = []
        reps: list[DichotomyVerdict | None] = []
        for lo_edge, hi_edge in edges:
            certs = gap_certs(lo_edge, hi_edge)
            found = sorted({v.rank for v in certs})
            if len(found) > 1:
                gammas = sorted(v.gamma for v in certs)
                raise SpectrumConsistencyError(
                    f"mixed certificate ranks {found} inside one resolvent gap "
                    f"(gamma in [{gammas[0]:.6g}, {gammas[-1]:.6g}])")
            if not found:
                ranks.append(None)
                reps.append(None)
            else:
                ranks.append(found[0])
                reps.append(max(certs, key=lambda v: (v.margin, -v.gamma)))
        # empty edge gaps can only face the grid boundary
        if ranks[0] is None:
            ranks[0] = 0
            merged[0][2] = True
        if ranks[-1] is None:
            ranks[-1] = d
            merged[-1][2] = True
        if any(r is None for r in ranks):
            raise SpectrumConsistencyError("interior resolvent gap holds no certificate")
        bad = next((idx for idx in range(len(ranks) - 1)
                    if ranks[idx] >= ranks[idx + 1]), None)
        if bad is None:
            if ranks[0] != 0 or ranks[-1] != d:
                raise SpectrumConsistencyError(
                    f"edge gap ranks {ranks[0]}..{ranks[-1]} differ from 0..{d}")
            break
        if ranks[bad] > ranks[bad + 1]:
            raise SpectrumConsistencyError(
                f"certificate rank decreases from {ranks[bad]} to {ranks[bad + 1]} "
                "across a spectral interval")
        # equal ranks around interval `bad`: the data does not support the
        # gap next to it, so merge with the neighboring interval
        if bad + 1 < len(merged):
            merged[bad][1] = merged[bad + 1][1]
            merged[bad][2] = True
            del merged[bad + 1]
        elif bad >= 1:
            merged[bad - 1][1] = merged[bad][1]
            merged[bad - 1][2] = True
            del merged[bad]
        else:
            raise SpectrumConsistencyError(
                "single spectral interval with equal ranks on both sides")

    bound_lo, bound_hi = 1.0 / m_hat, m_hat
    intervals = []
    for a, b, lowc in merged:
        ca, cb = max(a, bound_lo), min(b, bound_hi)
        if ca > cb:  # interval entirely outside the certified bound range
            ca = cb = min(max(a, bound_lo), bound_hi)
            lowc = True
        intervals.append(SpectralInterval(ca, cb, low_confidence=lowc))

    return SpectrumEstimate(intervals=tuple(intervals), gap_ranks=tuple(ranks),
                            gap_certificates=tuple(reps), grid=tuple(verdicts),
                            refine_tol=refine_tol, m_hat=m_hat,
                            window=analyzer.params.window, dimension=d)


def periodic_spectrum_oracle(seq: MatrixSequence, p: int | None = None) -> tuple[float, ...]:
    """Spectrum of a periodic system from its monodromy eigenvalues.

    For period p the spectrum is the finite set {|lambda|^(1/p)} over the
    eigenvalues of X(p, 0), with coinciding moduli collapsed.
    """
    period = p if p is not None else seq.period
    if period is None:
        raise ParameterError("spectrum oracle needs a periodic sequence")
    monodromy = transition(seq, int(period), 0).to_matrix()
    moduli = np.abs(np.linalg.eigvals(monodromy)) ** (1.0 / period)
    points: list[float] = []
    for m in sorted(moduli):
        if not points or m - points[-1] > 1e-12 * max(1.0, m):
            points.append(float(m))
    return tuple(points)


def scalar_spectrum(u: ScalarSequence, params: BohlParams | None = None) -> SpectralInterval:
    """Dichotomy spectrum of a scalar sequence.

    Equals the closed interval between the whole-line lower and upper Bohl
    exponents, so offsets are forced two-sided regardless of ``params``.
    """
    params = replace(params or BohlParams(), two_sided=True)
    est = scalar_bohl_estimate(u, params)
    return SpectralInterval(est.lower, est.upper)
