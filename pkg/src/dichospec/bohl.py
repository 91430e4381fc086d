"""Finite-window estimation of Bohl exponents and general growth exponents.

The upper and lower Bohl exponents of a nonzero solution are the limsup and
liminf of the windowed geometric growth rates

    (||X(m+g, 0) xi|| / ||X(m, 0) xi||)^(1/g)

as the gap g grows.  The estimator samples every gap g in [gap_min, window],
records the extremal rates over all window offsets m, and aggregates the
largest tail_fraction of the gaps: the upper exponent is the max of the
per-gap maxima over that tail, the lower exponent the min of the per-gap
minima.  The per-gap envelopes are kept on the result for convergence
diagnostics, since the underlying limits carry no convergence rate.

Offsets m range over [0, window - g] by default.  The ``two_sided`` flag
extends them to [-window, window - g], which is needed to see whole-line
behavior of systems whose growth differs on the two half-lines.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .errors import ParameterError, ValidationError
from .linalg import batched_spectral_norm
from .sequences import MatrixSequence, ScalarSequence
from .transition import WindowProducts, orbit_lognorms

DEFAULT_WINDOW = 2048
DEFAULT_GAP_MIN = 16
DEFAULT_TAIL_FRACTION = 0.2


@dataclass(frozen=True)
class BohlParams:
    """Window layout shared by all growth-rate estimators.

    window
        Largest gap sampled; orbits are evaluated on [0, window] (one-sided)
        or [-window, window] (two-sided).
    gap_min
        Smallest gap entering the envelopes; short gaps only measure
        single-step noise.
    tail_fraction
        Fraction (from the top) of the sampled gaps used for the limsup and
        liminf aggregates.
    two_sided
        Extend window offsets over the negative half-line as well.
    """

    window: int = DEFAULT_WINDOW
    gap_min: int = DEFAULT_GAP_MIN
    tail_fraction: float = DEFAULT_TAIL_FRACTION
    two_sided: bool = False

    def __post_init__(self):
        if self.gap_min < 1:
            raise ParameterError("gap_min must be at least 1")
        if self.window < 2 * self.gap_min:
            raise ParameterError(
                f"window {self.window} too small: need window >= 2 * gap_min = {2 * self.gap_min}")
        if not (0.0 < self.tail_fraction < 1.0):
            raise ParameterError("tail_fraction must lie strictly between 0 and 1")

    def gaps(self) -> np.ndarray:
        return np.arange(self.gap_min, self.window + 1)

    def tail_count(self, n_gaps: int) -> int:
        return max(1, int(round(self.tail_fraction * n_gaps)))

    def orbit_span(self) -> tuple[int, int]:
        return (-self.window, self.window) if self.two_sided else (0, self.window)


def _envelopes(lognorms: np.ndarray, gaps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-gap (min, max) of exp((L[m+g] - L[m]) / g) over all offsets m."""
    lo = np.empty(len(gaps))
    hi = np.empty(len(gaps))
    for i, g in enumerate(gaps):
        diffs = (lognorms[g:] - lognorms[:-g]) / g
        lo[i] = diffs.min()
        hi[i] = diffs.max()
    return np.exp(lo), np.exp(hi)


@dataclass(frozen=True)
class BohlEstimate:
    """Windowed Bohl-exponent estimate with per-gap rate envelopes."""

    upper: float
    lower: float
    gaps: np.ndarray
    min_rates: np.ndarray
    max_rates: np.ndarray
    params: BohlParams

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValidationError(
                f"lower estimate {self.lower} exceeds upper estimate {self.upper}")

    @property
    def tail_slice(self) -> slice:
        return slice(len(self.gaps) - self.params.tail_count(len(self.gaps)), len(self.gaps))

    @property
    def spread(self) -> float:
        """Residual variation of the envelopes over the aggregation tail.

        Measures how far the tail rates are from having converged; useful as
        an additive tolerance when comparing against other estimates.
        """
        t = self.tail_slice
        up = float(self.max_rates[t].max() - self.max_rates[t].min())
        lo = float(self.min_rates[t].max() - self.min_rates[t].min())
        return max(up, lo)

    def envelope_at(self, g: int) -> tuple[float, float]:
        idx = np.searchsorted(self.gaps, g)
        if idx >= len(self.gaps) or self.gaps[idx] != g:
            raise ParameterError(f"gap {g} not sampled")
        return float(self.min_rates[idx]), float(self.max_rates[idx])

    def envelopes_to_csv(self, path_or_file) -> None:
        """Write rows  g, min_rate, max_rate  for convergence plots."""
        rows = ["g,min_rate,max_rate"]
        for g, lo, hi in zip(self.gaps, self.min_rates, self.max_rates):
            rows.append(f"{int(g)},{lo:.17g},{hi:.17g}")
        text = "\n".join(rows) + "\n"
        if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
            with open(path_or_file, "w") as fh:
                fh.write(text)
        else:
            path_or_file.write(text)


def _aggregate(gaps: np.ndarray, min_rates: np.ndarray, max_rates: np.ndarray,
               params: BohlParams) -> BohlEstimate:
    count = params.tail_count(len(gaps))
    upper = float(max_rates[-count:].max())
    lower = float(min_rates[-count:].min())
    return BohlEstimate(upper=upper, lower=lower, gaps=gaps,
                        min_rates=min_rates, max_rates=max_rates, params=params)


def bohl_exponents(seq: MatrixSequence, xi: np.ndarray,
                   params: BohlParams | None = None) -> BohlEstimate:
    """Estimate the upper and lower Bohl exponents of the solution through xi.

    The initial vector is normalized internally (growth rates are
    homogeneous of degree zero in xi), so scaling xi by a power of two
    reproduces the estimate bit for bit.
    """
    params = params or BohlParams()
    xi = np.asarray(xi, dtype=float).reshape(-1)
    nrm = float(np.linalg.norm(xi))
    if nrm == 0.0:
        raise ParameterError("Bohl exponents are undefined for the zero solution")
    orbit = orbit_lognorms(seq, xi / nrm, params.orbit_span())
    gaps = params.gaps()
    min_rates, max_rates = _envelopes(orbit.lognorms, gaps)
    return _aggregate(gaps, min_rates, max_rates, params)


def scalar_bohl(u: ScalarSequence, params: BohlParams | None = None) -> tuple[float, float]:
    """(lower, upper) Bohl exponents of a scalar sequence.

    Rates are extremal geometric means of |u| over sliding windows; no
    initial condition is involved.  Offsets follow ``params.two_sided``
    exactly as in :func:`bohl_exponents`.
    """
    est = scalar_bohl_estimate(u, params)
    return est.lower, est.upper


def scalar_bohl_estimate(u: ScalarSequence, params: BohlParams | None = None) -> BohlEstimate:
    """Full envelope form of :func:`scalar_bohl`."""
    params = params or BohlParams()
    lo, hi = params.orbit_span()
    vals = u.window(lo, hi - 1)
    if np.any(vals == 0.0):
        n = lo + int(np.argmax(vals == 0.0))
        raise ValidationError(f"u({n}) = 0 violates the nonvanishing assumption")
    lognorms = np.concatenate([[0.0], np.cumsum(np.log(np.abs(vals)))])
    gaps = params.gaps()
    min_rates, max_rates = _envelopes(lognorms, gaps)
    return _aggregate(gaps, min_rates, max_rates, params)


@dataclass(frozen=True)
class GeneralExponents:
    """Extremal growth exponents of the full transition operator.

    ``senior`` is the tail-aggregated limsup of ||X(m+g, m)||^(1/g) over
    offsets m; ``junior`` the liminf of the smallest singular value of
    X(m+g, m) to the power 1/g.  Together they bound the Bohl exponents of
    every nonzero solution.
    """

    senior: float
    junior: float
    gaps: np.ndarray
    senior_rates: np.ndarray
    junior_rates: np.ndarray
    params: BohlParams

    def __post_init__(self):
        if self.junior > self.senior:
            raise ValidationError(
                f"junior estimate {self.junior} exceeds senior estimate {self.senior}")


def general_exponents(seq: MatrixSequence,
                      params: BohlParams | None = None) -> GeneralExponents:
    """Estimate the senior and junior general exponents of the system.

    The senior rate at gap g maximizes the spectral norm of X(m+g, m) over
    offsets m.  The junior rate minimizes the smallest singular value,
    evaluated as the reciprocal norm of the inverse product; the inverse
    factors are multiplied in reversed order so only largest-singular-value
    information of well-scaled products is ever used.  Only the aggregation
    tail of the gap range is sampled (each gap costs a full product sweep).
    """
    params = params or BohlParams()
    lo, hi = params.orbit_span()
    factors = seq.window(lo, hi - 1)
    all_gaps = params.gaps()
    count = params.tail_count(len(all_gaps))
    gaps = all_gaps[-count:]

    forward = WindowProducts(factors)
    inverse = WindowProducts(np.linalg.inv(factors)[::-1])

    senior_rates = np.empty(len(gaps))
    junior_rates = np.empty(len(gaps))
    for i, g in enumerate(gaps):
        max_log, _ = forward.max_log_norm(int(g))
        senior_rates[i] = math.exp(max_log / g)
        max_inv_log, _ = inverse.max_log_norm(int(g))
        junior_rates[i] = math.exp(-max_inv_log / g)

    return GeneralExponents(senior=float(senior_rates.max()),
                            junior=float(junior_rates.min()),
                            gaps=gaps, senior_rates=senior_rates,
                            junior_rates=junior_rates, params=params)
