"""Mechanical verification of spectral containment statements.

Three checks, each producing a :class:`ContainmentReport`:

* fiber containment: Bohl intervals of vectors sampled inside each
  spectral bundle fiber land in the fiber's spectral interval;
* global containment: Bohl intervals of arbitrary vectors land in the
  hull of the spectrum;
* endpoint attainability: for systems with trustworthy diagonal data,
  every interval endpoint is witnessed by a coordinate Bohl exponent.

All sampling is driven by an explicit seed, so reports are reproducible
bit for bit.  Tolerances combine the spectrum refinement tolerance with
the finite-window spread of each Bohl estimate.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .bohl import BohlParams, bohl_exponents, scalar_bohl_estimate
from .bundles import SpectralBundleFiber, bundle_fibers, restricted_fiber_system
from .dichotomy import SpectrumEstimate
from .errors import ParameterError
from .sequences import MatrixSequence

TOLERANCE_FACTOR = 5.0


@dataclass(frozen=True)
class SampleRow:
    """One verified claim: a Bohl interval against a target interval."""

    label: str
    fiber_index: int | None
    xi: tuple[float, ...]
    lower: float
    upper: float
    target: tuple[float, float]
    tolerance: float
    margin: float
    passed: bool
    escalated: bool = False

    def csv(self) -> str:
        xi = ";".join(format(v, ".17g") for v in self.xi)
        return ",".join([
            self.label.replace(",", ";"),
            "" if self.fiber_index is None else str(self.fiber_index),
            xi,
            format(self.lower, ".17g"), format(self.upper, ".17g"),
            format(self.target[0], ".17g"), format(self.target[1], ".17g"),
            format(self.tolerance, ".17g"), format(self.margin, ".17g"),
            "pass" if self.passed else "fail",
            "yes" if self.escalated else "no",
        ])


@dataclass(frozen=True)
class ContainmentReport:
    system_id: str
    check: str
    rows: tuple[SampleRow, ...]
    base_tolerance: float
    status: str  # "pass" | "fail" | "refused"
    notes: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @property
    def pass_rate(self) -> float:
        if not self.rows:
            return 0.0 if self.status != "pass" else 1.0
        return sum(r.passed for r in self.rows) / len(self.rows)

    def failures(self) -> tuple[SampleRow, ...]:
        return tuple(r for r in self.rows if not r.passed)

    def summary(self) -> str:
        head = (f"{self.check} on {self.system_id}: {self.status} "
                f"({sum(r.passed for r in self.rows)}/{len(self.rows)} rows, "
                f"base tolerance {self.base_tolerance:.2e})")
        return "\n".join([head, *self.notes])

    def rows_to_csv(self) -> str:
        header = ("label,fiber,xi,bohl_lower,bohl_upper,target_lower,"
                  "target_upper,tolerance,margin,verdict,escalated")
        return "\n".join([header, *(r.csv() for r in self.rows)]) + "\n"


def _default_id(seq: MatrixSequence) -> str:
    parts = [seq.kind, f"d{seq.dimension}"]
    seed = getattr(seq, "seed", None)
    if seed is not None:
        parts.append(f"seed{seed}")
    return "-".join(parts)


def _sample_row(seq: MatrixSequence, label: str, fiber_index: int | None,
                orbit_vec: np.ndarray, report_xi: np.ndarray,
                target: tuple[float, float], base_tol: float,
                params: BohlParams, escalate: bool,
                wide_system=None) -> SampleRow:
    est = bohl_exponents(seq, orbit_vec, params)
    escalated = False
    tol = base_tol + est.spread
    margin = min(est.lower - target[0] + tol, target[1] + tol - est.upper)
    if margin < 0.0 and escalate:
        wide = replace(params, window=4 * params.window)
        wide_seq = seq if wide_system is None else wide_system()
        est = bohl_exponents(wide_seq, orbit_vec, wide)
        tol = base_tol + est.spread
        margin = min(est.lower - target[0] + tol, target[1] + tol - est.upper)
        escalated = True
    return SampleRow(label=label, fiber_index=fiber_index, xi=tuple(report_xi),
                     lower=est.lower, upper=est.upper, target=target,
                     tolerance=tol, margin=margin, passed=margin >= 0.0,
                     escalated=escalated)


def _evaluate_rows(tasks: list[tuple], jobs: int) -> list[SampleRow]:
    """Run `_sample_row` over prepared argument tuples, order preserved.

    The sample vectors are all drawn before evaluation starts, so the
    worker count never touches the results, only the wall clock.
    """
    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda t: _sample_row(*t), tasks))
    return [_sample_row(*t) for t in tasks]


def _wide_restriction(seq: MatrixSequence, spectrum: SpectrumEstimate,
                      index: int, window: int):
    """Lazy, memoized 4x-window rebuild of a restricted fiber system."""
    cache: dict = {}

    def build() -> MatrixSequence:
        if "sys" not in cache:
            cache["sys"] = restricted_fiber_system(seq, spectrum, index,
                                                   window=window)[1]
        return cache["sys"]

    return build


def _unit_samples(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    out = np.empty((count, dim))
    for i in range(count):
        v = rng.standard_normal(dim)
        nrm = np.linalg.norm(v)
        while nrm < 1e-12:
            v = rng.standard_normal(dim)
            nrm = np.linalg.norm(v)
        out[i] = v / nrm
    return out


def verify_fiber_containment(seq: MatrixSequence, spectrum: SpectrumEstimate,
                             fibers: tuple[SpectralBundleFiber, ...] | None = None,
                             *, samples_per_fiber: int = 20,
                             tolerance: float | None = None,
                             seed: int = 0,
                             params: BohlParams | None = None,
                             escalate: bool = False,
                             jobs: int = 1,
                             system_id: str | None = None) -> ContainmentReport:
    """Check that vectors inside each fiber keep their Bohl interval
    inside the matching spectral interval.

    Fibers default to :func:`bundle_fibers` of the estimate.  Each sample
    is a unit vector with seeded Gaussian coordinates in the fiber basis;
    the claim passes when ``[lower, upper]`` of its Bohl estimate lies in
    the target interval inflated by the tolerance.  With ``escalate`` a
    failing sample is retried once at four times the Bohl window.

    Diagonal systems are sampled directly.  Any other kind goes through
    :func:`dichospec.bundles.restricted_fiber_system`, which tracks the
    fiber frame across the window; without that, rounding leaks every
    sample onto the fastest fiber within a few dozen steps.
    """
    if fibers is None:
        fibers = bundle_fibers(spectrum)
    if samples_per_fiber < 1:
        raise ParameterError("samples_per_fiber must be at least 1")
    params = params or BohlParams()
    base_tol = tolerance if tolerance is not None else TOLERANCE_FACTOR * spectrum.refine_tol
    rng = np.random.default_rng(seed)
    tasks: list[tuple] = []
    notes: list[str] = []
    direct = seq.kind == "diagonal"
    for fiber in fibers:
        interval = spectrum.intervals[fiber.index - 1]
        target = (interval.a, interval.b)
        coeffs = _unit_samples(rng, samples_per_fiber, fiber.dimension)
        if direct:
            # coordinate axes are exactly invariant, so the raw system
            # tracks any fiber without leaking onto faster ones
            basis, orbit_system, wide = fiber.basis, seq, None
        else:
            basis, orbit_system = restricted_fiber_system(
                seq, spectrum, fiber.index, window=params.window)
            wide = (None if orbit_system is seq else
                    _wide_restriction(seq, spectrum, fiber.index, 4 * params.window))
        for s in range(samples_per_fiber):
            c = coeffs[s]
            xi = basis @ c
            orbit_vec = xi if orbit_system is seq else c
            tasks.append((orbit_system, f"fiber {fiber.index} sample {s + 1}",
                          fiber.index, orbit_vec, xi, target, base_tol, params,
                          escalate, wide))
    rows = _evaluate_rows(tasks, jobs)
    escalations = sum(r.escalated for r in rows)
    if escalations:
        notes.append(f"{escalations} sample(s) re-run at 4x window")
    status = "pass" if all(r.passed for r in rows) else "fail"
    return ContainmentReport(system_id=system_id or _default_id(seq),
                             check="fiber-containment", rows=tuple(rows),
                             base_tolerance=base_tol, status=status,
                             notes=tuple(notes))


def verify_global_containment(seq: MatrixSequence, spectrum: SpectrumEstimate,
                              *, samples: int = 50,
                              tolerance: float | None = None,
                              seed: int = 0,
                              params: BohlParams | None = None,
                              escalate: bool = False,
                              jobs: int = 1,
                              system_id: str | None = None) -> ContainmentReport:
    """Check that arbitrary unit vectors keep their Bohl interval inside
    the hull of the spectrum (first lower endpoint to last upper one)."""
    if samples < 1:
        raise ParameterError("samples must be at least 1")
    params = params or BohlParams()
    base_tol = tolerance if tolerance is not None else TOLERANCE_FACTOR * spectrum.refine_tol
    target = spectrum.hull
    rng = np.random.default_rng(seed)
    vectors = _unit_samples(rng, samples, seq.dimension)
    rows = _evaluate_rows([(seq, f"global sample {s + 1}", None, vectors[s],
                            vectors[s], target, base_tol, params, escalate)
                           for s in range(samples)], jobs)
    notes: list[str] = []
    escalations = sum(r.escalated for r in rows)
    if escalations:
        notes.append(f"{escalations} sample(s) re-run at 4x window")
    status = "pass" if all(r.passed for r in rows) else "fail"
    return ContainmentReport(system_id=system_id or _default_id(seq),
                             check="global-containment", rows=tuple(rows),
                             base_tolerance=base_tol, status=status,
                             notes=tuple(notes))


def verify_endpoint_attainability(seq: MatrixSequence, spectrum: SpectrumEstimate,
                                  *, tolerance: float | None = None,
                                  scalar_params: BohlParams | None = None,
                                  significance=None,
                                  system_id: str | None = None) -> ContainmentReport:
    """Check that every spectral interval endpoint is attained by a
    coordinate direction.

    Needs per-coordinate Bohl data, which only diagonal systems carry
    outright.  Upper triangular systems are accepted when their diagonal
    is significant (see :func:`dichospec.triangularize.diagonal_significance`,
    computed here when not supplied); anything else is refused rather than
    guessed at.
    """
    sid = system_id or _default_id(seq)
    base_tol = tolerance if tolerance is not None else TOLERANCE_FACTOR * spectrum.refine_tol
    if seq.kind == "diagonal":
        coords = tuple(seq.entries)
    elif seq.kind == "upper-triangular":
        if significance is None:
            from .triangularize import diagonal_significance
            significance = diagonal_significance(seq, spectrum=spectrum)
        if not significance.significant:
            return ContainmentReport(
                system_id=sid, check="endpoint-attainability", rows=(),
                base_tolerance=base_tol, status="refused",
                notes=("triangular diagonal is not significant; its entries "
                       "do not carry the spectrum, so no endpoint witnesses "
                       "can be read off",))
        coords = tuple(seq.diagonal)
    else:
        return ContainmentReport(
            system_id=sid, check="endpoint-attainability", rows=(),
            base_tolerance=base_tol, status="refused",
            notes=(f"kind {seq.kind!r} exposes no coordinate Bohl data; "
                   "triangularize first and confirm diagonal significance",))
    scalar_params = scalar_params or replace(BohlParams(), two_sided=True)
    estimates = [scalar_bohl_estimate(u, scalar_params) for u in coords]
    d = seq.dimension
    rows: list[SampleRow] = []
    for j, interval in enumerate(spectrum.intervals, start=1):
        for side, endpoint in (("lower", interval.a), ("upper", interval.b)):
            best = None
            for i, est in enumerate(estimates):
                value = est.lower if side == "lower" else est.upper
                tol = base_tol + est.spread
                margin = tol - abs(value - endpoint)
                if best is None or margin > best[3]:
                    best = (i, value, tol, margin)
            i, value, tol, margin = best
            xi = np.zeros(d)
            xi[i] = 1.0
            rows.append(SampleRow(
                label=f"interval {j} {side} endpoint", fiber_index=j,
                xi=tuple(xi), lower=value, upper=value,
                target=(endpoint, endpoint), tolerance=tol, margin=margin,
                passed=margin >= 0.0))
    status = "pass" if rows and all(r.passed for r in rows) else "fail"
    return ContainmentReport(system_id=sid, check="endpoint-attainability",
                             rows=tuple(rows), base_tolerance=base_tol,
                             status=status, notes=())
