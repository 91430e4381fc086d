"""Transition operators of x(n+1) = A(n) x(n) with overflow-safe scaling.

The two-parameter transition operator is

    X(m, n) = A(m-1) ... A(n)              for m > n,
    X(n, n) = I,
    X(m, n) = A(m)^-1 ... A(n-1)^-1        for m < n,

so that x(m) = X(m, n) x(n) along solutions and the cocycle identity
X(k, l) X(l, j) = X(k, j) holds for all integers.  Norms of these products
grow or decay geometrically, so nothing here ever materializes a bare
product over a long window: matrices are carried as a unit-size core plus
a natural-log scale (:class:`ScaledMatrix`), orbits are renormalized every
step (:func:`orbit_lognorms`), and window products over many offsets are
built by a doubling scheme on normalized factors (:class:`WindowProducts`).
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError, WindowCapError
from .linalg import batched_spectral_norm, spectral_norm
from .sequences import MatrixSequence

# Hard cap on the number of factors in a single requested product.
DEFAULT_WINDOW_CAP = 1_000_000


def _frobenius(a: np.ndarray) -> float:
    return float(np.sqrt(np.square(a).sum()))


@dataclass(frozen=True)
class ScaledMatrix:
    """A matrix stored as  exp(log_scale) * core  with unit-size core.

    The core is renormalized after every multiplication (by its Frobenius
    norm, which for a d-by-d matrix pins the spectral norm of the core to
    [1/sqrt(d), 1]), so products over arbitrarily long windows stay inside
    floating point range; only the scalar ``log_scale`` grows.  Reported
    quantities such as :meth:`log_norm` always refer to the spectral norm
    of the represented matrix.
    """

    core: np.ndarray
    log_scale: float

    @classmethod
    def identity(cls, d: int) -> "ScaledMatrix":
        return cls(core=np.eye(d), log_scale=0.0)

    @classmethod
    def from_matrix(cls, a: np.ndarray) -> "ScaledMatrix":
        a = np.asarray(a, dtype=float)
        nrm = _frobenius(a)
        if nrm == 0.0 or not math.isfinite(nrm):
            raise ParameterError("cannot scale a zero or non-finite matrix")
        return cls(core=a / nrm, log_scale=math.log(nrm))

    def left_multiplied(self, a: np.ndarray) -> "ScaledMatrix":
        """Scaled form of  a @ self."""
        core = a @ self.core
        nrm = _frobenius(core)
        if nrm == 0.0:
            raise ParameterError("product collapsed to zero")
        return ScaledMatrix(core=core / nrm, log_scale=self.log_scale + math.log(nrm))

    def compose(self, other: "ScaledMatrix") -> "ScaledMatrix":
        """Scaled form of  self @ other."""
        core = self.core @ other.core
        nrm = _frobenius(core)
        if nrm == 0.0:
            raise ParameterError("product collapsed to zero")
        return ScaledMatrix(core=core / nrm,
                            log_scale=self.log_scale + other.log_scale + math.log(nrm))

    def log_norm(self) -> float:
        """log of the spectral norm of the represented matrix."""
        return self.log_scale + math.log(spectral_norm(self.core))

    def to_matrix(self) -> np.ndarray:
        """Materialize; may overflow to inf or underflow to 0 for long windows."""
        return self.core * math.exp(self.log_scale)

    def relative_distance(self, other: "ScaledMatrix") -> float:
        """|| self - other || / max(||self||, ||other||), scale-aligned."""
        ref = max(self.log_scale, other.log_scale)
        a = self.core * math.exp(self.log_scale - ref)
        b = other.core * math.exp(other.log_scale - ref)
        denom = max(spectral_norm(a), spectral_norm(b))
        if denom == 0.0:
            return 0.0
        return spectral_norm(a - b) / denom


def transition(seq: MatrixSequence, m: int, n: int, *,
               window_cap: int = DEFAULT_WINDOW_CAP) -> ScaledMatrix:
    """Transition operator X(m, n) as a :class:`ScaledMatrix`.

    Parameters
    ----------
    seq : MatrixSequence
        Coefficient sequence; every factor in the window must be invertible.
    m, n : int
        Target and base time.  ``m > n`` multiplies forward factors,
        ``m < n`` multiplies inverse factors, ``m == n`` is the identity.
    window_cap : int
        Upper bound on |m - n|; longer requests raise :class:`WindowCapError`.
    """
    m, n = int(m), int(n)
    if abs(m - n) > window_cap:
        raise WindowCapError(f"requested product over {abs(m - n)} steps exceeds cap {window_cap}")
    acc = ScaledMatrix.identity(seq.dimension)
    if m > n:
        factors = seq.window(n, m - 1)
        for a in factors:
            acc = acc.left_multiplied(a)
    elif m < n:
        factors = seq.window(m, n - 1)
        inverses = np.linalg.inv(factors)
        for j in range(len(inverses) - 1, -1, -1):
            acc = acc.left_multiplied(inverses[j])
    return acc


@dataclass(frozen=True)
class OrbitLog:
    """Renormalized orbit of one initial vector.

    ``lognorms[k]`` is log ||X(start + k, 0) xi|| and ``directions[k]`` the
    corresponding unit vector, for k = 0 .. len-1.
    """

    xi: np.ndarray
    start: int
    lognorms: np.ndarray
    directions: np.ndarray

    @property
    def span(self) -> tuple[int, int]:
        return self.start, self.start + len(self.lognorms) - 1

    def index_of(self, n: int) -> int:
        lo, hi = self.span
        if not (lo <= n <= hi):
            raise ParameterError(f"n={n} outside orbit span [{lo}, {hi}]")
        return n - self.start

    def lognorm_at(self, n: int) -> float:
        return float(self.lognorms[self.index_of(n)])

    def direction_at(self, n: int) -> np.ndarray:
        return self.directions[self.index_of(n)]

    def to_csv(self, path_or_file) -> None:
        """Write rows  n, lognorm, u_0, ..., u_{d-1}."""
        d = self.directions.shape[1]
        header = "n,lognorm," + ",".join(f"u_{i}" for i in range(d))
        rows = [header]
        for k, n in enumerate(range(self.start, self.start + len(self.lognorms))):
            cols = [str(n), format(self.lognorms[k], ".17g")]
            cols += [format(v, ".17g") for v in self.directions[k]]
            rows.append(",".join(cols))
        text = "\n".join(rows) + "\n"
        if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
            with open(path_or_file, "w") as fh:
                fh.write(text)
        else:
            path_or_file.write(text)


def orbit_lognorms(seq: MatrixSequence, xi: np.ndarray,
                   span: tuple[int, int], *,
                   window_cap: int = DEFAULT_WINDOW_CAP) -> OrbitLog:
    """log ||X(n, 0) xi|| for n over an integer span containing 0.

    The orbit is propagated one step at a time with renormalization after
    each step, so the log-norms are exact up to rounding while the stored
    vectors stay unit size.
    """
    lo, hi = int(span[0]), int(span[1])
    if not (lo <= 0 <= hi):
        raise ParameterError("orbit span must contain the base time 0")
    if hi - lo > window_cap:
        raise WindowCapError(f"orbit span of {hi - lo} steps exceeds cap {window_cap}")
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if xi.shape[0] != seq.dimension:
        raise ParameterError(f"xi has length {xi.shape[0]}, system dimension is {seq.dimension}")
    nrm0 = float(np.linalg.norm(xi))
    if nrm0 == 0.0 or not math.isfinite(nrm0):
        raise ParameterError("initial vector must be nonzero and finite")

    length = hi - lo + 1
    d = seq.dimension
    lognorms = np.empty(length)
    directions = np.empty((length, d))
    base = -lo  # index of n = 0

    u = xi / nrm0
    acc = math.log(nrm0)
    lognorms[base] = acc
    directions[base] = u

    if hi > 0:
        factors = seq.window(0, hi - 1)
        v, run = u, acc
        for k in range(hi):
            v = factors[k] @ v
            nrm = float(np.linalg.norm(v))
            run += math.log(nrm)
            v = v / nrm
            lognorms[base + k + 1] = run
            directions[base + k + 1] = v
    if lo < 0:
        factors = seq.window(lo, -1)
        inverses = np.linalg.inv(factors)
        v, run = u, acc
        for k in range(-lo):
            # step from n = -k down to n = -k-1 uses A(-k-1)^-1
            v = inverses[len(inverses) - 1 - k] @ v
            nrm = float(np.linalg.norm(v))
            run += math.log(nrm)
            v = v / nrm
            lognorms[base - k - 1] = run
            directions[base - k - 1] = v

    lognorms.flags.writeable = False
    directions.flags.writeable = False
    return OrbitLog(xi=xi.copy(), start=lo, lognorms=lognorms, directions=directions)


class WindowProducts:
    """All-offset window products of a factor sequence, built by doubling.

    Given factors F(0), ..., F(m-1) (small k x k matrices, typically the
    one-step maps of a cocycle restricted to an invariant family), this
    precomputes normalized products of every dyadic length at every offset:

        P_g(l) = F(l+g-1) ... F(l),   l = 0 .. m-g.

    Arbitrary gaps are assembled from the dyadic levels by binary
    decomposition, so no inverse of an ill-conditioned long product is
    ever formed and only largest-singular-value information is trusted.
    """

    def __init__(self, factors: np.ndarray, max_gap: int | None = None):
        factors = np.asarray(factors, dtype=float)
        if factors.ndim != 3 or factors.shape[1] != factors.shape[2]:
            raise ParameterError("factors must be a (m, k, k) stack")
        m = factors.shape[0]
        if m == 0:
            raise ParameterError("factor sequence is empty")
        self.count = m
        self.max_gap = m if max_gap is None else min(int(max_gap), m)
        nrm = np.sqrt(np.einsum("lij,lij->l", factors, factors))
        if np.any(nrm == 0.0):
            raise ParameterError("zero factor in window product sequence")
        cores = factors / nrm[:, None, None]
        logs = np.log(nrm)
        self._levels = [(cores, logs)]
        h = 1
        while 2 * h <= self.max_gap:
            cores, logs = self._levels[-1]
            npos = m - 2 * h + 1
            prod = np.matmul(cores[h: h + npos], cores[:npos])
            lg = logs[h: h + npos] + logs[:npos]
            nrm = np.sqrt(np.einsum("lij,lij->l", prod, prod))
            prod /= nrm[:, None, None]
            lg = lg + np.log(nrm)
            self._levels.append((prod, lg))
            h *= 2

    def products(self, g: int) -> tuple[np.ndarray, np.ndarray]:
        """Normalized cores and log scales of all length-g window products."""
        g = int(g)
        if not (1 <= g <= self.max_gap):
            raise ParameterError(f"gap {g} outside [1, {self.max_gap}]")
        npos = self.count - g + 1
        cores = None
        logs = None
        offset = 0
        for j in range(len(self._levels) - 1, -1, -1):
            h = 1 << j
            if not (g & h):
                continue
            lc, ll = self._levels[j]
            seg_c = lc[offset: offset + npos]
            seg_l = ll[offset: offset + npos]
            if cores is None:
                cores, logs = seg_c.copy(), seg_l.copy()
            else:
                # the accumulated product covers [l, l+offset); the new segment
                # covers the higher indices [l+offset, l+offset+2^j) and so
                # multiplies from the left
                cores = np.matmul(seg_c, cores)
                logs = logs + seg_l
                nrm = np.sqrt(np.einsum("lij,lij->l", cores, cores))
                cores = cores / nrm[:, None, None]
                logs = logs + np.log(nrm)
            offset += h
        return cores, logs

    def max_log_norm(self, g: int) -> tuple[float, int]:
        """Max over offsets of log ||P_g(l)|| (spectral norm) and the arg max."""
        cores, logs = self.products(g)
        vals = np.log(batched_spectral_norm(cores)) + logs
        pos = int(np.argmax(vals))
        return float(vals[pos]), pos

    def envelope(self, gaps: Iterable[int]) -> dict[int, float]:
        """Per-gap maxima of log window-product norms."""
        return {int(g): self.max_log_norm(g)[0] for g in gaps}
