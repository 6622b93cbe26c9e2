"""Adaptive quadrature on (0, inf) with a three-state convergence verdict.

Proper intervals use a nested 7-point Gauss / 15-point Kronrod pair with
global adaptive bisection.  Integrals toward 0 or infinity are summed over
dyadic shells; convergence is decided from the power-law exponent of the
integrand at the endpoint and, in the borderline band, from the growth of
the shell sums themselves.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import IntegrandError, PreconditionError

__all__ = [
    "Verdict",
    "Endpoint",
    "Confidence",
    "QuadOutcome",
    "ExponentEstimate",
    "integrate",
    "improper_to_zero",
    "improper_to_infinity",
    "endpoint_exponent",
    "TOL_ABS",
    "EXPONENT_MARGIN",
]

TOL_ABS = 1e-12
MAX_INTERVALS = 10_000
MAX_SHELLS = 200
EXPONENT_MARGIN = 0.1
GROWTH_RATIO = 1.05
DECAY_RATIO = 0.95
RUN_LENGTH = 8
# a stable shell ratio at or above this counts as non-decaying
PLATEAU_RATIO = 1.0 - 1e-4
STABLE_SPREAD = 1e-6
MIN_SHELLS = 6
PROBES = 12
PROBE_OFFSET = 10
FIT_RMS_HIGH = 0.05

# Kronrod abscissae (positive half, descending) and weights; the Gauss
# 7-point nodes are the odd-indexed Kronrod nodes.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


class Verdict(enum.Enum):
    CONVERGED = "Converged"
    DIVERGED = "Diverged"
    INCONCLUSIVE = "Inconclusive"


class Endpoint(enum.Enum):
    ZERO = "Zero"
    INFINITY = "Infinity"


class Confidence(enum.Enum):
    HIGH = "High"
    LOW = "Low"


@dataclass(frozen=True)
class QuadOutcome:
    """Result of a (possibly improper) integral.

    ``value`` is the integral only when ``verdict`` is CONVERGED.  For a
    DIVERGED verdict it is the partial integral over the largest subinterval
    that was resolved before divergence was declared.  ``method`` records
    how the verdict was reached.
    """

    value: float
    error_estimate: float
    verdict: Verdict
    evaluations: int = 0
    method: str = "quadrature"

    @property
    def converged(self):
        return self.verdict is Verdict.CONVERGED

    def to_dict(self):
        return {
            "value": self.value,
            "error_estimate": self.error_estimate,
            "verdict": self.verdict.value,
            "evaluations": self.evaluations,
            "method": self.method,
        }


@dataclass(frozen=True)
class ExponentEstimate:
    slope: float
    confidence: Confidence
    residual: float = 0.0


class _Counted:
    """Integrand wrapper: vectorized evaluation, call counting, finiteness."""

    def __init__(self, f):
        self.f = f
        self.count = 0

    def __call__(self, x):
        self.count += x.size
        with np.errstate(all="ignore"):
            y = np.asarray(self.f(x), dtype=float)
        if y.shape != x.shape:
            y = np.broadcast_to(y, x.shape).astype(float)
        if not np.all(np.isfinite(y)):
            i = int(np.argmax(~np.isfinite(y)))
            raise IntegrandError(float(x.flat[i]), float(y.flat[i]))
        return y


def _gk15(f, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    y = f(c + h * _NODES)
    k = h * float(np.dot(_KW, y))
    g = h * float(np.dot(_GW, y))
    return k, abs(k - g)


def _integrate_counted(f, a, b, tol, tol_abs, points=()):
    if a == b:
        return QuadOutcome(0.0, 0.0, Verdict.CONVERGED, f.count)
    edges = [a] + sorted(x for x in set(points) if a < x < b) + [b]
    heap = []
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, e = _gk15(f, lo, hi)
        heapq.heappush(heap, (-e, lo, hi, val))
        total += val
        err += e
    while err > max(tol * abs(total), tol_abs):
        if len(heap) >= MAX_INTERVALS:
            return QuadOutcome(total, err, Verdict.INCONCLUSIVE, f.count)
        neg_e, lo, hi, val = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            # cannot bisect further in floating point
            return QuadOutcome(total, err, Verdict.INCONCLUSIVE, f.count)
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        total += v1 + v2 - val
        err += e1 + e2 + neg_e
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
    # recompute the sums from scratch to shed accumulated round-off
    total = math.fsum(item[3] for item in heap)
    err = math.fsum(-item[0] for item in heap)
    return QuadOutcome(total, err, Verdict.CONVERGED, f.count)


def integrate(f: Callable, a: float, b: float, tol: float = 1e-10,
              tol_abs: float = TOL_ABS, points: Sequence[float] = ()) -> QuadOutcome:
    """Integrate ``f`` over the proper interval [a, b].

    ``f`` is called with numpy arrays.  ``points`` are known kinks or jumps
    inside (a, b) where the interval is split up front.  Returns an
    INCONCLUSIVE outcome when the 10,000-interval budget is exhausted.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise PreconditionError("integrate needs finite limits; use improper_to_zero/infinity")
    if a > b:
        raise PreconditionError(f"integrate needs a <= b, got [{a}, {b}]")
    return _integrate_counted(_Counted(f), float(a), float(b), tol, tol_abs, points)


def _fit_slope(ts, ys):
    lt = np.log(ts)
    ly = np.log(ys)
    slope, intercept = np.polyfit(lt, ly, 1)
    resid = ly - (slope * lt + intercept)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    conf = Confidence.HIGH if rms < FIT_RMS_HIGH else Confidence.LOW
    return ExponentEstimate(float(slope), conf, rms)


def _probe_points(endpoint, ref):
    k = PROBE_OFFSET + np.arange(PROBES)
    if endpoint is Endpoint.ZERO:
        return ref * np.power(2.0, -k)
    return ref * np.power(2.0, k)


def endpoint_exponent(f: Callable, endpoint: Endpoint, ref: float = 1.0) -> ExponentEstimate:
    """Least-squares log-log slope of ``f`` on probes approaching ``endpoint``.

    The probes are ``ref * 2**-k`` (or ``ref * 2**k``) for k = 10, ..., 21.
    """
    ts = _probe_points(endpoint, ref)
    with np.errstate(all="ignore"):
        ys = np.broadcast_to(np.asarray(f(ts), dtype=float), ts.shape)
    if not np.all(np.isfinite(ys) & (ys > 0)):
        i = int(np.argmax(~(np.isfinite(ys) & (ys > 0))))
        raise PreconditionError(f"endpoint_exponent needs positive samples; f({ts[i]!r}) = {ys[i]!r}")
    return _fit_slope(ts, ys)


def _probe_absolute(f, endpoint, ref):
    """Exponent of |f| plus a classification of degenerate probe samples."""
    ts = _probe_points(endpoint, ref)
    with np.errstate(all="ignore"):
        ys = np.abs(np.broadcast_to(np.asarray(f(ts), dtype=float), ts.shape))
    if np.any(np.isinf(ys)):
        return "blowup", None
    if np.any(np.isnan(ys)):
        i = int(np.argmax(np.isnan(ys)))
        raise IntegrandError(float(ts[i]), float("nan"))
    positive = ys > 0
    if positive.sum() < 3:
        return "vanishing", None
    return "power", _fit_slope(ts[positive], ys[positive])


def _shells(endpoint, ref):
    lo_hi = []
    for k in range(MAX_SHELLS):
        if endpoint is Endpoint.ZERO:
            lo_hi.append((ref * 2.0 ** (-k - 1), ref * 2.0 ** (-k)))
        else:
            lo_hi.append((ref * 2.0 ** k, ref * 2.0 ** (k + 1)))
    return lo_hi


def _geometric_tail(s, r):
    return s * r / (1.0 - r)


def _shell_walk(f, endpoint, ref, tol, points, mode):
    """Sum dyadic shells toward ``endpoint``.

    ``mode`` is "converge" (the endpoint exponent already implies
    convergence; only the value is sought) or "test" (borderline exponent;
    the shell sums must also decide convergence).
    """
    total = 0.0
    err = 0.0
    sums = []
    ratios = []
    decaying = mode == "converge"
    prev_tail = None
    for lo, hi in _shells(endpoint, ref):
        out = _integrate_counted(f, lo, hi, 0.1 * tol, 0.1 * TOL_ABS, points)
        if not out.converged:
            return QuadOutcome(total, err, Verdict.INCONCLUSIVE, f.count, "shells")
        s = out.value
        sums.append(s)
        total += s
        err += out.error_estimate
        if len(sums) >= 2:
            prev = sums[-2]
            ratios.append(s / prev if prev != 0 else (0.0 if s == 0 else math.inf))
        target = max(tol * abs(total), TOL_ABS)

        if mode == "test" and len(ratios) >= RUN_LENGTH:
            run = ratios[-RUN_LENGTH:]
            if all(r > GROWTH_RATIO for r in run):
                return QuadOutcome(total, err, Verdict.DIVERGED, f.count, "shell-growth")
            spread = max(run) - min(run)
            if all(math.isfinite(r) for r in run) and spread <= STABLE_SPREAD:
                r = run[-1]
                if r >= PLATEAU_RATIO:
                    return QuadOutcome(total, err, Verdict.DIVERGED, f.count, "shell-plateau")
                decaying = True
            elif all(r < DECAY_RATIO for r in run):
                decaying = True

        if not decaying or len(sums) < MIN_SHELLS:
            continue
        if abs(s) <= 0.1 * TOL_ABS and abs(sums[-2]) <= 0.1 * TOL_ABS:
            return QuadOutcome(total, err, Verdict.CONVERGED, f.count, "shells")
        r = ratios[-1]
        if not (0.0 <= r < 1.0):
            prev_tail = None
            continue
        tail = _geometric_tail(s, r)
        if abs(tail) <= target:
            return QuadOutcome(total + tail, err + abs(tail), Verdict.CONVERGED, f.count, "shells")
        recent = ratios[-3:]
        if len(recent) == 3 and all(0.0 <= x < 1.0 for x in recent):
            jitter = max(recent) - min(recent)
            uncertainty = abs(tail) * jitter / (1.0 - max(recent))
            if uncertainty <= target and prev_tail is not None:
                return QuadOutcome(total + tail, err + uncertainty, Verdict.CONVERGED,
                                   f.count, "shells+geometric-tail")
        prev_tail = tail
    return QuadOutcome(total, err, Verdict.INCONCLUSIVE, f.count, "shell-budget")


def _partial(f, endpoint, ref, tol, points, how):
    """Partial integral over the first 8 shells, attached to DIVERGED outcomes."""
    if endpoint is Endpoint.ZERO:
        lo, hi = ref * 2.0 ** -8, ref
    else:
        lo, hi = ref, ref * 2.0 ** 8
    try:
        out = _integrate_counted(f, lo, hi, tol, TOL_ABS, points)
        value, e = out.value, out.error_estimate
    except IntegrandError:
        value, e = math.nan, math.inf
    return QuadOutcome(value, e, Verdict.DIVERGED, f.count, how)


def _improper(f, endpoint, ref, tol, points):
    if not (ref > 0 and math.isfinite(ref)):
        raise PreconditionError(f"reference point must be positive and finite, got {ref}")
    counted = _Counted(f)
    kind, est = _probe_absolute(f, endpoint, ref)
    if kind == "blowup":
        return _partial(counted, endpoint, ref, tol, points, "exponent:blowup")
    if kind == "vanishing":
        return _shell_walk(counted, endpoint, ref, tol, points, "converge")
    e = est.slope
    if endpoint is Endpoint.ZERO:
        converges = e > -1.0 + EXPONENT_MARGIN
        diverges = e < -1.0 - EXPONENT_MARGIN
    else:
        converges = e < -1.0 - EXPONENT_MARGIN
        diverges = e > -1.0 + EXPONENT_MARGIN
    if diverges:
        return _partial(counted, endpoint, ref, tol, points, f"exponent:{e:.4f}")
    return _shell_walk(counted, endpoint, ref, tol, points, "converge" if converges else "test")


def improper_to_zero(f: Callable, b: float, tol: float = 1e-10,
                     points: Sequence[float] = ()) -> QuadOutcome:
    """Decide and, when finite, evaluate the integral of ``f`` over (0, b]."""
    return _improper(f, Endpoint.ZERO, float(b), tol, points)


def improper_to_infinity(f: Callable, a: float, tol: float = 1e-10,
                         points: Sequence[float] = ()) -> QuadOutcome:
    """Decide and, when finite, evaluate the integral of ``f`` over [a, inf)."""
    return _improper(f, Endpoint.INFINITY, float(a), tol, points)


def integrate_any(f: Callable, a: float, b: float, tol: float = 1e-10,
                  points: Sequence[float] = ()) -> QuadOutcome:
    """Integral over [a, b] where ``a`` may be 0 and ``b`` may be ``inf``.

    Improper pieces are split at 1 (or at the finite limit).
    """
    if a > b:
        raise PreconditionError(f"need a <= b, got [{a}, {b}]")
    if a == 0.0 and math.isinf(b):
        head = improper_to_zero(f, 1.0, tol, points)
        tail = improper_to_infinity(f, 1.0, tol, points)
        return combine(head, tail)
    if a == 0.0:
        return improper_to_zero(f, b, tol, points)
    if math.isinf(b):
        return improper_to_infinity(f, a, tol, points)
    return integrate(f, a, b, tol, points=points)


def combine(*outcomes: QuadOutcome) -> QuadOutcome:
    """Sum of integrals over adjacent pieces; the worst verdict wins."""
    verdicts = [o.verdict for o in outcomes]
    if Verdict.DIVERGED in verdicts:
        verdict = Verdict.DIVERGED
    elif Verdict.INCONCLUSIVE in verdicts:
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.CONVERGED
    return QuadOutcome(
        value=math.fsum(o.value for o in outcomes),
        error_estimate=math.fsum(o.error_estimate for o in outcomes),
        verdict=verdict,
        evaluations=sum(o.evaluations for o in outcomes),
        method="+".join(o.method for o in outcomes),
    )
