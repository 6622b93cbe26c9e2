"""Compactly supported approximation sequences and their convergence.

Three constructions, each producing functions whose derivative vanishes
outside a compact window:

* truncation of the derivative to ``(1/n, n)``;
* caloric extension: a constant tail (or head) replaced by the exact
  energy-minimizing ramp down to 0 at a horizon;
* zero-mean truncation: truncation followed by subtracting the window mean
  of the derivative, so the approximant returns to 0 at both ends.

Whether a construction converges in the seminorm depends on the weight's
regime; :func:`convergence_diagnostic` measures it.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import quad
from .errors import PreconditionError, UndeterminedError
from .quad import Endpoint, QuadOutcome, Verdict
from .space import DirichletFunction
from .varmin import MinimizerProblem, Side, closed_form_minimizer
from .weights import WeightProfile

__all__ = [
    "Construction",
    "ApproximationStep",
    "Diagnostic",
    "DiagnosticVerdict",
    "window_mean",
    "truncate_sequence",
    "caloric_extension",
    "zero_mean_truncation",
    "convergence_diagnostic",
]

QUAD_TOL = 1e-11
CONSTANCY_SAMPLES = 64
STALL_RUN = 5
STALL_SPREAD = 0.01
CONVERGE_FACTOR = 0.25


class Construction(enum.Enum):
    TRUNCATE = "truncate"
    CALORIC_TAIL = "caloric-tail"
    CALORIC_HEAD = "caloric-head"
    ZERO_MEAN = "zero-mean"


class DiagnosticVerdict(enum.Enum):
    CONVERGING = "Converging"
    STALLING = "Stalling"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class ApproximationStep:
    index: float
    approximant: DirichletFunction
    s_n: float
    t_n: float
    gap: float
    predicted_gap: Optional[float] = None

    def row(self):
        return [self.index, self.s_n, self.t_n, self.gap,
                "" if self.predicted_gap is None else self.predicted_gap]


@dataclass(frozen=True)
class Diagnostic:
    steps: Tuple[ApproximationStep, ...]
    verdict: DiagnosticVerdict
    predicted_mismatch: float  # largest relative gap-vs-prediction difference seen

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "s_n", "t_n", "gap", "predicted_gap", "verdict"])
        for step in self.steps:
            writer.writerow([_fmt(x) for x in step.row()] + [self.verdict.value])
        return buf.getvalue()


def _fmt(x):
    return format(x, ".17g") if isinstance(x, float) else str(x)


def _window(n):
    if not n > 1:
        raise PreconditionError(f"window (1/n, n) needs n > 1, got {n}")
    return 1.0 / n, float(n)


def _clip_support(u, lo, hi):
    if u.support is None:
        return (lo, hi)
    return (max(lo, u.support[0]), min(hi, u.support[1]))


def truncate_sequence(u: DirichletFunction, n: float,
                      side: Endpoint = Endpoint.ZERO) -> DirichletFunction:
    """Derivative restricted to ``(1/n, n)``.

    Zero side: the result is 0 left of ``1/n`` and constant right of ``n``.
    Infinity side: 0 right of ``n`` and constant left of ``1/n``.
    """
    lo, hi = _window(n)
    v = u.derivative
    P = u.primitive

    def dv(t):
        t = np.asarray(t, dtype=float)
        return np.where((t > lo) & (t < hi), v(t), 0.0)

    prim = None
    if P is not None:
        base = lo if side is Endpoint.ZERO else hi

        def prim(t):
            c = np.clip(np.asarray(t, dtype=float), lo, hi)
            return np.asarray(P(c)) - float(P(base))

    anchor = lo if side is Endpoint.ZERO else hi
    points = tuple(sorted(set(u.breakpoints) | {lo, hi}))
    return DirichletFunction(dv, anchor, 0.0, f"trunc_{n:g}({u.label})", points, None, prim,
                             _clip_support(u, lo, hi))


def zero_mean_truncation(u: DirichletFunction, n: float) -> DirichletFunction:
    """``chi_(1/n, n) (u' - c_n)`` with ``c_n`` the window mean of ``u'``."""
    lo, hi = _window(n)
    mean = (u(hi) - u(lo)) / (hi - lo)
    v = u.derivative
    P = u.primitive

    def dv(t):
        t = np.asarray(t, dtype=float)
        return np.where((t > lo) & (t < hi), v(t) - mean, 0.0)

    prim = None
    if P is not None:
        def prim(t):
            c = np.clip(np.asarray(t, dtype=float), lo, hi)
            return np.asarray(P(c)) - float(P(lo)) - mean * (c - lo)

    points = tuple(sorted(set(u.breakpoints) | {lo, hi}))
    return DirichletFunction(dv, lo, 0.0, f"zeromean_{n:g}({u.label})", points, None, prim, (lo, hi))


def window_mean(u: DirichletFunction, n: float) -> float:
    lo, hi = _window(n)
    return (u(hi) - u(lo)) / (hi - lo)


def _check_constant(u, cut, side):
    if side is Construction.CALORIC_TAIL:
        ts = cut * np.geomspace(1.0 + 1e-9, 1e6, CONSTANCY_SAMPLES)
    else:
        ts = cut * np.geomspace(1e-6, 1.0 - 1e-9, CONSTANCY_SAMPLES)
    if u.support is not None:
        lo, hi = u.support
        if (side is Construction.CALORIC_TAIL and hi <= cut) or \
                (side is Construction.CALORIC_HEAD and lo >= cut):
            return
    d = np.asarray(u.derivative(ts), dtype=float)
    if np.any(d != 0):
        i = int(np.argmax(d != 0))
        raise PreconditionError(f"u is not constant beyond the cut: u'({ts[i]:.6g}) = {d[i]:.6g}")


def caloric_extension(u: DirichletFunction, w: WeightProfile, p: float, side: Construction,
                      cut: float, horizon: float) -> Tuple[DirichletFunction, float]:
    """Replace the constant tail (head) of ``u`` by the minimizing ramp.

    Returns the compactly supported approximant and the predicted gap
    ``|C| * (integral of sigma over the ramp) ** ((1 - p) / p)`` where ``C``
    is the constant value being ramped down.
    """
    if side is Construction.CALORIC_TAIL:
        if not horizon > cut > 0:
            raise PreconditionError(f"tail extension needs 0 < cut < horizon, got {cut}, {horizon}")
        k, K = cut, horizon
    elif side is Construction.CALORIC_HEAD:
        if not 0 < horizon < cut:
            raise PreconditionError(f"head extension needs 0 < horizon < cut, got {horizon}, {cut}")
        k, K = horizon, cut
    else:
        raise PreconditionError(f"not a caloric construction: {side}")
    _check_constant(u, cut, side)
    C = u(cut)
    v = u.derivative
    tail = side is Construction.CALORIC_TAIL
    if C == 0:
        ramp_d = lambda t: np.zeros_like(np.asarray(t, dtype=float))  # noqa: E731
        ramp = ramp_d
        predicted = 0.0
    else:
        # the ramp for the normalized function, scaled back by C
        prob = MinimizerProblem(k, K, 1.0, Side.LEFT if tail else Side.RIGHT, p, w)
        sol = closed_form_minimizer(prob)
        ramp_d = lambda t: C * np.asarray(sol.derivative(t))  # noqa: E731
        ramp = lambda t: C * np.asarray(sol.evaluate(t))  # noqa: E731
        predicted = abs(C) * sol.normalizer ** ((1.0 - p) / p)

    def dv(t):
        t = np.asarray(t, dtype=float)
        inside = (t > k) & (t < K)
        own = (t < cut) if tail else (t > cut)
        safe = np.clip(t, k, K)
        return np.where(inside, ramp_d(safe), np.where(own, v(t), 0.0))

    P = u.primitive
    prim = None
    if P is not None:
        pc = float(P(cut))

        def prim(t):
            t = np.asarray(t, dtype=float)
            own = (t <= cut) if tail else (t >= cut)
            rest = np.asarray(ramp(np.clip(t, k, K)), dtype=float)
            return np.where(own, np.asarray(P(t)) - pc + C, rest)

    lo = u.support[0] if (tail and u.support is not None) else (k if not tail else 0.0)
    hi = K if tail else (u.support[1] if u.support is not None else math.inf)
    support = None if (lo == 0.0 or math.isinf(hi)) else (lo, hi)
    points = tuple(sorted(set(u.breakpoints) | {k, K}))
    f = DirichletFunction(dv, cut, C, f"caloric({u.label}; {k:g}..{K:g})", points, None, prim,
                          support)
    return f, predicted


# gaps -----------------------------------------------------------------


def _energy_piece(f, w, p, a, b, points):
    """Integral of ``|f|^p w`` over [a, b]; a may be 0, b may be inf."""
    if a >= b:
        return QuadOutcome(0.0, 0.0, Verdict.CONVERGED, 0, "empty")
    g = lambda t: np.abs(f(t)) ** p * w(t)  # noqa: E731
    return quad.integrate_any(g, a, b, QUAD_TOL, points)


def _outside_energy(u, w, p, lo, hi):
    """Energy of ``u'`` on (0, lo) and (hi, inf)."""
    v = u.derivative
    pts = u.breakpoints
    pieces = []
    if u.support is not None:
        s0, s1 = u.support
        pieces.append(_energy_piece(v, w, p, s0, min(lo, s1), pts))
        pieces.append(_energy_piece(v, w, p, max(hi, s0), s1, pts))
    else:
        pieces.append(_energy_piece(v, w, p, 0.0, lo, pts))
        pieces.append(_energy_piece(v, w, p, hi, math.inf, pts))
    return quad.combine(*pieces)


def _finish(out):
    if out.verdict is Verdict.DIVERGED:
        return math.inf
    if out.verdict is Verdict.INCONCLUSIVE:
        raise UndeterminedError("gap integral inconclusive")
    return out.value


def _gap(u, w, p, construction, n, cut):
    """(approximant, s_n, t_n, gap, predicted_gap) for one schedule entry."""
    if construction is Construction.TRUNCATE:
        lo, hi = _window(n)
        approx = truncate_sequence(u, n)
        energy = _finish(_outside_energy(u, w, p, lo, hi))
        s, t = approx.support
        return approx, s, t, energy ** (1.0 / p), None
    if construction is Construction.ZERO_MEAN:
        lo, hi = _window(n)
        approx = zero_mean_truncation(u, n)
        mean = window_mean(u, n)
        inner = quad.integrate(w, lo, hi, QUAD_TOL)
        energy = _finish(_outside_energy(u, w, p, lo, hi)) + abs(mean) ** p * _finish(inner)
        return approx, lo, hi, energy ** (1.0 / p), None
    if not n > 1:
        raise PreconditionError(f"horizon multiplier must exceed 1, got {n}")
    tail = construction is Construction.CALORIC_TAIL
    horizon = cut * n if tail else cut / n
    approx, predicted = caloric_extension(u, w, p, construction, cut, horizon)
    k, K = (cut, horizon) if tail else (horizon, cut)
    C = u(cut)
    ramp = lambda t: np.asarray(approx.derivative(t))  # noqa: E731
    # the difference of derivatives is the ramp itself, supported in [k, K]
    energy = _finish(_energy_piece(ramp, w, p, k, K, ()))
    if C == 0:
        energy = 0.0
    s = approx.support[0] if approx.support else k
    t = approx.support[1] if approx.support else K
    return approx, s, t, energy ** (1.0 / p), predicted


def _verdict(gaps, tol):
    if not gaps:
        return DiagnosticVerdict.INCONCLUSIVE
    if gaps[-1] <= tol:
        return DiagnosticVerdict.CONVERGING
    if len(gaps) >= STALL_RUN:
        run = gaps[-STALL_RUN:]
        top = max(run)
        if math.isfinite(top) and top > 0 and (top - min(run)) <= STALL_SPREAD * top:
            return DiagnosticVerdict.STALLING
    monotone = all(b <= a * (1 + 1e-12) for a, b in zip(gaps, gaps[1:]))
    if len(gaps) >= 2 and monotone and gaps[-1] <= CONVERGE_FACTOR * gaps[0]:
        return DiagnosticVerdict.CONVERGING
    return DiagnosticVerdict.INCONCLUSIVE


def convergence_diagnostic(u: DirichletFunction, builder: Construction, w: WeightProfile,
                           p: float, schedule: Sequence[float], tol: float = 1e-8,
                           cut: float = 1.0) -> Diagnostic:
    """Gap ``||(u_n - u)'||`` along ``schedule``.

    For truncations ``n`` is the window parameter; for caloric extensions it
    is the horizon multiplier (horizon ``n * cut`` or ``cut / n``).

    Verdict: Converging when the last gap is below ``tol``, or gaps never
    increase and shrink at least fourfold; Stalling when the last five gaps
    agree within 1% above ``tol``; Inconclusive otherwise.
    """
    sched = [float(x) for x in schedule]
    if any(b <= a for a, b in zip(sched, sched[1:])):
        raise PreconditionError("schedule must be increasing")
    steps = []
    mismatch = 0.0
    for n in sched:
        approx, s, t, gap, predicted = _gap(u, w, p, builder, n, cut)
        if predicted is not None and predicted > 0:
            mismatch = max(mismatch, abs(gap ** p - predicted ** p) / predicted ** p)
        steps.append(ApproximationStep(n, approx, s, t, gap, predicted))
    verdict = _verdict([s.gap for s in steps], tol)
    return Diagnostic(tuple(steps), verdict, mismatch)
