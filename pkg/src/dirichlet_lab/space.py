"""Elements of the weighted Dirichlet space and the quantities attached to them.

A function is stored as an anchor ``a0``, its value ``c0 = u(a0)`` and its
derivative ``v``; everything else (values, endpoint traces, norms) is
derived by integrating ``v``.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from . import quad
from .classify import Membership, bp_infinity, bp_zero, sigma_integral
from .dsl import parse_expression
from .errors import PreconditionError, TraceUndefinedError, UndeterminedError
from .quad import Endpoint, QuadOutcome, Verdict
from .weights import WeightProfile

__all__ = [
    "DirichletFunction",
    "TraceResult",
    "EquivalenceConstant",
    "step_derivative",
    "power_derivative",
    "constant_function",
    "omega0",
    "omega_inf",
    "seminorm",
    "seminorm_outcome",
    "norm_at",
    "trace_zero",
    "trace_infinity",
    "equivalence_constant",
    "asymptotic_residual",
    "weighted_distance",
    "morrey_modulus",
]

MAX_PROBES = 60
DEFAULT_TRACE_TOL = 1e-10
QUAD_TOL = 1e-11
MORREY_MIN_DISTANCE = 1e-14


def _vectorize(fn):
    def wrapped(t):
        arr = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            out = np.asarray(fn(arr), dtype=float)
        out = np.broadcast_to(out, arr.shape).astype(float)
        return float(out) if arr.ndim == 0 else out

    return wrapped


@dataclass(frozen=True, eq=False)
class DirichletFunction:
    """``u(t) = anchor_value + integral of derivative from anchor to t``.

    ``primitive`` is an optional antiderivative of ``derivative``; when given,
    values are computed from it instead of by quadrature.  ``support`` is an
    optional closed interval outside of which the derivative is exactly zero.
    ``breakpoints`` lists jumps/kinks of the derivative for the quadrature.
    """

    derivative: Callable
    anchor: float = 1.0
    anchor_value: float = 0.0
    label: str = ""
    breakpoints: Tuple[float, ...] = ()
    derivative_expr: Optional[str] = None
    primitive: Optional[Callable] = None
    support: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        if not (self.anchor > 0 and math.isfinite(self.anchor)):
            raise PreconditionError(f"anchor must lie in (0, inf), got {self.anchor}")
        if not math.isfinite(self.anchor_value):
            raise PreconditionError("anchor value must be finite")

    # construction -------------------------------------------------------
    @classmethod
    def from_expression(cls, expr: str, anchor: float = 1.0, anchor_value: float = 0.0,
                        label: Optional[str] = None) -> "DirichletFunction":
        compiled = parse_expression(expr)
        return cls(_vectorize(compiled), float(anchor), float(anchor_value),
                   label or f"u' = {expr}", derivative_expr=expr)

    def to_json(self) -> str:
        if self.derivative_expr is None:
            raise PreconditionError(f"function {self.label!r} has no DSL derivative to serialize")
        return json.dumps({
            "anchor": self.anchor,
            "anchor_value": self.anchor_value,
            "derivative": self.derivative_expr,
            "label": self.label,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DirichletFunction":
        obj = json.loads(text)
        try:
            return cls.from_expression(obj["derivative"], float(obj.get("anchor", 1.0)),
                                       float(obj.get("anchor_value", 0.0)), obj.get("label"))
        except KeyError as exc:
            raise PreconditionError(f"function JSON lacks key {exc}") from None

    def reanchored(self, anchor: float) -> "DirichletFunction":
        """Same function, anchored at another point."""
        return DirichletFunction(self.derivative, float(anchor), self(anchor), self.label,
                                 self.breakpoints, self.derivative_expr, self.primitive, self.support)

    def scaled(self, factor: float) -> "DirichletFunction":
        v = self.derivative
        P = self.primitive
        return DirichletFunction(
            lambda t: factor * np.asarray(v(t)), self.anchor, factor * self.anchor_value,
            f"{factor:g}*({self.label})", self.breakpoints, None,
            None if P is None else (lambda t: factor * np.asarray(P(t))), self.support)

    # evaluation ---------------------------------------------------------
    def slope(self, t):
        return self.derivative(t)

    def _segment(self, lo, hi):
        """Integral of the derivative over [lo, hi] (lo <= hi, both finite)."""
        if lo == hi:
            return 0.0
        if self.support is not None:
            lo = max(lo, self.support[0])
            hi = min(hi, self.support[1])
            if lo >= hi:
                return 0.0
        if self.primitive is not None:
            return float(self.primitive(hi)) - float(self.primitive(lo))
        out = quad.integrate(self.derivative, lo, hi, QUAD_TOL, points=self.breakpoints)
        if not out.converged:
            raise UndeterminedError(f"integral of u' over [{lo}, {hi}] did not converge")
        return out.value

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        flat = np.atleast_1d(arr).ravel()
        if np.any(~(flat > 0)) or np.any(~np.isfinite(flat)):
            raise PreconditionError("u is evaluated on (0, inf) only")
        out = np.empty_like(flat)
        order = np.argsort(flat, kind="stable")
        pts = flat[order]
        a0 = self.anchor
        split = bisect.bisect_left(pts.tolist(), a0)
        # walk outward from the anchor so every segment is short
        value, last = self.anchor_value, a0
        for i in range(split, len(pts)):
            value += self._segment(last, pts[i])
            last = pts[i]
            out[order[i]] = value
        value, last = self.anchor_value, a0
        for i in range(split - 1, -1, -1):
            value -= self._segment(pts[i], last)
            last = pts[i]
            out[order[i]] = value
        if arr.ndim == 0:
            return float(out[0])
        return out.reshape(arr.shape)

    def __repr__(self):
        return f"DirichletFunction({self.label!r})"


def constant_function(c: float, anchor: float = 1.0) -> DirichletFunction:
    return DirichletFunction(lambda t: np.zeros_like(np.asarray(t, dtype=float)), anchor, float(c),
                             f"const {c:g}", derivative_expr="0",
                             primitive=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
                             support=(anchor, anchor))


def step_derivative(edges: Sequence[float], slopes: Sequence[float], anchor: Optional[float] = None,
                    anchor_value: float = 0.0, label: Optional[str] = None) -> DirichletFunction:
    """Piecewise linear ``u``: slope ``slopes[i]`` on ``(edges[i], edges[i+1])``, flat outside.

    By default the anchor is ``edges[0]`` so that ``anchor_value`` is the
    value of ``u`` left of the support.
    """
    e = np.asarray(edges, dtype=float)
    s = np.asarray(slopes, dtype=float)
    if e.ndim != 1 or len(e) != len(s) + 1 or len(s) == 0:
        raise PreconditionError("need len(edges) == len(slopes) + 1 >= 2")
    if not (e[0] > 0 and np.all(np.diff(e) > 0) and np.isfinite(e[-1])):
        raise PreconditionError("edges must be increasing in (0, inf)")
    cum = np.concatenate([[0.0], np.cumsum(s * np.diff(e))])

    def v(t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(e, t, side="right") - 1
        inside = (idx >= 0) & (idx < len(s))
        return np.where(inside, s[np.clip(idx, 0, len(s) - 1)], 0.0)

    def P(t):
        t = np.asarray(t, dtype=float)
        return np.interp(t, e, cum)

    a0 = float(e[0]) if anchor is None else float(anchor)
    return DirichletFunction(v, a0, float(anchor_value),
                             label or f"steps{tuple(e.tolist())}", tuple(e.tolist()), None, P,
                             (float(e[0]), float(e[-1])))


def power_derivative(coef: float, exponent: float, anchor: float = 1.0, anchor_value: float = 0.0,
                     label: Optional[str] = None) -> DirichletFunction:
    """``u' = coef * t**exponent`` with its closed-form primitive."""
    coef = float(coef)
    e = float(exponent)

    def v(t):
        return coef * np.power(np.asarray(t, dtype=float), e)

    if e == -1.0:
        def P(t):
            return coef * np.log(np.asarray(t, dtype=float))
    else:
        def P(t):
            return coef * np.power(np.asarray(t, dtype=float), e + 1.0) / (e + 1.0)

    return DirichletFunction(v, float(anchor), float(anchor_value),
                             label or f"u' = {coef:g} t^{e:g}", (),
                             f"{coef!r}*t^{e!r}", P)


# endpoint moduli -------------------------------------------------------


def _require(verdict_fn, w, p, what):
    v = verdict_fn(w, p)
    if v.member is Membership.YES:
        return v
    if v.member is Membership.NO:
        raise TraceUndefinedError(f"Omega undefined: weight not {what}")
    raise UndeterminedError(f"{what} membership undetermined")


def _sigma_mass(w, p, a, b):
    out = sigma_integral(w, p, a, b, QUAD_TOL)
    if out.verdict is Verdict.INCONCLUSIVE:
        raise UndeterminedError(f"integral of the dual density over [{a}, {b}] is inconclusive")
    return out


def omega0(w: WeightProfile, p: float, t: float) -> float:
    """``(integral of sigma over (0, t)) ** (1 - 1/p)``."""
    if not t > 0:
        raise PreconditionError(f"t must be positive, got {t}")
    _require(bp_zero, w, p, "B_p(0)")
    return _sigma_mass(w, p, 0.0, t).value ** (1.0 - 1.0 / p)


def omega_inf(w: WeightProfile, p: float, t: float) -> float:
    """``(integral of sigma over (t, inf)) ** (1 - 1/p)``."""
    if not t > 0:
        raise PreconditionError(f"t must be positive, got {t}")
    _require(bp_infinity, w, p, "B_p(inf)")
    return _sigma_mass(w, p, t, math.inf).value ** (1.0 - 1.0 / p)


# seminorm and norms ----------------------------------------------------


def _energy_density(u, w, p):
    v = u.derivative

    def f(t):
        return np.abs(v(t)) ** p * w(t)

    return f


def _energy_over(u, w, p, a, b):
    """Integral of ``|u'|^p w`` over [a, b]; a may be 0 and b may be inf."""
    if u.support is not None:
        lo, hi = max(a, u.support[0]), min(b, u.support[1])
        if lo >= hi:
            return QuadOutcome(0.0, 0.0, Verdict.CONVERGED, 0, "outside-support")
        return quad.integrate(_energy_density(u, w, p), lo, hi, QUAD_TOL, points=u.breakpoints)
    f = _energy_density(u, w, p)
    if a == 0.0 and math.isinf(b):
        return quad.combine(quad.improper_to_zero(f, 1.0, QUAD_TOL, u.breakpoints),
                            quad.improper_to_infinity(f, 1.0, QUAD_TOL, u.breakpoints))
    return quad.integrate_any(f, a, b, QUAD_TOL, u.breakpoints)


def seminorm_outcome(u: DirichletFunction, w: WeightProfile, p: float) -> QuadOutcome:
    """Quadrature outcome for the integral of ``|u'|^p w`` over (0, inf)."""
    return _energy_over(u, w, p, 0.0, math.inf)


def seminorm(u: DirichletFunction, w: WeightProfile, p: float) -> float:
    """``(integral of |u'|^p w) ** (1/p)``; ``inf`` when the integral diverges."""
    out = seminorm_outcome(u, w, p)
    if out.verdict is Verdict.DIVERGED:
        return math.inf
    if out.verdict is Verdict.INCONCLUSIVE:
        raise UndeterminedError("seminorm undetermined: energy integral inconclusive")
    return max(out.value, 0.0) ** (1.0 / p)


def norm_at(u: DirichletFunction, w: WeightProfile, p: float,
            a: Union[float, Endpoint], tol: float = DEFAULT_TRACE_TOL) -> float:
    """Seminorm plus ``|u(a)|``; ``a`` may be an endpoint, meaning the trace there."""
    if a is Endpoint.ZERO:
        if bp_zero(w, p).member is not Membership.YES:
            raise TraceUndefinedError("norm anchored at 0 needs a B_p(0) weight; the trace at 0 is undefined otherwise")
        point = trace_zero(u, w, p, tol).value
    elif a is Endpoint.INFINITY:
        if bp_infinity(w, p).member is not Membership.YES:
            raise TraceUndefinedError("norm anchored at infinity needs a B_p(inf) weight; the trace there is undefined otherwise")
        point = trace_infinity(u, w, p, tol).value
    else:
        point = u(float(a))
    return seminorm(u, w, p) + abs(point)


# traces ----------------------------------------------------------------


@dataclass(frozen=True)
class TraceResult:
    """Endpoint value with a certified bound.

    ``|u(probe) - trace| <= certified_error``.  ``converged`` is False when
    the probe budget ran out before the bound dropped below the tolerance;
    the bound is still valid then.  ``residual_sup`` is the largest
    ``|u(t) - value| / Omega(t)`` seen over the probes (diagnostic only).
    """

    value: float
    certified_error: float
    side: Endpoint
    probe: float
    converged: bool = True
    probes_used: int = 0
    residual_sup: float = 0.0

    def to_dict(self):
        return {
            "value": self.value,
            "certified_error": self.certified_error,
            "side": self.side.value,
            "probe": self.probe,
            "converged": self.converged,
            "probes_used": self.probes_used,
            "residual_sup": self.residual_sup,
        }


def _upper(out):
    return max(out.value, 0.0) + out.error_estimate


def _trace(u, w, p, tol, side):
    if side is Endpoint.ZERO:
        _require(bp_zero, w, p, "B_p(0)")
    else:
        _require(bp_infinity, w, p, "B_p(inf)")
    if not tol > 0:
        raise PreconditionError("tolerance must be positive")
    seen = []  # (probe, u(probe), Omega(probe))
    prev_t, prev_u = u.anchor, u.anchor_value
    best = None
    for k in range(1, MAX_PROBES + 1):
        t = u.anchor * (2.0 ** -k if side is Endpoint.ZERO else 2.0 ** k)
        if side is Endpoint.ZERO:
            val = prev_u - u._segment(t, prev_t)
            energy = _energy_over(u, w, p, 0.0, t)
            mass = _sigma_mass(w, p, 0.0, t)
        else:
            val = prev_u + u._segment(prev_t, t)
            energy = _energy_over(u, w, p, t, math.inf)
            mass = _sigma_mass(w, p, t, math.inf)
        prev_t, prev_u = t, val
        if energy.verdict is Verdict.DIVERGED:
            raise PreconditionError("trace needs a finite seminorm; the energy integral diverges")
        omega = _upper(mass) ** (1.0 - 1.0 / p)
        if energy.converged:
            err = _upper(energy) ** (1.0 / p) * omega
        else:
            err = math.inf
        seen.append((t, val, mass.value ** (1.0 - 1.0 / p)))
        if best is None or err <= best[1]:
            best = (val, err, t)
        if err <= tol:
            break
    val, err, t = best
    sup = 0.0
    for _, uv, om in seen:
        if om > 0:
            sup = max(sup, abs(uv - val) / om)
    return TraceResult(val, err, side, t, err <= tol, len(seen), sup)


def trace_zero(u: DirichletFunction, w: WeightProfile, p: float,
               tol: float = DEFAULT_TRACE_TOL) -> TraceResult:
    """Limit of ``u`` at 0, certified by the Hoelder tail bound."""
    return _trace(u, w, p, tol, Endpoint.ZERO)


def trace_infinity(u: DirichletFunction, w: WeightProfile, p: float,
                   tol: float = DEFAULT_TRACE_TOL) -> TraceResult:
    """Limit of ``u`` at infinity, certified by the Hoelder tail bound."""
    return _trace(u, w, p, tol, Endpoint.INFINITY)


def asymptotic_residual(u: DirichletFunction, w: WeightProfile, p: float, side: Endpoint,
                        t: float, trace: Optional[float] = None) -> float:
    """``a(t) = (u(t) - trace) / Omega(t)`` for the given side."""
    if side is Endpoint.ZERO:
        om = omega0(w, p, t)
        c = trace_zero(u, w, p).value if trace is None else trace
    else:
        om = omega_inf(w, p, t)
        c = trace_infinity(u, w, p).value if trace is None else trace
    if not om > 0:
        raise PreconditionError(f"Omega vanishes numerically at t={t}")
    return (u(t) - c) / om


# norm equivalence and distance ----------------------------------------


@dataclass(frozen=True)
class EquivalenceConstant:
    c_interval: float
    factor: float
    integral: QuadOutcome


def equivalence_constant(w: WeightProfile, p: float, a: float, b: float) -> EquivalenceConstant:
    """``C_I = (integral of sigma over I) ** (1 - 1/p)`` for ``I = (a, b)``.

    ``1 + C_I`` bounds the ratio between norms anchored at any two points of I.
    ``a = 0`` is allowed for B_p(0) weights.
    """
    if not (0.0 <= a < b and math.isfinite(b)):
        raise PreconditionError(f"need 0 <= a < b < inf, got ({a}, {b})")
    if a == 0.0 and bp_zero(w, p).member is not Membership.YES:
        raise TraceUndefinedError("interval reaching 0 needs a B_p(0) weight")
    out = _sigma_mass(w, p, a, b)
    c = out.value ** (1.0 - 1.0 / p)
    return EquivalenceConstant(c, 1.0 + c, out)


def weighted_distance(w: WeightProfile, p: float, x: float, y: float) -> float:
    """``|integral of sigma between x and y|``."""
    if not (x > 0 and y > 0):
        raise PreconditionError("distance is defined for positive points")
    lo, hi = min(x, y), max(x, y)
    if lo == hi:
        return 0.0
    return abs(_sigma_mass(w, p, lo, hi).value)


def morrey_modulus(u: DirichletFunction, w: WeightProfile, p: float,
                   grid: Sequence[float]) -> float:
    """Max over grid pairs of ``|u(x) - u(y)| / d(x, y) ** (1 - 1/p)``."""
    pts = np.asarray(sorted(float(g) for g in grid))
    if len(pts) < 2:
        return 0.0
    if np.any(pts <= 0) or np.any(np.diff(pts) == 0):
        raise PreconditionError("grid points must be positive and pairwise distinct")
    values = np.asarray(u(pts))
    # distances by additivity over consecutive gaps
    gaps = np.array([_sigma_mass(w, p, lo, hi).value for lo, hi in zip(pts[:-1], pts[1:])])
    cum = np.concatenate([[0.0], np.cumsum(gaps)])
    i, j = np.triu_indices(len(pts), k=1)
    d = cum[j] - cum[i]
    keep = d >= MORREY_MIN_DISTANCE
    if not keep.any():
        return 0.0
    ratios = np.abs(values[j] - values[i])[keep] / d[keep] ** (1.0 - 1.0 / p)
    return float(ratios.max())
