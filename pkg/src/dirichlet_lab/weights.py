"""Weights on the half line and their dual densities.

A weight is a positive continuous function on (0, inf).  For an exponent
``p > 1`` its dual density is ``sigma = w ** (-1 / (p - 1))``; endpoint
integrability of ``sigma`` is what every other module keys on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import special

from .dsl import parse_expression, power_hints
from .errors import PreconditionError, WeightDomainError, WeightUnderflowError

__all__ = [
    "WeightProfile",
    "ExponentPair",
    "parse_weight",
    "make_power",
    "make_two_exponent",
    "dual_density",
    "interpolate_weights",
    "conjugate",
    "PROBE_GRID",
]

# positivity of parsed weights is only checked here
PROBE_GRID = np.geomspace(1e-8, 1e8, 200)


def _as_array_fn(fn):
    """Wrap ``fn`` so it maps arrays to float arrays of the same shape."""

    def wrapped(t):
        arr = np.asarray(t, dtype=float)
        with np.errstate(all="ignore"):
            out = np.asarray(fn(arr), dtype=float)
        if out.shape != arr.shape:
            out = np.broadcast_to(out, arr.shape).astype(float)
        if arr.ndim == 0:
            return float(out)
        return out

    return wrapped


@dataclass(frozen=True, eq=False)
class WeightProfile:
    """Evaluatable weight with optional analytic side information.

    ``primitive_factory(p)`` returns an antiderivative ``S`` of the dual
    density for exponent ``p`` (or ``None``).  ``S`` accepts ``0`` and
    ``inf`` and returns the one-sided limits there, possibly infinite.
    ``hints`` are the power-law exponents of the weight near 0 and near
    infinity.  ``expr`` is DSL text evaluating to the same function.
    """

    evaluator: Callable
    label: str = ""
    hints: Optional[Tuple[float, float]] = None
    primitive_factory: Optional[Callable] = None
    expr: Optional[str] = None

    def __call__(self, t):
        return self.evaluator(t)

    def sigma(self, p, t):
        return dual_density(self, p, t)

    def sigma_primitive(self, p):
        if self.primitive_factory is None:
            return None
        return self.primitive_factory(p)

    def render(self):
        if self.expr is None:
            raise PreconditionError(f"weight {self.label!r} has no DSL form")
        return self.expr

    def stripped(self):
        """The same function with hints and antiderivatives removed."""
        return replace(self, hints=None, primitive_factory=None, label=self.label + " [stripped]")

    def __repr__(self):
        return f"WeightProfile({self.label!r})"


@dataclass(frozen=True)
class ExponentPair:
    p: float
    q: Optional[float] = None

    def __post_init__(self):
        if not self.p > 1:
            raise PreconditionError(f"p must exceed 1, got {self.p}")
        if self.q is not None and not self.q > 1:
            raise PreconditionError(f"q must exceed 1, got {self.q}")

    @property
    def p_conjugate(self):
        return conjugate(self.p)


def conjugate(p):
    """Hoelder conjugate ``p / (p - 1)``."""
    return p / (p - 1.0)


def _check_p(p):
    if not (p > 1 and math.isfinite(p)):
        raise PreconditionError(f"exponent p must lie in (1, inf), got {p}")


def parse_weight(expr: str, label: Optional[str] = None) -> WeightProfile:
    """Compile a DSL expression into a weight, checking positivity on probes."""
    compiled = parse_expression(expr)
    values = compiled(PROBE_GRID)
    bad = ~(np.isfinite(values) & (values > 0))
    if bad.any():
        t_bad = float(PROBE_GRID[np.argmax(bad)])
        raise WeightDomainError(f"weight {expr!r} is not positive and finite", t_bad)
    return WeightProfile(
        evaluator=_as_array_fn(compiled),
        label=label or expr,
        hints=power_hints(compiled.tree),
        expr=expr,
    )


def _power_primitive(alpha):
    def factory(p):
        _check_p(p)
        beta = alpha / (p - 1.0)

        if beta == 1.0:
            def S(t):
                with np.errstate(divide="ignore"):
                    return np.log(t)
        else:
            def S(t):
                with np.errstate(divide="ignore", over="ignore"):
                    return np.power(t, 1.0 - beta) / (1.0 - beta)
        return _as_array_fn(S)

    return factory


def make_power(alpha: float) -> WeightProfile:
    """The power weight ``t ** alpha``."""
    alpha = float(alpha)
    if alpha == 0.0:
        evaluator = _as_array_fn(lambda t: np.ones_like(t))
        expr = "1"
    else:
        evaluator = _as_array_fn(lambda t: np.power(t, alpha))
        expr = f"t^{alpha!r}"
    return WeightProfile(
        evaluator=evaluator,
        label=f"t^{alpha:g}",
        hints=(alpha, alpha),
        primitive_factory=_power_primitive(alpha),
        expr=expr,
    )


def _two_exponent_primitive(a0, a1):
    # substitution x = t / (1 + t) turns the dual density into a beta kernel
    # x^(A-1) (1-x)^(B-1) with A = 1 - b0, B = b1 - 1
    def factory(p):
        _check_p(p)
        b0 = a0 / (p - 1.0)
        b1 = a1 / (p - 1.0)
        A = 1.0 - b0
        B = b1 - 1.0
        if A <= 0:
            return None
        if B > 0:
            total = special.beta(A, B)

            def S(t):
                t = np.asarray(t, dtype=float)
                with np.errstate(divide="ignore", invalid="ignore"):
                    x = np.where(np.isinf(t), 1.0, t / (1.0 + t))
                    return total * special.betainc(A, B, x)
        else:
            def S(t):
                t = np.asarray(t, dtype=float)
                with np.errstate(divide="ignore", invalid="ignore"):
                    x = np.where(np.isinf(t), 1.0, t / (1.0 + t))
                    out = np.power(x, A) / A * special.hyp2f1(A, 1.0 - B, A + 1.0, x)
                return np.where(np.isinf(t), np.inf, out)
        return _as_array_fn(S)

    return factory


def make_two_exponent(a0: float, a1: float) -> WeightProfile:
    """``t**a0 * (1 + t)**(a1 - a0)``: behaves like ``t**a0`` at 0, ``t**a1`` at inf."""
    a0 = float(a0)
    a1 = float(a1)
    d = a1 - a0

    def evaluator(t):
        return np.power(t, a0) * np.power(1.0 + t, d)

    return WeightProfile(
        evaluator=_as_array_fn(evaluator),
        label=f"t^{a0:g}(1+t)^{d:g}",
        hints=(a0, a1),
        primitive_factory=_two_exponent_primitive(a0, a1),
        expr=f"t^{a0!r}*(1+t)^{d!r}",
    )


def dual_density(w: WeightProfile, p: float, t):
    """``w(t) ** (-1 / (p - 1))``, vectorized over ``t``."""
    _check_p(p)
    values = w(t)
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        sigma = np.power(arr, -1.0 / (p - 1.0))
    bad = ~(np.isfinite(sigma) & (arr > 0))
    if bad.any():
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        t_bad = float(np.broadcast_to(tt, arr.shape)[np.argmax(bad)])
        raise WeightUnderflowError(t_bad)
    if np.ndim(values) == 0:
        return float(sigma[0])
    return sigma.reshape(np.shape(values))


def interpolate_weights(w0, p0, w1, p1, theta):
    """Interpolated pair ``(w_theta, p_theta)``.

    ``1/p_theta = (1-theta)/p0 + theta/p1`` and
    ``w_theta ** (1/p_theta) = w0 ** ((1-theta)/p0) * w1 ** (theta/p1)``.
    """
    _check_p(p0)
    _check_p(p1)
    if not 0.0 <= theta <= 1.0:
        raise PreconditionError(f"theta must lie in [0, 1], got {theta}")
    p_theta = 1.0 / ((1.0 - theta) / p0 + theta / p1)
    e0 = (1.0 - theta) / p0 * p_theta
    e1 = theta / p1 * p_theta

    if theta == 0.0:
        return w0, float(p0)
    if theta == 1.0:
        return w1, float(p1)

    def evaluator(t):
        return np.power(w0(t), e0) * np.power(w1(t), e1)

    hints = None
    if w0.hints is not None and w1.hints is not None:
        hints = (e0 * w0.hints[0] + e1 * w1.hints[0], e0 * w0.hints[1] + e1 * w1.hints[1])
    expr = None
    if w0.expr is not None and w1.expr is not None:
        expr = f"({w0.expr})^({e0!r})*({w1.expr})^({e1!r})"
    profile = WeightProfile(
        evaluator=_as_array_fn(evaluator),
        label=f"interp({w0.label}, {w1.label}; theta={theta:g})",
        hints=hints,
        expr=expr,
    )
    return profile, p_theta
