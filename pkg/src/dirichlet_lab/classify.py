"""Endpoint B_p membership and the four-regime density characterization."""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np

from . import quad
from .errors import PreconditionError
from .quad import QuadOutcome, Verdict
from .weights import WeightProfile, dual_density

__all__ = [
    "Membership",
    "RegimeTag",
    "D0Characterization",
    "BpVerdict",
    "Regime",
    "DensityReport",
    "sigma_integral",
    "bp_zero",
    "bp_infinity",
    "regime",
    "density_report",
]

SPLIT = 1.0
QUAD_TOL = 1e-10


class Membership(enum.Enum):
    YES = "Yes"
    NO = "No"
    UNKNOWN = "Unknown"


class RegimeTag(enum.Enum):
    ZERO_ONLY = "ZeroOnly"
    INFINITY_ONLY = "InfinityOnly"
    NEITHER = "Neither"
    BOTH = "Both"
    UNKNOWN = "Unknown"


class D0Characterization(enum.Enum):
    KERNEL_OF_TRACE_ZERO = "KernelOfTraceZero"
    KERNEL_OF_TRACE_INFINITY = "KernelOfTraceInfinity"
    WHOLE_SPACE = "WholeSpace"
    INTERSECTION_OF_KERNELS = "IntersectionOfKernels"
    UNDETERMINED = "Undetermined"


_MEMBER_OF = {
    Verdict.CONVERGED: Membership.YES,
    Verdict.DIVERGED: Membership.NO,
    Verdict.INCONCLUSIVE: Membership.UNKNOWN,
}

_TAG_OF = {
    (Membership.YES, Membership.NO): RegimeTag.ZERO_ONLY,
    (Membership.NO, Membership.YES): RegimeTag.INFINITY_ONLY,
    (Membership.NO, Membership.NO): RegimeTag.NEITHER,
    (Membership.YES, Membership.YES): RegimeTag.BOTH,
}

_D0_OF = {
    RegimeTag.ZERO_ONLY: D0Characterization.KERNEL_OF_TRACE_ZERO,
    RegimeTag.INFINITY_ONLY: D0Characterization.KERNEL_OF_TRACE_INFINITY,
    RegimeTag.NEITHER: D0Characterization.WHOLE_SPACE,
    RegimeTag.BOTH: D0Characterization.INTERSECTION_OF_KERNELS,
    RegimeTag.UNKNOWN: D0Characterization.UNDETERMINED,
}


@dataclass(frozen=True)
class BpVerdict:
    member: Membership
    integral: QuadOutcome

    def to_dict(self):
        return {"member": self.member.value, "integral": self.integral.to_dict()}


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    zero: BpVerdict
    infinity: BpVerdict

    def to_dict(self):
        return {"tag": self.tag.value, "zero": self.zero.to_dict(), "infinity": self.infinity.to_dict()}


@dataclass(frozen=True)
class DensityReport:
    regime: Regime
    d0_characterization: D0Characterization
    trace_zero_wellposed: Membership
    trace_infinity_wellposed: Membership
    notes: str

    def to_dict(self):
        return {
            "regime": self.regime.tag.value,
            "d0": self.d0_characterization.value,
            "trace_zero_wellposed": self.trace_zero_wellposed.value,
            "trace_infinity_wellposed": self.trace_infinity_wellposed.value,
            "bp_zero": self.regime.zero.to_dict(),
            "bp_infinity": self.regime.infinity.to_dict(),
            "notes": self.notes,
        }


def _sigma_fn(w, p):
    return lambda t: dual_density(w, p, t)


def _analytic(S, a, b):
    with np.errstate(all="ignore"):
        value = float(S(b)) - float(S(a))
    return value


def sigma_integral(w: WeightProfile, p: float, a: float, b: float,
                   tol: float = QUAD_TOL) -> QuadOutcome:
    """Integral of the dual density over [a, b]; ``a`` may be 0, ``b`` may be inf.

    Uses the weight's closed-form antiderivative when it has one.
    """
    if not (0.0 <= a <= b):
        raise PreconditionError(f"need 0 <= a <= b, got [{a}, {b}]")
    if a == b:
        return QuadOutcome(0.0, 0.0, Verdict.CONVERGED, 0, "empty")
    S = w.sigma_primitive(p)
    if S is not None:
        value = _analytic(S, a, b)
        if math.isfinite(value):
            return QuadOutcome(value, 0.0, Verdict.CONVERGED, 0, "antiderivative")
        lo = a if a > 0 else b * 2.0 ** -8
        hi = b if math.isfinite(b) else a * 2.0 ** 8
        return QuadOutcome(_analytic(S, lo, hi), 0.0, Verdict.DIVERGED, 0, "antiderivative")
    return quad.integrate_any(_sigma_fn(w, p), a, b, tol)


def _hint_verdict(w, p, endpoint):
    """Short-circuit from endpoint hints, or None when there is no hint."""
    if w.hints is None:
        return None
    alpha = w.hints[0] if endpoint is quad.Endpoint.ZERO else w.hints[1]
    if endpoint is quad.Endpoint.ZERO:
        member = alpha < p - 1.0
        lo, hi = 0.0, SPLIT
    else:
        member = alpha > p - 1.0
        lo, hi = SPLIT, math.inf
    if not member:
        S = w.sigma_primitive(p)
        if S is not None:
            out = sigma_integral(w, p, lo, hi)
        else:
            span = (SPLIT * 2.0 ** -8, SPLIT) if endpoint is quad.Endpoint.ZERO else (SPLIT, SPLIT * 2.0 ** 8)
            part = quad.integrate(_sigma_fn(w, p), *span, QUAD_TOL)
            out = QuadOutcome(part.value, part.error_estimate, Verdict.DIVERGED, part.evaluations)
        return BpVerdict(Membership.NO, QuadOutcome(out.value, out.error_estimate, Verdict.DIVERGED,
                                                     out.evaluations, "endpoint-hint"))
    out = sigma_integral(w, p, lo, hi)
    if not out.converged:
        # the hint promised convergence but quadrature could not confirm it
        return None
    return BpVerdict(Membership.YES, QuadOutcome(out.value, out.error_estimate, Verdict.CONVERGED,
                                                  out.evaluations, "endpoint-hint+" + out.method))


@functools.lru_cache(maxsize=512)
def bp_zero(w: WeightProfile, p: float) -> BpVerdict:
    """Is the dual density integrable on (0, 1]?"""
    if not p > 1:
        raise PreconditionError(f"p must exceed 1, got {p}")
    hinted = _hint_verdict(w, p, quad.Endpoint.ZERO)
    if hinted is not None:
        return hinted
    out = quad.improper_to_zero(_sigma_fn(w, p), SPLIT, QUAD_TOL)
    return BpVerdict(_MEMBER_OF[out.verdict], out)


@functools.lru_cache(maxsize=512)
def bp_infinity(w: WeightProfile, p: float) -> BpVerdict:
    """Is the dual density integrable on [1, inf)?"""
    if not p > 1:
        raise PreconditionError(f"p must exceed 1, got {p}")
    hinted = _hint_verdict(w, p, quad.Endpoint.INFINITY)
    if hinted is not None:
        return hinted
    out = quad.improper_to_infinity(_sigma_fn(w, p), SPLIT, QUAD_TOL)
    return BpVerdict(_MEMBER_OF[out.verdict], out)


def regime(w: WeightProfile, p: float) -> Regime:
    z = bp_zero(w, p)
    i = bp_infinity(w, p)
    tag = _TAG_OF.get((z.member, i.member), RegimeTag.UNKNOWN)
    return Regime(tag, z, i)


_NOTES = {
    RegimeTag.ZERO_ONLY: (
        "D0 is the kernel of the trace at 0; the characterization is an equivalence "
        "(sharpness of the weight conditions, part i). Trace at 0 exists for every "
        "element; the set of functions vanishing at 0 is closed exactly because the "
        "weight is B_p(0) (sharpness of the closedness statements)."
    ),
    RegimeTag.INFINITY_ONLY: (
        "D0 is the kernel of the trace at infinity; equivalence by the sharpness of the "
        "weight conditions, part ii. Trace at 0 is not well defined since the weight is "
        "not B_p(0)."
    ),
    RegimeTag.NEITHER: (
        "Smooth compactly supported functions are dense in the whole space; equivalence "
        "by the sharpness of the weight conditions, part iii. Neither endpoint trace is "
        "well defined."
    ),
    RegimeTag.BOTH: (
        "D0 is the intersection of both trace kernels; equivalence by the sharpness of "
        "the weight conditions, part iv. Both traces are well defined."
    ),
    RegimeTag.UNKNOWN: (
        "At least one endpoint integral was inconclusive; no density characterization "
        "is reported."
    ),
}


def density_report(w: WeightProfile, p: float) -> DensityReport:
    reg = regime(w, p)
    return DensityReport(
        regime=reg,
        d0_characterization=_D0_OF[reg.tag],
        trace_zero_wellposed=reg.zero.member,
        trace_infinity_wellposed=reg.infinity.member,
        notes=_NOTES[reg.tag],
    )
