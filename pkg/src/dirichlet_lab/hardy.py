"""Hardy and conjugate Hardy operators between weighted Lebesgue spaces.

``H v(t) = integral of v over (0, t)`` and ``H* v(t) = integral over (t, inf)``.
Boundedness from ``L^p(w)`` to ``L^q(h)`` is decided by the classical
two-weight conditions: (C) for ``H`` and (C*) for ``H*``.  Sups are taken
on a geometric grid (a "grid sup"), not certified globally.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import quad
from .classify import Membership, bp_infinity, bp_zero, sigma_integral
from .errors import PreconditionError, UndeterminedError
from .quad import Endpoint, QuadOutcome, Verdict
from .space import DirichletFunction, seminorm, trace_zero
from .weights import WeightProfile, dual_density

__all__ = [
    "Case",
    "Operator",
    "ConditionReport",
    "Candidate",
    "InequalityReport",
    "hardy_transform",
    "conj_hardy_transform",
    "hardy_function",
    "conj_hardy_function",
    "condition_C",
    "condition_Cstar",
    "hardy_ratio",
    "candidate_family",
    "estimate_best_constant",
    "divergence_witness",
    "check_inequality",
]

GRID_LO = 1e-6
GRID_HI = 1e6
GRID_PER_DECADE = 20
TABLE_NODES = 512
SLOPE_DECADES = 2
SLOPE_THRESHOLD = 0.02
LIMIT_TOL = 1e-8
GOLDEN_ITERS = 60
QUAD_TOL = 1e-11
DEFAULT_SEED = 42


class Case(enum.Enum):
    PLEQ = "PLEQ"  # p <= q
    QLTP = "QLTP"  # q < p


class Operator(enum.Enum):
    HARDY = "Hardy"
    CONJUGATE = "Conjugate"


@dataclass(frozen=True)
class ConditionReport:
    condition: str
    applicable_case: Case
    quantities: Dict[str, float]
    bounded: Membership
    provenance: Dict[str, object] = field(default_factory=dict)
    note: str = ""

    def to_dict(self):
        prov = {}
        for key, val in self.provenance.items():
            prov[key] = val.to_dict() if isinstance(val, QuadOutcome) else val
        return {
            "condition": self.condition,
            "applicable_case": self.applicable_case.value,
            "quantities": dict(self.quantities),
            "bounded": self.bounded.value,
            "provenance": prov,
            "note": self.note,
        }


# transforms -----------------------------------------------------------


def _signed_improper(v, endpoint, x, points=()):
    """Integral of v toward ``endpoint`` from x, split into positive and negative parts."""
    go = quad.improper_to_zero if endpoint is Endpoint.ZERO else quad.improper_to_infinity
    mag = go(lambda t: np.abs(v(t)), x, QUAD_TOL, points)
    if mag.verdict is not Verdict.CONVERGED:
        return mag
    pos = go(lambda t: np.maximum(v(t), 0.0), x, QUAD_TOL, points)
    neg = go(lambda t: np.maximum(-np.asarray(v(t)), 0.0), x, QUAD_TOL, points)
    out = quad.combine(pos, neg)
    return QuadOutcome(pos.value - neg.value, out.error_estimate, out.verdict, out.evaluations,
                       out.method)


def hardy_transform(v: Callable, t: float, points: Sequence[float] = ()) -> float:
    """``integral of v over (0, t)``."""
    if not t > 0:
        raise PreconditionError(f"t must be positive, got {t}")
    out = _signed_improper(v, Endpoint.ZERO, t, points)
    if out.verdict is Verdict.DIVERGED:
        raise PreconditionError("Hv undefined: v is not integrable near 0")
    if not out.converged:
        raise UndeterminedError("Hv undetermined: integral near 0 inconclusive")
    return out.value


def conj_hardy_transform(v: Callable, t: float, points: Sequence[float] = ()) -> float:
    """``integral of v over (t, inf)``."""
    if not t > 0:
        raise PreconditionError(f"t must be positive, got {t}")
    out = _signed_improper(v, Endpoint.INFINITY, t, points)
    if out.verdict is Verdict.DIVERGED:
        raise PreconditionError("H*v undefined: v is not integrable near infinity")
    if not out.converged:
        raise UndeterminedError("H*v undetermined: integral near infinity inconclusive")
    return out.value


def hardy_function(v: Callable, points: Sequence[float] = (), label: str = "Hv",
                   support: Optional[Tuple[float, float]] = None) -> DirichletFunction:
    """``Hv`` as a Dirichlet function (derivative ``v``, anchored at 1)."""
    if support is not None:
        value = 0.0 if support[0] >= 1.0 else quad.integrate(v, support[0], min(1.0, support[1]),
                                                             QUAD_TOL, points=points).value
    else:
        value = hardy_transform(v, 1.0, points)
    return DirichletFunction(v, 1.0, value, label, tuple(points), support=support)


def conj_hardy_function(v: Callable, points: Sequence[float] = (), label: str = "H*v",
                        support: Optional[Tuple[float, float]] = None) -> DirichletFunction:
    """``H*v`` as a Dirichlet function (derivative ``-v``, anchored at 1)."""
    if support is not None:
        value = 0.0 if support[1] <= 1.0 else quad.integrate(v, max(1.0, support[0]), support[1],
                                                             QUAD_TOL, points=points).value
    else:
        value = conj_hardy_transform(v, 1.0, points)
    return DirichletFunction(lambda t: -np.asarray(v(t)), 1.0, value, label, tuple(points),
                             support=support)


# tabulated inner integrals -------------------------------------------


def _grid():
    decades = math.log10(GRID_HI / GRID_LO)
    return np.geomspace(GRID_LO, GRID_HI, int(round(decades * GRID_PER_DECADE)) + 1)


def _table_nodes():
    return np.geomspace(GRID_LO, GRID_HI, TABLE_NODES)


def _cells(f, ts):
    """Integrals of f over consecutive grid cells; None if any cell fails."""
    out = np.empty(len(ts) - 1)
    for i, (lo, hi) in enumerate(zip(ts[:-1], ts[1:])):
        r = quad.integrate(f, lo, hi, QUAD_TOL)
        if not r.converged:
            return None
        out[i] = r.value
    return out


def _sigma_cells(w, p, ts):
    S = w.sigma_primitive(p)
    if S is not None:
        vals = np.asarray(S(ts), dtype=float)
        d = np.diff(vals)
        if np.all(np.isfinite(d)):
            return d
    return _cells(lambda t: dual_density(w, p, t), ts)


def _head_tables(w, p, h, ts):
    """``S(t) = int_0^t sigma`` and ``H(t) = int_t^inf h`` on ``ts``.

    Returns (S, H, provenance) with None entries when an endpoint integral
    diverges and raises UndeterminedError when one is inconclusive.
    """
    prov = {}
    head = sigma_integral(w, p, 0.0, float(ts[0]))
    prov["sigma_head"] = head
    tail = quad.improper_to_infinity(h, float(ts[-1]), QUAD_TOL)
    prov["h_tail"] = tail
    for key, out in (("sigma_head", head), ("h_tail", tail)):
        if out.verdict is Verdict.INCONCLUSIVE:
            raise UndeterminedError(f"{key} integral inconclusive")
    S = H = None
    if head.converged:
        cells = _sigma_cells(w, p, ts)
        if cells is None:
            raise UndeterminedError("dual density cell integral failed")
        S = head.value + np.concatenate([[0.0], np.cumsum(cells)])
    if tail.converged:
        cells = _cells(h, ts)
        if cells is None:
            raise UndeterminedError("h cell integral failed")
        H = tail.value + np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]])
    return S, H, prov


def _tail_tables(w, p, h, ts):
    """``G(t) = int_0^t h`` and ``T(t) = int_t^inf sigma`` on ``ts``."""
    prov = {}
    head = quad.improper_to_zero(h, float(ts[0]), QUAD_TOL)
    prov["h_head"] = head
    tail = sigma_integral(w, p, float(ts[-1]), math.inf)
    prov["sigma_tail"] = tail
    for key, out in (("h_head", head), ("sigma_tail", tail)):
        if out.verdict is Verdict.INCONCLUSIVE:
            raise UndeterminedError(f"{key} integral inconclusive")
    G = T = None
    if head.converged:
        cells = _cells(h, ts)
        if cells is None:
            raise UndeterminedError("h cell integral failed")
        G = head.value + np.concatenate([[0.0], np.cumsum(cells)])
    if tail.converged:
        cells = _sigma_cells(w, p, ts)
        if cells is None:
            raise UndeterminedError("dual density cell integral failed")
        T = tail.value + np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]])
    return G, T, prov


class _LogTable:
    """Monotone cubic interpolation of a positive function in log-log space,
    continued linearly (a power law) beyond the table."""

    def __init__(self, ts, values):
        self.x = np.log(ts)
        self.y = np.log(values)
        self.f = PchipInterpolator(self.x, self.y, extrapolate=False)
        k = max(2, len(ts) // 64)
        self.s0 = (self.y[k] - self.y[0]) / (self.x[k] - self.x[0])
        self.s1 = (self.y[-1] - self.y[-1 - k]) / (self.x[-1] - self.x[-1 - k])

    def __call__(self, t):
        x = np.log(np.asarray(t, dtype=float))
        inside = np.asarray(self.f(np.clip(x, self.x[0], self.x[-1])))
        y = np.where(x < self.x[0], self.y[0] + self.s0 * (x - self.x[0]),
                     np.where(x > self.x[-1], self.y[-1] + self.s1 * (x - self.x[-1]), inside))
        return np.exp(y)


# sups on the grid ------------------------------------------------------


def _end_slopes(ts, F):
    k = SLOPE_DECADES * GRID_PER_DECADE
    lt = np.log(ts)
    with np.errstate(divide="ignore"):
        lf = np.log(F)
    s0 = float(np.polyfit(lt[:k + 1], lf[:k + 1], 1)[0]) if np.all(np.isfinite(lf[:k + 1])) else -math.inf
    s1 = float(np.polyfit(lt[-k - 1:], lf[-k - 1:], 1)[0]) if np.all(np.isfinite(lf[-k - 1:])) else math.inf
    return s0, s1


def _golden_max(F, lo, hi):
    """Maximize F on [lo, hi] in log t by golden-section search."""
    a, b = math.log(lo), math.log(hi)
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = F(math.exp(c)), F(math.exp(d))
    for _ in range(GOLDEN_ITERS):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = F(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = F(math.exp(d))
    return max(fc, fd)


def _refine(ts, F_grid, point_value):
    i = int(np.argmax(F_grid))
    lo = ts[max(i - 1, 0)]
    hi = ts[min(i + 1, len(ts) - 1)]
    return float(max(float(F_grid[i]), _golden_max(point_value, lo, hi)))


def _check_pq(p, q):
    for name, x in (("p", p), ("q", q)):
        if not (x > 1 and math.isfinite(x)):
            raise PreconditionError(f"{name} must lie in (1, inf), got {x}")


def _power_integral(g, prov, key):
    """Integral of g over (0, inf) split at 1."""
    out = quad.combine(quad.improper_to_zero(g, 1.0, QUAD_TOL),
                       quad.improper_to_infinity(g, 1.0, QUAD_TOL))
    prov[key] = out
    return out


def _verdict_of(outs):
    if any(o.verdict is Verdict.DIVERGED for o in outs):
        return Membership.NO
    if any(o.verdict is Verdict.INCONCLUSIVE for o in outs):
        return Membership.UNKNOWN
    return Membership.YES


def condition_C(w: WeightProfile, h: WeightProfile, p: float, q: float) -> ConditionReport:
    """Conditions (C) for boundedness of ``H: L^p(w) -> L^q(h)``."""
    _check_pq(p, q)
    case = Case.PLEQ if p <= q else Case.QLTP
    pc = p / (p - 1.0)
    ts = _grid() if case is Case.PLEQ else _table_nodes()
    try:
        S, H, prov = _head_tables(w, p, h, ts)
    except UndeterminedError as exc:
        return ConditionReport("C", case, {}, Membership.UNKNOWN, {}, str(exc))
    if S is None or H is None:
        why = "dual density not integrable at 0" if S is None else "h not integrable at infinity"
        names = ("E1",) if case is Case.PLEQ else ("E2", "E3")
        return ConditionReport("C", case, {n: math.inf for n in names}, Membership.NO, prov, why)

    if case is Case.PLEQ:
        F = H ** (1.0 / q) * S ** (1.0 / pc)
        s0, s1 = _end_slopes(ts, F)
        quantities = {"E1_grid_sup": float(F.max()), "slope_zero": s0, "slope_infinity": s1}
        if s0 < -SLOPE_THRESHOLD or s1 > SLOPE_THRESHOLD:
            quantities["E1"] = math.inf
            return ConditionReport("C", case, quantities, Membership.NO, prov,
                                   "grid sup; the product grows toward an endpoint")

        def point(t):
            i = min(int(np.searchsorted(ts, t)), len(ts) - 1)
            j = max(i - 1, 0)
            s = S[j] + _sigma_piece(w, p, ts[j], t)
            hh = H[i] + quad.integrate(h, t, ts[i], QUAD_TOL).value if t <= ts[i] else H[i]
            return hh ** (1.0 / q) * s ** (1.0 / pc)

        quantities["E1"] = _refine(ts, F, point)
        return ConditionReport("C", case, quantities, Membership.YES, prov, "grid sup")

    S_tab = _LogTable(ts, S)
    H_tab = _LogTable(ts, H)
    e2 = p / (p - q)
    f2 = p * (q - 1.0) / (p - q)
    e3 = q / (p - q)
    f3 = q * (p - 1.0) / p

    def g2(t):
        return H_tab(t) ** e2 * S_tab(t) ** f2 * dual_density(w, p, t)

    def g3(t):
        return H_tab(t) ** e3 * np.asarray(h(t)) * S_tab(t) ** f3

    o2 = _power_integral(g2, prov, "E2")
    o3 = _power_integral(g3, prov, "E3")
    quantities = {
        "E2": o2.value if o2.converged else math.inf,
        "E3": o3.value if o3.converged else math.inf,
    }
    return ConditionReport("C", case, quantities, _verdict_of([o2, o3]), prov,
                           "inner integrals tabulated and interpolated")


def _sigma_piece(w, p, a, b):
    if b <= a:
        return 0.0
    return sigma_integral(w, p, a, b, QUAD_TOL).value


def condition_Cstar(w: WeightProfile, h: WeightProfile, p: float, q: float) -> ConditionReport:
    """Conditions (C*) for boundedness of ``H*: L^p(w) -> L^q(h)``."""
    _check_pq(p, q)
    case = Case.PLEQ if p <= q else Case.QLTP
    ts = _grid() if case is Case.PLEQ else _table_nodes()
    try:
        G, T, prov = _tail_tables(w, p, h, ts)
    except UndeterminedError as exc:
        return ConditionReport("C*", case, {}, Membership.UNKNOWN, {}, str(exc))
    if G is None or T is None:
        why = "h not integrable at 0" if G is None else "dual density not integrable at infinity"
        return ConditionReport("C*", case, {"A": math.inf}, Membership.NO, prov, why)

    if case is Case.PLEQ:
        A = G ** (1.0 / q) * T ** (1.0 - 1.0 / p)
        s0, s1 = _end_slopes(ts, A)
        lim0 = 0.0 if (s0 > SLOPE_THRESHOLD or A[0] < LIMIT_TOL) else float(A[0])
        lim1 = 0.0 if (s1 < -SLOPE_THRESHOLD or A[-1] < LIMIT_TOL) else float(A[-1])
        quantities = {"A_grid_sup": float(A.max()), "A_limit_zero": lim0,
                      "A_limit_infinity": lim1, "slope_zero": s0, "slope_infinity": s1}
        if s0 < -SLOPE_THRESHOLD or s1 > SLOPE_THRESHOLD:
            quantities["A_sup"] = math.inf
            quantities["A_limit_zero" if s0 < -SLOPE_THRESHOLD else "A_limit_infinity"] = math.inf
            return ConditionReport("C*", case, quantities, Membership.NO, prov,
                                   "grid sup; A(t) grows toward an endpoint")

        def point(t):
            i = min(int(np.searchsorted(ts, t)), len(ts) - 1)
            j = max(i - 1, 0)
            g = G[j] + quad.integrate(h, ts[j], t, QUAD_TOL).value if t >= ts[j] else G[j]
            tt = T[i] + _sigma_piece(w, p, t, ts[i])
            return g ** (1.0 / q) * tt ** (1.0 - 1.0 / p)

        quantities["A_sup"] = _refine(ts, A, point)
        bounded = Membership.YES if lim0 == 0.0 and lim1 == 0.0 else Membership.NO
        return ConditionReport("C*", case, quantities, bounded, prov, "grid sup")

    G_tab = _LogTable(ts, G)
    T_tab = _LogTable(ts, T)
    e = p / (p - q)
    f = p * (q - 1.0) / (p - q)

    def g(t):
        return G_tab(t) ** e * T_tab(t) ** f * dual_density(w, p, t)

    o = _power_integral(g, prov, "A")
    return ConditionReport("C*", case, {"A": o.value if o.converged else math.inf},
                           _verdict_of([o]), prov, "inner integrals tabulated and interpolated")


# candidate ratios -----------------------------------------------------


@dataclass(frozen=True)
class Candidate:
    """A test function ``v`` for the ratio ``||Hv||_{q,h} / ||v||_{p,w}``.

    ``steps``: piecewise constant with ``values`` on cells of ``edges``.
    ``density``: ``sigma * M**(-alpha)`` on ``(edges[0], edges[-1])`` where
    ``M`` is the dual-density mass measured from the near endpoint
    (from ``edges[0]`` itself when ``alpha == 0``, which gives the
    energy-minimizing ramps).
    """

    kind: str
    edges: Tuple[float, ...]
    values: Tuple[float, ...] = ()
    alpha: float = 0.0

    def scaled(self, c):
        if self.kind != "steps":
            raise PreconditionError("only step candidates scale")
        return Candidate("steps", self.edges, tuple(c * x for x in self.values), self.alpha)


def _steps_norm(c, w, p):
    """``||v||_{L^p(w)} ** p`` for a step candidate."""
    total = 0.0
    for lo, hi, val in zip(c.edges[:-1], c.edges[1:], c.values):
        if val != 0:
            total += abs(val) ** p * quad.integrate(w, lo, hi, QUAD_TOL).value
    return total


def _signed_mass(w, p, base, lo, hi):
    """Vectorized ``t -> integral of sigma from base to t`` for t in [lo, hi].

    ``base`` may be 0 or inf.  Uses the antiderivative when there is one,
    otherwise a dense cumulative table with monotone cubic interpolation.
    """
    S = w.sigma_primitive(p)
    if S is not None:
        s_base = float(S(base))
        return lambda t: np.asarray(S(np.asarray(t, dtype=float)), dtype=float) - s_base
    n = max(65, int(64 * math.log10(hi / lo)) + 1)
    ts = np.geomspace(lo, hi, n)
    cells = _sigma_cells(w, p, ts)
    if cells is None:
        raise UndeterminedError("dual density cell integral failed")
    cum = np.concatenate([[0.0], np.cumsum(cells)])
    if base == 0.0:
        offset = sigma_integral(w, p, 0.0, lo).value
    elif math.isinf(base):
        offset = -(cum[-1] + sigma_integral(w, p, hi, math.inf).value)
    elif base <= lo:
        offset = _sigma_piece(w, p, base, lo)
    else:
        offset = -_sigma_piece(w, p, lo, base)
    table = PchipInterpolator(np.log(ts), cum + offset)
    return lambda t: table(np.log(np.asarray(t, dtype=float)))


def _density_parts(c, w, p, op):
    """(transform on the support, |transform| beyond it, ||v||^p) for density candidates.

    With ``m`` the dual-density mass measured from the near endpoint,
    ``v = sigma m^(-alpha)`` and the transform is an antiderivative in m.
    """
    a, b = c.edges[0], c.edges[-1]
    alpha = c.alpha
    if op is Operator.HARDY:
        M = _signed_mass(w, p, a if alpha == 0 else 0.0, a, b)
        m = M
    else:
        M = _signed_mass(w, p, b if alpha == 0 else math.inf, a, b)
        m = lambda t: -np.asarray(M(t))  # noqa: E731
    ma, mb = float(m(a)), float(m(b))
    near = ma if op is Operator.HARDY else mb

    def inside(t):
        return _antider(np.asarray(m(t)), alpha) - _antider(near, alpha)

    beyond = abs(_antider(mb, alpha) - _antider(ma, alpha))
    norm_p = abs(_antider(mb, alpha * p) - _antider(ma, alpha * p))
    return inside, beyond, norm_p


def _antider(m, alpha):
    """Antiderivative of ``m ** (-alpha)`` in m."""
    m = np.asarray(m, dtype=float)
    if alpha == 1.0:
        with np.errstate(divide="ignore"):
            out = np.log(m)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.power(m, 1.0 - alpha) / (1.0 - alpha)
    return float(out) if out.ndim == 0 else out


def _steps_transform(c, op):
    e = np.asarray(c.edges)
    vals = np.asarray(c.values)
    cum = np.concatenate([[0.0], np.cumsum(vals * np.diff(e))])
    total = cum[-1]
    if op is Operator.HARDY:
        return (lambda t: np.interp(t, e, cum)), abs(total)
    return (lambda t: total - np.interp(t, e, cum)), abs(total)


def hardy_ratio(c: Candidate, w: WeightProfile, h: WeightProfile, p: float, q: float,
                op: Operator = Operator.HARDY) -> float:
    """``||T v||_{L^q(h)} / ||v||_{L^p(w)}`` for ``T`` = H or H*, computed exactly
    up to quadrature error.  ``inf`` when the transform leaves ``L^q(h)``."""
    a, b = c.edges[0], c.edges[-1]
    if c.kind == "steps":
        inside, beyond = _steps_transform(c, op)
        norm_p = _steps_norm(c, w, p)
    else:
        inside, beyond, norm_p = _density_parts(c, w, p, op)
    if not norm_p > 0:
        return 0.0
    g = lambda t: np.abs(inside(t)) ** q * np.asarray(h(t))  # noqa: E731
    body = 0.0
    for lo, hi in zip(c.edges[:-1], c.edges[1:]):
        out = quad.integrate(g, lo, hi, QUAD_TOL)
        body += out.value
    tail_val = 0.0
    if beyond > 0:
        if op is Operator.HARDY:
            out = quad.improper_to_infinity(h, b, QUAD_TOL)
        else:
            out = quad.improper_to_zero(h, a, QUAD_TOL)
        if out.verdict is Verdict.DIVERGED:
            return math.inf
        if not out.converged:
            raise UndeterminedError("h mass beyond the candidate support inconclusive")
        tail_val = beyond ** q * out.value
    return (body + tail_val) ** (1.0 / q) / norm_p ** (1.0 / p)


def candidate_family(p: float, trials: int, seed: int = DEFAULT_SEED) -> List[Candidate]:
    """Deterministic candidates followed by ``trials`` seeded random step functions.

    Random candidates are drawn in order from one generator, so a larger
    ``trials`` extends a smaller one.
    """
    fam = []
    decades = [1e-4, 1e-2, 1.0, 1e2]
    for a in decades:
        for span in (2.0, 10.0, 100.0):
            fam.append(Candidate("steps", (a, a * span), (1.0,)))
    for a in decades:
        for span in (10.0, 1e2, 1e4):
            fam.append(Candidate("density", (a, a * span), (), 0.0))
    for a in (1e-4, 1.0):
        for span in (1e4, 1e6, 1e8):
            for da in (-0.1, -0.05, -0.02, 0.0):
                fam.append(Candidate("density", (a, a * span), (), 1.0 / p + da))
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        m = int(rng.integers(2, 9))
        lo = 10.0 ** rng.uniform(-3, 1)
        ratios = 10.0 ** rng.uniform(-1, 1, size=m)
        edges = lo * np.concatenate([[1.0], np.cumprod(1.0 + np.abs(ratios))])
        vals = rng.normal(size=m) + rng.uniform(0, 2)
        fam.append(Candidate("steps", tuple(edges.tolist()), tuple(vals.tolist())))
    return fam


def estimate_best_constant(w: WeightProfile, h: WeightProfile, p: float, q: float,
                           side: Operator = Operator.HARDY, trials: int = 64,
                           seed: int = DEFAULT_SEED, report: Optional[ConditionReport] = None):
    """Lower bound for the best constant: the largest candidate ratio.

    Returns (estimate, best candidate index).  Refuses unless the matching
    condition report says bounded = Yes.
    """
    if report is None:
        report = condition_C(w, h, p, q) if side is Operator.HARDY else condition_Cstar(w, h, p, q)
    if report.bounded is not Membership.YES:
        raise PreconditionError(f"operator not certified bounded (verdict {report.bounded.value})")
    best, idx = 0.0, -1
    for i, c in enumerate(candidate_family(p, trials, seed)):
        if c.kind == "density" and c.alpha > 0:
            needs = bp_zero if side is Operator.HARDY else bp_infinity
            if needs(w, p).member is not Membership.YES:
                continue
        try:
            r = hardy_ratio(c, w, h, p, q, side)
        except UndeterminedError:
            continue
        if r > best:  # strict: ties keep the smaller index
            best, idx = r, i
    return best, idx


def divergence_witness(w: WeightProfile, h: WeightProfile, p: float, q: float,
                       side: Operator = Operator.HARDY, steps: int = 8,
                       endpoint: Optional[Endpoint] = None):
    """Ramp candidates pushed toward an endpoint with their ratios.

    The default endpoint is read off the condition report (the side where
    an integral or the grid product blows up).  Returns the list of
    (candidate, ratio); for an unbounded operator the ratios grow without
    bound or are infinite.
    """
    if endpoint is None:
        rep = condition_C(w, h, p, q) if side is Operator.HARDY else condition_Cstar(w, h, p, q)
        endpoint = _offending_endpoint(rep, side)
    out = []
    for k in range(1, steps + 1):
        if endpoint is Endpoint.ZERO:
            a, b = 2.0 ** (-3 * k), 2.0 ** (-k)
        else:
            a, b = 2.0 ** k, 2.0 ** (3 * k)
        c = Candidate("density", (a, b), (), 0.0)
        out.append((c, hardy_ratio(c, w, h, p, q, side)))
    return out


def _offending_endpoint(rep, side):
    q = rep.quantities
    if rep.note.startswith("dual density not integrable at 0") or rep.note.startswith("h not integrable at 0"):
        return Endpoint.ZERO
    if "not integrable at infinity" in rep.note:
        return Endpoint.INFINITY
    s0 = q.get("slope_zero", 0.0)
    s1 = q.get("slope_infinity", 0.0)
    if s0 < -SLOPE_THRESHOLD:
        return Endpoint.ZERO
    if s1 > SLOPE_THRESHOLD:
        return Endpoint.INFINITY
    if q.get("A_limit_zero", 0.0) != 0.0:
        return Endpoint.ZERO
    if q.get("A_limit_infinity", 0.0) != 0.0:
        return Endpoint.INFINITY
    return Endpoint.ZERO if side is Operator.HARDY else Endpoint.INFINITY


# the inequality itself --------------------------------------------------


@dataclass(frozen=True)
class InequalityReport:
    lhs: float
    rhs: float
    slack: float
    holds: bool
    form: str
    obstruction: bool
    trace: Optional[float]
    note: str = ""

    def to_dict(self):
        return {
            "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack, "holds": self.holds,
            "form": self.form, "obstruction": self.obstruction, "trace": self.trace,
            "note": self.note,
        }


def check_inequality(u: DirichletFunction, w: WeightProfile, h: WeightProfile, p: float,
                     q: float, C: float, extended: bool = False) -> InequalityReport:
    """Check ``||u||_{L^q(h)} <= C (||u'||_{L^p(w)} [+ |Tr0 u|])``.

    The plain form applies to functions with zero trace at 0; ``extended``
    adds the trace term.  When the left side diverges because the trace is
    nonzero and ``h`` is not integrable near 0, the report flags that
    obstruction instead of a failed check.
    """
    _check_pq(p, q)
    trace = None
    if bp_zero(w, p).member is Membership.YES:
        tr = trace_zero(u, w, p)
        trace = 0.0 if abs(tr.value) <= 2 * tr.certified_error else tr.value
    semi = seminorm(u, w, p)
    g = lambda t: np.abs(u(t)) ** q * np.asarray(h(t))  # noqa: E731
    pts = u.breakpoints
    out = quad.combine(quad.improper_to_zero(g, 1.0, QUAD_TOL, pts),
                       quad.improper_to_infinity(g, 1.0, QUAD_TOL, pts))
    form = "extended" if extended else "plain"
    rhs = C * (semi + (abs(trace) if (extended and trace is not None) else 0.0))
    if out.verdict is Verdict.INCONCLUSIVE:
        raise UndeterminedError("lhs integral inconclusive")
    if out.verdict is Verdict.DIVERGED:
        h_head = quad.improper_to_zero(h, 1.0, QUAD_TOL)
        if trace not in (None, 0.0) and h_head.verdict is Verdict.DIVERGED:
            return InequalityReport(math.inf, rhs, -math.inf, False, form, True, trace,
                                    "nonzero trace at 0 against h not integrable near 0")
        return InequalityReport(math.inf, rhs, -math.inf, False, form, False, trace,
                                "lhs integral diverges")
    lhs = max(out.value, 0.0) ** (1.0 / q)
    return InequalityReport(lhs, rhs, rhs - lhs, lhs <= rhs, form, False, trace)
