"""Weighted p-energy minimizers on a compact interval.

Minimize ``E(phi) = integral over [k, K] of |phi'|^p w`` subject to a
nonzero boundary value ``a`` at one end and ``0`` at the other.  The
minimizer has ``|phi'|^(p-1) w`` constant, hence ``phi'`` proportional to
the dual density; the discrete oracle solves the same problem on a grid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from . import quad
from .classify import sigma_integral
from .errors import DescentError, PreconditionError, UndeterminedError
from .weights import WeightProfile, dual_density

__all__ = [
    "Side",
    "MinimizerProblem",
    "MinimizerSolution",
    "DiscreteSolution",
    "closed_form_minimizer",
    "energy",
    "minimal_energy",
    "discrete_minimizer",
    "flux",
]

QUAD_TOL = 1e-12
ARMIJO = 1e-4
MAX_NEWTON = 200
GRAD_TOL = 1e-10
GRAD_TOL_NEAR_ONE = 1e-6
ILL_CONDITIONED_P = 1.2


class Side(enum.Enum):
    LEFT = "LeftConstraint"    # phi(k) = a, phi(K) = 0
    RIGHT = "RightConstraint"  # phi(k) = 0, phi(K) = a


@dataclass(frozen=True)
class MinimizerProblem:
    k: float
    K: float
    a: float
    side: Side
    p: float
    weight: WeightProfile

    def __post_init__(self):
        if not (0 < self.k < self.K < math.inf):
            raise PreconditionError(f"need 0 < k < K < inf, got k={self.k}, K={self.K}")
        if self.a == 0 or not math.isfinite(self.a):
            raise PreconditionError("boundary value a must be finite and nonzero")
        if not (self.p > 1 and math.isfinite(self.p)):
            raise PreconditionError(f"p must lie in (1, inf), got {self.p}")

    @property
    def boundary(self):
        """(phi(k), phi(K))."""
        return (self.a, 0.0) if self.side is Side.LEFT else (0.0, self.a)


@dataclass(frozen=True)
class MinimizerSolution:
    evaluate: Callable
    derivative: Callable
    minimal_energy: float
    normalizer: float
    problem: MinimizerProblem


@dataclass(frozen=True)
class DiscreteSolution:
    nodes: np.ndarray
    values: np.ndarray
    energy: float
    iterations: int
    grad_norm: float


def _normalizer(prob):
    out = sigma_integral(prob.weight, prob.p, prob.k, prob.K, QUAD_TOL)
    if not out.converged:
        raise UndeterminedError(f"integral of the dual density over [{prob.k}, {prob.K}] failed")
    return out.value


def minimal_energy(prob: MinimizerProblem) -> float:
    """``|a|^p * N^(1-p)`` with ``N`` the dual-density mass of [k, K]."""
    return abs(prob.a) ** prob.p * _normalizer(prob) ** (1.0 - prob.p)


def _mass_from(prob, N):
    """``t -> integral of sigma over [k, t]`` on [k, K], exact at both ends."""
    w, p, k, K = prob.weight, prob.p, prob.k, prob.K
    S = w.sigma_primitive(p)

    def one(t):
        if t <= k:
            return 0.0
        if t >= K:
            return N
        if S is not None:
            return float(S(t)) - float(S(k))
        return quad.integrate(lambda x: dual_density(w, p, x), k, t, QUAD_TOL).value

    def mass(t):
        arr = np.asarray(t, dtype=float)
        out = np.array([one(x) for x in np.atleast_1d(arr).ravel()])
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    return mass


def closed_form_minimizer(prob: MinimizerProblem) -> MinimizerSolution:
    """The exact minimizer: a ramp whose slope is proportional to sigma."""
    N = _normalizer(prob)
    mass = _mass_from(prob, N)
    a, w, p = prob.a, prob.weight, prob.p
    left = prob.side is Side.LEFT

    def evaluate(t):
        m = np.asarray(mass(t), dtype=float)
        frac = (N - m) / N if left else m / N
        out = a * frac
        return float(out) if np.ndim(out) == 0 else out

    def derivative(t):
        s = dual_density(w, p, t)
        return (-a if left else a) * np.asarray(s) / N

    return MinimizerSolution(evaluate, derivative, abs(a) ** p * N ** (1.0 - p), N, prob)


def energy(phi_derivative: Callable, w: WeightProfile, p: float, k: float, K: float,
           points=()) -> float:
    """``integral over [k, K] of |phi'|^p w``."""
    if not 0 < k < K:
        raise PreconditionError(f"need 0 < k < K, got k={k}, K={K}")
    out = quad.integrate(lambda t: np.abs(phi_derivative(t)) ** p * w(t), k, K, QUAD_TOL,
                         points=points)
    if not out.converged:
        raise UndeterminedError("energy integral did not converge")
    return out.value


def flux(solution: MinimizerSolution, t):
    """``|phi'|^(p-1) sign(phi') w``; constant in t for the minimizer."""
    d = np.asarray(solution.derivative(t), dtype=float)
    p = solution.problem.p
    return np.abs(d) ** (p - 1.0) * np.sign(d) * np.asarray(solution.problem.weight(t))


def _cell_masses(prob, nodes):
    w = prob.weight
    masses = np.empty(len(nodes) - 1)
    for i, (lo, hi) in enumerate(zip(nodes[:-1], nodes[1:])):
        out = quad.integrate(w, lo, hi, 1e-13)
        if not out.converged:
            raise UndeterminedError(f"weight mass over [{lo}, {hi}] did not converge")
        masses[i] = out.value
    return masses


def _discrete_energy(x, masses, h, p, left, right):
    phi = np.concatenate([[left], x, [right]])
    return math.fsum(masses * np.abs(np.diff(phi) / h) ** p)


def discrete_minimizer(prob: MinimizerProblem, n: int) -> DiscreteSolution:
    """Minimize the energy over piecewise linear functions on ``n`` uniform nodes.

    Cell weights are exact weight masses, so the discrete energy is the true
    energy of the piecewise linear function and can never undershoot the
    continuum minimum.  p = 2 is one tridiagonal solve; other p use damped
    Newton steps with a tridiagonal Hessian and Armijo backtracking.
    """
    if n < 3:
        raise PreconditionError("need at least 3 nodes")
    p = prob.p
    nodes = np.linspace(prob.k, prob.K, n)
    h = nodes[1] - nodes[0]
    masses = _cell_masses(prob, nodes)
    left, right = prob.boundary
    m = n - 2

    if p == 2.0:
        ab = np.zeros((3, m))
        ab[1] = masses[:-1] + masses[1:]
        ab[0, 1:] = -masses[1:-1]
        ab[2, :-1] = -masses[1:-1]
        rhs = np.zeros(m)
        rhs[0] += masses[0] * left
        rhs[-1] += masses[-1] * right
        x = solve_banded((1, 1), ab, rhs)
        return DiscreteSolution(nodes, np.concatenate([[left], x, [right]]),
                                _discrete_energy(x, masses, h, p, left, right), 1, 0.0)

    x = np.linspace(left, right, n)[1:-1]
    tol = GRAD_TOL_NEAR_ONE if p < ILL_CONDITIONED_P else GRAD_TOL
    scale_h = h ** -p

    def grad_hess(x):
        phi = np.concatenate([[left], x, [right]])
        d = np.diff(phi)
        ad = np.abs(d)
        flux_cell = p * masses * ad ** (p - 1.0) * np.sign(d) * scale_h
        g = flux_cell[:-1] - flux_cell[1:]
        # size of the individual terms, for a relative stopping rule
        size = max(float(np.max(np.abs(flux_cell))), 1e-300)
        floor = 1e-12 * max(float(ad.max()), 1e-300)
        curv = p * (p - 1.0) * masses * np.maximum(ad, floor) ** (p - 2.0) * scale_h
        return g, curv, size

    E = _discrete_energy(x, masses, h, p, left, right)
    gnorm = math.inf
    for it in range(1, MAX_NEWTON + 1):
        g, curv, size = grad_hess(x)
        gnorm = float(np.max(np.abs(g))) / size
        if gnorm <= tol:
            return DiscreteSolution(nodes, np.concatenate([[left], x, [right]]), E, it, gnorm)
        ab = np.zeros((3, m))
        ab[1] = curv[:-1] + curv[1:]
        ab[0, 1:] = -curv[1:-1]
        ab[2, :-1] = -curv[1:-1]
        step = -solve_banded((1, 1), ab, g)
        slope = float(g @ step)
        if not slope < 0:
            step = -g
            slope = -float(g @ g)
        alpha = 1.0
        while True:
            trial = x + alpha * step
            Et = _discrete_energy(trial, masses, h, p, left, right)
            if Et <= E + ARMIJO * alpha * slope:
                break
            alpha *= 0.5
            if alpha < 1e-14:
                g2, _, size2 = grad_hess(x)
                raise DescentError("line search stalled", float(np.max(np.abs(g2))) / size2)
        x, E = trial, Et
    raise DescentError(f"no convergence in {MAX_NEWTON} Newton steps", gnorm)
