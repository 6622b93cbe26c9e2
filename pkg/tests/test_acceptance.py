"""Acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary (see conftest.py) and when this file is run as a script.
Oracles are closed forms or scipy quadrature, never the code under test.
"""

import io
import math
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import integrate as sint

from dirichlet_lab.approx import Construction, convergence_diagnostic
from dirichlet_lab.classify import D0Characterization, Membership, RegimeTag, density_report
from dirichlet_lab.cli import main
from dirichlet_lab.hardy import (condition_C, conj_hardy_function, divergence_witness,
                                 estimate_best_constant, hardy_function)
from dirichlet_lab.quad import Endpoint
from dirichlet_lab.space import (DirichletFunction, constant_function, equivalence_constant,
                                 morrey_modulus, norm_at, omega0, power_derivative, seminorm,
                                 step_derivative, trace_zero, weighted_distance)
from dirichlet_lab.varmin import MinimizerProblem, Side, discrete_minimizer, minimal_energy
from dirichlet_lab.weights import dual_density, make_power, make_two_exponent, parse_weight

RESULTS = []


def record(number, name, ok, detail, started):
    line = f"{'PASS' if ok else 'FAIL'} [{number}] {name}: {detail} ({time.perf_counter() - started:.1f}s)"
    RESULTS.append(line)
    print(line)
    return ok


# 1 -----------------------------------------------------------------------

def test_regime_table():
    t0 = time.perf_counter()
    table = [
        (make_power(0.5), RegimeTag.ZERO_ONLY, D0Characterization.KERNEL_OF_TRACE_ZERO),
        (make_power(2.0), RegimeTag.INFINITY_ONLY, D0Characterization.KERNEL_OF_TRACE_INFINITY),
        (make_power(1.0), RegimeTag.NEITHER, D0Characterization.WHOLE_SPACE),
        (make_two_exponent(0.5, 1.5), RegimeTag.BOTH, D0Characterization.INTERSECTION_OF_KERNELS),
    ]
    bad = []
    for w, tag, d0 in table:
        rep = density_report(w, 2.0)
        if rep.regime.tag is not tag or rep.d0_characterization is not d0:
            bad.append(w.label)
    scanned = 0
    for p in (1.5, 2.0, 3.0):
        for delta in (-1.0, -0.75, -0.5, -0.25, 0.25, 0.5, 0.75, 1.0):
            alpha = p - 1 + delta
            # analytic rule: B_p(0) iff alpha < p-1, B_p(inf) iff alpha > p-1
            expect = RegimeTag.ZERO_ONLY if alpha < p - 1 else RegimeTag.INFINITY_ONLY
            for w in (make_power(alpha), parse_weight(f"t^{alpha!r}").stripped()):
                scanned += 1
                if density_report(w, p).regime.tag is not expect:
                    bad.append(f"alpha={alpha} p={p} {w.label}")
    ok = record(1, "four-regime table and power scan", not bad,
                f"4 table rows, {scanned} scan cases, misclassified={bad}", t0)
    assert ok


# 2 -----------------------------------------------------------------------

def _cell_flux(sol, w, p):
    nodes, vals = sol.nodes, sol.values
    h = nodes[1] - nodes[0]
    masses = np.array([sint.quad(w, a, b, epsabs=0, epsrel=1e-13)[0]
                       for a, b in zip(nodes[:-1], nodes[1:])])
    d = np.diff(vals) / h
    return masses * np.abs(d) ** (p - 1) * np.sign(d) / h


def test_minimizer_oracle():
    t0 = time.perf_counter()
    weights = [make_power(0.0), make_power(0.5), make_power(1.0), make_two_exponent(0.5, 1.5)]
    worst_gap, worst_under, worst_el = 0.0, 0.0, 0.0
    cases = 0
    for w in weights:
        for p in (1.5, 2.0, 3.0):
            prob = MinimizerProblem(0.5, 4.0, 1.0, Side.LEFT, p, w)
            # independent normalizer: scipy quadrature of the dual density
            N = sint.quad(lambda t: dual_density(w, p, t), 0.5, 4.0, epsrel=1e-13)[0]
            oracle = N ** (1 - p)
            assert minimal_energy(prob) == pytest.approx(oracle, rel=1e-10)
            sol = discrete_minimizer(prob, 256)
            rel = sol.energy / oracle - 1
            worst_gap = max(worst_gap, abs(rel))
            worst_under = max(worst_under, -rel)
            flux = _cell_flux(sol, w, p)
            worst_el = max(worst_el, float(np.ptp(flux) / np.max(np.abs(flux))))
            cases += 1
    ok = worst_gap <= 1e-2 and worst_under <= 1e-10 and worst_el <= 1e-5
    record(2, "minimizer oracle", ok,
           f"{cases} cases, max rel gap {worst_gap:.2e}, max undershoot {max(worst_under, 0):.1e}, "
           f"Euler-Lagrange flux spread {worst_el:.1e}", t0)
    assert ok


# 3 -----------------------------------------------------------------------

def test_caloric_gap():
    t0 = time.perf_counter()
    horizons = [2 ** k for k in range(1, 11)]
    masses = {  # integral of sigma over (1, K) at p = 2, closed form
        0.0: lambda K: K - 1.0,
        0.5: lambda K: 2.0 * (math.sqrt(K) - 1.0),
        2.0: lambda K: 1.0 - 1.0 / K,
    }
    worst = 0.0
    for alpha in (0.0, 0.5):
        d = convergence_diagnostic(constant_function(1.0), Construction.CALORIC_TAIL,
                                   make_power(alpha), 2.0, horizons)
        for step, K in zip(d.steps, horizons):
            exact = masses[alpha](K) ** -1.0
            worst = max(worst, abs(step.gap ** 2 - exact) / exact)
    d = convergence_diagnostic(constant_function(1.0), Construction.CALORIC_TAIL, make_power(2.0),
                               2.0, horizons)
    stall = abs(d.steps[-1].gap ** 2 - 1.0)
    for step, K in zip(d.steps, horizons):
        exact = masses[2.0](K) ** -1.0
        worst = max(worst, abs(step.gap ** 2 - exact) / exact)
    ok = worst <= 1e-4 and stall <= 1e-3 and d.verdict.value == "Stalling"
    record(3, "caloric gap identity", ok,
           f"max rel mismatch {worst:.1e}, t^2 stall |gap^2 - 1| = {stall:.2e} ({d.verdict.value})", t0)
    assert ok


# 4 -----------------------------------------------------------------------

def test_trace_certification():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4)
    violations, mismatches = 0, 0
    for _ in range(50):
        p = float(rng.uniform(1.3, 4.0))
        alpha = float(rng.uniform(-0.5, p - 1.2))
        beta = float(rng.uniform((-0.8 - alpha) / p, 1.5))
        c = float(rng.uniform(-3, 3))
        a0 = float(rng.uniform(-3, 3))
        w = make_power(alpha)
        u = power_derivative(c, beta, anchor_value=a0)
        exact = a0 - c / (beta + 1)
        tr = trace_zero(u, w, p, tol=1e-8)
        if abs(tr.value - exact) > 2 * tr.certified_error + 1e-13:
            mismatches += 1
        for k in range(1, 21):
            t = 2.0 ** -k
            residual = abs(c) * t ** (beta + 1) / (beta + 1)
            e = beta * p + alpha + 1  # energy over (0, t) in closed form
            energy = abs(c) ** p * t ** e / e
            bound = energy ** (1 / p) * omega0(w, p, t)
            if residual > bound * (1 + 1e-9):
                violations += 1
    # tightness: u = 3 + t, omega = 1, p = 2; residual t, bound sqrt(t) sqrt(t)
    u = DirichletFunction.from_expression("1", anchor=1.0, anchor_value=4.0)
    one = make_power(0.0)
    worst_ratio = 0.0
    for k in range(1, 21):
        t = 2.0 ** -k
        residual = abs(u(t) - 3.0)
        energy = t
        bound = energy ** 0.5 * omega0(one, 2.0, t)
        worst_ratio = max(worst_ratio, abs(bound / residual - 1))
    ok = violations == 0 and mismatches == 0 and worst_ratio <= 1e-6
    record(4, "trace certification", ok,
           f"50 functions x 20 probes, bound violations {violations}, trace mismatches {mismatches}, "
           f"tightness |ratio-1| {worst_ratio:.1e}", t0)
    assert ok


# 5 -----------------------------------------------------------------------

def _random_steps(rng):
    m = int(rng.integers(1, 6))
    edges = np.sort(rng.uniform(0.05, 8.0, size=m + 1))
    vals = rng.normal(size=m)
    return edges, vals


def test_isometry():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    worst = 0.0
    for side in (Endpoint.ZERO, Endpoint.INFINITY):
        for _ in range(20):
            p = float(rng.choice([1.5, 2.0, 3.0]))
            alpha = float(rng.uniform(-0.5, p - 1.1)) if side is Endpoint.ZERO \
                else float(rng.uniform(p - 0.9, p + 2))
            w = make_power(alpha)
            edges, vals = _random_steps(rng)
            v = step_derivative(edges, vals).derivative
            pts = tuple(edges)
            f = hardy_function(v, pts) if side is Endpoint.ZERO else conj_hardy_function(v, pts)
            exact = sum(abs(x) ** p * (b ** (alpha + 1) - a ** (alpha + 1)) / (alpha + 1)
                        for x, a, b in zip(vals, edges[:-1], edges[1:])) ** (1 / p)
            got = norm_at(f, w, p, side)
            worst = max(worst, abs(got - exact) / exact)
    ok = worst <= 1e-6
    record(5, "isometry of H and H*", ok, f"40 random v, max rel error {worst:.1e}", t0)
    assert ok


# 6 -----------------------------------------------------------------------

def test_hardy_conditions():
    t0 = time.perf_counter()
    one = make_power(0.0)
    errs = []
    verdicts = []
    for p in (1.5, 2.0, 3.0):
        rep = condition_C(one, make_power(-p), p, p)
        errs.append(abs(rep.quantities["E1"] - (p - 1) ** (-1 / p)))
        verdicts.append(rep.bounded is Membership.YES)
    est, _ = estimate_best_constant(one, make_power(-2.0), 2.0, 2.0, trials=64)
    no_rep = condition_C(one, make_power(-3.0), 2.0, 2.0)
    ratios = [r for _, r in divergence_witness(one, make_power(-3.0), 2.0, 2.0)]
    diverging = all(b >= a for a, b in zip(ratios, ratios[1:])) and ratios[-1] > 10 * ratios[0]
    ok = max(errs) <= 1e-6 and all(verdicts) and est >= 1.8 and \
        no_rep.bounded is Membership.NO and diverging
    record(6, "Hardy conditions", ok,
           f"E1 max abs error {max(errs):.1e}, estimate {est:.4f}, "
           f"No-pair witness ratios {ratios[0]:.3g} -> {ratios[-1]:.3g}", t0)
    assert ok


# 7 -----------------------------------------------------------------------

def test_norm_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    weights = [make_power(0.0), make_power(0.5), make_two_exponent(0.5, 1.5), make_power(-1.0)]
    violations, endpoint_trials = 0, 0
    for i in range(100):
        w = weights[i % len(weights)]
        edges, vals = _random_steps(rng)
        u = step_derivative(edges, vals, anchor_value=float(rng.normal()))
        b = float(rng.uniform(0.1, 10))
        if i % 5 == 0:
            a, left = 0.0, Endpoint.ZERO  # all these weights are B_2(0)
            endpoint_trials += 1
        else:
            a = float(rng.uniform(0.05, b))
            left = a
        C = equivalence_constant(w, 2.0, a, b).factor
        na, nb = norm_at(u, w, 2.0, left), norm_at(u, w, 2.0, b)
        if na > C * nb * (1 + 1e-9) or nb > C * na * (1 + 1e-9):
            violations += 1
    ok = violations == 0
    record(7, "norm equivalence", ok,
           f"100 trials ({endpoint_trials} anchored at 0), violations {violations}", t0)
    assert ok


# 8 -----------------------------------------------------------------------

def test_morrey():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    weights = [make_power(0.0), make_power(1.0), make_two_exponent(0.5, 1.5)]
    violations = 0
    for i in range(50):
        w = weights[i % 3]
        p = float(rng.choice([1.5, 2.0, 3.0]))
        edges, vals = _random_steps(rng)
        u = step_derivative(edges, vals)
        grid = np.sort(rng.uniform(0.02, 10, size=int(rng.integers(2, 12))))
        if morrey_modulus(u, w, p, grid) > seminorm(u, w, p) + 1e-6:
            violations += 1
    axiom_err = 0.0
    for i in range(30):
        w = weights[i % 3]
        x, y, z = rng.uniform(0.01, 20, size=3)
        d = lambda s, t: weighted_distance(w, 2.0, s, t)  # noqa: E731
        axiom_err = max(axiom_err, abs(d(x, y) - d(y, x)),
                        d(x, y) - d(x, z) - d(z, y))
        lo, mid, hi = sorted((x, y, z))
        axiom_err = max(axiom_err, abs(d(lo, hi) - d(lo, mid) - d(mid, hi)))
    ok = violations == 0 and axiom_err <= 1e-9
    record(8, "Morrey bound and distance axioms", ok,
           f"50 cases, violations {violations}; 30 triples, worst axiom defect {axiom_err:.1e}", t0)
    assert ok


# 9 -----------------------------------------------------------------------

def _cli(argv):
    out = subprocess.run([sys.executable, "-m", "dirichlet_lab", *argv], capture_output=True,
                         check=False)
    return out.returncode, out.stdout


def test_determinism():
    t0 = time.perf_counter()
    commands = [
        ["classify", "--weight", "t^0.5*(1+t)", "--p", "2", "--seed", "42"],
        ["minimize", "--weight", "t", "--p", "3", "--k", "1", "--K", "4", "--seed", "42"],
        ["hardy", "--weight", "1", "--h", "t^-2", "--estimate", "--trials", "16", "--seed", "42"],
    ]
    identical = []
    for argv in commands:
        first, second = _cli(argv), _cli(argv)
        buf = io.StringIO()
        main(argv, stdout=buf)
        identical.append(first == second and first[0] == 0 and
                         first[1].decode() == buf.getvalue())
    ok = all(identical)
    record(9, "CLI determinism", ok, f"byte-identical JSON per command: {identical}", t0)
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
