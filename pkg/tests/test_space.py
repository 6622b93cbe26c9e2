import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dirichlet_lab.errors import PreconditionError, TraceUndefinedError
from dirichlet_lab.quad import Endpoint
from dirichlet_lab.space import (DirichletFunction, asymptotic_residual, constant_function,
                                 equivalence_constant, morrey_modulus, norm_at, omega0, omega_inf,
                                 power_derivative, seminorm, step_derivative, trace_infinity,
                                 trace_zero, weighted_distance)
from dirichlet_lab.weights import make_power, make_two_exponent, parse_weight

ONE = make_power(0.0)


class TestFunctionModel:
    def test_anchor_and_values(self):
        u = DirichletFunction.from_expression("2*t", anchor=1.0, anchor_value=5.0)
        assert u(1.0) == 5.0
        assert u(3.0) == pytest.approx(13.0)
        assert u(np.array([0.5, 2.0])) == pytest.approx([4.25, 8.0])

    def test_json_round_trip(self):
        u = DirichletFunction.from_expression("t^-2", anchor=2.0, anchor_value=-1.0, label="x")
        v = DirichletFunction.from_json(u.to_json())
        for t in (0.3, 1.0, 7.0):
            assert v(t) == pytest.approx(u(t), rel=1e-12)

    def test_json_missing_key(self):
        with pytest.raises(PreconditionError):
            DirichletFunction.from_json('{"anchor": 1}')

    def test_domain(self):
        with pytest.raises(PreconditionError):
            constant_function(1.0)(0.0)

    @given(st.floats(0.1, 10), st.floats(0.1, 10))
    def test_reanchor_preserves_values(self, a, t):
        u = power_derivative(1.5, -0.5)
        assert u.reanchored(a)(t) == pytest.approx(u(t), rel=1e-10, abs=1e-12)

    def test_step_function_exact(self):
        u = step_derivative([1.0, 2.0, 4.0], [1.0, -0.5], anchor_value=3.0)
        assert u(0.5) == 3.0
        assert u(2.0) == 4.0
        assert u(10.0) == pytest.approx(3.0)


class TestModuli:
    @pytest.mark.parametrize("alpha,t,expected", [
        (0.0, 4.0, 2.0),           # (integral of 1 over (0,4))^(1/2)
        (0.5, 1.0, math.sqrt(2)),  # (2 sqrt t)^(1/2)
        (-1.0, 8.0, 4 * math.sqrt(2)),  # sigma = t: (t^2/2)^(1/2)
    ])
    def test_omega0(self, alpha, t, expected):
        assert omega0(make_power(alpha), 2.0, t) == pytest.approx(expected, rel=1e-10)

    @pytest.mark.parametrize("alpha,t,expected", [(2.0, 1.0, 1.0), (2.0, 4.0, 0.5)])
    def test_omega_inf(self, alpha, t, expected):
        assert omega_inf(make_power(alpha), 2.0, t) == pytest.approx(expected, rel=1e-10)

    def test_undefined(self):
        with pytest.raises(TraceUndefinedError) as info:
            omega0(make_power(1.0), 2.0, 1.0)
        assert info.value.code == "E_TRACE_UNDEFINED"
        with pytest.raises(TraceUndefinedError):
            omega_inf(ONE, 2.0, 1.0)

    @given(st.floats(0.01, 100), st.floats(0.01, 100))
    def test_monotone(self, s, t):
        w = make_two_exponent(0.5, 1.5)
        lo, hi = min(s, t), max(s, t)
        assert omega0(w, 2.0, lo) <= omega0(w, 2.0, hi) * (1 + 1e-12)
        assert omega_inf(w, 2.0, lo) >= omega_inf(w, 2.0, hi) * (1 - 1e-12)


class TestSeminorm:
    def test_tent(self):
        u = step_derivative([0.5, 1.0, 2.0], [2.0, -1.0])
        # 4 * 0.5 + 1 * 1 = 3
        assert seminorm(u, ONE, 2.0) == pytest.approx(math.sqrt(3.0), rel=1e-12)

    def test_divergent(self):
        assert seminorm(DirichletFunction.from_expression("1"), ONE, 2.0) == math.inf

    def test_norm_at_point_and_endpoint(self):
        u = step_derivative([1.0, 2.0], [1.0])  # 0 then ramp to 1
        assert norm_at(u, ONE, 2.0, 2.0) == pytest.approx(2.0)
        assert norm_at(u, ONE, 2.0, Endpoint.ZERO) == pytest.approx(1.0, abs=1e-9)

    def test_norm_at_needs_bp(self):
        u = step_derivative([1.0, 2.0], [1.0])
        with pytest.raises(TraceUndefinedError):
            norm_at(u, make_power(1.0), 2.0, Endpoint.ZERO)


class TestTrace:
    def test_affine_zero(self):
        u = DirichletFunction.from_expression("1", anchor=1.0, anchor_value=4.0)  # 3 + t
        tr = trace_zero(u, ONE, 2.0)
        assert tr.converged
        assert abs(tr.value - 3.0) <= 2 * tr.certified_error + 1e-14

    def test_trace_infinity(self):
        # 2 - 1/t with a weight that keeps the energy finite
        u = DirichletFunction.from_expression("t^-2", anchor=1.0, anchor_value=1.0)
        tr = trace_infinity(u, make_two_exponent(4.0, 1.5), 2.0)
        assert tr.converged
        assert tr.value == pytest.approx(2.0, abs=2 * tr.certified_error + 1e-12)

    def test_trace_undefined(self):
        with pytest.raises(TraceUndefinedError):
            trace_zero(constant_function(1.0), make_power(1.0), 2.0)

    @given(st.floats(-0.45, 0.9), st.floats(-2, 2), st.floats(-3, 3))
    def test_power_family_certified(self, beta, c, anchor_value):
        # u' = c t^beta, omega = 1, p = 2: energy near 0 finite for beta > -1/2
        u = power_derivative(c, beta, anchor_value=anchor_value)
        exact = anchor_value - c / (beta + 1)
        tr = trace_zero(u, ONE, 2.0, tol=1e-6)
        assert abs(tr.value - exact) <= max(tr.certified_error, 1e-12) * 2

    def test_to_dict(self):
        tr = trace_zero(constant_function(2.0), ONE, 2.0)
        assert tr.to_dict()["side"] == "Zero"
        assert tr.value == 2.0


class TestResidual:
    def test_tight_for_affine(self):
        # u = 3 + t, omega = 1: (u(t) - 3) / Omega0(t) = t / sqrt(t) = sqrt(t)
        u = DirichletFunction.from_expression("1", anchor=1.0, anchor_value=4.0)
        assert asymptotic_residual(u, ONE, 2.0, Endpoint.ZERO, 0.25, trace=3.0) == \
            pytest.approx(0.5, rel=1e-12)

    @given(st.floats(1e-4, 1.0))
    def test_bounded_by_local_energy(self, t):
        u = DirichletFunction.from_expression("1", anchor=1.0, anchor_value=4.0)
        a = asymptotic_residual(u, ONE, 2.0, Endpoint.ZERO, t, trace=3.0)
        local = math.sqrt(t)  # energy over (0, t) to the power 1/p
        assert abs(a) <= local * (1 + 1e-12)


class TestEquivalence:
    def test_half_power(self):
        c = equivalence_constant(make_power(0.5), 2.0, 0.0, 1.0)
        assert c.c_interval == pytest.approx(math.sqrt(2), rel=1e-10)
        assert c.factor == pytest.approx(1 + math.sqrt(2), rel=1e-10)

    def test_reaching_zero_needs_bp(self):
        with pytest.raises(TraceUndefinedError):
            equivalence_constant(make_power(1.0), 2.0, 0.0, 1.0)

    @given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(-2, 2))
    def test_bound_holds(self, a, b, c):
        w = make_two_exponent(0.5, 1.5)
        lo, hi = min(a, b), max(a, b) + 0.01
        u = step_derivative([0.2, 0.7, 3.0], [c, 1.0])
        C = equivalence_constant(w, 2.0, lo, hi).factor
        na, nb = norm_at(u, w, 2.0, lo), norm_at(u, w, 2.0, hi)
        assert na <= C * nb * (1 + 1e-9)
        assert nb <= C * na * (1 + 1e-9)


class TestDistance:
    def test_log_distance(self):
        assert weighted_distance(make_power(1.0), 2.0, 1.0, math.e) == pytest.approx(1.0)

    @given(st.floats(0.01, 50), st.floats(0.01, 50), st.floats(0.01, 50))
    def test_axioms(self, x, y, z):
        w = parse_weight("t^0.5*(1+t)")
        dxy = weighted_distance(w, 2.0, x, y)
        assert dxy == pytest.approx(weighted_distance(w, 2.0, y, x), rel=1e-12)
        assert dxy <= weighted_distance(w, 2.0, x, z) + weighted_distance(w, 2.0, z, y) + 1e-9
        assert weighted_distance(w, 2.0, x, x) == 0.0


class TestMorrey:
    def test_tent(self):
        u = step_derivative([0.5, 1.0, 1.5], [1.0, -1.0])
        assert morrey_modulus(u, ONE, 2.0, [0.5, 1.0, 1.5]) == pytest.approx(math.sqrt(0.5))

    def test_linear_three_points(self):
        # u = t on {1, 2, 4}: |4 - 1| / sqrt(3)
        u = DirichletFunction.from_expression("1")
        assert morrey_modulus(u, ONE, 2.0, [1.0, 2.0, 4.0]) == pytest.approx(math.sqrt(3.0))

    @given(st.lists(st.floats(0.05, 20), min_size=2, max_size=8, unique=True),
           st.floats(-2, 2), st.floats(-2, 2))
    def test_bounded_by_seminorm(self, grid, c1, c2):
        w = make_two_exponent(0.5, 1.5)
        u = step_derivative([0.1, 1.0, 5.0], [c1, c2])
        assert morrey_modulus(u, w, 2.0, grid) <= seminorm(u, w, 2.0) + 1e-6
