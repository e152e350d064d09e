import math
from fractions import Fraction as F

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperlyap.errors import (
    CompositionConstantTerm,
    InvalidParams,
    ReciprocalZeroConstant,
    ZeroCoefficientInWindow,
)
from hyperlyap.series import (
    LogSeries,
    RationalSeries,
    coefficients_csv,
    growth_fit,
    inverse_F_coefficients,
    lambda_q_series,
    psi0_series,
    psi1_series,
    qF_series,
    series_compose,
    series_derivative,
    series_mul,
    series_reciprocal,
    theta_quotient_parts,
    wronskian_series,
)


def S(*coeffs):
    return RationalSeries(tuple(F(c) for c in coeffs))


# slow oracles written independently of the module


def naive_mul(a, b, order):
    out = [F(0)] * (order + 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            if i + j <= order:
                out[i + j] += x * y
    return out


def naive_compose(outer, inner, order):
    out = [F(0)] * (order + 1)
    power = [F(1)] + [F(0)] * order
    for c in outer[: order + 1]:
        for k in range(order + 1):
            out[k] += c * power[k]
        power = naive_mul(power, inner, order)
    return out


rationals = st.fractions(min_value=-50, max_value=50, max_denominator=20)
coeff_lists = st.lists(rationals, min_size=1, max_size=21)


class TestArithmetic:
    def test_reciprocal_geometric(self):
        assert series_reciprocal(S(1, 1, 0, 0, 0)).coeffs == (1, -1, 1, -1, 1)

    def test_compose_example(self):
        assert series_compose(S(0, 0, 1, 0, 0), S(0, 1, 1, 0, 0)).coeffs == (0, 0, 1, 2, 1)

    def test_derivative(self):
        assert series_derivative(S(5, 1, 2, 3)).coeffs == (1, 4, 9)
        assert series_derivative(S(7)).coeffs == (0,)

    def test_errors(self):
        with pytest.raises(CompositionConstantTerm):
            series_compose(S(1, 1), S(1, 1))
        with pytest.raises(ReciprocalZeroConstant):
            series_reciprocal(S(0, 1))
        with pytest.raises(InvalidParams):
            RationalSeries(())

    def test_log_series_orders(self):
        with pytest.raises(InvalidParams):
            LogSeries(S(0, 1), S(1))

    def test_truncation_to_min_order(self):
        assert series_mul(S(1, 1, 1), S(1, 1)).coeffs == (1, 2)

    @settings(max_examples=60)
    @given(coeff_lists, coeff_lists)
    def test_mul_oracle(self, a, b):
        n = min(len(a), len(b)) - 1
        assert list(series_mul(S(*a), S(*b)).coeffs) == naive_mul(a, b, n)

    @settings(max_examples=40, deadline=None)
    @given(coeff_lists, coeff_lists)
    def test_compose_oracle(self, a, b):
        b = [F(0)] + b
        n = min(len(a), len(b)) - 1
        assert list(series_compose(S(*a), S(*b)).coeffs) == naive_compose(a, b, n)

    @settings(max_examples=60)
    @given(coeff_lists.filter(lambda c: c[0] != 0))
    def test_reciprocal_identity(self, a):
        s = S(*a)
        prod = series_mul(s, series_reciprocal(s))
        assert prod.coeffs == (1,) + (0,) * s.order

    def test_compose_against_sympy(self):
        t = sp.Symbol("t")
        outer = [3, F(1, 2), -2, 0, 5, 1]
        inner = [0, 1, F(-1, 3), 4, 0, 2]
        expr = sum(sp.Rational(c) * (sum(sp.Rational(d) * t**j for j, d in enumerate(inner))) ** i for i, c in enumerate(outer))
        expected = sp.Poly(sp.expand(expr), t).all_coeffs()[::-1][:6]
        assert list(series_compose(S(*outer), S(*inner)).coeffs) == [F(int(c.p), int(c.q)) for c in expected]


class TestPeriods:
    def test_psi0_values(self):
        assert psi0_series(2).coeffs == (1, 120, 113400)

    def test_psi0_factorials(self):
        assert all(psi0_series(12)[n] == math.factorial(5 * n) // math.factorial(n) ** 5 for n in range(13))

    def test_psi0_ratio_recursion(self):
        c = psi0_series(30)
        for n in range(30):
            assert c[n + 1] / c[n] == F(math.prod(5 * n + j for j in range(1, 6)), (n + 1) ** 5)

    def test_psi1(self):
        p = psi1_series(3)
        assert p.regular[0] == 0
        assert p.regular[1] == 154
        assert p.log_part == psi0_series(3)
        assert p.regular[2] == 113400 * sum(F(1, k) for k in range(3, 11))


class TestWronskian:
    def test_constant_term(self):
        assert wronskian_series(5)[0] == 1

    def test_first_coefficients(self):
        assert wronskian_series(2).coeffs[:3] == (1, 394, 565290)

    def test_sympy_oracle(self):
        # expand psi0 psi1' - psi0' psi1 symbolically with an honest log(t)
        t = sp.Symbol("t", positive=True)
        N = 3
        psi0 = sum(sp.factorial(5 * n) / sp.factorial(n) ** 5 * t**n for n in range(N + 1))
        phi = sum(
            sp.factorial(5 * n) / sp.factorial(n) ** 5 * sum(sp.Rational(1, k) for k in range(n + 1, 5 * n + 1)) * t**n
            for n in range(N + 1)
        )
        psi1 = sp.log(t) * psi0 + phi
        tw = sp.expand(t * (psi0 * sp.diff(psi1, t) - sp.diff(psi0, t) * psi1))
        assert sp.simplify(tw.coeff(sp.log(t))) == 0
        regular = sp.Poly(tw.subs(sp.log(t), 0), t)
        expected = [regular.coeff_monomial(t**n) for n in range(N + 1)]
        got = wronskian_series(N).coeffs
        assert [F(int(c.p), int(c.q)) for c in expected] == list(got)

    def test_order_check(self):
        with pytest.raises(InvalidParams):
            wronskian_series(0)


class TestLambda:
    def test_leading(self):
        lam = lambda_q_series(3)
        assert lam[0] == 0
        assert lam[1] == F(16, 3125)

    def test_sympy_oracle(self):
        q = sp.Symbol("q")
        num = sum(q ** (n * n + n) for n in range(-4, 4))
        den = sum(q ** (n * n) for n in range(-4, 4))
        expr = sp.series(q / 5**5 * (num / den) ** 4, q, 0, 7).removeO()
        expected = [sp.Rational(expr.coeff(q, n)) for n in range(7)]
        assert list(lambda_q_series(6).coeffs) == [F(int(c.p), int(c.q)) for c in expected]

    def test_theta_parts(self):
        num, den = theta_quotient_parts(6)
        assert num.coeffs == (2, 0, 2, 0, 0, 0, 2)
        assert den.coeffs == (1, 2, 0, 0, 2, 0, 0)


class TestInverseF:
    def test_qF_constant(self):
        assert qF_series(10)[0] != 0

    def test_reciprocal_identity(self):
        qf = qF_series(30)
        inv = series_reciprocal(qf)
        assert series_mul(qf, inv).coeffs == (1,) + (0,) * 30

    def test_prefix_stable(self):
        # truncating early must not change the low-order coefficients
        assert inverse_F_coefficients(20).coeffs == inverse_F_coefficients(30).coeffs[:21]

    def test_order_check(self):
        with pytest.raises(InvalidParams):
            qF_series(1)


class TestGrowthFit:
    def test_sqrt_synthetic(self):
        fit = growth_fit([math.exp(2 * math.sqrt(n)) for n in range(201)], n0=50)
        assert fit.C == pytest.approx(2, abs=1e-9)
        assert fit.rms_sqrt < 1e-9
        assert fit.sqrt_consistent

    def test_exponential_synthetic(self):
        fit = growth_fit([F(2) ** n for n in range(201)], n0=50)
        assert fit.rms_linear < 1e-9
        assert fit.rms_linear < fit.rms_sqrt
        assert fit.linear_slope == pytest.approx(math.log(2))

    def test_zero_in_window(self):
        coeffs = [F(1)] * 10
        coeffs[5] = F(0)
        with pytest.raises(ZeroCoefficientInWindow):
            growth_fit(coeffs, n0=2)

    def test_window_check(self):
        with pytest.raises(InvalidParams):
            growth_fit([F(1)] * 10, n0=9)

    def test_csv(self):
        lines = coefficients_csv(S(F(1, 2), 0, -3)).splitlines()
        assert lines[0] == "n,numerator,denominator,log_abs"
        assert lines[1].startswith("0,1,2,-0.69314")
        assert lines[2] == "1,0,1,"
