"""Truncated power series with exact rational coefficients.

The public surface uses ``fractions.Fraction``; the O(N^2) and O(N^3) loops run
on ``gmpy2.mpq`` which is an order of magnitude faster for the multi-thousand
bit coefficients that appear around order 200.

Pipeline for the mirror quintic:

    psi0, psi1 = log(t) psi0 + phi      periods near the MUM point
    tW = t (psi0 psi1' - psi0' psi1)      log terms cancel exactly
    lambda(q) = q / 5^5 (theta_2 / theta_3)^4   in the half-integral nome
    qF = q W(lambda(q))                 regular, nonzero constant term
    1 / qF                              coefficients whose growth is fitted
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import gmpy2
import numpy as np

from .errors import (
    CompositionConstantTerm,
    InvalidParams,
    LogCancellationFailure,
    PoleOrderMismatch,
    ReciprocalZeroConstant,
    ZeroCoefficientInWindow,
)

mpq = gmpy2.mpq


def _to_mpq(values) -> list:
    return [mpq(v.numerator, v.denominator) for v in values]


def _from_mpq(values) -> tuple[Fraction, ...]:
    return tuple(Fraction(int(v.numerator), int(v.denominator)) for v in values)


@dataclass(frozen=True)
class RationalSeries:
    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        coeffs = tuple(Fraction(c) for c in self.coeffs)
        if not coeffs:
            raise InvalidParams("a series needs at least the constant coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_list(cls, values, order: int | None = None) -> RationalSeries:
        values = list(values)
        if order is not None:
            values = (values + [0] * (order + 1))[: order + 1]
        return cls(tuple(values))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, n: int) -> Fraction:
        return self.coeffs[n]

    def __len__(self) -> int:
        return len(self.coeffs)

    def truncate(self, order: int) -> RationalSeries:
        return RationalSeries(self.coeffs[: order + 1])

    def __add__(self, other: RationalSeries) -> RationalSeries:
        n = min(self.order, other.order)
        return RationalSeries(tuple(a + b for a, b in zip(self.coeffs[: n + 1], other.coeffs)))

    def __sub__(self, other: RationalSeries) -> RationalSeries:
        n = min(self.order, other.order)
        return RationalSeries(tuple(a - b for a, b in zip(self.coeffs[: n + 1], other.coeffs)))

    def __mul__(self, other: RationalSeries) -> RationalSeries:
        return series_mul(self, other)

    def scale(self, factor) -> RationalSeries:
        factor = Fraction(factor)
        return RationalSeries(tuple(c * factor for c in self.coeffs))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)


@dataclass(frozen=True)
class LogSeries:
    """``regular(t) + log(t) * log_part(t)``."""

    regular: RationalSeries
    log_part: RationalSeries

    def __post_init__(self):
        if self.regular.order != self.log_part.order:
            raise InvalidParams("regular and logarithmic parts must share the truncation order")

    @property
    def order(self) -> int:
        return self.regular.order


def _mul_mpq(a: list, b: list, order: int) -> list:
    out = []
    for k in range(order + 1):
        lo = max(0, k - len(b) + 1)
        hi = min(k, len(a) - 1)
        acc = mpq(0)
        for i in range(lo, hi + 1):
            ai = a[i]
            if ai:
                acc += ai * b[k - i]
        out.append(acc)
    return out


def series_mul(a: RationalSeries, b: RationalSeries) -> RationalSeries:
    n = min(a.order, b.order)
    return RationalSeries(_from_mpq(_mul_mpq(_to_mpq(a.coeffs), _to_mpq(b.coeffs), n)))


def _reciprocal_mpq(s: list, order: int) -> list:
    inv0 = 1 / s[0]
    out = [inv0]
    for n in range(1, order + 1):
        acc = mpq(0)
        for k in range(1, min(n, len(s) - 1) + 1):
            if s[k]:
                acc += s[k] * out[n - k]
        out.append(-acc * inv0)
    return out


def series_reciprocal(s: RationalSeries) -> RationalSeries:
    if s[0] == 0:
        raise ReciprocalZeroConstant("reciprocal needs a nonzero constant term")
    return RationalSeries(_from_mpq(_reciprocal_mpq(_to_mpq(s.coeffs), s.order)))


def _compose_mpq(outer: list, inner: list, order: int) -> list:
    # inner has zero constant term, so inner^n only touches orders >= n
    out = [mpq(0)] * (order + 1)
    out[0] = outer[0]
    power = [mpq(0)] * (order + 1)
    power[0] = mpq(1)
    for n in range(1, order + 1):
        new = [mpq(0)] * (order + 1)
        for k in range(n, order + 1):
            acc = mpq(0)
            for i in range(n - 1, k):
                p = power[i]
                if p:
                    acc += p * inner[k - i]
            new[k] = acc
        power = new
        c = outer[n]
        if c:
            for k in range(n, order + 1):
                out[k] += c * power[k]
    return out


def series_compose(outer: RationalSeries, inner: RationalSeries) -> RationalSeries:
    """``outer(inner(t))``; exact through min of the two orders."""
    if inner[0] != 0:
        raise CompositionConstantTerm("inner series must have zero constant term")
    n = min(outer.order, inner.order)
    return RationalSeries(_from_mpq(_compose_mpq(_to_mpq(outer.coeffs), _to_mpq(inner.coeffs), n)))


def series_derivative(s: RationalSeries) -> RationalSeries:
    if s.order == 0:
        return RationalSeries((Fraction(0),))
    return RationalSeries(tuple(n * s[n] for n in range(1, s.order + 1)))


def series_theta(s: RationalSeries) -> RationalSeries:
    """``t d/dt``; keeps the truncation order."""
    return RationalSeries(tuple(n * c for n, c in enumerate(s.coeffs)))


def psi0_series(N: int) -> RationalSeries:
    """(5n)! / n!^5 via the ratio c_{n+1}/c_n = prod_j (5n+j) / (n+1)^5."""
    if N < 0:
        raise InvalidParams("order must be non-negative")
    coeffs = [1]
    for n in range(N):
        num = 1
        for j in range(1, 6):
            num *= 5 * n + j
        coeffs.append(coeffs[-1] * num // (n + 1) ** 5)
    return RationalSeries(tuple(Fraction(c) for c in coeffs))


def psi1_series(N: int) -> LogSeries:
    psi0 = psi0_series(N)
    regular = []
    harmonic_tail = Fraction(0)  # H_{5n} - H_n
    for n in range(N + 1):
        if n > 0:
            harmonic_tail += sum(Fraction(1, k) for k in range(5 * n - 4, 5 * n + 1))
            harmonic_tail -= Fraction(1, n)
        regular.append(psi0[n] * harmonic_tail)
    return LogSeries(RationalSeries(tuple(regular)), psi0)


def wronskian_series(N: int) -> RationalSeries:
    """t * (psi0 psi1' - psi0' psi1), with the log(t) part checked to vanish."""
    if N < 1:
        raise InvalidParams("wronskian needs order >= 1")
    psi0 = psi0_series(N)
    psi1 = psi1_series(N)
    s, t_part = psi1.regular, psi1.log_part
    d_psi0 = series_theta(psi0)
    log_coeff = psi0 * series_theta(t_part) - d_psi0 * t_part
    if not log_coeff.is_zero():
        first = next(n for n, c in enumerate(log_coeff.coeffs) if c != 0)
        raise LogCancellationFailure(f"log(t) coefficient survives at order {first}")
    return psi0 * (series_theta(s) + t_part) - d_psi0 * s


def theta_quotient_parts(N: int) -> tuple[RationalSeries, RationalSeries]:
    """Truncations of sum q^{n^2+n} and sum q^{n^2} over all integers n."""
    num = [Fraction(0)] * (N + 1)
    den = [Fraction(0)] * (N + 1)
    n = 0
    while n * (n + 1) <= N:
        num[n * (n + 1)] += 2  # n and -n-1 give the same exponent
        n += 1
    den[0] = Fraction(1)
    n = 1
    while n * n <= N:
        den[n * n] += 2
        n += 1
    return RationalSeries(tuple(num)), RationalSeries(tuple(den))


def _fourth_power(s: RationalSeries) -> RationalSeries:
    sq = s * s
    return sq * sq


def lambda_q_series(N: int) -> RationalSeries:
    if N < 1:
        raise InvalidParams("lambda(q) needs order >= 1")
    num, den = theta_quotient_parts(N - 1)
    ratio4 = _fourth_power(num * series_reciprocal(den)).scale(Fraction(1, 5**5))
    return RationalSeries((Fraction(0),) + ratio4.coeffs)


def qF_series(N: int) -> RationalSeries:
    """q * W(lambda(q)) = (q / lambda(q)) * (tW)(lambda(q))."""
    if N < 2:
        raise InvalidParams("qF needs order >= 2")
    tw = wronskian_series(N)
    lam = lambda_q_series(N)
    num, den = theta_quotient_parts(N)
    q_over_lambda = _fourth_power(den * series_reciprocal(num)).scale(5**5)
    qf = q_over_lambda * series_compose(tw, lam)
    if qf[0] == 0:
        raise PoleOrderMismatch("q W(lambda(q)) has a vanishing constant term")
    return qf


def inverse_F_coefficients(N: int = 200) -> RationalSeries:
    return series_reciprocal(qF_series(N))


def log_abs(c: Fraction) -> float:
    if c == 0:
        raise ZeroCoefficientInWindow("log of a zero coefficient")
    return math.log(abs(c.numerator)) - math.log(c.denominator)


@dataclass(frozen=True)
class GrowthFit:
    C: float  # slope of log|c_n| against sqrt(n)
    intercept: float
    rms_sqrt: float
    rms_linear: float
    linear_slope: float
    window: tuple[int, int]

    @property
    def sqrt_consistent(self) -> bool:
        return self.rms_sqrt < self.rms_linear

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "intercept": self.intercept,
            "rms_sqrt": self.rms_sqrt,
            "rms_linear": self.rms_linear,
            "linear_slope": self.linear_slope,
            "window": list(self.window),
            "sqrt_consistent": self.sqrt_consistent,
        }


def _fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


def growth_fit(coeffs, n0: int = 50, N: int | None = None) -> GrowthFit:
    """Least squares of log|c_n| against sqrt(n) and against n on [n0, N]."""
    values: Sequence = coeffs.coeffs if isinstance(coeffs, RationalSeries) else coeffs
    N = len(values) - 1 if N is None else N
    if not 0 <= n0 < N <= len(values) - 1:
        raise InvalidParams(f"window [{n0}, {N}] needs at least two points inside the series")
    ns = np.arange(n0, N + 1)
    logs = []
    for n in ns:
        c = values[n]
        if c == 0:
            raise ZeroCoefficientInWindow(f"coefficient {n} vanishes")
        logs.append(log_abs(c) if isinstance(c, Fraction) else math.log(abs(c)))
    y = np.array(logs)
    c_sqrt, intercept, rms_sqrt = _fit(np.sqrt(ns), y)
    slope_lin, _, rms_lin = _fit(ns.astype(float), y)
    return GrowthFit(c_sqrt, intercept, rms_sqrt, rms_lin, slope_lin, (int(n0), int(N)))


def coefficients_csv(s: RationalSeries) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "numerator", "denominator", "log_abs"])
    for n, c in enumerate(s.coeffs):
        writer.writerow([n, c.numerator, c.denominator, "" if c == 0 else repr(log_abs(c))])
    return buf.getvalue()
