"""Hypergeometric monodromy representations.

A representation is stored through its three local monodromies
``h0, h1, hinf`` with ``hinf @ h1 @ h0 = Id``.  Exact mode keeps rational
entries in sympy matrices; floating mode keeps complex numpy arrays.

The free generators of Gamma(2) are sent to the cusp monodromies by

    A (parabolic at the cusp infinity)  ->  h0
    B (parabolic at the cusp 0)         ->  h1^{-1}

which makes the loop around the remaining cusp map to a conjugate of
``hinf^{-1}`` and keeps the product relation intact.  The two other cyclic
rotations of (0, 1, inf) are available through ``assignment`` for
sensitivity checks; they give conjugate representations.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy as sp

from .errors import InvalidParams, UnknownCase, UnsupportedPoint
from .hodge import LocalExponentData, as_fraction
from .hyperbolic import A, A_INV, B, B_INV, GeneratorWord

EXACT = "exact"
FLOATING = "floating"

NONEXPANDING_TOL = 1e-8
# eigenvalues closer than this are pooled before taking moduli; the product of
# a cluster is well conditioned even when the individual roots are not
CLUSTER_TOL = 1e-4

CUSPS = ("0", "1", "inf")
ASSIGNMENTS = (("0", "1"), ("1", "inf"), ("inf", "0"))
DEFAULT_ASSIGNMENT = ASSIGNMENTS[0]


def _as_point(point) -> str:
    key = str(point).strip().lower()
    if key in ("inf", "infinity", "oo", "∞"):
        return "inf"
    if key in ("0", "1"):
        return key
    raise UnsupportedPoint(f"point must be one of 0, 1, inf; got {point!r}")


@dataclass(frozen=True)
class HypergeometricParams:
    alpha: tuple[Fraction, ...]
    beta: tuple[Fraction, ...]

    def __post_init__(self):
        try:
            alpha = tuple(sorted(as_fraction(a) for a in self.alpha))
            beta = tuple(sorted(as_fraction(b) for b in self.beta))
        except (TypeError, ValueError) as exc:
            raise InvalidParams(f"parameters must be rational numbers: {exc}") from None
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        if len(alpha) != len(beta) or not alpha:
            raise InvalidParams("alpha and beta must be non-empty and of equal length")
        for name, values in (("alpha", alpha), ("beta", beta)):
            if any(not 0 <= v < 1 for v in values):
                raise InvalidParams(f"{name} entries must lie in [0, 1)")
        clash = [(a, b) for a in alpha for b in beta if (a + b) % 1 == 0]
        # alpha_i = 1 - beta_j taken mod 1, i.e. e^{2 pi i alpha} = 1 / e^{2 pi i beta}
        if clash:
            a, b = clash[0]
            raise InvalidParams(f"reducible parameters: alpha={a} and beta={b} with a_i = 1/b_j")
        # hinf and h0^{-1} sharing an eigenvalue also splits off a subrepresentation
        shared = sorted(set(alpha) & set(beta))
        if shared:
            raise InvalidParams(f"reducible parameters: {shared[0]} occurs in both alpha and beta")

    @property
    def n(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class CYCase:
    id: int
    label: str
    C: int
    d: int
    mu1: Fraction
    mu2: Fraction
    # values reported with the catalogue, kept for comparison only
    table_lambda1: float
    table_lambda_sum: Fraction | float
    table_chi_abs: Fraction

    @property
    def thin_expected(self) -> bool:
        return self.id <= 7

    @property
    def params(self) -> HypergeometricParams:
        m1, m2 = self.mu1, self.mu2
        return HypergeometricParams((m1, m2, 1 - m2, 1 - m1), (0, 0, 0, 0))

    def t0(self) -> sp.ImmutableMatrix:
        h = sp.Rational(1, 2)
        s = sp.Rational(1, 6)
        return sp.ImmutableMatrix([[1, 0, 0, 0], [1, 1, 0, 0], [h, 1, 1, 0], [s, h, 1, 1]])

    def t1(self) -> sp.ImmutableMatrix:
        c12 = sp.Rational(self.C, 12)
        return sp.ImmutableMatrix(
            [[1, -c12, 0, -self.d], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
        )

    def omega(self) -> sp.ImmutableMatrix:
        c12 = sp.Rational(self.C, 12)
        d = self.d
        return sp.ImmutableMatrix(
            [[0, c12, 0, d], [-c12, 0, -d, 0], [0, d, 0, 0], [-d, 0, 0, 0]]
        )


def _row(i, label, C, d, mu1, mu2, lam1, lam_sum, chi):
    return CYCase(i, label, C, d, Fraction(mu1), Fraction(mu2), lam1, lam_sum, Fraction(chi))


CY_CASES: dict[int, CYCase] = {
    c.id: c
    for c in [
        _row(1, "", 46, 1, "1/12", "5/12", 0.97, Fraction(1), "11/12"),
        _row(2, "", 44, 2, "1/8", "3/8", 0.95, Fraction(1), "7/8"),
        _row(3, "", 52, 4, "1/6", "1/2", 1.27, Fraction(4, 3), "1"),
        _row(4, "P^4[5]", 50, 5, "1/5", "2/5", 1.12, Fraction(6, 5), "4/5"),
        _row(5, "", 56, 8, "1/4", "1/2", 1.40, Fraction(3, 2), "1"),
        _row(6, "P^6[2^2,3]", 60, 12, "1/3", "1/2", 1.53, Fraction(5, 3), "1"),
        _row(7, "P^7[2^4]", 64, 16, "1/2", "1/2", 1.75, Fraction(2), "1"),
        _row(8, "", 22, 1, "1/6", "1/6", 0.75, 0.92, "1"),
        _row(9, "", 34, 1, "1/10", "3/10", 0.77, 0.83, "9/10"),
        _row(10, "", 32, 2, "1/6", "1/4", 0.84, 0.97, "11/12"),
        _row(11, "", 42, 3, "1/6", "1/3", 0.96, 1.06, "5/6"),
        _row(12, "", 40, 4, "1/4", "1/4", 1.07, 1.30, "1"),
        _row(13, "", 48, 6, "1/4", "1/3", 1.15, 1.31, "11/12"),
        _row(14, "", 54, 9, "1/3", "1/3", 1.34, 1.60, "1"),
    ]
}

CATALOG_HEADER = ("id", "label", "C", "d", "mu1", "mu2")


def cy_case(case_id: int) -> CYCase:
    try:
        return CY_CASES[int(case_id)]
    except (KeyError, ValueError, TypeError):
        raise UnknownCase(f"case id must be in 1..14, got {case_id!r}") from None


def catalog_csv() -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CATALOG_HEADER)
    for c in CY_CASES.values():
        writer.writerow([c.id, c.label, c.C, c.d, str(c.mu1), str(c.mu2)])
    return buf.getvalue()


@dataclass(frozen=True, eq=False)
class MonodromyRep:
    h0: object
    h1: object
    hinf: object
    mode: str = EXACT
    name: str = ""

    @property
    def rank(self) -> int:
        return self.h0.shape[0]

    @property
    def is_exact(self) -> bool:
        return self.mode == EXACT

    def matrices(self) -> dict[str, object]:
        return {"0": self.h0, "1": self.h1, "inf": self.hinf}

    def product_residual(self) -> float:
        """Entrywise max of ``hinf h1 h0 - Id`` (0 exactly in exact mode)."""
        if self.is_exact:
            diff = self.hinf * self.h1 * self.h0 - sp.eye(self.rank)
            return float(max((abs(x) for x in diff), default=0))
        diff = self.hinf @ self.h1 @ self.h0 - np.eye(self.rank)
        return float(np.abs(diff).max())

    def conjugate(self, g) -> MonodromyRep:
        """Return ``g h g^{-1}`` for every local monodromy."""
        if self.is_exact and isinstance(g, sp.MatrixBase):
            gi = g.inv()
            return MonodromyRep(
                sp.ImmutableMatrix(g * self.h0 * gi),
                sp.ImmutableMatrix(g * self.h1 * gi),
                sp.ImmutableMatrix(g * self.hinf * gi),
                EXACT,
                self.name + " (conjugated)",
            )
        g = np.asarray(g, dtype=complex)
        gi = np.linalg.inv(g)
        h0, h1, hinf = (to_numpy(m) for m in (self.h0, self.h1, self.hinf))
        return MonodromyRep(g @ h0 @ gi, g @ h1 @ gi, g @ hinf @ gi, FLOATING, self.name + " (conjugated)")


def to_numpy(m) -> np.ndarray:
    if isinstance(m, sp.MatrixBase):
        return np.array([[complex(x) for x in row] for row in m.tolist()], dtype=complex)
    return np.asarray(m, dtype=complex)


def companion(coeffs: Sequence) -> list[list]:
    """Companion matrix of X^n + c_{n-1} X^{n-1} + ... + c_0 from ``[c_0, ..., c_{n-1}]``."""
    n = len(coeffs)
    zero = coeffs[0] * 0
    m = [[zero] * n for _ in range(n)]
    for i in range(1, n):
        m[i][i - 1] = zero + 1
    for i in range(n):
        m[i][n - 1] = -coeffs[i]
    return m


def _galois_closed_poly(values: Sequence[Fraction]) -> sp.Poly | None:
    """prod (X - e^{2 pi i v}) as a rational polynomial, or None if irrational."""
    x = sp.Symbol("X")
    by_den: dict[int, Counter] = {}
    for v in values:
        by_den.setdefault(v.denominator, Counter())[v.numerator] += 1
    poly = sp.Poly(1, x, domain="QQ")
    for q, counts in by_den.items():
        units = [k for k in range(q) if math.gcd(k, q) == 1]
        mult = {counts.get(k, 0) for k in units}
        if len(mult) != 1 or sum(counts.values()) != len(units) * next(iter(mult)):
            return None
        poly *= sp.Poly(sp.cyclotomic_poly(q, x), x, domain="QQ") ** next(iter(mult))
    return poly


def _low_to_high(poly: sp.Poly) -> list:
    # all_coeffs is highest degree first; drop the leading 1
    return list(reversed(poly.all_coeffs()[1:]))


def levelt_construct(p: HypergeometricParams) -> MonodromyRep:
    """Levelt's normal form: hinf and h0^{-1} are companion matrices."""
    poly_a = _galois_closed_poly(p.alpha)
    poly_b = _galois_closed_poly(p.beta)
    name = f"levelt alpha={[str(a) for a in p.alpha]} beta={[str(b) for b in p.beta]}"
    if poly_a is not None and poly_b is not None:
        ca = sp.ImmutableMatrix(companion([sp.Rational(c) for c in _low_to_high(poly_a)]))
        cb = sp.ImmutableMatrix(companion([sp.Rational(c) for c in _low_to_high(poly_b)]))
        hinf = ca
        h0 = sp.ImmutableMatrix(cb.inv())
        h1 = sp.ImmutableMatrix(ca.inv() * cb)
        return MonodromyRep(h0, h1, hinf, EXACT, name)
    roots_a = np.exp(2j * np.pi * np.array([float(a) for a in p.alpha]))
    roots_b = np.exp(2j * np.pi * np.array([float(b) for b in p.beta]))
    ca = np.array(companion(list(np.poly(roots_a)[::-1][:-1])), dtype=complex)
    cb = np.array(companion(list(np.poly(roots_b)[::-1][:-1])), dtype=complex)
    hinf = ca
    h0 = np.linalg.inv(cb)
    h1 = np.linalg.solve(ca, cb)
    return MonodromyRep(h0, h1, hinf, FLOATING, name)


def cy_realization(case_id: int) -> MonodromyRep:
    case = cy_case(case_id)
    t0, t1 = case.t0(), case.t1()
    hinf = sp.ImmutableMatrix((t1 * t0).inv())
    return MonodromyRep(t0, t1, hinf, EXACT, f"CY case {case.id}")


def trivial_rep(rank: int) -> MonodromyRep:
    eye = sp.ImmutableMatrix(sp.eye(rank))
    return MonodromyRep(eye, eye, eye, EXACT, f"trivial rank {rank}")


@dataclass(frozen=True)
class CuspSpectrum:
    moduli: dict[str, list[float]] = field(default_factory=dict)
    non_expanding: bool = True


def _exact_moduli(m: sp.MatrixBase) -> tuple[list[float], bool]:
    x = sp.Symbol("X")
    poly = sp.Poly(m.charpoly(x).as_expr(), x, domain="QQ")
    _, factors = poly.factor_list()
    moduli: list[float] = []
    all_cyclotomic = True
    for f, mult in factors:
        f = sp.Poly(f.monic(), x)
        cyclo = f.is_cyclotomic
        all_cyclotomic &= cyclo
        if cyclo:
            mods = [1.0] * f.degree()
        else:
            mods = [abs(complex(r)) for r in f.nroots(n=30)]
        moduli.extend(mods * mult)
    return sorted(moduli), all_cyclotomic


def _float_moduli(m: np.ndarray) -> list[float]:
    eig = np.linalg.eigvals(m)
    moduli = np.abs(eig)
    used = np.zeros(len(eig), dtype=bool)
    out = np.empty(len(eig))
    for i in range(len(eig)):
        if used[i]:
            continue
        cluster = np.where((np.abs(eig - eig[i]) < CLUSTER_TOL) & ~used)[0]
        used[cluster] = True
        out[cluster] = np.exp(np.mean(np.log(moduli[cluster])))
    return sorted(out.tolist())


def check_nonexpanding(rep: MonodromyRep) -> CuspSpectrum:
    moduli = {}
    ok = True
    for cusp, m in rep.matrices().items():
        if rep.is_exact:
            mods, cyclo = _exact_moduli(m)
            ok &= cyclo
        else:
            mods = _float_moduli(m)
            ok &= all(abs(v - 1.0) <= NONEXPANDING_TOL for v in mods)
        moduli[cusp] = mods
    return CuspSpectrum(moduli, bool(ok))


def generator_images(rep: MonodromyRep, assignment=DEFAULT_ASSIGNMENT) -> dict[str, object]:
    """Images of A, A^-1, B, B^-1 under the representation."""
    if tuple(assignment) not in ASSIGNMENTS:
        raise InvalidParams(f"assignment must be a cyclic rotation of (0, 1, inf): {assignment}")
    mats = rep.matrices()
    ha, hb = mats[assignment[0]], mats[assignment[1]]
    if rep.is_exact:
        ha_inv, hb_inv = ha.inv(), hb.inv()
    else:
        ha_inv, hb_inv = np.linalg.inv(ha), np.linalg.inv(hb)
    return {A: ha, A_INV: ha_inv, B: hb_inv, B_INV: hb}


def rep_of_word(rep: MonodromyRep, w: GeneratorWord, assignment=DEFAULT_ASSIGNMENT):
    images = generator_images(rep, assignment)
    if rep.is_exact:
        out = sp.eye(rep.rank)
        for letter in w:
            out = out * images[letter]
        return sp.ImmutableMatrix(out)
    out = np.eye(rep.rank, dtype=complex)
    for letter in w:
        out = out @ images[letter]
    return out


def realify(m: np.ndarray) -> np.ndarray:
    """Complex r x r matrix as a real 2r x 2r matrix acting on R^{2r}."""
    re, im = m.real, m.imag
    return np.block([[re, -im], [im, re]])


def float_generators(rep: MonodromyRep, assignment=DEFAULT_ASSIGNMENT) -> tuple[np.ndarray, bool]:
    """Stack of real float64 images in the order A, A^-1, B, B^-1.

    Returns the stack and a flag telling whether the complex representation
    had to be realified (which doubles every exponent's multiplicity).
    """
    images = generator_images(rep, assignment)
    mats = [to_numpy(images[letter]) for letter in (A, A_INV, B, B_INV)]
    scale = max(1.0, max(np.abs(m).max() for m in mats))
    if all(np.abs(m.imag).max() <= 1e-12 * scale for m in mats):
        return np.ascontiguousarray(np.stack([m.real for m in mats])), False
    return np.ascontiguousarray(np.stack([realify(m) for m in mats])), True


def hodge_numbers(p: HypergeometricParams) -> list[int]:
    rho = [sum(1 for a in p.alpha if a < b) - k for k, b in enumerate(p.beta, start=1)]
    low = min(rho)
    counts = Counter(r - low for r in rho)
    return [counts.get(i, 0) for i in range(max(counts) + 1)]


def local_exponents(source, point) -> LocalExponentData:
    point = _as_point(point)
    if isinstance(source, CYCase):
        from .hodge import cy_local_exponents

        return cy_local_exponents(source.mu1, source.mu2)[point]
    if point == "0":
        return LocalExponentData("0", source.beta)
    if point == "inf":
        return LocalExponentData("inf", source.alpha)
    raise UnsupportedPoint("exponents at t=1 are only encoded for the Calabi-Yau cases")
