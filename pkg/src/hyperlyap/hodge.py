"""Exact rational bookkeeping for parabolic degrees and slope polygons.

Everything here works over ``fractions.Fraction``.  Floating point only
enters in :func:`polygon_dominates`, where simulated Lyapunov heights are
compared to exact ones.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import (
    InvalidExponents,
    InvalidParams,
    InvalidTopology,
    NotConcave,
    OutOfRange,
)

MINIMAL = "minimal"  # hyperelliptic component of H(2g-2)
BIMODAL = "bimodal"  # hyperelliptic component of H(g-1, g-1)
STRATA = (MINIMAL, BIMODAL)


def as_fraction(value) -> Fraction:
    """Exact conversion; floats go through their shortest repr, so 0.1 -> 1/10."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True)
class WeightedFiltration:
    """Graded pieces ``(weight, dim)`` of a [0,1)-filtration at one cusp."""

    pieces: tuple[tuple[Fraction, int], ...]

    def __post_init__(self):
        pieces = tuple((as_fraction(w), int(n)) for w, n in self.pieces)
        object.__setattr__(self, "pieces", pieces)
        weights = [w for w, _ in pieces]
        if not pieces:
            raise InvalidParams("filtration needs at least one graded piece")
        if any(not 0 <= w < 1 for w in weights):
            raise InvalidParams(f"weights must lie in [0, 1): {weights}")
        if any(w1 >= w2 for w1, w2 in zip(weights, weights[1:])):
            raise InvalidParams(f"weights must be strictly increasing: {weights}")
        if any(n < 1 for _, n in pieces):
            raise InvalidParams("graded dimensions must be positive")

    @classmethod
    def from_weights(cls, weights: Iterable) -> WeightedFiltration:
        """Build from a multiset of weights, merging repeats into one piece."""
        counts: dict[Fraction, int] = {}
        for w in weights:
            w = as_fraction(w)
            counts[w] = counts.get(w, 0) + 1
        return cls(tuple(sorted(counts.items())))

    @property
    def rank(self) -> int:
        return sum(n for _, n in self.pieces)


@dataclass(frozen=True)
class LocalExponentData:
    point: str
    exponents: tuple[Fraction, ...]
    location: str = "cusp"

    def __post_init__(self):
        exps = tuple(sorted(as_fraction(m) for m in self.exponents))
        object.__setattr__(self, "exponents", exps)
        if self.location not in ("interior", "cusp"):
            raise ValueError(f"location must be 'interior' or 'cusp', got {self.location!r}")


@dataclass(frozen=True)
class HodgeDegrees:
    """Parabolic degrees of E^{3,0}, E^{2,1}, E^{1,2}, E^{0,3}."""

    e30: Fraction
    e21: Fraction
    e12: Fraction
    e03: Fraction

    def as_tuple(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.e30, self.e21, self.e12, self.e03)

    def is_self_dual(self) -> bool:
        return self.e30 == -self.e03 and self.e21 == -self.e12


@dataclass(frozen=True)
class SlopePolygon:
    vertices: tuple[tuple[int, object], ...]

    def __post_init__(self):
        if not self.vertices or tuple(self.vertices[0]) != (0, 0):
            raise ValueError("polygon must start at (0, 0)")
        xs = [x for x, _ in self.vertices]
        if any(x1 >= x2 for x1, x2 in zip(xs, xs[1:])):
            raise ValueError("polygon abscissae must be strictly increasing")

    @property
    def width(self) -> int:
        return self.vertices[-1][0]

    def height_at(self, k: int):
        """Height at integer abscissa ``k`` by linear interpolation."""
        for (x0, h0), (x1, h1) in zip(self.vertices, self.vertices[1:]):
            if x0 <= k <= x1:
                if k == x0:
                    return h0
                if k == x1:
                    return h1
                return h0 + (h1 - h0) * Fraction(k - x0, x1 - x0)
        if k == 0:
            return self.vertices[0][1]
        raise ValueError(f"abscissa {k} outside polygon range [0, {self.width}]")

    def slopes(self) -> list:
        return [
            (h1 - h0) / (x1 - x0)
            for (x0, h0), (x1, h1) in zip(self.vertices, self.vertices[1:])
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rank", "height"])
        for x, h in self.vertices:
            writer.writerow([x, h])
        return buf.getvalue()


def filtered_dimension(f: WeightedFiltration) -> Fraction:
    return sum((w * n for w, n in f.pieces), Fraction(0))


def parabolic_degree(deg: int, cusp_filtrations: Sequence[WeightedFiltration] = ()) -> Fraction:
    return Fraction(deg) + sum((filtered_dimension(f) for f in cusp_filtrations), Fraction(0))


def _floor(q: Fraction) -> int:
    return math.floor(q)


def cokernel_length(exps: LocalExponentData, tau_index: int) -> int:
    """Length of the cokernel of the Kodaira-Spencer map ``tau_index`` at a point.

    Rank four only.  ``tau_2`` is dual to ``tau_0`` and has the same length.
    """
    mu = exps.exponents
    if len(mu) != 4:
        raise InvalidExponents(f"rank-4 exponents required, got {len(mu)}")
    if tau_index not in (0, 1, 2):
        raise ValueError(f"tau_index must be 0, 1 or 2, got {tau_index}")
    lower = 1 if tau_index == 1 else 0
    if exps.location == "interior":
        if any(m.denominator != 1 for m in mu) or len(set(mu)) != 4:
            raise InvalidExponents(
                f"interior exponents must be distinct integers, got {[str(m) for m in mu]}"
            )
        return int(mu[lower + 1] - mu[lower] - 1)
    return _floor(mu[lower + 1]) - _floor(mu[lower])


def _check_cy_range(mu1: Fraction, mu2: Fraction) -> None:
    if not (0 < mu1 <= mu2 <= Fraction(1, 2)):
        raise InvalidParams(f"need 0 < mu1 <= mu2 <= 1/2, got ({mu1}, {mu2})")


def cy_hodge_degrees(mu1, mu2) -> HodgeDegrees:
    mu1, mu2 = as_fraction(mu1), as_fraction(mu2)
    _check_cy_range(mu1, mu2)
    return HodgeDegrees(mu1, mu2, -mu2, -mu1)


def cy_local_exponents(mu1, mu2) -> dict[str, LocalExponentData]:
    """Exponents at the MUM point 0, the conifold point 1 and at infinity."""
    mu1, mu2 = as_fraction(mu1), as_fraction(mu2)
    return {
        "0": LocalExponentData("0", (0, 0, 0, 0)),
        "1": LocalExponentData("1", (0, 1, 1, 2)),
        "inf": LocalExponentData("inf", (mu1, mu2, 1 - mu2, 1 - mu1)),
    }


def cokernel_table(mu1, mu2) -> dict[str, tuple[int, int, int]]:
    return {
        point: tuple(cokernel_length(exps, i) for i in range(3))
        for point, exps in cy_local_exponents(mu1, mu2).items()
    }


def hodge_degrees_from_cokernels(mu1, mu2) -> HodgeDegrees:
    """Recompute the degrees from cokernel lengths instead of the closed form.

    Each tau_p embeds E^{p} into E^{p-1} (x) Omega^1(log) with deg Omega^1(log) = 1
    on P^1 minus three points, so ``deg E^{p-1} + 1 = deg E^{p} + len coker``.
    Only the weights at infinity are non-trivial; real structure forces
    ``deg_par E^{p,q} = -deg_par E^{q,p}``.  Solving the resulting linear
    system gives the ordinary degrees, then the weights are added back.
    """
    mu1, mu2 = as_fraction(mu1), as_fraction(mu2)
    _check_cy_range(mu1, mu2)
    lengths = [0, 0, 0]
    for row in cokernel_table(mu1, mu2).values():
        for i in range(3):
            lengths[i] += row[i]
    omega_deg = 1  # 2g - 2 + |cusps| for g = 0 and three cusps
    weights = (mu1, mu2, 1 - mu2, 1 - mu1)
    # unknown ordinary degrees (d30, d21, d12, d03); write d21 = d30 + s0,
    # d12 = d21 + s1, d03 = d12 + s2 where s_i = len_i - deg Omega
    s = [lengths[i] - omega_deg for i in range(3)]
    # duality on the outer pair: d30 + w1 = -(d03 + w4)
    # d03 = d30 + s0 + s1 + s2
    d30 = Fraction(-(weights[0] + weights[3]) - (s[0] + s[1] + s[2]), 2)
    d21 = d30 + s[0]
    d12 = d21 + s[1]
    d03 = d12 + s[2]
    degs = HodgeDegrees(
        d30 + weights[0], d21 + weights[1], d12 + weights[2], d03 + weights[3]
    )
    if not degs.is_self_dual():
        raise InvalidExponents("cokernel data inconsistent with real structure")
    return degs


def main_bound(deg_par, g: int, cusps: int) -> Fraction:
    euler = 2 * g - 2 + cusps
    if euler <= 0:
        raise InvalidTopology(f"need 2g - 2 + |cusps| > 0, got {euler}")
    return 2 * as_fraction(deg_par) / euler


def _check_genus_index(g: int, k: int, stratum: str) -> None:
    if stratum not in STRATA:
        raise OutOfRange(f"stratum must be one of {STRATA}, got {stratum!r}")
    if not 1 <= k <= g:
        raise OutOfRange(f"need 1 <= k <= g, got k={k}, g={g}")


def hyperelliptic_quotient_degree(g: int, k: int, stratum: str = MINIMAL) -> Fraction:
    """Degree of E_k / E_{k-1} in units of |chi| / 2."""
    _check_genus_index(g, k, stratum)
    if stratum == MINIMAL:
        return 1 - Fraction(2 * (k - 1), 2 * g - 1)
    return 1 - Fraction(k - 1, g)


@dataclass(frozen=True)
class GenusBound:
    g: int
    k: int
    stratum: str
    sum_bound: Fraction  # lower bound for lambda_1 + ... + lambda_k
    lambda_k_bound: Fraction  # lower bound for lambda_k alone


def large_genus_bound(g: int, k: int, stratum: str = MINIMAL) -> GenusBound:
    """Lower bounds from the HN subbundle E_k.

    The sum bound is 2 deg(E_k) / |chi|.  Since every exponent of a weight-one
    Hodge bundle is at most 1, ``lambda_k >= sum_bound - (k - 1)``.
    """
    _check_genus_index(g, k, stratum)
    if stratum == MINIMAL:
        total = k - Fraction(k * (k - 1), 2 * g - 1)
    else:
        total = k - Fraction(k * (k - 1), 2 * g)
    return GenusBound(g, k, stratum, total, total - (k - 1))


def hyperelliptic_pieces(g: int, stratum: str = MINIMAL) -> list[tuple[int, Fraction]]:
    """HN quotient pieces (rank, degree) with |chi| normalised to 2."""
    return [(1, hyperelliptic_quotient_degree(g, k, stratum)) for k in range(1, g + 1)]


def hn_polygon(pieces: Sequence[tuple[int, object]], chi_abs=2) -> SlopePolygon:
    """Polygon with vertices (rk F_i, 2 deg F_i / |chi|) from successive quotients."""
    chi_abs = as_fraction(chi_abs)
    if chi_abs <= 0:
        raise InvalidTopology("|chi| must be positive")
    slopes = []
    vertices = [(0, Fraction(0))]
    for rank, degree in pieces:
        rank = int(rank)
        if rank < 1:
            raise NotConcave(f"piece rank must be positive, got {rank}")
        degree = as_fraction(degree)
        slopes.append(degree / rank)
        x, h = vertices[-1]
        vertices.append((x + rank, h + 2 * degree / chi_abs))
    if any(s1 <= s2 for s1, s2 in zip(slopes, slopes[1:])):
        raise NotConcave(f"HN slopes must be strictly decreasing: {[str(s) for s in slopes]}")
    return SlopePolygon(tuple(vertices))


def lyapunov_polygon(lambdas: Sequence[float], chi_abs=None) -> SlopePolygon:
    """Vertices (k, lambda_1 + ... + lambda_k).

    If ``chi_abs`` is given the exponents are taken in orbifold normalisation
    and rescaled by |chi| first.
    """
    scale = 1.0 if chi_abs is None else float(chi_abs)
    vertices = [(0, 0.0)]
    total = 0.0
    for k, lam in enumerate(lambdas, start=1):
        total += float(lam) * scale
        vertices.append((k, total))
    return SlopePolygon(tuple(vertices))


def polygon_dominates(upper: SlopePolygon, lower: SlopePolygon, stderr=None, tol: float = 1e-9) -> bool:
    """True when ``upper`` is nowhere below ``lower`` at integer abscissae.

    ``stderr`` (scalar or per-vertex of ``upper``) widens the tolerance to three
    standard errors per height.
    """
    width = min(upper.width, lower.width)
    for k in range(1, width + 1):
        slack = tol
        if stderr is not None:
            err = stderr if isinstance(stderr, (int, float)) else stderr[k - 1]
            slack = max(tol, 3.0 * float(err))
        if float(upper.height_at(k)) < float(lower.height_at(k)) - slack:
            return False
    return True


def orbifold_normalize(lambdas: Sequence[float], mu1, mu2) -> tuple[list[float], Fraction]:
    """Convert exponents over the thrice-punctured sphere to the triangle orbifold.

    Returns ``(lambda / |chi|, |chi|)`` with |chi| = 1 - 1/n.
    """
    mu1, mu2 = as_fraction(mu1), as_fraction(mu2)
    _check_cy_range(mu1, mu2)
    if 0 < mu1 < mu2 < Fraction(1, 2):
        n = math.lcm(mu1.denominator, mu2.denominator)
        chi_abs = 1 - Fraction(1, n)
    else:
        chi_abs = Fraction(1)
    return [float(lam) / float(chi_abs) for lam in lambdas], chi_abs
