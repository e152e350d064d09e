"""Upper half-plane geometry for the level-2 congruence surface.

Frames are unit-determinant 2x2 real matrices ``M``; the basepoint of a frame
is ``M . i`` and the geodesic flow acts by right multiplication with
``diag(e^t, e^-t)``.  With this normalisation the metric is
``|dz|^2 / (4 y^2)`` (curvature -4), so flow time equals distance travelled.

The surface is Gamma(2)\\H, with fundamental domain

    |Re z| <= 1,  |2z - 1| >= 1,  |2z + 1| >= 1

and free generators A: z -> z + 2, B: z -> z / (2z + 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NonTermination

MAX_GENERATOR_APPLICATIONS = 10**6

# Letter alphabet for words in Gamma(2); lower case is the inverse.
A, A_INV, B, B_INV = "A", "a", "B", "b"
INVERSE = {A: A_INV, A_INV: A, B: B_INV, B_INV: B}


@dataclass(frozen=True)
class UpperHalfPoint:
    x: float
    y: float

    def __post_init__(self):
        if not self.y > 0:
            raise ValueError(f"point must lie in the upper half-plane, got y={self.y}")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)


@dataclass(frozen=True)
class Isometry:
    """Projective class of an SL(2, R) matrix; ``M`` and ``-M`` act alike."""

    a: float
    b: float
    c: float
    d: float

    @classmethod
    def identity(cls) -> Isometry:
        return cls(1.0, 0.0, 0.0, 1.0)

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def __matmul__(self, other: Isometry) -> Isometry:
        return Isometry(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> Isometry:
        det = self.det
        return Isometry(self.d / det, -self.b / det, -self.c / det, self.a / det)

    def normalized(self) -> Isometry:
        s = math.sqrt(self.det)
        return Isometry(self.a / s, self.b / s, self.c / s, self.d / s)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    def projectively_close(self, other: Isometry, rel_tol: float = 1e-9) -> bool:
        """Compare up to sign, relative to the larger entry magnitude."""
        mine, theirs = self.as_tuple(), other.as_tuple()
        scale = max(max(abs(v) for v in mine), max(abs(v) for v in theirs), 1.0)
        plus = max(abs(p - q) for p, q in zip(mine, theirs))
        minus = max(abs(p + q) for p, q in zip(mine, theirs))
        return min(plus, minus) <= rel_tol * scale


GENERATOR_MATRICES = {
    A: Isometry(1.0, 2.0, 0.0, 1.0),
    A_INV: Isometry(1.0, -2.0, 0.0, 1.0),
    B: Isometry(1.0, 0.0, 2.0, 1.0),
    B_INV: Isometry(1.0, 0.0, -2.0, 1.0),
}


@dataclass(frozen=True)
class FrameState:
    frame: Isometry

    @classmethod
    def identity(cls) -> FrameState:
        return cls(Isometry.identity())


@dataclass(frozen=True)
class GeneratorWord:
    """Freely reduced word; ``matrix()`` multiplies the letters left to right."""

    letters: tuple[str, ...] = ()

    def __post_init__(self):
        for letter in self.letters:
            if letter not in INVERSE:
                raise ValueError(f"unknown generator label {letter!r}")
        for left, right in zip(self.letters, self.letters[1:]):
            if INVERSE[left] == right:
                raise ValueError("word is not freely reduced")

    @classmethod
    def reduce(cls, letters) -> GeneratorWord:
        out: list[str] = []
        for letter in letters:
            if out and INVERSE[out[-1]] == letter:
                out.pop()
            else:
                out.append(letter)
        return cls(tuple(out))

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __mul__(self, other: GeneratorWord) -> GeneratorWord:
        return GeneratorWord.reduce(self.letters + other.letters)

    def inverse(self) -> GeneratorWord:
        return GeneratorWord(tuple(INVERSE[x] for x in reversed(self.letters)))

    def matrix(self) -> Isometry:
        m = Isometry.identity()
        for letter in self.letters:
            m = m @ GENERATOR_MATRICES[letter]
        return m


def mobius_apply(m: Isometry, z: UpperHalfPoint) -> UpperHalfPoint:
    w = z.z
    image = (m.a * w + m.b) / (m.c * w + m.d)
    return UpperHalfPoint(image.real, image.imag)


def basepoint(s: FrameState) -> UpperHalfPoint:
    return mobius_apply(s.frame, UpperHalfPoint(0.0, 1.0))


def geodesic_step(s: FrameState, dt: float) -> FrameState:
    e = math.exp(dt)
    f = s.frame
    return FrameState(Isometry(f.a * e, f.b / e, f.c * e, f.d / e).normalized())


def rotate_frame(s: FrameState, theta: float) -> FrameState:
    co, si = math.cos(theta), math.sin(theta)
    return FrameState((s.frame @ Isometry(co, -si, si, co)).normalized())


def hyperbolic_distance(z: UpperHalfPoint, w: UpperHalfPoint) -> float:
    """Distance for the curvature -4 metric |dz|^2 / (4 y^2)."""
    num = (z.x - w.x) ** 2 + (z.y - w.y) ** 2
    return 0.5 * math.acosh(1.0 + num / (2.0 * z.y * w.y))


def in_domain(z: UpperHalfPoint) -> bool:
    if abs(z.x) > 1.0:
        return False
    y2 = 4.0 * z.y * z.y
    return (2.0 * z.x - 1.0) ** 2 + y2 >= 1.0 and (2.0 * z.x + 1.0) ** 2 + y2 >= 1.0


def _violated_side(x: float, y: float) -> tuple[str, int] | None:
    if x > 1.0:
        return A_INV, int(math.floor((x + 1.0) / 2.0))
    if x < -1.0:
        return A, int(math.floor((1.0 - x) / 2.0))
    y2 = 4.0 * y * y
    if (2.0 * x + 1.0) ** 2 + y2 < 1.0:
        return B, 1
    if (2.0 * x - 1.0) ** 2 + y2 < 1.0:
        return B_INV, 1
    return None


def reduce_to_domain(s: FrameState) -> tuple[FrameState, GeneratorWord]:
    """Move the frame into the fundamental domain by side pairings.

    Returns the reduced frame and the word ``w`` with
    ``frame_out = w.matrix() @ frame_in`` (up to sign).
    """
    f = s.frame
    a, b, c, d = f.a, f.b, f.c, f.d
    applied: list[str] = []
    count = 0
    while True:
        n2 = c * c + d * d
        x, y = (a * c + b * d) / n2, 1.0 / n2
        side = _violated_side(x, y)
        if side is None:
            break
        letter, times = side
        count += times
        if count > MAX_GENERATOR_APPLICATIONS:
            raise NonTermination(
                f"more than {MAX_GENERATOR_APPLICATIONS} side pairings at basepoint {x}+{y}i"
            )
        if letter == A:
            a, b = a + 2.0 * times * c, b + 2.0 * times * d
        elif letter == A_INV:
            a, b = a - 2.0 * times * c, b - 2.0 * times * d
        elif letter == B:
            c, d = c + 2.0 * a, d + 2.0 * b
        else:
            c, d = c - 2.0 * a, d - 2.0 * b
        applied.extend([letter] * times)
    # the first application is the rightmost factor
    word = GeneratorWord.reduce(reversed(applied))
    return FrameState(Isometry(a, b, c, d).normalized()), word
