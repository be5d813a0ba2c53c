"""Exact dyadic fixed-point scalars.

Network parameters live on the dyadic grid

    R_tau = { a * 2**-tau : a integer, |a * 2**-tau| <= 2**tau }.

A FixedScalar is a pair (mantissa, tau) with value mantissa * 2**-tau, where
the mantissa is an arbitrary-precision Python int, so addition, subtraction,
and multiplication are exact and independent of evaluation order.  The
magnitude cap |value| <= 2**tau is part of the declared-parameter contract: it
is checked when a scalar is declared as a network entry (``check_declared``),
never on intermediate results, which are instead bounded by a configurable
mantissa headroom at evaluation time.

Every IEEE double is a dyadic rational, so ``from_float`` is an exact
conversion, not a rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import GridError

# Default mantissa budget for intermediates in exact evaluation.  Exceeding it
# raises HeadroomExceeded rather than silently degrading.
DEFAULT_HEADROOM_BITS = 128


def _align(a: "FixedScalar", b: "FixedScalar") -> tuple[int, int, int]:
    """Return (ma, mb, tau) with both mantissas rescaled to a common tau."""
    tau = max(a.tau, b.tau)
    return a.mantissa << (tau - a.tau), b.mantissa << (tau - b.tau), tau


@dataclass(frozen=True)
class FixedScalar:
    """An exact dyadic rational mantissa * 2**-tau."""

    mantissa: int
    tau: int

    def __post_init__(self):
        if not isinstance(self.mantissa, int) or isinstance(self.mantissa, bool):
            raise GridError(f"mantissa must be an int, got {type(self.mantissa).__name__}")
        if not isinstance(self.tau, int) or self.tau < 0:
            raise GridError(f"tau must be a nonnegative int, got {self.tau!r}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_float(cls, x: float, tau: int | None = None) -> "FixedScalar":
        """Exact conversion of a finite float.

        With tau=None the minimal grid containing x is used.  With an explicit
        tau the value must already lie on R_tau's grid (no rounding is ever
        performed here).
        """
        frac = Fraction(x)  # exact for finite floats
        return cls.from_fraction(frac, tau)

    @classmethod
    def from_fraction(cls, q: Fraction | int, tau: int | None = None) -> "FixedScalar":
        q = Fraction(q)
        den = q.denominator
        if den & (den - 1) != 0:
            raise GridError(f"{q} is not dyadic (denominator {den})")
        min_tau = den.bit_length() - 1
        if tau is None:
            tau = min_tau
        elif tau < min_tau:
            raise GridError(f"{q} needs tau >= {min_tau}, got {tau}")
        return cls(q.numerator << (tau - min_tau), tau)

    # -- views --------------------------------------------------------------

    def as_fraction(self) -> Fraction:
        return Fraction(self.mantissa, 1 << self.tau)

    @property
    def value(self) -> float:
        # Fraction -> float is correctly rounded even for huge mantissas.
        return float(self.as_fraction())

    def normalized(self) -> "FixedScalar":
        """Equivalent scalar with trailing zero bits stripped from the mantissa."""
        m, t = self.mantissa, self.tau
        if m == 0:
            return FixedScalar(0, 0)
        while t > 0 and m % 2 == 0:
            m //= 2
            t -= 1
        return FixedScalar(m, t)

    # -- grid contract ------------------------------------------------------

    def in_grid(self, tau: int) -> bool:
        """True if the value lies on R_tau: representable and |value| <= 2**tau."""
        norm = self.normalized()
        if norm.tau > tau:
            return False
        return abs(self.as_fraction()) <= (1 << tau)

    def check_declared(self, tau: int) -> "FixedScalar":
        if not self.in_grid(tau):
            raise GridError(f"value {self.as_fraction()} outside R_{tau}")
        return self

    # -- exact arithmetic ----------------------------------------------------

    def __add__(self, other: "FixedScalar") -> "FixedScalar":
        ma, mb, tau = _align(self, other)
        return FixedScalar(ma + mb, tau)

    def __sub__(self, other: "FixedScalar") -> "FixedScalar":
        ma, mb, tau = _align(self, other)
        return FixedScalar(ma - mb, tau)

    def __mul__(self, other: "FixedScalar") -> "FixedScalar":
        return FixedScalar(self.mantissa * other.mantissa, self.tau + other.tau)

    def __neg__(self) -> "FixedScalar":
        return FixedScalar(-self.mantissa, self.tau)

    def __abs__(self) -> "FixedScalar":
        return FixedScalar(abs(self.mantissa), self.tau)

    def relu(self) -> "FixedScalar":
        # phi(0) = 0 by definition; negatives clamp exactly.
        return self if self.mantissa > 0 else FixedScalar(0, self.tau)

    # -- comparisons (value semantics, representation-independent) ----------

    def __eq__(self, other) -> bool:
        if isinstance(other, FixedScalar):
            ma, mb, _ = _align(self, other)
            return ma == mb
        if isinstance(other, (int, Fraction)):
            return self.as_fraction() == other
        return NotImplemented

    def __hash__(self):
        return hash(self.as_fraction())

    def __lt__(self, other: "FixedScalar") -> bool:
        ma, mb, _ = _align(self, other)
        return ma < mb

    def __le__(self, other: "FixedScalar") -> bool:
        ma, mb, _ = _align(self, other)
        return ma <= mb

    def __repr__(self):
        return f"FixedScalar({self.mantissa}, tau={self.tau})"


ZERO = FixedScalar(0, 0)
ONE = FixedScalar(1, 0)
