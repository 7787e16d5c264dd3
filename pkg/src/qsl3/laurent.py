"""Exact arithmetic in Z[q, q^-1] and quantum integer combinatorics.

A Laurent polynomial is stored sparsely as a dict {exponent: coefficient}
with integer exponents, arbitrary-precision integer coefficients and no
explicit zero terms.  The canonical textual form lists signed integer
monomials ``c*q^e`` with exponents increasing, e.g. ``-1*q^-2 + 3*q^0 + 1*q^2``.

Quantum integers use the balanced convention

    [a] = (q^a - q^-a) / (q - q^-1) = q^(a-1) + q^(a-3) + ... + q^(1-a),

valid for every integer a (so [-a] = -[a] and [0] = 0).  Factorials and
binomials are only defined for nonnegative arguments; [a choose b] with
b > a >= 0 is zero.  Binomials are computed by exact stepwise division,
which never leaves Z[q, q^-1] because every [k] has leading coefficient 1.

RationalFunction is a numerator/denominator pair over Z[q, q^-1].  No gcd
reduction is attempted; equality is decided by cross-multiplication, which
is exact and total.  A light normalization (common integer content and a
common power of q) keeps intermediate results small.
"""

from __future__ import annotations

from math import gcd
import re


class Laurent:
    """Sparse Laurent polynomial in Z[q, q^-1]."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[int, int] | None = None):
        self.terms = {e: c for e, c in (terms or {}).items() if c != 0}

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero() -> "Laurent":
        return Laurent()

    @staticmethod
    def one() -> "Laurent":
        return Laurent({0: 1})

    @staticmethod
    def q(power: int = 1, coeff: int = 1) -> "Laurent":
        return Laurent({power: coeff})

    @staticmethod
    def from_int(n: int) -> "Laurent":
        return Laurent({0: n})

    # -- ring structure ----------------------------------------------------

    def __add__(self, other: "Laurent") -> "Laurent":
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return Laurent(out)

    def __sub__(self, other: "Laurent") -> "Laurent":
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) - c
        return Laurent(out)

    def __neg__(self) -> "Laurent":
        return Laurent({e: -c for e, c in self.terms.items()})

    def __mul__(self, other: "Laurent | int") -> "Laurent":
        if isinstance(other, int):
            return Laurent({e: c * other for e, c in self.terms.items()})
        if not isinstance(other, Laurent):
            return NotImplemented
        out: dict[int, int] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = e1 + e2
                out[e] = out.get(e, 0) + c1 * c2
        return Laurent(out)

    __rmul__ = __mul__

    def shift(self, t: int) -> "Laurent":
        """Multiply by q^t."""
        return Laurent({e + t: c for e, c in self.terms.items()})

    def bar(self) -> "Laurent":
        """The bar involution q -> q^-1."""
        return Laurent({-e: c for e, c in self.terms.items()})

    # -- queries -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        if not self.terms:
            raise ValueError("degree of zero polynomial")
        return max(self.terms)

    def valuation(self) -> int:
        if not self.terms:
            raise ValueError("valuation of zero polynomial")
        return min(self.terms)

    def at_one(self) -> int:
        """Evaluate at q = 1."""
        return sum(self.terms.values())

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int):
            return self.terms == Laurent.from_int(other).terms
        if not isinstance(other, Laurent):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.terms.items())))

    def __bool__(self) -> bool:
        return bool(self.terms)

    # -- division ----------------------------------------------------------

    def exact_div(self, other: "Laurent") -> "Laurent":
        """Exact division; raises ValueError if the quotient is not Laurent.

        Works from the top exponent down.  Division by a polynomial with
        leading coefficient +-1 (every quantum integer) stays in Z[q, q^-1].
        """
        if other.is_zero():
            raise ZeroDivisionError("division by zero Laurent polynomial")
        if self.is_zero():
            return Laurent.zero()
        rem = dict(self.terms)
        lead_e = other.degree()
        lead_c = other.terms[lead_e]
        # Any exact quotient has valuation exactly val(self) - val(other);
        # descending below that floor proves the division inexact (and the
        # descent would otherwise never terminate on Laurent exponents).
        floor = self.valuation() - other.valuation()
        out: dict[int, int] = {}
        while rem:
            e = max(rem)
            c = rem[e]
            if c % lead_c != 0 or e - lead_e < floor:
                raise ValueError("inexact Laurent division")
            fac_e, fac_c = e - lead_e, c // lead_c
            out[fac_e] = out.get(fac_e, 0) + fac_c
            for oe, oc in other.terms.items():
                ne = oe + fac_e
                nv = rem.get(ne, 0) - oc * fac_c
                if nv:
                    rem[ne] = nv
                else:
                    rem.pop(ne, None)
        return Laurent(out)

    # -- text --------------------------------------------------------------

    def to_str(self) -> str:
        """Canonical form: signed monomials c*q^e, exponents increasing."""
        if not self.terms:
            return "0"
        parts = []
        for i, e in enumerate(sorted(self.terms)):
            c = self.terms[e]
            if i == 0:
                parts.append(f"{c}*q^{e}")
            else:
                sign = " + " if c > 0 else " - "
                parts.append(f"{sign}{abs(c)}*q^{e}")
        return "".join(parts)

    @staticmethod
    def parse(text: str) -> "Laurent":
        """Parse the canonical textual form (whitespace tolerant)."""
        text = text.strip()
        if text == "0":
            return Laurent.zero()
        terms: dict[int, int] = {}
        for mono in _split_monomials(text):
            c, e = _parse_monomial(mono)
            terms[e] = terms.get(e, 0) + c
        return Laurent(terms)

    def pretty(self) -> str:
        """Human form used by the CLI, e.g. ``q + q^-1`` or ``-2*q^3 + 1``."""
        if not self.terms:
            return "0"
        parts = []
        for i, e in enumerate(sorted(self.terms, reverse=True)):
            c = self.terms[e]
            mag = abs(c)
            if e == 0:
                body = str(mag)
            else:
                qpow = "q" if e == 1 else f"q^{e}"
                body = qpow if mag == 1 else f"{mag}*{qpow}"
            if i == 0:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append((" + " if c > 0 else " - ") + body)
        return "".join(parts)

    def __repr__(self) -> str:
        return f"Laurent({self.to_str()})"


def _split_monomials(text: str) -> list[str]:
    """Split '-1*q^-2 + 3*q^0' into signed monomial strings."""
    text = text.replace(" ", "")
    out: list[str] = []
    cur = ""
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in "+-" and cur and cur[-1] != "^" and cur[-1] != "*":
            out.append(cur)
            cur = ch if ch == "-" else ""
        elif ch in "+-" and not cur:
            cur = ch if ch == "-" else ""
        else:
            cur += ch
        i += 1
    if cur:
        out.append(cur)
    return out


def _parse_monomial(mono: str) -> tuple[int, int]:
    """Parse 'c*q^e', '-q^e', 'c*q', 'q', or a bare integer."""
    m = re.fullmatch(r"([+-])?(\d+)?\*?(q(\^(-?\d+))?)?", mono)
    if not m or (m.group(2) is None and m.group(3) is None):
        raise ValueError(f"bad Laurent monomial: {mono!r}")
    coeff = int(m.group(2)) if m.group(2) is not None else 1
    if m.group(1) == "-":
        coeff = -coeff
    if m.group(3) is None:
        expo = 0
    elif m.group(5) is not None:
        expo = int(m.group(5))
    else:
        expo = 1
    return coeff, expo


class RationalFunction:
    """num/den over Z[q, q^-1]; equality by cross-multiplication."""

    __slots__ = ("num", "den")

    def __init__(self, num: Laurent, den: Laurent | None = None):
        if den is None:
            den = Laurent.one()
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        # Light normalization: strip common integer content and power of q.
        if not num.is_zero():
            shift = -min(num.valuation(), den.valuation())
            num, den = num.shift(shift), den.shift(shift)
            content = 0
            for c in num.terms.values():
                content = gcd(content, c)
            for c in den.terms.values():
                content = gcd(content, c)
            if content > 1:
                num = Laurent({e: c // content for e, c in num.terms.items()})
                den = Laurent({e: c // content for e, c in den.terms.items()})
        else:
            den = Laurent.one()
        if den.terms[den.degree()] < 0:
            num, den = -num, -den
        self.num = num
        self.den = den

    @staticmethod
    def from_laurent(p: Laurent) -> "RationalFunction":
        return RationalFunction(p, Laurent.one())

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __add__(self, other: "RationalFunction") -> "RationalFunction":
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)
        return RationalFunction(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    def __sub__(self, other: "RationalFunction") -> "RationalFunction":
        if self.den == other.den:
            return RationalFunction(self.num - other.num, self.den)
        return RationalFunction(
            self.num * other.den - other.num * self.den, self.den * other.den
        )

    def __neg__(self) -> "RationalFunction":
        return RationalFunction(-self.num, self.den)

    def __mul__(self, other: "RationalFunction | Laurent | int") -> "RationalFunction":
        if isinstance(other, (int, Laurent)):
            return RationalFunction(self.num * other, self.den)
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return RationalFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other: "RationalFunction | Laurent") -> "RationalFunction":
        if isinstance(other, Laurent):
            return RationalFunction(self.num, self.den * other)
        return RationalFunction(self.num * other.den, self.den * other.num)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return self.num * other.den == other.num * self.den

    def __hash__(self) -> int:
        # Hash only the zero/nonzero split cheaply; full equality is cross-mul.
        return 0 if self.num.is_zero() else 1

    def as_laurent(self) -> Laurent:
        """Exact conversion back to Z[q, q^-1]; raises if not polynomial."""
        return self.num.exact_div(self.den)

    def __repr__(self) -> str:
        return f"({self.num.to_str()}) / ({self.den.to_str()})"


# -- quantum combinatorics --------------------------------------------------


def qint(a: int) -> Laurent:
    """Balanced quantum integer [a]; defined for every integer a."""
    if a == 0:
        return Laurent.zero()
    if a < 0:
        return -qint(-a)
    return Laurent({a - 1 - 2 * k: 1 for k in range(a)})


def qfact(a: int) -> Laurent:
    """Quantum factorial [a]!; requires a >= 0."""
    if a < 0:
        raise ValueError(f"quantum factorial of negative integer {a}")
    out = Laurent.one()
    for k in range(2, a + 1):
        out = out * qint(k)
    return out


def qbinom(a: int, b: int) -> Laurent:
    """Quantum binomial [a choose b] for a, b >= 0 (zero when b > a).

    Computed as prod_{k=1..b} [a-b+k]/[k] with exact division at each step;
    every partial product is [a-b+k choose k], hence polynomial.
    """
    if a < 0 or b < 0:
        raise ValueError(f"quantum binomial with negative argument ({a}, {b})")
    if b > a:
        return Laurent.zero()
    b = min(b, a - b)  # symmetry, fewer steps
    out = Laurent.one()
    for k in range(1, b + 1):
        out = out * qint(a - b + k)
        out = out.exact_div(qint(k))
    return out
