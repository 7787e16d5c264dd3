"""The idempotented algebra in its canonical-monomial basis.

Weights are pairs (l1, l2) in coroot coordinates; the simple roots act by

    1' = (2, -1)      2' = (-1, 2)

with E-letters adding a root and F-letters subtracting it.  A basis element
is  b_minus b_plus 1_lambda:  a canonical F-monomial, then a canonical
E-monomial, acting on the idempotent 1_lambda (weights compose rightward:
lambda is the source, at the right end).

Canonical monomials per half come in two families of divided-power words,

    family "121":  X_1^(a) X_2^(b) X_1^(c)   with b >= a + c
    family "212":  X_2^(a) X_1^(b) X_2^(c)   with b >  a + c,

where the boundary b = a + c of the 212 family is excluded because that
monomial equals the 121 monomial with exponents reversed; degenerate words
(some exponents zero) embed canonically (see monomial()).  Products are
computed by concatenating divided-power factors and rewriting:

  * E-past-F straightening at each E..F junction (straighten_ef below),
    splitting on the sign of lambda_i - (b - a) so all binomials have
    nonnegative top; terminates because the total exponent weight of
    inverted E/F factor pairs strictly drops.
  * within each half, adjacent equal colors merge with binomial
    coefficients and non-canonical length-3 windows (middle exponent
    <= sum of outer) rewrite via the two-sided divided-power relation
    (_apply_window below); the pair (merged length, window count)
    decreases lexicographically, and for words of length >= 4 each
    rewrite triggers a merge, so the length itself drops.

All structure constants stay in Z[q, q^-1]; nothing here divides.
"""

from __future__ import annotations

import re
from typing import Iterable, Iterator, NamedTuple

from qsl3.laurent import Laurent, qbinom

Weight = tuple[int, int]

_ROOTS = {1: (2, -1), 2: (-1, 2)}


def root_shift(i: int) -> Weight:
    """The root i' added to the weight by E_i (subtracted by F_i)."""
    if i not in _ROOTS:
        raise ValueError(f"color must be 1 or 2, got {i}")
    return _ROOTS[i]


class Monomial(NamedTuple):
    """One canonical half-word (E- or F-side is decided by its position)."""

    family: str  # "121" or "212"
    exps: tuple[int, int, int]


EMPTY_MONOMIAL = Monomial("121", (0, 0, 0))


def monomial(family: str, exps: tuple[int, int, int]) -> Monomial:
    """Normalizing constructor: embeds degenerate words, dedups the overlap.

    Raises ValueError when the (nonzero) exponents violate canonicality.
    """
    if family not in ("121", "212"):
        raise ValueError(f"unknown family {family!r}")
    colors = (1, 2, 1) if family == "121" else (2, 1, 2)
    factors = [(c, e) for c, e in zip(colors, exps) if e > 0]
    return monomial_from_factors(factors)


def monomial_from_factors(factors: list[tuple[int, int]]) -> Monomial:
    """Canonical monomial for an alternating color/exponent list (<= 3 long)."""
    for k in range(len(factors) - 1):
        if factors[k][0] == factors[k + 1][0]:
            raise ValueError(f"factors not alternating: {factors}")
    if len(factors) == 0:
        return Monomial("121", (0, 0, 0))
    if len(factors) == 1:
        (c, x) = factors[0]
        # A lone letter sits in the middle slot of the opposite family
        # (its own family's constraint b >= a+c would fail in slot a or c).
        return Monomial("212" if c == 1 else "121", (0, x, 0))
    if len(factors) == 2:
        (c0, x), (c1, y) = factors
        if c0 == 1:  # X1^x X2^y
            return Monomial("121", (x, y, 0)) if y >= x else Monomial("212", (0, x, y))
        # X2^x X1^y
        return Monomial("212", (x, y, 0)) if y > x else Monomial("121", (0, x, y))
    if len(factors) == 3:
        (c0, a), (_, b), (_, c) = factors
        fam = "121" if c0 == 1 else "212"
        if b < a + c:
            raise ValueError(f"non-canonical window {factors}")
        if fam == "212" and b == a + c:
            # overlap of the two families: X2^a X1^b X2^c = X1^c X2^b X1^a
            return Monomial("121", (c, b, a))
        return Monomial(fam, (a, b, c))
    raise ValueError(f"monomial has more than three factors: {factors}")


def monomial_factors(m: Monomial) -> tuple[tuple[int, int], ...]:
    colors = (1, 2, 1) if m.family == "121" else (2, 1, 2)
    return tuple((c, e) for c, e in zip(colors, m.exps) if e > 0)


class BasisElement(NamedTuple):
    minus: Monomial
    plus: Monomial
    weight: Weight  # source weight (right end)


def unit_element(weight: Weight) -> BasisElement:
    return BasisElement(EMPTY_MONOMIAL, EMPTY_MONOMIAL, tuple(weight))


# Internal factor representation during rewriting: (kind, color, exponent)
# with kind "E" or "F" and exponent >= 1.
Factor = tuple[str, int, int]


def _be_factors(x: BasisElement) -> tuple[Factor, ...]:
    fs = [("F", c, e) for c, e in monomial_factors(x.minus)]
    fs += [("E", c, e) for c, e in monomial_factors(x.plus)]
    return tuple(fs)


def _factors_shift(factors: Iterable[Factor]) -> Weight:
    s1 = s2 = 0
    for kind, color, exp in factors:
        r1, r2 = _ROOTS[color]
        sign = exp if kind == "E" else -exp
        s1 += sign * r1
        s2 += sign * r2
    return (s1, s2)


def target(x: BasisElement) -> Weight:
    s1, s2 = _factors_shift(_be_factors(x))
    return (x.weight[0] + s1, x.weight[1] + s2)


# -- half-word canonicalization ----------------------------------------------

# Memoized: the result is weight-independent, and products repeat blocks a lot.
_half_cache: dict[tuple[tuple[int, int], ...], tuple[tuple[Monomial, Laurent], ...]] = {}


def _merge_colors(
    factors: tuple[tuple[int, int], ...]
) -> tuple[tuple[tuple[int, int], ...], Laurent]:
    """Drop zero exponents and merge adjacent equal colors with binomials."""
    coeff = Laurent.one()
    out: list[tuple[int, int]] = []
    for c, e in factors:
        if e == 0:
            continue
        if out and out[-1][0] == c:
            a = out[-1][1]
            coeff = coeff * qbinom(a + e, e)
            out[-1] = (c, a + e)
        else:
            out.append((c, e))
    return tuple(out), coeff


def _apply_window(
    factors: tuple[tuple[int, int], ...], k: int
) -> Iterator[tuple[tuple[tuple[int, int], ...], Laurent]]:
    """Rewrite the window (i,a)(j,b)(i,c) with b <= a+c at position k:

        X_i^(a) X_j^(b) X_i^(c)
          = sum_{p+r=b, p<=c, r<=a} [a+c-b choose c-p] X_j^(p) X_i^(a+c) X_j^(r)
    """
    (i, a), (j, b), (_, c) = factors[k : k + 3]
    for p in range(max(0, b - a), min(b, c) + 1):
        r = b - p
        coeff = qbinom(a + c - b, c - p)
        mid: tuple[tuple[int, int], ...] = ((i, a + c),)
        if p:
            mid = ((j, p),) + mid
        if r:
            mid = mid + ((j, r),)
        yield factors[:k] + mid + factors[k + 3 :], coeff


def _order_half(
    factors: tuple[tuple[int, int], ...]
) -> tuple[tuple[Monomial, Laurent], ...]:
    """Canonicalize one half-word into Laurent combination of Monomials."""
    cached = _half_cache.get(factors)
    if cached is not None:
        return cached
    out: dict[Monomial, Laurent] = {}
    stack: list[tuple[tuple[tuple[int, int], ...], Laurent]] = [
        (factors, Laurent.one())
    ]
    while stack:
        fs, coeff = stack.pop()
        fs, mc = _merge_colors(fs)
        coeff = coeff * mc
        if len(fs) <= 2 or (len(fs) == 3 and fs[1][1] >= fs[0][1] + fs[2][1]):
            m = monomial_from_factors(list(fs))
            cur = out.get(m, Laurent.zero()) + coeff
            if cur.is_zero():
                out.pop(m, None)
            else:
                out[m] = cur
            continue
        # Leftmost applicable window; for length >= 4 one of any two
        # consecutive windows is applicable, so this always finds one.
        site = next(
            k
            for k in range(len(fs) - 2)
            if fs[k + 1][1] <= fs[k][1] + fs[k + 2][1]
        )
        for new_fs, c in _apply_window(fs, site):
            if not c.is_zero():
                stack.append((new_fs, coeff * c))
    result = tuple(sorted(out.items()))
    _half_cache[factors] = result
    return result


def canonicalize_plus_word(
    word: Iterable[tuple[int, int]], lam: Weight
) -> "AlgebraElement":
    """Canonicalize an E-word [(color, divided exponent), ...] at 1_lam."""
    out: dict[BasisElement, Laurent] = {}
    for m, c in _order_half(tuple(word)):
        out[BasisElement(EMPTY_MONOMIAL, m, tuple(lam))] = c
    return AlgebraElement(out)


def canonicalize_minus_word(
    word: Iterable[tuple[int, int]], lam: Weight
) -> "AlgebraElement":
    """Canonicalize an F-word; identical rewriting, opposite weight shifts."""
    out: dict[BasisElement, Laurent] = {}
    for m, c in _order_half(tuple(word)):
        out[BasisElement(m, EMPTY_MONOMIAL, tuple(lam))] = c
    return AlgebraElement(out)


# -- straightening ------------------------------------------------------------


def _first_ef_junction(fs: tuple[Factor, ...]) -> int | None:
    for k in range(len(fs) - 1):
        if fs[k][0] == "E" and fs[k + 1][0] == "F":
            return k
    return None


def _straighten_site(
    fs: tuple[Factor, ...], k: int, weight: Weight
) -> Iterator[tuple[tuple[Factor, ...], Laurent]]:
    """Rewrite the junction E_i^(a) F_j^(b) at position k over 1_weight."""
    (_, i, a), (_, j, b) = fs[k], fs[k + 1]
    head, tail = fs[:k], fs[k + 2 :]
    if i != j:
        # different colors commute freely
        yield head + (("F", j, b), ("E", i, a)) + tail, Laurent.one()
        return
    # local weight just right of the pair
    s1, s2 = _factors_shift(tail)
    nu_i = (weight[0] + s1, weight[1] + s2)[i - 1]
    if nu_i >= b - a:
        # E^(a) F^(b) 1_nu = sum_j [a-b+nu_i choose j] F^(b-j) E^(a-j) 1_nu
        for t in range(0, min(a, b) + 1):
            coeff = qbinom(a - b + nu_i, t)
            if coeff.is_zero():
                continue
            mid: tuple[Factor, ...] = ()
            if b - t:
                mid += (("F", i, b - t),)
            if a - t:
                mid += (("E", i, a - t),)
            yield head + mid + tail, coeff
    else:
        # inverted form: E^(a) F^(b) 1_nu
        #   = F^(b) E^(a) 1_nu - sum_{t>=1} [b-a-nu_i choose t] E^(a-t) F^(b-t) 1_nu
        yield head + (("F", i, b), ("E", i, a)) + tail, Laurent.one()
        for t in range(1, min(a, b) + 1):
            coeff = qbinom(b - a - nu_i, t)
            if coeff.is_zero():
                continue
            mid = ()
            if a - t:
                mid += (("E", i, a - t),)
            if b - t:
                mid += (("F", i, b - t),)
            yield head + mid + tail, -coeff


def _reduce_factors(
    factors: tuple[Factor, ...], weight: Weight
) -> dict[BasisElement, Laurent]:
    """Straighten a factor word over 1_weight and canonicalize both halves."""
    out: dict[BasisElement, Laurent] = {}
    stack: list[tuple[tuple[Factor, ...], Laurent]] = [(factors, Laurent.one())]
    while stack:
        fs, coeff = stack.pop()
        k = _first_ef_junction(fs)
        if k is not None:
            for new_fs, c in _straighten_site(fs, k, weight):
                stack.append((new_fs, coeff * c))
            continue
        split = next((t for t in range(len(fs)) if fs[t][0] == "E"), len(fs))
        f_half = _order_half(tuple((c, e) for _, c, e in fs[:split]))
        e_half = _order_half(tuple((c, e) for _, c, e in fs[split:]))
        for fm, fc in f_half:
            for em, ec in e_half:
                be = BasisElement(fm, em, weight)
                cur = out.get(be, Laurent.zero()) + coeff * fc * ec
                if cur.is_zero():
                    out.pop(be, None)
                else:
                    out[be] = cur
    return out


def straighten_ef(i: int, a: int, j: int, b: int, lam: Weight) -> "AlgebraElement":
    """E_i^(a) F_j^(b) 1_lam expanded into F-before-E canonical form."""
    if a < 0 or b < 0:
        raise ValueError("divided exponents must be nonnegative")
    fs: tuple[Factor, ...] = ()
    if a:
        fs += (("E", i, a),)
    if b:
        fs += (("F", j, b),)
    return AlgebraElement(_reduce_factors(fs, tuple(lam)))


def basis_mul(x: BasisElement, y: BasisElement) -> dict[BasisElement, Laurent]:
    if x.weight != target(y):
        return {}
    return _reduce_factors(_be_factors(x) + _be_factors(y), y.weight)


# -- elements -------------------------------------------------------------------


class AlgebraElement:
    """Laurent combination of basis elements (possibly across weights)."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[BasisElement, Laurent] | None = None):
        self.terms = {b: c for b, c in (terms or {}).items() if not c.is_zero()}

    @staticmethod
    def zero() -> "AlgebraElement":
        return AlgebraElement()

    @staticmethod
    def unit(weight: Weight) -> "AlgebraElement":
        return AlgebraElement({unit_element(weight): Laurent.one()})

    @staticmethod
    def from_basis(b: BasisElement, coeff: Laurent | int = 1) -> "AlgebraElement":
        c = Laurent.from_int(coeff) if isinstance(coeff, int) else coeff
        return AlgebraElement({b: c})

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        out = dict(self.terms)
        for b, c in other.terms.items():
            cur = out.get(b, Laurent.zero()) + c
            if cur.is_zero():
                out.pop(b, None)
            else:
                out[b] = cur
        return AlgebraElement(out)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return self + (-other)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement({b: -c for b, c in self.terms.items()})

    def __mul__(self, other: "AlgebraElement | Laurent | int") -> "AlgebraElement":
        if isinstance(other, (int, Laurent)):
            return AlgebraElement({b: c * other for b, c in self.terms.items()})
        out: dict[BasisElement, Laurent] = {}
        for bx, cx in self.terms.items():
            for by, cy in other.terms.items():
                for bz, cz in basis_mul(bx, by).items():
                    cur = out.get(bz, Laurent.zero()) + cx * cy * cz
                    if cur.is_zero():
                        out.pop(bz, None)
                    else:
                        out[bz] = cur
        return AlgebraElement(out)

    def __rmul__(self, other: "Laurent | int") -> "AlgebraElement":
        if isinstance(other, (int, Laurent)):
            return self * other
        return NotImplemented

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms))

    def is_zero(self) -> bool:
        return not self.terms

    def items(self) -> list[tuple[BasisElement, Laurent]]:
        return sorted(self.terms.items())

    def __repr__(self) -> str:
        return f"AlgebraElement({format_element(self)})"

    def __str__(self) -> str:
        return format_element(self)


def mul(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    return x * y


# -- text form ------------------------------------------------------------------
#
# Grammar per term:  [(laurent)] [letter[^(n)]]* @ (l1,l2)
# letters are F1 F2 E1 E2; omitted exponent means 1; the empty letter list
# is the idempotent.  Terms join with + / -.


def format_basis_element(b: BasisElement) -> str:
    parts = []
    for kind, mono in (("F", b.minus), ("E", b.plus)):
        for c, e in monomial_factors(mono):
            parts.append(f"{kind}{c}" + (f"^({e})" if e != 1 else ""))
    parts.append(f"@ ({b.weight[0]},{b.weight[1]})")
    return " ".join(parts)


def format_element(x: AlgebraElement) -> str:
    if x.is_zero():
        return "0"
    chunks = []
    for b, c in x.items():
        body = format_basis_element(b)
        if c == Laurent.one():
            term = body
        else:
            term = f"({c.pretty()}) {body}"
        chunks.append(term)
    return " + ".join(chunks)


_TERM_RE = re.compile(
    r"^\s*(?:\(\s*(?P<coeff>[^()]*)\s*\)\s*)?"
    r"(?P<letters>(?:[EF][12](?:\^\(\d+\))?\s*)*)"
    r"@\s*\(\s*(?P<l1>-?\d+)\s*,\s*(?P<l2>-?\d+)\s*\)\s*$"
)
_LETTER_RE = re.compile(r"([EF])([12])(?:\^\((\d+)\))?")


def _split_terms(text: str) -> list[tuple[int, str]]:
    """Split on top-level + / - (not inside parentheses); returns (sign, term)."""
    out: list[tuple[int, str]] = []
    depth = 0
    sign, cur = 1, ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if depth == 0 and ch in "+-" and cur.strip():
            out.append((sign, cur))
            sign, cur = (1 if ch == "+" else -1), ""
        elif depth == 0 and ch == "-" and not cur.strip():
            sign, cur = -sign, ""
        else:
            cur += ch
    if cur.strip():
        out.append((sign, cur))
    return out


def parse_element(text: str) -> AlgebraElement:
    """Parse the monomial grammar; letters in any order are normalized."""
    text = text.strip()
    if text == "0":
        return AlgebraElement.zero()
    total = AlgebraElement.zero()
    for sign, term in _split_terms(text):
        m = _TERM_RE.match(term)
        if not m:
            raise ValueError(f"cannot parse term: {term.strip()!r}")
        coeff = (
            Laurent.parse(m.group("coeff"))
            if m.group("coeff") is not None
            else Laurent.one()
        )
        lam = (int(m.group("l1")), int(m.group("l2")))
        letters = [
            (kind, int(color), int(exp) if exp else 1)
            for kind, color, exp in _LETTER_RE.findall(m.group("letters"))
        ]
        # Build right-to-left: each letter is a one-factor element whose
        # source is the running target weight; mul() normalizes the pile.
        el = AlgebraElement.unit(lam)
        running = lam
        for kind, color, exp in reversed(letters):
            mono = monomial_from_factors([(color, exp)])
            if kind == "E":
                be = BasisElement(EMPTY_MONOMIAL, mono, running)
            else:
                be = BasisElement(mono, EMPTY_MONOMIAL, running)
            el = AlgebraElement.from_basis(be) * el
            s1, s2 = _factors_shift(((kind, color, exp),))
            running = (running[0] + s1, running[1] + s2)
        total = total + el * (coeff * sign)
    return total
