"""Canonical-basis algebra: constructors, straightening, oracle agreement.

The PBW oracle (single-letter words over the fraction field, normalized by
an independent mechanism) referees every multiplication tested here.
"""

from __future__ import annotations

import random
from itertools import product

import pytest

from qsl3 import algebra, pbw
from qsl3.algebra import (
    AlgebraElement,
    BasisElement,
    EMPTY_MONOMIAL,
    Monomial,
    canonicalize_minus_word,
    canonicalize_plus_word,
    format_element,
    monomial,
    monomial_from_factors,
    monomial_factors,
    parse_element,
    root_shift,
    straighten_ef,
    target,
    unit_element,
)
from qsl3.laurent import Laurent, RationalFunction, qbinom, qint


def _el(text: str) -> AlgebraElement:
    return parse_element(text)


def _oracle_of_basis(b: BasisElement) -> pbw.Element:
    factors = [(f"F{c}", e) for c, e in monomial_factors(b.minus)]
    factors += [(f"E{c}", e) for c, e in monomial_factors(b.plus)]
    return pbw.from_divided_word(factors, b.weight)


def _oracle_of_element(x: AlgebraElement) -> pbw.Element:
    total: pbw.Element = {}
    for b, c in x.items():
        total = pbw.add(total, pbw.scale(_oracle_of_basis(b), c))
    return total


def _agrees_with_oracle(x: BasisElement, y: BasisElement) -> bool:
    got = AlgebraElement(algebra.basis_mul(x, y))
    via_oracle = pbw.mul(_oracle_of_basis(x), _oracle_of_basis(y))
    return pbw.equals(_oracle_of_element(got), via_oracle)


# -- weights -------------------------------------------------------------------


def test_root_shift():
    assert root_shift(1) == (2, -1)
    assert root_shift(2) == (-1, 2)
    with pytest.raises(ValueError):
        root_shift(3)


def test_weight_after_e1_then_e2():
    x = _el("E2 E1 @ (0,0)")
    ((b, _),) = x.items()
    assert target(b) == (1, 1)


# -- canonical monomials ---------------------------------------------------------


def test_monomial_degenerate_embeddings():
    assert monomial("121", (0, 0, 0)) == EMPTY_MONOMIAL
    # single letters embed in the middle of the opposite family
    assert monomial_from_factors([(1, 3)]) == Monomial("212", (0, 3, 0))
    assert monomial_from_factors([(2, 2)]) == Monomial("121", (0, 2, 0))
    # two letters pick the family whose constraint holds
    assert monomial_from_factors([(1, 1), (2, 2)]) == Monomial("121", (1, 2, 0))
    assert monomial_from_factors([(1, 2), (2, 1)]) == Monomial("212", (0, 2, 1))
    assert monomial_from_factors([(2, 1), (1, 2)]) == Monomial("212", (1, 2, 0))
    assert monomial_from_factors([(2, 2), (1, 2)]) == Monomial("121", (0, 2, 2))


def test_monomial_overlap_dedup():
    # X2^a X1^(a+c) X2^c equals X1^c X2^(a+c) X1^a: stored in family 121
    assert monomial("212", (1, 3, 2)) == Monomial("121", (2, 3, 1))
    assert monomial("121", (1, 3, 2)) == Monomial("121", (1, 3, 2))


def test_monomial_rejects_non_canonical():
    with pytest.raises(ValueError):
        monomial("121", (1, 1, 1))
    with pytest.raises(ValueError):
        monomial_from_factors([(1, 1), (1, 2)])  # not alternating


# -- canonicalization -------------------------------------------------------------


def test_canonicalize_e1e2e1():
    lam = (0, 0)
    got = canonicalize_plus_word([(1, 1), (2, 1), (1, 1)], lam)
    expected = _el("E1^(2) E2 @ (0,0) + E2 E1^(2) @ (0,0)")
    assert got == expected


def test_canonicalize_merge():
    lam = (1, -1)
    got = canonicalize_plus_word([(1, 1), (1, 1)], lam)
    ((b, c),) = got.items()
    assert c == qint(2)
    assert b.plus == Monomial("212", (0, 2, 0))


def test_canonicalize_fixed_point():
    lam = (0, 0)
    got = canonicalize_plus_word([(1, 2), (2, 3), (1, 1)], lam)
    ((b, c),) = got.items()
    assert c == Laurent.one()
    assert b.plus == Monomial("121", (1, 3, 2)) or b.plus == Monomial("121", (2, 3, 1))
    # exponents read left to right: a=2, b=3, c=1
    assert b.plus == Monomial("121", (2, 3, 1))


def test_canonicalize_long_word_against_oracle():
    rng = random.Random(5)
    for _ in range(40):
        n = rng.randint(1, 6)
        word = [(rng.choice((1, 2)), rng.randint(1, 2)) for _ in range(n)]
        lam = (rng.randint(-2, 2), rng.randint(-2, 2))
        got = canonicalize_plus_word(word, lam)
        direct = pbw.from_divided_word([(f"E{c}", e) for c, e in word], lam)
        assert pbw.equals(_oracle_of_element(got), direct), (word, lam)
        mirror = canonicalize_minus_word(word, lam)
        direct_f = pbw.from_divided_word([(f"F{c}", e) for c, e in word], lam)
        assert pbw.equals(_oracle_of_element(mirror), direct_f), (word, lam)


# -- straightening -----------------------------------------------------------------


def test_straighten_ef_rank_one():
    got = straighten_ef(1, 1, 1, 1, (2, 0))
    expected = _el("F1 E1 @ (2,0) + (q + q^-1) @ (2,0)")
    assert got == expected


def test_straighten_ef_mixed_colors():
    got = straighten_ef(1, 1, 2, 1, (0, 0))
    expected = _el("F2 E1 @ (0,0)")
    assert got == expected


def test_straighten_ef_divided_square():
    got = straighten_ef(1, 2, 1, 2, (0, 0))
    # the straightened form must contain F1^(2) E1^(2) with coefficient
    # [0 choose 0] = 1
    key = BasisElement(
        Monomial("212", (0, 2, 0)), Monomial("212", (0, 2, 0)), (0, 0)
    )
    assert got.terms.get(key) == Laurent.one()
    # and the whole expansion matches the oracle
    direct = pbw.from_divided_word([("E1", 2), ("F1", 2)], (0, 0))
    assert pbw.equals(_oracle_of_element(got), direct)


@pytest.mark.parametrize("a,b", [(1, 1), (2, 1), (1, 2), (2, 2)])
def test_straighten_ef_boundary_weight(a, b):
    # at lambda_i = b - a the two straightening branches agree: the
    # correction sums carry [0 choose t] = delta_t0, so both reduce to a
    # plain swap
    lam = (b - a, 0)
    got = straighten_ef(1, a, 1, b, lam)
    expected = AlgebraElement(
        {
            BasisElement(
                monomial_from_factors([(1, b)]),
                monomial_from_factors([(1, a)]),
                lam,
            ): Laurent.one()
        }
    )
    assert got == expected
    direct = pbw.from_divided_word([("E1", a), ("F1", b)], lam)
    assert pbw.equals(_oracle_of_element(got), direct)


def test_straighten_ef_negative_weight_against_oracle():
    for a, b in product((1, 2), repeat=2):
        for l1 in range(-3, 1):
            got = straighten_ef(1, a, 1, b, (l1, 1))
            direct = pbw.from_divided_word([("E1", a), ("F1", b)], (l1, 1))
            assert pbw.equals(_oracle_of_element(got), direct), (a, b, l1)


# -- multiplication -----------------------------------------------------------------


def test_mul_idempotents():
    assert (_el("@ (1,0)") * _el("@ (0,1)")).is_zero()
    assert _el("@ (1,0)") * _el("@ (1,0)") == _el("@ (1,0)")


def test_mul_ef_composition():
    e1 = AlgebraElement.from_basis(
        BasisElement(EMPTY_MONOMIAL, monomial_from_factors([(1, 1)]), (0, 1))
    )
    f1 = AlgebraElement.from_basis(
        BasisElement(monomial_from_factors([(1, 1)]), EMPTY_MONOMIAL, (2, 0))
    )
    got = e1 * f1
    assert got == _el("F1 E1 @ (2,0) + (q + q^-1) @ (2,0)")


def test_mul_serre_after_expansion():
    # E_1^2 E_2 - [2] E_1 E_2 E_1 + E_2 E_1^2 = 0, with E^2 = [2] E^(2)
    for lam in [(0, 0), (2, -1), (-1, 2)]:
        l1, l2 = lam
        s = _el(f"E1 E1 E2 @ ({l1},{l2})")
        s = s - _el(f"E1 E2 E1 @ ({l1},{l2})") * qint(2)
        s = s + _el(f"E2 E1 E1 @ ({l1},{l2})")
        assert s.is_zero(), lam


def _shape_pool(max_exp: int) -> list[Monomial]:
    shapes = []
    for a, b, c in product(range(max_exp + 1), repeat=3):
        if b >= a + c:
            shapes.append(Monomial("121", (a, b, c)))
        if b > a + c:
            shapes.append(Monomial("212", (a, b, c)))
    return shapes


def test_mul_against_oracle_small_grid():
    # exponents <= 1 per slot, |lambda_i| <= 1: full composable sweep here;
    # the acceptance suite runs the bigger grid.
    shapes = _shape_pool(1)
    grid = [(l1, l2) for l1 in range(-1, 2) for l2 in range(-1, 2)]
    pool = [
        BasisElement(m, p, lam)
        for m in shapes
        for p in shapes
        for lam in grid
    ]
    by_source = {}
    for b in pool:
        by_source.setdefault(b.weight, []).append(b)
    checked = 0
    rng = random.Random(17)
    for y in pool:
        xs = by_source.get(target(y), [])
        for x in rng.sample(xs, min(3, len(xs))):
            assert _agrees_with_oracle(x, y), (x, y)
            checked += 1
    assert checked > 300


def test_mul_associativity_pool():
    rng = random.Random(23)
    shapes = _shape_pool(2)
    pool: list[AlgebraElement] = []
    for _ in range(50):
        lam = (rng.randint(-2, 2), rng.randint(-2, 2))
        n_terms = rng.randint(1, 2)
        el = AlgebraElement.zero()
        for _ in range(n_terms):
            b = BasisElement(rng.choice(shapes), rng.choice(shapes), lam)
            coeff = Laurent({rng.randint(-1, 1): rng.randint(1, 2)})
            el = el + AlgebraElement.from_basis(b, coeff)
        pool.append(el)
    checked = 0
    for x, y, z in product(pool, repeat=3):
        yz = y * z
        if yz.is_zero():
            continue
        xy = x * y
        if xy.is_zero():
            continue
        assert (xy * z) == (x * yz)
        checked += 1
        if checked >= 150:
            return
    assert checked > 0


def test_plus_part_positivity_smoke():
    shapes = _shape_pool(2)
    grid = [(l1, l2) for l1 in range(-2, 3) for l2 in range(-2, 3)]
    checked = 0
    for p1 in shapes:
        for p2 in shapes:
            for lam in grid[:5]:
                y = BasisElement(EMPTY_MONOMIAL, p2, lam)
                x = BasisElement(EMPTY_MONOMIAL, p1, target(y))
                prod = algebra.basis_mul(x, y)
                for b, c in prod.items():
                    assert all(v > 0 for v in c.terms.values()), (x, y, b, c)
                checked += 1
    assert checked


# -- grammar ----------------------------------------------------------------------


def test_format_parse_roundtrip():
    cases = [
        "@ (1,0)",
        "F1 E1 @ (2,0) + (q + q^-1) @ (2,0)",
        "F1^(2) F2 E1 @ (0,-1)",
        "(-q^2 + 1) E2 @ (3,-2)",
    ]
    for text in cases:
        el = parse_element(text)
        assert parse_element(format_element(el)) == el, text


def test_parse_normalizes_arbitrary_words():
    # E1 E1 @ -> [2] E1^(2) @
    got = _el("E1 E1 @ (0,0)")
    expected = AlgebraElement.from_basis(
        BasisElement(EMPTY_MONOMIAL, Monomial("212", (0, 2, 0)), (0, 0)), qint(2)
    )
    assert got == expected


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        parse_element("E3 @ (0,0)")
    with pytest.raises(ValueError):
        parse_element("E1 (1,0)")


def test_format_deterministic_order():
    el = _el("E1 @ (0,0)") + _el("F2 @ (4,4)") + _el("@ (1,1)")
    assert format_element(el) == format_element(parse_element(format_element(el)))
