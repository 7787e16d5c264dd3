"""Diagram typing, degrees, composition, serialization round-trips."""

from __future__ import annotations

import random

import pytest

from qsl3 import diagram as dg
from qsl3.diagram import (
    Diagram,
    DiagramTypeError,
    Signature,
    degree,
    emit_dsl,
    from_json,
    identity,
    parse_dsl,
    regions,
    target,
    to_json,
    to_svg,
    typecheck_compose,
    validate,
)


def _diag(strands, weight, slices, shift=0):
    return Diagram(Signature(tuple(strands), tuple(weight), shift), tuple(slices))


# -- regions and degrees ---------------------------------------------------------


def test_regions_right_to_left():
    rs = regions(("E1", "F2", "E2"), (1, 0))
    # rightmost (1,0); E2 adds (-1,2) -> (0,2); F2 subtracts (-1,2) -> (1,0);
    # E1 adds (2,-1) -> (3,-1)
    assert rs == [(3, -1), (1, 0), (0, 2), (1, 0)]


def test_dot_degree():
    d = _diag(["E1"], (0, 0), [("dot", 0)])
    assert degree(d) == 2
    assert target(d).shift == -2


@pytest.mark.parametrize(
    "strands,expected",
    {
        "same-color-up": (("E1", "E1"), -2),
        "mixed-color-up": (("E1", "E2"), 1),
        "same-color-down": (("F2", "F2"), -2),
        "mixed-color-down": (("F1", "F2"), 1),
        "sideways-same-color": (("E1", "F1"), 0),
        "sideways-mixed": (("E1", "F2"), 0),
    }.values(),
    ids=[
        "same-color-up",
        "mixed-color-up",
        "same-color-down",
        "mixed-color-down",
        "sideways-same-color",
        "sideways-mixed",
    ],
)
def test_cross_degrees(strands, expected):
    d = _diag(strands, (0, 0), [("cross", 0)])
    assert degree(d) == expected


def test_cup_degree_example():
    # cup creating F1 E1 over weight (3,0): degree 1 + lambda_1 = 4
    d = _diag([], (3, 0), [("cup", 0, "FE", 1)])
    assert degree(d) == 4
    assert target(d).strands == ("F1", "E1")


def test_cup_cap_degree_mirror():
    for pair in ("FE", "EF"):
        for lam in [(-2, 1), (0, 0), (3, -1)]:
            up = _diag([], lam, [("cup", 0, pair, 1)])
            toks = ("F1", "E1") if pair == "FE" else ("E1", "F1")
            down = _diag(toks, lam, [("cap", 0, pair, 1)])
            assert degree(up) == degree(down)


def test_zigzag_degree_zero():
    # both zigzags on a single E1 strand are degree 0
    lam = (1, -2)
    z1 = _diag(["E1"], lam, [("cup", 1, "FE", 1), ("cap", 0, "EF", 1)])
    z2 = _diag(["E1"], lam, [("cup", 0, "EF", 1), ("cap", 1, "FE", 1)])
    for z in (z1, z2):
        assert degree(z) == 0
        assert target(z).strands == ("E1",)
        assert target(z).shift == 0


def test_bubble_degree_convention():
    # ccw (EF-pair) bubble with k dots: degree 2(k - lambda_i + 1);
    # cw (FE-pair): 2(k + lambda_i + 1)
    for l1 in range(-3, 4):
        for k in range(4):
            ccw = _diag(
                [], (l1, 0),
                [("cup", 0, "EF", 1)] + [("dot", 0)] * k + [("cap", 0, "EF", 1)],
            )
            cw = _diag(
                [], (l1, 0),
                [("cup", 0, "FE", 1)] + [("dot", 1)] * k + [("cap", 0, "FE", 1)],
            )
            assert degree(ccw) == 2 * (k - l1 + 1)
            assert degree(cw) == 2 * (k + l1 + 1)


# -- typechecking ------------------------------------------------------------------


def test_typecheck_errors_name_slice():
    bad = _diag(["E1"], (0, 0), [("dot", 0), ("cross", 0)])
    with pytest.raises(DiagramTypeError, match="slice 1"):
        validate(bad)
    bad_cap = _diag(["E1", "E1"], (0, 0), [("cap", 0, "EF", 1)])
    with pytest.raises(DiagramTypeError, match="slice 0"):
        validate(bad_cap)


def test_cap_pair_must_match_colors():
    d = _diag(["E1", "F2"], (0, 0), [("cap", 0, "EF", 1)])
    with pytest.raises(DiagramTypeError):
        validate(d)


# -- composition -------------------------------------------------------------------


def test_vertical_composition_identity_law():
    lam = (0, 0)
    strand = Signature(("E1",), lam, 0)
    dot = _diag(["E1"], lam, [("dot", 0)])
    composite = typecheck_compose(identity(strand), dot, mode="vertical")
    assert composite == dot


def test_vertical_mismatch_raises():
    lam = (0, 0)
    dot = _diag(["E1"], lam, [("dot", 0)])
    other = _diag(["E2"], lam, [("dot", 0)])
    with pytest.raises(DiagramTypeError, match="vertical"):
        typecheck_compose(dot, other, mode="vertical")


def test_horizontal_composition():
    # id E1 (over the junction weight) left of id E2 1_(0,0)
    right = identity(Signature(("E2",), (0, 0), 0))
    left = identity(Signature(("E1",), (-1, 2), 0))
    both = typecheck_compose(left, right, mode="horizontal")
    assert both.source.strands == ("E1", "E2")
    assert both.source.weight == (0, 0)
    assert target(both).strands == ("E1", "E2")


def test_horizontal_junction_mismatch():
    right = identity(Signature(("E2",), (0, 0), 0))
    left = identity(Signature(("E1",), (5, 5), 0))
    with pytest.raises(DiagramTypeError, match="junction"):
        typecheck_compose(left, right, mode="horizontal")


def test_horizontal_slice_offset():
    lam = (0, 0)
    right = _diag(["E2"], lam, [("dot", 0)])
    left = _diag(["E1"], (-1, 2), [("dot", 0)])
    both = typecheck_compose(left, right, mode="horizontal")
    # right diagram's slices run first, at offset 1
    assert both.slices == (("dot", 1), ("dot", 0))
    assert degree(both) == 4


def _random_diagram(rng: random.Random, max_strands=3, max_slices=4) -> Diagram:
    tokens = [rng.choice(dg.TOKENS) for _ in range(rng.randint(0, max_strands))]
    lam = (rng.randint(-2, 2), rng.randint(-2, 2))
    strands = tuple(tokens)
    slices = []
    cur = strands
    for _ in range(rng.randint(0, max_slices)):
        options = []
        n = len(cur)
        if n:
            options.append(("dot", rng.randrange(n)))
        if n >= 2:
            p = rng.randrange(n - 1)
            options.append(("cross", p))
        p = rng.randint(0, n)
        options.append(("cup", p, rng.choice(("FE", "EF")), rng.choice((1, 2))))
        for p in range(n - 1):
            a, b = cur[p], cur[p + 1]
            if dg.token_color(a) == dg.token_color(b) and dg.token_up(a) != dg.token_up(b):
                pair = "EF" if dg.token_up(a) else "FE"
                options.append(("cap", p, pair, dg.token_color(a)))
        slc = rng.choice(options)
        cur, _ = dg.apply_slice(cur, lam, slc)
        slices.append(slc)
    return Diagram(Signature(strands, lam, 0), tuple(slices))


def test_degree_additivity_random():
    rng = random.Random(91)
    for _ in range(60):
        d = _random_diagram(rng)
        t = target(d)
        # vertical: stack a fresh random tail on the target
        tail = Diagram(t, ())
        assert degree(typecheck_compose(d, tail)) == degree(d)
        # leftmost region is preserved bottom to top
        bottom_left = regions(d.source.strands, d.source.weight)[0]
        top_left = regions(t.strands, t.weight)[0]
        assert bottom_left == top_left


def test_horizontal_degree_additivity_random():
    rng = random.Random(92)
    for _ in range(40):
        right = _random_diagram(rng)
        left_weight = regions(right.source.strands, right.source.weight)[0]
        left = _random_diagram(rng)
        left = Diagram(
            Signature(left.source.strands, left_weight, 0), left.slices
        )
        try:
            validate(left)
        except DiagramTypeError:
            continue  # random slices may be invalid over the new weight
        both = typecheck_compose(left, right, mode="horizontal")
        assert degree(both) == degree(left) + degree(right)


# -- serialization ------------------------------------------------------------------


def test_json_example():
    text = '{"weight":[0,0],"source":["E1"],"shift":0,"slices":[{"kind":"dot","pos":0}]}'
    d = from_json(text)
    assert d.slices == (("dot", 0),)
    assert to_json(d) == text


_FIXTURES = [
    '{"weight":[0,0],"source":["E1"],"shift":0,"slices":[{"kind":"dot","pos":0}]}',
    '{"weight":[1,0],"source":[],"shift":0,"slices":[]}',
    '{"weight":[3,0],"source":[],"shift":0,"slices":[{"kind":"cup","pos":0,"pair":"FE","color":1}]}',
    '{"weight":[0,2],"source":["E2","F2"],"shift":0,"slices":[{"kind":"cap","pos":0,"pair":"EF","color":2}]}',
    '{"weight":[0,0],"source":["E1","E1"],"shift":0,"slices":[{"kind":"cross","pos":0}]}',
    '{"weight":[0,0],"source":["E1","E2"],"shift":-1,"slices":[{"kind":"cross","pos":0}]}',
    '{"weight":[2,0],"source":["E1"],"shift":0,"slices":[{"kind":"cup","pos":1,"pair":"FE","color":1},{"kind":"cap","pos":0,"pair":"EF","color":1}]}',
    '{"weight":[0,0],"source":["E1"],"shift":4,"slices":[{"kind":"cup","pos":0,"pair":"EF","color":1},{"kind":"cap","pos":1,"pair":"FE","color":1}]}',
    '{"weight":[-1,1],"source":["F1"],"shift":0,"slices":[{"kind":"dot","pos":0},{"kind":"dot","pos":0}]}',
    '{"weight":[0,0],"source":["E1","F1"],"shift":0,"slices":[{"kind":"cross","pos":0}]}',
    '{"weight":[1,1],"source":["E1","E2","E1"],"shift":0,"slices":[{"kind":"cross","pos":0},{"kind":"cross","pos":1},{"kind":"cross","pos":0}]}',
    '{"weight":[0,0],"source":[],"shift":0,"slices":[{"kind":"cup","pos":0,"pair":"EF","color":1},{"kind":"dot","pos":0},{"kind":"cap","pos":0,"pair":"EF","color":1}]}',
    '{"weight":[2,-1],"source":["E1","F1"],"shift":0,"slices":[{"kind":"cap","pos":0,"pair":"EF","color":1},{"kind":"cup","pos":0,"pair":"FE","color":1}]}',
    '{"weight":[0,0],"source":["E2"],"shift":0,"slices":[{"kind":"dot","pos":0},{"kind":"cup","pos":0,"pair":"FE","color":2}]}',
    '{"weight":[0,0],"source":["F2","E1"],"shift":0,"slices":[{"kind":"cross","pos":0}]}',
    '{"weight":[1,0],"source":["E1","E1","E1"],"shift":0,"slices":[{"kind":"cross","pos":1},{"kind":"dot","pos":2}]}',
    '{"weight":[0,1],"source":["F2"],"shift":0,"slices":[{"kind":"cup","pos":1,"pair":"FE","color":1}]}',
    '{"weight":[0,0],"source":["E1","F2"],"shift":0,"slices":[{"kind":"cross","pos":0},{"kind":"cross","pos":0}]}',
    '{"weight":[-2,0],"source":[],"shift":0,"slices":[{"kind":"cup","pos":0,"pair":"FE","color":1},{"kind":"cup","pos":2,"pair":"EF","color":2}]}',
    '{"weight":[0,0],"source":["E1","F1","E1"],"shift":0,"slices":[{"kind":"cap","pos":0,"pair":"EF","color":1},{"kind":"dot","pos":0}]}',
]


def test_json_roundtrip_fixtures():
    assert len(_FIXTURES) == 20
    for text in _FIXTURES:
        assert to_json(from_json(text)) == text


def test_json_bad_pos_rejected():
    text = '{"weight":[0,0],"source":["E1"],"shift":0,"slices":[{"kind":"dot","pos":3}]}'
    with pytest.raises(DiagramTypeError):
        from_json(text)


def test_dsl_roundtrip():
    src = "\n".join(
        [
            "# a zigzag with a dot",
            "E1 @ (2,0)",
            "cup 1 FE 1",
            "dot 2",
            "cap 0 EF 1",
        ]
    )
    d = parse_dsl(src)
    assert target(d).strands == ("E1",)
    again = parse_dsl(emit_dsl(d))
    assert again == d


def test_dsl_default_color_and_shift():
    d = parse_dsl("@ (3,0) shift 2\ncup 0 FE\n")
    assert d.source.shift == 2
    assert d.slices == (("cup", 0, "FE", 1),)


def test_dsl_errors_carry_line_numbers():
    with pytest.raises(DiagramTypeError, match="line 2"):
        parse_dsl("E1 @ (0,0)\nwobble 3\n")
    with pytest.raises(DiagramTypeError, match="line 1"):
        parse_dsl("E9 @ (0,0)\n")


def test_svg_smoke():
    d = from_json(_FIXTURES[6])
    svg = to_svg(d)
    assert svg.startswith("<svg")
    assert "#c0392b" in svg  # color 1 strand is red
    d2 = parse_dsl("E2 @ (0,0)\ndot 0\n")
    assert "#2e5fb7" in to_svg(d2)
