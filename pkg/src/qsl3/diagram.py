"""String diagrams as typed slice lists.

A diagram is read bottom-to-top and right-to-left: the source signature is
the bottom boundary, the weight is the RIGHTMOST region, and every slice
transforms the running strand list.  Strand tokens are "E1", "E2" (upward,
colors 1, 2) and "F1", "F2" (downward).  Region weights are computed right
to left: crossing an up-strand of color i adds the root i', a down-strand
subtracts it.  The rightmost region never changes from slice to slice (cups
and caps insert or remove a zero-net-shift pair), so one weight per diagram
suffices.

Slices (pos = leftmost affected strand):

    ("dot", pos)                +2 to the degree
    ("cross", pos)              swaps strands pos, pos+1;
                                degree -i.j for same-orientation strands
                                (same color -2, mixed colors +1), 0 for
                                oppositely oriented (sideways) crossings
    ("cup", pos, pair, color)   inserts the pair at pos, pos+1; pair "FE"
                                means F then E left-to-right; degree
                                1 + nu_i for FE, 1 - nu_i for EF, with nu
                                the region right of the new pair
    ("cap", pos, pair, color)   removes the stated pair; same degree rule
                                with nu read in the source of the slice

Degree shifts ride on signatures: relations are stated at source shift 0,
and a homogeneous diagram of degree d maps shift 0 to shift -d (degree =
source shift minus target shift).

Serialization: a canonical JSON object (see to_json) and a line-oriented
DSL (header `TOKENS @ (l1,l2) [shift t]`, then one slice per line, e.g.
`cup 2 FE 1`), plus an SVG renderer (red = color 1, blue = color 2).
"""

from __future__ import annotations

import json
from typing import Iterable, NamedTuple

from qsl3.algebra import Weight, root_shift

TOKENS = ("E1", "E2", "F1", "F2")


class DiagramTypeError(Exception):
    """A slice failed to typecheck; the message names the slice index."""


class Signature(NamedTuple):
    strands: tuple[str, ...]
    weight: Weight  # rightmost region
    shift: int = 0


class Diagram(NamedTuple):
    source: Signature
    slices: tuple[tuple, ...]


def identity(sig: Signature) -> Diagram:
    return Diagram(sig, ())


def token_color(tok: str) -> int:
    return int(tok[1])


def token_up(tok: str) -> bool:
    return tok[0] == "E"


def token_shift(tok: str) -> Weight:
    r1, r2 = root_shift(token_color(tok))
    return (r1, r2) if token_up(tok) else (-r1, -r2)


def regions(strands: tuple[str, ...], weight: Weight) -> list[Weight]:
    """R[j] = region left of strand j; R[len(strands)] = rightmost = weight."""
    n = len(strands)
    out: list[Weight] = [None] * (n + 1)  # type: ignore[list-item]
    out[n] = tuple(weight)
    for j in range(n - 1, -1, -1):
        s1, s2 = token_shift(strands[j])
        out[j] = (out[j + 1][0] + s1, out[j + 1][1] + s2)
    return out


def _pair_tokens(pair: str, color: int) -> tuple[str, str]:
    if pair == "FE":
        return (f"F{color}", f"E{color}")
    if pair == "EF":
        return (f"E{color}", f"F{color}")
    raise DiagramTypeError(f"pair must be 'FE' or 'EF', got {pair!r}")


def _turn_degree(pair: str, color: int, nu: Weight) -> int:
    nu_i = nu[color - 1]
    return 1 + nu_i if pair == "FE" else 1 - nu_i


def apply_slice(
    strands: tuple[str, ...], weight: Weight, slc: tuple
) -> tuple[tuple[str, ...], int]:
    """Returns (new strand list, slice degree); raises DiagramTypeError."""
    kind = slc[0]
    if kind == "dot":
        (_, pos) = slc
        if not 0 <= pos < len(strands):
            raise DiagramTypeError(f"dot position {pos} out of range")
        return strands, 2
    if kind == "cross":
        (_, pos) = slc
        if not 0 <= pos < len(strands) - 1:
            raise DiagramTypeError(f"cross position {pos} out of range")
        a, b = strands[pos], strands[pos + 1]
        new = strands[:pos] + (b, a) + strands[pos + 2 :]
        if token_up(a) != token_up(b):
            deg = 0  # sideways crossing
        elif token_color(a) == token_color(b):
            deg = -2  # -i.i
        else:
            deg = 1  # -i.j, i != j
        return new, deg
    if kind == "cup":
        (_, pos, pair, color) = slc
        if not 0 <= pos <= len(strands):
            raise DiagramTypeError(f"cup position {pos} out of range")
        toks = _pair_tokens(pair, color)
        if color not in (1, 2):
            raise DiagramTypeError(f"cup color {color} invalid")
        nu = regions(strands, weight)[pos]  # region right of the new pair
        new = strands[:pos] + toks + strands[pos:]
        return new, _turn_degree(pair, color, nu)
    if kind == "cap":
        (_, pos, pair, color) = slc
        if not 0 <= pos < len(strands) - 1:
            raise DiagramTypeError(f"cap position {pos} out of range")
        toks = _pair_tokens(pair, color)
        if (strands[pos], strands[pos + 1]) != toks:
            raise DiagramTypeError(
                f"cap expects {toks} at {pos}, found "
                f"{(strands[pos], strands[pos + 1])}"
            )
        nu = regions(strands, weight)[pos + 2]
        new = strands[:pos] + strands[pos + 2 :]
        return new, _turn_degree(pair, color, nu)
    raise DiagramTypeError(f"unknown slice kind {kind!r}")


def validate(d: Diagram) -> tuple[Signature, int]:
    """Typecheck every slice; returns (target signature, degree)."""
    strands = tuple(d.source.strands)
    weight = tuple(d.source.weight)
    total = 0
    for idx, slc in enumerate(d.slices):
        try:
            strands, deg = apply_slice(strands, weight, slc)
        except DiagramTypeError as err:
            raise DiagramTypeError(f"slice {idx}: {err}") from None
        total += deg
    return Signature(strands, weight, d.source.shift - total), total


def target(d: Diagram) -> Signature:
    return validate(d)[0]


def degree(d: Diagram) -> int:
    return validate(d)[1]


def typecheck_compose(
    a: Diagram, b: Diagram | None = None, mode: str = "vertical"
) -> Diagram:
    """Typecheck a, or compose two typed diagrams.

    vertical:   b stacked on top of a (target of a = source of b).
    horizontal: a placed LEFT of b; a's rightmost region must equal b's
                leftmost region; b's slices run first at offset positions.
    """
    if b is None:
        validate(a)
        return a
    if mode == "vertical":
        tgt = target(a)
        if (tgt.strands, tgt.weight) != (
            tuple(b.source.strands),
            tuple(b.source.weight),
        ) or tgt.shift != b.source.shift:
            raise DiagramTypeError(
                f"vertical mismatch: lower target {tgt}, upper source {b.source}"
            )
        return Diagram(a.source, a.slices + b.slices)
    if mode == "horizontal":
        b_left = regions(b.source.strands, b.source.weight)[0]
        if tuple(a.source.weight) != b_left:
            raise DiagramTypeError(
                f"horizontal junction mismatch: left weight {a.source.weight}, "
                f"right leftmost region {b_left}"
            )
        off = len(a.source.strands)
        shifted = tuple(
            (slc[0], slc[1] + off) + tuple(slc[2:]) for slc in b.slices
        )
        src = Signature(
            tuple(a.source.strands) + tuple(b.source.strands),
            b.source.weight,
            a.source.shift + b.source.shift,
        )
        return Diagram(src, shifted + a.slices)
    raise ValueError(f"mode must be vertical or horizontal, got {mode!r}")


def shifted(d: Diagram, t: int) -> Diagram:
    src = d.source
    return Diagram(Signature(src.strands, src.weight, src.shift + t), d.slices)


# -- JSON -----------------------------------------------------------------------


def to_json(d: Diagram) -> str:
    slices = []
    for slc in d.slices:
        if slc[0] in ("dot", "cross"):
            slices.append({"kind": slc[0], "pos": slc[1]})
        else:
            slices.append(
                {"kind": slc[0], "pos": slc[1], "pair": slc[2], "color": slc[3]}
            )
    obj = {
        "weight": list(d.source.weight),
        "source": list(d.source.strands),
        "shift": d.source.shift,
        "slices": slices,
    }
    return json.dumps(obj, separators=(",", ":"))


def from_json(text: str) -> Diagram:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as err:
        raise DiagramTypeError(f"bad JSON: {err}") from None
    try:
        weight = tuple(int(x) for x in obj["weight"])
        strands = tuple(str(s) for s in obj["source"])
        shift = int(obj.get("shift", 0))
        raw = obj["slices"]
    except (KeyError, TypeError, ValueError) as err:
        raise DiagramTypeError(f"bad diagram object: {err}") from None
    if len(weight) != 2:
        raise DiagramTypeError("weight must be a pair")
    for s in strands:
        if s not in TOKENS:
            raise DiagramTypeError(f"unknown strand token {s!r}")
    slices = []
    for k, s in enumerate(raw):
        kind = s.get("kind")
        if kind in ("dot", "cross"):
            slices.append((kind, int(s["pos"])))
        elif kind in ("cup", "cap"):
            slices.append((kind, int(s["pos"]), str(s["pair"]), int(s["color"])))
        else:
            raise DiagramTypeError(f"slice {k}: unknown kind {kind!r}")
    d = Diagram(Signature(strands, weight, shift), tuple(slices))
    validate(d)
    return d


# -- DSL ------------------------------------------------------------------------


def parse_dsl(text: str) -> Diagram:
    """Header `TOKENS @ (l1,l2) [shift t]`, then one slice per line."""
    header: Signature | None = None
    slices: list[tuple] = []
    for ln, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            header = _parse_header(line, ln)
            continue
        slices.append(_parse_slice_line(line, ln))
    if header is None:
        raise DiagramTypeError("empty input: missing header line")
    d = Diagram(header, tuple(slices))
    validate(d)
    return d


def _parse_header(line: str, ln: int) -> Signature:
    if "@" not in line:
        raise DiagramTypeError(f"line {ln}: header needs `@ (l1,l2)`")
    left, right = line.split("@", 1)
    toks = tuple(left.split())
    for t in toks:
        if t not in TOKENS:
            raise DiagramTypeError(f"line {ln}: unknown token {t!r}")
    right = right.strip()
    shift = 0
    if "shift" in right:
        right, _, tail = right.partition("shift")
        try:
            shift = int(tail.strip())
        except ValueError:
            raise DiagramTypeError(f"line {ln}: bad shift {tail.strip()!r}") from None
    right = right.strip()
    if not (right.startswith("(") and right.endswith(")")):
        raise DiagramTypeError(f"line {ln}: weight must look like (l1,l2)")
    try:
        l1, l2 = (int(x) for x in right[1:-1].split(","))
    except ValueError:
        raise DiagramTypeError(f"line {ln}: bad weight {right!r}") from None
    return Signature(toks, (l1, l2), shift)


def _parse_slice_line(line: str, ln: int) -> tuple:
    parts = line.split()
    kind = parts[0]
    try:
        if kind in ("dot", "cross") and len(parts) == 2:
            return (kind, int(parts[1]))
        if kind in ("cup", "cap") and len(parts) in (3, 4):
            pos = int(parts[1])
            pair = parts[2]
            color = int(parts[3]) if len(parts) == 4 else 1
            if pair not in ("FE", "EF"):
                raise ValueError
            return (kind, pos, pair, color)
    except ValueError:
        pass
    raise DiagramTypeError(f"line {ln}: cannot parse slice {line!r}")


def emit_dsl(d: Diagram) -> str:
    head = " ".join(d.source.strands)
    head = (head + " " if head else "") + (
        f"@ ({d.source.weight[0]},{d.source.weight[1]})"
    )
    if d.source.shift:
        head += f" shift {d.source.shift}"
    lines = [head]
    for slc in d.slices:
        if slc[0] in ("dot", "cross"):
            lines.append(f"{slc[0]} {slc[1]}")
        else:
            lines.append(f"{slc[0]} {slc[1]} {slc[2]} {slc[3]}")
    return "\n".join(lines) + "\n"


# -- SVG ------------------------------------------------------------------------

_COLORS = {1: "#c0392b", 2: "#2e5fb7"}  # red = color 1, blue = color 2
_UNIT = 36  # pixels per strand column and per slice level


def to_svg(d: Diagram) -> str:
    """Render slices bottom-to-top, one vertical unit per slice."""
    tgt, deg = validate(d)
    levels = [tuple(d.source.strands)]
    strands = tuple(d.source.strands)
    for slc in d.slices:
        strands, _ = apply_slice(strands, d.source.weight, slc)
        levels.append(strands)
    width = max([len(lv) for lv in levels] + [1])
    h = max(len(d.slices), 1)
    W, H = (width + 1) * _UNIT, (h + 1) * _UNIT

    def x(col: int) -> float:
        return (col + 1) * _UNIT

    def yy(level: float) -> float:
        # level 0 = bottom boundary; svg y grows downward
        return H - _UNIT / 2 - level * _UNIT

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
    ]
    for k, slc in enumerate(d.slices or ()):
        lo, hi = levels[k], levels[k + 1]
        y0, y1 = yy(k), yy(k + 1)
        parts.extend(_svg_slice(lo, slc, x, y0, y1))
    if not d.slices:
        for j, tok in enumerate(levels[0]):
            parts.append(_svg_line(x(j), yy(0), x(j), yy(1), tok))
    # orientation arrowheads on the top boundary
    top = levels[-1]
    ytop = yy(len(d.slices) if d.slices else 1)
    for j, tok in enumerate(top):
        c = _COLORS[token_color(tok)]
        dy = -6 if token_up(tok) else 6
        parts.append(
            f'<path d="M {x(j)-4},{ytop - dy} L {x(j)},{ytop} L {x(j)+4},{ytop - dy}" '
            f'fill="none" stroke="{c}" stroke-width="2"/>'
        )
    parts.append(
        f'<text x="{W - 4}" y="{H - 6}" text-anchor="end" font-size="11" '
        f'fill="#555">({d.source.weight[0]},{d.source.weight[1]}) '
        f"deg {deg} shift {d.source.shift}</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts)


def _svg_line(x0: float, y0: float, x1: float, y1: float, tok: str) -> str:
    c = _COLORS[token_color(tok)]
    return (
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" '
        f'stroke="{c}" stroke-width="2"/>'
    )


def _svg_slice(lo: tuple[str, ...], slc: tuple, x, y0: float, y1: float) -> list[str]:
    kind, pos = slc[0], slc[1]
    out: list[str] = []
    # position maps for pass-through strands
    if kind == "dot":
        for j, tok in enumerate(lo):
            out.append(_svg_line(x(j), y0, x(j), y1, tok))
        ym = (y0 + y1) / 2
        out.append(f'<circle cx="{x(pos)}" cy="{ym}" r="4" fill="black"/>')
    elif kind == "cross":
        for j, tok in enumerate(lo):
            if j == pos:
                out.append(_svg_line(x(j), y0, x(j + 1), y1, tok))
            elif j == pos + 1:
                out.append(_svg_line(x(j), y0, x(j - 1), y1, tok))
            else:
                out.append(_svg_line(x(j), y0, x(j), y1, tok))
    elif kind == "cup":
        pair, color = slc[2], slc[3]
        toks = _pair_tokens(pair, color)
        for j, tok in enumerate(lo):
            jj = j if j < pos else j + 2
            out.append(_svg_line(x(j), y0, x(jj), y1, tok))
        c = _COLORS[color]
        out.append(
            f'<path d="M {x(pos)},{y1} Q {(x(pos)+x(pos+1))/2},{y0 + 2} '
            f'{x(pos+1)},{y1}" fill="none" stroke="{c}" stroke-width="2"/>'
        )
        del toks
    elif kind == "cap":
        pair, color = slc[2], slc[3]
        for j, tok in enumerate(lo):
            if j in (pos, pos + 1):
                continue
            jj = j if j < pos else j - 2
            out.append(_svg_line(x(j), y0, x(jj), y1, tok))
        c = _COLORS[color]
        out.append(
            f'<path d="M {x(pos)},{y0} Q {(x(pos)+x(pos+1))/2},{y1 - 2} '
            f'{x(pos+1)},{y0}" fill="none" stroke="{c}" stroke-width="2"/>'
        )
    return out
