"""Reduction of string-diagram 2-morphisms to the spanning basis.

``reduce_to_basis`` rewrites an integer combination of diagrams (all over one
source signature) into the spanning basis:

* every pair of strand components crosses at most once, no component crosses
  itself, and crossing words are drawn in a fixed canonical order,
* dots sit at the start of their strand (the arrow tail: bottom end of an
  upward strand, top end of a downward one),
* turnbacks occur only as caps between source points and cups between target
  points, drawn innermost first, and
* closed components are dotted circles collected in the rightmost region and
  recorded as normalized bubbles ``(color, label)``.

Conventions
-----------
Normalized bubbles in a region of weight w: a counterclockwise bubble (an
EF-circle) of color c with k raw dots has label m = k - w_c + 1; a clockwise
(FE) one has label m = k + w_c + 1.  Both have degree 2m.  Bubbles with
m < 0 vanish, m = 0 is the identity, and a circle whose raw dot count would
be negative ("fake") is defined by the recursion

    X<m> = - sum_{a=1..m} Y<a> * X<m-a>     (Y the opposite orientation),

which is exactly what makes sum_{a+b=n} cw<a> ccw<b> = delta_{n,0} hold.  In
a region of weight w only the orientation that is real for every positive
label is stored: counterclockwise when w_c >= 0, clockwise otherwise.

Local moves (each homogeneous; signs fixed here once and for all):

* nilHecke: equal-color double crossings of parallel strands vanish; a dot
  slides through such a crossing at the cost of +/- an identity term
  (chi . x_1 = x_2' . chi + id  and  chi . x_2 = x_1' . chi - id).
* mixed colors: parallel double crossing = dot-on-left + dot-on-right;
  opposite orientations cross freely (double crossing = id); dots slide
  freely.
* equal-color sideways double crossings resolve by the EF/FE expansion: for
  an [E, F] pair at region nu,

      chi'chi = -id + sum_{f1+f2+f3 = nu_i - 1} (f3 dots, cap)
                (cw bubble f2) (cup, f1 dots),

  and for an [F, E] pair the mirror with bound -nu_i - 1 and a ccw bubble.
* braid moves are free except outer-equal colorings (i, j, i), where
  [p, p+1, p] = [p+1, p, p+1] + id on the three strands.
* curls evaluate to dotted bubbles (see _Engine._eval_kink); bubbles slide
  through strands by closed rules with generating factors (1 - x t)^{-2} and
  its inverse for equal colors, (1 + x t)^{+/-1} for mixed colors; cup-cap
  zigzags contract; crossings and dots slide around turns freely
  (cyclicity).

The reducer is a worklist over states (coefficient, slices, bubble bag).
Every move either strictly lowers a measure (crossings, stray circles, dot
displacement, turns) or is one of finitely many free normalizations, so
reduction terminates; a step budget (QSL3_STEP_BUDGET, default 100000)
guards the loop and raises StepBudgetExceeded when exhausted.
"""

from __future__ import annotations

import os
from typing import NamedTuple

from qsl3.algebra import root_shift
from qsl3.diagram import (
    Diagram,
    Signature,
    apply_slice,
    regions,
    token_color,
    token_up,
    validate,
)

DEFAULT_STEP_BUDGET = 100_000

RULE_IDS = (
    "NH-double-cross",
    "NH-dot-slide",
    "NH-braid",
    "bubble-negative",
    "bubble-zero",
    "curl-right",
    "curl-left",
    "EF-double-cross-+",
    "EF-double-cross--",
    "mixed-dot-slide",
    "mixed-double-opposite",
    "mixed-double-same",
    "braid-iji",
    "braid-distinct",
    "adjunction-zigzag",
    "cyclicity-move",
)


class StepBudgetExceeded(Exception):
    """The reduction worklist exhausted its step budget."""


class ReductionError(Exception):
    """Internal invariant failure inside the rewrite engine (a bug)."""


def _budget(explicit: int | None) -> int:
    if explicit is not None:
        return explicit
    env = os.environ.get("QSL3_STEP_BUDGET")
    return int(env) if env else DEFAULT_STEP_BUDGET


def _pair_tokens(pair: str, color: int) -> tuple[str, str]:
    if pair == "FE":
        return f"F{color}", f"E{color}"
    return f"E{color}", f"F{color}"


# -- bubbles -------------------------------------------------------------------


class BubbleValue(NamedTuple):
    """Evaluation of one closed circle: an integer sum of bubble monomials.

    ``terms`` maps sorted tuples of normalized (color, label) bubbles -- the
    empty tuple meaning the identity -- to integer coefficients.  A circle
    that vanishes has no terms at all.
    """

    terms: dict


def canonical_orientation(color: int, region) -> str:
    """The orientation whose raw dot count is >= 0 for every label here."""
    return "ccw" if region[color - 1] >= 0 else "cw"


def bubble_label(orientation: str, color: int, dots: int, region) -> int:
    w = region[color - 1]
    return dots - w + 1 if orientation == "ccw" else dots + w + 1


def bubble_raw_dots(orientation: str, color: int, label: int, region) -> int:
    w = region[color - 1]
    return label + w - 1 if orientation == "ccw" else label - w - 1


_OPP_EXPANSION: dict[int, dict[tuple[int, ...], int]] = {0: {(): 1}}


def _opposite_expansion(m: int) -> dict[tuple[int, ...], int]:
    """X<m> as a polynomial in opposite-orientation labels Y<a>.

    X<m> = - sum_{a=1..m} Y<a> X<m-a> with X<0> = 1; the result maps sorted
    label tuples to integers, e.g. m = 2 -> {(2,): -1, (1, 1): 1}.
    """
    if m not in _OPP_EXPANSION:
        acc: dict[tuple[int, ...], int] = {}
        for a in range(1, m + 1):
            for labels, coeff in _opposite_expansion(m - a).items():
                key = tuple(sorted(labels + (a,)))
                acc[key] = acc.get(key, 0) - coeff
                if acc[key] == 0:
                    del acc[key]
        _OPP_EXPANSION[m] = acc
    return _OPP_EXPANSION[m]


def bubble_eval(color: int, orientation: str, dots: int, region) -> BubbleValue:
    """Evaluate a plain circle with ``dots`` raw dots sitting in ``region``.

    Returns zero for negative labels, the identity for label 0, the bubble
    itself when real and canonically oriented, and otherwise its expansion
    into canonically oriented real bubbles.
    """
    if orientation not in ("ccw", "cw"):
        raise ValueError(f"orientation must be 'ccw' or 'cw', got {orientation!r}")
    region = tuple(region)
    label = bubble_label(orientation, color, dots, region)
    if label < 0:
        return BubbleValue({})
    if label == 0:
        return BubbleValue({(): 1})
    if orientation == canonical_orientation(color, region):
        if dots < 0:
            # a fake canonically oriented bubble would have label <= 0
            raise ReductionError("fake bubble in canonical orientation")
        return BubbleValue({((color, label),): 1})
    terms: dict = {}
    for labels, coeff in _opposite_expansion(label).items():
        terms[tuple(sorted((color, a) for a in labels))] = coeff
    return BubbleValue(terms)


def _circle_slices(pos: int, color: int, orientation: str, raw: int) -> tuple:
    """One real circle (cup, raw dots on the E-leg, cap) at column pos."""
    if raw < 0:
        raise ReductionError("cannot draw a circle with negative dots")
    pair = "EF" if orientation == "ccw" else "FE"
    dot_col = pos if orientation == "ccw" else pos + 1
    return (
        (("cup", pos, pair, color),)
        + (("dot", dot_col),) * raw
        + (("cap", pos, pair, color),)
    )


def _bubble_insertion(pos: int, color: int, orientation: str, label: int, region):
    """Realize a normalized bubble as circle slices at ``pos``; may branch.

    Returns a list of (slices, coefficient); a fake bubble expands first,
    label 0 contributes the empty slice tuple, negative labels nothing.
    """
    raw = bubble_raw_dots(orientation, color, label, region)
    if label > 0 and raw >= 0:
        return [(_circle_slices(pos, color, orientation, raw), 1)]
    out = []
    for bubbles, coeff in bubble_eval(color, orientation, raw, region).terms.items():
        slices: tuple = ()
        for c, lab in bubbles:
            orient = canonical_orientation(c, region)
            slices += _circle_slices(
                pos, c, orient, bubble_raw_dots(orient, c, lab, region)
            )
        out.append((slices, coeff))
    return out


def _slide_terms(circ_color: int, orientation: str, raw: int, strand_token: str, nu):
    """Closed bubble-slide rules: a circle just left of a strand moves right.

    ``nu`` is the region right of the strand.  Returns (dots-on-strand,
    coefficient, new label at nu) triples; the circle keeps its orientation.
    In generating-function form the label series transforms by
    (1 - x t)^{-2} or (1 - x t)^2 for equal colors and (1 + x t)^{+/-1} for
    mixed ones, x being a dot on the strand.
    """
    up = token_up(strand_token)
    i = token_color(strand_token)
    shift = root_shift(i)[circ_color - 1]
    mu_c = nu[circ_color - 1] + (shift if up else -shift)
    m = raw - mu_c + 1 if orientation == "ccw" else raw + mu_c + 1
    out: list[tuple[int, int, int]] = []
    if circ_color == i:
        if (orientation == "ccw") == up:  # (1 - x t)^{-2}
            for t in range(0, m + 1):
                out.append((t, t + 1, m - t))
        else:  # (1 - x t)^2
            for t, coeff in ((0, 1), (1, -2), (2, 1)):
                if m - t >= 0:
                    out.append((t, coeff, m - t))
    else:
        if (orientation == "ccw") == up:  # (1 + x t)
            for t, coeff in ((0, 1), (1, 1)):
                if m - t >= 0:
                    out.append((t, coeff, m - t))
        else:  # (1 + x t)^{-1}
            for t in range(0, m + 1):
                out.append((t, (-1) ** t, m - t))
    return out


# -- arrow reversal and half-turn rotation ---------------------------------------


def _flip_token(tok: str) -> str:
    return ("F" if tok[0] == "E" else "E") + tok[1]


def omega(d: Diagram) -> Diagram:
    """Reverse every arrow and negate all weights (degree preserving)."""
    src = d.source
    tokens = tuple(_flip_token(t) for t in src.strands)
    weight = (-src.weight[0], -src.weight[1])
    slices = []
    for slc in d.slices:
        if slc[0] in ("cup", "cap"):
            slices.append((slc[0], slc[1], "EF" if slc[2] == "FE" else "FE", slc[3]))
        else:
            slices.append(slc)
    out = Diagram(Signature(tokens, weight, src.shift), tuple(slices))
    validate(out)
    return out


def rotate180(d: Diagram) -> Diagram:
    """Rotate the diagram by a half turn: source and target trade places.

    The rotated source reads the old target backwards with arrows reversed,
    cups and caps trade roles, and the old leftmost region becomes the new
    rightmost one.  The new source carries the old target shift, so rotation
    preserves the degree.
    """
    tgt, deg = validate(d)
    levels = [tuple(d.source.strands)]
    strands = tuple(d.source.strands)
    for slc in d.slices:
        strands, _ = apply_slice(strands, d.source.weight, slc)
        levels.append(strands)
    new_weight = regions(d.source.strands, d.source.weight)[0]
    new_src = tuple(_flip_token(t) for t in reversed(tgt.strands))
    new_slices = []
    for k in range(len(d.slices) - 1, -1, -1):
        slc = d.slices[k]
        lo, hi = levels[k], levels[k + 1]
        kind = slc[0]
        if kind == "dot":
            new_slices.append(("dot", len(lo) - 1 - slc[1]))
        elif kind == "cross":
            new_slices.append(("cross", len(lo) - 2 - slc[1]))
        elif kind == "cup":  # becomes a cap; its legs sit in hi
            new_slices.append(("cap", len(hi) - 2 - slc[1], slc[2], slc[3]))
        else:  # a cap becomes a cup; its legs sat in lo
            new_slices.append(("cup", len(lo) - 2 - slc[1], slc[2], slc[3]))
    source = Signature(new_src, new_weight, tgt.shift)
    out = Diagram(source, _refresh_caps(new_src, new_weight, tuple(new_slices)))
    _, deg2 = validate(out)
    if deg2 != deg:
        raise ReductionError("rotation changed the degree")
    return out


# -- strand geometry --------------------------------------------------------------


class _Geo:
    """Strand-level bookkeeping for one slice list.

    Segment ids are allocated at the source and at cups; components join
    segments through cups and caps.  ``levels[k]`` lists segment ids just
    below slice k (``levels[0]`` is the source, ``levels[-1]`` the target).
    """

    def __init__(self, src_tokens, weight, slices):
        self.weight = tuple(weight)
        self.slices = tuple(slices)
        self.tokens: dict[int, str] = {}
        self.birth: dict[int, tuple] = {}
        self.death: dict[int, tuple] = {}
        self.partner_cup: dict[int, int] = {}
        self.partner_cap: dict[int, int] = {}
        self.cross_events: list[tuple[int, int, int]] = []
        self.dot_events: list[tuple[int, int]] = []
        ids = list(range(len(src_tokens)))
        for k, t in enumerate(src_tokens):
            self.tokens[k] = t
            self.birth[k] = ("src", k)
        self._next = len(src_tokens)
        self.levels: list[tuple[int, ...]] = [tuple(ids)]
        for k, slc in enumerate(slices):
            kind = slc[0]
            if kind == "dot":
                self.dot_events.append((k, ids[slc[1]]))
            elif kind == "cross":
                p = slc[1]
                self.cross_events.append((k, ids[p], ids[p + 1]))
                ids[p], ids[p + 1] = ids[p + 1], ids[p]
            elif kind == "cup":
                p = slc[1]
                ta, tb = _pair_tokens(slc[2], slc[3])
                a, b = self._next, self._next + 1
                self._next += 2
                self.tokens[a], self.tokens[b] = ta, tb
                self.birth[a] = ("cup", k, 0)
                self.birth[b] = ("cup", k, 1)
                self.partner_cup[a] = b
                self.partner_cup[b] = a
                ids[p:p] = [a, b]
            else:
                p = slc[1]
                a, b = ids[p], ids[p + 1]
                self.death[a] = ("cap", k, 0)
                self.death[b] = ("cap", k, 1)
                self.partner_cap[a] = b
                self.partner_cap[b] = a
                del ids[p : p + 2]
            self.levels.append(tuple(ids))
        for j, sid in enumerate(ids):
            self.death[sid] = ("tgt", j)
        self._parent = {sid: sid for sid in self.tokens}
        for a, b in self.partner_cup.items():
            self._union(a, b)
        for a, b in self.partner_cap.items():
            self._union(a, b)

    def _find(self, a: int) -> int:
        while self._parent[a] != a:
            self._parent[a] = self._parent[self._parent[a]]
            a = self._parent[a]
        return a

    def _union(self, a: int, b: int) -> None:
        ra, rb = self._find(a), self._find(b)
        if ra != rb:
            self._parent[max(ra, rb)] = min(ra, rb)

    def comp(self, sid: int) -> int:
        return self._find(sid)

    def col(self, level: int, sid: int) -> int:
        return self.levels[level].index(sid)

    def components(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for sid in self.tokens:
            out.setdefault(self.comp(sid), []).append(sid)
        return out

    def is_closed(self, rep: int) -> bool:
        for sid in self.components()[rep]:
            if self.birth[sid][0] == "src" or self.death[sid][0] == "tgt":
                return False
        return True

    def flow_start(self, rep: int) -> tuple[int, str]:
        """(segment, end) where the component's arrow begins.

        Up segments flow birth -> death and down segments death -> birth, so
        the start is an up segment born at the source or a down segment
        dying at the target.
        """
        for sid in self.components()[rep]:
            up = token_up(self.tokens[sid])
            if up and self.birth[sid][0] == "src":
                return sid, "birth"
            if not up and self.death[sid][0] == "tgt":
                return sid, "death"
        raise ReductionError("component has no flow start")

    def segment_events(self, sid: int) -> list[tuple]:
        evs: list[tuple] = [("dot", k, sid) for k, s in self.dot_events if s == sid]
        evs += [
            ("cross", k, sid, (b if a == sid else a))
            for k, a, b in self.cross_events
            if sid in (a, b)
        ]
        evs.sort(key=lambda e: e[1])
        return evs

    def flow_path(self, rep: int) -> list[tuple]:
        """Events along the component in flow order.

        Entries are ("dot", k, sid), ("cross", k, sid, other) and
        ("turn", k, "cup" or "cap").  Closed components start at their
        lowest-id up segment.
        """
        if self.is_closed(rep):
            start = min(s for s in self.components()[rep] if token_up(self.tokens[s]))
        else:
            start, _ = self.flow_start(rep)
        path: list[tuple] = []
        sid, seen = start, set()
        while sid not in seen:
            seen.add(sid)
            evs = self.segment_events(sid)
            up = token_up(self.tokens[sid])
            path.extend(evs if up else reversed(evs))
            nxt = self.death[sid] if up else self.birth[sid]
            if nxt[0] == "cap":
                path.append(("turn", nxt[1], "cap"))
                sid = self.partner_cap[sid]
            elif nxt[0] == "cup":
                path.append(("turn", nxt[1], "cup"))
                sid = self.partner_cup[sid]
            else:
                break
        return path


# -- free slice commutations --------------------------------------------------------


def _try_swap(a: tuple, b: tuple):
    """Swap adjacent slices a-then-b into (b', a') when they commute.

    Only honest commutations of slices touching disjoint columns; genuine
    relations (dots through crossings, zigzags, pitchforks) are rewrites,
    not swaps.  Returns None when the pair does not commute freely.
    """
    ka, pa = a[0], a[1]
    kb, pb = b[0], b[1]
    if ka == "dot":
        if kb == "dot":
            return b, a
        if kb == "cross":
            return (b, a) if pb not in (pa, pa - 1) else None
        if kb == "cup":
            return b, ("dot", pa + 2 if pa >= pb else pa)
        if kb == "cap":
            if pa in (pb, pb + 1):
                return None
            return b, ("dot", pa - 2 if pa > pb + 1 else pa)
    if ka == "cross":
        if kb == "dot":
            return (b, a) if pb not in (pa, pa + 1) else None
        if kb == "cross":
            return (b, a) if abs(pb - pa) >= 2 else None
        if kb == "cup":
            if pb <= pa:
                return b, ("cross", pa + 2)
            if pb > pa + 1:
                return ("cup", pb - 2) + b[2:], a
            return None
        if kb == "cap":
            if pb + 1 < pa:
                return b, ("cross", pa - 2)
            if pb > pa + 1:
                return ("cap", pb - 2) + b[2:], a
            return None
    if ka == "cup":
        if kb == "dot":
            if pb in (pa, pa + 1):
                return None
            return ("dot", pb - 2 if pb > pa + 1 else pb), a
        if kb == "cross":
            if pb + 1 < pa:
                return b, ("cup", pa - 2) + a[2:]
            if pb > pa + 1:
                return ("cross", pb - 2), a
            return None
        if kb == "cup":
            if pb <= pa:
                return b, ("cup", pa + 2) + a[2:]
            if pb > pa + 1:
                return ("cup", pb - 2) + b[2:], a
            return None
        if kb == "cap":
            if pb + 1 < pa:
                return b, ("cup", pa - 2) + a[2:]
            if pb > pa + 1:
                return ("cap", pb - 2) + b[2:], a
            return None
    if ka == "cap":
        if kb == "dot":
            return ("dot", pb + 2 if pb >= pa else pb), a
        if kb == "cross":
            if pb >= pa:
                return ("cross", pb + 2), a
            if pb + 1 < pa:
                return b, ("cap", pa - 2) + a[2:]
            return None
        if kb == "cup":
            if pb < pa:
                return b, ("cap", pa + 2) + a[2:]
            return ("cup", pb + 2) + b[2:], a
        if kb == "cap":
            if pb >= pa:
                return ("cap", pb + 2) + b[2:], a
            if pb + 1 < pa:
                return b, ("cap", pa - 2) + a[2:]
            return None
    return None


def _sink_to(slices: list, k: int, dest: int) -> int:
    """Commute slice k downward toward dest; returns the final index."""
    while k > dest:
        swapped = _try_swap(slices[k - 1], slices[k])
        if swapped is None:
            return k
        slices[k - 1], slices[k] = swapped
        k -= 1
    return k


def _lift_to(slices: list, k: int, dest: int) -> int:
    """Commute slice k upward toward dest; returns the final index."""
    while k < dest:
        swapped = _try_swap(slices[k], slices[k + 1])
        if swapped is None:
            return k
        slices[k], slices[k + 1] = swapped
        k += 1
    return k


def _refresh_caps(src_tokens, weight, slices) -> tuple:
    """Recompute cap pair/color fields from context and typecheck."""
    strands = tuple(src_tokens)
    out = []
    for slc in slices:
        if slc[0] == "cap":
            p = slc[1]
            a, b = strands[p], strands[p + 1]
            if token_color(a) != token_color(b) or token_up(a) == token_up(b):
                raise ReductionError(f"cap over invalid pair {(a, b)}")
            slc = ("cap", p, "EF" if token_up(a) else "FE", token_color(a))
        out.append(slc)
        strands, _ = apply_slice(strands, weight, slc)
    return tuple(out)


def _frame(src_tokens, weight, slices, k) -> tuple[str, ...]:
    """Strand tokens just below slice k."""
    strands = tuple(src_tokens)
    for slc in slices[:k]:
        strands, _ = apply_slice(strands, weight, slc)
    return strands


# -- the reduction engine --------------------------------------------------------------


class _State(NamedTuple):
    coeff: int
    slices: tuple
    bag: tuple  # sorted tuple of (color, label) bubbles


def _merge_bag(bag: tuple, extra) -> tuple:
    return tuple(sorted(bag + tuple(extra)))


class _Engine:
    def __init__(self, source: Signature, target_tokens, *, rng=None, budget=None,
                 trace_log=None):
        self.src = tuple(source.strands)
        self.weight = tuple(source.weight)
        self.source = Signature(self.src, self.weight, source.shift)
        self.tgt = tuple(target_tokens)
        self.rng = rng
        self.budget = _budget(budget)
        self.steps = 0
        self.trace_log = trace_log

    def _log(self, rule: str, where) -> None:
        if self.trace_log is not None:
            self.trace_log.append(f"{rule} @ {where}")

    def _tick(self) -> None:
        self.steps += 1
        if self.steps > self.budget:
            raise StepBudgetExceeded(
                f"reduction exceeded {self.budget} steps "
                "(raise QSL3_STEP_BUDGET to allow more)"
            )

    def _mk(self, coeff: int, slices, bag) -> _State:
        return _State(coeff, _refresh_caps(self.src, self.weight, slices), bag)

    # -- main loop ----------------------------------------------------------------

    def run(self, states) -> dict[Diagram, int]:
        work = list(states)
        out: dict[Diagram, int] = {}
        while work:
            if self.rng is not None and len(work) > 1:
                idx = self.rng.randrange(len(work))
                work[idx], work[-1] = work[-1], work[idx]
            st = work.pop()
            if st.coeff == 0:
                continue
            self._tick()
            step = self._step(st)
            if step is None:
                for key, coeff in self._extract(st, work):
                    out[key] = out.get(key, 0) + coeff
                    if out[key] == 0:
                        del out[key]
            else:
                work.extend(step)
        return out

    def _step(self, st: _State):
        geo = _Geo(self.src, self.weight, st.slices)
        for finder in (
            self._find_zigzag,
            self._find_dot,
            self._find_circle,
            self._find_kink,
            self._find_double,
        ):
            sites = finder(st, geo)
            if self.rng is not None and len(sites) > 1:
                self.rng.shuffle(sites)
            for site in sites:
                res = site()
                if res is not None:
                    return res
        return None

    # -- zigzags ------------------------------------------------------------------

    def _find_zigzag(self, st: _State, geo: _Geo):
        sites = []
        for sid, death in geo.death.items():
            if death[0] != "cap" or geo.birth[sid][0] != "cup":
                continue
            if geo.partner_cup[sid] == geo.partner_cap[sid]:
                continue  # a closed circle, not a zigzag
            sites.append(
                lambda leg=sid: self._apply_zigzag(st, geo, leg)
            )
        return sites

    def _apply_zigzag(self, st: _State, geo: _Geo, leg: int):
        """Contract the wiggle around ``leg`` (born at a cup, dying at a cap).

        Crossings on the leg first slide off around a turn and its dots ride
        around the apex nearer their strand start; the bare cup-cap pair then
        cancels once brought adjacent.
        """
        crossings = [e for e in geo.segment_events(leg) if e[0] == "cross"]
        if crossings:
            return self._slide_cross_off_leg(st, geo, crossings[-1][1], leg)
        cup_idx, cap_idx = geo.birth[leg][1], geo.death[leg][1]
        dot_idxs = sorted(k for k, s in geo.dot_events if s == leg)
        if dot_idxs:
            if token_up(geo.tokens[leg]):
                blocker = ("turn", cup_idx, "cup")
                dot_idx = dot_idxs[0]
            else:
                blocker = ("turn", cap_idx, "cap")
                dot_idx = dot_idxs[-1]
            return self._dot_around_turn(st, dot_idx, blocker)
        slices = list(st.slices)
        k = _sink_to(slices, cap_idx, cup_idx + 1)
        if k == cup_idx + 1:
            at = cup_idx
        else:
            slices = list(st.slices)
            at = _lift_to(slices, cup_idx, cap_idx - 1)
            if at != cap_idx - 1:
                return None
        cup, cap = slices[at], slices[at + 1]
        if cap[0] != "cap" or abs(cup[1] - cap[1]) != 1:
            return None  # a twist, not a zigzag wiggle
        del slices[at : at + 2]
        self._log("adjunction-zigzag", at)
        return [self._mk(st.coeff, tuple(slices), st.bag)]

    def _slide_cross_off_leg(self, st: _State, geo: _Geo, cross_idx: int, leg: int,
                             window=None):
        """Pitchfork the crossing at cross_idx off ``leg`` around one of its
        turns; prefers a turn inside ``window`` (a slice index pair)."""
        turns = []
        if geo.death[leg][0] == "cap":
            turns.append(("cap", geo.death[leg][1]))
        if geo.birth[leg][0] == "cup":
            turns.append(("cup", geo.birth[leg][1]))
        if window is not None:
            turns.sort(key=lambda t: not (window[0] < t[1] < window[1]))
        for kind, turn_idx in turns:
            slices = list(st.slices)
            if kind == "cap":
                k = _sink_to(slices, turn_idx, cross_idx + 1)
                if k != cross_idx + 1:
                    continue
                res = self._pitchfork_at(st, slices, cross_idx)
            else:
                k = _lift_to(slices, turn_idx, cross_idx - 1)
                if k != cross_idx - 1:
                    continue
                res = self._pitchfork_at(st, slices, k)
            if res is not None:
                return res
        return None

    def _pitchfork_at(self, st: _State, slices: list, k: int):
        """Slide a crossing around the adjacent turn at slices k, k+1.

        Patterns (columns):  [cross@c+1, cap@c] <-> [cross@c, cap@c+1],
        [cross@c-1, cap@c] <-> [cross@c, cap@c-1], and the cup mirrors; the
        crossing trades one turn leg for the other.  Twists ([cross@c,
        cap@c] or [cup@c, cross@c]) are kinks, not pitchforks: None.
        """
        a, b = slices[k], slices[k + 1]
        if a[0] == "cross" and b[0] == "cap":
            c = b[1]
            if a[1] == c + 1:
                new = [("cross", c), ("cap", c + 1) + b[2:]]
            elif a[1] == c - 1:
                new = [("cross", c), ("cap", c - 1) + b[2:]]
            else:
                return None
        elif a[0] == "cup" and b[0] == "cross":
            c = a[1]
            if b[1] == c + 1:
                new = [("cup", c + 1) + a[2:], ("cross", c)]
            elif b[1] == c - 1:
                new = [("cup", c - 1) + a[2:], ("cross", c)]
            else:
                return None
        else:
            return None
        out = list(slices)
        out[k : k + 2] = new
        self._log("cyclicity-move", k)
        return [self._mk(st.coeff, tuple(out), st.bag)]

    # -- dots ---------------------------------------------------------------------

    def _find_dot(self, st: _State, geo: _Geo):
        sites = []
        for rep in geo.components():
            blocker = None
            for ev in geo.flow_path(rep):
                if ev[0] in ("cross", "turn"):
                    blocker = ev
                elif ev[0] == "dot" and blocker is not None:
                    sites.append(
                        lambda ev=ev, blocker=blocker: self._apply_dot(
                            st, geo, ev, blocker
                        )
                    )
                    break
        return sites

    def _apply_dot(self, st: _State, geo: _Geo, dot_ev, blocker):
        dot_idx, sid = dot_ev[1], dot_ev[2]
        if blocker[0] == "turn":
            return self._dot_around_turn(st, dot_idx, blocker)
        slices = list(st.slices)
        cross_idx = blocker[1]
        if token_up(geo.tokens[sid]):
            k = _sink_to(slices, dot_idx, cross_idx + 1)
            if k != cross_idx + 1:
                raise ReductionError("dot blocked sinking to its crossing")
            return self._dot_through_cross(st, slices, cross_idx, dot_above=True)
        k = _lift_to(slices, dot_idx, cross_idx - 1)
        if k != cross_idx - 1:
            raise ReductionError("dot blocked lifting to its crossing")
        return self._dot_through_cross(st, slices, cross_idx, dot_above=False)

    def _dot_around_turn(self, st: _State, dot_idx: int, blocker):
        """Carry a dot around a cup or cap apex (free by cyclicity)."""
        slices = list(st.slices)
        turn_idx, kind = blocker[1], blocker[2]
        if kind == "cap":
            k = _lift_to(slices, dot_idx, turn_idx - 1)
            if k != turn_idx - 1:
                raise ReductionError("dot blocked reaching its cap")
            apex = slices[turn_idx]
        else:
            k = _sink_to(slices, dot_idx, turn_idx + 1)
            if k != turn_idx + 1:
                raise ReductionError("dot blocked reaching its cup")
            apex = slices[turn_idx]
        slices[k] = ("dot", 2 * apex[1] + 1 - slices[k][1])
        self._log("cyclicity-move", turn_idx)
        return [self._mk(st.coeff, tuple(slices), st.bag)]

    def _dot_through_cross(self, st: _State, slices: list, cross_idx: int,
                           dot_above: bool):
        """Move a dot through the crossing toward its strand's start.

        Mixed colors are free.  Equal colors with parallel strands follow
        the nilHecke signs; sideways crossings follow the same pattern with
        the identity correction replaced by a cap-cup turnback.
        """
        cross = slices[cross_idx]
        p = cross[1]
        dot_idx = cross_idx + 1 if dot_above else cross_idx - 1
        dot = slices[dot_idx]
        if dot[0] != "dot" or dot[1] not in (p, p + 1):
            raise ReductionError("dot-through-cross misaligned")
        frame = _frame(self.src, self.weight, slices, cross_idx)
        ta, tb = frame[p], frame[p + 1]
        same = token_color(ta) == token_color(tb)
        parallel = token_up(ta) == token_up(tb)
        other_col = p if dot[1] == p + 1 else p + 1
        main = list(slices)
        if dot_above:
            main[cross_idx : cross_idx + 2] = [("dot", other_col), cross]
        else:
            main[cross_idx - 1 : cross_idx + 1] = [cross, ("dot", other_col)]
        out = [self._mk(st.coeff, tuple(main), st.bag)]
        if not same:
            self._log("mixed-dot-slide", cross_idx)
            return out
        color = token_color(ta)
        lo = cross_idx if dot_above else cross_idx - 1
        rest = lambda mid: tuple(slices[:lo]) + mid + tuple(slices[lo + 2 :])
        if parallel:
            # chi.x1 = x2'.chi + id  and  chi.x2 = x1'.chi - id
            if dot_above:
                sign = -1 if dot[1] == p + 1 else 1
            else:
                sign = 1 if dot[1] == p else -1
            out.append(self._mk(sign * st.coeff, rest(()), st.bag))
            self._log("NH-dot-slide", cross_idx)
            return out
        pair = "EF" if token_up(ta) else "FE"
        if dot_above:  # a dot on the E strand moving down
            sign = 1 if pair == "EF" else -1
        else:  # a dot on the F strand moving up
            sign = 1
        turnback = (
            ("cap", p, pair, color),
            ("cup", p, "FE" if pair == "EF" else "EF", color),
        )
        out.append(self._mk(sign * st.coeff, rest(turnback), st.bag))
        self._log("NH-dot-slide", cross_idx)
        return out

    # -- circles ------------------------------------------------------------------

    def _find_circle(self, st: _State, geo: _Geo):
        comps = geo.components()
        crossed = set()
        for _, a, b in geo.cross_events:
            crossed.add(geo.comp(a))
            crossed.add(geo.comp(b))

        def rightness(rep):
            sid = comps[rep][0]
            return -geo.col(geo.birth[sid][1] + 1, sid)

        closed = [
            rep
            for rep in comps
            if geo.is_closed(rep) and rep not in crossed and len(comps[rep]) == 2
        ]
        return [
            (lambda rep=rep: self._apply_circle(st, geo, rep))
            for rep in sorted(closed, key=rightness)
        ]

    def _apply_circle(self, st: _State, geo: _Geo, rep: int):
        """Evaluate a rightmost circle into the bag, or slide it rightward."""
        slices = list(st.slices)
        segs = geo.components()[rep]
        e_leg = next(s for s in segs if token_up(geo.tokens[s]))
        cup_idx = geo.birth[e_leg][1]
        cap_idx = geo.death[e_leg][1]
        raw = 0
        target = cup_idx + 1
        for mov in sorted(k for k, s in geo.dot_events if s in segs):
            k = _sink_to(slices, mov, target)
            if k != target:
                raise ReductionError("circle dot blocked while gathering")
            target += 1
            raw += 1
        k = _sink_to(slices, cap_idx, target)
        if k != target:
            raise ReductionError("circle cap blocked while gathering")
        cup = slices[cup_idx]
        p, color = cup[1], cup[3]
        orient = "ccw" if cup[2] == "EF" else "cw"
        frame = _frame(self.src, self.weight, slices, cup_idx)
        head, tail = tuple(slices[:cup_idx]), tuple(slices[target + 1 :])
        if p == len(frame):
            # rightmost region: evaluate into the bubble bag
            value = bubble_eval(color, orient, raw, self.weight)
            self._log("bubble-negative" if not value.terms else "bubble-zero", cup_idx)
            return [
                self._mk(coeff * st.coeff, head + tail, _merge_bag(st.bag, bubbles))
                for bubbles, coeff in value.terms.items()
            ]
        # slide rightward past the strand at column p
        neighbor_tok = frame[p]
        nu = regions(frame, self.weight)[p + 1]
        out = []
        for t, coeff, new_label in _slide_terms(color, orient, raw, neighbor_tok, nu):
            for circ, ccoeff in _bubble_insertion(p + 1, color, orient, new_label, nu):
                new = head + (("dot", p),) * t + circ + tail
                out.append(self._mk(coeff * ccoeff * st.coeff, new, st.bag))
        self._log("bubble-zero", cup_idx)
        return out

    # -- kinks (curls) ---------------------------------------------------------------

    def _find_kink(self, st: _State, geo: _Geo):
        sites = []
        for k, a, b in geo.cross_events:
            if geo.comp(a) != geo.comp(b):
                continue
            path = geo.flow_path(geo.comp(a))
            hits = [i for i, ev in enumerate(path) if ev[:2] == ("cross", k)]
            if len(hits) != 2:
                raise ReductionError("self-crossing not visited twice")
            loop = path[hits[0] + 1 : hits[1]]
            if any(ev[0] in ("cross", "dot") for ev in loop):
                continue  # dots normalize and inner crossings resolve first
            turn_idxs = [ev[1] for ev in loop if ev[0] == "turn"]
            sites.append(
                lambda k=k, turn_idxs=turn_idxs: self._apply_kink(st, k, turn_idxs)
            )
        return sites

    def _apply_kink(self, st: _State, k: int, turn_idxs):
        if len(turn_idxs) == 1:
            # twisted cup or cap: open the sideways self-crossing into its
            # definitional bend; a zigzag contraction then leaves a clean curl
            return self._expand_sideways(st, k)
        if len(turn_idxs) != 2:
            raise ReductionError(f"kink loop with {len(turn_idxs)} turns")
        return self._eval_kink(st, k, turn_idxs)

    def _expand_sideways(self, st: _State, k: int):
        """Replace a sideways crossing by its definitional bend.

        [E, F] -> [F, E]:  cup FE at p, cross at p+1, cap EF at p+2;
        [F, E] -> [E, F]:  cup EF at p+2, cross at p+1, cap FE at p.
        Raises the turn count, so it is used only to unwind twisted turns.
        """
        slices = list(st.slices)
        p = slices[k][1]
        frame = _frame(self.src, self.weight, slices, k)
        ta, tb = frame[p], frame[p + 1]
        if token_color(ta) != token_color(tb) or token_up(ta) == token_up(tb):
            raise ReductionError("definitional bend needs a sideways crossing")
        color = token_color(ta)
        if token_up(ta):
            bend = [
                ("cup", p, "FE", color),
                ("cross", p + 1),
                ("cap", p + 2, "EF", color),
            ]
        else:
            bend = [
                ("cup", p + 2, "EF", color),
                ("cross", p + 1),
                ("cap", p, "FE", color),
            ]
        slices[k : k + 1] = bend
        self._log("cyclicity-move", k)
        return [self._mk(st.coeff, tuple(slices), st.bag)]

    def _eval_kink(self, st: _State, cross_idx: int, turn_idxs):
        """Evaluate a clean curl on a strand with right region nu, color i:

        up, loop right:   - sum_{f1+f2=-nu_i} dot^f1 (ccw raw f2+nu_i-1 right)
        up, loop left:    + sum_{f1+f2=+nu_i} dot^f1 (cw  raw f2-nu_i-1 left)
        down, loop right: - sum_{f1+f2=+nu_i} dot^f1 (cw  raw f2-nu_i-1 right)
        down, loop left:  + sum_{f1+f2=-nu_i} dot^f1 (ccw raw f2+nu_i-1 left)

        Off-side labels normalize at the strand's right region; dots ride on
        the continuation.
        """
        slices = list(st.slices)
        cup_idx, cap_idx = min(turn_idxs), max(turn_idxs)
        if slices[cup_idx][0] != "cup" or slices[cap_idx][0] != "cap":
            return None
        k = _lift_to(slices, cup_idx, cross_idx - 1)
        if k != cross_idx - 1:
            return None
        k = _sink_to(slices, cap_idx, cross_idx + 1)
        if k != cross_idx + 1:
            return None
        cup, cross, cap = slices[cross_idx - 1 : cross_idx + 2]
        if cross[1] == cup[1] - 1 and cap[1] == cup[1]:
            side, p = "right", cup[1] - 1
        elif cross[1] == cup[1] + 1 and cap[1] == cup[1] + 1:
            side, p = "left", cup[1]
        else:
            return None
        frame = _frame(self.src, self.weight, slices, cross_idx - 1)
        tok = frame[p]
        up, i = token_up(tok), token_color(tok)
        regs = regions(frame, self.weight)
        nu_i = regs[p + 1][i - 1]
        if side == "right":
            sign, bound = -1, (-nu_i if up else nu_i)
            orient = "ccw" if up else "cw"
            ins_col, region = p + 1, regs[p + 1]
            self._log("curl-right", cross_idx)
        else:
            sign, bound = 1, (nu_i if up else -nu_i)
            orient = "cw" if up else "ccw"
            ins_col, region = p, regs[p]
            self._log("curl-left", cross_idx)
        head = tuple(slices[: cross_idx - 1])
        tail = tuple(slices[cross_idx + 2 :])
        out = []
        for f1 in range(0, bound + 1):
            f2 = bound - f1
            raw = f2 + nu_i - 1 if orient == "ccw" else f2 - nu_i - 1
            label = bubble_label(orient, i, raw, region)
            for circ, ccoeff in _bubble_insertion(ins_col, i, orient, label, region):
                mid = (("dot", p),) * f1 + circ
                out.append(
                    self._mk(sign * ccoeff * st.coeff, head + mid + tail, st.bag)
                )
        return out

    # -- double crossings --------------------------------------------------------------

    def _find_double(self, st: _State, geo: _Geo):
        pairs: dict[tuple[int, int], list[tuple[int, int, int]]] = {}
        for k, a, b in geo.cross_events:
            ca, cb = geo.comp(a), geo.comp(b)
            if ca == cb:
                continue
            pairs.setdefault((min(ca, cb), max(ca, cb)), []).append((k, a, b))
        cands = []
        for evs in pairs.values():
            if len(evs) < 2:
                continue
            evs.sort()
            gap, lo_ev, hi_ev = min(
                (evs[i + 1][0] - evs[i][0], evs[i], evs[i + 1])
                for i in range(len(evs) - 1)
            )
            cands.append((gap, lo_ev, hi_ev))
        cands.sort(key=lambda t: (t[0], t[1][0]))
        return [
            (lambda lo_ev=lo_ev, hi_ev=hi_ev: self._apply_double(st, lo_ev, hi_ev))
            for _, lo_ev, hi_ev in cands
        ]

    def _apply_double(self, st: _State, lo_ev, hi_ev):
        geo = _Geo(self.src, self.weight, st.slices)
        slices = list(st.slices)
        lo_k, hi_k = lo_ev[0], hi_ev[0]
        lo_set, hi_set = {lo_ev[1], lo_ev[2]}, {hi_ev[1], hi_ev[2]}
        if lo_set != hi_set:
            # the crossings sit on different segments: slide one around the
            # turn joining a fresh segment toward the other crossing
            for seg in hi_set - lo_set:
                res = self._slide_cross_off_leg(st, geo, hi_k, seg, (lo_k, hi_k))
                if res is not None:
                    return res
            for seg in lo_set - hi_set:
                res = self._slide_cross_off_leg(st, geo, lo_k, seg, (lo_k, hi_k))
                if res is not None:
                    return res
            return None
        k = _sink_to(slices, hi_k, lo_k + 1)
        if k == lo_k + 1:
            return self._resolve_r2(st, slices, lo_k)
        return self._unblock_once(st, slices, k)

    def _unblock_once(self, st: _State, slices: list, k: int):
        """Resolve the obstruction directly below the crossing at index k."""
        blocker = slices[k - 1]
        if blocker[0] != "cross":
            res = self._pitchfork_at(st, slices, k - 1)
            if res is None:
                return None
            return res
        geo = _Geo(self.src, self.weight, tuple(slices))
        ev_ours = next(e for e in geo.cross_events if e[0] == k)
        ev_blk = next(e for e in geo.cross_events if e[0] == k - 1)
        ours, blk = {ev_ours[1], ev_ours[2]}, {ev_blk[1], ev_blk[2]}
        shared = ours & blk
        if not shared:
            raise ReductionError("non-commuting crossings without shared strand")
        third_pair = (ours | blk) - shared
        third = None
        for k2, a2, b2 in geo.cross_events:
            if {a2, b2} == third_pair and k2 < k - 1:
                third = k2
        if third is None:
            raise ReductionError("braid triple lacks its third crossing")
        k3 = _sink_to(slices, k - 1, third + 1)
        if k3 != third + 1:
            return self._unblock_once(st, slices, k3)
        k4 = _sink_to(slices, k, third + 2)
        if k4 != third + 2:
            return self._unblock_once(st, slices, k4)
        return self._braid(st, slices, third)

    def _braid(self, st: _State, slices: list, k: int):
        """Braid move on three consecutive crossings at k, k+1, k+2."""
        w = [slices[k][1], slices[k + 1][1], slices[k + 2][1]]
        if not (w[0] == w[2] and abs(w[1] - w[0]) == 1):
            raise ReductionError(f"braid pattern mismatch {w}")
        frame = _frame(self.src, self.weight, slices, k)
        lo = min(w)
        colors = tuple(token_color(frame[lo + d]) for d in range(3))
        new = list(slices)
        new[k : k + 3] = [("cross", w[1]), ("cross", w[0]), ("cross", w[1])]
        out = [self._mk(st.coeff, tuple(new), st.bag)]
        if colors[0] == colors[2] != colors[1]:
            # [p, p+1, p] = [p+1, p, p+1] + id on outer-equal colors
            sign = 1 if w[0] == lo else -1
            corr = list(slices)
            del corr[k : k + 3]
            out.append(self._mk(sign * st.coeff, tuple(corr), st.bag))
            self._log("braid-iji", k)
        else:
            self._log("NH-braid" if len(set(colors)) == 1 else "braid-distinct", k)
        return out

    def _resolve_r2(self, st: _State, slices: list, k: int):
        """Two adjacent crossings of one strand pair at slices k, k+1."""
        p = slices[k][1]
        if slices[k + 1][0] != "cross" or slices[k + 1][1] != p:
            raise ReductionError("double crossing misaligned")
        frame = _frame(self.src, self.weight, slices, k)
        ta, tb = frame[p], frame[p + 1]
        same = token_color(ta) == token_color(tb)
        parallel = token_up(ta) == token_up(tb)
        rest = lambda mid: tuple(slices[:k]) + mid + tuple(slices[k + 2 :])
        if same and parallel:
            self._log("NH-double-cross", k)
            return []
        if not same and parallel:
            self._log("mixed-double-same", k)
            return [
                self._mk(st.coeff, rest((("dot", p),)), st.bag),
                self._mk(st.coeff, rest((("dot", p + 1),)), st.bag),
            ]
        if not same:
            self._log("mixed-double-opposite", k)
            return [self._mk(st.coeff, rest(()), st.bag)]
        color = token_color(ta)
        nu = regions(frame, self.weight)[p + 2]
        nu_i = nu[color - 1]
        out = [self._mk(-st.coeff, rest(()), st.bag)]
        if token_up(ta):  # an [E, F] pair
            bound, pair, orient = nu_i - 1, "EF", "cw"
            cap_dot_col, cup_dot_col = p, p + 1
            self._log("EF-double-cross-+", k)
        else:  # an [F, E] pair
            bound, pair, orient = -nu_i - 1, "FE", "ccw"
            cap_dot_col, cup_dot_col = p + 1, p
            self._log("EF-double-cross--", k)
        for f1 in range(0, bound + 1):
            for f3 in range(0, bound - f1 + 1):
                f2 = bound - f1 - f3
                for circ, ccoeff in _bubble_insertion(p, color, orient, f2, nu):
                    mid = (
                        (("dot", cap_dot_col),) * f3
                        + (("cap", p, pair, color),)
                        + circ
                        + (("cup", p, pair, color),)
                        + (("dot", cup_dot_col),) * f1
                    )
                    out.append(self._mk(ccoeff * st.coeff, rest(mid), st.bag))
        return out

    # -- normal forms ----------------------------------------------------------------

    def _extract(self, st: _State, work: list):
        geo = _Geo(self.src, self.weight, st.slices)
        seen_pairs = set()
        for _, a, b in geo.cross_events:
            ca, cb = geo.comp(a), geo.comp(b)
            if ca == cb:
                raise ReductionError("self-crossing survived reduction")
            key = (min(ca, cb), max(ca, cb))
            if key in seen_pairs:
                raise ReductionError("double crossing survived reduction")
            seen_pairs.add(key)
        caps, cups, thru = [], [], []
        dots: dict[tuple, int] = {}
        for rep, segs in geo.components().items():
            if geo.is_closed(rep):
                raise ReductionError("closed component survived reduction")
            ends = []
            for s in segs:
                if geo.birth[s][0] == "src":
                    ends.append(("s", geo.birth[s][1]))
                if geo.death[s][0] == "tgt":
                    ends.append(("t", geo.death[s][1]))
            kinds = sorted(e[0] for e in ends)
            if kinds == ["s", "s"]:
                caps.append(tuple(sorted(e[1] for e in ends)))
            elif kinds == ["t", "t"]:
                cups.append(tuple(sorted(e[1] for e in ends)))
            else:
                thru.append(
                    (
                        next(e[1] for e in ends if e[0] == "s"),
                        next(e[1] for e in ends if e[0] == "t"),
                    )
                )
            ndots = sum(1 for _, s in geo.dot_events if s in segs)
            if ndots:
                sid, end = geo.flow_start(rep)
                key = ("s", geo.birth[sid][1]) if end == "birth" else (
                    "t",
                    geo.death[sid][1],
                )
                dots[key] = ndots
        nf = _NF(
            tuple(sorted(caps)),
            tuple(sorted(thru)),
            tuple(sorted(cups)),
            tuple(sorted(dots.items())),
            st.bag,
        )
        canon = _emit(self.source, self.tgt, nf)
        if not self._has_iji_triple(geo):
            return [(canon, st.coeff)]
        return self._align(st, canon, work)

    def _has_iji_triple(self, geo: _Geo) -> bool:
        crossed = set()
        for _, a, b in geo.cross_events:
            ca, cb = geo.comp(a), geo.comp(b)
            crossed.add((min(ca, cb), max(ca, cb)))
        reps = sorted(geo.components())
        for x in range(len(reps)):
            for y in range(x + 1, len(reps)):
                for z in range(y + 1, len(reps)):
                    trio = (reps[x], reps[y], reps[z])
                    if all(
                        (trio[a], trio[b]) in crossed
                        for a, b in ((0, 1), (0, 2), (1, 2))
                    ):
                        if len({token_color(geo.tokens[r]) for r in trio}) == 2:
                            return True
        return False

    def _align(self, st: _State, canon: Diagram, work: list):
        """Reorder the crossing word into the canonical one.

        Needed only when an (i, j, i) triple is present; braid moves along
        the way can spawn correction terms, re-queued as fresh work.
        """
        slices = list(st.slices)
        canon_seq = [pp for _, pp in _cross_pairs(self.src, self.weight, canon.slices)]
        while True:
            self._tick()
            state_pairs = _cross_pairs(self.src, self.weight, tuple(slices))
            state_seq = [pp for _, pp in state_pairs]
            if state_seq == canon_seq:
                break
            d = next(i for i in range(len(canon_seq)) if state_seq[i] != canon_seq[i])
            idx = next(
                state_pairs[n][0]
                for n in range(d, len(state_seq))
                if state_seq[n] == canon_seq[d]
            )
            dest = state_pairs[d][0]
            k = _sink_to(slices, idx, dest)
            if k == dest:
                continue
            res = self._unblock_once(
                _State(st.coeff, tuple(slices), st.bag), slices, k
            )
            if res is None:
                raise ReductionError("alignment blocked by a turn")
            slices = list(res[0].slices)
            work.extend(res[1:])
        return [(canon, st.coeff)]


class _NF(NamedTuple):
    caps: tuple
    thru: tuple
    cups: tuple
    dots: tuple  # sorted ((("s"|"t", position), count), ...)
    bag: tuple


def _cross_pairs(src_tokens, weight, slices):
    """(slice index, endpoint-keyed component pair) for each crossing."""
    geo = _Geo(src_tokens, weight, slices)

    def comp_key(rep):
        ends = []
        for s in geo.components()[rep]:
            if geo.birth[s][0] == "src":
                ends.append(("s", geo.birth[s][1]))
            if geo.death[s][0] == "tgt":
                ends.append(("t", geo.death[s][1]))
        return tuple(sorted(ends))

    return [
        (k, tuple(sorted((comp_key(geo.comp(a)), comp_key(geo.comp(b))))))
        for k, a, b in sorted(geo.cross_events)
    ]


def _emit(source: Signature, tgt_tokens, nf: _NF) -> Diagram:
    """Draw the canonical diagram of a normal-form datum."""
    src = tuple(source.strands)
    weight = tuple(source.weight)
    dots = dict(nf.dots)
    slices: list[tuple] = []
    for key in sorted(k for k in dots if k[0] == "s"):
        slices.extend((("dot", key[1]),) * dots[key])
    # caps innermost first; the left foot crosses rightward to adjacency
    frame_ids = list(range(len(src)))
    for i, j in sorted(nf.caps, key=lambda c: c[1]):
        ci, cj = frame_ids.index(i), frame_ids.index(j)
        for c in range(ci, cj - 1):
            slices.append(("cross", c))
            frame_ids[c], frame_ids[c + 1] = frame_ids[c + 1], frame_ids[c]
        pair = "EF" if token_up(src[i]) else "FE"
        slices.append(("cap", cj - 1, pair, token_color(src[i])))
        del frame_ids[cj - 1 : cj + 1]
    # the through permutation as the leftmost-inversion-first word
    rank = dict(nf.thru)
    tgt_order = [rank[s] for s in frame_ids]
    want = {t: n for n, t in enumerate(sorted(tgt_order))}
    cur = [want[t] for t in tgt_order]
    changed = True
    while changed:
        changed = False
        for c in range(len(cur) - 1):
            if cur[c] > cur[c + 1]:
                slices.append(("cross", c))
                cur[c], cur[c + 1] = cur[c + 1], cur[c]
                changed = True
                break
    # cups by left head ascending; the right head crosses over the strands
    # whose target position lies inside the pair
    existing = sorted(tgt_order)
    for a, b in sorted(nf.cups):
        pos = sum(1 for t in existing if t < a)
        pair = "EF" if token_up(tgt_tokens[a]) else "FE"
        slices.append(("cup", pos, pair, token_color(tgt_tokens[a])))
        inside = [t for t in existing if a < t < b]
        for n in range(len(inside)):
            slices.append(("cross", pos + 1 + n))
        existing = (
            [t for t in existing if t < a]
            + [a]
            + inside
            + [b]
            + [t for t in existing if t > b]
        )
    final_col = {t: c for c, t in enumerate(existing)}
    for key in sorted(k for k in dots if k[0] == "t"):
        slices.extend((("dot", final_col[key[1]]),) * dots[key])
    ncols = len(existing)
    for color, label in nf.bag:
        orient = canonical_orientation(color, weight)
        slices.extend(
            _circle_slices(
                ncols, color, orient, bubble_raw_dots(orient, color, label, weight)
            )
        )
    out = Diagram(source, tuple(slices))
    validate(out)
    return out


# -- public entry points ---------------------------------------------------------------


def reduce_to_basis(x, *, rng=None, budget=None, trace_log=None) -> dict[Diagram, int]:
    """Reduce a diagram or dict[Diagram, int] to the spanning basis.

    Returns a dict mapping canonical basis diagrams (over the common source
    signature, with bubbles drawn as rightmost circles) to integer
    coefficients.  ``rng`` (a random.Random) randomizes the reduction order
    without affecting the result; ``budget`` overrides QSL3_STEP_BUDGET;
    ``trace_log`` (a list) collects "rule @ slice" lines.
    """
    if isinstance(x, Diagram):
        x = {x: 1}
    if not x:
        return {}
    items = list(x.items())
    source = items[0][0].source
    tgt = None
    states = []
    for d, coeff in items:
        if d.source != source:
            raise ValueError("all diagrams must share one source signature")
        t, _ = validate(d)
        if tgt is None:
            tgt = t
        elif t != tgt:
            raise ValueError("all diagrams must share one target signature")
        states.append(_State(coeff, d.slices, ()))
    eng = _Engine(source, tgt.strands, rng=rng, budget=budget, trace_log=trace_log)
    return eng.run(states)


def local_rewrite(rule: str, d: Diagram, site: int):
    """Apply one named local move at ``site`` (a slice index) of ``d``.

    Returns a dict mapping diagrams to integer coefficients, or None when
    the rule's pattern does not match at the site.  Every returned summand
    has the same source, target, and degree as the input diagram.
    """
    if rule not in RULE_IDS:
        raise ValueError(f"unknown rule {rule!r}")
    tgt, _ = validate(d)
    eng = _Engine(d.source, tgt.strands)
    try:
        out = _local(eng, rule, d, site)
    except ReductionError:
        return None
    if out is None:
        return None
    total: dict[Diagram, int] = {}
    for st in out:
        key = Diagram(d.source, st.slices)
        validate(key)
        total[key] = total.get(key, 0) + st.coeff
        if total[key] == 0:
            del total[key]
    return total


def _local(eng: _Engine, rule: str, d: Diagram, site: int):
    slices = list(d.slices)
    n = len(slices)
    st = _State(1, d.slices, ())

    def cross_at(k):
        return 0 <= k < n and slices[k][0] == "cross"

    def frame_at(k):
        return _frame(eng.src, eng.weight, slices, k)

    if rule in ("NH-double-cross", "mixed-double-opposite", "mixed-double-same",
                "EF-double-cross-+", "EF-double-cross--"):
        if not (cross_at(site) and cross_at(site + 1)):
            return None
        p = slices[site][1]
        if slices[site + 1][1] != p:
            return None
        frame = frame_at(site)
        ta, tb = frame[p], frame[p + 1]
        same = token_color(ta) == token_color(tb)
        parallel = token_up(ta) == token_up(tb)
        kind = (
            "NH-double-cross" if same and parallel
            else "mixed-double-same" if parallel
            else "mixed-double-opposite" if not same
            else ("EF-double-cross-+" if token_up(ta) else "EF-double-cross--")
        )
        if kind != rule:
            return None
        return eng._resolve_r2(st, slices, site)
    if rule in ("NH-dot-slide", "mixed-dot-slide"):
        if not cross_at(site):
            return None
        p = slices[site][1]
        above = (
            site + 1 < n
            and slices[site + 1][0] == "dot"
            and slices[site + 1][1] in (p, p + 1)
        )
        below = (
            site > 0
            and slices[site - 1][0] == "dot"
            and slices[site - 1][1] in (p, p + 1)
        )
        if not above and not below:
            return None
        frame = frame_at(site)
        same = token_color(frame[p]) == token_color(frame[p + 1])
        if (rule == "NH-dot-slide") != same:
            return None
        return eng._dot_through_cross(st, slices, site, dot_above=above)
    if rule in ("NH-braid", "braid-distinct", "braid-iji"):
        if not (cross_at(site) and cross_at(site + 1) and cross_at(site + 2)):
            return None
        w = [slices[site + d2][1] for d2 in range(3)]
        if not (w[0] == w[2] and abs(w[1] - w[0]) == 1):
            return None
        frame = frame_at(site)
        lo = min(w)
        colors = [token_color(frame[lo + d2]) for d2 in range(3)]
        kind = (
            "NH-braid" if len(set(colors)) == 1
            else "braid-iji" if colors[0] == colors[2]
            else "braid-distinct"
        )
        if kind != rule:
            return None
        return eng._braid(st, slices, site)
    if rule in ("bubble-negative", "bubble-zero"):
        block = _match_circle(slices, site)
        if block is None:
            return None
        cap_idx, color, orient, raw, p = block
        frame = frame_at(site)
        region = regions(frame, eng.weight)[p]
        label = bubble_label(orient, color, raw, region)
        if label > 0 or (rule == "bubble-negative") != (label < 0):
            return None
        rest = tuple(slices[:site]) + tuple(slices[cap_idx + 1 :])
        return [] if label < 0 else [eng._mk(1, rest, ())]
    if rule in ("curl-right", "curl-left"):
        if site + 2 >= n or slices[site][0] != "cup":
            return None
        if slices[site + 1][0] != "cross" or slices[site + 2][0] != "cap":
            return None
        cup, cross, cap = slices[site : site + 3]
        right = cross[1] == cup[1] - 1 and cap[1] == cup[1]
        left = cross[1] == cup[1] + 1 and cap[1] == cup[1] + 1
        if not right and not left:
            return None
        if (rule == "curl-right") != right:
            return None
        return eng._eval_kink(st, site + 1, (site, site + 2))
    if rule == "adjunction-zigzag":
        if site + 1 >= n or slices[site][0] != "cup" or slices[site + 1][0] != "cap":
            return None
        geo = _Geo(eng.src, eng.weight, d.slices)
        born = [s for s, bb in geo.birth.items() if bb[0] == "cup" and bb[1] == site]
        leg = next(
            (
                s
                for s in born
                if geo.death[s][0] == "cap" and geo.death[s][1] == site + 1
            ),
            None,
        )
        if leg is None or geo.partner_cup[leg] == geo.partner_cap[leg]:
            return None
        return eng._apply_zigzag(st, geo, leg)
    if rule == "cyclicity-move":
        if site + 1 >= n:
            return None
        return eng._pitchfork_at(st, slices, site)
    return None


def _match_circle(slices, site):
    """Match a literal circle block cup / dots / cap starting at ``site``."""
    if site >= len(slices) or slices[site][0] != "cup":
        return None
    cup = slices[site]
    p, pair, color = cup[1], cup[2], cup[3]
    orient = "ccw" if pair == "EF" else "cw"
    dot_col = p if orient == "ccw" else p + 1
    k = site + 1
    raw = 0
    while k < len(slices) and slices[k] == ("dot", dot_col):
        raw += 1
        k += 1
    if k >= len(slices) or slices[k][:2] != ("cap", p):
        return None
    if slices[k][2] != pair or slices[k][3] != color:
        return None
    return k, color, orient, raw, p


def analyze(d: Diagram) -> _NF:
    """Endpoint matching, per-component dots, and bubbles of a diagram.

    Works for any well-typed diagram whose closed components are plain
    circles; crossings are not recorded (for basis diagrams they are
    determined by the matching together with the canonical word).
    """
    validate(d)
    geo = _Geo(d.source.strands, d.source.weight, d.slices)
    caps, cups, thru = [], [], []
    dots: dict[tuple, int] = {}
    bag: list[tuple[int, int]] = []
    weight = tuple(d.source.weight)
    for rep, segs in geo.components().items():
        ndots = sum(1 for _, s in geo.dot_events if s in segs)
        if geo.is_closed(rep):
            if len(segs) != 2:
                raise ValueError("analyze: nested closed component")
            e_leg = next(s for s in segs if token_up(geo.tokens[s]))
            cup_idx = geo.birth[e_leg][1]
            cup = d.slices[cup_idx]
            orient = "ccw" if cup[2] == "EF" else "cw"
            frame = _frame(d.source.strands, weight, d.slices, cup_idx)
            region = regions(frame, weight)[cup[1]]
            bag.append((cup[3], bubble_label(orient, cup[3], ndots, region)))
            continue
        ends = []
        for s in segs:
            if geo.birth[s][0] == "src":
                ends.append(("s", geo.birth[s][1]))
            if geo.death[s][0] == "tgt":
                ends.append(("t", geo.death[s][1]))
        kinds = sorted(e[0] for e in ends)
        if kinds == ["s", "s"]:
            caps.append(tuple(sorted(e[1] for e in ends)))
        elif kinds == ["t", "t"]:
            cups.append(tuple(sorted(e[1] for e in ends)))
        else:
            thru.append(
                (
                    next(e[1] for e in ends if e[0] == "s"),
                    next(e[1] for e in ends if e[0] == "t"),
                )
            )
        if ndots:
            sid, end = geo.flow_start(rep)
            key = ("s", geo.birth[sid][1]) if end == "birth" else (
                "t",
                geo.death[sid][1],
            )
            dots[key] = ndots
    return _NF(
        tuple(sorted(caps)),
        tuple(sorted(thru)),
        tuple(sorted(cups)),
        tuple(sorted(dots.items())),
        tuple(sorted(bag)),
    )
