"""Links from unfolded Z_2 diagrams, Reidemeister-II unlinking, Kauffman bracket.

For alpha = 2 the folded diagram unfolds into four replicas of the circuit,
``U, U*, U, U*`` (copies 0..3).  Circle terminals pair copies (0,1) and (2,3),
Square terminals pair (1,2) and (3,0).  Drawing the four replicas side by
side, with the conjugate copies mirrored so that paired boundaries face each
other, gives a planar diagram in which every gate is a crossing of two
strands.  Convention: in every copy the strand running in-left -> out-right
passes over the other one; because the conjugate copies are mirror images,
their crossings carry the opposite sign.

A crossing is stored PD-style: four slots listed counterclockwise starting
from an end of the under strand, so slots 0, 2 are the under strand and 1, 3
the over strand.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .diagram import IL, IR, OL, OR, FoldedDiagram, Port, Term, build_zalpha, reduce_boundary
from .gates import Label
from .lattice import BaseGateSpec

MAX_BRACKET_CROSSINGS = 20
COPIES = 4
# terminal pairings between replicas
_PAIRING = {
    Label.CIRCLE: {0: 1, 1: 0, 2: 3, 3: 2},
    Label.SQUARE: {1: 2, 2: 1, 3: 0, 0: 3},
}
# port -> slot, for upright (forward) and mirrored (conjugate) copies
_SLOT_UPRIGHT = {IR: 0, OR: 1, OL: 2, IL: 3}
_SLOT_MIRRORED = {IR: 0, IL: 1, OL: 2, OR: 3}


class KnotError(ValueError):
    pass


Slot = tuple[int, int]  # (crossing id, slot 0..3)


@dataclass
class LinkDiagram:
    """Crossings glued along arcs.

    ``partner[(c, s)]`` is the slot at the other end of the arc leaving slot
    ``s`` of crossing ``c``; ``free_loops`` counts components without crossings.
    """

    crossings: list[int]
    partner: dict[Slot, Slot]
    free_loops: int = 0
    origin: dict[int, tuple] = field(default_factory=dict)  # crossing -> (node, copy)

    def copy(self) -> "LinkDiagram":
        return LinkDiagram(list(self.crossings), dict(self.partner), self.free_loops, dict(self.origin))

    def validate(self) -> None:
        alive = set(self.crossings)
        for c in alive:
            for s in range(4):
                other = self.partner.get((c, s))
                if other is None or other[0] not in alive or self.partner.get(other) != (c, s):
                    raise KnotError(f"crossing {c} slot {s} is not glued to an arc")

    @property
    def num_crossings(self) -> int:
        return len(self.crossings)

    def mirror(self) -> "LinkDiagram":
        """Flip every crossing (over <-> under): rotate slot labels by one."""
        rot = {(c, s): (c, (s + 1) % 4) for c in self.crossings for s in range(4)}
        partner = {rot[a]: rot[b] for a, b in self.partner.items()}
        return LinkDiagram(list(self.crossings), partner, self.free_loops, dict(self.origin))

    # -- components -------------------------------------------------------
    def components(self) -> list[list[Slot]]:
        """Each component as the ordered list of slots where it enters crossings."""
        seen: set[Slot] = set()
        comps = []
        for c in self.crossings:
            for s in range(4):
                if (c, s) in seen:
                    continue
                path = []
                cur = (c, s)
                while cur not in seen:
                    seen.add(cur)
                    path.append(cur)
                    out = (cur[0], (cur[1] + 2) % 4)
                    seen.add(out)
                    cur = self.partner[out]
                comps.append(path)
        return comps

    def num_components(self) -> int:
        return len(self.components()) + self.free_loops

    def to_pd(self) -> str:
        """Plain-text PD code, one ``X[a,b,c,d]`` per crossing."""
        label: dict[Slot, int] = {}
        k = 0
        for a, b in sorted(self.partner.items()):
            if a not in label:
                k += 1
                label[a] = label[b] = k
        parts = [
            "X[" + ",".join(str(label[(c, s)]) for s in range(4)) + "]" for c in sorted(self.crossings)
        ]
        if self.free_loops:
            parts.append(f"O[{self.free_loops}]")
        return "PD[" + ", ".join(parts) + "]"


def link_from_diagram(diag: FoldedDiagram) -> LinkDiagram:
    """Unfold a folded diagram (every node read as a SWAP crossing)."""
    diag.validate()
    cid = {}
    origin = {}
    for nid in sorted(diag.nodes):
        for c in range(COPIES):
            cid[(nid, c)] = len(cid)
            origin[cid[(nid, c)]] = (nid, c)

    def slot(nid, port, c):
        table = _SLOT_UPRIGHT if c % 2 == 0 else _SLOT_MIRRORED
        return (cid[(nid, c)], table[port])

    partner: dict[Slot, Slot] = {}
    for nid, nd in diag.nodes.items():
        for port, ep in enumerate(nd.ports):
            for c in range(COPIES):
                a = slot(nid, port, c)
                if isinstance(ep, Port):
                    b = slot(ep.node, ep.port, c)
                else:
                    b = slot(nid, port, _PAIRING[ep.label][c])
                partner[a] = b
    # a terminal-terminal wire closes into 2 loops (equal labels) or 1 (unequal)
    free = 2 * diag.free_wires - diag.overlaps
    link = LinkDiagram(sorted(cid.values()), partner, free, origin)
    link.validate()
    return link


def unfold_to_link(spec: BaseGateSpec, m: int, n: int) -> LinkDiagram:
    return link_from_diagram(build_zalpha(spec, m, n))


def terminal_count(diag: FoldedDiagram) -> int:
    """Boundary d-legs of the folded diagram."""
    return len(diag.terminals()) + 2 * diag.free_wires


def z2_from_loops(diag: FoldedDiagram, link: LinkDiagram | None = None) -> Fraction:
    """``(1/d)**(terminals - N_loops)``, valid when the link is an unlink."""
    link = link or link_from_diagram(diag)
    return Fraction(1, diag.d) ** (terminal_count(diag) - link.num_components())


# ---------------------------------------------------------------------------
# Reidemeister II


def _find_rii(link: LinkDiagram):
    """A bigon whose two crossings have the same strand on top."""
    for c1 in link.crossings:
        for so in (1, 3):  # over slot of c1
            c2, so2 = link.partner[(c1, so)]
            if c2 == c1 or so2 % 2 != 1:
                continue
            for su in (so - 1, (so + 1) % 4):  # neighbouring under slots of c1
                d2, su2 = link.partner[(c1, su)]
                if d2 != c2 or su2 % 2 != 0:
                    continue
                # ccw order at c1 (su -> so or so -> su) must be reversed at c2
                if (su + 1) % 4 == so and (so2 + 1) % 4 == su2:
                    return c1, c2
                if (so + 1) % 4 == su and (su2 + 1) % 4 == so2:
                    return c1, c2
    return None


def _remove_pair(link: LinkDiagram, c1: int, c2: int) -> None:
    gone = {c1, c2}
    inner = [(c, s) for c in gone for s in range(4)]
    # walk from every outside end through the removed crossings
    visited = set()
    for start in inner:
        outside = link.partner[start]
        if outside[0] in gone or start in visited:
            continue
        cur = start
        while True:
            visited.add(cur)
            through = (cur[0], (cur[1] + 2) % 4)
            visited.add(through)
            nxt = link.partner[through]
            if nxt[0] not in gone:
                link.partner[outside] = nxt
                link.partner[nxt] = outside
                break
            cur = nxt
    # closed strands living entirely on the removed pair
    for start in inner:
        if start in visited:
            continue
        cur = start
        while cur not in visited:
            visited.add(cur)
            through = (cur[0], (cur[1] + 2) % 4)
            visited.add(through)
            cur = link.partner[through]
        link.free_loops += 1
    for s in inner:
        link.partner.pop(s, None)
    link.crossings = [c for c in link.crossings if c not in gone]


@dataclass
class UnlinkResult:
    unlinked: bool
    components: int
    moves: int
    remaining: LinkDiagram

    def to_json(self) -> dict:
        return {
            "unlinked": self.unlinked,
            "components": self.components,
            "moves": self.moves,
            "remaining_crossings": self.remaining.num_crossings,
        }


def rii_unlink(link: LinkDiagram) -> UnlinkResult:
    """Cancel same-strand-on-top bigons until none is left."""
    work = link.copy()
    moves = 0
    while True:
        hit = _find_rii(work)
        if hit is None:
            break
        _remove_pair(work, *hit)
        moves += 1
    return UnlinkResult(not work.crossings, work.num_components(), moves, work)


# ---------------------------------------------------------------------------
# Kauffman bracket


class LaurentPoly(dict):
    """Exact Laurent polynomial in ``A``: exponent -> integer coefficient."""

    def __add__(self, other):
        out = LaurentPoly(self)
        for k, v in other.items():
            out[k] = out.get(k, 0) + v
        return out.clean()

    def __mul__(self, other):
        out = LaurentPoly()
        for k1, v1 in self.items():
            for k2, v2 in other.items():
                out[k1 + k2] = out.get(k1 + k2, 0) + v1 * v2
        return out.clean()

    def __pow__(self, k: int):
        out = LaurentPoly({0: 1})
        for _ in range(k):
            out = out * self
        return out

    def clean(self) -> "LaurentPoly":
        for k in [k for k, v in self.items() if v == 0]:
            del self[k]
        return self

    def mirror(self) -> "LaurentPoly":
        return LaurentPoly({-k: v for k, v in self.items()})

    def __str__(self) -> str:
        if not self:
            return "0"
        return " + ".join(f"{v}*A^{k}" for k, v in sorted(self.items()))

    def evaluate(self, d: int):
        """Value at ``A**2 + A**-2 = -d``; exact when the result is rational."""
        if any(k % 2 for k in self):
            raise KnotError("odd powers of A do not occur for even crossing numbers")
        # in y = A^2: split into y^k + y^-k (rational) and y^k - y^-k parts
        s = {0: Fraction(2), 1: Fraction(-d)}
        top = max((abs(k) // 2 for k in self), default=0)
        for k in range(2, top + 1):
            s[k] = -d * s[k - 1] - s[k - 2]
        sym = Fraction(self.get(0, 0))
        antisym = {}
        for k in range(1, top + 1):
            cp, cm = self.get(2 * k, 0), self.get(-2 * k, 0)
            sym += Fraction(cp + cm, 2) * s[k]
            if cp != cm:
                antisym[k] = Fraction(cp - cm, 2)
        if not antisym:
            return sym
        import cmath

        y = (-d + cmath.sqrt(d * d - 4)) / 2
        return complex(sym) + sum(float(c) * (y**k - y**-k) for k, c in antisym.items())


DELTA = LaurentPoly({2: -1, -2: -1})


def _smoothing(state: int) -> tuple[tuple[int, int], tuple[int, int]]:
    # A-smoothing joins slots (0,1) and (2,3), B-smoothing (0,3) and (1,2)
    return ((0, 1), (2, 3)) if state == 0 else ((0, 3), (1, 2))


def _crossing_order(link: LinkDiagram) -> list[int]:
    """Breadth-first along arcs, which keeps the frontier of open arcs small."""
    order, seen = [], set()
    for start in link.crossings:
        if start in seen:
            continue
        queue = [start]
        seen.add(start)
        while queue:
            c = queue.pop(0)
            order.append(c)
            for s in range(4):
                nxt = link.partner[(c, s)][0]
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
    return order


def kauffman_bracket(
    link: LinkDiagram, max_crossings: int = MAX_BRACKET_CROSSINGS, method: str = "frontier"
) -> LaurentPoly:
    """Skein state sum with one factor ``delta = -A^2 - A^-2`` per loop (empty diagram -> 1).

    ``method="states"`` enumerates all ``2^c`` smoothings explicitly.  The
    default ``"frontier"`` sums the same states crossing by crossing: the
    partial states are grouped by how the open arc ends are connected, and
    a loop factor is applied whenever a loop closes.
    """
    n = link.num_crossings
    if n > max_crossings:
        raise KnotError(f"{n} crossings exceed the state-sum budget of {max_crossings}")
    if method == "states":
        return _bracket_states(link)
    if method != "frontier":
        raise KnotError(f"unknown method {method!r}")
    # state: sorted tuple of frontier pairs (two open arc ends joined by a path)
    states: dict[tuple, LaurentPoly] = {(): LaurentPoly({0: 1})}
    done: set[int] = set()
    for c in _crossing_order(link):
        nxt: dict[tuple, LaurentPoly] = {}
        for key, poly in states.items():
            match = {}
            for a, b in key:
                match[a], match[b] = b, a
            for smooth in (0, 1):
                new_match, loops = _attach(link, c, _smoothing(smooth), match, done)
                term = poly * LaurentPoly({1 if smooth == 0 else -1: 1}) * (DELTA**loops)
                k = tuple(sorted((a, b) for a, b in new_match.items() if a < b))
                nxt[k] = nxt[k] + term if k in nxt else term
        done.add(c)
        states = {k: v for k, v in nxt.items() if v}
    if set(states) - {()}:
        raise KnotError("open arcs left after summing all crossings")  # pragma: no cover
    poly = states.get((), LaurentPoly())
    return poly * (DELTA**link.free_loops)


def _attach(link, c, pairs, match, done):
    """Glue crossing ``c`` (with the given smoothing) to the frontier ``match``."""
    adj: dict[Slot, list[Slot]] = {}

    def join(a, b):
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    mine = [(c, s) for s in range(4)]
    for a, b in pairs:
        join((c, a), (c, b))
    for slot in mine:
        other = link.partner[slot]
        if other[0] == c:
            if slot < other:
                join(slot, other)
        elif other[0] in done:
            join(slot, other)
    nodes = set(adj)
    for a in list(nodes):
        if a in match:
            nodes.add(match[a])
    for a in list(nodes):
        if a in match and match[a] in nodes and a < match[a]:
            join(a, match[a])
    new_match = {k: v for k, v in match.items() if k not in nodes}
    loops = 0
    seen: set[Slot] = set()
    def is_open(x):
        # the arc at ``x`` still leads to a crossing that is not yet summed
        other = link.partner[x][0]
        return other != c and other not in done

    for start in nodes:
        if start in seen:
            continue
        comp, stack = [], [start]
        seen.add(start)
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in adj.get(x, []):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        ends = [x for x in comp if is_open(x)]
        if not ends:
            loops += 1
        elif len(ends) == 2:
            new_match[ends[0]], new_match[ends[1]] = ends[1], ends[0]
        else:  # pragma: no cover - every path has two ends
            raise KnotError("inconsistent frontier")
    return new_match, loops


def _bracket_states(link: LinkDiagram) -> LaurentPoly:
    n = link.num_crossings
    idx = {c: i for i, c in enumerate(link.crossings)}
    arcs = [(4 * idx[a[0]] + a[1], 4 * idx[b[0]] + b[1]) for a, b in link.partner.items() if a < b]
    tally: dict[tuple[int, int], int] = {}
    for state in itertools.product((0, 1), repeat=n):
        parent = list(range(4 * n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb

        for a, b in arcs:
            union(a, b)
        for i, smoothing in enumerate(state):
            for a, b in _smoothing(smoothing):
                union(4 * i + a, 4 * i + b)
        loops = len({find(x) for x in range(4 * n)}) + link.free_loops
        key = (n - 2 * sum(state), loops)
        tally[key] = tally.get(key, 0) + 1
    out = LaurentPoly()
    for (a_exp, loops), count in tally.items():
        out = out + LaurentPoly({a_exp: count}) * (DELTA**loops)
    return out


def hopf_link() -> LinkDiagram:
    """Two-crossing Hopf link, PD[X[1,3,2,4], X[3,1,4,2]]."""
    return _from_pd([(1, 3, 2, 4), (3, 1, 4, 2)])


def unlink(k: int) -> LinkDiagram:
    """``k`` disjoint unknots without crossings."""
    return LinkDiagram([], {}, k)


def _from_pd(pd) -> LinkDiagram:
    ends: dict[int, list[Slot]] = {}
    for c, labels in enumerate(pd):
        for s, lab in enumerate(labels):
            ends.setdefault(lab, []).append((c, s))
    partner = {}
    for lab, pair in ends.items():
        if len(pair) != 2:
            raise KnotError(f"arc {lab} appears {len(pair)} times")
        partner[pair[0]] = pair[1]
        partner[pair[1]] = pair[0]
    link = LinkDiagram(list(range(len(pd))), partner)
    link.validate()
    return link


def from_pd(pd) -> LinkDiagram:
    return _from_pd([tuple(x) for x in pd])


# ---------------------------------------------------------------------------
# linking numbers


def crossing_signs(link: LinkDiagram) -> dict[int, tuple[int, int, int]]:
    """crossing -> (sign, under component, over component) for the traversal orientation."""
    comps = link.components()
    enter = {}
    for k, comp in enumerate(comps):
        for c, s in comp:
            enter[(c, s)] = k
    out = {}
    for c in link.crossings:
        under_in = 0 if (c, 0) in enter else 2
        over_in = 1 if (c, 1) in enter else 3
        sign = 1 if (under_in, over_in) in ((0, 3), (2, 1)) else -1
        out[c] = (sign, enter[(c, under_in)], enter[(c, over_in)])
    return out


def linking_matrix(link: LinkDiagram) -> dict[tuple[int, int], Fraction]:
    """Pairwise linking numbers between components (indices of ``components()``)."""
    lk: dict[tuple[int, int], Fraction] = {}
    for sign, a, b in crossing_signs(link).values():
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        lk[key] = lk.get(key, Fraction(0)) + Fraction(sign, 2)
    return {k: v for k, v in lk.items() if v}


def linking_number(link: LinkDiagram, a: int, b: int) -> Fraction:
    return linking_matrix(link).get((min(a, b), max(a, b)), Fraction(0))


# ---------------------------------------------------------------------------
# Z_2 from the link


@dataclass
class Z2Check:
    ok: bool
    from_link: object  # Fraction when exact
    from_reduction: Fraction | None
    from_numeric: float | None
    components: int
    crossings_after_rii: int


def z2_check(spec: BaseGateSpec, m: int, n: int, d: int = 2, numeric: bool = True, seed: int = 0) -> Z2Check:
    """Compare the bracket evaluation of the link with reduction and the dense oracle."""
    diag = build_zalpha(spec, m, n)
    link = link_from_diagram(diag)
    unl = rii_unlink(link)
    bracket = kauffman_bracket(unl.remaining)
    value = bracket.evaluate(d)
    z_link = value * Fraction(1, d) ** terminal_count(diag)
    res = reduce_boundary(diag)
    z_red = Fraction(1, d) ** res.raw_overlaps if res.fully_reduced else None
    z_num = None
    if numeric:
        from .numeric import contract_z_numeric

        z_num = contract_z_numeric(spec, m, n, alpha=2, d=d, seed=seed)
    ok = True
    if z_red is not None:
        ok &= z_link == z_red
    if z_num is not None:
        ok &= abs(complex(z_link) - z_num) < 1e-9
    return Z2Check(ok, z_link, z_red, z_num, unl.components, unl.remaining.num_crossings)

