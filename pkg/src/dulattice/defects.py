"""Defects in a SWAP background and obstructions to complete reducibility.

Every placement of the lattice is made a SWAP except for ``k`` chosen
positions, which are GENERIC.  If the reduction gets stuck and reverting any
single defect to a SWAP makes it reducible, the residual is a *k-body
irreducible* diagram.  Residuals are classified by isomorphism against a small
catalogue: the N-gate ladder (``one-body`` for one gate, ``two-body-ii`` for
two), two gates sharing two wires (``two-body-i``) and an extra four-gate
diagram that is not a ladder.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb, lcm

from .diagram import (
    GENERIC,
    IL,
    IR,
    OL,
    OR,
    SWAP,
    FoldedDiagram,
    Node,
    Port,
    Term,
    build_zalpha,
    reduce_boundary,
)
from .gates import Label
from .lattice import BaseGateSpec, uncompress, worldline_cycles

MAX_SUBSETS = 10**6
C, S = Label.CIRCLE, Label.SQUARE


class DefectError(ValueError):
    pass


@dataclass
class Obstruction:
    positions: tuple[tuple, ...]  # (i, j, k) of the GENERIC defects
    pattern: str
    residual: FoldedDiagram
    overlaps: int  # unequal overlaps collected before getting stuck
    x: tuple[Fraction, ...]  # defect positions relative to the diamond centre, in q-qudits

    def to_json(self) -> dict:
        return {
            "positions": [list(p) for p in self.positions],
            "pattern": self.pattern,
            "overlaps": self.overlaps,
            "x": [str(v) for v in self.x],
            "residual": self.residual.to_json(),
        }


def _is_stuck(diag: FoldedDiagram) -> bool:
    return not reduce_boundary(diag).fully_reduced


def has_self_loop(diag: FoldedDiagram) -> bool:
    """A node wired to itself -- forbidden by unitarity in any circuit diagram."""
    return any(
        isinstance(ep, Port) and ep.node == nid
        for nid, nd in diag.nodes.items()
        for ep in nd.ports
    )


def is_kbody_irreducible(diag: FoldedDiagram) -> bool:
    """Stuck, but reducible once any single GENERIC node becomes a SWAP."""
    if not _is_stuck(diag):
        return False
    generic = [nid for nid, nd in diag.nodes.items() if nd.tag == GENERIC]
    for nid in generic:
        trial = diag.copy()
        trial.nodes[nid].tag = SWAP
        if _is_stuck(trial):
            return False
    return True


def defect_diagram(spec: BaseGateSpec, m: int, n: int, positions) -> FoldedDiagram:
    chosen = set(map(tuple, positions))
    diag = build_zalpha(spec, m, n, tag=lambda pos: GENERIC if pos in chosen else SWAP)
    if has_self_loop(diag):  # pragma: no cover - brickwork diagrams are acyclic in time
        raise DefectError("generator produced a self-connected gate")
    return diag


def defect_x(diag: FoldedDiagram, nid: int) -> Fraction:
    """Horizontal offset of a node from the diamond's vertical centre line, in q-qudits."""
    nd = diag.nodes[nid]
    # the centre bond b = N - 1 of a cell on the central column sits at N - 1/2
    centre = Fraction(diag.m - diag.n, 2) * diag.N + diag.N - Fraction(1, 2)
    return (Fraction(nd.xy[0]).limit_denominator(4) - centre) / diag.N


def scan_kbody(spec: BaseGateSpec, m: int, n: int, k: int) -> list[Obstruction]:
    """All k-body irreducible defect configurations at diamond size ``(m, n)``."""
    if k < 1:
        raise DefectError("k must be >= 1")
    spec = uncompress(spec)
    base = build_zalpha(spec, m, n)
    positions = sorted(nd.pos for nd in base.nodes.values())
    total = comb(len(positions), k)
    if total > MAX_SUBSETS:
        raise DefectError(f"{total} subsets exceed the exhaustive-scan bound {MAX_SUBSETS}")
    pos_to_id = {nd.pos: nid for nid, nd in base.nodes.items()}
    found = []
    for subset in itertools.combinations(positions, k):
        chosen = set(subset)
        diag = base.with_tags(lambda nd: GENERIC if nd.pos in chosen else SWAP)
        res = reduce_boundary(diag)
        if res.fully_reduced or not is_kbody_irreducible(diag):
            continue
        xs = tuple(defect_x(diag, pos_to_id[p]) for p in subset)
        found.append(Obstruction(subset, classify(res.residual), res.residual, res.raw_overlaps, xs))
    return found


# ---------------------------------------------------------------------------
# catalogue


def _diagram(count: int, links, labels, name: str) -> FoldedDiagram:
    """Abstract diagram of ``count`` GENERIC nodes.

    ``links`` are ``(a, out_port, b, in_port)`` wires; the remaining ports, in
    node-then-port order, receive ``labels``.
    """
    nodes = {k: Node(GENERIC, [None] * 4, (k,), (float(k), float(k))) for k in range(count)}
    for a, po, b, pi in links:
        nodes[a].ports[po] = Port(b, pi)
        nodes[b].ports[pi] = Port(a, po)
    it = iter(labels)
    for k in range(count):
        for p in range(4):
            if nodes[k].ports[p] is None:
                nodes[k].ports[p] = Term(next(it))
    diag = FoldedDiagram(2, 1, 1, 1, nodes, 0, Fraction(1), name)
    diag.validate()
    return diag


def family_pattern(N: int) -> FoldedDiagram:
    """N-gate ladder: gate k's out-left feeds gate k+1's in-left.

    All right inputs see Square and all right outputs Circle, the first
    in-left sees Circle and the last out-left Square.  For ``N = 1`` this is
    the single-gate obstruction.
    """
    if N < 1:
        raise DefectError("ladder needs at least one gate")
    links = [(k, OL, k + 1, IL) for k in range(N - 1)]
    labels = []
    for k in range(N):
        if k == 0:
            labels.append(C)  # IL
        labels.append(S)  # IR
        if k == N - 1:
            labels.append(S)  # OL
        labels.append(C)  # OR
    diag = _diagram(N, links, labels, f"ladder-{N}")
    if not is_kbody_irreducible(diag):  # pragma: no cover - construction invariant
        raise DefectError(f"ladder of {N} gates is not {N}-body irreducible")
    return diag


def special_four_body() -> FoldedDiagram:
    """Four-gate irreducible diagram outside the ladder family."""
    links = [(0, OL, 1, IL), (0, OR, 2, IL), (1, OL, 3, IL), (2, OL, 3, IR)]
    labels = [C, S, S, C, C, S, S, C]
    diag = _diagram(4, links, labels, "four-body-special")
    if not is_kbody_irreducible(diag):  # pragma: no cover
        raise DefectError("special four-gate diagram is reducible")
    return diag


def _shape(diag: FoldedDiagram, order, flip: bool):
    rank = {nid: r for r, nid in enumerate(order)}
    out = []
    for nid in order:
        row = []
        for ep in diag.nodes[nid].ports:
            if isinstance(ep, Term):
                row.append(("t", ep.label.flip() if flip else ep.label))
            else:
                row.append(("n", rank[ep.node], ep.port))
        out.append(tuple(row))
    return tuple(out)


def isomorphic(a: FoldedDiagram, b: FoldedDiagram) -> bool:
    """Port-preserving isomorphism up to relabelling nodes and swapping Circle/Square."""
    if len(a.nodes) != len(b.nodes) or len(a.nodes) > 7:
        return False
    ref = _shape(b, sorted(b.nodes), False)
    return any(
        _shape(a, perm, flip) == ref
        for perm in itertools.permutations(sorted(a.nodes))
        for flip in (False, True)
    )


def shared_edges(diag: FoldedDiagram) -> int:
    return len(diag.edges())


def classify(residual: FoldedDiagram) -> str:
    size = len(residual.nodes)
    if size == 1 and isomorphic(residual, family_pattern(1)):
        return "one-body"
    if size == 2:
        if isomorphic(residual, family_pattern(2)):
            return "two-body-ii"
        if shared_edges(residual) == 2:
            return "two-body-i"
        return "other"
    if 3 <= size <= 7 and isomorphic(residual, family_pattern(size)):
        return f"ladder-{size}"
    if size == 4 and isomorphic(residual, special_four_body()):
        return "four-body-special"
    return "other"


# ---------------------------------------------------------------------------
# crossing v = 0 worldlines


@dataclass(frozen=True)
class CrossingWitness:
    legs: tuple[int, int]  # entry legs (within a cell) of the A-side and the B-side worldline
    cut: int  # q-qudit boundary, between d-legs cut-1 and cut (unwrapped ring coordinate)
    layers: tuple[int, int, int]  # (t0, meeting layer, t1)

    def to_json(self) -> dict:
        return {"legs": list(self.legs), "cut": self.cut, "layers": list(self.layers)}


def crossing_v0_witness(spec: BaseGateSpec, cells: int = 6) -> CrossingWitness | None:
    """Stationary worldlines that cross each other across the bipartition.

    The SWAP circuit is run on a ring of ``cells`` base gates.  A witness is a
    pair of v=0 worldlines, a q-qudit boundary ``cut`` and layer boundaries
    ``t0 < t1`` such that one worldline is left of the cut and the other right
    of it at both ``t0`` and ``t1``, while the two meet at a gate in between.
    Cut at ``t0`` and ``t1``, the first connects Circle to Circle and the second
    Square to Square, and their meeting obstructs the reduction.  Stationary
    worldlines that only cross each other while staying on one side at every
    layer boundary are harmless.
    """
    spec = uncompress(spec)
    N, P = spec.N, spec.legs
    cycles = worldline_cycles(spec)
    still = {leg for w in cycles if w.velocity == 0 for leg in w.legs}
    if not still:
        return None
    period = lcm(*(len(w.legs) for w in cycles))
    T = 3 * period
    L = cells * P
    occ = list(range(L))
    walkers = [p for p in range(L) if p % P in still]
    # unwrapped positions at layer boundaries; stationary worldlines never wrap
    pos = {p: p for p in walkers}
    hist = {p: [p] for p in walkers}
    meets = []
    bonds = [[p.pos for p in layer] for layer in spec.layers]
    for t in range(T):
        off = 0 if t % 2 == 0 else N
        for layer in bonds:
            for c in range(cells):
                for b in layer:
                    a = (off + c * P + b) % L
                    z = (a + 1) % L
                    pa, pz = occ[a], occ[z]
                    occ[a], occ[z] = pz, pa
                    if pa in pos:
                        pos[pa] += 1
                    if pz in pos:
                        pos[pz] -= 1
                    if pa in pos and pz in pos and period <= t < 2 * period:
                        meets.append((pa, pz, t))
        for p in walkers:
            hist[p].append(pos[p])
    for pa, pz, t in meets:
        lo = min(min(hist[pa]), min(hist[pz]))
        hi = max(max(hist[pa]), max(hist[pz]))
        for cut in range(-(-lo // N) * N, hi + 1, N):
            for left, right in ((pa, pz), (pz, pa)):
                before = [t0 for t0 in range(t + 1) if hist[left][t0] < cut <= hist[right][t0]]
                after = [t1 for t1 in range(t + 1, T + 1) if hist[left][t1] < cut <= hist[right][t1]]
                if before and after:
                    return CrossingWitness((left % P, right % P), cut, (before[-1], t, after[0]))
    return None


def crossing_v0(spec: BaseGateSpec) -> bool:
    return crossing_v0_witness(spec) is not None
