"""Folded Z_alpha diagrams and their reduction by (dual-)unitarity rewrites.

Geometry.  ``Z_alpha(m, n)`` is built from ``m x n`` base cells; cell
``(i, j)`` sits at time ``i + j`` on q-qudits ``(i - j, i - j + 1)``.  Its left
output feeds the right input of ``(i, j + 1)`` and its right output the left
input of ``(i + 1, j)``.  Open legs are closed by permutation states: the two
left edges of the diamond (lower-left inputs, upper-left outputs) carry
``Label.CIRCLE`` and the two right edges ``Label.SQUARE``.  The ray coordinates
are ``x = m - n`` and ``t = m + n``.

Rewrites (all exact for any Renyi index; alpha never enters):

* R1 unitarity -- both outputs (or both inputs) of a node end in the same label:
  the node is removed and the label is handed to the opposite pair;
* R2 dual-unitarity -- the same for the two left (or two right) ports;
* R3 SWAP passthrough -- a SWAP node is dissolved into two crossing wires;
* R4 overlap -- two terminals meeting on a wire are absorbed; unequal labels
  add one to the overlap count.

A fully reduced diagram evaluates to ``Z_alpha = d ** (-(alpha - 1) * overlaps)``.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Callable, Iterable

from .gates import Label
from .lattice import BaseGateSpec, LatticeError, uncompress

IL, IR, OL, OR = 0, 1, 2, 3
PORT_NAMES = ("in-left", "in-right", "out-left", "out-right")
GENERIC, SWAP = "GENERIC", "SWAP"
DEFAULT_MAX_NODES = 10_000

# (pair that must agree, pair that receives the label)
_RULES = (
    ("R1", (OL, OR), (IL, IR)),
    ("R1", (IL, IR), (OL, OR)),
    ("R2", (IL, OL), (IR, OR)),
    ("R2", (IR, OR), (IL, OL)),
)
_SWAP_PAIRS = ((IL, OR), (IR, OL))


class DiagramError(ValueError):
    pass


@dataclass(frozen=True)
class Term:
    label: Label


@dataclass(frozen=True)
class Port:
    node: int
    port: int


Endpoint = Term | Port


@dataclass
class Node:
    tag: str
    ports: list  # four Endpoints
    pos: tuple  # (i, j, k): cell and placement index, or a free-form key
    xy: tuple = (0.0, 0.0)  # planar drawing coordinates (x, time)


@dataclass
class FoldedDiagram:
    d: int
    N: int
    m: int
    n: int
    nodes: dict[int, Node]
    overlaps: int = 0  # unequal labels on terminal-terminal wires already present
    scale: Fraction = Fraction(1)  # converts overlaps to d-leg units of the drawn cell
    name: str = ""
    free_wires: int = 0  # terminal-terminal wires (equal or not) that meet no node

    def copy(self) -> "FoldedDiagram":
        nodes = {k: Node(v.tag, list(v.ports), v.pos, v.xy) for k, v in self.nodes.items()}
        return FoldedDiagram(
            self.d, self.N, self.m, self.n, nodes, self.overlaps, self.scale, self.name, self.free_wires
        )

    # -- inspection -------------------------------------------------------
    def terminals(self) -> list[tuple[int, int, Label]]:
        return [
            (nid, p, ep.label)
            for nid, nd in self.nodes.items()
            for p, ep in enumerate(nd.ports)
            if isinstance(ep, Term)
        ]

    def edges(self) -> list[tuple[Port, Port]]:
        out = []
        for nid, nd in self.nodes.items():
            for p, ep in enumerate(nd.ports):
                if isinstance(ep, Port) and (nid, p) < (ep.node, ep.port):
                    out.append((Port(nid, p), ep))
        return out

    def validate(self) -> None:
        for nid, nd in self.nodes.items():
            if len(nd.ports) != 4:
                raise DiagramError(f"node {nid} has {len(nd.ports)} ports")
            for p, ep in enumerate(nd.ports):
                if isinstance(ep, Port):
                    back = self.nodes[ep.node].ports[ep.port]
                    if back != Port(nid, p):
                        raise DiagramError(f"dangling wire at node {nid} port {p}")
                elif not isinstance(ep, Term):
                    raise DiagramError(f"node {nid} port {p} is unattached")

    def with_tags(self, tag_of: Callable[[Node], str]) -> "FoldedDiagram":
        out = self.copy()
        for nd in out.nodes.values():
            nd.tag = tag_of(nd)
        return out

    def to_json(self) -> dict:
        def ep(e):
            if isinstance(e, Term):
                return {"label": e.label.value}
            return {"node": e.node, "port": PORT_NAMES[e.port]}

        return {
            "d": self.d,
            "N": self.N,
            "m": self.m,
            "n": self.n,
            "name": self.name,
            "overlaps": self.overlaps,
            "free_wires": self.free_wires,
            "scale": f"{self.scale.numerator}/{self.scale.denominator}",
            "nodes": [
                {
                    "id": nid,
                    "tag": nd.tag,
                    "pos": list(nd.pos),
                    "xy": list(nd.xy),
                    "ports": {PORT_NAMES[p]: ep(e) for p, e in enumerate(nd.ports)},
                }
                for nid, nd in sorted(self.nodes.items())
            ],
        }

    @classmethod
    def from_json(cls, rec: dict) -> "FoldedDiagram":
        nodes = {}
        for item in rec["nodes"]:
            ports = []
            for pname in PORT_NAMES:
                e = item["ports"][pname]
                if "label" in e:
                    ports.append(Term(Label(e["label"])))
                else:
                    ports.append(Port(int(e["node"]), PORT_NAMES.index(e["port"])))
            nodes[int(item["id"])] = Node(item["tag"], ports, tuple(item["pos"]), tuple(item["xy"]))
        num, den = rec.get("scale", "1/1").split("/")
        return cls(
            rec["d"], rec["N"], rec["m"], rec["n"], nodes, rec["overlaps"],
            Fraction(int(num), int(den)), rec.get("name", ""), rec.get("free_wires", 0),
        )


# ---------------------------------------------------------------------------
# construction


def build_zalpha(
    spec: BaseGateSpec,
    m: int,
    n: int,
    tag: Callable[[tuple], str] | None = None,
    max_nodes: int = DEFAULT_MAX_NODES,
) -> FoldedDiagram:
    """Light-cone-trimmed folded diagram of ``Z_alpha(m, n)``.

    ``tag(pos)`` chooses GENERIC or SWAP for the node at ``pos = (i, j, k)``;
    the default makes every node GENERIC.  CHM-compressed cells are built on
    their DU parent (see :func:`dulattice.lattice.compress`); one parent
    overlap is then worth ``N_cell / N_parent`` legs of the compressed cell.
    """
    if m < 1 or n < 1:
        raise DiagramError("m and n must be >= 1")
    parent = uncompress(spec)
    scale = Fraction(spec.N, parent.N)
    bonds = [[p.pos for p in layer] for layer in parent.layers]
    per_cell = sum(map(len, bonds))
    if m * n * per_cell > max_nodes:
        raise DiagramError(f"diagram would have {m * n * per_cell} nodes (cap {max_nodes})")
    N, P = parent.N, parent.legs
    tag = tag or (lambda pos: GENERIC)

    nodes: dict[int, Node] = {}
    # wires are recorded between "sockets": node ports, cell-boundary slots, terminals
    links: dict = {}

    def link(a, b):
        links.setdefault(a, []).append(b)
        links.setdefault(b, []).append(a)

    nid = 0
    for i in range(m):
        for j in range(n):
            cur = [("cin", i, j, leg) for leg in range(P)]
            k = 0
            sub = 0
            for layer in bonds:
                for b in layer:
                    x0 = (i - j) * N + b + 0.5
                    nodes[nid] = Node("", [None] * 4, (i, j, k), (x0, (i + j) * len(bonds) + sub))
                    nodes[nid].tag = tag((i, j, k))
                    if nodes[nid].tag not in (GENERIC, SWAP):
                        raise DiagramError(f"unknown node tag {nodes[nid].tag!r}")
                    link(cur[b], ("n", nid, IL))
                    link(cur[b + 1], ("n", nid, IR))
                    cur[b], cur[b + 1] = ("n", nid, OL), ("n", nid, OR)
                    nid += 1
                    k += 1
                sub += 1
            for leg in range(P):
                link(cur[leg], ("cout", i, j, leg))
    # cell boundaries
    for i in range(m):
        for j in range(n):
            for leg in range(P):
                if leg < N:
                    src = ("cout", i - 1, j, leg + N) if i > 0 else ("t", Label.CIRCLE)
                    dst = ("cin", i, j + 1, leg + N) if j < n - 1 else ("t", Label.CIRCLE)
                else:
                    src = ("cout", i, j - 1, leg - N) if j > 0 else ("t", Label.SQUARE)
                    dst = ("cin", i + 1, j, leg - N) if i < m - 1 else ("t", Label.SQUARE)
                if src[0] == "t":
                    links.setdefault(("cin", i, j, leg), []).append(src)
                if dst[0] == "t":
                    links.setdefault(("cout", i, j, leg), []).append(dst)
                else:
                    link(("cout", i, j, leg), dst)

    def follow(start, prev):
        cur, p = start, prev
        while cur[0] in ("cin", "cout"):
            nxt = [x for x in links[cur] if x != p]
            if len(nxt) != 1:  # pragma: no cover - construction invariant
                raise DiagramError(f"slot {cur} has degree {len(links[cur])}")
            p, cur = cur, nxt[0]
        return cur

    for nd_id, nd in nodes.items():
        for p in range(4):
            key = ("n", nd_id, p)
            (nb,) = links[key]
            end = follow(nb, key)
            nd.ports[p] = Term(end[1]) if end[0] == "t" else Port(end[1], end[2])

    # wires running from terminal to terminal without meeting a node
    overlaps = 0
    free = 0
    seen = set()
    for key, lst in links.items():
        if key[0] not in ("cin", "cout"):
            continue
        for t in lst:
            if t[0] != "t" or (key, t) in seen:
                continue
            cur, p = key, t
            while cur[0] in ("cin", "cout"):
                nxt = [x for x in links[cur] if x != p]
                p, cur = cur, nxt[0]
            if cur[0] == "t":
                overlaps += cur[1] is not t[1]
                free += 1
                seen.add((p, cur))
            seen.add((key, t))
    diag = FoldedDiagram(spec.d, spec.N, m, n, nodes, overlaps, scale, spec.name, free)
    return diag


# ---------------------------------------------------------------------------
# reduction


@dataclass(frozen=True)
class Step:
    rule: str  # R1, R2, R3
    node: int
    label: str | None  # label moved by R1/R2
    overlaps: int  # unequal-label overlaps created by this step


@dataclass
class ReductionResult:
    status: str  # "fully-reduced" or "stuck"
    overlaps: int  # in leg units of the drawn cell
    raw_overlaps: int  # in leg units of the (parent) DU diagram
    residual: FoldedDiagram
    trace: list[Step] = field(default_factory=list)

    @property
    def fully_reduced(self) -> bool:
        return self.status == "fully-reduced"

    def z_alpha(self, alpha: float, d: int | None = None) -> float:
        """``d**(-(alpha-1) * overlaps)``; only meaningful when fully reduced."""
        if not self.fully_reduced:
            raise DiagramError("diagram is stuck; use the numeric oracle")
        d = d or self.residual.d
        return float(d) ** (-(alpha - 1) * self.overlaps)

    def exponent(self) -> Fraction:
        """Exponent ``e`` with ``Z_alpha = d**(-(alpha-1) e)`` (fully reduced only)."""
        return Fraction(self.overlaps)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "overlaps": self.overlaps,
            "residual_nodes": len(self.residual.nodes),
        }


class _Reducer:
    def __init__(self, diag: FoldedDiagram):
        self.g = diag.copy()
        self.count = diag.overlaps
        self.trace: list[Step] = []

    def _hand(self, ep: Endpoint, label: Label) -> tuple[int, int | None]:
        """Give ``label`` to whatever ``ep`` is attached to; returns (overlap, touched)."""
        if isinstance(ep, Term):
            return int(ep.label is not label), None
        self.g.nodes[ep.node].ports[ep.port] = Term(label)
        return 0, ep.node

    def applicable(self, nid: int):
        nd = self.g.nodes.get(nid)
        if nd is None:
            return None
        if nd.tag == SWAP:
            return ("R3", None, None)
        for rule, (a, b), recv in _RULES:
            pa, pb = nd.ports[a], nd.ports[b]
            if isinstance(pa, Term) and isinstance(pb, Term) and pa.label is pb.label:
                return (rule, pa.label, recv)
        return None

    def fire(self, nid: int, how) -> list[int]:
        rule, label, recv = how
        nd = self.g.nodes.pop(nid)
        touched = []
        created = 0
        if rule == "R3":
            for a, b in _SWAP_PAIRS:
                pa, pb = nd.ports[a], nd.ports[b]
                if isinstance(pa, Term) and isinstance(pb, Term):
                    created += int(pa.label is not pb.label)
                elif isinstance(pa, Term):
                    self.g.nodes[pb.node].ports[pb.port] = pa
                    touched.append(pb.node)
                elif isinstance(pb, Term):
                    self.g.nodes[pa.node].ports[pa.port] = pb
                    touched.append(pa.node)
                else:
                    self.g.nodes[pa.node].ports[pa.port] = pb
                    self.g.nodes[pb.node].ports[pb.port] = pa
                    touched += [pa.node, pb.node]
        else:
            for p in recv:
                c, t = self._hand(nd.ports[p], label)
                created += c
                if t is not None:
                    touched.append(t)
        self.count += created
        self.trace.append(Step(rule, nid, None if label is None else label.value, created))
        return touched

    def run(self, order: list[int]) -> None:
        queue = deque(order)
        queued = set(order)
        while queue:
            nid = queue.popleft()
            queued.discard(nid)
            how = self.applicable(nid)
            if how is None:
                continue
            for t in self.fire(nid, how):
                if t not in queued:
                    queue.append(t)
                    queued.add(t)


def boundary_order(diag: FoldedDiagram) -> list[int]:
    """Nodes sorted by distance to the diamond boundary (outermost first)."""

    def key(nid):
        pos = diag.nodes[nid].pos
        ring = 0  # abstract diagrams (no cell coordinates) form a single ring
        if len(pos) >= 2:
            i, j = pos[:2]
            ring = min(i, j, diag.m - 1 - i, diag.n - 1 - j)
        return (ring, diag.nodes[nid].xy[1], diag.nodes[nid].xy[0])

    return sorted(diag.nodes, key=key)


def reduce_boundary(
    diag: FoldedDiagram,
    seed: int | None = None,
    reverse: bool = False,
) -> ReductionResult:
    """Apply R1-R4 to fixpoint in boundary-scan order.

    ``seed`` shuffles the initial scan order; ``reverse`` scans inward-out.
    Each rewrite attempt removes a node or fails, and a failed node is only
    revisited after a neighbour changed, so the work is O(#nodes^2) at worst.
    """
    diag.validate()
    order = boundary_order(diag)
    if reverse:
        order.reverse()
    if seed is not None:
        random.Random(seed).shuffle(order)
    red = _Reducer(diag)
    red.run(order)
    return _result(diag, red)


def _result(diag: FoldedDiagram, red: _Reducer) -> ReductionResult:
    raw = red.count
    scaled = raw * diag.scale
    status = "fully-reduced" if not red.g.nodes else "stuck"
    if status == "fully-reduced" and scaled.denominator != 1:
        raise DiagramError(f"non-integer overlap count {scaled} for compressed cell")
    overlaps = int(scaled) if scaled.denominator == 1 else int(raw)
    return ReductionResult(status, overlaps, raw, red.g, red.trace)


def replay(diag: FoldedDiagram, trace: Iterable[Step]) -> ReductionResult:
    """Re-apply a recorded trace to a fresh copy, checking each step."""
    red = _Reducer(diag)
    for step in trace:
        how = red.applicable(step.node)
        if how is None or how[0] != step.rule:
            raise DiagramError(f"step {step} is not applicable during replay")
        red.fire(step.node, how)
    return _result(diag, red)


def reduce_lattice(spec: BaseGateSpec, m: int, n: int, **kw) -> ReductionResult:
    return reduce_boundary(build_zalpha(spec, m, n, **kw))


def is_completely_reducible(spec: BaseGateSpec, m: int, n: int) -> bool:
    return reduce_lattice(spec, m, n).fully_reduced


def overlap_count(spec: BaseGateSpec, m: int, n: int) -> int:
    res = reduce_lattice(spec, m, n)
    if not res.fully_reduced:
        raise DiagramError(f"{spec.name} is not reducible at (m, n) = ({m}, {n})")
    return res.overlaps


# ---------------------------------------------------------------------------
# line tension from reduction


def ray_direction(v: Fraction) -> tuple[int, int]:
    """Smallest integer step (dm, dn) along the ray ``x = v t``."""
    v = Fraction(v)
    if abs(v) > 1:
        raise DiagramError("rays outside the light cone have no diamond")
    p, q = v.numerator, v.denominator
    a, b = q + p, q - p
    g = gcd(a, b)
    return a // g, b // g


def ray_points(v, t_list: Iterable[int]) -> list[tuple[int, int]]:
    """Diamond sizes ``(m, n)`` on the ray ``x = v t`` for each ``t``.

    Sizes are clamped to ``m, n >= 1``; on the edge rays ``v = +-1`` this
    adds a constant offset, which cancels in successive differences.
    """
    v = Fraction(v)
    out = []
    for t in t_list:
        x = v * t
        if x.denominator != 1 or (t + x) % 2:
            raise DiagramError(f"t={t} has no lattice point on the ray v={v}")
        m, n = int((t + x) // 2), int((t - x) // 2)
        out.append((max(m, 1), max(n, 1)))
    return out


def elt_from_reduction(
    spec: BaseGateSpec,
    v,
    t_list: Iterable[int] | None = None,
    min_steps: int = 3,
) -> Fraction:
    """Line tension along ``x = v t`` from successive overlap differences.

    Each ``t`` in ``t_list`` picks a diamond on the ray (see
    :func:`ray_points`); ``E = Delta overlaps / (N_cell * Delta t)`` and the
    value is accepted once the last two differences agree (a single
    difference is accepted when only two sizes are given).  Without
    ``t_list`` the diamonds ``(1, 1) + k (dm, dn)``, ``k = 0..min_steps``,
    are used.
    """
    v = Fraction(v)
    if t_list is None:
        a, b = ray_direction(v)
        sizes = [(1 + k * a, 1 + k * b) for k in range(min_steps + 1)]
    else:
        sizes = ray_points(v, sorted(set(t_list)))
    if len(sizes) < 2:
        raise DiagramError("need at least two diamond sizes")
    counts = []
    for m, n in sizes:
        res = reduce_lattice(spec, m, n)
        if not res.fully_reduced:
            raise DiagramError(
                f"{spec.name} is stuck at (m, n) = ({m}, {n}); no line tension from reduction"
            )
        counts.append(res.overlaps)
    rates = [
        Fraction(c1 - c0, spec.N * ((m1 + n1) - (m0 + n0)))
        for (m0, n0), (m1, n1), c0, c1 in zip(sizes, sizes[1:], counts, counts[1:])
    ]
    if len(rates) > 1 and rates[-1] != rates[-2]:
        raise DiagramError(f"overlap rates {rates} have not stabilised")
    return rates[-1]
