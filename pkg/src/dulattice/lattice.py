"""Base gates (lattice unit cells), worldline tracing and the builtin library.

A base gate acts on ``2N`` d-qudit legs, numbered ``0 .. 2N-1`` from left to
right; legs ``0..N-1`` form the left composite q-qudit and ``N..2N-1`` the
right one (``q = d**N``).  It is a list of layers, ordered bottom (earliest)
to top, each a set of placements:

* ``du`` on bond ``b`` -- a dual-unitary gate on legs ``(b, b+1)``;
* ``chm`` on site ``k`` -- a single-site complex Hadamard ``H / sqrt(d)``;
* ``cphase`` on bond ``b`` -- the diagonal gate ``|ab> -> H_ab |ab>``.

Base gates are tiled in brickwork: layer ``t`` of base gates is shifted by one
q-qudit relative to layer ``t-1``.  Units: one time step is one brickwork
layer of base gates, one space step is one q-qudit, so the light cone is
``|v| = 1``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .gates import (
    ComplexHadamard,
    TwoSiteGate,
    is_unitary,
    operator_schmidt_spectrum,
    random_chm,
    random_dual_unitary,
    schmidt_rank_of,
    swap,
)

MAX_DENSE_DIM = 4096
PLACEMENT_KINDS = ("du", "chm", "cphase")


class LatticeError(ValueError):
    """Raised for malformed base gates or unsupported requests."""


@dataclass(frozen=True, order=True)
class Placement:
    kind: str
    pos: int

    def __post_init__(self):
        if self.kind not in PLACEMENT_KINDS:
            raise LatticeError(f"unknown placement kind {self.kind!r}")

    @property
    def legs(self) -> tuple[int, ...]:
        if self.kind == "chm":
            return (self.pos,)
        return (self.pos, self.pos + 1)

    def token(self) -> str:
        if self.kind == "du":
            return f"({self.pos})"
        if self.kind == "chm":
            return f"chm@{self.pos}"
        return f"cphase@{self.pos}"


@dataclass(frozen=True, eq=False)
class BaseGateSpec:
    """A layered placement of gates on ``2N`` legs of dimension ``d``."""

    d: int
    N: int
    layers: tuple[tuple[Placement, ...], ...]
    name: str = "custom"
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.d < 2:
            raise LatticeError("local dimension must be >= 2")
        if self.N < 1:
            raise LatticeError("N must be >= 1")
        layers = tuple(tuple(sorted(layer)) for layer in self.layers)
        if not layers or not any(layers):
            raise LatticeError("a base gate needs at least one placement")
        for t, layer in enumerate(layers):
            used: dict[int, str] = {}
            for p in layer:
                for leg in p.legs:
                    if not 0 <= leg < 2 * self.N:
                        raise LatticeError(f"placement {p.token()} in layer {t} leaves the cell")
                    # diagonal controlled phases commute and may share legs
                    if leg in used and not (used[leg] == p.kind == "cphase"):
                        raise LatticeError(f"overlapping placements on leg {leg} in layer {t}")
                    used[leg] = p.kind
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def legs(self) -> int:
        return 2 * self.N

    @property
    def q(self) -> int:
        return self.d**self.N

    @property
    def placements(self) -> list[Placement]:
        return [p for layer in self.layers for p in layer]

    @property
    def is_compressed(self) -> bool:
        return any(p.kind != "du" for p in self.placements)

    def bond_layers(self) -> list[list[int]]:
        """Bonds of the ``du`` placements, layer by layer."""
        if self.is_compressed:
            raise LatticeError(f"{self.name} contains CHM placements")
        return [[p.pos for p in layer] for layer in self.layers]

    def __repr__(self) -> str:
        return f"BaseGateSpec({self.name!r}, d={self.d}, N={self.N}, gates={len(self.placements)})"


def spec_from_bonds(
    N: int, bonds: Sequence[Sequence[int]], d: int = 2, name: str = "custom", **meta
) -> BaseGateSpec:
    layers = tuple(tuple(Placement("du", b) for b in layer) for layer in bonds)
    return BaseGateSpec(d, N, layers, name, meta)


# ---------------------------------------------------------------------------
# text format

_TOKEN = re.compile(r"\((\d+)\)|chm@(\d+)|cphase@(\d+)")


def format_dsl(spec: BaseGateSpec) -> str:
    lines = [f"# {spec.name}", f"dim {spec.d}", f"legs {spec.legs}"]
    for layer in spec.layers:
        lines.append("layer: " + " ".join(p.token() for p in layer))
    return "\n".join(lines) + "\n"


def parse_dsl(text: str, name: str = "custom") -> BaseGateSpec:
    d = legs = None
    layers: list[tuple[Placement, ...]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("dim"):
            d = int(line.split()[1])
        elif line.startswith("legs"):
            legs = int(line.split()[1])
        elif line.startswith("layer:"):
            body = line[len("layer:"):].strip()
            rest = _TOKEN.sub("", body).strip()
            if rest:
                raise LatticeError(f"line {lineno}: cannot parse {rest!r}")
            layer = []
            for du, chm, cph in _TOKEN.findall(body):
                if du:
                    layer.append(Placement("du", int(du)))
                elif chm:
                    layer.append(Placement("chm", int(chm)))
                else:
                    layer.append(Placement("cphase", int(cph)))
            layers.append(tuple(layer))
        else:
            raise LatticeError(f"line {lineno}: unknown directive {line!r}")
    if d is None or legs is None:
        raise LatticeError("DSL requires 'dim' and 'legs' lines")
    if legs % 2:
        raise LatticeError("number of legs must be even")
    return BaseGateSpec(d, legs // 2, tuple(layers), name)


# ---------------------------------------------------------------------------
# shading: DU cell <-> CHM-compressed cell


def compress(spec: BaseGateSpec, name: str | None = None) -> BaseGateSpec:
    """Checkerboard-shade the faces of a DU lattice and keep the shaded ones.

    Faces between legs ``(2k, 2k+1)`` are shaded and become the legs of the
    compressed cell.  A DU gate on an even bond closes and reopens one shaded
    face (single-site CHM); a DU gate on an odd bond sits between two shaded
    faces (controlled phase).  Requires even ``N``.
    """
    if spec.is_compressed:
        raise LatticeError("cell is already compressed")
    if spec.N % 2:
        raise LatticeError("compression needs an even number of legs per q-qudit")
    layers = []
    for layer in spec.layers:
        out = []
        for p in layer:
            if p.pos % 2 == 0:
                out.append(Placement("chm", p.pos // 2))
            else:
                out.append(Placement("cphase", (p.pos - 1) // 2))
        layers.append(tuple(out))
    meta = {k: v for k, v in spec.meta.items() if k in ("reducible",)}
    meta["parent"] = spec.name
    return BaseGateSpec(spec.d, spec.N // 2, tuple(layers), name or f"{spec.name}_chm", meta)


def uncompress(spec: BaseGateSpec) -> BaseGateSpec:
    """Inverse of :func:`compress`; DU cells are returned unchanged."""
    if not spec.is_compressed:
        return spec
    if any(p.kind == "du" for p in spec.placements):
        raise LatticeError("mixed DU/CHM cells are not supported")
    layers = []
    for layer in spec.layers:
        layers.append(
            tuple(Placement("du", 2 * p.pos if p.kind == "chm" else 2 * p.pos + 1) for p in layer)
        )
    parent = spec.meta.get("parent", f"{spec.name}_parent")
    return BaseGateSpec(spec.d, 2 * spec.N, tuple(layers), str(parent), dict(spec.meta))


# ---------------------------------------------------------------------------
# worldlines


@dataclass(frozen=True)
class FlowSpectrum:
    """Worldline velocities (q-qudits per layer) and multiplicities."""

    N: int
    entries: tuple[tuple[Fraction, int], ...]

    def __post_init__(self):
        total = sum(n for _, n in self.entries)
        if total != 2 * self.N:
            raise LatticeError(f"multiplicities sum to {total}, expected {2 * self.N}")
        for v, n in self.entries:
            if abs(v) > 1 or n <= 0:
                raise LatticeError(f"invalid flow entry ({v}, {n})")

    def as_dict(self) -> dict[Fraction, int]:
        return dict(self.entries)

    @property
    def velocities(self) -> list[Fraction]:
        return [v for v, _ in self.entries]

    def is_mirror_symmetric(self) -> bool:
        d = self.as_dict()
        return all(d.get(-v) == n for v, n in d.items())

    def to_json(self) -> list[dict]:
        return [{"v": _frac_str(v), "n": n} for v, n in self.entries]


def _frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def swap_permutation(spec: BaseGateSpec) -> list[int]:
    """``pi[i]`` = output leg reached by the particle entering on leg ``i``."""
    spec = uncompress(spec)
    occupant = list(range(spec.legs))
    for layer in spec.layers:
        for p in layer:
            b = p.pos
            occupant[b], occupant[b + 1] = occupant[b + 1], occupant[b]
    pi = [0] * spec.legs
    for pos, pid in enumerate(occupant):
        pi[pid] = pos
    return pi


@dataclass(frozen=True)
class Worldline:
    legs: tuple[int, ...]  # entry legs visited, one per layer of base gates
    velocity: Fraction


def worldline_cycles(spec: BaseGateSpec) -> list[Worldline]:
    """Orbits of the single-particle brickwork dynamics of the SWAP circuit.

    A particle leaving the cell on leg ``j`` enters the next layer's cell on
    leg ``(j + N) mod 2N``; its displacement is ``j - i`` d-legs.
    """
    spec = uncompress(spec)
    N, P = spec.N, spec.legs
    pi = swap_permutation(spec)
    seen: set[int] = set()
    out = []
    for start in range(P):
        if start in seen:
            continue
        legs, disp, i = [], 0, start
        for _ in range(8 * N + 1):
            seen.add(i)
            legs.append(i)
            disp += pi[i] - i
            i = (pi[i] + N) % P
            if i == start:
                break
        else:  # pragma: no cover - a permutation orbit always closes
            raise LatticeError("worldline did not recur within 8N layers")
        out.append(Worldline(tuple(legs), Fraction(disp, len(legs) * N)))
    return out


def trace_worldlines(spec: BaseGateSpec) -> FlowSpectrum:
    """Flow spectrum of the SWAP-substituted lattice.

    CHM-compressed cells report the spectrum of their DU parent, whose
    multiplicities count d-legs of the parent cell.
    """
    parent = uncompress(spec)
    counts: dict[Fraction, int] = {}
    for w in worldline_cycles(parent):
        counts[w.velocity] = counts.get(w.velocity, 0) + len(w.legs)
    return FlowSpectrum(parent.N, tuple(sorted(counts.items())))


def has_double_edge(spec: BaseGateSpec) -> bool:
    """True if two gates of the tiled lattice share two consecutive wires."""
    spec = uncompress(spec)
    N, P = spec.N, spec.legs
    width = 3 * P
    last: dict[int, int] = {}
    gid = 0
    for t in range(4):
        off = 0 if t % 2 == 0 else N
        for layer in spec.bond_layers():
            for k in range(3):
                for b in layer:
                    a = (off + k * P + b) % width
                    c = (a + 1) % width
                    if a in last and last[a] == last.get(c):
                        return True
                    last[a] = last[c] = gid
                    gid += 1
    return False


# ---------------------------------------------------------------------------
# dense composition

GateSource = str | Sequence | Callable[[int, Placement], np.ndarray] | None


def _apply(state: np.ndarray, mat: np.ndarray, legs: Sequence[int], d: int) -> np.ndarray:
    n = len(legs)
    first = legs[0]
    moved = np.moveaxis(state, list(range(first, first + n)), list(range(n)))
    shape = moved.shape
    moved = (mat @ moved.reshape(d**n, -1)).reshape(shape)
    return np.moveaxis(moved, list(range(n)), list(range(first, first + n)))


def placement_matrix(p: Placement, d: int, gate) -> np.ndarray:
    if isinstance(gate, TwoSiteGate):
        gate = gate.entries
    if isinstance(gate, ComplexHadamard):
        h = gate.entries
        if p.kind == "chm":
            return h / math.sqrt(d)
        if p.kind == "cphase":
            return np.diag(h.reshape(-1))
        raise LatticeError("a complex Hadamard cannot fill a DU placement")
    return np.asarray(gate, dtype=complex)


def sample_placement_gates(spec: BaseGateSpec, rng: np.random.Generator) -> list:
    """One fresh random gate per placement (DU gates or CHMs)."""
    out = []
    for p in spec.placements:
        if p.kind == "du":
            out.append(random_dual_unitary(spec.d, rng))
        else:
            out.append(random_chm(spec.d, rng))
    return out


def resolve_gates(spec: BaseGateSpec, gates: GateSource, seed=None) -> list[np.ndarray]:
    places = spec.placements
    if gates is None:
        gates = sample_placement_gates(spec, np.random.default_rng(seed))
    elif isinstance(gates, str):
        if gates != "swap":
            raise LatticeError(f"unknown gate source {gates!r}")
        if spec.is_compressed:
            raise LatticeError("SWAP substitution is defined for DU cells only")
        gates = [swap(spec.d)] * len(places)
    elif callable(gates):
        gates = [gates(k, p) for k, p in enumerate(places)]
    gates = list(gates)
    if len(gates) != len(places):
        raise LatticeError(f"expected {len(places)} gates, got {len(gates)}")
    return [placement_matrix(p, spec.d, g) for p, g in zip(places, gates)]


def compose_base_unitary(spec: BaseGateSpec, gates: GateSource = None, seed=None) -> TwoSiteGate:
    """Dense base gate on two q-qudits, ``q = d**N``."""
    dim = spec.d ** (2 * spec.N)
    if dim > MAX_DENSE_DIM:
        raise LatticeError(f"dense composition limited to dimension {MAX_DENSE_DIM}, got {dim}")
    mats = resolve_gates(spec, gates, seed)
    state = np.eye(dim, dtype=complex).reshape([spec.d] * spec.legs + [dim])
    for p, m in zip(spec.placements, mats):
        state = _apply(state, m, p.legs, spec.d)
    kind = "chm-composite" if spec.is_compressed else "generic"
    return TwoSiteGate(spec.q, state.reshape(dim, dim), kind)


def schmidt_rank(spec: BaseGateSpec, eps: float = 1e-9, gates: GateSource = None, seed=None) -> int:
    u = compose_base_unitary(spec, gates, seed)
    return schmidt_rank_of(operator_schmidt_spectrum(u), eps)


def check_unitary(spec: BaseGateSpec, seed=0) -> bool:
    return is_unitary(compose_base_unitary(spec, seed=seed), 1e-9)


# ---------------------------------------------------------------------------
# builtin library


def _square(N: int) -> list[list[int]]:
    """Rotated square of side N-1 centred on bond N-1, bottom gate first."""
    s, c = N - 1, N - 1
    layers = []
    for r in range(2 * s - 1):
        w = r + 1 if r < s else 2 * s - 1 - r
        layers.append([c - (w - 1) + 2 * k for k in range(w)])
    return layers


def family_u_bonds(N: int) -> list[list[int]]:
    body = _square(N)[1:]
    return [[0] + body[0] + [2 * N - 2]] + body[1:]


def family_v_bonds(N: int) -> list[list[int]]:
    c = N - 1
    return [[c - 2, c + 2]] + _square(N)[1:]


# name -> (N, bonds, metadata)
_LIBRARY: dict[str, tuple[int, list[list[int]], dict]] = {
    "du": (1, [[0]], {"reducible": True}),
    "kagome": (2, [[0, 2], [1]], {"reducible": True}),
    "nested_kagome": (4, [[0, 6], [1, 5], [2, 4], [1, 3, 5]], {"reducible": True}),
    "pyramid4": (4, [[0, 2, 4, 6], [1, 3, 5], [2, 4], [3]], {"reducible": True}),
    "rocket4": (4, [[1, 5], [2, 4], [1, 3, 5], [2, 4], [3]], {"reducible": True}),
    "fiveray": (5, [[2, 6], [3, 5], [2, 4, 6], [1, 3, 5, 7], [2, 4, 6]], {"reducible": True}),
    "pyramid3": (3, [[0, 2, 4], [1, 3], [2]], {"reducible": False}),
    "twoloc": (2, [[1], [0, 2], [1], [0, 2], [1]], {"reducible": False}),
    "threeunsolv": (3, [[0, 2, 4], [1], [2], [3], [4]], {"reducible": False}),
    # tabulated N = 2, 3 cells
    "sheared_square": (2, [[1], [0]], {"reducible": True, "table": True, "exact_elt": False}),
    "kagome_du2": (2, [[0], [1], [0]], {"reducible": True, "table": True}),
    "onesided_plus": (
        2,
        [[1], [0], [1], [0]],
        {"reducible": "partial", "table": True, "solvable_region": "v >= 0"},
    ),
    "onesided_minus": (
        2,
        [[0], [1], [0], [1]],
        {"reducible": "partial", "table": True, "solvable_region": "v <= 0"},
    ),
    "coord_du": (3, [[0, 2, 4]], {"reducible": True, "table": True}),
    "du2_n3a": (3, [[0, 4], [1, 3], [2]], {"reducible": True, "table": True}),
    "du2_n3b": (3, [[3], [2, 4], [1, 3], [2, 4], [3]], {"reducible": True, "table": True}),
    "du3_partial": (
        3,
        [[3], [2], [1, 3], [2], [3]],
        {"reducible": "partial", "table": True, "solvable_region": "|v| >= 1/3"},
    ),
}

_COMPRESSED = {
    "kagome_chm": "kagome",
    "pyramid4_chm": "pyramid4",
    "rocket4_chm": "rocket4",
    "nested_chm": "nested_kagome",
}

FAMILIES = ("familyU", "familyV")
BUILTIN_NAMES = tuple(_LIBRARY) + tuple(_COMPRESSED) + FAMILIES

# lattices whose closed-form line tension is tabulated
EXACT_ELT_LATTICES = ("du", "kagome", "nested_kagome", "pyramid4", "rocket4", "fiveray")


def builtin(name: str, d: int = 2, N: int | None = None) -> BaseGateSpec:
    """Return a library cell; ``familyU``/``familyV`` need ``N >= 4``."""
    if d < 2:
        raise LatticeError("d must be >= 2")
    if name in FAMILIES:
        if N is None or N < 4:
            raise LatticeError(f"{name} requires N >= 4")
        bonds = family_u_bonds(N) if name == "familyU" else family_v_bonds(N)
        return spec_from_bonds(N, bonds, d, f"{name}{N}", reducible=True)
    m = re.fullmatch(r"(familyU|familyV)(\d+)", name)
    if m:
        return builtin(m.group(1), d, int(m.group(2)))
    if name in _COMPRESSED:
        return compress(builtin(_COMPRESSED[name], d), name)
    if name not in _LIBRARY:
        raise LatticeError(f"unknown lattice {name!r}; known: {', '.join(BUILTIN_NAMES)}")
    n, bonds, meta = _LIBRARY[name]
    return spec_from_bonds(n, bonds, d, name, **meta)


def load_lattice(name_or_path: str, d: int = 2, N: int | None = None) -> BaseGateSpec:
    """Builtin name (``familyU6`` style allowed) or path to a DSL file."""
    try:
        return builtin(name_or_path, d, N)
    except LatticeError:
        import os

        if os.path.exists(name_or_path):
            with open(name_or_path) as fh:
                return parse_dsl(fh.read(), os.path.basename(name_or_path))
        raise


def all_builtins(d: int = 2, family_range: Iterable[int] = range(4, 9)) -> list[BaseGateSpec]:
    out = [builtin(n, d) for n in _LIBRARY] + [builtin(n, d) for n in _COMPRESSED]
    for N in family_range:
        out += [builtin("familyU", d, N), builtin("familyV", d, N)]
    return out
