"""Two-site gates, complex Hadamard matrices and the realignment primitive.

Index convention: a two-site gate on d-qudits is stored as a d^2 x d^2 matrix
``U[(a, b), (c, d)]`` with output legs ``(a, b)`` and input legs ``(c, d)``;
``a``/``c`` is the left leg.  The realignment is

    R[(a, c), (b, d)] = U[(a, b), (c, d)],

so rows collect the left leg (out, in) and columns the right leg.  The same
matrix gives the operator-Schmidt decomposition across left/right, and the
gate is dual-unitary iff ``R`` is unitary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.stats import unitary_group

DEFAULT_TOL = 1e-10


class Label(str, Enum):
    """Permutation boundary states of the replicated (folded) diagrams."""

    CIRCLE = "circle"
    SQUARE = "square"

    def flip(self) -> "Label":
        return Label.SQUARE if self is Label.CIRCLE else Label.CIRCLE


def overlap_factor(x: Label, y: Label, d: int, alpha: float) -> float:
    """Overlap of two normalised permutation states on one d-leg."""
    return 1.0 if x is y else float(d) ** (1.0 - alpha)


def check_tolerance(eps: float) -> float:
    if not (0.0 <= eps < 1e-6):
        raise ValueError(f"tolerance must lie in [0, 1e-6), got {eps}")
    return eps


@dataclass(frozen=True, eq=False)
class TwoSiteGate:
    d: int
    entries: np.ndarray
    kind: str = "generic"

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("local dimension must be >= 2")
        m = np.asarray(self.entries, dtype=complex)
        if m.shape != (self.d**2, self.d**2):
            raise ValueError(f"expected shape {(self.d**2,) * 2}, got {m.shape}")
        if self.kind not in ("swap", "generic", "chm-composite"):
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "entries", m)

    def tensor(self) -> np.ndarray:
        """Rank-4 view ``T[a, b, c, d]`` (out-left, out-right, in-left, in-right)."""
        return self.entries.reshape(self.d, self.d, self.d, self.d)

    def to_json(self) -> str:
        rows = [[[float(z.real), float(z.imag)] for z in row] for row in self.entries]
        return json.dumps({"d": self.d, "kind": self.kind, "rows": rows})

    @classmethod
    def from_json(cls, text: str) -> "TwoSiteGate":
        rec = json.loads(text)
        rows = np.array(
            [[complex(re, im) for re, im in row] for row in rec["rows"]], dtype=complex
        )
        return cls(int(rec["d"]), rows, rec.get("kind", "generic"))


@dataclass(frozen=True, eq=False)
class ComplexHadamard:
    d: int
    entries: np.ndarray = field(repr=False)

    def is_valid(self, eps: float = DEFAULT_TOL) -> bool:
        h = self.entries
        return bool(
            np.max(np.abs(np.abs(h) - 1.0)) <= eps
            and np.max(np.abs(h @ h.conj().T - self.d * np.eye(self.d))) <= eps
        )


def realign(gate: TwoSiteGate | np.ndarray, d: int | None = None) -> np.ndarray:
    """Return ``R[(a, c), (b, d)] = U[(a, b), (c, d)]``."""
    if isinstance(gate, TwoSiteGate):
        d, m = gate.d, gate.entries
    else:
        m = np.asarray(gate, dtype=complex)
        if d is None:
            d = int(round(np.sqrt(m.shape[0])))
    if m.shape != (d * d, d * d):
        raise ValueError(f"matrix of shape {m.shape} is not a two-site gate on d={d}")
    t = m.reshape(d, d, d, d)
    return t.transpose(0, 2, 1, 3).reshape(d * d, d * d)


def unrealign(r: np.ndarray, d: int) -> np.ndarray:
    """Inverse of :func:`realign`."""
    t = np.asarray(r).reshape(d, d, d, d)
    return t.transpose(0, 2, 1, 3).reshape(d * d, d * d)


def _is_unitary_matrix(m: np.ndarray, eps: float) -> bool:
    with np.errstate(all="ignore"):
        dev = np.abs(m.conj().T @ m - np.eye(m.shape[0]))
    return bool(np.all(np.isfinite(dev)) and dev.max() <= eps)


def is_unitary(gate: TwoSiteGate, eps: float = DEFAULT_TOL) -> bool:
    return _is_unitary_matrix(gate.entries, eps)


def is_dual_unitary(gate: TwoSiteGate, eps: float = DEFAULT_TOL) -> bool:
    return _is_unitary_matrix(realign(gate), eps)


def swap(d: int) -> TwoSiteGate:
    m = np.zeros((d * d, d * d), dtype=complex)
    for a in range(d):
        for b in range(d):
            m[b * d + a, a * d + b] = 1.0
    return TwoSiteGate(d, m, "swap")


def identity(d: int) -> TwoSiteGate:
    return TwoSiteGate(d, np.eye(d * d, dtype=complex))


def controlled_phase(phases: np.ndarray) -> TwoSiteGate:
    """Diagonal gate ``|ab> -> exp(i phases[a, b]) |ab>``."""
    phases = np.asarray(phases, dtype=float)
    d = phases.shape[0]
    return TwoSiteGate(d, np.diag(np.exp(1j * phases.reshape(-1))))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(d, random_state=rng)


def random_dual_unitary(d: int, seed: int | np.random.Generator | None = None) -> TwoSiteGate:
    """Sample ``(u1 x u2) SWAP CP(theta) (w1 x w2)``.

    Single-site unitaries are Haar distributed and the phases ``theta_ab`` are
    independent and uniform, so the result is dual-unitary for every ``d``.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    rng = np.random.default_rng(seed)
    u1, u2, w1, w2 = (haar_unitary(d, rng) for _ in range(4))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(d, d))
    cp = np.exp(1j * theta.reshape(-1))
    core = swap(d).entries * cp[np.newaxis, :]
    m = np.kron(u1, u2) @ core @ np.kron(w1, w2)
    return TwoSiteGate(d, m)


def random_unitary_gate(d: int, seed: int | np.random.Generator | None = None) -> TwoSiteGate:
    """Haar-random two-site unitary (generically not dual-unitary)."""
    rng = np.random.default_rng(seed)
    return TwoSiteGate(d, haar_unitary(d * d, rng))


def fourier_matrix(d: int) -> np.ndarray:
    k = np.arange(d)
    return np.exp(2j * np.pi * np.outer(k, k) / d)


def random_chm(d: int, seed: int | np.random.Generator | None = None) -> ComplexHadamard:
    """Random element ``D1 F_d D2`` of the Fourier orbit of complex Hadamards."""
    if d < 2:
        raise ValueError("d must be >= 2")
    rng = np.random.default_rng(seed)
    p1 = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, d))
    p2 = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, d))
    return ComplexHadamard(d, p1[:, None] * fourier_matrix(d) * p2[None, :])


def operator_schmidt_spectrum(gate: TwoSiteGate | np.ndarray, d: int | None = None) -> np.ndarray:
    """Singular values of the realignment, descending, with squares summing to d^2."""
    r = realign(gate, d)
    dd = int(round(np.sqrt(r.shape[0])))
    s = np.linalg.svd(r, compute_uv=False)
    norm = np.sqrt(np.sum(s**2))
    return s * (dd / norm)


def schmidt_rank_of(spectrum: np.ndarray, eps: float = 1e-9) -> int:
    spectrum = np.asarray(spectrum)
    return int(np.sum(spectrum > eps * spectrum.max()))
