"""Dense reference computations.

* ``contract_z_numeric`` -- Z_alpha of a diamond by explicit contraction.
* ``correlation`` -- infinite-temperature two-point functions, either by
  dense Heisenberg evolution on an open chain or by composing single-leg
  channels along a worldline.
* ``floquet_unitary`` / ``sff`` / ``rmt`` -- spectral form factor of random
  Floquet brickworks and the circular-ensemble predictions.
* ``flat_spectrum_check`` -- flatness of the operator Schmidt spectrum.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .gates import operator_schmidt_spectrum
from .lattice import (
    BaseGateSpec,
    LatticeError,
    Placement,
    compose_base_unitary,
    resolve_gates,
    worldline_cycles,
)

log = logging.getLogger(__name__)

MEMORY_BUDGET = 2 * 1024**3  # bytes
MAX_BRUTE_SITES = 10
MAX_FLOQUET_DIM = 2**12
MIN_REALIZATIONS = 10


class NumericError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Z_alpha oracle


def _apply_axes(tensor: np.ndarray, mat: np.ndarray, axes, dim: int) -> np.ndarray:
    """Apply ``mat`` to the given tensor axes (any order, any positions)."""
    n = len(axes)
    t = np.tensordot(mat.reshape([dim] * (2 * n)), tensor, axes=(list(range(n, 2 * n)), list(axes)))
    return np.moveaxis(t, list(range(n)), list(axes))


def diamond_operator(spec: BaseGateSpec, m: int, n: int, cell_gate) -> np.ndarray:
    """Dense diamond of ``m x n`` cells on ``m + n`` q-qudits, axes (out..., in...).

    Cell ``(i, j)`` acts at time ``i + j`` on q-sites ``(i - j + n - 1, i - j + n)``.
    """
    q, L = spec.q, m + n
    mem = 16 * q ** (2 * L)
    if mem > MEMORY_BUDGET:
        raise NumericError(f"contraction needs {mem / 1e9:.1f} GB, over the 2 GB budget")
    W = np.eye(q**L, dtype=complex).reshape([q] * L + [q**L])
    for t in range(m + n - 1):
        for i in range(m):
            j = t - i
            if 0 <= j < n:
                s = i - j + n - 1
                W = _apply_axes(W, cell_gate(i, j), (s, s + 1), q)
    return W.reshape([q] * (2 * L))


def contract_z_numeric(
    spec: BaseGateSpec,
    m: int,
    n: int,
    alpha: int = 2,
    d: int | None = None,
    seed=None,
    gates=None,
) -> float:
    """``tr[(tr_A |U><U|)^alpha]`` for a diamond of independently drawn cells.

    ``gates`` is forwarded to :func:`compose_base_unitary` for every cell
    (``"swap"`` substitutes SWAPs); by default each cell gets fresh random
    gates from ``seed``.
    """
    if alpha not in (2, 3):
        raise NumericError("alpha must be 2 or 3")
    if m < 1 or n < 1:
        raise NumericError("diamond sizes must be positive")
    if d is not None and d != spec.d:
        spec = BaseGateSpec(d, spec.N, spec.layers, spec.name, spec.meta)
    rng = np.random.default_rng(seed)
    cache: dict[tuple[int, int], np.ndarray] = {}

    def cell(i, j):
        if (i, j) not in cache:
            cache[(i, j)] = compose_base_unitary(spec, gates, seed=rng).entries
        return cache[(i, j)]

    W = diamond_operator(spec, m, n, cell)
    L, q = m + n, spec.q
    out_a, out_b = list(range(m)), list(range(m, L))
    in_a, in_b = [L + k for k in range(n)], [L + k for k in range(n, L)]
    M = np.transpose(W, out_a + in_a + out_b + in_b).reshape(q ** (m + n), q ** (m + n))
    s = np.linalg.svd(M, compute_uv=False)
    lam = s**2 / np.sum(s**2)
    return float(np.sum(lam**alpha))


# ---------------------------------------------------------------------------
# circuits on chains


@dataclass
class Circuit:
    """Time-ordered gate applications on ``sites`` legs of dimension ``d``.

    ``ops[t]`` holds the ``(legs, matrix)`` pairs of base-gate layer ``t``,
    in application order.
    """

    d: int
    sites: int
    ops: list[list[tuple[tuple[int, ...], np.ndarray, Placement]]]
    dropped: list[list[tuple[int, ...]]] = field(default_factory=list)


def brickwork_circuit(
    spec: BaseGateSpec, sites: int, layers: int, rng, periodic: bool = False, floquet: bool = False
) -> Circuit:
    """Brickwork of base cells; layer ``t`` is shifted by ``(t % 2) * N`` legs.

    On an open chain, placements that stick out of ``[0, sites)`` are dropped
    (recorded in ``dropped``).  With ``floquet`` the gates of layers ``t`` and
    ``t + 2`` coincide.
    """
    rng = np.random.default_rng(rng)
    N, P = spec.N, spec.legs
    if periodic and sites % P:
        raise NumericError(f"a ring needs a multiple of {P} legs")
    ops, dropped = [], []
    period: list = []
    for t in range(layers):
        if floquet and t >= 2:
            ops.append(period[t % 2])
            dropped.append([])
            continue
        off = (t % 2) * N
        layer, gone = [], []
        starts = range(off - P, sites + P, P) if not periodic else range(off, off + sites, P)
        for c0 in starts:
            mats = resolve_gates(spec, None, rng)
            for p, mat in zip(spec.placements, mats):
                legs = tuple(c0 + leg for leg in p.legs)
                if periodic:
                    legs = tuple(leg % sites for leg in legs)
                elif not all(0 <= leg < sites for leg in legs):
                    gone.append(legs)
                    continue
                layer.append((legs, mat, p))
        ops.append(layer)
        dropped.append(gone)
        if floquet:
            period.append(layer)
    return Circuit(spec.d, sites, ops, dropped)


# ---------------------------------------------------------------------------
# correlation functions


def _heisenberg(op: np.ndarray, legs, mat: np.ndarray, sites: int, d: int) -> np.ndarray:
    """``g^dagger op g`` on an operator tensor with ``2 * sites`` axes."""
    op = _apply_axes(op, mat.conj().T, legs, d)
    n = len(legs)
    cols = [sites + leg for leg in legs]
    op = np.tensordot(op, mat.reshape([d] * (2 * n)), axes=(cols, list(range(n))))
    return np.moveaxis(op, list(range(2 * sites - n, 2 * sites)), cols)


def _reduced(op: np.ndarray, site: int, sites: int, d: int) -> np.ndarray:
    rest = d ** (sites - 1)
    t = np.moveaxis(op, (site, sites + site), (0, 1)).reshape(d, d, rest, rest)
    return np.einsum("abkk->ab", t)


def _check_traceless(*ops):
    for op in ops:
        op = np.asarray(op)
        if abs(np.trace(op)) > 1e-12:
            raise NumericError("correlation operators must be traceless")


def _cone_inside(circ: Circuit, origin: int, t: int) -> bool:
    """No dropped boundary placement could influence the result."""
    back = {origin}
    for tau in range(t - 1, -1, -1):
        for legs, _, _ in reversed(circ.ops[tau]):
            if back & set(legs):
                back |= set(legs)
        # conservative: compare against the cone after the whole layer
        if any(back & set(legs) for legs in circ.dropped[tau]):
            return False
    return True


def evolve_reduced(circ: Circuit, sigma, origin: int, t: int) -> list[np.ndarray]:
    """Single-leg reductions ``d^-L tr_rest[U^dagger sigma(origin) U]``, one per leg."""
    d, L = circ.d, circ.sites
    if L > MAX_BRUTE_SITES:
        raise NumericError(f"dense evolution limited to {MAX_BRUTE_SITES} sites")
    if t > len(circ.ops):
        raise NumericError("circuit is shorter than the requested time")
    _check_traceless(sigma)
    if not _cone_inside(circ, origin, t):
        raise NumericError("the light cone leaves the chain; use a longer chain or shorter time")
    op = np.einsum(
        "ab,ij->aibj",
        np.asarray(sigma, dtype=complex),
        np.eye(d ** (L - 1), dtype=complex),
    ).reshape([d] * (2 * L))
    # sigma sits on leg 0; move it (row and column axis) to ``origin``
    op = np.moveaxis(op, (0, L), (origin, L + origin))
    for tau in range(t - 1, -1, -1):
        for legs, mat, _ in reversed(circ.ops[tau]):
            op = _heisenberg(op, legs, mat, L, d)
    return [_reduced(op, site, L, d) / d**L for site in range(L)]


def correlation_brute(circ: Circuit, sigma, rho, origin: int, t: int) -> dict[int, complex]:
    """``C(x, t) = d^-L tr[U^dagger sigma(origin) U rho(origin + x)]`` for every leg.

    ``U`` is the first ``t`` layers of ``circ``.  Returns ``{x: C}``.
    """
    _check_traceless(rho)
    red = evolve_reduced(circ, sigma, origin, t)
    return {site - origin: complex(np.trace(r @ rho)) for site, r in enumerate(red)}


def _leg_channel(mat: np.ndarray, d: int, legs, out_leg: int, in_leg: int, M: np.ndarray) -> np.ndarray:
    """Heisenberg image of ``M`` on ``out_leg`` reduced onto ``in_leg``."""
    n = len(legs)
    big = np.eye(1, dtype=complex)
    for leg in legs:
        big = np.kron(big, M if leg == out_leg else np.eye(d))
    img = (mat.conj().T @ big @ mat).reshape([d] * (2 * n))
    k = legs.index(in_leg)
    img = np.moveaxis(img, (k, n + k), (0, 1)).reshape(d, d, d ** (n - 1), d ** (n - 1))
    return np.einsum("abkk->ab", img) / d ** (n - 1)


def worldline_path(circ: Circuit, origin: int, t: int) -> list[tuple[int, int, int]]:
    """``(layer, gate index, leg)`` steps of the SWAP worldline from ``(origin, t)`` downwards.

    DU placements send an output leg to the opposite input leg; single-leg CHMs
    and diagonal controlled phases keep it in place.
    """
    leg = origin
    path = []
    for tau in range(t - 1, -1, -1):
        for k in range(len(circ.ops[tau]) - 1, -1, -1):
            legs, _, p = circ.ops[tau][k]
            if leg in legs:
                new = legs[1 - legs.index(leg)] if p.kind == "du" else leg
                path.append((tau, k, new))
                leg = new
    return path


def worldline_velocity(spec: BaseGateSpec, leg: int, t: int) -> Fraction:
    """Velocity of the SWAP worldline on chain leg ``leg`` after ``t >= 1`` layers."""
    if t < 1:
        raise NumericError("need t >= 1")
    N, P = spec.N, spec.legs
    j = (leg - ((t - 1) % 2) * N) % P  # output leg of the last cell
    entry = (j + N) % P  # input leg of the following cell
    for w in worldline_cycles(spec):
        if entry in w.legs:
            return w.velocity
    raise NumericError(f"leg {leg} is on no worldline")  # pragma: no cover


def correlation_channel(circ: Circuit, sigma, rho, origin: int, x: int, t: int) -> complex:
    """Product of single-leg channels along the worldline ending at ``origin + x``."""
    _check_traceless(sigma, rho)
    d = circ.d
    path = worldline_path(circ, origin, t)
    end = path[-1][2] if path else origin
    if end != origin + x:
        raise NumericError(f"(x={x}, t={t}) is not on the worldline through the origin (ends at x={end - origin})")
    M = np.asarray(sigma, dtype=complex)
    leg = origin
    for tau, k, new in path:
        legs, mat, _ = circ.ops[tau][k]
        M = _leg_channel(mat, d, list(legs), leg, new, M)
        leg = new
    return complex(np.trace(M @ rho) / d)


def correlation(
    spec: BaseGateSpec,
    sigma,
    rho,
    x: int,
    t: int,
    L: int = 10,
    seed=None,
    backend: str = "brute",
    origin: int | None = None,
    circuit: Circuit | None = None,
) -> complex:
    """Two-point function on an open chain of ``L`` legs with ``t`` base-gate layers."""
    circ = circuit or brickwork_circuit(spec, L, t, seed)
    origin = L // 2 if origin is None else origin
    if not 0 <= origin + x < circ.sites:
        raise NumericError("x is outside the chain")
    if backend == "brute":
        return correlation_brute(circ, sigma, rho, origin, t)[x]
    if backend == "channel":
        return correlation_channel(circ, sigma, rho, origin, x, t)
    raise NumericError(f"unknown backend {backend!r}")


def traceless_basis(d: int) -> list[np.ndarray]:
    """Generalised Gell-Mann-like basis: off-diagonal units and traceless diagonals."""
    out = []
    for a in range(d):
        for b in range(d):
            if a != b:
                e = np.zeros((d, d), dtype=complex)
                e[a, b] = 1
                out.append(e)
    for k in range(1, d):
        diag = np.zeros(d)
        diag[:k] = 1
        diag[k] = -k
        out.append(np.diag(diag).astype(complex))
    return out


# ---------------------------------------------------------------------------
# spectral form factor


def floquet_unitary(spec: BaseGateSpec, L: int, rng=None, periodic: bool = True) -> np.ndarray:
    """One period (two brickwork layers) on ``L`` q-qudits."""
    legs = L * spec.N
    D = spec.d**legs
    if D > MAX_FLOQUET_DIM:
        raise NumericError(f"Hilbert space dimension {D} exceeds {MAX_FLOQUET_DIM}")
    if periodic and L % 2:
        raise NumericError("a periodic brickwork needs an even number of q-qudits")
    circ = brickwork_circuit(spec, legs, 2, rng, periodic=periodic)
    U = np.eye(D, dtype=complex).reshape([spec.d] * legs + [D])
    for layer in circ.ops:
        for lg, mat, _ in layer:
            U = _apply_axes(U, mat, lg, spec.d)
    return U.reshape(D, D)


@dataclass
class SFFResult:
    t: np.ndarray
    K: np.ndarray
    stderr: np.ndarray
    M: int
    D: int
    phases: np.ndarray  # (M, D) eigenphases of every realization

    def to_csv(self) -> str:
        rows = ["t,K,stderr,rmt_cue,rmt_coe"]
        for t, k, e in zip(self.t, self.K, self.stderr):
            rows.append(
                f"{int(t)},{k:.12g},{e:.12g},{rmt('CUE', self.D, int(t)):.12g},{rmt('COE', self.D, int(t)):.12g}"
            )
        return "\n".join(rows) + "\n"


def form_factor(phases: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``|sum_k exp(i t theta_k)|^2`` for each row of ``phases`` and each ``t``."""
    phases = np.atleast_2d(phases)
    z = np.exp(1j * np.multiply.outer(phases, t)).sum(axis=1)
    return np.abs(z) ** 2


def _realization(args):
    spec, L, child = args
    U = floquet_unitary(spec, L, np.random.default_rng(child))
    return np.angle(np.linalg.eigvals(U))


def sff(spec: BaseGateSpec, L: int, t_max: int, M: int, seed=0, jobs: int = 1) -> SFFResult:
    """Ensemble-averaged form factor; realization ``k`` uses child ``k`` of ``SeedSequence(seed)``."""
    if M < MIN_REALIZATIONS:
        raise NumericError(f"need at least {MIN_REALIZATIONS} realizations")
    D = spec.q**L
    if D > MAX_FLOQUET_DIM:
        raise NumericError(f"Hilbert space dimension {D} exceeds {MAX_FLOQUET_DIM}")
    if not 1 <= t_max <= 10 * D:
        raise NumericError("t_max must lie in [1, 10 D]")
    children = np.random.SeedSequence(seed).spawn(M)
    tasks = [(spec, L, c) for c in children]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            phases = list(pool.map(_realization, tasks))
    else:
        phases = [_realization(a) for a in tasks]
    phases = np.array(phases)
    t = np.arange(0, t_max + 1)
    K = form_factor(phases, t)
    return SFFResult(t, K.mean(axis=0), K.std(axis=0, ddof=1) / math.sqrt(M), M, D, phases)


def rmt(kind: str, D: int, t: float) -> float:
    """Circular-ensemble form factor (connected part, ``t >= 1``)."""
    if kind == "CUE":
        return float(min(t, D))
    if kind == "COE":
        if t <= D:
            return 2 * t - t * math.log(1 + 2 * t / D)
        return 2 * D - t * math.log((2 * t + D) / (2 * t - D))
    raise NumericError(f"unknown ensemble {kind!r}")


# ---------------------------------------------------------------------------
# operator entanglement


def flat_spectrum_check(spec: BaseGateSpec, trials: int = 10, seed=0, tol: float = 1e-9) -> bool:
    """All nonzero operator Schmidt values of the composed base gate coincide."""
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        try:
            u = compose_base_unitary(spec, seed=rng)
        except LatticeError as exc:
            raise NumericError(str(exc)) from exc
        s = operator_schmidt_spectrum(u)
        nz = s[s > 1e-6 * s.max()]
        if nz.max() - nz.min() > tol * max(1.0, nz.max()):
            return False
    return True

