"""Entanglement line tension of completely reducible circuits.

For a flow spectrum ``{(v_i, n_i)}`` with ``sum n_i = 2N`` the line tension is

    E(v) = (1 / 2N) * sum_i n_i |v - v_i|,

a convex, piecewise linear function with kinks at the worldline velocities.
All discrete quantities are exact ``Fraction``s.  The continuum version
replaces the multiplicities by a normalised density ``n(v)`` on ``[-1, 1]``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from scipy import integrate

from .gates import operator_schmidt_spectrum, schmidt_rank_of
from .lattice import BaseGateSpec, FlowSpectrum, compose_base_unitary

QUAD_TOL = 1e-8


class ELTError(ValueError):
    pass


def as_fraction(v) -> Fraction:
    """Accept ints, Fractions and strings like ``"2/3"``; floats are rejected."""
    if isinstance(v, float):
        raise ELTError("pass velocities as exact rationals (Fraction or 'p/q')")
    return Fraction(v)


def elt_point(flow: FlowSpectrum, v) -> Fraction:
    v = as_fraction(v)
    if not flow.is_mirror_symmetric():
        warnings.warn("line tension of a non-mirror-symmetric flow", stacklevel=2)
    return sum((n * abs(v - vi) for vi, n in flow.entries), Fraction(0)) / (2 * flow.N)


@dataclass(frozen=True)
class ELTCurve:
    """Piecewise linear line tension.

    ``breakpoints`` are the kink velocities, ``values`` the tension there and
    ``slopes[k]`` the slope on the k-th segment, where segment 0 lies left of
    the first breakpoint and segment ``len(breakpoints)`` right of the last.
    """

    breakpoints: tuple[Fraction, ...]
    values: tuple[Fraction, ...]
    slopes: tuple[Fraction, ...]

    def __call__(self, v) -> Fraction:
        v = as_fraction(v)
        bps = self.breakpoints
        k = sum(1 for b in bps if b <= v)
        if k == 0:
            return self.values[0] + self.slopes[0] * (v - bps[0])
        return self.values[k - 1] + self.slopes[k] * (v - bps[k - 1])

    def is_convex(self) -> bool:
        return all(a <= b for a, b in zip(self.slopes, self.slopes[1:]))

    def sample(self, num: int = 201, vmax: float = 1.5) -> list[tuple[float, float]]:
        """Evenly spaced ``(v, E(v))`` pairs on ``[-vmax, vmax]`` for plotting."""
        if num < 2:
            raise ELTError("need at least two sample points")
        out = []
        for k in range(num):
            v = Fraction(-vmax) + Fraction(2 * vmax) * k / (num - 1)
            v = v.limit_denominator(10**6)
            out.append((float(v), float(self(v))))
        return out

    def to_csv(self, num: int = 201) -> str:
        rows = ["v,E"] + [f"{v:.12g},{e:.12g}" for v, e in self.sample(num)]
        return "\n".join(rows) + "\n"


def elt_curve(flow: FlowSpectrum) -> ELTCurve:
    bps = tuple(sorted(set(flow.velocities)))
    values = tuple(elt_point(flow, b) for b in bps)
    # slope on a segment = (weight left of it - weight right of it) / 2N
    slopes = []
    for k in range(len(bps) + 1):
        left = sum(n for v, n in flow.entries if v in bps[:k])
        slopes.append(Fraction(left - (2 * flow.N - left), 2 * flow.N))
    curve = ELTCurve(bps, values, tuple(slopes))
    if not curve.is_convex():  # pragma: no cover - slopes are increasing by construction
        raise ELTError("line tension is not convex")
    return curve


def v_entanglement(flow: FlowSpectrum) -> Fraction:
    return elt_point(flow, 0)


def v_butterfly(flow: FlowSpectrum) -> Fraction:
    return max(abs(v) for v in flow.velocities)


def otoc_rate(flow: FlowSpectrum, v) -> Fraction:
    """Decay rate ``E(v) - v`` of the OTOC along the ray ``v`` inside the butterfly cone."""
    v = as_fraction(v)
    if abs(v) >= v_butterfly(flow):
        raise ELTError(f"|v| = {abs(v)} is outside the butterfly cone v_B = {v_butterfly(flow)}")
    return elt_point(flow, v) - v


def vE_from_schmidt(spec: BaseGateSpec, eps: float = 1e-9, seed=0) -> float:
    """``log R / log q^2`` from the operator Schmidt rank of one random instance."""
    u = compose_base_unitary(spec, seed=seed)
    rank = schmidt_rank_of(operator_schmidt_spectrum(u), eps)
    return math.log(rank) / math.log(spec.q**2)


def schmidt_rank_prediction(flow: FlowSpectrum, d: int) -> int:
    """``d ** sum_i n_i |v_i|`` -- Schmidt rank implied by the worldlines."""
    expo = sum((n * abs(v) for v, n in flow.entries), Fraction(0))
    if expo.denominator != 1:
        raise ELTError(f"non-integer rank exponent {expo}")
    return d ** int(expo)


# ---------------------------------------------------------------------------
# continuous densities


@dataclass(frozen=True)
class FlowDensity:
    """Normalised weight ``n(v)`` of information flow on ``[-1, 1]``.

    ``points`` lists locations of sharp features (narrow bumps, kinks) that
    the quadrature should not step over.
    """

    n: Callable[[float], float]
    points: tuple[float, ...] = ()

    def __post_init__(self):
        total = self.integrate(self.n)
        if abs(total - 1.0) > QUAD_TOL * 10:
            raise ELTError(f"density integrates to {total}, not 1")

    def integrate(
        self, f: Callable[[float], float], lo: float = -1.0, hi: float = 1.0, tol: float = QUAD_TOL
    ) -> float:
        if hi <= lo:
            return 0.0
        pts = [p for p in self.points if lo < p < hi] or None
        val, _ = integrate.quad(f, lo, hi, points=pts, epsabs=tol, epsrel=tol, limit=200)
        return val

    @classmethod
    def uniform(cls) -> "FlowDensity":
        return cls(lambda u: 0.5)

    @classmethod
    def bumps(cls, centers: Sequence[float], weights: Sequence[float], width: float) -> "FlowDensity":
        """Sum of normalised box bumps of half-width ``width`` (clipped to [-1, 1])."""
        boxes = []
        for c, w in zip(centers, weights):
            lo, hi = max(-1.0, c - width), min(1.0, c + width)
            boxes.append((lo, hi, w / (hi - lo)))

        def n(u):
            return sum(h for lo, hi, h in boxes if lo <= u <= hi)

        pts = tuple(sorted({x for lo, hi, _ in boxes for x in (lo, hi)}))
        return cls(n, pts)


def continuous_elt(density: FlowDensity, v: float, tol: float = QUAD_TOL) -> float:
    if not -1.0 <= v <= 1.0:
        raise ELTError("continuous line tension is defined on [-1, 1]")
    n = density.n
    left = density.integrate(lambda u: n(u) * (v - u), -1.0, v, tol)
    right = density.integrate(lambda u: n(u) * (u - v), v, 1.0, tol)
    return left + right


def curvature_check(density: FlowDensity, v: float, h: float = 1e-3) -> float:
    """Central second difference of the continuous line tension (equals ``2 n(v)``).

    The stencil divides by ``h**2``, so the integrals are done to 1e-13.
    """
    if not (-1.0 < v - h and v + h < 1.0):
        raise ELTError("curvature stencil leaves (-1, 1)")
    e = [continuous_elt(density, v + s * h, tol=1e-13) for s in (-1, 0, 1)]
    return (e[0] - 2 * e[1] + e[2]) / h**2
