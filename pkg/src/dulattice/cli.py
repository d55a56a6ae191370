"""Command line entry point: ``dulattice <command> ...``.

Exit status is 0 on success, 1 when the computation itself fails (stuck
diagram, budget exceeded, ...) and 2 for usage errors.  Rationals are
printed as ``p/q`` strings, floats with 12 significant digits.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction

import numpy as np

from . import defects, diagram, elt, gates, knots, lattice, numeric

log = logging.getLogger("dulattice")

DEFAULT_SEED = 0
OUT_DIR_ENV = "DULATTICE_OUT"
DOMAIN_ERRORS = (
    lattice.LatticeError,
    diagram.DiagramError,
    elt.ELTError,
    defects.DefectError,
    knots.KnotError,
    numeric.NumericError,
)


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"{value} must be >= 1")
    return value


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"{text!r} is not a rational number") from None


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
    if isinstance(x, complex):
        return f"{x.real:.12g}{x.imag:+.12g}j"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, default=_fmt))


def _seed(args) -> int:
    if args.seed is None:
        log.info("no --seed given, using %d", DEFAULT_SEED)
        return DEFAULT_SEED
    return args.seed


def _out_path(path: str | None, default: str) -> str:
    if path:
        return path
    return os.path.join(os.environ.get(OUT_DIR_ENV, "."), default)


def _lattice(args) -> lattice.BaseGateSpec:
    return lattice.load_lattice(args.lattice, d=args.d, N=getattr(args, "N", None))


# ---------------------------------------------------------------------------
# commands


def cmd_gate(args) -> int:
    seed = _seed(args)
    if args.kind == "du":
        g = gates.random_dual_unitary(args.d, seed)
    elif args.kind == "swap":
        g = gates.swap(args.d)
    else:
        g = gates.random_unitary_gate(args.d, seed)
    spec = gates.operator_schmidt_spectrum(g)
    _emit(
        {
            "kind": args.kind,
            "d": args.d,
            "unitary": gates.is_unitary(g),
            "dual_unitary": gates.is_dual_unitary(g),
            "schmidt_rank": gates.schmidt_rank_of(spec),
        }
    )
    return 0


def cmd_lattice(args) -> int:
    if args.action == "list":
        for name in lattice.BUILTIN_NAMES:
            print(name)
        return 0
    if not args.lattice:
        raise lattice.LatticeError("lattice name or DSL path required")
    spec = _lattice(args)
    flow = lattice.trace_worldlines(spec)
    if args.action == "worldlines":
        _emit(
            {
                "flow": flow.to_json(),
                "cycles": [
                    {"legs": list(w.legs), "v": _fmt(w.velocity)} for w in lattice.worldline_cycles(spec)
                ],
            }
        )
        return 0
    _emit(
        {
            "name": spec.name,
            "d": spec.d,
            "N": spec.N,
            "q": spec.q,
            "gates": len(spec.placements),
            "dsl": lattice.format_dsl(spec),
            "compressed": spec.is_compressed,
            "meta": {k: str(v) for k, v in spec.meta.items()},
            "flow": flow.to_json(),
        }
    )
    return 0


def cmd_reduce(args) -> int:
    spec = _lattice(args)
    res = diagram.reduce_lattice(spec, args.m, args.n)
    out = res.to_json()
    if res.fully_reduced:
        out["z2"] = _fmt(Fraction(1, spec.d) ** res.overlaps)
    _emit(out)
    if args.dump_trace:
        with open(args.dump_trace, "w") as fh:
            json.dump([vars(s) for s in res.trace], fh)
    return 0


def cmd_elt(args) -> int:
    spec = _lattice(args)
    flow = lattice.trace_worldlines(spec)
    if args.curve:
        sys.stdout.write(elt.elt_curve(flow).to_csv(args.samples))
        return 0
    v = args.v if args.v is not None else Fraction(0)
    value = diagram.elt_from_reduction(spec, v) if args.from_reduction else elt.elt_point(flow, v)
    print(_fmt(value))
    return 0


def cmd_defects(args) -> int:
    spec = _lattice(args)
    if args.action == "v0":
        w = defects.crossing_v0_witness(spec)
        _emit({"crossing": w is not None, "witness": w.to_json() if w else None})
        return 0
    found = defects.scan_kbody(spec, args.m, args.n, args.k)
    _emit([o.to_json() for o in found])
    return 0


def cmd_knot(args) -> int:
    spec = _lattice(args)
    diag = diagram.build_zalpha(spec, args.m, args.n)
    link = knots.link_from_diagram(diag)
    unl = knots.rii_unlink(link)
    out = unl.to_json()
    out["crossings"] = link.num_crossings
    out["linking"] = [
        {"pair": list(k), "lk": _fmt(v)} for k, v in knots.linking_matrix(unl.remaining).items()
    ]
    if unl.unlinked:
        out["z2"] = _fmt(knots.z2_from_loops(diag, unl.remaining))
    if args.bracket:
        poly = knots.kauffman_bracket(unl.remaining)
        out["bracket"] = str(poly)
        out["bracket_at_d"] = _fmt(poly.evaluate(spec.d))
    if args.pd:
        out["pd"] = link.to_pd()
    _emit(out)
    return 0


def cmd_oracle(args) -> int:
    spec = _lattice(args)
    seed = _seed(args)
    value = numeric.contract_z_numeric(
        spec, args.m, args.n, args.alpha, seed=seed, gates="swap" if args.swap else None
    )
    out = {"z": value, "alpha": args.alpha, "m": args.m, "n": args.n}
    res = diagram.reduce_lattice(spec, args.m, args.n)
    if res.fully_reduced:
        out["reduction"] = float(spec.d) ** (-(args.alpha - 1) * res.overlaps)
    _emit(out)
    return 0


_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _operator(name: str, d: int) -> np.ndarray:
    if d == 2 and name in _PAULI:
        return _PAULI[name]
    basis = numeric.traceless_basis(d)
    try:
        return basis[int(name)]
    except (ValueError, IndexError):
        raise numeric.NumericError(f"operator {name!r}: use X/Y/Z (d=2) or 0..{len(basis) - 1}") from None


def cmd_correlate(args) -> int:
    spec = _lattice(args)
    seed = _seed(args)
    value = numeric.correlation(
        spec,
        _operator(args.sigma, spec.d),
        _operator(args.rho, spec.d),
        args.x,
        args.t,
        L=args.L,
        seed=seed,
        backend=args.backend,
        origin=args.origin,
    )
    _emit({"x": args.x, "t": args.t, "backend": args.backend, "C": value, "abs": abs(value)})
    return 0


def cmd_sff(args) -> int:
    spec = lattice.load_lattice(args.lattice, d=args.d)
    seed = _seed(args)
    res = numeric.sff(spec, args.L, args.tmax, args.reps, seed=seed, jobs=args.jobs)
    path = _out_path(args.out, "sff.csv")
    with open(path, "w") as fh:
        fh.write(res.to_csv())
    print(path)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dulattice", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def lattice_args(p, positional=True):
        if positional:
            p.add_argument("lattice", help="builtin name (e.g. pyramid4, familyU6) or DSL file")
        p.add_argument("--d", type=int, default=2, help="local dimension (default 2)")
        p.add_argument("--N", type=_positive, default=None, help="size for familyU/familyV")

    def size_args(p):
        p.add_argument("--m", type=_positive, default=2)
        p.add_argument("--n", type=_positive, default=2)

    p = sub.add_parser("gate", help="properties of a random or fixed two-site gate")
    p.add_argument("--kind", choices=("du", "swap", "haar"), default="du")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_gate)

    p = sub.add_parser("lattice", help="inspect base gates")
    p.add_argument("action", choices=("show", "worldlines", "list"))
    p.add_argument("lattice", nargs="?")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--N", type=_positive, default=None)
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("reduce", help="reduce the Z_alpha diagram of an m x n diamond")
    lattice_args(p)
    size_args(p)
    p.add_argument("--dump-trace", metavar="FILE", help="write the rewrite steps as JSON")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("elt", help="entanglement line tension")
    lattice_args(p)
    p.add_argument("--v", type=_rational, help="velocity as p/q (default 0)")
    p.add_argument("--curve", action="store_true", help="print v,E samples as CSV")
    p.add_argument("--samples", type=_positive, default=201)
    p.add_argument("--from-reduction", action="store_true", help="use overlap counting instead of worldlines")
    p.set_defaults(func=cmd_elt)

    p = sub.add_parser("defects", help="defect scans and the stationary-worldline criterion")
    p.add_argument("action", choices=("scan", "v0"))
    lattice_args(p)
    size_args(p)
    p.add_argument("--k", type=_positive, default=1)
    p.set_defaults(func=cmd_defects)

    p = sub.add_parser("knot", help="link of the unfolded alpha=2 diagram")
    lattice_args(p)
    size_args(p)
    p.add_argument("--bracket", action="store_true", help="Kauffman bracket after RII simplification")
    p.add_argument("--pd", action="store_true", help="include the PD code")
    p.set_defaults(func=cmd_knot)

    p = sub.add_parser("oracle", help="dense reference computations")
    osub = p.add_subparsers(dest="what", required=True)
    z = osub.add_parser("z", help="Z_alpha by dense contraction")
    lattice_args(z)
    size_args(z)
    z.add_argument("--alpha", type=int, choices=(2, 3), default=2)
    z.add_argument("--seed", type=int)
    z.add_argument("--swap", action="store_true", help="SWAP gates instead of random ones")
    z.set_defaults(func=cmd_oracle)

    p = sub.add_parser("correlate", help="two-point function C(x, t)")
    lattice_args(p)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--t", type=_positive, required=True)
    p.add_argument("--L", type=_positive, default=10, help="chain length in d-qudits")
    p.add_argument("--origin", type=int, default=None)
    p.add_argument("--sigma", default="Z")
    p.add_argument("--rho", default="Z")
    p.add_argument("--backend", choices=("brute", "channel"), default="brute")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("sff", help="spectral form factor")
    ssub = p.add_subparsers(dest="what", required=True)
    r = ssub.add_parser("run", help="ensemble average over Floquet realizations")
    r.add_argument("--lattice", required=True)
    r.add_argument("--d", type=int, default=2)
    r.add_argument("--L", type=_positive, required=True, help="ring length in q-qudits")
    r.add_argument("--tmax", type=_positive, default=30)
    r.add_argument("--reps", type=_positive, default=100)
    r.add_argument("--seed", type=int)
    r.add_argument("--jobs", type=_positive, default=1)
    r.add_argument("--out", help=f"CSV path (default ${OUT_DIR_ENV}/sff.csv)")
    r.set_defaults(func=cmd_sff)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return args.func(args)
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
