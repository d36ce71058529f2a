"""Command-line entry point ``discspec``.

Exit codes: 0 success / positive answer, 1 negative answer, 2 any input,
I/O or precondition error, 3 disagreement between the invariant-based
decision and the brute-force oracle.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import cylinder
from .duality import bidual_check, dual_of_subtrivialized, dual_rotation_bundle
from .dynamics import (
    FinSystem,
    ellis_order,
    has_discrete_spectrum,
    is_bijection,
    maximal_trivial_factor,
    pullback,
)
from .errors import DiscSpecError, VerificationError
from .io import Document, dump, load, serialize
from .koopman import RationalMeasure
from .spectrum import (
    canonical_form,
    iso_brute_force,
    iso_systems,
    markov_iso,
    markov_iso_brute_force,
    measured_spectrum_bundle,
    realize,
    spectrum_bundle,
)

EXIT_OK, EXIT_NO, EXIT_ERROR, EXIT_ORACLE = 0, 1, 2, 3


class UsageError(DiscSpecError):
    pass


def _system_of(doc: Document) -> FinSystem:
    if doc.type in ("system", "measured-system"):
        return doc.value
    if doc.type == "bundle":
        return doc.value.system
    if doc.type == "rotation-bundle":
        return doc.value.to_system()
    raise UsageError(f"expected a system document, got {doc.type!r}")


def _measured(doc: Document) -> tuple[FinSystem, RationalMeasure]:
    if doc.weights is None:
        raise UsageError(f"{doc.type!r} document carries no weights")
    return _system_of(doc), doc.weights


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="\n")


def cmd_analyze(args) -> int:
    s = _system_of(load(args.file))
    factor = maximal_trivial_factor(s)
    discrete = has_discrete_spectrum(s)
    print(f"states: {s.n_states}")
    print(f"invertible: {'yes' if is_bijection(s.transition) else 'no'}")
    print(f"discrete spectrum: {'yes' if discrete else 'no'}")
    print(f"components: {factor.n_base}")
    print(f"ellis order: {ellis_order(s)}")
    if discrete:
        print(f"spectrum bundle orders: {list(spectrum_bundle(s).orders)}")
    else:
        print("spectrum bundle: undefined (no discrete spectrum)")
    return EXIT_OK


def cmd_iso(args) -> int:
    a, b = load(args.file1), load(args.file2)
    if args.measured:
        (s1, mu1), (s2, mu2) = _measured(a), _measured(b)
        witness = markov_iso(s1, mu1, s2, mu2)
        oracle = (lambda: markov_iso_brute_force(s1, mu1, s2, mu2)) if args.oracle else None
    else:
        s1, s2 = _system_of(a), _system_of(b)
        witness = iso_systems(s1, s2)
        oracle = (lambda: iso_brute_force(s1, s2)) if args.oracle else None
    if oracle is not None and (oracle() is None) != (witness is None):
        print("oracle disagrees with the spectrum-bundle decision", file=sys.stderr)
        return EXIT_ORACLE
    if witness is None:
        print("not isomorphic")
        return EXIT_NO
    print("isomorphic")
    print("state bijection: " + " ".join(f"{i}->{j}" for i, j in enumerate(witness.state_bijection)))
    return EXIT_OK


def _witness_path(out: str) -> Path:
    p = Path(out)
    return p.with_name(p.stem + ".witness.json")


def cmd_canon(args) -> int:
    doc = load(args.file)
    s = _system_of(doc)
    rot, witness = canonical_form(s)
    weights = None
    if doc.weights is not None:
        moved = [None] * s.n_states
        for i, j in enumerate(witness.state_bijection):
            moved[j] = doc.weights[i]
        weights = RationalMeasure(tuple(moved))
    dump(rot, args.output, weights)
    dump(witness, args.witness or _witness_path(args.output))
    return EXIT_OK


def cmd_spectrum(args) -> int:
    doc = load(args.file)
    if doc.weights is not None:
        result = measured_spectrum_bundle(*_measured(doc))
    else:
        result = spectrum_bundle(_system_of(doc))
    _emit(serialize(result), args.output)
    return EXIT_OK


def cmd_realize(args) -> int:
    doc = load(args.file)
    if doc.type == "measured-spectrum":
        rot, mu = realize(doc.value)
        dump(rot, args.output, mu)
    elif doc.type == "spectrum":
        dump(realize(doc.value), args.output)
    else:
        raise UsageError(f"expected a spectrum document, got {doc.type!r}")
    return EXIT_OK


def cmd_pullback(args) -> int:
    doc, basemap = load(args.bundle), load(args.mapfile)
    if doc.type == "bundle":
        bundle = doc.value
    elif doc.type == "rotation-bundle":
        bundle = doc.value.to_bundle()
    else:
        raise UsageError(f"expected a bundle document, got {doc.type!r}")
    if basemap.type != "basemap":
        raise UsageError(f"expected a basemap document, got {basemap.type!r}")
    dump(pullback(bundle, basemap.value).bundle, args.output)
    return EXIT_OK


def cmd_dual(args) -> int:
    doc = load(args.file)
    if doc.type == "rotation-bundle":
        dump(dual_rotation_bundle(doc.value), args.output)
    elif doc.type == "dual-bundle":
        dump(dual_of_subtrivialized(doc.value), args.output)
    else:
        raise UsageError(f"expected a rotation-bundle or dual-bundle document, got {doc.type!r}")
    return EXIT_OK


def cmd_bidual_check(args) -> int:
    doc = load(args.file)
    if doc.type != "rotation-bundle":
        raise UsageError(f"expected a rotation-bundle document, got {doc.type!r}")
    try:
        witness = bidual_check(doc.value)
    except VerificationError as exc:
        print(f"bidual check failed: {exc}")
        return EXIT_NO
    print("bidual isomorphism verified")
    print("state bijection: " + " ".join(f"{i}->{j}" for i, j in enumerate(witness.state_bijection)))
    return EXIT_OK


def cmd_cylinder(args) -> int:
    alpha = cylinder.parse_alpha(args.alpha)
    f = cylinder.parse_observable(args.f)
    report = cylinder.mean_ergodicity_scan(alpha, f, args.grid, args.n, args.tol, args.samples)
    _emit(cylinder.csv_report(report), args.csv)
    log = sys.stderr if args.csv is None else sys.stdout
    if report.illustrative:
        print("note: α is discontinuous, the scan is illustrative only", file=log)
    if report.mean_ergodic_evidence:
        print(f"UE evidence on all {len(report.rows)} fibers (max gap {report.max_gap:.3g})", file=log)
        return EXIT_OK
    worst = max(report.failures(), key=lambda r: r.gap)
    print(
        f"non-UE witness at t={worst.t}: θ={worst.witness[0]} vs θ={worst.witness[1]}, gap {worst.gap:.12g}",
        file=log,
    )
    return EXIT_NO


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="discspec", description="Finite discrete-spectrum systems toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="invertibility, components, Ellis order, spectrum bundle")
    p.add_argument("file")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("iso", help="decide isomorphism of two systems")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--measured", action="store_true", help="require weight-preserving conjugacy")
    p.add_argument("--oracle", action="store_true", help="cross-check with exhaustive search")
    p.set_defaults(func=cmd_iso)

    p = sub.add_parser("canon", help="canonical rotation bundle plus witness sidecar")
    p.add_argument("file")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--witness", help="witness path (default: OUTPUT stem + .witness.json)")
    p.set_defaults(func=cmd_canon)

    p = sub.add_parser("spectrum", help="(measured) point spectrum bundle")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("realize", help="rotation bundle with a given spectrum bundle")
    p.add_argument("file")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_realize)

    p = sub.add_parser("pullback", help="pull a bundle back along a surjective base map")
    p.add_argument("bundle")
    p.add_argument("mapfile")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_pullback)

    p = sub.add_parser("dual", help="dual of a rotation bundle, or rotation bundle of a dual")
    p.add_argument("file")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_dual)

    p = sub.add_parser("bidual-check", help="verify the evaluation isomorphism onto the bidual")
    p.add_argument("file")
    p.set_defaults(func=cmd_bidual_check)

    p = sub.add_parser("cylinder", help="Cesàro-mean scan of a cylinder rotation")
    p.add_argument("--alpha", required=True, help="identity | golden | sqrt2m1 | p/q | step:B,...:A,...")
    p.add_argument("--f", required=True, help='observable, e.g. "re(z^2)"')
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--grid", type=int, required=True)
    p.add_argument("--tol", type=float, required=True)
    p.add_argument("--csv", help="CSV output path (default: standard output)")
    p.add_argument("--samples", type=int, default=64, help="starting points per fiber")
    p.set_defaults(func=cmd_cylinder)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    try:
        return args.func(args)
    except (DiscSpecError, OSError) as exc:
        print(f"discspec: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
