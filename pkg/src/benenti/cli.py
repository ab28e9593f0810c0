"""Command line interface: verify, list and describe metric pairs.

Exit codes for ``verify``: 0 when every check passes, 1 when any check
fails, 2 when the input cannot be loaded (unknown catalog name, or a
pair file rejected with a line/column diagnostic).
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import catalog
from .errors import BenentiError, PairFileError, UnknownEntryError
from .pairfile import load_pair
from .verify import CHECK_IDS, VerifyConfig, verify_pair


def _resolve_pair(spec: str):
    """(pair, source, expected_equivalent) from a catalog name or a path."""
    if spec in catalog.list_entries():
        entry = catalog.get_entry(spec)
        return entry.pair, "catalog", entry.expected_equivalent
    if os.path.exists(spec) or os.sep in spec or spec.endswith(".yaml"):
        return load_pair(spec), spec, None
    raise UnknownEntryError(spec, list(catalog.list_entries()))


def _build_config(args) -> VerifyConfig:
    kwargs = dict(
        points=args.points,
        order=args.order,
        seed=args.seed,
        jobs=args.jobs,
    )
    if args.tol is not None:
        kwargs["tol"] = args.tol
    if args.t_grid is not None:
        kwargs["t_grid"] = tuple(args.t_grid)
    if args.checks is not None:
        kwargs["checks"] = tuple(args.checks)
    return VerifyConfig(**kwargs)


def cmd_verify(args) -> int:
    specs = list(args.pairs)
    if args.all:
        specs = [n for n in catalog.list_entries() if n not in specs] + specs
        specs.sort()
    if not specs:
        print("error: no pairs given (name, file path, or --all)", file=sys.stderr)
        return 2

    try:
        config = _build_config(args)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    documents = []
    all_passed = True
    for spec in specs:
        try:
            pair, source, expected = _resolve_pair(spec)
        except PairFileError as err:
            print(f"error: {err}", file=sys.stderr)
            return 2
        except UnknownEntryError as err:
            print(f"error: {err.args[0]}", file=sys.stderr)
            return 2
        except OSError as err:
            print(f"error: cannot read {spec}: {err}", file=sys.stderr)
            return 2

        report = verify_pair(
            pair, config, source=source, expected_equivalent=expected
        )
        all_passed = all_passed and report.passed
        documents.append(report)

    text = "---\n".join(doc.render() for doc in documents)
    if args.report is not None:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text)
        for doc in documents:
            verdict = "pass" if doc.passed else "fail"
            print(
                f"{doc.pair_name}: {verdict} "
                f"({len(doc.records)} records, {doc.failures} failures)"
            )
        print(f"report written to {args.report}")
    else:
        sys.stdout.write(text)
    return 0 if all_passed else 1


def cmd_list(_args) -> int:
    for name in catalog.list_entries():
        entry = catalog.get_entry(name)
        flag = "equivalent" if entry.expected_equivalent else "control"
        print(f"{name:24s} dim {entry.pair.dim}  {flag:10s} {entry.signature}")
    return 0


def _signature_text(values: np.ndarray) -> str:
    eigs = np.linalg.eigvalsh(values)
    pos = int(np.sum(eigs > 0))
    neg = int(np.sum(eigs < 0))
    kind = {0: "riemannian", 1: "lorentzian"}.get(neg if neg <= pos else pos)
    label = kind if kind else "indefinite"
    return f"({pos}+,{neg}-) {label}"


def _diagonalizability(L: np.ndarray) -> str:
    w, V = np.linalg.eig(L)
    if np.linalg.cond(V) > 1e8:
        return "not diagonalizable within tolerance"
    recon = V @ np.diag(w) @ np.linalg.inv(V)
    err = np.max(np.abs(recon - L)) / max(1.0, np.max(np.abs(L)))
    if err > 1e-8:
        return "not diagonalizable within tolerance"
    return "diagonalizable"


def cmd_describe(args) -> int:
    try:
        pair, source, expected = _resolve_pair(args.pair)
    except PairFileError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except UnknownEntryError as err:
        print(f"error: {err.args[0]}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: cannot read {args.pair}: {err}", file=sys.stderr)
        return 2

    print(f"pair: {pair.name or args.pair}")
    print(f"source: {source}")
    print(f"dimension: {pair.dim}")
    print(f"coordinates: {', '.join(pair.coordinates)}")
    domain = ", ".join(
        f"{c} in [{lo}, {hi}]" for c, (lo, hi) in pair.domain.items()
    )
    print(f"domain: {domain}")
    if expected is not None:
        print(f"expected_equivalent: {expected}")
    if pair.notes:
        print(f"notes: {pair.notes}")

    rng = np.random.default_rng(args.seed)
    print("sampled points:")
    for _ in range(args.samples):
        p = pair.sample_point(rng)
        frame = pair.frame(p, 0)
        Lv = frame.L.value()
        eigs = np.sort_complex(np.linalg.eigvals(Lv))
        eig_text = ", ".join(
            f"{e.real:.6g}" if abs(e.imag) < 1e-12 else f"{e:.6g}"
            for e in eigs
        )
        coords = ", ".join(f"{c:.4f}" for c in p)
        print(f"  point ({coords}):")
        print(f"    g signature: {_signature_text(frame.g.value())}")
        print(f"    gbar signature: {_signature_text(frame.gbar.value())}")
        print(f"    L eigenvalues: {eig_text}")
        print(f"    L is {_diagonalizability(Lv)}")
    return 0


def _float_list(text: str):
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def _check_list(text: str):
    names = [part.strip() for part in text.split(",") if part.strip()]
    unknown = [n for n in names if n not in CHECK_IDS]
    if unknown:
        raise argparse.ArgumentTypeError(
            f"unknown checks {unknown}; known: {', '.join(CHECK_IDS)}"
        )
    return names


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="benenti",
        description="Verify projective equivalence and its conserved "
        "quantities for pairs of metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser(
        "verify", help="run the check suite on catalog entries or pair files"
    )
    p_verify.add_argument("pairs", nargs="*", help="catalog names or file paths")
    p_verify.add_argument("--all", action="store_true", help="verify the whole catalog")
    p_verify.add_argument("--points", type=int, default=20, help="sample points per check")
    p_verify.add_argument("--order", type=int, default=4, help="jet order for frame checks")
    p_verify.add_argument(
        "--tol", type=float, default=None,
        help="override every per-check threshold with one value",
    )
    p_verify.add_argument(
        "--t-grid", type=_float_list, default=None, metavar="T1,T2,...",
        help="family parameters to test (default: eigenvalue-filtered grid)",
    )
    p_verify.add_argument("--seed", type=int, default=42, help="sampling seed")
    p_verify.add_argument(
        "--checks", type=_check_list, default=None, metavar="ID1,ID2,...",
        help=f"subset of checks to run (known: {', '.join(CHECK_IDS)})",
    )
    p_verify.add_argument(
        "--report", default=None, metavar="PATH",
        help="write the YAML report here instead of stdout",
    )
    p_verify.add_argument("--jobs", type=int, default=1, help="worker processes")
    p_verify.set_defaults(func=cmd_verify)

    p_list = sub.add_parser("list", help="list built-in catalog entries")
    p_list.set_defaults(func=cmd_list)

    p_desc = sub.add_parser(
        "describe", help="summarize a pair: signature, structure eigenvalues"
    )
    p_desc.add_argument("pair", help="catalog name or file path")
    p_desc.add_argument("--samples", type=int, default=3, help="points to inspect")
    p_desc.add_argument("--seed", type=int, default=42, help="sampling seed")
    p_desc.set_defaults(func=cmd_describe)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BenentiError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
