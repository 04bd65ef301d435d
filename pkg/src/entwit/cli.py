"""Command-line interface: ``entwit <command> [flags]``.

Every command prints one JSON report on standard output. Exit codes:
0 ok, 2 parse or usage error, 3 validation error, 4 not converged (the
report is still printed), 5 precondition failure.
"""

from __future__ import annotations

import argparse
import datetime as dt
import os
import sys
import tempfile

import numpy as np

from entwit import __version__, bsa, ces, linops, order, states, witness
from entwit.exceptions import (
    DimensionError,
    NotEntangled,
    NotWitnessable,
    ParseError,
    PreconditionError,
    ValidationError,
)
from entwit.serialize import dump_report, read_operator

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_NOT_CONVERGED, EXIT_PRECONDITION = 0, 2, 3, 4, 5


def tolerances() -> dict:
    """Every fixed numerical threshold the library applies."""
    return {
        "hermitian_rtol": linops.HERMITIAN_RTOL,
        "pinv_cutoff": linops.PINV_CUTOFF,
        "range_cutoff": linops.RANGE_CUTOFF,
        "positivity": states.POSITIVITY_TOL,
        "trace": states.TRACE_TOL,
        "ppt": states.PPT_TOL,
        "separable_lambda": states.SEPARABLE_LAMBDA_TOL,
        "block_positive": witness.BLOCK_POSITIVE_TOL,
        "detection": witness.DETECTION_TOL,
        "range_overlap": bsa.RANGE_OVERLAP_TOL,
        "range_membership": bsa.MEMBERSHIP_TOL,
        "optimal_weight": bsa.OPTIMAL_WEIGHT_TOL,
        "pricing": bsa.PRICING_TOL,
        "finer_mu": order.MU_TOL,
        "family": order.FAMILY_TOL,
        "ces_orthonormal": ces.ORTHONORMAL_TOL,
    }


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load(path):
    try:
        return read_operator(path)
    except OSError as exc:
        raise _Failure(EXIT_PARSE, f"cannot read {path}: {exc.strerror or exc}") from exc


def _density(op):
    return states.make_density(op.matrix, op.dims)


def _report(args, inputs, verdicts, certificates=None, diagnostics=None) -> dict:
    diag = {"seed": args.seed, "restarts": args.restarts, "tol": args.tol, "tolerances": tolerances()}
    diag.update(diagnostics or {})
    return {
        "command": args.command_name,
        "version": __version__,
        "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
        "inputs": inputs,
        "verdicts": verdicts,
        "certificates": certificates or {},
        "diagnostics": diag,
    }


def cmd_classify(args):
    op, info = _load(args.path)
    result = witness.classify(op, restarts=args.restarts, seed=args.seed)
    diag = {}
    pm = result.evidence.get("product_minimum")
    if pm is not None:
        diag = {"restarts_agreeing": pm.restarts_agreeing, "product_minimum": pm.value}
    verdicts = {"tag": result.tag, "note": result.note}
    return _report(args, [info], verdicts, result.evidence, diag), EXIT_OK


def _pairs(result):
    return [{"weight": w, "e": pv.e, "f": pv.f} for w, pv in result.separable_part]


def cmd_bsa(args):
    op, info = _load(args.path)
    result = bsa.bsa_decompose(_density(op), tol=args.tol, max_iters=args.max_iters, seed=args.seed, restarts=args.restarts)
    verdicts = {"lambda": result.lam, "converged": result.converged, "trace_residual": result.trace_residual}
    certificates = {
        "separable_part": _pairs(result),
        "separable_state": result.separable_state,
        "remainder": result.remainder,
    }
    code = EXIT_OK if result.converged else EXIT_NOT_CONVERGED
    return _report(args, [info], verdicts, certificates, {"max_iters": args.max_iters, **result.diagnostics}), code


def cmd_finer(args):
    (op2, info2), (op1, info1) = _load(args.path1), _load(args.path2)
    v = order.is_finer(_density(op2), _density(op1), samples=args.samples, seed=args.seed)
    verdicts = {
        "tag": v.tag,
        "finer": v.finer,
        "epsilon": v.epsilon,
        "delta_hat": v.delta_hat,
        "P_separable": v.P_separable,
    }
    certificates = {"P": v.P, "counterexample": v.counterexample}
    return _report(args, [info2, info1], verdicts, certificates, {"samples": args.samples}), EXIT_OK


def cmd_family(args):
    (op1, info1), (op2, info2) = _load(args.path1), _load(args.path2)
    a = order.family_of(_density(op1), seed=args.seed, restarts=args.restarts)
    b = order.family_of(_density(op2), seed=args.seed, restarts=args.restarts)
    distance = a.distance(b)
    verdicts = {"same_family": distance <= order.FAMILY_TOL, "distance": distance}
    certificates = {"representative_1": a.representative, "representative_2": b.representative}
    return _report(args, [info1, info2], verdicts, certificates), EXIT_OK


def _dims(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def cmd_ces(args):
    return _report(args, [], {"dims": list(args.dims), "max_ces_dim": ces.max_ces_dim(args.dims)}), EXIT_OK


def _unit(text: str) -> float:
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 <= p <= 1.0:
        raise argparse.ArgumentTypeError(f"p must lie in [0, 1], got {p}")
    return p


def cmd_demo_werner(args):
    if args.p:
        grid = list(args.p)
    else:
        if args.grid < 2:
            raise _Failure(EXIT_PARSE, "--grid needs at least 2 points")
        grid = [float(p) for p in np.linspace(0, 1, args.grid)]
    v = states.BELL_VECTORS["phi_singlet"]
    flip = linops.partial_transpose(linops.projector(v, (2, 2)))
    points, all_converged = [], True
    for p in grid:
        rho = states.werner(p)
        verdict = states.is_separable(rho, certify=False, seed=args.seed)
        result = bsa.bsa_decompose(rho, tol=args.tol, seed=args.seed, restarts=args.restarts)
        all_converged &= result.converged
        points.append(
            {
                "p": p,
                "entangled": verdict.entangled,
                "classification": verdict.tag,
                "witness_value": linops.hs_inner(flip, rho),
                "lambda": result.lam,
                "remainder_fidelity": bsa.remainder_fidelity(result, states.BELL_VECTORS["psi_plus"]),
                "converged": result.converged,
            }
        )
    verdicts = {"points": points}
    code = EXIT_OK if all_converged else EXIT_NOT_CONVERGED
    return _report(args, [], verdicts, {"witness": flip}), code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--restarts", type=int, default=64, help="multistart count (default 64)")
    common.add_argument("--tol", type=float, default=1e-6, help="decomposition tolerance (default 1e-6)")
    common.add_argument("-o", "--output", help="write the report here instead of standard output")

    parser = argparse.ArgumentParser(prog="entwit", description="Entanglement witness hierarchy toolkit.")
    parser.add_argument("--version", action="version", version=f"entwit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="place an operator in the witness hierarchy")
    p.add_argument("path")
    p.set_defaults(func=cmd_classify, command_name="classify")

    p = sub.add_parser("bsa", parents=[common], help="best separable approximation of a state")
    p.add_argument("path")
    p.add_argument("--max-iters", type=int, default=10000)
    p.set_defaults(func=cmd_bsa, command_name="bsa")

    p = sub.add_parser("finer", parents=[common], help="is the first state finer than the second?")
    p.add_argument("path1")
    p.add_argument("path2")
    p.add_argument("--samples", type=int, default=order.DEFAULT_SAMPLES)
    p.set_defaults(func=cmd_finer, command_name="finer")

    p = sub.add_parser("family", parents=[common], help="do two states share an optimal entangled core?")
    p.add_argument("path1")
    p.add_argument("path2")
    p.set_defaults(func=cmd_family, command_name="family")

    p = sub.add_parser("ces", parents=[common], help="maximal completely entangled subspace dimension")
    p.add_argument("--dims", type=_dims, required=True, help="comma-separated factor dimensions, e.g. 2,3")
    p.set_defaults(func=cmd_ces, command_name="ces")

    demo = sub.add_parser("demo", help="worked examples")
    demo_sub = demo.add_subparsers(dest="demo", required=True)
    p = demo_sub.add_parser("werner", parents=[common], help="Werner family scan")
    p.add_argument("--p", type=_unit, action="append", help="mixing parameter; repeat for several")
    p.add_argument("--grid", type=int, default=11, help="uniform grid size on [0, 1] when --p is absent")
    p.set_defaults(func=cmd_demo_werner, command_name="demo werner")
    return parser


def _write(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(output))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".entwit-")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, output)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, code = args.func(args)
    except _Failure as exc:
        print(f"entwit: error: {exc}", file=sys.stderr)
        return exc.code
    except ParseError as exc:
        print(f"entwit: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DimensionError, ValidationError) as exc:
        print(f"entwit: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NotEntangled, NotWitnessable, PreconditionError) as exc:
        print(f"entwit: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    _write(dump_report(report), args.output)
    return code


if __name__ == "__main__":
    sys.exit(main())
