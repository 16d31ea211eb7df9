"""``sjq`` command line: decompose, sj-check, state-eval, suite.

Exit codes: 0 all checks pass, 1 a check failed, 2 bad input.
Reports carry ``schema_version`` and no timestamps, so reruns with the same
arguments produce identical bytes.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .causet import RNG_NAME, pauli_jordan_from_green, retarded_green_2d_massless, sprinkle_diamond_2d
from .cfield import HbarGrid, classical_limit_berezin, norm_function, parallel_map, state_field, weyl_section
from .diagnostics import (
    DEFAULT_TOL,
    STATE_TOL,
    Check,
    kahler_checks,
    purity_checks,
    run_suite,
    sj_axiom_checks,
)
from .errors import MalformedInput, SJQError
from .fock import FockTruncation, weyl_vacuum_expectation
from .io import SCHEMA_VERSION, decomposition_report, dumps, load_input, read_covectors, rows_to_csv
from .kahler import InnerProductSpace, KahlerDecomposition, polar_decompose, restrict_to_image
from .sj import Covector, QuasiFreeState, SJOperator, purity_check, sj_operator, state_on_weyl
from .symbols import GaussianSymbol

MIN_CUTOFF = 4


@dataclass
class Pipeline:
    decomposition: KahlerDecomposition
    source: dict


def _validate(args) -> None:
    if args.tol <= 0:
        raise MalformedInput("--tol must be positive")
    if args.cutoff < MIN_CUTOFF:
        raise MalformedInput(f"--cutoff must be at least {MIN_CUTOFF}")
    if (args.input is None) == (args.sprinkle is None):
        raise MalformedInput("give exactly one of --input or --sprinkle")
    if args.sprinkle is not None and args.sprinkle <= 0:
        raise MalformedInput("--sprinkle density must be positive")


def build_pipeline(args) -> Pipeline:
    """Input -> off-shell operator -> restriction to its image -> Kahler data."""
    if args.sprinkle is not None:
        c = sprinkle_diamond_2d(args.sprinkle, args.seed)
        src = {"kind": "sprinkle", "density": args.sprinkle, "seed": args.seed, "rng": RNG_NAME, "elements": c.n}
        greens = retarded_green_2d_massless(c, args.coupling)
        e_off, gram = pauli_jordan_from_green(greens), None
        src["convention"] = greens.convention
    else:
        loaded = load_input(args.input)
        src = {"kind": loaded.kind, **loaded.meta}
        if loaded.kind == "matrix":
            e_off, gram = loaded.matrix, loaded.gram
        else:
            greens = retarded_green_2d_massless(loaded.causet, args.coupling)
            e_off, gram = pauli_jordan_from_green(greens), None
            src["elements"] = loaded.causet.n
            src["convention"] = greens.convention
    if gram is not None:
        InnerProductSpace(gram)
    restriction = restrict_to_image(e_off, gram, args.rank_tol)
    src["off_shell_dim"] = int(e_off.shape[0])
    src["rank"] = restriction.rank
    return Pipeline(polar_decompose(restriction.operator), src)


def _header(command: str, args, source: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool": f"sjq {__version__}",
        "command": command,
        "input": source,
        "config": {
            "hbar_grid": args.hbar_grid,
            "cutoff": args.cutoff,
            "tol": args.tol,
            "seed": args.seed,
        },
    }


def _verdict(checks: list[Check]) -> dict:
    return {
        "checks": [c.to_json() for c in checks],
        "failed": [c.name for c in checks if not c.passed],
        "pass": all(c.passed for c in checks),
    }


def _checks_csv(checks: list[Check]) -> str:
    return rows_to_csv(["check", "value", "threshold", "pass"], [(c.name, c.value, c.threshold, c.passed) for c in checks])


def _emit(args, name: str, text: str, extra: dict[str, str] | None = None) -> None:
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    for fname, body in (extra or {}).items():
        (out / fname).write_text(body)


def cmd_decompose(args) -> int:
    p = build_pipeline(args)
    k = p.decomposition
    grid = HbarGrid.parse(args.hbar_grid)
    checks = kahler_checks(k, args.tol)
    report = _header("decompose", args, p.source) | decomposition_report(k, grid.values) | _verdict(checks)
    if args.format == "csv":
        rows = [("theta", i, float(t)) for i, t in enumerate(k.thetas)]
        rows += [("lambda", repr(float(h)), float(k.lambda_of(h))) for h in grid.positive]
        rows += [("residual", c.name, c.value) for c in checks]
        _emit(args, "decomposition.csv", rows_to_csv(["quantity", "key", "value"], rows))
    else:
        _emit(args, "decomposition.json", dumps(report))
    return 0 if report["pass"] else 1


def cmd_sj_check(args) -> int:
    p = build_pipeline(args)
    k = p.decomposition
    grid = HbarGrid.parse(args.hbar_grid)
    hbar = grid.positive[0]
    e = k.operator
    a = sj_operator(k)
    if args.perturb:
        a = SJOperator(e.space, a.matrix + args.perturb * np.eye(e.dim))
    checks = sj_axiom_checks(a, e, args.tol) + purity_checks(k, hbar, args.tol)
    state = QuasiFreeState.sorkin_johnston(k, hbar)
    rep = purity_check(state, tol=args.tol)
    rng = np.random.default_rng(args.seed)
    samples = []
    for _ in range(args.samples):
        phi = 0.5 * rng.standard_normal(e.dim)
        samples.append({"phi": phi.tolist(), "value": state_on_weyl(phi, state).real})
    report = _header("sj-check", args, p.source) | {
        "hbar": hbar,
        "epsilon": args.perturb,
        "axiom_residuals": a.axiom_residuals(e),
        "theta_norm": rep.norm_theta,
        "is_pure": rep.is_pure,
        "state_positive": rep.positive,
        "state_samples": samples,
    } | _verdict(checks)
    if args.format == "csv":
        _emit(args, "sj_check.csv", _checks_csv(checks))
    else:
        _emit(args, "sj_check.json", dumps(report))
    return 0 if report["pass"] else 1


def cmd_state_eval(args) -> int:
    p = build_pipeline(args)
    k = p.decomposition
    grid = HbarGrid.parse(args.hbar_grid)
    if args.phis:
        phis = read_covectors(args.phis)
    else:
        rng = np.random.default_rng(args.seed)
        phis = [np.zeros(k.operator.dim)] + [0.5 * rng.standard_normal(k.operator.dim) for _ in range(args.samples)]
    covs = []
    for i, phi in enumerate(phis):
        if phi.shape != (k.operator.dim,):
            raise MalformedInput(f"covector {i} has length {phi.size}, expected {k.operator.dim}")
        covs.append(Covector.from_real(phi, k))

    def one(h):
        s = QuasiFreeState.sorkin_johnston(k, h)
        out = []
        for i, c in enumerate(covs):
            closed = state_on_weyl(c.real, s).real
            fock = weyl_vacuum_expectation(c, h, args.cutoff)
            diff = abs(fock - closed)
            out.append((repr(float(h)), i, closed, fock.real, diff, bool(diff <= STATE_TOL)))
        return out

    rows = [r for block in parallel_map(one, grid.positive) for r in block]
    ok = all(r[-1] for r in rows)
    header = ["hbar", "phi_index", "closed_form", "fock", "abs_diff", "agree"]
    if args.format == "json":
        report = _header("state-eval", args, p.source) | {
            "rows": [dict(zip(header, r)) for r in rows],
            "pass": ok,
        }
        _emit(args, "state_eval.json", dumps(report))
    else:
        _emit(args, "state_eval.csv", rows_to_csv(header, rows))
    return 0 if ok else 1


def cmd_suite(args) -> int:
    p = build_pipeline(args)
    k = p.decomposition
    grid = HbarGrid.parse(args.hbar_grid)
    checks = run_suite(k, grid, args.seed, args.tol, args.cutoff)
    report = _header("suite", args, p.source) | decomposition_report(k, grid.values) | _verdict(checks)
    phi = Covector.from_components([0.7 + 0.4j])
    ws = weyl_section(phi, grid, FockTruncation(1, args.cutoff))
    tables = {
        "norm_weyl.csv": norm_function(ws).to_csv(),
        "state_weyl.csv": state_field(ws).to_csv(),
        "berezin_distance.csv": classical_limit_berezin(GaussianSymbol.normalized([1.0]), grid).to_csv(),
    }
    if args.format == "csv":
        _emit(args, "suite.csv", _checks_csv(checks), tables)
    else:
        _emit(args, "suite.json", dumps(report), tables)
    return 0 if report["pass"] else 1


COMMANDS = {
    "decompose": cmd_decompose,
    "sj-check": cmd_sj_check,
    "state-eval": cmd_state_eval,
    "suite": cmd_suite,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="matrix (.csv / JSON envelope) or causal set (JSON / edge list)")
    common.add_argument("--sprinkle", type=float, metavar="DENSITY", help="sprinkle a 2D diamond instead of --input")
    common.add_argument("--seed", type=int, default=7, help="sprinkling seed")
    common.add_argument("--coupling", type=float, default=0.5, help="retarded Green operator scale")
    common.add_argument("--cutoff", type=int, default=40, help="Fock occupation cutoff per mode")
    common.add_argument("--hbar-grid", default="1:2^-16", help="geometric range A:B[:RATIO] or a comma list; 0 is appended")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="residual tolerance for pass/fail")
    common.add_argument("--rank-tol", type=float, default=1e-10, help="relative threshold for the image of E")
    common.add_argument("--out", metavar="DIR", help="write report files here instead of stdout")
    common.add_argument("--format", choices=["json", "csv"], default=None)

    parser = argparse.ArgumentParser(prog="sjq", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"sjq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("decompose", parents=[common], help="Kahler decomposition report")
    sj = sub.add_parser("sj-check", parents=[common], help="SJ axioms and purity")
    sj.add_argument("--perturb", type=float, default=0.0, metavar="EPS", help="add EPS times the identity to A")
    sj.add_argument("--samples", type=int, default=4, help="number of state samples in the report")
    se = sub.add_parser("state-eval", parents=[common], help="state on Weyl generators, two paths")
    se.add_argument("--phis", help="covector list (CSV rows or JSON {phis: [...]})")
    se.add_argument("--samples", type=int, default=4, help="random covectors when --phis is absent")
    sub.add_parser("suite", parents=[common], help="full diagnostic bundle")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = "csv" if args.command == "state-eval" else "json"
    try:
        _validate(args)
        return COMMANDS[args.command](args)
    except (SJQError, OSError) as exc:
        print(f"sjq: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
