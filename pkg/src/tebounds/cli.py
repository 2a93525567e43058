"""Command-line interface.

Subcommands:

* ``bounds``        evaluate the configured estimands over the sensitivity grid
* ``breakdown``     smallest odds-ratio level at which an interval covers a target
* ``oracle-check``  brute-force certification of the closed forms on a small problem
* ``convert``       sensitivity-parameterization conversions as a utility

Exit codes: 0 success, 2 input validation failure, 3 overlap violation,
4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import sys

from .errors import (
    EXIT_INPUT,
    EXIT_INTERNAL,
    EXIT_OK,
    EXIT_OVERLAP,
    InputError,
    InternalError,
    OverlapError,
)
from .problem import (
    EstimandRequest,
    SensitivitySpec,
    load_config,
    problem_from_config,
)
from .report import breakdown as run_breakdown
from .report import run


def _parse_grid(text: str) -> list[float]:
    """Parse '1:3:0.25' (inclusive range) or '1,1.5,2' (explicit list)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise InputError(f"grid ranges look like start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise InputError("grid step must be positive")
        values = []
        k = 0
        while True:
            v = start + k * step
            if v > stop + 1e-12:
                break
            values.append(v)
            k += 1
        if not values:
            raise InputError(f"grid {text!r} is empty")
        return values
    return [float(p) for p in text.split(",") if p.strip() != ""]


def _parse_estimand(text: str) -> EstimandRequest:
    """Parse 'qte:tau=0.5' style estimand flags."""
    name, _, rest = text.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, _, value = item.partition("=")
            if not value:
                raise InputError(f"bad estimand parameter {item!r} in {text!r}")
            params[key.strip()] = value.strip()
    return EstimandRequest.make(name.strip(), **params)


def _build_problem(args, need_estimands: bool):
    config = load_config(args.config) if args.config else {}
    problem = problem_from_config(
        config,
        data_path=args.data,
        cells_path=args.cells,
        epsilon=args.epsilon_overlap,
        drop_nonoverlap=True if args.drop_nonoverlap else None,
    )
    if args.grid:
        values = _parse_grid(args.grid)
        kind = problem.sensitivity.kind
        if kind == "msm":
            spec = SensitivitySpec.msm(values)
        elif kind == "conditional_c":
            spec = SensitivitySpec.conditional_c(values)
        else:
            raise InputError(f"--grid cannot override sensitivity kind {kind!r}")
        problem = _replace_sensitivity(problem, spec)
    if args.estimand:
        requests = []
        for text in args.estimand:
            req = _parse_estimand(text)
            params = req.param_dict()
            if req.name in ("qte", "qtt", "qcate", "qdte", "cqte") and "tau" not in params:
                if args.tau is None:
                    raise InputError(f"estimand {req.name!r} needs --tau or an inline tau")
                req = EstimandRequest.make(req.name, tau=args.tau, **params)
            if req.name == "dte" and "z" not in params:
                if args.z is None:
                    raise InputError("estimand 'dte' needs --z or an inline z")
                req = EstimandRequest.make("dte", z=args.z, **params)
            requests.append(req)
        problem = _replace_requests(problem, tuple(requests))
    if problem.dropped_cells:
        print(
            "note: dropped non-overlap cells and reweighted: "
            + ", ".join(problem.dropped_cells),
            file=sys.stderr,
        )
    if need_estimands and not problem.requests:
        print("note: no estimands requested; report carries provenance only", file=sys.stderr)
    return problem


def _replace_sensitivity(problem, spec):
    from dataclasses import replace

    return replace(problem, sensitivity=spec)


def _replace_requests(problem, requests):
    from dataclasses import replace

    return replace(problem, requests=requests)


def _cmd_bounds(args) -> int:
    problem = _build_problem(args, need_estimands=True)
    report = run(problem, breakdown_target=args.breakdown_target)
    csv_text = report.to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv_text)
    else:
        sys.stdout.write(csv_text)
    if args.text_out:
        with open(args.text_out, "w") as fh:
            fh.write(report.to_text())
    return EXIT_OK


def _cmd_breakdown(args) -> int:
    problem = _build_problem(args, need_estimands=False)
    if not args.estimand:
        raise InputError("breakdown needs --estimand")
    if len(args.estimand) != 1:
        raise InputError("breakdown takes exactly one --estimand")
    req = _parse_estimand(args.estimand[0])
    params = req.param_dict()
    if req.name in ("qte", "qtt", "qcate", "cqte") and "tau" not in params and args.tau is not None:
        req = EstimandRequest.make(req.name, tau=args.tau, **params)
    value = run_breakdown(problem, req, target=args.target, lambda_max=args.lambda_max)
    if value is None:
        print(f"breakdown({req.name}, target={args.target:g}): not reached by lambda={args.lambda_max:g}")
    else:
        print(f"breakdown({req.name}, target={args.target:g}): lambda={value:.6f}")
    return EXIT_OK


def _cmd_oracle_check(args) -> int:
    from .envelopes import (
        compute_envelopes,
        envelope_quantile,
        envelope_quantile_closed_form,
    )
    from .oracle import MAX_SUPPORT, attainable_cdf_profile, attainable_param_range, verify_witness
    from .estimands import cate_bounds

    problem = _build_problem(args, need_estimands=False)
    n = args.resolution
    failures = 0
    for gi in range(len(problem.sensitivity.points)):
        label = problem.sensitivity.point_label(gi)
        for cell in problem.cells:
            sens = problem.sensitivity.cell_sensitivity(gi, cell)
            env = compute_envelopes(cell, sens)
            if max(cell.f_treated.support.size, cell.f_control.support.size) > MAX_SUPPORT:
                print(f"[{label}] cell {cell.id}: skipped (support too large to enumerate)")
                continue
            worst_gap = 0.0
            worst_exit = 0.0
            q_mismatch = 0
            for arm in (0, 1):
                profile = attainable_cdf_profile(cell, sens, arm, resolution=n)
                for y, lo, hi in profile:
                    elo = env.marginal(arm, "lo").cdf(y)
                    ehi = env.marginal(arm, "hi").cdf(y)
                    worst_exit = max(worst_exit, elo - lo, hi - ehi)
                    worst_gap = max(worst_gap, abs(lo - elo), abs(hi - ehi))
                # attainable quantile range must hit the quantile bounds,
                # and the direct inversion must match the closed forms
                q_lo, q_hi = attainable_param_range(
                    cell, sens, "quantile", resolution=min(n, 120), arm=arm, tau=0.5
                )
                if q_lo != envelope_quantile(env, arm, "lo", 0.5) or q_hi != envelope_quantile(
                    env, arm, "hi", 0.5
                ):
                    q_mismatch += 1
                for tau in (0.1, 0.5, 0.9):
                    for side in ("lo", "hi"):
                        for cond in ("marginal", "cross"):
                            direct = envelope_quantile(env, arm, side, tau, cond)
                            closed = envelope_quantile_closed_form(
                                cell, sens, arm, side, tau, cond
                            )
                            if direct != closed:
                                q_mismatch += 1
            witness_ok = all(
                verify_witness(cell, sens, arm, side, env=env).passed
                for arm in (0, 1)
                for side in ("lo", "hi")
            )
            c_lo, c_hi = attainable_param_range(cell, sens, "cate", resolution=min(n, 120))
            cb = cate_bounds(env)
            cate_exit = max(cb.lo - c_lo, c_hi - cb.hi, 0.0)
            cate_gap = max(abs(c_lo - cb.lo), abs(c_hi - cb.hi))
            ok = (
                worst_exit <= 1e-9
                and worst_gap <= 1e-6
                and witness_ok
                and cate_exit <= 1e-9
                and cate_gap <= 1e-6
                and q_mismatch == 0
            )
            failures += 0 if ok else 1
            print(
                f"[{label}] cell {cell.id}: {'ok' if ok else 'FAIL'}"
                f" (cdf gap {worst_gap:.2e}, exit {worst_exit:.2e},"
                f" cate gap {cate_gap:.2e}, quantile mismatches {q_mismatch},"
                f" witness {'ok' if witness_ok else 'FAIL'})"
            )
    if failures:
        raise InternalError(f"oracle check failed for {failures} cell/grid combinations")
    print("oracle check passed")
    return EXIT_OK


def _cmd_convert(args) -> int:
    from .sensitivity import CellSensitivity, GmsmBounds, cdep_from_gmsm, gmsm_from_cdep

    p1 = args.p1
    if args.c_lo is not None or args.c_hi is not None:
        if args.c_lo is None or args.c_hi is None:
            raise InputError("provide both --c-lo and --c-hi")
        s = CellSensitivity(args.c_lo, args.c_hi)
        g = gmsm_from_cdep(p1, s)
    elif args.lam is not None:
        g = GmsmBounds.symmetric(args.lam)
        s = cdep_from_gmsm(p1, g)
    elif args.lambda_lo is not None or args.lambda_hi is not None:
        if args.lambda_lo is None or args.lambda_hi is None:
            raise InputError("provide both --lambda-lo and --lambda-hi")
        g = GmsmBounds(args.lambda_lo, args.lambda_hi)
        s = cdep_from_gmsm(p1, g)
    else:
        raise InputError("provide --lam, --lambda-lo/--lambda-hi, or --c-lo/--c-hi")
    print(f"p1={p1:.12g}")
    print(f"c_lo={s.c_lo:.12g} c_hi={s.c_hi:.12g}")
    print(f"lambda_lo={g.lambda_lo:.12g} lambda_hi={g.lambda_hi:.12g}")
    return EXIT_OK


def _add_io_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="micro-data CSV path")
    p.add_argument("--cells", help="cell-summary CSV path")
    p.add_argument("--config", help="YAML config path")
    p.add_argument("--grid", help="sensitivity grid, start:stop:step or comma list")
    p.add_argument("--estimand", action="append", help="estimand, e.g. ate or qte:tau=0.5")
    p.add_argument("--tau", type=float, help="default quantile level for quantile estimands")
    p.add_argument("--z", type=float, help="default threshold for the dte estimand")
    p.add_argument("--epsilon-overlap", type=float, default=None, help="strict overlap epsilon")
    p.add_argument(
        "--drop-nonoverlap",
        action="store_true",
        help="drop cells violating overlap and reweight instead of aborting",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tebounds",
        description="Partial-identification bounds for treatment effects under relaxed unconfoundedness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_bounds = sub.add_parser("bounds", help="evaluate bounds over a sensitivity grid")
    _add_io_flags(p_bounds)
    p_bounds.add_argument("--out", help="write the CSV report here instead of stdout")
    p_bounds.add_argument("--text-out", help="also write a plain-text report here")
    p_bounds.add_argument(
        "--breakdown-target",
        type=float,
        default=None,
        help="also report, per copula-free estimand, the smallest lambda covering this value",
    )
    p_bounds.set_defaults(func=_cmd_bounds)

    p_break = sub.add_parser("breakdown", help="smallest lambda whose interval covers a target")
    _add_io_flags(p_break)
    p_break.add_argument("--target", type=float, default=0.0)
    p_break.add_argument("--lambda-max", type=float, default=100.0)
    p_break.set_defaults(func=_cmd_breakdown)

    p_oracle = sub.add_parser("oracle-check", help="brute-force certification on a small problem")
    _add_io_flags(p_oracle)
    p_oracle.add_argument("--resolution", type=int, default=120)
    p_oracle.set_defaults(func=_cmd_oracle_check)

    p_conv = sub.add_parser("convert", help="convert between sensitivity parameterizations")
    p_conv.add_argument("--p1", type=float, required=True)
    p_conv.add_argument("--lam", type=float, help="symmetric odds-ratio level")
    p_conv.add_argument("--lambda-lo", type=float)
    p_conv.add_argument("--lambda-hi", type=float)
    p_conv.add_argument("--c-lo", type=float)
    p_conv.add_argument("--c-hi", type=float)
    p_conv.set_defaults(func=_cmd_convert)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OverlapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OVERLAP
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
