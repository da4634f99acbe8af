"""Command-line front end.

Subcommands
-----------
classify    decide global regularity of a tube system (exit 0/10/20)
diagnose    classify plus the full evidence trail
cf          continued-fraction tables: convergents | bounds | classify | condition-b
solve       solve L_j u = f (auto-normalizing; one-signed or all-real routes)
normalform  compute the averaging gauge and the normalized system
singular    build a certified slow-decay solution family for a non-regular system

Every command prints one deterministic report (see ``report.py``) to stdout;
``--out`` writes the same bytes to a file.  ``solve`` and ``singular``
additionally write their artifact (solution field / certified family) to a
positional output path.

Exit codes
----------
0    success (classify/diagnose: verdict Hypoelliptic)
10   classify/diagnose: verdict NotHypoelliptic
20   classify/diagnose: verdict Unknown
2    malformed input: bad JSON/flags/paths, unusable parameters
30   SolvabilityError          31   CompatibilityError
32   ZeroDivisorError          33   ProfileError / GeometryError / GridMismatch
34   MeanNotZero               40   RefusedHypoelliptic
41   WitnessMismatch / LadderMismatch / IntegralityError
50   any other domain error

``TORUS_HYPO_THREADS`` caps BLAS/OpenMP parallelism (set before numeric
modules load); reports are byte-deterministic regardless of thread count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from .errors import (
    CompatibilityError,
    DigitCapExceeded,
    DigitStreamExhausted,
    GeometryError,
    GridMismatch,
    IntegralityError,
    LadderMismatch,
    MalformedInput,
    MeanNotZero,
    OrderError,
    ProfileError,
    RefusedHypoelliptic,
    SolvabilityError,
    TorusHypoError,
    WitnessMismatch,
    ZeroDivisorError,
)
from .report import Report, input_digest

VERDICT_EXITS = {"Hypoelliptic": 0, "NotHypoelliptic": 10, "Unknown": 20}

# Complex samples allowed in a singular solution's materialized blocks.
_DENSE_SAMPLE_BUDGET = 1 << 19

_ERROR_EXITS = (
    (MalformedInput, 2),
    (OrderError, 2),
    (DigitStreamExhausted, 2),
    (DigitCapExceeded, 2),
    (SolvabilityError, 30),
    (CompatibilityError, 31),
    (ZeroDivisorError, 32),
    (ProfileError, 33),
    (GeometryError, 33),
    (GridMismatch, 33),
    (MeanNotZero, 34),
    (RefusedHypoelliptic, 40),
    (WitnessMismatch, 41),
    (LadderMismatch, 41),
    (IntegralityError, 41),
    (TorusHypoError, 50),
)


def _exit_code_for(exc: Exception) -> int:
    for cls, code in _ERROR_EXITS:
        if isinstance(exc, cls):
            return code
    raise exc


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------


def _apply_thread_cap() -> str | None:
    cap = os.environ.get("TORUS_HYPO_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, cap)
    return cap


def _read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise MalformedInput(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{path} is not valid JSON: {exc}") from exc


def _parse_order(args, default=None):
    """Resolve the regularity scale: --mode smooth > --s > spec default."""
    from .system import Order

    mode = getattr(args, "mode", None)
    if mode == "smooth":
        return Order.smooth()
    s = getattr(args, "s", None)
    if s is not None:
        return Order.gevrey(s)
    if mode == "gevrey" and default is not None and not default.is_gevrey:
        raise MalformedInput("--mode gevrey needs --s (spec declares no Gevrey order)")
    return default


def _load_spec(args):
    from .system import SystemSpec

    obj = _read_json(args.spec)
    spec = SystemSpec.from_json(obj)
    order = _parse_order(args, default=spec.order)
    if order is not spec.order and order is not None:
        spec = SystemSpec(
            n=spec.n,
            tubes=spec.tubes,
            order=order,
            vector_witness=spec.vector_witness,
            vector_assertion=spec.vector_assertion,
        )
    return spec


def _load_field(path):
    from .solver import FourierField

    if path.endswith((".bin", ".tff")):
        try:
            return FourierField.load_binary(path)
        except OSError as exc:
            raise MalformedInput(f"cannot read {path}: {exc}") from exc
    obj = _read_json(path)
    if isinstance(obj, dict) and "fields" in obj:
        return [FourierField.from_json_obj(x) for x in obj["fields"]]
    return FourierField.from_json_obj(obj)


def _write_field(field, path) -> None:
    if path.endswith((".bin", ".tff")):
        field.save_binary(path)
    else:
        field.save_json(path)


def _emit(report: Report, args) -> None:
    text = report.to_text()
    sys.stdout.write(text)
    out = getattr(args, "out", None)
    if out:
        with open(out, "wb") as fh:
            fh.write(text.encode("utf-8"))


# ---------------------------------------------------------------------------
# classify / diagnose
# ---------------------------------------------------------------------------


def cmd_classify(args, verbose: bool = False) -> int:
    from .system import classify_system

    spec = _load_spec(args)
    analysis, dio_verdict, verdict = classify_system(spec, n_max=args.horizon)
    body = {
        "verdict": verdict.to_json(),
        "order": spec.order.to_json(),
        "analysis": analysis.to_json(),
    }
    if dio_verdict is not None:
        body["vector_classification"] = dio_verdict.to_json()
    if verbose:
        body["tubes"] = [t.to_json() for t in spec.tubes]
        if spec.vector_witness is not None:
            body["vector_witness"] = spec.vector_witness.to_json()
        if spec.vector_assertion is not None:
            body["vector_assertion"] = spec.vector_assertion
    report = Report(
        command=[args.command, "--s", str(spec.order.to_json())],
        body=body,
        digest=input_digest(args.spec),
        runtime={"tubes": spec.n, "horizon": args.horizon, "ell": analysis.ell},
    )
    _emit(report, args)
    return VERDICT_EXITS[verdict.decision]


# ---------------------------------------------------------------------------
# cf
# ---------------------------------------------------------------------------


def cmd_cf(args) -> int:
    from . import diophantine as dio

    cf = dio.ContinuedFraction(dio.digit_stream_from_json(args.digits))
    body = {"digits": args.digits, "subcommand": args.cf_command}
    n = args.n
    if args.cf_command == "convergents":
        rows = []
        for i in range(1, n + 1):
            pair = cf.pair(i)
            if isinstance(pair, tuple):
                rows.append({"n": i, "p": pair[0], "q": pair[1]})
            else:
                rows.append({"n": i, "ln_p": pair.ln_p, "ln_q": pair.ln_q})
        body["convergents"] = rows
    elif args.cf_command == "bounds":
        iv = dio.approx_interval(cf, n)
        body["n"] = n
        body["lower"] = str(iv.lower)
        body["upper"] = str(iv.upper)
    elif args.cf_command == "classify":
        s = float(Fraction(args.s)) if args.s is not None else None
        verdict = dio.classify(cf, s=s, n_max=n)
        body["verdict"] = verdict.to_json()
        if n >= 2:
            body["mu_rows"] = [
                {"n": i, "mu": mu} for i, mu in dio.liouville_exponent_trend(cf, n)
            ]
        if s is not None:
            body["beta_rows"] = [
                {"n": i, "beta": b} for i, b in dio.exp_liouville_score(cf, s, n)
            ]
    elif args.cf_command == "condition-b":
        if args.s is None:
            raise MalformedInput("condition-b needs --s")
        s = float(Fraction(args.s))
        rows = dio.condition_B_check(cf, s, args.epsilon, args.big_n, n)
        body["rows"] = [
            {"n": args.big_n + i, "certified": bool(ok)} for i, ok in enumerate(rows)
        ]
        body["epsilon"] = args.epsilon
        body["N"] = args.big_n
    report = Report(
        command=["cf", args.cf_command, args.digits],
        body=body,
        digest=None,
        runtime={"n": n},
    )
    _emit(report, args)
    return 0


# ---------------------------------------------------------------------------
# normalform
# ---------------------------------------------------------------------------


def _probe_field(n: int, grid: int = 32, seed: int = 0):
    import numpy as np

    from .solver import FourierField

    rng = np.random.default_rng(seed)
    out = FourierField(n=n, grid_size=grid)
    shape = (grid,) * n
    for xi in (1, 2, 3):
        out.data[xi] = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return out


def cmd_normalform(args) -> int:
    from .normalform import build_normal_form, conjugation_residual

    spec = _load_spec(args)
    nf = build_normal_form(spec)
    resid = conjugation_residual(spec, _probe_field(spec.n))
    body = {
        "is_trivial": nf.is_trivial(),
        "primitives": [p.to_json() for p in nf.A],
        "normalized": nf.normalized.to_json(),
        "conjugation_residual": resid,
    }
    report = Report(
        command=["normalform"],
        body=body,
        digest=input_digest(args.spec),
        runtime={"tubes": spec.n, "probe_grid": 32},
    )
    _emit(report, args)
    return 0


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def cmd_solve(args) -> int:
    from .normalform import apply_gauge, build_normal_form
    from .solver import (
        apply_tube_operator,
        decay_report,
        residual,
        solve_by_division,
        solve_single_tube,
    )
    from .system import (
        NON_NEGATIVE_NOT_ZERO,
        NON_POSITIVE_NOT_ZERO,
        analyze,
    )
    from .errors import InsufficientData

    spec = _load_spec(args)
    nf = build_normal_form(spec)
    nspec = nf.normalized
    analysis = analyze(nspec)

    loaded = _load_field(args.rhs)
    f_list = loaded if isinstance(loaded, list) else [loaded]
    gauged = [
        f if nf.is_trivial() else apply_gauge(f, nf.A, "forward") for f in f_list
    ]

    body = {"normalized": not nf.is_trivial()}
    if not nf.is_trivial():
        body["primitives"] = [p.to_json() for p in nf.A]

    if analysis.ell == nspec.n:
        if len(gauged) != nspec.n:
            raise MalformedInput(
                f"the all-real route needs {nspec.n} right-hand sides "
                f'(rhs file with {{"fields": [...]}}), got {len(gauged)}'
            )
        u_n = solve_by_division(nspec, gauged, digits=args.precision)
        body["route"] = "division"
        u = u_n if nf.is_trivial() else apply_gauge(u_n, nf.A, "inverse")
        res = residual(spec, u, f_list)
        body["residual"] = [
            {"tube": j + 1, "max_abs": r} for j, r in enumerate(res)
        ]
        body["meta"] = {
            k: v for k, v in u_n.meta.items() if k in ("zero_mode_normalized", "min_divisor")
        }
    else:
        one_signed = [
            j
            for j, p in enumerate(analysis.profiles, start=1)
            if p in (NON_NEGATIVE_NOT_ZERO, NON_POSITIVE_NOT_ZERO)
        ]
        if not one_signed:
            raise ProfileError(
                "no tube is one-signed with b not identically zero and not all "
                "tubes are real: no direct solve route exists for this system"
            )
        tube = one_signed[0]
        f = gauged[tube - 1] if len(gauged) == nspec.n else gauged[0]
        f_orig = f_list[tube - 1] if len(f_list) == nspec.n else f_list[0]
        u_n = solve_single_tube(tube, nspec, f, internal_modes=args.modes)
        body["route"] = "single-tube"
        body["tube"] = tube
        u = u_n if nf.is_trivial() else apply_gauge(u_n, nf.A, "inverse")
        r = (apply_tube_operator(spec, tube, u) - f_orig).max_abs()
        body["residual"] = [{"tube": tube, "max_abs": r}]

    if spec.order.is_gevrey:
        try:
            body["decay_fit"] = decay_report(u, spec.order.s).to_json()
        except InsufficientData as exc:
            body["decay_fit"] = {"skipped": str(exc)}
    _write_field(u, args.out_field)
    body["output"] = args.out_field

    report = Report(
        command=["solve"],
        body=body,
        digest=input_digest(args.spec),
        runtime={
            "frequencies": len(u.xi_values),
            "grid": u.grid_size,
            "rhs_fields": len(f_list),
        },
    )
    _emit(report, args)
    return 0


# ---------------------------------------------------------------------------
# singular
# ---------------------------------------------------------------------------


def _lcm(values) -> int:
    import math

    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


def cmd_singular(args) -> int:
    from .diophantine import LiouvilleWitness, scale_witness
    from .singular import (
        build_expliouville_J,
        build_product,
        build_prop51,
        build_prop52,
        build_rational_J,
        fit_lower_bound_power,
    )
    from .system import SystemSpec, classify_system

    spec = _load_spec(args)
    analysis, dio_verdict, verdict = classify_system(spec)
    if verdict.decision != "NotHypoelliptic":
        raise RefusedHypoelliptic(
            f"the system is not certified irregular (verdict: {verdict.decision}); "
            f"{verdict.explanation}"
        )
    order = spec.order
    s = order.s if order.is_gevrey else 2.0

    J = list(analysis.J)
    rest = [j for j in range(1, spec.n + 1) if j not in J]

    # Common ladder multiple: clear every rational denominator in sight.
    denoms = []
    for j in range(1, spec.n + 1):
        a0 = analysis.a0[j - 1]
        if a0.is_rational:
            denoms.append(a0.approx_fraction().denominator)
    q = _lcm(denoms) if denoms else 1
    k_max = max(1, args.xi_max // q)
    xi_top = q * k_max

    # Materialized n-dimensional blocks are limited two ways (the scalar
    # certificate tables are grid-free and always cover the full ladder):
    # every integer phase written to the field must stay below the grid
    # Nyquist limit, and the total sample count must fit a fixed budget.
    # The field may live on a coarser divisor grid — grid data are pointwise
    # samples, so striding is exact — picked to maximize the dense rungs.
    rate = max(
        (abs(float(analysis.a0[j - 1].mpf())) for j in range(1, spec.n + 1)),
        default=0.0,
    )

    def _cap_for(g: int) -> int:
        safe = g // 2 - max(8, g // 8)
        cap = min(args.field_cap, xi_top)
        if rate > 0:
            cap = min(cap, int(safe / rate))
        return max(cap, 0)

    choices = []
    g = args.grid
    while True:
        cap = _cap_for(g)
        count = sum(1 for k in range(1, k_max + 1) if q * k <= cap)
        count = min(count, _DENSE_SAMPLE_BUDGET // (g**spec.n))
        choices.append((count, g, cap))
        if g % 2 or g // 2 < 32:
            break
        g //= 2
    n_dense, field_grid, field_cap = max(choices)
    dense = [q * k for k in range(1, k_max + 1) if q * k <= field_cap][:n_dense]

    all_rational_J = bool(J) and all(analysis.a0[j - 1].is_rational for j in J)
    witness_rungs: list = []
    wuse = None
    if J and not all_rational_J:
        if spec.vector_witness is None:
            raise WitnessMismatch(
                "the averaged vector over the real tubes is irrational: the "
                "construction needs an explicit approximation witness "
                "(vector_witness) and none was supplied"
            )
        if not order.is_gevrey:
            raise WitnessMismatch(
                "the witness-driven construction is defined on the Gevrey "
                "scale; rerun with --s"
            )
        wsc = scale_witness(spec.vector_witness, q, s)
        rows = [(r, s_k) for r, s_k in wsc.pairs if s_k <= xi_top]
        if not rows:
            raise WitnessMismatch(
                f"no witness row has denominator <= {xi_top}; raise --xi-max"
            )
        wuse = LiouvilleWitness(
            delta=wsc.delta, pairs=rows, bound_scale=wsc.bound_scale
        )
        witness_rungs = [s_k for _, s_k in rows]

    dense_all = sorted(set(dense) | set(witness_rungs))
    per_tube_cap = max(dense_all, default=0)

    per_tube = []
    chain = []
    for j in rest:
        a0 = analysis.a0[j - 1]
        b = spec.tubes[j - 1].b
        b0 = analysis.b0[j - 1]
        b0_zero = b0.is_rational and b0.approx_fraction() == 0
        if a0.is_rational and b0_zero:
            frac = a0.approx_fraction()
            qj = frac.denominator
            sol = build_prop51(
                frac,
                b,
                0,
                grid_size=args.grid,
                ladder=[(q * k) // qj for k in range(1, k_max + 1)],
            )
        else:
            sol = build_prop52(
                a0,
                b,
                s,
                xi_top,
                grid_size=args.grid,
                field_xi_cap=per_tube_cap,
                fit_window=(max(8, xi_top // 8), xi_top),
            )
        per_tube.append(sol)
        chain.append({"tube": j, "construction": sol.construction})

    solution = None
    if rest:
        sub = SystemSpec(
            n=len(rest), tubes=[spec.tubes[j - 1] for j in rest], order=order
        )
        solution = build_product(
            sub, per_tube, q, k_max,
            dense_rungs=dense_all,
            field_grid=field_grid,
        )

    if J:
        if all_rational_J:
            solution = build_rational_J(
                spec, solution, q, k_max=k_max, dense_rungs=dense,
                grid_size=field_grid,
            )
            chain.append({"tubes": J, "construction": "RationalJ"})
        else:
            solution = build_expliouville_J(
                spec, wuse, solution, q, grid_size=field_grid
            )
            chain.append({"tubes": J, "construction": "ExpLiouvilleJ"})

    table = solution.certificates["lower_bound_table"]
    body = {
        "construction": solution.construction,
        "chain": chain,
        "q": q,
        "k_max": k_max,
        "field_cap": field_cap,
        "field_grid": solution.coefficients.grid_size,
        "dense_rungs": len(solution.coefficients.xi_values),
        "m": solution.certificates.get("m", 0),
        "ladder_head": solution.ladder[:8],
        "ladder_size": len(solution.ladder),
        "lower_bound_head": table[:8],
        "verdict": verdict.to_json(),
    }
    if len(table) >= 8:
        body["table_power_fit"] = fit_lower_bound_power(solution)
    if "residual_real_tubes" in solution.certificates:
        body["residual_real_tubes"] = solution.certificates["residual_real_tubes"]
    if "row_checks" in solution.certificates:
        body["row_checks"] = solution.certificates["row_checks"]

    with open(args.out_solution, "w", encoding="utf-8") as fh:
        json.dump(solution.to_json_obj(), fh)
    body["output"] = args.out_solution

    report = Report(
        command=["singular"],
        body=body,
        digest=input_digest(args.spec),
        runtime={
            "rungs": len(solution.ladder),
            "grid": args.grid,
            "tubes": spec.n,
        },
    )
    _emit(report, args)
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="torus-hypo",
        description="Certified global regularity analysis for tube systems on the torus.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, spec_arg=True):
        if spec_arg:
            p.add_argument("spec", help="system spec JSON path")
        p.add_argument("--s", default=None, help="Gevrey order (decimal or rational, e.g. 2 or 3/2)")
        p.add_argument("--mode", choices=("gevrey", "smooth"), default=None)
        p.add_argument("--precision", type=int, default=60, help="digits for constant evaluation")
        p.add_argument("--out", default=None, help="also write the report to this path")

    p = sub.add_parser("classify", help="decide global regularity")
    common(p)
    p.add_argument("--horizon", type=int, default=6, help="continued-fraction depth")

    p = sub.add_parser("diagnose", help="classify with the full evidence trail")
    common(p)
    p.add_argument("--horizon", type=int, default=6)

    p = sub.add_parser("cf", help="continued-fraction tables")
    p.add_argument("cf_command", choices=("convergents", "bounds", "classify", "condition-b"))
    p.add_argument("digits", help='digit stream: "constant:2", "factorial_pow10", or "a1,a2,..."')
    p.add_argument("--s", default=None)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--big-n", dest="big_n", type=int, default=2)
    p.add_argument("--out", default=None)

    p = sub.add_parser("solve", help="solve the tube equation(s)")
    common(p)
    p.add_argument("rhs", help="right-hand side field (JSON, or binary .bin/.tff)")
    p.add_argument("out_field", help="output path for the solution field")
    p.add_argument("--modes", type=int, default=None, help="internal mode count override")

    p = sub.add_parser("normalform", help="averaging gauge and normalized system")
    common(p)

    p = sub.add_parser("singular", help="build a certified slow-decay family")
    common(p)
    p.add_argument("out_solution", help="output path for the solution + certificate JSON")
    p.add_argument("--xi-max", dest="xi_max", type=int, default=256)
    p.add_argument("--grid", type=int, default=128)
    p.add_argument(
        "--field-cap",
        dest="field_cap",
        type=int,
        default=64,
        help="materialize coefficient blocks only up to this frequency "
        "(the certified bound table always covers the full ladder)",
    )

    return top


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "classify":
            return cmd_classify(args, verbose=False)
        if args.command == "diagnose":
            return cmd_classify(args, verbose=True)
        if args.command == "cf":
            return cmd_cf(args)
        if args.command == "normalform":
            return cmd_normalform(args)
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "singular":
            return cmd_singular(args)
        raise MalformedInput(f"unknown command {args.command!r}")
    except TorusHypoError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return _exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
