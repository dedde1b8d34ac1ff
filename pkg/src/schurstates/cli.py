"""Command-line front end.

Subcommands map one-to-one onto the library surface:

* ``check-kernel``  — Choi and observable-tuple positivity report;
* ``eval``          — finite-volume expectations, dense vs fast paths;
* ``limit``         — boundary matrix, limit expectation, projectivity;
* ``homog``         — overlap analysis and normalized limits;
* ``mixing-scan``   — gap table over clearances and strategies;
* ``selftest``      — seeded invariant battery.

Output is deterministic for fixed (model, flags, seed): JSON is dumped
with sorted keys, CSV uses LF line endings and 17-significant-digit
doubles.  Exit codes: 0 success, 1 validation failure or failed check,
2 convergence failure, 3 precondition violation.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import (
    ConvergenceError,
    PreconditionError,
    SchurStateError,
    ValidationError,
)
from .homogeneous import (
    HomogeneousModel,
    check_generic,
    detect_product,
    finite_volume_normalized,
    generic_limit,
    overlaps,
    real_overlap_limit,
)
from .kernel import certify_cp, kernel_gram_matrix, product_kernel_gram_matrix
from .limit import boundary_matrix, check_projectivity, default_exhaustion, limit_state_eval
from .mixing import mixing_scan
from .modelfile import encode_matrix, load_model, load_observable, parse_region
from .sampling import random_observable, rng_from_seed
from .selftest import run_selftest
from .state import (
    DEFAULT_DENSE_CAP,
    expectation_dense,
    expectation_extended,
    expectation_schur,
)

#: Default clearance list for mixing scans, truncated by --tmax.
SCAN_T_LIST = (5, 10, 20, 40)


def fmt(x: float) -> str:
    """17-significant-digit rendering used in every CSV cell."""
    return format(float(x), ".17g")


def cpair(z: complex) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def emit_json(payload: dict, stream) -> None:
    stream.write(json.dumps(payload, sort_keys=True, indent=1))
    stream.write("\n")


def flatten(prefix: str, value, rows: list) -> None:
    if isinstance(value, dict):
        for k in sorted(value):
            flatten(f"{prefix}.{k}" if prefix else str(k), value[k], rows)
    elif isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            flatten(f"{prefix}[{i}]", v, rows)
    elif isinstance(value, float):
        rows.append((prefix, fmt(value)))
    elif isinstance(value, bool):
        rows.append((prefix, "true" if value else "false"))
    else:
        rows.append((prefix, str(value)))


def emit_csv_flat(payload: dict, stream) -> None:
    rows: list = []
    flatten("", payload, rows)
    stream.write("key,value\n")
    for key, val in rows:
        stream.write(f"{key},{val}\n")


def emit(payload: dict, fmt_name: str, stream) -> None:
    if fmt_name == "csv":
        emit_csv_flat(payload, stream)
    else:
        emit_json(payload, stream)


def _envelope(args, command: str, results: dict) -> dict:
    return {
        "command": command,
        "model": getattr(args, "model", None),
        "seed": getattr(args, "seed", None),
        "results": results,
    }


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------


def cmd_check_kernel(args, out) -> int:
    spec = load_model(args.model)
    family = spec.family()
    if spec.sites is not None:
        sites = list(spec.sites)[:4]
    else:
        sites = default_exhaustion(family).prefix(4)
    rng = rng_from_seed(args.seed, 11)
    tol = args.tol
    site_reports = []
    all_pass = True
    for x in sites:
        rep = certify_cp(family, x, tol)
        gram_eigs = {}
        gram_ok = True
        for n in range(1, 5):
            bs = [random_observable(rng, family.d) for _ in range(n)]
            k = kernel_gram_matrix(family, x, bs)
            eigs = np.linalg.eigvalsh(0.5 * (k + k.conj().T))
            gram_eigs[str(n)] = float(eigs[0])
            scale = max(1.0, float(np.max(np.abs(eigs))))
            gram_ok = gram_ok and float(eigs[0]) >= -tol * scale
        all_pass = all_pass and rep.is_cp and gram_ok
        site_reports.append(
            {
                "site": str(x),
                "choi_min_eigenvalue": rep.min_eigenvalue,
                "cp_pass": rep.is_cp,
                "tuple_gram_min_eigenvalues": gram_eigs,
                "tuple_gram_pass": gram_ok,
            }
        )
    product_reports = []
    for count in (2, 3):
        if len(sites) < count:
            continue
        group = sites[:count]
        tuples = [
            tuple(random_observable(rng, family.d) for _ in group) for _ in range(3)
        ]
        k = product_kernel_gram_matrix(family, group, tuples)
        eigs = np.linalg.eigvalsh(0.5 * (k + k.conj().T))
        ok = float(eigs[0]) >= -tol * max(1.0, float(np.max(np.abs(eigs))))
        all_pass = all_pass and ok
        product_reports.append(
            {
                "sites": [str(s) for s in group],
                "min_eigenvalue": float(eigs[0]),
                "pass": ok,
            }
        )
    emit(
        _envelope(
            args,
            "check-kernel",
            {
                "sites": site_reports,
                "products": product_reports,
                "pass": all_pass,
            },
        ),
        args.format,
        out,
    )
    return 0 if all_pass else 1


def cmd_eval(args, out) -> int:
    spec = load_model(args.model)
    family = spec.family()
    obs = load_observable(args.observable, spec.lattice_dim)
    region = parse_region(args.region, spec.lattice_dim) if args.region else obs.region
    fast = expectation_schur(family, obs)
    extended = expectation_extended(family, region, obs)
    results = {
        "observable_region": [str(s) for s in obs.region],
        "region": [str(s) for s in region],
        "schur": cpair(fast),
        "extended": cpair(extended),
    }
    if len(region) <= DEFAULT_DENSE_CAP:
        dense = expectation_dense(family, region, obs)
        dense_small = expectation_dense(family, obs.region, obs)
        results["dense"] = cpair(dense)
        results["schur_vs_dense"] = abs(fast - dense_small)
        results["extended_vs_dense"] = abs(extended - dense)
    emit(_envelope(args, "eval", results), args.format, out)
    return 0


def cmd_limit(args, out) -> int:
    spec = load_model(args.model)
    family = spec.family()
    obs = load_observable(args.observable, spec.lattice_dim)
    beta = boundary_matrix(family, obs.region, tail_tol=args.tail_tol)
    value = limit_state_eval(family, obs, tail_tol=args.tail_tol)
    results = {
        "observable_region": [str(s) for s in obs.region],
        "boundary": encode_matrix(beta.matrix),
        "tail_bound": beta.tail_bound,
        "sites_consumed": beta.sites_consumed,
        "rigorous": beta.rigorous,
        "value": cpair(value),
    }
    if spec.summability_certificate() is not None:
        results["summability_certificate"] = spec.summability_certificate()
    if args.check_projectivity:
        if not args.region:
            raise ValidationError(
                "--check-projectivity needs --region with a superset of the "
                "observable region"
            )
        region = parse_region(args.region, spec.lattice_dim)
        rep = check_projectivity(
            family, region, obs, tol=args.tol, tail_tol=args.tail_tol
        )
        results["projectivity"] = {
            "region": [str(s) for s in rep.region],
            "gap": rep.gap,
            "tol": rep.tol,
            "pass": rep.passed,
        }
        emit(_envelope(args, "limit", results), args.format, out)
        return 0 if rep.passed else 1
    emit(_envelope(args, "limit", results), args.format, out)
    return 0


def cmd_homog(args, out) -> int:
    spec = load_model(args.model)
    if spec.mode != "homogeneous":
        raise PreconditionError(
            f"the homog command needs a homogeneous model, got mode {spec.mode!r}"
        )
    model = HomogeneousModel(spec.payload["reference"])
    ov = overlaps(model)
    generic = check_generic(ov)
    results = {
        "beta": encode_matrix(ov.matrix),
        "beta_max": ov.beta_max,
        "argmax": list(ov.argmax),
        "generic": generic,
        "constant_overlap": detect_product(ov, args.tol),
    }
    if args.observable:
        obs = load_observable(args.observable, spec.lattice_dim)
        if args.total_sites:
            results["finite_normalized"] = cpair(
                finite_volume_normalized(model, args.total_sites, obs)
            )
        if generic:
            results["generic_limit"] = cpair(generic_limit(model, obs))
        elif float(np.max(np.abs(np.imag(ov.matrix)))) <= 1e-12 * max(1.0, ov.beta_max):
            results["real_overlap_limit"] = cpair(real_overlap_limit(model, obs))
    emit(_envelope(args, "homog", results), args.format, out)
    return 0


def cmd_mixing_scan(args, out) -> int:
    spec = load_model(args.model)
    family = spec.family()
    if spec.lattice_dim is None:
        raise PreconditionError("mixing scans need a lattice model")
    obs_a = load_observable(args.observable, spec.lattice_dim)
    obs_b = load_observable(args.observable_far, spec.lattice_dim)
    t_list = [t for t in SCAN_T_LIST if t <= args.tmax]
    if not t_list:
        raise ValidationError(f"--tmax {args.tmax} leaves no clearances to scan")
    strategies = tuple(args.strategies.split(","))
    result = mixing_scan(
        family,
        obs_a,
        obs_b,
        t_list=t_list,
        strategies=strategies,
        seed=args.seed,
        tail_tol=args.tail_tol,
    )
    if args.format == "csv":
        out.write("t,strategy,mixing_gap,alpha_mixing_gap\n")
        for row in result.rows:
            out.write(
                f"{row.t},{row.strategy},{fmt(row.mixing_gap)},"
                f"{fmt(row.alpha_mixing_gap)}\n"
            )
    else:
        emit_json(
            _envelope(
                args,
                "mixing-scan",
                {
                    "rows": [
                        {
                            "t": row.t,
                            "strategy": row.strategy,
                            "mixing_gap": row.mixing_gap,
                            "alpha_mixing_gap": (
                                None
                                if np.isnan(row.alpha_mixing_gap)
                                else row.alpha_mixing_gap
                            ),
                        }
                        for row in result.rows
                    ],
                    "alpha_independent": result.alpha_independent,
                    "decrease_fraction": {
                        k: (None if np.isnan(v) else v)
                        for k, v in result.decrease_fraction.items()
                    },
                },
            ),
            out,
        )
    return 0


def cmd_selftest(args, out) -> int:
    report = run_selftest(seed=args.seed, threads=args.threads)
    emit(_envelope(args, "selftest", report), args.format, out)
    return 0 if report["pass"] else 1


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="schurstates",
        description=(
            "Superposition states from per-site fiber vectors: finite-volume "
            "evaluation, infinite-volume limits and mixing diagnostics."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=True):
        if model:
            p.add_argument("--model", required=True, help="model file (JSON)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--tol", type=float, default=1e-10, help="positivity tolerance")
        p.add_argument(
            "--tail-tol", dest="tail_tol", type=float, default=1e-12,
            help="tail product stopping tolerance",
        )
        p.add_argument("--seed", type=int, default=0)
        p.add_argument(
            "--threads", type=int, default=1,
            help="worker hint; evaluation is deterministic regardless",
        )
        p.add_argument("--output", help="write the report here instead of stdout")

    p = sub.add_parser("check-kernel", help="Choi and observable-tuple positivity report")
    common(p)
    p.set_defaults(func=cmd_check_kernel)

    p = sub.add_parser("eval", help="finite-volume expectations, dense vs fast paths")
    common(p)
    p.add_argument("--observable", required=True, help="observable file (JSON)")
    p.add_argument("--region", help="evaluation region, sites ';'-separated")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("limit", help="boundary matrix and limit expectation")
    common(p)
    p.add_argument("--observable", required=True)
    p.add_argument("--region", help="superset region for the projectivity check")
    p.add_argument(
        "--check-projectivity", action="store_true",
        help="compare the limit on --region (observable extended by identity)",
    )
    p.set_defaults(func=cmd_limit, tol=1e-9)

    p = sub.add_parser("homog", help="overlap analysis and normalized limits")
    common(p)
    p.add_argument("--observable")
    p.add_argument(
        "--total-sites", dest="total_sites", type=int,
        help="finite volume size for the normalized expectation",
    )
    p.set_defaults(func=cmd_homog)

    p = sub.add_parser("mixing-scan", help="gap table over clearances")
    common(p)
    p.add_argument("--observable", required=True, help="near-region observable")
    p.add_argument(
        "--observable-far", dest="observable_far", required=True,
        help="observable transported far away",
    )
    p.add_argument("--tmax", type=int, default=40)
    p.add_argument(
        "--strategies", default="translate",
        help="comma-separated embedding strategies (translate, random)",
    )
    p.set_defaults(func=cmd_mixing_scan, tail_tol=1e-14)

    p = sub.add_parser("selftest", help="seeded invariant battery")
    common(p, model=False)
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                return args.func(args, fh)
        return args.func(args, sys.stdout)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        if exc.last_partial is not None:
            print(f"last partial result:\n{exc.last_partial}", file=sys.stderr)
        if exc.tail_estimate is not None:
            print(f"tail estimate: {exc.tail_estimate}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"precondition error: {exc}", file=sys.stderr)
        return 3
    except SchurStateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
