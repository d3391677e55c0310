"""Command-line interface.

Subcommands: verify | expand | functional | variation. Exit codes:
0 pass, 1 check failure, 2 configuration error, 3 evaluation error.
Skipped-precondition checks are listed but do not fail a run.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, boundary, functionals, models, report
from .curvature import convention_selftest
from .errors import ConfigError, CurvcheckError
from .charts import sample_points

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_EVAL = 3


def _add_common(p):
    p.add_argument("--model", help="builtin model name")
    p.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="model parameter (repeatable; values parsed as JSON when possible)",
    )
    p.add_argument("--metric-file", help="metric definition JSON file")
    p.add_argument("--points", type=int, default=50, help="samples per check")
    p.add_argument("--quad", type=int, default=16, help="quadrature nodes per axis")
    p.add_argument("--order", type=int, default=4, help="jet order (max 6)")
    p.add_argument("--seed", type=int, default=0, help="sampling seed")
    p.add_argument(
        "--tol",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="tolerance override (repeatable)",
    )
    p.add_argument("--json", dest="json_path", help="write a JSON report here")


def _parse_params(pairs):
    out = {}
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"expected KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _parse_tols(pairs):
    out = {}
    for item in pairs:
        if "=" not in item:
            raise ConfigError(f"expected NAME=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            out[key] = float(raw)
        except ValueError:
            raise ConfigError(f"tolerance value {raw!r} is not a number") from None
    return out


def _config_from(args, **extra):
    return report.SuiteConfig(
        model=args.model,
        model_params=_parse_params(args.param),
        metric_file=args.metric_file,
        points=args.points,
        order=args.order,
        quad=args.quad,
        seed=args.seed,
        tolerances=_parse_tols(args.tol),
        json_path=args.json_path,
        **extra,
    )


def cmd_verify(args):
    config = _config_from(args, suite=args.suite)
    rep = report.run_verification(config)
    for c in rep.checks:
        if c.skipped:
            status = "SKIP"
            detail = c.skipped
        else:
            status = "PASS" if c.passed else "FAIL"
            detail = f"max residual {c.max_residual:.3e} (tol {c.tolerance:.1e}, n={c.n_samples})"
        print(f"[{status}] {c.name:28s} {detail}")
    print(
        f"{'PASS' if rep.passed else 'FAIL'}: "
        f"{sum(1 for c in rep.checks if not c.skipped and c.passed)} passed, "
        f"{sum(1 for c in rep.checks if not c.skipped and not c.passed)} failed, "
        f"{sum(1 for c in rep.checks if c.skipped)} skipped "
        f"({rep.wall_time_s:.1f}s)"
    )
    if config.json_path:
        with open(config.json_path, "w") as fh:
            fh.write(rep.to_json())
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_expand(args):
    if args.order > 6:
        raise ConfigError("expansion order is capped at 6")
    config = _config_from(args)
    patch = report.resolve_patch(config)
    if args.point is not None:
        bpt = np.array([float(x) for x in args.point.split(",")])
        if len(bpt) != 4 or bpt[0] != 0.0:
            raise ConfigError("--point needs 4 comma-separated values with x0 = 0")
    else:
        bpt = np.array(
            [0.0] + [0.5 * (lo + hi) for lo, hi in patch.chart.domain[1:]]
        )
    order = args.order
    routes = {}
    routes["series"] = boundary.fermi_series_coefficients(patch, bpt, order)
    if order <= 4:
        routes["formula"] = boundary.fermi_formula_coefficients(patch, bpt, order)
    if order <= boundary.MAX_GEODESIC_ORDER:
        routes["geodesic"] = boundary.fermi_geodesic_expansion(patch, bpt, order)
    print(f"normal expansion of {patch.name} at {bpt.tolist()}:")
    doc = {"point": bpt.tolist(), "order": order, "routes": {}}
    for name, exp in routes.items():
        print(f"  route {name}:")
        for k, coeff in enumerate(exp.coefficients):
            print(f"    h({k}) =")
            for row in np.asarray(coeff).reshape(3, 3):
                print("      [" + "  ".join(f"{x: .10f}" for x in row) + "]")
        doc["routes"][name] = [np.asarray(c).reshape(3, 3).tolist() for c in exp.coefficients]
    names = list(routes)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            a, b = routes[names[i]], routes[names[j]]
            dev = max(
                float(np.max(np.abs(np.asarray(x) - np.asarray(y))))
                for x, y in zip(a.coefficients, b.coefficients)
            )
            print(f"  max deviation {names[i]} vs {names[j]}: {dev:.3e}")
            doc.setdefault("deviations", {})[f"{names[i]}-vs-{names[j]}"] = dev
    if config.json_path:
        with open(config.json_path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
    return EXIT_PASS


def cmd_functional(args):
    config = _config_from(args)
    params = dict(config.model_params)
    if args.full_ball:
        params["full_ball"] = True
    patch = (
        models.load_metric_file(config.metric_file)
        if config.metric_file
        else models.builtin_model(config.model, **params)
    )
    rep = functionals.functional_report(
        patch, functionals.QuadratureRule(args.quad), refine=not args.no_estimate
    )
    print(f"functionals of {patch.name} (n = {rep.n}, refined n = {rep.n_refined}):")
    for key, val in rep.results.items():
        err = rep.error_estimates[key]
        print(f"  {key:24s} = {val: .10f}   (quadrature estimate +/- {err:.2e})")
    if config.json_path:
        with open(config.json_path, "w") as fh:
            json.dump(
                {"results": rep.results, "error_estimates": rep.error_estimates,
                 "n": rep.n, "n_refined": rep.n_refined},
                fh, indent=2, sort_keys=True,
            )
    return EXIT_PASS


def cmd_variation(args):
    config = _config_from(args)
    patch = report.resolve_patch(config)
    rng = np.random.default_rng(config.seed)
    eps = patch.chart.domain[0][1]
    vsigma = report._seeded_vsigma(rng, patch.chart.coords)
    amp = args.amplitude
    if amp != 1.0:
        vsigma = [[f"({amp})*({e})" for e in row] for row in vsigma]
    v = functionals.build_umbilic_variation(patch, vsigma, eps)
    rule = functionals.QuadratureRule(min(args.quad, 10))
    bpts = sample_points(patch.chart, 16, rng, inset=0.08, boundary=True)
    lp = functionals.lp_constraint_residual(patch, v, bpts)
    rec = functionals.first_variation_check(patch, v, t_step=args.t_step, rule=rule)
    conv = functionals.variation_convergence_order(
        patch, v, t_step=0.02, rule=functionals.QuadratureRule(6)
    )
    print(f"variation check on {patch.name}:")
    print(f"  constraint residual        = {lp:.3e}")
    print(f"  numeric dW_b/dt            = {rec['numeric']: .10e}")
    print(f"  -<B,v> + boundary <S,v>    = {rec['formula']: .10e}")
    print(f"  relative residual          = {rec['rel_residual']:.3e}")
    print(f"  stencil Richardson ratio   = {conv['ratio']:.2f} "
          f"(order estimate {conv['order_estimate']:.2f})")
    if config.json_path:
        with open(config.json_path, "w") as fh:
            json.dump({"lp_residual": lp, **rec, **conv}, fh, indent=2, sort_keys=True)
    return EXIT_PASS


def build_parser():
    parser = argparse.ArgumentParser(
        prog="curvcheck",
        description="Verify curvature identities of 4-manifolds with boundary "
        "to near machine precision.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run verification suites")
    _add_common(p_verify)
    p_verify.add_argument(
        "--suite", default="all", help="suite name or 'all' (default)"
    )
    p_verify.set_defaults(func=cmd_verify)

    p_expand = sub.add_parser("expand", help="print the boundary normal expansion")
    _add_common(p_expand)
    p_expand.add_argument("--point", help="boundary point as x0,x1,x2,x3 (x0 = 0)")
    p_expand.set_defaults(func=cmd_expand)

    p_func = sub.add_parser("functional", help="evaluate the integral functionals")
    _add_common(p_func)
    p_func.add_argument(
        "--full-ball", action="store_true", help="extend flat_ball_collar to the whole ball"
    )
    p_func.add_argument(
        "--no-estimate", action="store_true", help="skip the 2n error estimate"
    )
    p_func.set_defaults(func=cmd_functional)

    p_var = sub.add_parser("variation", help="first-variation check")
    _add_common(p_var)
    p_var.add_argument("--t-step", type=float, default=1e-3)
    p_var.add_argument("--amplitude", type=float, default=1.0)
    p_var.set_defaults(func=cmd_variation)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        convention_selftest()
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CurvcheckError as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
