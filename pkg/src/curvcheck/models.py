"""Built-in model geometries with known ground truth.

Catalog (all charts have the boundary face at axis-0 value 0, axis 0
increasing inward):

* flat_half               identity metric on [0,1]^4
* flat_ball_collar        dr^2 + (1-r)^2 (round S^3), the flat unit
                          ball in boundary normal coordinates; pass
                          full_ball=True to extend the chart to the
                          whole ball (boundary data: P = 0, intrinsic
                          P = h/2, H = 3, W = 0)
* hemisphere              dr^2 + cos(r)^2 (round S^3), the round
                          upper half of the unit 4-sphere (boundary
                          data: P = g/2, intrinsic P = h/2, H = 0,
                          W = 0; interior R = 12)
* warped_umbilic          dr^2 + exp(2 psi(x,r)) k(x), umbilic
                          boundary by construction
* perturbed_flat          identity + eps * Q(x), seeded random cubic
                          Q; generic non-umbilic control
* perturbed_flat_geodesic normal-form perturbation with vanishing
                          first normal derivative on the face, so the
                          boundary is totally geodesic but curvature
                          is otherwise generic
* conformal               exp(2w) times any other model

Hyperspherical S^3 components carry the usual coordinate seams; the
chart domains stop short of them and quadrature nodes are interior,
so the seams only cost measure zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import product as _iproduct

import numpy as np

from . import exprs
from .charts import Chart, ExprMetricPatch, patch_from_dict
from .errors import ChartError, ConfigError, NonPositiveDefiniteError

SPHERE_COORDS = ("r", "t1", "t2", "t3")
BOX_COORDS = ("x0", "x1", "x2", "x3")

_ROUND_S3 = ("1", "sin(t1)^2", "sin(t1)^2*sin(t2)^2")

# Margins keeping the hyperspherical chart clear of coordinate seams
# while losing only ~1e-5 of the sphere volumes.
_T1 = (1e-2, math.pi - 1e-2)
_T2 = (1e-3, math.pi - 1e-3)
_T3 = (1e-6, 2 * math.pi - 1e-6)


@dataclass(frozen=True)
class ModelSpec:
    name: str
    params: dict = field(default_factory=dict)
    doc: str = ""


def _diag_patch(coords, domain, diag, name, params=None):
    comps = [["0"] * 4 for _ in range(4)]
    for i in range(4):
        comps[i][i] = diag[i]
    chart = Chart(tuple(coords), tuple(domain))
    return ExprMetricPatch(chart, comps, name=name, params=params)


def _flat_half(params):
    return _diag_patch(
        BOX_COORDS,
        ((0.0, 1.0),) * 4,
        ("1", "1", "1", "1"),
        "flat_half",
    )


def _hemisphere(params):
    domain = ((0.0, math.pi / 2 - 1e-3), _T1, _T2, _T3)
    diag = ("1",) + tuple(f"cos(r)^2*{k}" for k in _ROUND_S3)
    return _diag_patch(SPHERE_COORDS, domain, diag, "hemisphere")


def _flat_ball_collar(params):
    full = bool(params.get("full_ball", False))
    rmax = 1.0 - 1e-3 if full else 0.5
    domain = ((0.0, rmax), _T1, _T2, _T3)
    diag = ("1",) + tuple(f"(1-r)^2*{k}" for k in _ROUND_S3)
    return _diag_patch(
        SPHERE_COORDS, domain, diag, "flat_ball_collar", {"full_ball": full}
    )


_GENERIC_K = (
    ("1 + 0.3*sin(t2)", "0.1*sin(t1)*cos(t2)", "0"),
    ("0.1*sin(t1)*cos(t2)", "sin(t1)^2 + 0.2*sin(t2)^2", "0"),
    ("0", "0", "sin(t1)^2*sin(t2)^2 + 0.1"),
)


def _warped_umbilic(params):
    psi = params.get("psi", "0.1*r*sin(t1) + 0.05*cos(t1)")
    kind = params.get("k", "round")
    if kind == "round":
        k = (
            (_ROUND_S3[0], "0", "0"),
            ("0", _ROUND_S3[1], "0"),
            ("0", "0", _ROUND_S3[2]),
        )
    elif kind == "generic":
        k = _GENERIC_K
    else:
        k = kind  # explicit 3x3 of expression strings
    domain = ((0.0, 0.4), (0.4, math.pi - 0.4), (0.4, math.pi - 0.4), (0.4, 2 * math.pi - 0.4))
    chart = Chart(SPHERE_COORDS, domain)
    psi_ast = exprs.parse_expr(psi, SPHERE_COORDS)
    factor = exprs.Call("exp", exprs.e_mul(exprs.e_num(2.0), psi_ast))
    comps = [["0"] * 4 for _ in range(4)]
    comps[0][0] = "1"
    for i in range(3):
        for j in range(3):
            kij = k[i][j]
            ast = exprs.parse_expr(kij, SPHERE_COORDS) if isinstance(kij, str) else kij
            comps[i + 1][j + 1] = exprs.e_mul(factor, ast)
    return ExprMetricPatch(
        chart, comps, name="warped_umbilic", params={"psi": psi, "k": kind}
    )


def _monomials(coord_indices, degree):
    out = []
    for exps in _iproduct(range(degree + 1), repeat=len(coord_indices)):
        if 0 < sum(exps) <= degree:
            out.append(exps)
    return out


def _poly_ast(rng, coords, coord_indices, degree, n_terms):
    """Random polynomial with unit coefficient 1-norm."""
    monos = _monomials(coord_indices, degree)
    take = min(n_terms, len(monos))
    chosen = rng.choice(len(monos), size=take, replace=False)
    coeffs = rng.uniform(-1.0, 1.0, size=take)
    coeffs /= np.sum(np.abs(coeffs))
    terms = []
    for c, mi in zip(coeffs, chosen):
        node = exprs.e_num(c)
        for axis, e in zip(coord_indices, monos[mi]):
            for _ in range(e):
                node = exprs.e_mul(node, exprs.Coord(axis, coords[axis]))
        terms.append(node)
    return exprs.e_sum(terms)


def _spd_grid_check(patch, n=7):
    axes = [np.linspace(lo, hi, n) for lo, hi in patch.chart.domain]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 4)
    g = patch.component_values(pts)
    from .charts import _check_spd

    _check_spd(g, pts)


def _perturbed_flat(params):
    eps = float(params.get("eps", 0.05))
    seed = int(params.get("seed", 1))
    rng = np.random.default_rng(seed)
    comps = [[None] * 4 for _ in range(4)]
    for i in range(4):
        for j in range(i, 4):
            q = _poly_ast(rng, BOX_COORDS, (0, 1, 2, 3), 3, 10)
            ast = exprs.e_mul(exprs.e_num(eps), q)
            if i == j:
                ast = exprs.e_add(exprs.e_num(1.0), ast)
            comps[i][j] = ast
            comps[j][i] = ast
    chart = Chart(BOX_COORDS, ((0.0, 1.0),) * 4)
    patch = ExprMetricPatch(
        chart, comps, name="perturbed_flat", params={"eps": eps, "seed": seed}
    )
    _spd_grid_check(patch)
    return patch


def _perturbed_flat_geodesic(params):
    eps = float(params.get("eps", 0.05))
    seed = int(params.get("seed", 2))
    rng = np.random.default_rng(seed)
    comps = [["0"] * 4 for _ in range(4)]
    comps[0][0] = "1"
    x0 = exprs.Coord(0, BOX_COORDS[0])
    for i in range(1, 4):
        for j in range(i, 4):
            tang = _poly_ast(rng, BOX_COORDS, (1, 2, 3), 3, 8)
            deep = _poly_ast(rng, BOX_COORDS, (0, 1, 2, 3), 1, 4)
            q = exprs.e_add(tang, exprs.e_mul(exprs.e_mul(x0, x0), deep))
            ast = exprs.e_mul(exprs.e_num(eps), q)
            if i == j:
                ast = exprs.e_add(exprs.e_num(1.0), ast)
            comps[i][j] = ast
            comps[j][i] = ast
    chart = Chart(BOX_COORDS, ((0.0, 1.0),) * 4)
    patch = ExprMetricPatch(
        chart,
        comps,
        name="perturbed_flat_geodesic",
        params={"eps": eps, "seed": seed},
    )
    _spd_grid_check(patch)
    return patch


def _conformal(params):
    base = params.get("base", "hemisphere")
    if isinstance(base, str):
        base_patch = builtin_model(base, **params.get("base_params", {}))
    else:
        base_patch = base
    w = params.get("w", "0")
    from .functionals import conformal_rescale

    return conformal_rescale(base_patch, w)


_BUILDERS = {
    "flat_half": _flat_half,
    "flat_ball_collar": _flat_ball_collar,
    "hemisphere": _hemisphere,
    "warped_umbilic": _warped_umbilic,
    "perturbed_flat": _perturbed_flat,
    "perturbed_flat_geodesic": _perturbed_flat_geodesic,
    "conformal": _conformal,
}

MODEL_NAMES = tuple(_BUILDERS)


def builtin_model(spec, **params):
    """Instantiate a catalog model by name or ModelSpec."""
    if isinstance(spec, ModelSpec):
        name, params = spec.name, dict(spec.params, **params)
    else:
        name = spec
    if name not in _BUILDERS:
        raise ConfigError(
            f"unknown model {name!r}; available: {', '.join(MODEL_NAMES)}"
        )
    return _BUILDERS[name](params)


def catalog_patches(with_derived=True):
    """Instances used by the verification suites."""
    patches = [
        builtin_model("flat_half"),
        builtin_model("flat_ball_collar"),
        builtin_model("hemisphere"),
        builtin_model("warped_umbilic"),
        builtin_model("perturbed_flat"),
        builtin_model("perturbed_flat_geodesic"),
    ]
    if with_derived:
        patches.append(builtin_model("warped_umbilic", k="generic"))
    return patches


def shear_patch(patch, c, name=None):
    """The same geometry in sheared coordinates x_i -> x_i + c_i * x0.

    Produces a chart that is not in normal form (g_{0i} != 0) but has
    the same boundary face and the same induced boundary data; used as
    a chart-independence control.
    """
    if not isinstance(patch, ExprMetricPatch):
        raise ChartError("shearing needs an expression-backed patch")
    c = np.asarray(c, dtype=float)
    coords = patch.chart.coords
    x0 = exprs.Coord(0, coords[0])
    mapping = {}
    for i in range(1, 4):
        if c[i - 1] != 0.0:
            mapping[i] = exprs.e_add(
                exprs.Coord(i, coords[i]), exprs.e_mul(exprs.e_num(c[i - 1]), x0)
            )
    old = [[exprs.substitute(patch.components[i][j], mapping) for j in range(4)] for i in range(4)]
    comps = [[None] * 4 for _ in range(4)]
    terms00 = [old[0][0]]
    for i in range(1, 4):
        terms00.append(exprs.e_mul(exprs.e_num(2.0 * c[i - 1]), old[0][i]))
        for j in range(1, 4):
            terms00.append(
                exprs.e_mul(exprs.e_num(c[i - 1] * c[j - 1]), old[i][j])
            )
    comps[0][0] = exprs.e_sum(terms00)
    for j in range(1, 4):
        terms = [old[0][j]]
        for i in range(1, 4):
            terms.append(exprs.e_mul(exprs.e_num(c[i - 1]), old[i][j]))
        comps[0][j] = exprs.e_sum(terms)
        comps[j][0] = comps[0][j]
    for i in range(1, 4):
        for j in range(1, 4):
            comps[i][j] = old[i][j]

    (lo0, hi0) = patch.chart.domain[0]
    new_hi0 = hi0 * 0.5
    domain = [(0.0, new_hi0)]
    for i in range(1, 4):
        lo, hi = patch.chart.domain[i]
        shift = abs(c[i - 1]) * new_hi0
        domain.append((lo + (shift if c[i - 1] < 0 else 0.0), hi - (shift if c[i - 1] > 0 else 0.0)))
    chart = Chart(coords, tuple(domain))
    return ExprMetricPatch(
        chart, comps, name=name or f"{patch.name}_sheared", params=dict(patch.params, shear=tuple(c))
    )


# ---------------------------------------------------------------------------
# Random conformal factors for the law checks.


def random_sphere_factor(rng, amplitude=0.1):
    """Smooth function on the round hemisphere chart: a random linear
    combination of ambient coordinate functions, so it stays smooth
    across the hyperspherical seams."""
    basis = (
        "sin(r)",
        "cos(r)*cos(t1)",
        "cos(r)*sin(t1)*cos(t2)",
        "cos(r)*sin(t1)*sin(t2)*cos(t3)",
        "cos(r)*sin(t1)*sin(t2)*sin(t3)",
    )
    a = rng.uniform(-amplitude, amplitude, size=len(basis))
    return " + ".join(f"({c:.17g})*{b}" for c, b in zip(a, basis))


def random_poly_factor(rng, coords, amplitude=0.1, degree=2):
    ast = _poly_ast(rng, coords, tuple(range(len(coords))), degree, 6)
    return exprs.e_mul(exprs.e_num(amplitude), ast)


def load_metric_file(path):
    """Metric definition file: either the explicit-component document
    or {"model": name, "params": {...}}."""
    with open(path) as fh:
        doc = json.load(fh)
    if "model" in doc:
        return builtin_model(doc["model"], **doc.get("params", {}))
    return patch_from_dict(doc)
