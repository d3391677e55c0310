"""Coordinate charts with a boundary face and metric patches.

Conventions used throughout the package:

* every chart is a 4-dimensional box with the boundary face on the
  lower edge of axis 0, at coordinate value 0;
* the axis-0 coordinate increases inward, so the outward unit normal
  has a negative axis-0 component;
* a chart is in *normal form* when g00 = 1 and g0i = 0 identically on
  the collar, i.e. axis 0 is the distance to the boundary.

Charts, patches and point samples are immutable; metric evaluation is
pure and can be batched over many points at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import exprs
from .errors import ChartError, NonPositiveDefiniteError
from .jets import Jet, jet_space, jc_matrix_inverse, jet_variable

DIM = 4


@dataclass(frozen=True)
class Chart:
    coords: tuple
    domain: tuple  # ((lo, hi),) * 4
    boundary_axis: int = 0

    def __post_init__(self):
        if len(self.coords) != DIM or len(set(self.coords)) != DIM:
            raise ChartError("chart needs 4 distinct coordinate names")
        if len(self.domain) != DIM:
            raise ChartError("chart needs 4 domain intervals")
        for lo, hi in self.domain:
            if not lo < hi:
                raise ChartError(f"empty domain interval [{lo}, {hi}]")
        if self.boundary_axis != 0:
            raise ChartError("boundary face must sit on axis 0")
        if abs(self.domain[0][0]) > 0.0:
            raise ChartError("boundary face must be at coordinate value 0")

    def contains(self, coords, tol=1e-9):
        coords = np.asarray(coords)
        for axis, (lo, hi) in enumerate(self.domain):
            c = coords[..., axis]
            if np.any(c < lo - tol) or np.any(c > hi + tol):
                return False
        return True


@dataclass(frozen=True)
class PointSample:
    coords: np.ndarray
    is_boundary: bool

    @staticmethod
    def of(chart, coords, is_boundary=None):
        coords = np.asarray(coords, dtype=np.float64)
        if coords.shape != (DIM,):
            raise ChartError("a point sample has 4 coordinates")
        if not chart.contains(coords):
            raise ChartError(f"point {coords} outside chart domain")
        on_face = coords[0] == 0.0
        if is_boundary is None:
            is_boundary = bool(on_face)
        if is_boundary != on_face:
            raise ChartError("boundary flag inconsistent with coordinates")
        return PointSample(coords, is_boundary)


def _check_spd(values, pts):
    """values: (..., 4, 4) metric value matrices at pts (..., 4)."""
    sym = 0.5 * (values + np.swapaxes(values, -1, -2))
    try:
        np.linalg.cholesky(sym)
        return
    except np.linalg.LinAlgError:
        pass
    flat_v = sym.reshape(-1, DIM, DIM)
    flat_p = np.asarray(pts, dtype=float).reshape(-1, DIM)
    for k in range(flat_v.shape[0]):
        eig = np.linalg.eigvalsh(flat_v[k])
        if eig[0] <= 0.0:
            raise NonPositiveDefiniteError(flat_p[k], eig)
    raise NonPositiveDefiniteError(flat_p[0], np.linalg.eigvalsh(flat_v[0]))


class MetricPatch:
    """Base class: a chart plus an evaluator for the metric components."""

    def __init__(self, chart, name="patch", params=None):
        self.chart = chart
        self.name = name
        self.params = dict(params or {})

    # subclasses implement component_stack / component_values

    def component_stack(self, pts, order):
        raise NotImplementedError

    def component_values(self, pts):
        raise NotImplementedError

    def metric_jets(self, pts, order, check_spd=True):
        """Stacked metric jets: array (4, 4, *batch, ncoeff)."""
        g = self.component_stack(np.asarray(pts, dtype=np.float64), order)
        if check_spd:
            values = np.moveaxis(g[..., 0], (0, 1), (-2, -1))
            _check_spd(values, pts)
        return g


class ExprMetricPatch(MetricPatch):
    """Metric whose components are closed-form expressions."""

    def __init__(self, chart, components, name="patch", params=None):
        super().__init__(chart, name, params)
        comps = [[None] * DIM for _ in range(DIM)]
        for i in range(DIM):
            for j in range(DIM):
                ast = components[i][j]
                if isinstance(ast, str):
                    ast = exprs.parse_expr(ast, chart.coords)
                comps[i][j] = ast
        for i in range(DIM):
            for j in range(i + 1, DIM):
                if comps[i][j] != comps[j][i]:
                    raise ChartError(
                        f"metric components not symmetric at ({i},{j})"
                    )
        self.components = tuple(tuple(row) for row in comps)

    def component_stack(self, pts, order):
        pts = np.asarray(pts, dtype=np.float64)
        batch = pts.shape[:-1]
        dim = pts.shape[-1]
        seeds = [jet_variable(pts, axis, dim, order) for axis in range(dim)]
        sp = jet_space(dim, order)
        g = np.zeros((DIM, DIM) + batch + (sp.ncoeff,))
        for i in range(DIM):
            for j in range(i, DIM):
                jet = exprs.eval_with_seeds(
                    self.components[i][j], seeds, dim, order, batch
                )
                g[i, j] = jet.coeffs
                if i != j:
                    g[j, i] = jet.coeffs
        return g

    def component_values(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        batch = pts.shape[:-1]
        g = np.zeros(batch + (DIM, DIM))
        for i in range(DIM):
            for j in range(i, DIM):
                v = exprs.eval_expr(self.components[i][j], pts)
                g[..., i, j] = v
                g[..., j, i] = v
        return g

    def restricted_components(self):
        """Components with the normal coordinate frozen to 0."""
        zero = exprs.e_num(0.0)
        return tuple(
            tuple(exprs.substitute(c, {0: zero}) for c in row)
            for row in self.components
        )


class VariedMetricPatch(MetricPatch):
    """g + t * v for a symmetric variation field v."""

    def __init__(self, base, variation, t):
        super().__init__(base.chart, f"{base.name}+t*v", dict(base.params, t=t))
        self.base = base
        self.variation = variation
        self.t = float(t)

    def component_stack(self, pts, order):
        g = self.base.component_stack(pts, order)
        return g + self.t * self.variation.component_stack(pts, order)

    def component_values(self, pts):
        g = self.base.component_values(pts)
        return g + self.t * self.variation.component_values(pts)


# ---------------------------------------------------------------------------
# Spec-level operations.


def metric_at(patch, point, order):
    """All ten independent component jets at one point, SPD-checked.

    Returns a (4, 4) object array of Jets.
    """
    pts = point.coords if isinstance(point, PointSample) else np.asarray(point)
    stack = patch.metric_jets(pts, order, check_spd=True)
    sp = jet_space(DIM, order)
    out = np.empty((DIM, DIM), dtype=object)
    for i in range(DIM):
        for j in range(DIM):
            out[i, j] = Jet(sp, stack[i, j])
    return out


def invert_metric(gjets):
    """Jet-valued inverse of a symmetric jet matrix (object array)."""
    sp = gjets[0, 0].space
    stack = np.array([[gjets[i][j].coeffs for j in range(DIM)] for i in range(DIM)])
    inv = jc_matrix_inverse(sp, stack)
    out = np.empty((DIM, DIM), dtype=object)
    for i in range(DIM):
        for j in range(DIM):
            out[i, j] = Jet(sp, inv[i, j])
    return out


def is_normal_form(patch, n_samples=40, seed=0, tol=1e-10):
    """True when g00 = 1 and g0i = 0 throughout the collar (sampled)."""
    rng = np.random.default_rng(seed)
    pts = sample_points(patch.chart, n_samples, rng, inset=0.02)
    g = patch.component_values(pts)
    if np.max(np.abs(g[..., 0, 0] - 1.0)) > tol:
        return False
    return bool(np.max(np.abs(g[..., 0, 1:])) <= tol)


def sample_points(chart, n, rng, inset=0.05, boundary=False):
    """Random points in the chart box, inset from the faces.

    With boundary=True the axis-0 coordinate is pinned to the face.
    """
    lo = np.array([d[0] for d in chart.domain])
    hi = np.array([d[1] for d in chart.domain])
    span = hi - lo
    a = lo + inset * span
    b = hi - inset * span
    pts = rng.uniform(a, b, size=(n, DIM))
    if boundary:
        pts[:, 0] = 0.0
    return pts


def patch_from_dict(doc):
    """Build a patch from the metric definition document."""
    for key in ("name", "coords", "domain", "g"):
        if key not in doc:
            raise ChartError(f"metric file missing field {key!r}")
    if doc.get("boundary_axis", 0) != 0:
        raise ChartError("boundary_axis must be 0")
    chart = Chart(tuple(doc["coords"]), tuple(tuple(iv) for iv in doc["domain"]))
    g = doc["g"]
    if len(g) != DIM or any(len(row) != DIM for row in g):
        raise ChartError("g must be a 4x4 array of expressions")
    return ExprMetricPatch(chart, g, name=doc["name"])


def load_patch_file(path):
    with open(path) as fh:
        doc = json.load(fh)
    return patch_from_dict(doc)
