"""Integrals, conformal transformations and metric variations.

Quadrature is tensor-product Gauss-Legendre on the chart box (nodes
strictly interior, so coordinate seams and degenerate chart edges are
never touched); boundary integrals use the same rule on the three
tangential axes with the induced-metric volume element.

Node evaluations are independent and chunked; accumulation is a plain
ordered numpy sum, so results are reproducible bit for bit for a fixed
node count and backend.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import exprs
from .boundary import BoundaryFrame, nu_contract, _h_norm2
from .charts import (
    ExprMetricPatch,
    VariedMetricPatch,
    is_normal_form,
    sample_points,
)
from .curvature import CurvatureFrame, bach_direct_frame, values
from .errors import NormalFormError, PreconditionError, SPDLossError
from .jets import (
    Jet,
    jc_deriv,
    jc_int_pow,
    jc_matrix_inverse,
    jc_mul,
    jet_space,
    jet_variable,
)

_CHUNK_LIGHT = 2048  # order <= 2 pipelines
_CHUNK_HEAVY = 512  # order 4 pipelines (Bach on quadrature nodes)


@dataclass(frozen=True)
class QuadratureRule:
    """Per-axis Gauss-Legendre node count (boundary rule: same on the
    three tangential axes)."""

    n: int = 16

    def __post_init__(self):
        if self.n < 2:
            raise PreconditionError("quadrature needs at least 2 nodes per axis")

    def axis_nodes(self, lo, hi, n=None):
        x, w = np.polynomial.legendre.leggauss(n or self.n)
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        return mid + half * x, half * w

    def interior(self, chart):
        axes = [self.axis_nodes(lo, hi) for lo, hi in chart.domain]
        grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
        pts = np.stack(grids, axis=-1).reshape(-1, 4)
        wts = np.einsum(
            "a,b,c,d->abcd", *[a[1] for a in axes]
        ).reshape(-1)
        return pts, wts

    def boundary(self, chart):
        axes = [self.axis_nodes(lo, hi) for lo, hi in chart.domain[1:]]
        grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
        tang = np.stack(grids, axis=-1).reshape(-1, 3)
        pts = np.concatenate([np.zeros((len(tang), 1)), tang], axis=1)
        wts = np.einsum("a,b,c->abc", *[a[1] for a in axes]).reshape(-1)
        return pts, wts


def integrate(patch, density, rule, chunk=_CHUNK_LIGHT):
    """Tensor-product Gauss-Legendre integral of density * sqrt(det g).

    density maps an (N, 4) point array to N values.
    """
    pts, wts = rule.interior(patch.chart)
    total = 0.0
    for s in range(0, len(pts), chunk):
        p = pts[s : s + chunk]
        g = patch.component_values(p)
        vol = np.sqrt(np.linalg.det(g))
        total += float(np.sum(wts[s : s + chunk] * density(p) * vol))
    return total


def boundary_integrate(patch, density, rule, chunk=_CHUNK_LIGHT):
    """Boundary integral with the induced-metric volume element."""
    pts, wts = rule.boundary(patch.chart)
    total = 0.0
    for s in range(0, len(pts), chunk):
        p = pts[s : s + chunk]
        g = patch.component_values(p)
        vol = np.sqrt(np.linalg.det(g[..., 1:, 1:]))
        total += float(np.sum(wts[s : s + chunk] * density(p) * vol))
    return total


def _one(_pts):
    return 1.0


def volume(patch, rule):
    return integrate(patch, _one, rule)


def boundary_volume(patch, rule):
    return boundary_integrate(patch, _one, rule)


def scalar_curvature_density(patch):
    def density(pts):
        fr = CurvatureFrame.from_patch(patch, pts, 2, check_spd=False)
        return np.asarray(values(fr.scalar(0)))

    return density


def mean_curvature_density(patch):
    def density(pts):
        bf = BoundaryFrame(patch, pts, 2)
        return np.asarray(values(bf.mean_curvature3(0)))

    return density


def weyl_norm2_density(patch):
    """|W|^2 as a section of End(Lambda^2): one quarter of the full
    four-index contraction."""

    def density(pts):
        fr = CurvatureFrame.from_patch(patch, pts, 2, check_spd=False)
        w = values(fr.weyl(0))
        ginv = values(fr.metric_inv(0))
        w_up = w
        for _ in range(4):
            # raise the leading index, then rotate it to the back
            w_up = np.moveaxis(
                np.einsum("ax...,xbcd...->abcd...", ginv, w_up), 0, 3
            )
        return 0.25 * np.einsum("abcd...,abcd...->...", w_up, w)

    return density


def einstein_hilbert_boundary(patch, rule):
    """Total scalar curvature plus twice the total mean curvature."""
    bulk = integrate(patch, scalar_curvature_density(patch), rule)
    bdry = boundary_integrate(patch, mean_curvature_density(patch), rule)
    return bulk + 2.0 * bdry


def yamabe_quotient(patch, rule):
    """Volume-normalized total curvature, scale invariant in 4d."""
    vol = volume(patch, rule)
    if vol <= 0.0:
        raise PreconditionError("zero volume")
    return einstein_hilbert_boundary(patch, rule) / math.sqrt(vol)


def weyl_energy(patch, rule):
    """(interior Weyl energy, the same plus the boundary term
    2 * int W_{i nu j nu} L^{ij})."""
    bulk = integrate(patch, weyl_norm2_density(patch), rule)

    def bdensity(pts):
        bf = BoundaryFrame(patch, pts, 2)
        fr = bf.frame
        nu = bf.normal_values()
        w_nn = nu_contract(values(fr.weyl(0)), nu, [0, 2])[1:, 1:]
        hinv = values(bf.induced_inverse3(0))
        ell_up = np.einsum(
            "ik...,jl...,kl...->ij...", hinv, hinv, values(bf.shape_jets3(0))
        )
        return np.einsum("ij...,ij...->...", w_nn, ell_up)

    bdry = boundary_integrate(patch, bdensity, rule)
    return bulk, bulk + 2.0 * bdry


# ---------------------------------------------------------------------------
# Conformal rescaling.


def conformal_rescale(patch, w):
    """exp(2w) times the metric, composed at the expression level so
    jets of the rescaled metric stay exact."""
    if not isinstance(patch, ExprMetricPatch):
        raise PreconditionError("conformal rescaling needs an expression patch")
    w_ast = exprs.parse_expr(w, patch.chart.coords) if isinstance(w, str) else w
    factor = exprs.Call("exp", exprs.e_mul(exprs.e_num(2.0), w_ast))
    comps = [
        [exprs.e_mul(factor, patch.components[i][j]) for j in range(4)]
        for i in range(4)
    ]
    return ExprMetricPatch(
        patch.chart,
        comps,
        name=f"conformal({patch.name})",
        params=dict(patch.params, w=exprs.pretty(w_ast)),
    )


def conformal_law_residuals(patch, w, n_interior=20, n_boundary=20, seed=0,
                            rule=None, with_boundary_energy=True):
    """Pointwise conformal-law residuals of the Bach and S tensors,
    plus the conformal invariance of the boundary Weyl energy.

    For g~ = exp(2w) g the laws are B~ = exp(-2w) B (components) and
    S~ = exp(-w) S.
    """
    from .curvature import bach_direct

    w_ast = exprs.parse_expr(w, patch.chart.coords) if isinstance(w, str) else w
    rescaled = conformal_rescale(patch, w_ast)
    rng = np.random.default_rng(seed)
    out = {}

    ipts = sample_points(patch.chart, n_interior, rng, inset=0.08)
    b_base, _ = bach_direct(patch, ipts)
    b_resc, _ = bach_direct(rescaled, ipts)
    w_vals = exprs.eval_expr(w_ast, ipts)
    out["bach_law"] = float(
        np.max(np.abs(b_resc - np.exp(-2.0 * w_vals) * b_base))
    )

    bpts = sample_points(patch.chart, n_boundary, rng, inset=0.08, boundary=True)
    from .boundary import s_tensor

    s_base = s_tensor(patch, bpts).components
    s_resc = s_tensor(rescaled, bpts).components
    wb_vals = exprs.eval_expr(w_ast, bpts)
    out["s_law"] = float(np.max(np.abs(s_resc - np.exp(-wb_vals) * s_base)))

    if with_boundary_energy:
        rule = rule or QuadratureRule(10)
        _, wb0 = weyl_energy(patch, rule)
        _, wb1 = weyl_energy(rescaled, rule)
        out["weyl_energy_base"] = wb0
        out["weyl_energy_rescaled"] = wb1
        out["weyl_energy_invariance"] = abs(wb1 - wb0) / max(1.0, abs(wb0))
    return out


# ---------------------------------------------------------------------------
# Variation fields.


def _bump_coeffs(space, u):
    """Jet coefficients of the cutoff profile (1 - u^2)^4 on |u| < 1,
    zero outside.

    The polynomial profile keeps every windowed integrand analytic
    inside the chart box whenever the window spans a full axis (the
    C^3 joins then sit on the box faces, outside the open quadrature
    nodes), so Gauss-Legendre converges at spectral rate. An
    exponential bump profile was tried first and left the numeric
    functional derivatives quadrature-limited near 1e-1 relative at
    any practical node count.
    """
    out = np.zeros_like(u)
    inside = np.abs(u[..., 0]) < 1.0
    if np.any(inside):
        usub = u[inside]
        w = -jc_mul(space, usub, usub)
        w[..., 0] += 1.0
        out[inside] = jc_int_pow(space, w, 4)
    return out


def _half_bump_coeffs(space, x0, eps):
    """Collar cutoff chi(x0) = (1 - (x0/eps)^2)^4: chi(0) = 1,
    chi'(0) = 0, chi = 0 for x0 >= eps (three derivatives vanish at
    the join, which sits on the box face when eps is the full chart
    depth)."""
    return _bump_coeffs(space, x0 / eps)


def _axis_window_coeffs(space, seed, lo, hi):
    u = 2.0 * seed / (hi - lo)
    u = np.array(u)
    u[..., 0] -= (lo + hi) / (hi - lo)
    return _bump_coeffs(space, u)


class VariationField:
    """Symmetric 2-tensor variation supported in a boundary collar.

    v_i0 = v_00 = 0; v_ij = chi(x0) * win(x) * (P_tf vS)_ij plus, when
    the boundary has nonzero mean curvature, the normal-derivative
    correction x0 * c_ij with c = -(2/3) H (P_tf vS) that keeps the
    umbilicity constraint satisfied to first order. On minimal
    boundaries (H = 0) the correction vanishes and the field is the
    plain cut-off trivial extension. The trace projection P_tf removes
    the induced-metric trace of vS pointwise.
    """

    def __init__(self, patch, vsigma, eps, window=True, correct_normal=True):
        if not is_normal_form(patch):
            raise NormalFormError("variation fields need a normal-form chart")
        if not isinstance(patch, ExprMetricPatch):
            raise PreconditionError("variation fields need an expression patch")
        lo0, hi0 = patch.chart.domain[0]
        if not 0.0 < eps <= hi0:
            raise PreconditionError(f"collar width {eps} exceeds chart depth {hi0}")
        self.patch = patch
        self.eps = float(eps)
        self.window = window
        self.correct_normal = correct_normal
        coords = patch.chart.coords
        self.vsigma = [
            [
                exprs.parse_expr(vsigma[i][j], coords)
                if isinstance(vsigma[i][j], str)
                else vsigma[i][j]
                for j in range(3)
            ]
            for i in range(3)
        ]
        for i in range(3):
            for j in range(3):
                if self.vsigma[i][j] != self.vsigma[j][i]:
                    raise PreconditionError("vSigma must be symmetric")
        self._restricted = patch.restricted_components()
        self._warned = False

    def tangential_profile(self, seeds, space):
        prof = np.ones(seeds[0].coeffs.shape[:-1] + (space.ncoeff,)) * 0.0
        prof[..., 0] = 1.0
        if not self.window:
            return prof
        for axis in range(1, 4):
            lo, hi = self.patch.chart.domain[axis]
            prof = jc_mul(
                space, prof, _axis_window_coeffs(space, seeds[axis].coeffs, lo, hi)
            )
        return prof

    def component_stack(self, pts, order):
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, 4)
        sp = jet_space(4, order)
        batch = pts.shape[:-1]
        seeds = [jet_variable(pts, a, 4, order) for a in range(4)]

        # Induced boundary metric, trivially extended (restricted ASTs
        # do not reference x0).
        h = np.empty((3, 3) + batch + (sp.ncoeff,))
        for i in range(3):
            for j in range(i, 3):
                jet = exprs.eval_with_seeds(
                    self._restricted[i + 1][j + 1], seeds, 4, order, batch
                )
                h[i, j] = jet.coeffs
                h[j, i] = jet.coeffs
        hinv = jc_matrix_inverse(sp, h)
        vs = np.empty((3, 3) + batch + (sp.ncoeff,))
        for i in range(3):
            for j in range(i, 3):
                jet = exprs.eval_with_seeds(self.vsigma[i][j], seeds, 4, order, batch)
                vs[i, j] = jet.coeffs
                vs[j, i] = jet.coeffs
        trace = np.zeros(batch + (sp.ncoeff,))
        for i in range(3):
            for j in range(3):
                trace += jc_mul(sp, hinv[i, j], vs[i, j])
        vtf = vs - jc_mul(sp, (trace / 3.0)[None, None], h)
        if not self._warned and np.max(np.abs(vtf[..., 0])) < 1e-12 * max(
            1.0, np.max(np.abs(vs[..., 0]))
        ):
            warnings.warn(
                "trace projection annihilated the variation (pure-trace input)"
            )
            self._warned = True

        if self.correct_normal:
            g = self.patch.metric_jets(pts, order + 1, check_spd=False)
            sp1 = jet_space(4, order + 1)
            ell = -0.5 * jc_deriv(sp1, g[1:, 1:], 0)
            ginv_t = jc_matrix_inverse(sp, g[1:, 1:][..., : sp.ncoeff])
            hmean = np.zeros(batch + (sp.ncoeff,))
            for i in range(3):
                for j in range(3):
                    hmean += jc_mul(sp, ginv_t[i, j], ell[i, j])
            corr = jc_mul(
                sp,
                jc_mul(sp, seeds[0].coeffs, -(2.0 / 3.0) * hmean)[None, None],
                vtf,
            )
            vtf = vtf + corr

        chi = _half_bump_coeffs(sp, seeds[0].coeffs, self.eps)
        profile = jc_mul(sp, chi, self.tangential_profile(seeds, sp))
        out = np.zeros((4, 4) + batch + (sp.ncoeff,))
        out[1:, 1:] = jc_mul(sp, profile[None, None], vtf)
        return out

    def component_values(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        batch = pts.shape[:-1]
        stack = self.component_stack(pts, 0)
        vals = stack[..., 0].reshape((4, 4) + batch)
        return np.moveaxis(vals, (0, 1), (-2, -1))


class InteriorVariation:
    """Symmetric 2-tensor isolating the interior term of the first
    variation: all ten components are random quadratics under a
    product window vanishing to fourth order at every chart face
    (boundary face included), so no boundary term survives the
    integrations by parts. With shrink = 0 the window joins sit on
    the faces and every integrand stays analytic inside the box."""

    def __init__(self, patch, seed=0, amplitude=0.1, shrink=0.0):
        self.patch = patch
        self.amplitude = float(amplitude)
        self.shrink = float(shrink)
        rng = np.random.default_rng(seed)
        from .models import random_poly_factor

        coords = patch.chart.coords
        self.components = [
            [None] * 4 for _ in range(4)
        ]
        for i in range(4):
            for j in range(i, 4):
                ast = random_poly_factor(rng, coords, amplitude=1.0, degree=2)
                self.components[i][j] = ast
                self.components[j][i] = ast

    def _windows(self):
        out = []
        for lo, hi in self.patch.chart.domain:
            span = hi - lo
            out.append((lo + self.shrink * span, hi - self.shrink * span))
        return out

    def component_stack(self, pts, order):
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, 4)
        sp = jet_space(4, order)
        batch = pts.shape[:-1]
        seeds = [jet_variable(pts, a, 4, order) for a in range(4)]
        prof = None
        for axis, (lo, hi) in enumerate(self._windows()):
            b = _axis_window_coeffs(sp, seeds[axis].coeffs, lo, hi)
            prof = b if prof is None else jc_mul(sp, prof, b)
        out = np.zeros((4, 4) + batch + (sp.ncoeff,))
        for i in range(4):
            for j in range(i, 4):
                jet = exprs.eval_with_seeds(
                    self.components[i][j], seeds, 4, order, batch
                )
                piece = self.amplitude * jc_mul(sp, prof, jet.coeffs)
                out[i, j] = piece
                out[j, i] = piece
        return out

    def component_values(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        batch = pts.shape[:-1]
        stack = self.component_stack(pts, 0)
        vals = stack[..., 0].reshape((4, 4) + batch)
        return np.moveaxis(vals, (0, 1), (-2, -1))


def build_umbilic_variation(patch, vsigma, eps, window=True):
    """Umbilicity-preserving collar variation from a symmetric 3x3
    boundary field (expressions in the tangential coordinates)."""
    return VariationField(patch, vsigma, eps, window=window)


def lp_constraint_residual(patch, v, bpts, order=1):
    """Residual of the first-order umbilicity-preservation constraint
    at boundary points. 0-indices here are the inward collar direction
    (chart axis 0 of the normal-form chart)."""
    bpts = np.asarray(bpts, dtype=np.float64).reshape(-1, 4)
    fr = CurvatureFrame.from_patch(patch, bpts, order + 1)
    sp = jet_space(4, order + 1)
    vj = v.component_stack(bpts, order + 1)
    dv = values(fr.cov_deriv(vj, order + 1, [-1, -1]))  # dv[c, mu, nu]
    v0 = vj[..., 0]
    g_inv = values(fr.metric_inv(0))
    bf = BoundaryFrame(patch, bpts, 2)
    h = values(bf.induced_metric3(0))
    hinv = values(bf.induced_inverse3(0))
    ell = values(bf.shape_jets3(0))
    hmean = values(bf.mean_curvature3(0))

    grad_i_vj0 = dv[1:, 1:, 0]
    grad_0_vij = dv[0, 1:, 1:]
    term_a = 0.5 * (grad_i_vj0 + np.swapaxes(grad_i_vj0, 0, 1) - grad_0_vij)
    term_b = (hmean / 3.0) * v0[1:, 1:]
    div_v0 = np.einsum("ac...,ca...->...", g_inv, dv[:, :, 0])
    # trace of v as a jet, then its covariant (= partial) x0 derivative
    trace = np.zeros(bpts.shape[:-1] + (sp.ncoeff,))
    ginv_j = fr.metric_inv(order + 1)
    for a in range(4):
        for b in range(4):
            trace += jc_mul(sp, ginv_j[a, b], vj[a, b])
    d_trace = values(fr.cov_deriv(trace, order + 1, []))[0]
    d_v00 = dv[0, 0, 0]
    ell_up = np.einsum("ik...,jl...,kl...->ij...", hinv, hinv, ell)
    lv = np.einsum("kl...,kl...->...", ell_up, v0[1:, 1:])
    bracket = div_v0 - 0.5 * d_trace - 0.5 * d_v00
    residual = term_a - term_b - (bracket - lv) / 3.0 * h
    return float(np.max(np.abs(residual)))


def _bach_field_nodes(patch, rule):
    """Raised Bach values on the interior quadrature nodes, with the
    weights already multiplied by sqrt(det g)."""
    pts, wts = rule.interior(patch.chart)
    b_up = np.empty((len(pts), 4, 4))
    meas = np.empty(len(pts))
    for s in range(0, len(pts), _CHUNK_HEAVY):
        p = pts[s : s + _CHUNK_HEAVY]
        fr = CurvatureFrame.from_patch(patch, p, 4, check_spd=False)
        b, _ = bach_direct_frame(fr)
        ginv = values(fr.metric_inv(0))
        up = np.einsum("ac...,bd...,cd...->ab...", ginv, ginv, b)
        b_up[s : s + _CHUNK_HEAVY] = np.moveaxis(up, (0, 1), (-2, -1))
        g = values(fr.metric(0))
        meas[s : s + _CHUNK_HEAVY] = np.sqrt(
            np.linalg.det(np.moveaxis(g, (0, 1), (-2, -1)))
        )
    return pts, wts * meas, b_up


def _s_field_nodes(patch, rule):
    """Raised S-tensor values on the boundary quadrature nodes, with
    the weights multiplied by sqrt(det h)."""
    from .boundary import s_tensor

    pts, wts = rule.boundary(patch.chart)
    bf = BoundaryFrame(patch, pts, 3)
    s = s_tensor(patch, pts, order=3).components
    hinv = values(bf.induced_inverse3(0))
    s_up = np.moveaxis(
        np.einsum("ik...,jl...,kl...->ij...", hinv, hinv, s), (0, 1), (-2, -1)
    )
    h = values(bf.induced_metric3(0))
    meas = np.sqrt(np.linalg.det(np.moveaxis(h, (0, 1), (-2, -1))))
    return pts, wts * meas, s_up


def first_variation_check(patch, v, t_step=1e-3, rule=None, seed=0, cache=None):
    """Numeric derivative of t -> W_b(g + t v) at 0 versus the
    boundary-value formula -int <B, v> + oint <S, v>.

    `cache` (an ordinary dict) lets repeated checks on the same patch
    and rule reuse the v-independent Bach and S node fields.
    """
    rule = rule or QuadratureRule(16)
    rng = np.random.default_rng(seed)
    check_pts = np.concatenate(
        [
            sample_points(patch.chart, 60, rng, inset=0.01),
            sample_points(patch.chart, 30, rng, inset=0.01, boundary=True),
        ]
    )
    g0 = patch.component_values(check_pts)
    dv = v.component_values(check_pts)
    for t in (2.0 * t_step, -2.0 * t_step):
        eig = np.linalg.eigvalsh(g0 + t * dv)
        if np.min(eig) <= 0.0:
            raise SPDLossError(
                f"g + t v loses positive definiteness at t = {t} "
                f"(min eigenvalue {np.min(eig):.3e})"
            )

    def wb(t):
        return weyl_energy(VariedMetricPatch(patch, v, t), rule)[1]

    numeric = (
        -wb(2.0 * t_step) + 8.0 * wb(t_step) - 8.0 * wb(-t_step) + wb(-2.0 * t_step)
    ) / (12.0 * t_step)

    key = ("fields", rule.n)
    if cache is not None and key in cache:
        ipts, iwts, b_up, bpts, bwts, s_up = cache[key]
    else:
        ipts, iwts, b_up = _bach_field_nodes(patch, rule)
        bpts, bwts, s_up = _s_field_nodes(patch, rule)
        if cache is not None:
            cache[key] = (ipts, iwts, b_up, bpts, bwts, s_up)

    vv = v.component_values(ipts)
    bulk = float(np.sum(iwts * np.einsum("nab,nab->n", b_up, vv)))
    vvb = v.component_values(bpts)[:, 1:, 1:]
    bdry = float(np.sum(bwts * np.einsum("nij,nij->n", s_up, vvb)))
    formula = -bulk + bdry
    scale = max(abs(numeric), abs(formula), 1e-12)
    return {
        "numeric": numeric,
        "formula": formula,
        "bach_term": -bulk,
        "boundary_term": bdry,
        "abs_residual": abs(numeric - formula),
        "rel_residual": abs(numeric - formula) / scale,
        "t_step": t_step,
    }


def variation_convergence_order(patch, v, t_step, rule=None):
    """Richardson ratio of the 5-point stencil: halving the step should
    shrink the step-to-step difference by about 2^4."""
    rule = rule or QuadratureRule(10)

    def deriv(t):
        def wb(tt):
            return weyl_energy(VariedMetricPatch(patch, v, tt), rule)[1]

        return (-wb(2 * t) + 8 * wb(t) - 8 * wb(-t) + wb(-2 * t)) / (12 * t)

    d1, d2, d3 = deriv(t_step), deriv(t_step / 2), deriv(t_step / 4)
    ratio = abs(d1 - d2) / max(abs(d2 - d3), 1e-300)
    return {"ratio": ratio, "order_estimate": math.log2(max(ratio, 1e-300))}


# ---------------------------------------------------------------------------


def escobar_bound_probe(patch, w_samples, rule=None):
    """Quotients of conformal rescalings of a hemisphere-class patch.

    The round hemisphere minimizes the quotient in its conformal
    class, so every sampled quotient sits above 8 sqrt(3) pi.
    """
    rule = rule or QuadratureRule(12)
    bound = 8.0 * math.sqrt(3.0) * math.pi
    quotients = [yamabe_quotient(conformal_rescale(patch, w), rule) for w in w_samples]
    base = yamabe_quotient(patch, rule)
    return {
        "base_quotient": base,
        "quotients": quotients,
        "min_quotient": min(quotients) if quotients else base,
        "bound": bound,
    }


@dataclass(frozen=True)
class FunctionalReport:
    results: dict
    error_estimates: dict
    n: int
    n_refined: int


def functional_report(patch, rule, refine=True):
    """E_b, Weyl energies, volumes and the Yamabe quotient, with
    quadrature error estimates from an n versus 2n comparison."""

    def compute(r):
        vol = volume(patch, r)
        bvol = boundary_volume(patch, r)
        eb = einstein_hilbert_boundary(patch, r)
        w_int, w_b = weyl_energy(patch, r)
        return {
            "volume": vol,
            "boundary_volume": bvol,
            "einstein_hilbert": eb,
            "weyl_energy": w_int,
            "weyl_energy_boundary": w_b,
            "yamabe_quotient": eb / math.sqrt(vol),
        }

    coarse = compute(rule)
    if refine:
        fine = compute(QuadratureRule(2 * rule.n))
        errors = {k: abs(fine[k] - coarse[k]) for k in coarse}
        return FunctionalReport(fine, errors, rule.n, 2 * rule.n)
    return FunctionalReport(coarse, {k: float("nan") for k in coarse}, rule.n, rule.n)
