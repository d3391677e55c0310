"""Interior curvature engine.

All tensors are carried as stacked jet-coefficient arrays of shape
(tensor indices..., *batch, ncoeff) so a whole batch of points moves
through the pipeline at once. Index conventions, pinned by the
startup self-test on the round metric:

    R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb}
                + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb}
    Rm_{abcd} = g_{ae} R^e_{bcd}

so the unit round metric has Rm_{abcd} = g_{ac} g_{bd} - g_{ad} g_{bc},
Ric = (n-1) g and, in four dimensions, R = 12 with Schouten P = g/2.

Computation is pure and batched; a CurvatureFrame caches per-order
intermediate jets for one (patch, points) pair and is not mutated
afterwards, so frames for different point batches can be evaluated
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .charts import PointSample
from .errors import JetOrderError, NotConstantScalarCurvatureError
from .jets import jc_deriv, jc_matrix_inverse, jc_mul, jc_trunc, jet_space


def values(stack):
    """Value part of a stacked jet array."""
    return stack[..., 0]


def _zeros_like_order(space, shape_src, batchdims):
    return np.zeros(shape_src + batchdims + (space.ncoeff,))


class CurvatureFrame:
    """Curvature data of one metric at a batch of points.

    `order` is the truncation order of the metric jets; an object of
    order m can deliver Riemann jets up to order m-2, their first
    covariant derivatives up to m-3, and so on.
    """

    def __init__(self, metric_stack, order, dim=None):
        self.g_top = metric_stack
        self.order = order
        self.dim = dim if dim is not None else metric_stack.shape[0]
        self.batch = metric_stack.shape[2:-1]
        self._cache = {}

    @classmethod
    def from_patch(cls, patch, pts, order, check_spd=True):
        pts = pts.coords if isinstance(pts, PointSample) else np.asarray(pts)
        stack = patch.metric_jets(pts, order, check_spd=check_spd)
        return cls(stack, order)

    def space(self, k):
        return jet_space(self.dim, k)

    def _need(self, k, what):
        if k < 0:
            raise JetOrderError(
                f"metric jets of order {self.order} are too shallow for {what}"
            )

    def metric(self, k):
        self._need(k, "metric")
        if k > self.order:
            raise JetOrderError(
                f"metric jets available at order {self.order}, requested {k}"
            )
        return jc_trunc(self.space(self.order), self.g_top, k)

    def metric_inv(self, k):
        key = ("ginv", k)
        if key not in self._cache:
            self._cache[key] = jc_matrix_inverse(self.space(k), self.metric(k))
        return self._cache[key]

    def christoffel(self, k):
        """Gamma^a_{bc} as jets of order k (needs metric order k+1)."""
        key = ("gamma", k)
        if key in self._cache:
            return self._cache[key]
        self._need(self.order - (k + 1), "christoffel")
        d = self.dim
        sp1 = self.space(k + 1)
        sp = self.space(k)
        g = self.metric(k + 1)
        ginv = self.metric_inv(k)
        dg = np.empty((d, d, d) + self.batch + (sp.ncoeff,))
        for e in range(d):
            dg[e] = jc_deriv(sp1, g, e)
        # A[d, b, c] = d_b g_{dc} + d_c g_{db} - d_d g_{bc}
        a = (
            np.moveaxis(dg, (0, 1, 2), (1, 0, 2))
            + np.moveaxis(dg, (0, 1, 2), (2, 0, 1))
            - dg
        )
        gamma = np.zeros((d, d, d) + self.batch + (sp.ncoeff,))
        for i in range(d):
            for j in range(d):
                gamma[i] += 0.5 * jc_mul(sp, ginv[i, j][None, None], a[j])
        self._cache[key] = gamma
        return gamma

    def riemann(self, k):
        """Fully covariant Rm_{abcd} as jets of order k (metric order k+2)."""
        key = ("riemann", k)
        if key in self._cache:
            return self._cache[key]
        d = self.dim
        sp1 = self.space(k + 1)
        sp = self.space(k)
        gamma1 = self.christoffel(k + 1)
        gamma = jc_trunc(sp1, gamma1, k)
        dgam = np.empty((d, d, d, d) + self.batch + (sp.ncoeff,))
        for e in range(d):
            dgam[e] = jc_deriv(sp1, gamma1, e)
        # up[a, b, c, d] = R^a_{bcd}
        up = np.moveaxis(dgam, (0, 1, 2, 3), (2, 0, 3, 1)) - np.moveaxis(
            dgam, (0, 1, 2, 3), (3, 0, 2, 1)
        )
        for e in range(d):
            # t[a, p, q, s] = Gamma^a_{qe} Gamma^e_{ps}
            t = jc_mul(
                sp,
                gamma[:, :, e][:, None, :, None],
                gamma[e][None, :, None, :],
            )
            # + Gamma^a_{ce} Gamma^e_{db}: (p, q, s) -> (d, c, b)
            up += np.moveaxis(t, (1, 2, 3), (3, 2, 1))
            # - Gamma^a_{de} Gamma^e_{cb}: (p, q, s) -> (c, d, b)
            up -= np.moveaxis(t, (1, 2, 3), (2, 3, 1))
        g = self.metric(k)
        rm = np.zeros_like(up)
        for e in range(d):
            rm += jc_mul(sp, g[:, e][:, None, None, None], up[e][None])
        self._cache[key] = rm
        return rm

    def ricci(self, k):
        key = ("ricci", k)
        if key in self._cache:
            return self._cache[key]
        d = self.dim
        sp = self.space(k)
        rm = self.riemann(k)
        ginv = self.metric_inv(k)
        ric = np.zeros((d, d) + self.batch + (sp.ncoeff,))
        for a in range(d):
            for c in range(d):
                ric += jc_mul(sp, ginv[a, c][None, None], rm[a, :, c, :])
        self._cache[key] = ric
        return ric

    def scalar(self, k):
        key = ("scalar", k)
        if key in self._cache:
            return self._cache[key]
        sp = self.space(k)
        ric = self.ricci(k)
        ginv = self.metric_inv(k)
        out = np.zeros(self.batch + (sp.ncoeff,))
        for b in range(self.dim):
            for dd in range(self.dim):
                out += jc_mul(sp, ginv[b, dd], ric[b, dd])
        self._cache[key] = out
        return out

    def schouten(self, k):
        """P = (Ric - R g / (2(n-1))) / (n-2)."""
        n = self.dim
        sp = self.space(k)
        ric = self.ricci(k)
        rg = jc_mul(sp, self.scalar(k)[None, None], self.metric(k))
        return (ric - rg / (2.0 * (n - 1))) / (n - 2.0)

    def tracefree_ricci(self, k):
        """E = Ric - R g / n."""
        sp = self.space(k)
        rg = jc_mul(sp, self.scalar(k)[None, None], self.metric(k))
        return self.ricci(k) - rg / self.dim

    def weyl(self, k):
        key = ("weyl", k)
        if key in self._cache:
            return self._cache[key]
        w = self.riemann(k) - kulkarni_nomizu(
            self.schouten(k), self.metric(k), self.space(k)
        )
        self._cache[key] = w
        return w

    def cov_deriv(self, t, k, variances):
        """Covariant derivative of a stacked jet tensor.

        t has len(variances) leading tensor axes and jets of order k;
        the result carries the new derivative index first, at order
        k-1. variances[s] is -1 for a lower slot, +1 for an upper one.
        """
        if k < 1:
            raise JetOrderError("covariant derivative needs jets of order >= 1")
        d = self.dim
        v = len(variances)
        sp = self.space(k)
        sp1 = self.space(k - 1)
        gam = self.christoffel(k - 1)
        tt = jc_trunc(sp, t, k - 1)
        out = np.empty((d,) + t.shape[:-1] + (sp1.ncoeff,))
        pad = tuple(range(1, v)) if v > 1 else ()
        for c in range(d):
            out[c] = jc_deriv(sp, t, c)
            for s in range(v):
                ts = np.moveaxis(tt, s, 0)
                corr = np.zeros_like(np.moveaxis(out[c], s, 0))
                for e in range(d):
                    if variances[s] < 0:
                        # - Gamma^e_{c a_s} T[... e ...]
                        w = np.expand_dims(gam[e, c], pad) if pad else gam[e, c]
                    else:
                        # + Gamma^{a_s}_{c e} T[... e ...]
                        w = np.expand_dims(gam[:, c, e], pad) if pad else gam[:, c, e]
                    corr += float(variances[s]) * jc_mul(sp1, w, ts[e][None])
                out[c] += np.moveaxis(corr, 0, s)
        return out


def kulkarni_nomizu(a, b, space):
    """(A ow B)_{abcd} = A_ac B_bd + A_bd B_ac - A_ad B_bc - A_bc B_ad."""
    prod = jc_mul(space, a[:, None, :, None], b[None, :, None, :])  # A_ac B_bd
    prod2 = jc_mul(space, a[None, :, None, :], b[:, None, :, None])  # A_bd B_ac
    prod3 = jc_mul(space, a[:, None, None, :], b[None, :, :, None])  # A_ad B_bc
    prod4 = jc_mul(space, a[None, :, :, None], b[:, None, None, :])  # A_bc B_ad
    return prod + prod2 - prod3 - prod4


def _raise_all(t, ginv_v, n_idx):
    """Raise every index of a value-level tensor with ginv values."""
    letters = "abcdef"[:n_idx]
    out = t
    for s, ax in enumerate(letters):
        spec = f"x{ax}...," + letters + "...->" + letters.replace(ax, "x") + "..."
        out = np.einsum(spec, ginv_v, out)
    return out


# ---------------------------------------------------------------------------
# One-point assembly and the operation-style API.


@dataclass(frozen=True)
class CurvaturePoint:
    """Value-level curvature data at one point."""

    gamma: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    tracefree_ricci: np.ndarray
    schouten: np.ndarray
    weyl: np.ndarray
    bach: np.ndarray = None
    bach_asymmetry: float = None


def frame_at(patch, point, order, check_spd=True):
    pts = point.coords if isinstance(point, PointSample) else np.asarray(point)
    return CurvatureFrame.from_patch(patch, pts, order, check_spd=check_spd)


def christoffel(patch, point, jet_order=0, metric_order=None):
    """Gamma^a_{bc}; jets of the requested order (values by default)."""
    morder = metric_order if metric_order is not None else jet_order + 1
    fr = frame_at(patch, point, morder)
    gam = fr.christoffel(jet_order)
    return values(gam) if jet_order == 0 else gam


def riemann(patch, point, jet_order=0, metric_order=None):
    morder = metric_order if metric_order is not None else jet_order + 2
    fr = frame_at(patch, point, morder)
    rm = fr.riemann(jet_order)
    return values(rm) if jet_order == 0 else rm


def ricci_scalar_schouten(patch, point, metric_order=2):
    """Value-level (Ric, R, E, P) at a point."""
    fr = frame_at(patch, point, metric_order)
    return (
        values(fr.ricci(0)),
        float(np.asarray(values(fr.scalar(0)))),
        values(fr.tracefree_ricci(0)),
        values(fr.schouten(0)),
    )


def weyl(patch, point, jet_order=0, metric_order=None):
    morder = metric_order if metric_order is not None else jet_order + 2
    fr = frame_at(patch, point, morder)
    w = fr.weyl(jet_order)
    return values(w) if jet_order == 0 else w


def covariant_derivative(field, patch, point, k=1, variances=None, field_order=None):
    """k-th covariant derivative of a tensor field at a point.

    `field` maps (frame, jet_order) to a stacked jet tensor; helpers
    for the named curvature fields are in FIELDS. New derivative
    indices are prepended. Returns value-level components.
    """
    if isinstance(field, str):
        field = FIELDS[field]
    base_order = field_order if field_order is not None else k
    fr = frame_at(patch, point, _metric_order_for(field, base_order))
    t = field(fr, base_order)
    n_idx = t.ndim - len(fr.batch) - 1
    var = list(variances) if variances is not None else [-1] * n_idx
    order = base_order
    for _ in range(k):
        t = fr.cov_deriv(t, order, var)
        var = [-1] + var
        order -= 1
    return values(t)


def _metric_order_for(field, jet_order):
    extra = getattr(field, "metric_depth", 2)
    return jet_order + extra


def _field(depth):
    def mark(fn):
        fn.metric_depth = depth
        return fn

    return mark


@_field(0)
def _f_metric(fr, k):
    return fr.metric(k)


@_field(2)
def _f_ricci(fr, k):
    return fr.ricci(k)


@_field(2)
def _f_riemann(fr, k):
    return fr.riemann(k)


@_field(2)
def _f_weyl(fr, k):
    return fr.weyl(k)


@_field(2)
def _f_schouten(fr, k):
    return fr.schouten(k)


@_field(2)
def _f_scalar(fr, k):
    return fr.scalar(k)


FIELDS = {
    "metric": _f_metric,
    "ricci": _f_ricci,
    "riemann": _f_riemann,
    "weyl": _f_weyl,
    "schouten": _f_schouten,
    "scalar": _f_scalar,
}


# ---------------------------------------------------------------------------
# Bach tensor, three ways. All return value-level (4, 4, *batch) arrays.


def bach_direct_frame(fr):
    """B_ab = nabla^c nabla^d W_{acbd} + P^{cd} W_{acbd}; also returns
    the pre-symmetrization asymmetry as a numerical health metric."""
    d = fr.dim
    w2 = fr.weyl(2)
    dw = fr.cov_deriv(w2, 2, [-1] * 4)
    ddw = fr.cov_deriv(dw, 1, [-1] * 5)  # ddw[f, e, a, b, c, d] = nabla_f nabla_e W_abcd
    ddw_v = values(ddw)
    ginv = values(fr.metric_inv(0))
    term1 = np.einsum("fg...,eh...,feagbh...->ab...", ginv, ginv, ddw_v)
    p_up = _raise_all(values(fr.schouten(0)), ginv, 2)
    term2 = np.einsum("gh...,agbh...->ab...", p_up, values(w2))
    b = term1 + term2
    asym = np.max(np.abs(b - np.swapaxes(b, 0, 1)))
    return 0.5 * (b + np.swapaxes(b, 0, 1)), float(asym)


def bach_direct(patch, point, metric_order=4):
    fr = frame_at(patch, point, metric_order)
    return bach_direct_frame(fr)


def laplacian_values(fr, t, k, variances):
    """Value-level rough Laplacian g^{cd} nabla_c nabla_d T."""
    dt = fr.cov_deriv(t, k, variances)
    ddt = fr.cov_deriv(dt, k - 1, [-1] + list(variances))
    ginv = values(fr.metric_inv(0))
    return np.einsum("cd...,cd...->...", ginv, values(ddt))


def bach_schouten_form(patch, point, metric_order=4):
    """B via the Schouten-tensor rewriting (Bianchi identities)."""
    fr = frame_at(patch, point, metric_order)
    ginv = values(fr.metric_inv(0))
    p2 = fr.schouten(2)
    lap_p = laplacian_values(fr, p2, 2, [-1, -1])
    r2 = fr.scalar(2)
    hess_r = values(fr.cov_deriv(fr.cov_deriv(r2, 2, []), 1, [-1]))
    p_up = _raise_all(values(fr.schouten(0)), ginv, 2)
    rm = values(fr.riemann(0))
    ric = values(fr.ricci(0))
    p_mixed = np.einsum("cd...,db...->cb...", ginv, values(fr.schouten(0)))
    term3 = np.einsum("acbd...,cd...->ab...", rm, p_up)
    term4 = np.einsum("ac...,cb...->ab...", ric, p_mixed)
    term5 = np.einsum("cd...,acbd...->ab...", p_up, values(fr.weyl(0)))
    return lap_p - hess_r / 6.0 + term3 - term4 + term5


def bach_tracefree_form(patch, point, c, metric_order=4, r_tol=1e-6):
    """B for constant scalar curvature R = c, written in the trace-free
    Ricci tensor E."""
    fr = frame_at(patch, point, metric_order)
    r_val = np.asarray(values(fr.scalar(0)))
    if np.max(np.abs(r_val - c)) > r_tol:
        raise NotConstantScalarCurvatureError(
            f"scalar curvature deviates from {c} by {np.max(np.abs(r_val - c)):.3e}",
            residual=float(np.max(np.abs(r_val - c))),
        )
    ginv = values(fr.metric_inv(0))
    e2 = fr.tracefree_ricci(2)
    lap_e = laplacian_values(fr, e2, 2, [-1, -1])
    e_v = values(fr.tracefree_ricci(0))
    e_up = _raise_all(e_v, ginv, 2)
    w_v = values(fr.weyl(0))
    g_v = values(fr.metric(0))
    term2 = np.einsum("cd...,acbd...->ab...", e_up, w_v)
    e_mixed = np.einsum("cd...,ad...->ca...", ginv, e_v)
    term3 = np.einsum("ca...,cb...->ab...", e_mixed, e_v)
    e_norm2 = np.einsum("ab...,ab...->...", e_up, e_v)
    return (
        -0.5 * lap_e
        - term2
        + term3
        - 0.25 * e_norm2 * g_v
        + (c / 6.0) * e_v
    )


# ---------------------------------------------------------------------------


def curvature_point(patch, point, metric_order=2, with_bach=False):
    """Assemble the value-level CurvaturePoint record."""
    fr = frame_at(patch, point, max(metric_order, 4 if with_bach else metric_order))
    bach = asym = None
    if with_bach:
        bach, asym = bach_direct_frame(fr)
    return CurvaturePoint(
        gamma=values(fr.christoffel(0)),
        riemann=values(fr.riemann(0)),
        ricci=values(fr.ricci(0)),
        scalar=np.asarray(values(fr.scalar(0))),
        tracefree_ricci=values(fr.tracefree_ricci(0)),
        schouten=values(fr.schouten(0)),
        weyl=values(fr.weyl(0)),
        bach=bach,
        bach_asymmetry=asym,
    )


@lru_cache(maxsize=1)
def convention_selftest():
    """Pin the Riemann sign convention on the round metric.

    The unit round metric must give Rm_{abcd} = g_ac g_bd - g_ad g_bc
    and R_{0i0j} = +h_ij at the boundary. Raises on a sign flip.
    """
    from .models import builtin_model

    patch = builtin_model("hemisphere")
    pt = np.array([0.3, 1.2, 1.4, 2.0])
    fr = CurvatureFrame.from_patch(patch, pt, 2)
    g = values(fr.metric(0))
    rm = values(fr.riemann(0))
    expect = np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g)
    if np.max(np.abs(rm - expect)) > 1e-9:
        raise AssertionError("Riemann sign convention self-test failed")
    bpt = np.array([0.0, 1.2, 1.4, 2.0])
    frb = CurvatureFrame.from_patch(patch, bpt, 2)
    gb = values(frb.metric(0))
    rmb = values(frb.riemann(0))
    r0i0j = rmb[0, 1:, 0, 1:]
    if np.max(np.abs(r0i0j - gb[1:, 1:])) > 1e-9:
        raise AssertionError("boundary normal-curvature convention self-test failed")
    return True
