"""Boundary geometry on the face x0 = 0.

Orientation conventions, fixed package-wide and validated against the
flat-ball model (H = +3) and the geodesic-construction oracle:

* the axis-0 coordinate increases inward, so the outward unit normal
  has components nu^a = -g^{a0} / sqrt(g^{00});
* the second fundamental form is taken with respect to the OUTWARD
  normal, L_ij = <nabla_i nu, d_j>, which in a normal-form chart is
  -1/2 d0 h_ij (unit ball: L = +h, H = +3);
* identities written with 0-indices for the normal direction (the
  S-tensor, the umbilic Weyl identities, Gauss-Codazzi) realize every
  0 by contraction with the outward nu;
* the normal-expansion coefficients h^(k) are d^k h / dr^k at r = 0
  with r the INWARD distance, i.e. the axis-0 coordinate of a
  normal-form chart. Quantities with an odd number of normal slots
  (h^(3) versus the S-tensor) therefore differ by an explicit sign
  between the two dressings; the identity h^(3) = -4 S is checked
  with exactly these conventions.

Tangential indices i, j, k run over chart axes 1..3 and are stored in
3x3 arrays indexed from 0. All operations are pure and batched over
boundary points.
"""

from __future__ import annotations

import math

import numpy as np

from dataclasses import dataclass

from .charts import PointSample, is_normal_form, sample_points
from .curvature import CurvatureFrame, values
from .errors import JetOrderError, NormalFormError, PreconditionError
from .jets import (
    Jet,
    jc_deriv,
    jc_matrix_inverse,
    jc_mul,
    jc_reciprocal,
    jc_restrict_face,
    jc_sqrt,
    jc_substitute,
    jc_trunc,
    jet_space,
)

MAX_GEODESIC_ORDER = 5  # domain jets need order k+1 and the hard cap is 6


@dataclass(frozen=True)
class ShapeData:
    normal: np.ndarray  # outward unit normal, chart components
    second_fundamental: np.ndarray  # L_ij, 3x3
    mean_curvature: np.ndarray
    umbilic_factor: np.ndarray  # H / 3


@dataclass(frozen=True)
class IntrinsicData:
    induced_metric: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray
    schouten: np.ndarray  # Ric - R h / 4 in three dimensions


@dataclass(frozen=True)
class STensor:
    components: np.ndarray  # 3x3 symmetric, tangential


@dataclass(frozen=True)
class FermiExpansion:
    base_point: np.ndarray
    coefficients: tuple  # h^(0)..h^(k), each 3x3 (batched)
    route: str


def _as_coords(point):
    if isinstance(point, PointSample):
        if not point.is_boundary:
            raise PreconditionError("point is not on the boundary face")
        return point.coords
    pts = np.asarray(point, dtype=np.float64)
    if np.any(np.abs(pts[..., 0]) > 0.0):
        raise PreconditionError("boundary operations need x0 = 0 points")
    return pts


def nu_contract(t, nu, slots):
    """Contract the listed slots of a value tensor with the normal.

    t has shape (4,)*k + batch; nu has shape (4,) + batch.
    """
    out = t
    for s in sorted(slots, reverse=True):
        moved = np.moveaxis(out, s, 0)
        pad = moved.ndim - nu.ndim
        out = np.sum(
            moved * nu.reshape(nu.shape[:1] + (1,) * pad + nu.shape[1:]), axis=0
        )
    return out


class BoundaryFrame:
    """Shared boundary-point computations for one patch and batch.

    Tangential jets live in the 3-variable space obtained by
    restricting ambient jets to the face, so intrinsic derivatives are
    taken only along the tangential axes.
    """

    def __init__(self, patch, bpts, order):
        self.patch = patch
        self.bpts = _as_coords(bpts)
        self.order = order
        self.frame = CurvatureFrame.from_patch(patch, self.bpts, order)
        self.batch = self.frame.batch
        self._cache = {}

    def space3(self, k):
        return jet_space(3, k)

    def ambient_restricted(self, which, k):
        """Ambient jets of order k restricted to the face (3-var jets)."""
        key = (which, k)
        if key not in self._cache:
            sp = self.frame.space(k)
            if which == "g":
                src = self.frame.metric(k)
            elif which == "ginv":
                src = self.frame.metric_inv(k)
            elif which == "gamma":
                src = self.frame.christoffel(k)
            else:
                raise KeyError(which)
            self._cache[key] = jc_restrict_face(sp, src, 0)
        return self._cache[key]

    def induced_metric3(self, k):
        return self.ambient_restricted("g", k)[1:, 1:]

    def induced_inverse3(self, k):
        key = ("hinv", k)
        if key not in self._cache:
            self._cache[key] = jc_matrix_inverse(
                self.space3(k), self.induced_metric3(k)
            )
        return self._cache[key]

    def normal_jets3(self, k):
        """Outward unit normal components as tangential jets."""
        key = ("nu", k)
        if key not in self._cache:
            sp3 = self.space3(k)
            ginv = self.ambient_restricted("ginv", k)
            inv_root = jc_reciprocal(sp3, jc_sqrt(sp3, ginv[0, 0]))
            nu = np.empty((4,) + self.batch + (sp3.ncoeff,))
            for a in range(4):
                nu[a] = -jc_mul(sp3, ginv[a, 0], inv_root)
            self._cache[key] = nu
        return self._cache[key]

    def shape_jets3(self, k):
        """L_ij as tangential jets of order k (ambient jets order k+1).

        Works in any face-boundary chart: L_ij = (d_i nu^a
        + Gamma^a_{ib} nu^b) g_{aj} restricted to the face.
        """
        key = ("L", k)
        if key not in self._cache:
            sp3 = self.space3(k)
            nu = self.normal_jets3(k + 1)
            gamma = self.ambient_restricted("gamma", k)
            g = jc_trunc(
                self.space3(k + 1), self.ambient_restricted("g", k + 1), k
            )
            nut = jc_trunc(self.space3(k + 1), nu, k)
            ell = np.zeros((3, 3) + self.batch + (sp3.ncoeff,))
            for i in range(3):
                cov = np.zeros((4,) + self.batch + (sp3.ncoeff,))
                for a in range(4):
                    cov[a] = jc_deriv(self.space3(k + 1), nu[a], i)
                    for b in range(4):
                        cov[a] += jc_mul(sp3, gamma[a, i + 1, b], nut[b])
                for j in range(3):
                    acc = np.zeros(self.batch + (sp3.ncoeff,))
                    for a in range(4):
                        acc += jc_mul(sp3, cov[a], g[a, j + 1])
                    ell[i, j] = acc
            self._cache[key] = ell
        return self._cache[key]

    def mean_curvature3(self, k):
        key = ("H", k)
        if key not in self._cache:
            sp3 = self.space3(k)
            hinv = self.induced_inverse3(k)
            ell = jc_trunc(self.space3(k), self.shape_jets3(k), k)
            out = np.zeros(self.batch + (sp3.ncoeff,))
            for i in range(3):
                for j in range(3):
                    out += jc_mul(sp3, hinv[i, j], ell[i, j])
            self._cache[key] = out
        return self._cache[key]

    def intrinsic_frame(self, k):
        """Curvature frame of the induced 3-metric."""
        key = ("intrinsic", k)
        if key not in self._cache:
            self._cache[key] = CurvatureFrame(self.induced_metric3(k), k, dim=3)
        return self._cache[key]

    def normal_values(self):
        return values(self.normal_jets3(0))


# ---------------------------------------------------------------------------
# Operations.


def shape_operator(patch, bpt, order=2):
    """Outward normal, second fundamental form, mean curvature."""
    bf = BoundaryFrame(patch, bpt, order)
    hmean = values(bf.mean_curvature3(0))
    return ShapeData(
        normal=bf.normal_values(),
        second_fundamental=values(bf.shape_jets3(0)),
        mean_curvature=hmean,
        umbilic_factor=hmean / 3.0,
    )


def _h_norm2(t, hinv):
    """Squared h-norm of a tangential 2-tensor, batched."""
    up = np.einsum("ik...,jl...,kl...->ij...", hinv, hinv, t)
    return np.einsum("ij...,ij...->...", up, t)


def umbilicity_residual(patch, bpts, order=2):
    """sup over the samples of |L - (H/3) h|_h."""
    bf = BoundaryFrame(patch, bpts, order)
    ell = values(bf.shape_jets3(0))
    h = values(bf.induced_metric3(0))
    hinv = values(bf.induced_inverse3(0))
    hmean = values(bf.mean_curvature3(0))
    dev = ell - (hmean / 3.0) * h
    return float(np.max(np.sqrt(np.abs(_h_norm2(dev, hinv)))))


def intrinsic_curvature(patch, bpt, order=2):
    """Curvature of the induced metric; tangential derivatives only."""
    bf = BoundaryFrame(patch, bpt, order)
    fr3 = bf.intrinsic_frame(order)
    r_sigma = np.asarray(values(fr3.scalar(0)))
    ric = values(fr3.ricci(0))
    h = values(fr3.metric(0))
    return IntrinsicData(
        induced_metric=h,
        riemann=values(fr3.riemann(0)),
        ricci=ric,
        scalar=r_sigma,
        schouten=ric - 0.25 * r_sigma * h,
    )


def gauss_codazzi_check(patch, bpt, order=3, umbilic_tol=1e-8):
    """Residuals of the Gauss and Codazzi relations at boundary points.

    The full Gauss and Codazzi residuals use L itself and hold for any
    metric; the trace forms substituting L = (H/3) h are evaluated only
    when the boundary is umbilic at the samples (None otherwise).
    """
    bf = BoundaryFrame(patch, bpt, max(order, 3))
    fr = bf.frame
    nu = bf.normal_values()
    rm = values(fr.riemann(0))
    ell = values(bf.shape_jets3(0))
    h = values(bf.induced_metric3(0))
    hmean = values(bf.mean_curvature3(0))
    fr3 = bf.intrinsic_frame(2)
    rm_sigma = values(fr3.riemann(0))

    res = {}
    gauss = (
        rm[1:, 1:, 1:, 1:]
        - rm_sigma
        + np.einsum("ij...,kl...->ikjl...", ell, ell)
        - np.einsum("il...,jk...->ikjl...", ell, ell)
    )
    res["gauss"] = float(np.max(np.abs(gauss)))

    # Codazzi: R_{ijk nu} + nablaS_j L_ik - nablaS_i L_jk = 0
    rm_nu = nu_contract(rm[1:, 1:, 1:, :], nu, [3])
    dl = values(fr3.cov_deriv(bf.shape_jets3(1), 1, [-1, -1]))  # dl[c, i, k]
    codazzi = rm_nu + np.moveaxis(dl, (0, 1, 2), (1, 0, 2)) - dl
    res["codazzi"] = float(np.max(np.abs(codazzi)))

    umb = umbilicity_residual(patch, bpt, order=2)
    res["umbilicity"] = umb
    if umb < umbilic_tol:
        ric = values(fr.ricci(0))
        scal = values(fr.scalar(0))
        ric_sigma = values(fr3.ricci(0))
        scal_sigma = values(fr3.scalar(0))
        r_nn = nu_contract(rm[:, 1:, :, 1:], nu, [0, 2])
        trace1 = ric[1:, 1:] - r_nn - ric_sigma + (2.0 / 9.0) * hmean**2 * h
        res["gauss_trace_1"] = float(np.max(np.abs(trace1)))
        ric_nn = nu_contract(ric, nu, [0, 1])
        trace2 = scal - 2.0 * ric_nn - scal_sigma + (2.0 / 3.0) * hmean**2
        res["gauss_trace_2"] = float(np.max(np.abs(trace2)))
        ric_n = nu_contract(ric[1:, :], nu, [1])
        dh = values(fr3.cov_deriv(bf.mean_curvature3(1), 1, []))
        res["ricci_normal"] = float(np.max(np.abs(ric_n + (2.0 / 3.0) * dh)))
        p_nn = nu_contract(values(fr.schouten(0)), nu, [0, 1])
        res["schouten_normal_normal"] = float(
            np.max(
                np.abs(p_nn - (scal / 6.0 - scal_sigma / 4.0 + hmean**2 / 6.0))
            )
        )
        res["p00"] = p_nn
    else:
        for key in (
            "gauss_trace_1",
            "gauss_trace_2",
            "ricci_normal",
            "schouten_normal_normal",
            "p00",
        ):
            res[key] = None
    return res


def s_tensor(patch, bpt, order=3):
    """S_ij = grad^a W_{a i 0 j} + grad^a W_{a j 0 i} - grad^0 W_{0 i 0 j}
    + (4/3) H W_{0 i 0 j}.

    The derivative terms realize every 0-slot by the OUTWARD unit
    normal; the mean-curvature term enters as -(4/3) H W_{0i0j} with H
    the outward mean curvature (equivalently: +(4/3) H W with H
    measured against the inward collar direction). This is the unique
    sign layout for which

    * the conformal law S~ = exp(-w) S holds with no normal-derivative
      anomaly (the anomaly coefficient is 2a - 2b + 3c for term
      weights a, a, b, c, and (1, 1, -1, -4/3) is its kernel), and
    * the first-variation identity for the boundary Weyl energy holds
      with the boundary term + oint <S, v> (validated against the
      numeric functional derivative).

    On totally geodesic boundaries S equals the outward normal
    derivative of the Schouten tensor.
    """
    if order < 3:
        raise JetOrderError("the S-tensor needs metric jets of order 3")
    bf = BoundaryFrame(patch, bpt, order)
    fr = bf.frame
    nu = bf.normal_values()
    w1 = fr.weyl(1)
    dw = values(fr.cov_deriv(w1, 1, [-1] * 4))  # dw[c, a, b, e, f]
    w = values(w1)
    ginv = values(fr.metric_inv(0))
    hmean = values(bf.mean_curvature3(0))

    dw_up = np.einsum("cd...,dabef...->cabef...", ginv, dw)
    t1 = nu_contract(dw_up, nu, [3])  # contract the third Weyl slot
    term1 = np.einsum("aaij...->ij...", t1[:, :, 1:, 1:])
    term2 = np.swapaxes(term1, 0, 1)
    term3 = nu_contract(dw, nu, [0, 1, 3])[1:, 1:]
    w_nn = nu_contract(w, nu, [0, 2])[1:, 1:]
    s = term1 + term2 - term3 - (4.0 / 3.0) * hmean * w_nn
    return STensor(components=0.5 * (s + np.swapaxes(s, 0, 1)))


def weyl_boundary_identities(patch, bpt, order=2, umbilic_tol=1e-8):
    """The three umbilic-boundary Weyl identities; residuals plus the
    magnitudes of both sides of the norm identity."""
    umb = umbilicity_residual(patch, bpt, order=2)
    if umb >= umbilic_tol:
        raise PreconditionError(
            f"umbilicity residual {umb:.3e} exceeds {umbilic_tol:.1e}",
            residual=umb,
        )
    bf = BoundaryFrame(patch, bpt, max(order, 2))
    fr = bf.frame
    nu = bf.normal_values()
    w = values(fr.weyl(0))
    h = values(bf.induced_metric3(0))
    hinv = values(bf.induced_inverse3(0))
    hmean = values(bf.mean_curvature3(0))
    fr3 = bf.intrinsic_frame(2)
    p_sigma = values(fr3.ricci(0)) - 0.25 * values(fr3.scalar(0)) * h

    a = values(fr.schouten(0))[1:, 1:] - p_sigma + (hmean**2 / 18.0) * h
    w_nn = nu_contract(w, nu, [0, 2])[1:, 1:]
    w_t = w[1:, 1:, 1:, 1:]
    w_t_up = w_t
    for _ in range(4):
        w_t_up = np.moveaxis(
            np.einsum("ix...,xjkl...->ijkl...", hinv, w_t_up), 0, 3
        )
    lhs = np.einsum("ijkl...,ijkl...->...", w_t_up, w_t)
    rhs = 4.0 * _h_norm2(w_nn, hinv)
    return {
        "normal_normal": float(np.max(np.abs(w_nn - a))),
        "tangential_normal": float(
            np.max(np.abs(nu_contract(w[1:, 1:, 1:, :], nu, [3])))
        ),
        "norm_identity": float(np.max(np.abs(lhs - rhs))),
        "norm_lhs": float(np.max(np.abs(lhs))),
        "norm_rhs": float(np.max(np.abs(rhs))),
    }


# ---------------------------------------------------------------------------
# Normal expansion of the metric.


def _require_normal_form(patch):
    if not is_normal_form(patch):
        raise NormalFormError(f"patch {patch.name!r} is not in boundary normal form")


def fermi_formula_coefficients(patch, bpt, order=4):
    """h^(0)..h^(order) from the curvature formulas (order <= 4).

    Requires a normal-form chart. The 0-index is the inward normal
    coordinate direction; L is the outward-normal second fundamental
    form, so h^(1) = -2L.
    """
    if order > 4:
        raise JetOrderError("the formula route is defined through order 4")
    _require_normal_form(patch)
    bpts = _as_coords(bpt)
    morder = max(order, 2)
    fr = CurvatureFrame.from_patch(patch, bpts, morder)
    g = values(fr.metric(0))
    h0 = g[1:, 1:]
    hinv = np.moveaxis(
        np.linalg.inv(np.moveaxis(h0, (0, 1), (-2, -1))), (-2, -1), (0, 1)
    )
    sp_top = fr.space(morder)
    dg0 = jc_restrict_face(
        fr.space(morder - 1), jc_deriv(sp_top, fr.metric(morder), 0), 0
    )
    ell = -0.5 * dg0[1:, 1:][..., 0]
    ell_up = np.einsum("kl...,lj...->kj...", hinv, ell)  # L^k_j

    coeffs = [h0, -2.0 * ell]
    if order >= 2:
        rm = values(fr.riemann(0))
        r0 = rm[0, 1:, 0, 1:]  # R_{0i0j}
        coeffs.append(
            -2.0 * r0 + 2.0 * np.einsum("ik...,kj...->ij...", ell, ell_up)
        )
    if order >= 3:
        drm = values(fr.cov_deriv(fr.riemann(1), 1, [-1] * 4))
        dr0 = drm[0, 0, 1:, 0, 1:]  # nabla_0 R_{0i0j}
        cross = np.einsum("ki...,jk...->ij...", ell_up, r0)  # L^k_i R_{0j0k}
        coeffs.append(-2.0 * dr0 + 4.0 * cross + 4.0 * np.swapaxes(cross, 0, 1))
    if order >= 4:
        ddrm = values(
            fr.cov_deriv(fr.cov_deriv(fr.riemann(2), 2, [-1] * 4), 1, [-1] * 5)
        )
        ddr0 = ddrm[0, 0, 0, 1:, 0, 1:]
        dcross = np.einsum("ik...,kj...->ij...", dr0, ell_up)
        ell2 = np.einsum("kl...,lj...->kj...", ell_up, ell_up)
        qcross = np.einsum("ik...,kj...->ij...", r0, ell2)
        r0_up = np.einsum("il...,lk...->ik...", r0, hinv)  # R_{0i0}^k
        coeffs.append(
            -2.0 * ddr0
            + 6.0 * (dcross + np.swapaxes(dcross, 0, 1))
            - 4.0 * (qcross + np.swapaxes(qcross, 0, 1))
            + 8.0 * np.einsum("ik...,jk...->ij...", r0_up, r0)
        )
    return FermiExpansion(bpts, tuple(coeffs[: order + 1]), "formula")


def fermi_series_coefficients(patch, bpt, order=4):
    """h^(0)..h^(order) read directly from the r-Taylor expansion of a
    normal-form chart; the trivial route, available through order 6."""
    _require_normal_form(patch)
    bpts = _as_coords(bpt)
    g = patch.metric_jets(bpts, order)
    sp = jet_space(4, order)
    coeffs = []
    for k in range(order + 1):
        pos = sp.position[(k, 0, 0, 0)]
        coeffs.append(math.factorial(k) * g[1:, 1:, ..., pos])
    return FermiExpansion(bpts, tuple(coeffs), "series")


def _same_space_shift(space, a, axis):
    """Derivative along `axis` re-embedded in the same space with zero
    top-order coefficients (exact below the top order)."""
    out = np.zeros_like(a)
    out[..., : space.count(space.order - 1)] = jc_deriv(space, a, axis)
    return out


def fermi_geodesic_expansion(patch, bpt, order):
    """h^(0)..h^(order) by constructing the boundary-normal geodesic
    map through Taylor recursion on the geodesic equation.

    Works in any face-boundary chart (normal form not required); needs
    metric jets of order max(order, 2) and domain jets of order
    order + 1, so order <= 5.
    """
    if order > MAX_GEODESIC_ORDER:
        raise JetOrderError(
            f"geodesic route supports order <= {MAX_GEODESIC_ORDER}"
        )
    bpts = _as_coords(bpt)
    q = order + 1
    morder = max(order, 2)
    fr = CurvatureFrame.from_patch(patch, bpts, morder)
    batch = fr.batch
    sp_d = jet_space(4, q)
    nd = sp_d.ncoeff

    def pad(space_small, arr):
        out = np.zeros(arr.shape[:-1] + (nd,))
        out[..., : space_small.ncoeff] = arr
        return out

    g_c = pad(fr.space(morder), fr.metric(morder))
    gam_c = pad(fr.space(morder - 1), fr.christoffel(morder - 1))
    ginv_c = pad(fr.space(morder), fr.metric_inv(morder))

    # Domain variables: xi1, xi2, xi3 on axes 0..2, rho on axis 3.
    zero_base = np.zeros(batch + (4,))
    xi = [Jet.variable(zero_base, a, 4, q).coeffs for a in range(3)]
    rho = Jet.variable(zero_base, 3, 4, q).coeffs
    zero_jet = np.zeros(batch + (nd,))

    # Inward unit normal along the boundary, as a function of xi.
    bdeltas = [zero_jet] + xi
    gb_inv = np.empty((4,) + batch + (nd,))
    for a in range(4):
        gb_inv[a] = jc_substitute(sp_d, ginv_c[a, 0], bdeltas, sp_d)
    inv_root = jc_reciprocal(sp_d, jc_sqrt(sp_d, gb_inv[0]))
    nu_in = np.empty((4,) + batch + (nd,))
    for a in range(4):
        nu_in[a] = jc_mul(sp_d, gb_inv[a], inv_root)

    base = np.zeros((4,) + batch + (nd,))
    for a in range(4):
        base[a, ..., 0] = bpts[..., a]
    geo = base.copy()
    for i in range(3):
        geo[i + 1] += xi[i]
    for a in range(4):
        geo[a] += jc_mul(sp_d, rho, nu_in[a])

    # Positions grouped by rho exponent, for reading/writing the ODE.
    by_rho_src = {}
    by_rho_dst = {}
    for p, idx in enumerate(sp_d.indices):
        m = idx[3]
        if m + 2 <= q and sum(idx) + 2 <= q:
            dst = sp_d.position[idx[:3] + (m + 2,)]
            by_rho_src.setdefault(m, []).append(p)
            by_rho_dst.setdefault(m, []).append(dst)

    for m in range(0, q - 1):
        delta = geo - base
        gam_sub = np.empty((4, 4, 4) + batch + (nd,))
        for a in range(4):
            for b in range(4):
                for c in range(b, 4):
                    gam_sub[a, b, c] = jc_substitute(
                        sp_d, gam_c[a, b, c], list(delta), sp_d
                    )
                    if c != b:
                        gam_sub[a, c, b] = gam_sub[a, b, c]
        dgeo = np.stack([_same_space_shift(sp_d, geo[a], 3) for a in range(4)])
        rhs = np.zeros((4,) + batch + (nd,))
        for b in range(4):
            for c in range(4):
                vel2 = jc_mul(sp_d, dgeo[b], dgeo[c])
                for a in range(4):
                    rhs[a] -= jc_mul(sp_d, gam_sub[a, b, c], vel2)
        src = by_rho_src.get(m, [])
        dst = by_rho_dst.get(m, [])
        if src:
            geo[..., dst] = rhs[..., src] / ((m + 1.0) * (m + 2.0))

    # Pulled-back tangential metric h_ij(xi, rho) = g(d_i F, d_j F).
    delta = geo - base
    g_sub = np.empty((4, 4) + batch + (nd,))
    for a in range(4):
        for b in range(a, 4):
            g_sub[a, b] = jc_substitute(sp_d, g_c[a, b], list(delta), sp_d)
            if a != b:
                g_sub[b, a] = g_sub[a, b]
    dxi = np.empty((3, 4) + batch + (nd,))
    for i in range(3):
        for a in range(4):
            dxi[i, a] = _same_space_shift(sp_d, geo[a], i)
    coeffs = [np.zeros((3, 3) + batch) for _ in range(order + 1)]
    rho_positions = [sp_d.position[(0, 0, 0, m)] for m in range(order + 1)]
    for i in range(3):
        for j in range(i, 3):
            acc = np.zeros(batch + (nd,))
            for a in range(4):
                for b in range(4):
                    acc += jc_mul(
                        sp_d, g_sub[a, b], jc_mul(sp_d, dxi[i, a], dxi[j, b])
                    )
            for m in range(order + 1):
                val = math.factorial(m) * acc[..., rho_positions[m]]
                coeffs[m][i, j] = val
                coeffs[m][j, i] = val
    return FermiExpansion(bpts, tuple(coeffs), "geodesic")


def h3_identity_check(patch, n_boundary=20, n_interior=40, seed=0,
                      const_tol=1e-6, geodesic_tol=1e-8):
    """sup residual of h^(3) + 4 S over boundary samples.

    Preconditions: constant scalar curvature over interior and
    boundary samples, and a totally geodesic boundary. h^(3) carries
    the inward normal convention, S the outward one; the identity as
    checked is h^(3) = -4 S with those dressings.
    """
    _require_normal_form(patch)
    rng = np.random.default_rng(seed)
    ipts = sample_points(patch.chart, n_interior, rng, inset=0.08)
    bpts = sample_points(patch.chart, n_boundary, rng, inset=0.08, boundary=True)
    fr_i = CurvatureFrame.from_patch(patch, ipts, 2)
    fr_b = CurvatureFrame.from_patch(patch, bpts, 2)
    r_all = np.concatenate(
        [np.atleast_1d(values(fr_i.scalar(0))), np.atleast_1d(values(fr_b.scalar(0)))]
    )
    r_dev = float(np.max(np.abs(r_all - np.mean(r_all))))
    if r_dev > const_tol:
        raise PreconditionError(
            f"scalar curvature varies by {r_dev:.3e}, not constant", residual=r_dev
        )
    bf = BoundaryFrame(patch, bpts, 2)
    ell_sup = float(np.max(np.abs(values(bf.shape_jets3(0)))))
    if ell_sup > geodesic_tol:
        raise PreconditionError(
            f"boundary is not totally geodesic (|L| = {ell_sup:.3e})",
            residual=ell_sup,
        )
    h3 = fermi_formula_coefficients(patch, bpts, order=3).coefficients[3]
    s = s_tensor(patch, bpts, order=3).components
    return float(np.max(np.abs(h3 + 4.0 * s)))


def fermi_christoffel_check(patch, bpt):
    """Residuals of the boundary-point Christoffel table in Fermi-style
    coordinates (geodesic normal coordinates on the face, built from a
    linear orthonormalization plus a quadratic correction):

        Gamma^k_ij = 0,            Gamma^0_ij = L_ij = (H/3) g_ij,
        Gamma^j_i0 = -(H/3) d^j_i, Gamma^0_i0 = Gamma^0_00 = 0.

    The table describes umbilic boundaries; on non-umbilic input the
    residuals simply report the deviation.
    """
    _require_normal_form(patch)
    bpts = _as_coords(bpt)
    single = bpts.ndim == 1
    pts = bpts.reshape(-1, 4)
    out = {
        "tangential": 0.0,
        "second_fundamental": 0.0,
        "mixed": 0.0,
        "normal_i0": 0.0,
        "normal_00": 0.0,
    }
    for p in pts:
        bf = BoundaryFrame(patch, p, 2)
        gam = values(bf.frame.christoffel(0))
        h = values(bf.induced_metric3(0))
        hmean = float(values(bf.mean_curvature3(0)))
        gam3 = values(bf.intrinsic_frame(1).christoffel(0))
        a_mat = np.linalg.inv(np.linalg.cholesky(h)).T  # A^T h A = I
        jac = np.zeros((4, 4))
        jac[0, 0] = 1.0
        jac[1:, 1:] = a_mat
        jac_inv = np.linalg.inv(jac)
        hess = np.zeros((4, 4, 4))
        hess[1:, 1:, 1:] = -np.einsum("kmn,mi,nj->kij", gam3, a_mat, a_mat)
        gam_new = np.einsum(
            "ce,eab,aA,bB->cAB", jac_inv, gam, jac, jac
        ) + np.einsum("ce,eAB->cAB", jac_inv, hess)
        eye = np.eye(3)
        out["tangential"] = max(out["tangential"], float(np.max(np.abs(gam_new[1:, 1:, 1:]))))
        out["second_fundamental"] = max(
            out["second_fundamental"],
            float(np.max(np.abs(gam_new[0, 1:, 1:] - (hmean / 3.0) * eye))),
        )
        out["mixed"] = max(
            out["mixed"],
            float(np.max(np.abs(gam_new[1:, 1:, 0] + (hmean / 3.0) * eye))),
        )
        out["normal_i0"] = max(out["normal_i0"], float(np.max(np.abs(gam_new[0, 1:, 0]))))
        out["normal_00"] = max(out["normal_00"], float(abs(gam_new[0, 0, 0])))
    return out
