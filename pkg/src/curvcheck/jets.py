"""Truncated multivariate Taylor (jet) arithmetic.

A Jet stores the value and all partial derivatives of a smooth
function at a base point, up to a fixed total order, as the dense
coefficient vector c[alpha] = d^alpha f / alpha! over the graded-lex
multi-index basis. Truncation is always by total order, so mixed
high-order partials survive as long as their total order fits.

Coefficient arrays carry optional leading batch axes: a Jet with
coeffs of shape (B, ncoeff) represents the same expression evaluated
at B base points at once. All operations broadcast over the batch.

Jets are immutable values and every operation is pure, so evaluation
over many points is safe to run concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product as _iproduct

import numpy as np

from . import _kernels
from .errors import JetDomainError, JetOrderError, SingularJetError

MAX_ORDER = 6
MAX_DIM = 4

_SINGULAR_FLOOR = 1e-300


@dataclass(frozen=True)
class MultiIndex:
    """Exponent tuple of a partial derivative, e.g. (2, 0, 1, 0)."""

    exponents: tuple

    def __post_init__(self):
        if any(e < 0 for e in self.exponents):
            raise JetOrderError("multi-index exponents must be non-negative")

    @property
    def order(self):
        return sum(self.exponents)


def _as_exponents(idx, dim):
    exps = idx.exponents if isinstance(idx, MultiIndex) else tuple(idx)
    if len(exps) != dim:
        raise JetOrderError(f"multi-index length {len(exps)} does not match dim {dim}")
    if any(e < 0 for e in exps):
        raise JetOrderError("multi-index exponents must be non-negative")
    return exps


class JetSpace:
    """Index tables for jets of a fixed (dim, order).

    The multi-index enumeration is graded lexicographic, so the
    order-m prefix of a higher-order space is exactly the order-m
    space; truncation is a slice.
    """

    def __init__(self, dim, order):
        self.dim = dim
        self.order = order
        idx = sorted(
            (a for a in _iproduct(range(order + 1), repeat=dim) if sum(a) <= order),
            key=lambda a: (sum(a), a),
        )
        self.indices = tuple(idx)
        self.ncoeff = len(idx)
        self.position = {a: i for i, a in enumerate(idx)}
        totals = np.array([sum(a) for a in idx])
        self._counts = np.array(
            [int(np.count_nonzero(totals <= m)) for m in range(order + 1)]
        )
        self.factorials = np.array(
            [float(math.prod(math.factorial(e) for e in a)) for a in idx]
        )

        ii, jj, kk = [], [], []
        for a, pa in self.position.items():
            for b, pb in self.position.items():
                if sum(a) + sum(b) <= order:
                    c = tuple(x + y for x, y in zip(a, b))
                    ii.append(pa)
                    jj.append(pb)
                    kk.append(self.position[c])
        self.mul_ii = np.array(ii, dtype=np.int64)
        self.mul_jj = np.array(jj, dtype=np.int64)
        self.mul_kk = np.array(kk, dtype=np.int64)
        self._scatter = None

        # Derivative gather tables: position t of the (order-1)-space
        # reads source position dsrc[axis][t] with weight dfac[axis][t].
        self.dsrc = []
        self.dfac = []
        if order >= 1:
            nlow = int(self._counts[order - 1])
            for axis in range(dim):
                src = np.empty(nlow, dtype=np.int64)
                fac = np.empty(nlow)
                for t in range(nlow):
                    beta = idx[t]
                    up = tuple(
                        e + (1 if i == axis else 0) for i, e in enumerate(beta)
                    )
                    src[t] = self.position[up]
                    fac[t] = beta[axis] + 1
                self.dsrc.append(src)
                self.dfac.append(fac)

        # Monomial power chain for substitution: every non-constant
        # index is one first-order step up from its parent.
        self.power_parent = np.zeros(self.ncoeff, dtype=np.int64)
        self.power_axis = np.zeros(self.ncoeff, dtype=np.int64)
        for k in range(1, self.ncoeff):
            a = idx[k]
            axis = next(i for i, e in enumerate(a) if e > 0)
            down = tuple(e - (1 if i == axis else 0) for i, e in enumerate(a))
            self.power_parent[k] = self.position[down]
            self.power_axis[k] = axis

    def count(self, m):
        """Number of coefficients of total order <= m."""
        return int(self._counts[m])

    def scatter_matrix(self):
        if self._scatter is None:
            m = np.zeros((len(self.mul_kk), self.ncoeff))
            m[np.arange(len(self.mul_kk)), self.mul_kk] = 1.0
            self._scatter = m
        return self._scatter


@lru_cache(maxsize=None)
def jet_space(dim, order):
    if not 1 <= dim <= MAX_DIM:
        raise JetOrderError(f"jet dim must be in 1..{MAX_DIM}, got {dim}")
    if not 0 <= order <= MAX_ORDER:
        raise JetOrderError(f"jet order must be in 0..{MAX_ORDER}, got {order}")
    return JetSpace(dim, order)


# ---------------------------------------------------------------------------
# Array-level operations on raw coefficient stacks (..., ncoeff).
# The curvature engine works on these directly; the Jet class wraps
# them for scalar ergonomics.


def jc_mul(space, a, b):
    """Truncated product; a, b broadcastable stacks in `space`."""
    a, b = np.broadcast_arrays(a, b)
    flat_a = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, space.ncoeff)
    flat_b = np.ascontiguousarray(b, dtype=np.float64).reshape(-1, space.ncoeff)
    out = _kernels.product_2d(space, flat_a, flat_b)
    return out.reshape(a.shape)

def jc_trunc(space, a, m):
    if m == space.order:
        return a
    return a[..., : space.count(m)]


def jc_deriv(space, a, axis):
    """Partial derivative, one order lower."""
    if space.order == 0:
        raise JetOrderError("cannot differentiate an order-0 jet")
    return a[..., space.dsrc[axis]] * space.dfac[axis]


def jc_reciprocal(space, b):
    """1/b by Newton iteration in the truncated algebra."""
    b0 = b[..., 0]
    if np.any(np.abs(b0) < _SINGULAR_FLOOR):
        raise SingularJetError("division by a jet with zero value part")
    y = np.zeros_like(b)
    y[..., 0] = 1.0 / b0
    iters = max(0, math.ceil(math.log2(space.order + 1)))
    for _ in range(iters):
        by = jc_mul(space, b, y)
        two_minus = -by
        two_minus[..., 0] += 2.0
        y = jc_mul(space, y, two_minus)
    return y


def jc_div(space, a, b):
    return jc_mul(space, a, jc_reciprocal(space, b))


def jc_int_pow(space, a, n):
    if n == 0:
        out = np.zeros_like(a)
        out[..., 0] = 1.0
        return out
    if n < 0:
        return jc_int_pow(space, jc_reciprocal(space, a), -n)
    result = None
    base = a
    while n:
        if n & 1:
            result = base if result is None else jc_mul(space, result, base)
        n >>= 1
        if n:
            base = jc_mul(space, base, base)
    return result


def jc_compose(space, univ, a):
    """Compose the univariate series `univ` with jet a.

    univ[k] is f^(k)(a.value)/k! as a batch array; evaluation is a
    Horner pass in (a - a.value).
    """
    abar = np.array(a, copy=True)
    abar[..., 0] = 0.0
    shape = np.broadcast_shapes(a.shape[:-1], np.shape(univ[-1]))
    res = np.zeros(shape + (space.ncoeff,))
    res[..., 0] = univ[-1]
    for k in range(len(univ) - 2, -1, -1):
        res = jc_mul(space, res, abar)
        res[..., 0] += univ[k]
    return res


def jc_substitute(src_space, t_coeffs, deltas, tgt_space):
    """Evaluate the polynomial with coefficients t_coeffs at `deltas`.

    deltas[i] are target-space stacks with zero value part, one per
    source variable. Used to re-expand chart-space jets along a
    jet-valued curve or map.
    """
    n = src_space.ncoeff
    powers = [None] * n
    batch = np.broadcast_shapes(*(d.shape[:-1] for d in deltas))
    one = np.zeros(batch + (tgt_space.ncoeff,))
    one[..., 0] = 1.0
    powers[0] = one
    for k in range(1, n):
        powers[k] = jc_mul(
            tgt_space, powers[src_space.power_parent[k]], deltas[src_space.power_axis[k]]
        )
    out = np.zeros(
        np.broadcast_shapes(t_coeffs.shape[:-1], batch) + (tgt_space.ncoeff,)
    )
    for k in range(n):
        c = t_coeffs[..., k]
        if np.all(c == 0.0):
            continue
        out += c[..., None] * powers[k]
    return out


def jc_sqrt(space, a):
    univ = _series_sqrt(a[..., 0], space.order)
    return jc_compose(space, univ, a)


def jc_exp(space, a):
    univ = _series_exp(a[..., 0], space.order)
    return jc_compose(space, univ, a)


def jc_matrix_inverse(space, g):
    """Inverse of a (d, d, ..., ncoeff) jet matrix with SPD value part.

    Gauss-Jordan with diagonal pivots; SPD value parts keep the
    diagonal pivots bounded away from zero during elimination (the
    caller is expected to have Cholesky-checked the value part).
    """
    d = g.shape[0]
    a = np.array(g, copy=True)
    inv = np.zeros_like(a)
    for i in range(d):
        inv[i, i, ..., 0] = 1.0
    for col in range(d):
        piv = a[col, col]
        if np.any(np.abs(piv[..., 0]) < _SINGULAR_FLOOR):
            raise SingularJetError("singular value part in jet matrix inversion")
        ipiv = jc_reciprocal(space, piv)
        a[col] = jc_mul(space, a[col], ipiv[None])
        inv[col] = jc_mul(space, inv[col], ipiv[None])
        for row in range(d):
            if row == col:
                continue
            f = a[row, col].copy()
            a[row] -= jc_mul(space, f[None], a[col])
            inv[row] -= jc_mul(space, f[None], inv[col])
    return inv


def jc_restrict_face(space, a, k):
    """Jet of (d/dx0)^k f restricted to the face x0 = 0.

    Returns a stack in the (dim-1)-variable space of order
    (space.order - k); tangential variables keep their relative order.
    """
    if space.dim < 2:
        raise JetOrderError("face restriction needs dim >= 2")
    if k > space.order:
        raise JetOrderError("restriction order exceeds jet order")
    sub = jet_space(space.dim - 1, space.order - k)
    gather = np.array(
        [space.position[(k,) + beta] for beta in sub.indices], dtype=np.int64
    )
    return a[..., gather] * float(math.factorial(k))


# ---------------------------------------------------------------------------
# Univariate series of the supported elementary functions.


def _series_exp(a0, m):
    e = np.exp(a0)
    return [e / math.factorial(k) for k in range(m + 1)]


def _series_sin(a0, m):
    s, c = np.sin(a0), np.cos(a0)
    cycle = [s, c, -s, -c]
    return [cycle[k % 4] / math.factorial(k) for k in range(m + 1)]


def _series_cos(a0, m):
    s, c = np.sin(a0), np.cos(a0)
    cycle = [c, -s, -c, s]
    return [cycle[k % 4] / math.factorial(k) for k in range(m + 1)]


def _series_sinh(a0, m):
    s, c = np.sinh(a0), np.cosh(a0)
    return [(s if k % 2 == 0 else c) / math.factorial(k) for k in range(m + 1)]


def _series_cosh(a0, m):
    s, c = np.sinh(a0), np.cosh(a0)
    return [(c if k % 2 == 0 else s) / math.factorial(k) for k in range(m + 1)]


def _series_log(a0, m):
    if np.any(a0 <= 0.0):
        raise JetDomainError("log", _offending(a0, a0 <= 0.0))
    out = [np.log(a0)]
    for k in range(1, m + 1):
        out.append(((-1.0) ** (k + 1)) / (k * a0**k))
    return out


def _binom_series(p, a0, m):
    out = []
    coeff = 1.0
    for k in range(m + 1):
        out.append(coeff * a0 ** (p - k))
        coeff *= (p - k) / (k + 1)
    return out


def _series_sqrt(a0, m):
    if np.any(a0 <= 0.0):
        raise JetDomainError("sqrt", _offending(a0, a0 <= 0.0))
    return _binom_series(0.5, a0, m)


def _offending(values, mask):
    vals = np.atleast_1d(values)
    bad = np.atleast_1d(mask)
    return float(vals[bad][0]) if bad.any() else float(vals.flat[0])


_SERIES = {
    "exp": _series_exp,
    "sin": _series_sin,
    "cos": _series_cos,
    "sinh": _series_sinh,
    "cosh": _series_cosh,
    "log": _series_log,
    "sqrt": _series_sqrt,
}


class Jet:
    """Immutable truncated Taylor expansion at a (batch of) base point(s)."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space, coeffs):
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.shape[-1] != space.ncoeff:
            raise JetOrderError(
                f"coefficient stack has {coeffs.shape[-1]} entries, "
                f"space wants {space.ncoeff}"
            )
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, *_):
        raise AttributeError("Jet is immutable")

    # -- construction ------------------------------------------------

    @staticmethod
    def constant(value, dim, order):
        sp = jet_space(dim, order)
        value = np.asarray(value, dtype=np.float64)
        coeffs = np.zeros(value.shape + (sp.ncoeff,))
        coeffs[..., 0] = value
        return Jet(sp, coeffs)

    @staticmethod
    def variable(base, axis, dim, order):
        sp = jet_space(dim, order)
        if not 0 <= axis < dim:
            raise JetOrderError(f"axis {axis} out of range for dim {dim}")
        base = np.asarray(base, dtype=np.float64)
        if base.shape[-1] != dim:
            raise JetOrderError(f"base point must have {dim} components")
        coeffs = np.zeros(base.shape[:-1] + (sp.ncoeff,))
        coeffs[..., 0] = base[..., axis]
        if order >= 1:
            unit = tuple(1 if i == axis else 0 for i in range(dim))
            coeffs[..., sp.position[unit]] = 1.0
        return Jet(sp, coeffs)

    # -- basic properties --------------------------------------------

    @property
    def dim(self):
        return self.space.dim

    @property
    def order(self):
        return self.space.order

    @property
    def value(self):
        return self.coeffs[..., 0]

    def truncate(self, m):
        if m > self.order:
            raise JetOrderError("cannot extend a jet by truncation")
        sp = jet_space(self.dim, m)
        return Jet(sp, jc_trunc(self.space, self.coeffs, m))

    def derivative(self, axis):
        sp = jet_space(self.dim, self.order - 1)
        return Jet(sp, jc_deriv(self.space, self.coeffs, axis))

    def partial(self, idx):
        """d^alpha f at the base point, alpha! times the stored coefficient."""
        exps = _as_exponents(idx, self.dim)
        if sum(exps) > self.order:
            raise JetOrderError(
                f"partial of order {sum(exps)} exceeds jet order {self.order}"
            )
        pos = self.space.position[exps]
        return self.coeffs[..., pos] * self.space.factorials[pos]

    def restrict_face(self, k=0):
        """Jet of the k-th normal derivative on the x0 = 0 face."""
        sp = jet_space(self.dim - 1, self.order - k)
        return Jet(sp, jc_restrict_face(self.space, self.coeffs, k))

    # -- arithmetic ---------------------------------------------------

    def _lift(self, other):
        if isinstance(other, Jet):
            if other.dim != self.dim:
                raise JetOrderError("jet dims differ")
            m = min(self.order, other.order)
            return self.truncate(m), other.truncate(m)
        return self, Jet.constant(other, self.dim, self.order)

    def __add__(self, other):
        a, b = self._lift(other)
        return Jet(a.space, a.coeffs + b.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __sub__(self, other):
        a, b = self._lift(other)
        return Jet(a.space, a.coeffs - b.coeffs)

    def __rsub__(self, other):
        return -(self - other)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=np.float64)
            return Jet(self.space, self.coeffs * other[..., None])
        a, b = self._lift(other)
        return Jet(a.space, jc_mul(a.space, a.coeffs, b.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, other):
        a, b = self._lift(other)
        return Jet(a.space, jc_div(a.space, a.coeffs, b.coeffs))

    def __rtruediv__(self, other):
        a, b = self._lift(other)
        return Jet(a.space, jc_div(a.space, b.coeffs, a.coeffs))

    def __pow__(self, n):
        if isinstance(n, int) or float(n).is_integer():
            return Jet(self.space, jc_int_pow(self.space, self.coeffs, int(n)))
        return jpow(self, float(n))

    def __repr__(self):
        return f"Jet(dim={self.dim}, order={self.order}, value={self.value!r})"


def _compose(a, name, series):
    univ = series(a.value, a.order)
    return Jet(a.space, jc_compose(a.space, univ, a.coeffs))


def jexp(a):
    return _compose(a, "exp", _series_exp)


def jsin(a):
    return _compose(a, "sin", _series_sin)


def jcos(a):
    return _compose(a, "cos", _series_cos)


def jsinh(a):
    return _compose(a, "sinh", _series_sinh)


def jcosh(a):
    return _compose(a, "cosh", _series_cosh)


def jlog(a):
    return _compose(a, "log", _series_log)


def jsqrt(a):
    return _compose(a, "sqrt", _series_sqrt)


def jtan(a):
    c = jcos(a)
    if np.any(np.abs(c.value) < 1e-12):
        raise JetDomainError("tan", _offending(a.value, np.abs(c.value) < 1e-12))
    return jsin(a) / c


def jtanh(a):
    return jsinh(a) / jcosh(a)


def jpow(a, exponent):
    """a**exponent for literal exponents; integer exponents work for
    any nonzero base, fractional ones need a positive value part."""
    if not math.isfinite(exponent):
        raise JetDomainError("pow", exponent)
    if float(exponent).is_integer() and abs(exponent) <= 64:
        return Jet(a.space, jc_int_pow(a.space, a.coeffs, int(exponent)))
    if np.any(a.value <= 0.0):
        raise JetDomainError("pow", _offending(a.value, a.value <= 0.0))
    univ = _binom_series(float(exponent), a.value, a.order)
    return Jet(a.space, jc_compose(a.space, univ, a.coeffs))


ELEMENTARY = {
    "sin": jsin,
    "cos": jcos,
    "tan": jtan,
    "exp": jexp,
    "log": jlog,
    "sqrt": jsqrt,
    "sinh": jsinh,
    "cosh": jcosh,
    "tanh": jtanh,
}


# ---------------------------------------------------------------------------
# Operation-style entry points.


def jet_variable(base, axis, dim, order):
    """Seed jet of the coordinate function x^axis at `base`."""
    return Jet.variable(np.asarray(base, dtype=np.float64), axis, dim, order)


def jet_arith(op, a, b):
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown jet operation {op!r}")


def jet_elementary(f, a, exponent=None):
    if f == "pow_const":
        if exponent is None:
            raise JetDomainError("pow_const", None)
        return jpow(a, exponent)
    try:
        fn = ELEMENTARY[f]
    except KeyError:
        raise ValueError(f"unknown elementary function {f!r}") from None
    return fn(a)


def jet_partial(a, idx):
    return a.partial(idx)
