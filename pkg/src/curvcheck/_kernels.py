"""Truncated-polynomial product kernels (numba and numpy paths).

A jet of total order m in d variables is a dense coefficient vector
over the graded-lex multi-index basis. The product is a sparse
convolution driven by precomputed index triples (ii, jj, kk) with
idx[ii] + idx[jj] = idx[kk]:

    out[n, kk[t]] += a[n, ii[t]] * b[n, jj[t]]

The numpy fallback rewrites the scatter as a dense matmul against a
0/1 matrix M of shape (npairs, ncoeff); inputs are chunked so the
gathered temporaries stay bounded.
"""

import numpy as np

from ._backend import njit, USE_NUMBA

# Cap on the (N x npairs) gather temporaries of the numpy path, in elements.
_NP_CHUNK_ELEMS = 8_000_000


@njit(cache=True)
def _mul_njit(a, b, ii, jj, kk, out):
    n_batch = a.shape[0]
    n_pairs = ii.shape[0]
    for n in range(n_batch):
        av = a[n]
        bv = b[n]
        ov = out[n]
        for t in range(n_pairs):
            ov[kk[t]] += av[ii[t]] * bv[jj[t]]


def _mul_numpy(a, b, ii, jj, scatter, out):
    n_pairs = ii.shape[0]
    chunk = max(1, _NP_CHUNK_ELEMS // n_pairs)
    for s in range(0, a.shape[0], chunk):
        e = min(s + chunk, a.shape[0])
        out[s:e] = (a[s:e, ii] * b[s:e, jj]) @ scatter


def product_2d(space, a, b):
    """Product of coefficient stacks shaped (N, ncoeff); same space."""
    out = np.zeros_like(a)
    if space.ncoeff == 1:
        np.multiply(a, b, out=out)
        return out
    if USE_NUMBA:
        _mul_njit(a, b, space.mul_ii, space.mul_jj, space.mul_kk, out)
    else:
        _mul_numpy(a, b, space.mul_ii, space.mul_jj, space.scatter_matrix(), out)
    return out
