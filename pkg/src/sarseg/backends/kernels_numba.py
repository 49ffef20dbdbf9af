"""Numba-jitted twins of the numpy kernels.

Data movement (im2col/col2im, pooling, resampling) runs in @njit loops;
the actual GEMM of each convolution stays in numpy so it hits BLAS. All
scatter loops are partitioned per (batch, channel) plane, which keeps
parallel execution race-free and the accumulation order deterministic.

First call per dtype pays JIT compilation; ``cache=True`` persists the
compiled code across processes.
"""

import numpy as np
import numba
from numba import njit, prange

# the default TBB probe warns on older TBB builds; workqueue is always present
numba.config.THREADING_LAYER = "workqueue"

NAME = "numba"

_JIT = dict(cache=True, parallel=True, fastmath=False)


def _out_dim(size, k, stride, dilation):
    return (size - ((k - 1) * dilation + 1)) // stride + 1


@njit(**_JIT)
def _im2col(xp, kh, kw, sh, sw, dh, dw, oh, ow, cols):
    n, c, hp, wp = xp.shape
    for ni in prange(n):
        for ci in range(c):
            for ki in range(kh):
                for kj in range(kw):
                    row = (ci * kh + ki) * kw + kj
                    for i in range(oh):
                        hsrc = ki * dh + i * sh
                        for j in range(ow):
                            cols[ni, row, i * ow + j] = xp[ni, ci, hsrc, kj * dw + j * sw]


@njit(**_JIT)
def _col2im(cols, n, c, hp, wp, kh, kw, sh, sw, dh, dw, oh, ow, dxp):
    for nc in prange(n * c):
        ni = nc // c
        ci = nc % c
        for ki in range(kh):
            for kj in range(kw):
                row = (ci * kh + ki) * kw + kj
                for i in range(oh):
                    hdst = ki * dh + i * sh
                    for j in range(ow):
                        dxp[ni, ci, hdst, kj * dw + j * sw] += cols[ni, row, i * ow + j]


def conv2d_fwd(xp, w, sh, sw, dh, dw):
    n, cin, hp, wp = xp.shape
    cout, _, kh, kw = w.shape
    oh = _out_dim(hp, kh, sh, dh)
    ow = _out_dim(wp, kw, sw, dw)
    cols = np.empty((n, cin * kh * kw, oh * ow), dtype=xp.dtype)
    _im2col(xp, kh, kw, sh, sw, dh, dw, oh, ow, cols)
    w2 = w.reshape(cout, cin * kh * kw)
    y = np.matmul(w2, cols)  # (n, cout, oh*ow)
    return np.ascontiguousarray(y.reshape(n, cout, oh, ow))


def conv2d_bwd_x(dy, w, hp, wp, sh, sw, dh, dw):
    n, cout, oh, ow = dy.shape
    _, cin, kh, kw = w.shape
    w2 = np.ascontiguousarray(w.reshape(cout, cin * kh * kw).T)
    cols = np.matmul(w2, np.ascontiguousarray(dy).reshape(n, cout, oh * ow))
    dxp = np.zeros((n, cin, hp, wp), dtype=dy.dtype)
    _col2im(cols, n, cin, hp, wp, kh, kw, sh, sw, dh, dw, oh, ow, dxp)
    return dxp


def conv2d_bwd_w(xp, dy, kh, kw, sh, sw, dh, dw):
    n, cin, hp, wp = xp.shape
    _, cout, oh, ow = dy.shape
    cols = np.empty((n, cin * kh * kw, oh * ow), dtype=xp.dtype)
    _im2col(xp, kh, kw, sh, sw, dh, dw, oh, ow, cols)
    dy2 = np.ascontiguousarray(dy.transpose(1, 0, 2, 3)).reshape(cout, n * oh * ow)
    cols2 = np.ascontiguousarray(cols.transpose(1, 0, 2)).reshape(cin * kh * kw, n * oh * ow)
    dw_ = np.matmul(dy2, cols2.T)
    return np.ascontiguousarray(dw_.reshape(cout, cin, kh, kw))


@njit(**_JIT)
def _depthwise_fwd(xp, w, sh, sw, dh, dw, y):
    n, c, hp, wp = xp.shape
    _, kh, kw = w.shape
    oh, ow = y.shape[2], y.shape[3]
    for nc in prange(n * c):
        ni = nc // c
        ci = nc % c
        for i in range(oh):
            for j in range(ow):
                acc = 0.0
                for ki in range(kh):
                    for kj in range(kw):
                        acc += xp[ni, ci, ki * dh + i * sh, kj * dw + j * sw] * w[ci, ki, kj]
                y[ni, ci, i, j] = acc


def depthwise2d_fwd(xp, w, sh, sw, dh, dw):
    n, c, hp, wp = xp.shape
    _, kh, kw = w.shape
    oh = _out_dim(hp, kh, sh, dh)
    ow = _out_dim(wp, kw, sw, dw)
    y = np.empty((n, c, oh, ow), dtype=xp.dtype)
    _depthwise_fwd(xp, w, sh, sw, dh, dw, y)
    return y


@njit(**_JIT)
def _depthwise_bwd_x(dy, w, sh, sw, dh, dw, dxp):
    n, c, oh, ow = dy.shape
    _, kh, kw = w.shape
    for nc in prange(n * c):
        ni = nc // c
        ci = nc % c
        for i in range(oh):
            for j in range(ow):
                g = dy[ni, ci, i, j]
                for ki in range(kh):
                    for kj in range(kw):
                        dxp[ni, ci, ki * dh + i * sh, kj * dw + j * sw] += g * w[ci, ki, kj]


def depthwise2d_bwd_x(dy, w, hp, wp, sh, sw, dh, dw):
    dxp = np.zeros((dy.shape[0], dy.shape[1], hp, wp), dtype=dy.dtype)
    _depthwise_bwd_x(dy, w, sh, sw, dh, dw, dxp)
    return dxp


@njit(**_JIT)
def _depthwise_bwd_w(xp, dy, kh, kw, sh, sw, dh, dw, dw_):
    n, c, oh, ow = dy.shape
    for ci in prange(c):
        for ki in range(kh):
            for kj in range(kw):
                acc = 0.0
                for ni in range(n):
                    for i in range(oh):
                        for j in range(ow):
                            acc += dy[ni, ci, i, j] * xp[ni, ci, ki * dh + i * sh, kj * dw + j * sw]
                dw_[ci, ki, kj] = acc


def depthwise2d_bwd_w(xp, dy, kh, kw, sh, sw, dh, dw):
    dw_ = np.empty((dy.shape[1], kh, kw), dtype=xp.dtype)
    _depthwise_bwd_w(xp, dy, kh, kw, sh, sw, dh, dw, dw_)
    return dw_


@njit(**_JIT)
def _maxpool_fwd(x, kh, kw, sh, sw, ph, pw, y, idx):
    n, c, h, w = x.shape
    oh, ow = y.shape[2], y.shape[3]
    for nc in prange(n * c):
        ni = nc // c
        ci = nc % c
        for i in range(oh):
            for j in range(ow):
                best = -np.inf
                besth = 0
                bestw = 0
                for ki in range(kh):
                    hh = i * sh + ki - ph
                    if hh < 0 or hh >= h:
                        continue
                    for kj in range(kw):
                        ww = j * sw + kj - pw
                        if ww < 0 or ww >= w:
                            continue
                        v = x[ni, ci, hh, ww]
                        if v > best:
                            best = v
                            besth = hh
                            bestw = ww
                y[ni, ci, i, j] = best
                idx[ni, ci, i, j] = besth * w + bestw


def maxpool2d_fwd(x, kh, kw, sh, sw, ph, pw):
    n, c, h, w = x.shape
    oh = _out_dim(h + 2 * ph, kh, sh, 1)
    ow = _out_dim(w + 2 * pw, kw, sw, 1)
    y = np.empty((n, c, oh, ow), dtype=x.dtype)
    idx = np.empty((n, c, oh, ow), dtype=np.int64)
    _maxpool_fwd(x, kh, kw, sh, sw, ph, pw, y, idx)
    return y, idx


@njit(**_JIT)
def _scatter_add_plane(src, idx, out):
    n, c = src.shape[0], src.shape[1]
    oh, ow = src.shape[2], src.shape[3]
    for nc in prange(n * c):
        ni = nc // c
        ci = nc % c
        flat = out[ni, ci].reshape(-1)
        for i in range(oh):
            for j in range(ow):
                flat[idx[ni, ci, i, j]] += src[ni, ci, i, j]


def maxpool2d_bwd(dy, idx, h, w):
    dx = np.zeros((dy.shape[0], dy.shape[1], h, w), dtype=dy.dtype)
    _scatter_add_plane(dy, idx, dx)
    return dx


def maxunpool2d_fwd(x, idx, h, w):
    y = np.zeros((x.shape[0], x.shape[1], h, w), dtype=x.dtype)
    _scatter_add_plane(x, idx, y)
    return y


@njit(**_JIT)
def _gather_plane(dy, idx, out):
    n, c = idx.shape[0], idx.shape[1]
    oh, ow = idx.shape[2], idx.shape[3]
    for nc in prange(n * c):
        ni = nc // c
        ci = nc % c
        flat = dy[ni, ci].reshape(-1)
        for i in range(oh):
            for j in range(ow):
                out[ni, ci, i, j] = flat[idx[ni, ci, i, j]]


def maxunpool2d_bwd(dy, idx):
    out = np.empty(idx.shape, dtype=dy.dtype)
    _gather_plane(np.ascontiguousarray(dy), idx, out)
    return out


@njit(cache=True)
def _bilinear_coeffs(in_size, out_size):
    i0 = np.empty(out_size, dtype=np.int64)
    i1 = np.empty(out_size, dtype=np.int64)
    frac = np.empty(out_size, dtype=np.float64)
    scale = in_size / out_size
    for i in range(out_size):
        src = (i + 0.5) * scale - 0.5
        if src < 0.0:
            src = 0.0
        if src > in_size - 1.0:
            src = in_size - 1.0
        lo = int(np.floor(src))
        i0[i] = lo
        i1[i] = min(lo + 1, in_size - 1)
        frac[i] = src - lo
    return i0, i1, frac


@njit(**_JIT)
def _bilinear_fwd(x, h0, h1, fh, w0, w1, fw, y):
    n, c = x.shape[0], x.shape[1]
    oh, ow = y.shape[2], y.shape[3]
    for nc in prange(n * c):
        ni = nc // c
        ci = nc % c
        for i in range(oh):
            a = fh[i]
            for j in range(ow):
                b = fw[j]
                top = x[ni, ci, h0[i], w0[j]] * (1 - b) + x[ni, ci, h0[i], w1[j]] * b
                bot = x[ni, ci, h1[i], w0[j]] * (1 - b) + x[ni, ci, h1[i], w1[j]] * b
                y[ni, ci, i, j] = top * (1 - a) + bot * a


def bilinear_fwd(x, oh, ow):
    h, w = x.shape[2:]
    h0, h1, fh = _bilinear_coeffs(h, oh)
    w0, w1, fw = _bilinear_coeffs(w, ow)
    y = np.empty((x.shape[0], x.shape[1], oh, ow), dtype=x.dtype)
    _bilinear_fwd(x, h0, h1, fh, w0, w1, fw, y)
    return y


@njit(**_JIT)
def _bilinear_bwd(dy, h0, h1, fh, w0, w1, fw, dx):
    n, c = dy.shape[0], dy.shape[1]
    oh, ow = dy.shape[2], dy.shape[3]
    for nc in prange(n * c):
        ni = nc // c
        ci = nc % c
        for i in range(oh):
            a = fh[i]
            for j in range(ow):
                b = fw[j]
                g = dy[ni, ci, i, j]
                dx[ni, ci, h0[i], w0[j]] += g * (1 - a) * (1 - b)
                dx[ni, ci, h0[i], w1[j]] += g * (1 - a) * b
                dx[ni, ci, h1[i], w0[j]] += g * a * (1 - b)
                dx[ni, ci, h1[i], w1[j]] += g * a * b


def bilinear_bwd(dy, h, w):
    oh, ow = dy.shape[2:]
    h0, h1, fh = _bilinear_coeffs(h, oh)
    w0, w1, fw = _bilinear_coeffs(w, ow)
    dx = np.zeros((dy.shape[0], dy.shape[1], h, w), dtype=dy.dtype)
    _bilinear_bwd(dy, h0, h1, fh, w0, w1, fw, dx)
    return dx


@njit(**_JIT)
def _nearest_fwd(x, hi, wi, y):
    n, c = x.shape[0], x.shape[1]
    oh, ow = y.shape[2], y.shape[3]
    for nc in prange(n * c):
        ni = nc // c
        ci = nc % c
        for i in range(oh):
            for j in range(ow):
                y[ni, ci, i, j] = x[ni, ci, hi[i], wi[j]]


def _nearest_index(in_size, out_size):
    idx = (np.arange(out_size, dtype=np.int64) * in_size) // out_size
    return np.minimum(idx, in_size - 1)


def nearest_fwd(x, oh, ow):
    hi = _nearest_index(x.shape[2], oh)
    wi = _nearest_index(x.shape[3], ow)
    y = np.empty((x.shape[0], x.shape[1], oh, ow), dtype=x.dtype)
    _nearest_fwd(x, hi, wi, y)
    return y


@njit(**_JIT)
def _nearest_bwd(dy, hi, wi, dx):
    n, c = dy.shape[0], dy.shape[1]
    oh, ow = dy.shape[2], dy.shape[3]
    for nc in prange(n * c):
        ni = nc // c
        ci = nc % c
        for i in range(oh):
            for j in range(ow):
                dx[ni, ci, hi[i], wi[j]] += dy[ni, ci, i, j]


def nearest_bwd(dy, h, w):
    hi = _nearest_index(h, dy.shape[2])
    wi = _nearest_index(w, dy.shape[3])
    dx = np.zeros((dy.shape[0], dy.shape[1], h, w), dtype=dy.dtype)
    _nearest_bwd(dy, hi, wi, dx)
    return dx
