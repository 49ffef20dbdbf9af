"""Pure-numpy implementations of the hot array kernels.

Reference backend: every function here has a numba twin in
``kernels_numba`` with identical semantics. Convolutions use the
shift-and-GEMM decomposition (one tensordot per kernel offset), which keeps
everything inside BLAS without materializing im2col buffers.

Layout conventions: activations are NCHW and C-contiguous, conv weights are
(out, in, kh, kw), depthwise weights are (channels, kh, kw). Spatial padding
is applied by the caller; ``*_bwd_x`` functions return gradients in padded
coordinates.
"""

import numpy as np

NAME = "numpy"


def _out_dim(size, k, stride, dilation):
    return (size - ((k - 1) * dilation + 1)) // stride + 1


def conv2d_fwd(xp, w, sh, sw, dh, dw):
    n, cin, hp, wp = xp.shape
    cout, _, kh, kw = w.shape
    oh = _out_dim(hp, kh, sh, dh)
    ow = _out_dim(wp, kw, sw, dw)
    y = np.zeros((n, oh, ow, cout), dtype=xp.dtype)
    for ki in range(kh):
        for kj in range(kw):
            xs = xp[:, :, ki * dh:ki * dh + sh * oh:sh, kj * dw:kj * dw + sw * ow:sw]
            y += np.tensordot(xs, w[:, :, ki, kj], axes=([1], [1]))
    return np.ascontiguousarray(y.transpose(0, 3, 1, 2))


def conv2d_bwd_x(dy, w, hp, wp, sh, sw, dh, dw):
    n, cout, oh, ow = dy.shape
    _, cin, kh, kw = w.shape
    dxp = np.zeros((n, cin, hp, wp), dtype=dy.dtype)
    for ki in range(kh):
        for kj in range(kw):
            g = np.tensordot(dy, w[:, :, ki, kj], axes=([1], [0]))  # n,oh,ow,cin
            dxp[:, :, ki * dh:ki * dh + sh * oh:sh,
                kj * dw:kj * dw + sw * ow:sw] += g.transpose(0, 3, 1, 2)
    return dxp


def conv2d_bwd_w(xp, dy, kh, kw, sh, sw, dh, dw):
    n, cin, hp, wp = xp.shape
    _, cout, oh, ow = dy.shape
    dw_ = np.empty((cout, cin, kh, kw), dtype=xp.dtype)
    for ki in range(kh):
        for kj in range(kw):
            xs = xp[:, :, ki * dh:ki * dh + sh * oh:sh, kj * dw:kj * dw + sw * ow:sw]
            dw_[:, :, ki, kj] = np.tensordot(dy, xs, axes=([0, 2, 3], [0, 2, 3]))
    return dw_


def depthwise2d_fwd(xp, w, sh, sw, dh, dw):
    n, c, hp, wp = xp.shape
    _, kh, kw = w.shape
    oh = _out_dim(hp, kh, sh, dh)
    ow = _out_dim(wp, kw, sw, dw)
    y = np.zeros((n, c, oh, ow), dtype=xp.dtype)
    for ki in range(kh):
        for kj in range(kw):
            xs = xp[:, :, ki * dh:ki * dh + sh * oh:sh, kj * dw:kj * dw + sw * ow:sw]
            y += xs * w[:, ki, kj][None, :, None, None]
    return y


def depthwise2d_bwd_x(dy, w, hp, wp, sh, sw, dh, dw):
    n, c, oh, ow = dy.shape
    _, kh, kw = w.shape
    dxp = np.zeros((n, c, hp, wp), dtype=dy.dtype)
    for ki in range(kh):
        for kj in range(kw):
            dxp[:, :, ki * dh:ki * dh + sh * oh:sh,
                kj * dw:kj * dw + sw * ow:sw] += dy * w[:, ki, kj][None, :, None, None]
    return dxp


def depthwise2d_bwd_w(xp, dy, kh, kw, sh, sw, dh, dw):
    n, c, oh, ow = dy.shape
    dw_ = np.empty((c, kh, kw), dtype=xp.dtype)
    for ki in range(kh):
        for kj in range(kw):
            xs = xp[:, :, ki * dh:ki * dh + sh * oh:sh, kj * dw:kj * dw + sw * ow:sw]
            dw_[:, ki, kj] = np.einsum("nchw,nchw->c", dy, xs)
    return dw_


def maxpool2d_fwd(x, kh, kw, sh, sw, ph, pw):
    n, c, h, w = x.shape
    neg = np.array(-np.inf, dtype=x.dtype)
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)), constant_values=neg)
    hp, wp = h + 2 * ph, w + 2 * pw
    oh = _out_dim(hp, kh, sh, 1)
    ow = _out_dim(wp, kw, sw, 1)
    windows = np.empty((kh * kw, n, c, oh, ow), dtype=x.dtype)
    for ki in range(kh):
        for kj in range(kw):
            windows[ki * kw + kj] = xp[:, :, ki:ki + sh * oh:sh, kj:kj + sw * ow:sw]
    amax = windows.argmax(axis=0)
    y = np.take_along_axis(windows, amax[None], axis=0)[0]
    ki, kj = np.divmod(amax, kw)
    gh = np.arange(oh)[:, None] * sh
    gw = np.arange(ow)[None, :] * sw
    ih = gh[None, None] + ki - ph
    iw = gw[None, None] + kj - pw
    idx = (ih * w + iw).astype(np.int64)
    return np.ascontiguousarray(y), idx


def _scatter_add_plane(dy, idx, h, w):
    """Scatter-add dy values at per-plane flat indices; returns (n,c,h,w)."""
    n, c = dy.shape[:2]
    plane = h * w
    base = (np.arange(n * c, dtype=np.int64) * plane).reshape(n, c, 1, 1)
    flat = (idx + base).ravel()
    out = np.bincount(flat, weights=dy.ravel().astype(np.float64),
                      minlength=n * c * plane)
    return out.reshape(n, c, h, w).astype(dy.dtype)


def maxpool2d_bwd(dy, idx, h, w):
    return _scatter_add_plane(dy, idx, h, w)


def maxunpool2d_fwd(x, idx, h, w):
    return _scatter_add_plane(x, idx, h, w)


def maxunpool2d_bwd(dy, idx):
    n, c = idx.shape[:2]
    plane = dy.shape[2] * dy.shape[3]
    base = (np.arange(n * c, dtype=np.int64) * plane).reshape(n, c, 1, 1)
    return dy.ravel()[(idx + base)]


def _bilinear_coeffs(in_size, out_size):
    # half-pixel centers (align_corners=False)
    src = (np.arange(out_size, dtype=np.float64) + 0.5) * (in_size / out_size) - 0.5
    src = np.clip(src, 0.0, in_size - 1.0)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, in_size - 1)
    frac = src - i0
    return i0, i1, frac


def bilinear_fwd(x, oh, ow):
    n, c, h, w = x.shape
    h0, h1, fh = _bilinear_coeffs(h, oh)
    w0, w1, fw = _bilinear_coeffs(w, ow)
    fh = fh.astype(x.dtype)[None, None, :, None]
    fw = fw.astype(x.dtype)[None, None, None, :]
    top = x[:, :, h0][:, :, :, w0] * (1 - fw) + x[:, :, h0][:, :, :, w1] * fw
    bot = x[:, :, h1][:, :, :, w0] * (1 - fw) + x[:, :, h1][:, :, :, w1] * fw
    return top * (1 - fh) + bot * fh


def bilinear_bwd(dy, h, w):
    n, c, oh, ow = dy.shape
    h0, h1, fh = _bilinear_coeffs(h, oh)
    w0, w1, fw = _bilinear_coeffs(w, ow)
    fh = fh[None, None, :, None]
    fw = fw[None, None, None, :]
    plane = h * w
    base = (np.arange(n * c, dtype=np.int64) * plane).reshape(n, c, 1, 1)
    out = np.zeros(n * c * plane, dtype=np.float64)
    for hi, hwt in ((h0, 1 - fh), (h1, fh)):
        for wi, wwt in ((w0, 1 - fw), (w1, fw)):
            flat = (hi[:, None] * w + wi[None, :])[None, None] + base
            np.add.at(out, flat.ravel(), (dy * hwt * wwt).ravel())
    return out.reshape(n, c, h, w).astype(dy.dtype)


def nearest_fwd(x, oh, ow):
    h, w = x.shape[2:]
    hi = np.minimum((np.arange(oh) * h) // oh, h - 1)
    wi = np.minimum((np.arange(ow) * w) // ow, w - 1)
    return np.ascontiguousarray(x[:, :, hi][:, :, :, wi])


def nearest_bwd(dy, h, w):
    n, c, oh, ow = dy.shape
    hi = np.minimum((np.arange(oh) * h) // oh, h - 1)
    wi = np.minimum((np.arange(ow) * w) // ow, w - 1)
    idx = np.broadcast_to((hi[:, None] * w + wi[None, :])[None, None], dy.shape)
    return _scatter_add_plane(dy, idx.astype(np.int64), h, w)
