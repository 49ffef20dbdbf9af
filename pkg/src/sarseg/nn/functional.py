"""Differentiable ops over autodiff Nodes.

All spatial ops take NCHW activations. Heavy kernels are delegated to the
selected backend; reductions and elementwise math stay in numpy. Each op
returns a new Node whose closure implements the exact vector-Jacobian
product, so analytic gradients can be checked against finite differences.
"""

import numpy as np

from ..backends import K
from .autodiff import Node, grad_enabled, make_node


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    extra = grad.ndim - len(shape)
    if extra:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def constant(data):
    return Node(np.asarray(data))


def add(a, b):
    out = a.data + b.data

    def bwd(dy):
        return _unbroadcast(dy, a.data.shape), _unbroadcast(dy, b.data.shape)

    return make_node(out, (a, b), bwd)


def mul(a, b):
    out = a.data * b.data

    def bwd(dy):
        return (_unbroadcast(dy * b.data, a.data.shape),
                _unbroadcast(dy * a.data, b.data.shape))

    return make_node(out, (a, b), bwd)


def relu(x):
    mask = x.data > 0
    out = np.where(mask, x.data, x.data.dtype.type(0))

    def bwd(dy):
        return (dy * mask,)

    return make_node(out, (x,), bwd)


def sigmoid(x):
    out = 1.0 / (1.0 + np.exp(-x.data))
    out = out.astype(x.data.dtype, copy=False)

    def bwd(dy):
        return (dy * out * (1.0 - out),)

    return make_node(out, (x,), bwd)


def concat(nodes, axis=1):
    datas = [n.data for n in nodes]
    out = np.concatenate(datas, axis=axis)
    sizes = [d.shape[axis] for d in datas]

    def bwd(dy):
        return tuple(np.split(dy, np.cumsum(sizes)[:-1], axis=axis))

    return make_node(out, tuple(nodes), bwd)


def _pad2d(x, ph, pw):
    if ph == 0 and pw == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))


def _unpad2d(x, ph, pw):
    if ph == 0 and pw == 0:
        return x
    return x[:, :, ph:x.shape[2] - ph, pw:x.shape[3] - pw]


def conv2d(x, w, b=None, stride=1, padding=0, dilation=1, groups=1):
    """2D convolution; ``groups`` must be 1 or equal to the channel count."""
    sh = sw = stride
    ph = pw = padding
    dh = dw = dilation
    cin = x.data.shape[1]
    depthwise = groups != 1
    if depthwise and (groups != cin or w.data.shape[1] != 1):
        raise ValueError("only full (groups=1) or depthwise (groups=channels) convolutions supported")
    xp = _pad2d(x.data, ph, pw)
    if depthwise:
        wk = w.data.reshape(w.data.shape[0], w.data.shape[2], w.data.shape[3])
        out = K.depthwise2d_fwd(xp, wk, sh, sw, dh, dw)
    else:
        out = K.conv2d_fwd(xp, w.data, sh, sw, dh, dw)
    if b is not None:
        out += b.data[None, :, None, None]
    parents = (x, w) if b is None else (x, w, b)
    if not grad_enabled():
        return Node(out)
    hp, wp = xp.shape[2], xp.shape[3]

    def bwd(dy):
        dy = np.ascontiguousarray(dy)
        if depthwise:
            dxp = K.depthwise2d_bwd_x(dy, wk, hp, wp, sh, sw, dh, dw)
            dwk = K.depthwise2d_bwd_w(xp, dy, wk.shape[1], wk.shape[2], sh, sw, dh, dw)
            dw_ = dwk.reshape(w.data.shape)
        else:
            dxp = K.conv2d_bwd_x(dy, w.data, hp, wp, sh, sw, dh, dw)
            dw_ = K.conv2d_bwd_w(xp, dy, w.data.shape[2], w.data.shape[3], sh, sw, dh, dw)
        dx = _unpad2d(dxp, ph, pw)
        if b is None:
            return dx, dw_
        return dx, dw_, dy.sum(axis=(0, 2, 3))

    return Node(out, parents, bwd)


def conv_transpose2d(x, w, b=None, stride=2, padding=0, output_padding=0):
    """Transposed convolution (adjoint of conv2d); weight is (cin, cout, kh, kw)."""
    s = stride
    p = padding
    op = output_padding
    if not 0 <= op < s:
        raise ValueError("output_padding must satisfy 0 <= output_padding < stride")
    n, cin, h, ww_ = x.data.shape
    _, cout, kh, kw = w.data.shape
    out_h = (h - 1) * s - 2 * p + kh + op
    out_w = (ww_ - 1) * s - 2 * p + kw + op
    hp, wp = out_h + 2 * p, out_w + 2 * p
    ypad = K.conv2d_bwd_x(np.ascontiguousarray(x.data), w.data, hp, wp, s, s, 1, 1)
    out = np.ascontiguousarray(_unpad2d(ypad, p, p))
    if b is not None:
        out += b.data[None, :, None, None]
    parents = (x, w) if b is None else (x, w, b)
    if not grad_enabled():
        return Node(out)

    def bwd(dy):
        dyp = _pad2d(np.ascontiguousarray(dy), p, p)
        dx = K.conv2d_fwd(dyp, w.data, s, s, 1, 1)
        dw_ = K.conv2d_bwd_w(dyp, np.ascontiguousarray(x.data), kh, kw, s, s, 1, 1)
        if b is None:
            return dx, dw_
        return dx, dw_, dy.sum(axis=(0, 2, 3))

    return Node(out, parents, bwd)


def batch_norm2d(x, gamma, beta, running_mean, running_var, training,
                 momentum=0.1, eps=1e-5):
    """BatchNorm over (N, H, W) per channel.

    In training mode normalizes by batch statistics and writes updated
    running stats back into the provided buffers (in place).
    """
    xd = x.data
    if training:
        m = xd.shape[0] * xd.shape[2] * xd.shape[3]
        mu = xd.mean(axis=(0, 2, 3))
        var = xd.var(axis=(0, 2, 3))
        ivar = 1.0 / np.sqrt(var + eps)
        xhat = (xd - mu[None, :, None, None]) * ivar[None, :, None, None]
        unbiased = var * (m / (m - 1)) if m > 1 else var
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu
        running_var *= 1.0 - momentum
        running_var += momentum * unbiased
    else:
        ivar = 1.0 / np.sqrt(running_var + eps)
        xhat = (xd - running_mean[None, :, None, None]) * ivar[None, :, None, None]
    xhat = xhat.astype(xd.dtype, copy=False)
    out = gamma.data[None, :, None, None] * xhat + beta.data[None, :, None, None]
    if not grad_enabled():
        return Node(out)

    def bwd(dy):
        dgamma = np.einsum("nchw,nchw->c", dy, xhat).astype(xd.dtype, copy=False)
        dbeta = dy.sum(axis=(0, 2, 3))
        dxhat = dy * gamma.data[None, :, None, None]
        if training:
            m_ = xd.shape[0] * xd.shape[2] * xd.shape[3]
            s1 = dxhat.sum(axis=(0, 2, 3))[None, :, None, None]
            s2 = np.einsum("nchw,nchw->c", dxhat, xhat)[None, :, None, None]
            dx = (dxhat - s1 / m_ - xhat * s2 / m_) * ivar[None, :, None, None]
            dx = dx.astype(xd.dtype, copy=False)
        else:
            dx = dxhat * ivar[None, :, None, None]
            dx = dx.astype(xd.dtype, copy=False)
        return dx, dgamma, dbeta

    return Node(out, (x, gamma, beta), bwd)


def max_pool2d(x, kernel=2, stride=None, padding=0):
    """Max pooling; returns (pooled Node, argmax index array for unpooling)."""
    stride = stride or kernel
    y, idx = K.maxpool2d_fwd(np.ascontiguousarray(x.data), kernel, kernel,
                             stride, stride, padding, padding)
    h, w = x.data.shape[2], x.data.shape[3]

    def bwd(dy):
        return (K.maxpool2d_bwd(np.ascontiguousarray(dy), idx, h, w),)

    return make_node(y, (x,), bwd), idx


def max_unpool2d(x, idx, out_hw):
    """Scatter pooled values back to ``out_hw`` at their argmax positions."""
    h, w = out_hw
    y = K.maxunpool2d_fwd(np.ascontiguousarray(x.data), idx, h, w)

    def bwd(dy):
        return (K.maxunpool2d_bwd(np.ascontiguousarray(dy), idx),)

    return make_node(y, (x,), bwd)


def upsample_bilinear(x, out_hw):
    oh, ow = out_hw
    if (oh, ow) == x.data.shape[2:]:
        return x
    y = K.bilinear_fwd(np.ascontiguousarray(x.data), oh, ow)
    h, w = x.data.shape[2], x.data.shape[3]

    def bwd(dy):
        return (K.bilinear_bwd(np.ascontiguousarray(dy), h, w),)

    return make_node(y, (x,), bwd)


def upsample_nearest(x, out_hw):
    oh, ow = out_hw
    if (oh, ow) == x.data.shape[2:]:
        return x
    y = K.nearest_fwd(np.ascontiguousarray(x.data), oh, ow)
    h, w = x.data.shape[2], x.data.shape[3]

    def bwd(dy):
        return (K.nearest_bwd(np.ascontiguousarray(dy), h, w),)

    return make_node(y, (x,), bwd)


def global_avg_pool(x):
    h, w = x.data.shape[2], x.data.shape[3]
    out = x.data.mean(axis=(2, 3), keepdims=True)

    def bwd(dy):
        g = np.broadcast_to(dy / (h * w), x.data.shape)
        return (np.ascontiguousarray(g),)

    return make_node(out, (x,), bwd)


def _adaptive_edges(in_size, out_size):
    starts = (np.arange(out_size) * in_size) // out_size
    ends = -(-(np.arange(1, out_size + 1) * in_size) // out_size)  # ceil
    return starts, ends


def adaptive_avg_pool2d(x, out_hw):
    """Average pooling to a fixed output grid (bin edges floor/ceil split)."""
    oh, ow = out_hw
    n, c, h, w = x.data.shape
    hs, he = _adaptive_edges(h, oh)
    ws, we = _adaptive_edges(w, ow)
    out = np.empty((n, c, oh, ow), dtype=x.data.dtype)
    for i in range(oh):
        for j in range(ow):
            out[:, :, i, j] = x.data[:, :, hs[i]:he[i], ws[j]:we[j]].mean(axis=(2, 3))

    def bwd(dy):
        dx = np.zeros_like(x.data)
        for i in range(oh):
            for j in range(ow):
                area = (he[i] - hs[i]) * (we[j] - ws[j])
                dx[:, :, hs[i]:he[i], ws[j]:we[j]] += (dy[:, :, i, j] / area)[:, :, None, None]
        return (dx,)

    return make_node(out, (x,), bwd)


def softmax_cross_entropy_masked(logits, labels, ignore_value=255):
    """Mean per-pixel cross-entropy over non-ignored pixels.

    Returns (loss Node with float64 scalar data, valid_pixel_count). The loss
    is the *sum* over valid pixels divided by their count; with zero valid
    pixels the loss is 0 and no gradient flows.
    """
    z = logits.data
    n, k, h, w = z.shape
    valid = labels != ignore_value
    count = int(valid.sum())
    z64 = z.astype(np.float64)
    zmax = z64.max(axis=1, keepdims=True)
    ez = np.exp(z64 - zmax)
    sez = ez.sum(axis=1, keepdims=True)
    logp = z64 - zmax - np.log(sez)
    safe_labels = np.where(valid, labels, 0).astype(np.int64)
    picked = np.take_along_axis(logp, safe_labels[:, None], axis=1)[:, 0]
    total = -(picked * valid).sum()
    loss = total / count if count else 0.0

    def bwd(dy):
        if count == 0:
            return (np.zeros_like(z),)
        prob = ez / sez
        onehot_rows = np.zeros_like(prob)
        np.put_along_axis(onehot_rows, safe_labels[:, None], 1.0, axis=1)
        g = (prob - onehot_rows) * valid[:, None] / count
        return ((g * float(dy)).astype(z.dtype),)

    return make_node(np.float64(loss), (logits,), bwd), count
