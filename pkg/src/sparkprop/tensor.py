"""Dense tensors with reverse-mode automatic differentiation on numpy arrays.

Conventions: video-shaped activations are (T, C, H, W) with time in the
leading axis. f32 is the training precision; f64 is supported end to end
for finite-difference oracles. Gradients are only recorded while grad mode
is enabled (see `no_grad`).
"""

from __future__ import annotations

import contextlib
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

_FLOAT_DTYPES = (np.float32, np.float64)

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference / data prep)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


class Tensor:
    """A numpy-backed value in the autodiff graph.

    `_parents` and `_backward` record the producing primitive; leaves have
    neither. `grad`, when present, always shape-matches `data`.
    """

    __slots__ = ("data", "grad", "requires_grad", "_backward", "_parents", "op")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(np.float32)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._backward: Callable[[np.ndarray], None] | None = None
        self._parents: tuple[Tensor, ...] = ()
        self.op = "leaf"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self):
        self.grad = None

    def item(self) -> float:
        return float(self.data)

    def backward(self):
        backward(self)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, op={self.op})"

    # Operator sugar for the common arithmetic.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_coerce(other, self), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def _coerce(x, like: Tensor) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=like.data.dtype))


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward_fn, op: str) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.op = op
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    else:
        out.requires_grad = False
        out._parents = ()
        out._backward = None
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape` (inverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.data.shape, b.data.shape)
    except ValueError:
        raise ValueError(f"{op}: shape mismatch {a.data.shape} vs {b.data.shape}") from None


def topo_order(root: Tensor) -> list[Tensor]:
    """Ordered record of the graph below `root`: every node's inputs precede it."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor):
    """Populate `.grad` on every tensor reachable from `loss` that requires grad."""
    if loss.data.size != 1:
        raise ValueError(f"backward: loss must be scalar, got shape {loss.data.shape}")
    order = topo_order(loss)
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is None or node.grad is None:
            continue
        node._backward(node.grad)


def _accum(t: Tensor, g: np.ndarray):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = g.astype(t.data.dtype, copy=True)
    else:
        t.grad += g


# ---------------------------------------------------------------------------
# elementwise and reduction primitives


def add(a: Tensor, b) -> Tensor:
    a = a if isinstance(a, Tensor) else _coerce(a, b)
    b = _coerce(b, a)
    _check_broadcast(a, b, "add")

    def back(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return _make(a.data + b.data, (a, b), back, "add")


def sub(a: Tensor, b) -> Tensor:
    a = a if isinstance(a, Tensor) else _coerce(a, b)
    b = _coerce(b, a)
    _check_broadcast(a, b, "sub")

    def back(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(-g, b.data.shape))

    return _make(a.data - b.data, (a, b), back, "sub")


def mul(a: Tensor, b) -> Tensor:
    a = a if isinstance(a, Tensor) else _coerce(a, b)
    b = _coerce(b, a)
    _check_broadcast(a, b, "mul")
    ad, bd = a.data, b.data

    def back(g):
        _accum(a, _unbroadcast(g * bd, a.data.shape))
        _accum(b, _unbroadcast(g * ad, b.data.shape))

    return _make(ad * bd, (a, b), back, "mul")


def div(a: Tensor, b) -> Tensor:
    a = a if isinstance(a, Tensor) else _coerce(a, b)
    b = _coerce(b, a)
    _check_broadcast(a, b, "div")
    ad, bd = a.data, b.data

    def back(g):
        _accum(a, _unbroadcast(g / bd, a.data.shape))
        _accum(b, _unbroadcast(-g * ad / (bd * bd), b.data.shape))

    return _make(ad / bd, (a, b), back, "div")


def sq_diff(a: Tensor, b: Tensor) -> Tensor:
    """(a - b)**2 elementwise."""
    b = _coerce(b, a)
    _check_broadcast(a, b, "sq_diff")
    d = a.data - b.data

    def back(g):
        t = 2.0 * d * g
        _accum(a, _unbroadcast(t, a.data.shape))
        _accum(b, _unbroadcast(-t, b.data.shape))

    return _make(d * d, (a, b), back, "sq_diff")


def silu(x: Tensor) -> Tensor:
    xd = x.data
    sig = expit(xd)

    def back(g):
        _accum(x, g * (sig * (1.0 + xd * (1.0 - sig))))

    return _make(xd * sig, (x,), back, "silu")


def leaky_relu(x: Tensor, slope: float = 0.01) -> Tensor:
    xd = x.data
    mask = xd > 0

    def back(g):
        _accum(x, g * np.where(mask, 1.0, slope).astype(xd.dtype))

    return _make(np.where(mask, xd, slope * xd), (x,), back, "leaky_relu")


def _axes_tuple(axes, ndim):
    if axes is None:
        return tuple(range(ndim))
    if isinstance(axes, int):
        return (axes,)
    return tuple(axes)


def tsum(x: Tensor, axes=None, keepdims: bool = False) -> Tensor:
    ax = _axes_tuple(axes, x.data.ndim)
    out = x.data.sum(axis=ax, keepdims=keepdims)

    def back(g):
        gg = g
        if not keepdims:
            gg = np.expand_dims(gg, ax)
        _accum(x, np.broadcast_to(gg, x.data.shape))

    return _make(np.asarray(out, dtype=x.data.dtype), (x,), back, "sum")


def tmean(x: Tensor, axes=None, keepdims: bool = False) -> Tensor:
    ax = _axes_tuple(axes, x.data.ndim)
    n = int(np.prod([x.data.shape[i] for i in ax])) if ax else 1
    out = x.data.mean(axis=ax, keepdims=keepdims)

    def back(g):
        gg = g
        if not keepdims:
            gg = np.expand_dims(gg, ax)
        _accum(x, np.broadcast_to(gg, x.data.shape) / n)

    return _make(np.asarray(out, dtype=x.data.dtype), (x,), back, "mean")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ValueError(f"matmul: shape mismatch {a.data.shape} vs {b.data.shape}")
    ad, bd = a.data, b.data

    def back(g):
        _accum(a, g @ bd.T)
        _accum(b, ad.T @ g)

    return _make(ad @ bd, (a, b), back, "matmul")


# ---------------------------------------------------------------------------
# shape and layout primitives


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != b.data.ndim or a.data.ndim < 2:
        raise ValueError(f"concat_channels: shape mismatch {a.data.shape} vs {b.data.shape}")
    if a.data.shape[0] != b.data.shape[0] or a.data.shape[2:] != b.data.shape[2:]:
        raise ValueError(f"concat_channels: shape mismatch {a.data.shape} vs {b.data.shape}")
    ca = a.data.shape[1]

    def back(g):
        _accum(a, g[:, :ca])
        _accum(b, g[:, ca:])

    return _make(np.concatenate([a.data, b.data], axis=1), (a, b), back, "concat_channels")


def narrow(x: Tensor, axis: int, start: int, length: int) -> Tensor:
    """Slice `length` entries from `start` along `axis`."""
    n = x.data.shape[axis]
    if start < 0 or length < 0 or start + length > n:
        raise ValueError(f"slice: [{start}:{start + length}] out of range for axis {axis} of {x.data.shape}")
    idx = tuple(slice(None) if i != axis else slice(start, start + length) for i in range(x.data.ndim))

    def back(g):
        if x.requires_grad:
            full = np.zeros_like(x.data)
            full[idx] = g
            _accum(x, full)

    return _make(np.ascontiguousarray(x.data[idx]), (x,), back, "slice")


def pad(x: Tensor, widths: Sequence[tuple[int, int]]) -> Tensor:
    """Zero-pad; `widths` gives (before, after) per axis."""
    widths = tuple((int(b), int(a)) for b, a in widths)
    if len(widths) != x.data.ndim:
        raise ValueError(f"pad: need {x.data.ndim} width pairs, got {len(widths)}")
    crop = tuple(slice(b, b + n) for (b, _), n in zip(widths, x.data.shape))

    def back(g):
        _accum(x, g[crop])

    return _make(np.pad(x.data, widths), (x,), back, "pad")


def upsample_nearest(x: Tensor, k: int) -> Tensor:
    """Repeat each spatial pixel k x k.  x is (..., H, W)."""
    out = x.data.repeat(k, axis=-2).repeat(k, axis=-1)

    def back(g):
        gs = g.reshape(g.shape[:-2] + (x.data.shape[-2], k, x.data.shape[-1], k))
        _accum(x, gs.sum(axis=(-3, -1)))

    return _make(out, (x,), back, "upsample_nearest")


def downsample_stride(x: Tensor, k: int) -> Tensor:
    """Keep every k-th spatial sample.  x is (..., H, W)."""
    out = np.ascontiguousarray(x.data[..., ::k, ::k])

    def back(g):
        if x.requires_grad:
            full = np.zeros_like(x.data)
            full[..., ::k, ::k] = g
            _accum(x, full)

    return _make(out, (x,), back, "downsample_stride")


def space_to_depth(x: Tensor, k: int) -> Tensor:
    """(T, C, H, W) -> (T, C*k*k, H/k, W/k), channel layout [c, ki, kj]."""
    t, c, h, w = x.data.shape
    if h % k or w % k:
        raise ValueError(f"space_to_depth: spatial {h}x{w} not divisible by {k}")
    out = (
        x.data.reshape(t, c, h // k, k, w // k, k)
        .transpose(0, 1, 3, 5, 2, 4)
        .reshape(t, c * k * k, h // k, w // k)
    )

    def back(g):
        gg = (
            g.reshape(t, c, k, k, h // k, w // k)
            .transpose(0, 1, 4, 2, 5, 3)
            .reshape(t, c, h, w)
        )
        _accum(x, np.ascontiguousarray(gg))

    return _make(np.ascontiguousarray(out), (x,), back, "space_to_depth")


def depth_to_space(x: Tensor, k: int) -> Tensor:
    """Inverse of space_to_depth."""
    t, ck, hh, ww = x.data.shape
    if ck % (k * k):
        raise ValueError(f"depth_to_space: {ck} channels not divisible by {k * k}")
    c = ck // (k * k)
    out = (
        x.data.reshape(t, c, k, k, hh, ww)
        .transpose(0, 1, 4, 2, 5, 3)
        .reshape(t, c, hh * k, ww * k)
    )

    def back(g):
        gg = (
            g.reshape(t, c, hh, k, ww, k)
            .transpose(0, 1, 3, 5, 2, 4)
            .reshape(t, ck, hh, ww)
        )
        _accum(x, np.ascontiguousarray(gg))

    return _make(np.ascontiguousarray(out), (x,), back, "depth_to_space")


def video_to_groups(x: Tensor, ft: int = 4) -> Tensor:
    """(T, C, H, W) -> (L, C*ft, H, W) with L = 1 + (T-1)/ft.

    Group 0 holds frame 0 replicated ft times; group l >= 1 holds frames
    [ft*(l-1)+1 .. ft*l].  Exactly invertible by groups_to_video.
    """
    t, c, h, w = x.data.shape
    if (t - 1) % ft:
        raise ValueError(f"video_to_groups: need (T-1) divisible by {ft}, got T={t}")
    L = 1 + (t - 1) // ft
    out = np.empty((L, c * ft, h, w), dtype=x.data.dtype)
    out[0] = np.tile(x.data[0], (ft, 1, 1))
    if L > 1:
        out[1:] = x.data[1:].reshape(L - 1, ft * c, h, w)

    def back(g):
        gx = np.empty_like(x.data)
        gx[0] = g[0].reshape(ft, c, h, w).sum(axis=0)
        if L > 1:
            gx[1:] = g[1:].reshape((L - 1) * ft, c, h, w)
        _accum(x, gx)

    return _make(out, (x,), back, "video_to_groups")


def groups_to_video(z: Tensor, ft: int = 4) -> Tensor:
    """Inverse of video_to_groups: group 0 contributes its first replica only."""
    L, cft, h, w = z.data.shape
    if cft % ft:
        raise ValueError(f"groups_to_video: {cft} channels not divisible by {ft}")
    c = cft // ft
    t = 1 + (L - 1) * ft
    out = np.empty((t, c, h, w), dtype=z.data.dtype)
    out[0] = z.data[0, :c]
    if L > 1:
        out[1:] = z.data[1:].reshape((L - 1) * ft, c, h, w)

    def back(g):
        gz = np.zeros_like(z.data)
        gz[0, :c] = g[0]
        if L > 1:
            gz[1:] = g[1:].reshape(L - 1, ft * c, h, w)
        _accum(z, gz)

    return _make(out, (z,), back, "groups_to_video")


# ---------------------------------------------------------------------------
# convolutions


def _win2d(xp: np.ndarray, kh: int, kw: int, sh: int, sw: int) -> np.ndarray:
    n, c, hp, wp = xp.shape
    ho = (hp - kh) // sh + 1
    wo = (wp - kw) // sw + 1
    sn, sc, sy, sx = xp.strides
    return np.lib.stride_tricks.as_strided(
        xp,
        shape=(n, ho, wo, c, kh, kw),
        strides=(sn, sy * sh, sx * sw, sc, sy, sx),
        writeable=False,
    )


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1, padding: int | None = None) -> Tensor:
    """x: (N, C, H, W), w: (O, C, kh, kw).  padding defaults to 'same' for stride 1."""
    if x.data.ndim != 4 or w.data.ndim != 4:
        raise ValueError(f"conv2d: need 4-d input and kernel, got {x.data.shape} and {w.data.shape}")
    n, c, h, wi = x.data.shape
    o, cw, kh, kw = w.data.shape
    if c != cw:
        raise ValueError(f"conv2d: shape mismatch input {x.data.shape} vs kernel {w.data.shape}")
    p = (kh - 1) // 2 if padding is None else padding
    xp = np.pad(x.data, ((0, 0), (0, 0), (p, p), (p, p)))
    win = _win2d(xp, kh, kw, stride, stride)
    _, ho, wo, _, _, _ = win.shape
    cols = win.reshape(n * ho * wo, c * kh * kw)
    wmat = w.data.reshape(o, -1)
    out = (cols @ wmat.T).reshape(n, ho, wo, o).transpose(0, 3, 1, 2)
    if b is not None:
        out = out + b.data.reshape(1, o, 1, 1)
    parents = (x, w) if b is None else (x, w, b)

    def back(g):
        gflat = g.transpose(0, 2, 3, 1).reshape(n * ho * wo, o)
        if w.requires_grad:
            _accum(w, (gflat.T @ cols).reshape(w.data.shape))
        if b is not None and b.requires_grad:
            _accum(b, g.sum(axis=(0, 2, 3)))
        if x.requires_grad:
            dcols = (gflat @ wmat).reshape(n, ho, wo, c, kh, kw)
            dcols = np.ascontiguousarray(dcols.transpose(4, 5, 0, 3, 1, 2))  # (kh,kw,N,C,Ho,Wo)
            dxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    dxp[:, :, i : i + ho * stride : stride, j : j + wo * stride : stride] += dcols[i, j]
            _accum(x, dxp[:, :, p : p + h, p : p + wi] if p else dxp)

    return _make(np.ascontiguousarray(out), parents, back, "conv2d")


def conv3d_causal(
    x: Tensor,
    w: Tensor,
    b: Tensor | None = None,
    stride: tuple[int, int, int] = (1, 1, 1),
) -> Tensor:
    """Causal spatiotemporal convolution.

    x: (T, C, H, W), w: (O, C, kt, kh, kw).  Time is padded on the past side
    only (kt - 1 leading zeros), so output step l sees input frames <= l*st;
    with temporal stride st this yields L = 1 + (T-1)//st steps.  Spatial
    padding is 'same' for unit spatial stride.
    """
    if x.data.ndim != 4 or w.data.ndim != 5:
        raise ValueError(f"conv3d_causal: need 4-d input and 5-d kernel, got {x.data.shape} and {w.data.shape}")
    t, c, h, wi = x.data.shape
    o, cw, kt, kh, kw = w.data.shape
    if c != cw:
        raise ValueError(f"conv3d_causal: shape mismatch input {x.data.shape} vs kernel {w.data.shape}")
    st, sh, sw = stride
    ph, pw = (kh - 1) // 2, (kw - 1) // 2
    tp = kt - 1
    xp = np.pad(x.data, ((tp, 0), (0, 0), (ph, ph), (pw, pw)))
    tpad, _, hp, wp = xp.shape
    L = (tpad - kt) // st + 1
    ho = (hp - kh) // sh + 1
    wo = (wp - kw) // sw + 1
    sT, sC, sH, sW = xp.strides
    win = np.lib.stride_tricks.as_strided(
        xp,
        shape=(L, ho, wo, c, kt, kh, kw),
        strides=(sT * st, sH * sh, sW * sw, sC, sT, sH, sW),
        writeable=False,
    )
    cols = win.reshape(L * ho * wo, c * kt * kh * kw)
    wmat = w.data.reshape(o, -1)
    out = (cols @ wmat.T).reshape(L, ho, wo, o).transpose(0, 3, 1, 2)
    if b is not None:
        out = out + b.data.reshape(1, o, 1, 1)
    parents = (x, w) if b is None else (x, w, b)

    def back(g):
        gflat = g.transpose(0, 2, 3, 1).reshape(L * ho * wo, o)
        if w.requires_grad:
            _accum(w, (gflat.T @ cols).reshape(w.data.shape))
        if b is not None and b.requires_grad:
            _accum(b, g.sum(axis=(0, 2, 3)))
        if x.requires_grad:
            dcols = (gflat @ wmat).reshape(L, ho, wo, c, kt, kh, kw)
            dcols = np.ascontiguousarray(dcols.transpose(4, 5, 6, 0, 3, 1, 2))  # (kt,kh,kw,L,C,Ho,Wo)
            dxp = np.zeros_like(xp)
            for it in range(kt):
                for i in range(kh):
                    for j in range(kw):
                        dxp[
                            it : it + L * st : st,
                            :,
                            i : i + ho * sh : sh,
                            j : j + wo * sw : sw,
                        ] += dcols[it, i, j]
            _accum(x, dxp[tp : tp + t, :, ph : ph + h, pw : pw + wi])

    return _make(np.ascontiguousarray(out), parents, back, "conv3d_causal")


def group_norm(x: Tensor, gamma: Tensor, beta: Tensor, groups: int, eps: float = 1e-5) -> Tensor:
    """Normalize per (time step, channel group) over (C/G, H, W).

    Statistics never cross the time axis, so causality of the surrounding
    network is preserved exactly.
    """
    t, c, h, w = x.data.shape
    if c % groups:
        raise ValueError(f"group_norm: {c} channels not divisible by {groups} groups")
    if gamma.data.shape != (c,) or beta.data.shape != (c,):
        raise ValueError(f"group_norm: affine shape {gamma.data.shape} vs channels {c}")
    xr = x.data.reshape(t, groups, -1)
    mu = xr.mean(axis=2, keepdims=True)
    var = xr.var(axis=2, keepdims=True)
    invstd = 1.0 / np.sqrt(var + eps)
    xhat = ((xr - mu) * invstd).reshape(t, c, h, w)
    out = xhat * gamma.data.reshape(1, c, 1, 1) + beta.data.reshape(1, c, 1, 1)
    n = xr.shape[2]

    def back(g):
        if gamma.requires_grad:
            _accum(gamma, (g * xhat).sum(axis=(0, 2, 3)))
        if beta.requires_grad:
            _accum(beta, g.sum(axis=(0, 2, 3)))
        if x.requires_grad:
            dxh = (g * gamma.data.reshape(1, c, 1, 1)).reshape(t, groups, -1)
            xh = xhat.reshape(t, groups, -1)
            s1 = dxh.sum(axis=2, keepdims=True)
            s2 = (dxh * xh).sum(axis=2, keepdims=True)
            dx = (dxh - s1 / n - xh * s2 / n) * invstd
            _accum(x, dx.reshape(t, c, h, w))

    return _make(out, (x, gamma, beta), back, "group_norm")


# ---------------------------------------------------------------------------
# primitive registry, initializers, gradient checking

OP_TAGS = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "div": div,
    "matmul": matmul,
    "conv2d": conv2d,
    "conv3d_causal": conv3d_causal,
    "silu": silu,
    "leaky_relu": leaky_relu,
    "group_norm": group_norm,
    "mean": tmean,
    "sum": tsum,
    "sq_diff": sq_diff,
    "concat_channels": concat_channels,
    "slice": narrow,
    "pad": pad,
    "upsample_nearest": upsample_nearest,
    "downsample_stride": downsample_stride,
    "space_to_depth": space_to_depth,
    "depth_to_space": depth_to_space,
    "video_to_groups": video_to_groups,
    "groups_to_video": groups_to_video,
}


def primitive_forward(op_tag: str, inputs: Sequence[Tensor], attrs: dict | None = None) -> Tensor:
    """Apply a primitive by tag.  Unknown tags and bad shapes are rejected."""
    fn = OP_TAGS.get(op_tag)
    if fn is None:
        raise ValueError(f"unknown op_tag {op_tag!r}")
    return fn(*inputs, **(attrs or {}))


def he_normal(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, dtype=np.float32) -> Tensor:
    scale = np.sqrt(2.0 / fan_in)
    return Tensor((rng.standard_normal(shape) * scale).astype(dtype), requires_grad=True)


def zeros_param(shape: tuple[int, ...], dtype=np.float32) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=True)


def ones_param(shape: tuple[int, ...], dtype=np.float32) -> Tensor:
    return Tensor(np.ones(shape, dtype=dtype), requires_grad=True)


def grad_check(function: Callable[[list[Tensor]], Tensor], point: Sequence[np.ndarray], eps: float) -> float:
    """Max relative error between analytic and central-difference gradients.

    `function` maps a list of leaf Tensors to a scalar Tensor.  The analytic
    gradient runs in the point's own dtype; the finite-difference side is
    evaluated on f64 copies so the oracle is not limited by f32 rounding.
    Relative error per coordinate is |analytic - fd| / max(|analytic|,
    |fd|, 1e-8); the caller asserts a threshold.
    """
    if eps <= 0:
        raise ValueError("grad_check: eps must be positive")
    leaves = [Tensor(np.array(p, copy=True), requires_grad=True) for p in point]
    out = function(leaves)
    backward(out)
    analytic = [
        leaf.grad.copy() if leaf.grad is not None else np.zeros_like(leaf.data) for leaf in leaves
    ]

    oracle = [Tensor(leaf.data.astype(np.float64)) for leaf in leaves]
    worst = 0.0
    for li in range(len(oracle)):
        flat = oracle[li].data.reshape(-1)
        fd = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            with no_grad():
                fp = float(function(oracle).data)
            flat[i] = orig - eps
            with no_grad():
                fm = float(function(oracle).data)
            flat[i] = orig
            fd[i] = (fp - fm) / (2.0 * eps)
        a = analytic[li].reshape(-1).astype(np.float64)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(fd)), 1e-8)
        worst = max(worst, float(np.max(np.abs(a - fd) / denom)))
    return worst
