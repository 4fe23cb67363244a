"""Minimal reverse-mode automatic differentiation over numpy arrays.

The operation set is exactly what the walk-based models need: elementwise
arithmetic, dense matmul, unpadded 1D convolution over walk steps, rectified
linear units, row gathers keyed by index arrays, concatenation, and segment
pooling. Gradients accumulate in a fixed traversal order, so repeated runs of
the same graph are bitwise identical.
"""

from __future__ import annotations

import numpy as np

from ..errors import GraphNotRecorded, WalkTooShort


class Tensor:
    """Array node in a dynamically recorded compute graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, parents=(), backward=None):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def _ensure_grad(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)

    def backward(self):
        """Reverse sweep from a scalar, filling ``grad`` on every node."""
        if self.data.size != 1:
            raise ValueError("backward requires a scalar loss")
        if self._backward is None and not self._parents:
            raise GraphNotRecorded("no forward graph recorded for this tensor")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                stack.append((parent, False))
        self._ensure_grad()
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None:
                node._backward(node.grad)

    # -- operator sugar ------------------------------------------------------

    def __add__(self, other):
        return add(self, _as_tensor(other, self.dtype))

    def __sub__(self, other):
        return add(self, scale(_as_tensor(other, self.dtype), -1.0))

    def __mul__(self, other):
        return mul(self, _as_tensor(other, self.dtype))

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        flag = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{flag})"


def _as_tensor(x, dtype) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def parameter(data, dtype=np.float64) -> Tensor:
    return Tensor(np.array(data, dtype=dtype), requires_grad=True)


def constant(data, dtype=None) -> Tensor:
    return Tensor(np.asarray(data, dtype=dtype))


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _node(data, parents, backward) -> Tensor:
    tracked = any(p.requires_grad or p._parents for p in parents)
    if not tracked:
        return Tensor(data)
    return Tensor(data, parents=tuple(parents), backward=backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data + b.data

    def backward(grad):
        if a.requires_grad or a._parents:
            a._ensure_grad()
            a.grad += _unbroadcast(grad, a.data.shape)
        if b.requires_grad or b._parents:
            b._ensure_grad()
            b.grad += _unbroadcast(grad, b.data.shape)

    return _node(out_data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data * b.data

    def backward(grad):
        if a.requires_grad or a._parents:
            a._ensure_grad()
            a.grad += _unbroadcast(grad * b.data, a.data.shape)
        if b.requires_grad or b._parents:
            b._ensure_grad()
            b.grad += _unbroadcast(grad * a.data, b.data.shape)

    return _node(out_data, (a, b), backward)


def scale(a: Tensor, c: float) -> Tensor:
    out_data = a.data * c

    def backward(grad):
        if a.requires_grad or a._parents:
            a._ensure_grad()
            a.grad += grad * c

    return _node(out_data, (a,), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    out_data = a.data @ b.data

    def backward(grad):
        if a.requires_grad or a._parents:
            a._ensure_grad()
            a.grad += grad @ b.data.swapaxes(-1, -2)
        if b.requires_grad or b._parents:
            b._ensure_grad()
            b.grad += _unbroadcast(a.data.swapaxes(-1, -2) @ grad, b.data.shape)

    return _node(out_data, (a, b), backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    out_data = x.data * mask

    def backward(grad):
        if x.requires_grad or x._parents:
            x._ensure_grad()
            x.grad += grad * mask

    return _node(out_data, (x,), backward)


def reshape(x: Tensor, shape) -> Tensor:
    out_data = x.data.reshape(shape)

    def backward(grad):
        if x.requires_grad or x._parents:
            x._ensure_grad()
            x.grad += grad.reshape(x.data.shape)

    return _node(out_data, (x,), backward)


def tsum(x: Tensor) -> Tensor:
    out_data = np.asarray(x.data.sum())

    def backward(grad):
        if x.requires_grad or x._parents:
            x._ensure_grad()
            x.grad += grad  # broadcasts the scalar

    return _node(out_data, (x,), backward)


def tmean(x: Tensor) -> Tensor:
    return scale(tsum(x), 1.0 / x.data.size)


def concat_last(parts: list[Tensor]) -> Tensor:
    """Concatenate along the last axis."""
    out_data = np.concatenate([p.data for p in parts], axis=-1)
    widths = [p.data.shape[-1] for p in parts]
    splits = np.cumsum(widths)[:-1]

    def backward(grad):
        pieces = np.split(grad, splits, axis=-1)
        for p, g in zip(parts, pieces):
            if p.requires_grad or p._parents:
                p._ensure_grad()
                p.grad += g

    return _node(out_data, tuple(parts), backward)


def gather_rows(h: Tensor, idx: np.ndarray) -> Tensor:
    """Row lookup ``h[idx]`` with -1 mapping to a zero row.

    ``idx`` may have any shape; the output appends the feature axis. The
    backward pass scatter-adds with ``np.add.at`` in a fixed element order.
    """
    neg = idx < 0
    safe = np.where(neg, 0, idx)
    out_data = h.data[safe]
    if neg.any():
        out_data = out_data.copy()
        out_data[neg] = 0

    def backward(grad):
        if h.requires_grad or h._parents:
            h._ensure_grad()
            g = grad
            if neg.any():
                g = grad.copy()
                g[neg] = 0
            np.add.at(h.grad, safe, g)

    return _node(out_data, (h,), backward)


def conv1d(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Unpadded stride-1 cross-correlation over the step axis.

    ``x`` is (walks, steps, in_channels); ``weight`` is (kernel, in_channels,
    out_channels); the output has steps - kernel + 1 rows per walk.
    """
    w_count, steps, d_in = x.data.shape
    kernel, d_in2, d_out = weight.data.shape
    if d_in != d_in2:
        raise ValueError(f"conv input width {d_in} != kernel width {d_in2}")
    if steps < kernel:
        raise WalkTooShort(f"{steps} steps but kernel needs {kernel}")
    out_steps = steps - kernel + 1
    # (walks, out_steps, d_in, kernel) view -> (walks * out_steps, kernel * d_in)
    windows = np.lib.stride_tricks.sliding_window_view(x.data, kernel, axis=1)
    cols = windows.transpose(0, 1, 3, 2).reshape(w_count * out_steps, kernel * d_in)
    w_mat = weight.data.reshape(kernel * d_in, d_out)
    out_data = (cols @ w_mat).reshape(w_count, out_steps, d_out) + bias.data

    def backward(grad):
        grad2 = grad.reshape(w_count * out_steps, d_out)
        if weight.requires_grad or weight._parents:
            weight._ensure_grad()
            weight.grad += (cols.T @ grad2).reshape(kernel, d_in, d_out)
        if bias.requires_grad or bias._parents:
            bias._ensure_grad()
            bias.grad += grad.sum(axis=(0, 1))
        if x.requires_grad or x._parents:
            x._ensure_grad()
            grad3 = grad2.reshape(w_count, out_steps, d_out)
            for k in range(kernel):
                x.grad[:, k : k + out_steps, :] += grad3 @ weight.data[k].T

    return _node(out_data, (x, weight, bias), backward)


def window_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-channel standardization over all leading axes, then affine.

    For walk tensors (walks, steps, channels) each channel is centered and
    scaled by the statistics of every window row in the batch, which keeps
    activation magnitudes stable through depth and across epochs. Statistics
    are always taken from the current batch; there is no running state.
    """
    axes = tuple(range(x.data.ndim - 1))
    n = int(np.prod([x.data.shape[a] for a in axes])) if axes else 1
    mu = x.data.mean(axis=axes, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=axes, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    x_hat = centered * inv
    out_data = gamma.data * x_hat + beta.data

    def backward(grad):
        if beta.requires_grad or beta._parents:
            beta._ensure_grad()
            beta.grad += _unbroadcast(grad, beta.data.shape)
        if gamma.requires_grad or gamma._parents:
            gamma._ensure_grad()
            gamma.grad += _unbroadcast(grad * x_hat, gamma.data.shape)
        if x.requires_grad or x._parents:
            x._ensure_grad()
            g = grad * gamma.data
            g_mean = g.mean(axis=axes, keepdims=True)
            gx_mean = (g * x_hat).mean(axis=axes, keepdims=True)
            x.grad += inv * (g - g_mean - x_hat * gx_mean)

    return _node(out_data, (x, gamma, beta), backward)


def segment_pool(
    rows: Tensor, segment_ids: np.ndarray, num_segments: int, mode: str = "mean"
) -> tuple[Tensor, np.ndarray]:
    """Pool rows by segment id; returns the pooled tensor and coverage counts.

    Segments that no row maps to stay zero. Mean pooling divides each segment
    by its own count.
    """
    if mode not in ("mean", "sum"):
        raise ValueError(f"unknown pooling mode {mode!r}")
    if len(segment_ids) != rows.data.shape[0]:
        raise ValueError("one segment id required per row")
    d = rows.data.shape[1]
    counts = np.bincount(segment_ids, minlength=num_segments)
    sums = np.zeros((num_segments, d), dtype=rows.data.dtype)
    np.add.at(sums, segment_ids, rows.data)
    if mode == "mean":
        denom = np.maximum(counts, 1).astype(rows.data.dtype)
        out_data = sums / denom[:, None]
    else:
        out_data = sums

    def backward(grad):
        if rows.requires_grad or rows._parents:
            rows._ensure_grad()
            if mode == "mean":
                denom = np.maximum(counts, 1).astype(rows.data.dtype)
                rows.grad += (grad / denom[:, None])[segment_ids]
            else:
                rows.grad += grad[segment_ids]

    return _node(out_data, (rows,), backward), counts
