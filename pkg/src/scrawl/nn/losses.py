"""Task losses with hand-derived gradients.

Both losses average over an explicit boolean mask, so training can target the
known entries while validation reads the complementary set.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, _node


def masked_mse(pred: Tensor, target: np.ndarray, mask: np.ndarray) -> Tensor:
    """Mean squared error over the rows selected by ``mask``."""
    target = np.asarray(target, dtype=pred.data.dtype).reshape(pred.data.shape)
    m = np.asarray(mask, dtype=bool).reshape(pred.data.shape)
    count = int(m.sum())
    if count == 0:
        raise ValueError("masked_mse over an empty mask")
    diff = np.where(m, pred.data - target, 0.0)
    out_data = np.asarray((diff * diff).sum() / count)

    def backward(grad):
        if pred.requires_grad or pred._parents:
            pred._ensure_grad()
            pred.grad += grad * (2.0 / count) * diff

    return _node(out_data, (pred,), backward)


def softmax_cross_entropy(
    logits: Tensor, labels: np.ndarray, mask: np.ndarray
) -> Tensor:
    """Mean cross entropy between softmaxed logits and integer labels."""
    labels = np.asarray(labels, dtype=np.int64)
    m = np.asarray(mask, dtype=bool)
    count = int(m.sum())
    if count == 0:
        raise ValueError("softmax_cross_entropy over an empty mask")
    z = logits.data
    z_shift = z - z.max(axis=1, keepdims=True)
    exp = np.exp(z_shift)
    softmax = exp / exp.sum(axis=1, keepdims=True)
    log_probs = z_shift - np.log(exp.sum(axis=1, keepdims=True))
    picked = log_probs[np.arange(len(labels)), labels]
    out_data = np.asarray(-picked[m].sum() / count)

    def backward(grad):
        if logits.requires_grad or logits._parents:
            logits._ensure_grad()
            g = softmax.copy()
            g[np.arange(len(labels)), labels] -= 1.0
            g[~m] = 0.0
            logits.grad += grad * g / count

    return _node(out_data, (logits,), backward)
