"""Adam and the reduce-on-plateau learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor


class Adam:
    """Standard Adam over a name -> Tensor parameter mapping.

    Updates iterate parameters in sorted name order, so two runs with
    identical gradients produce bitwise-identical parameters.
    """

    def __init__(self, params: dict[str, Tensor], lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(t.data) for k, t in params.items()}
        self.v = {k: np.zeros_like(t.data) for k, t in params.items()}

    def zero_grad(self):
        for t in self.params.values():
            t.grad = None

    def step(self):
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for name in sorted(self.params):
            p = self.params[name]
            if p.grad is None:
                continue
            g = p.grad
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * (g * g)
            m_hat = self.m[name] / bc1
            v_hat = self.v[name] / bc2
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for name in sorted(self.params):
            out[f"adam_m/{name}"] = self.m[name]
            out[f"adam_v/{name}"] = self.v[name]
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray], step_count: int):
        for name in self.params:
            self.m[name] = arrays[f"adam_m/{name}"]
            self.v[name] = arrays[f"adam_v/{name}"]
        self.step_count = step_count


@dataclass
class PlateauSchedule:
    """Halve the learning rate when validation loss stops improving.

    After ``patience`` consecutive epochs without improvement the rate is
    multiplied by ``factor``. ``should_stop`` turns true once the rate falls
    below ``stop_lr``, but never before ``min_epochs`` epochs have run.
    """

    factor: float = 0.5
    patience: int = 10
    stop_lr: float = 1e-6
    min_epochs: int = 100
    best: float = field(default=float("inf"), init=False)
    bad_epochs: int = field(default=0, init=False)
    epochs_seen: int = field(default=0, init=False)

    def step(self, optimizer: Adam, val_loss: float) -> tuple[float, bool]:
        """Record one epoch's validation loss; returns (lr, should_stop)."""
        self.epochs_seen += 1
        if val_loss < self.best:
            self.best = val_loss
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
            if self.bad_epochs >= self.patience:
                optimizer.lr *= self.factor
                self.bad_epochs = 0
        stop = optimizer.lr < self.stop_lr and self.epochs_seen >= self.min_epochs
        return optimizer.lr, stop
