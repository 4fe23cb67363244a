"""Convolution stacks and multilayer perceptrons as shape specs plus apply functions.

Parameters live in a flat name -> Tensor mapping owned by the caller; the
helpers here declare shapes, initialize values, and run the forward graph.
Weights use fan-in-scaled uniform initialization, biases start at zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, conv1d, matmul, relu


@dataclass(frozen=True)
class ConvStack:
    """Ordered 1D convolution layers with relu between (not after) them.

    ``layers`` holds (kernel_width, in_channels, out_channels) triples.
    """

    layers: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        for (width, _, _) in self.layers:
            if width < 1:
                raise ValueError("kernel width must be at least 1")
        for (_, _, out_prev), (_, in_next, _) in zip(self.layers, self.layers[1:]):
            if out_prev != in_next:
                raise ValueError("conv stack channel widths do not chain")

    @property
    def receptive_field(self) -> int:
        return 1 + sum(width - 1 for width, _, _ in self.layers)


def widths_for_window(window: int) -> tuple[int, int]:
    """Two kernel widths whose receptive field is window + 1."""
    return (window // 2 + 1, window - window // 2 + 1)


def conv_stack_for(
    window: int, in_channels: int, hidden: int, kernel_widths=None
) -> ConvStack:
    """Default two-layer stack; receptive field window + 1 unless overridden."""
    widths = tuple(kernel_widths) if kernel_widths else widths_for_window(window)
    layers = []
    d_in = in_channels
    for width in widths:
        layers.append((width, d_in, hidden))
        d_in = hidden
    return ConvStack(tuple(layers))


def apply_conv_stack(x: Tensor, stack: ConvStack, weights) -> Tensor:
    """Run the stack; ``weights`` pairs one (kernel, bias) per layer."""
    out = x
    for i, ((w, b), _) in enumerate(zip(weights, stack.layers)):
        if i > 0:
            out = relu(out)
        out = conv1d(out, w, b)
    return out


@dataclass(frozen=True)
class Mlp:
    """Dense layers with relu between them; the final layer stays linear."""

    widths: tuple[int, ...]  # (d_in, ..., d_out)

    def __post_init__(self):
        if len(self.widths) < 2:
            raise ValueError("an MLP needs at least input and output widths")

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        return list(zip(self.widths[:-1], self.widths[1:]))


def apply_mlp(x: Tensor, mlp: Mlp, weights) -> Tensor:
    out = x
    for i, (w, b) in enumerate(weights):
        if i > 0:
            out = relu(out)
        out = matmul(out, w) + b
    return out


def init_weight(rng: np.random.Generator, shape, fan_in: int, dtype) -> Tensor:
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    data = rng.uniform(-bound, bound, size=shape).astype(dtype)
    return Tensor(data, requires_grad=True)


def init_bias(shape, dtype) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=True)


def conv_stack_params(stack: ConvStack, rng, dtype) -> list[tuple[Tensor, Tensor]]:
    out = []
    for width, d_in, d_out in stack.layers:
        w = init_weight(rng, (width, d_in, d_out), fan_in=width * d_in, dtype=dtype)
        out.append((w, init_bias((d_out,), dtype)))
    return out


def mlp_params(mlp: Mlp, rng, dtype) -> list[tuple[Tensor, Tensor]]:
    out = []
    for d_in, d_out in mlp.layer_shapes:
        w = init_weight(rng, (d_in, d_out), fan_in=d_in, dtype=dtype)
        out.append((w, init_bias((d_out,), dtype)))
    return out
