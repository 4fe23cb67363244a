"""Layered walk-convolution models over simplicial complexes.

A model runs L layers; each layer holds one module per simplex order from 0
up to the configured top order. A module re-encodes the shared epoch walks
with the current hidden states (its own order for the visited simplex, the
orders below and above for traversed faces and cofaces), convolves the
resulting walk matrices over the step axis, pools convolution rows onto the
simplex at the center of each window, and applies an update MLP. Layer
outputs are added to the incoming states, so a module that outputs zero
leaves its order untouched.

When the complex extends one order above the modeled range, that order
enters through its encoded input features only: walks on the top modeled
order still traverse those cofaces, but no module updates them.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .complex import SimplicialComplex
from .errors import ConfigError
from .features import WalkBatch, encode_slot
from .nn import (
    Adam,
    ConvStack,
    Mlp,
    Tensor,
    apply_conv_stack,
    apply_mlp,
    concat_last,
    constant,
    conv_stack_for,
    gather_rows,
    mul,
    reshape,
    segment_pool,
)
from .nn.layers import init_bias, init_weight
from .walks import WalkConfig, WalkSet, sample_walk_set

DTYPES = {"float32": np.float32, "float64": np.float64}

# entropy tag separating the fixed validation walk stream from epoch streams
EVAL_WALK_TAG = 0x5EED_E7A1


@dataclass(frozen=True)
class ModelConfig:
    """All architecture and sampling hyperparameters.

    ``max_order`` is the highest simplex order that receives its own modules
    (None: the complex's top order). ``walks`` is the per-order walk count
    (None: one walk starting at every simplex). ``kernel_widths`` overrides
    the default two-layer convolution whose receptive field is window + 1.
    """

    max_order: int | None = None
    layers: int = 4
    window: int = 8
    walk_length: int = 50
    walks: int | None = None
    hidden: int = 32
    kernel_widths: tuple[int, ...] | None = None
    pooling: str = "mean"
    strategy: str = "connection"
    adjacency: str = "both"
    include_self: bool = True
    exclude_return: bool = False
    dtype: str = "float32"
    seed: int = 0
    head_hidden: tuple[int, ...] | None = None  # None: one hidden layer of size d

    def __post_init__(self):
        if self.layers < 0:
            raise ConfigError("layers must be non-negative")
        if self.window < 1 or self.walk_length < 1 or self.hidden < 1:
            raise ConfigError("window, walk_length, and hidden must be positive")
        if self.pooling not in ("mean", "sum"):
            raise ConfigError(f"unknown pooling {self.pooling!r}")
        if self.dtype not in DTYPES:
            raise ConfigError(f"unknown dtype {self.dtype!r}")

    def walk_config(self) -> WalkConfig:
        return WalkConfig(
            length=self.walk_length,
            walks=self.walks,
            strategy=self.strategy,
            adjacency=self.adjacency,
            include_self=self.include_self,
            exclude_return=self.exclude_return,
        )


@dataclass
class ForwardResult:
    outputs: dict[int, Tensor]
    hidden_initial: dict[int, Tensor]
    hidden_final: dict[int, Tensor]
    coverage: dict[int, np.ndarray] = field(default_factory=dict)


class ScrawlModel:
    """Parameterized model bound to one complex and one task head layout.

    ``head_dims`` maps order -> output width; orders without heads produce no
    outputs. ``input_dims`` fixes the expected input feature width per order
    and defaults to the widths stored on the complex (0 meaning featureless:
    those orders start from a learned constant embedding).
    """

    def __init__(
        self,
        cx: SimplicialComplex,
        config: ModelConfig,
        head_dims: dict[int, int],
        input_dims: dict[int, int] | None = None,
    ):
        self.cx = cx
        self.config = config
        self.top_order = (
            cx.max_order if config.max_order is None else config.max_order
        )
        if not 0 <= self.top_order <= cx.max_order:
            raise ConfigError(
                f"max_order {self.top_order} outside the complex range"
                f" [0, {cx.max_order}]"
            )
        self.orders = list(range(self.top_order + 1))
        self.static_order = (
            self.top_order + 1 if cx.max_order > self.top_order else None
        )
        self.head_dims = dict(head_dims)
        for k in self.head_dims:
            if k not in self.orders:
                raise ConfigError(f"head on unmodeled order {k}")

        encoded_orders = self.orders + (
            [self.static_order] if self.static_order is not None else []
        )
        if input_dims is None:
            input_dims = {k: cx.feature_dim(k) for k in encoded_orders}
        self.input_dims = {k: int(input_dims.get(k, 0)) for k in encoded_orders}
        self.np_dtype = DTYPES[config.dtype]

        d = config.hidden
        s = config.window
        self.conv_stacks: dict[int, ConvStack] = {}
        for k in self.orders:
            d_in = d + (d if k >= 1 else 0) + (d if self._has_upper(k) else 0)
            d_in += 3 * s - 2
            self.conv_stacks[k] = conv_stack_for(
                s, d_in, d, kernel_widths=config.kernel_widths
            )
        if (
            config.kernel_widths
            and self.conv_stacks[0].receptive_field != s + 1
        ):
            warnings.warn(
                f"kernel widths {config.kernel_widths} give receptive field "
                f"{self.conv_stacks[0].receptive_field}, not window + 1 = {s + 1};"
                " honoring the kernels",
                stacklevel=2,
            )
        if config.walk_length < self.conv_stacks[0].receptive_field:
            raise ConfigError(
                f"walk length {config.walk_length} is below the receptive"
                f" field {self.conv_stacks[0].receptive_field}"
            )
        self.update_mlp = Mlp((d, d, d))
        self.params: dict[str, Tensor] = {}
        self._init_params()
        self._batch_cache: dict[int, dict[int, WalkBatch]] = {}

    def _has_upper(self, k: int) -> bool:
        return k < self.top_order or self.static_order is not None

    @property
    def receptive_field(self) -> int:
        return self.conv_stacks[0].receptive_field

    # -- parameters ----------------------------------------------------------

    def _init_params(self) -> None:
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(self.config.seed))
        )
        dt = self.np_dtype
        d = self.config.hidden

        def reg(name: str, tensor: Tensor) -> None:
            self.params[name] = tensor

        encoded = self.orders + (
            [self.static_order] if self.static_order is not None else []
        )
        for k in encoded:
            d_k = self.input_dims[k]
            if d_k > 0:
                reg(f"enc/k{k}/w", init_weight(rng, (d_k, d), fan_in=d_k, dtype=dt))
                reg(f"enc/k{k}/b", init_bias((d,), dt))
            else:
                # a learned embedding row, not a projection: unit-variance init
                const = rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size=(1, d))
                reg(f"enc/k{k}/const", Tensor(const.astype(dt), requires_grad=True))
        for t in range(self.config.layers):
            for k in self.orders:
                for i, (width, c_in, c_out) in enumerate(self.conv_stacks[k].layers):
                    reg(
                        f"layer{t}/k{k}/conv{i}/w",
                        init_weight(
                            rng, (width, c_in, c_out), fan_in=width * c_in, dtype=dt
                        ),
                    )
                    reg(f"layer{t}/k{k}/conv{i}/b", init_bias((c_out,), dt))
                for i, (m_in, m_out) in enumerate(self.update_mlp.layer_shapes):
                    reg(
                        f"layer{t}/k{k}/update{i}/w",
                        init_weight(rng, (m_in, m_out), fan_in=m_in, dtype=dt),
                    )
                    reg(f"layer{t}/k{k}/update{i}/b", init_bias((m_out,), dt))
        for k, out_dim in sorted(self.head_dims.items()):
            for i, (m_in, m_out) in enumerate(self._head_mlp(k, out_dim).layer_shapes):
                reg(
                    f"head/k{k}/mlp{i}/w",
                    init_weight(rng, (m_in, m_out), fan_in=m_in, dtype=dt),
                )
                reg(f"head/k{k}/mlp{i}/b", init_bias((m_out,), dt))

    def _head_mlp(self, k: int, out_dim: int) -> Mlp:
        hidden = (
            self.config.head_hidden
            if self.config.head_hidden is not None
            else (self.config.hidden,)
        )
        return Mlp((self.config.hidden, *hidden, out_dim))

    def _conv_weights(self, t: int, k: int):
        n = len(self.conv_stacks[k].layers)
        return [
            (self.params[f"layer{t}/k{k}/conv{i}/w"], self.params[f"layer{t}/k{k}/conv{i}/b"])
            for i in range(n)
        ]

    def _update_weights(self, t: int, k: int):
        n = len(self.update_mlp.layer_shapes)
        return [
            (self.params[f"layer{t}/k{k}/update{i}/w"], self.params[f"layer{t}/k{k}/update{i}/b"])
            for i in range(n)
        ]

    def _head_weights(self, k: int):
        n = len(self._head_mlp(k, self.head_dims[k]).layer_shapes)
        return [
            (self.params[f"head/k{k}/mlp{i}/w"], self.params[f"head/k{k}/mlp{i}/b"])
            for i in range(n)
        ]

    def zero_module_params(self) -> None:
        """Zero every layer-module parameter, leaving encoders and heads alone."""
        for name, p in self.params.items():
            if name.startswith("layer"):
                p.data = np.zeros_like(p.data)

    # -- forward -------------------------------------------------------------

    def init_hidden(self, features: dict[int, np.ndarray] | None = None) -> dict[int, Tensor]:
        """Per-order affine encoders; featureless orders broadcast a learned row."""
        states: dict[int, Tensor] = {}
        encoded = self.orders + (
            [self.static_order] if self.static_order is not None else []
        )
        for k in encoded:
            states[k] = self._encode_order(k, features)
        return states

    def _encode_order(self, k: int, features) -> Tensor:
        n_k = self.cx.num_simplices(k)
        d_k = self.input_dims[k]
        if d_k > 0:
            feats = None
            if features is not None:
                feats = features.get(k)
            if feats is None:
                feats = self.cx.features_of(k)
            if feats is None or feats.shape != (n_k, d_k):
                raise ConfigError(
                    f"order {k} expects input features of shape ({n_k}, {d_k})"
                )
            x = constant(np.asarray(feats, dtype=self.np_dtype))
            return x @ self.params[f"enc/k{k}/w"] + self.params[f"enc/k{k}/b"]
        anchor = constant(np.zeros((n_k, 1), dtype=self.np_dtype))
        return anchor + self.params[f"enc/k{k}/const"]

    def encode_walks(self, walk_set: WalkSet) -> dict[int, WalkBatch]:
        """Structural walk encodings, cached per walk-set identity.

        Every layer of one epoch reuses the same batches; only the gathered
        feature blocks change between layers.
        """
        key = id(walk_set)
        if key in self._batch_cache:
            return self._batch_cache[key]
        batches = {
            k: encode_slot(self.cx, walk_set.slot(k), self.config.window, self.np_dtype)
            for k in self.orders
            if k in walk_set.slots
        }
        if len(self._batch_cache) >= 4:
            self._batch_cache.pop(next(iter(self._batch_cache)))
        self._batch_cache[key] = batches
        return batches

    def module_forward(
        self,
        batch: WalkBatch,
        h_k: Tensor,
        h_lower: Tensor | None,
        h_upper: Tensor | None,
        t: int,
    ) -> tuple[Tensor, np.ndarray]:
        """One module: featurize walks from states, convolve, pool, update.

        Returns the per-simplex update and the walk coverage counts; simplices
        no window centers on receive a zero update.
        """
        k = batch.order
        parts = [gather_rows(h_k, batch.sims)]
        if h_lower is not None:
            parts.append(gather_rows(h_lower, batch.face_idx))
        if h_upper is not None:
            parts.append(gather_rows(h_upper, batch.coface_idx))
        parts.append(constant(batch.structural))
        walk_feats = concat_last(parts)

        stack = self.conv_stacks[k]
        conv_out = apply_conv_stack(walk_feats, stack, self._conv_weights(t, k))
        m, out_steps, d = conv_out.data.shape
        center_offset = stack.receptive_field // 2
        centers = batch.sims[:, center_offset : center_offset + out_steps].ravel()

        rows = reshape(conv_out, (m * out_steps, d))
        n_k = self.cx.num_simplices(k)
        pooled, counts = segment_pool(rows, centers, n_k, self.config.pooling)
        update = apply_mlp(pooled, self.update_mlp, self._update_weights(t, k))
        covered = (counts > 0).astype(self.np_dtype)[:, None]
        return mul(update, constant(covered)), counts

    def forward(
        self,
        walk_set: WalkSet,
        features: dict[int, np.ndarray] | None = None,
    ) -> ForwardResult:
        """Encode, run all layers against the shared walks, and apply heads."""
        states = self.init_hidden(features)
        hidden_initial = dict(states)
        static = states.get(self.static_order) if self.static_order is not None else None
        batches = self.encode_walks(walk_set)
        coverage: dict[int, np.ndarray] = {}
        for t in range(self.config.layers):
            new_states = dict(states)
            for k in self.orders:
                batch = batches.get(k)
                if batch is None or batch.sims.shape[0] == 0:
                    continue
                h_lower = states[k - 1] if k >= 1 else None
                if k < self.top_order:
                    h_upper = states[k + 1]
                else:
                    h_upper = static
                update, counts = self.module_forward(
                    batch, states[k], h_lower, h_upper, t
                )
                coverage[k] = counts
                new_states[k] = states[k] + update
            states = new_states
        outputs = {
            k: apply_mlp(states[k], self._head_mlp(k, out_dim), self._head_weights(k))
            for k, out_dim in sorted(self.head_dims.items())
        }
        return ForwardResult(
            outputs=outputs,
            hidden_initial=hidden_initial,
            hidden_final=states,
            coverage=coverage,
        )

    def sample_epoch_walks(self, epoch_seed) -> WalkSet:
        return sample_walk_set(
            self.cx, self.orders, self.config.walk_config(), epoch_seed
        )

    # -- persistence ---------------------------------------------------------

    def architecture_fingerprint(self) -> dict:
        """Shape-determining description; sampling knobs that may vary at
        prediction time (walk count, walk length) are deliberately excluded."""
        return {
            "top_order": self.top_order,
            "layers": self.config.layers,
            "window": self.config.window,
            "hidden": self.config.hidden,
            "kernel_widths": list(self.config.kernel_widths or ()),
            "pooling": self.config.pooling,
            "dtype": self.config.dtype,
            "head_hidden": list(
                self.config.head_hidden
                if self.config.head_hidden is not None
                else (self.config.hidden,)
            ),
            "input_dims": {str(k): v for k, v in sorted(self.input_dims.items())},
            "head_dims": {str(k): v for k, v in sorted(self.head_dims.items())},
            "complex_counts": list(self.cx.counts),
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.architecture_fingerprint(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def parameter_arrays(self) -> dict[str, np.ndarray]:
        return {f"param/{name}": p.data for name, p in sorted(self.params.items())}

    def load_parameter_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for name, p in self.params.items():
            key = f"param/{name}"
            if key not in arrays:
                raise ConfigError(f"checkpoint is missing parameter {name}")
            if arrays[key].shape != p.data.shape:
                raise ConfigError(f"checkpoint parameter {name} has wrong shape")
            p.data = np.asarray(arrays[key], dtype=self.np_dtype)


def save_checkpoint(path, model: ScrawlModel, optimizer: Adam | None, meta: dict) -> None:
    """Write parameters, optimizer moments, and a JSON meta record to ``.npz``.

    ``meta` carries everything needed to rebuild the model and its task:
    model config, dims, config hash, dataset and task specs, and seeds.
    """
    arrays = dict(model.parameter_arrays())
    if optimizer is not None:
        arrays.update(optimizer.state_arrays())
        meta = dict(meta, step_count=optimizer.step_count, lr=optimizer.lr)
    meta = dict(meta, config_hash=model.config_hash(), format_version=1)
    arrays["meta"] = np.array(json.dumps(meta, sort_keys=True))
    np.savez(path, **arrays)


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Read a checkpoint; returns (meta, arrays keyed param/... adam_.../...)."""
    with np.load(path, allow_pickle=False) as data:
        arrays = {k: data[k] for k in data.files if k != "meta"}
        meta = json.loads(str(data["meta"]))
    return meta, arrays


def train_epoch(
    model: ScrawlModel,
    task,
    optimizer: Adam,
    epoch_seed,
) -> dict[str, float]:
    """One full-batch epoch: sample walks once, forward, backward, Adam step.

    The task provides input features, the loss on its training mask, and
    metrics on both splits. Tasks may expose ``training_features`` to
    augment their inputs per epoch. Returns the epoch's metrics record.
    """
    walk_set = model.sample_epoch_walks(epoch_seed)
    if hasattr(task, "training_features"):
        features = task.training_features(epoch_seed)
    else:
        features = task.input_features()
    result = model.forward(walk_set, features=features)
    loss = task.loss(result.outputs)
    loss_value = float(loss.data)
    if not np.isfinite(loss_value):
        raise FloatingPointError(f"non-finite training loss {loss_value}")
    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
    record = {"train_loss": loss_value}
    record.update(task.metrics({k: v.data for k, v in result.outputs.items()}))
    return record


def run_metrics(model: ScrawlModel, task, walk_set: WalkSet) -> dict[str, float]:
    """Metrics-only forward pass against a given walk collection."""
    result = model.forward(walk_set, features=task.input_features())
    return task.metrics({k: v.data for k, v in result.outputs.items()})


def evaluate(
    model: ScrawlModel,
    task,
    epoch_seed,
    walk_config: WalkConfig | None = None,
) -> dict[str, float]:
    """Metrics-only forward pass, optionally with different walk settings."""
    if walk_config is None:
        walk_set = model.sample_epoch_walks(epoch_seed)
    else:
        walk_set = sample_walk_set(model.cx, model.orders, walk_config, epoch_seed)
    return run_metrics(model, task, walk_set)
