"""Task construction, metrics, loaders, and desk-scale synthetic datasets.

Two task types are supported. Value imputation hides a seeded fraction of
per-simplex scalars, feeds the median of the remaining known values in their
place, trains on the known entries, and scores ±5% accuracy on the hidden
ones. Vertex classification hides a fraction of vertex labels and scores
argmax accuracy on the hidden set.

Masks key each simplex's Bernoulli draw by its vertex tuple (not its index),
so task construction does not depend on enumeration order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .complex import SimplicialComplex, build_complex
from .errors import AllMasked, ConfigError, EmptyEvalMask
from .io import (
    read_complex_file,
    read_contact_file,
    read_coauthor_csv,
    read_feature_csv,
    read_label_csv,
    read_value_csv,
)
from .nn import Tensor, masked_mse, scale as tscale, softmax_cross_entropy


def _simplex_uniform(seed: int, order: int, simplex: tuple[int, ...]) -> float:
    """Deterministic uniform in [0, 1) keyed by (seed, order, vertex tuple)."""
    key = f"{seed}:{order}:{','.join(map(str, simplex))}".encode()
    digest = hashlib.sha256(key).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


# -- metrics -----------------------------------------------------------------


def imputation_accuracy(
    pred: np.ndarray, truth: np.ndarray, eval_mask: np.ndarray
) -> float:
    """Fraction of masked entries predicted within ±5% of the true value.

    A zero true value counts as correct only for an exactly zero prediction.
    """
    eval_mask = np.asarray(eval_mask, dtype=bool)
    if not eval_mask.any():
        raise EmptyEvalMask("no entries to evaluate")
    pred = np.asarray(pred).reshape(-1)
    truth = np.asarray(truth).reshape(-1)
    ok = np.abs(pred - truth) <= 0.05 * np.abs(truth)
    return float(ok[eval_mask].mean())


def classification_accuracy(
    logits: np.ndarray, labels: np.ndarray, eval_mask: np.ndarray
) -> float:
    """Argmax accuracy over the masked vertices; ties go to the lowest class."""
    eval_mask = np.asarray(eval_mask, dtype=bool)
    if not eval_mask.any():
        raise EmptyEvalMask("no entries to evaluate")
    pred = np.argmax(logits, axis=1)
    return float((pred[eval_mask] == labels[eval_mask]).mean())


# -- imputation task -----------------------------------------------------------


@dataclass
class ImputationTask:
    """Masked scalar regression over every order carrying values.

    ``inputs`` holds the model-visible values (known kept, hidden replaced by
    the per-order median of the known ones); features are standardized with
    the stored per-order shift and scale, and predictions are mapped back to
    original units before accuracy is computed.
    """

    cx: SimplicialComplex
    values: dict[int, np.ndarray]
    known: dict[int, np.ndarray]
    inputs: dict[int, np.ndarray]
    missing_rate: float
    shift: dict[int, float]
    scale: dict[int, float]
    train_remask_rate: float = 0.3

    @property
    def orders(self) -> list[int]:
        return sorted(self.values)

    @property
    def input_dims(self) -> dict[int, int]:
        return {k: 1 for k in self.orders}

    @property
    def head_dims(self) -> dict[int, int]:
        return {k: 1 for k in self.orders}

    def input_features(self) -> dict[int, np.ndarray]:
        return {
            k: ((self.inputs[k] - self.shift[k]) / self.scale[k])[:, None]
            for k in self.orders
        }

    def training_features(self, epoch_seed) -> dict[int, np.ndarray]:
        """Epoch inputs with an extra fraction of known values re-masked.

        A model trained on raw filled inputs can reach zero loss by copying
        its input, which predicts the median everywhere it matters. Hiding a
        seeded, epoch-varying share of the known inputs (targets unchanged)
        forces the walk context to carry the value instead. Normalization
        stays fixed so train and evaluation inputs share one scale.
        """
        if self.train_remask_rate <= 0:
            return self.input_features()
        seq = np.random.SeedSequence(
            [int(x) for x in np.atleast_1d(epoch_seed)], spawn_key=(0xA6, )
        )
        rng = np.random.Generator(np.random.Philox(seq))
        out = {}
        for k in self.orders:
            values = self.inputs[k].copy()
            known_idx = np.flatnonzero(self.known[k])
            drops = known_idx[rng.random(known_idx.size) < self.train_remask_rate]
            if drops.size and drops.size < known_idx.size:
                kept = np.setdiff1d(known_idx, drops)
                values[drops] = np.median(values[kept])
            out[k] = ((values - self.shift[k]) / self.scale[k])[:, None]
        return out

    def normalized_targets(self, k: int) -> np.ndarray:
        return (self.values[k] - self.shift[k]) / self.scale[k]

    def denormalize(self, k: int, pred: np.ndarray) -> np.ndarray:
        return pred * self.scale[k] + self.shift[k]

    def loss(self, outputs: dict[int, Tensor]) -> Tensor:
        """Mean squared error over all known entries, pooled across orders."""
        total = sum(int(self.known[k].sum()) for k in self.orders)
        acc = None
        for k in self.orders:
            part = masked_mse(
                outputs[k], self.normalized_targets(k)[:, None], self.known[k][:, None]
            )
            weighted = tscale(part, int(self.known[k].sum()) / total)
            acc = weighted if acc is None else acc + weighted
        return acc

    def _pooled(self, outputs, mask_of) -> tuple[float, float]:
        """(accuracy, normalized mse) pooled over the selected entries."""
        sq_sum = 0.0
        n = 0
        hits = 0.0
        for k in self.orders:
            mask = mask_of(k)
            if not mask.any():
                continue
            pred_norm = outputs[k].reshape(-1)
            diff = pred_norm[mask] - self.normalized_targets(k)[mask]
            sq_sum += float((diff * diff).sum())
            pred = self.denormalize(k, pred_norm)
            ok = np.abs(pred - self.values[k]) <= 0.05 * np.abs(self.values[k])
            hits += float(ok[mask].sum())
            n += int(mask.sum())
        if n == 0:
            return float("nan"), float("nan")
        return hits / n, sq_sum / n

    def metrics(self, outputs: dict[int, np.ndarray]) -> dict[str, float]:
        """Train metrics on known entries, validation on the hidden ones.

        With nothing hidden (missing rate 0) validation falls back to the
        known entries so the record stays well defined.
        """
        train_acc, train_mse = self._pooled(outputs, lambda k: self.known[k])
        any_missing = any((~self.known[k]).any() for k in self.orders)
        if any_missing:
            val_acc, val_mse = self._pooled(outputs, lambda k: ~self.known[k])
        else:
            val_acc, val_mse = train_acc, train_mse
        record = {
            "train_metric": train_acc,
            "val_loss": val_mse,
            "val_metric": val_acc,
        }
        for k in self.orders:
            if (~self.known[k]).any():
                pred = self.denormalize(k, outputs[k].reshape(-1))
                record[f"val_metric_order{k}"] = imputation_accuracy(
                    pred, self.values[k], ~self.known[k]
                )
        return record


def make_imputation_task(
    cx: SimplicialComplex,
    values: dict[int, np.ndarray],
    missing_rate: float,
    seed: int,
    train_remask_rate: float = 0.3,
) -> ImputationTask:
    """Hide a Bernoulli(p) fraction per order and median-fill the gaps."""
    if not 0 <= missing_rate < 1:
        raise ConfigError("missing rate must lie in [0, 1)")
    known: dict[int, np.ndarray] = {}
    inputs: dict[int, np.ndarray] = {}
    shift: dict[int, float] = {}
    scale: dict[int, float] = {}
    vals: dict[int, np.ndarray] = {}
    for k in sorted(values):
        v = np.asarray(values[k], dtype=np.float64)
        if v.shape != (cx.num_simplices(k),):
            raise ConfigError(
                f"order {k} has {cx.num_simplices(k)} simplices,"
                f" got {v.shape[0]} values"
            )
        if v.size == 0:
            raise ConfigError(f"order {k} carries no simplices")
        draws = np.array(
            [
                _simplex_uniform(seed, k, s) < missing_rate
                for s in cx.simplices(k)
            ]
        )
        keep = ~draws
        if not keep.any():
            raise AllMasked(f"order {k} lost every known value")
        median = float(np.median(v[keep]))
        filled = np.where(keep, v, median)
        mu = float(filled.mean())
        sd = float(filled.std())
        vals[k] = v
        known[k] = keep
        inputs[k] = filled
        shift[k] = mu
        scale[k] = sd if sd > 0 else 1.0
    return ImputationTask(
        cx=cx,
        values=vals,
        known=known,
        inputs=inputs,
        missing_rate=missing_rate,
        shift=shift,
        scale=scale,
        train_remask_rate=train_remask_rate,
    )


# -- classification task ---------------------------------------------------


@dataclass
class ClassificationTask:
    """Vertex classification with a hidden label fraction.

    ``train_mask`` and its complement partition the vertices. By default the
    model sees no input features (all signal comes from structure); set
    ``use_complex_features`` to feed the complex's stored features instead.
    """

    cx: SimplicialComplex
    labels: np.ndarray
    train_mask: np.ndarray
    n_classes: int
    use_complex_features: bool = False

    @property
    def input_dims(self) -> dict[int, int]:
        if self.use_complex_features:
            return {k: self.cx.feature_dim(k) for k in range(self.cx.max_order + 1)}
        return {}

    @property
    def head_dims(self) -> dict[int, int]:
        return {0: self.n_classes}

    def input_features(self):
        return None

    def loss(self, outputs: dict[int, Tensor]) -> Tensor:
        return softmax_cross_entropy(outputs[0], self.labels, self.train_mask)

    def metrics(self, outputs: dict[int, np.ndarray]) -> dict[str, float]:
        logits = outputs[0]
        hidden = ~self.train_mask
        record = {
            "train_metric": classification_accuracy(
                logits, self.labels, self.train_mask
            )
        }
        z = logits - logits.max(axis=1, keepdims=True)
        log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        picked = log_probs[np.arange(len(self.labels)), self.labels]
        record["val_loss"] = float(-picked[hidden].mean())
        record["val_metric"] = classification_accuracy(logits, self.labels, hidden)
        return record


def make_classification_task(
    cx: SimplicialComplex,
    labels: np.ndarray,
    missing_rate: float,
    seed: int,
    use_complex_features: bool = False,
) -> ClassificationTask:
    """Hide a Bernoulli(p) label fraction; every class keeps at least one
    training vertex whenever it has any vertex at all."""
    if not 0 < missing_rate < 1:
        raise ConfigError("missing rate must lie in (0, 1)")
    labels = np.asarray(labels, dtype=np.int64)
    n = cx.num_simplices(0)
    if labels.shape != (n,):
        raise ConfigError(f"expected {n} labels, got {labels.shape}")
    hidden = np.array(
        [_simplex_uniform(seed, 0, s) < missing_rate for s in cx.simplices(0)]
    )
    train = ~hidden
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if not train[members].any():
            train[members[0]] = True
    return ClassificationTask(
        cx=cx,
        labels=labels,
        train_mask=train,
        n_classes=int(labels.max()) + 1,
        use_complex_features=use_complex_features,
    )


# -- synthetic data ------------------------------------------------------------


def _planted_groups(
    n_vertices: int,
    n_classes: int,
    groups_per_class: int,
    group_size_range: tuple[int, int],
    noise: float,
    rng: np.random.Generator,
) -> list[tuple[int, ...]]:
    """Interaction groups drawn mostly within classes (class of v is v mod C).

    Each member independently comes from the group's class with probability
    1 - noise and from the whole vertex set otherwise. Vertices that end up
    in no group get one fallback edge so the complex covers all of them.
    """
    lo, hi = group_size_range
    if lo < 2 or hi < lo:
        raise ConfigError("group sizes must satisfy 2 <= lo <= hi")
    members = {c: np.flatnonzero(np.arange(n_vertices) % n_classes == c) for c in range(n_classes)}
    groups: list[tuple[int, ...]] = []
    used = np.zeros(n_vertices, dtype=bool)
    for c in range(n_classes):
        own = members[c]
        for _ in range(groups_per_class):
            size = int(rng.integers(lo, hi + 1))
            picked: set[int] = set()
            attempts = 0
            while len(picked) < size and attempts < 50 * size:
                attempts += 1
                if noise > 0 and rng.random() < noise:
                    v = int(rng.integers(n_vertices))
                else:
                    v = int(own[rng.integers(len(own))])
                picked.add(v)
            group = tuple(sorted(picked))
            if len(group) >= 2:
                groups.append(group)
                used[list(group)] = True
    for v in np.flatnonzero(~used):
        c = v % n_classes
        own = members[c]
        candidates = own[own != v]
        if len(candidates) == 0:
            candidates = np.setdiff1d(np.arange(n_vertices), [v])
        partner = int(candidates[rng.integers(len(candidates))])
        groups.append(tuple(sorted((int(v), partner))))
    return groups


def _complex_from_groups(n_vertices: int, groups) -> SimplicialComplex:
    by_order: dict[int, list[tuple[int, ...]]] = {
        0: [(v,) for v in range(n_vertices)]
    }
    seen: set[tuple[int, ...]] = set()
    for g in groups:
        if g not in seen:
            seen.add(g)
            by_order.setdefault(len(g) - 1, []).append(g)
    return build_complex(by_order, auto_close=True)


def synth_contact(
    n_vertices: int = 60,
    n_classes: int = 4,
    groups_per_class: int = 30,
    group_size_range: tuple[int, int] = (2, 4),
    noise: float = 0.05,
    seed: int = 0,
) -> tuple[SimplicialComplex, np.ndarray]:
    """Planted-partition interaction complex with per-vertex class labels."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    groups = _planted_groups(
        n_vertices, n_classes, groups_per_class, group_size_range, noise, rng
    )
    cx = _complex_from_groups(n_vertices, groups)
    labels = (np.arange(n_vertices) % n_classes).astype(np.int64)
    return cx, labels


def synth_citation(
    n_authors: int = 48,
    n_communities: int = 4,
    papers_per_community: int = 30,
    paper_size_range: tuple[int, int] = (2, 4),
    base_values: tuple[float, ...] = (10.0, 25.0, 60.0, 150.0),
    noise: float = 0.05,
    seed: int = 0,
) -> tuple[SimplicialComplex, dict[int, np.ndarray]]:
    """Co-authorship style complex whose simplex values encode communities.

    Every simplex carries the base value of the majority community among its
    vertices (ties go to the lowest community), so values are predictable
    from structure; the bases are spread more than 5% apart to keep the
    accuracy bands disjoint.
    """
    if len(base_values) < n_communities:
        raise ConfigError("need one base value per community")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    groups = _planted_groups(
        n_authors, n_communities, papers_per_community, paper_size_range, noise, rng
    )
    cx = _complex_from_groups(n_authors, groups)
    community = np.arange(n_authors) % n_communities
    values: dict[int, np.ndarray] = {}
    for k in range(cx.max_order + 1):
        vals = np.zeros(cx.num_simplices(k))
        for i, simplex in enumerate(cx.simplices(k)):
            counts = np.bincount(community[list(simplex)], minlength=n_communities)
            vals[i] = base_values[int(np.argmax(counts))]
        values[k] = vals
    return cx, values


# -- loading -------------------------------------------------------------------


@dataclass
class LoadedDataset:
    cx: SimplicialComplex
    values: dict[int, np.ndarray] | None = None
    labels: np.ndarray | None = None
    features: dict[int, np.ndarray] = field(default_factory=dict)


def load_dataset(
    path: str | Path | None,
    format: str,
    labels_path: str | Path | None = None,
    value_paths: dict[int, str | Path] | None = None,
    feature_paths: dict[int, str | Path] | None = None,
    auto_close: bool = True,
) -> LoadedDataset:
    """Load a complex plus task data from the documented file formats.

    ``format`` is one of complex, contact, or coauthor; coauthor files carry
    their own per-order values. Sidecar label, value, and feature CSVs attach
    by path.
    """
    if format == "coauthor":
        cx, values = read_coauthor_csv(path)
        out = LoadedDataset(cx=cx, values=values)
    elif format == "contact":
        out = LoadedDataset(cx=read_contact_file(path))
    elif format == "complex":
        out = LoadedDataset(cx=read_complex_file(path, auto_close=auto_close))
    else:
        raise ConfigError(f"unknown dataset format {format!r}")
    if labels_path is not None:
        out.labels = read_label_csv(labels_path, out.cx)
    if value_paths:
        out.values = {
            int(k): read_value_csv(p, out.cx, int(k)) for k, p in value_paths.items()
        }
    if feature_paths:
        out.features = {
            int(k): read_feature_csv(p, out.cx, int(k))
            for k, p in feature_paths.items()
        }
    return out
