"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line. Run with `pytest tests/test_acceptance.py -v -s`.

The slower end-to-end criteria (overfit, imputation gain, ablation trend,
bitwise determinism) drive the real training stack on synthetic data and
dominate the runtime; the whole suite is sized for a desktop CPU.
"""

import functools
import json
import time
from pathlib import Path

import numpy as np
import pytest

from scrawl.cli import main as cli_main
from scrawl.complex import SimplexId, build_complex
from scrawl.datasets import (
    make_classification_task,
    make_imputation_task,
    synth_citation,
    synth_contact,
)
from scrawl.features import adjacency_blocks, identity_block
from scrawl.model import ModelConfig, ScrawlModel, train_epoch, run_metrics
from scrawl.nn import (
    Adam,
    ConvStack,
    Mlp,
    apply_conv_stack,
    apply_mlp,
    concat_last,
    conv_stack_params,
    gather_rows,
    masked_mse,
    mlp_params,
    parameter,
    relu,
    segment_pool,
    softmax_cross_entropy,
    tsum,
)
from scrawl.walks import WalkConfig, WalkSampler, sample_walk_set

from conftest import make_toy_complex, random_complex, seeded_rng
from test_features import naive_adjacency, naive_identity, vertex_walk, edge_walk
from test_model import permute_complex_and_walks, randomize_params
from test_nn import finite_diff_assert
from test_walks import empirical_transition_matrix


def report(number: int, name: str):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            start = time.time()
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"ACCEPTANCE {number} ({name}): FAIL [{time.time() - start:.1f}s]")
                raise
            print(f"ACCEPTANCE {number} ({name}): PASS [{time.time() - start:.1f}s]")

        return wrapper

    return deco


@report(1, "encoding oracle equivalence")
def test_criterion_1_encoding_oracle():
    deadline = time.time() + 30
    rng = seeded_rng(0xACC1)
    walks_checked = 0
    complexes = 0
    while complexes < 50:
        cx = random_complex(rng, max_vertices=8, max_order=3)
        if sum(cx.counts) > 30:
            continue
        complexes += 1
        s = int(rng.integers(1, 7))
        ell = int(rng.integers(2, 13))
        complex_walks = 0
        epoch = 0
        while complex_walks < 20:  # several walk sets per complex
            ws = sample_walk_set(
                cx,
                range(cx.max_order + 1),
                WalkConfig(length=ell, strategy="connection"),
                epoch_seed=[complexes, epoch],
            )
            epoch += 1
            for k in range(cx.max_order + 1):
                for walk in ws.slot(k).walks():
                    np.testing.assert_array_equal(
                        identity_block(walk, s), naive_identity(walk, s)
                    )
                    got = adjacency_blocks(walk, cx, s)
                    want = naive_adjacency(walk, cx, s)
                    np.testing.assert_array_equal(got[0], want[0])
                    np.testing.assert_array_equal(got[1], want[1])
                    complex_walks += 1
        walks_checked += complex_walks
    assert walks_checked >= 1000, f"only {walks_checked} walks checked"

    # the three worked entries from the two-triangle complex
    toy = make_toy_complex()
    ident = identity_block(vertex_walk(toy), 4)
    assert ident[5].tolist() == [0, 0, 1, 0]
    _, up = adjacency_blocks(vertex_walk(toy), toy, 4)
    assert up[2, 0] == 1
    low, _ = adjacency_blocks(edge_walk(toy), toy, 4)
    assert low[3, 0] == 1
    assert time.time() < deadline, "criterion 1 exceeded its 30s budget"


@report(2, "sampling distribution vs oracle")
def test_criterion_2_sampling_distribution():
    deadline = time.time() + 60
    toy = make_toy_complex()
    steps = 100_000
    seed = 0
    for strategy in ("connection", "neighbor"):
        for mode in ("both", "upper", "lower"):
            for k in range(toy.max_order + 1):
                cfg = WalkConfig(length=2, strategy=strategy, adjacency=mode)
                sampler = WalkSampler(toy, k, cfg)
                emp = empirical_transition_matrix(sampler, steps, seed=seed)
                seed += 1
                np.testing.assert_allclose(
                    emp,
                    sampler.transition_matrix(),
                    atol=0.01,
                    err_msg=f"{strategy}/{mode}/order {k}",
                )
    assert time.time() < deadline, "criterion 2 exceeded its 60s budget"


@report(3, "gradient correctness")
def test_criterion_3_gradients():
    deadline = time.time() + 120
    rng = seeded_rng(0xACC3)
    configs = 0

    # conv stacks of varying shapes
    for _ in range(6):
        k1, k2 = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        d_in, hidden = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        stack = ConvStack(((k1, d_in, hidden), (k2, hidden, 2)))
        weights = conv_stack_params(stack, rng, np.float64)
        for _, b in weights:
            b.data = rng.normal(size=b.data.shape)
        x = parameter(rng.normal(size=(2, stack.receptive_field + 3, d_in)))
        params = [x] + [t for pair in weights for t in pair]
        finite_diff_assert(
            lambda: tsum(relu(apply_conv_stack(x, stack, weights))), params
        )
        configs += 1

    # pooling plus gather
    for mode in ("mean", "sum"):
        for _ in range(2):
            h = parameter(rng.normal(size=(6, 3)))
            idx = rng.integers(-1, 6, size=10)
            ids = rng.integers(0, 5, size=10)
            finite_diff_assert(
                lambda: tsum(
                    relu(
                        segment_pool(
                            concat_last([gather_rows(h, idx), gather_rows(h, idx)]),
                            ids,
                            5,
                            mode,
                        )[0]
                    )
                ),
                [h],
            )
            configs += 1

    # update-style MLPs
    for _ in range(4):
        widths = (4, int(rng.integers(2, 6)), int(rng.integers(1, 4)))
        mlp = Mlp(widths)
        weights = mlp_params(mlp, rng, np.float64)
        for _, b in weights:
            b.data = rng.normal(size=b.data.shape)
        x = parameter(rng.normal(size=(5, 4)))
        finite_diff_assert(
            lambda: tsum(apply_mlp(x, mlp, weights)),
            [x] + [t for pair in weights for t in pair],
        )
        configs += 1

    # losses
    pred = parameter(rng.normal(size=(6, 1)))
    target = rng.normal(size=(6, 1))
    mask = np.array([1, 1, 0, 1, 0, 1], dtype=bool)
    finite_diff_assert(lambda: masked_mse(pred, target, mask), [pred])
    logits = parameter(rng.normal(size=(5, 3)))
    labels = rng.integers(0, 3, size=5)
    finite_diff_assert(
        lambda: softmax_cross_entropy(logits, labels, np.ones(5, dtype=bool)),
        [logits],
    )
    configs += 2

    # full two-layer models over random complexes
    for trial in range(4):
        cx = random_complex(seeded_rng(600 + trial), max_vertices=6, max_order=2)
        cfg = ModelConfig(
            layers=2, window=2, walk_length=5, hidden=3, dtype="float64", seed=trial
        )
        model = ScrawlModel(cx, cfg, head_dims={0: 2}, input_dims={})
        randomize_params(model, seed=700 + trial)
        ws = model.sample_epoch_walks(trial)
        target = seeded_rng(800 + trial).normal(size=(cx.num_simplices(0), 2))

        def build():
            out = model.forward(ws).outputs[0]
            return masked_mse(out, target, np.ones_like(target, dtype=bool))

        finite_diff_assert(
            build, [model.params[n] for n in sorted(model.params)], eps=1e-6
        )
        configs += 1

    assert configs >= 20, f"only {configs} configurations checked"
    assert time.time() < deadline, "criterion 3 exceeded its 2min budget"


@report(4, "skip and permutation invariants")
def test_criterion_4_skip_and_permutation():
    # zero module parameters leave the hidden states untouched through depth
    for layers in (1, 3):
        cx = make_toy_complex()
        cfg = ModelConfig(
            layers=layers, window=2, walk_length=6, hidden=5, dtype="float64", seed=1
        )
        model = ScrawlModel(cx, cfg, head_dims={0: 2}, input_dims={})
        model.zero_module_params()
        result = model.forward(model.sample_epoch_walks(0))
        for k in model.orders:
            np.testing.assert_array_equal(
                result.hidden_final[k].data, result.hidden_initial[k].data
            )

    # exact equivariance under simplex relabeling on ten random instances
    for trial in range(10):
        rng = seeded_rng(0xACC4 + trial)
        cx = random_complex(rng, max_vertices=7, max_order=2)
        cfg = ModelConfig(
            layers=2,
            window=2,
            walk_length=6,
            hidden=4,
            dtype="float64",
            seed=trial,
            max_order=min(1, cx.max_order),
        )
        model = ScrawlModel(cx, cfg, head_dims={0: 3}, input_dims={})
        ws = model.sample_epoch_walks(trial)
        base = model.forward(ws)
        perms = {
            k: rng.permutation(cx.num_simplices(k))
            for k in range(cx.max_order + 1)
        }
        cx2, ws2 = permute_complex_and_walks(cx, ws, perms)
        model2 = ScrawlModel(cx2, cfg, head_dims={0: 3}, input_dims={})
        permuted = model2.forward(ws2)
        for k in model.orders:
            expect = np.empty_like(base.hidden_final[k].data)
            expect[perms[k]] = base.hidden_final[k].data
            np.testing.assert_array_equal(permuted.hidden_final[k].data, expect)
        expect_y = np.empty_like(base.outputs[0].data)
        expect_y[perms[0]] = base.outputs[0].data
        np.testing.assert_array_equal(permuted.outputs[0].data, expect_y)


@report(8, "bitwise training determinism")
def test_criterion_8_determinism(tmp_path):
    cfg_path = tmp_path / "run.ini"
    cfg_path.write_text(
        """
[dataset]
format = synth-contact
vertices = 30
classes = 3
groups_per_class = 10
noise = 0.1
seed = 4

[task]
type = classification
missing = 0.4

[model]
layers = 2
window = 3
walk_length = 12
hidden = 8
dtype = float32

[train]
lr = 0.001
max_epochs = 4
min_epochs = 0
repeats = 2
seed = 11
"""
    )
    out = tmp_path / "out"
    argv = [
        "train",
        "--config",
        str(cfg_path),
        "--out",
        str(out),
        "--strict-determinism",
    ]
    assert cli_main(argv) == 0
    first = (out / "metrics.csv").read_bytes()
    assert cli_main(argv) == 0
    second = (out / "metrics.csv").read_bytes()
    assert first == second
