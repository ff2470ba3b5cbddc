#!/usr/bin/env python3
"""
Test the dual-branch control model: zero bridges, frozen main branch,
single-branch finetune baseline and checkpoints
"""

import os
import sys

import numpy as np
import pytest

# Add the project root to Python path
sys.path.insert(0, os.path.dirname(__file__))

from app.models.experiment import ExperimentConfig, OptimConfig
from app.motion.representation import FeatureNormalizer
from app.network import (
    DualBranchModel,
    SingleBranchModel,
    TrainingItem,
    build_mwnet,
    build_schedule,
    finetune_single_branch,
    train_control_stage,
)
import app.network.trainer as trainer
from app.network.checkpoint import load_checkpoint, main_branch_bytes, save_checkpoint
from app.network.control import inject_audio, match_audio_length
from app.network.base import Linear
from app.numerics import Tensor, finite_diff_check_params, no_grad, tensor_sum
from app.utils.errors import ContractError, DataError, ShapeError
from app.utils.rng import make_rng

AUDIO_DIM = 6
CONTEXT_DIM = 4
FRAMES = 5


def _config():
    return ExperimentConfig.from_dict({
        "model": {"block_spec": "T/CA/F", "width": 8, "heads": 2, "groups": 2, "layers": 2,
                  "context_dim": CONTEXT_DIM, "audio_dim": AUDIO_DIM},
        "schedule": {"steps": 20},
    })


def _main(seed=0):
    return build_mwnet(_config().model, make_rng(seed, "main"))


def _items(count=3, with_audio=True):
    rng = make_rng(1, "items")
    return [
        TrainingItem(
            features=rng.standard_normal((FRAMES, 263)),
            context=rng.standard_normal((2, CONTEXT_DIM)),
            audio=rng.standard_normal((FRAMES, AUDIO_DIM)) if with_audio else None,
            label=f"item {i}",
        )
        for i in range(count)
    ]


def _optim():
    return OptimConfig(lr=1e-2, batch_size=2, log_every=1)


def _inputs(seed=2):
    rng = make_rng(seed, "inputs")
    return (rng.standard_normal((FRAMES, 263)), rng.standard_normal((2, CONTEXT_DIM)),
            rng.standard_normal((FRAMES, AUDIO_DIM)))


def test_control_branch_starts_as_an_exact_copy():
    print("🧪 Testing control branch cloning")
    model = DualBranchModel(_main(), AUDIO_DIM, make_rng(3, "control"))
    assert model.main.checksum() == model.control.checksum()
    assert len(model.bridges) == len(model.main.blocks)
    assert model.bridge_norm() == 0.0
    # separate buffers: changing the clone leaves the main branch alone
    first = model.control.parameters()[0]
    first.assign(first.data + 1.0)
    assert model.main.checksum() != model.control.checksum()


def test_zero_bridges_reproduce_the_main_branch():
    print("🧪 Testing zero-bridge identity")
    main = _main()
    x_t, context, audio = _inputs()
    with no_grad():
        expected = main(Tensor(x_t), 9, context).numpy()
        model = DualBranchModel(main, AUDIO_DIM, make_rng(3, "control"))
        with_audio = model(Tensor(x_t), 9, context, audio).numpy()
        without_audio = model(Tensor(x_t), 9, context).numpy()
    assert np.array_equal(with_audio, expected)
    assert np.array_equal(without_audio, expected)


def test_nonzero_bridge_lets_audio_steer_the_output():
    print("🧪 Testing a trained bridge")
    main = _main()
    x_t, context, audio = _inputs()
    model = DualBranchModel(main, AUDIO_DIM, make_rng(3, "control"))
    with no_grad():
        expected = main(Tensor(x_t), 9, context).numpy()
        model.bridges[0].weight.assign(0.1 * make_rng(6, "bridge").standard_normal(model.bridges[0].weight.shape))
        steered = model(Tensor(x_t), 9, context, audio).numpy()
        other_audio = model(Tensor(x_t), 9, context, audio + 1.0).numpy()
        text_only = model(Tensor(x_t), 9, context).numpy()
    assert np.max(np.abs(steered - expected)) > 1e-6
    assert np.max(np.abs(other_audio - steered)) > 1e-6
    # without audio the main branch runs alone
    assert np.array_equal(text_only, expected)


def test_control_training_leaves_the_main_branch_untouched():
    print("🧪 Testing freeze integrity")
    model = DualBranchModel(_main(), AUDIO_DIM, make_rng(3, "control"))
    main_before = model.main.checksum()
    control_before = model.control.checksum()

    losses = train_control_stage(model, _items(), build_schedule(20), _optim(), 4, make_rng(4, "train"))
    assert len(losses) == 4 and all(np.isfinite(losses))
    assert model.main.checksum() == main_before
    assert all(p.grad is None for p in model.main.parameters())
    assert model.bridge_norm() > 0.0
    assert model.control.checksum() != control_before
    assert set(model.control_parameters()) == {
        name for name, _ in model.named_parameters() if not name.startswith("main.")}


def test_control_stage_rejects_a_moved_main_branch(monkeypatch):
    model = DualBranchModel(_main(), AUDIO_DIM, make_rng(3, "control"))

    def fit_touching_main(*args, **kwargs):
        weight = model.main.parameters()[0]
        weight.assign(weight.data + 1.0)
        return [0.0]

    monkeypatch.setattr(trainer, "fit", fit_touching_main)
    with pytest.raises(ContractError):
        train_control_stage(model, _items(), build_schedule(20), _optim(), 1, make_rng(4, "train"))


def test_control_stage_needs_audio():
    model = DualBranchModel(_main(), AUDIO_DIM, make_rng(3, "control"))
    with pytest.raises(ContractError):
        train_control_stage(model, _items(with_audio=False), build_schedule(20), _optim(), 1, make_rng(4, "train"))
    with pytest.raises(ContractError):
        train_control_stage(model, [], build_schedule(20), _optim(), 1, make_rng(4, "train"))


def test_single_branch_finetune_moves_the_main_branch():
    print("🧪 Testing single-branch finetune drift")
    main = _main()
    x_t, context, _ = _inputs()
    with no_grad():
        before = main(Tensor(x_t), 9, context).numpy()
    checksum = main.checksum()

    model = SingleBranchModel(main, AUDIO_DIM, make_rng(3, "control"))
    finetune_single_branch(model, _items(), build_schedule(20), _optim(), 3, make_rng(4, "train"))
    with no_grad():
        after = model.main(Tensor(x_t), 9, context).numpy()
    assert model.main.checksum() != checksum
    assert np.max(np.abs(after - before)) > 0.0


def test_dual_forward_gradients():
    print("🧪 Testing dual-branch gradients")
    model = DualBranchModel(_main(), AUDIO_DIM, make_rng(3, "control"))
    rng = make_rng(5, "bridges")
    for bridge in model.bridges:
        bridge.weight.assign(0.1 * rng.standard_normal(bridge.weight.shape))
    x_t, context, audio = _inputs()
    readout = rng.standard_normal((FRAMES, 263))
    params = {name: p for name, p in model.named_parameters()
              if name.startswith(("bridges.", "audio_projector."))}

    errors = finite_diff_check_params(lambda: tensor_sum(model(Tensor(x_t), 9, context, audio) * readout), params)
    assert max(errors.values()) < 1e-4


def test_audio_length_matching():
    features = np.arange(12.0).reshape(4, 3)
    np.testing.assert_array_equal(match_audio_length(features, 2), features[:2])
    padded = match_audio_length(features, 6)
    assert padded.shape == (6, 3)
    np.testing.assert_array_equal(padded[4:], np.repeat(features[-1:], 2, axis=0))
    with pytest.raises(ShapeError):
        match_audio_length(np.zeros((0, 3)), 2)


def test_inject_audio_checks_the_projector_width():
    projector = Linear(AUDIO_DIM, 8, make_rng(6, "proj"))
    latent = np.zeros((FRAMES, 8))
    out = inject_audio(np.ones((FRAMES, AUDIO_DIM)), latent, projector)
    assert out.shape == (FRAMES, 8)
    with pytest.raises(ShapeError):
        inject_audio(np.ones((FRAMES, AUDIO_DIM + 1)), latent, projector)


def test_checkpoint_round_trip_and_main_bytes(tmp_path):
    print("🧪 Testing checkpoints")
    config = _config()
    main = _main()
    normalizer = FeatureNormalizer.identity()
    main_path = str(tmp_path / "main.ckpt")
    save_checkpoint(main_path, main, normalizer, config, "main", seed=2)

    model = DualBranchModel(main, AUDIO_DIM, make_rng(3, "control"))
    train_control_stage(model, _items(), build_schedule(20), _optim(), 2, make_rng(4, "train"))
    control_path = str(tmp_path / "control.ckpt")
    save_checkpoint(control_path, model, normalizer, config.with_overrides(stage="control"), "control")

    assert main_branch_bytes(main_path) == main_branch_bytes(control_path)

    loaded = load_checkpoint(control_path)
    assert loaded.stage == "control"
    assert loaded.model.checksum() == model.checksum()
    x_t, context, audio = _inputs()
    with no_grad():
        expected = model(Tensor(x_t), 9, context, audio).numpy()
        restored = loaded.predict(Tensor(x_t), 9, context, audio).numpy()
    assert np.array_equal(restored, expected)

    main_only = load_checkpoint(control_path, main_only=True)
    assert main_only.stage == "main"
    assert main_only.main.checksum() == main.checksum()

    with pytest.raises(DataError):
        load_checkpoint(str(tmp_path / "missing.ckpt"))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
