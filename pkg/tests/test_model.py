import numpy as np
import pytest

from pianoduet.accompany import CHORD_LABELS
from pianoduet.model import (
    ChordClassifier,
    TrainConfig,
    gradient_check,
    load_checkpoint,
    one_hot_tokens,
    save_checkpoint,
    softmax,
    train,
)


def random_tokens(rng, n):
    return rng.integers(0, 13, size=(n, 16))


def test_zero_output_weights_give_uniform_distribution():
    model = ChordClassifier(hidden_size=8, seed=0)
    model.params["Wo"][:] = 0.0
    model.params["bo"][:] = 0.0
    probs = model.predict_proba([0] * 16)
    assert probs == pytest.approx(np.full(7, 1 / 7), abs=1e-12)


def test_probabilities_sum_to_one():
    model = ChordClassifier(hidden_size=8, seed=3)
    rng = np.random.default_rng(0)
    for tokens in random_tokens(rng, 20):
        probs = model.predict_proba(tokens)
        assert abs(probs.sum() - 1.0) < 1e-9
        assert (probs >= 0).all()


def test_initial_loss_near_ln7():
    model = ChordClassifier(hidden_size=80, seed=1)
    rng = np.random.default_rng(1)
    tokens = random_tokens(rng, 64)
    labels = rng.integers(0, 7, size=64)
    loss, _ = model.loss_and_grads(tokens, labels)
    assert loss == pytest.approx(np.log(7), abs=0.1)


def test_transposition_consistency_through_tokens():
    # mod-12 compression makes +12 semitone shifts literally the same input
    from pianoduet.smf import NoteEvent
    from pianoduet.tokens import tokenize_bar

    model = ChordClassifier(hidden_size=8, seed=2)
    events = [NoteEvent(60 + i, 80, i * 0.1667, (i + 1) * 0.1667) for i in range(4)]
    shifted = [NoteEvent(e.pitch + 12, 80, e.t_press, e.t_release) for e in events]
    p1 = model.predict_proba(tokenize_bar(events, 0.0, 90.0).tokens)
    p2 = model.predict_proba(tokenize_bar(shifted, 0.0, 90.0).tokens)
    assert (p1 == p2).all()


def test_overfit_three_sample_toy_set():
    rng = np.random.default_rng(5)
    samples = [
        (tuple(rng.integers(0, 13, 16)), CHORD_LABELS[i]) for i in range(3)
    ]
    cfg = TrainConfig(
        batch_size=3, learning_rate=0.01, max_epochs=500, seed=5, dropout=0.0,
        split=(1.0, 0.0, 0.0), patience=500, stop_at_perfect=False,
    )
    model, _ = train(samples, cfg, hidden_size=24)
    for tokens, label in samples:
        probs = model.predict_proba(tokens)
        assert probs[CHORD_LABELS.index(label)] > 0.99


def test_memorize_64_random_pairs():
    rng = np.random.default_rng(11)
    samples = [
        (tuple(rng.integers(0, 13, 16)), CHORD_LABELS[rng.integers(0, 7)])
        for _ in range(64)
    ]
    cfg = TrainConfig(
        batch_size=256, max_epochs=500, seed=11, dropout=0.0,
        split=(1.0, 0.0, 0.0), patience=500,
    )
    model, history = train(samples, cfg)
    assert history.train_accuracy[-1] == 1.0
    assert history.epochs_run <= 500


def test_gradient_of_output_bias_with_zero_weights():
    model = ChordClassifier(hidden_size=4, seed=0)
    for name in model.params:
        model.params[name][:] = 0.0
    tokens = np.arange(16) % 13
    label = 3
    _, grads = model.loss_and_grads(tokens.reshape(1, -1), [label])
    expected = np.full(7, 1 / 7)
    expected[label] -= 1.0
    assert grads["bo"] == pytest.approx(expected, abs=1e-12)


def test_gradient_check_small_model():
    model = ChordClassifier(hidden_size=4, seed=9)
    rng = np.random.default_rng(9)
    tokens = rng.integers(0, 13, 16)
    assert gradient_check(model, tokens, label=2) < 1e-4


def test_gradient_check_step_sweep_v_shape():
    model = ChordClassifier(hidden_size=3, seed=4)
    rng = np.random.default_rng(4)
    tokens = rng.integers(0, 13, 16)
    errs = {eps: gradient_check(model, tokens, 5, eps=eps) for eps in (1e-3, 1e-5, 1e-7)}
    assert errs[1e-5] < errs[1e-3]
    assert errs[1e-5] < errs[1e-7]


def test_training_is_deterministic_for_fixed_seed():
    rng = np.random.default_rng(21)
    samples = [
        (tuple(rng.integers(0, 13, 16)), CHORD_LABELS[rng.integers(0, 7)])
        for _ in range(40)
    ]
    cfg = TrainConfig(batch_size=16, max_epochs=5, seed=7, patience=500)
    model_a, hist_a = train(samples, cfg, hidden_size=10)
    model_b, hist_b = train(samples, cfg, hidden_size=10)
    assert hist_a.train_loss == hist_b.train_loss
    for name in model_a.params:
        assert (model_a.params[name] == model_b.params[name]).all()


def test_train_rejects_empty_dataset():
    with pytest.raises(ValueError, match="empty"):
        train([], TrainConfig())


def test_checkpoint_roundtrip(tmp_path):
    model = ChordClassifier(hidden_size=6, seed=13)
    path = tmp_path / "model.npz"
    save_checkpoint(model, path, config_hash="abc123")
    loaded = load_checkpoint(path)
    rng = np.random.default_rng(0)
    tokens = rng.integers(0, 13, 16)
    assert (loaded.predict_proba(tokens) == model.predict_proba(tokens)).all()


def test_checkpoint_rejects_shape_mismatch(tmp_path):
    model = ChordClassifier(hidden_size=6, seed=13)
    path = tmp_path / "model.npz"
    save_checkpoint(model, path)
    import numpy as np_

    with np_.load(path) as data:
        contents = {k: data[k] for k in data.files}
    contents["Wo"] = contents["Wo"][:4]  # corrupt one shape
    np_.savez(path, **contents)
    with pytest.raises(ValueError, match="shape mismatch"):
        load_checkpoint(path)


def test_one_hot_rejects_bad_tokens():
    with pytest.raises(ValueError):
        one_hot_tokens(np.array([[13] + [0] * 15]))
    with pytest.raises(ValueError):
        one_hot_tokens(np.array([[0] * 15]))


def test_softmax_stability():
    big = softmax(np.array([1e4, 0.0, -1e4]))
    assert big[0] == pytest.approx(1.0)
    assert np.isfinite(big).all()
