"""Chord classifier: a two-layer LSTM over 16 melody tokens, from scratch.

Everything is plain numpy at 64-bit precision: forward pass, full
backpropagation through time, Adam updates and checkpointing.  The
backward pass is hand-written and validated against central finite
differences (see gradient_check), so keep any change to the forward
math mirrored there.

Tokens 0..12 are one-hot encoded; the network outputs a softmax over the
seven chord classes in accompany.CHORD_LABELS.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from pianoduet.accompany import CHORD_LABELS

VOCAB_SIZE = 13  # token values 0..12
SEQ_LEN = 16
N_CLASSES = len(CHORD_LABELS)


@dataclass
class TrainConfig:
    batch_size: int = 256
    learning_rate: float = 0.001
    max_epochs: int = 500
    split: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0
    dropout: float = 0.2
    patience: int = 40  # epochs without validation improvement before stopping
    stop_at_perfect: bool = True  # stop once train and validation hit 100%
    log_every: int = 0  # epochs between progress prints; 0 silences

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ValueError("split fractions must sum to 1")


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def one_hot_tokens(batch: np.ndarray) -> np.ndarray:
    """(B, 16) integer tokens -> (B, 16, 13) one-hot float64."""
    batch = np.asarray(batch, dtype=np.intp)
    if batch.ndim == 1:
        batch = batch[None, :]
    if batch.shape[1] != SEQ_LEN:
        raise ValueError(f"expected {SEQ_LEN} tokens per bar, got {batch.shape[1]}")
    if batch.min() < 0 or batch.max() >= VOCAB_SIZE:
        raise ValueError("token values must lie in 0..12")
    out = np.zeros((batch.shape[0], SEQ_LEN, VOCAB_SIZE))
    rows = np.arange(batch.shape[0])[:, None]
    cols = np.arange(SEQ_LEN)[None, :]
    out[rows, cols, batch] = 1.0
    return out


class ChordClassifier:
    """Stacked LSTM -> linear -> softmax over the chord vocabulary."""

    def __init__(self, hidden_size: int = 80, num_layers: int = 2,
                 dropout: float = 0.2, seed: int = 0):
        self.hidden_size = hidden_size
        self.num_layers = num_layers
        self.dropout = dropout
        self.seed = seed
        self.params: dict[str, np.ndarray] = {}
        rng = np.random.default_rng(seed)
        in_dim = VOCAB_SIZE
        for layer in range(num_layers):
            h = hidden_size
            self.params[f"Wx{layer}"] = self._uniform(rng, in_dim, (in_dim, 4 * h))
            self.params[f"Wh{layer}"] = self._uniform(rng, h, (h, 4 * h))
            bias = np.zeros(4 * h)
            bias[h : 2 * h] = 1.0  # forget gate opens by default
            self.params[f"b{layer}"] = bias
            in_dim = h
        self.params["Wo"] = self._uniform(rng, hidden_size, (hidden_size, N_CLASSES))
        self.params["bo"] = np.zeros(N_CLASSES)

    @staticmethod
    def _uniform(rng, fan_in, shape):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    # ----- forward -----

    def _forward(self, X: np.ndarray, dropout_rng: np.random.Generator | None = None):
        """Run the network on one-hot input (B, T, 13); returns (logits, cache)."""
        B = X.shape[0]
        H = self.hidden_size
        cache = {"X": X, "layers": [], "masks": []}
        inputs = X
        for layer in range(self.num_layers):
            Wx = self.params[f"Wx{layer}"]
            Wh = self.params[f"Wh{layer}"]
            b = self.params[f"b{layer}"]
            h = np.zeros((B, H))
            c = np.zeros((B, H))
            steps = []
            hs = np.empty((B, SEQ_LEN, H))
            for t in range(SEQ_LEN):
                x_t = inputs[:, t, :]
                z = x_t @ Wx + h @ Wh + b
                i = _sigmoid(z[:, :H])
                f = _sigmoid(z[:, H : 2 * H])
                g = np.tanh(z[:, 2 * H : 3 * H])
                o = _sigmoid(z[:, 3 * H :])
                c_prev, h_prev = c, h
                c = f * c_prev + i * g
                tanh_c = np.tanh(c)
                h = o * tanh_c
                hs[:, t, :] = h
                steps.append((x_t, h_prev, c_prev, i, f, g, o, tanh_c))
            cache["layers"].append(steps)
            if dropout_rng is not None and self.dropout > 0 and layer < self.num_layers - 1:
                keep = 1.0 - self.dropout
                mask = (dropout_rng.random(hs.shape) < keep) / keep
                hs = hs * mask
                cache["masks"].append(mask)
            else:
                cache["masks"].append(None)
            inputs = hs
        h_last = inputs[:, -1, :]
        cache["h_last"] = h_last
        logits = h_last @ self.params["Wo"] + self.params["bo"]
        return logits, cache

    def predict_proba(self, tokens) -> np.ndarray:
        """Probability vector over the 7 chord classes for one bar."""
        logits, _ = self._forward(one_hot_tokens(np.asarray(tokens)))
        return softmax(logits)[0]

    def predict_batch(self, token_rows: np.ndarray) -> np.ndarray:
        logits, _ = self._forward(one_hot_tokens(token_rows))
        return softmax(logits)

    # ----- backward -----

    def _backward(self, cache, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        H = self.hidden_size
        grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        grads["Wo"] = cache["h_last"].T @ dlogits
        grads["bo"] = dlogits.sum(axis=0)

        B = dlogits.shape[0]
        d_out = np.zeros((B, SEQ_LEN, H))
        d_out[:, -1, :] = dlogits @ self.params["Wo"].T

        for layer in reversed(range(self.num_layers)):
            mask = cache["masks"][layer]
            if mask is not None:
                d_out = d_out * mask
            steps = cache["layers"][layer]
            Wx = self.params[f"Wx{layer}"]
            Wh = self.params[f"Wh{layer}"]
            dWx = np.zeros_like(Wx)
            dWh = np.zeros_like(Wh)
            db = np.zeros_like(self.params[f"b{layer}"])
            d_in = np.zeros((B, SEQ_LEN, Wx.shape[0]))
            dh_next = np.zeros((B, H))
            dc_next = np.zeros((B, H))
            for t in reversed(range(SEQ_LEN)):
                x_t, h_prev, c_prev, i, f, g, o, tanh_c = steps[t]
                dh = d_out[:, t, :] + dh_next
                do = dh * tanh_c
                dc = dc_next + dh * o * (1.0 - tanh_c**2)
                di = dc * g
                df = dc * c_prev
                dg = dc * i
                dc_next = dc * f
                dz = np.concatenate(
                    [
                        di * i * (1.0 - i),
                        df * f * (1.0 - f),
                        dg * (1.0 - g**2),
                        do * o * (1.0 - o),
                    ],
                    axis=1,
                )
                dWx += x_t.T @ dz
                dWh += h_prev.T @ dz
                db += dz.sum(axis=0)
                dh_next = dz @ Wh.T
                d_in[:, t, :] = dz @ Wx.T
            grads[f"Wx{layer}"] = dWx
            grads[f"Wh{layer}"] = dWh
            grads[f"b{layer}"] = db
            d_out = d_in
        return grads

    def loss_and_grads(self, token_rows, labels,
                       dropout_rng: np.random.Generator | None = None):
        """Mean cross-entropy and parameter gradients for a batch."""
        X = one_hot_tokens(token_rows)
        y = np.asarray(labels, dtype=np.intp)
        logits, cache = self._forward(X, dropout_rng)
        B = X.shape[0]
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        loss = -log_probs[np.arange(B), y].mean()
        dlogits = (np.exp(log_probs) - np.eye(N_CLASSES)[y]) / B
        return loss, self._backward(cache, dlogits)


def gradient_check(model: ChordClassifier, tokens, label, eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    The error is measured per parameter tensor as ||analytic - numeric|| /
    max(||analytic||, ||numeric||) and the maximum over tensors returned.
    Dropout is bypassed so both paths evaluate the same deterministic loss.
    Intended for small models; cost is two forward passes per parameter.
    """
    tokens = np.asarray(tokens).reshape(1, SEQ_LEN)
    labels = np.asarray([label])
    _, grads = model.loss_and_grads(tokens, labels)

    def loss_only():
        loss, _ = model.loss_and_grads(tokens, labels)
        return loss

    worst = 0.0
    for name, values in model.params.items():
        flat = values.ravel()
        numeric = np.empty(flat.size)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + eps
            up = loss_only()
            flat[idx] = orig - eps
            down = loss_only()
            flat[idx] = orig
            numeric[idx] = (up - down) / (2 * eps)
        analytic = grads[name].ravel()
        denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
        worst = max(worst, float(np.linalg.norm(analytic - numeric) / denom))
    return worst


class _Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        correct1 = 1.0 - self.beta1**self.t
        correct2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            m_hat = self.m[k] / correct1
            v_hat = self.v[k] / correct2
            params[k] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class TrainResult:
    train_loss: list[float] = field(default_factory=list)
    train_accuracy: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)
    best_epoch: int = -1
    epochs_run: int = 0


def _accuracy(model, tokens, labels):
    if len(labels) == 0:
        return float("nan")
    probs = model.predict_batch(tokens)
    return float((probs.argmax(axis=1) == labels).mean())


def split_dataset(tokens: np.ndarray, labels: np.ndarray, cfg: TrainConfig):
    """Shuffle then split into train/validation/test index arrays (8:1:1)."""
    n = len(labels)
    order = np.random.default_rng(cfg.seed).permutation(n)
    n_train = int(round(cfg.split[0] * n))
    n_val = int(round(cfg.split[1] * n))
    return order[:n_train], order[n_train : n_train + n_val], order[n_train + n_val :]


def train(samples, cfg: TrainConfig, hidden_size: int = 80, num_layers: int = 2):
    """Fit a classifier on (tokens, label) samples; returns (model, history).

    The dataset is shuffled and split 8:1:1; the returned model carries the
    parameters of the best validation epoch.  Labels may be chord names or
    class indices.
    """
    tokens, labels = samples_to_arrays(samples)
    if len(labels) == 0:
        raise ValueError("empty dataset")
    idx_train, idx_val, idx_test = split_dataset(tokens, labels, cfg)
    if len(idx_train) == 0:
        raise ValueError("training split is empty")

    model = ChordClassifier(hidden_size, num_layers, cfg.dropout, cfg.seed)
    optimizer = _Adam(model.params, cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed + 1)
    history = TrainResult()
    best_val = -1.0
    best_loss = np.inf
    best_params = None
    stale = 0

    for epoch in range(cfg.max_epochs):
        order = rng.permutation(len(idx_train))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            rows = idx_train[order[start : start + cfg.batch_size]]
            loss, grads = model.loss_and_grads(tokens[rows], labels[rows], rng)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"training diverged: non-finite loss at epoch {epoch}, "
                    f"batch starting {start}"
                )
            optimizer.step(model.params, grads)
            epoch_loss += loss * len(rows)
        epoch_loss /= len(idx_train)

        train_acc = _accuracy(model, tokens[idx_train], labels[idx_train])
        val_acc = (
            _accuracy(model, tokens[idx_val], labels[idx_val])
            if len(idx_val)
            else train_acc
        )
        history.train_loss.append(epoch_loss)
        history.train_accuracy.append(train_acc)
        history.val_accuracy.append(val_acc)
        if cfg.log_every and epoch % cfg.log_every == 0:
            print(
                f"epoch {epoch:4d}  loss {epoch_loss:.4f}  "
                f"train {train_acc:.4f}  val {val_acc:.4f}"
            )

        # best checkpoint by validation accuracy, ties broken by lower loss
        if val_acc > best_val or (val_acc == best_val and epoch_loss < best_loss):
            if val_acc > best_val:
                stale = 0
            best_val = val_acc
            best_loss = epoch_loss
            best_params = {k: v.copy() for k, v in model.params.items()}
            history.best_epoch = epoch
        else:
            stale += 1
        history.epochs_run = epoch + 1
        if cfg.stop_at_perfect and val_acc == 1.0 and train_acc == 1.0:
            break
        if stale >= cfg.patience:
            break

    if best_params is not None:
        model.params = best_params
    return model, history


def samples_to_arrays(samples):
    """Normalize (tokens, label) pairs into int arrays; labels by name or index."""
    token_rows, label_ids = [], []
    for item in samples:
        tokens, label = item
        token_rows.append(tuple(int(t) for t in tokens))
        if isinstance(label, str):
            label_ids.append(CHORD_LABELS.index(label))
        else:
            label_ids.append(int(label))
    return np.asarray(token_rows, dtype=np.intp), np.asarray(label_ids, dtype=np.intp)


# ----- checkpointing -----

CHECKPOINT_VERSION = 1


def save_checkpoint(model: ChordClassifier, path, config_hash: str = "",
                    seed: int | None = None):
    """Write weights plus a self-describing JSON header into an .npz file."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "hidden_size": model.hidden_size,
        "num_layers": model.num_layers,
        "dropout": model.dropout,
        "seed": model.seed if seed is None else seed,
        "config_hash": config_hash,
        "labels": list(CHORD_LABELS),
    }
    np.savez(path, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
             **model.params)


def load_checkpoint(path) -> ChordClassifier:
    """Load a checkpoint, rejecting shape or metadata mismatches."""
    with np.load(path) as data:
        if "__meta__" not in data:
            raise ValueError(f"{path}: not a pianoduet checkpoint (missing header)")
        meta = json.loads(bytes(data["__meta__"].tobytes()).decode())
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {meta.get('version')}")
        model = ChordClassifier(
            hidden_size=int(meta["hidden_size"]),
            num_layers=int(meta["num_layers"]),
            dropout=float(meta["dropout"]),
            seed=int(meta["seed"]),
        )
        for name, expected in model.params.items():
            if name not in data:
                raise ValueError(f"{path}: checkpoint missing parameter {name}")
            stored = data[name]
            if stored.shape != expected.shape:
                raise ValueError(
                    f"{path}: shape mismatch for {name}: "
                    f"checkpoint {stored.shape} vs model {expected.shape}"
                )
            model.params[name] = stored.astype(np.float64)
    return model
