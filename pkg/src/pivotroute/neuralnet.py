"""Path-quality regressor: embedding table + multi-layer LSTM + scalar head.

Everything is explicit numpy at double precision, no autodiff framework.
The recurrence per layer and step, with packed gate order [i, f, g, o]:

    z = x_t Wx + h_{t-1} Wh + b
    i, f, o = sigmoid(z_i), sigmoid(z_f), sigmoid(z_o)
    g = tanh(z_g)
    c_t = f * c_{t-1} + i * g
    h_t = o * tanh(c_t)

States start at zero for every sequence. The prediction is w . h_last + b
of the top layer, unbounded (scores are used for ranking; clamp only for
display). Backpropagation through time returns exact gradients for every
parameter, including the embedding rows a sequence touches; hop tokens
send half their embedding gradient to each constituent language.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Sequence

import numpy as np

from .featurizer import EMB_DIM, FEATURE_DIM, FeatureSequence
from .pathspace import Path, rank_paths


@dataclass
class LstmLayer:
    wx: np.ndarray  # (input_dim, 4H)
    wh: np.ndarray  # (H, 4H)
    b: np.ndarray   # (4H,)

    @property
    def hidden_dim(self) -> int:
        return self.wh.shape[0]


@dataclass
class LtrModel:
    embeddings: np.ndarray  # (num_languages, EMB_DIM)
    layers: list[LstmLayer]
    head_w: np.ndarray      # (H,)
    head_b: np.ndarray      # (1,)

    @property
    def hidden_dim(self) -> int:
        return self.head_w.shape[0]

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def num_languages(self) -> int:
        return self.embeddings.shape[0]


def param_items(model: LtrModel) -> list[tuple[str, np.ndarray]]:
    """Named live parameter tensors, in a fixed order."""
    items = [("embeddings", model.embeddings)]
    for k, layer in enumerate(model.layers):
        items += [(f"lstm{k}.wx", layer.wx), (f"lstm{k}.wh", layer.wh), (f"lstm{k}.b", layer.b)]
    items += [("head.w", model.head_w), ("head.b", model.head_b)]
    return items


def init_model(
    num_languages: int,
    hidden_dim: int = 6,
    num_layers: int = 2,
    seed: int = 0,
    emb_dim: int = EMB_DIM,
) -> LtrModel:
    """Fresh model with all parameters drawn uniformly from [-0.1, 0.1]."""
    if num_languages < 2 or hidden_dim < 1 or num_layers < 1 or emb_dim < 1:
        raise ValueError("invalid model dimensions")
    rng = np.random.default_rng(seed)

    def u(*shape):
        return rng.uniform(-0.1, 0.1, size=shape)

    embeddings = u(num_languages, emb_dim)
    layers = []
    in_dim = emb_dim + 1
    for _ in range(num_layers):
        layers.append(LstmLayer(wx=u(in_dim, 4 * hidden_dim), wh=u(hidden_dim, 4 * hidden_dim), b=u(4 * hidden_dim)))
        in_dim = hidden_dim
    return LtrModel(embeddings=embeddings, layers=layers, head_w=u(hidden_dim), head_b=u(1))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def _stack_features(features: Sequence[FeatureSequence]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lengths = {len(fs) for fs in features}
    if len(lengths) != 1:
        raise ValueError("batched sequences must share one length")
    idx_a = np.stack([fs.idx_a for fs in features], axis=1)
    idx_b = np.stack([fs.idx_b for fs in features], axis=1)
    bleu = np.stack([fs.bleu for fs in features], axis=1)
    return idx_a, idx_b, bleu


def _forward_core(model: LtrModel, idx_a: np.ndarray, idx_b: np.ndarray, bleu: np.ndarray):
    """Batched forward over (T, B) index/feature arrays. Returns preds and cache."""
    emb = (model.embeddings[idx_a] + model.embeddings[idx_b]) * 0.5  # (T,B,E)
    x = np.concatenate([emb, bleu[..., None]], axis=2)               # (T,B,E+1)
    if x.shape[2] != model.layers[0].wx.shape[0]:
        raise ValueError(
            f"feature dim {x.shape[2]} does not match model input dim {model.layers[0].wx.shape[0]}"
        )
    t_len, batch = x.shape[0], x.shape[1]
    layer_caches = []
    inp = x
    for layer in model.layers:
        h_dim = layer.hidden_dim
        hs = np.zeros((t_len + 1, batch, h_dim))
        cs = np.zeros((t_len + 1, batch, h_dim))
        gi = np.empty((t_len, batch, h_dim))
        gf = np.empty((t_len, batch, h_dim))
        gg = np.empty((t_len, batch, h_dim))
        go = np.empty((t_len, batch, h_dim))
        tc = np.empty((t_len, batch, h_dim))
        for t in range(t_len):
            z = inp[t] @ layer.wx + hs[t] @ layer.wh + layer.b
            gi[t] = _sigmoid(z[:, :h_dim])
            gf[t] = _sigmoid(z[:, h_dim:2 * h_dim])
            gg[t] = np.tanh(z[:, 2 * h_dim:3 * h_dim])
            go[t] = _sigmoid(z[:, 3 * h_dim:])
            cs[t + 1] = gf[t] * cs[t] + gi[t] * gg[t]
            tc[t] = np.tanh(cs[t + 1])
            hs[t + 1] = go[t] * tc[t]
        layer_caches.append({"x": inp, "hs": hs, "cs": cs, "i": gi, "f": gf, "g": gg, "o": go, "tc": tc})
        inp = hs[1:]
    h_last = inp[-1]                                   # (B,H)
    preds = h_last @ model.head_w + model.head_b[0]    # (B,)
    cache = {"layers": layer_caches, "h_last": h_last, "idx_a": idx_a, "idx_b": idx_b}
    return preds, cache


def _backward_core(model: LtrModel, cache: dict, dpred: np.ndarray) -> dict[str, np.ndarray]:
    """Exact gradients given d(loss)/d(pred) per batch element."""
    grads: dict[str, np.ndarray] = {}
    h_last = cache["h_last"]
    grads["head.w"] = h_last.T @ dpred
    grads["head.b"] = np.array([dpred.sum()])

    top = cache["layers"][-1]
    t_len, batch, h_dim = top["i"].shape
    d_out = np.zeros((t_len, batch, h_dim))
    d_out[-1] = dpred[:, None] * model.head_w[None, :]

    for k in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[k]
        lc = cache["layers"][k]
        x, hs, cs = lc["x"], lc["hs"], lc["cs"]
        gi, gf, gg, go, tc = lc["i"], lc["f"], lc["g"], lc["o"], lc["tc"]
        h_dim = layer.hidden_dim
        d_wx = np.zeros_like(layer.wx)
        d_wh = np.zeros_like(layer.wh)
        d_b = np.zeros_like(layer.b)
        d_x = np.zeros_like(x)
        dh_next = np.zeros((batch, h_dim))
        dc_next = np.zeros((batch, h_dim))
        for t in range(t_len - 1, -1, -1):
            dh = d_out[t] + dh_next
            do = dh * tc[t]
            dc = dc_next + dh * go[t] * (1.0 - tc[t] ** 2)
            di = dc * gg[t]
            dg = dc * gi[t]
            df = dc * cs[t]
            dc_next = dc * gf[t]
            dz = np.concatenate(
                [
                    di * gi[t] * (1.0 - gi[t]),
                    df * gf[t] * (1.0 - gf[t]),
                    dg * (1.0 - gg[t] ** 2),
                    do * go[t] * (1.0 - go[t]),
                ],
                axis=1,
            )
            d_wx += x[t].T @ dz
            d_wh += hs[t].T @ dz
            d_b += dz.sum(axis=0)
            d_x[t] = dz @ layer.wx.T
            dh_next = dz @ layer.wh.T
        grads[f"lstm{k}.wx"] = d_wx
        grads[f"lstm{k}.wh"] = d_wh
        grads[f"lstm{k}.b"] = d_b
        d_out = d_x

    emb_dim = model.embeddings.shape[1]
    d_emb_inputs = d_out[..., :emb_dim] * 0.5  # hop tokens average two rows
    g_emb = np.zeros_like(model.embeddings)
    np.add.at(g_emb, cache["idx_a"], d_emb_inputs)
    np.add.at(g_emb, cache["idx_b"], d_emb_inputs)
    grads["embeddings"] = g_emb
    return grads


def forward(model: LtrModel, features: FeatureSequence) -> float:
    """Predicted normalized path quality for one feature sequence.

    Embedding dimensions are read from the model's current table; the
    sequence contributes its token structure and quality features.
    """
    preds, _ = _forward_core(
        model, features.idx_a[:, None], features.idx_b[:, None], features.bleu[:, None]
    )
    return float(preds[0])


def forward_trace(model: LtrModel, features: FeatureSequence) -> list[dict[str, np.ndarray]]:
    """Per-layer gate activations of a forward pass, for diagnostics."""
    _, cache = _forward_core(
        model, features.idx_a[:, None], features.idx_b[:, None], features.bleu[:, None]
    )
    return [
        {k: lc[k][:, 0, :] for k in ("i", "f", "g", "o", "tc")}
        for lc in cache["layers"]
    ]


def predict_many(model: LtrModel, features: Sequence[FeatureSequence]) -> np.ndarray:
    """Predictions for many sequences, batched internally by length."""
    out = np.empty(len(features))
    by_len: dict[int, list[int]] = {}
    for i, fs in enumerate(features):
        by_len.setdefault(len(fs), []).append(i)
    for _, idxs in sorted(by_len.items()):
        batch = [features[i] for i in idxs]
        preds, _ = _forward_core(model, *_stack_features(batch))
        out[idxs] = preds
    return out


def loss_mse(pred: float, label: float) -> float:
    if not (0.0 <= label <= 1.0):
        raise ValueError(f"label {label} outside [0, 1]")
    return (pred - label) ** 2


def backward(model: LtrModel, features: FeatureSequence, label: float) -> dict[str, np.ndarray]:
    """Gradient of loss_mse(forward(model, features), label) for every parameter."""
    preds, cache = _forward_core(
        model, features.idx_a[:, None], features.idx_b[:, None], features.bleu[:, None]
    )
    dpred = np.array([2.0 * (preds[0] - label)])
    return _backward_core(model, cache, dpred)


def grad_check(model: LtrModel, features: FeatureSequence, label: float, epsilon: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients."""
    analytic = backward(model, features, label)
    worst = 0.0
    for name, arr in param_items(model):
        flat = arr.reshape(-1)
        a_flat = analytic[name].reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + epsilon
            lp = loss_mse(forward(model, features), label)
            flat[j] = orig - epsilon
            lm = loss_mse(forward(model, features), label)
            flat[j] = orig
            numeric = (lp - lm) / (2.0 * epsilon)
            rel = abs(a_flat[j] - numeric) / max(abs(a_flat[j]), abs(numeric), 1e-8)
            worst = max(worst, rel)
    return worst


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 200
    batch_size: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


@dataclass
class TrainReport:
    train_mse: list[float]
    dev_top1: list[float]
    selected_epoch: int  # index into the per-epoch lists
    initial_mse: float


@dataclass
class DevPair:
    """One development pair: all candidate paths with oracle labels.

    `eligible` masks the paths the learned router may choose (rare-pivot
    filtering); the true best is always taken over the full candidate set.
    """

    paths: list[Path]
    features: list[FeatureSequence]
    labels: np.ndarray
    eligible: np.ndarray


def dev_top1(model: LtrModel, dev_pairs: Sequence[DevPair]) -> float:
    """Fraction of dev pairs whose top-scored eligible path is the true best."""
    if not dev_pairs:
        raise ValueError("empty dev set")
    hits = 0
    for dp in dev_pairs:
        truth = rank_paths(dp.paths, list(dp.labels))[0]
        elig = np.flatnonzero(dp.eligible)
        preds = predict_many(model, [dp.features[i] for i in elig])
        sub = rank_paths([dp.paths[i] for i in elig], list(preds))[0]
        hits += int(elig[sub] == truth)
    return hits / len(dev_pairs)


class _Adam:
    def __init__(self, params: list[tuple[str, np.ndarray]]):
        self.m = {name: np.zeros_like(arr) for name, arr in params}
        self.v = {name: np.zeros_like(arr) for name, arr in params}
        self.t = 0

    def step(self, params: list[tuple[str, np.ndarray]], grads: dict[str, np.ndarray], cfg: TrainConfig):
        self.t += 1
        b1, b2 = cfg.beta1, cfg.beta2
        for name, arr in params:
            g = grads[name]
            self.m[name] = b1 * self.m[name] + (1.0 - b1) * g
            self.v[name] = b2 * self.v[name] + (1.0 - b2) * g * g
            m_hat = self.m[name] / (1.0 - b1 ** self.t)
            v_hat = self.v[name] / (1.0 - b2 ** self.t)
            arr -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)


def _dataset_mse(model: LtrModel, samples: Sequence[tuple[FeatureSequence, float]]) -> float:
    preds = predict_many(model, [fs for fs, _ in samples])
    ys = np.array([y for _, y in samples])
    return float(np.mean((preds - ys) ** 2))


def train(
    model: LtrModel,
    labeled_paths: Sequence[tuple[FeatureSequence, float]],
    dev_pairs: Sequence[DevPair],
    config: TrainConfig,
) -> tuple[LtrModel, TrainReport]:
    """Mini-batch Adam on MSE; keeps the epoch with the best dev top-1.

    Labels are normalized quality in [0, 1]. Batches are formed within
    same-length groups from a single seeded shuffle stream, so runs are
    deterministic per seed. Ties in dev top-1 keep the earliest epoch.
    Without dev pairs the final epoch's parameters are kept.
    """
    if not labeled_paths:
        raise ValueError("empty training data")
    for _, y in labeled_paths:
        if not (0.0 <= y <= 1.0):
            raise ValueError(f"label {y} outside [0, 1]")

    rng = np.random.default_rng(config.seed)
    params = param_items(model)
    adam = _Adam(params)
    by_len: dict[int, np.ndarray] = {}
    for i, (fs, _) in enumerate(labeled_paths):
        by_len.setdefault(len(fs), []).append(i)  # type: ignore[arg-type]
    by_len = {k: np.array(v) for k, v in sorted(by_len.items())}
    stacked = {
        k: (_stack_features([labeled_paths[i][0] for i in idxs]), np.array([labeled_paths[i][1] for i in idxs]))
        for k, idxs in by_len.items()
    }

    initial_mse = _dataset_mse(model, labeled_paths)
    train_mse: list[float] = []
    dev_acc: list[float] = []
    best: tuple[float, int, dict[str, np.ndarray]] | None = None

    for _epoch in range(config.epochs):
        batches: list[tuple[int, np.ndarray]] = []
        for length, idxs in by_len.items():
            perm = rng.permutation(idxs.size)
            for start in range(0, idxs.size, config.batch_size):
                batches.append((length, perm[start:start + config.batch_size]))
        order = rng.permutation(len(batches))

        total_se = 0.0
        count = 0
        for bi in order:
            length, rows = batches[bi]
            (idx_a, idx_b, bleu), ys = stacked[length]
            preds, cache = _forward_core(model, idx_a[:, rows], idx_b[:, rows], bleu[:, rows])
            errs = preds - ys[rows]
            batch_loss = float(np.mean(errs ** 2))
            if not np.isfinite(batch_loss):
                raise ValueError("training diverged: non-finite loss")
            grads = _backward_core(model, cache, 2.0 * errs / errs.size)
            adam.step(params, grads, config)
            total_se += batch_loss * errs.size
            count += errs.size
        train_mse.append(total_se / count)

        if dev_pairs:
            acc = dev_top1(model, dev_pairs)
            dev_acc.append(acc)
            if best is None or acc > best[0]:
                best = (acc, _epoch, {name: arr.copy() for name, arr in params})
        else:
            dev_acc.append(0.0)

    if best is not None:
        for name, arr in params:
            arr[...] = best[2][name]
        selected = best[1]
    else:
        selected = config.epochs - 1
    return model, TrainReport(train_mse=train_mse, dev_top1=dev_acc, selected_epoch=selected, initial_mse=initial_mse)


def save_model(model: LtrModel, path: str | FsPath) -> None:
    """Checkpoint every parameter tensor with shape metadata as JSON."""
    blob = {
        "kind": "ltr-model",
        "num_languages": model.num_languages,
        "emb_dim": model.embeddings.shape[1],
        "hidden_dim": model.hidden_dim,
        "num_layers": model.num_layers,
        "params": {
            name: {"shape": list(arr.shape), "data": arr.reshape(-1).tolist()}
            for name, arr in param_items(model)
        },
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(blob, fh, sort_keys=True)
        fh.write("\n")


def load_model(path: str | FsPath) -> LtrModel:
    with open(path, "r", encoding="utf-8") as fh:
        blob = json.load(fh)
    if blob.get("kind") != "ltr-model":
        raise ValueError(f"{path}: not a model checkpoint")
    model = init_model(
        num_languages=blob["num_languages"],
        hidden_dim=blob["hidden_dim"],
        num_layers=blob["num_layers"],
        emb_dim=blob["emb_dim"],
        seed=0,
    )
    for name, arr in param_items(model):
        entry = blob["params"][name]
        data = np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
        if data.shape != arr.shape:
            raise ValueError(f"checkpoint tensor {name} has shape {data.shape}, expected {arr.shape}")
        arr[...] = data
    return model
