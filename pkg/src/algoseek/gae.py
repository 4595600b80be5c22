"""Graph autoencoder over ICFGs.

Two-layer graph-convolution encoder (ReLU on the first layer, linear second),
inner-product edge decoder, negative-sampled cross-entropy training with Adam,
and pure inference producing final node vectors Z concatenated with the input
features. Everything is plain numpy with hand-derived gradients so runs are
bitwise deterministic for a given seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

_CLAMP = 1e-12


class NonSquare(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class EmptyBatch(DataError):
    pass


class InsufficientEdges(DataError):
    pass


class DimensionMismatch(DataError):
    pass


@dataclass
class GaeModel:
    w0: np.ndarray  # d_in x h
    w1: np.ndarray  # h x h
    seed: int = 0
    config_hash: str = ""

    @property
    def d_in(self) -> int:
        return self.w0.shape[0]

    @property
    def h(self) -> int:
        return self.w0.shape[1]


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    edge_batch_size: int = 2048
    split_ratio: float = 0.8
    max_epochs: int = 200
    patience: int = 10
    hidden_dim: int = 512
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8

    def __post_init__(self):
        if not 0 < self.split_ratio < 1:
            raise ValueError("split_ratio must lie in (0, 1)")
        if self.learning_rate <= 0 or self.edge_batch_size < 1:
            raise ValueError("bad training config")


def normalize_adjacency(a: np.ndarray) -> np.ndarray:
    """Symmetrize, add self-loops, and scale by inverse sqrt degrees."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSquare(f"adjacency must be square, got {a.shape}")
    sym = ((a + a.T) > 0).astype(np.float64)
    np.fill_diagonal(sym, 1.0)
    deg = sym.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(deg)
    return sym * inv_sqrt[:, None] * inv_sqrt[None, :]


def encode(model: GaeModel, x: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Z = Ahat . relu(Ahat . X . W0) . W1"""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.d_in:
        raise ShapeMismatch(
            f"features have width {x.shape[-1] if x.ndim == 2 else '?'}, "
            f"model expects {model.d_in}")
    if a.shape[0] != x.shape[0]:
        raise ShapeMismatch("adjacency and features disagree on node count")
    ahat = normalize_adjacency(a)
    hidden = np.maximum(ahat @ x @ model.w0, 0.0)
    return ahat @ hidden @ model.w1


def decode_edge(z: np.ndarray, i: int, j: int) -> float:
    n = z.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise DataError(f"node index out of range: {i}, {j}")
    return float(_sigmoid(z[i] @ z[j]))


def _sigmoid(x):
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                    np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


def loss(z: np.ndarray, positive_edges, negative_edges) -> float:
    """Cross entropy over both edge sets, probabilities clamped away from 0/1."""
    if len(positive_edges) == 0 and len(negative_edges) == 0:
        raise EmptyBatch("no edges in batch")
    total = 0.0
    for edges, label in ((positive_edges, 1.0), (negative_edges, 0.0)):
        for i, j in edges:
            p = np.clip(_sigmoid(z[i] @ z[j]), _CLAMP, 1.0 - _CLAMP)
            total -= label * np.log(p) + (1.0 - label) * np.log(1.0 - p)
    return float(total)


def auc_rank(pos_scores: np.ndarray, neg_scores: np.ndarray) -> float:
    """Mann-Whitney AUC with midranks for ties."""
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    scores = np.concatenate([pos, neg])
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    n_pos, n_neg = len(pos), len(neg)
    rank_sum = ranks[:n_pos].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


class _GraphData:
    """Per-graph tensors cached across epochs."""

    def __init__(self, graph, x: np.ndarray):
        self.graph = graph
        self.x = np.asarray(x, dtype=np.float64)
        self.ahat = normalize_adjacency(graph.adjacency())
        self.n = self.x.shape[0]
        order = {nid: idx for idx, nid in enumerate(graph.node_ids())}
        self.pos_pairs = sorted({
            (min(order[e.src], order[e.dst]), max(order[e.src], order[e.dst]))
            for e in graph.edges if e.src != e.dst})
        self.pos_set = set(self.pos_pairs)

    def non_edge_count(self) -> int:
        return self.n * (self.n - 1) // 2 - len(self.pos_set)

    def sample_non_edge(self, rng) -> tuple[int, int]:
        while True:
            i = int(rng.integers(self.n))
            j = int(rng.integers(self.n))
            if i == j:
                continue
            pair = (min(i, j), max(i, j))
            if pair not in self.pos_set:
                return pair


def _forward(model, gd: _GraphData):
    pre = gd.ahat @ gd.x @ model.w0
    hidden = np.maximum(pre, 0.0)
    z = gd.ahat @ hidden @ model.w1
    return pre, hidden, z


def batch_loss_and_grads(model: GaeModel, graph_data: list[_GraphData],
                         batch) -> tuple[float, np.ndarray, np.ndarray]:
    """batch: list of (graph_index, i, j, label). Returns (loss, dW0, dW1)."""
    if not batch:
        raise EmptyBatch("empty edge batch")
    total = 0.0
    dw0 = np.zeros_like(model.w0)
    dw1 = np.zeros_like(model.w1)
    by_graph: dict[int, list] = {}
    for gi, i, j, label in batch:
        by_graph.setdefault(gi, []).append((i, j, label))
    for gi, edges in by_graph.items():
        gd = graph_data[gi]
        pre, hidden, z = _forward(model, gd)
        dz = np.zeros_like(z)
        for i, j, label in edges:
            raw = float(_sigmoid(z[i] @ z[j]))
            p = min(max(raw, _CLAMP), 1.0 - _CLAMP)
            total -= label * np.log(p) + (1.0 - label) * np.log(1.0 - p)
            if raw != p:
                continue  # clamped: flat region
            g = raw - label
            dz[i] += g * z[j]
            dz[j] += g * z[i]
        ah_h = gd.ahat @ hidden
        dw1 += ah_h.T @ dz
        dh = gd.ahat @ dz @ model.w1.T
        dpre = dh * (pre > 0)
        dw0 += (gd.ahat @ gd.x).T @ dpre
    return float(total), dw0, dw1


def _glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


@dataclass
class TrainHistory:
    epochs: list = field(default_factory=list)  # of (loss, auc)
    best_epoch: int = -1
    best_auc: float = float("nan")


def train(graphs: list, config: TrainConfig, seed: int = 0
          ) -> tuple[GaeModel, TrainHistory]:
    """graphs: list of (Icfg, feature matrix). Edges pooled across graphs."""
    data = [_GraphData(g, x) for g, x in graphs]
    pooled = [(gi, i, j) for gi, gd in enumerate(data) for i, j in gd.pos_pairs]
    if len(pooled) < 2:
        raise InsufficientEdges("need at least two pooled edges to split")
    d_in = data[0].x.shape[1]
    for gd in data:
        if gd.x.shape[1] != d_in:
            raise DimensionMismatch("feature matrices disagree on width")

    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(pooled))
    n_train = min(max(int(round(config.split_ratio * len(pooled))), 1),
                  len(pooled) - 1)
    train_edges = [pooled[k] for k in perm[:n_train]]
    val_edges = [pooled[k] for k in perm[n_train:]]
    val_neg = [(gi, *data[gi].sample_non_edge(rng)) for gi, _, _ in val_edges]

    h = config.hidden_dim
    model = GaeModel(_glorot(rng, d_in, h), _glorot(rng, h, h), seed=seed)

    m0 = np.zeros_like(model.w0)
    v0 = np.zeros_like(model.w0)
    m1 = np.zeros_like(model.w1)
    v1 = np.zeros_like(model.w1)
    t = 0
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_epsilon

    def validation_auc() -> float:
        z_by_graph = {}
        needed = {gi for gi, _, _ in val_edges} | {gi for gi, _, _ in val_neg}
        for gi in needed:
            z_by_graph[gi] = _forward(model, data[gi])[2]
        pos = [float(_sigmoid(z_by_graph[gi][i] @ z_by_graph[gi][j]))
               for gi, i, j in val_edges]
        neg = [float(_sigmoid(z_by_graph[gi][i] @ z_by_graph[gi][j]))
               for gi, i, j in val_neg]
        return auc_rank(np.asarray(pos), np.asarray(neg))

    history = TrainHistory()
    best_w0, best_w1 = model.w0.copy(), model.w1.copy()
    best_auc = -1.0
    stale = 0
    for epoch in range(config.max_epochs):
        order = rng.permutation(len(train_edges))
        epoch_loss = 0.0
        for start in range(0, len(order), config.edge_batch_size):
            chunk = order[start:start + config.edge_batch_size]
            batch = []
            for k in chunk:
                gi, i, j = train_edges[k]
                batch.append((gi, i, j, 1.0))
                gd = data[gi]
                if gd.non_edge_count() > 0:
                    ni, nj = gd.sample_non_edge(rng)
                    batch.append((gi, ni, nj, 0.0))
            batch_loss, dw0, dw1 = batch_loss_and_grads(model, data, batch)
            epoch_loss += batch_loss
            t += 1
            for w, grad, m, v in ((model.w0, dw0, m0, v0),
                                  (model.w1, dw1, m1, v1)):
                m *= b1
                m += (1 - b1) * grad
                v *= b2
                v += (1 - b2) * grad * grad
                mhat = m / (1 - b1 ** t)
                vhat = v / (1 - b2 ** t)
                w -= config.learning_rate * mhat / (np.sqrt(vhat) + eps)
        auc = validation_auc()
        history.epochs.append((epoch_loss, auc))
        if auc > best_auc:
            best_auc = auc
            best_w0, best_w1 = model.w0.copy(), model.w1.copy()
            history.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    history.best_auc = best_auc
    model.w0, model.w1 = best_w0, best_w1
    return model, history


def embed(model: GaeModel, graphs: list) -> list[np.ndarray]:
    """Final node representations Z || X, one matrix per (Icfg, X) pair."""
    out = []
    for g, x in graphs:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1] != model.d_in:
            raise DimensionMismatch(
                f"features width {x.shape[1]} vs model d_in {model.d_in}")
        z = encode(model, x, g.adjacency())
        out.append(np.hstack([z, x]))
    return out


def save_model(model: GaeModel, path: str):
    payload = {
        "version": 1,
        "d_in": model.d_in,
        "h": model.h,
        "W0": model.w0.tolist(),
        "W1": model.w1.tolist(),
        "seed": model.seed,
        "config_hash": model.config_hash,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_model(path: str) -> GaeModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    w0 = np.asarray(payload["W0"], dtype=np.float64)
    w1 = np.asarray(payload["W1"], dtype=np.float64)
    if w0.shape != (payload["d_in"], payload["h"]) or \
            w1.shape != (payload["h"], payload["h"]):
        raise DataError("model file dimensions are inconsistent")
    return GaeModel(w0, w1, seed=int(payload["seed"]),
                    config_hash=payload.get("config_hash", ""))
