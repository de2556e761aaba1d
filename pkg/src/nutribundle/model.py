"""Preference model: typed message passing over the catalog graph, affinity
scoring, pairwise ranking loss, and exact gradients for every parameter.

Each layer averages every node's neighbor states (all edge kinds pooled,
plus the node's own state so isolated nodes keep an identity), applies the
node-type weight matrix and a tanh nonlinearity. Final-layer states are the
embeddings used everywhere downstream.
"""

import json
from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, concat_rows, spmm
from .catalog import Dataset
from .graph import NODE_KINDS, SemanticGraph

D_EMB_DEFAULT = 128
N_LAYERS_DEFAULT = 2
INIT_SCALE = 0.1
# Mean aggregation shrinks activations by roughly 1/sqrt(degree) per layer;
# fan-in-scaled weight init restores unit-order forward gain so gradient
# descent has signal to work with.
WEIGHT_INIT_GAIN = 8.0

# (user index, positive product index, negative product index) triples.
TripleBatch = list[tuple[int, int, int]]


@dataclass
class ModelParams:
    base: np.ndarray  # (n_nodes, d_emb)
    weights: list[dict[str, np.ndarray]]  # per layer: node kind -> (d, d)
    version: int = 0

    @property
    def d_emb(self) -> int:
        return self.base.shape[1]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def step(self, grads: "Grads", lr: float) -> None:
        """Plain gradient-descent update; replaces arrays so live traces stay valid."""
        self.base = self.base - lr * grads.base
        self.weights = [
            {kind: w - lr * grads.weights[layer][kind] for kind, w in per_layer.items()}
            for layer, per_layer in enumerate(self.weights)
        ]
        self.version += 1


@dataclass
class Grads:
    base: np.ndarray
    weights: list[dict[str, np.ndarray]]


def init_params(
    graph: SemanticGraph,
    d_emb: int = D_EMB_DEFAULT,
    n_layers: int = N_LAYERS_DEFAULT,
    seed: int = 0,
) -> ModelParams:
    """Seeded uniform init: base in +-INIT_SCALE, weights fan-in scaled."""
    rng = np.random.Generator(np.random.PCG64(seed))
    base = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(graph.n_nodes, d_emb))
    bound = WEIGHT_INIT_GAIN / np.sqrt(d_emb)
    weights = [
        {kind: rng.uniform(-bound, bound, size=(d_emb, d_emb)) for kind in NODE_KINDS}
        for _ in range(n_layers)
    ]
    return ModelParams(base=base, weights=weights)


@dataclass
class FinalEmbeddings:
    users: np.ndarray
    products: np.ndarray
    foods: np.ndarray


@dataclass
class ForwardTrace:
    """Autodiff graph of one forward pass; reused to build training losses."""

    base_t: Tensor
    weight_ts: list[dict[str, Tensor]]
    layer_states: list[Tensor]  # hidden state after each layer
    final: Tensor  # (n_nodes, d_emb)
    graph: SemanticGraph
    params_version: int


def forward(graph: SemanticGraph, params: ModelParams) -> tuple[FinalEmbeddings, ForwardTrace]:
    if params.base.shape[0] != graph.n_nodes:
        raise ValueError(
            f"params built for {params.base.shape[0]} nodes, graph has {graph.n_nodes}"
        )
    slices = graph.node_kind_slices()
    agg_matrix = graph.aggregation_matrix()
    base_t = Tensor(params.base, requires_grad=True)
    weight_ts = [
        {kind: Tensor(w, requires_grad=True) for kind, w in per_layer.items()}
        for per_layer in params.weights
    ]
    h = base_t
    layer_states: list[Tensor] = []
    for per_layer in weight_ts:
        agg = spmm(agg_matrix, h)
        blocks = [
            agg.gather_rows(np.arange(slices[kind].start, slices[kind].stop)) @ per_layer[kind].T
            for kind in NODE_KINDS
        ]
        h = concat_rows(blocks).tanh()
        layer_states.append(h)
    trace = ForwardTrace(
        base_t=base_t,
        weight_ts=weight_ts,
        layer_states=layer_states,
        final=h,
        graph=graph,
        params_version=params.version,
    )
    emb = FinalEmbeddings(
        users=h.data[slices["user"]],
        products=h.data[slices["product"]],
        foods=h.data[slices["food"]],
    )
    return emb, trace


def score(u: int, p: int, emb: FinalEmbeddings) -> float:
    """Affinity of user u for product p: dot product of final embeddings."""
    return float(emb.users[u] @ emb.products[p])


def bpr_loss(batch: TripleBatch, emb: FinalEmbeddings) -> float:
    """Mean -log sigmoid(score(u,p+) - score(u,p-)) over the batch."""
    if not batch:
        raise ValueError("ranking loss needs a non-empty batch")
    users = emb.users[[t[0] for t in batch]]
    pos = emb.products[[t[1] for t in batch]]
    neg = emb.products[[t[2] for t in batch]]
    diff = np.sum(users * pos, axis=1) - np.sum(users * neg, axis=1)
    return float(np.mean(np.logaddexp(0.0, -diff)))


def build_rank_loss(trace: ForwardTrace, batch: TripleBatch) -> Tensor:
    """Differentiable version of :func:`bpr_loss` on a forward trace."""
    if not batch:
        raise ValueError("ranking loss needs a non-empty batch")
    g = trace.graph
    u_rows = trace.final.gather_rows([g.user_node(t[0]) for t in batch])
    pos_rows = trace.final.gather_rows([g.product_node(t[1]) for t in batch])
    neg_rows = trace.final.gather_rows([g.product_node(t[2]) for t in batch])
    diff = (u_rows * pos_rows).sum(axis=1) - (u_rows * neg_rows).sum(axis=1)
    return -diff.logsigmoid().mean()


def sample_negatives(user: int, dataset: Dataset, count: int, seed: int) -> list[int]:
    """Uniform sample, without replacement, of products the user never bought."""
    purchased = dataset.purchases_by_user()[user]
    pool = [p for p in range(len(dataset.products)) if p not in purchased]
    if not pool:
        raise ValueError(f"user index {user} purchased the entire catalog")
    rng = np.random.Generator(np.random.PCG64(seed))
    take = min(count, len(pool))
    return [pool[i] for i in rng.choice(len(pool), size=take, replace=False)]


def gradients(loss: Tensor, trace: ForwardTrace, params: ModelParams) -> Grads:
    """Reverse-mode gradients of a scalar loss built on ``trace``."""
    if trace.params_version != params.version:
        raise ValueError("stale trace: params were updated after this forward pass")
    loss.backward()
    base_grad = trace.base_t.grad
    if base_grad is None:
        base_grad = np.zeros_like(params.base)
    weight_grads = []
    for per_layer in trace.weight_ts:
        layer = {}
        for kind, tensor in per_layer.items():
            layer[kind] = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        weight_grads.append(layer)
    return Grads(base=base_grad, weights=weight_grads)


# ---------------------------------------------------------------------------
# Checkpoints

def save_checkpoint(params: ModelParams, meta: dict, path: str) -> None:
    doc = {
        "meta": meta,
        "d_emb": params.d_emb,
        "n_layers": params.n_layers,
        "base": params.base.tolist(),
        "weights": [{k: w.tolist() for k, w in per_layer.items()} for per_layer in params.weights],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path: str, graph: SemanticGraph | None = None) -> tuple[ModelParams, dict]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    base = np.array(doc["base"])
    weights = [{k: np.array(w) for k, w in per_layer.items()} for per_layer in doc["weights"]]
    d = doc["d_emb"]
    if base.ndim != 2 or base.shape[1] != d:
        raise ValueError(f"{path}: base embedding shape {base.shape} does not match d_emb {d}")
    if len(weights) != doc["n_layers"]:
        raise ValueError(f"{path}: expected {doc['n_layers']} weight layers, found {len(weights)}")
    for per_layer in weights:
        if set(per_layer) != set(NODE_KINDS):
            raise ValueError(f"{path}: weight layer kinds {sorted(per_layer)} != {sorted(NODE_KINDS)}")
        for kind, w in per_layer.items():
            if w.shape != (d, d):
                raise ValueError(f"{path}: weight {kind} has shape {w.shape}, expected {(d, d)}")
    if graph is not None and base.shape[0] != graph.n_nodes:
        raise ValueError(f"{path}: built for {base.shape[0]} nodes, graph has {graph.n_nodes}")
    return ModelParams(base=base, weights=weights), doc.get("meta", {})
