"""Heterogeneous catalog graph: purchase edges, product-product similarity
edges, and product->reference-food resolution edges.

Nodes get global ids in the order users, products, foods so downstream
message passing can treat the graph as one indexable structure.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import textenc
from .catalog import Dataset, NutrientVector, Product, ReferenceFood

EDGE_KINDS = ("purchases", "similar", "maps")
NODE_KINDS = ("user", "product", "food")


@dataclass(frozen=True)
class NodeRef:
    kind: str
    index: int


@dataclass(frozen=True)
class GraphConfig:
    theta_sim: float = 0.5
    max_similar_per_product: int = 10

    def __post_init__(self):
        if not (0 < self.theta_sim <= 1):
            raise ValueError(f"theta_sim must be in (0, 1], got {self.theta_sim}")
        if self.max_similar_per_product < 0:
            raise ValueError("max_similar_per_product must be >= 0")


def encode_products(products: list[Product], enc: textenc.EncoderConfig) -> np.ndarray:
    return np.stack([textenc.encode(p.name, enc) for p in products])


def encode_foods(foods: list[ReferenceFood], enc: textenc.EncoderConfig) -> np.ndarray:
    return np.stack([textenc.encode(f.description, enc) for f in foods])


def build_similar_edges(
    products: list[Product],
    enc: textenc.EncoderConfig,
    config: GraphConfig,
) -> list[tuple[int, int]]:
    """All unordered product pairs with cosine >= theta_sim, degree-capped.

    Each product keeps its top ``max_similar_per_product`` matches (ties to
    the smaller partner index); the union of kept directed picks is then
    symmetrized, so a popular product can still exceed the cap via partners.
    """
    if len(products) < 2:
        raise ValueError("need at least 2 products to build similarity edges")
    vecs = encode_products(products, enc)
    sims = np.clip(vecs @ vecs.T, -1.0, 1.0)
    n = len(products)
    kept: set[tuple[int, int]] = set()
    for i in range(n):
        matches = [j for j in range(n) if j != i and sims[i, j] >= config.theta_sim]
        matches.sort(key=lambda j: (-sims[i, j], j))
        for j in matches[: config.max_similar_per_product]:
            kept.add((min(i, j), max(i, j)))
    return sorted(kept)


def map_products_to_foods(
    products: list[Product],
    foods: list[ReferenceFood],
    enc: textenc.EncoderConfig,
    config: GraphConfig,
) -> tuple[list[tuple[int, int]], dict[int, NutrientVector], list[int]]:
    """Argmax-similarity resolution of each product to one reference food.

    Returns (maps edges, product index -> inherited nutrients, unmapped
    product indices). Argmax ties resolve to the smallest food index; an
    edge is emitted only when the best similarity clears theta_sim.
    """
    if not foods:
        raise ValueError("need at least 1 food to map products")
    pvecs = encode_products(products, enc)
    fvecs = encode_foods(foods, enc)
    sims = np.clip(pvecs @ fvecs.T, -1.0, 1.0)
    best = np.argmax(sims, axis=1)  # first occurrence wins ties
    edges: list[tuple[int, int]] = []
    nutrients: dict[int, NutrientVector] = {}
    unmapped: list[int] = []
    for p in range(len(products)):
        f = int(best[p])
        if sims[p, f] >= config.theta_sim:
            edges.append((p, f))
            nutrients[p] = foods[f].nutrients
        else:
            unmapped.append(p)
    return edges, nutrients, unmapped


@dataclass
class SemanticGraph:
    n_users: int
    n_products: int
    n_foods: int
    purchase_edges: list[tuple[int, int]]  # (user idx, product idx)
    similar_edges: list[tuple[int, int]]  # (product idx, product idx), i < j
    maps_edges: list[tuple[int, int]]  # (product idx, food idx)
    resolved_nutrients: dict[int, NutrientVector]
    unmapped_products: list[int]
    config: GraphConfig

    neighbors_by_kind: dict[str, list[list[int]]] = field(init=False, repr=False)
    _agg_matrix: sparse.csr_matrix | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        n = self.n_nodes
        adj = {kind: [[] for _ in range(n)] for kind in EDGE_KINDS}
        for u, p in self.purchase_edges:
            a, b = self.user_node(u), self.product_node(p)
            adj["purchases"][a].append(b)
            adj["purchases"][b].append(a)
        for i, j in self.similar_edges:
            a, b = self.product_node(i), self.product_node(j)
            adj["similar"][a].append(b)
            adj["similar"][b].append(a)
        for p, f in self.maps_edges:
            a, b = self.product_node(p), self.food_node(f)
            adj["maps"][a].append(b)
            adj["maps"][b].append(a)
        self.neighbors_by_kind = adj

    @property
    def n_nodes(self) -> int:
        return self.n_users + self.n_products + self.n_foods

    def user_node(self, u: int) -> int:
        return u

    def product_node(self, p: int) -> int:
        return self.n_users + p

    def food_node(self, f: int) -> int:
        return self.n_users + self.n_products + f

    def node_kind_slices(self) -> dict[str, slice]:
        u, p = self.n_users, self.n_products
        return {
            "user": slice(0, u),
            "product": slice(u, u + p),
            "food": slice(u + p, u + p + self.n_foods),
        }

    def neighbors(self, node: int) -> list[int]:
        out: list[int] = []
        for kind in EDGE_KINDS:
            out.extend(self.neighbors_by_kind[kind][node])
        return out

    def mapped_product_indices(self) -> list[int]:
        return sorted(self.resolved_nutrients)

    def nutrient_table(self) -> tuple[list[int], np.ndarray]:
        """Mapped product indices plus their (M, 6) nutrient matrix."""
        idx = self.mapped_product_indices()
        if not idx:
            return idx, np.zeros((0, 6))
        return idx, np.stack([self.resolved_nutrients[p].as_array() for p in idx])

    def aggregation_matrix(self) -> sparse.csr_matrix:
        """Row-stochastic neighbor-mean matrix with a self-loop on every node."""
        if self._agg_matrix is None:
            n = self.n_nodes
            rows, cols = [], []
            for v in range(n):
                nbrs = self.neighbors(v) + [v]
                rows.extend([v] * len(nbrs))
                cols.extend(nbrs)
            data = np.ones(len(rows))
            mat = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
            deg = np.asarray(mat.sum(axis=1)).ravel()
            inv = sparse.diags(1.0 / deg)
            self._agg_matrix = (inv @ mat).tocsr()
        return self._agg_matrix


def assemble(
    dataset: Dataset,
    similar_edges: list[tuple[int, int]],
    maps_edges: list[tuple[int, int]],
    config: GraphConfig = GraphConfig(),
) -> SemanticGraph:
    """Union purchase, similarity and resolution edges into one graph."""
    n_u, n_p, n_f = len(dataset.users), len(dataset.products), len(dataset.foods)
    purchase_edges = []
    for rec in dataset.purchases:
        if rec.user_id not in dataset.user_index or rec.product_id not in dataset.product_index:
            raise ValueError(f"dangling purchase ({rec.user_id!r}, {rec.product_id!r})")
        purchase_edges.append((dataset.user_index[rec.user_id], dataset.product_index[rec.product_id]))
    for i, j in similar_edges:
        if not (0 <= i < n_p and 0 <= j < n_p) or i == j:
            raise ValueError(f"invalid similar edge ({i}, {j})")
    seen_products = set()
    nutrients: dict[int, NutrientVector] = {}
    for p, f in maps_edges:
        if not (0 <= p < n_p and 0 <= f < n_f):
            raise ValueError(f"invalid maps edge ({p}, {f})")
        if p in seen_products:
            raise ValueError(f"product index {p} has more than one maps edge")
        seen_products.add(p)
        nutrients[p] = dataset.foods[f].nutrients
    unmapped = [p for p in range(n_p) if p not in seen_products]
    return SemanticGraph(
        n_users=n_u,
        n_products=n_p,
        n_foods=n_f,
        purchase_edges=purchase_edges,
        similar_edges=sorted((min(i, j), max(i, j)) for i, j in similar_edges),
        maps_edges=sorted(maps_edges),
        resolved_nutrients=nutrients,
        unmapped_products=unmapped,
        config=config,
    )


def build_graph(
    dataset: Dataset,
    enc: textenc.EncoderConfig = textenc.DEFAULT_CONFIG,
    config: GraphConfig = GraphConfig(),
    include_similar: bool = True,
) -> SemanticGraph:
    """Full construction pass over a dataset."""
    similar = build_similar_edges(dataset.products, enc, config) if include_similar else []
    maps_edges, _, _ = map_products_to_foods(dataset.products, dataset.foods, enc, config)
    return assemble(dataset, similar, maps_edges, config)


# ---------------------------------------------------------------------------
# Serialization. Edges are stored by entity id so a file can be re-resolved
# (and checked) against the dataset it was built from.

def save_graph(graph: SemanticGraph, dataset: Dataset, path: str) -> None:
    doc = {
        "config": {
            "theta_sim": graph.config.theta_sim,
            "max_similar_per_product": graph.config.max_similar_per_product,
        },
        "counts": {"users": graph.n_users, "products": graph.n_products, "foods": graph.n_foods},
        "similar_edges": [
            [dataset.products[i].id, dataset.products[j].id] for i, j in graph.similar_edges
        ],
        "maps_edges": [
            [dataset.products[p].id, dataset.foods[f].id] for p, f in graph.maps_edges
        ],
        "unmapped_product_ids": [dataset.products[p].id for p in graph.unmapped_products],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_graph(path: str, dataset: Dataset) -> SemanticGraph:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    counts = doc["counts"]
    if (counts["users"], counts["products"], counts["foods"]) != (
        len(dataset.users),
        len(dataset.products),
        len(dataset.foods),
    ):
        raise ValueError(f"{path}: entity counts do not match the provided dataset")
    try:
        similar = [
            (dataset.product_index[a], dataset.product_index[b]) for a, b in doc["similar_edges"]
        ]
        maps_edges = [
            (dataset.product_index[p], dataset.food_index[f]) for p, f in doc["maps_edges"]
        ]
    except KeyError as exc:
        raise ValueError(f"{path}: edge references unknown id {exc.args[0]!r}")
    cfg = GraphConfig(**doc["config"])
    return assemble(dataset, similar, maps_edges, cfg)
