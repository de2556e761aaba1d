"""Message-passing model: forward semantics, scoring, ranking loss, gradients."""

import math

import numpy as np
import pytest

from conftest import make_tiny_dataset, make_tiny_graph
from nutribundle import model
from nutribundle.catalog import Dataset, NutrientVector, Product, PurchaseRecord, ReferenceFood, UserProfile
from nutribundle.graph import assemble
from nutribundle.model import (
    ModelParams,
    bpr_loss,
    build_rank_loss,
    forward,
    gradients,
    init_params,
    load_checkpoint,
    sample_negatives,
    save_checkpoint,
    score,
)


def chain_dataset():
    """One user, one product, one food; purchase + resolution edges."""
    nv = NutrientVector(150, 12, 10, 5, 2, 100)
    return Dataset(
        products=[Product("p0", "item", "misc")],
        foods=[ReferenceFood("f0", "item reference", nv)],
        users=[UserProfile("u0", 30, "male", 80, 180, "moderate", "gain")],
        purchases=[PurchaseRecord("u0", "p0")],
    )


def chain_params():
    base = np.array([
        [0.1, 0.2],    # user
        [0.3, -0.1],   # product
        [-0.2, 0.4],   # food
    ])
    weights = [{
        "user": np.array([[1.0, 2.0], [0.0, 1.0]]),
        "product": np.array([[0.5, 0.0], [0.0, 0.5]]),
        "food": np.array([[1.0, 0.0], [1.0, 1.0]]),
    }]
    return ModelParams(base=base, weights=weights)


def test_forward_chain_matches_hand_arithmetic():
    g = assemble(chain_dataset(), [], [(0, 0)])
    params = chain_params()
    emb, _ = forward(g, params)
    h_u, h_p, h_f = params.base
    agg_u = (h_p + h_u) / 2
    agg_p = (h_u + h_f + h_p) / 3
    agg_f = (h_p + h_f) / 2
    np.testing.assert_allclose(emb.users[0], np.tanh(params.weights[0]["user"] @ agg_u))
    np.testing.assert_allclose(emb.products[0], np.tanh(params.weights[0]["product"] @ agg_p))
    np.testing.assert_allclose(emb.foods[0], np.tanh(params.weights[0]["food"] @ agg_f))


def test_isolated_node_keeps_identity_via_self_loop():
    ds = chain_dataset()
    g = assemble(ds, [], [])  # product has only the purchase edge; food isolated
    params = chain_params()
    emb, _ = forward(g, params)
    h_f = params.base[2]
    np.testing.assert_allclose(emb.foods[0], np.tanh(params.weights[0]["food"] @ h_f))


def test_forward_invariant_to_neighbor_order():
    rng = np.random.default_rng(5)
    ds = make_tiny_dataset(rng, n_users=3, n_products=6, n_foods=3)
    maps_edges = [(p, p % 3) for p in range(6)]
    g1 = assemble(ds, [(0, 1), (2, 3)], maps_edges)
    g2 = assemble(ds, [(2, 3), (0, 1)], list(reversed(maps_edges)))
    params = init_params(g1, d_emb=4, n_layers=2, seed=0)
    emb1, _ = forward(g1, params)
    emb2, _ = forward(g2, params)
    np.testing.assert_array_equal(emb1.products, emb2.products)
    np.testing.assert_array_equal(emb1.users, emb2.users)


def test_score_trivials():
    emb = model.FinalEmbeddings(
        users=np.array([[0.0, 0.0], [1.0, 0.0]]),
        products=np.array([[0.0, 0.0], [1.0, 0.0]]),
        foods=np.zeros((0, 2)),
    )
    assert score(0, 0, emb) == 0.0
    assert score(1, 1, emb) == 1.0


def test_forward_deterministic(small_graph):
    params = init_params(small_graph, d_emb=8, n_layers=2, seed=3)
    a, _ = forward(small_graph, params)
    b, _ = forward(small_graph, params)
    assert np.array_equal(a.users, b.users)


# -- ranking loss ----------------------------------------------------------

def unit_embeddings(diff):
    # score(u, pos) - score(u, neg) == diff by construction
    users = np.array([[1.0, 0.0]])
    products = np.array([[diff, 0.0], [0.0, 0.0]])
    return model.FinalEmbeddings(users=users, products=products, foods=np.zeros((0, 2)))


def test_bpr_equal_scores_is_ln2():
    emb = unit_embeddings(0.0)
    assert bpr_loss([(0, 0, 1)], emb) == pytest.approx(math.log(2), abs=1e-12)


def test_bpr_hand_value_at_diff_one():
    emb = unit_embeddings(1.0)
    assert bpr_loss([(0, 0, 1)], emb) == pytest.approx(0.31326168751822286, abs=1e-12)


def test_bpr_large_margin_vanishes():
    losses = [bpr_loss([(0, 0, 1)], unit_embeddings(d)) for d in (1, 5, 10, 20)]
    assert all(a > b for a, b in zip(losses, losses[1:]))
    assert losses[-1] < 1e-8


def test_bpr_empty_batch():
    with pytest.raises(ValueError):
        bpr_loss([], unit_embeddings(0.0))


def test_rank_loss_tensor_agrees_with_numpy(small_graph, small_dataset):
    params = init_params(small_graph, d_emb=6, n_layers=2, seed=1)
    emb, trace = forward(small_graph, params)
    batch = [
        (small_dataset.user_index[r.user_id], small_dataset.product_index[r.product_id], i % 7)
        for i, r in enumerate(small_dataset.purchases[:20])
    ]
    assert build_rank_loss(trace, batch).item() == pytest.approx(bpr_loss(batch, emb), abs=1e-12)


# -- negative sampling -------------------------------------------------------

def test_sample_negatives_contracts(small_dataset):
    purchased = small_dataset.purchases_by_user()[0]
    negatives = sample_negatives(0, small_dataset, 10, seed=4)
    assert len(negatives) == 10 and len(set(negatives)) == 10
    assert not set(negatives) & purchased
    assert negatives == sample_negatives(0, small_dataset, 10, seed=4)


def test_sample_negatives_single_candidate():
    nv = NutrientVector(100, 5, 10, 3, 2, 50)
    ds = Dataset(
        products=[Product("p0", "a", "m"), Product("p1", "b", "m")],
        foods=[ReferenceFood("f0", "r", nv)],
        users=[UserProfile("u0", 30, "male", 80, 180, "moderate", "gain")],
        purchases=[PurchaseRecord("u0", "p0")],
    )
    for seed in range(5):
        assert sample_negatives(0, ds, 1, seed=seed) == [1]


def test_sample_negatives_exhausted_catalog():
    nv = NutrientVector(100, 5, 10, 3, 2, 50)
    ds = Dataset(
        products=[Product("p0", "a", "m")],
        foods=[ReferenceFood("f0", "r", nv)],
        users=[UserProfile("u0", 30, "male", 80, 180, "moderate", "gain")],
        purchases=[PurchaseRecord("u0", "p0")],
    )
    with pytest.raises(ValueError):
        sample_negatives(0, ds, 1, seed=0)


# -- gradients ---------------------------------------------------------------

def rel_err(a, b):
    return abs(a - b) / max(1.0, abs(a), abs(b))


def numeric_rank_gradcheck(seed):
    rng = np.random.default_rng(seed)
    ds, g = make_tiny_graph(rng)
    params = init_params(g, d_emb=3, n_layers=2, seed=seed)
    batch = [
        (ds.user_index[r.user_id], ds.product_index[r.product_id], int(rng.integers(len(ds.products))))
        for r in ds.purchases[:4]
    ]
    _, trace = forward(g, params)
    grads = gradients(build_rank_loss(trace, batch), trace, params)

    def value(p):
        emb, _ = forward(g, p)
        return bpr_loss(batch, emb)

    h = 1e-4
    worst = 0.0
    flat = [("base", None)] + [(layer, kind) for layer in range(2) for kind in ("user", "product", "food")]
    for layer, kind in flat:
        target = params.base if layer == "base" else params.weights[layer][kind]
        grad = grads.base if layer == "base" else grads.weights[layer][kind]
        it = np.nditer(target, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            p2 = ModelParams(
                base=params.base.copy(),
                weights=[{k: w.copy() for k, w in L.items()} for L in params.weights],
            )
            arr = p2.base if layer == "base" else p2.weights[layer][kind]
            arr[idx] += h
            up = value(p2)
            arr[idx] -= 2 * h
            down = value(p2)
            worst = max(worst, rel_err((up - down) / (2 * h), grad[idx]))
            it.iternext()
    return worst


def test_rank_gradients_match_finite_differences():
    assert numeric_rank_gradcheck(0) < 1e-4
    assert numeric_rank_gradcheck(1) < 1e-4


def test_zero_objective_zero_gradients(small_graph):
    params = init_params(small_graph, d_emb=4, n_layers=1, seed=0)
    _, trace = forward(small_graph, params)
    zero = (trace.final * 0.0).sum()
    grads = gradients(zero, trace, params)
    assert not grads.base.any()
    assert not any(w.any() for layer in grads.weights for w in layer.values())


def test_score_gradient_at_zero_layers():
    rng = np.random.default_rng(2)
    ds, g = make_tiny_graph(rng)
    params = init_params(g, d_emb=3, n_layers=0, seed=1)
    _, trace = forward(g, params)
    u_node, p_node = g.user_node(0), g.product_node(1)
    s = (trace.final.gather_rows([u_node]) * trace.final.gather_rows([p_node])).sum()
    grads = gradients(s, trace, params)
    np.testing.assert_allclose(grads.base[u_node], params.base[p_node])
    np.testing.assert_allclose(grads.base[p_node], params.base[u_node])


def test_stale_trace_rejected(small_graph):
    params = init_params(small_graph, d_emb=4, n_layers=1, seed=0)
    _, trace = forward(small_graph, params)
    loss = build_rank_loss(trace, [(0, 0, 1)])
    grads = gradients(loss, trace, params)
    params.step(grads, 0.1)
    _, trace2 = forward(small_graph, params)
    with pytest.raises(ValueError, match="stale"):
        gradients(build_rank_loss(trace, [(0, 0, 1)]), trace, params)
    gradients(build_rank_loss(trace2, [(0, 0, 1)]), trace2, params)


def test_one_step_decreases_batch_loss(small_graph, small_dataset):
    decreased = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        params = init_params(small_graph, d_emb=8, n_layers=2, seed=seed)
        batch = [
            (small_dataset.user_index[r.user_id], small_dataset.product_index[r.product_id],
             int(rng.integers(len(small_dataset.products))))
            for r in small_dataset.purchases[:16]
        ]
        emb, trace = forward(small_graph, params)
        before = bpr_loss(batch, emb)
        grads = gradients(build_rank_loss(trace, batch), trace, params)
        params.step(grads, 0.05)
        after = bpr_loss(batch, forward(small_graph, params)[0])
        decreased += after < before
    assert decreased == 20


# -- checkpoints ---------------------------------------------------------------

def test_checkpoint_round_trip(tmp_path, small_graph):
    params = init_params(small_graph, d_emb=4, n_layers=2, seed=9)
    path = str(tmp_path / "ckpt.json")
    save_checkpoint(params, {"seed": 9}, path)
    loaded, meta = load_checkpoint(path, small_graph)
    assert meta == {"seed": 9}
    np.testing.assert_array_equal(loaded.base, params.base)
    for a, b in zip(loaded.weights, params.weights):
        for kind in a:
            np.testing.assert_array_equal(a[kind], b[kind])


def test_checkpoint_rejects_dimension_mismatch(tmp_path, small_graph):
    params = init_params(small_graph, d_emb=4, n_layers=1, seed=0)
    path = str(tmp_path / "ckpt.json")
    save_checkpoint(params, {}, path)
    rng = np.random.default_rng(0)
    other = make_tiny_graph(rng)[1]
    with pytest.raises(ValueError, match="nodes"):
        load_checkpoint(path, other)
