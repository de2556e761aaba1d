import numpy as np
import pytest

from nutribundle import catalog, graph


@pytest.fixture(scope="session")
def small_dataset():
    """Small but fully-featured synthetic dataset for unit tests."""
    return catalog.generate_synthetic(seed=3, n_products=60, n_foods=20, n_users=25, purchases_per_user=8)


@pytest.fixture(scope="session")
def small_graph(small_dataset):
    return graph.build_graph(small_dataset)


def make_tiny_dataset(rng: np.random.Generator, n_users=3, n_products=5, n_foods=3):
    """Hand-rolled random dataset for gradient and graph micro-tests."""
    foods = []
    for f in range(n_foods):
        prot, carb, fat = rng.uniform(1, 20, 3)
        nv = catalog.NutrientVector(
            cal=float(4 * prot + 4 * carb + 9 * fat),
            prot=float(prot),
            carb=float(carb),
            fat=float(fat),
            sugar=float(rng.uniform(0, 5)),
            sodium=float(rng.uniform(0, 300)),
        )
        foods.append(catalog.ReferenceFood(id=f"f{f}", description=f"food number {f}", nutrients=nv))
    products = [
        catalog.Product(id=f"p{p}", name=f"product number {p}", department="misc")
        for p in range(n_products)
    ]
    users = [
        catalog.UserProfile(
            id=f"u{u}",
            age=int(rng.integers(20, 60)),
            sex="male" if rng.integers(2) else "female",
            weight=float(rng.uniform(55, 100)),
            height=float(rng.uniform(150, 195)),
            activity="moderate",
            goal="maintenance",
        )
        for u in range(n_users)
    ]
    purchases = []
    seen = set()
    for u in range(n_users):
        for p in rng.choice(n_products, size=2, replace=False):
            pair = (f"u{u}", f"p{int(p)}")
            if pair not in seen:
                seen.add(pair)
                purchases.append(catalog.PurchaseRecord(*pair))
    return catalog.Dataset(products=products, foods=foods, users=users, purchases=purchases)


def make_tiny_graph(rng: np.random.Generator, dataset=None):
    if dataset is None:
        dataset = make_tiny_dataset(rng)
    n_p, n_f = len(dataset.products), len(dataset.foods)
    maps_edges = [(p, int(rng.integers(n_f))) for p in range(n_p) if rng.random() < 0.8]
    similar = []
    if n_p >= 2 and rng.random() < 0.8:
        i, j = sorted(rng.choice(n_p, size=2, replace=False))
        similar.append((int(i), int(j)))
    return dataset, graph.assemble(dataset, similar, maps_edges)
