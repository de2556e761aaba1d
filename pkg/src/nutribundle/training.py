"""Nutrition-regularized preference training.

The regularizer treats a user's preference scores as a temperature-scaled
softmax distribution over mapped products (a differentiable stand-in for a
basket), takes expected nutrients under it, and penalizes macro imbalance,
low protein density, missing total protein and high protein variance. The
trainer minimizes ranking loss plus a weighted sum of those terms.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .catalog import Dataset, NutrientVector
from .graph import SemanticGraph
from .model import (
    FinalEmbeddings,
    ForwardTrace,
    ModelParams,
    TripleBatch,
    build_rank_loss,
    forward,
    gradients,
    init_params,
)
from .physiology import PhysioTargets

# Column order inside a nutrient row.
_CAL, _PROT, _CARB, _FAT = 0, 1, 2, 3

SUB_LOSS_NAMES = ("ratio", "density", "quantity", "variance")


@dataclass(frozen=True)
class NutritionTargets:
    """Targets for the soft-basket regularizer.

    ``pi_star`` may be None, in which case the trainer substitutes the
    cohort-mean protein target.
    """

    r_star: tuple[float, float, float] = (0.30, 0.40, 0.30)
    rho_star: float = 5.0  # g protein per 100 kcal
    pi_star: float | None = None  # g protein per basket
    beta_size: float = 8.0  # estimated basket item count
    weights: tuple[float, float, float, float] = (1.0, 1.0, 0.02, 0.001)

    def __post_init__(self):
        if any(r < 0 for r in self.r_star) or abs(sum(self.r_star) - 1.0) > 1e-9:
            raise ValueError(f"r_star must be nonnegative and sum to 1, got {self.r_star}")
        if self.rho_star <= 0:
            raise ValueError("rho_star must be positive")
        if self.beta_size < 1:
            raise ValueError("beta_size must be >= 1")
        if any(w < 0 for w in self.weights):
            raise ValueError("sub-loss weights must be nonnegative")


@dataclass(frozen=True)
class TemperatureSchedule:
    tau_start: float = 2.0
    tau_end: float = 0.5

    def __post_init__(self):
        if not (self.tau_start >= self.tau_end > 0):
            raise ValueError("need tau_start >= tau_end > 0")

    def values(self, epochs: int) -> list[float]:
        """Linear interpolation, inclusive of both endpoints."""
        if epochs < 1:
            raise ValueError("epochs must be >= 1")
        return [float(t) for t in np.linspace(self.tau_start, self.tau_end, epochs)]


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 0.03
    learning_rate: float = 0.5
    epochs: int = 30
    batch_size: int = 512
    negatives_per_positive: int = 1
    seed: int = 0
    d_emb: int = 128
    n_layers: int = 2
    schedule: TemperatureSchedule = TemperatureSchedule()
    nutrition: NutritionTargets = NutritionTargets()

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.learning_rate <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("learning_rate, epochs and batch_size must be positive")
        if self.negatives_per_positive < 1:
            raise ValueError("negatives_per_positive must be >= 1")


# ---------------------------------------------------------------------------
# Soft basket and sub-losses (plain numpy; the differentiable twins below
# mirror these formulas exactly)

def soft_basket(scores: np.ndarray, tau: float) -> np.ndarray:
    """Temperature-scaled softmax with max-subtraction for overflow safety."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("cannot build a distribution over zero products")
    if tau <= 0:
        raise ValueError(f"temperature must be positive, got {tau}")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    z = (scores - scores.max()) / tau
    e = np.exp(z)
    return e / e.sum()


def expected_nutrients(distribution: np.ndarray, table: np.ndarray) -> NutrientVector:
    """Component-wise expectation of per-serving nutrients under the distribution."""
    distribution = np.asarray(distribution, dtype=np.float64)
    if table.ndim != 2 or table.shape[0] != distribution.shape[0]:
        raise ValueError(
            f"distribution over {distribution.shape[0]} products does not align "
            f"with nutrient table of shape {table.shape}"
        )
    return NutrientVector(*(distribution @ table))


def ratio_loss(expected: NutrientVector, r_star: tuple[float, float, float]) -> float:
    """L1 gap between the basket's protein/carb/fat gram shares and the target."""
    macro = np.array([expected.prot, expected.carb, expected.fat])
    total = macro.sum()
    if total <= 0:
        raise ValueError("degenerate distribution: expected macro grams sum to zero")
    return float(np.abs(macro / total - np.asarray(r_star)).sum())


def density_loss(expected: NutrientVector, rho_star: float) -> float:
    """Shortfall of protein grams per 100 kcal below the density floor."""
    if expected.cal <= 0:
        raise ValueError("degenerate distribution: expected calories are zero")
    return max(0.0, rho_star - 100.0 * expected.prot / expected.cal)


def quantity_loss(expected: NutrientVector, beta_size: float, pi_star: float) -> float:
    """Absolute gap between projected basket protein and the total target."""
    return abs(expected.prot * beta_size - pi_star)


def variance_loss(distribution: np.ndarray, protein_column: np.ndarray) -> float:
    """Variance of per-serving protein under the distribution (ReLU-guarded)."""
    distribution = np.asarray(distribution, dtype=np.float64)
    protein_column = np.asarray(protein_column, dtype=np.float64)
    if distribution.shape != protein_column.shape:
        raise ValueError("distribution and protein column are misaligned")
    mean = distribution @ protein_column
    second = distribution @ protein_column**2
    return max(0.0, float(second - mean**2))


def nutrition_loss(
    distribution: np.ndarray,
    table: np.ndarray,
    targets: NutritionTargets,
) -> tuple[float, dict[str, float]]:
    """Weighted sum of the four sub-losses, with the breakdown reported."""
    if targets.pi_star is None:
        raise ValueError("pi_star must be resolved before evaluating the loss")
    expected = expected_nutrients(distribution, table)
    parts = {
        "ratio": ratio_loss(expected, targets.r_star),
        "density": density_loss(expected, targets.rho_star),
        "quantity": quantity_loss(expected, targets.beta_size, targets.pi_star),
        "variance": variance_loss(distribution, table[:, _PROT]),
    }
    w1, w2, w3, w4 = targets.weights
    total = w1 * parts["ratio"] + w2 * parts["density"] + w3 * parts["quantity"] + w4 * parts["variance"]
    return total, parts


# ---------------------------------------------------------------------------
# Differentiable twin used by the trainer

def build_nutrition_loss(
    trace: ForwardTrace,
    users: list[int],
    mapped_products: list[int],
    table: np.ndarray,
    targets: NutritionTargets,
    tau: float,
) -> tuple[Tensor, dict[str, Tensor]]:
    """Mean soft-basket loss over the given users, on the forward trace.

    Mirrors :func:`nutrition_loss` formula for formula so the numpy path can
    serve as an independent value oracle for the gradients.
    """
    if targets.pi_star is None:
        raise ValueError("pi_star must be resolved before building the loss")
    if not mapped_products:
        raise ValueError("no mapped products: nutrition loss is undefined")
    g = trace.graph
    u_rows = trace.final.gather_rows([g.user_node(u) for u in users])
    m_rows = trace.final.gather_rows([g.product_node(p) for p in mapped_products])
    scores = u_rows @ m_rows.T  # (B, M)
    # Row max is a constant shift; softmax output (and gradient) are unchanged.
    shift = Tensor(scores.data.max(axis=1, keepdims=True))
    e = ((scores - shift) * (1.0 / tau)).exp()
    dist = e / e.sum(axis=1, keepdims=True)

    expected = dist @ Tensor(table)  # (B, 6)
    macro_sel = np.zeros((table.shape[1], 3))
    macro_sel[_PROT, 0] = macro_sel[_CARB, 1] = macro_sel[_FAT, 2] = 1.0
    macro = expected @ Tensor(macro_sel)
    shares = macro / macro.sum(axis=1, keepdims=True)
    ratio = (shares - Tensor(np.asarray(targets.r_star))).abs().sum(axis=1, keepdims=True)

    col = np.zeros((table.shape[1], 1))
    col[_PROT, 0] = 1.0
    prot = expected @ Tensor(col)
    col = np.zeros((table.shape[1], 1))
    col[_CAL, 0] = 1.0
    cal = expected @ Tensor(col)
    density = (targets.rho_star - (prot / cal) * 100.0).relu()
    quantity = (prot * targets.beta_size - targets.pi_star).abs()
    prot_sq = dist @ Tensor(table[:, _PROT : _PROT + 1] ** 2)
    variance = (prot_sq - prot * prot).relu()

    w1, w2, w3, w4 = targets.weights
    total = (ratio * w1 + density * w2 + quantity * w3 + variance * w4).mean()
    parts = {"ratio": ratio.mean(), "density": density.mean(),
             "quantity": quantity.mean(), "variance": variance.mean()}
    return total, parts


# ---------------------------------------------------------------------------
# Training loop

@dataclass
class EpochStats:
    epoch: int
    tau: float
    l_rank: float
    l_ratio: float
    l_density: float
    l_quantity: float
    l_variance: float
    l_total: float


LOG_COLUMNS = ("epoch", "tau", "l_rank", "l_ratio", "l_density", "l_quantity", "l_variance", "l_total")


def write_training_log(log: list[EpochStats], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(LOG_COLUMNS)
        for rec in log:
            writer.writerow([getattr(rec, c) if c in ("epoch",) else f"{getattr(rec, c):.6f}"
                             for c in LOG_COLUMNS])


def _draw_negative(rng: np.random.Generator, n_products: int, purchased: set[int]) -> int:
    while True:
        candidate = int(rng.integers(n_products))
        if candidate not in purchased:
            return candidate


def train(
    graph: SemanticGraph,
    dataset: Dataset,
    user_targets: list[PhysioTargets],
    config: TrainConfig,
) -> tuple[ModelParams, list[EpochStats]]:
    """Minibatch gradient descent on ranking loss + lam * nutrition loss.

    Deterministic for a fixed config: parameter init, batch order and
    negative draws all flow from config.seed.
    """
    if not dataset.purchases:
        raise ValueError("cannot train without purchase records")
    positives = [
        (dataset.user_index[r.user_id], dataset.product_index[r.product_id])
        for r in dataset.purchases
    ]
    purchased = dataset.purchases_by_user()
    if any(len(p) == len(dataset.products) for p in purchased.values()):
        raise ValueError("a user purchased the entire catalog; negatives are unsampleable")

    mapped, table = graph.nutrient_table()
    if config.lam > 0 and not mapped:
        raise ValueError("nutrition loss requires at least one mapped product")
    nutrition = config.nutrition
    if nutrition.pi_star is None:
        cohort_pi = float(np.mean([t.protein_target for t in user_targets]))
        nutrition = NutritionTargets(
            r_star=nutrition.r_star,
            rho_star=nutrition.rho_star,
            pi_star=cohort_pi,
            beta_size=nutrition.beta_size,
            weights=nutrition.weights,
        )

    rng = np.random.Generator(np.random.PCG64(config.seed))
    params = init_params(graph, config.d_emb, config.n_layers, seed=config.seed)
    taus = config.schedule.values(config.epochs)
    n_products = len(dataset.products)
    log: list[EpochStats] = []

    for epoch in range(config.epochs):
        tau = taus[epoch]
        order = rng.permutation(len(positives))
        sums = {name: 0.0 for name in ("rank", "ratio", "density", "quantity", "variance", "total")}
        n_batches = 0
        for start in range(0, len(order), config.batch_size):
            chunk = order[start : start + config.batch_size]
            batch: TripleBatch = []
            for idx in chunk:
                u, p = positives[idx]
                for _ in range(config.negatives_per_positive):
                    batch.append((u, p, _draw_negative(rng, n_products, purchased[u])))
            _, trace = forward(graph, params)
            rank_t = build_rank_loss(trace, batch)
            if config.lam > 0:
                batch_users = sorted({t[0] for t in batch})
                nut_t, parts = build_nutrition_loss(trace, batch_users, mapped, table, nutrition, tau)
                total_t = rank_t + nut_t * config.lam
                part_values = {name: t.item() for name, t in parts.items()}
            else:
                total_t = rank_t
                part_values = {name: 0.0 for name in SUB_LOSS_NAMES}
            grads = gradients(total_t, trace, params)
            params.step(grads, config.learning_rate)
            sums["rank"] += rank_t.item()
            sums["total"] += total_t.item()
            for name in SUB_LOSS_NAMES:
                sums[name] += part_values[name]
            n_batches += 1
        log.append(
            EpochStats(
                epoch=epoch,
                tau=tau,
                l_rank=sums["rank"] / n_batches,
                l_ratio=sums["ratio"] / n_batches,
                l_density=sums["density"] / n_batches,
                l_quantity=sums["quantity"] / n_batches,
                l_variance=sums["variance"] / n_batches,
                l_total=sums["total"] / n_batches,
            )
        )
    return params, log


# ---------------------------------------------------------------------------
# Candidate retrieval

@dataclass(frozen=True)
class CandidateSet:
    user: int
    products: tuple[int, ...]  # dataset product indices, best first


def candidates(
    user: int,
    emb: FinalEmbeddings,
    k: int,
    mapped_only: bool,
    graph: SemanticGraph,
) -> CandidateSet:
    """Top-k products by affinity, ties broken by ascending product index."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if mapped_only:
        indices = np.array(graph.mapped_product_indices(), dtype=int)
    else:
        indices = np.arange(graph.n_products)
    scores = emb.products[indices] @ emb.users[user]
    order = np.lexsort((indices, -scores))
    chosen = indices[order][:k]
    return CandidateSet(user=user, products=tuple(int(p) for p in chosen))
