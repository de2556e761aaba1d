"""Explicit bundle optimizer: hybrid candidate pool, energy over item
selections with per-item quantities, Metropolis simulated annealing, and an
exhaustive oracle for small instances.

Energy is (calorie deviation + beta * protein deviation, both normalized by
their targets) minus alpha times the quantity-weighted mean affinity, so
lower is better and a perfectly on-target bundle of liked items goes
negative.
"""

import itertools
import math
import random
from dataclasses import dataclass

import numpy as np

from .catalog import NutrientVector
from .graph import SemanticGraph
from .model import FinalEmbeddings
from .physiology import PhysioTargets


@dataclass(frozen=True)
class OptConfig:
    alpha: float = 0.10  # desire weight
    beta: float = 1.0  # protein-deviation weight
    k: int = 8  # bundle size
    k_min: int = 5
    k_max: int = 10
    q_min: int = 1
    q_max: int = 3
    t0: float = 1.0
    cooling: float = 0.999
    iterations: int = 5000
    p_swap: float = 0.5
    p_adjust: float = 0.4
    p_reset: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be >= 0")
        if not (self.k_min <= self.k <= self.k_max):
            raise ValueError(f"k={self.k} outside [{self.k_min}, {self.k_max}]")
        if self.q_min > self.q_max or self.q_min < 0:
            raise ValueError("need 0 <= q_min <= q_max")
        if not (0 < self.cooling < 1):
            raise ValueError("cooling factor must be in (0, 1)")
        if abs(self.p_swap + self.p_adjust + self.p_reset - 1.0) > 1e-9:
            raise ValueError("mutation probabilities must sum to 1")
        if self.iterations < 0 or self.t0 <= 0:
            raise ValueError("iterations must be >= 0 and t0 > 0")

    @property
    def quantity_domain(self) -> range:
        return range(self.q_min, self.q_max + 1)


@dataclass(frozen=True)
class PoolConfig:
    k_score: int = 40
    k_density: int = 20

    def __post_init__(self):
        if self.k_score < 0 or self.k_density < 0:
            raise ValueError("pool sizes must be >= 0")


# A bundle is a list of (dataset product index, quantity) pairs with distinct
# products; quantities live in the active domain.
BundleState = list[tuple[int, int]]


@dataclass
class Pool:
    """Candidate products with the per-item data the optimizer consumes."""

    product_indices: list[int]
    cal: list[float]
    prot: list[float]
    scores: list[float]
    nutrients: list[NutrientVector]

    def __post_init__(self):
        self.position = {p: i for i, p in enumerate(self.product_indices)}

    def __len__(self) -> int:
        return len(self.product_indices)


@dataclass(frozen=True)
class EnergyBreakdown:
    l_phys: float
    l_des: float
    l_opt: float
    total_cal: float
    total_prot: float


def build_pool(
    user_vec: np.ndarray,
    emb: FinalEmbeddings,
    graph: SemanticGraph,
    config: PoolConfig = PoolConfig(),
    k: int = 5,
) -> Pool:
    """Merge top-scoring and top-protein-density mapped products.

    Order is the score block followed by unseen density-block items; ties in
    either ranking break toward the smaller product index.
    """
    mapped, table = graph.nutrient_table()
    if len(mapped) < k:
        raise ValueError(f"only {len(mapped)} mapped products; need at least {k}")
    indices = np.asarray(mapped)
    scores = emb.products[indices] @ user_vec
    cal = table[:, 0]
    prot = table[:, 1]
    density = np.where(cal > 0, 100.0 * prot / np.maximum(cal, 1e-12), -np.inf)

    by_score = indices[np.lexsort((indices, -scores))][: config.k_score]
    by_density = indices[np.lexsort((indices, -density))][: config.k_density]
    chosen: list[int] = []
    seen: set[int] = set()
    for p in list(by_score) + list(by_density):
        p = int(p)
        if p not in seen:
            seen.add(p)
            chosen.append(p)

    pos_of = {int(p): i for i, p in enumerate(indices)}
    rows = [pos_of[p] for p in chosen]
    return Pool(
        product_indices=chosen,
        cal=[float(cal[r]) for r in rows],
        prot=[float(prot[r]) for r in rows],
        scores=[float(scores[r]) for r in rows],
        nutrients=[NutrientVector(*table[r]) for r in rows],
    )


def phys_penalty(state: BundleState, pool: Pool, targets: PhysioTargets, beta: float) -> float:
    """Target-normalized deviation of bundle calories and protein."""
    if targets.tdee <= 0 or targets.protein_target <= 0:
        raise ValueError("targets must be positive")
    total_cal = 0.0
    total_prot = 0.0
    for product, qty in state:
        pos = pool.position[product]
        total_cal += qty * pool.cal[pos]
        total_prot += qty * pool.prot[pos]
    return (
        abs(total_cal - targets.tdee) / targets.tdee
        + beta * abs(total_prot - targets.protein_target) / targets.protein_target
    )


def desire_reward(state: BundleState, pool: Pool, alpha: float) -> float:
    """alpha times the quantity-weighted mean affinity of the bundle."""
    if not state:
        raise ValueError("desire reward is undefined for an empty bundle")
    total_q = 0
    weighted = 0.0
    for product, qty in state:
        total_q += qty
        weighted += qty * pool.scores[pool.position[product]]
    if total_q == 0:  # all-zero quantities (binary-inclusion mode)
        return 0.0
    return alpha * weighted / total_q


def energy(
    state: BundleState,
    pool: Pool,
    targets: PhysioTargets,
    config: OptConfig,
) -> EnergyBreakdown:
    total_cal = 0.0
    total_prot = 0.0
    for product, qty in state:
        pos = pool.position[product]
        total_cal += qty * pool.cal[pos]
        total_prot += qty * pool.prot[pos]
    l_phys = phys_penalty(state, pool, targets, config.beta)
    l_des = desire_reward(state, pool, config.alpha)
    return EnergyBreakdown(
        l_phys=l_phys,
        l_des=l_des,
        l_opt=l_phys - l_des,
        total_cal=total_cal,
        total_prot=total_prot,
    )


def mutate(state: BundleState, pool: Pool, config: OptConfig, rng: random.Random) -> BundleState:
    """One proposal: swap an item, nudge a quantity, or redraw a quantity.

    Product distinctness and the quantity domain are preserved by
    construction. A quantity nudge that would leave the domain is redrawn
    once and then degrades to an identity proposal.
    """
    out = list(state)
    move = rng.random()
    n_items = len(out)
    if move < config.p_swap:
        members = {p for p, _ in out}
        if len(pool) > n_items:
            while True:
                candidate = pool.product_indices[rng.randrange(len(pool))]
                if candidate not in members:
                    break
            slot = rng.randrange(n_items)
            qty = rng.randrange(config.q_min, config.q_max + 1)
            out[slot] = (candidate, qty)
        # pool exhausted by the bundle: nothing to swap in, identity proposal
    elif move < config.p_swap + config.p_adjust:
        for _ in range(2):  # one redraw on a clamped proposal
            slot = rng.randrange(n_items)
            product, qty = out[slot]
            delta = 1 if rng.random() < 0.5 else -1
            if config.q_min <= qty + delta <= config.q_max:
                out[slot] = (product, qty + delta)
                break
    else:
        slot = rng.randrange(n_items)
        product, _ = out[slot]
        out[slot] = (product, rng.randrange(config.q_min, config.q_max + 1))
    return out


def initial_state(pool: Pool, k: int) -> BundleState:
    """Preference top-k of the pool at quantity 1 (the pre-optimization basket)."""
    order = sorted(range(len(pool)), key=lambda i: (-pool.scores[i], pool.product_indices[i]))
    return [(pool.product_indices[i], 1) for i in order[:k]]


@dataclass
class AnnealResult:
    best_state: BundleState
    best_energy: EnergyBreakdown
    initial_state: BundleState
    initial_energy: EnergyBreakdown
    trace: list[float]  # best-so-far energy after each iteration


def anneal(pool: Pool, targets: PhysioTargets, config: OptConfig) -> AnnealResult:
    """Metropolis simulated annealing with geometric cooling.

    Proposals that do not worsen the energy are always accepted; worsening
    ones with probability exp(-delta / T). Returns the best state ever seen.
    """
    if len(pool) < config.k:
        raise ValueError(f"pool of {len(pool)} cannot fill a bundle of {config.k}")
    rng = random.Random(config.seed)
    current = initial_state(pool, config.k)
    start = energy(current, pool, targets, config)

    # Hot path: track totals incrementally instead of re-deriving per proposal.
    position = pool.position
    cal, prot, scores = pool.cal, pool.prot, pool.scores
    tdee, prot_target = targets.tdee, targets.protein_target
    alpha, beta = config.alpha, config.beta

    def opt_value(st: BundleState) -> float:
        t_cal = t_prot = t_score = 0.0
        t_q = 0
        for product, qty in st:
            pos = position[product]
            t_cal += qty * cal[pos]
            t_prot += qty * prot[pos]
            t_score += qty * scores[pos]
            t_q += qty
        des = alpha * t_score / t_q if t_q else 0.0
        return abs(t_cal - tdee) / tdee + beta * abs(t_prot - prot_target) / prot_target - des

    e_current = start.l_opt
    best_state = list(current)
    e_best = e_current
    temp = config.t0
    trace: list[float] = []
    for _ in range(config.iterations):
        proposal = mutate(current, pool, config, rng)
        e_prop = opt_value(proposal)
        delta = e_prop - e_current
        if delta <= 0 or rng.random() < math.exp(-delta / temp):
            current = proposal
            e_current = e_prop
            if e_current < e_best:
                e_best = e_current
                best_state = list(current)
        temp *= config.cooling
        trace.append(e_best)
    return AnnealResult(
        best_state=best_state,
        best_energy=energy(best_state, pool, targets, config),
        initial_state=initial_state(pool, config.k),
        initial_energy=start,
        trace=trace,
    )


def brute_force_oracle(
    pool: Pool,
    k: int,
    targets: PhysioTargets,
    config: OptConfig,
) -> tuple[BundleState, EnergyBreakdown]:
    """Exhaustive enumeration of all k-subsets and quantity assignments.

    Ties in energy resolve to the lexicographically smallest state, with
    states canonicalized by ascending product index.
    """
    n = len(pool)
    if n < k:
        raise ValueError("pool smaller than bundle size")
    domain = list(config.quantity_domain)
    n_states = math.comb(n, k) * len(domain) ** k
    if n_states > 10_000_000:
        raise ValueError(f"{n_states} states exceed the enumeration budget")
    best_key: tuple | None = None
    best_state: BundleState | None = None
    for subset in itertools.combinations(sorted(pool.product_indices), k):
        for quantities in itertools.product(domain, repeat=k):
            state = list(zip(subset, quantities))
            value = energy(state, pool, targets, config).l_opt
            key = (value, tuple(state))
            if best_key is None or key < best_key:
                best_key = key
                best_state = state
    assert best_state is not None
    return best_state, energy(best_state, pool, targets, config)
