"""Frozen-artifact serving path shared by the CLI and the HTTP service:
load dataset + graph + checkpoint, derive a preference vector for an ad-hoc
profile, and assemble one optimized bundle report.
"""

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from . import annealing, graph as graphmod, model, physiology, training
from .catalog import Dataset, UserProfile, load_dataset
from .graph import SemanticGraph


@dataclass
class Artifacts:
    dataset: Dataset
    graph: SemanticGraph
    params: model.ModelParams
    emb: model.FinalEmbeddings
    meta: dict
    mean_user: np.ndarray
    goal_vectors: dict[str, np.ndarray]

    @property
    def checkpoint_hash(self) -> str:
        canon = json.dumps(self.meta, sort_keys=True).encode()
        return hashlib.blake2b(canon, digest_size=8).hexdigest()


def load_artifacts(data_dir: str, graph_path: str, checkpoint_path: str) -> Artifacts:
    for path in (graph_path, checkpoint_path):
        if not os.path.exists(path):
            raise FileNotFoundError(f"missing artifact file: {path}")
    dataset = load_dataset(data_dir)
    g = graphmod.load_graph(graph_path, dataset)
    params, meta = model.load_checkpoint(checkpoint_path, g)
    emb, _ = model.forward(g, params)
    mean_user = emb.users.mean(axis=0)
    goal_vectors = {}
    for goal in ("loss", "maintenance", "gain"):
        rows = [i for i, u in enumerate(dataset.users) if u.goal == goal]
        goal_vectors[goal] = emb.users[rows].mean(axis=0) if rows else mean_user
    return Artifacts(
        dataset=dataset,
        graph=g,
        params=params,
        emb=emb,
        meta=meta,
        mean_user=mean_user,
        goal_vectors=goal_vectors,
    )


def profile_vector(artifacts: Artifacts, profile: UserProfile) -> np.ndarray:
    """Preference vector for a profile outside the training cohort: a 50/50
    blend of the cohort mean and the same-goal mean embedding."""
    return 0.5 * artifacts.mean_user + 0.5 * artifacts.goal_vectors[profile.goal]


@dataclass(frozen=True)
class RecommendOptions:
    alpha: float = annealing.OptConfig.alpha
    beta: float = annealing.OptConfig.beta
    k: int = annealing.OptConfig.k
    quantity_max: int = annealing.OptConfig.q_max
    iterations: int = annealing.OptConfig.iterations
    tolerance: float = 0.12
    seed: int = 0


TRACE_POINTS = 100


def _thin_trace(trace: list[float], limit: int = TRACE_POINTS) -> list[float]:
    if len(trace) <= limit:
        return list(trace)
    idx = np.linspace(0, len(trace) - 1, limit).astype(int)
    return [trace[i] for i in idx]


def recommend_for_profile(
    artifacts: Artifacts,
    profile: UserProfile,
    options: RecommendOptions = RecommendOptions(),
) -> dict:
    """Full inference pass: targets -> candidate pool -> annealed bundle."""
    problems = profile.check()
    if problems:
        raise ValueError("; ".join(problems))
    targets = physiology.targets(profile)
    user_vec = profile_vector(artifacts, profile)
    opt = dataclasses.replace(
        annealing.OptConfig(),
        alpha=options.alpha,
        beta=options.beta,
        k=options.k,
        q_max=options.quantity_max,
        iterations=options.iterations,
        seed=options.seed,
    )
    pool = annealing.build_pool(user_vec, artifacts.emb, artifacts.graph, k=opt.k)
    result = annealing.anneal(pool, targets, opt)
    breakdown = result.best_energy

    items = []
    totals = {"cal": 0.0, "prot": 0.0, "carb": 0.0, "fat": 0.0}
    for product_idx, qty in result.best_state:
        nutrients = pool.nutrients[pool.position[product_idx]]
        product = artifacts.dataset.products[product_idx]
        items.append(
            {
                "product_id": product.id,
                "name": product.name,
                "quantity": int(qty),
                "cal": float(nutrients.cal),
                "prot": float(nutrients.prot),
            }
        )
        totals["cal"] += qty * float(nutrients.cal)
        totals["prot"] += qty * float(nutrients.prot)
        totals["carb"] += qty * float(nutrients.carb)
        totals["fat"] += qty * float(nutrients.fat)

    success = bool(
        abs(totals["cal"] - targets.tdee) <= options.tolerance * targets.tdee
        and abs(totals["prot"] - targets.protein_target) <= options.tolerance * targets.protein_target
    )
    return {
        "profile": dataclasses.asdict(profile),
        "targets": dataclasses.asdict(targets),
        "items": items,
        "totals": totals,
        "energy": {
            "l_phys": breakdown.l_phys,
            "l_des": breakdown.l_des,
            "l_opt": breakdown.l_opt,
        },
        "success": success,
        "tolerance": options.tolerance,
        "alpha": options.alpha,
        "beta": options.beta,
        "k": options.k,
        "quantity_max": options.quantity_max,
        "iterations": options.iterations,
        "seed": options.seed,
        "trace": _thin_trace(result.trace),
        "cold_start": True,
    }


def config_defaults() -> dict:
    """Single source of truth for every tunable the UI exposes."""
    opt = annealing.OptConfig()
    return {
        "lambda": training.TrainConfig().lam,
        "alpha": opt.alpha,
        "beta": opt.beta,
        "theta_sim": graphmod.GraphConfig().theta_sim,
        "tolerance": 0.12,
        "k": opt.k,
        "quantity_max": opt.q_max,
        "quantity_domain": list(opt.quantity_domain),
        "iterations": opt.iterations,
        "ranges": {
            "alpha": {"min": 0.0, "max": 0.5},
            "tolerance": {"min": 0.05, "max": 0.20},
            "k": {"min": opt.k_min, "max": opt.k_max},
            "quantity_max": {"min": 1, "max": 3},
        },
    }


def request_seed(payload: dict) -> int:
    """Stable seed from a canonicalized request body."""
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return int.from_bytes(hashlib.blake2b(canon, digest_size=8).digest(), "little") >> 1
