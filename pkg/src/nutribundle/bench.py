"""Evaluation bench: compliance metrics, the A0-A6 ablation harness over
seeded runs, ranking sanity checks, and report rendering.

Ablation arms rewire the pipeline; metrics always come from the standard
product->food resolution so bundle nutrition is computable in every arm.
"""

import dataclasses
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import annealing, graph as graphmod, model, physiology, textenc, training
from .catalog import Dataset

DEFAULT_SEEDS = (11, 12, 13, 14, 15)
DEFAULT_TOLERANCE = 0.12

ABLATIONS = {
    "A0": "Random Scout",
    "A1": "Pure Neural",
    "A2": "Late Fusion",
    "A3": "Implicit Only",
    "A4": "Proposed (Early)",
    "A5": "No Semantics",
    "A6": "No Elasticity",
}

# Which arms train with the nutrition regularizer, anneal, or see the graph.
_ARM_TRAINS = {"A1": 0.0, "A2": 0.0, "A3": None, "A4": None, "A5": None, "A6": None}
_ARM_ANNEALS = {"A0", "A2", "A4", "A5", "A6"}


@dataclass(frozen=True)
class BenchConfig:
    train: training.TrainConfig = training.TrainConfig()
    opt: annealing.OptConfig = annealing.OptConfig()
    pool: annealing.PoolConfig = annealing.PoolConfig()
    graph: graphmod.GraphConfig = graphmod.GraphConfig()
    encoder: textenc.EncoderConfig = textenc.DEFAULT_CONFIG
    tolerance: float = DEFAULT_TOLERANCE
    threads: int = 1


@dataclass
class BundleOutcome:
    user_id: str
    items: list[tuple[str, int]]  # (product id, quantity)
    total_cal: float
    total_prot: float
    tdee: float
    protein_target: float
    initial_cal: float


def meets_targets(outcome: BundleOutcome, tolerance: float = DEFAULT_TOLERANCE) -> bool:
    return (
        abs(outcome.total_cal - outcome.tdee) <= tolerance * outcome.tdee
        and abs(outcome.total_prot - outcome.protein_target) <= tolerance * outcome.protein_target
    )


def tsr(outcomes: list[BundleOutcome], tolerance: float = DEFAULT_TOLERANCE) -> float:
    """Fraction of bundles inside both tolerance bands (closed intervals)."""
    if not outcomes:
        raise ValueError("tsr needs at least one outcome")
    return sum(meets_targets(o, tolerance) for o in outcomes) / len(outcomes)


def final_mae(outcomes: list[BundleOutcome]) -> float:
    """Mean absolute calorie gap between bundles and their targets."""
    if not outcomes:
        raise ValueError("final_mae needs at least one outcome")
    return float(np.mean([abs(o.total_cal - o.tdee) for o in outcomes]))


def opt_cost(outcomes: list[BundleOutcome]) -> float:
    """Mean absolute calorie shift the optimizer applied to the initial basket."""
    if not outcomes:
        raise ValueError("opt_cost needs at least one outcome")
    return float(np.mean([abs(o.initial_cal - o.total_cal) for o in outcomes]))


@dataclass
class RunReport:
    ablation: str
    method: str
    seeds: list[int]
    outcomes: dict[int, list[BundleOutcome]]
    tsr: float
    final_mae_mean: float
    final_mae_std: float
    opt_cost_mean: float
    opt_cost_std: float


class AblationBench:
    """Runs ablation arms against one dataset, caching shared training runs."""

    def __init__(self, dataset: Dataset, config: BenchConfig = BenchConfig()):
        self.dataset = dataset
        self.config = config
        self._graphs: dict[str, graph.SemanticGraph] = {}
        self._models: dict[tuple, model.ModelParams] = {}
        self.user_targets = [physiology.targets(u) for u in dataset.users]

    # -- shared artifacts ---------------------------------------------------

    def graph_variant(self, variant: str) -> graphmod.SemanticGraph:
        if variant not in self._graphs:
            if variant == "full":
                g = graphmod.build_graph(self.dataset, self.config.encoder, self.config.graph)
            elif variant == "nosim":
                g = graphmod.build_graph(
                    self.dataset, self.config.encoder, self.config.graph, include_similar=False
                )
            elif variant == "purchases":
                g = graphmod.assemble(self.dataset, [], [], self.config.graph)
            else:
                raise ValueError(f"unknown graph variant {variant!r}")
            self._graphs[variant] = g
        return self._graphs[variant]

    def trained(self, variant: str, lam: float, seed: int) -> model.ModelParams:
        key = (variant, lam, seed)
        if key not in self._models:
            cfg = dataclasses.replace(self.config.train, lam=lam, seed=seed)
            params, _ = training.train(self.graph_variant(variant), self.dataset, self.user_targets, cfg)
            self._models[key] = params
        return self._models[key]

    # -- one arm ------------------------------------------------------------

    def _random_pool(self, run_seed: int, user: int, emb: model.FinalEmbeddings) -> annealing.Pool:
        g = self.graph_variant("full")
        mapped = g.mapped_product_indices()
        size = min(self.config.pool.k_score + self.config.pool.k_density, len(mapped))
        rng = np.random.Generator(np.random.PCG64(run_seed * 1_000_003 + user))
        chosen = sorted(int(p) for p in rng.choice(mapped, size=size, replace=False))
        nutrients = [g.resolved_nutrients[p] for p in chosen]
        return annealing.Pool(
            product_indices=chosen,
            cal=[n.cal for n in nutrients],
            prot=[n.prot for n in nutrients],
            scores=[float(emb.products[p] @ emb.users[user]) for p in chosen],
            nutrients=nutrients,
        )

    def run_seed(self, ablation: str, seed: int) -> list[BundleOutcome]:
        if ablation not in ABLATIONS:
            raise ValueError(f"unknown ablation id {ablation!r}")
        cfg = self.config
        full = self.graph_variant("full")
        if ablation == "A0":
            params = model.init_params(full, cfg.train.d_emb, cfg.train.n_layers, seed=seed)
            emb, _ = model.forward(full, params)
            pool_graph = full
        elif ablation == "A1":
            g = self.graph_variant("purchases")
            emb, _ = model.forward(g, self.trained("purchases", 0.0, seed))
            pool_graph = full  # nutrient resolution for metrics
        elif ablation == "A5":
            g = self.graph_variant("nosim")
            emb, _ = model.forward(g, self.trained("nosim", cfg.train.lam, seed))
            pool_graph = g
        else:
            lam = _ARM_TRAINS[ablation]
            lam = cfg.train.lam if lam is None else lam
            emb, _ = model.forward(full, self.trained("full", lam, seed))
            pool_graph = full

        opt = dataclasses.replace(cfg.opt, seed=seed)
        if ablation == "A6":
            opt = dataclasses.replace(opt, q_min=0, q_max=1)
        anneals = ablation in _ARM_ANNEALS

        def solve(user: int) -> BundleOutcome:
            targets = self.user_targets[user]
            if ablation == "A0":
                pool = self._random_pool(seed, user, emb)
            else:
                pool = annealing.build_pool(emb.users[user], emb, pool_graph, cfg.pool, k=opt.k)
            if anneals:
                result = annealing.anneal(pool, targets, opt)
                state, breakdown = result.best_state, result.best_energy
                initial_cal = result.initial_energy.total_cal
            else:
                state = annealing.initial_state(pool, opt.k)
                breakdown = annealing.energy(state, pool, targets, opt)
                initial_cal = breakdown.total_cal
            return BundleOutcome(
                user_id=self.dataset.users[user].id,
                items=[(self.dataset.products[p].id, q) for p, q in state],
                total_cal=breakdown.total_cal,
                total_prot=breakdown.total_prot,
                tdee=targets.tdee,
                protein_target=targets.protein_target,
                initial_cal=initial_cal,
            )

        users = range(len(self.dataset.users))
        if self.config.threads > 1:
            with ThreadPoolExecutor(max_workers=self.config.threads) as pool_exec:
                return list(pool_exec.map(solve, users))
        return [solve(u) for u in users]

    def run(self, ablation: str, seeds=DEFAULT_SEEDS) -> RunReport:
        outcomes = {seed: self.run_seed(ablation, seed) for seed in seeds}
        per_seed_tsr = [tsr(outcomes[s], self.config.tolerance) for s in seeds]
        per_seed_mae = [final_mae(outcomes[s]) for s in seeds]
        per_seed_cost = [opt_cost(outcomes[s]) for s in seeds]
        ddof = 1 if len(seeds) > 1 else 0
        return RunReport(
            ablation=ablation,
            method=ABLATIONS[ablation],
            seeds=list(seeds),
            outcomes=outcomes,
            tsr=float(np.mean(per_seed_tsr)),
            final_mae_mean=float(np.mean(per_seed_mae)),
            final_mae_std=float(np.std(per_seed_mae, ddof=ddof)),
            opt_cost_mean=float(np.mean(per_seed_cost)),
            opt_cost_std=float(np.std(per_seed_cost, ddof=ddof)),
        )


def run_ablation(
    ablation: str,
    dataset: Dataset,
    config: BenchConfig = BenchConfig(),
    seeds=DEFAULT_SEEDS,
) -> RunReport:
    return AblationBench(dataset, config).run(ablation, seeds)


# ---------------------------------------------------------------------------
# Ranking sanity

def split_purchases(dataset: Dataset, fraction: float = 0.1, seed: int = 0):
    """Hold out a per-user fraction of purchases (at least one per user when
    the user has more than one). Returns (training dataset, held-out pairs)."""
    if not (0 < fraction < 1):
        raise ValueError("fraction must be in (0, 1)")
    rng = np.random.Generator(np.random.PCG64(seed))
    rows_by_user: dict[str, list[int]] = {}
    for i, rec in enumerate(dataset.purchases):
        rows_by_user.setdefault(rec.user_id, []).append(i)
    held: set[int] = set()
    for uid in sorted(rows_by_user):
        rows = rows_by_user[uid]
        if len(rows) < 2:
            continue
        take = max(1, round(fraction * len(rows)))
        held.update(int(r) for r in rng.choice(rows, size=min(take, len(rows) - 1), replace=False))
    train_recs = [r for i, r in enumerate(dataset.purchases) if i not in held]
    heldout = [
        (dataset.user_index[dataset.purchases[i].user_id],
         dataset.product_index[dataset.purchases[i].product_id])
        for i in sorted(held)
    ]
    train_ds = Dataset(
        products=dataset.products,
        foods=dataset.foods,
        users=dataset.users,
        purchases=train_recs,
        truth=dataset.truth,
    )
    return train_ds, heldout


def recall_at_k(
    emb: model.FinalEmbeddings,
    heldout: list[tuple[int, int]],
    k: int,
    exclude: dict[int, set[int]] | None = None,
) -> float:
    """Fraction of held-out (user, product) pairs ranked inside the user's
    top-k; products in ``exclude[user]`` (typically training purchases) are
    removed from the ranking first."""
    if not heldout:
        raise ValueError("recall needs a non-empty held-out set")
    hits = 0
    n_products = emb.products.shape[0]
    k = min(k, n_products)
    for user, product in heldout:
        scores = emb.products @ emb.users[user]
        if exclude and user in exclude:
            drop = [p for p in exclude[user] if p != product]
            scores[drop] = -np.inf
        top = np.argpartition(-scores, k - 1)[:k]
        hits += product in top
    return hits / len(heldout)


# ---------------------------------------------------------------------------
# Rendering

TABLE_COLUMNS = ("ID", "Method", "TSR", "Final-MAE", "Opt. Cost")


def render_table(reports: list[RunReport]) -> tuple[str, str]:
    """Aligned text table plus CSV, both rounded to one decimal."""
    if not reports:
        raise ValueError("nothing to render")
    rows = []
    for rep in reports:
        rows.append(
            (
                rep.ablation,
                rep.method,
                f"{rep.tsr:.1f}",
                f"{rep.final_mae_mean:.1f}±{rep.final_mae_std:.1f}",
                f"{rep.opt_cost_mean:.1f}±{rep.opt_cost_std:.1f}",
            )
        )
    widths = [max(len(str(r[i])) for r in rows + [TABLE_COLUMNS]) for i in range(5)]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(TABLE_COLUMNS, widths))]
    lines += ["  ".join(str(c).ljust(w) for c, w in zip(row, widths)) for row in rows]
    text = "\n".join(lines) + "\n"

    csv_lines = ["id,method,tsr,final_mae_mean,final_mae_std,opt_cost_mean,opt_cost_std"]
    for rep in reports:
        csv_lines.append(
            f"{rep.ablation},{rep.method},{rep.tsr:.1f},{rep.final_mae_mean:.1f},"
            f"{rep.final_mae_std:.1f},{rep.opt_cost_mean:.1f},{rep.opt_cost_std:.1f}"
        )
    return text, "\n".join(csv_lines) + "\n"


def write_reports(reports: list[RunReport], out_dir: str, tolerance: float = DEFAULT_TOLERANCE) -> None:
    """One JSON per (ablation, seed) plus the aggregate CSV and text table."""
    os.makedirs(out_dir, exist_ok=True)
    for rep in reports:
        for seed in rep.seeds:
            outcomes = rep.outcomes[seed]
            doc = {
                "ablation": rep.ablation,
                "method": rep.method,
                "seed": seed,
                "tsr": tsr(outcomes, tolerance),
                "final_mae": final_mae(outcomes),
                "opt_cost": opt_cost(outcomes),
                "users": [
                    {
                        "user_id": o.user_id,
                        "items": [{"product_id": pid, "quantity": q} for pid, q in o.items],
                        "total_cal": o.total_cal,
                        "total_prot": o.total_prot,
                        "tdee": o.tdee,
                        "protein_target": o.protein_target,
                        "initial_cal": o.initial_cal,
                        "success": meets_targets(o, tolerance),
                    }
                    for o in outcomes
                ],
            }
            path = os.path.join(out_dir, f"{rep.ablation}_seed{seed}.json")
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, indent=1, sort_keys=True)
                fh.write("\n")
    text, csv_text = render_table(reports)
    with open(os.path.join(out_dir, "ablation_table.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    with open(os.path.join(out_dir, "ablation_table.csv"), "w", encoding="utf-8") as fh:
        fh.write(csv_text)
