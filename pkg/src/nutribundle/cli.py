"""Command line for the full pipeline: synthetic data, graph construction,
training, one-off recommendations, the ablation bench, and the HTTP service.

Every stage reads and writes plain files, so later stages can be re-run or
rewired by substituting artifacts; all randomness flows from --seed flags.
"""

import argparse
import json
import os
import sys

from . import annealing, bench, graph as graphmod, model, textenc, training
from .catalog import (
    ACTIVITIES,
    GOALS,
    SEXES,
    UserProfile,
    generate_synthetic,
    load_dataset,
    validate,
    write_dataset,
)
from .physiology import TOLERANCE_FRACTION
from .runtime import RecommendOptions, load_artifacts, recommend_for_profile


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nutribundle")
    sub = parser.add_subparsers(dest="verb", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("gen-data", help="write a synthetic dataset as four CSVs", formatter_class=fmt)
    p.add_argument("--seed", type=int, default=7, help="generator seed")
    p.add_argument("--products", type=int, default=500, help="catalog size")
    p.add_argument("--foods", type=int, default=100, help="reference food count")
    p.add_argument("--users", type=int, default=200, help="cohort size")
    p.add_argument("--purchases-per-user", type=int, default=20, help="history length")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("build-graph", help="build and store the catalog graph", formatter_class=fmt)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="graph JSON path")
    p.add_argument("--theta-sim", type=float, default=graphmod.GraphConfig.theta_sim,
                   help="similarity threshold for graph edges")
    p.add_argument("--no-similar", action="store_true", help="skip product-product similarity edges")

    p = sub.add_parser("train", help="train the preference model", formatter_class=fmt)
    p.add_argument("--data", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True, help="checkpoint JSON path")
    p.add_argument("--seed", type=int, default=0, help="training seed")
    p.add_argument("--lambda", dest="lam", type=float, default=training.TrainConfig.lam,
                   help="nutrition loss weight")
    p.add_argument("--epochs", type=int, default=training.TrainConfig.epochs, help="training epochs")
    p.add_argument("--batch-size", type=int, default=training.TrainConfig.batch_size, help="positives per batch")
    p.add_argument("--learning-rate", type=float, default=training.TrainConfig.learning_rate, help="gradient step size")

    p = sub.add_parser("recommend", help="optimize one bundle for a profile", formatter_class=fmt)
    p.add_argument("--data", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--age", type=int, required=True, help="years")
    p.add_argument("--sex", choices=SEXES, required=True, help="profile sex")
    p.add_argument("--weight", type=float, required=True, help="bodyweight, kg")
    p.add_argument("--height", type=float, required=True, help="height, cm")
    p.add_argument("--activity", choices=ACTIVITIES, required=True, help="activity level")
    p.add_argument("--goal", choices=GOALS, required=True, help="dietary goal")
    p.add_argument("--seed", type=int, default=0, help="annealer seed")
    p.add_argument("--alpha", type=float, default=annealing.OptConfig.alpha, help="desire weight")
    p.add_argument("--beta", type=float, default=annealing.OptConfig.beta, help="protein deviation weight")
    p.add_argument("--k", type=int, default=annealing.OptConfig.k, help="bundle size")
    p.add_argument("--qmax", type=int, default=annealing.OptConfig.q_max, help="max per-item quantity")
    p.add_argument("--iterations", type=int, default=annealing.OptConfig.iterations, help="annealing iterations")
    p.add_argument("--tolerance", type=float, default=TOLERANCE_FRACTION, help="compliance band fraction")
    p.add_argument("--out", default=None, help="write the bundle report JSON here")

    p = sub.add_parser("ablate", help="run the ablation bench", formatter_class=fmt)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--ablation", default="all", help="A0..A6 or 'all'")
    p.add_argument("--runs", type=int, default=5, help="seeded runs per arm (seeds 11..)")
    p.add_argument("--seed", type=int, default=11, help="first run seed")
    p.add_argument("--lambda", dest="lam", type=float, default=training.TrainConfig.lam, help="nutrition loss weight")
    p.add_argument("--epochs", type=int, default=training.TrainConfig.epochs, help="training epochs")
    p.add_argument("--alpha", type=float, default=annealing.OptConfig.alpha, help="desire weight")
    p.add_argument("--beta", type=float, default=annealing.OptConfig.beta, help="protein deviation weight")
    p.add_argument("--k", type=int, default=annealing.OptConfig.k, help="bundle size")
    p.add_argument("--qmax", type=int, default=annealing.OptConfig.q_max, help="max per-item quantity")
    p.add_argument("--iterations", type=int, default=annealing.OptConfig.iterations, help="annealing iterations")
    p.add_argument("--tolerance", type=float, default=TOLERANCE_FRACTION, help="compliance band fraction")
    p.add_argument("--theta-sim", type=float, default=graphmod.GraphConfig.theta_sim, help="similarity threshold")
    p.add_argument("--threads", type=int, default=1, help="worker cap for per-user optimization")

    p = sub.add_parser("serve", help="start the HTTP service", formatter_class=fmt)
    p.add_argument("--data", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--port", type=int, default=8080, help="listen port")
    p.add_argument("--ui", default=None, help="static UI directory (defaults to ./frontend/dist if present)")
    return parser


def _cmd_gen_data(args) -> int:
    dataset = generate_synthetic(args.seed, args.products, args.foods, args.users, args.purchases_per_user)
    write_dataset(dataset, args.out)
    print(f"wrote {len(dataset.products)} products, {len(dataset.foods)} foods, "
          f"{len(dataset.users)} users, {len(dataset.purchases)} purchases to {args.out}")
    return 0


def _cmd_build_graph(args) -> int:
    dataset = load_dataset(args.data)
    problems = validate(dataset)
    if problems:
        raise ValueError(f"dataset invalid: {problems[0]} (+{len(problems) - 1} more)")
    cfg = graphmod.GraphConfig(theta_sim=args.theta_sim)
    g = graphmod.build_graph(dataset, textenc.DEFAULT_CONFIG, cfg, include_similar=not args.no_similar)
    graphmod.save_graph(g, dataset, args.out)
    print(f"graph: {len(g.similar_edges)} similar edges, {len(g.maps_edges)} resolved products, "
          f"{len(g.unmapped_products)} unmapped -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    from . import physiology

    dataset = load_dataset(args.data)
    g = graphmod.load_graph(args.graph, dataset)
    cfg = training.TrainConfig(
        lam=args.lam,
        seed=args.seed,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
    )
    targets = [physiology.targets(u) for u in dataset.users]
    params, log = training.train(g, dataset, targets, cfg)
    meta = {
        "seed": args.seed,
        "lambda": args.lam,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "learning_rate": args.learning_rate,
        "d_emb": cfg.d_emb,
        "n_layers": cfg.n_layers,
    }
    model.save_checkpoint(params, meta, args.out)
    log_path = os.path.splitext(args.out)[0] + "_log.csv"
    training.write_training_log(log, log_path)
    print(f"trained {args.epochs} epochs; l_total {log[0].l_total:.4f} -> {log[-1].l_total:.4f}; "
          f"checkpoint {args.out}, log {log_path}")
    return 0


def _cmd_recommend(args) -> int:
    artifacts = load_artifacts(args.data, args.graph, args.checkpoint)
    profile = UserProfile(
        id="cli",
        age=args.age,
        sex=args.sex,
        weight=args.weight,
        height=args.height,
        activity=args.activity,
        goal=args.goal,
    )
    options = RecommendOptions(
        alpha=args.alpha,
        beta=args.beta,
        k=args.k,
        quantity_max=args.qmax,
        iterations=args.iterations,
        tolerance=args.tolerance,
        seed=args.seed,
    )
    report = recommend_for_profile(artifacts, profile, options)
    rendered = json.dumps(report, indent=1, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(rendered)
    print(f"targets: {report['targets']['tdee']:.0f} kcal, {report['targets']['protein_target']:.0f} g protein")
    for item in report["items"]:
        print(f"  {item['quantity']} x {item['name']} ({item['cal']:.0f} kcal, {item['prot']:.1f} g)")
    print(f"totals: {report['totals']['cal']:.0f} kcal, {report['totals']['prot']:.1f} g protein; "
          f"success: {report['success']}")
    return 0


def _cmd_ablate(args) -> int:
    dataset = load_dataset(args.data)
    cfg = bench.BenchConfig(
        train=training.TrainConfig(lam=args.lam, epochs=args.epochs),
        opt=annealing.OptConfig(
            alpha=args.alpha, beta=args.beta, k=args.k, q_max=args.qmax, iterations=args.iterations
        ),
        graph=graphmod.GraphConfig(theta_sim=args.theta_sim),
        tolerance=args.tolerance,
        threads=args.threads,
    )
    seeds = list(range(args.seed, args.seed + args.runs))
    ids = list(bench.ABLATIONS) if args.ablation == "all" else [args.ablation]
    harness = bench.AblationBench(dataset, cfg)
    reports = []
    for aid in ids:
        reports.append(harness.run(aid, seeds))
        print(f"{aid} done: tsr {reports[-1].tsr:.2f}")
    bench.write_reports(reports, args.out, args.tolerance)
    text, _ = bench.render_table(reports)
    print(text, end="")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    artifacts = load_artifacts(args.data, args.graph, args.checkpoint)
    ui_dir = args.ui
    if ui_dir is None:
        default_ui = os.path.join(os.getcwd(), "frontend", "dist")
        ui_dir = default_ui if os.path.isdir(default_ui) else None
    app = create_app(artifacts, ui_dir=ui_dir)
    uvicorn.run(app, host="127.0.0.1", port=args.port)
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "build-graph": _cmd_build_graph,
    "train": _cmd_train,
    "recommend": _cmd_recommend,
    "ablate": _cmd_ablate,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.verb](args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error ({args.verb}): {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
