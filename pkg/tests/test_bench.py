"""Metrics, ablation harness wiring, ranking sanity utilities, rendering."""

import csv
import io
import json
import os

import numpy as np
import pytest

from nutribundle import annealing, model, training
from nutribundle.bench import (
    AblationBench,
    BenchConfig,
    BundleOutcome,
    DEFAULT_TOLERANCE,
    RunReport,
    final_mae,
    opt_cost,
    recall_at_k,
    render_table,
    run_ablation,
    split_purchases,
    tsr,
    write_reports,
)


def outcome(cal, prot, tdee=2000.0, pt=100.0, initial=None):
    return BundleOutcome(
        user_id="u0",
        items=[("p0", 1)],
        total_cal=cal,
        total_prot=prot,
        tdee=tdee,
        protein_target=pt,
        initial_cal=cal if initial is None else initial,
    )


# -- metrics -------------------------------------------------------------------

def test_tsr_exact_and_boundary():
    assert tsr([outcome(2000, 100)]) == 1.0
    assert tsr([outcome(2000 * 1.13, 100)]) == 0.0
    assert tsr([outcome(2000 * 1.12, 100)]) == 1.0  # closed boundary
    assert tsr([outcome(2000, 100), outcome(100, 100)]) == 0.5


def test_tsr_requires_both_bands():
    assert tsr([outcome(2000, 100 * 1.2)]) == 0.0
    assert tsr([outcome(2000 * 0.8, 100)]) == 0.0


def test_tsr_monotone_in_tolerance():
    outcomes = [outcome(2000 + d, 100 + p) for d, p in [(0, 0), (190, 9), (250, -11), (390, 5), (-230, -2)]]
    values = [tsr(outcomes, tolerance) for tolerance in (0.08, 0.12, 0.20)]
    assert values[0] <= values[1] <= values[2]


def test_final_mae_values():
    assert final_mae([outcome(2000, 100)]) == 0.0
    assert final_mae([outcome(2100, 100), outcome(1900, 100)]) == pytest.approx(100.0)
    assert final_mae([outcome(2021, 100)]) == pytest.approx(21.0)


def test_opt_cost_values():
    assert opt_cost([outcome(2100, 100, initial=3000)]) == pytest.approx(900.0)
    assert opt_cost([outcome(2100, 100, initial=1200)]) == pytest.approx(900.0)
    assert opt_cost([outcome(2100, 100)]) == 0.0


def test_metrics_reject_empty():
    for fn in (tsr, final_mae, opt_cost):
        with pytest.raises(ValueError):
            fn([])


# -- harness -------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_bench(small_dataset):
    cfg = BenchConfig(
        train=training.TrainConfig(epochs=5, batch_size=64),
        opt=annealing.OptConfig(iterations=1200),
    )
    return AblationBench(small_dataset, cfg)


@pytest.fixture(scope="module")
def small_reports(small_bench):
    seeds = (11, 12)
    return {aid: small_bench.run(aid, seeds) for aid in ("A1", "A3", "A4", "A6")}


def test_no_optimizer_arms_have_zero_cost(small_reports):
    assert small_reports["A1"].opt_cost_mean == 0.0
    assert small_reports["A3"].opt_cost_mean == 0.0


def test_single_serving_arms_fail_targets(small_reports):
    assert small_reports["A1"].tsr == 0.0
    assert small_reports["A6"].tsr <= 0.3


def test_annealed_arm_outperforms_pure_ranking(small_reports):
    assert small_reports["A4"].tsr > small_reports["A1"].tsr
    assert small_reports["A4"].final_mae_mean < small_reports["A1"].final_mae_mean


def test_tsr_monotone_in_tolerance_on_real_outcomes(small_reports):
    outcomes = small_reports["A4"].outcomes[11]
    values = [tsr(outcomes, tolerance) for tolerance in (0.08, 0.12, 0.20)]
    assert values[0] <= values[1] <= values[2]


def test_outcomes_keyed_by_seed(small_reports):
    rep = small_reports["A4"]
    assert sorted(rep.outcomes) == [11, 12]
    assert all(len(v) == 25 for v in rep.outcomes.values())


def test_unknown_ablation(small_bench):
    with pytest.raises(ValueError):
        small_bench.run_seed("A9", 11)


def test_run_seed_deterministic(small_bench):
    a = small_bench.run_seed("A4", 11)
    b = small_bench.run_seed("A4", 11)
    assert a == b


def test_threaded_run_matches_serial(small_dataset, small_bench):
    cfg = BenchConfig(
        train=training.TrainConfig(epochs=5, batch_size=64),
        opt=annealing.OptConfig(iterations=1200),
        threads=4,
    )
    threaded = AblationBench(small_dataset, cfg)
    assert threaded.run_seed("A0", 11) == small_bench.run_seed("A0", 11)


# -- split + recall ---------------------------------------------------------------

def test_split_sizes_and_disjointness(small_dataset):
    train_ds, heldout = split_purchases(small_dataset, 0.1, seed=1)
    assert len(train_ds.purchases) + len(heldout) == len(small_dataset.purchases)
    train_pairs = {(r.user_id, r.product_id) for r in train_ds.purchases}
    for u, p in heldout:
        pair = (small_dataset.users[u].id, small_dataset.products[p].id)
        assert pair not in train_pairs


def test_recall_full_catalog_is_one(small_graph, small_dataset):
    params = model.init_params(small_graph, d_emb=4, n_layers=1, seed=0)
    emb, _ = model.forward(small_graph, params)
    heldout = [(0, 5), (1, 9), (2, 30)]
    assert recall_at_k(emb, heldout, k=len(small_dataset.products)) == 1.0


def test_recall_random_near_uniform_baseline():
    rng = np.random.default_rng(0)
    emb = model.FinalEmbeddings(
        users=rng.normal(size=(40, 16)), products=rng.normal(size=(400, 16)), foods=np.zeros((0, 16))
    )
    heldout = [(int(u), int(p)) for u, p in zip(rng.integers(0, 40, 300), rng.integers(0, 400, 300))]
    value = recall_at_k(emb, heldout, k=40)
    assert abs(value - 0.1) < 0.06  # K/|P| = 0.1


def test_recall_excludes_training_items():
    emb = model.FinalEmbeddings(
        users=np.array([[1.0]]), products=np.array([[3.0], [2.0], [1.0]]), foods=np.zeros((0, 1))
    )
    # without exclusion the held-out item ranks 3rd; excluding the two
    # training items promotes it into the top-1
    assert recall_at_k(emb, [(0, 2)], k=1) == 0.0
    assert recall_at_k(emb, [(0, 2)], k=1, exclude={0: {0, 1}}) == 1.0


# -- rendering ----------------------------------------------------------------------

def sample_report():
    return RunReport(
        ablation="A4",
        method="Proposed (Early)",
        seeds=[11],
        outcomes={11: [outcome(2001, 100)]},
        tsr=1.0,
        final_mae_mean=21.04,
        final_mae_std=7.06,
        opt_cost_mean=1147.44,
        opt_cost_std=248.01,
    )


def test_render_table_layout():
    text, csv_text = render_table([sample_report()])
    lines = text.strip().splitlines()
    assert lines[0].split()[:2] == ["ID", "Method"]
    assert "A4" in lines[1] and "21.0±7.1" in lines[1] and "1147.4±248.0" in lines[1]
    assert len(lines) == 2


def test_csv_round_trips_to_same_numbers():
    _, csv_text = render_table([sample_report()])
    rows = list(csv.DictReader(io.StringIO(csv_text)))
    assert len(rows) == 1
    row = rows[0]
    assert float(row["final_mae_mean"]) == 21.0
    assert float(row["opt_cost_mean"]) == 1147.4
    assert float(row["tsr"]) == 1.0


def test_write_reports_layout(tmp_path, small_reports):
    out = str(tmp_path / "reports")
    write_reports(list(small_reports.values()), out)
    files = sorted(os.listdir(out))
    assert "ablation_table.csv" in files and "ablation_table.txt" in files
    assert "A4_seed11.json" in files and "A4_seed12.json" in files
    doc = json.load(open(os.path.join(out, "A4_seed11.json")))
    assert doc["ablation"] == "A4" and doc["seed"] == 11
    assert len(doc["users"]) == 25
    user = doc["users"][0]
    assert {"user_id", "items", "total_cal", "total_prot", "tdee", "protein_target",
            "initial_cal", "success"} <= set(user)
