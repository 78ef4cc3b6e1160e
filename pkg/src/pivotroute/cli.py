"""Command-line pipeline: world generation, router training, routing, evaluation.

Subcommands:
  gen    write a synthetic world + routing dataset to a directory
  train  fit the LSTM router on a dataset directory, write checkpoint + report
  route  route one language pair with any subset of methods
  eval   score all methods on the test pairs, write reports and CDF files
  count  closed-form candidate counts and brute-force evaluation cost

Each subcommand takes one --seed; internal randomness derives from it by
fixed offsets (gen: world=seed, dataset=seed+1; train: init=seed,
shuffle=seed+1; eval/route: random router=seed+pair index), so identical
flags reproduce identical bytes. Data directories may also be assembled by
hand from externally measured scores, in the same TSV formats.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path as FsPath
from typing import Mapping, Optional, Sequence

import numpy as np

from . import evaluator, neuralnet, routers, synthworld
from .featurizer import featurize
from .langdb import LanguageRegistry, QualityMatrix
from .neuralnet import DevPair, LtrModel, TrainConfig
from .pathspace import Path, PathSet, count_paths, estimate_eval_cost, rank_paths
from .routers import METHODS, RoutingResult
from .synthworld import PathOracle, RoutingDataset, WorldConfig, candidate_paths


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pivotroute", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a synthetic world and dataset")
    p_gen.add_argument("--languages", type=int, default=20)
    p_gen.add_argument("--branches", type=int, default=4)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--base-lo", type=float, default=5.0)
    p_gen.add_argument("--base-hi", type=float, default=35.0)
    p_gen.add_argument("--affinity", type=float, default=55.0)
    p_gen.add_argument("--size-lo", type=int, default=10_000)
    p_gen.add_argument("--size-hi", type=int, default=100_000_000)
    p_gen.add_argument("--noise-sigma", type=float, default=0.03)
    p_gen.add_argument("--dev-frac", type=float, default=0.05)
    p_gen.add_argument("--test-frac", type=float, default=0.10)
    p_gen.add_argument("--train-path-frac", type=float, default=0.10)
    p_gen.add_argument("--out", required=True, help="output directory")

    p_train = sub.add_parser("train", help="train the LSTM router")
    p_train.add_argument("--data", required=True, help="directory written by gen")
    p_train.add_argument("--out", required=True, help="output directory for checkpoint + report")
    p_train.add_argument("--lr", type=float, default=0.01)
    p_train.add_argument("--epochs", type=int, default=200)
    p_train.add_argument("--batch-size", type=int, default=8)
    p_train.add_argument("--hidden-dim", type=int, default=6)
    p_train.add_argument("--layers", type=int, default=2)
    p_train.add_argument("--emb-dim", type=int, default=5)
    p_train.add_argument("--pivot-min-count", type=int, default=10)
    p_train.add_argument("--seed", type=int, default=0)

    p_route = sub.add_parser("route", help="route a single language pair")
    p_route.add_argument("--data", required=True)
    p_route.add_argument("--checkpoint", help="model checkpoint (needed for LTR)")
    p_route.add_argument("--src", required=True)
    p_route.add_argument("--tgt", required=True)
    p_route.add_argument("--methods", default="DT,RR,HA,PP,LTR,GT")
    p_route.add_argument("--pivot-min-count", type=int, default=10)
    p_route.add_argument("--seed", type=int, default=0)

    p_eval = sub.add_parser("eval", help="evaluate routing methods on the test pairs")
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--checkpoint", help="model checkpoint (needed for LTR)")
    p_eval.add_argument("--out", required=True)
    p_eval.add_argument("--methods", default="DT,RR,HA,PP,LTR,GT")
    p_eval.add_argument("--pivot-min-count", type=int, default=10)
    p_eval.add_argument("--supervised-overlay", action="store_true",
                        help="also evaluate with supervised scores on branch-pivot edges")
    p_eval.add_argument("--overlay-boost", type=float, default=20.0,
                        help="points added to each pivot-to-pivot edge, capped at 100")
    p_eval.add_argument("--seed", type=int, default=0)

    p_count = sub.add_parser("count", help="candidate-path counts and evaluation cost")
    p_count.add_argument("--pivots", type=int, help="pivot pool size for the path count")
    p_count.add_argument("--max-hops", type=int, default=3)
    p_count.add_argument("--languages", type=int, help="language count for the GPU-day estimate")
    p_count.add_argument("--minutes-per-path", type=float, default=20.0)

    return parser


def _parse_methods(spec: str) -> list[str]:
    wanted = [m.strip().upper() for m in spec.split(",") if m.strip()]
    for m in wanted:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}, choose from {','.join(METHODS)}")
    return [m for m in METHODS if m in set(wanted)]


def cmd_gen(args) -> int:
    config = WorldConfig(
        num_languages=args.languages,
        num_branches=args.branches,
        seed=args.seed,
        base_quality=(args.base_lo, args.base_hi),
        branch_affinity=args.affinity,
        size_spread=(args.size_lo, args.size_hi),
        noise_sigma=args.noise_sigma,
    )
    world = synthworld.gen_world(config)
    dataset = synthworld.build_dataset(
        world,
        dev_frac=args.dev_frac,
        test_frac=args.test_frac,
        train_path_frac=args.train_path_frac,
        seed=args.seed + 1,
    )
    synthworld.save_world(world, dataset, args.out, config, dataset_seed=args.seed + 1)
    print(f"wrote world ({args.languages} languages, {len(dataset.train_pairs)} train / "
          f"{len(dataset.dev_pairs)} dev / {len(dataset.test_pairs)} test distant pairs) to {args.out}")
    return 0


def _train_samples(matrix: QualityMatrix, dataset: RoutingDataset, table: np.ndarray):
    samples = []
    for pair in dataset.train_pairs:
        for path in dataset.train_paths[pair]:
            samples.append((featurize(path, matrix, table), dataset.labels[path] / 100.0))
    return samples


def _dev_pairs(
    registry: LanguageRegistry,
    matrix: QualityMatrix,
    dataset: RoutingDataset,
    table: np.ndarray,
    pivot_min_count: int,
) -> list[DevPair]:
    out = []
    for x, y in dataset.dev_pairs:
        cands = candidate_paths(registry, x, y)
        out.append(
            DevPair(
                paths=list(cands.paths),
                features=[featurize(p, matrix, table) for p in cands.paths],
                labels=np.array([dataset.labels[p] for p in cands.paths]),
                eligible=routers.ltr_eligible(cands, dataset.pivot_counts, pivot_min_count),
            )
        )
    return out


def cmd_train(args) -> int:
    registry, matrix, dataset, _ = synthworld.load_world_dir(args.data)
    model = neuralnet.init_model(
        num_languages=len(registry),
        hidden_dim=args.hidden_dim,
        num_layers=args.layers,
        emb_dim=args.emb_dim,
        seed=args.seed,
    )
    samples = _train_samples(matrix, dataset, model.embeddings)
    dev = _dev_pairs(registry, matrix, dataset, model.embeddings, args.pivot_min_count)
    config = TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed + 1,
    )
    model, report = neuralnet.train(model, samples, dev, config)

    out = FsPath(args.out)
    out.mkdir(parents=True, exist_ok=True)
    neuralnet.save_model(model, out / "checkpoint.json")
    with open(out / "train_report.tsv", "w", encoding="utf-8", newline="") as fh:
        fh.write("epoch\ttrain_mse\tdev_top1\tselected\n")
        fh.write(f"0\t{report.initial_mse:.8f}\t-\t0\n")
        for e, (mse, acc) in enumerate(zip(report.train_mse, report.dev_top1)):
            sel = 1 if e == report.selected_epoch else 0
            fh.write(f"{e + 1}\t{mse:.8f}\t{acc:.4f}\t{sel}\n")
    print(f"trained {args.epochs} epochs on {len(samples)} labeled paths; "
          f"selected epoch {report.selected_epoch + 1} "
          f"(dev top-1 {report.dev_top1[report.selected_epoch]:.3f}); wrote {out}")
    return 0


def _route_one(
    method: str,
    cands: PathSet,
    labels: Mapping[Path, float],
    matrix: QualityMatrix,
    registry: LanguageRegistry,
    model: Optional[LtrModel],
    pivot_counts: Mapping[str, int],
    pivot_min_count: int,
    rr_seed: int,
) -> tuple[Path, Optional[float], list[Path]]:
    """Chosen path, predicted score and best-first ranking for one method."""
    if method == "DT":
        chosen = routers.route_direct(cands.source, cands.target)
        return chosen, None, [chosen]
    if method == "RR":
        chosen = routers.route_random(cands, seed=rr_seed)
        return chosen, None, [chosen]
    if method == "HA":
        scores = routers.score_hop_average(cands, matrix)
        order = rank_paths(cands.paths, list(scores))
        return cands.paths[order[0]], float(scores[order[0]]), [cands.paths[i] for i in order]
    if method == "PP":
        chosen = routers.route_prior_pivot(cands.source, cands.target, routers.build_pivot_map(registry), registry)
        return chosen, None, [chosen]
    if method == "LTR":
        if model is None:
            raise ValueError("LTR routing needs --checkpoint")
        eligible = routers.ltr_eligible(cands, pivot_counts, pivot_min_count)
        idxs = np.flatnonzero(eligible)
        sub = [cands.paths[i] for i in idxs]
        scores = routers.score_ltr(PathSet(cands.source, cands.target, sub), matrix, model)
        order = rank_paths(sub, list(scores))
        chosen = sub[order[0]]
        return chosen, float(np.clip(scores[order[0]], 0.0, 100.0)), [sub[i] for i in order]
    if method == "GT":
        actual = [labels[p] for p in cands.paths]
        order = rank_paths(cands.paths, actual)
        return cands.paths[order[0]], None, [cands.paths[i] for i in order]
    raise ValueError(f"unknown method {method!r}")


def _evaluate(
    registry: LanguageRegistry,
    matrix: QualityMatrix,
    dataset: RoutingDataset,
    labels: Mapping[Path, float],
    methods: Sequence[str],
    model: Optional[LtrModel],
    pivot_min_count: int,
    seed: int,
) -> dict[str, evaluator.MethodReport]:
    per_method: dict[str, tuple[list[RoutingResult], list[list[Path]]]] = {m: ([], []) for m in methods}
    pair_labels = []
    for pair_idx, (x, y) in enumerate(dataset.test_pairs):
        cands = candidate_paths(registry, x, y)
        this_labels = {p: labels[p] for p in cands.paths}
        pair_labels.append(this_labels)
        for method in methods:
            chosen, predicted, ranking = _route_one(
                method, cands, this_labels, matrix, registry, model,
                dataset.pivot_counts, pivot_min_count, rr_seed=seed + pair_idx,
            )
            results, rankings = per_method[method]
            results.append(
                RoutingResult(
                    source=x, target=y, method=method, chosen=chosen,
                    predicted_score=predicted, actual_score=this_labels[chosen],
                )
            )
            rankings.append(ranking)
    return {
        m: evaluator.build_report(m, per_method[m][0], per_method[m][1], pair_labels)
        for m in methods
    }


def _pivot_cols(path: Path) -> tuple[str, str]:
    if path.hops == 1:
        return "-", "-"
    if path.hops == 2:
        return path.pivots[0], path.pivots[0]
    return path.pivots[0], path.pivots[1]


def _write_eval_outputs(
    reports: dict[str, evaluator.MethodReport],
    methods: Sequence[str],
    out: FsPath,
    suffix: str,
) -> None:
    evaluator.write_report_tsv([reports[m] for m in methods], out / f"report{suffix}.tsv")
    for m in methods:
        evaluator.write_cdf_csv(evaluator.cdf(reports[m].rows), out / f"cdf_{m}{suffix}.csv")
    with open(out / f"routes{suffix}.tsv", "w", encoding="utf-8", newline="") as fh:
        fh.write("src\ttgt\tmethod\tpath\tpredicted\tactual\n")
        for m in methods:
            for row in reports[m].rows:
                fh.write(row.report_row() + "\n")
    if all(m in reports for m in ("DT", "GT", "LTR")):
        rows = []
        for dt, gt, ltr in zip(reports["DT"].rows, reports["GT"].rows, reports["LTR"].rows):
            gp1, gp2 = _pivot_cols(gt.chosen)
            lp1, lp2 = _pivot_cols(ltr.chosen)
            rows.append((
                gt.actual_score - dt.actual_score, dt.source, dt.target,
                f"{dt.source}\t{dt.target}\t{dt.actual_score:.2f}"
                f"\t{gt.actual_score:.2f}\t{gt.actual_score - dt.actual_score:.2f}\t{gp1}\t{gp2}"
                f"\t{ltr.actual_score:.2f}\t{ltr.actual_score - dt.actual_score:.2f}\t{lp1}\t{lp2}",
            ))
        rows.sort(key=lambda r: (-r[0], r[1], r[2]))
        with open(out / f"pairs{suffix}.tsv", "w", encoding="utf-8", newline="") as fh:
            fh.write("src\ttgt\tdt\tgt\tgt_delta\tgt_pivot1\tgt_pivot2\tltr\tltr_delta\tltr_pivot1\tltr_pivot2\n")
            for _, _, _, line in rows:
                fh.write(line + "\n")


def cmd_eval(args) -> int:
    registry, matrix, dataset, manifest = synthworld.load_world_dir(args.data)
    methods = _parse_methods(args.methods)
    model = neuralnet.load_model(args.checkpoint) if args.checkpoint else None
    if "LTR" in methods and model is None:
        raise ValueError("LTR evaluation needs --checkpoint")
    out = FsPath(args.out)
    out.mkdir(parents=True, exist_ok=True)

    reports = _evaluate(
        registry, matrix, dataset, dataset.labels, methods, model, args.pivot_min_count, args.seed
    )
    _write_eval_outputs(reports, methods, out, suffix="")
    for m in methods:
        print(f"{m}\tavg_bleu={reports[m].avg_bleu:.2f}\ttop1={reports[m].top1:.2f}\ttop5={reports[m].top5:.2f}")

    if args.supervised_overlay:
        world_cfg = manifest.get("world")
        if not world_cfg:
            raise ValueError("supervised overlay needs a generated world manifest (labels must be recomputable)")
        pivot_map = routers.build_pivot_map(registry)
        pivots = sorted(pivot_map.values())
        boost = synthworld.uniform_boost(matrix, pivots, args.overlay_boost)
        boosted = synthworld.apply_supervised_overlay(matrix, pivots, boost)
        oracle = PathOracle(matrix=boosted, seed=world_cfg["seed"], noise_sigma=world_cfg["noise_sigma"])
        sup_labels: dict[Path, float] = {}
        for x, y in dataset.test_pairs:
            for p in candidate_paths(registry, x, y).paths:
                sup_labels[p] = oracle.value(p)
        sup_reports = _evaluate(
            registry, boosted, dataset, sup_labels, methods, model, args.pivot_min_count, args.seed
        )
        _write_eval_outputs(sup_reports, methods, out, suffix="_supervised")
        for m in methods:
            print(f"{m}+sup\tavg_bleu={sup_reports[m].avg_bleu:.2f}\ttop1={sup_reports[m].top1:.2f}"
                  f"\ttop5={sup_reports[m].top5:.2f}")
    return 0


def cmd_route(args) -> int:
    registry, matrix, dataset, _ = synthworld.load_world_dir(args.data)
    methods = _parse_methods(args.methods)
    model = neuralnet.load_model(args.checkpoint) if args.checkpoint else None
    if "LTR" in methods and model is None:
        raise ValueError("LTR routing needs --checkpoint")
    cands = candidate_paths(registry, args.src, args.tgt)
    labels = {p: dataset.labels[p] for p in cands.paths if p in dataset.labels}
    if "GT" in methods and len(labels) < len(cands.paths):
        raise ValueError(f"ground truth needs labels for all {len(cands.paths)} candidates of {args.src}->{args.tgt}")
    for method in methods:
        chosen, predicted, _ = _route_one(
            method, cands, labels, matrix, registry, model,
            dataset.pivot_counts, args.pivot_min_count, rr_seed=args.seed,
        )
        result = RoutingResult(
            source=args.src, target=args.tgt, method=method, chosen=chosen,
            predicted_score=predicted, actual_score=labels.get(chosen),
        )
        print(result.report_row())
    return 0


def cmd_count(args) -> int:
    if args.pivots is None and args.languages is None:
        raise ValueError("count needs --pivots and/or --languages")
    if args.pivots is not None:
        value = count_paths(args.pivots, args.max_hops)
        print(f"paths pool={args.pivots} max_hops={args.max_hops}: {value}")
    if args.languages is not None:
        days = estimate_eval_cost(args.languages, args.minutes_per_path)
        print(f"gpu_days languages={args.languages} minutes_per_path={args.minutes_per_path}: {days:.1f}")
    return 0


_COMMANDS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "route": cmd_route,
    "eval": cmd_eval,
    "count": cmd_count,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
