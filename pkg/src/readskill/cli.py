"""Command-line front end.

Every command is a pure function of (config, input files): reruns write
byte-identical outputs, including the SVGs. Exit codes: 0 success, 1 when
some recordings failed and their errors were logged, 2 for configuration
or schema problems.
"""
from __future__ import annotations

import argparse
import multiprocessing
import os
import sys
from pathlib import Path

import numpy as np

from . import asr_align, classify, featurize, lexical
from .config import RunConfig, load_config
from .corpus import CorpusIndex, load_wav, parse_intervals, parse_transcription, scan_corpus
from .dsp import dump_frames
from .errors import NoModel, ReadskillError, SchemaMismatch, UnknownLabel
from .lexical import SKILL_NAMES, SkillClass
from .pauses import dump_events
from .svgplot import CLASS_COLORS, EXTRA_COLORS, line_chart, scatter_chart


def _write_errors(out_dir: Path, errors: list[tuple[str, str]]) -> None:
    lines = [f"{rid}: {message}" for rid, message in sorted(errors)]
    out_dir.joinpath("errors.log").write_text(
        "\n".join(lines) + "\n" if lines else "")


def _featurize_one(job):
    """Worker for one recording; returns (rid, vector | None, error | None)."""
    rid, root, label, cfg, out_dir, dump_fr, dump_ev = job
    index = CorpusIndex(root=Path(root), story=None, lexicon={}, ids=[],
                        labels={}, metadata={})
    try:
        recording = load_wav(index.wav_path(rid))
        intervals, _ = parse_intervals(index.intervals_path(rid), recording.duration)
        story = _worker_story
        vec, detail = featurize.extract_features(
            recording, intervals, story, label=label, recording_id=rid,
            cfg=cfg.feature_config(), return_detail=True)
        if dump_fr:
            dump_frames(detail.track, Path(out_dir) / f"frames_{rid}.csv")
        if dump_ev:
            dump_events(detail.pauses, detail.peaks, Path(out_dir) / f"events_{rid}.csv")
        return rid, vec, None
    except (ReadskillError, OSError) as exc:
        return rid, None, f"{type(exc).__name__}: {exc}"


_worker_story = None


def _init_worker(story):
    global _worker_story
    _worker_story = story


def cmd_featurize(cfg: RunConfig, args) -> int:
    index = scan_corpus(cfg.corpus_root)
    if index.story is None:
        print(f"error: no story.txt under {cfg.corpus_root}", file=sys.stderr)
        return 2
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [
        (rid, str(index.root), index.labels.get(rid), cfg, str(out_dir),
         args.dump_frames, args.dump_events)
        for rid in index.ids
    ]
    if args.jobs == 1:
        _init_worker(index.story)
        results = [_featurize_one(j) for j in jobs]
    else:
        with multiprocessing.Pool(args.jobs, initializer=_init_worker,
                                  initargs=(index.story,)) as pool:
            results = pool.map(_featurize_one, jobs)

    rows = [vec for _, vec, err in results if err is None]
    errors = [(rid, err) for rid, _, err in results if err is not None]
    featurize.write_features(sorted(rows, key=lambda r: r.recording_id),
                             out_dir / "features.csv")
    _write_errors(out_dir, errors)
    print(f"featurize: {len(rows)} ok, {len(errors)} failed")
    return 1 if errors else 0


def _miscue_matrix(index: CorpusIndex, variant: str):
    ids = [rid for rid in index.ids if index.words_path(rid).exists()]
    vectors = []
    for rid in ids:
        tr = parse_transcription(index.words_path(rid), index.story)
        vectors.append(lexical.miscue_fractions(tr, variant, recording_id=rid))
    return ids, np.array([v.values for v in vectors])


def cmd_cluster(cfg: RunConfig, args) -> int:
    index = scan_corpus(cfg.corpus_root)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    ids_a, points_a = _miscue_matrix(index, "A")
    ids, points_b = _miscue_matrix(index, "B")
    k_range = range(cfg.cluster_k_min, cfg.cluster_k_max + 1)
    sweep_a = lexical.sweep_k(points_a, k_range, seed=cfg.seed,
                              restarts=cfg.kmeans_restarts)
    sweep_b = lexical.sweep_k(points_b, k_range, seed=cfg.seed,
                              restarts=cfg.kmeans_restarts)

    with open(out_dir / "silhouette.csv", "w") as fh:
        fh.write("variant,k,silhouette\n")
        for variant, sweep in (("A", sweep_a), ("B", sweep_b)):
            for k, score in sweep:
                fh.write(f"{variant},{k},{float(score)!r}\n")

    model = lexical.kmeans(points_b, 3, seed=cfg.seed, restarts=cfg.kmeans_restarts)
    model.silhouette = lexical.silhouette(points_b, model.assignments)
    labels = lexical.label_clusters(model.centroids)
    lexical.save_cluster_model(model, labels, "B", out_dir / "cluster_model.json")

    with open(out_dir / "clusters.csv", "w") as fh:
        fh.write("id,cluster,skill\n")
        for rid, cluster in zip(ids, model.assignments):
            fh.write(f"{rid},{int(cluster)},{labels[int(cluster)].name}\n")

    line_chart(
        [("variant A", [float(k) for k, _ in sweep_a], [s for _, s in sweep_a],
          EXTRA_COLORS[0]),
         ("variant B", [float(k) for k, _ in sweep_b], [s for _, s in sweep_b],
          EXTRA_COLORS[3])],
        "Mean silhouette by cluster count", "clusters", "mean silhouette",
        out_dir / "silhouette.svg")

    cs1 = lexical.VARIANT_B_DIMS.index("CS1")
    mis = lexical.VARIANT_B_DIMS.index("M")
    inc = lexical.VARIANT_B_DIMS.index("I")
    groups = []
    for cluster in range(3):
        name = labels[cluster].name
        mask = model.assignments == cluster
        groups.append((f"{name} missed", points_b[mask, cs1].tolist(),
                       points_b[mask, mis].tolist(), EXTRA_COLORS[cluster]))
        groups.append((f"{name} incorrect", points_b[mask, cs1].tolist(),
                       points_b[mask, inc].tolist(), CLASS_COLORS[name]))
    scatter_chart(groups, "Miscue mix by cluster", "correct or self-corrected fraction",
                  "missed or incorrect fraction", out_dir / "clusters.svg")
    print(f"cluster: {len(ids)} recordings, chosen K=3 silhouette "
          f"{model.silhouette:.4f}")
    return 0


def _labeled_matrix(cfg: RunConfig):
    rows = featurize.read_features(Path(cfg.out_dir) / "features.csv")
    X = np.array([r.values for r in rows])
    y = []
    for r in rows:
        if r.label not in SKILL_NAMES:
            raise UnknownLabel(
                f"{r.recording_id}: class {r.label!r} is not one of {SKILL_NAMES}"
            )
        y.append(int(SkillClass[r.label]))
    return rows, X, np.array(y, dtype=np.int64)


def cmd_train(cfg: RunConfig, args) -> int:
    _, X, y = _labeled_matrix(cfg)
    out_dir = Path(cfg.out_dir)
    for plan_id in cfg.plan_ids():
        models = classify.train_plan(classify.PLANS[plan_id], X, y,
                                     seed_path=(cfg.seed,), n_trees=cfg.n_trees)
        path = out_dir / f"model_{plan_id}.json"
        classify.save_model(models, path)
        print(f"train: wrote {path}")
    return 0


def cmd_predict(cfg: RunConfig, args) -> int:
    model_path = args.model or str(
        Path(cfg.out_dir) / f"model_{cfg.plan_ids()[0]}.json")
    models = classify.load_model(model_path)
    rows = featurize.read_features(Path(cfg.out_dir) / "features.csv")
    X = np.array([r.values for r in rows])
    pred = classify.predict_stage(models, X)
    out = Path(cfg.out_dir) / "predictions.csv"
    with open(out, "w") as fh:
        fh.write("id,skill\n")
        for r, p in zip(rows, pred):
            fh.write(f"{r.recording_id},{SkillClass(int(p)).name}\n")
    print(f"predict: wrote {out}")
    return 0


def cmd_evaluate(cfg: RunConfig, args) -> int:
    rows, X, y = _labeled_matrix(cfg)
    groups = None
    if cfg.group_by:
        index = scan_corpus(cfg.corpus_root)
        groups = [
            index.metadata.get(r.recording_id, {}).get(cfg.group_by)
            or r.recording_id
            for r in rows
        ]
    out_dir = Path(cfg.out_dir)
    plan_ids = cfg.plan_ids()
    for plan_id in plan_ids:
        report = classify.cross_validate(
            classify.PLANS[plan_id], X, y, folds=cfg.folds, seed=cfg.seed,
            n_trees=cfg.n_trees, groups=groups)
        suffix = "" if len(plan_ids) == 1 else f"_{plan_id}"
        classify.write_report(report, out_dir / f"cvreport{suffix}.json",
                              out_dir / f"confusion{suffix}.csv")
        print(f"evaluate: {plan_id} accuracy {report.accuracy:.4f} "
              f"over {cfg.folds} folds")
    return 0


def cmd_asr_align(cfg: RunConfig, args) -> int:
    index = scan_corpus(cfg.corpus_root)
    if index.story is None:
        print(f"error: no story.txt under {cfg.corpus_root}", file=sys.stderr)
        return 2
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    centroids, labels, variant = lexical.load_cluster_model(
        out_dir / "cluster_model.json")
    if variant != "B" or centroids.shape != (3, len(lexical.VARIANT_B_DIMS)):
        raise SchemaMismatch("asr-align needs a labeled K=3 merged-variant model")

    canonical = list(index.story.words)
    results = []
    errors = []
    confusion = np.zeros((3, 3), dtype=np.int64)
    for rid in index.ids:
        try:
            hyp = asr_align.parse_hypothesis(index.hyp_path(rid))
            _, ops = asr_align.align(canonical, hyp)
            pct = asr_align.confidence_remap(ops, hyp, cfg.tau)
            skill = asr_align.classify_by_centroid(pct, centroids, labels)
            results.append((rid, pct, skill))
            truth = index.labels.get(rid)
            if truth in SKILL_NAMES:
                confusion[int(SkillClass[truth]), int(skill)] += 1
        except (ReadskillError, OSError, ValueError) as exc:
            errors.append((rid, f"{type(exc).__name__}: {exc}"))

    with open(out_dir / "asr_classes.csv", "w") as fh:
        fh.write("id,pct_C,pct_M,pct_I,skill\n")
        for rid, pct, skill in results:
            fh.write(f"{rid},{pct.pct_C!r},{pct.pct_M!r},{pct.pct_I!r},"
                     f"{skill.name}\n")
    with open(out_dir / "asr_confusion.csv", "w") as fh:
        fh.write("actual\\predicted," + ",".join(SKILL_NAMES) + "\n")
        for name, row in zip(SKILL_NAMES, confusion):
            fh.write(name + "," + ",".join(str(int(v)) for v in row) + "\n")
    _write_errors(out_dir, errors)
    print(f"asr-align: {len(results)} ok, {len(errors)} failed")
    return 1 if errors else 0


def cmd_report(cfg: RunConfig, args) -> int:
    import json

    out_dir = Path(cfg.out_dir)
    lines = []
    for path in sorted(out_dir.glob("cvreport*.json")):
        payload = json.loads(path.read_text())
        lines.append(f"plan {payload['plan']}: accuracy {payload['accuracy']:.4f} "
                     f"over {payload['folds']} folds (seed {payload['seed']})")
        ranked = sorted(payload["importances"].items(), key=lambda kv: (-kv[1], kv[0]))
        for name, value in ranked[:5]:
            lines.append(f"  {name}: {value:.4f}")
    if not lines:
        lines.append("no evaluation reports found")
    text = "\n".join(lines) + "\n"
    out_dir.joinpath("report.txt").write_text(text)
    print(text, end="")
    return 0


def cmd_config(cfg: RunConfig, args) -> int:
    print(cfg.dump(), end="")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="readskill",
        description="Batch screening toolkit for oral-reading recordings.",
    )
    parser.add_argument("--config", help="key = value settings file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key")
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker processes for per-recording commands")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("featurize", help="extract acoustic features per recording")
    p.add_argument("--dump-frames", action="store_true",
                   help="also write per-recording frame tracks")
    p.add_argument("--dump-events", action="store_true",
                   help="also write detected pauses and syllable nuclei")
    sub.add_parser("cluster", help="cluster miscue fractions and label clusters")
    sub.add_parser("train", help="fit the configured classifier plans")
    p = sub.add_parser("predict", help="classify feature rows with a saved model")
    p.add_argument("--model", help="model file (default: first configured plan)")
    sub.add_parser("evaluate", help="cross-validate the configured plans")
    sub.add_parser("asr-align", help="align recognizer hypotheses and classify")
    sub.add_parser("report", help="summarize evaluation reports")
    p = sub.add_parser("config", help="show the effective configuration")
    p.add_argument("--dump", action="store_true",
                   help="print every key = value pair")

    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.set)
    except (ReadskillError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    handlers = {
        "featurize": cmd_featurize,
        "cluster": cmd_cluster,
        "train": cmd_train,
        "predict": cmd_predict,
        "evaluate": cmd_evaluate,
        "asr-align": cmd_asr_align,
        "report": cmd_report,
        "config": cmd_config,
    }
    try:
        return handlers[args.command](cfg, args)
    except NoModel as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ReadskillError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
