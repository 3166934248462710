"""Random-forest classification of skill classes, staged classifier plans
and stratified cross-validation.

The forest is grown with Gini impurity, ceil(sqrt(d)) candidate features
per split, midpoint thresholds and no depth cap, so split choices depend
only on feature ranks. Tree t of a forest draws all of its randomness from
a generator seeded with (*seed_path, t), which makes every model a pure
function of the master seed. Leaf votes use the class counts of the full
training sample routed through the tree; the bootstrap only shapes the
tree. All vote ties break toward the lower class code.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyMatrix,
    NoModel,
    SchemaMismatch,
    SingleClassTraining,
    TooFewPerClass,
)
from .featurize import (
    FEATURE_NAMES,
    INTENSITY_DYNAMICS_FEATURES,
    PAUSE_FEATURES,
    RATE_FEATURES,
    SPECTRAL_DYNAMICS_FEATURES,
)
from .lexical import SkillClass

N_TREES = 50
CV_FOLDS = 7
MODEL_VERSION = "rf-model-v1"


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None
    counts: np.ndarray | None = None

    @property
    def is_leaf(self) -> bool:
        return self.counts is not None


@dataclass
class RandomForestModel:
    trees: list[_Node]
    n_classes: int
    n_features: int
    feature_names: tuple[str, ...]
    importances: np.ndarray  # mean impurity decrease per feature, unnormalized


def _gini_gain_scan(xs: np.ndarray, ys: np.ndarray, n_classes: int,
                    parent_gini: float):
    """Best split position along one sorted feature column, or None.

    Returns (gain, position) where the split separates xs[:pos+1] from
    xs[pos+1:]. Gains derive from integer class counts only, so equal
    partitions give bit-equal gains; ties take the earliest position.
    """
    n = len(xs)
    valid = xs[:-1] < xs[1:]
    if not valid.any():
        return None
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), ys] = 1.0
    left = np.cumsum(onehot, axis=0)[:-1]
    total = onehot.sum(axis=0)
    right = total[None, :] - left
    nl = np.arange(1, n, dtype=np.float64)
    nr = n - nl
    gini_l = 1.0 - (left * left).sum(axis=1) / (nl * nl)
    gini_r = 1.0 - (right * right).sum(axis=1) / (nr * nr)
    gain = parent_gini - (nl * gini_l + nr * gini_r) / n
    gain = np.where(valid, gain, -1.0)
    pos = int(np.argmax(gain))
    return float(gain[pos]), pos


def _build_tree(X: np.ndarray, y: np.ndarray, n_classes: int, m_features: int,
                rng: np.random.Generator, importance: np.ndarray,
                n_total: int) -> _Node:
    node = _Node()
    if len(y) <= 1 or (y == y[0]).all():
        node.counts = np.zeros(n_classes)
        return node

    feats = np.sort(rng.choice(X.shape[1], size=m_features, replace=False))
    n = len(y)
    parent_counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    parent_gini = 1.0 - ((parent_counts / n) ** 2).sum()

    best = None  # (gain, feature, pos, order); ties keep the lower feature
    for f in feats:
        order = np.argsort(X[:, f], kind="stable")
        found = _gini_gain_scan(X[order, f], y[order], n_classes, parent_gini)
        if found is None:
            continue
        gain, pos = found
        if best is None or gain > best[0]:
            best = (gain, int(f), pos, order)
    if best is None:
        node.counts = np.zeros(n_classes)
        return node

    gain, f, pos, order = best
    importance[f] += (n / n_total) * gain
    node.feature = f
    node.threshold = (X[order[pos], f] + X[order[pos + 1], f]) / 2.0
    left_idx = order[: pos + 1]
    right_idx = order[pos + 1:]
    node.left = _build_tree(X[left_idx], y[left_idx], n_classes, m_features,
                            rng, importance, n_total)
    node.right = _build_tree(X[right_idx], y[right_idx], n_classes, m_features,
                             rng, importance, n_total)
    return node


def _route_counts(root: _Node, X: np.ndarray, y: np.ndarray, n_classes: int) -> None:
    stack = [(root, np.arange(len(X)))]
    while stack:
        node, idx = stack.pop()
        if node.is_leaf:
            node.counts = np.bincount(y[idx], minlength=n_classes).astype(np.float64)
            continue
        mask = X[idx, node.feature] < node.threshold
        stack.append((node.left, idx[mask]))
        stack.append((node.right, idx[~mask]))


def _tree_predict(root: _Node, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X), dtype=np.int64)
    stack = [(root, np.arange(len(X)))]
    while stack:
        node, idx = stack.pop()
        if len(idx) == 0:
            continue
        if node.is_leaf:
            out[idx] = int(np.argmax(node.counts))
            continue
        mask = X[idx, node.feature] < node.threshold
        stack.append((node.left, idx[mask]))
        stack.append((node.right, idx[~mask]))
    return out


def train_forest(X: np.ndarray, y: np.ndarray, n_trees: int = N_TREES,
                 seed_path: tuple[int, ...] = (0,), n_classes: int | None = None,
                 feature_names: tuple[str, ...] | None = None) -> RandomForestModel:
    """Fit a forest of purity-grown trees on integer class codes."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y) or len(X) == 0:
        raise DimensionMismatch("X must be (n, d) with one label per row")
    if not np.isfinite(X).all():
        raise ValueError("features must be finite")
    if len(np.unique(y)) < 2:
        raise SingleClassTraining("training labels hold fewer than two classes")
    n, d = X.shape
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if feature_names is None:
        feature_names = tuple(f"f{i}" for i in range(d))
    if len(feature_names) != d:
        raise DimensionMismatch("feature_names length does not match X columns")

    m_features = math.ceil(math.sqrt(d))
    trees = []
    importance_sum = np.zeros(d)
    for t in range(n_trees):
        rng = np.random.default_rng([*seed_path, t])
        boot = rng.integers(0, n, size=n)
        imp = np.zeros(d)
        root = _build_tree(X[boot], y[boot], n_classes, m_features, rng, imp, n)
        _route_counts(root, X, y, n_classes)
        importance_sum += imp
        trees.append(root)
    return RandomForestModel(
        trees=trees,
        n_classes=n_classes,
        n_features=d,
        feature_names=tuple(feature_names),
        importances=importance_sum / n_trees,
    )


def predict_batch(model: RandomForestModel, X: np.ndarray) -> np.ndarray:
    """Majority vote over trees; ties go to the lower class code."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"expected {model.n_features} features, got shape {X.shape}"
        )
    votes = np.zeros((len(X), model.n_classes))
    for root in model.trees:
        pred = _tree_predict(root, X)
        votes[np.arange(len(X)), pred] += 1
    return votes.argmax(axis=1)


def predict(model: RandomForestModel, x: np.ndarray) -> int:
    return int(predict_batch(model, np.asarray(x, dtype=np.float64)[None, :])[0])


def feature_importance(model: RandomForestModel) -> dict[str, float]:
    """Mean impurity decrease per feature, normalized to sum to 1."""
    imp = model.importances.copy()
    total = imp.sum()
    if total > 0.0:
        imp = imp / total
    return {name: float(v) for name, v in zip(model.feature_names, imp)}


@dataclass(frozen=True)
class Stage:
    """One forest in a plan: either a target-vs-rest filter or a final
    decision over an explicit class tuple."""

    features: tuple[str, ...]
    target: SkillClass | None = None
    classes: tuple[SkillClass, ...] = ()


@dataclass(frozen=True)
class StagePlan:
    plan_id: str
    stages: tuple[Stage, ...]


def _plan_table() -> dict[str, StagePlan]:
    pause = PAUSE_FEATURES
    rate = RATE_FEATURES
    spdyn = SPECTRAL_DYNAMICS_FEATURES
    intdyn = INTENSITY_DYNAMICS_FEATURES
    return {
        "one_stage": StagePlan("one_stage", (
            Stage(features=FEATURE_NAMES,
                  classes=(SkillClass.C_A, SkillClass.M_A, SkillClass.I_A)),
        )),
        "two_stage_P": StagePlan("two_stage_P", (
            Stage(features=("articulation_rate",) + spdyn + intdyn
                  + ("pauses_per_interval",),
                  target=SkillClass.I_A),
            Stage(features=pause + rate,
                  classes=(SkillClass.C_A, SkillClass.M_A)),
        )),
        "two_stage_Q": StagePlan("two_stage_Q", (
            Stage(features=pause + rate + spdyn + intdyn,
                  target=SkillClass.M_A),
            Stage(features=spdyn + intdyn + rate + ("pause_freq",),
                  classes=(SkillClass.C_A, SkillClass.I_A)),
        )),
    }


PLANS = _plan_table()


@dataclass
class StageModels:
    plan: StagePlan
    models: list[RandomForestModel]
    feature_names: tuple[str, ...]


def _columns(feature_names: tuple[str, ...], wanted: tuple[str, ...]) -> np.ndarray:
    index = {name: i for i, name in enumerate(feature_names)}
    missing = [w for w in wanted if w not in index]
    if missing:
        raise DimensionMismatch(f"feature table lacks columns {missing}")
    return np.array([index[w] for w in wanted])


def train_plan(plan: StagePlan, X: np.ndarray, y: np.ndarray,
               feature_names: tuple[str, ...] = FEATURE_NAMES,
               seed_path: tuple[int, ...] = (0,), n_trees: int = N_TREES) -> StageModels:
    """Fit every stage of a plan on class codes 0..2.

    Stage s trains with seed path (*seed_path, s). A target stage codes
    rest=0 and target=1 over all rows; a two-class final stage trains only
    on rows of its pair, coding the lower class 0.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    models = []
    for s, stage in enumerate(plan.stages):
        cols = _columns(feature_names, stage.features)
        if stage.target is not None:
            Xs = X[:, cols]
            ys = (y == int(stage.target)).astype(np.int64)
            n_classes = 2
        elif len(stage.classes) == 2:
            pair = sorted(int(c) for c in stage.classes)
            keep = np.isin(y, pair)
            Xs = X[keep][:, cols]
            ys = (y[keep] == pair[1]).astype(np.int64)
            n_classes = 2
        else:
            Xs = X[:, cols]
            ys = y
            n_classes = len(stage.classes)
        models.append(train_forest(Xs, ys, n_trees=n_trees,
                                   seed_path=(*seed_path, s),
                                   n_classes=n_classes,
                                   feature_names=stage.features))
    return StageModels(plan=plan, models=models, feature_names=tuple(feature_names))


def predict_stage(stage_models: StageModels, X: np.ndarray) -> np.ndarray:
    """Run the staged pipeline on full feature rows, returning class codes."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(stage_models.feature_names):
        raise DimensionMismatch(
            f"expected {len(stage_models.feature_names)} columns, got shape {X.shape}"
        )
    plan = stage_models.plan
    if len(plan.stages) == 1:
        stage = plan.stages[0]
        cols = _columns(stage_models.feature_names, stage.features)
        codes = predict_batch(stage_models.models[0], X[:, cols])
        return np.array([int(stage.classes[c]) for c in codes], dtype=np.int64)

    s1, s2 = plan.stages
    cols1 = _columns(stage_models.feature_names, s1.features)
    cols2 = _columns(stage_models.feature_names, s2.features)
    hit = predict_batch(stage_models.models[0], X[:, cols1]) == 1
    out = np.empty(len(X), dtype=np.int64)
    out[hit] = int(s1.target)
    rest = ~hit
    if rest.any():
        pair = sorted(int(c) for c in s2.classes)
        codes = predict_batch(stage_models.models[1], X[rest][:, cols2])
        out[rest] = np.where(codes == 1, pair[1], pair[0])
    return out


def accuracy(confusion: np.ndarray) -> float:
    """Trace over total of a square confusion matrix."""
    c = np.asarray(confusion, dtype=np.float64)
    total = c.sum()
    if c.size == 0 or total <= 0:
        raise EmptyMatrix("confusion matrix holds no observations")
    return float(np.trace(c) / total)


@dataclass
class CVReport:
    plan_id: str
    seed: int
    folds: int
    fold_confusions: list[np.ndarray]
    pooled_confusion: np.ndarray
    accuracy: float
    importances: dict[str, float]
    class_names: tuple[str, ...] = tuple(c.name for c in SkillClass)


def _fold_assignment(y: np.ndarray, folds: int, seed: int,
                     groups: list[str] | None = None) -> np.ndarray:
    """Stratified fold ids; per-class counts differ by at most one across
    folds. With groups, whole groups land on the currently smallest fold
    (size balance only, stratification becomes best effort)."""
    n = len(y)
    fold_of = np.empty(n, dtype=np.int64)
    if groups is not None:
        members: dict[str, list[int]] = {}
        for i, g in enumerate(groups):
            members.setdefault(g, []).append(i)
        sizes = np.zeros(folds, dtype=np.int64)
        for g in sorted(members, key=lambda g: (-len(members[g]), g)):
            f = int(np.argmin(sizes))
            for i in members[g]:
                fold_of[i] = f
            sizes[f] += len(members[g])
        return fold_of
    rng = np.random.default_rng([seed, 9001])
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(len(idx))]
        for j, i in enumerate(idx):
            fold_of[i] = j % folds
    return fold_of


def cross_validate(plan: StagePlan, X: np.ndarray, y: np.ndarray,
                   feature_names: tuple[str, ...] = FEATURE_NAMES,
                   folds: int = CV_FOLDS, seed: int = 0,
                   n_trees: int = N_TREES,
                   groups: list[str] | None = None) -> CVReport:
    """Stratified k-fold evaluation; every stage retrains per fold on that
    fold's training split only. Importances average the per-stage vectors
    over all folds and stages, expanded to the full feature set and
    normalized to sum to 1."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n_classes = len(SkillClass)
    counts = np.bincount(y, minlength=n_classes)
    present = np.flatnonzero(counts)
    if any(counts[c] < folds for c in present):
        raise TooFewPerClass(
            f"every class needs at least {folds} samples, got {counts.tolist()}"
        )
    fold_of = _fold_assignment(y, folds, seed, groups)
    name_index = {name: i for i, name in enumerate(feature_names)}

    fold_confusions = []
    importance_vectors = []
    for f in range(folds):
        test = fold_of == f
        train = ~test
        models = train_plan(plan, X[train], y[train], feature_names,
                            seed_path=(seed, f), n_trees=n_trees)
        pred = predict_stage(models, X[test])
        conf = np.zeros((n_classes, n_classes), dtype=np.int64)
        for a, p in zip(y[test], pred):
            conf[a, p] += 1
        fold_confusions.append(conf)
        for model in models.models:
            vec = np.zeros(len(feature_names))
            for name, value in zip(model.feature_names, model.importances):
                vec[name_index[name]] = value
            importance_vectors.append(vec)

    pooled = np.sum(fold_confusions, axis=0)
    imp = np.mean(importance_vectors, axis=0)
    total = imp.sum()
    if total > 0:
        imp = imp / total
    return CVReport(
        plan_id=plan.plan_id,
        seed=seed,
        folds=folds,
        fold_confusions=fold_confusions,
        pooled_confusion=pooled,
        accuracy=accuracy(pooled),
        importances={name: float(v) for name, v in zip(feature_names, imp)},
    )


def write_report(report: CVReport, json_path, csv_path) -> None:
    """Emit cvreport.json and confusion.csv for one plan."""
    payload = {
        "format": "cvreport-v1",
        "plan": report.plan_id,
        "seed": report.seed,
        "folds": report.folds,
        "class_order": list(report.class_names),
        "fold_confusions": [c.tolist() for c in report.fold_confusions],
        "pooled_confusion": report.pooled_confusion.tolist(),
        "accuracy": report.accuracy,
        "importances": report.importances,
    }
    Path(json_path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    with open(csv_path, "w") as fh:
        fh.write("actual\\predicted," + ",".join(report.class_names) + "\n")
        for name, row in zip(report.class_names, report.pooled_confusion):
            fh.write(name + "," + ",".join(str(int(v)) for v in row) + "\n")


def _node_to_dict(node: _Node):
    if node.is_leaf:
        return {"counts": [float(v) for v in node.counts]}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(d) -> _Node:
    if "counts" in d:
        return _Node(counts=np.array(d["counts"], dtype=np.float64))
    return _Node(feature=int(d["feature"]), threshold=float(d["threshold"]),
                 left=_node_from_dict(d["left"]), right=_node_from_dict(d["right"]))


def save_model(stage_models: StageModels, path) -> None:
    """Dump a fitted plan as self-describing JSON."""
    payload = {
        "format": MODEL_VERSION,
        "plan": stage_models.plan.plan_id,
        "feature_names": list(stage_models.feature_names),
        "stages": [
            {
                "features": list(model.feature_names),
                "n_classes": model.n_classes,
                "importances": [float(v) for v in model.importances],
                "trees": [_node_to_dict(t) for t in model.trees],
            }
            for model in stage_models.models
        ],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n")


def load_model(path) -> StageModels:
    p = Path(path)
    if not p.exists():
        raise NoModel(f"no classifier model at {path}")
    payload = json.loads(p.read_text())
    if payload.get("format") != MODEL_VERSION:
        raise SchemaMismatch(f"{path}: unknown model format")
    plan = PLANS[payload["plan"]]
    models = []
    for stage_payload in payload["stages"]:
        trees = [_node_from_dict(t) for t in stage_payload["trees"]]
        models.append(RandomForestModel(
            trees=trees,
            n_classes=int(stage_payload["n_classes"]),
            n_features=len(stage_payload["features"]),
            feature_names=tuple(stage_payload["features"]),
            importances=np.array(stage_payload["importances"], dtype=np.float64),
        ))
    return StageModels(plan=plan, models=models,
                       feature_names=tuple(payload["feature_names"]))
