"""Miscue fraction vectors, k-means clustering, silhouette scoring and the
cluster-to-skill-class labeling rule.

Skill classes order as C_A < M_A < I_A; every tie in the toolkit breaks
toward the lower class.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Transcription
from .errors import (
    AmbiguousLabeling,
    EmptyTranscription,
    NoModel,
    SingleCluster,
    TooFewPoints,
)

KMEANS_RESTARTS = 10
KMEANS_MAX_ITER = 300
CLUSTER_MODEL_VERSION = "cluster-model-v1"


class SkillClass(enum.IntEnum):
    C_A = 0
    M_A = 1
    I_A = 2

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.name


SKILL_NAMES = tuple(c.name for c in SkillClass)

VARIANT_A_DIMS = ("C", "S1", "SmD", "M", "I")
VARIANT_B_DIMS = ("CS1", "SmD", "M", "I")

# variant B = variant A with C and S1 merged
MERGE_A_TO_B = np.array([
    [1, 1, 0, 0, 0],
    [0, 0, 1, 0, 0],
    [0, 0, 0, 1, 0],
    [0, 0, 0, 0, 1],
], dtype=np.float64)


@dataclass(frozen=True)
class MiscueVector:
    recording_id: str
    variant: str
    values: np.ndarray


@dataclass
class ClusterModel:
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    seed: int
    silhouette: float | None = None
    repair_events: int = 0

    @property
    def k(self) -> int:
        return len(self.centroids)


def miscue_fractions(transcription: Transcription, variant: str = "B",
                     recording_id: str = "") -> MiscueVector:
    """Fractions of word outcomes over the canonical word count.

    Variant A: (C, S1, Sm+D, M, I). Variant B: (C+S1, Sm+D, M, I).
    """
    if not transcription.words:
        raise EmptyTranscription("transcription has no words")
    n = len(transcription.words)
    counts = {label: 0 for label in ("C", "S1", "Sm", "D", "M", "I")}
    for w in transcription.words:
        counts[w.label] += 1
    a = np.array([
        counts["C"], counts["S1"], counts["Sm"] + counts["D"],
        counts["M"], counts["I"],
    ], dtype=np.float64) / n
    if variant == "A":
        return MiscueVector(recording_id=recording_id, variant="A", values=a)
    if variant == "B":
        return MiscueVector(recording_id=recording_id, variant="B",
                            values=MERGE_A_TO_B @ a)
    raise ValueError(f"unknown variant {variant!r}")


def _assign(points: np.ndarray, centroids: np.ndarray,
            prev: np.ndarray | None = None) -> np.ndarray:
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    idx = d2.argmin(axis=1)
    if prev is not None:
        rows = np.arange(len(points))
        sticky = d2[rows, prev] == d2[rows, idx]
        idx[sticky] = prev[sticky]
    return idx


def _init_plusplus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding; when every remaining distance is zero the next
    lowest-index unused point is taken."""
    n = len(points)
    chosen = [int(rng.integers(n))]
    for _ in range(1, k):
        d2 = ((points[:, None, :] - points[chosen][None, :, :]) ** 2).sum(axis=2).min(axis=1)
        total = float(d2.sum())
        if total <= 0.0:
            nxt = next(i for i in range(n) if i not in chosen)
        else:
            nxt = int(rng.choice(n, p=d2 / total))
        chosen.append(nxt)
    return points[chosen].copy()


def _lloyd(points: np.ndarray, k: int, rng: np.random.Generator,
           max_iter: int) -> tuple[np.ndarray, np.ndarray, float, int]:
    centroids = _init_plusplus(points, k, rng)
    prev = None
    repairs = 0
    for _ in range(max_iter):
        idx = _assign(points, centroids, prev)
        # re-seed empty clusters at the point farthest from its own centroid;
        # sole members stay put so no donor cluster is emptied in turn
        for c in range(k):
            if (idx == c).any():
                continue
            d = ((points - centroids[idx]) ** 2).sum(axis=1)
            sizes = np.bincount(idx, minlength=k)
            d[sizes[idx] <= 1] = -1.0
            far = int(np.argmax(d))
            idx[far] = c
            centroids[c] = points[far]
            repairs += 1
        if prev is not None and np.array_equal(idx, prev):
            break
        for c in range(k):
            centroids[c] = points[idx == c].mean(axis=0)
        prev = idx
    inertia = float(((points - centroids[idx]) ** 2).sum())
    return centroids, idx, inertia, repairs


def kmeans(points: np.ndarray, k: int, seed: int = 0,
           restarts: int = KMEANS_RESTARTS,
           max_iter: int = KMEANS_MAX_ITER) -> ClusterModel:
    """Best-of-restarts Lloyd clustering with k-means++ seeding.

    Deterministic for a given seed: restart r uses the generator seeded
    with [seed, r], and the lowest-inertia restart wins with ties going to
    the earlier restart.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("points must be a 2-D array")
    if k < 1 or len(points) < k:
        raise TooFewPoints(f"need at least {k} points, got {len(points)}")
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        cents, idx, inertia, repairs = _lloyd(points, k, rng, max_iter)
        if best is None or inertia < best[0]:
            best = (inertia, cents, idx, repairs)
    inertia, cents, idx, repairs = best
    return ClusterModel(centroids=cents, assignments=idx, inertia=inertia,
                        seed=seed, repair_events=repairs)


def silhouette(points: np.ndarray, assignments: np.ndarray) -> float:
    """Mean silhouette over all points with Euclidean distances.

    Each point scores (b - a) / max(a, b); members of singleton clusters
    contribute 0, as do points where both a and b are 0.
    """
    points = np.asarray(points, dtype=np.float64)
    idx = np.asarray(assignments)
    clusters = np.unique(idx)
    if len(clusters) < 2:
        raise SingleCluster("silhouette needs at least two clusters")
    dist = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2))
    n = len(points)
    sums = np.stack([dist[:, idx == c].sum(axis=1) for c in clusters], axis=1)
    sizes = np.array([(idx == c).sum() for c in clusters])
    own_col = np.searchsorted(clusters, idx)

    scores = np.zeros(n)
    for i in range(n):
        size_own = sizes[own_col[i]]
        if size_own <= 1:
            continue
        a = sums[i, own_col[i]] / (size_own - 1)
        other = [sums[i, c] / sizes[c] for c in range(len(clusters)) if c != own_col[i]]
        b = min(other)
        top = max(a, b)
        scores[i] = (b - a) / top if top > 0.0 else 0.0
    return float(scores.mean())


def sweep_k(points: np.ndarray, k_range: range, seed: int = 0,
            restarts: int = KMEANS_RESTARTS) -> list[tuple[int, float]]:
    """Silhouette score per K; every K reuses the same master seed."""
    out = []
    for k in k_range:
        model = kmeans(points, k, seed=seed, restarts=restarts)
        out.append((k, silhouette(points, model.assignments)))
    return out


def label_clusters(centroids: np.ndarray, variant: str = "B",
                   tol: float = 1e-9) -> dict[int, SkillClass]:
    """Map K=3 centroids to skill classes.

    The centroid with the highest correct-or-self-corrected fraction is
    C_A; of the remaining two, the one with the larger missed fraction is
    M_A and the other is I_A.
    """
    if variant != "B":
        raise ValueError("labeling is defined on variant B centroids")
    cents = np.asarray(centroids, dtype=np.float64)
    if cents.shape != (3, len(VARIANT_B_DIMS)):
        raise ValueError(f"expected centroid shape (3, {len(VARIANT_B_DIMS)})")
    cs1 = cents[:, VARIANT_B_DIMS.index("CS1")]
    m = cents[:, VARIANT_B_DIMS.index("M")]
    c_cluster = int(np.argmax(cs1))
    rest = [c for c in range(3) if c != c_cluster]
    if abs(m[rest[0]] - m[rest[1]]) <= tol:
        raise AmbiguousLabeling(
            f"clusters {rest[0]} and {rest[1]} tie on the missed fraction"
        )
    m_cluster = rest[0] if m[rest[0]] > m[rest[1]] else rest[1]
    i_cluster = rest[1] if m_cluster == rest[0] else rest[0]
    return {c_cluster: SkillClass.C_A, m_cluster: SkillClass.M_A,
            i_cluster: SkillClass.I_A}


def balanced_subset(ids: list[str], labels: list[SkillClass], target_total: int,
                    seed: int = 0) -> list[str]:
    """Pick a class-balanced subset of about target_total recordings.

    Each class contributes min(class size, ceil(target/3)); any shortfall
    from small classes is redistributed one at a time round-robin over the
    classes that still have unused recordings, in class order. Sampling
    within a class is a seeded shuffle of its sorted ids.
    """
    if target_total > len(ids):
        raise TooFewPoints(f"target {target_total} exceeds corpus size {len(ids)}")
    by_class: dict[SkillClass, list[str]] = {c: [] for c in SkillClass}
    for rid, lab in zip(ids, labels):
        by_class[SkillClass(lab)].append(rid)
    base = -(-target_total // 3)
    take = {c: min(len(by_class[c]), base) for c in SkillClass}
    while sum(take.values()) < target_total:
        progressed = False
        for c in SkillClass:
            if sum(take.values()) >= target_total:
                break
            if take[c] < len(by_class[c]):
                take[c] += 1
                progressed = True
        if not progressed:
            break
    chosen: list[str] = []
    for c in SkillClass:
        pool = sorted(by_class[c])
        rng = np.random.default_rng([seed, int(c)])
        order = rng.permutation(len(pool))
        chosen.extend(pool[i] for i in order[: take[c]])
    return sorted(chosen)


def save_cluster_model(model: ClusterModel, labels: dict[int, SkillClass],
                       variant: str, path) -> None:
    payload = {
        "format": CLUSTER_MODEL_VERSION,
        "variant": variant,
        "k": model.k,
        "seed": model.seed,
        "inertia": model.inertia,
        "silhouette": model.silhouette,
        "centroids": [[float(v) for v in row] for row in model.centroids],
        "labels": {str(c): labels[c].name for c in sorted(labels)},
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_cluster_model(path) -> tuple[np.ndarray, dict[int, SkillClass], str]:
    """Read centroids, cluster labels and variant from a saved model."""
    p = Path(path)
    if not p.exists():
        raise NoModel(f"no cluster model at {path}")
    payload = json.loads(p.read_text())
    if payload.get("format") != CLUSTER_MODEL_VERSION:
        raise NoModel(f"{path}: unknown cluster model format")
    centroids = np.array(payload["centroids"], dtype=np.float64)
    labels = {int(c): SkillClass[name] for c, name in payload["labels"].items()}
    return centroids, labels, payload["variant"]
