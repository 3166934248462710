"""Run configuration: plain ``key = value`` files plus command-line
overrides, with every tunable owning a documented default."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .classify import CV_FOLDS, N_TREES, PLANS
from .dsp import VadConfig
from .errors import ConfigError
from .featurize import FeatureConfig
from .lexical import KMEANS_RESTARTS
from .pauses import MIN_PAUSE_S, SyllableConfig


@dataclass
class RunConfig:
    """All run-level settings. Field defaults are the toolkit defaults."""

    corpus_root: str = "."
    out_dir: str = "out"
    seed: int = 0
    plan: str = "one_stage"  # comma-separated plan ids for evaluate
    folds: int = CV_FOLDS
    tau: float = 0.5
    n_trees: int = N_TREES
    group_by: str = ""  # metadata field for group-disjoint folds, e.g. child_id
    min_pause_s: float = MIN_PAUSE_S
    spdyn_ratio_scope: str = "interval"  # or "audio"
    vad_floor_percentile: float = 10.0
    vad_margin_db: float = 6.0
    vad_abs_threshold_db: float = -45.0
    vad_harmonicity_threshold: float = 0.45
    vad_harmonicity_margin_db: float = 3.0
    vad_median_frames: int = 5
    vad_hangover_frames: int = 2
    vad_min_run_frames: int = 3
    syll_band_low_hz: float = 300.0
    syll_band_high_hz: float = 2500.0
    syll_smooth_s: float = 0.150
    syll_height_frac: float = 0.1
    syll_prominence_frac: float = 0.05
    syll_min_gap_s: float = 0.1
    kmeans_restarts: int = KMEANS_RESTARTS
    cluster_k_min: int = 2
    cluster_k_max: int = 6

    def validate(self) -> None:
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau must lie in [0, 1], got {self.tau}")
        if self.folds < 2:
            raise ConfigError(f"folds must be at least 2, got {self.folds}")
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be positive, got {self.n_trees}")
        if self.spdyn_ratio_scope not in ("interval", "audio"):
            raise ConfigError(
                f"spdyn_ratio_scope must be interval or audio, got {self.spdyn_ratio_scope!r}"
            )
        if not 2 <= self.cluster_k_min <= self.cluster_k_max:
            raise ConfigError(
                f"cluster K range [{self.cluster_k_min}, {self.cluster_k_max}] is invalid"
            )
        for name in self.plan_ids():
            if name not in PLANS:
                raise ConfigError(
                    f"unknown plan {name!r}; choose from {sorted(PLANS)}"
                )

    def plan_ids(self) -> list[str]:
        return [p.strip() for p in self.plan.split(",") if p.strip()]

    def vad_config(self) -> VadConfig:
        return VadConfig(
            floor_percentile=self.vad_floor_percentile,
            margin_db=self.vad_margin_db,
            abs_threshold_db=self.vad_abs_threshold_db,
            harmonicity_threshold=self.vad_harmonicity_threshold,
            harmonicity_margin_db=self.vad_harmonicity_margin_db,
            median_frames=self.vad_median_frames,
            hangover_frames=self.vad_hangover_frames,
            min_run_frames=self.vad_min_run_frames,
        )

    def syllable_config(self) -> SyllableConfig:
        return SyllableConfig(
            band_low_hz=self.syll_band_low_hz,
            band_high_hz=self.syll_band_high_hz,
            smooth_s=self.syll_smooth_s,
            height_frac=self.syll_height_frac,
            prominence_frac=self.syll_prominence_frac,
            min_gap_s=self.syll_min_gap_s,
        )

    def feature_config(self) -> FeatureConfig:
        return FeatureConfig(
            vad=self.vad_config(),
            syllable=self.syllable_config(),
            min_pause_s=self.min_pause_s,
            ratio_scope=self.spdyn_ratio_scope,
        )

    def dump(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            lines.append(f"{f.name} = {getattr(self, f.name)}")
        return "\n".join(lines) + "\n"


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, raw: str):
    f = _FIELDS[name]
    raw = raw.strip()
    try:
        if f.type == "int":
            return int(raw)
        if f.type == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{name} expects a {f.type}, got {raw!r}") from None
    return raw


def apply_set(cfg: RunConfig, assignment: str) -> None:
    """Apply one ``key=value`` override in place."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not key=value")
    name, raw = assignment.split("=", 1)
    name = name.strip()
    if name not in _FIELDS:
        raise ConfigError(f"unknown config key {name!r}")
    setattr(cfg, name, _coerce(name, raw))


def load_config(path: str | Path | None = None,
                overrides: list[str] | None = None) -> RunConfig:
    """Build a RunConfig from defaults, an optional file and --set flags."""
    cfg = RunConfig()
    if path is not None:
        for k, line in enumerate(Path(path).read_text().splitlines()):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{k + 1}: expected key = value")
            name, raw = line.split("=", 1)
            name = name.strip()
            if name not in _FIELDS:
                raise ConfigError(f"{path}:{k + 1}: unknown config key {name!r}")
            setattr(cfg, name, _coerce(name, raw))
    for assignment in overrides or []:
        apply_set(cfg, assignment)
    cfg.validate()
    return cfg
