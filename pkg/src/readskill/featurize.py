"""Assembly of the 17-dimensional acoustic feature vector and the
features.csv table format.

Feature order is part of the file contract; downstream consumers resolve
features by name through FEATURE_INDEX, never by hardcoded position.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .corpus import AudioRecording, StoryText, VideoInterval
from .dsp import FrameTrack, VadConfig, build_track
from .dynamics import (
    BAND_WIDTH_HZ,
    MACRO_WIN_FRAMES,
    MICRO_WIN_FRAMES,
    intensity_dynamics,
    spectral_dynamics,
)
from .errors import IntervalCountMismatch, SchemaMismatch
from .pauses import (
    MIN_PAUSE_S,
    Pause,
    SyllableConfig,
    SyllablePeak,
    detect_syllables,
    extract_pauses,
    pause_features,
    syllable_rate_features,
)

FORMAT_VERSION = "features-v1"

PAUSE_FEATURES = (
    "pause_mean", "pause_std", "pause_min", "pause_max",
    "pause_freq", "pauses_per_interval",
)
RATE_FEATURES = (
    "rel_syll_mean", "rel_syll_std", "rel_syll_cv", "articulation_rate",
)
SPECTRAL_DYNAMICS_FEATURES = (
    "freq_distribution_ratio", "norm_mode_count", "norm_mode_variation",
)
INTENSITY_DYNAMICS_FEATURES = (
    "intensity_macro_mean", "intensity_macro_std",
    "intensity_micro_mean", "intensity_micro_std",
)

FEATURE_NAMES: tuple[str, ...] = (
    PAUSE_FEATURES + RATE_FEATURES
    + SPECTRAL_DYNAMICS_FEATURES + INTENSITY_DYNAMICS_FEATURES
)
FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}

FEATURE_GROUPS = {
    "pause": PAUSE_FEATURES,
    "rate": RATE_FEATURES,
    "spectral_dynamics": SPECTRAL_DYNAMICS_FEATURES,
    "intensity_dynamics": INTENSITY_DYNAMICS_FEATURES,
}


@dataclass
class FeatureConfig:
    """Knobs for the full extraction pipeline."""

    vad: VadConfig = field(default_factory=VadConfig)
    syllable: SyllableConfig = field(default_factory=SyllableConfig)
    min_pause_s: float = MIN_PAUSE_S
    band_width_hz: float = BAND_WIDTH_HZ
    ratio_scope: str = "interval"
    macro_win_frames: int = MACRO_WIN_FRAMES
    micro_win_frames: int = MICRO_WIN_FRAMES


@dataclass
class FeatureVector:
    recording_id: str
    values: np.ndarray
    label: str | None = None
    warnings: tuple[str, ...] = ()


@dataclass
class ExtractionDetail:
    """Intermediate products kept around for dumps and tests."""

    track: FrameTrack
    pauses: list[Pause]
    peaks: list[SyllablePeak]


def extract_features(recording: AudioRecording, intervals: list[VideoInterval],
                     story: StoryText, label: str | None = None,
                     recording_id: str = "", cfg: FeatureConfig | None = None,
                     return_detail: bool = False):
    """Compute the 17 acoustic features for one recording.

    A recording with no detected speech gets the all-silence policy: the
    pause group reflects one recording-length pause and every other group
    is zero, with a "no_speech" warning attached.
    """
    cfg = cfg or FeatureConfig()
    if len(intervals) != len(story.sentences):
        raise IntervalCountMismatch(
            f"{len(intervals)} intervals vs {len(story.sentences)} story sentences"
        )

    track = build_track(recording.samples, cfg.vad)
    pauses = extract_pauses(track.is_speech, track.hop_s, cfg.min_pause_s)
    pf = pause_features(pauses, intervals, recording.duration)

    warnings: list[str] = []
    speech_frames = int(track.is_speech.sum())
    speech_duration = speech_frames * track.hop_s

    if speech_frames == 0:
        warnings.append("no_speech")
        peaks: list[SyllablePeak] = []
        sr = syllable_rate_features(peaks, intervals,
                                    list(story.sentence_syllables), 0.0)
    else:
        peaks = detect_syllables(recording.samples, track.is_speech, cfg.syllable)
        sr = syllable_rate_features(peaks, intervals,
                                    list(story.sentence_syllables), speech_duration)

    sd = spectral_dynamics(track, intervals, cfg.band_width_hz, cfg.ratio_scope)
    idy = intensity_dynamics(track, intervals, cfg.macro_win_frames, cfg.micro_win_frames)

    values = np.array([
        pf.pause_mean, pf.pause_std, pf.pause_min, pf.pause_max,
        pf.pause_freq, pf.pauses_per_interval,
        sr.rel_syll_mean, sr.rel_syll_std, sr.rel_syll_cv, sr.articulation_rate,
        sd.freq_distribution_ratio, sd.norm_mode_count, sd.norm_mode_variation,
        idy.macro_mean, idy.macro_std, idy.micro_mean, idy.micro_std,
    ])
    vec = FeatureVector(recording_id=recording_id, values=values, label=label,
                        warnings=tuple(warnings))
    if return_detail:
        return vec, ExtractionDetail(track=track, pauses=pauses, peaks=peaks)
    return vec


def write_features(rows: list[FeatureVector], path) -> None:
    """Write a versioned feature table; floats round-trip exactly."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# {FORMAT_VERSION}\n")
        fh.write("id,class," + ",".join(FEATURE_NAMES) + "\n")
        for row in rows:
            vals = ",".join(repr(float(v)) for v in row.values)
            fh.write(f"{row.recording_id},{row.label or ''},{vals}\n")


def read_features(path) -> list[FeatureVector]:
    """Read a feature table written by write_features."""
    with open(path, newline="") as fh:
        version_line = fh.readline().strip()
        if version_line != f"# {FORMAT_VERSION}":
            raise SchemaMismatch(f"{path}: unknown format marker {version_line!r}")
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["id", "class", *FEATURE_NAMES]
        if header != expected:
            raise SchemaMismatch(f"{path}: header does not match {FORMAT_VERSION}")
        rows = []
        for rec in reader:
            if not rec:
                continue
            if len(rec) != len(expected):
                raise SchemaMismatch(f"{path}: row for {rec[0]!r} has {len(rec)} columns")
            rows.append(FeatureVector(
                recording_id=rec[0],
                values=np.array([float(v) for v in rec[2:]]),
                label=rec[1] or None,
            ))
    return rows
