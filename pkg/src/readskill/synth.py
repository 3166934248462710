"""Deterministic synthetic-corpus generator.

Builds recordings whose pauses, syllable rates and dynamics are known by
construction, plus matching transcriptions and recognizer hypotheses, so
detector tests have exact oracles. Carriers are harmonic complexes rather
than sines so the harmonicity-based speech detector sees realistic input.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .corpus import (
    AudioRecording,
    StoryText,
    TranscribedWord,
    Transcription,
    VideoInterval,
    write_wav,
)
from .dsp import HOP, SAMPLE_RATE
from .errors import TooShort
from .lexical import SkillClass

MIN_DURATION_S = 5.0

# Rendered silences extend this far past the scheduled span on each side.
# The speech detector's median filter and two-frame hangover shrink a
# silence run by exactly this much, so detected pauses match the schedule.
PAUSE_RENDER_PAD = 3 * HOP

# resonance wander occupies [WANDER_BASE_HZ, WANDER_BASE_HZ + 400 * bands]
WANDER_BASE_HZ = 800.0
WANDER_RATE_HZ = 0.4
RESONANCE_SIGMA_HZ = 220.0

_LABELS = ("C", "M", "D", "S1", "Sm", "I")

_CONSONANTS = "bdgkmnprst"
_VOWELS = "aeiou"

_SENTENCES = (
    "the red fox ran down the long dark path home",
    "a small bird sat on top of the old tree",
    "we went to the lake to swim in the sun",
    "he read one more page then shut the big book",
)


@dataclass(frozen=True)
class ProfileSpec:
    """Everything generate() needs to render one recording class."""

    skill: SkillClass
    syllable_rate_hz: float
    am_depth_db: float
    wander_bands: int
    noise_dbfs: float
    level_dbfs: float
    label_probs: tuple[float, ...]  # over labels C, M, D, S1, Sm, I
    seed: int
    pause_schedule: tuple[tuple[float, float], ...] | None = None  # (start, duration)


_CLASS_DEFAULTS = {
    SkillClass.C_A: dict(
        syllable_rate_hz=4.0, am_depth_db=15.0, wander_bands=4,
        label_probs=(0.82, 0.04, 0.02, 0.06, 0.02, 0.04),
    ),
    SkillClass.M_A: dict(
        syllable_rate_hz=4.0, am_depth_db=15.0, wander_bands=4,
        label_probs=(0.38, 0.45, 0.03, 0.05, 0.03, 0.06),
    ),
    SkillClass.I_A: dict(
        syllable_rate_hz=5.5, am_depth_db=4.0, wander_bands=1,
        label_probs=(0.30, 0.06, 0.04, 0.08, 0.07, 0.45),
    ),
}


def make_profile(skill: SkillClass, seed: int = 0, **overrides) -> ProfileSpec:
    """Class-default profile; keyword overrides replace any field."""
    base = ProfileSpec(
        skill=skill,
        noise_dbfs=-70.0,
        level_dbfs=-20.0,
        seed=seed,
        **_CLASS_DEFAULTS[skill],
    )
    return replace(base, **overrides) if overrides else base


def default_pause_schedule(skill: SkillClass, duration: float,
                           seed: int) -> tuple[tuple[float, float], ...]:
    """Evenly spread pauses with seeded placement jitter.

    Missed-heavy recordings get three pauses of duration/10 each (30% of
    the recording, each at least 0.5 s for any legal duration); the other
    classes get short quarter-second breaks.
    """
    if skill == SkillClass.M_A:
        n, dur = 3, duration / 10.0
    elif skill == SkillClass.C_A:
        n, dur = max(1, int(round(duration / 5.0))), 0.25
    else:
        n, dur = max(1, int(round(duration / 10.0))), 0.25
    rng = np.random.default_rng([seed, 11])
    spacing = duration / (n + 1)
    out = []
    for k in range(n):
        center = spacing * (k + 1) + rng.uniform(-0.04, 0.04) * spacing
        out.append((center - dur / 2.0, dur))
    return tuple(out)


def randomized_pause_schedule(duration: float, seed: int,
                              index: int) -> tuple[tuple[float, float], ...]:
    """Class-independent schedule keyed only by corpus seed and recording
    index, so recordings that share an index share pauses across classes."""
    rng = np.random.default_rng([seed, 31, index])
    n = int(rng.integers(1, 4))
    spacing = duration / (n + 1)
    out = []
    for k in range(n):
        dur = float(rng.uniform(0.4, 1.0))
        center = spacing * (k + 1) + float(rng.uniform(-0.04, 0.04)) * spacing
        out.append((center - dur / 2.0, dur))
    return tuple(out)


def _align_schedule(schedule, n_samples: int) -> list[tuple[int, int]]:
    """Snap pause spans to the frame grid and keep them inside the
    recording with speech on both ends."""
    out = []
    margin = 8 * HOP + PAUSE_RENDER_PAD
    for start, dur in schedule:
        s0 = int(round(start * SAMPLE_RATE / HOP)) * HOP
        s1 = int(round((start + dur) * SAMPLE_RATE / HOP)) * HOP
        s0 = max(s0, margin)
        s1 = min(s1, n_samples - margin)
        if s1 > s0:
            out.append((s0, s1))
    return out


def _allocate_bumps(segment_lengths: list[int], total: int) -> list[int]:
    """Largest-remainder split of total over segments, at least 1 each."""
    lengths = np.asarray(segment_lengths, dtype=np.float64)
    ideal = total * lengths / lengths.sum()
    counts = np.maximum(1, np.floor(ideal).astype(int))
    order = np.argsort(-(ideal - np.floor(ideal)), kind="stable")
    k = 0
    while counts.sum() < total:
        counts[order[k % len(counts)]] += 1
        k += 1
    while counts.sum() > total:
        j = int(np.argmax(counts))
        if counts[j] <= 1:
            break
        counts[j] -= 1
    return counts.tolist()


def generate(profile: ProfileSpec, duration: float
             ) -> tuple[AudioRecording, list[VideoInterval], Transcription]:
    """Render one recording plus its sentence intervals and transcription.

    The recording's metadata carries the realized schedule: aligned pause
    spans, bump count, carrier f0 and the profile numbers.
    """
    if duration < MIN_DURATION_S:
        raise TooShort(f"duration {duration} s is under {MIN_DURATION_S} s")
    n = int(round(duration * SAMPLE_RATE))
    rng = np.random.default_rng([profile.seed, 17])

    schedule = profile.pause_schedule
    if schedule is None:
        schedule = default_pause_schedule(profile.skill, duration, profile.seed)
    pauses = _align_schedule(schedule, n)

    # speech spans between rendered (padded) silences
    spans = []
    cursor = 0
    for s0, s1 in pauses:
        spans.append((cursor, s0 - PAUSE_RENDER_PAD))
        cursor = s1 + PAUSE_RENDER_PAD
    spans.append((cursor, n))

    n_bumps = max(1, int(round(profile.syllable_rate_hz * duration)))
    bump_counts = _allocate_bumps([b - a for a, b in spans], n_bumps)

    # syllable-rate amplitude modulation in dB, troughs at span edges
    env_db = np.full(n, -np.inf)
    for (a, b), k in zip(spans, bump_counts):
        t = np.arange(b - a) / (b - a)
        env_db[a:b] = profile.level_dbfs - profile.am_depth_db * (
            0.5 + 0.5 * np.cos(2.0 * np.pi * k * t))
    amplitude = np.zeros(n)
    voiced = np.isfinite(env_db)
    amplitude[voiced] = 10.0 ** (env_db[voiced] / 20.0)

    # harmonic complex with a wandering spectral resonance
    f0 = float(rng.uniform(220.0, 300.0))
    t = np.arange(n) / SAMPLE_RATE
    span_hz = 400.0 * profile.wander_bands
    center = WANDER_BASE_HZ + span_hz / 2.0
    resonance = center + 0.4 * span_hz * np.sin(
        2.0 * np.pi * WANDER_RATE_HZ * t + rng.uniform(0.0, 2.0 * np.pi))
    carrier = np.zeros(n)
    power = np.zeros(n)
    for h in range(1, int(8000.0 / f0) + 1):
        gain = np.exp(-((h * f0 - resonance) ** 2) / (2.0 * RESONANCE_SIGMA_HZ ** 2))
        carrier += gain * np.cos(2.0 * np.pi * h * f0 * t + rng.uniform(0.0, 2.0 * np.pi))
        power += gain * gain
    rms = np.sqrt(power / 2.0)
    samples = amplitude * carrier / np.maximum(rms, 1e-9)

    if profile.noise_dbfs > -150.0:
        samples = samples + 10.0 ** (profile.noise_dbfs / 20.0) * rng.standard_normal(n)
    samples = np.clip(samples, -0.999, 0.999)

    boundaries = [duration * k / len(_SENTENCES) for k in range(len(_SENTENCES) + 1)]
    intervals = [
        VideoInterval(start=boundaries[k], end=boundaries[k + 1], sentence_index=k)
        for k in range(len(_SENTENCES))
    ]
    transcription = _synth_transcription(profile)

    metadata = {
        "skill": profile.skill.name,
        "seed": str(profile.seed),
        "f0_hz": repr(f0),
        "syllable_rate_hz": repr(float(profile.syllable_rate_hz)),
        "n_bumps": str(sum(bump_counts)),
        "pause_schedule": ";".join(
            f"{s0 / SAMPLE_RATE:.4f}:{(s1 - s0) / SAMPLE_RATE:.4f}" for s0, s1 in pauses
        ),
        "am_depth_db": repr(float(profile.am_depth_db)),
        "wander_bands": str(profile.wander_bands),
        "noise_dbfs": repr(float(profile.noise_dbfs)),
        "level_dbfs": repr(float(profile.level_dbfs)),
    }
    recording = AudioRecording(
        samples=samples,
        sample_rate=SAMPLE_RATE,
        duration=n / SAMPLE_RATE,
        metadata=metadata,
    )
    return recording, intervals, transcription


def default_story() -> StoryText:
    sentences = tuple(tuple(s.split()) for s in _SENTENCES)
    return StoryText(
        story_id="synth",
        sentences=sentences,
        sentence_syllables=tuple(len(s) for s in sentences),  # one syllable per word
    )


def _gibberish(rng: np.random.Generator) -> str:
    return "".join(
        _CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWELS[rng.integers(len(_VOWELS))]
        for _ in range(2)
    )


def _synth_transcription(profile: ProfileSpec) -> Transcription:
    """Draw one outcome label per story word from the profile's label
    distribution."""
    rng = np.random.default_rng([profile.seed, 23])
    probs = np.asarray(profile.label_probs, dtype=np.float64)
    probs = probs / probs.sum()
    words = []
    for word in default_story().words:
        label = _LABELS[rng.choice(len(_LABELS), p=probs)]
        sub = _gibberish(rng) if label in ("S1", "Sm") else None
        words.append(TranscribedWord(word=word, label=label, substitution=sub))
    return Transcription(story_id="synth", words=tuple(words))


def synth_hypothesis(transcription: Transcription, seed: int) -> list[tuple[str, float]]:
    """Recognizer-style word,confidence rows consistent with the outcome
    labels: correct reads score high, gibberish low, missed words vanish."""
    rng = np.random.default_rng([seed, 29])
    rows = []
    for w in transcription.words:
        if w.label == "M":
            continue
        if w.label == "C" or w.label == "D":
            rows.append((w.word, float(rng.uniform(0.7, 0.99))))
        elif w.label == "S1":
            rows.append((w.substitution, float(rng.uniform(0.55, 0.95))))
        elif w.label == "Sm":
            rows.append((w.substitution, float(rng.uniform(0.15, 0.45))))
        else:
            rows.append((_gibberish(rng), float(rng.uniform(0.05, 0.4))))
    return rows


def write_corpus(out_dir, per_class: int = 3, duration: float = 10.0,
                 seed: int = 0, skills=tuple(SkillClass),
                 noise_dbfs: float = -70.0, with_hyp: bool = True,
                 pause_style: str = "class") -> list[str]:
    """Render a full corpus directory in the standard layout.

    pause_style "class" keeps each profile's own schedule; "randomized"
    swaps in class-independent schedules so pauses carry no class signal.
    """
    if pause_style not in ("class", "randomized"):
        raise ValueError(f"unknown pause_style {pause_style!r}")
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    story = default_story()
    root.joinpath("story.txt").write_text(
        "\n".join(" ".join(s) for s in story.sentences) + "\n")

    ids = []
    labels_rows = []
    meta_rows = []
    for skill in skills:
        for k in range(per_class):
            rid = f"{skill.name.lower()}_{k:03d}"
            rec_seed = seed * 1_000_003 + int(skill) * 1_009 + k
            overrides = dict(noise_dbfs=noise_dbfs)
            if pause_style == "randomized":
                overrides["pause_schedule"] = randomized_pause_schedule(
                    duration, seed, k)
            profile = make_profile(skill, seed=rec_seed, **overrides)
            recording, intervals, transcription = generate(profile, duration)
            write_wav(recording.samples, root / f"{rid}.wav")
            with open(root / f"{rid}.intervals.csv", "w") as fh:
                for iv in intervals:
                    fh.write(f"{float(iv.start)!r},{float(iv.end)!r}\n")
            with open(root / f"{rid}.words.csv", "w") as fh:
                for w in transcription.words:
                    if w.substitution is not None:
                        fh.write(f"{w.word},{w.label},{w.substitution}\n")
                    else:
                        fh.write(f"{w.word},{w.label}\n")
            if with_hyp:
                with open(root / f"{rid}.hyp.csv", "w") as fh:
                    for word, conf in synth_hypothesis(transcription, rec_seed):
                        fh.write(f"{word},{conf!r}\n")
            ids.append(rid)
            labels_rows.append(f"{rid},{skill.name}")
            meta_rows.append(f"{rid},child{int(skill)}{k // 2},synth,2026-01-01T00:00:00")
    root.joinpath("labels.csv").write_text("\n".join(labels_rows) + "\n")
    root.joinpath("metadata.csv").write_text("\n".join(meta_rows) + "\n")
    return ids


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="synthcorpus",
        description="Render synthetic oral-reading corpora with known structure.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    gen = sub.add_parser("generate", help="write a corpus directory")
    gen.add_argument("--out", required=True, help="output corpus directory")
    gen.add_argument("--profile", default="all",
                     choices=["all"] + [c.name for c in SkillClass])
    gen.add_argument("--per-class", type=int, default=3)
    gen.add_argument("--duration", type=float, default=10.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--noise-dbfs", type=float, default=-70.0)
    gen.add_argument("--pause-style", default="class",
                     choices=["class", "randomized"])
    gen.add_argument("--no-hyp", action="store_true")
    args = parser.parse_args(argv)

    skills = tuple(SkillClass) if args.profile == "all" \
        else (SkillClass[args.profile],)
    ids = write_corpus(
        args.out,
        per_class=args.per_class,
        duration=args.duration,
        seed=args.seed,
        skills=skills,
        noise_dbfs=args.noise_dbfs,
        with_hyp=not args.no_hyp,
        pause_style=args.pause_style,
    )
    print(f"wrote {len(ids)} recordings to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
