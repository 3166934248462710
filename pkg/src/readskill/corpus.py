"""Data model and loaders for recordings, sentence intervals, stories and
word-level reading transcriptions.

A corpus root is a flat directory holding one story shared by all of its
recordings:

    story.txt            one sentence per line
    syllables.lex        optional "word count" overrides, one per line
    <id>.wav             16 kHz mono PCM16 audio
    <id>.intervals.csv   start,end rows, one per sentence
    <id>.words.csv       word,label[,substitution] rows
    <id>.hyp.csv         optional recognizer output, word,confidence rows
    labels.csv           optional "id,class" ground-truth rows
    metadata.csv         optional "id,child_id,story_id,timestamp" rows
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CoverageGap,
    EmptyIntervals,
    EmptyWord,
    MissingSubstitutionText,
    NotWav,
    OutOfRange,
    Overlap,
    UnexpectedSubstitutionText,
    UnknownLabel,
    Unsorted,
    UnsupportedEncoding,
    WordCountMismatch,
    WrongChannelCount,
    WrongSampleRate,
)

SAMPLE_RATE = 16000
PCM_SCALE = 32768.0

# reading outcome labels: correct, missed, incomplete-then-corrected,
# substituted-once, substituted-multiple, incorrect
WORD_LABELS = ("C", "M", "D", "S1", "Sm", "I")
SUBSTITUTION_LABELS = ("S1", "Sm")

VOWELS = frozenset("aeiouy")


@dataclass(eq=False)
class AudioRecording:
    """Mono 16 kHz recording with samples normalized to [-1, 1]."""

    samples: np.ndarray
    sample_rate: int
    duration: float
    metadata: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class VideoInterval:
    """Time span of one spoken sentence within a recording."""

    start: float
    end: float
    sentence_index: int


@dataclass(frozen=True)
class TranscribedWord:
    word: str
    label: str
    substitution: str | None = None


@dataclass(frozen=True)
class Transcription:
    story_id: str
    words: tuple[TranscribedWord, ...]


@dataclass(frozen=True)
class StoryText:
    story_id: str
    sentences: tuple[tuple[str, ...], ...]
    sentence_syllables: tuple[int, ...]

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(w for s in self.sentences for w in s)


def load_wav(path: str | Path, metadata: dict[str, str] | None = None) -> AudioRecording:
    """Read a RIFF/WAVE file, enforcing mono 16-bit PCM at 16 kHz.

    Samples are scaled by 1/32768 so the result lies in [-1, 1).
    """
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise NotWav(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(raw):
        cid = raw[pos:pos + 4]
        (size,) = struct.unpack("<I", raw[pos + 4:pos + 8])
        body = raw[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)

    if fmt is None or len(fmt) < 16:
        raise NotWav(f"{path}: missing fmt chunk")
    audio_format, channels, rate, _, _, bits = struct.unpack("<HHIIHH", fmt[:16])
    if audio_format != 1 or bits != 16:
        raise UnsupportedEncoding(
            f"{path}: need 16-bit PCM, got format={audio_format} bits={bits}"
        )
    if channels != 1:
        raise WrongChannelCount(f"{path}: need mono, got {channels} channels")
    if rate != SAMPLE_RATE:
        raise WrongSampleRate(f"{path}: need {SAMPLE_RATE} Hz, got {rate}")
    if data is None:
        raise NotWav(f"{path}: missing data chunk")

    pcm = np.frombuffer(data[:len(data) - (len(data) % 2)], dtype="<i2")
    samples = pcm.astype(np.float64) / PCM_SCALE
    samples.flags.writeable = False
    return AudioRecording(
        samples=samples,
        sample_rate=SAMPLE_RATE,
        duration=len(samples) / SAMPLE_RATE,
        metadata=dict(metadata or {}),
    )


def write_wav(samples: np.ndarray, path: str | Path) -> None:
    """Write float samples in [-1, 1] as mono PCM16 at 16 kHz."""
    pcm = np.clip(np.rint(np.asarray(samples) * PCM_SCALE), -32768, 32767).astype("<i2")
    body = pcm.tobytes()
    hdr = b"RIFF" + struct.pack("<I", 36 + len(body)) + b"WAVE"
    hdr += b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, SAMPLE_RATE,
                                 SAMPLE_RATE * 2, 2, 16)
    hdr += b"data" + struct.pack("<I", len(body))
    Path(path).write_bytes(hdr + body)


def parse_intervals(path: str | Path, duration: float) -> tuple[list[VideoInterval], bool]:
    """Parse start,end rows into sentence intervals.

    Intervals must be sorted, non-overlapping and cover [0, duration].
    A last end that runs past the recording is clipped; the returned flag
    reports whether clipping happened.
    """
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            rows.append((float(rec[0]), float(rec[1])))
    if not rows:
        raise EmptyIntervals(f"{path}: no intervals")

    clipped = False
    out = []
    eps = 1e-9
    prev_end = 0.0
    for k, (start, end) in enumerate(rows):
        if k > 0 and start < rows[k - 1][0]:
            raise Unsorted(f"{path}: row {k} starts before row {k - 1}")
        if start < -eps or end <= start:
            raise OutOfRange(f"{path}: row {k} has bad span [{start}, {end}]")
        if start < prev_end - eps:
            raise Overlap(f"{path}: row {k} overlaps previous interval")
        if start > prev_end + eps:
            raise CoverageGap(f"{path}: gap before row {k} at {start}")
        if end > duration + eps:
            if k == len(rows) - 1:
                end = duration
                clipped = True
            else:
                raise OutOfRange(f"{path}: row {k} ends past the recording")
        out.append(VideoInterval(start=start, end=end, sentence_index=k))
        prev_end = end
    if out[-1].end < duration - eps:
        raise CoverageGap(f"{path}: intervals end at {out[-1].end}, recording lasts {duration}")
    return out, clipped


def parse_transcription(path: str | Path, story: StoryText | None = None) -> Transcription:
    """Parse word,label[,substitution] rows into a Transcription.

    When a story is given, the row count must equal the story's word count.
    """
    words = []
    with open(path, newline="") as fh:
        for k, rec in enumerate(csv.reader(fh)):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            word = rec[0].strip()
            label = rec[1].strip() if len(rec) > 1 else ""
            sub = rec[2].strip() if len(rec) > 2 and rec[2].strip() else None
            if label not in WORD_LABELS:
                raise UnknownLabel(f"{path}: row {k} has label {label!r}")
            if label in SUBSTITUTION_LABELS and sub is None:
                raise MissingSubstitutionText(f"{path}: row {k} ({label}) needs substitution text")
            if label not in SUBSTITUTION_LABELS and sub is not None:
                raise UnexpectedSubstitutionText(f"{path}: row {k} ({label}) must not carry text")
            words.append(TranscribedWord(word=word, label=label, substitution=sub))
    if story is not None and len(words) != len(story.words):
        raise WordCountMismatch(
            f"{path}: {len(words)} rows vs {len(story.words)} story words"
        )
    return Transcription(
        story_id=story.story_id if story is not None else "",
        words=tuple(words),
    )


def write_transcription(transcription: Transcription, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        for w in transcription.words:
            if w.substitution is not None:
                out.writerow([w.word, w.label, w.substitution])
            else:
                out.writerow([w.word, w.label])


def normalize_word(word: str) -> str:
    return "".join(ch for ch in word.lower() if ch.isalpha())


def expected_syllables(word: str, lexicon: dict[str, int] | None = None) -> int:
    """Estimate spoken syllables for one written word.

    Counts maximal contiguous vowel groups (a e i o u y), drops a word-final
    silent 'e' unless the word ends in consonant+'le', and never returns
    less than 1. A lexicon entry overrides the estimate.
    """
    w = normalize_word(word)
    if not w:
        raise EmptyWord(f"no letters in {word!r}")
    if lexicon and w in lexicon:
        return lexicon[w]

    groups = 0
    in_group = False
    for ch in w:
        if ch in VOWELS:
            if not in_group:
                groups += 1
            in_group = True
        else:
            in_group = False
    if w.endswith("e"):
        consonant_le = len(w) >= 3 and w.endswith("le") and w[-3] not in VOWELS
        if not consonant_le:
            groups -= 1
    return max(1, groups)


def load_lexicon(path: str | Path) -> dict[str, int]:
    lex = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        word, count = line.split()
        lex[normalize_word(word)] = int(count)
    return lex


def load_story(path: str | Path, lexicon: dict[str, int] | None = None,
               story_id: str | None = None) -> StoryText:
    """Load a one-sentence-per-line story and precompute per-sentence
    expected syllable counts."""
    sentences = []
    for line in Path(path).read_text().splitlines():
        words = tuple(line.split())
        if words:
            sentences.append(words)
    counts = tuple(
        sum(expected_syllables(w, lexicon) for w in sent) for sent in sentences
    )
    return StoryText(
        story_id=story_id if story_id is not None else Path(path).stem,
        sentences=tuple(sentences),
        sentence_syllables=counts,
    )


@dataclass
class CorpusIndex:
    """Directory listing of one corpus root."""

    root: Path
    story: StoryText | None
    lexicon: dict[str, int]
    ids: list[str]
    labels: dict[str, str]
    metadata: dict[str, dict[str, str]]

    def wav_path(self, rid: str) -> Path:
        return self.root / f"{rid}.wav"

    def intervals_path(self, rid: str) -> Path:
        return self.root / f"{rid}.intervals.csv"

    def words_path(self, rid: str) -> Path:
        return self.root / f"{rid}.words.csv"

    def hyp_path(self, rid: str) -> Path:
        return self.root / f"{rid}.hyp.csv"


def scan_corpus(root: str | Path) -> CorpusIndex:
    """Index a corpus root. Recording ids come from *.wav basenames; when a
    root holds only transcriptions (lexical-only flows) the ids fall back to
    *.words.csv basenames."""
    root = Path(root)
    lexicon = {}
    lex_path = root / "syllables.lex"
    if lex_path.exists():
        lexicon = load_lexicon(lex_path)
    story = None
    story_path = root / "story.txt"
    if story_path.exists():
        story = load_story(story_path, lexicon)

    ids = sorted(p.name[:-4] for p in root.glob("*.wav"))
    if not ids:
        ids = sorted(p.name[:-len(".words.csv")] for p in root.glob("*.words.csv"))

    labels = {}
    labels_path = root / "labels.csv"
    if labels_path.exists():
        with open(labels_path, newline="") as fh:
            for rec in csv.reader(fh):
                if rec and rec[0].strip() and rec[0] != "id":
                    labels[rec[0]] = rec[1].strip()

    metadata: dict[str, dict[str, str]] = {}
    meta_path = root / "metadata.csv"
    if meta_path.exists():
        with open(meta_path, newline="") as fh:
            for rec in csv.reader(fh):
                if rec and rec[0].strip() and rec[0] != "id":
                    metadata[rec[0]] = {
                        "child_id": rec[1] if len(rec) > 1 else "",
                        "story_id": rec[2] if len(rec) > 2 else "",
                        "timestamp": rec[3] if len(rec) > 3 else "",
                    }
    return CorpusIndex(root=root, story=story, lexicon=lexicon, ids=ids,
                       labels=labels, metadata=metadata)
