"""Frame-level acoustic analysis: short-time energy, spectral centroid,
harmonicity and voice activity detection.

All analysis runs on 25 ms frames (400 samples) advanced by 10 ms
(160 samples). Frame timestamps refer to frame centers.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TooShort

SAMPLE_RATE = 16000
FRAME_LEN = 400          # 25 ms
HOP = 160                # 10 ms
HOP_S = HOP / SAMPLE_RATE
FFT_SIZE = 512
ENERGY_FLOOR = 1e-12     # keeps log10 finite on digital silence
SILENCE_DBFS = -60.0     # below this, harmonicity is forced to 0
CENTROID_MAX_HZ = 8000.0

# autocorrelation lag range for 60..400 Hz voicing
LAG_MIN = SAMPLE_RATE // 400   # 40
LAG_MAX = SAMPLE_RATE // 60    # 266

_HAMMING = np.hamming(FRAME_LEN)


@dataclass
class VadConfig:
    """Thresholds for the energy + harmonicity speech detector."""

    floor_percentile: float = 10.0
    margin_db: float = 6.0
    abs_threshold_db: float = -45.0
    harmonicity_threshold: float = 0.45
    harmonicity_margin_db: float = 3.0
    median_frames: int = 5
    hangover_frames: int = 2
    min_run_frames: int = 3


@dataclass
class FrameTrack:
    """Per-frame analysis of one recording."""

    energy: np.ndarray
    intensity_db: np.ndarray
    centroid_hz: np.ndarray
    harmonicity: np.ndarray
    is_speech: np.ndarray
    hop_s: float = HOP_S

    @property
    def n_frames(self) -> int:
        return len(self.energy)

    @property
    def times(self) -> np.ndarray:
        """Frame center times in seconds."""
        return np.arange(self.n_frames) * self.hop_s + (FRAME_LEN / SAMPLE_RATE) / 2.0


def _raw_frames(samples: np.ndarray, frame_len: int = FRAME_LEN, hop: int = HOP) -> np.ndarray:
    x = np.ascontiguousarray(samples, dtype=np.float64)
    if x.size < frame_len:
        raise TooShort(f"need at least {frame_len} samples, got {x.size}")
    view = np.lib.stride_tricks.sliding_window_view(x, frame_len)
    return view[::hop]


def frame_signal(samples: np.ndarray, frame_len: int = FRAME_LEN, hop: int = HOP) -> np.ndarray:
    """Split a signal into Hamming-weighted frames.

    Yields floor((len - frame_len) / hop) + 1 frames; a trailing partial
    frame is dropped.
    """
    return _raw_frames(samples, frame_len, hop) * np.hamming(frame_len)


def _centroid_batch(frames: np.ndarray) -> np.ndarray:
    spec = np.abs(np.fft.rfft(frames, n=FFT_SIZE, axis=1)) ** 2
    freqs = np.fft.rfftfreq(FFT_SIZE, d=1.0 / SAMPLE_RATE)
    keep = (freqs > 0.0) & (freqs <= CENTROID_MAX_HZ)
    spec = spec[:, keep]
    num = spec @ freqs[keep]
    denom = spec.sum(axis=1)
    out = np.zeros(len(frames))
    nz = denom > 0.0
    out[nz] = num[nz] / denom[nz]
    return out


def spectral_centroid(frame: np.ndarray) -> float:
    """Power-weighted mean frequency over (0, 8000] Hz of one frame.

    The frame is zero-padded to a 512-point FFT. An all-zero frame maps
    to 0.0.
    """
    return float(_centroid_batch(np.asarray(frame, dtype=np.float64)[None, :])[0])


def _harmonicity_batch(frames: np.ndarray, intensity_db: np.ndarray) -> np.ndarray:
    n = frames.shape[1]
    nfft = 1
    while nfft < 2 * n:
        nfft *= 2
    spec = np.fft.rfft(frames, n=nfft, axis=1)
    ac = np.fft.irfft(spec * np.conj(spec), axis=1)[:, :LAG_MAX + 1]

    sq = frames * frames
    csum = np.cumsum(sq, axis=1)
    total = csum[:, -1]
    taus = np.arange(LAG_MIN, LAG_MAX + 1)
    head = csum[:, n - 1 - taus]               # energy of x[0 : n-tau]
    tail = total[:, None] - csum[:, taus - 1]  # energy of x[tau : n]
    denom = np.sqrt(head * tail)
    num = ac[:, LAG_MIN:LAG_MAX + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(denom > 0.0, num / denom, 0.0)
    h = np.clip(rho.max(axis=1), 0.0, 1.0)
    h[intensity_db < SILENCE_DBFS] = 0.0
    return h


def harmonicity(frame: np.ndarray) -> float:
    """Peak normalized autocorrelation over lags spanning 60..400 Hz.

    Each lag's correlation is normalized by the energies of the two
    overlapping segments, so periodic frames score near 1 regardless of
    how many periods fit. Clamped to [0, 1]; frames below -60 dBFS
    return 0.
    """
    f = np.asarray(frame, dtype=np.float64)[None, :]
    e = float(np.mean(f * f))
    idb = 10.0 * np.log10(e + ENERGY_FLOOR)
    return float(_harmonicity_batch(f, np.array([idb]))[0])


def bool_runs(mask: np.ndarray):
    """Yield (start, stop, value) for maximal constant runs of a 1-D bool
    array; stop is exclusive."""
    mask = np.asarray(mask, dtype=bool)
    if mask.size == 0:
        return
    edges = np.flatnonzero(np.diff(mask)) + 1
    bounds = np.concatenate(([0], edges, [mask.size]))
    for a, b in zip(bounds[:-1], bounds[1:]):
        yield int(a), int(b), bool(mask[a])


def _median_bool(mask: np.ndarray, win: int) -> np.ndarray:
    if win <= 1 or mask.size == 0:
        return mask.copy()
    half = win // 2
    padded = np.concatenate((np.repeat(mask[0], half), mask, np.repeat(mask[-1], half)))
    counts = np.convolve(padded.astype(np.int32), np.ones(win, dtype=np.int32), mode="valid")
    return counts > win // 2


def _dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    if radius <= 0 or mask.size == 0:
        return mask.copy()
    counts = np.convolve(mask.astype(np.int32), np.ones(2 * radius + 1, dtype=np.int32),
                         mode="same")
    return counts > 0


def _close_short_gaps(mask: np.ndarray, min_run: int) -> np.ndarray:
    out = mask.copy()
    for a, b, val in bool_runs(mask):
        if val or b - a >= min_run:
            continue
        if a == 0 and b == mask.size:
            continue  # all-silence track stays silent
        out[a:b] = True
    return out


def vad(intensity_db: np.ndarray, harm: np.ndarray, cfg: VadConfig | None = None) -> np.ndarray:
    """Per-frame speech decision.

    A frame is raw speech when its intensity clears an adaptive threshold
    (noise floor + margin, never below an absolute floor), or when it is
    harmonic and sits above a smaller margin. The raw decision is median
    filtered, speech runs are extended by a hangover on both sides, and
    any leftover silence gap shorter than min_run_frames is closed so the
    output contains no run shorter than min_run_frames.
    """
    cfg = cfg or VadConfig()
    noise_floor = float(np.percentile(intensity_db, cfg.floor_percentile))
    threshold = max(noise_floor + cfg.margin_db, cfg.abs_threshold_db)
    raw = (intensity_db > threshold) | (
        (harm > cfg.harmonicity_threshold)
        & (intensity_db > noise_floor + cfg.harmonicity_margin_db)
    )
    smooth = _median_bool(raw, cfg.median_frames)
    smooth = _dilate(smooth, cfg.hangover_frames)
    return _close_short_gaps(smooth, cfg.min_run_frames)


def build_track(samples: np.ndarray, vad_config: VadConfig | None = None) -> FrameTrack:
    """Run the full frame-level analysis for one recording.

    Energy, intensity and harmonicity come from raw frames; the spectral
    centroid uses Hamming-weighted frames.
    """
    raw = _raw_frames(samples)
    energy = np.mean(raw * raw, axis=1)
    intensity_db = 10.0 * np.log10(energy + ENERGY_FLOOR)
    centroid = _centroid_batch(raw * _HAMMING)
    harm = _harmonicity_batch(raw, intensity_db)
    is_speech = vad(intensity_db, harm, vad_config)
    return FrameTrack(
        energy=energy,
        intensity_db=intensity_db,
        centroid_hz=centroid,
        harmonicity=harm,
        is_speech=is_speech,
    )


def moving_average(x: np.ndarray, win: int) -> np.ndarray:
    """Centered moving average; edge windows shrink to the available span."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0 or win <= 1:
        return x.copy()
    half = win // 2
    c = np.concatenate(([0.0], np.cumsum(x)))
    i = np.arange(x.size)
    lo = np.maximum(0, i - half)
    hi = np.minimum(x.size, i + half + 1)
    return (c[hi] - c[lo]) / (hi - lo)


def dump_frames(track: FrameTrack, path) -> None:
    """Write one row per frame for debugging and audits."""
    times = track.times
    with open(path, "w") as fh:
        fh.write("time,energy,intensity_db,centroid_hz,harmonicity,is_speech\n")
        for i in range(track.n_frames):
            fh.write(
                f"{float(times[i])!r},{float(track.energy[i])!r},"
                f"{float(track.intensity_db[i])!r},{float(track.centroid_hz[i])!r},"
                f"{float(track.harmonicity[i])!r},{int(track.is_speech[i])}\n"
            )
