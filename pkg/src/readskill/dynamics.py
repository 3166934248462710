"""Spectral and intensity dynamics aggregated per sentence interval.

Both feature groups describe how lively the speech is: how widely the
spectral centroid roams across frequency bands, and how much the loudness
contour moves at slow (macro) and fast (micro) time scales.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import VideoInterval
from .dsp import FrameTrack, moving_average

BAND_WIDTH_HZ = 400.0
BAND_TOP_HZ = 8000.0
MACRO_WIN_FRAMES = 31    # about 300 ms at 10 ms hop
MICRO_WIN_FRAMES = 4     # 40 ms of first differences


@dataclass(frozen=True)
class SpectralDynamics:
    freq_distribution_ratio: float
    norm_mode_count: float
    norm_mode_variation: float
    no_speech: bool = False


@dataclass(frozen=True)
class IntensityDynamics:
    macro_mean: float
    macro_std: float
    micro_mean: float
    micro_std: float
    no_speech: bool = False


def _frame_interval_index(track: FrameTrack, intervals: list[VideoInterval]) -> np.ndarray:
    """Assign each frame (by center time) to the interval containing it;
    centers past the last end stick to the last interval."""
    starts = np.array([iv.start for iv in intervals])
    idx = np.searchsorted(starts, track.times, side="right") - 1
    return np.clip(idx, 0, len(intervals) - 1)


def _top_two(counts: np.ndarray) -> tuple[int, int]:
    """Largest and second-largest band counts; ties resolve to the lower
    band, and a single occupied band yields c2 = 0."""
    c1_band = int(np.argmax(counts))
    c1 = int(counts[c1_band])
    rest = counts.copy()
    rest[c1_band] = -1
    c2 = int(max(np.max(rest), 0))
    return c1, c2


def spectral_dynamics(track: FrameTrack, intervals: list[VideoInterval],
                      band_width: float = BAND_WIDTH_HZ,
                      ratio_scope: str = "interval") -> SpectralDynamics:
    """Histogram speech-frame centroids into fixed 400 Hz bands.

    freq_distribution_ratio: mean over intervals of c1/c2 (a lone occupied
    band contributes c1 itself). With ratio_scope="audio" the ratio comes
    from the whole-recording histogram instead.
    norm_mode_count: whole-recording c1 over the speech frame count.
    norm_mode_variation: population std over intervals of the per-interval
    c1 over that interval's speech frame count.
    """
    n_bands = int(round(BAND_TOP_HZ / band_width))
    speech = track.is_speech.astype(bool)
    if not speech.any():
        return SpectralDynamics(0.0, 0.0, 0.0, no_speech=True)

    bands = np.clip((track.centroid_hz / band_width).astype(int), 0, n_bands - 1)
    idx = _frame_interval_index(track, intervals)

    ratios = []
    norms = []
    for k in range(len(intervals)):
        sel = speech & (idx == k)
        count = int(sel.sum())
        if count == 0:
            continue
        hist = np.bincount(bands[sel], minlength=n_bands)
        c1, c2 = _top_two(hist)
        ratios.append(c1 / c2 if c2 > 0 else float(c1))
        norms.append(c1 / count)

    global_hist = np.bincount(bands[speech], minlength=n_bands)
    g1, g2 = _top_two(global_hist)
    total_speech = int(speech.sum())

    if ratio_scope == "audio":
        ratio = g1 / g2 if g2 > 0 else float(g1)
    else:
        ratio = float(np.mean(ratios))
    return SpectralDynamics(
        freq_distribution_ratio=ratio,
        norm_mode_count=g1 / total_speech,
        norm_mode_variation=float(np.std(norms)),
        no_speech=False,
    )


def intensity_dynamics(track: FrameTrack, intervals: list[VideoInterval],
                       macro_win: int = MACRO_WIN_FRAMES,
                       micro_win: int = MICRO_WIN_FRAMES) -> IntensityDynamics:
    """Loudness dynamics of the speech-only intensity contour.

    Each interval's speech frames are mean-normalized in dB. The macro
    value per interval is the population std of the 31-point moving
    average of that contour; macro_mean/macro_std aggregate over
    intervals. Micro values are means of absolute frame-to-frame dB
    differences over non-overlapping 4-sample windows (trailing partial
    windows are dropped); micro_mean/micro_std aggregate every window in
    the recording.
    """
    speech = track.is_speech.astype(bool)
    if not speech.any():
        return IntensityDynamics(0.0, 0.0, 0.0, 0.0, no_speech=True)

    idx = _frame_interval_index(track, intervals)
    macros = []
    micro_windows = []
    for k in range(len(intervals)):
        sel = speech & (idx == k)
        if not sel.any():
            continue
        contour = track.intensity_db[sel]
        contour = contour - contour.mean()
        macros.append(float(np.std(moving_average(contour, macro_win))))
        diffs = np.abs(np.diff(contour))
        n_complete = len(diffs) // micro_win
        if n_complete > 0:
            blocks = diffs[: n_complete * micro_win].reshape(n_complete, micro_win)
            micro_windows.extend(blocks.mean(axis=1).tolist())

    macros_arr = np.array(macros) if macros else np.zeros(1)
    micro_arr = np.array(micro_windows) if micro_windows else np.zeros(1)
    return IntensityDynamics(
        macro_mean=float(macros_arr.mean()),
        macro_std=float(macros_arr.std()),
        micro_mean=float(micro_arr.mean()),
        micro_std=float(micro_arr.std()),
        no_speech=False,
    )
