"""Spectral and intensity dynamics on hand-built frame tracks, checked
against direct counting and loop oracles."""
from __future__ import annotations

from collections import Counter

import numpy as np
import pytest

from readskill.corpus import VideoInterval
from readskill.dsp import HOP_S, FrameTrack, moving_average
from readskill.dynamics import (
    IntensityDynamics,
    SpectralDynamics,
    intensity_dynamics,
    spectral_dynamics,
)

CENTER_S = 0.0125


def make_track(centroids, intensity=None, speech=None) -> FrameTrack:
    centroids = np.asarray(centroids, dtype=np.float64)
    n = len(centroids)
    if intensity is None:
        intensity = np.full(n, -20.0)
    if speech is None:
        speech = np.ones(n, dtype=bool)
    intensity = np.asarray(intensity, dtype=np.float64)
    energy = 10.0 ** (intensity / 10.0)
    return FrameTrack(
        energy=energy,
        intensity_db=intensity,
        centroid_hz=centroids,
        harmonicity=np.zeros(n),
        is_speech=np.asarray(speech, dtype=bool),
    )


def spans(*pairs: tuple[float, float]) -> list[VideoInterval]:
    return [VideoInterval(a, b, k) for k, (a, b) in enumerate(pairs)]


def frame_interval(n: int, k_intervals: int, duration: float) -> list[int]:
    """Interval index per frame center, mirroring the midpoint rule."""
    bounds = [duration * j / k_intervals for j in range(k_intervals + 1)]
    out = []
    for i in range(n):
        t = i * HOP_S + CENTER_S
        k = k_intervals - 1
        for j in range(k_intervals):
            if bounds[j] <= t < bounds[j + 1]:
                k = j
                break
        out.append(k)
    return out


def spectral_oracle(centroids, speech, interval_of, ratio_scope="interval"):
    """Counter-based reimplementation of the three sp-dyn features."""
    bands = [min(int(c // 400.0), 19) for c in centroids]
    k_intervals = max(interval_of) + 1
    ratios, norms = [], []
    for k in range(k_intervals):
        sel = [b for b, s, iv in zip(bands, speech, interval_of) if s and iv == k]
        if not sel:
            continue
        counts = Counter(sel)
        ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        c1 = ordered[0][1]
        c2 = ordered[1][1] if len(ordered) > 1 else 0
        ratios.append(c1 / c2 if c2 > 0 else float(c1))
        norms.append(c1 / len(sel))
    all_sel = [b for b, s in zip(bands, speech) if s]
    counts = Counter(all_sel)
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    g1 = ordered[0][1]
    g2 = ordered[1][1] if len(ordered) > 1 else 0
    if ratio_scope == "audio":
        ratio = g1 / g2 if g2 > 0 else float(g1)
    else:
        ratio = sum(ratios) / len(ratios)
    norm_mean = sum(norms) / len(norms)
    variation = (sum((x - norm_mean) ** 2 for x in norms) / len(norms)) ** 0.5
    return ratio, g1 / len(all_sel), variation


def test_single_band_degenerate():
    track = make_track(np.full(50, 1234.0))
    out = spectral_dynamics(track, spans((0.0, 50 * HOP_S + 0.1)))
    assert out.freq_distribution_ratio == 50.0
    assert out.norm_mode_count == 1.0
    assert out.norm_mode_variation == 0.0
    assert not out.no_speech


def test_even_two_band_split_ratio_one():
    # alternate between band 2 (900 Hz) and band 5 (2100 Hz)
    cents = [900.0 if i % 2 == 0 else 2100.0 for i in range(40)]
    track = make_track(cents)
    out = spectral_dynamics(track, spans((0.0, 40 * HOP_S + 0.1)))
    assert out.freq_distribution_ratio == pytest.approx(1.0)


def test_spectral_matches_counting_oracle():
    rng = np.random.default_rng(42)
    n, duration = 300, 300 * HOP_S + 0.05
    cents = rng.uniform(0.0, 7999.0, size=n)
    speech = rng.random(n) < 0.8
    speech[:5] = True
    track = make_track(cents, speech=speech)
    ivs = spans((0.0, duration / 3), (duration / 3, 2 * duration / 3),
                (2 * duration / 3, duration))
    interval_of = frame_interval(n, 3, duration)
    for scope in ("interval", "audio"):
        got = spectral_dynamics(track, ivs, ratio_scope=scope)
        want = spectral_oracle(cents, speech, interval_of, scope)
        assert got.freq_distribution_ratio == pytest.approx(want[0], abs=1e-9)
        assert got.norm_mode_count == pytest.approx(want[1], abs=1e-9)
        assert got.norm_mode_variation == pytest.approx(want[2], abs=1e-9)


def test_band_edges_clip_to_top_band():
    track = make_track([8000.0, 7999.0, 8000.0, 8000.0])
    out = spectral_dynamics(track, spans((0.0, 1.0)))
    # 8000 Hz would index band 20; it must clip into band 19 with 7999
    assert out.norm_mode_count == 1.0


def test_spectral_no_speech():
    track = make_track(np.full(30, 500.0), speech=np.zeros(30, dtype=bool))
    out = spectral_dynamics(track, spans((0.0, 1.0)))
    assert out == SpectralDynamics(0.0, 0.0, 0.0, no_speech=True)


def test_spectral_skips_empty_intervals():
    # second interval holds no speech frames; its slot must not produce NaN
    n = 100
    duration = n * HOP_S
    speech = np.ones(n, dtype=bool)
    speech[40:70] = False
    track = make_track(np.full(n, 1000.0), speech=speech)
    ivs = spans((0.0, 0.4), (0.4, 0.7), (0.7, duration))
    out = spectral_dynamics(track, ivs)
    assert np.isfinite(out.freq_distribution_ratio)
    assert np.isfinite(out.norm_mode_variation)


def test_intensity_constant_contour_zero():
    track = make_track(np.full(80, 1000.0), intensity=np.full(80, -15.0))
    out = intensity_dynamics(track, spans((0.0, 80 * HOP_S + 0.1)))
    assert out.macro_mean == 0.0
    assert out.micro_mean == 0.0
    assert not out.no_speech


def test_intensity_offset_invariant():
    rng = np.random.default_rng(3)
    base = rng.uniform(-40.0, -10.0, size=120)
    ivs = spans((0.0, 0.6), (0.6, 120 * HOP_S + 0.05))
    a = intensity_dynamics(make_track(np.full(120, 1000.0), intensity=base), ivs)
    b = intensity_dynamics(make_track(np.full(120, 1000.0), intensity=base + 12.5), ivs)
    assert a.macro_mean == pytest.approx(b.macro_mean, abs=1e-9)
    assert a.macro_std == pytest.approx(b.macro_std, abs=1e-9)
    assert a.micro_mean == pytest.approx(b.micro_mean, abs=1e-9)
    assert a.micro_std == pytest.approx(b.micro_std, abs=1e-9)


def test_intensity_alternating_micro_exact():
    # contour alternates -17, -23: every first difference is 6 dB, and the
    # 31-frame smoothing flattens the wiggle so macro stays small
    n = 200
    contour = np.where(np.arange(n) % 2 == 0, -17.0, -23.0)
    track = make_track(np.full(n, 1000.0), intensity=contour)
    out = intensity_dynamics(track, spans((0.0, n * HOP_S + 0.1)))
    assert out.micro_mean == pytest.approx(6.0)
    assert out.micro_std == pytest.approx(0.0, abs=1e-9)
    assert out.macro_mean < 0.2


def test_intensity_slow_sinusoid_macro():
    # 4 s sinusoidal contour, amplitude 6 dB, one interval; the oracle
    # repeats the documented pipeline with plain loops
    n = 400
    contour = -20.0 + 6.0 * np.sin(2.0 * np.pi * np.arange(n) / n)
    track = make_track(np.full(n, 1000.0), intensity=contour)
    out = intensity_dynamics(track, spans((0.0, n * HOP_S + 0.1)))

    centered = contour - contour.mean()
    smooth = moving_average(centered, 31)
    macro_want = float(np.std(smooth))
    diffs = np.abs(np.diff(centered))
    windows = [diffs[i: i + 4].mean() for i in range(0, len(diffs) - len(diffs) % 4, 4)]
    micro_want = float(np.mean(windows))
    micro_std_want = float(np.std(windows))
    assert out.macro_mean == pytest.approx(macro_want, abs=1e-6)
    assert out.macro_std == 0.0
    assert out.micro_mean == pytest.approx(micro_want, abs=1e-6)
    assert out.micro_std == pytest.approx(micro_std_want, abs=1e-6)
    # amplitude-6 sinusoid smoothed over 31 of 400 frames keeps most of
    # its swing: population std near 6/sqrt(2)
    assert 3.5 <= out.macro_mean <= 4.4


def test_intensity_random_matches_loop_oracle():
    rng = np.random.default_rng(17)
    n = 250
    duration = n * HOP_S + 0.02
    contour = rng.uniform(-45.0, -5.0, size=n)
    speech = rng.random(n) < 0.7
    speech[:3] = True
    track = make_track(np.full(n, 1000.0), intensity=contour, speech=speech)
    ivs = spans((0.0, duration / 2), (duration / 2, duration))
    out = intensity_dynamics(track, ivs)

    interval_of = frame_interval(n, 2, duration)
    macros, windows = [], []
    for k in range(2):
        seg = np.array([c for c, s, iv in zip(contour, speech, interval_of)
                        if s and iv == k])
        if len(seg) == 0:
            continue
        seg = seg - seg.mean()
        macros.append(float(np.std(moving_average(seg, 31))))
        diffs = np.abs(np.diff(seg))
        for i in range(0, len(diffs) - len(diffs) % 4, 4):
            windows.append(float(diffs[i: i + 4].mean()))
    assert out.macro_mean == pytest.approx(np.mean(macros), abs=1e-9)
    assert out.macro_std == pytest.approx(np.std(macros), abs=1e-9)
    assert out.micro_mean == pytest.approx(np.mean(windows), abs=1e-9)
    assert out.micro_std == pytest.approx(np.std(windows), abs=1e-9)


def test_intensity_no_speech():
    track = make_track(np.full(30, 500.0), speech=np.zeros(30, dtype=bool))
    out = intensity_dynamics(track, spans((0.0, 1.0)))
    assert out == IntensityDynamics(0.0, 0.0, 0.0, 0.0, no_speech=True)


def test_intensity_single_frame_interval():
    # one speech frame: no diffs, no windows; values stay finite zeros
    speech = np.zeros(50, dtype=bool)
    speech[10] = True
    track = make_track(np.full(50, 500.0), speech=speech)
    out = intensity_dynamics(track, spans((0.0, 1.0)))
    assert out.macro_mean == 0.0
    assert out.micro_mean == 0.0
    assert not out.no_speech
