"""Acoustic low-level descriptors (LLDs) and statistical functionals.

Participant speech is framed at ~100 overlapping frames per second (25 ms
window, 10 ms hop). Three LLD groups are extracted per frame:

    spectral (S)       4 band energies (0-250, 0-650, 250-650, 1000-4000 Hz),
                       4 roll-off points (25/50/70/90%), centroid, flux,
                       max-position, min-position
    prosody (P)        f0, f0-envelope, loudness (log-energy), voicing probability
    voice quality (VQ) jitter (local, DDP), shimmer (local), logHNR

Every base LLD track is augmented with first and second regression deltas and
each track is projected on 24 statistical functionals, giving per-session
vectors of dimension |S| = 12*3*24 = 864, |P| = |VQ| = 4*3*24 = 288 and a
merged vector |M| = 1440.

Spectral analysis runs on Hamming-windowed frames; time-domain periodicity
measures (f0, jitter, shimmer, HNR) use the raw frame samples so that a
perfectly periodic tone reports zero cycle variation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import AudioSignal, Session, Speaker

FRAME_SECONDS = 0.025
HOP_SECONDS = 0.010
MIN_SAMPLE_RATE = 8000

F0_MIN_HZ = 55.0
F0_MAX_HZ = 400.0
VOICING_THRESHOLD = 0.45

SPECTRAL_BANDS = ((0.0, 250.0), (0.0, 650.0), (250.0, 650.0), (1000.0, 4000.0))
ROLLOFF_PERCENTS = (0.25, 0.50, 0.70, 0.90)

SPECTRAL_LLDS = (
    "band_0_250", "band_0_650", "band_250_650", "band_1000_4000",
    "rolloff_25", "rolloff_50", "rolloff_70", "rolloff_90",
    "centroid", "flux", "max_pos", "min_pos",
)
PROSODY_LLDS = ("f0", "f0_env", "loudness", "voicing")
VQ_LLDS = ("jitter_local", "jitter_ddp", "shimmer_local", "log_hnr")

FUNCTIONAL_NAMES = (
    "range", "argmax_pos", "argmin_pos",
    "lin_slope", "lin_offset", "lin_err",
    "quad_a", "quad_b", "quad_c", "quad_err",
    "zcr", "n_peaks", "peak_dist_mean", "peak_amp_mean",
    "geo_mean_nz", "n_nonzero", "centroid",
    "variance", "stddev", "skewness", "kurtosis",
    "mean", "vmax", "vmin",
)

GROUP_LLDS = {"S": SPECTRAL_LLDS, "P": PROSODY_LLDS, "VQ": VQ_LLDS}
GROUP_DIMS = {"S": 864, "P": 288, "VQ": 288, "M": 1440}

_LOUDNESS_FLOOR = 1e-30


class EmptyInputError(ValueError):
    pass


@dataclass(frozen=True)
class LLDTrack:
    """One per-frame descriptor track."""

    name: str
    values: np.ndarray
    group: str  # S | P | VQ
    order: int = 0  # derivative order, 0..2


@dataclass(frozen=True)
class FrameSet:
    """Raw 25 ms frames (rows) taken from participant turn spans."""

    samples: np.ndarray  # (n_frames, frame_len)
    rate: int

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def frame_len(self) -> int:
        return self.samples.shape[1]

    def windowed(self) -> np.ndarray:
        return self.samples * np.hamming(self.frame_len)


@dataclass(frozen=True)
class AcousticVector:
    """Named per-session feature vector for one acoustic group."""

    group: str  # S | P | VQ | M
    names: tuple[str, ...]
    values: np.ndarray
    session_id: str = ""

    def __post_init__(self):
        if len(self.names) != len(self.values):
            raise ValueError("names/values length mismatch")
        expected = GROUP_DIMS.get(self.group)
        if expected is not None and len(self.values) != expected:
            raise ValueError(f"group {self.group} must have {expected} features, got {len(self.values)}")


# ---------------------------------------------------------------------------
# framing
# ---------------------------------------------------------------------------


def frame_signal(audio: AudioSignal, turns) -> FrameSet:
    """Cut 25 ms / 10 ms-hop frames from participant turn spans.

    Frames crossing a turn boundary are dropped; turns shorter than one
    window contribute no frames.
    """
    if audio.rate < MIN_SAMPLE_RATE:
        raise ValueError(f"sample rate {audio.rate} below minimum {MIN_SAMPLE_RATE} Hz")
    spans = [t for t in turns if t.speaker is Speaker.PARTICIPANT]
    if not spans:
        raise EmptyInputError("no participant turns")

    flen = int(round(FRAME_SECONDS * audio.rate))
    hop = int(round(HOP_SECONDS * audio.rate))
    n = len(audio.samples)

    frames = []
    for t in spans:
        lo = min(max(int(round(t.start * audio.rate)), 0), n)
        hi = min(max(int(round(t.stop * audio.rate)), 0), n)
        for off in range(lo, hi - flen + 1, hop):
            frames.append(audio.samples[off : off + flen])
    if frames:
        mat = np.array(frames, dtype=np.float64)
    else:
        mat = np.zeros((0, flen))
    return FrameSet(mat, audio.rate)


# ---------------------------------------------------------------------------
# spectral LLDs
# ---------------------------------------------------------------------------


def spectral_llds(frames: FrameSet) -> list[LLDTrack]:
    """12 spectral tracks from the power spectrum of Hamming-windowed frames.

    All-zero frames report 0 for band energies, roll-offs and centroid.
    """
    if len(frames) == 0:
        raise EmptyInputError("empty frame set")
    spec = np.fft.rfft(frames.windowed(), axis=1)
    power = np.abs(spec) ** 2
    mag = np.abs(spec)
    freqs = np.fft.rfftfreq(frames.frame_len, d=1.0 / frames.rate)

    total = power.sum(axis=1)
    nonzero = total > 0.0

    tracks = {}
    for (lo, hi), name in zip(SPECTRAL_BANDS, SPECTRAL_LLDS[:4]):
        mask = (freqs >= lo) & (freqs <= hi)
        tracks[name] = power[:, mask].sum(axis=1)

    cum = np.cumsum(power, axis=1)
    for pct, name in zip(ROLLOFF_PERCENTS, SPECTRAL_LLDS[4:8]):
        idx = np.argmax(cum >= pct * total[:, None], axis=1)
        roll = freqs[idx]
        tracks[name] = np.where(nonzero, roll, 0.0)

    centroid = np.zeros(len(frames))
    centroid[nonzero] = (power[nonzero] * freqs).sum(axis=1) / total[nonzero]
    tracks["centroid"] = centroid

    mag_sum = mag.sum(axis=1, keepdims=True)
    norm = np.divide(mag, mag_sum, out=np.zeros_like(mag), where=mag_sum > 0)
    flux = np.zeros(len(frames))
    if len(frames) > 1:
        flux[1:] = np.sqrt(((norm[1:] - norm[:-1]) ** 2).sum(axis=1))
    tracks["flux"] = flux

    tracks["max_pos"] = freqs[np.argmax(power, axis=1)]
    tracks["min_pos"] = freqs[np.argmin(power, axis=1)]

    return [LLDTrack(name, tracks[name], "S") for name in SPECTRAL_LLDS]


# ---------------------------------------------------------------------------
# prosodic LLDs
# ---------------------------------------------------------------------------


def _normalized_acf(frames: FrameSet) -> np.ndarray:
    """Bias-corrected normalized autocorrelation r(tau) per frame (FFT-based)."""
    x = frames.samples
    n, flen = x.shape
    nfft = 1 << int(np.ceil(np.log2(2 * flen)))
    spec = np.fft.rfft(x, n=nfft, axis=1)
    acf = np.fft.irfft(np.abs(spec) ** 2, n=nfft, axis=1)[:, :flen]
    r0 = acf[:, 0:1]
    lags = np.arange(flen)
    corr = flen / np.maximum(flen - lags, 1)
    out = np.divide(acf, r0, out=np.zeros_like(acf), where=r0 > 0) * corr
    return out


def _pitch_lags(frames: FrameSet) -> tuple[int, int]:
    lag_min = max(int(np.ceil(frames.rate / F0_MAX_HZ)), 2)
    lag_max = min(int(np.floor(frames.rate / F0_MIN_HZ)), frames.frame_len - 1)
    if lag_max <= lag_min:
        raise ValueError("frame too short for the pitch search range")
    return lag_min, lag_max


def prosodic_llds(frames: FrameSet) -> list[LLDTrack]:
    """f0 (autocorrelation peak in 55-400 Hz), its envelope, loudness, voicing.

    Unvoiced frames get f0 = 0; the envelope holds the last voiced value
    through unvoiced gaps. Loudness is the natural log of mean frame energy,
    so scaling the signal by g shifts it by 2*log(g).
    """
    if len(frames) == 0:
        raise EmptyInputError("empty frame set")
    acf = _normalized_acf(frames)
    lag_min, lag_max = _pitch_lags(frames)
    window = acf[:, lag_min : lag_max + 1]
    # for exactly periodic signals the corrected ACF is ~1 at every period
    # multiple; take the smallest lag within tolerance of the peak so the
    # fundamental wins over its subharmonics
    rmax = window.max(axis=1)
    near_peak = window >= (rmax[:, None] - 0.01)
    best = np.argmax(near_peak, axis=1) + lag_min
    peak = window[np.arange(len(frames)), best - lag_min]
    voicing = np.clip(peak, 0.0, 1.0)

    voiced = voicing >= VOICING_THRESHOLD
    f0 = np.where(voiced, frames.rate / best, 0.0)

    env = np.zeros(len(frames))
    last = 0.0
    for i, v in enumerate(f0):
        if v > 0:
            last = v
        env[i] = last

    energy = np.mean(frames.samples**2, axis=1)
    loudness = np.log(np.maximum(energy, _LOUDNESS_FLOOR))

    vals = {"f0": f0, "f0_env": env, "loudness": loudness, "voicing": voicing}
    return [LLDTrack(name, vals[name], "P") for name in PROSODY_LLDS]


# ---------------------------------------------------------------------------
# voice-quality LLDs
# ---------------------------------------------------------------------------


def _cycle_peaks(x: np.ndarray, period: float) -> np.ndarray:
    """Indices of one amplitude peak per pitch cycle (greedy, taller wins)."""
    if len(x) < 3:
        return np.array([], dtype=int)
    interior = (x[1:-1] > x[:-2]) & (x[1:-1] > x[2:])
    cand = np.where(interior)[0] + 1
    peak_floor = 0.5 * x.max()
    cand = cand[x[cand] >= peak_floor]
    kept: list[int] = []
    # generous separation so the picker survives a period-doubled f0 estimate
    min_sep = 0.4 * period
    for i in cand:
        if kept and i - kept[-1] < min_sep:
            if x[i] > x[kept[-1]]:
                kept[-1] = int(i)
        else:
            kept.append(int(i))
    return np.array(kept, dtype=int)


def voice_quality_llds(frames: FrameSet, f0_track: LLDTrack) -> list[LLDTrack]:
    """Jitter (local, DDP), shimmer (local) and logHNR; all 0 on unvoiced frames."""
    if len(frames) == 0:
        raise EmptyInputError("empty frame set")
    f0 = np.asarray(f0_track.values)
    if len(f0) != len(frames):
        raise ValueError("f0 track and frames disagree in length")

    acf = _normalized_acf(frames)
    n = len(frames)
    jit_loc = np.zeros(n)
    jit_ddp = np.zeros(n)
    shim = np.zeros(n)
    hnr = np.zeros(n)

    for t in range(n):
        if f0[t] <= 0:
            continue
        period = frames.rate / f0[t]
        x = frames.samples[t]
        if x.max() <= 0:
            continue

        lag = int(round(period))
        if 0 < lag < frames.frame_len:
            r = float(np.clip(acf[t, lag], 1e-10, 1.0 - 1e-10))
            hnr[t] = 10.0 * np.log10(r / (1.0 - r))

        peaks = _cycle_peaks(x, period)
        if len(peaks) >= 2:
            periods = np.diff(peaks).astype(np.float64)
            ok = (periods >= 0.3 * period) & (periods <= 1.7 * period)
            periods = periods[ok]
            amps = x[peaks]
            if len(periods) >= 2:
                jit_loc[t] = np.mean(np.abs(np.diff(periods))) / np.mean(periods)
            if len(periods) >= 3:
                jit_ddp[t] = np.mean(np.abs(np.diff(periods, n=2))) / np.mean(periods)
            if len(amps) >= 2 and np.mean(amps) > 0:
                shim[t] = np.mean(np.abs(np.diff(amps))) / np.mean(amps)

    vals = {"jitter_local": jit_loc, "jitter_ddp": jit_ddp, "shimmer_local": shim, "log_hnr": hnr}
    return [LLDTrack(name, vals[name], "VQ") for name in VQ_LLDS]


# ---------------------------------------------------------------------------
# derivatives and functionals
# ---------------------------------------------------------------------------


def add_derivatives(track: LLDTrack) -> tuple[LLDTrack, LLDTrack]:
    """First and second regression deltas (window +-2, replicated edges)."""
    d1 = _delta(track.values)
    d2 = _delta(d1)
    return (
        LLDTrack(track.name + "_de", d1, track.group, order=1),
        LLDTrack(track.name + "_de2", d2, track.group, order=2),
    )


def _delta(values: np.ndarray, width: int = 2) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 2 * width + 1:
        raise ValueError(f"track length {len(values)} too short for delta window +-{width}")
    padded = np.pad(values, width, mode="edge")
    denom = 2.0 * sum(k * k for k in range(1, width + 1))
    out = np.zeros_like(values)
    for k in range(1, width + 1):
        out += k * (padded[width + k : width + k + len(values)] - padded[width - k : width - k + len(values)])
    return out / denom


def apply_functionals(values: np.ndarray) -> np.ndarray:
    """Project one LLD track on the 24 functionals, in FUNCTIONAL_NAMES order."""
    x = np.asarray(values, dtype=np.float64)
    n = len(x)
    if n < 3:
        raise ValueError(f"track length {n} < 3")
    t = np.arange(n, dtype=np.float64)

    lin = np.polyfit(t, x, 1)
    lin_err = float(np.mean((np.polyval(lin, t) - x) ** 2))
    quad = np.polyfit(t, x, 2)
    quad_err = float(np.mean((np.polyval(quad, t) - x) ** 2))

    zcr = float(np.count_nonzero(x[:-1] * x[1:] < 0)) / (n - 1)

    interior = (x[1:-1] > x[:-2]) & (x[1:-1] > x[2:])
    peaks = np.where(interior)[0] + 1
    peaks = peaks[x[peaks] > x.mean()]
    n_peaks = float(len(peaks))
    peak_dist = float(np.mean(np.diff(peaks))) if len(peaks) >= 2 else 0.0
    peak_amp = float(np.mean(x[peaks])) if len(peaks) else 0.0

    nz = np.abs(x[x != 0.0])
    geo = float(np.exp(np.mean(np.log(nz)))) if len(nz) else 0.0

    sx = float(x.sum())
    centroid = float((t * x).sum() / sx) if sx != 0.0 else 0.0

    mean = float(x.mean())
    var = float(np.mean((x - mean) ** 2))
    std = float(np.sqrt(var))
    if std > 0.0:
        skew = float(np.mean((x - mean) ** 3) / std**3)
        kurt = float(np.mean((x - mean) ** 4) / var**2)
    else:
        skew = kurt = 0.0

    return np.array([
        float(x.max() - x.min()),
        float(np.argmax(x)),
        float(np.argmin(x)),
        float(lin[0]), float(lin[1]), lin_err,
        float(quad[0]), float(quad[1]), float(quad[2]), quad_err,
        zcr, n_peaks, peak_dist, peak_amp,
        geo, float(np.count_nonzero(x)), centroid,
        var, std, skew, kurt,
        mean, float(x.max()), float(x.min()),
    ])


# ---------------------------------------------------------------------------
# per-session vectors
# ---------------------------------------------------------------------------


def _base_tracks(frames: FrameSet, group: str) -> list[LLDTrack]:
    if group == "S":
        return spectral_llds(frames)
    prosody = prosodic_llds(frames)
    if group == "P":
        return prosody
    if group == "VQ":
        return voice_quality_llds(frames, prosody[0])
    raise ValueError(f"unknown group {group!r}")


def session_acoustic_vector(session: Session, group: str) -> AcousticVector:
    """Extract one acoustic group (S, P or VQ) for a session.

    Each base LLD contributes itself plus its delta and delta-delta tracks,
    each projected on the 24 functionals.
    """
    if group not in ("S", "P", "VQ"):
        raise ValueError(f"unknown group {group!r}")
    if session.audio is None:
        raise EmptyInputError(f"session {session.id} has no audio")
    frames = frame_signal(session.audio, session.turns)
    if len(frames) == 0:
        raise EmptyInputError(f"session {session.id}: no frames (all turns shorter than one window)")

    names: list[str] = []
    chunks: list[np.ndarray] = []
    for base in _base_tracks(frames, group):
        d1, d2 = add_derivatives(base)
        for track in (base, d1, d2):
            names.extend(f"{group}.{track.name}.{f}" for f in FUNCTIONAL_NAMES)
            chunks.append(apply_functionals(track.values))
    return AcousticVector(group, tuple(names), np.concatenate(chunks), session.id)


def merge_groups(p: AcousticVector, s: AcousticVector, vq: AcousticVector) -> AcousticVector:
    """Linear merge M = P + S + VQ (concatenation in that order)."""
    if (p.group, s.group, vq.group) != ("P", "S", "VQ"):
        raise ValueError("merge_groups expects vectors for groups P, S, VQ in that order")
    ids = {p.session_id, s.session_id, vq.session_id}
    if len(ids) != 1:
        raise ValueError(f"cannot merge vectors from different sessions: {sorted(ids)}")
    names = p.names + s.names + vq.names
    values = np.concatenate([p.values, s.values, vq.values])
    return AcousticVector("M", names, values, p.session_id)
