"""Waveform container and foundational signal operations.

Linear convolution, SNR-controlled mixing, and a 50%-overlap
analysis/synthesis transform pair (20 ms windows, 10 ms hop at 48 kHz).
Every operation is a pure function over immutable inputs and is safe to
call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import (
    DegenerateEnergyError,
    MalformedSpectraError,
    ParameterError,
    SampleRateMismatchError,
    TooShortError,
)

DEFAULT_SAMPLE_RATE = 48000
WINDOW_MS = 20.0
FRAME_ADVANCE_MS = 10.0


@dataclass(frozen=True)
class Signal:
    """A finite mono waveform, full-scale amplitude +-1.0.

    Samples are stored as float64. Construction rejects empty, NaN or
    Inf data and nonpositive sample rates.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if self.sample_rate <= 0:
            raise ParameterError(f"sample_rate must be positive, got {self.sample_rate}")
        if samples.ndim != 1 or samples.size < 1:
            raise ParameterError("signal must be a non-empty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ParameterError("signal contains NaN or Inf samples")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return self.samples.size / self.sample_rate

    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.samples ** 2)))

    def power(self) -> float:
        """Mean squared amplitude over the full signal."""
        return float(np.mean(self.samples ** 2))


@dataclass(frozen=True)
class FrameSpectra:
    """One-sided complex spectra of overlapping analysis frames.

    ``frames`` has shape (n_frames, fft_size // 2 + 1). The default
    profile is 20 ms windows advanced by 10 ms (960/480 samples at
    48 kHz) with fft_size equal to the window length.
    """

    frames: np.ndarray
    sample_rate: int
    fft_size: int
    frame_advance_ms: float = FRAME_ADVANCE_MS
    window_ms: float = WINDOW_MS

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.complex128)
        object.__setattr__(self, "frames", frames)
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise MalformedSpectraError("frames must be a non-empty 2-D array")
        if frames.shape[1] != self.fft_size // 2 + 1:
            raise MalformedSpectraError(
                f"{frames.shape[1]} bins inconsistent with fft_size={self.fft_size}")
        if self.fft_size < self.window_samples:
            raise MalformedSpectraError("fft_size smaller than the analysis window")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_bins(self) -> int:
        return self.frames.shape[1]

    @property
    def window_samples(self) -> int:
        return round(self.sample_rate * self.window_ms / 1000.0)

    @property
    def hop_samples(self) -> int:
        return round(self.sample_rate * self.frame_advance_ms / 1000.0)


def power_complementary_window(length: int) -> np.ndarray:
    """Squared-sine window whose squares overlap-add to one at 50% hop.

    w[n] = sin(pi/2 * sin^2(pi (n + 0.5) / N)); using the same window
    for analysis and synthesis gives perfect reconstruction away from
    the signal edges.
    """
    k = np.arange(length)
    return np.sin(0.5 * np.pi * np.sin(np.pi * (k + 0.5) / length) ** 2)


def convolve(x: Signal, h, method: str = "fft") -> Signal:
    """Linearly convolve a signal with an impulse response.

    Parameters
    ----------
    x : Signal
        Input waveform.
    h : Rir or Signal
        Impulse response; must share the sample rate of ``x``.
    method : str
        ``fft`` (default) for the fast transform-domain path or
        ``direct`` for the O(N*M) multiply-accumulate path. Both paths
        produce the same full-length (len(x) + len(h) - 1) output to
        within rounding.
    """
    if x.sample_rate != h.sample_rate:
        raise SampleRateMismatchError(
            f"signal at {x.sample_rate} Hz vs impulse response at {h.sample_rate} Hz")
    taps = getattr(h, "taps", None)
    if taps is None:
        taps = h.samples
    if method == "fft":
        out = fftconvolve(x.samples, taps, mode="full")
    elif method == "direct":
        out = np.convolve(x.samples, taps, mode="full")
    else:
        raise ParameterError(f"unknown convolution method {method!r}")
    return Signal(out, x.sample_rate)


def fit_noise_length(noise: Signal, length: int, offset: int = 0) -> Signal:
    """Cyclically extend or crop a noise signal to exactly ``length`` samples.

    ``offset`` picks the starting position inside the (cyclically
    extended) noise, so longer recordings are cropped from there and
    shorter ones loop.
    """
    if length < 1:
        raise ParameterError("length must be at least 1")
    idx = (offset + np.arange(length)) % len(noise)
    return Signal(noise.samples[idx], noise.sample_rate)


def mix_at_snr(speech: Signal, noise: Signal, snr_db: float,
               noise_offset: int = 0) -> tuple[Signal, float]:
    """Scale noise against speech to hit a requested SNR, then sum.

    Power is the mean square over the full signal; no voice-activity
    weighting is applied. The noise is cyclically extended or cropped
    (from ``noise_offset``) to the speech length before scaling.

    Returns
    -------
    (mixture, noise_gain)
        The mixture signal and the linear gain applied to the noise,
        chosen so 10*log10(P_speech / P_scaled_noise) equals ``snr_db``.
    """
    if speech.sample_rate != noise.sample_rate:
        raise SampleRateMismatchError(
            f"speech at {speech.sample_rate} Hz vs noise at {noise.sample_rate} Hz")
    fitted = fit_noise_length(noise, len(speech), noise_offset)
    p_speech = speech.power()
    p_noise = fitted.power()
    if p_speech == 0.0:
        raise DegenerateEnergyError("speech has zero energy")
    if p_noise == 0.0:
        raise DegenerateEnergyError("noise has zero energy")
    noise_gain = float(np.sqrt(p_speech / (p_noise * 10.0 ** (snr_db / 10.0))))
    mixture = Signal(speech.samples + noise_gain * fitted.samples, speech.sample_rate)
    return mixture, noise_gain


def analyze(signal: Signal, window_ms: float = WINDOW_MS,
            frame_advance_ms: float = FRAME_ADVANCE_MS,
            fft_size: int | None = None) -> FrameSpectra:
    """Split a signal into 50%-overlapped windowed frames and transform.

    Frames shorter than one full window at the tail are dropped. With
    the default profile a 1 s signal at 48 kHz yields 99 frames.
    """
    win = round(signal.sample_rate * window_ms / 1000.0)
    hop = round(signal.sample_rate * frame_advance_ms / 1000.0)
    if win < 2 or hop < 1:
        raise ParameterError("window/advance too small for this sample rate")
    if fft_size is None:
        fft_size = win
    if fft_size < win:
        raise ParameterError("fft_size must be at least the window length")
    if len(signal) < win:
        raise TooShortError(f"signal of {len(signal)} samples shorter than one "
                            f"{win}-sample window")
    window = power_complementary_window(win)
    n_frames = 1 + (len(signal) - win) // hop
    idx = hop * np.arange(n_frames)[:, None] + np.arange(win)
    frames = np.fft.rfft(signal.samples[idx] * window, n=fft_size, axis=1)
    return FrameSpectra(frames, signal.sample_rate, fft_size,
                        frame_advance_ms, window_ms)


def synthesize(spectra: FrameSpectra) -> Signal:
    """Overlap-add frame spectra back into a waveform.

    Uses the same power-complementary window as ``analyze``, so
    synthesize(analyze(s)) reproduces s exactly except within one
    window of each edge.
    """
    win = spectra.window_samples
    hop = spectra.hop_samples
    window = power_complementary_window(win)
    frames_t = np.fft.irfft(spectra.frames, n=spectra.fft_size, axis=1)[:, :win]
    frames_t = frames_t * window
    out = np.zeros((spectra.n_frames - 1) * hop + win)
    for i in range(spectra.n_frames):
        out[i * hop:i * hop + win] += frames_t[i]
    return Signal(out, spectra.sample_rate)
