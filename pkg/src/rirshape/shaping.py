"""Impulse-response synthesis and tail shaping.

A room impulse response is reshaped, tap by tap, with two gain curves
that act on the late tail while leaving the direct path and early
reflections (everything within ``t0`` of the direct sound) untouched:

* a decay curve that multiplies the tail by an exponential falling
  60 dB over ``rd`` seconds, which shortens the effective reverberation
  time of the response, and
* an attenuation curve that steps smoothly (raised cosine between
  ``t0`` and ``t1``) from unity down to ``alpha``, which scales the
  tail the same way moving the microphone to ``alpha`` times its
  distance would.

Four target strategies combine these curves, from leaving the response
untouched to zeroing everything past the early reflections.

Shaping time is measured from the direct-path peak, not from tap zero,
so recorded responses with pre-delay keep their leading taps unshaped.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kvtext, wavio
from .dsp import DEFAULT_SAMPLE_RATE, Signal
from .errors import DegenerateEnergyError, ParameterError

DEFAULT_T0 = 0.020
DEFAULT_T1 = 0.030
DEFAULT_RD = 0.200
DEFAULT_ALPHA = 0.4

MIN_SYNTH_RT60 = 0.05
MAX_SYNTH_RT60 = 3.0


class Strategy(str, Enum):
    """Training-target strategy: which gain curves multiply the tail."""

    NONE = "none"                              # identity
    FULL = "full"                              # attenuation only, alpha defaults to 0
    DECAYED = "decayed"                        # decay only
    ATTENUATED_DECAYED = "attenuated-decayed"  # attenuation times decay

    @property
    def uses_decay(self) -> bool:
        return self in (Strategy.DECAYED, Strategy.ATTENUATED_DECAYED)

    @property
    def uses_attenuation(self) -> bool:
        return self in (Strategy.FULL, Strategy.ATTENUATED_DECAYED)


_STRATEGY_ALPHA_DEFAULT = {
    Strategy.NONE: 1.0,
    Strategy.FULL: 0.0,
    Strategy.DECAYED: 1.0,
    Strategy.ATTENUATED_DECAYED: DEFAULT_ALPHA,
}


@dataclass
class ShapingParams:
    """Target strategy plus the boundaries and levels of its gain curves.

    ``t0`` is the early/late boundary, ``t1`` the end of the smooth
    attenuation transition, ``alpha`` the late-tail amplitude factor and
    ``rd`` the 60 dB decay time of the decay curve. ``alpha`` left as
    None picks the strategy default (0 for full, 0.4 for
    attenuated-decayed).
    """

    strategy: Strategy
    t0: float = DEFAULT_T0
    t1: float = DEFAULT_T1
    alpha: float | None = None
    rd: float = DEFAULT_RD

    def __post_init__(self):
        self.strategy = Strategy(self.strategy)
        if self.alpha is None:
            self.alpha = _STRATEGY_ALPHA_DEFAULT[self.strategy]
        if not 0.0 <= self.t0 < self.t1:
            raise ParameterError(f"need t1 > t0 >= 0, got t0={self.t0}, t1={self.t1}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.rd <= 0.0:
            raise ParameterError(f"rd must be positive, got {self.rd}")

    def as_dict(self) -> dict:
        return {"strategy": self.strategy.value, "t0": self.t0, "t1": self.t1,
                "alpha": self.alpha, "rd": self.rd}


@dataclass(frozen=True)
class Rir:
    """An impulse response with an identified direct-path index."""

    taps: np.ndarray
    sample_rate: int
    direct_index: int = 0

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        object.__setattr__(self, "taps", taps)
        if self.sample_rate <= 0:
            raise ParameterError(f"sample_rate must be positive, got {self.sample_rate}")
        if taps.ndim != 1 or taps.size < 1:
            raise ParameterError("taps must be a non-empty 1-D array")
        if not np.all(np.isfinite(taps)):
            raise ParameterError("taps contain NaN or Inf")
        if not 0 <= self.direct_index < taps.size:
            raise ParameterError(
                f"direct_index {self.direct_index} outside [0, {taps.size})")
        if not np.any(taps != 0.0):
            raise DegenerateEnergyError("impulse response has zero total energy")

    def __len__(self) -> int:
        return self.taps.size

    def times(self) -> np.ndarray:
        """Tap times in seconds, zero at the direct-path peak."""
        return (np.arange(self.taps.size) - self.direct_index) / self.sample_rate

    def energy(self) -> float:
        return float(np.sum(self.taps ** 2))


def decay_function(t, params: ShapingParams):
    """Exponential tail gain: 1 before ``t0``, then 10^(-3 (t - t0) / rd).

    Falls by 60 dB over ``rd`` seconds past the boundary; continuous at
    ``t0``. Accepts a scalar or an array of times.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    gain = np.ones_like(t_arr)
    late = t_arr >= params.t0
    gain[late] = 10.0 ** (-3.0 * (t_arr[late] - params.t0) / params.rd)
    return gain if np.ndim(t) else float(gain[0])


def attenuation_function(t, params: ShapingParams):
    """Raised-cosine step gain: 1 before ``t0``, ``alpha`` past ``t1``.

    Interpolates (1+a)/2 + (1-a)/2 * cos(pi (t - t0) / (t1 - t0)) in
    between; continuous at both boundaries and monotone nonincreasing.
    Accepts a scalar or an array of times.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    a = params.alpha
    gain = np.ones_like(t_arr)
    mid = (t_arr >= params.t0) & (t_arr <= params.t1)
    late = t_arr > params.t1
    gain[mid] = 0.5 * (1.0 + a) + 0.5 * (1.0 - a) * np.cos(
        np.pi * (t_arr[mid] - params.t0) / (params.t1 - params.t0))
    gain[late] = a
    return gain if np.ndim(t) else float(gain[0])


def shaping_gain(t, params: ShapingParams):
    """Combined per-tap gain of the strategy's curves at times ``t``."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    gain = np.ones_like(t_arr)
    if params.strategy.uses_decay:
        gain = gain * decay_function(t_arr, params)
    if params.strategy.uses_attenuation:
        gain = gain * attenuation_function(t_arr, params)
    return gain if np.ndim(t) else float(gain[0])


def shape_rir(h0: Rir, params: ShapingParams) -> Rir:
    """Multiply an impulse response, tap by tap, by its strategy's gain.

    Time zero sits at ``h0.direct_index``; taps before it pass through
    unshaped. Length, sample rate and direct index are preserved. The
    ``none`` strategy returns a bit-identical copy.
    """
    if params.strategy is Strategy.NONE:
        taps = h0.taps.copy()
    else:
        taps = h0.taps * shaping_gain(h0.times(), params)
    return Rir(taps, h0.sample_rate, h0.direct_index)


def dirac_rir(sample_rate: int = DEFAULT_SAMPLE_RATE) -> Rir:
    """A single unit tap at index 0: convolution identity, zero reverb."""
    return Rir(np.array([1.0]), sample_rate, 0)


def synth_rir(rt60: float, *, length: float | None = None, n_early: int = 6,
              direct_to_early_gap: float = 0.002, seed: int = 0,
              sample_rate: int = DEFAULT_SAMPLE_RATE, tail_level: float = 0.05,
              early_window: float = DEFAULT_T0) -> Rir:
    """Synthesize a stochastic impulse response with a known decay time.

    The model is a unit direct impulse at t = 0, ``n_early`` sparse
    reflections at seeded-random times between ``direct_to_early_gap``
    and ``early_window`` with amplitudes in [0.1, 0.7] (random sign),
    and a Gaussian tail with envelope tail_level * 10^(-3 t / rt60),
    whose energy decays by exactly 60 dB over ``rt60`` seconds. Output
    is bit-identical for a fixed seed.

    ``length`` defaults to max(1.5 * rt60, rt60 + 0.3) seconds, enough
    for the decay measurement to span its full fit range.
    """
    if not MIN_SYNTH_RT60 <= rt60 <= MAX_SYNTH_RT60:
        raise ParameterError(
            f"rt60 must lie in [{MIN_SYNTH_RT60}, {MAX_SYNTH_RT60}] s, got {rt60}")
    if length is None:
        length = max(1.5 * rt60, rt60 + 0.3)
    if length < rt60:
        raise ParameterError(f"length {length} s shorter than rt60 {rt60} s")
    if not 0.0 < tail_level <= 0.15:
        # keeps the direct tap the peak with overwhelming probability
        raise ParameterError(f"tail_level must lie in (0, 0.15], got {tail_level}")
    if n_early < 0:
        raise ParameterError("n_early must be nonnegative")
    if n_early > 0 and not 0.0 <= direct_to_early_gap < early_window:
        raise ParameterError("need 0 <= direct_to_early_gap < early_window")

    n = int(round(length * sample_rate))
    rng = np.random.default_rng(seed)
    t = np.arange(n) / sample_rate
    envelope = tail_level * 10.0 ** (-3.0 * t / rt60)
    taps = rng.standard_normal(n) * envelope
    taps[0] = 1.0
    for _ in range(n_early):
        when = rng.uniform(direct_to_early_gap, early_window)
        amplitude = rng.uniform(0.1, 0.7) * (1.0 if rng.random() < 0.5 else -1.0)
        taps[int(round(when * sample_rate))] += amplitude
    # the direct tap must stay the peak even when an early reflection rides
    # a tail excursion (possible at high tail levels)
    np.clip(taps[1:], -0.98, 0.98, out=taps[1:])
    return Rir(taps, sample_rate, 0)


def predicted_target_rt60(r0: float, rd: float) -> float:
    """Reverberation time after decay shaping: (1/r0 + 1/rd)^-1.

    Always below both ``r0`` and ``rd``; approaches ``rd`` for very
    reverberant rooms.
    """
    if r0 <= 0.0 or rd <= 0.0:
        raise ParameterError("r0 and rd must be positive")
    return 1.0 / (1.0 / r0 + 1.0 / rd)


def predicted_target_distance(d0: float, alpha: float) -> float:
    """Apparent microphone distance after attenuating the tail by ``alpha``.

    Under a free-field 1/d^2 intensity law the shaped response sounds
    as if recorded at alpha * d0.
    """
    if d0 <= 0.0:
        raise ParameterError(f"d0 must be positive, got {d0}")
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    return alpha * d0


# --- file interface: WAV taps plus a key=value metadata sidecar ---------------

def sidecar_path(path) -> str:
    return f"{path}.meta.txt"


def write_rir(rir: Rir, path, metadata: dict | None = None,
              encoding: str = "float32") -> None:
    """Write taps as mono WAV plus a sidecar with the direct index.

    ``metadata`` entries (nominal rt60, seed, shaping params, ...) are
    appended to the sidecar record.
    """
    wavio.write_wav(Signal(rir.taps, rir.sample_rate), path, encoding=encoding)
    record = {"direct_index": rir.direct_index, "sample_rate": rir.sample_rate}
    if metadata:
        record.update(metadata)
    kvtext.save_kv(record, sidecar_path(path))


def read_rir(path) -> Rir:
    """Read a WAV impulse response, using the sidecar's direct index if present.

    Without a sidecar the direct path is detected as the peak-magnitude tap.
    """
    signal = wavio.read_wav(path)
    direct_index = None
    try:
        record = kvtext.load_kv(sidecar_path(path))
        if "direct_index" in record:
            direct_index = int(record["direct_index"])
    except FileNotFoundError:
        pass
    if direct_index is None:
        direct_index = int(np.argmax(np.abs(signal.samples)))
    return Rir(signal.samples, signal.sample_rate, direct_index)
