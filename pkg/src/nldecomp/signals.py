"""Sampled signals, synthetic excitations, alignment and signal file formats.

Every signal is stored as complex128 baseband. Real-valued records are embedded
with zero imaginary parts, so downstream expectations can always be written as
``Re{E[a * conj(b)]}``.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import signal as sps

from .errors import (
    BadBandwidth,
    BadOrder,
    DegenerateSignal,
    LengthMismatch,
    NonFiniteSample,
    TooFewSamples,
)

__all__ = [
    "DomainTag",
    "ReferenceGrid",
    "SampledSignal",
    "AlignmentReport",
    "as_signal",
    "mean_power",
    "generate_filtered_noise",
    "generate_multicarrier",
    "qam_constellation",
    "align_and_normalize",
    "write_csv",
    "read_csv",
    "write_binary",
    "read_binary",
    "save_signal",
    "load_signal",
]

BINARY_MAGIC = b"NLDS"
BINARY_VERSION = 1
_HEADER = struct.Struct("<4sId")


class DomainTag(str, enum.Enum):
    REAL = "Real"
    COMPLEX_BASEBAND = "ComplexBaseband"


@dataclass(frozen=True, eq=False)
class ReferenceGrid:
    """Frequency-domain reference of a multicarrier frame.

    ``symbols[i]`` was placed on DFT bin ``bins[i]`` of an ``nfft``-point frame;
    ``fft(frame)[bins] == scale * symbols`` up to rounding.
    """

    bins: np.ndarray
    symbols: np.ndarray
    nfft: int
    scale: float
    constellation_order: int


@dataclass(frozen=True, eq=False)
class SampledSignal:
    samples: np.ndarray
    sample_rate_hz: float = 1.0
    domain_tag: DomainTag = DomainTag.COMPLEX_BASEBAND
    reference: Optional[ReferenceGrid] = field(default=None, repr=False)

    def __post_init__(self):
        s = np.array(self.samples, dtype=np.complex128).reshape(-1)
        if s.size < 1:
            raise ValueError("a signal needs at least one sample")
        if not np.all(np.isfinite(s)):
            raise NonFiniteSample("signal contains NaN or Inf samples")
        if not (np.isfinite(self.sample_rate_hz) and self.sample_rate_hz > 0):
            raise ValueError(f"sample rate must be positive, got {self.sample_rate_hz}")
        tag = DomainTag(self.domain_tag)
        if tag is DomainTag.REAL and np.any(s.imag != 0):
            raise ValueError("Real-tagged signal has non-zero imaginary parts")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "domain_tag", tag)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self):
        return self.samples.size

    @classmethod
    def real(cls, values, sample_rate_hz=1.0):
        return cls(np.asarray(values, dtype=np.float64), sample_rate_hz, DomainTag.REAL)

    def replace(self, samples, keep_reference=False) -> "SampledSignal":
        """New signal with the same rate; the tag degrades to complex if needed."""
        samples = np.asarray(samples, dtype=np.complex128)
        tag = self.domain_tag
        if tag is DomainTag.REAL and np.any(samples.imag != 0):
            tag = DomainTag.COMPLEX_BASEBAND
        return SampledSignal(
            samples, self.sample_rate_hz, tag, self.reference if keep_reference else None
        )

    def __getitem__(self, item):
        if not isinstance(item, slice):
            return self.samples[item]
        return self.replace(self.samples[item])


def as_signal(x, sample_rate_hz=1.0) -> SampledSignal:
    if isinstance(x, SampledSignal):
        return x
    arr = np.asarray(x)
    if np.isrealobj(arr):
        return SampledSignal.real(arr, sample_rate_hz)
    return SampledSignal(arr, sample_rate_hz)


def mean_power(sig) -> float:
    """(1/N) * sum |s[n]|^2."""
    s = sig.samples if isinstance(sig, SampledSignal) else np.asarray(sig, dtype=np.complex128)
    if not np.all(np.isfinite(s)):
        raise NonFiniteSample("signal contains NaN or Inf samples")
    return float(np.mean(s.real**2 + s.imag**2))


def _normalize_power(s):
    return s / np.sqrt(np.mean(np.abs(s) ** 2))


def generate_filtered_noise(seed, length, bandwidth_fraction=1.0, sample_rate_hz=1.0) -> SampledSignal:
    """Unit-power complex Gaussian noise, low-passed to a fraction of Nyquist.

    The filter is an ideal brickwall applied on the full-length DFT, so the
    passband is ``|f| < bandwidth_fraction * fs / 2``.
    """
    if not (0.0 < bandwidth_fraction <= 1.0):
        raise BadBandwidth(f"bandwidth_fraction must lie in (0, 1], got {bandwidth_fraction}")
    if length < 64:
        raise TooFewSamples(f"length must be >= 64, got {length}")
    rng = np.random.default_rng(seed)
    w = (rng.standard_normal(length) + 1j * rng.standard_normal(length)) / np.sqrt(2.0)
    if bandwidth_fraction < 1.0:
        spec = np.fft.fft(w)
        f = np.fft.fftfreq(length)
        spec[np.abs(f) >= bandwidth_fraction / 2.0] = 0.0
        w = np.fft.ifft(spec)
    return SampledSignal(_normalize_power(w), sample_rate_hz)


def qam_constellation(order) -> np.ndarray:
    """Square QAM alphabet with unit average energy."""
    if order not in (4, 16, 64):
        raise BadOrder(f"unsupported constellation order {order}; use 4, 16 or 64")
    m = int(round(np.sqrt(order)))
    levels = np.arange(-(m - 1), m, 2, dtype=np.float64)
    pts = (levels[:, None] + 1j * levels[None, :]).reshape(-1)
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


def generate_multicarrier(
    seed, length, active_fraction=0.25, constellation_order=64, sample_rate_hz=1.0
) -> SampledSignal:
    """OFDM-like frame: QAM symbols on the central bins of one ``length``-point IDFT.

    Active bins satisfy ``0 < |f| < active_fraction / 2`` (DC is left empty).
    The returned signal carries the reference grid for EVM measurement.
    """
    alphabet = qam_constellation(constellation_order)
    if not (0.0 < active_fraction < 1.0):
        raise BadBandwidth(f"active_fraction must lie in (0, 1), got {active_fraction}")
    if length < 64:
        raise TooFewSamples(f"length must be >= 64, got {length}")
    rng = np.random.default_rng(seed)
    f = np.fft.fftfreq(length)
    bins = np.flatnonzero((np.abs(f) < active_fraction / 2.0) & (f != 0))
    symbols = alphabet[rng.integers(0, alphabet.size, bins.size)]
    spec = np.zeros(length, dtype=np.complex128)
    spec[bins] = symbols
    frame = np.fft.ifft(spec)
    norm = np.sqrt(np.mean(np.abs(frame) ** 2))
    frame = frame / norm
    # fft(frame) = spec / norm
    ref = ReferenceGrid(bins, symbols, length, 1.0 / norm, constellation_order)
    return SampledSignal(frame, sample_rate_hz, DomainTag.COMPLEX_BASEBAND, ref)


@dataclass(frozen=True)
class AlignmentReport:
    delay_samples: int
    complex_gain: complex
    residual_mismatch: float
    gain_normalized: bool = True

    def to_dict(self):
        return {
            "delay_samples": int(self.delay_samples),
            "complex_gain": [float(np.real(self.complex_gain)), float(np.imag(self.complex_gain))],
            "residual_mismatch": float(self.residual_mismatch),
            "gain_normalized": bool(self.gain_normalized),
        }

    @classmethod
    def from_dict(cls, d):
        re, im = d["complex_gain"]
        return cls(int(d["delay_samples"]), complex(re, im), float(d["residual_mismatch"]),
                   bool(d.get("gain_normalized", True)))

    @classmethod
    def identity(cls, x, y):
        xs, ys = x.samples, y.samples
        return cls(0, 1 + 0j, _mismatch(xs, ys), gain_normalized=False)


def _mismatch(x, y_scaled):
    px = np.sum(np.abs(x) ** 2)
    if px == 0:
        return 0.0
    return float(np.sum(np.abs(x - y_scaled) ** 2) / px)


def _shift_pair(x, y, lag):
    """Common support after undoing a delay of ``lag`` samples on y."""
    n = x.size
    if lag >= 0:
        return x[: n - lag], y[lag:]
    return x[-lag:], y[: n + lag]


def align_and_normalize(x, y, max_lag=None, normalize_gain=True, min_length=256):
    """Integer-lag alignment of y onto x, then least-squares complex gain.

    Returns ``(x_common, y_aligned, report)``: both signals trimmed to the
    common support, with ``y_aligned = g * y[n + delay]`` and
    ``g = <x, y> / <y, y>`` so that ``||x - g*y||^2`` is minimal. A shift moves
    y toward x; the input power of x stays the reference.
    """
    x, y = as_signal(x), as_signal(y)
    if x.sample_rate_hz != y.sample_rate_hz:
        raise LengthMismatch("input and output sample rates differ")
    if len(x) != len(y):
        raise LengthMismatch(f"input has {len(x)} samples, output has {len(y)}")
    xs, ys = x.samples, y.samples
    if mean_power(xs) == 0 or mean_power(ys) == 0:
        raise DegenerateSignal("cannot align a zero-power signal")
    n = xs.size
    if max_lag is None:
        max_lag = min(n // 4, 4096)
    corr = sps.correlate(ys, xs, mode="full", method="fft")
    lags = sps.correlation_lags(ys.size, xs.size, mode="full")
    window = np.abs(lags) <= max_lag
    lag = int(lags[window][np.argmax(np.abs(corr[window]))])
    xc, yc = _shift_pair(xs, ys, lag)
    if xc.size < min_length:
        raise LengthMismatch(f"only {xc.size} samples remain after removing a lag of {lag}")
    if normalize_gain:
        gain = complex(np.vdot(yc, xc) / np.vdot(yc, yc))
    else:
        gain = 1 + 0j
    ya = gain * yc
    report = AlignmentReport(lag, gain, _mismatch(xc, ya), normalize_gain)
    return x.replace(xc), y.replace(ya), report


# --- file formats --------------------------------------------------------


def _pack_complex(re, im):
    # re + 1j * im would turn -0.0 imaginary parts into +0.0
    s = np.empty(re.size, dtype=np.complex128)
    s.real, s.imag = re, im
    return s


def write_csv(sig, path):
    sig = as_signal(sig)
    s = sig.samples
    with open(path, "w", newline="") as fh:
        fh.write("index,i,q\n")
        for k, (re, im) in enumerate(zip(s.real.tolist(), s.imag.tolist())):
            fh.write(f"{k},{re!r},{im!r}\n")


def read_csv(path, sample_rate_hz=1.0) -> SampledSignal:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "index,i,q":
            raise ValueError(f"unexpected CSV header {header!r}")
        data = np.loadtxt(fh, delimiter=",", dtype=np.float64, ndmin=2)
    idx = data[:, 0].astype(np.int64)
    if not np.array_equal(idx, np.arange(idx.size)):
        raise ValueError("CSV index column must count 0, 1, 2, ...")
    s = _pack_complex(data[:, 1], data[:, 2])
    tag = DomainTag.REAL if np.all(data[:, 2] == 0) else DomainTag.COMPLEX_BASEBAND
    return SampledSignal(s, sample_rate_hz, tag)


def write_binary(sig, path):
    sig = as_signal(sig)
    inter = np.empty(2 * len(sig), dtype="<f8")
    inter[0::2] = sig.samples.real
    inter[1::2] = sig.samples.imag
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(BINARY_MAGIC, BINARY_VERSION, sig.sample_rate_hz))
        fh.write(inter.tobytes())


def read_binary(path) -> SampledSignal:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("file too short for an NLDS header")
    magic, version, fs = _HEADER.unpack_from(raw)
    if magic != BINARY_MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != BINARY_VERSION:
        raise ValueError(f"unsupported NLDS version {version}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size % 2:
        raise ValueError("truncated sample payload")
    s = _pack_complex(body[0::2], body[1::2])
    tag = DomainTag.REAL if np.all(body[1::2] == 0) else DomainTag.COMPLEX_BASEBAND
    return SampledSignal(s, fs, tag)


def save_signal(sig, path: Union[str, Path]):
    """Dispatch on extension: ``.csv`` or anything else as NLDS binary."""
    if str(path).endswith(".csv"):
        write_csv(sig, path)
    else:
        write_binary(sig, path)


def load_signal(path: Union[str, Path], sample_rate_hz=1.0) -> SampledSignal:
    if str(path).endswith(".csv"):
        return read_csv(path, sample_rate_hz)
    return read_binary(path)
