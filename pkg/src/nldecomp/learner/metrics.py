"""Signal-quality metrics: NMSE, EVM against a stored reference grid, and ACLR."""

from __future__ import annotations

import math

import numpy as np
from scipy import signal as sps

from .. import stats
from ..errors import DegenerateTarget, LengthMismatch, NoReference, TooShort
from ..signals import ReferenceGrid

__all__ = ["NMSE_FLOOR_DB", "EVM_FLOOR_DB", "nmse_db", "evm_db", "aclr_dbc", "welch_psd"]

NMSE_FLOOR_DB = -120.0
EVM_FLOOR_DB = -100.0
WELCH_SEGMENT = 1024
# Hann main-lobe half width in bins; keeps window leakage out of the adjacent band
ACLR_GUARD_BINS = 2
DEFAULT_SUBBAND = 64


def _samples(s):
    return np.asarray(getattr(s, "samples", s), dtype=np.complex128).reshape(-1)


def _db(ratio, floor):
    if ratio <= 0:
        return floor
    return max(floor, 10.0 * math.log10(ratio))


def nmse_db(pred, target) -> float:
    """10 log10(E|pred - target|^2 / E|target|^2), floored at -120 dB."""
    p, t = _samples(pred), _samples(target)
    if p.size != t.size:
        raise LengthMismatch(f"lengths {p.size} and {t.size} differ")
    pt = stats.power(t)
    if not pt > 0:
        raise DegenerateTarget("target has zero power")
    return _db(stats.power(p - t) / pt, NMSE_FLOOR_DB)


def evm_db(reference, received, subband=DEFAULT_SUBBAND) -> float:
    """RMS error vector over the active subcarriers relative to the reference, in dB.

    ``reference`` is a :class:`ReferenceGrid` or a signal carrying one. Each run
    of ``subband`` adjacent active subcarriers gets one least-squares complex
    tap before the error is measured; a tap per individual subcarrier would
    absorb any distortion and report a meaningless floor.
    """
    grid = reference if isinstance(reference, ReferenceGrid) else getattr(reference, "reference", None)
    if grid is None:
        raise NoReference("no reference grid; generate the frame with generate_multicarrier")
    r = _samples(received)
    if r.size != grid.nfft:
        raise LengthMismatch(f"received frame has {r.size} samples, reference expects {grid.nfft}")
    ref = grid.scale * np.asarray(grid.symbols)
    rx = np.fft.fft(r)[grid.bins]
    order = np.argsort(np.fft.fftfreq(grid.nfft)[grid.bins], kind="stable")
    err = 0.0
    for start in range(0, order.size, int(subband)):
        k = order[start : start + int(subband)]
        yk, sk = rx[k], ref[k]
        den = np.vdot(yk, yk)
        w = np.vdot(yk, sk) / den if abs(den) > 0 else 0.0
        e = w * yk - sk
        err += float(np.vdot(e, e).real)
    return _db(err / float(np.vdot(ref, ref).real), EVM_FLOOR_DB)


def welch_psd(sig, nperseg=WELCH_SEGMENT):
    """Two-sided Hann-window Welch estimate with 50% overlap, frequencies ascending."""
    x = _samples(sig)
    f, p = sps.welch(x, fs=1.0, window="hann", nperseg=nperseg, noverlap=nperseg // 2,
                     return_onesided=False, detrend=False, scaling="density")
    idx = np.argsort(f)
    return f[idx], p[idx]


def aclr_dbc(sig, channel_bw_fraction, nperseg=WELCH_SEGMENT) -> float:
    """Upper adjacent-channel power over in-channel power, in dBc.

    The channel is ``|f| < bw/2`` (cycles per sample). The adjacent band has
    the same width and starts ``ACLR_GUARD_BINS`` Welch bins above the channel
    edge; it is truncated at the Nyquist edge rather than wrapped.
    """
    x = _samples(sig)
    if x.size < 4 * nperseg:
        raise TooShort(f"ACLR needs at least {4 * nperseg} samples, got {x.size}")
    bw = float(channel_bw_fraction)
    if not 0 < bw < 1:
        raise ValueError("channel_bw_fraction must lie in (0, 1)")
    f, p = welch_psd(x, nperseg)
    lo = bw / 2 + ACLR_GUARD_BINS / nperseg
    hi = min(lo + bw, 0.5)
    inband = float(p[np.abs(f) < bw / 2].sum())
    adj = float(p[(f >= lo) & (f < hi)].sum())
    if not inband > 0:
        raise DegenerateTarget("no in-channel power")
    return _db(adj / inband, -300.0)
