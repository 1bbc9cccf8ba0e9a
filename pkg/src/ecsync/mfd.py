"""Spectrum-based multiframe boundary detection.

The stream is processed in 200-symbol windows offset by 50 symbols; each
window's 256-point power spectrum is accumulated per ring position across
multiframes (re-using the frequency-estimation machinery), the per-window
peak amplitude forms the frequency-burst correlation C_FB, and the
multiframe correlation accumulates the five FB positions (period 250
windows). A detection is declared when the stored frequencies of the five
contributing windows agree within 1 kHz; after four multiframes the most
likely candidate is emitted regardless.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import params as P
from .freqest import band_bins, interp3, interp_constants


@dataclass
class WindowRecord:
    """Per-window measurement: peak amplitude and the two strongest tones."""

    c_fb: float
    f1: float
    f2: float


@dataclass
class MfdResult:
    candidates: list                 # 3 MF-start sample indices, mod one MF
    coarse_fo_hz: float
    windows_used: int
    mfs_used: int
    hit: bool
    spread_hz: float


# all 2^5 ways of picking one of the two stored frequencies per FB position
_SELECT = np.array([[(m >> i) & 1 for i in range(5)] for m in range(32)])


def mf_correlate(c_fb: np.ndarray) -> np.ndarray:
    """Multiframe correlation: sum the five FB correlations per start window."""
    c_fb = np.asarray(c_fb)
    if c_fb.shape != (P.WINDOWS_PER_MF,):
        raise ValueError(f"expected a full ring of {P.WINDOWS_PER_MF} values")
    idx = np.arange(P.WINDOWS_PER_MF)
    out = np.zeros(P.WINDOWS_PER_MF, dtype=c_fb.dtype)
    for i in range(5):
        out += c_fb[(idx + P.FB_WINDOW_SPACING * i) % P.WINDOWS_PER_MF]
    return out


def _top2_refine(pw: np.ndarray, band: np.ndarray, u: float, v: float):
    """Per-row peak amplitude and two interp-refined component frequencies.

    pw: (W, 256) accumulated power spectra. Returns (c_fb, f1, f2).
    """
    sub = pw[:, band]
    rows = np.arange(pw.shape[0])
    i1 = np.argmax(sub, axis=1)
    b1 = band[i1]
    peak_pow = sub[rows, i1]
    c_fb = np.sqrt(peak_pow)
    f1 = _refine_bins(pw, b1, u, v)
    # second strongest, excluding the peak and its direct neighbours
    masked = sub.copy()
    for d in (-1, 0, 1):
        j = i1 + d
        ok = (j >= 0) & (j < len(band))
        masked[rows[ok], j[ok]] = -1.0
    i2 = np.argmax(masked, axis=1)
    f2 = _refine_bins(pw, band[i2], u, v)
    return c_fb, f1, f2


def _refine_bins(pw: np.ndarray, bins: np.ndarray, u: float, v: float) -> np.ndarray:
    rows = np.arange(pw.shape[0])
    ym = pw[rows, bins - 1]
    y0 = pw[rows, bins]
    yp = pw[rows, (bins + 1) % P.FFT_LEN]
    den = u * (yp + ym) + v * y0
    with np.errstate(divide="ignore", invalid="ignore"):
        fa = np.where(den > 0.0, 2.0 * np.pi * (yp - ym) / np.where(den == 0.0, 1.0, den), 0.0)
    corr = np.clip(fa * P.FS / (2.0 * np.pi), -P.BIN_HZ / 2.0, P.BIN_HZ / 2.0)
    return bins * P.BIN_HZ + corr


def process_window(samples: np.ndarray, f_o_max: float) -> WindowRecord:
    """Single-window measurement (the streaming path batches this)."""
    samples = np.asarray(samples)
    if samples.shape != (P.MFD_WINDOW,):
        raise ValueError(f"expected {P.MFD_WINDOW} samples")
    pw = np.abs(np.fft.fft(samples, P.FFT_LEN)) ** 2
    band = band_bins(f_o_max)
    u, v = interp_constants(P.BURST_LEN, P.FFT_LEN)
    c_fb, f1, f2 = _top2_refine(pw[None, :], band, u, v)
    return WindowRecord(float(c_fb[0]), float(f1[0]), float(f2[0]))


@dataclass
class MfdState:
    """Streaming detector state: one multiframe ring of accumulated spectra."""

    f_o_max: float
    max_mfs: int = P.MFD_MAX_MFS
    spread_hz: float = P.MFD_SPREAD_HZ
    spec_acc: np.ndarray = None       # (1275, 256) accumulated window spectra
    c_fb: np.ndarray = None           # ring of peak amplitudes
    c_mf_acc: np.ndarray = None       # multiframe correlation
    f1: np.ndarray = None
    f2: np.ndarray = None
    mf_searched: int = 0

    def __post_init__(self):
        self.spec_acc = np.zeros((P.WINDOWS_PER_MF, P.FFT_LEN))
        self.c_fb = np.zeros(P.WINDOWS_PER_MF)
        self.c_mf_acc = np.zeros(P.WINDOWS_PER_MF)
        self.f1 = np.zeros(P.WINDOWS_PER_MF)
        self.f2 = np.zeros(P.WINDOWS_PER_MF)
        self._band = band_bins(self.f_o_max)
        self._uv = interp_constants(P.BURST_LEN, P.FFT_LEN)

    def record(self, pos: int) -> WindowRecord:
        return WindowRecord(float(self.c_fb[pos]), float(self.f1[pos]), float(self.f2[pos]))


MF_SEGMENT_LEN = P.SYMBOLS_PER_MF + P.MFD_WINDOW - P.MFD_HOP


def mfd_step(state: MfdState, mf_samples: np.ndarray):
    """Ingest one multiframe of samples and decide.

    mf_samples must cover one multiframe plus a 150-sample tail so the last
    window is complete. Returns (status, result) with status in
    {"hit", "continue", "timeout"}; result is None only for "continue".
    """
    mf_samples = np.asarray(mf_samples)
    if len(mf_samples) < MF_SEGMENT_LEN:
        raise ValueError(f"need {MF_SEGMENT_LEN} samples per step")
    wins = sliding_window_view(mf_samples, P.MFD_WINDOW)[::P.MFD_HOP][:P.WINDOWS_PER_MF]
    pw = np.abs(np.fft.fft(wins.astype(np.complex64), P.FFT_LEN, axis=1)).astype(np.float64) ** 2
    state.spec_acc += pw
    u, v = state._uv
    state.c_fb, state.f1, state.f2 = _top2_refine(state.spec_acc, state._band, u, v)
    state.c_mf_acc = mf_correlate(state.c_fb)
    state.mf_searched += 1

    n_star = int(np.argmax(state.c_mf_acc))
    pos = (n_star + P.FB_WINDOW_SPACING * np.arange(5)) % P.WINDOWS_PER_MF
    pairs = np.stack([state.f1[pos], state.f2[pos]], axis=1)      # (5, 2)
    chosen = pairs[np.arange(5), _SELECT]                          # (32, 5)
    spreads = chosen.max(axis=1) - chosen.min(axis=1)
    best = int(np.argmin(spreads))
    spread = float(spreads[best])
    coarse = float(np.mean(chosen[best]) - P.FS / 4.0)

    est = (n_star * P.MFD_HOP) % P.SYMBOLS_PER_MF
    half = 10 * P.SYMBOLS_PER_FRAME
    result = MfdResult(
        candidates=[est, (est - half) % P.SYMBOLS_PER_MF, (est + half) % P.SYMBOLS_PER_MF],
        coarse_fo_hz=coarse,
        windows_used=state.mf_searched * P.WINDOWS_PER_MF,
        mfs_used=state.mf_searched,
        hit=spread < state.spread_hz,
        spread_hz=spread,
    )
    if result.hit:
        return "hit", result
    if state.mf_searched >= state.max_mfs:
        return "timeout", result
    return "continue", None


def dump_correlation(state: MfdState, path):
    """Write the C_FB and C_MF rings as CSV (debug / figure reproduction)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["window", "c_fb", "c_mf"])
        for i in range(P.WINDOWS_PER_MF):
            w.writerow([i, f"{state.c_fb[i]:.10g}", f"{state.c_mf_acc[i]:.10g}"])
