"""Channel impairments: timing/frequency offset, fading, calibrated AWGN.

SNR is referenced to the 200 kHz noise bandwidth while sampling at
fs = 270.833 kHz, so the white-noise variance per complex sample carries an
fs/bw factor. Fading uses the COST-207 reduced typical-urban profile
collapsed onto the symbol grid (two taps) with a Jakes Doppler spectrum.
"""

from dataclasses import dataclass

import numpy as np

from . import params as P
from .signal_gen import StreamMeta, SymbolStream

C_LIGHT = 299792458.0

# COST-207 reduced TU, 6 taps: delay us / average power dB
_TU_DELAYS_US = np.array([0.0, 0.2, 0.5, 1.6, 2.3, 5.0])
_TU_POWERS_DB = np.array([-3.0, 0.0, -2.0, -6.0, -8.0, -10.0])

TU_SPEEDS_KMH = {"tu1_2": 1.2, "tu50": 50.0}


@dataclass
class ChannelConfig:
    """One trial's channel draw."""

    kind: str = "st"               # st | tu1_2 | tu50
    snr_db: float = float("inf")
    freq_offset_hz: float = 0.0
    time_offset_samples: int = 0
    band: str = "high"             # low (900 MHz) | high (2 GHz)

    @property
    def fc(self) -> float:
        return P.FC_LOW if self.band == "low" else P.FC_HIGH

    @property
    def doppler_hz(self) -> float:
        if self.kind == "st":
            return 0.0
        v = TU_SPEEDS_KMH[self.kind] / 3.6
        return v * self.fc / C_LIGHT


def isl_to_snr(isl_dbm: float, params: P.SystemParams = None) -> float:
    """Input signal level (dBm) -> SNR (dB) via thermal noise plus NF."""
    if params is None:
        params = P.SystemParams()
    noise_dbm = -174.0 + 10.0 * np.log10(params.bw) + params.nf_db
    return isl_dbm - noise_dbm


def noise_variance(snr_db: float, signal_power: float = 1.0) -> float:
    """Complex-noise variance per sample for an SNR in the 200 kHz band."""
    if np.isinf(snr_db):
        return 0.0
    return signal_power * (P.FS / P.BW) / 10.0 ** (snr_db / 10.0)


def awgn(n: int, sigma2: float, rng) -> np.ndarray:
    if sigma2 == 0.0:
        return np.zeros(n, dtype=np.complex128)
    scale = np.sqrt(sigma2 / 2.0)
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def symbol_spaced_tu_powers():
    """Collapse the 6-tap profile onto the symbol grid; unit total power."""
    delays_sym = _TU_DELAYS_US * 1e-6 * P.FS
    lin = 10.0 ** (_TU_POWERS_DB / 10.0)
    n_taps = int(np.round(delays_sym.max())) + 1
    powers = np.zeros(n_taps)
    for d, p in zip(delays_sym, lin):
        powers[int(np.round(d))] += p
    return powers / powers.sum()


def jakes_taps(n: int, f_d: float, rng, n_sinusoids: int = 24,
               grid: int = 50) -> np.ndarray:
    """One Rayleigh tap process via sum of sinusoids, unit average power.

    Evaluated on a coarse grid and linearly interpolated (the Doppler rates
    here are far below the grid Nyquist). grid=1 evaluates every sample.
    """
    alpha = rng.uniform(0.0, 2.0 * np.pi, n_sinusoids)
    phi = rng.uniform(0.0, 2.0 * np.pi, n_sinusoids)
    w = 2.0 * np.pi * f_d * np.cos(alpha) / P.FS
    if f_d == 0.0 or grid <= 1:
        t = np.arange(n)
        g = np.exp(1j * (np.outer(w, t) + phi[:, None])).sum(axis=0)
        return g / np.sqrt(n_sinusoids)
    tg = np.arange(0, n + grid, grid)
    g = np.exp(1j * (np.outer(w, tg) + phi[:, None])).sum(axis=0) / np.sqrt(n_sinusoids)
    t = np.arange(n)
    re = np.interp(t, tg, g.real)
    im = np.interp(t, tg, g.imag)
    return re + 1j * im


def _finish(samples: np.ndarray, stream: SymbolStream, cfg: ChannelConfig,
            rng) -> SymbolStream:
    n = len(samples)
    k = np.arange(n)
    phase = 2.0 * np.pi * cfg.freq_offset_hz / P.FS * k + rng.uniform(0.0, 2.0 * np.pi)
    y = samples * np.exp(1j * phase)
    y += awgn(n, noise_variance(cfg.snr_db), rng)
    meta = StreamMeta(
        n_mf=stream.meta.n_mf,
        tau=cfg.time_offset_samples,
        freq_offset_hz=cfg.freq_offset_hz,
        snr_db=cfg.snr_db,
        channel=cfg.kind,
        payloads=stream.meta.payloads,
    )
    return SymbolStream(y, meta)


def apply_static(stream: SymbolStream, cfg: ChannelConfig, rng) -> SymbolStream:
    """Static channel: time offset, frequency offset, random phase, AWGN."""
    if cfg.kind != "st":
        raise ValueError("apply_static requires kind='st'")
    tau = int(cfg.time_offset_samples)
    x = stream.samples[tau:]
    return _finish(x.copy(), stream, cfg, rng)


def apply_tu(stream: SymbolStream, cfg: ChannelConfig, rng) -> SymbolStream:
    """Typical-urban fading, then offset and AWGN as in the static channel."""
    if cfg.kind not in TU_SPEEDS_KMH:
        raise ValueError("apply_tu requires kind in {'tu1_2','tu50'}")
    tau = int(cfg.time_offset_samples)
    x = stream.samples[tau:]
    n = len(x)
    powers = symbol_spaced_tu_powers()
    y = np.zeros(n, dtype=np.complex128)
    for l, p in enumerate(powers):
        g = jakes_taps(n, cfg.doppler_hz, rng) * np.sqrt(p)
        if l == 0:
            y += g * x
        else:
            y[l:] += g[l:] * x[:-l]
    return _finish(y, stream, cfg, rng)


def apply_channel(stream: SymbolStream, cfg: ChannelConfig, rng) -> SymbolStream:
    if cfg.kind == "st":
        return apply_static(stream, cfg, rng)
    return apply_tu(stream, cfg, rng)
