"""GMSK modulation at one sample per symbol and the chip-domain mapping.

The receiver works on derotated samples: after removing the pi/2-per-symbol
rotation, a GMSK waveform looks like a +-1 chip sequence through a short
complex partial-response filter. Chips are the cumulative product of the
NRZ-mapped bits, so any +-1 sequence is a valid chip sequence and bits are
recovered by differential decoding of the chips.
"""

import numpy as np
from scipy.special import erfc

from .params import GMSK_BT, GMSK_SPAN


def _qfunc(x):
    return 0.5 * erfc(x / np.sqrt(2.0))


def _q_antideriv(x):
    # integral of the Gaussian tail function: x*Q(x) - pdf(x)
    return x * _qfunc(x) - np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)


def gmsk_phase_pulse(t, bt: float = GMSK_BT):
    """Integrated GMSK frequency pulse q(t): 0 at -inf, 1/2 at +inf (T=1)."""
    a = 2.0 * np.pi * bt / np.sqrt(np.log(2.0))
    t = np.asarray(t, dtype=np.float64)
    return 0.5 + 0.5 / a * (_q_antideriv(a * (t - 0.5)) - _q_antideriv(a * (t + 0.5)))


def _phase_increments(span: int = GMSK_SPAN) -> np.ndarray:
    # per-sample phase contribution of one symbol, sampled at chip centers
    m = np.arange(-span, span + 1, dtype=np.float64)
    return np.pi * (gmsk_phase_pulse(m + 0.5) - gmsk_phase_pulse(m - 0.5))


_PULSE = _phase_increments()


def gmsk_modulate(bits: np.ndarray, phi0: float = 0.0) -> np.ndarray:
    """GMSK-modulate a bit array -> unit-envelope complex samples, 1/symbol.

    Accepts a (n,) bit vector or a (B, n) batch. BT = 0.3, modulation
    index 1/2; an all-zero input produces a +pi/2 per symbol phase ramp.
    """
    bits = np.asarray(bits)
    single = bits.ndim == 1
    d = 1.0 - 2.0 * np.atleast_2d(bits).astype(np.float64)
    B, n = d.shape
    span = GMSK_SPAN
    dphi = np.zeros((B, n + 2 * span))
    for i, pm in enumerate(_PULSE):
        dphi[:, i:i + n] += pm * d
    phi = np.cumsum(dphi[:, span:span + n], axis=1) + phi0
    out = np.exp(1j * phi)
    return out[0] if single else out


def derotate(samples: np.ndarray, start_index: int = 0) -> np.ndarray:
    """Remove the pi/2-per-symbol rotation; start_index fixes the phase grid."""
    n = np.arange(len(samples)) + start_index
    return samples * np.exp(-0.5j * np.pi * n)


def chips_from_bits(bits: np.ndarray) -> np.ndarray:
    """Chip sequence (+-1) of a bit vector: cumulative product of NRZ bits."""
    d = 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)
    return np.cumprod(d)


def bits_from_chips(chips: np.ndarray, prev: float = 1.0) -> np.ndarray:
    """Differential decode of a +-1 chip sequence back to bits."""
    c = np.concatenate([[prev], np.asarray(chips, dtype=np.float64)])
    trans = c[1:] * c[:-1]
    return ((1.0 - trans) / 2.0).astype(np.uint8)
