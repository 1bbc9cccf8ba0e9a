"""Transmit-side generation of the BCCH-carrier multiframe.

Produces frequency bursts (pure tones at fs/4), EC-SCH coded bursts,
legacy-SCH placeholders and GMSK filler bursts, assembled into a stream of
one complex sample per symbol with guard-period amplitude ramps.
"""

from dataclasses import dataclass, field

import numpy as np

from . import params as P
from .coding import encode_payload
from .modulation import bits_from_chips, chips_from_bits, gmsk_modulate


@dataclass
class Burst:
    """One burst: 148 active symbols plus metadata."""

    kind: str                      # FB | SCH | ECSCH | FILLER
    symbols: np.ndarray
    train_start: int = -1


@dataclass
class StreamMeta:
    """Ground truth carried alongside a stream, for scoring only.

    Receiver-side modules must never read this; the harness uses it to score
    trial outcomes.
    """

    n_mf: int = 0
    tau: int = 0                       # tx index of receiver sample 0
    freq_offset_hz: float = 0.0
    snr_db: float = float("inf")
    channel: str = "none"
    payloads: dict = field(default_factory=dict)   # period index -> 25 bits

    @property
    def mf_start_mod(self) -> int:
        """Receiver-clock sample index (mod one MF) where multiframes start."""
        return (P.SYMBOLS_PER_MF - self.tau % P.SYMBOLS_PER_MF) % P.SYMBOLS_PER_MF

    def payload_for_period(self, period: int):
        return self.payloads.get(period)


@dataclass
class SymbolStream:
    """Complex baseband samples at 1 sample/symbol plus ground-truth meta."""

    samples: np.ndarray
    meta: StreamMeta = field(default_factory=StreamMeta)

    def __len__(self):
        return len(self.samples)


def gen_fb_burst(rng=None, phi0: float = None) -> Burst:
    """Frequency burst: pure complex exponential at +fs/4, random phase."""
    if phi0 is None:
        phi0 = 2.0 * np.pi * rng.random() if rng is not None else 0.0
    k = np.arange(P.BURST_LEN)
    return Burst("FB", np.exp(1j * (0.5 * np.pi * k + phi0)))


def ecsch_burst_chips(coded: np.ndarray) -> np.ndarray:
    """Chip layout of an EC-SCH burst: tails, data half, training, data half."""
    chips = np.empty(P.BURST_LEN)
    chips[:P.ECSCH_TAIL] = 1.0
    left = chips_from_bits(coded[:P.ECSCH_HALF])
    chips[P.ECSCH_TAIL:P.TRAIN_START] = left
    chips[P.TRAIN_START:P.TRAIN_END] = P.TRAIN_CHIPS
    right = chips_from_bits(coded[P.ECSCH_HALF:])
    chips[P.TRAIN_END:P.TRAIN_END + P.ECSCH_HALF] = P.TRAIN_CHIPS[-1] * right
    chips[P.TRAIN_END + P.ECSCH_HALF:] = chips[P.TRAIN_END + P.ECSCH_HALF - 1]
    return chips


def gen_ecsch_burst(payload: np.ndarray, mf_index: int) -> Burst:
    """Deterministic EC-SCH burst for a payload and cyclic-shift index."""
    coded = encode_payload(payload, mf_index)
    chips = ecsch_burst_chips(coded)
    bits = bits_from_chips(chips)
    return Burst("ECSCH", gmsk_modulate(bits), train_start=P.TRAIN_START)


def gen_filler_burst(rng, kind: str = "FILLER") -> Burst:
    """GMSK burst of random bits (filler or legacy-SCH placeholder)."""
    bits = rng.integers(0, 2, P.BURST_LEN)
    return Burst(kind, gmsk_modulate(bits))


def random_payload(rng) -> np.ndarray:
    return rng.integers(0, 2, P.PAYLOAD_BITS).astype(np.uint8)


def payload_schedule(identity_bits: np.ndarray, base_counter: int):
    """Payload generator: fixed 6-bit identity plus a 19-bit period counter."""
    identity_bits = np.asarray(identity_bits, dtype=np.uint8)

    def payload(period: int) -> np.ndarray:
        ctr = (base_counter + period) % (1 << 19)
        ctr_bits = np.array([(ctr >> (18 - i)) & 1 for i in range(19)], dtype=np.uint8)
        return np.concatenate([identity_bits, ctr_bits])

    return payload


_RAMP_LEN = 4
_RAMP_DOWN = np.linspace(1.0, 0.0, _RAMP_LEN + 2)[1:-1]


def _place_burst(out: np.ndarray, start: int, symbols: np.ndarray):
    """Write a burst plus short guard ramps; never overrun the buffer."""
    n = len(out)
    out[start:start + P.BURST_LEN] = symbols
    # trailing ramp continues the last sample's phase
    tail = symbols[-1] * _RAMP_DOWN
    hi = min(start + P.BURST_LEN + _RAMP_LEN, n)
    out[start + P.BURST_LEN:hi] = tail[:hi - start - P.BURST_LEN]
    head = symbols[0] * _RAMP_DOWN[::-1]
    lo = max(start - _RAMP_LEN, 0)
    out[lo:start] = head[_RAMP_LEN - (start - lo):]


def build_multiframe_stream(n_mf: int, rng, payload_fn=None,
                            first_mf_index: int = 0) -> SymbolStream:
    """Assemble n_mf multiframes of the BCCH carrier.

    FB bursts on TS0 of frames 0,10,..,40; EC-SCH on TS1 of frames 0..6 with
    the cyclic shift of the absolute MF index mod 4; all remaining timeslots
    carry GMSK fillers. Every burst gets an independent random carrier phase
    (no inter-burst phase coherency).
    """
    if n_mf < 1:
        raise ValueError("n_mf must be >= 1")
    if payload_fn is None:
        payload_fn = payload_schedule(random_payload(rng)[:6],
                                      int(rng.integers(0, 1 << 19)))
    out = np.zeros(n_mf * P.SYMBOLS_PER_MF, dtype=np.complex128)
    meta = StreamMeta(n_mf=n_mf)
    layout = P.MultiframeLayout()

    ecsch_cache = {}
    filler_slots = []
    for m in range(n_mf):
        mf_abs = first_mf_index + m
        base = m * P.SYMBOLS_PER_MF
        period = mf_abs // P.ECSCH_PERIOD_MFS
        shift = mf_abs % P.ECSCH_PERIOD_MFS
        if period not in meta.payloads:
            meta.payloads[period] = payload_fn(period)
        key = (period, shift)
        if key not in ecsch_cache:
            ecsch_cache[key] = gen_ecsch_burst(meta.payloads[period], shift).symbols
        for fr in range(P.FRAMES_PER_MF):
            for ts in range(P.TS_PER_FRAME):
                start = base + layout.burst_start(fr, ts)
                if ts == 0 and fr in P.FB_FRAMES:
                    _place_burst(out, start, gen_fb_burst(rng).symbols)
                elif ts == P.ECSCH_TS and fr in P.ECSCH_FRAMES:
                    phase = np.exp(2j * np.pi * rng.random())
                    _place_burst(out, start, ecsch_cache[key] * phase)
                else:
                    filler_slots.append(start)
    # batch-modulate all filler bursts at once
    if filler_slots:
        bits = rng.integers(0, 2, (len(filler_slots), P.BURST_LEN))
        bursts = gmsk_modulate(bits)
        phases = np.exp(2j * np.pi * rng.random(len(filler_slots)))
        for start, burst, ph in zip(filler_slots, bursts, phases):
            _place_burst(out, start, burst * ph)
    return SymbolStream(out, meta)


def write_iq(path, samples: np.ndarray):
    """Export as interleaved float32 I/Q for external inspection."""
    arr = np.asarray(samples, dtype=np.complex64)
    inter = np.empty(2 * len(arr), dtype=np.float32)
    inter[0::2] = arr.real
    inter[1::2] = arr.imag
    inter.tofile(path)


def read_iq(path) -> np.ndarray:
    raw = np.fromfile(path, dtype=np.float32)
    if len(raw) % 2:
        raw = raw[:-1]
    return raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64)
