"""System parameters, multiframe layout and modem constants.

Everything that both the transmitter and receiver sides have to agree on
lives here: sample rate, noise bandwidth, the 51-frame multiframe geometry,
burst layout, the CRC/convolutional-code generators and the extended
training sequence.
"""

from dataclasses import dataclass, field

import numpy as np

# Sample rate equals the GSM symbol rate (one sample per symbol).
FS = 13e6 / 48.0            # 270833.33.. Hz
BW = 200e3                  # receiver noise bandwidth, Hz
NF_DB = 5.0                 # reference noise figure, dB
R_PPM = 25.0                # max oscillator error, ppm

FC_LOW = 900e6              # low band carrier used in simulations
FC_HIGH = 2e9               # high band carrier used in simulations

# Multiframe geometry
FRAMES_PER_MF = 51
TS_PER_FRAME = 8
SYMBOLS_PER_TS = 156.25
SYMBOLS_PER_FRAME = 1250
SYMBOLS_PER_MF = FRAMES_PER_MF * SYMBOLS_PER_FRAME      # 63750
MF_DURATION_S = SYMBOLS_PER_MF / FS                     # ~235.4 ms

BURST_LEN = 148             # active symbols per burst
FB_FRAMES = (0, 10, 20, 30, 40)
SCH_FRAMES = (1, 11, 21, 31, 41)
ECSCH_FRAMES = (0, 1, 2, 3, 4, 5, 6)
ECSCH_TS = 1
ECSCH_REPS_PER_MF = len(ECSCH_FRAMES)
ECSCH_PERIOD_MFS = 4        # one payload is repeated over four multiframes

# Timeslot start offsets within a frame; the quarter symbol accumulates so
# per-frame totals stay integral (guards absorb the fraction).
TS_OFFSETS = tuple((625 * ts) // 4 for ts in range(TS_PER_FRAME))

# EC-SCH burst layout: 3 tail + 39 coded + 64 training + 39 coded + 3 tail
ECSCH_TAIL = 3
ECSCH_HALF = 39
TRAIN_LEN = 64
TRAIN_START = ECSCH_TAIL + ECSCH_HALF          # 42
TRAIN_END = TRAIN_START + TRAIN_LEN            # 106

# Channel coding
PAYLOAD_BITS = 25           # reduced frame number + identity surrogate
CRC_BITS = 10
CRC_POLY = 0x633            # x^10+x^9+x^5+x^4+x+1, MSB included
CONV_TAIL = 4
CODED_BITS = 2 * (PAYLOAD_BITS + CRC_BITS + CONV_TAIL)  # 78
CONV_G0 = (1, 0, 0, 1, 1)   # 1 + D^3 + D^4
CONV_G1 = (1, 1, 0, 1, 1)   # 1 + D + D^3 + D^4
CYCLIC_SHIFT_STEP = 20      # bit rotation per multiframe index (mod 4)

# GMSK
GMSK_BT = 0.3
GMSK_SPAN = 4               # phase pulse truncation, symbols each side

# MFD / FOE spectral analysis
MFD_WINDOW = 200
MFD_HOP = 50
WINDOWS_PER_MF = SYMBOLS_PER_MF // MFD_HOP      # 1275
FFT_LEN = 256
BIN_HZ = FS / FFT_LEN
FB_WINDOW_SPACING = (FB_FRAMES[1] - FB_FRAMES[0]) * SYMBOLS_PER_FRAME // MFD_HOP  # 250
MFD_MAX_MFS = 4
MFD_SPREAD_HZ = 1000.0      # empirical frequency-consistency threshold

# Fine timing search range around a candidate, symbols
TIMING_RANGE = 80

# 64-chip extended training sequence, +-1 in the derotated (chip) domain.
# Chosen for a low aperiodic autocorrelation (max sidelobe 8/64).
TRAIN_CHIPS = np.array([
    -1, -1, -1, -1, 1, 1, 1, -1, -1, 1, 1, -1, 1, 1, 1, -1,
    -1, 1, 1, -1, -1, 1, -1, 1, 1, -1, 1, 1, -1, 1, 1, 1,
    -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, 1, 1, 1, -1, -1, 1,
    -1, 1, 1, -1, -1, -1, -1, 1, -1, 1, 1, 1, 1, -1, -1, -1,
], dtype=np.float64)


@dataclass(frozen=True)
class SystemParams:
    """Radio-level constants shared by all modules."""

    fs: float = FS
    bw: float = BW
    nf_db: float = NF_DB
    fc: float = FC_HIGH
    r_ppm: float = R_PPM

    @property
    def f_o_max(self) -> float:
        """Maximum initial frequency offset, Hz."""
        return self.r_ppm * 1e-6 * self.fc


@dataclass(frozen=True)
class MultiframeLayout:
    """51-frame multiframe geometry; defaults match the BCCH carrier."""

    frames_per_mf: int = FRAMES_PER_MF
    ts_per_frame: int = TS_PER_FRAME
    symbols_per_ts: float = SYMBOLS_PER_TS
    symbols_per_frame: int = SYMBOLS_PER_FRAME
    symbols_per_mf: int = SYMBOLS_PER_MF
    fb_frames: tuple = FB_FRAMES
    sch_frames: tuple = SCH_FRAMES
    ecsch_frames: tuple = ECSCH_FRAMES

    def burst_start(self, frame: int, ts: int) -> int:
        """Sample index of the burst in (frame, ts) relative to the MF start."""
        return frame * self.symbols_per_frame + TS_OFFSETS[ts]

    def fb_starts(self) -> list:
        return [self.burst_start(f, 0) for f in self.fb_frames]

    def ecsch_starts(self) -> list:
        return [self.burst_start(f, ECSCH_TS) for f in self.ecsch_frames]


def params_for_band(band: str) -> SystemParams:
    """SystemParams for 'low' (900 MHz) or 'high' (2 GHz) band."""
    if band == "low":
        return SystemParams(fc=FC_LOW)
    if band == "high":
        return SystemParams(fc=FC_HIGH)
    raise ValueError(f"unknown band {band!r}")
