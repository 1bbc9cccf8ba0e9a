"""EC-SCH soft demodulation, chase combining and blind decoding.

Each received burst is derotated, a 5-tap least-squares channel estimate is
taken over the 64-chip training section, and a 16-state max-log soft-output
equalizer produces 78 coded-bit LLRs in burst order. LLRs are chase-combined
under the four cyclic-shift hypotheses; decoding attempts run the soft
Viterbi decoder plus CRC on all four buffers, only at the schedule points
(after 7N repetitions, N >= 4) to keep CRC false positives rare.
"""

from dataclasses import dataclass, field

import numpy as np

from . import params as P
from .coding import crc10_check, cyclic_shift_invert, viterbi_decode_batch
from .modulation import derotate

_NEG = -1e30

# ---------------------------------------------------------------------------
# chip trellis tables: state = last four chips, newest in bit 0;
# combo index = state*2 + new_chip_bit  (chip bit 0 -> +1, 1 -> -1)
_N_STATES = 16


def _chip(bit):
    return 1.0 - 2.0 * bit


def _build_tables():
    combo_state = np.arange(32) >> 1
    combo_new = np.arange(32) & 1
    dest = ((combo_state << 1) & 0xF) | combo_new
    chips = np.zeros((32, 5))
    trans_bit = np.zeros(32, dtype=np.int64)
    for c in range(32):
        s, inew = c >> 1, c & 1
        i0, i1, i2, i3 = s & 1, (s >> 1) & 1, (s >> 2) & 1, (s >> 3) & 1
        chips[c] = [_chip(inew), _chip(i0), _chip(i1), _chip(i2), _chip(i3)]
        trans_bit[c] = inew ^ i0
    dest_group = np.stack([np.nonzero(dest == s)[0] for s in range(_N_STATES)])
    copy_mask = combo_new == (combo_state & 1)      # new chip equals newest chip
    return combo_state, combo_new, dest, chips, trans_bit, dest_group, copy_mask


(_COMBO_STATE, _COMBO_NEW, _DEST, _COMBO_CHIPS, _TRANS_BIT,
 _DEST_GROUP, _COPY_MASK) = _build_tables()

_BIT0_MASK = _TRANS_BIT == 0
_BIT1_MASK = _TRANS_BIT == 1


def _state_from_chips(c4):
    """State index of four chips (oldest first)."""
    bits = [0 if v > 0 else 1 for v in c4]
    return (bits[0] << 3) | (bits[1] << 2) | (bits[2] << 1) | bits[3]


# Training-section least-squares channel estimator. The 5-tap window is
# centred on the current chip (delay -2..+2): GMSK's partial response is
# symmetric, so an anti-causal half is required; physical delay spread
# occupies the causal half.
_N_TAPS = 5
_TAP_CENTER = 2
_LS_ROWS = P.TRAIN_LEN - (_N_TAPS - 1)      # 60


def _build_ls():
    a = np.zeros((_LS_ROWS, _N_TAPS))
    for r in range(_LS_ROWS):
        for l in range(_N_TAPS):
            # row r observes sample TRAIN_START+2+r, tap l sees chip (+2-l)
            a[r, l] = P.TRAIN_CHIPS[r + _N_TAPS - 1 - l]
    return a, np.linalg.pinv(a)


_LS_A, _LS_PINV = _build_ls()
_OBS_START = P.TRAIN_START + _TAP_CENTER    # 44: first fully-supported sample


def estimate_channel(der_burst: np.ndarray):
    """LS channel estimate and noise variance from the training section.

    der_burst: (B, 148) derotated burst samples. Returns (h (B,5),
    sigma2 (B,)); h[l] multiplies the chip at relative delay +2-l.
    """
    obs = der_burst[:, _OBS_START:_OBS_START + _LS_ROWS]   # (B, 60)
    h = obs @ _LS_PINV.T.astype(np.complex128)             # (B, 5)
    resid = obs - h @ _LS_A.T.astype(np.complex128)
    sigma2 = np.mean(np.abs(resid) ** 2, axis=1)
    return h, np.maximum(sigma2, 1e-9)


@dataclass
class _Segment:
    """Precomputed step layout of one equalizer run."""

    meas: np.ndarray        # bool per step: measurement available
    mode: list              # per step: ("free",) | ("pin", chipbit) | ("copy",)
    data: np.ndarray        # bool per step: emit an LLR
    init_state: int


def _left_segment():
    # chip times 3..45; chips 3..41 are data, 42..45 pinned to the training
    steps = []
    for k in range(3, 46):
        if k < 42:
            steps.append(("free",))
        else:
            steps.append(("pin", 0 if P.TRAIN_CHIPS[k - 42] > 0 else 1))
    meas = np.array([k >= 4 for k in range(3, 46)])
    data = np.array([k <= 41 for k in range(3, 46)])
    return _Segment(meas, steps, data, init_state=0)


def _right_segment():
    # chip times 106..147; 106..144 data, 145..147 copy the previous chip
    steps = []
    for k in range(106, 148):
        steps.append(("free",) if k <= 144 else ("copy",))
    meas = np.ones(42, dtype=bool)
    data = np.array([k <= 144 for k in range(106, 148)])
    init = _state_from_chips(P.TRAIN_CHIPS[-4:])
    return _Segment(meas, steps, data, init_state=init)


_LEFT = _left_segment()
_RIGHT = _right_segment()


def _run_equalizer(r_seg: np.ndarray, ys: np.ndarray, inv_s2: np.ndarray,
                   seg: _Segment) -> np.ndarray:
    """Batched max-log BCJR over one burst segment -> (B, n_data) LLRs."""
    B, T = r_seg.shape
    gam = np.zeros((B, T, 32))
    diffs = r_seg[:, :, None] - ys[:, None, :]
    g_all = -(diffs.real ** 2 + diffs.imag ** 2) * inv_s2[:, None, None]
    gam[:, seg.meas, :] = g_all[:, seg.meas, :]
    masks = np.ones((T, 32), dtype=bool)
    for t, mode in enumerate(seg.mode):
        if mode[0] == "pin":
            masks[t] = _COMBO_NEW == mode[1]
        elif mode[0] == "copy":
            masks[t] = _COPY_MASK
    gam = np.where(masks[None, :, :], gam, _NEG)

    alphas = np.full((B, T + 1, _N_STATES), _NEG)
    alphas[:, 0, seg.init_state] = 0.0
    for t in range(T):
        cand = alphas[:, t, :][:, _COMBO_STATE] + gam[:, t]
        alphas[:, t + 1] = np.max(cand[:, _DEST_GROUP], axis=2)
    betas = np.zeros((B, _N_STATES))
    llrs = np.empty((B, int(seg.data.sum())))
    out_idx = int(seg.data.sum()) - 1
    for t in range(T - 1, -1, -1):
        tot_beta = gam[:, t] + betas[:, _DEST]
        if seg.data[t]:
            tot = alphas[:, t, :][:, _COMBO_STATE] + tot_beta
            llrs[:, out_idx] = (np.max(tot[:, _BIT0_MASK], axis=1)
                                - np.max(tot[:, _BIT1_MASK], axis=1))
            out_idx -= 1
        betas = np.max(tot_beta.reshape(B, _N_STATES, 2), axis=2)
    return llrs


def soft_demod_batch(stream: np.ndarray, burst_starts) -> np.ndarray:
    """Demodulate several bursts -> (B, 78) coded-bit LLRs in burst order."""
    starts = np.asarray(burst_starts, dtype=np.int64)
    if starts.min() < 0 or starts.max() + P.BURST_LEN > len(stream):
        raise ValueError("burst region outside the stream")
    idx = starts[:, None] + np.arange(P.BURST_LEN)[None, :]
    rot = np.exp(-0.5j * np.pi * (idx % 4))
    der = stream[idx] * rot
    h, sigma2 = estimate_channel(der)
    ys = h @ _COMBO_CHIPS.T.astype(np.complex128)        # (B, 32)
    inv_s2 = 1.0 / sigma2
    left = _run_equalizer(der[:, 3:46], ys, inv_s2, _LEFT)
    right = _run_equalizer(der[:, 106:148], ys, inv_s2, _RIGHT)
    return np.concatenate([left, right], axis=1)


def soft_demod(stream: np.ndarray, burst_start: int) -> np.ndarray:
    """Single-burst convenience wrapper -> 78 LLRs."""
    return soft_demod_batch(stream, [burst_start])[0]


# ---------------------------------------------------------------------------
# chase combining and blind decoding


@dataclass
class LlrBuffer:
    llrs: np.ndarray
    reps: int
    shift_hypothesis: int


class ChaseCombiner:
    """Four accumulation buffers, one per cyclic-shift hypothesis."""

    def __init__(self):
        self.llrs = np.zeros((P.ECSCH_PERIOD_MFS, P.CODED_BITS))
        self.reps = 0

    def add(self, new_llrs: np.ndarray, rep_mf_rel: int):
        """Combine one repetition received in relative multiframe rep_mf_rel."""
        new_llrs = np.asarray(new_llrs)
        if new_llrs.shape != (P.CODED_BITS,):
            raise ValueError("expected 78 LLRs")
        for h in range(P.ECSCH_PERIOD_MFS):
            shift = (h + rep_mf_rel) % P.ECSCH_PERIOD_MFS
            self.llrs[h] += cyclic_shift_invert(new_llrs, shift)
        self.reps += 1

    def buffer(self, hypothesis: int) -> LlrBuffer:
        return LlrBuffer(self.llrs[hypothesis].copy(), self.reps, hypothesis)


def chase_combine(combiner: ChaseCombiner, new_llrs: np.ndarray,
                  rep_mf_rel: int) -> ChaseCombiner:
    combiner.add(new_llrs, rep_mf_rel)
    return combiner


def attempt_schedule(reps_seen: int) -> bool:
    """Decoding attempts run after 7N repetitions, N >= 4."""
    return reps_seen >= 28 and reps_seen % P.ECSCH_REPS_PER_MF == 0


@dataclass
class DecodeResult:
    status: str                 # Success | CrcFail
    payload: np.ndarray = None
    reps_used: int = 0
    shift_chosen: int = -1
    metric: float = float("-inf")


def decode_pipeline(combiner: ChaseCombiner) -> DecodeResult:
    """Blind decoding of all four cyclic-shift hypotheses.

    Any CRC pass is a success; with several passes the best Viterbi path
    metric wins. Whether a success is genuine is decided by the scoring
    layer, which knows the transmitted payloads.
    """
    blocks, metrics = viterbi_decode_batch(combiner.llrs)
    best = DecodeResult(status="CrcFail", reps_used=combiner.reps)
    for h in range(P.ECSCH_PERIOD_MFS):
        if crc10_check(blocks[h]) and metrics[h] > best.metric:
            best = DecodeResult(
                status="Success",
                payload=blocks[h][:P.PAYLOAD_BITS].copy(),
                reps_used=combiner.reps,
                shift_chosen=h,
                metric=float(metrics[h]),
            )
    return best
