"""Fine time-offset estimation from EC-SCH training-sequence correlations.

The known 64-chip training sequence is cross-correlated against the
derotated stream over lags of +-80 symbols around each candidate position;
the squared magnitudes are accumulated non-coherently across blind
repetitions (no inter-burst phase coherency), and the multiframe-start
candidate with the strongest accumulated peak wins after 28 repetitions.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import params as P
from .modulation import derotate

N_LAGS = 2 * P.TIMING_RANGE + 1


def xcorr_training(stream: np.ndarray, burst_start: int,
                   lags: int = P.TIMING_RANGE) -> np.ndarray:
    """Complex correlations K_p[eta] for eta in [-lags, +lags].

    burst_start is the hypothesised burst position in the stream; the
    training section is expected at burst_start + 42. The stream is
    derotated internally on the absolute sample grid.
    """
    t0 = burst_start + P.TRAIN_START
    lo = t0 - lags
    hi = t0 + lags + P.TRAIN_LEN
    if lo < 0 or hi > len(stream):
        raise ValueError("stream region too short for the requested lags")
    seg = derotate(stream[lo:hi], start_index=lo)
    wins = sliding_window_view(seg, P.TRAIN_LEN)       # (2*lags+1, 64)
    return wins @ P.TRAIN_CHIPS.astype(np.complex128)


@dataclass
class TimingState:
    """Accumulated |K_p|^2 over the lag window for one candidate."""

    k_acc: np.ndarray = None
    reps_seen: int = 0

    def __post_init__(self):
        if self.k_acc is None:
            self.k_acc = np.zeros(N_LAGS)


def accumulate_timing(state: TimingState, k_p: np.ndarray) -> TimingState:
    """Add one repetition's |K_p|^2 (non-coherent combining)."""
    k_p = np.asarray(k_p)
    if k_p.shape != (N_LAGS,):
        raise ValueError(f"expected {N_LAGS} lags")
    state.k_acc += np.abs(k_p) ** 2
    state.reps_seen += 1
    return state


def eta_hat(state: TimingState) -> int:
    """Most likely time offset in symbols (argmax; lowest lag on ties)."""
    return int(np.argmax(state.k_acc)) - P.TIMING_RANGE


def resolve_candidate(states):
    """Pick the candidate whose accumulated peak is largest.

    Returns (index, eta, peak_value).
    """
    best_idx, best_eta, best_val = 0, 0, -1.0
    for i, st in enumerate(states):
        j = int(np.argmax(st.k_acc))
        if st.k_acc[j] > best_val:
            best_idx, best_eta, best_val = i, j - P.TIMING_RANGE, float(st.k_acc[j])
    return best_idx, best_eta, best_val
