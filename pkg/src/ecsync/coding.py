"""EC-SCH channel coding: CRC-10, rate-1/2 convolutional code, cyclic shifts.

The coded block is 78 bits: 25 payload bits, 10 CRC parity bits and 4 tail
zeros through the legacy K=5 encoder. Repetitions in different multiframes
carry distinct cyclic rotations of the coded block.
"""

import numpy as np

from .params import (
    CODED_BITS,
    CONV_G0,
    CONV_G1,
    CONV_TAIL,
    CRC_BITS,
    CRC_POLY,
    CYCLIC_SHIFT_STEP,
    PAYLOAD_BITS,
)


def crc10_attach(info: np.ndarray) -> np.ndarray:
    """Append the 10 CRC parity bits to a 25-bit payload."""
    info = np.asarray(info, dtype=np.uint8)
    if info.shape != (PAYLOAD_BITS,):
        raise ValueError(f"expected {PAYLOAD_BITS} info bits, got {info.shape}")
    reg = 0
    for b in info:
        reg = (reg << 1) | int(b)
        if reg & (1 << CRC_BITS):
            reg ^= CRC_POLY
    for _ in range(CRC_BITS):
        reg <<= 1
        if reg & (1 << CRC_BITS):
            reg ^= CRC_POLY
    parity = [(reg >> (CRC_BITS - 1 - i)) & 1 for i in range(CRC_BITS)]
    return np.concatenate([info, np.array(parity, dtype=np.uint8)])


def crc10_check(block: np.ndarray) -> bool:
    """True iff the last 10 bits are the CRC of the first 25."""
    block = np.asarray(block, dtype=np.uint8)
    if block.shape != (PAYLOAD_BITS + CRC_BITS,):
        raise ValueError("expected a 35-bit block")
    return bool(np.array_equal(crc10_attach(block[:PAYLOAD_BITS]), block))


def conv_encode(block: np.ndarray) -> np.ndarray:
    """Rate-1/2 K=5 feedforward encoding of block + 4 tail zeros -> 78 bits."""
    block = np.asarray(block, dtype=np.uint8)
    if block.shape != (PAYLOAD_BITS + CRC_BITS,):
        raise ValueError("expected a 35-bit block")
    bits = np.concatenate([block, np.zeros(CONV_TAIL, dtype=np.uint8)])
    g0 = np.array(CONV_G0, dtype=np.uint8)
    g1 = np.array(CONV_G1, dtype=np.uint8)
    padded = np.concatenate([np.zeros(4, dtype=np.uint8), bits])
    out = np.empty(2 * len(bits), dtype=np.uint8)
    for k in range(len(bits)):
        window = padded[k:k + 5][::-1]  # [b_k, b_{k-1}, .., b_{k-4}]
        out[2 * k] = np.bitwise_xor.reduce(window * g0)
        out[2 * k + 1] = np.bitwise_xor.reduce(window * g1)
    return out


# Trellis tables for the K=5 code: state = last four input bits,
# newest in the MSB. 16 states x 2 inputs.
_N_STATES = 16


def _build_trellis():
    next_state = np.zeros((_N_STATES, 2), dtype=np.int64)
    out0 = np.zeros((_N_STATES, 2), dtype=np.int8)
    out1 = np.zeros((_N_STATES, 2), dtype=np.int8)
    for s in range(_N_STATES):
        b1 = (s >> 3) & 1   # previous input
        b2 = (s >> 2) & 1
        b3 = (s >> 1) & 1
        b4 = s & 1          # oldest
        for b in range(2):
            out0[s, b] = b ^ b3 ^ b4          # 1 + D^3 + D^4
            out1[s, b] = b ^ b1 ^ b3 ^ b4     # 1 + D + D^3 + D^4
            next_state[s, b] = (b << 3) | (s >> 1)
    return next_state, out0, out1


_NEXT, _OUT0, _OUT1 = _build_trellis()

# Predecessor (state, input) pairs per destination state, flat index s*2+b.
_PRED_IDX = np.stack(
    [np.nonzero(_NEXT.reshape(-1) == s)[0] for s in range(_N_STATES)]
)


def viterbi_decode(llrs: np.ndarray):
    """Soft Viterbi decoding of one 78-LLR block.

    LLR sign convention: positive means bit 0. Returns (35-bit block,
    path metric); larger metrics mean better agreement with the LLRs.
    """
    blocks, metrics = viterbi_decode_batch(np.asarray(llrs, dtype=np.float64)[None, :])
    return blocks[0], float(metrics[0])


def viterbi_decode_batch(llrs: np.ndarray):
    """Vectorized Viterbi over a batch of 78-LLR blocks -> (B,35), (B,)."""
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.ndim != 2 or llrs.shape[1] != CODED_BITS:
        raise ValueError(f"expected (B, {CODED_BITS}) LLRs")
    nbits = CODED_BITS // 2
    B = llrs.shape[0]
    sign0 = 1.0 - 2.0 * _OUT0  # (16,2): +1 for coded bit 0
    sign1 = 1.0 - 2.0 * _OUT1
    pm = np.full((B, _N_STATES), -np.inf)
    pm[:, 0] = 0.0
    prev_bit = np.zeros((B, nbits, _N_STATES), dtype=np.uint8)
    prev_state = np.zeros((B, nbits, _N_STATES), dtype=np.uint8)
    for k in range(nbits):
        l0 = llrs[:, 2 * k, None]      # (B,1)
        l1 = llrs[:, 2 * k + 1, None]
        # candidate metric of every (state, input) pair
        cand = pm[:, :, None] + 0.5 * (l0[..., None] * sign0 + l1[..., None] * sign1)
        flat = cand.reshape(B, -1)     # (B, 32), index = state*2 + input
        byDest = flat[:, _PRED_IDX]    # (B, 16, 2)
        j = np.argmax(byDest, axis=2)
        pm = np.take_along_axis(byDest, j[:, :, None], axis=2)[:, :, 0]
        arg = _PRED_IDX[np.arange(_N_STATES), j]
        prev_state[:, k, :] = arg >> 1
        prev_bit[:, k, :] = arg & 1
    metric = pm[:, 0]
    blocks = np.zeros((B, nbits), dtype=np.uint8)
    state = np.zeros(B, dtype=np.int64)
    rows = np.arange(B)
    for k in range(nbits - 1, -1, -1):
        blocks[:, k] = prev_bit[rows, k, state]
        state = prev_state[rows, k, state].astype(np.int64)
    return blocks[:, :PAYLOAD_BITS + CRC_BITS], metric


def cyclic_shift_apply(coded: np.ndarray, mf_index: int) -> np.ndarray:
    """Rotate the 78 coded bits left by 20 positions per multiframe index."""
    coded = np.asarray(coded)
    if coded.shape[-1] != CODED_BITS:
        raise ValueError("expected 78 coded bits")
    if not 0 <= mf_index <= 3:
        raise ValueError("mf_index must be 0..3")
    return np.roll(coded, -CYCLIC_SHIFT_STEP * mf_index, axis=-1)


def cyclic_shift_invert(values: np.ndarray, mf_index: int) -> np.ndarray:
    """Inverse of cyclic_shift_apply (works on bits or LLRs)."""
    if not 0 <= mf_index <= 3:
        raise ValueError("mf_index must be 0..3")
    return np.roll(np.asarray(values), CYCLIC_SHIFT_STEP * mf_index, axis=-1)


def encode_payload(info: np.ndarray, mf_index: int) -> np.ndarray:
    """Full transmit chain for one repetition: CRC, encode, cyclic shift."""
    return cyclic_shift_apply(conv_encode(crc10_attach(info)), mf_index)
