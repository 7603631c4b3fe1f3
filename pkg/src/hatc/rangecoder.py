"""Static-context binary arithmetic coder.

32-bit shift-based arithmetic coder with 16-bit fixed-point probabilities
(probability of a 1 bit in 1..65535).  Contexts are supplied by the caller:
the first coded position of each vector uses ``first_prob``, every later
position uses ``cond_probs[pos, previous_bit]``.  The hot loops are numba
kernels; all arithmetic is integer, so output is deterministic.
"""

from __future__ import annotations

import numba as nb
import numpy as np

_HALF = 1 << 31
_QUARTER = 1 << 30
_THREE_QUARTERS = 3 << 30
_MASK = (1 << 32) - 1
_PROB_ONE = 1 << 16


@nb.njit(cache=True)
def _put_bit(buf, state, bit):
    acc, nbits, pos = state
    acc = (acc << 1) | bit
    nbits += 1
    if nbits == 8:
        buf[pos] = acc
        pos += 1
        acc = 0
        nbits = 0
    return acc, nbits, pos


@nb.njit(cache=True)
def _emit(buf, state, bit, pending):
    state = _put_bit(buf, state, bit)
    inv = 1 - bit
    for _ in range(pending):
        state = _put_bit(buf, state, inv)
    return state


@nb.njit(cache=True)
def _encode_vectors(bits, first_prob, cond_probs, out):
    """Encode a (count, D) bit matrix already permuted into coding order.

    Returns the number of payload bytes written to ``out``.
    """
    count, d = bits.shape
    low = np.uint64(0)
    high = np.uint64(_MASK)
    pending = 0
    state = (0, 0, 0)  # accumulator, bit count, byte position
    for v in range(count):
        prev = 0
        for j in range(d):
            p1 = first_prob if j == 0 else cond_probs[j, prev]
            bit = bits[v, j]
            rng = high - low + np.uint64(1)
            split = low + (rng * np.uint64(_PROB_ONE - p1) >> np.uint64(16)) - np.uint64(1)
            if bit == 0:
                high = split
            else:
                low = split + np.uint64(1)
            while True:
                if high < np.uint64(_HALF):
                    state = _emit(out, state, 0, pending)
                    pending = 0
                elif low >= np.uint64(_HALF):
                    state = _emit(out, state, 1, pending)
                    pending = 0
                    low -= np.uint64(_HALF)
                    high -= np.uint64(_HALF)
                elif low >= np.uint64(_QUARTER) and high < np.uint64(_THREE_QUARTERS):
                    pending += 1
                    low -= np.uint64(_QUARTER)
                    high -= np.uint64(_QUARTER)
                else:
                    break
                low = (low << np.uint64(1)) & np.uint64(_MASK)
                high = ((high << np.uint64(1)) | np.uint64(1)) & np.uint64(_MASK)
            prev = bit
    # Flush: one disambiguating bit plus pending, then pad the final byte.
    pending += 1
    if low < np.uint64(_QUARTER):
        state = _emit(out, state, 0, pending)
    else:
        state = _emit(out, state, 1, pending)
    acc, nbits, pos = state
    if nbits > 0:
        out[pos] = acc << (8 - nbits)
        pos += 1
    return pos


@nb.njit(cache=True)
def _decode_vectors(data, count, d, first_prob, cond_probs, out):
    """Inverse of _encode_vectors; fills ``out`` (count, D) in coding order."""
    low = np.uint64(0)
    high = np.uint64(_MASK)
    code = np.uint64(0)
    bitpos = 0
    nbits_total = data.shape[0] * 8
    for _ in range(32):
        code <<= np.uint64(1)
        if bitpos < nbits_total:
            code |= np.uint64((data[bitpos >> 3] >> (7 - (bitpos & 7))) & 1)
        bitpos += 1
    for v in range(count):
        prev = 0
        for j in range(d):
            p1 = first_prob if j == 0 else cond_probs[j, prev]
            rng = high - low + np.uint64(1)
            split = low + (rng * np.uint64(_PROB_ONE - p1) >> np.uint64(16)) - np.uint64(1)
            if code <= split:
                bit = 0
                high = split
            else:
                bit = 1
                low = split + np.uint64(1)
            out[v, j] = bit
            while True:
                if high < np.uint64(_HALF):
                    pass
                elif low >= np.uint64(_HALF):
                    low -= np.uint64(_HALF)
                    high -= np.uint64(_HALF)
                    code -= np.uint64(_HALF)
                elif low >= np.uint64(_QUARTER) and high < np.uint64(_THREE_QUARTERS):
                    low -= np.uint64(_QUARTER)
                    high -= np.uint64(_QUARTER)
                    code -= np.uint64(_QUARTER)
                else:
                    break
                low = (low << np.uint64(1)) & np.uint64(_MASK)
                high = ((high << np.uint64(1)) | np.uint64(1)) & np.uint64(_MASK)
                code = (code << np.uint64(1)) & np.uint64(_MASK)
                if bitpos < nbits_total:
                    code |= np.uint64((data[bitpos >> 3] >> (7 - (bitpos & 7))) & 1)
                bitpos += 1
            prev = bit


def encode_vectors(bits: np.ndarray, first_prob: int, cond_probs: np.ndarray) -> bytes:
    """Encode bit vectors (count, D), already in coding order."""
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    count, d = bits.shape
    out = np.zeros(count * d * 3 + 32, dtype=np.uint8)
    n = _encode_vectors(
        bits, np.uint64(first_prob), np.ascontiguousarray(cond_probs, dtype=np.uint64), out
    )
    return out[:n].tobytes()


def decode_vectors(
    payload: bytes, count: int, d: int, first_prob: int, cond_probs: np.ndarray
) -> np.ndarray:
    """Decode ``count`` vectors of ``d`` bits, in coding order."""
    data = np.frombuffer(payload, dtype=np.uint8)
    out = np.zeros((count, d), dtype=np.uint8)
    if count:
        _decode_vectors(
            data,
            count,
            d,
            np.uint64(first_prob),
            np.ascontiguousarray(cond_probs, dtype=np.uint64),
            out,
        )
    return out
