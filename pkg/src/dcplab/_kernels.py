"""Compiled hot paths for register collapse and cube-mode register sampling.

The coset-routine cascade consumes millions of fresh-register attempts; each
attempt rebuilds subset-sum reachability for its own measured sequence A.
These kernels mirror, bit for bit, the pure-python collapse in worlds.py
(equality is tested); bitsets over Z_N require N to be a multiple of 64.

All randomness enters through pre-drawn uniforms, so the kernels are pure
functions and reproducibility lives entirely in the numpy streams.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U1 = np.uint64(1)
U6 = np.uint64(6)
U63 = np.uint64(63)
U64 = np.uint64(64)


@njit(cache=True, nogil=True, inline="always")
def _popcount(x):
    x = x - ((x >> U1) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return int((x * np.uint64(0x0101010101010101)) >> np.uint64(56))


@njit(cache=True, nogil=True)
def _rot_left_into(src, dst, k, w):
    """dst = {(x + k) mod N : x in src}, N = 64 w, 0 <= k < N."""
    ws = k >> 6
    bs = np.uint64(k & 63)
    if bs == np.uint64(0):
        for i in range(w):
            dst[(i + ws) % w] = src[i]
    else:
        for i in range(w):
            dst[i] = np.uint64(0)
        inv = U64 - bs
        for i in range(w):
            j = (i + ws) % w
            dst[j] |= src[i] << bs
            dst[(j + 1) % w] |= src[i] >> inv
    return dst


@njit(cache=True, nogil=True, inline="always")
def _testbit(words, t):
    return (words[t >> 6] >> np.uint64(t & 63)) & U1


@njit(cache=True, nogil=True)
def _build_layers(a_red, r, layers, rotbuf):
    """layers[i] = sums reachable from elements i+1..r (a_red already mod N)."""
    w = layers.shape[1]
    for wd in range(w):
        layers[r, wd] = np.uint64(0)
    layers[r, 0] = U1
    for i in range(r - 1, -1, -1):
        _rot_left_into(layers[i + 1], rotbuf, a_red[i], w)
        for wd in range(w):
            layers[i, wd] = layers[i + 1, wd] | rotbuf[wd]


@njit(cache=True, nogil=True)
def _canonical_mask(layers, a_red, n_mod, r, t, upto):
    """First `upto` greedy bits of the lexicographically smallest mask for t.

    Returns the bit prefix packed into an integer with element i on bit
    (r - i); assumes t is reachable from element 1.
    """
    mask = 0
    rem = t
    for i in range(upto):
        if _testbit(layers[i + 1], rem):
            continue  # bit 0: remainder attainable without element i+1
        mask |= 1 << (r - 1 - i)
        rem -= a_red[i]
        if rem < 0:
            rem += n_mod
    return mask, rem


@njit(cache=True, nogil=True)
def _matches_bad_bits(layers, a_red, n_mod, r, t, bad_row, b_row, maxbad):
    """Greedy-walk the canonical mask of t, testing bits at bad positions."""
    rem = t
    for i in range(maxbad):
        if _testbit(layers[i + 1], rem):
            bit = 0
        else:
            bit = 1
            rem -= a_red[i]
            if rem < 0:
                rem += n_mod
        if bad_row[i] and bit != b_row[i]:
            return False
    return True


@njit(cache=True, nogil=True)
def _kth_set_bit(words, w, k):
    """Index of the k-th (0-based) set bit."""
    rem = k
    for wd in range(w):
        c = _popcount(words[wd])
        if rem < c:
            word = words[wd]
            while True:
                low = word & ((~word) + U1)
                if rem == 0:
                    return (wd << 6) + _popcount(low - U1)
                rem -= 1
                word &= word - U1
        rem -= c
    return -1


@njit(cache=True, nogil=True)
def collapse_row(
    n_mod, r, q, a_row, bad_row, b_row, a1_w, keep_w, keeprot_w, layers, rotbuf,
    pair_w, ts, wl, wh,
):
    """Pair table for one register row: fills ts/wl/wh, returns (s, mass, npairs).

    A pair is an A_1-side target t with both t and t+q answered; its weight is
    the number of endpoint masks consistent with the bad-register bits.
    """
    w = layers.shape[1]
    a_red = a_row % n_mod
    _build_layers(a_red, r, layers, rotbuf)
    reach = layers[0]
    _rot_left_into(reach, rotbuf, n_mod - q, w)
    for wd in range(w):
        pair_w[wd] = reach[wd] & rotbuf[wd] & a1_w[wd] & keep_w[wd] & keeprot_w[wd]
    s = 0
    maxbad = 0
    for i in range(r):
        if bad_row[i]:
            s += 1
            maxbad = i + 1
    mass = 0
    npairs = 0
    if s == 0:
        for wd in range(w):
            word = pair_w[wd]
            while word != np.uint64(0):
                low = word & ((~word) + U1)
                t = (wd << 6) + _popcount(low - U1)
                ts[npairs] = t
                wl[npairs] = 1
                wh[npairs] = 1
                npairs += 1
                word &= word - U1
        mass = 2 * npairs
    else:
        for wd in range(w):
            word = pair_w[wd]
            while word != np.uint64(0):
                low = word & ((~word) + U1)
                t = (wd << 6) + _popcount(low - U1)
                word &= word - U1
                lo = 1 if _matches_bad_bits(layers, a_red, n_mod, r, t, bad_row, b_row, maxbad) else 0
                hi = 1 if _matches_bad_bits(layers, a_red, n_mod, r, t + q, bad_row, b_row, maxbad) else 0
                if lo + hi > 0:
                    ts[npairs] = t
                    wl[npairs] = lo
                    wh[npairs] = hi
                    mass += lo + hi
                    npairs += 1
    return s, mass, npairs


@njit(cache=True, nogil=True)
def run_routine_bits(
    n_mod, r, q, routine, cosv, sinv,
    a_mat, bad_mat, b_mat, u_mat,
    a1_w, keep_w, quota,
):
    """Consume register rows until `quota` routine successes; return
    (successes, ones, rows_used)."""
    w = n_mod >> 6
    layers = np.zeros((r + 1, w), np.uint64)
    rotbuf = np.zeros(w, np.uint64)
    pair_w = np.zeros(w, np.uint64)
    keeprot_w = np.zeros(w, np.uint64)
    _rot_left_into(keep_w, keeprot_w, n_mod - q, w)
    ts = np.empty(n_mod, np.int64)
    wl = np.empty(n_mod, np.uint8)
    wh = np.empty(n_mod, np.uint8)
    succ = 0
    ones = 0
    used = 0
    rows = a_mat.shape[0]
    for row in range(rows):
        used += 1
        s, mass, npairs = collapse_row(
            n_mod, r, q, a_mat[row], bad_mat[row], b_mat[row],
            a1_w, keep_w, keeprot_w, layers, rotbuf, pair_w, ts, wl, wh,
        )
        if mass == 0:
            continue
        psucc = mass / (2.0 ** (r - s))
        if u_mat[row, 0] >= psucc:
            continue
        # pick a pair proportionally to its weight
        target = u_mat[row, 1] * mass
        acc = 0.0
        idx = npairs - 1
        for k in range(npairs):
            acc += wl[k] + wh[k]
            if target < acc:
                idx = k
                break
        two_sided = (wl[idx] + wh[idx]) == 2
        if two_sided:
            if routine == 1:
                p1 = 0.5 - 0.5 * cosv
            else:
                p1 = 0.5 + 0.5 * sinv
        else:
            p1 = 0.5
        succ += 1
        if u_mat[row, 2] < p1:
            ones += 1
        if succ >= quota:
            break
    return succ, ones, used


@njit(cache=True, nogil=True)
def sample_cube_batch(
    basis, binv, p, m_res, big_m, cell, u_mat,
    out_status, out_x, out_d,
):
    """Cube-partition register sampler, exhaustive preimage check per draw.

    basis rows are the reduced lattice basis with the chosen coordinate slot
    permuted to row 0.  u_mat columns: [t, a_1..a_n, w_1..w_n].
    status: 0 bad (out_x=encoding, out_d=qubit bit), 1 good (out_x=encoding of
    the t=0 side, out_d=coset difference), 2 structural violation, 3 internal
    (drawn point missing from its own cell).
    """
    count = u_mat.shape[0]
    n = basis.shape[0]
    two_m = 2 * big_m
    weights = np.empty(n, np.int64)
    weights[0] = 1
    for j in range(1, n):
        weights[j] = weights[j - 1] * two_m
    cvec = np.empty(n, np.int64)
    cmin = np.empty(n, np.int64)
    cmax = np.empty(n, np.int64)
    lab = np.empty(n, np.int64)
    wvec = np.empty(n, np.float64)
    vtmp = np.empty(n, np.float64)
    cur = np.empty(n, np.int64)
    for k in range(count):
        tdraw = 1 if u_mat[k, 0] >= 0.5 else 0
        for j in range(n):
            aj = int(u_mat[k, 1 + j] * big_m)
            if aj >= big_m:
                aj = big_m - 1
            cvec[j] = aj
            wvec[j] = u_mat[k, 1 + n + j]
        cvec[0] = cvec[0] * p + tdraw * m_res
        # ambient point and its cell label
        for i in range(n):
            vi = 0
            for j in range(n):
                vi += cvec[j] * basis[j, i]
            lab[i] = int(np.floor(vi / cell - wvec[i]))
        # coefficient-space bounding box of the cell
        for j in range(n):
            cmin[j] = 2**62
            cmax[j] = -(2**62)
        for corner in range(1 << n):
            for i in range(n):
                vtmp[i] = (lab[i] + wvec[i] + ((corner >> i) & 1)) * cell
            for j in range(n):
                sj = 0.0
                for i in range(n):
                    sj += vtmp[i] * binv[i, j]
                fl = int(np.floor(sj)) - 1
                ce = int(np.ceil(sj)) + 1
                if fl < cmin[j]:
                    cmin[j] = fl
                if ce > cmax[j]:
                    cmax[j] = ce
        # clip to the coefficient ranges of the register map
        if cmin[0] < 0:
            cmin[0] = 0
        top0 = (big_m - 1) * p + m_res
        if cmax[0] > top0:
            cmax[0] = top0
        for j in range(1, n):
            if cmin[j] < 0:
                cmin[j] = 0
            if cmax[j] > big_m - 1:
                cmax[j] = big_m - 1
        n0 = 0
        n1 = 0
        enc0 = np.int64(-1)
        enc1 = np.int64(-1)
        empty = False
        for j in range(n):
            cur[j] = cmin[j]
            if cmin[j] > cmax[j]:
                empty = True
        if not empty:
            while True:
                ok = True
                for i in range(n):
                    vi = 0
                    for j in range(n):
                        vi += cur[j] * basis[j, i]
                    if int(np.floor(vi / cell - wvec[i])) != lab[i]:
                        ok = False
                        break
                if ok:
                    rem = cur[0] % p
                    tt = -1
                    a0 = 0
                    if rem == 0:
                        tt = 0
                        a0 = cur[0] // p
                    elif rem == m_res:
                        tt = 1
                        a0 = (cur[0] - m_res) // p
                    if tt >= 0 and 0 <= a0 < big_m:
                        enc = a0 * weights[0]
                        for j in range(1, n):
                            enc += cur[j] * weights[j]
                        if tt == 0:
                            n0 += 1
                            enc0 = enc
                        else:
                            n1 += 1
                            enc1 = enc
                # odometer
                j = 0
                while j < n:
                    cur[j] += 1
                    if cur[j] <= cmax[j]:
                        break
                    cur[j] = cmin[j]
                    j += 1
                if j == n:
                    break
        if n0 > 1 or n1 > 1:
            out_status[k] = 2
            out_x[k] = -1
            out_d[k] = -1
        elif n0 == 1 and n1 == 1:
            nn = 1
            for j in range(n):
                nn *= two_m
            out_status[k] = 1
            out_x[k] = enc0
            diff = (enc1 - enc0) % nn
            out_d[k] = diff
        elif n0 + n1 == 1:
            out_status[k] = 0
            out_x[k] = enc0 if n0 == 1 else enc1
            out_d[k] = tdraw
        else:
            out_status[k] = 3
            out_x[k] = -1
            out_d[k] = -1


def bits_to_words(mask: np.ndarray) -> np.ndarray:
    """Pack a boolean Z_N membership vector into uint64 bitset words."""
    mask = np.asarray(mask, dtype=bool)
    if mask.size % 64:
        raise ValueError("bitset kernels need N to be a multiple of 64")
    return np.packbits(mask, bitorder="little").view(np.uint64)


def words_to_bits(words: np.ndarray, n: int) -> np.ndarray:
    return np.unpackbits(words.view(np.uint8), count=n, bitorder="little").astype(bool)
