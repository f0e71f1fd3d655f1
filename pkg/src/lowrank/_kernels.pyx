# cython: language_level=3
"""Compiled implementations of the hot kernels.

Must stay semantically identical to ``_kernels_py`` (the pure-numpy twin);
the parity tests in tests/test_kernels.py compare the two on random inputs.
See ``_kernels_py`` for the documented contracts.
"""

import numpy as np

cimport cython
cimport numpy as cnp

cnp.import_array()

IMPL = "cython"

ctypedef cnp.uint8_t u8
ctypedef cnp.int16_t i16
ctypedef cnp.int64_t i64
ctypedef cnp.float64_t f64


def zcounts(A, cols, labels, int nlabels):
    cdef const u8[:, ::1] Av = np.ascontiguousarray(A, dtype=np.uint8)
    cdef const i64[::1] cv = np.ascontiguousarray(cols, dtype=np.int64)
    cdef const i64[::1] lv = np.ascontiguousarray(labels, dtype=np.int64)
    cdef Py_ssize_t n = Av.shape[0], s = cv.shape[0]
    Z1 = np.zeros((n, nlabels), dtype=np.int64)
    sizes = np.zeros(nlabels, dtype=np.int64)
    cdef i64[:, ::1] Zv = Z1
    cdef i64[::1] szv = sizes
    cdef Py_ssize_t i, j
    cdef i64 y
    for j in range(s):
        y = lv[j]
        szv[y] += 1
        for i in range(n):
            Zv[i, y] += Av[i, cv[j]]
    return Z1, sizes


def best_rows(Z1, sizes, neq0, neq1):
    cdef const i64[:, ::1] Zv = np.ascontiguousarray(Z1, dtype=np.int64)
    cdef const i64[::1] szv = np.ascontiguousarray(sizes, dtype=np.int64)
    cdef const u8[:, ::1] n0 = np.ascontiguousarray(neq0, dtype=np.uint8)
    cdef const u8[:, ::1] n1 = np.ascontiguousarray(neq1, dtype=np.uint8)
    cdef Py_ssize_t n = Zv.shape[0], nlab = Zv.shape[1]
    codes = np.empty(n, dtype=np.int64)
    cdef i64[::1] out = codes
    cdef Py_ssize_t i, x, y
    cdef i64 total = 0, bestv, cost, bestx
    for i in range(n):
        bestv = -1
        bestx = 0
        for x in range(nlab):
            cost = 0
            for y in range(nlab):
                cost += (szv[y] - Zv[i, y]) * n0[x, y] + Zv[i, y] * n1[x, y]
            if bestv < 0 or cost < bestv:
                bestv = cost
                bestx = x
        out[i] = bestx
        total += bestv
    return codes, int(total)


def weighted_best_rows(Z0w, Z1w, neq0, neq1):
    cdef const f64[:, ::1] Z0 = np.ascontiguousarray(Z0w, dtype=np.float64)
    cdef const f64[:, ::1] Z1 = np.ascontiguousarray(Z1w, dtype=np.float64)
    cdef const u8[:, ::1] n0 = np.ascontiguousarray(neq0, dtype=np.uint8)
    cdef const u8[:, ::1] n1 = np.ascontiguousarray(neq1, dtype=np.uint8)
    cdef Py_ssize_t n = Z0.shape[0], nlab = Z0.shape[1]
    codes = np.empty(n, dtype=np.int64)
    cdef i64[::1] out = codes
    cdef Py_ssize_t i, x, y
    cdef f64 bestv, cost
    cdef i64 bestx
    for i in range(n):
        bestv = -1.0
        bestx = 0
        for x in range(nlab):
            cost = 0.0
            for y in range(nlab):
                cost += Z0[i, y] * n0[x, y] + Z1[i, y] * n1[x, y]
            if x == 0 or cost < bestv:
                bestv = cost
                bestx = x
        out[i] = bestx
    return codes


def best_cols(A, rowcodes, int nlabels, neq0, neq1):
    cdef const u8[:, ::1] Av = np.ascontiguousarray(A, dtype=np.uint8)
    cdef const i64[::1] rc = np.ascontiguousarray(rowcodes, dtype=np.int64)
    cdef const u8[:, ::1] n0 = np.ascontiguousarray(neq0, dtype=np.uint8)
    cdef const u8[:, ::1] n1 = np.ascontiguousarray(neq1, dtype=np.uint8)
    cdef Py_ssize_t n = Av.shape[0], d = Av.shape[1]
    W1 = np.zeros((d, nlabels), dtype=np.int64)
    cnt = np.zeros(nlabels, dtype=np.int64)
    cdef i64[:, ::1] Wv = W1
    cdef i64[::1] cv = cnt
    cdef Py_ssize_t i, j, y, u
    for i in range(n):
        u = rc[i]
        cv[u] += 1
        for j in range(d):
            Wv[j, u] += Av[i, j]
    codes = np.empty(d, dtype=np.int64)
    cdef i64[::1] out = codes
    cdef i64 total = 0, bestv, cost, besty
    for j in range(d):
        bestv = -1
        besty = 0
        for y in range(nlabels):
            cost = 0
            for u in range(nlabels):
                cost += (cv[u] - Wv[j, u]) * n0[u, y] + Wv[j, u] * n1[u, y]
            if bestv < 0 or cost < bestv:
                bestv = cost
                besty = y
        out[j] = besty
        total += bestv
    return codes, int(total)


def pair_cost(A, rowcodes, colcodes, neq0, neq1):
    cdef const u8[:, ::1] Av = np.ascontiguousarray(A, dtype=np.uint8)
    cdef const i64[::1] rc = np.ascontiguousarray(rowcodes, dtype=np.int64)
    cdef const i64[::1] cc = np.ascontiguousarray(colcodes, dtype=np.int64)
    cdef const u8[:, ::1] n0 = np.ascontiguousarray(neq0, dtype=np.uint8)
    cdef const u8[:, ::1] n1 = np.ascontiguousarray(neq1, dtype=np.uint8)
    cdef Py_ssize_t n = Av.shape[0], d = Av.shape[1]
    cdef Py_ssize_t i, j
    cdef i64 total = 0
    for i in range(n):
        for j in range(d):
            if Av[i, j]:
                total += n1[rc[i], cc[j]]
            else:
                total += n0[rc[i], cc[j]]
    return int(total)


def min_dist_to_refs(A, live, refs):
    cdef const u8[:, ::1] Av = np.ascontiguousarray(A, dtype=np.uint8)
    cdef const i64[::1] lv = np.ascontiguousarray(live, dtype=np.int64)
    cdef const i64[::1] rv = np.ascontiguousarray(refs, dtype=np.int64)
    cdef Py_ssize_t n = Av.shape[0], m = lv.shape[0], r = rv.shape[0]
    out = np.empty(m, dtype=np.int64)
    cdef i64[::1] ov = out
    cdef Py_ssize_t a, b, i
    cdef i64 best, dist
    for a in range(m):
        best = -1
        for b in range(r):
            dist = 0
            for i in range(n):
                if Av[i, lv[a]] != Av[i, rv[b]]:
                    dist += 1
            if best < 0 or dist < best:
                best = dist
        ov[a] = best
    return out


def best_rows_given_candrows(A, cand_rows):
    cdef const i16[:, ::1] Av = np.ascontiguousarray(A, dtype=np.int16)
    cdef const i16[:, ::1] Cv = np.ascontiguousarray(cand_rows, dtype=np.int16)
    cdef Py_ssize_t n = Av.shape[0], d = Av.shape[1], C = Cv.shape[0]
    choice = np.empty(n, dtype=np.int64)
    cdef i64[::1] out = choice
    cdef Py_ssize_t i, c, j
    cdef i64 total = 0, bestv, cost, bestc
    for i in range(n):
        bestv = -1
        bestc = 0
        for c in range(C):
            cost = 0
            for j in range(d):
                if Av[i, j] != Cv[c, j]:
                    cost += 1
            if bestv < 0 or cost < bestv:
                bestv = cost
                bestc = c
        out[i] = bestc
        total += bestv
    return choice, int(total)


@cython.boundscheck(False)
def fq_score_columns(phiA, guess, add, mul, sub, vcands, pinv, double gamma):
    cdef const i16[:, :, :, ::1] phi = np.ascontiguousarray(phiA, dtype=np.int16)
    cdef const i16[:, :, :, ::1] gv = np.ascontiguousarray(guess, dtype=np.int16)
    cdef const i16[:, ::1] addv = np.ascontiguousarray(add, dtype=np.int16)
    cdef const i16[:, ::1] mulv = np.ascontiguousarray(mul, dtype=np.int16)
    cdef const i16[:, ::1] subv = np.ascontiguousarray(sub, dtype=np.int16)
    cdef const i16[:, ::1] vc = np.ascontiguousarray(vcands, dtype=np.int16)
    cdef const f64[::1] pv = np.ascontiguousarray(pinv, dtype=np.float64)
    cdef Py_ssize_t K = phi.shape[0], d = phi.shape[1], L = phi.shape[2], B = phi.shape[3]
    cdef Py_ssize_t C = vc.shape[0], k = vc.shape[1]
    if K > 256:
        raise ValueError("bank size above 256 unsupported in the compiled kernel")

    # mix[t, c, l, b] = field sum over k of vcands[c, .] * guess[t, ., l, b]
    mix_arr = np.zeros((K, C, L, B), dtype=np.int16)
    cdef i16[:, :, :, ::1] mix = mix_arr
    cdef Py_ssize_t t, c, l, b, lp
    cdef i16 acc
    for t in range(K):
        for c in range(C):
            for l in range(L):
                for b in range(B):
                    acc = 0
                    for lp in range(k):
                        acc = addv[acc, mulv[vc[c, lp], gv[t, lp, l, b]]]
                    mix[t, c, l, b] = acc

    out = np.empty(d, dtype=np.int64)
    cdef i64[::1] ov = out
    cdef double ests[256]
    cdef double tmp, bestscore, medv
    cdef Py_ssize_t j, bestc, cnt, pos
    cdef Py_ssize_t medidx = (K + 1) // 2 - 1  # ceil(K/2), 0-based
    for j in range(d):
        bestc = 0
        bestscore = -1.0
        for c in range(C):
            for t in range(K):
                tmp = -1.0
                for l in range(L):
                    cnt = 0
                    for b in range(B):
                        if subv[phi[t, j, l, b], mix[t, c, l, b]] != 0:
                            cnt += 1
                    if l == 0:
                        tmp = cnt * pv[0]
                    if cnt > gamma:
                        tmp = cnt * pv[l]
                ests[t] = tmp
                # keep ests[0..t] sorted ascending (insertion sort)
                pos = t
                while pos > 0 and ests[pos - 1] > ests[pos]:
                    tmp = ests[pos - 1]
                    ests[pos - 1] = ests[pos]
                    ests[pos] = tmp
                    pos -= 1
            medv = ests[medidx]
            if bestscore < 0.0 or medv < bestscore:
                bestscore = medv
                bestc = c
        ov[j] = bestc
    return out
