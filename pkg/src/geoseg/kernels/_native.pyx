# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: fast marching, Gauss-Seidel sweeps, batched Thomas.

Arithmetic and ordering mirror ``pyref.py`` exactly; the two backends are
interchangeable and bit-identical (asserted by the parity test suite).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, sqrt

BACKEND = "native"


cdef inline void _heap_push(double[::1] hd, cnp.int64_t[::1] hi,
                            Py_ssize_t* size, double d, cnp.int64_t idx):
    cdef Py_ssize_t k = size[0]
    cdef Py_ssize_t parent
    cdef double td
    cdef cnp.int64_t ti
    hd[k] = d
    hi[k] = idx
    size[0] = k + 1
    while k > 0:
        parent = (k - 1) >> 1
        if hd[parent] > hd[k] or (hd[parent] == hd[k] and hi[parent] > hi[k]):
            td = hd[parent]; hd[parent] = hd[k]; hd[k] = td
            ti = hi[parent]; hi[parent] = hi[k]; hi[k] = ti
            k = parent
        else:
            break


cdef inline void _heap_pop(double[::1] hd, cnp.int64_t[::1] hi,
                           Py_ssize_t* size, double* d, cnp.int64_t* idx):
    cdef Py_ssize_t n = size[0] - 1
    cdef Py_ssize_t k = 0
    cdef Py_ssize_t child
    cdef double td
    cdef cnp.int64_t ti
    d[0] = hd[0]
    idx[0] = hi[0]
    hd[0] = hd[n]
    hi[0] = hi[n]
    size[0] = n
    while True:
        child = 2 * k + 1
        if child >= n:
            break
        if child + 1 < n and (hd[child + 1] < hd[child] or
                              (hd[child + 1] == hd[child] and hi[child + 1] < hi[child])):
            child += 1
        if hd[child] < hd[k] or (hd[child] == hd[k] and hi[child] < hi[k]):
            td = hd[child]; hd[child] = hd[k]; hd[k] = td
            ti = hi[child]; hi[child] = hi[k]; hi[k] = ti
            k = child
        else:
            break


cdef inline double _godunov_update(double[:, ::1] dist, cnp.uint8_t[:, ::1] accepted,
                                   double[:, ::1] cost, Py_ssize_t i, Py_ssize_t j,
                                   Py_ssize_t w, Py_ssize_t h, double hx, double hy,
                                   double inv_hx2, double inv_hy2):
    cdef double a = INFINITY
    cdef double b = INFINITY
    cdef double f, qa, qb, qc, disc, d, da, db
    if i > 0 and accepted[j, i - 1]:
        a = dist[j, i - 1]
    if i < w - 1 and accepted[j, i + 1] and dist[j, i + 1] < a:
        a = dist[j, i + 1]
    if j > 0 and accepted[j - 1, i]:
        b = dist[j - 1, i]
    if j < h - 1 and accepted[j + 1, i] and dist[j + 1, i] < b:
        b = dist[j + 1, i]

    f = cost[j, i]
    if a != INFINITY and b != INFINITY:
        qa = inv_hx2 + inv_hy2
        qb = -2.0 * (a * inv_hx2 + b * inv_hy2)
        qc = a * a * inv_hx2 + b * b * inv_hy2 - f * f
        disc = qb * qb - 4.0 * qa * qc
        if disc >= 0.0:
            d = (-qb + sqrt(disc)) / (2.0 * qa)
            if d >= (a if a > b else b):
                return d
        da = a + f * hx
        db = b + f * hy
        return da if da < db else db
    if a != INFINITY:
        return a + f * hx
    return b + f * hy


def fast_march(cost, seed_cols, seed_rows, double hx, double hy):
    """See ``pyref.fast_march``; identical contract and output."""
    cdef double[:, ::1] c = np.ascontiguousarray(cost, dtype=np.float64)
    cdef cnp.int64_t[::1] sc = np.ascontiguousarray(seed_cols, dtype=np.int64)
    cdef cnp.int64_t[::1] sr = np.ascontiguousarray(seed_rows, dtype=np.int64)
    cdef Py_ssize_t h = c.shape[0]
    cdef Py_ssize_t w = c.shape[1]
    cdef double inv_hx2 = 1.0 / (hx * hx)
    cdef double inv_hy2 = 1.0 / (hy * hy)

    dist_arr = np.full((h, w), np.inf)
    acc_arr = np.zeros((h, w), dtype=np.uint8)
    cdef double[:, ::1] dist = dist_arr
    cdef cnp.uint8_t[:, ::1] accepted = acc_arr

    cdef Py_ssize_t nseeds = sc.shape[0]
    heap_d_arr = np.empty(4 * h * w + nseeds + 8)
    heap_i_arr = np.empty(4 * h * w + nseeds + 8, dtype=np.int64)
    cdef double[::1] heap_d = heap_d_arr
    cdef cnp.int64_t[::1] heap_i = heap_i_arr
    cdef Py_ssize_t heap_size = 0

    cdef Py_ssize_t k, i, j, ni, nj, t
    cdef double d, nd
    cdef cnp.int64_t flat
    for k in range(nseeds):
        i = sc[k]
        j = sr[k]
        if dist[j, i] != 0.0:
            dist[j, i] = 0.0
            _heap_push(heap_d, heap_i, &heap_size, 0.0, j * w + i)

    cdef Py_ssize_t[4] di
    cdef Py_ssize_t[4] dj
    di[0] = -1; dj[0] = 0
    di[1] = 1;  dj[1] = 0
    di[2] = 0;  dj[2] = -1
    di[3] = 0;  dj[3] = 1

    while heap_size > 0:
        _heap_pop(heap_d, heap_i, &heap_size, &d, &flat)
        j = flat // w
        i = flat - j * w
        if accepted[j, i]:
            continue
        accepted[j, i] = 1
        for t in range(4):
            ni = i + di[t]
            nj = j + dj[t]
            if 0 <= ni < w and 0 <= nj < h and not accepted[nj, ni]:
                nd = _godunov_update(dist, accepted, c, ni, nj, w, h,
                                     hx, hy, inv_hx2, inv_hy2)
                if nd < dist[nj, ni]:
                    dist[nj, ni] = nd
                    _heap_push(heap_d, heap_i, &heap_size, nd, nj * w + ni)
    return dist_arr


def gauss_seidel_sweeps(u0, z, ce, cw, cn, cs, double iota, int sweeps):
    """See ``pyref.gauss_seidel_sweeps``; identical contract and output."""
    u_arr = np.array(u0, dtype=np.float64, order="C")
    cdef double[:, ::1] u = u_arr
    cdef double[:, ::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[:, ::1] e = np.ascontiguousarray(ce, dtype=np.float64)
    cdef double[:, ::1] wc = np.ascontiguousarray(cw, dtype=np.float64)
    cdef double[:, ::1] n = np.ascontiguousarray(cn, dtype=np.float64)
    cdef double[:, ::1] s = np.ascontiguousarray(cs, dtype=np.float64)
    cdef Py_ssize_t h = u.shape[0]
    cdef Py_ssize_t w = u.shape[1]
    cdef Py_ssize_t i, j, jn, js, ie, iw
    cdef int sweep
    cdef double num, ec, wcc, nc, sc

    for sweep in range(sweeps):
        for j in range(h):
            jn = j - 1 if j > 0 else 0
            js = j + 1 if j < h - 1 else h - 1
            for i in range(w):
                ie = i + 1 if i < w - 1 else w - 1
                iw = i - 1 if i > 0 else 0
                ec = e[j, i]
                wcc = wc[j, i]
                nc = n[j, i]
                sc = s[j, i]
                num = (ec * u[j, ie] + wcc * u[j, iw] + nc * u[jn, i]
                       + sc * u[js, i] + iota * zv[j, i])
                u[j, i] = num / (ec + wcc + nc + sc + iota)
    return u_arr


def solve_tridiagonal_batched(lower, diag, upper, rhs):
    """See ``pyref.solve_tridiagonal_batched``; identical contract and output."""
    cdef double[:, ::1] dg = np.ascontiguousarray(diag, dtype=np.float64)
    cdef double[:, ::1] r = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef Py_ssize_t m = r.shape[0]
    cdef Py_ssize_t n = r.shape[1]
    cdef Py_ssize_t k, i

    x_arr = np.empty((m, n))
    cdef double[:, ::1] x = x_arr

    if n == 1:
        for k in range(m):
            if dg[k, 0] == 0.0:
                raise ValueError("singular line system")
            x[k, 0] = r[k, 0] / dg[k, 0]
        return x_arr

    cdef double[:, ::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef double[:, ::1] up = np.ascontiguousarray(upper, dtype=np.float64)
    cp_arr = np.empty((m, n - 1))
    dp_arr = np.empty((m, n))
    cdef double[:, ::1] cp = cp_arr
    cdef double[:, ::1] dp = dp_arr
    cdef double denom

    for k in range(m):
        if dg[k, 0] == 0.0:
            raise ValueError("singular line system")
        cp[k, 0] = up[k, 0] / dg[k, 0]
        dp[k, 0] = r[k, 0] / dg[k, 0]
        for i in range(1, n):
            denom = dg[k, i] - lo[k, i - 1] * cp[k, i - 1]
            if denom == 0.0:
                raise ValueError("singular line system")
            if i < n - 1:
                cp[k, i] = up[k, i] / denom
            dp[k, i] = (r[k, i] - lo[k, i - 1] * dp[k, i - 1]) / denom
        x[k, n - 1] = dp[k, n - 1]
        for i in range(n - 2, -1, -1):
            x[k, i] = dp[k, i] - cp[k, i] * x[k, i + 1]
    return x_arr
