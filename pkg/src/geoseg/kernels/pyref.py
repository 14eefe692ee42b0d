"""Pure-Python reference implementations of the hot kernels.

These mirror the compiled extension in ``_native.pyx`` operation for
operation (same arithmetic, same ordering) so the two backends produce
bit-identical output. They are the fallback when the extension is not
built and the baseline for the kernel benchmark.
"""

import heapq
import math

import numpy as np

BACKEND = "python"


def fast_march(cost, seed_cols, seed_rows, hx, hy):
    """First-order upwind fast marching for |grad D| = cost, D = 0 on seeds.

    4-neighbour Godunov update with one-sided fallback; the narrow band is
    a binary heap keyed by (tentative value, row-major index) so ties pop
    deterministically. Returns the arrival-time array (same shape as cost).
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    h, w = cost.shape
    inv_hx2 = 1.0 / (hx * hx)
    inv_hy2 = 1.0 / (hy * hy)
    dist = np.full((h, w), np.inf)
    accepted = np.zeros((h, w), dtype=np.uint8)

    heap = []
    for k in range(len(seed_cols)):
        i = int(seed_cols[k])
        j = int(seed_rows[k])
        if dist[j, i] != 0.0:
            dist[j, i] = 0.0
            heapq.heappush(heap, (0.0, j * w + i))

    while heap:
        d, flat = heapq.heappop(heap)
        j, i = divmod(flat, w)
        if accepted[j, i]:
            continue
        accepted[j, i] = 1
        for ni, nj in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
            if 0 <= ni < w and 0 <= nj < h and not accepted[nj, ni]:
                nd = _godunov_update(dist, accepted, cost, ni, nj, w, h,
                                     hx, hy, inv_hx2, inv_hy2)
                if nd < dist[nj, ni]:
                    dist[nj, ni] = nd
                    heapq.heappush(heap, (nd, nj * w + ni))
    return dist


def _godunov_update(dist, accepted, cost, i, j, w, h, hx, hy, inv_hx2, inv_hy2):
    a = math.inf
    if i > 0 and accepted[j, i - 1]:
        a = dist[j, i - 1]
    if i < w - 1 and accepted[j, i + 1] and dist[j, i + 1] < a:
        a = dist[j, i + 1]
    b = math.inf
    if j > 0 and accepted[j - 1, i]:
        b = dist[j - 1, i]
    if j < h - 1 and accepted[j + 1, i] and dist[j + 1, i] < b:
        b = dist[j + 1, i]

    f = cost[j, i]
    if a != math.inf and b != math.inf:
        qa = inv_hx2 + inv_hy2
        qb = -2.0 * (a * inv_hx2 + b * inv_hy2)
        qc = a * a * inv_hx2 + b * b * inv_hy2 - f * f
        disc = qb * qb - 4.0 * qa * qc
        if disc >= 0.0:
            d = (-qb + math.sqrt(disc)) / (2.0 * qa)
            if d >= (a if a > b else b):
                return d
        da = a + f * hx
        db = b + f * hy
        return da if da < db else db
    if a != math.inf:
        return a + f * hx
    return b + f * hy


def gauss_seidel_sweeps(u0, z, ce, cw, cn, cs, iota, sweeps):
    """Lexicographic Gauss-Seidel sweeps of the anchored diffusion update.

    ce/cw/cn/cs are the frozen neighbour coefficients toward i+1, i-1,
    j-1, j+1 (zero on the outward boundary sides). Each pixel update is
    u = (ce*u_e + cw*u_w + cn*u_n + cs*u_s + iota*z) / (ce+cw+cn+cs+iota),
    applied in row-major order using already-updated values.
    """
    h, w = u0.shape
    u = [list(row) for row in np.asarray(u0, dtype=np.float64)]
    zl = [list(row) for row in np.asarray(z, dtype=np.float64)]
    cel = [list(row) for row in np.asarray(ce, dtype=np.float64)]
    cwl = [list(row) for row in np.asarray(cw, dtype=np.float64)]
    cnl = [list(row) for row in np.asarray(cn, dtype=np.float64)]
    csl = [list(row) for row in np.asarray(cs, dtype=np.float64)]

    for _ in range(sweeps):
        for j in range(h):
            jn = j - 1 if j > 0 else 0
            js = j + 1 if j < h - 1 else h - 1
            row = u[j]
            row_n = u[jn]
            row_s = u[js]
            for i in range(w):
                ie = i + 1 if i < w - 1 else w - 1
                iw = i - 1 if i > 0 else 0
                e = cel[j][i]
                wc = cwl[j][i]
                n = cnl[j][i]
                s = csl[j][i]
                num = (e * row[ie] + wc * row[iw] + n * row_n[i]
                       + s * row_s[i] + iota * zl[j][i])
                row[i] = num / (e + wc + n + s + iota)
    return np.array(u, dtype=np.float64)


def solve_tridiagonal_batched(lower, diag, upper, rhs):
    """Thomas algorithm for a batch of independent tridiagonal systems.

    Shapes: lower/upper (m, n-1), diag/rhs (m, n); row k holds one system.
    Vectorized across the batch; raises ValueError on a zero pivot.
    """
    diag = np.asarray(diag, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    m, n = rhs.shape
    if n == 1:
        if np.any(diag[:, 0] == 0.0):
            raise ValueError("singular line system")
        return rhs / diag

    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    cp = np.empty((m, n - 1))
    dp = np.empty((m, n))
    if np.any(diag[:, 0] == 0.0):
        raise ValueError("singular line system")
    cp[:, 0] = upper[:, 0] / diag[:, 0]
    dp[:, 0] = rhs[:, 0] / diag[:, 0]
    for i in range(1, n):
        denom = diag[:, i] - lower[:, i - 1] * cp[:, i - 1]
        if np.any(denom == 0.0):
            raise ValueError("singular line system")
        if i < n - 1:
            cp[:, i] = upper[:, i] / denom
        dp[:, i] = (rhs[:, i] - lower[:, i - 1] * dp[:, i - 1]) / denom

    x = np.empty((m, n))
    x[:, n - 1] = dp[:, n - 1]
    for i in range(n - 2, -1, -1):
        x[:, i] = dp[:, i] - cp[:, i] * x[:, i + 1]
    return x
