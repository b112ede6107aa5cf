"""Hot numeric kernels with numba-jitted primaries and pure-numpy fallbacks.

Set CAGEFLOW_NUMBA=0 to force the fallback path (useful on platforms where
numba is unavailable and for benchmarking, see benchmarks/bench_kernels.py).
Both paths are exercised by tests/test_kernels.py.
"""

import heapq
import os

import numpy as np

_flag = os.environ.get("CAGEFLOW_NUMBA", "1").strip().lower()
NUMBA_ENABLED = _flag not in ("0", "false", "off", "no")

if NUMBA_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        NUMBA_ENABLED = False

_INF = np.int64(1) << 40


# ---------------------------------------------------------------- BFS field

def bfs_distance_numpy(nav, sources):
    """Multi-source 4-connected unit-cost distances; -1 where unreachable."""
    d = np.full(nav.shape, _INF, dtype=np.int64)
    d[sources & nav] = 0
    while True:
        nd = d.copy()
        nd[1:, :] = np.minimum(nd[1:, :], d[:-1, :] + 1)
        nd[:-1, :] = np.minimum(nd[:-1, :], d[1:, :] + 1)
        nd[:, 1:] = np.minimum(nd[:, 1:], d[:, :-1] + 1)
        nd[:, :-1] = np.minimum(nd[:, :-1], d[:, 1:] + 1)
        nd[~nav] = _INF
        if np.array_equal(nd, d):
            break
        d = nd
    out = np.where(d >= _INF, -1, d).astype(np.int32)
    out[~nav] = -1
    return out


if NUMBA_ENABLED:

    @njit(cache=True)
    def _bfs_distance_nb(nav, sources):
        p, q = nav.shape
        dist = np.full((p, q), -1, dtype=np.int32)
        qi = np.empty(p * q, dtype=np.int32)
        qj = np.empty(p * q, dtype=np.int32)
        head = 0
        tail = 0
        for i in range(p):
            for j in range(q):
                if sources[i, j] and nav[i, j]:
                    dist[i, j] = 0
                    qi[tail] = i
                    qj[tail] = j
                    tail += 1
        while head < tail:
            i = qi[head]
            j = qj[head]
            head += 1
            d = dist[i, j] + 1
            if i > 0 and nav[i - 1, j] and dist[i - 1, j] < 0:
                dist[i - 1, j] = d
                qi[tail] = i - 1
                qj[tail] = j
                tail += 1
            if i + 1 < p and nav[i + 1, j] and dist[i + 1, j] < 0:
                dist[i + 1, j] = d
                qi[tail] = i + 1
                qj[tail] = j
                tail += 1
            if j > 0 and nav[i, j - 1] and dist[i, j - 1] < 0:
                dist[i, j - 1] = d
                qi[tail] = i
                qj[tail] = j - 1
                tail += 1
            if j + 1 < q and nav[i, j + 1] and dist[i, j + 1] < 0:
                dist[i, j + 1] = d
                qi[tail] = i
                qj[tail] = j + 1
                tail += 1
        return dist

    def bfs_distance_numba(nav, sources):
        return _bfs_distance_nb(np.ascontiguousarray(nav), np.ascontiguousarray(sources))

    bfs_distance = bfs_distance_numba
else:
    bfs_distance = bfs_distance_numpy


# ---------------------------------------------------------- visibility runs

def run_lengths_numpy(nav):
    """Per-cell horizontal and vertical navigable run lengths (0 on obstacles)."""
    p, q = nav.shape
    obst = ~nav

    gid = np.cumsum(obst, axis=1) + (np.arange(p, dtype=np.int64) * (q + 1))[:, None]
    counts = np.bincount(gid[nav], minlength=p * (q + 1))
    vx = np.zeros((p, q), dtype=np.int32)
    vx[nav] = counts[gid[nav]]

    gid = np.cumsum(obst, axis=0) + (np.arange(q, dtype=np.int64) * (p + 1))[None, :]
    counts = np.bincount(gid[nav], minlength=q * (p + 1))
    vy = np.zeros((p, q), dtype=np.int32)
    vy[nav] = counts[gid[nav]]
    return vx, vy


if NUMBA_ENABLED:

    @njit(cache=True)
    def _run_lengths_nb(nav):
        p, q = nav.shape
        vx = np.zeros((p, q), dtype=np.int32)
        vy = np.zeros((p, q), dtype=np.int32)
        for i in range(p):
            j = 0
            while j < q:
                if nav[i, j]:
                    j0 = j
                    while j < q and nav[i, j]:
                        j += 1
                    for jj in range(j0, j):
                        vx[i, jj] = j - j0
                else:
                    j += 1
        for j in range(q):
            i = 0
            while i < p:
                if nav[i, j]:
                    i0 = i
                    while i < p and nav[i, j]:
                        i += 1
                    for ii in range(i0, i):
                        vy[ii, j] = i - i0
                else:
                    i += 1
        return vx, vy

    def run_lengths_numba(nav):
        return _run_lengths_nb(np.ascontiguousarray(nav))

    run_lengths = run_lengths_numba
else:
    run_lengths = run_lengths_numpy


# ------------------------------------------------------- region segmentation

def segment_sweep_numpy(nav, vx, vy):
    """Row-major greedy sweep into equal-tuple rectangles.

    Returns (region_id grid, regions array of rows [i0, j0, h, w, vx, vy]).
    """
    p, q = nav.shape
    rid = np.full((p, q), -1, dtype=np.int32)
    rows = []
    for i in range(p):
        j = 0
        while j < q:
            if not nav[i, j] or rid[i, j] >= 0:
                j += 1
                continue
            tx = vx[i, j]
            ty = vy[i, j]
            j2 = j
            while (
                j2 + 1 < q
                and nav[i, j2 + 1]
                and rid[i, j2 + 1] < 0
                and vx[i, j2 + 1] == tx
                and vy[i, j2 + 1] == ty
            ):
                j2 += 1
            i2 = i
            while i2 + 1 < p:
                strip = slice(j, j2 + 1)
                ok = (
                    nav[i2 + 1, strip].all()
                    and (rid[i2 + 1, strip] < 0).all()
                    and (vx[i2 + 1, strip] == tx).all()
                    and (vy[i2 + 1, strip] == ty).all()
                )
                if not ok:
                    break
                i2 += 1
            rid[i : i2 + 1, j : j2 + 1] = len(rows)
            rows.append((i, j, i2 - i + 1, j2 - j + 1, tx, ty))
            j = j2 + 1
    regions = np.array(rows, dtype=np.int32).reshape(len(rows), 6)
    return rid, regions


if NUMBA_ENABLED:

    @njit(cache=True)
    def _segment_sweep_nb(nav, vx, vy):
        p, q = nav.shape
        rid = np.full((p, q), -1, dtype=np.int32)
        out = np.empty((p * q, 6), dtype=np.int32)
        k = 0
        for i in range(p):
            j = 0
            while j < q:
                if not nav[i, j] or rid[i, j] >= 0:
                    j += 1
                    continue
                tx = vx[i, j]
                ty = vy[i, j]
                j2 = j
                while (
                    j2 + 1 < q
                    and nav[i, j2 + 1]
                    and rid[i, j2 + 1] < 0
                    and vx[i, j2 + 1] == tx
                    and vy[i, j2 + 1] == ty
                ):
                    j2 += 1
                i2 = i
                ok = True
                while ok and i2 + 1 < p:
                    for jj in range(j, j2 + 1):
                        if (
                            not nav[i2 + 1, jj]
                            or rid[i2 + 1, jj] >= 0
                            or vx[i2 + 1, jj] != tx
                            or vy[i2 + 1, jj] != ty
                        ):
                            ok = False
                            break
                    if ok:
                        i2 += 1
                for ii in range(i, i2 + 1):
                    for jj in range(j, j2 + 1):
                        rid[ii, jj] = k
                out[k, 0] = i
                out[k, 1] = j
                out[k, 2] = i2 - i + 1
                out[k, 3] = j2 - j + 1
                out[k, 4] = tx
                out[k, 5] = ty
                k += 1
                j = j2 + 1
        return rid, out[:k].copy()

    def segment_sweep_numba(nav, vx, vy):
        return _segment_sweep_nb(
            np.ascontiguousarray(nav), np.ascontiguousarray(vx), np.ascontiguousarray(vy)
        )

    segment_sweep = segment_sweep_numba
else:
    segment_sweep = segment_sweep_numpy


# ------------------------------------------------------ agent pair repulsion

def pair_repulsion_numpy(pos, diameter, strength, cutoff, decay):
    """Summed pairwise exponential repulsion accelerations, (N, 2)."""
    n = pos.shape[0]
    if n < 2:
        return np.zeros_like(pos)
    delta = pos[:, None, :] - pos[None, :, :]
    d = np.sqrt((delta**2).sum(axis=-1))
    np.fill_diagonal(d, np.inf)
    d = np.maximum(d, 1e-9)
    mag = strength * np.exp((diameter - d) / decay)
    mag[d > cutoff] = 0.0
    return (mag[..., None] * delta / d[..., None]).sum(axis=1)


if NUMBA_ENABLED:

    @njit(cache=True)
    def _pair_repulsion_nb(pos, diameter, strength, cutoff, decay):
        n = pos.shape[0]
        out = np.zeros((n, 2), dtype=np.float64)
        for a in range(n):
            for b in range(n):
                if a == b:
                    continue
                dx = pos[a, 0] - pos[b, 0]
                dy = pos[a, 1] - pos[b, 1]
                d = np.sqrt(dx * dx + dy * dy)
                if d > cutoff:
                    continue
                if d < 1e-9:
                    d = 1e-9
                mag = strength * np.exp((diameter - d) / decay)
                out[a, 0] += mag * dx / d
                out[a, 1] += mag * dy / d
        return out

    def pair_repulsion_numba(pos, diameter, strength, cutoff, decay):
        return _pair_repulsion_nb(np.ascontiguousarray(pos), diameter, strength, cutoff, decay)

    pair_repulsion = pair_repulsion_numba
else:
    pair_repulsion = pair_repulsion_numpy


# -------------------------------------------------------- occupancy counting

def occupancy_counts_numpy(cells_i, cells_j, p, q):
    counts = np.zeros((p, q), dtype=np.int64)
    np.add.at(counts, (cells_i, cells_j), 1)
    return counts


if NUMBA_ENABLED:

    @njit(cache=True)
    def _occupancy_counts_nb(cells_i, cells_j, p, q):
        counts = np.zeros((p, q), dtype=np.int64)
        for k in range(cells_i.shape[0]):
            counts[cells_i[k], cells_j[k]] += 1
        return counts

    def occupancy_counts_numba(cells_i, cells_j, p, q):
        return _occupancy_counts_nb(
            np.ascontiguousarray(cells_i, dtype=np.int64),
            np.ascontiguousarray(cells_j, dtype=np.int64),
            p,
            q,
        )

    occupancy_counts = occupancy_counts_numba
else:
    occupancy_counts = occupancy_counts_numpy


# ---------------------------------------------- weighted goal distance field

def weighted_goal_field_numpy(nav, goals, enter_cost):
    """Multi-source Dijkstra field; cost of a step is enter_cost of the cell
    stepped into. Goal cells are 0; unreachable cells are +inf."""
    p, q = nav.shape
    dist = np.full((p, q), np.inf)
    heap = []
    for i, j in zip(*np.nonzero(goals & nav)):
        dist[i, j] = 0.0
        heapq.heappush(heap, (0.0, int(i), int(j)))
    while heap:
        d, i, j = heapq.heappop(heap)
        if d > dist[i, j]:
            continue
        for ni, nj in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
            if 0 <= ni < p and 0 <= nj < q and nav[ni, nj]:
                nd = d + enter_cost[ni, nj]
                if nd < dist[ni, nj]:
                    dist[ni, nj] = nd
                    heapq.heappush(heap, (nd, ni, nj))
    return dist


if NUMBA_ENABLED:

    @njit(cache=True)
    def _weighted_field_nb(nav, goals, enter_cost):
        p, q = nav.shape
        n = p * q
        dist = np.full(n, np.inf)
        hkey = np.empty(4 * n + 8, dtype=np.float64)
        hval = np.empty(4 * n + 8, dtype=np.int64)
        m = 0
        for i in range(p):
            for j in range(q):
                if goals[i, j] and nav[i, j]:
                    c = i * q + j
                    dist[c] = 0.0
                    # push (0, c)
                    hkey[m] = 0.0
                    hval[m] = c
                    k = m
                    m += 1
                    while k > 0:
                        parent = (k - 1) // 2
                        if hkey[parent] <= hkey[k]:
                            break
                        hkey[parent], hkey[k] = hkey[k], hkey[parent]
                        hval[parent], hval[k] = hval[k], hval[parent]
                        k = parent
        while m > 0:
            d = hkey[0]
            c = hval[0]
            m -= 1
            hkey[0] = hkey[m]
            hval[0] = hval[m]
            k = 0
            while True:
                left = 2 * k + 1
                right = left + 1
                smallest = k
                if left < m and hkey[left] < hkey[smallest]:
                    smallest = left
                if right < m and hkey[right] < hkey[smallest]:
                    smallest = right
                if smallest == k:
                    break
                hkey[smallest], hkey[k] = hkey[k], hkey[smallest]
                hval[smallest], hval[k] = hval[k], hval[smallest]
                k = smallest
            if d > dist[c]:
                continue
            i = c // q
            j = c % q
            for t in range(4):
                if t == 0:
                    ni, nj = i - 1, j
                elif t == 1:
                    ni, nj = i + 1, j
                elif t == 2:
                    ni, nj = i, j - 1
                else:
                    ni, nj = i, j + 1
                if ni < 0 or ni >= p or nj < 0 or nj >= q or not nav[ni, nj]:
                    continue
                nd = d + enter_cost[ni, nj]
                nc = ni * q + nj
                if nd < dist[nc]:
                    dist[nc] = nd
                    if m >= hkey.shape[0]:
                        nk = np.empty(hkey.shape[0] * 2, dtype=np.float64)
                        nv = np.empty(hkey.shape[0] * 2, dtype=np.int64)
                        nk[: hkey.shape[0]] = hkey
                        nv[: hval.shape[0]] = hval
                        hkey = nk
                        hval = nv
                    hkey[m] = nd
                    hval[m] = nc
                    k = m
                    m += 1
                    while k > 0:
                        parent = (k - 1) // 2
                        if hkey[parent] <= hkey[k]:
                            break
                        hkey[parent], hkey[k] = hkey[k], hkey[parent]
                        hval[parent], hval[k] = hval[k], hval[parent]
                        k = parent
        return dist.reshape(p, q)

    def weighted_goal_field_numba(nav, goals, enter_cost):
        return _weighted_field_nb(
            np.ascontiguousarray(nav),
            np.ascontiguousarray(goals),
            np.ascontiguousarray(enter_cost, dtype=np.float64),
        )

    weighted_goal_field = weighted_goal_field_numba
else:
    weighted_goal_field = weighted_goal_field_numpy
