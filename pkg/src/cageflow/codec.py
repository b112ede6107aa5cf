"""Lossless encoding of scenarios into fixed n-by-n capacity tensors.

Navigable space is segmented into rectangular regions of equal visibility
tuple (horizontal run length, vertical run length). Each region may be
shrunk by integer factors per axis; the per-cell capacity channels record
how many original cells a compressed cell stands for. A plan is valid only
if the compressed grid preserves every navigable adjacency of the original
and introduces none, which check_consistency verifies directly.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import DimensionMismatchError, DoesNotFitError, InconsistentPlanError
from .grid import UNREACHABLE, Environment, Scenario, Violation

DEFAULT_N = 64


@dataclass(frozen=True, eq=False)
class VisibilityGrid:
    """Per-cell navigable run lengths along each axis; (0, 0) on obstacles."""

    vx: np.ndarray
    vy: np.ndarray


@dataclass(frozen=True)
class Region:
    """Maximal axis-aligned rectangle of cells sharing one visibility tuple."""

    id: int
    row0: int
    col0: int
    height: int
    width: int
    tuple_value: tuple

    @property
    def row1(self) -> int:
        return self.row0 + self.height

    @property
    def col1(self) -> int:
        return self.col0 + self.width

    @property
    def area(self) -> int:
        return self.height * self.width


@dataclass(frozen=True)
class Placement:
    """A region with its compression factors and compressed-grid position."""

    region: Region
    fx: int = 1
    fy: int = 1
    crow0: int = 0
    ccol0: int = 0

    @property
    def cheight(self) -> int:
        return self.region.height // self.fy

    @property
    def cwidth(self) -> int:
        return self.region.width // self.fx

    @property
    def capacity(self) -> int:
        return self.fx * self.fy


@dataclass
class CompressionPlan:
    """Per-region geometry mapping original cells to compressed cells."""

    placements: list
    original_shape: tuple
    compressed_shape: tuple  # pre-padding (trimmed) dimensions
    n: int
    trim: tuple = (0, 0, 0, 0)  # rows removed top/bottom, cols removed left/right
    does_not_fit: bool = False

    def cell_map(self):
        """(crow, ccol) int32 arrays over the original grid; -1 off-region."""
        p, q = self.original_shape
        crow = np.full((p, q), -1, dtype=np.int32)
        ccol = np.full((p, q), -1, dtype=np.int32)
        for pl in self.placements:
            r = pl.region
            ii = np.arange(r.height) // pl.fy + pl.crow0
            jj = np.arange(r.width) // pl.fx + pl.ccol0
            crow[r.row0 : r.row1, r.col0 : r.col1] = ii[:, None]
            ccol[r.row0 : r.row1, r.col0 : r.col1] = jj[None, :]
        return crow, ccol

    def capacity_grids(self):
        """(cx, cy) int32 capacity channels at compressed dimensions; 1 on filler."""
        ph, pw = self.compressed_shape
        cx = np.ones((ph, pw), dtype=np.int32)
        cy = np.ones((ph, pw), dtype=np.int32)
        for pl in self.placements:
            cx[pl.crow0 : pl.crow0 + pl.cheight, pl.ccol0 : pl.ccol0 + pl.cwidth] = pl.fx
            cy[pl.crow0 : pl.crow0 + pl.cheight, pl.ccol0 : pl.ccol0 + pl.cwidth] = pl.fy
        return cx, cy


@dataclass(frozen=True, eq=False)
class CageTensor:
    """The five-channel fixed-size representation [Cx, Cy, A, G, E].

    Channels are stored at n-by-n after top-left-anchored obstacle padding;
    g keeps raw path lengths with the UNREACHABLE sentinel (normalization
    happens at serialization time).
    """

    cx: np.ndarray
    cy: np.ndarray
    a: np.ndarray
    g: np.ndarray
    e: np.ndarray
    n: int
    original_shape: tuple
    compressed_shape: tuple
    trim: tuple
    seed: int = 0

    def channels_float32(self) -> np.ndarray:
        """(5, n, n) float32 in channel order [Cx, Cy, A, G, E]; G normalized
        by its maximum finite distance, UNREACHABLE and obstacles as 1.0."""
        finite = self.g >= 0
        mx = int(self.g[finite].max()) if finite.any() else 0
        gser = np.where(finite, self.g / mx if mx > 0 else 0.0, 1.0)
        return np.stack(
            [
                self.cx.astype(np.float32),
                self.cy.astype(np.float32),
                self.a.astype(np.float32),
                gser.astype(np.float32),
                self.e.astype(np.float32),
            ]
        )


@dataclass(frozen=True, eq=False)
class FlowMap:
    """Per-cell long-term crowd density in [0, 1]; zero on obstacle cells."""

    values: np.ndarray
    resolution: str = "original"  # or "compressed"

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))


# ----------------------------------------------------------------- encoding

def visibility(env: Environment) -> VisibilityGrid:
    vx, vy = _kernels.run_lengths(env.nav)
    return VisibilityGrid(vx=vx, vy=vy)


def segment_regions(vis: VisibilityGrid, env: Environment) -> list:
    """Partition navigable cells into equal-tuple rectangles, row-major sweep."""
    _, rows = _kernels.segment_sweep(env.nav, vis.vx, vis.vy)
    return [
        Region(
            id=k,
            row0=int(r[0]),
            col0=int(r[1]),
            height=int(r[2]),
            width=int(r[3]),
            tuple_value=(int(r[4]), int(r[5])),
        )
        for k, r in enumerate(rows)
    ]


def _region_grid(placements, shape):
    rid = np.full(shape, -1, dtype=np.int32)
    for k, pl in enumerate(placements):
        r = pl.region
        rid[r.row0 : r.row1, r.col0 : r.col1] = k
    return rid


def _contiguous_pairs(rid):
    """Pairs of region indices sharing a seam, per axis.

    x-pairs (a, b): a immediately left of b; y-pairs: a immediately above b.
    """
    a, b = rid[:, :-1], rid[:, 1:]
    m = (a >= 0) & (b >= 0) & (a != b)
    x_pairs = set(zip(a[m].tolist(), b[m].tolist()))
    a, b = rid[:-1, :], rid[1:, :]
    m = (a >= 0) & (b >= 0) & (a != b)
    y_pairs = set(zip(a[m].tolist(), b[m].tolist()))
    return sorted(x_pairs), sorted(y_pairs)


def _gcd_all(values) -> int:
    g = 0
    for v in values:
        g = math.gcd(g, v)
    return g


def _component_factors(placements, x_pairs, y_pairs):
    """Greedy-maximal factors: within each seam-connected cluster the shared
    factor is the largest divisor consistent with every seam (equal extents
    and aligned block phases); isolated extents take the extent itself."""
    k = len(placements)
    fy = [0] * k
    fx = [0] * k

    def solve(pairs, extent, origin):
        # union-find over the contiguity graph
        parent = list(range(k))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in pairs:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
        comp_edges = {}
        for a, b in pairs:
            comp_edges.setdefault(find(a), []).append((a, b))
        members = {}
        for i in range(k):
            members.setdefault(find(i), []).append(i)
        out = [0] * k
        for root, idxs in members.items():
            exts = [extent(placements[i].region) for i in idxs]
            edges = comp_edges.get(root, [])
            if any(extent(placements[a].region) != extent(placements[b].region) for a, b in edges):
                f = 1
            else:
                deltas = [
                    abs(origin(placements[a].region) - origin(placements[b].region))
                    for a, b in edges
                ]
                f = _gcd_all(exts + deltas)
            for i in idxs:
                out[i] = max(1, f)
        return out

    # contiguity along x constrains the y factor and vice versa
    fy = solve(x_pairs, lambda r: r.height, lambda r: r.row0)
    fx = solve(y_pairs, lambda r: r.width, lambda r: r.col0)
    return fx, fy


def _solve_layout(geom, fx, fy, adj):
    """Assign compressed origins by propagating seam equations.

    geom is (row0, col0, height, width) int lists; adj[u] holds edges
    (a, b, is_x) with a immediately left of (x) or above (y) b. Returns
    (rows, cols, None) on success or (None, None, (axis, a, b)) naming the
    edge whose equation failed to close (a compression-factor cycle
    mismatch around an obstacle island, typically).
    """
    row0, col0, hs, ws = geom
    k = len(row0)
    rows = [None] * k
    cols = [0] * k
    for start in range(k):
        if rows[start] is not None:
            continue
        rows[start] = 0
        cols[start] = 0
        stack = [start]
        while stack:
            u = stack.pop()
            ru, cu = rows[u], cols[u]
            for ia, ib, is_x in adj[u]:
                if is_x:
                    wit = row0[ia] if row0[ia] > row0[ib] else row0[ib]
                    dr = (wit - row0[ia]) // fy[ia] - (wit - row0[ib]) // fy[ib]
                    dc = ws[ia] // fx[ia]
                else:
                    wit = col0[ia] if col0[ia] > col0[ib] else col0[ib]
                    dr = hs[ia] // fy[ia]
                    dc = (wit - col0[ia]) // fx[ia] - (wit - col0[ib]) // fx[ib]
                if u == ia:
                    v, wr, wc = ib, ru + dr, cu + dc
                else:
                    v, wr, wc = ia, ru - dr, cu - dc
                if rows[v] is None:
                    rows[v] = wr
                    cols[v] = wc
                    stack.append(v)
                elif rows[v] != wr or cols[v] != wc:
                    bad_axis = "y" if rows[v] != wr else "x"
                    return None, None, (bad_axis, ia, ib)
    minr = min(rows)
    minc = min(cols)
    return [r - minr for r in rows], [c - minc for c in cols], None


def _nav_bbox(nav):
    rows = np.nonzero(nav.any(axis=1))[0]
    cols = np.nonzero(nav.any(axis=0))[0]
    return int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1])


def _simple_plan(regions, env, n, trim_to_bbox):
    p, q = env.shape
    if trim_to_bbox:
        r0, r1, c0, c1 = _nav_bbox(env.nav)
        trim = (r0, p - 1 - r1, c0, q - 1 - c1)
        shape = (r1 - r0 + 1, c1 - c0 + 1)
    else:
        r0 = c0 = 0
        trim = (0, 0, 0, 0)
        shape = (p, q)
    placements = [
        Placement(region=r, fx=1, fy=1, crow0=r.row0 - r0, ccol0=r.col0 - c0)
        for r in regions
    ]
    return CompressionPlan(
        placements=placements,
        original_shape=(p, q),
        compressed_shape=shape,
        n=n,
        trim=trim,
        does_not_fit=shape[0] > n or shape[1] > n,
    )


def _placement_arrays(placements):
    n = len(placements)
    arr = np.empty((6, n), dtype=np.int64)
    for k, pl in enumerate(placements):
        arr[:, k] = (pl.region.row0, pl.region.col0, pl.fy, pl.fx, pl.crow0, pl.ccol0)
    return arr


def _created_adjacency_pairs(arrs, cpid):
    """Adjacent compressed cells whose source blocks do not touch, vectorized.

    Yields (axis, a_idx, b_idx, ci, cj) for the first offender per axis.
    """
    row0, col0, fy, fx, crow0, ccol0 = arrs
    out = []
    for axis, (va, vb, di, dj) in (
        ("y", ((slice(None, -1), slice(None)), (slice(1, None), slice(None)), 1, 0)),
        ("x", ((slice(None), slice(None, -1)), (slice(None), slice(1, None)), 0, 1)),
    ):
        a, b = cpid[va], cpid[vb]
        m = (a >= 0) & (b >= 0) & (a != b)
        if not m.any():
            continue
        ci, cj = np.nonzero(m)
        ka, kb = a[ci, cj], b[ci, cj]
        ai0 = row0[ka] + (ci - crow0[ka]) * fy[ka]
        ai1 = ai0 + fy[ka]
        aj0 = col0[ka] + (cj - ccol0[ka]) * fx[ka]
        aj1 = aj0 + fx[ka]
        bi0 = row0[kb] + (ci + di - crow0[kb]) * fy[kb]
        bi1 = bi0 + fy[kb]
        bj0 = col0[kb] + (cj + dj - ccol0[kb]) * fx[kb]
        bj1 = bj0 + fx[kb]
        rows_overlap = (ai0 < bi1) & (bi0 < ai1)
        cols_overlap = (aj0 < bj1) & (bj0 < aj1)
        cols_abut = (ai1 == bi0) | (bi1 == ai0)
        rows_abut = (aj1 == bj0) | (bj1 == aj0)
        adjacent = (rows_overlap & rows_abut) | (cols_overlap & cols_abut)
        bad = np.nonzero(~adjacent)[0]
        if bad.size:
            t = bad[0]
            out.append((axis, int(ka[t]), int(kb[t]), int(ci[t]), int(cj[t])))
    return out


def _find_layout_conflict(arrs, compressed_shape):
    """First compressed-grid conflict as (axis, a_idx, b_idx), or None.

    axis "y" means two blocks collided or met vertically, "x" horizontally,
    "o" an outright overlap. arrs is the 6-row geometry array of
    _placement_arrays plus the per-region compressed extents.
    """
    row0, col0, fy, fx, crow0, ccol0, ch, cw = arrs
    ph, pw = compressed_shape
    cpid = np.full((ph, pw), -1, dtype=np.int32)
    for k in range(row0.shape[0]):
        sl = (slice(crow0[k], crow0[k] + ch[k]), slice(ccol0[k], ccol0[k] + cw[k]))
        clash = cpid[sl]
        hit = clash[clash >= 0]
        if hit.size:
            return ("o", int(hit[0]), k)
        cpid[sl] = k
    created = _created_adjacency_pairs(arrs[:6], cpid)
    if created:
        axis, ka, kb, _, _ = created[0]
        return (axis, ka, kb)
    return None


def _graph_path(adjacency, start, goal):
    """Shortest region-graph path from start to goal (list of nodes)."""
    from collections import deque

    prev = {start: None}
    dq = deque([start])
    while dq:
        u = dq.popleft()
        if u == goal:
            path = []
            while u is not None:
                path.append(u)
                u = prev[u]
            return path
        for v in adjacency[u]:
            if v not in prev:
                prev[v] = u
                dq.append(v)
    return list(prev)


def _largest_divisor_below(value, below):
    for d in range(below - 1, 0, -1):
        if value % d == 0:
            return d
    return 1


def plan_compression(regions: list, env: Environment, n: int = DEFAULT_N) -> CompressionPlan:
    """Plan per-region integer compression toward an n-by-n target.

    Tiers: identity when the grid already fits; outer-trim only when the
    navigable bounding box fits; otherwise greedy-maximal seam-consistent
    factors, backed off along conflict paths until the compressed layout
    neither creates nor destroys any navigable adjacency. A plan that still
    cannot reach n-by-n carries the does_not_fit flag rather than raising.
    """
    p, q = env.shape
    if p <= n and q <= n:
        return _simple_plan(regions, env, n, trim_to_bbox=False)

    trimmed = _simple_plan(regions, env, n, trim_to_bbox=True)
    if not trimmed.does_not_fit:
        return trimmed

    # compression applies only to a single connected navigable component;
    # disjoint components share no seam equations to tie their layouts
    from scipy import ndimage

    _, ncomp = ndimage.label(env.nav, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
    if ncomp != 1:
        return trimmed

    base = [Placement(region=r) for r in regions]
    rid = _region_grid(base, (p, q))
    x_pairs, y_pairs = _contiguous_pairs(rid)
    fx, fy = _component_factors(base, x_pairs, y_pairs)
    k = len(base)

    # the orthogonal factor is shared across each contiguity cluster and the
    # back-off below must respect that, so track cluster memberships
    def clusters(pairs):
        parent = list(range(k))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in pairs:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
        groups = {}
        for i in range(k):
            groups.setdefault(find(i), []).append(i)
        return {i: groups[find(i)] for i in range(k)}

    ycluster = clusters(x_pairs)  # regions sharing fy
    xcluster = clusters(y_pairs)  # regions sharing fx

    adjacency = [set() for _ in base]
    adj = [[] for _ in base]
    for a, b in x_pairs:
        adjacency[a].add(b)
        adjacency[b].add(a)
        adj[a].append((a, b, True))
        adj[b].append((a, b, True))
    for a, b in y_pairs:
        adjacency[a].add(b)
        adjacency[b].add(a)
        adj[a].append((a, b, False))
        adj[b].append((a, b, False))

    row0 = [r.row0 for r in regions]
    col0 = [r.col0 for r in regions]
    hs = [r.height for r in regions]
    ws = [r.width for r in regions]
    geom = (row0, col0, hs, ws)

    result = None
    for iteration in range(200):
        rows, cols, conflict = _solve_layout(geom, fx, fy, adj)
        if rows is not None:
            fya = np.array(fy, dtype=np.int64)
            fxa = np.array(fx, dtype=np.int64)
            arrs = (
                np.array(row0, dtype=np.int64),
                np.array(col0, dtype=np.int64),
                fya,
                fxa,
                np.array(rows, dtype=np.int64),
                np.array(cols, dtype=np.int64),
                np.array(hs, dtype=np.int64) // fya,
                np.array(ws, dtype=np.int64) // fxa,
            )
            ph = int((arrs[4] + arrs[6]).max())
            pw = int((arrs[5] + arrs[7]).max())
            conflict = _find_layout_conflict(arrs, (ph, pw))
            if conflict is None:
                result = rows, cols, (ph, pw)
                break
        axis, a_idx, b_idx = conflict
        if iteration >= 40:
            # convergence is taking too long; give up on factors entirely
            # (the identity layout is always conflict-free)
            fx = [1] * k
            fy = [1] * k
            continue
        path = _graph_path(adjacency, a_idx, b_idx)
        reduced = False
        for want_y in ((True,) if axis == "y" else (False,) if axis == "x" else (True, False)):
            factors = fy if want_y else fx
            on_path = [(factors[r], r) for r in path if factors[r] > 1]
            if not on_path:
                continue
            fmax, r = max(on_path)
            # any divisor of the current cluster factor still divides every
            # member extent and seam offset, so step down to the next one
            smaller = _largest_divisor_below(fmax, fmax)
            for member in (ycluster if want_y else xcluster)[r]:
                factors[member] = smaller
            reduced = True
            break
        if not reduced:
            if all(v == 1 for v in fx) and all(v == 1 for v in fy):
                break
            fx = [1] * k
            fy = [1] * k

    if result is None:
        return trimmed
    rows, cols, (ph, pw) = result
    placements = [
        replace(pl, fx=fx[i], fy=fy[i], crow0=rows[i], ccol0=cols[i])
        for i, pl in enumerate(base)
    ]
    r0, r1, c0, c1 = _nav_bbox(env.nav)
    plan = CompressionPlan(
        placements=placements,
        original_shape=(p, q),
        compressed_shape=(ph, pw),
        n=n,
        trim=(r0, p - 1 - r1, c0, q - 1 - c1),
        does_not_fit=ph > n or pw > n,
    )
    if check_consistency(plan, env):
        return trimmed
    return plan


# -------------------------------------------------------------- consistency

def check_consistency(plan: CompressionPlan, env: Environment) -> list:
    """Empty iff the plan maps the environment losslessly.

    Verifies region coverage, divisibility, the two seam constraints
    (matching orthogonal capacity; matching orthogonal extent and block
    phase wherever that capacity exceeds one), and full adjacency
    equivalence between the original and compressed grids.
    """
    out = []
    p, q = env.shape
    if tuple(plan.original_shape) != (p, q):
        return [Violation("DimensionMismatch", detail="plan does not match environment")]

    nav = env.nav
    structural = False
    for k, pl in enumerate(plan.placements):
        r = pl.region
        if r.row0 < 0 or r.col0 < 0 or r.row1 > p or r.col1 > q or r.height < 1 or r.width < 1:
            out.append(Violation("CoverageViolation", (r.row0, r.col0), "region out of bounds"))
            structural = True
            continue
        if pl.fx < 1 or pl.fy < 1 or r.width % pl.fx or r.height % pl.fy:
            out.append(
                Violation(
                    "CapacityViolation",
                    (r.row0, r.col0),
                    f"factors ({pl.fx}, {pl.fy}) do not divide extents ({r.width}, {r.height})",
                )
            )
            structural = True
        if not nav[r.row0 : r.row1, r.col0 : r.col1].all():
            out.append(Violation("CoverageViolation", (r.row0, r.col0), "region covers an obstacle"))
            structural = True

    rid = np.full((p, q), -1, dtype=np.int32)
    seen = np.zeros((p, q), dtype=bool)
    for k, pl in enumerate(plan.placements):
        r = pl.region
        sl = (slice(max(r.row0, 0), max(r.row1, 0)), slice(max(r.col0, 0), max(r.col1, 0)))
        if seen[sl].any():
            out.append(Violation("RegionOverlap", (r.row0, r.col0)))
            structural = True
        seen[sl] = True
        rid[sl] = k
    uncovered = nav & (rid < 0)
    if uncovered.any():
        cell = tuple(int(v) for v in np.argwhere(uncovered)[0])
        out.append(Violation("CoverageViolation", cell, "navigable cell not in any region"))
        structural = True
    if structural:
        return out

    # Constraint 1: seam-contiguous regions share the orthogonal capacity.
    # Constraint 2: where that capacity exceeds one, their orthogonal extents
    # match and their block phases align.
    x_pairs, y_pairs = _contiguous_pairs(rid)
    for a, b in x_pairs:
        pa, pb = plan.placements[a], plan.placements[b]
        if pa.fy != pb.fy:
            out.append(
                Violation(
                    "Constraint1Violation",
                    (pa.region.row0, pa.region.col0),
                    f"x-contiguous regions {a} and {b} have Cy {pa.fy} != {pb.fy}",
                )
            )
        elif pa.fy > 1:
            if pa.region.height != pb.region.height:
                out.append(
                    Violation(
                        "Constraint2Violation",
                        (pa.region.row0, pa.region.col0),
                        f"x-contiguous regions {a} and {b} have heights "
                        f"{pa.region.height} != {pb.region.height}",
                    )
                )
            elif (pa.region.row0 - pb.region.row0) % pa.fy:
                out.append(
                    Violation(
                        "Constraint2Violation",
                        (pa.region.row0, pa.region.col0),
                        f"x-contiguous regions {a} and {b} have misaligned row blocks",
                    )
                )
    for a, b in y_pairs:
        pa, pb = plan.placements[a], plan.placements[b]
        if pa.fx != pb.fx:
            out.append(
                Violation(
                    "Constraint1Violation",
                    (pa.region.row0, pa.region.col0),
                    f"y-contiguous regions {a} and {b} have Cx {pa.fx} != {pb.fx}",
                )
            )
        elif pa.fx > 1:
            if pa.region.width != pb.region.width:
                out.append(
                    Violation(
                        "Constraint2Violation",
                        (pa.region.row0, pa.region.col0),
                        f"y-contiguous regions {a} and {b} have widths "
                        f"{pa.region.width} != {pb.region.width}",
                    )
                )
            elif (pa.region.col0 - pb.region.col0) % pa.fx:
                out.append(
                    Violation(
                        "Constraint2Violation",
                        (pa.region.row0, pa.region.col0),
                        f"y-contiguous regions {a} and {b} have misaligned column blocks",
                    )
                )

    ph, pw = plan.compressed_shape
    cpid = np.full((ph, pw), -1, dtype=np.int32)
    for k, pl in enumerate(plan.placements):
        if pl.crow0 < 0 or pl.ccol0 < 0 or pl.crow0 + pl.cheight > ph or pl.ccol0 + pl.cwidth > pw:
            out.append(Violation("CompressedOutOfBounds", (pl.crow0, pl.ccol0)))
            return out
        sl = (slice(pl.crow0, pl.crow0 + pl.cheight), slice(pl.ccol0, pl.ccol0 + pl.cwidth))
        if (cpid[sl] >= 0).any():
            out.append(Violation("CompressedOverlap", (pl.crow0, pl.ccol0)))
            return out
        cpid[sl] = k

    # no navigable adjacency may be destroyed
    crow, ccol = plan.cell_map()
    for axis in (0, 1):
        if axis == 0:
            va, vb = (slice(None, -1), slice(None)), (slice(1, None), slice(None))
        else:
            va, vb = (slice(None), slice(None, -1)), (slice(None), slice(1, None))
        both = nav[va] & nav[vb]
        dr = np.abs(crow[va] - crow[vb])
        dc = np.abs(ccol[va] - ccol[vb])
        bad = both & ~(((dr + dc) == 1) | ((dr == 0) & (dc == 0)))
        if bad.any():
            cell = tuple(int(v) for v in np.argwhere(bad)[0])
            out.append(Violation("AdjacencyRemoved", cell, "original neighbors separated"))
            break

    # no navigable adjacency may be created: compressed neighbors must expand
    # back to originally touching blocks
    for axis, ka, kb, ci, cj in _created_adjacency_pairs(_placement_arrays(plan.placements), cpid):
        out.append(
            Violation(
                "AdjacencyCreated",
                (ci, cj),
                f"compressed cell ({ci},{cj}) gained a neighbor along {axis} whose "
                "source block never touched its own",
            )
        )
    return out


# ------------------------------------------------------- compress/decompress

def compress(s: Scenario, plan: CompressionPlan) -> CageTensor:
    """Encode a scenario through a consistent plan and pad to n-by-n.

    Per compressed cell: agent density is the source agent count divided by
    the cell capacity, the goal channel takes the minimum source value, and
    the environment channel is navigable only when every source cell is.
    """
    violations = check_consistency(plan, s.env)
    if violations:
        raise InconsistentPlanError("; ".join(str(v) for v in violations[:3]))
    n = plan.n
    ph, pw = plan.compressed_shape
    if plan.does_not_fit or ph > n or pw > n:
        raise DoesNotFitError(f"compressed dimensions {ph}x{pw} exceed {n}x{n}")

    cx, cy = plan.capacity_grids()
    a = np.zeros((ph, pw), dtype=np.float64)
    g = np.full((ph, pw), UNREACHABLE, dtype=np.int32)
    e = np.zeros((ph, pw), dtype=bool)
    dist = s.goals.distance
    dens = s.agents.density
    big = np.int64(1) << 40
    for pl in plan.placements:
        r = pl.region
        sl = (slice(r.row0, r.row1), slice(r.col0, r.col1))
        csl = (slice(pl.crow0, pl.crow0 + pl.cheight), slice(pl.ccol0, pl.ccol0 + pl.cwidth))
        blk = (pl.cheight, pl.fy, pl.cwidth, pl.fx)
        a[csl] = dens[sl].reshape(blk).sum(axis=(1, 3)) / pl.capacity
        dblk = dist[sl].astype(np.int64).reshape(blk)
        gmin = np.where(dblk == UNREACHABLE, big, dblk).min(axis=(1, 3))
        g[csl] = np.where(gmin >= big, UNREACHABLE, gmin).astype(np.int32)
        e[csl] = True

    def pad(arr, fill):
        padded = np.full((n, n), fill, dtype=arr.dtype)
        padded[:ph, :pw] = arr
        return padded

    return CageTensor(
        cx=pad(cx, 1),
        cy=pad(cy, 1),
        a=pad(a, 0.0),
        g=pad(g, UNREACHABLE),
        e=pad(e, False),
        n=n,
        original_shape=plan.original_shape,
        compressed_shape=plan.compressed_shape,
        trim=plan.trim,
        seed=s.seed,
    )


def decompress(flow: FlowMap, plan: CompressionPlan) -> FlowMap:
    """Spread each compressed cell's density uniformly over its source cells.

    Filler (non-navigable) compressed cells have no source cells; a FlowMap
    honoring its zero-on-obstacle invariant loses no mass. Trimmed borders
    come back as zero-density obstacle margins.
    """
    vals = np.asarray(flow.values, dtype=np.float64)
    if vals.shape != tuple(plan.compressed_shape):
        raise DimensionMismatchError(
            f"flow is {vals.shape}, plan expects {tuple(plan.compressed_shape)}"
        )
    out = np.zeros(plan.original_shape, dtype=np.float64)
    for pl in plan.placements:
        r = pl.region
        csl = (slice(pl.crow0, pl.crow0 + pl.cheight), slice(pl.ccol0, pl.ccol0 + pl.cwidth))
        block = vals[csl] / pl.capacity
        out[r.row0 : r.row1, r.col0 : r.col1] = np.repeat(
            np.repeat(block, pl.fy, axis=0), pl.fx, axis=1
        )
    return FlowMap(values=out, resolution="original")


def pool_flow(values: np.ndarray, plan: CompressionPlan) -> np.ndarray:
    """Sum an original-resolution field into compressed cells (the inverse of
    decompress's uniform division; conserves total mass exactly)."""
    vals = np.asarray(values, dtype=np.float64)
    if vals.shape != tuple(plan.original_shape):
        raise DimensionMismatchError(
            f"field is {vals.shape}, plan expects {tuple(plan.original_shape)}"
        )
    ph, pw = plan.compressed_shape
    out = np.zeros((ph, pw), dtype=np.float64)
    for pl in plan.placements:
        r = pl.region
        csl = (slice(pl.crow0, pl.crow0 + pl.cheight), slice(pl.ccol0, pl.ccol0 + pl.cwidth))
        blk = (pl.cheight, pl.fy, pl.cwidth, pl.fx)
        out[csl] = vals[r.row0 : r.row1, r.col0 : r.col1].reshape(blk).sum(axis=(1, 3))
    return out


def encode_scenario(s: Scenario, n: int = DEFAULT_N):
    """Convenience pipeline: visibility, regions, plan, tensor."""
    vis = visibility(s.env)
    regions = segment_regions(vis, s.env)
    plan = plan_compression(regions, s.env, n)
    return compress(s, plan), plan
