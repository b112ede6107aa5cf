"""Procedural floorplans in three stages: exterior shape, hallway
organization, rooms interconnected toward the nearest hallway.

Every wall and room is an axis-aligned rectangle, which keeps generated
environments friendly to region-based compression. Generation is a pure
function of the config, including its seed.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from . import _kernels
from .errors import DimsTooSmallError
from .grid import Environment

MORPHOLOGIES = ("point", "block", "line")
ORGANIZATIONS = ("vertical_point", "corridor_center", "corridor_edge", "compartments")
TYPE_COMBOS = tuple((m, o) for m in MORPHOLOGIES for o in ORGANIZATIONS)

LINE_MIN_ASPECT = 3
BLOCK_MARGIN = 3  # cells between the hole and the exterior


@dataclass(frozen=True)
class FloorplanConfig:
    morphology: str
    organization: str
    rows: int
    cols: int
    room_side: tuple = (3, 12)
    share_prob: float = 0.5
    corridor_width: int = 2
    cell_width: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.morphology not in MORPHOLOGIES:
            raise ValueError(f"unknown morphology {self.morphology!r}")
        if self.organization not in ORGANIZATIONS:
            raise ValueError(f"unknown organization {self.organization!r}")
        if self.rows < 4 or self.cols < 4:
            raise DimsTooSmallError("floorplans need at least 4x4 cells")


@dataclass(frozen=True, eq=False)
class Floorplan:
    env: Environment
    hallways: np.ndarray
    room_ids: np.ndarray  # -1 outside rooms
    rooms: list  # (row0, col0, height, width)
    exterior: np.ndarray
    config: FloorplanConfig

    @property
    def room_count(self) -> int:
        return len(self.rooms)


# ------------------------------------------------------------------ stage a

def generate_exterior(cfg: FloorplanConfig) -> np.ndarray:
    """Boolean in-shape mask: Point solid, Block with a centered hole, Line
    elongated with aspect ratio >= 3."""
    p, q = cfg.rows, cfg.cols
    mask = np.ones((p, q), dtype=bool)
    if cfg.morphology == "line":
        if max(p, q) < LINE_MIN_ASPECT * min(p, q):
            raise DimsTooSmallError(f"line needs aspect >= {LINE_MIN_ASPECT}, got {p}x{q}")
    elif cfg.morphology == "block":
        lim = 2 * BLOCK_MARGIN
        if p <= lim or q <= lim:
            raise DimsTooSmallError(f"block hole needs {BLOCK_MARGIN}-cell margins, got {p}x{q}")
        hh = max(1, min(p // 3, p - lim))
        hw = max(1, min(q // 3, q - lim))
        i0 = (p - hh) // 2
        j0 = (q - hw) // 2
        mask[i0 : i0 + hh, j0 : j0 + hw] = False
    return mask


def _hole_rect(mask):
    if mask.all():
        return None
    holes = ~mask
    rows = np.nonzero(holes.any(axis=1))[0]
    cols = np.nonzero(holes.any(axis=0))[0]
    return int(rows[0]), int(cols[0]), int(rows[-1] - rows[0] + 1), int(cols[-1] - cols[0] + 1)


# ------------------------------------------------------------------ stage b

def _ring_band(mask, hole, width):
    i0, j0, hh, hw = hole
    p, q = mask.shape
    band = np.zeros((p, q), dtype=bool)
    o0, o1 = max(0, i0 - width), min(p, i0 + hh + width)
    c0, c1 = max(0, j0 - width), min(q, j0 + hw + width)
    band[o0:o1, c0:c1] = True
    band[i0 : i0 + hh, j0 : j0 + hw] = False
    return band & mask


def carve_hallways(mask: np.ndarray, cfg: FloorplanConfig, rng=None) -> np.ndarray:
    """Hallway cells per the organizational type; always a single connected
    block of corridors inside the shape."""
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    p, q = mask.shape
    cw = cfg.corridor_width
    hole = _hole_rect(mask)
    hall = np.zeros((p, q), dtype=bool)
    long_axis = 0 if p >= q else 1  # 0: rows run long

    if cfg.organization == "vertical_point":
        ch = min(p, max(cw, p // 5 + 1))
        cwid = min(q, max(cw, q // 5 + 1))
        at_center = bool(rng.integers(0, 2))
        if hole is not None:
            # the exact center is the hole; the core sits against its top edge
            i0 = max(0, hole[0] - ch)
            j0 = (q - cwid) // 2
        elif at_center:
            i0, j0 = (p - ch) // 2, (q - cwid) // 2
        else:
            i0, j0 = 0, 0
        hall[i0 : i0 + ch, j0 : j0 + cwid] = True

    elif cfg.organization == "corridor_center":
        if hole is not None:
            hall = _ring_band(mask, hole, cw)
        elif long_axis == 1:
            i0 = max(0, (p - cw) // 2)
            hall[i0 : i0 + cw, :] = True
        else:
            j0 = max(0, (q - cw) // 2)
            hall[:, j0 : j0 + cw] = True

    elif cfg.organization == "corridor_edge":
        side = int(rng.integers(0, 4))
        if side == 0:
            hall[:cw, :] = True
        elif side == 1:
            hall[-cw:, :] = True
        elif side == 2:
            hall[:, :cw] = True
        else:
            hall[:, -cw:] = True

    else:  # compartments: a spine with connected perpendicular branches
        if hole is not None:
            hall = _ring_band(mask, hole, cw)
            # spokes from the ring to the exterior along columns clear of the hole
            j_left = hole[1] - cw - 1
            j_right = hole[1] + hole[3] + 1
            for j0 in (j_left, j_right):
                if 0 <= j0 and j0 + cw <= q:
                    hall[:, j0 : j0 + cw] = True
        else:
            if long_axis == 1:
                i0 = max(0, (p - cw) // 2)
                hall[i0 : i0 + cw, :] = True
                span = q
                n_branch = max(1, span // 12)
                offs = sorted(int(v) for v in rng.integers(0, max(1, span - cw), size=n_branch))
                for j0 in offs:
                    hall[:, j0 : j0 + cw] = True
            else:
                j0 = max(0, (q - cw) // 2)
                hall[:, j0 : j0 + cw] = True
                span = p
                n_branch = max(1, span // 12)
                offs = sorted(int(v) for v in rng.integers(0, max(1, span - cw), size=n_branch))
                for i0 in offs:
                    hall[i0 : i0 + cw, :] = True

    hall &= mask
    if not hall.any():  # degenerate dims: fall back to a corner block
        hall[:cw, :cw] = True
        hall &= mask
    return hall


# ------------------------------------------------------------------ stage c

def _slab_rectangles(space):
    """Deterministic maximal-rectangle decomposition (row-major sweep)."""
    ones = np.ones(space.shape, dtype=np.int32)
    _, rows = _kernels.segment_sweep(space, ones, ones)
    return [(int(r[0]), int(r[1]), int(r[2]), int(r[3])) for r in rows]


def _split_sizes(extent, rng, lo, hi, share_prob, prev=None):
    """Sequential sizes along one axis with 1-cell walls between; neighbors
    reuse the previous size with the sharing probability."""
    sizes = []
    left = extent
    size = prev
    while left > 0:
        if size is None or rng.random() >= share_prob:
            size = int(rng.integers(lo, hi + 1))
        take = min(size, left)
        if left - take - 1 < lo:
            take = left  # absorb the remainder rather than leave a sliver
        sizes.append(take)
        left -= take + 1
    return sizes


def populate_rooms(mask: np.ndarray, hallways: np.ndarray, cfg: FloorplanConfig, rng=None) -> Floorplan:
    """Divide leftover space into rectangular rooms behind 1-cell walls and
    carve a 1-cell doorway per room facing its nearest hallway."""
    rng = np.random.default_rng(cfg.seed + 1) if rng is None else rng
    p, q = mask.shape
    lo, hi = cfg.room_side

    band = ndimage.binary_dilation(hallways, structure=np.ones((3, 3), bool)) & ~hallways
    room_space = mask & ~hallways & ~band

    room_ids = np.full((p, q), -1, dtype=np.int32)
    rooms = []
    if room_space.any():
        prev_h = None
        for si, sj, sh, sw in _slab_rectangles(room_space):
            heights = _split_sizes(sh, rng, min(lo, sh), min(hi, max(lo, sh)), cfg.share_prob, prev_h)
            prev_h = heights[-1] if heights else None
            i = si
            prev_w = None
            for h in heights:
                widths = _split_sizes(sw, rng, min(lo, sw), min(hi, max(lo, sw)), cfg.share_prob, prev_w)
                prev_w = widths[-1] if widths else None
                j = sj
                for w in widths:
                    room_ids[i : i + h, j : j + w] = len(rooms)
                    rooms.append((i, j, h, w))
                    j += w + 1
                i += h + 1

    nav = hallways | (room_ids >= 0)

    # geodesic distance to the hallways through anything in-shape guides doors
    hall_dist = _kernels.bfs_distance(mask, hallways)

    def room_min_dist(idx):
        i, j, h, w = rooms[idx]
        block = hall_dist[i : i + h, j : j + w]
        finite = block[block >= 0]
        return int(finite.min()) if finite.size else 1 << 30

    pending = sorted(range(len(rooms)), key=lambda k: (room_min_dist(k), k))
    connected = hallways.copy()  # connectivity grows outward from the hallways
    while pending:
        progressed = False
        deferred = []
        for idx in pending:
            i, j, h, w = rooms[idx]
            # adjacent slabs can butt together without a wall; a room already
            # touching connected open space needs no doorway
            touching = (
                (i > 0 and connected[i - 1, j : j + w].any())
                or (i + h < p and connected[i + h, j : j + w].any())
                or (j > 0 and connected[i : i + h, j - 1].any())
                or (j + w < q and connected[i : i + h, j + w].any())
            )
            if touching:
                connected[i : i + h, j : j + w] = True
                progressed = True
                continue
            best = None
            for ri, rj in _room_border(i, j, h, w, p, q):
                if nav[ri, rj] or not mask[ri, rj]:
                    continue
                for di, dj in ((-1, 0), (0, -1), (0, 1), (1, 0)):
                    ni, nj = ri + di, rj + dj
                    if 0 <= ni < p and 0 <= nj < q and connected[ni, nj]:
                        key = (int(hall_dist[ri, rj]) if hall_dist[ri, rj] >= 0 else 1 << 30, ri, rj)
                        if best is None or key < best:
                            best = key
                        break
            if best is None:
                deferred.append(idx)
                continue
            _, ri, rj = best
            nav[ri, rj] = True
            connected[ri, rj] = True
            connected[i : i + h, j : j + w] = True
            progressed = True
        if not progressed and deferred:
            # no room touches the connected set yet; should not happen with
            # rectangular slabs, but never loop forever
            raise RuntimeError("door carving stalled; disconnected room cluster")
        pending = deferred

    env = Environment(nav=nav, cell_width=cfg.cell_width)
    return Floorplan(
        env=env,
        hallways=hallways,
        room_ids=room_ids,
        rooms=rooms,
        exterior=mask,
        config=cfg,
    )


def _room_border(i, j, h, w, p, q):
    """Wall candidates: the cells immediately outside each room edge."""
    for jj in range(j, j + w):
        if i - 1 >= 0:
            yield i - 1, jj
        if i + h < p:
            yield i + h, jj
    for ii in range(i, i + h):
        if j - 1 >= 0:
            yield ii, j - 1
        if j + w < q:
            yield ii, j + w


def generate_floorplan(cfg: FloorplanConfig) -> Floorplan:
    """Run all three stages from one seeded generator."""
    rng = np.random.default_rng(cfg.seed)
    mask = generate_exterior(cfg)
    hallways = carve_hallways(mask, cfg, rng)
    return populate_rooms(mask, hallways, cfg, rng)


def connected_components(nav: np.ndarray) -> int:
    _, n = ndimage.label(nav, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
    return int(n)
