"""Core grid types, goal distance fields, and greedy navigation.

Grids are row-major numpy arrays of shape (p, q) indexed 0-based as
(i, j) = (row, column). Cells outside the grid are treated as obstacles.
UNREACHABLE marks both obstacle cells and navigable cells with no route
to any goal.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .errors import GoalOnObstacleError, NoGoalError, UnreachableError

UNREACHABLE = -1

_NEIGHBOR_OFFSETS = ((-1, 0), (0, -1), (0, 1), (1, 0))  # lexicographic (i, j) order


def _frozen(arr, dtype=None):
    out = np.array(arr, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class Environment:
    """Discretized built environment; True cells are navigable.

    cell_width is the agent diameter in meters and anchors the scale.
    """

    nav: np.ndarray
    cell_width: float = 0.5

    def __post_init__(self):
        nav = _frozen(self.nav, dtype=bool)
        if nav.ndim != 2 or nav.shape[0] < 1 or nav.shape[1] < 1:
            raise ValueError("environment grid must be 2D and non-empty")
        if not nav.any():
            raise ValueError("environment must contain at least one navigable cell")
        if self.cell_width <= 0:
            raise ValueError("cell_width must be positive")
        object.__setattr__(self, "nav", nav)

    @property
    def shape(self):
        return self.nav.shape


@dataclass(frozen=True, eq=False)
class AgentField:
    """Per-cell agent density; {0, 1} before compression."""

    density: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "density", _frozen(self.density, dtype=np.float64))

    @property
    def cells(self):
        """Occupied cells as a list of (i, j) in row-major order."""
        return list(zip(*np.nonzero(self.density)))

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.density))


@dataclass(frozen=True, eq=False)
class GoalField:
    """Goal markers plus the derived shortest-path-length field."""

    raw: np.ndarray
    distance: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "raw", _frozen(self.raw, dtype=bool))
        object.__setattr__(self, "distance", _frozen(self.distance, dtype=np.int32))


@dataclass(frozen=True, eq=False)
class Scenario:
    env: Environment
    agents: AgentField
    goals: GoalField
    seed: int = 0


@dataclass(frozen=True)
class Violation:
    """A single failed invariant; data, not an exception."""

    rule: str
    cell: Optional[tuple] = None
    detail: str = ""

    def __str__(self):
        at = f" at {self.cell}" if self.cell is not None else ""
        return f"{self.rule}{at}: {self.detail}" if self.detail else f"{self.rule}{at}"


def distance_field(env: Environment, goals) -> np.ndarray:
    """Multi-source shortest path lengths to the nearest goal marker.

    4-connected unit-cost moves through navigable cells. Goal cells are 0;
    obstacle cells and unreachable navigable cells are UNREACHABLE.
    """
    raw = np.asarray(goals, dtype=bool)
    if raw.shape != env.shape:
        raise GoalOnObstacleError("goal grid shape does not match environment")
    if (raw & ~env.nav).any():
        i, j = [int(v) for v in np.argwhere(raw & ~env.nav)[0]]
        raise GoalOnObstacleError(f"goal marker on obstacle cell ({i}, {j})")
    if not (raw & env.nav).any():
        raise NoGoalError("no goal marker on a navigable cell")
    return _kernels.bfs_distance(env.nav, raw)


def goal_field(env: Environment, goals) -> GoalField:
    raw = np.asarray(goals, dtype=bool)
    return GoalField(raw=raw, distance=distance_field(env, raw))


def greedy_path(goals: GoalField, start) -> list:
    """Descend the distance field from start to a goal cell.

    Each step moves to the 4-neighbor with distance exactly one less,
    breaking ties toward the lexicographically smallest (i, j). The path
    has distance(start) + 1 cells.
    """
    dist = goals.distance
    p, q = dist.shape
    i, j = int(start[0]), int(start[1])
    d = int(dist[i, j])
    if d == UNREACHABLE:
        raise UnreachableError(f"cell ({i}, {j}) has no route to a goal")
    path = [(i, j)]
    while d > 0:
        for di, dj in _NEIGHBOR_OFFSETS:
            ni, nj = i + di, j + dj
            if 0 <= ni < p and 0 <= nj < q and dist[ni, nj] == d - 1:
                i, j, d = ni, nj, d - 1
                break
        else:  # violates the greedy-descent soundness invariant
            raise UnreachableError(f"no descending neighbor from ({i}, {j})")
        path.append((i, j))
    return path


def greedy_descends_to_zero(values, nav, start) -> bool:
    """Greedy descent on an arbitrary integer field: repeatedly step to the
    smallest-valued strictly smaller navigable neighbor (lex tie-break).
    True iff a zero-valued cell is reached. Cells valued UNREACHABLE are
    never entered."""
    vals = np.asarray(values)
    p, q = vals.shape
    i, j = int(start[0]), int(start[1])
    v = int(vals[i, j])
    if v == UNREACHABLE or not nav[i, j]:
        return False
    while v > 0:
        best = None
        for di, dj in _NEIGHBOR_OFFSETS:
            ni, nj = i + di, j + dj
            if 0 <= ni < p and 0 <= nj < q and nav[ni, nj]:
                nv = int(vals[ni, nj])
                if nv != UNREACHABLE and nv < v and (best is None or nv < best[0]):
                    best = (nv, ni, nj)
        if best is None:
            return False
        v, i, j = best
    return True


def validate_scenario(s: Scenario) -> list:
    """Empty list iff all Scenario invariants hold; one Violation per failed
    invariant, naming the first offending cell."""
    out = []
    shape = s.env.shape
    if s.agents.density.shape != shape or s.goals.raw.shape != shape or s.goals.distance.shape != shape:
        out.append(Violation("DimensionMismatch", detail="grids do not share dimensions"))
        return out

    nav = s.env.nav
    dens = s.agents.density
    bad = ~np.isin(dens, (0.0, 1.0))
    if bad.any():
        cell = tuple(int(v) for v in np.argwhere(bad)[0])
        out.append(Violation("AgentDensityNotBinary", cell, f"value {dens[cell]}"))
    on_obst = (dens > 0) & ~nav
    if on_obst.any():
        cell = tuple(int(v) for v in np.argwhere(on_obst)[0])
        out.append(Violation("AgentOnObstacle", cell))

    raw, dist = s.goals.raw, s.goals.distance
    if (raw & ~nav).any():
        cell = tuple(int(v) for v in np.argwhere(raw & ~nav)[0])
        out.append(Violation("GoalOnObstacle", cell))
    if not (raw & nav).any():
        out.append(Violation("NoGoal"))

    if (dist[raw & nav] != 0).any() or ((dist == 0) & ~raw).any():
        bad0 = (raw & nav & (dist != 0)) | ((dist == 0) & ~raw)
        cell = tuple(int(v) for v in np.argwhere(bad0)[0])
        out.append(Violation("GoalDistanceNotZero", cell))
    if (dist[~nav] != UNREACHABLE).any():
        cell = tuple(int(v) for v in np.argwhere(~nav & (dist != UNREACHABLE))[0])
        out.append(Violation("ObstacleNotUnreachable", cell))

    # every finite-distance cell needs a 4-neighbor exactly one closer
    finite = nav & (dist > 0)
    if finite.any():
        has_step = np.zeros(shape, dtype=bool)
        for di, dj in _NEIGHBOR_OFFSETS:
            shifted = np.full(shape, UNREACHABLE, dtype=np.int32)
            src = dist[
                max(0, di) : shape[0] + min(0, di), max(0, dj) : shape[1] + min(0, dj)
            ]
            shifted[
                max(0, -di) : shape[0] + min(0, -di), max(0, -dj) : shape[1] + min(0, -dj)
            ] = src
            has_step |= shifted == dist - 1
        bad_step = finite & ~has_step
        if bad_step.any():
            cell = tuple(int(v) for v in np.argwhere(bad_step)[0])
            out.append(Violation("NoDescendingNeighbor", cell))

    stranded = (dens > 0) & nav & (dist == UNREACHABLE)
    if stranded.any():
        cell = tuple(int(v) for v in np.argwhere(stranded)[0])
        out.append(Violation("AgentCannotReachGoal", cell))
    return out
