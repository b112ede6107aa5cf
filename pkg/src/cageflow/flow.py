"""Ground-truth long-term crowd flow: static proxy flows for sparse and
dense crowds, and a social-force simulator with occupancy accumulation.

Flow is the time-averaged per-cell density over an entire run, normalized
by the map maximum. Proxy generation overlays shortest paths (sparse) or
congestion-aware group paths (dense) instead of simulating.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

from . import _kernels
from .codec import FlowMap
from .errors import InfeasibleError, ParamOutOfRangeError, UnreachableError
from .grid import (
    UNREACHABLE,
    AgentField,
    Environment,
    GoalField,
    Scenario,
    goal_field,
    greedy_path,
)

SPARSE_MAX_AGENTS = 25
DENSE_MIN_DENSITY = 0.01  # agents per square meter

_NEIGHBOR_OFFSETS = ((-1, 0), (0, -1), (0, 1), (1, 0))


@dataclass(frozen=True)
class CrowdConfig:
    regime: str  # "sparse" | "dense"
    agent_count: Optional[int] = None
    density: Optional[float] = None  # agents per m^2
    seed: int = 0

    def __post_init__(self):
        if self.regime not in ("sparse", "dense"):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.agent_count is None and self.density is None:
            raise ValueError("one of agent_count or density is required")
        if self.regime == "sparse" and self.agent_count is not None and self.agent_count > SPARSE_MAX_AGENTS:
            raise ValueError(f"sparse regime caps at {SPARSE_MAX_AGENTS} agents")
        if self.regime == "dense" and self.density is not None and self.density < DENSE_MIN_DENSITY:
            raise ValueError(f"dense regime needs >= {DENSE_MIN_DENSITY} agents/m^2")

    def resolve_count(self, env: Environment) -> int:
        if self.agent_count is not None:
            return int(self.agent_count)
        area = float(env.nav.sum()) * env.cell_width**2
        return max(1, int(round(self.density * area)))


@dataclass(frozen=True)
class SocialForceParams:
    desired_speed: float = 1.3  # m/s
    relaxation_time: float = 0.5  # s
    agent_repulsion: float = 5.0  # m/s^2 at contact
    agent_range: float = 2.0  # interaction cutoff, m; decay length is range/4
    # wall push must stay below the driving force inside one-cell doorways
    wall_repulsion: float = 10.0
    wall_range: float = 0.5
    timestep: float = 0.05  # s
    max_steps: int = 2000

    def validate(self):
        for name in (
            "desired_speed",
            "relaxation_time",
            "agent_repulsion",
            "agent_range",
            "wall_repulsion",
            "wall_range",
            "timestep",
        ):
            if getattr(self, name) <= 0:
                raise ParamOutOfRangeError(f"{name} must be strictly positive")
        if self.max_steps < 1:
            raise ParamOutOfRangeError("max_steps must be at least 1")
        if self.timestep > self.relaxation_time:
            raise ParamOutOfRangeError("timestep must not exceed relaxation_time")


@dataclass(frozen=True, eq=False)
class Trajectories:
    """Continuous agent positions in meters, (frames, agents, 2) as (x, y);
    NaN once an agent has finished."""

    positions: np.ndarray
    frame_count: int
    cell_width: float
    finished: np.ndarray
    timestep: float

    @property
    def agent_count(self) -> int:
        return self.positions.shape[1] if self.positions.ndim == 3 else 0


# ----------------------------------------------------------------- sampling

def sample_agents_goals(env: Environment, cfg: CrowdConfig, seed: Optional[int] = None):
    """Uniform agent cells without replacement plus 1-3 goal cells, resampled
    until every agent can reach a goal."""
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    nav_cells = np.argwhere(env.nav)
    count = cfg.resolve_count(env)
    if count > len(nav_cells):
        raise InfeasibleError(f"{count} agents exceed {len(nav_cells)} navigable cells")
    for _ in range(20):
        goals = np.zeros(env.shape, dtype=bool)
        n_goals = int(rng.integers(1, 4))
        for idx in rng.choice(len(nav_cells), size=min(n_goals, len(nav_cells)), replace=False):
            goals[tuple(nav_cells[idx])] = True
        density = np.zeros(env.shape, dtype=np.float64)
        if count:
            for idx in rng.choice(len(nav_cells), size=count, replace=False):
                density[tuple(nav_cells[idx])] = 1.0
        gf = goal_field(env, goals)
        if not ((density > 0) & (gf.distance == UNREACHABLE)).any():
            return AgentField(density), goals
    raise InfeasibleError("could not place agents with reachable goals within 20 attempts")


def make_scenario(env: Environment, cfg: CrowdConfig, seed: Optional[int] = None) -> Scenario:
    s = cfg.seed if seed is None else seed
    agents, goals = sample_agents_goals(env, cfg, s)
    return Scenario(env=env, agents=agents, goals=goal_field(env, goals), seed=s)


# -------------------------------------------------------------- proxy flows

def proxy_sparse_counts(s: Scenario) -> np.ndarray:
    """Shortest-path overlay: each agent's greedy path adds one per visited cell."""
    counts = np.zeros(s.env.shape, dtype=np.int64)
    for cell in s.agents.cells:
        for i, j in greedy_path(s.goals, cell):
            counts[i, j] += 1
    return counts


def _normalize(counts) -> FlowMap:
    counts = np.asarray(counts, dtype=np.float64)
    mx = counts.max()
    return FlowMap(values=counts / mx if mx > 0 else counts, resolution="original")


def proxy_sparse_flow(s: Scenario) -> FlowMap:
    return _normalize(proxy_sparse_counts(s))


def cluster_agents(s: Scenario, radius: int = 2) -> list:
    """Cohesive groups: connected components of the agent mask under an
    8-connected dilation of the given radius. Returns lists of (i, j)."""
    mask = s.agents.density > 0
    if not mask.any():
        return []
    dilated = ndimage.binary_dilation(mask, structure=np.ones((3, 3), bool), iterations=radius)
    labels, n = ndimage.label(dilated, structure=np.ones((3, 3), int))
    groups = [[] for _ in range(n)]
    for i, j in np.argwhere(mask):
        groups[labels[i, j] - 1].append((int(i), int(j)))
    return [g for g in groups if g]


def _descend_weighted(field_vals, nav, start):
    """Strictly descending walk on a positive-cost distance field; the field's
    construction guarantees a descending neighbor until a zero cell."""
    p, q = field_vals.shape
    i, j = start
    if not np.isfinite(field_vals[i, j]):
        raise UnreachableError(f"cell ({i}, {j}) has no route to a goal")
    path = [(i, j)]
    v = field_vals[i, j]
    while v > 0:
        best = None
        for di, dj in _NEIGHBOR_OFFSETS:
            ni, nj = i + di, j + dj
            if 0 <= ni < p and 0 <= nj < q and nav[ni, nj]:
                nv = field_vals[ni, nj]
                if nv < v and (best is None or nv < best[0]):
                    best = (nv, ni, nj)
        v, i, j = best
        path.append((i, j))
    return path


def proxy_dense_counts(s: Scenario, congestion: float = 0.5, group_radius: int = 2) -> np.ndarray:
    """Congestion-aware group overlay. Within each cohesive group, agents are
    routed one after another in seeded random order; entering a cell costs
    1 + congestion * (paths already through it within the group), so overflow
    spreads around bottlenecks. Groups accumulate independently: each group's
    routing order is seeded by its own lead cell, not by the other groups."""
    nav = s.env.nav
    counts = np.zeros(s.env.shape, dtype=np.int64)
    for group in cluster_agents(s, radius=group_radius):
        rng = np.random.default_rng((s.seed, group[0][0], group[0][1]))
        order = rng.permutation(len(group))
        occ = np.zeros(s.env.shape, dtype=np.float64)
        for k in order:
            cost = 1.0 + congestion * occ
            fieldv = _kernels.weighted_goal_field(nav, s.goals.raw, cost)
            path = _descend_weighted(fieldv, nav, group[k])
            for i, j in path:
                counts[i, j] += 1
                occ[i, j] += 1.0
    return counts


def proxy_dense_flow(s: Scenario, congestion: float = 0.5, group_radius: int = 2) -> FlowMap:
    return _normalize(proxy_dense_counts(s, congestion, group_radius))


# ------------------------------------------------------------- social force

def _descent_directions(goals: GoalField, env: Environment):
    """Per-cell greedy step target offsets (di, dj); zeros at goals/unreachable."""
    dist = goals.distance
    p, q = dist.shape
    di = np.zeros((p, q), dtype=np.int8)
    dj = np.zeros((p, q), dtype=np.int8)
    for i in range(p):
        for j in range(q):
            d = dist[i, j]
            if d <= 0:
                continue
            for oi, oj in _NEIGHBOR_OFFSETS:
                ni, nj = i + oi, j + oj
                if 0 <= ni < p and 0 <= nj < q and dist[ni, nj] == d - 1:
                    di[i, j] = oi
                    dj[i, j] = oj
                    break
    return di, dj


def simulate_social_force(s: Scenario, params: SocialForceParams = SocialForceParams()) -> Trajectories:
    """Continuous-space integration of desired-velocity, agent-agent, and wall
    repulsion forces; desired direction follows greedy descent on the goal
    distance field. Axis-separated collision clamping keeps every position
    outside obstacle cells. Deterministic given (scenario, params)."""
    params.validate()
    env = s.env
    w = env.cell_width
    nav = env.nav
    p, q = env.shape
    dt = params.timestep
    v0 = params.desired_speed

    cells = s.agents.cells
    n = len(cells)
    if n == 0:
        return Trajectories(
            positions=np.zeros((0, 0, 2)),
            frame_count=0,
            cell_width=w,
            finished=np.zeros(0, dtype=bool),
            timestep=dt,
        )

    di, dj = _descent_directions(s.goals, env)
    # per-cell wall proximity: distance to the nearest obstacle-cell center
    # and the unit direction away from it
    wall_dist, (oi, oj) = ndimage.distance_transform_edt(nav, return_indices=True)
    wall_dist = wall_dist * w
    ii, jj = np.indices((p, q))
    away = np.stack([(jj - oj).astype(np.float64), (ii - oi).astype(np.float64)], axis=-1)
    norms = np.linalg.norm(away, axis=-1)
    away /= np.maximum(norms, 1e-9)[..., None]

    pos = np.array([[(j + 0.5) * w, (i + 0.5) * w] for i, j in cells], dtype=np.float64)
    vel = np.zeros((n, 2), dtype=np.float64)
    active = np.ones(n, dtype=bool)
    finished = np.zeros(n, dtype=bool)
    frames = []
    dist = s.goals.distance
    max_speed = 1.3 * v0

    for _ in range(params.max_steps):
        ci = np.clip((pos[:, 1] / w).astype(np.int64), 0, p - 1)
        cj = np.clip((pos[:, 0] / w).astype(np.int64), 0, q - 1)
        at_goal = active & (dist[ci, cj] == 0)
        frame = np.full((n, 2), np.nan)
        frame[active] = pos[active]
        frames.append(frame)
        finished |= at_goal
        active &= ~at_goal
        if not active.any():
            break

        idx = np.nonzero(active)[0]
        aci, acj = ci[idx], cj[idx]
        target = np.stack(
            [(acj + dj[aci, acj] + 0.5) * w, (aci + di[aci, acj] + 0.5) * w], axis=1
        )
        e = target - pos[idx]
        e /= np.maximum(np.linalg.norm(e, axis=1), 1e-9)[:, None]

        acc = (v0 * e - vel[idx]) / params.relaxation_time
        acc += _kernels.pair_repulsion(
            pos[idx], w, params.agent_repulsion, params.agent_range, params.agent_range / 4.0
        )
        dw = wall_dist[aci, acj]
        wmag = params.wall_repulsion * np.exp(-(dw - 0.5 * w) / (params.wall_range / 4.0))
        wmag[dw > params.wall_range] = 0.0
        acc += wmag[:, None] * away[aci, acj]

        v = vel[idx] + acc * dt
        speed = np.linalg.norm(v, axis=1)
        scale = np.minimum(1.0, max_speed / np.maximum(speed, 1e-9))
        v *= scale[:, None]

        # axis-separated move; obstacle or out-of-bounds cancels that component
        nx = pos[idx, 0] + v[:, 0] * dt
        bad = (nx < 0) | (nx >= q * w)
        tj = np.clip((nx / w).astype(np.int64), 0, q - 1)
        bad |= ~nav[aci, tj]
        nx[bad] = pos[idx, 0][bad]
        v[bad, 0] = 0.0
        tj = np.clip((nx / w).astype(np.int64), 0, q - 1)

        ny = pos[idx, 1] + v[:, 1] * dt
        bady = (ny < 0) | (ny >= p * w)
        ti = np.clip((ny / w).astype(np.int64), 0, p - 1)
        bady |= ~nav[ti, tj]
        ny[bady] = pos[idx, 1][bady]
        v[bady, 1] = 0.0

        pos[idx, 0] = nx
        pos[idx, 1] = ny
        vel[idx] = v

    return Trajectories(
        positions=np.array(frames),
        frame_count=len(frames),
        cell_width=w,
        finished=finished,
        timestep=dt,
    )


def accumulate_flow(t: Trajectories, env: Environment) -> FlowMap:
    """Per-cell occupancy over all frames divided by the frame count, then
    normalized by the map maximum."""
    p, q = env.shape
    if t.frame_count == 0 or t.agent_count == 0:
        return FlowMap(values=np.zeros((p, q)), resolution="original")
    w = t.cell_width
    flat = t.positions.reshape(-1, 2)
    ok = ~np.isnan(flat[:, 0])
    ci = np.clip((flat[ok, 1] / w).astype(np.int64), 0, p - 1)
    cj = np.clip((flat[ok, 0] / w).astype(np.int64), 0, q - 1)
    counts = _kernels.occupancy_counts(ci, cj, p, q).astype(np.float64)
    counts /= t.frame_count
    mx = counts.max()
    return FlowMap(values=counts / mx if mx > 0 else counts, resolution="original")


def simulated_counts(s: Scenario, params: SocialForceParams = SocialForceParams()) -> np.ndarray:
    """Raw per-cell occupancy divided by frame count (pre-normalization)."""
    t = simulate_social_force(s, params)
    p, q = s.env.shape
    if t.frame_count == 0 or t.agent_count == 0:
        return np.zeros((p, q))
    w = t.cell_width
    flat = t.positions.reshape(-1, 2)
    ok = ~np.isnan(flat[:, 0])
    ci = np.clip((flat[ok, 1] / w).astype(np.int64), 0, p - 1)
    cj = np.clip((flat[ok, 0] / w).astype(np.int64), 0, q - 1)
    return _kernels.occupancy_counts(ci, cj, p, q).astype(np.float64) / t.frame_count


def trajectories_to_jsonl(t: Trajectories) -> str:
    """One JSON object per line: {"frame", "agent", "x", "y"}."""
    import json

    lines = []
    for f in range(t.frame_count):
        for a in range(t.agent_count):
            x, y = t.positions[f, a]
            if not np.isnan(x):
                lines.append(json.dumps({"frame": f, "agent": a, "x": round(float(x), 6), "y": round(float(y), 6)}))
    return "\n".join(lines) + ("\n" if lines else "")
