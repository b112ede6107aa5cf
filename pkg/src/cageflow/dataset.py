"""Dataset emission: seeded scenario generation, encoding, ground-truth flow,
and a deterministic manifest for the four dataset groups.

Every sample is a pure function of (master seed, group, index), so re-running
a config reproduces byte-identical trees regardless of worker scheduling.
"""

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .codec import DEFAULT_N, encode_scenario, pool_flow
from .errors import DoesNotFitError, InfeasibleError
from .floorplan import TYPE_COMBOS, FloorplanConfig, generate_floorplan
from .flow import (
    CrowdConfig,
    SocialForceParams,
    make_scenario,
    proxy_dense_counts,
    proxy_sparse_counts,
    simulated_counts,
)
from .grid import Scenario
from . import metrics, tensorio

GROUPS = ("sparse-proxy", "dense-proxy", "sparse-simulated", "dense-simulated")

# typologies whose region graphs cycle around obstacle islands rarely admit
# non-trivial factors, so their floorplans are sized to fit without them
_HARD_TYPES = ("block", "vertical_point")


@dataclass(frozen=True)
class RunConfig:
    out_dir: str
    groups: tuple = ("sparse-proxy",)
    count: int = 4
    n: int = DEFAULT_N
    master_seed: int = 0
    render: bool = False
    workers: int = 0  # 0: resolve from CAGEFLOW_THREADS / cpu count
    sf_params: SocialForceParams = field(default_factory=SocialForceParams)
    congestion: float = 0.5

    def __post_init__(self):
        if self.n < 8:
            raise ValueError("n must be at least 8")
        if self.count < 1:
            raise ValueError("count must be at least 1")
        for g in self.groups:
            if g not in GROUPS:
                raise ValueError(f"unknown group {g!r}; choose from {GROUPS}")


def derive_seed(master_seed: int, *parts) -> int:
    """Stable 63-bit per-sample seed from the master seed and labels."""
    key = ":".join([str(master_seed)] + [str(p) for p in parts])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & (2**63 - 1)


def _sample_dims(rng, morphology: str, organization: str, n: int):
    hard = morphology in _HARD_TYPES or organization in _HARD_TYPES
    if morphology == "line":
        short = int(rng.integers(8, max(10, n // 5)))
        aspect = 3 + float(rng.random()) * 2.0
        long_side = int(short * aspect)
        cap = n if hard else int(1.5 * n)
        long_side = min(long_side, cap)
        if long_side < 3 * short:
            short = max(4, long_side // 3)
        return (short, long_side) if rng.integers(0, 2) else (long_side, short)
    lo = max(16, n // 2)
    hi = n if hard else int(1.4 * n)
    hi = max(hi, lo)
    return int(rng.integers(lo, hi + 1)), int(rng.integers(lo, hi + 1))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def build_sample(args):
    """Generate one (X, Y) pair plus plan and renders; returns its record."""
    group, index, cfg = args
    regime, source = group.split("-")
    out = Path(cfg.out_dir) / "samples" / f"{group}-{index:05d}"
    out.mkdir(parents=True, exist_ok=True)
    base_seed = derive_seed(cfg.master_seed, group, index)
    morphology, organization = TYPE_COMBOS[index % len(TYPE_COMBOS)]

    last_err = None
    for attempt in range(8):
        seed = derive_seed(base_seed, "attempt", attempt)
        rng = np.random.default_rng(seed)
        rows, cols = _sample_dims(rng, morphology, organization, cfg.n)
        fp_cfg = FloorplanConfig(morphology, organization, rows, cols, seed=seed)
        try:
            plan_fp = generate_floorplan(fp_cfg)
            env = plan_fp.env
            if regime == "sparse":
                crowd = CrowdConfig("sparse", agent_count=int(rng.integers(1, 26)), seed=seed)
            else:
                crowd = CrowdConfig(
                    "dense", density=float(rng.uniform(0.05, 0.25)), seed=seed
                )
            scenario = make_scenario(env, crowd, seed)
            tensor, plan = encode_scenario(scenario, cfg.n)
        except (InfeasibleError, DoesNotFitError) as err:
            last_err = err
            continue

        if source == "proxy":
            counts = (
                proxy_sparse_counts(scenario)
                if regime == "sparse"
                else proxy_dense_counts(scenario, congestion=cfg.congestion)
            ).astype(np.float64)
        else:
            counts = simulated_counts(scenario, cfg.sf_params)

        pooled = pool_flow(counts, plan)
        scale = float(pooled.max())
        y = pooled / scale if scale > 0 else pooled
        ph, pw = plan.compressed_shape
        y_padded = np.zeros((cfg.n, cfg.n))
        y_padded[:ph, :pw] = y

        x_path = out / "x.tensor"
        y_path = out / "y.tensor"
        plan_path = out / "plan.json"
        tensorio.write_cage_tensor(x_path, tensor)
        tensorio.write_flow_tensor(
            y_path,
            y_padded,
            n=cfg.n,
            p=env.shape[0],
            q=env.shape[1],
            trim=plan.trim,
            seed=seed,
            scale=scale,
        )
        tensorio.write_plan(plan_path, plan)
        files = {"x": x_path, "y": y_path, "plan": plan_path}

        if cfg.render:
            rgb_x = metrics.render_goal_heatmap(
                scenario.goals.distance, nav=env.nav, agents=scenario.agents.density > 0
            )
            metrics.write_png(out / "x.png", rgb_x)
            mx = counts.max()
            rgb_y = metrics.render_heatmap(counts / mx if mx > 0 else counts, nav=env.nav)
            metrics.write_png(out / "y.png", rgb_y)
            files["x_png"] = out / "x.png"
            files["y_png"] = out / "y.png"

        record = {
            "id": f"{group}-{index:05d}",
            "group": group,
            "regime": regime,
            "source": source,
            "seed": seed,
            "attempt": attempt,
            "morphology": morphology,
            "organization": organization,
            "dims": [int(rows), int(cols)],
            "compressed": [int(ph), int(pw)],
            "agents": int(scenario.agents.count),
            "goals": int(scenario.goals.raw.sum()),
            "rooms": plan_fp.room_count,
            "y_scale": scale,
            "flow_mass": float(counts.sum()),
            "files": {k: str(v.relative_to(cfg.out_dir)) for k, v in files.items()},
            "sha256": {k: _sha256(v) for k, v in files.items()},
        }
        return record
    raise InfeasibleError(f"sample {group}-{index} failed after 8 attempts: {last_err}")


def resolve_workers(requested: int = 0) -> int:
    cap = os.environ.get("CAGEFLOW_THREADS", "").strip()
    cap = int(cap) if cap else 0
    workers = requested or min(8, os.cpu_count() or 1)
    if cap:
        workers = min(workers, cap)
    return max(1, workers)


def emit_dataset(cfg: RunConfig) -> dict:
    """Emit every requested group and write manifest.json; returns the manifest."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(group, i, cfg) for group in cfg.groups for i in range(cfg.count)]

    workers = resolve_workers(cfg.workers)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(build_sample, tasks))
    else:
        records = [build_sample(t) for t in tasks]

    manifest = {
        "format_version": tensorio.FORMAT_VERSION,
        "n": cfg.n,
        "master_seed": cfg.master_seed,
        "groups": list(cfg.groups),
        "count_per_group": cfg.count,
        "samples": records,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest
