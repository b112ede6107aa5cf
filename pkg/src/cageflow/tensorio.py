"""On-disk containers: float32 tensor files and compression-plan JSON.

A .tensor file is a single-line JSON header terminated by a newline,
followed by the raw channel data as little-endian float32, row-major,
channels outermost. Plans are plain JSON listing every region's original
and compressed rectangles.
"""

import json
from pathlib import Path

import numpy as np

from .codec import CageTensor, CompressionPlan, Placement, Region

FORMAT_VERSION = 1


def _header_bytes(header: dict) -> bytes:
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8") + b"\n"


def write_tensor(path, channels: np.ndarray, header: dict) -> None:
    arr = np.ascontiguousarray(np.asarray(channels, dtype="<f4"))
    if arr.ndim == 2:
        arr = arr[None]
    full = dict(header)
    full.setdefault("version", FORMAT_VERSION)
    full["channels"], full["rows"], full["cols"] = (int(v) for v in arr.shape)
    Path(path).write_bytes(_header_bytes(full) + arr.tobytes())


def read_tensor(path):
    """Returns (header dict, float32 array of shape (channels, rows, cols))."""
    with open(path, "rb") as f:
        header = json.loads(f.readline().decode("utf-8"))
        payload = f.read()
    shape = (header["channels"], header["rows"], header["cols"])
    arr = np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
    return header, arr


def write_cage_tensor(path, tensor: CageTensor) -> None:
    """Five channels [Cx, Cy, A, G, E]; G normalized per the codec contract."""
    p, q = tensor.original_shape
    header = {
        "version": FORMAT_VERSION,
        "kind": "cage",
        "n": tensor.n,
        "p": p,
        "q": q,
        "trim": list(tensor.trim),
        "seed": tensor.seed,
        "compressed": list(tensor.compressed_shape),
    }
    write_tensor(path, tensor.channels_float32(), header)


def write_flow_tensor(path, values: np.ndarray, *, n, p, q, trim=(0, 0, 0, 0), seed=0, scale=None) -> None:
    header = {
        "version": FORMAT_VERSION,
        "kind": "flow",
        "n": n,
        "p": p,
        "q": q,
        "trim": list(trim),
        "seed": seed,
    }
    if scale is not None:
        header["scale"] = float(scale)
    write_tensor(path, np.asarray(values, dtype=np.float64), header)


def plan_to_dict(plan: CompressionPlan) -> dict:
    return {
        "version": FORMAT_VERSION,
        "original": list(plan.original_shape),
        "compressed": list(plan.compressed_shape),
        "n": plan.n,
        "trim": list(plan.trim),
        "does_not_fit": plan.does_not_fit,
        "regions": [
            {
                "id": pl.region.id,
                "tuple": list(pl.region.tuple_value),
                "rect": [pl.region.row0, pl.region.col0, pl.region.height, pl.region.width],
                "factors": [pl.fx, pl.fy],
                "crect": [pl.crow0, pl.ccol0, pl.cheight, pl.cwidth],
            }
            for pl in plan.placements
        ],
    }


def plan_from_dict(d: dict) -> CompressionPlan:
    placements = []
    for rec in d["regions"]:
        r0, c0, h, w = rec["rect"]
        region = Region(
            id=rec["id"], row0=r0, col0=c0, height=h, width=w, tuple_value=tuple(rec["tuple"])
        )
        fx, fy = rec["factors"]
        placements.append(
            Placement(region=region, fx=fx, fy=fy, crow0=rec["crect"][0], ccol0=rec["crect"][1])
        )
    return CompressionPlan(
        placements=placements,
        original_shape=tuple(d["original"]),
        compressed_shape=tuple(d["compressed"]),
        n=d["n"],
        trim=tuple(d["trim"]),
        does_not_fit=d["does_not_fit"],
    )


def write_plan(path, plan: CompressionPlan) -> None:
    Path(path).write_text(json.dumps(plan_to_dict(plan), sort_keys=True, indent=1) + "\n")


def read_plan(path) -> CompressionPlan:
    return plan_from_dict(json.loads(Path(path).read_text()))
