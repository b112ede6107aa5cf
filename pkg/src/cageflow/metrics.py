"""Quantitative and visual evaluation of predicted flow maps.

Metrics run over navigable cells only, so obstacle padding never shifts a
score. The divergence direction is D(truth || prediction): it penalizes
predictions that miss where the true flow concentrates.
"""

import csv
import io
import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import AllZeroMapError, DimensionMismatchError

KL_EPS = 1e-9


def _values(m):
    return m.values if hasattr(m, "values") else np.asarray(m, dtype=np.float64)


def _masked(pred, truth, nav):
    a, b = _values(pred), _values(truth)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"maps differ in shape: {a.shape} vs {b.shape}")
    if nav is None:
        return a.ravel(), b.ravel()
    nav = np.asarray(nav, dtype=bool)
    if nav.shape != a.shape:
        raise DimensionMismatchError(f"mask shape {nav.shape} does not match {a.shape}")
    return a[nav], b[nav]


def mae(pred, truth, nav=None) -> float:
    """Mean absolute error over (navigable) cells."""
    a, b = _masked(pred, truth, nav)
    return float(np.abs(a - b).mean())


def kl_divergence(pred, truth, nav=None, eps: float = KL_EPS) -> float:
    """D(truth || prediction) in nats after normalizing each map to a
    distribution. Cells the prediction leaves at exactly zero are floored
    at eps so the divergence stays finite; zero-truth cells contribute
    nothing, keeping the identity case exactly zero. The floor can only
    leak a sub-nano negative, which is clamped (the true value there is
    infinite, never negative)."""
    a, b = _masked(pred, truth, nav)
    sa, sb = a.sum(), b.sum()
    if sa <= 0 or sb <= 0:
        raise AllZeroMapError("kl_divergence needs at least one nonzero cell in each map")
    q = a / sa
    p = b / sb
    support = p > 0
    ps = p[support]
    qs = np.where(q[support] > 0, q[support], eps)
    return max(0.0, float((ps * (np.log(ps) - np.log(qs))).sum()))


# ------------------------------------------------------------------ imagery

def _build_palette() -> np.ndarray:
    """Fixed blue-green-red spectrum, 256 entries, integer-exact."""
    pal = np.zeros((256, 3), dtype=np.uint8)
    for i in range(256):
        if i <= 128:
            g = round(i * 255 / 128)
            pal[i] = (0, g, 255 - g)
        else:
            r = round((i - 128) * 255 / 127)
            pal[i] = (r, 255 - r, 0)
    return pal


PALETTE = _build_palette()
PALETTE.flags.writeable = False


def difference_code(pred, truth) -> np.ndarray:
    """The raw (prediction - truth) / 2 + 0.5 field; exactly 0.5 on agreement."""
    a, b = _values(pred), _values(truth)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"maps differ in shape: {a.shape} vs {b.shape}")
    return (a - b) / 2.0 + 0.5


def _apply_palette(code, nav=None) -> np.ndarray:
    idx = np.clip(np.rint(np.clip(code, 0.0, 1.0) * 255), 0, 255).astype(np.intp)
    rgb = PALETTE[idx]
    if nav is not None:
        rgb = rgb.copy()
        rgb[~np.asarray(nav, dtype=bool)] = 0
    return rgb


def colored_difference(pred, truth, nav=None) -> np.ndarray:
    """Error heatmap per the difference code: agreement is green, phantom
    flow shifts red, missed flow shifts blue. Obstacles render black."""
    return _apply_palette(difference_code(pred, truth), nav)


def render_heatmap(values, nav=None, agents=None) -> np.ndarray:
    """Scalar field through the spectrum (0 cold blue, 1 hot red); obstacle
    cells black, agent cells overlaid in white."""
    rgb = _apply_palette(np.asarray(_values(values), dtype=np.float64), nav)
    if agents is not None:
        rgb = rgb.copy()
        rgb[np.asarray(agents, dtype=bool)] = 255
    return rgb


def render_goal_heatmap(distance, nav=None, agents=None) -> np.ndarray:
    """Goal distance field with the spectrum inverted: red nearest the goal.
    Unreachable cells (negative sentinel) take the cold end."""
    d = np.asarray(distance, dtype=np.float64)
    finite = d >= 0
    mx = d[finite].max() if finite.any() else 0.0
    norm = np.where(finite, d / mx if mx > 0 else 0.0, 1.0)
    return render_heatmap(1.0 - norm, nav, agents)


def write_ppm(path, rgb: np.ndarray) -> None:
    """Binary PPM; byte-exact and dependency-free for golden tests."""
    h, w = rgb.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(np.ascontiguousarray(rgb, dtype=np.uint8).tobytes())


def write_png(path, rgb: np.ndarray) -> None:
    from PIL import Image

    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8), mode="RGB").save(path, format="PNG")


# ------------------------------------------------------------------ reports

@dataclass(frozen=True)
class EvalReport:
    case_id: str
    regime: str
    goal: str  # "E" or "G" centric
    mae: float
    kl: float

    def __post_init__(self):
        if self.mae < 0 or self.kl < -1e-12:
            raise ValueError("metrics must be non-negative")


REPORT_FIELDS = ("case_id", "regime", "goal", "mae", "kl")


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow(asdict(r))
    return buf.getvalue()


def reports_to_json(reports) -> str:
    return json.dumps([asdict(r) for r in reports], indent=1, sort_keys=True) + "\n"
