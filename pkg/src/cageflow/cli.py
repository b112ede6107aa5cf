"""Command-line entry points: dataset generation, encoding, decoding, flow
generation, simulation, evaluation, and rendering.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, codec, dataset, grid, metrics, tensorio
from . import flow as flowgen
from .errors import CageflowError, DimensionMismatchError


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this tool reserves 2 for runtime."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def load_scenario(path, cell_width=None, seed=None) -> grid.Scenario:
    """Scenario from a JSON file: {"rows": ["#..G", "#A.."], "cell_width", "seed"}.
    '#' obstacle, '.' navigable, 'A' agent, 'G' goal, 'B' agent and goal."""
    doc = json.loads(Path(path).read_text())
    rows = doc["rows"]
    p, q = len(rows), len(rows[0])
    nav = np.zeros((p, q), dtype=bool)
    agents = np.zeros((p, q), dtype=np.float64)
    goals = np.zeros((p, q), dtype=bool)
    for i, row in enumerate(rows):
        if len(row) != q:
            raise CageflowError(f"scenario row {i} has length {len(row)}, expected {q}")
        for j, ch in enumerate(row):
            if ch == "#":
                continue
            nav[i, j] = True
            if ch in ("A", "B"):
                agents[i, j] = 1.0
            if ch in ("G", "B"):
                goals[i, j] = True
            if ch not in (".", "A", "G", "B"):
                raise CageflowError(f"scenario cell ({i},{j}) has unknown char {ch!r}")
    env = grid.Environment(nav, cell_width=cell_width or doc.get("cell_width", 0.5))
    s = grid.Scenario(
        env=env,
        agents=grid.AgentField(agents),
        goals=grid.goal_field(env, goals),
        seed=seed if seed is not None else doc.get("seed", 0),
    )
    problems = grid.validate_scenario(s)
    if problems:
        raise CageflowError("invalid scenario: " + "; ".join(str(v) for v in problems))
    return s


def _write_image(path, rgb):
    if str(path).endswith(".ppm"):
        metrics.write_ppm(path, rgb)
    else:
        metrics.write_png(path, rgb)


def cmd_gen(args) -> int:
    overrides = {}
    if args.config:
        overrides = json.loads(Path(args.config).read_text())
    cfg = dataset.RunConfig(
        out_dir=args.out,
        groups=tuple(overrides.get("groups", args.group)),
        count=int(overrides.get("count", args.count)),
        n=int(overrides.get("n", args.n)),
        master_seed=int(overrides.get("seed", args.seed)),
        render=bool(overrides.get("render", args.render)),
        workers=int(overrides.get("workers", args.workers)),
    )
    manifest = dataset.emit_dataset(cfg)
    print(f"wrote {len(manifest['samples'])} samples to {args.out}")
    return 0


def cmd_encode(args) -> int:
    s = load_scenario(args.scenario, seed=args.seed)
    tensor, plan = codec.encode_scenario(s, n=args.n)
    tensorio.write_cage_tensor(args.out, tensor)
    tensorio.write_plan(args.plan, plan)
    ph, pw = plan.compressed_shape
    print(f"encoded {s.env.shape[0]}x{s.env.shape[1]} -> {ph}x{pw} (n={args.n})")
    return 0


def cmd_decode(args) -> int:
    plan = tensorio.read_plan(args.plan)
    header, arr = tensorio.read_tensor(args.flow)
    vals = arr[0].astype(np.float64)
    ph, pw = plan.compressed_shape
    if vals.shape == (plan.n, plan.n) and (ph, pw) != (plan.n, plan.n):
        vals = vals[:ph, :pw]  # strip the tensor padding
    restored = codec.decompress(codec.FlowMap(vals, "compressed"), plan)
    p, q = plan.original_shape
    tensorio.write_flow_tensor(
        args.out, restored.values, n=plan.n, p=p, q=q, trim=plan.trim,
        seed=header.get("seed", 0), scale=header.get("scale"),
    )
    if args.render:
        _write_image(args.render, metrics.render_heatmap(restored.values))
    print(f"decoded to {p}x{q}")
    return 0


def cmd_flow(args) -> int:
    s = load_scenario(args.scenario, seed=args.seed)
    if args.regime == "sparse":
        fm = flowgen.proxy_sparse_flow(s)
    else:
        fm = flowgen.proxy_dense_flow(s)
    p, q = s.env.shape
    tensorio.write_flow_tensor(args.out, fm.values, n=args.n, p=p, q=q, seed=s.seed)
    if args.render:
        _write_image(args.render, metrics.render_heatmap(fm.values, nav=s.env.nav))
    print(f"proxy {args.regime} flow over {int((fm.values > 0).sum())} cells")
    return 0


def cmd_simulate(args) -> int:
    s = load_scenario(args.scenario, seed=args.seed)
    params = flowgen.SocialForceParams(max_steps=args.steps, timestep=args.dt)
    traj = flowgen.simulate_social_force(s, params)
    fm = flowgen.accumulate_flow(traj, s.env)
    p, q = s.env.shape
    tensorio.write_flow_tensor(args.out, fm.values, n=args.n, p=p, q=q, seed=s.seed)
    if args.trajectories:
        Path(args.trajectories).write_text(flowgen.trajectories_to_jsonl(traj))
    if args.render:
        _write_image(args.render, metrics.render_heatmap(fm.values, nav=s.env.nav))
    done = int(traj.finished.sum())
    print(f"simulated {traj.frame_count} frames; {done}/{traj.agent_count} agents finished")
    return 0


def cmd_eval(args) -> int:
    _, pred = tensorio.read_tensor(args.pred)
    _, truth = tensorio.read_tensor(args.truth)
    nav = None
    if args.env:
        _, envarr = tensorio.read_tensor(args.env)
        nav = envarr[-1] > 0.5  # E channel is last
    m = metrics.mae(pred[0].astype(np.float64), truth[0].astype(np.float64), nav)
    k = metrics.kl_divergence(pred[0].astype(np.float64), truth[0].astype(np.float64), nav)
    report = metrics.EvalReport(
        case_id=args.case_id, regime=args.regime, goal=args.goal, mae=m, kl=k
    )
    if args.report:
        Path(args.report).write_text(metrics.reports_to_json([report]))
    if args.csv:
        Path(args.csv).write_text(metrics.reports_to_csv([report]))
    print(f"mae={m:.6f} kl={k:.6f}")
    return 0


def cmd_render(args) -> int:
    header, arr = tensorio.read_tensor(args.input)
    if header.get("kind") == "cage":
        nav = arr[4] > 0.5
        agents = arr[2] > 0
        if args.channel == "a":
            rgb = metrics.render_heatmap(arr[2].astype(np.float64), nav=nav)
        elif args.channel == "e":
            rgb = metrics.render_heatmap(arr[4].astype(np.float64))
        else:  # composite: goal heatmap, red nearest goal, agents in white
            gnorm = arr[3].astype(np.float64)
            rgb = metrics.render_heatmap(1.0 - gnorm, nav=nav, agents=agents)
    else:
        rgb = metrics.render_heatmap(arr[0].astype(np.float64))
    _write_image(args.out, rgb)
    print(f"rendered {args.input} -> {args.out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="cageflow", description=__doc__)
    parser.add_argument(
        "--version",
        action="version",
        version=f"cageflow {__version__} (tensor format v{tensorio.FORMAT_VERSION})",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="emit a dataset")
    g.add_argument("--out", required=True)
    g.add_argument("--group", action="append", default=None, choices=dataset.GROUPS)
    g.add_argument("--count", type=int, default=4)
    g.add_argument("--n", type=int, default=codec.DEFAULT_N)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--render", action="store_true")
    g.add_argument("--workers", type=int, default=0)
    g.add_argument("--config", default=None, help="JSON file overriding flags")
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("encode", help="scenario JSON to CAGE tensor")
    e.add_argument("--scenario", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--plan", required=True)
    e.add_argument("--n", type=int, default=codec.DEFAULT_N)
    e.add_argument("--seed", type=int, default=None)
    e.set_defaults(func=cmd_encode)

    d = sub.add_parser("decode", help="compressed flow back to original grid")
    d.add_argument("--flow", required=True)
    d.add_argument("--plan", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--render", default=None)
    d.set_defaults(func=cmd_decode)

    f = sub.add_parser("flow", help="proxy crowd flow for a scenario")
    f.add_argument("--scenario", required=True)
    f.add_argument("--regime", choices=("sparse", "dense"), default="sparse")
    f.add_argument("--out", required=True)
    f.add_argument("--n", type=int, default=codec.DEFAULT_N)
    f.add_argument("--seed", type=int, default=None)
    f.add_argument("--render", default=None)
    f.set_defaults(func=cmd_flow)

    s = sub.add_parser("simulate", help="social-force flow for a scenario")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--n", type=int, default=codec.DEFAULT_N)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--steps", type=int, default=2000)
    s.add_argument("--dt", type=float, default=0.05)
    s.add_argument("--trajectories", default=None)
    s.add_argument("--render", default=None)
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("eval", help="compare predicted and ground-truth flow")
    v.add_argument("--pred", required=True)
    v.add_argument("--truth", required=True)
    v.add_argument("--env", default=None, help="CAGE tensor whose E channel masks metrics")
    v.add_argument("--case-id", default="case")
    v.add_argument("--regime", default="sparse")
    v.add_argument("--goal", default="G")
    v.add_argument("--report", default=None)
    v.add_argument("--csv", default=None)
    v.set_defaults(func=cmd_eval)

    r = sub.add_parser("render", help="tensor to heatmap image")
    r.add_argument("--input", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--channel", choices=("composite", "a", "e"), default="composite")
    r.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "gen" and args.group is None:
        args.group = ["sparse-proxy"]
    try:
        return args.func(args)
    except (CageflowError, OSError, json.JSONDecodeError) as err:
        print(f"cageflow: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
