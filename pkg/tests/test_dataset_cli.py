import hashlib
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import cageflow as cf
from cageflow import dataset, tensorio
from cageflow.cli import main
from cageflow.floorplan import TYPE_COMBOS


def tree_digest(root: Path) -> dict:
    out = {}
    for path in sorted(root.rglob("*")):
        if path.is_file():
            out[str(path.relative_to(root))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return out


def run_cli(*args):
    return main(list(args))


def run_cli_proc(*args):
    return subprocess.run(
        [sys.executable, "-m", "cageflow", *args], capture_output=True, text=True
    )


# ------------------------------------------------------------------ datasets

def test_single_sample_emission(tmp_path):
    cfg = dataset.RunConfig(out_dir=str(tmp_path), groups=("sparse-proxy",), count=1, n=24, master_seed=3, workers=1)
    manifest = dataset.emit_dataset(cfg)
    assert len(manifest["samples"]) == 1
    rec = manifest["samples"][0]
    for key in ("x", "y", "plan"):
        path = tmp_path / rec["files"][key]
        assert path.exists()
        assert hashlib.sha256(path.read_bytes()).hexdigest() == rec["sha256"][key]
    # re-run reproduces identical checksums
    manifest2 = dataset.emit_dataset(cfg)
    assert manifest == manifest2


def test_twelve_samples_cover_all_type_combos(tmp_path):
    cfg = dataset.RunConfig(out_dir=str(tmp_path), groups=("sparse-proxy",), count=12, n=24, master_seed=1, workers=1)
    manifest = dataset.emit_dataset(cfg)
    combos = {(r["morphology"], r["organization"]) for r in manifest["samples"]}
    assert combos == set(TYPE_COMBOS)


def test_group_routing_and_regimes(tmp_path):
    cfg = dataset.RunConfig(
        out_dir=str(tmp_path),
        groups=("sparse-proxy", "dense-proxy", "sparse-simulated", "dense-simulated"),
        count=1,
        n=24,
        master_seed=5,
        workers=1,
    )
    manifest = dataset.emit_dataset(cfg)
    by_group = {r["group"]: r for r in manifest["samples"]}
    assert by_group["sparse-proxy"]["agents"] <= 25
    assert by_group["sparse-simulated"]["regime"] == "sparse"
    assert by_group["dense-simulated"]["source"] == "simulated"
    assert by_group["dense-proxy"]["source"] == "proxy"


def test_emitted_tensors_honor_invariants(tmp_path):
    cfg = dataset.RunConfig(out_dir=str(tmp_path), groups=("dense-proxy",), count=2, n=24, master_seed=11, workers=1)
    manifest = dataset.emit_dataset(cfg)
    for rec in manifest["samples"]:
        header, x = tensorio.read_tensor(tmp_path / rec["files"]["x"])
        assert header["kind"] == "cage" and x.shape == (5, 24, 24)
        cx, cy, a, g, e = x
        assert (cx >= 1).all() and (cy >= 1).all()
        assert a.min() >= 0 and a.max() <= 1
        assert g.min() >= 0 and g.max() <= 1
        assert set(np.unique(e)) <= {0.0, 1.0}
        assert (a[e == 0] == 0).all()
        yh, y = tensorio.read_tensor(tmp_path / rec["files"]["y"])
        assert yh["kind"] == "flow" and y.shape == (1, 24, 24)
        assert y.min() >= 0 and y.max() <= 1.0 + 1e-6
        assert (y[0][e == 0] == 0).all()


def test_emitted_pairs_roundtrip_mass(tmp_path):
    cfg = dataset.RunConfig(out_dir=str(tmp_path), groups=("sparse-proxy",), count=3, n=24, master_seed=8, workers=1)
    manifest = dataset.emit_dataset(cfg)
    for rec in manifest["samples"]:
        plan = tensorio.read_plan(tmp_path / rec["files"]["plan"])
        _, y = tensorio.read_tensor(tmp_path / rec["files"]["y"])
        ph, pw = plan.compressed_shape
        vals = y[0, :ph, :pw].astype(np.float64)
        restored = cf.decompress(cf.FlowMap(vals, "compressed"), plan)
        assert abs(restored.values.sum() * rec["y_scale"] - rec["flow_mass"]) < 1e-6 * max(
            1.0, rec["flow_mass"]
        )


def test_parallel_workers_match_serial(tmp_path):
    a = tmp_path / "serial"
    b = tmp_path / "parallel"
    cfg_a = dataset.RunConfig(out_dir=str(a), groups=("sparse-proxy",), count=4, n=24, master_seed=2, workers=1)
    cfg_b = dataset.RunConfig(out_dir=str(b), groups=("sparse-proxy",), count=4, n=24, master_seed=2, workers=4)
    dataset.emit_dataset(cfg_a)
    dataset.emit_dataset(cfg_b)
    assert tree_digest(a) == tree_digest(b)


def test_thread_env_caps_workers(monkeypatch):
    monkeypatch.setenv("CAGEFLOW_THREADS", "2")
    assert dataset.resolve_workers(8) == 2
    monkeypatch.delenv("CAGEFLOW_THREADS")
    assert dataset.resolve_workers(3) == 3


def test_run_config_validation(tmp_path):
    with pytest.raises(ValueError):
        dataset.RunConfig(out_dir=str(tmp_path), n=4)
    with pytest.raises(ValueError):
        dataset.RunConfig(out_dir=str(tmp_path), count=0)
    with pytest.raises(ValueError):
        dataset.RunConfig(out_dir=str(tmp_path), groups=("bogus",))


# ----------------------------------------------------------------------- CLI

SCENARIO = {
    "rows": [
        "########",
        "#......#",
        "#.A..G.#",
        "#......#",
        "########",
    ],
    "cell_width": 0.5,
    "seed": 1,
}


@pytest.fixture()
def scenario_file(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(SCENARIO))
    return path


def test_version_flag():
    proc = run_cli_proc("--version")
    assert proc.returncode == 0
    assert "cageflow 0.1.0" in proc.stdout
    assert "format v1" in proc.stdout


def test_usage_error_exits_one():
    proc = run_cli_proc("gen")  # missing --out
    assert proc.returncode == 1
    assert "error" in proc.stderr


def test_unknown_subcommand_exits_one():
    proc = run_cli_proc("frobnicate")
    assert proc.returncode == 1


def test_encode_flow_eval_roundtrip(tmp_path, scenario_file):
    x = tmp_path / "x.tensor"
    plan = tmp_path / "plan.json"
    assert run_cli("encode", "--scenario", str(scenario_file), "--out", str(x), "--plan", str(plan), "--n", "8") == 0
    flow = tmp_path / "flow.tensor"
    assert run_cli("flow", "--scenario", str(scenario_file), "--out", str(flow)) == 0
    report = tmp_path / "report.json"
    csvp = tmp_path / "report.csv"
    assert (
        run_cli("eval", "--pred", str(flow), "--truth", str(flow), "--report", str(report), "--csv", str(csvp)) == 0
    )
    rep = json.loads(report.read_text())[0]
    assert rep["mae"] == 0.0 and rep["kl"] == 0.0
    assert csvp.read_text().splitlines()[0] == "case_id,regime,goal,mae,kl"


def test_decode_mismatched_plan_exits_two(tmp_path, scenario_file):
    plan_path = tmp_path / "plan.json"
    x = tmp_path / "x.tensor"
    # n=4 forces real compression, so original-resolution flow cannot match
    run_cli("encode", "--scenario", str(scenario_file), "--out", str(x), "--plan", str(plan_path), "--n", "4")
    plan = tensorio.read_plan(plan_path)
    assert plan.compressed_shape != (5, 8)
    flow = tmp_path / "flow.tensor"
    run_cli("flow", "--scenario", str(scenario_file), "--out", str(flow))
    proc = run_cli_proc("decode", "--flow", str(flow), "--plan", str(plan_path), "--out", str(tmp_path / "d.tensor"))
    assert proc.returncode == 2
    assert "DimensionMismatch" in proc.stderr


def test_decode_padded_prediction(tmp_path, scenario_file):
    plan_path = tmp_path / "plan.json"
    x = tmp_path / "x.tensor"
    run_cli("encode", "--scenario", str(scenario_file), "--out", str(x), "--plan", str(plan_path), "--n", "4")
    plan = tensorio.read_plan(plan_path)
    pl = plan.placements[0]
    fake = np.zeros((4, 4))
    fake[pl.crow0, pl.ccol0] = 0.5  # a navigable compressed cell
    pred = tmp_path / "pred.tensor"
    tensorio.write_flow_tensor(pred, fake, n=4, p=5, q=8, seed=0)
    out = tmp_path / "restored.tensor"
    assert run_cli("decode", "--flow", str(pred), "--plan", str(plan_path), "--out", str(out)) == 0
    header, arr = tensorio.read_tensor(out)
    assert (header["p"], header["q"]) == (5, 8)
    assert abs(arr.sum() - 0.5) < 1e-6


def test_simulate_cli(tmp_path, scenario_file):
    out = tmp_path / "sim.tensor"
    traj = tmp_path / "traj.jsonl"
    assert (
        run_cli(
            "simulate", "--scenario", str(scenario_file), "--out", str(out),
            "--steps", "200", "--trajectories", str(traj),
        )
        == 0
    )
    lines = [json.loads(l) for l in traj.read_text().splitlines()]
    assert lines and {"frame", "agent", "x", "y"} <= set(lines[0])


def test_render_cli(tmp_path, scenario_file):
    x = tmp_path / "x.tensor"
    plan = tmp_path / "plan.json"
    run_cli("encode", "--scenario", str(scenario_file), "--out", str(x), "--plan", str(plan), "--n", "8")
    png = tmp_path / "x.png"
    ppm = tmp_path / "x.ppm"
    assert run_cli("render", "--input", str(x), "--out", str(png)) == 0
    assert run_cli("render", "--input", str(x), "--out", str(ppm)) == 0
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert ppm.read_bytes()[:2] == b"P6"


def test_gen_cli_deterministic_trees(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert (
            run_cli(
                "gen", "--out", str(out), "--group", "sparse-proxy",
                "--count", "2", "--n", "24", "--seed", "9", "--render", "--workers", "1",
            )
            == 0
        )
    da, db = tree_digest(a), tree_digest(b)
    assert da == db
    assert any(name.endswith(".png") for name in da)


def test_gen_config_file_overrides(tmp_path):
    cfg_file = tmp_path / "run.json"
    cfg_file.write_text(json.dumps({"count": 1, "n": 16, "groups": ["sparse-proxy"]}))
    out = tmp_path / "ds"
    assert run_cli("gen", "--out", str(out), "--count", "5", "--config", str(cfg_file), "--workers", "1") == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["count_per_group"] == 1 and manifest["n"] == 16
