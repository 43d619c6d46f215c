import json

import numpy as np
import pytest

from robustgf.cli import main
from robustgf.graph import graph_from_json, graph_to_json, generate_er, eigendecompose, laplacian
from robustgf.spectral import build_ideal_mask


def _write(path, text):
    path.write_text(text)
    return str(path)


def test_gen_writes_connected_graph(tmp_path):
    cfg = _write(tmp_path / "gen.json", json.dumps(
        {"graph": {"type": "sbm", "n_per_cluster": 6, "p_intra": 0.8, "p_inter": 0.2}, "seed": 5}))
    out = tmp_path / "graph.json"
    assert main(["gen", "--config", cfg, "--out", str(out)]) == 0
    graph = graph_from_json(out.read_text())
    assert graph.num_nodes == 12
    assert graph.is_connected


def test_gen_accepts_toml(tmp_path):
    cfg = _write(tmp_path / "gen.toml", '[graph]\ntype = "er"\nn = 10\np = 0.6\n')
    out = tmp_path / "graph.json"
    assert main(["gen", "--config", cfg, "--out", str(out), "--seed", "3"]) == 0
    assert graph_from_json(out.read_text()).num_nodes == 10


def _design_config(tmp_path, graph, kind, prob, extras=None):
    gpath = tmp_path / "graph.json"
    gpath.write_text(graph_to_json(graph))
    present = list(graph.edges)
    cfg = {
        "graph": {"type": "file", "path": str(gpath)},
        "model": {"edges": [
            {"u": present[0][0], "v": present[0][1], "sigma": -1, "p": prob},
            {"u": present[3][0], "v": present[3][1], "sigma": -1, "p": prob},
        ]},
        "design": kind,
        "mask": {"type": "heat", "tau": 1.0},
        "fir": {"order": 3},
    }
    if extras:
        cfg.update(extras)
    return _write(tmp_path / "design.json", json.dumps(cfg))


def test_design_spectral_passthrough_at_zero_probability(tmp_path):
    graph = generate_er(10, 0.6, seed=12)
    cfg = _design_config(tmp_path, graph, "spectral", 0.0)
    out = tmp_path / "design_out.json"
    assert main(["design", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    eig = eigendecompose(laplacian(graph))
    nominal = build_ideal_mask(eig, {"type": "heat", "tau": 1.0})
    assert np.allclose(payload["mask"], nominal, atol=1e-10)


def test_design_fir_passthrough_at_zero_probability(tmp_path):
    graph = generate_er(10, 0.6, seed=12)
    cfg = _design_config(tmp_path, graph, "fir", 0.0)
    out = tmp_path / "design_out.json"
    assert main(["design", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert np.allclose(payload["taps"], payload["nominal_taps"], atol=1e-8)
    assert payload["condition_estimate"] > 0


def test_design_noisy_passthrough_clean_unperturbed(tmp_path):
    graph = generate_er(10, 0.6, seed=12)
    cfg = _design_config(tmp_path, graph, "noisy", 0.0,
                         extras={"noisy": {"gamma": 2.0, "noise_variance": 0.0}})
    out = tmp_path / "design_out.json"
    assert main(["design", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert np.allclose(payload["taps"], payload["nominal_taps"], atol=1e-8)


def test_validate_default_battery_small(tmp_path):
    cfg = _write(tmp_path / "val.json", json.dumps(
        {"instances": 3, "max_nodes": 14, "max_edges": 5, "seed": 2}))
    out = tmp_path / "val_out.json"
    assert main(["validate", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["mode"] == "default"
    assert payload["passed"] is True
    assert payload["max_rel_error"] <= 1e-8
    assert len(payload["reports"]) == 9


def test_validate_compatibility_mode_reports_deviations(tmp_path):
    cfg = _write(tmp_path / "val.json", json.dumps(
        {"instances": 3, "max_nodes": 14, "max_edges": 5, "seed": 2, "compatibility": True}))
    out = tmp_path / "val_out.json"
    assert main(["validate", "--config", cfg, "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["mode"] == "compatibility"
    assert payload["passed"] is True  # deviations present, as expected
    assert payload["max_rel_error"] > 1e-8
    assert any("literal" in r["quantity_name"] for r in payload["reports"])


def test_experiment_csv_deterministic(tmp_path):
    cfg = _write(tmp_path / "exp.json", json.dumps({
        "experiment": "perturbation-sweep",
        "graph": {"type": "sbm", "n_per_cluster": 6, "p_intra": 0.8, "p_inter": 0.2},
        "trials": 2,
        "seed": 4,
        "fractions": [0.0, 0.1],
        "fir_order": 2,
    }))
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["experiment", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["experiment", "--config", cfg, "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    lines = out1.read_text().splitlines()
    assert lines[0].startswith("#config-hash=")
    assert lines[1] == "#seed=4"


def test_missing_config_is_usage_error(tmp_path):
    assert main(["experiment", "--config", str(tmp_path / "nope.json")]) == 2


def test_malformed_config_is_usage_error(tmp_path):
    bad = _write(tmp_path / "bad.cfg", "{this is neither json nor [toml")
    assert main(["experiment", "--config", bad]) == 2


def test_incomplete_config_is_usage_error(tmp_path):
    cfg = _write(tmp_path / "exp.json", json.dumps({"experiment": "perturbation-sweep"}))
    assert main(["experiment", "--config", cfg]) == 2


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
