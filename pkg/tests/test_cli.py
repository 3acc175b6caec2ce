import copy
import json
from pathlib import Path

import numpy as np
import pytest

from polprop import cli

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

BASE = {
    "spacetime": {"kind": "minkowski", "dim": 4},
    "operator": {"rank": 1},
    "query": {
        "p": {"x": [-2, 0, 0, 2], "k": [1, 0, 0, 1]},
        "p_prime": {"x": [0, 0, 0, 0], "k": [1, 0, 0, 1]},
    },
}


def run(tmp_path, cfg, *args):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "out.txt"
    code = cli.main([*args, "--config", str(path), "--out", str(out)])
    return code, (out.read_text() if out.exists() else "")


def test_relate_worked_pair(tmp_path):
    code, text = run(tmp_path, BASE, "relate")
    data = json.loads(text)
    assert code == 0
    assert data["verdict"] == "in" and data["lambda_star"] == 1.0


def test_polfibre_proca_diagonal(tmp_path):
    cfg = copy.deepcopy(BASE)
    del cfg["operator"]
    cfg["proca"] = {"m": 1.0}
    cfg["query"] = {
        "p": {"x": [0, 0, 0, 0], "k": [1, 0, 1, 0]},
        "p_prime": {"x": [0, 0, 0, 0], "k": [1, 0, 1, 0]},
        "variant": "proca",
    }
    code, text = run(tmp_path, cfg, "polfibre")
    basis = np.array(json.loads(text)["fibre"]["basis"])
    w = basis[..., 0] + 1j * basis[..., 1]
    want = np.outer([1, 0, 1, 0], [1, 0, -1, 0])
    assert code == 0
    assert np.linalg.norm(w / np.vdot(want, w) * np.vdot(want, want) - want) <= 1e-12


def test_geodesic_csv(tmp_path):
    cfg = copy.deepcopy(BASE)
    cfg["query"]["lambda_range"] = [0, 1]
    code, text = run(tmp_path, cfg, "geodesic", "--format", "csv")
    lines = text.split("\n")
    assert code == 0
    assert lines[0] == "lambda,x0,x1,x2,x3,k0,k1,k2,k3,q"
    assert lines[-1] == "" and "\r" not in text
    last = [float(v) for v in lines[-2].split(",")]
    assert last[:5] == [1.0, -4.0, 0.0, 0.0, 4.0]


def test_csv_only_for_geodesic(tmp_path):
    assert run(tmp_path, BASE, "relate", "--format", "csv")[0] == 2


def test_transport_and_symbol(tmp_path):
    code, text = run(tmp_path, json.loads((CONFIGS / "flrw_transport.json").read_text()), "transport")
    data = json.loads(text)
    assert code == 0 and data["verdict"] == "in" and data["propagator"]["condition"] >= 1.0
    code, text = run(tmp_path, json.loads((CONFIGS / "symbol_compose.json").read_text()), "symbol")
    terms = {tuple(t["alpha"]): t for t in json.loads(text)["result"]["terms"]}
    assert terms[(1, 1)]["re"] == [["x0*x0"]] and terms[(0, 1)]["re"] == [["x0"]]


def test_symbol_default_is_operator(tmp_path):
    cfg = copy.deepcopy(BASE)
    cfg["symbol"] = {"which": "subprincipal"}
    code, text = run(tmp_path, cfg, "symbol")
    assert code == 0 and json.loads(text)["result"]["terms"] == []


def test_proca_demo(tmp_path):
    cfg = copy.deepcopy(BASE)
    del cfg["operator"]
    cfg["proca"] = {"m": 2.0}
    code, text = run(tmp_path, cfg, "proca-demo")
    data = json.loads(text)["proca"]
    assert code == 0
    assert data["wf_claim"]["nonzero"] and not data["negative_control"]["nonzero"]


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.json")))
def test_determinism(tmp_path, name):
    cfg = json.loads((CONFIGS / name).read_text())
    cmd = "symbol" if "symbol" in cfg else "polfibre" if "variant" in cfg.get("query", {}) else "relate"
    a = run(tmp_path, cfg, cmd, "--seed", "5")
    b = run(tmp_path, cfg, cmd, "--seed", "5")
    assert a == b and a[0] == 0


def test_dumps_seventeen_digits():
    text = cli.dumps({"a": 0.1, "b": [1 / 3, -0.0, 2.0, 1j], "c": np.float64(1e-20)})
    assert '"a": 0.10000000000000001' in text
    assert "0.33333333333333331" in text and "-0.0" not in text
    assert "[0.0, 1.0]" in text and "9.9999999999999995e-21" in text


MALFORMED = [
    ({"operator": {"rank": 1}}, "/"),
    ({"spacetime": {"kind": "torus"}, "operator": {"rank": 1}}, "/spacetime/kind"),
    ({"spacetime": {"kind": "minkowski", "dim": 7}, "operator": {"rank": 1}}, "/spacetime/dim"),
    ({"spacetime": {"kind": "minkowski"}}, "/"),
    ({"spacetime": {"kind": "minkowski"}, "operator": {"rank": 1}, "proca": {"m": 1}}, "/"),
    ({"spacetime": {"kind": "minkowski"}, "proca": {"m": -1}}, "/proca/m"),
    ({"spacetime": {"kind": "minkowski"}, "operator": {"rank": 0}}, "/operator/rank"),
    ({"spacetime": {"kind": "minkowski"}, "operator": {"rank": 2, "V": [["1", "0"]]}}, "/operator/V"),
    ({"spacetime": {"kind": "minkowski"}, "operator": {"rank": 1, "V": [["x7"]]}}, "/operator/V/0/0"),
    ({"spacetime": {"kind": "minkowski"}, "operator": {"rank": 1, "V": [["1 +"]]}}, "/operator/V/0/0"),
    ({"spacetime": {"kind": "minkowski"}, "operator": {"rank": 1, "C": [[["1"]]]}}, "/operator/C"),
    ({"spacetime": {"kind": "flrw", "a": "exp(x1)"}, "operator": {"rank": 1}}, "/spacetime/a"),
    ({"spacetime": {"kind": "custom", "metric": [["1", "0"], ["0", "-1"]]}, "operator": {"rank": 1}}, "/spacetime"),
    (
        {"spacetime": {"kind": "custom", "metric": [["1", "0"], ["0", "-1"]], "domain": [[1, 0], [0, 1]]},
         "operator": {"rank": 1}},
        "/spacetime/domain/0",
    ),
    ({"spacetime": {"kind": "minkowski"}, "operator": {"rank": 1}, "seed": -1}, "/seed"),
    ({"spacetime": {"kind": "minkowski"}, "operator": {"rank": 1}, "tolerances": {"tol_pos": 0}}, "/tolerances/tol_pos"),
    ({"spacetime": {"kind": "minkowski"}, "operator": {"rank": 1}, "extra": 1}, "/"),
    (
        {"spacetime": {"kind": "minkowski", "dim": 2}, "operator": {"rank": 1},
         "query": {"p": {"x": [0, 0, 0], "k": [1, 1, 0]}}},
        "/query/p/x",
    ),
    (
        {"spacetime": {"kind": "minkowski", "dim": 2}, "operator": {"rank": 1},
         "symbol": {"which": "dual", "a": {"rank": 1, "order": 1, "terms": [{"alpha": [2, 0], "re": [["1"]]}]}}},
        "/symbol/a/terms/0/alpha",
    ),
]


@pytest.mark.parametrize("cfg, pointer", MALFORMED)
def test_schema_rejection(cfg, pointer):
    with pytest.raises(cli.ConfigError) as info:
        cfg_obj = cli.build_config(cfg)
        # some checks only fire when the block is used
        cli.cmd_symbol(cfg_obj, None)
    assert info.value.pointer == pointer


def test_bad_config_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert cli.main(["relate", "--config", str(path)]) == 2
    assert "config error at /" in capsys.readouterr().err


def test_verify_with_config(tmp_path):
    code, text = run(tmp_path, json.loads((CONFIGS / "flrw_transport.json").read_text()), "verify")
    data = json.loads(text)
    assert code == 0 and data["passed"] and data["scope"] == "config"
    ids = [r["id"] for r in data["results"]]
    assert ids == sorted(ids)


def test_verify_builtin_suite(tmp_path):
    out = tmp_path / "report.json"
    assert cli.main(["verify", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["passed"] and {f"A{i}" for i in range(1, 10)} <= {r["id"] for r in data["results"]}
