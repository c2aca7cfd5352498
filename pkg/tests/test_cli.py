import json
import math

import numpy as np
import pytest

from rkbslab.activation import matrix_from_csv
from rkbslab.cli import EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, EXIT_SUITE, main
from rkbslab.config import ConfigError, parse_config
from rkbslab.report import digest, dumps


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _read(path):
    return json.loads(path.read_text())


def test_dumps_is_canonical():
    text = dumps({"b": -0.0, "a": [float("nan"), 0.1, np.float64(1 / 3)], "c": True})
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert '"b": 0' in text and "null" in text
    assert "0.33333333333333331" in text and "0.10000000000000001" in text
    assert json.loads(text)["b"] == 0


def test_digest_ignores_key_order():
    assert digest({"x": 1, "y": [1.5]}) == digest({"y": [1.5], "x": 1})
    assert digest({"x": 1}) != digest({"x": 2})


def test_config_defaults():
    cfg = parse_config({"seed": 0})
    assert (cfg.n, cfg.m) == (8, 16)
    assert cfg.family.kind == "relu" and cfg.loss == "squared"
    assert cfg.partition.n_blocks == 2 and cfg.partition.covers()
    assert cfg.teacher is not None and len(cfg.teacher["support"]) == 3
    assert cfg.lambda_factors == (0.1,)


@pytest.mark.parametrize("bad", [
    {},
    {"seed": -1},
    {"seed": 1.5},
    {"seed": 0, "colour": "red"},
    {"seed": 0, "activation": {"kind": "sigmoid"}},
    {"seed": 0, "grid": {"m": 0}},
    {"seed": 0, "partition": {"rule": "explicit", "blocks": [[0], [0]]}},
    {"seed": 0, "labels": {"source": "inline", "values": [1.0]}},
    {"seed": 0, "tolerances": {"kernel": -1.0}},
    {"seed": 0, "suites": ["nope"]},
    {"seed": 0, "solver": {"feas_tol": 0}},
])
def test_config_rejects(bad):
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_config_explicit_instance_and_label_file(tmp_path):
    (tmp_path / "y.csv").write_text("1.0\n-2.0\n")
    cfg = parse_config({
        "seed": 4,
        "activation": {"kind": "relu"},
        "samples": {"scheme": "explicit", "points": [[1.0], [2.0]]},
        "grid": {"scheme": "explicit", "atoms": [{"theta": [1.0], "bias": 0.0},
                                                  {"theta": [-1.0], "bias": 1.0}]},
        "partition": {"rule": "explicit", "blocks": [[1], [0]]},
        "labels": {"source": "file", "path": "y.csv"},
    }, str(tmp_path))
    np.testing.assert_array_equal(cfg.matrix(), [[1.0, 0.0], [2.0, 0.0]])
    np.testing.assert_array_equal(cfg.labels, [1.0, -2.0])
    assert cfg.teacher is None


def test_assemble_and_spectrum(tmp_path):
    cfg = _write(tmp_path, {"seed": 1, "samples": {"n": 3, "d": 2}, "grid": {"m": 5}})
    assert main(["assemble", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_OK
    A = matrix_from_csv((tmp_path / "o" / "matrix.csv").read_text())
    assert A.shape == (3, 5)
    assert main(["spectrum", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_OK
    lines = (tmp_path / "o" / "spectrum.csv").read_text().splitlines()
    assert lines[0] == "index,singular_value"
    s = np.array([float(line.split(",")[1]) for line in lines[1:]])
    np.testing.assert_allclose(s, np.linalg.svd(A, compute_uv=False), rtol=1e-12)


def test_norm_report(tmp_path):
    cfg = _write(tmp_path, {"seed": 2, "samples": {"n": 3}, "grid": {"m": 12, "low": -2, "high": 2}})
    assert main(["norm", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    out = _read(tmp_path / "norms.json")
    assert out["seed"] == 2 and len(out["config_digest"]) == 64
    for p in ("p1", "p2"):
        assert out["sum_joint"][p] == pytest.approx(out["sum_nested"][p], rel=1e-6)
    assert out["integral"] <= out["pnorm_p1"] + 1e-9
    assert out["pnorm_p1"] <= out["pnorm_p2"] + 1e-9
    assert out["integral"] == pytest.approx(out["sum_joint"]["p1"], rel=1e-6)


def test_train_threshold_artifact(tmp_path):
    cfg = _write(tmp_path, {"seed": 5, "lambda_factors": [1.0, 0.05], "strategy": "exchange",
                            "labels": {"noise": 0.1}})
    assert main(["train", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    top = _read(tmp_path / "train_000.json")
    assert top["atoms"] == [] and top["lambda"] == top["lambda_max"]
    small = _read(tmp_path / "train_001.json")
    assert 0 < len(small["atoms"]) <= 8
    assert {"index", "weight", "theta", "bias"} <= set(small["atoms"][0])
    assert small["kkt_surplus"] <= 1e-4 * small["lambda"]
    assert small["teacher"]["noise"] == 0.1


def test_verify_pass_and_determinism(tmp_path):
    cfg = _write(tmp_path, {"seed": 7, "suites": ["decomposition", "inclusion"],
                            "suite_sizes": {"decomposition": 5, "inclusion": 5}})
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["verify", "--config", cfg, "--out", str(a)]) == EXIT_OK
    assert main(["verify", "--config", cfg, "--out", str(b)]) == EXIT_OK
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    rep = _read(a / "report_decomposition.json")
    assert rep["pass"] is True and len(rep["instances"]) == 5 and rep["seed"] == 7
    assert rep["config_digest"] == digest(json.loads((tmp_path / "cfg.json").read_text()))


def test_verify_failure_exit(tmp_path):
    cfg = _write(tmp_path, {"seed": 3, "suites": ["kernel"], "suite_sizes": {"kernel": 5},
                            "tolerances": {"kernel": 0}})
    assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == EXIT_SUITE
    assert _read(tmp_path / "summary.json")["pass"] is False


def test_bad_config_exit(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["norm", "--config", str(bad)]) == EXIT_CONFIG
    assert "bad config" in capsys.readouterr().err
    assert main(["norm", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert main(["frobnicate", "--config", str(bad)]) == EXIT_CONFIG


def test_not_representable_exit(tmp_path):
    # five samples, two atoms: generic inline labels leave the range of A
    cfg = _write(tmp_path, {"seed": 0, "samples": {"n": 5}, "grid": {"m": 2},
                            "labels": {"source": "inline", "values": [1, -1, 2, 0.5, 3]}})
    assert main(["norm", "--config", cfg, "--out", str(tmp_path)]) == EXIT_SOLVER


def test_nonfinite_fields_serialize_as_null(tmp_path):
    text = dumps({"x": math.inf})
    assert json.loads(text) == {"x": None}
