import csv
import json

import numpy as np
import pytest

from corrspectra.cli import main
from corrspectra.estimators import EstimatorReport, estimate_all
from corrspectra.hp import hp_filter
from corrspectra.io import (
    ModelConfig,
    dump_model_config,
    parse_model_config,
    read_data_csv,
    read_series_csv,
    write_columns_csv,
    write_data_csv,
)
from corrspectra.linalg import sym_eigvals
from corrspectra.models import build_enp, build_noise, sample_dataset
from corrspectra.sample import corr_from_cov, cov_data

ENP_CONFIG = """
[model]
family = enp
L = 1.0
sigma = 1.0
p = 3

[sample]
n = 5
"""


def read_columns(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(c) if c else np.nan for c in r] for r in rows[1:]])


@pytest.fixture
def enp_config(tmp_path):
    path = tmp_path / "enp.ini"
    path.write_text(ENP_CONFIG)
    return path


def test_config_parse_and_round_trip():
    model, extra = parse_model_config(ENP_CONFIG)
    assert model.family == "enp" and model.p == 3
    assert model.params == {"L": 1.0, "sigma": 1.0}
    assert extra == {"sample": {"n": "5"}}
    again, extra2 = parse_model_config(dump_model_config(model, extra))
    assert again == model and extra2 == extra


def test_config_acfm_and_errors():
    model, _ = parse_model_config("[model]\nfamily = acfm\nK = 2\nell = 1.0, 0.5\nsigma = 1\ndrift_scale = 1\n")
    spec = model.build(10)
    assert spec.K == 2 and spec.family == "acfm"
    assert model.params["ell"] == [1.0, 0.5]
    with pytest.raises(ValueError, match="missing"):
        parse_model_config("[model]\nfamily = clfm\nK = 3\n")
    with pytest.raises(ValueError, match="family"):
        parse_model_config("[model]\nfamily = garch\n")
    with pytest.raises(ValueError, match=r"\[model\]"):
        parse_model_config("[other]\na = 1\n")
    with pytest.raises(ValueError, match="dimension"):
        ModelConfig("noise", {"sigma": 1.0}).build()


def test_data_csv_round_trip(tmp_path):
    X = np.random.default_rng(0).standard_normal((3, 7))
    path = tmp_path / "d.csv"
    write_data_csv(path, X, ["a", "b", "c"])
    Y, names = read_data_csv(path)
    assert names == ["a", "b", "c"]
    np.testing.assert_array_equal(X, Y)
    lines = path.read_text().splitlines()
    assert lines[0] == "a,b,c" and len(lines) == 8


def test_data_csv_headerless_and_errors(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("1,2\n3,5\n")
    X, names = read_data_csv(path)
    assert names == ["x1", "x2"]
    np.testing.assert_array_equal(X, [[1, 3], [2, 5]])
    path.write_text("a,b\n1,2\n3\n")
    with pytest.raises(ValueError, match="ragged"):
        read_data_csv(path)
    path.write_text("a,b\n1,2\n3,x\n")
    with pytest.raises(ValueError, match="non-numeric"):
        read_data_csv(path)
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="at least 2"):
        read_data_csv(path)
    path.write_text("rho\n0.1\n0.2\n")
    np.testing.assert_array_equal(read_series_csv(path), [0.1, 0.2])


def test_columns_csv_blank_for_nan(tmp_path):
    path = tmp_path / "c.csv"
    write_columns_csv(path, {"a": [1.0, np.nan], "b": [2.0, 3.0]})
    assert path.read_text().splitlines() == ["a,b", "1.0,2.0", ",3.0"]


def test_simulate_is_deterministic(tmp_path, enp_config):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", str(enp_config), str(a), "--seed", "42"]) == 0
    assert main(["simulate", str(enp_config), str(b), "--seed", "42"]) == 0
    assert a.read_bytes() == b.read_bytes()
    X, names = read_data_csv(a)
    assert X.shape == (3, 5) and len(a.read_text().splitlines()) == 6
    np.testing.assert_array_equal(X, sample_dataset(build_enp(3, 1.0, 1.0), 5, 42))
    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert meta["seed"] == 42 and meta["n"] == 5 and meta["model"]["family"] == "enp"
    c = tmp_path / "c.csv"
    main(["simulate", str(enp_config), str(c), "--seed", "43"])
    assert c.read_bytes() != a.read_bytes()


def test_simulate_needs_n(tmp_path, capsys):
    cfg = tmp_path / "x.ini"
    cfg.write_text("[model]\nfamily = noise\nsigma = 1\np = 4\n")
    assert main(["simulate", str(cfg), str(tmp_path / "o.csv")]) == 1
    assert "sample size" in capsys.readouterr().err
    assert main(["simulate", str(cfg), str(tmp_path / "o.csv"), "--n", "6"]) == 0


def test_estimate_round_trip(tmp_path, capsys):
    cfg = tmp_path / "enp.ini"
    cfg.write_text("[model]\nfamily = enp\nL = 1\nsigma = 1\np = 200\n")
    data = tmp_path / "enp.csv"
    assert main(["simulate", str(cfg), str(data), "--seed", "5", "--n", "800"]) == 0
    capsys.readouterr()
    out_json = tmp_path / "rep.json"
    assert main(["estimate", str(data), "--format", "json", "--json", str(out_json)]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed == json.loads(out_json.read_text())
    rep = EstimatorReport.from_dict(printed)
    X, _ = read_data_csv(data)
    assert rep == estimate_all(X, label="enp")
    assert abs(rep.lambda1_over_p - 0.5) <= 0.04
    assert rep.bs == 1 and rep.p == 200 and rep.n == 800


def test_estimate_noise_table(tmp_path, capsys):
    data = tmp_path / "noise.csv"
    write_data_csv(data, sample_dataset(build_noise(100), 1000, 6))
    assert main(["estimate", str(data)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["dataset", "n", "p/n", "lambda1(C)/p", "p", "BS", "ACT", "Bai-Ng"]
    row = lines[2].split()
    assert row[:3] == ["noise", "1000", "0.1000"] and row[4:7] == ["100", "0", "0"]


def test_estimate_multiple_files_json(tmp_path, capsys):
    paths = []
    for k in range(2):
        p = tmp_path / f"d{k}.csv"
        write_data_csv(p, sample_dataset(build_noise(10), 40, k))
        paths.append(str(p))
    assert main(["estimate", *paths, "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert [d["label"] for d in payload] == ["d0", "d1"]


def test_zero_variance_column(tmp_path, capsys):
    X = np.random.default_rng(1).standard_normal((4, 30))
    X[2] = 3.0
    data = tmp_path / "flat.csv"
    write_data_csv(data, X, ["a", "b", "flat", "d"])
    assert main(["estimate", str(data)]) == 1
    assert "flat" in capsys.readouterr().err
    assert main(["estimate", str(data), "--clean", "--format", "json"]) == 0
    captured = capsys.readouterr()
    assert json.loads(captured.out)["p"] == 3
    assert "flat" in captured.err


def test_spectrum_command(tmp_path):
    X = sample_dataset(build_enp(12, 1.0, 1.0), 40, 3)
    data = tmp_path / "d.csv"
    write_data_csv(data, X)
    out = tmp_path / "eig.csv"
    assert main(["spectrum", str(data), "--out", str(out)]) == 0
    head, vals = read_columns(out)
    assert head == ["eigenvalue"]
    vals = vals[:, 0]
    assert abs(vals.sum() - 12) <= 1e-8
    assert np.array_equal(vals, sym_eigvals(corr_from_cov(cov_data(X))).values)
    assert main(["spectrum", str(data), "--which", "cov", "--centering", "theoretical", "--out", str(out)]) == 0
    _, cov_vals = read_columns(out)
    np.testing.assert_allclose(cov_vals[:, 0].sum(), np.sum(X**2) / 40)


def test_spectrum_of_identity_like_data(tmp_path):
    data = tmp_path / "d.csv"
    write_data_csv(data, sample_dataset(build_noise(5), 20000, 2))
    out = tmp_path / "eig.csv"
    main(["spectrum", str(data), "--out", str(out)])
    _, vals = read_columns(out)
    assert np.all(np.abs(vals - 1.0) <= 0.05)


def test_hpfilter_command(tmp_path, capsys):
    series = tmp_path / "s.csv"
    series.write_text("value\n" + "\n".join(["0.3"] * 10) + "\n")
    out = tmp_path / "hp.csv"
    assert main(["hpfilter", str(series), "--lambda", "1600", "--out", str(out)]) == 0
    head, cols = read_columns(out)
    assert head == ["input", "trend", "cycle"]
    np.testing.assert_allclose(cols[:, 1], 0.3, atol=1e-12)
    np.testing.assert_allclose(cols[:, 2], 0.0, atol=1e-12)

    y = np.random.default_rng(2).uniform(-0.9, 0.9, 50)
    series.write_text("\n".join(repr(float(v)) for v in y) + "\n")
    assert main(["hpfilter", str(series), "--lambda", "0", "--out", str(out)]) == 0
    _, cols = read_columns(out)
    np.testing.assert_array_equal(cols[:, 1], y)
    assert main(["hpfilter", str(series), "--lambda", "1e8", "--fisher-z", "--out", str(out)]) == 0
    _, cols = read_columns(out)
    z = np.arctanh(y)
    t = np.arange(50.0)
    A = np.column_stack([np.ones(50), t])
    line = A @ np.linalg.lstsq(A, z, rcond=None)[0]
    np.testing.assert_allclose(cols[:, 0], z, rtol=1e-15)
    assert np.max(np.abs(cols[:, 1] - line)) <= 1e-3
    np.testing.assert_array_equal(cols[:, 1], hp_filter(z, 1e8).trend)

    series.write_text("0.5\n1.0\n0.2\n")
    assert main(["hpfilter", str(series), "--fisher-z"]) == 1
    assert "row 2" in capsys.readouterr().err


def test_equicorr_command(tmp_path):
    data = tmp_path / "d.csv"
    write_data_csv(data, sample_dataset(build_enp(20, 1.0, 1.0), 500, 4))
    out = tmp_path / "eq.csv"
    assert main(["equicorr", str(data), "--window", "100", "--out", str(out)]) == 0
    head, cols = read_columns(out)
    assert head == ["equicorrelation"] and cols.shape == (401, 1)
    assert abs(np.mean(cols) - 0.5) <= 0.1


def test_mp_curve_command(tmp_path):
    out = tmp_path / "mp.csv"
    assert main(["mp-curve", "--c", "0.25", "--points", "33", "--out", str(out)]) == 0
    head, cols = read_columns(out)
    assert head == ["x", "density", "mp_cdf"] and cols.shape == (33, 3)
    assert cols[0, 0] == pytest.approx(0.25) and cols[-1, 0] == pytest.approx(2.25)
    assert cols[-1, 2] == pytest.approx(1.0)
    data = tmp_path / "d.csv"
    write_data_csv(data, sample_dataset(build_noise(50), 200, 1))
    assert main(["mp-curve", "--c", "0.25", "--csv", str(data), "--out", str(out)]) == 0
    head, cols = read_columns(out)
    assert head[-1] == "esd_cdf" and np.all(np.diff(cols[:, 3]) >= 0)


VERIFY_CONFIG = """
[model]
family = enp
L = 1.0
sigma = 1.0

[verify]
theorem = bounded_edge
grid = 500x2000
replicates = 20
master_seed = 1
"""


def test_verify_bounded_edge_passes(tmp_path, capsys):
    cfg = tmp_path / "v.ini"
    cfg.write_text(VERIFY_CONFIG)
    out = tmp_path / "v.json"
    assert main(["verify", "--config", str(cfg), "--json", str(out), "--threads", "2"]) == 0
    table = capsys.readouterr().out
    assert "lambda2(C)" in table and "overall: PASS" in table
    result = json.loads(out.read_text())
    assert result["schema_version"] == 1 and result["passed"] is True
    stat = result["points"][0]["stats"][0]
    assert stat["limit"] == pytest.approx(1.125)
    assert stat["rel_gap"] <= 0.05 and len(stat["values"]) == 20
    assert result["job"]["grid"] == [[500, 2000]]


def test_verify_breach_exit_code(tmp_path, capsys):
    cfg = tmp_path / "v.ini"
    cfg.write_text(VERIFY_CONFIG)
    code = main(["verify", "--config", str(cfg), "--grid", "100x400", "--replicates", "3", "--tolerance", "1e-6", "--format", "json"])
    assert code == 2
    assert json.loads(capsys.readouterr().out)["passed"] is False


def test_verify_usage_errors(tmp_path, capsys):
    cfg = tmp_path / "v.ini"
    cfg.write_text("[model]\nfamily = enp\nL = 1\nsigma = 1\n")
    assert main(["verify", "--config", str(cfg)]) == 1
    assert main(["verify", "--config", str(cfg), "--theorem", "spike_ratio", "--grid", "10x1"]) == 1
    assert main(["verify", "--config", str(cfg), "--theorem", "spike_ratio", "--grid", "abc"]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["verify"])
    assert exc.value.code == 1
    assert main(["estimate", str(tmp_path / "missing.csv")]) == 1
