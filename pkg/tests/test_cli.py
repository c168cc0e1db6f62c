import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from flexsteer.cli import main
from flexsteer.config import ExperimentConfig, dump_config, load_config
from flexsteer.errors import ModelError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def double_integrator(**overrides):
    cfg = {
        "system": {"kappa": 0.0, "omega": [2.0], "b": [1.0]},
        "tau": 1.0, "N": 0, "M": 1, "x0": [], "x1": [[0, 1.0]], "samples": 11,
    }
    cfg.update(overrides)
    return cfg


def read_csv(path):
    rows = list(csv.reader(io.StringIO(Path(path).read_text())))
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


# --- config -------------------------------------------------------------------


def test_config_round_trip():
    for path in sorted(CONFIGS.glob("*.json")):
        config = load_config(path)
        again = ExperimentConfig.from_dict(json.loads(dump_config(config)))
        assert again == config


def test_config_round_trip_random_endpoint():
    config = ExperimentConfig.from_dict(double_integrator(x1={"random_blocks": 2, "scale": 0.5}))
    assert ExperimentConfig.from_dict(config.to_dict()) == config


def test_config_rejects_unknown_fields():
    with pytest.raises(ModelError, match="unknown"):
        ExperimentConfig.from_dict(double_integrator(bogus=1))
    bad = double_integrator()
    bad["system"]["extra"] = True
    with pytest.raises(ModelError, match="unknown"):
        ExperimentConfig.from_dict(bad)


def test_config_rejects_out_of_range_index():
    with pytest.raises(ModelError, match="2M\\+1"):
        ExperimentConfig.from_dict(double_integrator(x1=[[4, 1.0]]))


def test_random_endpoints_follow_seed():
    config = ExperimentConfig.from_dict(double_integrator(x1={"random_blocks": 2}))
    assert config.endpoints(3) == config.endpoints(3)
    assert config.endpoints(3) != config.endpoints(4)


# --- gap-check ----------------------------------------------------------------------


def test_gap_check_squares(tmp_path, capsys):
    cfg = write_config(tmp_path, {"system": {"kappa": 0.0, "mode_count": 4,
                                             "preset": {"kind": "euler_bernoulli"}}})
    out = tmp_path / "gap.csv"
    assert main(["gap-check", "--config", cfg, "--checkpoints", "50,100,200",
                 "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["K", "partial_sum", "increment"]
    assert [r[0] for r in rows] == [50, 100, 200]
    inc = [r[2] for r in rows]
    assert inc[0] > inc[1] > inc[2]
    assert "divergent" not in capsys.readouterr().err


def test_gap_check_harmonic_warns(capsys):
    assert main(["gap-check", "--config", str(CONFIGS / "harmonic.json")]) == 0
    err = capsys.readouterr().err
    assert "divergent" in err


def test_gap_check_single_frequency(tmp_path, capsys):
    cfg = write_config(tmp_path, double_integrator())
    assert main(["gap-check", "--config", cfg, "--checkpoints", "1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[1].split(",")[:2] == ["1", "0"]


def test_gap_check_degenerate_spectrum(tmp_path):
    cfg = write_config(tmp_path, {"system": {"kappa": 0.0, "omega": [1.0, 2.0, 1.0],
                                             "b": [1.0, 1.0, 1.0]}})
    assert main(["gap-check", "--config", cfg, "--checkpoints", "3"]) == 2


# --- synthesize ------------------------------------------------------------------


def test_synthesize_double_integrator(tmp_path):
    cfg = write_config(tmp_path, double_integrator())
    law = tmp_path / "law.json"
    assert main(["synthesize", "--config", cfg, "--out", str(law)]) == 0
    data = json.loads(law.read_text())
    np.testing.assert_allclose(data["nu"], [12.0, -6.0], rtol=0, atol=1e-9)


def test_synthesize_free_motion_target(tmp_path):
    # unit velocity for one time unit lands on position 1, velocity 1
    cfg = write_config(tmp_path, double_integrator(x0=[[1, 1.0]], x1=[[0, 1.0], [1, 1.0]]))
    law = tmp_path / "law.json"
    assert main(["synthesize", "--config", cfg, "--out", str(law)]) == 0
    assert json.loads(law.read_text())["nu"] == [0.0, 0.0]


def test_synthesize_not_underdamped(tmp_path, capsys):
    data = double_integrator()
    data["system"] = {"kappa": 1.5, "omega": [1.0], "b": [1.0]}
    cfg = write_config(tmp_path, data)
    assert main(["synthesize", "--config", cfg, "--out", str(tmp_path / "l.json")]) == 2
    assert "not underdamped" in capsys.readouterr().err
    assert main(["synthesize", "--config", cfg, "--out", str(tmp_path / "l.json"),
                 "--allow-overdamped"]) == 0


def test_synthesize_singular_gramian(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "system": {"kappa": 0.0, "mode_count": 10, "preset": {"kind": "euler_bernoulli"}},
        "tau": 1e-3, "N": 8, "x1": [[0, 1.0]],
    })
    assert main(["synthesize", "--config", cfg, "--out", str(tmp_path / "l.json")]) == 3
    assert "Gramian singular" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["info", "--config", str(tmp_path / "nope.json")]) == 2


def test_info(tmp_path, capsys):
    assert main(["info", "--config", str(CONFIGS / "euler_bernoulli.json")]) == 0
    assert "fingerprint" in capsys.readouterr().out


# --- simulate ----------------------------------------------------------------------


def _simulate(tmp_path, cfg_data, law_overrides=None, name="traj.csv"):
    cfg = write_config(tmp_path, cfg_data)
    law = tmp_path / "law.json"
    assert main(["synthesize", "--config", cfg, "--out", str(law)]) == 0
    if law_overrides:
        data = json.loads(law.read_text())
        data.update(law_overrides)
        law.write_text(json.dumps(data))
    out = tmp_path / name
    assert main(["simulate", "--config", cfg, "--law", str(law), "--out", str(out)]) == 0
    return read_csv(out)


def test_simulate_double_integrator_endpoint(tmp_path):
    header, rows = _simulate(tmp_path, double_integrator())
    assert header[:3] == ["t", "xi_0", "eta_0"]
    assert len(rows) == 11
    assert rows[-1][0] == 1.0
    assert rows[-1][1] == pytest.approx(1.0, abs=1e-8)
    assert rows[-1][2] == pytest.approx(0.0, abs=1e-8)


def test_simulate_sampling_density(tmp_path):
    _, coarse = _simulate(tmp_path, double_integrator(samples=11), name="a.csv")
    _, fine = _simulate(tmp_path, double_integrator(samples=21), name="b.csv")
    np.testing.assert_allclose(coarse[-1], fine[-1], rtol=0, atol=1e-10)


def test_simulate_zero_law_is_free_motion(tmp_path):
    data = double_integrator(x0=[[1, 1.0], [2, 0.5]])
    _, rows = _simulate(tmp_path, data, law_overrides={"nu": [0.0, 0.0]})
    for t, p, v, xi, eta in rows:
        assert p == pytest.approx(t, abs=1e-14) and v == 1.0
        assert xi == pytest.approx(0.5 * np.cos(2 * t), abs=1e-14)
        assert eta == pytest.approx(-0.5 * np.sin(2 * t), abs=1e-14)


def test_simulate_requires_law(tmp_path):
    cfg = write_config(tmp_path, double_integrator())
    assert main(["simulate", "--config", cfg]) == 2


# --- converge ------------------------------------------------------------------------


def test_converge_degenerate_range(tmp_path):
    cfg = write_config(tmp_path, {
        "system": {"kappa": 0.01, "mode_count": 6, "preset": {"kind": "euler_bernoulli"}},
        "N_range": [6, 6], "M": 6,
    })
    out = tmp_path / "c.csv"
    assert main(["converge", "--config", cfg, "--out", str(out)]) == 0
    header, rows = read_csv_keep_text(out)
    assert len(rows) == 1 and rows[0][-1] == "true"
    assert float(rows[0][3]) <= 1e-8


def read_csv_keep_text(path):
    rows = list(csv.reader(io.StringIO(Path(path).read_text())))
    return rows[0], rows[1:]


def test_converge_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, {
        "system": {"kappa": 0.01, "mode_count": 12, "preset": {"kind": "euler_bernoulli"}},
        "N_range": [1, 4], "x1": {"random_blocks": 3},
    })
    outs = []
    for k, jobs in enumerate(["1", "1", "3"]):
        out = tmp_path / f"c{k}.csv"
        assert main(["converge", "--config", cfg, "--out", str(out), "--jobs", jobs,
                     "--seed", "7"]) == 0
        outs.append(out.read_bytes())
        assert out.with_suffix(".plot.csv").exists()
    assert outs[0] == outs[1] == outs[2]


def test_converge_default_config(tmp_path):
    out = tmp_path / "eb.csv"
    svg = tmp_path / "eb.svg"
    assert main(["converge", "--config", str(CONFIGS / "euler_bernoulli.json"),
                 "--out", str(out), "--jobs", "2", "--svg", str(svg)]) == 0
    header, rows = read_csv_keep_text(out)
    assert header == ["N", "d_N", "projected_residual", "full_residual", "tail_bound",
                      "qnb_norm", "u_l2", "product", "cost_J", "cond_estimate", "pass"]
    assert len(rows) == 9
    assert float(rows[-1][3]) < float(rows[0][3])
    assert rows[-1][-1] == "true"
    assert svg.read_text().lstrip().startswith("<?xml")
