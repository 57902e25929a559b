import json
import math

import numpy as np
import pytest

from bpmisac import cli
from bpmisac.io import RECORD_COLUMNS, records_to_csv, records_to_json, table_to_csv
from bpmisac.sim import (ExperimentConfig, SweepRecord, run_apep_curve, run_beampattern,
                         run_point, run_trial, run_tradeoff_sweep, trial_streams)

SMALL = ExperimentConfig(trials=6, symbols_per_channel=50, snr_grid=(0.0, 4.0))


def two_sigma(r1, r2):
    var = sum(r.ber * (1 - r.ber) / r.bits_sent for r in (r1, r2))
    return 2 * math.sqrt(var)


def test_config_defaults():
    cfg = ExperimentConfig()
    assert cfg.w == 3 and cfg.im_config().eta == 8
    assert cfg.sensing_spec().codeword_indices == (11, 12, 13)
    np.testing.assert_allclose(cfg.sensing_spec().t, np.sqrt(5))
    np.testing.assert_allclose(cfg.sensing_spec().d, 1 / 3)


def test_config_schemes():
    assert ExperimentConfig(scheme="gbm").w == 0
    pb = ExperimentConfig(scheme="pbpm").im_config()
    assert pb.n_c == 4 and pb.eta == 8
    with pytest.raises(ValueError):
        ExperimentConfig(scheme="other")
    with pytest.raises(ValueError):
        ExperimentConfig(mu=2.0)


def test_config_json_roundtrip(tmp_path):
    cfg = ExperimentConfig(seed=9, snr_grid=(-2.0, 1.5), on_grid=True)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert ExperimentConfig.from_json(path) == cfg
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"bogus": 1})


def test_trial_streams_independent_of_order():
    a = trial_streams(4, 1, 2)[1].random(3)
    trial_streams(4, 0, 0)
    b = trial_streams(4, 1, 2)[1].random(3)
    np.testing.assert_array_equal(a, b)
    # Channel stream is shared across points; symbol streams are not.
    c0, c1 = trial_streams(4, 0, 2)[0].random(), trial_streams(4, 5, 2)[0].random()
    s0, s1 = trial_streams(4, 0, 2)[1].random(), trial_streams(4, 5, 2)[1].random()
    assert c0 == c1 and s0 != s1


@pytest.mark.parametrize("scheme", ["bpm", "pbpm", "gbm"])
def test_noiseless_on_grid_zero_errors(scheme):
    cfg = ExperimentConfig(on_grid=True, symbols_per_channel=1000, scheme=scheme)
    rng = np.random.default_rng(3)
    res = run_trial(rng, cfg, 1e-10, digital="fixed")
    if not res.skipped:
        assert res.bit_errors == 0 and res.bits_sent == 1000 * cfg.im_config().eta


def test_chi_matches_empirical_error():
    cfg = ExperimentConfig(symbols_per_channel=100_000)
    res = run_trial(np.random.default_rng(1), cfg, cfg.noise_at(0.0).sigma2)
    assert abs(res.sq_error / 100_000 - res.chi) <= 0.01 * res.chi


def test_run_point_deterministic_and_consistent():
    a = run_point(SMALL, 0.0, 0)
    b = run_point(SMALL, 0.0, 0)
    assert a.bit_errors == b.bit_errors and a.beampattern_mse == b.beampattern_mse
    assert a.ber == a.bit_errors / a.bits_sent and 0 <= a.ber <= 0.5
    assert a.skipped_trials == 0


def test_mu_one_zero_beampattern_mse():
    rec = run_point(SMALL, 0.0, 0, mu=1.0)
    assert rec.beampattern_mse <= 1e-6


def test_low_snr_orderings():
    # Informative regime: errors are frequent enough to compare schemes.
    base = ExperimentConfig(trials=40, symbols_per_channel=200, seed=11)
    recs = [run_point(base, s, i) for i, s in enumerate((-18.0, -14.0, -10.0))]
    for lo, hi in zip(recs, recs[1:]):
        assert hi.ber <= lo.ber + two_sigma(lo, hi)
    gbm = run_point(base.replace(scheme="gbm"), -14.0, 1)
    assert gbm.ber <= recs[1].ber + two_sigma(gbm, recs[1])
    # A larger mu relaxes the MSE budget, admitting more sensing interference.
    lo_mu = run_point(base, -14.0, 1, mu=0.1)
    hi_mu = run_point(base, -14.0, 1, mu=1.0)
    assert lo_mu.ber <= hi_mu.ber + two_sigma(lo_mu, hi_mu)


def test_skipped_fraction_small():
    cfg = ExperimentConfig(trials=100, symbols_per_channel=10)
    for mu in (0.3, 0.7):
        assert run_point(cfg, 0.0, 0, mu=mu).skipped_trials < 0.01 * cfg.trials


def test_tradeoff_structure():
    recs = run_tradeoff_sweep(SMALL, [0.2, 1.0])
    assert [(r.digital, r.mu) for r in recs] == [("optimized", 0.2), ("optimized", 1.0),
                                                 ("scaled", 0.2), ("scaled", 1.0)]
    assert recs[0].beampattern_mse <= recs[2].beampattern_mse
    assert recs[1].beampattern_mse <= 1e-6


def test_beampattern_table():
    res = run_beampattern(SMALL, 0.5, active=(0, 1, 2), sensing=0)
    assert len(res["theta"]) == 1024 and res["theta"][0] == -np.pi / 2
    assert res["theta"][-1] < np.pi / 2
    assert res["gain"].min() >= 0 and res["gain"].max() == 1.0
    with pytest.raises(ValueError):
        run_beampattern(SMALL, 0.5, active=(0, 0, 1))


def test_beampattern_mu_one_sensing_peak():
    res = run_beampattern(SMALL, 1.0, active=(0, 1, 2), sensing=0)
    np.testing.assert_allclose(res["b"], np.sqrt(5), rtol=1e-8)
    # Gain at the f(11) grid angle: the sensing beam contributes b^2 there.
    theta11 = np.arcsin(-2 * 10 / 32)
    i = int(np.argmin(np.abs(res["theta"] - theta11)))
    assert res["gain"][i] > 0.1


def test_apep_curve_monotone():
    curve = run_apep_curve(ExperimentConfig())
    vals = [a for _, a in curve]
    assert len(curve) == len(ExperimentConfig().snr_grid)
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_csv_and_json_format():
    rec = SweepRecord(0.0, "bpm", "optimized", 0.5, 0.25, 2, 8, 0.1, 3.0, 0, 1.5)
    text = records_to_csv([rec])
    lines = text.split("\n")
    assert lines[0].split(",") == [c for c in RECORD_COLUMNS if c != "wall_time"]
    assert lines[1] == "0.0,bpm,optimized,0.5,0.25,2,8,0.1,3.0,0"
    assert "wall_time" in records_to_csv([rec], include_timing=True)
    assert "\r" not in text
    assert json.loads(records_to_json([rec]))[0]["ber"] == 0.25
    assert table_to_csv(["a", "b"], [(np.float64(1.5), True)]) == "a,b\n1.5,true\n"


def test_cli_parsers():
    assert cli.parse_snr("-4:2:2") == [-4.0, -2.0, 0.0, 2.0]
    assert cli.parse_snr("0,5") == [0.0, 5.0]
    assert cli.parse_mu("0.1,1") == [0.1, 1.0]
    assert cli.parse_bool("yes") and not cli.parse_bool("0")


@pytest.mark.parametrize("argv", [["ber", "--snr", "0:0:1"], ["tradeoff", "--mu", "1.5"],
                                  ["frobnicate"], ["ber", "--threads", "0"],
                                  ["ber", "--config", "/nonexistent.json"],
                                  ["ber", "--mu", "0.1,0.2"]])
def test_cli_usage_errors(argv, capsys):
    code = None
    try:
        code = cli.main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1


def test_cli_ber_and_json(tmp_path):
    out, js = tmp_path / "a.csv", tmp_path / "a.json"
    code = cli.main(["ber", "--trials", "3", "--symbols", "20", "--snr=0,2", "--out", str(out),
                     "--json-out", str(js)])
    assert code == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 3 and rows[0].startswith("snr_db,scheme,digital,mu,ber")
    assert len(json.loads(js.read_text())) == 2


def test_cli_other_commands(tmp_path, capsys):
    assert cli.main(["apep", "--snr=0,4"]) == 0
    assert capsys.readouterr().out.startswith("snr_db,apep\n")
    assert cli.main(["beampattern", "--trials", "1", "--active", "0,1,2", "--mu", "0.5"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 1025
    assert cli.main(["tradeoff", "--trials", "2", "--symbols", "10", "--mu", "0.5,1"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 5


def test_cli_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"trials": 2, "symbols_per_channel": 10, "snr_grid": [0.0],
                               "scheme": "gbm"}))
    assert cli.main(["ber", "--config", str(cfg)]) == 0
    assert ",gbm," in capsys.readouterr().out


@pytest.mark.slow
def test_cli_validate_and_faults(capsys):
    assert cli.main(["validate"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] and len(report["checks"]) == 6
    assert cli.main(["validate", "--inject-fault", "printed-cover-index"]) == 2
    failed = {c["name"] for c in json.loads(capsys.readouterr().out)["checks"] if not c["passed"]}
    assert failed == {"oracle_agreement"}
    assert cli.main(["validate", "--inject-fault", "nonmonotone-optimizer"]) == 2
    failed = {c["name"] for c in json.loads(capsys.readouterr().out)["checks"] if not c["passed"]}
    assert failed == {"monotone_objective"}
