import math

import numpy as np
import pytest

import fracvisc


def test_half_laplacian_of_cosine():
    x = 2 * np.pi * np.arange(64) / 64
    out = fracvisc.frac_laplacian(np.cos(3 * x), 0.5)
    assert np.max(np.abs(out - 3 * np.cos(3 * x))) < 1e-12


def test_two_dimensional_laplacian():
    x = 2 * np.pi * np.arange(32) / 32
    f = np.cos(x)[:, None] + np.sin(2 * x)[None, :]
    out = fracvisc.frac_laplacian(f, 1.0)
    expected = np.cos(x)[:, None] + 4 * np.sin(2 * x)[None, :]
    assert np.max(np.abs(out - expected)) < 1e-11


def test_config_round_trip_and_errors():
    cfg = fracvisc.Config.parse("s_list = 0.25, 0.75\nT = 1\n")
    assert cfg.s_list == [0.25, 0.75]
    back = fracvisc.Config.parse(cfg.to_text())
    assert back.to_text() == cfg.to_text()
    assert fracvisc.echo(back)["T"] == 1.0
    with pytest.raises(fracvisc.ConfigError, match="epsilon_lst"):
        fracvisc.Config.parse("epsilon_lst = 0.1\n")


def test_solve_approaches_oracle():
    cfg = fracvisc.Config.parse("s_list = 0.5\nT = 1\nsnapshot_count = 2\nn_points = 256\n")
    errs = []
    for eps in (0.04, 0.02):
        tr = fracvisc.solve(cfg, 0.5, eps)
        assert tr["times"][-1] == 1.0
        ref = fracvisc.hopf_lax(cfg, 1.0, 256)
        errs.append(np.max(np.abs(tr["snapshots"][-1] - ref)))
    assert errs[1] < errs[0]


def test_fit_rate_recovers_exponent():
    eps = [2.0**-i for i in range(4, 11)]
    fit = fracvisc.fit_rate(eps, [0.3 * e**0.75 for e in eps])
    assert math.isclose(fit["exponent"], 0.75, abs_tol=1e-12)
    assert math.isclose(fit["prefactor"], 0.3, rel_tol=1e-12)


def test_selftest_and_exit_codes(tmp_path):
    assert all(ok for _, ok, _ in fracvisc.selftest(7))
    bad = tmp_path / "bad.cfg"
    bad.write_text("epsilon_lst = 0.1\n")
    code, _, err = fracvisc.run("solve", bad)
    assert code == 2 and "epsilon_lst" in err
    good = tmp_path / "good.cfg"
    good.write_text("s_list = 0.5\nepsilon_list = 0.1\nT = 0.5\nsnapshot_count = 2\n")
    code, _, _ = fracvisc.run("solve", good, tmp_path / "out")
    assert code == 0
    assert (tmp_path / "out" / "solve.json").exists()
