import math

import pytest

import esbacktest as esb


def test_version():
    assert esb.__version__ == "0.1.0"


def test_fz0_loss_values():
    assert esb.fz0_loss(-3.0, -2.0, -2.5, 0.025) == pytest.approx(
        16.716290731874155, rel=1e-12
    )
    assert esb.fz0_loss(1.0, -2.0, -2.5, 0.025) == pytest.approx(
        0.716290731874155, rel=1e-12
    )
    # q = e = -1 with no violation zeroes both terms
    assert esb.fz0_loss(0.5, -1.0, -1.0, 0.1) == 0.0


def test_fz0_loss_rejects_nonnegative_es():
    with pytest.raises(esb.EsbError):
        esb.fz0_loss(0.0, -1.0, 0.0, 0.05)


def test_validate_pair_rejects_misaligned_series():
    with pytest.raises(esb.EsbError):
        esb.validate_pair([0.1, -0.2], [-1.0])


def test_simulate_is_deterministic():
    a = esb.simulate("garch-t", t=50, burnin=20, seed=3)
    b = esb.simulate("garch-t", t=50, burnin=20, seed=3)
    assert a == b
    assert len(a["returns"]) == 50
    for r, s, z in zip(a["returns"], a["sigma"], a["z"]):
        assert r == s * z


def test_esr_intercept_on_simulated_data():
    path = esb.simulate("garch-t", t=300, burnin=200, seed=7)
    fc = esb.oracle_forecasts(
        "garch-t", path["returns"], path["sigma"], path["z"], tau=0.025
    )
    report = esb.esr_intercept(path["returns"], fc["es"], tau=0.025)
    assert report["test"] == "esr_intercept"
    assert report["mode"] == "asymptotic"
    assert report["side"] == "two_sided"
    assert report["n_bootstrap"] is None
    assert 0.0 <= report["p_value"] <= 1.0
    assert math.isfinite(report["statistic"])


def test_er_test_reports_bootstrap_draws():
    path = esb.simulate("garch-t", t=400, burnin=200, seed=11)
    fc = esb.oracle_forecasts(
        "garch-t", path["returns"], path["sigma"], path["z"], tau=0.05
    )
    report = esb.er_test(
        path["returns"], fc["es"], fc["var"], tau=0.05, bootstrap=200, seed=1
    )
    assert report["test"] == "er"
    assert report["n_bootstrap"] == 200
    assert 0.0 <= report["p_value"] <= 1.0


def test_cc_test_runs():
    path = esb.simulate("garch-t", t=400, burnin=200, seed=13)
    fc = esb.oracle_forecasts(
        "garch-t", path["returns"], path["sigma"], path["z"], tau=0.05
    )
    report = esb.cc_test(path["returns"], fc["es"], fc["var"], tau=0.05)
    assert report["test"] == "cc_simple"
    assert 0.0 <= report["p_value"] <= 1.0


def test_rank_by_fz0_loss_prefers_oracle():
    path = esb.simulate("garch-t", t=2000, burnin=500, seed=17)
    fc = esb.oracle_forecasts(
        "garch-t", path["returns"], path["sigma"], path["z"], tau=0.025
    )
    doubled = [2.0 * e for e in fc["es"]]
    doubled_var = [2.0 * v for v in fc["var"]]
    ranked = esb.rank_by_fz0_loss(
        path["returns"],
        [("oracle", fc["es"], fc["var"]), ("doubled", doubled, doubled_var)],
        tau=0.025,
    )
    assert [label for label, _ in ranked][0] == "oracle"
    assert ranked[0][1] < ranked[1][1]


def test_historical_simulation_shape():
    path = esb.simulate("garch-t", t=120, burnin=100, seed=19)
    hs = esb.historical_simulation(path["returns"], w=20, tau=0.1)
    assert hs["first"] == 20
    assert len(hs["es"]) == 100
    assert len(hs["valid"]) == 100
    assert len(hs["var"]) == 100
    for e, ok in zip(hs["es"], hs["valid"]):
        if ok:
            assert e < 0.0
