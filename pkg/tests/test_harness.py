import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multiplier_lab import engine
from multiplier_lab.harness import (
    ConfigError,
    ExperimentConfig,
    anchor_nodes,
    anchor_set,
    calibrate_A,
    evaluate_assertions,
    fit_log_growth,
    hash_slopes,
    oracle_cross_check,
    run_blowup,
    target_exponent,
    write_outputs,
)
from multiplier_lab.symbols import (
    constant_symbol,
    make_carleson_region,
    make_paraproduct_symbol,
    make_trilinear_sgn_symbol,
)
from multiplier_lab.witnesses import make_base_bump, make_bump_train, make_dyadic_chirps

PHI = make_base_bump(0.5)


def small_config(**over):
    data = {"theorem": "MT**", "q": [1, 2, 3], "A": 32, "N_schedule": [4, 8, 16], "p": [6, 6, 6]}
    data.update(over)
    return ExperimentConfig.from_mapping(data)


def test_fit_recovers_exact_log_law():
    N = [4, 8, 16, 32]
    s, b, r = fit_log_growth(N, [2 * math.log(n) + 1 for n in N])
    assert s == pytest.approx(2) and b == pytest.approx(1) and r < 1e-12


def test_fit_of_constant_has_zero_slope():
    s, _, r = fit_log_growth([4, 8, 16], [3.0, 3.0, 3.0])
    assert abs(s) < 1e-12 and r < 1e-12


def test_fit_needs_three_points():
    with pytest.raises(ValueError):
        fit_log_growth([4, 8], [1.0, 2.0])


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(1, 10))
def test_fit_is_exact_for_any_log_line(a, b):
    N = [3, 7, 20, 55]
    s, c, _ = fit_log_growth(N, [a * math.log(n) + b + 20 for n in N])
    assert s == pytest.approx(a, abs=1e-9) and c == pytest.approx(b + 20, abs=1e-8)


@pytest.mark.parametrize("bad", [
    {"theorem": "MT**", "N_schedule": [8, 4]},
    {"theorem": "MT**", "N_schedule": [4, 4]},
    {"theorem": "nope", "N_schedule": [4]},
    {"theorem": "MT**", "N_schedule": [4], "colour": 1},
    {"N_schedule": [4]},
    {"theorem": "IT", "N_schedule": [4], "p": [0, 1, 1]},
])
def test_bad_configs_are_rejected(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_mapping(bad)


@pytest.mark.parametrize("tag", ["MT*", "TechThm"])
def test_unsupported_theorems_fail_cleanly(tag):
    cfg = ExperimentConfig.from_mapping({"theorem": tag, "N_schedule": [4, 8]})
    with pytest.raises(ConfigError):
        run_blowup(cfg)


def test_yaml_and_json_configs_load(tmp_path):
    y = tmp_path / "c.yaml"
    y.write_text("theorem: IT\nN_schedule: [4, 8]\nA: 128\n")
    assert ExperimentConfig.load(y).A == 128
    j = tmp_path / "c.json"
    j.write_text(json.dumps({"theorem": "control", "N_schedule": [2, 4]}))
    assert ExperimentConfig.load(j).theorem == "control"
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "missing.json")


def test_hash_slopes_for_three_nodes():
    alpha, slopes = hash_slopes([1, 2, 3])
    assert list(alpha) == [6, 3, 2]
    assert list(slopes) == [1, -8, 9]
    assert sum(s * a for s, a in zip(slopes, alpha)) == 0
    assert sum(s * a * a for s, a in zip(slopes, alpha)) == 0


def test_anchor_set_and_nodes():
    assert anchor_set(8, [0.5, 1.0]) == [4, 5, 6, 7, 8]
    assert anchor_set(16, [0.5, 2 / 3]) == [8, 9, 10]
    xs, ws = anchor_nodes([4, 5], 32.0, 0.25, 3)
    assert np.all((xs >= 128) & (xs <= 160.25))
    assert ws.sum() == pytest.approx(0.5)


def test_target_exponent():
    assert target_exponent([6, 6, 6]) == pytest.approx(2.0)
    assert target_exponent([2, 2]) == pytest.approx(1.0)


@pytest.mark.parametrize("slope", [1, -2])
def test_norm_model_matches_dense_quadrature(slope):
    train = make_bump_train(PHI, 2, 32, slope)
    dense = train.lp_norm(6.0, method="quadrature")
    model = 5 ** (1 / 6) * PHI.lp_norm(6.0)
    assert dense == pytest.approx(model, rel=0.05)
    assert train.lp_norm(6.0, method="separated") == pytest.approx(model, rel=1e-12)


def test_oracle_constant_symbol():
    trains = [make_bump_train(PHI, 2, 8, s) for s in (1, -8, 9)]
    rep = oracle_cross_check(constant_symbol(3), trains, [0.1, 8.0])
    assert rep["max_rel_error"] <= 1e-8


def test_oracle_carleson_region():
    trains = [make_bump_train(PHI, 2, 8, s) for s in (1, -8, 9)]
    rep = oracle_cross_check(make_carleson_region((6, 3, 2), 13.0), trains, [0.1, 8.0, 16.02])
    assert rep["max_rel_error"] <= 1e-4


def test_oracle_sign_paraproduct():
    m = make_trilinear_sgn_symbol(make_paraproduct_symbol(3))
    rep = oracle_cross_check(m, list(make_dyadic_chirps(2, M=3)), [8.0, 16.3])
    assert rep["max_rel_error"] <= 1e-4


def test_oracle_refuses_large_instances():
    trains = [make_bump_train(PHI, 5, 8, s) for s in (1, -1)]
    with pytest.raises(ValueError):
        oracle_cross_check(constant_symbol(2), trains, [0.0])


def test_assertions():
    fit = {"slope": 1.0, "residual": 0.1}
    out = evaluate_assertions({"increasing": True, "slope_positive": True, "max_residual": 0.25,
                               "max_spread": 1.5}, [1.0, 1.2, 1.3], fit)
    assert out == {"increasing": True, "slope_positive": True, "max_residual": True, "max_spread": True}
    with pytest.raises(ConfigError):
        evaluate_assertions({"mystery": 1}, [1.0], None)


def test_run_is_deterministic_and_persisted(tmp_path):
    cfg = small_config(assertions={"increasing": True})
    a = run_blowup(cfg)
    before = engine.get_threads()
    engine.set_threads(1)
    try:
        b = run_blowup(cfg)
    finally:
        engine.set_threads(before)
    assert a.ratios == b.ratios and a.digest() == b.digest()
    assert all(r > 0 for r in a.ratios) and a.passes
    paths = write_outputs(a, tmp_path, plot=True)
    rec = json.loads(open(paths["record"]).read())
    assert rec["ratios"] == a.ratios and rec["pass"] is True
    rows = list(csv.reader(open(paths["ratios"])))
    assert rows[0] == ["N", "R"] and [int(r[0]) for r in rows[1:]] == [4, 8, 16]
    assert [float(r[1]) for r in rows[1:]] == a.ratios
    assert open(paths["plot"]).read().lstrip().startswith("<?xml")


def test_smaller_anchor_width_keeps_monotonicity():
    wide = run_blowup(small_config())
    narrow = run_blowup(small_config(c_alpha=1 / 120))
    inc = [all(b > a for a, b in zip(r.ratios, r.ratios[1:])) for r in (wide, narrow)]
    assert inc[0] == inc[1]


def test_calibration_returns_a_power_of_two_multiple():
    A = calibrate_A(small_config(), 8)
    assert A >= 32 and math.log2(A / 32).is_integer()
