"""Smoke tests for the python bindings."""

import math

import pytest

import _tamperbench as tb


def test_version():
    assert tb.__version__


def test_distribution_roundtrip_and_sampling():
    d = tb.DiscreteDistribution.from_dict({"outcomes": ["0", "1"], "probs": [0.5, 0.5]})
    assert len(d) == 2
    assert d.to_dict() == {"outcomes": ["0", "1"], "probs": [0.5, 0.5]}
    r1, r2 = tb.RngStream(42), tb.RngStream(42)
    assert [d.sample(r1) for _ in range(50)] == [d.sample(r2) for _ in range(50)]


def test_closed_forms_on_the_dictator_bit():
    bit = tb.DiscreteDistribution.uniform_bit()
    f = tb.make_builtin("dictator(0)", 1)
    tam = tb.closed_form_tam(f, bit, 1, 0.5)
    res = tb.closed_form_res(f, bit, 1, 0.5)
    assert tam.probs[1] == pytest.approx(2 / 3, abs=1e-12)
    assert res.probs[1] == pytest.approx(0.6, abs=1e-12)


def test_parameter_recipes():
    assert tb.mc_sample_size(0.1) == 2996
    assert tb.kcut_choice(0.5, 0.01) == 28
    assert tb.xi_budget("pres", 0.1, 10, 0.5) == pytest.approx(0.001)
    assert tb.gamma_tam(0.5, 0.5) == pytest.approx(2 / 3)
    assert tb.gamma_res(0.5, 0.5) == pytest.approx(0.6)
    assert tb.bias_bound_tam(0.5, 0.5, 0.25) == pytest.approx(1 / 6)
    assert tb.hoeffding_tail(100, 0.1) == pytest.approx(2 * math.exp(-2))


def test_channel_simulation_matches_the_induced_law():
    bit = tb.DiscreteDistribution.uniform_bit()
    f = tb.make_builtin("dictator(0)", 1)
    ch = tb.TamperChannel("ptam_ideal", 0.5, 0, f, bit, 1)
    mean, se = ch.simulate_mean(f, 50_000, tb.RngStream(7))
    assert abs(mean - 2 / 3) < 4 * se
    induced = tb.induced_dist_exact(ch)
    assert induced.probs[1] == pytest.approx(2 / 3, abs=1e-9)


def test_transcript_shape():
    bit = tb.DiscreteDistribution.uniform_bit()
    f = tb.make_builtin("xor", 3)
    ch = tb.TamperChannel("pres", 0.5, 0, f, bit, 3)
    tr = ch.attack_sequence(tb.RngStream(1))
    assert len(tr.original) == 3
    assert len(tr.tampered) == 3
    for i, flag in enumerate(tr.coin):
        if not flag:
            assert tr.tampered[i] == tr.original[i]


def test_learning_fixture():
    prob = tb.LearningProblem.impossibility(0.5)
    assert prob.instances == ["1", "2", "3", "4"]
    assert prob.realizable()
    assert prob.risk(0, 1) == pytest.approx(0.25)
    # average error of the canonical learner on test (4,1) with 3 samples
    assert prob.avg_error_exact(1, 3, 3, 1) == pytest.approx(27 / 64, abs=1e-12)


def test_impossibility_experiment():
    prob = tb.LearningProblem.impossibility(0.5)
    row = tb.impossibility_experiment(prob, 0.5, 32, 2000, tb.RngStream(3))
    assert row["mean_risk"] >= row["bound"] - 3 * row["risk_se"]


def test_run_experiment(tmp_path):
    report = tb.run_experiment(
        {
            "kind": "bound_tables",
            "seed": 1,
            "out": str(tmp_path),
            "mu_step": 0.1,
        }
    )
    assert report["all_pass"]
    assert (tmp_path / "bound_tables.csv").exists()


def test_config_errors_name_the_field():
    with pytest.raises(Exception) as err:
        tb.run_experiment({"kind": "bound_tables", "seed": 1, "bogus": 2})
    assert "bogus" in str(err.value)
