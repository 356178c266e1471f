import math

import pytest

import alignmarket as am


def test_fixture_roundtrip():
    names = am.fixture_names()
    assert "appendix_b" in names
    inst = am.fixture("appendix_b")
    inst.validate()
    text = am.instance_to_json(inst)
    back = am.instance_from_json(text)
    assert back.states == inst.states
    assert back.prior == pytest.approx(inst.prior)


def test_appendix_example_values():
    inst = am.fixture("appendix_b")
    assert am.first_best(inst) == pytest.approx(2.0, abs=1e-12)
    schemes = [
        am.optimal_persuasion_lp(inst, u).scheme for u in inst.bob_utilities
    ]
    v = am.oblivious_joint_evaluation(inst, schemes)
    assert v == pytest.approx(5.0 / 3.0, abs=1e-9)


def test_game_pipeline():
    inst = am.fixture("synthetic1")
    committee = am.Committee(inst, list(range(inst.num_bobs())))
    mode = am.ReceiverMode.POSTERIOR_BEST_RESPONSE
    report = am.enumerate_symmetric_equilibria(committee, mode)
    assert report.stable
    bound = am.check_theorem_bound(committee, mode)
    assert bound.min_alice_utility >= bound.bound - 1e-8
    traj = am.best_response_dynamics(committee, mode)
    assert traj.converged


def test_fit_and_hoeffding():
    truth = [0.1, 0.5, 0.9, 0.3]
    scores = [[t, 1.0 - t] for t in truth]
    fit = am.nnls(scores, truth)
    assert fit.mse <= 1e-18
    assert fit.weights[0] == pytest.approx(1.0, abs=1e-9)
    assert am.hoeffding_committee_size(3, 3, 0.1, 0.05) == 295


def test_conversation_agreement():
    prior = am.joint_prior_fixture("corr2")
    res = am.run_straightforward_conversation(prior, 0, 1, 6)
    r = am.agreement_round(res, 1e-9)
    assert r >= 0
    final_a = res.alice_beliefs[-1]
    final_b = res.bob_beliefs[-1]
    assert max(abs(a - b) for a, b in zip(final_a, final_b)) <= 1e-9


def test_cli_roundtrip():
    code, out, err = am.run_command(
        ["hoeffding", "--actions", "3", "--states", "3", "--eps", "0.1",
         "--delta", "0.05"])
    assert code == 0, err
    assert out.strip() == "295"


def test_errors_surface_as_python_exceptions():
    with pytest.raises(am.AlignmentError):
        am.fixture("no-such-fixture")
    with pytest.raises(am.AlignmentError):
        am.hoeffding_committee_size(0, 3, 0.1, 0.05)


def test_theorem_bounds_zeta():
    b = am.theorem_bounds(3, 9000.0, 0.1, 1.0, 0.0)
    assert b.zeta == pytest.approx(0.1, abs=1e-12)
    assert b.quantal_gap == pytest.approx(math.log(3.0), abs=1e-12)
