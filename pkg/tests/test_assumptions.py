import numpy as np
import pytest

from batchband.core import DecisionRule, Instance, make_grid
from batchband.environments import preset
from batchband.policies import (
    FixedArmPolicy,
    ThompsonBetaPolicy,
    TwoPhaseSwitchPolicy,
    UcbPolicy,
    UniformPolicy,
)
from batchband.assumptions import (
    EnvelopeReport,
    RegretCurve,
    UnsupportedPolicyError,
    check_lemma31,
    check_monotone_envelope,
    check_negated_sublinearity,
    check_sublinearity,
    mean_rule_trace,
    probe_informativeness,
)
from batchband.specifications import run_online


# ---------------------------------------------------------------- regret curve


def test_regret_curve_from_runs():
    runs = np.array([[1.0, 2.0, 3.0], [3.0, 4.0, 5.0]])
    c = RegretCurve.from_runs(runs)
    assert np.allclose(c.values, [2.0, 3.0, 4.0])
    assert c.reps == 2
    assert np.all(c.stderr > 0)
    single = RegretCurve.from_runs(runs[:1])
    assert np.all(single.stderr == 0.0)


# ---------------------------------------------------------------- sublinearity


def test_sublinearity_deterministic_linear_curve_fails():
    # R = (1, 2, 3): every ratio equals 1, flagged at equality
    c = RegretCurve(np.array([1.0, 2.0, 3.0]), np.zeros(3), reps=1)
    rep = check_sublinearity(c)
    assert not rep.holds
    assert rep.pairs.shape[0] == 3  # (1,2), (1,3), (2,3)


def test_sublinearity_concave_curve_holds():
    t = np.arange(1, 101)
    c = RegretCurve(np.sqrt(t), np.zeros(100), reps=1)
    rep = check_sublinearity(c)
    assert rep.holds and rep.pairs.shape[0] == 0


def test_sublinearity_noise_makes_equal_ratios_inconclusive_not_violating():
    t = np.arange(1, 51, dtype=float)
    c = RegretCurve(t.copy(), np.full(50, 0.5), reps=100)
    rep = check_sublinearity(c)
    # linear in expectation but noisy: pooled 2-se slack absorbs equality
    assert rep.holds


def test_sublinearity_min_t_excludes_early_noise():
    vals = np.array([0.1, 0.4, 0.7, 0.9, 1.05, 1.15])
    c = RegretCurve(vals, np.zeros(6), reps=1)
    # ratios: .1 .2 .233 .225 .21 .192 -> early ratios increase
    assert not check_sublinearity(c).holds
    assert check_sublinearity(c, min_t=3).holds


def test_sublinearity_ucb_env1_holds_beyond_burn_in():
    env = preset("env1")
    runs = np.stack(
        [run_online(UcbPolicy(2), env, 400, seed=i).pseudo_regret for i in range(80)]
    )
    rep = check_sublinearity(RegretCurve.from_runs(runs), min_t=50)
    assert rep.holds


# ---------------------------------------------------------------- lemma 3.1


def test_lemma31_improving_rules_hold_strictly():
    inst = Instance(np.array([0.7, 0.5]))
    rules = [
        DecisionRule(np.array([0.2, 0.8])),  # 0.54
        DecisionRule(np.array([0.4, 0.6])),  # 0.58
        DecisionRule(np.array([0.6, 0.4])),  # 0.62
    ]
    rep = check_lemma31(rules, inst)
    assert rep.prefix_verdict == "holds"
    assert rep.pointwise_verdict == "holds"
    assert np.allclose(rep.values, [0.54, 0.58, 0.62])
    assert np.allclose(rep.prefix_values, [0.54, 0.56, 0.58])


def test_lemma31_constant_rules_are_boundary():
    inst = Instance(np.array([0.7, 0.5]))
    rules = [DecisionRule(np.array([0.5, 0.5]))] * 4
    rep = check_lemma31(rules, inst)
    assert rep.prefix_verdict == "boundary"
    assert rep.pointwise_verdict == "boundary"


def test_lemma31_worsening_rules_fail():
    inst = Instance(np.array([0.7, 0.5]))
    rules = [
        DecisionRule(np.array([0.8, 0.2])),
        DecisionRule(np.array([0.5, 0.5])),
        DecisionRule(np.array([0.2, 0.8])),
    ]
    rep = check_lemma31(rules, inst)
    assert rep.prefix_verdict == "fails"
    assert rep.pointwise_verdict == "fails"


def test_lemma31_single_step_vacuous():
    inst = Instance(np.array([0.7, 0.5]))
    rep = check_lemma31([DecisionRule(np.array([0.3, 0.7]))], inst)
    assert rep.prefix_verdict == "holds"
    assert rep.pointwise_verdict == "holds"


# ---------------------------------------------------------------- negated sublinearity


def test_negation_two_phase_switcher_holds():
    env = preset("env1")
    grid = make_grid(200, 10)  # M = 20 < switch point
    pol = TwoPhaseSwitchPolicy(2, good_arm=0, bad_arm=1, switch_t=100)
    rep = check_negated_sublinearity(pol, env, grid, reps=5, master_seed=0)
    assert rep.holds and rep.verdict == "holds"
    # closed forms: R_200 = 0.2 * 100 = 20, R_20 = 0
    assert rep.mean_n == pytest.approx(20.0, abs=1e-12)
    assert rep.mean_m == pytest.approx(0.0, abs=1e-12)
    assert bool(rep) is True


def test_negation_constant_worst_equality_fails_strictness():
    env = preset("env1")
    grid = make_grid(100, 5)
    pol = FixedArmPolicy(2, arm=1)
    rep = check_negated_sublinearity(pol, env, grid, reps=3)
    # R_n = 0.2 n exactly: d = 0.2*100 - 5*0.2*20 = 0
    assert rep.verdict == "fails"
    assert not rep.holds
    assert rep.d == pytest.approx(0.0, abs=1e-12)


def test_negation_b1_boundary_excluded():
    env = preset("env1")
    rep = check_negated_sublinearity(
        UcbPolicy(2), env, make_grid(50, 1), reps=2
    )
    assert rep.verdict == "boundary" and not rep.holds


def test_negation_learning_policy_fails_to_negate():
    env = preset("env3")
    rep = check_negated_sublinearity(
        UcbPolicy(2), env, make_grid(400, 20), reps=30, master_seed=4
    )
    assert rep.verdict in ("fails", "inconclusive")
    assert not rep.holds


# ---------------------------------------------------------------- informativeness


def test_informativeness_ts_prefers_more_optimal_history():
    env = preset("env1")
    rep = probe_informativeness(
        ThompsonBetaPolicy(2), env, t=10, reps=600, k=8, k_prime=2, master_seed=1
    )
    assert rep.verdict == "consistent"
    assert rep.mean_diff > 0
    assert rep.ci_low > 0


def test_informativeness_ucb_runs_on_point_masses():
    # deterministic policy: rule values are point masses; the probe still
    # reports a coherent paired comparison (direction not asserted: the
    # exploration bonus can legitimately favour the less-pulled arm)
    env = preset("env3")
    rep = probe_informativeness(
        UcbPolicy(2), env, t=10, reps=200, k=8, k_prime=2, master_seed=1
    )
    assert rep.verdict in ("consistent", "violated")
    assert rep.ci_low <= rep.mean_diff <= rep.ci_high
    # differences of point-mass rule values lie in [-0.6, 0.6] on this instance
    assert abs(rep.mean_diff) <= 0.6 + 1e-9


def test_informativeness_equal_counts_within_noise():
    env = preset("env1")
    rep = probe_informativeness(
        ThompsonBetaPolicy(2), env, t=10, reps=300, k=5, k_prime=5, master_seed=2
    )
    assert rep.verdict == "consistent"
    assert abs(rep.mean_diff) <= 4 * max(rep.stderr, 1e-9)


def test_informativeness_defaults_and_validation():
    env = preset("env1")
    rep = probe_informativeness(UcbPolicy(2), env, t=10, reps=50)
    assert (rep.k, rep.k_prime) == (8, 2)
    with pytest.raises(ValueError):
        probe_informativeness(UcbPolicy(2), env, t=10, reps=10, k=2, k_prime=5)


# ---------------------------------------------------------------- envelope


def test_envelope_ucb_consistent_on_env3():
    env = preset("env3")
    rep = check_monotone_envelope(UcbPolicy(2), env, reps=150, t_max=800, master_seed=3)
    assert isinstance(rep, EnvelopeReport)
    assert rep.verdict == "consistent"
    assert rep.violations == []
    assert bool(rep)


def test_envelope_rejects_unregistered_policy():
    env = preset("env1")
    with pytest.raises(UnsupportedPolicyError):
        check_monotone_envelope(ThompsonBetaPolicy(2), env, reps=10, t_max=50)
    with pytest.raises(UnsupportedPolicyError):
        check_monotone_envelope(UniformPolicy(2), env, reps=10, t_max=50)


def test_envelope_uniform_negative_control_violates():
    # with an explicit bound, uniform play breaks the envelope once the
    # per-arm term falls below 1/2 (around t = 130 on this instance)
    from batchband.meta import MonotoneBound

    env = preset("env3")
    rep = check_monotone_envelope(
        UniformPolicy(2), env, reps=120, t_max=400, master_seed=5,
        bound=MonotoneBound(env.means),
    )
    assert rep.verdict == "violated"
    assert all(t > 100 for t, _, _, _ in rep.violations)
    assert any(abs(frac - 0.5) < 0.1 for _, _, frac, _ in rep.violations)


def test_envelope_skips_forced_init_window():
    env = preset("env3")
    rep = check_monotone_envelope(UcbPolicy(2), env, reps=20, t_max=60, master_seed=1)
    assert rep.evaluated_from == 3
    assert all(t >= 3 for t, _, _, _ in rep.violations)


def test_envelope_rejects_tied_instance():
    from batchband.environments import BernoulliEnv

    env = BernoulliEnv(np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        check_monotone_envelope(UcbPolicy(2), env, reps=10, t_max=50)


def test_rule_trace_records_forced_init_point_masses():
    env = preset("env1")
    rules = mean_rule_trace(UcbPolicy(2), env, n=4, reps=5, master_seed=2)
    assert len(rules) == 4
    assert rules[0].probs.tolist() == [1.0, 0.0]
    assert rules[1].probs.tolist() == [0.0, 1.0]


def test_rule_trace_thompson_starts_symmetric_then_learns():
    env = preset("env1")
    rules = mean_rule_trace(ThompsonBetaPolicy(2), env, n=10, reps=400, master_seed=3)
    assert abs(rules[0].probs[0] - 0.5) < 0.08
    assert rules[9].probs[0] > 0.62


def test_rule_trace_deterministic():
    env = preset("env2")
    a = mean_rule_trace(ThompsonBetaPolicy(2), env, n=5, reps=20, master_seed=7)
    b = mean_rule_trace(ThompsonBetaPolicy(2), env, n=5, reps=20, master_seed=7)
    assert all(np.array_equal(x.probs, y.probs) for x, y in zip(a, b))


def test_rule_trace_rejects_bad_args():
    env = preset("env1")
    with pytest.raises(ValueError):
        mean_rule_trace(UcbPolicy(2), env, n=0, reps=5)
