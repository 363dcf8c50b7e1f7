"""Tests for the sweep harness and theorem-bound checker."""

from __future__ import annotations

import numpy as np
import pytest

from batchband.core import derive_seed, make_grid
from batchband.environments import gaps, preset
from batchband.harness import (
    ConfigError,
    ExperimentConfig,
    _cell_key,
    check_theorem_bounds,
    regret_curve,
    resolve_threads,
    run_experiment,
)
from batchband.policies import FixedArmPolicy, UcbPolicy, UniformPolicy
from batchband.specifications import run_batch, run_online


def small_config(**overrides):
    base = dict(
        envs=("env1",),
        policies=("ucb",),
        n=40,
        batch_sizes=(1, 4),
        reps=3,
        master_seed=7,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfigValidation:
    def test_unknown_env_rejected(self):
        with pytest.raises(ConfigError, match="bad env"):
            small_config(envs=("env99",)).validate()

    def test_inline_env_accepted(self):
        small_config(envs=("0.9,0.2",)).validate()

    def test_unknown_policy_rejected(self):
        with pytest.raises(ConfigError, match="unknown policy"):
            small_config(policies=("bogus",)).validate()

    def test_contextual_policy_rejected(self):
        with pytest.raises(ConfigError, match="contextual"):
            small_config(policies=("linucb",)).validate()

    def test_batch_larger_than_horizon_rejected(self):
        with pytest.raises(ConfigError, match="shorter than batch"):
            small_config(batch_sizes=(64,)).validate()

    def test_bad_mode_rejected(self):
        with pytest.raises(ConfigError, match="mode"):
            small_config(mode="sideways").validate()

    def test_bad_delta_rejected(self):
        with pytest.raises(ConfigError, match="delta"):
            small_config(mode="approx_delayed_start", delta=1.5).validate()

    def test_zero_reps_rejected(self):
        with pytest.raises(ConfigError, match="reps"):
            small_config(reps=0).validate()

    def test_validation_happens_before_any_run(self):
        cfg = small_config(envs=("env1", "env99"))
        with pytest.raises(ConfigError):
            run_experiment(cfg)

    def test_cell_cardinality_three_envs_two_policies_seven_batches(self):
        cfg = ExperimentConfig(
            envs=("env1", "env2", "env3"),
            policies=("ts", "ucb"),
            n=64,
            batch_sizes=(1, 2, 4, 8, 16, 32, 64),
            reps=1,
            master_seed=0,
        )
        assert len(cfg.cells()) == 42


class TestResolveThreads:
    def test_explicit_wins(self, monkeypatch):
        monkeypatch.setenv("BATCHBAND_THREADS", "8")
        assert resolve_threads(3) == 3

    def test_env_var_used(self, monkeypatch):
        monkeypatch.setenv("BATCHBAND_THREADS", "5")
        assert resolve_threads() == 5

    def test_bad_env_var_rejected(self, monkeypatch):
        monkeypatch.setenv("BATCHBAND_THREADS", "many")
        with pytest.raises(ConfigError):
            resolve_threads()

    def test_default_positive(self, monkeypatch):
        monkeypatch.delenv("BATCHBAND_THREADS", raising=False)
        assert resolve_threads() >= 1


class TestRunExperiment:
    def test_row_per_cell_in_config_order(self):
        cfg = small_config(envs=("env1", "env2"), batch_sizes=(1, 5))
        table = run_experiment(cfg)
        keys = [(r.env, r.policy, r.b) for r in table.rows]
        assert keys == [
            ("env1", "ucb", 1),
            ("env1", "ucb", 5),
            ("env2", "ucb", 1),
            ("env2", "ucb", 5),
        ]
        specs = [r.spec for r in table.rows]
        assert specs == ["online", "batch", "online", "batch"]

    def test_results_csv_bytes_stable_across_runs(self, tmp_path):
        cfg = small_config()
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        run_experiment(cfg).to_results_csv(p1)
        run_experiment(cfg).to_results_csv(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_results_identical_across_thread_counts(self, tmp_path):
        cfg = small_config(envs=("env1",), batch_sizes=(1, 4), reps=3)
        p1, p2 = tmp_path / "t1.csv", tmp_path / "t2.csv"
        run_experiment(cfg, threads=1).to_results_csv(p1)
        run_experiment(cfg, threads=2).to_results_csv(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_per_rep_seeds_match_documented_derivation(self):
        cfg = small_config(reps=3, batch_sizes=(4,))
        table = run_experiment(cfg)
        env = preset("env1")
        grid = make_grid(cfg.n, 4)
        key = _cell_key("env1", "ucb", "plain", cfg.n, 4, cfg.delta, cfg.bound_from)
        finals = []
        for i in range(3):
            seed = derive_seed(cfg.master_seed, key, i)
            finals.append(run_batch(UcbPolicy(2), env, grid, seed).final_regret)
        assert table.rows[0].mean_final == pytest.approx(np.mean(finals), abs=1e-12)

    def test_extending_reps_preserves_earlier_trajectories(self):
        cfg3 = small_config(reps=3, batch_sizes=(4,))
        cfg4 = small_config(reps=4, batch_sizes=(4,))
        t3 = run_experiment(cfg3)
        t4 = run_experiment(cfg4)
        env = preset("env1")
        grid = make_grid(cfg4.n, 4)
        key = _cell_key("env1", "ucb", "plain", cfg4.n, 4, cfg4.delta, cfg4.bound_from)
        rep3 = run_batch(
            UcbPolicy(2), env, grid, derive_seed(cfg4.master_seed, key, 3)
        ).final_regret
        recovered = t4.rows[0].mean_final * 4 - rep3
        assert recovered / 3 == pytest.approx(t3.rows[0].mean_final, abs=1e-9)

    def test_regret_decomposition_matches_pull_counts(self):
        cfg = small_config(envs=("env4",), policies=("ucb", "ts"),
                           batch_sizes=(1, 5), n=100, reps=5)
        table = run_experiment(cfg)
        gap = gaps(preset("env4"))
        for row in table.rows:
            implied = float(gap @ row.mean_pull_counts)
            assert abs(implied - row.mean_final) < 1e-9

    def test_plain_mode_has_no_tau_columns(self):
        table = run_experiment(small_config())
        for row in table.rows:
            assert row.tau_mean is None
            assert row.tau_none is None

    def test_approx_mode_reports_tau_stats(self):
        cfg = small_config(
            envs=("env3",), n=400, batch_sizes=(100,), reps=3,
            mode="approx_delayed_start", delta=0.5,
        )
        table = run_experiment(cfg)
        row = table.rows[0]
        assert row.policy == "approx_delayed_start(ucb)"
        assert row.tau_none is not None
        assert row.tau_none + (0 if row.tau_mean is None else 1) >= 1
        if row.tau_mean is not None:
            assert row.tau_mean % 100 == 0

    def test_delayed_mode_runs_and_labels(self):
        cfg = small_config(envs=("env3",), n=300, batch_sizes=(100,),
                           reps=2, mode="delayed_start")
        table = run_experiment(cfg)
        assert table.rows[0].policy == "delayed_start(ucb)"
        assert table.rows[0].tau_none is not None

    def test_row_lookup(self):
        table = run_experiment(small_config())
        r = table.row("env1", "ucb", 4)
        assert r.b == 4
        with pytest.raises(KeyError):
            table.row("env1", "ucb", 99)


class TestCsvOutputs:
    def test_results_csv_shape(self, tmp_path):
        cfg = small_config(batch_sizes=(1, 4, 8))
        path = tmp_path / "results.csv"
        run_experiment(cfg).to_results_csv(path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == (
            "env,policy,spec,b,n,reps,mean_final_regret,stderr_final_regret,"
            "mean_optimal_fraction,tau_hat_mean,tau_hat_none"
        )
        assert len(lines) == 1 + 3

    def test_curves_csv_long_format(self, tmp_path):
        cfg = small_config(n=12, batch_sizes=(1, 4), reps=2)
        path = tmp_path / "curves.csv"
        run_experiment(cfg).to_curves_csv(path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "cell,t,mean,stderr"
        assert len(lines) == 1 + 2 * 12
        first = lines[1].split(",")
        assert first[0] == "env1|ucb|online|1"
        assert first[1] == "1"
        last = lines[-1].split(",")
        assert last[0] == "env1|ucb|batch|4"
        assert last[1] == "12"


class TestCheckTheoremBounds:
    def test_batch_size_one_rejected(self):
        with pytest.raises(ConfigError, match="b >= 2"):
            check_theorem_bounds("ucb", "env1", n=100, b=1, reps=5)

    def test_two_phase_violates_upper_bound_deterministically(self):
        report = check_theorem_bounds(
            "two_phase", "env2", n=20, b=5, reps=2, master_seed=0,
            policy_params={"switch_t": 10},
        )
        lower = report.inequalities[0]
        upper = report.inequalities[1]
        assert report.mean_online == pytest.approx(3.0)
        assert report.mean_batch == pytest.approx(3.0)
        assert report.mean_m == pytest.approx(0.0)
        assert lower.verdict == "boundary"
        assert lower.gate_pass
        assert upper.verdict == "violated"
        assert not upper.gate_pass
        assert not report.gate_pass

    def test_two_phase_mid_batch_switch_violates_lower_bound(self):
        report = check_theorem_bounds(
            "two_phase", "env2", n=20, b=5, reps=2, master_seed=0,
            policy_params={"switch_t": 8},
        )
        assert report.mean_online == pytest.approx(3.6)
        assert report.mean_batch == pytest.approx(3.0)
        lower = report.inequalities[0]
        assert lower.verdict == "violated"
        assert not lower.gate_pass
        assert not report.gate_pass

    def test_ucb_sandwich_gate_passes(self):
        report = check_theorem_bounds("ucb", "env1", n=300, b=10, reps=40,
                                      master_seed=11)
        assert report.m == 30
        assert report.gate_pass
        for iq in report.inequalities:
            assert iq.verdict in ("holds", "inconclusive", "boundary")

    def test_threads_do_not_change_estimates(self):
        r1 = check_theorem_bounds("ucb", "env2", n=60, b=6, reps=8,
                                  master_seed=3, threads=1)
        r2 = check_theorem_bounds("ucb", "env2", n=60, b=6, reps=8,
                                  master_seed=3, threads=2)
        assert r1.mean_online == r2.mean_online
        assert r1.mean_batch == r2.mean_batch
        assert r1.mean_m == r2.mean_m


class TestRegretCurve:
    def test_best_fixed_arm_has_zero_curve(self):
        env = preset("env1")
        grid = make_grid(50, 5)
        curve = regret_curve(FixedArmPolicy(2, 0), env, "batch", grid, reps=4)
        assert np.all(curve.values == 0.0)
        assert np.all(curve.stderr == 0.0)

    def test_uniform_env1_rate_is_half_gap(self):
        env = preset("env1")
        grid = make_grid(400, 1)
        curve = regret_curve(UniformPolicy(2), env, "online", grid,
                             reps=400, master_seed=5)
        assert curve.values[-1] == pytest.approx(40.0, abs=0.5)
        mid = curve.values[199]
        assert mid == pytest.approx(20.0, abs=0.4)

    def test_single_rep_matches_direct_run(self):
        env = preset("env2")
        grid = make_grid(30, 1)
        policy = UcbPolicy(2)
        curve = regret_curve(policy, env, "online", grid, reps=1, master_seed=9)
        seed = derive_seed(9, "curve", "online", 30, 1, 0)
        rec = run_online(UcbPolicy(2), env, 30, seed)
        assert np.array_equal(curve.values, rec.pseudo_regret)

    def test_bad_spec_rejected(self):
        with pytest.raises(ConfigError):
            regret_curve(UcbPolicy(2), preset("env1"), "sideways",
                         make_grid(10, 1), reps=1)
