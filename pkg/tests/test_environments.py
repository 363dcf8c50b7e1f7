import numpy as np
import pytest

from batchband.environments import (
    BernoulliEnv,
    DataError,
    LinearContextualEnv,
    LoggedRecord,
    PRESETS,
    gaps,
    make_linear_env,
    parse_env,
    preset,
    read_logged_csv,
    synth_logged_dataset,
    write_logged_csv,
)


def test_presets_exist_with_expected_means():
    assert preset("env1").means.tolist() == [0.7, 0.5]
    assert preset("env2").means.tolist() == [0.7, 0.4]
    assert preset("env3").means.tolist() == [0.7, 0.1]
    assert preset("env4").means.tolist() == [0.35, 0.18, 0.47, 0.61]
    assert preset("env5").means.tolist() == [0.40, 0.75, 0.57, 0.49]
    assert preset("env6").means.tolist() == [0.70, 0.50, 0.30, 0.10]
    assert len(PRESETS) == 6


def test_unknown_preset_raises():
    with pytest.raises(KeyError):
        preset("env7")


def test_parse_env_inline_means():
    env = parse_env("0.9,0.2,0.5")
    assert env.means.tolist() == [0.9, 0.2, 0.5]
    with pytest.raises(ValueError):
        parse_env("not,numbers")


def test_gaps_values():
    assert np.allclose(gaps(preset("env1")), [0.0, 0.2])
    assert np.allclose(gaps(preset("env3")), [0.0, 0.6])
    assert np.allclose(gaps(preset("env4")), [0.26, 0.43, 0.14, 0.0])


def test_gaps_nonnegative_zero_at_optimum_property():
    rng = np.random.default_rng(5)
    for _ in range(30):
        k = int(rng.integers(2, 7))
        env = BernoulliEnv(rng.uniform(size=k))
        g = gaps(env)
        assert np.all(g >= 0)
        assert g[env.optimal_arm] == 0.0


def test_bernoulli_validation():
    with pytest.raises(ValueError):
        BernoulliEnv(np.array([0.5, 1.2]))
    with pytest.raises(Exception):
        BernoulliEnv(np.array([0.5]))


def test_bernoulli_sample_mean_matches():
    env = preset("env1")
    rng = np.random.default_rng(42)
    rewards = env.sample_rewards(np.zeros(100_000, dtype=int), rng)
    assert set(np.unique(rewards)) <= {0.0, 1.0}
    assert abs(rewards.mean() - 0.7) < 0.005


def test_bernoulli_sampling_deterministic_under_seed():
    env = preset("env4")
    acts = np.array([0, 1, 2, 3, 0, 1] * 10)
    r1 = env.sample_rewards(acts, np.random.default_rng(9))
    r2 = env.sample_rewards(acts, np.random.default_rng(9))
    assert np.array_equal(r1, r2)


def test_linear_env_norm_enforced():
    with pytest.raises(ValueError):
        LinearContextualEnv(np.full(4, 1.0), k=2, context_dim=2)
    env = LinearContextualEnv(np.full(4, 0.5), k=2, context_dim=2)
    assert env.dim == 4


def test_linear_contexts_on_unit_sphere():
    env = make_linear_env(k=3, context_dim=5, seed=1)
    ctx = env.sample_contexts(np.random.default_rng(2), 200)
    assert ctx.shape == (200, 5)
    assert np.allclose(np.linalg.norm(ctx, axis=1), 1.0, atol=1e-9)


def test_linear_features_block_layout():
    env = LinearContextualEnv(np.array([0.1, 0.2, 0.3, 0.4]), k=2, context_dim=2)
    f = env.features(np.array([1.0, 0.0]))
    assert f.shape == (2, 4)
    assert f[0].tolist() == [1.0, 0.0, 0.0, 0.0]
    assert f[1].tolist() == [0.0, 0.0, 1.0, 0.0]
    fb = env.features_batch(np.array([[1.0, 0.0], [0.0, 2.0]]))
    assert fb.shape == (2, 2, 4)
    assert fb[1, 1].tolist() == [0.0, 0.0, 0.0, 2.0]


def test_linear_mean_matrix_agrees_with_features():
    env = make_linear_env(k=3, context_dim=4, seed=3)
    rng = np.random.default_rng(4)
    ctx = env.sample_contexts(rng, 10)
    mm = env.mean_matrix(ctx)
    feats = env.features_batch(ctx)
    assert np.allclose(mm, feats @ env.theta, atol=1e-12)


def test_linear_rewards_noise_unit_variance():
    env = make_linear_env(k=2, context_dim=3, seed=5)
    rng = np.random.default_rng(6)
    ctx = env.sample_contexts(rng, 20000)
    feats = env.features_batch(ctx)[:, 0, :]
    rewards = env.sample_rewards(feats, rng)
    noise = rewards - feats @ env.theta
    assert abs(noise.mean()) < 0.02
    assert abs(noise.std() - 1.0) < 0.02


def test_synth_logged_dataset_uniform_logging():
    env = preset("env1")
    records = synth_logged_dataset(env, 50_000, seed=7)
    assert len(records) == 50_000
    acts = np.array([r.action for r in records])
    assert abs((acts == 0).mean() - 0.5) < 0.01
    arm0 = np.array([r.reward for r in records if r.action == 0])
    assert abs(arm0.mean() - 0.7) < 0.01
    assert all(r.logging_prob == 0.5 for r in records[:100])


def test_logged_record_validation():
    with pytest.raises(DataError):
        LoggedRecord(np.zeros(0), 0, 1.0, 0.0)
    with pytest.raises(DataError):
        LoggedRecord(np.zeros(0), 0, 1.0, 1.5)


def test_logged_csv_roundtrip_no_context(tmp_path):
    env = preset("env2")
    records = synth_logged_dataset(env, 200, seed=1)
    path = tmp_path / "log.csv"
    write_logged_csv(records, path)
    header = path.read_text().splitlines()[0]
    assert header == "action,reward,logging_prob"
    back = read_logged_csv(path)
    assert len(back) == 200
    assert all(a.action == b.action for a, b in zip(records, back))
    assert all(a.reward == b.reward for a, b in zip(records, back))


def test_logged_csv_roundtrip_with_context(tmp_path):
    env = make_linear_env(k=2, context_dim=3, seed=8)
    records = synth_logged_dataset(env, 50, seed=2)
    path = tmp_path / "ctx.csv"
    write_logged_csv(records, path)
    header = path.read_text().splitlines()[0]
    assert header == "context_0,context_1,context_2,action,reward,logging_prob"
    back = read_logged_csv(path)
    assert np.allclose(
        np.stack([r.context for r in back]),
        np.stack([r.context for r in records]),
        atol=0,
    )


def test_read_logged_csv_reports_line_numbers(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("action,reward,logging_prob\n0,1.0,0.5\n1,oops,0.5\n")
    with pytest.raises(DataError, match="line 3"):
        read_logged_csv(path)
    path.write_text("wrong,header\n")
    with pytest.raises(DataError, match="header"):
        read_logged_csv(path)
