"""Delayed-start meta-algorithms and the certification machinery behind them.

The closed-form bound ``MonotoneBound`` lower-bounds, for an index policy on
a finite-armed instance, the probability that the next decision is optimal:
each suboptimal arm ``a`` contributes ``min(1, 4 ln(t+1) / (t Delta_a^2) +
8/t)`` and the bound is one minus their sum, clamped to [0, 1].  It is
non-decreasing in ``t`` and never decreases when every gap widens.

Two meta-runners wrap a candidate policy:

* ``delayed_start_run`` plays a naive policy until the first batch boundary
  where a supplied bound becomes positive, then hands the candidate the full
  accumulated history (the bound is typically built from the true instance,
  so this is the oracle variant).
* ``approx_delayed_start_run`` estimates the instance on the fly.  At each
  batch boundary it forms a pessimistic instance from confidence intervals
  (leader shrunk by its interval, every other arm inflated by its own) and
  certifies the switch only when the bound of that pessimistic instance
  beats uniform play and the failure probability ``2K/t^2`` is below the
  requested ``delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BatchGrid
from .environments import BernoulliEnv
from .policies import UniformPolicy
from .specifications import RunRecord


class InsufficientDataError(ValueError):
    """Raised when a certification check is asked before every arm has data."""


@dataclass(frozen=True, eq=False)
class MonotoneBound:
    """Aggregate lower bound on the chance of an optimal next pull.

    Requires a unique best arm.  ``per_arm(t)`` gives each suboptimal arm's
    clamped contribution (zero at the best arm); ``aggregate(t)`` is the
    bound itself.  Both accept scalar or array ``t``.
    """

    theta: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.theta, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("need a 1-D instance with at least two arms")
        best = arr.max()
        if int((arr == best).sum()) != 1:
            raise ValueError("bound needs a unique best arm")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "theta", arr)

    @property
    def k(self) -> int:
        return int(self.theta.size)

    @property
    def best_arm(self) -> int:
        return int(np.argmax(self.theta))

    def per_arm(self, t) -> np.ndarray:
        """Clamped per-arm terms, shape (..., k); zero at the best arm."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 1):
            raise ValueError("bound defined for t >= 1")
        gaps = self.theta.max() - self.theta
        out = np.zeros(t_arr.shape + (self.k,))
        tt = t_arr[..., None]
        sub = gaps > 0
        out[..., sub] = 4.0 * np.log(tt + 1.0) / (tt * gaps[sub] ** 2) + 8.0 / tt
        return np.clip(out, 0.0, 1.0)

    def aggregate(self, t):
        """The bound ``max(0, 1 - sum of per-arm terms)`` at time(s) ``t``."""
        total = self.per_arm(t).sum(axis=-1)
        out = np.clip(1.0 - total, 0.0, 1.0)
        return float(out) if np.isscalar(t) or np.asarray(t).ndim == 0 else out

    def __call__(self, t):
        return self.aggregate(t)


def monotone_bound(theta, t):
    """One-shot evaluation: returns ``(aggregate, per_arm)`` at time ``t``."""
    mb = MonotoneBound(np.asarray(theta, dtype=float))
    return mb.aggregate(t), mb.per_arm(t)


def tau_instance(theta, t_max: int) -> int | None:
    """Earliest ``t`` at which the bound beats uniform play (``> 1/k``).

    Returns None when no ``t <= t_max`` qualifies.
    """
    mb = MonotoneBound(np.asarray(theta, dtype=float))
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    ts = np.arange(1, t_max + 1)
    vals = mb.aggregate(ts)
    hits = np.nonzero(vals > 1.0 / mb.k)[0]
    return int(hits[0] + 1) if hits.size else None


def pessimistic_instance(counts, means, t: int) -> np.ndarray:
    """Confidence-box corner least favourable to the current leader.

    The empirical leader is shrunk by its interval width
    ``sqrt(ln t / pulls)`` and every other arm is inflated by its own width.
    """
    counts = np.asarray(counts, dtype=float)
    means = np.asarray(means, dtype=float)
    if counts.shape != means.shape or counts.ndim != 1:
        raise ValueError("counts and means must be matching 1-D vectors")
    if np.any(counts < 1):
        raise InsufficientDataError("every arm needs at least one pull")
    if t < 2:
        raise ValueError("certification needs t >= 2")
    widths = np.sqrt(math.log(t) / counts)
    leader = int(np.argmax(means))
    theta_hat = means + widths
    theta_hat[leader] = means[leader] - widths[leader]
    return theta_hat


def check_phase(counts, means, t: int, k: int, delta: float, bound_cls=MonotoneBound) -> bool:
    """One certification check; True means "stay in phase 1".

    The check passes (returns False) only when the pessimistic instance
    still has the empirical leader on top, its bound at ``t`` beats uniform
    play, and the failure probability ``2k/t^2`` is below ``delta``.
    """
    counts = np.asarray(counts, dtype=float)
    means = np.asarray(means, dtype=float)
    if counts.size != k or means.size != k:
        raise ValueError(f"expected {k} arms")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    theta_hat = pessimistic_instance(counts, means, t)
    leader = int(np.argmax(means))
    others = np.delete(theta_hat, leader)
    if theta_hat[leader] <= others.max():
        return True  # intervals still overlap: ordering uncertified
    bound = bound_cls(theta_hat)
    if bound.aggregate(t) <= 1.0 / k:
        return True
    if 2.0 * k / (t * t) >= delta:
        return True
    return False


@dataclass(eq=False)
class PhaseState:
    """Outcome of a delayed-start run's phase structure.

    ``tau_hat`` is the last phase-1 timestep (always a batch boundary, 0
    when the candidate runs from the start, None when phase 1 never ends).
    The diagnostic fields record what the certification saw at the switch.
    """

    phase1: bool
    tau_hat: int | None
    delta: float | None = None
    counts: np.ndarray | None = None
    means: np.ndarray | None = None
    theta_hat: np.ndarray | None = None


def _require_bernoulli(env) -> None:
    if not isinstance(env, BernoulliEnv):
        raise TypeError("delayed-start runners support finite-armed environments only")


def _finish_record(
    spec, policy_label, env_label, grid, seed, actions, deltas, phase, k
) -> RunRecord:
    opt = deltas == 0.0
    return RunRecord(
        spec=spec,
        policy=policy_label,
        env=env_label,
        n=grid.n,
        b=grid.b,
        seed=seed,
        actions=actions,
        pseudo_regret=np.cumsum(deltas),
        optimal_hits=np.cumsum(opt),
        pull_counts=np.bincount(actions, minlength=k),
        phase=phase,
    )


def delayed_start_run(
    candidate,
    naive,
    bound,
    env: BernoulliEnv,
    grid: BatchGrid,
    seed: int,
    policy_label: str | None = None,
    env_label: str = "custom",
) -> RunRecord:
    """Oracle delayed start: switch at the first epoch where ``bound > 0``.

    ``bound`` is any callable mapping a timestep to a real number, normally
    a ``MonotoneBound`` built from the true instance.  The naive policy
    plays (and history accrues on the batch schedule) before the switch;
    the candidate then takes over with the full accumulated history.
    """
    _require_bernoulli(env)
    n, b, M = grid.n, grid.b, grid.M
    switch_j = None
    for j in range(1, M + 1):
        if bound(grid.epoch_start(j)) > 0.0:
            switch_j = j
            break

    rng = np.random.default_rng(seed)
    gap_vec = env.gap_vector()
    actions = np.empty(n, dtype=np.int64)
    deltas = np.empty(n)
    naive_state = naive.init_state()
    cand_state = None
    past_actions: list[np.ndarray] = []
    past_rewards: list[np.ndarray] = []

    for j in range(1, M + 1):
        lo, hi = (j - 1) * b, j * b
        if switch_j is not None and j >= switch_j:
            if cand_state is None:
                cand_state = candidate.init_state()
                if past_actions:
                    cand_state = candidate.update_arrays(
                        cand_state,
                        np.concatenate(past_actions),
                        np.concatenate(past_rewards),
                    )
            acts = candidate.act_batch(cand_state, b, rng)
            rews = env.sample_rewards(acts, rng)
            cand_state = candidate.update_arrays(cand_state, acts, rews)
        else:
            acts = naive.act_batch(naive_state, b, rng)
            rews = env.sample_rewards(acts, rng)
            naive_state = naive.update_arrays(naive_state, acts, rews)
            past_actions.append(acts)
            past_rewards.append(rews)
        actions[lo:hi] = acts
        deltas[lo:hi] = gap_vec[acts]

    phase = PhaseState(
        phase1=switch_j is None,
        tau_hat=None if switch_j is None else (switch_j - 1) * b,
    )
    label = policy_label or f"delayed_start({candidate.name})"
    return _finish_record(
        "batch" if b > 1 else "online", label, env_label, grid, seed,
        actions, deltas, phase, env.k,
    )


def approx_delayed_start_run(
    candidate,
    env: BernoulliEnv,
    grid: BatchGrid,
    delta: float,
    seed: int,
    naive=None,
    bound_from: str = "instance",
    policy_label: str | None = None,
    env_label: str = "custom",
) -> RunRecord:
    """Estimated delayed start: certify the switch from data at batch ends.

    At each phase-1 boundary ``t = jb`` the check needs every arm pulled at
    least once; otherwise it simply stays in phase 1.  ``bound_from`` picks
    what feeds the bound: ``"instance"`` uses the pessimistic estimate (the
    real algorithm), ``"oracle"`` substitutes the true means, a diagnostic
    that isolates estimation error.
    """
    _require_bernoulli(env)
    if bound_from not in ("instance", "oracle"):
        raise ValueError("bound_from must be 'instance' or 'oracle'")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    naive = naive if naive is not None else UniformPolicy(env.k)
    n, b, M = grid.n, grid.b, grid.M
    k = env.k
    rng = np.random.default_rng(seed)
    gap_vec = env.gap_vector()
    actions = np.empty(n, dtype=np.int64)
    deltas = np.empty(n)
    rewards_all = np.empty(n)
    naive_state = naive.init_state()
    cand_state = None
    phase = PhaseState(phase1=True, tau_hat=None, delta=delta)

    for j in range(1, M + 1):
        lo, hi = (j - 1) * b, j * b
        if not phase.phase1:
            acts = candidate.act_batch(cand_state, b, rng)
            rews = env.sample_rewards(acts, rng)
            cand_state = candidate.update_arrays(cand_state, acts, rews)
        else:
            acts = naive.act_batch(naive_state, b, rng)
            rews = env.sample_rewards(acts, rng)
            naive_state = naive.update_arrays(naive_state, acts, rews)
        actions[lo:hi] = acts
        deltas[lo:hi] = gap_vec[acts]
        rewards_all[lo:hi] = rews

        if phase.phase1:
            t = hi
            counts = np.bincount(actions[:t], minlength=k)
            if t >= 2 and counts.min() >= 1:
                sums = np.bincount(actions[:t], weights=rewards_all[:t], minlength=k)
                means = sums / counts
                if bound_from == "oracle":
                    staying = _oracle_check(env.means, t, k, delta)
                    theta_used = env.means.copy()
                else:
                    staying = check_phase(counts, means, t, k, delta)
                    theta_used = pessimistic_instance(counts, means, t)
                if not staying:
                    phase.phase1 = False
                    phase.tau_hat = t
                    phase.counts = counts.copy()
                    phase.means = means.copy()
                    phase.theta_hat = theta_used
                    cand_state = candidate.update_arrays(
                        candidate.init_state(), actions[:t], rewards_all[:t]
                    )

    label = policy_label or f"approx_delayed_start({candidate.name})"
    return _finish_record(
        "batch" if b > 1 else "online", label, env_label, grid, seed,
        actions, deltas, phase, env.k,
    )


def _oracle_check(theta, t, k, delta) -> bool:
    """Certification with the true means standing in for the estimate."""
    try:
        bound = MonotoneBound(np.asarray(theta, dtype=float))
    except ValueError:
        return True
    if bound.aggregate(t) <= 1.0 / k:
        return True
    if 2.0 * k / (t * t) >= delta:
        return True
    return False
