"""Evaluating policies on logged data without deploying them.

Replay takes a log of (context, action, reward) records collected by a
uniform-random logger and streams it past a candidate policy.  Whenever
the candidate would have chosen the same action as the log, the record
counts as matched and its reward is scored; everything else is skipped.
Because the logger was uniform, the matched conversion rate is an
unbiased estimate of the candidate's online conversion rate.

The demo builds a synthetic log from a four-armed environment, replays
UCB and Thompson sampling at two batch sizes, and reports conversion
rates relative to the uniform logger itself.  Lift above 1.0 means the
policy would have beaten random action choice in production.

Run:  python3 demos/offline_replay.py
"""

from __future__ import annotations

from batchband import (
    ThompsonBetaPolicy,
    UcbPolicy,
    UniformPolicy,
    preset,
    relative_cr,
    replay_evaluate,
    synth_logged_dataset,
)

N_RECORDS = 5_000
SEED = 404


def main() -> None:
    env = preset("env6")
    records = synth_logged_dataset(env, N_RECORDS, SEED)
    k = env.k
    print(
        f"replaying {N_RECORDS} uniform-logged records, k={k} arms,"
        f" true means {env.means.tolist()}\n"
    )

    baseline = replay_evaluate(UniformPolicy(k), records, b=1, seed=1)
    print(f"{'policy':10} {'b':>5} {'matched':>8} {'cr':>7} {'lift':>6}")
    print("-" * 41)
    print(
        f"{'uniform':10} {1:5d} {baseline.matched:8d}"
        f" {baseline.cr:7.4f} {1.0:6.2f}"
    )

    for name, build in (
        ("ucb", lambda: UcbPolicy(k)),
        ("ts", lambda: ThompsonBetaPolicy(k)),
    ):
        for b in (1, 100):
            res = replay_evaluate(build(), records, b=b, seed=2)
            lift = relative_cr(res, baseline)
            print(
                f"{name:10} {b:5d} {res.matched:8d}"
                f" {res.cr:7.4f} {lift:6.2f}"
            )

    print(
        "\nEvery policy matches about one record in k, because the logged"
        "\nactions are uniform and independent of the candidate's choices."
        "\nThe learning policies concentrate on the 0.7 arm, so the records"
        "\nthey do match convert far better than the log average.  Replaying"
        "\nwith b=100 delays their learning exactly as a batched deployment"
        "\nwould, and the lift visibly shrinks, most of all for UCB."
    )


if __name__ == "__main__":
    main()
