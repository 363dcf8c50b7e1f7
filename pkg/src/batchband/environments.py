"""Reward environments and logged-data handling.

Two environment families are supported:

* ``BernoulliEnv``: K independent Bernoulli arms with fixed means.  Ships
  with six named presets covering two-armed gaps from 0.2 to 0.6 and two
  four-armed configurations.
* ``LinearContextualEnv``: disjoint-arm linear model.  A context vector on
  the unit sphere is embedded one-hot per arm, the mean reward is the inner
  product with a global weight vector, and the noise is standard Gaussian.

Logged datasets for offline replay are plain CSV files with one row per
round: context coordinates (if any), the logged action, the observed reward,
and the logging policy's probability for that action.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import DimensionMismatchError, Instance

NORM_TOL = 1e-9


class DataError(ValueError):
    """Raised for malformed logged-data records or files."""


@dataclass(frozen=True, eq=False)
class BernoulliEnv:
    """K-armed Bernoulli bandit with means in [0, 1]."""

    means: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.means, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise DimensionMismatchError("need a 1-D vector of at least 2 means")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("Bernoulli means must lie in [0, 1]")
        arr.flags.writeable = False
        object.__setattr__(self, "means", arr)

    @property
    def k(self) -> int:
        return int(self.means.size)

    @property
    def optimal_arm(self) -> int:
        return int(np.argmax(self.means))

    def instance(self) -> Instance:
        return Instance(self.means)

    def gap_vector(self) -> np.ndarray:
        """Per-arm suboptimality gaps Delta_a = max(means) - means[a]."""
        return float(self.means.max()) - self.means

    def sample_rewards(self, actions: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw one Bernoulli reward per chosen action."""
        actions = np.asarray(actions)
        return (rng.random(actions.size) < self.means[actions]).astype(float)


PRESETS: dict[str, tuple[float, ...]] = {
    "env1": (0.7, 0.5),
    "env2": (0.7, 0.4),
    "env3": (0.7, 0.1),
    "env4": (0.35, 0.18, 0.47, 0.61),
    "env5": (0.40, 0.75, 0.57, 0.49),
    "env6": (0.70, 0.50, 0.30, 0.10),
}


def preset(name: str) -> BernoulliEnv:
    """Look up a named Bernoulli preset (``env1`` .. ``env6``)."""
    try:
        means = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return BernoulliEnv(np.array(means))


def parse_env(spec: str) -> BernoulliEnv:
    """Resolve a preset name or an inline comma-separated mean list."""
    if spec in PRESETS:
        return preset(spec)
    try:
        means = np.array([float(x) for x in spec.split(",")])
    except ValueError:
        raise ValueError(f"env {spec!r} is neither a preset nor a mean list")
    return BernoulliEnv(means)


def gaps(env: BernoulliEnv) -> np.ndarray:
    """Suboptimality gaps of a Bernoulli environment."""
    return env.gap_vector()


def block_features(context: np.ndarray, k: int) -> np.ndarray:
    """Disjoint-arm feature matrix: context copied into arm ``a``'s block.

    Returns shape ``(k, k * p)`` where ``p = len(context)``; row ``a`` is
    zero except for the context in columns ``[a*p, (a+1)*p)``.
    """
    context = np.asarray(context, dtype=float)
    if context.ndim != 1 or context.size == 0:
        raise DimensionMismatchError("context must be a non-empty 1-D vector")
    p = context.size
    out = np.zeros((k, k * p))
    for a in range(k):
        out[a, a * p : (a + 1) * p] = context
    return out


@dataclass(frozen=True, eq=False)
class LinearContextualEnv:
    """Disjoint-arm linear environment.

    Contexts are drawn uniformly on the unit sphere in ``context_dim``
    dimensions.  Arm ``a``'s feature vector places the context in block
    ``a`` of a ``k * context_dim`` one-hot layout, so the weight vector has
    dimension ``k * context_dim`` and each arm effectively owns its own
    weight block.  Rewards are the linear mean plus N(0, 1) noise.
    """

    theta: np.ndarray
    k: int
    context_dim: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.theta, dtype=float)
        if self.k < 2 or self.context_dim < 1:
            raise DimensionMismatchError("need k >= 2 arms and context_dim >= 1")
        if arr.ndim != 1 or arr.size != self.k * self.context_dim:
            raise DimensionMismatchError(
                f"weight vector must have length {self.k * self.context_dim}"
            )
        norm = float(np.linalg.norm(arr))
        if norm > 1.0 + NORM_TOL:
            raise ValueError(f"weight vector norm {norm:.6f} exceeds 1")
        arr.flags.writeable = False
        object.__setattr__(self, "theta", arr)

    @property
    def dim(self) -> int:
        return int(self.theta.size)

    def instance(self) -> Instance:
        return Instance(self.theta)

    def sample_contexts(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """Draw ``m`` contexts uniformly on the unit sphere, shape (m, p)."""
        raw = rng.standard_normal((m, self.context_dim))
        norms = np.linalg.norm(raw, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return raw / norms

    def features(self, context: np.ndarray) -> np.ndarray:
        """Per-arm feature matrix for one context, shape (k, dim)."""
        context = np.asarray(context, dtype=float)
        if context.shape != (self.context_dim,):
            raise DimensionMismatchError(
                f"context must have shape ({self.context_dim},)"
            )
        return block_features(context, self.k)

    def features_batch(self, contexts: np.ndarray) -> np.ndarray:
        """Feature tensors for a batch of contexts, shape (m, k, dim)."""
        contexts = np.asarray(contexts, dtype=float)
        m = contexts.shape[0]
        out = np.zeros((m, self.k, self.dim))
        for a in range(self.k):
            out[:, a, a * self.context_dim : (a + 1) * self.context_dim] = contexts
        return out

    def mean_matrix(self, contexts: np.ndarray) -> np.ndarray:
        """Mean reward of every arm for each context, shape (m, k)."""
        blocks = self.theta.reshape(self.k, self.context_dim)
        return np.asarray(contexts, dtype=float) @ blocks.T

    def sample_rewards(
        self, chosen_features: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray:
        """Noisy rewards for already-chosen feature vectors, shape (m,)."""
        chosen_features = np.asarray(chosen_features, dtype=float)
        means = chosen_features @ self.theta
        return means + rng.standard_normal(means.shape)


def make_linear_env(k: int, context_dim: int, seed: int = 0) -> LinearContextualEnv:
    """Convenience constructor: a random unit-norm weight vector."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal(k * context_dim)
    return LinearContextualEnv(raw / np.linalg.norm(raw), k=k, context_dim=context_dim)


@dataclass(frozen=True, eq=False)
class LoggedRecord:
    """One logged interaction: context (possibly empty), action, reward, prob."""

    context: np.ndarray
    action: int
    reward: float
    logging_prob: float

    def __post_init__(self) -> None:
        ctx = np.asarray(self.context, dtype=float)
        if ctx.ndim != 1:
            raise DataError("context must be a 1-D vector (possibly empty)")
        if not 0.0 < self.logging_prob <= 1.0:
            raise DataError(f"logging_prob {self.logging_prob} outside (0, 1]")
        ctx.flags.writeable = False
        object.__setattr__(self, "context", ctx)


def synth_logged_dataset(
    env: BernoulliEnv | LinearContextualEnv,
    n_records: int,
    seed: int,
    logging_probs: np.ndarray | None = None,
) -> list[LoggedRecord]:
    """Generate a uniformly-logged dataset from an environment.

    The logging policy is uniform over arms unless ``logging_probs`` is
    given.  Contextual environments draw a fresh context per record.
    """
    rng = np.random.default_rng(seed)
    k = env.k
    if logging_probs is None:
        probs = np.full(k, 1.0 / k)
    else:
        probs = np.asarray(logging_probs, dtype=float)
        if probs.shape != (k,) or abs(probs.sum() - 1.0) > 1e-9 or np.any(probs <= 0):
            raise DataError("logging_probs must be a positive probability vector")
    actions = rng.choice(k, size=n_records, p=probs)
    records: list[LoggedRecord] = []
    if isinstance(env, LinearContextualEnv):
        contexts = env.sample_contexts(rng, n_records)
        feats = env.features_batch(contexts)
        chosen = feats[np.arange(n_records), actions]
        rewards = env.sample_rewards(chosen, rng)
        for i in range(n_records):
            records.append(
                LoggedRecord(contexts[i], int(actions[i]), float(rewards[i]), float(probs[actions[i]]))
            )
    else:
        rewards = env.sample_rewards(actions, rng)
        empty = np.zeros(0)
        for i in range(n_records):
            records.append(
                LoggedRecord(empty, int(actions[i]), float(rewards[i]), float(probs[actions[i]]))
            )
    return records


def _csv_header(context_dim: int) -> list[str]:
    return [f"context_{i}" for i in range(context_dim)] + [
        "action",
        "reward",
        "logging_prob",
    ]


def write_logged_csv(records, path) -> None:
    """Write logged records to CSV with the standard header."""
    records = list(records)
    if not records:
        raise DataError("refusing to write an empty dataset")
    p = records[0].context.size
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_csv_header(p))
        for rec in records:
            if rec.context.size != p:
                raise DataError("mixed context dimensions in dataset")
            row = [repr(float(x)) for x in rec.context]
            row += [str(rec.action), repr(float(rec.reward)), repr(float(rec.logging_prob))]
            writer.writerow(row)


def read_logged_csv(path) -> list[LoggedRecord]:
    """Read a logged-data CSV, validating the header and every row.

    Raises
    ------
    DataError
        With a 1-based line number for any malformed row.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty logged-data file")
        p = len(header) - 3
        if p < 0 or header != _csv_header(p):
            raise DataError(f"unexpected header {header!r}")
        records: list[LoggedRecord] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != p + 3:
                raise DataError(f"line {lineno}: expected {p + 3} fields, got {len(row)}")
            try:
                ctx = np.array([float(x) for x in row[:p]])
                action = int(row[p])
                reward = float(row[p + 1])
                prob = float(row[p + 2])
                records.append(LoggedRecord(ctx, action, reward, prob))
            except (ValueError, DataError) as exc:
                raise DataError(f"line {lineno}: {exc}") from exc
    return records
