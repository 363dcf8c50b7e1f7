"""Shared primitives: batch grids, decision rules, history bookkeeping.

Everything downstream (policies, runners, verifiers) speaks in terms of the
types defined here.  A run over horizon ``n`` is partitioned into ``M``
batches of equal size ``b``; decisions inside batch ``j`` see only the
feedback released at earlier batch boundaries.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

PROB_TOL = 1e-12


def derive_seed(master_seed: int, *parts) -> int:
    """Stable 64-bit seed from a master seed and arbitrary key parts.

    Hash-based (sha256), so it is platform-independent, insensitive to
    Python's hash randomisation, and extending a sweep with more reps or
    cells never perturbs the seeds of existing ones.
    """
    key = "|".join([str(master_seed), *(str(p) for p in parts)])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class GridError(ValueError):
    """Raised for invalid batch-grid parameters or out-of-range timesteps."""


class DimensionMismatchError(ValueError):
    """Raised when a rule, instance, or feature dimension disagrees."""


@dataclass(frozen=True, slots=True)
class BatchGrid:
    """Equal-size batch grid over a truncated horizon.

    Attributes
    ----------
    n : int
        Truncated horizon, always a multiple of ``b``.
    b : int
        Batch size.
    M : int
        Number of batches, ``n // b``.
    """

    n: int
    b: int
    M: int

    def epoch_start(self, j: int) -> int:
        """First timestep of batch ``j`` (1-based)."""
        if not 1 <= j <= self.M:
            raise GridError(f"batch index {j} outside 1..{self.M}")
        return (j - 1) * self.b + 1

    def batch_end(self, j: int) -> int:
        """Last timestep of batch ``j``; feedback is released after it."""
        if not 1 <= j <= self.M:
            raise GridError(f"batch index {j} outside 1..{self.M}")
        return j * self.b


def make_grid(n_raw: int, b: int) -> BatchGrid:
    """Build a batch grid, truncating the horizon to a multiple of ``b``.

    Parameters
    ----------
    n_raw : int
        Requested horizon; truncated to ``(n_raw // b) * b``.
    b : int
        Batch size, at least 1.

    Returns
    -------
    BatchGrid

    Raises
    ------
    GridError
        If ``b < 1`` or the truncated horizon is empty (``n_raw < b``).
    """
    if b < 1:
        raise GridError(f"batch size must be >= 1, got {b}")
    if n_raw < b:
        raise GridError(f"horizon {n_raw} shorter than one batch of {b}")
    m = n_raw // b
    return BatchGrid(n=m * b, b=b, M=m)


def batch_index(t: int, grid: BatchGrid) -> int:
    """1-based index of the batch containing timestep ``t``."""
    if not 1 <= t <= grid.n:
        raise GridError(f"timestep {t} outside 1..{grid.n}")
    return (t - 1) // grid.b + 1


@dataclass(frozen=True, eq=False)
class Instance:
    """Mean-parameter vector of an environment (arm means or a weight vector)."""

    theta: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.theta, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise DimensionMismatchError("instance vector must be 1-D and non-empty")
        if not np.all(np.isfinite(arr)):
            raise ValueError("instance vector must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "theta", arr)

    @property
    def dim(self) -> int:
        return int(self.theta.size)


@dataclass(frozen=True, eq=False)
class DecisionRule:
    """A probability vector over arms; the per-step output of a policy.

    Point masses model deterministic choices and realised posterior draws.
    Validation enforces non-negativity and unit sum within ``PROB_TOL``.
    """

    probs: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.probs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise DimensionMismatchError("rule must be a non-empty 1-D vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("rule probabilities must be finite")
        if np.any(arr < -PROB_TOL):
            raise ValueError("rule probabilities must be non-negative")
        total = float(arr.sum())
        if abs(total - 1.0) > max(PROB_TOL, PROB_TOL * arr.size):
            raise ValueError(f"rule probabilities sum to {total!r}, not 1")
        arr = np.clip(arr, 0.0, None)
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)

    @property
    def k(self) -> int:
        return int(self.probs.size)

    @staticmethod
    def point_mass(arm: int, k: int) -> "DecisionRule":
        if not 0 <= arm < k:
            raise DimensionMismatchError(f"arm {arm} outside 0..{k - 1}")
        p = np.zeros(k)
        p[arm] = 1.0
        return DecisionRule(p)

    @staticmethod
    def uniform(k: int) -> "DecisionRule":
        return DecisionRule(np.full(k, 1.0 / k))


@dataclass(frozen=True, slots=True)
class HistoryEntry:
    """One observed (timestep, action, reward) triple.

    ``action`` is an arm index for finite-armed runs and the chosen feature
    vector for linear-contextual runs.
    """

    t: int
    action: object
    reward: float


class History:
    """Feedback log with a visibility cursor.

    ``entries`` holds everything the policy will ever be allowed to see, in
    timestep order; ``visible_len`` marks how much has been released.  The
    three feedback schedules differ only in when entries are appended and
    when the cursor advances.
    """

    def __init__(self) -> None:
        self.entries: list[HistoryEntry] = []
        self.visible_len: int = 0

    @property
    def total(self) -> int:
        return len(self.entries)

    def append(self, entry: HistoryEntry) -> None:
        if self.entries and entry.t <= self.entries[-1].t:
            raise ValueError(
                f"entry timestep {entry.t} not after {self.entries[-1].t}"
            )
        self.entries.append(entry)

    def extend(self, entries) -> None:
        for e in entries:
            self.append(e)

    def release_all(self) -> None:
        self.visible_len = len(self.entries)

    def release_to(self, m: int) -> None:
        if not self.visible_len <= m <= len(self.entries):
            raise ValueError(
                f"cannot move cursor to {m} (visible {self.visible_len}, "
                f"total {len(self.entries)})"
            )
        self.visible_len = m

    def visible(self) -> list[HistoryEntry]:
        return self.entries[: self.visible_len]


def rule_value(rule: DecisionRule, instance: Instance) -> float:
    """Expected one-step mean reward of ``rule`` under ``instance``.

    Examples
    --------
    A 50/50 rule on means (0.7, 0.5) is worth 0.6.
    """
    if rule.k != instance.dim:
        raise DimensionMismatchError(
            f"rule has {rule.k} arms, instance has {instance.dim}"
        )
    return float(rule.probs @ instance.theta)


def compare_rules(a: DecisionRule, b: DecisionRule, instance: Instance) -> str:
    """Order two rules by value under ``instance``.

    Returns
    -------
    str
        ``"better"`` if ``a`` is strictly more valuable than ``b``,
        ``"worse"`` if strictly less, ``"equal"`` within ``PROB_TOL``.
    """
    va = rule_value(a, instance)
    vb = rule_value(b, instance)
    if abs(va - vb) <= PROB_TOL:
        return "equal"
    return "better" if va > vb else "worse"


def average_rule(rules) -> DecisionRule:
    """Pointwise average of a non-empty sequence of same-dimension rules."""
    rules = list(rules)
    if not rules:
        raise ValueError("cannot average zero rules")
    k = rules[0].k
    for r in rules:
        if r.k != k:
            raise DimensionMismatchError("rules have mixed dimensions")
    stacked = np.stack([r.probs for r in rules])
    return DecisionRule(stacked.mean(axis=0))
