"""User pairing strategies and power assignment for hybrid NOMA.

Pairings are built from channel gains ordered strongest-first; pair indices
are 0-based positions into whatever gain list was handed in (ranks for the
``pair_near_*`` functions, user indices for :func:`build_pairing`).  Within a
pair the first index is always the stronger user; ties rank the lower index
as stronger, so results are deterministic.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .schemes import PowerSplit


class PairingStrategy(Enum):
    NEAR_FAR = "nf"
    NEAR_NEAR = "nnff"
    RANDOM = "random"
    BEST = "best"  # exhaustive search over all pairings, resolved by the simulator


@dataclass(frozen=True)
class Pairing:
    """A partition of users into ordered (strong, weak) pairs."""

    pairs: tuple

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((int(a), int(b)) for a, b in self.pairs))
        flat = self.indices()
        if len(set(flat)) != len(flat):
            raise ValueError(f"each user may appear in exactly one pair, got {self.pairs}")

    def indices(self) -> tuple:
        return tuple(i for pair in self.pairs for i in pair)

    @property
    def num_users(self) -> int:
        return 2 * len(self.pairs)


def _check_even(n: int):
    if n < 2 or n % 2 != 0:
        raise ValueError(f"pairing needs an even user count >= 2, got {n}")


def _check_sorted_desc(gains):
    gains = [float(g) for g in gains]
    if any(a < b for a, b in zip(gains, gains[1:])):
        raise ValueError("gains must be sorted descending (strongest first)")
    return gains


def pair_near_far(gains_sorted_desc) -> Pairing:
    """Couple the k-th strongest with the k-th weakest: {(0, n-1), (1, n-2), ...}."""
    gains = _check_sorted_desc(gains_sorted_desc)
    n = len(gains)
    _check_even(n)
    return Pairing(tuple((k, n - 1 - k) for k in range(n // 2)))


def pair_near_near(gains_sorted_desc) -> Pairing:
    """Couple adjacent-strength users: {(0, 1), (2, 3), ...}."""
    gains = _check_sorted_desc(gains_sorted_desc)
    n = len(gains)
    _check_even(n)
    return Pairing(tuple((2 * k, 2 * k + 1) for k in range(n // 2)))


def enumerate_pairings(n: int) -> list:
    """All perfect matchings of n users, (n-1)!! of them, without duplicates.

    Pairs come out (min, max), which under descending gain order means
    strong-first.
    """
    _check_even(n)

    def matchings(items):
        if not items:
            yield ()
            return
        first, rest = items[0], items[1:]
        for i, partner in enumerate(rest):
            for tail in matchings(rest[:i] + rest[i + 1:]):
                yield ((first, partner),) + tail

    return [Pairing(p) for p in matchings(tuple(range(n)))]


def random_pairing(n: int, rng: np.random.Generator) -> Pairing:
    """One pairing drawn uniformly from all perfect matchings."""
    options = enumerate_pairings(n)
    return options[int(rng.integers(len(options)))]


def rank_by_gain(gains) -> np.ndarray:
    """User indices sorted by descending gain; equal gains keep index order."""
    return np.argsort(-np.asarray(gains, dtype=float), kind="stable")


def build_pairing(strategy: PairingStrategy, gains,
                  rng: np.random.Generator | None = None) -> Pairing:
    """Apply a pairing strategy to unsorted per-user gains.

    Returns a pairing over user indices (not ranks).  ``BEST`` needs rate
    evaluation and is resolved by the simulation engine, not here.
    """
    order = rank_by_gain(gains)
    sorted_gains = [float(gains[i]) for i in order]
    if strategy is PairingStrategy.NEAR_FAR:
        ranked = pair_near_far(sorted_gains)
    elif strategy is PairingStrategy.NEAR_NEAR:
        ranked = pair_near_near(sorted_gains)
    elif strategy is PairingStrategy.RANDOM:
        if rng is None:
            raise ValueError("random pairing needs a random stream")
        ranked = random_pairing(len(sorted_gains), rng)
    else:
        raise ValueError(f"strategy {strategy} cannot be built from gains alone")
    return Pairing(tuple((int(order[a]), int(order[b])) for a, b in ranked.pairs))


@dataclass(frozen=True)
class FixedPower:
    """Fixed power-assignment policy: the same (strong, weak) shares for every pair."""

    strong: float
    weak: float


def assign_power(pair_gains, policy: FixedPower) -> PowerSplit:
    """Power split for one strong-first pair of gains.

    The PowerSplit constructor rejects any assignment where the weaker user
    does not get the strictly larger share.
    """
    gain_strong, gain_weak = (float(g) for g in pair_gains)
    if gain_strong < gain_weak:
        raise ValueError(
            f"pair gains must be ordered strong-first, got ({gain_strong!r}, {gain_weak!r})"
        )
    return PowerSplit((policy.strong, policy.weak))
