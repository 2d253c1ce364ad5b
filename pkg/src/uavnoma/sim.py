"""Monte-Carlo engine for outage-probability and ergodic-sum-rate curves.

Reproducibility contract: trial t always draws from the stream derived from
(master_seed, t), trials are processed in fixed-size chunks whose boundaries
do not depend on the worker count, and per-chunk partial results are reduced
in chunk order.  Two runs with the same configuration and seed are therefore
bit-identical whether they execute on one worker or many.

The per-trial work inside a chunk is vectorized: gains are sampled trial by
trial from the per-trial streams, packed into arrays, and every scheme's rate
formulas are then evaluated on whole chunks at once.  A test pins this fast
path to the scalar formulas in :mod:`uavnoma.schemes`.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import FadingSpec, NetworkGeometry, draw_unit_gains, mean_power_gains
from .pairing import PairingStrategy, enumerate_pairings, pair_near_far, pair_near_near
from .schemes import PowerSplit, SchemeFamily, SchemeId, SnrPoint

CHUNK_TRIALS = 8192  # work-unit size; fixed so results never depend on worker count
_Z_95 = 1.96  # two-sided 95% normal quantile

# Counter-based streams: trial t owns the Philox counter block starting at
# t * 2**192, leaving 2**192 states per trial with no overlap between trials.
_TRIAL_COUNTER_STRIDE = 1 << 192


class OutageMode(Enum):
    PER_USER = "per-user"
    ANY_USER = "any-user"


@dataclass(frozen=True)
class SnrGrid:
    """Transmit-SNR sweep in dB, strictly ascending."""

    points_db: tuple

    def __post_init__(self):
        object.__setattr__(self, "points_db", tuple(float(p) for p in self.points_db))
        if len(self.points_db) == 0:
            raise ValueError("SNR grid must contain at least one point")
        if any(not math.isfinite(p) for p in self.points_db):
            raise ValueError("SNR grid points must be finite")
        if any(a >= b for a, b in zip(self.points_db, self.points_db[1:])):
            raise ValueError("SNR grid must be strictly ascending")

    def rho_values(self) -> tuple:
        return tuple(10.0 ** (p / 10.0) for p in self.points_db)


@dataclass(frozen=True)
class MonteCarloConfig:
    trials: int
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not (0 <= self.master_seed < 2 ** 64):
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class OutageSpec:
    """Outage targets in bit/s/Hz, one per user.

    PER_USER watches the single user selected by ``user_index`` (negative
    indices count from the weakest user, so the default -1 is the far user);
    ANY_USER declares outage when any user falls below its own target.
    """

    target_rates: tuple
    mode: OutageMode = OutageMode.PER_USER
    user_index: int = -1

    def __post_init__(self):
        object.__setattr__(self, "target_rates", tuple(float(t) for t in self.target_rates))
        if any(not (math.isfinite(t) and t >= 0.0) for t in self.target_rates):
            raise ValueError("target rates must be finite and >= 0")


@dataclass(frozen=True)
class OutageEstimate:
    """One outage probability with its 95% binomial confidence half-width."""

    probability: float
    ci_half_width: float
    trials: int
    events: int

    @property
    def normal_ok(self) -> bool:
        """Normal approximation is unreliable below 10 observed events."""
        return self.events >= 10


@dataclass(frozen=True)
class CurveResult:
    """One metric-versus-SNR curve with 95% confidence half-widths."""

    scheme: SchemeId
    metric: str  # "outage" or "sum-rate"
    snr_db: tuple
    values: tuple
    ci_half_width: tuple
    trials: int
    low_event_flags: tuple = None  # outage only: True where events < 10

    def __post_init__(self):
        if self.metric == "outage" and any(not (0.0 <= v <= 1.0) for v in self.values):
            raise ValueError("outage values must lie in [0, 1]")
        if any(c < 0.0 for c in self.ci_half_width):
            raise ValueError("confidence half-widths must be >= 0")


def derive_trial_stream(master_seed: int, trial_index: int) -> np.random.Generator:
    """Independent, reproducible random stream for one trial.

    Philox keyed by the master seed, with the 256-bit counter positioned at
    the trial's private block; distinct trials never share counter space.
    """
    bg = np.random.Philox(key=master_seed, counter=trial_index * _TRIAL_COUNTER_STRIDE)
    return np.random.Generator(bg)


class _TrialStreams:
    """Fast per-trial stream access inside one chunk.

    Rebuilding a Philox generator per trial costs ~25 us; resetting the
    counter of a single generator costs ~1 us and yields bit-identical draws
    (asserted by the test suite against :func:`derive_trial_stream`).
    """

    def __init__(self, master_seed: int):
        self._bg = np.random.Philox(key=master_seed)
        self._gen = np.random.Generator(self._bg)
        self._template = self._bg.state  # pristine buffer fields

    def stream(self, trial_index: int) -> np.random.Generator:
        counter = self._template["state"]["counter"]
        counter[:] = 0
        counter[3] = trial_index  # top 64-bit word == trial_index * 2**192
        self._bg.state = self._template
        return self._gen


def _default_strategy(scheme: SchemeId) -> PairingStrategy:
    if scheme.family is SchemeFamily.HYBRID_NF:
        return PairingStrategy.NEAR_FAR
    if scheme.family is SchemeFamily.HYBRID_NNFF:
        return PairingStrategy.NEAR_NEAR
    return None


def _rank_patterns(strategy: PairingStrategy, n: int) -> list:
    """Rank-space pair patterns to evaluate; >1 pattern only for RANDOM/BEST."""
    dummy_desc = list(range(n, 0, -1))
    if strategy is PairingStrategy.NEAR_FAR:
        return [pair_near_far(dummy_desc).pairs]
    if strategy is PairingStrategy.NEAR_NEAR:
        return [pair_near_near(dummy_desc).pairs]
    return [p.pairs for p in enumerate_pairings(n)]


@dataclass(frozen=True)
class _Task:
    """Everything one chunk worker needs; must stay picklable."""

    master_seed: int
    lo: int
    hi: int
    geometry: NetworkGeometry
    fading: FadingSpec
    scheme: SchemeId
    splits: tuple  # normalized: one PowerSplit per pair, or (PowerSplit,), or ()
    strategy: PairingStrategy
    rhos: tuple
    metric: str
    targets: tuple = None
    mode: OutageMode = None
    user_index: int = 0


def _sample_chunk(task: _Task):
    """Draw the chunk's snapshots trial by trial from the per-trial streams."""
    m = task.hi - task.lo
    means = mean_power_gains(task.geometry)
    gains = np.empty((m, means.size))
    streams = _TrialStreams(task.master_seed)
    want_pattern = task.strategy is PairingStrategy.RANDOM
    n_patterns = None
    pattern_idx = None
    if want_pattern:
        n_patterns = len(enumerate_pairings(task.geometry.num_users))
        pattern_idx = np.empty(m, dtype=np.int64)
    for k in range(m):
        rng = streams.stream(task.lo + k)
        gains[k] = draw_unit_gains(task.fading, means.size, rng)
        if want_pattern:
            pattern_idx[k] = rng.integers(n_patterns)
    gains *= means
    n = task.geometry.num_users
    return gains[:, :n], gains[:, n], gains[:, n + 1], gains[:, n + 2], pattern_idx


def _effective_gains(user_gains, hop1, hop2, rho, via_uav):
    if not via_uav or rho == 0.0:
        return user_gains
    g1 = rho * hop1[:, None]
    g2 = rho * hop2[:, None] * user_gains
    return (g1 * g2 / (g1 + g2 + 1.0)) / rho


def _pair_rates_ranked(sorted_gains, rho, pattern, pair_splits):
    """Per-rank rates of one hybrid pattern on descending-sorted gains."""
    out = np.empty_like(sorted_gains)
    for (rank_s, rank_w), split in zip(pattern, pair_splits):
        a_s, a_w = split.coefficients
        xs = rho * sorted_gains[:, rank_s]
        xw = rho * sorted_gains[:, rank_w]
        out[:, rank_s] = 0.5 * np.log2(1.0 + a_s * xs)
        out[:, rank_w] = 0.5 * np.log2(1.0 + a_w * xw / (a_s * xw + 1.0))
    return out


def _rate_matrix(task: _Task, user_gains, nf, hop1, hop2, rho, pattern_idx):
    """(trials, users) per-user rates of the chunk at one SNR point."""
    fam = task.scheme.family
    gains = _effective_gains(user_gains, hop1, hop2, rho, task.scheme.via_uav)
    n = gains.shape[1]

    if fam in (SchemeFamily.COOP_NOMA, SchemeFamily.NONCOOP_NOMA):
        a_near, a_far = task.splits[0].coefficients
        g_near, g_far = gains[:, 0], gains[:, 1]
        sinr_direct = a_far * rho * g_far / (a_near * rho * g_far + 1.0)
        if fam is SchemeFamily.COOP_NOMA:
            rate_near = 0.5 * np.log2(1.0 + a_near * rho * g_near)
            rate_far = 0.5 * np.log2(1.0 + np.maximum(sinr_direct, rho * nf))
        else:
            rate_near = np.log2(1.0 + a_near * rho * g_near)
            rate_far = np.log2(1.0 + sinr_direct)
        return np.column_stack([rate_near, rate_far])

    if fam is SchemeFamily.OMA:
        return 0.5 * np.log2(1.0 + rho * gains)

    if fam is SchemeFamily.TDMA:
        return np.log2(1.0 + rho * gains) / n

    order = np.argsort(-gains, axis=1, kind="stable")
    sorted_gains = np.take_along_axis(gains, order, axis=1)

    if fam is SchemeFamily.SC_NOMA:
        coeffs = np.asarray(task.splits[0].coefficients)
        stronger_share = np.concatenate([[0.0], np.cumsum(coeffs)[:-1]])
        x = rho * sorted_gains
        ranked = np.log2(1.0 + coeffs * x / (stronger_share * x + 1.0))
    else:  # hybrid families
        patterns = _rank_patterns(task.strategy, n)
        if len(patterns) == 1:
            ranked = _pair_rates_ranked(sorted_gains, rho, patterns[0], task.splits)
        else:
            stacked = np.stack([
                _pair_rates_ranked(sorted_gains, rho, p, task.splits) for p in patterns
            ])
            if task.strategy is PairingStrategy.RANDOM:
                choice = pattern_idx
            else:  # BEST: per-trial argmax of the pattern sum rates, first pattern wins ties
                choice = np.argmax(stacked.sum(axis=2), axis=0)
            ranked = stacked[choice, np.arange(sorted_gains.shape[0]), :]

    rates = np.empty_like(ranked)
    np.put_along_axis(rates, order, ranked, axis=1)
    return rates


def _run_chunk(task: _Task):
    """Per-SNR-point partial aggregates of one chunk of trials."""
    user_gains, nf, hop1, hop2, pattern_idx = _sample_chunk(task)
    n_points = len(task.rhos)
    if task.metric == "outage":
        events = np.zeros(n_points, dtype=np.int64)
        targets = np.asarray(task.targets)
        for j, rho in enumerate(task.rhos):
            rates = _rate_matrix(task, user_gains, nf, hop1, hop2, rho, pattern_idx)
            if task.mode is OutageMode.ANY_USER:
                outage = np.any(rates < targets, axis=1)
            else:
                outage = rates[:, task.user_index] < targets[task.user_index]
            events[j] = int(np.count_nonzero(outage))
        return events
    total = np.zeros(n_points)
    total_sq = np.zeros(n_points)
    for j, rho in enumerate(task.rhos):
        rates = _rate_matrix(task, user_gains, nf, hop1, hop2, rho, pattern_idx)
        sums = rates.sum(axis=1)
        total[j] = sums.sum()
        total_sq[j] = (sums * sums).sum()
    return total, total_sq


def _normalize_splits(scheme: SchemeId, n_users: int, splits) -> tuple:
    fam = scheme.family
    if fam in (SchemeFamily.OMA, SchemeFamily.TDMA):
        return ()
    if fam in (SchemeFamily.COOP_NOMA, SchemeFamily.NONCOOP_NOMA, SchemeFamily.SC_NOMA):
        if not isinstance(splits, PowerSplit):
            raise ValueError(f"{fam.value} needs a single PowerSplit")
        arity = 2 if fam is not SchemeFamily.SC_NOMA else n_users
        if len(splits) != arity:
            raise ValueError(f"{fam.value} needs a {arity}-way split, got {len(splits)}")
        return (splits,)
    # hybrid: one pair split shared across blocks, or one per block
    n_pairs = n_users // 2
    if isinstance(splits, PowerSplit):
        pair_splits = (splits,) * n_pairs
    elif splits is None:
        raise ValueError(f"{fam.value} needs a power split")
    else:
        pair_splits = tuple(splits)
        if len(pair_splits) != n_pairs:
            raise ValueError(f"expected {n_pairs} pair splits, got {len(pair_splits)}")
    for s in pair_splits:
        if not isinstance(s, PowerSplit) or len(s) != 2:
            raise ValueError("hybrid pair splits must be 2-way PowerSplits")
    return pair_splits


def _validate_run(scheme: SchemeId, geometry: NetworkGeometry, splits, strategy):
    n = geometry.num_users
    fam = scheme.family
    if fam in (SchemeFamily.COOP_NOMA, SchemeFamily.NONCOOP_NOMA, SchemeFamily.OMA) and n != 2:
        raise ValueError(f"{fam.value} serves exactly two users, geometry has {n}")
    if fam in (SchemeFamily.HYBRID_NF, SchemeFamily.HYBRID_NNFF):
        if n % 2 != 0:
            raise ValueError(f"{fam.value} needs an even user count, geometry has {n}")
        strategy = strategy or _default_strategy(scheme)
    else:
        strategy = None
    return _normalize_splits(scheme, n, splits), strategy


def _chunk_bounds(trials: int) -> list:
    return [(lo, min(lo + CHUNK_TRIALS, trials)) for lo in range(0, trials, CHUNK_TRIALS)]


def _run_monte_carlo(scheme, geometry, fading, splits, strategy, rhos, mc,
                     metric, outage_spec=None):
    splits_norm, strategy = _validate_run(scheme, geometry, splits, strategy)
    if metric == "outage":
        if len(outage_spec.target_rates) != geometry.num_users:
            raise ValueError(
                f"need one target rate per user: {geometry.num_users} users, "
                f"{len(outage_spec.target_rates)} targets"
            )
        # normalize the watched index now so chunks need no negative indexing
        idx = outage_spec.user_index
        idx = idx if idx >= 0 else geometry.num_users + idx
        if not (0 <= idx < geometry.num_users):
            raise ValueError(f"user_index {outage_spec.user_index} out of range")
    tasks = [
        _Task(
            master_seed=mc.master_seed, lo=lo, hi=hi,
            geometry=geometry, fading=fading, scheme=scheme,
            splits=splits_norm, strategy=strategy, rhos=tuple(rhos), metric=metric,
            targets=outage_spec.target_rates if metric == "outage" else None,
            mode=outage_spec.mode if metric == "outage" else None,
            user_index=idx if metric == "outage" else 0,
        )
        for lo, hi in _chunk_bounds(mc.trials)
    ]
    if mc.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=mc.workers) as pool:
            partials = list(pool.map(_run_chunk, tasks))
    else:
        partials = [_run_chunk(t) for t in tasks]

    # index-ordered reduction: identical for every worker count
    if metric == "outage":
        events = np.zeros(len(rhos), dtype=np.int64)
        for p in partials:
            events += p
        return events
    total = np.zeros(len(rhos))
    total_sq = np.zeros(len(rhos))
    for p_sum, p_sq in partials:
        total += p_sum
        total_sq += p_sq
    return total, total_sq


def estimate_outage(scheme: SchemeId, spec: OutageSpec, geometry: NetworkGeometry,
                    fading: FadingSpec, splits, strategy: PairingStrategy,
                    snr: SnrPoint, mc: MonteCarloConfig) -> OutageEstimate:
    """Fraction of trials whose watched rate falls strictly below its target,
    with a 95% normal-approximation confidence half-width."""
    events = _run_monte_carlo(scheme, geometry, fading, splits, strategy,
                              (snr.rho,), mc, "outage", spec)
    n_events = int(events[0])
    p = n_events / mc.trials
    ci = _Z_95 * math.sqrt(p * (1.0 - p) / mc.trials)
    return OutageEstimate(probability=p, ci_half_width=ci, trials=mc.trials, events=n_events)


def estimate_outage_curve(scheme: SchemeId, spec: OutageSpec, geometry: NetworkGeometry,
                          fading: FadingSpec, splits, strategy: PairingStrategy,
                          grid: SnrGrid, mc: MonteCarloConfig) -> CurveResult:
    """Outage probability over an SNR grid, reusing each trial's fading
    realization at every grid point (common random numbers)."""
    events = _run_monte_carlo(scheme, geometry, fading, splits, strategy,
                              grid.rho_values(), mc, "outage", spec)
    probs = events / mc.trials
    ci = _Z_95 * np.sqrt(probs * (1.0 - probs) / mc.trials)
    return CurveResult(
        scheme=scheme, metric="outage", snr_db=grid.points_db,
        values=tuple(float(p) for p in probs),
        ci_half_width=tuple(float(c) for c in ci),
        trials=mc.trials,
        low_event_flags=tuple(bool(e < 10) for e in events),
    )


def estimate_ergodic_sum_rate(scheme: SchemeId, geometry: NetworkGeometry,
                              fading: FadingSpec, splits, strategy: PairingStrategy,
                              grid: SnrGrid, mc: MonteCarloConfig) -> CurveResult:
    """Mean sum rate over an SNR grid with 95% confidence half-widths from the
    sample variance.  Pairing is recomputed per trial from the instantaneous
    gains."""
    total, total_sq = _run_monte_carlo(scheme, geometry, fading, splits, strategy,
                                       grid.rho_values(), mc, "sum-rate")
    n = mc.trials
    means = total / n
    if n > 1:
        variance = np.maximum(total_sq - n * means * means, 0.0) / (n - 1)
        ci = _Z_95 * np.sqrt(variance / n)
    else:
        ci = np.zeros_like(means)
    return CurveResult(
        scheme=scheme, metric="sum-rate", snr_db=grid.points_db,
        values=tuple(float(v) for v in means),
        ci_half_width=tuple(float(c) for c in ci),
        trials=n,
    )
