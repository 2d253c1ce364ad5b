"""Achievable-rate formulas for the downlink transmission schemes.

Every operation is a pure function of a channel snapshot, a power split, and
a transmit SNR.  Rates are in bit/s/Hz, with the pre-log factor carrying the
time-sharing of each scheme: 1/2 for the two-slot cooperative protocol and
for a pair sharing one of two resource blocks, 1/N for N-user TDMA, and 1 for
single-carrier NOMA, which occupies the whole block.

Two-user roles (near / far) are positional: user 0 is the near user and user
1 the far user, matching the ascending distance order of NetworkGeometry.
Power-split coefficients are listed strongest user first, so a valid split is
strictly increasing: the weaker the user, the larger its share.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import ChannelSnapshot, af_effective_snr

_SPLIT_SUM_TOL = 1e-12


class SchemeFamily(Enum):
    COOP_NOMA = "coop-noma"
    NONCOOP_NOMA = "noncoop-noma"
    OMA = "oma"
    HYBRID_NF = "hybrid-nf"
    HYBRID_NNFF = "hybrid-nnff"
    SC_NOMA = "sc-noma"
    TDMA = "tdma"


_TWO_USER_FAMILIES = (SchemeFamily.COOP_NOMA, SchemeFamily.NONCOOP_NOMA, SchemeFamily.OMA)
_HYBRID_FAMILIES = (SchemeFamily.HYBRID_NF, SchemeFamily.HYBRID_NNFF)

_UAV_SUFFIX = "+uav"


@dataclass(frozen=True)
class SchemeId:
    """A scheme family plus whether the serving links route through the UAV relay."""

    family: SchemeFamily
    via_uav: bool = False

    @property
    def label(self) -> str:
        return self.family.value + (_UAV_SUFFIX if self.via_uav else "")

    @classmethod
    def parse(cls, label: str) -> "SchemeId":
        name = label.strip().lower()
        via_uav = name.endswith(_UAV_SUFFIX)
        if via_uav:
            name = name[: -len(_UAV_SUFFIX)]
        try:
            family = SchemeFamily(name)
        except ValueError:
            valid = ", ".join(f.value for f in SchemeFamily)
            raise ValueError(
                f"unknown scheme {label!r}; valid schemes: {valid} "
                f"(append '{_UAV_SUFFIX}' to route through the relay)"
            ) from None
        return cls(family=family, via_uav=via_uav)


@dataclass(frozen=True)
class SnrPoint:
    """Linear transmit SNR rho = P / sigma^2 with the noise normalized to 1."""

    rho: float

    def __post_init__(self):
        if not (math.isfinite(self.rho) and self.rho >= 0.0):
            raise ValueError(f"rho must be finite and >= 0, got {self.rho!r}")

    @classmethod
    def from_db(cls, db: float) -> "SnrPoint":
        return cls(10.0 ** (db / 10.0))


@dataclass(frozen=True)
class PowerSplit:
    """Power-allocation coefficients of one NOMA block, strongest user first.

    Coefficients must be strictly inside (0, 1), sum to 1, and be strictly
    increasing, so the user with the larger channel gain always receives the
    strictly smaller share.
    """

    coefficients: tuple

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        c = self.coefficients
        if len(c) < 2:
            raise ValueError("a power split needs at least two coefficients")
        if any(not (0.0 < x < 1.0) for x in c):
            raise ValueError(f"coefficients must lie strictly in (0, 1), got {c}")
        if abs(math.fsum(c) - 1.0) > _SPLIT_SUM_TOL:
            raise ValueError(f"coefficients must sum to 1, got {c} (sum {math.fsum(c)!r})")
        if any(a >= b for a, b in zip(c, c[1:])):
            raise ValueError(
                f"coefficients must be strictly increasing (strongest user gets the smallest share), got {c}"
            )

    def __len__(self) -> int:
        return len(self.coefficients)

    @property
    def strong(self) -> float:
        return self.coefficients[0]

    @property
    def weak(self) -> float:
        return self.coefficients[-1]


@dataclass(frozen=True)
class RateReport:
    """Per-user achievable rates and their sum for one scheme on one snapshot."""

    per_user_rates: tuple
    sum_rate: float
    scheme_id: SchemeId

    def __post_init__(self):
        object.__setattr__(self, "per_user_rates", tuple(float(r) for r in self.per_user_rates))
        if any(not (math.isfinite(r) and r >= 0.0) for r in self.per_user_rates):
            raise ValueError("rates must be finite and >= 0")
        if abs(self.sum_rate - math.fsum(self.per_user_rates)) > 1e-9:
            raise ValueError("sum_rate must equal the sum of per_user_rates")


def _half_log2(x: float) -> float:
    return 0.5 * math.log2(1.0 + x)


def _require_pair_split(split: PowerSplit) -> PowerSplit:
    if not isinstance(split, PowerSplit):
        raise ValueError(f"expected a PowerSplit, got {split!r}")
    if len(split) != 2:
        raise ValueError(f"this scheme multiplexes exactly two users per block, got a {len(split)}-way split")
    return split


def direct_slot_rates(gain_near: float, gain_far: float, split: PowerSplit,
                      snr: SnrPoint) -> tuple:
    """Rates at the end of the first (direct, superposition-coded) slot.

    The near user cancels the far user's signal before decoding its own; the
    far user decodes directly, seeing the near user's share as interference:

        rate_near = 1/2 * log2(1 + a_n * rho * g_n)
        rate_far  = 1/2 * log2(1 + a_f * rho * g_f / (a_n * rho * g_f + 1))
    """
    split = _require_pair_split(split)
    a_near, a_far = split.coefficients
    rho = snr.rho
    rate_near = _half_log2(a_near * rho * gain_near)
    rate_far = _half_log2(a_far * rho * gain_far / (a_near * rho * gain_far + 1.0))
    return rate_near, rate_far


def relay_slot_rate(gain_nf: float, snr: SnrPoint) -> float:
    """Far-user rate of the relaying slot: the near user retransmits the far
    user's data at full power, 1/2 * log2(1 + rho * g_nf)."""
    return _half_log2(snr.rho * gain_nf)


def coop_far_rate(gain_far: float, gain_nf: float, split: PowerSplit, snr: SnrPoint) -> float:
    """Far-user rate after selection combining of the two received copies.

    The far user keeps the better of the direct-slot SINR and the relayed-slot
    SNR: 1/2 * log2(1 + max(direct SINR, rho * g_nf)).
    """
    split = _require_pair_split(split)
    a_near, a_far = split.coefficients
    rho = snr.rho
    sinr_direct = a_far * rho * gain_far / (a_near * rho * gain_far + 1.0)
    return _half_log2(max(sinr_direct, rho * gain_nf))


def noncoop_far_rate(gain_far: float, split: PowerSplit, snr: SnrPoint) -> float:
    """Far-user rate without relaying; the whole slot is used, so no 1/2 factor."""
    split = _require_pair_split(split)
    a_near, a_far = split.coefficients
    rho = snr.rho
    return math.log2(1.0 + a_far * rho * gain_far / (a_near * rho * gain_far + 1.0))


def oma_far_rate(gain_far: float, snr: SnrPoint) -> float:
    """Far-user rate under orthogonal access: half the slot at full power."""
    return _half_log2(snr.rho * gain_far)


def pair_rates(gain_strong: float, gain_weak: float, split: PowerSplit,
               snr: SnrPoint) -> tuple:
    """Rates of one NOMA pair sharing one of two orthogonal resource blocks.

    The strong user decodes after SIC, interference-free; the weak user sees
    the strong user's share as interference.  The caller must order the pair
    strong-first (equal gains are allowed: ties break by position).
    """
    if gain_strong < gain_weak:
        raise ValueError(
            f"pair must be ordered strong-first, got gains ({gain_strong!r}, {gain_weak!r})"
        )
    split = _require_pair_split(split)
    a_strong, a_weak = split.coefficients
    rho = snr.rho
    rate_strong = _half_log2(a_strong * rho * gain_strong)
    rate_weak = _half_log2(a_weak * rho * gain_weak / (a_strong * rho * gain_weak + 1.0))
    return rate_strong, rate_weak


def effective_user_gains(snapshot: ChannelSnapshot, snr: SnrPoint, via_uav: bool) -> tuple:
    """Serving-link power gains, optionally composed through the AF relay.

    With ``via_uav`` each BS -> user link is replaced by the two-hop relay
    path: the effective SNR af(rho * hop1, rho * hop2 * g_i) is converted back
    to an equivalent gain by dividing by rho.  The near-to-far relaying link
    is a ground link and is never rerouted.  At rho = 0 every rate is zero
    regardless, so the direct gains are returned unchanged.
    """
    if not via_uav or snr.rho == 0.0:
        return snapshot.user_gains
    rho = snr.rho
    g1 = rho * snapshot.hop1_gain
    return tuple(
        af_effective_snr(g1, rho * snapshot.hop2_gain * g) / rho for g in snapshot.user_gains
    )


def _pairs_of(pairing) -> tuple:
    pairs = getattr(pairing, "pairs", pairing)
    if pairs is None:
        raise ValueError("hybrid schemes need a pairing")
    return tuple((int(a), int(b)) for a, b in pairs)


def _check_partition(pairs: tuple, num_users: int):
    flat = [i for pair in pairs for i in pair]
    if sorted(flat) != list(range(num_users)):
        raise ValueError(
            f"pairing {pairs} is not a partition of the {num_users} users"
        )


def _per_pair_splits(splits, n_pairs: int) -> list:
    if isinstance(splits, PowerSplit):
        return [_require_pair_split(splits)] * n_pairs
    if splits is None:
        raise ValueError("hybrid schemes need a power split per pair (or one shared split)")
    splits = list(splits)
    if len(splits) != n_pairs:
        raise ValueError(f"expected {n_pairs} pair splits, got {len(splits)}")
    return [_require_pair_split(s) for s in splits]


def scheme_rates(snapshot: ChannelSnapshot, scheme: SchemeId, snr: SnrPoint,
                 pairing=None, splits=None) -> RateReport:
    """Evaluate one scheme on one snapshot and return the per-user rates.

    ``splits`` is a single PowerSplit for the two-user NOMA families and for
    SC-NOMA (arity = number of users); hybrid families also accept a sequence
    with one pair split per resource block.  ``pairing`` is required for the
    hybrid families and must partition the users into strong-first pairs.
    TDMA and OMA allocate no power split.
    """
    fam = scheme.family
    gains = effective_user_gains(snapshot, snr, scheme.via_uav)
    n = len(gains)
    rho = snr.rho

    if fam in _TWO_USER_FAMILIES:
        if n != 2:
            raise ValueError(f"{fam.value} serves exactly two users, got {n}")
        gain_near, gain_far = gains
        if fam is SchemeFamily.COOP_NOMA:
            split = _require_pair_split(splits)
            rate_near, _ = direct_slot_rates(gain_near, gain_far, split, snr)
            rate_far = coop_far_rate(gain_far, snapshot.near_far_gain, split, snr)
        elif fam is SchemeFamily.NONCOOP_NOMA:
            split = _require_pair_split(splits)
            # whole slot used, so both users lose the 1/2 pre-log
            rate_near = math.log2(1.0 + split.strong * rho * gain_near)
            rate_far = noncoop_far_rate(gain_far, split, snr)
        else:
            rate_near = oma_far_rate(gain_near, snr)
            rate_far = oma_far_rate(gain_far, snr)
        rates = [rate_near, rate_far]

    elif fam is SchemeFamily.TDMA:
        rates = [math.log2(1.0 + rho * g) / n for g in gains]

    elif fam is SchemeFamily.SC_NOMA:
        if not isinstance(splits, PowerSplit):
            raise ValueError("sc-noma needs a single power split covering all users")
        if len(splits) != n:
            raise ValueError(f"sc-noma split must have {n} coefficients, got {len(splits)}")
        # Stable descending sort: rank 0 is the strongest user, ties keep index order.
        order = np.argsort(-np.asarray(gains), kind="stable")
        coeffs = splits.coefficients
        rates = [0.0] * n
        stronger_share = 0.0
        for rank, user in enumerate(order):
            g = gains[user]
            # Users with larger gains hold smaller shares, undecodable here.
            rates[user] = math.log2(1.0 + coeffs[rank] * rho * g / (stronger_share * rho * g + 1.0))
            stronger_share += coeffs[rank]

    elif fam in _HYBRID_FAMILIES:
        pairs = _pairs_of(pairing)
        _check_partition(pairs, n)
        pair_splits = _per_pair_splits(splits, len(pairs))
        rates = [0.0] * n
        for (user_s, user_w), split in zip(pairs, pair_splits):
            rate_s, rate_w = pair_rates(gains[user_s], gains[user_w], split, snr)
            rates[user_s] = rate_s
            rates[user_w] = rate_w

    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unhandled scheme family {fam!r}")

    return RateReport(per_user_rates=tuple(rates), sum_rate=math.fsum(rates), scheme_id=scheme)
