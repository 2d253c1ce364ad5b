"""Scalar link-level channel model.

Every link (base station to user, user to user, and the two relay hops) is a
single complex coefficient.  This module provides:

* the deterministic line-of-sight coefficient  (lambda / 4*pi*d) * exp(j*2*pi*d/lambda),
* random power gains |h|^2 with distance-based mean path loss d^(-eta) under
  deterministic, Rayleigh, or Rician fading,
* the end-to-end effective SNR of a variable-gain amplify-and-forward relay,
  g1*g2 / (g1 + g2 + 1).

All randomness flows through an explicit numpy Generator, so everything here
is pure and safe to call from parallel workers holding their own streams.
"""

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

_FOUR_PI = 4.0 * math.pi


class FadingKind(Enum):
    """Small-scale fading model for the power gain of one link."""

    DETERMINISTIC = "deterministic"
    RAYLEIGH = "rayleigh"
    RICIAN = "rician"


@dataclass(frozen=True)
class FadingSpec:
    """Fading model plus its parameters.

    ``rician_k`` is the ratio of LoS power to scattered power and is only
    meaningful for ``FadingKind.RICIAN``; ``RICIAN`` with k = 0 coincides with
    Rayleigh.
    """

    kind: FadingKind
    rician_k: float = 0.0

    def __post_init__(self):
        if not isinstance(self.kind, FadingKind):
            raise ValueError(f"fading kind must be a FadingKind, got {self.kind!r}")
        k = self.rician_k
        if not (math.isfinite(k) and k >= 0.0):
            raise ValueError(f"rician_k must be finite and >= 0, got {k!r}")


@dataclass(frozen=True)
class NetworkGeometry:
    """Node placement driving the mean path gains.

    ``user_distances`` are measured from the serving transmitter (the UAV or
    the base station, depending on the scenario) and must be sorted ascending:
    index 0 is the nearest user.  ``uav_hop_distances`` is the pair
    (BS -> UAV, UAV -> ground baseline); the baseline is usually 1.0 so the
    relay's second hop only contributes fading on top of the per-user path
    loss already carried by ``user_distances``.
    """

    user_distances: tuple
    inter_user_distance: float
    uav_hop_distances: tuple = (1.0, 1.0)
    wavelength: float = 0.125
    path_loss_exponent: float = 2.7

    def __post_init__(self):
        object.__setattr__(self, "user_distances", tuple(float(d) for d in self.user_distances))
        object.__setattr__(self, "uav_hop_distances", tuple(float(d) for d in self.uav_hop_distances))
        if len(self.user_distances) < 1:
            raise ValueError("user_distances must contain at least one user")
        if any(not (math.isfinite(d) and d > 0.0) for d in self.user_distances):
            raise ValueError("user_distances must all be finite and > 0")
        if any(a > b for a, b in zip(self.user_distances, self.user_distances[1:])):
            raise ValueError("user_distances must be sorted ascending (index 0 = nearest)")
        if not (math.isfinite(self.inter_user_distance) and self.inter_user_distance > 0.0):
            raise ValueError("inter_user_distance must be finite and > 0")
        if len(self.uav_hop_distances) != 2:
            raise ValueError("uav_hop_distances must be the pair (BS->UAV, UAV->ground)")
        if any(not (math.isfinite(d) and d > 0.0) for d in self.uav_hop_distances):
            raise ValueError("uav_hop_distances must all be finite and > 0")
        if not (math.isfinite(self.wavelength) and self.wavelength > 0.0):
            raise ValueError("wavelength must be finite and > 0")
        if not (math.isfinite(self.path_loss_exponent) and self.path_loss_exponent >= 1.0):
            raise ValueError("path_loss_exponent must be finite and >= 1")

    @property
    def num_users(self) -> int:
        return len(self.user_distances)


@dataclass(frozen=True)
class ChannelSnapshot:
    """One fading realization of every link in the network.

    All fields are power gains |h|^2 (dimensionless, >= 0):
    ``user_gains[i]`` for the serving-transmitter -> user i link,
    ``near_far_gain`` for the near-user -> far-user relaying link, and
    ``hop1_gain`` / ``hop2_gain`` for BS -> UAV and UAV -> ground.
    """

    user_gains: tuple
    near_far_gain: float
    hop1_gain: float
    hop2_gain: float

    def __post_init__(self):
        object.__setattr__(self, "user_gains", tuple(float(g) for g in self.user_gains))
        gains = self.user_gains + (self.near_far_gain, self.hop1_gain, self.hop2_gain)
        if any(not (math.isfinite(g) and g >= 0.0) for g in gains):
            raise ValueError("all channel power gains must be finite and >= 0")

    @property
    def num_users(self) -> int:
        return len(self.user_gains)


def los_coefficient(distance: float, wavelength: float) -> complex:
    """Deterministic line-of-sight channel coefficient of one scalar link.

    Magnitude wavelength/(4*pi*distance), phase 2*pi*distance/wavelength.
    """
    if not (distance > 0.0):
        raise ValueError(f"distance must be > 0, got {distance!r}")
    if not (wavelength > 0.0):
        raise ValueError(f"wavelength must be > 0, got {wavelength!r}")
    magnitude = wavelength / (_FOUR_PI * distance)
    phase = 2.0 * math.pi * (distance / wavelength)
    return magnitude * cmath.exp(1j * phase)


def draw_unit_gains(fading: FadingSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` unit-mean power gains in a single batched stream call.

    Deterministic returns ones and consumes nothing from the stream.  Rayleigh
    draws ``count`` standard exponentials.  Rician draws ``2 * count`` standard
    normals and forms (s + sigma*x)^2 + (sigma*y)^2 with s^2 = k/(k+1) and
    sigma^2 = 1/(2*(k+1)), which has unit mean for every k >= 0.
    """
    if fading.kind is FadingKind.DETERMINISTIC:
        return np.ones(count)
    if fading.kind is FadingKind.RAYLEIGH:
        return rng.standard_exponential(count)
    k = fading.rician_k
    s = math.sqrt(k / (k + 1.0))
    sigma = math.sqrt(1.0 / (2.0 * (k + 1.0)))
    z = rng.standard_normal(2 * count).reshape(count, 2)
    return (s + sigma * z[:, 0]) ** 2 + (sigma * z[:, 1]) ** 2


def sample_gain(distance: float, exponent: float, fading: FadingSpec,
                rng: np.random.Generator | None = None) -> float:
    """Random power gain of one link with mean path loss distance^(-exponent).

    ``rng`` may be omitted only for deterministic fading, which returns the
    mean exactly and never touches the stream.
    """
    if not (distance > 0.0):
        raise ValueError(f"distance must be > 0, got {distance!r}")
    mean = distance ** (-exponent)
    if fading.kind is FadingKind.DETERMINISTIC:
        return mean
    if rng is None:
        raise ValueError(f"{fading.kind.value} fading needs a random stream")
    return mean * float(draw_unit_gains(fading, 1, rng)[0])


def mean_power_gains(geometry: NetworkGeometry) -> np.ndarray:
    """Mean power gains of every link, ordered [users..., near-far, hop1, hop2]."""
    eta = geometry.path_loss_exponent
    distances = geometry.user_distances + (geometry.inter_user_distance,) + geometry.uav_hop_distances
    return np.asarray(distances, dtype=float) ** (-eta)


def sample_snapshot(geometry: NetworkGeometry, fading: FadingSpec,
                    rng: np.random.Generator) -> ChannelSnapshot:
    """One fading realization of the whole network.

    Consumes exactly one batched draw of ``num_users + 3`` unit gains from the
    stream, in the fixed link order of :func:`mean_power_gains`.
    """
    means = mean_power_gains(geometry)
    gains = means * draw_unit_gains(fading, means.size, rng)
    n = geometry.num_users
    return ChannelSnapshot(
        user_gains=tuple(gains[:n]),
        near_far_gain=float(gains[n]),
        hop1_gain=float(gains[n + 1]),
        hop2_gain=float(gains[n + 2]),
    )


def af_effective_snr(snr_hop1, snr_hop2):
    """End-to-end SNR of a variable-gain amplify-and-forward relay.

    g1*g2 / (g1 + g2 + 1): symmetric, monotone in each hop, and never above
    min(g1, g2).  Accepts scalars or numpy arrays (broadcasting).
    """
    g1 = np.asarray(snr_hop1, dtype=float)
    g2 = np.asarray(snr_hop2, dtype=float)
    if np.any(~np.isfinite(g1)) or np.any(~np.isfinite(g2)):
        raise ValueError("hop SNRs must be finite")
    if np.any(g1 < 0.0) or np.any(g2 < 0.0):
        raise ValueError("hop SNRs must be >= 0")
    out = g1 * g2 / (g1 + g2 + 1.0)
    if out.ndim == 0:
        return float(out)
    return out
