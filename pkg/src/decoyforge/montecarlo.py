"""Monte-Carlo cross-checks of the analytic channel and relay models.

Each routine draws its randomness from ``numpy.random.default_rng(seed)``
in fixed-size chunks, so results depend only on ``(trials, seed, chunk)``.
The per-pulse decisions run through the compiled kernels when available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import ChannelParams

__all__ = ["McEstimate", "bb84_gain_mc", "mdi_single_yield_mc", "heralding_mc", "DEFAULT_CHUNK"]

DEFAULT_CHUNK = 1_000_000


@dataclass(frozen=True)
class McEstimate:
    """A binomial proportion ``hits / trials`` with its standard error."""

    hits: int
    trials: int

    @property
    def value(self) -> float:
        return self.hits / self.trials

    @property
    def stderr(self) -> float:
        p = self.value
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.trials)

    def z_score(self, expected: float) -> float:
        """Deviation from ``expected`` in standard errors (binomial variance at ``expected``)."""
        sigma = math.sqrt(max(expected * (1.0 - expected), 1e-300) / self.trials)
        return (self.value - expected) / sigma


def _chunks(trials: int, chunk: int):
    if trials <= 0:
        raise ValueError("trials must be positive")
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        yield n
        done += n


def bb84_gain_mc(
    channel: ChannelParams, mu: float, trials: int, seed: int, chunk: int = DEFAULT_CHUNK
) -> tuple[McEstimate, McEstimate]:
    """Simulate Poisson pulses of mean ``mu`` through the BB84 channel.

    Returns:
        ``(gain, errors)``: detections per pulse, and erroneous detections
        per detection.
    """
    rng = np.random.default_rng(seed)
    eta = channel.eta_bb84
    clicks = errors = 0
    for n in _chunks(trials, chunk):
        photons = rng.poisson(mu, n)
        arrived = rng.binomial(photons, eta).astype(np.int64)
        u_dark = rng.random(n)
        u_err = rng.random(n)
        c, e = kernels.bb84_trials(arrived, u_dark, u_err, channel.p_d, channel.e_d, channel.e_0)
        clicks += c
        errors += e
    return McEstimate(clicks, trials), McEstimate(errors, max(clicks, 1))


def mdi_single_yield_mc(
    channel: ChannelParams, trials: int, seed: int, chunk: int = DEFAULT_CHUNK
) -> tuple[McEstimate, McEstimate]:
    """Simulate one Z-basis photon from each side through the relay.

    Returns:
        ``(yield, errors)``: successful announcements per trial, and bit
        errors per success.
    """
    rng = np.random.default_rng(seed)
    succ = errors = 0
    for n in _chunks(trials, chunk):
        u = rng.random((n, 12))
        s, e = kernels.mdi_z_single_trials(u, channel.eta_side, channel.e_d, channel.p_d)
        succ += s
        errors += e
    return McEstimate(succ, trials), McEstimate(errors, max(succ, 1))


def heralding_mc(
    mu: float, eta_v: float, p_dv: float, trials: int, seed: int, k_max: int = 20, chunk: int = DEFAULT_CHUNK
) -> tuple[McEstimate, np.ndarray]:
    """Sample pair emission and herald detection for a heralded source.

    Returns:
        ``(herald, histogram)``: heralds per pump pulse, and the signal
        photon-number frequencies among heralded pulses (last bin collects
        everything above ``k_max``).
    """
    rng = np.random.default_rng(seed)
    heralds = 0
    hist = np.zeros(k_max + 1, dtype=np.int64)
    for n in _chunks(trials, chunk):
        pairs = rng.poisson(mu, n)
        seen = rng.binomial(pairs, eta_v) > 0
        fired = seen | (rng.random(n) < p_dv)
        heralds += int(np.count_nonzero(fired))
        hist += np.bincount(np.minimum(pairs[fired], k_max), minlength=k_max + 1)
    freq = hist / max(heralds, 1)
    return McEstimate(heralds, trials), freq
