"""Fock-space model of the untrusted relay's Bell-state analyzer.

Alice's pulse enters port ``a`` and Bob's port ``b`` of a balanced beam
splitter (``a -> (c + d)/sqrt2``, ``b -> (c - d)/sqrt2``).  Each output port
feeds a polarizing beam splitter with two unit-efficiency threshold
detectors, so four detectors in all: c/H, c/V, d/H, d/V.  A coincidence of
exactly {c/H, d/V} or {c/V, d/H} announces psi-minus, and exactly {c/H, c/V}
or {d/H, d/V} announces psi-plus; anything else is a failed measurement.

Encoding: Z-basis bits map to H/V, X-basis bits to D/A.  Misalignment flips a
whole pulse to the orthogonal polarization of its basis with probability
``e_d``.  Z-basis successes signal anti-correlated bits; in the X basis
psi-plus signals equal bits and psi-minus opposite bits.

Everything here concerns photons that actually reached the relay; channel
loss is applied afterwards in ``decoyforge.channel`` by binomial mixing,
which commutes with the pulse-level polarization flips.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.typing import NDArray

from . import kernels

__all__ = ["BASES", "polarization", "input_modes", "lit_distribution", "arrival_response", "dark_count_matrix"]

BASES = ("Z", "X")
_S = 1.0 / np.sqrt(2.0)
_POLS = {
    "Z": (np.array([1.0, 0.0]), np.array([0.0, 1.0])),
    "X": (np.array([_S, _S]), np.array([_S, -_S])),
}
PSI_PLUS = (3, 12)
PSI_MINUS = (9, 6)


def polarization(basis: str, bit: int) -> NDArray:
    return _POLS[basis][bit]


def input_modes(pol_a: NDArray, pol_b: NDArray) -> tuple[NDArray, NDArray]:
    """Output-mode expansions of Alice's and Bob's creation operators."""
    ca = _S * np.array([pol_a[0], pol_a[1], pol_a[0], pol_a[1]], dtype=complex)
    cb = _S * np.array([pol_b[0], pol_b[1], -pol_b[0], -pol_b[1]], dtype=complex)
    return ca, cb


@lru_cache(maxsize=None)
def lit_distribution(basis: str, pol_a: int, pol_b: int, cutoff: int) -> NDArray:
    """Lit-mask probabilities for every arriving pair ``(j, k)``, shape ``(cutoff+1, cutoff+1, 16)``."""
    ca, cb = input_modes(polarization(basis, pol_a), polarization(basis, pol_b))
    out = np.empty((cutoff + 1, cutoff + 1, 16))
    for j in range(cutoff + 1):
        for k in range(cutoff + 1):
            out[j, k] = kernels.fock_lit_distribution(j, k, ca, cb)
    out.setflags(write=False)
    return out


def dark_count_matrix(p_d: float) -> NDArray:
    """``M[lit, clicked]``: probability that dark counts turn a lit mask into a click mask."""
    masks = np.arange(16)
    popcount = np.array([bin(m).count("1") for m in masks])
    lit = masks[:, None]
    clicked = masks[None, :]
    subset = (lit & clicked) == lit
    extra = popcount[clicked] - popcount[lit]
    silent = 4 - popcount[clicked]
    extra = np.where(subset, extra, 0)
    return np.where(subset, p_d**extra * (1.0 - p_d) ** silent, 0.0)


def arrival_response(basis: str, p_d: float, e_d: float, cutoff: int = 6) -> tuple[NDArray, NDArray]:
    """Success and success-with-error probabilities given ``(j, k)`` arriving photons.

    Averages uniformly over the four bit combinations and over independent
    pulse flips on each side.

    Returns:
        ``(success, error)`` arrays of shape ``(cutoff+1, cutoff+1)``.
    """
    if basis not in BASES:
        raise ValueError(f"basis must be one of {BASES}, got {basis!r}")
    clicks = dark_count_matrix(p_d)
    plus = clicks[:, list(PSI_PLUS)].sum(axis=1)
    minus = clicks[:, list(PSI_MINUS)].sum(axis=1)
    success = np.zeros((cutoff + 1, cutoff + 1))
    error = np.zeros_like(success)
    flip_w = {0: 1.0 - e_d, 1: e_d}
    for bit_a in (0, 1):
        for bit_b in (0, 1):
            for flip_a in (0, 1):
                for flip_b in (0, 1):
                    w = 0.25 * flip_w[flip_a] * flip_w[flip_b]
                    if w == 0.0:
                        continue
                    lit = lit_distribution(basis, bit_a ^ flip_a, bit_b ^ flip_b, cutoff)
                    p_plus = lit @ plus
                    p_minus = lit @ minus
                    success += w * (p_plus + p_minus)
                    if basis == "Z":
                        if bit_a == bit_b:
                            error += w * (p_plus + p_minus)
                    elif bit_a == bit_b:
                        error += w * p_minus
                    else:
                        error += w * p_plus
    return success, error
