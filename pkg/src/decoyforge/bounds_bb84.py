"""Decoy-state estimators for BB84 with three or four intensities.

Notation: ``a_k^l`` is the k-photon coefficient of source ``l``; amended
gains ``St_l = S_l - a_0^l S_0`` and ``Tt_l = T_l - a_0^l T_0`` have the vacuum
contribution removed, leaving ``St_l = sum_{k>=1} a_k^l s_k``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConditionViolation, DegenerateBoundError
from .sources import PhotonNumberDistribution, SourceTriple, g_func

__all__ = [
    "binary_entropy",
    "amended_gain",
    "amended_t",
    "s1_lower_3",
    "s1_lower_pairwise",
    "s1_lower_4",
    "e1_upper_3",
    "t1_upper_4",
    "f_t1",
    "e1_upper_4",
    "bb84_key_rate",
    "Bb84Bounds",
    "estimate_bb84",
]

logger = logging.getLogger(__name__)

NOISE_TOL = 1e-12
ORDER_TOL = 1e-10


def binary_entropy(p):
    """Shannon entropy of a biased coin in bits; ``H(0) = H(1) = 0``."""
    p = np.asarray(p, dtype=float)
    inside = (p > 0) & (p < 1)
    q = np.where(inside, p, 0.5)
    h = np.where(inside, -q * np.log2(q) - (1 - q) * np.log2(1 - q), 0.0)
    return float(h) if h.ndim == 0 else h


def amended_gain(S_l: float, a0_l: float, S_0: float) -> float:
    """``S_l - a_0^l S_0``; small negative round-off is clamped to zero."""
    value = S_l - a0_l * S_0
    if value < 0:
        if value < -NOISE_TOL * max(abs(S_l), abs(a0_l * S_0), 1e-300):
            logger.warning("amended gain %.3e is negative beyond round-off; clamping to 0", value)
        return 0.0
    return value


amended_t = amended_gain


def _det2(lo: PhotonNumberDistribution, hi: PhotonNumberDistribution) -> float:
    return lo[1] * hi[2] - hi[1] * lo[2]


def s1_lower_3(
    x: PhotonNumberDistribution, y: PhotonNumberDistribution, St_x: float, St_y: float
) -> float:
    """Single-photon yield lower bound from one pair of non-vacuum sources.

    ``(a_2^y St_x - a_2^x St_y) / (a_1^x a_2^y - a_1^y a_2^x)``; valid when the
    ratio chain ``a_k^y/a_k^x >= a_2^y/a_2^x >= a_1^y/a_1^x`` holds.
    """
    den = _det2(x, y)
    if not den > 0:
        raise DegenerateBoundError(f"pair denominator {den:.3e} is not positive")
    return (y[2] * St_x - x[2] * St_y) / den


def s1_lower_pairwise(triple: SourceTriple, St: dict[str, float]) -> dict[tuple[str, str], float]:
    return {
        (l, r): s1_lower_3(triple[l], triple[r], St[l], St[r])
        for l, r in (("x", "y"), ("x", "z"), ("y", "z"))
    }


def _pair_scale(lo, hi, St_lo, St_hi) -> float:
    return (abs(hi[2] * St_lo) + abs(lo[2] * St_hi)) / _det2(lo, hi)


def s1_lower_4(triple: SourceTriple, St_x: float, St_y: float, St_z: float) -> float:
    """Best of the three pairwise bounds, which under the source conditions is the (x, y) one.

    All three are evaluated and the ordering (x,y) >= (x,z) >= (y,z) is
    asserted; a violation means the inputs are inconsistent with the
    conditions.

    Raises:
        ConditionViolation: ordering broken beyond round-off.
    """
    St = {"x": St_x, "y": St_y, "z": St_z}
    pairwise = s1_lower_pairwise(triple, St)
    tol = ORDER_TOL * max(
        _pair_scale(triple[l], triple[r], St[l], St[r]) for l, r in pairwise
    )
    xy, xz, yz = pairwise["x", "y"], pairwise["x", "z"], pairwise["y", "z"]
    if xy < xz - tol or xz < yz - tol:
        raise ConditionViolation(f"pairwise ordering violated: xy={xy:.6e}, xz={xz:.6e}, yz={yz:.6e}")
    return xy


def e1_upper_3(
    x: PhotonNumberDistribution, S_x: float, E_x: float, S_0: float, E_0: float, s1_lower: float
) -> float:
    """Phase-error bound charging every multi-photon error to single photons.

    Returns 1 when the yield bound is not positive (no key can be extracted).
    """
    if not s1_lower > 0:
        return 1.0
    T_0 = S_0 * E_0 if S_0 > 0 else 0.0
    return (S_x * E_x - x[0] * T_0) / (x[1] * s1_lower)


def t1_upper_4(triple: SourceTriple, Tt_x: float, Tt_y: float, Tt_z: float) -> float:
    """Upper bound on ``t_1 = s_1 e_1`` obtained by eliminating ``t_2`` and ``t_3``.

    Cramer's rule on the three amended relations; the residual coefficients
    of ``t_k`` (k >= 4) are all non-positive under the G >= 0 condition, so
    dropping them can only overestimate ``t_1``.
    """
    x, y, z = triple.x, triple.y, triple.z
    g123 = g_func(triple, 1, 2, 3)
    if not g123 > 0:
        raise DegenerateBoundError(f"G(1,2,3) = {g123:.3e} is not positive")
    num = (
        (z[3] * y[2] - y[3] * z[2]) * Tt_x
        - (z[3] * x[2] - x[3] * z[2]) * Tt_y
        + (y[3] * x[2] - x[3] * y[2]) * Tt_z
    )
    return num / (z[1] * z[2] * z[3] * g123)


def f_t1(triple: SourceTriple, k: int) -> float:
    """Coefficient of ``t_k`` in ``t_1 = t1_upper + sum_k f(k) t_k``, for k >= 4."""
    if k < 4:
        raise ValueError("residual coefficients start at k = 4")
    g123 = g_func(triple, 1, 2, 3)
    if not g123 > 0:
        raise DegenerateBoundError(f"G(1,2,3) = {g123:.3e} is not positive")
    return -triple.z[k] * g_func(triple, 2, 3, k) / (triple.z[1] * g123)


def e1_upper_4(t1_upper: float, s1_lower_4: float) -> float:
    """``t1_upper / s1_lower``; 1 when the yield bound is not positive."""
    if not s1_lower_4 > 0:
        return 1.0
    return t1_upper / s1_lower_4


def bb84_key_rate(a1_z: float, s1: float, e1: float, S_z: float, E_z: float) -> float:
    """Asymptotic key rate ``a_1^z s_1 [1 - H(e_1)] - S_z H(E_z)`` per signal pulse.

    A phase-error value above 1/2 is treated as 1/2: the bound is an upper
    bound and H is not monotone past 1/2.
    """
    privacy = 1.0 - binary_entropy(min(max(e1, 0.0), 0.5))
    return a1_z * s1 * privacy - S_z * binary_entropy(E_z)


def _clamp(v: float) -> float:
    return float(min(max(v, 0.0), 1.0))


@dataclass(frozen=True)
class Bb84Bounds:
    """Reported (clamped) bounds; raw algebra values live under ``raw``."""

    s1_lower_3: float
    s1_lower_4: float
    e1_upper_3: float
    e1_upper_4: float
    t1_upper_4: float
    pairwise: dict
    raw: dict
    method_3: str = "vacuum+x+y"
    method_4: str = "vacuum+x+y+z"


def estimate_bb84(stats, vacuum: PhotonNumberDistribution, triple: SourceTriple) -> Bb84Bounds:
    """Run every BB84 estimator on one set of observables labelled "0", "x", "y", "z"."""
    S, T = stats.S, stats.T
    St = {l: amended_gain(S[l], triple[l][0], S["0"]) for l in "xyz"}
    Tt = {l: amended_t(T[l], triple[l][0], T["0"]) for l in "xyz"}
    s3 = s1_lower_3(triple.x, triple.y, St["x"], St["y"])
    s4 = s1_lower_4(triple, St["x"], St["y"], St["z"])
    e3 = e1_upper_3(triple.x, S["x"], stats.E("x"), S["0"], stats.E("0") if S["0"] > 0 else 0.0, s3)
    t4 = t1_upper_4(triple, Tt["x"], Tt["y"], Tt["z"])
    e4 = e1_upper_4(t4, s4)
    raw = {"s1_lower_3": s3, "s1_lower_4": s4, "e1_upper_3": e3, "e1_upper_4": e4, "t1_upper_4": t4}
    return Bb84Bounds(
        s1_lower_3=_clamp(s3),
        s1_lower_4=_clamp(s4),
        e1_upper_3=_clamp(e3),
        e1_upper_4=_clamp(e4),
        t1_upper_4=_clamp(t4),
        pairwise=s1_lower_pairwise(triple, St),
        raw=raw,
    )
