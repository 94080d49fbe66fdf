"""Decoy-state estimators for MDI-QKD with three or four intensities per side.

Alice's coefficients are ``a_j^l`` (triple ``A``), Bob's ``b_k^r`` (triple
``B``).  Amended pair gains remove every vacuum contribution by
inclusion-exclusion, leaving ``St_lr = sum_{j,k>=1} a_j^l b_k^r s_jk``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bounds_bb84 import binary_entropy
from .errors import ConditionViolation, DegenerateBoundError
from .sources import PhotonNumberDistribution, SourceTriple, g_func

__all__ = [
    "ELIMINATED",
    "in_j0",
    "amended_pair",
    "s11_lower_pair",
    "s11_lower_pairwise",
    "s11_lower_4",
    "e11_upper_3",
    "g_prime",
    "t11_upper_4",
    "f_t11",
    "e11_upper_4",
    "mdi_key_rate",
    "MdiBounds",
    "estimate_mdi",
]

# Pairs (m, n) solved for alongside t_11; everything else with m, n >= 1 is J0.
ELIMINATED = frozenset({(1, 2), (2, 1), (2, 2), (1, 3), (2, 3), (3, 3), (3, 2), (3, 1)})
ORDER_TOL = 1e-10
PAIRS = (("x", "y"), ("x", "z"), ("y", "z"))


def in_j0(m: int, n: int) -> bool:
    return m >= 1 and n >= 1 and (m, n) != (1, 1) and (m, n) not in ELIMINATED


def amended_pair(S_lr: float, a0_l: float, S_0r: float, b0_r: float, S_l0: float, S_00: float) -> float:
    """``S_lr - a_0^l S_0r - b_0^r S_l0 + a_0^l b_0^r S_00`` (same form for T)."""
    return S_lr - a0_l * S_0r - b0_r * S_l0 + a0_l * b0_r * S_00


def _det2(lo: PhotonNumberDistribution, hi: PhotonNumberDistribution) -> float:
    return lo[1] * hi[2] - hi[1] * lo[2]


def s11_lower_pair(
    a_l: PhotonNumberDistribution,
    a_r: PhotonNumberDistribution,
    b_l: PhotonNumberDistribution,
    b_r: PhotonNumberDistribution,
    St_ll: float,
    St_lr: float,
    St_rl: float,
) -> float:
    """Lower bound on ``s_11`` from sources {vacuum, l, r} on each side."""
    da = _det2(a_l, a_r)
    db = _det2(b_l, b_r)
    den = a_l[1] * b_l[1] * da * db
    if not den > 0:
        raise DegenerateBoundError(f"pair denominator {den:.3e} is not positive")
    num = (
        (a_l[1] * a_r[2] * b_l[1] * b_r[2] - a_r[1] * a_l[2] * b_r[1] * b_l[2]) * St_ll
        - b_l[1] * b_l[2] * da * St_lr
        - a_l[1] * a_l[2] * db * St_rl
    )
    return num / den


def _pair_scale(A, B, l, r, St) -> float:
    a_l, a_r, b_l, b_r = A[l], A[r], B[l], B[r]
    da, db = _det2(a_l, a_r), _det2(b_l, b_r)
    terms = (
        abs((a_l[1] * a_r[2] * b_l[1] * b_r[2] - a_r[1] * a_l[2] * b_r[1] * b_l[2]) * St[l, l])
        + abs(b_l[1] * b_l[2] * da * St[l, r])
        + abs(a_l[1] * a_l[2] * db * St[r, l])
    )
    return terms / (a_l[1] * b_l[1] * da * db)


def s11_lower_pairwise(A: SourceTriple, B: SourceTriple, St) -> dict[tuple[str, str], float]:
    """The three pairwise bounds keyed by source pair; ``St`` maps ``(l, r)`` to amended gains."""
    return {
        (l, r): s11_lower_pair(A[l], A[r], B[l], B[r], St[l, l], St[l, r], St[r, l])
        for l, r in PAIRS
    }


def s11_lower_4(A: SourceTriple, B: SourceTriple, St) -> float:
    """Maximum of the pairwise bounds, attained at (x, y) under the source conditions.

    Raises:
        ConditionViolation: if (x, y) is not the maximum beyond round-off.
    """
    pw = s11_lower_pairwise(A, B, St)
    tol = ORDER_TOL * max(_pair_scale(A, B, l, r, St) for l, r in PAIRS)
    xy, xz, yz = pw["x", "y"], pw["x", "z"], pw["y", "z"]
    if xy < xz - tol or xz < yz - tol:
        raise ConditionViolation(f"pairwise ordering violated: xy={xy:.6e}, xz={xz:.6e}, yz={yz:.6e}")
    return xy


def e11_upper_3(
    a_x: PhotonNumberDistribution,
    b_x: PhotonNumberDistribution,
    S_xx: float,
    E_xx: float,
    S_0x: float,
    E_0x: float,
    S_x0: float,
    E_x0: float,
    S_00: float,
    E_00: float,
    s11_lower: float,
) -> float:
    """All multi-photon errors of the (x, x) pair charged to single-photon pairs; 1 if ``s11_lower <= 0``."""
    if not s11_lower > 0:
        return 1.0
    num = amended_pair(S_xx * E_xx, a_x[0], S_0x * E_0x, b_x[0], S_x0 * E_x0, S_00 * E_00)
    return num / (a_x[1] * b_x[1] * s11_lower)


def g_prime(triple: SourceTriple, m: int) -> float:
    """``G(m,2,3)`` for m = 1, 2 and ``G(2,3,m)`` for m >= 3 (zero at m = 2 and m = 3)."""
    if m < 1:
        raise ValueError("index starts at 1")
    return g_func(triple, m, 2, 3) if m <= 2 else g_func(triple, 2, 3, m)


def _g123(triple: SourceTriple) -> float:
    g = g_func(triple, 1, 2, 3)
    if not g > 0:
        raise DegenerateBoundError(f"{triple.side} G(1,2,3) = {g:.3e} is not positive")
    return g


def t11_upper_4(A: SourceTriple, B: SourceTriple, Tt) -> float:
    """Upper bound on ``t_11`` eliminating the eight pairs in ``ELIMINATED``.

    Bob's side is reduced first through ``Tb[l]`` (the h-ratio combination of
    ``Tt[l, x], Tt[l, y], Tt[l, z]``), then Alice's 3x3 system is solved for
    the single-photon component.  Every dropped residual coefficient is
    non-positive, so the result never underestimates ``t_11``.
    """
    gA, gB = _g123(A), _g123(B)
    hz = [B.z[n] for n in range(4)]
    h = {l: [B[l][n] / hz[n] if n else 0.0 for n in range(4)] for l in "xy"}
    Tb = {
        l: (h["y"][2] - h["y"][3]) * Tt[l, "x"]
        - (h["x"][2] - h["x"][3]) * Tt[l, "y"]
        + (h["y"][3] * h["x"][2] - h["x"][3] * h["y"][2]) * Tt[l, "z"]
        for l in "xyz"
    }
    ax, ay, az = A.x, A.y, A.z
    num = (
        (ay[2] * az[3] - az[2] * ay[3]) * Tb["x"]
        - (ax[2] * az[3] - az[2] * ax[3]) * Tb["y"]
        + (ax[2] * ay[3] - ay[2] * ax[3]) * Tb["z"]
    )
    return num / (az[1] * az[2] * az[3] * gA * hz[1] * gB)


def f_t11(m: int, n: int, A: SourceTriple, B: SourceTriple) -> float:
    """Residual coefficient of ``t_mn`` in ``t_11 = t11_upper + sum_{J0} f(m,n) t_mn``."""
    if not in_j0(m, n):
        raise ValueError(f"({m}, {n}) is not in J0")
    return -(A.z[m] * g_prime(A, m) * B.z[n] * g_prime(B, n)) / (A.z[1] * _g123(A) * B.z[1] * _g123(B))


def e11_upper_4(t11_upper: float, s11_lower_4: float) -> float:
    """``t11_upper / s11_lower``; 1 when the yield bound is not positive."""
    if not s11_lower_4 > 0:
        return 1.0
    return t11_upper / s11_lower_4


def mdi_key_rate(
    a1_z: float, b1_z: float, s11_Z: float, e11_X: float, S_zz_Z: float, E_zz_Z: float, f_ec: float
) -> float:
    """``a_1^z b_1^z s_11^Z [1 - H(e_11^X)] - S_zz^Z f H(E_zz^Z)``; phase errors above 1/2 count as 1/2."""
    privacy = 1.0 - binary_entropy(min(max(e11_X, 0.0), 0.5))
    return a1_z * b1_z * s11_Z * privacy - S_zz_Z * f_ec * binary_entropy(E_zz_Z)


def _clamp(v: float) -> float:
    return float(min(max(v, 0.0), 1.0))


@dataclass(frozen=True)
class MdiBounds:
    s11_lower_pairwise: dict
    s11_lower_4: float
    e11_upper_3: float
    t11_upper_4: float
    e11_upper_4: float
    raw: dict


def amended_table(table, A: SourceTriple, B: SourceTriple) -> dict[tuple[str, str], float]:
    """Amend every (l, r) entry of a gain (or T) table keyed with "0" for vacuum."""
    return {
        (l, r): amended_pair(table[l, r], A[l][0], table["0", r], B[r][0], table[l, "0"], table["0", "0"])
        for l in "xyz"
        for r in "xyz"
    }


def estimate_mdi(stats, A: SourceTriple, B: SourceTriple, yield_basis: str = "Z", error_basis: str = "X") -> MdiBounds:
    """Run every MDI estimator: ``s_11`` from ``yield_basis``, ``e_11`` from ``error_basis`` data.

    The error bounds divide by the yield bound computed from the error basis's
    own gains, so ``e11_upper_*`` bound ``e_11`` of that basis.
    """
    St = amended_table(stats.S[yield_basis], A, B)
    s4 = s11_lower_4(A, B, St)
    Se = stats.S[error_basis]
    Te = stats.T[error_basis]
    St_e = amended_table(Se, A, B)
    Tt_e = amended_table(Te, A, B)
    s_e = s11_lower_pair(A.x, A.y, B.x, B.y, St_e["x", "x"], St_e["x", "y"], St_e["y", "x"])
    if not s_e > 0:
        e3 = 1.0
    else:
        e3 = Tt_e["x", "x"] / (A.x[1] * B.x[1] * s_e)
    t4 = t11_upper_4(A, B, Tt_e)
    e4 = e11_upper_4(t4, s_e)
    raw = {"s11_lower_4": s4, "s11_lower_error_basis": s_e, "e11_upper_3": e3, "t11_upper_4": t4, "e11_upper_4": e4}
    return MdiBounds(
        s11_lower_pairwise=s11_lower_pairwise(A, B, St),
        s11_lower_4=_clamp(s4),
        e11_upper_3=_clamp(e3),
        t11_upper_4=_clamp(t4),
        e11_upper_4=_clamp(e4),
        raw=raw,
    )
