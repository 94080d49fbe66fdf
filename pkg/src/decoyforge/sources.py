"""Photon-number distributions of practical sources and their structural conditions.

Every decoy-state bound in this package rests on a handful of inequalities
between the Fock-basis coefficients of the sources.  This module builds the
coefficient vectors (weak coherent / Poisson, thermal, heralded single-photon)
and verifies those inequalities numerically.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray
from scipy import stats

from .errors import DegenerateBoundError, InvalidSourceError

__all__ = [
    "SourceKind",
    "PhotonNumberDistribution",
    "SourceTriple",
    "make_poisson",
    "make_thermal",
    "make_hsps",
    "make_vacuum",
    "g_func",
    "g_tensor",
    "check_pair_condition",
    "check_triple_condition",
    "PairConditionReport",
    "TripleConditionReport",
    "DEFAULT_K_MAX",
]

DEFAULT_K_MAX = 20
SIGN_TOL = 1e-12


class SourceKind(str, enum.Enum):
    POISSON = "poisson"
    THERMAL = "thermal"
    HSPS = "hsps"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class PhotonNumberDistribution:
    """Diagonal Fock-basis state ``sum_k coeffs[k] |k><k|`` truncated at ``k_max``.

    Attributes:
        coeffs: probability of emitting ``k`` photons, ``k = 0..k_max``.
        intensity: mean photon number of the untruncated law.
        kind: source family the coefficients came from.
        tail: probability mass beyond ``k_max`` that the truncation dropped.
        herald_probability: fraction of time slots in which the state is
            actually emitted (1 except for heralded sources).
    """

    coeffs: NDArray[np.float64]
    intensity: float
    kind: SourceKind = SourceKind.CUSTOM
    tail: float = field(default=0.0)
    herald_probability: float = 1.0

    def __post_init__(self) -> None:
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 1 or c.size < 1:
            raise InvalidSourceError("coeffs must be a non-empty 1-D array")
        if np.any(~np.isfinite(c)) or np.any(c < 0):
            raise InvalidSourceError("coefficients must be finite and non-negative")
        if c.sum() > 1 + 1e-12:
            raise InvalidSourceError(f"coefficients sum to {c.sum():.15g} > 1")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def k_max(self) -> int:
        return self.coeffs.size - 1

    def __getitem__(self, k: int) -> float:
        if k < 0:
            raise IndexError(k)
        return float(self.coeffs[k]) if k <= self.k_max else 0.0

    def __repr__(self) -> str:
        return (
            f"PhotonNumberDistribution(kind={self.kind.value}, "
            f"intensity={self.intensity:g}, k_max={self.k_max})"
        )

    @classmethod
    def from_coeffs(cls, coeffs, intensity: float | None = None) -> PhotonNumberDistribution:
        """Wrap an arbitrary coefficient vector (mean photon number computed if omitted)."""
        c = np.asarray(coeffs, dtype=float)
        if intensity is None:
            intensity = float(np.dot(np.arange(c.size), c))
        return cls(c, float(intensity), SourceKind.CUSTOM, 0.0)


def _check_kmax(k_max: int) -> None:
    if int(k_max) != k_max or k_max < 3:
        raise InvalidSourceError(f"k_max must be an integer >= 3, got {k_max!r}")


def make_poisson(mu: float, k_max: int = DEFAULT_K_MAX) -> PhotonNumberDistribution:
    """Phase-randomized weak coherent state, ``a_k = e^{-mu} mu^k / k!``."""
    if not mu > 0:
        raise InvalidSourceError(f"intensity must be positive, got {mu!r}")
    _check_kmax(k_max)
    k = np.arange(k_max + 1)
    coeffs = stats.poisson.pmf(k, mu)
    return PhotonNumberDistribution(coeffs, float(mu), SourceKind.POISSON, float(stats.poisson.sf(k_max, mu)))


def make_vacuum(k_max: int = DEFAULT_K_MAX) -> PhotonNumberDistribution:
    coeffs = np.zeros(k_max + 1)
    coeffs[0] = 1.0
    return PhotonNumberDistribution(coeffs, 0.0, SourceKind.POISSON, 0.0)


def make_thermal(mu: float, k_max: int = DEFAULT_K_MAX) -> PhotonNumberDistribution:
    """Thermal (geometric) photon statistics, ``a_k = mu^k / (mu+1)^(k+1)``."""
    if not mu > 0:
        raise InvalidSourceError(f"intensity must be positive, got {mu!r}")
    _check_kmax(k_max)
    k = np.arange(k_max + 1)
    ratio = mu / (mu + 1.0)
    coeffs = ratio**k / (mu + 1.0)
    return PhotonNumberDistribution(coeffs, float(mu), SourceKind.THERMAL, float(ratio ** (k_max + 1)))


def make_hsps(
    mu: float, eta_v: float, p_dv: float, k_max: int = DEFAULT_K_MAX
) -> PhotonNumberDistribution:
    """Heralded single-photon source pumped with Poisson pair statistics.

    The idler arm is watched by a threshold detector of efficiency ``eta_v``
    and dark-count probability ``p_dv``.  Conditioned on a herald the signal
    arm carries ``k`` photons with probability

        Poisson(mu)[k] * (1 - (1 - p_dv) (1 - eta_v)^k) / P_herald,

    where ``P_herald = 1 - (1 - p_dv) exp(-mu eta_v)`` sums the untruncated law.
    """
    if not mu > 0:
        raise InvalidSourceError(f"intensity must be positive, got {mu!r}")
    if not 0 < eta_v <= 1:
        raise InvalidSourceError(f"eta_v must lie in (0, 1], got {eta_v!r}")
    if not 0 <= p_dv < 1:
        raise InvalidSourceError(f"p_dv must lie in [0, 1), got {p_dv!r}")
    _check_kmax(k_max)
    k = np.arange(k_max + 1)
    if eta_v < 1:
        click = -np.expm1(np.log1p(-p_dv) + k * np.log1p(-eta_v))
    else:
        click = np.where(k == 0, p_dv, 1.0)
    herald = -np.expm1(np.log1p(-p_dv) - mu * eta_v)
    coeffs = stats.poisson.pmf(k, mu) * click / herald
    coeffs = np.clip(coeffs, 0.0, None)
    tail = max(0.0, 1.0 - float(coeffs.sum()))
    return PhotonNumberDistribution(coeffs, float(mu), SourceKind.HSPS, tail, float(herald))


@dataclass(frozen=True)
class SourceTriple:
    """Three non-vacuum sources of one party, ordered by intensity.

    The vacuum source is implicit.  ``side`` is informational ("alice" uses
    the a_k coefficients, "bob" the b_k ones).  ``strict=False`` skips the
    ordering check so degenerate or adversarial triples can be probed.
    """

    x: PhotonNumberDistribution
    y: PhotonNumberDistribution
    z: PhotonNumberDistribution
    side: str = "alice"
    strict: bool = field(default=True, compare=False)

    def __post_init__(self) -> None:
        if self.strict and not self.x.intensity < self.y.intensity < self.z.intensity:
            raise InvalidSourceError(
                "intensities must be strictly increasing: "
                f"{self.x.intensity!r}, {self.y.intensity!r}, {self.z.intensity!r}"
            )
        if self.side not in ("alice", "bob"):
            raise InvalidSourceError(f"side must be 'alice' or 'bob', got {self.side!r}")

    def __getitem__(self, label: str) -> PhotonNumberDistribution:
        return {"x": self.x, "y": self.y, "z": self.z}[label]

    @property
    def k_max(self) -> int:
        return min(self.x.k_max, self.y.k_max, self.z.k_max)


def _ratios(triple: SourceTriple, indices: NDArray[np.int_]) -> tuple[NDArray, NDArray]:
    az = np.array([triple.z[int(m)] for m in indices])
    if np.any(az <= 0):
        bad = int(indices[np.argmax(az <= 0)])
        raise DegenerateBoundError(f"signal-source coefficient a_{bad}^z is zero")
    gx = np.array([triple.x[int(m)] for m in indices]) / az
    gy = np.array([triple.y[int(m)] for m in indices]) / az
    return gx, gy


def g_func(triple: SourceTriple, i: int, j: int, k: int) -> float:
    """Determinant-like combination of coefficient ratios ``g_m = a_m / a_m^z``.

    Returns ``(g_i^x - g_j^x)(g_j^y - g_k^y) - (g_i^y - g_j^y)(g_j^x - g_k^x)``.
    Applied to Bob's triple this is the H function.
    """
    if min(i, j, k) < 1:
        raise ValueError("indices start at 1")
    gx, gy = _ratios(triple, np.array([i, j, k]))
    return float((gx[0] - gx[1]) * (gy[1] - gy[2]) - (gy[0] - gy[1]) * (gx[1] - gx[2]))


def g_tensor(triple: SourceTriple, index_max: int) -> tuple[NDArray, NDArray]:
    """All ``G(i, j, k)`` for ``1 <= i, j, k <= index_max`` at once.

    Returns:
        ``(values, scale)``: both indexed ``[i-1, j-1, k-1]``; ``scale`` is the
        larger magnitude of the two products, used for cancellation-aware
        sign checks.
    """
    idx = np.arange(1, index_max + 1)
    gx, gy = _ratios(triple, idx)
    dx = gx[:, None] - gx[None, :]
    dy = gy[:, None] - gy[None, :]
    first = dx[:, :, None] * dy[None, :, :]
    second = dy[:, :, None] * dx[None, :, :]
    return first - second, np.maximum(np.abs(first), np.abs(second))


class PairConditionReport(NamedTuple):
    holds: bool
    first_violation: int | None


class TripleConditionReport(NamedTuple):
    holds: bool
    witnesses: list[tuple[int, int, int]]


def check_pair_condition(
    lo: PhotonNumberDistribution, hi: PhotonNumberDistribution, k_max: int | None = None
) -> PairConditionReport:
    """Check ``a_k^hi/a_k^lo >= a_2^hi/a_2^lo >= a_1^hi/a_1^lo`` for ``2 <= k <= k_max``.

    ``first_violation`` is 2 when the right-hand inequality fails, otherwise the
    smallest ``k`` breaking the left-hand one.
    """
    if k_max is None:
        k_max = min(lo.k_max, hi.k_max)
    if k_max < 2 or k_max > min(lo.k_max, hi.k_max):
        raise ValueError(f"k_max={k_max} outside the shared coefficient range")
    lo_c = lo.coeffs[1 : k_max + 1]
    hi_c = hi.coeffs[1 : k_max + 1]
    if np.any(lo_c <= 0):
        raise DegenerateBoundError("lower source has a zero coefficient where a ratio is required")
    ratio = hi_c / lo_c
    r1, r2 = ratio[0], ratio[1]
    if r2 < r1 * (1 - SIGN_TOL):
        return PairConditionReport(False, 2)
    bad = np.nonzero(ratio[1:] < r2 * (1 - SIGN_TOL))[0]
    if bad.size:
        return PairConditionReport(False, int(bad[0]) + 2)
    return PairConditionReport(True, None)


def check_triple_condition(triple: SourceTriple, index_max: int = DEFAULT_K_MAX) -> TripleConditionReport:
    """Check ``G(i,j,k) >= 0`` whenever ``k - j >= j - i >= 0``, for indices up to ``index_max``."""
    if index_max < 3:
        raise ValueError("index_max must be >= 3")
    values, scale = g_tensor(triple, index_max)
    i, j, k = np.meshgrid(*(np.arange(1, index_max + 1),) * 3, indexing="ij")
    region = (k - j >= j - i) & (j >= i)
    negative = region & (values < -SIGN_TOL * scale)
    witnesses = [tuple(int(v) + 1 for v in w) for w in np.argwhere(negative)]
    return TripleConditionReport(not witnesses, witnesses)
