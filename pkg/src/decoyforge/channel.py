"""Forward channel/detector models producing ground truth and observed statistics.

The estimators never see this module's internals: they only consume the
observed gains and error rates assembled here, so the yield models can be
swapped without touching any bound.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np
from numpy.typing import NDArray
from scipy import stats

from . import relay
from .sources import PhotonNumberDistribution

__all__ = [
    "ChannelParams",
    "Bb84Truth",
    "MdiTruth",
    "Bb84Stats",
    "MdiStats",
    "n_photon_transmittance",
    "binomial_loss",
    "bb84_truth",
    "mdi_truth",
    "assemble_observables",
    "MDI_CUTOFF",
    "TABLE_I",
    "TABLE_II",
]

MDI_CUTOFF = 6


@dataclass(frozen=True)
class ChannelParams:
    """Loss and detector parameters of one scenario point.

    ``total_loss_db`` is the Alice-to-Bob attenuation; for MDI the relay sits
    at the midpoint so each side sees half of it.  ``zeta`` is the receiver
    detection efficiency (folded into the path transmittance).  ``eta_v`` and
    ``p_dv`` describe the heralding detector of an HSPS and are only passed
    through to the source constructors.
    """

    total_loss_db: float = 0.0
    zeta: float = 1.0
    p_d: float = 3.0e-6
    e_d: float = 0.015
    e_0: float = 0.5
    f_ec: float = 1.16
    eta_v: float = 0.75
    p_dv: float = 1.0e-6

    def __post_init__(self) -> None:
        if not np.isfinite(self.total_loss_db) or self.total_loss_db < 0:
            raise ValueError(f"total_loss_db must be a finite non-negative number, got {self.total_loss_db!r}")
        if not 0 < self.zeta <= 1:
            raise ValueError(f"zeta must lie in (0, 1], got {self.zeta!r}")
        for name in ("p_d", "e_d", "e_0", "eta_v", "p_dv"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
        if self.f_ec < 1:
            raise ValueError(f"f_ec must be >= 1, got {self.f_ec!r}")

    @property
    def transmittance(self) -> float:
        """Single-photon Alice-to-Bob channel transmittance."""
        return 10.0 ** (-self.total_loss_db / 10.0)

    @property
    def eta_bb84(self) -> float:
        return self.transmittance * self.zeta

    @property
    def eta_side(self) -> float:
        """Per-side survival probability (source to a relay detector) for MDI."""
        return 10.0 ** (-self.total_loss_db / 20.0) * self.zeta

    def at_loss(self, loss_db: float) -> ChannelParams:
        return replace(self, total_loss_db=float(loss_db))


# Table I (BB84) and Table II (MDI).  BB84 has no error-correction factor.
TABLE_I = ChannelParams(p_d=3.0e-6, e_d=0.015, e_0=0.5, f_ec=1.0, eta_v=0.75, p_dv=1.0e-6)
TABLE_II = ChannelParams(p_d=3.0e-6, e_d=0.015, e_0=0.5, f_ec=1.16, eta_v=0.75, p_dv=1.0e-6)


def n_photon_transmittance(xi: float, n: int) -> float:
    """Probability that at least one of ``n`` photons survives, ``1 - (1 - xi)^n``."""
    if not 0 <= xi <= 1:
        raise ValueError(f"xi must lie in [0, 1], got {xi!r}")
    if n < 0:
        raise ValueError("photon number must be non-negative")
    return float(-np.expm1(n * np.log1p(-xi))) if xi < 1 else float(n > 0)


def binomial_loss(n: int, xi: float) -> NDArray:
    """Photon-number distribution after ``n`` photons pass a channel of transmittance ``xi``."""
    if not 0 <= xi <= 1:
        raise ValueError(f"xi must lie in [0, 1], got {xi!r}")
    return stats.binom.pmf(np.arange(n + 1), n, xi)


def _loss_matrix(cutoff: int, xi: float) -> NDArray:
    out = np.zeros((cutoff + 1, cutoff + 1))
    for n in range(cutoff + 1):
        out[n, : n + 1] = binomial_loss(n, xi)
    return out


def _ratio(t: NDArray, s: NDArray, fill: float) -> NDArray:
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(s > 0, t / np.where(s > 0, s, 1.0), fill)


@dataclass(frozen=True, eq=False)
class Bb84Truth:
    """Per-photon-number yields ``s[k]`` and error rates ``e[k]``."""

    s: NDArray
    e: NDArray

    def __post_init__(self) -> None:
        s = np.array(self.s, dtype=float)
        e = np.array(self.e, dtype=float)
        if s.shape != e.shape or s.ndim != 1:
            raise ValueError("s and e must be 1-D arrays of equal length")
        s.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "e", e)

    @property
    def t(self) -> NDArray:
        return self.s * self.e

    @property
    def cutoff(self) -> int:
        return self.s.size - 1


@dataclass(frozen=True, eq=False)
class MdiTruth:
    """Pair yields ``s[basis][j, k]`` and error rates ``e[basis][j, k]``."""

    s: Mapping[str, NDArray]
    e: Mapping[str, NDArray]

    def __post_init__(self) -> None:
        if set(self.s) != set(self.e):
            raise ValueError("s and e must cover the same bases")
        frozen_s, frozen_e = {}, {}
        for basis in self.s:
            s = np.array(self.s[basis], dtype=float)
            e = np.array(self.e[basis], dtype=float)
            if s.shape != e.shape or s.ndim != 2 or s.shape[0] != s.shape[1]:
                raise ValueError("per-basis tables must be square and of equal shape")
            s.setflags(write=False)
            e.setflags(write=False)
            frozen_s[basis], frozen_e[basis] = s, e
        object.__setattr__(self, "s", frozen_s)
        object.__setattr__(self, "e", frozen_e)

    def t(self, basis: str) -> NDArray:
        return self.s[basis] * self.e[basis]

    @property
    def bases(self) -> tuple[str, ...]:
        return tuple(self.s)

    @property
    def cutoff(self) -> int:
        return next(iter(self.s.values())).shape[0] - 1


def bb84_truth(params: ChannelParams, k_max: int = 20) -> Bb84Truth:
    """Linear loss model with a single effective threshold detection at Bob.

    ``s_k = 1 - (1 - p_d)(1 - eta)^k`` and
    ``t_k = e_0 p_d (1 - eta)^k + e_d (1 - (1 - eta)^k)`` with ``eta = xi zeta``:
    photon-triggered clicks err with the misalignment probability, pure dark
    counts are random.
    """
    eta = params.eta_bb84
    k = np.arange(k_max + 1)
    none_arrive = (1.0 - eta) ** k
    s = 1.0 - (1.0 - params.p_d) * none_arrive
    t = params.e_0 * params.p_d * none_arrive + params.e_d * (1.0 - none_arrive)
    return Bb84Truth(s, _ratio(t, s, params.e_0))


def mdi_truth(params: ChannelParams, basis: str | None = None, cutoff: int = MDI_CUTOFF) -> MdiTruth:
    """Pair yields/errors from the simulated relay (see ``decoyforge.relay``).

    Args:
        basis: "Z", "X", or ``None`` for both.
    """
    bases = relay.BASES if basis is None else (basis,)
    loss = _loss_matrix(cutoff, params.eta_side)
    s_out, e_out = {}, {}
    for b in bases:
        success, error = relay.arrival_response(b, params.p_d, params.e_d, cutoff)
        s = loss @ success @ loss.T
        t = loss @ error @ loss.T
        s_out[b] = s
        e_out[b] = _ratio(t, s, params.e_0)
    return MdiTruth(s_out, e_out)


@dataclass(frozen=True)
class Bb84Stats:
    """Observed gains ``S[l]`` and error-weighted gains ``T[l] = S[l] E[l]``."""

    S: Mapping[str, float]
    T: Mapping[str, float]

    def E(self, label: str) -> float:
        s = self.S[label]
        return self.T[label] / s if s > 0 else float("nan")


@dataclass(frozen=True)
class MdiStats:
    """Observed pair gains ``S[basis][(l, r)]`` and ``T[basis][(l, r)]``."""

    S: Mapping[str, Mapping[tuple[str, str], float]]
    T: Mapping[str, Mapping[tuple[str, str], float]]

    def E(self, basis: str, l: str, r: str) -> float:
        s = self.S[basis][l, r]
        return self.T[basis][l, r] / s if s > 0 else float("nan")


def _coeffs(dist: PhotonNumberDistribution, cutoff: int) -> NDArray:
    if dist.k_max > cutoff:
        raise ValueError(
            f"source cutoff {dist.k_max} exceeds truth-table cutoff {cutoff}; "
            "build the source with a matching k_max"
        )
    out = np.zeros(cutoff + 1)
    out[: dist.k_max + 1] = dist.coeffs
    return out


def assemble_observables(truth, sources, protocol: str | None = None):
    """Exact convex combinations of the truth table weighted by source coefficients.

    Args:
        truth: ``Bb84Truth`` or ``MdiTruth``.
        sources: for BB84 a mapping label -> distribution; for MDI a pair
            ``(alice, bob)`` of such mappings.
        protocol: optional consistency check ("bb84" or "mdi").

    Returns:
        ``Bb84Stats`` or ``MdiStats``.
    """
    if isinstance(truth, Bb84Truth):
        if protocol not in (None, "bb84"):
            raise ValueError("BB84 truth table given for an MDI assembly")
        S, T = {}, {}
        t = truth.t
        for label, dist in sources.items():
            a = _coeffs(dist, truth.cutoff)
            S[label] = float(a @ truth.s)
            T[label] = float(a @ t)
        return Bb84Stats(S, T)
    if isinstance(truth, MdiTruth):
        if protocol not in (None, "mdi"):
            raise ValueError("MDI truth table given for a BB84 assembly")
        alice, bob = sources
        a = {l: _coeffs(d, truth.cutoff) for l, d in alice.items()}
        b = {r: _coeffs(d, truth.cutoff) for r, d in bob.items()}
        S, T = {}, {}
        for basis in truth.bases:
            s, t = truth.s[basis], truth.t(basis)
            S[basis] = {(l, r): float(a[l] @ s @ b[r]) for l in a for r in b}
            T[basis] = {(l, r): float(a[l] @ t @ b[r]) for l in a for r in b}
        return MdiStats(S, T)
    raise TypeError(f"unsupported truth table {type(truth).__name__}")
