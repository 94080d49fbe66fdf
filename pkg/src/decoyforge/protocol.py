"""Scenario orchestration: intensity choice, signal optimization and loss sweeps.

The intensity protocol is the one the four-intensity method is compared
under: the first decoy ``mu1`` is fixed, the three-intensity signal is
optimized, and that optimum becomes the second decoy of the four-intensity
method whose own signal is then optimized above it.  MDI runs are symmetric
(Alice and Bob use the same intensities).

Key rates are per time slot.  For heralded sources the per-herald rate is
multiplied by the heralding probability of every emitting party, so a
source that rarely fires is not rewarded for its clean photon statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import bounds_bb84 as b84
from . import bounds_mdi as bmdi
from .channel import (
    MDI_CUTOFF,
    TABLE_I,
    TABLE_II,
    Bb84Truth,
    ChannelParams,
    MdiTruth,
    assemble_observables,
    bb84_truth,
    mdi_truth,
)
from .errors import ConditionViolation, DegenerateBoundError, InvalidSourceError
from .sources import (
    DEFAULT_K_MAX,
    PhotonNumberDistribution,
    SourceTriple,
    make_hsps,
    make_poisson,
    make_vacuum,
)

__all__ = [
    "PROTOCOLS",
    "SOURCE_KINDS",
    "OptimizerSettings",
    "ScenarioConfig",
    "Optimum",
    "SweepRecord",
    "SweepResult",
    "ScenarioPoint",
    "make_source",
    "maximize_scalar",
    "golden_section_max",
    "infinite_decoy_rate",
    "optimize_signal",
    "sweep",
]

PROTOCOLS = ("bb84", "mdi")
SOURCE_KINDS = ("wcs", "hsps")
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OptimizerSettings:
    """Signal-intensity search: coarse grid then golden-section refinement.

    Attributes:
        grid_points: coarse grid size.
        tol: absolute intensity tolerance of the refinement.
        mu_hi: upper end of every signal search.
        min_gap: smallest allowed spacing above the largest fixed intensity.
    """

    grid_points: int = 64
    tol: float = 1e-4
    mu_hi: float = 1.0
    min_gap: float = 0.01

    def __post_init__(self) -> None:
        if self.grid_points < 3:
            raise ValueError("grid_points must be at least 3")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.mu_hi > 0:
            raise ValueError("mu_hi must be positive")
        if not self.min_gap > 0:
            raise ValueError("min_gap must be positive")


def _default_grid(protocol: str) -> tuple[float, ...]:
    top = 30 if protocol == "bb84" else 40
    return tuple(float(v) for v in range(top + 1))


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a sweep depends on.

    ``k_max`` is the photon-number cutoff of the sources (and of the MDI
    truth table); ``None`` picks 20 for BB84 and 6 for MDI.  ``seed`` only
    feeds the stochastic parts of a run (Monte-Carlo, oracle); the sweep
    itself is deterministic.
    """

    protocol: str
    source_kind: str = "wcs"
    channel: ChannelParams = field(default_factory=ChannelParams)
    mu1: float = 0.1
    loss_grid: tuple[float, ...] = ()
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    k_max: int | None = None
    seed: int = 0
    name: str = "custom"

    def __post_init__(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"protocol must be one of {PROTOCOLS}, got {self.protocol!r}")
        if self.source_kind not in SOURCE_KINDS:
            raise ValueError(f"source_kind must be one of {SOURCE_KINDS}, got {self.source_kind!r}")
        if not self.mu1 > 0:
            raise ValueError(f"mu1 must be positive, got {self.mu1!r}")
        grid = tuple(float(v) for v in (self.loss_grid or _default_grid(self.protocol)))
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("loss_grid must be strictly increasing")
        if any(v < 0 or not math.isfinite(v) for v in grid):
            raise ValueError("loss_grid values must be finite and non-negative")
        object.__setattr__(self, "loss_grid", grid)
        if self.k_max is None:
            object.__setattr__(self, "k_max", DEFAULT_K_MAX if self.protocol == "bb84" else MDI_CUTOFF)
        if self.k_max < 3:
            raise ValueError(f"k_max must be at least 3, got {self.k_max!r}")
        if self.protocol == "mdi" and self.k_max > MDI_CUTOFF:
            raise ValueError(f"MDI sources cannot exceed the relay cutoff {MDI_CUTOFF}")
        if self.mu1 + 2 * self.optimizer.min_gap >= self.optimizer.mu_hi:
            raise ValueError("mu1 leaves no room for the signal searches below mu_hi")

    @classmethod
    def preset(cls, protocol: str, source_kind: str, **overrides) -> ScenarioConfig:
        """Table I (BB84, mu1 = 0.2) or Table II (MDI, mu1 = 0.1) defaults."""
        if protocol == "bb84":
            base = dict(channel=TABLE_I, mu1=0.2, optimizer=OptimizerSettings(mu_hi=2.0))
        else:
            base = dict(channel=TABLE_II, mu1=0.1, optimizer=OptimizerSettings(mu_hi=1.0))
        base.update(name=f"{protocol}_{source_kind}")
        base.update(overrides)
        return cls(protocol=protocol, source_kind=source_kind, **base)


def make_source(kind: str, mu: float, channel: ChannelParams, k_max: int) -> PhotonNumberDistribution:
    if kind == "wcs":
        return make_poisson(mu, k_max)
    if kind == "hsps":
        return make_hsps(mu, channel.eta_v, channel.p_dv, k_max)
    raise ValueError(f"unknown source kind {kind!r}")


# ---------------------------------------------------------------------------
# optimizer


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on ``[lo, hi]`` to absolute tolerance ``tol``."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def _finite(v: float) -> float:
    return v if math.isfinite(v) else -math.inf


def maximize_scalar(
    f: Callable[[float], float], lo: float, hi: float, grid_points: int = 64, tol: float = 1e-4
) -> tuple[float, float]:
    """Coarse grid over ``[lo, hi]``, then golden section around the best node.

    Non-finite values count as minus infinity.  The returned value is never
    below the best grid value.

    Raises:
        ValueError: if ``hi <= lo``.
    """
    if not hi > lo:
        raise ValueError(f"empty search interval [{lo!r}, {hi!r}]")
    grid = np.linspace(lo, hi, grid_points)
    values = [_finite(f(float(m))) for m in grid]
    i = int(np.argmax(values))
    a = float(grid[max(i - 1, 0)])
    b = float(grid[min(i + 1, grid_points - 1)])
    mu, val = golden_section_max(lambda m: _finite(f(m)), a, b, tol)
    if val >= values[i]:
        return mu, val
    return float(grid[i]), values[i]


# ---------------------------------------------------------------------------
# rate evaluation at one loss point


def _amended_mdi(table, d) -> dict:
    return {
        (l, r): bmdi.amended_pair(table[l, r], d[l][0], table["0", r], d[r][0], table[l, "0"], table["0", "0"])
        for l in d
        if l != "0"
        for r in d
        if r != "0"
    }


@dataclass(frozen=True)
class Evaluation:
    """Key rate (per time slot) and the bounds behind it for one intensity choice."""

    rate: float
    s_lower: float = math.nan
    e_upper: float = math.nan
    note: str = ""


class ScenarioPoint:
    """A scenario at one loss value: truth table plus rate functions of the intensities."""

    def __init__(self, config: ScenarioConfig, loss_db: float) -> None:
        self.config = config
        self.loss_db = float(loss_db)
        self.channel = config.channel.at_loss(loss_db)
        if config.protocol == "bb84":
            self.truth: Bb84Truth | MdiTruth = bb84_truth(self.channel, config.k_max)
        else:
            self.truth = mdi_truth(self.channel, cutoff=MDI_CUTOFF)
        self._vacuum = make_vacuum(config.k_max)
        self._cache: dict[float, PhotonNumberDistribution] = {}

    def source(self, mu: float) -> PhotonNumberDistribution:
        if mu not in self._cache:
            self._cache[mu] = make_source(self.config.source_kind, mu, self.channel, self.config.k_max)
        return self._cache[mu]

    def _observe(self, sources: dict):
        if self.config.protocol == "bb84":
            return assemble_observables(self.truth, sources, "bb84")
        return assemble_observables(self.truth, (sources, sources), "mdi")

    def _signal_stats(self, obs, label: str) -> tuple[float, float]:
        if self.config.protocol == "bb84":
            return obs.S[label], obs.E(label)
        return obs.S["Z"][label, label], obs.E("Z", label, label)

    def _finish(self, sig: PhotonNumberDistribution, obs, label: str, s_lower: float, e_upper: float) -> float:
        s = max(s_lower, 0.0)
        gain, err = self._signal_stats(obs, label)
        if self.config.protocol == "bb84":
            return b84.bb84_key_rate(sig[1], s, e_upper, gain, err) * sig.herald_probability
        r = bmdi.mdi_key_rate(sig[1], sig[1], s, e_upper, gain, err, self.channel.f_ec)
        return r * sig.herald_probability**2

    def three(self, mu: float) -> Evaluation:
        """Vacuum + decoy ``mu1`` + signal ``mu``."""
        x, y = self.source(self.config.mu1), self.source(mu)
        d = {"0": self._vacuum, "x": x, "s": y}
        obs = self._observe(d)
        try:
            if self.config.protocol == "bb84":
                St = {l: b84.amended_gain(obs.S[l], d[l][0], obs.S["0"]) for l in ("x", "s")}
                s = b84.s1_lower_3(x, y, St["x"], St["s"])
                e = b84.e1_upper_3(x, obs.S["x"], obs.E("x"), obs.S["0"], obs.E("0"), s)
            else:
                sz = _amended_mdi(obs.S["Z"], d)
                s = bmdi.s11_lower_pair(x, y, x, y, sz["x", "x"], sz["x", "s"], sz["s", "x"])
                sx = _amended_mdi(obs.S["X"], d)
                tx = _amended_mdi(obs.T["X"], d)
                s_err = bmdi.s11_lower_pair(x, y, x, y, sx["x", "x"], sx["x", "s"], sx["s", "x"])
                e = tx["x", "x"] / (x[1] * x[1] * s_err) if s_err > 0 else 1.0
        except DegenerateBoundError as exc:
            return Evaluation(-math.inf, note=str(exc))
        return Evaluation(self._finish(y, obs, "s", s, e), s, e)

    def four(self, mu2: float, mu: float) -> Evaluation:
        """Vacuum + decoys ``mu1``, ``mu2`` + signal ``mu``."""
        x, y, z = self.source(self.config.mu1), self.source(mu2), self.source(mu)
        d = {"0": self._vacuum, "x": x, "y": y, "z": z}
        obs = self._observe(d)
        try:
            if self.config.protocol == "bb84":
                bounds = b84.estimate_bb84(obs, self._vacuum, SourceTriple(x, y, z))
                s, e = bounds.raw["s1_lower_4"], bounds.raw["e1_upper_4"]
            else:
                triple_a = SourceTriple(x, y, z, side="alice")
                triple_b = SourceTriple(x, y, z, side="bob")
                bounds = bmdi.estimate_mdi(obs, triple_a, triple_b)
                s, e = bounds.raw["s11_lower_4"], bounds.raw["e11_upper_4"]
        except (DegenerateBoundError, ConditionViolation, InvalidSourceError) as exc:
            return Evaluation(-math.inf, note=str(exc))
        return Evaluation(self._finish(z, obs, "z", s, e), s, e)

    def infinite(self, mu: float) -> Evaluation:
        sig = self.source(mu)
        return Evaluation(infinite_decoy_rate(self.truth, sig, self.channel), *_true_values(self.truth))

    @property
    def true_values(self) -> tuple[float, float]:
        """Single-photon yield and phase error the bounds are estimating."""
        return _true_values(self.truth)


def _true_values(truth) -> tuple[float, float]:
    if isinstance(truth, Bb84Truth):
        return float(truth.s[1]), float(truth.e[1])
    return float(truth.s["Z"][1, 1]), float(truth.e["X"][1, 1])


def infinite_decoy_rate(truth, signal: PhotonNumberDistribution, channel: ChannelParams) -> float:
    """Key rate per time slot with the true single-photon yield and error plugged in."""
    s, e = _true_values(truth)
    if isinstance(truth, Bb84Truth):
        obs = assemble_observables(truth, {"s": signal}, "bb84")
        rate = b84.bb84_key_rate(signal[1], s, e, obs.S["s"], obs.E("s"))
        return rate * signal.herald_probability
    obs = assemble_observables(truth, ({"s": signal}, {"s": signal}), "mdi")
    rate = bmdi.mdi_key_rate(signal[1], signal[1], s, e, obs.S["Z"]["s", "s"], obs.E("Z", "s", "s"), channel.f_ec)
    return rate * signal.herald_probability**2


# ---------------------------------------------------------------------------
# optimization and sweeps


@dataclass(frozen=True)
class Optimum:
    mu: float
    rate: float

    @property
    def positive(self) -> bool:
        return self.rate > 0


def optimize_signal(point: ScenarioPoint, arity: int, mu2: float | None = None) -> Optimum:
    """Best signal intensity for the three- or four-intensity method.

    The three-intensity search runs over ``[mu1 + gap, mu_hi - gap]`` so the
    four-intensity search, which starts at ``mu2 + gap``, is never empty.

    Raises:
        ValueError: empty interval, or ``mu2`` missing for arity 4.
    """
    opt = point.config.optimizer
    if arity == 3:
        lo, hi = point.config.mu1 + opt.min_gap, opt.mu_hi - opt.min_gap
        f = lambda mu: point.three(mu).rate  # noqa: E731
    elif arity == 4:
        if mu2 is None:
            raise ValueError("the four-intensity search needs the second decoy intensity")
        lo, hi = mu2 + opt.min_gap, opt.mu_hi
        f = lambda mu: point.four(mu2, mu).rate  # noqa: E731
    else:
        raise ValueError(f"arity must be 3 or 4, got {arity!r}")
    mu, rate = maximize_scalar(f, lo, hi, opt.grid_points, opt.tol)
    return Optimum(mu, rate)


@dataclass(frozen=True)
class SweepRecord:
    """Results at one loss value.  Rates are verbatim (may be negative)."""

    loss_db: float
    mu_opt_3: float
    rate_3: float
    mu_opt_4: float
    rate_4: float
    mu_opt_inf: float
    rate_inf: float
    s_lower_3: float
    s_lower_4: float
    e_upper_3: float
    e_upper_4: float
    s_true: float
    e_true: float
    note: str = ""

    @property
    def mu2(self) -> float:
        """Second decoy of the four-intensity method (the three-intensity optimum)."""
        return self.mu_opt_3

    @property
    def rate_ratio(self) -> float:
        """``R4 / R3`` with rates floored at zero; NaN when ``R3 <= 0``."""
        r3, r4 = max(self.rate_3, 0.0), max(self.rate_4, 0.0)
        return r4 / r3 if r3 > 0 else math.nan

    @property
    def error_ratio(self) -> float:
        return self.e_upper_4 / self.e_upper_3 if self.e_upper_3 > 0 else math.nan

    def relative_to_inf(self, rate: float) -> float:
        r_inf = max(self.rate_inf, 0.0)
        return max(rate, 0.0) / r_inf if r_inf > 0 else math.nan


@dataclass(frozen=True)
class SweepResult:
    config: ScenarioConfig
    records: tuple[SweepRecord, ...]

    @property
    def warnings(self) -> list[str]:
        return [f"{r.loss_db:g} dB: {r.note}" for r in self.records if r.note]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)


def evaluate_point(config: ScenarioConfig, loss_db: float) -> SweepRecord:
    """Run the full intensity protocol at one loss value."""
    point = ScenarioPoint(config, loss_db)
    opt = config.optimizer
    notes = []
    best3 = optimize_signal(point, 3)
    best4 = optimize_signal(point, 4, mu2=best3.mu)
    ev3 = point.three(best3.mu)
    ev4 = point.four(best3.mu, best4.mu)
    for label, ev in (("3-intensity", ev3), ("4-intensity", ev4)):
        if ev.note:
            notes.append(f"{label}: {ev.note}")
    mu_inf, r_inf = maximize_scalar(lambda mu: point.infinite(mu).rate, opt.min_gap, opt.mu_hi, opt.grid_points, opt.tol)
    # the true-value rate dominates either method pointwise, so also try their optima
    for mu in (best3.mu, best4.mu):
        r = point.infinite(mu).rate
        if r > r_inf:
            mu_inf, r_inf = mu, r
    if not best3.positive:
        notes.append("no positive 3-intensity key rate")
    if not best4.positive:
        notes.append("no positive 4-intensity key rate")
    s_true, e_true = point.true_values
    return SweepRecord(
        loss_db=float(loss_db),
        mu_opt_3=best3.mu,
        rate_3=ev3.rate,
        mu_opt_4=best4.mu,
        rate_4=ev4.rate,
        mu_opt_inf=mu_inf,
        rate_inf=r_inf,
        s_lower_3=ev3.s_lower,
        s_lower_4=ev4.s_lower,
        e_upper_3=min(max(ev3.e_upper, 0.0), 1.0),
        e_upper_4=min(max(ev4.e_upper, 0.0), 1.0),
        s_true=s_true,
        e_true=e_true,
        note="; ".join(notes),
    )


def sweep(config: ScenarioConfig) -> SweepResult:
    """Evaluate every loss value of the grid in order.

    A failure at one point is recorded in that record's note and the sweep
    continues.
    """
    records = []
    for loss in config.loss_grid:
        try:
            records.append(evaluate_point(config, loss))
        except (ValueError, ArithmeticError) as exc:
            nan = math.nan
            records.append(SweepRecord(loss, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, note=f"failed: {exc}"))
    return SweepResult(config, tuple(records))
