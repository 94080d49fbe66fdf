"""Brute-force certification of the decoy-state bounds against known ground truth.

Truth tables here need not come from a physical channel: every bound is a
linear-algebra statement that holds for arbitrary yields and error rates in
[0, 1] once the source conditions hold.  Observables are summed directly
from the truth table (the amended gains as sums over non-vacuum photon
numbers, not by subtraction), and only the public estimator functions are
called.

Tolerances are cancellation-aware.  Each bound is linear in its amended
inputs, so its weights are recovered by probing the public function with
unit vectors and the scale is ``sum |weight * input|``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import bounds_bb84 as b84
from . import bounds_mdi as bmdi
from .channel import Bb84Stats, Bb84Truth, MdiStats, MdiTruth
from .errors import ConditionViolation, DegenerateBoundError
from .sources import (
    PhotonNumberDistribution,
    SourceTriple,
    check_pair_condition,
    check_triple_condition,
    make_hsps,
    make_poisson,
    make_thermal,
    make_vacuum,
)

__all__ = [
    "Violation",
    "OracleReport",
    "random_truth",
    "certify_bounds",
    "certify_identities",
    "check_sign_lemmas",
    "check_source_conditions",
    "check_monotone_ratio",
    "exactness_gaps",
    "random_triple",
    "standard_triples",
    "run_oracle",
    "BOUND_TOL",
    "IDENTITY_TOL",
]

BOUND_TOL = 1e-10
IDENTITY_TOL = 1e-11


@dataclass(frozen=True)
class Violation:
    seed: int | None
    quantity: str
    bound: float
    truth: float
    gap: float

    def as_dict(self) -> dict:
        return {"seed": self.seed, "quantity": self.quantity, "bound": self.bound, "truth": self.truth, "gap": self.gap}


@dataclass(frozen=True)
class OracleReport:
    """Outcome of a batch of checks.  ``max_gap`` is the worst violation magnitude (0 if none)."""

    trials: int = 0
    violations: tuple[Violation, ...] = ()
    max_gap: float = 0.0
    precondition_failures: int = 0

    @property
    def passed(self) -> bool:
        return not self.violations

    def merge(self, other: OracleReport) -> OracleReport:
        return OracleReport(
            self.trials + other.trials,
            self.violations + other.violations,
            max(self.max_gap, other.max_gap),
            self.precondition_failures + other.precondition_failures,
        )

    def as_dict(self) -> dict:
        return {
            "trials": self.trials,
            "violations": [v.as_dict() for v in self.violations],
            "max_gap": self.max_gap,
            "precondition_failures": self.precondition_failures,
            "passed": self.passed,
        }


@dataclass
class _Collector:
    seed: int | None
    violations: list[Violation] = field(default_factory=list)
    precondition_failures: int = 0

    def lower(self, name: str, bound: float, truth: float, scale: float, tol: float = BOUND_TOL) -> None:
        gap = bound - truth
        if gap > tol * max(scale, 1e-300):
            self.violations.append(Violation(self.seed, name, bound, truth, gap))

    def upper(self, name: str, bound: float, truth: float, scale: float, tol: float = BOUND_TOL) -> None:
        gap = truth - bound
        if gap > tol * max(scale, 1e-300):
            self.violations.append(Violation(self.seed, name, bound, truth, gap))

    def fail(self, name: str, detail: float = math.nan) -> None:
        self.violations.append(Violation(self.seed, name, detail, math.nan, math.inf))

    def report(self, trials: int = 1) -> OracleReport:
        gaps = [v.gap for v in self.violations]
        return OracleReport(trials, tuple(self.violations), max(gaps, default=0.0), self.precondition_failures)


# ---------------------------------------------------------------------------
# truth tables


def random_truth(seed: int, protocol: str, cutoff: int, sorted: bool = False) -> Bb84Truth | MdiTruth:
    """Uniform random yields in [0, 1] and error rates in [0, 0.5].

    With ``sorted`` the yields are non-decreasing in every photon number
    (the physically typical regime); otherwise they are unstructured.
    """
    rng = np.random.default_rng(seed)
    if protocol == "bb84":
        if cutoff < 4:
            raise ValueError("BB84 truth tables need cutoff >= 4")
        s = rng.uniform(0.0, 1.0, cutoff + 1)
        e = rng.uniform(0.0, 0.5, cutoff + 1)
        if sorted:
            s = np.sort(s)
        return Bb84Truth(s, e)
    if protocol == "mdi":
        if cutoff < 6:
            raise ValueError("MDI truth tables need cutoff >= 6 per side")
        tables_s, tables_e = {}, {}
        for basis in ("Z", "X"):
            s = rng.uniform(0.0, 1.0, (cutoff + 1, cutoff + 1))
            if sorted:
                s = np.sort(np.sort(s, axis=0), axis=1)
            tables_s[basis] = s
            tables_e[basis] = rng.uniform(0.0, 0.5, (cutoff + 1, cutoff + 1))
        return MdiTruth(tables_s, tables_e)
    raise ValueError(f"unknown protocol {protocol!r}")


def _vec(dist: PhotonNumberDistribution, n: int) -> np.ndarray:
    return np.array([dist[k] for k in range(n)])


# ---------------------------------------------------------------------------
# linear probing for cancellation-aware scales


def _linear_scale(fn: Callable[..., float], inputs: Sequence[float]) -> float:
    """``sum |w_i x_i|`` for a linear ``fn`` whose weights ``w`` are found by probing."""
    n = len(inputs)
    total = 0.0
    for i in range(n):
        unit = [0.0] * n
        unit[i] = 1.0
        total += abs(fn(*unit) * inputs[i])
    return total


def _linear_dict_scale(fn: Callable[[dict], float], table: dict) -> float:
    zero = {k: 0.0 for k in table}
    total = 0.0
    for k, v in table.items():
        probe = dict(zero)
        probe[k] = 1.0
        total += abs(fn(probe) * v)
    return total


# ---------------------------------------------------------------------------
# BB84


def _bb84_sums(truth: Bb84Truth, sources: dict[str, PhotonNumberDistribution]):
    n = truth.cutoff + 1
    s, t = np.asarray(truth.s), np.asarray(truth.s) * np.asarray(truth.e)
    S, T, St, Tt = {}, {}, {}, {}
    for label, dist in sources.items():
        a = _vec(dist, n)
        St[label] = float(sum(a[k] * s[k] for k in range(1, n)))
        Tt[label] = float(sum(a[k] * t[k] for k in range(1, n)))
        S[label] = float(a[0] * s[0]) + St[label]
        T[label] = float(a[0] * t[0]) + Tt[label]
    return S, T, St, Tt


def _certify_bb84(truth: Bb84Truth, triple: SourceTriple, seed: int | None) -> OracleReport:
    out = _Collector(seed)
    vac = make_vacuum(triple.k_max)
    sources = {"0": vac, "x": triple.x, "y": triple.y, "z": triple.z}
    S, T, St, Tt = _bb84_sums(truth, sources)
    s1 = float(truth.s[1])
    t1 = s1 * float(truth.e[1])
    e1 = float(truth.e[1])

    pair_values = {}
    for l, r in (("x", "y"), ("x", "z"), ("y", "z")):
        lo, hi = triple[l], triple[r]
        try:
            fn = lambda a, b, lo=lo, hi=hi: b84.s1_lower_3(lo, hi, a, b)  # noqa: E731
            value = fn(St[l], St[r])
        except DegenerateBoundError:
            out.precondition_failures += 1
            continue
        pair_values[l, r] = (value, _linear_scale(fn, (St[l], St[r])))
        out.lower(f"s1_lower({l},{r})", value, s1, pair_values[l, r][1])

    if ("x", "y") not in pair_values:
        return out.report()
    s3, s3_scale = pair_values["x", "y"]
    try:
        s4 = b84.s1_lower_4(triple, St["x"], St["y"], St["z"])
        out.lower("s1_lower_4", s4, s1, s3_scale)
    except ConditionViolation:
        out.fail("s1_lower_4 ordering")
        s4 = s3

    E0 = T["0"] / S["0"] if S["0"] > 0 else 0.0
    e3 = b84.e1_upper_3(triple.x, S["x"], T["x"] / S["x"] if S["x"] > 0 else 0.0, S["0"], E0, s3)
    if s3 > BOUND_TOL * s3_scale:
        # the numerator carries no cancellation; the yield bound does
        out.upper("e1_upper_3", e3, e1, e3 * (s3_scale / s3 + 1.0))

    try:
        fn = lambda a, b, c: b84.t1_upper_4(triple, a, b, c)  # noqa: E731
        t4 = fn(Tt["x"], Tt["y"], Tt["z"])
        t_scale = _linear_scale(fn, (Tt["x"], Tt["y"], Tt["z"]))
    except DegenerateBoundError:
        out.precondition_failures += 1
        return out.report()
    out.upper("t1_upper_4", t4, t1, t_scale)
    e4 = b84.e1_upper_4(t4, s4)
    if s4 > BOUND_TOL * s3_scale:
        out.upper("e1_upper_4", e4, e1, abs(e4) * (t_scale / max(abs(t4), 1e-300) + s3_scale / s4))

    # end-to-end path through the public estimator
    try:
        bounds = b84.estimate_bb84(Bb84Stats(S, T), vac, triple)
        out.lower("estimate_bb84.s1_lower_4", bounds.raw["s1_lower_4"], s1, s3_scale)
        out.upper("estimate_bb84.t1_upper_4", bounds.raw["t1_upper_4"], t1, t_scale)
    except ConditionViolation:
        out.fail("estimate_bb84 ordering")
    return out.report()


# ---------------------------------------------------------------------------
# MDI


def _mdi_sums(table: np.ndarray, alice: dict, bob: dict) -> tuple[dict, dict]:
    """Full gains and amended gains (sums over j, k >= 1) for every source pair."""
    n = table.shape[0]
    full, amended = {}, {}
    for l, da in alice.items():
        a = _vec(da, n)
        for r, db in bob.items():
            b = _vec(db, n)
            tot = 0.0
            inner = 0.0
            for j in range(n):
                for k in range(n):
                    term = a[j] * b[k] * table[j, k]
                    tot += term
                    if j and k:
                        inner += term
            full[l, r] = float(tot)
            amended[l, r] = float(inner)
    return full, amended


def _certify_mdi(truth: MdiTruth, A: SourceTriple, B: SourceTriple, seed: int | None) -> OracleReport:
    out = _Collector(seed)
    vac = make_vacuum(min(A.k_max, B.k_max))
    alice = {"0": vac, "x": A.x, "y": A.y, "z": A.z}
    bob = {"0": vac, "x": B.x, "y": B.y, "z": B.z}
    s11 = float(truth.s["Z"][1, 1])
    s11_x = float(truth.s["X"][1, 1])
    e11 = float(truth.e["X"][1, 1])
    t11 = s11_x * e11

    S_full, St = _mdi_sums(truth.s["Z"], alice, bob)
    SX_full, StX = _mdi_sums(truth.s["X"], alice, bob)
    TX_full, TtX = _mdi_sums(truth.t("X"), alice, bob)

    def pair_bound(table, l, r):
        fn = lambda p, q, u: bmdi.s11_lower_pair(A[l], A[r], B[l], B[r], p, q, u)  # noqa: E731
        args = (table[l, l], table[l, r], table[r, l])
        return fn(*args), _linear_scale(fn, args)

    pair_scales = {}
    for l, r in (("x", "y"), ("x", "z"), ("y", "z")):
        try:
            value, scale = pair_bound(St, l, r)
        except DegenerateBoundError:
            out.precondition_failures += 1
            return out.report()
        pair_scales[l, r] = scale
        out.lower(f"s11_lower({l},{r})", value, s11, scale)
    s_scale = pair_scales["x", "y"]
    try:
        s4 = bmdi.s11_lower_4(A, B, St)
        out.lower("s11_lower_4", s4, s11, s_scale)
    except ConditionViolation:
        out.fail("s11_lower_4 ordering")

    s_err, s_err_scale = pair_bound(StX, "x", "y")
    out.lower("s11_lower_X", s_err, s11_x, s_err_scale)

    def e_of(l, r):
        return TX_full[l, r] / SX_full[l, r] if SX_full[l, r] > 0 else 0.0

    e3 = bmdi.e11_upper_3(
        A.x, B.x, SX_full["x", "x"], e_of("x", "x"), SX_full["0", "x"], e_of("0", "x"),
        SX_full["x", "0"], e_of("x", "0"), SX_full["0", "0"], e_of("0", "0"), s_err,
    )
    if s_err > BOUND_TOL * s_err_scale:
        out.upper("e11_upper_3", e3, e11, e3 * (s_err_scale / s_err + 1.0))

    try:
        fn = lambda tab: bmdi.t11_upper_4(A, B, tab)  # noqa: E731
        t4 = fn(TtX)
        t_scale = _linear_dict_scale(fn, TtX)
    except DegenerateBoundError:
        out.precondition_failures += 1
        return out.report()
    out.upper("t11_upper_4", t4, t11, t_scale)
    e4 = bmdi.e11_upper_4(t4, s_err)
    if s_err > BOUND_TOL * s_err_scale:
        out.upper("e11_upper_4", e4, e11, abs(e4) * (t_scale / max(abs(t4), 1e-300) + s_err_scale / s_err))

    stats = MdiStats({"Z": S_full, "X": SX_full}, {"Z": _mdi_sums(truth.t("Z"), alice, bob)[0], "X": TX_full})
    try:
        bounds = bmdi.estimate_mdi(stats, A, B)
        out.lower("estimate_mdi.s11_lower_4", bounds.raw["s11_lower_4"], s11, s_scale)
        out.upper("estimate_mdi.t11_upper_4", bounds.raw["t11_upper_4"], t11, t_scale)
    except ConditionViolation:
        out.fail("estimate_mdi ordering")
    return out.report()


def certify_bounds(truth, sources, protocol: str, seed: int | None = None) -> OracleReport:
    """Check every bound of ``protocol`` against ``truth``.

    Args:
        truth: ``Bb84Truth`` or ``MdiTruth``.
        sources: a ``SourceTriple`` (BB84, or MDI with Bob = Alice) or an
            ``(alice, bob)`` pair of triples for MDI.  Their ``k_max`` must not
            exceed the truth cutoff.
        seed: recorded in violations for reproduction.
    """
    if protocol == "bb84":
        if sources.k_max > truth.cutoff:
            raise ValueError("source cutoff exceeds the truth table")
        return _demote_if_invalid(_certify_bb84(truth, sources, seed), (sources,))
    if protocol == "mdi":
        A, B = sources if isinstance(sources, tuple) else (sources, sources)
        if max(A.k_max, B.k_max) > truth.cutoff:
            raise ValueError("source cutoff exceeds the truth table")
        return _demote_if_invalid(_certify_mdi(truth, A, B, seed), (A, B))
    raise ValueError(f"unknown protocol {protocol!r}")


def _demote_if_invalid(report: OracleReport, triples: Sequence[SourceTriple]) -> OracleReport:
    """Violations on sources that break the conditions are precondition failures, not bound failures."""
    if not report.violations or all(check_source_conditions(t).passed for t in triples):
        return report
    return OracleReport(report.trials, (), 0.0, report.precondition_failures + len(report.violations))


# ---------------------------------------------------------------------------
# exactness witnesses


def exactness_gaps(seed: int, protocol: str, triple: SourceTriple) -> dict[str, float]:
    """Relative errors of each estimator on a truth where its dropped terms vanish.

    BB84: yields zero from three photons on (s1 bounds exact), error-weighted
    yields zero from four photons on (t1 bound exact) and from two photons on
    (three-intensity error bound exact).  MDI: yields supported on the
    eliminated pairs {(1,1), (1,2), (2,1)} (plus vacuum rows) for the yield
    bound, and error-weighted yields vanishing on J0 for the t11 bound.
    """
    rng = np.random.default_rng(seed)
    cutoff = triple.k_max
    out = {}
    if protocol == "bb84":
        vac = make_vacuum(cutoff)
        sources = {"0": vac, "x": triple.x, "y": triple.y, "z": triple.z}
        s = rng.uniform(0.1, 1.0, cutoff + 1)
        s[3:] = 0.0
        truth = Bb84Truth(s, np.full(cutoff + 1, 0.25))
        _, _, St, _ = _bb84_sums(truth, sources)
        for l, r in (("x", "y"), ("x", "z"), ("y", "z")):
            out[f"s1_lower({l},{r})"] = _rel(b84.s1_lower_3(triple[l], triple[r], St[l], St[r]), s[1])
        s = rng.uniform(0.1, 1.0, cutoff + 1)
        t = rng.uniform(0.0, 0.5, cutoff + 1) * s
        t[4:] = 0.0
        e = np.divide(t, s)
        truth = Bb84Truth(s, e)
        _, _, _, Tt = _bb84_sums(truth, sources)
        out["t1_upper_4"] = _rel(b84.t1_upper_4(triple, Tt["x"], Tt["y"], Tt["z"]), t[1])
        # three-intensity error bound: exact s1 bound and no multi-photon errors
        s = rng.uniform(0.1, 1.0, cutoff + 1)
        s[3:] = 0.0
        e = rng.uniform(0.0, 0.5, cutoff + 1)
        e[2:] = 0.0
        truth = Bb84Truth(s, e)
        S, T, St, _ = _bb84_sums(truth, sources)
        s3 = b84.s1_lower_3(triple.x, triple.y, St["x"], St["y"])
        e3 = b84.e1_upper_3(triple.x, S["x"], T["x"] / S["x"], S["0"], T["0"] / S["0"], s3)
        out["e1_upper_3"] = _rel(e3, e[1])
        return out
    if protocol == "mdi":
        n = cutoff + 1
        vac = make_vacuum(cutoff)
        sources = {"0": vac, "x": triple.x, "y": triple.y, "z": triple.z}
        s = rng.uniform(0.1, 1.0, (n, n))
        keep = np.zeros((n, n), dtype=bool)
        keep[0, :] = keep[:, 0] = True
        for j, k in ((1, 1), (1, 2), (2, 1)):
            keep[j, k] = True
        s = np.where(keep, s, 0.0)
        _, St = _mdi_sums(s, sources, sources)
        for l, r in (("x", "y"), ("x", "z"), ("y", "z")):
            value = bmdi.s11_lower_pair(triple[l], triple[r], triple[l], triple[r], St[l, l], St[l, r], St[r, l])
            out[f"s11_lower({l},{r})"] = _rel(value, s[1, 1])
        t = rng.uniform(0.0, 0.5, (n, n))
        for m in range(1, n):
            for k in range(1, n):
                if bmdi.in_j0(m, k):
                    t[m, k] = 0.0
        _, Tt = _mdi_sums(t, sources, sources)
        out["t11_upper_4"] = _rel(bmdi.t11_upper_4(triple, triple, Tt), t[1, 1])
        return out
    raise ValueError(f"unknown protocol {protocol!r}")


def _rel(value: float, truth: float) -> float:
    return abs(value - truth) / max(abs(truth), 1e-300)


# ---------------------------------------------------------------------------
# coefficient identities and orderings


def _G(t: SourceTriple, i: int, j: int, k: int) -> float:
    """Independent evaluation of the ratio determinant from raw coefficients."""
    gx = [t.x[m] / t.z[m] for m in (i, j, k)]
    gy = [t.y[m] / t.z[m] for m in (i, j, k)]
    return (gx[0] - gx[1]) * (gy[1] - gy[2]) - (gy[0] - gy[1]) * (gx[1] - gx[2])


def _D(t: SourceTriple, l: str, r: str) -> float:
    return t[l][1] * t[r][2] - t[r][1] * t[l][2]


def _f_bb84(t: SourceTriple, l: str, r: str, m: int) -> float:
    """Weight of ``s_m`` in ``s_1 - s1_lower(l, r)``."""
    return (t[l][2] * t[r][m] - t[r][2] * t[l][m]) / _D(t, l, r)


def _f_mdi(A: SourceTriple, B: SourceTriple, l: str, r: str, m: int, n: int) -> float:
    """Weight of ``s_mn`` in ``s_11 - s11_lower(l, r)``."""
    da, db = _D(A, l, r), _D(B, l, r)
    num = A[l][2] * B[l][n] * (A[l][1] * A[r][m] - A[r][1] * A[l][m]) * db + A[l][m] * B[l][1] * da * (
        B[l][2] * B[r][n] - B[r][2] * B[l][n]
    )
    return num / (A[l][1] * B[l][1] * da * db)


def _identity(out: _Collector, name: str, lhs: float, rhs: float, scale: float) -> None:
    gap = abs(lhs - rhs)
    if gap > IDENTITY_TOL * max(scale, abs(lhs), abs(rhs), 1e-300):
        out.violations.append(Violation(out.seed, name, rhs, lhs, gap))


def _ordered(out: _Collector, name: str, big: float, small: float, scale: float) -> None:
    if small - big > IDENTITY_TOL * max(scale, 1e-300):
        out.violations.append(Violation(out.seed, name, big, small, small - big))


def certify_identities(
    triples: Sequence[SourceTriple] | Sequence[tuple[SourceTriple, SourceTriple]],
    index_max: int = 20,
    protocol: str = "bb84",
) -> OracleReport:
    """Difference identities between pairwise residual weights and their orderings.

    BB84, for ``3 <= m <= index_max``:
        f^{xy}(m) - f^{xz}(m) = -a_2^x a_1^z a_2^z a_m^z G(1,2,m) / (D_xy D_xz)
        f^{xz}(m) - f^{yz}(m) = -a_2^z a_1^z a_2^z a_m^z G(1,2,m) / (D_xz D_yz)
    with ``D_lr = a_1^l a_2^r - a_1^r a_2^l``; both sides are non-positive.

    MDI: the (1, n) and (n, 1) analogues of both identities (Bob's H in place
    of G for the (1, n) case), the two-term (m, n >= 2) analogue of the first,
    and the ordering of all weights, for ``m, n <= index_max`` with
    ``m + n >= 4``.
    """
    out = _Collector(None)
    count = 0
    for item in triples:
        count += 1
        if protocol == "bb84":
            t = item if isinstance(item, SourceTriple) else item[0]
            dxy, dxz, dyz = _D(t, "x", "y"), _D(t, "x", "z"), _D(t, "y", "z")
            top = min(index_max, t.k_max)
            for m in range(3, top + 1):
                fxy, fxz, fyz = (_f_bb84(t, l, r, m) for l, r in (("x", "y"), ("x", "z"), ("y", "z")))
                g = _G(t, 1, 2, m)
                common = t.z[1] * t.z[2] * t.z[m] * g
                _identity(out, f"bb84 xy-xz m={m}", fxy - fxz, -t.x[2] * common / (dxy * dxz), max(abs(fxy), abs(fxz)))
                _identity(out, f"bb84 xz-yz m={m}", fxz - fyz, -t.z[2] * common / (dxz * dyz), max(abs(fxz), abs(fyz)))
                _ordered(out, f"bb84 order xy<=xz m={m}", fxz, fxy, max(abs(fxy), abs(fxz)))
                _ordered(out, f"bb84 order xz<=yz m={m}", fyz, fxz, max(abs(fxz), abs(fyz)))
        elif protocol == "mdi":
            A, B = item if isinstance(item, tuple) else (item, item)
            top = min(index_max, A.k_max, B.k_max)
            da = {p: _D(A, *p) for p in (("x", "y"), ("x", "z"), ("y", "z"))}
            db = {p: _D(B, *p) for p in (("x", "y"), ("x", "z"), ("y", "z"))}
            for m, n in itertools.product(range(1, top + 1), repeat=2):
                if m + n < 4:
                    continue
                fxy, fxz, fyz = (_f_mdi(A, B, l, r, m, n) for l, r in (("x", "y"), ("x", "z"), ("y", "z")))
                size = max(abs(fxy), abs(fxz), abs(fyz))
                if m == 1:
                    h = _G(B, 1, 2, n) * B.z[1] * B.z[2] * B.z[n]
                    _identity(out, f"mdi xy-xz (1,{n})", fxy - fxz, -B.x[2] * h / (db["x", "y"] * db["x", "z"]), size)
                    _identity(out, f"mdi xz-yz (1,{n})", fxz - fyz, -B.z[2] * h / (db["x", "z"] * db["y", "z"]), size)
                elif n == 1:
                    g = _G(A, 1, 2, m) * A.z[1] * A.z[2] * A.z[m]
                    _identity(out, f"mdi xy-xz ({m},1)", fxy - fxz, -A.x[2] * g / (da["x", "y"] * da["x", "z"]), size)
                    _identity(out, f"mdi xz-yz ({m},1)", fxz - fyz, -A.z[2] * g / (da["x", "z"] * da["y", "z"]), size)
                else:
                    g = _G(A, 1, 2, m) * A.z[1] * A.z[2] * A.z[m]
                    h = _G(B, 1, 2, n) * B.z[1] * B.z[2] * B.z[n]
                    rhs = -A.x[2] * B.x[n] * g / (B.x[1] * da["x", "y"] * da["x", "z"]) - B.x[2] * A.x[m] * h / (
                        A.x[1] * db["x", "y"] * db["x", "z"]
                    )
                    _identity(out, f"mdi xy-xz ({m},{n})", fxy - fxz, rhs, size)
                _ordered(out, f"mdi order xy<=xz ({m},{n})", fxz, fxy, size)
                _ordered(out, f"mdi order xz<=yz ({m},{n})", fyz, fxz, size)
        else:
            raise ValueError(f"unknown protocol {protocol!r}")
    return out.report(count)


def check_sign_lemmas(triple: SourceTriple, bob: SourceTriple | None = None, k_max: int = 20, mn_max: int = 10) -> OracleReport:
    """Residual weights of the t1 and t11 upper bounds are all non-positive."""
    bob = triple if bob is None else bob
    out = _Collector(None)
    for k in range(4, min(k_max, triple.k_max) + 1):
        v = b84.f_t1(triple, k)
        if v > 0:
            out.violations.append(Violation(None, f"f_t1({k})", v, 0.0, v))
    top = min(mn_max, triple.k_max, bob.k_max)
    for m, n in itertools.product(range(1, top + 1), repeat=2):
        if bmdi.in_j0(m, n):
            v = bmdi.f_t11(m, n, triple, bob)
            if v > 0:
                out.violations.append(Violation(None, f"f_t11({m},{n})", v, 0.0, v))
    return out.report()


def check_source_conditions(triple: SourceTriple, index_max: int = 20) -> OracleReport:
    """Pair conditions for (x, y) and (y, z) and the G >= 0 triple condition."""
    out = _Collector(None)
    top = min(index_max, triple.k_max)
    for lo, hi, name in ((triple.x, triple.y, "pair(x,y)"), (triple.y, triple.z, "pair(y,z)")):
        rep = check_pair_condition(lo, hi, top)
        if not rep.holds:
            out.violations.append(Violation(None, f"{name} k={rep.first_violation}", math.nan, math.nan, math.inf))
    rep = check_triple_condition(triple, top)
    for w in rep.witnesses:
        out.violations.append(Violation(None, f"G{w} < 0", math.nan, math.nan, math.inf))
    return out.report()


def check_monotone_ratio(m: int, n: int, points: int = 1000) -> bool:
    """``(1 - v^m) / (1 - v^n)`` is increasing on (0, 1) for ``m > n >= 1``."""
    if not m > n >= 1:
        raise ValueError("need m > n >= 1")
    v = np.linspace(0.0, 1.0, points + 2)[1:-1]
    # stable form: ratio of partial geometric sums
    num = np.polyval(np.ones(m), v)
    den = np.polyval(np.ones(n), v)
    f = num / den
    return bool(np.all(np.diff(f) >= -1e-12 * f[1:]))


# ---------------------------------------------------------------------------
# triples and batch runs


def random_triple(
    rng: np.random.Generator, family: str, k_max: int = 20, side: str = "alice", mu_max: float = 1.5
) -> SourceTriple:
    """Three increasing intensities in ``(0.01, mu_max)`` of the given family, at least 0.02 apart."""
    mus = np.sort(rng.uniform(0.01, mu_max, 3))
    while np.min(np.diff(mus)) < 0.02:
        mus = np.sort(rng.uniform(0.01, mu_max, 3))
    make = {
        "poisson": lambda mu: make_poisson(mu, k_max),
        "thermal": lambda mu: make_thermal(mu, k_max),
        "hsps": lambda mu: make_hsps(mu, 0.75, 1e-6, k_max),
    }[family]
    return SourceTriple(*(make(float(mu)) for mu in mus), side=side)


def standard_triples(k_max: int) -> dict[str, SourceTriple]:
    """Poisson (0.1, 0.2, 0.5) and the HSPS / thermal triples at the same intensities."""
    mus = (0.1, 0.2, 0.5)
    return {
        "poisson": SourceTriple(*(make_poisson(mu, k_max) for mu in mus)),
        "hsps": SourceTriple(*(make_hsps(mu, 0.75, 1e-6, k_max) for mu in mus)),
        "thermal": SourceTriple(*(make_thermal(mu, k_max) for mu in mus)),
    }


def run_oracle(trials: int, seed: int, protocols: Sequence[str] = ("bb84", "mdi")) -> OracleReport:
    """Certify every bound on ``trials`` random truths per protocol and source family.

    Truths alternate between sorted and unstructured tables; trial ``i`` uses
    seed ``seed + i`` so any violation can be replayed alone.
    """
    report = OracleReport()
    for protocol in protocols:
        cutoff = 20 if protocol == "bb84" else 6
        triples = standard_triples(cutoff)
        for i in range(trials):
            truth = random_truth(seed + i, protocol, cutoff, sorted=bool(i % 2))
            for triple in triples.values():
                report = report.merge(certify_bounds(truth, triple, protocol, seed=seed + i))
    return report
