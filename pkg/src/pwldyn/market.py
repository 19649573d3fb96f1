"""Chartist/fundamentalist market model reduced to piecewise-linear price maps.

A market maker moves the log price by aggregate excess demand from two
chartist and two fundamentalist types; type 2 of each only trades once
the deviation from the fundamental passes thresholds -Z_L / Z_R.
Expressed in deviations x = P - F, the model collapses to a four-branch
(or, with equal bull/bear type-1 reactions, three-branch) linear map.
Matched chartist/fundamentalist intercepts cancel exactly, which is what
puts the reduced map in the shared-fixed-point class; any mismatch leaves
an affine offset and opens the door to chaos.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from random import Random

from .core import Branch, PwlMap, build_map, iterate, Termination
from .errors import Diverged, InvalidParams, OffsetsWouldArise, S2MismatchesS1

_REDUCTION_CHECK_POINTS = 1000
_REDUCTION_RTOL = 1e-12


@dataclass(frozen=True)
class MarketParams:
    """Trader-level parameters; all reaction parameters must be non-negative.

    Intercepts appear twice (chartist and fundamentalist copies) because
    the reduced map is linear exactly when the copies match.
    """

    a: float                      # price adjustment speed, > 0
    z_l: float                    # bear-side activation threshold, > 0
    z_r: float                    # bull-side activation threshold, > 0
    fundamental: float = 0.0      # log fundamental value F
    # type 1 chartists: intercepts and reaction slopes (bull, bear)
    a1b_c: float = 0.0
    b1d_c: float = 0.0
    c1b: float = 0.0
    c1d: float = 0.0
    # type 2 chartists
    a2b_c: float = 0.0
    b2d_c: float = 0.0
    c2b: float = 0.0
    c2d: float = 0.0
    # type 1 fundamentalists
    a1b_f: float = 0.0
    b1d_f: float = 0.0
    f1b: float = 0.0
    f1d: float = 0.0
    # type 2 fundamentalists
    a2b_f: float = 0.0
    b2d_f: float = 0.0
    f2b: float = 0.0
    f2d: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise InvalidParams("price adjustment speed a must be > 0")
        if not (self.z_l > 0 and self.z_r > 0):
            raise InvalidParams("thresholds Z_L, Z_R must be > 0")
        for name in (
            "a1b_c", "b1d_c", "c1b", "c1d", "a2b_c", "b2d_c", "c2b", "c2d",
            "a1b_f", "b1d_f", "f1b", "f1d", "a2b_f", "b2d_f", "f2b", "f2d",
        ):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidParams(f"reaction parameter {name} must be >= 0, got {v}")


def chartist1(p: MarketParams, x: float) -> float:
    if x >= 0:
        return p.a1b_c + p.c1b * x
    return -p.b1d_c + p.c1d * x


def chartist2(p: MarketParams, x: float) -> float:
    if x >= p.z_r:
        return p.a2b_c + p.c2b * x
    if x <= -p.z_l:
        return -p.b2d_c + p.c2d * x
    return 0.0


def fundamentalist1(p: MarketParams, x: float) -> float:
    if x >= 0:
        return -p.a1b_f + p.f1b * (-x)
    return p.b1d_f + p.f1d * (-x)


def fundamentalist2(p: MarketParams, x: float) -> float:
    if x >= p.z_r:
        return -p.a2b_f + p.f2b * (-x)
    if x <= -p.z_l:
        return p.b2d_f + p.f2d * (-x)
    return 0.0


def excess_demand(p: MarketParams, x: float) -> float:
    return chartist1(p, x) + fundamentalist1(p, x) + chartist2(p, x) + fundamentalist2(p, x)


def price_step(p: MarketParams, x: float) -> float:
    """One period of the market maker rule, in deviation coordinates."""
    return x + p.a * excess_demand(p, x)


@dataclass(frozen=True)
class SlopeSet:
    """Composite reaction slopes s1..s4 and the branch slopes they induce."""

    s1: float
    s2: float
    s3: float
    s4: float

    @property
    def s_m_plus(self) -> float:
        return 1.0 + self.s1

    @property
    def s_m_minus(self) -> float:
        return 1.0 + self.s2

    @property
    def s_r(self) -> float:
        return 1.0 + self.s1 + self.s3

    @property
    def s_l(self) -> float:
        return 1.0 + self.s2 + self.s4


def derive_slopes(p: MarketParams) -> SlopeSet:
    return SlopeSet(
        s1=p.a * (p.c1b - p.f1b),
        s2=p.a * (p.c1d - p.f1d),
        s3=p.a * (p.c2b - p.f2b),
        s4=p.a * (p.c2d - p.f2d),
    )


def _require_matched_intercepts(p: MarketParams) -> None:
    mismatched = [
        pair
        for pair, (c, f) in {
            "a1b": (p.a1b_c, p.a1b_f),
            "b1d": (p.b1d_c, p.b1d_f),
            "a2b": (p.a2b_c, p.a2b_f),
            "b2d": (p.b2d_c, p.b2d_f),
        }.items()
        if c != f
    ]
    if mismatched:
        raise OffsetsWouldArise(
            f"chartist/fundamentalist intercepts differ for {mismatched}; "
            "the reduced map would be affine (use build_g3_offset or build_map)"
        )


def _verify_reduction(p: MarketParams, pwl: PwlMap, mu_r: float = 0.0) -> None:
    """Check the trader-level route against the reduced map on random states."""
    rng = Random(20240901)
    span = 3.0 * max(p.z_l, p.z_r)
    for _ in range(_REDUCTION_CHECK_POINTS):
        x = rng.uniform(-span, span)
        direct = price_step(p, x)
        if mu_r and x >= p.z_r:
            direct += mu_r
        reduced = pwl.evaluate(x)
        if abs(direct - reduced) > _REDUCTION_RTOL * max(1.0, abs(direct)):
            raise AssertionError(
                f"demand-sum and reduced map disagree at x={x!r}: {direct!r} vs {reduced!r}"
            )


def build_g4(p: MarketParams, verify: bool = True) -> PwlMap:
    """Four-branch map on breakpoints (-Z_L, 0, Z_R); requires matched intercepts."""
    _require_matched_intercepts(p)
    s = derive_slopes(p)
    pwl = build_map(
        [-p.z_l, 0.0, p.z_r],
        [
            Branch(s.s_l, 0.0, "L"),
            Branch(s.s_m_minus, 0.0, "M-"),
            Branch(s.s_m_plus, 0.0, "M+"),
            Branch(s.s_r, 0.0, "R"),
        ],
        ["left", "right", "right"],
    )
    if verify:
        _verify_reduction(p, pwl)
    return pwl


def build_g3(p: MarketParams, verify: bool = True) -> PwlMap:
    """Three-branch map on breakpoints (-Z_L, Z_R); requires s2 == s1."""
    _require_matched_intercepts(p)
    s = derive_slopes(p)
    if s.s2 != s.s1:
        raise S2MismatchesS1(
            f"three-branch reduction needs s2 == s1, got s1={s.s1}, s2={s.s2}"
        )
    pwl = build_map(
        [-p.z_l, p.z_r],
        [
            Branch(s.s_l, 0.0, "L"),
            Branch(s.s_m_plus, 0.0, "M"),
            Branch(s.s_r, 0.0, "R"),
        ],
        ["left", "right"],
    )
    if verify:
        _verify_reduction(p, pwl)
    return pwl


def build_g3_offset(p: MarketParams, mu_r: float, verify: bool = True) -> PwlMap:
    """build_g3 with an extra offset on the right branch (bull-side intercept mismatch)."""
    _require_matched_intercepts(p)
    s = derive_slopes(p)
    if s.s2 != s.s1:
        raise S2MismatchesS1(
            f"three-branch reduction needs s2 == s1, got s1={s.s1}, s2={s.s2}"
        )
    pwl = build_map(
        [-p.z_l, p.z_r],
        [
            Branch(s.s_l, 0.0, "L"),
            Branch(s.s_m_plus, 0.0, "M"),
            Branch(s.s_r, mu_r, "R"),
        ],
        ["left", "right"],
    )
    if verify:
        _verify_reduction(p, pwl, mu_r=mu_r)
    return pwl


def _split_nonneg(v: float) -> tuple[float, float]:
    """Represent v as difference of two non-negative numbers."""
    return (v, 0.0) if v >= 0 else (0.0, -v)


def params_for_slopes(
    s_l: float, s_m: float, s_r: float, z_l: float, z_r: float, a: float = 1.0
) -> MarketParams:
    """Trader parameters realizing given three-branch slopes (zero intercepts)."""
    c1b, f1b = _split_nonneg((s_m - 1.0) / a)
    c2b, f2b = _split_nonneg((s_r - s_m) / a)
    c2d, f2d = _split_nonneg((s_l - s_m) / a)
    return MarketParams(
        a=a, z_l=z_l, z_r=z_r,
        c1b=c1b, f1b=f1b, c1d=c1b, f1d=f1b,
        c2b=c2b, f2b=f2b, c2d=c2d, f2d=f2d,
    )


def params_for_g4_slopes(
    s_l: float, s_m_minus: float, s_m_plus: float, s_r: float,
    z_l: float, z_r: float, a: float = 1.0,
) -> MarketParams:
    """Trader parameters realizing given four-branch slopes (zero intercepts)."""
    c1b, f1b = _split_nonneg((s_m_plus - 1.0) / a)
    c1d, f1d = _split_nonneg((s_m_minus - 1.0) / a)
    c2b, f2b = _split_nonneg((s_r - s_m_plus) / a)
    c2d, f2d = _split_nonneg((s_l - s_m_minus) / a)
    return MarketParams(
        a=a, z_l=z_l, z_r=z_r,
        c1b=c1b, f1b=f1b, c1d=c1d, f1d=f1d,
        c2b=c2b, f2b=f2b, c2d=c2d, f2d=f2d,
    )


def g3_map(z_l: float, z_r: float, s_l: float, s_m: float, s_r: float,
           mu_r: float = 0.0) -> PwlMap:
    """Three-branch map directly from slopes (the form figure captions use)."""
    return build_map(
        [-z_l, z_r],
        [Branch(s_l, 0.0, "L"), Branch(s_m, 0.0, "M"), Branch(s_r, mu_r, "R")],
        ["left", "right"],
    )


def g4_map(z_l: float, z_r: float, s_l: float, s_m_minus: float,
           s_m_plus: float, s_r: float) -> PwlMap:
    """Four-branch map directly from slopes."""
    return build_map(
        [-z_l, 0.0, z_r],
        [
            Branch(s_l, 0.0, "L"),
            Branch(s_m_minus, 0.0, "M-"),
            Branch(s_m_plus, 0.0, "M+"),
            Branch(s_r, 0.0, "R"),
        ],
        ["left", "right", "right"],
    )


@dataclass(frozen=True)
class PricePoint:
    t: int
    deviation: float
    log_price: float
    regime: str  # "bull" (x > 0), "bear" (x < 0), or "fundamental"


def price_series(pwl: PwlMap, x0: float, n: int, fundamental: float = 0.0) -> list[PricePoint]:
    """Log-price trajectory P_t = x_t + F with bull/bear annotation."""
    orb = iterate(pwl, x0, n)
    if orb.terminated is Termination.DIVERGED:
        raise Diverged(f"price orbit diverged after {len(orb.word)} steps")
    out = []
    for t, x in enumerate(orb.states):
        regime = "bull" if x > 0 else ("bear" if x < 0 else "fundamental")
        out.append(PricePoint(t, x, x + fundamental, regime))
    return out


_CHARTIST_KEYS = {
    "a^{1,b}": "a1b_c", "b^{1,d}": "b1d_c", "c^{1,b}": "c1b", "c^{1,d}": "c1d",
    "a^{2,b}": "a2b_c", "b^{2,d}": "b2d_c", "c^{2,b}": "c2b", "c^{2,d}": "c2d",
}
_FUNDAMENTALIST_KEYS = {
    "a^{1,b}": "a1b_f", "b^{1,d}": "b1d_f", "f^{1,b}": "f1b", "f^{1,d}": "f1d",
    "a^{2,b}": "a2b_f", "b^{2,d}": "b2d_f", "f^{2,b}": "f2b", "f^{2,d}": "f2d",
}


def params_to_json(p: MarketParams, indent: int | None = 2) -> str:
    payload = {
        "a": p.a,
        "Z_L": p.z_l,
        "Z_R": p.z_r,
        "F": p.fundamental,
        "chartist": {k: getattr(p, attr) for k, attr in _CHARTIST_KEYS.items()},
        "fundamentalist": {k: getattr(p, attr) for k, attr in _FUNDAMENTALIST_KEYS.items()},
    }
    return json.dumps(payload, indent=indent)


def params_from_json(text: str) -> MarketParams:
    payload = json.loads(text)
    kwargs = {
        "a": payload["a"],
        "z_l": payload["Z_L"],
        "z_r": payload["Z_R"],
        "fundamental": payload.get("F", 0.0),
    }
    for k, attr in _CHARTIST_KEYS.items():
        kwargs[attr] = payload.get("chartist", {}).get(k, 0.0)
    for k, attr in _FUNDAMENTALIST_KEYS.items():
        kwargs[attr] = payload.get("fundamentalist", {}).get(k, 0.0)
    return MarketParams(**kwargs)
