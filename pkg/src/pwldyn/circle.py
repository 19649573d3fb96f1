"""Two-branch discontinuous increasing maps: gap/circle/overlap trichotomy,
circle-map reduction of homogeneous two-branch maps, rotation numbers,
Lyapunov exponents, and gap-map attractor approximation.

The classification compares the two images of the discontinuity point
obtained by composing the branches in the two possible orders. Equality
makes the map a circle homeomorphism; then the rotation number is well
defined and decides periodic vs quasiperiodic dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .core import (
    DIVERGENCE_THRESHOLD,
    Branch,
    Interval,
    PwlMap,
    Word,
    build_map,
)
from .errors import Diverged, HitOrigin, NotCircle, NotGap, NotReducible


@dataclass(frozen=True)
class LorenzMap:
    """x -> a_l*x + mu_l for x < 0, a_r*x + mu_r for x > 0, both slopes positive.

    mu_r < mu_l makes the jump at 0 downward, so [mu_r, mu_l] is the
    absorbing interval. The value at exactly 0 follows the right branch.
    """

    a_l: float
    a_r: float
    mu_l: float
    mu_r: float

    def __post_init__(self):
        if not (self.a_l > 0 and self.a_r > 0):
            raise ValueError("branch slopes must be positive")
        if not self.mu_r < self.mu_l:
            raise ValueError("requires mu_r < mu_l (downward jump at 0)")

    def f_l(self, x: float) -> float:
        return self.a_l * x + self.mu_l

    def f_r(self, x: float) -> float:
        return self.a_r * x + self.mu_r

    def __call__(self, x: float) -> float:
        return self.f_l(x) if x < 0 else self.f_r(x)

    @property
    def absorbing_interval(self) -> Interval:
        return Interval(self.mu_r, self.mu_l)

    def as_pwl_map(self) -> PwlMap:
        return build_map(
            [0.0],
            [Branch(self.a_l, self.mu_l, "L"), Branch(self.a_r, self.mu_r, "R")],
            ["right"],
        )


class LorenzKind(Enum):
    GAP = "gap"
    CIRCLE = "circle"
    OVERLAP = "overlap"


@dataclass(frozen=True)
class LorenzClassification:
    """Trichotomy verdict with both commutator images of the discontinuity.

    left_commutator = f_R(f_L(0)), right_commutator = f_L(f_R(0)).
    gap_or_overlap holds the gap (left < right) or the doubly-covered
    interval (left > right); None for a circle map.
    """

    kind: LorenzKind
    left_commutator: float
    right_commutator: float
    gap_or_overlap: Interval | None


def classify_lorenz(f: LorenzMap, tolerance: float = 0.0) -> LorenzClassification:
    """Gap, circle, or overlapping map, by comparing the commutator images at 0."""
    left = f.a_r * f.mu_l + f.mu_r
    right = f.a_l * f.mu_r + f.mu_l
    if abs(left - right) <= tolerance:
        return LorenzClassification(LorenzKind.CIRCLE, left, right, None)
    if left < right:
        return LorenzClassification(
            LorenzKind.GAP, left, right, Interval(left, right, False, False)
        )
    return LorenzClassification(
        LorenzKind.OVERLAP, left, right, Interval(right, left, True, True)
    )


@dataclass(frozen=True)
class CircleReduction:
    """Circle map induced by a homogeneous two-branch map on its absorbing interval.

    case is "i1" (both slopes positive), "i2" (negative left), or "i3"
    (both negative, reduced through the first return on the positive
    side). left_word / right_word are the parent symbols composing each
    branch of the circle map. conjugated marks inputs with a negative
    breakpoint handled through the mirror map x -> -x.
    """

    case: str
    interval: Interval
    circle_map: PwlMap
    left_word: Word
    right_word: Word
    conjugated: bool = False


def circle_reduction(pwl: PwlMap) -> CircleReduction:
    """Reduce a homogeneous two-branch map to a circle map, or say why not.

    The commutation identity (both branch orders agree at the breakpoint)
    is verified exactly; it holds automatically because slope products
    commute.
    """
    if len(pwl.breakpoints) != 1 or len(pwl.branches) != 2:
        raise NotReducible("map must have exactly two branches")
    if not pwl.homogeneous:
        raise NotReducible("map must be homogeneous (zero offsets)")
    h = pwl.breakpoints[0]
    if h == 0.0:
        raise NotReducible("breakpoint at 0 is a kink, not a discontinuity")
    if h < 0:
        mirrored = build_map(
            [-h],
            [
                Branch(pwl.branches[1].slope, 0.0, pwl.branches[1].label),
                Branch(pwl.branches[0].slope, 0.0, pwl.branches[0].label),
            ],
            ["left" if pwl.closures[0] == "right" else "right"],
        )
        red = circle_reduction(mirrored)
        return CircleReduction(
            red.case, red.interval, red.circle_map, red.left_word, red.right_word,
            conjugated=True,
        )

    s_l, s_r = pwl.branches[0].slope, pwl.branches[1].slope
    lab_l, lab_r = pwl.branches[0].label, pwl.branches[1].label
    if s_l == 0.0 or s_r == 0.0:
        raise NotReducible("a zero slope sends everything to the fixed point")
    if abs(s_l) == 1.0 or abs(s_r) == 1.0:
        raise NotReducible("|slope| = 1: only nonhyperbolic fixed-point dynamics")

    if s_l > 0 and s_r > 0:
        if not (s_l > 1 > s_r):
            raise NotReducible(
                f"positive slopes need s_l > 1 > s_r (got {s_l}, {s_r}): "
                "orbits converge to the fixed point or diverge"
            )
        case = "i1"
        left_word: Word = (lab_l,)
        right_word: Word = (lab_r,)
        slopes = (s_l, s_r)
        interval = Interval(s_r * h, s_l * h)
    elif s_l < 0 < s_r:
        if not (s_l * s_l > 1 > s_r):
            raise NotReducible(
                f"mixed slopes need s_l^2 > 1 > s_r (got {s_l}, {s_r})"
            )
        case = "i2"
        left_word = (lab_l, lab_l)
        right_word = (lab_r,)
        slopes = (s_l * s_l, s_r)
        interval = Interval(s_r * h, s_l * s_l * h)
    elif s_l < 0 and s_r < 0:
        if not (s_l * s_l > 1 > s_l * s_r):
            raise NotReducible(
                f"negative slopes need s_l^2 > 1 > s_l*s_r (got {s_l}, {s_r})"
            )
        case = "i3"
        left_word = (lab_l, lab_l)
        right_word = (lab_r, lab_l)
        slopes = (s_l * s_l, s_l * s_r)
        interval = Interval(s_l * s_r * h, s_l * s_l * h)
    else:
        raise NotReducible(
            "s_l > 0 > s_r: the positive side is invariant, dynamics are "
            "fixed-point related or divergent"
        )

    circle = build_map(
        [h],
        [Branch(slopes[0], 0.0, "".join(left_word)), Branch(slopes[1], 0.0, "".join(right_word))],
        [pwl.closures[0]],
    )
    # commutation identity at the breakpoint, exact by slope commutativity
    assert slopes[1] * (slopes[0] * h) == slopes[0] * (slopes[1] * h)
    return CircleReduction(case, interval, circle, left_word, right_word)


@dataclass(frozen=True)
class RotationEstimate:
    """Fraction of left-branch applications, with optional rational detection.

    rational_guess is the closest fraction with denominator <= the cap,
    kept only when it sits within the 2/n acceptance window of value.
    """

    value: float
    n: int
    rational_guess: Fraction | None
    rational_error: float | None

    @property
    def window(self) -> float:
        return 2.0 / self.n


def _circle_pwl(source) -> tuple[PwlMap, Interval]:
    """Normalize rotation-number input to (two-branch PwlMap, absorbing interval)."""
    if isinstance(source, CircleReduction):
        return source.circle_map, source.interval
    if isinstance(source, LorenzMap):
        cls = classify_lorenz(source)
        if cls.kind is not LorenzKind.CIRCLE:
            raise NotCircle(f"lorenz map classifies as {cls.kind.value}")
        return source.as_pwl_map(), source.absorbing_interval
    if isinstance(source, PwlMap):
        if len(source.branches) != 2 or len(source.breakpoints) != 1:
            raise NotCircle("need a two-branch map with one breakpoint")
        bl, br = source.branches
        h = source.breakpoints[0]
        if bl.slope <= 0 or br.slope <= 0:
            raise NotCircle("circle map branches must be increasing")
        top, bot = bl(h), br(h)
        if not bot < top:
            raise NotCircle("jump at the breakpoint must be downward")
        if br(top) != bl(bot):
            raise NotCircle(
                f"images of the breakpoint disagree: {br(top)!r} vs {bl(bot)!r}"
            )
        return source, Interval(bot, top)
    raise TypeError(f"cannot interpret {type(source).__name__} as a circle map")


def rotation_number(
    source,
    x0: float | None = None,
    n: int = 100_000,
    denominator_cap: int = 1000,
) -> RotationEstimate:
    """Count left-branch applications over n steps of the circle map.

    Accepts a CircleReduction, a circle LorenzMap, or a two-branch PwlMap
    satisfying the circle condition. x0 defaults to the midpoint of the
    absorbing interval.
    """
    if n < 100:
        raise ValueError("n must be >= 100")
    pwl, interval = _circle_pwl(source)
    if x0 is None:
        x0 = interval.midpoint
    h = pwl.breakpoints[0]
    right_owned = pwl.closures[0] == "right"
    (sl, ol), (sr, orr) = (
        (pwl.branches[0].slope, pwl.branches[0].offset),
        (pwl.branches[1].slope, pwl.branches[1].offset),
    )
    x = x0
    count = 0
    for _ in range(n):
        if x < h or (x == h and not right_owned):
            count += 1
            x = sl * x + ol
        else:
            x = sr * x + orr
    value = count / n
    guess = Fraction(count, n).limit_denominator(denominator_cap)
    err = abs(value - float(guess))
    if err <= 2.0 / n:
        return RotationEstimate(value, n, guess, err)
    return RotationEstimate(value, n, None, None)


@dataclass(frozen=True)
class LyapunovEstimate:
    """Average log-slope along an orbit.

    For homogeneous maps the same quantity equals log|x_n/x_0|/n exactly;
    homogeneous_value carries it as a cross-check (None for affine maps).
    orbit_bounds are (min |x|, max |x|) over the whole orbit.
    """

    value: float
    n: int
    orbit_bounds: tuple[float, float]
    homogeneous_value: float | None

    @property
    def bound(self) -> float:
        """log(M/m)/n: hard bound on |value| for bounded homogeneous orbits."""
        m, big = self.orbit_bounds
        return math.log(big / m) / self.n


def lyapunov_exponent(
    pwl: PwlMap,
    x0: float,
    n: int,
    divergence_threshold: float = DIVERGENCE_THRESHOLD,
) -> LyapunovEstimate:
    """(1/n) * sum of log|slope| along the orbit of x0."""
    if x0 == 0.0:
        raise ValueError("x0 must be nonzero")
    if n < 1:
        raise ValueError("n must be >= 1")
    counts = [0] * len(pwl.branches)
    bidx = pwl.branch_index
    branches = pwl.branches
    x = x0
    min_abs = max_abs = abs(x0)
    for k in range(n):
        i = bidx(x)
        counts[i] += 1
        br = branches[i]
        x = br.slope * x + br.offset
        if x == 0.0:
            raise HitOrigin(f"orbit reached exactly 0 after {k + 1} steps")
        ax = abs(x)
        if ax > divergence_threshold:
            raise Diverged(f"orbit exceeded {divergence_threshold} after {k + 1} steps")
        if ax < min_abs:
            min_abs = ax
        elif ax > max_abs:
            max_abs = ax
    total = 0.0
    for i, c in enumerate(counts):
        if c:
            total += c * math.log(abs(branches[i].slope))
    hom = math.log(abs(x / x0)) / n if pwl.homogeneous else None
    return LyapunovEstimate(total / n, n, (min_abs, max_abs), hom)


def return_map_as_lorenz(rm) -> LorenzMap:
    """View a two-piece increasing return map as a LorenzMap.

    Coordinates are shifted so the internal discontinuity sits at 0,
    making the result directly classifiable by classify_lorenz.
    """
    if len(rm.pieces) != 2:
        raise NotCircle(f"return map has {len(rm.pieces)} pieces, need exactly 2")
    a, b = rm.pieces
    if a.branch.slope <= 0 or b.branch.slope <= 0:
        raise NotCircle("return map branches must be increasing")
    c = b.lo
    mu_l = a.branch(c) - c
    mu_r = b.branch(c) - c
    if not mu_r < mu_l:
        raise NotCircle("jump at the return discontinuity must be downward")
    return LorenzMap(a_l=a.branch.slope, a_r=b.branch.slope, mu_l=mu_l, mu_r=mu_r)


def _interval_image(f: LorenzMap, lo: float, hi: float) -> list[tuple[float, float]]:
    """Image of an open interval under f, split at the discontinuity."""
    out = []
    if lo < 0:
        right_end = min(hi, 0.0)
        out.append((f.f_l(lo), f.f_l(right_end)))
    if hi > 0:
        left_end = max(lo, 0.0)
        out.append((f.f_r(left_end), f.f_r(hi)))
    return out


def _merge(intervals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    intervals = sorted(i for i in intervals if i[0] < i[1])
    merged: list[list[float]] = []
    for lo, hi in intervals:
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(a, b) for a, b in merged]


def gap_attractor(f: LorenzMap, depth: int) -> tuple[Interval, ...]:
    """Absorbing interval minus the gap and its first `depth` forward images.

    Outer approximation of the invariant set: the Cantor attractor for
    irrational rotation, a neighborhood of the attracting cycle for
    rational rotation. depth 0 removes the gap itself only.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    cls = classify_lorenz(f)
    if cls.kind is not LorenzKind.GAP:
        raise NotGap(f"map classifies as {cls.kind.value}")
    i_lo, i_hi = f.mu_r, f.mu_l
    gap = cls.gap_or_overlap
    assert gap is not None
    removed: list[tuple[float, float]] = []
    current = [(gap.lo, gap.hi)]
    for _ in range(depth + 1):
        removed.extend(current)
        nxt: list[tuple[float, float]] = []
        for lo, hi in current:
            nxt.extend(_interval_image(f, lo, hi))
        current = _merge(nxt)
    removed = _merge([(max(lo, i_lo), min(hi, i_hi)) for lo, hi in removed])
    out = []
    cursor = i_lo
    for lo, hi in removed:
        if cursor < lo:
            out.append(Interval(cursor, lo))
        cursor = max(cursor, hi)
    if cursor < i_hi:
        out.append(Interval(cursor, i_hi))
    return tuple(out)
