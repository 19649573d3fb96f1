"""Asymptotic classification of piecewise-linear map dynamics.

For homogeneous maps (all offsets zero) bounded dynamics away from the
origin can only be segments of nonhyperbolic cycles or quasiperiodic
orbits dense in intervals, so the chaotic verdict is gated on the
presence of offsets; the property suite in the tests exercises that gate
over random maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .core import Interval, Orbit, PwlMap, Termination, Word, iterate
from .errors import Diverged
from .symbolic import compose_word, itinerary

DEFAULT_MAX_PERIOD = 50
PRODUCT_TOL = 1e-9
HOMOGENEOUS_TAIL_RTOL = 1e-10
AFFINE_TAIL_RTOL = 1e-7
CHAOS_LAMBDA_MIN = 1e-3
_BLOCK = 1024
GAP_MERGE_FACTOR = 1e-3


class AttractorVerdict(Enum):
    FIXED_POINT_O = "fixed_point"
    NONHYPERBOLIC_CYCLE_SEGMENTS = "nonhyperbolic_cycles"
    PERIODIC_CYCLE = "periodic_cycle"
    QUASIPERIODIC_INTERVALS = "quasiperiodic"
    CHAOTIC = "chaotic"
    DIVERGENT = "divergent"


@dataclass(frozen=True)
class AttractorReport:
    """Verdict plus the evidence it was based on.

    period is 0 for non-periodic verdicts. cycle_points start at the
    largest point of the cycle and follow word order. For periodic
    verdicts of affine maps (PERIODIC_CYCLE) the cycle is hyperbolic and
    attracting; for homogeneous maps a periodic verdict always means
    segments of nonhyperbolic cycles.
    """

    verdict: AttractorVerdict
    period: int = 0
    word: Word = ()
    cycle_points: tuple[float, ...] = ()
    intervals: tuple[Interval, ...] = ()
    lyapunov: float | None = None
    rotation: float | None = None
    final_state: float | None = None
    steps: int = 0

    def summary(self) -> str:
        parts = [self.verdict.value, f"period={self.period}"]
        if self.lyapunov is not None:
            parts.append(f"lyapunov={self.lyapunov:.12g}")
        if self.rotation is not None:
            parts.append(f"rotation={self.rotation:.12g}")
        if self.word:
            parts.append("word=" + "".join(self.word))
        if self.intervals:
            parts.append(
                "intervals=" + ";".join(f"{iv.lo:.12g}:{iv.hi:.12g}" for iv in self.intervals)
            )
        return " ".join(parts)


def merge_points_to_intervals(points, gap_tol: float) -> tuple[Interval, ...]:
    """Merge a point cloud into maximal intervals, splitting at gaps > gap_tol."""
    pts = sorted(points)
    if not pts:
        return ()
    runs = []
    start = prev = pts[0]
    for x in pts[1:]:
        if x - prev > gap_tol:
            runs.append((start, prev))
            start = x
        prev = x
    runs.append((start, prev))
    return tuple(Interval(a, b) for a, b in runs if a < b)


def _tail_period(states: list[float], max_period: int, rtol: float) -> int | None:
    """Smallest p with the last p states repeating the p before them, rtol-relative."""
    n = len(states)
    for p in range(1, max_period + 1):
        if n < 2 * p + 1:
            return None
        ok = True
        for k in range(1, p + 1):
            a, b = states[n - k], states[n - k - p]
            if abs(a - b) > rtol * max(abs(a), abs(b), 1e-300):
                ok = False
                break
        if ok:
            return p
    return None


def _rotate_to_max(points: list[float], word: list[str]) -> tuple[tuple[float, ...], Word]:
    k = max(range(len(points)), key=lambda i: points[i])
    return tuple(points[k:] + points[:k]), tuple(word[k:] + word[:k])


def _word_slope_product(pwl: PwlMap, word) -> float:
    prod = 1.0
    for label in word:
        prod = pwl.branch_by_label(label).slope * prod
    return prod


def _confirm_affine_cycle(pwl: PwlMap, word: Word, period: int):
    """Check that `word` composes to a contraction whose fixed point realizes the cycle."""
    comp = compose_word(pwl, word)
    if abs(comp.slope) >= 1.0 - 1e-12:
        return None
    xstar = comp.offset / (1.0 - comp.slope)
    try:
        if itinerary(pwl, xstar, period) != word:
            return None
    except Diverged:
        return None
    pts = [xstar]
    y = xstar
    for label in word:
        br = pwl.branch_by_label(label)
        y = br.slope * y + br.offset
        pts.append(y)
    if abs(y - xstar) > 1e-10 * max(1.0, abs(xstar)):
        return None
    return pts[:period]


def classify_attractor(
    pwl: PwlMap,
    x0: float,
    budget: tuple[int, int] = (1000, 10_000),
    max_period: int = DEFAULT_MAX_PERIOD,
    divergence_threshold: float = 1e8,
    gap_merge_factor: float = GAP_MERGE_FACTOR,
    early_exit: bool = True,
) -> AttractorReport:
    """Classify the asymptotic dynamics of the orbit of x0.

    budget = (transient steps, sample steps). The chaotic verdict
    requires offsets and a clearly positive average log-slope; for
    homogeneous maps it is unreachable by construction.
    """
    transient, samples = budget
    homog = pwl.homogeneous

    orb = iterate(pwl, x0, transient, divergence_threshold)
    if orb.terminated is Termination.DIVERGED:
        return AttractorReport(
            AttractorVerdict.DIVERGENT, final_state=orb.states[-1], steps=len(orb.word)
        )
    if orb.terminated is Termination.CONVERGED_TO_FIXED_POINT:
        return AttractorReport(
            AttractorVerdict.FIXED_POINT_O, final_state=orb.states[-1], steps=len(orb.word)
        )

    labels = pwl.labels
    label_index = {lb: i for i, lb in enumerate(labels)}
    log_slopes = [
        math.log(abs(br.slope)) if br.slope != 0.0 else -math.inf for br in pwl.branches
    ]
    counts = [0] * len(labels)
    states: list[float] = [orb.states[-1]]
    word: list[str] = []
    tail_rtol = HOMOGENEOUS_TAIL_RTOL if homog else AFFINE_TAIL_RTOL
    window = 2 * max_period + 1

    def lyapunov(done: int) -> float:
        return sum(c * ls for c, ls in zip(counts, log_slopes) if c) / done

    def rotation(done: int) -> float | None:
        return counts[0] / done if len(labels) == 2 else None

    def periodic_report(done: int) -> AttractorReport | None:
        p = _tail_period(states[-window:], max_period, tail_rtol)
        if p is None:
            return None
        w = tuple(word[-p:])
        anchor_states = states[-p - 1 : -1]
        if homog:
            prod = _word_slope_product(pwl, w)
            if abs(prod - 1.0) > PRODUCT_TOL:
                return None
            pts, w_rot = _rotate_to_max(anchor_states, list(w))
            return AttractorReport(
                AttractorVerdict.NONHYPERBOLIC_CYCLE_SEGMENTS,
                period=p,
                word=w_rot,
                cycle_points=pts,
                lyapunov=lyapunov(done),
                rotation=rotation(done),
                final_state=states[-1],
                steps=transient + done,
            )
        cycle = _confirm_affine_cycle(pwl, w, p)
        if cycle is None:
            return None
        pts, w_rot = _rotate_to_max(cycle, list(w))
        return AttractorReport(
            AttractorVerdict.PERIODIC_CYCLE,
            period=p,
            word=w_rot,
            cycle_points=pts,
            lyapunov=lyapunov(done),
            rotation=rotation(done),
            final_state=states[-1],
            steps=transient + done,
        )

    done = 0
    while done < samples:
        take = min(_BLOCK, samples - done)
        sub = iterate(pwl, states[-1], take, divergence_threshold)
        states.extend(sub.states[1:])
        for lb in sub.word:
            counts[label_index[lb]] += 1
        done += len(sub.word)
        if sub.terminated is Termination.DIVERGED:
            return AttractorReport(
                AttractorVerdict.DIVERGENT, final_state=states[-1], steps=transient + done
            )
        if sub.terminated is Termination.CONVERGED_TO_FIXED_POINT:
            return AttractorReport(
                AttractorVerdict.FIXED_POINT_O, final_state=states[-1], steps=transient + done
            )
        word.extend(sub.word)
        if early_exit or done >= samples:
            rep = periodic_report(done)
            if rep is not None:
                return rep

    lam = lyapunov(done)
    if not homog and lam > CHAOS_LAMBDA_MIN:
        return AttractorReport(
            AttractorVerdict.CHAOTIC, lyapunov=lam, final_state=states[-1],
            steps=transient + done,
        )
    span = max(states) - min(states)
    intervals = merge_points_to_intervals(states, gap_merge_factor * span) if span > 0 else ()
    return AttractorReport(
        AttractorVerdict.QUASIPERIODIC_INTERVALS,
        intervals=intervals,
        lyapunov=lam,
        rotation=rotation(done),
        final_state=states[-1],
        steps=transient + done,
    )


class CycleKind(Enum):
    NONHYPERBOLIC_SEGMENT = "nonhyperbolic_segment"
    HYPERBOLIC_WOULD_BE = "hyperbolic_would_be"


@dataclass(frozen=True)
class CycleFinding:
    """A periodic word observed in some orbit tail.

    For slope product 1 (within tol) the segment field holds the interval
    of points sharing the word's itinerary: every point in it is periodic
    with the same period. A product away from 1 cannot support a cycle
    off the origin, hence HYPERBOLIC_WOULD_BE.
    """

    word: Word
    slope_product: float
    kind: CycleKind
    segment: Interval | None
    points: tuple[float, ...] = ()

    @property
    def period(self) -> int:
        return len(self.word)


def _word_segment(pwl: PwlMap, word: Word) -> Interval | None:
    """Interval of starting points whose next |word| symbols are exactly `word`."""
    lo, hi = -math.inf, math.inf
    sigma, off = 1.0, 0.0
    for label in word:
        i = pwl.labels.index(label)
        plo, phi, _, _ = pwl.partition_bounds(i)
        if sigma > 0:
            nlo = (plo - off) / sigma if math.isfinite(plo) else -math.inf
            nhi = (phi - off) / sigma if math.isfinite(phi) else math.inf
        else:
            nlo = (phi - off) / sigma if math.isfinite(phi) else -math.inf
            nhi = (plo - off) / sigma if math.isfinite(plo) else math.inf
        lo, hi = max(lo, nlo), min(hi, nhi)
        if not lo < hi:
            return None
        br = pwl.branches[i]
        sigma = br.slope * sigma
        off = br.slope * off + br.offset
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return None
    return Interval(lo, hi)


def default_seeds(pwl: PwlMap) -> list[float]:
    """Deterministic orbit seeds spread across every partition, avoiding 0 and breakpoints."""
    bps = pwl.breakpoints
    scale = max(1.0, max(abs(b) for b in bps))
    seeds: list[float] = []
    for i in range(len(pwl.branches)):
        lo, hi, _, _ = pwl.partition_bounds(i)
        if not math.isfinite(lo):
            seeds += [hi - 0.5 * scale, hi - 1.7 * scale]
        elif not math.isfinite(hi):
            seeds += [lo + 0.5 * scale, lo + 1.7 * scale]
        else:
            seeds += [lo + f * (hi - lo) for f in (0.25, 0.5, 0.75)]
    return [x for x in dict.fromkeys(seeds) if x != 0.0 and x not in bps]


def detect_nonhyperbolic_cycles(
    pwl: PwlMap,
    max_period: int = 20,
    tol: float = PRODUCT_TOL,
    budget: tuple[int, int] = (1000, 4000),
    seeds: list[float] | None = None,
) -> list[CycleFinding]:
    """Find cycle words realized by orbits seeded across all partitions.

    Only applies to homogeneous maps with a genuine discontinuity; words
    are deduplicated up to rotation and presented starting at the largest
    cycle point.
    """
    from .core import homogeneity_check

    if not homogeneity_check(pwl).admissible:
        raise ValueError("map must be homogeneous with a nonzero breakpoint")
    if seeds is None:
        seeds = default_seeds(pwl)
    transient, samples = budget
    window = 2 * max_period + 1
    found: dict[tuple[str, ...], CycleFinding] = {}
    for seed in seeds:
        orb = iterate(pwl, seed, transient)
        if orb.terminated is not Termination.BUDGET_EXHAUSTED:
            continue
        tail = iterate(pwl, orb.states[-1], samples)
        if tail.terminated is not Termination.BUDGET_EXHAUSTED:
            continue
        p = _tail_period(tail.states[-window:], max_period, HOMOGENEOUS_TAIL_RTOL)
        if p is None:
            continue
        w = list(tail.word[-p:])
        key = min(tuple(w[k:] + w[:k]) for k in range(p))
        if key in found:
            continue
        pts, w_rot = _rotate_to_max(list(tail.states[-p - 1 : -1]), w)
        prod = _word_slope_product(pwl, w_rot)
        if abs(prod - 1.0) <= tol:
            finding = CycleFinding(
                w_rot, prod, CycleKind.NONHYPERBOLIC_SEGMENT, _word_segment(pwl, w_rot), pts
            )
        else:
            finding = CycleFinding(w_rot, prod, CycleKind.HYPERBOLIC_WOULD_BE, None, pts)
        found[key] = finding
    return list(found.values())


def basin_probe(
    pwl: PwlMap,
    x0_grid,
    budget: tuple[int, int] = (1000, 2000),
    **classify_kwargs,
) -> list[tuple[float, AttractorReport]]:
    """classify_attractor for every seed in the grid, in grid order."""
    return [
        (x0, classify_attractor(pwl, x0, budget=budget, **classify_kwargs)) for x0 in x0_grid
    ]


def merge_basins(
    probe: list[tuple[float, AttractorReport]],
) -> list[tuple[float, float, AttractorVerdict]]:
    """Collapse consecutive equal verdicts into (first seed, last seed, verdict) runs."""
    out: list[tuple[float, float, AttractorVerdict]] = []
    for x0, rep in probe:
        if out and out[-1][2] is rep.verdict:
            out[-1] = (out[-1][0], x0, rep.verdict)
        else:
            out.append((x0, x0, rep.verdict))
    return out


@dataclass(frozen=True)
class SensitivityReport:
    """Lockstep comparison of two nearby orbits.

    Weak sensitivity shows as a separation step (the orbits straddle a
    discontinuity) followed by a reapproach step; persistent separation
    without reapproach is the chaotic signature.
    """

    separation_threshold: float
    first_separation_step: int | None
    reapproach_step: int | None
    max_separation: float
    reapproach_bound: float


def sensitivity_probe(
    pwl: PwlMap,
    x0: float,
    delta: float,
    threshold: float,
    n: int,
    divergence_threshold: float = 1e8,
) -> SensitivityReport:
    """Iterate x0 and x0+delta together for n steps and record separation events.

    The reapproach bound is 10*delta*max|slope|: once separated, orbits
    of a quasiperiodic map come back under it after crossing the
    discontinuity.
    """
    if not 0 < delta < threshold:
        raise ValueError("need 0 < delta < threshold")
    bound = 10.0 * delta * max(abs(br.slope) for br in pwl.branches)
    x, y = x0, x0 + delta
    first_sep: int | None = None
    reapproach: int | None = None
    max_sep = abs(y - x)
    for k in range(1, n + 1):
        x = pwl.evaluate(x)
        y = pwl.evaluate(y)
        if abs(x) > divergence_threshold or abs(y) > divergence_threshold:
            raise Diverged(f"orbit diverged at step {k}")
        d = abs(y - x)
        if d > max_sep:
            max_sep = d
        if first_sep is None:
            if d > threshold:
                first_sep = k
        elif reapproach is None and d < bound:
            reapproach = k
    return SensitivityReport(threshold, first_sep, reapproach, max_sep, bound)


def attractor_intervals(
    pwl: PwlMap,
    x0: float,
    transient: int = 10_000,
    samples: int = 100_000,
    gap_merge_factor: float = GAP_MERGE_FACTOR,
) -> tuple[Interval, ...]:
    """Intervals covered by a long orbit tail (empirical attractor bands)."""
    orb = iterate(pwl, x0, transient)
    if orb.terminated is not Termination.BUDGET_EXHAUSTED:
        raise Diverged("orbit left the bounded regime during the transient")
    tail = iterate(pwl, orb.states[-1], samples)
    if tail.terminated is not Termination.BUDGET_EXHAUSTED:
        raise Diverged("orbit left the bounded regime during sampling")
    span = max(tail.states) - min(tail.states)
    if span == 0:
        return ()
    return merge_points_to_intervals(tail.states, gap_merge_factor * span)


def locate_band_interval(
    pwl: PwlMap,
    x0: float,
    band: int = -1,
    transient: int = 10_000,
    samples: int = 200_000,
    snap_horizon: int = 64,
    snap_slack: float = 0.08,
) -> Interval:
    """An attractor band with endpoints snapped to the critical orbit.

    band indexes the empirical bands left to right (default -1: the
    rightmost). Band endpoints of piecewise-linear maps lie on forward
    orbits of the one-sided breakpoint images, so snapping the sampled
    extremes to those points recovers them exactly, which is what
    first_return_map needs to produce clean pieces.
    """
    from .symbolic import critical_orbit_points, snap_interval

    bands = attractor_intervals(pwl, x0, transient, samples)
    if not bands:
        raise ValueError("orbit tail has no spread: dynamics are periodic or at a point")
    chosen = bands[band]
    candidates = critical_orbit_points(pwl, horizon=snap_horizon)
    return snap_interval(chosen.lo, chosen.hi, candidates, snap_slack * chosen.span)
