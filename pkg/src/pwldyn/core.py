"""Exact representation and iteration of 1D piecewise-linear maps.

A map is a finite ordered list of affine branches separated by strictly
increasing breakpoints. Every breakpoint carries an explicit closure flag
saying which adjacent branch owns the breakpoint value, so evaluation is
total: every finite real resolves to exactly one branch. Maps whose
branches all have zero offset share the fixed point at the origin and are
the "homogeneous" class the rest of the package analyzes.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .errors import (
    BranchCountMismatch,
    NonFiniteInput,
    NonFiniteParameter,
    NonFiniteState,
    NonMonotoneBreakpoints,
)

Word = tuple[str, ...]

DIVERGENCE_THRESHOLD = 1e8
ORIGIN_TOLERANCE = 1e-12

LEFT = "left"
RIGHT = "right"


@dataclass(frozen=True)
class Branch:
    """One affine piece: x -> slope*x + offset, tagged with its partition label."""

    slope: float
    offset: float = 0.0
    label: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.slope) and math.isfinite(self.offset)):
            raise NonFiniteParameter(f"branch {self.label!r}: slope/offset must be finite")

    @property
    def homogeneous(self) -> bool:
        return self.offset == 0.0

    def __call__(self, x: float) -> float:
        return self.slope * x + self.offset


@dataclass(frozen=True)
class Interval:
    """Open or closed interval with lo < hi strictly."""

    lo: float
    hi: float
    closed_lo: bool = True
    closed_hi: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise NonFiniteParameter("interval endpoints must be finite")
        if not self.lo < self.hi:
            raise ValueError(f"interval requires lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def span(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float) -> bool:
        if self.lo < x < self.hi:
            return True
        if x == self.lo:
            return self.closed_lo
        if x == self.hi:
            return self.closed_hi
        return False


class Termination(Enum):
    BUDGET_EXHAUSTED = "budget_exhausted"
    DIVERGED = "diverged"
    CONVERGED_TO_FIXED_POINT = "converged_to_fixed_point"


@dataclass
class Orbit:
    """Forward trajectory: states[k+1] = map(states[k]); word holds the branch labels used."""

    states: list[float]
    word: Word
    terminated: Termination

    def __len__(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class PwlMap:
    """Piecewise-linear map over breakpoint-delimited partitions.

    breakpoints: strictly increasing; branches: one per partition, i.e.
    len(branches) == len(breakpoints) + 1; closures: per breakpoint,
    "left" or "right", naming the adjacent branch that owns the
    breakpoint value itself.
    """

    breakpoints: tuple[float, ...]
    branches: tuple[Branch, ...]
    closures: tuple[str, ...]

    def __post_init__(self):
        bps = self.breakpoints
        for b in bps:
            if not math.isfinite(b):
                raise NonFiniteParameter(f"breakpoint {b!r} is not finite")
        if any(bps[i] >= bps[i + 1] for i in range(len(bps) - 1)):
            raise NonMonotoneBreakpoints(f"breakpoints must strictly increase: {bps}")
        if len(self.branches) != len(bps) + 1:
            raise BranchCountMismatch(
                f"{len(self.branches)} branches for {len(bps)} breakpoints"
            )
        if len(self.closures) != len(bps):
            raise BranchCountMismatch(
                f"{len(self.closures)} closures for {len(bps)} breakpoints"
            )
        for c in self.closures:
            if c not in (LEFT, RIGHT):
                raise ValueError(f"closure must be 'left' or 'right', got {c!r}")
        seen = set()
        for br in self.branches:
            if br.label in seen:
                raise ValueError(f"duplicate branch label {br.label!r}")
            seen.add(br.label)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(br.label for br in self.branches)

    @property
    def slopes(self) -> tuple[float, ...]:
        return tuple(br.slope for br in self.branches)

    @property
    def offsets(self) -> tuple[float, ...]:
        return tuple(br.offset for br in self.branches)

    @property
    def homogeneous(self) -> bool:
        return all(br.offset == 0.0 for br in self.branches)

    def branch_index(self, x: float) -> int:
        """Index of the branch owning x, resolving breakpoint ties by closure."""
        bps = self.breakpoints
        i = bisect_left(bps, x)
        if i < len(bps) and bps[i] == x and self.closures[i] == RIGHT:
            i += 1
        return i

    def branch_at(self, x: float) -> Branch:
        return self.branches[self.branch_index(x)]

    def branch_by_label(self, label: str) -> Branch:
        for br in self.branches:
            if br.label == label:
                return br
        from .errors import UnknownSymbol

        raise UnknownSymbol(f"no branch labelled {label!r} (have {self.labels})")

    def partition_bounds(self, i: int) -> tuple[float, float, bool, bool]:
        """(lo, hi, owns_lo, owns_hi) for partition i; infinite ends are unowned."""
        bps = self.breakpoints
        lo = bps[i - 1] if i > 0 else -math.inf
        hi = bps[i] if i < len(bps) else math.inf
        owns_lo = i > 0 and self.closures[i - 1] == RIGHT
        owns_hi = i < len(bps) and self.closures[i] == LEFT
        return lo, hi, owns_lo, owns_hi

    def evaluate(self, x: float) -> float:
        if not math.isfinite(x):
            raise NonFiniteInput(f"cannot evaluate at {x!r}")
        return self.branches[self.branch_index(x)](x)

    __call__ = evaluate


def build_map(
    breakpoints: Sequence[float],
    branches: Iterable[Branch | tuple],
    closures: Sequence[str],
) -> PwlMap:
    """Validate and assemble a PwlMap; branches may be Branch or (slope, offset, label)."""
    built = tuple(b if isinstance(b, Branch) else Branch(*b) for b in branches)
    return PwlMap(tuple(float(b) for b in breakpoints), built, tuple(closures))


def iterate(
    pwl: PwlMap,
    x0: float,
    n: int,
    divergence_threshold: float = DIVERGENCE_THRESHOLD,
    origin_tolerance: float = ORIGIN_TOLERANCE,
) -> Orbit:
    """Iterate up to n steps, stopping early on divergence or convergence to the origin.

    Convergence fires when the owning branch is contracting with zero
    offset and |x| < origin_tolerance, or when x is exactly 0 on a
    zero-offset branch (the orbit is then constant).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if divergence_threshold <= 0 or origin_tolerance <= 0:
        raise ValueError("thresholds must be positive")
    if not math.isfinite(x0):
        raise NonFiniteInput(f"x0 = {x0!r}")

    bps = pwl.breakpoints
    nb = len(bps)
    right_owned = tuple(c == RIGHT for c in pwl.closures)
    slopes = pwl.slopes
    offsets = pwl.offsets
    labels = pwl.labels
    bl = bisect_left

    states = [x0]
    word: list[str] = []
    terminated = Termination.BUDGET_EXHAUSTED
    x = x0
    for _ in range(n):
        if abs(x) > divergence_threshold:
            terminated = Termination.DIVERGED
            break
        i = bl(bps, x)
        if i < nb and bps[i] == x and right_owned[i]:
            i += 1
        if offsets[i] == 0.0:
            if x == 0.0 or (abs(slopes[i]) < 1.0 and abs(x) < origin_tolerance):
                terminated = Termination.CONVERGED_TO_FIXED_POINT
                break
        x = slopes[i] * x + offsets[i]
        if not math.isfinite(x):
            raise NonFiniteState(f"orbit overflowed after {len(word) + 1} steps")
        word.append(labels[i])
        states.append(x)
    else:
        if abs(x) > divergence_threshold:
            terminated = Termination.DIVERGED
    return Orbit(states, tuple(word), terminated)


@dataclass(frozen=True)
class HomogeneityReport:
    """Whether the map is in the shared-fixed-point class; offenders carry offsets."""

    admissible: bool
    offset_branches: tuple[str, ...]


def homogeneity_check(pwl: PwlMap) -> HomogeneityReport:
    """Admissible iff every offset is exactly 0 and some breakpoint is nonzero.

    A zero breakpoint with zero offsets is only a kink at the shared fixed
    point, not a discontinuity, so a map whose sole breakpoint is 0 fails.
    """
    offenders = tuple(br.label for br in pwl.branches if br.offset != 0.0)
    discontinuous = any(b != 0.0 for b in pwl.breakpoints)
    return HomogeneityReport(admissible=not offenders and discontinuous, offset_branches=offenders)


@dataclass(frozen=True)
class BranchFixedPoint:
    """Fixed point of one branch's affine extension.

    x is None when slope == 1 with nonzero offset (no fixed point). line
    is True when slope == 1 with zero offset (every point fixed). actual
    means x lies inside the branch's own partition per closures;
    otherwise the fixed point is virtual.
    """

    label: str
    x: float | None
    actual: bool
    hyperbolic: bool
    line: bool = False


def branch_fixed_points(pwl: PwlMap) -> tuple[BranchFixedPoint, ...]:
    out = []
    for i, br in enumerate(pwl.branches):
        if br.slope == 1.0:
            if br.offset == 0.0:
                out.append(BranchFixedPoint(br.label, None, True, False, line=True))
            else:
                out.append(BranchFixedPoint(br.label, None, False, False))
            continue
        x = br.offset / (1.0 - br.slope)
        actual = pwl.branch_index(x) == i
        out.append(BranchFixedPoint(br.label, x, actual, abs(br.slope) != 1.0))
    return tuple(out)


def map_to_json(pwl: PwlMap, indent: int | None = None) -> str:
    """Serialize; decimal repr round-trips every double exactly."""
    payload = {
        "breakpoints": list(pwl.breakpoints),
        "slopes": list(pwl.slopes),
        "offsets": list(pwl.offsets),
        "labels": list(pwl.labels),
        "closures": list(pwl.closures),
    }
    return json.dumps(payload, indent=indent)


def map_from_json(text: str) -> PwlMap:
    payload = json.loads(text)
    try:
        branches = [
            Branch(s, o, lb)
            for s, o, lb in zip(
                payload["slopes"], payload["offsets"], payload["labels"], strict=True
            )
        ]
        return build_map(payload["breakpoints"], branches, payload["closures"])
    except KeyError as exc:
        raise ValueError(f"map definition missing field {exc}") from exc
