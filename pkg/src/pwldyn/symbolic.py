"""Symbolic itineraries, word composition, and exact first-return maps.

A word is a finite sequence of branch labels. Composing a map's branches
along a word folds it into one affine function, so orbits of a
homogeneous map never escape the class of linear maps fixing the origin.
First-return maps are built exactly: sub-intervals of constant return
word are delimited by affine preimages of the parent map's breakpoints
and of the return interval's endpoints, never by bisection on samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from random import Random

from .core import DIVERGENCE_THRESHOLD, Interval, PwlMap, Word
from .errors import Diverged, DivergedFromInterval, NoReturn, NonFiniteState

# slack for the is-this-image-inside-the-interval test, scaled by interval
# magnitude; split points are exact affine preimages so the only error is
# their own final rounding
_EDGE_RTOL = 1e-10


def word_to_string(word: Word) -> str:
    """Join labels; falls back to comma separation for multi-char labels."""
    if all(len(s) == 1 for s in word):
        return "".join(word)
    return ",".join(word)


def itinerary(pwl: PwlMap, x0: float, length: int,
              divergence_threshold: float = DIVERGENCE_THRESHOLD) -> Word:
    """Branch labels visited over exactly `length` steps from x0."""
    if length < 1:
        raise ValueError("length must be >= 1")
    word = []
    x = x0
    for _ in range(length):
        if abs(x) > divergence_threshold:
            raise Diverged(f"orbit of {x0!r} diverged after {len(word)} steps")
        br = pwl.branch_at(x)
        word.append(br.label)
        x = br.slope * x + br.offset
        if not math.isfinite(x):
            raise NonFiniteState(f"orbit of {x0!r} overflowed after {len(word)} steps")
    return tuple(word)


@dataclass(frozen=True)
class ComposedBranch:
    """Affine fold of the branches along a word, first symbol applied first."""

    word: Word
    slope: float
    offset: float

    def __call__(self, x: float) -> float:
        return self.slope * x + self.offset


def compose_word(pwl: PwlMap, word: Word) -> ComposedBranch:
    """Fold word into one affine map; slope is the plain product in word order."""
    if not word:
        raise ValueError("word must be non-empty")
    slope = 1.0
    offset = 0.0
    for label in word:
        br = pwl.branch_by_label(label)
        slope = br.slope * slope
        offset = br.slope * offset + br.offset
    return ComposedBranch(tuple(word), slope, offset)


@dataclass(frozen=True)
class ReturnPiece:
    """Maximal sub-interval of constant first-return word."""

    lo: float
    hi: float
    branch: ComposedBranch

    @property
    def word(self) -> Word:
        return self.branch.word

    @property
    def interval(self) -> Interval:
        return Interval(self.lo, self.hi)


@dataclass(frozen=True)
class ReturnMap:
    """First-return map on an interval: ordered pieces with composed branches."""

    interval: Interval
    pieces: tuple[ReturnPiece, ...]

    @property
    def boundaries(self) -> tuple[float, ...]:
        """Interior piece boundaries (orbits of these merge with a parent breakpoint)."""
        return tuple(p.lo for p in self.pieces[1:])

    @property
    def words(self) -> tuple[Word, ...]:
        return tuple(p.word for p in self.pieces)

    def evaluate(self, x: float) -> float:
        for p in self.pieces:
            if p.lo <= x <= p.hi:
                return p.branch(x)
        raise ValueError(f"{x!r} outside return interval [{self.interval.lo}, {self.interval.hi}]")

    __call__ = evaluate


def first_return_map(
    pwl: PwlMap,
    interval: Interval,
    max_word_length: int = 10_000,
    divergence_threshold: float = DIVERGENCE_THRESHOLD,
) -> ReturnMap:
    """Build the exact first-return map of pwl on interval.

    Sub-intervals are propagated forward as exact affine images; a
    segment splits where its image straddles a parent breakpoint (the
    next symbol differs) or a return-interval endpoint (one part is back,
    the other is not). Raises NoReturn if any sub-interval fails to
    return within max_word_length symbols.
    """
    lo, hi = interval.lo, interval.hi
    edge_tol = _EDGE_RTOL * max(1.0, abs(lo), abs(hi))
    bps = pwl.breakpoints
    branches = pwl.branches
    bidx = pwl.branch_index

    pieces: list[ReturnPiece] = []
    # (a, b, slope, offset, word): image of x in (a,b) after word is slope*x+offset
    stack: list[tuple[float, float, float, float, tuple[str, ...]]] = [
        (lo, hi, 1.0, 0.0, ())
    ]
    while stack:
        a, b, s, o, w = stack.pop()
        if len(w) >= max_word_length:
            raise NoReturn(0.5 * (a + b), max_word_length)
        ya, yb = s * a + o, s * b + o
        ylo, yhi = (ya, yb) if ya <= yb else (yb, ya)
        if max(abs(ylo), abs(yhi)) > divergence_threshold:
            raise DivergedFromInterval(
                f"image of ({a}, {b}) after {word_to_string(w)!r} exceeded {divergence_threshold}"
            )
        cuts = sorted((bp - o) / s for bp in bps if ylo < bp < yhi)
        xs = [a, *[c for c in cuts if a < c < b], b]
        for aa, bb in zip(xs, xs[1:]):
            if not aa < bb:
                continue
            br = branches[bidx(s * (0.5 * (aa + bb)) + o)]
            s2 = br.slope * s
            o2 = br.slope * o + br.offset
            w2 = w + (br.label,)
            y1, y2 = s2 * aa + o2, s2 * bb + o2
            if y1 > y2:
                y1, y2 = y2, y1
            if y1 >= lo - edge_tol and y2 <= hi + edge_tol:
                pieces.append(ReturnPiece(aa, bb, ComposedBranch(w2, s2, o2)))
            elif y2 <= lo + edge_tol or y1 >= hi - edge_tol:
                stack.append((aa, bb, s2, o2, w2))
            else:
                ecuts = sorted((e - o2) / s2 for e in (lo, hi) if y1 < e < y2)
                exs = [aa, *[c for c in ecuts if aa < c < bb], bb]
                for p, q in zip(exs, exs[1:]):
                    if not p < q:
                        continue
                    ym = s2 * (0.5 * (p + q)) + o2
                    if lo <= ym <= hi:
                        pieces.append(ReturnPiece(p, q, ComposedBranch(w2, s2, o2)))
                    else:
                        stack.append((p, q, s2, o2, w2))
    pieces.sort(key=lambda pc: pc.lo)
    return ReturnMap(interval, tuple(pieces))


@dataclass(frozen=True)
class ReturnOracleReport:
    """Brute-force cross-check of a return map against plain iteration."""

    samples: int
    word_mismatches: int
    no_returns: int
    max_rel_error: float
    max_return_steps: int

    @property
    def clean(self) -> bool:
        return self.word_mismatches == 0 and self.no_returns == 0


def return_oracle_check(
    pwl: PwlMap,
    return_map: ReturnMap,
    sample_count: int = 1000,
    seed: int = 0,
    margin: float = 1e-3,
) -> ReturnOracleReport:
    """Sample interior points per piece and re-derive their first return by iteration.

    Mismatched words and missing returns are counted, not raised, so the
    report doubles as a negative control against the wrong parent map.
    """
    lo, hi = return_map.interval.lo, return_map.interval.hi
    rng = Random(seed)
    cap = max(4 * max((len(p.word) for p in return_map.pieces), default=1), 64)
    samples = 0
    mismatches = 0
    no_returns = 0
    max_err = 0.0
    max_steps = 0
    for piece in return_map.pieces:
        for _ in range(sample_count):
            u = margin + (1.0 - 2.0 * margin) * rng.random()
            x = piece.lo + u * (piece.hi - piece.lo)
            samples += 1
            word = []
            y = x
            returned = False
            for _ in range(cap):
                br = pwl.branch_at(y)
                word.append(br.label)
                y = br.slope * y + br.offset
                if lo <= y <= hi:
                    returned = True
                    break
            if not returned:
                no_returns += 1
                continue
            max_steps = max(max_steps, len(word))
            if tuple(word) != piece.word:
                mismatches += 1
                continue
            predicted = piece.branch(x)
            err = abs(predicted - y) / max(abs(y), 1e-300)
            max_err = max(max_err, err)
    return ReturnOracleReport(samples, mismatches, no_returns, max_err, max_steps)


def serialize_return_map(rm: ReturnMap) -> str:
    """One text record per piece: lo, hi, word, slope, offset (exact decimals)."""
    lines = [f"interval,{rm.interval.lo!r},{rm.interval.hi!r}"]
    for p in rm.pieces:
        lines.append(
            f"{p.lo!r},{p.hi!r},{word_to_string(p.word)},{p.branch.slope!r},{p.branch.offset!r}"
        )
    return "\n".join(lines) + "\n"


def critical_values(pwl: PwlMap) -> tuple[float, ...]:
    """One-sided images of every breakpoint (both adjacent branches applied)."""
    vals = []
    for i, bp in enumerate(pwl.breakpoints):
        vals.append(pwl.branches[i](bp))
        vals.append(pwl.branches[i + 1](bp))
    return tuple(vals)


def critical_orbit_points(pwl: PwlMap, horizon: int = 64,
                          divergence_threshold: float = DIVERGENCE_THRESHOLD) -> tuple[float, ...]:
    """Forward orbit points of all one-sided breakpoint images, deduplicated.

    Attractor band endpoints of PWL maps sit on these orbits, so they are
    the candidates an interval search snaps to.
    """
    pts = set()
    for v in critical_values(pwl):
        x = v
        for _ in range(horizon):
            if abs(x) > divergence_threshold:
                break
            pts.add(x)
            x = pwl.evaluate(x)
    return tuple(sorted(pts))


def snap_interval(approx_lo: float, approx_hi: float, candidates: tuple[float, ...],
                  slack: float) -> Interval:
    """Move approximate endpoints to the nearest candidate within slack, if any."""
    lo, hi = approx_lo, approx_hi
    near_lo = [c for c in candidates if abs(c - lo) <= slack]
    if near_lo:
        lo = min(near_lo, key=lambda c: abs(c - lo))
    near_hi = [c for c in candidates if abs(c - hi) <= slack]
    if near_hi:
        hi = min(near_hi, key=lambda c: abs(c - hi))
    if not lo < hi:
        lo, hi = approx_lo, approx_hi
    return Interval(lo, hi)
