"""Finite pseudo-orbits: construction, perturbation, concatenation.

A pseudo-orbit is a finite indexed sequence y_a..y_b whose jump errors
d(f(y_n), y_{n+1}) stay below some delta.  Everything here is exact in exact
modes: the gap is an exact scalar and recomputing it reproduces the cached
value bit for bit.
"""

from __future__ import annotations

import random
from dataclasses import InitVar, dataclass
from fractions import Fraction
from math import lcm
from typing import Sequence

from .errors import CalibrationError, UnsupportedSystemError
from .scalars import FloatTol
from .systems import (
    CircleRotation,
    PermutationSystem,
    ShiftSpace,
    ToralAutomorphism,
)

# Perturbation offsets are drawn from a lattice of this resolution inside the
# allowed magnitude; a fixed denominator keeps all orbit points on one common
# denominator so downstream exact arithmetic stays cheap.
_JITTER_STEPS = 1 << 16


def max_metric(values, zero=Fraction(0)):
    """Maximum of metric values; FloatTol values compare by upper bound."""
    best = None
    for v in values:
        if best is None:
            best = v
        elif isinstance(v, FloatTol):
            if v.upper() > best.upper():
                best = v
        elif v > best:
            best = v
    return zero if best is None else best


@dataclass
class PseudoOrbit:
    """Points y_a..y_b of one system with their cached maximum jump error.

    The gap is computed from the points on first access; a caller that has
    already derived it exactly may supply it, and ``recompute_gap`` always
    re-derives the same value from the definition.
    """

    system: object
    start: int
    points: tuple
    known_gap: InitVar[object] = None

    def __post_init__(self, known_gap):
        self.points = tuple(self.points)
        if not self.points:
            raise ValueError("a pseudo-orbit needs at least one point")
        self._gap = known_gap

    @property
    def gap(self):
        if self._gap is None:
            self._gap = self.recompute_gap()
        return self._gap

    @property
    def index_range(self) -> tuple[int, int]:
        return self.start, self.start + len(self.points) - 1

    def __len__(self):
        return len(self.points)

    def point(self, n: int):
        a, b = self.index_range
        if not a <= n <= b:
            raise IndexError(f"index {n} outside [{a}, {b}]")
        return self.points[n - a]

    def recompute_gap(self):
        sys = self.system
        jumps = [sys.distance(sys.apply(self.points[i]), self.points[i + 1])
                 for i in range(len(self.points) - 1)]
        return max_metric(jumps)

    def is_valid(self, delta) -> bool:
        gap = self.gap
        if isinstance(gap, FloatTol):
            return not gap.definitely_gt(delta)
        return gap <= delta

    def gap_rational(self) -> Fraction:
        """Rational upper bound on the gap, for perturbation budgets."""
        gap = self.gap
        if isinstance(gap, (Fraction, int)):
            return Fraction(gap)
        if isinstance(gap, FloatTol):
            return Fraction(gap.upper()).limit_denominator(10**15)
        guess = Fraction(float(gap)).limit_denominator(10**15)
        step = Fraction(1, 10**12)
        while not gap <= guess:
            guess += step
            step *= 2
        return guess


def from_true_orbit(sys, x, a: int, b: int) -> PseudoOrbit:
    """The genuine orbit segment f^a(x)..f^b(x); gap 0 in exact modes."""
    if a > b:
        raise ValueError(f"empty index range [{a}, {b}]")
    pts = [sys.apply(x, a)]
    for _ in range(a, b):
        pts.append(sys.apply(pts[-1]))
    return PseudoOrbit(sys, a, pts)


def _jitter(rng: random.Random, h: Fraction) -> Fraction:
    return Fraction(rng.randrange(-_JITTER_STEPS, _JITTER_STEPS + 1),
                    _JITTER_STEPS) * h


def _perturb_toral(sys: ToralAutomorphism, po: PseudoOrbit, delta, rng):
    # Each point moves by at most h per coordinate; a jump then grows by at
    # most sqrt(d) * h * (|A|_inf + 1) < delta - gap.
    norm = max(sum(abs(v) for v in row) for row in sys.matrix)
    h = (delta - po.gap_rational()) / (2 * (norm + 1))
    pts = [sys.point(*[c + _jitter(rng, h) for c in p.coords])
           for p in po.points]
    return PseudoOrbit(sys, po.start, pts)


def _perturb_rotation(sys: CircleRotation, po: PseudoOrbit, delta, rng):
    h = (delta - po.gap) / 2
    return PseudoOrbit(sys, po.start,
                       [sys.point(p + _jitter(rng, h)) for p in po.points])


def _perturb_sft(sys: ShiftSpace, po: PseudoOrbit, delta, rng,
                 flip_span: int = 8):
    # Flipping symbols at index <= -k or >= k+1 keeps every flip at distance
    # >= k from index 0 even after the one-step shift inside the gap
    # computation, so the gap stays <= 2^-k <= delta.
    k = 0
    while Fraction(1, 2**k) > delta:
        k += 1
        if k > 64:
            return po  # delta below representable flip depth; nothing to do
    out = []
    for p in po.points:
        q = p
        for j in [*range(-k - flip_span, -k + 1),
                  *range(k + 1, k + flip_span + 2)]:
            if not rng.getrandbits(1):
                continue
            old = q.symbol(j)
            allowed = [s for s in range(sys.alphabet_size)
                       if s != old
                       and sys.transition[q.symbol(j - 1)][s]
                       and sys.transition[s][q.symbol(j + 1)]]
            if allowed:
                q = q.with_symbol(j, allowed[rng.randrange(len(allowed))])
        sys.validate_point(q)
        out.append(q)
    return PseudoOrbit(sys, po.start, out)


def _perturb_permutation(sys: PermutationSystem, po: PseudoOrbit, delta, rng):
    # Below the discrete metric's resolution no point can move at all.
    if delta < 1:
        return po
    pts = [rng.randrange(sys.size) for _ in po.points]
    return PseudoOrbit(sys, po.start, pts)


def perturb(sys, po: PseudoOrbit, delta, seed: int) -> PseudoOrbit:
    """A seeded perturbation of ``po`` whose gap stays at most ``delta``.

    The perturbation budget is delta minus the current gap; a pseudo-orbit
    already exceeding delta cannot be repaired by adding noise.
    """
    if delta == 0:
        return po
    if isinstance(po.gap, FloatTol):
        if po.gap.definitely_gt(delta):
            raise CalibrationError(f"gap {po.gap} already exceeds delta {delta}")
    elif not po.gap <= delta:
        raise CalibrationError(f"gap {po.gap} already exceeds delta {delta}")
    rng = random.Random(seed)
    if isinstance(sys, ToralAutomorphism):
        return _perturb_toral(sys, po, delta, rng)
    if isinstance(sys, CircleRotation):
        return _perturb_rotation(sys, po, delta, rng)
    if isinstance(sys, ShiftSpace):
        return _perturb_sft(sys, po, delta, rng)
    if isinstance(sys, PermutationSystem):
        return _perturb_permutation(sys, po, delta, rng)
    raise UnsupportedSystemError(
        f"perturbation is not defined for {type(sys).__name__}")


def perturbed_orbit(sys, x, a: int, b: int, delta, seed: int) -> PseudoOrbit:
    """``from_true_orbit`` followed by ``perturb`` in one pass.

    For an exact toral system with rational data the whole orbit lives on
    one integer lattice, so the true orbit is iterated with plain integer
    matrix arithmetic instead of field operations.  The draws and the
    resulting points are identical to the two-step construction.
    """
    if isinstance(delta, (int, Fraction)):
        delta_f = Fraction(delta)
    elif hasattr(delta, "is_rational") and delta.is_rational():
        delta_f = delta.as_fraction()
    else:
        delta_f = None
    if not (isinstance(sys, ToralAutomorphism) and sys.mode == "exact"
            and delta_f is not None and delta_f > 0 and a <= b
            and all(c.is_rational() for c in x.coords)):
        return perturb(sys, from_true_orbit(sys, x, a, b), delta, seed)
    fracs = [c.as_fraction() for c in x.coords]
    Q = lcm(*(f.denominator for f in fracs))
    vec = tuple(f.numerator * (Q // f.denominator) % Q for f in fracs)
    d = sys.dim
    if a:
        M = sys.matrix_power(a)
        vec = tuple(sum(M[i][j] * vec[j] for j in range(d)) % Q
                    for i in range(d))
    A = sys.matrix
    lattice = [vec]
    for _ in range(b - a):
        v = lattice[-1]
        lattice.append(tuple(sum(A[i][j] * v[j] for j in range(d)) % Q
                             for i in range(d)))
    norm = max(sum(abs(v) for v in row) for row in A)
    h = delta_f / (2 * (norm + 1))
    rng = random.Random(seed)
    pts = [sys.point(*[Fraction(c, Q) + _jitter(rng, h) for c in v])
           for v in lattice]
    return PseudoOrbit(sys, a, pts)


def concatenate(sys, segments: Sequence[tuple], connectors: Sequence[tuple]):
    """Glue orbit segments with connecting orbit pieces.

    ``segments`` is a list of (x_j, n_j), ``connectors`` a list of
    (y_j, X_j) of equal length.  Segment j contributes f^t(x_j) for
    t = 0..n_j - 1 and connector j contributes f^t(y_j) for t = 0..X_j - 1;
    the point f^{n_j}(x_j) the segment was heading toward is replaced by
    y_j, so the only jumps are the two seam jumps per block, each bounded by
    the diameter of the cell containing both endpoints.

    Returns (PseudoOrbit over [0, total - 1], switch times c_0..c_k) with
    c_0 = 0 and c_i the running sum of n_j + X_j.
    """
    if not segments:
        raise ValueError("segments must be nonempty")
    if len(connectors) != len(segments):
        raise ValueError("need exactly one connector per segment")
    pts = []
    c = [0]
    for (x, n), (y, X) in zip(segments, connectors):
        if n < 0:
            raise ValueError("segment lengths must be nonnegative")
        if X < 1:
            raise ValueError("connector times must be at least 1")
        cur = x
        for _ in range(n):
            pts.append(cur)
            cur = sys.apply(cur)
        cur = y
        for _ in range(X):
            pts.append(cur)
            cur = sys.apply(cur)
        c.append(c[-1] + n + X)
    return PseudoOrbit(sys, 0, pts), c
