"""Periodic points, heteroclinic intersections, and barycenter witnesses.

Everything here is exact: periodic points are enumerated from integer
linear algebra or admissible words, heteroclinic points are solved in the
eigenline coordinates of Q(sqrt(D)) or spliced symbolically, and every
"for all j beyond the window" condition is certified by a one-step
contraction inequality at the window edge.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from itertools import product

from .errors import (
    BudgetExceededError,
    EmptyInputError,
    CalibrationError,
    HorizonError,
    InternalInvariantError,
    NotRelatedError,
    UnsupportedSystemError,
)
from .scalars import SqrtVal
from .systems import ShiftSpace, SymbolicPoint, ToralAutomorphism

PERIOD_BOUND = 8
_SHELL_HORIZON = 64
_BRIDGE_HORIZON = 24


@dataclass(frozen=True)
class HyperbolicPeriodicPoint:
    """A periodic point with its minimal period and local-manifold size."""

    point: object
    period: int
    local_size: object
    stable_data: tuple
    unstable_data: tuple
    index: int


def _orbit(sys, point, period):
    pts = [point]
    for _ in range(period - 1):
        pts.append(sys.apply(pts[-1]))
    return pts


def _local_size(sys, orbit):
    if len(orbit) == 1:
        return Fraction(1, 10)
    best = None
    for i in range(len(orbit)):
        for j in range(i + 1, len(orbit)):
            d = sys.distance(orbit[i], orbit[j])
            if best is None or d < best:
                best = d
    size = best * Fraction(1, 10)
    if size < Fraction(1, 100):
        return Fraction(1, 100)
    return size


def _wrap_toral(sys, point, period):
    orbit = _orbit(sys, point, period)
    sp = sys.hyperbolic_splitting()
    return HyperbolicPeriodicPoint(
        point, period, _local_size(sys, orbit),
        stable_data=("eigenline", sp.v_s, sp.lam_s),
        unstable_data=("eigenline", sp.v_u, sp.lam_u),
        index=1)


def _wrap_sft(sys, point, period):
    return HyperbolicPeriodicPoint(
        point, period, Fraction(1, 2),
        stable_data=("agree-forward",),
        unstable_data=("agree-backward",),
        index=1)


def _minimal_word_period(word):
    k = len(word)
    for d in range(1, k + 1):
        if k % d == 0 and all(word[i] == word[i % d] for i in range(k)):
            return d
    return k


def periodic_points(sys, k: int, bound: int = PERIOD_BOUND):
    """All points with f^k(x) = x, each wrapped with its minimal period."""
    if k < 1:
        raise ValueError("period must be at least 1")
    if k > bound:
        raise BudgetExceededError(f"period {k} exceeds the bound {bound}")
    if isinstance(sys, ShiftSpace):
        out = []
        for word in sys.words(k):
            if not sys.transition[word[-1]][word[0]]:
                continue
            out.append(_wrap_sft(sys, SymbolicPoint.periodic(word),
                                 _minimal_word_period(word)))
        return out
    if isinstance(sys, ToralAutomorphism):
        if sys.mode != "exact" or sys.dim != 2:
            raise UnsupportedSystemError(
                "periodic-point enumeration needs an exact 2x2 toral system")
        M = sys.matrix_power(k)
        b00, b01 = M[0][0] - 1, M[0][1]
        b10, b11 = M[1][0], M[1][1] - 1
        det = b00 * b11 - b01 * b10
        if det == 0:
            raise InternalInvariantError("A^k - I is singular")
        n = abs(det)
        seen = {}
        for mx in range(n):
            for my in range(n):
                x = Fraction(b11 * mx - b01 * my, det) % 1
                y = Fraction(b00 * my - b10 * mx, det) % 1
                seen[(x, y)] = True
        if len(seen) != n:
            raise InternalInvariantError(
                f"found {len(seen)} solutions, expected {n}")
        out = []
        for fx, fy in sorted(seen):
            pt = sys.point(fx, fy)
            period = k
            for d in range(1, k):
                if k % d == 0 and sys.apply(pt, d) == pt:
                    period = d
                    break
            out.append(_wrap_toral(sys, pt, period))
        return out
    raise UnsupportedSystemError(
        f"no periodic-point enumeration for {type(sys).__name__}")


def as_periodic(sys, point, bound: int = 64) -> HyperbolicPeriodicPoint:
    """Wrap a point after finding its minimal period by direct iteration."""
    cur = point
    for d in range(1, bound + 1):
        cur = sys.apply(cur)
        if cur == point:
            if isinstance(sys, ShiftSpace):
                return _wrap_sft(sys, point, d)
            return _wrap_toral(sys, point, d)
    raise ValueError(f"point is not periodic within {bound} steps")


def index_of(sys, p: HyperbolicPeriodicPoint) -> int:
    """Dimension of the stable direction (uniform over the system)."""
    if isinstance(sys, ToralAutomorphism):
        sp = sys.hyperbolic_splitting()
        return 1 if abs(sp.lam_s) < 1 else 0
    return 1


def check_same_index(sys, p: HyperbolicPeriodicPoint,
                     q: HyperbolicPeriodicPoint) -> bool:
    return index_of(sys, p) == index_of(sys, q)


# -- heteroclinic intersections ----------------------------------------------


def _shells(horizon: int):
    for r in range(horizon + 1):
        for mx in range(-r, r + 1):
            for my in range(-r, r + 1):
                if max(abs(mx), abs(my)) == r:
                    yield mx, my


def _heteroclinic_toral(sys, p: HyperbolicPeriodicPoint,
                        q: HyperbolicPeriodicPoint):
    """First genuine solution of p + t*v_u = q + s*v_s + m over the shells.

    Returns (z, t, s); |t| controls the backward approach to the orbit of
    p along the unstable line and |s| the forward approach to the orbit
    of q along the stable line.
    """
    sp = sys.hyperbolic_splitting()
    su, ss = sp.v_u[1], sp.v_s[1]
    dv = su - ss
    exclude = [pt for pt in _orbit(sys, p.point, p.period)
               if pt in _orbit(sys, q.point, q.period)]
    px, py = p.point.coords
    qx, qy = q.point.coords
    for mx, my in _shells(_SHELL_HORIZON):
        wx = qx - px + mx
        wy = qy - py + my
        t = (wy - ss * wx) / dv
        s = (wy - su * wx) / dv
        z = sys.point(px + t, py + t * su)
        if any(z == e for e in exclude):
            continue
        return z, t, s
    raise HorizonError(
        f"no eigenline intersection within {_SHELL_HORIZON} shells")


def _heteroclinic_sft(sys, p: HyperbolicPeriodicPoint,
                      q: HyperbolicPeriodicPoint):
    """Least splice past-of-p | bridge | future-of-q, lex-first bridge.

    Returns (z, L) where z agrees with p strictly below index 0 and with
    q's own sequence from index L on.
    """
    pp, qq = p.point, q.point
    a = pp.symbol(-1)
    exclude = [pt for pt in _orbit(sys, pp, p.period)
               if pt in _orbit(sys, qq, q.period)]
    left = pp.window(0, p.period - 1)
    reachable_any = False
    for L in range(_BRIDGE_HORIZON + 1):
        b = qq.symbol(L)
        if not sys.reachable_in(L + 1, a, b):
            continue
        reachable_any = True
        right = qq.window(L, L + q.period - 1)
        if L == 0:
            candidates = [()]
        else:
            candidates = (mid for mid in product(range(sys.alphabet_size),
                                                 repeat=L)
                          if sys.word_admissible((a,) + mid + (b,)))
        for bridge in candidates:
            z = SymbolicPoint(left, bridge, right, 0)
            if any(z == e for e in exclude):
                continue
            sys.validate_point(z)
            return z, L
    if not reachable_any:
        raise NotRelatedError(
            f"symbol {b} of the target word is unreachable from {a}")
    raise HorizonError(
        f"no genuine splice with bridge length <= {_BRIDGE_HORIZON}")


def heteroclinic_point(sys, p: HyperbolicPeriodicPoint,
                       q: HyperbolicPeriodicPoint):
    """A point of W^u(orbit of p) intersected with W^s(orbit of q)."""
    if isinstance(sys, ToralAutomorphism):
        if sys.mode != "exact" or sys.dim != 2:
            raise UnsupportedSystemError(
                "heteroclinic solving needs an exact 2x2 toral system")
        return _heteroclinic_toral(sys, p, q)[0]
    if isinstance(sys, ShiftSpace):
        return _heteroclinic_sft(sys, p, q)[0]
    raise UnsupportedSystemError(
        f"no heteroclinic construction for {type(sys).__name__}")


# -- barycenter construction ---------------------------------------------------


@dataclass(frozen=True)
class BarycenterResult:
    """x whose backward orbit tracks p and, after X steps, forward tracks q."""

    x: object
    X: int
    N: int
    epsilon: object
    n_1: int
    n_2: int
    p: HyperbolicPeriodicPoint
    q: HyperbolicPeriodicPoint


@dataclass(frozen=True)
class BarycenterWitness:
    """Pairs (z_m, X_m) for depths m = 1..n with shared parameters."""

    pairs: tuple
    epsilon: object
    p: HyperbolicPeriodicPoint
    q: HyperbolicPeriodicPoint
    N: int

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        for _, X in self.pairs:
            if not 0 <= X <= self.N:
                raise ValueError(f"X = {X} outside [0, {self.N}]")


def _violation_threshold(sys, z, anchor, eps, backward: bool, tail_data):
    """Least n0 with d(f^(+-n)(z), f^(+-n)(anchor)) < eps for ALL n >= n0.

    A contraction bound (planar eigenline norm, or symbolic agreement
    spreading one index per step) certifies the tail beyond a finite
    window; inside the window every distance is checked exactly.
    """
    if isinstance(sys, ShiftSpace):
        # bound(n) = 2^(shift - n), monotone decreasing in n
        shift = int(tail_data)
        window = max(shift, 0)
        while not Fraction(1, 2 ** (window - shift)) < eps:
            window += 1
    else:
        t = tail_data  # offset along the eigenline through the anchor
        sp = sys.hyperbolic_splitting()
        slope = sp.v_u[1] if backward else sp.v_s[1]
        contract = (1 / sp.lam_u) if backward else sp.lam_s
        bound2 = t * t * (1 + slope * slope)  # squared planar distance at n=0
        c2 = contract * contract
        window = 0
        while window < 4096:
            if SqrtVal(bound2) < eps:
                break
            bound2 = bound2 * c2
            window += 1
        else:
            raise InternalInvariantError("contraction never beats epsilon")
    sign = -1 if backward else 1
    last_violation = -1
    cur = z
    anc = anchor
    for n in range(window + 1):
        if not sys.distance(cur, anc) < eps:
            last_violation = n
        if n < window:
            cur = sys.apply(cur, sign)
            anc = sys.apply(anc, sign)
    return last_violation + 1


def barycenter_point(sys, p: HyperbolicPeriodicPoint,
                     q: HyperbolicPeriodicPoint, epsilon,
                     n_1: int, n_2: int) -> BarycenterResult:
    """x = f^(-N_1)(z) for the least certified common multiple N_1.

    N_1 is the least positive common multiple of the two periods such
    that the heteroclinic point z stays epsilon-close to the orbit of p
    at all times <= -N_1 and to the orbit of q at all times >= N_1; the
    result is then re-verified directly on the requested index ranges.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if n_1 < 0 or n_2 < 0:
        raise ValueError("check depths must be nonnegative")
    if isinstance(sys, ToralAutomorphism):
        z, t, s = _heteroclinic_toral(sys, p, q)
        nb = _violation_threshold(sys, z, p.point, epsilon, True, t)
        nf = _violation_threshold(sys, z, q.point, epsilon, False, s)
    elif isinstance(sys, ShiftSpace):
        z, L = _heteroclinic_sft(sys, p, q)
        nb = _violation_threshold(sys, z, p.point, epsilon, True, 0)
        nf = _violation_threshold(sys, z, q.point, epsilon, False, L - 1)
    else:
        raise UnsupportedSystemError(
            f"no barycenter construction for {type(sys).__name__}")
    step = lcm(p.period, q.period)
    need = max(nb, nf, 1)
    n1 = step * -(-need // step)
    x = sys.apply(z, -n1)
    X = 2 * n1

    cur = sys.apply(x, -n_1)
    anc = sys.apply(p.point, -n_1)
    for i in range(-n_1, 1):
        if not sys.distance(cur, anc) < epsilon:
            raise InternalInvariantError(
                f"backward deviation at index {i} reached epsilon")
        if i < 0:
            cur = sys.apply(cur)
            anc = sys.apply(anc)
    cur = sys.apply(x, X)
    anc = q.point
    for i in range(0, n_2 + 1):
        if not sys.distance(cur, anc) < epsilon:
            raise InternalInvariantError(
                f"forward deviation at index {i} reached epsilon")
        if i < n_2:
            cur = sys.apply(cur)
            anc = sys.apply(anc)
    return BarycenterResult(x, X, X, epsilon, n_1, n_2, p, q)


def verify_barycenter(sys, x, X: int, p: HyperbolicPeriodicPoint,
                      q: HyperbolicPeriodicPoint, epsilon,
                      n_1: int, n_2: int) -> bool:
    """Re-walk the two tracking inequality ranges of a barycenter result."""
    cur = sys.apply(x, -n_1)
    anc = sys.apply(p.point, -n_1)
    for i in range(-n_1, 1):
        if not sys.distance(cur, anc) < epsilon:
            return False
        if i < 0:
            cur = sys.apply(cur)
            anc = sys.apply(anc)
    cur = sys.apply(x, X)
    anc = q.point
    for i in range(0, n_2 + 1):
        if not sys.distance(cur, anc) < epsilon:
            return False
        if i < n_2:
            cur = sys.apply(cur)
            anc = sys.apply(anc)
    return True


def cut_witness(result: BarycenterResult, depth: int) -> BarycenterWitness:
    """Witness pairs at depths 1..depth read off a barycenter result.

    The barycenter point satisfies the tracking inequalities at every
    depth up to its construction range, so each pair reuses (x, X).
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    pairs = tuple((result.x, result.X) for _ in range(depth))
    return BarycenterWitness(pairs, result.epsilon, result.p, result.q,
                             result.N)


def extract_heteroclinic(sys, w: BarycenterWitness):
    """(z, X) from the most frequent X value at its deepest occurrence.

    The selected pair is re-certified against the witness inequalities;
    the certificate is the finite stand-in for membership of z in the
    unstable set of p and of f^X(z) in the stable set of q.
    """
    if not w.pairs:
        raise EmptyInputError("witness has no pairs")
    counts = Counter(X for _, X in w.pairs)
    top = max(counts.values())
    X = min(x for x, c in counts.items() if c == top)
    m = max(i + 1 for i, (_, xm) in enumerate(w.pairs) if xm == X)
    z = w.pairs[m - 1][0]

    cur, anc = z, w.p.point
    for j in range(m + 1):
        if not sys.distance(cur, anc) <= w.epsilon:
            raise CalibrationError(
                f"witness {m} violates the backward inequality at -{j}")
        cur = sys.apply(cur, -1)
        anc = sys.apply(anc, -1)
    cur, anc = sys.apply(z, X), w.q.point
    for j in range(m + 1):
        if not sys.distance(cur, anc) <= w.epsilon:
            raise CalibrationError(
                f"witness {m} violates the forward inequality at {j}")
        cur = sys.apply(cur)
        anc = sys.apply(anc)
    return z, X
