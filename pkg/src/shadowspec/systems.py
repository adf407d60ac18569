"""The four concrete dynamical systems and their point types.

Each system exposes the same minimal surface: ``apply(x, k)`` iterates the
map (negative k uses the inverse), ``distance(x, y)`` evaluates the metric
exactly in exact modes, and ``validate_point(x)`` rejects points that do not
belong to the space.  Everything downstream (pseudo-orbits, shadowing, the
specification construction) is written against this surface only.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

from .errors import (
    MalformedPointError,
    NotHyperbolicError,
    UnsupportedSystemError,
)
from .scalars import FloatTol, QuadraticNumber, SqrtVal

Word = tuple[int, ...]


def _primitive(word: Word) -> Word:
    """Shortest word whose repetition generates ``word``."""
    n = len(word)
    for period in range(1, n + 1):
        if n % period == 0 and word == word[:period] * (n // period):
            return word[:period]
    return word


class SymbolicPoint:
    """An eventually periodic bi-infinite symbol sequence.

    The realized sequence repeats ``left`` infinitely to the left of the
    ``core`` block and ``right`` infinitely to the right of it.  ``offset``
    places index 0 at position ``offset`` relative to the start of the core,
    so the core occupies absolute indices [-offset, -offset + len(core)).
    Tails are kept primitive and the core minimal, which bounds the window
    any equality or distance scan has to look at.
    """

    __slots__ = ("left", "core", "right", "offset")

    def __init__(self, left: Sequence[int], core: Sequence[int],
                 right: Sequence[int], offset: int = 0):
        left, core, right = tuple(left), tuple(core), tuple(right)
        if not left or not right:
            raise MalformedPointError("tail words must be nonempty")
        left, core, right, offset = self._canonical(left, core, right, offset)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "core", core)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "offset", offset)

    def __setattr__(self, name, value):
        raise AttributeError("SymbolicPoint is immutable")

    @staticmethod
    def _canonical(left: Word, core: Word, right: Word,
                   offset: int) -> tuple[Word, Word, Word, int]:
        left, right = _primitive(left), _primitive(right)
        # Absorb core symbols that already agree with the adjacent tail;
        # each absorption rotates the tail so its phase stays aligned.
        # Dropping the first core symbol moves the core start right by one,
        # which shows up as an offset decrement.
        while core and core[-1] == right[-1]:
            core = core[:-1]
            right = right[-1:] + right[:-1]
        while core and core[0] == left[0]:
            core = core[1:]
            left = left[1:] + left[:1]
            offset -= 1
        if not core:
            # Fully periodic when both tails realize one periodic sequence.
            p, q = len(left), len(right)
            m = lcm(p, q)
            if all(left[i % p] == right[i % q] for i in range(m)):
                word = _primitive(tuple(right[i % q] for i in range(m)))
                return word, (), word, offset
        return left, core, right, offset

    @classmethod
    def periodic(cls, word: Sequence[int]) -> "SymbolicPoint":
        """The purely periodic point realizing word[n mod len] at index n."""
        w = tuple(word)
        if not w:
            raise MalformedPointError("empty period word")
        return cls(w, (), w, 0)

    def symbol(self, n: int) -> int:
        i = n + self.offset
        if i < 0:
            return self.left[i % len(self.left)]
        i -= len(self.core)
        if i < 0:
            return self.core[i]
        return self.right[i % len(self.right)]

    def window(self, a: int, b: int) -> Word:
        """Symbols at indices a..b inclusive."""
        return tuple(self.symbol(n) for n in range(a, b + 1))

    def shifted(self, k: int) -> "SymbolicPoint":
        return SymbolicPoint(self.left, self.core, self.right, self.offset + k)

    def core_span(self) -> tuple[int, int]:
        """Absolute index range [start, end) occupied by the core."""
        start = -self.offset
        return start, start + len(self.core)

    def with_symbol(self, n: int, symbol: int) -> "SymbolicPoint":
        """A copy whose sequence holds ``symbol`` at index ``n``.

        Widening the core changes where each tail picks up, so both tails are
        rotated to keep their phase against the new core span.
        """
        start, end = self.core_span()
        lo, hi = min(start, n), max(end, n + 1)
        symbols = [self.symbol(i) for i in range(lo, hi)]
        symbols[n - lo] = symbol
        p, q = len(self.left), len(self.right)
        ls = (lo + self.offset) % p
        rs = (hi + self.offset - len(self.core)) % q
        left = self.left[ls:] + self.left[:ls]
        right = self.right[rs:] + self.right[:rs]
        return SymbolicPoint(left, tuple(symbols), right, -lo)

    def scan_bound(self, other: "SymbolicPoint") -> int:
        """Window radius that certifies equality if no mismatch appears.

        Beyond both cores the sequences are periodic, so agreement over one
        least common multiple of the tail periods on each side extends to
        agreement everywhere on that side.
        """
        s1, e1 = self.core_span()
        s2, e2 = other.core_span()
        right_edge = max(e1, e2) + lcm(len(self.right), len(other.right))
        left_edge = min(s1, s2) - lcm(len(self.left), len(other.left))
        return max(abs(right_edge), abs(left_edge)) + 1

    def __eq__(self, other):
        if not isinstance(other, SymbolicPoint):
            return NotImplemented
        if (self.left, self.core, self.right, self.offset) == \
           (other.left, other.core, other.right, other.offset):
            return True
        bound = self.scan_bound(other)
        return all(self.symbol(n) == other.symbol(n)
                   for k in range(bound + 1)
                   for n in ((k, -k) if k else (0,)))

    __hash__ = None  # equality is semantic; structural hashing would split classes

    def __repr__(self):
        word = lambda w: "".join(map(str, w)) or "-"
        return (f"SymbolicPoint({word(self.left)}~{word(self.core)}~"
                f"{word(self.right)}@{self.offset})")


@dataclass(frozen=True)
class TorusPoint:
    """A point of the d-torus with exact or tracked-float coordinates."""

    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))

    def __iter__(self):
        return iter(self.coords)

    def __len__(self):
        return len(self.coords)

    def __repr__(self):
        return f"TorusPoint({', '.join(str(c) for c in self.coords)})"


@dataclass(frozen=True)
class HyperbolicSplitting:
    """Eigendata of a 2x2 hyperbolic integer matrix over Q(sqrt(D)).

    Eigenvectors are normalized to first coordinate 1 (their slope is the
    canonical datum; a unit Euclidean normalization would leave the field).
    """

    D: int
    lam_u: QuadraticNumber
    lam_s: QuadraticNumber
    v_u: tuple[QuadraticNumber, QuadraticNumber]
    v_s: tuple[QuadraticNumber, QuadraticNumber]

    def unit_float(self, which: str) -> tuple[float, float]:
        vx, vy = self.v_u if which == "u" else self.v_s
        fx, fy = float(vx), float(vy)
        norm = (fx * fx + fy * fy) ** 0.5
        return fx / norm, fy / norm


class ShiftSpace:
    """A two-sided subshift of finite type over symbols 0..r-1.

    ``transition[a][b] == 1`` allows symbol b immediately after symbol a.
    The metric is 2^-k where k is the smallest |index| at which two
    sequences differ.
    """

    kind = "sft"

    def __init__(self, transition: Sequence[Sequence[int]]):
        T = tuple(tuple(int(v) for v in row) for row in transition)
        r = len(T)
        if r < 2 or any(len(row) != r for row in T):
            raise ValueError("transition matrix must be square with r >= 2")
        if r > 10:
            raise ValueError("alphabets beyond 10 symbols are not supported by the digit encoding")
        if any(v not in (0, 1) for row in T for v in row):
            raise ValueError("transition entries must be 0 or 1")
        if any(not any(row) for row in T):
            raise ValueError("every symbol needs at least one successor")
        if any(not any(T[a][b] for a in range(r)) for b in range(r)):
            raise ValueError("every symbol needs at least one predecessor")
        self.transition = T
        self.alphabet_size = r
        self._reach = [tuple((1 if a == b else 0) for b in range(r)) for a in range(r)]
        self._powers = [self._reach, T]  # boolean reachability at each step count
        self.irreducible = self._compute_irreducible()

    # -- structure -----------------------------------------------------------

    def _compute_irreducible(self) -> bool:
        r = self.alphabet_size
        reach = [[bool(self.transition[a][b]) for b in range(r)] for a in range(r)]
        for _ in range(r):
            for a in range(r):
                for b in range(r):
                    if not reach[a][b]:
                        reach[a][b] = any(reach[a][c] and self.transition[c][b]
                                          for c in range(r))
        return all(reach[a][b] for a in range(r) for b in range(r))

    def reachable_in(self, steps: int, a: int, b: int) -> bool:
        """Whether a path of exactly ``steps`` edges goes from a to b."""
        r = self.alphabet_size
        while len(self._powers) <= steps:
            prev = self._powers[-1]
            nxt = tuple(
                tuple(1 if any(prev[x][c] and self.transition[c][y] for c in range(r)) else 0
                      for y in range(r))
                for x in range(r)
            )
            self._powers.append(nxt)
        return bool(self._powers[steps][a][b])

    def successors(self, a: int) -> tuple[int, ...]:
        return tuple(b for b in range(self.alphabet_size) if self.transition[a][b])

    def predecessors(self, b: int) -> tuple[int, ...]:
        return tuple(a for a in range(self.alphabet_size) if self.transition[a][b])

    def word_admissible(self, word: Sequence[int]) -> bool:
        return all(self.transition[a][b] for a, b in zip(word, word[1:]))

    def words(self, length: int) -> Iterable[Word]:
        """All admissible words of the given length, lexicographic order."""
        r = self.alphabet_size
        if length == 0:
            yield ()
            return
        stack = [(s,) for s in range(r - 1, -1, -1)]
        while stack:
            w = stack.pop()
            if len(w) == length:
                yield w
                continue
            for s in range(r - 1, -1, -1):
                if self.transition[w[-1]][s]:
                    stack.append(w + (s,))

    def path_between(self, a: int, b: int, steps: int) -> Word | None:
        """Lexicographically smallest path a -> b using exactly ``steps`` edges.

        Returns the ``steps - 1`` intermediate symbols, or None.
        """
        if steps < 1:
            return () if steps == 0 and a == b else None
        if not self.reachable_in(steps, a, b):
            return None
        out = []
        cur = a
        for remaining in range(steps - 1, 0, -1):
            for s in self.successors(cur):
                if self.reachable_in(remaining, s, b):
                    out.append(s)
                    cur = s
                    break
            else:
                return None
        if not self.transition[cur][b]:
            return None
        return tuple(out)

    def point_through(self, word: Sequence[int], at: int = 0) -> SymbolicPoint:
        """A canonical point whose sequence shows ``word`` starting at index ``at``.

        Both sides extend by always walking the smallest admissible symbol;
        each walk enters a cycle after at most r steps and that cycle becomes
        the periodic tail.
        """
        w = tuple(word)
        if not w:
            raise MalformedPointError("empty word")
        if not self.word_admissible(w):
            raise MalformedPointError(f"inadmissible word {w}")
        seen = {w[-1]: 0}
        walk = [w[-1]]
        while True:
            nxt = self.successors(walk[-1])[0]
            if nxt in seen:
                right = tuple(walk[seen[nxt]:])
                lead_r = tuple(walk[1:])
                break
            seen[nxt] = len(walk)
            walk.append(nxt)
        seen = {w[0]: 0}
        walk = [w[0]]
        while True:
            nxt = self.predecessors(walk[-1])[0]
            if nxt in seen:
                left = tuple(reversed(walk[seen[nxt]:]))
                lead_l = tuple(reversed(walk[1:]))
                break
            seen[nxt] = len(walk)
            walk.append(nxt)
        core = lead_l + w + lead_r
        return SymbolicPoint(left, core, right, len(lead_l) - at)

    # -- dynamics ------------------------------------------------------------

    def validate_point(self, x) -> None:
        if not isinstance(x, SymbolicPoint):
            raise MalformedPointError(f"expected SymbolicPoint, got {type(x).__name__}")
        r = self.alphabet_size
        for w in (x.left, x.core, x.right):
            if any(s < 0 or s >= r for s in w):
                raise MalformedPointError("symbol outside alphabet")
        p, q = len(x.left), len(x.right)
        for i in range(p):
            if not self.transition[x.left[i]][x.left[(i + 1) % p]]:
                raise MalformedPointError("left tail not admissible")
        for i in range(q):
            if not self.transition[x.right[i]][x.right[(i + 1) % q]]:
                raise MalformedPointError("right tail not admissible")
        start, end = x.core_span()
        for n in range(start - p - 1, end + q + 1):
            if not self.transition[x.symbol(n)][x.symbol(n + 1)]:
                raise MalformedPointError(f"inadmissible pair at index {n}")

    def apply(self, x: SymbolicPoint, k: int = 1) -> SymbolicPoint:
        return x.shifted(k)

    def distance(self, x: SymbolicPoint, y: SymbolicPoint) -> Fraction:
        bound = x.scan_bound(y)
        for k in range(bound + 1):
            if x.symbol(k) != y.symbol(k) or x.symbol(-k) != y.symbol(-k):
                return Fraction(1, 2**k)
        return Fraction(0)

    def diameter(self) -> Fraction:
        return Fraction(1)

    def describe(self) -> str:
        rows = ";".join("".join(str(v) for v in row) for row in self.transition)
        return f"sft r={self.alphabet_size} T={rows}"


def _mat_mul(A, B):
    n, m, k = len(A), len(B[0]), len(B)
    return tuple(tuple(sum(A[i][t] * B[t][j] for t in range(k)) for j in range(m))
                 for i in range(n))


def _mat_vec(A, v):
    return tuple(sum(A[i][j] * v[j] for j in range(len(v))) for i in range(len(A)))


def _identity(d):
    return tuple(tuple(1 if i == j else 0 for j in range(d)) for i in range(d))


def _det(M) -> int:
    d = len(M)
    if d == 1:
        return M[0][0]
    if d == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    total = 0
    for j in range(d):
        minor = tuple(row[:j] + row[j + 1:] for row in M[1:])
        total += (-1) ** j * M[0][j] * _det(minor)
    return total


def _adjugate(M):
    d = len(M)
    cof = []
    for i in range(d):
        row = []
        for j in range(d):
            minor = tuple(r[:j] + r[j + 1:] for k, r in enumerate(M) if k != i)
            row.append((-1) ** (i + j) * _det(minor))
        cof.append(tuple(row))
    return tuple(tuple(cof[j][i] for j in range(d)) for i in range(d))


class ToralAutomorphism:
    """x -> A x (mod 1) for an integer matrix with |det A| = 1.

    Construction rejects matrices with an eigenvalue on the unit circle.
    For d = 2 the check and all arithmetic are exact over Q(sqrt(D)) with
    D = trace^2 - 4 det; higher dimensions fall back to tracked floats.
    """

    kind = "toral"

    def __init__(self, matrix: Sequence[Sequence[int]], mode: str | None = None):
        A = tuple(tuple(int(v) for v in row) for row in matrix)
        d = len(A)
        if d < 2 or any(len(row) != d for row in A):
            raise ValueError("matrix must be square, d >= 2")
        det = _det(A)
        if det not in (1, -1):
            raise ValueError(f"|det| must be 1, got {det}")
        self.matrix = A
        self.dim = d
        self.det = det
        self.inverse_matrix = tuple(tuple(v * det for v in row) for row in _adjugate(A))
        if mode is None:
            mode = "exact" if d == 2 else "float"
        if mode == "exact" and d != 2:
            raise UnsupportedSystemError("exact coordinates require d = 2")
        self.mode = mode
        self._pow_cache: dict[int, tuple] = {0: _identity(d), 1: A, -1: self.inverse_matrix}
        if d == 2:
            tr = A[0][0] + A[1][1]
            disc = tr * tr - 4 * det
            # Unit-circle eigenvalues happen exactly when the characteristic
            # polynomial has a root at +-1 or a complex pair (disc <= 0).
            p1 = 1 - tr + det
            pm1 = 1 + tr + det
            if disc <= 0 or p1 == 0 or pm1 == 0:
                raise NotHyperbolicError(f"matrix {A} has an eigenvalue of modulus 1")
            self.D = disc
            self.trace = tr
            self._splitting = self._exact_splitting()
        else:
            self.D = 0
            self._splitting = None
            self._check_float_hyperbolic()

    def _check_float_hyperbolic(self):
        import numpy

        eig = numpy.linalg.eigvals(numpy.array(self.matrix, dtype=float))
        margin = min(abs(abs(v) - 1.0) for v in eig)
        if margin < 1e-9:
            raise NotHyperbolicError(
                f"cannot certify hyperbolicity: eigenvalue within {margin:.2e} of the unit circle")

    def _exact_splitting(self) -> HyperbolicSplitting:
        D, tr = self.D, self.trace
        half = Fraction(1, 2)
        root = QuadraticNumber.sqrt_d(D)
        lam_plus = (QuadraticNumber.from_rational(D, tr) + root) * half
        lam_minus = (QuadraticNumber.from_rational(D, tr) - root) * half
        if abs(lam_plus) > abs(lam_minus):
            lam_u, lam_s = lam_plus, lam_minus
        else:
            lam_u, lam_s = lam_minus, lam_plus
        a, b = self.matrix[0]
        c, dd = self.matrix[1]
        one = QuadraticNumber.from_rational(D, 1)

        def eigenvector(lam):
            if b != 0:
                return (one, (lam - a) / b)
            if c != 0:
                return ((lam - dd) / c, one)
            raise NotHyperbolicError("diagonal unimodular matrices are never hyperbolic")

        return HyperbolicSplitting(D, lam_u, lam_s, eigenvector(lam_u), eigenvector(lam_s))

    # -- scalar plumbing -------------------------------------------------------

    def scalar(self, value) -> QuadraticNumber | FloatTol:
        if self.mode == "exact":
            if isinstance(value, QuadraticNumber):
                if value.D != self.D and value.q != 0:
                    raise MalformedPointError("coordinate from a different field")
                return QuadraticNumber(self.D, value.p, value.q, value.r)
            return QuadraticNumber.from_rational(self.D, value)
        if isinstance(value, FloatTol):
            return value
        return FloatTol.exact(value) if isinstance(value, (int, Fraction)) else FloatTol(float(value))

    def point(self, *coords) -> TorusPoint:
        if len(coords) == 1 and isinstance(coords[0], (tuple, list)):
            coords = tuple(coords[0])
        if len(coords) != self.dim:
            raise MalformedPointError(f"expected {self.dim} coordinates")
        return TorusPoint(tuple(self.scalar(c).mod1() for c in coords))

    def validate_point(self, x) -> None:
        if not isinstance(x, TorusPoint) or len(x.coords) != self.dim:
            raise MalformedPointError(f"expected a {self.dim}-torus point")
        for c in x.coords:
            if self.mode == "exact" and not isinstance(c, QuadraticNumber):
                raise MalformedPointError("exact mode requires field coordinates")
            if self.mode == "float" and not isinstance(c, FloatTol):
                raise MalformedPointError("float mode requires tracked-float coordinates")

    def matrix_power(self, k: int) -> tuple:
        if k not in self._pow_cache:
            base = self.matrix if k > 0 else self.inverse_matrix
            acc = self._pow_cache[1 if k > 0 else -1]
            for i in range(2, abs(k) + 1):
                acc = _mat_mul(acc, base)
                self._pow_cache[i if k > 0 else -i] = acc
            return self._pow_cache[k]
        return self._pow_cache[k]

    def apply(self, x: TorusPoint, k: int = 1) -> TorusPoint:
        self.validate_point(x)
        M = self.matrix_power(k)
        coords = tuple(
            sum((self.scalar(M[i][j]) * x.coords[j] for j in range(self.dim)),
                start=self.scalar(0)).mod1()
            for i in range(self.dim))
        return TorusPoint(coords)

    def distance(self, x: TorusPoint, y: TorusPoint):
        """Euclidean distance between nearest lattice translates.

        The squared norm splits per coordinate, so each coordinate picks its
        own nearest wrap independently.
        """
        self.validate_point(x)
        self.validate_point(y)
        if self.mode == "exact":
            total = self.scalar(0)
            for cx, cy in zip(x.coords, y.coords):
                t = (cx - cy).mod1()
                w = min(t, 1 - t)
                total = total + w * w
            return SqrtVal(total)
        total = FloatTol(0.0)
        for cx, cy in zip(x.coords, y.coords):
            t = (cx - cy).mod1()
            w = abs(t) if t.value <= 0.5 else abs(1 - t)
            total = total + w * w
        return total.sqrt()

    def diameter(self) -> Fraction:
        return Fraction(self.dim, 1)  # loose bound; only order of magnitude matters

    def hyperbolic_splitting(self) -> HyperbolicSplitting:
        if self._splitting is None:
            raise UnsupportedSystemError("exact splitting is only available for d = 2")
        return self._splitting

    def describe(self) -> str:
        rows = ";".join(" ".join(str(v) for v in row) for row in self.matrix)
        return f"toral d={self.dim} mode={self.mode} A={rows}"


class CircleRotation:
    """x -> x + angle (mod 1) on the circle, with exact rational state."""

    kind = "rotation"

    def __init__(self, angle: Fraction):
        angle = Fraction(angle)
        if not 0 <= angle < 1:
            raise ValueError("angle must lie in [0, 1)")
        self.angle = angle

    def validate_point(self, x) -> None:
        if not isinstance(x, Fraction):
            raise MalformedPointError("rotation points are exact rationals")
        if not 0 <= x < 1:
            raise MalformedPointError("point outside [0, 1)")

    def point(self, value) -> Fraction:
        f = Fraction(value)
        return f - (f // 1)

    def apply(self, x: Fraction, k: int = 1) -> Fraction:
        self.validate_point(x)
        v = x + k * self.angle
        return v - (v // 1)

    def distance(self, x: Fraction, y: Fraction) -> Fraction:
        self.validate_point(x)
        self.validate_point(y)
        t = abs(x - y)
        return min(t, 1 - t)

    def diameter(self) -> Fraction:
        return Fraction(1, 2)

    def describe(self) -> str:
        return f"rotation angle={self.angle}"


class PermutationSystem:
    """A permutation of m >= 1 points with the discrete 0/1 metric."""

    kind = "permutation"

    def __init__(self, images: Sequence[int]):
        perm = tuple(int(v) for v in images)
        m = len(perm)
        if sorted(perm) != list(range(m)):
            raise ValueError("not a permutation of 0..m-1")
        self.images = perm
        self.size = m
        self._cycle_of = {}
        seen = set()
        for start in range(m):
            if start in seen:
                continue
            cyc = [start]
            nxt = perm[start]
            while nxt != start:
                cyc.append(nxt)
                nxt = perm[nxt]
            for pos, v in enumerate(cyc):
                self._cycle_of[v] = (tuple(cyc), pos)
                seen.add(v)

    def validate_point(self, x) -> None:
        if not isinstance(x, int) or isinstance(x, bool) or not 0 <= x < self.size:
            raise MalformedPointError(f"point must be an integer in [0, {self.size})")

    def apply(self, x: int, k: int = 1) -> int:
        self.validate_point(x)
        cyc, pos = self._cycle_of[x]
        return cyc[(pos + k) % len(cyc)]

    def distance(self, x: int, y: int) -> Fraction:
        self.validate_point(x)
        self.validate_point(y)
        return Fraction(0) if x == y else Fraction(1)

    def diameter(self) -> Fraction:
        return Fraction(1)

    def describe(self) -> str:
        return f"permutation {' '.join(str(v) for v in self.images)}"


System = ShiftSpace | ToralAutomorphism | CircleRotation | PermutationSystem


def full_shift(r: int = 2) -> ShiftSpace:
    return ShiftSpace([[1] * r for _ in range(r)])


def golden_mean_shift() -> ShiftSpace:
    return ShiftSpace([[1, 1], [1, 0]])


def cat_map() -> ToralAutomorphism:
    return ToralAutomorphism([[2, 1], [1, 1]])
