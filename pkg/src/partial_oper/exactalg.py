"""Exact rationals, univariate polynomials over Q and polynomial matrices.

Everything here is exact: rationals are ``gmpy2.mpq`` values and polynomials
are immutable coefficient tuples (constant term first).  The module basis
routine :func:`module_basis` is the single primitive behind kernels,
saturations, quotients and the parabolic endomorphism sheaves used elsewhere.
"""
from __future__ import annotations

from itertools import combinations
from typing import Iterable, Sequence

from gmpy2 import mpq

Rat = mpq

#: Degree of the zero polynomial.  A float sentinel so that ``deg <= bound``
#: comparisons work, while any accidental arithmetic stays at -inf.
NEG_INF = float("-inf")

ZERO = mpq(0)
ONE = mpq(1)


class ExactAlgebraError(ValueError):
    pass


def rat(x) -> mpq:
    """Coerce ints, strings ("p/q"), Fractions and mpq to a canonical mpq."""
    if isinstance(x, str):
        x = x.strip()
    return mpq(x)


def format_rat(x) -> str:
    return str(mpq(x))


# ----------------------------------------------------------------------------
# polynomials


class Poly:
    """Polynomial in the affine coordinate t with rational coefficients."""

    __slots__ = ("c",)

    def __init__(self, coeffs: Iterable = ()):
        c = [mpq(a) for a in coeffs]
        while c and not c[-1]:
            c.pop()
        self.c = tuple(c)

    @classmethod
    def _raw(cls, c: list) -> "Poly":
        while c and not c[-1]:
            c.pop()
        p = object.__new__(cls)
        p.c = tuple(c)
        return p

    @classmethod
    def const(cls, a) -> "Poly":
        return cls((a,))

    @classmethod
    def monomial(cls, n: int, a=1) -> "Poly":
        return cls([0] * n + [a])

    @classmethod
    def from_roots(cls, roots: Iterable) -> "Poly":
        p = POLY_ONE
        for r in roots:
            p = p * Poly((-mpq(r), 1))
        return p

    @property
    def degree(self):
        return len(self.c) - 1 if self.c else NEG_INF

    def is_zero(self) -> bool:
        return not self.c

    def __bool__(self):
        return bool(self.c)

    def coeff(self, n: int) -> mpq:
        return self.c[n] if 0 <= n < len(self.c) else ZERO

    @property
    def lc(self) -> mpq:
        return self.c[-1] if self.c else ZERO

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.c == other.c
        if isinstance(other, (int, type(ZERO))):
            return self.c == Poly.const(other).c
        return NotImplemented

    def __hash__(self):
        return hash(self.c)

    def __repr__(self):
        return f"Poly({[format_rat(a) for a in self.c]})"

    def __str__(self):
        if not self.c:
            return "0"
        terms = []
        for i, a in enumerate(self.c):
            if a:
                terms.append(format_rat(a) + ("" if i == 0 else "*t" if i == 1 else f"*t^{i}"))
        return " + ".join(terms)

    def __add__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(other)
        a, b = self.c, other.c
        if len(a) < len(b):
            a, b = b, a
        c = list(a)
        for i, x in enumerate(b):
            c[i] = c[i] + x
        return Poly._raw(c)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw([-a for a in self.c])

    def __sub__(self, other):
        if not isinstance(other, Poly):
            other = Poly.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return Poly.const(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            other = mpq(other)
            if not other:
                return POLY_ZERO
            return Poly._raw([a * other for a in self.c])
        a, b = self.c, other.c
        if not a or not b:
            return POLY_ZERO
        c = [ZERO] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    c[i + j] += x * y
        return Poly._raw(c)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = POLY_ONE
        for _ in range(n):
            out = out * self
        return out

    def divmod(self, other: "Poly"):
        if not other.c:
            raise ZeroDivisionError("polynomial division by zero")
        r = list(self.c)
        db = len(other.c) - 1
        inv = 1 / other.c[-1]
        if len(r) - 1 < db:
            return POLY_ZERO, self
        q = [ZERO] * (len(r) - db)
        for k in range(len(r) - 1 - db, -1, -1):
            f = r[k + db] * inv
            q[k] = f
            if f:
                for j, y in enumerate(other.c):
                    r[k + j] -= f * y
        return Poly._raw(q), Poly._raw(r[:db])

    def __floordiv__(self, other):
        return self.divmod(other)[0]

    def __mod__(self, other):
        return self.divmod(other)[1]

    def exact_div(self, other: "Poly") -> "Poly":
        q, r = self.divmod(other)
        if r.c:
            raise ExactAlgebraError("inexact polynomial division")
        return q

    def __call__(self, x):
        acc = ZERO
        for a in reversed(self.c):
            acc = acc * x + a
        return acc

    def derivative(self) -> "Poly":
        return Poly._raw([i * a for i, a in enumerate(self.c)][1:])

    def monic(self) -> "Poly":
        if not self.c:
            return self
        return self * (1 / self.c[-1])

    def to_json(self) -> list[str]:
        return [format_rat(a) for a in self.c]

    @classmethod
    def from_json(cls, data: Sequence) -> "Poly":
        return cls(rat(a) for a in data)


POLY_ZERO = Poly()
POLY_ONE = Poly((1,))
T = Poly((0, 1))


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic gcd; ``poly_gcd(0, 0) == 0``."""
    while b.c:
        a, b = b, a % b
    return a.monic()


def poly_gcd_all(polys: Iterable[Poly]) -> Poly:
    g = POLY_ZERO
    for p in polys:
        g = poly_gcd(g, p)
        if g == POLY_ONE:
            break
    return g


# ----------------------------------------------------------------------------
# linear algebra over Q


def rref(rows: list[list]) -> tuple[list[list], list[int]]:
    """Reduced row echelon form of a rational matrix (copy); returns (R, pivots)."""
    m = [list(r) for r in rows]
    if not m:
        return m, []
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, len(m)):
            if m[i][c]:
                piv = i
                break
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        row = m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                mi = m[i]
                m[i] = [a - f * b for a, b in zip(mi, row)]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank_q(rows: list[list]) -> int:
    return len(rref(rows)[1])


def nullspace_q(rows: list[list], ncols: int) -> list[list]:
    """Basis of {x : rows . x = 0}, one vector per free column, in column order."""
    if not rows:
        return [[ONE if i == j else ZERO for i in range(ncols)] for j in range(ncols)]
    R, piv = rref(rows)
    pivset = set(piv)
    basis = []
    for f in range(ncols):
        if f in pivset:
            continue
        v = [ZERO] * ncols
        v[f] = ONE
        for i, pc in enumerate(piv):
            v[pc] = -R[i][f]
        basis.append(v)
    return basis


def column_span_basis(cols: list[list], dim: int) -> list[list]:
    """Independent subset-free basis (rref rows) of the span of the given vectors."""
    if not cols:
        return []
    R, _ = rref(cols)
    return R


def solve_q(a: list[list], b: list[list]) -> list[list] | None:
    """Solve a.X = b over Q (any solution) or None if inconsistent."""
    n = len(a[0]) if a else 0
    k = len(b[0]) if b else 0
    aug = [list(ra) + list(rb) for ra, rb in zip(a, b)]
    R, piv = rref(aug)
    if any(p >= n for p in piv):
        return None
    X = [[ZERO] * k for _ in range(n)]
    for i, pc in enumerate(piv):
        for j in range(k):
            X[pc][j] = R[i][n + j]
    return X


class Echelon:
    """Incrementally maintained row space; ``add`` reports whether rank grew."""

    def __init__(self, ncols: int):
        self.ncols = ncols
        self.rows: list[tuple[int, list]] = []

    def reduce(self, v):
        v = list(v)
        for pc, row in self.rows:
            f = v[pc]
            if f:
                v = [a - f * b for a, b in zip(v, row)]
        return v

    def contains(self, v) -> bool:
        return not any(self.reduce(v))

    def add(self, v) -> bool:
        v = self.reduce(v)
        for pc, x in enumerate(v):
            if x:
                inv = 1 / x
                v = [a * inv for a in v]
                new = []
                for qc, row in self.rows:
                    f = row[pc]
                    if f:
                        row = [a - f * b for a, b in zip(row, v)]
                    new.append((qc, row))
                self.rows = new + [(pc, v)]
                return True
        return False

    @property
    def rank(self) -> int:
        return len(self.rows)


# ----------------------------------------------------------------------------
# polynomial matrices


class PolyMatrix:
    """Immutable rows x cols matrix of :class:`Poly`."""

    __slots__ = ("rows", "cols", "e")

    def __init__(self, entries, rows: int | None = None, cols: int | None = None):
        e = tuple(tuple(x if isinstance(x, Poly) else Poly.const(x) for x in r) for r in entries)
        self.rows = len(e) if rows is None else rows
        self.cols = (len(e[0]) if e else 0) if cols is None else cols
        if len(e) != self.rows or any(len(r) != self.cols for r in e):
            raise ExactAlgebraError("inconsistent matrix dimensions")
        self.e = e

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "PolyMatrix":
        return cls([[POLY_ZERO] * cols for _ in range(rows)], rows, cols)

    @classmethod
    def identity(cls, n: int) -> "PolyMatrix":
        return cls([[POLY_ONE if i == j else POLY_ZERO for j in range(n)] for i in range(n)], n, n)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[Poly]], rows: int) -> "PolyMatrix":
        return cls([[columns[j][i] for j in range(len(columns))] for i in range(rows)], rows, len(columns))

    @classmethod
    def constant(cls, m: Sequence[Sequence]) -> "PolyMatrix":
        m = [list(r) for r in m]
        return cls([[Poly.const(x) for x in r] for r in m], len(m), len(m[0]) if m else 0)

    def __getitem__(self, ij):
        i, j = ij
        return self.e[i][j]

    def __eq__(self, other):
        return isinstance(other, PolyMatrix) and (self.rows, self.cols, self.e) == (other.rows, other.cols, other.e)

    def __hash__(self):
        return hash((self.rows, self.cols, self.e))

    def __repr__(self):
        return f"PolyMatrix({self.rows}x{self.cols}, {[[str(x) for x in r] for r in self.e]})"

    def column(self, j: int) -> list[Poly]:
        return [self.e[i][j] for i in range(self.rows)]

    def columns(self) -> list[list[Poly]]:
        return [self.column(j) for j in range(self.cols)]

    def select_columns(self, idx: Sequence[int]) -> "PolyMatrix":
        return PolyMatrix([[r[j] for j in idx] for r in self.e], self.rows, len(idx))

    def select_rows(self, idx: Sequence[int]) -> "PolyMatrix":
        return PolyMatrix([self.e[i] for i in idx], len(idx), self.cols)

    @property
    def T(self) -> "PolyMatrix":
        return PolyMatrix([[self.e[i][j] for i in range(self.rows)] for j in range(self.cols)], self.cols, self.rows)

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        return PolyMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.e, other.e)], self.rows, self.cols)

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        return PolyMatrix([[a - b for a, b in zip(r, s)] for r, s in zip(self.e, other.e)], self.rows, self.cols)

    def __neg__(self):
        return PolyMatrix([[-a for a in r] for r in self.e], self.rows, self.cols)

    def scale(self, p) -> "PolyMatrix":
        return PolyMatrix([[a * p for a in r] for r in self.e], self.rows, self.cols)

    def __matmul__(self, other: "PolyMatrix") -> "PolyMatrix":
        if self.cols != other.rows:
            raise ExactAlgebraError("dimension mismatch in product")
        out = []
        ocols = other.columns()
        for r in self.e:
            row = []
            for col in ocols:
                acc = POLY_ZERO
                for a, b in zip(r, col):
                    if a.c and b.c:
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return PolyMatrix(out, self.rows, other.cols)

    def hstack(self, other: "PolyMatrix") -> "PolyMatrix":
        return PolyMatrix([r + s for r, s in zip(self.e, other.e)], self.rows, self.cols + other.cols)

    def vstack(self, other: "PolyMatrix") -> "PolyMatrix":
        return PolyMatrix(self.e + other.e, self.rows + other.rows, self.cols)

    def derivative(self) -> "PolyMatrix":
        return PolyMatrix([[a.derivative() for a in r] for r in self.e], self.rows, self.cols)

    def evaluate(self, x) -> list[list]:
        return [[a(x) for a in r] for r in self.e]

    def is_zero(self) -> bool:
        return all(not a.c for r in self.e for a in r)

    def max_degree(self):
        return max((a.degree for r in self.e for a in r), default=NEG_INF)

    def rank(self) -> int:
        """Rank over Q(t), certified by evaluation at enough distinct points."""
        full = min(self.rows, self.cols)
        if full == 0:
            return 0
        bound = 0
        for r in self.e:
            d = max((a.degree for a in r), default=NEG_INF)
            if d != NEG_INF:
                bound += int(d)
        best = 0
        for x in range(bound + 1):
            best = max(best, rank_q(self.evaluate(mpq(x))))
            if best == full:
                break
        return best

    def to_json(self) -> list:
        return [[a.to_json() for a in r] for r in self.e]

    @classmethod
    def from_json(cls, data, rows: int | None = None, cols: int | None = None) -> "PolyMatrix":
        e = [[Poly.from_json(a) for a in r] for r in data]
        return cls(e, len(e) if rows is None else rows, (len(e[0]) if e else 0) if cols is None else cols)


def det(m: PolyMatrix) -> Poly:
    """Determinant by fraction-free (Bareiss) elimination."""
    n = m.rows
    if n != m.cols:
        raise ExactAlgebraError("determinant of a non-square matrix")
    if n == 0:
        return POLY_ONE
    a = [list(r) for r in m.e]
    sign = 1
    prev = POLY_ONE
    for k in range(n - 1):
        if not a[k][k].c:
            for i in range(k + 1, n):
                if a[i][k].c:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return POLY_ZERO
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]).exact_div(prev)
        prev = a[k][k]
    return a[n - 1][n - 1] * sign


def minor_gcd(m: PolyMatrix, s: int) -> Poly:
    """Monic gcd of all s x s minors (0 when they all vanish)."""
    if s < 1 or s > min(m.rows, m.cols):
        raise ExactAlgebraError(f"minor size {s} out of range for {m.rows}x{m.cols}")
    g = POLY_ZERO
    for ri in combinations(range(m.rows), s):
        sub = m.select_rows(ri)
        for ci in combinations(range(m.cols), s):
            g = poly_gcd(g, det(sub.select_columns(ci)))
            if g == POLY_ONE:
                return g
    return g


def solve_poly(a: PolyMatrix, b: PolyMatrix) -> PolyMatrix:
    """Exact polynomial X with a.X = b, for a of full column rank.

    Raises :class:`ExactAlgebraError` if the solution is not polynomial or
    does not exist.
    """
    s = a.cols
    if s == 0:
        if not b.is_zero():
            raise ExactAlgebraError("no solution: empty system with nonzero right side")
        return PolyMatrix.zeros(0, b.cols)
    # choose s rows giving a nonzero maximal minor, certified at a good point
    bound = sum(int(max(a.max_degree(), 0)) for _ in range(1)) * s + 1
    rows = None
    for x in range(bound + s + 1):
        ev = a.evaluate(mpq(x))
        ech = Echelon(s)
        picked = []
        for i, r in enumerate(ev):
            if ech.add(r):
                picked.append(i)
                if len(picked) == s:
                    break
        if len(picked) == s:
            rows = picked
            break
    if rows is None:
        raise ExactAlgebraError("matrix is not of full column rank")
    asub = a.select_rows(rows)
    bsub = b.select_rows(rows)
    d = det(asub)
    out = [[None] * b.cols for _ in range(s)]
    for j in range(b.cols):
        for i in range(s):
            cols = [asub.column(c) if c != i else bsub.column(j) for c in range(s)]
            num = det(PolyMatrix.from_columns(cols, s))
            q, r = num.divmod(d)
            if r.c:
                raise ExactAlgebraError("solution is not polynomial")
            out[i][j] = q
    x = PolyMatrix(out, s, b.cols)
    if a @ x != b:
        raise ExactAlgebraError("system is inconsistent")
    return x


# ----------------------------------------------------------------------------
# module bases


def _layout(shifts: Sequence[int], d: int) -> list[int]:
    return [max(d + s + 1, 0) for s in shifts]


def _to_coeffs(vec: Sequence[Poly], lens: Sequence[int]) -> list:
    out = []
    for p, n in zip(vec, lens):
        if len(p.c) > n:
            raise ExactAlgebraError("vector exceeds degree layout")
        out.extend(p.c)
        out.extend([ZERO] * (n - len(p.c)))
    return out


def _from_coeffs(coeffs: Sequence, lens: Sequence[int]) -> list[Poly]:
    out, k = [], 0
    for n in lens:
        out.append(Poly._raw(list(coeffs[k:k + n])))
        k += n
    return out


def _degree_slice_equations(eqs: PolyMatrix | None, points, lens: Sequence[int]) -> list[list]:
    """Linear equations on the coefficient vector of layout ``lens``."""
    total = sum(lens)
    rows = []
    if eqs is not None and eqs.rows:
        for r in range(eqs.rows):
            span = 0
            for i, n in enumerate(lens):
                if n and eqs.e[r][i].c:
                    span = max(span, n + len(eqs.e[r][i].c) - 1)
            block = [[ZERO] * total for _ in range(span)]
            off = 0
            for i, n in enumerate(lens):
                mc = eqs.e[r][i].c
                for j in range(n):
                    for e, a in enumerate(mc):
                        block[j + e][off + j] += a
                off += n
            rows.extend(block)
    for x, cmat in points:
        xpow = [ONE]
        for _ in range(max(lens, default=0)):
            xpow.append(xpow[-1] * x)
        for crow in cmat:
            row = []
            for i, n in enumerate(lens):
                ci = crow[i]
                row.extend([ci * xpow[j] for j in range(n)])
            rows.append(row)
    return [r for r in rows if any(r)]


def module_basis(n: int, shifts: Sequence[int], rank: int, eqs: PolyMatrix | None = None,
                 points: Sequence = (), max_degree: int = 256) -> list[tuple[int, list[Poly]]]:
    """Shifted-minimal basis of a free submodule of Q[t]^n.

    The module is ``{v : eqs . v = 0 and C_x . v(x) = 0 for (x, C_x) in points}``
    of rank ``rank``.  The shifted degree of v is ``max_i deg v_i - shifts[i]``.
    Returns ``(shifted_degree, vector)`` pairs, degrees non-decreasing.  Every
    vector of shifted degree <= d is a Q[t]-combination of returned vectors of
    shifted degree <= d (predictable degrees), which makes the basis minimal.
    """
    if rank == 0:
        return []
    if not n:
        raise ExactAlgebraError("positive rank requested in a zero-dimensional ambient")
    picks: list[tuple[int, list[Poly]]] = []
    d = -max(shifts)
    while len(picks) < rank:
        if d > max_degree:
            raise ExactAlgebraError("module basis search exceeded degree cap")
        lens = _layout(shifts, d)
        total = sum(lens)
        if total:
            ech = Echelon(total)
            for dd, v in picks:
                for k in range(d - dd + 1):
                    ech.add(_to_coeffs([Poly.monomial(k) * p for p in v], lens))
            rows = _degree_slice_equations(eqs, points, lens)
            for cand in nullspace_q(rows, total):
                if ech.add(cand):
                    picks.append((d, _from_coeffs(cand, lens)))
                    if len(picks) == rank:
                        break
        d += 1
    return picks


def minimal_kernel_basis(m: PolyMatrix) -> PolyMatrix:
    """Minimal polynomial basis (as columns) of the right kernel of m."""
    n = m.cols
    rk = n - m.rank()
    picks = module_basis(n, [0] * n, rk, eqs=m)
    return PolyMatrix.from_columns([v for _, v in picks], n) if picks else PolyMatrix.zeros(n, 0)
