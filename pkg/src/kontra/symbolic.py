"""Exact polynomial and Gaussian-weighted polynomial arithmetic.

Coefficients are exact: ``int`` or :class:`fractions.Fraction`, or any ring
element closed under ``+``/``*`` with integers (the star-product code uses
:class:`kontra.star.WeightPolynomial` coefficients).  No floating point is used
anywhere in this module.

Coordinates are 1-based in the public API (``x1 .. xd``) and 0-based inside
exponent tuples.
"""
from __future__ import annotations

import re
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, Tuple

from .errors import NonIntegrable

Exponent = Tuple[int, ...]


def as_rational(value) -> Fraction | int:
    """Parse ``"3/2"``, ``2``, ``Fraction`` into an exact rational; ints stay ints."""
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        raise TypeError("floats are not accepted as exact rationals")
    q = Fraction(value)
    return q.numerator if q.denominator == 1 else q


def _tidy(q):
    if type(q) is Fraction and q.denominator == 1:
        return q.numerator
    return q


class Polynomial:
    """Sparse multivariate polynomial in ``d`` variables."""

    __slots__ = ("d", "terms")

    def __init__(self, d: int, terms: Dict[Exponent, object] | None = None):
        if d < 1:
            raise ValueError("dimension must be positive")
        self.d = d
        self.terms = {}
        if terms:
            for e, c in terms.items():
                if len(e) != d:
                    raise ValueError(f"exponent {e} does not match dimension {d}")
                if c != 0:
                    self.terms[tuple(e)] = c

    @classmethod
    def _raw(cls, d, terms):
        p = object.__new__(cls)
        p.d = d
        p.terms = terms
        return p

    @classmethod
    def constant(cls, d: int, value=1) -> "Polynomial":
        return cls(d, {(0,) * d: value})

    @classmethod
    def coordinate(cls, d: int, i: int) -> "Polynomial":
        """The coordinate function ``x_i`` (1-based)."""
        if not 1 <= i <= d:
            raise IndexError(f"coordinate index {i} out of range 1..{d}")
        e = [0] * d
        e[i - 1] = 1
        return cls(d, {tuple(e): 1})

    @classmethod
    def parse(cls, text: str, d: int | None = None) -> "Polynomial":
        return parse_polynomial(text, d)

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def copy(self) -> "Polynomial":
        return Polynomial._raw(self.d, dict(self.terms))

    def _check(self, other):
        if other.d != self.d:
            raise ValueError(f"dimension mismatch: {self.d} vs {other.d}")

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.d == other.d and self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.d, frozenset(self.terms.items())))

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.d, other)
        self._check(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, 0) + c
            if v == 0:
                out.pop(e, None)
            else:
                out[e] = v
        return Polynomial._raw(self.d, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.d, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s) -> "Polynomial":
        if s == 0:
            return Polynomial._raw(self.d, {})
        out = {}
        for e, c in self.terms.items():
            v = c * s
            if v != 0:
                out[e] = v
        return Polynomial._raw(self.d, out)

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            if isinstance(other, GaussianPolynomial):
                return NotImplemented
            return self.scale(other)
        self._check(other)
        out: dict = {}
        get = out.get
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = get(e, 0) + c1 * c2
        return Polynomial._raw(self.d, {e: c for e, c in out.items() if c != 0})

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(self.d)
        for _ in range(k):
            out = out * self
        return out

    def diff(self, i: int) -> "Polynomial":
        """Partial derivative with respect to ``x_i`` (1-based)."""
        if not 1 <= i <= self.d:
            raise IndexError(f"coordinate index {i} out of range 1..{self.d}")
        k = i - 1
        out = {}
        for e, c in self.terms.items():
            m = e[k]
            if m:
                out[e[:k] + (m - 1,) + e[k + 1:]] = c * m
        return Polynomial._raw(self.d, out)

    def mul_coordinate(self, i: int) -> "Polynomial":
        k = i - 1
        return Polynomial._raw(self.d, {e[:k] + (e[k] + 1,) + e[k + 1:]: c for e, c in self.terms.items()})

    def map_coefficients(self, fn) -> "Polynomial":
        out = {}
        for e, c in self.terms.items():
            v = fn(c)
            if v != 0:
                out[e] = v
        return Polynomial._raw(self.d, out)

    def evaluate(self, point):
        total = 0
        for e, c in self.terms.items():
            v = c
            for x, m in zip(point, e):
                if m:
                    v = v * x**m
            total = total + v
        return total

    def __str__(self):
        return format_polynomial(self)

    def __repr__(self):
        return f"Polynomial(d={self.d}, {format_polynomial(self)!r})"


class GaussianPolynomial:
    """``p(x) * exp(-c |x|^2)`` with ``c >= 0`` rational (``c = 0`` embeds plain polynomials)."""

    __slots__ = ("p", "c")

    def __init__(self, p: Polynomial, c=0):
        c = as_rational(c)
        if c < 0:
            raise ValueError("Gaussian rate c must be non-negative")
        self.p = p
        self.c = c

    @classmethod
    def parse(cls, text: str, c="1/2", d: int | None = None) -> "GaussianPolynomial":
        return cls(parse_polynomial(text, d), c)

    @classmethod
    def from_json(cls, obj, d: int | None = None) -> "GaussianPolynomial":
        return cls(parse_polynomial(obj["poly"], d), obj.get("c", "1/2"))

    def to_json(self) -> dict:
        return {"poly": format_polynomial(self.p), "c": str(self.c)}

    @property
    def d(self) -> int:
        return self.p.d

    def is_zero(self) -> bool:
        return self.p.is_zero()

    def __eq__(self, other):
        if isinstance(other, GaussianPolynomial):
            if self.p.is_zero() and other.p.is_zero():
                return self.d == other.d
            return self.c == other.c and self.p == other.p
        if other == 0:
            return self.p.is_zero()
        return NotImplemented

    def __hash__(self):
        return hash((self.p, self.c))

    def _compatible(self, other: "GaussianPolynomial"):
        if other.c != self.c:
            if other.p.is_zero():
                return
            if self.p.is_zero():
                return
            raise ValueError(f"cannot add Gaussian polynomials with c={self.c} and c={other.c}")

    def __add__(self, other):
        if other == 0 and not isinstance(other, GaussianPolynomial):
            return self
        if not isinstance(other, GaussianPolynomial):
            return NotImplemented
        self._compatible(other)
        c = self.c if not self.p.is_zero() else other.c
        return GaussianPolynomial(self.p + other.p, c)

    def __radd__(self, other):
        if other == 0:
            return self
        return NotImplemented

    def __neg__(self):
        return GaussianPolynomial(-self.p, self.c)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, GaussianPolynomial):
            return GaussianPolynomial(self.p * other.p, self.c + other.c)
        if isinstance(other, Polynomial):
            return GaussianPolynomial(self.p * other, self.c)
        return GaussianPolynomial(self.p.scale(other), self.c)

    def __rmul__(self, other):
        if isinstance(other, Polynomial):
            return GaussianPolynomial(other * self.p, self.c)
        return GaussianPolynomial(self.p.scale(other), self.c)

    def diff(self, i: int) -> "GaussianPolynomial":
        return differentiate(self, i)

    def __repr__(self):
        return f"GaussianPolynomial({format_polynomial(self.p)!r}, c={self.c})"


def differentiate(h: GaussianPolynomial, i: int) -> GaussianPolynomial:
    """Exact ``d/dx_i`` of ``p e^{-c|x|^2}``: ``(dp/dx_i - 2c x_i p) e^{-c|x|^2}``."""
    p = h.p
    dp = p.diff(i)
    if h.c == 0:
        return GaussianPolynomial(dp, 0)
    k = i - 1
    factor = _tidy(Fraction(2 * h.c))
    out = dict(dp.terms)
    for e, c in p.terms.items():
        e2 = e[:k] + (e[k] + 1,) + e[k + 1:]
        v = out.get(e2, 0) - factor * c
        if v == 0:
            out.pop(e2, None)
        else:
            out[e2] = v
    return GaussianPolynomial(Polynomial._raw(p.d, out), h.c)


def differentiate_multi(h: GaussianPolynomial, indices: Iterable[int]) -> GaussianPolynomial:
    for i in indices:
        h = differentiate(h, i)
    return h


# --------------------------------------------------------------------------
# exact integrals


def _squarefree_split(n: int) -> Tuple[int, int]:
    """Return ``(s, t)`` with ``n = s^2 t`` and ``t`` squarefree."""
    s, t = 1, 1
    p = 2
    while p * p <= n:
        while n % (p * p) == 0:
            n //= p * p
            s *= p
        if n % p == 0:
            n //= p
            t *= p
        p += 1
    return s, t * n


class ExactIntegral:
    """The number ``q * pi**e * sqrt(radicand)``.

    ``e`` is a half-integer, ``radicand`` a squarefree positive integer.  Zero
    is represented with ``q == 0`` and compares equal to any other zero.
    """

    __slots__ = ("q", "e", "radicand")

    def __init__(self, q=0, e=Fraction(0), radicand: int = 1):
        e = Fraction(e)
        if (2 * e).denominator != 1:
            raise ValueError("pi exponent must be a half-integer")
        if radicand < 1:
            raise ValueError("radicand must be a positive integer")
        s, t = _squarefree_split(int(radicand))
        self.q = _tidy(q * s) if s != 1 else q
        self.e = e
        self.radicand = t

    @classmethod
    def zero(cls) -> "ExactIntegral":
        return cls(0)

    def is_zero(self) -> bool:
        return self.q == 0

    def __bool__(self):
        return not self.is_zero()

    def _same_kind(self, other) -> bool:
        return self.e == other.e and self.radicand == other.radicand

    def __add__(self, other):
        if not isinstance(other, ExactIntegral):
            if other == 0:
                return self
            return NotImplemented
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        if not self._same_kind(other):
            raise ValueError(f"cannot add {self} and {other} exactly")
        return ExactIntegral(self.q + other.q, self.e, self.radicand)

    __radd__ = __add__

    def __neg__(self):
        return ExactIntegral(-self.q, self.e, self.radicand)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s):
        if isinstance(s, ExactIntegral):
            return NotImplemented
        return ExactIntegral(self.q * s, self.e, self.radicand)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, ExactIntegral):
            if self.is_zero() or other.is_zero():
                return self.is_zero() and other.is_zero()
            return self._same_kind(other) and self.q == other.q
        if other == 0:
            return self.is_zero()
        return NotImplemented

    def __hash__(self):
        return hash((self.q, self.e, self.radicand)) if self.q != 0 else 0

    def __float__(self):
        import math

        return float(self.q) * math.pi ** float(self.e) * math.sqrt(self.radicand)

    def to_json(self) -> dict:
        return {"q": str(self.q), "pi_power": str(self.e), "sqrt": self.radicand}

    def __str__(self):
        if self.is_zero():
            return "0"
        parts = [f"({self.q})"]
        if self.e:
            parts.append(f"pi^({self.e})")
        if self.radicand != 1:
            parts.append(f"sqrt({self.radicand})")
        return "*".join(parts)

    __repr__ = __str__


@lru_cache(maxsize=None)
def _double_factorial_odd(m: int) -> int:
    """(2m-1)!! with (-1)!! = 1."""
    out = 1
    for k in range(1, 2 * m, 2):
        out *= k
    return out


def moment_sums(p: Polynomial) -> Dict[int, object]:
    """Group ``sum_terms coef * prod (2m_i - 1)!!`` by half total degree ``sum m_i``.

    Terms with an odd exponent in any coordinate integrate to zero and are skipped.
    """
    acc: dict = {}
    for e, c in p.terms.items():
        w = 1
        s = 0
        for m in e:
            if m & 1:
                break
            if m:
                w *= _double_factorial_odd(m >> 1)
                s += m >> 1
        else:
            acc[s] = acc.get(s, 0) + c * w
    return acc


def integrate_gaussian(h: GaussianPolynomial) -> ExactIntegral:
    """Exact Lebesgue integral over R^d of ``p(x) e^{-c|x|^2}``.

    Uses ``int x^{2m} e^{-c x^2} dx = (2m-1)!!/(2c)^m * sqrt(pi/c)`` per coordinate.
    """
    c = h.c
    if c <= 0:
        raise NonIntegrable(f"Gaussian rate c={c} is not positive")
    return _finish(moment_sums(h.p), Fraction(c), h.d)


def _finish(sums: Dict[int, object], c: Fraction, d: int) -> ExactIntegral:
    """Turn grouped moment sums into ``sum_s sums[s] / (2c)^s * (pi/c)^{d/2}``."""
    total = 0
    for s, v in sums.items():
        if v != 0:
            total = total + v * (Fraction(1) / (2 * c) ** s)
    if isinstance(total, Fraction):
        total = _tidy(total)
    # (pi/c)^{d/2} = pi^{d/2} * c^{-d//2} * (c^{-1/2} if d odd)
    scale = Fraction(1) / c ** (d // 2)
    radicand = 1
    if d % 2:
        # 1/sqrt(a/b) = sqrt(a b) / a
        a, b = c.numerator, c.denominator
        scale /= a
        radicand = a * b
    return ExactIntegral(_mul_tidy(total, scale), Fraction(d, 2), radicand)


class MomentPairing:
    """Exact ``integral of f * q e^{-c_q |x|^2}`` for a fixed ``f`` and many polynomials ``q``.

    Moments of ``f`` against each monomial are memoized, which makes repeated
    pairings with the same ``f`` linear in the size of ``q``.
    """

    def __init__(self, f: GaussianPolynomial, c_other):
        self.f = f
        self.c = Fraction(f.c + as_rational(c_other))
        if self.c <= 0:
            raise NonIntegrable(f"Gaussian rate c={self.c} is not positive")
        self.d = f.d
        by_parity: dict = {}
        for e, coef in f.p.terms.items():
            by_parity.setdefault(tuple(m & 1 for m in e), []).append((e, coef))
        self._by_parity = by_parity
        self._memo: dict = {}

    def moments(self, b: Exponent) -> list:
        """``[(s, v)]`` with ``sum_a f_a M(a + b) = sum v / (2c)^s``."""
        hit = self._memo.get(b)
        if hit is not None:
            return hit
        acc: dict = {}
        for a, coef in self._by_parity.get(tuple(m & 1 for m in b), ()):
            w = 1
            s = 0
            for x, y in zip(a, b):
                m = (x + y) >> 1
                if m:
                    w *= _double_factorial_odd(m)
                    s += m
            acc[s] = acc.get(s, 0) + coef * w
        hit = [(s, v) for s, v in acc.items() if v != 0]
        self._memo[b] = hit
        return hit

    def integrate(self, q: Polynomial) -> ExactIntegral:
        if q.d != self.d:
            raise ValueError(f"dimension mismatch: {q.d} vs {self.d}")
        sums: dict = {}
        for b, coef in q.terms.items():
            for s, v in self.moments(b):
                sums[s] = sums.get(s, 0) + coef * v
        return _finish(sums, self.c, self.d)


def _mul_tidy(total, scale):
    v = total * scale if scale != 1 else total
    return _tidy(v) if isinstance(v, Fraction) else v


def integrate_derivative_check(h: GaussianPolynomial, i: int) -> ExactIntegral:
    """Integral of an exact derivative; always zero for integrable ``h``."""
    return integrate_gaussian(differentiate(h, i))


# --------------------------------------------------------------------------
# text format: "3/2*x1^2*x2 - x3"

_TERM_SPLIT = re.compile(r"\s*([+-])\s*")
_FACTOR = re.compile(r"^x(\d+)(?:(?:\^|\*\*)(\d+))?$")


class PolynomialSyntaxError(ValueError):
    pass


def parse_polynomial(text: str, d: int | None = None) -> Polynomial:
    """Parse sums of terms like ``3/2*x1^2*x2 - x3``; ``d`` defaults to the largest index used."""
    src = text.strip()
    if not src:
        raise PolynomialSyntaxError("empty polynomial")
    # protect '**' before splitting on '*'
    src = src.replace("**", "^")
    pieces = _TERM_SPLIT.split(src)
    terms = []
    sign = 1
    if pieces[0] == "":
        pieces = pieces[1:]
    else:
        pieces = ["+"] + pieces
    if len(pieces) % 2:
        raise PolynomialSyntaxError(f"cannot parse {text!r}")
    for op, body in zip(pieces[0::2], pieces[1::2]):
        sign = -1 if op == "-" else 1
        if not body:
            raise PolynomialSyntaxError(f"dangling operator in {text!r}")
        coef = Fraction(sign)
        powers: dict = {}
        for factor in body.split("*"):
            factor = factor.strip()
            m = _FACTOR.match(factor)
            if m:
                idx = int(m.group(1))
                if idx < 1:
                    raise PolynomialSyntaxError(f"coordinate index must be >= 1 in {factor!r}")
                powers[idx] = powers.get(idx, 0) + int(m.group(2) or 1)
                continue
            try:
                coef *= Fraction(factor)
            except (ValueError, ZeroDivisionError):
                raise PolynomialSyntaxError(f"bad factor {factor!r} in {text!r}") from None
        terms.append((coef, powers))
    used = max((i for _, pw in terms for i in pw), default=1)
    if d is None:
        d = used
    elif used > d:
        raise PolynomialSyntaxError(f"x{used} used but dimension is {d}")
    out = Polynomial(d)
    for coef, powers in terms:
        e = [0] * d
        for i, m in powers.items():
            e[i - 1] = m
        out = out + Polynomial(d, {tuple(e): _tidy(coef)})
    return out


def format_polynomial(p: Polynomial) -> str:
    if p.is_zero():
        return "0"
    chunks = []
    for e in sorted(p.terms, key=lambda e: (-sum(e), [-m for m in e])):
        c = p.terms[e]
        mono = "*".join(f"x{i + 1}" + (f"^{m}" if m > 1 else "") for i, m in enumerate(e) if m)
        neg = False
        if isinstance(c, (int, Fraction)):
            neg = c < 0
            mag = -c if neg else c
            if mono and mag == 1:
                body = mono
            else:
                body = str(mag) + ("*" + mono if mono else "")
        else:
            body = f"({c})" + ("*" + mono if mono else "")
        if chunks:
            chunks.append(("- " if neg else "+ ") + body)
        else:
            chunks.append(("-" if neg else "") + body)
    return " ".join(chunks)


def random_test_polynomial(rng, d: int, degree: int = 4, low: int = -3, high: int = 3) -> Polynomial:
    """Coefficients drawn uniformly from ``low..high`` for every monomial of degree <= ``degree``."""
    terms = {}
    for e in monomials(d, degree):
        c = rng.randint(low, high)
        if c:
            terms[e] = c
    if not terms:
        terms[(0,) * d] = 1
    return Polynomial(d, terms)


def monomials(d: int, degree: int):
    """All exponent tuples of total degree <= ``degree`` in graded lexicographic order."""
    def rec(k, left):
        if k == 1:
            for m in range(left + 1):
                yield (m,)
            return
        for m in range(left + 1):
            for rest in rec(k - 1, left - m):
                yield (m,) + rest

    return sorted(rec(d, degree), key=lambda e: (sum(e), tuple(-m for m in e)))


def random_test_pair(rng, d: int, degree: int = 4, c="1/2"):
    f = GaussianPolynomial(random_test_polynomial(rng, d, degree), c)
    g = GaussianPolynomial(random_test_polynomial(rng, d, degree), c)
    return f, g
