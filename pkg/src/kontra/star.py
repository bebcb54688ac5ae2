"""Bidifferential graph operators for linear Poisson tensors and the truncated star product.

Weights enter as :class:`WeightPolynomial` values: exact polynomials in the
symbols ``w(<GraphKey>)`` with rational coefficients.  Numeric weights are a
substitution applied at the end, so every numeric result has an exact
symbolic skeleton.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Tuple

from .errors import MissingWeights
from .graphs import L, R, AdmissibleGraph, enumerate_graphs, graph_key, mirror
from .lie import LinearPoissonTensor, StructureConstants
from .symbolic import GaussianPolynomial, Polynomial, differentiate, format_polynomial

Monomial = Tuple[str, ...]


def _tidy(q):
    if type(q) is Fraction and q.denominator == 1:
        return q.numerator
    return q


class WeightPolynomial:
    """Polynomial in weight atoms ``w(key)`` with exact rational coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        self.terms: Dict[Monomial, object] = {}
        for m, c in (terms or {}).items():
            if c != 0:
                self.terms[tuple(sorted(m))] = _tidy(Fraction(c)) if not isinstance(c, int) else c

    @classmethod
    def atom(cls, key: str) -> "WeightPolynomial":
        return cls({(key,): 1})

    @classmethod
    def constant(cls, value=1) -> "WeightPolynomial":
        return cls({(): value})

    @staticmethod
    def _coerce(other):
        if isinstance(other, WeightPolynomial):
            return other
        if isinstance(other, (int, Fraction)):
            return WeightPolynomial.constant(other)
        return None

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.terms == o.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for m, c in o.terms.items():
            v = out.get(m, 0) + c
            if v == 0:
                out.pop(m, None)
            else:
                out[m] = _tidy(v)
        return WeightPolynomial._raw(out)

    __radd__ = __add__

    @classmethod
    def _raw(cls, terms):
        w = object.__new__(cls)
        w.terms = terms
        return w

    def __neg__(self):
        return WeightPolynomial._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return WeightPolynomial._raw({})
            return WeightPolynomial._raw({m: _tidy(c * other) for m, c in self.terms.items()})
        if not isinstance(other, WeightPolynomial):
            return NotImplemented
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(sorted(m1 + m2))
                out[m] = out.get(m, 0) + c1 * c2
        return WeightPolynomial._raw({m: _tidy(c) for m, c in out.items() if c != 0})

    __rmul__ = __mul__

    def atoms(self) -> set:
        return {k for m in self.terms for k in m}

    def substitute(self, values: Mapping[str, Tuple[float, float]]) -> Tuple[float, float]:
        """Numeric value and first-order propagated error bound.

        ``values`` maps GraphKey -> ``(estimate, stderr)``.
        """
        missing = self.atoms() - set(values)
        if missing:
            raise MissingWeights(missing)
        total = 0.0
        err = 0.0
        for m, c in self.terms.items():
            c = float(c)
            vals = [values[k][0] for k in m]
            total += c * math.prod(vals)
            for idx, k in enumerate(m):
                others = math.prod(v for j, v in enumerate(vals) if j != idx)
                err += abs(c * others) * values[k][1]
        return total, err

    def substitute_symbols(self, mapping: Mapping[str, "WeightPolynomial"]) -> "WeightPolynomial":
        out = WeightPolynomial()
        for m, c in self.terms.items():
            term = WeightPolynomial.constant(c)
            for k in m:
                term = term * mapping.get(k, WeightPolynomial.atom(k))
            out = out + term
        return out

    def to_json(self) -> dict:
        return {_render_monomial(m): str(c) for m, c in sorted(self.terms.items())}

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"{c}*{_render_monomial(m)}" if m else str(c) for m, c in sorted(self.terms.items()))

    __repr__ = __str__


def _render_monomial(m: Monomial) -> str:
    return "*".join(f"w({k})" for k in m) if m else "1"


def mirror_relation(n: int) -> Dict[str, WeightPolynomial]:
    """Substitution ``w(mirror(G)) -> (-1)^n w(G)`` with the smaller key as representative."""
    sign = -1 if n % 2 else 1
    out = {}
    for g in enumerate_graphs(n):
        k, mk = graph_key(g), graph_key(mirror(g))
        if mk < k:
            out[k] = WeightPolynomial.atom(mk) * sign
    return out


# --------------------------------------------------------------------------
# graph operators


def graph_terms(g: AdmissibleGraph, pi: LinearPoissonTensor) -> Dict[tuple, object]:
    """Expand ``B_g`` as ``{(alpha, beta, pis): scalar}``.

    ``alpha``/``beta`` are the sorted derivative indices landing on ``L``/``R``
    and ``pis`` the sorted index pairs ``(i, j)`` of vertices that receive no
    derivative (each contributes the linear factor ``pi_ij``).  A vertex hit
    by one derivative ``d_a`` contributes the constant ``C^a_ij``; a vertex
    hit twice vanishes because ``pi`` is linear.
    """
    cache = pi.__dict__.setdefault("_graph_terms", {})
    key = graph_key(g)
    if key in cache:
        return cache[key]
    n = g.n
    incoming = [None] * (n + 1)
    to_L, to_R = [], []
    for k, slot, t in g.targets():
        if t == L:
            to_L.append((k, slot))
        elif t == R:
            to_R.append((k, slot))
        else:
            if incoming[t] is not None:
                cache[key] = {}
                return {}
            incoming[t] = (k, slot)
    support = pi.support
    pairs = sorted(support)
    out: dict = {}
    for assign in itertools.product(pairs, repeat=n):
        scalar = 1
        for k in range(1, n + 1):
            src = incoming[k]
            if src is None:
                continue
            m, slot = src
            c = support[assign[k - 1]].get(assign[m - 1][slot], 0)
            if not c:
                scalar = 0
                break
            scalar = scalar * c
        if not scalar:
            continue
        pis = tuple(sorted(assign[k - 1] for k in range(1, n + 1) if incoming[k] is None))
        alpha = tuple(sorted(assign[m - 1][s] for m, s in to_L))
        beta = tuple(sorted(assign[m - 1][s] for m, s in to_R))
        tkey = (alpha, beta, pis)
        v = out.get(tkey, 0) + scalar
        if v == 0:
            out.pop(tkey, None)
        else:
            out[tkey] = v
    out = {k: _tidy(Fraction(v)) for k, v in out.items()}
    cache[key] = out
    return out


def _as_gaussian(f) -> GaussianPolynomial:
    if isinstance(f, GaussianPolynomial):
        return f
    if isinstance(f, Polynomial):
        return GaussianPolynomial(f, 0)
    raise TypeError(f"expected a polynomial or Gaussian polynomial, got {type(f).__name__}")


class DerivativeCache:
    """Memoized ``d^alpha f`` for sorted multi-indices ``alpha``."""

    def __init__(self, f: GaussianPolynomial):
        self.f = f
        self._memo = {(): f}

    def __call__(self, alpha: tuple) -> GaussianPolynomial:
        hit = self._memo.get(alpha)
        if hit is None:
            hit = differentiate(self(alpha[:-1]), alpha[-1])
            self._memo[alpha] = hit
        return hit


class GraphEvaluator:
    """Evaluate ``B_g(f, h)`` for many graphs with shared derivative caches."""

    def __init__(self, pi: LinearPoissonTensor, f, h):
        f, h = _as_gaussian(f), _as_gaussian(h)
        if f.d != pi.dim or h.d != pi.dim:
            raise ValueError(f"dimension mismatch: tensor d={pi.dim}, f d={f.d}, h d={h.d}")
        self.pi = pi
        self.f, self.h = f, h
        self.df = DerivativeCache(f)
        self.dh = DerivativeCache(h)
        self._pis: dict = {(): Polynomial.constant(pi.dim)}

    def pi_product(self, pis: tuple) -> Polynomial:
        hit = self._pis.get(pis)
        if hit is None:
            hit = self.pi_product(pis[:-1]) * self.pi(*pis[-1])
            self._pis[pis] = hit
        return hit

    def apply(self, g: AdmissibleGraph) -> GaussianPolynomial:
        c = self.f.c + self.h.c
        total = Polynomial(self.pi.dim)
        for (alpha, beta, pis), s in graph_terms(g, self.pi).items():
            prod = (self.df(alpha).p * self.dh(beta).p) * self.pi_product(pis)
            total = total + prod.scale(s)
        return GaussianPolynomial(total, c)


def apply_graph(g: AdmissibleGraph, pi, f, h) -> GaussianPolynomial:
    """``B_g(f, h)`` for the linear Poisson tensor ``pi`` (or structure constants)."""
    if isinstance(pi, StructureConstants):
        pi = LinearPoissonTensor(pi)
    if g.n == 0:
        return _as_gaussian(f) * _as_gaussian(h)
    return GraphEvaluator(pi, f, h).apply(g)


# --------------------------------------------------------------------------
# truncated series


class StarExpansion:
    """Truncated series ``sum_{n <= order} hbar^n coeffs[n]``.

    Each coefficient is a :class:`GaussianPolynomial` whose polynomial part has
    :class:`WeightPolynomial` coefficients.
    """

    def __init__(self, order: int, coeffs: List[GaussianPolynomial]):
        if len(coeffs) != order + 1:
            raise ValueError(f"expected {order + 1} coefficients, got {len(coeffs)}")
        self.order = order
        self.coeffs = coeffs

    @property
    def d(self) -> int:
        return self.coeffs[0].d

    @classmethod
    def lift(cls, f, order: int) -> "StarExpansion":
        f = _as_gaussian(f)
        p = f.p.map_coefficients(WeightPolynomial.constant)
        zero = GaussianPolynomial(Polynomial(f.d), f.c)
        return cls(order, [GaussianPolynomial(p, f.c)] + [zero] * order)

    def __add__(self, other: "StarExpansion") -> "StarExpansion":
        N = min(self.order, other.order)
        return StarExpansion(N, [a + b for a, b in zip(self.coeffs[: N + 1], other.coeffs[: N + 1])])

    def __neg__(self):
        return StarExpansion(self.order, [-a for a in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        """Pointwise (commutative) product of series, truncated at the lower order."""
        if not isinstance(other, StarExpansion):
            return StarExpansion(self.order, [a * other for a in self.coeffs])
        N = min(self.order, other.order)
        out = []
        for n in range(N + 1):
            acc = None
            for a in range(n + 1):
                t = self.coeffs[a] * other.coeffs[n - a]
                acc = t if acc is None else acc + t
            out.append(acc)
        return StarExpansion(N, out)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def evaluate(self, values: Mapping[str, Tuple[float, float]]) -> List[Dict[tuple, Tuple[float, float]]]:
        """Substitute numeric weights: per order, ``{exponent: (value, error)}``."""
        out = []
        for c in self.coeffs:
            out.append({e: _coef_value(v, values) for e, v in c.p.terms.items()})
        return out

    def to_json(self) -> dict:
        coeffs = []
        for c in self.coeffs:
            coeffs.append({
                "c": str(c.c),
                "terms": [
                    {"monomial": format_polynomial(Polynomial(c.d, {e: 1})), "coeff": _coef_json(v)}
                    for e, v in sorted(c.p.terms.items())
                ],
            })
        return {"order": self.order, "coeffs": coeffs}


def _coef_value(v, values):
    if isinstance(v, WeightPolynomial):
        return v.substitute(values)
    return float(v), 0.0


def _coef_json(v):
    if isinstance(v, WeightPolynomial):
        return v.to_json()
    return {"1": str(v)}


def _weight_atoms(n: int):
    return [(g, WeightPolynomial.atom(graph_key(g))) for g in enumerate_graphs(n)]


def bidifferential(pi: LinearPoissonTensor, f, h, n: int) -> GaussianPolynomial:
    """``sum_{g in G_n} w(g) B_g(f, h)`` with symbolic weights."""
    f, h = _as_gaussian(f), _as_gaussian(h)
    if n == 0:
        p = (f.p * h.p).map_coefficients(lambda c: WeightPolynomial.constant(c) if not isinstance(c, WeightPolynomial) else c)
        return GaussianPolynomial(p, f.c + h.c)
    ev = GraphEvaluator(pi, f, h)
    total = Polynomial(pi.dim)
    for g, w in _weight_atoms(n):
        b = ev.apply(g)
        if not b.is_zero():
            total = total + b.p.scale(w)
    return GaussianPolynomial(total, f.c + h.c)


def required_keys(order: int) -> List[str]:
    return [graph_key(g) for n in range(1, order + 1) for g in enumerate_graphs(n)]


def check_weights(values: Mapping[str, Tuple[float, float]], order: int) -> None:
    missing = [k for k in required_keys(order) if k not in values]
    if missing:
        raise MissingWeights(missing)


def weight_values(weights) -> Dict[str, Tuple[float, float]]:
    """Normalize a :class:`WeightCache` or a ``{key: (est, err)}`` mapping."""
    if hasattr(weights, "values") and hasattr(weights, "entries"):
        return weights.values()
    return dict(weights)


def _tensor(C) -> LinearPoissonTensor:
    return C if isinstance(C, LinearPoissonTensor) else LinearPoissonTensor(C)


def star(f, h, order: int, C, weights="symbolic") -> StarExpansion:
    """Truncated Kontsevich product ``f * h`` for the Lie-Poisson tensor of ``C``.

    ``weights`` is ``"symbolic"`` or a weight table; with a table the result is
    still symbolic but every needed weight is checked to be present, so
    :meth:`StarExpansion.evaluate` can be applied.
    """
    pi = _tensor(C)
    if weights != "symbolic":
        check_weights(weight_values(weights), order)
    return StarExpansion(order, [bidifferential(pi, f, h, n) for n in range(order + 1)])


def star_series(F: StarExpansion, G: StarExpansion, C, order: int | None = None) -> StarExpansion:
    """Star product of two truncated series (coefficients may carry weight polynomials)."""
    pi = _tensor(C)
    N = min(F.order, G.order) if order is None else order
    out = [None] * (N + 1)
    for a in range(N + 1):
        for b in range(N + 1 - a):
            A, B = F.coeffs[a], G.coeffs[b]
            if A.is_zero() or B.is_zero():
                continue
            for n in range(N + 1 - a - b):
                t = bidifferential(pi, A, B, n)
                out[a + b + n] = t if out[a + b + n] is None else out[a + b + n] + t
    c = F.coeffs[0].c + G.coeffs[0].c
    zero = GaussianPolynomial(Polynomial(F.d), c)
    return StarExpansion(N, [x if x is not None else zero for x in out])


def star_commutator(f, h, order: int, C, weights="symbolic") -> StarExpansion:
    return star(f, h, order, C, weights) - star(h, f, order, C, weights)


def poisson_bracket(C, f, h):
    """``{f, h} = sum_{i,j} pi_ij d_i f d_j h``."""
    return _tensor(C).bracket(_as_gaussian(f), _as_gaussian(h))
