"""Trace functional on the truncated star-product algebra and trace-defect checks.

The trace of a series ``F = sum hbar^n F_n`` on ``R^d`` with Lebesgue measure
is ``hbar^{-floor(d/2)} sum hbar^n integral(F_n)``.  The trace property holds
at order ``n`` when the integral of the ``hbar^n`` coefficient of
``f * h - h * f`` vanishes.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Tuple

from .graphs import L, R, AdmissibleGraph, enumerate_graphs, graph_key
from .lie import LinearPoissonTensor, StructureConstants, is_unimodular
from .star import (
    DerivativeCache,
    StarExpansion,
    WeightPolynomial,
    _as_gaussian,
    _tensor,
    check_weights,
    graph_terms,
    weight_values,
)
from .symbolic import (
    ExactIntegral,
    GaussianPolynomial,
    MomentPairing,
    Polynomial,
    differentiate_multi,
    integrate_gaussian,
    random_test_pair,
)


@dataclass(frozen=True)
class TraceFunctional:
    """``Tr(F) = hbar^{-floor(d/2)} * integral_{R^d} F dx``."""

    dim: int

    @property
    def offset(self) -> int:
        return -(self.dim // 2)

    def __call__(self, F) -> List[Tuple[int, ExactIntegral]]:
        return tr_apply(self, F)


def tr_apply(T: TraceFunctional, F) -> List[Tuple[int, ExactIntegral]]:
    """Per-coefficient integrals as ``[(hbar power, value)]`` starting at ``hbar^{-floor(d/2)}``."""
    if isinstance(F, (GaussianPolynomial, Polynomial)):
        coeffs = [_as_gaussian(F)]
    elif isinstance(F, StarExpansion):
        coeffs = F.coeffs
    else:
        coeffs = [_as_gaussian(c) for c in F]
    out = []
    for n, c in enumerate(coeffs):
        if c.d != T.dim:
            raise ValueError(f"coefficient dimension {c.d} does not match trace dimension {T.dim}")
        value = ExactIntegral.zero() if c.is_zero() else integrate_gaussian(c)
        out.append((T.offset + n, value))
    return out


def poisson_trace_defect(C, f, h) -> ExactIntegral:
    """Exact ``integral of {f, h} dx`` for the Lie-Poisson bracket of ``C``.

    ``{f, h}`` is ``B_g(f, h)`` for the one-vertex graph ``(L,R)``, so the
    moment-pairing path of :class:`GraphIntegrator` applies.
    """
    return GraphIntegrator(C, f, h)(_BRACKET_GRAPH)


_BRACKET_GRAPH = AdmissibleGraph(1, ((L, R),))


class GraphIntegrator:
    """Exact ``integral of B_g(f, h) dx`` for many graphs with a fixed pair ``(f, h)``.

    Derivatives on ``f`` are moved onto the rest of the integrand by parts, so
    every graph reduces to one pairing of ``f`` against a Gaussian polynomial;
    the pairing memoizes moments of ``f``.
    """

    def __init__(self, C, f, h):
        self.pi: LinearPoissonTensor = _tensor(C)
        self.f, self.h = _as_gaussian(f), _as_gaussian(h)
        d = self.pi.dim
        if self.f.d != d or self.h.d != d:
            raise ValueError(f"dimension mismatch: tensor d={d}, f d={self.f.d}, h d={self.h.d}")
        self.dh = DerivativeCache(self.h)
        self.pairing = MomentPairing(self.f, self.h.c)
        self._pis: dict = {(): Polynomial.constant(d)}

    def _pi_product(self, pis):
        hit = self._pis.get(pis)
        if hit is None:
            hit = self._pi_product(pis[:-1]) * self.pi(*pis[-1])
            self._pis[pis] = hit
        return hit

    def __call__(self, g: AdmissibleGraph) -> ExactIntegral:
        if g.n == 0:
            return integrate_gaussian(self.f * self.h)
        grouped: Dict[tuple, Polynomial] = {}
        for (alpha, beta, pis), s in graph_terms(g, self.pi).items():
            part = (self.dh(beta).p * self._pi_product(pis)).scale(s)
            grouped[alpha] = grouped[alpha] + part if alpha in grouped else part
        total = Polynomial(self.pi.dim)
        for alpha, w in grouped.items():
            moved = differentiate_multi(GaussianPolynomial(w, self.h.c), alpha).p
            total = total + (moved if len(alpha) % 2 == 0 else -moved)
        if total.is_zero():
            return ExactIntegral.zero()
        return self.pairing.integrate(total)


def graph_trace_integral(g: AdmissibleGraph, C, f, h) -> ExactIntegral:
    """Exact ``integral of B_g(f, h) dx``."""
    return GraphIntegrator(C, f, h)(g)


@dataclass
class OrderDefect:
    order: int
    symbolic: ExactIntegral  # q is a WeightPolynomial (or 0)
    value: float | None = None
    error: float | None = None

    @property
    def is_zero(self) -> bool:
        return self.symbolic.is_zero()

    def within(self, k: float = 3.0) -> bool:
        """Numeric defect bounded by ``k`` times its propagated error (exact zero always passes)."""
        if self.is_zero:
            return True
        if self.value is None:
            return False
        return abs(self.value) <= k * self.error

    def to_json(self) -> dict:
        q = self.symbolic.q
        out = {
            "order": self.order,
            "zero": self.is_zero,
            "defect": q.to_json() if isinstance(q, WeightPolynomial) else {"1": str(q)} if q else {},
            "pi_power": str(self.symbolic.e),
            "sqrt": self.symbolic.radicand,
        }
        if self.value is not None:
            out["value"] = self.value
            out["error"] = self.error
        return out


def _integral_atoms(integrals: Dict[str, ExactIntegral], sign=1) -> ExactIntegral:
    total = ExactIntegral.zero()
    for key, v in integrals.items():
        if v.is_zero():
            continue
        total = total + ExactIntegral(WeightPolynomial.atom(key) * (v.q * sign), v.e, v.radicand)
    return total


def trace_defect(C, f, h, order: int, weights="symbolic") -> List[OrderDefect]:
    """Per order ``n <= order``: integral of the ``hbar^n`` coefficient of ``f*h - h*f``.

    Symbolic results are exact in the weight atoms; with a weight table the
    numeric value and first-order propagated error are attached.
    """
    pi = _tensor(C)
    values = None
    if weights != "symbolic":
        values = weight_values(weights)
        check_weights(values, order)
    fh = GraphIntegrator(pi, f, h)
    hf = GraphIntegrator(pi, h, f)
    out = []
    for n in range(order + 1):
        if n == 0:
            sym = ExactIntegral.zero()  # f h - h f = 0 pointwise
        else:
            diff = {}
            for g in enumerate_graphs(n):
                v = fh(g) - hf(g)
                if not v.is_zero():
                    diff[graph_key(g)] = v
            sym = _integral_atoms(diff)
        item = OrderDefect(n, sym)
        if values is not None:
            if sym.is_zero():
                item.value, item.error = 0.0, 0.0
            else:
                val, err = sym.q.substitute(values)
                scale = float(ExactIntegral(1, sym.e, sym.radicand))
                item.value, item.error = val * scale, err * scale
        out.append(item)
    return out


# --------------------------------------------------------------------------
# seeded random suites


def test_pairs(d: int, count: int, seed: int, degree: int = 4, c="1/2"):
    """Reproducible random Gaussian test pairs (coefficients in -3..3, degree <= 4, c = 1/2)."""
    rng = random.Random(seed)
    return [random_test_pair(rng, d, degree, c) for _ in range(count)]


test_pairs.__test__ = False  # not a pytest test


@dataclass
class Prop1Result:
    algebra: str
    unimodular: bool
    pairs: int
    zero_defects: int
    witness: dict | None

    @property
    def consistent(self) -> bool:
        """Zero defect on every pair iff unimodular."""
        all_zero = self.zero_defects == self.pairs
        return all_zero == self.unimodular

    def to_json(self) -> dict:
        return {
            "algebra": self.algebra,
            "unimodular": self.unimodular,
            "pairs": self.pairs,
            "zero_defects": self.zero_defects,
            "witness": self.witness,
            "consistent": self.consistent,
        }


def prop1_check(C: StructureConstants, pairs: int = 20, seed: int = 0, extra_pairs=()) -> Prop1Result:
    """Compare the vanishing of the integrated Poisson bracket with unimodularity."""
    cases = list(extra_pairs) + test_pairs(C.dim, pairs, seed)
    zero = 0
    witness = None
    for f, h in cases:
        v = poisson_trace_defect(C, f, h)
        if v.is_zero():
            zero += 1
        elif witness is None:
            witness = {"f": f.to_json(), "g": h.to_json(), "defect": v.to_json()}
    return Prop1Result(C.name, bool(is_unimodular(C)), len(cases), zero, witness)


def graph_vanishing(C, graphs, pairs) -> List[Tuple[str, int, ExactIntegral]]:
    """Nonzero ``integral of B_g`` over the given graphs and test pairs, as ``(key, pair index, value)``."""
    bad = []
    for idx, (f, h) in enumerate(pairs):
        integ = GraphIntegrator(C, f, h)
        for g in graphs:
            v = integ(g)
            if not v.is_zero():
                bad.append((graph_key(g), idx, v))
    return bad
