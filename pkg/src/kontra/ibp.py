"""Integration-by-parts rewriting of formal graph integrands.

A :class:`TermExpression` stands for

    scalar * sum over indices of  prod C^{u}_{a b} * prod x_v * d_F f * d_G g

integrated over R^d, where every summation symbol occurs exactly twice.  A
graph vertex ``k`` contributes ``x_{a_k} C^{a_k}_{i_k j_k}``; an edge into
vertex ``t`` replaces ``x_{a_t}`` by the Kronecker delta, so ``C_t`` takes the
edge index as its upper slot.

The rewrite moves one derivative off ``g`` (``int u d_j v = -int (d_j u) v``),
choosing a vertex whose ``pi`` factor is underived and whose two edges land on
``f`` and ``g``.  Children are classified as

* ``antisymmetry``: two lower slots of one ``C`` both differentiate ``f`` (or ``g``);
* ``divergence``: a ``C`` contracts its upper slot with its own lower slot;
* ``loop``: the ``C`` factors contain a directed cycle of contractions.

The first class vanishes identically, the second under unimodularity, the
third for nilpotent algebras in an adapted basis.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import MalformedTerm
from .graphs import L, R, AdmissibleGraph
from .lie import StructureConstants
from .symbolic import ExactIntegral, GaussianPolynomial, Polynomial, differentiate_multi, integrate_gaussian

Slot = object  # str summation symbol or fixed int index


@dataclass(frozen=True)
class TermExpression:
    scalar: object
    cfactors: Tuple[Tuple[Slot, Slot, Slot], ...]  # (upper, lower1, lower2)
    xfactor: Tuple[Slot, ...]
    fderivs: Tuple[Slot, ...]
    gderivs: Tuple[Slot, ...]

    @property
    def n(self) -> int:
        return len(self.cfactors)

    @property
    def k(self) -> int:
        return len(self.fderivs) + len(self.gderivs)

    def symbols(self) -> Counter:
        cnt: Counter = Counter()
        for c in self.cfactors:
            cnt.update(s for s in c if isinstance(s, str))
        for group in (self.xfactor, self.fderivs, self.gderivs):
            cnt.update(s for s in group if isinstance(s, str))
        return cnt

    def validate(self) -> "TermExpression":
        bad = {s: m for s, m in self.symbols().items() if m != 2}
        if bad:
            raise MalformedTerm(f"summation symbols must occur exactly twice: {bad}")
        return self

    def to_json(self) -> dict:
        return {
            "scalar": str(self.scalar),
            "C": [list(map(str, c)) for c in self.cfactors],
            "x": list(map(str, self.xfactor)),
            "f": list(map(str, self.fderivs)),
            "g": list(map(str, self.gderivs)),
        }

    def __str__(self):
        cs = "".join(f"C^{u}_({a},{b})" for u, a, b in self.cfactors)
        xs = "".join(f"x_{v}" for v in self.xfactor)
        fd = "".join(f"d{s}" for s in self.fderivs)
        gd = "".join(f"d{s}" for s in self.gderivs)
        return f"{self.scalar}*{cs}{xs}*[{fd}f]*[{gd}g]"


def from_graph(g: AdmissibleGraph, scalar=1) -> Optional[TermExpression]:
    """Formal integrand of ``B_g(f, g)``; ``None`` when a vertex is hit twice (term vanishes)."""
    upper = {k: f"a{k}" for k in range(1, g.n + 1)}
    lower = {k: (f"i{k}", f"j{k}") for k in range(1, g.n + 1)}
    hit = {}
    fd, gd = [], []
    for k, slot, t in g.targets():
        sym = lower[k][slot]
        if t == L:
            fd.append(sym)
        elif t == R:
            gd.append(sym)
        else:
            if t in hit:
                return None
            hit[t] = sym
    cf = []
    xs = []
    for k in range(1, g.n + 1):
        u = hit.get(k, upper[k])
        cf.append((u, *lower[k]))
        if k not in hit:
            xs.append(upper[k])
    return TermExpression(scalar, tuple(cf), tuple(xs), tuple(fd), tuple(gd)).validate()


# --------------------------------------------------------------------------
# classification


def is_antisymmetry_killed(t: TermExpression) -> bool:
    fset, gset = Counter(t.fderivs), Counter(t.gderivs)
    for _, a, b in t.cfactors:
        if a == b:
            return True
        if isinstance(a, str) and isinstance(b, str):
            if (fset[a] and fset[b]) or (gset[a] and gset[b]):
                return True
    return False


def has_divergence(t: TermExpression) -> bool:
    return any(isinstance(u, str) and u in (a, b) for u, a, b in t.cfactors)


def contraction_edges(t: TermExpression) -> List[Tuple[int, int]]:
    """Directed edges ``p -> q`` when a lower slot of ``C_p`` is the upper slot of ``C_q``."""
    uppers = {}
    for q, (u, _, _) in enumerate(t.cfactors):
        if isinstance(u, str):
            uppers.setdefault(u, []).append(q)
    edges = []
    for p, (_, a, b) in enumerate(t.cfactors):
        for s in (a, b):
            for q in uppers.get(s, ()):
                if q != p:
                    edges.append((p, q))
    return edges


def has_loop(t: TermExpression) -> bool:
    succ: Dict[int, list] = {}
    for p, q in contraction_edges(t):
        succ.setdefault(p, []).append(q)
    state: Dict[int, int] = {}

    def visit(v):
        state[v] = 1
        for w in succ.get(v, ()):
            if state.get(w) == 1 or (w not in state and visit(w)):
                return True
        state[v] = 2
        return False

    return any(v not in state and visit(v) for v in range(len(t.cfactors)))


def classify(t: TermExpression, unimodular: bool, nilpotent: bool) -> Optional[str]:
    if is_antisymmetry_killed(t):
        return "antisymmetry"
    if unimodular and has_divergence(t):
        return "divergence"
    if nilpotent and has_loop(t):
        return "loop"
    return None


# --------------------------------------------------------------------------
# rewriting


def _find_pivot(t: TermExpression):
    """Vertex ``p`` with ``x_u`` present and lower slots on ``f`` and ``g``; returns ``(p, f_sym, g_sym)``."""
    xset = set(t.xfactor)
    fset, gset = set(t.fderivs), set(t.gderivs)
    for p, (u, a, b) in enumerate(t.cfactors):
        if u not in xset:
            continue
        if a in fset and b in gset:
            return p, a, b
        if b in fset and a in gset:
            return p, b, a
    return None


def _rename(t: TermExpression, old, new, drop_x) -> TermExpression:
    xs = list(t.xfactor)
    xs.remove(drop_x)
    cf = tuple(tuple(new if s == old else s for s in c) for c in t.cfactors)
    xs = tuple(new if s == old else s for s in xs)
    return replace(t, cfactors=cf, xfactor=xs)


STRATEGIES = ("pivot", "exhaustive")


def ibp_step(t: TermExpression, strategy: str = "pivot") -> Optional[List[TermExpression]]:
    """Children of one integration by parts, or ``None`` when no rule applies.

    ``pivot`` only moves a ``g`` derivative whose vertex is underived and also
    differentiates ``f``; ``exhaustive`` falls back to moving any ``g``
    derivative.  Both are the same identity, only the selection differs.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    pivot = _find_pivot(t)
    if pivot is not None:
        j = pivot[2]
    elif strategy == "exhaustive" and t.gderivs:
        j = t.gderivs[0]
    else:
        return None
    gd = list(t.gderivs)
    gd.remove(j)
    base = replace(t, scalar=-t.scalar, gderivs=tuple(gd))
    children = []
    # d_j on each x factor: x_v -> delta_{j v}
    for v in t.xfactor:
        children.append(_rename(base, v, j, v))
    # d_j on the f factor
    children.append(replace(base, fderivs=t.fderivs + (j,)))
    return children


@dataclass
class Step:
    parent: TermExpression
    children: List[Tuple[Optional[str], TermExpression]]

    def to_json(self) -> dict:
        return {
            "parent": self.parent.to_json(),
            "children": [{"class": c or "kept", "term": ch.to_json()} for c, ch in self.children],
        }


@dataclass
class ReductionReport:
    inputs: List[TermExpression]
    assumptions: Dict[str, bool]
    strategy: str = "pivot"
    steps: List[Step] = field(default_factory=list)
    residual: Dict[str, List[TermExpression]] = field(
        default_factory=lambda: {"antisymmetry": [], "divergence": [], "loop": [], "irreducible": []}
    )

    @property
    def verdict(self) -> str:
        return "vanishes" if not self.residual["irreducible"] else "residual"

    def to_json(self) -> dict:
        return {
            "assumptions": self.assumptions,
            "strategy": self.strategy,
            "inputs": [t.to_json() for t in self.inputs],
            "steps": [s.to_json() for s in self.steps],
            "residual": {k: [t.to_json() for t in v] for k, v in self.residual.items()},
            "counts": {k: len(v) for k, v in self.residual.items()},
            "verdict": self.verdict,
        }


def ibp_reduce(terms: Sequence[TermExpression], unimodular: bool = False, nilpotent: bool = False,
               strategy: str = "pivot", max_steps: int = 100000) -> ReductionReport:
    """Rewrite until no pivot remains; killed children are dropped and recorded by class.

    Every step strictly lowers the number of ``g`` derivatives, so the loop terminates.
    """
    terms = [t.validate() for t in terms]
    report = ReductionReport(list(terms), {"unimodular": unimodular, "nilpotent": nilpotent}, strategy)
    work = []
    for t in terms:
        cls = classify(t, unimodular, nilpotent)
        if cls:
            report.residual[cls].append(t)
        else:
            work.append(t)
    while work:
        if len(report.steps) >= max_steps:
            raise RuntimeError("IBP reduction did not terminate within max_steps")
        t = work.pop()
        children = ibp_step(t, strategy)
        if children is None:
            report.residual["irreducible"].append(t)
            continue
        recorded = []
        for ch in children:
            cls = classify(ch, unimodular, nilpotent)
            recorded.append((cls, ch))
            if cls:
                report.residual[cls].append(ch)
            else:
                work.append(ch)
        report.steps.append(Step(t, recorded))
    return report


# --------------------------------------------------------------------------
# concrete evaluation


def evaluate_term(t: TermExpression, C: StructureConstants, f: GaussianPolynomial, g: GaussianPolynomial) -> ExactIntegral:
    """Exact integral of the term for concrete constants and test functions."""
    t.validate()
    d = C.dim
    nonzero = list(C.nonzero())
    syms = sorted(t.symbols())
    # bind symbols through the C factors first (sparse), then the rest densely
    grouped: Dict[tuple, object] = {}

    def bind_c(idx, env, scalar):
        if idx == len(t.cfactors):
            free = [s for s in syms if s not in env]
            for vals in itertools.product(range(1, d + 1), repeat=len(free)):
                full = dict(env)
                full.update(zip(free, vals))
                get = lambda s: full[s] if isinstance(s, str) else s  # noqa: E731
                key = (
                    tuple(sorted(get(s) for s in t.xfactor)),
                    tuple(sorted(get(s) for s in t.fderivs)),
                    tuple(sorted(get(s) for s in t.gderivs)),
                )
                grouped[key] = grouped.get(key, 0) + scalar
            return
        slots = t.cfactors[idx]
        for k, i, j, c in nonzero:
            trial = dict(env)
            ok = True
            for s, v in zip(slots, (k, i, j)):
                if isinstance(s, str):
                    if trial.setdefault(s, v) != v:
                        ok = False
                        break
                elif s != v:
                    ok = False
                    break
            if ok:
                bind_c(idx + 1, trial, scalar * c)

    bind_c(0, {}, t.scalar)
    total = Polynomial(d)
    for (xs, fa, ga), s in grouped.items():
        if s == 0:
            continue
        mono = [0] * d
        for v in xs:
            mono[v - 1] += 1
        prod = differentiate_multi(f, fa).p * differentiate_multi(g, ga).p
        total = total + (prod * Polynomial(d, {tuple(mono): 1})).scale(s)
    c = f.c + g.c
    if total.is_zero():
        return ExactIntegral.zero()
    return integrate_gaussian(GaussianPolynomial(total, c))


def evaluate_terms(terms, C, f, g) -> ExactIntegral:
    total = ExactIntegral.zero()
    for t in terms:
        total = total + evaluate_term(t, C, f, g)
    return total


def certify_step(step: Step, C, f, g) -> bool:
    """Parent integral equals the sum of all children (killed ones included)."""
    return evaluate_term(step.parent, C, f, g) == evaluate_terms([ch for _, ch in step.children], C, f, g)
