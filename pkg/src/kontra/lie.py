"""Lie algebras by structure constants and the induced linear Poisson tensor.

Convention: ``[X_i, X_j] = sum_k C^k_ij X_k`` with 1-based indices in the
public API.  Internally ``C[k][i][j]`` is a dense, 0-based nested list of
exact rationals.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import JacobiViolation, NotNilpotent
from .symbolic import Polynomial, as_rational

# --------------------------------------------------------------------------
# small exact linear algebra


def _rank(rows: List[List[Fraction]]) -> int:
    return len(_echelon(rows))


def _echelon(rows):
    """Row echelon basis of the span of ``rows`` (list of lists of rationals)."""
    basis = []  # list of (pivot, row)
    for r in rows:
        r = [Fraction(x) for x in r]
        for piv, b in basis:
            if r[piv]:
                f = r[piv] / b[piv]
                r = [x - f * y for x, y in zip(r, b)]
        piv = next((i for i, x in enumerate(r) if x), None)
        if piv is not None:
            basis.append((piv, r))
    return [b for _, b in basis]


def _in_span(v, echelon_rows) -> bool:
    return _rank(echelon_rows + [v]) == len(echelon_rows)


def _inverse(m: List[List[Fraction]]) -> List[List[Fraction]]:
    n = len(m)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            raise ValueError("matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [x / p for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def _tidy(q):
    q = Fraction(q)
    return q.numerator if q.denominator == 1 else q


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StructureConstants:
    """Validated structure constants (antisymmetric, Jacobi)."""

    dim: int
    C: Tuple[Tuple[Tuple[object, ...], ...], ...]  # C[k][i][j], 0-based
    name: str = ""

    def __call__(self, k: int, i: int, j: int):
        """``C^k_ij`` with 1-based indices."""
        return self.C[k - 1][i - 1][j - 1]

    def bracket(self, u: Sequence, v: Sequence) -> List:
        """Bracket of two vectors given by coordinates in the basis X_1..X_d."""
        d = self.dim
        out = [0] * d
        for i in range(d):
            if not u[i]:
                continue
            for j in range(d):
                if not v[j]:
                    continue
                uv = u[i] * v[j]
                for k in range(d):
                    c = self.C[k][i][j]
                    if c:
                        out[k] += c * uv
        return [_tidy(x) for x in out]

    def nonzero(self):
        """Yield ``(k, i, j, C^k_ij)`` 1-based for every nonzero constant."""
        for k, plane in enumerate(self.C):
            for i, row in enumerate(plane):
                for j, c in enumerate(row):
                    if c:
                        yield k + 1, i + 1, j + 1, c

    def brackets(self) -> Dict[Tuple[int, int], Dict[int, object]]:
        out: dict = {}
        for k, i, j, c in self.nonzero():
            if i < j:
                out.setdefault((i, j), {})[k] = c
        return out

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "brackets": [
                {"i": i, "j": j, "coeffs": {str(k): str(c) for k, c in sorted(coeffs.items())}}
                for (i, j), coeffs in sorted(self.brackets().items())
            ],
        }

    def transform(self, P: Sequence[Sequence]) -> "StructureConstants":
        """Constants in the basis ``Y_j = sum_i P[i][j] X_i`` (columns are new basis vectors)."""
        d = self.dim
        P = [[Fraction(x) for x in row] for row in P]
        Pinv = _inverse(P)
        cols = [[P[i][j] for i in range(d)] for j in range(d)]
        new = [[[0] * d for _ in range(d)] for _ in range(d)]
        for i in range(d):
            for j in range(d):
                v = self.bracket(cols[i], cols[j])
                for r in range(d):
                    new[r][i][j] = _tidy(sum(Pinv[r][k] * v[k] for k in range(d)))
        return StructureConstants(d, _freeze(new), self.name)


def _freeze(C):
    return tuple(tuple(tuple(row) for row in plane) for plane in C)


def _dense_from_brackets(dim: int, brackets: Dict[Tuple[int, int], Dict[int, object]]):
    C = [[[0] * dim for _ in range(dim)] for _ in range(dim)]
    for (i, j), coeffs in brackets.items():
        if not (1 <= i <= dim and 1 <= j <= dim):
            raise ValueError(f"bracket indices ({i},{j}) out of range")
        if i == j:
            if any(as_rational(c) != 0 for c in coeffs.values()):
                raise ValueError(f"[X{i},X{i}] must vanish")
            continue
        for k, c in coeffs.items():
            k = int(k)
            if not 1 <= k <= dim:
                raise ValueError(f"bracket coefficient index {k} out of range")
            c = as_rational(c)
            prev = C[k - 1][i - 1][j - 1]
            if prev and prev != c:
                raise ValueError(f"conflicting values for C^{k}_{i}{j}")
            C[k - 1][i - 1][j - 1] = c
            C[k - 1][j - 1][i - 1] = -c
    return C


def jacobi_defect(C, i: int, j: int, l: int) -> List:
    """Coordinates of ``[X_i,[X_j,X_l]] + [X_j,[X_l,X_i]] + [X_l,[X_i,X_j]]`` (0-based args)."""
    d = len(C)
    out = []
    for m in range(d):
        s = 0
        for k in range(d):
            s += C[k][j][l] * C[m][i][k] + C[k][l][i] * C[m][j][k] + C[k][i][j] * C[m][l][k]
        out.append(_tidy(s))
    return out


def validate_jacobi(raw, dim: int | None = None, name: str = "") -> StructureConstants:
    """Validate raw constants and return :class:`StructureConstants`.

    ``raw`` is either a dense nested sequence ``raw[k][i][j]`` (0-based) or a
    mapping ``{(i, j): {k: c}}`` of 1-based brackets, completed antisymmetrically.
    Raises :class:`JacobiViolation` at the first failing triple ``i<j<l``.
    """
    if isinstance(raw, dict):
        if dim is None:
            dim = max((max(i, j, *map(int, cs)) for (i, j), cs in raw.items()), default=1)
        C = _dense_from_brackets(dim, raw)
    else:
        C = [[[as_rational(c) for c in row] for row in plane] for plane in raw]
        dim = len(C)
        for k in range(dim):
            for i in range(dim):
                for j in range(dim):
                    if C[k][i][j] != -C[k][j][i]:
                        raise ValueError(f"constants are not antisymmetric at C^{k + 1}_{i + 1}{j + 1}")
    for i, j, l in itertools.combinations(range(dim), 3):
        defect = jacobi_defect(C, i, j, l)
        if any(defect):
            raise JacobiViolation((i + 1, j + 1, l + 1), defect)
    return StructureConstants(dim, _freeze(C), name)


def from_json(obj) -> StructureConstants:
    if isinstance(obj, (str, Path)):
        obj = json.loads(Path(obj).read_text())
    dim = int(obj["dim"])
    brackets = {}
    for b in obj.get("brackets", []):
        key = (int(b["i"]), int(b["j"]))
        brackets.setdefault(key, {}).update({int(k): v for k, v in b["coeffs"].items()})
    return validate_jacobi(brackets, dim, name=obj.get("name", ""))


# --------------------------------------------------------------------------
# catalog


def abelian(d: int) -> StructureConstants:
    return validate_jacobi({}, d, name=f"abelian:{d}")


def heisenberg3() -> StructureConstants:
    return validate_jacobi({(2, 3): {1: 1}}, 3, name="heisenberg3")


def heisenberg5() -> StructureConstants:
    return validate_jacobi({(2, 4): {1: 1}, (3, 5): {1: 1}}, 5, name="heisenberg5")


def ut4() -> StructureConstants:
    """Strictly upper-triangular 4x4 matrices, basis E12, E13, E14, E23, E24, E34."""
    E12, E13, E14, E23, E24, E34 = range(1, 7)
    return validate_jacobi(
        {(E12, E23): {E13: 1}, (E12, E24): {E14: 1}, (E13, E34): {E14: 1}, (E23, E34): {E24: 1}},
        6,
        name="ut4",
    )


def filiform4() -> StructureConstants:
    return validate_jacobi({(1, 2): {3: 1}, (1, 3): {4: 1}}, 4, name="filiform4")


def aff1() -> StructureConstants:
    return validate_jacobi({(1, 2): {2: 1}}, 2, name="aff1")


def so3() -> StructureConstants:
    return validate_jacobi({(1, 2): {3: 1}, (2, 3): {1: 1}, (3, 1): {2: 1}}, 3, name="so3")


CATALOG = {
    "heisenberg3": heisenberg3,
    "heisenberg5": heisenberg5,
    "ut4": ut4,
    "filiform4": filiform4,
    "aff1": aff1,
    "so3": so3,
}

NILPOTENT_NAMES = ("abelian:3", "heisenberg3", "heisenberg5", "ut4", "filiform4")


def algebra(name: str) -> StructureConstants:
    """Look up a catalog algebra (``abelian:<d>`` included) or load a JSON file path."""
    if name.startswith("abelian:"):
        try:
            d = int(name.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad abelian dimension in {name!r}") from None
        return abelian(d)
    if name in CATALOG:
        return CATALOG[name]()
    path = Path(name)
    if path.suffix == ".json" and path.exists():
        return from_json(path)
    raise KeyError(f"unknown algebra {name!r}; choose from abelian:<d>, {', '.join(CATALOG)}")


# --------------------------------------------------------------------------
# structure checks


def lower_central_series(C: StructureConstants) -> List[List[List[Fraction]]]:
    """Echelon bases of ``g^1 = g, g^2 = [g, g], ...`` until the series stabilizes."""
    d = C.dim
    std = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
    series = [_echelon(std)]
    while True:
        prev = series[-1]
        nxt = _echelon([C.bracket(x, v) for x in std for v in prev])
        if len(nxt) == len(prev):
            return series
        series.append(nxt)
        if not nxt:
            return series


def nilpotency_class(C: StructureConstants) -> Optional[int]:
    """Number of steps ``c`` with ``g^{c+1} = 0``; ``None`` if not nilpotent.

    Abelian algebras have class 1, Heisenberg algebras class 2.
    """
    series = lower_central_series(C)
    if series[-1]:
        return None
    return len(series) - 1


@dataclass(frozen=True)
class UnimodularCheck:
    unimodular: bool
    j: Optional[int] = None
    value: object = 0

    def __bool__(self):
        return self.unimodular


def is_unimodular(C: StructureConstants) -> UnimodularCheck:
    """``sum_i C^i_ij == 0`` for all ``j``; otherwise the first offending ``j`` and its sum."""
    d = C.dim
    for j in range(d):
        s = _tidy(sum(C.C[i][i][j] for i in range(d)))
        if s:
            return UnimodularCheck(False, j + 1, s)
    return UnimodularCheck(True)


def divergence(C: StructureConstants, i: int):
    """``sum_j C^j_ij`` (1-based ``i``)."""
    return _tidy(sum(C.C[j][i - 1][j] for j in range(C.dim)))


def is_adapted(C: StructureConstants) -> bool:
    """True iff ``C^r_ij = 0`` whenever ``r >= min(i, j)``."""
    return all(k < min(i, j) for k, i, j, _ in C.nonzero())


def varadarajan_basis(C: StructureConstants) -> List[List[Fraction]]:
    """Basis change ``P`` (columns = new basis vectors) adapted to the lower central series.

    The deepest layer receives the smallest indices, so the transformed
    constants satisfy ``C^r_ij = 0`` for ``r >= min(i, j)``.
    """
    series = lower_central_series(C)
    if series[-1]:
        raise NotNilpotent(f"{C.name or 'algebra'} is not nilpotent")
    d = C.dim
    std = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
    chosen: List[List[Fraction]] = []
    for layer in reversed(series[:-1]):
        # prefer standard basis vectors lying in the layer, then the layer's own spanning vectors
        candidates = [v for v in std if _in_span(v, layer)] + layer
        for v in candidates:
            if len(chosen) == len(layer):
                break
            if not chosen or not _in_span(v, _echelon(chosen)):
                chosen.append(v)
    P = [[chosen[j][i] for j in range(d)] for i in range(d)]
    if not is_adapted(C.transform(P)):
        raise AssertionError("constructed basis is not adapted")  # pragma: no cover
    return [[_tidy(x) for x in row] for row in P]


def in_varadarajan_basis(C: StructureConstants) -> StructureConstants:
    return C.transform(varadarajan_basis(C))


def ad_matrix(C: StructureConstants, i: int) -> List[List]:
    """Matrix of ``ad X_i``: entry ``[a][b] = C^a_ib`` (0-based a, b; 1-based i)."""
    d = C.dim
    return [[C.C[a][i - 1][b] for b in range(d)] for a in range(d)]


def cyclic_product(C: StructureConstants, m: int, probes: Sequence[int]):
    """``sum_j C^{j_m}_{i_1 j_1} C^{j_1}_{i_2 j_2} ... C^{j_{m-1}}_{i_m j_m}`` for probes ``i_1..i_m``.

    Equals ``tr(ad X_{i_1} ... ad X_{i_m})``.
    """
    if m < 2:
        raise ValueError("cyclic products need m >= 2")
    if len(probes) != m:
        raise ValueError(f"expected {m} probe indices, got {len(probes)}")
    d = C.dim
    if any(not 1 <= i <= d for i in probes):
        raise ValueError(f"probe indices must lie in 1..{d}")
    M = None
    for i in probes:
        A = ad_matrix(C, i)
        if M is None:
            M = A
        else:
            M = [[sum(M[r][k] * A[k][c] for k in range(d)) for c in range(d)] for r in range(d)]
    return _tidy(sum(M[r][r] for r in range(d)))


# --------------------------------------------------------------------------


class LinearPoissonTensor:
    """``pi_ij = sum_k x_k C^k_ij`` as a matrix of degree-1 polynomials."""

    def __init__(self, C: StructureConstants):
        self.C = C
        self.dim = d = C.dim
        self.matrix = [[Polynomial(d) for _ in range(d)] for _ in range(d)]
        # support[(i, j)] = {k: C^k_ij} for nonzero entries, 1-based
        self.support: Dict[Tuple[int, int], Dict[int, object]] = {}
        for k, i, j, c in C.nonzero():
            self.support.setdefault((i, j), {})[k] = c
        for (i, j), coeffs in self.support.items():
            p = Polynomial(d)
            for k, c in coeffs.items():
                p = p + Polynomial.coordinate(d, k).scale(c)
            self.matrix[i - 1][j - 1] = p

    def __call__(self, i: int, j: int) -> Polynomial:
        return self.matrix[i - 1][j - 1]

    def bracket(self, f, g):
        """``{f, g} = sum_{i,j} pi_ij d_i f d_j g`` for polynomials or Gaussian polynomials."""
        total = None
        for (i, j) in self.support:
            term = self.matrix[i - 1][j - 1] * f.diff(i) * g.diff(j)
            total = term if total is None else total + term
        if total is None:
            return (f * g) * 0
        return total


def poisson_tensor(C: StructureConstants) -> LinearPoissonTensor:
    return LinearPoissonTensor(C)
